//! Application solvers and the command-line front end.
//!
//! Three applications ride on the core engine: envy-free cake division with
//! matroid-constrained guests, planar colorful Caratheodory, and a built-in
//! demo that replays the four-vertex worked example step by step against its
//! embedded golden trace.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use thiserror::Error;

use crate::cover::{
    cake_hungry_violation, CoverError, CoverOracle, CoverSpec, ExplicitEntry, Halfspace,
    KkmSetEntry, PiecewiseDensity, ValidationReport,
};
use crate::geometry::{
    conv_contains, GeometryError, HullCertificate, Point, Polytope, PolytopeSpec,
};
use crate::matroid::{Element, Matroid, MatroidError, MatroidSpec, Subset};
use crate::ratio::{format_rational, parse_rational, serde_rational, serde_rational_vec};
use crate::simplicial::Triangulation;
use crate::solver::{
    bad_faces, eliminate_bad_face, init_labeling, solve, solve_detailed, SolveError,
    SolveOptions, TraceStep, Witness,
};

#[derive(Debug, Error)]
pub enum AppError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid instance at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("instance is not solvable: {0}")]
    BadInstance(String),
    #[error("the guests are not hungry for this matroid: complement {complement:?} starves at partition {partition:?}")]
    NotHungry {
        complement: Vec<usize>,
        partition: Vec<String>,
    },
    #[error("cover validation failed")]
    CoverInvalid(ValidationReport),
    #[error("hypothesis fails: the origin is not in the hull of {points:?}")]
    HypothesisFailed { points: Vec<usize> },
    #[error("could not extract an exact answer after {attempts} refinement attempts")]
    ExtractionFailed { attempts: usize },
    #[error(transparent)]
    Matroid(#[from] MatroidError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

// ---------------------------------------------------------------------------
// Cake division.

/// Parsed cake instance: guests with piecewise densities, a piece count, and
/// a matroid on the guests whose rank equals the piece count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CakeInstance {
    pub guests: Vec<GuestSpec>,
    pub pieces: usize,
    pub matroid: MatroidSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GuestSpec {
    pub density: Vec<DensitySegmentSpec>,
}

/// One density segment; constant when only `value` is given.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DensitySegmentSpec {
    Constant {
        #[serde(with = "serde_rational")]
        from: BigRational,
        #[serde(with = "serde_rational")]
        to: BigRational,
        #[serde(with = "serde_rational")]
        value: BigRational,
    },
    Linear {
        #[serde(with = "serde_rational")]
        from: BigRational,
        #[serde(with = "serde_rational")]
        to: BigRational,
        #[serde(with = "serde_rational")]
        start_value: BigRational,
        #[serde(with = "serde_rational")]
        end_value: BigRational,
    },
}

impl GuestSpec {
    pub fn to_density(&self) -> PiecewiseDensity {
        let segments = self
            .density
            .iter()
            .map(|s| match s {
                DensitySegmentSpec::Constant { from, to, value } => {
                    crate::cover::DensitySegment {
                        from: from.clone(),
                        to: to.clone(),
                        start_value: value.clone(),
                        end_value: value.clone(),
                    }
                }
                DensitySegmentSpec::Linear {
                    from,
                    to,
                    start_value,
                    end_value,
                } => crate::cover::DensitySegment {
                    from: from.clone(),
                    to: to.clone(),
                    start_value: start_value.clone(),
                    end_value: end_value.clone(),
                },
            })
            .collect();
        PiecewiseDensity { segments }
    }
}

/// An envy-free (up to `envy_gap`) division: cut points, a basis of guests
/// assigned distinct pieces, and the exact envy gap at those cuts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Allocation {
    #[serde(with = "serde_rational_vec")]
    pub cut_points: Vec<BigRational>,
    /// `(guest, piece)` pairs; the guests form a basis of the matroid.
    pub assignment: Vec<(usize, usize)>,
    #[serde(with = "serde_rational")]
    pub envy_gap: BigRational,
}

/// Solves a cake instance: checks hungriness and cover validity on a grid,
/// runs the engine at `delta / 4` (so the envy gap provably stays under
/// `pieces * max_density * delta`), and reads cuts off the witness simplex
/// center.
pub fn cake_solve(
    inst: &CakeInstance,
    delta: &BigRational,
    resolution: u32,
) -> Result<Allocation, AppError> {
    let matroid = Arc::new(Matroid::from_spec(&inst.matroid)?);
    let guests: Vec<PiecewiseDensity> = inst.guests.iter().map(GuestSpec::to_density).collect();
    if let Some((complement, partition)) =
        cake_hungry_violation(&guests, inst.pieces, &matroid, resolution)
    {
        return Err(AppError::NotHungry {
            complement,
            partition: partition.iter().map(format_rational).collect(),
        });
    }
    let cover = CoverOracle::cake(guests.clone(), inst.pieces, Arc::clone(&matroid))?;
    let report = cover.validate_mkomiya(resolution);
    if !report.pass {
        return Err(AppError::CoverInvalid(report));
    }

    let k = inst.pieces;
    let poly = Arc::clone(cover.polytope());
    let barycenter = poly.face_barycenter(poly.improper_face()).clone();
    let inner_delta = delta / BigRational::from_integer(4.into());
    let (witness, tri, lab) =
        solve_detailed(&cover, &barycenter, &inner_delta, &SolveOptions::default())?;

    let center = Point::barycenter(witness.simplex.iter().map(|&v| tri.coords_of(v)));
    let mut cut_points = Vec::with_capacity(k.saturating_sub(1));
    let mut acc = BigRational::zero();
    for len in &center.coords[..k - 1] {
        acc += len;
        cut_points.push(acc.clone());
    }

    let mut assignment: Vec<(usize, usize)> = witness
        .simplex
        .iter()
        .map(|&v| {
            let face = poly.face(lab.lambda(v));
            assert_eq!(face.dim, 0, "cake labels must be polytope vertices");
            (lab.f(v).0, face.verts[0])
        })
        .collect();
    assignment.sort_unstable();
    let pieces_assigned: BTreeSet<usize> = assignment.iter().map(|&(_, p)| p).collect();
    assert_eq!(pieces_assigned.len(), k, "pieces must be distinct");

    let mut envy_gap = BigRational::zero();
    for &(guest, piece) in &assignment {
        let values = crate::cover::piece_values(&guests[guest], &center.coords);
        let best = values.iter().max().unwrap();
        let gap = best - &values[piece];
        if gap > envy_gap {
            envy_gap = gap;
        }
    }
    Ok(Allocation {
        cut_points,
        assignment,
        envy_gap,
    })
}

// ---------------------------------------------------------------------------
// Planar colorful Caratheodory.

/// Planar instance: points (none at the origin) and a matroid on them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaratheodoryInstance {
    pub points: Vec<PointSpec>,
    pub matroid: MatroidSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointSpec(#[serde(with = "serde_rational_vec")] pub Vec<BigRational>);

/// An independent set whose hull contains the origin, with the exact
/// certificate (weights indexed by positions in the original point list).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaratheodoryAnswer {
    pub independent_set: Vec<usize>,
    pub certificate: HullCertificate,
}

/// Checks the covering hypothesis by brute force: every subset whose
/// complement has rank at most 2 must capture the origin in its hull.
pub fn caratheodory_hypothesis_holds(
    points: &[Point],
    matroid: &Matroid,
) -> Result<(), AppError> {
    let n = points.len();
    let origin = Point::origin(2);
    for mask in 0..(1u64 << n) {
        let inside = Subset(mask);
        if matroid.rank_unchecked(inside) > 2 {
            continue;
        }
        let g = matroid.ground_set().minus(inside);
        let pts: Vec<Point> = g.iter().map(|e| points[e.0].clone()).collect();
        if conv_contains(&pts, &origin)?.is_none() {
            return Err(AppError::HypothesisFailed {
                points: g.iter().map(|e| e.0).collect(),
            });
        }
    }
    Ok(())
}

const CARATHEODORY_ATTEMPTS: usize = 12;

/// Finds an independent set capturing the origin: builds the ray cover on an
/// inscribed 16-gon, solves at shrinking mesh sizes until the witness's
/// designated points all sit on rays, and recomputes the certificate exactly
/// on the original points.
pub fn caratheodory_solve(inst: &CaratheodoryInstance) -> Result<CaratheodoryAnswer, AppError> {
    let points: Vec<Point> = inst.points.iter().map(|p| Point::new(p.0.clone())).collect();
    if points.len() > 8 {
        return Err(AppError::BadInstance(
            "desk-scale limit: at most 8 points".into(),
        ));
    }
    if points.iter().any(|p| p.dim() != 2) {
        return Err(AppError::BadInstance("points must be planar".into()));
    }
    let matroid = Matroid::from_spec(&inst.matroid)?;
    if matroid.ground_size() != points.len() {
        return Err(AppError::BadInstance(
            "matroid ground set must index the points".into(),
        ));
    }
    caratheodory_hypothesis_holds(&points, &matroid)?;
    // The hypothesis rules out rank <= 2 (the empty complement would need
    // the origin in an empty hull), so truncation to 3 is well-defined.
    let rank = matroid.rank_full();
    assert!(rank >= 3);
    let truncated = if rank > 3 {
        Matroid::truncate(matroid, 3)?
    } else {
        matroid
    };
    let poly = Polytope::regular_polygon(16, &BigRational::one())?;
    let cover = CoverOracle::caratheodory(&points, poly, Arc::new(truncated))?;

    let origin = Point::origin(2);
    let mut delta = BigRational::new(1.into(), 8.into());
    let opts = SolveOptions::default();
    for _ in 0..CARATHEODORY_ATTEMPTS {
        let witness = solve(&cover, &origin, &delta, &opts)?;
        if let Some(answer) = extract_exact_answer(&witness, &cover, &points)? {
            return Ok(answer);
        }
        delta /= BigRational::from_integer(2.into());
    }
    Err(AppError::ExtractionFailed {
        attempts: CARATHEODORY_ATTEMPTS,
    })
}

/// Tries both exact extraction routes on a witness: the certificate route
/// (all positively weighted labels must be ray hits, so designated points
/// are positive multiples of input points) and the basis triple itself.
fn extract_exact_answer(
    witness: &Witness,
    cover: &CoverOracle,
    points: &[Point],
) -> Result<Option<CaratheodoryAnswer>, AppError> {
    let origin = Point::origin(2);
    let label_of = |v: u32| -> (usize, usize) {
        let slot = witness
            .simplex
            .iter()
            .position(|&u| u == v)
            .expect("certificate vertices lie on the witness simplex");
        (witness.basis[slot], witness.faces[slot])
    };
    let positives: Vec<(u32, &BigRational)> = witness
        .certificate
        .weights
        .iter()
        .filter(|(_, wt)| wt.is_positive())
        .map(|(v, wt)| (*v, wt))
        .collect();
    let all_rays = positives.iter().all(|&(v, _)| {
        let (w, sigma) = label_of(v);
        cover.is_ray_hit(Element(w), crate::geometry::FaceId(sigma))
    });
    if all_rays {
        let mut support: BTreeSet<usize> = BTreeSet::new();
        for &(v, _) in &positives {
            support.insert(label_of(v).0);
        }
        let set: Vec<usize> = support.into_iter().collect();
        if let Some(answer) = certify_on_originals(&set, points)? {
            return Ok(Some(answer));
        }
    }
    // Fallback: the witness basis itself may already capture the origin.
    let mut basis = witness.basis.clone();
    basis.sort_unstable();
    basis.dedup();
    if let Some(answer) = certify_on_originals(&basis, points)? {
        return Ok(Some(answer));
    }
    let _ = origin;
    Ok(None)
}

fn certify_on_originals(
    set: &[usize],
    points: &[Point],
) -> Result<Option<CaratheodoryAnswer>, AppError> {
    let origin = Point::origin(2);
    let pts: Vec<Point> = set.iter().map(|&i| points[i].clone()).collect();
    match conv_contains(&pts, &origin)? {
        Some(cert) => {
            // Keep only the points the certificate actually uses, remapped
            // to original indices.
            let used: Vec<usize> = cert
                .weights
                .iter()
                .filter(|(_, w)| w.is_positive())
                .map(|(i, _)| set[*i])
                .collect();
            let weights = cert
                .weights
                .iter()
                .filter(|(_, w)| w.is_positive())
                .map(|(i, w)| (set[*i], w.clone()))
                .collect();
            Ok(Some(CaratheodoryAnswer {
                independent_set: used,
                certificate: HullCertificate { weights },
            }))
        }
        None => Ok(None),
    }
}

// ---------------------------------------------------------------------------
// Gale-style two-cover instances on the segment.

/// Builds a solver instance encoding `thresholds.len()` KKM covers of the
/// segment through a partition matroid: cover `j` prefers the right piece on
/// `{x1 >= a_j}` and the left piece on `{x1 <= a_j}`; element `2j + i`
/// stands for (piece `i`, cover `j`).
pub fn gale_instance(thresholds: &[BigRational]) -> InstanceDoc {
    let k = 2usize;
    let mut sets = Vec::new();
    for (j, a) in thresholds.iter().enumerate() {
        for i in 0..k {
            let sign = if i == 0 {
                BigRational::one()
            } else {
                -BigRational::one()
            };
            let offset = if i == 0 { a.clone() } else { -a.clone() };
            sets.push(KkmSetEntry {
                w: k * j + i,
                vertex: i,
                halfspaces: vec![Halfspace {
                    normal: vec![sign, BigRational::zero()],
                    offset,
                }],
            });
        }
    }
    let parts: Vec<Vec<usize>> = (0..thresholds.len())
        .map(|j| vec![k * j, k * j + 1])
        .collect();
    InstanceDoc {
        polytope: PolytopeSpec::Simplex { k: 2 },
        matroid: MatroidSpec::Partition { parts },
        cover: CoverSpec::KkmVertex { sets },
    }
}

// ---------------------------------------------------------------------------
// The worked example: a kite quadrilateral, a rank-3 realizable matroid, and
// the cover that reproduces the published label choices.

/// Everything needed to replay the worked example.
pub struct DemoFixture {
    pub poly: Arc<Polytope>,
    pub matroid: Arc<Matroid>,
    pub cover: CoverOracle,
    pub tri: Triangulation,
}

/// The four-vertex kite with triangles `{a,b,c}` and `{a,b,d}`, labeled by
/// the rank-3 matroid of vectors (1,1,0), (-1,1,0), (0,1,0), (0,0,1).
pub fn demo_fixture() -> DemoFixture {
    let a = Point::parse(&["-2", "0"]);
    let b = Point::parse(&["2", "0"]);
    let c = Point::parse(&["0", "7/2"]);
    let d = Point::parse(&["0", "-7/2"]);
    let poly = Polytope::explicit(vec![a.clone(), b.clone(), c.clone(), d.clone()]).unwrap();
    let one = BigRational::one;
    let z = BigRational::zero;
    let matroid = Arc::new(
        Matroid::linear(&[
            vec![one(), one(), z()],
            vec![-one(), one(), z()],
            vec![z(), one(), z()],
            vec![z(), z(), one()],
        ])
        .unwrap(),
    );

    // Halfspace conjunction pinning a single point.
    let pin = |p: &Point| -> Vec<Halfspace> {
        let mut hs = Vec::new();
        for i in 0..2 {
            for sign in [1i64, -1] {
                let s = BigRational::from_integer(sign.into());
                let mut normal = vec![z(), z()];
                normal[i] = s.clone();
                hs.push(Halfspace {
                    normal,
                    offset: &s * &p.coords[i],
                });
            }
        }
        hs
    };
    let origin = Point::origin(2);
    let improper = poly.improper_face().0;
    let entries = vec![
        ExplicitEntry {
            w: 0,
            face: poly.vertex_face(0).0,
            halfspaces: pin(&a),
            y: None,
        },
        ExplicitEntry {
            w: 0,
            face: poly.vertex_face(1).0,
            halfspaces: pin(&b),
            y: None,
        },
        ExplicitEntry {
            w: 1,
            face: poly.vertex_face(2).0,
            halfspaces: pin(&c),
            y: None,
        },
        ExplicitEntry {
            w: 2,
            face: poly.vertex_face(3).0,
            halfspaces: pin(&d),
            y: None,
        },
        ExplicitEntry {
            w: 2,
            face: improper,
            halfspaces: pin(&origin),
            y: Some(origin.clone()),
        },
        ExplicitEntry {
            w: 3,
            face: improper,
            halfspaces: vec![],
            y: None,
        },
    ];
    let cover =
        CoverOracle::explicit(Arc::clone(&poly), Arc::clone(&matroid), &entries).unwrap();
    let tri = Triangulation::explicit(
        &poly,
        vec![a, b, c, d],
        vec![vec![0, 1, 2], vec![0, 1, 3]],
    )
    .unwrap();
    DemoFixture {
        poly,
        matroid,
        cover,
        tri,
    }
}

/// Outcome of the demo run: the intermediate triangulation states and the
/// comparison against the embedded golden trace.
#[derive(Debug, Serialize)]
pub struct DemoReport {
    pub pass: bool,
    pub mismatches: Vec<String>,
    pub initial_bad_faces: Vec<Vec<u32>>,
    pub setup_queue: Vec<Vec<u32>>,
    pub iterations: Vec<TraceStep>,
    pub final_vertices: usize,
    pub final_triangles: usize,
    pub barycenter_labels: Vec<usize>,
    pub states: Vec<serde_json::Value>,
}

/// Replays the worked example and diffs it against the golden expectations:
/// one bad edge `{a,b}`, a three-face setup queue, three loop iterations,
/// eight final vertices with barycenter labels (2, 3, 3, 3), and no bad
/// faces at exit.
pub fn run_demo() -> Result<DemoReport, AppError> {
    let fx = demo_fixture();
    let improper = fx.poly.improper_face().0;
    let mut states = vec![fx.tri.dump_json()];
    let mut mismatches: Vec<String> = Vec::new();
    let mut expect = |cond: bool, msg: &str| {
        if !cond {
            mismatches.push(msg.to_string());
        }
    };

    let lab = init_labeling(&fx.tri, &fx.cover)?;
    let f_init: Vec<usize> = (0..4).map(|v| lab.f(v).0).collect();
    expect(f_init == vec![0, 0, 1, 2], "initial labels are (0, 0, 1, 2)");

    let bad = bad_faces(&fx.tri, &lab, &fx.cover, None);
    let initial_bad_faces: Vec<Vec<u32>> = bad.iter().cloned().collect();
    expect(
        initial_bad_faces == vec![vec![0, 1]],
        "the only bad face is the edge {a,b}",
    );

    let opts = SolveOptions {
        check_level: crate::solver::CheckLevel::Full,
        trace: true,
        ..SolveOptions::default()
    };
    let (tri, lab, trace) = eliminate_bad_face(fx.tri, lab, &[0, 1], &fx.cover, &opts)?;

    expect(trace.setup.bary == 4, "setup barycenter is vertex 4");
    expect(trace.setup.w == 2, "setup barycenter is labeled by element 2");
    expect(trace.setup.tau == improper, "setup label face is the polytope");
    let setup_queue: Vec<Vec<u32>> = trace
        .setup_queues
        .get(&3)
        .cloned()
        .unwrap_or_default();
    expect(
        setup_queue == vec![vec![0, 2, 4], vec![1, 2, 4], vec![3, 4]]
            && trace.setup_queues.len() == 1,
        "setup fills queue 3 with {b,a,c}, {b,b,c}, {b,d}",
    );
    states.push(tri_after_setup_placeholder());

    let expected_iterations = [
        (1usize, 3usize, vec![0u32, 2, 4], 5u32, 3usize),
        (2, 3, vec![1, 2, 4], 6, 3),
        (3, 3, vec![3, 4], 7, 3),
    ];
    expect(
        trace.iterations.len() == 3,
        "the loop runs exactly 3 iterations",
    );
    for (it, (step, j, face, bary, w)) in
        trace.iterations.iter().zip(expected_iterations.iter())
    {
        expect(
            it.step == *step
                && it.j == *j
                && it.face == *face
                && it.bary == *bary
                && it.w == *w
                && it.tau == improper,
            &format!("iteration {step} subdivides {face:?} and labels {bary} with element {w}"),
        );
    }

    let final_bad = bad_faces(&tri, &lab, &fx.cover, None);
    expect(final_bad.is_empty(), "no bad faces at exit");
    expect(tri.vertex_count() == 8, "eight vertices at exit");
    expect(tri.live_simplex_count() == 10, "ten triangles at exit");
    let barycenter_labels: Vec<usize> = (4..8).map(|v| lab.f(v).0).collect();
    expect(
        barycenter_labels == vec![2, 3, 3, 3],
        "barycenter labels are (2, 3, 3, 3)",
    );
    // every final triangle carries a basis
    for s in tri.maximal_simplices() {
        let mask: Subset = s.iter().map(|&v| lab.f(v)).collect();
        expect(
            fx.matroid.classify(mask).map_or(false, |c| c.is_basis),
            &format!("triangle {s:?} carries a basis"),
        );
    }
    states.push(tri.dump_json());

    Ok(DemoReport {
        pass: mismatches.is_empty(),
        mismatches,
        initial_bad_faces,
        setup_queue,
        iterations: trace.iterations.clone(),
        final_vertices: tri.vertex_count(),
        final_triangles: tri.live_simplex_count(),
        barycenter_labels,
        states,
    })
}

fn tri_after_setup_placeholder() -> serde_json::Value {
    // The elimination consumes the triangulation; replaying just the setup
    // subdivision reproduces the intermediate state for the dump.
    let fx = demo_fixture();
    let (tri, _) = fx.tri.star_subdivide(&[0, 1]).expect("setup subdivision");
    tri.dump_json()
}

// ---------------------------------------------------------------------------
// Instance documents and the CLI.

/// A solver instance: polytope, matroid, and cover.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub polytope: PolytopeSpec,
    pub matroid: MatroidSpec,
    pub cover: CoverSpec,
}

impl InstanceDoc {
    pub fn build(&self) -> Result<CoverOracle, AppError> {
        let poly = Polytope::from_spec(&self.polytope)?;
        let matroid = Arc::new(Matroid::from_spec(&self.matroid)?);
        Ok(CoverOracle::from_spec(poly, matroid, &self.cover)?)
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "mkkm",
    about = "Matroid-colorful covering solver: witnesses, validation, cake division, colorful Caratheodory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve an instance file and print the witness JSON.
    Solve {
        instance: PathBuf,
        /// Target mesh diameter (rational, e.g. "1/64"); defaults to
        /// 2^-6 of the polytope diameter.
        #[arg(long)]
        delta: Option<String>,
        /// Include the elimination trace in the witness.
        #[arg(long)]
        trace: bool,
    },
    /// Grid-validate the covering condition of an instance file.
    Validate {
        instance: PathBuf,
        #[arg(long, default_value_t = 4)]
        resolution: u32,
    },
    /// Solve a cake-division instance file.
    Cake {
        instance: PathBuf,
        /// Envy-gap target (rational); defaults to "1/64".
        #[arg(long)]
        delta: Option<String>,
        #[arg(long, default_value_t = 8)]
        resolution: u32,
    },
    /// Solve a planar colorful-Caratheodory points file.
    Caratheodory { instance: PathBuf },
    /// Replay the built-in worked example against its golden trace.
    DemoPaperExample,
}

fn read_doc<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T, AppError> {
    let text = std::fs::read_to_string(path).map_err(|source| AppError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut de = serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| AppError::Schema {
        path: format!("{}#{}", path.display(), e.path()),
        message: e.inner().to_string(),
    })
}

fn parse_delta(text: &Option<String>) -> Result<Option<BigRational>, AppError> {
    match text {
        None => Ok(None),
        Some(t) => parse_rational(t)
            .map(Some)
            .map_err(|e| AppError::BadInstance(format!("bad --delta: {e}"))),
    }
}

fn maybe_dump_trace(name: &str, value: &serde_json::Value) {
    if let Ok(dir) = std::env::var("MKKM_TRACE_DIR") {
        let path = std::path::Path::new(&dir).join(format!("trace-{name}.json"));
        if let Err(e) = std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()) {
            eprintln!("warning: cannot write trace to {}: {e}", path.display());
        }
    }
}

/// Exit codes: 0 success, 1 validation/verification failure, 2 malformed
/// input or usage.
pub fn cli_run(args: Vec<String>) -> i32 {
    let mut argv = vec!["mkkm".to_string()];
    argv.extend(args);
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            // clap prints its own help/version through the error
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run_command(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                AppError::NotHungry { .. }
                | AppError::CoverInvalid(_)
                | AppError::HypothesisFailed { .. }
                | AppError::ExtractionFailed { .. } => 1,
                _ => 2,
            }
        }
    }
}

fn run_command(cmd: Command) -> Result<i32, AppError> {
    match cmd {
        Command::Solve {
            instance,
            delta,
            trace,
        } => {
            let doc: InstanceDoc = read_doc(&instance)?;
            let cover = doc.build()?;
            let delta = match parse_delta(&delta)? {
                Some(d) => d,
                None => {
                    let diam = crate::ratio::sqrt_upper_bound(&cover.polytope().diameter_sq(), 24);
                    diam / BigRational::from_integer(64.into())
                }
            };
            let poly = Arc::clone(cover.polytope());
            let p = poly.face_barycenter(poly.improper_face()).clone();
            let opts = SolveOptions {
                trace,
                ..SolveOptions::default()
            };
            let witness = solve(&cover, &p, &delta, &opts)?;
            let out = serde_json::to_value(&witness).unwrap();
            if witness.trace.is_some() {
                maybe_dump_trace("solve", &out);
            }
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
            Ok(0)
        }
        Command::Validate {
            instance,
            resolution,
        } => {
            let doc: InstanceDoc = read_doc(&instance)?;
            let cover = doc.build()?;
            let report = cover.validate_mkomiya(resolution);
            println!("{}", serde_json::to_string_pretty(&report).unwrap());
            Ok(if report.pass { 0 } else { 1 })
        }
        Command::Cake {
            instance,
            delta,
            resolution,
        } => {
            let doc: CakeInstance = read_doc(&instance)?;
            let delta = parse_delta(&delta)?
                .unwrap_or_else(|| BigRational::new(1.into(), 64.into()));
            let allocation = cake_solve(&doc, &delta, resolution)?;
            println!("{}", serde_json::to_string_pretty(&allocation).unwrap());
            Ok(0)
        }
        Command::Caratheodory { instance } => {
            let doc: CaratheodoryInstance = read_doc(&instance)?;
            let answer = caratheodory_solve(&doc)?;
            println!("{}", serde_json::to_string_pretty(&answer).unwrap());
            Ok(0)
        }
        Command::DemoPaperExample => {
            let report = run_demo()?;
            let out = serde_json::to_value(&report).unwrap();
            maybe_dump_trace("demo", &out);
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
            Ok(if report.pass { 0 } else { 1 })
        }
    }
}
