//! The labeling engine: bad-face elimination, basis-labeled triangulations,
//! the Sperner-Shapley witness search, and the end-to-end solver.
//!
//! A labeling assigns each triangulation vertex `v` a polytope face
//! `lambda(v)` inside its support face, a ground element `f(v)` with
//! `v` in `A_{lambda(v)}^{f(v)}`, and the designated point
//! `y(v) = y_{lambda(v)}^{f(v)}`. A face of the triangulation is *bad* when
//! its `f`-labels form a circuit, or when it is an edge with equal labels.
//! Eliminating every bad face makes the labels of every maximal simplex a
//! basis, which is what the witness extraction needs.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cover::{CoverError, CoverOracle};
use crate::geometry::{conv_contains, FaceId, GeometryError, Point};
use crate::matroid::{Element, MatroidError, Subset};
use crate::ratio::serde_rational;
use crate::simplicial::{SimplexFace, SimplicialError, Triangulation};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error(transparent)]
    Simplicial(#[from] SimplicialError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Matroid(#[from] MatroidError),
    #[error("matroid rank {rank} must equal polytope dimension {dim} + 1")]
    RankMismatch { rank: usize, dim: usize },
    #[error("the elimination algorithm needs rank k >= 2")]
    RankTooSmall,
    #[error("point lies outside the polytope")]
    PointOutside,
    #[error("delta must be positive")]
    BadDelta,
    #[error("the given face is not a bad face of the triangulation")]
    NotBadFace,
    #[error("no face's designated points capture the query point; the labeling is not Sperner-Shapley or the input is inconsistent")]
    WitnessNotFound,
    #[error("step cap exceeded after {steps} steps; state dump: {dump}")]
    StepCap { steps: u64, dump: String },
}

/// How much runtime checking to perform inside the algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckLevel {
    /// Cheap local assertions only (queue indexes, rank bounds, adjacency
    /// counts).
    Fast,
    /// Also re-scan the whole triangulation between iterations to check the
    /// global bookkeeping claims. Quadratic on desk-scale instances.
    Full,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub check_level: CheckLevel,
    pub trace: bool,
    pub step_cap: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            check_level: CheckLevel::Fast,
            trace: false,
            step_cap: 1_000_000,
        }
    }
}

/// Vertex labels `(lambda, f)`; the `y` map is derived from the cover.
#[derive(Debug, Clone)]
pub struct Labeling {
    lambda: Vec<FaceId>,
    f: Vec<Element>,
}

impl Labeling {
    pub fn lambda(&self, v: u32) -> FaceId {
        self.lambda[v as usize]
    }

    pub fn f(&self, v: u32) -> Element {
        self.f[v as usize]
    }

    pub fn y(&self, v: u32, cover: &CoverOracle) -> Point {
        cover.y_point(self.f[v as usize], self.lambda[v as usize])
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    fn push(&mut self, lambda: FaceId, f: Element) {
        self.lambda.push(lambda);
        self.f.push(f);
    }
}

/// Labels every vertex of the triangulation by the deterministic constrained
/// choice with nothing forbidden but the matroid's loops.
pub fn init_labeling(tri: &Triangulation, cover: &CoverOracle) -> Result<Labeling, SolveError> {
    let loops = cover.matroid().loops();
    let mut lab = Labeling {
        lambda: Vec::with_capacity(tri.vertex_count()),
        f: Vec::with_capacity(tri.vertex_count()),
    };
    for v in 0..tri.vertex_count() as u32 {
        let choice = cover.choose_label(tri.coords_of(v), tri.supp_of(v), loops)?;
        lab.push(choice.tau, choice.w);
    }
    Ok(lab)
}

fn face_is_bad(lab: &Labeling, cover: &CoverOracle, face: &[u32]) -> bool {
    if face.len() == 2 {
        let (a, b) = (lab.f(face[0]), lab.f(face[1]));
        if a == b {
            return true;
        }
    }
    let mut mask = Subset::EMPTY;
    for &v in face {
        mask = mask.insert(lab.f(v));
    }
    if mask.len() != face.len() {
        return false; // repeated labels on a bigger face: not bad
    }
    cover.matroid().is_circuit_unchecked(mask)
}

/// All bad faces: edges with equal labels and faces whose labels form a
/// circuit. Restricted to faces containing `containing` when given.
pub fn bad_faces(
    tri: &Triangulation,
    lab: &Labeling,
    cover: &CoverOracle,
    containing: Option<u32>,
) -> BTreeSet<SimplexFace> {
    let mut out = BTreeSet::new();
    let mut scan = |simplex: &[u32]| {
        let n = simplex.len();
        for mask in 1u32..(1 << n) {
            if let Some(v) = containing {
                let idx = simplex.iter().position(|&u| u == v);
                match idx {
                    Some(i) if mask >> i & 1 == 1 => {}
                    _ => continue,
                }
            }
            let face: Vec<u32> = (0..n)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| simplex[i])
                .collect();
            if face_is_bad(lab, cover, &face) {
                out.insert(face);
            }
        }
    };
    match containing {
        None => {
            for s in tri.maximal_simplices() {
                scan(s);
            }
        }
        Some(v) => {
            for s in tri.star_of(v).map(|s| s.to_vec()).collect::<Vec<_>>() {
                scan(&s);
            }
        }
    }
    out
}

/// One `(step, j, F, w, tau)` record of the elimination algorithm.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct TraceStep {
    pub step: usize,
    pub j: usize,
    pub face: SimplexFace,
    pub bary: u32,
    pub w: usize,
    pub tau: usize,
}

/// Full trace of one bad-face elimination: the setup record, the queue
/// contents right after setup, and one record per loop iteration.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct EliminationTrace {
    pub setup: TraceStep,
    pub setup_queues: BTreeMap<usize, Vec<SimplexFace>>,
    pub iterations: Vec<TraceStep>,
}

struct SeqEntry {
    face: SimplexFace,
    bary: u32,
    alive: bool,
}

struct AlgState<'a> {
    tri: Triangulation,
    lab: Labeling,
    cover: &'a CoverOracle,
    loops: Subset,
    seq: Vec<SeqEntry>,
    queues: Vec<VecDeque<SimplexFace>>,
    k: usize,
    steps: u64,
    prefix_empty_floor: usize,
}

impl<'a> AlgState<'a> {
    fn current_h(&self) -> BTreeSet<u32> {
        let mut h = BTreeSet::new();
        for e in self.seq.iter().filter(|e| e.alive) {
            h.extend(e.face.iter().copied());
            h.insert(e.bary);
        }
        h
    }

    fn labels_of(&self, verts: impl IntoIterator<Item = u32>) -> Subset {
        verts
            .into_iter()
            .map(|v| self.lab.f(v))
            .collect()
    }

    /// Labels the fresh barycenter `b` with the constraint set
    /// `cl(f(H minus b))`; checks the rank bound from the choice argument.
    fn label_barycenter(&mut self, b: u32, j: usize) -> Result<(usize, usize), SolveError> {
        let h = self.current_h();
        let shed = self.labels_of(h.iter().copied().filter(|&v| v != b));
        let rank = self.cover.matroid().rank_unchecked(shed);
        assert!(
            rank <= j - 1,
            "rank bound violated: r(f(H\\b)) = {rank} > j-1 = {}",
            j - 1
        );
        let forbidden = self
            .cover
            .matroid()
            .closure_unchecked(shed)
            .elements
            .union(self.loops);
        let choice = self.cover.choose_label(
            self.tri.coords_of(b),
            self.tri.supp_of(b),
            forbidden,
        )?;
        self.lab.push(choice.tau, choice.w);
        debug_assert_eq!(self.lab.len(), self.tri.vertex_count());
        Ok((choice.w.0, choice.tau.0))
    }

    /// After subdividing a face popped from queue `j`, every maximal simplex
    /// around the new barycenter must contain exactly `j - 1` other tracked
    /// vertices.
    fn check_adjacency_count(&self, b: u32, j: usize) {
        let h = self.current_h();
        for s in self.tri.star_of(b) {
            let count = s.iter().filter(|&&v| v != b && h.contains(&v)).count();
            assert_eq!(
                count,
                j - 1,
                "maximal simplex {s:?} around barycenter {b} carries {count} tracked vertices, expected {}",
                j - 1
            );
        }
    }

    /// Queues the bad faces around a fresh barycenter into `Q_{j+i}` by
    /// their number of untracked vertices `i`. Targets sit strictly above
    /// the current index and must be empty before assignment.
    fn queue_new_bad_faces(&mut self, b: u32, j: usize) -> bool {
        let new_bad = bad_faces(&self.tri, &self.lab, self.cover, Some(b));
        if new_bad.is_empty() {
            return false;
        }
        let h = self.current_h();
        let mut by_target: BTreeMap<usize, Vec<SimplexFace>> = BTreeMap::new();
        for face in new_bad {
            let outside = face.iter().filter(|v| !h.contains(v)).count();
            assert!(
                outside >= 1,
                "queued face {face:?} lies entirely inside the tracked set"
            );
            let target = j + outside;
            assert!(
                target <= self.k,
                "queue index {target} exceeds the matroid rank {}",
                self.k
            );
            by_target.entry(target).or_default().push(face);
        }
        for (target, faces) in by_target {
            assert!(
                self.queues[target].is_empty(),
                "assignment into non-empty queue {target}"
            );
            self.queues[target].extend(faces);
        }
        true
    }

    fn max_nonempty_queue(&self) -> Option<usize> {
        (1..self.queues.len()).rev().find(|&j| !self.queues[j].is_empty())
    }

    /// End-of-iteration bookkeeping claims: no queue above rank `k`, and
    /// once `Q_1..Q_j` are simultaneously empty, `Q_j` stays empty.
    fn check_queue_claims(&mut self) {
        for j in self.k + 1..self.queues.len() {
            assert!(
                self.queues[j].is_empty(),
                "queue {j} above the rank is populated"
            );
        }
        for j in 1..=self.prefix_empty_floor {
            assert!(
                self.queues[j].is_empty(),
                "queue {j} was re-populated after its prefix emptied"
            );
        }
        let mut cur = 0;
        for j in 1..self.queues.len() {
            if self.queues[j].is_empty() {
                cur = j;
            } else {
                break;
            }
        }
        self.prefix_empty_floor = self.prefix_empty_floor.max(cur);
    }

    fn dump(&self) -> String {
        let queues: Vec<(usize, usize)> = self
            .queues
            .iter()
            .enumerate()
            .filter(|(_, q)| !q.is_empty())
            .map(|(j, q)| (j, q.len()))
            .collect();
        format!(
            "{{vertices: {}, simplices: {}, queues: {queues:?}, seq_len: {}}}",
            self.tri.vertex_count(),
            self.tri.live_simplex_count(),
            self.seq.len()
        )
    }
}

fn assert_no_proper_containment(bad: &BTreeSet<SimplexFace>) {
    if bad.len() > 400 {
        return; // quadratic diagnostic, desk scale only
    }
    for a in bad {
        for b in bad {
            if a != b {
                assert!(
                    !a.iter().all(|v| b.contains(v)),
                    "bad face {a:?} properly contained in bad face {b:?}"
                );
            }
        }
    }
}

/// Eliminates one bad face: subdivides at it, labels the new barycenter away
/// from the closure of the face's labels, and keeps subdividing queued bad
/// faces around fresh barycenters until none remain. The result has strictly
/// fewer bad faces, none of them new.
pub fn eliminate_bad_face(
    tri: Triangulation,
    lab: Labeling,
    f1: &[u32],
    cover: &CoverOracle,
    opts: &SolveOptions,
) -> Result<(Triangulation, Labeling, EliminationTrace), SolveError> {
    let k = cover.matroid().rank_full();
    if k < 2 {
        return Err(SolveError::RankTooSmall);
    }
    let mut f1 = f1.to_vec();
    f1.sort_unstable();
    if !tri.is_face(&f1) || !face_is_bad(&lab, cover, &f1) {
        return Err(SolveError::NotBadFace);
    }
    let input_bad = match opts.check_level {
        CheckLevel::Full => {
            let b = bad_faces(&tri, &lab, cover, None);
            assert_no_proper_containment(&b);
            Some(b)
        }
        CheckLevel::Fast => None,
    };

    let mut state = AlgState {
        tri,
        lab,
        cover,
        loops: cover.matroid().loops(),
        seq: Vec::new(),
        queues: vec![VecDeque::new(); 2 * k + 2],
        k,
        steps: 0,
        prefix_empty_floor: 0,
    };

    // Setup: subdivide at F1 and label its barycenter.
    let j1 = f1.len();
    let (tri2, b1) = state.tri.star_subdivide(&f1)?;
    state.tri = tri2;
    state.seq.push(SeqEntry {
        face: f1.clone(),
        bary: b1,
        alive: true,
    });
    let (w, tau) = state.label_barycenter(b1, j1)?;
    state.check_adjacency_count(b1, j1);
    state.queue_new_bad_faces(b1, j1);
    state.check_queue_claims();
    let setup = TraceStep {
        step: 0,
        j: j1,
        face: f1.clone(),
        bary: b1,
        w,
        tau,
    };
    let setup_queues: BTreeMap<usize, Vec<SimplexFace>> = state
        .queues
        .iter()
        .enumerate()
        .filter(|(_, q)| !q.is_empty())
        .map(|(j, q)| (j, q.iter().cloned().collect()))
        .collect();

    let mut iterations = Vec::new();
    let mut step = 0usize;
    while let Some(j) = state.max_nonempty_queue() {
        state.steps += 1;
        step += 1;
        if state.steps > opts.step_cap {
            return Err(SolveError::StepCap {
                steps: state.steps,
                dump: state.dump(),
            });
        }
        let face = state.queues[j].pop_front().expect("nonempty queue");
        // queued faces survive until popped: no bad face properly contains
        // another, so no earlier subdivision can have destroyed this one
        assert!(
            state.tri.is_face(&face),
            "queued face {face:?} was destroyed before being popped"
        );
        debug_assert!(face_is_bad(&state.lab, cover, &face));
        let (tri2, b) = state.tri.star_subdivide(&face)?;
        state.tri = tri2;
        state.seq.push(SeqEntry {
            face: face.clone(),
            bary: b,
            alive: true,
        });
        state.check_adjacency_count(b, j);
        let (w, tau) = state.label_barycenter(b, j)?;
        if !state.queue_new_bad_faces(b, j) {
            let entry = state
                .seq
                .iter_mut()
                .rev()
                .find(|e| e.alive && e.face == face)
                .expect("the face just subdivided is tracked");
            entry.alive = false;
        }
        state.check_queue_claims();
        if opts.check_level == CheckLevel::Full {
            let cur_bad = bad_faces(&state.tri, &state.lab, cover, None);
            let queued: BTreeSet<&SimplexFace> =
                state.queues.iter().flatten().collect();
            for f in queued.iter() {
                assert!(
                    cur_bad.contains(*f) && state.tri.is_face(f),
                    "queued face {f:?} is not a live bad face"
                );
            }
            for f in cur_bad.iter() {
                let known = input_bad.as_ref().unwrap().contains(f) || queued.contains(f);
                assert!(known, "bad face {f:?} is neither original nor queued");
            }
        }
        iterations.push(TraceStep {
            step,
            j,
            face,
            bary: b,
            w,
            tau,
        });
    }

    if let Some(input) = &input_bad {
        let out_bad = bad_faces(&state.tri, &state.lab, cover, None);
        assert!(
            out_bad.iter().all(|f| input.contains(f)),
            "elimination introduced a new bad face"
        );
        assert!(!out_bad.contains(&f1));
    }
    assert!(!state.tri.is_face(&f1), "the eliminated face survived");

    Ok((
        state.tri,
        state.lab,
        EliminationTrace {
            setup,
            setup_queues,
            iterations,
        },
    ))
}

/// Statistics of a `good_triangulation` run.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunStats {
    pub initial_bad: usize,
    pub eliminations: usize,
    pub final_vertices: usize,
    pub final_simplices: usize,
}

/// Labels the triangulation and eliminates every bad face (smallest first by
/// dimension, then lexicographic ids). The result satisfies: every vertex
/// lies in its labeled set, designated points sit inside labeled faces, and
/// the labels of every maximal simplex form a basis.
pub fn good_triangulation(
    tri: Triangulation,
    cover: &CoverOracle,
    opts: &SolveOptions,
) -> Result<(Triangulation, Labeling, RunStats, Vec<EliminationTrace>), SolveError> {
    let k = cover.matroid().rank_full();
    if k < 2 {
        return Err(SolveError::RankTooSmall);
    }
    let mut tri = tri;
    let mut lab = init_labeling(&tri, cover)?;
    let mut worklist: BTreeSet<(usize, SimplexFace)> = bad_faces(&tri, &lab, cover, None)
        .into_iter()
        .map(|f| (f.len(), f))
        .collect();
    let mut stats = RunStats {
        initial_bad: worklist.len(),
        ..RunStats::default()
    };
    let mut traces = Vec::new();
    while let Some((_, face)) = worklist.pop_first() {
        if !tri.is_face(&face) {
            continue; // destroyed by an earlier elimination
        }
        let (t2, l2, trace) = eliminate_bad_face(tri, lab, &face, cover, opts)?;
        tri = t2;
        lab = l2;
        stats.eliminations += 1;
        if opts.trace {
            traces.push(trace);
        }
    }
    verify_labeling(&tri, &lab, cover, opts.check_level == CheckLevel::Full)
        .unwrap_or_else(|e| panic!("good triangulation postcondition failed: {e}"));
    stats.final_vertices = tri.vertex_count();
    stats.final_simplices = tri.live_simplex_count();
    Ok((tri, lab, stats, traces))
}

/// Per-vertex labeling contract: each vertex lies in its labeled set, with
/// the designated point inside the labeled face inside the support face.
pub fn verify_vertex_properties(
    tri: &Triangulation,
    lab: &Labeling,
    cover: &CoverOracle,
) -> Result<(), String> {
    let poly = cover.polytope();
    for v in 0..tri.vertex_count() as u32 {
        let (w, tau) = (lab.f(v), lab.lambda(v));
        if !poly.is_subface(tau, tri.supp_of(v)) {
            return Err(format!("vertex {v}: labeled face outside its support"));
        }
        if !cover.member_unchecked(w, tau, tri.coords_of(v)) {
            return Err(format!("vertex {v} is not in its labeled set"));
        }
        let y = lab.y(v, cover);
        if !poly.face_contains(tau, &y) {
            return Err(format!("vertex {v}: designated point off its face"));
        }
    }
    Ok(())
}

/// Basis contract: the labels of every maximal simplex form a basis.
pub fn verify_basis_property(
    tri: &Triangulation,
    lab: &Labeling,
    cover: &CoverOracle,
) -> Result<(), String> {
    let matroid = cover.matroid();
    let k = matroid.rank_full();
    for s in tri.maximal_simplices() {
        let mask: Subset = s.iter().map(|&v| lab.f(v)).collect();
        if mask.len() != s.len() || matroid.rank_unchecked(mask) != k || s.len() != k {
            return Err(format!(
                "simplex {s:?} labels {:?} do not form a basis",
                s.iter().map(|&v| lab.f(v).0).collect::<Vec<_>>()
            ));
        }
    }
    Ok(())
}

/// Full labeling contract; `deep` adds the per-vertex membership scan.
pub fn verify_labeling(
    tri: &Triangulation,
    lab: &Labeling,
    cover: &CoverOracle,
    deep: bool,
) -> Result<(), String> {
    verify_basis_property(tri, lab, cover)?;
    if deep {
        verify_vertex_properties(tri, lab, cover)?;
    }
    Ok(())
}

/// Exact nonnegative weights on a face's vertices reproducing a point from
/// their designated points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessCertificate {
    #[serde(with = "serde_vertex_weights")]
    pub weights: Vec<(u32, BigRational)>,
}

impl WitnessCertificate {
    /// Verifies the weights against the labeling's designated points.
    pub fn verify(&self, lab: &Labeling, cover: &CoverOracle, p: &Point) -> bool {
        let mut sum = BigRational::zero();
        let mut combo = vec![BigRational::zero(); p.dim()];
        for (v, wt) in &self.weights {
            if wt.is_negative() {
                return false;
            }
            sum += wt;
            let y = lab.y(*v, cover);
            for (acc, c) in combo.iter_mut().zip(&y.coords) {
                *acc += wt * c;
            }
        }
        sum.is_one() && combo == p.coords
    }
}

mod serde_vertex_weights {
    use super::*;
    use crate::ratio::{format_rational, parse_rational};
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        v: &[(u32, BigRational)],
        s: S,
    ) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|(i, w)| (*i, format_rational(w))))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<Vec<(u32, BigRational)>, D::Error> {
        let pairs = Vec::<(u32, String)>::deserialize(d)?;
        pairs
            .into_iter()
            .map(|(i, w)| parse_rational(&w).map(|w| (i, w)).map_err(de::Error::custom))
            .collect()
    }
}

/// Finds the first face (by dimension, then lexicographic vertex ids) whose
/// designated points capture `p` in their convex hull, with the exact
/// certificate.
pub fn sperner_shapley_face(
    tri: &Triangulation,
    lab: &Labeling,
    cover: &CoverOracle,
    p: &Point,
) -> Result<(SimplexFace, WitnessCertificate), SolveError> {
    let k = cover.matroid().rank_full().max(1);
    // Hull tests depend only on the multiset of (f, lambda) pairs, which is
    // tiny compared to the number of faces; memoize per distinct key.
    let mut memo: BTreeMap<Vec<(usize, usize)>, Option<Vec<BigRational>>> = BTreeMap::new();
    for size in 1..=k {
        let mut faces: Vec<SimplexFace> = Vec::new();
        for s in tri.maximal_simplices() {
            if s.len() < size {
                continue;
            }
            let n = s.len();
            for mask in 1u32..(1 << n) {
                if mask.count_ones() as usize != size {
                    continue;
                }
                let face: Vec<u32> = (0..n)
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| s[i])
                    .collect();
                faces.push(face);
            }
        }
        faces.sort_unstable();
        faces.dedup();
        for face in faces {
            let mut key: Vec<(usize, usize)> = face
                .iter()
                .map(|&v| (lab.f(v).0, lab.lambda(v).0))
                .collect();
            key.sort_unstable();
            key.dedup();
            let weights = memo.entry(key.clone()).or_insert_with(|| {
                let ys: Vec<Point> = key
                    .iter()
                    .map(|&(w, tau)| cover.y_point(Element(w), FaceId(tau)))
                    .collect();
                conv_contains(&ys, p).ok().flatten().map(|cert| {
                    let mut by_key = vec![BigRational::zero(); key.len()];
                    for (idx, wt) in cert.weights {
                        by_key[idx] += wt;
                    }
                    by_key
                })
            });
            if let Some(by_key) = weights {
                // Assign each key's weight to its first vertex in the face.
                let mut out: Vec<(u32, BigRational)> =
                    face.iter().map(|&v| (v, BigRational::zero())).collect();
                for (ki, wt) in key.iter().zip(by_key.iter()) {
                    let slot = face
                        .iter()
                        .position(|&v| (lab.f(v).0, lab.lambda(v).0) == *ki)
                        .expect("key came from this face");
                    out[slot].1 = wt.clone();
                }
                let cert = WitnessCertificate { weights: out };
                debug_assert!(cert.verify(lab, cover, p));
                return Ok((face, cert));
            }
        }
    }
    Err(SolveError::WitnessNotFound)
}

/// The solver's answer: a small simplex whose vertices sit in basis-labeled
/// cover sets, with an exact certificate that `p` lies in the hull of the
/// designated points of one of its faces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Witness {
    /// Ground elements labeling the witness simplex (a basis).
    pub basis: Vec<usize>,
    /// Polytope face ids labeling the witness simplex, parallel to `basis`.
    pub faces: Vec<usize>,
    /// Vertex ids of the witness maximal simplex.
    pub simplex: Vec<u32>,
    /// Exact convex weights on (a face of) the simplex reproducing `p` from
    /// designated points.
    pub certificate: WitnessCertificate,
    /// Rational upper bound on the final triangulation's diameter.
    #[serde(with = "serde_rational")]
    pub diameter_bound: BigRational,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<EliminationTrace>>,
}

const DIAMETER_BITS: u32 = 24;

/// End-to-end solve: refine until the mesh diameter is at most `delta`,
/// make the labeling basis-clean, and extract the witness for `p`.
pub fn solve(
    cover: &CoverOracle,
    p: &Point,
    delta: &BigRational,
    opts: &SolveOptions,
) -> Result<Witness, SolveError> {
    solve_detailed(cover, p, delta, opts).map(|(w, _, _)| w)
}

/// Like [`solve`], also returning the final triangulation and labeling so
/// applications can read the witness simplex's geometry.
pub fn solve_detailed(
    cover: &CoverOracle,
    p: &Point,
    delta: &BigRational,
    opts: &SolveOptions,
) -> Result<(Witness, Triangulation, Labeling), SolveError> {
    let poly = cover.polytope();
    let matroid = cover.matroid();
    let k = matroid.rank_full();
    if k != poly.dim() + 1 {
        return Err(SolveError::RankMismatch {
            rank: k,
            dim: poly.dim(),
        });
    }
    if !delta.is_positive() {
        return Err(SolveError::BadDelta);
    }
    if !poly.contains(p) {
        return Err(SolveError::PointOutside);
    }

    if k == 1 {
        // Zero-dimensional polytope: label its one point directly.
        let choice = cover.choose_label(p, poly.improper_face(), matroid.loops())?;
        let tri = Triangulation::trivial(poly)?;
        let lab = Labeling {
            lambda: vec![choice.tau],
            f: vec![choice.w],
        };
        let witness = Witness {
            basis: vec![choice.w.0],
            faces: vec![choice.tau.0],
            simplex: vec![0],
            certificate: WitnessCertificate {
                weights: vec![(0, BigRational::one())],
            },
            diameter_bound: BigRational::zero(),
            trace: None,
        };
        return Ok((witness, tri, lab));
    }

    let mut tri =
        Triangulation::trivial(poly).unwrap_or_else(|_| Triangulation::initial(poly));
    let mut pre_bound = tri.diameter_upper(DIAMETER_BITS);
    while pre_bound > *delta {
        tri = tri.refine_midpoint();
        pre_bound = tri.diameter_upper(DIAMETER_BITS);
    }

    let (tri, lab, _stats, traces) = good_triangulation(tri, cover, opts)?;
    let (tau, certificate) = sperner_shapley_face(&tri, &lab, cover, p)?;

    // Smallest enclosing maximal simplex, lexicographically.
    let simplex: Vec<u32> = tri
        .maximal_simplices()
        .filter(|s| tau.iter().all(|v| s.contains(v)))
        .map(|s| s.to_vec())
        .min()
        .expect("a face always sits inside some maximal simplex");
    let basis: Vec<usize> = simplex.iter().map(|&v| lab.f(v).0).collect();
    let faces: Vec<usize> = simplex.iter().map(|&v| lab.lambda(v).0).collect();

    let mask: Subset = simplex.iter().map(|&v| lab.f(v)).collect();
    debug_assert!(matroid.classify(mask).map_or(false, |c| c.is_basis));
    debug_assert!(simplex
        .iter()
        .all(|&v| cover.member_unchecked(lab.f(v), lab.lambda(v), tri.coords_of(v))));
    debug_assert!(certificate.verify(&lab, cover, p));

    let diameter_bound = pre_bound.min(tri.diameter_upper(DIAMETER_BITS));
    let witness = Witness {
        basis,
        faces,
        simplex,
        certificate,
        diameter_bound,
        trace: if opts.trace { Some(traces) } else { None },
    };
    Ok((witness, tri, lab))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::{CoverSpec, Halfspace, KkmSetEntry};
    use crate::geometry::Polytope;
    use crate::matroid::Matroid;
    use std::sync::Arc;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    /// Two-element rank-2 cover on the segment: element 0 prefers the right
    /// half, element 1 the left half.
    fn two_element_segment() -> CoverOracle {
        let poly = Polytope::simplex(2).unwrap();
        let matroid = Arc::new(Matroid::uniform(2, 2).unwrap());
        let spec = CoverSpec::KkmVertex {
            sets: vec![
                KkmSetEntry {
                    w: 0,
                    vertex: 0,
                    halfspaces: vec![Halfspace {
                        normal: vec![rat(1, 1), rat(0, 1)],
                        offset: rat(1, 2),
                    }],
                },
                KkmSetEntry {
                    w: 0,
                    vertex: 1,
                    halfspaces: vec![Halfspace {
                        normal: vec![rat(-1, 1), rat(0, 1)],
                        offset: rat(-1, 2),
                    }],
                },
                KkmSetEntry {
                    w: 1,
                    vertex: 0,
                    halfspaces: vec![Halfspace {
                        normal: vec![rat(1, 1), rat(0, 1)],
                        offset: rat(1, 3),
                    }],
                },
                KkmSetEntry {
                    w: 1,
                    vertex: 1,
                    halfspaces: vec![Halfspace {
                        normal: vec![rat(-1, 1), rat(0, 1)],
                        offset: rat(-1, 3),
                    }],
                },
            ],
        };
        CoverOracle::from_spec(poly, matroid, &spec).unwrap()
    }

    #[test]
    fn init_labeling_on_segment() {
        let cover = two_element_segment();
        let tri = Triangulation::initial(cover.polytope());
        let lab = init_labeling(&tri, &cover).unwrap();
        // vertex 0 = (1,0): only sets at the 0-face of vertex 0 apply
        assert_eq!(lab.lambda(0), cover.polytope().vertex_face(0));
        assert_eq!(lab.f(0), Element(0));
        // the midpoint (vertex 2) is in both of element 0's sets
        assert_eq!(lab.f(2), Element(0));
        verify_vertex_properties(&tri, &lab, &cover).unwrap();
    }

    #[test]
    fn bad_faces_on_equal_labeled_edge() {
        let cover = two_element_segment();
        let tri = Triangulation::initial(cover.polytope());
        let lab = init_labeling(&tri, &cover).unwrap();
        // labels: v0 -> 0, v1 -> 0 (its left set holds at (0,1)? no: element
        // 0 at vertex 1 holds where x1 <= 1/2, so f(v1)=0 as well), midpoint
        // -> 0. Every edge is equal-labeled and bad.
        let bad = bad_faces(&tri, &lab, &cover, None);
        assert!(!bad.is_empty());
        assert!(bad.iter().all(|f| f.len() == 2));
        let restricted = bad_faces(&tri, &lab, &cover, Some(2));
        assert!(restricted.iter().all(|f| f.contains(&2)));
    }

    #[test]
    fn good_triangulation_on_segment_cover() {
        let cover = two_element_segment();
        let tri = Triangulation::initial(cover.polytope());
        let opts = SolveOptions {
            check_level: CheckLevel::Full,
            ..SolveOptions::default()
        };
        let (tri, lab, stats, _) = good_triangulation(tri, &cover, &opts).unwrap();
        assert!(stats.eliminations > 0);
        assert!(bad_faces(&tri, &lab, &cover, None).is_empty());
        verify_labeling(&tri, &lab, &cover, true).unwrap();
    }

    #[test]
    fn good_triangulation_no_bad_faces_means_no_work() {
        // one-simplex triangulation whose initial labels are already a basis
        let poly = Polytope::simplex(3).unwrap();
        let matroid = Arc::new(Matroid::uniform(3, 3).unwrap());
        let sets = (0..3)
            .map(|i| KkmSetEntry {
                w: i,
                vertex: i,
                halfspaces: vec![],
            })
            .collect();
        let cover =
            CoverOracle::from_spec(Arc::clone(&poly), matroid, &CoverSpec::KkmVertex { sets })
                .unwrap();
        let tri = Triangulation::trivial(&poly).unwrap();
        let count = tri.live_simplex_count();
        let (tri2, _, stats, _) =
            good_triangulation(tri, &cover, &SolveOptions::default()).unwrap();
        assert_eq!(stats.eliminations, 0);
        assert_eq!(stats.initial_bad, 0);
        assert_eq!(tri2.live_simplex_count(), count);
    }

    #[test]
    fn sperner_search_on_plain_simplex() {
        let poly = Polytope::simplex(3).unwrap();
        let matroid = Arc::new(Matroid::uniform(3, 3).unwrap());
        // vertex-only cover: element i owns the whole polytope at vertex i
        let sets = (0..3)
            .map(|i| KkmSetEntry {
                w: i,
                vertex: i,
                halfspaces: vec![],
            })
            .collect();
        let cover =
            CoverOracle::from_spec(Arc::clone(&poly), matroid, &CoverSpec::KkmVertex { sets })
                .unwrap();
        let tri = Triangulation::trivial(&poly).unwrap();
        let lab = init_labeling(&tri, &cover).unwrap();

        let centroid = Point::parse(&["1/3", "1/3", "1/3"]);
        let (tau, cert) = sperner_shapley_face(&tri, &lab, &cover, &centroid).unwrap();
        assert_eq!(tau, vec![0, 1, 2]);
        assert!(cert.verify(&lab, &cover, &centroid));
        assert!(cert.weights.iter().all(|(_, w)| *w == rat(1, 3)));

        // a vertex is captured by the 0-face first
        let v1 = Point::parse(&["1", "0", "0"]);
        let (tau, cert) = sperner_shapley_face(&tri, &lab, &cover, &v1).unwrap();
        assert_eq!(tau, vec![0]);
        assert_eq!(cert.weights, vec![(0, rat(1, 1))]);
    }

    #[test]
    fn solve_two_guest_segment() {
        let cover = two_element_segment();
        let p = Point::parse(&["1/2", "1/2"]);
        let delta = rat(1, 16);
        let opts = SolveOptions {
            check_level: CheckLevel::Full,
            ..SolveOptions::default()
        };
        let w = solve(&cover, &p, &delta, &opts).unwrap();
        assert_eq!(w.simplex.len(), 2);
        let mut basis = w.basis.clone();
        basis.sort_unstable();
        assert_eq!(basis, vec![0, 1]);
        assert!(w.diameter_bound <= delta);
        // determinism
        let w2 = solve(&cover, &p, &delta, &opts).unwrap();
        assert_eq!(w.basis, w2.basis);
        assert_eq!(w.simplex, w2.simplex);
        assert_eq!(w.certificate, w2.certificate);
    }

    #[test]
    fn solve_rank_one_point() {
        let poly = Polytope::simplex(1).unwrap();
        let matroid = Arc::new(Matroid::uniform(1, 1).unwrap());
        let sets = vec![KkmSetEntry {
            w: 0,
            vertex: 0,
            halfspaces: vec![],
        }];
        let cover =
            CoverOracle::from_spec(poly, matroid, &CoverSpec::KkmVertex { sets }).unwrap();
        let p = Point::parse(&["1"]);
        let w = solve(&cover, &p, &rat(1, 4), &SolveOptions::default()).unwrap();
        assert_eq!(w.basis, vec![0]);
        assert!(w.diameter_bound.is_zero());
    }

    #[test]
    fn solve_rejects_rank_mismatch() {
        let poly = Polytope::simplex(3).unwrap();
        let matroid = Arc::new(Matroid::uniform(2, 2).unwrap());
        let cover = CoverOracle::from_spec(
            poly,
            matroid,
            &CoverSpec::KkmVertex { sets: vec![] },
        )
        .unwrap();
        let p = Point::parse(&["1/3", "1/3", "1/3"]);
        assert!(matches!(
            solve(&cover, &p, &rat(1, 4), &SolveOptions::default()),
            Err(SolveError::RankMismatch { .. })
        ));
    }

    #[test]
    fn witness_round_trips_through_json() {
        let cover = two_element_segment();
        let p = Point::parse(&["1/2", "1/2"]);
        let w = solve(&cover, &p, &rat(1, 8), &SolveOptions::default()).unwrap();
        let js = serde_json::to_string(&w).unwrap();
        let back: Witness = serde_json::from_str(&js).unwrap();
        assert_eq!(w.basis, back.basis);
        assert_eq!(w.simplex, back.simplex);
        assert_eq!(w.certificate, back.certificate);
        assert_eq!(w.diameter_bound, back.diameter_bound);
    }
}
