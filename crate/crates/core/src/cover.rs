//! Cover oracles: families of closed sets `A_sigma^w` indexed by a ground
//! element `w` and a polytope face `sigma`, with designated points
//! `y_sigma^w` in `sigma`.
//!
//! Three constructions live here: explicit halfspace families (vertex-only
//! KKM covers are the common case), the planar ray cover used for colorful
//! Caratheodory, and preference covers for cake division. A grid validator
//! checks the covering condition over every matroid hyperplane complement.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{FaceId, GeometryError, Point, Polytope};
use crate::matroid::{Element, Matroid, MatroidError, Subset};
use crate::ratio::{serde_rational, serde_rational_vec};

#[derive(Debug, Error)]
pub enum CoverError {
    #[error("no admissible label: point {point} has no (w, face) pair outside the forbidden set")]
    NoLabel { point: String },
    #[error("query point lies outside the polytope")]
    PointOutside,
    #[error("invalid cover construction: {0}")]
    BadCover(String),
    #[error(transparent)]
    Matroid(#[from] MatroidError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Closed halfspace `{ x : <normal, x> >= offset }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Halfspace {
    #[serde(with = "serde_rational_vec")]
    pub normal: Vec<BigRational>,
    #[serde(with = "serde_rational")]
    pub offset: BigRational,
}

impl Halfspace {
    pub fn holds(&self, x: &Point) -> bool {
        let dot: BigRational = self
            .normal
            .iter()
            .zip(&x.coords)
            .map(|(n, c)| n * c)
            .sum();
        dot >= self.offset
    }
}

/// One closed cell: the intersection of `P` with a halfspace conjunction.
/// A set entry may carry several cells; membership is their union.
#[derive(Debug, Clone, Default)]
struct ExplicitSet {
    groups: Vec<Vec<Halfspace>>,
    y_override: Option<Point>,
}

#[derive(Debug)]
enum Family {
    Explicit {
        cells: BTreeMap<(usize, usize), ExplicitSet>,
    },
    Caratheodory {
        points: Vec<Point>,
        ray_hits: Vec<BTreeMap<usize, Point>>,
    },
    Cake {
        guests: Vec<PiecewiseDensity>,
    },
}

/// JSON shape of a cover inside a solver instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoverSpec {
    /// Only vertex-indexed sets are nonempty; each entry adds one halfspace
    /// cell to `A_{vertex}^w`.
    KkmVertex { sets: Vec<KkmSetEntry> },
    /// Face-indexed halfspace cells with optional designated points.
    Explicit { entries: Vec<ExplicitEntry> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KkmSetEntry {
    pub w: usize,
    pub vertex: usize,
    pub halfspaces: Vec<Halfspace>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExplicitEntry {
    pub w: usize,
    pub face: usize,
    pub halfspaces: Vec<Halfspace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<Point>,
}

/// Membership oracle for a face-and-element indexed family of closed sets.
#[derive(Debug)]
pub struct CoverOracle {
    poly: Arc<Polytope>,
    matroid: Arc<Matroid>,
    family: Family,
}

/// A constrained label choice: `member(w, tau, x)` holds, `tau` is a subface
/// of the query's support face, and `w` avoids the forbidden set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelChoice {
    pub w: Element,
    pub tau: FaceId,
}

impl CoverOracle {
    pub fn polytope(&self) -> &Arc<Polytope> {
        &self.poly
    }

    pub fn matroid(&self) -> &Arc<Matroid> {
        &self.matroid
    }

    /// Builds a cover from its JSON description.
    pub fn from_spec(
        poly: Arc<Polytope>,
        matroid: Arc<Matroid>,
        spec: &CoverSpec,
    ) -> Result<Self, CoverError> {
        match spec {
            CoverSpec::KkmVertex { sets } => {
                let entries: Vec<ExplicitEntry> = sets
                    .iter()
                    .map(|s| {
                        if s.vertex >= poly.num_vertices() {
                            return Err(CoverError::BadCover(format!(
                                "vertex {} out of range",
                                s.vertex
                            )));
                        }
                        Ok(ExplicitEntry {
                            w: s.w,
                            face: poly.vertex_face(s.vertex).0,
                            halfspaces: s.halfspaces.clone(),
                            y: None,
                        })
                    })
                    .collect::<Result<_, _>>()?;
                Self::explicit(poly, matroid, &entries)
            }
            CoverSpec::Explicit { entries } => Self::explicit(poly, matroid, entries),
        }
    }

    /// A cover whose sets are unions of halfspace cells within `P`.
    pub fn explicit(
        poly: Arc<Polytope>,
        matroid: Arc<Matroid>,
        entries: &[ExplicitEntry],
    ) -> Result<Self, CoverError> {
        let mut cells: BTreeMap<(usize, usize), ExplicitSet> = BTreeMap::new();
        for e in entries {
            if e.w >= matroid.ground_size() {
                return Err(CoverError::BadCover(format!("element {} out of range", e.w)));
            }
            if e.face >= poly.faces().len() {
                return Err(CoverError::BadCover(format!("face {} out of range", e.face)));
            }
            for h in &e.halfspaces {
                if h.normal.len() != poly.ambient_dim() {
                    return Err(CoverError::BadCover(
                        "halfspace normal has wrong dimension".into(),
                    ));
                }
            }
            let slot = cells.entry((e.w, e.face)).or_default();
            slot.groups.push(e.halfspaces.clone());
            if let Some(y) = &e.y {
                if !poly.face_contains(FaceId(e.face), y) {
                    return Err(CoverError::BadCover(format!(
                        "designated point {y} is not on face {}",
                        e.face
                    )));
                }
                slot.y_override = Some(y.clone());
            }
        }
        Ok(CoverOracle {
            poly,
            matroid,
            family: Family::Explicit { cells },
        })
    }

    /// The planar ray cover: for each input point `v` and proper face
    /// `sigma`, if the ray from the origin through `v` meets `sigma` then
    /// `A_sigma^v = { x : <x, v> >= 0 }` with `y_sigma^v` the intersection
    /// point; otherwise `A_sigma^v = sigma` with its barycenter designated.
    /// Sets at the improper face are empty.
    pub fn caratheodory(
        points: &[Point],
        poly: Arc<Polytope>,
        matroid: Arc<Matroid>,
    ) -> Result<Self, CoverError> {
        if poly.dim() != 2 || poly.ambient_dim() != 2 {
            return Err(CoverError::BadCover("ray cover needs a planar polytope".into()));
        }
        if matroid.ground_size() != points.len() {
            return Err(CoverError::BadCover(
                "matroid ground set must index the point set".into(),
            ));
        }
        let origin = Point::origin(2);
        if points.iter().any(|p| *p == origin) {
            return Err(CoverError::BadCover("origin is one of the input points".into()));
        }
        if points.iter().any(|p| p.dim() != 2) {
            return Err(CoverError::BadCover("points must be planar".into()));
        }
        if !poly.contains(&origin) {
            return Err(CoverError::BadCover("polytope must contain the origin".into()));
        }
        // Strict positivity: facets spanning 90 degrees or more break the
        // exclusion argument that forces witness faces onto rays.
        match poly.min_adjacent_vertex_dot() {
            Some(d) if d.is_positive() => {}
            _ => {
                return Err(CoverError::BadCover(
                    "a polygon facet spans an angle of 90 degrees or more".into(),
                ))
            }
        }
        let improper = poly.improper_face();
        let mut ray_hits = Vec::with_capacity(points.len());
        for v in points {
            let mut hits = BTreeMap::new();
            for f in poly.faces() {
                if f.id == improper {
                    continue;
                }
                if let Some(hit) = face_ray_intersection(&poly, f.id, v) {
                    hits.insert(f.id.0, hit);
                }
            }
            ray_hits.push(hits);
        }
        Ok(CoverOracle {
            poly,
            matroid,
            family: Family::Caratheodory {
                points: points.to_vec(),
                ray_hits,
            },
        })
    }

    /// The cake-preference cover on the standard simplex with `k` pieces:
    /// `A_{vertex i}^j` holds the partitions where guest `j` weakly prefers
    /// piece `i`; all other faces are empty.
    pub fn cake(
        guests: Vec<PiecewiseDensity>,
        pieces: usize,
        matroid: Arc<Matroid>,
    ) -> Result<Self, CoverError> {
        if guests.is_empty() {
            return Err(CoverError::BadCover("no guests".into()));
        }
        if matroid.ground_size() != guests.len() {
            return Err(CoverError::BadCover(
                "matroid ground set must index the guests".into(),
            ));
        }
        if matroid.rank_full() != pieces {
            return Err(CoverError::BadCover(format!(
                "matroid rank {} must equal the piece count {pieces}",
                matroid.rank_full()
            )));
        }
        for (i, g) in guests.iter().enumerate() {
            g.validate()
                .map_err(|e| CoverError::BadCover(format!("guest {i}: {e}")))?;
        }
        let poly = Polytope::simplex(pieces)?;
        Ok(CoverOracle {
            poly,
            matroid,
            family: Family::Cake { guests },
        })
    }

    /// Membership `x in A_sigma^w`, checking `x in P` first.
    pub fn member(&self, w: Element, sigma: FaceId, x: &Point) -> Result<bool, CoverError> {
        if !self.poly.contains(x) {
            return Err(CoverError::PointOutside);
        }
        Ok(self.member_unchecked(w, sigma, x))
    }

    /// Membership for points already known to lie in `P`.
    pub fn member_unchecked(&self, w: Element, sigma: FaceId, x: &Point) -> bool {
        match &self.family {
            Family::Explicit { cells } => cells
                .get(&(w.0, sigma.0))
                .map(|set| {
                    set.groups
                        .iter()
                        .any(|hs| hs.iter().all(|h| h.holds(x)))
                })
                .unwrap_or(false),
            Family::Caratheodory { points, ray_hits } => {
                if sigma == self.poly.improper_face() {
                    return false;
                }
                if ray_hits[w.0].contains_key(&sigma.0) {
                    !x.dot(&points[w.0]).is_negative()
                } else {
                    self.poly.face_contains(sigma, x)
                }
            }
            Family::Cake { guests } => {
                let f = self.poly.face(sigma);
                if f.dim != 0 {
                    return false;
                }
                let piece = f.verts[0];
                let values = piece_values(&guests[w.0], &x.coords);
                let mine = &values[piece];
                values.iter().all(|v| mine >= v)
            }
        }
    }

    /// The designated point `y_sigma^w in sigma`.
    pub fn y_point(&self, w: Element, sigma: FaceId) -> Point {
        match &self.family {
            Family::Explicit { cells } => cells
                .get(&(w.0, sigma.0))
                .and_then(|set| set.y_override.clone())
                .unwrap_or_else(|| self.poly.face_barycenter(sigma).clone()),
            Family::Caratheodory { ray_hits, .. } => ray_hits[w.0]
                .get(&sigma.0)
                .cloned()
                .unwrap_or_else(|| self.poly.face_barycenter(sigma).clone()),
            Family::Cake { .. } => self.poly.face_barycenter(sigma).clone(),
        }
    }

    /// Whether the ray cover's designated point at `(w, sigma)` is a ray
    /// intersection (as opposed to a fallback barycenter).
    pub fn is_ray_hit(&self, w: Element, sigma: FaceId) -> bool {
        match &self.family {
            Family::Caratheodory { ray_hits, .. } => ray_hits[w.0].contains_key(&sigma.0),
            _ => false,
        }
    }

    /// Picks the first `(w, tau)` with `w` outside `forbidden`, `tau` a
    /// subface of `supp`, and `member(w, tau, x)`. Deterministic: smallest
    /// `w` first, then faces by (dimension, id).
    ///
    /// Requires `supp` to be the minimal face containing `x`; the family
    /// shortcuts below rely on it.
    pub fn choose_label(
        &self,
        x: &Point,
        supp: FaceId,
        forbidden: Subset,
    ) -> Result<LabelChoice, CoverError> {
        let improper = self.poly.improper_face();
        for w in 0..self.matroid.ground_size() {
            let e = Element(w);
            if forbidden.contains(e) {
                continue;
            }
            let found = match &self.family {
                Family::Caratheodory { points, ray_hits } => {
                    // A set at tau is either the halfspace of a ray hit, or
                    // tau itself; since tau is a subface of the minimal face
                    // holding x, `x in tau` holds exactly when tau == supp.
                    self.poly.subfaces(supp).iter().copied().find(|&tau| {
                        if tau == improper {
                            false
                        } else if ray_hits[w].contains_key(&tau.0) {
                            !x.dot(&points[w]).is_negative()
                        } else {
                            tau == supp
                        }
                    })
                }
                Family::Cake { guests } => {
                    let values = piece_values(&guests[w], &x.coords);
                    let best = values.iter().max().cloned();
                    self.poly.subfaces(supp).iter().copied().find(|&tau| {
                        let f = self.poly.face(tau);
                        f.dim == 0 && Some(&values[f.verts[0]]) == best.as_ref()
                    })
                }
                Family::Explicit { .. } => self
                    .poly
                    .subfaces(supp)
                    .iter()
                    .copied()
                    .find(|&tau| self.member_unchecked(e, tau, x)),
            };
            if let Some(tau) = found {
                debug_assert!(self.member_unchecked(e, tau, x));
                return Ok(LabelChoice { w: e, tau });
            }
        }
        Err(CoverError::NoLabel {
            point: x.to_string(),
        })
    }

    /// Grid validation of the covering condition: for every matroid
    /// hyperplane `H` (whose complement `G` is a minimal admissible union
    /// index set) and every face `tau`, each barycentric grid sample on
    /// `tau` must lie in some `A_sigma^w` with `sigma` a subface of `tau`
    /// and `w in G`. Sound but grid-limited; the report names the first
    /// violation found.
    pub fn validate_mkomiya(&self, resolution: u32) -> ValidationReport {
        assert!(resolution >= 1, "resolution must be at least 1");
        for hp in self.matroid.hyperplanes() {
            let complement = self.matroid.ground_set().minus(hp.elements);
            for tau in self.poly.faces() {
                let verts: Vec<&Point> =
                    tau.verts.iter().map(|&v| self.poly.vertex(v)).collect();
                let mut violation = None;
                for_each_composition(resolution, verts.len(), &mut |weights| {
                    if violation.is_some() {
                        return;
                    }
                    let x = grid_point(&verts, weights, resolution);
                    let covered = self.poly.subfaces(tau.id).iter().any(|&sigma| {
                        complement
                            .iter()
                            .any(|w| self.member_unchecked(w, sigma, &x))
                    });
                    if !covered {
                        violation = Some(x);
                    }
                });
                if let Some(sample) = violation {
                    return ValidationReport {
                        pass: false,
                        resolution,
                        violation: Some(Violation {
                            hyperplane: hp.elements.iter().map(|e| e.0).collect(),
                            complement: complement.iter().map(|e| e.0).collect(),
                            face: tau.id.0,
                            sample,
                        }),
                    };
                }
            }
        }
        ValidationReport {
            pass: true,
            resolution,
            violation: None,
        }
    }
}

/// Outcome of `validate_mkomiya`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub resolution: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation: Option<Violation>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Violation {
    /// The hyperplane whose complement failed to cover.
    pub hyperplane: Vec<usize>,
    /// The union index set `G` that was checked.
    pub complement: Vec<usize>,
    /// Face of the polytope where coverage failed.
    pub face: usize,
    /// An uncovered sample point.
    pub sample: Point,
}

/// Intersection of the ray from the origin through `v` with a face, if any.
fn face_ray_intersection(poly: &Polytope, face: FaceId, v: &Point) -> Option<Point> {
    let f = poly.face(face);
    let cross = |a: &Point, b: &Point| -> BigRational {
        &a.coords[0] * &b.coords[1] - &a.coords[1] * &b.coords[0]
    };
    match f.dim {
        0 => {
            let u = poly.vertex(f.verts[0]);
            if cross(u, v).is_zero() && u.dot(v).is_positive() {
                Some(u.clone())
            } else {
                None
            }
        }
        1 => {
            // p + s (q - p) = t v with s in [0,1], t >= 0
            let p = poly.vertex(f.verts[0]);
            let q = poly.vertex(f.verts[1]);
            let d = q.sub(p);
            let det = cross(&d, v);
            if det.is_zero() {
                return None; // edge parallel to the ray; no crossing
            }
            // Cramer on [d, -v] [s t]^T = -p
            let s = -(cross(p, v)) / det.clone();
            let t = cross(&d, p) / det;
            if !s.is_negative() && s <= BigRational::one() && t.is_positive() {
                Some(v.scale(&t))
            } else {
                None
            }
        }
        _ => None,
    }
}

/// Enumerates all compositions of `n` into `parts` nonnegative integers.
pub fn for_each_composition(n: u32, parts: usize, f: &mut impl FnMut(&[u32])) {
    let mut buf = vec![0u32; parts];
    fn rec(rest: u32, idx: usize, buf: &mut Vec<u32>, f: &mut impl FnMut(&[u32])) {
        if idx + 1 == buf.len() {
            buf[idx] = rest;
            f(buf);
            return;
        }
        for v in 0..=rest {
            buf[idx] = v;
            rec(rest - v, idx + 1, buf, f);
        }
    }
    if parts == 0 {
        return;
    }
    rec(n, 0, &mut buf, f);
}

fn grid_point(verts: &[&Point], weights: &[u32], resolution: u32) -> Point {
    let res = BigRational::from_integer((resolution as i64).into());
    let mut coords = vec![BigRational::zero(); verts[0].dim()];
    for (v, &w) in verts.iter().zip(weights) {
        if w == 0 {
            continue;
        }
        let lambda = BigRational::from_integer((w as i64).into()) / &res;
        for (acc, c) in coords.iter_mut().zip(&v.coords) {
            *acc += &lambda * c;
        }
    }
    Point::new(coords)
}

// ---------------------------------------------------------------------------
// Piecewise densities for cake valuations.

/// Piecewise-linear nonnegative density on `[0,1]` with rational breakpoints.
/// Gaps between segments have density zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PiecewiseDensity {
    pub segments: Vec<DensitySegment>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensitySegment {
    #[serde(with = "serde_rational")]
    pub from: BigRational,
    #[serde(with = "serde_rational")]
    pub to: BigRational,
    #[serde(with = "serde_rational")]
    pub start_value: BigRational,
    #[serde(with = "serde_rational")]
    pub end_value: BigRational,
}

impl PiecewiseDensity {
    pub fn uniform() -> Self {
        PiecewiseDensity {
            segments: vec![DensitySegment {
                from: BigRational::zero(),
                to: BigRational::one(),
                start_value: BigRational::one(),
                end_value: BigRational::one(),
            }],
        }
    }

    /// Constant density `value` on `[from, to]`, zero elsewhere.
    pub fn constant_on(from: BigRational, to: BigRational, value: BigRational) -> Self {
        PiecewiseDensity {
            segments: vec![DensitySegment {
                from,
                to,
                start_value: value.clone(),
                end_value: value,
            }],
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let mut prev_end = BigRational::zero();
        for s in &self.segments {
            if s.from.is_negative() || s.to > BigRational::one() || s.from >= s.to {
                return Err(format!("bad segment [{}, {}]", s.from, s.to));
            }
            if s.from < prev_end {
                return Err("overlapping segments".into());
            }
            if s.start_value.is_negative() || s.end_value.is_negative() {
                return Err("negative density".into());
            }
            prev_end = s.to.clone();
        }
        Ok(())
    }

    fn value_at(&self, s: &DensitySegment, x: &BigRational) -> BigRational {
        let span = &s.to - &s.from;
        let t = (x - &s.from) / span;
        &s.start_value + (&s.end_value - &s.start_value) * t
    }

    /// Exact integral over `[a, b]` (trapezoid rule per linear segment).
    pub fn integrate(&self, a: &BigRational, b: &BigRational) -> BigRational {
        if a >= b {
            return BigRational::zero();
        }
        let mut total = BigRational::zero();
        for s in &self.segments {
            let lo = a.max(&s.from).clone();
            let hi = b.min(&s.to).clone();
            if lo >= hi {
                continue;
            }
            let vlo = self.value_at(s, &lo);
            let vhi = self.value_at(s, &hi);
            total += (&hi - &lo) * (vlo + vhi) / BigRational::from_integer(2.into());
        }
        total
    }
}

/// Values of the `k` pieces of the partition `x` (piece lengths, summing to
/// one) under one guest's density.
pub fn piece_values(density: &PiecewiseDensity, lengths: &[BigRational]) -> Vec<BigRational> {
    let mut cut = BigRational::zero();
    let mut out = Vec::with_capacity(lengths.len());
    for len in lengths {
        let next = &cut + len;
        out.push(density.integrate(&cut, &next));
        cut = next;
    }
    out
}

/// Grid check of the hungriness condition: for every hyperplane complement
/// `G` and every partition on the grid, some guest in `G` must weakly prefer
/// a positive-length piece. Returns the first violation.
pub fn cake_hungry_violation(
    guests: &[PiecewiseDensity],
    pieces: usize,
    matroid: &Matroid,
    resolution: u32,
) -> Option<(Vec<usize>, Vec<BigRational>)> {
    let res = BigRational::from_integer((resolution as i64).into());
    for hp in matroid.hyperplanes() {
        let complement = matroid.ground_set().minus(hp.elements);
        let mut violation = None;
        for_each_composition(resolution, pieces, &mut |weights| {
            if violation.is_some() {
                return;
            }
            let lengths: Vec<BigRational> = weights
                .iter()
                .map(|&w| BigRational::from_integer((w as i64).into()) / &res)
                .collect();
            let ok = complement.iter().any(|j| {
                let values = piece_values(&guests[j.0], &lengths);
                let best = values.iter().max().unwrap().clone();
                values
                    .iter()
                    .zip(&lengths)
                    .any(|(v, len)| *v == best && len.is_positive())
            });
            if !ok {
                violation = Some(lengths);
            }
        });
        if let Some(lengths) = violation {
            return Some((complement.iter().map(|e| e.0).collect(), lengths));
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Random valid vertex-only covers for property tests and demos.

/// Generates a random valid vertex-only cover spec for the given polytope
/// and matroid.
///
/// Base cells are nearest-vertex (Voronoi) regions, which cover every face
/// by the sets of its own vertices; random enlargements and per-element
/// deletions are applied, with deletions repaired so every hyperplane
/// complement still covers every vertex cell.
pub fn generate_vertex_cover_spec<R: rand::Rng>(
    poly: &Polytope,
    matroid: &Matroid,
    rng: &mut R,
) -> CoverSpec {
    let n = matroid.ground_size();
    let nv = poly.num_vertices();
    let diam_sq = poly.diameter_sq();
    let slacks = [
        BigRational::zero(),
        &diam_sq / BigRational::from_integer(16.into()),
        &diam_sq / BigRational::from_integer(8.into()),
    ];
    let mut deleted = vec![vec![false; nv]; n];
    for row in deleted.iter_mut() {
        for d in row.iter_mut() {
            *d = rng.gen_bool(0.3);
        }
    }
    // Repair: every hyperplane complement needs a live cell at every vertex.
    for hp in matroid.hyperplanes() {
        let complement = matroid.ground_set().minus(hp.elements);
        for v in 0..nv {
            if complement.iter().all(|w| deleted[w.0][v]) {
                let keep = complement.iter().next().expect("nonempty complement");
                deleted[keep.0][v] = false;
            }
        }
    }
    let mut sets = Vec::new();
    for w in 0..n {
        for v in 0..nv {
            if deleted[w][v] {
                continue;
            }
            let pv = poly.vertex(v);
            let halfspaces: Vec<Halfspace> = (0..nv)
                .filter(|&u| u != v)
                .map(|u| {
                    let pu = poly.vertex(u);
                    let slack = slacks[rng.gen_range(0..slacks.len())].clone();
                    // dist(x,v)^2 <= dist(x,u)^2 + slack
                    let normal: Vec<BigRational> = pv
                        .sub(pu)
                        .coords
                        .iter()
                        .map(|c| c * BigRational::from_integer(2.into()))
                        .collect();
                    let offset = pv.dot(pv) - pu.dot(pu) - slack;
                    Halfspace { normal, offset }
                })
                .collect();
            sets.push(KkmSetEntry {
                w,
                vertex: v,
                halfspaces,
            });
        }
    }
    CoverSpec::KkmVertex { sets }
}

/// Empties every set of `G = complement(hyperplane_idx)` at one polytope
/// vertex, leaving that corner uncovered: a deliberate validation gap.
pub fn mutate_cover_spec_with_gap(
    spec: &CoverSpec,
    matroid: &Matroid,
    ambient_dim: usize,
    hyperplane_idx: usize,
    vertex: usize,
) -> CoverSpec {
    let hp = matroid.hyperplanes()[hyperplane_idx];
    let complement = matroid.ground_set().minus(hp.elements);
    let never = Halfspace {
        normal: vec![BigRational::zero(); ambient_dim],
        offset: BigRational::one(),
    };
    match spec {
        CoverSpec::KkmVertex { sets } => CoverSpec::KkmVertex {
            sets: sets
                .iter()
                .map(|s| {
                    let mut s = s.clone();
                    if s.vertex == vertex && complement.contains(Element(s.w)) {
                        s.halfspaces.push(never.clone());
                    }
                    s
                })
                .collect(),
        },
        CoverSpec::Explicit { entries } => CoverSpec::Explicit {
            entries: entries.clone(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PolytopeSpec;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    /// Two halfspace sets on the segment: `{x1 >= 1/2}` at vertex 0 and
    /// `{x1 <= 1/2}` at vertex 1, for a rank-1 one-element matroid.
    fn segment_cover(shrunk: bool) -> CoverOracle {
        let poly = Polytope::simplex(2).unwrap();
        let matroid = Arc::new(Matroid::uniform(1, 1).unwrap());
        let threshold = if shrunk { rat(3, 4) } else { rat(1, 2) };
        let spec = CoverSpec::KkmVertex {
            sets: vec![
                KkmSetEntry {
                    w: 0,
                    vertex: 0,
                    halfspaces: vec![Halfspace {
                        normal: vec![rat(1, 1), rat(0, 1)],
                        offset: threshold,
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
            ],
        };
        CoverOracle::from_spec(poly, matroid, &spec).unwrap()
    }

    #[test]
    fn membership_on_segment_cover() {
        let c = segment_cover(false);
        let poly = Arc::clone(c.polytope());
        let mid = Point::parse(&["1/2", "1/2"]);
        let v0 = poly.vertex_face(0);
        let v1 = poly.vertex_face(1);
        // boundary point belongs to both closed sets
        assert!(c.member(Element(0), v0, &mid).unwrap());
        assert!(c.member(Element(0), v1, &mid).unwrap());
        // empty face: the improper face has no set
        assert!(!c.member(Element(0), poly.improper_face(), &mid).unwrap());
        // outside the polytope
        assert!(c.member(Element(0), v0, &Point::parse(&["2", "-1"])).is_err());
    }

    #[test]
    fn choose_label_deterministic_tie_break() {
        let c = segment_cover(false);
        let poly = Arc::clone(c.polytope());
        let mid = Point::parse(&["1/2", "1/2"]);
        let s = poly.supp(&mid).unwrap();
        let choice = c.choose_label(&mid, s, Subset::EMPTY).unwrap();
        // both vertex faces admit w=0; the smaller face id wins
        assert_eq!(choice.w, Element(0));
        assert_eq!(choice.tau, poly.vertex_face(0));
        let again = c.choose_label(&mid, s, Subset::EMPTY).unwrap();
        assert_eq!(choice, again);
    }

    #[test]
    fn choose_label_reports_no_label() {
        let c = segment_cover(false);
        let poly = Arc::clone(c.polytope());
        let mid = Point::parse(&["1/2", "1/2"]);
        let s = poly.supp(&mid).unwrap();
        let all = Subset::full(1);
        assert!(matches!(
            c.choose_label(&mid, s, all),
            Err(CoverError::NoLabel { .. })
        ));
    }

    #[test]
    fn validator_passes_segment_and_catches_gap() {
        let good = segment_cover(false);
        let report = good.validate_mkomiya(8);
        assert!(report.pass);

        let bad = segment_cover(true);
        let report = bad.validate_mkomiya(10);
        assert!(!report.pass);
        let v = report.violation.unwrap();
        // gap (1/2, 3/4) is on the improper face
        assert_eq!(v.face, bad.polytope().improper_face().0);
        let x1 = &v.sample.coords[0];
        assert!(*x1 > rat(1, 2) && *x1 < rat(3, 4), "sample {}", v.sample);
    }

    #[test]
    fn cake_cover_uniform_guests() {
        let matroid = Arc::new(Matroid::uniform(2, 2).unwrap());
        let guests = vec![PiecewiseDensity::uniform(), PiecewiseDensity::uniform()];
        let c = CoverOracle::cake(guests, 2, matroid).unwrap();
        let poly = Arc::clone(c.polytope());
        // x1 >= 1/2 makes piece 1 weakly preferred for a uniform guest
        let p = Point::parse(&["2/3", "1/3"]);
        assert!(c.member_unchecked(Element(0), poly.vertex_face(0), &p));
        assert!(!c.member_unchecked(Element(0), poly.vertex_face(1), &p));
        let mid = Point::parse(&["1/2", "1/2"]);
        assert!(c.member_unchecked(Element(1), poly.vertex_face(0), &mid));
        assert!(c.member_unchecked(Element(1), poly.vertex_face(1), &mid));
        assert!(c.validate_mkomiya(8).pass);
    }

    #[test]
    fn cake_hungriness_grid_check() {
        let guests = vec![PiecewiseDensity::uniform(), PiecewiseDensity::uniform()];
        let m = Matroid::uniform(2, 2).unwrap();
        assert!(cake_hungry_violation(&guests, 2, &m, 8).is_none());

        // Weak preference sets are argmax sets, and an argmax over pieces
        // always includes a positive-length piece (ties at zero include
        // every piece). So even a guest who values nothing stays hungry.
        let apathetic = PiecewiseDensity { segments: vec![] };
        let guests = vec![apathetic.clone(), apathetic];
        let m = Matroid::uniform(2, 2).unwrap();
        assert!(cake_hungry_violation(&guests, 2, &m, 4).is_none());
    }

    #[test]
    fn piecewise_integration_is_exact() {
        let d = PiecewiseDensity {
            segments: vec![
                DensitySegment {
                    from: rat(0, 1),
                    to: rat(1, 2),
                    start_value: rat(0, 1),
                    end_value: rat(2, 1),
                },
                DensitySegment {
                    from: rat(1, 2),
                    to: rat(1, 1),
                    start_value: rat(2, 1),
                    end_value: rat(2, 1),
                },
            ],
        };
        assert!(d.validate().is_ok());
        // triangle area 1/2 + rectangle area 1
        assert_eq!(d.integrate(&rat(0, 1), &rat(1, 1)), rat(3, 2));
        // sub-interval of the ramp: integral of 4x on [1/4, 1/2] is 3/16...
        // density(x) = 4x on [0,1/2]: value_at(1/4)=1, value_at(1/2)=2
        assert_eq!(d.integrate(&rat(1, 4), &rat(1, 2)), rat(3, 8));
        assert_eq!(d.integrate(&rat(3, 4), &rat(1, 2)), rat(0, 1));
    }

    #[test]
    fn density_validation_rejects_bad_segments() {
        let neg = PiecewiseDensity {
            segments: vec![DensitySegment {
                from: rat(0, 1),
                to: rat(1, 1),
                start_value: rat(-1, 1),
                end_value: rat(1, 1),
            }],
        };
        assert!(neg.validate().is_err());
        let overlap = PiecewiseDensity {
            segments: vec![
                DensitySegment {
                    from: rat(0, 1),
                    to: rat(2, 3),
                    start_value: rat(1, 1),
                    end_value: rat(1, 1),
                },
                DensitySegment {
                    from: rat(1, 2),
                    to: rat(1, 1),
                    start_value: rat(1, 1),
                    end_value: rat(1, 1),
                },
            ],
        };
        assert!(overlap.validate().is_err());
    }

    #[test]
    fn caratheodory_cover_ray_sets() {
        let poly = Polytope::regular_polygon(16, &rat(1, 1)).unwrap();
        let matroid = Arc::new(Matroid::uniform(3, 3).unwrap());
        let points = vec![
            Point::from_ints(&[1, 0]),
            Point::from_ints(&[-1, 1]),
            Point::from_ints(&[-1, -1]),
        ];
        let c = CoverOracle::caratheodory(&points, Arc::clone(&poly), matroid).unwrap();
        // v = (1,0): the ray hits vertex 0 of the polygon (at angle 0) and
        // both incident edges; y there is the vertex itself
        let v0_face = poly.vertex_face(0);
        assert!(c.is_ray_hit(Element(0), v0_face));
        assert_eq!(c.y_point(Element(0), v0_face), *poly.vertex(0));
        // membership on a ray face is the halfspace <x, v> >= 0
        assert!(c.member_unchecked(Element(0), v0_face, &Point::parse(&["1/2", "0"])));
        assert!(!c.member_unchecked(Element(0), v0_face, &Point::parse(&["-1/2", "0"])));
        // improper face is empty
        assert!(!c.member_unchecked(Element(0), poly.improper_face(), &Point::origin(2)));
    }

    #[test]
    fn caratheodory_cover_validates_when_hypothesis_holds() {
        // Three antipodal pairs with a rank-3 uniform matroid: deleting any
        // two points leaves an antipodal pair, so every 4-subset (every
        // hyperplane complement) holds the origin in its hull.
        let poly = Polytope::regular_polygon(16, &rat(1, 1)).unwrap();
        let matroid = Arc::new(Matroid::uniform(6, 3).unwrap());
        let points = vec![
            Point::from_ints(&[1, 0]),
            Point::from_ints(&[-1, 0]),
            Point::from_ints(&[0, 1]),
            Point::from_ints(&[0, -1]),
            Point::from_ints(&[1, 1]),
            Point::from_ints(&[-1, -1]),
        ];
        let c = CoverOracle::caratheodory(&points, poly, matroid).unwrap();
        assert!(c.validate_mkomiya(4).pass);
    }

    #[test]
    fn caratheodory_rejects_bad_inputs() {
        let poly = Polytope::regular_polygon(16, &rat(1, 1)).unwrap();
        let m3 = Arc::new(Matroid::uniform(1, 1).unwrap());
        let with_origin = vec![Point::origin(2)];
        assert!(CoverOracle::caratheodory(&with_origin, Arc::clone(&poly), m3).is_err());

        // square facets span 90 degrees: inner product of adjacent corners
        // is negative
        let square = Polytope::explicit(vec![
            Point::from_ints(&[-1, -1]),
            Point::from_ints(&[1, -1]),
            Point::from_ints(&[1, 1]),
            Point::from_ints(&[-1, 1]),
        ])
        .unwrap();
        let m1 = Arc::new(Matroid::uniform(1, 1).unwrap());
        assert!(CoverOracle::caratheodory(
            &[Point::from_ints(&[1, 0])],
            square,
            m1
        )
        .is_err());
    }

    #[test]
    fn generated_covers_validate() {
        let mut rng = StdRng::seed_from_u64(42);
        let polys = [
            Polytope::simplex(3).unwrap(),
            Polytope::from_spec(&PolytopeSpec::RegularPolygon {
                m: 8,
                radius: rat(1, 1),
            })
            .unwrap(),
        ];
        for poly in &polys {
            for _ in 0..4 {
                let matroid = Matroid::uniform(4, poly.dim() + 1).unwrap();
                let spec = generate_vertex_cover_spec(poly, &matroid, &mut rng);
                let c =
                    CoverOracle::from_spec(Arc::clone(poly), Arc::new(matroid), &spec).unwrap();
                assert!(c.validate_mkomiya(3).pass);
            }
        }
    }

    #[test]
    fn mutated_covers_fail_validation() {
        let mut rng = StdRng::seed_from_u64(43);
        let poly = Polytope::simplex(3).unwrap();
        let matroid = Matroid::uniform(4, 3).unwrap();
        let spec = generate_vertex_cover_spec(&poly, &matroid, &mut rng);
        let mutated = mutate_cover_spec_with_gap(&spec, &matroid, poly.ambient_dim(), 0, 1);
        let matroid = Arc::new(matroid);
        let c = CoverOracle::from_spec(Arc::clone(&poly), matroid, &mutated).unwrap();
        let report = c.validate_mkomiya(2);
        assert!(!report.pass);
        assert!(report.violation.is_some());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = CoverSpec::KkmVertex {
            sets: vec![KkmSetEntry {
                w: 0,
                vertex: 1,
                halfspaces: vec![Halfspace {
                    normal: vec![rat(1, 1), rat(0, 1)],
                    offset: rat(1, 2),
                }],
            }],
        };
        let js = serde_json::to_string(&spec).unwrap();
        assert!(js.contains("kkm_vertex"));
        let back: CoverSpec = serde_json::from_str(&js).unwrap();
        let poly = Polytope::simplex(2).unwrap();
        let m = Arc::new(Matroid::uniform(1, 1).unwrap());
        assert!(CoverOracle::from_spec(poly, m, &back).is_ok());
    }
}
