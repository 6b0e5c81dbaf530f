//! Exact-rational geometry: points, polytopes with explicit face lattices,
//! minimal-face queries and convex-hull membership certificates.
//!
//! Every predicate here is exact over the rationals; no epsilon anywhere.

use std::fmt;
use std::sync::Arc;

use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ratio::{parse_rational, serde_rational, serde_rational_vec};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degenerate vertex list: {0}")]
    Degenerate(String),
    #[error("explicit polytopes support ambient dimension <= 3, got {0}")]
    AmbientTooLarge(usize),
    #[error("point lies outside the polytope")]
    PointOutside,
    #[error("polygon needs at least 3 vertices, got {0}")]
    PolygonTooSmall(usize),
    #[error("polygon radius must be positive")]
    BadRadius,
    #[error("simplex needs k >= 1")]
    BadSimplex,
}

/// A point with exact rational coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point {
    #[serde(with = "serde_rational_vec")]
    pub coords: Vec<BigRational>,
}

impl Point {
    pub fn new(coords: Vec<BigRational>) -> Self {
        Point { coords }
    }

    pub fn from_ints(coords: &[i64]) -> Self {
        Point {
            coords: coords
                .iter()
                .map(|&c| BigRational::from_integer(c.into()))
                .collect(),
        }
    }

    pub fn parse(texts: &[&str]) -> Self {
        Point {
            coords: texts.iter().map(|t| parse_rational(t).unwrap()).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn origin(dim: usize) -> Self {
        Point {
            coords: vec![BigRational::zero(); dim],
        }
    }

    pub fn sub(&self, other: &Point) -> Point {
        Point {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn dot(&self, other: &Point) -> BigRational {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn dist_sq(&self, other: &Point) -> BigRational {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| {
                let d = a - b;
                &d * &d
            })
            .sum()
    }

    pub fn scale(&self, factor: &BigRational) -> Point {
        Point {
            coords: self.coords.iter().map(|c| c * factor).collect(),
        }
    }

    /// Equal-weight average of a nonempty point list.
    pub fn barycenter<'a, I: IntoIterator<Item = &'a Point>>(points: I) -> Point {
        let mut iter = points.into_iter();
        let first = iter.next().expect("barycenter of empty list");
        let mut sum = first.coords.clone();
        let mut count = 1usize;
        for p in iter {
            for (s, c) in sum.iter_mut().zip(&p.coords) {
                *s += c;
            }
            count += 1;
        }
        let n = BigRational::from_integer((count as i64).into());
        Point {
            coords: sum.into_iter().map(|c| c / &n).collect(),
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Identifier of a face within a polytope's lattice.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct FaceId(pub usize);

impl fmt::Display for FaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F{}", self.0)
    }
}

/// A face of a polytope, described by the polytope vertices lying on it.
#[derive(Debug, Clone)]
pub struct Face {
    pub id: FaceId,
    pub verts: Vec<usize>,
    pub mask: u64,
    pub dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PolyKind {
    Simplex,
    General,
}

/// JSON shape for constructing polytopes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolytopeSpec {
    Simplex {
        k: usize,
    },
    RegularPolygon {
        m: usize,
        #[serde(with = "serde_rational")]
        radius: BigRational,
    },
    Explicit {
        vertices: Vec<VertexSpec>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexSpec(#[serde(with = "serde_rational_vec")] pub Vec<BigRational>);

/// A convex polytope with vertices and a complete face lattice.
///
/// Faces are sorted by (dimension, lexicographic vertex set); the improper
/// face (the polytope itself) carries the largest id.
#[derive(Debug)]
pub struct Polytope {
    vertices: Vec<Point>,
    faces: Vec<Face>,
    vertex_face: Vec<FaceId>,
    subfaces: Vec<Vec<FaceId>>,
    barycenters: Vec<Point>,
    chart: Vec<usize>,
    ambient: usize,
    dim: usize,
    kind: PolyKind,
    /// Inward facet inequalities `<normal, x> >= offset`; together with the
    /// hull equations they decide membership in `P` quickly.
    facet_ineqs: Vec<(Point, BigRational)>,
    /// Affine-hull equations `<normal, x> = offset`.
    hull_eqs: Vec<(Point, BigRational)>,
}

impl Polytope {
    /// The standard simplex `conv{e_1, ..., e_k}` in `R^k`.
    pub fn simplex(k: usize) -> Result<Arc<Self>, GeometryError> {
        if k == 0 {
            return Err(GeometryError::BadSimplex);
        }
        let vertices: Vec<Point> = (0..k)
            .map(|i| {
                let mut coords = vec![BigRational::zero(); k];
                coords[i] = BigRational::one();
                Point::new(coords)
            })
            .collect();
        // Every nonempty vertex subset is a face.
        let mut masks: Vec<u64> = (1..(1u64 << k)).collect();
        masks.sort_by_key(|m| (m.count_ones(), *m));
        let faces = masks
            .into_iter()
            .enumerate()
            .map(|(id, mask)| {
                let verts: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
                Face {
                    id: FaceId(id),
                    dim: verts.len() - 1,
                    verts,
                    mask,
                }
            })
            .collect();
        // x in P  <=>  sum x_i = 1 and x_i >= 0
        let hull_eqs = vec![(
            Point::new(vec![BigRational::one(); k]),
            BigRational::one(),
        )];
        let facet_ineqs = (0..k)
            .map(|i| {
                let mut n = vec![BigRational::zero(); k];
                n[i] = BigRational::one();
                (Point::new(n), BigRational::zero())
            })
            .collect();
        Ok(Arc::new(Self::assemble(
            vertices,
            faces,
            PolyKind::Simplex,
            facet_ineqs,
            hull_eqs,
        )))
    }

    /// A convex polygon with `m` rational vertices at approximately uniform
    /// angles on the circle of the given radius.
    ///
    /// Exactly regular polygons do not exist over the rationals; vertices
    /// are rounded onto a small common denominator to keep downstream
    /// arithmetic cheap. For `m >= 8` any two points on a common edge have
    /// nonnegative inner product, checked exactly.
    pub fn regular_polygon(m: usize, radius: &BigRational) -> Result<Arc<Self>, GeometryError> {
        if m < 3 {
            return Err(GeometryError::PolygonTooSmall(m));
        }
        if !radius.is_positive() {
            return Err(GeometryError::BadRadius);
        }
        const SCALE: i64 = 1 << 12;
        let denom = BigRational::from_integer(SCALE.into());
        let mut vertices = Vec::with_capacity(m);
        for j in 0..m {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
            let x = BigRational::from_integer(
                ((theta.cos() * SCALE as f64).round() as i64).into(),
            ) / &denom;
            let y = BigRational::from_integer(
                ((theta.sin() * SCALE as f64).round() as i64).into(),
            ) / &denom;
            vertices.push(Point::new(vec![x * radius, y * radius]));
        }
        let poly = Self::explicit(vertices)?;
        if m >= 8 {
            debug_assert!(
                poly.min_adjacent_vertex_dot().map_or(true, |d| !d.is_negative()),
                "inscribed polygon lost the facet inner-product property"
            );
        }
        Ok(poly)
    }

    /// A polytope from an explicit vertex list, ambient dimension <= 3.
    /// Every input point must be a vertex (extreme point) of the hull and
    /// the hull must be full-dimensional in its ambient space.
    pub fn explicit(vertices: Vec<Point>) -> Result<Arc<Self>, GeometryError> {
        if vertices.is_empty() {
            return Err(GeometryError::Degenerate("no vertices".into()));
        }
        let ambient = vertices[0].dim();
        if ambient > 3 {
            return Err(GeometryError::AmbientTooLarge(ambient));
        }
        if vertices.iter().any(|v| v.dim() != ambient) {
            return Err(GeometryError::DimensionMismatch {
                expected: ambient,
                got: vertices.iter().map(Point::dim).find(|&d| d != ambient).unwrap(),
            });
        }
        if vertices.len() > 64 {
            return Err(GeometryError::Degenerate(
                "more than 64 vertices".into(),
            ));
        }
        for (i, v) in vertices.iter().enumerate() {
            if vertices[..i].contains(v) {
                return Err(GeometryError::Degenerate(format!(
                    "duplicate vertex at index {i}"
                )));
            }
        }
        if affine_rank(&vertices) != ambient {
            return Err(GeometryError::Degenerate(
                "hull is not full-dimensional in its ambient space".into(),
            ));
        }
        for i in 0..vertices.len() {
            let others: Vec<Point> = vertices
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, p)| p.clone())
                .collect();
            if conv_contains(&others, &vertices[i])?.is_some() {
                return Err(GeometryError::Degenerate(format!(
                    "input point {i} is not an extreme point"
                )));
            }
        }

        let facet_data = enumerate_facets(&vertices, ambient)?;
        let facets: Vec<u64> = facet_data.iter().map(|(mask, _, _)| *mask).collect();
        let facet_ineqs: Vec<(Point, BigRational)> = facet_data
            .into_iter()
            .map(|(_, normal, offset)| (normal, offset))
            .collect();
        // Close the facet vertex sets under intersection; in a polytope the
        // vertex set of a face intersection is the intersection of vertex sets.
        let mut masks: Vec<u64> = facets.clone();
        masks.push((1u64 << vertices.len()) - 1); // improper face
        for i in 0..vertices.len() {
            masks.push(1u64 << i);
        }
        loop {
            let mut added = false;
            let snapshot = masks.clone();
            for (a, b) in snapshot.iter().tuple_combinations() {
                let c = a & b;
                if c != 0 && !masks.contains(&c) {
                    masks.push(c);
                    added = true;
                }
            }
            if !added {
                break;
            }
        }
        masks.sort_unstable();
        masks.dedup();
        let mut faces: Vec<(u64, usize)> = masks
            .into_iter()
            .map(|mask| {
                let pts: Vec<Point> = (0..vertices.len())
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| vertices[i].clone())
                    .collect();
                (mask, affine_rank(&pts))
            })
            .collect();
        faces.sort_by_key(|&(mask, dim)| (dim, mask_verts(mask)));
        let faces: Vec<Face> = faces
            .into_iter()
            .enumerate()
            .map(|(id, (mask, dim))| Face {
                id: FaceId(id),
                verts: mask_verts(mask),
                mask,
                dim,
            })
            .collect();
        Ok(Arc::new(Self::assemble(
            vertices,
            faces,
            PolyKind::General,
            facet_ineqs,
            Vec::new(),
        )))
    }

    pub fn from_spec(spec: &PolytopeSpec) -> Result<Arc<Self>, GeometryError> {
        match spec {
            PolytopeSpec::Simplex { k } => Self::simplex(*k),
            PolytopeSpec::RegularPolygon { m, radius } => Self::regular_polygon(*m, radius),
            PolytopeSpec::Explicit { vertices } => {
                Self::explicit(vertices.iter().map(|v| Point::new(v.0.clone())).collect())
            }
        }
    }

    fn assemble(
        vertices: Vec<Point>,
        faces: Vec<Face>,
        kind: PolyKind,
        facet_ineqs: Vec<(Point, BigRational)>,
        hull_eqs: Vec<(Point, BigRational)>,
    ) -> Self {
        let ambient = vertices[0].dim();
        let dim = faces.last().map_or(0, |f| f.dim);
        let mut vertex_face = vec![FaceId(usize::MAX); vertices.len()];
        for f in &faces {
            if f.dim == 0 {
                vertex_face[f.verts[0]] = f.id;
            }
        }
        let subfaces: Vec<Vec<FaceId>> = faces
            .iter()
            .map(|f| {
                faces
                    .iter()
                    .filter(|g| g.mask & !f.mask == 0)
                    .map(|g| g.id)
                    .collect()
            })
            .collect();
        let barycenters = faces
            .iter()
            .map(|f| Point::barycenter(f.verts.iter().map(|&i| &vertices[i])))
            .collect();
        let chart = find_chart(&vertices, dim);
        Polytope {
            vertices,
            faces,
            vertex_face,
            subfaces,
            barycenters,
            chart,
            ambient,
            dim,
            kind,
            facet_ineqs,
            hull_eqs,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertex(&self, i: usize) -> &Point {
        &self.vertices[i]
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Intrinsic dimension of the polytope.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn face(&self, id: FaceId) -> &Face {
        &self.faces[id.0]
    }

    pub fn improper_face(&self) -> FaceId {
        FaceId(self.faces.len() - 1)
    }

    /// The 0-face carrying the given vertex.
    pub fn vertex_face(&self, vertex: usize) -> FaceId {
        self.vertex_face[vertex]
    }

    /// Subfaces of `id` (including `id`), sorted by id = (dim, lex).
    pub fn subfaces(&self, id: FaceId) -> &[FaceId] {
        &self.subfaces[id.0]
    }

    pub fn is_subface(&self, a: FaceId, b: FaceId) -> bool {
        self.faces[a.0].mask & !self.faces[b.0].mask == 0
    }

    /// Smallest face containing both faces' vertex sets.
    pub fn join(&self, a: FaceId, b: FaceId) -> FaceId {
        let target = self.faces[a.0].mask | self.faces[b.0].mask;
        self.faces
            .iter()
            .find(|f| target & !f.mask == 0)
            .map(|f| f.id)
            .expect("face lattice has a top element")
    }

    pub fn face_by_mask(&self, mask: u64) -> Option<FaceId> {
        self.faces.iter().find(|f| f.mask == mask).map(|f| f.id)
    }

    pub fn face_barycenter(&self, id: FaceId) -> &Point {
        &self.barycenters[id.0]
    }

    /// Exact test whether `x` lies on face `id`.
    pub fn face_contains(&self, id: FaceId, x: &Point) -> bool {
        let f = &self.faces[id.0];
        match f.dim {
            0 => self.vertices[f.verts[0]] == *x,
            1 => point_on_segment(&self.vertices[f.verts[0]], &self.vertices[f.verts[1]], x),
            _ if id == self.improper_face() => self.contains(x),
            _ => {
                let pts: Vec<Point> =
                    f.verts.iter().map(|&i| self.vertices[i].clone()).collect();
                matches!(conv_contains(&pts, x), Ok(Some(_)))
            }
        }
    }

    /// Membership in `P` by the affine-hull equations and inward facet
    /// inequalities.
    pub fn contains(&self, x: &Point) -> bool {
        x.dim() == self.ambient
            && self.hull_eqs.iter().all(|(n, b)| n.dot(x) == *b)
            && self.facet_ineqs.iter().all(|(n, b)| n.dot(x) >= *b)
    }

    /// The minimal face containing `x`; errors if `x` is outside.
    pub fn supp(&self, x: &Point) -> Result<FaceId, GeometryError> {
        if x.dim() != self.ambient {
            return Err(GeometryError::DimensionMismatch {
                expected: self.ambient,
                got: x.dim(),
            });
        }
        if self.kind == PolyKind::Simplex {
            // On the standard simplex the minimal face is the support pattern.
            let mut mask = 0u64;
            let mut sum = BigRational::zero();
            for (i, c) in x.coords.iter().enumerate() {
                if c.is_negative() {
                    return Err(GeometryError::PointOutside);
                }
                if !c.is_zero() {
                    mask |= 1u64 << i;
                }
                sum += c;
            }
            if !sum.is_one() || mask == 0 {
                return Err(GeometryError::PointOutside);
            }
            return Ok(self.face_by_mask(mask).expect("simplex face"));
        }
        // Faces are sorted by dimension; the first hit is the minimal face.
        self.faces
            .iter()
            .find(|f| self.face_contains(f.id, x))
            .map(|f| f.id)
            .ok_or(GeometryError::PointOutside)
    }

    /// Max squared distance between vertices.
    pub fn diameter_sq(&self) -> BigRational {
        let mut best = BigRational::zero();
        for (a, b) in self.vertices.iter().tuple_combinations() {
            let d = a.dist_sq(b);
            if d > best {
                best = d;
            }
        }
        best
    }

    /// Minimum inner product between adjacent vertices of a 2-polytope;
    /// `None` when the polytope has no edges.
    pub fn min_adjacent_vertex_dot(&self) -> Option<BigRational> {
        self.faces
            .iter()
            .filter(|f| f.dim == 1)
            .map(|f| self.vertices[f.verts[0]].dot(&self.vertices[f.verts[1]]))
            .min()
    }

    /// Coordinate subset giving an injective chart on the affine hull;
    /// used for exact volume bookkeeping in tests.
    pub fn chart(&self) -> &[usize] {
        &self.chart
    }
}

fn mask_verts(mask: u64) -> Vec<usize> {
    (0..64).filter(|i| mask >> i & 1 == 1).collect()
}

/// First (lex) coordinate subset of size `dim` on which the affine hull of
/// the vertices projects bijectively.
fn find_chart(vertices: &[Point], dim: usize) -> Vec<usize> {
    if dim == 0 {
        return Vec::new();
    }
    let ambient = vertices[0].dim();
    for combo in (0..ambient).combinations(dim) {
        let rows: Vec<Vec<BigRational>> = vertices[1..]
            .iter()
            .map(|p| {
                combo
                    .iter()
                    .map(|&c| &p.coords[c] - &vertices[0].coords[c])
                    .collect()
            })
            .collect();
        if rational_rank(&rows) == dim {
            return combo;
        }
    }
    unreachable!("affine hull of dimension {dim} must project onto some chart")
}

/// Affine rank = dimension of the affine hull of the points.
pub fn affine_rank(points: &[Point]) -> usize {
    if points.len() <= 1 {
        return 0;
    }
    let rows: Vec<Vec<BigRational>> = points[1..]
        .iter()
        .map(|p| p.sub(&points[0]).coords)
        .collect();
    rational_rank(&rows)
}

fn rational_rank(rows: &[Vec<BigRational>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let mut m = rows.to_vec();
    let ncols = m[0].len();
    let mut rank = 0;
    for col in 0..ncols {
        let Some(p) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        for r in rank + 1..m.len() {
            if !m[r][col].is_zero() {
                let factor = &m[r][col] / &m[rank][col];
                for c in col..ncols {
                    let sub = &factor * &m[rank][c];
                    m[r][c] = &m[r][c] - sub;
                }
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

/// Exact point-on-segment test: collinearity via vanishing 2x2 minors plus a
/// parameter range check.
fn point_on_segment(p: &Point, q: &Point, x: &Point) -> bool {
    let v = q.sub(p);
    let w = x.sub(p);
    let d = v.dim();
    for i in 0..d {
        for j in i + 1..d {
            if &v.coords[i] * &w.coords[j] != &v.coords[j] * &w.coords[i] {
                return false;
            }
        }
    }
    let t = w.dot(&v);
    !t.is_negative() && t <= v.dot(&v)
}

/// Facets of a full-dimensional hull by brute-force supporting-hyperplane
/// enumeration over `d`-subsets: vertex masks with inward-oriented
/// inequalities `<normal, x> >= offset`.
fn enumerate_facets(
    vertices: &[Point],
    ambient: usize,
) -> Result<Vec<(u64, Point, BigRational)>, GeometryError> {
    if ambient == 0 {
        return Ok(vec![]);
    }
    let mut facets: Vec<(u64, Point, BigRational)> = Vec::new();
    for combo in (0..vertices.len()).combinations(ambient) {
        let pts: Vec<Point> = combo.iter().map(|&i| vertices[i].clone()).collect();
        if affine_rank(&pts) != ambient - 1 {
            continue;
        }
        let Some(mut normal) = hyperplane_normal(&pts, ambient) else {
            continue;
        };
        let base = pts[0].clone();
        let mut pos = false;
        let mut neg = false;
        let mut on = 0u64;
        for (i, v) in vertices.iter().enumerate() {
            let side = normal.dot(&v.sub(&base));
            if side.is_positive() {
                pos = true;
            } else if side.is_negative() {
                neg = true;
            } else {
                on |= 1u64 << i;
            }
        }
        if pos && neg {
            continue;
        }
        if neg {
            normal = normal.scale(&-BigRational::one());
        }
        if !facets.iter().any(|(m, _, _)| *m == on) {
            let offset = normal.dot(&base);
            facets.push((on, normal, offset));
        }
    }
    if facets.is_empty() {
        return Err(GeometryError::Degenerate("no supporting facets found".into()));
    }
    Ok(facets)
}

/// A nonzero vector orthogonal to the affine hull of `d` points spanning a
/// hyperplane in `R^d`.
fn hyperplane_normal(pts: &[Point], ambient: usize) -> Option<Point> {
    let rows: Vec<Vec<BigRational>> = pts[1..].iter().map(|p| p.sub(&pts[0]).coords).collect();
    // Solve rows * n = 0 for a nonzero n via elimination.
    let mut m = rows;
    let mut pivot_cols = Vec::new();
    let mut rank = 0;
    for col in 0..ambient {
        let Some(p) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let inv = m[rank][col].clone();
        for c in 0..ambient {
            m[rank][c] = &m[rank][c] / &inv;
        }
        for r in 0..m.len() {
            if r != rank && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for c in 0..ambient {
                    let sub = &factor * &m[rank][c];
                    m[r][c] = &m[r][c] - sub;
                }
            }
        }
        pivot_cols.push(col);
        rank += 1;
    }
    let free_col = (0..ambient).find(|c| !pivot_cols.contains(c))?;
    let mut normal = vec![BigRational::zero(); ambient];
    normal[free_col] = BigRational::one();
    for (r, &pc) in pivot_cols.iter().enumerate() {
        normal[pc] = -m[r][free_col].clone();
    }
    Some(Point::new(normal))
}

/// Exact nonnegative barycentric weights for a hull membership.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HullCertificate {
    /// `(input point index, weight)`; weights are nonnegative and sum to one.
    #[serde(with = "serde_weight_pairs")]
    pub weights: Vec<(usize, BigRational)>,
}

mod serde_weight_pairs {
    use super::*;
    use crate::ratio::format_rational;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        v: &[(usize, BigRational)],
        s: S,
    ) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|(i, w)| (*i, format_rational(w))))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<Vec<(usize, BigRational)>, D::Error> {
        let pairs = Vec::<(usize, String)>::deserialize(d)?;
        pairs
            .into_iter()
            .map(|(i, w)| parse_rational(&w).map(|w| (i, w)).map_err(de::Error::custom))
            .collect()
    }
}

impl HullCertificate {
    /// Checks the certificate against the points it refers to.
    pub fn verify(&self, points: &[Point], target: &Point) -> bool {
        let mut sum = BigRational::zero();
        let mut combo = vec![BigRational::zero(); target.dim()];
        for (idx, w) in &self.weights {
            if w.is_negative() || *idx >= points.len() {
                return false;
            }
            sum += w;
            for (acc, c) in combo.iter_mut().zip(&points[*idx].coords) {
                *acc += w * c;
            }
        }
        sum.is_one() && combo == target.coords
    }
}

/// Decides `target in conv(points)` exactly, returning a certificate on
/// success.
///
/// Enumerates affinely independent subsets of size at most `dim + 1` in
/// (size, lexicographic) order and solves each barycentric system exactly, so
/// the first certificate found is deterministic.
pub fn conv_contains(
    points: &[Point],
    target: &Point,
) -> Result<Option<HullCertificate>, GeometryError> {
    let d = target.dim();
    if let Some(p) = points.iter().find(|p| p.dim() != d) {
        return Err(GeometryError::DimensionMismatch {
            expected: d,
            got: p.dim(),
        });
    }
    // Singletons first: exact match wins immediately.
    for (i, p) in points.iter().enumerate() {
        if p == target {
            return Ok(Some(HullCertificate {
                weights: vec![(i, BigRational::one())],
            }));
        }
    }
    for size in 2..=(d + 1).min(points.len()) {
        for combo in (0..points.len()).combinations(size) {
            let pts: Vec<&Point> = combo.iter().map(|&i| &points[i]).collect();
            if let Some(weights) = barycentric_solve(&pts, target) {
                if weights.iter().all(|w| !w.is_negative()) {
                    return Ok(Some(HullCertificate {
                        weights: combo.into_iter().zip(weights).collect(),
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// Independent hull-membership route used for cross-checks: triangulate and
/// test. Enumerates full-rank subsets and decides point-in-simplex purely by
/// determinant signs in a chart, with no linear solves. Slower than
/// [`conv_contains`] and certificate-free; intended as a second opinion.
pub fn hull_contains_by_triangulation(points: &[Point], target: &Point) -> bool {
    let mut all = points.to_vec();
    all.push(target.clone());
    let r = affine_rank(points);
    if affine_rank(&all) != r {
        return false; // target escapes the affine hull
    }
    if r == 0 {
        return points.iter().any(|p| p == target);
    }
    for combo in (0..points.len()).combinations(r + 1) {
        let pts: Vec<Point> = combo.iter().map(|&i| points[i].clone()).collect();
        if affine_rank(&pts) != r {
            continue;
        }
        if simplex_contains_det(&pts, target) {
            return true;
        }
    }
    false
}

/// Point-in-simplex by sign consistency of replacement determinants,
/// computed in a full-rank coordinate chart.
fn simplex_contains_det(simplex: &[Point], target: &Point) -> bool {
    let r = simplex.len() - 1;
    let d = target.dim();
    let chart: Vec<usize> = {
        let mut found = None;
        for combo in (0..d).combinations(r) {
            let rows: Vec<Vec<BigRational>> = simplex[1..]
                .iter()
                .map(|p| {
                    combo
                        .iter()
                        .map(|&c| &p.coords[c] - &simplex[0].coords[c])
                        .collect()
                })
                .collect();
            if rational_rank(&rows) == r {
                found = Some(combo);
                break;
            }
        }
        match found {
            Some(c) => c,
            None => return false,
        }
    };
    let chart_det = |replace: Option<usize>| -> BigRational {
        let rows: Vec<Vec<BigRational>> = simplex
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let src = if replace == Some(i) { target } else { p };
                let mut row: Vec<BigRational> =
                    chart.iter().map(|&c| src.coords[c].clone()).collect();
                row.push(BigRational::one());
                row
            })
            .collect();
        signed_determinant(rows)
    };
    let base = chart_det(None);
    if base.is_zero() {
        return false;
    }
    for i in 0..simplex.len() {
        let d_i = chart_det(Some(i));
        if d_i.is_zero() {
            continue;
        }
        if d_i.is_positive() != base.is_positive() {
            return false;
        }
    }
    true
}

fn signed_determinant(mut m: Vec<Vec<BigRational>>) -> BigRational {
    let n = m.len();
    let mut det = BigRational::one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return BigRational::zero();
        };
        if p != col {
            m.swap(col, p);
            det = -det;
        }
        let pivot = m[col][col].clone();
        det *= pivot.clone();
        for r in col + 1..n {
            if !m[r][col].is_zero() {
                let factor = &m[r][col] / &pivot;
                for c in col..n {
                    let sub = &factor * &m[col][c];
                    m[r][c] = &m[r][c] - sub;
                }
            }
        }
    }
    det
}

/// Unique barycentric coordinates of `target` over affinely independent
/// points; `None` if the points are affinely dependent or the system is
/// inconsistent.
fn barycentric_solve(pts: &[&Point], target: &Point) -> Option<Vec<BigRational>> {
    let d = target.dim();
    let s = pts.len();
    // Augmented system: coordinates plus the sum-to-one row.
    let mut m: Vec<Vec<BigRational>> = (0..d)
        .map(|row| {
            let mut r: Vec<BigRational> = pts.iter().map(|p| p.coords[row].clone()).collect();
            r.push(target.coords[row].clone());
            r
        })
        .collect();
    m.push(vec![BigRational::one(); s + 1]);

    let nrows = d + 1;
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; s];
    let mut rank = 0;
    for col in 0..s {
        let Some(p) = (rank..nrows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let inv = m[rank][col].clone();
        for c in 0..=s {
            m[rank][c] = &m[rank][c] / &inv;
        }
        for r in 0..nrows {
            if r != rank && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for c in 0..=s {
                    let sub = &factor * &m[rank][c];
                    m[r][c] = &m[r][c] - sub;
                }
            }
        }
        pivot_of_col[col] = Some(rank);
        rank += 1;
    }
    if rank < s {
        return None; // affinely dependent
    }
    // Inconsistent if any zero row has nonzero rhs.
    for r in rank..nrows {
        if !m[r][s].is_zero() {
            return None;
        }
    }
    Some(
        (0..s)
            .map(|col| m[pivot_of_col[col].unwrap()][s].clone())
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    pub(crate) fn square() -> Arc<Polytope> {
        Polytope::explicit(vec![
            Point::from_ints(&[-1, -1]),
            Point::from_ints(&[1, -1]),
            Point::from_ints(&[1, 1]),
            Point::from_ints(&[-1, 1]),
        ])
        .unwrap()
    }

    #[test]
    fn simplex_face_counts() {
        let p = Polytope::simplex(3).unwrap();
        assert_eq!(p.num_vertices(), 3);
        assert_eq!(p.faces().len(), 7);
        assert_eq!(p.faces().iter().filter(|f| f.dim == 0).count(), 3);
        assert_eq!(p.faces().iter().filter(|f| f.dim == 1).count(), 3);
        assert_eq!(p.faces().iter().filter(|f| f.dim == 2).count(), 1);
        assert_eq!(p.dim(), 2);
        assert_eq!(p.face(p.improper_face()).dim, 2);
    }

    #[test]
    fn polygon_counts_and_facet_property() {
        let p = Polytope::regular_polygon(16, &BigRational::one()).unwrap();
        assert_eq!(p.num_vertices(), 16);
        assert_eq!(p.faces().iter().filter(|f| f.dim == 1).count(), 16);
        assert_eq!(p.faces().len(), 33);
        // vertices stay within 1% of the circle
        for v in p.vertices() {
            let r2 = v.dot(v);
            assert!(r2 > rat(98, 100) && r2 < rat(102, 100), "radius^2 = {r2}");
        }
        assert!(!p.min_adjacent_vertex_dot().unwrap().is_negative());
        // contains the origin strictly inside
        assert_eq!(p.supp(&Point::from_ints(&[0, 0])).unwrap(), p.improper_face());
    }

    #[test]
    fn octagon_facet_property_holds() {
        let p = Polytope::regular_polygon(8, &rat(3, 2)).unwrap();
        assert!(!p.min_adjacent_vertex_dot().unwrap().is_negative());
    }

    #[test]
    fn square_lattice() {
        let p = square();
        assert_eq!(p.num_vertices(), 4);
        assert_eq!(p.faces().len(), 9);
        assert_eq!(p.faces().iter().filter(|f| f.dim == 1).count(), 4);
        // diagonal pairs are not faces
        assert!(p.face_by_mask(0b0101).is_none());
        assert!(p.face_by_mask(0b0011).is_some());
    }

    #[test]
    fn explicit_rejects_degenerate_inputs() {
        // interior point is not extreme
        assert!(Polytope::explicit(vec![
            Point::from_ints(&[0, 0]),
            Point::from_ints(&[2, 0]),
            Point::from_ints(&[0, 2]),
            Point::from_ints(&[2, 2]),
            Point::from_ints(&[1, 1]),
        ])
        .is_err());
        // collinear set is not full-dimensional
        assert!(Polytope::explicit(vec![
            Point::from_ints(&[0, 0]),
            Point::from_ints(&[1, 1]),
            Point::from_ints(&[2, 2]),
        ])
        .is_err());
        // 4d ambient rejected
        assert!(Polytope::explicit(vec![Point::from_ints(&[0, 0, 0, 0])]).is_err());
    }

    #[test]
    fn supp_on_simplex() {
        let p = Polytope::simplex(3).unwrap();
        let v = p.supp(&Point::parse(&["1", "0", "0"])).unwrap();
        assert_eq!(p.face(v).verts, vec![0]);
        let e = p.supp(&Point::parse(&["1/2", "1/2", "0"])).unwrap();
        assert_eq!(p.face(e).verts, vec![0, 1]);
        let f = p.supp(&Point::parse(&["1/3", "1/3", "1/3"])).unwrap();
        assert_eq!(f, p.improper_face());
        assert!(p.supp(&Point::parse(&["2", "0", "0"])).is_err());
    }

    #[test]
    fn supp_is_minimal_on_square() {
        let p = square();
        let corner = p.supp(&Point::from_ints(&[1, 1])).unwrap();
        assert_eq!(p.face(corner).dim, 0);
        let edge = p.supp(&Point::parse(&["1", "1/3"])).unwrap();
        assert_eq!(p.face(edge).dim, 1);
        let inner = p.supp(&Point::parse(&["1/5", "-2/5"])).unwrap();
        assert_eq!(inner, p.improper_face());
    }

    #[test]
    fn face_lattice_closed_under_intersection() {
        for p in [
            Polytope::simplex(4).unwrap(),
            square(),
            Polytope::regular_polygon(8, &BigRational::one()).unwrap(),
        ] {
            for (a, b) in p.faces().iter().tuple_combinations() {
                let c = a.mask & b.mask;
                if c != 0 {
                    assert!(
                        p.face_by_mask(c).is_some(),
                        "intersection {c:b} of faces missing"
                    );
                }
            }
        }
    }

    #[test]
    fn join_is_smallest_superface() {
        let p = square();
        let v0 = p.vertex_face(0);
        let v1 = p.vertex_face(1);
        let j = p.join(v0, v1);
        assert_eq!(p.face(j).verts, vec![0, 1]); // shared edge
        let v2 = p.vertex_face(2);
        assert_eq!(p.join(v0, v2), p.improper_face()); // diagonal
    }

    #[test]
    fn hull_certificates_are_exact() {
        let tri = vec![
            Point::from_ints(&[0, 0]),
            Point::from_ints(&[1, 0]),
            Point::from_ints(&[0, 1]),
        ];
        let centroid = Point::parse(&["1/3", "1/3"]);
        let cert = conv_contains(&tri, &centroid).unwrap().unwrap();
        assert!(cert.verify(&tri, &centroid));

        let seg = vec![Point::from_ints(&[0, 0]), Point::from_ints(&[1, 0])];
        assert!(conv_contains(&seg, &Point::from_ints(&[2, 0]))
            .unwrap()
            .is_none());

        let pts = vec![
            Point::from_ints(&[1, 0]),
            Point::from_ints(&[-1, 1]),
            Point::from_ints(&[-1, -1]),
        ];
        let origin = Point::origin(2);
        let cert = conv_contains(&pts, &origin).unwrap().unwrap();
        assert!(cert.verify(&pts, &origin));
        let w: Vec<BigRational> = cert.weights.iter().map(|(_, w)| w.clone()).collect();
        assert_eq!(w, vec![rat(1, 2), rat(1, 4), rat(1, 4)]);
    }

    #[test]
    fn hull_dimension_mismatch_errors() {
        let pts = vec![Point::from_ints(&[0, 0, 0])];
        assert!(conv_contains(&pts, &Point::from_ints(&[0, 0])).is_err());
    }

    #[test]
    fn conv_contains_agrees_with_det_oracle() {
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..200 {
            let d = rng.gen_range(1..=3);
            let n = rng.gen_range(1..=6);
            let points: Vec<Point> = (0..n)
                .map(|_| {
                    Point::new(
                        (0..d)
                            .map(|_| rat(rng.gen_range(-4..=4), rng.gen_range(1..=3)))
                            .collect(),
                    )
                })
                .collect();
            let target = Point::new(
                (0..d)
                    .map(|_| rat(rng.gen_range(-4..=4), rng.gen_range(1..=3)))
                    .collect(),
            );
            let via_cert = conv_contains(&points, &target).unwrap();
            let via_det = hull_contains_by_triangulation(&points, &target);
            assert_eq!(
                via_cert.is_some(),
                via_det,
                "points {points:?} target {target}"
            );
            if let Some(cert) = via_cert {
                assert!(cert.verify(&points, &target));
            }
        }
    }

    #[test]
    fn spec_round_trip() {
        let spec: PolytopeSpec =
            serde_json::from_str(r#"{"kind":"regular_polygon","m":12,"radius":"5/4"}"#).unwrap();
        let p = Polytope::from_spec(&spec).unwrap();
        assert_eq!(p.num_vertices(), 12);
        let js = serde_json::to_string(&spec).unwrap();
        let p2 = Polytope::from_spec(&serde_json::from_str(&js).unwrap()).unwrap();
        assert_eq!(p2.num_vertices(), 12);
    }
}
