//! Geometric triangulations of a polytope.
//!
//! Vertex ids are append-only: subdivision never renumbers, so labelings and
//! bookkeeping sets stay valid across refinements. Simplices live in a slab
//! with tombstones; a subdivision consumes the triangulation and returns the
//! refined one.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use itertools::Itertools;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::json;
use thiserror::Error;

use crate::geometry::{FaceId, Point, Polytope};
use crate::ratio::{format_rational, sqrt_upper_bound};

/// A face of the triangulation: a sorted, nonempty set of vertex ids that is
/// a subset of some maximal simplex.
pub type SimplexFace = Vec<u32>;

#[derive(Debug, Error)]
pub enum SimplicialError {
    #[error("the given vertex set is not a face of the triangulation")]
    NotAFace,
    #[error("star subdivision needs a face with at least 2 vertices")]
    FaceTooSmall,
    #[error("unknown or isolated vertex id {0}")]
    UnknownVertex(u32),
    #[error("polytope is not a simplex")]
    NotSimplex,
    #[error("invalid explicit triangulation: {0}")]
    BadExplicit(String),
}

#[derive(Debug, Clone, Copy)]
struct Simplex {
    verts: [u32; 4],
    len: u8,
    alive: bool,
}

impl Simplex {
    fn new(verts: &[u32]) -> Self {
        debug_assert!(verts.len() <= 4 && verts.windows(2).all(|w| w[0] < w[1]));
        let mut buf = [0u32; 4];
        buf[..verts.len()].copy_from_slice(verts);
        Simplex {
            verts: buf,
            len: verts.len() as u8,
            alive: true,
        }
    }

    fn verts(&self) -> &[u32] {
        &self.verts[..self.len as usize]
    }

    fn contains_all(&self, face: &[u32]) -> bool {
        face.iter().all(|v| self.verts().contains(v))
    }
}

/// A geometric simplicial subdivision of a polytope.
#[derive(Debug, Clone)]
pub struct Triangulation {
    poly: Arc<Polytope>,
    coords: Vec<Point>,
    supp: Vec<FaceId>,
    simplices: Vec<Simplex>,
    incident: Vec<Vec<u32>>,
    live: usize,
}

impl Triangulation {
    /// Barycentric subdivision of the face lattice: one vertex per nonempty
    /// face of `P` (polytope vertices keep their indices), one maximal
    /// simplex per maximal flag of faces.
    pub fn initial(poly: &Arc<Polytope>) -> Self {
        let coords: Vec<Point> = poly
            .faces()
            .iter()
            .map(|f| poly.face_barycenter(f.id).clone())
            .collect();
        let supp: Vec<FaceId> = poly.faces().iter().map(|f| f.id).collect();
        let mut tri = Triangulation {
            poly: Arc::clone(poly),
            coords,
            supp,
            simplices: Vec::new(),
            incident: vec![Vec::new(); poly.faces().len()],
            live: 0,
        };
        // Flags: chains of faces with dimensions 0..=dim(P), built by
        // descending from the improper face through subfaces in id order.
        let mut chain: Vec<u32> = vec![poly.improper_face().0 as u32];
        build_flags(poly, poly.improper_face(), &mut chain, &mut tri);
        tri
    }

    /// The trivial triangulation of a simplex polytope: the polytope itself
    /// as a single maximal simplex.
    pub fn trivial(poly: &Arc<Polytope>) -> Result<Self, SimplicialError> {
        let n = poly.num_vertices();
        if poly.faces().len() != (1usize << n) - 1 {
            return Err(SimplicialError::NotSimplex);
        }
        let coords: Vec<Point> = poly.vertices().to_vec();
        let supp: Vec<FaceId> = (0..n).map(|i| poly.vertex_face(i)).collect();
        let mut tri = Triangulation {
            poly: Arc::clone(poly),
            coords,
            supp,
            simplices: Vec::new(),
            incident: vec![Vec::new(); n],
            live: 0,
        };
        let all: Vec<u32> = (0..n as u32).collect();
        tri.push_simplex(&all);
        Ok(tri)
    }

    /// A triangulation from explicit vertices and maximal simplices.
    pub fn explicit(
        poly: &Arc<Polytope>,
        coords: Vec<Point>,
        simplices: Vec<Vec<u32>>,
    ) -> Result<Self, SimplicialError> {
        let dim = poly.dim();
        let mut supp = Vec::with_capacity(coords.len());
        for p in &coords {
            let f = poly
                .supp(p)
                .map_err(|e| SimplicialError::BadExplicit(format!("vertex outside polytope: {e}")))?;
            supp.push(f);
        }
        let n = coords.len();
        let mut tri = Triangulation {
            poly: Arc::clone(poly),
            coords,
            supp,
            simplices: Vec::new(),
            incident: vec![Vec::new(); n],
            live: 0,
        };
        for s in &simplices {
            let mut v = s.clone();
            v.sort_unstable();
            if v.len() != dim + 1 {
                return Err(SimplicialError::BadExplicit(format!(
                    "maximal simplex {v:?} must have {} vertices",
                    dim + 1
                )));
            }
            if v.iter().dedup().count() != v.len() || v.iter().any(|&i| i as usize >= n) {
                return Err(SimplicialError::BadExplicit(format!(
                    "bad vertex ids in {v:?}"
                )));
            }
            tri.push_simplex(&v);
        }
        Ok(tri)
    }

    fn push_simplex(&mut self, verts: &[u32]) -> u32 {
        let slot = self.simplices.len() as u32;
        self.simplices.push(Simplex::new(verts));
        for &v in verts {
            self.incident[v as usize].push(slot);
        }
        self.live += 1;
        slot
    }

    fn kill_simplex(&mut self, slot: u32) {
        let s = &mut self.simplices[slot as usize];
        debug_assert!(s.alive);
        s.alive = false;
        let verts: Vec<u32> = s.verts().to_vec();
        for v in verts {
            self.incident[v as usize].retain(|&x| x != slot);
        }
        self.live -= 1;
    }

    pub fn polytope(&self) -> &Arc<Polytope> {
        &self.poly
    }

    pub fn vertex_count(&self) -> usize {
        self.coords.len()
    }

    pub fn live_simplex_count(&self) -> usize {
        self.live
    }

    pub fn coords_of(&self, v: u32) -> &Point {
        &self.coords[v as usize]
    }

    pub fn supp_of(&self, v: u32) -> FaceId {
        self.supp[v as usize]
    }

    /// Iterates live maximal simplices in slab order.
    pub fn maximal_simplices(&self) -> impl Iterator<Item = &[u32]> {
        self.simplices.iter().filter(|s| s.alive).map(|s| s.verts())
    }

    /// Live maximal simplices containing the given vertex.
    pub fn star_of(&self, v: u32) -> impl Iterator<Item = &[u32]> + '_ {
        self.incident[v as usize]
            .iter()
            .map(|&slot| self.simplices[slot as usize].verts())
    }

    pub fn is_face(&self, face: &[u32]) -> bool {
        let Some(first) = face.first() else {
            return false;
        };
        if *first as usize >= self.incident.len() {
            return false;
        }
        self.incident[*first as usize]
            .iter()
            .any(|&slot| self.simplices[slot as usize].contains_all(face))
    }

    /// All faces (deduplicated, lex-sorted), optionally restricted to those
    /// containing a given vertex.
    pub fn enumerate_faces(
        &self,
        containing: Option<u32>,
    ) -> Result<BTreeSet<SimplexFace>, SimplicialError> {
        let mut out = BTreeSet::new();
        match containing {
            None => {
                for s in self.maximal_simplices() {
                    push_subsets(s, &mut out);
                }
            }
            Some(v) => {
                if v as usize >= self.incident.len() || self.incident[v as usize].is_empty() {
                    return Err(SimplicialError::UnknownVertex(v));
                }
                let mut buf = BTreeSet::new();
                for s in self.star_of(v) {
                    push_subsets(s, &mut buf);
                }
                out.extend(buf.into_iter().filter(|f| f.contains(&v)));
            }
        }
        Ok(out)
    }

    /// Star subdivision at a face `F` with at least two vertices: inserts the
    /// barycenter `b_F` and replaces every maximal simplex containing `F`
    /// with `|F|` simplices, each dropping one vertex of `F` in favor of
    /// `b_F`. Returns the refined triangulation and the new vertex id.
    pub fn star_subdivide(mut self, face: &[u32]) -> Result<(Self, u32), SimplicialError> {
        let mut face = face.to_vec();
        face.sort_unstable();
        if face.len() < 2 {
            return Err(SimplicialError::FaceTooSmall);
        }
        if !self.is_face(&face) {
            return Err(SimplicialError::NotAFace);
        }
        let bary = Point::barycenter(face.iter().map(|&v| &self.coords[v as usize]));
        let supp = face
            .iter()
            .map(|&v| self.supp[v as usize])
            .reduce(|a, b| self.poly.join(a, b))
            .unwrap();
        debug_assert!(self.poly.face_contains(supp, &bary));
        let new_id = self.coords.len() as u32;
        self.coords.push(bary);
        self.supp.push(supp);
        self.incident.push(Vec::new());

        let affected: Vec<u32> = self.incident[face[0] as usize]
            .iter()
            .copied()
            .filter(|&slot| self.simplices[slot as usize].contains_all(&face))
            .collect();
        for slot in affected {
            let old: Vec<u32> = self.simplices[slot as usize].verts().to_vec();
            self.kill_simplex(slot);
            for &dropped in &face {
                let mut child: Vec<u32> = old
                    .iter()
                    .copied()
                    .filter(|&v| v != dropped)
                    .chain(std::iter::once(new_id))
                    .collect();
                child.sort_unstable();
                self.push_simplex(&child);
            }
        }
        Ok((self, new_id))
    }

    /// Barycentric subdivision of every maximal simplex: one new vertex per
    /// face with two or more vertices, children indexed by flags. Shrinks the
    /// diameter by at least `(k-1)/k` per round.
    pub fn refine_barycentric(self) -> Self {
        let mut coords = self.coords;
        let mut supp = self.supp;
        let mut face_vertex: BTreeMap<Vec<u32>, u32> = BTreeMap::new();
        let poly = self.poly;
        let old: Vec<Vec<u32>> = self
            .simplices
            .iter()
            .filter(|s| s.alive)
            .map(|s| s.verts().to_vec())
            .collect();

        let mut vid = |face: &[u32], coords: &mut Vec<Point>, supp: &mut Vec<FaceId>| -> u32 {
            if face.len() == 1 {
                return face[0];
            }
            if let Some(&v) = face_vertex.get(face) {
                return v;
            }
            let bary = Point::barycenter(face.iter().map(|&v| &coords[v as usize]));
            let sf = face
                .iter()
                .map(|&v| supp[v as usize])
                .reduce(|a, b| poly.join(a, b))
                .unwrap();
            let id = coords.len() as u32;
            coords.push(bary);
            supp.push(sf);
            face_vertex.insert(face.to_vec(), id);
            id
        };

        let mut simplices: Vec<Vec<u32>> = Vec::new();
        for s in &old {
            for perm in s.iter().copied().permutations(s.len()) {
                let mut child = Vec::with_capacity(s.len());
                for prefix_len in 1..=s.len() {
                    let mut prefix: Vec<u32> = perm[..prefix_len].to_vec();
                    prefix.sort_unstable();
                    child.push(vid(&prefix, &mut coords, &mut supp));
                }
                child.sort_unstable();
                simplices.push(child);
            }
        }

        let n = coords.len();
        let mut tri = Triangulation {
            poly,
            coords,
            supp,
            simplices: Vec::new(),
            incident: vec![Vec::new(); n],
            live: 0,
        };
        for s in &simplices {
            tri.push_simplex(s);
        }
        tri
    }

    /// Uniform midpoint ("red") refinement: every edge gains its midpoint and
    /// each maximal simplex splits into `2^dim` children. The diameter halves
    /// exactly in dimensions 1 and 2; in dimension 3 the interior octahedron
    /// is cut along its shortest diagonal, which contracts the diameter by at
    /// least `1/sqrt(2)` per round.
    pub fn refine_midpoint(self) -> Self {
        let mut coords = self.coords;
        let mut supp = self.supp;
        let poly = self.poly;
        let mut midpoint: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        let old: Vec<Vec<u32>> = self
            .simplices
            .iter()
            .filter(|s| s.alive)
            .map(|s| s.verts().to_vec())
            .collect();

        let mut mid = |a: u32, b: u32, coords: &mut Vec<Point>, supp: &mut Vec<FaceId>| -> u32 {
            let key = (a.min(b), a.max(b));
            if let Some(&v) = midpoint.get(&key) {
                return v;
            }
            let p = Point::barycenter([&coords[a as usize], &coords[b as usize]]);
            let sf = poly.join(supp[a as usize], supp[b as usize]);
            let id = coords.len() as u32;
            coords.push(p);
            supp.push(sf);
            midpoint.insert(key, id);
            id
        };

        let mut simplices: Vec<Vec<u32>> = Vec::new();
        let emit = |verts: &mut Vec<u32>, simplices: &mut Vec<Vec<u32>>| {
            verts.sort_unstable();
            simplices.push(verts.clone());
        };
        for s in &old {
            match s.len() {
                1 => emit(&mut vec![s[0]], &mut simplices),
                2 => {
                    let m = mid(s[0], s[1], &mut coords, &mut supp);
                    emit(&mut vec![s[0], m], &mut simplices);
                    emit(&mut vec![m, s[1]], &mut simplices);
                }
                3 => {
                    let (a, b, c) = (s[0], s[1], s[2]);
                    let mab = mid(a, b, &mut coords, &mut supp);
                    let mbc = mid(b, c, &mut coords, &mut supp);
                    let mca = mid(c, a, &mut coords, &mut supp);
                    emit(&mut vec![a, mab, mca], &mut simplices);
                    emit(&mut vec![b, mab, mbc], &mut simplices);
                    emit(&mut vec![c, mbc, mca], &mut simplices);
                    emit(&mut vec![mab, mbc, mca], &mut simplices);
                }
                4 => {
                    let (a, b, c, d) = (s[0], s[1], s[2], s[3]);
                    let mab = mid(a, b, &mut coords, &mut supp);
                    let mac = mid(a, c, &mut coords, &mut supp);
                    let mad = mid(a, d, &mut coords, &mut supp);
                    let mbc = mid(b, c, &mut coords, &mut supp);
                    let mbd = mid(b, d, &mut coords, &mut supp);
                    let mcd = mid(c, d, &mut coords, &mut supp);
                    emit(&mut vec![a, mab, mac, mad], &mut simplices);
                    emit(&mut vec![b, mab, mbc, mbd], &mut simplices);
                    emit(&mut vec![c, mac, mbc, mcd], &mut simplices);
                    emit(&mut vec![d, mad, mbd, mcd], &mut simplices);
                    // Interior octahedron: cut along the shortest diagonal.
                    let diagonals = [(mab, mcd), (mac, mbd), (mad, mbc)];
                    let cycles = [
                        [mac, mad, mbd, mbc],
                        [mab, mad, mcd, mbc],
                        [mab, mac, mcd, mbd],
                    ];
                    let mut best = 0;
                    let mut best_len =
                        coords[diagonals[0].0 as usize].dist_sq(&coords[diagonals[0].1 as usize]);
                    for i in 1..3 {
                        let len = coords[diagonals[i].0 as usize]
                            .dist_sq(&coords[diagonals[i].1 as usize]);
                        if len < best_len {
                            best = i;
                            best_len = len;
                        }
                    }
                    let (p, q) = diagonals[best];
                    let cyc = cycles[best];
                    for i in 0..4 {
                        emit(&mut vec![p, q, cyc[i], cyc[(i + 1) % 4]], &mut simplices);
                    }
                }
                n => unreachable!("maximal simplex of size {n}"),
            }
        }

        let n = coords.len();
        let mut tri = Triangulation {
            poly,
            coords,
            supp,
            simplices: Vec::new(),
            incident: vec![Vec::new(); n],
            live: 0,
        };
        for s in &simplices {
            tri.push_simplex(s);
        }
        tri
    }

    /// Max squared edge length over all maximal simplices.
    pub fn diameter_sq(&self) -> BigRational {
        let mut best = BigRational::zero();
        for s in self.maximal_simplices() {
            for (a, b) in s.iter().tuple_combinations() {
                let d = self.coords[*a as usize].dist_sq(&self.coords[*b as usize]);
                if d > best {
                    best = d;
                }
            }
        }
        best
    }

    /// A rational upper bound on the diameter, tight to about `2^-bits`.
    pub fn diameter_upper(&self, bits: u32) -> BigRational {
        sqrt_upper_bound(&self.diameter_sq(), bits)
    }

    /// Exact total volume in the polytope's chart coordinates; constant
    /// under subdivision.
    pub fn chart_volume_total(&self) -> BigRational {
        let chart = self.poly.chart();
        let dim = chart.len();
        if dim == 0 {
            return BigRational::zero();
        }
        let mut factorial = BigRational::one();
        for i in 1..=dim {
            factorial *= BigRational::from_integer((i as i64).into());
        }
        let mut total = BigRational::zero();
        for s in self.maximal_simplices() {
            let base = &self.coords[s[0] as usize];
            let rows: Vec<Vec<BigRational>> = s[1..]
                .iter()
                .map(|&v| {
                    chart
                        .iter()
                        .map(|&c| &self.coords[v as usize].coords[c] - &base.coords[c])
                        .collect()
                })
                .collect();
            let det = determinant(rows);
            total += if det < BigRational::zero() { -det } else { det } / &factorial;
        }
        total
    }

    /// Debug dump: `{vertices:[{id,coords,supp_face}], simplices:[[ids]]}`.
    pub fn dump_json(&self) -> serde_json::Value {
        json!({
            "vertices": (0..self.coords.len()).map(|i| json!({
                "id": i,
                "coords": self.coords[i].coords.iter().map(format_rational).collect::<Vec<_>>(),
                "supp_face": self.supp[i].0,
            })).collect::<Vec<_>>(),
            "simplices": self.maximal_simplices().collect::<Vec<_>>(),
        })
    }
}

fn build_flags(poly: &Arc<Polytope>, top: FaceId, chain: &mut Vec<u32>, tri: &mut Triangulation) {
    let top_dim = poly.face(top).dim;
    if top_dim == 0 {
        let mut verts = chain.clone();
        verts.sort_unstable();
        tri.push_simplex(&verts);
        return;
    }
    for &sub in poly.subfaces(top) {
        if poly.face(sub).dim + 1 == top_dim {
            chain.push(sub.0 as u32);
            build_flags(poly, sub, chain, tri);
            chain.pop();
        }
    }
}

fn push_subsets(simplex: &[u32], out: &mut BTreeSet<SimplexFace>) {
    let n = simplex.len();
    for mask in 1u32..(1 << n) {
        let face: Vec<u32> = (0..n)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| simplex[i])
            .collect();
        out.insert(face);
    }
}

fn determinant(mut m: Vec<Vec<BigRational>>) -> BigRational {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{PolytopeSpec, VertexSpec};
    use num_traits::Signed;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn simplex2() -> Arc<Polytope> {
        Polytope::simplex(3).unwrap()
    }

    fn one_triangle() -> Triangulation {
        Triangulation::trivial(&simplex2()).unwrap()
    }

    #[test]
    fn initial_triangulation_counts() {
        let t = Triangulation::initial(&simplex2());
        assert_eq!(t.vertex_count(), 7);
        assert_eq!(t.live_simplex_count(), 6);

        let square = Polytope::from_spec(&PolytopeSpec::Explicit {
            vertices: vec![
                VertexSpec(vec![rat(-1, 1), rat(-1, 1)]),
                VertexSpec(vec![rat(1, 1), rat(-1, 1)]),
                VertexSpec(vec![rat(1, 1), rat(1, 1)]),
                VertexSpec(vec![rat(-1, 1), rat(1, 1)]),
            ],
        })
        .unwrap();
        let t = Triangulation::initial(&square);
        assert_eq!(t.vertex_count(), 9);
        assert_eq!(t.live_simplex_count(), 8);

        let seg = Polytope::simplex(2).unwrap();
        let t = Triangulation::initial(&seg);
        assert_eq!(t.vertex_count(), 3);
        assert_eq!(t.live_simplex_count(), 2);
    }

    #[test]
    fn initial_supp_matches_recomputation() {
        for poly in [simplex2(), Polytope::regular_polygon(8, &rat(1, 1)).unwrap()] {
            let t = Triangulation::initial(&poly);
            for v in 0..t.vertex_count() as u32 {
                assert_eq!(t.supp_of(v), poly.supp(t.coords_of(v)).unwrap());
            }
        }
    }

    #[test]
    fn star_subdivide_edge_of_triangle() {
        let t = one_triangle();
        let (t, b) = t.star_subdivide(&[0, 1]).unwrap();
        assert_eq!(b, 3);
        let mut simps: Vec<Vec<u32>> = t.maximal_simplices().map(|s| s.to_vec()).collect();
        simps.sort();
        assert_eq!(simps, vec![vec![0, 2, 3], vec![1, 2, 3]]);
        // midpoint of an edge of the simplex stays on that edge
        assert_eq!(t.supp_of(b), t.polytope().supp(t.coords_of(b)).unwrap());
    }

    #[test]
    fn star_subdivide_full_triangle() {
        let t = one_triangle();
        let (t, b) = t.star_subdivide(&[0, 1, 2]).unwrap();
        let simps: Vec<Vec<u32>> = t.maximal_simplices().map(|s| s.to_vec()).collect();
        assert_eq!(simps.len(), 3);
        assert!(simps.iter().all(|s| s.contains(&b)));
        assert_eq!(t.supp_of(b), t.polytope().improper_face());
    }

    #[test]
    fn star_subdivide_rejects_non_faces() {
        let t = one_triangle();
        assert!(matches!(
            one_triangle().star_subdivide(&[0]),
            Err(SimplicialError::FaceTooSmall)
        ));
        let (t2, _) = t.star_subdivide(&[0, 1]).unwrap();
        // {0,1} was just destroyed
        assert!(matches!(
            t2.star_subdivide(&[0, 1]),
            Err(SimplicialError::NotAFace)
        ));
    }

    #[test]
    fn volumes_conserved_under_subdivisions() {
        let t = Triangulation::initial(&simplex2());
        let vol = t.chart_volume_total();
        assert!(vol.is_positive());
        // flag {vertex 0, barycenter of edge {0,1}, center}
        let (t, _) = t.star_subdivide(&[0, 3, 6]).unwrap();
        assert_eq!(t.chart_volume_total(), vol);
        let t = t.refine_barycentric();
        assert_eq!(t.chart_volume_total(), vol);
        let t = t.refine_midpoint();
        assert_eq!(t.chart_volume_total(), vol);
    }

    #[test]
    fn volumes_conserved_in_3d() {
        let t = Triangulation::initial(&Polytope::simplex(4).unwrap());
        let vol = t.chart_volume_total();
        assert!(vol.is_positive());
        let t = t.refine_midpoint();
        assert_eq!(t.chart_volume_total(), vol);
        assert_eq!(t.live_simplex_count(), 24 * 8);
        let (t2, _) = {
            let f: Vec<u32> = t.maximal_simplices().next().unwrap()[..2].to_vec();
            t.star_subdivide(&f).unwrap()
        };
        assert_eq!(t2.chart_volume_total(), vol);
    }

    #[test]
    fn diameter_and_contraction() {
        let t = one_triangle();
        // unit simplex edge length sqrt(2)
        assert_eq!(t.diameter_sq(), rat(2, 1));
        let ub = t.diameter_upper(16);
        assert!(&ub * &ub >= rat(2, 1));

        let t1 = one_triangle().refine_barycentric();
        let bound = rat(2, 3) * rat(2, 3) * rat(2, 1); // ((k-1)/k * diam)^2
        assert!(t1.diameter_sq() <= bound);
        let t2 = t1.refine_barycentric();
        assert!(t2.diameter_sq() <= rat(4, 9) * rat(4, 9) * rat(2, 1));

        let tm = one_triangle().refine_midpoint();
        assert_eq!(tm.diameter_sq(), rat(1, 2)); // exactly half
    }

    #[test]
    fn midpoint_refinement_contracts_tetrahedra() {
        let t = Triangulation::trivial(&Polytope::simplex(4).unwrap()).unwrap();
        let d0 = t.diameter_sq();
        let t = t.refine_midpoint();
        // squared contraction of at least 1/2 per round in 3d
        assert!(t.diameter_sq() <= rat(1, 2) * d0.clone());
        assert_eq!(t.live_simplex_count(), 8);
        let mut t = t;
        for _ in 0..3 {
            t = t.refine_midpoint();
        }
        assert!(t.diameter_sq() <= rat(1, 16) * d0);
    }

    #[test]
    fn enumerate_faces_counts() {
        let t = one_triangle();
        assert_eq!(t.enumerate_faces(None).unwrap().len(), 7);

        // Two triangles sharing an edge: 4 vertices, faces containing 0
        let poly = simplex2();
        let coords = vec![
            Point::parse(&["1", "0", "0"]),
            Point::parse(&["0", "1", "0"]),
            Point::parse(&["0", "0", "1"]),
            Point::parse(&["1/2", "1/2", "0"]),
        ];
        let t =
            Triangulation::explicit(&poly, coords, vec![vec![0, 2, 3], vec![1, 2, 3]]).unwrap();
        let with0 = t.enumerate_faces(Some(0)).unwrap();
        assert_eq!(with0.len(), 4); // {0},{0,2},{0,3},{0,2,3}
        let with3 = t.enumerate_faces(Some(3)).unwrap();
        assert_eq!(with3.len(), 6); // 4 + 4 minus shared {3},{2,3}
        assert!(t.enumerate_faces(Some(99)).is_err());
    }

    #[test]
    fn simpliciality_after_random_subdivisions() {
        let mut rng = StdRng::seed_from_u64(5);
        let mut t = Triangulation::initial(&simplex2());
        for _ in 0..12 {
            let faces: Vec<Vec<u32>> = t
                .enumerate_faces(None)
                .unwrap()
                .into_iter()
                .filter(|f| f.len() >= 2)
                .collect();
            let f = faces[rng.gen_range(0..faces.len())].clone();
            let (t2, b) = t.star_subdivide(&f).unwrap();
            t = t2;
            assert_eq!(t.supp_of(b), t.polytope().supp(t.coords_of(b)).unwrap());
        }
        // pairwise intersections of maximal simplices are shared faces
        let simps: Vec<Vec<u32>> = t.maximal_simplices().map(|s| s.to_vec()).collect();
        for (a, b) in simps.iter().tuple_combinations() {
            let inter: Vec<u32> = a.iter().copied().filter(|v| b.contains(v)).collect();
            if !inter.is_empty() {
                assert!(t.is_face(&inter), "{a:?} ∩ {b:?} = {inter:?} not a face");
            }
        }
        // stored supp values match recomputation everywhere
        for v in 0..t.vertex_count() as u32 {
            assert_eq!(t.supp_of(v), t.polytope().supp(t.coords_of(v)).unwrap());
        }
    }

    #[test]
    fn dump_shape() {
        let t = one_triangle();
        let d = t.dump_json();
        assert_eq!(d["vertices"].as_array().unwrap().len(), 3);
        assert_eq!(d["simplices"].as_array().unwrap().len(), 1);
    }
}
