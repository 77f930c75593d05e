//! H-described rational polyhedra `{x : A x >= b}`: vertices, boundedness,
//! dimension, faces, and Fourier–Motzkin projection.
//!
//! Everything is exhaustive over row subsets. The instances this crate sees
//! have at most a dozen rows in low dimension, so correctness beats speed.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::exact::{affine_rank, solve_square, Rat, RatMat, RatVec};

pub type RowSet = BTreeSet<usize>;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct HPolytope {
    a: RatMat,
    b: RatVec,
}

impl std::fmt::Debug for HPolytope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{x : {:?} x >= {:?}}}", self.a, self.b)
    }
}

/// A vertex with every row tight at it, not just a basis.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexRecord {
    pub point: RatVec,
    pub tight: RowSet,
}

/// Pointed reduction: `x = U y` with `U` spanning the row space of `A`, so
/// that `{y : A U y >= b}` has no lineality.
struct Reduced {
    lineality: usize,
    p: HPolytope,
}

impl HPolytope {
    pub fn new(a: RatMat, b: RatVec) -> Result<HPolytope> {
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} rows but {} right-hand sides",
                a.nrows(),
                b.len()
            )));
        }
        Ok(HPolytope { a, b })
    }

    pub fn ambient_dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn num_rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn matrix(&self) -> &RatMat {
        &self.a
    }

    pub fn rhs(&self) -> &RatVec {
        &self.b
    }

    pub fn slack(&self, i: usize, x: &[Rat]) -> Rat {
        self.a.row_vec(i).dot(x) - &self.b[i]
    }

    pub fn contains(&self, x: &[Rat]) -> bool {
        (0..self.num_rows()).all(|i| !self.slack(i, x).is_negative())
    }

    pub fn tight_rows(&self, x: &[Rat]) -> RowSet {
        (0..self.num_rows()).filter(|&i| self.slack(i, x).is_zero()).collect()
    }

    /// Same rows restricted to `idx`.
    pub fn select_rows(&self, idx: &[usize]) -> HPolytope {
        HPolytope { a: self.a.select_rows(idx), b: idx.iter().map(|&i| self.b[i].clone()).collect() }
    }

    /// The face where every row of `t` holds with equality (as a polyhedron
    /// with the negated rows appended).
    pub fn with_equalities(&self, t: &RowSet) -> HPolytope {
        let mut a = self.a.clone();
        let mut b = self.b.clone();
        for &i in t {
            let neg: Vec<Rat> = self.a.row(i).iter().map(|x| -x).collect();
            a.push_row(&neg);
            b.push(-&self.b[i]);
        }
        HPolytope { a, b }
    }

    /// Vertices of a pointed polyhedron, sorted lexicographically.
    fn pointed_vertices(&self) -> Vec<VertexRecord> {
        let n = self.ambient_dim();
        let m = self.num_rows();
        let mut found: BTreeMap<RatVec, ()> = BTreeMap::new();
        for subset in (0..m).combinations(n) {
            let sub = self.a.select_rows(&subset);
            let rhs: Vec<Rat> = subset.iter().map(|&i| self.b[i].clone()).collect();
            let Ok(Some(x)) = solve_square(&sub, &rhs) else { continue };
            if found.contains_key(&x) || !self.contains(&x) {
                continue;
            }
            found.insert(x, ());
        }
        found.into_keys().map(|point| VertexRecord { tight: self.tight_rows(&point), point }).collect()
    }

    /// Extreme rays of the recession cone of a pointed polyhedron.
    fn pointed_rays(&self) -> Vec<RatVec> {
        let n = self.ambient_dim();
        if n == 0 {
            return Vec::new();
        }
        let m = self.num_rows();
        let mut rays = BTreeSet::new();
        for subset in (0..m).combinations(n - 1) {
            let sub = RatMat::from_rows(n, subset.iter().map(|&i| self.a.row_vec(i)).collect()).expect("same width");
            let ker = sub.nullspace();
            if ker.len() != 1 {
                continue;
            }
            for d in [ker[0].clone(), -&ker[0]] {
                if (0..m).all(|i| !self.a.row_vec(i).dot(&d).is_negative()) {
                    rays.insert(d);
                }
            }
        }
        rays.into_iter().collect()
    }

    fn reduce(&self) -> Reduced {
        let n = self.ambient_dim();
        let basis = self.a.row_space_basis();
        let k = basis.len();
        if k == n {
            return Reduced { lineality: 0, p: self.clone() };
        }
        let u = RatMat::from_rows(n, basis).expect("same width").transpose();
        let au = self.a.mul(&u);
        Reduced { lineality: n - k, p: HPolytope { a: au, b: self.b.clone() } }
    }

    pub fn is_empty(&self) -> bool {
        self.reduce().p.pointed_vertices().is_empty()
    }

    /// True for bounded (including empty) polyhedra.
    pub fn is_bounded(&self) -> bool {
        let red = self.reduce();
        if red.p.pointed_vertices().is_empty() {
            return true;
        }
        red.lineality == 0 && red.p.pointed_rays().is_empty()
    }

    /// Vertices, sorted lexicographically, each with its full tight-row set.
    /// Empty polytopes give an empty list; unbounded ones are an error.
    pub fn vertices(&self) -> Result<Vec<VertexRecord>> {
        let red = self.reduce();
        let verts = red.p.pointed_vertices();
        if verts.is_empty() {
            return Ok(verts);
        }
        if red.lineality > 0 || !red.p.pointed_rays().is_empty() {
            return Err(Error::Unbounded);
        }
        // With no lineality the reduced system is the original one.
        Ok(verts)
    }

    /// Affine dimension; -1 when empty. Works for unbounded polyhedra too.
    pub fn dimension(&self) -> i64 {
        let red = self.reduce();
        let verts = red.p.pointed_vertices();
        if verts.is_empty() {
            return -1;
        }
        let rays = red.p.pointed_rays();
        let base = &verts[0].point;
        let mut dirs: Vec<RatVec> = verts[1..].iter().map(|v| &v.point - base).collect();
        dirs.extend(rays);
        let k = red.p.ambient_dim();
        let r = RatMat::from_rows(k, dirs).expect("same width").rank();
        (red.lineality + r) as i64
    }

    /// Dimension of the face where the rows of `t` are tight; -1 if empty.
    pub fn face_dim(&self, t: &RowSet) -> i64 {
        if self.is_bounded() {
            let verts = self.pointed_vertices();
            return face_dim_from_vertices(&verts, t);
        }
        self.with_equalities(t).dimension()
    }

    /// Rows whose tight face has dimension `dim - 1`.
    pub fn facet_rows(&self) -> RowSet {
        if self.is_bounded() {
            let verts = self.pointed_vertices();
            return facet_rows_from_vertices(&verts);
        }
        let d = self.dimension();
        if d <= 0 {
            return RowSet::new();
        }
        (0..self.num_rows()).filter(|&i| self.face_dim(&RowSet::from([i])) == d - 1).collect()
    }

    /// Pairs of vertices spanning a 1-dimensional face.
    pub fn edges(&self) -> Result<Vec<(VertexRecord, VertexRecord)>> {
        let verts = self.vertices()?;
        Ok(edges_from_vertices(&verts))
    }

    /// Fourier–Motzkin elimination of the last `count` coordinates, followed
    /// by removal of duplicate and (when the result is bounded) redundant rows.
    pub fn eliminate_last(&self, count: usize) -> Result<HPolytope> {
        let n = self.ambient_dim();
        if count > n {
            return Err(Error::DimensionMismatch(format!("cannot eliminate {count} of {n} coordinates")));
        }
        let mut rows: Vec<(RatVec, Rat)> = (0..self.num_rows()).map(|i| (self.a.row_vec(i), self.b[i].clone())).collect();
        for var in (n - count..n).rev() {
            let mut next = Vec::new();
            let (mut pos, mut neg) = (Vec::new(), Vec::new());
            for (r, b) in rows {
                let c = r[var].clone();
                if c.is_zero() {
                    next.push((r, b));
                } else if c.is_positive() {
                    pos.push((r, b, c));
                } else {
                    neg.push((r, b, -c));
                }
            }
            for (rp, bp, cp) in &pos {
                for (rn, bn, cn) in &neg {
                    let r: RatVec = rp.iter().zip(rn.iter()).map(|(x, y)| x / cp + y / cn).collect();
                    next.push((r, bp / cp + bn / cn));
                }
            }
            rows = dedupe_rows(next.into_iter().map(|(mut r, b)| {
                r.truncate(var);
                (r, b)
            }));
        }
        let k = n - count;
        // Zero-normal rows are either vacuous or certify emptiness.
        let infeasible = rows.iter().any(|(r, b)| r.is_zero() && b.is_positive());
        rows.retain(|(r, _)| !r.is_zero());
        if infeasible {
            // Keep an explicit contradiction so the result stays empty.
            let mut z = RatVec::zeros(k);
            if k > 0 {
                z[0] = Rat::one();
                rows = vec![(z.clone(), Rat::one()), (-&z, Rat::one())];
            } else {
                rows = vec![(z, Rat::one())];
            }
        }
        let out = HPolytope::new(RatMat::from_rows(k, rows.iter().map(|(r, _)| r.clone()).collect())?, rows.into_iter().map(|(_, b)| b).collect())?;
        Ok(out.without_redundant_rows())
    }

    /// Keeps one row per facet when the polytope is bounded, full-dimensional
    /// and nonempty; otherwise returns `self` unchanged.
    pub fn without_redundant_rows(&self) -> HPolytope {
        if !self.is_bounded() || self.dimension() != self.ambient_dim() as i64 {
            return self.clone();
        }
        let verts = self.pointed_vertices();
        let mut seen: BTreeSet<Vec<RatVec>> = BTreeSet::new();
        let mut keep = Vec::new();
        for i in facet_rows_from_vertices(&verts) {
            let face: Vec<RatVec> = verts.iter().filter(|v| v.tight.contains(&i)).map(|v| v.point.clone()).collect();
            if seen.insert(face) {
                keep.push(i);
            }
        }
        self.select_rows(&keep)
    }
}

fn dedupe_rows(rows: impl Iterator<Item = (RatVec, Rat)>) -> Vec<(RatVec, Rat)> {
    // Normalise each row so that its first nonzero coefficient is ±1.
    let mut set: BTreeSet<(RatVec, Rat)> = BTreeSet::new();
    for (r, b) in rows {
        let scale = r.iter().find(|x| !x.is_zero()).map(Rat::abs).unwrap_or_else(|| b.abs());
        if scale.is_zero() {
            continue;
        }
        let inv = scale.recip().expect("nonzero");
        set.insert((r.scale(&inv), &b * &inv));
    }
    set.into_iter().collect()
}

/// Dimension of the face cut out by `t`, read off the vertex list of a
/// bounded polytope.
pub fn face_dim_from_vertices(verts: &[VertexRecord], t: &RowSet) -> i64 {
    let pts: Vec<&RatVec> = verts.iter().filter(|v| t.is_subset(&v.tight)).map(|v| &v.point).collect();
    affine_rank(&pts)
}

pub fn dim_from_vertices(verts: &[VertexRecord]) -> i64 {
    affine_rank(&verts.iter().map(|v| &v.point).collect::<Vec<_>>())
}

pub fn facet_rows_from_vertices(verts: &[VertexRecord]) -> RowSet {
    let d = dim_from_vertices(verts);
    if d <= 0 {
        return RowSet::new();
    }
    let rows: RowSet = verts.iter().flat_map(|v| v.tight.iter().copied()).collect();
    rows.into_iter().filter(|&i| face_dim_from_vertices(verts, &RowSet::from([i])) == d - 1).collect()
}

pub fn edges_from_vertices(verts: &[VertexRecord]) -> Vec<(VertexRecord, VertexRecord)> {
    let mut out = Vec::new();
    for (i, u) in verts.iter().enumerate() {
        for v in &verts[i + 1..] {
            let common: RowSet = u.tight.intersection(&v.tight).copied().collect();
            if face_dim_from_vertices(verts, &common) == 1 {
                out.push((u.clone(), v.clone()));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(rows: &[Vec<i64>], rhs: &[i64]) -> HPolytope {
        let n = rows.first().map_or(0, Vec::len);
        HPolytope::new(RatMat::from_int_rows(n, rows).unwrap(), RatVec::from_ints(rhs)).unwrap()
    }

    fn pts(p: &HPolytope) -> Vec<RatVec> {
        p.vertices().unwrap().into_iter().map(|v| v.point).collect()
    }

    #[test]
    fn unit_square() {
        let p = poly(&[vec![1, 0], vec![-1, 0], vec![0, 1], vec![0, -1]], &[0, -1, 0, -1]);
        assert_eq!(pts(&p), vec![RatVec::from_ints(&[0, 0]), RatVec::from_ints(&[0, 1]), RatVec::from_ints(&[1, 0]), RatVec::from_ints(&[1, 1])]);
        assert_eq!(p.dimension(), 2);
        assert_eq!(p.facet_rows(), RowSet::from([0, 1, 2, 3]));
        assert_eq!(p.edges().unwrap().len(), 4);
        assert_eq!(p.face_dim(&RowSet::from([0, 1])), -1);
        assert_eq!(p.face_dim(&RowSet::from([0, 2])), 0);
    }

    #[test]
    fn empty_and_unbounded() {
        let e = poly(&[vec![1], vec![-1]], &[1, 0]);
        assert!(e.vertices().unwrap().is_empty());
        assert_eq!(e.dimension(), -1);
        let half_line = poly(&[vec![1]], &[0]);
        assert_eq!(half_line.vertices(), Err(Error::Unbounded));
        assert_eq!(half_line.dimension(), 1);
        let strip = poly(&[vec![1, 0], vec![-1, 0]], &[0, -1]);
        assert!(!strip.is_bounded());
        assert_eq!(strip.dimension(), 2);
        assert_eq!(strip.facet_rows(), RowSet::from([0, 1]));
    }

    #[test]
    fn degenerate_vertex_keeps_all_tight_rows() {
        // Example triangle with an extra row through a vertex.
        let p = poly(&[vec![1, -1], vec![2, 1], vec![-1, 0], vec![1, 0]], &[-3, 3, -2, 0]);
        let v = p.vertices().unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v[0].point, RatVec::from_ints(&[0, 3]));
        assert_eq!(v[0].tight, RowSet::from([0, 1, 3]));
        assert_eq!(p.facet_rows(), RowSet::from([0, 1, 2]));
    }

    #[test]
    fn lower_dimensional_segment() {
        let p = poly(&[vec![1, 0], vec![-1, 0], vec![0, 1], vec![0, -1]], &[0, 0, 0, -1]);
        assert_eq!(p.dimension(), 1);
        assert_eq!(p.facet_rows(), RowSet::from([2, 3]));
    }

    #[test]
    fn zero_dimensional_ambient() {
        let p = HPolytope::new(RatMat::zeros(1, 0), RatVec::from_ints(&[-1])).unwrap();
        assert_eq!(p.vertices().unwrap().len(), 1);
        assert_eq!(p.dimension(), 0);
        let q = HPolytope::new(RatMat::zeros(1, 0), RatVec::from_ints(&[1])).unwrap();
        assert_eq!(q.dimension(), -1);
    }

    #[test]
    fn projection_of_triangle() {
        // Triangle projected onto the x axis.
        let p = poly(&[vec![1, 0], vec![0, 1], vec![-1, -1]], &[0, 0, -2]);
        let q = p.eliminate_last(1).unwrap();
        assert_eq!(pts(&q), vec![RatVec::from_ints(&[0]), RatVec::from_ints(&[2])]);
        assert_eq!(q.num_rows(), 2);
    }
}
