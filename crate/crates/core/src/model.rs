//! Horospherical data: the space (weight lattice, colors, G-stable divisors),
//! B-stable divisors, moment quadruples, curves and intersection numbers.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{primitive_and_length, LatticeBasis, Rat, RatMat, RatVec};
use crate::family::{build_family, first_candidate_half, Family};
use crate::polytope::{dim_from_vertices, face_dim_from_vertices, facet_rows_from_vertices, HPolytope, RowSet, VertexRecord};

/// A color `D_α`: its coroot pairings with the weight basis and the
/// coefficient `a_α` of `D_α` in the anticanonical divisor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Color {
    pub name: String,
    pub coroot_pairings: Vec<i64>,
    pub a: i64,
}

/// A G-stable prime divisor, given by its primitive vector in N = Hom(M, ℤ)
/// (coordinates dual to the basis of M).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GStableDivisor {
    pub name: String,
    pub x: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpaceData {
    pub weight_dim: usize,
    pub basis_labels: Vec<String>,
    pub colors: Vec<Color>,
    pub lattice_m: LatticeBasis,
    pub gstable: Vec<GStableDivisor>,
}

impl SpaceData {
    /// Rank `n` of the lattice M.
    pub fn rank(&self) -> usize {
        self.lattice_m.rank()
    }

    pub fn num_rows(&self) -> usize {
        self.gstable.len() + self.colors.len()
    }

    pub fn row_name(&self, i: usize) -> &str {
        let r = self.gstable.len();
        if i < r {
            &self.gstable[i].name
        } else {
            &self.colors[i - r].name
        }
    }

    pub fn is_color_row(&self, i: usize) -> bool {
        i >= self.gstable.len()
    }

    /// Row of `A` for color `k`: `⟨m_j, α^∨⟩` for each basis vector of M.
    pub fn color_row(&self, k: usize) -> RatVec {
        let pairing = &self.colors[k].coroot_pairings;
        self.lattice_m
            .rows()
            .iter()
            .map(|m| Rat::from_bigint(m.iter().zip(pairing).map(|(x, &p)| x * BigInt::from(p)).sum()))
            .collect()
    }

    /// `A`: G-stable rows first, then color rows.
    pub fn row_matrix(&self) -> RatMat {
        let n = self.rank();
        let mut rows: Vec<RatVec> = self.gstable.iter().map(|g| RatVec::from_ints(&g.x)).collect();
        rows.extend((0..self.colors.len()).map(|k| self.color_row(k)));
        RatMat::from_rows(n, rows).expect("validated widths")
    }

    /// Basis index of the fundamental weight `ϖ_α`: the coordinate where
    /// `α` pairs to 1 and every other color pairs to 0.
    pub fn fundamental_index(&self, k: usize) -> Option<usize> {
        (0..self.weight_dim).find(|&j| {
            self.colors[k].coroot_pairings.get(j) == Some(&1)
                && self.colors.iter().enumerate().all(|(l, c)| l == k || c.coroot_pairings.get(j) == Some(&0))
        })
    }

    pub fn fundamental_weight(&self, k: usize) -> RatVec {
        RatVec::unit(self.weight_dim, self.fundamental_index(k).expect("validated space"))
    }

    /// `Σ c_α ϖ_α`.
    pub fn color_combination(&self, coeffs: &[Rat]) -> RatVec {
        let mut v = RatVec::zeros(self.weight_dim);
        for (k, c) in coeffs.iter().enumerate() {
            let j = self.fundamental_index(k).expect("validated space");
            v[j] += c;
        }
        v
    }

    /// M-coordinates to weight coordinates.
    pub fn embed(&self, x: &[Rat]) -> RatVec {
        self.lattice_m.combine(x)
    }

    /// `⟨m, α^∨⟩` for a weight `m`.
    pub fn pairing(&self, m: &[Rat], k: usize) -> Rat {
        m.iter().zip(&self.colors[k].coroot_pairings).map(|(x, &p)| x * Rat::int(p)).sum()
    }

    /// Same space keeping only the listed G-stable divisors, in that order.
    pub fn restrict_gstable(&self, keep: &[usize]) -> SpaceData {
        SpaceData { gstable: keep.iter().map(|&i| self.gstable[i].clone()).collect(), ..self.clone() }
    }

    pub fn color_index(&self, name: &str) -> Option<usize> {
        self.colors.iter().position(|c| c.name == name)
    }
}

/// Structural problems with a space, one message per violation.
pub fn validate_space(s: &SpaceData) -> Vec<String> {
    let mut out = Vec::new();
    let d = s.weight_dim;
    if s.basis_labels.len() != d {
        out.push(format!("basis_labels has {} entries but weight_dim is {d}", s.basis_labels.len()));
    }
    if s.lattice_m.ambient_dim() != d {
        out.push(format!("lattice_M rows have length {} but weight_dim is {d}", s.lattice_m.ambient_dim()));
    }
    let mut names = BTreeSet::new();
    for c in &s.colors {
        if !names.insert(c.name.as_str()) {
            out.push(format!("duplicate name {:?}", c.name));
        }
        if c.coroot_pairings.len() != d {
            out.push(format!("color {:?} has {} coroot pairings but weight_dim is {d}", c.name, c.coroot_pairings.len()));
        }
        if c.a <= 0 {
            out.push(format!("color {:?} has non-positive anticanonical coefficient {}", c.name, c.a));
        }
    }
    if out.is_empty() {
        let mut used = BTreeSet::new();
        for (k, c) in s.colors.iter().enumerate() {
            match s.fundamental_index(k) {
                None => out.push(format!("no basis vector is the fundamental weight of color {:?}", c.name)),
                Some(j) => {
                    if !used.insert(j) {
                        out.push(format!("colors share the fundamental weight basis vector {j}"));
                    }
                }
            }
        }
    }
    let n = s.rank();
    for g in &s.gstable {
        if !names.insert(g.name.as_str()) {
            out.push(format!("duplicate name {:?}", g.name));
        }
        if g.x.len() != n {
            out.push(format!("gstable divisor {:?} has {} coordinates but M has rank {n}", g.name, g.x.len()));
        } else {
            let content = g.x.iter().fold(0i64, |acc, &x| acc.gcd(&x));
            if content == 0 {
                out.push(format!("gstable divisor {:?} has the zero vector", g.name));
            } else if content != 1 {
                out.push(format!("gstable divisor {:?} is not primitive", g.name));
            }
        }
    }
    out
}

/// `Σ d_i X_i + Σ d_α D_α`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BStableDivisor {
    pub gstable: RatVec,
    pub colors: RatVec,
}

impl BStableDivisor {
    pub fn new(gstable: RatVec, colors: RatVec) -> BStableDivisor {
        BStableDivisor { gstable, colors }
    }

    pub fn zero(s: &SpaceData) -> BStableDivisor {
        BStableDivisor::new(RatVec::zeros(s.gstable.len()), RatVec::zeros(s.colors.len()))
    }

    pub fn unit_gstable(s: &SpaceData, i: usize) -> BStableDivisor {
        BStableDivisor::new(RatVec::unit(s.gstable.len(), i), RatVec::zeros(s.colors.len()))
    }

    pub fn unit_color(s: &SpaceData, k: usize) -> BStableDivisor {
        BStableDivisor::new(RatVec::zeros(s.gstable.len()), RatVec::unit(s.colors.len(), k))
    }

    /// All prime divisors `X_i` then `D_α`.
    pub fn prime_divisors(s: &SpaceData) -> Vec<BStableDivisor> {
        let mut v: Vec<_> = (0..s.gstable.len()).map(|i| BStableDivisor::unit_gstable(s, i)).collect();
        v.extend((0..s.colors.len()).map(|k| BStableDivisor::unit_color(s, k)));
        v
    }

    pub fn check_space(&self, s: &SpaceData) -> Result<()> {
        if self.gstable.len() != s.gstable.len() || self.colors.len() != s.colors.len() {
            return Err(Error::DimensionMismatch(format!(
                "divisor has {}+{} coefficients but the space has {} gstable divisors and {} colors",
                self.gstable.len(),
                self.colors.len(),
                s.gstable.len(),
                s.colors.len()
            )));
        }
        Ok(())
    }

    pub fn coefficients(&self) -> impl Iterator<Item = &Rat> {
        self.gstable.iter().chain(self.colors.iter())
    }

    pub fn add(&self, other: &BStableDivisor) -> BStableDivisor {
        BStableDivisor::new(&self.gstable + &other.gstable, &self.colors + &other.colors)
    }

    pub fn sub(&self, other: &BStableDivisor) -> BStableDivisor {
        BStableDivisor::new(&self.gstable - &other.gstable, &self.colors - &other.colors)
    }

    pub fn neg(&self) -> BStableDivisor {
        BStableDivisor::new(-&self.gstable, -&self.colors)
    }

    pub fn scale(&self, c: &Rat) -> BStableDivisor {
        BStableDivisor::new(self.gstable.scale(c), self.colors.scale(c))
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients().all(Rat::is_zero)
    }

    /// Keeps the listed G-stable coefficients and every color coefficient.
    pub fn restrict_gstable(&self, keep: &[usize]) -> BStableDivisor {
        BStableDivisor::new(keep.iter().map(|&i| self.gstable[i].clone()).collect(), self.colors.clone())
    }

    /// Right-hand sides `B̃ = -(coefficients)` of the polytope rows.
    pub fn row_rhs(&self) -> RatVec {
        self.coefficients().map(|c| -c).collect()
    }
}

/// `-K_X = Σ X_i + Σ a_α D_α`.
pub fn anticanonical(s: &SpaceData) -> BStableDivisor {
    BStableDivisor::new(
        RatVec(vec![Rat::one(); s.gstable.len()]),
        s.colors.iter().map(|c| Rat::int(c.a)).collect(),
    )
}

/// `K_X + Δ`.
pub fn log_canonical(s: &SpaceData, delta: &BStableDivisor) -> BStableDivisor {
    delta.sub(&anticanonical(s))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Singularity {
    Klt,
    LcNotKlt,
    NotLc,
}

impl Singularity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Singularity::Klt => "klt",
            Singularity::LcNotKlt => "lc_not_klt",
            Singularity::NotLc => "not_lc",
        }
    }
}

/// klt iff every coefficient of Δ is < 1, lc iff every coefficient is ≤ 1.
pub fn classify_singularities(delta: &BStableDivisor) -> Singularity {
    let one = Rat::one();
    if delta.coefficients().all(|c| *c < one) {
        Singularity::Klt
    } else if delta.coefficients().all(|c| *c <= one) {
        Singularity::LcNotKlt
    } else {
        Singularity::NotLc
    }
}

/// A moment quadruple: the space, the pseudo-moment polytope `Q̃` in M
/// coordinates (rows in the order of `SpaceData::row_matrix`), and the
/// translation `v` with `Q = v + Q̃`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MomentQuadruple {
    space: SpaceData,
    q_tilde: HPolytope,
    translation: RatVec,
    vertices: Vec<VertexRecord>,
}

impl MomentQuadruple {
    /// Validates the polytope conditions: bounded, full-dimensional, inside
    /// the dominant chamber, not inside a wall, every G-stable row a facet
    /// not contained in a wall, no two G-stable rows defining the same facet.
    pub fn new(space: SpaceData, q_tilde: HPolytope, translation: RatVec) -> Result<MomentQuadruple> {
        let violations = validate_space(&space);
        if !violations.is_empty() {
            return Err(Error::InvalidSpace(violations));
        }
        if q_tilde.matrix() != &space.row_matrix() {
            return Err(Error::DimensionMismatch("polytope rows do not match the rows of the space".into()));
        }
        if translation.len() != space.weight_dim {
            return Err(Error::DimensionMismatch(format!(
                "translation has length {} but weight_dim is {}",
                translation.len(),
                space.weight_dim
            )));
        }
        let r = space.gstable.len();
        for k in 0..space.colors.len() {
            if q_tilde.rhs()[r + k] != -space.pairing(&translation, k) {
                return Err(Error::Domain(format!(
                    "row of color {:?} is not the dominance condition for the translation",
                    space.colors[k].name
                )));
            }
        }
        let vertices = q_tilde.vertices()?;
        let n = space.rank();
        let dim = dim_from_vertices(&vertices);
        if dim != n as i64 {
            return Err(Error::EmptyOrLowerDim { dim, expected: n });
        }
        let q = MomentQuadruple { space, q_tilde, translation, vertices };
        for k in 0..q.space.colors.len() {
            if q.vertices.iter().all(|v| v.tight.contains(&(r + k))) {
                return Err(Error::ContainedInWall(q.space.colors[k].name.clone()));
            }
        }
        let facets = facet_rows_from_vertices(&q.vertices);
        let mut faces: Vec<BTreeSet<usize>> = Vec::with_capacity(r);
        for i in 0..r {
            if !facets.contains(&i) {
                return Err(Error::GStableNotFacet(i));
            }
            let face: BTreeSet<usize> = (0..q.vertices.len()).filter(|&j| q.vertices[j].tight.contains(&i)).collect();
            let in_wall = (0..q.space.colors.len()).any(|k| face.iter().all(|&j| q.vertices[j].tight.contains(&(r + k))));
            if in_wall {
                return Err(Error::GStableFacetInWall(i));
            }
            if let Some(j) = faces.iter().position(|f| *f == face) {
                return Err(Error::DuplicateGStableFacets(j, i));
            }
            faces.push(face);
        }
        Ok(q)
    }

    pub fn space(&self) -> &SpaceData {
        &self.space
    }

    pub fn q_tilde(&self) -> &HPolytope {
        &self.q_tilde
    }

    pub fn translation(&self) -> &RatVec {
        &self.translation
    }

    pub fn vertices(&self) -> &[VertexRecord] {
        &self.vertices
    }

    /// Vertices of `Q = v + Q̃` in weight coordinates.
    pub fn q_vertices(&self) -> Vec<RatVec> {
        self.vertices.iter().map(|v| &self.translation + &self.space.embed(&v.point)).collect()
    }

    pub fn facet_rows(&self) -> RowSet {
        facet_rows_from_vertices(&self.vertices)
    }
}

/// The moment quadruple of `(X, D)`.
pub fn build_quadruple(s: &SpaceData, d: &BStableDivisor) -> Result<MomentQuadruple> {
    let violations = validate_space(s);
    if !violations.is_empty() {
        return Err(Error::InvalidSpace(violations));
    }
    d.check_space(s)?;
    let q_tilde = HPolytope::new(s.row_matrix(), d.row_rhs())?;
    MomentQuadruple::new(s.clone(), q_tilde, s.color_combination(&d.colors))
}

/// Inverse of `build_quadruple`: reads the divisor back off the polytope.
pub fn recover_divisor(q: &MomentQuadruple) -> Result<BStableDivisor> {
    let s = q.space();
    let n = s.rank() as i64;
    let mut gs = RatVec::zeros(s.gstable.len());
    for (i, coeff) in gs.iter_mut().enumerate() {
        let on_facet = face_dim_from_vertices(q.vertices(), &RowSet::from([i])) == n - 1;
        let v = q.vertices().iter().find(|v| v.tight.contains(&i));
        match (on_facet, v) {
            (true, Some(v)) => *coeff = -RatVec::from_ints(&s.gstable[i].x).dot(&v.point),
            _ => return Err(Error::CannotRecover(i)),
        }
    }
    let colors: RatVec = (0..s.colors.len()).map(|k| q.translation()[s.fundamental_index(k).expect("validated")].clone()).collect();
    if s.color_combination(&colors) != *q.translation() {
        return Err(Error::Domain("translation is not a combination of fundamental weights of colors".into()));
    }
    Ok(BStableDivisor::new(gs, colors))
}

/// `r + s - n`: rank of B-stable divisors modulo principal ones (the Picard
/// rank when X is ℚ-factorial).
pub fn class_rank(q: &MomentQuadruple) -> i64 {
    let s = q.space();
    let r = s.gstable.len() as i64;
    r + s.colors.len() as i64 - s.rank() as i64
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CurveKind {
    /// `C_μ` for an edge μ of Q.
    Edge,
    /// `C_{α,v}` for a vertex v of Q off the wall of color α.
    ColorVertex { color: usize },
}

/// A curve class, recorded by the face of `Q̃` it comes from.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CurveClass {
    pub kind: CurveKind,
    /// The rows tight on the face (edge or vertex) of `Q̃`.
    pub face_rows: RowSet,
    /// The face's vertices in M coordinates (two for an edge, one otherwise).
    pub points: Vec<RatVec>,
}

impl CurveClass {
    pub fn label(&self, s: &SpaceData) -> String {
        let pts: Vec<String> = self.points.iter().map(|p| format!("{p:?}")).collect();
        match self.kind {
            CurveKind::Edge => format!("C[{}]", pts.join("-")),
            CurveKind::ColorVertex { color } => format!("C[{},{}]", s.colors[color].name, pts.join("")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurveRecord {
    pub curve: CurveClass,
    /// `D · C` for the divisor the quadruple was built from.
    pub degree: Rat,
}

/// Integral length of an edge of `Q̃` measured in M.
pub fn edge_length(s: &SpaceData, a: &RatVec, b: &RatVec) -> Result<Rat> {
    Ok(primitive_and_length(&s.embed(&(b - a)), &s.lattice_m)?.1)
}

/// Curves `C_μ` (one per edge) and `C_{α,v}` (one per vertex and color with
/// positive pairing), with their intersection numbers against `D`.
pub fn curves(q: &MomentQuadruple) -> Result<Vec<CurveRecord>> {
    let s = q.space();
    let verts = q.vertices();
    let mut out = Vec::new();
    for (u, v) in crate::polytope::edges_from_vertices(verts) {
        let face_rows: RowSet = u.tight.intersection(&v.tight).copied().collect();
        let degree = edge_length(s, &u.point, &v.point)?;
        out.push(CurveRecord { curve: CurveClass { kind: CurveKind::Edge, face_rows, points: vec![u.point, v.point] }, degree });
    }
    for v in verts {
        let qv = q.translation() + &s.embed(&v.point);
        for k in 0..s.colors.len() {
            let p = s.pairing(&qv, k);
            if p.is_positive() {
                out.push(CurveRecord {
                    curve: CurveClass { kind: CurveKind::ColorVertex { color: k }, face_rows: v.tight.clone(), points: vec![v.point.clone()] },
                    degree: p,
                });
            }
        }
    }
    Ok(out)
}

/// Degree of a curve at a slice of a family, locating the face through the
/// rows in `rows` (which must cut out a single edge or vertex).
pub(crate) fn degree_at(f: &Family, eps: &Rat, kind: &CurveKind, rows: &RowSet) -> Result<Rat> {
    let snap = f.snapshot(eps)?;
    let pts: Vec<&VertexRecord> = snap.vertices.iter().filter(|v| rows.is_subset(&v.tight)).collect();
    match kind {
        CurveKind::Edge => {
            if pts.len() == 1 {
                return Ok(Rat::zero());
            }
            if pts.len() != 2 {
                return Err(Error::Invariant(format!("face {rows:?} has {} vertices, expected an edge", pts.len())));
            }
            edge_length(f.space(), &pts[0].point, &pts[1].point)
        }
        CurveKind::ColorVertex { color } => {
            if pts.len() != 1 {
                return Err(Error::Invariant(format!("face {rows:?} has {} vertices, expected a vertex", pts.len())));
            }
            let qv = &f.translation_at(eps) + &f.space().embed(&pts[0].point);
            Ok(f.space().pairing(&qv, *color))
        }
    }
}

/// `D' · C` on the variety of `q`, computed from the first-order change of
/// `D · C` along `D + ε D'`. Requires `D'` to be ℚ-Cartier.
pub fn intersect_divisor(q: &MomentQuadruple, dprime: &BStableDivisor, c: &CurveClass) -> Result<Rat> {
    let s = q.space();
    let d = recover_divisor(q)?;
    dprime.check_space(s)?;
    if !crate::family::is_q_cartier(s, &d, dprime)? {
        return Err(Error::NotQCartier);
    }
    let f = build_family(s, &d, dprime)?;
    let eps = first_candidate_half(&f);
    let half = &eps / Rat::int(2);
    let s0 = f.snapshot(&Rat::zero())?;
    let s1 = f.snapshot(&eps)?;
    let common: RowSet = s0.facets.intersection(&s1.facets).copied().collect();
    let rows: RowSet = c.face_rows.intersection(&common).copied().collect();
    let v0 = degree_at(&f, &Rat::zero(), &c.kind, &rows)?;
    let v1 = degree_at(&f, &eps, &c.kind, &rows)?;
    let v2 = degree_at(&f, &half, &c.kind, &rows)?;
    let slope = (&v1 - &v0) / &eps;
    if (&v2 - &v0) / &half != slope {
        return Err(Error::Invariant("curve degree is not affine along the perturbation".into()));
    }
    Ok(slope)
}

/// Least `m ≥ 1` with every coefficient of `-K - m D'` below 1, and that
/// boundary.
pub fn klt_boundary(s: &SpaceData, dprime: &BStableDivisor) -> Result<(BigInt, BStableDivisor)> {
    dprime.check_space(s)?;
    if !dprime.coefficients().all(Rat::is_positive) {
        return Err(Error::NotStrictlyEffective);
    }
    let minus_k = anticanonical(s);
    let mut m = BigInt::one();
    for (c, d) in minus_k.coefficients().zip(dprime.coefficients()) {
        // c - m d < 1  ⟺  m > (c - 1)/d
        let need = ((c - Rat::one()) / d).floor() + BigInt::one();
        if need > m {
            m = need;
        }
    }
    let delta = minus_k.sub(&dprime.scale(&Rat::from_bigint(m.clone())));
    Ok((m, delta))
}

/// Convenience for tests and callers holding integers.
pub fn divisor_from_ints(gstable: &[i64], colors: &[i64]) -> BStableDivisor {
    BStableDivisor::new(RatVec::from_ints(gstable), RatVec::from_ints(colors))
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn sl3() -> SpaceData {
        SpaceData {
            weight_dim: 2,
            basis_labels: vec!["w_alpha".into(), "w_beta".into()],
            colors: vec![
                Color { name: "alpha".into(), coroot_pairings: vec![1, 0], a: 2 },
                Color { name: "beta".into(), coroot_pairings: vec![0, 1], a: 2 },
            ],
            lattice_m: LatticeBasis::from_i64(2, &[vec![1, 2]]).unwrap(),
            gstable: vec![GStableDivisor { name: "X1".into(), x: vec![1] }, GStableDivisor { name: "X2".into(), x: vec![-1] }],
        }
    }

    pub fn sl2_cstar() -> SpaceData {
        SpaceData {
            weight_dim: 2,
            basis_labels: vec!["w_alpha".into(), "w_0".into()],
            colors: vec![Color { name: "alpha".into(), coroot_pairings: vec![1, 0], a: 2 }],
            lattice_m: LatticeBasis::standard(2),
            gstable: vec![
                GStableDivisor { name: "X1".into(), x: vec![1, -1] },
                GStableDivisor { name: "X2".into(), x: vec![2, 1] },
                GStableDivisor { name: "X3".into(), x: vec![-1, 0] },
            ],
        }
    }
}
