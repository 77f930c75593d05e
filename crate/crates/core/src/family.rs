//! One-parameter families `Q̃^ε = {x : A x >= B̃ + ε C̃}`, `Q^ε = v^ε + Q̃^ε`,
//! their breakpoints, and the combinatorial tests (G/H-polytope,
//! equivalence, ℚ-Cartier, ℚ-factorial) built on them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use itertools::Itertools;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exact::{Rat, RatMat, RatVec};
use crate::model::{build_quadruple, BStableDivisor, SpaceData};
use crate::polytope::{dim_from_vertices, face_dim_from_vertices, facet_rows_from_vertices, HPolytope, RowSet, VertexRecord};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Family {
    space: SpaceData,
    a: RatMat,
    b_tilde: RatVec,
    c_tilde: RatVec,
    v0: RatVec,
    w: RatVec,
}

impl Family {
    /// A family with arbitrary right-hand sides; `Q̃^0` must be bounded.
    pub fn new(space: SpaceData, b_tilde: RatVec, c_tilde: RatVec, v0: RatVec, w: RatVec) -> Result<Family> {
        let a = space.row_matrix();
        let m = a.nrows();
        if b_tilde.len() != m || c_tilde.len() != m {
            return Err(Error::DimensionMismatch(format!("family needs {m} right-hand sides")));
        }
        if v0.len() != space.weight_dim || w.len() != space.weight_dim {
            return Err(Error::DimensionMismatch(format!("translations need {} coordinates", space.weight_dim)));
        }
        let f = Family { space, a, b_tilde, c_tilde, v0, w };
        if !f.polytope_at(&Rat::zero()).is_bounded() {
            return Err(Error::Unbounded);
        }
        Ok(f)
    }

    pub fn space(&self) -> &SpaceData {
        &self.space
    }

    pub fn a(&self) -> &RatMat {
        &self.a
    }

    pub fn b_tilde(&self) -> &RatVec {
        &self.b_tilde
    }

    pub fn c_tilde(&self) -> &RatVec {
        &self.c_tilde
    }

    pub fn v0(&self) -> &RatVec {
        &self.v0
    }

    pub fn w(&self) -> &RatVec {
        &self.w
    }

    pub fn rhs_at(&self, eps: &Rat) -> RatVec {
        self.b_tilde.axpy(eps, &self.c_tilde)
    }

    pub fn translation_at(&self, eps: &Rat) -> RatVec {
        self.v0.axpy(eps, &self.w)
    }

    pub fn polytope_at(&self, eps: &Rat) -> HPolytope {
        HPolytope::new(self.a.clone(), self.rhs_at(eps)).expect("row counts match")
    }

    /// `Q̃^ε`, `Q^ε` (as its vertex list in weight coordinates) and `v^ε`.
    pub fn slice(&self, eps: &Rat) -> Result<(HPolytope, Vec<RatVec>, RatVec)> {
        let snap = self.snapshot(eps)?;
        let q = snap.q_points(&self.space);
        Ok((snap.polytope, q, snap.translation))
    }

    /// Everything the combinatorial tests need about one slice.
    pub fn snapshot(&self, eps: &Rat) -> Result<Snapshot> {
        if eps.is_negative() {
            return Err(Error::PreconditionFailed(format!("epsilon {eps} is negative")));
        }
        let polytope = self.polytope_at(eps);
        let vertices = polytope.vertices()?;
        let translation = self.translation_at(eps);
        let dim = dim_from_vertices(&vertices);
        let facets = facet_rows_from_vertices(&vertices);
        let mut wall_touch = BTreeSet::new();
        let mut walls_containing = BTreeSet::new();
        let qs: Vec<RatVec> = vertices.iter().map(|v| &translation + &self.space.embed(&v.point)).collect();
        for k in 0..self.space.colors.len() {
            let zero: Vec<bool> = qs.iter().map(|q| self.space.pairing(q, k).is_zero()).collect();
            if zero.iter().any(|&z| z) {
                wall_touch.insert(k);
            }
            if !zero.is_empty() && zero.iter().all(|&z| z) {
                walls_containing.insert(k);
            }
        }
        Ok(Snapshot { eps: eps.clone(), polytope, translation, vertices, dim, facets, wall_touch, walls_containing })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snapshot {
    pub eps: Rat,
    pub polytope: HPolytope,
    pub translation: RatVec,
    pub vertices: Vec<VertexRecord>,
    pub dim: i64,
    pub facets: RowSet,
    /// Colors whose wall meets `Q^ε`.
    pub wall_touch: BTreeSet<usize>,
    /// Colors whose wall contains `Q^ε`.
    pub walls_containing: BTreeSet<usize>,
}

impl Snapshot {
    pub fn is_gh(&self, n: usize) -> bool {
        self.dim == n as i64 && self.walls_containing.is_empty()
    }

    pub fn q_points(&self, s: &SpaceData) -> Vec<RatVec> {
        self.vertices.iter().map(|v| &self.translation + &s.embed(&v.point)).collect()
    }

    pub fn signature(&self) -> ClassSignature {
        ClassSignature {
            dim: self.dim,
            facet_rows: self.facets.clone(),
            wall_touch: self.wall_touch.clone(),
            walls_containing: self.walls_containing.clone(),
            vertex_count: self.vertices.len(),
        }
    }
}

/// The family of `D + ε D'`: `B̃ = -D`, `C̃ = -D'`, `v^ε = Σ (d_α + ε d'_α) ϖ_α`.
pub fn build_family(s: &SpaceData, d: &BStableDivisor, dperturb: &BStableDivisor) -> Result<Family> {
    build_quadruple(s, d)?;
    dperturb.check_space(s)?;
    Family::new(s.clone(), d.row_rhs(), dperturb.row_rhs(), s.color_combination(&d.colors), s.color_combination(&dperturb.colors))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GhVerdict {
    pub holds: bool,
    pub reasons: Vec<String>,
}

/// Is `Q^ε` a G/H-polytope: full-dimensional and not inside any wall.
pub fn is_gh_polytope(f: &Family, eps: &Rat) -> Result<GhVerdict> {
    let snap = f.snapshot(eps)?;
    let n = f.space.rank();
    let mut reasons = Vec::new();
    if snap.vertices.is_empty() {
        reasons.push("empty".to_string());
    } else {
        if snap.dim < n as i64 {
            reasons.push(format!("dimension {} < {n}", snap.dim));
        }
        for &k in &snap.walls_containing {
            reasons.push(format!("contained in wall W_{}", f.space.colors[k].name));
        }
    }
    Ok(GhVerdict { holds: reasons.is_empty(), reasons })
}

/// An interval of ε values with independently open or closed ends; `hi =
/// None` means +∞.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EpsInterval {
    pub lo: Rat,
    pub lo_closed: bool,
    pub hi: Option<Rat>,
    pub hi_closed: bool,
}

impl EpsInterval {
    pub fn point(c: Rat) -> EpsInterval {
        EpsInterval { lo: c.clone(), lo_closed: true, hi: Some(c), hi_closed: true }
    }

    pub fn is_point(&self) -> bool {
        self.hi.as_ref() == Some(&self.lo)
    }

    pub fn contains(&self, e: &Rat) -> bool {
        let above = if self.lo_closed { *e >= self.lo } else { *e > self.lo };
        let below = match &self.hi {
            None => true,
            Some(h) => {
                if self.hi_closed {
                    e <= h
                } else {
                    e < h
                }
            }
        };
        above && below
    }

    /// An interior point (the point itself for degenerate intervals).
    pub fn representative(&self) -> Rat {
        match &self.hi {
            Some(h) => self.lo.midpoint(h),
            None => &self.lo + Rat::one(),
        }
    }
}

impl fmt::Display for EpsInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_point() {
            return write!(f, "{{{}}}", self.lo);
        }
        let open = if self.lo_closed { '[' } else { '(' };
        match &self.hi {
            None => write!(f, "{open}{}, inf)", self.lo),
            Some(h) => write!(f, "{open}{}, {h}{}", self.lo, if self.hi_closed { ']' } else { ')' }),
        }
    }
}

impl Serialize for EpsInterval {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = ser.serialize_struct("EpsInterval", 5)?;
        st.serialize_field("text", &self.to_string())?;
        st.serialize_field("lo", &self.lo)?;
        st.serialize_field("lo_closed", &self.lo_closed)?;
        st.serialize_field("hi", &self.hi)?;
        st.serialize_field("hi_closed", &self.hi_closed)?;
        st.end()
    }
}

/// A vertex of `Q̃^ε` as an affine function of ε, valid on `interval`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexPath {
    pub rows: Vec<usize>,
    pub base: RatVec,
    pub slope: RatVec,
    pub interval: EpsInterval,
}

impl VertexPath {
    pub fn at(&self, eps: &Rat) -> RatVec {
        self.base.axpy(eps, &self.slope)
    }
}

/// Solves `A_J x = B̃_J + ε C̃_J` for every invertible n-subset `J` and keeps
/// the ε ≥ 0 where the solution satisfies every other row.
pub fn vertex_paths(f: &Family) -> Vec<VertexPath> {
    let n = f.space.rank();
    let m = f.a.nrows();
    let mut out = Vec::new();
    for rows in (0..m).combinations(n) {
        let sub = f.a.select_rows(&rows);
        if sub.rank() < n {
            continue;
        }
        let b: Vec<Rat> = rows.iter().map(|&i| f.b_tilde[i].clone()).collect();
        let c: Vec<Rat> = rows.iter().map(|&i| f.c_tilde[i].clone()).collect();
        let base = sub.solve(&b).expect("invertible");
        let slope = sub.solve(&c).expect("invertible");
        // Each row i: s0 + ε s1 ≥ 0.
        let mut lo = Rat::zero();
        let mut hi: Option<Rat> = None;
        let mut feasible = true;
        for i in 0..m {
            let ai = f.a.row_vec(i);
            let s0 = ai.dot(&base) - &f.b_tilde[i];
            let s1 = ai.dot(&slope) - &f.c_tilde[i];
            if s1.is_zero() {
                if s0.is_negative() {
                    feasible = false;
                    break;
                }
                continue;
            }
            let root = -(&s0 / &s1);
            if s1.is_positive() {
                if root > lo {
                    lo = root;
                }
            } else if hi.as_ref().is_none_or(|h| root < *h) {
                hi = Some(root);
            }
        }
        if !feasible || hi.as_ref().is_some_and(|h| *h < lo) {
            continue;
        }
        out.push(VertexPath { rows, base, slope, interval: EpsInterval { lo, lo_closed: true, hi, hi_closed: true } });
    }
    out
}

/// Positive finite endpoints of vertex paths, sorted and deduplicated: the
/// only ε where the combinatorics of `Q̃^ε` can change.
pub fn candidates(f: &Family) -> Vec<Rat> {
    let mut set = BTreeSet::new();
    for p in vertex_paths(f) {
        if p.interval.lo.is_positive() {
            set.insert(p.interval.lo.clone());
        }
        if let Some(h) = p.interval.hi {
            if h.is_positive() {
                set.insert(h);
            }
        }
    }
    set.into_iter().collect()
}

/// Half the first candidate (or 1 if there is none): a point strictly inside
/// the first open interval.
pub fn first_candidate_half(f: &Family) -> Rat {
    candidates(f).first().map(|c| c / Rat::int(2)).unwrap_or_else(Rat::one)
}

/// Same G/H-polytope up to moving facets: the common facet rows cut out
/// both polytopes, give faces of equal dimension, and the walls touched agree.
pub fn equivalent_snapshots(a: &Snapshot, b: &Snapshot) -> bool {
    if a.wall_touch != b.wall_touch || a.dim != b.dim {
        return false;
    }
    let common: Vec<usize> = a.facets.intersection(&b.facets).copied().collect();
    for s in [a, b] {
        let cut = s.polytope.select_rows(&common);
        if !cut.is_bounded() {
            return false;
        }
        let Ok(verts) = cut.vertices() else { return false };
        if !verts.iter().all(|v| s.polytope.contains(&v.point)) {
            return false;
        }
    }
    let common: RowSet = common.into_iter().collect();
    closed_faces(&a.vertices, &common) == closed_faces(&b.vertices, &common)
}

/// Row sets `T ⊆ rows` that equal the rows tight on their own face, with the
/// face dimensions. Two polytopes give the same face dimension for every
/// `T ⊆ rows` exactly when these maps agree.
fn closed_faces(verts: &[VertexRecord], rows: &RowSet) -> BTreeMap<RowSet, i64> {
    let mut out = BTreeMap::new();
    if verts.is_empty() {
        return out;
    }
    let mut queue: Vec<RowSet> = verts.iter().map(|v| v.tight.intersection(rows).copied().collect()).collect();
    queue.push(queue.iter().skip(1).fold(queue[0].clone(), |acc, t| acc.intersection(t).copied().collect()));
    while let Some(t) = queue.pop() {
        if out.contains_key(&t) {
            continue;
        }
        let others: Vec<RowSet> = out.keys().map(|u: &RowSet| u.intersection(&t).copied().collect()).collect();
        out.insert(t.clone(), face_dim_from_vertices(verts, &t));
        queue.extend(others.into_iter().filter(|u| !out.contains_key(u)));
    }
    out
}

pub fn is_equivalent(f: &Family, e1: &Rat, e2: &Rat) -> Result<bool> {
    let n = f.space.rank();
    let a = f.snapshot(e1)?;
    let b = f.snapshot(e2)?;
    for s in [&a, &b] {
        if !s.is_gh(n) {
            return Err(Error::PreconditionFailed(format!("Q^{} is not a G/H-polytope", s.eps)));
        }
    }
    Ok(equivalent_snapshots(&a, &b))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassSignature {
    pub dim: i64,
    pub facet_rows: RowSet,
    pub wall_touch: BTreeSet<usize>,
    pub walls_containing: BTreeSet<usize>,
    pub vertex_count: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassInterval {
    pub interval: EpsInterval,
    /// A sample inside the interval (an open-gap sample when there is one).
    pub representative: Rat,
    pub signature: ClassSignature,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScanKind {
    At(Rat),
    Open { lo: Rat, hi: Option<Rat> },
}

/// One evaluated point of the scan: a candidate or a sample inside the gap
/// between two candidates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScanEntry {
    pub kind: ScanKind,
    pub snapshot: Snapshot,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpsilonClassification {
    pub candidates: Vec<Rat>,
    /// First ε where `Q^ε` stops being a G/H-polytope; `None` for +∞.
    pub eps_max: Option<Rat>,
    pub intervals: Vec<ClassInterval>,
    /// Class boundaries in (0, eps_max], including a finite eps_max.
    pub breakpoints: Vec<Rat>,
    /// Departures from the expected structure; `run` refuses to proceed when
    /// this is nonempty.
    pub anomalies: Vec<String>,
    /// Largest ε inspected when checking stabilization.
    pub window: Rat,
    /// The evaluated scan up to eps_max (inclusive when finite).
    pub scan: Vec<ScanEntry>,
}

impl EpsilonClassification {
    pub fn class_of(&self, eps: &Rat) -> Option<usize> {
        self.intervals.iter().position(|c| c.interval.contains(eps))
    }
}

/// Partitions `[0, eps_max)` into maximal intervals of equivalent
/// G/H-polytopes. `window` bounds the stabilization check when eps_max is
/// infinite (default: 4 × the last candidate + 1).
pub fn breakpoints(f: &Family, window: Option<&Rat>) -> Result<EpsilonClassification> {
    let n = f.space.rank();
    let cands = candidates(f);
    let mut plan: Vec<(ScanKind, Rat)> = vec![(ScanKind::At(Rat::zero()), Rat::zero())];
    let mut prev = Rat::zero();
    for c in &cands {
        plan.push((ScanKind::Open { lo: prev.clone(), hi: Some(c.clone()) }, prev.midpoint(c)));
        plan.push((ScanKind::At(c.clone()), c.clone()));
        prev = c.clone();
    }
    plan.push((ScanKind::Open { lo: prev.clone(), hi: None }, &prev + Rat::one()));

    let mut scan: Vec<ScanEntry> = Vec::new();
    let mut eps_max: Option<Rat> = None;
    for (kind, sample) in plan {
        let snapshot = f.snapshot(&sample)?;
        let ok = snapshot.is_gh(n);
        let at = matches!(kind, ScanKind::At(_));
        scan.push(ScanEntry { kind, snapshot });
        if !ok {
            if sample.is_zero() {
                return Err(Error::PreconditionFailed("Q^0 is not a G/H-polytope".into()));
            }
            if !at {
                return Err(Error::Invariant(format!("Q^ε fails to be a G/H-polytope on an open interval around {sample}")));
            }
            eps_max = Some(sample);
            break;
        }
    }

    let mut anomalies = Vec::new();
    let last = cands.last().cloned().unwrap_or_else(Rat::zero);
    let window = window.cloned().unwrap_or_else(|| Rat::int(4) * &last + Rat::one());
    if eps_max.is_none() {
        let tail = &scan.last().expect("nonempty scan").snapshot;
        if window > tail.eps {
            let far = f.snapshot(&window)?;
            if !far.is_gh(n) || !equivalent_snapshots(tail, &far) {
                anomalies.push(format!("class at {window} differs from the class after the last candidate {last}"));
            }
        }
    }

    // Walk the scan: entries alternate At(0), Open, At(c1), Open, ...
    let usable = if eps_max.is_some() { scan.len() - 1 } else { scan.len() };
    let mut intervals = Vec::new();
    let mut bps = Vec::new();
    let mut cur_lo = Rat::zero();
    let mut cur_lo_closed = true;
    let mut cur_rep: Option<usize> = None;
    let close = |intervals: &mut Vec<ClassInterval>, lo: &Rat, lo_closed: bool, hi: Option<Rat>, hi_closed: bool, rep: usize| {
        let snap = &scan[rep].snapshot;
        intervals.push(ClassInterval {
            interval: EpsInterval { lo: lo.clone(), lo_closed, hi, hi_closed },
            representative: snap.eps.clone(),
            signature: snap.signature(),
        });
    };
    // ε = 0 against the first gap.
    if usable >= 2 && !equivalent_snapshots(&scan[0].snapshot, &scan[1].snapshot) {
        close(&mut intervals, &Rat::zero(), true, Some(Rat::zero()), true, 0);
        cur_lo_closed = false;
    }
    let mut i = 2;
    while i < usable {
        let c = scan[i].snapshot.eps.clone();
        let (left, point, right) = (&scan[i - 1].snapshot, &scan[i].snapshot, &scan[i + 1].snapshot);
        let rep = *cur_rep.get_or_insert(i - 1);
        let eq_l = equivalent_snapshots(point, left);
        let eq_r = equivalent_snapshots(point, right);
        match (eq_l, eq_r) {
            (true, true) => {
                if !equivalent_snapshots(left, right) {
                    anomalies.push(format!("equivalence is not transitive across {c}"));
                    close(&mut intervals, &cur_lo, cur_lo_closed, Some(c.clone()), true, rep);
                    bps.push(c.clone());
                    cur_lo = c;
                    cur_lo_closed = false;
                    cur_rep = None;
                }
            }
            (false, true) => {
                close(&mut intervals, &cur_lo, cur_lo_closed, Some(c.clone()), false, rep);
                bps.push(c.clone());
                cur_lo = c;
                cur_lo_closed = true;
                cur_rep = Some(i + 1);
            }
            (true, false) => {
                anomalies.push(format!("slice at {c} is equivalent only to the slices on its left"));
                close(&mut intervals, &cur_lo, cur_lo_closed, Some(c.clone()), true, rep);
                bps.push(c.clone());
                cur_lo = c;
                cur_lo_closed = false;
                cur_rep = None;
            }
            (false, false) => {
                close(&mut intervals, &cur_lo, cur_lo_closed, Some(c.clone()), false, rep);
                close(&mut intervals, &c, true, Some(c.clone()), true, i);
                bps.push(c.clone());
                cur_lo = c;
                cur_lo_closed = false;
                cur_rep = None;
            }
        }
        i += 2;
    }
    let rep = cur_rep.unwrap_or(usable - 1);
    let rep = if usable == 1 { 0 } else { rep };
    match &eps_max {
        Some(e) => {
            close(&mut intervals, &cur_lo, cur_lo_closed, Some(e.clone()), false, rep);
            bps.push(e.clone());
        }
        None => close(&mut intervals, &cur_lo, cur_lo_closed, None, false, rep),
    }
    Ok(EpsilonClassification { candidates: cands, eps_max, intervals, breakpoints: bps, anomalies, window, scan })
}

/// The set of ε in `[0, eps_max)` where `row` defines a facet of `Q̃^ε`, as a
/// single interval (possibly half-open). Errors if that set is not convex.
pub fn facet_interval(row: usize, cls: &EpsilonClassification) -> Result<Option<EpsInterval>> {
    let usable = if cls.eps_max.is_some() { cls.scan.len() - 1 } else { cls.scan.len() };
    let member: Vec<bool> = cls.scan[..usable].iter().map(|e| e.snapshot.facets.contains(&row)).collect();
    let runs = member.iter().dedup().filter(|&&m| m).count();
    if runs == 0 {
        return Ok(None);
    }
    if runs > 1 {
        return Err(Error::Invariant(format!("row {row} is a facet on a non-convex set of epsilons")));
    }
    let first = member.iter().position(|&m| m).expect("run exists");
    let last = member.iter().rposition(|&m| m).expect("run exists");
    let (lo, lo_closed) = match &cls.scan[first].kind {
        ScanKind::At(c) => (c.clone(), true),
        ScanKind::Open { lo, .. } => (lo.clone(), false),
    };
    let (hi, hi_closed) = match &cls.scan[last].kind {
        ScanKind::At(c) => (Some(c.clone()), true),
        ScanKind::Open { hi, .. } => (hi.clone(), false),
    };
    // A run reaching the last usable gap ends at eps_max (open) or +∞.
    let hi = if last == usable - 1 && hi.is_none() { cls.eps_max.clone() } else { hi };
    Ok(Some(EpsInterval { lo, lo_closed, hi, hi_closed }))
}

fn q_cartier_one_side(s: &SpaceData, d: &BStableDivisor, dprime: &BStableDivisor) -> Result<bool> {
    let f = build_family(s, d, dprime)?;
    let eps = first_candidate_half(&f);
    let snap = f.snapshot(&eps)?;
    if !snap.is_gh(s.rank()) {
        return Ok(false);
    }
    Ok(equivalent_snapshots(&f.snapshot(&Rat::zero())?, &snap))
}

/// `D'` is ℚ-Cartier on the variety of `(s, D)` iff small perturbations of
/// `D` by `±D'` keep the polytope in the same equivalence class.
pub fn is_q_cartier(s: &SpaceData, d: &BStableDivisor, dprime: &BStableDivisor) -> Result<bool> {
    Ok(q_cartier_one_side(s, d, dprime)? && q_cartier_one_side(s, d, &dprime.neg())?)
}

/// Every prime B-stable divisor is ℚ-Cartier.
pub fn is_q_factorial(s: &SpaceData, d: &BStableDivisor) -> Result<bool> {
    for e in BStableDivisor::prime_divisors(s) {
        if !is_q_cartier(s, d, &e)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GeneralPosition {
    pub holds: bool,
    /// An (n+1)-subset of rows whose hyperplanes share a point.
    pub violating_rows: Option<Vec<usize>>,
}

/// No n+1 of the hyperplanes `A_i x = B̃_i` pass through a common point.
pub fn general_position(f: &Family) -> GeneralPosition {
    let n = f.space.rank();
    for rows in (0..f.a.nrows()).combinations(n + 1) {
        let sub = f.a.select_rows(&rows);
        let b: Vec<Rat> = rows.iter().map(|&i| f.b_tilde[i].clone()).collect();
        if sub.solve(&b).is_some() {
            return GeneralPosition { holds: false, violating_rows: Some(rows) };
        }
    }
    GeneralPosition { holds: true, violating_rows: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{sl2_cstar, sl3};
    use crate::model::{anticanonical, divisor_from_ints, log_canonical};

    fn r(s: &str) -> Rat {
        s.parse().unwrap()
    }

    fn sl3_family(delta: &BStableDivisor) -> Family {
        let s = sl3();
        build_family(&s, &divisor_from_ints(&[1, 1], &[4, 4]), &log_canonical(&s, delta)).unwrap()
    }

    #[test]
    fn sl3_rows() {
        let f = sl3_family(&divisor_from_ints(&[0, 0], &[0, 0]));
        assert_eq!(f.b_tilde(), &RatVec::from_ints(&[-1, -1, -4, -4]));
        assert_eq!(f.c_tilde(), &RatVec::from_ints(&[1, 1, 2, 2]));
        let f = sl3_family(&divisor_from_ints(&[1, 1], &[0, 0]));
        assert_eq!(f.c_tilde(), &RatVec::from_ints(&[0, 0, 2, 2]));
        assert_eq!(f.w(), &RatVec::from_ints(&[-2, -2]));
    }

    #[test]
    fn sl3_delta0_collapses_at_one() {
        let f = sl3_family(&BStableDivisor::zero(&sl3()));
        let cls = breakpoints(&f, None).unwrap();
        assert_eq!(cls.eps_max, Some(r("1")));
        assert_eq!(cls.intervals.len(), 1);
        assert!(cls.anomalies.is_empty());
        let v = is_gh_polytope(&f, &r("1")).unwrap();
        assert!(!v.holds);
        assert_eq!(v.reasons, vec!["dimension 0 < 1".to_string()]);
    }

    #[test]
    fn sl3_delta_x1x2_classes() {
        let f = sl3_family(&divisor_from_ints(&[1, 1], &[0, 0]));
        assert_eq!(candidates(&f), vec![r("1"), r("2"), r("5/2")]);
        let cls = breakpoints(&f, None).unwrap();
        assert_eq!(cls.eps_max, Some(r("5/2")));
        let texts: Vec<String> = cls.intervals.iter().map(|c| c.interval.to_string()).collect();
        assert_eq!(texts, vec!["[0, 1)", "[1, 2)", "{2}", "(2, 5/2)"]);
        assert_eq!(cls.breakpoints, vec![r("1"), r("2"), r("5/2")]);
        let touches: Vec<Vec<usize>> = cls.intervals.iter().map(|c| c.signature.wall_touch.iter().copied().collect()).collect();
        assert_eq!(touches, vec![vec![], vec![1], vec![0, 1], vec![0]]);
        let (_, q, _) = f.slice(&r("5/2")).unwrap();
        assert_eq!(q, vec![RatVec::from_ints(&[0, 1])]);
        let v = is_gh_polytope(&f, &r("5/2")).unwrap();
        assert!(v.reasons.contains(&"contained in wall W_alpha".to_string()));
    }

    #[test]
    fn sl3_vertex_paths() {
        let f = sl3_family(&divisor_from_ints(&[1, 1], &[0, 0]));
        let got: Vec<(Vec<usize>, String)> = vertex_paths(&f).into_iter().map(|p| (p.rows, p.interval.to_string())).collect();
        assert_eq!(
            got,
            vec![
                (vec![0], "[0, 1]".to_string()),
                (vec![1], "[0, 5/2]".to_string()),
                (vec![2], "[2, 5/2]".to_string()),
                (vec![3], "[1, 2]".to_string()),
            ]
        );
    }

    #[test]
    fn facet_intervals_half_open() {
        let f = sl3_family(&divisor_from_ints(&[1, 1], &[0, 0]));
        let cls = breakpoints(&f, None).unwrap();
        // X1 stays a facet up to and including ε = 1, where the β row catches up.
        assert_eq!(facet_interval(0, &cls).unwrap().unwrap().to_string(), "[0, 1]");
        assert_eq!(facet_interval(1, &cls).unwrap().unwrap().to_string(), "[0, 5/2)");
        assert_eq!(facet_interval(3, &cls).unwrap().unwrap().to_string(), "[1, 2]");
        assert_eq!(facet_interval(2, &cls).unwrap().unwrap().to_string(), "[2, 5/2)");
    }

    #[test]
    fn ex1_q_cartier_hyperplane() {
        let s = sl2_cstar();
        let d = divisor_from_ints(&[3, -3, 2], &[0]);
        let k = anticanonical(&s).neg();
        assert!(!is_q_cartier(&s, &d, &k).unwrap());
        assert!(is_q_cartier(&s, &d, &d).unwrap());
        // 4 + δ1 + δ2 - 3δα = 0
        let on = log_canonical(&s, &divisor_from_ints(&[-1, 0, 0], &[1]));
        assert!(is_q_cartier(&s, &d, &on).unwrap());
        let off = log_canonical(&s, &divisor_from_ints(&[0, 0, 0], &[1]));
        assert!(!is_q_cartier(&s, &d, &off).unwrap());
    }

    #[test]
    fn ex1_general_position_fails() {
        let s = sl2_cstar();
        let f = build_family(&s, &divisor_from_ints(&[3, -3, 2], &[0]), &BStableDivisor::zero(&s)).unwrap();
        let gp = general_position(&f);
        assert!(!gp.holds);
        assert_eq!(gp.violating_rows, Some(vec![0, 1, 3]));
    }

    #[test]
    fn negative_epsilon_rejected() {
        let f = sl3_family(&BStableDivisor::zero(&sl3()));
        assert!(matches!(f.snapshot(&r("-1")), Err(Error::PreconditionFailed(_))));
        assert!(is_equivalent(&f, &r("0"), &r("1")).is_err());
        assert!(is_equivalent(&f, &r("0"), &r("1/2")).unwrap());
    }
}
