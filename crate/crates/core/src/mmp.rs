//! The log MMP run: steps `X(i,j)` / `Y(i,j)`, breakpoint events, the
//! fiber-type target, equivariant morphisms, and the checks that every run
//! satisfies the expected sign and pair conditions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use itertools::Itertools;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{lattice_intersect_subspace, primitive_integer, LatticeBasis, Rat, RatMat, RatVec};
use crate::family::{
    breakpoints, build_family, general_position, is_q_cartier, is_q_factorial, ClassSignature, EpsInterval, EpsilonClassification,
    Family, GeneralPosition, Snapshot,
};
use crate::model::{
    build_quadruple, classify_singularities, curves, intersect_divisor, log_canonical, BStableDivisor, Color, CurveClass, CurveKind,
    GStableDivisor, MomentQuadruple, Singularity, SpaceData,
};
use crate::polytope::{facet_rows_from_vertices, HPolytope, VertexRecord};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HorosphericalPair {
    pub space: SpaceData,
    pub d: BStableDivisor,
    pub delta: BStableDivisor,
    /// `K + Δ` is ℚ-Cartier.
    pub certified: bool,
}

impl HorosphericalPair {
    /// `D` must define a valid moment quadruple; certification is computed.
    pub fn new(space: SpaceData, d: BStableDivisor, delta: BStableDivisor) -> Result<HorosphericalPair> {
        build_quadruple(&space, &d)?;
        delta.check_space(&space)?;
        let certified = is_q_cartier(&space, &d, &log_canonical(&space, &delta))?;
        Ok(HorosphericalPair { space, d, delta, certified })
    }

    pub fn log_canonical(&self) -> BStableDivisor {
        log_canonical(&self.space, &self.delta)
    }

    pub fn singularity(&self) -> Singularity {
        classify_singularities(&self.delta)
    }

    pub fn family(&self) -> Result<Family> {
        build_family(&self.space, &self.d, &self.log_canonical())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum StepKind {
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StepLabel {
    pub kind: StepKind,
    pub i: usize,
    pub j: usize,
}

impl fmt::Display for StepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            StepKind::X => 'X',
            StepKind::Y => 'Y',
        };
        write!(f, "{k}({},{})", self.i, self.j)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MmpStep {
    pub label: StepLabel,
    pub interval: EpsInterval,
    pub representative: Rat,
    /// Indices (in the input space) of the G-stable divisors still present.
    pub surviving_gstable: Vec<usize>,
    /// The input space restricted to the surviving divisors.
    pub space: SpaceData,
    /// `D + ε (K + Δ)` at the representative, on the restricted space.
    pub divisor: BStableDivisor,
    pub quadruple: MomentQuadruple,
    pub delta_pushforward: BStableDivisor,
    pub wall_touch: BTreeSet<usize>,
}

impl MmpStep {
    pub fn log_canonical(&self) -> BStableDivisor {
        log_canonical(&self.space, &self.delta_pushforward)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EventKind {
    Divisorial { contracted: Vec<usize> },
    Flip { wall_touch_before: BTreeSet<usize>, wall_touch_at: BTreeSet<usize>, wall_touch_after: BTreeSet<usize> },
    FiberType(Box<FiberData>),
    Stabilized { signature: ClassSignature, window: Rat },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Divisorial { .. } => "divisorial",
            EventKind::Flip { .. } => "flip",
            EventKind::FiberType(_) => "fiber_type",
            EventKind::Stabilized { .. } => "stabilized",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BreakpointEvent {
    /// `None` for stabilization (ε = +∞).
    pub eps: Option<Rat>,
    pub kind: EventKind,
    pub left_step: usize,
    /// The isolated Y-step of a flip.
    pub center_step: Option<usize>,
    pub right_step: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiberData {
    pub eps: Rat,
    /// Colors whose wall contains `Q^{eps_max}`.
    pub added_wall_colors: Vec<usize>,
    /// Saturated direction lattice of `Q^{eps_max}`, in weight coordinates.
    pub m1: LatticeBasis,
    /// Weight-basis indices spanning the chosen complement of `M¹`.
    pub quotient_coordinates: Vec<usize>,
    /// The target `Z`: colors not added, lattice `M¹`.
    pub z_quadruple: MomentQuadruple,
    /// M-basis indices used as coordinates on `M / M¹`.
    pub fiber_coordinates: Vec<usize>,
    /// Projection of `Q̃^ε` (ε inside the last interval) to `M / M¹`.
    pub fiber_polytope: HPolytope,
    /// The same projection of `Q^ε` in the quotient weight coordinates.
    pub fiber_vertices: Vec<RatVec>,
    pub fiber_sample: Rat,
    pub fiber_rank: usize,
    pub fiber_is_point: bool,
    pub fiber_class_rank: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MmpReport {
    pub pair: HorosphericalPair,
    pub family: Family,
    pub classification: EpsilonClassification,
    pub steps: Vec<MmpStep>,
    pub events: Vec<BreakpointEvent>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Largest ε inspected when checking stabilization.
    pub max_epsilon: Option<Rat>,
}

fn invariant<T>(context: &str) -> impl FnOnce(Error) -> Result<T> + '_ {
    move |e| Err(Error::Invariant(format!("{context}: {e}")))
}

/// G-stable rows that are facets of the slice and whose facet lies in no wall.
pub fn surviving_gstable(f: &Family, snap: &Snapshot) -> Vec<usize> {
    let r = f.space().gstable.len();
    let s = f.space().colors.len();
    (0..r)
        .filter(|i| snap.facets.contains(i))
        .filter(|&i| {
            let face: Vec<&VertexRecord> = snap.vertices.iter().filter(|v| v.tight.contains(&i)).collect();
            !(0..s).any(|k| face.iter().all(|v| v.tight.contains(&(r + k))))
        })
        .collect()
}

fn build_step(pair: &HorosphericalPair, f: &Family, label: StepLabel, interval: EpsInterval, rep: Rat) -> Result<MmpStep> {
    let snap = f.snapshot(&rep)?;
    let surv = surviving_gstable(f, &snap);
    let space = pair.space.restrict_gstable(&surv);
    let rhs = f.rhs_at(&rep);
    let r = pair.space.gstable.len();
    let divisor = BStableDivisor::new(
        surv.iter().map(|&i| -&rhs[i]).collect(),
        (0..pair.space.colors.len()).map(|k| -&rhs[r + k]).collect(),
    );
    let quadruple = build_quadruple(&space, &divisor).or_else(invariant(&format!("step {label}")))?;
    let mut a: Vec<&RatVec> = quadruple.vertices().iter().map(|v| &v.point).collect();
    let mut b: Vec<&RatVec> = snap.vertices.iter().map(|v| &v.point).collect();
    a.sort();
    b.sort();
    if a != b {
        return Err(Error::Invariant(format!("step {label}: surviving rows do not cut out the slice")));
    }
    Ok(MmpStep {
        label,
        interval,
        representative: rep,
        delta_pushforward: pair.delta.restrict_gstable(&surv),
        surviving_gstable: surv,
        space,
        divisor,
        quadruple,
        wall_touch: snap.wall_touch,
    })
}

/// Kind of the event at a breakpoint `eps` of `cls` (which must have no
/// anomalies).
pub fn classify_breakpoint(f: &Family, cls: &EpsilonClassification, eps: &Rat) -> Result<EventKind> {
    if !cls.anomalies.is_empty() {
        return Err(Error::Invariant(format!("classification anomalies: {}", cls.anomalies.join("; "))));
    }
    if !cls.breakpoints.contains(eps) {
        return Err(Error::PreconditionFailed(format!("{eps} is not a breakpoint")));
    }
    if cls.eps_max.as_ref() == Some(eps) {
        return Ok(EventKind::FiberType(Box::new(fiber_data(f, cls)?)));
    }
    let idx = cls.class_of(eps).ok_or_else(|| Error::Invariant(format!("breakpoint {eps} lies in no class")))?;
    if idx == 0 {
        return Err(Error::Invariant(format!("breakpoint {eps} lies in the first class")));
    }
    let here = &cls.intervals[idx];
    let left = &cls.intervals[idx - 1];
    if here.interval.is_point() {
        let right = cls.intervals.get(idx + 1).ok_or_else(|| Error::Invariant("flip without a right class".into()))?;
        return Ok(EventKind::Flip {
            wall_touch_before: left.signature.wall_touch.clone(),
            wall_touch_at: here.signature.wall_touch.clone(),
            wall_touch_after: right.signature.wall_touch.clone(),
        });
    }
    let before: BTreeSet<usize> = surviving_gstable(f, &f.snapshot(&left.representative)?).into_iter().collect();
    let after: BTreeSet<usize> = surviving_gstable(f, &f.snapshot(&here.representative)?).into_iter().collect();
    let contracted: Vec<usize> = before.difference(&after).copied().collect();
    if contracted.is_empty() {
        return Err(Error::Invariant(format!("divisorial event at {eps} contracts no G-stable divisor")));
    }
    Ok(EventKind::Divisorial { contracted })
}

/// Runs the log MMP for a certified pair.
pub fn run(pair: &HorosphericalPair, opts: &RunOptions) -> Result<MmpReport> {
    if !pair.certified {
        return Err(Error::PairNotCertified);
    }
    let kd = pair.log_canonical();
    if kd.is_zero() {
        return Err(Error::ZeroPerturbation);
    }
    let f = pair.family()?;
    let cls = breakpoints(&f, opts.max_epsilon.as_ref())?;
    if !cls.anomalies.is_empty() {
        return Err(Error::Invariant(format!("classification anomalies: {}", cls.anomalies.join("; "))));
    }
    let mut steps = Vec::new();
    let (mut i, mut j) = (0usize, 0usize);
    for (idx, c) in cls.intervals.iter().enumerate() {
        let label = if idx == 0 {
            StepLabel { kind: StepKind::X, i: 0, j: 0 }
        } else if c.interval.is_point() {
            j += 1;
            StepLabel { kind: StepKind::Y, i, j }
        } else if c.interval.lo_closed {
            i += 1;
            j = 0;
            StepLabel { kind: StepKind::X, i, j }
        } else {
            StepLabel { kind: StepKind::X, i, j }
        };
        steps.push(build_step(pair, &f, label, c.interval.clone(), c.representative.clone())?);
    }
    let mut events = Vec::new();
    for bp in &cls.breakpoints {
        let kind = classify_breakpoint(&f, &cls, bp)?;
        let event = match &kind {
            EventKind::FiberType(_) => {
                BreakpointEvent { eps: Some(bp.clone()), kind, left_step: steps.len() - 1, center_step: None, right_step: None }
            }
            EventKind::Flip { .. } => {
                let idx = cls.class_of(bp).expect("classified");
                BreakpointEvent { eps: Some(bp.clone()), kind, left_step: idx - 1, center_step: Some(idx), right_step: Some(idx + 1) }
            }
            _ => {
                let idx = cls.class_of(bp).expect("classified");
                BreakpointEvent { eps: Some(bp.clone()), kind, left_step: idx - 1, center_step: None, right_step: Some(idx) }
            }
        };
        events.push(event);
    }
    if cls.eps_max.is_none() {
        let last = cls.intervals.last().expect("at least one class");
        events.push(BreakpointEvent {
            eps: None,
            kind: EventKind::Stabilized { signature: last.signature.clone(), window: cls.window.clone() },
            left_step: steps.len() - 1,
            center_step: None,
            right_step: None,
        });
    }
    Ok(MmpReport { pair: pair.clone(), family: f, classification: cls, steps, events })
}

/// The pair to restart from at an X-step: its space, its divisor as the
/// ample polarization and the pushed-forward boundary.
pub fn restart_pair(step: &MmpStep) -> Result<HorosphericalPair> {
    HorosphericalPair::new(step.space.clone(), step.divisor.clone(), step.delta_pushforward.clone())
}

/// Lexicographically first set of standard basis indices completing the
/// rows of `basis` to a basis of ℚ^dim.
fn complement_coordinates(basis: &[RatVec], dim: usize) -> Vec<usize> {
    let need = dim - basis.len();
    for subset in (0..dim).combinations(need) {
        let mut rows = basis.to_vec();
        rows.extend(subset.iter().map(|&k| RatVec::unit(dim, k)));
        if RatMat::from_rows(dim, rows).expect("same width").rank() == dim {
            return subset;
        }
    }
    unreachable!("standard basis always completes a linearly independent set")
}

/// Writes `v = Σ y_k e_{coords[k]} + Σ c_j basis_j`; returns `(y, c)`.
fn split(v: &RatVec, coords: &[usize], basis: &[RatVec]) -> (RatVec, RatVec) {
    let dim = v.len();
    let mut cols: Vec<RatVec> = coords.iter().map(|&k| RatVec::unit(dim, k)).collect();
    cols.extend(basis.iter().cloned());
    let m = RatMat::from_rows(dim, cols).expect("same width").transpose();
    let sol = m.solve(v).expect("complement spans");
    let y: RatVec = sol[..coords.len()].iter().cloned().collect();
    let c: RatVec = sol[coords.len()..].iter().cloned().collect();
    (y, c)
}

struct FiberPolytope {
    coords: Vec<usize>,
    polytope: HPolytope,
    vertices: Vec<RatVec>,
    facet_count: usize,
    free_facets: usize,
}

/// Projects `Q̃^eps` along `M¹` (given by `mu`, its basis in M coordinates).
fn project_fiber(f: &Family, eps: &Rat, mu: &[RatVec], m1_weights: &[RatVec], quotient: &[usize], added: &[usize]) -> Result<FiberPolytope> {
    let s = f.space();
    let n = s.rank();
    let coords = complement_coordinates(mu, n);
    let p = f.polytope_at(eps);
    // x = Σ y_k e_{coords[k]} + Σ z_j mu_j
    let mut cols: Vec<RatVec> = coords.iter().map(|&k| RatVec::unit(n, k)).collect();
    cols.extend(mu.iter().cloned());
    let sub = RatMat::from_rows(n, cols)?.transpose();
    let lifted = HPolytope::new(p.matrix().mul(&sub), p.rhs().clone())?;
    let polytope = lifted.eliminate_last(mu.len())?;
    let verts = polytope.vertices()?;
    let translation = f.translation_at(eps);
    let embed_y = |y: &RatVec| -> RatVec {
        let mut x = RatVec::zeros(n);
        for (k, &c) in coords.iter().enumerate() {
            x[c] = y[k].clone();
        }
        &translation + &s.embed(&x)
    };
    let vertices: Vec<RatVec> = verts.iter().map(|v| split(&embed_y(&v.point), quotient, m1_weights).0).collect();
    let facets = facet_rows_from_vertices(&verts);
    let mut free_facets = 0;
    for &row in &facets {
        let face: Vec<&VertexRecord> = verts.iter().filter(|v| v.tight.contains(&row)).collect();
        let in_wall = added.iter().any(|&k| face.iter().all(|v| s.pairing(&embed_y(&v.point), k).is_zero()));
        if !in_wall {
            free_facets += 1;
        }
    }
    Ok(FiberPolytope { coords, polytope, vertices, facet_count: facets.len(), free_facets })
}

/// The fiber-type contraction at a finite eps_max: `M¹`, the added walls,
/// the target `Z`, and the general fiber's polytope.
pub fn fiber_data(f: &Family, cls: &EpsilonClassification) -> Result<FiberData> {
    let eps = cls.eps_max.clone().ok_or_else(|| Error::PreconditionFailed("eps_max is infinite".into()))?;
    let s = f.space();
    let n = s.rank();
    let d = s.weight_dim;
    let r = s.gstable.len();
    let snap = f.snapshot(&eps)?;
    if snap.vertices.is_empty() {
        return Err(Error::PreconditionFailed(format!("Q^{eps} is empty")));
    }
    if snap.is_gh(n) {
        return Err(Error::PreconditionFailed(format!("Q^{eps} is still a G/H-polytope")));
    }
    let p0 = &snap.vertices[0].point;
    let dirs: Vec<RatVec> = snap.vertices[1..].iter().map(|v| s.embed(&(&v.point - p0))).collect();
    let dir_basis = RatMat::from_rows(d, dirs)?.row_space_basis();
    let m1 = lattice_intersect_subspace(&s.lattice_m, &dir_basis)?;
    let m1_weights: Vec<RatVec> = (0..m1.rank()).map(|j| m1.row_rat(j)).collect();
    let mu: Vec<RatVec> = m1_weights.iter().map(|w| s.lattice_m.coordinates(w).expect("M¹ ⊂ M")).collect();
    let added: Vec<usize> = snap.walls_containing.iter().copied().collect();
    let quotient = complement_coordinates(&m1_weights, d);

    // Z: Q^{eps} = t + Σ y_j m1_j.
    let q0 = &snap.translation + &s.embed(p0);
    let (_, c) = split(&q0, &quotient, &m1_weights);
    let t = {
        let shift = m1_weights.iter().zip(c.iter()).fold(RatVec::zeros(d), |acc, (w, cj)| acc.axpy(cj, w));
        &q0 - &shift
    };
    let rhs = f.rhs_at(&eps);
    let m = f.a().nrows();
    let mut y_rows: Vec<(usize, RatVec, Rat)> = Vec::new();
    for i in 0..m {
        let ai = f.a().row_vec(i);
        let normal: RatVec = mu.iter().map(|mj| ai.dot(mj)).collect();
        if normal.is_zero() {
            continue;
        }
        let b = &rhs[i] - ai.dot(p0) + normal.dot(&c);
        y_rows.push((i, normal, b));
    }
    let k1 = m1.rank();
    let py = HPolytope::new(
        RatMat::from_rows(k1, y_rows.iter().map(|(_, nrm, _)| nrm.clone()).collect())?,
        y_rows.iter().map(|(_, _, b)| b.clone()).collect(),
    )?;
    let pverts = py.vertices()?;
    let z_colors: Vec<usize> = (0..s.colors.len()).filter(|k| !added.contains(k)).collect();
    let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for row in facet_rows_from_vertices(&pverts) {
        let face: Vec<usize> = (0..pverts.len()).filter(|&v| pverts[v].tight.contains(&row)).collect();
        groups.entry(face).or_default().push(row);
    }
    let mut z_gstable = Vec::new();
    let mut z_rhs = Vec::new();
    let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
    groups.sort_by_key(|g| y_rows[g[0]].0);
    for g in groups {
        let orig: Vec<usize> = g.iter().map(|&row| y_rows[row].0).collect();
        if orig.iter().any(|&i| i >= r) {
            continue; // supported by a color row, so inside that wall
        }
        let (i0, normal, b) = &y_rows[g[0]];
        let prim = primitive_integer(normal);
        let scale = normal.iter().zip(&prim).find(|(_, p)| **p != num_bigint::BigInt::ZERO).map(|(x, p)| x / Rat::from_bigint(p.clone())).expect("nonzero");
        let x: Vec<i64> = prim
            .iter()
            .map(|v| i64::try_from(v).map_err(|_| Error::Domain("Z normal vector exceeds 64-bit range".into())))
            .collect::<Result<_>>()?;
        z_gstable.push(GStableDivisor { name: s.gstable[*i0].name.clone(), x });
        z_rhs.push(b / &scale);
    }
    let z_space = SpaceData {
        weight_dim: d,
        basis_labels: s.basis_labels.clone(),
        colors: z_colors.iter().map(|&k| s.colors[k].clone()).collect::<Vec<Color>>(),
        lattice_m: m1.clone(),
        gstable: z_gstable,
    };
    for k in 0..z_space.colors.len() {
        z_rhs.push(-z_space.pairing(&t, k));
    }
    let z_poly = HPolytope::new(z_space.row_matrix(), RatVec(z_rhs))?;
    let z_quadruple = MomentQuadruple::new(z_space, z_poly, t).or_else(invariant("target quadruple"))?;

    // General fiber: project a slice inside the last interval, twice.
    let last = cls.intervals.last().expect("at least one class");
    let sample = last.representative.clone();
    let fp = project_fiber(f, &sample, &mu, &m1_weights, &quotient, &added)?;
    let other = sample.midpoint(&eps);
    let fp2 = project_fiber(f, &other, &mu, &m1_weights, &quotient, &added)?;
    if (fp.facet_count, fp.free_facets, fp.polytope.dimension()) != (fp2.facet_count, fp2.free_facets, fp2.polytope.dimension()) {
        return Err(Error::Invariant("fiber polytope changes inside the last interval".into()));
    }
    let fiber_rank = n - k1;
    let fiber_class_rank = fp.free_facets as i64 + added.len() as i64 - fiber_rank as i64;
    Ok(FiberData {
        eps,
        added_wall_colors: added,
        m1,
        quotient_coordinates: quotient,
        z_quadruple,
        fiber_coordinates: fp.coords,
        fiber_polytope: fp.polytope,
        fiber_vertices: fp.vertices,
        fiber_sample: sample,
        fiber_rank,
        fiber_is_point: fiber_rank == 0,
        fiber_class_rank,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerificationStatus {
    Passed,
    Failed,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckRecord {
    pub subject: String,
    pub expected: String,
    pub observed: String,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verification {
    pub name: String,
    pub status: VerificationStatus,
    pub note: Option<String>,
    pub checks: Vec<CheckRecord>,
}

impl Verification {
    fn from_checks(name: &str, checks: Vec<CheckRecord>) -> Verification {
        let status = if checks.iter().all(|c| c.ok) { VerificationStatus::Passed } else { VerificationStatus::Failed };
        Verification { name: name.into(), status, note: None, checks }
    }

    pub fn passed(&self) -> bool {
        self.status == VerificationStatus::Passed
    }
}

/// Affine path of a vertex of the slice at `snap.eps` (which must lie in an
/// open interval of constant combinatorics).
fn vertex_affine(f: &Family, v: &VertexRecord) -> Result<(RatVec, RatVec)> {
    let n = f.space().rank();
    let mut chosen: Vec<usize> = Vec::new();
    for &i in &v.tight {
        let mut trial = chosen.clone();
        trial.push(i);
        if f.a().select_rows(&trial).rank() == trial.len() {
            chosen = trial;
        }
        if chosen.len() == n {
            break;
        }
    }
    if chosen.len() < n {
        return Err(Error::Invariant("vertex is not cut out by its tight rows".into()));
    }
    let sub = f.a().select_rows(&chosen);
    let b: Vec<Rat> = chosen.iter().map(|&i| f.b_tilde()[i].clone()).collect();
    let c: Vec<Rat> = chosen.iter().map(|&i| f.c_tilde()[i].clone()).collect();
    Ok((sub.solve(&b).expect("invertible"), sub.solve(&c).expect("invertible")))
}

/// Curves of the step's quadruple whose degree against `D + ε(K+Δ)` drops to
/// zero at `eps_star`, detected by following vertices affinely in ε.
pub fn contracted_curves(report: &MmpReport, step: usize, eps_star: &Rat) -> Result<Vec<CurveClass>> {
    let f = &report.family;
    let st = &report.steps[step];
    let snap = f.snapshot(&st.representative)?;
    let mut paths: BTreeMap<RatVec, RatVec> = BTreeMap::new();
    for v in &snap.vertices {
        let (base, slope) = vertex_affine(f, v)?;
        paths.insert(v.point.clone(), base.axpy(eps_star, &slope));
    }
    let at = |p: &RatVec| paths.get(p).cloned().ok_or_else(|| Error::Invariant("curve vertex not found in the slice".into()));
    let s = f.space();
    let translation = f.translation_at(eps_star);
    let mut out = Vec::new();
    for c in curves(&st.quadruple)? {
        let hit = match c.curve.kind {
            CurveKind::Edge => at(&c.curve.points[0])? == at(&c.curve.points[1])?,
            CurveKind::ColorVertex { color } => s.pairing(&(&translation + &s.embed(&at(&c.curve.points[0])?)), color).is_zero(),
        };
        if hit {
            out.push(c.curve);
        }
    }
    Ok(out)
}

fn sign_checks(report: &MmpReport, step: usize, eps: &Rat, negative: bool, event: usize, checks: &mut Vec<CheckRecord>) -> Result<()> {
    let st = &report.steps[step];
    let cs = contracted_curves(report, step, eps)?;
    let side = if negative { "negative" } else { "positive" };
    if cs.is_empty() {
        checks.push(CheckRecord {
            subject: format!("event {event} at {eps}, {} ({side} side)", st.label),
            expected: "at least one contracted curve".into(),
            observed: "none".into(),
            ok: false,
        });
        return Ok(());
    }
    let kd = st.log_canonical();
    for c in cs {
        let v = intersect_divisor(&st.quadruple, &kd, &c)?;
        let ok = if negative { v.is_negative() } else { v.is_positive() };
        checks.push(CheckRecord {
            subject: format!("event {event} at {eps}, {} {}", st.label, c.label(&st.space)),
            expected: format!("(K+Delta).C {}", if negative { "< 0" } else { "> 0" }),
            observed: v.to_string(),
            ok,
        });
    }
    Ok(())
}

/// `(K+Δ)·C < 0` on curves contracted at each event, and `> 0` on the curves
/// that a flip creates.
pub fn verify_signs(report: &MmpReport) -> Result<Verification> {
    let mut checks = Vec::new();
    for (idx, e) in report.events.iter().enumerate() {
        let Some(eps) = &e.eps else { continue };
        sign_checks(report, e.left_step, eps, true, idx, &mut checks)?;
        if let (EventKind::Flip { .. }, Some(right)) = (&e.kind, e.right_step) {
            sign_checks(report, right, eps, false, idx, &mut checks)?;
        }
    }
    Ok(Verification::from_checks("signs", checks))
}

fn singularity_rank(s: Singularity) -> u8 {
    match s {
        Singularity::Klt => 0,
        Singularity::LcNotKlt => 1,
        Singularity::NotLc => 2,
    }
}

/// X-steps carry ℚ-Cartier `K+Δ` with singularities no worse than the
/// input; Y-steps do not.
pub fn verify_pair_chain(report: &MmpReport) -> Result<Verification> {
    let input = report.pair.singularity();
    let mut checks = Vec::new();
    for st in &report.steps {
        let qc = is_q_cartier(&st.space, &st.divisor, &st.log_canonical())?;
        match st.label.kind {
            StepKind::X => {
                let sing = classify_singularities(&st.delta_pushforward);
                checks.push(CheckRecord {
                    subject: format!("{} K+Delta Q-Cartier", st.label),
                    expected: "true".into(),
                    observed: qc.to_string(),
                    ok: qc,
                });
                checks.push(CheckRecord {
                    subject: format!("{} singularities", st.label),
                    expected: format!("no worse than {}", input.as_str()),
                    observed: sing.as_str().into(),
                    ok: singularity_rank(sing) <= singularity_rank(input),
                });
            }
            StepKind::Y => checks.push(CheckRecord {
                subject: format!("{} K+Delta Q-Cartier", st.label),
                expected: "false".into(),
                observed: qc.to_string(),
                ok: !qc,
            }),
        }
    }
    Ok(Verification::from_checks("pair_chain", checks))
}

/// Two vectors are positive rational multiples of each other.
fn positively_proportional(a: &[Rat], b: &[Rat]) -> bool {
    let mut ratio: Option<Rat> = None;
    for (x, y) in a.iter().zip(b) {
        if x.is_zero() != y.is_zero() {
            return false;
        }
        if x.is_zero() {
            continue;
        }
        let q = y / x;
        if !q.is_positive() || ratio.as_ref().is_some_and(|r| *r != q) {
            return false;
        }
        ratio = Some(q);
    }
    ratio.is_some()
}

fn ray_side(report: &MmpReport, step: usize, eps: &Rat, event: usize, checks: &mut Vec<CheckRecord>) -> Result<()> {
    let st = &report.steps[step];
    let primes = BStableDivisor::prime_divisors(&st.space);
    let mut vectors: Vec<(String, Vec<Rat>)> = Vec::new();
    for c in contracted_curves(report, step, eps)? {
        let v = primes.iter().map(|e| intersect_divisor(&st.quadruple, e, &c)).collect::<Result<Vec<_>>>()?;
        vectors.push((c.label(&st.space), v));
    }
    let fmt_vec = |v: &[Rat]| format!("({})", v.iter().map(|x| x.to_string()).join(", "));
    let all_ok = vectors.windows(2).all(|w| positively_proportional(&w[0].1, &w[1].1)) && !vectors.is_empty();
    checks.push(CheckRecord {
        subject: format!("event {event} at {eps}, {}", st.label),
        expected: "contracted classes span one ray".into(),
        observed: vectors.iter().map(|(l, v)| format!("{l}: {}", fmt_vec(v))).join("; "),
        ok: all_ok,
    });
    Ok(())
}

/// Every event contracts a single extremal ray, when `X` is ℚ-factorial and
/// `B̃` is in general position; otherwise "not applicable".
pub fn ray_check(report: &MmpReport) -> Result<Verification> {
    let pair = &report.pair;
    if !is_q_factorial(&pair.space, &pair.d)? {
        return Ok(Verification {
            name: "rays".into(),
            status: VerificationStatus::NotApplicable,
            note: Some("X is not Q-factorial".into()),
            checks: Vec::new(),
        });
    }
    let GeneralPosition { holds, violating_rows } = general_position(&report.family);
    if !holds {
        let rows = violating_rows.unwrap_or_default();
        return Ok(Verification {
            name: "rays".into(),
            status: VerificationStatus::NotApplicable,
            note: Some(format!("B~ is not in general position: rows {rows:?} meet in a point")),
            checks: Vec::new(),
        });
    }
    let mut checks = Vec::new();
    for (idx, e) in report.events.iter().enumerate() {
        let Some(eps) = &e.eps else { continue };
        ray_side(report, e.left_step, eps, idx, &mut checks)?;
        if let (EventKind::Flip { .. }, Some(right)) = (&e.kind, e.right_step) {
            ray_side(report, right, eps, idx, &mut checks)?;
        }
    }
    Ok(Verification::from_checks("rays", checks))
}

/// The face-level orbit map of a morphism: each face of `Q̃` (by its vertex
/// list) to the face of `Q̃'` it maps into.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitMap {
    pub facet_images: Vec<(Vec<usize>, Vec<RatVec>)>,
    pub faces: Vec<(Vec<RatVec>, Vec<RatVec>)>,
}

/// Decides whether `X → X'` exists, for quadruples over the same weight
/// space with `M' ⊆ M` and the colors of `q'` among those of `q`.
pub fn morphism_exists(q: &MomentQuadruple, qp: &MomentQuadruple) -> Result<Option<OrbitMap>> {
    let s = q.space();
    let sp = qp.space();
    if s.weight_dim != sp.weight_dim {
        return Err(Error::DimensionMismatch("quadruples live in different weight spaces".into()));
    }
    for c in &sp.colors {
        let Some(k) = s.color_index(&c.name) else {
            return Err(Error::PreconditionFailed(format!("color {:?} of the target is not a color of the source", c.name)));
        };
        if s.colors[k].coroot_pairings != c.coroot_pairings {
            return Err(Error::PreconditionFailed(format!("color {:?} has different coroot pairings", c.name)));
        }
    }
    // M' ⊆ M, and M'-coordinates to M-coordinates.
    let mut cmat: Vec<RatVec> = Vec::new();
    for j in 0..sp.lattice_m.rank() {
        let w = sp.lattice_m.row_rat(j);
        if !s.lattice_m.contains(&w) {
            return Err(Error::Domain("the lattice of the target is not contained in the lattice of the source".into()));
        }
        cmat.push(s.lattice_m.coordinates(&w).expect("contained"));
    }
    let n = s.rank();
    let c = RatMat::from_rows(n, cmat)?.transpose();
    let verts = q.vertices();
    let pverts = qp.vertices();
    let all_target: BTreeSet<usize> = (0..pverts.len()).collect();
    // ψ on distinct facets (grouped rows).
    let mut facet_faces: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for row in q.facet_rows() {
        let face: Vec<usize> = (0..verts.len()).filter(|&v| verts[v].tight.contains(&row)).collect();
        facet_faces.entry(face).or_insert(row);
    }
    let mut psi: Vec<(Vec<usize>, BTreeSet<usize>)> = Vec::new();
    for (face, row) in &facet_faces {
        let normal = RatVec(c.transpose().mul_vec(q.q_tilde().matrix().row(*row)).0);
        let image = if normal.is_zero() {
            all_target.clone()
        } else {
            let vals: Vec<Rat> = pverts.iter().map(|v| normal.dot(&v.point)).collect();
            let min = vals.iter().min().expect("nonempty").clone();
            (0..pverts.len()).filter(|&i| vals[i] == min).collect()
        };
        psi.push((face.clone(), image));
    }
    // Condition 1: at every vertex the images of the facets through it meet.
    let mut faces_out = Vec::new();
    let mut seen = BTreeSet::new();
    for k in 0..=psi.len() {
        for g in (0..psi.len()).combinations(k) {
            let face: BTreeSet<usize> =
                g.iter().fold((0..verts.len()).collect(), |acc: BTreeSet<usize>, &f| acc.intersection(&psi[f].0.iter().copied().collect()).copied().collect());
            if face.is_empty() {
                continue;
            }
            // Use every facet containing the face.
            let through: Vec<usize> = (0..psi.len()).filter(|&f| face.iter().all(|v| psi[f].0.contains(v))).collect();
            let image = through.iter().fold(all_target.clone(), |acc, &f| acc.intersection(&psi[f].1).copied().collect());
            if image.is_empty() {
                return Ok(None);
            }
            if seen.insert(face.clone()) {
                faces_out.push((
                    face.iter().map(|&v| verts[v].point.clone()).collect::<Vec<_>>(),
                    image.iter().map(|&v| pverts[v].point.clone()).collect::<Vec<_>>(),
                ));
            }
        }
    }
    // Condition 2: walls met by Q are met by Q'.
    let qv = q.q_vertices();
    let qpv = qp.q_vertices();
    for k in 0..s.colors.len() {
        let touches = qv.iter().any(|v| s.pairing(v, k).is_zero());
        if touches && !qpv.iter().any(|v| s.pairing(v, k).is_zero()) {
            return Ok(None);
        }
    }
    faces_out.sort();
    let facet_images = facet_faces
        .iter()
        .zip(&psi)
        .map(|((_, row), (_, img))| (vec![*row], img.iter().map(|&v| pverts[v].point.clone()).collect()))
        .collect();
    Ok(Some(OrbitMap { facet_images, faces: faces_out }))
}
