//! JSON input documents, divisor expressions and the report document.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{LatticeBasis, Rat, RatVec};
use crate::family::{ClassSignature, EpsInterval, EpsilonClassification};
use crate::mmp::{EventKind, FiberData, MmpReport, MmpStep, Verification};
use crate::model::{anticanonical, classify_singularities, validate_space, BStableDivisor, Color, GStableDivisor, MomentQuadruple, SpaceData};

pub const SCHEMA: &str = "horolmmp/1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorDoc {
    pub name: String,
    pub coroot_pairings: Vec<i64>,
    pub a: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceDoc {
    pub weight_dim: usize,
    pub basis_labels: Vec<String>,
    pub colors: Vec<ColorDoc>,
    #[serde(rename = "lattice_M")]
    pub lattice_m: Vec<Vec<i64>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GStableDoc {
    pub name: String,
    pub x: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivisorDoc {
    pub gstable: Vec<Rat>,
    pub colors: Vec<Rat>,
}

impl From<&BStableDivisor> for DivisorDoc {
    fn from(d: &BStableDivisor) -> Self {
        DivisorDoc { gstable: d.gstable.0.clone(), colors: d.colors.0.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub space: SpaceDoc,
    pub gstable: Vec<GStableDoc>,
    #[serde(rename = "divisor_D")]
    pub divisor_d: DivisorDoc,
    /// Absent means `Δ = 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<DivisorDoc>,
}

/// The validated content of an input document.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Input {
    pub document: InputDocument,
    pub space: SpaceData,
    pub d: BStableDivisor,
    pub delta: BStableDivisor,
    /// Unknown keys skipped in lenient mode.
    pub warnings: Vec<String>,
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let start: usize = text.split_inclusive('\n').take(line.saturating_sub(1)).map(str::len).sum();
    (start + column).min(text.len())
}

fn check_len(path: &str, found: usize, expected: usize) -> Result<()> {
    if found != expected {
        return Err(Error::DimensionMismatch(format!("{path}: expected {expected} entries, found {found}")));
    }
    Ok(())
}

impl InputDocument {
    /// Builds and validates the model objects, reporting the offending field.
    pub fn to_model(&self) -> Result<(SpaceData, BStableDivisor, BStableDivisor)> {
        let sp = &self.space;
        check_len("space.basis_labels", sp.basis_labels.len(), sp.weight_dim)?;
        for (k, c) in sp.colors.iter().enumerate() {
            check_len(&format!("space.colors[{k}].coroot_pairings"), c.coroot_pairings.len(), sp.weight_dim)?;
        }
        for (j, row) in sp.lattice_m.iter().enumerate() {
            check_len(&format!("space.lattice_M[{j}]"), row.len(), sp.weight_dim)?;
        }
        let n = sp.lattice_m.len();
        for (i, g) in self.gstable.iter().enumerate() {
            check_len(&format!("gstable[{i}].x"), g.x.len(), n)?;
        }
        let lattice_m = LatticeBasis::from_i64(sp.weight_dim, &sp.lattice_m)
            .map_err(|e| Error::InvalidSpace(vec![format!("space.lattice_M: {e}")]))?;
        let space = SpaceData {
            weight_dim: sp.weight_dim,
            basis_labels: sp.basis_labels.clone(),
            colors: sp.colors.iter().map(|c| Color { name: c.name.clone(), coroot_pairings: c.coroot_pairings.clone(), a: c.a }).collect(),
            lattice_m,
            gstable: self.gstable.iter().map(|g| GStableDivisor { name: g.name.clone(), x: g.x.clone() }).collect(),
        };
        let problems = validate_space(&space);
        if !problems.is_empty() {
            return Err(Error::InvalidSpace(problems));
        }
        let divisor = |path: &str, doc: &DivisorDoc| -> Result<BStableDivisor> {
            check_len(&format!("{path}.gstable"), doc.gstable.len(), space.gstable.len())?;
            check_len(&format!("{path}.colors"), doc.colors.len(), space.colors.len())?;
            Ok(BStableDivisor::new(RatVec(doc.gstable.clone()), RatVec(doc.colors.clone())))
        };
        let d = divisor("divisor_D", &self.divisor_d)?;
        let delta = match &self.delta {
            Some(doc) => divisor("delta", doc)?,
            None => BStableDivisor::zero(&space),
        };
        Ok((space, d, delta))
    }
}

/// Parses an input document. Unknown keys are errors unless `lenient`, in
/// which case they are returned as warnings.
pub fn parse_input_str(text: &str, lenient: bool) -> Result<Input> {
    let mut unknown = Vec::new();
    let mut de = serde_json::Deserializer::from_str(text);
    let mut record = |path: serde_ignored::Path<'_>| unknown.push(path.to_string());
    let ignored = serde_ignored::Deserializer::new(&mut de, &mut record);
    let parsed: std::result::Result<InputDocument, _> = serde_path_to_error::deserialize(ignored);
    let document = match parsed {
        Ok(doc) => doc,
        Err(e) => {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let at = if inner.line() > 0 {
                format!(" at byte {} (line {}, column {})", byte_offset(text, inner.line(), inner.column()), inner.line(), inner.column())
            } else {
                String::new()
            };
            let msg = inner.to_string();
            let msg = msg.split(" at line ").next().unwrap_or(&msg).to_string();
            return Err(if path == "." || inner.is_eof() || inner.is_syntax() {
                Error::Parse(format!("{msg}{at}"))
            } else {
                Error::Parse(format!("{path}: {msg}{at}"))
            });
        }
    };
    if let Err(e) = de.end() {
        return Err(Error::Parse(format!("trailing characters at byte {}", byte_offset(text, e.line(), e.column()))));
    }
    if !lenient {
        if let Some(first) = unknown.first() {
            return Err(Error::Parse(format!("{first}: unknown field")));
        }
    }
    let warnings = unknown.into_iter().map(|p| format!("{p}: unknown field ignored")).collect();
    let (space, d, delta) = document.to_model()?;
    Ok(Input { document, space, d, delta, warnings })
}

pub fn parse_input(path: &Path, lenient: bool) -> Result<Input> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_input_str(&text, lenient)
}

/// Parses a divisor expression: a signed sum of terms `[coef][*]NAME`,
/// where NAME is a G-stable divisor, a color (optionally as `D_name`),
/// `K` (the canonical divisor), `D` or `Delta`.
pub fn parse_divisor_expr(expr: &str, space: &SpaceData, d: &BStableDivisor, delta: &BStableDivisor) -> Result<BStableDivisor> {
    let bad = |m: String| Error::Parse(format!("divisor expression {expr:?}: {m}"));
    let compact: String = expr.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(bad("empty".into()));
    }
    let mut total = BStableDivisor::zero(space);
    let mut rest = compact.as_str();
    let mut first = true;
    while !rest.is_empty() {
        let mut sign = Rat::one();
        if let Some(r) = rest.strip_prefix('+') {
            rest = r;
        } else if let Some(r) = rest.strip_prefix('-') {
            rest = r;
            sign = -sign;
        } else if !first {
            return Err(bad(format!("expected '+' or '-' before {rest:?}")));
        }
        first = false;
        let end = rest[1..].find(['+', '-']).map_or(rest.len(), |i| i + 1);
        let term = &rest[..end];
        rest = &rest[end..];
        let split = term.find(|c: char| !(c.is_ascii_digit() || c == '/')).unwrap_or(term.len());
        let (coef, name) = term.split_at(split);
        let name = name.strip_prefix('*').unwrap_or(name);
        let coef: Rat = if coef.is_empty() { Rat::one() } else { coef.parse().map_err(|e: Error| bad(e.to_string()))? };
        if name.is_empty() {
            return Err(bad(format!("term {term:?} names no divisor")));
        }
        let base = match name {
            "K" => anticanonical(space).neg(),
            "D" => d.clone(),
            "Delta" => delta.clone(),
            _ => {
                if let Some(i) = space.gstable.iter().position(|g| g.name == name) {
                    BStableDivisor::unit_gstable(space, i)
                } else if let Some(k) = space.color_index(name).or_else(|| name.strip_prefix("D_").and_then(|n| space.color_index(n))) {
                    BStableDivisor::unit_color(space, k)
                } else {
                    return Err(bad(format!("unknown divisor {name:?}")));
                }
            }
        };
        total = total.add(&base.scale(&(&sign * &coef)));
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NamedValue {
    pub name: String,
    pub value: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DivisorOut {
    pub text: String,
    pub gstable: Vec<NamedValue>,
    pub colors: Vec<NamedValue>,
}

/// Human-readable form like `X2 + 2 D_alpha - 1/2 D_beta`.
pub fn divisor_text(space: &SpaceData, d: &BStableDivisor) -> String {
    let names = space.gstable.iter().map(|g| g.name.clone()).chain(space.colors.iter().map(|c| format!("D_{}", c.name)));
    let mut out = String::new();
    for (name, c) in names.zip(d.coefficients()) {
        if c.is_zero() {
            continue;
        }
        let mag = c.abs();
        let sign = if c.is_negative() { "-" } else { "+" };
        if out.is_empty() {
            if c.is_negative() {
                out.push('-');
            }
        } else {
            out.push_str(&format!(" {sign} "));
        }
        if mag != Rat::one() {
            out.push_str(&format!("{mag} "));
        }
        out.push_str(&name);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

pub fn divisor_out(space: &SpaceData, d: &BStableDivisor) -> DivisorOut {
    DivisorOut {
        text: divisor_text(space, d),
        gstable: space.gstable.iter().zip(d.gstable.iter()).map(|(g, v)| NamedValue { name: g.name.clone(), value: v.clone() }).collect(),
        colors: space.colors.iter().zip(d.colors.iter()).map(|(c, v)| NamedValue { name: c.name.clone(), value: v.clone() }).collect(),
    }
}

fn color_names(space: &SpaceData, ks: impl IntoIterator<Item = usize>) -> Vec<String> {
    ks.into_iter().map(|k| space.colors[k].name.clone()).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QuadrupleOut {
    pub gstable: Vec<String>,
    pub colors: Vec<String>,
    pub lattice_m: Vec<RatVec>,
    pub translation: RatVec,
    pub q_tilde_vertices: Vec<RatVec>,
    pub q_vertices: Vec<RatVec>,
}

pub fn quadruple_out(q: &MomentQuadruple) -> QuadrupleOut {
    let s = q.space();
    QuadrupleOut {
        gstable: s.gstable.iter().map(|g| g.name.clone()).collect(),
        colors: s.colors.iter().map(|c| c.name.clone()).collect(),
        lattice_m: (0..s.lattice_m.rank()).map(|j| s.lattice_m.row_rat(j)).collect(),
        translation: q.translation().clone(),
        q_tilde_vertices: q.vertices().iter().map(|v| v.point.clone()).collect(),
        q_vertices: q.q_vertices(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    /// Seeds of any randomized choice; the run itself is deterministic.
    pub seeds: Vec<u64>,
}

impl Default for Provenance {
    fn default() -> Self {
        Provenance { tool: "horolmmp".into(), version: env!("CARGO_PKG_VERSION").into(), seeds: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassOut {
    pub interval: EpsInterval,
    pub representative: Rat,
    pub signature: ClassSignature,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassificationOut {
    pub candidates: Vec<Rat>,
    pub breakpoints: Vec<Rat>,
    pub eps_max: Option<Rat>,
    /// End of the inspected range when `eps_max` is infinite.
    pub window: Rat,
    pub classes: Vec<ClassOut>,
}

impl From<&EpsilonClassification> for ClassificationOut {
    fn from(c: &EpsilonClassification) -> Self {
        ClassificationOut {
            candidates: c.candidates.clone(),
            breakpoints: c.breakpoints.clone(),
            eps_max: c.eps_max.clone(),
            window: c.window.clone(),
            classes: c
                .intervals
                .iter()
                .map(|ci| ClassOut { interval: ci.interval.clone(), representative: ci.representative.clone(), signature: ci.signature.clone() })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StepOut {
    pub label: String,
    pub interval: EpsInterval,
    pub representative: Rat,
    pub surviving_gstable: Vec<String>,
    pub divisor: DivisorOut,
    pub delta_pushforward: DivisorOut,
    pub singularity: String,
    pub wall_touch: Vec<String>,
    pub quadruple: QuadrupleOut,
}

impl StepOut {
    pub fn new(st: &MmpStep) -> StepOut {
        StepOut {
            label: st.label.to_string(),
            interval: st.interval.clone(),
            representative: st.representative.clone(),
            surviving_gstable: st.space.gstable.iter().map(|g| g.name.clone()).collect(),
            divisor: divisor_out(&st.space, &st.divisor),
            delta_pushforward: divisor_out(&st.space, &st.delta_pushforward),
            singularity: classify_singularities(&st.delta_pushforward).as_str().into(),
            wall_touch: color_names(&st.space, st.wall_touch.iter().copied()),
            quadruple: quadruple_out(&st.quadruple),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FiberOut {
    pub m1_basis: Vec<RatVec>,
    pub added_walls: Vec<String>,
    pub quotient_coordinates: Vec<String>,
    pub target: QuadrupleOut,
    pub fiber_sample: Rat,
    pub fiber_vertices: Vec<RatVec>,
    pub fiber_rank: usize,
    pub fiber_is_point: bool,
    pub fiber_class_rank: i64,
}

impl FiberOut {
    pub fn new(space: &SpaceData, fd: &FiberData) -> FiberOut {
        FiberOut {
            m1_basis: (0..fd.m1.rank()).map(|j| fd.m1.row_rat(j)).collect(),
            added_walls: color_names(space, fd.added_wall_colors.iter().copied()),
            quotient_coordinates: fd.quotient_coordinates.iter().map(|&k| space.basis_labels[k].clone()).collect(),
            target: quadruple_out(&fd.z_quadruple),
            fiber_sample: fd.fiber_sample.clone(),
            fiber_vertices: fd.fiber_vertices.clone(),
            fiber_rank: fd.fiber_rank,
            fiber_is_point: fd.fiber_is_point,
            fiber_class_rank: fd.fiber_class_rank,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StabilizedOut {
    pub signature: ClassSignature,
    pub window: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EventOut {
    pub eps: Option<Rat>,
    pub kind: String,
    pub left_step: String,
    pub center_step: Option<String>,
    pub right_step: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contracted: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_touch: Option<[Vec<String>; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fiber: Option<FiberOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stabilized: Option<StabilizedOut>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReportDocument {
    pub schema: String,
    pub provenance: Provenance,
    pub input: InputDocument,
    pub singularity: String,
    pub log_canonical: DivisorOut,
    pub classification: ClassificationOut,
    pub steps: Vec<StepOut>,
    pub events: Vec<EventOut>,
    pub verifications: Vec<Verification>,
}

impl ReportDocument {
    pub fn new(input: &InputDocument, report: &MmpReport, verifications: Vec<Verification>) -> ReportDocument {
        let space = &report.pair.space;
        let label = |i: usize| report.steps[i].label.to_string();
        let events = report
            .events
            .iter()
            .map(|e| {
                let mut out = EventOut {
                    eps: e.eps.clone(),
                    kind: e.kind.name().into(),
                    left_step: label(e.left_step),
                    center_step: e.center_step.map(label),
                    right_step: e.right_step.map(label),
                    contracted: None,
                    wall_touch: None,
                    fiber: None,
                    stabilized: None,
                };
                match &e.kind {
                    EventKind::Divisorial { contracted } => {
                        out.contracted = Some(contracted.iter().map(|&i| space.gstable[i].name.clone()).collect());
                    }
                    EventKind::Flip { wall_touch_before, wall_touch_at, wall_touch_after } => {
                        out.wall_touch = Some([
                            color_names(space, wall_touch_before.iter().copied()),
                            color_names(space, wall_touch_at.iter().copied()),
                            color_names(space, wall_touch_after.iter().copied()),
                        ]);
                    }
                    EventKind::FiberType(fd) => out.fiber = Some(FiberOut::new(space, fd)),
                    EventKind::Stabilized { signature, window } => {
                        out.stabilized = Some(StabilizedOut { signature: signature.clone(), window: window.clone() })
                    }
                }
                out
            })
            .collect();
        ReportDocument {
            schema: SCHEMA.into(),
            provenance: Provenance::default(),
            input: input.clone(),
            singularity: report.pair.singularity().as_str().into(),
            log_canonical: divisor_out(space, &report.pair.log_canonical()),
            classification: (&report.classification).into(),
            steps: report.steps.iter().map(StepOut::new).collect(),
            events,
            verifications,
        }
    }
}

/// Pretty JSON with a trailing newline; key order follows the structs, so
/// output is byte-stable.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const SL3: &str = r#"{
      "space": {"weight_dim": 2, "basis_labels": ["alpha", "beta"],
        "colors": [{"name": "alpha", "coroot_pairings": [1, 0], "a": 2},
                   {"name": "beta", "coroot_pairings": [0, 1], "a": 2}],
        "lattice_M": [[1, 2]]},
      "gstable": [{"name": "X1", "x": [1]}, {"name": "X2", "x": [-1]}],
      "divisor_D": {"gstable": ["1", "1"], "colors": ["4", "4"]}
    }"#;

    #[test]
    fn parses_sl3() {
        let inp = parse_input_str(SL3, false).unwrap();
        assert_eq!(inp.space.rank(), 1);
        assert_eq!(inp.d.row_rhs(), RatVec::from_ints(&[-1, -1, -4, -4]));
        assert!(inp.delta.is_zero());
    }

    #[test]
    fn truncated_reports_offset() {
        let cut = &SL3[..40];
        let err = parse_input_str(cut, false).unwrap_err().to_string();
        assert!(err.contains("at byte 40"), "{err}");
    }

    #[test]
    fn zero_denominator() {
        let bad = SL3.replace(r#"["1", "1"]"#, r#"["1/0", "1"]"#);
        let err = parse_input_str(&bad, false).unwrap_err().to_string();
        assert!(err.contains("zero denominator"), "{err}");
        assert!(err.contains("divisor_D.gstable[0]"), "{err}");
    }

    #[test]
    fn unknown_keys() {
        let extra = SL3.replacen('{', r#"{"colour": 1,"#, 1);
        let err = parse_input_str(&extra, false).unwrap_err().to_string();
        assert!(err.contains("colour"), "{err}");
        let inp = parse_input_str(&extra, true).unwrap();
        assert_eq!(inp.warnings, vec!["colour: unknown field ignored"]);
    }

    #[test]
    fn length_mismatch_names_field() {
        let bad = SL3.replace(r#"["4", "4"]"#, r#"["4"]"#);
        let err = parse_input_str(&bad, false).unwrap_err().to_string();
        assert!(err.contains("divisor_D.colors"), "{err}");
    }

    #[test]
    fn divisor_expressions() {
        let inp = parse_input_str(SL3, false).unwrap();
        let e = |s: &str| parse_divisor_expr(s, &inp.space, &inp.d, &inp.delta).unwrap();
        assert_eq!(e("K"), crate::model::divisor_from_ints(&[-1, -1], &[-2, -2]));
        assert_eq!(e("X1 - 1/2*D_alpha + 3beta"), BStableDivisor::new(RatVec::from_ints(&[1, 0]), RatVec(vec![Rat::new(-1, 2), Rat::int(3)])));
        assert_eq!(e("K+Delta"), e("K"));
        assert!(parse_divisor_expr("X9", &inp.space, &inp.d, &inp.delta).is_err());
        assert_eq!(divisor_text(&inp.space, &e("-K")), "X1 + X2 + 2 D_alpha + 2 D_beta");
    }
}
