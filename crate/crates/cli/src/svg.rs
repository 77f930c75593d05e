//! Grayscale SVG snapshots of `Q^ε` in a 2D weight space.
//!
//! The weight basis is drawn orthogonally (first coordinate right, second
//! up); walls are dashed lines, their dominant parts solid.

use std::fmt::Write as _;

use horolmmp_core::exact::{Rat, RatVec};
use horolmmp_core::family::Family;
use horolmmp_core::{Error, Result};

const SIZE: f64 = 400.0;
const MARGIN: f64 = 30.0;

pub struct Frame {
    pub eps: Rat,
    /// Points of `Q^ε` in weight coordinates, in boundary order.
    pub points: Vec<RatVec>,
}

pub fn frames(f: &Family, eps: &[Rat]) -> Result<Vec<Frame>> {
    if f.space().weight_dim != 2 {
        return Err(Error::Domain("render supports 2D weight spaces only".into()));
    }
    eps.iter()
        .map(|e| {
            let snap = f.snapshot(e)?;
            Ok(Frame { eps: e.clone(), points: boundary_order(snap.q_points(f.space())) })
        })
        .collect()
}

fn boundary_order(mut pts: Vec<RatVec>) -> Vec<RatVec> {
    pts.sort();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    // Angular order around the centroid, computed exactly via half-planes
    // and cross products.
    let k = Rat::int(pts.len() as i64);
    let cx: Rat = pts.iter().map(|p| p[0].clone()).sum::<Rat>() / &k;
    let cy: Rat = pts.iter().map(|p| p[1].clone()).sum::<Rat>() / &k;
    let rel = |p: &RatVec| (&p[0] - &cx, &p[1] - &cy);
    let half = |(x, y): &(Rat, Rat)| if y.is_positive() || (y.is_zero() && x.is_positive()) { 0 } else { 1 };
    pts.sort_by(|a, b| {
        let (ra, rb) = (rel(a), rel(b));
        half(&ra).cmp(&half(&rb)).then_with(|| {
            let cross = &ra.0 * &rb.1 - &ra.1 * &rb.0;
            Rat::zero().cmp(&cross)
        })
    });
    pts
}

struct View {
    lo: (f64, f64),
    scale: f64,
}

impl View {
    fn new(frames: &[Frame]) -> View {
        let mut xs = vec![0.0];
        let mut ys = vec![0.0];
        for fr in frames {
            for p in &fr.points {
                xs.push(p[0].to_f64());
                ys.push(p[1].to_f64());
            }
        }
        let min = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let (x0, x1, y0, y1) = (min(&xs) - 1.0, max(&xs) + 1.0, min(&ys) - 1.0, max(&ys) + 1.0);
        let span = (x1 - x0).max(y1 - y0);
        View { lo: (x0, y0), scale: (SIZE - 2.0 * MARGIN) / span }
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (MARGIN + (x - self.lo.0) * self.scale, SIZE - MARGIN - (y - self.lo.1) * self.scale)
    }

    fn extent(&self) -> f64 {
        (SIZE - 2.0 * MARGIN) / self.scale
    }
}

fn gray(t: f64) -> String {
    let v = (180.0 * t.clamp(0.0, 1.0)).round() as u8;
    format!("rgb({v},{v},{v})")
}

fn walls(out: &mut String, f: &Family, view: &View) {
    let s = f.space();
    let reach = 2.0 * view.extent() + view.lo.0.abs() + view.lo.1.abs();
    let (ox, oy) = view.map(0.0, 0.0);
    for (k, c) in s.colors.iter().enumerate() {
        let (a, b) = (c.coroot_pairings[0] as f64, c.coroot_pairings[1] as f64);
        let norm = (a * a + b * b).sqrt();
        if norm == 0.0 {
            continue;
        }
        let dir = (-b / norm, a / norm);
        let end = |t: f64| view.map(t * dir.0, t * dir.1);
        let (p, q) = (end(-reach), end(reach));
        let _ = writeln!(
            out,
            r#"  <line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="rgb(160,160,160)" stroke-dasharray="4 3" stroke-width="1"/>"#,
            p.0, p.1, q.0, q.1
        );
        // Dominant boundary: the half of the wall where the other colors pair
        // non-negatively.
        for sign in [-1.0, 1.0] {
            let probe = (sign * dir.0, sign * dir.1);
            let dominant = s.colors.iter().enumerate().filter(|(j, _)| *j != k).all(|(_, o)| {
                o.coroot_pairings[0] as f64 * probe.0 + o.coroot_pairings[1] as f64 * probe.1 >= -1e-12
            });
            if dominant {
                let e = end(sign * reach);
                let _ = writeln!(
                    out,
                    r#"  <line x1="{ox:.3}" y1="{oy:.3}" x2="{:.3}" y2="{:.3}" stroke="black" stroke-width="1.5"/>"#,
                    e.0, e.1
                );
            }
        }
    }
}

fn polytope(out: &mut String, fr: &Frame, view: &View, t: f64) {
    let color = gray(t);
    let pts: Vec<(f64, f64)> = fr.points.iter().map(|p| view.map(p[0].to_f64(), p[1].to_f64())).collect();
    if pts.len() >= 2 {
        let list = pts.iter().map(|(x, y)| format!("{x:.3},{y:.3}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, r#"  <polygon points="{list}" fill="none" stroke="{color}" stroke-width="3"/>"#);
    }
    for (x, y) in &pts {
        let _ = writeln!(out, r#"  <circle cx="{x:.3}" cy="{y:.3}" r="3" fill="{color}"/>"#);
    }
}

fn document(body: &str, title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n  <title>{title}</title>\n  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n"
    )
}

fn intensity(eps: &Rat, scale: &Rat) -> f64 {
    if scale.is_zero() {
        0.0
    } else {
        (eps / scale).to_f64()
    }
}

/// One SVG per frame and a composite, sharing a viewport. Gray intensity is
/// `ε / scale`.
pub fn render(f: &Family, frames: &[Frame], scale: &Rat) -> (Vec<String>, String) {
    let view = View::new(frames);
    let mut singles = Vec::new();
    let mut composite = String::new();
    walls(&mut composite, f, &view);
    for fr in frames {
        let t = intensity(&fr.eps, scale);
        let mut body = String::new();
        walls(&mut body, f, &view);
        if fr.points.is_empty() {
            let _ = writeln!(body, r#"  <text x="{:.3}" y="{:.3}" text-anchor="middle" font-size="20">empty</text>"#, SIZE / 2.0, SIZE / 2.0);
        }
        polytope(&mut body, fr, &view, t);
        polytope(&mut composite, fr, &view, t);
        let _ = writeln!(body, r#"  <text x="10" y="20" font-size="14">Q^{}</text>"#, fr.eps);
        singles.push(document(&body, &format!("Q^{}", fr.eps)));
    }
    (singles, document(&composite, "composite"))
}

/// File-name form of a rational: `1/2` becomes `1_2`, `-3` becomes `m3`.
pub fn eps_slug(e: &Rat) -> String {
    e.to_string().replace('/', "_").replace('-', "m")
}
