//! Independent oracles and random instances shared by the integration suites.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use horolmmp_core::exact::{LatticeBasis, Rat, RatVec};
use horolmmp_core::family::{breakpoints, build_family, equivalent_snapshots, facet_interval, Family};
use horolmmp_core::io::{parse_input, Input};
use horolmmp_core::model::{build_quadruple, log_canonical, recover_divisor, BStableDivisor, Color, GStableDivisor, SpaceData};
use horolmmp_core::polytope::HPolytope;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> Input {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(format!("{name}.json"));
    parse_input(&path, false).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn r(s: &str) -> Rat {
    s.parse().unwrap()
}

/// Row reduction on plain vectors; returns the rank and the reduced rows.
fn reduce(mut rows: Vec<Vec<Rat>>) -> (usize, Vec<Vec<Rat>>) {
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows.len()).find(|&i| !rows[i][c].is_zero()) else { continue };
        rows.swap(rank, p);
        let inv = rows[rank][c].recip().unwrap();
        rows[rank] = rows[rank].iter().map(|x| x * &inv).collect();
        for i in 0..rows.len() {
            if i != rank && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                let pivot = rows[rank].clone();
                for (x, y) in rows[i].iter_mut().zip(&pivot) {
                    *x = &*x - &(&f * y);
                }
            }
        }
        rank += 1;
    }
    (rank, rows)
}

pub fn oracle_rank(rows: &[Vec<Rat>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    reduce(rows.to_vec()).0
}

/// Unique solution of a square system, if any.
pub fn oracle_solve(a: &[Vec<Rat>], b: &[Rat]) -> Option<Vec<Rat>> {
    let n = a.len();
    let aug: Vec<Vec<Rat>> = a.iter().zip(b).map(|(row, bi)| row.iter().cloned().chain([bi.clone()]).collect()).collect();
    let (rank, red) = reduce(aug);
    if rank != n || (0..n).any(|i| red[i][i] != Rat::one()) {
        return None;
    }
    Some(red.iter().map(|row| row[n].clone()).collect())
}

pub fn oracle_affine_dim(points: &[Vec<Rat>]) -> i64 {
    match points.split_first() {
        None => -1,
        Some((p0, rest)) => {
            let diffs: Vec<Vec<Rat>> = rest.iter().map(|p| p.iter().zip(p0).map(|(x, y)| x - y).collect()).collect();
            oracle_rank(&diffs) as i64
        }
    }
}

/// Vertices of `{Ax ≥ b}` by trying every n-subset of rows.
pub fn oracle_vertices(p: &HPolytope) -> Vec<(Vec<Rat>, BTreeSet<usize>)> {
    let n = p.ambient_dim();
    let m = p.num_rows();
    let rows: Vec<Vec<Rat>> = (0..m).map(|i| p.matrix().row(i).to_vec()).collect();
    let b: Vec<Rat> = p.rhs().0.clone();
    let feasible = |x: &[Rat]| (0..m).all(|i| RatVec(rows[i].clone()).dot(x) >= b[i]);
    let mut out: Vec<(Vec<Rat>, BTreeSet<usize>)> = Vec::new();
    if n == 0 {
        if feasible(&[]) {
            out.push((Vec::new(), (0..m).collect()));
        }
        return out;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    if m < n {
        return out;
    }
    loop {
        let a: Vec<Vec<Rat>> = idx.iter().map(|&i| rows[i].clone()).collect();
        let bb: Vec<Rat> = idx.iter().map(|&i| b[i].clone()).collect();
        if let Some(x) = oracle_solve(&a, &bb) {
            if feasible(&x) && !out.iter().any(|(y, _)| *y == x) {
                let tight = (0..m).filter(|&i| RatVec(rows[i].clone()).dot(&x) == b[i]).collect();
                out.push((x, tight));
            }
        }
        // next combination
        let mut k = n;
        loop {
            if k == 0 {
                out.sort();
                return out;
            }
            k -= 1;
            if idx[k] < m - n + k {
                idx[k] += 1;
                for j in k + 1..n {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

pub fn oracle_facets(verts: &[(Vec<Rat>, BTreeSet<usize>)], m: usize) -> BTreeSet<usize> {
    let pts: Vec<Vec<Rat>> = verts.iter().map(|(p, _)| p.clone()).collect();
    let dim = oracle_affine_dim(&pts);
    if dim <= 0 {
        return BTreeSet::new();
    }
    (0..m)
        .filter(|&i| {
            let face: Vec<Vec<Rat>> = verts.iter().filter(|(_, t)| t.contains(&i)).map(|(p, _)| p.clone()).collect();
            oracle_affine_dim(&face) == dim - 1
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub space: SpaceData,
    pub d: BStableDivisor,
    pub delta: BStableDivisor,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// A random valid quadruple with `n ≤ 3`, at most 10 rows, and a boundary
/// with `C̃ ≥ 0`, `C̃ ≠ 0`. `None` when the draw is invalid.
pub fn random_instance(rng: &mut ChaCha8Rng) -> Option<Instance> {
    let n = rng.random_range(1..=3usize);
    let s = rng.random_range(0..=2usize);
    let d = (s + rng.random_range(0..=1usize)).max(n).max(1);
    let m: Vec<Vec<i64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-2..=2)).collect()).collect();
    let lattice = LatticeBasis::from_i64(d, &m).ok()?;
    if (0..s).any(|k| m.iter().all(|row| row[k] == 0)) {
        return None;
    }
    let colors: Vec<Color> = (0..s)
        .map(|k| {
            let mut pairing = vec![0; d];
            pairing[k] = 1;
            Color { name: format!("c{k}"), coroot_pairings: pairing, a: rng.random_range(1..=3) }
        })
        .collect();
    let want = rng.random_range(n + 1..=(n + 5).min(10 - s));
    let mut normals: Vec<Vec<i64>> = Vec::new();
    for _ in 0..4 * want {
        if normals.len() == want {
            break;
        }
        let v: Vec<i64> = (0..n).map(|_| rng.random_range(-3..=3)).collect();
        let g = v.iter().fold(0, |acc, &x| gcd(acc, x));
        if g == 0 {
            continue;
        }
        let v: Vec<i64> = v.iter().map(|x| x / g).collect();
        if !normals.contains(&v) {
            normals.push(v);
        }
    }
    let heights: Vec<i64> = normals.iter().map(|_| rng.random_range(1..=6)).collect();
    // Keep the rows that are facets of the G-stable part.
    let poly = HPolytope::new(
        horolmmp_core::exact::RatMat::from_int_rows(n, &normals).ok()?,
        RatVec(heights.iter().map(|h| Rat::int(-h)).collect()),
    )
    .ok()?;
    if !poly.is_bounded() {
        return None;
    }
    let verts = poly.vertices().ok()?;
    let facets = horolmmp_core::polytope::facet_rows_from_vertices(&verts);
    let keep: Vec<usize> = facets.into_iter().collect();
    let gstable: Vec<GStableDivisor> =
        keep.iter().enumerate().map(|(j, &i)| GStableDivisor { name: format!("X{}", j + 1), x: normals[i].clone() }).collect();
    let dg: Vec<Rat> = keep.iter().map(|&i| Rat::int(heights[i])).collect();
    // Colors: place Q in the chamber, sometimes touching the wall.
    let mut dc = Vec::new();
    for k in 0..s {
        let row: Vec<Rat> = m.iter().map(|r| Rat::int(r[k])).collect();
        let low = verts.iter().map(|v| RatVec(row.clone()).dot(&v.point)).min().unwrap();
        let slack = if rng.random_range(0..4) == 0 { 0 } else { rng.random_range(1..=3) };
        dc.push(&(-low) + &Rat::int(slack));
    }
    let space = SpaceData {
        weight_dim: d,
        basis_labels: (0..d).map(|j| format!("w{j}")).collect(),
        colors,
        lattice_m: lattice,
        gstable,
    };
    let dd = BStableDivisor::new(RatVec(dg), RatVec(dc));
    build_quadruple(&space, &dd).ok()?;
    let choices = ["-1", "-1/2", "0", "0", "1/3", "1/2", "1"];
    let delta_g: Vec<Rat> = space.gstable.iter().map(|_| r(choices[rng.random_range(0..choices.len())])).collect();
    let delta_c: Vec<Rat> = space.colors.iter().map(|c| &Rat::int(c.a) * &r(["0", "1/2", "1"][rng.random_range(0..3)])).collect();
    let delta = BStableDivisor::new(RatVec(delta_g), RatVec(delta_c));
    if log_canonical(&space, &delta).is_zero() {
        return None;
    }
    Some(Instance { space, d: dd, delta })
}

fn vertex_check(f: &Family, eps: &Rat) -> Result<(), String> {
    let p = f.polytope_at(eps);
    let mine: Vec<(Vec<Rat>, BTreeSet<usize>)> = {
        let mut v: Vec<_> = p.vertices().map_err(|e| e.to_string())?.into_iter().map(|v| (v.point.0, v.tight)).collect();
        v.sort();
        v
    };
    let oracle = oracle_vertices(&p);
    if mine != oracle {
        return Err(format!("vertex enumeration differs from brute force at eps = {eps}: {mine:?} vs {oracle:?}"));
    }
    Ok(())
}

/// The five randomized properties on one instance.
pub fn check_instance(inst: &Instance) -> Result<(), String> {
    let e = |x: horolmmp_core::Error| x.to_string();
    let q = build_quadruple(&inst.space, &inst.d).map_err(e)?;
    if recover_divisor(&q).map_err(e)? != inst.d {
        return Err("recover(build(D)) != D".into());
    }
    let kd = log_canonical(&inst.space, &inst.delta);
    let f = build_family(&inst.space, &inst.d, &kd).map_err(e)?;
    let cls = breakpoints(&f, None).map_err(e)?;
    if !cls.anomalies.is_empty() {
        return Err(format!("anomalies: {:?}", cls.anomalies));
    }
    // Vertex enumeration.
    let mut probes = vec![Rat::zero()];
    probes.extend(cls.intervals.iter().map(|c| c.representative.clone()));
    probes.extend(cls.eps_max.clone());
    for eps in &probes {
        vertex_check(&f, eps)?;
    }
    // Class constancy.
    for c in &cls.intervals {
        if c.interval.is_point() {
            continue;
        }
        let rep = f.snapshot(&c.representative).map_err(e)?;
        let lo = &c.interval.lo;
        let hi = c.interval.hi.clone().unwrap_or_else(|| cls.window.clone());
        for t in ["1/4", "1/2", "3/4"] {
            let eps = lo + &(&(&hi - lo) * &r(t));
            if !equivalent_snapshots(&f.snapshot(&eps).map_err(e)?, &rep) {
                return Err(format!("class {} not constant at {eps}", c.interval));
            }
        }
    }
    // Facet intervals against a dense grid.
    let end = cls.eps_max.clone().unwrap_or_else(|| cls.window.clone());
    let mut grid: Vec<Rat> = (0..40).map(|k| &end * &Rat::new(k, 40)).collect();
    grid.extend(cls.candidates.iter().filter(|c| **c < end).cloned());
    if cls.eps_max.is_none() {
        grid.push(end.clone());
    }
    grid.sort();
    grid.dedup();
    let m = f.a().nrows();
    let facet_sets: Vec<BTreeSet<usize>> = grid.iter().map(|g| oracle_facets(&oracle_vertices(&f.polytope_at(g)), m)).collect();
    for row in 0..m {
        let iv = facet_interval(row, &cls).map_err(e)?;
        let member: Vec<bool> = facet_sets.iter().map(|s| s.contains(&row)).collect();
        let runs = member.windows(2).filter(|w| w[0] != w[1]).count() + usize::from(member[0]);
        if member.iter().any(|&x| x) && runs > 2 {
            return Err(format!("row {row}: oracle facet set is not convex"));
        }
        for (g, &is) in grid.iter().zip(&member) {
            let claimed = iv.as_ref().is_some_and(|iv| iv.contains(g));
            if claimed != is {
                return Err(format!("row {row} at eps = {g}: facet_interval {iv:?} vs oracle {is}"));
            }
        }
    }
    // Finiteness when C̃ ≥ 0.
    let c_nonneg = f.c_tilde().iter().all(|c| !c.is_negative()) && !f.c_tilde().is_zero();
    if c_nonneg {
        let Some(em) = &cls.eps_max else { return Err("C~ >= 0 but eps_max is infinite".into()) };
        let at = f.snapshot(em).map_err(e)?;
        if at.vertices.is_empty() || at.is_gh(inst.space.rank()) {
            return Err(format!("Q^{em} should be nonempty and not G/H"));
        }
        let past = f.snapshot(&(em + &Rat::one())).map_err(e)?;
        if !past.vertices.is_empty() {
            return Err(format!("Q^({em}+1) is not empty"));
        }
    }
    Ok(())
}

pub struct SuiteSummary {
    pub instances: usize,
    pub draws: usize,
    pub failures: Vec<String>,
}

/// Draws `count` valid instances from a fixed seed and checks each.
pub fn property_suite(seed: u64, count: usize) -> SuiteSummary {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let (mut instances, mut draws) = (0, 0);
    while instances < count {
        draws += 1;
        assert!(draws < 200 * count, "generator rejects almost every draw");
        let Some(inst) = random_instance(&mut rng) else { continue };
        instances += 1;
        if let Err(msg) = check_instance(&inst) {
            failures.push(format!("instance {instances} (draw {draws}): {msg}\n  {inst:?}"));
        }
    }
    SuiteSummary { instances, draws, failures }
}
