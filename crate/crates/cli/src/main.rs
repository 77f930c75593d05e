use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use horolmmp_core::exact::Rat;
use horolmmp_core::family::{breakpoints, is_q_cartier, is_q_factorial, EpsInterval};
use horolmmp_core::io::{divisor_out, parse_divisor_expr, parse_input, quadruple_out, to_json, Input, ReportDocument, SCHEMA};
use horolmmp_core::mmp::{morphism_exists, ray_check, run, verify_pair_chain, verify_signs, HorosphericalPair, RunOptions};
use horolmmp_core::model::{build_quadruple, class_rank, classify_singularities, curves, klt_boundary, CurveKind};
use horolmmp_core::{Error, Result};

mod svg;

#[derive(Parser)]
#[command(name = "horolmmp", version, about = "Log MMP of horospherical pairs via moment polytopes")]
struct Cli {
    /// Warn about unknown input keys instead of rejecting them.
    #[arg(long, global = true)]
    lenient: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate an input file.
    Validate { file: PathBuf },
    /// Run the log MMP and its verifications.
    Run {
        file: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write per-interval SVG snapshots into this directory.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Snapshots per open interval.
        #[arg(long, default_value_t = 3)]
        samples: usize,
        /// Scan window when eps_max is infinite (default: 4 x largest candidate + 1).
        #[arg(long, value_parser = parse_rat)]
        max_epsilon: Option<Rat>,
    },
    /// Render Q^eps for the given parameters (2D weight spaces).
    Render {
        file: PathBuf,
        /// Comma-separated rationals, e.g. 0,1/2,1.
        #[arg(long, value_delimiter = ',', value_parser = parse_rat, required = true)]
        epsilons: Vec<Rat>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Inspect the model.
    Query {
        file: PathBuf,
        #[command(subcommand)]
        query: Query,
    },
}

#[derive(Subcommand)]
enum Query {
    /// Curve classes of X and their degrees against D.
    Curves,
    /// Singularity class of (X, Delta).
    Singularities,
    /// Whether a B-stable divisor is Q-Cartier.
    Qcartier {
        #[arg(long, allow_hyphen_values = true)]
        divisor: String,
    },
    /// Whether every prime B-stable divisor is Q-Cartier.
    Qfactorial,
    /// Whether X maps equivariantly to the variety of OTHER.
    Morphism { other: PathBuf },
    /// Minimal m with Delta = -K - mD' klt, for strictly effective D'.
    KltBoundary {
        #[arg(long, allow_hyphen_values = true)]
        divisor: String,
    },
}

fn parse_rat(s: &str) -> std::result::Result<Rat, String> {
    s.trim().parse::<Rat>().map_err(|e| e.to_string())
}

/// Writes via a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let io = |e: std::io::Error| Error::Io(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn load(path: &Path, lenient: bool) -> Result<Input> {
    let input = parse_input(path, lenient)?;
    for w in &input.warnings {
        eprintln!("{}", json!({ "schema": SCHEMA, "warning": w }));
    }
    Ok(input)
}

fn print<T: Serialize>(value: &T) {
    print!("{}", to_json(value));
}

fn pair(input: &Input) -> Result<HorosphericalPair> {
    HorosphericalPair::new(input.space.clone(), input.d.clone(), input.delta.clone())
}

fn validate(input: &Input) -> Result<()> {
    let q = build_quadruple(&input.space, &input.d)?;
    let p = pair(input)?;
    print(&json!({
        "schema": SCHEMA,
        "valid": true,
        "warnings": input.warnings,
        "rank": input.space.rank(),
        "class_rank": class_rank(&q),
        "certified": p.certified,
        "singularity": p.singularity().as_str(),
        "quadruple": quadruple_out(&q),
    }));
    Ok(())
}

/// ε values to snapshot: `k` interior points of every interval, isolated
/// points, and eps_max.
fn sample_points(cls: &horolmmp_core::family::EpsilonClassification, k: usize) -> Vec<(String, Rat)> {
    let mut out = Vec::new();
    for (idx, c) in cls.intervals.iter().enumerate() {
        let tag = format!("class{idx}");
        let EpsInterval { lo, hi, .. } = &c.interval;
        if c.interval.is_point() {
            out.push((tag, lo.clone()));
            continue;
        }
        if c.interval.lo_closed {
            out.push((tag.clone(), lo.clone()));
        }
        let hi = hi.clone().unwrap_or_else(|| cls.window.clone());
        for j in 1..=k {
            let t = Rat::new(j as i64, k as i64 + 1);
            out.push((tag.clone(), lo + &(&(&hi - lo) * &t)));
        }
    }
    if let Some(e) = &cls.eps_max {
        out.push(("eps_max".into(), e.clone()));
    }
    out
}

fn write_svgs(dir: &Path, f: &horolmmp_core::family::Family, named: &[(String, Rat)], scale: &Rat) -> Result<()> {
    let eps: Vec<Rat> = named.iter().map(|(_, e)| e.clone()).collect();
    let frames = svg::frames(f, &eps)?;
    let (singles, composite) = svg::render(f, &frames, scale);
    for ((tag, e), doc) in named.iter().zip(&singles) {
        write_atomic(&dir.join(format!("{tag}_eps_{}.svg", svg::eps_slug(e))), doc)?;
    }
    write_atomic(&dir.join("composite.svg"), &composite)
}

fn cmd_run(input: &Input, report: Option<&Path>, svg_dir: Option<&Path>, samples: usize, max_epsilon: Option<Rat>) -> Result<()> {
    let p = pair(input)?;
    let rep = run(&p, &RunOptions { max_epsilon })?;
    let verifications = vec![verify_signs(&rep)?, verify_pair_chain(&rep)?, ray_check(&rep)?];
    let doc = ReportDocument::new(&input.document, &rep, verifications);
    let text = to_json(&doc);
    match report {
        Some(path) => write_atomic(path, &text)?,
        None => print!("{text}"),
    }
    if let Some(dir) = svg_dir {
        let cls = &rep.classification;
        let named = sample_points(cls, samples.max(1));
        let scale = cls.eps_max.clone().unwrap_or_else(|| cls.window.clone());
        write_svgs(dir, &rep.family, &named, &scale)?;
    }
    Ok(())
}

fn cmd_render(input: &Input, epsilons: &[Rat], out: &Path) -> Result<()> {
    if input.space.weight_dim != 2 {
        return Err(Error::Domain("render supports 2D weight spaces only".into()));
    }
    let p = pair(input)?;
    let f = p.family()?;
    // Uncertified pairs still render; they just scale by the largest ε.
    let eps_max = breakpoints(&f, None).ok().and_then(|c| c.eps_max);
    let largest = epsilons.iter().max().cloned().unwrap_or_else(Rat::zero);
    let scale = eps_max.unwrap_or(largest);
    let named: Vec<(String, Rat)> = epsilons.iter().map(|e| ("q".to_string(), e.clone())).collect();
    write_svgs(out, &f, &named, &scale)
}

fn cmd_query(input: &Input, q: &Query, lenient: bool) -> Result<()> {
    let s = &input.space;
    let expr = |e: &str| parse_divisor_expr(e, s, &input.d, &input.delta);
    match q {
        Query::Curves => {
            let quad = build_quadruple(s, &input.d)?;
            let list: Vec<_> = curves(&quad)?
                .into_iter()
                .map(|c| {
                    let (kind, color) = match c.curve.kind {
                        CurveKind::Edge => ("edge", None),
                        CurveKind::ColorVertex { color } => ("color_vertex", Some(s.colors[color].name.clone())),
                    };
                    json!({
                        "label": c.curve.label(s),
                        "kind": kind,
                        "color": color,
                        "points": c.curve.points,
                        "degree": c.degree,
                    })
                })
                .collect();
            print(&json!({ "schema": SCHEMA, "curves": list }));
        }
        Query::Singularities => {
            print(&json!({
                "schema": SCHEMA,
                "delta": divisor_out(s, &input.delta),
                "singularity": classify_singularities(&input.delta).as_str(),
            }));
        }
        Query::Qcartier { divisor } => {
            let dv = expr(divisor)?;
            print(&json!({ "schema": SCHEMA, "divisor": divisor_out(s, &dv), "q_cartier": is_q_cartier(s, &input.d, &dv)? }));
        }
        Query::Qfactorial => {
            print(&json!({ "schema": SCHEMA, "q_factorial": is_q_factorial(s, &input.d)? }));
        }
        Query::Morphism { other } => {
            let target = load(other, lenient)?;
            let q1 = build_quadruple(s, &input.d)?;
            let q2 = build_quadruple(&target.space, &target.d)?;
            let found = morphism_exists(&q1, &q2)?;
            let (facets, faces) = match &found {
                Some(m) => (
                    m.facet_images.iter().map(|(rows, img)| json!({ "facet": s.row_name(rows[0]), "image": img })).collect(),
                    m.faces.iter().map(|(src, img)| json!({ "face": src, "image": img })).collect(),
                ),
                None => (Vec::new(), Vec::new()),
            };
            print(&json!({ "schema": SCHEMA, "exists": found.is_some(), "facet_images": facets, "faces": faces }));
        }
        Query::KltBoundary { divisor } => {
            let dv = expr(divisor)?;
            let (m, delta) = klt_boundary(s, &dv)?;
            print(&json!({
                "schema": SCHEMA,
                "m": m.to_string(),
                "delta": divisor_out(s, &delta),
                "singularity": classify_singularities(&delta).as_str(),
            }));
        }
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Validate { file } => validate(&load(file, cli.lenient)?),
        Command::Run { file, report, svg, samples, max_epsilon } => {
            cmd_run(&load(file, cli.lenient)?, report.as_deref(), svg.as_deref(), *samples, max_epsilon.clone())
        }
        Command::Render { file, epsilons, out } => cmd_render(&load(file, cli.lenient)?, epsilons, out),
        Command::Query { file, query } => cmd_query(&load(file, cli.lenient)?, query, cli.lenient),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "schema": SCHEMA, "error": { "kind": e.kind(), "message": e.to_string() } }));
            ExitCode::from(1)
        }
    }
}
