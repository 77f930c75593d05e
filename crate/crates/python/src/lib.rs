//! Python bindings: load a pair, run the MMP, inspect the report, query.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use horolmmp_core::exact::Rat;
use horolmmp_core::family::{is_q_cartier, is_q_factorial};
use horolmmp_core::io::{divisor_text, parse_divisor_expr, parse_input, parse_input_str, to_json, Input, ReportDocument};
use horolmmp_core::mmp::{morphism_exists, ray_check, run, verify_pair_chain, verify_signs, HorosphericalPair, MmpReport, RunOptions};
use horolmmp_core::model::{build_quadruple, classify_singularities, curves, klt_boundary};

fn err(e: horolmmp_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rat(s: &str) -> PyResult<Rat> {
    s.parse().map_err(err)
}

/// A horospherical pair `(X, Δ)` polarized by `D`.
#[pyclass(frozen)]
struct Pair {
    input: Input,
    pair: HorosphericalPair,
}

impl Pair {
    fn build(input: Input) -> PyResult<Pair> {
        let pair = HorosphericalPair::new(input.space.clone(), input.d.clone(), input.delta.clone()).map_err(err)?;
        Ok(Pair { input, pair })
    }
}

#[pymethods]
impl Pair {
    #[staticmethod]
    #[pyo3(signature = (path, lenient = false))]
    fn from_file(path: PathBuf, lenient: bool) -> PyResult<Pair> {
        Pair::build(parse_input(&path, lenient).map_err(err)?)
    }

    #[staticmethod]
    #[pyo3(signature = (text, lenient = false))]
    fn from_json(text: &str, lenient: bool) -> PyResult<Pair> {
        Pair::build(parse_input_str(text, lenient).map_err(err)?)
    }

    /// Whether `K + Δ` is ℚ-Cartier.
    #[getter]
    fn certified(&self) -> bool {
        self.pair.certified
    }

    #[getter]
    fn singularity(&self) -> &'static str {
        self.pair.singularity().as_str()
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.input.warnings.clone()
    }

    #[getter]
    fn divisor(&self) -> String {
        divisor_text(&self.input.space, &self.input.d)
    }

    #[getter]
    fn delta(&self) -> String {
        divisor_text(&self.input.space, &self.input.delta)
    }

    #[pyo3(signature = (max_epsilon = None))]
    fn run(&self, max_epsilon: Option<&str>) -> PyResult<Report> {
        let opts = RunOptions { max_epsilon: max_epsilon.map(rat).transpose()? };
        let report = run(&self.pair, &opts).map_err(err)?;
        Ok(Report { document: self.input.document.clone(), report })
    }

    fn is_q_cartier(&self, divisor: &str) -> PyResult<bool> {
        let i = &self.input;
        let dv = parse_divisor_expr(divisor, &i.space, &i.d, &i.delta).map_err(err)?;
        is_q_cartier(&i.space, &i.d, &dv).map_err(err)
    }

    fn is_q_factorial(&self) -> PyResult<bool> {
        is_q_factorial(&self.input.space, &self.input.d).map_err(err)
    }

    /// `(label, degree)` for every curve class of `X`.
    fn curves(&self) -> PyResult<Vec<(String, String)>> {
        let q = build_quadruple(&self.input.space, &self.input.d).map_err(err)?;
        Ok(curves(&q).map_err(err)?.into_iter().map(|c| (c.curve.label(&self.input.space), c.degree.to_string())).collect())
    }

    /// Least `m` with `-K - m D'` klt: `(m, boundary, singularity)`.
    fn klt_boundary(&self, divisor: &str) -> PyResult<(String, String, &'static str)> {
        let i = &self.input;
        let dv = parse_divisor_expr(divisor, &i.space, &i.d, &i.delta).map_err(err)?;
        let (m, delta) = klt_boundary(&i.space, &dv).map_err(err)?;
        Ok((m.to_string(), divisor_text(&i.space, &delta), classify_singularities(&delta).as_str()))
    }

    /// Whether `X` maps equivariantly onto the variety of `other`.
    fn maps_to(&self, other: &Pair) -> PyResult<bool> {
        let q1 = build_quadruple(&self.input.space, &self.input.d).map_err(err)?;
        let q2 = build_quadruple(&other.input.space, &other.input.d).map_err(err)?;
        Ok(morphism_exists(&q1, &q2).map_err(err)?.is_some())
    }
}

/// The outcome of one MMP run.
#[pyclass(frozen)]
struct Report {
    document: horolmmp_core::io::InputDocument,
    report: MmpReport,
}

#[pymethods]
impl Report {
    #[getter]
    fn eps_max(&self) -> Option<String> {
        self.report.classification.eps_max.as_ref().map(Rat::to_string)
    }

    #[getter]
    fn breakpoints(&self) -> Vec<String> {
        self.report.classification.breakpoints.iter().map(Rat::to_string).collect()
    }

    #[getter]
    fn steps(&self) -> Vec<String> {
        self.report.steps.iter().map(|s| s.label.to_string()).collect()
    }

    /// `(kind, eps)` per event; eps is `None` for stabilization.
    #[getter]
    fn events(&self) -> Vec<(&'static str, Option<String>)> {
        self.report.events.iter().map(|e| (e.kind.name(), e.eps.as_ref().map(Rat::to_string))).collect()
    }

    /// The full report, as written by `horolmmp run`.
    fn to_json(&self) -> PyResult<String> {
        let r = &self.report;
        let checks = vec![verify_signs(r).map_err(err)?, verify_pair_chain(r).map_err(err)?, ray_check(r).map_err(err)?];
        Ok(to_json(&ReportDocument::new(&self.document, r, checks)))
    }
}

#[pymodule]
fn horolmmp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Pair>()?;
    m.add_class::<Report>()?;
    m.add("SCHEMA", horolmmp_core::io::SCHEMA)?;
    Ok(())
}
