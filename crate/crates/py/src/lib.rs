//! Python bindings: parse, compile, run on the machine, evaluate with the
//! reduction oracle and run the named experiments.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use lrp_core::calculus::{self, OracleOutcome, Strategy};
use lrp_core::compile::{self, freshen, link};
use lrp_core::harness::{self, HarnessError};
use lrp_core::machine::{self, GcMode, MachineError, Outcome, RunConfig, DEFAULT_MAX_STEPS};
use lrp_core::prelude::load_prelude;
use lrp_core::syntax;

create_exception!(lrp, LrpError, PyException);
create_exception!(lrp, ParseError, LrpError);
create_exception!(lrp, MachineFailure, LrpError);

fn parse_err(e: impl std::fmt::Display) -> PyErr {
    ParseError::new_err(e.to_string())
}

fn machine_err(e: MachineError) -> PyErr {
    MachineFailure::new_err(e.to_string())
}

fn harness_err(e: HarnessError) -> PyErr {
    match e {
        HarnessError::Parse(p) => parse_err(p),
        HarnessError::UnknownExperiment(_) => PyValueError::new_err(e.to_string()),
        other => LrpError::new_err(other.to_string()),
    }
}

/// An expression of the core language.
#[pyclass(name = "Expr", frozen, skip_from_py_object, module = "lrp")]
#[derive(Clone)]
struct PyExpr(lrp_core::Expr);

#[pymethods]
impl PyExpr {
    /// Parses a single expression over the builtin data types.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        lrp_core::parse_expr(text).map(PyExpr).map_err(parse_err)
    }

    /// Number of syntax nodes.
    #[getter]
    fn size(&self) -> usize {
        syntax::size(&self.0)
    }

    #[getter]
    fn is_machine_expr(&self) -> bool {
        syntax::is_machine_expr(&self.0)
    }

    #[getter]
    fn free_vars(&self) -> Vec<String> {
        let mut names: Vec<String> = syntax::free_vars(&self.0).iter().map(|n| n.as_str().to_owned()).collect();
        names.sort();
        names
    }

    /// Equality up to renaming of bound variables.
    fn alpha_eq(&self, other: &PyExpr) -> bool {
        syntax::alpha_eq(&self.0, &other.0)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Expr({:?})", self.0.to_string())
    }
}

/// Parses a program and links it with the builtin library, or with the
/// definitions in `library` when given.
#[pyfunction]
#[pyo3(signature = (text, library = None))]
fn load_program(text: &str, library: Option<&str>) -> PyResult<PyExpr> {
    let program = lrp_core::parse_program(text).map_err(parse_err)?;
    let linked = match library {
        None => link(&program, load_prelude()),
        Some(lib) => {
            let defs = lrp_core::parser::parse_definitions(lib, &syntax::DataEnv::builtin()).map_err(parse_err)?;
            link(&program, &defs)
        }
    }
    .map_err(|e| LrpError::new_err(e.to_string()))?;
    Ok(PyExpr(freshen(&linked)))
}

/// Full pipeline: translation, indirection removal and static collection.
#[pyfunction]
fn compile_expr(e: &PyExpr) -> PyExpr {
    PyExpr(compile::compile_expr(&e.0))
}

/// The plain translation to machine expressions.
#[pyfunction]
fn translate(e: &PyExpr) -> PyExpr {
    PyExpr(compile::translate_psi(&e.0))
}

#[pyfunction]
fn remove_indirections(e: &PyExpr) -> PyExpr {
    PyExpr(compile::remove_indirections(&e.0))
}

/// Result of a machine run.
#[pyclass(name = "RunResult", frozen, get_all, module = "lrp")]
struct PyRunResult {
    /// One of "final", "blackhole", "step-limit".
    outcome: String,
    /// Control expression of the final state.
    result: Option<String>,
    mln: u64,
    mlnall: u64,
    mspmax: usize,
    gc_runs: u64,
    /// `(i, rule, size)` per transition, when requested.
    trace: Option<Vec<(u64, String, usize)>>,
}

#[pymethods]
impl PyRunResult {
    fn __repr__(&self) -> String {
        format!(
            "RunResult(outcome={:?}, mln={}, mlnall={}, mspmax={}, gc_runs={})",
            self.outcome, self.mln, self.mlnall, self.mspmax, self.gc_runs
        )
    }
}

/// Runs a closed machine expression.
#[pyfunction]
#[pyo3(signature = (e, gc_mode = "eager", screm = true, max_steps = DEFAULT_MAX_STEPS, trace = false))]
fn run(py: Python<'_>, e: &PyExpr, gc_mode: &str, screm: bool, max_steps: u64, trace: bool) -> PyResult<PyRunResult> {
    let gc: GcMode = gc_mode.parse().map_err(PyValueError::new_err)?;
    let cfg = RunConfig { gc_mode: gc, screm_enabled: screm, max_steps, record_trace: trace, ..RunConfig::default() };
    let expr = e.0.clone();
    let r = py.detach(move || machine::run(&expr, &cfg)).map_err(machine_err)?;
    let result = match &r.outcome {
        Outcome::Final(st) => Some(st.control().to_string()),
        _ => None,
    };
    Ok(PyRunResult {
        outcome: r.outcome.label().to_owned(),
        result,
        mln: r.measures.mln,
        mlnall: r.measures.mlnall,
        mspmax: r.measures.mspmax,
        gc_runs: r.measures.gc_runs,
        trace: r.trace.map(|t| t.iter().map(|rec| (rec.i, rec.rule.as_str().to_owned(), rec.size)).collect()),
    })
}

/// Result of the reduction oracle.
#[pyclass(name = "OracleResult", frozen, get_all, module = "lrp")]
struct PyOracleResult {
    /// One of "whnf", "step-limit", "blackhole", "stuck".
    outcome: String,
    result: Option<String>,
    rln: u64,
    rlnall: u64,
    spmax: usize,
}

#[pymethods]
impl PyOracleResult {
    fn __repr__(&self) -> String {
        format!("OracleResult(outcome={:?}, rln={}, rlnall={}, spmax={})", self.outcome, self.rln, self.rlnall, self.spmax)
    }
}

/// Evaluates with the reduction calculus. `strategy` is "lrpgc" (with
/// garbage collection) or "lrp".
#[pyfunction]
#[pyo3(signature = (e, strategy = "lrpgc", max_steps = 1_000_000))]
fn oracle(py: Python<'_>, e: &PyExpr, strategy: &str, max_steps: u64) -> PyResult<PyOracleResult> {
    let strat = match strategy {
        "lrpgc" => Strategy::Lrpgc,
        "lrp" => Strategy::Lrp,
        other => return Err(PyValueError::new_err(format!("unknown strategy {other:?}: expected lrp or lrpgc"))),
    };
    let expr = e.0.clone();
    let r = py.detach(move || calculus::evaluate(&expr, strat, max_steps));
    let result = match &r.outcome {
        OracleOutcome::Whnf(v) => Some(v.to_string()),
        _ => None,
    };
    Ok(PyOracleResult { outcome: r.outcome.label().to_owned(), result, rln: r.rln, rlnall: r.rlnall, spmax: r.spmax })
}

/// Runs a named experiment. Returns `[(variant, [(k, mln, mlnall, mspmax), ...]), ...]`.
#[pyfunction]
#[pyo3(signature = (name, ks = None))]
fn experiment(py: Python<'_>, name: &str, ks: Option<Vec<usize>>) -> PyResult<Vec<(String, Vec<(usize, i64, i64, i64)>)>> {
    let specs = harness::named_experiment(name, ks).map_err(harness_err)?;
    py.detach(move || {
        specs
            .iter()
            .map(|spec| {
                let rows = harness::run_experiment(spec)?;
                Ok((spec.name.clone(), rows.iter().map(|r| (r.k, r.mln, r.mlnall, r.mspmax)).collect()))
            })
            .collect::<Result<Vec<_>, HarnessError>>()
    })
    .map_err(harness_err)
}

#[pyfunction]
fn experiments() -> Vec<&'static str> {
    harness::EXPERIMENTS.to_vec()
}

#[pymodule]
fn lrp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("LrpError", py.get_type::<LrpError>())?;
    m.add("ParseError", py.get_type::<ParseError>())?;
    m.add("MachineFailure", py.get_type::<MachineFailure>())?;
    m.add_class::<PyExpr>()?;
    m.add_class::<PyRunResult>()?;
    m.add_class::<PyOracleResult>()?;
    m.add_function(wrap_pyfunction!(load_program, m)?)?;
    m.add_function(wrap_pyfunction!(compile_expr, m)?)?;
    m.add_function(wrap_pyfunction!(translate, m)?)?;
    m.add_function(wrap_pyfunction!(remove_indirections, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add_function(wrap_pyfunction!(experiment, m)?)?;
    m.add_function(wrap_pyfunction!(experiments, m)?)?;
    Ok(())
}
