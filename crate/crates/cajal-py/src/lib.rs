//! Python bindings: parse, typecheck, evaluate, compile/link, matrix
//! extraction, gradients, and the differential fuzzer. Structured results
//! are passed as JSON strings using the same encodings as the CLI.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde_json::json;

use cajal::ast::{parse, pretty, Ctx};
use cajal::compile::{compile, env_from_json, link, Env};
use cajal::diffcheck::{fd_check, grad, Gradient};
use cajal::eval::{eval, EvalBudget};
use cajal::fuzz::{run_fuzz, GenConfig};
use cajal::semval::{from_json, to_json, SemValue};
use cajal::typecheck::typecheck;

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_env(env_json: Option<&str>) -> PyResult<Env> {
    match env_json {
        None => Ok(Env::unit()),
        Some(text) => {
            let j: serde_json::Value = serde_json::from_str(text).map_err(value_err)?;
            env_from_json(&j).map_err(value_err)
        }
    }
}

/// Canonical formatting of a program.
#[pyfunction]
fn format_program(src: &str) -> PyResult<String> {
    Ok(pretty(&parse(src).map_err(value_err)?))
}

/// Typecheck a closed program and return its type as text.
#[pyfunction]
fn check(src: &str) -> PyResult<String> {
    let e = parse(src).map_err(value_err)?;
    let d = typecheck(&Ctx::empty(), &e).map_err(value_err)?;
    Ok(d.ty.to_string())
}

/// Typecheck, evaluate, and return the value in concrete syntax.
#[pyfunction]
fn run(src: &str) -> PyResult<String> {
    let e = parse(src).map_err(value_err)?;
    typecheck(&Ctx::empty(), &e).map_err(value_err)?;
    let v = eval(&e, EvalBudget::default()).map_err(|err| PyRuntimeError::new_err(err.to_string()))?;
    Ok(pretty(&v))
}

/// Compile a program, link it with an (optional) JSON environment, and
/// return the denotation as a JSON string.
#[pyfunction]
#[pyo3(signature = (src, env_json=None, trunc=10))]
fn compile_link(src: &str, env_json: Option<&str>, trunc: usize) -> PyResult<String> {
    let e = parse(src).map_err(value_err)?;
    let env = parse_env(env_json)?;
    let d = typecheck(env.signature(), &e).map_err(value_err)?;
    let v = link(&compile(&d), &env).map_err(value_err)?;
    Ok(to_json(&v, trunc).map_err(value_err)?.to_string())
}

/// Dense matrix of a closed program denoting a base-to-base map, as
/// (rows, cols, row-major data).
#[pyfunction]
#[pyo3(signature = (src, trunc=10))]
fn matrix(src: &str, trunc: usize) -> PyResult<(usize, usize, Vec<f64>)> {
    let e = parse(src).map_err(value_err)?;
    let d = typecheck(&Ctx::empty(), &e).map_err(value_err)?;
    match link(&compile(&d), &Env::unit()).map_err(value_err)? {
        SemValue::Map(m) => cajal::semval::map_matrix(&m, trunc).map_err(value_err),
        _ => Err(value_err("program must denote a map (a lambda)")),
    }
}

/// Gradient of `⟨cotangent, program(env)⟩` with respect to one binder,
/// flattened to a list, plus the max relative error of a central
/// finite-difference check.
#[pyfunction]
#[pyo3(signature = (src, env_json, wrt, cotangent_json, trunc=10))]
fn gradient(
    src: &str,
    env_json: &str,
    wrt: &str,
    cotangent_json: &str,
    trunc: usize,
) -> PyResult<(Vec<f64>, f64)> {
    let e = parse(src).map_err(value_err)?;
    let env = parse_env(Some(env_json))?;
    let d = typecheck(env.signature(), &e).map_err(value_err)?;
    let p = compile(&d);
    let cot_json: serde_json::Value = serde_json::from_str(cotangent_json).map_err(value_err)?;
    let cot = from_json(&cot_json, &p.result).map_err(value_err)?;
    let g: Gradient = grad(&p, &env, wrt, &cot, trunc).map_err(value_err)?;
    let err = fd_check(&p, &env, wrt, &cot, trunc, 1e-5).map_err(value_err)?;
    Ok((g.flat(), err))
}

/// Run the differential fuzzer; returns a JSON report string.
#[pyfunction]
#[pyo3(signature = (trials=100, depth=6, seed=0))]
fn fuzz(trials: usize, depth: usize, seed: u64) -> PyResult<String> {
    let mut cfg = GenConfig::new(seed);
    cfg.max_depth = depth;
    let report = run_fuzz(&cfg, trials);
    let failures: Vec<_> = report
        .failures
        .iter()
        .map(|(e, r)| json!({"program": pretty(e), "reason": r}))
        .collect();
    let coverage: serde_json::Map<String, serde_json::Value> = report
        .rule_coverage
        .iter()
        .map(|(r, f)| (r.to_string(), json!(f)))
        .collect();
    Ok(json!({
        "trials": report.trials,
        "passes": report.passes,
        "failures": failures,
        "rule_coverage": coverage,
        "budget_exceeded": report.budget_exceeded,
        "stuck": report.stuck,
    })
    .to_string())
}

#[pymodule]
fn cajal_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(format_program, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(compile_link, m)?)?;
    m.add_function(wrap_pyfunction!(matrix, m)?)?;
    m.add_function(wrap_pyfunction!(gradient, m)?)?;
    m.add_function(wrap_pyfunction!(fuzz, m)?)?;
    Ok(())
}
