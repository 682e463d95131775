//! Python bindings. Matrices cross the boundary as lists of rows.

use pyo3::create_exception;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use codedinv::brs::{mask_matrix as core_mask_matrix, suggest_params as core_suggest, tau_groups, validate_params};
use codedinv::estimate::{estimate_inverse as core_estimate_inverse, estimate_pseudoinverse as core_estimate_pinv};
use codedinv::metrics::error_metrics as core_error_metrics;
use codedinv::pinv::{pinv_secure_variant, pinv_three_round, PinvRunConfig};
use codedinv::reference::{exact_inverse as core_exact_inverse, exact_pseudoinverse as core_exact_pinv};
use codedinv::scheme::{decode_ops_profile, simulate};
use codedinv::straggler::StragglerModel;
use codedinv::{Error, Method, RealMatrix, SolverConfig};

create_exception!(codedinv_py, UnrecoverableError, PyRuntimeError);
create_exception!(codedinv_py, IntegrityError, PyRuntimeError);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Unrecoverable { .. } => UnrecoverableError::new_err(e.to_string()),
        Error::DecodeIntegrity(_) | Error::ReconstructionIntegrity { .. } => IntegrityError::new_err(e.to_string()),
        Error::Io(_) | Error::Csv(_) => PyIOError::new_err(e.to_string()),
        Error::Construction(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_matrix(rows: Vec<Vec<f64>>) -> PyResult<RealMatrix> {
    RealMatrix::from_rows(&rows).map_err(py_err)
}

fn to_rows(m: &RealMatrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn solver(method: &str, eps: f64, max_iter: Option<usize>) -> PyResult<SolverConfig> {
    let method: Method = method.parse().map_err(py_err)?;
    let cfg = SolverConfig::new(method, eps);
    let cfg = match max_iter {
        Some(cap) => cfg.with_max_iterations(cap),
        None => cfg,
    };
    cfg.validate().map_err(py_err)?;
    Ok(cfg)
}

fn stragglers(spec: &str, seed: u64) -> PyResult<StragglerModel> {
    Ok(spec.parse::<StragglerModel>().map_err(py_err)?.with_seed(seed))
}

/// Admissible scheme parameters for `n` workers and threshold `k`.
#[pyclass(name = "SchemeParams", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PySchemeParams {
    n: usize,
    k: usize,
    s: usize,
    d: usize,
    w: usize,
    q: u64,
}

#[pymethods]
impl PySchemeParams {
    #[new]
    fn new(n: usize, k: usize) -> PyResult<Self> {
        Ok(validate_params(n, k, None).map_err(py_err)?.into())
    }

    fn __repr__(&self) -> String {
        format!("SchemeParams(n={}, k={}, s={}, d={}, w={}, q={})", self.n, self.k, self.s, self.d, self.w, self.q)
    }
}

impl From<codedinv::SchemeParams> for PySchemeParams {
    fn from(p: codedinv::SchemeParams) -> Self {
        Self {
            n: p.n,
            k: p.k,
            s: p.s,
            d: p.d,
            w: p.w,
            q: p.q,
        }
    }
}

/// Outcome of a coded inversion.
#[pyclass(frozen, get_all, skip_from_py_object)]
struct InversionRun {
    estimate: Vec<Vec<f64>>,
    /// 0-based worker ids used by the decoder.
    responders: Vec<usize>,
    online_ops: u64,
    symbols_sent: usize,
    symbols_received: usize,
}

/// Outcome of the three-round pseudoinverse.
#[pyclass(frozen, get_all, skip_from_py_object)]
struct PinvRun {
    estimate: Vec<Vec<f64>>,
    gram: Vec<Vec<f64>>,
    /// 0-based responders per round.
    round_responders: Vec<Vec<usize>>,
    round_symbols: Vec<(usize, usize)>,
}

#[pyfunction]
fn suggest_params(n_min: usize, n_max: usize) -> Vec<PySchemeParams> {
    core_suggest(n_min, n_max).into_iter().map(Into::into).collect()
}

/// Cyclic mask as 0/1 rows.
#[pyfunction]
fn mask_matrix(n: usize, k: usize, d: usize) -> PyResult<Vec<Vec<u32>>> {
    let rows = core_mask_matrix(n, k, d).map_err(py_err)?.to_rows();
    Ok(rows.into_iter().map(|r| r.into_iter().map(u32::from).collect()).collect())
}

/// Row indices of the mask grouped by identical support.
#[pyfunction]
fn support_groups(n: usize, k: usize, d: usize) -> PyResult<Vec<Vec<usize>>> {
    Ok(tau_groups(&core_mask_matrix(n, k, d).map_err(py_err)?).groups)
}

#[pyfunction]
#[pyo3(signature = (a, eps, method = "cg", max_iter = None))]
fn estimate_inverse(a: Vec<Vec<f64>>, eps: f64, method: &str, max_iter: Option<usize>) -> PyResult<Vec<Vec<f64>>> {
    let est = core_estimate_inverse(&to_matrix(a)?, &solver(method, eps, max_iter)?).map_err(py_err)?;
    Ok(to_rows(&est))
}

#[pyfunction]
#[pyo3(signature = (a, eps, method = "cg", max_iter = None))]
fn estimate_pseudoinverse(a: Vec<Vec<f64>>, eps: f64, method: &str, max_iter: Option<usize>) -> PyResult<Vec<Vec<f64>>> {
    let est = core_estimate_pinv(&to_matrix(a)?, &solver(method, eps, max_iter)?).map_err(py_err)?;
    Ok(to_rows(&est))
}

#[pyfunction]
fn exact_inverse(a: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(to_rows(&core_exact_inverse(&to_matrix(a)?).map_err(py_err)?))
}

#[pyfunction]
fn exact_pseudoinverse(a: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(to_rows(&core_exact_pinv(&to_matrix(a)?).map_err(py_err)?))
}

/// `(err_l2, err_F, err_rF)`.
#[pyfunction]
fn error_metrics(estimate: Vec<Vec<f64>>, reference: Vec<Vec<f64>>) -> PyResult<(f64, f64, f64)> {
    let m = core_error_metrics(&to_matrix(estimate)?, &to_matrix(reference)?).map_err(py_err)?;
    Ok((m.l2, m.frobenius, m.relative_frobenius))
}

/// Shares `a`, runs the responding workers, and decodes `A⁻¹`.
#[pyfunction]
#[pyo3(signature = (a, params, eps = 1e-8, method = "cg", stragglers = "none", seed = 0, max_iter = None))]
fn invert(
    a: Vec<Vec<f64>>,
    params: &PySchemeParams,
    eps: f64,
    method: &str,
    stragglers: &str,
    seed: u64,
    max_iter: Option<usize>,
) -> PyResult<InversionRun> {
    let p = validate_params(params.n, params.k, None).map_err(py_err)?;
    let run = simulate(
        &to_matrix(a)?,
        &p,
        &solver(method, eps, max_iter)?,
        &self::stragglers(stragglers, seed)?,
        seed,
    )
    .map_err(py_err)?;
    Ok(InversionRun {
        estimate: to_rows(&run.decode.estimate),
        responders: run.decode.responders,
        online_ops: run.decode.online_ops,
        symbols_sent: run.symbols_sent,
        symbols_received: run.symbols_received,
    })
}

/// Three-round coded left pseudoinverse; `params.k` must be a square.
#[pyfunction]
#[pyo3(signature = (a, params, eps = 1e-8, method = "cg", stragglers = "none", seed = 0, max_iter = None, secure = false))]
#[allow(clippy::too_many_arguments)]
fn pinv(
    a: Vec<Vec<f64>>,
    params: &PySchemeParams,
    eps: f64,
    method: &str,
    stragglers: &str,
    seed: u64,
    max_iter: Option<usize>,
    secure: bool,
) -> PyResult<PinvRun> {
    let p = validate_params(params.n, params.k, None).map_err(py_err)?;
    let cfg = PinvRunConfig::new(p, solver(method, eps, max_iter)?)
        .with_stragglers(self::stragglers(stragglers, seed)?)
        .with_seed(seed);
    let a = to_matrix(a)?;
    let run = if secure { pinv_secure_variant(&a, &cfg) } else { pinv_three_round(&a, &cfg) }.map_err(py_err)?;
    Ok(PinvRun {
        estimate: to_rows(&run.estimate),
        gram: to_rows(&run.gram),
        round_responders: run.rounds.iter().map(|r| r.responders.clone()).collect(),
        round_symbols: run.rounds.iter().map(|r| (r.symbols_sent, r.symbols_received)).collect(),
    })
}

/// `(k, brs_online_ops, repetition_ops)` rows.
#[pyfunction]
#[pyo3(signature = (k_values, trials = 20, rep_s = 3, seed = 0))]
fn decode_ops(k_values: Vec<usize>, trials: usize, rep_s: usize, seed: u64) -> PyResult<Vec<(usize, u64, u64)>> {
    let rows = decode_ops_profile(&k_values, trials, rep_s, seed).map_err(py_err)?;
    Ok(rows.iter().map(|r| (r.k, r.brs_online_ops, r.repetition_ops)).collect())
}

#[pymodule]
fn codedinv_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySchemeParams>()?;
    m.add_class::<InversionRun>()?;
    m.add_class::<PinvRun>()?;
    m.add("UnrecoverableError", m.py().get_type::<UnrecoverableError>())?;
    m.add("IntegrityError", m.py().get_type::<IntegrityError>())?;
    m.add_function(wrap_pyfunction!(suggest_params, m)?)?;
    m.add_function(wrap_pyfunction!(mask_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(support_groups, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_pseudoinverse, m)?)?;
    m.add_function(wrap_pyfunction!(exact_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(exact_pseudoinverse, m)?)?;
    m.add_function(wrap_pyfunction!(error_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(invert, m)?)?;
    m.add_function(wrap_pyfunction!(pinv, m)?)?;
    m.add_function(wrap_pyfunction!(decode_ops, m)?)?;
    Ok(())
}
