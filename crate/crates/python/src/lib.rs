//! Python bindings: the code registry, encoding, classical encode/decode,
//! and the Knill-Laflamme verification sweep, exposed as a small extension
//! module.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use qconv::classical::{window_correctability, ErrorWindowPolicy};
use qconv::codes::{build_code, encoded_increment, CodeEntry, ConvEncoder};
use qconv::error::Error;
use qconv::state::SparseState;
use qconv::verify::{kl_matrix, ErrorModel, ErrorModelKind, KlReport};

fn py_err(err: Error) -> PyErr {
    match err {
        Error::Resource { .. } => PyRuntimeError::new_err(err.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn model_from(kind: &str, window: usize, max_errors: usize) -> PyResult<ErrorModel> {
    let kind: ErrorModelKind = kind.parse().map_err(py_err)?;
    let policy = ErrorWindowPolicy::new(window, max_errors).map_err(py_err)?;
    Ok(ErrorModel { kind, policy })
}

/// A message-to-state encoder resolved from the registry.
#[pyclass(name = "Encoder")]
struct PyEncoder {
    inner: ConvEncoder,
    id: String,
}

#[pymethods]
impl PyEncoder {
    #[getter]
    fn n(&self) -> u32 {
        self.inner.modulus()
    }

    #[getter]
    fn frame_out(&self) -> usize {
        self.inner.frame_out()
    }

    #[getter]
    fn memory(&self) -> usize {
        self.inner.memory()
    }

    #[getter]
    fn family(&self) -> &str {
        self.inner.family_tag()
    }

    /// Encodes a basis message into a sparse state.
    #[pyo3(signature = (message, flush = true))]
    fn encode(&self, message: Vec<u32>, flush: bool) -> PyResult<PyState> {
        Ok(PyState {
            inner: self.inner.encode(&message, flush).map_err(py_err)?,
        })
    }

    /// Applies the logical increment on message index `index` to an encoded
    /// state of the rate-1/4 frame layout.
    fn increment(&self, state: &PyState, index: usize) -> PyResult<PyState> {
        Ok(PyState {
            inner: encoded_increment(&self.inner, &state.inner, index).map_err(py_err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Encoder(id={:?}, n={}, rate=1/{}, memory={})",
            self.id,
            self.inner.modulus(),
            self.inner.frame_out(),
            self.inner.memory()
        )
    }
}

/// Sparse pure state on R registers of dimension N.
#[pyclass(name = "State")]
struct PyState {
    inner: SparseState,
}

#[pymethods]
impl PyState {
    #[getter]
    fn n(&self) -> u32 {
        self.inner.modulus()
    }

    #[getter]
    fn registers(&self) -> usize {
        self.inner.registers()
    }

    #[getter]
    fn term_count(&self) -> usize {
        self.inner.term_count()
    }

    fn norm(&self) -> f64 {
        self.inner.norm_sqr().sqrt()
    }

    /// Terms as a list of (basis string, complex amplitude), lexicographic.
    fn terms(&self) -> PyResult<Vec<(Vec<u32>, num_complex::Complex64)>> {
        let roots = qconv::modular::UnityRoots::new(self.inner.modulus()).map_err(py_err)?;
        Ok(self
            .inner
            .terms()
            .map(|(basis, amp)| (basis, amp.to_complex(&roots)))
            .collect())
    }

    /// <self|other>.
    fn inner_product(&self, other: &PyState) -> PyResult<num_complex::Complex64> {
        self.inner.inner_product(&other.inner).map_err(py_err)
    }

    /// The state file document (JSON).
    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn __repr__(&self) -> String {
        format!(
            "State(n={}, registers={}, terms={})",
            self.inner.modulus(),
            self.inner.registers(),
            self.inner.term_count()
        )
    }
}

/// Verdict of a Knill-Laflamme sweep.
#[pyclass(name = "VerificationReport")]
struct PyReport {
    inner: KlReport,
}

#[pymethods]
impl PyReport {
    /// Whether every pattern pair satisfied the condition within tolerance.
    #[getter(passed)]
    fn passed(&self) -> bool {
        self.inner.pass
    }

    #[getter]
    fn max_offdiagonal(&self) -> f64 {
        self.inner.max_offdiagonal
    }

    #[getter]
    fn max_lambda_deviation(&self) -> f64 {
        self.inner.max_lambda_deviation
    }

    #[getter]
    fn pattern_count(&self) -> usize {
        self.inner.pattern_count
    }

    #[getter]
    fn pair_count(&self) -> u64 {
        self.inner.pair_count
    }

    #[getter]
    fn violation_count(&self) -> u64 {
        self.inner.violation_count
    }

    /// Violations as (pattern_a, pattern_b, bra, ket, value).
    fn violations(&self) -> Vec<(String, String, usize, usize, num_complex::Complex64)> {
        self.inner
            .violations
            .iter()
            .map(|v| {
                (
                    v.pattern_a.clone(),
                    v.pattern_b.clone(),
                    v.message_bra,
                    v.message_ket,
                    num_complex::Complex64::new(v.re, v.im),
                )
            })
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "VerificationReport(passed={}, max_offdiagonal={:.3e}, max_lambda_deviation={:.3e}, pairs={})",
            self.inner.pass,
            self.inner.max_offdiagonal,
            self.inner.max_lambda_deviation,
            self.inner.pair_count
        )
    }
}

/// Resolves a registry id (eq7, eq8, eq14, paste:..., fourier:..., lift:...).
#[pyfunction]
fn code(id: &str, n: u32) -> PyResult<PyEncoder> {
    match build_code(id, n).map_err(py_err)? {
        CodeEntry::Quantum(inner) => Ok(PyEncoder {
            inner,
            id: id.to_string(),
        }),
        CodeEntry::Classical(_) => Err(PyValueError::new_err(format!(
            "`{id}` is a classical code; use classical_encode/classical_decode"
        ))),
    }
}

/// Knill-Laflamme sweep of a registry code at message length `len`.
#[pyfunction]
#[pyo3(signature = (id, n, len, model, window, max_errors, tolerance = 1e-9, flush = true))]
#[allow(clippy::too_many_arguments)]
fn verify(
    id: &str,
    n: u32,
    len: usize,
    model: &str,
    window: usize,
    max_errors: usize,
    tolerance: f64,
    flush: bool,
) -> PyResult<PyReport> {
    let encoder = code(id, n)?;
    let model = model_from(model, window, max_errors)?;
    let inner = kl_matrix(&encoder.inner, len, flush, &model, tolerance).map_err(py_err)?;
    Ok(PyReport { inner })
}

/// Termwise equality of two registry codes over every message at (n, len).
#[pyfunction]
#[pyo3(signature = (id_a, id_b, n, len, flush = true))]
fn compare(id_a: &str, id_b: &str, n: u32, len: usize, flush: bool) -> PyResult<bool> {
    let a = code(id_a, n)?;
    let b = code(id_b, n)?;
    if a.inner.output_registers(len, flush) != b.inner.output_registers(len, flush) {
        return Ok(false);
    }
    let count = (n as u64).pow(len as u32);
    for rank in 0..count {
        let mut msg = vec![0u32; len];
        let mut r = rank;
        for slot in msg.iter_mut().rev() {
            *slot = (r % n as u64) as u32;
            r /= n as u64;
        }
        let sa = a.inner.encode(&msg, flush).map_err(py_err)?;
        let sb = b.inner.encode(&msg, flush).map_err(py_err)?;
        if sa.max_term_deviation(&sb).map_err(py_err)? > 1e-9 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Encodes with the default classical rate-1/2 code over Z_N.
#[pyfunction]
#[pyo3(signature = (message, n, flush = true))]
fn classical_encode(message: Vec<u32>, n: u32, flush: bool) -> PyResult<Vec<u32>> {
    match build_code("eq2-classical", n).map_err(py_err)? {
        CodeEntry::Classical(code) => code.encode(&message, flush).map_err(py_err),
        _ => unreachable!(),
    }
}

/// Minimum-distance decoding by full enumeration; returns (message, distance).
#[pyfunction]
#[pyo3(signature = (received, len, n, flush = true))]
fn classical_decode(
    received: Vec<u32>,
    len: usize,
    n: u32,
    flush: bool,
) -> PyResult<(Vec<u32>, usize)> {
    match build_code("eq2-classical", n).map_err(py_err)? {
        CodeEntry::Classical(code) => code
            .decode_brute_force(&received, len, flush)
            .map_err(py_err),
        _ => unreachable!(),
    }
}

/// Exhaustive window correctability of the classical code; returns
/// (pass, patterns_checked).
#[pyfunction]
#[pyo3(signature = (len, n, window, max_errors, flush = true))]
fn classical_window_check(
    len: usize,
    n: u32,
    window: usize,
    max_errors: usize,
    flush: bool,
) -> PyResult<(bool, usize)> {
    match build_code("eq2-classical", n).map_err(py_err)? {
        CodeEntry::Classical(code) => {
            let policy = ErrorWindowPolicy::new(window, max_errors).map_err(py_err)?;
            let report = window_correctability(&code, len, flush, &policy).map_err(py_err)?;
            Ok((report.pass, report.patterns_checked))
        }
        _ => unreachable!(),
    }
}

#[pymodule]
fn qconv_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEncoder>()?;
    m.add_class::<PyState>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(code, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(classical_encode, m)?)?;
    m.add_function(wrap_pyfunction!(classical_decode, m)?)?;
    m.add_function(wrap_pyfunction!(classical_window_check, m)?)?;
    Ok(())
}
