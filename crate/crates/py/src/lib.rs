//! Python bindings: series, QoC profiles, quantile sketches, scenario
//! generation and the comparison statistics.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qoc_core::duration::parse_duration_ms;
use qoc_core::kpi::{self, QocProfile, Sample, UsabilityConfig};
use qoc_core::{sketch, stats, synth, MetricKind, ScenarioKind};

fn err(e: qoc_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A measurement time series of one cell.
#[pyclass(name = "TimeSeries", module = "qoc", skip_from_py_object)]
#[derive(Clone)]
struct PyTimeSeries {
    inner: qoc_core::TimeSeries,
}

#[pymethods]
impl PyTimeSeries {
    #[new]
    #[pyo3(signature = (cell_id, metric, timestamps_ms, values, interval_ms=None))]
    fn new(
        cell_id: &str,
        metric: &str,
        timestamps_ms: Vec<i64>,
        values: Vec<f64>,
        interval_ms: Option<u64>,
    ) -> PyResult<Self> {
        if timestamps_ms.len() != values.len() {
            return Err(PyValueError::new_err(
                "timestamps_ms and values differ in length",
            ));
        }
        let metric: MetricKind = metric.parse().map_err(err)?;
        let samples = timestamps_ms
            .into_iter()
            .zip(values)
            .map(|(t, v)| Sample::new(t, v))
            .collect();
        let inner =
            qoc_core::TimeSeries::new(cell_id, metric, samples, interval_ms).map_err(err)?;
        Ok(Self { inner })
    }

    /// Evenly spaced series starting at `start_ms`.
    #[staticmethod]
    fn from_values(
        cell_id: &str,
        metric: &str,
        start_ms: i64,
        interval_ms: u64,
        values: Vec<f64>,
    ) -> PyResult<Self> {
        let metric: MetricKind = metric.parse().map_err(err)?;
        let inner =
            qoc_core::TimeSeries::from_values(cell_id, metric, start_ms, interval_ms, &values)
                .map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn cell_id(&self) -> &str {
        self.inner.cell_id()
    }

    #[getter]
    fn metric(&self) -> &'static str {
        self.inner.metric().as_str()
    }

    #[getter]
    fn interval_ms(&self) -> u64 {
        self.inner.interval_ms()
    }

    #[getter]
    fn timestamps_ms(&self) -> Vec<i64> {
        self.inner
            .samples()
            .iter()
            .map(|s| s.timestamp_ms)
            .collect()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "TimeSeries(cell_id={:?}, metric={:?}, len={}, interval_ms={})",
            self.inner.cell_id(),
            self.inner.metric().as_str(),
            self.inner.len(),
            self.inner.interval_ms()
        )
    }
}

fn config(
    tau: f64,
    window: &str,
    hysteresis: f64,
    align_to_epoch: bool,
) -> PyResult<UsabilityConfig> {
    let window_ms = parse_duration_ms(window).map_err(err)?;
    let cfg = UsabilityConfig::new(tau, window_ms)
        .with_hysteresis(hysteresis)
        .aligned_to_epoch(align_to_epoch);
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

fn profile_dict<'py>(py: Python<'py>, p: &QocProfile) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("U", p.usability)?;
    d.set_item("P", p.persistence_ms)?;
    d.set_item("M", p.usable_mean)?;
    d.set_item("V", p.variability)?;
    d.set_item("R", p.resilience_per_ms)?;
    Ok(d)
}

/// Usability flag of every sample.
#[pyfunction]
#[pyo3(signature = (series, tau, hysteresis=0.0))]
fn classify(series: &PyTimeSeries, tau: f64, hysteresis: f64) -> PyResult<Vec<bool>> {
    let cfg = config(tau, "24h", hysteresis, false)?;
    kpi::classify(&series.inner, &cfg).map_err(err)
}

/// Per-window profiles as dicts with `start_ms`, `end_ms`, `sample_count`
/// and the KPIs `U`, `P` (ms), `M`, `V`, `R` (per ms, or None).
#[pyfunction]
#[pyo3(signature = (series, tau, window="24h", hysteresis=0.0, align_to_epoch=false))]
fn profile<'py>(
    py: Python<'py>,
    series: &PyTimeSeries,
    tau: f64,
    window: &str,
    hysteresis: f64,
    align_to_epoch: bool,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = config(tau, window, hysteresis, align_to_epoch)?;
    let report = kpi::profile(&series.inner, &cfg).map_err(err)?;
    report
        .windows
        .iter()
        .map(|w| {
            let d = profile_dict(py, &w.profile)?;
            d.set_item("start_ms", w.start_ms)?;
            d.set_item("end_ms", w.end_ms)?;
            d.set_item("sample_count", w.sample_count)?;
            Ok(d)
        })
        .collect()
}

/// Mean of the per-window profiles.
#[pyfunction]
#[pyo3(signature = (series, tau, window="24h", hysteresis=0.0, align_to_epoch=false))]
fn summary<'py>(
    py: Python<'py>,
    series: &PyTimeSeries,
    tau: f64,
    window: &str,
    hysteresis: f64,
    align_to_epoch: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config(tau, window, hysteresis, align_to_epoch)?;
    let report = kpi::profile(&series.inner, &cfg).map_err(err)?;
    profile_dict(py, &report.summary().expect("non-empty series"))
}

/// `(compliant, fraction)`: whether ≥ 95% of latency samples are ≤ 100 ms.
#[pyfunction]
fn fcc_latency_compliant(series: &PyTimeSeries) -> PyResult<(bool, f64)> {
    let c = kpi::fcc_latency_compliant(&series.inner).map_err(err)?;
    Ok((c.compliant, c.fraction))
}

/// Mergeable quantile sketch with relative accuracy `alpha`.
#[pyclass(name = "QuantileSketch", module = "qoc", skip_from_py_object)]
#[derive(Clone)]
struct PyQuantileSketch {
    inner: sketch::QuantileSketch,
}

#[pymethods]
impl PyQuantileSketch {
    #[new]
    #[pyo3(signature = (alpha=sketch::DEFAULT_ALPHA))]
    fn new(alpha: f64) -> PyResult<Self> {
        let inner = sketch::QuantileSketch::with_alpha(alpha).map_err(err)?;
        Ok(Self { inner })
    }

    fn insert(&mut self, value: f64) -> PyResult<()> {
        self.inner.insert(value).map_err(err)
    }

    fn extend(&mut self, values: Vec<f64>) -> PyResult<()> {
        self.inner.extend(values).map_err(err)
    }

    fn quantile(&self, q: f64) -> PyResult<f64> {
        self.inner.quantile(q).map_err(err)
    }

    fn merge(&mut self, other: &PyQuantileSketch) -> PyResult<()> {
        self.inner.merge(&other.inner).map_err(err)
    }

    fn serialize(&self) -> String {
        self.inner.serialize()
    }

    #[staticmethod]
    fn deserialize(text: &str) -> PyResult<Self> {
        let inner = sketch::QuantileSketch::deserialize(text).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn count(&self) -> u64 {
        self.inner.total()
    }

    fn __len__(&self) -> usize {
        self.inner.total() as usize
    }

    fn __eq__(&self, other: &PyQuantileSketch) -> bool {
        self.inner == other.inner
    }
}

/// Synthetic series of a scenario, one per (cell, run), run-major.
#[pyfunction]
#[pyo3(signature = (scenario, days=30, dt=1, cells=7, runs=1, seed=42))]
fn generate(
    scenario: &str,
    days: u64,
    dt: u64,
    cells: u32,
    runs: u32,
    seed: u64,
) -> PyResult<Vec<PyTimeSeries>> {
    let kind: ScenarioKind = scenario.parse().map_err(err)?;
    let spec = synth::ScenarioSpec::new(kind, seed)
        .with_days(days)
        .with_dt(dt)
        .with_cells(cells)
        .with_runs(runs);
    Ok(synth::generate(&spec)
        .map_err(err)?
        .into_iter()
        .map(|g| PyTimeSeries { inner: g.series })
        .collect())
}

#[pyfunction]
fn spearman(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    stats::spearman(&x, &y).map_err(err)
}

#[pyfunction]
fn ks2(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    stats::ks2(&a, &b).map_err(err)
}

#[pyfunction]
fn wasserstein1(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    stats::wasserstein1(&a, &b).map_err(err)
}

#[pyfunction]
fn lag1_acf(x: Vec<f64>) -> PyResult<f64> {
    stats::lag1_acf(&x).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (x, y, bins=10))]
fn mutual_info(x: Vec<f64>, y: Vec<f64>, bins: usize) -> PyResult<f64> {
    stats::mutual_info(&x, &y, bins).map_err(err)
}

#[pymodule]
fn qoc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTimeSeries>()?;
    m.add_class::<PyQuantileSketch>()?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(profile, m)?)?;
    m.add_function(wrap_pyfunction!(summary, m)?)?;
    m.add_function(wrap_pyfunction!(fcc_latency_compliant, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(spearman, m)?)?;
    m.add_function(wrap_pyfunction!(ks2, m)?)?;
    m.add_function(wrap_pyfunction!(wasserstein1, m)?)?;
    m.add_function(wrap_pyfunction!(lag1_acf, m)?)?;
    m.add_function(wrap_pyfunction!(mutual_info, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
