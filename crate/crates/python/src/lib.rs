//! Python bindings: channel sampling, transmit planning, device selection,
//! phase optimization and whole experiment runs.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ris_feel_core::aircomp::{self, Beamformer, DeviceProfile, TransmitPlan};
use ris_feel_core::channel::{self, ChannelRealization, FadingModel, FadingSpec, RisConfig};
use ris_feel_core::harness::{self, ExperimentConfig};
use ris_feel_core::ris_opt::{self, OptimizerConfig, PhaseCodebook};
use ris_feel_core::{selection, Complex64, Error, Stream};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        Error::Config(_)
        | Error::Usage(_)
        | Error::Dimension { .. }
        | Error::Unsupported(_)
        | Error::SearchTooLarge { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn theta_or_ones(real: &ChannelRealization, angles: Option<Vec<f64>>) -> PyResult<RisConfig> {
    match angles {
        Some(a) if a.len() != real.elements() => Err(PyValueError::new_err(format!(
            "expected {} phase angles, got {}",
            real.elements(),
            a.len()
        ))),
        Some(a) => Ok(RisConfig::from_angles(&a)),
        None => Ok(RisConfig::all_ones(real.elements())),
    }
}

fn profiles(real: &ChannelRealization, data_sizes: Option<Vec<usize>>, power: f64) -> PyResult<Vec<DeviceProfile>> {
    let sizes = data_sizes.unwrap_or_else(|| vec![1; real.devices()]);
    if sizes.len() != real.devices() {
        return Err(PyValueError::new_err(format!(
            "expected {} data sizes, got {}",
            real.devices(),
            sizes.len()
        )));
    }
    Ok(sizes.into_iter().map(|n| DeviceProfile::new(n, power)).collect())
}

fn codebook(levels: usize) -> PhaseCodebook {
    if levels == 0 {
        PhaseCodebook::Continuous
    } else {
        PhaseCodebook::Discrete(levels)
    }
}

/// One draw of direct and RIS-cascaded fading channels.
#[pyclass(frozen, module = "ris_feel")]
struct Channels {
    inner: ChannelRealization,
}

#[pymethods]
impl Channels {
    /// Rayleigh direct links and Rician RIS links (`rician_k` linear),
    /// drawn deterministically from `seed`.
    #[new]
    #[pyo3(signature = (devices, antennas=1, elements=0, seed=0, rician_k=10.0))]
    fn new(devices: usize, antennas: usize, elements: usize, seed: u64, rician_k: f64) -> PyResult<Self> {
        let spec = FadingSpec {
            ris_link: FadingModel::Rician {
                k_factor: rician_k,
                variance: 1.0,
            },
            ..FadingSpec::default()
        };
        spec.validate(devices).map_err(to_py)?;
        let mut stream = Stream::from_seed(seed);
        let inner = channel::sample_channels(&spec, devices, antennas, elements, &mut stream).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn devices(&self) -> usize {
        self.inner.devices()
    }

    #[getter]
    fn antennas(&self) -> usize {
        self.inner.antennas()
    }

    #[getter]
    fn elements(&self) -> usize {
        self.inner.elements()
    }

    /// Effective channel per device (K rows of M complex entries) for phase
    /// angles `theta` in radians; all-zero angles when omitted.
    #[pyo3(signature = (theta=None))]
    fn effective(&self, theta: Option<Vec<f64>>) -> PyResult<Vec<Vec<Complex64>>> {
        let theta = theta_or_ones(&self.inner, theta)?;
        let h = channel::effective_channel(&self.inner, &theta).map_err(to_py)?;
        Ok((0..h.rows()).map(|k| h.row(k).to_vec()).collect())
    }

    /// Squared norm of each device's effective channel.
    #[pyo3(signature = (theta=None))]
    fn gains(&self, theta: Option<Vec<f64>>) -> PyResult<Vec<f64>> {
        let theta = theta_or_ones(&self.inner, theta)?;
        selection::device_gains(&self.inner, &theta).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Channels(devices={}, antennas={}, elements={})",
            self.inner.devices(),
            self.inner.antennas(),
            self.inner.elements()
        )
    }
}

/// Channel-inversion transmit plan together with its receive beamformer.
#[pyclass(frozen, module = "ris_feel")]
struct Plan {
    inner: TransmitPlan,
    beamformer: Beamformer,
}

#[pymethods]
impl Plan {
    #[getter]
    fn selected(&self) -> Vec<usize> {
        self.inner.selected.clone()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights.clone()
    }

    #[getter]
    fn coefficients(&self) -> Vec<Complex64> {
        self.inner.coefficients.clone()
    }

    #[getter]
    fn eta(&self) -> f64 {
        self.inner.eta
    }

    #[getter]
    fn beamformer(&self) -> Vec<Complex64> {
        self.beamformer.coefficients().to_vec()
    }

    /// Per-entry aggregation MSE at receiver noise standard deviation `noise_std`.
    fn analytic_mse(&self, noise_std: f64) -> PyResult<f64> {
        aircomp::analytic_mse(&self.inner, &self.beamformer, noise_std).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Plan(selected={:?}, eta={:e})", self.inner.selected, self.inner.eta)
    }
}

/// Plan the selected devices' transmissions. The beamformer defaults to the
/// first receive antenna.
#[pyfunction]
#[pyo3(signature = (channels, selected, data_sizes=None, theta=None, beamformer=None, power=1.0))]
fn plan(
    channels: &Channels,
    selected: Vec<usize>,
    data_sizes: Option<Vec<usize>>,
    theta: Option<Vec<f64>>,
    beamformer: Option<Vec<Complex64>>,
    power: f64,
) -> PyResult<Plan> {
    let real = &channels.inner;
    let theta = theta_or_ones(real, theta)?;
    let h = channel::effective_channel(real, &theta).map_err(to_py)?;
    let f = match beamformer {
        Some(v) => Beamformer::new(v).map_err(to_py)?,
        None => Beamformer::first_antenna(real.antennas()),
    };
    let profiles = profiles(real, data_sizes, power)?;
    let inner = aircomp::plan_transmissions(&h, &selected, &profiles, &f).map_err(to_py)?;
    Ok(Plan { inner, beamformer: f })
}

/// Receiver noise standard deviation for a transmit SNR in dB.
#[pyfunction]
#[pyo3(signature = (snr_db, power=1.0))]
fn noise_std(snr_db: f64, power: f64) -> f64 {
    aircomp::noise_std_for_snr_db(snr_db, power)
}

/// Indices of the `n` devices with the largest effective channel gain.
#[pyfunction]
#[pyo3(signature = (channels, n, theta=None))]
fn select(channels: &Channels, n: usize, theta: Option<Vec<f64>>) -> PyResult<Vec<usize>> {
    let theta = theta_or_ones(&channels.inner, theta)?;
    let gains = selection::device_gains(&channels.inner, &theta).map_err(to_py)?;
    let set = selection::select_descending_gain(&gains, n).map_err(to_py)?;
    Ok(set.indices().to_vec())
}

/// Minimize the aggregation MSE over RIS phases and the beamformer.
/// `levels=0` selects continuous phases. Returns `(theta, beamformer, mse)`.
#[pyfunction]
#[pyo3(signature = (channels, selected, snr_db, data_sizes=None, levels=8, budget=50, restarts=5, seed=0))]
#[allow(clippy::too_many_arguments)]
fn optimize(
    channels: &Channels,
    selected: Vec<usize>,
    snr_db: f64,
    data_sizes: Option<Vec<usize>>,
    levels: usize,
    budget: usize,
    restarts: usize,
    seed: u64,
) -> PyResult<(Vec<f64>, Vec<Complex64>, f64)> {
    let real = &channels.inner;
    let profiles = profiles(real, data_sizes, 1.0)?;
    let config = OptimizerConfig {
        codebook: codebook(levels),
        budget,
        restarts,
    };
    let noise = aircomp::noise_std_for_snr_db(snr_db, 1.0);
    let out = ris_opt::optimize_mse(real, &selected, &profiles, noise, &config, &mut Stream::from_seed(seed))
        .map_err(to_py)?;
    Ok((out.theta.angles(), out.beamformer.coefficients().to_vec(), out.objective))
}

/// Align single-antenna effective channels with `weights`.
/// Returns `(theta, scale, residual)`.
#[pyfunction]
#[pyo3(signature = (channels, weights, levels=8, budget=50, restarts=5, seed=0))]
fn align(
    channels: &Channels,
    weights: Vec<f64>,
    levels: usize,
    budget: usize,
    restarts: usize,
    seed: u64,
) -> PyResult<(Vec<f64>, Complex64, f64)> {
    let config = OptimizerConfig {
        codebook: codebook(levels),
        budget,
        restarts,
    };
    let out = ris_opt::optimize_alignment_csit_free(&channels.inner, &weights, &config, &mut Stream::from_seed(seed))
        .map_err(to_py)?;
    Ok((out.theta.angles(), out.scale, out.residual))
}

fn load_config(source: &str) -> PyResult<ExperimentConfig> {
    let config = match harness::preset_text(source) {
        Ok(text) => ExperimentConfig::from_toml_str(text),
        Err(_) => ExperimentConfig::from_toml_str(source),
    }
    .map_err(to_py)?;
    config.validate().map_err(to_py)?;
    Ok(config)
}

/// TOML text of a built-in scenario (A, B, C or D).
#[pyfunction]
fn preset(id: &str) -> PyResult<String> {
    harness::preset_text(id).map(str::to_owned).map_err(to_py)
}

/// Parse and check a configuration (preset id or TOML text); returns the
/// scenario name.
#[pyfunction]
fn validate(source: &str) -> PyResult<String> {
    Ok(load_config(source)?.experiment.scenario)
}

/// Simulate every seed of a configuration in memory. Returns one dict per
/// (seed, round) with the trace columns.
#[pyfunction]
#[pyo3(signature = (source, rounds=None, seeds=None))]
fn simulate<'py>(
    py: Python<'py>,
    source: &str,
    rounds: Option<usize>,
    seeds: Option<Vec<u64>>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut config = load_config(source)?;
    if let Some(r) = rounds {
        config.train.rounds = r;
    }
    if let Some(s) = seeds {
        config.experiment.seeds = s;
    }
    config.validate().map_err(to_py)?;
    let traces = py.detach(|| harness::simulate(&config, "")).map_err(to_py)?;
    traces
        .iter()
        .flatten()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("seed", r.seed)?;
            d.set_item("round", r.round)?;
            d.set_item("n_selected", r.n_selected)?;
            d.set_item("mse_empirical", r.mse_empirical)?;
            d.set_item("mse_analytic", r.mse_analytic)?;
            d.set_item("train_loss", r.train_loss)?;
            d.set_item("test_acc", r.test_acc)?;
            d.set_item("epsilon_proxy", r.epsilon_proxy)?;
            Ok(d)
        })
        .collect()
}

/// Run a configuration and write its CSV traces to `out`. Runs the
/// `[sweep]` section instead when `sweep` is true. Returns the written paths.
#[pyfunction]
#[pyo3(signature = (source, out, sweep=false))]
fn run(py: Python<'_>, source: &str, out: PathBuf, sweep: bool) -> PyResult<Vec<PathBuf>> {
    let config = load_config(source)?;
    py.detach(|| {
        if sweep {
            harness::scenario_sweep(&config, &out).map(|o| o.files)
        } else {
            harness::run(&config, &out).map(|o| o.files)
        }
    })
    .map_err(to_py)
}

#[pymodule]
pub fn ris_feel(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Channels>()?;
    m.add_class::<Plan>()?;
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    m.add_function(wrap_pyfunction!(noise_std, m)?)?;
    m.add_function(wrap_pyfunction!(select, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(align, m)?)?;
    m.add_function(wrap_pyfunction!(preset, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
