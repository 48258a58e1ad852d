//! The per-seed training loop and sweeps over one configuration key.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Instant;

use crate::aircomp::{
    csit_free_plan, perturb_channel, plan_transmissions, population_weights, transmit_and_aggregate,
    weighted_sum, Beamformer, DeviceProfile, TransmitPlan,
};
use crate::channel::{channel_gain, effective_channel, sample_channels, RisConfig};
use crate::error::{Error, Result};
use crate::fedlearn::{
    evaluate, global_update, idx, local_update, partition, Dataset, ModelShape,
};
use crate::linalg::{dominant_left_singular, CMatrix};
use crate::privacy::{clip_update, privacy_proxy, PrivacySpec};
use crate::ris_opt::{optimize_alignment_csit_free, optimize_mse};
use crate::rng::Stream;
use crate::selection::{comm_loss_reference, gain_order, greedy_codesign, SelectionSet};

use super::config::{value_label, DataSource, ExperimentConfig, OptimizerMode, Strategy, ERROR_FREE_LABEL};

/// One row of a round trace.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub scenario: String,
    pub seed: u64,
    pub sweep_value: String,
    pub round: usize,
    pub n_selected: usize,
    pub mse_empirical: f64,
    pub mse_analytic: f64,
    pub train_loss: f64,
    pub test_acc: f64,
    pub epsilon_proxy: f64,
    pub ms: f64,
    /// Mean squared entry of the exact weighted partial sum the receiver
    /// estimates. Kept in memory only; NaN for round 0 and for rows read
    /// back from disk.
    pub update_power: f64,
}

/// Records of every seed, in config seed order.
pub type SeedTraces = Vec<Vec<RoundRecord>>;

/// Traces of one sweep point (or the error-free reference).
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub label: String,
    pub config: ExperimentConfig,
    pub traces: SeedTraces,
}

enum DataPool {
    Synthetic,
    Idx { train: Dataset, test: Dataset },
}

impl DataPool {
    fn load(config: &ExperimentConfig) -> Result<Self> {
        let d = &config.data;
        match d.source {
            DataSource::Synthetic => Ok(DataPool::Synthetic),
            DataSource::Idx => {
                let path = |p: &Option<PathBuf>| p.clone().expect("validated");
                let train = idx::load_dataset(&path(&d.train_images), &path(&d.train_labels), None)?;
                let test = idx::load_dataset(&path(&d.test_images), &path(&d.test_labels), Some(train.num_classes()))?;
                let keep: Vec<usize> = (0..test.len().min(d.test_samples)).collect();
                Ok(DataPool::Idx {
                    test: test.subset(&keep),
                    train,
                })
            }
        }
    }
}

struct Federation {
    shape: ModelShape,
    devices: Vec<Dataset>,
    pooled: Dataset,
    test: Dataset,
    profiles: Vec<DeviceProfile>,
}

fn build_federation(config: &ExperimentConfig, pool: &DataPool, root: &Stream) -> Result<Federation> {
    let k = config.system.devices;
    let (train, test) = match pool {
        DataPool::Synthetic => config.synthetic_spec().generate(
            k * config.data.samples_per_device,
            config.data.test_samples,
            &mut root.substream("data", 0),
        )?,
        DataPool::Idx { train, test } => (train.clone(), test.clone()),
    };
    let devices = partition(&train, k, &config.partition_spec(), &mut root.substream("partition", 0))
        .map_err(|e| match e {
            Error::Usage(msg) => Error::Config(msg),
            other => other,
        })?;
    let pooled = Dataset::concat(&devices.iter().collect::<Vec<_>>())?;
    let sys = &config.system;
    let profiles = devices
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let power = sys.power_budgets.as_ref().map_or(sys.power_budget, |p| p[k]);
            DeviceProfile::new(d.len(), power)
        })
        .collect();
    Ok(Federation {
        shape: config.model_shape(train.num_features(), train.num_classes()),
        devices,
        pooled,
        test,
        profiles,
    })
}

/// Channel, selection and transmit plan for one coherence block.
struct Block {
    h_true: CMatrix,
    plan: TransmitPlan,
    f: Beamformer,
}

fn select(strategy: Strategy, n: Option<usize>, h: &CMatrix) -> Result<Vec<usize>> {
    let k = h.rows();
    Ok(match strategy {
        Strategy::DescendingGain => {
            let gains: Vec<f64> = (0..k).map(|i| channel_gain(h.row(i))).collect();
            let mut s = gain_order(&gains);
            s.truncate(n.expect("validated"));
            s.sort_unstable();
            s
        }
        _ => SelectionSet::all(k).indices().to_vec(),
    })
}

/// Maximum-ratio combining toward the dominant direction of the selected channels.
fn default_beamformer(h: &CMatrix, selected: &[usize]) -> Result<Beamformer> {
    if h.cols() == 1 {
        return Ok(Beamformer::first_antenna(1));
    }
    let cols: Vec<&[num_complex::Complex64]> = selected.iter().map(|&k| h.row(k)).collect();
    match dominant_left_singular(&cols, h.cols()) {
        Some(v) => Beamformer::new(v),
        None => Ok(Beamformer::first_antenna(h.cols())),
    }
}

fn configure_block(config: &ExperimentConfig, fed: &Federation, root: &Stream, block: u64) -> Result<Block> {
    let s = &config.system;
    let real = sample_channels(
        &config.fading_spec(),
        s.devices,
        s.antennas,
        s.elements,
        &mut root.substream("channel", block),
    )?;
    let noise_std = config.noise_std();
    let opt = config.optimizer_config();
    let mut opt_stream = root.substream("optimizer", block);
    let mut csi_stream = root.substream("csi", block);
    let profiles = &fed.profiles;

    if config.optimizer.mode == OptimizerMode::CsitFree {
        let weights = population_weights(profiles)?;
        let aligned = optimize_alignment_csit_free(&real, &weights, &opt, &mut opt_stream)?;
        let h = effective_channel(&real, &aligned.theta)?;
        let selected = select(config.selection.strategy, config.selection.n_selected, &h)?;
        let h_est = perturb_channel(&h, s.csi_error_std, &mut csi_stream);
        let (plan, f) = csit_free_plan(&h_est, &selected, profiles)?;
        return Ok(Block { h_true: h, plan, f });
    }

    let (selected, theta, f) = match config.selection.strategy {
        Strategy::GreedyCodesign => {
            let reference = comm_loss_reference(&real, profiles, noise_std)?;
            let lambda = config.selection.lambda / reference;
            let out = greedy_codesign(&real, profiles, noise_std, lambda, &opt, &mut opt_stream)?;
            (out.selection.indices().to_vec(), out.theta, out.beamformer)
        }
        strategy => {
            let ones = RisConfig::all_ones(s.elements);
            let selected = select(strategy, config.selection.n_selected, &effective_channel(&real, &ones)?)?;
            if config.optimizer.mode == OptimizerMode::Mse {
                let out = optimize_mse(&real, &selected, profiles, noise_std, &opt, &mut opt_stream)?;
                (selected, out.theta, out.beamformer)
            } else {
                let f = default_beamformer(&effective_channel(&real, &ones)?, &selected)?;
                (selected, ones, f)
            }
        }
    };
    let h = effective_channel(&real, &theta)?;
    let h_est = perturb_channel(&h, s.csi_error_std, &mut csi_stream);
    let plan = plan_transmissions(&h_est, &selected, profiles, &f)?;
    Ok(Block { h_true: h, plan, f })
}

fn mean_square(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64
    }
}

fn device_key(round: usize, device: usize) -> u64 {
    ((round as u64) << 32) | device as u64
}

fn simulate_seed(config: &ExperimentConfig, pool: &DataPool, seed: u64, label: &str) -> Result<Vec<RoundRecord>> {
    let root = Stream::from_seed(seed);
    let fed = build_federation(config, pool, &root)?;
    let train = config.train_spec();
    let privacy: Option<PrivacySpec> = config.privacy_spec();
    let noise_std = config.noise_std();
    let error_free = config.experiment.error_free;

    let record = |round: usize, n_selected: usize| RoundRecord {
        scenario: config.experiment.scenario.clone(),
        seed,
        sweep_value: label.to_string(),
        round,
        n_selected,
        mse_empirical: f64::NAN,
        mse_analytic: f64::NAN,
        train_loss: f64::NAN,
        test_acc: f64::NAN,
        epsilon_proxy: f64::NAN,
        ms: 0.0,
        update_power: f64::NAN,
    };

    let mut global = fed.shape.init(&mut root.substream("init", 0));
    let mut block = configure_block(config, &fed, &root, 0)?;
    let mut records = Vec::with_capacity(train.rounds + 1);
    let mut first = record(0, block.plan.selected.len());
    first.train_loss = fed.shape.loss(&global, &fed.pooled)?;
    first.test_acc = evaluate(&fed.shape, &global, &fed.test)?;
    records.push(first);

    for round in 1..=train.rounds {
        let start = config.experiment.timing.then(Instant::now);
        if config.system.block_fading && round > 1 {
            block = configure_block(config, &fed, &root, round as u64 - 1)?;
        }
        let plan = &block.plan;
        let mut updates = Vec::with_capacity(plan.selected.len());
        for &k in &plan.selected {
            let mut stream = root.substream("local", device_key(round, k));
            let delta = local_update(&fed.shape, &global, &fed.devices[k], &train, &mut stream)?;
            updates.push(match &privacy {
                Some(p) => clip_update(&delta, p.clip_norm),
                None => delta,
            });
        }
        let artificial: Vec<f64> = plan
            .selected
            .iter()
            .map(|&k| privacy.as_ref().map_or(0.0, |p| p.artificial_noise_std[k]))
            .collect();
        let target = weighted_sum(&updates, &plan.weights)?;

        let mut rec = record(round, plan.selected.len());
        rec.update_power = mean_square(&target);
        let estimate = if error_free {
            let mut noisy = updates.clone();
            for ((u, &k), &s) in noisy.iter_mut().zip(&plan.selected).zip(&artificial) {
                if s > 0.0 {
                    let mut stream = root.substream("privacy", device_key(round, k));
                    for x in u.iter_mut() {
                        *x += s * stream.standard_normal();
                    }
                }
            }
            let est = weighted_sum(&noisy, &plan.weights)?;
            let err: Vec<f64> = est.iter().zip(target.iter()).map(|(a, b)| a - b).collect();
            rec.mse_empirical = mean_square(&err);
            rec.mse_analytic = plan.weights.iter().zip(&artificial).map(|(w, s)| w * w * s * s).sum();
            est
        } else {
            let report = transmit_and_aggregate(
                plan,
                &block.h_true,
                &block.f,
                &updates,
                noise_std,
                &artificial,
                &mut root.substream("noise", round as u64),
            )?;
            rec.mse_empirical = report.empirical_mse;
            rec.mse_analytic = report.analytic_mse;
            if let Some(p) = &privacy {
                rec.epsilon_proxy = privacy_proxy(&block.h_true, plan, p, noise_std)?.system_epsilon;
            }
            report.estimate
        };
        global = global_update(&global, &plan.normalize(&estimate))?;
        rec.train_loss = fed.shape.loss(&global, &fed.pooled)?;
        rec.test_acc = evaluate(&fed.shape, &global, &fed.test)?;
        if let Some(t) = start {
            rec.ms = t.elapsed().as_secs_f64() * 1e3;
        }
        records.push(rec);
    }
    Ok(records)
}

/// Run every seed of `config` in memory. Seeds execute on worker threads;
/// each seed owns its random streams, so results do not depend on scheduling.
pub fn simulate(config: &ExperimentConfig, label: &str) -> Result<SeedTraces> {
    config.validate()?;
    let pool = DataPool::load(config)?;
    let seeds = &config.experiment.seeds;
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(seeds.len());
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<Vec<RoundRecord>>>>> = Mutex::new((0..seeds.len()).map(|_| None).collect());
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= seeds.len() {
                    break;
                }
                let out = simulate_seed(config, &pool, seeds[i], label);
                results.lock().expect("no worker panicked")[i] = Some(out);
            });
        }
    });
    results
        .into_inner()
        .expect("no worker panicked")
        .into_iter()
        .map(|r| r.expect("every seed ran"))
        .collect()
}

/// Configurations of every sweep point, plus the error-free reference if requested.
pub fn sweep_configs(config: &ExperimentConfig) -> Result<Vec<(String, ExperimentConfig)>> {
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("configuration has no [sweep] section".into()))?;
    let mut out = Vec::with_capacity(sweep.values.len() + 1);
    for v in &sweep.values {
        out.push((value_label(v), config.with_override(&sweep.key, v)?));
    }
    if sweep.include_error_free {
        let mut reference = config.clone();
        reference.sweep = None;
        reference.experiment.error_free = true;
        reference.selection.strategy = Strategy::All;
        reference.validate()?;
        out.push((ERROR_FREE_LABEL.to_string(), reference));
    }
    Ok(out)
}

/// All sweep points in memory, same seeds at every point.
pub fn simulate_sweep(config: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    sweep_configs(config)?
        .into_iter()
        .map(|(label, config)| {
            let traces = simulate(&config, &label)?;
            Ok(SweepPoint { label, config, traces })
        })
        .collect()
}
