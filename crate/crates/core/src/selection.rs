//! Device selection and the communication/learning co-design objective.
//!
//! The objective is a surrogate `selection_loss + lambda * comm_loss` where
//! `selection_loss = (excluded data / total data)^2` and `comm_loss` is the
//! closed-form aggregation MSE of the selected set.

use crate::aircomp::{analytic_mse, plan_transmissions, Beamformer, DeviceProfile};
use crate::channel::{channel_gain, effective_channel, ChannelRealization, RisConfig};
use crate::error::{Error, Result};
use crate::ris_opt::{optimize_mse, OptimizerConfig};
use crate::rng::Stream;

/// Sorted, duplicate-free device indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SelectionSet {
    indices: Vec<usize>,
}

impl SelectionSet {
    pub fn new(mut indices: Vec<usize>, devices: usize) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Usage("selection contains duplicate devices".into()));
        }
        if let Some(&k) = indices.last().filter(|&&k| k >= devices) {
            return Err(Error::Usage(format!("selected device {k} out of range (K={devices})")));
        }
        Ok(Self { indices })
    }

    pub fn all(devices: usize) -> Self {
        Self {
            indices: (0..devices).collect(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.indices.binary_search(&k).is_ok()
    }

    fn with(&self, k: usize) -> Self {
        let mut indices = self.indices.clone();
        if let Err(pos) = indices.binary_search(&k) {
            indices.insert(pos, k);
        }
        Self { indices }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CodesignObjective {
    pub selection_loss: f64,
    pub comm_loss: f64,
    pub lambda: f64,
    pub total: f64,
}

#[derive(Clone, Debug)]
pub struct CodesignOutcome {
    pub selection: SelectionSet,
    pub theta: RisConfig,
    pub beamformer: Beamformer,
    pub objective: CodesignObjective,
}

/// Device indices by descending gain, ties by lowest index.
pub fn gain_order(gains: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..gains.len()).collect();
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]).then(a.cmp(&b)));
    order
}

/// The `n` devices with the largest gains.
pub fn select_descending_gain(gains: &[f64], n: usize) -> Result<SelectionSet> {
    if n == 0 || n > gains.len() {
        return Err(Error::Usage(format!(
            "cannot select {n} of {} devices",
            gains.len()
        )));
    }
    let order = gain_order(gains);
    SelectionSet::new(order[..n].to_vec(), gains.len())
}

/// Per-device channel gains at the given phases.
pub fn device_gains(real: &ChannelRealization, theta: &RisConfig) -> Result<Vec<f64>> {
    let h = effective_channel(real, theta)?;
    Ok((0..h.rows()).map(|k| channel_gain(h.row(k))).collect())
}

pub fn selection_loss(selection: &SelectionSet, profiles: &[DeviceProfile]) -> f64 {
    let total: usize = profiles.iter().map(|p| p.data_size).sum();
    if total == 0 {
        return 0.0;
    }
    let excluded: usize = profiles
        .iter()
        .enumerate()
        .filter(|(k, _)| !selection.contains(*k))
        .map(|(_, p)| p.data_size)
        .sum();
    let frac = excluded as f64 / total as f64;
    frac * frac
}

#[allow(clippy::too_many_arguments)]
pub fn evaluate_objective(
    selection: &SelectionSet,
    real: &ChannelRealization,
    theta: &RisConfig,
    f: &Beamformer,
    profiles: &[DeviceProfile],
    noise_std: f64,
    lambda: f64,
) -> Result<CodesignObjective> {
    if selection.is_empty() {
        return Err(Error::Usage("objective needs a nonempty selection".into()));
    }
    if !(lambda >= 0.0) {
        return Err(Error::Usage(format!("lambda must be >= 0, got {lambda}")));
    }
    let h = effective_channel(real, theta)?;
    let plan = plan_transmissions(&h, selection.indices(), profiles, f)?;
    let comm_loss = analytic_mse(&plan, f, noise_std)?;
    let sel = selection_loss(selection, profiles);
    Ok(CodesignObjective {
        selection_loss: sel,
        comm_loss,
        lambda,
        total: sel + lambda * comm_loss,
    })
}

/// Upper bound on each device's channel gain over all RIS phases:
/// `(||h_d|| + sum_l ||G[:, l]|| |a_l|)^2`, tight for a single antenna.
pub fn achievable_gains(real: &ChannelRealization) -> Vec<f64> {
    let column_norms: Vec<f64> = (0..real.elements())
        .map(|l| {
            (0..real.antennas())
                .map(|m| real.ris_to_server.get(m, l).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    (0..real.devices())
        .map(|k| {
            let direct = channel_gain(real.direct.row(k)).sqrt();
            let reflected: f64 = real
                .device_to_ris
                .row(k)
                .iter()
                .zip(&column_norms)
                .map(|(a, g)| a.norm() * g)
                .sum();
            (direct + reflected).powi(2)
        })
        .collect()
}

/// Aggregation MSE of the single best-gain device without RIS tuning
/// (all-ones phases). Dividing a user-facing tradeoff weight by this value
/// puts both loss terms on a comparable scale.
pub fn comm_loss_reference(
    real: &ChannelRealization,
    profiles: &[DeviceProfile],
    noise_std: f64,
) -> Result<f64> {
    let theta = RisConfig::all_ones(real.elements());
    let best = gain_order(&device_gains(real, &theta)?)[0];
    let h = effective_channel(real, &theta)?;
    let f = Beamformer::new(h.row(best).to_vec())?;
    let plan = plan_transmissions(&h, &[best], profiles, &f)?;
    analytic_mse(&plan, &f, noise_std)
}

/// One greedy pass over devices in descending order of their
/// [`achievable_gains`]. Each device is tentatively added to the incumbent, phases and
/// beamformer are re-optimized, and the addition is kept iff the total
/// objective does not increase. The same pass also evaluates every prefix
/// of the gain order, so the single best device and the full set are both
/// candidates; the best evaluated candidate is returned.
pub fn greedy_codesign(
    real: &ChannelRealization,
    profiles: &[DeviceProfile],
    noise_std: f64,
    lambda: f64,
    config: &OptimizerConfig,
    stream: &mut Stream,
) -> Result<CodesignOutcome> {
    let k = real.devices();
    if k == 0 {
        return Err(Error::Usage("no devices".into()));
    }
    let order = gain_order(&achievable_gains(real));

    let try_set = |set: &SelectionSet, step: u64| -> Result<Option<CodesignOutcome>> {
        let mut sub = stream.substream("greedy", step);
        let opt = optimize_mse(real, set.indices(), profiles, noise_std, config, &mut sub)?;
        match evaluate_objective(set, real, &opt.theta, &opt.beamformer, profiles, noise_std, lambda) {
            Ok(objective) => Ok(Some(CodesignOutcome {
                selection: set.clone(),
                theta: opt.theta,
                beamformer: opt.beamformer,
                objective,
            })),
            Err(Error::DegenerateChannel { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };

    // `rule` follows the keep-iff-not-worse acceptance; `best` is the best
    // candidate evaluated anywhere in the pass, including every prefix of
    // the gain order (the prefix at the last step is the full set).
    let mut rule: Option<CodesignOutcome> = None;
    let mut best: Option<CodesignOutcome> = None;
    let consider = |cand: &CodesignOutcome, best: &mut Option<CodesignOutcome>| {
        if best.as_ref().is_none_or(|b| cand.objective.total < b.objective.total) {
            *best = Some(cand.clone());
        }
    };
    for (step, &dev) in order.iter().enumerate() {
        let set = match &rule {
            Some(inc) => inc.selection.with(dev),
            None => SelectionSet::new(vec![dev], k)?,
        };
        if let Some(cand) = try_set(&set, 2 * step as u64)? {
            consider(&cand, &mut best);
            if rule.as_ref().is_none_or(|inc| cand.objective.total <= inc.objective.total) {
                rule = Some(cand);
            }
        }
        let prefix = SelectionSet::new(order[..=step].to_vec(), k)?;
        if prefix != set {
            if let Some(cand) = try_set(&prefix, 2 * step as u64 + 1)? {
                consider(&cand, &mut best);
            }
        }
    }
    let incumbent = best;
    incumbent.ok_or_else(|| Error::Usage("every device has a degenerate channel".into()))
}
