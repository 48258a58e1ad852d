//! RIS phase-shift optimization.
//!
//! Two objectives are supported for a fixed channel realization:
//!
//! - aggregation MSE under channel inversion, jointly with the receive
//!   beamformer (alternating: beamformer step, then one coordinate sweep
//!   over the RIS elements);
//! - channel alignment without transmitter CSI: make each device's
//!   single-antenna effective channel proportional to its aggregation
//!   weight, `min_theta min_c sum_k |h_k(theta) - c w_k|^2`.
//!
//! Both descents accept a move only if it strictly lowers the objective,
//! so the recorded objective sequence of every run is non-increasing.
//! [`brute_force_phases`] enumerates a discrete codebook exhaustively and
//! serves as the reference for small instances.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::aircomp::{population_weights, Beamformer, DeviceProfile};
use crate::channel::{ChannelRealization, RisConfig};
use crate::error::{check_dim, Error, Result};
use crate::linalg::dominant_left_singular;
use crate::rng::Stream;

/// Enumeration limit for [`brute_force_phases`].
pub const BRUTE_FORCE_LIMIT: usize = 1_000_000;

const CONTINUOUS_GRID: usize = 256;

type Objective = dyn Fn(&[Complex64]) -> f64;

/// Largest `pairs * Q^2` for which stalled descents try joint two-element moves.
const PAIR_MOVE_LIMIT: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhaseCodebook {
    /// Phases restricted to `2 pi q / levels`, `q = 0..levels`.
    Discrete(usize),
    Continuous,
}

impl Default for PhaseCodebook {
    fn default() -> Self {
        PhaseCodebook::Discrete(8)
    }
}

impl PhaseCodebook {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PhaseCodebook::Discrete(q) if q < 2 => Err(Error::Config(format!(
                "phase codebook needs at least 2 levels, got {q}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn level(levels: usize, q: usize) -> Complex64 {
        Complex64::from_polar(1.0, TAU * q as f64 / levels as f64)
    }

    /// Nearest codebook phase to `z` (identity on the circle when continuous).
    pub fn quantize(&self, z: Complex64) -> Complex64 {
        match *self {
            PhaseCodebook::Continuous => {
                if z.norm() > 0.0 {
                    z / z.norm()
                } else {
                    Complex64::new(1.0, 0.0)
                }
            }
            PhaseCodebook::Discrete(q) => {
                let a = z.arg().rem_euclid(TAU);
                let idx = (a / TAU * q as f64).round() as usize % q;
                Self::level(q, idx)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub codebook: PhaseCodebook,
    /// Maximum number of alternating iterations (sweeps) per run.
    pub budget: usize,
    /// Number of descent runs; the first starts from all-ones, the rest
    /// from random codebook phases.
    pub restarts: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            codebook: PhaseCodebook::default(),
            budget: 50,
            restarts: 5,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        self.codebook.validate()?;
        if self.restarts == 0 {
            return Err(Error::Config("optimizer restarts must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct MseOutcome {
    pub theta: RisConfig,
    pub beamformer: Beamformer,
    /// `analytic_mse` of the returned configuration.
    pub objective: f64,
    /// Objective at all-ones phases with the initial beamformer.
    pub initial_objective: f64,
    /// Accepted objective after each iteration, one sequence per run.
    pub histories: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct AlignmentResult {
    pub theta: RisConfig,
    /// Least-squares scale `c` for the returned phases.
    pub scale: Complex64,
    pub residual: f64,
    pub histories: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub enum BruteObjective {
    /// `analytic_mse` with a fixed receive beamformer.
    Mse { beamformer: Beamformer, noise_std: f64 },
    /// Alignment residual; `weights` are indexed by device (length K).
    Alignment { weights: Vec<f64> },
}

#[derive(Clone, Debug)]
pub struct BruteForceResult {
    pub theta: RisConfig,
    pub objective: f64,
    pub evaluated: usize,
}

/// Uniform i.i.d. phases from the codebook.
pub fn random_phases(elements: usize, codebook: PhaseCodebook, stream: &mut Stream) -> RisConfig {
    let angles: Vec<f64> = (0..elements)
        .map(|_| match codebook {
            PhaseCodebook::Discrete(q) => TAU * stream.below(q) as f64 / q as f64,
            PhaseCodebook::Continuous => TAU * stream.uniform(),
        })
        .collect();
    RisConfig::from_angles(&angles)
}

/// Scalar received gains `f^H h_k(theta)` written as
/// `base_k + sum_l coef[k][l] theta_l` for a fixed beamformer.
struct ScalarModel {
    base: Vec<Complex64>,
    coef: Vec<Vec<Complex64>>,
}

impl ScalarModel {
    fn new(real: &ChannelRealization, devices: &[usize], f: &[Complex64]) -> Self {
        let m = real.antennas();
        let l = real.elements();
        let base = devices
            .iter()
            .map(|&k| (0..m).map(|a| f[a].conj() * real.direct.get(k, a)).sum())
            .collect();
        let coef = devices
            .iter()
            .map(|&k| {
                (0..l)
                    .map(|e| (0..m).map(|a| f[a].conj() * real.cascade(k, a, e)).sum())
                    .collect()
            })
            .collect();
        Self { base, coef }
    }

    fn gains(&self, theta: &[Complex64]) -> Vec<Complex64> {
        self.base
            .iter()
            .zip(&self.coef)
            .map(|(b, row)| b + row.iter().zip(theta).map(|(c, t)| c * t).sum::<Complex64>())
            .collect()
    }
}

/// `max_k w_k^2 / (P_k |g_k|^2)`, i.e. `1 / eta`.
fn inverse_eta(gains: &[Complex64], weights: &[f64], power: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for ((g, &w), &p) in gains.iter().zip(weights).zip(power) {
        if w == 0.0 {
            continue;
        }
        let gsq = g.norm_sqr();
        if !(gsq.sqrt() > 1e-12) {
            return f64::INFINITY;
        }
        worst = worst.max(w * w / (p * gsq));
    }
    worst
}

/// `sum |h_k|^2 - |sum w_k h_k|^2 / sum w_k^2`, the residual at the optimal scale.
fn alignment_residual(h: &[Complex64], weights: &[f64]) -> (f64, Complex64) {
    let w2: f64 = weights.iter().map(|w| w * w).sum();
    let s: Complex64 = h.iter().zip(weights).map(|(z, &w)| z * w).sum();
    let scale = s / w2;
    let residual: f64 = h
        .iter()
        .zip(weights)
        .map(|(z, &w)| (z - scale * w).norm_sqr())
        .sum();
    (residual, scale)
}

/// Candidate phases for one coordinate.
fn candidates(codebook: PhaseCodebook) -> Vec<Complex64> {
    match codebook {
        PhaseCodebook::Discrete(q) => (0..q).map(|i| PhaseCodebook::level(q, i)).collect(),
        PhaseCodebook::Continuous => (0..CONTINUOUS_GRID)
            .map(|i| PhaseCodebook::level(CONTINUOUS_GRID, i))
            .collect(),
    }
}

fn pair_moves_affordable(codebook: PhaseCodebook, elements: usize) -> bool {
    match codebook {
        PhaseCodebook::Discrete(q) => elements * elements.saturating_sub(1) / 2 * q * q <= PAIR_MOVE_LIMIT,
        PhaseCodebook::Continuous => false,
    }
}

/// Apply the best strictly improving joint change of two elements, if any.
/// Used when single-element moves have stalled, to leave shallow local minima.
fn pair_move(
    theta: &mut RisConfig,
    options: &[Complex64],
    current: &mut f64,
    objective: impl Fn(&[Complex64]) -> f64,
) -> bool {
    let l = theta.len();
    let mut trial = theta.phases().to_vec();
    let mut best: Option<(usize, usize, Complex64, Complex64, f64)> = None;
    for a in 0..l {
        for b in a + 1..l {
            for &za in options {
                for &zb in options {
                    trial[a] = za;
                    trial[b] = zb;
                    let v = objective(&trial);
                    if v < best.map_or(*current, |x| x.4) {
                        best = Some((a, b, za, zb, v));
                    }
                }
            }
            trial[a] = theta.phases()[a];
            trial[b] = theta.phases()[b];
        }
    }
    match best {
        Some((a, b, za, zb, v)) => {
            theta.set_unchecked(a, za);
            theta.set_unchecked(b, zb);
            *current = v;
            true
        }
        None => false,
    }
}

/// Single-element sweeps followed by pair moves until neither improves.
fn local_descent(
    theta: &mut RisConfig,
    value: &mut f64,
    options: &[Complex64],
    objective: &impl Fn(&[Complex64]) -> f64,
) {
    loop {
        let start = *value;
        for e in 0..theta.len() {
            let mut phases = theta.phases().to_vec();
            for &z in options {
                phases[e] = z;
                let v = objective(&phases);
                if v < *value {
                    *value = v;
                    theta.set_unchecked(e, z);
                }
            }
        }
        if !(*value < start) && !pair_move(theta, options, value, objective) {
            return;
        }
    }
}

/// Iterated local search for small discrete problems. Once the descent has
/// stalled, each remaining iteration perturbs two elements of the incumbent,
/// descends again, and keeps the result only if it is strictly better.
fn kick_search(
    theta: &mut RisConfig,
    current: &mut f64,
    options: &[Complex64],
    iterations: usize,
    stream: &Stream,
    history: &mut Vec<f64>,
    objective: impl Fn(&[Complex64]) -> f64,
) {
    let l = theta.len();
    if l < 2 {
        return;
    }
    for it in 0..iterations {
        let mut rng = stream.substream("kick", it as u64);
        let mut trial = theta.clone();
        let a = rng.below(l);
        let b = (a + 1 + rng.below(l - 1)) % l;
        trial.set_unchecked(a, options[rng.below(options.len())]);
        trial.set_unchecked(b, options[rng.below(options.len())]);
        let mut value = objective(trial.phases());
        local_descent(&mut trial, &mut value, options, &objective);
        if value < *current {
            *theta = trial;
            *current = value;
        }
        history.push(*current);
    }
}

/// Golden-section refinement of `objective(e^{j a})` on `[lo, hi]`.
fn refine_angle(lo: f64, hi: f64, objective: impl Fn(Complex64) -> f64) -> (Complex64, f64) {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let eval = |x: f64| objective(Complex64::from_polar(1.0, x));
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (eval(c), eval(d));
    for _ in 0..40 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = eval(d);
        }
    }
    if fc < fd {
        (Complex64::from_polar(1.0, c), fc)
    } else {
        (Complex64::from_polar(1.0, d), fd)
    }
}

struct MseProblem<'a> {
    real: &'a ChannelRealization,
    selected: &'a [usize],
    weights: Vec<f64>,
    power: Vec<f64>,
}

impl MseProblem<'_> {
    fn inverse_eta(&self, model: &ScalarModel, theta: &[Complex64]) -> f64 {
        inverse_eta(&model.gains(theta), &self.weights, &self.power)
    }

    fn beamformer_for(&self, theta: &RisConfig) -> Beamformer {
        let m = self.real.antennas();
        if m == 1 {
            return Beamformer::first_antenna(1);
        }
        let h = crate::channel::effective_channel(self.real, theta).expect("dimensions checked");
        let cols: Vec<&[Complex64]> = self.selected.iter().map(|&k| h.row(k)).collect();
        dominant_left_singular(&cols, m)
            .and_then(|v| Beamformer::new(v).ok())
            .unwrap_or_else(|| Beamformer::first_antenna(m))
    }

    /// One descent run. Returns (theta, f, inverse eta history).
    fn descend(
        &self,
        mut theta: RisConfig,
        config: &OptimizerConfig,
        kicks: &Stream,
    ) -> (RisConfig, Beamformer, Vec<f64>) {
        let mut f = self.beamformer_for(&theta);
        let mut model = ScalarModel::new(self.real, self.selected, f.coefficients());
        let mut current = self.inverse_eta(&model, theta.phases());
        let mut history = vec![current];
        let options = candidates(config.codebook);
        let pairs = pair_moves_affordable(config.codebook, theta.len());

        let mut used = 0;
        while used < config.budget {
            used += 1;
            let start = current;

            let f_new = self.beamformer_for(&theta);
            if f_new != f {
                let model_new = ScalarModel::new(self.real, self.selected, f_new.coefficients());
                let value = self.inverse_eta(&model_new, theta.phases());
                if value < current {
                    f = f_new;
                    model = model_new;
                    current = value;
                }
            }

            for l in 0..theta.len() {
                let mut gains = model.gains(theta.phases());
                let old = theta.phases()[l];
                for (g, row) in gains.iter_mut().zip(&model.coef) {
                    *g -= row[l] * old;
                }
                let eval = |z: Complex64| {
                    let g: Vec<Complex64> =
                        gains.iter().zip(&model.coef).map(|(g, row)| g + row[l] * z).collect();
                    inverse_eta(&g, &self.weights, &self.power)
                };
                let mut best = (old, current);
                let mut best_idx = None;
                for (i, &z) in options.iter().enumerate() {
                    let v = eval(z);
                    if v < best.1 {
                        best = (z, v);
                        best_idx = Some(i);
                    }
                }
                if config.codebook == PhaseCodebook::Continuous {
                    let center = best_idx.map_or(old.arg(), |i| TAU * i as f64 / CONTINUOUS_GRID as f64);
                    let step = TAU / CONTINUOUS_GRID as f64;
                    let (z, v) = refine_angle(center - step, center + step, eval);
                    if v < best.1 {
                        best = (z, v);
                    }
                }
                if best.1 < current {
                    theta.set_unchecked(l, best.0);
                    current = best.1;
                }
            }
            if !(current < start) && pairs {
                pair_move(&mut theta, &options, &mut current, |t| self.inverse_eta(&model, t));
            }

            history.push(current);
            if !(current < start) {
                break;
            }
        }
        if pairs {
            kick_search(
                &mut theta,
                &mut current,
                &options,
                config.budget - used,
                kicks,
                &mut history,
                |t| self.inverse_eta(&model, t),
            );
        }
        (theta, f, history)
    }
}

/// Minimize the aggregation MSE over RIS phases and the receive beamformer
/// for a fixed selected set.
pub fn optimize_mse(
    real: &ChannelRealization,
    selected: &[usize],
    profiles: &[DeviceProfile],
    noise_std: f64,
    config: &OptimizerConfig,
    stream: &mut Stream,
) -> Result<MseOutcome> {
    config.validate()?;
    if selected.is_empty() {
        return Err(Error::Usage("optimize_mse needs a nonempty selected set".into()));
    }
    check_dim("device profiles", real.devices(), profiles.len())?;
    if let Some(&k) = selected.iter().find(|&&k| k >= real.devices()) {
        return Err(Error::Usage(format!("selected device {k} out of range")));
    }
    let pop = population_weights(profiles)?;
    let problem = MseProblem {
        real,
        selected,
        weights: selected.iter().map(|&k| pop[k]).collect(),
        power: selected.iter().map(|&k| profiles[k].power_budget).collect(),
    };
    let scale = noise_std * noise_std / 2.0;

    let runs = if real.elements() == 0 { 1 } else { config.restarts };
    let mut best: Option<(RisConfig, Beamformer, f64)> = None;
    let mut histories = Vec::with_capacity(runs);
    let mut initial_objective = f64::NAN;
    for r in 0..runs {
        let start = if r == 0 {
            RisConfig::all_ones(real.elements())
        } else {
            random_phases(real.elements(), config.codebook, &mut stream.substream("restart", r as u64))
        };
        let (theta, f, history) = problem.descend(start, config, &stream.substream("restart", r as u64));
        if r == 0 {
            initial_objective = history[0] * scale;
        }
        let value = *history.last().expect("history is nonempty");
        histories.push(history.iter().map(|v| v * scale).collect());
        if best.as_ref().is_none_or(|b| value < b.2) {
            best = Some((theta, f, value));
        }
    }
    let (theta, beamformer, value) = best.expect("at least one run");
    Ok(MseOutcome {
        theta,
        beamformer,
        objective: value * scale,
        initial_objective,
        histories,
    })
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(Error::Usage("alignment weights must be finite and >= 0".into()));
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::Usage("alignment weights are all zero".into()));
    }
    Ok(())
}

/// Align single-antenna effective channels to be proportional to `weights`
/// (one weight per device of `real`).
pub fn optimize_alignment_csit_free(
    real: &ChannelRealization,
    weights: &[f64],
    config: &OptimizerConfig,
    stream: &mut Stream,
) -> Result<AlignmentResult> {
    config.validate()?;
    if real.antennas() != 1 {
        return Err(Error::Unsupported(format!(
            "channel alignment without transmitter CSI needs one receive antenna, got {}",
            real.antennas()
        )));
    }
    check_dim("alignment weights", real.devices(), weights.len())?;
    check_weights(weights)?;
    let devices: Vec<usize> = (0..real.devices()).collect();
    let model = ScalarModel::new(real, &devices, &[Complex64::new(1.0, 0.0)]);
    let w2: f64 = weights.iter().map(|w| w * w).sum();

    let runs = if real.elements() == 0 { 1 } else { config.restarts };
    let mut best: Option<(RisConfig, f64)> = None;
    let mut histories = Vec::with_capacity(runs);
    for r in 0..runs {
        let mut theta = if r == 0 {
            RisConfig::all_ones(real.elements())
        } else {
            random_phases(real.elements(), config.codebook, &mut stream.substream("restart", r as u64))
        };
        let mut current = alignment_residual(&model.gains(theta.phases()), weights).0;
        let mut history = vec![current];
        let options = candidates(config.codebook);
        let pairs = pair_moves_affordable(config.codebook, theta.len());

        let mut used = 0;
        while used < config.budget {
            used += 1;
            let start = current;
            for l in 0..theta.len() {
                let old = theta.phases()[l];
                let mut u = model.gains(theta.phases());
                for (g, row) in u.iter_mut().zip(&model.coef) {
                    *g -= row[l] * old;
                }
                let d: Vec<Complex64> = model.coef.iter().map(|row| row[l]).collect();
                let eval = |z: Complex64| {
                    let h: Vec<Complex64> = u.iter().zip(&d).map(|(a, b)| a + b * z).collect();
                    alignment_residual(&h, weights).0
                };
                let proposal = match config.codebook {
                    PhaseCodebook::Continuous => {
                        // residual(z) = const + 2 Re(z * q) on the unit circle
                        let a: Complex64 = u.iter().zip(weights).map(|(x, &w)| x * w).sum();
                        let b: Complex64 = d.iter().zip(weights).map(|(x, &w)| x * w).sum();
                        let q: Complex64 = u.iter().zip(&d).map(|(x, y)| x.conj() * y).sum::<Complex64>()
                            - a.conj() * b / w2;
                        if q.norm() > 0.0 {
                            let z = -q.conj() / q.norm();
                            Some((z, eval(z)))
                        } else {
                            None
                        }
                    }
                    PhaseCodebook::Discrete(_) => options
                        .iter()
                        .map(|&z| (z, eval(z)))
                        .fold(None, |acc: Option<(Complex64, f64)>, c| match acc {
                            Some(a) if a.1 <= c.1 => Some(a),
                            _ => Some(c),
                        }),
                };
                if let Some((z, v)) = proposal {
                    if v < current {
                        theta.set_unchecked(l, z);
                        current = v;
                    }
                }
            }
            if !(current < start) && pairs {
                pair_move(&mut theta, &options, &mut current, |t| {
                    alignment_residual(&model.gains(t), weights).0
                });
            }
            history.push(current);
            if !(current < start) {
                break;
            }
        }
        if pairs {
            kick_search(
                &mut theta,
                &mut current,
                &options,
                config.budget - used,
                &stream.substream("restart", r as u64),
                &mut history,
                |t| alignment_residual(&model.gains(t), weights).0,
            );
        }
        histories.push(history);
        if best.as_ref().is_none_or(|b| current < b.1) {
            best = Some((theta, current));
        }
    }
    let (theta, _) = best.expect("at least one run");
    let (residual, scale) = alignment_residual(&model.gains(theta.phases()), weights);
    Ok(AlignmentResult {
        theta,
        scale,
        residual,
        histories,
    })
}

/// Exhaustive search over all `levels^L` codebook configurations.
pub fn brute_force_phases(
    real: &ChannelRealization,
    selected: &[usize],
    profiles: &[DeviceProfile],
    levels: usize,
    objective: &BruteObjective,
) -> Result<BruteForceResult> {
    PhaseCodebook::Discrete(levels).validate()?;
    if selected.is_empty() {
        return Err(Error::Usage("brute force needs a nonempty selected set".into()));
    }
    let l = real.elements();
    let total = (levels as f64).powi(l as i32);
    if total > BRUTE_FORCE_LIMIT as f64 {
        return Err(Error::SearchTooLarge {
            candidates: total,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    check_dim("device profiles", real.devices(), profiles.len())?;

    let evaluate: Box<Objective> = match objective {
        BruteObjective::Mse { beamformer, noise_std } => {
            check_dim("beamformer length", real.antennas(), beamformer.len())?;
            let pop = population_weights(profiles)?;
            let weights: Vec<f64> = selected.iter().map(|&k| pop[k]).collect();
            let power: Vec<f64> = selected.iter().map(|&k| profiles[k].power_budget).collect();
            let model = ScalarModel::new(real, selected, beamformer.coefficients());
            let scale = noise_std * noise_std * beamformer.norm_sqr() / 2.0;
            Box::new(move |theta| scale * inverse_eta(&model.gains(theta), &weights, &power))
        }
        BruteObjective::Alignment { weights } => {
            if real.antennas() != 1 {
                return Err(Error::Unsupported("alignment objective needs one receive antenna".into()));
            }
            check_dim("alignment weights", real.devices(), weights.len())?;
            let w: Vec<f64> = selected.iter().map(|&k| weights[k]).collect();
            check_weights(&w)?;
            let model = ScalarModel::new(real, selected, &[Complex64::new(1.0, 0.0)]);
            Box::new(move |theta| alignment_residual(&model.gains(theta), &w).0)
        }
    };

    let table: Vec<Complex64> = (0..levels).map(|q| PhaseCodebook::level(levels, q)).collect();
    let mut digits = vec![0usize; l];
    let mut theta = vec![table[0]; l];
    let mut best = (theta.clone(), f64::INFINITY);
    let mut evaluated = 0usize;
    loop {
        let v = evaluate(&theta);
        evaluated += 1;
        if v < best.1 {
            best = (theta.clone(), v);
        }
        // odometer increment, least significant element first
        let mut pos = 0;
        loop {
            if pos == l {
                let theta = RisConfig::new(best.0).expect("codebook phases are unit modulus");
                return Ok(BruteForceResult {
                    theta,
                    objective: best.1,
                    evaluated,
                });
            }
            digits[pos] += 1;
            if digits[pos] == levels {
                digits[pos] = 0;
                theta[pos] = table[0];
                pos += 1;
            } else {
                theta[pos] = table[digits[pos]];
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aircomp::{analytic_mse, plan_transmissions};
    use crate::channel::{effective_channel, sample_channels, FadingModel, FadingSpec};
    use crate::linalg::CMatrix;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn instance(k: usize, m: usize, l: usize, seed: u64) -> ChannelRealization {
        let spec = FadingSpec {
            ris_link: FadingModel::Rayleigh { variance: 1.0 },
            ..FadingSpec::default()
        };
        sample_channels(&spec, k, m, l, &mut Stream::from_seed(seed)).unwrap()
    }

    fn profiles(k: usize) -> Vec<DeviceProfile> {
        (0..k).map(|_| DeviceProfile::new(100, 1.0)).collect()
    }

    /// Objective through the public aircomp path.
    fn mse_via_plan(real: &ChannelRealization, sel: &[usize], theta: &RisConfig, f: &Beamformer) -> f64 {
        let h = effective_channel(real, theta).unwrap();
        match plan_transmissions(&h, sel, &profiles(real.devices()), f) {
            Ok(plan) => analytic_mse(&plan, f, 1.0).unwrap(),
            Err(_) => f64::INFINITY,
        }
    }

    fn residual_direct(real: &ChannelRealization, theta: &RisConfig, w: &[f64]) -> f64 {
        let h = effective_channel(real, theta).unwrap();
        let col: Vec<Complex64> = (0..real.devices()).map(|k| h.get(k, 0)).collect();
        alignment_residual(&col, w).0
    }

    #[test]
    fn single_element_co_phasing() {
        let real = ChannelRealization::new(
            CMatrix::from_vec(1, 1, vec![c(0.3, 0.4)]),
            CMatrix::from_vec(1, 1, vec![c(0.0, 1.5)]),
            CMatrix::from_vec(1, 1, vec![c(-0.8, 0.2)]),
        )
        .unwrap();
        let cfg = OptimizerConfig { codebook: PhaseCodebook::Discrete(8), ..Default::default() };
        let out = optimize_mse(&real, &[0], &profiles(1), 1.0, &cfg, &mut Stream::from_seed(0)).unwrap();
        let ideal = c(0.3, 0.4) / (c(-0.8, 0.2) * c(0.0, 1.5));
        let expected = PhaseCodebook::Discrete(8).quantize(ideal);
        assert!((out.theta.phases()[0] - expected).norm() < 1e-12);
        let h = effective_channel(&real, &out.theta).unwrap();
        assert!(h.get(0, 0).norm_sqr() >= real.direct.get(0, 0).norm_sqr());
    }

    #[test]
    fn never_worse_than_all_ones() {
        for seed in 0..20 {
            let real = instance(4, 2, 6, seed);
            let out = optimize_mse(&real, &[0, 1, 3], &profiles(4), 1.0, &OptimizerConfig::default(), &mut Stream::from_seed(seed))
                .unwrap();
            assert!(out.objective <= out.initial_objective);
            let at_ones = mse_via_plan(&real, &[0, 1, 3], &RisConfig::all_ones(6), &Beamformer::first_antenna(2));
            let reached = mse_via_plan(&real, &[0, 1, 3], &out.theta, &out.beamformer);
            assert!((reached - out.objective).abs() <= 1e-9 * reached);
            // initial beamformer is the dominant direction, which may beat e_0
            assert!(out.objective <= at_ones.max(out.initial_objective));
        }
    }

    #[test]
    fn mse_histories_non_increasing() {
        for seed in 0..10 {
            let real = instance(5, 3, 8, seed + 100);
            let out = optimize_mse(&real, &[0, 1, 2, 3, 4], &profiles(5), 0.5, &OptimizerConfig::default(), &mut Stream::from_seed(seed))
                .unwrap();
            for h in &out.histories {
                assert!(h.windows(2).all(|w| w[1] <= w[0]));
            }
        }
    }

    #[test]
    fn dominates_one_sweep_from_all_ones() {
        // Independent single coordinate sweep through the public plan path.
        for seed in 0..10 {
            let real = instance(3, 1, 5, seed + 7);
            let sel = [0, 1, 2];
            let f = Beamformer::first_antenna(1);
            let mut theta = RisConfig::all_ones(5);
            let mut cur = mse_via_plan(&real, &sel, &theta, &f);
            for l in 0..5 {
                for q in 0..8 {
                    let mut cand = theta.clone();
                    cand.set_unchecked(l, PhaseCodebook::level(8, q));
                    let v = mse_via_plan(&real, &sel, &cand, &f);
                    if v < cur {
                        cur = v;
                        theta = cand;
                    }
                }
            }
            let out = optimize_mse(&real, &sel, &profiles(3), 1.0, &OptimizerConfig::default(), &mut Stream::from_seed(1))
                .unwrap();
            assert!(out.objective <= cur * (1.0 + 1e-12));
        }
    }

    #[test]
    fn continuous_codebook_descends() {
        let real = instance(3, 1, 6, 55);
        let cfg = OptimizerConfig { codebook: PhaseCodebook::Continuous, ..Default::default() };
        let out = optimize_mse(&real, &[0, 1, 2], &profiles(3), 1.0, &cfg, &mut Stream::from_seed(2)).unwrap();
        assert!(out.objective < out.initial_objective);
        assert!(out.theta.phases().iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        let reached = mse_via_plan(&real, &[0, 1, 2], &out.theta, &out.beamformer);
        assert!((reached - out.objective).abs() <= 1e-9 * reached);
    }

    #[test]
    fn empty_selection_is_usage_error() {
        let real = instance(2, 1, 2, 0);
        assert!(matches!(
            optimize_mse(&real, &[], &profiles(2), 1.0, &OptimizerConfig::default(), &mut Stream::from_seed(0)),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn alignment_single_device_is_exact() {
        let real = instance(1, 1, 4, 3);
        let out = optimize_alignment_csit_free(&real, &[1.0], &OptimizerConfig::default(), &mut Stream::from_seed(0)).unwrap();
        assert!(out.residual.abs() < 1e-24);
        let h = effective_channel(&real, &out.theta).unwrap().get(0, 0);
        assert!((out.scale - h).norm() < 1e-12);
    }

    #[test]
    fn alignment_without_ris_is_least_squares() {
        let real = instance(4, 1, 0, 8);
        let w = [0.1, 0.2, 0.3, 0.4];
        let out = optimize_alignment_csit_free(&real, &w, &OptimizerConfig::default(), &mut Stream::from_seed(0)).unwrap();
        assert!(out.theta.is_empty());
        let h: Vec<Complex64> = (0..4).map(|k| real.direct.get(k, 0)).collect();
        let num: Complex64 = h.iter().zip(&w).map(|(z, w)| z * w).sum();
        let c_ls = num / w.iter().map(|x| x * x).sum::<f64>();
        let expected: f64 = h.iter().zip(&w).map(|(z, w)| (z - c_ls * w).norm_sqr()).sum();
        assert!((out.residual - expected).abs() < 1e-12);
        assert!((out.scale - c_ls).norm() < 1e-12);
    }

    #[test]
    fn alignment_errors() {
        let real = instance(2, 2, 2, 0);
        assert!(matches!(
            optimize_alignment_csit_free(&real, &[0.5, 0.5], &OptimizerConfig::default(), &mut Stream::from_seed(0)),
            Err(Error::Unsupported(_))
        ));
        let real = instance(2, 1, 2, 0);
        assert!(matches!(
            optimize_alignment_csit_free(&real, &[0.0, 0.0], &OptimizerConfig::default(), &mut Stream::from_seed(0)),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn alignment_continuous_histories_non_increasing() {
        let real = instance(6, 1, 12, 4);
        let cfg = OptimizerConfig { codebook: PhaseCodebook::Continuous, ..Default::default() };
        let out = optimize_alignment_csit_free(&real, &[1.0 / 6.0; 6], &cfg, &mut Stream::from_seed(1)).unwrap();
        for h in &out.histories {
            assert!(h.windows(2).all(|w| w[1] <= w[0]));
        }
        assert!((residual_direct(&real, &out.theta, &[1.0 / 6.0; 6]) - out.residual).abs() < 1e-9);
    }

    #[test]
    fn alignment_residual_decreases_with_more_elements() {
        let mut medians = Vec::new();
        for &l in &[10usize, 30, 50, 90] {
            let mut res: Vec<f64> = (0..50)
                .map(|i| {
                    let real = sample_channels(&FadingSpec::default(), 10, 1, l, &mut Stream::from_seed(1000 + i)).unwrap();
                    optimize_alignment_csit_free(&real, &[0.1; 10], &OptimizerConfig::default(), &mut Stream::from_seed(i))
                        .unwrap()
                        .residual
                })
                .collect();
            res.sort_by(f64::total_cmp);
            medians.push((res[24] + res[25]) / 2.0);
        }
        assert!(medians.windows(2).all(|w| w[1] < w[0]), "{medians:?}");
    }

    #[test]
    fn brute_force_two_point() {
        let real = instance(2, 1, 1, 5);
        let obj = BruteObjective::Mse { beamformer: Beamformer::first_antenna(1), noise_std: 1.0 };
        let out = brute_force_phases(&real, &[0, 1], &profiles(2), 2, &obj).unwrap();
        let plus = mse_via_plan(&real, &[0, 1], &RisConfig::all_ones(1), &Beamformer::first_antenna(1));
        let minus = mse_via_plan(&real, &[0, 1], &RisConfig::from_angles(&[std::f64::consts::PI]), &Beamformer::first_antenna(1));
        assert_eq!(out.evaluated, 2);
        assert!((out.objective - plus.min(minus)).abs() <= 1e-12 * out.objective);
    }

    #[test]
    fn brute_force_is_exhaustive() {
        let real = instance(3, 1, 2, 6);
        let w = vec![0.2, 0.3, 0.5];
        for obj in [
            BruteObjective::Mse { beamformer: Beamformer::first_antenna(1), noise_std: 1.0 },
            BruteObjective::Alignment { weights: w.clone() },
        ] {
            let out = brute_force_phases(&real, &[0, 1, 2], &profiles(3), 2, &obj).unwrap();
            for a in [0.0, std::f64::consts::PI] {
                for b in [0.0, std::f64::consts::PI] {
                    let theta = RisConfig::from_angles(&[a, b]);
                    let v = match &obj {
                        BruteObjective::Mse { beamformer, .. } => mse_via_plan(&real, &[0, 1, 2], &theta, beamformer),
                        BruteObjective::Alignment { weights } => residual_direct(&real, &theta, weights),
                    };
                    assert!(out.objective <= v * (1.0 + 1e-12) + 1e-15);
                }
            }
        }
    }

    #[test]
    fn brute_force_argmin_reevaluates() {
        let real = instance(3, 1, 4, 17);
        let obj = BruteObjective::Mse { beamformer: Beamformer::first_antenna(1), noise_std: 1.0 };
        let out = brute_force_phases(&real, &[0, 1, 2], &profiles(3), 4, &obj).unwrap();
        assert_eq!(out.evaluated, 256);
        let again = mse_via_plan(&real, &[0, 1, 2], &out.theta, &Beamformer::first_antenna(1));
        assert!((again - out.objective).abs() <= 1e-12 * again);
    }

    #[test]
    fn brute_force_guard() {
        let real = instance(2, 1, 21, 0);
        let obj = BruteObjective::Alignment { weights: vec![0.5, 0.5] };
        assert!(matches!(
            brute_force_phases(&real, &[0, 1], &profiles(2), 2, &obj),
            Err(Error::SearchTooLarge { .. })
        ));
    }

    #[test]
    fn random_phases_examples() {
        assert!(random_phases(0, PhaseCodebook::Discrete(4), &mut Stream::from_seed(0)).is_empty());
        let a = random_phases(16, PhaseCodebook::Discrete(4), &mut Stream::from_seed(3));
        let b = random_phases(16, PhaseCodebook::Discrete(4), &mut Stream::from_seed(3));
        assert_eq!(a, b);
    }

    #[test]
    fn random_phase_levels_are_uniform() {
        let n = 100_000;
        let cfg = random_phases(n, PhaseCodebook::Discrete(4), &mut Stream::from_seed(21));
        let mut counts = [0usize; 4];
        for z in cfg.phases() {
            let q = ((z.arg().rem_euclid(TAU) / TAU * 4.0).round() as usize) % 4;
            counts[q] += 1;
        }
        let sigma = (n as f64 * 0.25 * 0.75).sqrt();
        for &cnt in &counts {
            assert!((cnt as f64 - n as f64 / 4.0).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }

    proptest! {
        #[test]
        fn least_squares_scale_is_locally_optimal(seed in 0u64..300, dir in 0.0f64..TAU) {
            let real = instance(5, 1, 6, seed);
            let w = [0.1, 0.3, 0.2, 0.25, 0.15];
            let out = optimize_alignment_csit_free(&real, &w, &OptimizerConfig { budget: 3, ..Default::default() }, &mut Stream::from_seed(seed)).unwrap();
            let h = effective_channel(&real, &out.theta).unwrap();
            let resid = |scale: Complex64| -> f64 {
                (0..5).map(|k| (h.get(k, 0) - scale * w[k]).norm_sqr()).sum()
            };
            let base = resid(out.scale);
            let perturbed = resid(out.scale + Complex64::from_polar(1e-3, dir));
            prop_assert!(perturbed >= base);
        }
    }
}
