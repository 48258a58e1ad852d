//! Over-the-air model aggregation with channel-inversion power control.
//!
//! Each selected device `k` pre-scales its update by
//! `b_k = sqrt(eta) * w_k / (f^H h_k)` so that after receive beamforming
//! every contribution arrives as `sqrt(eta) * w_k * x_k`. The common
//! scalar `eta` is the largest value that keeps every device within its
//! power budget, so the weakest effective channel (the straggler) sets it.
//!
//! Weights are normalized over the whole device population, not over the
//! selected subset. The receiver therefore estimates the partial sum
//! `sum_{k in S} w_k x_k`, and the server rescales by `1 / sum_{k in S} w_k`
//! digitally ([`TransmitPlan::normalize`]). With this convention `eta` can
//! only shrink when devices are added, which is what makes aggregation MSE
//! grow with the number of participants.

use num_complex::Complex64;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{inner, norm_sqr, CMatrix};
use crate::rng::Stream;
use crate::vector::ModelVector;

const DEGENERATE_GAIN: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct DeviceProfile {
    pub data_size: usize,
    pub weight: f64,
    pub power_budget: f64,
}

impl DeviceProfile {
    pub fn new(data_size: usize, power_budget: f64) -> Self {
        Self {
            data_size,
            weight: data_size as f64,
            power_budget,
        }
    }
}

/// Receive beamformer with unit Euclidean norm.
#[derive(Clone, Debug, PartialEq)]
pub struct Beamformer {
    coefficients: Vec<Complex64>,
}

impl Beamformer {
    /// Normalizes `v`; fails on a zero or non-finite vector.
    pub fn new(v: Vec<Complex64>) -> Result<Self> {
        let n = norm_sqr(&v).sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Usage("beamformer must be a nonzero finite vector".into()));
        }
        Ok(Self {
            coefficients: v.into_iter().map(|z| z / n).collect(),
        })
    }

    /// `e_0`, the single-antenna (or first-antenna) receiver.
    pub fn first_antenna(antennas: usize) -> Self {
        let mut coefficients = vec![Complex64::new(0.0, 0.0); antennas];
        coefficients[0] = Complex64::new(1.0, 0.0);
        Self { coefficients }
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.coefficients)
    }

    /// `f^H h`.
    pub fn combine(&self, h: &[Complex64]) -> Complex64 {
        inner(&self.coefficients, h)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransmitPlan {
    /// Selected device indices, in transmission order.
    pub selected: Vec<usize>,
    /// Population-normalized aggregation weight of each selected device.
    pub weights: Vec<f64>,
    /// Transmit scaling `b_k` of each selected device.
    pub coefficients: Vec<Complex64>,
    /// Common denoising scalar.
    pub eta: f64,
}

impl TransmitPlan {
    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Scale a partial-sum estimate to a weighted average over the selected set.
    pub fn normalize(&self, partial_sum: &ModelVector) -> ModelVector {
        partial_sum.scaled(1.0 / self.weight_sum())
    }

    /// Largest `|b_k|^2 / P_k` over the selected devices.
    pub fn peak_power_ratio(&self, profiles: &[DeviceProfile]) -> f64 {
        self.selected
            .iter()
            .zip(&self.coefficients)
            .map(|(&k, b)| b.norm_sqr() / profiles[k].power_budget)
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregationReport {
    /// Estimate of the partial sum `sum_{k in S} w_k x_k`.
    pub estimate: ModelVector,
    /// Mean squared error per entry against the exact partial sum.
    pub empirical_mse: f64,
    /// Closed-form per-entry MSE from receiver and artificial noise.
    pub analytic_mse: f64,
}

/// Population-normalized weights `w_k / sum_j w_j` over all profiles.
pub fn population_weights(profiles: &[DeviceProfile]) -> Result<Vec<f64>> {
    let total: f64 = profiles.iter().map(|p| p.weight).sum();
    if profiles.iter().any(|p| !(p.weight >= 0.0 && p.weight.is_finite())) {
        return Err(Error::Usage("aggregation weights must be finite and >= 0".into()));
    }
    if !(total > 0.0) {
        return Err(Error::Usage("aggregation weights are all zero".into()));
    }
    Ok(profiles.iter().map(|p| p.weight / total).collect())
}

fn validate_selection(selected: &[usize], devices: usize) -> Result<()> {
    if selected.is_empty() {
        return Err(Error::Usage("no devices selected".into()));
    }
    let mut seen = vec![false; devices];
    for &k in selected {
        if k >= devices {
            return Err(Error::Usage(format!("selected device {k} out of range (K={devices})")));
        }
        if std::mem::replace(&mut seen[k], true) {
            return Err(Error::Usage(format!("device {k} selected twice")));
        }
    }
    Ok(())
}

/// Channel-inversion transmit plan for the selected devices.
pub fn plan_transmissions(
    h_eff: &CMatrix,
    selected: &[usize],
    profiles: &[DeviceProfile],
    f: &Beamformer,
) -> Result<TransmitPlan> {
    check_dim("device profiles", h_eff.rows(), profiles.len())?;
    check_dim("beamformer length", h_eff.cols(), f.len())?;
    validate_selection(selected, h_eff.rows())?;
    for &k in selected {
        if !(profiles[k].power_budget > 0.0) {
            return Err(Error::Usage(format!("device {k} has a non-positive power budget")));
        }
    }
    let pop = population_weights(profiles)?;
    let weights: Vec<f64> = selected.iter().map(|&k| pop[k]).collect();
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::Usage("selected devices carry zero total weight".into()));
    }

    let mut combined = Vec::with_capacity(selected.len());
    for &k in selected {
        let g = f.combine(h_eff.row(k));
        if !(g.norm() > DEGENERATE_GAIN) {
            return Err(Error::DegenerateChannel {
                device: k,
                magnitude: g.norm(),
            });
        }
        combined.push(g);
    }

    let eta = selected
        .iter()
        .zip(&weights)
        .zip(&combined)
        .filter(|((_, &w), _)| w > 0.0)
        .map(|((&k, &w), g)| profiles[k].power_budget * g.norm_sqr() / (w * w))
        .fold(f64::INFINITY, f64::min);

    let root = eta.sqrt();
    let coefficients = weights
        .iter()
        .zip(&combined)
        .map(|(&w, &g)| root * w / g)
        .collect();

    Ok(TransmitPlan {
        selected: selected.to_vec(),
        weights,
        coefficients,
        eta,
    })
}

/// Plan for transmitters without channel knowledge, single receive antenna.
///
/// Every selected device sends at the common power `min_k P_k` with no phase
/// correction. The receiver rotates by the phase of the least-squares scale
/// `c = sum w_k h_k / sum w_k^2` and divides by `|c| sqrt(P)`, so device `k`
/// contributes `Re(conj(c) h_k) / |c|^2` in place of `w_k`.
pub fn csit_free_plan(
    h_eff: &CMatrix,
    selected: &[usize],
    profiles: &[DeviceProfile],
) -> Result<(TransmitPlan, Beamformer)> {
    if h_eff.cols() != 1 {
        return Err(Error::Unsupported(format!(
            "transmitter-side channel-free aggregation needs one receive antenna, got {}",
            h_eff.cols()
        )));
    }
    check_dim("device profiles", h_eff.rows(), profiles.len())?;
    validate_selection(selected, h_eff.rows())?;
    let pop = population_weights(profiles)?;
    let weights: Vec<f64> = selected.iter().map(|&k| pop[k]).collect();
    let w2: f64 = weights.iter().map(|w| w * w).sum();
    if w2 == 0.0 {
        return Err(Error::Usage("selected devices carry zero total weight".into()));
    }
    let scale: Complex64 = selected
        .iter()
        .zip(&weights)
        .map(|(&k, &w)| h_eff.get(k, 0) * w)
        .sum::<Complex64>()
        / w2;
    if !(scale.norm() > DEGENERATE_GAIN) {
        return Err(Error::DegenerateChannel {
            device: selected[0],
            magnitude: scale.norm(),
        });
    }
    let power = selected
        .iter()
        .map(|&k| profiles[k].power_budget)
        .fold(f64::INFINITY, f64::min);
    if !(power > 0.0) {
        return Err(Error::Usage("non-positive power budget".into()));
    }
    let f = Beamformer::new(vec![scale])?;
    let plan = TransmitPlan {
        selected: selected.to_vec(),
        weights,
        coefficients: vec![Complex64::new(power.sqrt(), 0.0); selected.len()],
        eta: scale.norm_sqr() * power,
    };
    Ok((plan, f))
}

/// Per-entry MSE of the real-part estimator: `noise_std^2 ||f||^2 / (2 eta)`.
///
/// `noise_std^2` is the total complex noise variance per antenna, split
/// evenly between the two quadratures; only the in-phase part reaches the
/// estimate.
pub fn analytic_mse(plan: &TransmitPlan, f: &Beamformer, noise_std: f64) -> Result<f64> {
    if !(plan.eta > 0.0) || !plan.eta.is_finite() {
        return Err(Error::InvalidPlan(format!("eta must be positive and finite, got {}", plan.eta)));
    }
    Ok(noise_std * noise_std * f.norm_sqr() / (2.0 * plan.eta))
}

/// Exact `sum_i weights[i] * updates[i]` in memory.
pub fn weighted_sum(updates: &[ModelVector], weights: &[f64]) -> Result<ModelVector> {
    check_dim("weights", updates.len(), weights.len())?;
    let dim = updates.first().map_or(0, |u| u.dim());
    let mut out = ModelVector::zeros(dim);
    for (u, &w) in updates.iter().zip(weights) {
        check_dim("update dimension", dim, u.dim())?;
        for (o, x) in out.iter_mut().zip(u.iter()) {
            *o += w * x;
        }
    }
    Ok(out)
}

/// Superpose the scaled updates over the true channel, add receiver noise
/// and per-device artificial noise, and estimate the weighted partial sum.
///
/// `updates` and `artificial_noise_std` are indexed like `plan.selected`.
/// Draw order per entry: artificial noise of each device, then receiver
/// noise per antenna.
pub fn transmit_and_aggregate(
    plan: &TransmitPlan,
    h_eff: &CMatrix,
    f: &Beamformer,
    updates: &[ModelVector],
    noise_std: f64,
    artificial_noise_std: &[f64],
    stream: &mut Stream,
) -> Result<AggregationReport> {
    let n = plan.selected.len();
    check_dim("updates per selected device", n, updates.len())?;
    check_dim("artificial noise per selected device", n, artificial_noise_std.len())?;
    check_dim("beamformer length", h_eff.cols(), f.len())?;
    if !(plan.eta > 0.0) || !plan.eta.is_finite() {
        return Err(Error::InvalidPlan(format!("eta must be positive and finite, got {}", plan.eta)));
    }
    let dim = updates.first().map_or(0, |u| u.dim());
    for u in updates {
        check_dim("update dimension", dim, u.dim())?;
    }
    if let Some(&k) = plan.selected.iter().find(|&&k| k >= h_eff.rows()) {
        return Err(Error::Usage(format!("planned device {k} not in channel matrix")));
    }

    // End-to-end complex gain of each device after beamforming.
    let gains: Vec<Complex64> = plan
        .selected
        .iter()
        .zip(&plan.coefficients)
        .map(|(&k, &b)| f.combine(h_eff.row(k)) * b)
        .collect();
    let root = plan.eta.sqrt();
    let antennas = f.len();
    let fc = f.coefficients();

    let mut estimate = ModelVector::zeros(dim);
    let mut sq_err = 0.0;
    let mut noise = vec![Complex64::new(0.0, 0.0); antennas];
    for j in 0..dim {
        let mut rx = Complex64::new(0.0, 0.0);
        let mut target = 0.0;
        for i in 0..n {
            let x = updates[i][j];
            let sigma = artificial_noise_std[i];
            let zeta = if sigma > 0.0 { sigma * stream.standard_normal() } else { 0.0 };
            rx += gains[i] * (x + zeta);
            target += plan.weights[i] * x;
        }
        if noise_std > 0.0 {
            for z in noise.iter_mut() {
                *z = stream.complex_normal(noise_std * noise_std);
            }
            rx += inner(fc, &noise);
        }
        let est = rx.re / root;
        estimate[j] = est;
        sq_err += (est - target) * (est - target);
    }

    let artificial: f64 = gains
        .iter()
        .zip(artificial_noise_std)
        .map(|(g, s)| g.re * g.re * s * s)
        .sum::<f64>()
        / plan.eta;
    Ok(AggregationReport {
        estimate,
        empirical_mse: if dim == 0 { 0.0 } else { sq_err / dim as f64 },
        analytic_mse: analytic_mse(plan, f, noise_std)? + artificial,
    })
}

/// Receive SNR convention: `snr = P / noise_std^2`.
pub fn noise_std_for_snr_db(snr_db: f64, power: f64) -> f64 {
    (power / 10f64.powf(snr_db / 10.0)).sqrt()
}

/// Imperfect channel knowledge: `h * (1 + e)` with `e ~ CN(0, error_std^2)`
/// drawn independently per entry.
pub fn perturb_channel(h: &CMatrix, error_std: f64, stream: &mut Stream) -> CMatrix {
    if error_std <= 0.0 {
        return h.clone();
    }
    let mut out = h.clone();
    for z in out.as_mut_slice() {
        *z *= Complex64::new(1.0, 0.0) + stream.complex_normal(error_std * error_std);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channels, FadingSpec};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn uniform_profiles(k: usize) -> Vec<DeviceProfile> {
        (0..k).map(|_| DeviceProfile::new(100, 1.0)).collect()
    }

    fn rayleigh(k: usize, m: usize, seed: u64) -> CMatrix {
        sample_channels(&FadingSpec::default(), k, m, 0, &mut Stream::from_seed(seed))
            .unwrap()
            .direct
    }

    fn random_updates(n: usize, d: usize, seed: u64) -> Vec<ModelVector> {
        let mut s = Stream::from_seed(seed);
        (0..n)
            .map(|_| ModelVector((0..d).map(|_| s.standard_normal()).collect()))
            .collect()
    }

    #[test]
    fn identity_channel_single_device() {
        let h = CMatrix::from_vec(1, 1, vec![c(1.0, 0.0)]);
        let f = Beamformer::first_antenna(1);
        let plan = plan_transmissions(&h, &[0], &uniform_profiles(1), &f).unwrap();
        assert_eq!(plan.eta, 1.0);
        assert_eq!(plan.coefficients, vec![c(1.0, 0.0)]);
    }

    #[test]
    fn two_device_closed_form() {
        let h = CMatrix::from_vec(2, 1, vec![c(1.0, 0.0), c(0.5, 0.0)]);
        let f = Beamformer::first_antenna(1);
        let profiles = vec![
            DeviceProfile { data_size: 1, weight: 0.5, power_budget: 1.0 },
            DeviceProfile { data_size: 1, weight: 0.5, power_budget: 1.0 },
        ];
        let plan = plan_transmissions(&h, &[0, 1], &profiles, &f).unwrap();
        assert!((plan.eta - 1.0).abs() < 1e-15);
        assert!((plan.coefficients[0] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((plan.coefficients[1] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((plan.coefficients[1].norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn binding_device_hits_budget() {
        let h = rayleigh(20, 1, 3);
        let profiles = uniform_profiles(20);
        let all: Vec<usize> = (0..20).collect();
        let plan = plan_transmissions(&h, &all, &profiles, &Beamformer::first_antenna(1)).unwrap();
        let ratios: Vec<f64> = all
            .iter()
            .map(|&k| plan.coefficients[k].norm_sqr() / profiles[k].power_budget)
            .collect();
        let peak = ratios.iter().cloned().fold(0.0, f64::max);
        assert!((peak - 1.0).abs() < 1e-9);
        assert!(ratios.iter().all(|&r| r <= 1.0 + 1e-9));
    }

    #[test]
    fn degenerate_channel_names_device() {
        let h = CMatrix::from_vec(2, 1, vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let err = plan_transmissions(&h, &[0, 1], &uniform_profiles(2), &Beamformer::first_antenna(1))
            .unwrap_err();
        assert!(matches!(err, Error::DegenerateChannel { device: 1, .. }));
    }

    #[test]
    fn empty_and_duplicate_selection_rejected() {
        let h = rayleigh(3, 1, 0);
        let f = Beamformer::first_antenna(1);
        assert!(plan_transmissions(&h, &[], &uniform_profiles(3), &f).is_err());
        assert!(plan_transmissions(&h, &[1, 1], &uniform_profiles(3), &f).is_err());
        assert!(plan_transmissions(&h, &[3], &uniform_profiles(3), &f).is_err());
    }

    #[test]
    fn lossless_single_device() {
        let h = CMatrix::from_vec(1, 1, vec![c(1.0, 0.0)]);
        let f = Beamformer::first_antenna(1);
        let plan = plan_transmissions(&h, &[0], &uniform_profiles(1), &f).unwrap();
        let v = ModelVector(vec![0.25, -3.0, 1e-8, 42.0]);
        let rep = transmit_and_aggregate(&plan, &h, &f, &[v.clone()], 0.0, &[0.0], &mut Stream::from_seed(0))
            .unwrap();
        assert_eq!(rep.estimate, v);
        assert_eq!(rep.empirical_mse, 0.0);
    }

    #[test]
    fn two_device_weighted_sum() {
        let h = rayleigh(2, 2, 8);
        let f = Beamformer::new(vec![c(0.3, 0.1), c(-0.5, 0.9)]).unwrap();
        let profiles = vec![
            DeviceProfile { data_size: 3, weight: 0.3, power_budget: 1.0 },
            DeviceProfile { data_size: 7, weight: 0.7, power_budget: 2.0 },
        ];
        let plan = plan_transmissions(&h, &[0, 1], &profiles, &f).unwrap();
        let ups = random_updates(2, 100, 1);
        let rep = transmit_and_aggregate(&plan, &h, &f, &ups, 0.0, &[0.0, 0.0], &mut Stream::from_seed(0))
            .unwrap();
        for j in 0..100 {
            let exact = 0.3 * ups[0][j] + 0.7 * ups[1][j];
            assert!((rep.estimate[j] - exact).abs() <= 1e-10 * exact.abs().max(1e-300));
        }
    }

    #[test]
    fn empirical_matches_analytic_at_10db() {
        let h = rayleigh(20, 1, 21);
        let profiles = uniform_profiles(20);
        let f = Beamformer::first_antenna(1);
        let all: Vec<usize> = (0..20).collect();
        let plan = plan_transmissions(&h, &all, &profiles, &f).unwrap();
        let ups = random_updates(20, 10_000, 2);
        let noise = noise_std_for_snr_db(10.0, 1.0);
        let rep = transmit_and_aggregate(&plan, &h, &f, &ups, noise, &[0.0; 20], &mut Stream::from_seed(5))
            .unwrap();
        let rel = (rep.empirical_mse - rep.analytic_mse).abs() / rep.analytic_mse;
        assert!(rel < 0.05, "empirical {} analytic {}", rep.empirical_mse, rep.analytic_mse);
    }

    #[test]
    fn analytic_examples() {
        let plan = TransmitPlan {
            selected: vec![0],
            weights: vec![1.0],
            coefficients: vec![c(1.0, 0.0)],
            eta: 1.0,
        };
        let f = Beamformer::first_antenna(1);
        assert_eq!(analytic_mse(&plan, &f, 0.0).unwrap(), 0.0);
        assert_eq!(analytic_mse(&plan, &f, 1.0).unwrap(), 0.5);
        let bad = TransmitPlan { eta: 0.0, ..plan };
        assert!(matches!(analytic_mse(&bad, &f, 1.0), Err(Error::InvalidPlan(_))));
    }

    #[test]
    fn analytic_matches_monte_carlo_trials() {
        // 10^5 independent trials of a single-entry aggregation on a random
        // multi-antenna instance.
        let h = rayleigh(4, 3, 77);
        let f = Beamformer::new(vec![c(0.2, -0.4), c(1.0, 0.3), c(-0.6, 0.0)]).unwrap();
        let profiles = uniform_profiles(4);
        let plan = plan_transmissions(&h, &[0, 2, 3], &profiles, &f).unwrap();
        let ups = random_updates(3, 100_000, 4);
        let noise = 0.7;
        let rep = transmit_and_aggregate(&plan, &h, &f, &ups, noise, &[0.0; 3], &mut Stream::from_seed(9))
            .unwrap();
        // squared error per entry is sigma^2 chi^2_1, so its standard error is sqrt(2/N) * mse
        let analytic = analytic_mse(&plan, &f, noise).unwrap();
        let se = analytic * (2.0f64 / 100_000.0).sqrt();
        assert!((rep.empirical_mse - analytic).abs() <= 3.0 * se, "{} vs {analytic}", rep.empirical_mse);
    }

    #[test]
    fn noiseless_exact_at_large_dimension() {
        let h = rayleigh(20, 1, 12);
        let profiles = uniform_profiles(20);
        let f = Beamformer::first_antenna(1);
        let all: Vec<usize> = (0..20).collect();
        let plan = plan_transmissions(&h, &all, &profiles, &f).unwrap();
        let ups = random_updates(20, 100_000, 13);
        let rep = transmit_and_aggregate(&plan, &h, &f, &ups, 0.0, &[0.0; 20], &mut Stream::from_seed(0))
            .unwrap();
        let exact = weighted_sum(&ups, &plan.weights).unwrap();
        let num: f64 = rep.estimate.iter().zip(exact.iter()).map(|(a, b)| (a - b).powi(2)).sum();
        assert!(num.sqrt() / exact.norm() <= 1e-10);
    }

    #[test]
    fn csit_free_plan_on_aligned_channels_is_exact() {
        let scale = c(0.4, -1.3);
        let profiles = vec![
            DeviceProfile { data_size: 1, weight: 1.0, power_budget: 2.0 },
            DeviceProfile { data_size: 3, weight: 3.0, power_budget: 1.0 },
        ];
        let h = CMatrix::from_vec(2, 1, vec![scale * 0.25, scale * 0.75]);
        let (plan, f) = csit_free_plan(&h, &[0, 1], &profiles).unwrap();
        let ups = random_updates(2, 50, 3);
        let rep = transmit_and_aggregate(&plan, &h, &f, &ups, 0.0, &[0.0, 0.0], &mut Stream::from_seed(0))
            .unwrap();
        assert!(rep.empirical_mse < 1e-24);
        assert!(plan.peak_power_ratio(&profiles) <= 1.0 + 1e-12);
    }

    #[test]
    fn csit_free_needs_single_antenna() {
        let h = rayleigh(2, 2, 0);
        assert!(matches!(
            csit_free_plan(&h, &[0, 1], &uniform_profiles(2)),
            Err(Error::Unsupported(_))
        ));
    }

    proptest! {
        #[test]
        fn eta_shrinks_along_nested_chains(seed in 0u64..500, m in 1usize..4) {
            let k = 8;
            let h = rayleigh(k, m, seed);
            let mut s = Stream::from_seed(seed ^ 0xabc);
            let profiles: Vec<_> = (0..k)
                .map(|_| DeviceProfile::new(50 + s.below(100), 0.5 + s.uniform()))
                .collect();
            let f = Beamformer::new((0..m).map(|_| s.complex_normal(1.0)).collect()).unwrap();
            let order = s.permutation(k);
            let mut prev_eta = f64::INFINITY;
            let mut prev_mse = 0.0;
            for n in 1..=k {
                let plan = plan_transmissions(&h, &order[..n], &profiles, &f).unwrap();
                let mse = analytic_mse(&plan, &f, 0.3).unwrap();
                prop_assert!(plan.eta <= prev_eta);
                prop_assert!(mse >= prev_mse);
                prev_eta = plan.eta;
                prev_mse = mse;
            }
        }

        #[test]
        fn common_weight_scaling_leaves_plan_unchanged(seed in 0u64..500, factor in 0.01f64..100.0) {
            let h = rayleigh(5, 2, seed);
            let f = Beamformer::first_antenna(2);
            let profiles: Vec<_> = (0..5).map(|i| DeviceProfile::new(10 * (i + 1), 1.0)).collect();
            let scaled: Vec<_> = profiles
                .iter()
                .map(|p| DeviceProfile { weight: p.weight * factor, ..p.clone() })
                .collect();
            let a = plan_transmissions(&h, &[0, 2, 4], &profiles, &f).unwrap();
            let b = plan_transmissions(&h, &[0, 2, 4], &scaled, &f).unwrap();
            prop_assert!((a.eta - b.eta).abs() <= 1e-12 * a.eta);
            for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
                prop_assert!((x - y).norm() <= 1e-12 * x.norm());
            }
        }

        #[test]
        fn plans_respect_power_budgets(seed in 0u64..1000, n in 1usize..10) {
            let h = rayleigh(10, 2, seed);
            let mut s = Stream::from_seed(seed + 1);
            let profiles: Vec<_> = (0..10).map(|_| DeviceProfile::new(1 + s.below(20), 0.1 + 3.0 * s.uniform())).collect();
            let f = Beamformer::new(vec![s.complex_normal(1.0), s.complex_normal(1.0)]).unwrap();
            let sel = &s.permutation(10)[..n];
            let plan = plan_transmissions(&h, sel, &profiles, &f).unwrap();
            for (&k, b) in plan.selected.iter().zip(&plan.coefficients) {
                prop_assert!(b.norm_sqr() <= profiles[k].power_budget * (1.0 + 1e-9));
            }
        }
    }
}
