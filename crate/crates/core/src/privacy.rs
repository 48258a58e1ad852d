//! Artificial-noise privacy mechanism and a channel-dependent leakage proxy.
//!
//! The proxy has the Gaussian-mechanism shape: at receive antenna `m` the
//! update of device `k` arrives with amplitude `|h_km b_k|`, so its
//! sensitivity is that amplitude times the clipping bound, and it is masked
//! by receiver noise plus every device's scaled artificial noise:
//!
//! ```text
//! eps_km   = |h_km b_k| * clip * sqrt(2 ln(1.25 / delta)) / sigma_m
//! sigma_m^2 = noise^2 + sum_j |h_jm b_j|^2 s_j^2
//! ```
//!
//! It is a single-round score, not an accounted DP guarantee.

use crate::aircomp::TransmitPlan;
use crate::error::{check_dim, Error, Result};
use crate::linalg::CMatrix;
use crate::rng::Stream;
use crate::vector::ModelVector;

#[derive(Clone, Debug, PartialEq)]
pub struct PrivacySpec {
    /// Standard deviation of the artificial noise added by each device.
    pub artificial_noise_std: Vec<f64>,
    /// L2 clipping bound applied to every update.
    pub clip_norm: f64,
    pub delta: f64,
}

impl PrivacySpec {
    /// Same artificial noise level on all `devices`.
    pub fn uniform(devices: usize, artificial_noise_std: f64, clip_norm: f64, delta: f64) -> Self {
        Self {
            artificial_noise_std: vec![artificial_noise_std; devices],
            clip_norm,
            delta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.clip_norm > 0.0 && self.clip_norm.is_finite()) {
            return Err(Error::Config(format!("clip_norm must be positive, got {}", self.clip_norm)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if let Some(s) = self.artificial_noise_std.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return Err(Error::Config(format!("artificial noise std must be finite and >= 0, got {s}")));
        }
        Ok(())
    }

    fn gaussian_factor(&self) -> f64 {
        (2.0 * (1.25 / self.delta).ln()).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrivacyReport {
    /// `K x M` proxy values, row-major. Unselected devices score zero.
    pub epsilon_per_pair: Vec<f64>,
    pub devices: usize,
    pub antennas: usize,
    /// Worst pair. `f64::INFINITY` when some signal meets no noise at all.
    pub system_epsilon: f64,
}

impl PrivacyReport {
    pub fn epsilon(&self, k: usize, m: usize) -> f64 {
        self.epsilon_per_pair[k * self.antennas + m]
    }
}

/// Scale `update` down to L2 norm at most `clip_norm`.
pub fn clip_update(update: &ModelVector, clip_norm: f64) -> ModelVector {
    let n = update.norm();
    if n <= clip_norm {
        update.clone()
    } else {
        update.scaled(clip_norm / n)
    }
}

/// Clip, then add i.i.d. Gaussian noise of the given device's std per entry.
pub fn apply_mechanism(update: &ModelVector, spec: &PrivacySpec, device: usize, stream: &mut Stream) -> Result<ModelVector> {
    spec.validate()?;
    let sigma = *spec
        .artificial_noise_std
        .get(device)
        .ok_or_else(|| Error::Usage(format!("no artificial noise level for device {device}")))?;
    let mut out = clip_update(update, spec.clip_norm);
    if sigma > 0.0 {
        for x in out.iter_mut() {
            *x += sigma * stream.standard_normal();
        }
    }
    Ok(out)
}

pub fn privacy_proxy(h_eff: &CMatrix, plan: &TransmitPlan, spec: &PrivacySpec, noise_std: f64) -> Result<PrivacyReport> {
    spec.validate()?;
    let (devices, antennas) = (h_eff.rows(), h_eff.cols());
    check_dim("artificial noise levels", devices, spec.artificial_noise_std.len())?;
    check_dim("plan coefficients", plan.selected.len(), plan.coefficients.len())?;
    if let Some(&k) = plan.selected.iter().find(|&&k| k >= devices) {
        return Err(Error::InvalidPlan(format!("planned device {k} not in channel matrix")));
    }

    // received amplitude |h_km b_k| of every selected device at every antenna
    let amplitude = |i: usize, m: usize| (h_eff.get(plan.selected[i], m) * plan.coefficients[i]).norm();
    let factor = spec.clip_norm * spec.gaussian_factor();
    let mut eps = vec![0.0; devices * antennas];
    for m in 0..antennas {
        let var = noise_std * noise_std
            + (0..plan.selected.len())
                .map(|i| {
                    let s = spec.artificial_noise_std[plan.selected[i]];
                    amplitude(i, m).powi(2) * s * s
                })
                .sum::<f64>();
        let sigma = var.sqrt();
        for i in 0..plan.selected.len() {
            let a = amplitude(i, m);
            eps[plan.selected[i] * antennas + m] = if a == 0.0 {
                0.0
            } else if sigma == 0.0 {
                f64::INFINITY
            } else {
                a * factor / sigma
            };
        }
    }
    let system_epsilon = eps.iter().copied().fold(0.0, f64::max);
    Ok(PrivacyReport {
        epsilon_per_pair: eps,
        devices,
        antennas,
        system_epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aircomp::{plan_transmissions, Beamformer, DeviceProfile};
    use crate::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn plan(selected: Vec<usize>, coefficients: Vec<Complex64>) -> TransmitPlan {
        TransmitPlan {
            weights: vec![1.0; selected.len()],
            selected,
            coefficients,
            eta: 1.0,
        }
    }

    fn random_instance(seed: u64, k: usize, m: usize) -> (CMatrix, TransmitPlan) {
        let mut s = Stream::from_seed(seed);
        let h = CMatrix::from_fn(k, m, |_, _| s.complex_normal(1.0));
        let profiles: Vec<_> = (0..k).map(|_| DeviceProfile::new(10, 1.0)).collect();
        let p = plan_transmissions(&h, &(0..k).collect::<Vec<_>>(), &profiles, &Beamformer::first_antenna(m)).unwrap();
        (h, p)
    }

    #[test]
    fn clip_examples() {
        let v = ModelVector(vec![0.3, 0.4]);
        assert_eq!(clip_update(&v, 1.0), v);
        let w = ModelVector(vec![3.0, 4.0]);
        assert_eq!(clip_update(&w, 2.5), ModelVector(vec![1.5, 2.0]));
        let mut s = Stream::from_seed(1);
        for _ in 0..100 {
            let r = ModelVector((0..7).map(|_| 3.0 * s.standard_normal()).collect());
            assert!(clip_update(&r, 1.0).norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn single_pair_value() {
        let h = CMatrix::from_vec(1, 1, vec![c(0.6, 0.8)]);
        let p = plan(vec![0], vec![c(1.0, 0.0)]);
        let spec = PrivacySpec::uniform(1, 0.0, 1.0, 0.05);
        let r = privacy_proxy(&h, &p, &spec, 1.0).unwrap();
        let expected = (2.0 * 25f64.ln()).sqrt();
        assert!((r.system_epsilon - expected).abs() < 1e-12);
        assert!((expected - 2.537).abs() < 1e-3);
    }

    #[test]
    fn no_noise_at_all_is_infinite() {
        let h = CMatrix::from_vec(1, 1, vec![c(1.0, 0.0)]);
        let p = plan(vec![0], vec![c(1.0, 0.0)]);
        let r = privacy_proxy(&h, &p, &PrivacySpec::uniform(1, 0.0, 1.0, 0.1), 0.0).unwrap();
        assert_eq!(r.system_epsilon, f64::INFINITY);
    }

    #[test]
    fn large_artificial_noise_drives_epsilon_to_zero() {
        let (h, p) = random_instance(3, 5, 2);
        let mut last = f64::INFINITY;
        for s in [1.0, 10.0, 100.0, 1e4, 1e6] {
            let r = privacy_proxy(&h, &p, &PrivacySpec::uniform(5, s, 1.0, 1e-5), 0.1).unwrap();
            assert!(r.system_epsilon < last);
            last = r.system_epsilon;
        }
        assert!(last < 1e-4, "{last}");
    }

    #[test]
    fn epsilon_strictly_decreasing_in_each_device_noise() {
        for seed in 0..20 {
            let (h, p) = random_instance(seed, 4, 2);
            for dev in 0..4 {
                let mut last = f64::INFINITY;
                for s in [0.0, 0.01, 0.05, 0.1, 0.5] {
                    let mut spec = PrivacySpec::uniform(4, 0.02, 1.0, 1e-3);
                    spec.artificial_noise_std[dev] = s;
                    let e = privacy_proxy(&h, &p, &spec, 0.05).unwrap().system_epsilon;
                    assert!(e < last, "seed {seed} device {dev}: {e} !< {last}");
                    last = e;
                }
            }
        }
    }

    #[test]
    fn doubling_a_channel_entry_increases_its_epsilon() {
        // plan held fixed so that only |h_km| changes
        for seed in 0..50 {
            let (h, p) = random_instance(seed, 3, 2);
            let spec = PrivacySpec::uniform(3, 0.3, 1.0, 1e-5);
            let mut s = Stream::from_seed(1000 + seed);
            let k = s.below(3);
            let m = s.below(2);
            let before = privacy_proxy(&h, &p, &spec, 0.2).unwrap().epsilon(k, m);
            let mut h2 = h.clone();
            h2.set(k, m, h.get(k, m) * 2.0);
            let after = privacy_proxy(&h2, &p, &spec, 0.2).unwrap().epsilon(k, m);
            assert!(after > before, "seed {seed}: {after} <= {before}");
        }
    }

    #[test]
    fn report_depends_only_on_effective_channel() {
        let (h, p) = random_instance(7, 4, 1);
        let spec = PrivacySpec::uniform(4, 0.1, 2.0, 1e-3);
        let a = privacy_proxy(&h, &p, &spec, 0.1).unwrap();
        let b = privacy_proxy(&h.clone(), &p, &spec, 0.1).unwrap();
        assert_eq!(a, b);
        assert!(a.epsilon_per_pair.iter().all(|&e| e >= 0.0));
        assert_eq!(a.system_epsilon, a.epsilon_per_pair.iter().copied().fold(0.0, f64::max));
    }

    #[test]
    fn unselected_devices_do_not_leak() {
        let h = CMatrix::from_vec(2, 1, vec![c(1.0, 0.0), c(5.0, 0.0)]);
        let p = plan(vec![0], vec![c(1.0, 0.0)]);
        let r = privacy_proxy(&h, &p, &PrivacySpec::uniform(2, 0.1, 1.0, 0.1), 1.0).unwrap();
        assert_eq!(r.epsilon(1, 0), 0.0);
        assert!(r.epsilon(0, 0) > 0.0);
    }

    #[test]
    fn mechanism_without_noise_only_clips() {
        let v = ModelVector(vec![3.0, 4.0]);
        let spec = PrivacySpec::uniform(1, 0.0, 1.0, 0.1);
        let out = apply_mechanism(&v, &spec, 0, &mut Stream::from_seed(0)).unwrap();
        assert_eq!(out, clip_update(&v, 1.0));
    }

    #[test]
    fn mechanism_mean_matches_clipped_vector() {
        let v = ModelVector(vec![0.2, -0.5, 0.1]);
        let sigma = 0.7;
        let spec = PrivacySpec::uniform(1, sigma, 10.0, 0.1);
        let n = 100_000;
        let mut s = Stream::from_seed(5);
        let mut mean = [0.0; 3];
        for _ in 0..n {
            let out = apply_mechanism(&v, &spec, 0, &mut s).unwrap();
            for (m, x) in mean.iter_mut().zip(out.iter()) {
                *m += x / n as f64;
            }
        }
        let se = sigma / (n as f64).sqrt();
        for (m, x) in mean.iter().zip(v.iter()) {
            assert!((m - x).abs() < 3.0 * se, "{m} vs {x}");
        }
    }

    #[test]
    fn mechanism_is_deterministic() {
        let v = ModelVector(vec![1.0; 10]);
        let spec = PrivacySpec::uniform(2, 0.5, 2.0, 0.1);
        let a = apply_mechanism(&v, &spec, 1, &mut Stream::from_seed(9)).unwrap();
        let b = apply_mechanism(&v, &spec, 1, &mut Stream::from_seed(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_spec_rejected() {
        assert!(PrivacySpec::uniform(1, 0.1, 0.0, 0.1).validate().is_err());
        assert!(PrivacySpec::uniform(1, 0.1, 1.0, 1.0).validate().is_err());
        assert!(PrivacySpec::uniform(1, -0.1, 1.0, 0.5).validate().is_err());
    }
}
