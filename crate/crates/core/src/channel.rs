//! Complex-baseband channel generation and RIS cascade composition.
//!
//! A device `k` reaches server antenna `m` over the direct link `h_d[k,m]`
//! and over `L` reflecting paths through the surface:
//! `h[k,m] = h_d[k,m] + sum_l G[m,l] * theta_l * a[k,l]`.

use num_complex::Complex64;

use crate::error::{check_dim, Error, Result};
use crate::linalg::CMatrix;
use crate::rng::Stream;

const UNIT_MODULUS_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum FadingModel {
    /// Circularly-symmetric complex Gaussian, `E|h|^2 = variance`.
    Rayleigh { variance: f64 },
    /// Unit-modulus line-of-sight term with a uniformly random phase plus a
    /// scattered Rayleigh term, power split `k : 1`, total power `variance`.
    Rician { k_factor: f64, variance: f64 },
    /// Deterministic values. One value is broadcast to every entry;
    /// otherwise the length must match the number of entries of the link(s)
    /// the model is applied to.
    Fixed(Vec<Complex64>),
}

impl FadingModel {
    fn validate(&self, what: &str) -> Result<()> {
        match *self {
            FadingModel::Rayleigh { variance } => positive(variance, &format!("{what} variance")),
            FadingModel::Rician { k_factor, variance } => {
                positive(variance, &format!("{what} variance"))?;
                if !(k_factor >= 0.0 && k_factor.is_finite()) {
                    return Err(Error::Config(format!(
                        "{what} rician k_factor must be >= 0, got {k_factor}"
                    )));
                }
                Ok(())
            }
            FadingModel::Fixed(ref values) => {
                if values.is_empty() {
                    return Err(Error::Config(format!("{what} fixed model has no values")));
                }
                if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                    return Err(Error::Config(format!("{what} fixed values must be finite")));
                }
                Ok(())
            }
        }
    }

    fn draw(&self, stream: &mut Stream) -> Complex64 {
        match *self {
            FadingModel::Rayleigh { variance } => stream.complex_normal(variance),
            FadingModel::Rician { k_factor, variance } => {
                let los = stream.unit_phase() * (k_factor / (k_factor + 1.0)).sqrt();
                let nlos = stream.complex_normal(1.0 / (k_factor + 1.0));
                (los + nlos) * variance.sqrt()
            }
            FadingModel::Fixed(_) => unreachable!("fixed values are not drawn"),
        }
    }

    fn fill(&self, n: usize, offset: usize, stream: &mut Stream, what: &str) -> Result<Vec<Complex64>> {
        match self {
            FadingModel::Fixed(values) if values.len() == 1 => Ok(vec![values[0]; n]),
            FadingModel::Fixed(values) => {
                if values.len() < offset + n {
                    return Err(Error::Config(format!(
                        "{what} fixed model needs {} values, got {}",
                        offset + n,
                        values.len()
                    )));
                }
                Ok(values[offset..offset + n].to_vec())
            }
            model => Ok((0..n).map(|_| model.draw(stream)).collect()),
        }
    }
}

fn positive(x: f64, what: &str) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} must be > 0, got {x}")))
    }
}

/// Log-distance path loss: amplitude `sqrt(reference_gain) * (d / d0)^(-exponent / 2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathLoss {
    pub exponent: f64,
    pub reference_distance: f64,
    pub reference_gain: f64,
}

impl PathLoss {
    pub fn amplitude(&self, distance: f64) -> f64 {
        self.reference_gain.sqrt() * (distance / self.reference_distance).powf(-self.exponent / 2.0)
    }
}

/// Node positions in meters.
#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    pub server: [f64; 3],
    pub ris: [f64; 3],
    pub devices: Vec<[f64; 3]>,
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FadingSpec {
    pub direct: FadingModel,
    pub ris_link: FadingModel,
    pub path_loss: Option<PathLoss>,
    pub geometry: Option<Geometry>,
}

impl Default for FadingSpec {
    fn default() -> Self {
        Self {
            direct: FadingModel::Rayleigh { variance: 1.0 },
            ris_link: FadingModel::Rician {
                k_factor: 10.0,
                variance: 1.0,
            },
            path_loss: None,
            geometry: None,
        }
    }
}

impl FadingSpec {
    pub fn validate(&self, devices: usize) -> Result<()> {
        self.direct.validate("direct link")?;
        self.ris_link.validate("ris link")?;
        if let Some(pl) = &self.path_loss {
            if !(pl.exponent >= 0.0 && pl.exponent.is_finite()) {
                return Err(Error::Config(format!(
                    "path loss exponent must be >= 0, got {}",
                    pl.exponent
                )));
            }
            positive(pl.reference_distance, "path loss reference distance")?;
            positive(pl.reference_gain, "path loss reference gain")?;
            let geo = self
                .geometry
                .as_ref()
                .ok_or_else(|| Error::Config("path loss requires a geometry".into()))?;
            if geo.devices.len() != devices {
                return Err(Error::Config(format!(
                    "geometry lists {} device positions for {devices} devices",
                    geo.devices.len()
                )));
            }
            let mut dists = vec![distance(geo.server, geo.ris)];
            for &d in &geo.devices {
                dists.push(distance(d, geo.server));
                dists.push(distance(d, geo.ris));
            }
            if dists.iter().any(|&d| !(d > 0.0)) {
                return Err(Error::Config("geometry has coincident nodes".into()));
            }
        }
        Ok(())
    }
}

/// All channel coefficients of one coherence block.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    /// K × M, device to server antenna.
    pub direct: CMatrix,
    /// K × L, device to RIS element.
    pub device_to_ris: CMatrix,
    /// M × L, RIS element to server antenna.
    pub ris_to_server: CMatrix,
    pub block_index: usize,
}

impl ChannelRealization {
    pub fn new(direct: CMatrix, device_to_ris: CMatrix, ris_to_server: CMatrix) -> Result<Self> {
        let (k, m, l) = (direct.rows(), direct.cols(), device_to_ris.cols());
        check_dim("device_to_ris rows", k, device_to_ris.rows())?;
        check_dim("ris_to_server rows", m, ris_to_server.rows())?;
        check_dim("ris_to_server cols", l, ris_to_server.cols())?;
        Ok(Self {
            direct,
            device_to_ris,
            ris_to_server,
            block_index: 0,
        })
    }

    pub fn devices(&self) -> usize {
        self.direct.rows()
    }

    pub fn antennas(&self) -> usize {
        self.direct.cols()
    }

    pub fn elements(&self) -> usize {
        self.device_to_ris.cols()
    }

    /// Reflected coefficient `G[m,l] * a[k,l]` for device `k`, antenna `m`, element `l`.
    pub fn cascade(&self, k: usize, m: usize, l: usize) -> Complex64 {
        self.ris_to_server.get(m, l) * self.device_to_ris.get(k, l)
    }

    pub fn conj(&self) -> Self {
        Self {
            direct: self.direct.conj(),
            device_to_ris: self.device_to_ris.conj(),
            ris_to_server: self.ris_to_server.conj(),
            block_index: self.block_index,
        }
    }
}

/// Unit-modulus RIS phase-shift vector.
#[derive(Clone, Debug, PartialEq)]
pub struct RisConfig {
    phases: Vec<Complex64>,
}

impl RisConfig {
    pub fn new(phases: Vec<Complex64>) -> Result<Self> {
        if let Some((l, z)) = phases
            .iter()
            .enumerate()
            .find(|(_, z)| !((z.norm() - 1.0).abs() <= UNIT_MODULUS_TOL))
        {
            return Err(Error::Usage(format!(
                "RIS element {l} has modulus {} (must be 1)",
                z.norm()
            )));
        }
        Ok(Self { phases })
    }

    pub fn from_angles(angles: &[f64]) -> Self {
        Self {
            phases: angles.iter().map(|&a| Complex64::from_polar(1.0, a)).collect(),
        }
    }

    pub fn all_ones(len: usize) -> Self {
        Self {
            phases: vec![Complex64::new(1.0, 0.0); len],
        }
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn phases(&self) -> &[Complex64] {
        &self.phases
    }

    pub fn angles(&self) -> Vec<f64> {
        self.phases.iter().map(|z| z.arg()).collect()
    }

    pub fn conj(&self) -> Self {
        Self {
            phases: self.phases.iter().map(|z| z.conj()).collect(),
        }
    }

    pub(crate) fn set_unchecked(&mut self, l: usize, phase: Complex64) {
        self.phases[l] = phase;
    }
}

/// Draw one channel realization. Entries are drawn in the order direct
/// (row-major), device-to-RIS, RIS-to-server.
pub fn sample_channels(
    spec: &FadingSpec,
    devices: usize,
    antennas: usize,
    elements: usize,
    stream: &mut Stream,
) -> Result<ChannelRealization> {
    if devices == 0 || antennas == 0 {
        return Err(Error::Config(format!(
            "need at least one device and one antenna (got K={devices}, M={antennas})"
        )));
    }
    spec.validate(devices)?;
    let (k, m, l) = (devices, antennas, elements);

    let mut direct = CMatrix::from_vec(k, m, spec.direct.fill(k * m, 0, stream, "direct link")?);
    let mut to_ris = CMatrix::from_vec(k, l, spec.ris_link.fill(k * l, 0, stream, "ris link")?);
    let mut from_ris =
        CMatrix::from_vec(m, l, spec.ris_link.fill(m * l, k * l, stream, "ris link")?);

    if let (Some(pl), Some(geo)) = (&spec.path_loss, &spec.geometry) {
        let ris_server = pl.amplitude(distance(geo.ris, geo.server));
        for z in from_ris.as_mut_slice() {
            *z *= ris_server;
        }
        for (dev, &pos) in geo.devices.iter().enumerate() {
            let direct_amp = pl.amplitude(distance(pos, geo.server));
            let ris_amp = pl.amplitude(distance(pos, geo.ris));
            for j in 0..m {
                let v = direct.get(dev, j) * direct_amp;
                direct.set(dev, j, v);
            }
            for j in 0..l {
                let v = to_ris.get(dev, j) * ris_amp;
                to_ris.set(dev, j, v);
            }
        }
    }

    ChannelRealization::new(direct, to_ris, from_ris)
}

/// Effective K × M channel `h_d + G diag(theta) a_k` for the given phases.
pub fn effective_channel(real: &ChannelRealization, theta: &RisConfig) -> Result<CMatrix> {
    check_dim("RIS phase vector", real.elements(), theta.len())?;
    let (k, m, l) = (real.devices(), real.antennas(), real.elements());
    let mut out = real.direct.clone();
    for dev in 0..k {
        let a = real.device_to_ris.row(dev);
        for ant in 0..m {
            let g = real.ris_to_server.row(ant);
            let mut acc = out.get(dev, ant);
            for e in 0..l {
                acc += g[e] * theta.phases[e] * a[e];
            }
            out.set(dev, ant, acc);
        }
    }
    Ok(out)
}

/// Squared Euclidean norm `sum_m |h_m|^2`.
pub fn channel_gain(h: &[Complex64]) -> f64 {
    h.iter().map(|z| z.norm_sqr()).sum()
}
