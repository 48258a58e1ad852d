use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::rng::Stream;

use super::Dataset;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PartitionMode {
    Iid,
    /// Sort by label, cut into `devices * shards_per_device` equal shards,
    /// deal `shards_per_device` random shards to each device.
    Shard { shards_per_device: usize },
    /// Per-device class proportions drawn from `Dirichlet(alpha)`.
    Dirichlet { alpha: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartitionSpec {
    pub mode: PartitionMode,
    pub samples_per_device: usize,
}

/// Disjoint sample indices for each device.
pub fn partition_indices(
    data: &Dataset,
    devices: usize,
    spec: &PartitionSpec,
    stream: &mut Stream,
) -> Result<Vec<Vec<usize>>> {
    let per = spec.samples_per_device;
    if devices == 0 || per == 0 {
        return Err(Error::Usage("partition needs >= 1 device and >= 1 sample per device".into()));
    }
    let needed = devices * per;
    if needed > data.len() {
        return Err(Error::Usage(format!(
            "{devices} devices x {per} samples needs {needed} samples, dataset has {}",
            data.len()
        )));
    }

    match spec.mode {
        PartitionMode::Iid => {
            let perm = stream.permutation(data.len());
            Ok(perm[..needed].chunks(per).map(<[usize]>::to_vec).collect())
        }
        PartitionMode::Shard { shards_per_device } => {
            if shards_per_device == 0 || !per.is_multiple_of(shards_per_device) {
                return Err(Error::Config(format!(
                    "samples per device ({per}) must be a positive multiple of shards per device ({shards_per_device})"
                )));
            }
            let mut pool = stream.permutation(data.len());
            pool.truncate(needed);
            pool.sort_by_key(|&i| (data.label(i), i));
            let shard_len = per / shards_per_device;
            let shards: Vec<&[usize]> = pool.chunks(shard_len).collect();
            let order = stream.permutation(shards.len());
            Ok(order
                .chunks(shards_per_device)
                .map(|mine| mine.iter().flat_map(|&s| shards[s].iter().copied()).collect())
                .collect())
        }
        PartitionMode::Dirichlet { alpha } => {
            let gamma = Gamma::new(alpha, 1.0)
                .map_err(|_| Error::Config(format!("dirichlet alpha must be > 0, got {alpha}")))?;
            let classes = data.num_classes();
            let mut pools: Vec<Vec<usize>> = vec![Vec::new(); classes];
            for i in stream.permutation(data.len()) {
                pools[data.label(i)].push(i);
            }
            let mut out = Vec::with_capacity(devices);
            for _ in 0..devices {
                let mut props: Vec<f64> = (0..classes).map(|_| gamma.sample(stream)).collect();
                let mut mine = Vec::with_capacity(per);
                while mine.len() < per {
                    for (p, pool) in props.iter_mut().zip(&pools) {
                        if pool.is_empty() {
                            *p = 0.0;
                        }
                    }
                    let total: f64 = props.iter().sum();
                    let class = if total > 0.0 {
                        let mut u = stream.uniform() * total;
                        let mut pick = None;
                        for (c, &p) in props.iter().enumerate() {
                            if p > 0.0 {
                                pick = Some(c);
                                if u < p {
                                    break;
                                }
                                u -= p;
                            }
                        }
                        pick.expect("positive total has a positive entry")
                    } else {
                        // every favoured class is exhausted: fall back to any remaining class
                        let remaining: Vec<usize> = (0..classes).filter(|&c| !pools[c].is_empty()).collect();
                        let c = remaining[stream.below(remaining.len())];
                        props[c] = 1.0;
                        c
                    };
                    mine.push(pools[class].pop().expect("class pool nonempty"));
                }
                out.push(mine);
            }
            Ok(out)
        }
    }
}

/// Split `data` into per-device datasets.
pub fn partition(data: &Dataset, devices: usize, spec: &PartitionSpec, stream: &mut Stream) -> Result<Vec<Dataset>> {
    Ok(partition_indices(data, devices, spec, stream)?
        .iter()
        .map(|idx| data.subset(idx))
        .collect())
}
