//! Initial states: lattice extremes, error-free tilings, files and exactly
//! uniform samples by monotone coupling from the past.
//!
//! The coupled dynamics is a heat bath on heights: pick an interior vertex and
//! a coin, then move the vertex to the highest (coin up) or lowest (coin down)
//! height its six spoke neighbours allow. Both bounds are monotone in the
//! neighbours, so the update preserves the pointwise order.
//!
//! Time before the present is cut into blocks of `block` steps. Block `b`
//! (the one ending `b·block` steps ago) draws from its own generator seeded with
//! `trial_seed(seed, b)`, so longer epochs replay the same randomness.

use std::path::PathBuf;
use std::sync::Arc;

use thiserror::Error;

use crate::domain::{Domain, NONE};
use crate::lattice::SPOKE_POSITIVE;
use crate::rng::{trial_seed, ChainRng};
use crate::tiling::{extremal_tiling, Extreme, Tiling, TilingError};

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("no coalescence after {0} blocks")]
    NoCoalescence(u64),
    #[error(transparent)]
    Tiling(#[from] TilingError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InitMode {
    Max,
    Uniform,
    ErrorFree,
    File(PathBuf),
}

impl std::str::FromStr for InitMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "max" => Ok(InitMode::Max),
            "uniform" => Ok(InitMode::Uniform),
            "errorfree" => Ok(InitMode::ErrorFree),
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(InitMode::File(PathBuf::from(p))),
                _ => Err(format!(
                    "unknown init `{s}` (max|uniform|errorfree|file:PATH)"
                )),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplerConfig {
    pub mode: InitMode,
    pub seed: u64,
    /// Steps per randomness block; 0 picks the number of interior vertices.
    pub cftp_block: u64,
    /// Largest number of blocks tried before giving up.
    pub max_blocks: u64,
    /// Run a fixed-length heat bath from the reference instead of CFTP.
    /// The result is only approximately uniform.
    pub burn_in: Option<u64>,
}

impl SamplerConfig {
    pub fn new(mode: InitMode, seed: u64) -> Self {
        SamplerConfig {
            mode,
            seed,
            cftp_block: 0,
            max_blocks: 1 << 24,
            burn_in: None,
        }
    }
}

/// Heat-bath move on a height vector; returns whether the height changed.
pub fn heat_bath(domain: &Domain, h: &mut [i32], v: usize, up: bool) -> bool {
    let spokes = &domain.region().spokes[v];
    let mut hi = i32::MAX;
    let mut lo = i32::MIN;
    for j in 0..6 {
        let w = spokes[j];
        if w == NONE {
            continue;
        }
        let hw = h[w as usize];
        // along a positive spoke h(w) − h(v) ∈ {1, −2}; along a negative one {−1, 2}
        if SPOKE_POSITIVE[j] {
            hi = hi.min(hw + 2);
            lo = lo.max(hw - 1);
        } else {
            hi = hi.min(hw + 1);
            lo = lo.max(hw - 2);
        }
    }
    let new = if up { hi } else { lo };
    let changed = new != h[v];
    h[v] = new;
    changed
}

fn interior(domain: &Domain) -> Vec<usize> {
    (0..domain.num_vertices())
        .filter(|&v| domain.region().is_interior(v))
        .collect()
}

/// Interior vertices with their spoke neighbours, positive spokes first.
struct Kernel {
    inner: Vec<u32>,
    nbrs: Vec<[u32; 6]>,
}

impl Kernel {
    fn new(domain: &Domain) -> Self {
        let inner = interior(domain);
        let pos: Vec<usize> = (0..6)
            .filter(|&j| SPOKE_POSITIVE[j])
            .chain((0..6).filter(|&j| !SPOKE_POSITIVE[j]))
            .collect();
        let nbrs = inner
            .iter()
            .map(|&v| {
                pos.iter()
                    .map(|&j| domain.region().spokes[v][j])
                    .collect::<Vec<_>>()
                    .try_into()
                    .unwrap()
            })
            .collect();
        Kernel {
            inner: inner.into_iter().map(|v| v as u32).collect(),
            nbrs,
        }
    }

    #[inline]
    fn update(&self, h: &mut [i32], i: usize, up: bool) {
        let n = &self.nbrs[i];
        let v = self.inner[i] as usize;
        h[v] = if up {
            let a = h[n[0] as usize].min(h[n[1] as usize]).min(h[n[2] as usize]) + 2;
            let b = h[n[3] as usize].min(h[n[4] as usize]).min(h[n[5] as usize]) + 1;
            a.min(b)
        } else {
            let a = h[n[0] as usize].max(h[n[1] as usize]).max(h[n[2] as usize]) - 1;
            let b = h[n[3] as usize].max(h[n[4] as usize]).max(h[n[5] as usize]) - 2;
            a.max(b)
        };
    }

    /// Applies block `block` of the stream to each height vector.
    fn run_block(&self, chains: &mut [&mut [i32]], seed: u64, block: u64, len: u64) {
        let mut rng = ChainRng::new(trial_seed(seed, block));
        let m = self.inner.len() as u64;
        for _ in 0..len {
            let i = rng.below(m) as usize;
            let up = rng.coin();
            for h in chains.iter_mut() {
                self.update(h, i, up);
            }
        }
    }
}

/// Statistics of one CFTP draw.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct CftpReport {
    pub blocks: u64,
    pub block_len: u64,
}

/// Exactly uniform tiling by coupling from the past.
pub fn sample_uniform(
    domain: &Arc<Domain>,
    config: &SamplerConfig,
) -> Result<(Tiling, CftpReport), SamplingError> {
    let kernel = Kernel::new(domain);
    if kernel.inner.is_empty() {
        return Ok((
            Tiling::reference(domain),
            CftpReport {
                blocks: 0,
                block_len: 0,
            },
        ));
    }
    let block_len = if config.cftp_block == 0 {
        kernel.inner.len() as u64
    } else {
        config.cftp_block
    };
    let top = extremal_tiling(domain, Extreme::Max);
    let bottom = extremal_tiling(domain, Extreme::Min);
    let mut blocks = 1u64;
    loop {
        let mut hi = top.heights().to_vec();
        let mut lo = bottom.heights().to_vec();
        for b in (0..blocks).rev() {
            kernel.run_block(&mut [&mut hi, &mut lo], config.seed, b, block_len);
        }
        if hi == lo {
            let t = Tiling::from_heights(domain, hi)?;
            return Ok((t, CftpReport { blocks, block_len }));
        }
        if blocks >= config.max_blocks {
            return Err(SamplingError::NoCoalescence(blocks));
        }
        blocks *= 2;
    }
}

/// Heat bath run forward from the reference; approximate.
pub fn sample_burn_in(
    domain: &Arc<Domain>,
    seed: u64,
    steps: u64,
) -> Result<Tiling, SamplingError> {
    let kernel = Kernel::new(domain);
    let mut h = Tiling::reference(domain).heights().to_vec();
    if !kernel.inner.is_empty() {
        kernel.run_block(&mut [&mut h], seed, 0, steps);
    }
    Ok(Tiling::from_heights(domain, h)?)
}

pub fn initial_state(
    domain: &Arc<Domain>,
    config: &SamplerConfig,
) -> Result<Tiling, SamplingError> {
    match &config.mode {
        InitMode::Max => Ok(extremal_tiling(domain, Extreme::Max)),
        InitMode::ErrorFree => Ok(Tiling::reference(domain)),
        InitMode::Uniform => match config.burn_in {
            Some(steps) => sample_burn_in(domain, config.seed, steps),
            None => Ok(sample_uniform(domain, config)?.0),
        },
        InitMode::File(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| SamplingError::Io {
                path: path.clone(),
                source,
            })?;
            let t = Tiling::parse(&text, Some(domain))?;
            if !Arc::ptr_eq(t.domain(), domain) {
                return Err(TilingError::DomainMismatch.into());
            }
            Ok(t)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_hexagon_domain, make_rhombus_domain};
    use crate::tiling::leq;

    #[test]
    fn heat_bath_reaches_both_extremes() {
        let d = Arc::new(make_hexagon_domain(3));
        let mut h = Tiling::reference(&d).heights().to_vec();
        let inner = interior(&d);
        for _ in 0..50 {
            for &v in &inner {
                heat_bath(&d, &mut h, v, true);
            }
        }
        assert_eq!(h, extremal_tiling(&d, Extreme::Max).heights());
        for _ in 0..50 {
            for &v in &inner {
                heat_bath(&d, &mut h, v, false);
            }
        }
        assert_eq!(h, extremal_tiling(&d, Extreme::Min).heights());
    }

    #[test]
    fn heat_bath_keeps_heights_valid() {
        let d = Arc::new(make_rhombus_domain(4));
        let mut h = Tiling::reference(&d).heights().to_vec();
        let inner = interior(&d);
        let mut rng = ChainRng::new(4);
        for _ in 0..5000 {
            let v = inner[rng.below(inner.len() as u64) as usize];
            heat_bath(&d, &mut h, v, rng.coin());
        }
        assert!(Tiling::from_heights(&d, h).is_ok());
    }

    #[test]
    fn kernel_matches_heat_bath() {
        let d = Arc::new(make_hexagon_domain(4));
        let k = Kernel::new(&d);
        let mut a = extremal_tiling(&d, Extreme::Max).heights().to_vec();
        let mut b = a.clone();
        let mut rng = ChainRng::new(8);
        for _ in 0..3000 {
            let i = rng.below(k.inner.len() as u64) as usize;
            let up = rng.coin();
            k.update(&mut a, i, up);
            heat_bath(&d, &mut b, k.inner[i] as usize, up);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn cftp_is_deterministic() {
        let d = Arc::new(make_hexagon_domain(4));
        let c = SamplerConfig::new(InitMode::Uniform, 17);
        let (a, ra) = sample_uniform(&d, &c).unwrap();
        let (b, rb) = sample_uniform(&d, &c).unwrap();
        assert_eq!((a, ra), (b, rb));
        assert!(ra.blocks.is_power_of_two());
    }

    #[test]
    fn samples_lie_between_the_extremes() {
        let d = Arc::new(make_hexagon_domain(3));
        let top = extremal_tiling(&d, Extreme::Max);
        let bot = extremal_tiling(&d, Extreme::Min);
        for seed in 0..20 {
            let t = initial_state(&d, &SamplerConfig::new(InitMode::Uniform, seed)).unwrap();
            assert!(leq(&bot, &t).unwrap() && leq(&t, &top).unwrap());
        }
    }

    #[test]
    fn block_cap_reports_no_coalescence() {
        let d = Arc::new(make_hexagon_domain(6));
        let c = SamplerConfig {
            cftp_block: 1,
            max_blocks: 4,
            ..SamplerConfig::new(InitMode::Uniform, 1)
        };
        assert!(matches!(
            sample_uniform(&d, &c),
            Err(SamplingError::NoCoalescence(4))
        ));
    }

    #[test]
    fn init_modes_dispatch() {
        let d = Arc::new(make_hexagon_domain(2));
        let max = initial_state(&d, &SamplerConfig::new(InitMode::Max, 0)).unwrap();
        assert_eq!(max.volume(), 3);
        let flat = initial_state(&d, &SamplerConfig::new(InitMode::ErrorFree, 0)).unwrap();
        assert_eq!(flat.energy(), 0);
        let burned = SamplerConfig {
            burn_in: Some(1000),
            ..SamplerConfig::new(InitMode::Uniform, 3)
        };
        assert!(initial_state(&d, &burned).is_ok());
        assert_eq!(
            "file:x.tiling".parse::<InitMode>(),
            Ok(InitMode::File("x.tiling".into()))
        );
        assert!("file:".parse::<InitMode>().is_err());
    }
}
