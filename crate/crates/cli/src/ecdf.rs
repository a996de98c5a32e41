//! Random sampling of `δ(X, Z)` for empirical distribution plots.
//!
//! Sample `i` draws from `ChaCha8Rng` seeded with `seed` on stream `i`, so
//! every sample is reproducible on its own and the samples can be evaluated
//! in any order.

use std::io::Write;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use ripcert::linalg::DenseMatrix;
use ripcert::lmi::{delta_exact, LmiStatus};
use ripcert::sdp::SolverOptions;
use ripcert::Error;
use serde::{Deserialize, Serialize};

use crate::csv::{fmt_sig, write_table};

const MAX_REDRAWS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EcdfConfig {
    pub n: usize,
    pub r: usize,
    pub num_samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Draw every entry of `Z` instead of its diagonal only.
    #[serde(default)]
    pub general_z: bool,
}

impl EcdfConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.r < 1 || self.n < self.r {
            return Err(Error::Input(format!("need n >= r >= 1, got n = {}, r = {}", self.n, self.r)));
        }
        if self.num_samples < 1 {
            return Err(Error::Input("num_samples must be at least 1".into()));
        }
        if self.n > 30 {
            return Err(Error::Input(format!("n = {} exceeds the supported maximum of 30", self.n)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EcdfRow {
    pub index: usize,
    pub delta: f64,
    pub status: LmiStatus,
    /// Draws rejected because `XX^T = ZZ^T`.
    pub redraws: usize,
}

/// `(X, Z)` for sample `index`: i.i.d. standard normal `X`, and `Z` normal on
/// its diagonal (or everywhere with `general_z`) and zero elsewhere.
pub fn draw_pair(cfg: &EcdfConfig, rng: &mut ChaCha8Rng) -> (DenseMatrix, DenseMatrix) {
    let x = DenseMatrix::from_fn(cfg.n, cfg.r, |_, _| StandardNormal.sample(rng));
    let z = DenseMatrix::from_fn(cfg.n, cfg.r, |i, j| if cfg.general_z || i == j { StandardNormal.sample(rng) } else { 0.0 });
    (x, z)
}

pub fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

pub fn sample_ecdf(cfg: &EcdfConfig, opts: &SolverOptions) -> Result<Vec<EcdfRow>, Error> {
    cfg.validate()?;
    (0..cfg.num_samples).into_par_iter().map(|i| sample_one(cfg, i, opts)).collect()
}

fn sample_one(cfg: &EcdfConfig, index: usize, opts: &SolverOptions) -> Result<EcdfRow, Error> {
    let mut rng = sample_rng(cfg.seed, index);
    for redraws in 0..MAX_REDRAWS {
        let (x, z) = draw_pair(cfg, &mut rng);
        match delta_exact(&x, &z, opts) {
            Ok(sol) => return Ok(EcdfRow { index, delta: sol.delta, status: sol.status, redraws }),
            Err(Error::NotSpurious) => log::warn!("sample {index}: XX^T = ZZ^T, drawing again"),
            Err(e) => return Err(e),
        }
    }
    Err(Error::Degenerate(format!("sample {index}: {MAX_REDRAWS} consecutive draws had XX^T = ZZ^T")))
}

pub fn write_ecdf_csv<W: Write>(out: &mut W, rows: &[EcdfRow]) -> std::io::Result<()> {
    write_table(out, &["sample_index", "delta"], rows.iter().map(|r| vec![r.index.to_string(), fmt_sig(r.delta)]))
}
