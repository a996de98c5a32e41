//! `(ρ, φ)` grid sweeps of the exact threshold and its closed-form bound.

use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use ripcert::closedform::{canonical_pair, delta_lower, PolarParams};
use ripcert::linalg::DenseMatrix;
use ripcert::lmi::{delta_exact, LmiStatus};
use ripcert::sdp::SolverOptions;
use ripcert::Error;
use serde::{Deserialize, Serialize};

use crate::csv::{opt, write_table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    Exact,
    Lowerbound,
    Both,
}

impl SweepMode {
    fn exact(self) -> bool {
        self != SweepMode::Lowerbound
    }

    fn lower(self) -> bool {
        self != SweepMode::Exact
    }
}

/// Grid over length ratio `ρ` and incidence angle `φ` (degrees).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub rho_min: f64,
    pub rho_max: f64,
    pub rho_steps: usize,
    pub phi_min: f64,
    pub phi_max: f64,
    pub phi_steps: usize,
    #[serde(default = "default_mode")]
    pub mode: SweepMode,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_mode() -> SweepMode {
    SweepMode::Both
}

impl Default for SweepConfig {
    /// The full-resolution 101 x 91 grid.
    fn default() -> Self {
        Self { rho_min: 0.1, rho_max: 2.0, rho_steps: 101, phi_min: 0.0, phi_max: 90.0, phi_steps: 91, mode: SweepMode::Both, output: None }
    }
}

impl SweepConfig {
    /// The 21 x 19 grid used for quick checks.
    pub fn coarse() -> Self {
        Self { rho_steps: 21, phi_steps: 19, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let bad = |msg: String| Err(Error::Input(msg));
        if self.rho_steps < 2 || self.phi_steps < 2 {
            return bad(format!("grid needs at least 2 steps per axis, got {} x {}", self.rho_steps, self.phi_steps));
        }
        if !(self.rho_min.is_finite() && self.rho_max.is_finite()) || self.rho_min <= 0.0 || self.rho_max <= self.rho_min {
            return bad(format!("rho range must satisfy 0 < rho_min < rho_max, got [{}, {}]", self.rho_min, self.rho_max));
        }
        if !(self.phi_min.is_finite() && self.phi_max.is_finite()) || self.phi_min < 0.0 || self.phi_max > 90.0 || self.phi_max <= self.phi_min {
            return bad(format!("phi range must satisfy 0 <= phi_min < phi_max <= 90, got [{}, {}]", self.phi_min, self.phi_max));
        }
        if self.rho_steps.saturating_mul(self.phi_steps) > 1_000_000 {
            return bad("grid has more than 10^6 points".into());
        }
        Ok(())
    }

    /// Grid points `(ρ, φ_deg)` sorted by `ρ`, then `φ`.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let axis = |lo: f64, hi: f64, k: usize| -> Vec<f64> { (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect() };
        let phis = axis(self.phi_min, self.phi_max, self.phi_steps);
        axis(self.rho_min, self.rho_max, self.rho_steps).into_iter().flat_map(|r| phis.iter().map(move |&p| (r, p))).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub rho: f64,
    pub phi_deg: f64,
    pub delta_exact: Option<f64>,
    pub delta_lb: Option<f64>,
    pub status: Option<LmiStatus>,
}

impl SweepRow {
    pub fn gap(&self) -> Option<f64> {
        Some(self.delta_exact? - self.delta_lb?)
    }

    pub fn converged(&self) -> bool {
        self.status.is_none_or(LmiStatus::converged)
    }
}

/// Evaluates the configured grid in parallel; rows come back in grid order.
pub fn sweep_grid(cfg: &SweepConfig, opts: &SolverOptions) -> Result<Vec<SweepRow>, Error> {
    cfg.validate()?;
    sweep_points(&cfg.points(), cfg.mode, opts)
}

pub fn sweep_points(points: &[(f64, f64)], mode: SweepMode, opts: &SolverOptions) -> Result<Vec<SweepRow>, Error> {
    points.par_iter().map(|&(rho, phi_deg)| sweep_point(rho, phi_deg, mode, opts)).collect()
}

fn sweep_point(rho: f64, phi_deg: f64, mode: SweepMode, opts: &SolverOptions) -> Result<SweepRow, Error> {
    let mut row = SweepRow { rho, phi_deg, delta_exact: None, delta_lb: None, status: None };
    let params = match PolarParams::from_degrees(rho, phi_deg) {
        Ok(p) => p,
        Err(Error::NotSpurious) => return Ok(row),
        Err(e) => return Err(e),
    };
    if mode.lower() {
        row.delta_lb = Some(delta_lower(&params).delta_lb);
    }
    if mode.exact() {
        let (x, z) = canonical_pair(rho, params.phi);
        let col = |v: ripcert::linalg::Vector| DenseMatrix::from_column_slice(2, 1, v.as_slice());
        match delta_exact(&col(x), &col(z), opts) {
            Ok(sol) => {
                row.delta_exact = Some(sol.delta);
                row.status = Some(sol.status);
            }
            Err(Error::NotSpurious) => row.delta_lb = None,
            Err(e) => return Err(e),
        }
    }
    Ok(row)
}

pub const SWEEP_HEADER: [&str; 5] = ["rho", "phi_deg", "delta_exact", "delta_lb", "gap"];

pub fn write_sweep_csv<W: Write>(out: &mut W, rows: &[SweepRow]) -> std::io::Result<()> {
    write_table(out, &SWEEP_HEADER, rows.iter().map(|r| vec![opt(Some(r.rho)), opt(Some(r.phi_deg)), opt(r.delta_exact), opt(r.delta_lb), opt(r.gap())]))
}
