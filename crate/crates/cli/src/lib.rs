//! Experiment harness behind the `ripcert` binary: grid sweeps, random
//! sampling and point verification, all producing deterministic output.

pub mod csv;
pub mod ecdf;
pub mod sweep;
pub mod verify;

pub use ecdf::{sample_ecdf, EcdfConfig, EcdfRow};
pub use sweep::{sweep_grid, SweepConfig, SweepMode, SweepRow};
pub use verify::{verify_point, PointKind, VerifyReport};

pub fn parse_sweep_config(text: &str) -> ripcert::Result<SweepConfig> {
    let cfg: SweepConfig = ripcert::io::parse_json(text)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_ecdf_config(text: &str) -> ripcert::Result<EcdfConfig> {
    let cfg: EcdfConfig = ripcert::io::parse_json(text)?;
    cfg.validate()?;
    Ok(cfg)
}
