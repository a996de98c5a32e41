use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ripcert::closedform::{canonical_pair, delta_lower, PolarParams, Region};
use ripcert::counterexample::generate_example;
use ripcert::io::{bundle_to_json, instance_to_json, parse_factor, parse_instance, SolutionBundle};
use ripcert::linalg::{DenseMatrix, Vector};
use ripcert::lmi::delta_exact;
use ripcert::objective::Scale;
use ripcert::sdp::SolverOptions;
use ripcert_cli::ecdf::write_ecdf_csv;
use ripcert_cli::sweep::write_sweep_csv;
use ripcert_cli::{parse_sweep_config, sample_ecdf, sweep_grid, verify_point, EcdfConfig};

#[derive(Parser)]
#[command(name = "ripcert", version, about = "Exact RIP thresholds for spurious critical points of low-rank matrix recovery")]
struct Cli {
    #[command(flatten)]
    solver: SolverArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SolverArgs {
    /// Interior-point iteration limit.
    #[arg(long, global = true, default_value_t = 200)]
    max_iters: usize,
    /// Duality gap tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    gap_tol: f64,
    /// Primal/dual residual tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    feas_tol: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Exact threshold δ(X, Z) for a polar pair or a pair of factor files.
    Delta {
        #[arg(long, requires = "phi", conflicts_with_all = ["x", "z"])]
        rho: Option<f64>,
        /// Incidence angle in degrees.
        #[arg(long, requires = "rho")]
        phi: Option<f64>,
        #[arg(long, requires = "z")]
        x: Option<PathBuf>,
        #[arg(long, requires = "x")]
        z: Option<PathBuf>,
        /// Write the full solution (H and dual certificate) as JSON.
        #[arg(long)]
        bundle: Option<PathBuf>,
    },
    /// Closed-form rank-1 lower bound.
    Lowerbound {
        #[arg(long)]
        rho: f64,
        /// Incidence angle in degrees.
        #[arg(long)]
        phi: f64,
    },
    /// Emit a 1/2-RIP instance with a spurious second-order critical point.
    Counterexample {
        #[arg(long)]
        n: usize,
        /// Ground truth vector (defaults to the first unit vector).
        #[arg(long)]
        z: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the spurious point to this file.
        #[arg(long)]
        x_out: Option<PathBuf>,
    },
    /// Grid sweep of exact and closed-form thresholds.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random samples of δ(X, Z).
    Ecdf {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Draw all entries of Z, not just its diagonal.
        #[arg(long)]
        general_z: bool,
    },
    /// Classify a point on an instance and certify its threshold.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        x: PathBuf,
    },
}

/// Raised when the solver stops without meeting its tolerances.
#[derive(Debug)]
struct NotConverged(String);

impl std::fmt::Display for NotConverged {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "solver did not converge: {}", self.0)
    }
}

impl std::error::Error for NotConverged {}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<NotConverged>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let opts = SolverOptions { max_iters: cli.solver.max_iters, gap_tol: cli.solver.gap_tol, feas_tol: cli.solver.feas_tol, ..SolverOptions::default() };
    opts.validate()?;
    match cli.command {
        Command::Delta { rho, phi, x, z, bundle } => cmd_delta(rho.zip(phi), x.zip(z), bundle, &opts),
        Command::Lowerbound { rho, phi } => cmd_lowerbound(rho, phi),
        Command::Counterexample { n, z, seed, out, x_out } => cmd_counterexample(n, z, seed, out, x_out),
        Command::Sweep { config, out } => cmd_sweep(&config, out, &opts),
        Command::Ecdf { n, r, samples, seed, out, general_z } => {
            let cfg = EcdfConfig { n, r, num_samples: samples, seed, output: out, general_z };
            cmd_ecdf(&cfg, &opts)
        }
        Command::Verify { instance, x } => cmd_verify(&instance, &x, &opts),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_delta(polar: Option<(f64, f64)>, files: Option<(PathBuf, PathBuf)>, bundle: Option<PathBuf>, opts: &SolverOptions) -> Result<()> {
    let (x, z) = match (polar, files) {
        (Some((rho, phi)), None) => {
            let p = PolarParams::from_degrees(rho, phi)?;
            let (x, z) = canonical_pair(rho, p.phi);
            (column(&x), column(&z))
        }
        (None, Some((xf, zf))) => {
            let x = parse_factor(&read(&xf)?).with_context(|| format!("in {}", xf.display()))?;
            let z = parse_factor(&read(&zf)?).with_context(|| format!("in {}", zf.display()))?;
            (x, z)
        }
        _ => bail!("give either --rho and --phi, or --x and --z"),
    };
    let sol = delta_exact(&x, &z, opts)?;
    println!("delta {:.9}", sol.delta);
    println!("status {}", sol.status);
    println!("gap {:.3e}", sol.gap);
    println!("iterations {}", sol.iterations);
    if let Some(path) = bundle {
        fs::write(&path, bundle_to_json(&SolutionBundle::from(&sol)) + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    if !sol.status.converged() {
        return Err(NotConverged(format!("stopped after {} iterations at gap {:.3e}", sol.iterations, sol.gap)).into());
    }
    Ok(())
}

fn cmd_lowerbound(rho: f64, phi: f64) -> Result<()> {
    let p = PolarParams::from_degrees(rho, phi)?;
    let r = delta_lower(&p);
    println!("alpha {:.9}", p.alpha);
    println!("beta {:.9}", p.beta);
    println!("region {}", if r.region == Region::A { "a" } else { "b" });
    println!("delta_lb {:.9}", r.delta_lb);
    println!("eta_ub {:.9}", r.eta_ub);
    println!("gamma_star {:.9}", r.gamma_star);
    Ok(())
}

fn cmd_counterexample(n: usize, z: Option<PathBuf>, seed: u64, out: Option<PathBuf>, x_out: Option<PathBuf>) -> Result<()> {
    let z = match z {
        Some(path) => {
            let m = parse_factor(&read(&path)?).with_context(|| format!("in {}", path.display()))?;
            if m.ncols() != 1 {
                bail!("z must be a vector, got a {}x{} matrix", m.nrows(), m.ncols());
            }
            m.column(0).into_owned()
        }
        None => {
            let mut e = Vector::zeros(n);
            if n > 0 {
                e[0] = 1.0;
            }
            e
        }
    };
    if z.len() != n {
        bail!("z has length {}, expected n = {n}", z.len());
    }
    let inst = generate_example(&z, seed)?;
    let mut w = output(out.as_deref())?;
    writeln!(w, "{}", instance_to_json(&inst.instance(Scale::One)))?;
    w.flush()?;
    if let Some(path) = x_out {
        fs::write(&path, ripcert::io::factor_to_json(&column(&inst.spurious_x)) + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_sweep(config: &Path, out: Option<PathBuf>, opts: &SolverOptions) -> Result<()> {
    let cfg = parse_sweep_config(&read(config)?).with_context(|| format!("in {}", config.display()))?;
    let rows = sweep_grid(&cfg, opts)?;
    let mut w = output(out.as_deref().or(cfg.output.as_deref()))?;
    write_sweep_csv(&mut w, &rows)?;
    let stalled = rows.iter().filter(|r| !r.converged()).count();
    if stalled > 0 {
        return Err(NotConverged(format!("{stalled} grid points")).into());
    }
    Ok(())
}

fn cmd_ecdf(cfg: &EcdfConfig, opts: &SolverOptions) -> Result<()> {
    let rows = sample_ecdf(cfg, opts)?;
    let mut w = output(cfg.output.as_deref())?;
    write_ecdf_csv(&mut w, &rows)?;
    let stalled = rows.iter().filter(|r| !r.status.converged()).count();
    if stalled > 0 {
        return Err(NotConverged(format!("{stalled} samples")).into());
    }
    Ok(())
}

fn cmd_verify(instance: &Path, x: &Path, opts: &SolverOptions) -> Result<()> {
    let inst = parse_instance(&read(instance)?).with_context(|| format!("in {}", instance.display()))?;
    let x = parse_factor(&read(x)?).with_context(|| format!("in {}", x.display()))?;
    let report = verify_point(&inst, &x, opts)?;
    print!("{report}");
    if !report.converged() {
        return Err(NotConverged("threshold solve".into()).into());
    }
    Ok(())
}

fn column(v: &Vector) -> DenseMatrix {
    DenseMatrix::from_column_slice(v.len(), 1, v.as_slice())
}
