//! Dense primal-dual interior-point method for small semidefinite programs
//! in inequality form:
//!
//! ```text
//! minimize    c^T y
//! subject to  S_b = F_{0,b} + Σ_i y_i F_{i,b} ⪰ 0      for every block b
//! ```
//!
//! with dual
//!
//! ```text
//! maximize    −Σ_b <F_{0,b}, Z_b>
//! subject to  Σ_b <F_{i,b}, Z_b> = c_i,   Z_b ⪰ 0.
//! ```
//!
//! Iterates are infeasible-start; directions use Nesterov-Todd scaling with a
//! Mehrotra predictor-corrector step.

use std::fmt;
use std::io;

use nalgebra::Cholesky;

use crate::error::{Error, Result};
use crate::linalg::{self, frob_dot, sym, DenseMatrix, Vector};

const STEP_FRACTION: f64 = 0.98;
const REFINE_STEPS: usize = 3;

/// One PSD block `F_0 + Σ y_i F_i ⪰ 0`.
#[derive(Debug, Clone)]
pub struct Block {
    pub f0: DenseMatrix,
    pub f: Vec<DenseMatrix>,
}

impl Block {
    pub fn size(&self) -> usize {
        self.f0.nrows()
    }
}

#[derive(Debug, Clone)]
pub struct ConeProgram {
    c: Vector,
    blocks: Vec<Block>,
    // Row i holds vec(F_{i,b})^T.
    stacked: Vec<DenseMatrix>,
    initial_point: Option<Vector>,
}

impl ConeProgram {
    pub fn new(c: Vector, blocks: Vec<Block>) -> Result<Self> {
        let m = c.len();
        if m == 0 {
            return Err(Error::InvalidProgram("no variables".into()));
        }
        if blocks.is_empty() {
            return Err(Error::InvalidProgram("no PSD blocks".into()));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProgram("objective has non-finite entries".into()));
        }
        let mut stacked = Vec::with_capacity(blocks.len());
        for (b, block) in blocks.iter().enumerate() {
            let k = block.size();
            if k == 0 || !block.f0.is_square() {
                return Err(Error::InvalidProgram(format!("block {b} is empty or not square")));
            }
            if block.f.len() != m {
                return Err(Error::InvalidProgram(format!("block {b} has {} coefficient matrices, expected {m}", block.f.len())));
            }
            let mut a = DenseMatrix::zeros(m, k * k);
            for (i, fi) in std::iter::once(&block.f0).chain(&block.f).enumerate() {
                if fi.shape() != (k, k) {
                    return Err(Error::InvalidProgram(format!("block {b} matrix {i} has shape {:?}, expected ({k}, {k})", fi.shape())));
                }
                if !linalg::is_finite(fi) {
                    return Err(Error::InvalidProgram(format!("block {b} matrix {i} has non-finite entries")));
                }
                let asym = (fi - fi.transpose()).amax();
                if asym > 1e-12 * (1.0 + fi.amax()) {
                    return Err(Error::InvalidProgram(format!("block {b} matrix {i} is not symmetric")));
                }
                if i > 0 {
                    a.row_mut(i - 1).copy_from_slice(fi.as_slice());
                }
            }
            stacked.push(a);
        }
        Ok(Self { c, blocks, stacked, initial_point: None })
    }

    /// Starting `y` for the solver. Need not be feasible.
    pub fn with_initial_point(mut self, y0: Vector) -> Result<Self> {
        if y0.len() != self.num_vars() {
            return Err(Error::dim(format!("initial point has length {}, expected {}", y0.len(), self.num_vars())));
        }
        self.initial_point = Some(y0);
        Ok(self)
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn objective(&self) -> &Vector {
        &self.c
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Block::size).collect()
    }

    /// `Σ_i y_i F_{i,b}` for block `b`.
    fn linear_part(&self, b: usize, y: &Vector) -> DenseMatrix {
        let k = self.blocks[b].size();
        let v = self.stacked[b].tr_mul(y);
        DenseMatrix::from_column_slice(k, k, v.as_slice())
    }

    /// Block values `F_b(y)`.
    pub fn evaluate(&self, y: &Vector) -> Vec<DenseMatrix> {
        (0..self.blocks.len()).map(|b| &self.blocks[b].f0 + self.linear_part(b, y)).collect()
    }

    /// `A(Z)_i = Σ_b <F_{i,b}, Z_b>`.
    pub fn adjoint(&self, z: &[DenseMatrix]) -> Vector {
        let mut out = Vector::zeros(self.num_vars());
        for (a, zb) in self.stacked.iter().zip(z) {
            out += a * Vector::from_column_slice(zb.as_slice());
        }
        out
    }

    pub fn primal_objective(&self, y: &Vector) -> f64 {
        self.c.dot(y)
    }

    pub fn dual_objective(&self, z: &[DenseMatrix]) -> f64 {
        -self.blocks.iter().zip(z).map(|(b, zb)| frob_dot(&b.f0, zb)).sum::<f64>()
    }
}

/// Absolute termination thresholds: the gap `max(Σ<S,Z>, |pobj − dobj|)`
/// must fall below `gap_tol`, and both residual norms below `feas_tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iters: usize,
    /// Starting value of δ used by the LMI builders when they seed `y`.
    pub initial_delta: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { gap_tol: 1e-9, feas_tol: 1e-9, max_iters: 200, initial_delta: 0.999 }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.gap_tol > 0.0 && self.feas_tol > 0.0) {
            return Err(Error::input("solver tolerances must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::input("max_iters must be at least 1"));
        }
        if !(self.initial_delta.is_finite()) {
            return Err(Error::input("initial_delta must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    MaxIterations,
    /// The Newton system became numerically singular or no positive step
    /// could be taken.
    StepFailure,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::MaxIterations => "max-iterations",
            SolveStatus::StepFailure => "step-failure",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ConeSolution {
    pub y: Vector,
    pub slacks: Vec<DenseMatrix>,
    pub duals: Vec<DenseMatrix>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `max(Σ <S_b, Z_b>, |primal − dual|)`.
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

/// Per-iteration progress, printed one line per record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub complementarity: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub step_primal: f64,
    pub step_dual: f64,
    pub sigma: f64,
}

impl fmt::Display for IterationRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:4} pobj {:+.10e} dobj {:+.10e} gap {:.3e} pres {:.3e} dres {:.3e} ap {:.3} ad {:.3} sigma {:.2e}",
            self.iteration,
            self.primal_objective,
            self.dual_objective,
            self.complementarity,
            self.primal_residual,
            self.dual_residual,
            self.step_primal,
            self.step_dual,
            self.sigma
        )
    }
}

pub fn solve(prog: &ConeProgram, opts: &SolverOptions) -> Result<ConeSolution> {
    solve_observed(prog, opts, |_| {})
}

/// Like [`solve`], writing one text line per iteration to `sink`.
pub fn solve_with_log(prog: &ConeProgram, opts: &SolverOptions, sink: &mut dyn io::Write) -> Result<ConeSolution> {
    solve_observed(prog, opts, |rec| {
        // Logging is best effort; a failing sink must not abort the solve.
        let _ = writeln!(sink, "{rec}");
    })
}

/// Nesterov-Todd scaling of one block: `K^T S K = K^{-1} Z K^{-T} = diag(λ)`.
struct Scaling {
    k: DenseMatrix,
    w_inv: DenseMatrix,
    lambda: Vector,
}

fn cholesky_factor(m: &DenseMatrix) -> Option<DenseMatrix> {
    Cholesky::new(sym(m)).map(|c| c.l())
}

fn nt_scaling(s: &DenseMatrix, z: &DenseMatrix) -> Option<Scaling> {
    let ls = cholesky_factor(s)?;
    let lz = cholesky_factor(z)?;
    let svd = linalg::thin_svd(&(lz.transpose() * &ls));
    let u = svd.u;
    let lambda = svd.s;
    if lambda.iter().any(|&l| l <= 0.0 || !l.is_finite()) {
        return None;
    }
    let mut k = lz * u;
    for (j, &l) in lambda.iter().enumerate() {
        k.column_mut(j).scale_mut(1.0 / l.sqrt());
    }
    let w_inv = &k * k.transpose();
    Some(Scaling { k, w_inv, lambda })
}

/// Solve `Λ T + T Λ = 2R`.
fn lyap_diag(lambda: &Vector, r: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(r.nrows(), r.ncols(), |i, j| 2.0 * r[(i, j)] / (lambda[i] + lambda[j]))
}

/// Largest `α` with `diag(λ) + α X ⪰ 0` (infinite if `X ⪰ 0`).
fn max_step(lambda: &Vector, x: &DenseMatrix) -> f64 {
    let scaled = DenseMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] / (lambda[i] * lambda[j]).sqrt());
    let lo = linalg::min_eig(&scaled);
    if lo < 0.0 {
        -1.0 / lo
    } else {
        f64::INFINITY
    }
}

struct Direction {
    dy: Vector,
    ds: Vec<DenseMatrix>,
    dz: Vec<DenseMatrix>,
    // Scaled directions, used for step lengths and the corrector term.
    s_hat: Vec<DenseMatrix>,
    z_hat: Vec<DenseMatrix>,
}

struct Iterate {
    y: Vector,
    s: Vec<DenseMatrix>,
    z: Vec<DenseMatrix>,
}

/// Factorization of the Schur matrix `M = C^T C`. The triangular factor of
/// a QR of `C` avoids squaring the condition number; a shifted Cholesky of
/// the formed product covers rank-deficient `C`.
enum SchurFactor {
    Qr(DenseMatrix),
    Chol(Cholesky<f64, nalgebra::Dyn>),
}

impl SchurFactor {
    fn solve(&self, b: &Vector) -> Vector {
        match self {
            SchurFactor::Qr(r) => {
                let u = r.tr_solve_upper_triangular(b).unwrap_or_else(|| Vector::from_element(b.len(), f64::NAN));
                r.solve_upper_triangular(&u).unwrap_or_else(|| Vector::from_element(b.len(), f64::NAN))
            }
            SchurFactor::Chol(c) => c.solve(b),
        }
    }
}

fn factor_schur(c: &DenseMatrix) -> Option<SchurFactor> {
    if c.nrows() >= c.ncols() {
        let r = c.clone().qr().r();
        let d = r.diagonal().abs();
        if d.min() > 1e-13 * d.max() {
            return Some(SchurFactor::Qr(r));
        }
    }
    let schur = sym(&c.tr_mul(c));
    let scale = schur.diagonal().amax().max(f64::MIN_POSITIVE);
    for reg in [0.0, 1e-14, 1e-11, 1e-8] {
        let mut m = schur.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += reg * scale;
        }
        if let Some(chol) = Cholesky::new(m) {
            return Some(SchurFactor::Chol(chol));
        }
    }
    None
}

fn direction(prog: &ConeProgram, scalings: &[Scaling], schur: &SchurFactor, rp: &Vector, rd: &[DenseMatrix], r_target: &[DenseMatrix]) -> Direction {
    let nb = scalings.len();
    let mut rhs = -rp.clone();
    let mut t_all = Vec::with_capacity(nb);
    for b in 0..nb {
        let sc = &scalings[b];
        let t = lyap_diag(&sc.lambda, &r_target[b]);
        let d = &sc.k * &t * sc.k.transpose() - &sc.w_inv * &rd[b] * &sc.w_inv;
        rhs += &prog.stacked[b] * Vector::from_column_slice(d.as_slice());
        t_all.push(t);
    }
    let mut dy = schur.solve(&rhs);
    let (mut ds, mut dz, mut s_hat, mut z_hat) = recover_direction(prog, scalings, &t_all, rd, &dy);
    // Forming ΔZ = K(T − Ŝ)K^T cancels badly near a degenerate optimum, so
    // A(ΔZ) = r_p can be off by far more than the Schur solve error. Measure
    // the defect and remove it with the consistent correction
    // Δy += w, ΔS += Σ w_i F_i, ΔZ −= W^{-1}(Σ w_i F_i)W^{-1}, M w = defect.
    for _ in 0..REFINE_STEPS {
        let err = prog.adjoint(&dz) - rp;
        if err.norm() <= f64::EPSILON * (1.0 + rp.norm()) {
            break;
        }
        let w = schur.solve(&err);
        if w.iter().any(|v| !v.is_finite()) {
            break;
        }
        dy += &w;
        for b in 0..nb {
            let sc = &scalings[b];
            let g = prog.linear_part(b, &w);
            let gh = sym(&(sc.k.transpose() * &g * &sc.k));
            dz[b] -= sym(&(&sc.k * &gh * sc.k.transpose()));
            ds[b] += g;
            s_hat[b] += &gh;
            z_hat[b] -= gh;
        }
    }
    Direction { dy, ds, dz, s_hat, z_hat }
}

type DirectionParts = (Vec<DenseMatrix>, Vec<DenseMatrix>, Vec<DenseMatrix>, Vec<DenseMatrix>);

fn recover_direction(prog: &ConeProgram, scalings: &[Scaling], t_all: &[DenseMatrix], rd: &[DenseMatrix], dy: &Vector) -> DirectionParts {
    let nb = scalings.len();
    let mut ds = Vec::with_capacity(nb);
    let mut dz = Vec::with_capacity(nb);
    let mut s_hat = Vec::with_capacity(nb);
    let mut z_hat = Vec::with_capacity(nb);
    for b in 0..nb {
        let sc = &scalings[b];
        let dsb = sym(&(prog.linear_part(b, dy) + &rd[b]));
        let sh = sym(&(sc.k.transpose() * &dsb * &sc.k));
        let zh = sym(&(&t_all[b] - &sh));
        let dzb = sym(&(&sc.k * &zh * sc.k.transpose()));
        ds.push(dsb);
        dz.push(dzb);
        s_hat.push(sh);
        z_hat.push(zh);
    }
    (ds, dz, s_hat, z_hat)
}

fn step_lengths(scalings: &[Scaling], dir: &Direction) -> (f64, f64) {
    let mut ap = f64::INFINITY;
    let mut ad = f64::INFINITY;
    for (b, sc) in scalings.iter().enumerate() {
        ap = ap.min(max_step(&sc.lambda, &dir.s_hat[b]));
        ad = ad.min(max_step(&sc.lambda, &dir.z_hat[b]));
    }
    ((STEP_FRACTION * ap).min(1.0), (STEP_FRACTION * ad).min(1.0))
}

fn initial_iterate(prog: &ConeProgram, y0: Option<&Vector>) -> Iterate {
    let m = prog.num_vars();
    let y = y0.or(prog.initial_point.as_ref()).cloned().unwrap_or_else(|| Vector::zeros(m));
    let mut s = prog.evaluate(&y);
    for sb in s.iter_mut() {
        let lo = linalg::min_eig(sb);
        if lo < 1.0 {
            for i in 0..sb.nrows() {
                sb[(i, i)] += 1.0 - lo;
            }
        }
    }
    let z = prog
        .blocks
        .iter()
        .map(|block| {
            let k = block.size() as f64;
            let mut zeta = 1.0f64;
            for (ci, fi) in prog.c.iter().zip(&block.f) {
                zeta = zeta.max(k.sqrt() * (1.0 + ci.abs()) / (1.0 + fi.norm()));
            }
            DenseMatrix::identity(block.size(), block.size()) * zeta
        })
        .collect();
    Iterate { y, s, z }
}

struct Residuals {
    rp: Vector,
    rd: Vec<DenseMatrix>,
    pres: f64,
    dres: f64,
    comp: f64,
    pobj: f64,
    dobj: f64,
}

impl Residuals {
    fn of(prog: &ConeProgram, it: &Iterate) -> Self {
        let rp = &prog.c - prog.adjoint(&it.z);
        let fy = prog.evaluate(&it.y);
        let rd: Vec<DenseMatrix> = fy.iter().zip(&it.s).map(|(f, s)| f - s).collect();
        let dres = rp.norm();
        let pres = rd.iter().map(|r| r.norm_squared()).sum::<f64>().sqrt();
        let comp = it.s.iter().zip(&it.z).map(|(s, z)| frob_dot(s, z)).sum();
        Self { pobj: prog.primal_objective(&it.y), dobj: prog.dual_objective(&it.z), rp, rd, pres, dres, comp }
    }

    fn gap(&self) -> f64 {
        self.comp.max((self.pobj - self.dobj).abs())
    }

    fn merit(&self, opts: &SolverOptions) -> f64 {
        (self.gap() / opts.gap_tol).max(self.pres / opts.feas_tol).max(self.dres / opts.feas_tol)
    }

    fn converged(&self, opts: &SolverOptions) -> bool {
        self.merit(opts) <= 1.0
    }
}

fn finish(it: Iterate, res: &Residuals, iterations: usize, status: SolveStatus) -> ConeSolution {
    ConeSolution {
        y: it.y,
        slacks: it.s,
        duals: it.z,
        primal_objective: res.pobj,
        dual_objective: res.dobj,
        gap: res.gap(),
        primal_residual: res.pres,
        dual_residual: res.dres,
        iterations,
        status,
    }
}

/// Solve, reporting every accepted iteration to `observer`.
pub fn solve_observed(prog: &ConeProgram, opts: &SolverOptions, observer: impl FnMut(&IterationRecord)) -> Result<ConeSolution> {
    solve_from(prog, None, opts, observer)
}

/// Solve starting from `y0` (overrides the program's own initial point).
pub fn solve_from(prog: &ConeProgram, y0: Option<&Vector>, opts: &SolverOptions, mut observer: impl FnMut(&IterationRecord)) -> Result<ConeSolution> {
    opts.validate()?;
    if let Some(y0) = y0 {
        if y0.len() != prog.num_vars() {
            return Err(Error::dim(format!("initial point has length {}, expected {}", y0.len(), prog.num_vars())));
        }
    }
    let nb = prog.blocks.len();
    let m = prog.num_vars();
    let total_dim: usize = prog.block_sizes().iter().sum();

    let mut it = initial_iterate(prog, y0);
    let mut res = Residuals::of(prog, &it);
    let mut best: Option<(f64, Iterate, usize)> = None;

    for iter in 0..opts.max_iters {
        if res.converged(opts) {
            return Ok(finish(it, &res, iter, SolveStatus::Optimal));
        }
        let merit = res.merit(opts);
        if best.as_ref().is_none_or(|(bm, _, _)| merit < *bm) {
            best = Some((merit, Iterate { y: it.y.clone(), s: it.s.clone(), z: it.z.clone() }, iter));
        }

        let Some(scalings) = it.s.iter().zip(&it.z).map(|(s, z)| nt_scaling(s, z)).collect::<Option<Vec<_>>>() else {
            return Ok(best_or_current(prog, opts, best, it, iter, SolveStatus::StepFailure));
        };

        // Schur complement M_ij = Σ_b <K^T F_i K, K^T F_j K> = (C^T C)_ij.
        let rows: usize = scalings.iter().map(|sc| sc.k.nrows() * sc.k.nrows()).sum();
        let mut c = DenseMatrix::zeros(rows, m);
        let mut offset = 0;
        for (sc, block) in scalings.iter().zip(&prog.blocks) {
            let k = &sc.k;
            let kk = k.nrows() * k.nrows();
            for (i, fi) in block.f.iter().enumerate() {
                if fi.amax() == 0.0 {
                    continue;
                }
                let bi = k.transpose() * fi * k;
                c.view_mut((offset, i), (kk, 1)).copy_from_slice(bi.as_slice());
            }
            offset += kk;
        }
        let Some(chol) = factor_schur(&c) else {
            return Ok(best_or_current(prog, opts, best, it, iter, SolveStatus::StepFailure));
        };

        let mu = res.comp / total_dim as f64;

        // Predictor.
        let r_aff: Vec<DenseMatrix> = scalings.iter().map(|sc| -DenseMatrix::from_diagonal(&sc.lambda.map(|l| l * l))).collect();
        let aff = direction(prog, &scalings, &chol, &res.rp, &res.rd, &r_aff);
        let (ap_aff, ad_aff) = step_lengths(&scalings, &aff);
        let mut comp_aff = 0.0;
        for b in 0..nb {
            let s_next = &it.s[b] + &aff.ds[b] * ap_aff;
            let z_next = &it.z[b] + &aff.dz[b] * ad_aff;
            comp_aff += frob_dot(&s_next, &z_next);
        }
        let mu_aff = comp_aff.max(0.0) / total_dim as f64;
        let sigma = if mu > 0.0 { (mu_aff / mu).powi(3).clamp(0.0, 1.0) } else { 0.0 };

        // Corrector.
        let r_cor: Vec<DenseMatrix> = scalings
            .iter()
            .enumerate()
            .map(|(b, sc)| {
                let mut r = -sym(&(&aff.z_hat[b] * &aff.s_hat[b]));
                for i in 0..sc.lambda.len() {
                    r[(i, i)] += sigma * mu - sc.lambda[i] * sc.lambda[i];
                }
                r
            })
            .collect();
        let dir = direction(prog, &scalings, &chol, &res.rp, &res.rd, &r_cor);
        let (ap, ad) = step_lengths(&scalings, &dir);
        if !(ap > 0.0 && ad > 0.0) || dir.dy.iter().any(|v| !v.is_finite()) {
            return Ok(best_or_current(prog, opts, best, it, iter, SolveStatus::StepFailure));
        }

        it.y += &dir.dy * ap;
        for b in 0..nb {
            it.s[b] = sym(&(&it.s[b] + &dir.ds[b] * ap));
            it.z[b] = sym(&(&it.z[b] + &dir.dz[b] * ad));
        }
        res = Residuals::of(prog, &it);
        observer(&IterationRecord {
            iteration: iter + 1,
            primal_objective: res.pobj,
            dual_objective: res.dobj,
            complementarity: res.comp,
            primal_residual: res.pres,
            dual_residual: res.dres,
            step_primal: ap,
            step_dual: ad,
            sigma,
        });
    }

    if res.converged(opts) {
        return Ok(finish(it, &res, opts.max_iters, SolveStatus::Optimal));
    }
    Ok(best_or_current(prog, opts, best, it, opts.max_iters, SolveStatus::MaxIterations))
}

fn best_or_current(
    prog: &ConeProgram,
    opts: &SolverOptions,
    best: Option<(f64, Iterate, usize)>,
    current: Iterate,
    iters: usize,
    status: SolveStatus,
) -> ConeSolution {
    let cur = Residuals::of(prog, &current);
    match best {
        Some((merit, b, _)) if merit < cur.merit(opts) => {
            let res = Residuals::of(prog, &b);
            finish(b, &res, iters, status)
        }
        _ => finish(current, &cur, iters, status),
    }
}

/// Feasibility and optimality residuals of a candidate primal-dual pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub block_min_eigs: Vec<f64>,
    pub dual_min_eigs: Vec<f64>,
    /// `‖c − A(Z)‖₂`.
    pub dual_residual: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `c^T y − (−Σ <F_0, Z>)`; linear in `y`.
    pub gap: f64,
    /// `Σ <F(y), Z>`.
    pub complementarity: f64,
}

impl ResidualReport {
    pub fn min_block_eig(&self) -> f64 {
        self.block_min_eigs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_dual_eig(&self) -> f64 {
        self.dual_min_eigs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest violation among primal cone, dual cone, dual equalities and gap.
    pub fn max_violation(&self) -> f64 {
        (-self.min_block_eig()).max(-self.min_dual_eig()).max(self.dual_residual).max(self.gap.abs()).max(0.0)
    }
}

pub fn check_solution(prog: &ConeProgram, y: &Vector, duals: &[DenseMatrix]) -> Result<ResidualReport> {
    if y.len() != prog.num_vars() {
        return Err(Error::dim(format!("y has length {}, expected {}", y.len(), prog.num_vars())));
    }
    if duals.len() != prog.blocks.len() {
        return Err(Error::dim(format!("{} dual blocks supplied, expected {}", duals.len(), prog.blocks.len())));
    }
    for (b, (zb, block)) in duals.iter().zip(&prog.blocks).enumerate() {
        if zb.shape() != block.f0.shape() {
            return Err(Error::dim(format!("dual block {b} has shape {:?}, expected {:?}", zb.shape(), block.f0.shape())));
        }
    }
    let fy = prog.evaluate(y);
    let primal_objective = prog.primal_objective(y);
    let dual_objective = prog.dual_objective(duals);
    Ok(ResidualReport {
        block_min_eigs: fy.iter().map(linalg::min_eig).collect(),
        dual_min_eigs: duals.iter().map(linalg::min_eig).collect(),
        dual_residual: (&prog.c - prog.adjoint(duals)).norm(),
        primal_objective,
        dual_objective,
        gap: primal_objective - dual_objective,
        complementarity: fy.iter().zip(duals).map(|(f, z)| frob_dot(f, z)).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// minimize δ s.t. (1−δ)I ⪯ diag(a) ⪯ (1+δ)I.
    fn diag_bound_program(a: &[f64]) -> ConeProgram {
        let n = a.len();
        let d = DenseMatrix::from_diagonal(&Vector::from_column_slice(a));
        let id = DenseMatrix::identity(n, n);
        let lower = Block { f0: &d - &id, f: vec![id.clone()] };
        let upper = Block { f0: &id - &d, f: vec![id.clone()] };
        ConeProgram::new(Vector::from_vec(vec![1.0]), vec![lower, upper]).unwrap()
    }

    #[test]
    fn diag_example() {
        let prog = diag_bound_program(&[0.6, 1.4]);
        let sol = solve(&prog, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.y[0] - 0.4).abs() < 1e-8, "{}", sol.y[0]);
        let report = check_solution(&prog, &sol.y, &sol.duals).unwrap();
        assert!(report.max_violation() <= 1e-8);
    }

    #[test]
    fn analytic_solution_has_zero_residuals() {
        let prog = diag_bound_program(&[0.6, 1.4]);
        let y = Vector::from_vec(vec![0.4]);
        let z_lower = DenseMatrix::from_diagonal(&Vector::from_vec(vec![0.5, 0.0]));
        let z_upper = DenseMatrix::from_diagonal(&Vector::from_vec(vec![0.0, 0.5]));
        let report = check_solution(&prog, &y, &[z_lower, z_upper]).unwrap();
        assert!(report.max_violation() <= 1e-12, "{report:?}");
        assert!(report.complementarity.abs() <= 1e-12);
    }

    #[test]
    fn gap_is_linear_in_y() {
        let prog = diag_bound_program(&[0.6, 1.4]);
        let z = [DenseMatrix::from_diagonal(&Vector::from_vec(vec![0.5, 0.0])), DenseMatrix::from_diagonal(&Vector::from_vec(vec![0.0, 0.5]))];
        let g = |t: f64| check_solution(&prog, &Vector::from_vec(vec![0.4 + t]), &z).unwrap().gap;
        for t in [1e-3, 1e-2, 1e-1] {
            assert!((g(t) - t).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_malformed_programs() {
        let id = DenseMatrix::identity(2, 2);
        let asym = DenseMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let c = Vector::from_vec(vec![1.0]);
        assert!(ConeProgram::new(c.clone(), vec![Block { f0: id.clone(), f: vec![asym] }]).is_err());
        assert!(ConeProgram::new(c.clone(), vec![Block { f0: id.clone(), f: vec![] }]).is_err());
        assert!(ConeProgram::new(c.clone(), vec![]).is_err());
        let prog = ConeProgram::new(c, vec![Block { f0: id.clone(), f: vec![id.clone()] }]).unwrap();
        assert!(check_solution(&prog, &Vector::zeros(2), std::slice::from_ref(&id)).is_err());
        assert!(check_solution(&prog, &Vector::zeros(1), &[]).is_err());
        let bad = SolverOptions { max_iters: 0, ..SolverOptions::default() };
        assert!(solve(&prog, &bad).is_err());
    }

    #[test]
    fn log_sink_receives_lines() {
        let prog = diag_bound_program(&[0.6, 1.4]);
        let mut buf = Vec::new();
        let sol = solve_with_log(&prog, &SolverOptions::default(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), sol.iterations);
        assert!(text.lines().all(|l| l.contains("gap")));
    }
}
