//! Exact convex formulation of `δ(X, Z)`: the smallest RIP constant of any
//! kernel `H = 𝐀^T𝐀` that makes `X` a second-order critical point for the
//! ground truth `ZZ^T`.
//!
//! ```text
//! minimize    δ
//! subject to  𝕏^T H e = 0
//!             2 [I_r ⊗ sym(mat(H e))] + 𝕏^T H 𝕏 ⪰ 0
//!             (1 − δ) I ⪯ H ⪯ (1 + δ) I
//! ```
//!
//! The problem is invariant under an orthogonal change of basis, so it is
//! solved for the reduced pair `(P^T X, P^T Z)` with `P = orth([X Z])`, which
//! has `d ≤ 2r` rows. The lower problem keeps `H` in full dimension but only
//! bounds the compression `𝐏^T H 𝐏`, `𝐏 = P ⊗ P`.
//!
//! Before the problem reaches the cone solver:
//! - `X` and `Z` are scaled so `‖e‖ = 1` (the feasible set in `H` does not
//!   change);
//! - the equality constraints are eliminated by parametrizing `svec(H)` over
//!   the null space of the (rank-reduced) equality map;
//! - the Hessian block is compressed onto the orthogonal complement of
//!   `{vec(XΩ) : Ω^T = −Ω}`, a subspace every feasible Hessian annihilates.

use crate::error::{Error, Result};
use crate::linalg::{self, frob_dot, kron, mat, smat, svec, svec_len, sym, vec, DenseMatrix, Vector};
use crate::objective::{jacobian_mat, residual_vec, MeasurementOperator};
use crate::sdp::{self, Block, ConeProgram, IterationRecord, SolveStatus, SolverOptions};

/// Relative singular-value cutoff for dropping redundant equality rows.
pub const EQ_RANK_TOL: f64 = 1e-10;

/// Optimal values this close to one are reported as
/// [`LmiStatus::InfeasibleAtDeltaBelowOne`].
pub const DELTA_ONE_TOL: f64 = 1e-6;

/// Spectral bound `‖H‖₂ ≤ COMPACT_RADIUS` added to the lower problem when `𝐏`
/// is not square, so the solver sees a bounded feasible set.
const COMPACT_RADIUS: f64 = 4.0;

/// Largest ambient dimension for which the lifted full-space checks run.
pub const LIFT_CHECK_MAX_N: usize = 12;

/// A pair expressed in an orthonormal basis `P` of `range([X Z])`.
#[derive(Debug, Clone)]
pub struct ReducedPair {
    pub p: DenseMatrix,
    pub x_hat: DenseMatrix,
    pub z_hat: DenseMatrix,
}

impl ReducedPair {
    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    pub fn d(&self) -> usize {
        self.p.ncols()
    }

    pub fn r(&self) -> usize {
        self.x_hat.ncols()
    }

    pub fn x(&self) -> DenseMatrix {
        &self.p * &self.x_hat
    }

    pub fn z(&self) -> DenseMatrix {
        &self.p * &self.z_hat
    }
}

fn check_pair(x: &DenseMatrix, z: &DenseMatrix) -> Result<()> {
    if x.shape() != z.shape() {
        return Err(Error::dim(format!("X has shape {:?} but Z has shape {:?}", x.shape(), z.shape())));
    }
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::input("X and Z must be non-empty"));
    }
    if !linalg::is_finite(x) || !linalg::is_finite(z) {
        return Err(Error::input("X and Z must be finite"));
    }
    Ok(())
}

pub fn reduce(x: &DenseMatrix, z: &DenseMatrix) -> Result<ReducedPair> {
    check_pair(x, z)?;
    let (n, r) = x.shape();
    let mut xz = DenseMatrix::zeros(n, 2 * r);
    xz.columns_mut(0, r).copy_from(x);
    xz.columns_mut(r, r).copy_from(z);
    let p = linalg::orth_basis(&xz);
    if p.ncols() == 0 {
        return Err(Error::Degenerate("X = Z = 0".into()));
    }
    let x_hat = p.transpose() * x;
    let z_hat = p.transpose() * z;
    Ok(ReducedPair { p, x_hat, z_hat })
}

/// `e = vec(XX^T − ZZ^T)`, rejecting pairs where it vanishes.
/// `e = vec(XX^T − ZZ^T)`, or [`Error::NotSpurious`] when `e` vanishes
/// relative to `‖X‖² + ‖Z‖²`.
pub fn spurious_residual(x: &DenseMatrix, z: &DenseMatrix) -> Result<Vector> {
    let e = residual_vec(x, z);
    let scale = (x.norm_squared() + z.norm_squared()).max(f64::MIN_POSITIVE);
    if e.norm() <= 1e-12 * scale {
        return Err(Error::NotSpurious);
    }
    Ok(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmiKind {
    /// Full RIP bounds on `H` (used on the reduced pair).
    Upper,
    /// RIP bounds only on `𝐏^T H 𝐏`.
    Lower,
}

/// Semidefinite program over `(δ, H)` after equality elimination.
///
/// Solver variables are `(δ, t)` with `svec(H) = N t`.
#[derive(Debug, Clone)]
pub struct LmiProblem {
    pub kind: LmiKind,
    /// Side of the symmetric variable `H`.
    pub dim_h: usize,
    /// Equality rows before redundancy removal.
    pub num_eq: usize,
    /// Independent equality rows.
    pub eq_rank: usize,
    /// Sizes of the PSD blocks handed to the solver, in order: Hessian,
    /// lower bound, upper bound and, when present, the two compactness blocks.
    pub psd_block_sizes: Vec<usize>,
    x: DenseMatrix,
    e: Vector,
    jac: DenseMatrix,
    projector: Option<DenseMatrix>,
    hess_basis: DenseMatrix,
    nullspace: DenseMatrix,
    compact: bool,
    program: ConeProgram,
}

/// Orthonormal basis of the complement of `{vec(XΩ) : Ω antisymmetric}`.
fn hessian_compression(x: &DenseMatrix) -> DenseMatrix {
    let (n, r) = x.shape();
    let pairs = r * (r.saturating_sub(1)) / 2;
    if pairs == 0 {
        return DenseMatrix::identity(n * r, n * r);
    }
    let mut dirs = DenseMatrix::zeros(n * r, pairs);
    let mut k = 0;
    for a in 0..r {
        for b in (a + 1)..r {
            let mut omega = DenseMatrix::zeros(r, r);
            omega[(a, b)] = 1.0;
            omega[(b, a)] = -1.0;
            dirs.set_column(k, &vec(&(x * omega)));
            k += 1;
        }
    }
    linalg::orth_complement(&linalg::orth_basis(&dirs))
}

/// Iterates the symmetric basis `E_k` with `<E_k, H> = svec(H)_k`, yielding
/// `(k, i, j, c)` where `E_k = c (e_i e_j^T + e_j e_i^T)` for `i ≠ j` and
/// `E_k = e_i e_i^T` for `i = j`.
fn svec_basis(dim: usize) -> impl Iterator<Item = (usize, usize, usize, f64)> {
    (0..dim)
        .flat_map(move |j| (j..dim).map(move |i| (i, j)))
        .enumerate()
        .map(|(k, (i, j))| (k, i, j, if i == j { 1.0 } else { std::f64::consts::FRAC_1_SQRT_2 }))
}

fn identity_scaled(n: usize, s: f64) -> DenseMatrix {
    DenseMatrix::identity(n, n) * s
}

impl LmiProblem {
    fn assemble(kind: LmiKind, x: &DenseMatrix, z: &DenseMatrix, projector: Option<DenseMatrix>) -> Result<Self> {
        let e_raw = spurious_residual(x, z)?;
        let (n, r) = x.shape();
        let dim = n * n;

        // δ and the feasible H are unchanged when X, Z are scaled together.
        let s = 1.0 / e_raw.norm().sqrt();
        let x = x * s;
        let e = &e_raw / e_raw.norm();
        let jac = jacobian_mat(&x);
        let q = hessian_compression(&x);
        let qd = q.ncols();
        let nsv = svec_len(dim);

        // Equality map and compressed Hessian map, one column per svec basis element.
        let mut eq = DenseMatrix::zeros(n * r, nsv);
        let mut hess_cols = DenseMatrix::zeros(qd * qd, nsv);
        let eye_r = DenseMatrix::identity(r, r);
        for (k, i, j, c) in svec_basis(dim) {
            let mut he = Vector::zeros(dim);
            let ji = jac.row(i).transpose();
            let jj = jac.row(j).transpose();
            let xhx = if i == j {
                he[i] = e[i];
                &ji * ji.transpose()
            } else {
                he[i] += c * e[j];
                he[j] += c * e[i];
                (&ji * jj.transpose() + &jj * ji.transpose()) * c
            };
            eq.set_column(k, &(jac.transpose() * &he));
            let hess = kron(&eye_r, &sym(&mat(&he, n, n))) * 2.0 + xhx;
            let compressed = q.transpose() * hess * &q;
            hess_cols.set_column(k, &vec(&sym(&compressed)));
        }

        let row_space = linalg::orth_basis_tol(&eq.transpose(), EQ_RANK_TOL);
        let eq_rank = row_space.ncols();
        let nullspace = linalg::orth_complement(&row_space);
        // May be zero: then H = 0 is forced and only δ remains.
        let nvars = nullspace.ncols();

        let hess_f = hess_cols * &nullspace;
        let h_basis: Vec<DenseMatrix> = (0..nvars).map(|k| smat(&nullspace.column(k).into_owned(), dim)).collect();
        let bound_f: Vec<DenseMatrix> = match &projector {
            None => h_basis.clone(),
            Some(pp) => h_basis.iter().map(|h| sym(&(pp.transpose() * h * pp))).collect(),
        };
        let bdim = projector.as_ref().map_or(dim, |pp| pp.ncols());

        let mut blocks = Vec::new();
        let mut hess_block = vec![DenseMatrix::zeros(qd, qd)];
        hess_block.extend((0..nvars).map(|k| DenseMatrix::from_column_slice(qd, qd, hess_f.column(k).as_slice())));
        blocks.push(Block { f0: DenseMatrix::zeros(qd, qd), f: hess_block });

        let mut lower = vec![identity_scaled(bdim, 1.0)];
        lower.extend(bound_f.iter().cloned());
        blocks.push(Block { f0: identity_scaled(bdim, -1.0), f: lower });

        let mut upper = vec![identity_scaled(bdim, 1.0)];
        upper.extend(bound_f.iter().map(|f| -f));
        blocks.push(Block { f0: identity_scaled(bdim, 1.0), f: upper });

        let compact = bdim < dim;
        if compact {
            let mut plus = vec![DenseMatrix::zeros(dim, dim)];
            plus.extend(h_basis.iter().map(|h| -h));
            blocks.push(Block { f0: identity_scaled(dim, COMPACT_RADIUS), f: plus });
            let mut minus = vec![DenseMatrix::zeros(dim, dim)];
            minus.extend(h_basis.iter().cloned());
            blocks.push(Block { f0: identity_scaled(dim, COMPACT_RADIUS), f: minus });
        }

        let mut c = Vector::zeros(nvars + 1);
        c[0] = 1.0;
        let psd_block_sizes = blocks.iter().map(Block::size).collect();
        let program = ConeProgram::new(c, blocks)?;
        Ok(Self { kind, dim_h: dim, num_eq: n * r, eq_rank, psd_block_sizes, x, e, jac, projector, hess_basis: q, nullspace, compact, program })
    }

    pub fn program(&self) -> &ConeProgram {
        &self.program
    }

    pub fn num_vars(&self) -> usize {
        self.program.num_vars()
    }

    /// `X` after normalization to `‖e‖ = 1`.
    pub fn normalized_x(&self) -> &DenseMatrix {
        &self.x
    }

    pub fn normalized_e(&self) -> &Vector {
        &self.e
    }

    pub fn jacobian(&self) -> &DenseMatrix {
        &self.jac
    }

    fn r(&self) -> usize {
        self.x.ncols()
    }

    fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Solver start: `δ = δ₀` and `H` the projection of `I` onto the
    /// equality-feasible subspace.
    pub fn initial_point(&self, delta0: f64) -> Vector {
        let t0 = self.nullspace.transpose() * svec(&DenseMatrix::identity(self.dim_h, self.dim_h));
        let mut y = Vector::zeros(self.num_vars());
        y[0] = delta0;
        y.rows_mut(1, t0.len()).copy_from(&t0);
        y
    }

    /// `2 [I_r ⊗ sym(mat(H e))] + 𝕏^T H 𝕏` in the normalized coordinates.
    pub fn hessian_block(&self, h: &DenseMatrix) -> DenseMatrix {
        let he = h * &self.e;
        let s = sym(&mat(&he, self.n(), self.n()));
        let eye = DenseMatrix::identity(self.r(), self.r());
        sym(&(kron(&eye, &s) * 2.0 + self.jac.transpose() * h * &self.jac))
    }

    fn bounded_part(&self, h: &DenseMatrix) -> DenseMatrix {
        match &self.projector {
            None => h.clone(),
            Some(pp) => sym(&(pp.transpose() * h * pp)),
        }
    }

    fn lift_bound_dual(&self, u: &DenseMatrix) -> DenseMatrix {
        match &self.projector {
            None => u.clone(),
            Some(pp) => pp * u * pp.transpose(),
        }
    }

    fn diag_block_sum(&self, v: &DenseMatrix) -> Vector {
        let n = self.n();
        let mut acc = Vector::zeros(n * n);
        for j in 0..self.r() {
            acc += vec(&v.view((j * n, j * n), (n, n)).into_owned());
        }
        acc
    }

    /// Right-hand side `Σ_j (𝕏y − vec V_jj) e^T + e (·)^T − 𝕏 V 𝕏^T` of the
    /// dual matrix equation.
    fn dual_map(&self, y: &Vector, v: &DenseMatrix) -> DenseMatrix {
        let a = &self.jac * y * (self.r() as f64) - self.diag_block_sum(v);
        &a * self.e.transpose() + &self.e * a.transpose() - &self.jac * v * self.jac.transpose()
    }

    /// Left-hand side `𝐏 (U₁ − U₂) 𝐏^T` (minus/plus the compactness duals).
    fn dual_lhs(&self, dual: &DualCertificate, compact_duals: &[DenseMatrix]) -> DenseMatrix {
        let mut lhs = self.lift_bound_dual(&(&dual.u1 - &dual.u2));
        if let [plus, minus] = compact_duals {
            lhs += minus - plus;
        }
        lhs
    }

    /// Least-squares multiplier `y` for the dual matrix equation given
    /// `U₁, U₂, V`.
    fn recover_multiplier(&self, u_lhs: &DenseMatrix, v: &DenseMatrix) -> Vector {
        // R = a e^T + e a^T with a = r𝕏y − Σ_j vec V_jj; ‖e‖ = 1.
        let rmat = u_lhs + &self.jac * v * self.jac.transpose();
        let re = &rmat * &self.e;
        let ae = self.e.dot(&re) / 2.0;
        let a = re - &self.e * ae;
        let target = (a + self.diag_block_sum(v)) / (self.r() as f64);
        if self.jac.amax() == 0.0 {
            return Vector::zeros(self.jac.ncols());
        }
        linalg::thin_svd(&self.jac).solve(&target, 1e-12 * self.jac.amax())
    }

    /// Solve the problem. Starts from `δ = opts.initial_delta`.
    pub fn solve(&self, opts: &SolverOptions) -> Result<SdpSolution> {
        self.solve_observed(opts, |_| {})
    }

    pub fn solve_observed(&self, opts: &SolverOptions, observer: impl FnMut(&IterationRecord)) -> Result<SdpSolution> {
        let y0 = self.initial_point(opts.initial_delta);
        let sol = sdp::solve_from(&self.program, Some(&y0), opts, observer)?;
        let delta_raw = sol.y[0];
        let t = sol.y.rows(1, sol.y.len() - 1).into_owned();
        let h = sym(&smat(&(&self.nullspace * t), self.dim_h));
        let v = sym(&(&self.hess_basis * &sol.duals[0] * self.hess_basis.transpose()));
        let u1 = sol.duals[1].clone();
        let u2 = sol.duals[2].clone();
        let compact_duals: Vec<DenseMatrix> = sol.duals[3..].to_vec();
        let mut dual = DualCertificate { y: Vector::zeros(self.jac.ncols()), u1, u2, v };
        dual.y = self.recover_multiplier(&self.dual_lhs(&dual, &compact_duals), &dual.v);
        let status = match sol.status {
            SolveStatus::Optimal if delta_raw >= 1.0 - DELTA_ONE_TOL => LmiStatus::InfeasibleAtDeltaBelowOne,
            SolveStatus::Optimal => LmiStatus::Optimal,
            SolveStatus::MaxIterations | SolveStatus::StepFailure => LmiStatus::MaxIterations,
        };
        Ok(SdpSolution { delta: delta_raw.clamp(0.0, 1.0), h, dual, gap: sol.gap, status, iterations: sol.iterations, compact_duals })
    }

    /// Primal and dual feasibility residuals of `sol` for this problem.
    pub fn check(&self, sol: &SdpSolution) -> Result<CertificateReport> {
        if sol.h.shape() != (self.dim_h, self.dim_h) {
            return Err(Error::dim(format!("H has shape {:?}, expected {}x{}", sol.h.shape(), self.dim_h, self.dim_h)));
        }
        let delta = sol.delta;
        let h = sym(&sol.h);
        let hess = self.hessian_block(&h);
        let hb = self.bounded_part(&h);
        let bdim = hb.nrows();
        let lower = &hb - identity_scaled(bdim, 1.0 - delta);
        let upper = identity_scaled(bdim, 1.0 + delta) - &hb;
        let mut compact_min_eig = f64::INFINITY;
        let mut complementarity = 0.0;
        if self.compact {
            let plus = identity_scaled(self.dim_h, COMPACT_RADIUS) - &h;
            let minus = identity_scaled(self.dim_h, COMPACT_RADIUS) + &h;
            compact_min_eig = linalg::min_eig(&plus).min(linalg::min_eig(&minus));
            if let [zp, zm] = sol.compact_duals.as_slice() {
                complementarity += frob_dot(&plus, zp) + frob_dot(&minus, zm);
            }
        }
        let dual = self.check_dual(&sol.dual, &sol.compact_duals)?;
        complementarity += frob_dot(&hess, &sol.dual.v) + frob_dot(&lower, &sol.dual.u1) + frob_dot(&upper, &sol.dual.u2);
        Ok(CertificateReport {
            delta,
            primal_eq_residual: (self.jac.transpose() * &h * &self.e).norm(),
            hessian_min_eig: linalg::min_eig(&hess),
            lower_bound_min_eig: linalg::min_eig(&lower),
            upper_bound_min_eig: linalg::min_eig(&upper),
            compact_min_eig,
            gap: delta - dual.objective,
            complementarity,
            dual,
            lifted: None,
        })
    }

    /// Dual feasibility of `(y, U₁, U₂, V)`: trace normalization, the dual
    /// matrix equation and cone memberships.
    pub fn check_dual(&self, dual: &DualCertificate, compact_duals: &[DenseMatrix]) -> Result<DualReport> {
        let bdim = self.bounded_part(&DenseMatrix::zeros(self.dim_h, self.dim_h)).nrows();
        let nr = self.jac.ncols();
        if dual.u1.shape() != (bdim, bdim) || dual.u2.shape() != (bdim, bdim) {
            return Err(Error::dim(format!("U1/U2 must be {bdim}x{bdim}")));
        }
        if dual.v.shape() != (nr, nr) || dual.y.len() != nr {
            return Err(Error::dim(format!("V must be {nr}x{nr} and y of length {nr}")));
        }
        let lhs = self.dual_lhs(dual, compact_duals);
        let rhs = self.dual_map(&dual.y, &dual.v);
        let mut objective = (&dual.u1 - &dual.u2).trace();
        let mut compact_min_eig = f64::INFINITY;
        for z in compact_duals {
            objective -= COMPACT_RADIUS * z.trace();
            compact_min_eig = compact_min_eig.min(linalg::min_eig(z));
        }
        Ok(DualReport {
            trace_residual: ((&dual.u1 + &dual.u2).trace() - 1.0).abs(),
            eq_residual: (lhs - rhs).norm(),
            u1_min_eig: linalg::min_eig(&dual.u1),
            u2_min_eig: linalg::min_eig(&dual.u2),
            v_min_eig: linalg::min_eig(&dual.v),
            compact_min_eig,
            objective,
        })
    }

    /// The strictly feasible dual point `y = 0`, `V = εI`,
    /// `U₁ = ηI − εW`, `U₂ = ηI + εW` with `2η = 1/d²` and
    /// `2W = r [vec(I) e^T + e vec(I)^T] + 𝕏𝕏^T`.
    ///
    /// Only defined for the upper problem.
    pub fn slater_dual_seed(&self, eps: f64) -> Result<DualCertificate> {
        if self.projector.is_some() {
            return Err(Error::input("the dual seed is defined for the upper problem only"));
        }
        let dim = self.dim_h;
        let nr = self.jac.ncols();
        let vec_i = vec(&DenseMatrix::identity(self.n(), self.n()));
        let w = ((&vec_i * self.e.transpose() + &self.e * vec_i.transpose()) * (self.r() as f64) + &self.jac * self.jac.transpose()) * 0.5;
        let eta = 0.5 / dim as f64;
        Ok(DualCertificate {
            y: Vector::zeros(nr),
            u1: identity_scaled(dim, eta) - &w * eps,
            u2: identity_scaled(dim, eta) + &w * eps,
            v: identity_scaled(nr, eps),
        })
    }
}

/// Upper problem on a reduced pair: RIP bounds on all of `Ĥ`.
pub fn build_upper_lmi(pair: &ReducedPair) -> Result<LmiProblem> {
    check_pair(&pair.x_hat, &pair.z_hat)?;
    LmiProblem::assemble(LmiKind::Upper, &pair.x_hat, &pair.z_hat, None)
}

/// Lower problem: full-dimensional `H`, RIP bounds on `(P ⊗ P)^T H (P ⊗ P)`.
pub fn build_lower_lmi(x: &DenseMatrix, z: &DenseMatrix, p: &DenseMatrix) -> Result<LmiProblem> {
    check_pair(x, z)?;
    if p.nrows() != x.nrows() || p.ncols() == 0 {
        return Err(Error::dim(format!("P has shape {:?}, expected {} rows and at least one column", p.shape(), x.nrows())));
    }
    let ptp = p.transpose() * p;
    if (&ptp - DenseMatrix::identity(p.ncols(), p.ncols())).amax() > 1e-10 {
        return Err(Error::input("P must have orthonormal columns"));
    }
    LmiProblem::assemble(LmiKind::Lower, x, z, Some(kron(p, p)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmiStatus {
    Optimal,
    /// The solver converged to `δ ≥ 1 − 1e-6`: no operator with `δ < 1`
    /// makes `X` a spurious second-order point.
    InfeasibleAtDeltaBelowOne,
    /// The solver stopped without meeting its tolerances; the best iterate
    /// is reported.
    MaxIterations,
}

impl LmiStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            LmiStatus::Optimal => "optimal",
            LmiStatus::InfeasibleAtDeltaBelowOne => "infeasible-at-delta-below-one",
            LmiStatus::MaxIterations => "max-iterations",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "optimal" => Some(LmiStatus::Optimal),
            "infeasible-at-delta-below-one" => Some(LmiStatus::InfeasibleAtDeltaBelowOne),
            "max-iterations" => Some(LmiStatus::MaxIterations),
            _ => None,
        }
    }

    /// Whether the solve converged (to either outcome).
    pub fn converged(self) -> bool {
        self != LmiStatus::MaxIterations
    }
}

impl std::fmt::Display for LmiStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Dual variables of the LMI: multiplier `y` of `𝕏^T H e = 0`, `U₁`, `U₂`
/// for the two RIP bounds and `V` for the Hessian block.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    pub y: Vector,
    pub u1: DenseMatrix,
    pub u2: DenseMatrix,
    pub v: DenseMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub delta: f64,
    pub h: DenseMatrix,
    pub dual: DualCertificate,
    pub gap: f64,
    pub status: LmiStatus,
    pub iterations: usize,
    /// Duals of `‖H‖₂ ≤ 4`; empty unless the problem carries that bound.
    pub compact_duals: Vec<DenseMatrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualReport {
    /// `|tr(U₁ + U₂) − 1|`.
    pub trace_residual: f64,
    /// Frobenius residual of the dual matrix equation.
    pub eq_residual: f64,
    pub u1_min_eig: f64,
    pub u2_min_eig: f64,
    pub v_min_eig: f64,
    pub compact_min_eig: f64,
    /// `tr(U₁ − U₂)` (less the compactness terms).
    pub objective: f64,
}

impl DualReport {
    pub fn max_violation(&self) -> f64 {
        self.trace_residual.max(self.eq_residual).max(-self.u1_min_eig).max(-self.u2_min_eig).max(-self.v_min_eig).max(-self.compact_min_eig).max(0.0)
    }
}

/// Full-dimensional checks of the lifted kernel `H* = 𝐏Ĥ𝐏^T + (I − 𝐏𝐏^T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedReport {
    /// `‖e − 𝐏ê‖`.
    pub residual_embedding: f64,
    /// `‖𝕏 (I_r ⊗ P) − 𝐏 𝕏̂‖_F`.
    pub jacobian_embedding: f64,
    pub eq_residual: f64,
    pub hessian_min_eig: f64,
    /// How far the spectrum of `H*` leaves `[1 − δ, 1 + δ]`.
    pub bound_violation: f64,
}

impl LiftedReport {
    pub fn max_violation(&self) -> f64 {
        self.residual_embedding.max(self.jacobian_embedding).max(self.eq_residual).max(-self.hessian_min_eig).max(self.bound_violation).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub delta: f64,
    /// `‖𝕏^T H e‖` (normalized coordinates).
    pub primal_eq_residual: f64,
    pub hessian_min_eig: f64,
    /// `λ_min(H − (1 − δ)I)`.
    pub lower_bound_min_eig: f64,
    /// `λ_min((1 + δ)I − H)`.
    pub upper_bound_min_eig: f64,
    pub compact_min_eig: f64,
    pub dual: DualReport,
    /// `δ − tr(U₁ − U₂)`.
    pub gap: f64,
    /// Sum of `<block, dual>` over all PSD blocks.
    pub complementarity: f64,
    pub lifted: Option<LiftedReport>,
}

impl CertificateReport {
    pub fn primal_violation(&self) -> f64 {
        self.primal_eq_residual.max(-self.hessian_min_eig).max(-self.lower_bound_min_eig).max(-self.upper_bound_min_eig).max(-self.compact_min_eig).max(0.0)
    }

    pub fn max_violation(&self) -> f64 {
        let lifted = self.lifted.as_ref().map_or(0.0, LiftedReport::max_violation);
        self.primal_violation().max(self.dual.max_violation()).max(self.gap.abs()).max(self.complementarity.abs()).max(lifted)
    }
}

/// `δ(X, Z)`: reduce, build the upper problem and solve it.
pub fn delta_exact(x: &DenseMatrix, z: &DenseMatrix, opts: &SolverOptions) -> Result<SdpSolution> {
    check_pair(x, z)?;
    spurious_residual(x, z)?;
    let pair = reduce(x, z)?;
    build_upper_lmi(&pair)?.solve(opts)
}

/// `H* = 𝐏Ĥ𝐏^T + (I − 𝐏𝐏^T)` for a reduced solution.
pub fn lifted_kernel(sol: &SdpSolution, pair: &ReducedPair) -> Result<DenseMatrix> {
    let d2 = pair.d() * pair.d();
    if sol.h.shape() != (d2, d2) {
        return Err(Error::dim(format!("H has shape {:?}, expected {d2}x{d2}", sol.h.shape())));
    }
    let n2 = pair.n() * pair.n();
    let pp = kron(&pair.p, &pair.p);
    Ok(sym(&(&pp * &sol.h * pp.transpose() + DenseMatrix::identity(n2, n2) - &pp * pp.transpose())))
}

/// Worst-case operator `𝒜*` with `(𝐀*)^T 𝐀* = 𝐏Ĥ𝐏^T + (I − 𝐏𝐏^T)`.
///
/// Rows are `[𝐀̂ (P⊗P)^T; (P⊗P⊥)^T; (P⊥⊗P)^T; (P⊥⊗P⊥)^T]` where `𝐀̂^T 𝐀̂ = Ĥ`.
pub fn recover_minimizer(sol: &SdpSolution, pair: &ReducedPair) -> Result<MeasurementOperator> {
    if sol.status == LmiStatus::MaxIterations {
        return Err(Error::Certificate("solution did not converge".into()));
    }
    let d = pair.d();
    let n = pair.n();
    if sol.h.shape() != (d * d, d * d) {
        return Err(Error::dim(format!("H has shape {:?}, expected {}x{}", sol.h.shape(), d * d, d * d)));
    }
    let a_hat = linalg::factor_gram(&sol.h).map_err(|e| Error::Certificate(format!("cannot factor H: {e}")))?;
    let p = &pair.p;
    let p_perp = linalg::orth_complement(p);
    let pieces = [a_hat * kron(p, p).transpose(), kron(p, &p_perp).transpose(), kron(&p_perp, p).transpose(), kron(&p_perp, &p_perp).transpose()];
    let m: usize = pieces.iter().map(|b| b.nrows()).sum();
    if m == 0 {
        return Err(Error::Certificate("recovered operator has no measurements".into()));
    }
    let mut stacked = DenseMatrix::zeros(m, n * n);
    let mut row = 0;
    for piece in &pieces {
        stacked.rows_mut(row, piece.nrows()).copy_from(piece);
        row += piece.nrows();
    }
    MeasurementOperator::from_stacked(n, stacked)
}

/// Residuals of the upper problem on `pair` at `sol`, plus (for `n ≤ 12`)
/// the full-dimensional checks of the lifted kernel.
pub fn verify_certificates(sol: &SdpSolution, pair: &ReducedPair) -> Result<CertificateReport> {
    let problem = build_upper_lmi(pair)?;
    let mut report = problem.check(sol)?;
    if pair.n() <= LIFT_CHECK_MAX_N {
        report.lifted = Some(lifted_report(sol, pair, &problem)?);
    }
    Ok(report)
}

fn lifted_report(sol: &SdpSolution, pair: &ReducedPair, reduced: &LmiProblem) -> Result<LiftedReport> {
    // Same normalization as the reduced problem: X, Z scaled so ‖ê‖ = 1.
    let s = 1.0 / residual_vec(&pair.x_hat, &pair.z_hat).norm().sqrt();
    let x = pair.x() * s;
    let z = pair.z() * s;
    let e = residual_vec(&x, &z);
    let jac = jacobian_mat(&x);
    let (n, r) = x.shape();
    let pp = kron(&pair.p, &pair.p);
    let residual_embedding = (&e - &pp * reduced.normalized_e()).norm();
    let jacobian_embedding = (&jac * kron(&DenseMatrix::identity(r, r), &pair.p) - &pp * reduced.jacobian()).norm();
    let h = lifted_kernel(sol, pair)?;
    let he = &h * &e;
    let hess = sym(&(kron(&DenseMatrix::identity(r, r), &sym(&mat(&he, n, n))) * 2.0 + jac.transpose() * &h * &jac));
    let spec = linalg::sym_eig(&h)?;
    let bound_violation = ((1.0 - sol.delta) - spec.min()).max(spec.max() - (1.0 + sol.delta)).max(0.0);
    Ok(LiftedReport {
        residual_embedding,
        jacobian_embedding,
        eq_residual: (jac.transpose() * he).norm(),
        hessian_min_eig: linalg::min_eig(&hess),
        bound_violation,
    })
}
