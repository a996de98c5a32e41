//! The nonconvex recovery objective `f(X) = c·‖𝒜(XX^T − ZZ^T)‖²` and its
//! derivatives, written in terms of the residual `e = vec(XX^T − M*)` and
//! the Jacobian `𝕏` with `𝕏 vec(U) = vec(XU^T + UX^T)`.
//!
//! With `H = 𝐀^T 𝐀` and scale `c`:
//!
//! ```text
//! f      = c · e^T H e
//! ∇f     = 2c · mat(𝕏^T H e)
//! ∇²f    = 2c · (2 [I_r ⊗ sym(mat(H e))] + 𝕏^T H 𝕏)
//! ```
//!
//! `c = 1/2` is the textbook normalization; `c = 1` matches the way the
//! counterexample family and the sharp thresholds are usually quoted.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, kron, mat, sym, vec, DenseMatrix, Vector};

/// Objective multiplier `c` in `f = c·‖𝒜(XX^T − M*)‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub enum Scale {
    Half,
    One,
}

impl Scale {
    pub fn value(self) -> f64 {
        match self {
            Scale::Half => 0.5,
            Scale::One => 1.0,
        }
    }
}

impl TryFrom<f64> for Scale {
    type Error = String;

    fn try_from(v: f64) -> std::result::Result<Self, String> {
        if v == 0.5 {
            Ok(Scale::Half)
        } else if v == 1.0 {
            Ok(Scale::One)
        } else {
            Err(format!("scale must be 0.5 or 1, got {v}"))
        }
    }
}

impl From<Scale> for f64 {
    fn from(s: Scale) -> f64 {
        s.value()
    }
}

/// Linear measurement operator `𝒜(M) = (<A_1, M>, …, <A_m, M>)`.
///
/// Row `i` of the stacked `m x n²` matrix is `vec(A_i)^T`.
#[derive(Debug, Clone)]
pub struct MeasurementOperator {
    n: usize,
    matrices: Vec<DenseMatrix>,
    stacked: DenseMatrix,
}

impl MeasurementOperator {
    pub fn from_matrices(matrices: Vec<DenseMatrix>) -> Result<Self> {
        let first = matrices.first().ok_or_else(|| Error::input("operator needs at least one measurement"))?;
        let n = first.nrows();
        if n == 0 {
            return Err(Error::input("measurement matrices must be non-empty"));
        }
        for (k, a) in matrices.iter().enumerate() {
            if a.shape() != (n, n) {
                return Err(Error::dim(format!("measurement {k} has shape {:?}, expected ({n}, {n})", a.shape())));
            }
            if !linalg::is_finite(a) {
                return Err(Error::input(format!("measurement {k} has non-finite entries")));
            }
        }
        let mut stacked = DenseMatrix::zeros(matrices.len(), n * n);
        for (k, a) in matrices.iter().enumerate() {
            stacked.row_mut(k).copy_from_slice(a.as_slice());
        }
        Ok(Self { n, matrices, stacked })
    }

    pub fn from_stacked(n: usize, stacked: DenseMatrix) -> Result<Self> {
        if stacked.ncols() != n * n {
            return Err(Error::dim(format!("stacked operator has {} columns, expected {}", stacked.ncols(), n * n)));
        }
        if stacked.nrows() == 0 {
            return Err(Error::input("operator needs at least one measurement"));
        }
        if !linalg::is_finite(&stacked) {
            return Err(Error::input("stacked operator has non-finite entries"));
        }
        let matrices = (0..stacked.nrows()).map(|k| mat(&stacked.row(k).transpose(), n, n)).collect();
        Ok(Self { n, matrices, stacked })
    }

    /// The identity operator on `n x n` matrices (`𝐀 = I`).
    pub fn identity(n: usize) -> Self {
        Self::from_stacked(n, DenseMatrix::identity(n * n, n * n)).expect("identity is well formed")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrices(&self) -> &[DenseMatrix] {
        &self.matrices
    }

    pub fn stacked(&self) -> &DenseMatrix {
        &self.stacked
    }

    pub fn apply(&self, m: &DenseMatrix) -> Vector {
        &self.stacked * vec(m)
    }

    /// Kernel matrix `H = 𝐀^T 𝐀`.
    pub fn gram(&self) -> DenseMatrix {
        self.stacked.transpose() * &self.stacked
    }

    /// Eigenvalues of `𝐀^T 𝐀`, descending. Includes the zeros contributed by
    /// a short operator (`m < n²`).
    pub fn gram_spectrum(&self) -> Vec<f64> {
        let n2 = self.n * self.n;
        if self.m() >= n2 {
            linalg::sym_eig(&self.gram()).expect("finite by construction").values
        } else {
            let small = &self.stacked * self.stacked.transpose();
            let mut values = linalg::sym_eig(&small).expect("finite by construction").values;
            values.resize(n2, 0.0);
            values
        }
    }
}

/// A recovery problem: operator, ground-truth factor and objective scale.
#[derive(Debug, Clone)]
pub struct RecoveryInstance {
    pub operator: MeasurementOperator,
    pub z: DenseMatrix,
    pub scale: Scale,
}

impl RecoveryInstance {
    pub fn new(operator: MeasurementOperator, z: DenseMatrix, scale: Scale) -> Result<Self> {
        if z.nrows() != operator.n() {
            return Err(Error::dim(format!("Z has {} rows but the operator acts on {}x{} matrices", z.nrows(), operator.n(), operator.n())));
        }
        if z.ncols() == 0 {
            return Err(Error::input("Z needs at least one column"));
        }
        if !linalg::is_finite(&z) {
            return Err(Error::input("Z has non-finite entries"));
        }
        Ok(Self { operator, z, scale })
    }

    pub fn n(&self) -> usize {
        self.operator.n()
    }

    pub fn r(&self) -> usize {
        self.z.ncols()
    }

    /// `M* = ZZ^T`.
    pub fn ground_truth(&self) -> DenseMatrix {
        &self.z * self.z.transpose()
    }

    fn check_point(&self, x: &DenseMatrix) -> Result<()> {
        if x.shape() != self.z.shape() {
            return Err(Error::dim(format!("X has shape {:?}, expected {:?}", x.shape(), self.z.shape())));
        }
        if !linalg::is_finite(x) {
            return Err(Error::input("X has non-finite entries"));
        }
        Ok(())
    }
}

/// `e = vec(XX^T − ZZ^T)`.
pub fn residual_vec(x: &DenseMatrix, z: &DenseMatrix) -> Vector {
    vec(&(x * x.transpose() - z * z.transpose()))
}

/// The `n² x nr` Jacobian of `e`: `𝕏 vec(U) = vec(XU^T + UX^T)`.
pub fn jacobian_mat(x: &DenseMatrix) -> DenseMatrix {
    let (n, r) = x.shape();
    let mut out = DenseMatrix::zeros(n * n, n * r);
    for j in 0..r {
        for i in 0..n {
            let col = i + n * j;
            for a in 0..n {
                let v = x[(a, j)];
                out[(a + n * i, col)] += v;
                out[(i + n * a, col)] += v;
            }
        }
    }
    out
}

/// Value, gradient (`n x r`) and Hessian (`nr x nr`) of the objective.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub f: f64,
    pub grad: DenseMatrix,
    pub hess: DenseMatrix,
}

pub fn evaluate(inst: &RecoveryInstance, x: &DenseMatrix) -> Result<Evaluation> {
    inst.check_point(x)?;
    let (n, r) = x.shape();
    let c = inst.scale.value();
    let a = inst.operator.stacked();
    let e = residual_vec(x, &inst.z);
    let ae = a * &e;
    let ax = a * jacobian_mat(x);
    let he = a.transpose() * &ae;
    let s = sym(&mat(&he, n, n));

    let f = c * ae.norm_squared();
    let grad = mat(&(2.0 * c * (ax.transpose() * &ae)), n, r);
    let hess = 2.0 * c * (2.0 * kron(&DenseMatrix::identity(r, r), &s) + ax.transpose() * &ax);
    Ok(Evaluation { f, grad, hess: sym(&hess) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalityCertificate {
    pub f_value: f64,
    pub grad_norm: f64,
    pub hess_min_eig: f64,
    pub is_second_order: bool,
    pub tol_g: f64,
    pub tol_h: f64,
}

/// Relative tolerances `tol_g = 1e-8·(1 + ‖𝐀‖²‖e‖)`, `tol_h = 1e-8·(1 + ‖𝐀‖²)`
/// with `‖𝐀‖` the spectral norm.
pub fn default_tolerances(inst: &RecoveryInstance, x: &DenseMatrix) -> (f64, f64) {
    let a2 = inst.operator.gram_spectrum().first().copied().unwrap_or(0.0).max(0.0);
    let e = residual_vec(x, &inst.z).norm();
    (1e-8 * (1.0 + a2 * e), 1e-8 * (1.0 + a2))
}

pub fn criticality_certificate(inst: &RecoveryInstance, x: &DenseMatrix, tol_g: f64, tol_h: f64) -> Result<CriticalityCertificate> {
    if !(tol_g > 0.0 && tol_h > 0.0) {
        return Err(Error::input("criticality tolerances must be positive"));
    }
    let ev = evaluate(inst, x)?;
    let grad_norm = ev.grad.norm();
    let hess_min_eig = linalg::min_eig(&ev.hess);
    Ok(CriticalityCertificate { f_value: ev.f, grad_norm, hess_min_eig, is_second_order: grad_norm <= tol_g && hess_min_eig >= -tol_h, tol_g, tol_h })
}

/// Smallest `δ` with `(1−δ)I ⪯ 𝐀^T𝐀 ⪯ (1+δ)I`, i.e. the RIP inequality
/// enforced over every `n x n` matrix. This certifies `δ`-RIP (it is a
/// sufficient condition, not the rank-restricted constant).
pub fn rip_constant_fullspace(op: &MeasurementOperator) -> f64 {
    let spec = op.gram_spectrum();
    let hi = spec.first().copied().unwrap_or(0.0);
    let lo = spec.last().copied().unwrap_or(0.0);
    (1.0 - lo).max(hi - 1.0).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn col(v: &[f64]) -> DenseMatrix {
        DenseMatrix::from_column_slice(v.len(), 1, v)
    }

    /// The 2x2 operator with a spurious point at (0, 1/√2).
    fn two_by_two(scale: Scale) -> RecoveryInstance {
        let s3 = 3f64.sqrt() / 2.0;
        let a = vec![
            DenseMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.5]),
            DenseMatrix::from_row_slice(2, 2, &[0.0, s3, s3, 0.0]),
            DenseMatrix::from_row_slice(2, 2, &[0.0, -FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0]),
            DenseMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, s3]),
        ];
        RecoveryInstance::new(MeasurementOperator::from_matrices(a).unwrap(), col(&[1.0, 0.0]), scale).unwrap()
    }

    #[test]
    fn residual_examples() {
        let z = col(&[1.0, 0.0]);
        assert_eq!(residual_vec(&z, &z).norm(), 0.0);
        let x = col(&[0.0, FRAC_1_SQRT_2]);
        let e = residual_vec(&x, &z);
        let expected = [-1.0, 0.0, 0.0, 0.5];
        for (a, b) in e.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((e.norm() - 5f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn jacobian_examples() {
        let j = jacobian_mat(&col(&[1.0, 0.0]));
        assert_eq!(j.column(0).as_slice(), &[2.0, 0.0, 0.0, 0.0]);
        assert_eq!(j.column(1).as_slice(), &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(jacobian_mat(&DenseMatrix::zeros(3, 2)).norm(), 0.0);
    }

    #[test]
    fn jacobian_matches_definition() {
        let x = DenseMatrix::from_fn(4, 2, |i, j| (i as f64 + 1.0) * if j == 0 { 0.3 } else { -0.7 });
        let u = DenseMatrix::from_fn(4, 2, |i, j| (i * 2 + j) as f64 * 0.1 - 0.2);
        let lhs = jacobian_mat(&x) * vec(&u);
        let rhs = vec(&(&x * u.transpose() + &u * x.transpose()));
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn jacobian_singular_values_rank_one() {
        let x = col(&[0.3, -1.2, 0.5, 2.0]);
        let j = jacobian_mat(&x);
        let mut sv: Vec<f64> = j.clone().svd(false, false).singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        let nx = x.norm();
        assert!((sv[0] - 2.0 * nx).abs() < 1e-9);
        for s in &sv[1..] {
            assert!((s - 2f64.sqrt() * nx).abs() < 1e-9);
        }
    }

    #[test]
    fn evaluate_zero_residual() {
        let inst = two_by_two(Scale::One);
        let ev = evaluate(&inst, &col(&[-1.0, 0.0])).unwrap();
        assert_eq!(ev.f, 0.0);
        assert!(ev.grad.norm() < 1e-15);
    }

    #[test]
    fn evaluate_spurious_point_both_scales() {
        let x = col(&[0.0, FRAC_1_SQRT_2]);
        let ev = evaluate(&two_by_two(Scale::One), &x).unwrap();
        assert!((ev.f - 0.75).abs() < 1e-12);
        assert!(ev.grad.norm() < 1e-12);
        let expected = DenseMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 4.0]);
        assert!((&ev.hess - expected).norm() < 1e-12);

        let ev = evaluate(&two_by_two(Scale::Half), &x).unwrap();
        assert!((ev.f - 0.375).abs() < 1e-12);
        let expected = DenseMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 2.0]);
        assert!((&ev.hess - expected).norm() < 1e-12);
    }

    #[test]
    fn criticality_examples() {
        let inst = two_by_two(Scale::One);
        let z = inst.z.clone();
        let (tg, th) = default_tolerances(&inst, &z);
        let cert = criticality_certificate(&inst, &z, tg, th).unwrap();
        assert!(cert.is_second_order && cert.f_value == 0.0);

        let x = col(&[0.0, FRAC_1_SQRT_2]);
        let (tg, th) = default_tolerances(&inst, &x);
        let cert = criticality_certificate(&inst, &x, tg, th).unwrap();
        assert!(cert.is_second_order);
        assert!((cert.f_value - 0.75 * inst.ground_truth().norm_squared()).abs() < 1e-12);

        let half = &z * 0.5;
        let (tg, th) = default_tolerances(&inst, &half);
        let cert = criticality_certificate(&inst, &half, tg, th).unwrap();
        assert!(!cert.is_second_order && cert.grad_norm > 0.1);

        assert!(criticality_certificate(&inst, &x, 0.0, 1.0).is_err());
    }

    #[test]
    fn rip_examples() {
        assert_eq!(rip_constant_fullspace(&MeasurementOperator::identity(3)), 0.0);
        let d = DenseMatrix::from_diagonal(&Vector::from_vec(vec![0.5f64.sqrt(), 1.5f64.sqrt(), 1.0, 1.0]));
        let op = MeasurementOperator::from_stacked(2, d).unwrap();
        assert!((rip_constant_fullspace(&op) - 0.5).abs() < 1e-14);
        assert!((rip_constant_fullspace(&two_by_two(Scale::One).operator) - 0.5).abs() < 1e-12);
        // a short operator has a nontrivial kernel
        let short = MeasurementOperator::from_stacked(2, DenseMatrix::identity(3, 4)).unwrap();
        assert!((rip_constant_fullspace(&short) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn shape_errors() {
        let inst = two_by_two(Scale::One);
        assert!(matches!(evaluate(&inst, &col(&[1.0, 2.0, 3.0])), Err(Error::Dimension(_))));
        assert!(MeasurementOperator::from_matrices(vec![]).is_err());
        assert!(Scale::try_from(2.0).is_err());
    }
}
