//! A family of 1/2-RIP operators, one for every rank-1 ground truth `z`,
//! under which `x = (‖z‖/√2)·u₂` is a spurious second-order critical point.
//!
//! With an orthonormal basis `u₁ = z/‖z‖, u₂, …, u_n` the `n²` measurement
//! matrices are
//!
//! ```text
//! A_1     = u₁u₁ᵀ + ½ u₂u₂ᵀ
//! A_2     = (√3/2)(u₁u₂ᵀ + u₂u₁ᵀ)
//! A_{n+1} = (1/√2)(u₁u₂ᵀ − u₂u₁ᵀ)
//! A_{n+2} = (√3/2) u₂u₂ᵀ
//! A_k     = u_i u_jᵀ,   k = i + n(j − 1), (i, j) ∉ {1, 2}²
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{min_eig, DenseMatrix, Vector};
use crate::objective::{evaluate, rip_constant_fullspace, MeasurementOperator, RecoveryInstance, Scale};

const ORTHO_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct ExampleInstance {
    pub n: usize,
    pub z: Vector,
    /// Columns `u₁, …, u_n`.
    pub basis: DenseMatrix,
    pub operator: MeasurementOperator,
    pub spurious_x: Vector,
}

impl ExampleInstance {
    /// The recovery instance with ground truth `z` under the given scale.
    pub fn instance(&self, scale: Scale) -> RecoveryInstance {
        RecoveryInstance::new(self.operator.clone(), column(&self.z), scale).expect("shapes agree by construction")
    }
}

/// Builds the example with `u₂, …, u_n` completed from seeded Gaussian
/// draws.
pub fn generate_example(z: &Vector, seed: u64) -> Result<ExampleInstance> {
    check_z(z)?;
    let basis = seeded_basis(z, seed);
    build(z, basis)
}

/// Builds the example over a caller-supplied orthonormal basis whose first
/// column is `z/‖z‖`.
pub fn generate_with_basis(z: &Vector, basis: DenseMatrix) -> Result<ExampleInstance> {
    check_z(z)?;
    let n = z.len();
    if basis.shape() != (n, n) {
        return Err(Error::dim(format!("basis must be {n}x{n}, got {}x{}", basis.nrows(), basis.ncols())));
    }
    let gram_err = (basis.transpose() * &basis - DenseMatrix::identity(n, n)).norm();
    if gram_err > ORTHO_TOL {
        return Err(Error::input(format!("basis is not orthonormal (error {gram_err:.3e})")));
    }
    let first_err = (basis.column(0) - z / z.norm()).norm();
    if first_err > ORTHO_TOL {
        return Err(Error::input("first basis vector must be z/‖z‖"));
    }
    build(z, basis)
}

fn check_z(z: &Vector) -> Result<()> {
    if z.len() < 2 {
        return Err(Error::input(format!("dimension must be at least 2, got {}", z.len())));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("z has a non-finite entry"));
    }
    if z.norm() == 0.0 {
        return Err(Error::input("z must be nonzero"));
    }
    Ok(())
}

fn seeded_basis(z: &Vector, seed: u64) -> DenseMatrix {
    let n = z.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols: Vec<Vector> = vec![z / z.norm()];
    while cols.len() < n {
        let mut v = Vector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let scale = v.norm();
        for _ in 0..2 {
            for u in &cols {
                let p = u.dot(&v);
                v -= u * p;
            }
        }
        let norm = v.norm();
        if norm > 1e-6 * scale {
            cols.push(v / norm);
        }
    }
    DenseMatrix::from_columns(&cols)
}

fn build(z: &Vector, basis: DenseMatrix) -> Result<ExampleInstance> {
    let n = z.len();
    let u = |i: usize| basis.column(i).into_owned();
    let outer = |i: usize, j: usize| u(i) * u(j).transpose();
    let s3 = 3f64.sqrt() / 2.0;
    let mut matrices = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let a = match (i, j) {
                (0, 0) => outer(0, 0) + outer(1, 1) * 0.5,
                (1, 0) => (outer(0, 1) + outer(1, 0)) * s3,
                (0, 1) => (outer(0, 1) - outer(1, 0)) * std::f64::consts::FRAC_1_SQRT_2,
                (1, 1) => outer(1, 1) * s3,
                _ => outer(i, j),
            };
            matrices.push(a);
        }
    }
    let operator = MeasurementOperator::from_matrices(matrices)?;
    let spurious_x = u(1) * (z.norm() / 2f64.sqrt());
    Ok(ExampleInstance { n, z: z.clone(), basis, operator, spurious_x })
}

fn column(v: &Vector) -> DenseMatrix {
    DenseMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

/// Numerical check of every claimed property, in the `c = 1` convention.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleReport {
    pub rip: f64,
    pub f_value: f64,
    /// `‖M*‖_F² = ‖z‖⁴`.
    pub truth_norm_sq: f64,
    pub grad_norm: f64,
    pub hess_min_eig: f64,
    /// `λ_min(∇²f(x) − 8xxᵀ)`.
    pub hess_shifted_min_eig: f64,
    pub f_truth: f64,
    pub grad_truth_norm: f64,
    pub failures: Vec<String>,
}

impl ExampleReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn verify_example(inst: &ExampleInstance) -> Result<ExampleReport> {
    let rec = inst.instance(Scale::One);
    let x = column(&inst.spurious_x);
    let at_x = evaluate(&rec, &x)?;
    let at_z = evaluate(&rec, &column(&inst.z))?;
    let truth_norm_sq = inst.z.norm().powi(4);
    let shifted = &at_x.hess - &x * x.transpose() * 8.0;
    let report = ExampleReport {
        rip: rip_constant_fullspace(&inst.operator),
        f_value: at_x.f,
        truth_norm_sq,
        grad_norm: at_x.grad.norm(),
        hess_min_eig: min_eig(&at_x.hess),
        hess_shifted_min_eig: min_eig(&shifted),
        f_truth: at_z.f,
        grad_truth_norm: at_z.grad.norm(),
        failures: Vec::new(),
    };
    let scale = truth_norm_sq.max(1.0);
    let mut failures = Vec::new();
    if (report.rip - 0.5).abs() > 1e-9 {
        failures.push(format!("RIP constant {} differs from 0.5", report.rip));
    }
    if (report.f_value - 0.75 * truth_norm_sq).abs() > 1e-9 * scale {
        failures.push(format!("f(x) = {} differs from 0.75·‖M*‖² = {}", report.f_value, 0.75 * truth_norm_sq));
    }
    if report.grad_norm > 1e-9 * scale {
        failures.push(format!("‖∇f(x)‖ = {:e} is not zero", report.grad_norm));
    }
    if report.hess_shifted_min_eig < -1e-8 * scale {
        failures.push(format!("∇²f(x) − 8xxᵀ has eigenvalue {:e}", report.hess_shifted_min_eig));
    }
    if report.f_truth.abs() > 1e-12 * scale {
        failures.push(format!("f(z) = {:e} is not zero", report.f_truth));
    }
    if report.grad_truth_norm > 1e-9 * scale {
        failures.push(format!("‖∇f(z)‖ = {:e} is not zero", report.grad_truth_norm));
    }
    Ok(ExampleReport { failures, ..report })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical() -> ExampleInstance {
        generate_with_basis(&Vector::from_vec(vec![1.0, 0.0]), DenseMatrix::identity(2, 2)).unwrap()
    }

    #[test]
    fn canonical_matrices() {
        let inst = canonical();
        let a = inst.operator.matrices();
        let s3 = 3f64.sqrt() / 2.0;
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let expect = [
            DenseMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.5]),
            DenseMatrix::from_row_slice(2, 2, &[0.0, s3, s3, 0.0]),
            DenseMatrix::from_row_slice(2, 2, &[0.0, r, -r, 0.0]),
            DenseMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, s3]),
        ];
        for (got, want) in a.iter().zip(&expect) {
            assert!((got - want).norm() < 1e-15, "{got} vs {want}");
        }
        assert!((inst.spurious_x[1].abs() - r).abs() < 1e-15);
    }

    #[test]
    fn canonical_derivatives() {
        let inst = canonical();
        let rec = inst.instance(Scale::One);
        let ev = evaluate(&rec, &column(&inst.spurious_x)).unwrap();
        assert!((ev.f - 0.75).abs() < 1e-14);
        assert!(ev.grad.norm() < 1e-14);
        assert!((ev.hess.clone() - DenseMatrix::from_diagonal(&Vector::from_vec(vec![0.0, 4.0]))).norm() < 1e-13);
        assert!(verify_example(&inst).unwrap().passed());
    }

    #[test]
    fn special_indices_n3() {
        let inst = generate_example(&Vector::from_vec(vec![1.0, 2.0, -1.0]), 3).unwrap();
        assert_eq!(inst.operator.m(), 9);
        let u = &inst.basis;
        for (k, a) in inst.operator.matrices().iter().enumerate() {
            let (i, j) = (k % 3, k / 3);
            if i < 2 && j < 2 {
                assert!([0, 1, 3, 4].contains(&k));
            } else {
                let want = u.column(i) * u.column(j).transpose();
                assert!((a - want).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn basis_is_orthonormal_and_seeded() {
        let z = Vector::from_vec(vec![0.3, -1.0, 2.0, 0.5, 0.1]);
        let a = generate_example(&z, 11).unwrap();
        let b = generate_example(&z, 11).unwrap();
        assert_eq!(a.basis, b.basis);
        assert!((a.basis.transpose() * &a.basis - DenseMatrix::identity(5, 5)).norm() < 1e-12);
        assert!(verify_example(&a).unwrap().passed());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(generate_example(&Vector::from_vec(vec![1.0]), 0), Err(Error::Input(_))));
        assert!(matches!(generate_example(&Vector::zeros(3), 0), Err(Error::Input(_))));
        let z = Vector::from_vec(vec![1.0, 0.0]);
        let bad = DenseMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(generate_with_basis(&z, bad).is_err());
    }
}
