//! Dense kernels for the small symmetric matrices that show up everywhere
//! else in the crate.
//!
//! Vectorization is column-major throughout: `vec(M)` stacks the columns of
//! `M`, and [`mat`] is its exact inverse. With this convention the Kronecker
//! identity reads `vec(A X B^T) = (B ⊗ A) vec(X)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type DenseMatrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative threshold (against the largest singular/eigen value) below which
/// a direction is treated as numerically zero.
pub const RANK_TOL: f64 = 1e-9;

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DenseMatrix::zeros(ar * br, ac * bc);
    for j in 0..ac {
        for i in 0..ar {
            let aij = a[(i, j)];
            if aij == 0.0 {
                continue;
            }
            let mut view = out.view_mut((i * br, j * bc), (br, bc));
            view.zip_apply(b, |o, bv| *o = aij * bv);
        }
    }
    out
}

/// Stacks the columns of `m` into a single vector.
pub fn vec(m: &DenseMatrix) -> Vector {
    Vector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec`].
pub fn mat(v: &Vector, rows: usize, cols: usize) -> DenseMatrix {
    assert_eq!(v.len(), rows * cols, "mat: length {} != {rows}x{cols}", v.len());
    DenseMatrix::from_column_slice(rows, cols, v.as_slice())
}

/// Symmetric part `(M + M^T) / 2`.
pub fn sym(m: &DenseMatrix) -> DenseMatrix {
    (m + m.transpose()) * 0.5
}

pub fn frob_dot(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.dot(b)
}

pub fn is_finite(m: &DenseMatrix) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Length of the symmetric vectorization of an `n x n` matrix.
pub fn svec_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Symmetric vectorization: lower triangle in column-major order with the
/// off-diagonal entries scaled by `√2`, so `svec(A)·svec(B) = <A, B>` for
/// symmetric `A`, `B`.
pub fn svec(m: &DenseMatrix) -> Vector {
    let n = m.nrows();
    let mut out = Vector::zeros(svec_len(n));
    let mut k = 0;
    for j in 0..n {
        out[k] = m[(j, j)];
        k += 1;
        for i in (j + 1)..n {
            out[k] = std::f64::consts::SQRT_2 * 0.5 * (m[(i, j)] + m[(j, i)]);
            k += 1;
        }
    }
    out
}

/// Inverse of [`svec`].
pub fn smat(v: &Vector, n: usize) -> DenseMatrix {
    assert_eq!(v.len(), svec_len(n));
    let mut out = DenseMatrix::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        out[(j, j)] = v[k];
        k += 1;
        for i in (j + 1)..n {
            let x = v[k] * std::f64::consts::FRAC_1_SQRT_2;
            out[(i, j)] = x;
            out[(j, i)] = x;
            k += 1;
        }
    }
    out
}

/// Orthonormal basis for the column space of `a`, with `rank(a)` columns.
///
/// Returns a matrix with zero columns when `a` is the zero matrix.
pub fn orth_basis(a: &DenseMatrix) -> DenseMatrix {
    orth_basis_tol(a, RANK_TOL)
}

/// [`orth_basis`] with an explicit relative singular-value cutoff.
pub fn orth_basis_tol(a: &DenseMatrix, rel_tol: f64) -> DenseMatrix {
    let rows = a.nrows();
    if a.ncols() == 0 || rows == 0 {
        return DenseMatrix::zeros(rows, 0);
    }
    let svd = thin_svd(a);
    let smax = svd.s.iter().cloned().fold(0.0_f64, f64::max);
    if smax == 0.0 || !smax.is_finite() {
        return DenseMatrix::zeros(rows, 0);
    }
    let k = svd.s.iter().filter(|&&v| v > rel_tol * smax).count();
    svd.u.columns(0, k).into_owned()
}

/// Thin singular value decomposition `A = U diag(s) V^T`, singular values
/// in descending order.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: DenseMatrix,
    pub s: Vector,
    pub v_t: DenseMatrix,
}

impl ThinSvd {
    /// Minimum-norm least-squares solution of `A x = b`, ignoring singular
    /// values at or below `eps`.
    pub fn solve(&self, b: &Vector, eps: f64) -> Vector {
        let mut c = self.u.transpose() * b;
        for (ci, &si) in c.iter_mut().zip(self.s.iter()) {
            *ci = if si > eps { *ci / si } else { 0.0 };
        }
        self.v_t.transpose() * c
    }

    fn defect(&self, a: &DenseMatrix) -> f64 {
        let mut us = self.u.clone();
        for (j, &sj) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(sj);
        }
        let k = self.s.len();
        let recompose = (a - us * &self.v_t).amax();
        let orth_u = (self.u.tr_mul(&self.u) - DenseMatrix::identity(k, k)).amax();
        let orth_v = (&self.v_t * self.v_t.transpose() - DenseMatrix::identity(k, k)).amax();
        let scale = a.amax().max(f64::MIN_POSITIVE);
        (recompose / scale).max(orth_u).max(orth_v)
    }

    fn sorted(mut self) -> Self {
        let mut order: Vec<usize> = (0..self.s.len()).collect();
        order.sort_by(|&i, &j| self.s[j].total_cmp(&self.s[i]));
        let u = DenseMatrix::from_fn(self.u.nrows(), order.len(), |r, c| self.u[(r, order[c])]);
        let v_t = DenseMatrix::from_fn(order.len(), self.v_t.ncols(), |r, c| self.v_t[(order[r], c)]);
        self.s = Vector::from_iterator(order.len(), order.iter().map(|&i| self.s[i]));
        self.u = u;
        self.v_t = v_t;
        self
    }
}

fn raw_svd(a: &DenseMatrix) -> Option<ThinSvd> {
    let svd = a.clone().svd(true, true);
    Some(ThinSvd { u: svd.u?, s: svd.singular_values, v_t: svd.v_t? })
}

/// Accepted relative defect of a computed SVD.
const SVD_DEFECT_TOL: f64 = 1e-10;

/// One-sided (Hestenes) Jacobi SVD of a matrix with at least as many rows
/// as columns.
fn jacobi_svd(a: &DenseMatrix) -> ThinSvd {
    let (m, k) = a.shape();
    let mut g = a.clone();
    let mut v = DenseMatrix::identity(k, k);
    for _ in 0..60 {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let alpha = g.column(p).norm_squared();
                let beta = g.column(q).norm_squared();
                let gamma = g.column(p).dot(&g.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut g, &mut v] {
                    for i in 0..mat.nrows() {
                        let (xp, xq) = (mat[(i, p)], mat[(i, q)]);
                        mat[(i, p)] = c * xp - s * xq;
                        mat[(i, q)] = s * xp + c * xq;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sv = Vector::from_iterator(k, g.column_iter().map(|c| c.norm()));
    let mut u = DenseMatrix::zeros(m, k);
    let mut zero = Vec::new();
    for j in 0..k {
        if sv[j] > 1e-300 {
            u.set_column(j, &(g.column(j) / sv[j]));
        } else {
            zero.push(j);
        }
    }
    if !zero.is_empty() {
        let kept: Vec<usize> = (0..k).filter(|j| !zero.contains(j)).collect();
        let basis = DenseMatrix::from_fn(m, kept.len(), |i, c| u[(i, kept[c])]);
        let fill = orth_complement(&basis);
        for (c, &j) in zero.iter().enumerate() {
            u.set_column(j, &fill.column(c));
        }
    }
    ThinSvd { u, s: sv, v_t: v.transpose() }
}

/// [`ThinSvd`] of `a`. The library SVD can return inconsistent singular
/// vectors when singular values repeat; its result is checked and, when
/// inaccurate, replaced by a Jacobi SVD of the triangular factor of a QR.
pub fn thin_svd(a: &DenseMatrix) -> ThinSvd {
    if let Some(svd) = raw_svd(a) {
        if svd.defect(a) <= SVD_DEFECT_TOL {
            return svd.sorted();
        }
    }
    let (rows, cols) = a.shape();
    if rows < cols {
        let t = thin_svd(&a.transpose());
        return ThinSvd { u: t.v_t.transpose(), s: t.s, v_t: t.u.transpose() };
    }
    let qr = a.clone().qr();
    let inner = jacobi_svd(&qr.r());
    ThinSvd { u: qr.q() * inner.u, s: inner.s, v_t: inner.v_t }.sorted()
}

/// Orthonormal basis of the orthogonal complement of `range(p)`, assuming
/// `p` already has orthonormal columns. `[p, p_perp]` is square orthogonal.
pub fn orth_complement(p: &DenseMatrix) -> DenseMatrix {
    let (n, k) = p.shape();
    if k == 0 {
        return DenseMatrix::identity(n, n);
    }
    if k >= n {
        return DenseMatrix::zeros(n, 0);
    }
    let qr = p.clone().qr();
    let mut qt = DenseMatrix::identity(n, n);
    qr.q_tr_mul(&mut qt);
    qt.rows(k, n - k).transpose()
}

/// Spectral decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEig {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors; column `i` pairs with `values[i]`.
    pub vectors: DenseMatrix,
}

impl SymEig {
    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Full eigendecomposition of (the symmetric part of) `m`.
pub fn sym_eig(m: &DenseMatrix) -> Result<SymEig> {
    if !m.is_square() {
        return Err(Error::dim(format!("sym_eig needs a square matrix, got {:?}", m.shape())));
    }
    if !is_finite(m) {
        return Err(Error::input("sym_eig: non-finite entries"));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(SymEig { values: Vec::new(), vectors: DenseMatrix::zeros(0, 0) });
    }
    let eig = SymmetricEigen::new(sym(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    Ok(SymEig { values, vectors })
}

/// Smallest eigenvalue of a symmetric matrix; `+inf` for an empty matrix.
pub fn min_eig(m: &DenseMatrix) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    match sym_eig(m) {
        Ok(e) => e.min(),
        Err(_) => f64::NAN,
    }
}

/// Splits `M = plus - minus` into its projections onto the PSD cone and its
/// negation, `plus = [M]_+` and `minus = [-M]_+`.
pub fn psd_split(m: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let eig = sym_eig(m)?;
    let n = m.nrows();
    let mut plus = DenseMatrix::zeros(n, n);
    let mut minus = DenseMatrix::zeros(n, n);
    for (i, &lam) in eig.values.iter().enumerate() {
        let v = eig.vectors.column(i);
        if lam > 0.0 {
            plus += lam * v * v.transpose();
        } else if lam < 0.0 {
            minus -= lam * v * v.transpose();
        }
    }
    Ok((plus, minus))
}

/// Returns `A` with `A^T A = H` for a positive semidefinite `H`.
///
/// A dense Cholesky factor is used when every pivot clears the rank
/// threshold; otherwise the factor is built from the eigendecomposition and
/// has one row per numerically nonzero eigenvalue.
pub fn factor_gram(h: &DenseMatrix) -> Result<DenseMatrix> {
    if !h.is_square() {
        return Err(Error::dim(format!("factor_gram needs a square matrix, got {:?}", h.shape())));
    }
    let n = h.nrows();
    let hs = sym(h);
    let eig = sym_eig(&hs)?;
    let scale = eig.spectral_radius();
    if scale == 0.0 {
        return Ok(DenseMatrix::zeros(0, n));
    }
    let tol = RANK_TOL * scale;
    if eig.min() < -tol {
        return Err(Error::NotPsd { min_eig: eig.min(), tol });
    }
    if let Some(ch) = hs.clone().cholesky() {
        let l = ch.l();
        let min_pivot = l.diagonal().iter().fold(f64::INFINITY, |m, d| m.min(d * d));
        if min_pivot >= tol {
            return Ok(l.transpose());
        }
    }
    let keep: Vec<usize> = (0..n).filter(|&i| eig.values[i] > tol).collect();
    let mut a = DenseMatrix::zeros(keep.len(), n);
    for (row, &i) in keep.iter().enumerate() {
        let s = eig.values[i].sqrt();
        for j in 0..n {
            a[(row, j)] = s * eig.vectors[(j, i)];
        }
    }
    Ok(a)
}

/// Builds a dense matrix from row-major nested vectors.
pub fn from_rows(rows: &[Vec<f64>]) -> Result<DenseMatrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::input("ragged nested array"));
    }
    let m = DenseMatrix::from_fn(r, c, |i, j| rows[i][j]);
    if !is_finite(&m) {
        return Err(Error::input("non-finite matrix entry"));
    }
    Ok(m)
}

/// Row-major nested vectors, the layout used by every JSON file.
pub fn to_rows(m: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DenseMatrix {
        DenseMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
        sym(&random(rng, n, n))
    }

    #[test]
    fn kron_identity_and_blocks() {
        let i2 = DenseMatrix::identity(2, 2);
        assert_eq!(kron(&i2, &i2), DenseMatrix::identity(4, 4));
        let a = DenseMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let k = kron(&a, &i2);
        #[rustfmt::skip]
        let expected = DenseMatrix::from_row_slice(4, 4, &[
            1.0, 0.0, 2.0, 0.0,
            0.0, 1.0, 0.0, 2.0,
            3.0, 0.0, 4.0, 0.0,
            0.0, 3.0, 0.0, 4.0,
        ]);
        assert_eq!(k, expected);
    }

    #[test]
    fn kron_vec_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let a = random(&mut rng, 3, 3);
            let b = random(&mut rng, 3, 3);
            let x = random(&mut rng, 3, 3);
            let lhs = vec(&(&a * &x * b.transpose()));
            let rhs = kron(&b, &a) * vec(&x);
            assert!((lhs - rhs).norm() <= 1e-12);
        }
    }

    #[test]
    fn svec_preserves_inner_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_sym(&mut rng, 5);
        let b = random_sym(&mut rng, 5);
        assert!((svec(&a).dot(&svec(&b)) - frob_dot(&a, &b)).abs() < 1e-13);
        assert!((smat(&svec(&a), 5) - &a).norm() < 1e-15);
    }

    #[test]
    fn orth_basis_examples() {
        let a = DenseMatrix::from_column_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let p = orth_basis(&a);
        assert_eq!(p.ncols(), 2);
        assert!(((p.transpose() * &p) - DenseMatrix::identity(2, 2)).norm() < 1e-12);
        assert!((p.column(0).abs() - a.column(0)).norm() < 1e-12 || (p.column(0).abs() - a.column(1)).norm() < 1e-12);

        let z = [0.6, 0.8];
        let a = DenseMatrix::from_column_slice(2, 2, &[z[0], z[1], 2.0 * z[0], 2.0 * z[1]]);
        let p = orth_basis(&a);
        assert_eq!(p.ncols(), 1);
        assert!((p[(0, 0)].abs() - 0.6).abs() < 1e-12 && (p[(1, 0)].abs() - 0.8).abs() < 1e-12);
        assert!(p[(0, 0)] * p[(1, 0)] > 0.0);

        assert_eq!(orth_basis(&DenseMatrix::zeros(3, 2)).ncols(), 0);
    }

    #[test]
    fn orth_basis_random_full_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random(&mut rng, 6, 3);
        let p = orth_basis(&a);
        assert_eq!(p.shape(), (6, 3));
        assert!((&p * p.transpose() * &a - &a).norm() <= 1e-10);
        assert!((p.transpose() * &p - DenseMatrix::identity(3, 3)).norm() <= 1e-10);
    }

    #[test]
    fn orth_complement_examples() {
        let e1 = DenseMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let c = orth_complement(&e1);
        assert_eq!(c.shape(), (2, 1));
        assert!((c[(0, 0)]).abs() < 1e-15 && (c[(1, 0)].abs() - 1.0).abs() < 1e-15);

        assert_eq!(orth_complement(&DenseMatrix::identity(3, 3)).ncols(), 0);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = orth_basis(&random(&mut rng, 5, 2));
        let c = orth_complement(&p);
        assert_eq!(c.shape(), (5, 3));
        assert!((p.transpose() * &c).norm() <= 1e-10);
        let full = DenseMatrix::from_fn(5, 5, |i, j| if j < 2 { p[(i, j)] } else { c[(i, j - 2)] });
        assert!((full.transpose() * &full - DenseMatrix::identity(5, 5)).norm() <= 1e-10);
    }

    #[test]
    fn sym_eig_examples() {
        let e = sym_eig(&DenseMatrix::from_diagonal(&Vector::from_vec(vec![1.0, 3.0]))).unwrap();
        assert_eq!(e.values, vec![3.0, 1.0]);
        assert!((e.vectors[(1, 0)].abs() - 1.0).abs() < 1e-15);

        let r = DenseMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let e = sym_eig(&r).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14 && (e.values[1] + 1.0).abs() < 1e-14);

        let a = Vector::from_vec(vec![1.0, 0.0]);
        let b = Vector::from_vec(vec![1.0, 1.0]) / 2f64.sqrt();
        let m = &a * b.transpose() + &b * a.transpose();
        let e = sym_eig(&m).unwrap();
        assert!((e.values[0] - 1.7071).abs() < 1e-4);
        assert!((e.values[1] + 0.2929).abs() < 1e-4);
    }

    #[test]
    fn sym_eig_rejects_non_finite() {
        let m = DenseMatrix::from_row_slice(2, 2, &[f64::NAN, 0.0, 0.0, 1.0]);
        assert!(matches!(sym_eig(&m), Err(Error::Input(_))));
    }

    #[test]
    fn sym_eig_decomposition_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in [1, 2, 5, 12] {
            let m = random_sym(&mut rng, n);
            let e = sym_eig(&m).unwrap();
            let v = &e.vectors;
            assert!((v.transpose() * v - DenseMatrix::identity(n, n)).norm() <= 1e-10);
            for i in 0..n {
                let r = &m * v.column(i) - e.values[i] * v.column(i);
                assert!(r.norm() <= 1e-9 * m.norm().max(1.0));
            }
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn psd_split_examples() {
        let m = DenseMatrix::from_diagonal(&Vector::from_vec(vec![1.0, -2.0]));
        let (p, q) = psd_split(&m).unwrap();
        assert!((p - DenseMatrix::from_diagonal(&Vector::from_vec(vec![1.0, 0.0]))).norm() < 1e-15);
        assert!((q - DenseMatrix::from_diagonal(&Vector::from_vec(vec![0.0, 2.0]))).norm() < 1e-15);

        let g = DenseMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let (p, q) = psd_split(&g).unwrap();
        assert!((p - &g).norm() < 1e-14 && q.norm() < 1e-14);

        let theta: f64 = 0.7;
        let a = Vector::from_vec(vec![1.0, 0.0, 0.0]);
        let b = Vector::from_vec(vec![theta.cos(), theta.sin(), 0.0]);
        let m = &a * b.transpose() + &b * a.transpose();
        let (p, q) = psd_split(&m).unwrap();
        assert!((p.trace() - (1.0 + theta.cos())).abs() < 1e-12);
        assert!((q.trace() - (1.0 - theta.cos())).abs() < 1e-12);
    }

    #[test]
    fn factor_gram_examples() {
        let a = factor_gram(&DenseMatrix::identity(4, 4)).unwrap();
        assert!((a.transpose() * &a - DenseMatrix::identity(4, 4)).norm() < 1e-14);

        let z = Vector::from_vec(vec![1.0, 2.0]);
        let a = factor_gram(&(&z * z.transpose())).unwrap();
        assert_eq!(a.nrows(), 1);
        assert!((a[(0, 0)].abs() - 1.0).abs() < 1e-12 && (a[(0, 1)].abs() - 2.0).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = random(&mut rng, 6, 6);
        let h = g.transpose() * &g;
        let a = factor_gram(&h).unwrap();
        assert!((a.transpose() * &a - &h).norm() <= 1e-10);

        let bad = DenseMatrix::from_diagonal(&Vector::from_vec(vec![1.0, -0.5]));
        assert!(matches!(factor_gram(&bad), Err(Error::NotPsd { .. })));
    }
}
