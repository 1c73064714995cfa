//! Dense symmetric linear algebra sized for kernel matrices.
//!
//! Row-major matrices, a cyclic Jacobi eigensolver, and the positive
//! semidefinite square-root factor used to shape Gaussian draws. Jacobi is
//! exact enough and dependency-free at the sizes that occur here (alphabet
//! kernels m ≤ 256, feature Grams up to a few thousand); it is O(n³) per
//! sweep, so it is not meant for large general eigenproblems.

use alloc::vec;
use alloc::vec::Vec;
use libm::{fabs, sqrt};

use crate::rng::GaussianField;

/// Row-major dense matrix of f64.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Build from a flat row-major slice; `data.len()` must equal rows·cols.
    pub fn from_data(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "shape mismatch");
        DenseMatrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transposed(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    /// Matrix product self · other.
    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        // ikj order keeps the inner loop contiguous in both inputs.
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &v| if fabs(v) > m { fabs(v) } else { m })
    }

    pub fn frobenius_norm(&self) -> f64 {
        sqrt(self.data.iter().map(|v| v * v).sum())
    }

    /// Largest |A(i,j) − A(j,i)| over i<j (0 for symmetric matrices).
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols.min(self.rows) {
                let d = fabs(self.get(i, j) - self.get(j, i));
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }
}

/// Eigendecomposition of a symmetric matrix: values in non-increasing order,
/// eigenvectors as the corresponding columns.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

/// Result of factoring a PSD (up to truncation) matrix W ≈ FᵀF.
#[derive(Clone, Debug)]
pub struct PsdFactor {
    /// F = S₊^{1/2} Qᵀ, so columns of F have Gram matrix Q S₊ Qᵀ.
    pub factor: DenseMatrix,
    pub min_eigenvalue: f64,
    /// True iff an eigenvalue below −tol was clipped to zero.
    pub truncated: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum NumericsError {
    NotSquare { rows: usize, cols: usize },
    NotSymmetric { max_asymmetry: f64 },
    NoConvergence { sweeps: usize },
    ShapeOverflow { rows: usize, cols: usize },
}

impl core::fmt::Display for NumericsError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            NumericsError::NotSquare { rows, cols } => {
                write!(f, "matrix is {rows}x{cols}, expected square")
            }
            NumericsError::NotSymmetric { max_asymmetry } => {
                write!(f, "matrix is not symmetric (max |A - A^T| = {max_asymmetry:e})")
            }
            NumericsError::NoConvergence { sweeps } => {
                write!(f, "Jacobi did not converge within {sweeps} sweeps")
            }
            NumericsError::ShapeOverflow { rows, cols } => {
                write!(f, "{rows}x{cols} does not fit in memory indices")
            }
        }
    }
}

const MAX_SWEEPS: usize = 100;
const SYMMETRY_TOL: f64 = 1e-12;

/// Standard Gaussian matrix; entry (r, c) is a pure function of (seed, r, c).
pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Result<DenseMatrix, NumericsError> {
    rows.checked_mul(cols).ok_or(NumericsError::ShapeOverflow { rows, cols })?;
    let field = GaussianField::new(seed);
    let mut m = DenseMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            m.set(r, c, field.at(r as u64, c as u64));
        }
    }
    Ok(m)
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Sweeps stop once the off-diagonal Frobenius mass drops below
/// tol·‖A‖_F (pass tol = 1e−12 for full accuracy). Values are returned in
/// non-increasing order with matching eigenvector columns.
pub fn sym_eigen(a: &DenseMatrix, tol: f64) -> Result<EigenDecomposition, NumericsError> {
    if a.rows() != a.cols() {
        return Err(NumericsError::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    let asym = a.max_asymmetry();
    if asym > SYMMETRY_TOL * (1.0 + a.max_abs()) {
        return Err(NumericsError::NotSymmetric { max_asymmetry: asym });
    }

    let n = a.rows();
    let mut m = a.clone();
    let mut q = DenseMatrix::identity(n);
    if n == 0 {
        return Ok(EigenDecomposition { values: Vec::new(), vectors: q });
    }
    let scale = a.frobenius_norm();
    if scale == 0.0 {
        return Ok(EigenDecomposition { values: vec![0.0; n], vectors: q });
    }
    let threshold = tol * scale;

    let off = |m: &DenseMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += m.get(i, j) * m.get(i, j);
            }
        }
        sqrt(2.0 * s)
    };

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off(&m) <= threshold {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for qq in (p + 1)..n {
                let apq = m.get(p, qq);
                if fabs(apq) == 0.0 {
                    continue;
                }
                // Classic two-sided rotation (Numerical Recipes parametrization):
                // choose t = tan θ of smaller magnitude for stability.
                let theta = (m.get(qq, qq) - m.get(p, p)) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + sqrt(theta * theta + 1.0))
                } else {
                    -1.0 / (-theta + sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / sqrt(t * t + 1.0);
                let s = t * c;

                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, qq);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, qq, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(qq, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(qq, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let qkp = q.get(k, p);
                    let qkq = q.get(k, qq);
                    q.set(k, p, c * qkp - s * qkq);
                    q.set(k, qq, s * qkp + c * qkq);
                }
            }
        }
    }
    if !converged && off(&m) > threshold {
        return Err(NumericsError::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(j, j).partial_cmp(&m.get(i, i)).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| m.get(i, i)).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (new_c, &old_c) in order.iter().enumerate() {
        for r in 0..n {
            vectors.set(r, new_c, q.get(r, old_c));
        }
    }
    Ok(EigenDecomposition { values, vectors })
}

/// Factor a symmetric matrix W as FᵀF with F = S₊^{1/2} Qᵀ, clipping negative
/// eigenvalues to zero. `truncated` reports whether anything below −tol was
/// clipped; when min eigenvalue ≥ −tol the reconstruction error stays small.
pub fn psd_factor(w: &DenseMatrix, tol: f64) -> Result<PsdFactor, NumericsError> {
    let eig = sym_eigen(w, 1e-12)?;
    let n = w.rows();
    let min_eigenvalue = eig.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut factor = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let s = if eig.values[i] > 0.0 { sqrt(eig.values[i]) } else { 0.0 };
        for j in 0..n {
            factor.set(i, j, s * eig.vectors.get(j, i));
        }
    }
    Ok(PsdFactor { factor, min_eigenvalue, truncated: min_eigenvalue < -tol })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(e: &EigenDecomposition) -> DenseMatrix {
        let n = e.values.len();
        let mut s = DenseMatrix::zeros(n, n);
        for i in 0..n {
            s.set(i, i, e.values[i]);
        }
        e.vectors.matmul(&s).matmul(&e.vectors.transposed())
    }

    #[test]
    fn eigen_of_diagonal_matrix() {
        let mut a = DenseMatrix::zeros(3, 3);
        a.set(0, 0, -1.0);
        a.set(1, 1, 5.0);
        a.set(2, 2, 2.0);
        let e = sym_eigen(&a, 1e-12).unwrap();
        assert_eq!(e.values, vec![5.0, 2.0, -1.0]);
    }

    #[test]
    fn eigen_two_by_two_known_values() {
        // [[2,1],[1,2]] has eigenvalues 3 and 1.
        let a = DenseMatrix::from_data(2, 2, vec![2.0, 1.0, 1.0, 2.0]);
        let e = sym_eigen(&a, 1e-12).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-12);
        assert!((e.values[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigen_reconstructs_and_is_orthonormal() {
        // Deterministic symmetric test matrix with spread eigenvalues.
        let n = 24;
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let v = 1.0 / (1.0 + (i as f64 - j as f64).abs()) + if i == j { i as f64 * 0.1 } else { 0.0 };
                a.set(i, j, v);
            }
        }
        let e = sym_eigen(&a, 1e-12).unwrap();

        let qtq = e.vectors.transposed().matmul(&e.vectors);
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((qtq.get(i, j) - want).abs());
            }
        }
        assert!(worst <= 1e-9, "orthonormality error {worst:e}");

        let r = reconstruct(&e);
        let mut err = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                err = err.max((r.get(i, j) - a.get(i, j)).abs());
            }
        }
        assert!(err <= 1e-8 * (1.0 + a.max_abs()), "reconstruction error {err:e}");

        for k in 1..n {
            assert!(e.values[k - 1] >= e.values[k]);
        }
    }

    #[test]
    fn eigen_rejects_nonsquare_and_asymmetric() {
        let a = DenseMatrix::zeros(2, 3);
        assert!(matches!(sym_eigen(&a, 1e-12), Err(NumericsError::NotSquare { .. })));
        let mut b = DenseMatrix::zeros(2, 2);
        b.set(0, 1, 1.0);
        assert!(matches!(sym_eigen(&b, 1e-12), Err(NumericsError::NotSymmetric { .. })));
    }

    #[test]
    fn eigen_handles_zero_matrix() {
        let e = sym_eigen(&DenseMatrix::zeros(4, 4), 1e-12).unwrap();
        assert_eq!(e.values, vec![0.0; 4]);
    }

    #[test]
    fn psd_factor_reconstructs_psd_matrix() {
        // Gaussian-kernel Gram matrix: PSD with fast-decaying spectrum.
        let n = 16;
        let mut w = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let d = i as f64 - j as f64;
                w.set(i, j, libm::exp(-0.05 * d * d));
            }
        }
        let f = psd_factor(&w, 1e-8).unwrap();
        assert!(!f.truncated);
        assert!(f.min_eigenvalue >= -1e-9);
        let r = f.factor.transposed().matmul(&f.factor);
        let mut err = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                err = err.max((r.get(i, j) - w.get(i, j)).abs());
            }
        }
        assert!(err <= 1e-6, "reconstruction error {err:e}");
    }

    #[test]
    fn psd_factor_truncates_indefinite_matrix() {
        // [[1, 2],[2, 1]] has eigenvalues 3 and −1.
        let w = DenseMatrix::from_data(2, 2, vec![1.0, 2.0, 2.0, 1.0]);
        let f = psd_factor(&w, 1e-8).unwrap();
        assert!(f.truncated);
        assert!((f.min_eigenvalue + 1.0).abs() < 1e-10);
        // FᵀF equals the PSD part: 3 · qqᵀ with q = (1,1)/√2.
        let r = f.factor.transposed().matmul(&f.factor);
        for (i, j, want) in [(0, 0, 1.5), (0, 1, 1.5), (1, 0, 1.5), (1, 1, 1.5)] {
            assert!((r.get(i, j) - want).abs() < 1e-10);
        }
    }

    #[test]
    fn gaussian_matrix_is_seeded_and_counter_indexed() {
        let a = gaussian_matrix(20, 4, 7).unwrap();
        let b = gaussian_matrix(20, 4, 7).unwrap();
        let c = gaussian_matrix(20, 4, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        // Counter indexing: a taller matrix shares its leading rows.
        let tall = gaussian_matrix(40, 4, 7).unwrap();
        for r in 0..20 {
            for col in 0..4 {
                assert_eq!(a.get(r, col).to_bits(), tall.get(r, col).to_bits());
            }
        }
    }

    #[test]
    fn gaussian_matrix_moments() {
        let g = gaussian_matrix(10_000, 1, 1).unwrap();
        let n = 10_000.0;
        let mean: f64 = g.data().iter().sum::<f64>() / n;
        let var: f64 = g.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((0.9..=1.1).contains(&var), "var {var}");
    }

    #[test]
    fn matmul_and_transpose_basics() {
        let a = DenseMatrix::from_data(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = DenseMatrix::from_data(3, 2, vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
        let c = a.matmul(&b);
        assert_eq!(c.data(), &[58.0, 64.0, 139.0, 154.0]);
        assert_eq!(a.transposed().transposed(), a);
    }
}
