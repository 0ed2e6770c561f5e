//! Small dense symmetric linear-algebra helpers shared by the dual machinery
//! and the classifier.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Relative threshold below which a singular value counts as zero when
/// forming a generalized inverse.
pub const RANK_RTOL: f64 = 1e-10;

/// Relative eigenvalue tolerance for sign decisions: `1e-9 * (1 + max|eig|)`.
pub const EIG_RTOL: f64 = 1e-9;

/// Sequential faer eigendecomposition; eigenvalues come back ascending.
fn faer_eigen(m: &DMatrix<f64>) -> Option<SymEig> {
    use faer::dyn_stack::{MemBuffer, MemStack};
    use faer::linalg::evd::{self_adjoint_evd, self_adjoint_evd_scratch, ComputeEigenvectors};
    let n = m.nrows();
    let a = faer::Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)]);
    let mut u = faer::Mat::<f64>::zeros(n, n);
    let mut s = faer::diag::Diag::<f64>::zeros(n);
    let par = faer::Par::Seq;
    let mut buf = MemBuffer::new(self_adjoint_evd_scratch::<f64>(
        n,
        ComputeEigenvectors::Yes,
        par,
        Default::default(),
    ));
    self_adjoint_evd(
        a.as_ref(),
        s.as_mut(),
        Some(u.as_mut()),
        par,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .ok()?;
    let sv = s.column_vector();
    Some(SymEig {
        values: DVector::from_fn(n, |i, _| sv[i]),
        vectors: DMatrix::from_fn(n, n, |i, j| u[(i, j)]),
    })
}

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted ascending
/// and eigenvectors stored column-wise in the same order.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymEig {
    pub fn new(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        if n == 0 {
            return Self {
                values: DVector::zeros(0),
                vectors: DMatrix::zeros(0, 0),
            };
        }
        if n == 1 {
            return Self {
                values: DVector::from_element(1, m[(0, 0)]),
                vectors: DMatrix::identity(1, 1),
            };
        }
        // faer's decomposition stays accurate to rounding on widely spread
        // spectra, where nalgebra's QR iteration can lose several digits
        if let Some(eig) = faer_eigen(m) {
            return eig;
        }
        let eig = SymmetricEigen::new(m.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut vectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Self { values, vectors }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Sign tolerance `1e-9 * (1 + max|eig|)`.
    pub fn sign_tol(&self) -> f64 {
        EIG_RTOL * (1.0 + self.max_abs())
    }

    /// Number of eigenvalues whose magnitude exceeds the rank threshold.
    pub fn rank(&self) -> usize {
        let cut = RANK_RTOL * self.max_abs();
        self.values.iter().filter(|v| v.abs() > cut).count()
    }

    pub fn is_invertible(&self) -> bool {
        self.max_abs() > 0.0 && self.rank() == self.dim()
    }

    /// Minimum-norm least-squares solution of `M x = rhs` through the
    /// eigenbasis. Returns the solution and whether any eigenvalue was
    /// truncated.
    pub fn pinv_solve(&self, rhs: &DVector<f64>) -> (DVector<f64>, bool) {
        let cut = RANK_RTOL * self.max_abs();
        let coeffs = self.vectors.tr_mul(rhs);
        let mut truncated = false;
        let scaled = DVector::from_iterator(
            self.dim(),
            coeffs.iter().zip(self.values.iter()).map(|(c, v)| {
                if v.abs() > cut {
                    c / v
                } else {
                    truncated = true;
                    0.0
                }
            }),
        );
        (&self.vectors * scaled, truncated)
    }

    /// `‖(I − M M⁺) rhs‖`, the component of `rhs` outside the column space.
    pub fn column_space_residual(&self, rhs: &DVector<f64>) -> f64 {
        let cut = RANK_RTOL * self.max_abs();
        let coeffs = self.vectors.tr_mul(rhs);
        coeffs
            .iter()
            .zip(self.values.iter())
            .filter(|(_, v)| v.abs() <= cut)
            .fold(0.0, |acc, (c, _)| acc + c * c)
            .sqrt()
    }

    /// Inverse through the eigenbasis, `None` when rank deficient.
    pub fn inverse(&self) -> Option<DMatrix<f64>> {
        if !self.is_invertible() {
            return None;
        }
        let inv_vals = self.values.map(|v| 1.0 / v);
        Some(&self.vectors * DMatrix::from_diagonal(&inv_vals) * self.vectors.transpose())
    }
}

/// `(M + Mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `‖M − Mᵀ‖_F / ‖M‖_F`, zero for the zero matrix.
pub fn relative_asymmetry(m: &DMatrix<f64>) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).norm() / norm
}

pub fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_sorted_with_matching_vectors() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, -3.0, 0.5, 0.0, 0.5, 1.0]);
        let eig = SymEig::new(&m);
        assert!(eig.values[0] <= eig.values[1] && eig.values[1] <= eig.values[2]);
        for i in 0..3 {
            let v = eig.vectors.column(i);
            let r = &m * v - v * eig.values[i];
            assert!(r.norm() < 1e-12);
        }
    }

    #[test]
    fn pinv_solve_returns_min_norm_solution() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 2.0]));
        let eig = SymEig::new(&m);
        let rhs = DVector::from_vec(vec![0.0, 4.0]);
        let (x, truncated) = eig.pinv_solve(&rhs);
        assert!(truncated);
        assert_eq!(x, DVector::from_vec(vec![0.0, 2.0]));
        assert_eq!(eig.column_space_residual(&rhs), 0.0);
        let off = DVector::from_vec(vec![3.0, 4.0]);
        assert!((eig.column_space_residual(&off) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn asymmetry_measure() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(relative_asymmetry(&m), 0.0);
        let s = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(relative_asymmetry(&s) > 1.0);
        assert_eq!(symmetrize(&s), DMatrix::zeros(2, 2));
    }
}
