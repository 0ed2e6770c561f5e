//! Canonical problem instances `Π(x) = V(Λ(x)) + ½⟨x, Ax⟩ − ⟨x, f⟩` with the
//! quadratic geometric operator `Λ_k(x) = ½ xᵀB^k x + b_kᵀx`.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};
use crate::family::{CanonicalFamily, CanonicalFunction};
use crate::linalg::{inf_norm, relative_asymmetry, symmetrize};

/// Largest relative asymmetry `‖M − Mᵀ‖_F / ‖M‖_F` accepted on ingest.
pub const MAX_ASYMMETRY: f64 = 1e-8;

/// Tolerance for the check `ς = ∇V(Λ(x))` in [`CanonicalProblem::primal_hessian`].
pub const CANONICAL_IMAGE_TOL: f64 = 1e-8;

/// A full canonical instance. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalProblem {
    a: DMatrix<f64>,
    b_mats: Vec<DMatrix<f64>>,
    b_vecs: Vec<DVector<f64>>,
    f: DVector<f64>,
    family: CanonicalFamily,
}

fn ingest_symmetric(name: &str, m: DMatrix<f64>, n: usize) -> Result<DMatrix<f64>> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch {
            what: format!("{name} (rows x cols = {} x {})", m.nrows(), m.ncols()),
            expected: n,
            found: if m.nrows() != n { m.nrows() } else { m.ncols() },
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter {
            name: name.into(),
            reason: "entries must be finite".into(),
        });
    }
    let asymmetry = relative_asymmetry(&m);
    if asymmetry > MAX_ASYMMETRY {
        return Err(Error::Asymmetric {
            name: name.into(),
            asymmetry,
        });
    }
    Ok(symmetrize(&m))
}

impl CanonicalProblem {
    pub fn new(
        a: DMatrix<f64>,
        b_mats: Vec<DMatrix<f64>>,
        b_vecs: Vec<DVector<f64>>,
        f: DVector<f64>,
        family: impl Into<CanonicalFamily>,
    ) -> Result<Self> {
        let family = family.into();
        let n = f.len();
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "f".into(),
                reason: "primal dimension must be at least 1".into(),
            });
        }
        let m = family.dim();
        check_len("B", m, b_mats.len())?;
        check_len("b", m, b_vecs.len())?;
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "f".into(),
                reason: "entries must be finite".into(),
            });
        }
        let a = ingest_symmetric("A", a, n)?;
        let b_mats = b_mats
            .into_iter()
            .enumerate()
            .map(|(k, bk)| ingest_symmetric(&format!("B[{k}]"), bk, n))
            .collect::<Result<Vec<_>>>()?;
        for (k, bk) in b_vecs.iter().enumerate() {
            check_len(&format!("b[{k}]"), n, bk.len())?;
            if bk.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: format!("b[{k}]"),
                    reason: "entries must be finite".into(),
                });
            }
        }
        Ok(Self {
            a,
            b_mats,
            b_vecs,
            f,
            family,
        })
    }

    /// Primal dimension.
    pub fn n(&self) -> usize {
        self.f.len()
    }

    /// Dual dimension.
    pub fn m(&self) -> usize {
        self.b_mats.len()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b_matrices(&self) -> &[DMatrix<f64>] {
        &self.b_mats
    }

    pub fn b_vectors(&self) -> &[DVector<f64>] {
        &self.b_vecs
    }

    pub fn f(&self) -> &DVector<f64> {
        &self.f
    }

    pub fn family(&self) -> &CanonicalFamily {
        &self.family
    }

    pub(crate) fn check_primal_dim(&self, x: &DVector<f64>) -> Result<()> {
        check_len("x", self.n(), x.len())
    }

    pub(crate) fn check_dual_dim(&self, sigma: &DVector<f64>) -> Result<()> {
        check_len("sigma", self.m(), sigma.len())
    }

    /// `Λ(x)` with `Λ_k(x) = ½ xᵀB^k x + b_kᵀx`.
    pub fn lambda(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_primal_dim(x)?;
        Ok(self.lambda_unchecked(x))
    }

    pub(crate) fn lambda_unchecked(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.m(),
            self.b_mats
                .iter()
                .zip(&self.b_vecs)
                .map(|(bm, bv)| 0.5 * x.dot(&(bm * x)) + bv.dot(x)),
        )
    }

    /// `∇Λ(x)`, an `n × m` matrix whose column `k` is `B^k x + b_k`.
    pub fn grad_lambda(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_primal_dim(x)?;
        Ok(self.grad_lambda_unchecked(x))
    }

    pub(crate) fn grad_lambda_unchecked(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.n(), self.m());
        for (k, (bm, bv)) in self.b_mats.iter().zip(&self.b_vecs).enumerate() {
            j.set_column(k, &(bm * x + bv));
        }
        j
    }

    /// `Π(x)`. Fails with [`Error::Domain`] when `Λ(x)` leaves the domain of `V`.
    pub fn primal_value(&self, x: &DVector<f64>) -> Result<f64> {
        let xi = self.lambda(x)?;
        let v = self.family.value(&xi)?;
        Ok(v + 0.5 * x.dot(&(&self.a * x)) - x.dot(&self.f))
    }

    /// `∇Π(x) = ∇Λ(x) ∇V(Λ(x)) + Ax − f`.
    pub fn primal_gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let xi = self.lambda(x)?;
        let s = self.family.gradient(&xi)?;
        Ok(self.grad_lambda_unchecked(x) * s + &self.a * x - &self.f)
    }

    /// Canonical dual image `ς = ∇V(Λ(x))`.
    pub fn canonical_image(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let xi = self.lambda(x)?;
        self.family.gradient(&xi)
    }

    /// `∇²Π(x) = G(ς) + ∇Λ(x) (∇²V*(ς))⁻¹ ∇Λ(x)ᵀ` where the caller supplies
    /// `ς = ∇V(Λ(x))`. The identity `∇²V(Λ(x)) = (∇²V*(ς))⁻¹` makes this the
    /// exact second derivative of `Π`.
    pub fn primal_hessian(&self, x: &DVector<f64>, sigma: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_dual_dim(sigma)?;
        let image = self.canonical_image(x)?;
        let residual = inf_norm(&(&image - sigma));
        if residual > CANONICAL_IMAGE_TOL * (1.0 + inf_norm(sigma)) {
            return Err(Error::Consistency { residual });
        }
        let h_conj = self.family.conjugate_hessian(sigma)?;
        let h_inv = h_conj.cholesky().map(|c| c.inverse()).ok_or_else(|| {
            Error::SingularHessian("conjugate Hessian is not positive definite".into())
        })?;
        let j = self.grad_lambda_unchecked(x);
        Ok(self.g_of(sigma)? + &j * h_inv * j.transpose())
    }

    /// `∇²Π(x)` with the canonical image computed internally.
    pub fn primal_hessian_at(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let sigma = self.canonical_image(x)?;
        self.primal_hessian(x, &sigma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{LogBarrier, QuadraticWell};
    use crate::instances;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn lambda_on_reference_instance() {
        let p = instances::quadratic_log_example();
        let xi = p.lambda(&v(&[1.0, 0.0])).unwrap();
        assert_eq!(xi.as_slice(), &[2.5]);
        let j = p.grad_lambda(&v(&[1.0, 0.0])).unwrap();
        assert_eq!(j.as_slice(), &[5.0, 0.0]);
    }

    #[test]
    fn lambda_vanishes_at_origin() {
        let p = instances::quadratic_log_example();
        assert_eq!(p.lambda(&v(&[0.0, 0.0])).unwrap().as_slice(), &[0.0]);
        assert_eq!(p.grad_lambda(&v(&[0.0, 0.0])).unwrap(), DMatrix::zeros(2, 1));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let p = instances::quadratic_log_example();
        assert!(matches!(
            p.lambda(&v(&[1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
        let err = CanonicalProblem::new(
            DMatrix::identity(2, 2),
            vec![],
            vec![],
            v(&[1.0, 1.0]),
            LogBarrier::new(vec![1.0]).unwrap(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { ref what, .. } if what == "B"));
    }

    #[test]
    fn asymmetric_input_is_rejected_and_small_skew_symmetrized() {
        let fam = QuadraticWell::new(vec![1.0], vec![0.0]).unwrap();
        let skew = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        let err = CanonicalProblem::new(
            skew,
            vec![DMatrix::identity(2, 2)],
            vec![v(&[0.0, 0.0])],
            v(&[0.0, 0.0]),
            fam.clone(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Asymmetric { ref name, .. } if name == "A"));

        let nearly = DMatrix::from_row_slice(2, 2, &[1.0, 0.5 + 1e-12, 0.5, 1.0]);
        let p = CanonicalProblem::new(
            nearly,
            vec![DMatrix::identity(2, 2)],
            vec![v(&[0.0, 0.0])],
            v(&[0.0, 0.0]),
            fam,
        )
        .unwrap();
        assert_eq!(p.a()[(0, 1)], p.a()[(1, 0)]);
    }

    #[test]
    fn primal_value_domain_error() {
        // B indefinite lets the log argument go non-positive
        let p = CanonicalProblem::new(
            DMatrix::identity(1, 1),
            vec![DMatrix::from_element(1, 1, -2.0)],
            vec![v(&[0.0])],
            v(&[0.0]),
            LogBarrier::new(vec![1.0]).unwrap(),
        )
        .unwrap();
        assert!(matches!(p.primal_value(&v(&[1.0])), Err(Error::Domain(_))));
        assert!(p.primal_value(&v(&[0.5])).is_ok());
    }

    #[test]
    fn zero_point_of_centered_wells() {
        let p = CanonicalProblem::new(
            DMatrix::identity(2, 2),
            vec![DMatrix::identity(2, 2)],
            vec![v(&[0.0, 0.0])],
            v(&[0.3, -0.1]),
            QuadraticWell::new(vec![1.5], vec![0.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(p.primal_value(&v(&[0.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn hessian_reduces_to_a_without_geometry() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, -1.0]);
        let p = CanonicalProblem::new(
            a.clone(),
            vec![DMatrix::zeros(2, 2)],
            vec![v(&[0.0, 0.0])],
            v(&[1.0, 1.0]),
            QuadraticWell::new(vec![1.0], vec![0.7]).unwrap(),
        )
        .unwrap();
        let x = v(&[0.4, -0.3]);
        assert_eq!(p.primal_hessian_at(&x).unwrap(), a);
    }

    #[test]
    fn primal_hessian_rejects_inconsistent_sigma() {
        let p = instances::quadratic_log_example();
        let x = v(&[0.2, 0.1]);
        let mut s = p.canonical_image(&x).unwrap();
        s[0] += 1e-3;
        assert!(matches!(
            p.primal_hessian(&x, &s),
            Err(Error::Consistency { .. })
        ));
    }

    #[test]
    fn lambda_is_exactly_quadratic() {
        let p = instances::random_instance(
            &mut instances::rng(11),
            3,
            2,
            instances::FamilyKind::QuadraticWell,
        );
        let x = v(&[0.3, -1.2, 0.8]);
        let h = v(&[0.05, 0.2, -0.4]);
        let lhs = p.lambda(&(&x + &h)).unwrap() - p.lambda(&x).unwrap()
            - p.grad_lambda(&x).unwrap().transpose() * &h;
        for k in 0..2 {
            let quad = 0.5 * h.dot(&(&p.b_matrices()[k] * &h));
            assert!((lhs[k] - quad).abs() < 1e-14);
        }
    }
}
