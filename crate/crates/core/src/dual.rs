//! Canonical dual construction.
//!
//! For a dual point `ς` the equilibrium matrix and source are
//! `G(ς) = A + Σ_k ς_k B^k` and `F(ς) = f − Σ_k ς_k b_k`. The canonical dual is
//! `Π^d(ς) = −½⟨G(ς)⁻¹F(ς), F(ς)⟩ − V*(ς)`, evaluated along the stationary
//! trajectory `x(ς) = G(ς)⁻¹F(ς)` of the total complementary function
//! `Ξ(x, ς) = ½⟨x, G(ς)x⟩ − V*(ς) − ⟨x, F(ς)⟩`.
//!
//! With `J = ∇Λ(x(ς))`:
//!
//! ```text
//! ∇Π^d(ς)  = Λ(x(ς)) − ∇V*(ς)
//! ∇²Π^d(ς) = −Jᵀ G(ς)⁻¹ J − ∇²V*(ς)
//! ```
//!
//! When `G(ς)` is singular but `F(ς)` lies in its column space, `x(ς)` is the
//! minimum-norm solution and the point is flagged.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::CanonicalFunction;
use crate::linalg::SymEig;
use crate::problem::CanonicalProblem;

/// Relative tolerance for the column-space test `εc = 1e-8 (1 + ‖F‖)`.
pub const COLSPACE_RTOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionTag {
    SaPlusInterior,
    SaPlusBoundary,
    SaMinus,
    Indefinite,
    OutsideSa,
}

impl RegionTag {
    pub fn is_sa_plus(self) -> bool {
        matches!(self, RegionTag::SaPlusInterior | RegionTag::SaPlusBoundary)
    }
}

/// Where a dual point sits relative to `S_a`, `S_a⁺` and `S_a⁻`, with the
/// spectral evidence used to decide it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RegionLabel {
    pub tag: RegionTag,
    pub min_eig: f64,
    pub max_eig: f64,
    pub col_space_residual: f64,
}

/// Primal point recovered from the canonical equilibrium equation.
#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    pub x: DVector<f64>,
    /// `G(ς)` was singular and `x` is the minimum-norm solution.
    pub min_norm: bool,
}

/// Everything the solver needs at one dual point, computed from a single
/// factorization of `G(ς)`.
#[derive(Debug, Clone)]
pub struct DualEval {
    pub x: DVector<f64>,
    pub min_norm: bool,
    pub value: f64,
    pub gradient: DVector<f64>,
    /// `None` when `G(ς)` is singular.
    pub hessian: Option<DMatrix<f64>>,
    pub g_eig: SymEig,
}

impl CanonicalProblem {
    /// `G(ς) = A + Σ_k ς_k B^k`.
    pub fn g_of(&self, sigma: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_dual_dim(sigma)?;
        let mut g = self.a().clone();
        for (s, bk) in sigma.iter().zip(self.b_matrices()) {
            g += bk * *s;
        }
        Ok(g)
    }

    /// `F(ς) = f − Σ_k ς_k b_k`.
    pub fn f_of(&self, sigma: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dual_dim(sigma)?;
        let mut out = self.f().clone();
        for (s, bk) in sigma.iter().zip(self.b_vectors()) {
            out -= bk * *s;
        }
        Ok(out)
    }

    /// Total complementary function `Ξ(x, ς)`.
    pub fn xi_total(&self, x: &DVector<f64>, sigma: &DVector<f64>) -> Result<f64> {
        self.check_primal_dim(x)?;
        let conj = self.family().conjugate_value(sigma)?;
        let g = self.g_of(sigma)?;
        let f = self.f_of(sigma)?;
        Ok(0.5 * x.dot(&(g * x)) - conj - x.dot(&f))
    }

    /// Complementary gap function `½⟨x, G(ς)x⟩`.
    pub fn gap(&self, x: &DVector<f64>, sigma: &DVector<f64>) -> Result<f64> {
        self.check_primal_dim(x)?;
        let g = self.g_of(sigma)?;
        Ok(0.5 * x.dot(&(g * x)))
    }

    fn solve_equilibrium(
        &self,
        sigma: &DVector<f64>,
    ) -> Result<(SymEig, DVector<f64>, bool)> {
        let g = self.g_of(sigma)?;
        let f = self.f_of(sigma)?;
        let eig = SymEig::new(&g);
        let (x, truncated) = eig.pinv_solve(&f);
        if truncated {
            let residual = eig.column_space_residual(&f);
            if residual > COLSPACE_RTOL * (1.0 + f.norm()) {
                return Err(Error::SingularG { residual });
            }
        }
        Ok((eig, x, truncated))
    }

    fn require_dual_domain(&self, sigma: &DVector<f64>) -> Result<()> {
        self.check_dual_dim(sigma)?;
        if !self.family().in_dual_domain(sigma) {
            return Err(Error::Domain(format!(
                "sigma {:?} outside the dual feasible set",
                sigma.as_slice()
            )));
        }
        Ok(())
    }

    /// `x = G(ς)⁻¹F(ς)`, or the minimum-norm solution with a flag when `G` is
    /// singular and `F` lies in its column space.
    pub fn primal_recovery(&self, sigma: &DVector<f64>) -> Result<Recovery> {
        let (_, x, min_norm) = self.solve_equilibrium(sigma)?;
        Ok(Recovery { x, min_norm })
    }

    /// Value, gradient and (when `G` is invertible) Hessian of `Π^d` at `ς`.
    pub fn dual_evaluate(&self, sigma: &DVector<f64>) -> Result<DualEval> {
        self.require_dual_domain(sigma)?;
        let (g_eig, x, min_norm) = self.solve_equilibrium(sigma)?;
        let fam = self.family();
        let f = self.f_of(sigma)?;
        let value = -0.5 * x.dot(&f) - fam.conjugate_value(sigma)?;
        let gradient = self.lambda_unchecked(&x) - fam.conjugate_gradient(sigma)?;
        let hessian = match g_eig.inverse() {
            Some(g_inv) => {
                let j = self.grad_lambda_unchecked(&x);
                let h = -(j.transpose() * g_inv * &j) - fam.conjugate_hessian(sigma)?;
                Some(crate::linalg::symmetrize(&h))
            }
            None => None,
        };
        Ok(DualEval {
            x,
            min_norm,
            value,
            gradient,
            hessian,
            g_eig,
        })
    }

    /// `Π^d(ς)`.
    pub fn dual_value(&self, sigma: &DVector<f64>) -> Result<f64> {
        self.require_dual_domain(sigma)?;
        let (_, x, _) = self.solve_equilibrium(sigma)?;
        let f = self.f_of(sigma)?;
        Ok(-0.5 * x.dot(&f) - self.family().conjugate_value(sigma)?)
    }

    /// `∇Π^d(ς) = Λ(x(ς)) − ∇V*(ς)`.
    pub fn dual_gradient(&self, sigma: &DVector<f64>) -> Result<DVector<f64>> {
        self.require_dual_domain(sigma)?;
        let (_, x, _) = self.solve_equilibrium(sigma)?;
        Ok(self.lambda_unchecked(&x) - self.family().conjugate_gradient(sigma)?)
    }

    /// `∇²Π^d(ς) = −Jᵀ G(ς)⁻¹ J − ∇²V*(ς)`; requires `G(ς)` invertible.
    pub fn dual_hessian(&self, sigma: &DVector<f64>) -> Result<DMatrix<f64>> {
        let eval = self.dual_evaluate(sigma)?;
        match eval.hessian {
            Some(h) => Ok(h),
            None => Err(Error::SingularG {
                residual: eval.g_eig.column_space_residual(&self.f_of(sigma)?),
            }),
        }
    }

    /// Locate `ς` relative to `S_a⁺`, `S_a⁻` and the rest of `S_a` using the
    /// full spectrum of `G(ς)`.
    pub fn classify_region(&self, sigma: &DVector<f64>) -> Result<RegionLabel> {
        self.check_dual_dim(sigma)?;
        let g = self.g_of(sigma)?;
        let f = self.f_of(sigma)?;
        let eig = SymEig::new(&g);
        let min_eig = eig.min();
        let max_eig = eig.max();
        let col_space_residual = eig.column_space_residual(&f);
        let label = |tag| RegionLabel {
            tag,
            min_eig,
            max_eig,
            col_space_residual,
        };
        if !self.family().in_dual_domain(sigma) {
            return Ok(label(RegionTag::OutsideSa));
        }
        let tol = eig.sign_tol();
        let singular = eig.values.iter().any(|v| v.abs() <= tol);
        if singular && col_space_residual > COLSPACE_RTOL * (1.0 + f.norm()) {
            return Ok(label(RegionTag::OutsideSa));
        }
        let tag = if min_eig > tol {
            RegionTag::SaPlusInterior
        } else if max_eig < -tol {
            RegionTag::SaMinus
        } else if min_eig >= -tol {
            RegionTag::SaPlusBoundary
        } else {
            RegionTag::Indefinite
        };
        Ok(label(tag))
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
    fn g_and_f_on_reference_instance() {
        let p = instances::quadratic_log_example();
        let g = p.g_of(&v(&[-0.2])).unwrap();
        assert!((g[(0, 0)]).abs() < 1e-15);
        assert!((g[(1, 1)] - 1.2).abs() < 1e-15);
        assert_eq!(p.g_of(&v(&[0.0])).unwrap(), *p.a());
        assert_eq!(p.f_of(&v(&[0.0])).unwrap(), *p.f());
    }

    #[test]
    fn g_of_matches_naive_triple_loop() {
        let mut rng = instances::rng(5);
        let p = instances::random_instance(&mut rng, 4, 3, instances::FamilyKind::QuadraticWell);
        let s = v(&[0.7, -1.3, 0.25]);
        let g = p.g_of(&s).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = p.a()[(i, j)];
                for k in 0..3 {
                    acc += s[k] * p.b_matrices()[k][(i, j)];
                }
                assert!((acc - g[(i, j)]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn xi_total_at_origin_is_minus_conjugate() {
        let p = instances::quadratic_log_example();
        let s = v(&[-0.4]);
        let conj = p.family().conjugate_value(&s).unwrap();
        assert_eq!(p.xi_total(&v(&[0.0, 0.0]), &s).unwrap(), -conj);
        assert_eq!(p.gap(&v(&[0.0, 0.0]), &s).unwrap(), 0.0);
    }

    #[test]
    fn gap_sign_follows_region() {
        let p = instances::quadratic_log_example();
        let plus = v(&[instances::EXAMPLE_SIGMA[0]]);
        let minus = v(&[instances::EXAMPLE_SIGMA[2]]);
        let mut rng = instances::rng(3);
        for _ in 0..20 {
            let x = instances::random_vector(&mut rng, 2, 1.0);
            assert!(p.gap(&x, &plus).unwrap() > 0.0);
            assert!(p.gap(&x, &minus).unwrap() < 0.0);
        }
    }

    #[test]
    fn region_labels_on_reference_instance() {
        let p = instances::quadratic_log_example();
        let tag = |s: f64| p.classify_region(&v(&[s])).unwrap().tag;
        assert_eq!(tag(-0.1), RegionTag::SaPlusInterior);
        assert_eq!(tag(-0.7), RegionTag::SaMinus);
        assert_eq!(tag(-0.3), RegionTag::Indefinite);
        assert_eq!(tag(-1.2), RegionTag::OutsideSa);
        assert_eq!(tag(0.1), RegionTag::OutsideSa);
        let lab = p.classify_region(&v(&[-0.3])).unwrap();
        assert!((lab.min_eig + 0.5).abs() < 1e-14);
        assert!((lab.max_eig - 0.8).abs() < 1e-14);
        // G = diag(0, 1.2) with F = (0.5, 0.1) off the column space
        assert_eq!(tag(-0.2), RegionTag::OutsideSa);
    }

    #[test]
    fn singular_boundary_with_compatible_source() {
        // f orthogonal to the null vector of G(-0.2) = diag(0, 1.2)
        let p = CanonicalProblem::new(
            DMatrix::from_diagonal(&v(&[1.0, 2.0])),
            vec![DMatrix::from_diagonal(&v(&[5.0, 4.0]))],
            vec![v(&[0.0, 0.0])],
            v(&[0.0, 0.6]),
            LogBarrier::new(vec![1.0]).unwrap(),
        )
        .unwrap();
        let s = v(&[-0.2]);
        assert_eq!(p.classify_region(&s).unwrap().tag, RegionTag::SaPlusBoundary);
        let rec = p.primal_recovery(&s).unwrap();
        assert!(rec.min_norm);
        assert!((rec.x[0]).abs() < 1e-15 && (rec.x[1] - 0.5).abs() < 1e-12);
        assert!(matches!(p.dual_hessian(&s), Err(Error::SingularG { .. })));
    }

    #[test]
    fn recovery_singular_g_error() {
        let p = instances::quadratic_log_example();
        assert!(matches!(
            p.primal_recovery(&v(&[-0.2])),
            Err(Error::SingularG { .. })
        ));
    }

    #[test]
    fn recovery_on_reference_instance() {
        let p = instances::quadratic_log_example();
        for (s, x) in instances::EXAMPLE_SIGMA.iter().zip(instances::EXAMPLE_X) {
            let rec = p.primal_recovery(&v(&[*s])).unwrap();
            assert!(!rec.min_norm);
            assert!((rec.x[0] - x[0]).abs() < 1e-6, "{:?} vs {:?}", rec.x, x);
            assert!((rec.x[1] - x[1]).abs() < 1e-6, "{:?} vs {:?}", rec.x, x);
        }
        let id = CanonicalProblem::new(
            DMatrix::identity(2, 2),
            vec![DMatrix::identity(2, 2)],
            vec![v(&[0.0, 0.0])],
            v(&[0.3, -2.0]),
            QuadraticWell::new(vec![1.0], vec![1.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(id.primal_recovery(&v(&[0.0])).unwrap().x, v(&[0.3, -2.0]));
    }

    #[test]
    fn dual_gradient_vanishes_at_reference_sigma() {
        let p = instances::quadratic_log_example();
        for s in instances::EXAMPLE_SIGMA {
            let g = p.dual_gradient(&v(&[s])).unwrap();
            assert!(g[0].abs() < 1e-6, "gradient {} at {}", g[0], s);
        }
    }

    #[test]
    fn dual_matches_closed_form_for_log_family() {
        let p = instances::quadratic_log_example();
        for s in [-0.9, -0.7, -0.35, -0.15, -0.05] {
            let sv = v(&[s]);
            let g = p.g_of(&sv).unwrap();
            let f = p.f();
            let quad = f.dot(&(g.clone().try_inverse().unwrap() * f));
            let closed = -0.5 * quad + (1.0 * s + 1.0 + (-s).ln());
            assert!((p.dual_value(&sv).unwrap() - closed).abs() < 1e-12);
        }
    }

    #[test]
    fn homogeneous_dual_is_minus_conjugate() {
        let p = CanonicalProblem::new(
            DMatrix::from_diagonal(&v(&[1.0, 2.0])),
            vec![DMatrix::from_diagonal(&v(&[5.0, 4.0]))],
            vec![v(&[0.0, 0.0])],
            v(&[0.0, 0.0]),
            LogBarrier::new(vec![1.0]).unwrap(),
        )
        .unwrap();
        for s in [-0.9, -0.45, -0.1] {
            let sv = v(&[s]);
            let conj = p.family().conjugate_value(&sv).unwrap();
            assert_eq!(p.dual_value(&sv).unwrap(), -conj);
            let h = p.dual_hessian(&sv).unwrap();
            let hc = p.family().conjugate_hessian(&sv).unwrap();
            assert!((h[(0, 0)] + hc[(0, 0)]).abs() < 1e-14);
        }
    }

    #[test]
    fn dual_hessian_positive_at_local_min() {
        let p = instances::quadratic_log_example();
        let h = p.dual_hessian(&v(&[instances::EXAMPLE_SIGMA[1]])).unwrap();
        assert!(h[(0, 0)] > 0.0);
    }

    #[test]
    fn dual_outside_domain_is_domain_error() {
        let p = instances::quadratic_log_example();
        assert!(matches!(p.dual_value(&v(&[0.5])), Err(Error::Domain(_))));
        assert!(matches!(p.xi_total(&v(&[0.0, 0.0]), &v(&[0.5])), Err(Error::Domain(_))));
    }

    #[test]
    fn dual_is_concave_on_sa_plus_segments() {
        let p = instances::quadratic_log_example();
        // S_a+ interior for this instance is (-0.2, 0)
        let pts: Vec<f64> = (1..40).map(|i| -0.2 + 0.005 * i as f64).collect();
        for a in &pts {
            for b in &pts {
                let mid = p.dual_value(&v(&[(a + b) / 2.0])).unwrap();
                let avg = 0.5 * (p.dual_value(&v(&[*a])).unwrap() + p.dual_value(&v(&[*b])).unwrap());
                assert!(mid >= avg - 1e-10);
            }
        }
    }
}
