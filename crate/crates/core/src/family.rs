//! Strictly convex canonical functions `V` with analytic Legendre conjugates.
//!
//! Every family here is separable, so the dual feasible set `V*_a` is a box
//! described per coordinate by a [`DualInterval`]. The solver uses those
//! intervals for its fraction-to-boundary safeguard.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// One coordinate of the dual feasible box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualInterval {
    pub lower: f64,
    pub upper: f64,
    pub lower_closed: bool,
    pub upper_closed: bool,
}

impl DualInterval {
    pub const REAL_LINE: DualInterval = DualInterval {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
        lower_closed: false,
        upper_closed: false,
    };

    pub fn contains(&self, s: f64) -> bool {
        let above = if self.lower_closed { s >= self.lower } else { s > self.lower };
        let below = if self.upper_closed { s <= self.upper } else { s < self.upper };
        above && below && s.is_finite()
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.is_finite() && self.upper.is_finite()
    }
}

/// Interface contract for a strictly convex `V: R^m → R` together with its
/// Legendre conjugate `V*`.
///
/// Implementations must satisfy the canonical duality relations
/// `ς = ∇V(ξ) ⇔ ξ = ∇V*(ς)` and `V(ξ) + V*(ς) = ⟨ξ; ς⟩` on the domains.
pub trait CanonicalFunction {
    fn dim(&self) -> usize;

    fn in_domain(&self, xi: &DVector<f64>) -> bool;
    fn value(&self, xi: &DVector<f64>) -> Result<f64>;
    fn gradient(&self, xi: &DVector<f64>) -> Result<DVector<f64>>;
    fn hessian(&self, xi: &DVector<f64>) -> Result<DMatrix<f64>>;

    fn in_dual_domain(&self, sigma: &DVector<f64>) -> bool;
    fn conjugate_value(&self, sigma: &DVector<f64>) -> Result<f64>;
    fn conjugate_gradient(&self, sigma: &DVector<f64>) -> Result<DVector<f64>>;
    fn conjugate_hessian(&self, sigma: &DVector<f64>) -> Result<DMatrix<f64>>;

    /// Per-coordinate description of the dual feasible set `V*_a`.
    fn dual_box(&self) -> Vec<DualInterval>;
}

/// `V(ξ) = −Σ_k log(ξ_k + d_k)`.
///
/// Conjugate: `V*(ς) = Σ_k (−1 − d_k ς_k − log(−ς_k))`, obtained from
/// stationarity of `ξς − V(ξ)` at `ξ_k = −1/ς_k − d_k`.
///
/// The dual feasible set is `−1/d_k ≤ ς_k < 0`, the image of `ξ_k ≥ 0` under
/// `∇V`. That matches geometric operators with positive semidefinite `B^k`
/// and `b_k = 0`, where `Λ(x) ≥ 0` everywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogBarrier {
    pub d: Vec<f64>,
}

impl LogBarrier {
    pub fn new(d: Vec<f64>) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::InvalidParameter {
                name: "d".into(),
                reason: "must have at least one entry".into(),
            });
        }
        if let Some(bad) = d.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidParameter {
                name: "d".into(),
                reason: format!("entries must be positive and finite, got {bad}"),
            });
        }
        Ok(Self { d })
    }

    fn check_primal(&self, xi: &DVector<f64>) -> Result<()> {
        check_len("xi", self.d.len(), xi.len())?;
        for (k, (x, d)) in xi.iter().zip(&self.d).enumerate() {
            if !(x + d > 0.0) {
                return Err(Error::Domain(format!(
                    "log argument xi[{k}] + d[{k}] = {} is not positive",
                    x + d
                )));
            }
        }
        Ok(())
    }

    fn check_dual(&self, sigma: &DVector<f64>) -> Result<()> {
        check_len("sigma", self.d.len(), sigma.len())?;
        if !self.in_dual_domain(sigma) {
            return Err(Error::Domain(format!(
                "sigma {:?} outside [-1/d, 0)",
                sigma.as_slice()
            )));
        }
        Ok(())
    }
}

impl CanonicalFunction for LogBarrier {
    fn dim(&self) -> usize {
        self.d.len()
    }

    fn in_domain(&self, xi: &DVector<f64>) -> bool {
        xi.len() == self.d.len() && xi.iter().zip(&self.d).all(|(x, d)| x + d > 0.0)
    }

    fn value(&self, xi: &DVector<f64>) -> Result<f64> {
        self.check_primal(xi)?;
        Ok(-xi.iter().zip(&self.d).map(|(x, d)| (x + d).ln()).sum::<f64>())
    }

    fn gradient(&self, xi: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_primal(xi)?;
        Ok(DVector::from_iterator(
            xi.len(),
            xi.iter().zip(&self.d).map(|(x, d)| -1.0 / (x + d)),
        ))
    }

    fn hessian(&self, xi: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_primal(xi)?;
        let diag = DVector::from_iterator(
            xi.len(),
            xi.iter().zip(&self.d).map(|(x, d)| 1.0 / ((x + d) * (x + d))),
        );
        Ok(DMatrix::from_diagonal(&diag))
    }

    fn in_dual_domain(&self, sigma: &DVector<f64>) -> bool {
        sigma.len() == self.d.len()
            && sigma
                .iter()
                .zip(self.dual_box())
                .all(|(s, iv)| iv.contains(*s))
    }

    fn conjugate_value(&self, sigma: &DVector<f64>) -> Result<f64> {
        self.check_dual(sigma)?;
        Ok(sigma
            .iter()
            .zip(&self.d)
            .map(|(s, d)| -1.0 - d * s - (-s).ln())
            .sum())
    }

    fn conjugate_gradient(&self, sigma: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dual(sigma)?;
        Ok(DVector::from_iterator(
            sigma.len(),
            sigma.iter().zip(&self.d).map(|(s, d)| -d - 1.0 / s),
        ))
    }

    fn conjugate_hessian(&self, sigma: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_dual(sigma)?;
        Ok(DMatrix::from_diagonal(&sigma.map(|s| 1.0 / (s * s))))
    }

    fn dual_box(&self) -> Vec<DualInterval> {
        self.d
            .iter()
            .map(|d| DualInterval {
                lower: -1.0 / d,
                upper: 0.0,
                lower_closed: true,
                upper_closed: false,
            })
            .collect()
    }
}

/// `V(ξ) = Σ_k ½ α_k (ξ_k − λ_k)²` with conjugate
/// `V*(ς) = Σ_k (ς_k² / (2α_k) + λ_k ς_k)` on all of `R^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticWell {
    pub alpha: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl QuadraticWell {
    pub fn new(alpha: Vec<f64>, lambda: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::InvalidParameter {
                name: "alpha".into(),
                reason: "must have at least one entry".into(),
            });
        }
        check_len("lambda", alpha.len(), lambda.len())?;
        if let Some(bad) = alpha.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidParameter {
                name: "alpha".into(),
                reason: format!("entries must be positive and finite, got {bad}"),
            });
        }
        if let Some(bad) = lambda.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "lambda".into(),
                reason: format!("entries must be finite, got {bad}"),
            });
        }
        Ok(Self { alpha, lambda })
    }

    fn check(&self, what: &str, v: &DVector<f64>) -> Result<()> {
        check_len(what, self.alpha.len(), v.len())?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("{what} has non-finite entries")));
        }
        Ok(())
    }
}

impl CanonicalFunction for QuadraticWell {
    fn dim(&self) -> usize {
        self.alpha.len()
    }

    fn in_domain(&self, xi: &DVector<f64>) -> bool {
        xi.len() == self.alpha.len() && xi.iter().all(|x| x.is_finite())
    }

    fn value(&self, xi: &DVector<f64>) -> Result<f64> {
        self.check("xi", xi)?;
        Ok(xi
            .iter()
            .zip(self.alpha.iter().zip(&self.lambda))
            .map(|(x, (a, l))| 0.5 * a * (x - l) * (x - l))
            .sum())
    }

    fn gradient(&self, xi: &DVector<f64>) -> Result<DVector<f64>> {
        self.check("xi", xi)?;
        Ok(DVector::from_iterator(
            xi.len(),
            xi.iter()
                .zip(self.alpha.iter().zip(&self.lambda))
                .map(|(x, (a, l))| a * (x - l)),
        ))
    }

    fn hessian(&self, xi: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check("xi", xi)?;
        Ok(DMatrix::from_diagonal(&DVector::from_column_slice(&self.alpha)))
    }

    fn in_dual_domain(&self, sigma: &DVector<f64>) -> bool {
        self.in_domain(sigma)
    }

    fn conjugate_value(&self, sigma: &DVector<f64>) -> Result<f64> {
        self.check("sigma", sigma)?;
        Ok(sigma
            .iter()
            .zip(self.alpha.iter().zip(&self.lambda))
            .map(|(s, (a, l))| s * s / (2.0 * a) + l * s)
            .sum())
    }

    fn conjugate_gradient(&self, sigma: &DVector<f64>) -> Result<DVector<f64>> {
        self.check("sigma", sigma)?;
        Ok(DVector::from_iterator(
            sigma.len(),
            sigma
                .iter()
                .zip(self.alpha.iter().zip(&self.lambda))
                .map(|(s, (a, l))| s / a + l),
        ))
    }

    fn conjugate_hessian(&self, sigma: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check("sigma", sigma)?;
        Ok(DMatrix::from_diagonal(&DVector::from_iterator(
            sigma.len(),
            self.alpha.iter().map(|a| 1.0 / a),
        )))
    }

    fn dual_box(&self) -> Vec<DualInterval> {
        vec![DualInterval::REAL_LINE; self.alpha.len()]
    }
}

/// The built-in canonical families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CanonicalFamily {
    #[serde(rename = "log")]
    Log(LogBarrier),
    QuadraticWell(QuadraticWell),
}

impl CanonicalFamily {
    fn inner(&self) -> &dyn CanonicalFunction {
        match self {
            CanonicalFamily::Log(f) => f,
            CanonicalFamily::QuadraticWell(f) => f,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CanonicalFamily::Log(_) => "log",
            CanonicalFamily::QuadraticWell(_) => "quadratic-well",
        }
    }
}

impl From<LogBarrier> for CanonicalFamily {
    fn from(f: LogBarrier) -> Self {
        CanonicalFamily::Log(f)
    }
}

impl From<QuadraticWell> for CanonicalFamily {
    fn from(f: QuadraticWell) -> Self {
        CanonicalFamily::QuadraticWell(f)
    }
}

impl CanonicalFunction for CanonicalFamily {
    fn dim(&self) -> usize {
        self.inner().dim()
    }
    fn in_domain(&self, xi: &DVector<f64>) -> bool {
        self.inner().in_domain(xi)
    }
    fn value(&self, xi: &DVector<f64>) -> Result<f64> {
        self.inner().value(xi)
    }
    fn gradient(&self, xi: &DVector<f64>) -> Result<DVector<f64>> {
        self.inner().gradient(xi)
    }
    fn hessian(&self, xi: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.inner().hessian(xi)
    }
    fn in_dual_domain(&self, sigma: &DVector<f64>) -> bool {
        self.inner().in_dual_domain(sigma)
    }
    fn conjugate_value(&self, sigma: &DVector<f64>) -> Result<f64> {
        self.inner().conjugate_value(sigma)
    }
    fn conjugate_gradient(&self, sigma: &DVector<f64>) -> Result<DVector<f64>> {
        self.inner().conjugate_gradient(sigma)
    }
    fn conjugate_hessian(&self, sigma: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.inner().conjugate_hessian(sigma)
    }
    fn dual_box(&self) -> Vec<DualInterval> {
        self.inner().dual_box()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn log_family_rejects_bad_parameters() {
        assert!(LogBarrier::new(vec![]).is_err());
        assert!(LogBarrier::new(vec![1.0, 0.0]).is_err());
        assert!(LogBarrier::new(vec![-2.0]).is_err());
    }

    #[test]
    fn log_family_domain_errors_are_structured() {
        let f = LogBarrier::new(vec![1.0]).unwrap();
        assert!(matches!(f.value(&v(&[-1.0])), Err(Error::Domain(_))));
        assert!(matches!(f.conjugate_value(&v(&[0.0])), Err(Error::Domain(_))));
        assert!(matches!(f.conjugate_value(&v(&[-1.5])), Err(Error::Domain(_))));
        // the closed end of the dual interval is admissible
        assert!(f.conjugate_value(&v(&[-1.0])).is_ok());
    }

    #[test]
    fn log_conjugate_at_known_point() {
        // xi = 0, d = 1: sigma = -1, V = 0, V* = -1 + 1 - 0 = 0, <xi; sigma> = 0
        let f = LogBarrier::new(vec![1.0]).unwrap();
        let s = f.gradient(&v(&[0.0])).unwrap();
        assert_eq!(s[0], -1.0);
        assert_eq!(f.conjugate_value(&s).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_well_zero_point_is_exact() {
        let f = QuadraticWell::new(vec![2.0], vec![0.0]).unwrap();
        let xi = v(&[0.0]);
        let s = f.gradient(&xi).unwrap();
        assert_eq!(f.value(&xi).unwrap() + f.conjugate_value(&s).unwrap() - xi.dot(&s), 0.0);
    }

    #[test]
    fn family_serializes_with_kind_tag() {
        let fam = CanonicalFamily::from(LogBarrier::new(vec![1.0]).unwrap());
        let txt = serde_json::to_string(&fam).unwrap();
        assert_eq!(txt, r#"{"kind":"log","d":[1.0]}"#);
        let qw = CanonicalFamily::from(QuadraticWell::new(vec![1.0], vec![2.0]).unwrap());
        let txt = serde_json::to_string(&qw).unwrap();
        assert!(txt.starts_with(r#"{"kind":"quadratic-well""#));
    }

    proptest! {
        #[test]
        fn log_conjugate_relations(d in 0.1f64..5.0, xi in 0.0f64..20.0) {
            let f = LogBarrier::new(vec![d]).unwrap();
            let x = v(&[xi]);
            let s = f.gradient(&x).unwrap();
            let fenchel = f.value(&x).unwrap() + f.conjugate_value(&s).unwrap() - x.dot(&s);
            prop_assert!(fenchel.abs() <= 1e-10 * (1.0 + f.value(&x).unwrap().abs()));
            let back = f.conjugate_gradient(&s).unwrap();
            prop_assert!((back[0] - xi).abs() <= 1e-8);
            let hv = f.hessian(&x).unwrap()[(0, 0)];
            let hc = f.conjugate_hessian(&s).unwrap()[(0, 0)];
            prop_assert!((hv * hc - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn quadratic_conjugate_relations(a in 0.1f64..5.0, l in -3.0f64..3.0, xi in -10.0f64..10.0) {
            let f = QuadraticWell::new(vec![a], vec![l]).unwrap();
            let x = v(&[xi]);
            let s = f.gradient(&x).unwrap();
            let fenchel = f.value(&x).unwrap() + f.conjugate_value(&s).unwrap() - x.dot(&s);
            prop_assert!(fenchel.abs() <= 1e-10 * (1.0 + f.value(&x).unwrap().abs()));
            prop_assert!((f.conjugate_gradient(&s).unwrap()[0] - xi).abs() <= 1e-8);
        }
    }
}
