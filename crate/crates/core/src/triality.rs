//! Triality classification of critical pairs.
//!
//! At a critical pair with `G = G(ς̄)` invertible, `J = ∇Λ(x̄)` and
//! `H = ∇²V*(ς̄) ≻ 0` the two Hessians are Schur complements of the same
//! saddle matrix
//!
//! ```text
//! K = [ G   J ]      ∇²Π(x̄)   = G + J H⁻¹ Jᵀ       (complement of −H)
//!     [ Jᵀ −H ]      ∇²Π^d(ς̄) = −H − Jᵀ G⁻¹ J      (complement of G)
//! ```
//!
//! so inertia additivity gives `In(G) + In(∇²Π^d) = In(−H) + In(∇²Π)`. With
//! `G ≺ 0` this pins the primal inertia to `(m, n − m, 0)` when the dual
//! Hessian is positive definite and `m < n`, and the dual inertia to
//! `(n, m − n, 0)` when the primal Hessian is positive definite and `m > n`.
//!
//! The Woodbury identity applied to `∇²Π = G + J H⁻¹ Jᵀ` reads
//! `(∇²Π)⁻¹ = G⁻¹ − G⁻¹ J (H + Jᵀ G⁻¹ J)⁻¹ Jᵀ G⁻¹`, and since
//! `H + Jᵀ G⁻¹ J = −∇²Π^d` this is
//!
//! ```text
//! (∇²Π)⁻¹ = G⁻¹ + G⁻¹ J (∇²Π^d)⁻¹ Jᵀ G⁻¹
//! ```
//!
//! with a plus sign in front of the correction. [`smw_check`] measures that
//! identity.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dual::RegionTag;
use crate::error::{Error, Result};
use crate::linalg::SymEig;
use crate::problem::CanonicalProblem;
use crate::solver::CriticalPair;

/// Eigenvalue sign counts of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inertia {
    pub pos: usize,
    pub neg: usize,
    pub zero: usize,
    pub tol: f64,
}

impl Inertia {
    pub fn dim(&self) -> usize {
        self.pos + self.neg + self.zero
    }

    pub fn is_positive_definite(&self) -> bool {
        self.pos == self.dim()
    }

    pub fn is_negative_definite(&self) -> bool {
        self.neg == self.dim()
    }

    pub fn counts(&self) -> (usize, usize, usize) {
        (self.pos, self.neg, self.zero)
    }

    fn from_eig(eig: &SymEig) -> Self {
        let tol = eig.sign_tol();
        let mut out = Inertia {
            pos: 0,
            neg: 0,
            zero: 0,
            tol,
        };
        for v in eig.values.iter() {
            if *v > tol {
                out.pos += 1;
            } else if *v < -tol {
                out.neg += 1;
            } else {
                out.zero += 1;
            }
        }
        out
    }
}

/// Inertia at tolerance `1e-9 (1 + max|eig|)`.
pub fn inertia_of(m: &DMatrix<f64>) -> Inertia {
    Inertia::from_eig(&SymEig::new(m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubspaceKind {
    PrimalFlat,
    PrimalSharp,
    DualFlat,
    DualSharp,
}

/// Orthonormal basis (column-wise) of an eigen-subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    pub kind: SubspaceKind,
    pub columns: DMatrix<f64>,
}

impl SubspaceBasis {
    pub fn dimension(&self) -> usize {
        self.columns.ncols()
    }
}

/// Splits the eigenvectors of a symmetric matrix into the positive (flat)
/// and negative (sharp) blocks.
pub fn split_by_sign(
    m: &DMatrix<f64>,
    flat: SubspaceKind,
    sharp: SubspaceKind,
) -> Result<(SubspaceBasis, SubspaceBasis)> {
    let eig = SymEig::new(m);
    let tol = eig.sign_tol();
    if let Some(v) = eig.values.iter().find(|v| v.abs() <= tol) {
        return Err(Error::DegenerateSpectrum { eigenvalue: *v });
    }
    let pick = |positive: bool| {
        let cols: Vec<_> = (0..eig.dim())
            .filter(|&i| (eig.values[i] > 0.0) == positive)
            .map(|i| eig.vectors.column(i).into_owned())
            .collect();
        if cols.is_empty() {
            DMatrix::zeros(m.nrows(), 0)
        } else {
            DMatrix::from_columns(&cols)
        }
    };
    Ok((
        SubspaceBasis {
            kind: flat,
            columns: pick(true),
        },
        SubspaceBasis {
            kind: sharp,
            columns: pick(false),
        },
    ))
}

/// `(P♭, P♯)` from the primal Hessian at the pair.
pub fn primal_flat_sharp(p: &CanonicalProblem, pair: &CriticalPair) -> Result<(SubspaceBasis, SubspaceBasis)> {
    let h = p.primal_hessian(&pair.x, &pair.sigma)?;
    split_by_sign(&h, SubspaceKind::PrimalFlat, SubspaceKind::PrimalSharp)
}

/// `(Q♭, Q♯)` from the dual Hessian at the pair.
pub fn dual_flat_sharp(p: &CanonicalProblem, pair: &CriticalPair) -> Result<(SubspaceBasis, SubspaceBasis)> {
    let h = p.dual_hessian(&pair.sigma)?;
    split_by_sign(&h, SubspaceKind::DualFlat, SubspaceKind::DualSharp)
}

/// Primal bases when `m < n`, dual bases when `m > n`.
pub fn flat_sharp_bases(p: &CanonicalProblem, pair: &CriticalPair) -> Result<(SubspaceBasis, SubspaceBasis)> {
    use std::cmp::Ordering;
    match p.m().cmp(&p.n()) {
        Ordering::Less => primal_flat_sharp(p, pair),
        Ordering::Greater => dual_flat_sharp(p, pair),
        Ordering::Equal => Err(Error::InvalidParameter {
            name: "pair".into(),
            reason: "flat/sharp subspaces are only defined when m != n".into(),
        }),
    }
}

/// Result of the Woodbury identity check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SmwResidual {
    /// Frobenius norm of the difference between both sides.
    pub residual: f64,
    /// `‖(∇²Π)⁻¹‖_F`.
    pub inverse_norm: f64,
}

impl SmwResidual {
    pub const RTOL: f64 = 1e-8;

    pub fn within_tolerance(&self) -> bool {
        self.residual <= Self::RTOL * (1.0 + self.inverse_norm)
    }
}

/// `‖(∇²Π)⁻¹ − [G⁻¹ + G⁻¹ J (∇²Π^d)⁻¹ Jᵀ G⁻¹]‖_F` at the pair.
pub fn smw_check(p: &CanonicalProblem, pair: &CriticalPair) -> Result<SmwResidual> {
    let g = p.g_of(&pair.sigma)?;
    let g_inv = SymEig::new(&g)
        .inverse()
        .ok_or(Error::SingularG { residual: 0.0 })?;
    let hp = p.primal_hessian(&pair.x, &pair.sigma)?;
    let hp_inv = SymEig::new(&hp)
        .inverse()
        .ok_or_else(|| Error::SingularHessian("primal Hessian".into()))?;
    let hd = p.dual_hessian(&pair.sigma)?;
    let hd_inv = SymEig::new(&hd)
        .inverse()
        .ok_or_else(|| Error::SingularHessian("dual Hessian".into()))?;
    let j = p.grad_lambda(&pair.x)?;
    let gj = &g_inv * &j;
    let rhs = &g_inv + &gj * hd_inv * gj.transpose();
    Ok(SmwResidual {
        residual: (&hp_inv - rhs).norm(),
        inverse_norm: hp_inv.norm(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VerdictTag {
    /// `ς̄ ∈ S_a⁺`: `x̄` is a global minimizer and `ς̄` a maximizer on `S_a⁺`.
    GlobalMin,
    /// `ς̄ ∈ S_a⁻` local max of `Π^d`: `x̄` local max of `Π`.
    DoubleMax,
    /// `n = m`, `ς̄ ∈ S_a⁻` local min of `Π^d`: `x̄` local min of `Π`.
    DoubleMinStrong,
    /// `m < n`, `ς̄ ∈ S_a⁻` local min of `Π^d`: `x̄` is a saddle, minimal on `P♭`.
    DoubleMinWeak,
    /// `m > n`, `x̄` local min of `Π`: `ς̄` is a saddle of `Π^d`, minimal on `Q♭`.
    SaddleDualWeak,
    /// Saddle of both `Π^d` and `Π` in `S_a⁻`.
    Saddle,
    /// A Hessian (or `∇Λ` in the square case) is singular at tolerance.
    Degenerate,
    /// `G(ς̄)` is indefinite; triality makes no statement.
    Unclassified,
}

/// Which statement backs the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    CanonicalMinMax,
    DoubleMax,
    DoubleMinStrong,
    WeakDoubleMin,
    WeakSaddleDual,
    SaddleInSaMinus,
    Nondegeneracy,
    OutsideTriality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Caveat {
    /// `G(ς̄)` is singular positive semidefinite; `x̄` may be non-unique.
    SaPlusBoundary,
    /// `x̄` is a minimum-norm solution of a singular equilibrium system.
    MinNormRecovery,
    /// `ς̄` sits on a wall of the dual domain.
    DomainWall,
    /// The inertia predicted by the Schur-complement count did not match.
    InertiaMismatch,
    /// The pair did not meet the convergence criteria.
    NotConverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Evidence {
    pub rule: Rule,
    pub smw: Option<SmwResidual>,
    pub caveats: Vec<Caveat>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialityVerdict {
    pub tag: VerdictTag,
    pub primal_inertia: Option<Inertia>,
    pub dual_inertia: Option<Inertia>,
    pub bases: Option<(SubspaceBasis, SubspaceBasis)>,
    pub evidence: Evidence,
}

/// Assigns a verdict from the region of `ς̄` and the second-order data.
pub fn classify(p: &CanonicalProblem, pair: &CriticalPair) -> TrialityVerdict {
    let (n, m) = (p.n(), p.m());
    let mut caveats = Vec::new();
    if !pair.converged {
        caveats.push(Caveat::NotConverged);
    }
    if pair.min_norm {
        caveats.push(Caveat::MinNormRecovery);
    }
    if pair.at_domain_wall {
        caveats.push(Caveat::DomainWall);
    }

    let primal_h = p.primal_hessian(&pair.x, &pair.sigma).ok();
    let primal_inertia = primal_h.as_ref().map(inertia_of);
    let dual_h = p.dual_hessian(&pair.sigma).ok();
    let dual_inertia = dual_h.as_ref().map(inertia_of);
    let smw = smw_check(p, pair).ok();

    let verdict = |tag, rule, bases, caveats| TrialityVerdict {
        tag,
        primal_inertia,
        dual_inertia,
        bases,
        evidence: Evidence { rule, smw, caveats },
    };

    let region = pair.region.tag;
    if matches!(region, RegionTag::Indefinite | RegionTag::OutsideSa) {
        return verdict(VerdictTag::Unclassified, Rule::OutsideTriality, None, caveats);
    }

    let degenerate = !pair.converged
        || primal_inertia.map_or(true, |i| i.zero > 0)
        || dual_inertia.map_or(false, |i| i.zero > 0)
        || (pair.min_norm && region != RegionTag::SaPlusBoundary);
    if degenerate {
        return verdict(VerdictTag::Degenerate, Rule::Nondegeneracy, None, caveats);
    }

    if region.is_sa_plus() {
        if region == RegionTag::SaPlusBoundary {
            caveats.push(Caveat::SaPlusBoundary);
        }
        return verdict(VerdictTag::GlobalMin, Rule::CanonicalMinMax, None, caveats);
    }

    // S_a⁻: G is negative definite, so both Hessians exist
    let (Some(pi), Some(di)) = (primal_inertia, dual_inertia) else {
        return verdict(VerdictTag::Degenerate, Rule::Nondegeneracy, None, caveats);
    };

    if di.is_negative_definite() {
        if !pi.is_negative_definite() {
            caveats.push(Caveat::InertiaMismatch);
        }
        return verdict(VerdictTag::DoubleMax, Rule::DoubleMax, None, caveats);
    }

    if di.is_positive_definite() && n == m {
        let j = p.grad_lambda(&pair.x).expect("dimensions checked");
        if !SymEig::new(&(j.transpose() * &j)).is_invertible() {
            return verdict(VerdictTag::Degenerate, Rule::Nondegeneracy, None, caveats);
        }
        if !pi.is_positive_definite() {
            caveats.push(Caveat::InertiaMismatch);
        }
        return verdict(VerdictTag::DoubleMinStrong, Rule::DoubleMinStrong, None, caveats);
    }

    if di.is_positive_definite() && m < n {
        if pi.counts() != (m, n - m, 0) {
            caveats.push(Caveat::InertiaMismatch);
            return verdict(VerdictTag::Degenerate, Rule::Nondegeneracy, None, caveats);
        }
        let h = primal_h.expect("inertia implies Hessian");
        return match split_by_sign(&h, SubspaceKind::PrimalFlat, SubspaceKind::PrimalSharp) {
            Ok(b) => verdict(VerdictTag::DoubleMinWeak, Rule::WeakDoubleMin, Some(b), caveats),
            Err(_) => verdict(VerdictTag::Degenerate, Rule::Nondegeneracy, None, caveats),
        };
    }

    if m > n && pi.is_positive_definite() {
        if di.counts() != (n, m - n, 0) {
            caveats.push(Caveat::InertiaMismatch);
            return verdict(VerdictTag::Degenerate, Rule::Nondegeneracy, None, caveats);
        }
        let h = dual_h.expect("inertia implies Hessian");
        return match split_by_sign(&h, SubspaceKind::DualFlat, SubspaceKind::DualSharp) {
            Ok(b) => verdict(VerdictTag::SaddleDualWeak, Rule::WeakSaddleDual, Some(b), caveats),
            Err(_) => verdict(VerdictTag::Degenerate, Rule::Nondegeneracy, None, caveats),
        };
    }

    verdict(VerdictTag::Saddle, Rule::SaddleInSaMinus, None, caveats)
}
