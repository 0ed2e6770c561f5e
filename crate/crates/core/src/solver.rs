//! Multistart search for critical points of the canonical dual.
//!
//! Each start runs a damped Newton iteration on `∇Π^d(ς) = 0` with a
//! backtracking line search on `‖∇Π^d‖` and a fraction-to-boundary rule that
//! keeps iterates strictly inside the dual feasible box. Starts that meet a
//! singular `G(ς)` on a trial step halve the step and continue.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dual::{DualEval, RegionLabel, RegionTag};
use crate::error::{Error, Result};
use crate::family::{CanonicalFamily, CanonicalFunction};
use crate::linalg::{inf_norm, SymEig};
use crate::problem::CanonicalProblem;

/// Fraction of the distance to a dual-domain wall a single step may cover.
pub const FRACTION_TO_BOUNDARY: f64 = 0.99;

/// Relative zero-duality-gap tolerance required of a converged pair.
pub const GAP_RTOL: f64 = 1e-8;

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

/// Multistart settings. `None` box means the default box for the family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SearchConfig {
    pub starts: usize,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub search_box: Option<Vec<[f64; 2]>>,
    pub tol_newton: f64,
    pub max_iter: usize,
    pub dedup_radius: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            starts: 64,
            search_box: None,
            tol_newton: 1e-10,
            max_iter: 100,
            dedup_radius: 1e-6,
        }
    }
}

impl SearchConfig {
    /// Checks the configuration against `p` and returns the resolved box.
    pub fn resolve_box(&self, p: &CanonicalProblem) -> Result<Vec<[f64; 2]>> {
        if self.starts == 0 {
            return Err(Error::InvalidConfig("starts must be at least 1".into()));
        }
        if !(self.tol_newton > 0.0) {
            return Err(Error::InvalidConfig("tolNewton must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("maxIter must be at least 1".into()));
        }
        if !(self.dedup_radius > 0.0) {
            return Err(Error::InvalidConfig("dedupRadius must be positive".into()));
        }
        let bx = match &self.search_box {
            Some(b) => b.clone(),
            None => default_box(p),
        };
        if bx.len() != p.m() {
            return Err(Error::InvalidConfig(format!(
                "box has {} intervals, dual dimension is {}",
                bx.len(),
                p.m()
            )));
        }
        for (k, ([lo, hi], iv)) in bx.iter().zip(p.family().dual_box()).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidConfig(format!("box[{k}] = [{lo}, {hi}] is not an interval")));
            }
            if *lo < iv.lower || *hi > iv.upper {
                return Err(Error::InvalidConfig(format!(
                    "box[{k}] = [{lo}, {hi}] leaves the dual domain [{}, {}]",
                    iv.lower, iv.upper
                )));
            }
        }
        Ok(bx)
    }
}

/// Default multistart box.
///
/// Bounded dual coordinates use the domain shrunk by `1e-3` of its width at
/// each end. Unbounded coordinates (quadratic wells) use `[-s_k, s_k]` with
/// `s_k = 2 α_k (1 + |λ_k|) + ‖A‖_F + ‖f‖ + Σ_j ‖b_j‖`.
pub fn default_box(p: &CanonicalProblem) -> Vec<[f64; 2]> {
    let spread = p.a().norm() + p.f().norm() + p.b_vectors().iter().map(|b| b.norm()).sum::<f64>();
    p.family()
        .dual_box()
        .iter()
        .enumerate()
        .map(|(k, iv)| {
            if iv.is_bounded() {
                let w = iv.upper - iv.lower;
                [iv.lower + 1e-3 * w, iv.upper - 1e-3 * w]
            } else {
                let s = match p.family() {
                    CanonicalFamily::QuadraticWell(q) => {
                        2.0 * q.alpha[k] * (1.0 + q.lambda[k].abs()) + spread
                    }
                    CanonicalFamily::Log(_) => 1.0 + spread,
                };
                [iv.lower.max(-s), iv.upper.min(s)]
            }
        })
        .collect()
}

/// Start points: a uniform grid for `m ≤ 3`, a Halton sequence beyond.
pub fn seeds(bx: &[[f64; 2]], starts: usize) -> Vec<DVector<f64>> {
    let m = bx.len();
    if m <= 3 {
        let mut per = 1usize;
        while per.pow(m as u32) < starts {
            per += 1;
        }
        let axis = |k: usize, i: usize| {
            let [lo, hi] = bx[k];
            if per == 1 {
                0.5 * (lo + hi)
            } else {
                lo + (hi - lo) * i as f64 / (per - 1) as f64
            }
        };
        let total = per.pow(m as u32);
        (0..total)
            .map(|mut idx| {
                DVector::from_iterator(
                    m,
                    (0..m).map(|k| {
                        let i = idx % per;
                        idx /= per;
                        axis(k, i)
                    }),
                )
            })
            .collect()
    } else {
        const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];
        (1..=starts as u64)
            .map(|i| {
                DVector::from_iterator(
                    m,
                    (0..m).map(|k| {
                        let base = PRIMES[k % PRIMES.len()];
                        let [lo, hi] = bx[k];
                        lo + (hi - lo) * radical_inverse(i, base)
                    }),
                )
            })
            .collect()
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    out
}

/// A dual critical point with its recovered primal point and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPair {
    pub sigma: DVector<f64>,
    pub x: DVector<f64>,
    pub primal_value: f64,
    pub dual_value: f64,
    pub xi_value: f64,
    pub grad_primal_norm: f64,
    pub grad_dual_norm: f64,
    pub gap_value: f64,
    pub region: RegionLabel,
    pub converged: bool,
    pub iterations: usize,
    /// `x` came from the minimum-norm solution of a singular `G(ς)`.
    pub min_norm: bool,
    /// `ς` sits within rounding of a wall of the dual feasible box.
    pub at_domain_wall: bool,
}

impl CriticalPair {
    /// `|Π(x̄) − Π^d(ς̄)|`.
    pub fn duality_gap(&self) -> f64 {
        (self.primal_value - self.dual_value).abs()
    }

    /// `ς̄ ∈ S_a⁺ ∪ S_a⁻`, where triality makes a statement about the pair.
    pub fn in_triality_region(&self) -> bool {
        self.region.tag.is_sa_plus() || self.region.tag == RegionTag::SaMinus
    }
}

fn newton_direction(eval: &DualEval) -> DVector<f64> {
    let g = &eval.gradient;
    match &eval.hessian {
        Some(h) => {
            let eig = SymEig::new(h);
            let floor = 1e-14 * eig.max_abs();
            let invertible = eig.max_abs() > 0.0 && eig.values.iter().all(|v| v.abs() > floor);
            if invertible {
                let (d, _) = eig.pinv_solve(g);
                -d
            } else {
                // steepest descent on ½‖∇Π^d‖²
                -(h * g)
            }
        }
        None => g.clone(),
    }
}

fn max_step(family: &CanonicalFamily, s: &DVector<f64>, d: &DVector<f64>) -> f64 {
    let mut alpha: f64 = 1.0;
    for ((sk, dk), iv) in s.iter().zip(d.iter()).zip(family.dual_box()) {
        if *dk < 0.0 && iv.lower.is_finite() {
            alpha = alpha.min(FRACTION_TO_BOUNDARY * (sk - iv.lower) / -dk);
        } else if *dk > 0.0 && iv.upper.is_finite() {
            alpha = alpha.min(FRACTION_TO_BOUNDARY * (iv.upper - sk) / dk);
        }
    }
    alpha.max(0.0)
}

/// Positive and negative eigenvalue counts of `G(ς)`, or `None` when it is
/// singular at tolerance.
fn g_signature(eval: &DualEval) -> Option<(usize, usize)> {
    let eig = &eval.g_eig;
    let tol = eig.sign_tol();
    let pos = eig.values.iter().filter(|v| **v > tol).count();
    let neg = eig.values.iter().filter(|v| **v < -tol).count();
    (pos + neg == eig.dim()).then_some((pos, neg))
}

fn near_wall(family: &CanonicalFamily, s: &DVector<f64>) -> bool {
    s.iter().zip(family.dual_box()).any(|(sk, iv)| {
        let near = |b: f64| b.is_finite() && (sk - b).abs() <= 1e-8 * (1.0 + b.abs());
        near(iv.lower) || near(iv.upper)
    })
}

/// Damped Newton refinement of a single start.
///
/// A trial step that changes the inertia of `G(ς)` has crossed a singular
/// `G` and is halved like any other rejected step, so the iterates stay in
/// the region (`S_a⁺`, `S_a⁻`, or an indefinite cell) where they started.
///
/// Fails only when the start itself cannot be evaluated (outside the dual
/// domain, or singular `G` with `F` off its column space). Running out of
/// iterations returns the last iterate with `converged = false`.
pub fn refine(p: &CanonicalProblem, start: &DVector<f64>, cfg: &SearchConfig) -> Result<CriticalPair> {
    let family = p.family();
    let mut s = start.clone();
    let mut eval = p.dual_evaluate(&s)?;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        if inf_norm(&eval.gradient) <= cfg.tol_newton {
            break;
        }
        let d = newton_direction(&eval);
        let merit = eval.gradient.norm();
        let signature = g_signature(&eval);
        let mut alpha = max_step(family, &s, &d);
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            if alpha * inf_norm(&d) <= f64::EPSILON * (1.0 + inf_norm(&s)) {
                break;
            }
            let trial = &s + &d * alpha;
            if let Ok(te) = p.dual_evaluate(&trial) {
                let crossed = matches!(
                    (signature, g_signature(&te)),
                    (Some(a), Some(b)) if a != b
                );
                if !crossed && te.gradient.norm() <= (1.0 - ARMIJO * alpha) * merit {
                    accepted = Some((trial, te));
                    break;
                }
            }
            alpha *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((trial, te)) => {
                s = trial;
                eval = te;
            }
            None => break,
        }
    }
    package(p, s, eval, iterations, cfg)
}

fn package(
    p: &CanonicalProblem,
    sigma: DVector<f64>,
    eval: DualEval,
    iterations: usize,
    cfg: &SearchConfig,
) -> Result<CriticalPair> {
    let x = eval.x;
    let grad_dual_norm = inf_norm(&eval.gradient);
    let region = p.classify_region(&sigma)?;
    let (primal_value, grad_primal_norm) = match (p.primal_value(&x), p.primal_gradient(&x)) {
        (Ok(v), Ok(g)) => (v, inf_norm(&g)),
        _ => (f64::NAN, f64::NAN),
    };
    let xi_value = p.xi_total(&x, &sigma)?;
    let gap_value = p.gap(&x, &sigma)?;
    let gap_ok = (primal_value - eval.value).abs() <= GAP_RTOL * (1.0 + primal_value.abs());
    let converged = grad_dual_norm <= cfg.tol_newton && gap_ok && region.tag != RegionTag::OutsideSa;
    let at_domain_wall = near_wall(p.family(), &sigma);
    Ok(CriticalPair {
        sigma,
        x,
        primal_value,
        dual_value: eval.value,
        xi_value,
        grad_primal_norm,
        grad_dual_norm,
        gap_value,
        region,
        converged,
        iterations,
        min_norm: eval.min_norm,
        at_domain_wall,
    })
}

/// Runs every start, keeps converged pairs, removes duplicates within
/// `dedup_radius` (infinity norm) and orders the result by dual value,
/// largest first.
pub fn find_critical_points(p: &CanonicalProblem, cfg: &SearchConfig) -> Result<Vec<CriticalPair>> {
    let bx = cfg.resolve_box(p)?;
    let starts = seeds(&bx, cfg.starts);
    let results: Vec<Option<CriticalPair>> = starts
        .par_iter()
        .map(|s0| refine(p, s0, cfg).ok().filter(|pair| pair.converged))
        .collect();

    let mut kept: Vec<CriticalPair> = Vec::new();
    for pair in results.into_iter().flatten() {
        match kept
            .iter_mut()
            .find(|q| inf_norm(&(&q.sigma - &pair.sigma)) <= cfg.dedup_radius)
        {
            Some(q) => {
                if pair.grad_dual_norm < q.grad_dual_norm {
                    *q = pair;
                }
            }
            None => kept.push(pair),
        }
    }
    if kept.is_empty() {
        return Err(Error::NoCriticalPoint);
    }
    kept.sort_by(|a, b| {
        b.dual_value.total_cmp(&a.dual_value).then_with(|| {
            a.sigma
                .iter()
                .zip(b.sigma.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    Ok(kept)
}

/// True when at least one pair lies in `S_a⁺`. Its absence is the indicator
/// of a possibly hard instance whose dual has no critical point there.
pub fn has_sa_plus_point(pairs: &[CriticalPair]) -> bool {
    pairs.iter().any(|q| q.region.tag.is_sa_plus())
}
