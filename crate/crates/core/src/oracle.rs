//! Independent numerical checks: finite differences, neighbourhood probes,
//! a dense-grid global minimum for small `n`, and audits of the canonical
//! duality relations.
//!
//! Nothing here feeds back into the solver or classifier. Probes and grids
//! are evidence; the second-order classification stays authoritative.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{CanonicalFamily, CanonicalFunction};
use crate::linalg::{inf_norm, SymEig};
use crate::problem::CanonicalProblem;
use crate::solver::CriticalPair;
use crate::triality::{SubspaceBasis, TrialityVerdict, VerdictTag};

/// Absolute slack on probe deltas.
pub const PROBE_SLACK: f64 = 1e-12;

const FD_STEPS: [f64; 2] = [1e-4, 1e-6];
const PROBE_SEED: u64 = 0x5eed_7a1;

// ---------------------------------------------------------------------------
// finite differences

/// Relative errors `‖analytic − fd‖∞ / max(1, ‖analytic‖∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FdReport {
    pub grad_err: f64,
    pub hess_err: f64,
}

fn rel_err(analytic: &[f64], approx: &[f64]) -> f64 {
    let scale = analytic.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let diff = analytic
        .iter()
        .zip(approx)
        .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
    diff / scale
}

/// Central differences of a vector-valued map along each axis, at step `h`.
fn central_jacobian<F>(f: &F, x: &DVector<f64>, h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let n = x.len();
    let mut cols = Vec::with_capacity(n);
    for i in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        cols.push((f(&xp)? - f(&xm)?) / (2.0 * h));
    }
    let rows = cols.first().map_or(0, |c| c.len());
    let mut out = DMatrix::zeros(rows, n);
    for (i, c) in cols.iter().enumerate() {
        out.set_column(i, c);
    }
    Ok(out)
}

/// Smallest error over plain central differences at `1e-4` and `1e-6` and a
/// Richardson extrapolation from `1e-4`.
fn best_fd_error<F>(f: &F, x: &DVector<f64>, analytic: &DMatrix<f64>) -> Result<f64>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let mut best: Option<f64> = None;
    let mut last_err = None;
    let mut keep = |r: Result<DMatrix<f64>>| match r {
        Ok(m) => {
            let e = rel_err(analytic.as_slice(), m.as_slice());
            best = Some(best.map_or(e, |b: f64| b.min(e)));
        }
        Err(e) => last_err = Some(e),
    };
    for h in FD_STEPS {
        keep(central_jacobian(f, x, h));
    }
    let h = FD_STEPS[0];
    keep(central_jacobian(f, x, h).and_then(|coarse| {
        let fine = central_jacobian(f, x, h / 2.0)?;
        Ok((fine * 4.0 - coarse) / 3.0)
    }));
    match (best, last_err) {
        (Some(b), _) => Ok(b),
        (None, Some(e)) => Err(e),
        (None, None) => unreachable!("at least one step attempted"),
    }
}

/// Compares an analytic gradient and Hessian with finite differences of the
/// value and the gradient respectively.
pub fn fd_check_with<V, G, H>(value: V, gradient: G, hessian: H, x: &DVector<f64>) -> Result<FdReport>
where
    V: Fn(&DVector<f64>) -> Result<f64>,
    G: Fn(&DVector<f64>) -> Result<DVector<f64>>,
    H: Fn(&DVector<f64>) -> Result<DMatrix<f64>>,
{
    let g = gradient(x)?;
    let h = hessian(x)?;
    let scalar = |y: &DVector<f64>| value(y).map(|v| DVector::from_element(1, v));
    let g_row = DMatrix::from_row_slice(1, g.len(), g.as_slice());
    let grad_err = best_fd_error(&scalar, x, &g_row)?;
    let hess_err = best_fd_error(&gradient, x, &h)?;
    Ok(FdReport { grad_err, hess_err })
}

/// Finite-difference audit of `Π` at `x`.
pub fn fd_check_primal(p: &CanonicalProblem, x: &DVector<f64>) -> Result<FdReport> {
    fd_check_with(
        |y| p.primal_value(y),
        |y| p.primal_gradient(y),
        |y| p.primal_hessian_at(y),
        x,
    )
}

/// Finite-difference audit of `Π^d` at `ς`.
pub fn fd_check_dual(p: &CanonicalProblem, sigma: &DVector<f64>) -> Result<FdReport> {
    fd_check_with(
        |s| p.dual_value(s),
        |s| p.dual_gradient(s),
        |s| p.dual_hessian(s),
        sigma,
    )
}

/// Finite-difference audit of `V` at `ξ`.
pub fn fd_check_family(family: &CanonicalFamily, xi: &DVector<f64>) -> Result<FdReport> {
    fd_check_with(
        |y| family.value(y),
        |y| family.gradient(y),
        |y| family.hessian(y),
        xi,
    )
}

/// Finite-difference audit of `V*` at `ς`.
pub fn fd_check_conjugate(family: &CanonicalFamily, sigma: &DVector<f64>) -> Result<FdReport> {
    fd_check_with(
        |s| family.conjugate_value(s),
        |s| family.conjugate_gradient(s),
        |s| family.conjugate_hessian(s),
        sigma,
    )
}

// ---------------------------------------------------------------------------
// canonical relations

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CanonicalAudit {
    /// max `|V(ξ) + V*(∇V(ξ)) − ⟨ξ; ∇V(ξ)⟩|`
    pub fenchel_residual: f64,
    /// max `‖∇V*(∇V(ξ)) − ξ‖∞`
    pub inverse_residual: f64,
}

impl CanonicalAudit {
    pub fn max_residual(&self) -> f64 {
        self.fenchel_residual.max(self.inverse_residual)
    }
}

pub fn canonical_audit(family: &CanonicalFamily, samples: &[DVector<f64>]) -> Result<CanonicalAudit> {
    let mut out = CanonicalAudit {
        fenchel_residual: 0.0,
        inverse_residual: 0.0,
    };
    for xi in samples {
        let s = family.gradient(xi)?;
        let fenchel = family.value(xi)? + family.conjugate_value(&s)? - xi.dot(&s);
        let back = family.conjugate_gradient(&s)?;
        out.fenchel_residual = out.fenchel_residual.max(fenchel.abs());
        out.inverse_residual = out.inverse_residual.max(inf_norm(&(back - xi)));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// neighbourhood probes

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeEvidence {
    LooksMin,
    LooksMax,
    LooksSaddle,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProbeReport {
    pub center: Vec<f64>,
    pub radius: f64,
    pub samples: usize,
    pub infeasible: usize,
    pub min_delta: f64,
    pub max_delta: f64,
    pub evidence: ProbeEvidence,
}

fn evidence_of(min_delta: f64, max_delta: f64) -> ProbeEvidence {
    let below = min_delta < -PROBE_SLACK;
    let above = max_delta > PROBE_SLACK;
    match (below, above) {
        (true, true) => ProbeEvidence::LooksSaddle,
        (false, true) => ProbeEvidence::LooksMin,
        (true, false) => ProbeEvidence::LooksMax,
        (false, false) => ProbeEvidence::Inconclusive,
    }
}

/// Samples `f(center + r δ) − f(center)` with `δ` uniform on the unit sphere
/// of the span of `basis` (or the whole space) and `r ∈ [radius/2, radius]`.
///
/// Samples outside the domain are skipped and counted. When more than 20%
/// fail, the radius is halved, up to six times.
pub fn probe_with<F>(
    f: F,
    center: &DVector<f64>,
    radius: f64,
    samples: usize,
    basis: Option<&DMatrix<f64>>,
) -> Result<ProbeReport>
where
    F: Fn(&DVector<f64>) -> Result<f64>,
{
    if !(radius > 0.0) || samples == 0 {
        return Err(Error::InvalidParameter {
            name: "probe".into(),
            reason: "radius must be positive and samples at least 1".into(),
        });
    }
    let k = basis.map_or(center.len(), |b| b.ncols());
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "subspace".into(),
            reason: "basis has no columns".into(),
        });
    }
    let f0 = f(center)?;
    let mut radius = radius;
    for attempt in 0..=6 {
        let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
        let mut infeasible = 0;
        let mut min_delta = f64::INFINITY;
        let mut max_delta = f64::NEG_INFINITY;
        for _ in 0..samples {
            let coords = loop {
                let c = DVector::from_iterator(k, (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)));
                let norm = c.norm();
                if norm > 1e-12 {
                    break c / norm;
                }
            };
            let dir = match basis {
                Some(b) => b * coords,
                None => coords,
            };
            let r = radius * (0.5 + 0.5 * rng.gen::<f64>());
            match f(&(center + dir * r)) {
                Ok(v) => {
                    let d = v - f0;
                    min_delta = min_delta.min(d);
                    max_delta = max_delta.max(d);
                }
                Err(_) => infeasible += 1,
            }
        }
        if infeasible == samples && attempt == 6 {
            return Err(Error::AllInfeasible);
        }
        if infeasible * 5 > samples && attempt < 6 {
            radius *= 0.5;
            continue;
        }
        return Ok(ProbeReport {
            center: center.iter().copied().collect(),
            radius,
            samples,
            infeasible,
            min_delta,
            max_delta,
            evidence: evidence_of(min_delta, max_delta),
        });
    }
    unreachable!("loop returns on the last attempt")
}

/// Default probe radius `1e-3 (1 + ‖center‖)`.
pub fn default_radius(center: &DVector<f64>) -> f64 {
    1e-3 * (1.0 + center.norm())
}

/// Default dual radius, capped at a tenth of the distance to the nearest
/// singular `G`. Since `‖Σ δ_k B^k‖₂ ≤ ‖δ‖ (Σ ‖B^k‖₂²)^½`, the inertia of `G`
/// cannot change within `min|eig G| / (Σ ‖B^k‖₂²)^½` of `ς`.
pub fn dual_probe_radius(p: &CanonicalProblem, sigma: &DVector<f64>) -> f64 {
    let base = default_radius(sigma);
    let Ok(g) = p.g_of(sigma) else { return base };
    let gap = SymEig::new(&g)
        .values
        .iter()
        .fold(f64::INFINITY, |a, v| a.min(v.abs()));
    let spread = p
        .b_matrices()
        .iter()
        .map(|b| {
            let n2 = SymEig::new(b).max_abs();
            n2 * n2
        })
        .sum::<f64>()
        .sqrt();
    if spread > 0.0 {
        base.min(0.1 * gap / spread)
    } else {
        base
    }
}

/// Probes `Π` around `x̄`, optionally restricted to a primal subspace.
pub fn probe(
    p: &CanonicalProblem,
    x: &DVector<f64>,
    radius: f64,
    samples: usize,
    subspace: Option<&SubspaceBasis>,
) -> Result<ProbeReport> {
    probe_with(|y| p.primal_value(y), x, radius, samples, subspace.map(|s| &s.columns))
}

/// Probes `Π^d` around `ς̄`, optionally restricted to a dual subspace.
pub fn probe_dual(
    p: &CanonicalProblem,
    sigma: &DVector<f64>,
    radius: f64,
    samples: usize,
    subspace: Option<&SubspaceBasis>,
) -> Result<ProbeReport> {
    probe_with(|s| p.dual_value(s), sigma, radius, samples, subspace.map(|s| &s.columns))
}

// ---------------------------------------------------------------------------
// dense grid

#[derive(Debug, Clone, PartialEq)]
pub struct GridMinimum {
    /// Best grid node.
    pub grid_x: DVector<f64>,
    pub grid_value: f64,
    /// After pattern-search polishing on the `3^n` stencil.
    pub x: DVector<f64>,
    pub value: f64,
}

/// Allocation-free evaluation of `Π` on plain slices.
struct PrimalEvaluator<'a> {
    p: &'a CanonicalProblem,
    n: usize,
    a: Vec<f64>,
    b_mats: Vec<Vec<f64>>,
    b_vecs: Vec<Vec<f64>>,
    f: Vec<f64>,
    xi: DVector<f64>,
}

impl<'a> PrimalEvaluator<'a> {
    fn new(p: &'a CanonicalProblem) -> Self {
        let row_major = |m: &DMatrix<f64>| m.transpose().as_slice().to_vec();
        Self {
            p,
            n: p.n(),
            a: row_major(p.a()),
            b_mats: p.b_matrices().iter().map(row_major).collect(),
            b_vecs: p.b_vectors().iter().map(|b| b.as_slice().to_vec()).collect(),
            f: p.f().as_slice().to_vec(),
            xi: DVector::zeros(p.m()),
        }
    }

    fn quad(&self, m: &[f64], x: &[f64]) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            let row = &m[i * n..(i + 1) * n];
            acc += x[i] * row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
        acc
    }

    fn value(&mut self, x: &[f64]) -> Option<f64> {
        for k in 0..self.b_mats.len() {
            let lin: f64 = self.b_vecs[k].iter().zip(x).map(|(a, b)| a * b).sum();
            self.xi[k] = 0.5 * self.quad(&self.b_mats[k], x) + lin;
        }
        let v = self.p.family().value(&self.xi).ok()?;
        let fx: f64 = self.f.iter().zip(x).map(|(a, b)| a * b).sum();
        Some(v + 0.5 * self.quad(&self.a, x) - fx)
    }
}

/// Dense-grid minimum of `Π` over `bx` (`n ≤ 3`), then polished by a pattern
/// search on the `3^n` neighbour stencil with halving steps.
///
/// Fails with [`Error::BoxTooCoarse`] when the best node lies on the box
/// boundary.
pub fn grid_global_min(p: &CanonicalProblem, bx: &[[f64; 2]], points_per_axis: usize) -> Result<GridMinimum> {
    let n = p.n();
    if n > 3 {
        return Err(Error::InvalidParameter {
            name: "n".into(),
            reason: format!("grid search supports n <= 3, got {n}"),
        });
    }
    crate::error::check_len("box", n, bx.len())?;
    if points_per_axis < 3 {
        return Err(Error::InvalidParameter {
            name: "pointsPerAxis".into(),
            reason: "need at least 3 points per axis".into(),
        });
    }
    let ppa = points_per_axis;
    let node = |k: usize, i: usize| bx[k][0] + (bx[k][1] - bx[k][0]) * i as f64 / (ppa - 1) as f64;
    let mut eval = PrimalEvaluator::new(p);
    let total = ppa.pow(n as u32);
    let mut x = vec![0.0; n];
    let mut idx = vec![0usize; n];
    let mut best: Option<(f64, Vec<usize>)> = None;
    for flat in 0..total {
        let mut rem = flat;
        for k in 0..n {
            idx[k] = rem % ppa;
            rem /= ppa;
            x[k] = node(k, idx[k]);
        }
        if let Some(v) = eval.value(&x) {
            if best.as_ref().map_or(true, |(b, _)| v < *b) {
                best = Some((v, idx.clone()));
            }
        }
    }
    let (grid_value, best_idx) = best.ok_or(Error::AllInfeasible)?;
    if best_idx.iter().any(|&i| i == 0 || i == ppa - 1) {
        return Err(Error::BoxTooCoarse);
    }
    let grid_x: Vec<f64> = best_idx.iter().enumerate().map(|(k, &i)| node(k, i)).collect();

    // pattern search
    let mut cur = grid_x.clone();
    let mut cur_v = grid_value;
    let mut steps: Vec<f64> = bx.iter().map(|[lo, hi]| (hi - lo) / (ppa - 1) as f64).collect();
    let stencil = 3usize.pow(n as u32);
    let mut trial = vec![0.0; n];
    for _ in 0..2000 {
        let mut improved = None;
        for s in 0..stencil {
            let mut rem = s;
            for k in 0..n {
                let off = (rem % 3) as f64 - 1.0;
                rem /= 3;
                trial[k] = cur[k] + off * steps[k];
            }
            if let Some(v) = eval.value(&trial) {
                if v < cur_v && improved.as_ref().map_or(true, |(b, _)| v < *b) {
                    improved = Some((v, trial.clone()));
                }
            }
        }
        match improved {
            Some((v, t)) => {
                cur_v = v;
                cur = t;
            }
            None => {
                steps.iter_mut().for_each(|h| *h *= 0.5);
                let scale = 1.0 + cur.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                if steps.iter().all(|h| *h < 1e-13 * scale) {
                    break;
                }
            }
        }
    }
    Ok(GridMinimum {
        grid_x: DVector::from_vec(grid_x),
        grid_value,
        x: DVector::from_vec(cur),
        value: cur_v,
    })
}

// ---------------------------------------------------------------------------
// corroboration of verdicts

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerifyOptions {
    /// `None` uses `1e-3 (1 + ‖center‖)`.
    pub probe_radius: Option<f64>,
    pub probe_samples: usize,
    /// Run the dense-grid check for `GlobalMin` verdicts when `n ≤ 3`.
    pub grid_check: bool,
    /// `None` picks 20001 / 2001 / 201 points per axis for `n` = 1 / 2 / 3.
    pub grid_points: Option<usize>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            probe_radius: None,
            probe_samples: 512,
            grid_check: true,
            grid_points: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NamedProbe {
    /// `full`, `primal-flat`, `primal-sharp`, `dual-flat` or `dual-sharp`.
    pub subspace: String,
    pub expected: ProbeEvidence,
    pub report: ProbeReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GridCheck {
    pub x: Vec<f64>,
    pub value: f64,
    pub half_width: f64,
    /// `‖x_grid − x̄‖∞`.
    pub distance: f64,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Corroboration {
    pub probes: Vec<NamedProbe>,
    pub grid: Option<GridCheck>,
    pub agrees: bool,
    pub failures: Vec<String>,
}

fn default_grid_points(n: usize) -> usize {
    match n {
        1 => 20001,
        2 => 2001,
        _ => 201,
    }
}

/// Dense-grid check of a claimed global minimizer. The box starts at
/// `[-R, R]^n` with `R = max(3, 2‖x̄‖∞ + 1)` and doubles (up to five times)
/// while the grid minimizer touches its boundary.
pub fn grid_check(p: &CanonicalProblem, pair: &CriticalPair, points: usize) -> Result<GridCheck> {
    let mut half = (2.0 * inf_norm(&pair.x) + 1.0).max(3.0);
    let mut last = Error::BoxTooCoarse;
    for _ in 0..6 {
        let bx = vec![[-half, half]; p.n()];
        match grid_global_min(p, &bx, points) {
            Ok(gm) => {
                let tol = 1e-8 * (1.0 + pair.primal_value.abs());
                let distance = inf_norm(&(&gm.x - &pair.x));
                return Ok(GridCheck {
                    x: gm.x.iter().copied().collect(),
                    value: gm.value,
                    half_width: half,
                    distance,
                    agrees: gm.value >= pair.primal_value - tol,
                });
            }
            Err(Error::BoxTooCoarse) => {
                half *= 2.0;
            }
            Err(e) => {
                last = e;
                break;
            }
        }
    }
    Err(last)
}

/// Checks a verdict against neighbourhood probes (and the grid for global
/// minima). Disagreements are listed in `failures`.
pub fn corroborate(
    p: &CanonicalProblem,
    pair: &CriticalPair,
    verdict: &TrialityVerdict,
    opts: &VerifyOptions,
) -> Corroboration {
    use ProbeEvidence::*;
    let mut probes = Vec::new();
    let mut failures = Vec::new();
    let primal_r = opts.probe_radius.unwrap_or_else(|| default_radius(&pair.x));
    let dual_r = opts
        .probe_radius
        .unwrap_or_else(|| dual_probe_radius(p, &pair.sigma));
    let samples = opts.probe_samples;

    let mut run = |name: &str, expected: ProbeEvidence, dual: bool, basis: Option<&SubspaceBasis>| {
        let r = if dual {
            probe_dual(p, &pair.sigma, dual_r, samples, basis)
        } else {
            probe(p, &pair.x, primal_r, samples, basis)
        };
        match r {
            Ok(report) => {
                if report.evidence != expected {
                    failures.push(format!(
                        "{name} probe: expected {expected:?}, observed {:?}",
                        report.evidence
                    ));
                }
                probes.push(NamedProbe {
                    subspace: name.to_string(),
                    expected,
                    report,
                });
            }
            Err(e) => failures.push(format!("{name} probe failed: {e}")),
        }
    };

    let bases = verdict.bases.as_ref();
    match verdict.tag {
        VerdictTag::GlobalMin => run("full", LooksMin, false, None),
        VerdictTag::DoubleMax => run("full", LooksMax, false, None),
        VerdictTag::DoubleMinStrong => run("full", LooksMin, false, None),
        VerdictTag::DoubleMinWeak => {
            run("full", LooksSaddle, false, None);
            if let Some((flat, sharp)) = bases {
                run("primal-flat", LooksMin, false, Some(flat));
                run("primal-sharp", LooksMax, false, Some(sharp));
            }
        }
        VerdictTag::SaddleDualWeak => {
            run("full", LooksMin, false, None);
            if let Some((flat, sharp)) = bases {
                run("dual-flat", LooksMin, true, Some(flat));
                run("dual-sharp", LooksMax, true, Some(sharp));
            }
        }
        VerdictTag::Saddle => run("full", LooksSaddle, false, None),
        VerdictTag::Degenerate | VerdictTag::Unclassified => {}
    }

    let mut grid = None;
    if verdict.tag == VerdictTag::GlobalMin && opts.grid_check && p.n() <= 3 {
        let points = opts.grid_points.unwrap_or_else(|| default_grid_points(p.n()));
        match grid_check(p, pair, points) {
            Ok(g) => {
                if !g.agrees {
                    failures.push(format!(
                        "grid found Π = {} below the claimed global minimum {}",
                        g.value, pair.primal_value
                    ));
                }
                grid = Some(g);
            }
            Err(e) => failures.push(format!("grid check failed: {e}")),
        }
    }

    Corroboration {
        agrees: failures.is_empty(),
        probes,
        grid,
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{LogBarrier, QuadraticWell};
    use crate::instances;
    use crate::solver::{find_critical_points, SearchConfig};
    use crate::triality::classify;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn fd_check_on_reference_instance() {
        let p = instances::quadratic_log_example();
        let r = fd_check_primal(&p, &v(&[1.0, 1.0])).unwrap();
        assert!(r.grad_err <= 1e-6, "{r:?}");
        assert!(r.hess_err <= 1e-6, "{r:?}");
    }

    #[test]
    fn fd_check_quadratic_conjugate_is_exact() {
        let fam = CanonicalFamily::from(QuadraticWell::new(vec![2.0, 0.5], vec![1.0, -1.0]).unwrap());
        let r = fd_check_conjugate(&fam, &v(&[0.3, -0.7])).unwrap();
        assert!(r.grad_err < 1e-9 && r.hess_err < 1e-9, "{r:?}");
    }

    #[test]
    fn fd_check_near_wall_is_domain_error() {
        let fam = CanonicalFamily::from(LogBarrier::new(vec![1.0]).unwrap());
        assert!(matches!(
            fd_check_conjugate(&fam, &v(&[-1e-7])),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn audit_quadratic_origin_is_exact() {
        let fam = CanonicalFamily::from(QuadraticWell::new(vec![1.0], vec![0.0]).unwrap());
        let a = canonical_audit(&fam, &[v(&[0.0])]).unwrap();
        assert_eq!(a.max_residual(), 0.0);
    }

    #[test]
    fn audit_log_at_dual_walls() {
        // ξ = 0 maps to ς = -1/d, large ξ to ς near 0
        let fam = CanonicalFamily::from(LogBarrier::new(vec![2.0]).unwrap());
        let a = canonical_audit(&fam, &[v(&[0.0]), v(&[1e6])]).unwrap();
        assert!(a.max_residual() <= 1e-8, "{a:?}");
    }

    #[test]
    fn probes_on_reference_pairs() {
        let p = instances::quadratic_log_example();
        let mut pairs = find_critical_points(&p, &SearchConfig::default()).unwrap();
        pairs.retain(|q| q.in_triality_region());
        pairs.sort_by(|a, b| b.sigma[0].total_cmp(&a.sigma[0]));
        let saddle = &pairs[1];
        let r = default_radius(&saddle.x);
        assert_eq!(probe(&p, &saddle.x, r, 512, None).unwrap().evidence, ProbeEvidence::LooksSaddle);
        let verdict = classify(&p, saddle);
        let (flat, sharp) = verdict.bases.as_ref().unwrap();
        assert_eq!(probe(&p, &saddle.x, r, 512, Some(flat)).unwrap().evidence, ProbeEvidence::LooksMin);
        assert_eq!(probe(&p, &saddle.x, r, 512, Some(sharp)).unwrap().evidence, ProbeEvidence::LooksMax);
        let top = &pairs[2];
        let r = default_radius(&top.x);
        assert_eq!(probe(&p, &top.x, r, 512, None).unwrap().evidence, ProbeEvidence::LooksMax);
    }

    #[test]
    fn probe_shrinks_near_the_domain_wall() {
        // Π defined only for x > -1 through the log; probe hugs the wall
        let p = CanonicalProblem::new(
            DMatrix::identity(1, 1),
            vec![DMatrix::zeros(1, 1)],
            vec![v(&[1.0])],
            v(&[0.0]),
            LogBarrier::new(vec![1.0]).unwrap(),
        )
        .unwrap();
        let center = v(&[-1.0 + 1e-3]);
        let rep = probe(&p, &center, 1e-2, 64, None).unwrap();
        assert!(rep.radius < 1e-2);
        assert!(rep.infeasible * 5 <= rep.samples);
    }

    #[test]
    fn grid_on_reference_instance() {
        let p = instances::quadratic_log_example();
        let gm = grid_global_min(&p, &[[-3.0, 3.0], [-3.0, 3.0]], 2001).unwrap();
        let x1 = instances::EXAMPLE_X[0];
        assert!((gm.x[0] - x1[0]).abs() < 1e-3 && (gm.x[1] - x1[1]).abs() < 1e-3, "{:?}", gm.x);
        assert!((gm.grid_x[0] - x1[0]).abs() < 3e-3);
    }

    #[test]
    fn grid_on_convex_quadratic() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let f = v(&[0.4, -0.3]);
        let p = CanonicalProblem::new(
            a.clone(),
            vec![DMatrix::zeros(2, 2)],
            vec![v(&[0.0, 0.0])],
            f.clone(),
            QuadraticWell::new(vec![1.0], vec![0.0]).unwrap(),
        )
        .unwrap();
        let exact = a.try_inverse().unwrap() * f;
        let gm = grid_global_min(&p, &[[-2.0, 2.0], [-2.0, 2.0]], 401).unwrap();
        assert!(inf_norm(&(gm.x - exact)) < 1e-6);
    }

    #[test]
    fn grid_box_too_coarse() {
        let p = instances::quadratic_log_example();
        assert!(matches!(
            grid_global_min(&p, &[[-1.0, 1.0], [-1.0, 1.0]], 101),
            Err(Error::BoxTooCoarse)
        ));
    }

    #[test]
    fn grid_matches_double_well_global_min() {
        let p = instances::double_well(1.0, 1.0, 0.3);
        let pairs = find_critical_points(&p, &SearchConfig::default()).unwrap();
        let glob = pairs.iter().find(|q| q.region.tag.is_sa_plus()).unwrap();
        let gm = grid_global_min(&p, &[[-3.0, 3.0]], 20001).unwrap();
        assert!((gm.x[0] - glob.x[0]).abs() < 1e-4);
    }
}
