//! Solve → classify → verify pipeline and its JSON report.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::document::{ProblemDocument, SchemaError};
use crate::dual::RegionLabel;
use crate::error::Error;
use crate::oracle::{corroborate, Corroboration, VerifyOptions};
use crate::solver::{find_critical_points, has_sa_plus_point, SearchConfig};
use crate::triality::{classify, Caveat, Inertia, Rule, SmwResidual, VerdictTag};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Residuals {
    /// `‖∇Π(x̄)‖₂`
    pub grad_primal: f64,
    /// `‖∇Π^d(ς̄)‖₂`
    pub grad_dual: f64,
    /// `|Π(x̄) − Π^d(ς̄)|`
    pub duality_gap: f64,
    pub smw: Option<SmwResidual>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PairReport {
    pub sigma: Vec<f64>,
    pub x: Vec<f64>,
    pub primal_value: f64,
    pub dual_value: f64,
    /// `½ x̄ᵀ G(ς̄) x̄`
    pub gap_value: f64,
    pub region: RegionLabel,
    pub primal_inertia: Option<Inertia>,
    pub dual_inertia: Option<Inertia>,
    pub verdict: VerdictTag,
    pub rule: Rule,
    pub caveats: Vec<Caveat>,
    pub converged: bool,
    pub iterations: usize,
    pub residuals: Residuals,
    /// Absent when verification was skipped.
    pub verification: Option<Corroboration>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReportFlags {
    /// No critical point of the canonical dual lies in `S_a⁺`; the global
    /// minimizer is not certified by this run.
    pub no_critical_point_in_sa_plus: bool,
    /// Number of pairs whose verdict is `Degenerate`.
    pub degenerate_pairs: usize,
    /// Some verification check disagreed with a verdict.
    pub verification_disagreement: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Timings {
    pub solve_ms: f64,
    pub classify_ms: f64,
    pub verify_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SolveReport {
    pub schema_version: u32,
    /// SHA-256 of the problem document bytes, hex encoded.
    pub input_digest: String,
    pub n: usize,
    pub m: usize,
    pub family: String,
    pub search: SearchConfig,
    pub verified: bool,
    /// Pairs with `ς̄ ∈ S_a⁺ ∪ S_a⁻`, ordered by `Π(x̄)`, smallest first.
    pub pairs: Vec<PairReport>,
    /// Critical points where `G(ς̄)` is indefinite (or `ς̄ ∉ S_a`); triality
    /// says nothing about them. Same ordering.
    pub unclassified_pairs: Vec<PairReport>,
    pub flags: ReportFlags,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl SolveReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn verification_agrees(&self) -> bool {
        !self.flags.verification_disagreement
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Replaces the document's search configuration when set.
    pub search: Option<SearchConfig>,
    /// `None` skips verification.
    pub verify: Option<VerifyOptions>,
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            search: None,
            verify: Some(VerifyOptions::default()),
            timing: true,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("solver failure: {0}")]
    Solver(Error),
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Runs the whole pipeline on the raw document bytes.
///
/// An empty critical set yields a report with no pairs and the
/// `noCriticalPointInSaPlus` flag rather than an error; the caller decides
/// how to surface it.
pub fn run_document(bytes: &[u8], opts: &RunOptions) -> Result<SolveReport, RunError> {
    let text = std::str::from_utf8(bytes).map_err(|e| SchemaError {
        field: "document".into(),
        message: e.to_string(),
    })?;
    let doc = ProblemDocument::from_json(text)?;
    let problem = doc.to_problem()?;
    let search = opts
        .search
        .clone()
        .or_else(|| doc.search.clone())
        .unwrap_or_default();
    search.resolve_box(&problem).map_err(RunError::Solver)?;

    let t0 = Instant::now();
    let mut pairs = match find_critical_points(&problem, &search) {
        Ok(p) => p,
        Err(Error::NoCriticalPoint) => Vec::new(),
        Err(e) => return Err(RunError::Solver(e)),
    };
    // the solver returns dual value descending; present the primal view
    pairs.reverse();
    let t1 = Instant::now();
    let verdicts: Vec<_> = pairs.iter().map(|q| classify(&problem, q)).collect();
    let t2 = Instant::now();
    let checks: Vec<Option<Corroboration>> = pairs
        .iter()
        .zip(&verdicts)
        .map(|(q, v)| opts.verify.as_ref().map(|o| corroborate(&problem, q, v, o)))
        .collect();
    let t3 = Instant::now();

    let (reports, unclassified): (Vec<PairReport>, Vec<PairReport>) = pairs
        .iter()
        .zip(verdicts)
        .zip(checks)
        .map(|((q, v), check)| PairReport {
            sigma: q.sigma.iter().copied().collect(),
            x: q.x.iter().copied().collect(),
            primal_value: q.primal_value,
            dual_value: q.dual_value,
            gap_value: q.gap_value,
            region: q.region,
            primal_inertia: v.primal_inertia,
            dual_inertia: v.dual_inertia,
            verdict: v.tag,
            rule: v.evidence.rule,
            caveats: v.evidence.caveats,
            converged: q.converged,
            iterations: q.iterations,
            residuals: Residuals {
                grad_primal: q.grad_primal_norm,
                grad_dual: q.grad_dual_norm,
                duality_gap: q.duality_gap(),
                smw: v.evidence.smw,
            },
            verification: check,
        })
        .partition(|r| r.verdict != VerdictTag::Unclassified);

    let flags = ReportFlags {
        no_critical_point_in_sa_plus: !has_sa_plus_point(&pairs),
        degenerate_pairs: reports
            .iter()
            .filter(|r| r.verdict == VerdictTag::Degenerate)
            .count(),
        verification_disagreement: reports
            .iter()
            .any(|r| r.verification.as_ref().is_some_and(|c| !c.agrees)),
    };
    let ms = |a: Instant, b: Instant| (b - a).as_secs_f64() * 1e3;
    Ok(SolveReport {
        schema_version: REPORT_SCHEMA_VERSION,
        input_digest: digest(bytes),
        n: problem.n(),
        m: problem.m(),
        family: problem.family().kind().to_string(),
        search,
        verified: opts.verify.is_some(),
        pairs: reports,
        unclassified_pairs: unclassified,
        flags,
        timings: opts.timing.then(|| Timings {
            solve_ms: ms(t0, t1),
            classify_ms: ms(t1, t2),
            verify_ms: ms(t2, t3),
        }),
    })
}

/// `v` with eight significant digits.
pub fn sig8(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let mag = v.abs().log10().floor() as i32;
    if (-4..8).contains(&mag) {
        let decimals = (7 - mag).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.7e}")
    }
}

fn sig8_vec(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|v| sig8(*v)).collect();
    format!("({})", parts.join(", "))
}

/// Plain-text table: one row per pair.
pub fn summary(report: &SolveReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "problem n={} m={} family={} digest={}",
        report.n,
        report.m,
        report.family,
        &report.input_digest[..12.min(report.input_digest.len())]
    );
    let rows: Vec<[String; 7]> = report
        .pairs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            [
                (i + 1).to_string(),
                format!("{:?}", p.verdict),
                sig8(p.primal_value),
                sig8(p.dual_value),
                sig8_vec(&p.sigma),
                sig8_vec(&p.x),
                format!("{:.2e}", p.residuals.duality_gap),
            ]
        })
        .collect();
    let header = ["#", "verdict", "primal", "dual", "sigma", "x", "gap"];
    let mut widths = header.map(str::len);
    for r in &rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        padded.join("  ").trim_end().to_string()
    };
    let _ = writeln!(out, "{}", line(&header.map(String::from)));
    for r in &rows {
        let _ = writeln!(out, "{}", line(r));
    }
    if report.pairs.is_empty() {
        let _ = writeln!(out, "no critical point in S_a+ or S_a-");
    }
    if !report.unclassified_pairs.is_empty() {
        let sigmas: Vec<String> = report
            .unclassified_pairs
            .iter()
            .map(|p| sig8_vec(&p.sigma))
            .collect();
        let _ = writeln!(
            out,
            "{} further critical point(s) with indefinite G, not classified: sigma = {}",
            report.unclassified_pairs.len(),
            sigmas.join(", ")
        );
    }
    if report.flags.no_critical_point_in_sa_plus {
        let _ = writeln!(
            out,
            "warning: no critical point in S_a+; global minimum not certified"
        );
    }
    if report.flags.degenerate_pairs > 0 {
        let _ = writeln!(out, "degenerate pairs: {}", report.flags.degenerate_pairs);
    }
    if report.verified {
        let failing: Vec<String> = report
            .pairs
            .iter()
            .enumerate()
            .filter_map(|(i, p)| {
                p.verification
                    .as_ref()
                    .filter(|c| !c.agrees)
                    .map(|c| format!("pair {}: {}", i + 1, c.failures.join("; ")))
            })
            .collect();
        if failing.is_empty() {
            let _ = writeln!(out, "verification: all checks agree");
        } else {
            let _ = writeln!(out, "verification: DISAGREEMENT");
            for f in failing {
                let _ = writeln!(out, "  {f}");
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;

    fn example_bytes() -> Vec<u8> {
        ProblemDocument::from_problem(&instances::quadratic_log_example(), None)
            .to_json_pretty()
            .into_bytes()
    }

    #[test]
    fn report_round_trips() {
        let r = run_document(&example_bytes(), &RunOptions::default()).unwrap();
        let back = SolveReport::from_json(&r.to_json()).unwrap();
        assert_eq!(r, back);
    }

    #[test]
    fn reference_report_contents() {
        let opts = RunOptions {
            timing: false,
            ..RunOptions::default()
        };
        let r = run_document(&example_bytes(), &opts).unwrap();
        let tags: Vec<_> = r.pairs.iter().map(|p| p.verdict).collect();
        assert_eq!(
            tags,
            [VerdictTag::GlobalMin, VerdictTag::DoubleMinWeak, VerdictTag::DoubleMax]
        );
        assert!(r.verification_agrees());
        assert!(!r.flags.no_critical_point_in_sa_plus);
        assert!(r.timings.is_none());
        assert_eq!(r.unclassified_pairs.len(), 2);
        let s = summary(&r);
        assert!(s.contains("GlobalMin") && s.contains("DoubleMinWeak") && s.contains("DoubleMax"));
    }

    #[test]
    fn deterministic_without_timing() {
        let opts = RunOptions {
            timing: false,
            ..RunOptions::default()
        };
        let a = run_document(&example_bytes(), &opts).unwrap().to_json();
        let b = run_document(&example_bytes(), &opts).unwrap().to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn sig8_formatting() {
        assert_eq!(sig8(1.58640312345), "1.5864031");
        assert_eq!(sig8(-0.136964319689), "-0.13696432");
        assert_eq!(sig8(0.0), "0");
        assert_eq!(sig8(123456789.0), "1.2345679e8");
        assert_eq!(sig8(1.5e-7), "1.5000000e-7");
    }

    #[test]
    fn digest_is_sha256() {
        assert_eq!(
            digest(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
