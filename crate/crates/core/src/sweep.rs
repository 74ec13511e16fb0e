//! Solution counts across lambda, threshold localization by bisection, and
//! the serializable sweep report.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;
use crate::operator::{ProblemSpec, RadialGrid};
use crate::regimes::{classify, Guarantee, RegimeReport};
use crate::solver::{
    boundary_shoot_detailed, boundary_sign_value, default_alpha_box, multi_start,
    oracle_tolerance, SolverConfig,
};

/// A problem with the parameter left open.
#[derive(Debug, Clone)]
pub struct ProblemTemplate {
    pub n: u32,
    pub f: Nonlinearity,
    pub g: Nonlinearity,
}

impl ProblemTemplate {
    pub fn new(n: u32, f: Nonlinearity, g: Nonlinearity) -> Self {
        ProblemTemplate { n, f, g }
    }

    pub fn at(&self, lambda: f64) -> Result<ProblemSpec> {
        ProblemSpec::new(self.n, lambda, self.f.clone(), self.g.clone())
    }
}

/// Solution count at one lambda. Eigenvalue-type degeneracies and
/// cross-method mismatches refuse to report a number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolutionCount {
    Count(u32),
    Undetermined,
}

impl std::fmt::Display for SolutionCount {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolutionCount::Count(c) => write!(f, "{c}"),
            SolutionCount::Undetermined => write!(f, "undetermined"),
        }
    }
}

/// One validated solution in compact form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSummary {
    pub norm: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub residual_fixed_point: f64,
    pub residual_oracle: f64,
    pub half_trivial: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdKind {
    /// Validated solution count changes across the bracket.
    CountChange,
    /// The boundary map from a fixed center changes sign (eigenvalue-style).
    BoundarySign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub lambda_star: f64,
    pub bracket: (f64, f64),
    pub kind: ThresholdKind,
    /// Set when a midpoint count matched neither endpoint; the estimate is
    /// then the first change point from the left.
    pub non_monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub lambdas: Vec<f64>,
    pub counts: Vec<SolutionCount>,
    /// Per lambda, sorted by norm.
    pub solutions: Vec<Vec<SolutionSummary>>,
    pub thresholds: Vec<ThresholdEstimate>,
    /// None when the quotient limits are undetermined.
    pub regime: Option<RegimeReport>,
    /// Per-lambda diagnostics (degeneracies, method mismatches).
    pub notes: Vec<String>,
}

impl SweepReport {
    /// CSV with columns: lambda, count, norms (semicolon-joined).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,count,norms\n");
        for (i, &lambda) in self.lambdas.iter().enumerate() {
            let norms = self.solutions[i]
                .iter()
                .map(|s| format!("{}", s.norm))
                .collect::<Vec<_>>()
                .join(";");
            out.push_str(&format!("{},{},{}\n", lambda, self.counts[i], norms));
        }
        out
    }
}

/// Count validated nontrivial solutions at one lambda. The shooting oracle is
/// authoritative; Picard multi-start results must embed into the shoot set.
fn count_at(
    template: &ProblemTemplate,
    lambda: f64,
    grid: &RadialGrid,
    cfg: &SolverConfig,
) -> Result<(SolutionCount, Vec<SolutionSummary>, Vec<String>)> {
    let p = template.at(lambda)?;
    let mut notes = Vec::new();

    let shoot = boundary_shoot_detailed(&p, default_alpha_box(&p), grid, cfg)?;
    if shoot.singular_skips > 0 {
        notes.push(format!(
            "lambda {}: {} singular-Jacobian seeds skipped",
            lambda, shoot.singular_skips
        ));
    }

    let mut undetermined = false;
    if shoot.has_degenerate() {
        undetermined = true;
        notes.push(format!(
            "lambda {}: boundary-map Jacobian singular along a solution ray (eigenvalue-type degeneracy)",
            lambda
        ));
    }

    // Cross-check: every Picard solution must match a shoot root in norm.
    let picard = multi_start(&p, grid, cfg)?;
    let embed_tol = cfg.dedupe_tol.max(oracle_tolerance(grid, cfg));
    for sol in &picard {
        let matched = shoot
            .reports
            .iter()
            .any(|r| (r.norm - sol.norm).abs() <= embed_tol * (1.0 + sol.norm));
        if !matched {
            undetermined = true;
            notes.push(format!(
                "lambda {}: Picard solution of norm {} has no shooting counterpart",
                lambda, sol.norm
            ));
        }
    }

    let solutions: Vec<SolutionSummary> = shoot
        .countable()
        .map(|r| SolutionSummary {
            norm: r.norm,
            alpha1: r.center.0,
            alpha2: r.center.1,
            residual_fixed_point: r.residual_fixed_point,
            residual_oracle: r.residual_oracle.unwrap_or(f64::MAX),
            half_trivial: r.half_trivial,
        })
        .collect();

    let count = if undetermined {
        SolutionCount::Undetermined
    } else {
        SolutionCount::Count(solutions.len() as u32)
    };
    Ok((count, solutions, notes))
}

/// Chart validated solution counts across an increasing lambda list.
///
/// Every sweep hard-checks the regime certificates: a validated solution
/// strictly inside a certified nonexistence window is an error, not a result.
pub fn lambda_sweep(
    template: &ProblemTemplate,
    lambdas: &[f64],
    grid: &RadialGrid,
    cfg: &SolverConfig,
) -> Result<SweepReport> {
    if lambdas.is_empty() {
        return Err(Error::InvalidArgument("lambda grid is empty".into()));
    }
    if !lambdas.iter().all(|&l| l > 0.0 && l.is_finite()) {
        return Err(Error::InvalidArgument("lambdas must be positive".into()));
    }
    if !lambdas.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::InvalidArgument(
            "lambdas must be strictly increasing".into(),
        ));
    }
    cfg.validate()?;

    let regime = match classify(&template.at(lambdas[0])?) {
        Ok(r) => Some(r),
        Err(Error::UndeterminedLimit { .. }) => None,
        Err(e) => return Err(e),
    };

    let per_lambda: Vec<Result<(SolutionCount, Vec<SolutionSummary>, Vec<String>)>> = lambdas
        .par_iter()
        .map(|&lambda| count_at(template, lambda, grid, cfg))
        .collect();

    let mut counts = Vec::with_capacity(lambdas.len());
    let mut solutions = Vec::with_capacity(lambdas.len());
    let mut notes = Vec::new();
    for (i, res) in per_lambda.into_iter().enumerate() {
        match res {
            Ok((count, sols, mut ns)) => {
                counts.push(count);
                solutions.push(sols);
                notes.append(&mut ns);
            }
            Err(e) => {
                counts.push(SolutionCount::Undetermined);
                solutions.push(Vec::new());
                notes.push(format!("lambda {}: {}", lambdas[i], e));
            }
        }
    }

    if let Some(reg) = &regime {
        for (i, &lambda) in lambdas.iter().enumerate() {
            if solutions[i].is_empty() {
                continue;
            }
            if let Some(w) = reg.nonexistence_violated_by(lambda) {
                return Err(Error::RegimeContradiction(format!(
                    "validated solution at lambda = {} inside the certified {} nonexistence window",
                    lambda, w.part
                )));
            }
        }
    }

    Ok(SweepReport {
        lambdas: lambdas.to_vec(),
        counts,
        solutions,
        thresholds: Vec::new(),
        regime,
        notes,
    })
}

/// What the bisection chases inside a bracket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdDetector {
    /// The validated solution count changes.
    CountChange,
    /// The boundary map from this fixed center changes sign.
    BoundarySign { alpha: (f64, f64) },
}

/// Bisect on lambda until the bracket is narrower than `tol_lambda`.
pub fn threshold_bisect(
    template: &ProblemTemplate,
    bracket: (f64, f64),
    detector: ThresholdDetector,
    grid: &RadialGrid,
    cfg: &SolverConfig,
    tol_lambda: f64,
) -> Result<ThresholdEstimate> {
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!(
            "bad bracket ({lo}, {hi})"
        )));
    }
    if !(tol_lambda > 0.0) {
        return Err(Error::InvalidArgument("tol_lambda must be > 0".into()));
    }

    match detector {
        ThresholdDetector::BoundarySign { alpha } => {
            let s_lo = boundary_sign_value(&template.at(lo)?, grid, alpha)?;
            let s_hi = boundary_sign_value(&template.at(hi)?, grid, alpha)?;
            if s_lo.signum() == s_hi.signum() {
                return Err(Error::InvalidArgument(format!(
                    "boundary values at the bracket endpoints have the same sign ({s_lo}, {s_hi})"
                )));
            }
            while hi - lo > tol_lambda {
                let mid = 0.5 * (lo + hi);
                let s_mid = boundary_sign_value(&template.at(mid)?, grid, alpha)?;
                if s_mid.signum() == s_lo.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(ThresholdEstimate {
                lambda_star: 0.5 * (lo + hi),
                bracket: (lo, hi),
                kind: ThresholdKind::BoundarySign,
                non_monotone: false,
            })
        }
        ThresholdDetector::CountChange => {
            let count_of = |lambda: f64| -> Result<SolutionCount> {
                Ok(count_at(template, lambda, grid, cfg)?.0)
            };
            let c_lo = count_of(lo)?;
            let c_hi = count_of(hi)?;
            if c_lo == c_hi {
                return Err(Error::InvalidArgument(format!(
                    "counts at the bracket endpoints agree ({c_lo}); nothing to bisect"
                )));
            }
            let mut non_monotone = false;
            while hi - lo > tol_lambda {
                let mid = 0.5 * (lo + hi);
                let c_mid = count_of(mid)?;
                if c_mid == c_lo {
                    lo = mid;
                } else {
                    if c_mid != c_hi {
                        non_monotone = true; // chase the first change point
                    }
                    hi = mid;
                }
            }
            Ok(ThresholdEstimate {
                lambda_star: 0.5 * (lo + hi),
                bracket: (lo, hi),
                kind: ThresholdKind::CountChange,
                non_monotone,
            })
        }
    }
}

/// Refine every threshold a finished sweep suggests: adjacent count changes
/// and sign changes of the fixed-center boundary diagnostic.
pub fn detect_thresholds(
    template: &ProblemTemplate,
    report: &SweepReport,
    grid: &RadialGrid,
    cfg: &SolverConfig,
    tol_lambda: f64,
) -> Result<Vec<ThresholdEstimate>> {
    let mut found = Vec::new();
    for i in 0..report.lambdas.len().saturating_sub(1) {
        let (lo, hi) = (report.lambdas[i], report.lambdas[i + 1]);
        if report.counts[i] != report.counts[i + 1] {
            if let Ok(est) = threshold_bisect(
                template,
                (lo, hi),
                ThresholdDetector::CountChange,
                grid,
                cfg,
                tol_lambda,
            ) {
                found.push(est);
            }
        }
        let s_lo = boundary_sign_value(&template.at(lo)?, grid, (1.0, 1.0))?;
        let s_hi = boundary_sign_value(&template.at(hi)?, grid, (1.0, 1.0))?;
        if s_lo.signum() != s_hi.signum() {
            if let Ok(est) = threshold_bisect(
                template,
                (lo, hi),
                ThresholdDetector::BoundarySign { alpha: (1.0, 1.0) },
                grid,
                cfg,
                tol_lambda,
            ) {
                found.push(est);
            }
        }
    }
    found.sort_by(|a, b| a.lambda_star.total_cmp(&b.lambda_star));
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::Family;
    use approx::assert_abs_diff_eq;

    fn template(fam: Family) -> ProblemTemplate {
        ProblemTemplate::new(
            1,
            Nonlinearity::from_family(fam),
            Nonlinearity::from_family(fam),
        )
    }

    fn fast_grid() -> RadialGrid {
        RadialGrid::uniform(512).unwrap()
    }

    #[test]
    fn constant_pair_has_one_solution_everywhere() {
        let rep = lambda_sweep(
            &template(Family::Constant { c: 1.0 }),
            &[0.5, 1.0, 2.0],
            &fast_grid(),
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(
            rep.counts,
            vec![
                SolutionCount::Count(1),
                SolutionCount::Count(1),
                SolutionCount::Count(1)
            ]
        );
        // closed form: norm = 2 * sup lambda (1 - r^2) / 2 = lambda
        for (i, &lam) in rep.lambdas.iter().enumerate() {
            assert_abs_diff_eq!(rep.solutions[i][0].norm, lam, epsilon = 1e-7);
        }
    }

    #[test]
    fn linear_pair_counts_zero_off_eigenvalue_undetermined_on_it() {
        let rep = lambda_sweep(
            &template(Family::Linear),
            &[1.0, 2.4674, 3.0],
            &fast_grid(),
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(rep.counts[0], SolutionCount::Count(0));
        assert_eq!(rep.counts[1], SolutionCount::Undetermined);
        assert_eq!(rep.counts[2], SolutionCount::Count(0));
        assert!(rep.regime.is_some());
    }

    #[test]
    fn sweep_validates_input() {
        let t = template(Family::Linear);
        let g = fast_grid();
        let cfg = SolverConfig::default();
        assert!(lambda_sweep(&t, &[], &g, &cfg).is_err());
        assert!(lambda_sweep(&t, &[1.0, 0.5], &g, &cfg).is_err());
        assert!(lambda_sweep(&t, &[-1.0, 2.0], &g, &cfg).is_err());
    }

    #[test]
    fn eigenvalue_localized_by_boundary_sign_bisection() {
        let est = threshold_bisect(
            &template(Family::Linear),
            (2.0, 3.0),
            ThresholdDetector::BoundarySign { alpha: (1.0, 1.0) },
            &fast_grid(),
            &SolverConfig::default(),
            1e-5,
        )
        .unwrap();
        let eig = (std::f64::consts::FRAC_PI_2).powi(2);
        assert_abs_diff_eq!(est.lambda_star, eig, epsilon = 1e-3);
        assert!(!est.non_monotone);
    }

    #[test]
    fn constant_count_bracket_is_rejected() {
        let err = threshold_bisect(
            &template(Family::Constant { c: 1.0 }),
            (0.5, 1.0),
            ThresholdDetector::CountChange,
            &fast_grid(),
            &SolverConfig::default(),
            0.1,
        );
        assert!(err.is_err());
    }

    #[test]
    fn exp_minus_one_fold_is_bracketed_below_t2f_window() {
        // counts drop 1 -> 0 as lambda grows; the fold must sit inside the
        // bracket and below the certified nonexistence threshold 32.
        let t = template(Family::ExpMinusOne);
        let g = fast_grid();
        let cfg = SolverConfig::default();
        let rep = lambda_sweep(&t, &[2.0, 8.0], &g, &cfg).unwrap();
        assert_eq!(rep.counts[0], SolutionCount::Count(1));
        assert_eq!(rep.counts[1], SolutionCount::Count(0));
        let est = threshold_bisect(
            &t,
            (2.0, 8.0),
            ThresholdDetector::CountChange,
            &g,
            &cfg,
            0.05,
        )
        .unwrap();
        assert!(est.lambda_star > 2.0 && est.lambda_star < 8.0);
        let t2f = rep
            .regime
            .unwrap()
            .windows
            .iter()
            .find(|w| w.part == crate::regimes::PartTag::T2f)
            .unwrap()
            .lambda0
            .unwrap();
        assert!(est.lambda_star < t2f);
    }

    #[test]
    fn csv_shape() {
        let rep = SweepReport {
            lambdas: vec![1.0, 2.0],
            counts: vec![SolutionCount::Count(1), SolutionCount::Undetermined],
            solutions: vec![
                vec![SolutionSummary {
                    norm: 2.0,
                    alpha1: 1.0,
                    alpha2: 1.0,
                    residual_fixed_point: 1e-12,
                    residual_oracle: 1e-12,
                    half_trivial: false,
                }],
                vec![],
            ],
            thresholds: vec![],
            regime: None,
            notes: vec![],
        };
        let csv = rep.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "lambda,count,norms");
        assert_eq!(lines.next().unwrap(), "1,1,2");
        assert_eq!(lines.next().unwrap(), "2,undetermined,");
    }
}
