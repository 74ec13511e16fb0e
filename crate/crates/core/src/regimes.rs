//! Classification of a problem against the existence / multiplicity /
//! nonexistence theorem parts, with explicit lambda windows where the proofs
//! provide constants.
//!
//! Part conditions, from the four asymptotic quotients (q0 = limit at zero,
//! qinf = limit at infinity, for both f and g):
//!
//! - T1a: f0 = g0 = 0 and finf = ginf = inf      -> solution for all lambda
//! - T1b: f0 = g0 = inf and finf = ginf = 0      -> solution for all lambda
//! - T2a: f0 = g0 = 0 or finf = ginf = 0         -> solution for lambda > l0
//! - T2b: f0 = g0 = inf or finf = ginf = inf     -> solution for lambda < l0
//! - T2c: all four zero                          -> two solutions, lambda > l0
//! - T2d: all four infinite                      -> two solutions, lambda < l0
//! - T2e: all four finite                        -> none for lambda < l0
//! - T2f: all four positive                      -> none for lambda > l0
//!
//! T2a-T2d existence constants are sufficient certificates computed from the
//! weak bounds by optimizing over a shell-radius grid; T2e/T2f come from the
//! explicit epsilon formulas l0 = (1/(2 eps))^N and (1/(Gamma eps))^N.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::{ExtendedLimit, LimitEnd, LimitKind, Nonlinearity};
use crate::operator::{gamma_constant, m_big_hat, m_hat, ProblemSpec};

/// Geometric v-grid used for the epsilon extrema, [1e-6, 1e6].
const EPS_GRID_POINTS: usize = 2401;
/// Geometric shell-radius grid for the existence certificates, [1e-4, 1e4].
const CERT_GRID_POINTS: usize = 241;
/// A grid supremum above this is treated as an unbounded quotient.
const UNBOUNDED_CUTOFF: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PartTag {
    T1a,
    T1b,
    T2a,
    T2b,
    T2c,
    T2d,
    T2e,
    T2f,
}

impl std::fmt::Display for PartTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PartTag::T1a => "T1a",
            PartTag::T1b => "T1b",
            PartTag::T2a => "T2a",
            PartTag::T2b => "T2b",
            PartTag::T2c => "T2c",
            PartTag::T2d => "T2d",
            PartTag::T2e => "T2e",
            PartTag::T2f => "T2f",
        };
        write!(f, "{s}")
    }
}

/// What a window promises inside its lambda range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Guarantee {
    AtLeast(u32),
    NoSolutions,
}

/// Where the window constant comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    /// The theorem holds for every lambda; no constant involved.
    AllLambda,
    /// Sufficient lambda_0 computed from the weak bounds over a shell grid;
    /// not claimed tight.
    SufficientCertificate,
    /// lambda_0 from the explicit epsilon formula. Grid estimation error can
    /// only shrink the claimed window (the safe direction).
    EpsilonFormula,
}

/// A lambda interval attached to a theorem part. `hi = None` means unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartWindow {
    pub part: PartTag,
    pub lo: f64,
    pub hi: Option<f64>,
    pub lambda0: Option<f64>,
    pub provenance: Provenance,
    pub guarantee: Guarantee,
}

impl PartWindow {
    pub fn contains(&self, lambda: f64) -> bool {
        lambda > self.lo && self.hi.map_or(true, |hi| lambda < hi)
    }
}

/// The four classified quotient limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotientLimits {
    pub f0: ExtendedLimit,
    pub g0: ExtendedLimit,
    pub f_inf: ExtendedLimit,
    pub g_inf: ExtendedLimit,
}

/// Predicted minimum solution count on a lambda range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountPrediction {
    pub lo: f64,
    pub hi: Option<f64>,
    pub prediction: Guarantee,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub limits: QuotientLimits,
    pub applicable_parts: Vec<PartTag>,
    pub windows: Vec<PartWindow>,
    pub predicted_count: Vec<CountPrediction>,
}

impl RegimeReport {
    /// Nonexistence windows (T2e/T2f) that contain the given lambda strictly.
    pub fn nonexistence_violated_by(&self, lambda: f64) -> Option<&PartWindow> {
        self.windows
            .iter()
            .find(|w| matches!(w.guarantee, Guarantee::NoSolutions) && w.contains(lambda))
    }
}

fn limit_of(nl: &Nonlinearity, name: &str, n: u32, end: LimitEnd) -> Result<ExtendedLimit> {
    let lim = nl.asymptotic_quotient(n, end)?;
    if lim.kind.is_undetermined() {
        return Err(Error::UndeterminedLimit {
            which: name.to_string(),
            evidence: lim.evidence,
        });
    }
    Ok(lim)
}

fn nth_root(x: f64, n: u32) -> f64 {
    match n {
        1 => x,
        2 => x.sqrt(),
        _ => x.powf(1.0 / n as f64),
    }
}

/// Shell radii grid for the sufficient certificates.
fn cert_radii() -> Vec<f64> {
    let (lo, hi) = (1e-4f64, 1e4f64);
    let ratio = (hi / lo).powf(1.0 / (CERT_GRID_POINTS - 1) as f64);
    (0..CERT_GRID_POINTS)
        .map(|i| lo * ratio.powi(i as i32))
        .collect()
}

/// Smallest lambda for which the weak lower bound pushes past some shell:
/// 4 lambda^(1/N) Gamma m_hat_r^(1/N) > r for some r, i.e.
/// lambda > (r / (4 Gamma))^N / m_hat_r.
fn existence_certificate_large(p: &ProblemSpec) -> Result<Vec<f64>> {
    let gamma = gamma_constant(p.n, 1e-12)?;
    let mut lambdas = Vec::new();
    for r in cert_radii() {
        let mh = m_hat(p, r, 128)?;
        if mh > 0.0 {
            lambdas.push((r / (4.0 * gamma)).powi(p.n as i32) / mh);
        }
    }
    if lambdas.is_empty() {
        return Err(Error::InvalidArgument(
            "no shell gives a positive weak lower bound".into(),
        ));
    }
    lambdas.sort_by(f64::total_cmp);
    Ok(lambdas)
}

/// Largest lambda for which the weak upper bound stays under some shell:
/// 2 lambda^(1/N) M_hat_r^(1/N) < r, i.e. lambda < (r/2)^N / M_hat_r.
fn existence_certificate_small(p: &ProblemSpec) -> Result<Vec<f64>> {
    let mut lambdas = Vec::new();
    for r in cert_radii() {
        let mb = m_big_hat(p, r, 128)?;
        if mb > 0.0 {
            lambdas.push((r / 2.0).powi(p.n as i32) / mb);
        }
    }
    if lambdas.is_empty() {
        return Err(Error::InvalidArgument(
            "no shell gives a finite weak upper bound".into(),
        ));
    }
    lambdas.sort_by(f64::total_cmp);
    Ok(lambdas)
}

/// Geometric grid of probe values for the epsilon extrema, enriched with the
/// evidence points of the classified limits.
fn eps_probe_values(limits: &[&ExtendedLimit]) -> Vec<f64> {
    let (lo, hi) = (1e-6f64, 1e6f64);
    let ratio = (hi / lo).powf(1.0 / (EPS_GRID_POINTS - 1) as f64);
    let mut vs: Vec<f64> = (0..EPS_GRID_POINTS)
        .map(|i| lo * ratio.powi(i as i32))
        .collect();
    for lim in limits {
        vs.extend(lim.evidence.iter().map(|&(x, _)| x).filter(|x| x.is_finite()));
    }
    vs
}

/// The explicit nonexistence constant for part (e) or (f).
///
/// T2e: eps^N = sup over f-hat, g-hat of h(v)/v^N; lambda_0 = (1/(2 eps))^N.
/// Nonexistence holds on (0, lambda_0). Underestimating the sup shrinks the
/// window, the safe direction.
///
/// T2f: eps^N = inf over f, g (raw) of h(v)/v^N; lambda_0 = (1/(Gamma eps))^N.
/// Overestimating the inf shrinks the window, again safe, since the grid inf
/// can only overestimate.
pub fn nonexistence_window(p: &ProblemSpec, part: PartTag, resolution: usize) -> Result<f64> {
    let n = p.n;
    let f0 = limit_of(&p.f, "f at 0", n, LimitEnd::Zero)?;
    let g0 = limit_of(&p.g, "g at 0", n, LimitEnd::Zero)?;
    let f_inf = limit_of(&p.f, "f at infinity", n, LimitEnd::Infinity)?;
    let g_inf = limit_of(&p.g, "g at infinity", n, LimitEnd::Infinity)?;
    let limits = [&f0, &g0, &f_inf, &g_inf];

    match part {
        PartTag::T2e => {
            if !limits.iter().all(|l| l.kind.is_bounded()) {
                return Err(Error::InvalidArgument(
                    "T2e needs all four quotient limits finite".into(),
                ));
            }
            let mut sup = 0.0f64;
            for lim in &limits {
                if let LimitKind::Finite(v) = lim.kind {
                    sup = sup.max(v);
                }
            }
            let vs = eps_probe_values(&limits);
            for h in [&p.f, &p.g] {
                let env = h.envelope_function(resolution.max(32));
                for &v in &vs {
                    let q = env.eval(v)? / v.powi(n as i32);
                    if q > UNBOUNDED_CUTOFF {
                        return Err(Error::UnboundedQuotient {
                            which: "envelope quotient".into(),
                        });
                    }
                    sup = sup.max(q);
                }
            }
            if !(sup > 0.0) {
                return Err(Error::InvalidArgument(
                    "envelope quotient vanished identically".into(),
                ));
            }
            let eps = nth_root(sup, n);
            Ok((0.5 / eps).powi(n as i32))
        }
        PartTag::T2f => {
            if !limits.iter().all(|l| l.kind.is_positive()) {
                return Err(Error::InvalidArgument(
                    "T2f needs all four quotient limits positive".into(),
                ));
            }
            let mut inf = f64::INFINITY;
            for lim in &limits {
                if let LimitKind::Finite(v) = lim.kind {
                    inf = inf.min(v);
                }
            }
            let vs = eps_probe_values(&limits);
            for h in [&p.f, &p.g] {
                for &v in &vs {
                    inf = inf.min(h.eval(v)? / v.powi(n as i32));
                }
            }
            if !(inf > 0.0) || !inf.is_finite() {
                return Err(Error::UnboundedQuotient {
                    which: "quotient infimum is not positive".into(),
                });
            }
            let gamma = gamma_constant(n, 1e-12)?;
            let eps = nth_root(inf, n);
            Ok((1.0 / (gamma * eps)).powi(n as i32))
        }
        other => Err(Error::InvalidArgument(format!(
            "nonexistence_window applies to T2e or T2f, not {other}"
        ))),
    }
}

/// Classify against every theorem part whose conditions hold. Errors if any
/// of the four quotient limits is undetermined.
pub fn classify(p: &ProblemSpec) -> Result<RegimeReport> {
    let n = p.n;
    let f0 = limit_of(&p.f, "f at 0", n, LimitEnd::Zero)?;
    let g0 = limit_of(&p.g, "g at 0", n, LimitEnd::Zero)?;
    let f_inf = limit_of(&p.f, "f at infinity", n, LimitEnd::Infinity)?;
    let g_inf = limit_of(&p.g, "g at infinity", n, LimitEnd::Infinity)?;

    let mut parts = Vec::new();
    let mut windows = Vec::new();

    let zero_at_0 = f0.kind.is_zero() && g0.kind.is_zero();
    let inf_at_0 = f0.kind.is_infinite() && g0.kind.is_infinite();
    let zero_at_inf = f_inf.kind.is_zero() && g_inf.kind.is_zero();
    let inf_at_inf = f_inf.kind.is_infinite() && g_inf.kind.is_infinite();

    if zero_at_0 && inf_at_inf {
        parts.push(PartTag::T1a);
        windows.push(PartWindow {
            part: PartTag::T1a,
            lo: 0.0,
            hi: None,
            lambda0: None,
            provenance: Provenance::AllLambda,
            guarantee: Guarantee::AtLeast(1),
        });
    }
    if inf_at_0 && zero_at_inf {
        parts.push(PartTag::T1b);
        windows.push(PartWindow {
            part: PartTag::T1b,
            lo: 0.0,
            hi: None,
            lambda0: None,
            provenance: Provenance::AllLambda,
            guarantee: Guarantee::AtLeast(1),
        });
    }

    // Theorem 2 additionally assumes strict positivity on x > 0.
    let positive = p.f.is_positive() && p.g.is_positive();
    if positive {
        if zero_at_0 || zero_at_inf {
            let certs = existence_certificate_large(p)?;
            parts.push(PartTag::T2a);
            windows.push(PartWindow {
                part: PartTag::T2a,
                lo: certs[0],
                hi: None,
                lambda0: Some(certs[0]),
                provenance: Provenance::SufficientCertificate,
                guarantee: Guarantee::AtLeast(1),
            });
        }
        if inf_at_0 || inf_at_inf {
            let certs = existence_certificate_small(p)?;
            let l0 = *certs.last().unwrap();
            parts.push(PartTag::T2b);
            windows.push(PartWindow {
                part: PartTag::T2b,
                lo: 0.0,
                hi: Some(l0),
                lambda0: Some(l0),
                provenance: Provenance::SufficientCertificate,
                guarantee: Guarantee::AtLeast(1),
            });
        }
        if zero_at_0 && zero_at_inf {
            // two norm shells where the lower bound wins: second-smallest
            // certificate over distinct radii
            let certs = existence_certificate_large(p)?;
            let l0 = certs.get(1).copied().unwrap_or(certs[0]);
            parts.push(PartTag::T2c);
            windows.push(PartWindow {
                part: PartTag::T2c,
                lo: l0,
                hi: None,
                lambda0: Some(l0),
                provenance: Provenance::SufficientCertificate,
                guarantee: Guarantee::AtLeast(2),
            });
        }
        if inf_at_0 && inf_at_inf {
            let certs = existence_certificate_small(p)?;
            let l0 = certs.get(certs.len().saturating_sub(2)).copied().unwrap_or(certs[0]);
            parts.push(PartTag::T2d);
            windows.push(PartWindow {
                part: PartTag::T2d,
                lo: 0.0,
                hi: Some(l0),
                lambda0: Some(l0),
                provenance: Provenance::SufficientCertificate,
                guarantee: Guarantee::AtLeast(2),
            });
        }
        if [&f0, &g0, &f_inf, &g_inf].iter().all(|l| l.kind.is_finite()) {
            let l0 = nonexistence_window(p, PartTag::T2e, 256)?;
            parts.push(PartTag::T2e);
            windows.push(PartWindow {
                part: PartTag::T2e,
                lo: 0.0,
                hi: Some(l0),
                lambda0: Some(l0),
                provenance: Provenance::EpsilonFormula,
                guarantee: Guarantee::NoSolutions,
            });
        }
        if [&f0, &g0, &f_inf, &g_inf].iter().all(|l| l.kind.is_positive()) {
            let l0 = nonexistence_window(p, PartTag::T2f, 256)?;
            parts.push(PartTag::T2f);
            windows.push(PartWindow {
                part: PartTag::T2f,
                lo: l0,
                hi: None,
                lambda0: Some(l0),
                provenance: Provenance::EpsilonFormula,
                guarantee: Guarantee::NoSolutions,
            });
        }
    }

    let predicted_count = windows
        .iter()
        .map(|w| CountPrediction {
            lo: w.lo,
            hi: w.hi,
            prediction: w.guarantee,
        })
        .collect();

    Ok(RegimeReport {
        limits: QuotientLimits {
            f0,
            g0,
            f_inf,
            g_inf,
        },
        applicable_parts: parts,
        windows,
        predicted_count,
    })
}
