//! Scalar nonlinearities f, g: [0, inf) -> [0, inf), their monotone envelopes
//! and the asymptotic quotients f(x)/x^N at zero and infinity that drive the
//! existence / multiplicity / nonexistence classification.

mod expr;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use expr::Expr;

/// Probe points used while estimating a limit: x = 2^(-k) toward zero,
/// x = 2^k toward infinity, k = 1..=PROBE_COUNT.
const PROBE_COUNT: u32 = 40;
/// Quotients above this over the trailing probes classify as Infinite.
const INFINITE_THRESHOLD: f64 = 1e8;
/// Quotients below this over the trailing probes classify as Zero.
const ZERO_THRESHOLD: f64 = 1e-8;
/// Trailing probes that must agree (relative) for a Finite classification.
const STABLE_TAIL: usize = 5;
const STABLE_RTOL: f64 = 1e-3;

/// Which end of the domain a quotient limit refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LimitEnd {
    Zero,
    Infinity,
}

/// Classified value of lim f(x)/x^N at one end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LimitKind {
    Zero,
    Finite(f64),
    Infinite,
    Undetermined,
}

impl LimitKind {
    pub fn is_zero(&self) -> bool {
        matches!(self, LimitKind::Zero)
    }
    pub fn is_finite(&self) -> bool {
        matches!(self, LimitKind::Finite(_))
    }
    pub fn is_infinite(&self) -> bool {
        matches!(self, LimitKind::Infinite)
    }
    pub fn is_undetermined(&self) -> bool {
        matches!(self, LimitKind::Undetermined)
    }
    /// `< infinity` in the theorem statements (Zero or Finite).
    pub fn is_bounded(&self) -> bool {
        self.is_zero() || self.is_finite()
    }
    /// `> 0` in the theorem statements (positive Finite or Infinite).
    pub fn is_positive(&self) -> bool {
        match self {
            LimitKind::Infinite => true,
            LimitKind::Finite(v) => *v > 0.0,
            _ => false,
        }
    }
}

impl fmt::Display for LimitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitKind::Zero => write!(f, "0"),
            LimitKind::Finite(v) => write!(f, "{v}"),
            LimitKind::Infinite => write!(f, "inf"),
            LimitKind::Undetermined => write!(f, "undetermined"),
        }
    }
}

/// A quotient limit together with the probe evidence that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedLimit {
    pub kind: LimitKind,
    /// (probe x, f(x)/x^N) pairs, in probe order. Empty for declared limits.
    pub evidence: Vec<(f64, f64)>,
}

impl ExtendedLimit {
    pub fn declared(kind: LimitKind) -> Self {
        ExtendedLimit {
            kind,
            evidence: Vec::new(),
        }
    }
}

/// Builtin nonlinearity families accepted in problem files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Family {
    /// x^p
    Power { p: f64 },
    /// the constant c
    Constant { c: f64 },
    /// x
    Linear,
    /// x^2 / (1 + x^2)
    RatioBump,
    /// e^x - 1
    ExpMinusOne,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Power { .. } => "power",
            Family::Constant { .. } => "constant",
            Family::Linear => "linear",
            Family::RatioBump => "ratio_bump",
            Family::ExpMinusOne => "exp_minus_one",
        }
    }

    fn eval(&self, x: f64) -> f64 {
        match self {
            Family::Power { p } => x.powf(*p),
            Family::Constant { c } => *c,
            Family::Linear => x,
            Family::RatioBump => x * x / (1.0 + x * x),
            Family::ExpMinusOne => x.exp_m1(),
        }
    }
}

/// Where a nonlinearity came from.
#[derive(Debug, Clone)]
pub enum Source {
    Builtin(Family),
    Expression(String),
    Custom(&'static str),
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Builtin(fam) => write!(f, "{}", fam.name()),
            Source::Expression(text) => write!(f, "expr `{text}`"),
            Source::Custom(name) => write!(f, "{name}"),
        }
    }
}

/// Optional user-declared quotient limits; they override estimation.
#[derive(Debug, Clone, Copy, Default)]
pub struct DeclaredLimits {
    pub q0: Option<LimitKind>,
    pub qinf: Option<LimitKind>,
}

/// A continuous map [0, inf) -> [0, inf).
#[derive(Clone)]
pub struct Nonlinearity {
    evaluator: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    source: Source,
    declared_limits: DeclaredLimits,
    /// Strictly positive for x > 0, spot-checked on sampled points.
    positive: bool,
    /// Probe points where the evaluator came out negative (recorded, not fatal
    /// at construction; eval still errors at such points).
    negative_probes: Vec<f64>,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("source", &self.source)
            .field("positive", &self.positive)
            .finish()
    }
}

impl Nonlinearity {
    fn build(
        evaluator: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        source: Source,
        declared_limits: DeclaredLimits,
    ) -> Self {
        // Spot checks: positivity on x > 0 and any negative excursions.
        let mut positive = true;
        let mut negative_probes = Vec::new();
        let mut x = 1e-6;
        while x <= 1e6 {
            let y = evaluator(x);
            if !(y > 0.0) {
                positive = false;
            }
            if y < 0.0 {
                negative_probes.push(x);
            }
            x *= 10.0;
        }
        Nonlinearity {
            evaluator,
            source,
            declared_limits,
            positive,
            negative_probes,
        }
    }

    pub fn from_family(family: Family) -> Self {
        Self::build(
            Arc::new(move |x| family.eval(x)),
            Source::Builtin(family),
            DeclaredLimits::default(),
        )
    }

    /// Parse the tiny expression language; see the module docs for the grammar.
    pub fn parse_expression(text: &str) -> Result<Self> {
        let ast = expr::Parser::parse(text)?;
        let printable = text.to_string();
        Ok(Self::build(
            Arc::new(move |x| ast.eval(x)),
            Source::Expression(printable),
            DeclaredLimits::default(),
        ))
    }

    /// Wrap an arbitrary closure (used by tests and the verify suites).
    pub fn from_fn(
        name: &'static str,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::build(Arc::new(f), Source::Custom(name), DeclaredLimits::default())
    }

    pub fn with_declared_limits(mut self, limits: DeclaredLimits) -> Self {
        self.declared_limits = limits;
        self
    }

    pub fn source(&self) -> &Source {
        &self.source
    }

    pub fn declared_limits(&self) -> DeclaredLimits {
        self.declared_limits
    }

    pub fn is_positive(&self) -> bool {
        self.positive
    }

    pub fn negative_probes(&self) -> &[f64] {
        &self.negative_probes
    }

    /// Evaluate without validity checks. NaN, negatives and infinities pass
    /// through; the limit estimator interprets them itself.
    pub fn eval_raw(&self, x: f64) -> f64 {
        (self.evaluator)(x)
    }

    /// Evaluate with domain and range validation.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::NegativeArgument { x });
        }
        let y = self.eval_raw(x);
        if y.is_nan() || y.is_infinite() {
            return Err(Error::InvalidValue {
                x,
                value: y,
                context: "evaluator produced a non-finite value",
            });
        }
        if y < 0.0 {
            return Err(Error::InvalidValue {
                x,
                value: y,
                context: "evaluator produced a negative value",
            });
        }
        Ok(y)
    }

    /// Monotone envelope max { f(v) : 0 <= v <= t }, estimated on a grid of
    /// `resolution`+1 points with one golden-section refinement around the
    /// discrete argmax.
    pub fn envelope(&self, t: f64, resolution: usize) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::NegativeArgument { x: t });
        }
        if resolution < 2 {
            return Err(Error::InvalidArgument(format!(
                "envelope resolution must be >= 2, got {resolution}"
            )));
        }
        if t == 0.0 {
            return self.eval(0.0);
        }
        let n = resolution;
        let mut best = f64::NEG_INFINITY;
        let mut best_i = 0usize;
        for i in 0..=n {
            let v = t * i as f64 / n as f64;
            let y = self.eval(v)?;
            if y > best {
                best = y;
                best_i = i;
            }
        }
        // One refinement pass around the discrete argmax.
        let lo = t * best_i.saturating_sub(1) as f64 / n as f64;
        let hi = t * (best_i + 1).min(n) as f64 / n as f64;
        let refined = self.golden_max(lo, hi)?;
        Ok(best.max(refined))
    }

    fn golden_max(&self, mut a: f64, mut b: f64) -> Result<f64> {
        const INV_PHI: f64 = 0.618_033_988_749_894_8;
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let mut fc = self.eval(c)?;
        let mut fd = self.eval(d)?;
        for _ in 0..40 {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = self.eval(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = self.eval(d)?;
            }
        }
        Ok(fc.max(fd))
    }

    /// The envelope as a nonlinearity in its own right (it shares the
    /// asymptotic quotients of the original).
    pub fn envelope_function(&self, resolution: usize) -> Nonlinearity {
        let inner = self.clone();
        Nonlinearity::build(
            Arc::new(move |x| inner.envelope(x, resolution).unwrap_or(f64::NAN)),
            Source::Custom("envelope"),
            DeclaredLimits::default(),
        )
    }

    /// Estimate lim f(x)/x^N at the requested end. A declared limit wins.
    ///
    /// Estimation probes a geometric sequence and classifies from the trailing
    /// quotients: monotonically beyond a threshold -> Zero / Infinite, stable
    /// within relative tolerance -> Finite, otherwise Undetermined.
    pub fn asymptotic_quotient(&self, n: u32, end: LimitEnd) -> Result<ExtendedLimit> {
        let declared = match end {
            LimitEnd::Zero => self.declared_limits.q0,
            LimitEnd::Infinity => self.declared_limits.qinf,
        };
        if let Some(kind) = declared {
            return Ok(ExtendedLimit::declared(kind));
        }
        if n < 1 {
            return Err(Error::InvalidArgument("N must be >= 1".to_string()));
        }

        let mut evidence = Vec::with_capacity(PROBE_COUNT as usize);
        for k in 1..=PROBE_COUNT {
            let x = match end {
                LimitEnd::Zero => (2f64).powi(-(k as i32)),
                LimitEnd::Infinity => (2f64).powi(k as i32),
            };
            let y = self.eval_raw(x);
            if y.is_nan() || y < 0.0 {
                return Err(Error::InvalidValue {
                    x,
                    value: y,
                    context: "evaluation failed at a limit probe",
                });
            }
            // An overflowed evaluator is evidence for an infinite quotient.
            let q = if y.is_infinite() {
                f64::INFINITY
            } else {
                y / x.powi(n as i32)
            };
            evidence.push((x, q));
        }

        let tail = &evidence[evidence.len() - STABLE_TAIL..];
        let qs: Vec<f64> = tail.iter().map(|&(_, q)| q).collect();

        let all_above = qs.iter().all(|&q| q > INFINITE_THRESHOLD);
        let nondecreasing = qs.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12));
        if all_above && nondecreasing {
            return Ok(ExtendedLimit {
                kind: LimitKind::Infinite,
                evidence,
            });
        }

        let all_below = qs.iter().all(|&q| q < ZERO_THRESHOLD);
        let nonincreasing = qs.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
        if all_below && nonincreasing {
            return Ok(ExtendedLimit {
                kind: LimitKind::Zero,
                evidence,
            });
        }

        let last = *qs.last().unwrap();
        let stable = qs
            .iter()
            .all(|&q| (q - last).abs() <= STABLE_RTOL * last.abs().max(f64::MIN_POSITIVE));
        if stable && last.is_finite() {
            return Ok(ExtendedLimit {
                kind: LimitKind::Finite(last),
                evidence,
            });
        }

        Ok(ExtendedLimit {
            kind: LimitKind::Undetermined,
            evidence,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power(p: f64) -> Nonlinearity {
        Nonlinearity::from_family(Family::Power { p })
    }

    #[test]
    fn eval_builtin_families() {
        assert_eq!(power(2.0).eval(3.0).unwrap(), 9.0);
        assert_eq!(
            Nonlinearity::from_family(Family::Constant { c: 1.0 })
                .eval(0.5)
                .unwrap(),
            1.0
        );
        let rb = Nonlinearity::from_family(Family::RatioBump);
        assert!((rb.eval(1.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn eval_rejects_bad_inputs() {
        assert!(matches!(
            power(2.0).eval(-1.0),
            Err(Error::NegativeArgument { .. })
        ));
        let bad = Nonlinearity::from_fn("neg", |x| x - 1.0);
        assert!(matches!(bad.eval(0.5), Err(Error::InvalidValue { .. })));
        let nan = Nonlinearity::from_fn("nan", |_| f64::NAN);
        assert!(nan.eval(1.0).is_err());
    }

    #[test]
    fn parse_expression_evaluates() {
        let f = Nonlinearity::parse_expression("x^2").unwrap();
        assert_eq!(f.eval(2.0).unwrap(), 4.0);
        let f = Nonlinearity::parse_expression("x^2/(1+x^2)").unwrap();
        assert!((f.eval(1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(Nonlinearity::parse_expression("x^^2").is_err());
    }

    #[test]
    fn envelope_of_monotone_equals_function() {
        let f = power(2.0);
        assert!((f.envelope(2.0, 64).unwrap() - 4.0).abs() < 1e-12);
        // singleton domain
        assert_eq!(f.envelope(0.0, 64).unwrap(), 0.0);
    }

    #[test]
    fn envelope_finds_interior_max() {
        // sin clipped at zero: max over [0, pi] is 1 at pi/2
        let f = Nonlinearity::from_fn("clipped-sin", |x| x.sin().max(0.0));
        let e = f.envelope(std::f64::consts::PI, 128).unwrap();
        assert!((e - 1.0).abs() < 1e-9, "envelope {e}");
        // envelope dominates the endpoint value
        assert!(e >= f.eval(std::f64::consts::PI).unwrap());
    }

    #[test]
    fn envelope_monotone_on_nested_grids() {
        let f = Nonlinearity::from_fn("bump", |x| (x * (2.0 - x)).max(0.0));
        let e1 = f.envelope(1.0, 64).unwrap();
        let e2 = f.envelope(2.0, 128).unwrap(); // probe grid of t=1 is a subset
        assert!(e1 <= e2 + 1e-12);
    }

    #[test]
    fn quotient_classification() {
        // f(x) = x, N = 1: quotient identically 1
        let lim = Nonlinearity::from_family(Family::Linear)
            .asymptotic_quotient(1, LimitEnd::Zero)
            .unwrap();
        assert_eq!(lim.kind, LimitKind::Finite(1.0));

        // f(x) = x^2, N = 1: quotient x -> infinity
        let lim = power(2.0).asymptotic_quotient(1, LimitEnd::Infinity).unwrap();
        assert_eq!(lim.kind, LimitKind::Infinite);

        // ratio bump at infinity: quotient x/(1+x^2) -> 0
        let lim = Nonlinearity::from_family(Family::RatioBump)
            .asymptotic_quotient(1, LimitEnd::Infinity)
            .unwrap();
        assert_eq!(lim.kind, LimitKind::Zero);

        // exp(x)-1 overflows at large probes; still classifies Infinite
        let lim = Nonlinearity::from_family(Family::ExpMinusOne)
            .asymptotic_quotient(1, LimitEnd::Infinity)
            .unwrap();
        assert_eq!(lim.kind, LimitKind::Infinite);
        let lim = Nonlinearity::from_family(Family::ExpMinusOne)
            .asymptotic_quotient(1, LimitEnd::Zero)
            .unwrap();
        match lim.kind {
            LimitKind::Finite(v) => assert!((v - 1.0).abs() < 1e-3),
            other => panic!("expected Finite(1), got {other:?}"),
        }
    }

    #[test]
    fn oscillating_quotient_is_undetermined() {
        let f = Nonlinearity::parse_expression("x*(2+sin(log(x)))").unwrap();
        let lim = f.asymptotic_quotient(1, LimitEnd::Zero).unwrap();
        assert_eq!(lim.kind, LimitKind::Undetermined);
        assert!(!lim.evidence.is_empty());
    }

    #[test]
    fn declared_limits_override_estimation() {
        let f = power(2.0).with_declared_limits(DeclaredLimits {
            q0: Some(LimitKind::Finite(7.0)),
            qinf: None,
        });
        let lim = f.asymptotic_quotient(1, LimitEnd::Zero).unwrap();
        assert_eq!(lim.kind, LimitKind::Finite(7.0));
        assert!(lim.evidence.is_empty());
    }

    #[test]
    fn envelope_shares_quotients_with_original() {
        // Lemma-style consistency on the builtin catalog, N = 1.
        let catalog = [
            Nonlinearity::from_family(Family::Power { p: 2.0 }),
            Nonlinearity::from_family(Family::Linear),
            Nonlinearity::from_family(Family::RatioBump),
            Nonlinearity::from_family(Family::Constant { c: 1.0 }),
        ];
        for f in catalog {
            for end in [LimitEnd::Zero, LimitEnd::Infinity] {
                let orig = f.asymptotic_quotient(1, end).unwrap().kind;
                let env = f
                    .envelope_function(64)
                    .asymptotic_quotient(1, end)
                    .unwrap()
                    .kind;
                let matches = match (orig, env) {
                    (LimitKind::Zero, LimitKind::Zero) => true,
                    (LimitKind::Infinite, LimitKind::Infinite) => true,
                    (LimitKind::Finite(a), LimitKind::Finite(b)) => {
                        (a - b).abs() <= 1e-2 * a.abs().max(1.0)
                    }
                    _ => false,
                };
                assert!(matches, "{:?} {:?}: {orig:?} vs {env:?}", f.source(), end);
            }
        }
    }

    #[test]
    fn negative_probe_recorded_but_parse_succeeds() {
        let f = Nonlinearity::parse_expression("x - 10").unwrap();
        assert!(!f.negative_probes().is_empty());
        assert!(f.eval(0.5).is_err());
        assert_eq!(f.eval(11.0).unwrap(), 1.0);
    }
}
