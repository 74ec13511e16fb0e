//! Radial discretization of the cone-preserving integral operator, the
//! constant Gamma, the weak-lemma bounds and cone membership checks.
//!
//! The operator maps a sampled pair (v1, v2) on a radial grid to
//!
//! ```text
//! T^1(r) = int_r^1 ( lambda int_0^s N tau^(N-1) f(v2(tau)) dtau )^(1/N) ds
//! T^2(r) = likewise with g(v1)
//! ```
//!
//! The inner integral accumulates node-to-node with a trapezoid refined by a
//! Richardson midpoint correction (v interpolated linearly at midpoints); the
//! outer integral uses per-interval quadratic fits. Increments are clamped at
//! zero so the output is exactly nonincreasing and exactly zero at r = 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;

/// Default number of grid intervals.
///
/// Chosen so that the fixed-point residual of oracle (shooting) solutions
/// stays below 1e-6 even for stiff boundary layers at large lambda; 512 and
/// 1024 intervals were measured too coarse for that on the hardest regression
/// case (lambda = 600, ratio-bump pair).
pub const DEFAULT_INTERVALS: usize = 4096;

/// Default absolute tolerance for cone membership margins.
pub const CONE_TOL: f64 = 1e-9;

/// Quadrature family used by a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadRule {
    /// Trapezoid inner rule refined by a Richardson midpoint correction,
    /// quadratic-fit outer rule. Exact on the quadratic closed-form case.
    Simpson,
    /// Plain cumulative trapezoid for both integrals. First order slack;
    /// kept for convergence comparisons.
    Trapezoid,
}

/// Strictly increasing radial nodes on [0, 1] with 0, 1/4, 3/4 and 1 always
/// present (cone margins are evaluated at the quarter points).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    rule: QuadRule,
}

impl RadialGrid {
    /// Uniform grid with `intervals` subintervals (at least 8); the quarter
    /// points are inserted when they are not already nodes.
    pub fn uniform(intervals: usize) -> Result<Self> {
        if intervals < 8 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 8 intervals, got {intervals}"
            )));
        }
        let mut nodes: Vec<f64> = (0..=intervals)
            .map(|i| i as f64 / intervals as f64)
            .collect();
        *nodes.last_mut().unwrap() = 1.0;
        for forced in [0.25, 0.75] {
            if !nodes.iter().any(|&r| r == forced) {
                let pos = nodes.partition_point(|&r| r < forced);
                nodes.insert(pos, forced);
            }
        }
        Ok(RadialGrid {
            nodes,
            rule: QuadRule::Simpson,
        })
    }

    pub fn default_grid() -> Self {
        Self::uniform(DEFAULT_INTERVALS).expect("default grid is valid")
    }

    pub fn with_rule(mut self, rule: QuadRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn rule(&self) -> QuadRule {
        self.rule
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest node spacing; the h in O(h^2) error bounds.
    pub fn spacing(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Index range of nodes lying inside [1/4, 3/4].
    fn quarter_band(&self) -> (usize, usize) {
        let lo = self.nodes.partition_point(|&r| r < 0.25);
        let hi = self.nodes.partition_point(|&r| r <= 0.75);
        (lo, hi)
    }
}

/// A pair of radial profiles sampled at the grid nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePair {
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
}

impl StatePair {
    pub fn new(v1: Vec<f64>, v2: Vec<f64>) -> Self {
        StatePair { v1, v2 }
    }

    pub fn zeros(grid: &RadialGrid) -> Self {
        StatePair {
            v1: vec![0.0; grid.len()],
            v2: vec![0.0; grid.len()],
        }
    }

    /// Matching lengths against a grid.
    pub fn check_lengths(&self, grid: &RadialGrid) -> Result<()> {
        if self.v1.len() != grid.len() || self.v2.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "state length ({}, {}) does not match grid ({})",
                self.v1.len(),
                self.v2.len(),
                grid.len()
            )));
        }
        Ok(())
    }

    pub fn sup_norm_v1(&self) -> f64 {
        self.v1.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    pub fn sup_norm_v2(&self) -> f64 {
        self.v2.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    /// ||(v1, v2)|| = ||v1|| + ||v2||, each a sup norm.
    pub fn pair_norm(&self) -> f64 {
        self.sup_norm_v1() + self.sup_norm_v2()
    }

    pub fn clamp_nonnegative(&mut self) {
        for v in self.v1.iter_mut().chain(self.v2.iter_mut()) {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.v1.iter().chain(self.v2.iter()).all(|v| v.is_finite())
    }

    /// sup over both components of |self - other|.
    pub fn sup_distance(&self, other: &StatePair) -> f64 {
        let d1 = self
            .v1
            .iter()
            .zip(&other.v1)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let d2 = self
            .v2
            .iter()
            .zip(&other.v2)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        d1.max(d2)
    }
}

/// One instance of the transformed positive-concave system.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub n: u32,
    pub lambda: f64,
    pub f: Nonlinearity,
    pub g: Nonlinearity,
}

impl ProblemSpec {
    pub fn new(n: u32, lambda: f64, f: Nonlinearity, g: Nonlinearity) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidArgument("dimension N must be >= 1".into()));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "lambda must be positive and finite, got {lambda}"
            )));
        }
        Ok(ProblemSpec { n, lambda, f, g })
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.n, lambda, self.f.clone(), self.g.clone())
    }
}

/// Result of testing a state against the cone K and the concavity bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub member: bool,
    /// Smallest slack among "v_i >= 0" and
    /// "min over [1/4,3/4] of v_i >= ||v_i||/4". Negative means violated.
    pub worst_margin: f64,
    /// Slack in v(t) >= min{t, 1-t} ||v|| over nodes and components.
    pub concavity_margin: f64,
}

fn nth_root(x: f64, n: u32) -> f64 {
    match n {
        1 => x,
        2 => x.sqrt(),
        3 => x.cbrt(),
        _ => x.powf(1.0 / n as f64),
    }
}

/// lambda * N * r^(N-1) * h(v), the inner integrand.
#[inline]
fn inner_integrand(p_lambda: f64, n: u32, r: f64, hv: f64) -> f64 {
    if n == 1 {
        p_lambda * hv
    } else {
        p_lambda * n as f64 * r.powi(n as i32 - 1) * hv
    }
}

/// Integral over the first interval of the quadratic through three nodes.
fn quad_fit_first(h0: f64, h1: f64, w0: f64, w1: f64, w2: f64) -> f64 {
    w0 * h0 * (2.0 * h0 + 3.0 * h1) / (6.0 * (h0 + h1))
        + w1 * h0 * (h0 + 3.0 * h1) / (6.0 * h1)
        - w2 * h0.powi(3) / (6.0 * h1 * (h0 + h1))
}

/// Integral over the second interval of the quadratic through three nodes.
fn quad_fit_second(h0: f64, h1: f64, w0: f64, w1: f64, w2: f64) -> f64 {
    w2 * h1 * (2.0 * h1 + 3.0 * h0) / (6.0 * (h0 + h1))
        + w1 * h1 * (h1 + 3.0 * h0) / (6.0 * h0)
        - w0 * h1.powi(3) / (6.0 * h0 * (h0 + h1))
}

fn apply_component(
    p: &ProblemSpec,
    grid: &RadialGrid,
    source: &[f64],
    h: &Nonlinearity,
) -> Result<Vec<f64>> {
    let r = grid.nodes();
    let m = r.len() - 1;
    let lam = p.lambda;

    // Inner cumulative integral I(r_i), clamped at zero before the root so
    // that -1e-16-scale noise cannot reach a fractional power.
    let mut hv = Vec::with_capacity(m + 1);
    for &v in source {
        hv.push(h.eval(v)?);
    }
    let mut w = vec![0.0; m + 1];
    let mut acc = 0.0f64;
    w[0] = 0.0;
    for i in 0..m {
        let dr = r[i + 1] - r[i];
        let phi_a = inner_integrand(lam, p.n, r[i], hv[i]);
        let phi_b = inner_integrand(lam, p.n, r[i + 1], hv[i + 1]);
        let inc = match grid.rule() {
            QuadRule::Trapezoid => dr * 0.5 * (phi_a + phi_b),
            QuadRule::Simpson => {
                let mid = 0.5 * (r[i] + r[i + 1]);
                let vmid = 0.5 * (source[i] + source[i + 1]);
                let phi_m = inner_integrand(lam, p.n, mid, h.eval(vmid.max(0.0))?);
                dr / 6.0 * (phi_a + 4.0 * phi_m + phi_b)
            }
        };
        if !inc.is_finite() {
            return Err(Error::NonFinite(format!(
                "inner integrand on [{}, {}]",
                r[i],
                r[i + 1]
            )));
        }
        acc += inc;
        w[i + 1] = nth_root(acc.max(0.0), p.n);
    }

    // Outer integral from each node to 1: nonnegative per-interval increments
    // summed backwards, so the value at r = 1 is exactly zero and the output
    // is exactly nonincreasing.
    let mut out = vec![0.0; m + 1];
    for i in (0..m).rev() {
        let inc = match grid.rule() {
            QuadRule::Trapezoid => (r[i + 1] - r[i]) * 0.5 * (w[i] + w[i + 1]),
            QuadRule::Simpson => {
                if i == 0 {
                    let (h0, h1) = (r[1] - r[0], r[2] - r[1]);
                    quad_fit_first(h0, h1, w[0], w[1], w[2])
                } else {
                    let (h0, h1) = (r[i] - r[i - 1], r[i + 1] - r[i]);
                    quad_fit_second(h0, h1, w[i - 1], w[i], w[i + 1])
                }
            }
        };
        out[i] = out[i + 1] + inc.max(0.0);
    }
    Ok(out)
}

/// Apply the integral operator to a nonnegative state.
pub fn apply_t(p: &ProblemSpec, grid: &RadialGrid, s: &StatePair) -> Result<StatePair> {
    s.check_lengths(grid)?;
    if s.v1.iter().chain(s.v2.iter()).any(|&v| v < 0.0) {
        return Err(Error::InvalidArgument(
            "apply_t requires a nonnegative state".into(),
        ));
    }
    let t1 = apply_component(p, grid, &s.v2, &p.f)?;
    let t2 = apply_component(p, grid, &s.v1, &p.g)?;
    Ok(StatePair::new(t1, t2))
}

/// Gamma = (1/4) * int_{1/4}^{3/4} (s^N - 4^-N)^(1/N) ds, by adaptive Simpson
/// quadrature to absolute tolerance `tol` (the inner integral is closed-form).
pub fn gamma_constant(n: u32, tol: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidArgument("N must be >= 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let a = 0.25f64.powi(n as i32);
    let f = |s: f64| nth_root((s.powi(n as i32) - a).max(0.0), n);
    Ok(0.25 * adaptive_simpson(&f, 0.25, 0.75, tol, 60))
}

/// Adaptive Simpson with Richardson acceptance.
fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    let c = 0.5 * (a + b);
    let (fa, fb, fc) = (f(a), f(b), f(c));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_step(f, a, b, c, fa, fb, fc, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    c: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let d = 0.5 * (a + c);
    let e = 0.5 * (c + b);
    let (fd, fe) = (f(d), f(e));
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, c, d, fa, fc, fd, left, 0.5 * tol, depth - 1)
            + simpson_step(f, c, b, e, fc, fb, fe, right, 0.5 * tol, depth - 1)
    }
}

/// Evaluate the cone inequalities and the concavity bound at the grid nodes.
pub fn cone_check(s: &StatePair, grid: &RadialGrid, tol: f64) -> ConeReport {
    let (lo, hi) = grid.quarter_band();
    let nodes = grid.nodes();

    let mut worst = f64::INFINITY;
    let mut concavity = f64::INFINITY;
    for comp in [&s.v1, &s.v2] {
        let sup = comp.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let mut band_min = f64::INFINITY;
        for (i, &v) in comp.iter().enumerate() {
            worst = worst.min(v); // v >= 0
            if i >= lo && i < hi {
                band_min = band_min.min(v);
            }
            let floor = nodes[i].min(1.0 - nodes[i]) * sup;
            concavity = concavity.min(v - floor);
        }
        worst = worst.min(band_min - 0.25 * sup);
    }
    ConeReport {
        member: worst >= -tol,
        worst_margin: worst,
        concavity_margin: concavity,
    }
}

/// min over [r/8, r] of min(f, g), estimated on a geometric grid.
pub fn m_hat(p: &ProblemSpec, r: f64, resolution: usize) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument("m_hat needs r > 0".into()));
    }
    let n = resolution.max(2);
    let lo = r / 8.0;
    let ratio = (r / lo).powf(1.0 / n as f64);
    let mut t = lo;
    let mut m = f64::INFINITY;
    for _ in 0..=n {
        m = m.min(p.f.eval(t)?).min(p.g.eval(t)?);
        t *= ratio;
    }
    m = m.min(p.f.eval(r)?).min(p.g.eval(r)?);
    Ok(m)
}

/// max over [0, r] of f + g, estimated on a uniform grid.
pub fn m_big_hat(p: &ProblemSpec, r: f64, resolution: usize) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument("M_hat needs r > 0".into()));
    }
    let n = resolution.max(2);
    let mut m = f64::NEG_INFINITY;
    for i in 0..=n {
        let t = r * i as f64 / n as f64;
        m = m.max(p.f.eval(t)? + p.g.eval(t)?);
    }
    Ok(m)
}

/// The weak-lemma pair (m_hat, M_hat) at shell radius r, with the resulting
/// norm bounds 4 lambda^(1/N) Gamma m_hat^(1/N) and 2 lambda^(1/N) M_hat^(1/N).
pub fn weak_bounds(
    p: &ProblemSpec,
    r: f64,
    resolution: usize,
) -> Result<(f64, f64, f64, f64)> {
    let mh = m_hat(p, r, resolution)?;
    let mbig = m_big_hat(p, r, resolution)?;
    let gamma = gamma_constant(p.n, 1e-12)?;
    let lam_root = nth_root(p.lambda, p.n);
    let lower = 4.0 * lam_root * gamma * nth_root(mh, p.n);
    let upper = 2.0 * lam_root * nth_root(mbig, p.n);
    Ok((mh, mbig, lower, upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::Family;
    use approx::assert_abs_diff_eq;

    fn constant(c: f64) -> Nonlinearity {
        Nonlinearity::from_family(Family::Constant { c })
    }

    fn linear() -> Nonlinearity {
        Nonlinearity::from_family(Family::Linear)
    }

    #[test]
    fn grid_construction() {
        assert!(RadialGrid::uniform(7).is_err());
        let g = RadialGrid::uniform(512).unwrap();
        assert_eq!(g.nodes()[0], 0.0);
        assert_eq!(*g.nodes().last().unwrap(), 1.0);
        assert!(g.nodes().contains(&0.25));
        assert!(g.nodes().contains(&0.75));
        assert_eq!(g.len(), 513);
        // quarter points inserted into a grid that misses them
        let g = RadialGrid::uniform(10).unwrap();
        assert!(g.nodes().contains(&0.25) && g.nodes().contains(&0.75));
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn closed_form_constant_f() {
        // N = 2, lambda = 4, f = 1: T^1(r) = 1 - r^2 for any v2.
        let g = RadialGrid::uniform(512).unwrap();
        let p = ProblemSpec::new(2, 4.0, constant(1.0), constant(1.0)).unwrap();
        let s = StatePair::new(vec![0.3; g.len()], vec![0.7; g.len()]);
        let t = apply_t(&p, &g, &s).unwrap();
        for (i, &r) in g.nodes().iter().enumerate() {
            assert_abs_diff_eq!(t.v1[i], 1.0 - r * r, epsilon = 1e-12);
        }
    }

    #[test]
    fn closed_form_n1() {
        // N = 1, lambda = 1, f = 1: T^1(0) = int_0^1 s ds = 1/2.
        let g = RadialGrid::uniform(512).unwrap();
        let p = ProblemSpec::new(1, 1.0, constant(1.0), constant(1.0)).unwrap();
        let s = StatePair::zeros(&g);
        let t = apply_t(&p, &g, &s).unwrap();
        assert_abs_diff_eq!(t.v1[0], 0.5, epsilon = 1e-13);
    }

    #[test]
    fn zero_is_fixed_when_f0_g0_vanish() {
        let g = RadialGrid::uniform(64).unwrap();
        let p = ProblemSpec::new(1, 3.0, linear(), linear()).unwrap();
        let t = apply_t(&p, &g, &StatePair::zeros(&g)).unwrap();
        assert!(t.v1.iter().all(|&v| v == 0.0));
        assert!(t.v2.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn output_shape_invariants() {
        let g = RadialGrid::uniform(128).unwrap();
        let p = ProblemSpec::new(2, 3.0, linear(), constant(2.0)).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|r| 1.0 - r * r).collect();
        let t = apply_t(&p, &g, &StatePair::new(v.clone(), v)).unwrap();
        assert_eq!(*t.v1.last().unwrap(), 0.0);
        assert_eq!(*t.v2.last().unwrap(), 0.0);
        assert!(t.v1.windows(2).all(|w| w[1] <= w[0]));
        assert!(t.v2.windows(2).all(|w| w[1] <= w[0]));
        // one-sided derivative at 0 is O(h)
        let h = g.nodes()[1];
        assert!((t.v1[1] - t.v1[0]).abs() / h < 10.0 * h);
    }

    #[test]
    fn homogeneity_in_lambda() {
        // lambda -> c^N lambda scales the output by exactly c.
        let g = RadialGrid::uniform(64).unwrap();
        let f = Nonlinearity::from_family(Family::RatioBump);
        let p1 = ProblemSpec::new(2, 3.0, f.clone(), f.clone()).unwrap();
        let c = 1.7f64;
        let p2 = ProblemSpec::new(2, 3.0 * c.powi(2), f.clone(), f).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|r| 0.8 * (1.0 - r)).collect();
        let s = StatePair::new(v.clone(), v);
        let t1 = apply_t(&p1, &g, &s).unwrap();
        let t2 = apply_t(&p2, &g, &s).unwrap();
        for i in 0..g.len() {
            assert_abs_diff_eq!(t2.v1[i], c * t1.v1[i], epsilon = 1e-12 * (1.0 + t1.v1[i]));
        }
    }

    #[test]
    fn gamma_values() {
        // N = 1 closed form: (1/4) int_{1/4}^{3/4} (s - 1/4) ds = 1/32.
        assert_abs_diff_eq!(gamma_constant(1, 1e-13).unwrap(), 0.03125, epsilon = 1e-13);
        // N = 2 against the antiderivative s/2 sqrt(s^2-a^2) - a^2/2 ln(s + sqrt(s^2-a^2)).
        let a = 0.25f64;
        let anti = |s: f64| {
            let q = (s * s - a * a).max(0.0).sqrt();
            0.5 * s * q - 0.5 * a * a * (s + q).ln()
        };
        let exact = 0.25 * (anti(0.75) - anti(0.25));
        assert_abs_diff_eq!(gamma_constant(2, 1e-12).unwrap(), exact, epsilon = 1e-9);
        // N = 3 golden value from the adaptive quadrature oracle.
        assert_abs_diff_eq!(
            gamma_constant(3, 1e-12).unwrap(),
            0.058252168356921887,
            epsilon = 1e-9
        );
    }

    #[test]
    fn cone_check_examples() {
        let g = RadialGrid::uniform(64).unwrap();
        // 1 - r^2 is concave: member with comfortable margin.
        let v: Vec<f64> = g.nodes().iter().map(|r| 1.0 - r * r).collect();
        let rep = cone_check(&StatePair::new(v.clone(), v), &g, CONE_TOL);
        assert!(rep.member);
        assert!(rep.worst_margin >= 0.4375 - 0.25 - 1e-12);
        assert!(rep.concavity_margin >= -1e-12);

        // zero state: member at margin 0
        let rep = cone_check(&StatePair::zeros(&g), &g, CONE_TOL);
        assert!(rep.member);
        assert_eq!(rep.worst_margin, 0.0);

        // v(r) = r: boundary member of K (min on [1/4,3/4] = ||v||/4)
        let v: Vec<f64> = g.nodes().to_vec();
        let rep = cone_check(&StatePair::new(v.clone(), v), &g, CONE_TOL);
        assert!(rep.member);
        assert!(rep.worst_margin.abs() <= 1e-12);
        assert!(rep.concavity_margin.abs() <= 1e-12);

        // a state that clearly violates the quarter bound
        let spike: Vec<f64> = g
            .nodes()
            .iter()
            .map(|&r| if r < 0.1 { 1.0 } else { 0.0 })
            .collect();
        let rep = cone_check(&StatePair::new(spike.clone(), spike), &g, CONE_TOL);
        assert!(!rep.member);
        assert!(rep.worst_margin <= -0.25 + 1e-12);
    }

    #[test]
    fn weak_bound_quantities() {
        // f = g = x, r = 1: m_hat = 1/8, M_hat = 2.
        let p = ProblemSpec::new(1, 1.0, linear(), linear()).unwrap();
        let (mh, mb, lower, upper) = weak_bounds(&p, 1.0, 256).unwrap();
        assert_abs_diff_eq!(mh, 0.125, epsilon = 1e-12);
        assert_abs_diff_eq!(mb, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lower, 4.0 * (1.0 / 32.0) * 0.125, epsilon = 1e-10);
        assert_abs_diff_eq!(upper, 4.0, epsilon = 1e-10);

        // constants: m_hat = 1, M_hat = 2
        let p = ProblemSpec::new(1, 1.0, constant(1.0), constant(1.0)).unwrap();
        let (mh, mb, _, _) = weak_bounds(&p, 0.7, 64).unwrap();
        assert_abs_diff_eq!(mh, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mb, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_negative_state() {
        let g = RadialGrid::uniform(16).unwrap();
        let p = ProblemSpec::new(1, 1.0, linear(), linear()).unwrap();
        let mut s = StatePair::zeros(&g);
        s.v1[3] = -0.5;
        assert!(apply_t(&p, &g, &s).is_err());
    }

    #[test]
    fn problem_spec_validation() {
        assert!(ProblemSpec::new(0, 1.0, linear(), linear()).is_err());
        assert!(ProblemSpec::new(1, 0.0, linear(), linear()).is_err());
        assert!(ProblemSpec::new(1, f64::NAN, linear(), linear()).is_err());
    }
}
