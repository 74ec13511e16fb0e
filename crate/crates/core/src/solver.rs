//! Fixed points of the integral operator by damped Picard iteration with
//! shell-seeded multi-start, and an independent forward-integration oracle
//! (Volterra marching + Newton boundary matching).
//!
//! The two routes are deliberately different discretizations: Picard iterates
//! the Simpson-based integral operator, the oracle marches the derivative
//! form with a trapezoid predictor-corrector. Agreement between them is the
//! artifact's main correctness check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{apply_t, cone_check, m_big_hat, ProblemSpec, RadialGrid, StatePair, CONE_TOL};

/// Substeps per grid interval in the forward marcher. Eight keeps the
/// marcher's truncation error well below the operator's on stiff boundary
/// layers, so residual gates stay meaningful.
pub const DEFAULT_MARCH_SUBSTEPS: usize = 8;

/// Oracle agreement constant: a Picard solution must reproduce under forward
/// integration within max(10 tol_residual, ORACLE_C h^2). Calibrated on the
/// closed-form eigenfunction case with a wide safety factor.
pub const ORACLE_C: f64 = 25.0;

/// Newton target for the boundary mismatch, relative to the seed scale.
const SHOOT_TOL: f64 = 1e-10;

/// Seed grid used for Newton basins, per axis.
const SHOOT_SEEDS_PER_AXIS: usize = 16;

/// A nontrivial root whose Jacobian determinant is this small relative to
/// its size signals an eigenvalue-type degeneracy (a ray of solutions).
const DEGENERATE_DET_RTOL: f64 = 1e-4;

/// Iteration schedule for the fixed-point solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Convergence threshold on the sup-norm of T(s) - s.
    pub tol_residual: f64,
    pub max_iter: usize,
    /// Picard mixing weight in (0, 1]; falls back to 0.5 when the residual
    /// increases.
    pub damping: f64,
    /// Shell norms used as initial-guess sizes by multi_start.
    pub seed_radii: Vec<f64>,
    /// Norm distance under which two solutions are identified.
    pub dedupe_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_residual: 1e-8,
            max_iter: 500,
            damping: 1.0,
            seed_radii: vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
            dedupe_tol: 1e-4,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_residual > 0.0) {
            return Err(Error::InvalidArgument("tol_residual must be > 0".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be >= 1".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidArgument("damping must lie in (0, 1]".into()));
        }
        if !self.seed_radii.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::InvalidArgument(
                "seed_radii must be strictly increasing".into(),
            ));
        }
        if !(self.dedupe_tol > 0.0) {
            return Err(Error::InvalidArgument("dedupe_tol must be > 0".into()));
        }
        Ok(())
    }
}

/// A fixed-point candidate with residuals from both routes.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub state: StatePair,
    /// sup-norm of T(s) - s for the reported state.
    pub residual_fixed_point: f64,
    /// Forward-integration disagreement: trajectory reconstruction error for
    /// Picard solutions, boundary mismatch for shooting roots.
    pub residual_oracle: Option<f64>,
    /// Pair norm ||v1|| + ||v2||.
    pub norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Norm below the dedupe tolerance.
    pub trivial: bool,
    /// Exactly one component is (numerically) identically zero.
    pub half_trivial: bool,
    /// Root of the boundary map whose Jacobian is numerically singular;
    /// indicates an eigenvalue-type ray of solutions, not a generic count.
    pub degenerate: bool,
    /// Center values (v1(0), v2(0)).
    pub center: (f64, f64),
}

impl SolveReport {
    fn from_state(state: StatePair, residual_fp: f64, iterations: usize, converged: bool, dedupe_tol: f64) -> Self {
        let norm = state.pair_norm();
        let center = (state.v1[0], state.v2[0]);
        let s1 = state.sup_norm_v1();
        let s2 = state.sup_norm_v2();
        let half_trivial = norm >= dedupe_tol
            && ((s1 <= 1e-12 * (1.0 + s2)) ^ (s2 <= 1e-12 * (1.0 + s1)));
        SolveReport {
            residual_fixed_point: residual_fp,
            residual_oracle: None,
            norm,
            iterations,
            converged,
            trivial: norm < dedupe_tol,
            half_trivial,
            degenerate: false,
            center,
            state,
        }
    }
}

/// Damped Picard iteration from an in-cone initial state. Always reports the
/// best iterate seen; a non-finite iterate stops the run with the last finite
/// one.
pub fn picard_solve(
    p: &ProblemSpec,
    grid: &RadialGrid,
    initial: &StatePair,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    initial.check_lengths(grid)?;
    let cone = cone_check(initial, grid, CONE_TOL);
    if !cone.member {
        return Err(Error::InvalidArgument(format!(
            "picard_solve needs an in-cone initial state (worst margin {})",
            cone.worst_margin
        )));
    }

    let mut s = initial.clone();
    s.clamp_nonnegative();
    let mut damping = cfg.damping;
    let mut prev_res = f64::INFINITY;
    let mut best: Option<(StatePair, f64, usize)> = None;

    for iter in 1..=cfg.max_iter {
        let t = apply_t(p, grid, &s)?;
        if !t.is_finite() {
            // blow-up: report diverged with the last finite iterate
            let (state, res, it) = best.unwrap_or((s, f64::INFINITY, iter));
            return Ok(SolveReport::from_state(state, res, it, false, cfg.dedupe_tol));
        }
        let res = t.sup_distance(&s);
        if best.as_ref().map_or(true, |(_, r, _)| res < *r) {
            best = Some((s.clone(), res, iter));
        }
        if res <= cfg.tol_residual {
            return Ok(SolveReport::from_state(s, res, iter, true, cfg.dedupe_tol));
        }
        if res > prev_res {
            damping = 0.5;
        }
        prev_res = res;
        for i in 0..s.v1.len() {
            s.v1[i] = ((1.0 - damping) * s.v1[i] + damping * t.v1[i]).max(0.0);
            s.v2[i] = ((1.0 - damping) * s.v2[i] + damping * t.v2[i]).max(0.0);
        }
    }
    let (state, res, _) = best.expect("at least one iterate");
    Ok(SolveReport::from_state(state, res, cfg.max_iter, false, cfg.dedupe_tol))
}

/// Result of marching the coupled Volterra system from the center outward.
#[derive(Debug, Clone)]
pub struct MarchResult {
    /// Trajectory at the grid nodes, clamped at zero once a component crosses.
    pub state: StatePair,
    /// Terminal values v_i(1) before clamping: the boundary residuals.
    pub end1: f64,
    pub end2: f64,
    /// Radii where components first crossed zero, when they did.
    pub crossing1: Option<f64>,
    pub crossing2: Option<f64>,
}

/// Forward integration of
/// v_i'(r) = -(lambda int_0^r N tau^(N-1) h(v_j(tau)) dtau)^(1/N)
/// with a trapezoid predictor-corrector on `DEFAULT_MARCH_SUBSTEPS` substeps
/// per grid interval.
pub fn forward_integrate(
    p: &ProblemSpec,
    alpha1: f64,
    alpha2: f64,
    grid: &RadialGrid,
) -> Result<MarchResult> {
    forward_integrate_with(p, alpha1, alpha2, grid, DEFAULT_MARCH_SUBSTEPS)
}

pub fn forward_integrate_with(
    p: &ProblemSpec,
    alpha1: f64,
    alpha2: f64,
    grid: &RadialGrid,
    substeps: usize,
) -> Result<MarchResult> {
    if !(alpha1 >= 0.0) {
        return Err(Error::NegativeArgument { x: alpha1 });
    }
    if !(alpha2 >= 0.0) {
        return Err(Error::NegativeArgument { x: alpha2 });
    }
    let substeps = substeps.max(1);
    let nodes = grid.nodes();
    let n = p.n;
    let lam = p.lambda;
    let root = |x: f64| match n {
        1 => x,
        2 => x.sqrt(),
        3 => x.cbrt(),
        _ => x.powf(1.0 / n as f64),
    };
    let phi = |r: f64, v: f64, h: &crate::nonlinearity::Nonlinearity| -> Result<f64> {
        let hv = h.eval(v.max(0.0))?;
        Ok(if n == 1 {
            hv
        } else {
            n as f64 * r.powi(n as i32 - 1) * hv
        })
    };

    let mut v1 = alpha1;
    let mut v2 = alpha2;
    let mut raw1 = alpha1;
    let mut raw2 = alpha2;
    let mut j1 = 0.0f64;
    let mut j2 = 0.0f64;
    let mut crossing1 = None;
    let mut crossing2 = None;

    let mut out1 = Vec::with_capacity(nodes.len());
    let mut out2 = Vec::with_capacity(nodes.len());
    out1.push(v1);
    out2.push(v2);

    for w in nodes.windows(2) {
        let h = (w[1] - w[0]) / substeps as f64;
        for k in 0..substeps {
            let ra = w[0] + k as f64 * h;
            let rb = ra + h;
            let d1a = -root((lam * j1).max(0.0));
            let d2a = -root((lam * j2).max(0.0));
            // Euler predictor, then two corrector passes of the trapezoid.
            let mut v1p = (v1 + h * d1a).max(0.0);
            let mut v2p = (v2 + h * d2a).max(0.0);
            let mut d1b = d1a;
            let mut d2b = d2a;
            let mut j1n = j1;
            let mut j2n = j2;
            for _ in 0..2 {
                j1n = j1 + 0.5 * h * (phi(ra, v2, &p.f)? + phi(rb, v2p, &p.f)?);
                j2n = j2 + 0.5 * h * (phi(ra, v1, &p.g)? + phi(rb, v1p, &p.g)?);
                d1b = -root((lam * j1n).max(0.0));
                d2b = -root((lam * j2n).max(0.0));
                v1p = (v1 + 0.5 * h * (d1a + d1b)).max(0.0);
                v2p = (v2 + 0.5 * h * (d2a + d2b)).max(0.0);
            }
            if !(j1n.is_finite() && j2n.is_finite() && d1b.is_finite() && d2b.is_finite()) {
                return Err(Error::NonFinite(format!("marching integrand near r = {rb}")));
            }
            let next1 = v1 + 0.5 * h * (d1a + d1b);
            let next2 = v2 + 0.5 * h * (d2a + d2b);
            if next1 < 0.0 && crossing1.is_none() {
                crossing1 = Some(rb);
            }
            if next2 < 0.0 && crossing2.is_none() {
                crossing2 = Some(rb);
            }
            raw1 += 0.5 * h * (d1a + d1b);
            raw2 += 0.5 * h * (d2a + d2b);
            v1 = next1.max(0.0);
            v2 = next2.max(0.0);
            j1 = j1n;
            j2 = j2n;
        }
        out1.push(v1);
        out2.push(v2);
    }

    Ok(MarchResult {
        state: StatePair::new(out1, out2),
        end1: raw1,
        end2: raw2,
        crossing1,
        crossing2,
    })
}

/// Scalar diagnostic for eigenvalue-style sign changes: the summed boundary
/// values of a march from the fixed center (1, 1).
pub fn boundary_sign_value(p: &ProblemSpec, grid: &RadialGrid, alpha: (f64, f64)) -> Result<f64> {
    let m = forward_integrate_with(p, alpha.0, alpha.1, grid, 2)?;
    Ok(m.end1 + m.end2)
}

/// Rectangle of admissible center values for the shooting search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaBox {
    pub a1: (f64, f64),
    pub a2: (f64, f64),
}

impl AlphaBox {
    pub fn square(lo: f64, hi: f64) -> Self {
        AlphaBox {
            a1: (lo, hi),
            a2: (lo, hi),
        }
    }

    fn validate(&self) -> Result<()> {
        for (lo, hi) in [self.a1, self.a2] {
            if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "alpha box must lie in the nonnegative quadrant, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

/// Default shooting box from the weak upper bound: any fixed point on shell r
/// satisfies r <= 2 lambda^(1/N) M_hat_r^(1/N), which caps the solution norm
/// and hence the admissible center values.
pub fn default_alpha_box(p: &ProblemSpec) -> AlphaBox {
    let lam_root = match p.n {
        1 => p.lambda,
        _ => p.lambda.powf(1.0 / p.n as f64),
    };
    let mut cap: f64 = 0.0;
    let mut r = 1e-8f64;
    while r <= 1e8 {
        if let Ok(mb) = m_big_hat(p, r, 64) {
            let bound = 2.0 * lam_root * mb.powf(1.0 / p.n as f64);
            if r <= bound {
                cap = cap.max(r);
            }
        }
        r *= 1.333_521_432_163_324; // 10^(1/8)
    }
    let hi = (2.0 * cap).clamp(1.0, 1e6);
    AlphaBox::square(hi * 1e-7, hi)
}

/// Boundary map F(alpha) = (end1, end2) on the given grid and substep count.
fn boundary_map(
    p: &ProblemSpec,
    grid: &RadialGrid,
    substeps: usize,
    a: (f64, f64),
) -> Result<(f64, f64)> {
    let m = forward_integrate_with(p, a.0, a.1, grid, substeps)?;
    Ok((m.end1, m.end2))
}

struct NewtonOutcome {
    alpha: (f64, f64),
    fnorm: f64,
    converged: bool,
    singular: bool,
}

fn newton_on_boundary(
    p: &ProblemSpec,
    grid: &RadialGrid,
    substeps: usize,
    seed: (f64, f64),
    max_iter: usize,
) -> NewtonOutcome {
    let mut a = seed;
    let eval = |a: (f64, f64)| boundary_map(p, grid, substeps, a);
    let mut fv = match eval(a) {
        Ok(v) => v,
        Err(_) => {
            return NewtonOutcome {
                alpha: a,
                fnorm: f64::INFINITY,
                converged: false,
                singular: false,
            }
        }
    };
    for _ in 0..max_iter {
        let scale = 1.0 + a.0.abs().max(a.1.abs());
        let fnorm = fv.0.abs().max(fv.1.abs());
        if fnorm <= SHOOT_TOL * scale {
            return NewtonOutcome {
                alpha: a,
                fnorm,
                converged: true,
                singular: false,
            };
        }
        // forward-difference Jacobian
        let d0 = 1e-7f64.max(1e-7 * a.0.abs());
        let d1 = 1e-7f64.max(1e-7 * a.1.abs());
        let (f10, f20) = match eval((a.0 + d0, a.1)) {
            Ok(v) => v,
            Err(_) => break,
        };
        let (f01, f02) = match eval((a.0, a.1 + d1)) {
            Ok(v) => v,
            Err(_) => break,
        };
        let j = [
            [(f10 - fv.0) / d0, (f01 - fv.0) / d1],
            [(f20 - fv.1) / d0, (f02 - fv.1) / d1],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let jmax = j.iter().flatten().fold(0.0f64, |m, &x| m.max(x.abs()));
        if det.abs() < 1e-12 * (jmax * jmax + f64::MIN_POSITIVE) {
            return NewtonOutcome {
                alpha: a,
                fnorm,
                converged: false,
                singular: true,
            };
        }
        let step = (
            (fv.0 * j[1][1] - fv.1 * j[0][1]) / det,
            (fv.1 * j[0][0] - fv.0 * j[1][0]) / det,
        );
        // damped update with backtracking on the residual norm
        let mut s = 1.0f64;
        let mut accepted = false;
        for _ in 0..30 {
            let cand = (
                (a.0 - s * step.0).max(0.0),
                (a.1 - s * step.1).max(0.0),
            );
            match eval(cand) {
                Ok(fc) => {
                    if fc.0.abs().max(fc.1.abs()) < fnorm {
                        a = cand;
                        fv = fc;
                        accepted = true;
                        break;
                    }
                }
                Err(_) => {}
            }
            s *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let scale = 1.0 + a.0.abs().max(a.1.abs());
    let fnorm = fv.0.abs().max(fv.1.abs());
    NewtonOutcome {
        alpha: a,
        fnorm,
        converged: fnorm <= SHOOT_TOL * scale,
        singular: false,
    }
}

/// Is the Jacobian of the boundary map numerically singular at this root?
fn jacobian_degenerate(p: &ProblemSpec, grid: &RadialGrid, substeps: usize, a: (f64, f64)) -> bool {
    let eval = |a: (f64, f64)| boundary_map(p, grid, substeps, a);
    let fv = match eval(a) {
        Ok(v) => v,
        Err(_) => return true,
    };
    let d0 = 1e-7f64.max(1e-7 * a.0.abs());
    let d1 = 1e-7f64.max(1e-7 * a.1.abs());
    let (Ok((f10, f20)), Ok((f01, f02))) = (eval((a.0 + d0, a.1)), eval((a.0, a.1 + d1))) else {
        return true;
    };
    let j = [
        [(f10 - fv.0) / d0, (f01 - fv.0) / d1],
        [(f20 - fv.1) / d0, (f02 - fv.1) / d1],
    ];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let jmax = j.iter().flatten().fold(0.0f64, |m, &x| m.max(x.abs()));
    det.abs() < DEGENERATE_DET_RTOL * (jmax * jmax + f64::MIN_POSITIVE)
}

/// Shooting outcome with per-seed bookkeeping.
#[derive(Debug, Clone)]
pub struct ShootOutcome {
    /// Deduplicated roots sorted by pair norm (trivial roots included,
    /// flagged).
    pub reports: Vec<SolveReport>,
    pub seeds_tried: usize,
    pub singular_skips: usize,
}

impl ShootOutcome {
    /// Validated, nontrivial, non-degenerate roots: the countable solutions.
    pub fn countable(&self) -> impl Iterator<Item = &SolveReport> {
        self.reports
            .iter()
            .filter(|r| r.converged && !r.trivial && !r.degenerate)
    }

    pub fn has_degenerate(&self) -> bool {
        self.reports.iter().any(|r| r.degenerate && !r.trivial)
    }
}

/// Find roots of the boundary map by damped Newton from a geometric seed grid,
/// polish each on the fine grid and package them as reports.
pub fn boundary_shoot(
    p: &ProblemSpec,
    alpha_box: AlphaBox,
    grid: &RadialGrid,
    cfg: &SolverConfig,
) -> Result<Vec<SolveReport>> {
    Ok(boundary_shoot_detailed(p, alpha_box, grid, cfg)?.reports)
}

pub fn boundary_shoot_detailed(
    p: &ProblemSpec,
    alpha_box: AlphaBox,
    grid: &RadialGrid,
    cfg: &SolverConfig,
) -> Result<ShootOutcome> {
    cfg.validate()?;
    alpha_box.validate()?;

    // Coarse stage: cheap basins on a small grid.
    let coarse = RadialGrid::uniform(128)?;
    let geom = |lo: f64, hi: f64| -> Vec<f64> {
        let lo = lo.max(hi * 1e-12).max(1e-12);
        let ratio = (hi / lo).powf(1.0 / (SHOOT_SEEDS_PER_AXIS - 1) as f64);
        (0..SHOOT_SEEDS_PER_AXIS)
            .map(|i| lo * ratio.powi(i as i32))
            .collect()
    };
    let seeds1 = geom(alpha_box.a1.0, alpha_box.a1.1);
    let seeds2 = geom(alpha_box.a2.0, alpha_box.a2.1);

    let mut singular_skips = 0usize;
    let mut candidates: Vec<(f64, f64)> = Vec::new();
    for &s1 in &seeds1 {
        for &s2 in &seeds2 {
            let out = newton_on_boundary(p, &coarse, 2, (s1, s2), 40);
            if out.singular {
                singular_skips += 1;
                continue;
            }
            if out.converged {
                let a = out.alpha;
                let close = |b: &(f64, f64)| {
                    let scale = 1.0 + a.0.abs().max(a.1.abs());
                    (a.0 - b.0).abs().max((a.1 - b.1).abs()) <= 1e-5 * scale
                };
                if !candidates.iter().any(close) {
                    candidates.push(a);
                }
            }
        }
    }

    // Polish stage on the requested grid.
    let mut reports: Vec<SolveReport> = Vec::new();
    for seed in candidates {
        let out = newton_on_boundary(p, grid, DEFAULT_MARCH_SUBSTEPS, seed, 30);
        if out.singular {
            singular_skips += 1;
            continue;
        }
        if !out.converged {
            continue;
        }
        let march = forward_integrate(p, out.alpha.0, out.alpha.1, grid)?;
        let mut state = march.state;
        state.clamp_nonnegative();
        let t = apply_t(p, grid, &state)?;
        let residual_fp = t.sup_distance(&state);
        let mut rep = SolveReport::from_state(state, residual_fp, 0, true, cfg.dedupe_tol);
        rep.residual_oracle = Some(out.fnorm);
        rep.degenerate = !rep.trivial && jacobian_degenerate(p, grid, DEFAULT_MARCH_SUBSTEPS, out.alpha);
        reports.push(rep);
    }

    let reports = dedupe_by_norm(reports, cfg.dedupe_tol);
    Ok(ShootOutcome {
        reports,
        seeds_tried: SHOOT_SEEDS_PER_AXIS * SHOOT_SEEDS_PER_AXIS,
        singular_skips,
    })
}

/// Cluster reports by pair norm; gaps larger than `tol` split clusters and the
/// best-resolved member represents each cluster, so representatives are
/// pairwise separated by at least `tol`.
fn dedupe_by_norm(mut reports: Vec<SolveReport>, tol: f64) -> Vec<SolveReport> {
    reports.sort_by(|a, b| a.norm.total_cmp(&b.norm));
    let mut out: Vec<SolveReport> = Vec::new();
    let mut cluster: Vec<SolveReport> = Vec::new();
    let flush = |cluster: &mut Vec<SolveReport>, out: &mut Vec<SolveReport>| {
        if cluster.is_empty() {
            return;
        }
        let best = cluster
            .drain(..)
            .min_by(|a, b| {
                let ra = a.residual_oracle.unwrap_or(a.residual_fixed_point);
                let rb = b.residual_oracle.unwrap_or(b.residual_fixed_point);
                ra.total_cmp(&rb)
            })
            .unwrap();
        out.push(best);
    };
    for rep in reports {
        if let Some(last) = cluster.last() {
            if rep.norm - last.norm > tol {
                flush(&mut cluster, &mut out);
            }
        }
        cluster.push(rep);
    }
    flush(&mut cluster, &mut out);
    out
}

/// Trajectory agreement tolerance between the two routes on this grid.
pub fn oracle_tolerance(grid: &RadialGrid, cfg: &SolverConfig) -> f64 {
    let h = grid.spacing();
    (10.0 * cfg.tol_residual).max(ORACLE_C * h * h)
}

/// Run Picard from every shell seed, deduplicate, and keep only solutions the
/// forward-integration oracle reproduces.
pub fn multi_start(
    p: &ProblemSpec,
    grid: &RadialGrid,
    cfg: &SolverConfig,
) -> Result<Vec<SolveReport>> {
    cfg.validate()?;
    if cfg.seed_radii.is_empty() {
        return Err(Error::InvalidArgument("seed_radii must be nonempty".into()));
    }
    let mut found: Vec<SolveReport> = Vec::new();
    for &r in &cfg.seed_radii {
        let seed: Vec<f64> = grid.nodes().iter().map(|&t| 0.5 * r * (1.0 - t)).collect();
        let initial = StatePair::new(seed.clone(), seed);
        let rep = match picard_solve(p, grid, &initial, cfg) {
            Ok(rep) => rep,
            Err(_) => continue, // per-seed failures are not fatal
        };
        if rep.converged && !rep.trivial {
            found.push(rep);
        }
    }
    let mut kept = Vec::new();
    let tol_traj = oracle_tolerance(grid, cfg);
    for mut rep in dedupe_by_norm(found, cfg.dedupe_tol) {
        let march = forward_integrate(p, rep.center.0, rep.center.1, grid)?;
        let err = march.state.sup_distance(&rep.state);
        rep.residual_oracle = Some(err);
        if err <= tol_traj {
            kept.push(rep);
        }
    }
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::{Family, Nonlinearity};
    use approx::assert_abs_diff_eq;

    fn constant(c: f64) -> Nonlinearity {
        Nonlinearity::from_family(Family::Constant { c })
    }
    fn linear() -> Nonlinearity {
        Nonlinearity::from_family(Family::Linear)
    }
    fn square() -> Nonlinearity {
        Nonlinearity::from_family(Family::Power { p: 2.0 })
    }

    fn grid() -> RadialGrid {
        RadialGrid::uniform(512).unwrap()
    }

    #[test]
    fn picard_constant_map_converges_in_two_iterations() {
        let g = grid();
        let p = ProblemSpec::new(1, 2.0, constant(1.0), constant(1.0)).unwrap();
        let cfg = SolverConfig::default();
        let seed: Vec<f64> = g.nodes().iter().map(|&t| 0.3 * (1.0 - t)).collect();
        let rep = picard_solve(&p, &g, &StatePair::new(seed.clone(), seed), &cfg).unwrap();
        assert!(rep.converged);
        assert!(rep.iterations <= 2, "iterations = {}", rep.iterations);
        for (i, &r) in g.nodes().iter().enumerate() {
            assert_abs_diff_eq!(rep.state.v1[i], 1.0 - r * r, epsilon = 1e-10);
        }
        assert_abs_diff_eq!(rep.norm, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn picard_zero_initial_is_trivial_fixed_point() {
        let g = grid();
        let p = ProblemSpec::new(1, 1.0, linear(), linear()).unwrap();
        let rep = picard_solve(&p, &g, &StatePair::zeros(&g), &SolverConfig::default()).unwrap();
        assert!(rep.converged && rep.trivial);
        assert_eq!(rep.residual_fixed_point, 0.0);
        assert_eq!(rep.iterations, 1);
    }

    #[test]
    fn picard_rejects_off_cone_initial() {
        let g = grid();
        let p = ProblemSpec::new(1, 1.0, linear(), linear()).unwrap();
        let spike: Vec<f64> = g
            .nodes()
            .iter()
            .map(|&r| if r < 0.05 { 1.0 } else { 0.0 })
            .collect();
        let s = StatePair::new(spike.clone(), spike);
        assert!(picard_solve(&p, &g, &s, &SolverConfig::default()).is_err());
    }

    #[test]
    fn march_closed_form() {
        // N=1, lambda=1, f=g=1, alpha=(1/2,1/2): v = 1/2 - r^2/2, ends 0.
        let g = grid();
        let p = ProblemSpec::new(1, 1.0, constant(1.0), constant(1.0)).unwrap();
        let m = forward_integrate(&p, 0.5, 0.5, &g).unwrap();
        for (i, &r) in g.nodes().iter().enumerate() {
            assert_abs_diff_eq!(m.state.v1[i], 0.5 - 0.5 * r * r, epsilon = 1e-12);
        }
        assert!(m.end1.abs() < 1e-12 && m.end2.abs() < 1e-12);
        assert!(m.crossing1.is_none());
    }

    #[test]
    fn march_zero_initial_stays_zero() {
        let g = grid();
        let p = ProblemSpec::new(1, 1.0, linear(), linear()).unwrap();
        let m = forward_integrate(&p, 0.0, 0.0, &g).unwrap();
        assert!(m.state.v1.iter().all(|&v| v == 0.0));
        assert_eq!(m.end1, 0.0);
    }

    #[test]
    fn march_eigenfunction() {
        // N=1, lambda=(pi/2)^2, f=g=x: v = cos(pi r / 2) within O(h^2).
        let g = grid();
        let lam = (std::f64::consts::FRAC_PI_2).powi(2);
        let p = ProblemSpec::new(1, lam, linear(), linear()).unwrap();
        let m = forward_integrate(&p, 1.0, 1.0, &g).unwrap();
        let mut worst = 0.0f64;
        for (i, &r) in g.nodes().iter().enumerate() {
            let exact = (std::f64::consts::FRAC_PI_2 * r).cos();
            worst = worst.max((m.state.v1[i] - exact).abs());
        }
        assert!(worst < 1e-6, "worst = {worst:.3e}");
        assert!(m.end1.abs() < 1e-6);
    }

    #[test]
    fn march_rejects_negative_alpha() {
        let g = grid();
        let p = ProblemSpec::new(1, 1.0, linear(), linear()).unwrap();
        assert!(forward_integrate(&p, -0.1, 0.0, &g).is_err());
    }

    #[test]
    fn shoot_constant_unique_root() {
        // N=1, lambda=2, f=g=1: v(r) = alpha - lambda r^2 / 2 forces alpha = 1.
        let g = grid();
        let p = ProblemSpec::new(1, 2.0, constant(1.0), constant(1.0)).unwrap();
        let cfg = SolverConfig::default();
        let roots = boundary_shoot(&p, default_alpha_box(&p), &g, &cfg).unwrap();
        let nontrivial: Vec<_> = roots.iter().filter(|r| !r.trivial).collect();
        assert_eq!(nontrivial.len(), 1);
        assert_abs_diff_eq!(nontrivial[0].center.0, 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(nontrivial[0].norm, 2.0, epsilon = 1e-8);
    }

    #[test]
    fn shoot_linear_below_eigenvalue_only_trivial() {
        let g = grid();
        let p = ProblemSpec::new(1, 1.0, linear(), linear()).unwrap();
        let cfg = SolverConfig::default();
        let out = boundary_shoot_detailed(&p, AlphaBox::square(1e-3, 1e3), &g, &cfg).unwrap();
        assert_eq!(out.countable().count(), 0);
        assert!(!out.has_degenerate());
        // the trivial root itself is reported and flagged
        assert!(out.reports.iter().all(|r| r.trivial || !r.converged));
    }

    #[test]
    fn shoot_square_finds_symmetric_root() {
        // Symmetric reduction -v'' = v^2 has center value t0^2 with
        // t0 = sqrt(3/2) * B(1/3, 1/2)/3; frozen from the bisection oracle in
        // the acceptance tests.
        let g = grid();
        let p = ProblemSpec::new(1, 1.0, square(), square()).unwrap();
        let cfg = SolverConfig::default();
        let roots = boundary_shoot(&p, AlphaBox::square(0.1, 50.0), &g, &cfg).unwrap();
        let nontrivial: Vec<_> = roots.iter().filter(|r| !r.trivial).collect();
        assert!(!nontrivial.is_empty());
        let sym = nontrivial
            .iter()
            .find(|r| (r.center.0 - r.center.1).abs() < 1e-6)
            .expect("symmetric root");
        assert_abs_diff_eq!(sym.center.0, 2.94922, epsilon = 1e-3);
    }

    #[test]
    fn multi_start_dedupes_to_single_constant_solution() {
        let g = grid();
        let p = ProblemSpec::new(1, 2.0, constant(1.0), constant(1.0)).unwrap();
        let cfg = SolverConfig {
            seed_radii: vec![0.5, 1.0, 4.0],
            ..SolverConfig::default()
        };
        let sols = multi_start(&p, &g, &cfg).unwrap();
        assert_eq!(sols.len(), 1);
        assert_abs_diff_eq!(sols[0].norm, 2.0, epsilon = 1e-8);
        assert!(sols[0].residual_oracle.unwrap() <= oracle_tolerance(&g, &cfg));
    }

    #[test]
    fn multi_start_empty_for_subcritical_linear() {
        let g = grid();
        let p = ProblemSpec::new(1, 1.0, linear(), linear()).unwrap();
        let cfg = SolverConfig {
            seed_radii: vec![0.5, 1.0, 4.0],
            ..SolverConfig::default()
        };
        let sols = multi_start(&p, &g, &cfg).unwrap();
        assert!(sols.is_empty());
    }

    #[test]
    fn solutions_are_discretely_concave() {
        // u = -v convex means v has nonincreasing discrete slope.
        let g = grid();
        let p = ProblemSpec::new(1, 2.0, constant(1.0), constant(1.0)).unwrap();
        let sols = multi_start(&p, &g, &SolverConfig::default()).unwrap();
        let s = &sols[0].state;
        let nodes = g.nodes();
        for k in 1..nodes.len() - 1 {
            let left = (s.v1[k] - s.v1[k - 1]) / (nodes[k] - nodes[k - 1]);
            let right = (s.v1[k + 1] - s.v1[k]) / (nodes[k + 1] - nodes[k]);
            assert!(right <= left + 1e-9);
        }
    }
}
