//! Seeded randomized property suites over the operator and solver invariants.
//! These back the CLI's verify command and the acceptance tests.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nonlinearity::{Family, Nonlinearity};
use crate::operator::{
    apply_t, cone_check, gamma_constant, weak_bounds, ProblemSpec, QuadRule, RadialGrid,
    StatePair,
};
use crate::solver::{
    boundary_shoot_detailed, default_alpha_box, forward_integrate, multi_start,
    oracle_tolerance, SolverConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Lemmas,
    Operator,
    Oracle,
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lemmas" => Ok(Suite::Lemmas),
            "operator" => Ok(Suite::Operator),
            "oracle" => Ok(Suite::Oracle),
            other => Err(Error::InvalidArgument(format!(
                "unknown suite `{other}` (expected lemmas, operator or oracle)"
            ))),
        }
    }
}

/// One property's aggregated outcome over all trials.
#[derive(Debug, Clone)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub trials: usize,
    /// Smallest slack observed; negative beyond the property's tolerance
    /// means failure.
    pub worst_margin: f64,
    pub pass: bool,
    pub detail: String,
}

fn random_family(rng: &mut ChaCha8Rng) -> Family {
    match rng.gen_range(0..6) {
        0 => Family::Linear,
        1 => Family::RatioBump,
        2 => Family::Constant {
            c: rng.gen_range(0.5..2.0),
        },
        3 => Family::Power { p: 2.0 },
        4 => Family::Power { p: 3.0 },
        _ => Family::ExpMinusOne,
    }
}

fn random_problem(rng: &mut ChaCha8Rng, lambda_range: (f64, f64), max_n: u32) -> ProblemSpec {
    let n = rng.gen_range(1..=max_n);
    let lambda = rng.gen_range(lambda_range.0..lambda_range.1);
    ProblemSpec::new(
        n,
        lambda,
        Nonlinearity::from_family(random_family(rng)),
        Nonlinearity::from_family(random_family(rng)),
    )
    .expect("random problem is valid")
}

/// Random in-cone pair: nonnegative combinations of concave basis profiles,
/// scaled to the target pair norm.
fn random_cone_state(rng: &mut ChaCha8Rng, grid: &RadialGrid, target_norm: f64) -> StatePair {
    let mut component = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let b: [f64; 4] = [
            rng.gen_range(0.05..1.0),
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..1.0),
        ];
        grid.nodes()
            .iter()
            .map(|&t| {
                b[0] * (1.0 - t)
                    + b[1] * (1.0 - t * t)
                    + b[2] * (1.0 - t * t * t)
                    + b[3] * t * (1.0 - t)
            })
            .collect()
    };
    let mut s = StatePair::new(component(rng), component(rng));
    let norm = s.pair_norm();
    let scale = target_norm / norm;
    for v in s.v1.iter_mut().chain(s.v2.iter_mut()) {
        *v *= scale;
    }
    s
}

fn outcome(
    name: &'static str,
    trials: usize,
    worst: f64,
    tol: f64,
    detail: String,
) -> PropertyOutcome {
    PropertyOutcome {
        name,
        trials,
        worst_margin: worst,
        pass: worst >= -tol,
        detail,
    }
}

/// Cone preservation, concavity, and the weak/strong norm estimates.
pub fn lemmas_suite(trials: usize, seed: u64) -> Result<Vec<PropertyOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = RadialGrid::default_grid();
    let gammas: Vec<f64> = (1..=3)
        .map(|n| gamma_constant(n, 1e-12))
        .collect::<Result<_>>()?;

    let mut cone_worst = f64::INFINITY;
    let mut concave_worst = f64::INFINITY;
    let mut sandwich_worst = f64::INFINITY;
    let mut strong_worst = f64::INFINITY;

    for _ in 0..trials {
        let p = random_problem(&mut rng, (0.1, 10.0), 3);
        let r = rng.gen_range(0.2..6.0);
        let s = random_cone_state(&mut rng, &grid, r);

        let t = apply_t(&p, &grid, &s)?;
        let rep = cone_check(&t, &grid, 1e-9);
        cone_worst = cone_worst.min(rep.worst_margin);
        concave_worst = concave_worst.min(rep.concavity_margin);

        // weak sandwich on the shell of norm r
        let (_, _, lower, upper) = weak_bounds(&p, r, 512)?;
        let tn = t.pair_norm();
        let tol = 1e-6 * (1.0 + r + tn);
        sandwich_worst = sandwich_worst.min((tn - lower) / tol.max(1e-300));
        sandwich_worst = sandwich_worst.min((upper - tn) / tol.max(1e-300));

        // strong lower bound with eta read off the state itself
        let (lo_idx, hi_idx) = {
            let nodes = grid.nodes();
            (
                nodes.partition_point(|&x| x < 0.25),
                nodes.partition_point(|&x| x <= 0.75),
            )
        };
        let mut eta = f64::INFINITY;
        for i in lo_idx..hi_idx {
            let v = s.v2[i];
            if v > 1e-12 {
                let fv = p.f.eval(v)?;
                eta = eta.min(fv.powf(1.0 / p.n as f64) / v);
            }
        }
        if eta.is_finite() && eta > 0.0 {
            let gamma = gammas[(p.n - 1) as usize];
            let lam_root = p.lambda.powf(1.0 / p.n as f64);
            let bound = lam_root * gamma * eta * s.sup_norm_v2();
            let tol = 1e-6 * (1.0 + bound);
            strong_worst = strong_worst.min((tn - bound) / tol);
        }
    }

    Ok(vec![
        outcome(
            "cone-preservation",
            trials,
            cone_worst,
            1e-9,
            format!("worst cone margin {cone_worst:.3e}"),
        ),
        outcome(
            "concavity-bound",
            trials,
            concave_worst,
            1e-9,
            format!("worst concavity margin {concave_worst:.3e}"),
        ),
        outcome(
            "weak-sandwich",
            trials,
            sandwich_worst,
            1.0,
            format!("worst normalized slack {sandwich_worst:.3}"),
        ),
        outcome(
            "strong-lower-bound",
            trials,
            strong_worst,
            1.0,
            format!("worst normalized slack {strong_worst:.3}"),
        ),
    ])
}

/// Output shape, homogeneity and empirical quadrature order.
pub fn operator_suite(trials: usize, seed: u64) -> Result<Vec<PropertyOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grids: Vec<RadialGrid> = [512usize, 1024, 2048]
        .iter()
        .map(|&m| RadialGrid::uniform(m))
        .collect::<Result<_>>()?;

    let mut monotone_worst = f64::INFINITY;
    let mut boundary_worst = f64::INFINITY;
    let mut homo_worst = f64::INFINITY;
    let mut order_worst = f64::INFINITY;

    for _ in 0..trials {
        let p = random_problem(&mut rng, (0.1, 10.0), 3);
        let s512 = random_cone_state(&mut rng, &grids[0], rng.gen_range(0.2..4.0));

        let t = apply_t(&p, &grids[0], &s512)?;
        for comp in [&t.v1, &t.v2] {
            boundary_worst = boundary_worst.min(-comp.last().unwrap().abs());
            for w in comp.windows(2) {
                monotone_worst = monotone_worst.min(w[0] - w[1]);
            }
        }

        // homogeneity: lambda -> c^N lambda multiplies the output by c
        let c = rng.gen_range(1.2..3.0);
        let p_scaled = ProblemSpec::new(
            p.n,
            p.lambda * c.powi(p.n as i32),
            p.f.clone(),
            p.g.clone(),
        )?;
        let t_scaled = apply_t(&p_scaled, &grids[0], &s512)?;
        for (a, b) in t.v1.iter().zip(&t_scaled.v1) {
            let rel = (b - c * a).abs() / (1.0 + c * a.abs());
            homo_worst = homo_worst.min(1e-12 - rel);
        }

        // empirical order: successive halvings must shrink the change by 0.3
        let profile = |grid: &RadialGrid, b: &[f64; 4]| -> Vec<f64> {
            grid.nodes()
                .iter()
                .map(|&t| {
                    b[0] * (1.0 - t)
                        + b[1] * (1.0 - t * t)
                        + b[2] * (1.0 - t * t * t)
                        + b[3] * t * (1.0 - t)
                })
                .collect()
        };
        let b1: [f64; 4] = rng.gen();
        let b2: [f64; 4] = rng.gen();
        let states: Vec<StatePair> = grids
            .iter()
            .map(|g| StatePair::new(profile(g, &b1), profile(g, &b2)))
            .collect();
        let outs: Vec<StatePair> = grids
            .iter()
            .zip(&states)
            .map(|(g, s)| apply_t(&p, g, s))
            .collect::<Result<_>>()?;
        // compare on the coarse nodes (nested uniform grids)
        let diff_on_coarse = |fine: &StatePair, fine_grid: &RadialGrid, coarse: &StatePair, coarse_grid: &RadialGrid| -> f64 {
            let mut worst = 0.0f64;
            for (i, &r) in coarse_grid.nodes().iter().enumerate() {
                let j = fine_grid.nodes().partition_point(|&x| x < r);
                if fine_grid.nodes()[j] == r {
                    worst = worst.max((fine.v1[j] - coarse.v1[i]).abs());
                    worst = worst.max((fine.v2[j] - coarse.v2[i]).abs());
                }
            }
            worst
        };
        let d1 = diff_on_coarse(&outs[1], &grids[1], &outs[0], &grids[0]);
        let d2 = diff_on_coarse(&outs[2], &grids[2], &outs[1], &grids[1]);
        if d1 > 1e-13 {
            order_worst = order_worst.min(0.3 - d2 / d1);
        }
    }

    Ok(vec![
        outcome(
            "monotone-output",
            trials,
            monotone_worst,
            0.0,
            format!("worst increase {monotone_worst:.3e}"),
        ),
        outcome(
            "boundary-zero",
            trials,
            boundary_worst,
            0.0,
            format!("worst |T(1)| {:.3e}", -boundary_worst),
        ),
        outcome(
            "lambda-homogeneity",
            trials,
            homo_worst,
            0.0,
            format!("slack to 1e-12 relative: {homo_worst:.3e}"),
        ),
        outcome(
            "quadrature-order",
            trials,
            order_worst,
            0.0,
            format!("worst 0.3 - ratio = {order_worst:.3}"),
        ),
    ])
}

/// Agreement between the Picard route and the forward-integration oracle.
pub fn oracle_suite(trials: usize, seed: u64) -> Result<Vec<PropertyOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = RadialGrid::uniform(1024)?;
    let cfg = SolverConfig::default();
    let tol_traj = oracle_tolerance(&grid, &cfg);

    let mut repro_worst = f64::INFINITY;
    let mut embed_worst = f64::INFINITY;
    let mut fp_worst = f64::INFINITY;
    let mut checked = 0usize;

    for _ in 0..trials {
        let p = random_problem(&mut rng, (0.5, 8.0), 2);
        let picard = multi_start(&p, &grid, &cfg)?;
        let shoot = boundary_shoot_detailed(&p, default_alpha_box(&p), &grid, &cfg)?;

        for sol in &picard {
            checked += 1;
            let march = forward_integrate(&p, sol.center.0, sol.center.1, &grid)?;
            let err = march.state.sup_distance(&sol.state);
            repro_worst = repro_worst.min(tol_traj - err);

            // Picard must embed into the shooting solution set
            let embed_tol = cfg.dedupe_tol.max(tol_traj) * (1.0 + sol.norm);
            let best_gap = shoot
                .reports
                .iter()
                .map(|r| (r.norm - sol.norm).abs())
                .fold(f64::INFINITY, f64::min);
            embed_worst = embed_worst.min(embed_tol - best_gap);
        }
        for root in shoot.countable() {
            let gate = 1e-6f64.max(
                crate::solver::ORACLE_C * grid.spacing().powi(2) * (1.0 + root.norm),
            );
            fp_worst = fp_worst.min(gate - root.residual_fixed_point);
        }
    }

    Ok(vec![
        outcome(
            "picard-reproduces-under-march",
            checked,
            repro_worst,
            0.0,
            format!("worst tolerance slack {repro_worst:.3e}"),
        ),
        outcome(
            "picard-embeds-into-shoot",
            checked,
            embed_worst,
            0.0,
            format!("worst embedding slack {embed_worst:.3e}"),
        ),
        outcome(
            "shoot-fixed-point-residual",
            trials,
            fp_worst,
            0.0,
            format!("worst residual slack {fp_worst:.3e}"),
        ),
    ])
}

pub fn run_suite(suite: Suite, trials: usize, seed: u64) -> Result<Vec<PropertyOutcome>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trial count must be >= 1".into()));
    }
    match suite {
        Suite::Lemmas => lemmas_suite(trials, seed),
        Suite::Operator => operator_suite(trials, seed),
        Suite::Oracle => oracle_suite(trials, seed),
    }
}

/// Trapezoid-rule cross-check used by tests: same grids, lower order.
pub fn trapezoid_grid(intervals: usize) -> Result<RadialGrid> {
    Ok(RadialGrid::uniform(intervals)?.with_rule(QuadRule::Trapezoid))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_on_a_smoke_run() {
        for suite in [Suite::Lemmas, Suite::Operator] {
            for out in run_suite(suite, 5, 7).unwrap() {
                assert!(out.pass, "{}: {}", out.name, out.detail);
            }
        }
    }

    #[test]
    fn zero_trials_is_invalid() {
        assert!(run_suite(Suite::Lemmas, 0, 1).is_err());
    }

    #[test]
    fn suite_parsing() {
        assert_eq!("lemmas".parse::<Suite>().unwrap(), Suite::Lemmas);
        assert!("bogus".parse::<Suite>().is_err());
    }
}
