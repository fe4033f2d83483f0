//! Pareto front of the productivity / feeding-cost trade-off and the
//! feed-dependence analysis.
//!
//! The front is swept with the weighting method: each weight theta in
//! [0, 1] contributes the maximizer of theta p_out - (1 - theta) p_in.
//! Global Pareto optimality of the swept points is then checked against a
//! dense grid over the admissible set. The weighting method can in
//! general miss non-convex stretches of a front, so alongside the sweep
//! this module extracts the non-dominated subset of the grid image
//! directly and reports how far it strays from the swept front instead of
//! asserting the two coincide.
//!
//! Feed-dependence: with the feed bounded by z, the optimal feed sits on
//! the boundary, s_in* = z when the weight exceeds the local breakeven
//! theta0 and s_in* = 0 (a degenerate reactor with an empty admissible
//! set) below it.

use crate::model::Control;
use crate::objectives::{theta0, theta_breakeven};
use crate::optimizer::{
    maximize_from, maximize_p_theta, maximize_yield_alpha, objective_value, OptimOptions,
    SteadyObjective,
};
use crate::parallel::run_indexed;
use crate::{Error, ModelParams, Result};
use serde::{Deserialize, Serialize};

/// Where the optimal feed sits when it is free to vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SinChoice {
    /// Degenerate optimum at s_in = 0, where the admissible set is empty
    /// and both objectives vanish.
    Zero,
    /// Optimum at the feed upper bound z.
    UpperBound,
    /// Feed held fixed (two-dimensional sweep).
    Fixed,
    /// Exactly at the breakeven weight the net profit does not depend on
    /// the feed.
    Indifferent,
}

impl std::fmt::Display for SinChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SinChoice::Zero => "ZERO",
            SinChoice::UpperBound => "UPPER_BOUND",
            SinChoice::Fixed => "FIXED",
            SinChoice::Indifferent => "INDIFFERENT",
        })
    }
}

/// One point of the swept front.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub theta: f64,
    pub u_star: Control,
    pub p_out: f64,
    pub p_in: f64,
    /// Always theta * p_out - (1 - theta) * p_in of the stored values.
    pub p_theta: f64,
    pub s_in_choice: SinChoice,
    /// True for weights at or below breakeven, where the supremum 0 is
    /// only approached toward alpha = 1, d = 0.
    pub boundary_supremum: bool,
}

/// A weight whose maximization failed during a sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaFailure {
    pub theta: f64,
    pub error: String,
}

/// Result of a front sweep: the points that solved, plus the weights that
/// did not.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrontSweep {
    pub points: Vec<ParetoPoint>,
    pub failures: Vec<ThetaFailure>,
}

/// Uniform weight grid on [0, 1] with `n` points.
pub fn theta_grid(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::Domain {
            what: "theta_n",
            value: n as f64,
            bound: "weight grid needs at least 2 points".into(),
        });
    }
    Ok((0..n).map(|i| i as f64 / (n - 1) as f64).collect())
}

fn check_thetas(thetas: &[f64]) -> Result<()> {
    for pair in thetas.windows(2) {
        if pair[1] < pair[0] {
            return Err(Error::Precondition(
                "weights must be sorted ascending".into(),
            ));
        }
    }
    if let (Some(first), Some(last)) = (thetas.first(), thetas.last()) {
        if !(*first >= 0.0 && *last <= 1.0) {
            return Err(Error::Precondition("weights must lie in [0, 1]".into()));
        }
    }
    Ok(())
}

fn boundary_point(theta: f64, s_in: f64) -> ParetoPoint {
    ParetoPoint {
        theta,
        u_star: Control { alpha: 1.0, d: 0.0, s_in },
        p_out: 0.0,
        p_in: 0.0,
        p_theta: 0.0,
        s_in_choice: SinChoice::Fixed,
        boundary_supremum: true,
    }
}

fn interior_point(p: &ModelParams, theta: f64, u: Control) -> ParetoPoint {
    // Reconstruct p_theta from the stored pair so the weighting identity
    // holds exactly on the emitted record.
    let p_out = objective_value(p, SteadyObjective::POut, u.s_in, u.alpha, u.d)
        .expect("maximizer is admissible");
    let p_in = u.d * u.s_in;
    ParetoPoint {
        theta,
        u_star: u,
        p_out,
        p_in,
        p_theta: theta * p_out - (1.0 - theta) * p_in,
        s_in_choice: SinChoice::Fixed,
        boundary_supremum: false,
    }
}

/// Sweeps the weighted problem over an ascending weight grid at fixed
/// feed and returns the non-dominated points. With `warm_start` each
/// solve starts from the previous maximizer (sequential, the
/// deterministic default); without it the weights solve independently
/// from the default start and may run on `opts.threads` workers. A solver
/// failure at one weight is recorded and the sweep continues.
pub fn sweep_front(
    p: &ModelParams,
    s_in: f64,
    thetas: &[f64],
    warm_start: bool,
    opts: &OptimOptions,
) -> Result<FrontSweep> {
    check_thetas(thetas)?;
    let breakeven = theta_breakeven(p);
    let mut points = Vec::with_capacity(thetas.len());
    let mut failures = Vec::new();
    if warm_start {
        let mut prev: Option<(f64, f64)> = None;
        for &theta in thetas {
            if theta <= breakeven {
                points.push(boundary_point(theta, s_in));
                continue;
            }
            let solved = match prev {
                Some(start) => {
                    maximize_from(p, SteadyObjective::PTheta(theta), s_in, start, opts)
                }
                None => maximize_p_theta(p, theta, s_in, opts),
            };
            match solved {
                Ok(r) => {
                    prev = Some((r.u_star.alpha, r.u_star.d));
                    points.push(interior_point(p, theta, r.u_star));
                }
                Err(e) => failures.push(ThetaFailure { theta, error: e.to_string() }),
            }
        }
    } else {
        let solved = run_indexed(thetas.len(), opts.threads, |i| {
            maximize_p_theta(p, thetas[i], s_in, opts)
        });
        for (&theta, r) in thetas.iter().zip(solved) {
            match r {
                Ok(r) if r.boundary_supremum => points.push(boundary_point(theta, s_in)),
                Ok(r) => points.push(interior_point(p, theta, r.u_star)),
                Err(e) => failures.push(ThetaFailure { theta, error: e.to_string() }),
            }
        }
    }
    Ok(FrontSweep { points: non_dominated(&points), failures })
}

/// Filters out every point strictly dominated by another (higher p_out
/// and no higher p_in, or lower p_in and no lower p_out), comparing the
/// stored values exactly.
pub fn non_dominated(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    points
        .iter()
        .filter(|a| {
            !points.iter().any(|b| {
                b.p_out >= a.p_out
                    && b.p_in <= a.p_in
                    && (b.p_out > a.p_out || b.p_in < a.p_in)
            })
        })
        .copied()
        .collect()
}

/// A grid point that beats a front point in one objective without losing
/// the other.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DominanceViolation {
    pub theta: f64,
    pub front_p_out: f64,
    pub front_p_in: f64,
    pub alpha: f64,
    pub d: f64,
    pub grid_p_out: f64,
    pub grid_p_in: f64,
}

/// Near-tie forgiveness for dominance comparisons against optimizer
/// output.
const DOMINANCE_SLACK: f64 = 1e-9;

/// Checks every front point against an exhaustive admissible grid and
/// returns the dominance violations (expected: none). A violation is a
/// grid point better by more than the slack in one objective and no worse
/// than the slack in the other.
pub fn dominance_check(
    p: &ModelParams,
    points: &[ParetoPoint],
    grid_n: usize,
    s_in: f64,
    threads: usize,
) -> Result<Vec<DominanceViolation>> {
    if grid_n < 100 {
        return Err(Error::Precondition(format!(
            "dominance grid must be at least 100x100, got {grid_n}"
        )));
    }
    let d_cap = p.d_rho_bound();
    let rows = run_indexed(grid_n - 1, threads, |row| {
        let d = (row + 1) as f64 * d_cap / grid_n as f64;
        let g_in = d * s_in;
        let mut violations = Vec::new();
        for j in 1..grid_n {
            let alpha = j as f64 / grid_n as f64;
            let Some(g_out) = objective_value(p, SteadyObjective::POut, s_in, alpha, d)
            else {
                continue;
            };
            for f in points {
                let beats_out = g_out > f.p_out + DOMINANCE_SLACK
                    && g_in <= f.p_in + DOMINANCE_SLACK;
                let beats_in = g_in < f.p_in - DOMINANCE_SLACK
                    && g_out >= f.p_out - DOMINANCE_SLACK;
                if beats_out || beats_in {
                    violations.push(DominanceViolation {
                        theta: f.theta,
                        front_p_out: f.p_out,
                        front_p_in: f.p_in,
                        alpha,
                        d,
                        grid_p_out: g_out,
                        grid_p_in: g_in,
                    });
                }
            }
        }
        violations
    });
    Ok(rows.into_iter().flatten().collect())
}

/// Optimal boundary feed for the three-dimensional problem at a fixed
/// control pair: the upper bound z above the local breakeven weight,
/// zero below it, indifferent at the crossing. For the ZERO and
/// INDIFFERENT cases the returned feed is 0 and z respectively; at the
/// crossing any feed in [0, z] gives the same net profit.
pub fn sin_boundary_choice(
    p: &ModelParams,
    alpha: f64,
    d: f64,
    theta: f64,
    z: f64,
) -> Result<(f64, SinChoice)> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::Domain {
            what: "theta",
            value: theta,
            bound: "weight must lie in [0, 1]".into(),
        });
    }
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::Domain {
            what: "z",
            value: z,
            bound: "feed upper bound must be positive and finite".into(),
        });
    }
    if !crate::objectives::in_u_raw(p, alpha, d, z) {
        return Err(Error::Precondition(format!(
            "(alpha = {alpha}, d = {d}) is not admissible for any feed below {z}"
        )));
    }
    let t0 = theta0(p, alpha, d)?;
    if (theta - t0).abs() <= 1e-12 {
        Ok((z, SinChoice::Indifferent))
    } else if theta > t0 {
        Ok((z, SinChoice::UpperBound))
    } else {
        Ok((0.0, SinChoice::Zero))
    }
}

/// Image of one admissible grid cell in the objective plane.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ReachablePoint {
    pub alpha: f64,
    pub d: f64,
    pub p_out: f64,
    pub p_in: f64,
}

/// Grid image of the admissible set at one feed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReachableSet {
    pub s_in: f64,
    pub points: Vec<ReachablePoint>,
}

fn reachable_cloud(
    p: &ModelParams,
    s_in: f64,
    grid_n: usize,
    threads: usize,
) -> Vec<ReachablePoint> {
    let d_cap = p.d_rho_bound();
    let rows = run_indexed(grid_n - 1, threads, |row| {
        let d = (row + 1) as f64 * d_cap / grid_n as f64;
        (1..grid_n)
            .filter_map(|j| {
                let alpha = j as f64 / grid_n as f64;
                objective_value(p, SteadyObjective::POut, s_in, alpha, d).map(|p_out| {
                    ReachablePoint { alpha, d, p_out, p_in: d * s_in }
                })
            })
            .collect::<Vec<_>>()
    });
    rows.into_iter().flatten().collect()
}

/// Grid images of the admissible set for an ascending list of feeds.
pub fn reachable_sets(
    p: &ModelParams,
    s_in_list: &[f64],
    grid_n: usize,
    threads: usize,
) -> Result<Vec<ReachableSet>> {
    if s_in_list.is_empty() || s_in_list.windows(2).any(|w| w[1] <= w[0]) || s_in_list[0] <= 0.0
    {
        return Err(Error::Precondition(
            "feed list must be positive and strictly ascending".into(),
        ));
    }
    if grid_n < 2 {
        return Err(Error::Domain {
            what: "grid_n",
            value: grid_n as f64,
            bound: "grid resolution must be at least 2".into(),
        });
    }
    Ok(s_in_list
        .iter()
        .map(|&s_in| ReachableSet { s_in, points: reachable_cloud(p, s_in, grid_n, threads) })
        .collect())
}

/// Membership oracle for the dominated closure of the reachable set at a
/// given feed: can the pair (p_out, p_in) be matched or beaten? The feed
/// cost pins the dilution at d = p_in / s_in, so it suffices to maximize
/// the productivity over the light fraction at that dilution.
pub fn reachable_contains(
    p: &ModelParams,
    s_in: f64,
    p_out: f64,
    p_in: f64,
    tol: f64,
) -> Result<bool> {
    if p_in <= 0.0 {
        return Ok(p_out <= tol);
    }
    let d = p_in / s_in;
    match maximize_yield_alpha(p, d, s_in) {
        // The yield is productivity per unit feed rate.
        Ok((_, best_yield)) => Ok(best_yield * d * s_in >= p_out - tol),
        Err(Error::Infeasible(_)) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Outcome of a reachable-set nesting check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NestingReport {
    /// Admissible cells of the smaller-feed grid that were tested.
    pub checked: usize,
    /// Cells whose objective pair the larger feed cannot match or beat.
    pub failures: Vec<ReachablePoint>,
}

/// Verifies that every objective pair achieved on a grid at the smaller
/// feed is achieved or dominated at the larger feed.
pub fn check_nesting(
    p: &ModelParams,
    s_in_small: f64,
    s_in_large: f64,
    grid_n: usize,
    threads: usize,
) -> Result<NestingReport> {
    if !(s_in_small > 0.0 && s_in_large > s_in_small) {
        return Err(Error::Precondition(
            "feeds must satisfy 0 < s_in_small < s_in_large".into(),
        ));
    }
    if grid_n < 2 {
        return Err(Error::Domain {
            what: "grid_n",
            value: grid_n as f64,
            bound: "grid resolution must be at least 2".into(),
        });
    }
    let d_cap = p.d_rho_bound();
    let rows: Vec<Result<(usize, Vec<ReachablePoint>)>> =
        run_indexed(grid_n - 1, threads, |row| {
            let d = (row + 1) as f64 * d_cap / grid_n as f64;
            let mut checked = 0usize;
            let mut failures = Vec::new();
            for j in 1..grid_n {
                let alpha = j as f64 / grid_n as f64;
                let Some(p_out) =
                    objective_value(p, SteadyObjective::POut, s_in_small, alpha, d)
                else {
                    continue;
                };
                checked += 1;
                let p_in = d * s_in_small;
                if !reachable_contains(p, s_in_large, p_out, p_in, 1e-9)? {
                    failures.push(ReachablePoint { alpha, d, p_out, p_in });
                }
            }
            Ok((checked, failures))
        });
    let mut checked = 0usize;
    let mut failures = Vec::new();
    for row in rows {
        let (c, f) = row?;
        checked += c;
        failures.extend(f);
    }
    Ok(NestingReport { checked, failures })
}

/// One row of the weight-profile table for the three-dimensional problem
/// with the feed bounded by z.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProfileRow {
    pub theta: f64,
    pub alpha: f64,
    pub d: f64,
    pub s_in_star: f64,
    pub s_in_choice: SinChoice,
    pub p_out: f64,
    pub p_in: f64,
    pub p_theta: f64,
}

/// Optimal controls and objective values as functions of the weight when
/// the feed may be chosen in [0, z]. The optimal feed only ever takes the
/// boundary values: 0 below the breakeven weight (everything degenerates
/// to an empty reactor) and z above it, producing a single jump in
/// s_in*(theta).
pub fn front_vs_theta_profile(
    p: &ModelParams,
    z: f64,
    thetas: &[f64],
    opts: &OptimOptions,
) -> Result<Vec<ProfileRow>> {
    check_thetas(thetas)?;
    let mut rows = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let r = maximize_p_theta(p, theta, z, opts)?;
        if r.boundary_supremum {
            rows.push(ProfileRow {
                theta,
                alpha: 1.0,
                d: 0.0,
                s_in_star: 0.0,
                s_in_choice: SinChoice::Zero,
                p_out: 0.0,
                p_in: 0.0,
                p_theta: 0.0,
            });
        } else {
            let point = interior_point(p, theta, r.u_star);
            rows.push(ProfileRow {
                theta,
                alpha: r.u_star.alpha,
                d: r.u_star.d,
                s_in_star: z,
                s_in_choice: SinChoice::UpperBound,
                p_out: point.p_out,
                p_in: point.p_in,
                p_theta: point.p_theta,
            });
        }
    }
    Ok(rows)
}

/// Non-dominated subset of the grid image at one feed, sorted by rising
/// feed cost.
pub fn grid_non_dominated(
    p: &ModelParams,
    s_in: f64,
    grid_n: usize,
    threads: usize,
) -> Result<Vec<ReachablePoint>> {
    if grid_n < 2 {
        return Err(Error::Domain {
            what: "grid_n",
            value: grid_n as f64,
            bound: "grid resolution must be at least 2".into(),
        });
    }
    let mut cloud = reachable_cloud(p, s_in, grid_n, threads);
    cloud.sort_by(|a, b| {
        a.p_in
            .partial_cmp(&b.p_in)
            .unwrap()
            .then(b.p_out.partial_cmp(&a.p_out).unwrap())
            .then(a.alpha.partial_cmp(&b.alpha).unwrap())
    });
    let mut staircase: Vec<ReachablePoint> = Vec::new();
    for point in cloud {
        if staircase.last().is_none_or(|best| point.p_out > best.p_out) {
            staircase.push(point);
        }
    }
    Ok(staircase)
}

/// How far the grid non-dominated set strays from the swept front.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CoverageReport {
    pub front_count: usize,
    pub grid_count: usize,
    /// Smallest uniform relaxation of both objectives under which every
    /// grid non-dominated point is dominated by some front point.
    pub max_epsilon: f64,
    pub worst: Option<ReachablePoint>,
}

/// Measures the coverage gap between a swept front and the grid
/// non-dominated set. A gap on the order of the weight-grid spacing is
/// expected (the sweep is a finite sample of the front); a large gap
/// would point at a front region the weighting method cannot reach.
pub fn front_coverage_gap(front: &[ParetoPoint], grid_nd: &[ReachablePoint]) -> CoverageReport {
    let mut max_epsilon: f64 = 0.0;
    let mut worst = None;
    for g in grid_nd {
        let eps = front
            .iter()
            .map(|f| (g.p_out - f.p_out).max(f.p_in - g.p_in).max(0.0))
            .fold(f64::INFINITY, f64::min);
        if eps > max_epsilon {
            max_epsilon = eps;
            worst = Some(*g);
        }
    }
    CoverageReport {
        front_count: front.len(),
        grid_count: grid_nd.len(),
        max_epsilon,
        worst,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::maximize_p_out;

    fn p() -> ModelParams {
        ModelParams::default()
    }

    fn opts() -> OptimOptions {
        OptimOptions::default()
    }

    fn front101(s_in: f64) -> FrontSweep {
        sweep_front(&p(), s_in, &theta_grid(101).unwrap(), true, &opts()).unwrap()
    }

    #[test]
    fn theta_grid_is_uniform_and_validated() {
        let g = theta_grid(101).unwrap();
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[100], 1.0);
        assert!((g[50] - 0.5).abs() < 1e-15);
        assert!(theta_grid(1).is_err());
    }

    #[test]
    fn front_endpoints_match_the_single_objective_problems() {
        let sweep = front101(1.0);
        assert!(sweep.failures.is_empty());
        let first = sweep.points.first().unwrap();
        assert_eq!(first.theta, 0.0);
        assert_eq!((first.p_out, first.p_in), (0.0, 0.0));
        assert!(first.boundary_supremum);
        let last = sweep.points.last().unwrap();
        assert_eq!(last.theta, 1.0);
        let best = maximize_p_out(&p(), 1.0, &opts()).unwrap();
        assert!((last.p_out - best.value).abs() < 1e-9);
        assert!((last.u_star.alpha - best.u_star.alpha).abs() < 1e-6);
        assert!((last.u_star.d - best.u_star.d).abs() < 1e-6);
    }

    #[test]
    fn front_is_monotone_and_non_dominated() {
        let sweep = front101(1.0);
        for pair in sweep.points.windows(2) {
            assert!(pair[1].p_out >= pair[0].p_out, "p_out must rise with theta");
            assert!(pair[1].p_in >= pair[0].p_in, "p_in must rise with theta");
        }
        for a in &sweep.points {
            for b in &sweep.points {
                if b.p_out > a.p_out {
                    assert!(b.p_in >= a.p_in, "front points must not dominate each other");
                }
            }
        }
    }

    #[test]
    fn front_points_satisfy_the_weighting_identity_exactly() {
        let sweep = front101(1.0);
        for f in &sweep.points {
            let expect = f.theta * f.p_out - (1.0 - f.theta) * f.p_in;
            assert_eq!(f.p_theta.to_bits(), expect.to_bits());
        }
    }

    #[test]
    fn each_front_point_wins_its_own_weight() {
        let sweep = front101(1.0);
        for a in &sweep.points {
            let own = a.theta * a.p_out - (1.0 - a.theta) * a.p_in;
            for b in &sweep.points {
                let cross = a.theta * b.p_out - (1.0 - a.theta) * b.p_in;
                assert!(
                    cross <= own + 1e-9,
                    "theta = {} prefers the point of theta = {}",
                    a.theta,
                    b.theta
                );
            }
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        let a = front101(1.0);
        let b = front101(1.0);
        assert_eq!(a.points.len(), b.points.len());
        for (x, y) in a.points.iter().zip(&b.points) {
            assert_eq!(x.p_out.to_bits(), y.p_out.to_bits());
            assert_eq!(x.p_in.to_bits(), y.p_in.to_bits());
            assert_eq!(x.u_star.alpha.to_bits(), y.u_star.alpha.to_bits());
        }
    }

    #[test]
    fn cold_sweep_agrees_with_warm_sweep() {
        let thetas: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
        let warm = sweep_front(&p(), 1.0, &thetas, true, &opts()).unwrap();
        let threaded = OptimOptions { threads: 3, ..opts() };
        let cold = sweep_front(&p(), 1.0, &thetas, false, &threaded).unwrap();
        assert_eq!(warm.points.len(), cold.points.len());
        for (w, c) in warm.points.iter().zip(&cold.points) {
            assert!((w.p_out - c.p_out).abs() < 1e-8);
            assert!((w.p_in - c.p_in).abs() < 1e-8);
        }
    }

    #[test]
    fn unsorted_or_out_of_range_weights_are_rejected() {
        let err = sweep_front(&p(), 1.0, &[0.5, 0.2], true, &opts()).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
        let err = sweep_front(&p(), 1.0, &[0.5, 1.2], true, &opts()).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn dominance_check_is_clean_on_the_swept_front() {
        let sweep = front101(1.0);
        let violations = dominance_check(&p(), &sweep.points, 150, 1.0, 2).unwrap();
        assert!(violations.is_empty(), "unexpected violations: {violations:?}");
    }

    #[test]
    fn dominance_check_flags_a_perturbed_point() {
        let p = p();
        let sweep = front101(1.0);
        let mut fake = sweep.points[60];
        let u = Control {
            alpha: fake.u_star.alpha,
            d: fake.u_star.d + 0.05,
            s_in: 1.0,
        };
        fake.p_out = objective_value(&p, SteadyObjective::POut, 1.0, u.alpha, u.d).unwrap();
        fake.p_in = u.d;
        fake.u_star = u;
        let violations = dominance_check(&p, &[fake], 150, 1.0, 1).unwrap();
        assert!(!violations.is_empty(), "shifted point must be dominated by the grid");
    }

    #[test]
    fn dominance_check_rejects_coarse_grids_and_passes_empty_input() {
        assert!(matches!(
            dominance_check(&p(), &[], 99, 1.0, 1),
            Err(Error::Precondition(_))
        ));
        assert!(dominance_check(&p(), &[], 100, 1.0, 1).unwrap().is_empty());
    }

    #[test]
    fn feed_choice_switches_at_the_local_breakeven() {
        let p = p();
        let t0 = theta0(&p, 0.5, 0.5).unwrap();
        assert!((t0 - 0.516_891_891_891_891_9).abs() < 1e-12);
        assert_eq!(
            sin_boundary_choice(&p, 0.5, 0.5, t0 - 1e-3, 2.0).unwrap(),
            (0.0, SinChoice::Zero)
        );
        assert_eq!(
            sin_boundary_choice(&p, 0.5, 0.5, t0 + 1e-3, 2.0).unwrap(),
            (2.0, SinChoice::UpperBound)
        );
        assert_eq!(
            sin_boundary_choice(&p, 0.5, 0.5, t0, 2.0).unwrap().1,
            SinChoice::Indifferent
        );
        assert_eq!(
            sin_boundary_choice(&p, 0.5, 0.5, 1.0, 2.0).unwrap().1,
            SinChoice::UpperBound
        );
        assert_eq!(sin_boundary_choice(&p, 0.5, 0.5, 0.0, 2.0).unwrap().1, SinChoice::Zero);
        assert!(matches!(
            sin_boundary_choice(&p, 0.5, 0.9, 0.5, 0.01),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn reachable_sets_nest_across_feeds() {
        let report = check_nesting(&p(), 0.5, 1.0, 60, 2).unwrap();
        assert_eq!(report.checked, 3075);
        assert!(report.failures.is_empty(), "nesting failures: {:?}", report.failures);
    }

    #[test]
    fn reachable_cloud_contains_the_productivity_optimum() {
        let p = p();
        let best = maximize_p_out(&p, 1.0, &opts()).unwrap();
        let contained =
            reachable_contains(&p, 1.0, best.value, best.u_star.d * 1.0, 1e-9).unwrap();
        assert!(contained);
        let impossible = reachable_contains(&p, 1.0, best.value * 1.01, best.u_star.d, 1e-9);
        assert!(!impossible.unwrap(), "beating the optimum at its own feed cost");
    }

    #[test]
    fn reachable_cloud_edges_are_affine_in_dilution() {
        let p = p();
        let sets = reachable_sets(&p, &[0.5, 1.0], 80, 2).unwrap();
        for set in &sets {
            let max_p_in = set.points.iter().map(|q| q.p_in).fold(f64::MIN, f64::max);
            let max_d = set.points.iter().map(|q| q.d).fold(f64::MIN, f64::max);
            assert_eq!(max_p_in.to_bits(), (max_d * set.s_in).to_bits());
        }
        assert!(matches!(
            reachable_sets(&p, &[1.0, 0.5], 80, 1),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn profile_feed_jumps_once_at_the_breakeven_weight() {
        let p = p();
        let rows = front_vs_theta_profile(&p, 1.0, &theta_grid(101).unwrap(), &opts()).unwrap();
        assert_eq!(rows.len(), 101);
        let breakeven = theta_breakeven(&p);
        let mut jumps = 0;
        for pair in rows.windows(2) {
            assert!(pair[0].s_in_star == 0.0 || pair[0].s_in_star == 1.0, "feed is boundary");
            if pair[0].s_in_star != pair[1].s_in_star {
                jumps += 1;
                assert!(pair[0].theta <= breakeven && breakeven < pair[1].theta);
            }
        }
        assert_eq!(jumps, 1, "the optimal feed must jump exactly once");
        for row in &rows {
            let expect = row.theta * row.p_out - (1.0 - row.theta) * row.p_in;
            assert_eq!(row.p_theta.to_bits(), expect.to_bits());
            match row.s_in_choice {
                SinChoice::Zero => assert_eq!(row.s_in_star, 0.0),
                SinChoice::UpperBound => assert_eq!(row.s_in_star, 1.0),
                _ => panic!("profile rows are boundary choices"),
            }
        }
    }

    #[test]
    fn grid_front_is_covered_up_to_sweep_resolution() {
        let p = p();
        let grid_nd = grid_non_dominated(&p, 1.0, 200, 2).unwrap();
        assert!(grid_nd.len() > 50, "staircase should be densely populated");
        for pair in grid_nd.windows(2) {
            assert!(pair[1].p_in > pair[0].p_in && pair[1].p_out > pair[0].p_out);
        }
        let dense = front101(1.0);
        let coarse = sweep_front(&p, 1.0, &theta_grid(11).unwrap(), true, &opts()).unwrap();
        let gap_dense = front_coverage_gap(&dense.points, &grid_nd);
        let gap_coarse = front_coverage_gap(&coarse.points, &grid_nd);
        assert!(
            gap_dense.max_epsilon < 0.05,
            "101-weight sweep should track the grid front, gap = {}",
            gap_dense.max_epsilon
        );
        assert!(gap_dense.max_epsilon <= gap_coarse.max_epsilon);
    }
}
