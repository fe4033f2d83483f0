//! Maximizers for the steady-state criteria over the admissible set at a
//! fixed feed, each checkable against a brute-force grid oracle.
//!
//! The solver is deliberately derivative-free: a log-barrier keeps
//! iterates strictly inside the admissible set (the objectives are only
//! defined there), a Nelder-Mead simplex descends the barrier-penalized
//! objective through a continuation schedule, and a compass-search polish
//! on the raw objective tightens the final iterate until axis steps of
//! 1e-10 stop improving. The criteria are closed forms, so evaluations are
//! cheap and smooth to machine precision.
//!
//! The module also maps the definiteness of the Hessian of g0(alpha, d) =
//! psi_alpha_inv(d), the feed threshold whose curvature decides where the
//! admissible set fails to be convex in three dimensions.

use crate::equilibria::{d_upper_bound, psi_alpha, psi_alpha_inv};
use crate::model::Control;
use crate::objectives::theta_breakeven;
use crate::parallel::run_indexed;
use crate::{Error, ModelParams, Result};
use serde::{Deserialize, Serialize};

/// Barrier continuation schedule, strongest to weakest.
const BARRIER_SCHEDULE: [f64; 3] = [1e-2, 1e-4, 1e-6];

/// Fraction of the per-alpha dilution bound used as the search box cap.
const D_BOX_GUARD: f64 = 0.999;

/// Objective to maximize over (alpha, d) at a fixed feed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SteadyObjective {
    /// Algal productivity d c*.
    POut,
    /// Net profit theta p_out - (1 - theta) p_in.
    PTheta(f64),
}

/// Tuning knobs for the simplex search.
#[derive(Debug, Clone, Copy)]
pub struct OptimOptions {
    /// Iteration cap per barrier stage.
    pub max_iters: usize,
    /// When set, cross-check against an n-by-n grid oracle and record the
    /// gap.
    pub oracle_n: Option<usize>,
    /// Worker threads for grid evaluations. Never changes results.
    pub threads: usize,
}

impl Default for OptimOptions {
    fn default() -> Self {
        OptimOptions { max_iters: 600, oracle_n: None, threads: 1 }
    }
}

/// Outcome of a maximization.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OptimResult {
    /// Maximizer. Strictly inside the admissible set, except that
    /// boundary-supremum results carry the limit point itself (which may
    /// sit on the closed boundary, e.g. alpha = 1, d = 0).
    pub u_star: Control,
    pub value: f64,
    pub iterations: usize,
    /// |value - grid best| when the oracle cross-check was requested.
    pub oracle_gap: Option<f64>,
    pub converged: bool,
    /// True when the supremum is only approached on the boundary and not
    /// attained inside the admissible set.
    pub boundary_supremum: bool,
}

/// Best cell of a brute-force grid scan.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridBest {
    pub alpha: f64,
    pub d: f64,
    pub value: f64,
    /// Number of admissible cells evaluated.
    pub admissible_cells: usize,
}

/// One cell of a full grid evaluation; `value` is None outside the
/// admissible set.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridCell {
    pub alpha: f64,
    pub d: f64,
    pub value: Option<f64>,
}

/// Definiteness class of a symmetric 2x2 Hessian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DefinitenessClass {
    PosDef,
    NegDef,
    NonDef,
    Singular,
}

impl std::fmt::Display for DefinitenessClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DefinitenessClass::PosDef => "POS_DEF",
            DefinitenessClass::NegDef => "NEG_DEF",
            DefinitenessClass::NonDef => "NON_DEF",
            DefinitenessClass::Singular => "SINGULAR",
        })
    }
}

/// One cell of the feed-threshold Hessian map. `class` is None where the
/// cell is outside the admissible set (or its difference stencil is).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HessianMapCell {
    pub alpha: f64,
    pub d: f64,
    pub class: Option<DefinitenessClass>,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
}

impl SteadyObjective {
    fn check(self) -> Result<()> {
        if let SteadyObjective::PTheta(theta) = self {
            if !(0.0..=1.0).contains(&theta) {
                return Err(Error::Domain {
                    what: "theta",
                    value: theta,
                    bound: "weight must lie in [0, 1]".into(),
                });
            }
        }
        Ok(())
    }
}

/// Objective value at raw coordinates; None outside the admissible set.
pub(crate) fn objective_value(
    p: &ModelParams,
    objective: SteadyObjective,
    s_in: f64,
    alpha: f64,
    d: f64,
) -> Option<f64> {
    if !(alpha > 0.0 && alpha < 1.0 && d > 0.0) {
        return None;
    }
    let margin = s_in - psi_alpha_inv(p, alpha, d).ok()?;
    if margin <= 0.0 {
        return None;
    }
    let p_out = alpha * p.beta * p.gamma * d * margin / p.mu_inv(d).ok()?;
    Some(match objective {
        SteadyObjective::POut => p_out,
        SteadyObjective::PTheta(theta) => theta * p_out - (1.0 - theta) * d * s_in,
    })
}

fn barrier_value(
    p: &ModelParams,
    objective: SteadyObjective,
    s_in: f64,
    mu: f64,
    alpha: f64,
    d: f64,
) -> f64 {
    if !(alpha > 0.0 && alpha < 1.0 && d > 0.0) {
        return f64::INFINITY;
    }
    let cap = D_BOX_GUARD * d_upper_bound(p, alpha);
    if d >= cap {
        return f64::INFINITY;
    }
    let Ok(threshold) = psi_alpha_inv(p, alpha, d) else {
        return f64::INFINITY;
    };
    let margin = s_in - threshold;
    if margin <= 0.0 {
        return f64::INFINITY;
    }
    let value = match objective_value(p, objective, s_in, alpha, d) {
        Some(v) => v,
        None => return f64::INFINITY,
    };
    let barrier =
        -(margin.ln()) - alpha.ln() - (1.0 - alpha).ln() - d.ln() - (cap - d).ln();
    -value + mu * barrier
}

/// Standard Nelder-Mead on two variables, minimizing `f`. Returns the best
/// vertex, its value, iterations spent, and whether the simplex collapsed
/// below tolerance before the cap.
fn nelder_mead<F: Fn(f64, f64) -> f64>(
    f: F,
    start: [f64; 2],
    edges: [f64; 2],
    max_iters: usize,
) -> ([f64; 2], f64, usize, bool) {
    let mut xs = [
        start,
        [start[0] + edges[0], start[1]],
        [start[0], start[1] + edges[1]],
    ];
    let mut fs = xs.map(|x| f(x[0], x[1]));
    let mut iters = 0;
    let order = |xs: &mut [[f64; 2]; 3], fs: &mut [f64; 3]| {
        // Insertion sort of three entries by value.
        for i in 1..3 {
            let mut j = i;
            while j > 0 && fs[j] < fs[j - 1] {
                fs.swap(j, j - 1);
                xs.swap(j, j - 1);
                j -= 1;
            }
        }
    };
    order(&mut xs, &mut fs);
    while iters < max_iters {
        let diam = (0..3)
            .flat_map(|i| (i + 1..3).map(move |j| (i, j)))
            .map(|(i, j)| (xs[i][0] - xs[j][0]).abs().max((xs[i][1] - xs[j][1]).abs()))
            .fold(0.0_f64, f64::max);
        let spread = fs[2] - fs[0];
        if diam < 1e-9 || (spread.is_finite() && spread < 1e-13 * (1.0 + fs[0].abs())) {
            return (xs[0], fs[0], iters, true);
        }
        iters += 1;
        let centroid = [0.5 * (xs[0][0] + xs[1][0]), 0.5 * (xs[0][1] + xs[1][1])];
        let point = |t: f64| {
            [
                centroid[0] + t * (xs[2][0] - centroid[0]),
                centroid[1] + t * (xs[2][1] - centroid[1]),
            ]
        };
        let xr = point(-1.0);
        let fr = f(xr[0], xr[1]);
        if fr < fs[0] {
            let xe = point(-2.0);
            let fe = f(xe[0], xe[1]);
            if fe < fr {
                xs[2] = xe;
                fs[2] = fe;
            } else {
                xs[2] = xr;
                fs[2] = fr;
            }
        } else if fr < fs[1] {
            xs[2] = xr;
            fs[2] = fr;
        } else {
            let (xc, fc) = if fr < fs[2] {
                let x = point(-0.5);
                (x, f(x[0], x[1]))
            } else {
                let x = point(0.5);
                (x, f(x[0], x[1]))
            };
            if fc < fs[2].min(fr) {
                xs[2] = xc;
                fs[2] = fc;
            } else {
                for i in 1..3 {
                    xs[i] = [
                        0.5 * (xs[i][0] + xs[0][0]),
                        0.5 * (xs[i][1] + xs[0][1]),
                    ];
                    fs[i] = f(xs[i][0], xs[i][1]);
                }
            }
        }
        order(&mut xs, &mut fs);
    }
    (xs[0], fs[0], iters, false)
}

/// Pattern search on the raw objective: best of the four axis neighbors,
/// halving the step on failure. Descent-only, so it can only improve on
/// the simplex iterate.
fn compass_polish<G: Fn(f64, f64) -> Option<f64>>(
    g: G,
    start: [f64; 2],
    mut value: f64,
) -> ([f64; 2], f64, usize) {
    let mut x = start;
    let mut h = 1e-4;
    let mut iters = 0;
    while h > 1e-10 && iters < 400 {
        iters += 1;
        let mut best: Option<([f64; 2], f64)> = None;
        for cand in [
            [x[0] + h, x[1]],
            [x[0] - h, x[1]],
            [x[0], x[1] + h],
            [x[0], x[1] - h],
        ] {
            if let Some(v) = g(cand[0], cand[1]) {
                if v > value && best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((cand, v));
                }
            }
        }
        match best {
            Some((bx, bv)) => {
                x = bx;
                value = bv;
            }
            None => h *= 0.5,
        }
    }
    (x, value, iters)
}

/// Feasible default start: moderate light fraction, half the coexistence
/// dilution threshold.
fn default_start(p: &ModelParams, s_in: f64) -> Result<(f64, f64)> {
    let alpha = 0.7;
    Ok((alpha, 0.5 * psi_alpha(p, alpha, s_in)?))
}

/// Evenly spread feasible starts for multi-start agreement checks.
pub fn spread_starts(p: &ModelParams, s_in: f64, count: usize) -> Result<Vec<(f64, f64)>> {
    let mut starts = Vec::with_capacity(count);
    for i in 0..count {
        let alpha = 0.1 + 0.8 * i as f64 / (count.max(2) - 1) as f64;
        let frac = if i % 2 == 0 { 0.3 } else { 0.7 };
        starts.push((alpha, frac * psi_alpha(p, alpha, s_in)?));
    }
    Ok(starts)
}

/// Maximizes `objective` over the admissible set at fixed `s_in` from an
/// explicit starting point (useful for warm starts and multi-start runs).
pub fn maximize_from(
    p: &ModelParams,
    objective: SteadyObjective,
    s_in: f64,
    start: (f64, f64),
    opts: &OptimOptions,
) -> Result<OptimResult> {
    objective.check()?;
    check_s_in(s_in)?;
    if objective_value(p, objective, s_in, start.0, start.1).is_none() {
        return Err(Error::Precondition(format!(
            "starting point (alpha = {}, d = {}) is outside the admissible set",
            start.0, start.1
        )));
    }
    let mut x = [start.0, start.1];
    let mut total_iters = 0;
    for mu in BARRIER_SCHEDULE {
        let f = |a: f64, d: f64| barrier_value(p, objective, s_in, mu, a, d);
        let edges = [
            if x[0] + 0.05 < 1.0 { 0.05 } else { -0.05 },
            0.25 * x[1],
        ];
        let (xb, _fb, iters, converged) = nelder_mead(f, x, edges, opts.max_iters);
        total_iters += iters;
        if !converged {
            let best = objective_value(p, objective, s_in, xb[0], xb[1])
                .unwrap_or(f64::NEG_INFINITY);
            return Err(Error::NoConvergence {
                iterations: total_iters,
                alpha: xb[0],
                d: xb[1],
                best_value: best,
            });
        }
        x = xb;
    }
    let g = |a: f64, d: f64| {
        if d < D_BOX_GUARD * d_upper_bound(p, a) {
            objective_value(p, objective, s_in, a, d)
        } else {
            None
        }
    };
    let value0 = objective_value(p, objective, s_in, x[0], x[1]).ok_or_else(|| {
        Error::Numerical("simplex iterate left the admissible set".into())
    })?;
    let (x, value, polish_iters) = compass_polish(g, x, value0);
    total_iters += polish_iters;
    let oracle_gap = match opts.oracle_n {
        Some(n) => {
            let best = grid_oracle(p, objective, s_in, n, opts.threads)?;
            Some((value - best.value).abs())
        }
        None => None,
    };
    Ok(OptimResult {
        u_star: Control { alpha: x[0], d: x[1], s_in },
        value,
        iterations: total_iters,
        oracle_gap,
        converged: true,
        boundary_supremum: false,
    })
}

/// Maximizes the productivity d c* over the admissible set at fixed feed.
pub fn maximize_p_out(p: &ModelParams, s_in: f64, opts: &OptimOptions) -> Result<OptimResult> {
    check_s_in(s_in)?;
    maximize_from(p, SteadyObjective::POut, s_in, default_start(p, s_in)?, opts)
}

/// Maximizes the net profit for a given weight. For theta at or below the
/// breakeven weight the supremum is 0, approached as (alpha, d) tends to
/// (1, 0); that case returns the limit point flagged as a boundary
/// supremum instead of an interior maximizer.
pub fn maximize_p_theta(
    p: &ModelParams,
    theta: f64,
    s_in: f64,
    opts: &OptimOptions,
) -> Result<OptimResult> {
    SteadyObjective::PTheta(theta).check()?;
    check_s_in(s_in)?;
    if theta <= theta_breakeven(p) {
        return Ok(OptimResult {
            u_star: Control { alpha: 1.0, d: 0.0, s_in },
            value: 0.0,
            iterations: 0,
            oracle_gap: None,
            converged: true,
            boundary_supremum: true,
        });
    }
    maximize_from(p, SteadyObjective::PTheta(theta), s_in, default_start(p, s_in)?, opts)
}

/// Maximizes the yield over alpha at a fixed dilution rate and feed.
/// Returns (alpha_star, yield). The admissible alphas form an interval
/// because the feed threshold is convex in alpha; the yield is strictly
/// concave on it, so golden-section search converges to the unique
/// maximizer.
pub fn maximize_yield_alpha(p: &ModelParams, d: f64, s_in: f64) -> Result<(f64, f64)> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Domain {
            what: "d",
            value: d,
            bound: "dilution rate must be positive and finite".into(),
        });
    }
    check_s_in(s_in)?;
    let margin = |a: f64| match psi_alpha_inv(p, a, d) {
        Ok(t) => s_in - t,
        Err(_) => f64::NEG_INFINITY,
    };
    let lo = 1e-9;
    let hi = (1.0 - d / (p.phi_max * (1.0 - 1e-9))).min(1.0 - 1e-9);
    if hi <= lo || hi.is_nan() || d >= p.d_rho_bound() * (1.0 - 1e-11) {
        return Err(Error::Infeasible(format!(
            "no light fraction admits coexistence at d = {d}"
        )));
    }
    // The margin is concave in alpha, so its maximizer splits the interval
    // into two monotone halves for the endpoint bisections below.
    let (a_peak, m_peak, _) = golden_max(margin, lo, hi, 1e-10);
    if m_peak <= 0.0 {
        return Err(Error::Infeasible(format!(
            "no light fraction admits coexistence at d = {d}, s_in = {s_in}"
        )));
    }
    let a_lo = if margin(lo) > 0.0 { lo } else { bisect_sign(margin, lo, a_peak) };
    let a_hi = if margin(hi) > 0.0 { hi } else { bisect_sign(margin, hi, a_peak) };
    let yield_at = |a: f64| {
        let m = margin(a);
        if m.is_finite() {
            // mu_inv(d) is defined whenever the margin is finite.
            a * p.beta * p.gamma * m / (s_in * p.mu_inv(d).unwrap())
        } else {
            f64::NEG_INFINITY
        }
    };
    let (mut alpha_star, mut best, _) = golden_max(yield_at, a_lo, a_hi, 1e-10);
    // Near the flat top the golden-section comparisons are noise-limited,
    // which can leave the iterate ~1e-9 off the vertex. One parabolic step
    // recenters it well below the bracket width.
    let h = 1e-5_f64.min(0.25 * (a_hi - alpha_star)).min(0.25 * (alpha_star - a_lo));
    if h > 0.0 {
        let (yp, y0, ym) = (yield_at(alpha_star + h), best, yield_at(alpha_star - h));
        let slope = (yp - ym) / (2.0 * h);
        let curve = (yp - 2.0 * y0 + ym) / (h * h);
        if curve < 0.0 {
            let refined = (alpha_star - slope / curve).clamp(a_lo, a_hi);
            let v = yield_at(refined);
            if v >= best {
                alpha_star = refined;
                best = v;
            }
        }
    }
    Ok((alpha_star, best))
}

/// The unconstrained yield supremum sits at the corner (alpha, d) = (1, 0)
/// outside the open admissible set: run all light to the bacteria and
/// never dilute. The value is the batch limit beta gamma / q_min.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct YieldGlobalMax {
    pub alpha: f64,
    pub d: f64,
    pub value: f64,
    /// Always true: the argmax is a batch reactor, not a steady chemostat.
    pub batch_degenerate: bool,
}

/// Global argmax of the yield over the closure of the admissible set.
pub fn yield_global_argmax(p: &ModelParams) -> YieldGlobalMax {
    YieldGlobalMax {
        alpha: 1.0,
        d: 0.0,
        value: p.beta * p.gamma / p.q_min,
        batch_degenerate: true,
    }
}

fn check_grid_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Domain {
            what: "n",
            value: n as f64,
            bound: "grid resolution must be at least 2".into(),
        });
    }
    Ok(())
}

/// Exhaustive scan of an n-by-n grid over (alpha, d) in (0,1) x (0,
/// d_rho_bound) restricted to the admissible set. Interior nodes at
/// alpha_j = j/n, d_k = k d_rho / n, so doubling n refines the grid in
/// place (every coarse node is a fine node). Ties break toward smaller d,
/// then smaller alpha.
pub fn grid_oracle(
    p: &ModelParams,
    objective: SteadyObjective,
    s_in: f64,
    n: usize,
    threads: usize,
) -> Result<GridBest> {
    objective.check()?;
    check_s_in(s_in)?;
    check_grid_n(n)?;
    let d_cap = p.d_rho_bound();
    let rows = run_indexed(n - 1, threads, |row| {
        let d = (row + 1) as f64 * d_cap / n as f64;
        let mut best: Option<(f64, f64)> = None;
        let mut admissible = 0usize;
        for j in 1..n {
            let alpha = j as f64 / n as f64;
            if let Some(v) = objective_value(p, objective, s_in, alpha, d) {
                admissible += 1;
                if best.is_none_or(|(bv, _)| v > bv) {
                    best = Some((v, alpha));
                }
            }
        }
        (d, best, admissible)
    });
    let mut best: Option<GridBest> = None;
    let mut admissible_cells = 0usize;
    for (d, row_best, count) in rows {
        admissible_cells += count;
        if let Some((value, alpha)) = row_best {
            if best.is_none_or(|b| value > b.value) {
                best = Some(GridBest { alpha, d, value, admissible_cells: 0 });
            }
        }
    }
    match best {
        Some(mut b) => {
            b.admissible_cells = admissible_cells;
            Ok(b)
        }
        None => Err(Error::Infeasible(format!(
            "no admissible cell on the {n}x{n} grid at s_in = {s_in}"
        ))),
    }
}

/// Full grid evaluation (same axes as [`grid_oracle`]), for contour
/// export. Cells outside the admissible set carry no value.
pub fn grid_values(
    p: &ModelParams,
    objective: SteadyObjective,
    s_in: f64,
    n: usize,
    threads: usize,
) -> Result<Vec<GridCell>> {
    objective.check()?;
    check_s_in(s_in)?;
    check_grid_n(n)?;
    let d_cap = p.d_rho_bound();
    let rows = run_indexed(n - 1, threads, |row| {
        let d = (row + 1) as f64 * d_cap / n as f64;
        (1..n)
            .map(|j| {
                let alpha = j as f64 / n as f64;
                GridCell { alpha, d, value: objective_value(p, objective, s_in, alpha, d) }
            })
            .collect::<Vec<_>>()
    });
    Ok(rows.into_iter().flatten().collect())
}

/// Refined central-difference Hessian of the feed threshold g0(alpha, d) =
/// psi_alpha_inv(d). Steps are 1e-5 relative to each coordinate and the
/// h vs h/2 estimates are Richardson-combined. Returns the raw (not yet
/// symmetrized) matrix; the off-diagonal entries differ only by rounding.
pub fn hessian_g0(p: &ModelParams, alpha: f64, d: f64) -> Result<[[f64; 2]; 2]> {
    let g = |a: f64, dd: f64| psi_alpha_inv(p, a, dd);
    let at = |ha: f64, hd: f64| -> Result<[[f64; 2]; 2]> {
        let f00 = g(alpha, d)?;
        let fpa = g(alpha + ha, d)?;
        let fma = g(alpha - ha, d)?;
        let fpd = g(alpha, d + hd)?;
        let fmd = g(alpha, d - hd)?;
        let fpp = g(alpha + ha, d + hd)?;
        let fpm = g(alpha + ha, d - hd)?;
        let fmp = g(alpha - ha, d + hd)?;
        let fmm = g(alpha - ha, d - hd)?;
        let haa = (fpa - 2.0 * f00 + fma) / (ha * ha);
        let hdd = (fpd - 2.0 * f00 + fmd) / (hd * hd);
        let had = ((fpp - fpm) / (2.0 * hd) - (fmp - fmm) / (2.0 * hd)) / (2.0 * ha);
        let hda = ((fpp - fmp) / (2.0 * ha) - (fpm - fmm) / (2.0 * ha)) / (2.0 * hd);
        Ok([[haa, had], [hda, hdd]])
    };
    let ha = 1e-5 * alpha;
    let hd = 1e-5 * d;
    let coarse = at(ha, hd)?;
    let fine = at(0.5 * ha, 0.5 * hd)?;
    let mut h = [[0.0; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            h[r][c] = (4.0 * fine[r][c] - coarse[r][c]) / 3.0;
        }
    }
    Ok(h)
}

/// Definiteness map of the feed-threshold Hessian over the oracle grid at
/// a fixed feed. Cells outside the admissible set, or whose difference
/// stencil leaves it, are returned with no classification.
pub fn hessian_map_g0(
    p: &ModelParams,
    s_in: f64,
    n: usize,
    threads: usize,
) -> Result<Vec<HessianMapCell>> {
    check_s_in(s_in)?;
    check_grid_n(n)?;
    let d_cap = p.d_rho_bound();
    let rows = run_indexed(n - 1, threads, |row| {
        let d = (row + 1) as f64 * d_cap / n as f64;
        (1..n)
            .map(|j| {
                let alpha = j as f64 / n as f64;
                let absent = HessianMapCell {
                    alpha,
                    d,
                    class: None,
                    lambda_min: None,
                    lambda_max: None,
                };
                if !crate::objectives::in_u_raw(p, alpha, d, s_in) {
                    return absent;
                }
                let Ok(h) = hessian_g0(p, alpha, d) else {
                    return absent;
                };
                let (lo, hi) = sym_eigenvalues(h);
                HessianMapCell {
                    alpha,
                    d,
                    class: Some(classify_definiteness(lo, hi)),
                    lambda_min: Some(lo),
                    lambda_max: Some(hi),
                }
            })
            .collect::<Vec<_>>()
    });
    Ok(rows.into_iter().flatten().collect())
}

/// Eigenvalues of a 2x2 matrix after symmetrizing the off-diagonal pair,
/// smallest first.
fn sym_eigenvalues(h: [[f64; 2]; 2]) -> (f64, f64) {
    let b = 0.5 * (h[0][1] + h[1][0]);
    let half_tr = 0.5 * (h[0][0] + h[1][1]);
    let r = (0.25 * (h[0][0] - h[1][1]) * (h[0][0] - h[1][1]) + b * b).sqrt();
    (half_tr - r, half_tr + r)
}

fn classify_definiteness(lo: f64, hi: f64) -> DefinitenessClass {
    const THR: f64 = 1e-9;
    if lo > THR && hi > THR {
        DefinitenessClass::PosDef
    } else if lo < -THR && hi < -THR {
        DefinitenessClass::NegDef
    } else if lo < -THR && hi > THR {
        DefinitenessClass::NonDef
    } else {
        DefinitenessClass::Singular
    }
}

/// Golden-section maximization of a unimodal function on [a, b] down to an
/// interval of width `tol`.
fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64, usize) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iters = 0;
    while b - a > tol {
        iters += 1;
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x), iters)
}

/// Bisection of a sign change of `f` between an infeasible endpoint and a
/// point with f > 0; returns a point where f > 0, within 1e-12 of the
/// zero crossing.
fn bisect_sign<F: Fn(f64) -> f64>(f: F, mut bad: f64, mut good: f64) -> f64 {
    while (bad - good).abs() > 1e-12 {
        let mid = 0.5 * (bad + good);
        if f(mid) > 0.0 {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}

fn check_s_in(s_in: f64) -> Result<()> {
    if !(s_in > 0.0 && s_in.is_finite()) {
        return Err(Error::Domain {
            what: "s_in",
            value: s_in,
            bound: "feed concentration must be positive and finite".into(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::in_u_raw;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p() -> ModelParams {
        ModelParams::default()
    }

    fn opts() -> OptimOptions {
        OptimOptions::default()
    }

    #[test]
    fn productivity_maximum_reference_points() {
        let p = p();
        for (s_in, alpha, d, value) in [
            (0.5, 0.825238710660, 0.440469567423, 0.33085131944661544),
            (1.0, 0.852586864398, 0.457343505579, 0.718_704_599_884_673_2),
            (2.0, 0.872902118558, 0.467827822767, 1.5202269890899747),
        ] {
            let r = maximize_p_out(&p, s_in, &opts()).unwrap();
            assert!((r.value - value).abs() < 1e-9, "value at s_in = {s_in}: {}", r.value);
            assert!((r.u_star.alpha - alpha).abs() < 1e-6, "alpha*: {}", r.u_star.alpha);
            assert!((r.u_star.d - d).abs() < 1e-6, "d*: {}", r.u_star.d);
            assert!(r.converged && !r.boundary_supremum);
            let threshold = psi_alpha_inv(&p, r.u_star.alpha, r.u_star.d).unwrap();
            assert!(threshold < s_in - 1e-9, "maximizer strictly inside the set");
        }
    }

    #[test]
    fn productivity_maximum_grows_with_feed() {
        let p = p();
        let v1 = maximize_p_out(&p, 1.0, &opts()).unwrap().value;
        let v2 = maximize_p_out(&p, 1.5, &opts()).unwrap().value;
        let v3 = maximize_p_out(&p, 2.0, &opts()).unwrap().value;
        assert!(v1 < v2 && v2 < v3, "optimal productivity must grow with feed: {v1} {v2} {v3}");
    }

    #[test]
    fn maximum_dominates_random_admissible_points() {
        let p = p();
        let r = maximize_p_out(&p, 1.0, &opts()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let mut tried = 0;
        while tried < 10_000 {
            let alpha = rng.gen::<f64>();
            let d = rng.gen::<f64>() * p.d_rho_bound();
            match objective_value(&p, SteadyObjective::POut, 1.0, alpha, d) {
                Some(v) => {
                    assert!(v <= r.value + 1e-12, "random point beats the maximizer: {v}");
                    tried += 1;
                }
                None => continue,
            }
        }
    }

    #[test]
    fn interior_gradient_vanishes_at_the_maximizer() {
        let p = p();
        let r = maximize_p_out(&p, 1.0, &opts()).unwrap();
        let logf = |a: f64, d: f64| {
            objective_value(&p, SteadyObjective::POut, 1.0, a, d).unwrap().ln()
        };
        let h = 1e-5;
        let ga = (logf(r.u_star.alpha + h, r.u_star.d) - logf(r.u_star.alpha - h, r.u_star.d))
            / (2.0 * h);
        let gd = (logf(r.u_star.alpha, r.u_star.d + h) - logf(r.u_star.alpha, r.u_star.d - h))
            / (2.0 * h);
        assert!(
            ga.abs().max(gd.abs()) < 1e-6,
            "log-productivity gradient at the maximizer: ({ga}, {gd})"
        );
    }

    #[test]
    fn multistart_runs_agree() {
        let p = p();
        let starts = spread_starts(&p, 1.0, 3).unwrap();
        let runs: Vec<_> = starts
            .iter()
            .map(|&s| maximize_from(&p, SteadyObjective::POut, 1.0, s, &opts()).unwrap())
            .collect();
        for r in &runs[1..] {
            assert!(
                (r.u_star.alpha - runs[0].u_star.alpha).abs() < 1e-5
                    && (r.u_star.d - runs[0].u_star.d).abs() < 1e-5,
                "starts disagree: {:?} vs {:?}",
                r.u_star,
                runs[0].u_star
            );
        }
    }

    #[test]
    fn net_profit_reference_points() {
        let p = p();
        for (theta, alpha, d, value) in [
            (0.3, 0.9407206844, 0.1209888439, 0.020_996_330_046_069_28),
            (0.5, 0.8914906483, 0.2967605554, 0.17196811365605186),
            (0.7, 0.8696313814, 0.3851491961, 0.37685434753197),
            (0.9, 0.8570696559, 0.4381029978, 0.602_064_972_859_122_6),
        ] {
            let r = maximize_p_theta(&p, theta, 1.0, &opts()).unwrap();
            assert!((r.value - value).abs() < 1e-9, "value at theta = {theta}: {}", r.value);
            assert!((r.u_star.alpha - alpha).abs() < 1e-6, "alpha* at theta = {theta}");
            assert!((r.u_star.d - d).abs() < 1e-6, "d* at theta = {theta}");
            assert!(!r.boundary_supremum);
        }
    }

    #[test]
    fn net_profit_at_full_weight_is_the_productivity_problem() {
        let p = p();
        let a = maximize_p_theta(&p, 1.0, 1.0, &opts()).unwrap();
        let b = maximize_p_out(&p, 1.0, &opts()).unwrap();
        assert!((a.u_star.alpha - b.u_star.alpha).abs() < 1e-5);
        assert!((a.u_star.d - b.u_star.d).abs() < 1e-5);
        assert!((a.value - b.value).abs() < 1e-10);
    }

    #[test]
    fn net_profit_below_breakeven_is_a_boundary_supremum() {
        let p = p();
        for theta in [0.0, 0.1, theta_breakeven(&p)] {
            let r = maximize_p_theta(&p, theta, 1.0, &opts()).unwrap();
            assert!(r.boundary_supremum, "theta = {theta} must be flagged");
            assert_eq!(r.value, 0.0);
            assert_eq!((r.u_star.alpha, r.u_star.d), (1.0, 0.0));
        }
        let r = maximize_p_theta(&p, 0.25, 1.0, &opts()).unwrap();
        assert!(!r.boundary_supremum, "just above breakeven the maximizer is interior");
        assert!(r.value > 0.0);
    }

    #[test]
    fn oracle_gap_is_small_when_requested() {
        let p = p();
        let o = OptimOptions { oracle_n: Some(200), ..opts() };
        let r = maximize_p_out(&p, 1.0, &o).unwrap();
        let gap = r.oracle_gap.unwrap();
        assert!(gap < 1e-4, "200x200 oracle gap: {gap}");
        let best = grid_oracle(&p, SteadyObjective::POut, 1.0, 200, 1).unwrap();
        assert!(best.value <= r.value + 1e-9, "grid cannot beat the smooth maximum");
    }

    #[test]
    fn grid_refinement_never_loses_ground() {
        let p = p();
        let b50 = grid_oracle(&p, SteadyObjective::POut, 1.0, 50, 1).unwrap();
        let b100 = grid_oracle(&p, SteadyObjective::POut, 1.0, 100, 1).unwrap();
        let b200 = grid_oracle(&p, SteadyObjective::POut, 1.0, 200, 1).unwrap();
        assert!(b100.value >= b50.value, "doubling keeps every coarse node");
        assert!(b200.value >= b100.value);
    }

    #[test]
    fn grid_oracle_is_thread_invariant_and_deterministic() {
        let p = p();
        let a = grid_oracle(&p, SteadyObjective::PTheta(0.6), 1.0, 120, 1).unwrap();
        for threads in [2, 5] {
            let b = grid_oracle(&p, SteadyObjective::PTheta(0.6), 1.0, 120, threads).unwrap();
            assert_eq!(a.value.to_bits(), b.value.to_bits());
            assert_eq!(a.alpha.to_bits(), b.alpha.to_bits());
            assert_eq!(a.d.to_bits(), b.d.to_bits());
            assert_eq!(a.admissible_cells, b.admissible_cells);
        }
    }

    #[test]
    fn grid_oracle_rejects_an_empty_grid() {
        let p = p();
        let err = grid_oracle(&p, SteadyObjective::POut, 1e-6, 10, 1).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)), "got {err}");
    }

    #[test]
    fn grid_values_cover_the_full_grid() {
        let p = p();
        let cells = grid_values(&p, SteadyObjective::POut, 1.0, 30, 2).unwrap();
        assert_eq!(cells.len(), 29 * 29);
        let filled = cells.iter().filter(|c| c.value.is_some()).count();
        let best = grid_oracle(&p, SteadyObjective::POut, 1.0, 30, 1).unwrap();
        assert_eq!(filled, best.admissible_cells);
    }

    #[test]
    fn yield_in_alpha_reference_points() {
        let p = p();
        for (d, alpha, value) in [
            (0.1, 0.947588775726, 3.014040478218706),
            (0.3, 0.890665894351, 2.146_335_579_234_74),
            (0.5, 0.842785720555, 1.427_152_861_395_964),
        ] {
            let (a, v) = maximize_yield_alpha(&p, d, 1.0).unwrap();
            assert!((a - alpha).abs() < 1e-6, "alpha* at d = {d}: {a}");
            assert!((v - value).abs() < 1e-10, "yield at d = {d}: {v}");
            assert!(v < p.beta * p.gamma / p.q_min, "below the batch limit");
        }
    }

    #[test]
    fn yield_in_alpha_matches_a_fine_scan() {
        let p = p();
        let (a_star, v_star) = maximize_yield_alpha(&p, 0.5, 1.0).unwrap();
        let mut best = (f64::NEG_INFINITY, 0.0);
        let mut k = 1;
        while (k as f64) * 1e-5 < 1.0 {
            let a = k as f64 * 1e-5;
            if in_u_raw(&p, a, 0.5, 1.0) {
                let m = 1.0 - psi_alpha_inv(&p, a, 0.5).unwrap();
                let v = a * p.beta * p.gamma * m / p.mu_inv(0.5).unwrap();
                if v > best.0 {
                    best = (v, a);
                }
            }
            k += 1;
        }
        assert!((best.1 - a_star).abs() <= 1e-5, "scan argmax {} vs {a_star}", best.1);
        assert!(v_star >= best.0 - 1e-12, "scan must not beat the solver");
    }

    #[test]
    fn yield_in_alpha_is_a_local_maximum_with_flat_gradient() {
        let p = p();
        let (a_star, v_star) = maximize_yield_alpha(&p, 0.3, 1.0).unwrap();
        let yield_at = |a: f64| {
            let m = 1.0 - psi_alpha_inv(&p, a, 0.3).unwrap();
            a * p.beta * p.gamma * m / p.mu_inv(0.3).unwrap()
        };
        assert!(v_star >= yield_at(a_star + 0.01));
        assert!(v_star >= yield_at(a_star - 0.01));
        let h = 1e-6;
        let grad = (yield_at(a_star + h) - yield_at(a_star - h)) / (2.0 * h);
        assert!(grad.abs() < 1e-7, "yield slope at alpha*: {grad}");
    }

    #[test]
    fn yield_in_alpha_low_dilution_limit() {
        let p = p();
        let (a_star, v) = maximize_yield_alpha(&p, 1e-8, 1.0).unwrap();
        assert!(a_star > 0.9999, "alpha* tends to 1, got {a_star}");
        assert!((v - 3.6666666666666665).abs() < 1e-3, "yield tends to the batch limit, got {v}");
    }

    #[test]
    fn yield_in_alpha_infeasible_dilutions() {
        let p = p();
        assert!(matches!(maximize_yield_alpha(&p, 0.93, 1.0), Err(Error::Infeasible(_))));
        assert!(matches!(maximize_yield_alpha(&p, 0.9, 0.01), Err(Error::Infeasible(_))));
    }

    #[test]
    fn yield_global_argmax_is_the_batch_corner() {
        let p = p();
        let g = yield_global_argmax(&p);
        assert_eq!((g.alpha, g.d), (1.0, 0.0));
        assert!((g.value - 3.6666666666666665).abs() < 1e-15);
        assert!(g.batch_degenerate);
        for d in [0.1, 0.3, 0.5] {
            let (_, v) = maximize_yield_alpha(&p, d, 1.0).unwrap();
            assert!(g.value > v, "batch corner dominates d = {d}");
        }
    }

    #[test]
    fn hessian_map_finds_both_curvature_classes() {
        let p = p();
        let map = hessian_map_g0(&p, 1.0, 40, 2).unwrap();
        assert_eq!(map.len(), 39 * 39);
        let non_def = map
            .iter()
            .filter(|c| c.class == Some(DefinitenessClass::NonDef))
            .count();
        let pos_def = map
            .iter()
            .filter(|c| c.class == Some(DefinitenessClass::PosDef))
            .count();
        assert!(non_def > 0, "expected a non-definite region");
        assert!(pos_def > 0, "expected a definite region");
        let admissible = map.iter().filter(|c| c.class.is_some()).count();
        assert!(
            pos_def + non_def >= admissible * 9 / 10,
            "most cells classify cleanly: {pos_def} + {non_def} of {admissible}"
        );
    }

    #[test]
    fn hessian_cross_terms_agree_and_threshold_rises_with_dilution() {
        let p = p();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let alpha = 0.05 + 0.9 * rng.gen::<f64>();
            let d = 0.02 + 0.85 * rng.gen::<f64>() * p.d_rho_bound();
            if !in_u_raw(&p, alpha, d, 1.0) {
                continue;
            }
            let h = hessian_g0(&p, alpha, d).unwrap();
            assert!(
                (h[0][1] - h[1][0]).abs() < 1e-6,
                "cross-derivative mismatch at ({alpha}, {d}): {} vs {}",
                h[0][1],
                h[1][0]
            );
            let step = 1e-6;
            let slope = (psi_alpha_inv(&p, alpha, d + step).unwrap()
                - psi_alpha_inv(&p, alpha, d - step).unwrap())
                / (2.0 * step);
            assert!(slope > 0.0, "feed threshold must rise with dilution");
        }
    }

    #[test]
    fn hessian_map_is_deterministic_across_runs_and_threads() {
        let p = p();
        let a = hessian_map_g0(&p, 1.0, 25, 1).unwrap();
        let b = hessian_map_g0(&p, 1.0, 25, 1).unwrap();
        let c = hessian_map_g0(&p, 1.0, 25, 4).unwrap();
        for ((x, y), z) in a.iter().zip(&b).zip(&c) {
            assert_eq!(x.class, y.class);
            assert_eq!(x.class, z.class);
            match (x.lambda_min, z.lambda_min) {
                (Some(u), Some(v)) => assert_eq!(u.to_bits(), v.to_bits()),
                (None, None) => {}
                _ => panic!("admissibility flickered between runs"),
            }
        }
    }

    #[test]
    fn infeasible_start_is_rejected() {
        let p = p();
        let err =
            maximize_from(&p, SteadyObjective::POut, 1.0, (0.5, 0.92), &opts()).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)), "got {err}");
    }
}
