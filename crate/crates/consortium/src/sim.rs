//! Adaptive time integration of the chemostat dynamics, used to
//! corroborate the closed-form equilibria and their stability labels.
//!
//! The stepper is an embedded Dormand-Prince 5(4) pair with PI step-size
//! control on a scaled RMS error norm. The dynamics are non-stiff for the
//! calibrated parameters at moderate dilution, so boundary handling is a
//! projection (clipping roundoff-level excursions back onto the state
//! space) rather than a stiff solver.

use crate::equilibria::{equilibrium_x0, equilibrium_x10, equilibrium_x11, Regime};
use crate::model::{ode_rhs_raw, Control, State};
use crate::{Error, ModelParams, Result};
use serde::{Deserialize, Serialize};

/// Why an integration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TerminalEvent {
    /// The residual dropped below the requested threshold.
    Converged,
    /// The time horizon was reached.
    MaxTime,
    /// The controller could not keep the local error in check above the
    /// minimum step (or ran out of its step budget).
    StepFailure,
}

impl std::fmt::Display for TerminalEvent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TerminalEvent::Converged => "CONVERGED",
            TerminalEvent::MaxTime => "MAX_TIME",
            TerminalEvent::StepFailure => "STEP_FAILURE",
        })
    }
}

/// A stored solution path. Times start at 0 and increase strictly; one
/// state per accepted step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub control: Control,
    pub terminal_event: TerminalEvent,
}

/// Step-control settings.
#[derive(Debug, Clone, Copy)]
pub struct IntegrateOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            rtol: 1e-8,
            atol: 1e-10,
            h_min: 1e-10,
            h_max: 10.0,
            max_steps: 1_000_000,
        }
    }
}

/// Where a convergence probe ended up.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub terminal_state: State,
    pub terminal_time: f64,
    /// Infinity norm of the vector field at the terminal state.
    pub residual_inf: f64,
    /// Attributed attractor, None when the probe is inconclusive.
    pub regime: Option<Regime>,
    pub inconclusive_reason: Option<String>,
    /// True when the start violates e > 0, c > 0, the domain on which the
    /// stability table speaks; the probe still runs and reports.
    pub outside_stability_hypotheses: bool,
}

// Dormand-Prince 5(4) tableau. The last row of A equals the 5th-order
// weights, so the first stage of the next step reuses the last evaluation
// (FSAL).
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

/// Error weights: 5th-order minus the embedded 4th-order solution.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One embedded step from `x` with size `h`. Returns the 5th-order
/// solution, its vector field (the FSAL stage), and the scaled error
/// norm.
fn dopri_step(
    p: &ModelParams,
    u: &Control,
    x: &[f64; 5],
    k1: &[f64; 5],
    h: f64,
    rtol: f64,
    atol: f64,
) -> ([f64; 5], [f64; 5], f64) {
    let mut k = [[0.0; 5]; 7];
    k[0] = *k1;
    for stage in 0..6 {
        let mut y = *x;
        for (weight, ki) in A[stage].iter().zip(&k) {
            if *weight != 0.0 {
                for i in 0..5 {
                    y[i] += h * weight * ki[i];
                }
            }
        }
        k[stage + 1] = ode_rhs_raw(p, &y, u);
    }
    let mut x_new = *x;
    for (weight, ki) in A[5].iter().zip(&k) {
        if *weight != 0.0 {
            for i in 0..5 {
                x_new[i] += h * weight * ki[i];
            }
        }
    }
    let mut err_sq = 0.0;
    for i in 0..5 {
        let mut e = 0.0;
        for (weight, ki) in E.iter().zip(&k) {
            e += weight * ki[i];
        }
        let sc = atol + rtol * x[i].abs().max(x_new[i].abs());
        let r = h * e / sc;
        err_sq += r * r;
    }
    (x_new, k[6], (err_sq / 5.0).sqrt())
}

/// Clips roundoff-level excursions below the state-space boundary back
/// onto it. Returns true when anything moved.
fn project(p: &ModelParams, x: &mut [f64; 5]) -> bool {
    let mut moved = false;
    for (i, v) in x.iter_mut().enumerate() {
        let floor = if i == 3 { p.q_min } else { 0.0 };
        if *v < floor && *v >= floor - 1e-12 {
            *v = floor;
            moved = true;
        }
    }
    moved
}

fn initial_step(x: &[f64; 5], f: &[f64; 5], t_end: f64, opts: &IntegrateOptions) -> f64 {
    let scaled_rms = |v: &[f64; 5]| {
        let mut s = 0.0;
        for i in 0..5 {
            let sc = opts.atol + opts.rtol * x[i].abs();
            s += (v[i] / sc) * (v[i] / sc);
        }
        (s / 5.0).sqrt()
    };
    let d0 = scaled_rms(x);
    let d1 = scaled_rms(f);
    let guess = if d1 > 1e-10 { 0.01 * d0 / d1 } else { 1e-6 };
    guess.clamp(opts.h_min, opts.h_max.min(t_end))
}

fn check_inputs(
    p: &ModelParams,
    x0: &State,
    u: &Control,
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<()> {
    // The dynamics are defined on the closed control box, wider than the
    // admissible set of the steady-state analysis: boundary runs (alpha 0
    // or 1, d = 0) are legitimate simulations.
    if !((0.0..=1.0).contains(&u.alpha)
        && u.d >= 0.0
        && u.d.is_finite()
        && u.s_in >= 0.0
        && u.s_in.is_finite())
    {
        return Err(Error::Precondition(format!(
            "control {u:?} is outside the closed control box"
        )));
    }
    if !x0.in_state_space(p, 0.0) {
        return Err(Error::Precondition(format!(
            "initial state {x0:?} is outside the state space"
        )));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::Domain {
            what: "t_end",
            value: t_end,
            bound: "horizon must be positive and finite".into(),
        });
    }
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(Error::Domain {
            what: "tol",
            value: opts.rtol.min(opts.atol),
            bound: "tolerances must be positive".into(),
        });
    }
    Ok(())
}

fn run(
    p: &ModelParams,
    x0: &State,
    u: &Control,
    t_end: f64,
    opts: &IntegrateOptions,
    stop_tol: Option<f64>,
) -> Result<Trajectory> {
    check_inputs(p, x0, u, t_end, opts)?;
    let mut x = x0.to_array();
    let mut k1 = ode_rhs_raw(p, &x, u);
    let mut t = 0.0;
    let mut times = vec![0.0];
    let mut states = vec![*x0];
    let mut h = initial_step(&x, &k1, t_end, opts);
    let mut err_prev: f64 = 1e-4;
    let mut rejected = false;
    let mut event = TerminalEvent::MaxTime;
    let inf_norm = |v: &[f64; 5]| v.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    if let Some(tol) = stop_tol {
        if inf_norm(&k1) < tol {
            return Ok(Trajectory {
                times,
                states,
                control: *u,
                terminal_event: TerminalEvent::Converged,
            });
        }
    }
    for _ in 0..opts.max_steps {
        if t >= t_end {
            break;
        }
        h = h.min(t_end - t);
        let (mut x_new, k_last, err) = dopri_step(p, u, &x, &k1, h, opts.rtol, opts.atol);
        if err <= 1.0 {
            t += h;
            let clipped = project(p, &mut x_new);
            x = x_new;
            k1 = if clipped { ode_rhs_raw(p, &x, u) } else { k_last };
            times.push(t);
            states.push(State::from_array(x));
            let fac = (0.9 * err.max(1e-12).powf(-0.14) * err_prev.powf(0.08))
                .clamp(0.2, 5.0);
            let fac = if rejected { fac.min(1.0) } else { fac };
            h = (h * fac).clamp(opts.h_min, opts.h_max);
            err_prev = err.max(1e-4);
            rejected = false;
            if let Some(tol) = stop_tol {
                if inf_norm(&k1) < tol {
                    event = TerminalEvent::Converged;
                    break;
                }
            }
        } else {
            let fac = (0.9 * err.powf(-0.2)).max(0.2);
            let h_new = h * fac;
            if h_new < opts.h_min {
                event = TerminalEvent::StepFailure;
                break;
            }
            h = h_new;
            rejected = true;
        }
    }
    if event == TerminalEvent::MaxTime && t < t_end * (1.0 - 1e-12) {
        // Step budget exhausted short of the horizon.
        event = TerminalEvent::StepFailure;
    }
    Ok(Trajectory { times, states, control: *u, terminal_event: event })
}

/// Integrates the dynamics from `x0` under control `u` until `t_end`.
/// A step underflow ends the run early with a partial trajectory flagged
/// STEP_FAILURE rather than an error.
pub fn integrate(
    p: &ModelParams,
    x0: &State,
    u: &Control,
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    run(p, x0, u, t_end, opts, None)
}

/// Same as [`integrate`], but stops as soon as the max-norm of the vector
/// field drops below `stop_tol`, flagging the trajectory CONVERGED. The
/// reachable residual floor of [`converge_to_equilibrium`] applies here
/// too.
pub fn integrate_with_stop(
    p: &ModelParams,
    x0: &State,
    u: &Control,
    t_end: f64,
    stop_tol: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    if stop_tol <= 0.0 || stop_tol.is_nan() {
        return Err(Error::Domain {
            what: "stop_tol",
            value: stop_tol,
            bound: "residual threshold must be positive".into(),
        });
    }
    run(p, x0, u, t_end, opts, Some(stop_tol))
}

/// Fixed-step variant of the same scheme (no error control), for order
/// studies.
pub fn integrate_fixed(
    p: &ModelParams,
    x0: &State,
    u: &Control,
    t_end: f64,
    h: f64,
) -> Result<Trajectory> {
    let opts = IntegrateOptions::default();
    check_inputs(p, x0, u, t_end, &opts)?;
    if !(h > 0.0 && h <= t_end) {
        return Err(Error::Domain {
            what: "h",
            value: h,
            bound: "fixed step must lie in (0, t_end]".into(),
        });
    }
    let mut x = x0.to_array();
    let mut k1 = ode_rhs_raw(p, &x, u);
    let mut t = 0.0;
    let mut times = vec![0.0];
    let mut states = vec![*x0];
    while t < t_end * (1.0 - 1e-12) {
        let step = h.min(t_end - t);
        let (mut x_new, k_last, _) = dopri_step(p, u, &x, &k1, step, 1.0, 1.0);
        t += step;
        let clipped = project(p, &mut x_new);
        x = x_new;
        k1 = if clipped { ode_rhs_raw(p, &x, u) } else { k_last };
        times.push(t);
        states.push(State::from_array(x));
    }
    Ok(Trajectory {
        times,
        states,
        control: *u,
        terminal_event: TerminalEvent::MaxTime,
    })
}

/// Integrates until the vector field shrinks below `tol` (or `t_max`
/// runs out) and attributes the terminal state to the nearest closed-form
/// equilibrium in a floored relative norm. Ambiguous attributions and
/// timed-out runs come back inconclusive rather than failing.
///
/// The reachable residual is floored by how tightly the integrator tracks
/// the attractor, roughly rtol times the state scale; ask for `tol` an
/// order of magnitude above that (1e-7 at the default tolerances).
pub fn converge_to_equilibrium(
    p: &ModelParams,
    x0: &State,
    u: &Control,
    tol: f64,
    t_max: f64,
    opts: &IntegrateOptions,
) -> Result<ConvergenceReport> {
    if tol <= 0.0 || tol.is_nan() {
        return Err(Error::Domain {
            what: "tol",
            value: tol,
            bound: "residual threshold must be positive".into(),
        });
    }
    let outside = x0.e == 0.0 || x0.c == 0.0;
    let traj = run(p, x0, u, t_max, opts, Some(tol))?;
    let terminal_state = *traj.states.last().expect("trajectory holds the initial state");
    let terminal_time = *traj.times.last().unwrap();
    let residual_inf = ode_rhs_raw(p, &terminal_state.to_array(), u)
        .iter()
        .fold(0.0_f64, |m, c| m.max(c.abs()));
    let mut report = ConvergenceReport {
        terminal_state,
        terminal_time,
        residual_inf,
        regime: None,
        inconclusive_reason: None,
        outside_stability_hypotheses: outside,
    };
    match traj.terminal_event {
        TerminalEvent::Converged => {}
        TerminalEvent::MaxTime => {
            report.inconclusive_reason =
                Some(format!("residual {residual_inf:e} still above {tol:e} at t = {t_max}"));
            return Ok(report);
        }
        TerminalEvent::StepFailure => {
            report.inconclusive_reason =
                Some(format!("step control failed at t = {terminal_time}"));
            return Ok(report);
        }
    }
    // Candidate attractors that exist at this control.
    let mut candidates: Vec<(Regime, State)> =
        vec![(Regime::TotalWashoutGas, equilibrium_x0(p, u)?)];
    if let Ok(x10) = equilibrium_x10(p, u) {
        candidates.push((Regime::AlgalWashoutGas, x10));
    }
    if let Ok(x11) = equilibrium_x11(p, u) {
        candidates.push((Regime::CoexistenceGas, x11));
    }
    let mut scored: Vec<(f64, Regime)> = candidates
        .iter()
        .map(|(regime, eq)| (relative_distance(&terminal_state, eq), *regime))
        .collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let (nearest, regime) = scored[0];
    if let Some((runner_up, _)) = scored.get(1) {
        if *runner_up < 2.0 * nearest {
            report.inconclusive_reason = Some(format!(
                "ambiguous attribution: distances {nearest:e} and {runner_up:e}"
            ));
            return Ok(report);
        }
    }
    report.regime = Some(regime);
    Ok(report)
}

/// Componentwise relative distance with a floor on the scale, so that
/// near-zero equilibrium components do not blow the quotient up.
fn relative_distance(x: &State, eq: &State) -> f64 {
    let xa = x.to_array();
    let ea = eq.to_array();
    let mut worst = 0.0_f64;
    for i in 0..5 {
        worst = worst.max((xa[i] - ea[i]).abs() / ea[i].abs().max(1e-3));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::classify;

    fn p() -> ModelParams {
        ModelParams::default()
    }

    fn u(alpha: f64, d: f64, s_in: f64) -> Control {
        Control { alpha, d, s_in }
    }

    fn generic_start() -> State {
        State { s: 0.5, e: 0.2, v: 0.5, q: 3.0, c: 0.2 }
    }

    fn max_gap(x: &State, y: &State) -> f64 {
        let (a, b) = (x.to_array(), y.to_array());
        (0..5).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn equilibrium_persists_under_integration() {
        let p = p();
        let control = u(0.5, 0.3, 1.0);
        let x11 = equilibrium_x11(&p, &control).unwrap();
        let traj = integrate(&p, &x11, &control, 100.0, &IntegrateOptions::default()).unwrap();
        assert_eq!(traj.terminal_event, TerminalEvent::MaxTime);
        for state in &traj.states {
            assert!(max_gap(state, &x11) < 1e-8, "drift off the equilibrium");
        }
    }

    #[test]
    fn perturbed_coexistence_state_returns() {
        let p = p();
        let control = u(0.5, 0.3, 1.0);
        let x11 = equilibrium_x11(&p, &control).unwrap();
        let start = State {
            s: x11.s * 1.01,
            e: x11.e * 1.01,
            v: x11.v * 1.01,
            q: x11.q * 1.01,
            c: x11.c * 1.01,
        };
        let traj = integrate(&p, &start, &control, 500.0, &IntegrateOptions::default()).unwrap();
        let terminal = traj.states.last().unwrap();
        assert!(max_gap(terminal, &x11) < 1e-6, "1% perturbation must decay by t = 500");
    }

    #[test]
    fn strong_dilution_washes_everything_out() {
        let p = p();
        let control = u(0.5, 3.2, 1.0);
        let x0 = equilibrium_x0(&p, &control).unwrap();
        let traj =
            integrate(&p, &generic_start(), &control, 500.0, &IntegrateOptions::default())
                .unwrap();
        let terminal = traj.states.last().unwrap();
        assert!(max_gap(terminal, &x0) < 1e-6, "dilution above d2 empties the reactor");
    }

    #[test]
    fn trajectory_bookkeeping_invariants() {
        let p = p();
        let opts = IntegrateOptions::default();
        for control in [u(0.5, 0.3, 1.0), u(0.5, 3.2, 1.0), u(0.9, 0.1, 2.0)] {
            let traj = integrate(&p, &generic_start(), &control, 50.0, &opts).unwrap();
            assert_eq!(traj.times[0], 0.0);
            assert_eq!(traj.times.len(), traj.states.len());
            for pair in traj.times.windows(2) {
                let dt = pair[1] - pair[0];
                assert!(dt > 0.0, "times must increase strictly");
                assert!(dt <= opts.h_max * (1.0 + 1e-9), "step exceeded h_max");
            }
            for state in &traj.states {
                assert!(state.in_state_space(&p, 1e-9), "state left the state space");
            }
            assert_eq!(traj.control.d, control.d);
        }
    }

    #[test]
    fn vitamin_stays_zero_without_bacterial_light() {
        let p = p();
        let control = u(0.0, 0.4, 1.0);
        let start = State { s: 0.8, e: 0.3, v: 0.0, q: 3.1, c: 0.3 };
        let traj = integrate(&p, &start, &control, 200.0, &IntegrateOptions::default()).unwrap();
        for state in &traj.states {
            assert!(
                state.v.abs() <= 1e-12,
                "vitamin must stay on the invariant plane, got {}",
                state.v
            );
        }
    }

    #[test]
    fn bacteria_free_subspace_is_invariant_and_flagged() {
        let p = p();
        let control = u(0.5, 0.3, 1.0);
        let start = State { s: 0.5, e: 0.0, v: 0.2, q: 3.0, c: 0.1 };
        let traj = integrate(&p, &start, &control, 100.0, &IntegrateOptions::default()).unwrap();
        for state in &traj.states {
            assert_eq!(state.e, 0.0, "no spontaneous bacteria");
        }
        let report =
            converge_to_equilibrium(&p, &start, &control, 1e-7, 2000.0, &IntegrateOptions::default())
                .unwrap();
        assert!(report.outside_stability_hypotheses);
        assert_eq!(report.regime, Some(Regime::TotalWashoutGas));
    }

    #[test]
    fn convergence_targets_follow_the_regime() {
        let p = p();
        let opts = IntegrateOptions::default();
        let cases = [
            (u(0.5, 0.3, 1.0), Regime::CoexistenceGas),
            (u(0.5, 1.5, 1.0), Regime::AlgalWashoutGas),
            (u(0.5, 3.2, 1.0), Regime::TotalWashoutGas),
        ];
        for (control, expect) in cases {
            let report =
                converge_to_equilibrium(&p, &generic_start(), &control, 1e-7, 2000.0, &opts)
                    .unwrap();
            assert_eq!(
                report.regime,
                Some(expect),
                "control {control:?}, reason {:?}",
                report.inconclusive_reason
            );
            assert!(!report.outside_stability_hypotheses);
            assert!(report.residual_inf < 1e-7);
        }
    }

    #[test]
    fn early_stop_flags_convergence_before_the_horizon() {
        let p = p();
        let control = u(0.5, 0.5, 1.0);
        let opts = IntegrateOptions::default();
        let traj =
            integrate_with_stop(&p, &generic_start(), &control, 1000.0, 1e-7, &opts).unwrap();
        assert_eq!(traj.terminal_event, TerminalEvent::Converged);
        assert!(*traj.times.last().unwrap() < 1000.0);
        let last = traj.states.last().unwrap().to_array();
        let residual =
            ode_rhs_raw(&p, &last, &control).iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        assert!(residual < 1e-7);
        assert!(integrate_with_stop(&p, &generic_start(), &control, 1000.0, 0.0, &opts).is_err());
    }

    #[test]
    fn sampled_regimes_match_the_classification() {
        use rand::{Rng, SeedableRng};
        let p = p();
        let opts = IntegrateOptions::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let mut conclusive = 0;
        let mut inconclusive = 0;
        for _ in 0..30 {
            let control = u(
                0.05 + 0.9 * rng.gen::<f64>(),
                0.05 + 3.0 * rng.gen::<f64>(),
                0.5 + 1.5 * rng.gen::<f64>(),
            );
            let expected = classify(&p, &control).unwrap().regime;
            let report =
                converge_to_equilibrium(&p, &generic_start(), &control, 1e-7, 2000.0, &opts)
                    .unwrap();
            match report.regime {
                Some(observed) => {
                    conclusive += 1;
                    assert_eq!(
                        observed, expected,
                        "attractor disagrees with classification at {control:?}"
                    );
                }
                None => inconclusive += 1,
            }
        }
        assert!(conclusive >= 25, "too many inconclusive probes: {inconclusive}");
    }

    #[test]
    fn fixed_step_scheme_shows_fifth_order() {
        let p = p();
        let control = u(0.5, 0.5, 1.0);
        let start = generic_start();
        let reference = {
            let opts = IntegrateOptions {
                rtol: 1e-13,
                atol: 1e-14,
                ..IntegrateOptions::default()
            };
            *integrate(&p, &start, &control, 2.0, &opts).unwrap().states.last().unwrap()
        };
        let err_at = |h: f64| {
            let traj = integrate_fixed(&p, &start, &control, 2.0, h).unwrap();
            max_gap(traj.states.last().unwrap(), &reference)
        };
        let e1 = err_at(0.04);
        let e2 = err_at(0.02);
        let e3 = err_at(0.01);
        let order12 = (e1 / e2).log2();
        let order23 = (e2 / e3).log2();
        assert!(
            order12 >= 4.0 && order23 >= 4.0,
            "observed orders {order12:.2}, {order23:.2} (errors {e1:e}, {e2:e}, {e3:e})"
        );
    }

    #[test]
    fn tighter_tolerance_tracks_the_transient_better() {
        let p = p();
        let control = u(0.5, 0.3, 1.0);
        let start = generic_start();
        let terminal = |rtol: f64, atol: f64| {
            let opts = IntegrateOptions { rtol, atol, ..IntegrateOptions::default() };
            *integrate(&p, &start, &control, 8.0, &opts).unwrap().states.last().unwrap()
        };
        let reference = terminal(1e-13, 1e-14);
        let loose = max_gap(&terminal(1e-6, 1e-8), &reference);
        let tight = max_gap(&terminal(1e-10, 1e-12), &reference);
        assert!(
            tight < loose,
            "tightening tolerances must pay off: {tight:e} vs {loose:e}"
        );
        assert!(loose < 1e-4, "loose run still respects its tolerance budget");
    }

    #[test]
    fn impossible_accuracy_fails_the_step_control() {
        let p = p();
        let opts = IntegrateOptions {
            rtol: 1e-13,
            atol: 1e-15,
            h_min: 0.5,
            ..IntegrateOptions::default()
        };
        let traj = integrate(&p, &generic_start(), &u(0.5, 0.3, 1.0), 100.0, &opts).unwrap();
        assert_eq!(traj.terminal_event, TerminalEvent::StepFailure);
        assert!(!traj.times.is_empty() && traj.times[0] == 0.0, "partial path is kept");
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let p = p();
        let opts = IntegrateOptions::default();
        let outside = State { s: -0.1, e: 0.1, v: 0.1, q: 3.0, c: 0.1 };
        assert!(matches!(
            integrate(&p, &outside, &u(0.5, 0.3, 1.0), 10.0, &opts),
            Err(Error::Precondition(_))
        ));
        assert!(integrate(&p, &generic_start(), &u(0.5, 0.3, 1.0), -1.0, &opts).is_err());
        assert!(integrate_fixed(&p, &generic_start(), &u(0.5, 0.3, 1.0), 10.0, 0.0).is_err());
        assert!(converge_to_equilibrium(
            &p,
            &generic_start(),
            &u(0.5, 0.3, 1.0),
            0.0,
            10.0,
            &opts
        )
        .is_err());
    }
}
