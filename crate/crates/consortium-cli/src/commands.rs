//! Subcommand handlers: resolve inputs, call the library, write the
//! artifacts and the manifest, print a one-line summary.

use crate::output::{json_text, opt_cell, write_file, write_manifest, write_table};
use crate::plot::{self, Series};
use crate::{
    Cli, CliResult, Command, HessianMapArgs, ObjectiveCmd, OptimizeArgs, ParetoArgs, PointArgs,
    ReachableArgs, SimulateArgs,
};
use consortium::equilibria::{classify, local_stability, Regime, StabilityReport};
use consortium::objectives::theta_breakeven;
use consortium::optimizer::{
    grid_values, hessian_map_g0, maximize_p_out, maximize_p_theta, maximize_yield_alpha,
    yield_global_argmax, DefinitenessClass, OptimOptions, OptimResult, SteadyObjective,
};
use consortium::pareto::{
    check_nesting, dominance_check, front_vs_theta_profile, reachable_sets, sweep_front,
    theta_grid, DominanceViolation, ReachableSet, ThetaFailure,
};
use consortium::sim::{self, IntegrateOptions, TerminalEvent};
use consortium::{Control, Error, ModelParams, State};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub fn dispatch(cli: &Cli) -> CliResult<()> {
    let params = match &cli.params {
        Some(path) => ModelParams::from_file(path)?,
        None => ModelParams::default(),
    };
    std::fs::create_dir_all(&cli.out)?;
    match &cli.command {
        Command::Params => params_cmd(cli, &params),
        Command::Equilibria(args) => equilibria_cmd(cli, &params, args),
        Command::Classify(args) => classify_cmd(cli, &params, args),
        Command::Simulate(args) => simulate_cmd(cli, &params, args),
        Command::Optimize(args) => optimize_cmd(cli, &params, args),
        Command::Pareto(args) => pareto_cmd(cli, &params, args),
        Command::HessianMap(args) => hessian_map_cmd(cli, &params, args),
        Command::Reachable(args) => reachable_cmd(cli, &params, args),
    }
}

fn no_args() -> serde_json::Value {
    serde_json::Value::Object(serde_json::Map::new())
}

#[derive(Serialize)]
struct DerivedBounds {
    /// Saturation cap on the dilution rate.
    d_rho_bound: f64,
    /// Weight below which the optimal reactor is empty.
    theta_breakeven: f64,
    /// Yield supremum at full light and vanishing dilution.
    yield_batch_limit: f64,
}

#[derive(Serialize)]
struct ParamsOut<'a> {
    params: &'a ModelParams,
    derived: DerivedBounds,
}

fn params_cmd(cli: &Cli, p: &ModelParams) -> CliResult<()> {
    let derived = DerivedBounds {
        d_rho_bound: p.d_rho_bound(),
        theta_breakeven: theta_breakeven(p),
        yield_batch_limit: yield_global_argmax(p).value,
    };
    write_file(&cli.out, "params.txt", &p.to_key_values())?;
    write_file(&cli.out, "params.json", &json_text(&ParamsOut { params: p, derived }))?;
    write_manifest(cli, "params", no_args(), p)?;
    print!("{}", p.to_key_values());
    println!("# d_rho_bound = {}", p.d_rho_bound());
    println!("# theta_breakeven = {}", theta_breakeven(p));
    println!("# yield_batch_limit = {}", yield_global_argmax(p).value);
    Ok(())
}

#[derive(Serialize)]
struct EquilibriaOut {
    report: consortium::equilibria::EquilibriumReport,
    stability_x0: StabilityReport,
    stability_x10: Option<StabilityReport>,
    stability_x11: Option<StabilityReport>,
}

fn equilibria_cmd(cli: &Cli, p: &ModelParams, args: &PointArgs) -> CliResult<()> {
    let u = Control::new(args.alpha, args.d, args.s_in)?;
    let report = classify(p, &u)?;
    let stability_x0 = local_stability(p, &report.x0, &u)?;
    let stability_x10 = report.x10.map(|x| local_stability(p, &x, &u)).transpose()?;
    let stability_x11 = report.x11.map(|x| local_stability(p, &x, &u)).transpose()?;
    let out = EquilibriaOut { report, stability_x0, stability_x10, stability_x11 };
    write_file(&cli.out, "equilibria.json", &json_text(&out))?;
    write_manifest(cli, "equilibria", serde_json::to_value(args)?, p)?;
    println!(
        "regime {} (d1 = {}, d2 = {}, equilibria present: {})",
        out.report.regime,
        out.report.d1,
        out.report.d2,
        1 + out.report.x10.is_some() as usize + out.report.x11.is_some() as usize
    );
    Ok(())
}

#[derive(Serialize)]
struct ClassifyOut {
    control: Control,
    d1: f64,
    d2: f64,
    regime: Regime,
}

fn classify_cmd(cli: &Cli, p: &ModelParams, args: &PointArgs) -> CliResult<()> {
    let u = Control::new(args.alpha, args.d, args.s_in)?;
    let report = classify(p, &u)?;
    let out = ClassifyOut { control: u, d1: report.d1, d2: report.d2, regime: report.regime };
    write_file(&cli.out, "classify.json", &json_text(&out))?;
    write_manifest(cli, "classify", serde_json::to_value(args)?, p)?;
    println!("{} (d1 = {}, d2 = {})", out.regime, out.d1, out.d2);
    Ok(())
}

#[derive(Serialize)]
struct TrajRow {
    t: f64,
    s: f64,
    e: f64,
    v: f64,
    q: f64,
    c: f64,
}

#[derive(Serialize)]
struct SimulateOut {
    control: Control,
    x0: State,
    t_end: f64,
    stop_tol: f64,
    steps: usize,
    terminal_event: TerminalEvent,
    terminal_time: f64,
    terminal_state: State,
    /// Max-norm of the vector field at the end; absent on boundary
    /// controls, where the steady-state analysis does not apply.
    residual_inf: Option<f64>,
}

fn simulate_cmd(cli: &Cli, p: &ModelParams, args: &SimulateArgs) -> CliResult<()> {
    let u = Control { alpha: args.alpha, d: args.d, s_in: args.s_in };
    let x0 = match &args.x0 {
        Some(text) => parse_state(text)?,
        None => default_start(p, &u, cli.seed)?,
    };
    let opts = IntegrateOptions::default();
    let traj = if args.stop_tol > 0.0 {
        sim::integrate_with_stop(p, &x0, &u, args.t_end, args.stop_tol, &opts)?
    } else {
        sim::integrate(p, &x0, &u, args.t_end, &opts)?
    };
    let rows: Vec<TrajRow> = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(&t, x)| TrajRow { t, s: x.s, e: x.e, v: x.v, q: x.q, c: x.c })
        .collect();
    write_table(&cli.out, "trajectory", cli.format, "t,s,e,v,q,c", &rows, |r| {
        format!("{},{},{},{},{},{}", r.t, r.s, r.e, r.v, r.q, r.c)
    })?;

    let terminal_state = *traj.states.last().expect("trajectory holds the initial state");
    let terminal_time = *traj.times.last().unwrap();
    let residual_inf = consortium::model::ode_rhs(p, &terminal_state, &u)
        .ok()
        .map(|f| f.iter().fold(0.0_f64, |m, c| m.max(c.abs())));
    let out = SimulateOut {
        control: u,
        x0,
        t_end: args.t_end,
        stop_tol: args.stop_tol,
        steps: rows.len() - 1,
        terminal_event: traj.terminal_event,
        terminal_time,
        terminal_state,
        residual_inf,
    };
    write_file(&cli.out, "simulate.json", &json_text(&out))?;
    if args.plot {
        type Pick = fn(&TrajRow) -> f64;
        let picks: [(&str, Pick); 5] = [
            ("s (glucose)", |r| r.s),
            ("e (bacteria)", |r| r.e),
            ("v (vitamin)", |r| r.v),
            ("q (quota)", |r| r.q),
            ("c (algae)", |r| r.c),
        ];
        let series: Vec<Series> = picks
        .into_iter()
        .map(|(label, pick)| Series {
            label,
            points: rows.iter().map(|r| (r.t, pick(r))).collect(),
        })
        .collect();
        let svg = plot::render("trajectory", "t [days]", "state", &series, false);
        write_file(&cli.out, "trajectory.svg", &svg)?;
    }
    write_manifest(cli, "simulate", serde_json::to_value(args)?, p)?;
    println!(
        "{} at t = {} after {} steps (residual {})",
        out.terminal_event,
        out.terminal_time,
        out.steps,
        opt_cell(out.residual_inf)
    );
    if traj.terminal_event == TerminalEvent::StepFailure {
        return Err(Error::StepUnderflow { t: terminal_time }.into());
    }
    Ok(())
}

fn parse_state(text: &str) -> CliResult<State> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 5 {
        return Err(Error::Precondition(format!(
            "--x0 needs five comma-separated values s,e,v,q,c, got {}",
            parts.len()
        ))
        .into());
    }
    let mut vals = [0.0_f64; 5];
    for (slot, part) in vals.iter_mut().zip(&parts) {
        *slot = part.trim().parse().map_err(|_| {
            Error::Precondition(format!("--x0 component `{}` is not a number", part.trim()))
        })?;
    }
    Ok(State::from_array(vals))
}

/// Seeded 1% perturbation of the attracting equilibrium. The quota is
/// perturbed relative to its floor so the start stays inside the state
/// space.
fn default_start(p: &ModelParams, u: &Control, seed: u64) -> CliResult<State> {
    let interior = Control::new(u.alpha, u.d, u.s_in).map_err(|_| {
        Error::Precondition(
            "the default start perturbs an equilibrium, which needs an interior \
             control; pass --x0 explicitly for boundary runs"
                .into(),
        )
    })?;
    let report = classify(p, &interior)?;
    let target = report.x11.or(report.x10).unwrap_or(report.x0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jitter = move || 1.0 + 0.01 * (2.0 * rng.gen::<f64>() - 1.0);
    Ok(State::new(
        target.s * jitter(),
        target.e * jitter(),
        target.v * jitter(),
        p.q_min + (target.q - p.q_min) * jitter(),
        target.c * jitter(),
    ))
}

#[derive(Serialize)]
struct ScalarOptOut {
    objective: &'static str,
    theta: Option<f64>,
    result: OptimResult,
}

#[derive(Serialize)]
struct YieldOptOut {
    objective: &'static str,
    d: f64,
    s_in: f64,
    alpha_star: f64,
    #[serde(rename = "yield")]
    best_yield: f64,
}

fn optimize_cmd(cli: &Cli, p: &ModelParams, args: &OptimizeArgs) -> CliResult<()> {
    match args.objective {
        ObjectiveCmd::Pout { s_in, grid_n, emit_grid } => scalar_opt(
            cli,
            p,
            args,
            "optimize pout",
            SteadyObjective::POut,
            None,
            s_in,
            grid_n,
            emit_grid,
        ),
        ObjectiveCmd::Ptheta { theta, s_in, grid_n, emit_grid } => scalar_opt(
            cli,
            p,
            args,
            "optimize ptheta",
            SteadyObjective::PTheta(theta),
            Some(theta),
            s_in,
            grid_n,
            emit_grid,
        ),
        ObjectiveCmd::YieldAlpha { d, s_in } => {
            let (alpha_star, best_yield) = maximize_yield_alpha(p, d, s_in)?;
            let out =
                YieldOptOut { objective: "yield-alpha", d, s_in, alpha_star, best_yield };
            write_file(&cli.out, "optimize.json", &json_text(&out))?;
            write_manifest(cli, "optimize yield-alpha", serde_json::to_value(args)?, p)?;
            println!("max yield {best_yield} at alpha = {alpha_star}");
            Ok(())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn scalar_opt(
    cli: &Cli,
    p: &ModelParams,
    args: &OptimizeArgs,
    command: &'static str,
    objective: SteadyObjective,
    theta: Option<f64>,
    s_in: f64,
    grid_n: usize,
    emit_grid: bool,
) -> CliResult<()> {
    let opts = OptimOptions {
        oracle_n: (grid_n > 0).then_some(grid_n),
        threads: cli.threads,
        ..OptimOptions::default()
    };
    let result = match objective {
        SteadyObjective::POut => maximize_p_out(p, s_in, &opts)?,
        SteadyObjective::PTheta(t) => maximize_p_theta(p, t, s_in, &opts)?,
    };
    let name = match objective {
        SteadyObjective::POut => "pout",
        SteadyObjective::PTheta(_) => "ptheta",
    };
    let out = ScalarOptOut { objective: name, theta, result };
    write_file(&cli.out, "optimize.json", &json_text(&out))?;
    if emit_grid {
        let n = if grid_n > 0 { grid_n } else { 400 };
        let cells = grid_values(p, objective, s_in, n, cli.threads)?;
        write_table(&cli.out, "grid", cli.format, "alpha,d,value", &cells, |c| {
            format!("{},{},{}", c.alpha, c.d, opt_cell(c.value))
        })?;
    }
    write_manifest(cli, command, serde_json::to_value(args)?, p)?;
    match result.oracle_gap {
        Some(gap) => println!(
            "max {} at alpha = {}, d = {} (oracle gap {gap:e})",
            result.value, result.u_star.alpha, result.u_star.d
        ),
        None => println!(
            "max {} at alpha = {}, d = {}",
            result.value, result.u_star.alpha, result.u_star.d
        ),
    }
    Ok(())
}

#[derive(Serialize)]
struct DominanceReport<'a> {
    grid_n: usize,
    front_points: usize,
    violations: &'a [DominanceViolation],
    solver_failures: &'a [ThetaFailure],
}

fn pareto_cmd(cli: &Cli, p: &ModelParams, args: &ParetoArgs) -> CliResult<()> {
    if args.theta_profile && args.z.is_none() {
        return Err(Error::Precondition("--theta-profile needs --z to bound the feed".into()).into());
    }
    let thetas = theta_grid(args.theta_n)?;
    let opts = OptimOptions { threads: cli.threads, ..OptimOptions::default() };
    let sweep = sweep_front(p, args.s_in, &thetas, true, &opts)?;
    if sweep.points.is_empty() {
        return Err(Error::Infeasible(format!(
            "no weight produced a front point at s_in = {}",
            args.s_in
        ))
        .into());
    }
    write_table(
        &cli.out,
        "front",
        cli.format,
        "theta,alpha,d,s_in,p_out,p_in,p_theta",
        &sweep.points,
        |pt| {
            format!(
                "{},{},{},{},{},{},{}",
                pt.theta, pt.u_star.alpha, pt.u_star.d, pt.u_star.s_in, pt.p_out, pt.p_in,
                pt.p_theta
            )
        },
    )?;
    let violations = dominance_check(p, &sweep.points, args.grid_n, args.s_in, cli.threads)?;
    let report = DominanceReport {
        grid_n: args.grid_n,
        front_points: sweep.points.len(),
        violations: &violations,
        solver_failures: &sweep.failures,
    };
    write_file(&cli.out, "dominance_report.json", &json_text(&report))?;
    if let Some(list) = &args.sin_list {
        let feeds = parse_feeds(list)?;
        let sets = reachable_sets(p, &feeds, args.grid_n, cli.threads)?;
        write_clouds(cli, &sets)?;
    }
    if let Some(z) = args.z.filter(|_| args.theta_profile) {
        let rows = front_vs_theta_profile(p, z, &thetas, &opts)?;
        write_table(
            &cli.out,
            "profile",
            cli.format,
            "theta,alpha,d,s_in_star,s_in_choice,p_out,p_in,p_theta",
            &rows,
            |r| {
                format!(
                    "{},{},{},{},{},{},{},{}",
                    r.theta, r.alpha, r.d, r.s_in_star, r.s_in_choice, r.p_out, r.p_in, r.p_theta
                )
            },
        )?;
    }
    if args.plot {
        let points: Vec<(f64, f64)> = sweep.points.iter().map(|pt| (pt.p_in, pt.p_out)).collect();
        let series = [Series { label: "front", points }];
        let svg = plot::render("Pareto front", "P_in", "P_out", &series, true);
        write_file(&cli.out, "front.svg", &svg)?;
    }
    write_manifest(cli, "pareto", serde_json::to_value(args)?, p)?;
    println!(
        "{} front points, {} dominance violations, {} solver failures",
        sweep.points.len(),
        violations.len(),
        sweep.failures.len()
    );
    Ok(())
}

fn parse_feeds(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|part| {
            part.trim().parse::<f64>().map_err(|_| {
                Error::Precondition(format!("--sin-list entry `{}` is not a number", part.trim()))
                    .into()
            })
        })
        .collect()
}

fn write_clouds(cli: &Cli, sets: &[ReachableSet]) -> CliResult<()> {
    for set in sets {
        write_table(
            &cli.out,
            &format!("cloud_s_in_{}", set.s_in),
            cli.format,
            "alpha,d,p_out,p_in",
            &set.points,
            |r| format!("{},{},{},{}", r.alpha, r.d, r.p_out, r.p_in),
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct HessianSummary {
    s_in: f64,
    grid_n: usize,
    pos_def: usize,
    neg_def: usize,
    non_def: usize,
    singular: usize,
    outside: usize,
}

fn hessian_map_cmd(cli: &Cli, p: &ModelParams, args: &HessianMapArgs) -> CliResult<()> {
    let cells = hessian_map_g0(p, args.s_in, args.grid_n, cli.threads)?;
    write_table(
        &cli.out,
        "hessian_map",
        cli.format,
        "alpha,d,class,lambda_min,lambda_max",
        &cells,
        |c| {
            format!(
                "{},{},{},{},{}",
                c.alpha,
                c.d,
                c.class.map(|k| k.to_string()).unwrap_or_default(),
                opt_cell(c.lambda_min),
                opt_cell(c.lambda_max)
            )
        },
    )?;
    let count = |class: DefinitenessClass| cells.iter().filter(|c| c.class == Some(class)).count();
    let summary = HessianSummary {
        s_in: args.s_in,
        grid_n: args.grid_n,
        pos_def: count(DefinitenessClass::PosDef),
        neg_def: count(DefinitenessClass::NegDef),
        non_def: count(DefinitenessClass::NonDef),
        singular: count(DefinitenessClass::Singular),
        outside: cells.iter().filter(|c| c.class.is_none()).count(),
    };
    write_file(&cli.out, "hessian_summary.json", &json_text(&summary))?;
    write_manifest(cli, "hessian-map", serde_json::to_value(args)?, p)?;
    println!(
        "POS_DEF {} NEG_DEF {} NON_DEF {} SINGULAR {} outside {}",
        summary.pos_def, summary.neg_def, summary.non_def, summary.singular, summary.outside
    );
    Ok(())
}

#[derive(Serialize)]
struct NestingOut {
    s_in_small: f64,
    s_in_large: f64,
    checked: usize,
    failures: usize,
}

fn reachable_cmd(cli: &Cli, p: &ModelParams, args: &ReachableArgs) -> CliResult<()> {
    let feeds = parse_feeds(&args.sin_list)?;
    let sets = reachable_sets(p, &feeds, args.grid_n, cli.threads)?;
    write_clouds(cli, &sets)?;
    let mut reports = Vec::new();
    for pair in feeds.windows(2) {
        let rep = check_nesting(p, pair[0], pair[1], args.grid_n, cli.threads)?;
        println!(
            "s_in {} -> {}: {} cells checked, {} failures",
            pair[0],
            pair[1],
            rep.checked,
            rep.failures.len()
        );
        reports.push(NestingOut {
            s_in_small: pair[0],
            s_in_large: pair[1],
            checked: rep.checked,
            failures: rep.failures.len(),
        });
    }
    write_file(&cli.out, "nesting_report.json", &json_text(&reports))?;
    write_manifest(cli, "reachable", serde_json::to_value(args)?, p)?;
    Ok(())
}
