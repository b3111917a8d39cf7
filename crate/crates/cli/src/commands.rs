//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sgrl_core::diag::{mvi_inner, mvi_sign_grid, tangent_project, SignGrid};
use sgrl_core::eval::{
    best_response_vertices, deterministic_policy, exact_gradient, mismatch_lower_bound,
    performance_difference_residual, policy_count, shapley_value, visitation_of, EvalError,
    MismatchMode, Start,
};
use sgrl_core::game::{
    appd_game1, appd_game2, prop31_game, prop51_ratio, random_game, PolicyPoint, RatioGame, Side,
    StochasticGame,
};
use sgrl_core::learners::{
    run_extragradient, run_two_timescale_from, theorem1_rates, GameOracle, LearnerConfig, Mode,
    OracleError, RatioOracle, RunHistory, SaddleOracle,
};
use sgrl_core::rollout::{default_cap, sample_episode, write_trajectories, RngStream};
use sgrl_core::table::Table;

use crate::source::{self, init_point, input_error};
use crate::svg::{heatmap, log_plot, Series};
use crate::{
    CliError, CliResult, Common, FigPreset, InitArg, ModeArg, Preset, RatesArg, SuiteKind,
};

const TOL: f64 = 1e-10;

fn oracle_error(e: OracleError) -> CliError {
    match e {
        OracleError::Config(_) | OracleError::Unsupported(_) | OracleError::Game(_) => {
            CliError::Input(e.to_string())
        }
        OracleError::Eval(_) => CliError::Domain(e.to_string()),
    }
}

fn eval_error(e: EvalError) -> CliError {
    CliError::Domain(e.to_string())
}

fn write_file(dir: &Path, name: &str, contents: &str) -> CliResult<PathBuf> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(path)
}

fn verdict(name: &str, ok: bool) -> bool {
    println!("{} {name}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn all_passed(results: &[bool], what: &str) -> CliResult<()> {
    if results.iter().all(|&b| b) {
        Ok(())
    } else {
        Err(CliError::Domain(format!("{what}: some checks failed")))
    }
}

pub fn validate(path: Option<PathBuf>, common: &Common) -> CliResult<()> {
    let path = match (path, common.game.clone()) {
        (Some(p), None) | (None, Some(p)) => p,
        (Some(_), Some(_)) => return Err(CliError::Input("give the game file once".into())),
        (None, None) => return Err(CliError::Input("no game file given".into())),
    };
    let src = fs::read_to_string(&path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let game = StochasticGame::from_json_str(&src).map_err(input_error)?;
    let report = game.validate();
    print!("{report}");
    if report.ok {
        println!(
            "states: {}, actions: {}x{}",
            game.num_states(),
            game.num_actions_min(),
            game.num_actions_max()
        );
        Ok(())
    } else {
        Err(CliError::Domain(format!(
            "{} violation(s)",
            report.violations.len()
        )))
    }
}

pub fn prop31(zeta: f64) -> CliResult<()> {
    let game = prop31_game(zeta).map_err(input_error)?;
    let ns = game.num_states();
    let hidden = 2;
    let pi1 = Table::deterministic(2, &vec![0; ns]);
    let pi2 = Table::deterministic(2, &vec![1; ns]);
    let witness = visitation_of(&game, &pi1, &pi2, Start::Rho).map_err(eval_error)?;
    println!(
        "witness pair a=0, b=1: d_rho(state {}) = {:.6}, rho(state {}) = {}",
        hidden + 1,
        witness.d[hidden],
        hidden + 1,
        game.initial_dist()[hidden]
    );
    if witness.d[hidden] > 0.0 && game.initial_dist()[hidden] == 0.0 {
        println!("concentrability: infinite (witness state {})", hidden + 1);
    }

    // Every best-response pair, in both directions, avoids the hidden state.
    let mut worst_hidden: f64 = 0.0;
    let mut pairs = 0;
    for responder in [Side::Min, Side::Max] {
        let opp = responder.other();
        let no = game.num_actions(opp);
        for k in 0..policy_count(ns, no) {
            let opponent = deterministic_policy(ns, no, k);
            for br in
                best_response_vertices(&game, &opponent, responder, TOL).map_err(eval_error)?
            {
                let (p1, p2) = match responder {
                    Side::Min => (&br, &opponent),
                    Side::Max => (&opponent, &br),
                };
                let occ = visitation_of(&game, p1, p2, Start::Rho).map_err(eval_error)?;
                worst_hidden = worst_hidden.max(occ.d[hidden]);
                pairs += 1;
            }
        }
    }
    println!(
        "best-response pairs checked: {pairs}, max d_rho(state {}) = {worst_hidden:e}",
        hidden + 1
    );
    let est = mismatch_lower_bound(
        &game,
        game.initial_dist(),
        MismatchMode::Enumerate,
        1 << 16,
        TOL,
        0,
    )
    .map_err(eval_error)?;
    println!(
        "minimax mismatch C_G = {:.6} (min-player term {:.6}, max-player term {:.6})",
        est.value, est.min_term, est.max_term
    );
    let results = [
        verdict(
            "best responses never visit the unsupported state",
            worst_hidden <= 1e-12,
        ),
        verdict("minimax mismatch is finite", est.value.is_finite()),
        verdict("concentrability is infinite", witness.d[hidden] > 0.0),
    ];
    all_passed(&results, "prop31")
}

pub fn prop51(eps: f64, s: f64) -> CliResult<()> {
    let ratio = prop51_ratio(eps, s).map_err(|e| CliError::Domain(e.to_string()))?;
    let oracle = RatioOracle::new(&ratio).map_err(oracle_error)?;
    let ne = [0.0, 1.0];
    let gaps = oracle.gaps(&ne, &ne).map_err(oracle_error)?;
    println!(
        "gaps at x = y = (0,1): primal {:e}, dual {:e}, total {:e}",
        gaps.primal, gaps.dual, gaps.pd
    );
    let zeta = ratio.to_game().zeta();
    println!("embedded game zeta = {zeta}");
    let z = [1.0, 0.0, 1.0, 0.0];
    let z_ref = [0.0, 1.0, 0.0, 1.0];
    let inner = mvi_inner(&ratio, &z, &z_ref);
    let closed = (s + 2.0 * eps * s - 1.0) / (s * s);
    println!("<F(z), z - z*> at z = ((1,0),(1,0)): {inner:.10} (closed form {closed:.10})");
    let results = [
        verdict("(0,1),(0,1) is a Nash equilibrium", gaps.pd.abs() < 1e-10),
        verdict("embedded zeta equals s", (zeta - s).abs() < 1e-12),
        verdict(
            "Minty inner product matches closed form",
            (inner - closed).abs() < 1e-9,
        ),
        verdict("Minty condition fails", inner < 0.0),
    ];
    all_passed(&results, "prop51")
}

fn nash_anchor(ratio: &RatioGame) -> CliResult<Vec<f64>> {
    let sol = shapley_value(&ratio.to_game(), 1e-12).map_err(eval_error)?;
    Ok(sol
        .x_eq
        .row(0)
        .iter()
        .chain(sol.y_eq.row(0))
        .copied()
        .collect())
}

fn write_grid(common: &Common, stem: &str, grid: &SignGrid, title: &str) -> CliResult<()> {
    write_file(&common.out, &format!("{stem}.csv"), &grid.to_csv())?;
    write_file(&common.out, &format!("{stem}.svg"), &heatmap(grid, title))?;
    println!(
        "cells: {} negative, {} zero, {} positive",
        grid.count(-1),
        grid.count(0),
        grid.count(1)
    );
    Ok(())
}

fn write_history(common: &Common, stem: &str, hist: &RunHistory, title: &str) -> CliResult<()> {
    write_file(&common.out, &format!("{stem}.csv"), &hist.to_csv())?;
    let series = |name, f: fn(&sgrl_core::learners::RunRecord) -> f64| Series {
        name,
        points: hist.records.iter().map(|r| (r.iter as f64, f(r))).collect(),
    };
    let plot = log_plot(
        &[
            series("primal gap", |r| r.primal_gap),
            series("dual gap", |r| r.dual_gap),
            series("primal-dual gap", |r| r.pd_gap),
        ],
        title,
        "iteration",
        1e-16,
    );
    write_file(&common.out, &format!("{stem}.svg"), &plot)?;
    let last = hist.last();
    println!(
        "final iter {}: primal {:e}, dual {:e}, pd {:e}, avg primal {:e}",
        last.iter, last.primal_gap, last.dual_gap, last.pd_gap, last.avg_primal_gap
    );
    Ok(())
}

fn fig_grid(
    ratio: &RatioGame,
    name: &str,
    resolution: usize,
    common: &Common,
) -> CliResult<SignGrid> {
    if resolution < 2 {
        return Err(CliError::Input("--resolution must be at least 2".into()));
    }
    let anchor = nash_anchor(ratio)?;
    println!(
        "anchor (Nash equilibrium): x = {:?}, y = {:?}",
        &anchor[..2],
        &anchor[2..]
    );
    let grid = mvi_sign_grid(ratio, &anchor, resolution);
    write_grid(
        common,
        name,
        &grid,
        &format!("sign of <F(z), z - z*>, {name}"),
    )?;
    Ok(grid)
}

fn fig_eg(
    ratio: &RatioGame,
    name: &str,
    default_iters: usize,
    common: &Common,
) -> CliResult<RunHistory> {
    let oracle = RatioOracle::new(ratio).map_err(oracle_error)?;
    let eta_x = common.eta_x.unwrap_or(0.01);
    let cfg = LearnerConfig {
        eta_x,
        eta_y: common.eta_y.unwrap_or(eta_x),
        eps_x: 0.0,
        eps_y: 0.0,
        iters: common.iters.unwrap_or(default_iters),
        seed: common.seed,
        mode: Mode::Exact,
        log_every: common.log_every.unwrap_or(100),
    };
    let (x0, y0) = (vec![1.0, 0.0], vec![1.0, 0.0]);
    let hist = run_extragradient(&oracle, &cfg, x0, y0).map_err(oracle_error)?;
    write_history(common, name, &hist, &format!("extragradient, {name}"))?;
    Ok(hist)
}

pub fn fig(preset: FigPreset, resolution: usize, common: &Common) -> CliResult<()> {
    match preset {
        FigPreset::A => {
            let grid = fig_grid(&appd_game1(), "fig_a", resolution, common)?;
            let ok = verdict("sign grid contains negative cells", grid.count(-1) > 0);
            all_passed(&[ok], "fig a")
        }
        FigPreset::C => {
            let grid = fig_grid(&appd_game2(), "fig_c", resolution, common)?;
            let near = near_anchor_negatives(&grid, 0.05);
            println!("negative cells within 0.05 of the anchor: {near}");
            let ok = verdict("Minty condition fails near the equilibrium", near > 0);
            all_passed(&[ok], "fig c")
        }
        FigPreset::B => {
            let hist = fig_eg(&appd_game1(), "fig_b", 100_000, common)?;
            let ok = verdict(
                "extragradient converges (final gap < 1e-4)",
                hist.last().pd_gap < 1e-4,
            );
            all_passed(&[ok], "fig b")
        }
        FigPreset::D => {
            let hist = fig_eg(&appd_game2(), "fig_d", 200_000, common)?;
            let first = hist.records[0].pd_gap;
            let increases = hist
                .records
                .windows(2)
                .filter(|w| w[1].pd_gap > w[0].pd_gap)
                .count();
            println!("logged increases of the gap: {increases}");
            let ok = verdict(
                "gap falls by three orders of magnitude",
                hist.last().pd_gap < first * 1e-3,
            );
            all_passed(&[ok], "fig d")
        }
    }
}

/// Negative cells within ℓ∞ distance `radius` of the grid's anchor.
fn near_anchor_negatives(grid: &SignGrid, radius: f64) -> usize {
    let (ax, ay) = (grid.z_ref[0], grid.z_ref[grid.z_ref.len() / 2]);
    let mut n = 0;
    for j in 0..grid.resolution {
        for i in 0..grid.resolution {
            let near = (grid.coord(i) - ax).abs() <= radius && (grid.coord(j) - ay).abs() <= radius;
            if near && grid.get(i, j) < 0 {
                n += 1;
            }
        }
    }
    n
}

fn mode_of(common: &Common) -> Mode {
    match common.mode {
        Some(ModeArg::Sampled) => Mode::Sampled,
        _ => Mode::Exact,
    }
}

fn train_config(common: &Common, game: &StochasticGame) -> CliResult<LearnerConfig> {
    let mut cfg = LearnerConfig {
        seed: common.seed,
        mode: mode_of(common),
        log_every: common.log_every.unwrap_or(100),
        ..LearnerConfig::default()
    };
    match common.rates {
        Some(RatesArg::Theorem1) => {
            if common.eta_x.is_some()
                || common.eta_y.is_some()
                || common.eps_x.is_some()
                || common.eps_y.is_some()
            {
                return Err(CliError::Input(
                    "--rates conflicts with explicit --eta-*/--eps-* flags".into(),
                ));
            }
            let epsilon = common
                .epsilon
                .expect("clap enforces --epsilon with --rates");
            if !(epsilon > 0.0 && epsilon < 1.0) {
                return Err(CliError::Input(format!(
                    "--epsilon {epsilon} outside (0,1)"
                )));
            }
            let est = match mismatch_lower_bound(
                game,
                game.initial_dist(),
                MismatchMode::Enumerate,
                1 << 16,
                TOL,
                common.seed,
            ) {
                Err(EvalError::BudgetExceeded { .. }) => {
                    println!(
                        "policy space too large to enumerate; sampling 4096 opponents for C_G"
                    );
                    mismatch_lower_bound(
                        game,
                        game.initial_dist(),
                        MismatchMode::Sample,
                        4096,
                        TOL,
                        common.seed,
                    )
                }
                other => other,
            }
            .map_err(eval_error)?;
            if !est.value.is_finite() {
                return Err(CliError::Domain(
                    "minimax mismatch is infinite; rates undefined".into(),
                ));
            }
            let r = theorem1_rates(
                epsilon,
                game.num_states(),
                game.num_actions_min(),
                game.num_actions_max(),
                game.zeta(),
                est.value,
            );
            println!(
                "rates: C_G = {:.6}, eta_x = {:e}, eta_y = {:e}, eps_x = {:e}, eps_y = {:e}, N = {:e}",
                est.value, r.eta_x, r.eta_y, r.eps_x, r.eps_y, r.iters
            );
            (cfg.eta_x, cfg.eta_y, cfg.eps_x, cfg.eps_y) = (r.eta_x, r.eta_y, r.eps_x, r.eps_y);
            cfg.iters = match common.iters {
                Some(n) => n,
                None if r.iters <= 1e9 => r.iters.ceil() as usize,
                None => {
                    return Err(CliError::Domain(format!(
                        "prescribed N = {:e} exceeds 1e9 iterations; pass --iters",
                        r.iters
                    )))
                }
            };
        }
        None => {
            cfg.eta_x = common.eta_x.unwrap_or(cfg.eta_x);
            cfg.eta_y = common.eta_y.unwrap_or(cfg.eta_y);
            cfg.eps_x = common.eps_x.unwrap_or(cfg.eps_x);
            cfg.eps_y = common.eps_y.unwrap_or(cfg.eps_y);
            cfg.iters = common.iters.unwrap_or(10_000);
        }
    }
    if cfg.log_every == 0 {
        return Err(CliError::Input("--log-every must be positive".into()));
    }
    Ok(cfg)
}

fn start(common: &Common, game: &StochasticGame) -> (Vec<f64>, Vec<f64>) {
    let ns = game.num_states();
    (
        init_point(common.init, ns, game.num_actions_min()),
        init_point(common.init, ns, game.num_actions_max()),
    )
}

pub fn train(dump_episodes: Option<usize>, common: &Common) -> CliResult<()> {
    let game = source::game(common, None)?;
    let cfg = train_config(common, &game)?;
    let oracle = GameOracle::new(&game, cfg.eps_x, cfg.eps_y).map_err(oracle_error)?;
    println!(
        "two-timescale {} SGDA: eta_x = {}, eta_y = {}, eps_x = {}, eps_y = {}, iters = {}",
        cfg.mode, cfg.eta_x, cfg.eta_y, cfg.eps_x, cfg.eps_y, cfg.iters
    );
    let (x0, y0) = start(common, &game);
    let hist = run_two_timescale_from(&oracle, &cfg, x0, y0).map_err(oracle_error)?;
    let title = format!("two-timescale {} SGDA", cfg.mode);
    write_history(common, "train", &hist, &title)?;
    if let Some(n) = dump_episodes {
        let pt = oracle.point(&hist.final_x, &hist.final_y);
        let cap = default_cap(game.zeta());
        let episodes: Vec<_> = (0..n)
            .map(|i| {
                sample_episode(
                    &game,
                    &pt,
                    &mut RngStream::new(cfg.seed, i as u64).rng(),
                    cap,
                )
            })
            .collect();
        let mut buf = Vec::new();
        write_trajectories(&mut buf, &episodes).expect("writing to memory");
        write_file(
            &common.out,
            "trajectories.tsv",
            &String::from_utf8_lossy(&buf),
        )?;
    }
    Ok(())
}

pub fn eg(common: &Common) -> CliResult<()> {
    if common.mode == Some(ModeArg::Sampled) {
        return Err(CliError::Input(
            "extragradient supports only --mode exact".into(),
        ));
    }
    if common.rates.is_some() {
        return Err(CliError::Input("--rates applies to train only".into()));
    }
    let game = source::game(common, None)?;
    let eta_x = common.eta_x.unwrap_or(0.01);
    let cfg = LearnerConfig {
        eta_x,
        eta_y: common.eta_y.unwrap_or(eta_x),
        eps_x: common.eps_x.unwrap_or(0.0),
        eps_y: common.eps_y.unwrap_or(0.0),
        iters: common.iters.unwrap_or(10_000),
        seed: common.seed,
        mode: Mode::Exact,
        log_every: common.log_every.unwrap_or(100),
    };
    if cfg.log_every == 0 {
        return Err(CliError::Input("--log-every must be positive".into()));
    }
    let oracle = GameOracle::new(&game, cfg.eps_x, cfg.eps_y).map_err(oracle_error)?;
    let (x0, y0) = start(common, &game);
    let hist = run_extragradient(&oracle, &cfg, x0, y0).map_err(oracle_error)?;
    write_history(common, "eg", &hist, "extragradient")
}

pub fn mvi_grid(resolution: usize, anchor: Option<Vec<f64>>, common: &Common) -> CliResult<()> {
    let ratio = source::ratio(common, Some(Preset::Appd1))?;
    if ratio.num_actions_min() != 2 || ratio.num_actions_max() != 2 {
        return Err(CliError::Input("sign grids need a 2x2 ratio game".into()));
    }
    if resolution < 2 {
        return Err(CliError::Input("--resolution must be at least 2".into()));
    }
    let z_ref = match anchor {
        Some(a) => {
            if a.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(CliError::Input(
                    "--anchor coordinates must lie in [0,1]".into(),
                ));
            }
            vec![a[0], 1.0 - a[0], a[1], 1.0 - a[1]]
        }
        None => nash_anchor(&ratio)?,
    };
    println!("anchor: x = {:?}, y = {:?}", &z_ref[..2], &z_ref[2..]);
    let grid = mvi_sign_grid(&ratio, &z_ref, resolution);
    write_grid(common, "mvi_grid", &grid, "sign of <F(z), z - z_ref>")
}

struct SuiteRow {
    index: usize,
    seed: u64,
    zeta: f64,
    eg_pd: f64,
    sgda_pd: f64,
    sgda_avg_primal: f64,
    failed: Vec<&'static str>,
}

const SUITE_CHECKS: usize = 6;

fn suite_game(kind: SuiteKind, common: &Common, seed: u64) -> CliResult<StochasticGame> {
    match kind {
        SuiteKind::Ratio => {
            let mut c = common.clone();
            c.seed = seed;
            c.preset = Some(Preset::RandomRatio);
            c.game = None;
            source::game(&c, None)
        }
        SuiteKind::Multi => random_game(
            common.states,
            common.actions_min,
            common.actions_max,
            common.zeta_min,
            seed,
        )
        .map_err(input_error),
    }
}

fn suite_one(
    index: usize,
    game: &StochasticGame,
    seed: u64,
    common: &Common,
) -> CliResult<SuiteRow> {
    let iters = common.iters.unwrap_or(100_000);
    let log_every = common.log_every.unwrap_or(iters.max(1));
    let mut failed = Vec::new();
    let mut check = |name, ok: bool| {
        if !ok {
            failed.push(name);
        }
    };
    let ns = game.num_states();
    let (na, nb) = (game.num_actions_min(), game.num_actions_max());

    check("validation", game.validate().ok);

    let eta = common.eta_x.unwrap_or(0.01);
    let eg_cfg = LearnerConfig {
        eta_x: eta,
        eta_y: common.eta_y.unwrap_or(eta),
        eps_x: 0.0,
        eps_y: 0.0,
        iters,
        seed,
        mode: Mode::Exact,
        log_every,
    };
    let eg_oracle = GameOracle::new(game, 0.0, 0.0).map_err(oracle_error)?;
    let first = (
        init_point(InitArg::First, ns, na),
        init_point(InitArg::First, ns, nb),
    );
    let eg = run_extragradient(&eg_oracle, &eg_cfg, first.0, first.1).map_err(oracle_error)?;

    let sgda_cfg = LearnerConfig {
        iters,
        seed,
        mode: mode_of(common),
        log_every,
        eps_x: common.eps_x.unwrap_or(0.05),
        eps_y: common.eps_y.unwrap_or(0.05),
        ..LearnerConfig::default()
    };
    let sgda_oracle =
        GameOracle::new(game, sgda_cfg.eps_x, sgda_cfg.eps_y).map_err(oracle_error)?;
    let center = (
        init_point(InitArg::Center, ns, na),
        init_point(InitArg::Center, ns, nb),
    );
    let sgda = run_two_timescale_from(&sgda_oracle, &sgda_cfg, center.0, center.1)
        .map_err(oracle_error)?;

    let in_domain = |o: &GameOracle, h: &RunHistory| {
        o.x_domain().contains(&h.final_x, 1e-9) && o.y_domain().contains(&h.final_y, 1e-9)
    };
    check(
        "iterates stay feasible",
        in_domain(&eg_oracle, &eg) && in_domain(&sgda_oracle, &sgda),
    );
    check(
        "gaps are nonnegative",
        eg.records
            .iter()
            .chain(&sgda.records)
            .all(|r| r.primal_gap >= -1e-9 && r.dual_gap >= -1e-9),
    );

    let sol = eg_oracle.evaluator().solution();
    let eq_gaps = eg_oracle
        .evaluator()
        .gaps_of(&sol.x_eq, &sol.y_eq)
        .map_err(eval_error)?;
    check("Shapley equilibrium has zero gap", eq_gaps.pd.abs() < 1e-8);

    // Directional finite differences along zero-sum directions.
    let mut rng = RngStream::new(seed, u64::MAX).rng();
    let mut pt = PolicyPoint::random(game, 0.1, 0.1, &mut rng);
    // Pull toward the center so that ±h shifts stay inside the simplex.
    for (t, dim) in [(&mut pt.x, na), (&mut pt.y, nb)] {
        t.as_mut_slice()
            .iter_mut()
            .for_each(|v| *v = 0.5 * *v + 0.5 / dim as f64);
    }
    let grad = exact_gradient(game, &pt).map_err(eval_error)?;
    let h = 1e-6;
    let mut fd_ok = true;
    for (side, params, g, dim) in [
        (Side::Min, &pt.x, &grad.x, na),
        (Side::Max, &pt.y, &grad.y, nb),
    ] {
        let proj = tangent_project(g.as_slice(), dim);
        for s in 0..ns {
            for a in 1..dim {
                let shift = |sign: f64| -> CliResult<f64> {
                    let mut p = params.clone();
                    p.add(s, a, sign * h);
                    p.add(s, 0, -sign * h);
                    let mut q = pt.clone();
                    match side {
                        Side::Min => q.x = p,
                        Side::Max => q.y = p,
                    }
                    sgrl_core::eval::value_bundle(game, &q)
                        .map(|b| b.v_rho)
                        .map_err(eval_error)
                };
                let fd = (shift(1.0)? - shift(-1.0)?) / (2.0 * h);
                let an = proj[s * dim + a] - proj[s * dim];
                fd_ok &= (fd - an).abs() <= 1e-6 * (1.0 + an.abs());
            }
        }
    }
    check("gradient matches finite differences", fd_ok);

    let other = PolicyPoint::random(game, 0.1, 0.1, &mut rng);
    let (p1, p2) = (pt.executed(Side::Min), pt.executed(Side::Max));
    let q1 = other.executed(Side::Min);
    let pdl = performance_difference_residual(game, (&p1, &p2), (&q1, &p2)).map_err(eval_error)?;
    check("performance difference identity", pdl.abs() < 1e-10);

    Ok(SuiteRow {
        index,
        seed,
        zeta: game.zeta(),
        eg_pd: eg.last().pd_gap,
        sgda_pd: sgda.last().pd_gap,
        sgda_avg_primal: sgda.last().avg_primal_gap,
        failed,
    })
}

pub fn random_suite(count: usize, kind: SuiteKind, common: &Common) -> CliResult<()> {
    if common.game.is_some() || common.preset.is_some() {
        return Err(CliError::Input(
            "random-suite generates its own games".into(),
        ));
    }
    let rows: Vec<SuiteRow> = (0..count)
        .into_par_iter()
        .map(|i| {
            let seed = common.seed.wrapping_add(i as u64);
            let game = suite_game(kind, common, seed)?;
            suite_one(i, &game, seed, common)
        })
        .collect::<CliResult<_>>()?;
    let mut csv = String::from(
        "game,seed,zeta,eg_final_pd_gap,sgda_final_pd_gap,sgda_avg_primal_gap,checks_failed\n",
    );
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.index,
            r.seed,
            r.zeta,
            r.eg_pd,
            r.sgda_pd,
            r.sgda_avg_primal,
            r.failed.join(";")
        ));
    }
    write_file(&common.out, "random_suite.csv", &csv)?;
    let converged = rows.iter().filter(|r| r.eg_pd < 1e-3).count();
    println!("extragradient final gap < 1e-3: {converged}/{count}");
    let failures: usize = rows.iter().map(|r| r.failed.len()).sum();
    println!(
        "invariant checks passed: {}/{}",
        SUITE_CHECKS * count - failures,
        SUITE_CHECKS * count
    );
    for r in rows.iter().filter(|r| !r.failed.is_empty()) {
        println!(
            "game {} (seed {}): failed {}",
            r.index,
            r.seed,
            r.failed.join(", ")
        );
    }
    if failures == 0 {
        Ok(())
    } else {
        Err(CliError::Domain(format!(
            "{failures} invariant check(s) failed"
        )))
    }
}
