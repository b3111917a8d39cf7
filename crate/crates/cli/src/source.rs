//! Resolving `--game` / `--preset` into a game.

use sgrl_core::game::{
    appd_game1, appd_game2, prop31_game, random_game, GameError, RatioGame, StochasticGame,
};

use crate::{CliError, CliResult, Common, InitArg, Preset};

pub fn input_error(e: GameError) -> CliError {
    CliError::Input(e.to_string())
}

/// The game named by `--game` or `--preset`, falling back to `default`.
pub fn game(common: &Common, default: Option<Preset>) -> CliResult<StochasticGame> {
    if common.game.is_some() && common.preset.is_some() {
        return Err(CliError::Input(
            "--game and --preset are mutually exclusive".into(),
        ));
    }
    if let Some(path) = &common.game {
        return StochasticGame::load(path).map_err(input_error);
    }
    match common.preset.or(default) {
        Some(p) => preset_game(p, common),
        None => Err(CliError::Input(
            "no game given: pass --game PATH or --preset NAME".into(),
        )),
    }
}

fn preset_game(p: Preset, c: &Common) -> CliResult<StochasticGame> {
    match p {
        Preset::Appd1 => Ok(appd_game1().to_game()),
        Preset::Appd2 => Ok(appd_game2().to_game()),
        Preset::Prop31 => prop31_game(0.2).map_err(input_error),
        Preset::Random => random_game(c.states, c.actions_min, c.actions_max, c.zeta_min, c.seed)
            .map_err(input_error),
        Preset::RandomRatio => Ok(random_ratio(c)?.to_game()),
    }
}

fn random_ratio(c: &Common) -> CliResult<RatioGame> {
    if !(c.zeta_min > 0.0 && c.zeta_min <= 1.0) {
        return Err(CliError::Input(format!(
            "--zeta-min {} outside (0,1]",
            c.zeta_min
        )));
    }
    if c.actions_min == 0 || c.actions_max == 0 {
        return Err(CliError::Input("action counts must be positive".into()));
    }
    Ok(RatioGame::random(
        c.actions_min,
        c.actions_max,
        c.zeta_min,
        c.seed,
    ))
}

/// A one-state game read as a ratio game.
pub fn ratio(common: &Common, default: Option<Preset>) -> CliResult<RatioGame> {
    let g = game(common, default)?;
    RatioGame::from_game(&g)
        .ok_or_else(|| CliError::Input("expected a one-state (ratio) game".into()))
}

/// Starting parameters for `--init`.
pub fn init_point(init: InitArg, blocks: usize, dim: usize) -> Vec<f64> {
    match init {
        InitArg::Center => vec![1.0 / dim as f64; blocks * dim],
        InitArg::First => {
            let mut v = vec![0.0; blocks * dim];
            v.iter_mut().step_by(dim).for_each(|e| *e = 1.0);
            v
        }
    }
}
