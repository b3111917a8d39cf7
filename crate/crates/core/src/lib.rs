//! Independent policy-gradient learning in two-player zero-sum stochastic
//! games.
//!
//! The crate covers the game model ([`game`]), exact evaluation by linear
//! solves ([`eval`]), trajectory sampling and REINFORCE estimates
//! ([`rollout`]), gradient dynamics ([`learners`]), and the Minty / Moreau
//! diagnostics ([`diag`]).

pub mod diag;
pub mod eval;
pub mod game;
pub mod learners;
pub mod matrix_game;
pub mod rollout;
pub mod table;

pub use diag::{moreau_diag, mvi_field, mvi_inner, mvi_sign_grid, MoreauDiag, MviSample, SignGrid};
pub use eval::{
    best_response, exact_gradient, mismatch_lower_bound, nash_gaps, shapley_value,
    trajectory_gradient, value_bundle, visitation, BestResponse, EvalBundle, EvalError,
    GradientPair, MismatchMode, NashGapEvaluator, NashGaps, Start, VisitationResult,
};
pub use game::{
    appd_game1, appd_game2, executed_policy, prop31_game, prop51_ratio, random_game, ratio_to_game,
    validate_game, GameError, PolicyPoint, RatioGame, Side, StochasticGame, ValidationReport,
};
pub use learners::{
    eg_step, project_simplex, run_extragradient, run_two_timescale, sgda_step, theorem1_rates,
    GameOracle, LearnerConfig, Mode, OracleError, RatioOracle, RunHistory, SaddleOracle,
};
pub use rollout::{
    gradient_stats, reinforce_estimate, sample_episode, GradEstimate, RngStream, Trajectory,
};
pub use table::Table;
