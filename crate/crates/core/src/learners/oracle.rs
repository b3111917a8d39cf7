//! First-order oracles for `min_x max_y f(x, y)`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::eval::{best_response, exact_gradient, policy_value, NashGapEvaluator, NashGaps};
use crate::game::{executed_policy, PolicyPoint, RatioGame, Side, StochasticGame};
use crate::learners::projection::Domain;
use crate::learners::OracleError;
use crate::rollout::{default_cap, reinforce_estimate_with, sample_episode_with};
use crate::table::Table;

/// A pair of gradient vectors `(∇_x f, ∇_y f)` in the flat layout of the
/// domains.
pub type Grad = (Vec<f64>, Vec<f64>);

/// Objective `f(x, y)` minimized over `x` and maximized over `y`.
///
/// Implementations must be shareable across concurrent runs.
pub trait SaddleOracle: Sync {
    fn x_domain(&self) -> Domain;
    fn y_domain(&self) -> Domain;
    fn value(&self, x: &[f64], y: &[f64]) -> Result<f64, OracleError>;
    fn exact_gradient(&self, x: &[f64], y: &[f64]) -> Result<Grad, OracleError>;

    /// One stochastic gradient draw, unbiased for [`exact_gradient`].
    /// Deterministic oracles return the exact gradient.
    ///
    /// [`exact_gradient`]: SaddleOracle::exact_gradient
    fn sample_gradient(
        &self,
        x: &[f64],
        y: &[f64],
        _rng: &mut ChaCha8Rng,
    ) -> Result<Grad, OracleError> {
        self.exact_gradient(x, y)
    }

    /// Declared bounds on `E‖ĝ − ∇f‖²` for each player.
    fn variance_bounds(&self) -> (f64, f64) {
        (0.0, 0.0)
    }

    /// Optimal reply of `side` against the opponent's point `other`, and the
    /// resulting objective value.
    fn best_response(&self, side: Side, other: &[f64]) -> Result<(Vec<f64>, f64), OracleError>;

    /// `min_x max_y f`.
    fn minimax_value(&self) -> Result<f64, OracleError>;

    /// Primal, dual, and primal-dual gaps of `(x, y)`.
    fn gaps(&self, x: &[f64], y: &[f64]) -> Result<NashGaps, OracleError> {
        let upper = self.best_response(Side::Max, x)?.1;
        let lower = self.best_response(Side::Min, y)?.1;
        let v = self.minimax_value()?;
        Ok(NashGaps {
            primal: upper - v,
            dual: v - lower,
            pd: upper - lower,
        })
    }
}

/// Stochastic game with ε-greedy direct parameterization; `f = V_ρ`.
///
/// Best responses are taken over the ε-greedy policy class of the
/// responder, while [`gaps`](SaddleOracle::gaps) measures Nash gaps of the
/// executed policies against unrestricted opponents.
#[derive(Clone, Debug)]
pub struct GameOracle {
    game: StochasticGame,
    eps_x: f64,
    eps_y: f64,
    cap: usize,
    independent_episodes: bool,
    explore_x: StochasticGame,
    explore_y: StochasticGame,
    evaluator: NashGapEvaluator,
    tol: f64,
}

impl GameOracle {
    pub fn new(game: &StochasticGame, eps_x: f64, eps_y: f64) -> Result<Self, OracleError> {
        let report = game.validate();
        if !report.ok {
            return Err(OracleError::Config(report.to_string()));
        }
        for eps in [eps_x, eps_y] {
            if !(0.0..=1.0).contains(&eps) {
                return Err(OracleError::Config(format!(
                    "exploration {eps} outside [0,1]"
                )));
            }
        }
        let tol = 1e-10;
        Ok(GameOracle {
            game: game.clone(),
            eps_x,
            eps_y,
            cap: default_cap(report.zeta),
            independent_episodes: false,
            explore_x: game.with_exploration(Side::Min, eps_x),
            explore_y: game.with_exploration(Side::Max, eps_y),
            evaluator: NashGapEvaluator::new(game, tol)?,
            tol,
        })
    }

    /// Samples a separate episode for each player's estimate.
    pub fn with_independent_episodes(mut self, on: bool) -> Self {
        self.independent_episodes = on;
        self
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap.max(1);
        self
    }

    pub fn game(&self) -> &StochasticGame {
        &self.game
    }

    pub fn eps(&self) -> (f64, f64) {
        (self.eps_x, self.eps_y)
    }

    pub fn evaluator(&self) -> &NashGapEvaluator {
        &self.evaluator
    }

    fn table(&self, v: &[f64], side: Side) -> Table {
        Table::new(
            self.game.num_states(),
            self.game.num_actions(side),
            v.to_vec(),
        )
    }

    /// Policy point with parameters `x`, `y`.
    pub fn point(&self, x: &[f64], y: &[f64]) -> PolicyPoint {
        PolicyPoint {
            x: self.table(x, Side::Min),
            y: self.table(y, Side::Max),
            eps_x: self.eps_x,
            eps_y: self.eps_y,
        }
    }
}

impl SaddleOracle for GameOracle {
    fn x_domain(&self) -> Domain {
        Domain::Simplices {
            blocks: self.game.num_states(),
            dim: self.game.num_actions_min(),
        }
    }

    fn y_domain(&self) -> Domain {
        Domain::Simplices {
            blocks: self.game.num_states(),
            dim: self.game.num_actions_max(),
        }
    }

    fn value(&self, x: &[f64], y: &[f64]) -> Result<f64, OracleError> {
        let px = executed_policy(&self.table(x, Side::Min), self.eps_x);
        let py = executed_policy(&self.table(y, Side::Max), self.eps_y);
        Ok(policy_value(&self.game, &px, &py)?)
    }

    fn exact_gradient(&self, x: &[f64], y: &[f64]) -> Result<Grad, OracleError> {
        let g = exact_gradient(&self.game, &self.point(x, y))?;
        Ok((g.x.into_vec(), g.y.into_vec()))
    }

    fn sample_gradient(
        &self,
        x: &[f64],
        y: &[f64],
        rng: &mut ChaCha8Rng,
    ) -> Result<Grad, OracleError> {
        let px = executed_policy(&self.table(x, Side::Min), self.eps_x);
        let py = executed_policy(&self.table(y, Side::Max), self.eps_y);
        let traj = sample_episode_with(&self.game, &px, &py, rng, self.cap);
        let gx = reinforce_estimate_with(&traj, &px, self.eps_x, Side::Min);
        let gy = if self.independent_episodes {
            let traj = sample_episode_with(&self.game, &px, &py, rng, self.cap);
            reinforce_estimate_with(&traj, &py, self.eps_y, Side::Max)
        } else {
            reinforce_estimate_with(&traj, &py, self.eps_y, Side::Max)
        };
        Ok((gx.grad.into_vec(), gy.grad.into_vec()))
    }

    /// `24A²/(ε_x ζ⁴)` and `24B²/(ε_y ζ⁴)`.
    fn variance_bounds(&self) -> (f64, f64) {
        let z4 = self.game.zeta().powi(4);
        let a = self.game.num_actions_min() as f64;
        let b = self.game.num_actions_max() as f64;
        (
            24.0 * a * a / (self.eps_x * z4),
            24.0 * b * b / (self.eps_y * z4),
        )
    }

    fn best_response(&self, side: Side, other: &[f64]) -> Result<(Vec<f64>, f64), OracleError> {
        let (game, fixed) = match side {
            Side::Max => (
                &self.explore_y,
                executed_policy(&self.table(other, Side::Min), self.eps_x),
            ),
            Side::Min => (
                &self.explore_x,
                executed_policy(&self.table(other, Side::Max), self.eps_y),
            ),
        };
        let br = best_response(game, &fixed, side, self.tol)?;
        Ok((br.policy.into_vec(), br.value))
    }

    fn minimax_value(&self) -> Result<f64, OracleError> {
        Ok(self.evaluator.minimax_value())
    }

    fn gaps(&self, x: &[f64], y: &[f64]) -> Result<NashGaps, OracleError> {
        let px = executed_policy(&self.table(x, Side::Min), self.eps_x);
        let py = executed_policy(&self.table(y, Side::Max), self.eps_y);
        Ok(self.evaluator.gaps_of(&px, &py)?)
    }
}

/// Ratio game `⟨x,Ry⟩/⟨x,Sy⟩` with quotient-rule gradients.
#[derive(Clone, Debug)]
pub struct RatioOracle {
    game: RatioGame,
    value: f64,
}

impl RatioOracle {
    pub fn new(game: &RatioGame) -> Result<Self, OracleError> {
        let value = crate::eval::shapley_value(&game.to_game(), 1e-12)?.value_rho;
        Ok(RatioOracle {
            game: game.clone(),
            value,
        })
    }

    pub fn game(&self) -> &RatioGame {
        &self.game
    }
}

/// Ratio value at the vertex pair `(x, e_b)` or `(e_a, y)`.
fn vertex_values(game: &RatioGame, side: Side, other: &[f64]) -> Vec<f64> {
    let (r, s) = (game.reward_matrix(), game.stop_matrix());
    match side {
        Side::Max => (0..game.num_actions_max())
            .map(|b| {
                let num: f64 = other
                    .iter()
                    .enumerate()
                    .map(|(a, xa)| xa * r.get(a, b))
                    .sum();
                let den: f64 = other
                    .iter()
                    .enumerate()
                    .map(|(a, xa)| xa * s.get(a, b))
                    .sum();
                num / den
            })
            .collect(),
        Side::Min => (0..game.num_actions_min())
            .map(|a| {
                let num: f64 = other
                    .iter()
                    .enumerate()
                    .map(|(b, yb)| r.get(a, b) * yb)
                    .sum();
                let den: f64 = other
                    .iter()
                    .enumerate()
                    .map(|(b, yb)| s.get(a, b) * yb)
                    .sum();
                num / den
            })
            .collect(),
    }
}

/// Best vertex reply in a ratio game. For a fixed opponent the objective is
/// a ratio of affine functions with positive denominator, so an optimal
/// vertex exists. Ties go to the lowest index.
pub fn ratio_best_response(game: &RatioGame, side: Side, other: &[f64]) -> (usize, f64) {
    let vals = vertex_values(game, side, other);
    let mut best = (0, vals[0]);
    for (i, &v) in vals.iter().enumerate().skip(1) {
        let better = match side {
            Side::Max => v > best.1,
            Side::Min => v < best.1,
        };
        if better {
            best = (i, v);
        }
    }
    best
}

impl SaddleOracle for RatioOracle {
    fn x_domain(&self) -> Domain {
        Domain::Simplices {
            blocks: 1,
            dim: self.game.num_actions_min(),
        }
    }

    fn y_domain(&self) -> Domain {
        Domain::Simplices {
            blocks: 1,
            dim: self.game.num_actions_max(),
        }
    }

    fn value(&self, x: &[f64], y: &[f64]) -> Result<f64, OracleError> {
        Ok(self.game.value(x, y))
    }

    fn exact_gradient(&self, x: &[f64], y: &[f64]) -> Result<Grad, OracleError> {
        Ok(self.game.gradient(x, y))
    }

    fn best_response(&self, side: Side, other: &[f64]) -> Result<(Vec<f64>, f64), OracleError> {
        let (i, v) = ratio_best_response(&self.game, side, other);
        let mut p = vec![0.0; self.game.num_actions(side)];
        p[i] = 1.0;
        Ok((p, v))
    }

    fn minimax_value(&self) -> Result<f64, OracleError> {
        Ok(self.value)
    }
}

/// Decoupled quadratic `f(x, y) = c‖x − x₀‖² − d‖y − y₀‖²` on boxes, with
/// optional additive uniform gradient noise of per-coordinate variance
/// `noise²`. Used as a closed-form test objective.
#[derive(Clone, Debug)]
pub struct QuadraticOracle {
    pub c: f64,
    pub x0: Vec<f64>,
    pub d: f64,
    pub y0: Vec<f64>,
    pub x_lo: Vec<f64>,
    pub x_hi: Vec<f64>,
    pub y_lo: Vec<f64>,
    pub y_hi: Vec<f64>,
    pub noise: f64,
}

impl QuadraticOracle {
    /// Unit boxes `[0,1]^n` for both players.
    pub fn unit_box(c: f64, x0: Vec<f64>, d: f64, y0: Vec<f64>) -> Self {
        let (nx, ny) = (x0.len(), y0.len());
        QuadraticOracle {
            c,
            x0,
            d,
            y0,
            x_lo: vec![0.0; nx],
            x_hi: vec![1.0; nx],
            y_lo: vec![0.0; ny],
            y_hi: vec![1.0; ny],
            noise: 0.0,
        }
    }

    fn clamp(v: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(lo.iter().zip(hi))
            .map(|(e, (l, h))| e.clamp(*l, *h))
            .collect()
    }

    fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
    }
}

impl SaddleOracle for QuadraticOracle {
    fn x_domain(&self) -> Domain {
        Domain::Box {
            lo: self.x_lo.clone(),
            hi: self.x_hi.clone(),
        }
    }

    fn y_domain(&self) -> Domain {
        Domain::Box {
            lo: self.y_lo.clone(),
            hi: self.y_hi.clone(),
        }
    }

    fn value(&self, x: &[f64], y: &[f64]) -> Result<f64, OracleError> {
        Ok(self.c * Self::sq_dist(x, &self.x0) - self.d * Self::sq_dist(y, &self.y0))
    }

    fn exact_gradient(&self, x: &[f64], y: &[f64]) -> Result<Grad, OracleError> {
        let gx = x
            .iter()
            .zip(&self.x0)
            .map(|(a, b)| 2.0 * self.c * (a - b))
            .collect();
        let gy = y
            .iter()
            .zip(&self.y0)
            .map(|(a, b)| -2.0 * self.d * (a - b))
            .collect();
        Ok((gx, gy))
    }

    fn sample_gradient(
        &self,
        x: &[f64],
        y: &[f64],
        rng: &mut ChaCha8Rng,
    ) -> Result<Grad, OracleError> {
        let (mut gx, mut gy) = self.exact_gradient(x, y)?;
        if self.noise > 0.0 {
            let half = self.noise * 3f64.sqrt();
            for g in gx.iter_mut().chain(gy.iter_mut()) {
                *g += rng.gen_range(-half..half);
            }
        }
        Ok((gx, gy))
    }

    fn variance_bounds(&self) -> (f64, f64) {
        let v = self.noise * self.noise;
        (v * self.x0.len() as f64, v * self.y0.len() as f64)
    }

    fn best_response(&self, side: Side, other: &[f64]) -> Result<(Vec<f64>, f64), OracleError> {
        Ok(match side {
            Side::Max => {
                let y = Self::clamp(&self.y0, &self.y_lo, &self.y_hi);
                let v = self.value(other, &y)?;
                (y, v)
            }
            Side::Min => {
                let x = Self::clamp(&self.x0, &self.x_lo, &self.x_hi);
                let v = self.value(&x, other)?;
                (x, v)
            }
        })
    }

    fn minimax_value(&self) -> Result<f64, OracleError> {
        let x = Self::clamp(&self.x0, &self.x_lo, &self.x_hi);
        let y = Self::clamp(&self.y0, &self.y_lo, &self.y_hi);
        self.value(&x, &y)
    }
}
