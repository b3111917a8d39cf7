//! Best responses, Shapley iteration, and Nash gaps.

use crate::eval::{check_policy, state_values, EvalError};
use crate::game::{PolicyPoint, Side, StochasticGame};
use crate::matrix_game::solve_matrix_game;
use crate::table::Table;

/// Certificate tolerance handed to the per-state matrix-game solver.
const MATRIX_GAME_TOL: f64 = 1e-9;

/// Optimal deterministic reply to a fixed opponent policy.
#[derive(Clone, Debug, PartialEq)]
pub struct BestResponse {
    pub side: Side,
    pub policy: Table,
    pub actions: Vec<usize>,
    /// Optimal per-state values of the induced MDP.
    pub values: Vec<f64>,
    /// Optimal ρ-value.
    pub value: f64,
    /// Responder action values `q(s, c)` at the optimum.
    pub q: Table,
    /// Sup-norm bound on the distance of `values` from the true optimum.
    pub tol: f64,
}

/// Action values of the responder against a fixed opponent, given
/// continuation values `v`.
fn responder_q(game: &StochasticGame, fixed: &Table, side: Side, v: &[f64]) -> Table {
    let (ns, na, nb) = (
        game.num_states(),
        game.num_actions_min(),
        game.num_actions_max(),
    );
    let mut q = Table::zeros(ns, game.num_actions(side));
    for s in 0..ns {
        for a in 0..na {
            for b in 0..nb {
                let w = match side {
                    Side::Max => fixed.get(s, a),
                    Side::Min => fixed.get(s, b),
                };
                if w == 0.0 {
                    continue;
                }
                let val = game.reward(s, a, b) + crate::table::dot(game.transition_row(s, a, b), v);
                let c = match side {
                    Side::Max => b,
                    Side::Min => a,
                };
                q.add(s, c, w * val);
            }
        }
    }
    q
}

/// Index of the best entry; ties go to the lowest index.
fn best_index(row: &[f64], side: Side) -> (usize, f64) {
    let mut best = (0, row[0]);
    for (i, &v) in row.iter().enumerate().skip(1) {
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

fn evaluate_response(
    game: &StochasticGame,
    fixed: &Table,
    side: Side,
    resp: &Table,
) -> Result<Vec<f64>, EvalError> {
    match side {
        Side::Max => state_values(game, fixed, resp),
        Side::Min => state_values(game, resp, fixed),
    }
}

/// Solves the single-agent MDP induced by fixing the opponent's policy.
///
/// `side` names the responding player and `fixed` is the opponent's executed
/// policy. Value iteration runs until the sup-norm update drops below
/// `tol·ζ`; the greedy policy is then polished by exact policy iteration.
pub fn best_response(
    game: &StochasticGame,
    fixed: &Table,
    side: Side,
    tol: f64,
) -> Result<BestResponse, EvalError> {
    check_policy(game, fixed, side.other())?;
    let zeta = game.zeta();
    if !(zeta > 0.0) {
        return Err(EvalError::NoStopping(zeta));
    }
    let ns = game.num_states();
    let mut v = vec![0.0; ns];
    loop {
        let q = responder_q(game, fixed, side, &v);
        let next: Vec<f64> = (0..ns).map(|s| best_index(q.row(s), side).1).collect();
        let delta = crate::table::dist_inf(&next, &v);
        v = next;
        if delta < tol * zeta {
            break;
        }
    }

    let nc = game.num_actions(side);
    let q = responder_q(game, fixed, side, &v);
    let mut actions: Vec<usize> = (0..ns).map(|s| best_index(q.row(s), side).0).collect();
    let mut values = evaluate_response(game, fixed, side, &Table::deterministic(nc, &actions))?;
    // Policy iteration: switch only on strict improvement, so it terminates.
    for _ in 0..10 * ns * nc + 10 {
        let q = responder_q(game, fixed, side, &values);
        let mut changed = false;
        for s in 0..ns {
            let cur = q.get(s, actions[s]);
            let (c, best) = best_index(q.row(s), side);
            let slack = 1e-13 * (1.0 + cur.abs());
            let improves = match side {
                Side::Max => best > cur + slack,
                Side::Min => best < cur - slack,
            };
            if improves {
                actions[s] = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        values = evaluate_response(game, fixed, side, &Table::deterministic(nc, &actions))?;
    }

    let q = responder_q(game, fixed, side, &values);
    let resid = (0..ns)
        .map(|s| (best_index(q.row(s), side).1 - values[s]).abs())
        .fold(0.0, f64::max);
    let value = crate::table::dot(game.initial_dist(), &values);
    Ok(BestResponse {
        side,
        policy: Table::deterministic(nc, &actions),
        actions,
        values,
        value,
        q,
        tol: resid / zeta,
    })
}

/// Minimax values and stationary equilibrium policies.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapleySolution {
    pub values: Vec<f64>,
    pub x_eq: Table,
    pub y_eq: Table,
    /// `V*_ρ = ⟨ρ, values⟩`.
    pub value_rho: f64,
    pub iterations: usize,
}

fn stage_matrix(game: &StochasticGame, s: usize, v: &[f64]) -> Table {
    let (na, nb) = (game.num_actions_min(), game.num_actions_max());
    let mut m = Table::zeros(na, nb);
    for a in 0..na {
        for b in 0..nb {
            m.set(
                a,
                b,
                game.reward(s, a, b) + crate::table::dot(game.transition_row(s, a, b), v),
            );
        }
    }
    m
}

/// Shapley value iteration: `v(s) ← val[R(s,·,·) + P(s,·,·)·v]` until the
/// sup-norm update drops below `tol·ζ`.
pub fn shapley_value(game: &StochasticGame, tol: f64) -> Result<ShapleySolution, EvalError> {
    let zeta = game.zeta();
    if !(zeta > 0.0) {
        return Err(EvalError::NoStopping(zeta));
    }
    let ns = game.num_states();
    let mut v = vec![0.0; ns];
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut next = vec![0.0; ns];
        for (s, slot) in next.iter_mut().enumerate() {
            *slot = solve_matrix_game(&stage_matrix(game, s, &v), MATRIX_GAME_TOL)?.value;
        }
        let delta = crate::table::dist_inf(&next, &v);
        v = next;
        if delta < tol * zeta {
            break;
        }
    }
    let mut x_eq = Table::zeros(ns, game.num_actions_min());
    let mut y_eq = Table::zeros(ns, game.num_actions_max());
    for s in 0..ns {
        let sol = solve_matrix_game(&stage_matrix(game, s, &v), MATRIX_GAME_TOL)?;
        x_eq.row_mut(s).copy_from_slice(&sol.x);
        y_eq.row_mut(s).copy_from_slice(&sol.y);
    }
    let value_rho = crate::table::dot(game.initial_dist(), &v);
    Ok(ShapleySolution {
        values: v,
        x_eq,
        y_eq,
        value_rho,
        iterations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NashGaps {
    /// `max_{π_2} V_ρ(π_x, π_2) − V*_ρ`.
    pub primal: f64,
    /// `V*_ρ − min_{π_1} V_ρ(π_1, π_y)`.
    pub dual: f64,
    /// `primal + dual`.
    pub pd: f64,
}

/// Nash gaps against a cached minimax value.
#[derive(Clone, Debug)]
pub struct NashGapEvaluator {
    game: StochasticGame,
    solution: ShapleySolution,
    tol: f64,
}

impl NashGapEvaluator {
    pub fn new(game: &StochasticGame, tol: f64) -> Result<Self, EvalError> {
        Ok(NashGapEvaluator {
            game: game.clone(),
            solution: shapley_value(game, tol)?,
            tol,
        })
    }

    pub fn game(&self) -> &StochasticGame {
        &self.game
    }

    pub fn minimax_value(&self) -> f64 {
        self.solution.value_rho
    }

    pub fn solution(&self) -> &ShapleySolution {
        &self.solution
    }

    /// Gaps of executed policies.
    pub fn gaps_of(&self, pi_min: &Table, pi_max: &Table) -> Result<NashGaps, EvalError> {
        let upper = best_response(&self.game, pi_min, Side::Max, self.tol)?.value;
        let lower = best_response(&self.game, pi_max, Side::Min, self.tol)?.value;
        let v_star = self.solution.value_rho;
        Ok(NashGaps {
            primal: upper - v_star,
            dual: v_star - lower,
            pd: upper - lower,
        })
    }

    pub fn gaps(&self, point: &PolicyPoint) -> Result<NashGaps, EvalError> {
        self.gaps_of(&point.executed(Side::Min), &point.executed(Side::Max))
    }
}

/// One-shot Nash gaps at `point`.
pub fn nash_gaps(
    game: &StochasticGame,
    point: &PolicyPoint,
    tol: f64,
) -> Result<NashGaps, EvalError> {
    NashGapEvaluator::new(game, tol)?.gaps(point)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::policy_value;
    use crate::game::{appd_game1, prop51_ratio, random_game};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// All deterministic policies with `cols` actions over `rows` states.
    fn all_deterministic(rows: usize, cols: usize) -> Vec<Table> {
        let count = cols.pow(rows as u32);
        (0..count)
            .map(|mut k| {
                let acts: Vec<usize> = (0..rows)
                    .map(|_| {
                        let c = k % cols;
                        k /= cols;
                        c
                    })
                    .collect();
                Table::deterministic(cols, &acts)
            })
            .collect()
    }

    #[test]
    fn prop51_max_reply_to_equilibrium() {
        let g = prop51_ratio(0.1, 0.3).unwrap().to_game();
        let x = Table::from_rows(&[vec![0.0, 1.0]]).unwrap();
        let br = best_response(&g, &x, Side::Max, 1e-12).unwrap();
        assert!(br.value.abs() < 1e-12);
        // Against x* = (0,1) both replies are worth −ε·y₁ ≤ 0; y* = (0,1) is optimal.
        assert_eq!(br.actions, vec![1]);
    }

    #[test]
    fn one_step_best_response_is_stagewise() {
        let g = StochasticGame::new(
            2,
            2,
            3,
            vec![0.0; 24],
            vec![
                0.1, -0.5, 0.3, 0.9, 0.0, -0.2, -1.0, 0.4, 0.2, 0.6, 0.6, -0.3,
            ],
            vec![0.5, 0.5],
        )
        .unwrap();
        let pi1 = Table::from_rows(&[vec![0.25, 0.75], vec![0.5, 0.5]]).unwrap();
        let br = best_response(&g, &pi1, Side::Max, 1e-12).unwrap();
        for s in 0..2 {
            let scores: Vec<f64> = (0..3)
                .map(|b| (0..2).map(|a| pi1.get(s, a) * g.reward(s, a, b)).sum())
                .collect();
            let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!((br.values[s] - best).abs() < 1e-14);
        }
    }

    #[test]
    fn best_response_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for seed in 0..30 {
            let g = random_game(2, 2, 3, 0.1, seed).unwrap();
            let pt = PolicyPoint::random(&g, 0.0, 0.0, &mut rng);
            let tol = 1e-10;
            let br_max = best_response(&g, &pt.x, Side::Max, tol).unwrap();
            let best_max = all_deterministic(2, 3)
                .iter()
                .map(|p| policy_value(&g, &pt.x, p).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(
                (br_max.value - best_max).abs() <= tol,
                "{} vs {best_max}",
                br_max.value
            );
            let br_min = best_response(&g, &pt.y, Side::Min, tol).unwrap();
            let best_min = all_deterministic(2, 2)
                .iter()
                .map(|p| policy_value(&g, p, &pt.y).unwrap())
                .fold(f64::INFINITY, f64::min);
            assert!((br_min.value - best_min).abs() <= tol);
            assert!(br_min.tol <= tol);
        }
    }

    #[test]
    fn shapley_on_first_ratio_game() {
        let g = appd_game1().to_game();
        let sol = shapley_value(&g, 1e-12).unwrap();
        assert!(sol.value_rho.abs() < 1e-10);
        assert!((sol.x_eq.get(0, 1) - 1.0).abs() < 1e-9);
        assert!((sol.y_eq.get(0, 1) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn shapley_one_shot_is_matrix_value() {
        let g = StochasticGame::new(1, 2, 2, vec![0.0; 4], vec![1.0, -1.0, -1.0, 1.0], vec![1.0])
            .unwrap();
        let sol = shapley_value(&g, 1e-12).unwrap();
        assert!(sol.value_rho.abs() < 1e-12);
        assert!(sol.iterations <= 2);
    }

    #[test]
    fn shapley_sandwich_and_vanishing_gaps() {
        for seed in 0..10 {
            let g = random_game(3, 2, 2, 0.2, seed).unwrap();
            let tol = 1e-10;
            let ev = NashGapEvaluator::new(&g, tol).unwrap();
            let sol = ev.solution().clone();
            let up = best_response(&g, &sol.x_eq, Side::Max, tol).unwrap().value;
            let lo = best_response(&g, &sol.y_eq, Side::Min, tol).unwrap().value;
            assert!(up >= sol.value_rho - tol && lo <= sol.value_rho + tol);
            let gaps = ev.gaps_of(&sol.x_eq, &sol.y_eq).unwrap();
            assert!(gaps.pd <= 10.0 * tol / g.zeta(), "{gaps:?}");
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let gaps = ev
                .gaps(&PolicyPoint::random(&g, 0.1, 0.1, &mut rng))
                .unwrap();
            assert!(gaps.primal >= -tol && gaps.dual >= -tol);
        }
    }

    #[test]
    fn primal_gap_of_first_ratio_game_at_pure_row() {
        let g = appd_game1().to_game();
        let x = Table::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let pt = PolicyPoint::new(x, Table::uniform(1, 2), 0.0, 0.0).unwrap();
        let gaps = nash_gaps(&g, &pt, 1e-12).unwrap();
        assert!((gaps.primal - 1.0 / 3.0).abs() < 1e-10);
    }
}
