//! Minimax mismatch coefficient and two-sided gradient dominance.
//!
//! The mismatch coefficient is
//!
//! ```text
//! C_G = max{ max_{π_2} min_{π_1 ∈ Π*_1(π_2)} ‖d^{π_1,π_2}_ρ / ρ‖_∞,
//!            max_{π_1} min_{π_2 ∈ Π*_2(π_1)} ‖d^{π_1,π_2}_ρ / ρ‖_∞ }.
//! ```
//!
//! Best-response sets are polytopes; only their deterministic vertices are
//! enumerated, so the inner minimum is an upper bound on the true one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::eval::{
    best_response, exact_gradient, policy_value, value_bundle, visitation_of, EvalError, Start,
};
use crate::game::{random_policy, PolicyPoint, Side, StochasticGame};
use crate::table::Table;

/// Responder sets larger than this are built from per-state tie sets
/// instead of full enumeration.
const FULL_ENUMERATION_LIMIT: u128 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MismatchMode {
    /// Every deterministic opponent policy.
    Enumerate,
    /// `budget` random mixed opponent policies (heuristic lower bound on the
    /// outer maximum).
    Sample,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MismatchEstimate {
    /// Combined estimate `max(min_term, max_term)`.
    pub value: f64,
    /// `max_{π_2} min_{π_1 ∈ Π*_1(π_2)} ‖d/ρ‖_∞`.
    pub min_term: f64,
    /// `max_{π_1} min_{π_2 ∈ Π*_2(π_1)} ‖d/ρ‖_∞`.
    pub max_term: f64,
    pub mode: MismatchMode,
    pub opponents_checked: usize,
}

/// `‖d/ρ‖_∞`. States with `ρ(s) = 0` contribute `+∞` when `d(s) > tol` and
/// are skipped otherwise.
pub fn mismatch_ratio(d: &[f64], rho: &[f64], tol: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for (&ds, &rs) in d.iter().zip(rho) {
        if rs == 0.0 {
            if ds > tol {
                return f64::INFINITY;
            }
        } else {
            worst = worst.max(ds / rs);
        }
    }
    worst
}

/// Number of deterministic policies, `actions^states` (saturating).
pub fn policy_count(states: usize, actions: usize) -> u128 {
    (actions as u128)
        .checked_pow(states as u32)
        .unwrap_or(u128::MAX)
}

/// Deterministic policy number `k` in lexicographic order (state 0 most
/// significant), as action indices.
fn nth_deterministic(states: usize, actions: usize, mut k: u128) -> Vec<usize> {
    let mut acts = vec![0; states];
    for s in (0..states).rev() {
        acts[s] = (k % actions as u128) as usize;
        k /= actions as u128;
    }
    acts
}

fn pair<'a>(side: Side, responder: &'a Table, opponent: &'a Table) -> (&'a Table, &'a Table) {
    match side {
        Side::Min => (responder, opponent),
        Side::Max => (opponent, responder),
    }
}

/// Deterministic policy number `k` in lexicographic order.
pub fn deterministic_policy(states: usize, actions: usize, k: u128) -> Table {
    Table::deterministic(actions, &nth_deterministic(states, actions, k))
}

/// Deterministic policies of `side` that are best responses to `opponent`
/// (ρ-value within `tol·(1 + 1/ζ)` of optimal).
pub fn best_response_vertices(
    game: &StochasticGame,
    opponent: &Table,
    side: Side,
    tol: f64,
) -> Result<Vec<Table>, EvalError> {
    let br = best_response(game, opponent, side, tol)?;
    let slack = tol * (1.0 + 1.0 / game.zeta());
    let (ns, nc) = (game.num_states(), game.num_actions(side));
    let within = |v: f64| match side {
        Side::Min => v <= br.value + slack,
        Side::Max => v >= br.value - slack,
    };
    let count = policy_count(ns, nc);
    let mut out = Vec::new();
    if count <= FULL_ENUMERATION_LIMIT {
        for k in 0..count {
            let cand = Table::deterministic(nc, &nth_deterministic(ns, nc, k));
            let (p1, p2) = pair(side, &cand, opponent);
            if within(policy_value(game, p1, p2)?) {
                out.push(cand);
            }
        }
    } else {
        // Product of per-state greedy tie sets around the optimal values.
        let ties: Vec<Vec<usize>> = (0..ns)
            .map(|s| {
                (0..nc)
                    .filter(|&c| (br.q.get(s, c) - br.values[s]).abs() <= slack)
                    .collect()
            })
            .collect();
        let mut idx = vec![0usize; ns];
        loop {
            let acts: Vec<usize> = (0..ns).map(|s| ties[s][idx[s]]).collect();
            out.push(Table::deterministic(nc, &acts));
            if out.len() as u128 >= FULL_ENUMERATION_LIMIT {
                break;
            }
            let mut s = ns;
            loop {
                if s == 0 {
                    return Ok(out);
                }
                s -= 1;
                idx[s] += 1;
                if idx[s] < ties[s].len() {
                    break;
                }
                idx[s] = 0;
            }
        }
    }
    if out.is_empty() {
        out.push(br.policy);
    }
    Ok(out)
}

/// `min_{π ∈ vertices of Π*(opponent)} ‖d^{π,opponent}_ρ / ρ‖_∞` for the
/// responding `side`.
pub fn pointwise_mismatch(
    game: &StochasticGame,
    opponent: &Table,
    side: Side,
    tol: f64,
) -> Result<f64, EvalError> {
    let mut best = f64::INFINITY;
    for cand in best_response_vertices(game, opponent, side, tol)? {
        let (p1, p2) = pair(side, &cand, opponent);
        let occ = visitation_of(game, p1, p2, Start::Rho)?;
        best = best.min(mismatch_ratio(&occ.d, game.initial_dist(), tol));
    }
    Ok(best)
}

/// Vertex-enumeration estimate of the minimax mismatch coefficient under
/// initial distribution `rho`.
pub fn mismatch_lower_bound(
    game: &StochasticGame,
    rho: &[f64],
    mode: MismatchMode,
    budget: u128,
    tol: f64,
    seed: u64,
) -> Result<MismatchEstimate, EvalError> {
    let game = game
        .with_initial_dist(rho.to_vec())
        .map_err(|_| EvalError::Shape {
            rows: rho.len(),
            cols: 1,
            states: game.num_states(),
            actions: 1,
        })?;
    let ns = game.num_states();
    let mut terms = [0.0f64; 2];
    let mut checked = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (slot, responder) in [Side::Min, Side::Max].into_iter().enumerate() {
        let opp_side = responder.other();
        let no = game.num_actions(opp_side);
        let opponents: Vec<Table> = match mode {
            MismatchMode::Enumerate => {
                let needed =
                    policy_count(ns, no).max(policy_count(ns, game.num_actions(responder)));
                if needed > budget {
                    return Err(EvalError::BudgetExceeded { needed, budget });
                }
                (0..policy_count(ns, no))
                    .map(|k| Table::deterministic(no, &nth_deterministic(ns, no, k)))
                    .collect()
            }
            MismatchMode::Sample => (0..budget)
                .map(|_| random_policy(ns, no, &mut rng))
                .collect(),
        };
        let mut worst: f64 = 0.0;
        for opp in &opponents {
            checked += 1;
            worst = worst.max(pointwise_mismatch(&game, opp, responder, tol)?);
        }
        terms[slot] = worst;
    }
    Ok(MismatchEstimate {
        value: terms[0].max(terms[1]),
        min_term: terms[0],
        max_term: terms[1],
        mode,
        opponents_checked: checked,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DominanceResiduals {
    /// Right-hand side minus left-hand side of the min-player inequality.
    pub res_x: f64,
    /// Same for the max-player.
    pub res_y: f64,
    /// `V_ρ(x,y) − min_{π_1} V_ρ(π_1, π_y)`.
    pub suboptimality_x: f64,
    /// `max_{π_2} V_ρ(π_x, π_2) − V_ρ(x,y)`.
    pub suboptimality_y: f64,
    /// `max_{x̄} ⟨∇_x V_ρ, x − x̄⟩`.
    pub stationarity_x: f64,
    /// `max_{ȳ} ⟨∇_y V_ρ, ȳ − y⟩`.
    pub stationarity_y: f64,
}

/// Residuals of the two-sided gradient dominance inequality
///
/// `V(x,y) − min_{π_1} V(π_1,π_y) ≤ C·((1/ζ)·max_{x̄}⟨∇_x V, x − x̄⟩ + 2ε_x/ζ³)`
///
/// and its max-player mirror. The inner maxima over products of simplices
/// are taken row by row: all mass on the extreme coordinate of each
/// gradient row.
pub fn gradient_dominance_residuals(
    game: &StochasticGame,
    point: &PolicyPoint,
    mismatch_bound: f64,
    tol: f64,
) -> Result<DominanceResiduals, EvalError> {
    let zeta = game.zeta();
    let grad = exact_gradient(game, point)?;
    let v = value_bundle(game, point)?.v_rho;
    let lower = best_response(game, &point.executed(Side::Max), Side::Min, tol)?.value;
    let upper = best_response(game, &point.executed(Side::Min), Side::Max, tol)?.value;

    let mut stat_x = 0.0;
    let mut stat_y = 0.0;
    for s in 0..game.num_states() {
        let gx = grad.x.row(s);
        let min_g = gx.iter().copied().fold(f64::INFINITY, f64::min);
        stat_x += crate::table::dot(gx, point.x.row(s)) - min_g;
        let gy = grad.y.row(s);
        let max_g = gy.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        stat_y += max_g - crate::table::dot(gy, point.y.row(s));
    }
    let sub_x = v - lower;
    let sub_y = upper - v;
    let z3 = zeta.powi(3);
    Ok(DominanceResiduals {
        res_x: mismatch_bound * (stat_x / zeta + 2.0 * point.eps_x / z3) - sub_x,
        res_y: mismatch_bound * (stat_y / zeta + 2.0 * point.eps_y / z3) - sub_y,
        suboptimality_x: sub_x,
        suboptimality_y: sub_y,
        stationarity_x: stat_x,
        stationarity_y: stat_y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{prop31_game, random_game, RatioGame};
    use rand::SeedableRng;

    #[test]
    fn lexicographic_enumeration() {
        assert_eq!(nth_deterministic(3, 2, 0), vec![0, 0, 0]);
        assert_eq!(nth_deterministic(3, 2, 1), vec![0, 0, 1]);
        assert_eq!(nth_deterministic(3, 2, 6), vec![1, 1, 0]);
    }

    #[test]
    fn ratio_with_unsupported_state() {
        assert_eq!(
            mismatch_ratio(&[0.5, 0.5], &[1.0, 0.0], 1e-12),
            f64::INFINITY
        );
        assert_eq!(mismatch_ratio(&[1.0, 0.0], &[0.5, 0.0], 1e-12), 2.0);
    }

    #[test]
    fn single_state_mismatch_is_one() {
        let g = RatioGame::random(2, 3, 0.2, 4).to_game();
        let est =
            mismatch_lower_bound(&g, &[1.0], MismatchMode::Enumerate, 1 << 10, 1e-10, 0).unwrap();
        assert!((est.value - 1.0).abs() < 1e-12);
        let est = mismatch_lower_bound(&g, &[1.0], MismatchMode::Sample, 16, 1e-10, 0).unwrap();
        assert!((est.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn prop31_mismatch_is_finite() {
        let g = prop31_game(0.2).unwrap();
        let est = mismatch_lower_bound(
            &g,
            g.initial_dist(),
            MismatchMode::Enumerate,
            1 << 10,
            1e-10,
            0,
        )
        .unwrap();
        assert!(est.value.is_finite() && est.value >= 1.0, "{est:?}");
    }

    #[test]
    fn budget_is_enforced() {
        let g = prop31_game(0.2).unwrap();
        let err = mismatch_lower_bound(&g, g.initial_dist(), MismatchMode::Enumerate, 8, 1e-10, 0);
        assert!(matches!(
            err,
            Err(EvalError::BudgetExceeded {
                needed: 32,
                budget: 8
            })
        ));
    }

    #[test]
    fn best_response_point_has_nonnegative_x_residual() {
        let g = random_game(2, 2, 2, 0.2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = random_policy(2, 2, &mut rng);
        let br = best_response(&g, &y, Side::Min, 1e-12).unwrap();
        let pt = PolicyPoint::new(br.policy, y, 0.0, 0.0).unwrap();
        let res = gradient_dominance_residuals(&g, &pt, 1.0, 1e-12).unwrap();
        assert!(res.suboptimality_x.abs() < 1e-10);
        assert!(res.res_x >= -1e-10);
    }

    #[test]
    fn stationary_point_without_exploration_is_optimal() {
        // With ε_x = 0 a zero stationarity measure forces zero suboptimality.
        for seed in 0..10 {
            let g = random_game(2, 2, 2, 0.2, seed).unwrap();
            let sol = crate::eval::shapley_value(&g, 1e-12).unwrap();
            let pt = PolicyPoint::new(sol.x_eq, sol.y_eq, 0.0, 0.0).unwrap();
            let res = gradient_dominance_residuals(&g, &pt, 10.0, 1e-12).unwrap();
            assert!(res.stationarity_x < 1e-7, "{res:?}");
            assert!(res.suboptimality_x < 1e-7);
        }
    }
}
