//! Exact evaluation of policy pairs.
//!
//! For fixed executed policies the game is a Markov chain with
//! substochastic kernel `P^π`; values and occupancies are the solutions of
//! `(I − P^π) v = r^π` and `(I − P^π)ᵀ d̃ = ρ`. Row sums of `P^π` are at most
//! `1 − ζ`, so both systems are nonsingular for every valid game.

mod mismatch;
mod response;

pub use mismatch::{
    best_response_vertices, deterministic_policy, gradient_dominance_residuals,
    mismatch_lower_bound, mismatch_ratio, pointwise_mismatch, policy_count, DominanceResiduals,
    MismatchEstimate, MismatchMode,
};
pub use response::{
    best_response, nash_gaps, shapley_value, BestResponse, NashGapEvaluator, NashGaps,
    ShapleySolution,
};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::game::{PolicyPoint, Side, StochasticGame};
use crate::matrix_game::MatrixGameError;
use crate::table::Table;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("internal invariant violated: linear system (I - P^pi) is singular; is zeta > 0?")]
    Singular,
    #[error("policy shape {rows}x{cols} does not match the game (expected {states}x{actions})")]
    Shape {
        rows: usize,
        cols: usize,
        states: usize,
        actions: usize,
    },
    #[error("game has no positive stopping probability (zeta = {0})")]
    NoStopping(f64),
    #[error(
        "policy pairs differ for both players; performance difference needs a unilateral change"
    )]
    NotUnilateral,
    #[error("enumeration needs {needed} deterministic policies but the budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error(transparent)]
    MatrixGame(#[from] MatrixGameError),
}

/// Values of a policy pair.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalBundle {
    num_actions_min: usize,
    num_actions_max: usize,
    /// Per-state values `V_s`.
    pub v: Vec<f64>,
    /// `Q(s,a,b)` flattened `[s][a][b]`.
    pub q: Vec<f64>,
    /// `A(s,a,b) = Q(s,a,b) − V_s`, same layout as `q`.
    pub adv: Vec<f64>,
    /// `V_ρ = ⟨ρ, v⟩`.
    pub v_rho: f64,
}

impl EvalBundle {
    #[inline]
    fn idx(&self, s: usize, a: usize, b: usize) -> usize {
        (s * self.num_actions_min + a) * self.num_actions_max + b
    }

    #[inline]
    pub fn q(&self, s: usize, a: usize, b: usize) -> f64 {
        self.q[self.idx(s, a, b)]
    }

    #[inline]
    pub fn adv(&self, s: usize, a: usize, b: usize) -> f64 {
        self.adv[self.idx(s, a, b)]
    }
}

/// Occupancy of a policy pair.
#[derive(Clone, Debug, PartialEq)]
pub struct VisitationResult {
    /// Unnormalized `d̃(s) = Σ_t Pr(s_t = s)`.
    pub dtilde: Vec<f64>,
    /// `d = d̃ / total`.
    pub d: Vec<f64>,
    /// Expected episode length `E[T + 1] = Σ_s d̃(s)`.
    pub total: f64,
}

/// Where an episode starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Start {
    Rho,
    State(usize),
}

pub(crate) fn check_policy(game: &StochasticGame, pi: &Table, side: Side) -> Result<(), EvalError> {
    let (states, actions) = (game.num_states(), game.num_actions(side));
    if pi.rows() != states || pi.cols() != actions {
        return Err(EvalError::Shape {
            rows: pi.rows(),
            cols: pi.cols(),
            states,
            actions,
        });
    }
    Ok(())
}

/// `P^π(s'|s)` and `r^π(s)` under the executed policies.
pub(crate) fn induced_chain(
    game: &StochasticGame,
    pi_min: &Table,
    pi_max: &Table,
) -> (DMatrix<f64>, DVector<f64>) {
    let n = game.num_states();
    let mut p = DMatrix::zeros(n, n);
    let mut r = DVector::zeros(n);
    for s in 0..n {
        for a in 0..game.num_actions_min() {
            let pa = pi_min.get(s, a);
            if pa == 0.0 {
                continue;
            }
            for b in 0..game.num_actions_max() {
                let w = pa * pi_max.get(s, b);
                if w == 0.0 {
                    continue;
                }
                r[s] += w * game.reward(s, a, b);
                for (t, &pt) in game.transition_row(s, a, b).iter().enumerate() {
                    p[(s, t)] += w * pt;
                }
            }
        }
    }
    (p, r)
}

fn solve(mut m: DMatrix<f64>, rhs: DVector<f64>) -> Result<DVector<f64>, EvalError> {
    // m ← I − P
    m.neg_mut();
    for i in 0..m.nrows() {
        m[(i, i)] += 1.0;
    }
    let sol = m.lu().solve(&rhs).ok_or(EvalError::Singular)?;
    if sol.iter().all(|v| v.is_finite()) {
        Ok(sol)
    } else {
        Err(EvalError::Singular)
    }
}

/// Per-state values of executed policies: `v = (I − P^π)⁻¹ r^π`.
pub fn state_values(
    game: &StochasticGame,
    pi_min: &Table,
    pi_max: &Table,
) -> Result<Vec<f64>, EvalError> {
    check_policy(game, pi_min, Side::Min)?;
    check_policy(game, pi_max, Side::Max)?;
    let (p, r) = induced_chain(game, pi_min, pi_max);
    Ok(solve(p, r)?.iter().copied().collect())
}

/// ρ-weighted value of executed policies.
pub fn policy_value(
    game: &StochasticGame,
    pi_min: &Table,
    pi_max: &Table,
) -> Result<f64, EvalError> {
    let v = state_values(game, pi_min, pi_max)?;
    Ok(crate::table::dot(game.initial_dist(), &v))
}

/// Values, Q, and advantages of executed policies.
pub fn evaluate_policies(
    game: &StochasticGame,
    pi_min: &Table,
    pi_max: &Table,
) -> Result<EvalBundle, EvalError> {
    let v = state_values(game, pi_min, pi_max)?;
    let (ns, na, nb) = (
        game.num_states(),
        game.num_actions_min(),
        game.num_actions_max(),
    );
    let mut q = Vec::with_capacity(ns * na * nb);
    let mut adv = Vec::with_capacity(ns * na * nb);
    for s in 0..ns {
        for a in 0..na {
            for b in 0..nb {
                let cont: f64 = crate::table::dot(game.transition_row(s, a, b), &v);
                let qv = game.reward(s, a, b) + cont;
                q.push(qv);
                adv.push(qv - v[s]);
            }
        }
    }
    let v_rho = crate::table::dot(game.initial_dist(), &v);
    Ok(EvalBundle {
        num_actions_min: na,
        num_actions_max: nb,
        v,
        q,
        adv,
        v_rho,
    })
}

/// [`evaluate_policies`] at the executed policies of `point`.
pub fn value_bundle(game: &StochasticGame, point: &PolicyPoint) -> Result<EvalBundle, EvalError> {
    evaluate_policies(game, &point.executed(Side::Min), &point.executed(Side::Max))
}

/// Occupancy of executed policies: `d̃ᵀ = startᵀ (I − P^π)⁻¹`.
pub fn visitation_of(
    game: &StochasticGame,
    pi_min: &Table,
    pi_max: &Table,
    start: Start,
) -> Result<VisitationResult, EvalError> {
    check_policy(game, pi_min, Side::Min)?;
    check_policy(game, pi_max, Side::Max)?;
    let n = game.num_states();
    let init = match start {
        Start::Rho => DVector::from_column_slice(game.initial_dist()),
        Start::State(s) => {
            let mut e = DVector::zeros(n);
            e[s] = 1.0;
            e
        }
    };
    let (p, _) = induced_chain(game, pi_min, pi_max);
    let dtilde: Vec<f64> = solve(p.transpose(), init)?
        .iter()
        .map(|v| v.max(0.0))
        .collect();
    let total: f64 = dtilde.iter().sum();
    let d = dtilde.iter().map(|v| v / total).collect();
    Ok(VisitationResult { dtilde, d, total })
}

/// [`visitation_of`] at the executed policies of `point`.
pub fn visitation(
    game: &StochasticGame,
    point: &PolicyPoint,
    start: Start,
) -> Result<VisitationResult, EvalError> {
    visitation_of(
        game,
        &point.executed(Side::Min),
        &point.executed(Side::Max),
        start,
    )
}

/// Gradients of `V_ρ` with respect to the policy parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientPair {
    /// `∂V_ρ/∂x[s][a]`; the min-player descends along it.
    pub x: Table,
    /// `∂V_ρ/∂y[s][b]`; the max-player ascends along it.
    pub y: Table,
}

/// Exact gradients under ε-greedy direct parameterization:
///
/// `∂V_ρ/∂x[s][a] = (1 − ε_x) · d̃_ρ(s) · E_{b∼π_y(·|s)} Q(s,a,b)`
///
/// and symmetrically for `y`.
pub fn exact_gradient(
    game: &StochasticGame,
    point: &PolicyPoint,
) -> Result<GradientPair, EvalError> {
    let pi_x = point.executed(Side::Min);
    let pi_y = point.executed(Side::Max);
    let bundle = evaluate_policies(game, &pi_x, &pi_y)?;
    let occ = visitation_of(game, &pi_x, &pi_y, Start::Rho)?;
    let (ns, na, nb) = (
        game.num_states(),
        game.num_actions_min(),
        game.num_actions_max(),
    );
    let mut gx = Table::zeros(ns, na);
    let mut gy = Table::zeros(ns, nb);
    for s in 0..ns {
        let wx = (1.0 - point.eps_x) * occ.dtilde[s];
        let wy = (1.0 - point.eps_y) * occ.dtilde[s];
        for a in 0..na {
            for b in 0..nb {
                let q = bundle.q(s, a, b);
                gx.add(s, a, wx * pi_y.get(s, b) * q);
                gy.add(s, b, wy * pi_x.get(s, a) * q);
            }
        }
    }
    Ok(GradientPair { x: gx, y: gy })
}

/// Coordinatewise derivative of the trajectory measure in `E[R_T]`, the
/// quantity the full-return REINFORCE estimator is unbiased for. Row `s`
/// equals the row of [`exact_gradient`] shifted by `(1 − ε)·u(s)`, where
/// `u(s)` is the expected reward collected before visits to `s`:
///
/// `uᵀ = wᵀ(I − P^π)⁻¹`, `w(s') = Σ_s d̃(s) Σ_{a,b} π_x(a|s) π_y(b|s) R(s,a,b) P(s'|s,a,b)`.
///
/// Both gradients agree along directions tangent to the simplices.
pub fn trajectory_gradient(
    game: &StochasticGame,
    point: &PolicyPoint,
) -> Result<GradientPair, EvalError> {
    let mut grad = exact_gradient(game, point)?;
    let pi_x = point.executed(Side::Min);
    let pi_y = point.executed(Side::Max);
    let occ = visitation_of(game, &pi_x, &pi_y, Start::Rho)?;
    let (ns, na, nb) = (
        game.num_states(),
        game.num_actions_min(),
        game.num_actions_max(),
    );
    let mut w = DVector::zeros(ns);
    for s in 0..ns {
        for a in 0..na {
            for b in 0..nb {
                let mass = occ.dtilde[s] * pi_x.get(s, a) * pi_y.get(s, b) * game.reward(s, a, b);
                for (t, &pt) in game.transition_row(s, a, b).iter().enumerate() {
                    w[t] += mass * pt;
                }
            }
        }
    }
    let (p, _) = induced_chain(game, &pi_x, &pi_y);
    let u = solve(p.transpose(), w)?;
    for s in 0..ns {
        grad.x
            .row_mut(s)
            .iter_mut()
            .for_each(|g| *g += (1.0 - point.eps_x) * u[s]);
        grad.y
            .row_mut(s)
            .iter_mut()
            .for_each(|g| *g += (1.0 - point.eps_y) * u[s]);
    }
    Ok(grad)
}

/// Residual of the performance difference identity for a unilateral
/// deviation. `first` and `second` are (min, max) executed-policy pairs that
/// share one player's policy.
///
/// Min-player deviation (shared `π_2`):
/// `V(π_1,π_2) − V(π_1',π_2) = Σ_s d̃^{π_1,π_2}(s) E_{a∼π_1,b∼π_2} A^{π_1',π_2}(s,a,b)`.
/// Max-player deviation (shared `π_1`) uses `A^{π_1,π_2'}` instead.
pub fn performance_difference_residual(
    game: &StochasticGame,
    first: (&Table, &Table),
    second: (&Table, &Table),
) -> Result<f64, EvalError> {
    let (p1, p2) = first;
    let (q1, q2) = second;
    if p2 != q2 && p1 != q1 {
        return Err(EvalError::NotUnilateral);
    }
    let lhs = policy_value(game, p1, p2)? - policy_value(game, q1, q2)?;
    let occ = visitation_of(game, p1, p2, Start::Rho)?;
    let other = evaluate_policies(game, q1, q2)?;
    let mut rhs = 0.0;
    for s in 0..game.num_states() {
        let mut e = 0.0;
        for a in 0..game.num_actions_min() {
            for b in 0..game.num_actions_max() {
                e += p1.get(s, a) * p2.get(s, b) * other.adv(s, a, b);
            }
        }
        rhs += occ.dtilde[s] * e;
    }
    Ok((lhs - rhs).abs())
}

/// Closed-form regularity bounds of `V_ρ` under ε-greedy direct
/// parameterization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularityConstants {
    /// Gradient Lipschitz constant `4(A∨B)/ζ³`.
    pub ell: f64,
    /// Value Lipschitz constant `2√(A∨B)/ζ²`.
    pub lip: f64,
    /// REINFORCE variance bound `24A²/(ε_x ζ⁴)`.
    pub var_x: f64,
    /// `24B²/(ε_y ζ⁴)`.
    pub var_y: f64,
    /// Gradient-dominance modulus `ζ/C_G`.
    pub mu: f64,
}

pub fn regularity_constants(
    game: &StochasticGame,
    eps_x: f64,
    eps_y: f64,
    mismatch: f64,
) -> RegularityConstants {
    regularity_from_sizes(
        game.num_actions_min(),
        game.num_actions_max(),
        game.zeta(),
        eps_x,
        eps_y,
        mismatch,
    )
}

pub fn regularity_from_sizes(
    na: usize,
    nb: usize,
    zeta: f64,
    eps_x: f64,
    eps_y: f64,
    mismatch: f64,
) -> RegularityConstants {
    let amax = na.max(nb) as f64;
    let (na, nb) = (na as f64, nb as f64);
    RegularityConstants {
        ell: 4.0 * amax / zeta.powi(3),
        lip: 2.0 * amax.sqrt() / zeta.powi(2),
        var_x: 24.0 * na * na / (eps_x * zeta.powi(4)),
        var_y: 24.0 * nb * nb / (eps_y * zeta.powi(4)),
        mu: zeta / mismatch,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{appd_game1, prop31_game, random_game, RatioGame};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_shot_game() -> StochasticGame {
        // ζ ≡ 1: every continuation row is empty.
        StochasticGame::new(
            2,
            2,
            2,
            vec![0.0; 16],
            vec![0.5, -0.25, 1.0, 0.0, -1.0, 0.75, 0.25, 0.5],
            vec![0.4, 0.6],
        )
        .unwrap()
    }

    #[test]
    fn one_step_game_values_are_expected_rewards() {
        let g = one_shot_game();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pt = PolicyPoint::random(&g, 0.0, 0.0, &mut rng);
        let bundle = value_bundle(&g, &pt).unwrap();
        for s in 0..2 {
            let mut e = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    assert_eq!(bundle.q(s, a, b), g.reward(s, a, b));
                    e += pt.x.get(s, a) * pt.y.get(s, b) * g.reward(s, a, b);
                }
            }
            assert!((bundle.v[s] - e).abs() < 1e-15);
        }
        let occ = visitation(&g, &pt, Start::Rho).unwrap();
        assert_eq!(occ.dtilde, g.initial_dist());
        assert!((occ.total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ratio_value_at_pure_pair() {
        let g = appd_game1().to_game();
        let x = Table::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let pt = PolicyPoint::new(x.clone(), x, 0.0, 0.0).unwrap();
        let v = value_bundle(&g, &pt).unwrap().v_rho;
        assert!((v + 1.0 / 0.3).abs() < 1e-12);
    }

    #[test]
    fn single_state_occupancy_is_geometric() {
        let p = 0.15;
        let rg = RatioGame::from_rows(&[vec![0.0]], &[vec![p]]).unwrap();
        let g = rg.to_game();
        let pt = PolicyPoint::uniform(&g, 0.0, 0.0);
        let occ = visitation(&g, &pt, Start::Rho).unwrap();
        assert!((occ.total - 1.0 / p).abs() < 1e-12);
    }

    #[test]
    fn prop31_witness_visits_unsupported_state() {
        let g = prop31_game(0.2).unwrap();
        let pi1 = Table::deterministic(2, &[0, 0, 0, 0, 0]);
        let pi2 = Table::deterministic(2, &[1, 0, 0, 0, 0]);
        let occ = visitation_of(&g, &pi1, &pi2, Start::Rho).unwrap();
        assert!(occ.d[2] > 0.0);
        assert_eq!(g.initial_dist()[2], 0.0);
    }

    #[test]
    fn bellman_and_occupancy_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..20 {
            let g = random_game(4, 3, 2, 0.1, seed).unwrap();
            let pt = PolicyPoint::random(&g, 0.1, 0.2, &mut rng);
            let (pi_x, pi_y) = (pt.executed(Side::Min), pt.executed(Side::Max));
            let bundle = evaluate_policies(&g, &pi_x, &pi_y).unwrap();
            let (p, r) = induced_chain(&g, &pi_x, &pi_y);
            let v = DVector::from_column_slice(&bundle.v);
            let resid = (&r + &p * &v - &v).amax();
            assert!(resid < 1e-10, "Bellman residual {resid}");
            let occ = visitation(&g, &pt, Start::Rho).unwrap();
            let via_occ = crate::table::dot(&occ.dtilde, r.as_slice());
            assert!((via_occ - bundle.v_rho).abs() < 1e-10);
            assert!(occ.total >= 1.0 - 1e-12 && occ.total <= 1.0 / g.zeta() + 1e-9);
            for s in 0..4 {
                assert!(occ.dtilde[s] >= g.initial_dist()[s] - 1e-12);
                assert!(bundle.v[s].abs() <= 1.0 / g.zeta() + 1e-9);
            }
        }
    }

    #[test]
    fn zero_rewards_give_zero_gradient() {
        let g = StochasticGame::new(1, 2, 2, vec![0.5; 4], vec![0.0; 4], vec![1.0]).unwrap();
        let pt = PolicyPoint::uniform(&g, 0.1, 0.1);
        let grad = exact_gradient(&g, &pt).unwrap();
        assert_eq!(grad.x.norm(), 0.0);
        assert_eq!(grad.y.norm(), 0.0);
    }

    #[test]
    fn performance_difference_rejects_bilateral_change() {
        let g = random_game(2, 2, 2, 0.2, 1).unwrap();
        let u = Table::uniform(2, 2);
        let d = Table::deterministic(2, &[0, 1]);
        assert!(matches!(
            performance_difference_residual(&g, (&u, &u), (&d, &d)),
            Err(EvalError::NotUnilateral)
        ));
        assert!(performance_difference_residual(&g, (&u, &d), (&u, &d)).unwrap() < 1e-14);
    }

    #[test]
    fn prop31_performance_difference() {
        let g = prop31_game(0.2).unwrap();
        let u = Table::uniform(5, 2);
        let det = Table::deterministic(2, &[1, 0, 1, 0, 1]);
        let r = performance_difference_residual(&g, (&u, &u), (&det, &u)).unwrap();
        assert!(r < 1e-10);
    }

    #[test]
    fn regularity_formulas() {
        let c = regularity_from_sizes(2, 2, 1.0, 0.1, 0.1, 1.0);
        assert_eq!(c.ell, 8.0);
        assert!((c.lip - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        let c = regularity_from_sizes(2, 2, 0.5, 0.1, 0.1, 2.0);
        assert!((c.var_x - 15360.0).abs() < 1e-9);
        assert_eq!(c.mu, 0.25);
        let half = regularity_from_sizes(2, 2, 0.25, 0.1, 0.1, 2.0);
        assert!(half.ell >= 8.0 * c.ell - 1e-9);
        assert!(half.lip > c.lip && half.var_x > c.var_x && half.mu < c.mu);
    }
}
