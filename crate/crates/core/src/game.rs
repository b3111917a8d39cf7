//! Two-player zero-sum stochastic games with per-step stopping.
//!
//! A game is the tuple (S, A, B, P, R, ρ). Stopping is implicit: the mass
//! missing from a transition row `P[s][a][b][·]` is the probability that the
//! game ends after the pair `(a, b)` is played in `s`. The min-player picks
//! `a`, the max-player picks `b`, and both are scored by the total reward.

use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::table::Table;

/// Tolerance used for the simplex and ρ-normalization checks.
pub const SIMPLEX_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("malformed game file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("game fails validation:\n{0}")]
    Invalid(ValidationReport),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

/// Which player a quantity refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    /// Chooses `a ∈ A`, minimizes the value.
    Min,
    /// Chooses `b ∈ B`, maximizes the value.
    Max,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Min => Side::Max,
            Side::Max => Side::Min,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StochasticGame {
    num_states: usize,
    num_actions_min: usize,
    num_actions_max: usize,
    /// Flat `[s][a][b][s']`.
    transitions: Vec<f64>,
    /// Flat `[s][a][b]`.
    rewards: Vec<f64>,
    initial_dist: Vec<f64>,
}

impl StochasticGame {
    /// Builds a game from flat row-major tensors. Only shapes are checked
    /// here; use [`StochasticGame::validate`] for the model invariants.
    pub fn new(
        num_states: usize,
        num_actions_min: usize,
        num_actions_max: usize,
        transitions: Vec<f64>,
        rewards: Vec<f64>,
        initial_dist: Vec<f64>,
    ) -> Result<Self, GameError> {
        let (s, a, b) = (num_states, num_actions_min, num_actions_max);
        if s == 0 || a == 0 || b == 0 {
            return Err(GameError::Dimension(format!(
                "sizes must be positive, got S={s}, A={a}, B={b}"
            )));
        }
        if transitions.len() != s * a * b * s {
            return Err(GameError::Dimension(format!(
                "transitions has {} entries, expected S*A*B*S = {}",
                transitions.len(),
                s * a * b * s
            )));
        }
        if rewards.len() != s * a * b {
            return Err(GameError::Dimension(format!(
                "rewards has {} entries, expected S*A*B = {}",
                rewards.len(),
                s * a * b
            )));
        }
        if initial_dist.len() != s {
            return Err(GameError::Dimension(format!(
                "initial_dist has {} entries, expected S = {s}",
                initial_dist.len()
            )));
        }
        Ok(StochasticGame {
            num_states,
            num_actions_min,
            num_actions_max,
            transitions,
            rewards,
            initial_dist,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions_min(&self) -> usize {
        self.num_actions_min
    }

    pub fn num_actions_max(&self) -> usize {
        self.num_actions_max
    }

    pub fn num_actions(&self, side: Side) -> usize {
        match side {
            Side::Min => self.num_actions_min,
            Side::Max => self.num_actions_max,
        }
    }

    #[inline]
    fn sab(&self, s: usize, a: usize, b: usize) -> usize {
        (s * self.num_actions_min + a) * self.num_actions_max + b
    }

    /// Continuation row `P[s][a][b][·]`.
    #[inline]
    pub fn transition_row(&self, s: usize, a: usize, b: usize) -> &[f64] {
        let n = self.num_states;
        let i = self.sab(s, a, b) * n;
        &self.transitions[i..i + n]
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize, b: usize) -> f64 {
        self.rewards[self.sab(s, a, b)]
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    /// Same dynamics started from `rho` instead of the stored distribution.
    pub fn with_initial_dist(&self, rho: Vec<f64>) -> Result<Self, GameError> {
        StochasticGame::new(
            self.num_states,
            self.num_actions_min,
            self.num_actions_max,
            self.transitions.clone(),
            self.rewards.clone(),
            rho,
        )
    }

    /// Game in which `side`'s action `c` stands for the ε-greedy mixture
    /// `(1−ε)·e_c + ε·uniform`. Deterministic policies of the new game are
    /// the vertices of that player's ε-greedy policy class.
    pub fn with_exploration(&self, side: Side, eps: f64) -> Self {
        if eps == 0.0 {
            return self.clone();
        }
        let (ns, na, nb) = (self.num_states, self.num_actions_min, self.num_actions_max);
        let nc = self.num_actions(side) as f64;
        let mut transitions = vec![0.0; self.transitions.len()];
        let mut rewards = vec![0.0; self.rewards.len()];
        for s in 0..ns {
            for a in 0..na {
                for b in 0..nb {
                    let dst = self.sab(s, a, b);
                    for c in 0..self.num_actions(side) {
                        let (a2, b2) = match side {
                            Side::Min => (c, b),
                            Side::Max => (a, c),
                        };
                        let mut w = eps / nc;
                        if (side == Side::Min && c == a) || (side == Side::Max && c == b) {
                            w += 1.0 - eps;
                        }
                        let src = self.sab(s, a2, b2);
                        rewards[dst] += w * self.rewards[src];
                        for t in 0..ns {
                            transitions[dst * ns + t] += w * self.transitions[src * ns + t];
                        }
                    }
                }
            }
        }
        StochasticGame {
            transitions,
            rewards,
            ..self.clone()
        }
    }

    /// ζ_{s,a,b} = 1 − Σ_{s'} P[s][a][b][s'].
    pub fn stop_prob(&self, s: usize, a: usize, b: usize) -> f64 {
        1.0 - self.transition_row(s, a, b).iter().sum::<f64>()
    }

    /// ζ = min_{s,a,b} ζ_{s,a,b}.
    pub fn zeta(&self) -> f64 {
        let mut z = f64::INFINITY;
        for s in 0..self.num_states {
            for a in 0..self.num_actions_min {
                for b in 0..self.num_actions_max {
                    z = z.min(self.stop_prob(s, a, b));
                }
            }
        }
        z
    }

    /// Checks every model invariant and reports all violations found.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let (ns, na, nb) = (self.num_states, self.num_actions_min, self.num_actions_max);
        for s in 0..ns {
            for a in 0..na {
                for b in 0..nb {
                    let loc = format!("({s},{a},{b})");
                    let row = self.transition_row(s, a, b);
                    for (t, &p) in row.iter().enumerate() {
                        if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
                            violations.push(Violation::new(
                                format!("P{loc}->{t}"),
                                format!("transition probability {p} outside [0,1]"),
                            ));
                        }
                    }
                    let zeta = self.stop_prob(s, a, b);
                    if zeta == 0.0 {
                        violations.push(Violation::new(
                            loc.clone(),
                            format!("zero stopping mass at {loc}"),
                        ));
                    } else if !(zeta > 0.0) {
                        violations.push(Violation::new(
                            loc.clone(),
                            format!("continuation mass exceeds 1 at {loc} (stopping mass {zeta})"),
                        ));
                    }
                    let r = self.reward(s, a, b);
                    if !(r.is_finite() && r.abs() <= 1.0) {
                        violations.push(Violation::new(
                            format!("R{loc}"),
                            format!("reward {r} outside [-1,1]"),
                        ));
                    }
                }
            }
        }
        for (s, &p) in self.initial_dist.iter().enumerate() {
            if !(p.is_finite() && p >= 0.0) {
                violations.push(Violation::new(
                    format!("rho({s})"),
                    format!("initial probability {p} is negative or non-finite"),
                ));
            }
        }
        let total: f64 = self.initial_dist.iter().sum();
        if !((total - 1.0).abs() <= SIMPLEX_TOL) {
            violations.push(Violation::new(
                "rho".to_string(),
                format!("initial distribution sums to {total}, not 1"),
            ));
        }
        ValidationReport {
            ok: violations.is_empty(),
            zeta: self.zeta(),
            violations,
        }
    }

    /// Parses the JSON game format (shape errors included, invariants not).
    pub fn from_json_str(src: &str) -> Result<Self, GameError> {
        let file: GameFile = serde_json::from_str(src)?;
        file.into_game()
    }

    /// Loads a JSON game file and rejects games that fail validation.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, GameError> {
        let src = std::fs::read_to_string(path)?;
        let game = Self::from_json_str(&src)?;
        let report = game.validate();
        if report.ok {
            Ok(game)
        } else {
            Err(GameError::Invalid(report))
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&GameFile::from_game(self)).expect("game serializes")
    }
}

/// On-disk layout: nested arrays `[s][a][b][s']`, `[s][a][b]`, `[s]`.
#[derive(Debug, Serialize, Deserialize)]
struct GameFile {
    num_states: usize,
    num_actions_min: usize,
    num_actions_max: usize,
    transitions: Vec<Vec<Vec<Vec<f64>>>>,
    rewards: Vec<Vec<Vec<f64>>>,
    initial_dist: Vec<f64>,
}

impl GameFile {
    fn into_game(self) -> Result<StochasticGame, GameError> {
        let (ns, na, nb) = (self.num_states, self.num_actions_min, self.num_actions_max);
        let shape_err = |what: &str| {
            GameError::Dimension(format!("{what} does not match S={ns}, A={na}, B={nb}"))
        };
        if self.transitions.len() != ns
            || self.transitions.iter().any(|sa| {
                sa.len() != na
                    || sa
                        .iter()
                        .any(|ab| ab.len() != nb || ab.iter().any(|r| r.len() != ns))
            })
        {
            return Err(shape_err("transitions"));
        }
        if self.rewards.len() != ns
            || self
                .rewards
                .iter()
                .any(|sa| sa.len() != na || sa.iter().any(|ab| ab.len() != nb))
        {
            return Err(shape_err("rewards"));
        }
        let transitions = self
            .transitions
            .into_iter()
            .flatten()
            .flatten()
            .flatten()
            .collect();
        let rewards = self.rewards.into_iter().flatten().flatten().collect();
        StochasticGame::new(ns, na, nb, transitions, rewards, self.initial_dist)
    }

    fn from_game(g: &StochasticGame) -> Self {
        let (ns, na, nb) = (g.num_states, g.num_actions_min, g.num_actions_max);
        GameFile {
            num_states: ns,
            num_actions_min: na,
            num_actions_max: nb,
            transitions: (0..ns)
                .map(|s| {
                    (0..na)
                        .map(|a| {
                            (0..nb)
                                .map(|b| g.transition_row(s, a, b).to_vec())
                                .collect()
                        })
                        .collect()
                })
                .collect(),
            rewards: (0..ns)
                .map(|s| {
                    (0..na)
                        .map(|a| (0..nb).map(|b| g.reward(s, a, b)).collect())
                        .collect()
                })
                .collect(),
            initial_dist: g.initial_dist.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub location: String,
    pub description: String,
}

impl Violation {
    fn new(location: String, description: String) -> Self {
        Violation {
            location,
            description,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub ok: bool,
    /// Derived minimum stopping probability.
    pub zeta: f64,
    pub violations: Vec<Violation>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ok: {}", self.ok)?;
        writeln!(f, "zeta: {}", self.zeta)?;
        for v in &self.violations {
            writeln!(f, "violation at {}: {}", v.location, v.description)?;
        }
        Ok(())
    }
}

/// Policy parameters of both players plus their exploration levels.
///
/// The executed policy of the min-player is
/// `π_x(a|s) = (1 − ε_x)·x[s][a] + ε_x/A`, and likewise for the max-player.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyPoint {
    pub x: Table,
    pub y: Table,
    pub eps_x: f64,
    pub eps_y: f64,
}

impl PolicyPoint {
    pub fn new(x: Table, y: Table, eps_x: f64, eps_y: f64) -> Result<Self, GameError> {
        if x.rows() != y.rows() {
            return Err(GameError::Dimension(format!(
                "x has {} states but y has {}",
                x.rows(),
                y.rows()
            )));
        }
        if !x.is_stochastic(SIMPLEX_TOL) || !y.is_stochastic(SIMPLEX_TOL) {
            return Err(GameError::Parameter(
                "policy rows must lie on the simplex".into(),
            ));
        }
        for eps in [eps_x, eps_y] {
            if !(0.0..=1.0).contains(&eps) {
                return Err(GameError::Parameter(format!(
                    "exploration {eps} outside [0,1]"
                )));
            }
        }
        Ok(PolicyPoint { x, y, eps_x, eps_y })
    }

    /// Uniform parameters for `game` with the given exploration levels.
    pub fn uniform(game: &StochasticGame, eps_x: f64, eps_y: f64) -> Self {
        PolicyPoint {
            x: Table::uniform(game.num_states(), game.num_actions_min()),
            y: Table::uniform(game.num_states(), game.num_actions_max()),
            eps_x,
            eps_y,
        }
    }

    /// Parameters drawn uniformly from the product of simplices.
    pub fn random<R: Rng + ?Sized>(
        game: &StochasticGame,
        eps_x: f64,
        eps_y: f64,
        rng: &mut R,
    ) -> Self {
        PolicyPoint {
            x: random_policy(game.num_states(), game.num_actions_min(), rng),
            y: random_policy(game.num_states(), game.num_actions_max(), rng),
            eps_x,
            eps_y,
        }
    }

    pub fn params(&self, side: Side) -> &Table {
        match side {
            Side::Min => &self.x,
            Side::Max => &self.y,
        }
    }

    pub fn eps(&self, side: Side) -> f64 {
        match side {
            Side::Min => self.eps_x,
            Side::Max => self.eps_y,
        }
    }

    /// The policy a player actually executes.
    pub fn executed(&self, side: Side) -> Table {
        executed_policy(self.params(side), self.eps(side))
    }
}

/// ε-greedy map applied row-wise: `(1 − ε)·x + ε/|actions|`.
pub fn executed_policy(params: &Table, eps: f64) -> Table {
    let n = params.cols() as f64;
    let data = params
        .as_slice()
        .iter()
        .map(|&p| (1.0 - eps) * p + eps / n)
        .collect();
    Table::new(params.rows(), params.cols(), data)
}

/// Rows drawn uniformly on the simplex (flat Dirichlet).
pub fn random_policy<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Table {
    let mut t = Table::zeros(rows, cols);
    for r in 0..rows {
        let row = t.row_mut(r);
        for v in row.iter_mut() {
            *v = -(1.0 - rng.gen::<f64>()).ln();
        }
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= total);
    }
    t
}

/// Single-state game with value `⟨x,Ry⟩/⟨x,Sy⟩`; `S[a][b]` is the stopping
/// probability of the pair `(a, b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioGame {
    r: Table,
    s: Table,
}

impl RatioGame {
    pub fn new(r: Table, s: Table) -> Result<Self, GameError> {
        if r.rows() != s.rows() || r.cols() != s.cols() || r.rows() == 0 || r.cols() == 0 {
            return Err(GameError::Dimension(
                "R and S must be nonempty and of equal shape".into(),
            ));
        }
        if let Some(bad) = s.as_slice().iter().find(|&&v| !(v > 0.0 && v <= 1.0)) {
            return Err(GameError::Parameter(format!(
                "invalid stopping probability {bad}: entries of S must lie in (0,1]"
            )));
        }
        Ok(RatioGame { r, s })
    }

    pub fn from_rows(r: &[Vec<f64>], s: &[Vec<f64>]) -> Result<Self, GameError> {
        let r = Table::from_rows(r).ok_or_else(|| GameError::Dimension("ragged R".into()))?;
        let s = Table::from_rows(s).ok_or_else(|| GameError::Dimension("ragged S".into()))?;
        RatioGame::new(r, s)
    }

    pub fn reward_matrix(&self) -> &Table {
        &self.r
    }

    pub fn stop_matrix(&self) -> &Table {
        &self.s
    }

    pub fn num_actions_min(&self) -> usize {
        self.r.rows()
    }

    pub fn num_actions_max(&self) -> usize {
        self.r.cols()
    }

    pub fn num_actions(&self, side: Side) -> usize {
        match side {
            Side::Min => self.num_actions_min(),
            Side::Max => self.num_actions_max(),
        }
    }

    /// Smallest entry of S, which is the embedded game's ζ.
    pub fn zeta(&self) -> f64 {
        self.s
            .as_slice()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// `⟨x, M y⟩`.
    pub fn bilinear(m: &Table, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (a, &xa) in x.iter().enumerate() {
            for (b, &yb) in y.iter().enumerate() {
                acc += xa * m.get(a, b) * yb;
            }
        }
        acc
    }

    pub fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        Self::bilinear(&self.r, x, y) / Self::bilinear(&self.s, x, y)
    }

    /// Quotient-rule gradients `(∇_x V, ∇_y V)` of `⟨x,Ry⟩/⟨x,Sy⟩`:
    ///
    /// `∇_x V = (⟨x,Sy⟩·Ry − ⟨x,Ry⟩·Sy) / ⟨x,Sy⟩²`,
    /// `∇_y V = (⟨x,Sy⟩·Rᵀx − ⟨x,Ry⟩·Sᵀx) / ⟨x,Sy⟩²`.
    pub fn gradient(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (na, nb) = (self.num_actions_min(), self.num_actions_max());
        let num = Self::bilinear(&self.r, x, y);
        let den = Self::bilinear(&self.s, x, y);
        let d2 = den * den;
        let gx = (0..na)
            .map(|a| {
                let ry: f64 = (0..nb).map(|b| self.r.get(a, b) * y[b]).sum();
                let sy: f64 = (0..nb).map(|b| self.s.get(a, b) * y[b]).sum();
                (den * ry - num * sy) / d2
            })
            .collect();
        let gy = (0..nb)
            .map(|b| {
                let rx: f64 = (0..na).map(|a| self.r.get(a, b) * x[a]).sum();
                let sx: f64 = (0..na).map(|a| self.s.get(a, b) * x[a]).sum();
                (den * rx - num * sx) / d2
            })
            .collect();
        (gx, gy)
    }

    /// Reads a one-state game back as a ratio game. Returns `None` for
    /// multi-state games or games with a zero stopping probability.
    pub fn from_game(game: &StochasticGame) -> Option<Self> {
        if game.num_states() != 1 {
            return None;
        }
        let (na, nb) = (game.num_actions_min(), game.num_actions_max());
        let mut r = Table::zeros(na, nb);
        let mut s = Table::zeros(na, nb);
        for a in 0..na {
            for b in 0..nb {
                r.set(a, b, game.reward(0, a, b));
                s.set(a, b, game.stop_prob(0, a, b));
            }
        }
        RatioGame::new(r, s).ok()
    }

    /// Embeds the ratio game as a one-state stochastic game.
    pub fn to_game(&self) -> StochasticGame {
        let (na, nb) = (self.num_actions_min(), self.num_actions_max());
        let mut transitions = Vec::with_capacity(na * nb);
        let mut rewards = Vec::with_capacity(na * nb);
        for a in 0..na {
            for b in 0..nb {
                transitions.push(1.0 - self.s.get(a, b));
                rewards.push(self.r.get(a, b));
            }
        }
        StochasticGame::new(1, na, nb, transitions, rewards, vec![1.0]).expect("shapes agree")
    }

    /// Ratio game with i.i.d. rewards in [−1,1] and stopping entries in
    /// [zeta_min, 1].
    pub fn random(na: usize, nb: usize, zeta_min: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = (0..na * nb).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let s = (0..na * nb)
            .map(|_| rng.gen_range(zeta_min..=1.0))
            .collect();
        RatioGame::new(Table::new(na, nb, r), Table::new(na, nb, s)).expect("valid by construction")
    }
}

/// Free-function form of [`RatioGame::to_game`].
pub fn ratio_to_game(rg: &RatioGame) -> StochasticGame {
    rg.to_game()
}

/// Free-function form of [`StochasticGame::validate`].
pub fn validate_game(game: &StochasticGame) -> ValidationReport {
    game.validate()
}

/// The five-state game separating the minimax mismatch coefficient from
/// concentrability.
///
/// State 0 routes the action pair `(a, b)` to state `1 + 2a + b` (when the
/// game does not stop); states 1..=4 return to state 0. Rewards in state
/// `k ≥ 1` are `−k/4`: the min-player is paid `k` in the utility convention
/// and the value is scaled into [−1, 1]. The initial distribution puts no
/// mass on state 2, the destination of `(a, b) = (0, 1)`.
pub fn prop31_game(zeta: f64) -> Result<StochasticGame, GameError> {
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(GameError::Parameter(format!(
            "stopping probability {zeta} outside (0,1)"
        )));
    }
    let (ns, na, nb) = (5, 2, 2);
    let mut transitions = vec![0.0; ns * na * nb * ns];
    let mut rewards = vec![0.0; ns * na * nb];
    for s in 0..ns {
        for a in 0..na {
            for b in 0..nb {
                let sab = (s * na + a) * nb + b;
                let next = if s == 0 { 1 + 2 * a + b } else { 0 };
                transitions[sab * ns + next] = 1.0 - zeta;
                rewards[sab] = -(s as f64) / 4.0;
            }
        }
    }
    StochasticGame::new(
        ns,
        na,
        nb,
        transitions,
        rewards,
        vec![0.25, 0.25, 0.0, 0.25, 0.25],
    )
}

/// `R = [[−1, ε], [−ε, 0]]`, `S = [[s, s], [1, 1]]`, whose unique Nash
/// equilibrium `x* = y* = (0, 1)` violates the Minty condition.
pub fn prop51_ratio(eps: f64, s: f64) -> Result<RatioGame, GameError> {
    if !(s > 0.0 && s < 1.0) {
        return Err(GameError::Parameter(format!("s = {s} must lie in (0,1)")));
    }
    let bound = (1.0 - s) / (2.0 * s);
    if !(eps > 0.0 && eps < bound) {
        return Err(GameError::Parameter(format!(
            "eps = {eps} must lie in (0, (1-s)/(2s)) = (0, {bound})"
        )));
    }
    RatioGame::from_rows(
        &[vec![-1.0, eps], vec![-eps, 0.0]],
        &[vec![s, s], vec![1.0, 1.0]],
    )
}

/// First experimental ratio game (`prop51_ratio(0.1, 0.3)` as listed).
pub fn appd_game1() -> RatioGame {
    RatioGame::from_rows(
        &[vec![-1.0, 0.1], vec![-0.1, 0.0]],
        &[vec![0.3, 0.3], vec![1.0, 1.0]],
    )
    .expect("valid literal")
}

/// Second experimental ratio game, where the Minty condition fails locally.
pub fn appd_game2() -> RatioGame {
    RatioGame::from_rows(
        &[vec![-0.6, -0.3], vec![0.6, -0.3]],
        &[vec![0.9, 0.5], vec![0.8, 0.4]],
    )
    .expect("valid literal")
}

/// Random game, deterministic in `seed`.
///
/// Each row's stopping mass ζ_row is uniform on `[zeta_min, min(2·zeta_min, 1)]`
/// and the continuation mass `1 − ζ_row` is split in proportion to uniform
/// weights. Rewards are uniform on [−1, 1]; ρ is proportional to uniform
/// weights in (0, 1], so every state has positive initial mass.
pub fn random_game(
    num_states: usize,
    num_actions_min: usize,
    num_actions_max: usize,
    zeta_min: f64,
    seed: u64,
) -> Result<StochasticGame, GameError> {
    if num_states == 0 || num_actions_min == 0 || num_actions_max == 0 {
        return Err(GameError::Dimension("sizes must be positive".into()));
    }
    if !(zeta_min > 0.0 && zeta_min < 1.0) {
        return Err(GameError::Parameter(format!(
            "zeta_min = {zeta_min} outside (0,1)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = num_states * num_actions_min * num_actions_max;
    let zeta_hi = (2.0 * zeta_min).min(1.0);
    let mut transitions = Vec::with_capacity(rows * num_states);
    for _ in 0..rows {
        let zeta_row = rng.gen_range(zeta_min..=zeta_hi);
        let w: Vec<f64> = (0..num_states).map(|_| rng.gen::<f64>()).collect();
        let total: f64 = w.iter().sum();
        let mass = 1.0 - zeta_row;
        if total > 0.0 {
            // Scale then clip the row so rounding never eats into ζ_row.
            let mut row: Vec<f64> = w.iter().map(|v| mass * v / total).collect();
            let excess = row.iter().sum::<f64>() - mass;
            if excess > 0.0 {
                let i = (0..num_states)
                    .max_by(|&i, &j| row[i].total_cmp(&row[j]))
                    .expect("nonempty");
                row[i] = (row[i] - excess).max(0.0);
            }
            transitions.extend(row);
        } else {
            transitions.extend(std::iter::repeat_n(0.0, num_states));
        }
    }
    let rewards = (0..rows).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let w: Vec<f64> = (0..num_states).map(|_| 1.0 - rng.gen::<f64>()).collect();
    let total: f64 = w.iter().sum();
    let rho = w.iter().map(|v| v / total).collect();
    StochasticGame::new(
        num_states,
        num_actions_min,
        num_actions_max,
        transitions,
        rewards,
        rho,
    )
}
