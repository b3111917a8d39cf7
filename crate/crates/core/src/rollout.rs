//! Episode sampling and REINFORCE gradient estimates.
//!
//! Each episode draws from its own counter-based ChaCha stream indexed by the
//! episode number, so batch statistics do not depend on how work is split
//! across threads.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::eval::{exact_gradient, EvalError};
use crate::game::{PolicyPoint, Side, StochasticGame};
use crate::table::{CompensatedSum, Table};

/// A reproducible random stream: identical `(seed, stream_id)` pairs give
/// identical draws.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub state: usize,
    pub a: usize,
    pub b: usize,
    pub reward: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    pub stopped: bool,
    pub truncated: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Total undiscounted reward `R_T`.
    pub fn episode_return(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }
}

/// Smallest cap with truncation probability at most `1e-9`.
pub fn default_cap(zeta: f64) -> usize {
    if zeta >= 1.0 {
        return 1;
    }
    ((1e-9f64).ln() / (1.0 - zeta).ln()).ceil().max(1.0) as usize
}

/// Index drawn from `probs` by inverse CDF; `None` when `u` lands in the
/// residual mass `1 − Σ probs`.
fn draw(probs: &[f64], u: f64) -> Option<usize> {
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return Some(i);
        }
    }
    None
}

fn draw_full(probs: &[f64], u: f64) -> usize {
    draw(probs, u).unwrap_or_else(|| probs.iter().rposition(|&p| p > 0.0).unwrap_or(0))
}

/// Plays one episode with executed policies `pi_min`, `pi_max`.
pub fn sample_episode_with<R: Rng + ?Sized>(
    game: &StochasticGame,
    pi_min: &Table,
    pi_max: &Table,
    rng: &mut R,
    cap: usize,
) -> Trajectory {
    assert!(cap >= 1, "episode cap must be positive");
    let mut steps = Vec::new();
    let mut s = draw_full(game.initial_dist(), rng.gen());
    loop {
        let a = draw_full(pi_min.row(s), rng.gen());
        let b = draw_full(pi_max.row(s), rng.gen());
        steps.push(Step {
            state: s,
            a,
            b,
            reward: game.reward(s, a, b),
        });
        let next = draw(game.transition_row(s, a, b), rng.gen());
        match next {
            None => {
                return Trajectory {
                    steps,
                    stopped: true,
                    truncated: false,
                }
            }
            Some(_) if steps.len() >= cap => {
                return Trajectory {
                    steps,
                    stopped: false,
                    truncated: true,
                };
            }
            Some(n) => s = n,
        }
    }
}

pub fn sample_episode<R: Rng + ?Sized>(
    game: &StochasticGame,
    point: &PolicyPoint,
    rng: &mut R,
    cap: usize,
) -> Trajectory {
    sample_episode_with(
        game,
        &point.executed(Side::Min),
        &point.executed(Side::Max),
        rng,
        cap,
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradEstimate {
    pub side: Side,
    pub grad: Table,
    pub episode_return: f64,
    /// Set when the trajectory was truncated.
    pub biased: bool,
}

/// `ĝ[s][a] = R_T · Σ_{t: s_t=s, a_t=a} (1−ε)/π(a|s)`.
pub fn reinforce_estimate_with(
    traj: &Trajectory,
    executed: &Table,
    eps: f64,
    side: Side,
) -> GradEstimate {
    let ret = traj.episode_return();
    let mut grad = Table::zeros(executed.rows(), executed.cols());
    if ret != 0.0 {
        for st in &traj.steps {
            let c = match side {
                Side::Min => st.a,
                Side::Max => st.b,
            };
            grad.add(st.state, c, (1.0 - eps) / executed.get(st.state, c));
        }
        grad.as_mut_slice().iter_mut().for_each(|g| *g *= ret);
    }
    GradEstimate {
        side,
        grad,
        episode_return: ret,
        biased: traj.truncated,
    }
}

pub fn reinforce_estimate(traj: &Trajectory, point: &PolicyPoint, side: Side) -> GradEstimate {
    reinforce_estimate_with(traj, &point.executed(side), point.eps(side), side)
}

/// Monte Carlo summary of REINFORCE estimates at one policy point.
#[derive(Clone, Debug)]
pub struct GradientStats {
    pub n_episodes: usize,
    pub truncated: usize,
    pub exact_x: Table,
    pub exact_y: Table,
    pub mean_x: Table,
    pub mean_y: Table,
    /// Standard error of each coordinate of the mean.
    pub se_x: Table,
    pub se_y: Table,
    /// `(mean − exact) / se`, zero where the standard error vanishes and the
    /// mean is exact.
    pub bias_z_x: Table,
    pub bias_z_y: Table,
    /// Empirical `E‖ĝ − ∇V‖²`.
    pub sq_err_x: f64,
    pub sq_err_y: f64,
    /// Standard errors of the two second-moment estimates.
    pub sq_err_se_x: f64,
    pub sq_err_se_y: f64,
}

impl GradientStats {
    pub fn max_abs_z(&self) -> f64 {
        self.bias_z_x
            .as_slice()
            .iter()
            .chain(self.bias_z_y.as_slice())
            .fold(0.0, |m, z| m.max(z.abs()))
    }
}

const CHUNK: usize = 1024;

#[derive(Clone)]
struct Accum {
    sum: Vec<CompensatedSum>,
    sum_sq: Vec<CompensatedSum>,
    err: [CompensatedSum; 2],
    err_sq: [CompensatedSum; 2],
    truncated: usize,
}

impl Accum {
    fn new(len: usize) -> Self {
        Accum {
            sum: vec![CompensatedSum::default(); len],
            sum_sq: vec![CompensatedSum::default(); len],
            err: Default::default(),
            err_sq: Default::default(),
            truncated: 0,
        }
    }

    fn merge(&mut self, other: &Accum) {
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            a.merge(b);
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            a.merge(b);
        }
        for k in 0..2 {
            self.err[k].merge(&other.err[k]);
            self.err_sq[k].merge(&other.err_sq[k]);
        }
        self.truncated += other.truncated;
    }
}

/// Samples `n_episodes` episodes (episode `i` uses stream `i` of `seed`) and
/// compares the REINFORCE estimates of both players with the exact gradient.
pub fn gradient_stats(
    game: &StochasticGame,
    point: &PolicyPoint,
    n_episodes: usize,
    seed: u64,
    cap: usize,
) -> Result<GradientStats, EvalError> {
    let exact = exact_gradient(game, point)?;
    let pi_x = point.executed(Side::Min);
    let pi_y = point.executed(Side::Max);
    let nx = exact.x.as_slice().len();
    let ny = exact.y.as_slice().len();

    let chunks: Vec<Accum> = (0..n_episodes.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = Accum::new(nx + ny);
            for i in c * CHUNK..((c + 1) * CHUNK).min(n_episodes) {
                let mut rng = RngStream::new(seed, i as u64).rng();
                let traj = sample_episode_with(game, &pi_x, &pi_y, &mut rng, cap);
                acc.truncated += traj.truncated as usize;
                let gx = reinforce_estimate_with(&traj, &pi_x, point.eps_x, Side::Min);
                let gy = reinforce_estimate_with(&traj, &pi_y, point.eps_y, Side::Max);
                for (k, (g, e)) in [(&gx.grad, &exact.x), (&gy.grad, &exact.y)]
                    .into_iter()
                    .enumerate()
                {
                    let off = if k == 0 { 0 } else { nx };
                    let mut err = 0.0;
                    for (j, (&gv, &ev)) in g.as_slice().iter().zip(e.as_slice()).enumerate() {
                        acc.sum[off + j].add(gv);
                        acc.sum_sq[off + j].add(gv * gv);
                        err += (gv - ev) * (gv - ev);
                    }
                    acc.err[k].add(err);
                    acc.err_sq[k].add(err * err);
                }
            }
            acc
        })
        .collect();
    let mut total = Accum::new(nx + ny);
    for c in &chunks {
        total.merge(c);
    }

    let n = n_episodes as f64;
    let mut mean = vec![0.0; nx + ny];
    let mut se = vec![0.0; nx + ny];
    let mut z = vec![0.0; nx + ny];
    let exact_flat: Vec<f64> = exact
        .x
        .as_slice()
        .iter()
        .chain(exact.y.as_slice())
        .copied()
        .collect();
    for j in 0..nx + ny {
        let m = total.sum[j].value() / n;
        let var = (total.sum_sq[j].value() / n - m * m).max(0.0) * n / (n - 1.0);
        let s = (var / n).sqrt();
        mean[j] = m;
        se[j] = s;
        let diff = m - exact_flat[j];
        z[j] = if s > 0.0 {
            diff / s
        } else if diff.abs() <= 1e-12 * (1.0 + exact_flat[j].abs()) {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        };
    }
    let moment = |k: usize| {
        let m = total.err[k].value() / n;
        let var = (total.err_sq[k].value() / n - m * m).max(0.0) * n / (n - 1.0);
        (m, (var / n).sqrt())
    };
    let (sq_err_x, sq_err_se_x) = moment(0);
    let (sq_err_y, sq_err_se_y) = moment(1);
    let (rx, cx) = (exact.x.rows(), exact.x.cols());
    let (ry, cy) = (exact.y.rows(), exact.y.cols());
    Ok(GradientStats {
        n_episodes,
        truncated: total.truncated,
        mean_x: Table::new(rx, cx, mean[..nx].to_vec()),
        mean_y: Table::new(ry, cy, mean[nx..].to_vec()),
        se_x: Table::new(rx, cx, se[..nx].to_vec()),
        se_y: Table::new(ry, cy, se[nx..].to_vec()),
        bias_z_x: Table::new(rx, cx, z[..nx].to_vec()),
        bias_z_y: Table::new(ry, cy, z[nx..].to_vec()),
        exact_x: exact.x,
        exact_y: exact.y,
        sq_err_x,
        sq_err_y,
        sq_err_se_x,
        sq_err_se_y,
    })
}

/// Writes one episode per line: steps separated by tabs, each step written
/// as `t,s,a,b,r`.
pub fn write_trajectories<W: Write>(out: &mut W, trajectories: &[Trajectory]) -> io::Result<()> {
    for traj in trajectories {
        let line: Vec<String> = traj
            .steps
            .iter()
            .enumerate()
            .map(|(t, st)| format!("{t},{},{},{},{}", st.state, st.a, st.b, st.reward))
            .collect();
        writeln!(out, "{}", line.join("\t"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::random_game;

    #[test]
    fn cap_formula() {
        assert_eq!(default_cap(1.0), 1);
        let cap = default_cap(0.1);
        assert!(0.9f64.powi(cap as i32) <= 1e-9);
        assert!(0.9f64.powi(cap as i32 - 1) > 1e-9);
    }

    #[test]
    fn one_shot_games_stop_immediately() {
        let g = StochasticGame::new(1, 2, 2, vec![0.0; 4], vec![0.5; 4], vec![1.0]).unwrap();
        let pt = PolicyPoint::uniform(&g, 0.0, 0.0);
        let mut rng = RngStream::new(3, 0).rng();
        for _ in 0..100 {
            let t = sample_episode(&g, &pt, &mut rng, 5);
            assert_eq!(t.len(), 1);
            assert!(t.stopped && !t.truncated);
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let g = random_game(2, 2, 2, 0.1, 0).unwrap();
        let pt = PolicyPoint::uniform(&g, 0.1, 0.1);
        let a = sample_episode(&g, &pt, &mut RngStream::new(1, 7).rng(), 1000);
        let b = sample_episode(&g, &pt, &mut RngStream::new(1, 7).rng(), 1000);
        assert_eq!(a, b);
        let differ =
            (0..20).any(|k| sample_episode(&g, &pt, &mut RngStream::new(1, k).rng(), 1000) != a);
        assert!(differ);
    }

    #[test]
    fn single_step_estimate_substitutes_formula() {
        let x = Table::from_rows(&[vec![0.25, 0.75]]).unwrap();
        let traj = Trajectory {
            steps: vec![Step {
                state: 0,
                a: 1,
                b: 0,
                reward: 0.6,
            }],
            stopped: true,
            truncated: false,
        };
        let est = reinforce_estimate_with(&traj, &x, 0.0, Side::Min);
        assert!((est.grad.get(0, 1) - 0.6 / 0.75).abs() < 1e-15);
        assert_eq!(est.grad.get(0, 0), 0.0);
        let zero = Trajectory {
            steps: vec![Step {
                state: 0,
                a: 1,
                b: 0,
                reward: 0.0,
            }],
            ..traj
        };
        assert_eq!(
            reinforce_estimate_with(&zero, &x, 0.0, Side::Min)
                .grad
                .norm(),
            0.0
        );
    }

    #[test]
    fn dump_format() {
        let traj = Trajectory {
            steps: vec![
                Step {
                    state: 0,
                    a: 1,
                    b: 0,
                    reward: 0.5,
                },
                Step {
                    state: 1,
                    a: 0,
                    b: 1,
                    reward: -1.0,
                },
            ],
            stopped: true,
            truncated: false,
        };
        let mut buf = Vec::new();
        write_trajectories(&mut buf, &[traj.clone(), traj]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "0,0,1,0,0.5\t1,1,0,1,-1\n".repeat(2)
        );
    }
}
