//! Minty-inequality fields, best-response value functions, Moreau-envelope
//! stationarity, and gradient-dominance probes.

mod moreau;

use rayon::prelude::*;

use crate::eval::{best_response, EvalError};
use crate::game::{RatioGame, Side, StochasticGame};
use crate::learners::{ratio_best_response, OracleError, SaddleOracle};
use crate::table::Table;

pub use moreau::{moreau_diag, MoreauDiag};

/// Values with magnitude at most this are reported with sign 0.
pub const SIGN_TOL: f64 = 1e-12;

/// `F(z) = (∇_x V, −∇_y V)` for the ratio game, with `z = (x, y)` stacked.
pub fn mvi_field(ratio: &RatioGame, z: &[f64]) -> Vec<f64> {
    let na = ratio.num_actions_min();
    let (x, y) = z.split_at(na);
    let (gx, gy) = ratio.gradient(x, y);
    gx.into_iter().chain(gy.into_iter().map(|g| -g)).collect()
}

/// `⟨F(z), z − z_ref⟩`.
pub fn mvi_inner(ratio: &RatioGame, z: &[f64], z_ref: &[f64]) -> f64 {
    let f = mvi_field(ratio, z);
    f.iter()
        .zip(z)
        .zip(z_ref)
        .map(|((fi, zi), ri)| fi * (zi - ri))
        .sum()
}

pub fn sign_of(v: f64) -> i8 {
    if v.abs() <= SIGN_TOL {
        0
    } else if v < 0.0 {
        -1
    } else {
        1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MviSample {
    pub z: Vec<f64>,
    pub inner: f64,
    pub sign: i8,
}

pub fn mvi_sample(ratio: &RatioGame, z: &[f64], z_ref: &[f64]) -> MviSample {
    let inner = mvi_inner(ratio, z, z_ref);
    MviSample {
        z: z.to_vec(),
        inner,
        sign: sign_of(inner),
    }
}

/// Signs of `⟨F(z), z − z_ref⟩` over `z = (x, 1−x, y, 1−y)` on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SignGrid {
    pub resolution: usize,
    /// Row-major: row `j` is `y = j/(res−1)`, column `i` is `x = i/(res−1)`.
    pub cells: Vec<i8>,
    pub z_ref: Vec<f64>,
}

impl SignGrid {
    pub fn coord(&self, k: usize) -> f64 {
        k as f64 / (self.resolution - 1) as f64
    }

    /// Sign at column `i` (x) and row `j` (y).
    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.cells[j * self.resolution + i]
    }

    pub fn count(&self, sign: i8) -> usize {
        self.cells.iter().filter(|&&c| c == sign).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.cells.chunks(self.resolution) {
            let line: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Sign grid for a 2×2 ratio game. Panics unless both players have two
/// actions and `resolution ≥ 2`.
pub fn mvi_sign_grid(ratio: &RatioGame, z_ref: &[f64], resolution: usize) -> SignGrid {
    assert!(resolution >= 2, "grid resolution must be at least 2");
    assert!(
        ratio.num_actions_min() == 2 && ratio.num_actions_max() == 2,
        "sign grids need a 2×2 game"
    );
    let step = 1.0 / (resolution - 1) as f64;
    let cells = (0..resolution)
        .into_par_iter()
        .flat_map_iter(|j| {
            let y = j as f64 * step;
            (0..resolution).map(move |i| {
                let x = i as f64 * step;
                sign_of(mvi_inner(ratio, &[x, 1.0 - x, y, 1.0 - y], z_ref))
            })
        })
        .collect();
    SignGrid {
        resolution,
        cells,
        z_ref: z_ref.to_vec(),
    }
}

/// `Φ(x) = max_y V(x, y)` of a ratio game, by vertex enumeration.
pub fn phi_ratio(ratio: &RatioGame, x: &[f64]) -> f64 {
    ratio_best_response(ratio, Side::Max, x).1
}

/// `Ψ(y) = min_x V(x, y)` of a ratio game, by vertex enumeration.
pub fn psi_ratio(ratio: &RatioGame, y: &[f64]) -> f64 {
    ratio_best_response(ratio, Side::Min, y).1
}

/// `Φ(π_1) = max_{π_2} V_ρ(π_1, π_2)` for an executed min-player policy.
pub fn phi_game(game: &StochasticGame, pi_min: &Table, tol: f64) -> Result<f64, EvalError> {
    Ok(best_response(game, pi_min, Side::Max, tol)?.value)
}

/// `Ψ(π_2) = min_{π_1} V_ρ(π_1, π_2)` for an executed max-player policy.
pub fn psi_game(game: &StochasticGame, pi_max: &Table, tol: f64) -> Result<f64, EvalError> {
    Ok(best_response(game, pi_max, Side::Min, tol)?.value)
}

/// Smallest residual of the one-sided gradient domination condition
///
/// `max_{x̄} ⟨x − x̄, ∇_x f⟩ − μ·(f(x,y) − min_{x'} f(x',y)) + ε_gd ≥ 0`
///
/// over `points` (the max-player mirror when `side` is `Max`). The inner
/// maximum is taken over the whole domain in closed form.
pub fn gradient_dominance_probe<O: SaddleOracle + ?Sized>(
    oracle: &O,
    points: &[(Vec<f64>, Vec<f64>)],
    side: Side,
    mu: f64,
    eps_gd: f64,
) -> Result<f64, OracleError> {
    let mut worst = f64::INFINITY;
    for (x, y) in points {
        let (gx, gy) = oracle.exact_gradient(x, y)?;
        let f = oracle.value(x, y)?;
        let res = match side {
            Side::Min => {
                let best = oracle.best_response(Side::Min, y)?.1;
                oracle.x_domain().max_descent(&gx, x) - mu * (f - best)
            }
            Side::Max => {
                let best = oracle.best_response(Side::Max, x)?.1;
                let neg: Vec<f64> = gy.iter().map(|g| -g).collect();
                oracle.y_domain().max_descent(&neg, y) - mu * (best - f)
            }
        };
        worst = worst.min(res + eps_gd);
    }
    Ok(worst)
}

/// Removes the mean of each block of `dim` entries. Gradients on a product
/// of simplices that differ by a per-block constant have equal projections.
pub fn tangent_project(g: &[f64], dim: usize) -> Vec<f64> {
    g.chunks(dim)
        .flat_map(|row| {
            let mean = row.iter().sum::<f64>() / row.len() as f64;
            row.iter().map(move |v| v - mean)
        })
        .collect()
}
