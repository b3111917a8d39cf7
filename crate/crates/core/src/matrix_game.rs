//! Zero-sum matrix games solved by the simplex method.
//!
//! The row player minimizes `xᵀMy` and the column player maximizes it. The
//! payoff matrix is shifted to be strictly positive, the row player's problem
//! is written as `max 1ᵀu  s.t.  Mᵀu ≤ 1, u ≥ 0`, and the column player's
//! strategy is read off the dual prices of the slack columns.

use thiserror::Error;

use crate::table::Table;

#[derive(Debug, Error, PartialEq)]
pub enum MatrixGameError {
    #[error("payoff matrix must be nonempty with finite entries")]
    BadMatrix,
    #[error("duality gap {gap} exceeds tolerance {tol}")]
    NotCertified { gap: f64, tol: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixGameSolution {
    /// Row (minimizing) player's mixed strategy.
    pub x: Vec<f64>,
    /// Column (maximizing) player's mixed strategy.
    pub y: Vec<f64>,
    pub value: f64,
    /// `max_b (xᵀM)_b − min_a (My)_a`, always ≥ 0.
    pub gap: f64,
}

const PIVOT_EPS: f64 = 1e-12;

/// Solves `min_x max_y xᵀMy` and certifies the answer by its duality gap.
pub fn solve_matrix_game(m: &Table, tol: f64) -> Result<MatrixGameSolution, MatrixGameError> {
    let (na, nb) = (m.rows(), m.cols());
    if na == 0 || nb == 0 || m.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(MatrixGameError::BadMatrix);
    }
    let lo = m.as_slice().iter().copied().fold(f64::INFINITY, f64::min);
    let shift = 1.0 - lo;

    // Tableau rows: one constraint per column action b; columns: u (na),
    // slacks (nb), rhs.
    let width = na + nb + 1;
    let mut tab = vec![0.0; (nb + 1) * width];
    for b in 0..nb {
        let row = &mut tab[b * width..(b + 1) * width];
        for a in 0..na {
            row[a] = m.get(a, b) + shift;
        }
        row[na + b] = 1.0;
        row[width - 1] = 1.0;
    }
    let obj = nb * width;
    for a in 0..na {
        tab[obj + a] = -1.0;
    }
    let mut basis: Vec<usize> = (na..na + nb).collect();

    // Bland's rule: terminates without cycling.
    loop {
        let Some(enter) = (0..na + nb).find(|&j| tab[obj + j] < -PIVOT_EPS) else {
            break;
        };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..nb {
            let coef = tab[r * width + enter];
            if coef > PIVOT_EPS {
                let ratio = tab[r * width + width - 1] / coef;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        if ratio < lratio - 1e-15
                            || (ratio <= lratio + 1e-15 && basis[r] < basis[lr])
                        {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
        }
        // The feasible region is bounded because every entry of the shifted
        // matrix is at least 1.
        let (pr, _) = leave.expect("bounded LP always has a leaving row");
        pivot(&mut tab, width, nb + 1, pr, enter);
        basis[pr] = enter;
    }

    let mut u = vec![0.0; na];
    for (r, &j) in basis.iter().enumerate() {
        if j < na {
            u[j] = tab[r * width + width - 1].max(0.0);
        }
    }
    let w: Vec<f64> = (0..nb).map(|b| tab[obj + na + b].max(0.0)).collect();
    let x = normalize(u);
    let y = normalize(w);

    let best_col = (0..nb)
        .map(|b| (0..na).map(|a| x[a] * m.get(a, b)).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    let best_row = (0..na)
        .map(|a| (0..nb).map(|b| m.get(a, b) * y[b]).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    let gap = (best_col - best_row).max(0.0);
    if gap > tol {
        return Err(MatrixGameError::NotCertified { gap, tol });
    }
    Ok(MatrixGameSolution {
        x,
        y,
        value: 0.5 * (best_col + best_row),
        gap,
    })
}

fn pivot(tab: &mut [f64], width: usize, nrows: usize, pr: usize, pc: usize) {
    let p = tab[pr * width + pc];
    for j in 0..width {
        tab[pr * width + j] /= p;
    }
    tab[pr * width + pc] = 1.0;
    for r in 0..nrows {
        if r == pr {
            continue;
        }
        let f = tab[r * width + pc];
        if f != 0.0 {
            for j in 0..width {
                tab[r * width + j] -= f * tab[pr * width + j];
            }
            tab[r * width + pc] = 0.0;
        }
    }
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter_mut().for_each(|e| *e /= total);
    } else {
        let n = v.len() as f64;
        v.iter_mut().for_each(|e| *e = 1.0 / n);
    }
    v
}
