//! Moreau envelope of the max function `Φ(x) = max_y f(x, y)`.

use crate::game::Side;
use crate::learners::{OracleError, SaddleOracle};
use crate::table::dist;

#[derive(Clone, Debug, PartialEq)]
pub struct MoreauDiag {
    /// Envelope parameter `1/(2ℓ)`.
    pub lambda: f64,
    pub prox_point: Vec<f64>,
    /// `Φ(prox) + ℓ‖prox − x‖²`.
    pub env_value: f64,
    /// `2ℓ‖x − prox‖`.
    pub grad_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// `Φ(x')` and a Danskin supergradient of `h(x') = Φ(x') + ℓ‖x' − x‖²`.
fn objective<O: SaddleOracle + ?Sized>(
    oracle: &O,
    x: &[f64],
    xp: &[f64],
    ell: f64,
) -> Result<(f64, Vec<f64>), OracleError> {
    let (y_star, phi) = oracle.best_response(Side::Max, xp)?;
    let (gx, _) = oracle.exact_gradient(xp, &y_star)?;
    let sub = gx
        .iter()
        .zip(xp.iter().zip(x))
        .map(|(g, (p, q))| g + 2.0 * ell * (p - q))
        .collect();
    Ok((phi, sub))
}

/// Computes `prox_{Φ/(2ℓ)}(x) = argmin_{x'} Φ(x') + ℓ‖x' − x‖²` by projected
/// subgradient descent with step `1/(2ℓk)` at iteration `k`, stopping once a
/// step moves less than `tol` or after `max_iters` steps. The iterate with
/// the lowest objective is reported.
pub fn moreau_diag<O: SaddleOracle + ?Sized>(
    oracle: &O,
    x: &[f64],
    ell: f64,
    tol: f64,
    max_iters: usize,
) -> Result<MoreauDiag, OracleError> {
    if !(ell > 0.0 && ell.is_finite()) {
        return Err(OracleError::Config(format!("ell = {ell} must be positive")));
    }
    let domain = oracle.x_domain();
    let mut cur = x.to_vec();
    let (phi0, mut sub) = objective(oracle, x, &cur, ell)?;
    let mut best = (phi0, cur.clone());
    let mut converged = false;
    let mut iterations = 0;
    for k in 1..=max_iters {
        iterations = k;
        let step = 1.0 / (2.0 * ell * k as f64);
        let mut next: Vec<f64> = cur.iter().zip(&sub).map(|(c, g)| c - step * g).collect();
        domain.project(&mut next);
        let moved = dist(&next, &cur);
        cur = next;
        let (phi, s) = objective(oracle, x, &cur, ell)?;
        sub = s;
        let h = phi + ell * dist(&cur, x).powi(2);
        if h < best.0 + ell * dist(&best.1, x).powi(2) {
            best = (phi, cur.clone());
        }
        if moved < tol {
            converged = true;
            break;
        }
    }
    let (phi, prox) = best;
    let d = dist(&prox, x);
    Ok(MoreauDiag {
        lambda: 1.0 / (2.0 * ell),
        env_value: phi + ell * d * d,
        grad_norm: 2.0 * ell * d,
        prox_point: prox,
        converged,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::QuadraticOracle;

    #[test]
    fn quadratic_envelope_closed_form() {
        // Φ(x) = c‖x − x₀‖²: prox = (c x₀ + ℓ x)/(c + ℓ) when it stays inside
        // the box, envelope = cℓ/(c+ℓ)·‖x − x₀‖².
        let (c, ell) = (1.0, 2.0);
        let x0 = vec![0.4, 0.6];
        let oracle = QuadraticOracle::unit_box(c, x0.clone(), 1.0, vec![0.5]);
        let x = [0.9, 0.1];
        let diag = moreau_diag(&oracle, &x, ell, 1e-12, 1_000_000).unwrap();
        let prox: Vec<f64> = x
            .iter()
            .zip(&x0)
            .map(|(a, b)| (c * b + ell * a) / (c + ell))
            .collect();
        let d2: f64 = x.iter().zip(&x0).map(|(a, b)| (a - b) * (a - b)).sum();
        assert!(dist(&diag.prox_point, &prox) < 1e-6, "{diag:?}");
        assert!((diag.env_value - c * ell / (c + ell) * d2).abs() < 1e-6);
        let grad = 2.0 * ell * dist(&x, &prox);
        assert!((diag.grad_norm - grad).abs() < 1e-6);
    }

    #[test]
    fn minimizer_is_its_own_prox() {
        let oracle = QuadraticOracle::unit_box(1.0, vec![0.3], 1.0, vec![0.5]);
        let (tol, ell) = (1e-8, 2.0);
        let diag = moreau_diag(&oracle, &[0.3], ell, tol, 10_000).unwrap();
        assert!(diag.converged);
        assert!(diag.grad_norm <= 10.0 * tol * ell);
    }
}
