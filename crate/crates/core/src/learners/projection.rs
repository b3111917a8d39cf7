//! Euclidean projections onto the feasible sets of the learners.

/// Euclidean projection of `v` onto the probability simplex.
///
/// Sort-based threshold rule: with `u` sorted in decreasing order, the
/// support size is the largest `k` with `u_k > (Σ_{j≤k} u_j − 1)/k`.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    project_simplex_in_place(&mut out);
    out
}

pub fn project_simplex_in_place(v: &mut [f64]) {
    let n = v.len();
    if n == 0 {
        return;
    }
    let mut u = v.to_vec();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cum += uk;
        let t = (cum - 1.0) / (k + 1) as f64;
        if uk > t {
            theta = t;
        }
    }
    for e in v.iter_mut() {
        *e = (*e - theta).max(0.0);
    }
    // Remove rounding drift so rows sum to one to machine precision.
    let total: f64 = v.iter().sum();
    if total > 0.0 && total != 1.0 {
        v.iter_mut().for_each(|e| *e /= total);
    }
}

/// Feasible set of one player.
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    /// `blocks` probability simplices of dimension `dim`, stored row-major.
    Simplices { blocks: usize, dim: usize },
    /// Coordinate box `lo ≤ v ≤ hi`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Domain {
    pub fn len(&self) -> usize {
        match self {
            Domain::Simplices { blocks, dim } => blocks * dim,
            Domain::Box { lo, .. } => lo.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn project(&self, v: &mut [f64]) {
        match self {
            Domain::Simplices { dim, .. } => v.chunks_mut(*dim).for_each(project_simplex_in_place),
            Domain::Box { lo, hi } => {
                for ((e, &l), &h) in v.iter_mut().zip(lo).zip(hi) {
                    *e = e.clamp(l, h);
                }
            }
        }
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        if v.len() != self.len() {
            return false;
        }
        match self {
            Domain::Simplices { dim, .. } => v.chunks(*dim).all(|row| {
                row.iter().all(|&e| e >= -tol) && (row.iter().sum::<f64>() - 1.0).abs() <= tol
            }),
            Domain::Box { lo, hi } => v
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(&e, (&l, &h))| e >= l - tol && e <= h + tol),
        }
    }

    /// Barycenter: uniform rows or box midpoint.
    pub fn center(&self) -> Vec<f64> {
        match self {
            Domain::Simplices { blocks, dim } => vec![1.0 / *dim as f64; blocks * dim],
            Domain::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect(),
        }
    }

    /// `max_{v̄ ∈ domain} ⟨g, v − v̄⟩`, solved row by row (simplices) or
    /// coordinate by coordinate (box).
    pub fn max_descent(&self, g: &[f64], v: &[f64]) -> f64 {
        match self {
            Domain::Simplices { dim, .. } => g
                .chunks(*dim)
                .zip(v.chunks(*dim))
                .map(|(gr, vr)| {
                    let inner: f64 = gr.iter().zip(vr).map(|(a, b)| a * b).sum();
                    inner - gr.iter().copied().fold(f64::INFINITY, f64::min)
                })
                .sum(),
            Domain::Box { lo, hi } => g
                .iter()
                .zip(v)
                .zip(lo.iter().zip(hi))
                .map(|((&gi, &vi), (&l, &h))| {
                    if gi > 0.0 {
                        gi * (vi - l)
                    } else {
                        gi * (vi - h)
                    }
                })
                .sum(),
        }
    }
}
