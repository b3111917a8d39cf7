use rand::Rng;
use sgrl_core::diag::{mvi_field, tangent_project};
use sgrl_core::eval::{exact_gradient, trajectory_gradient, value_bundle};
use sgrl_core::game::{
    appd_game1, appd_game2, random_game, PolicyPoint, RatioGame, Side, StochasticGame,
};
use sgrl_core::rollout::{default_cap, gradient_stats, sample_episode, RngStream};
use sgrl_core::table::Table;

fn random_point(g: &StochasticGame, seed: u64) -> PolicyPoint {
    let mut rng = RngStream::new(seed, 99).rng();
    let (ex, ey) = (rng.gen_range(0.01..0.5), rng.gen_range(0.01..0.5));
    PolicyPoint::random(g, ex, ey, &mut rng)
}

/// Value along a direction that keeps every row summing to one.
fn shifted_value(g: &StochasticGame, pt: &PolicyPoint, side: Side, dir: &[f64], h: f64) -> f64 {
    let mut q = pt.clone();
    let t = match side {
        Side::Min => &mut q.x,
        Side::Max => &mut q.y,
    };
    for (v, d) in t.as_mut_slice().iter_mut().zip(dir) {
        *v += h * d;
    }
    value_bundle(g, &q).unwrap().v_rho
}

#[test]
fn tangent_derivatives_match_finite_differences() {
    let h = 1e-6;
    for seed in 0..30 {
        let g = random_game(3, 3, 2, 0.2, seed).unwrap();
        let mut pt = random_point(&g, seed);
        // Keep ±h moves inside the simplex.
        for t in [&mut pt.x, &mut pt.y] {
            let n = t.cols() as f64;
            t.as_mut_slice()
                .iter_mut()
                .for_each(|v| *v = 0.8 * *v + 0.2 / n);
        }
        let grad = exact_gradient(&g, &pt).unwrap();
        for (side, gt) in [(Side::Min, &grad.x), (Side::Max, &grad.y)] {
            let n = gt.cols();
            for s in 0..g.num_states() {
                for a in 1..n {
                    let mut dir = vec![0.0; gt.as_slice().len()];
                    dir[s * n + a] = 1.0;
                    dir[s * n] = -1.0;
                    let fd = (shifted_value(&g, &pt, side, &dir, h)
                        - shifted_value(&g, &pt, side, &dir, -h))
                        / (2.0 * h);
                    let an = gt.get(s, a) - gt.get(s, 0);
                    assert!(
                        (fd - an).abs() < 1e-7 * (1.0 + an.abs()),
                        "seed {seed}: {fd} vs {an}"
                    );
                }
            }
        }
    }
}

#[test]
fn gradient_norms_within_bounds() {
    for seed in 0..50 {
        let g = random_game(4, 3, 4, 0.1, seed).unwrap();
        let pt = random_point(&g, seed);
        let grad = exact_gradient(&g, &pt).unwrap();
        let z2 = g.zeta().powi(2);
        assert!(grad.x.norm() <= (g.num_actions_min() as f64).sqrt() / z2);
        assert!(grad.y.norm() <= (g.num_actions_max() as f64).sqrt() / z2);
    }
}

#[test]
fn trajectory_gradient_differs_by_row_constants() {
    for seed in 0..20 {
        let g = random_game(3, 2, 3, 0.2, seed).unwrap();
        let pt = random_point(&g, seed);
        let ex = exact_gradient(&g, &pt).unwrap();
        let tr = trajectory_gradient(&g, &pt).unwrap();
        for (e, t) in [(&ex.x, &tr.x), (&ex.y, &tr.y)] {
            let pe = tangent_project(e.as_slice(), e.cols());
            let pt_ = tangent_project(t.as_slice(), t.cols());
            for (a, b) in pe.iter().zip(&pt_) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
    // One-step games have no reward before any visit.
    let g = random_game(1, 2, 2, 0.999, 3).unwrap();
    let pt = random_point(&g, 0);
    let ex = exact_gradient(&g, &pt).unwrap();
    let tr = trajectory_gradient(&g, &pt).unwrap();
    assert!(ex.x.max_abs_diff(&tr.x) < 0.01);
}

#[test]
fn monte_carlo_value_matches_exact() {
    for seed in 0..3 {
        let g = random_game(2, 2, 2, 0.25, 40 + seed).unwrap();
        let pt = random_point(&g, seed);
        let exact = value_bundle(&g, &pt).unwrap().v_rho;
        let n = 100_000;
        let cap = default_cap(g.zeta());
        let (mut sum, mut sq) = (0.0, 0.0);
        for i in 0..n {
            let r =
                sample_episode(&g, &pt, &mut RngStream::new(seed, i).rng(), cap).episode_return();
            sum += r;
            sq += r * r;
        }
        let mean = sum / n as f64;
        let se = ((sq / n as f64 - mean * mean) / n as f64).sqrt();
        assert!(
            (mean - exact).abs() < 4.0 * se,
            "{mean} vs {exact} (se {se})"
        );
    }
}

#[test]
fn reinforce_is_unbiased_for_the_trajectory_gradient() {
    for seed in 0..3 {
        let g = random_game(2, 2, 2, 0.3, 70 + seed).unwrap();
        let pt = random_point(&g, seed);
        let st = gradient_stats(&g, &pt, 50_000, seed, default_cap(g.zeta())).unwrap();
        let tg = trajectory_gradient(&g, &pt).unwrap();
        for (m, s, t) in [(&st.mean_x, &st.se_x, &tg.x), (&st.mean_y, &st.se_y, &tg.y)] {
            for ((mv, sv), tv) in m.as_slice().iter().zip(s.as_slice()).zip(t.as_slice()) {
                assert!((mv - tv).abs() <= 4.0 * sv, "{mv} vs {tv} (se {sv})");
            }
        }
        let z4 = g.zeta().powi(4);
        assert!(st.sq_err_x <= 24.0 * 4.0 / (pt.eps_x * z4));
        assert!(st.sq_err_y <= 24.0 * 4.0 / (pt.eps_y * z4));
    }
}

#[test]
fn gradient_stats_ignore_thread_count() {
    let g = random_game(2, 2, 2, 0.3, 1).unwrap();
    let pt = random_point(&g, 1);
    let cap = default_cap(g.zeta());
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let four = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let a = one.install(|| gradient_stats(&g, &pt, 5000, 9, cap).unwrap());
    let b = four.install(|| gradient_stats(&g, &pt, 5000, 9, cap).unwrap());
    assert_eq!(a.mean_x, b.mean_x);
    assert_eq!(a.se_y, b.se_y);
    assert_eq!(a.sq_err_x.to_bits(), b.sq_err_x.to_bits());
}

#[test]
fn single_state_episode_lengths_are_geometric() {
    let zeta = 0.25;
    let ratio = RatioGame::from_rows(&[vec![0.5, -0.5]], &[vec![zeta, zeta]]).unwrap();
    let g = ratio.to_game();
    let pt = PolicyPoint::uniform(&g, 0.0, 0.0);
    let n = 50_000;
    let mut hist = [0usize; 4];
    let mut total = 0;
    for i in 0..n {
        let len = sample_episode(&g, &pt, &mut RngStream::new(5, i).rng(), 10_000).len();
        total += len;
        if len <= 4 {
            hist[len - 1] += 1;
        }
    }
    let mean = total as f64 / n as f64;
    assert!((mean - 1.0 / zeta).abs() < 4.0 * ((1.0 - zeta).sqrt() / zeta) / (n as f64).sqrt());
    for (k, &c) in hist.iter().enumerate() {
        let p = (1.0 - zeta).powi(k as i32) * zeta;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((c as f64 / n as f64 - p).abs() < 4.0 * se);
    }
}

#[test]
fn truncation_frequency_matches_tail() {
    let zeta = 0.2;
    let g = RatioGame::from_rows(&[vec![1.0]], &[vec![zeta]])
        .unwrap()
        .to_game();
    let pt = PolicyPoint::uniform(&g, 0.0, 0.0);
    let (n, cap) = (40_000, 5);
    let truncated = (0..n)
        .filter(|&i| sample_episode(&g, &pt, &mut RngStream::new(6, i).rng(), cap).truncated)
        .count();
    let p = (1.0 - zeta).powi(cap as i32);
    let se = (p * (1.0 - p) / n as f64).sqrt();
    assert!((truncated as f64 / n as f64 - p).abs() < 4.0 * se);
}

#[test]
fn ratio_field_matches_embedded_gradient() {
    let mut rng = RngStream::new(8, 0).rng();
    for k in 0..100 {
        let ratio = match k % 3 {
            0 => appd_game1(),
            1 => appd_game2(),
            _ => RatioGame::random(3, 2, 0.2, k),
        };
        let (na, nb) = (ratio.num_actions_min(), ratio.num_actions_max());
        let g = ratio.to_game();
        let pt = PolicyPoint::random(&g, 0.0, 0.0, &mut rng);
        let z: Vec<f64> =
            pt.x.as_slice()
                .iter()
                .chain(pt.y.as_slice())
                .copied()
                .collect();
        let f = mvi_field(&ratio, &z);
        let grad = exact_gradient(&g, &pt).unwrap();
        let fx = tangent_project(&f[..na], na);
        let fy = tangent_project(&f[na..], nb);
        let ex = tangent_project(grad.x.as_slice(), na);
        let ey = tangent_project(grad.y.as_slice(), nb);
        for (a, b) in fx.iter().zip(&ex) {
            assert!((a - b).abs() < 1e-10);
        }
        // F carries −∇_y.
        for (a, b) in fy.iter().zip(&ey) {
            assert!((a + b).abs() < 1e-10);
        }
    }
}

#[test]
fn one_shot_gradient_is_expected_reward() {
    // With ζ = 1 the value is xᵀ R y and ∂V/∂x[a] = (R y)[a].
    let r = vec![vec![0.3, -0.7], vec![0.1, 0.9]];
    let ratio = RatioGame::from_rows(&r, &[vec![1.0; 2], vec![1.0; 2]]).unwrap();
    let g = ratio.to_game();
    let pt = PolicyPoint::new(
        Table::from_rows(&[vec![0.25, 0.75]]).unwrap(),
        Table::from_rows(&[vec![0.6, 0.4]]).unwrap(),
        0.0,
        0.0,
    )
    .unwrap();
    let grad = exact_gradient(&g, &pt).unwrap();
    assert!((grad.x.get(0, 0) - (0.3 * 0.6 - 0.7 * 0.4)).abs() < 1e-15);
    assert!((grad.x.get(0, 1) - (0.1 * 0.6 + 0.9 * 0.4)).abs() < 1e-15);
    assert!((grad.y.get(0, 0) - (0.25 * 0.3 + 0.75 * 0.1)).abs() < 1e-15);
}
