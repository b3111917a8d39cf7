//! Gradient dynamics: two-timescale SGDA, equal-rate GDA, and extragradient.

mod oracle;
mod projection;

use std::fmt;
use std::io::{self, Write};

use thiserror::Error;

use crate::eval::{EvalError, NashGaps};
use crate::game::GameError;
use crate::rollout::RngStream;
use crate::table::norm;

pub use oracle::{
    ratio_best_response, GameOracle, Grad, QuadraticOracle, RatioOracle, SaddleOracle,
};
pub use projection::{project_simplex, project_simplex_in_place, Domain};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("unsupported mode: {0}")]
    Unsupported(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Game(#[from] GameError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Exact,
    Sampled,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Sampled => "sampled",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnerConfig {
    pub eta_x: f64,
    pub eta_y: f64,
    /// Exploration levels; consumed when building a [`GameOracle`].
    pub eps_x: f64,
    pub eps_y: f64,
    pub iters: usize,
    pub seed: u64,
    pub mode: Mode,
    pub log_every: usize,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            eta_x: 1e-3,
            eta_y: 1e-1,
            eps_x: 0.05,
            eps_y: 0.05,
            iters: 1000,
            seed: 0,
            mode: Mode::Exact,
            log_every: 10,
        }
    }
}

impl LearnerConfig {
    pub fn check(&self) -> Result<(), OracleError> {
        for (name, v) in [("eta_x", self.eta_x), ("eta_y", self.eta_y)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(OracleError::Config(format!(
                    "{name} = {v} must be finite and nonnegative"
                )));
            }
        }
        for (name, v) in [("eps_x", self.eps_x), ("eps_y", self.eps_y)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(OracleError::Config(format!(
                    "{name} = {v} must lie in [0,1]"
                )));
            }
        }
        if self.iters == 0 {
            return Err(OracleError::Config("iters must be at least 1".into()));
        }
        if self.log_every == 0 {
            return Err(OracleError::Config("log_every must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunRecord {
    pub iter: usize,
    pub primal_gap: f64,
    pub dual_gap: f64,
    pub pd_gap: f64,
    pub grad_norm_x: f64,
    pub grad_norm_y: f64,
    /// Mean primal gap over all records up to and including this one.
    pub avg_primal_gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunHistory {
    pub records: Vec<RunRecord>,
    pub final_x: Vec<f64>,
    pub final_y: Vec<f64>,
    /// Mean of the iterates `x_0, …, x_{N−1}`.
    pub avg_x: Vec<f64>,
    pub avg_y: Vec<f64>,
}

pub const CSV_HEADER: &str =
    "iter,primal_gap,dual_gap,pd_gap,grad_norm_x,grad_norm_y,avg_primal_gap";

impl RunHistory {
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.iter,
                r.primal_gap,
                r.dual_gap,
                r.pd_gap,
                r.grad_norm_x,
                r.grad_norm_y,
                r.avg_primal_gap
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn last(&self) -> &RunRecord {
        self.records.last().expect("runs log at least one record")
    }
}

/// Accumulates records and iterate averages.
struct Recorder {
    records: Vec<RunRecord>,
    primal_sum: f64,
    sum_x: Vec<f64>,
    sum_y: Vec<f64>,
    steps: usize,
}

impl Recorder {
    fn new(nx: usize, ny: usize) -> Self {
        Recorder {
            records: Vec::new(),
            primal_sum: 0.0,
            sum_x: vec![0.0; nx],
            sum_y: vec![0.0; ny],
            steps: 0,
        }
    }

    fn accumulate(&mut self, x: &[f64], y: &[f64]) {
        self.sum_x.iter_mut().zip(x).for_each(|(s, v)| *s += v);
        self.sum_y.iter_mut().zip(y).for_each(|(s, v)| *s += v);
        self.steps += 1;
    }

    fn log<O: SaddleOracle + ?Sized>(
        &mut self,
        oracle: &O,
        iter: usize,
        x: &[f64],
        y: &[f64],
    ) -> Result<(), OracleError> {
        let NashGaps { primal, dual, pd } = oracle.gaps(x, y)?;
        let (gx, gy) = oracle.exact_gradient(x, y)?;
        self.primal_sum += primal;
        self.records.push(RunRecord {
            iter,
            primal_gap: primal,
            dual_gap: dual,
            pd_gap: pd,
            grad_norm_x: norm(&gx),
            grad_norm_y: norm(&gy),
            avg_primal_gap: self.primal_sum / (self.records.len() + 1) as f64,
        });
        Ok(())
    }

    fn finish(self, x: Vec<f64>, y: Vec<f64>) -> RunHistory {
        let n = self.steps.max(1) as f64;
        RunHistory {
            records: self.records,
            avg_x: self.sum_x.iter().map(|s| s / n).collect(),
            avg_y: self.sum_y.iter().map(|s| s / n).collect(),
            final_x: x,
            final_y: y,
        }
    }
}

fn check_point<O: SaddleOracle + ?Sized>(
    oracle: &O,
    x: &[f64],
    y: &[f64],
) -> Result<(), OracleError> {
    if !oracle.x_domain().contains(x, 1e-9) || !oracle.y_domain().contains(y, 1e-9) {
        return Err(OracleError::Config(
            "starting point outside the domain".into(),
        ));
    }
    Ok(())
}

/// One simultaneous projected step `x' = P(x − η_x g_x)`, `y' = P(y + η_y g_y)`.
/// In sampled mode `rng` drives the oracle's single draw.
pub fn sgda_step<O: SaddleOracle + ?Sized>(
    oracle: &O,
    x: &[f64],
    y: &[f64],
    eta_x: f64,
    eta_y: f64,
    mode: Mode,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<(Vec<f64>, Vec<f64>), OracleError> {
    let (gx, gy) = match mode {
        Mode::Exact => oracle.exact_gradient(x, y)?,
        Mode::Sampled => oracle.sample_gradient(x, y, rng)?,
    };
    let mut nx: Vec<f64> = x.iter().zip(&gx).map(|(v, g)| v - eta_x * g).collect();
    let mut ny: Vec<f64> = y.iter().zip(&gy).map(|(v, g)| v + eta_y * g).collect();
    oracle.x_domain().project(&mut nx);
    oracle.y_domain().project(&mut ny);
    Ok((nx, ny))
}

fn is_log_point(i: usize, cfg_every: usize, iters: usize) -> bool {
    i.is_multiple_of(cfg_every) || i == iters
}

/// Two-timescale SGDA from the domain barycenters.
pub fn run_two_timescale<O: SaddleOracle + ?Sized>(
    oracle: &O,
    config: &LearnerConfig,
) -> Result<RunHistory, OracleError> {
    let x0 = oracle.x_domain().center();
    let y0 = oracle.y_domain().center();
    run_two_timescale_from(oracle, config, x0, y0)
}

/// Two-timescale SGDA from `(x0, y0)`. Step `i` of a sampled run draws from
/// stream `i` of `config.seed`. Gaps and exact gradient norms are logged at
/// iteration 0, every `log_every` iterations, and at the end.
pub fn run_two_timescale_from<O: SaddleOracle + ?Sized>(
    oracle: &O,
    config: &LearnerConfig,
    x0: Vec<f64>,
    y0: Vec<f64>,
) -> Result<RunHistory, OracleError> {
    config.check()?;
    check_point(oracle, &x0, &y0)?;
    let mut rec = Recorder::new(x0.len(), y0.len());
    let (mut x, mut y) = (x0, y0);
    rec.log(oracle, 0, &x, &y)?;
    for i in 1..=config.iters {
        rec.accumulate(&x, &y);
        let mut rng = RngStream::new(config.seed, i as u64).rng();
        (x, y) = sgda_step(
            oracle,
            &x,
            &y,
            config.eta_x,
            config.eta_y,
            config.mode,
            &mut rng,
        )?;
        if is_log_point(i, config.log_every, config.iters) {
            rec.log(oracle, i, &x, &y)?;
        }
    }
    Ok(rec.finish(x, y))
}

/// Step sizes, exploration levels, and iteration count of the convergence
/// theorem for stochastic games, with every constant set to one and then
/// scaled by [`RateMultipliers`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Theorem1Rates {
    pub eta_x: f64,
    pub eta_y: f64,
    pub eps_x: f64,
    pub eps_y: f64,
    /// Iteration count; may exceed any practical budget.
    pub iters: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateMultipliers {
    pub eta_x: f64,
    pub eta_y: f64,
    pub eps_x: f64,
    pub eps_y: f64,
    pub iters: f64,
}

impl Default for RateMultipliers {
    fn default() -> Self {
        RateMultipliers {
            eta_x: 1.0,
            eta_y: 1.0,
            eps_x: 1.0,
            eps_y: 1.0,
            iters: 1.0,
        }
    }
}

/// ```text
/// η_x = ε^10.5 ζ^44.5 / (C^15.5 (A∨B)^9.75 S^0.75)
/// η_y = ε^6 ζ^27 / (C^9 (A∨B)^6 S^0.5)
/// ε_x = ζ^3 ε / (S^0.5 (A∨B)^0.5 C)
/// ε_y = ζ^8 ε^2 / (C^3 (A∨B) S^0.5)
/// N   = (A∨B)^10.75 S^1.25 C^17.5 / (ε^12.5 ζ^48.5)
/// ```
pub fn theorem1_rates(
    epsilon: f64,
    s: usize,
    a: usize,
    b: usize,
    zeta: f64,
    c_g: f64,
) -> Theorem1Rates {
    theorem1_rates_scaled(epsilon, s, a, b, zeta, c_g, RateMultipliers::default())
}

pub fn theorem1_rates_scaled(
    epsilon: f64,
    s: usize,
    a: usize,
    b: usize,
    zeta: f64,
    c_g: f64,
    m: RateMultipliers,
) -> Theorem1Rates {
    let ab = a.max(b) as f64;
    let s = s as f64;
    let e = epsilon;
    Theorem1Rates {
        eta_x: m.eta_x * e.powf(10.5) * zeta.powf(44.5)
            / (c_g.powf(15.5) * ab.powf(9.75) * s.powf(0.75)),
        eta_y: m.eta_y * e.powi(6) * zeta.powi(27) / (c_g.powi(9) * ab.powi(6) * s.sqrt()),
        eps_x: m.eps_x * zeta.powi(3) * e / (s.sqrt() * ab.sqrt() * c_g),
        eps_y: m.eps_y * zeta.powi(8) * e * e / (c_g.powi(3) * ab * s.sqrt()),
        iters: m.iters * ab.powf(10.75) * s.powf(1.25) * c_g.powf(17.5)
            / (e.powf(12.5) * zeta.powf(48.5)),
    }
}

/// One extragradient step with exact gradients: a half step from `z` to
/// `z½`, then a full step from `z` using the gradient at `z½`.
pub fn eg_step<O: SaddleOracle + ?Sized>(
    oracle: &O,
    x: &[f64],
    y: &[f64],
    eta_x: f64,
    eta_y: f64,
) -> Result<(Vec<f64>, Vec<f64>), OracleError> {
    let (xd, yd) = (oracle.x_domain(), oracle.y_domain());
    let step = |gx: &[f64], gy: &[f64]| {
        let mut nx: Vec<f64> = x.iter().zip(gx).map(|(v, g)| v - eta_x * g).collect();
        let mut ny: Vec<f64> = y.iter().zip(gy).map(|(v, g)| v + eta_y * g).collect();
        xd.project(&mut nx);
        yd.project(&mut ny);
        (nx, ny)
    };
    let (gx, gy) = oracle.exact_gradient(x, y)?;
    let (hx, hy) = step(&gx, &gy);
    let (gx, gy) = oracle.exact_gradient(&hx, &hy)?;
    Ok(step(&gx, &gy))
}

/// Extragradient from `(x0, y0)` with step sizes `eta_x`, `eta_y` of
/// `config`. Sampled mode is rejected.
pub fn run_extragradient<O: SaddleOracle + ?Sized>(
    oracle: &O,
    config: &LearnerConfig,
    x0: Vec<f64>,
    y0: Vec<f64>,
) -> Result<RunHistory, OracleError> {
    config.check()?;
    if config.mode != Mode::Exact {
        return Err(OracleError::Unsupported(
            "extragradient requires exact gradients".into(),
        ));
    }
    check_point(oracle, &x0, &y0)?;
    let mut rec = Recorder::new(x0.len(), y0.len());
    let (mut x, mut y) = (x0, y0);
    rec.log(oracle, 0, &x, &y)?;
    for i in 1..=config.iters {
        rec.accumulate(&x, &y);
        (x, y) = eg_step(oracle, &x, &y, config.eta_x, config.eta_y)?;
        if is_log_point(i, config.log_every, config.iters) {
            rec.log(oracle, i, &x, &y)?;
        }
    }
    Ok(rec.finish(x, y))
}
