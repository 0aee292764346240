//! Monte Carlo simulation of the exclusion process and the estimators
//! checked against the spectral formulas.
//!
//! Paths use the total-rate jump chain: holding times are exponential with
//! the total edge rate and each jump swaps the endpoints of an edge chosen
//! proportionally to its rate. Sample `i` of a run draws from its own
//! ChaCha8 stream `(seed, i)`, so results do not depend on evaluation order.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::BooleanFunction;
use crate::graph::Graph;
use crate::statespace::{swap_bits, Configuration};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialDistribution {
    /// Uniform over all `2^n` configurations.
    Uniform,
    /// Uniform over the configurations with this many black marbles.
    Level(usize),
}

#[derive(Debug, Clone)]
pub struct SimulationSpec {
    pub graph: Graph,
    pub t: f64,
    pub initial: InitialDistribution,
    pub seed: u64,
    pub samples: usize,
}

impl SimulationSpec {
    pub fn new(graph: Graph, t: f64, initial: InitialDistribution, seed: u64, samples: usize) -> Result<Self> {
        let spec = Self {
            graph,
            t,
            initial,
            seed,
            samples,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return Err(Error::invalid("t", format!("must be finite and >= 0, got {}", self.t)));
        }
        if self.samples == 0 {
            return Err(Error::invalid("samples", "need at least one sample"));
        }
        if let InitialDistribution::Level(l) = self.initial {
            if l > self.graph.n() {
                return Err(Error::invalid("level", format!("{l} exceeds n = {}", self.graph.n())));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateResult {
    pub point: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl EstimateResult {
    /// `|point - exact| / std_error`; zero when both agree to rounding.
    pub fn z_score(&self, exact: f64) -> f64 {
        let gap = (self.point - exact).abs();
        if gap <= 1e-12 * exact.abs().max(1.0) {
            0.0
        } else if self.std_error == 0.0 {
            f64::INFINITY
        } else {
            gap / self.std_error
        }
    }

    pub fn within(&self, exact: f64, sigmas: f64) -> bool {
        self.z_score(exact) <= sigmas
    }
}

/// Precomputed jump-chain data for one graph.
#[derive(Debug, Clone)]
struct JumpChain {
    edges: Vec<(usize, usize)>,
    cumulative: Vec<f64>,
    holding: Exp<f64>,
}

impl JumpChain {
    fn new(g: &Graph) -> Self {
        let mut acc = 0.0;
        let cumulative = g
            .edges()
            .iter()
            .map(|e| {
                acc += e.rate;
                acc
            })
            .collect();
        Self {
            edges: g.edges().iter().map(|e| (e.u, e.v)).collect(),
            cumulative,
            holding: Exp::new(g.total_rate()).expect("total rate is positive"),
        }
    }

    fn pick_edge<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let total = *self.cumulative.last().expect("graph has edges");
        let u = rng.random::<f64>() * total;
        let i = self.cumulative.partition_point(|c| *c <= u);
        self.edges[i.min(self.edges.len() - 1)]
    }

    fn evolve<R: Rng + ?Sized>(&self, mut x: u64, t: f64, rng: &mut R) -> u64 {
        let marbles = x.count_ones();
        let mut clock = self.holding.sample(rng);
        while clock <= t {
            let (u, v) = self.pick_edge(rng);
            x = swap_bits(x, u, v);
            debug_assert_eq!(x.count_ones(), marbles);
            clock += self.holding.sample(rng);
        }
        x
    }
}

/// Independent stream for sample `index` of a run seeded with `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Samples `X_t` given `X_0 = x0`.
pub fn simulate_path(g: &Graph, x0: Configuration, t: f64, seed: u64) -> Result<Configuration> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid("t", format!("must be finite and >= 0, got {t}")));
    }
    if x0.n() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            actual: x0.n(),
        });
    }
    let chain = JumpChain::new(g);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Configuration::new(chain.evolve(x0.bits(), t, &mut rng), g.n())
}

fn draw_initial<R: Rng + ?Sized>(n: usize, initial: InitialDistribution, rng: &mut R) -> u64 {
    match initial {
        InitialDistribution::Uniform => rng.random::<u64>() & ((1u64 << n) - 1),
        InitialDistribution::Level(l) => sample(rng, n, l).iter().fold(0u64, |acc, v| acc | 1 << v),
    }
}

/// Draws `(X_0, X_t)` pairs for every sample of `spec`.
pub fn sample_pairs(spec: &SimulationSpec) -> Result<Vec<(u64, u64)>> {
    spec.validate()?;
    let chain = JumpChain::new(&spec.graph);
    let n = spec.graph.n();
    Ok((0..spec.samples as u64)
        .map(|i| {
            let mut rng = sample_rng(spec.seed, i);
            let x0 = draw_initial(n, spec.initial, &mut rng);
            (x0, chain.evolve(x0, spec.t, &mut rng))
        })
        .collect())
}

fn check_function(spec: &SimulationSpec, f: &BooleanFunction) -> Result<()> {
    if f.n() != spec.graph.n() {
        return Err(Error::DimensionMismatch {
            expected: spec.graph.n(),
            actual: f.n(),
        });
    }
    Ok(())
}

/// `Cov(f(X_0), f(X_t))` as `mean(f(X_0) f(X_t)) - mean(f(X_0))^2`, with a
/// leave-one-out jackknife standard error.
pub fn estimate_covariance(f: &BooleanFunction, spec: &SimulationSpec) -> Result<EstimateResult> {
    check_function(spec, f)?;
    let pairs = sample_pairs(spec)?;
    let a: Vec<f64> = pairs.iter().map(|&(x, _)| f.value(x)).collect();
    let b: Vec<f64> = pairs.iter().map(|&(_, y)| f.value(y)).collect();
    Ok(jackknife_covariance(&a, &b))
}

/// Point estimate and jackknife error of `mean(a b) - mean(a)^2`.
pub fn jackknife_covariance(a: &[f64], b: &[f64]) -> EstimateResult {
    let n = a.len();
    let nf = n as f64;
    let s_a: f64 = a.iter().sum();
    let s_ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let point = s_ab / nf - (s_a / nf).powi(2);
    if n < 2 {
        return EstimateResult {
            point,
            std_error: 0.0,
            samples: n,
        };
    }
    let m = nf - 1.0;
    let leave_out: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| (s_ab - x * y) / m - ((s_a - x) / m).powi(2))
        .collect();
    let bar = leave_out.iter().sum::<f64>() / nf;
    let spread: f64 = leave_out.iter().map(|t| (t - bar).powi(2)).sum();
    EstimateResult {
        point,
        std_error: (m / nf * spread).sqrt(),
        samples: n,
    }
}

/// Mean of `values` with standard error `sd / sqrt(N)`.
pub fn mean_estimate(values: &[f64]) -> EstimateResult {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    EstimateResult {
        point: mean,
        std_error: (var / n).sqrt(),
        samples: values.len(),
    }
}

/// `P(f(X_0) != f(X_eps))` with the binomial standard error.
pub fn estimate_flip_probability(f: &BooleanFunction, spec: &SimulationSpec) -> Result<EstimateResult> {
    check_function(spec, f)?;
    f.require_boolean()?;
    let pairs = sample_pairs(spec)?;
    let flips = pairs.iter().filter(|&&(x, y)| f.value(x) != f.value(y)).count();
    let n = pairs.len() as f64;
    let p = flips as f64 / n;
    Ok(EstimateResult {
        point: p,
        std_error: (p * (1.0 - p) / n).sqrt(),
        samples: pairs.len(),
    })
}

/// `E[f(X_0) h(X_t)]` with the plain standard error of the mean.
pub fn estimate_cross_correlation(
    f: &BooleanFunction,
    h: &BooleanFunction,
    spec: &SimulationSpec,
) -> Result<EstimateResult> {
    check_function(spec, f)?;
    check_function(spec, h)?;
    let pairs = sample_pairs(spec)?;
    let products: Vec<f64> = pairs.iter().map(|&(x, y)| f.value(x) * h.value(y)).collect();
    Ok(mean_estimate(&products))
}
