//! Brute-force ground truth that never touches an eigensolver: the level
//! semigroup `H_t = exp(tQ)` by scaling and squaring, and correlations
//! summed directly over pairs of configurations.

use crate::error::{Error, Result};
use crate::fourier::BooleanFunction;
use crate::generator::{build_level_generator, LevelGenerator};
use crate::graph::Graph;
use crate::linalg::Matrix;
use crate::statespace::{LevelStateSpace, StateCap};

/// Number of Taylor terms after the constant.
const TAYLOR_DEGREE: usize = 18;
/// Largest 1-norm of the scaled argument fed to the series.
const SCALED_NORM: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    space: LevelStateSpace,
    t: f64,
    probs: Matrix,
}

impl TransitionMatrix {
    pub fn space(&self) -> &LevelStateSpace {
        &self.space
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// `probs[(x, y)] = P(X_t = y | X_0 = x)`.
    pub fn probs(&self) -> &Matrix {
        &self.probs
    }

    /// Largest deviation of any row or column sum from 1.
    pub fn stochasticity_defect(&self) -> f64 {
        let n = self.probs.rows();
        let mut worst: f64 = 0.0;
        let mut cols = vec![0.0; n];
        for i in 0..n {
            let row = self.probs.row(i);
            worst = worst.max((row.iter().sum::<f64>() - 1.0).abs());
            for (c, x) in cols.iter_mut().zip(row) {
                *c += x;
            }
        }
        cols.iter().fold(worst, |w, c| w.max((c - 1.0).abs()))
    }
}

/// `exp(tQ)` on one level.
///
/// `tQ` is halved `s` times until its 1-norm is at most 1/2, expanded in an
/// 18-term Taylor series and squared back `s` times. Entries above `-1e-12`
/// that come out negative are clamped to zero.
pub fn matrix_exponential(gen: &LevelGenerator, t: f64) -> Result<TransitionMatrix> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid("t", format!("must be finite and >= 0, got {t}")));
    }
    let dim = gen.dim();
    // Q = -(stored matrix)
    let mut a = gen.matrix().clone();
    a.scale(-t);
    let norm = a.norm_1();
    let mut squarings = 0u32;
    while norm / 2f64.powi(squarings as i32) > SCALED_NORM {
        squarings += 1;
    }
    a.scale(1.0 / 2f64.powi(squarings as i32));

    let mut result = Matrix::identity(dim);
    let mut term = Matrix::identity(dim);
    for k in 1..=TAYLOR_DEGREE {
        term = term.mul(&a);
        term.scale(1.0 / k as f64);
        result.add_assign(&term);
    }
    for _ in 0..squarings {
        result = result.mul(&result);
    }
    for i in 0..dim {
        for x in result.row_mut(i) {
            if *x < 0.0 && *x > -1e-12 {
                *x = 0.0;
            }
        }
    }
    Ok(TransitionMatrix {
        space: gen.space().clone(),
        t,
        probs: result,
    })
}

/// `E[f(X_0) f(X_t)]` under the uniform start, summed level by level over
/// all pairs `(x, y)` with the semigroup from [`matrix_exponential`].
pub fn brute_force_correlation(g: &Graph, f: &BooleanFunction, t: f64, cap: StateCap) -> Result<f64> {
    brute_force_cross_correlation(g, f, f, t, cap)
}

/// `E[f(X_0) h(X_t)]` under the uniform start.
pub fn brute_force_cross_correlation(
    g: &Graph,
    f: &BooleanFunction,
    h: &BooleanFunction,
    t: f64,
    cap: StateCap,
) -> Result<f64> {
    let n = g.n();
    for func in [f, h] {
        if func.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: func.n(),
            });
        }
    }
    let mut total = 0.0;
    for level in 0..=n {
        let gen = build_level_generator(g, level, cap)?;
        let ht = matrix_exponential(&gen, t)?;
        let words = gen.space().words();
        let mut level_sum = 0.0;
        for (i, &x) in words.iter().enumerate() {
            let fx = f.value(x);
            if fx == 0.0 {
                continue;
            }
            let row = ht.probs().row(i);
            let inner: f64 = row.iter().zip(words).map(|(p, &y)| p * h.value(y)).sum();
            level_sum += fx * inner;
        }
        // P(level) * pi^(l)(x) = 2^-n for every x
        total += level_sum;
    }
    Ok(total / (1u64 << n) as f64)
}
