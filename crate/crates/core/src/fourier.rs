//! Functions on `{0,1}^n`, their coefficients against the level eigenbases
//! and the exact time-correlation formulas.
//!
//! Function tables are indexed by the configuration word, bit `v` holding
//! vertex `v`. The full-space basis vector attached to `psi_i` on level `l`
//! is `sqrt(2^n / C(n,l)) * psi_i` on that level and zero elsewhere, so
//! `f_hat(i, l) = sqrt(C(n,l) / 2^n) * <f|_l, psi_i>_l`.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numfmt::csv_float;
use crate::spectral::{
    at_least, at_most, is_zero_eigenvalue, strictly_above, threshold_tol, SpectralBasis, GROUP_RTOL,
};

/// Largest vertex count for which full function tables are stored.
pub const MAX_FUNCTION_N: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BooleanFunction {
    n: usize,
    values: Vec<f64>,
    name: String,
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_FUNCTION_N {
        return Err(Error::invalid(
            "n",
            format!("function tables need 1 <= n <= {MAX_FUNCTION_N}, got {n}"),
        ));
    }
    Ok(())
}

impl BooleanFunction {
    pub fn from_fn(n: usize, name: impl Into<String>, f: impl Fn(u64) -> f64) -> Result<Self> {
        check_n(n)?;
        Ok(Self {
            n,
            values: (0..1u64 << n).map(f).collect(),
            name: name.into(),
        })
    }

    /// Table of arbitrary finite reals; it is Boolean iff every entry is 0 or 1.
    pub fn explicit_table(n: usize, values: Vec<f64>) -> Result<Self> {
        check_n(n)?;
        if values.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                actual: values.len(),
            });
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::invalid("function", format!("non-finite value {v} at index {i}")));
        }
        Ok(Self {
            n,
            values,
            name: "table".into(),
        })
    }

    /// `x(v)`.
    pub fn dictator(n: usize, v: usize) -> Result<Self> {
        if v >= n {
            return Err(Error::VertexOutOfRange { vertex: v, n });
        }
        Self::from_fn(n, format!("dictator:{v}"), |x| (x >> v & 1) as f64)
    }

    /// Indicator that an odd number of vertices of `set` are black.
    pub fn parity_on_set(n: usize, set: &[usize]) -> Result<Self> {
        let mut mask = 0u64;
        for &v in set {
            if v >= n {
                return Err(Error::VertexOutOfRange { vertex: v, n });
            }
            mask |= 1 << v;
        }
        let label = set.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        Self::from_fn(n, format!("parity:{label}"), |x| ((x & mask).count_ones() & 1) as f64)
    }

    /// 1 iff strictly more than half of the vertices are black.
    pub fn majority(n: usize) -> Result<Self> {
        Self::from_fn(n, "majority", |x| f64::from(2 * x.count_ones() as usize > n))
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::invalid("function", format!("non-finite constant {c}")));
        }
        Self::from_fn(n, format!("constant:{c}"), |_| c)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self, bits: u64) -> f64 {
        self.values[bits as usize]
    }

    /// First entry that is neither 0 nor 1.
    pub fn first_non_boolean(&self) -> Option<(usize, f64)> {
        self.values
            .iter()
            .enumerate()
            .find(|(_, v)| **v != 0.0 && **v != 1.0)
            .map(|(i, v)| (i, *v))
    }

    pub fn is_boolean(&self) -> bool {
        self.first_non_boolean().is_none()
    }

    pub fn require_boolean(&self) -> Result<()> {
        match self.first_non_boolean() {
            None => Ok(()),
            Some((index, value)) => Err(Error::NotBoolean { index, value }),
        }
    }

    /// `E[f]` under the uniform measure on `{0,1}^n`.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `<f, f> = 2^-n * sum f(x)^2`.
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64
    }

    /// `E[f | ||x|| = l]` for every level.
    pub fn level_means(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n + 1];
        let mut counts = vec![0usize; self.n + 1];
        for (x, v) in self.values.iter().enumerate() {
            let l = x.count_ones() as usize;
            sums[l] += v;
            counts[l] += 1;
        }
        sums.iter().zip(&counts).map(|(s, c)| s / *c as f64).collect()
    }

    /// `Var(E[f | ||X||])` under the uniform measure.
    pub fn conditional_mean_variance(&self) -> f64 {
        let total = self.values.len() as f64;
        let mut second = 0.0;
        for (l, m) in self.level_means().iter().enumerate() {
            second += crate::statespace::binomial(self.n, l) as f64 / total * m * m;
        }
        second - self.mean().powi(2)
    }
}

/// A named function family, instantiated for a given vertex count.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionFamily {
    Dictator(usize),
    Parity(Vec<usize>),
    /// Parity over the even indices below `n / 2`.
    LowerHalfParity,
    Majority,
    Constant(f64),
}

impl FunctionFamily {
    pub fn build(&self, n: usize) -> Result<BooleanFunction> {
        match self {
            FunctionFamily::Dictator(v) => BooleanFunction::dictator(n, *v),
            FunctionFamily::Parity(set) => BooleanFunction::parity_on_set(n, set),
            FunctionFamily::LowerHalfParity => {
                let set: Vec<usize> = (0..n / 2).step_by(2).collect();
                let mut f = BooleanFunction::parity_on_set(n, &set)?;
                f.name = "parity:lower-half".into();
                Ok(f)
            }
            FunctionFamily::Majority => BooleanFunction::majority(n),
            FunctionFamily::Constant(c) => BooleanFunction::constant(n, *c),
        }
    }
}

impl fmt::Display for FunctionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionFamily::Dictator(v) => write!(f, "dictator:{v}"),
            FunctionFamily::Parity(set) => {
                let s: Vec<String> = set.iter().map(|v| v.to_string()).collect();
                write!(f, "parity:{}", s.join(","))
            }
            FunctionFamily::LowerHalfParity => write!(f, "parity:lower-half"),
            FunctionFamily::Majority => write!(f, "majority"),
            FunctionFamily::Constant(c) => write!(f, "constant:{c}"),
        }
    }
}

impl Serialize for FunctionFamily {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Parses `dictator:V`, `parity:A,B,...`, `parity:lower-half`, `majority`
/// or `constant:C`.
impl FromStr for FunctionFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let bad = |what: &str| Error::invalid("function", format!("{what} in `{s}`"));
        match (head, arg) {
            ("dictator", Some(a)) => Ok(FunctionFamily::Dictator(a.parse().map_err(|_| bad("bad vertex"))?)),
            ("parity", Some("lower-half")) => Ok(FunctionFamily::LowerHalfParity),
            ("parity", Some(a)) => {
                let set = a
                    .split(',')
                    .filter(|p| !p.is_empty())
                    .map(|p| p.trim().parse().map_err(|_| bad("bad vertex")))
                    .collect::<Result<Vec<usize>>>()?;
                Ok(FunctionFamily::Parity(set))
            }
            ("majority", None) => Ok(FunctionFamily::Majority),
            ("constant", Some(a)) => {
                let c: f64 = a.parse().map_err(|_| bad("bad constant"))?;
                if !c.is_finite() {
                    return Err(bad("non-finite constant"));
                }
                Ok(FunctionFamily::Constant(c))
            }
            _ => Err(Error::UnknownFamily(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileEntry {
    pub level: usize,
    pub index: usize,
    pub eigenvalue: f64,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProfile {
    n: usize,
    entries: Vec<ProfileEntry>,
    total_mass: f64,
    mean: f64,
    conditional_mean_variance: f64,
    norm_sq: f64,
    non_boolean: Option<(usize, f64)>,
}

/// Aggregated mass of a cluster of equal eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenvalueMass {
    pub eigenvalue: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileSummary {
    pub mean: f64,
    pub variance: f64,
    pub conditional_mean_variance: f64,
    pub mass_by_eigenvalue: Vec<EigenvalueMass>,
}

/// Expands `f` in the per-level bases; `bases[l]` must be the basis of level `l`.
pub fn spectral_profile(f: &BooleanFunction, bases: &[SpectralBasis]) -> Result<SpectralProfile> {
    let n = f.n();
    let two_n = (1u64 << n) as f64;
    let mut entries = Vec::with_capacity(1 << n);
    for level in 0..=n {
        let basis = bases.get(level).ok_or(Error::MissingLevel(level))?;
        if basis.level() != level {
            return Err(Error::MissingLevel(level));
        }
        if basis.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: basis.n(),
            });
        }
        let restricted: Vec<f64> = basis.space().words().iter().map(|&x| f.value(x)).collect();
        let scale = (basis.len() as f64 / two_n).sqrt();
        for (index, c) in basis.coefficients(&restricted)?.into_iter().enumerate() {
            entries.push(ProfileEntry {
                level,
                index,
                eigenvalue: basis.eigenvalues()[index],
                coefficient: scale * c,
            });
        }
    }
    let total_mass = entries.iter().map(|e| e.coefficient * e.coefficient).sum();
    Ok(SpectralProfile {
        n,
        entries,
        total_mass,
        mean: f.mean(),
        conditional_mean_variance: f.conditional_mean_variance(),
        norm_sq: f.norm_sq(),
        non_boolean: f.first_non_boolean(),
    })
}

fn check_time(name: &'static str, t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(name, format!("must be finite and >= 0, got {t}")));
    }
    Ok(())
}

fn check_threshold(k: f64) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::invalid("k", format!("threshold must be positive, got {k}")));
    }
    Ok(())
}

impl SpectralProfile {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[ProfileEntry] {
        &self.entries
    }

    /// `sum f_hat^2`.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// `<f, f>` computed directly from the table.
    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.total_mass - self.mean * self.mean
    }

    pub fn conditional_mean_variance(&self) -> f64 {
        self.conditional_mean_variance
    }

    pub fn is_boolean(&self) -> bool {
        self.non_boolean.is_none()
    }

    fn mass_where(&self, keep: impl Fn(f64) -> bool) -> f64 {
        self.entries
            .iter()
            .filter(|e| keep(e.eigenvalue))
            .fold(0.0, |acc, e| acc + e.coefficient * e.coefficient)
    }

    /// Mass on the kernel, `sum_l P(||X|| = l) * E[f | l]^2`.
    pub fn zero_mass(&self) -> f64 {
        self.mass_where(is_zero_eigenvalue)
    }

    /// `sum over 0 < lambda <= k`.
    pub fn low_frequency_mass(&self, k: f64) -> Result<f64> {
        check_threshold(k)?;
        Ok(self.mass_where(|l| !is_zero_eigenvalue(l) && at_most(l, k)))
    }

    /// `sum over 0 < lambda < k`, the complement of [`Self::tail_mass`].
    pub fn mass_strictly_below(&self, k: f64) -> Result<f64> {
        check_threshold(k)?;
        Ok(self.mass_where(|l| !is_zero_eigenvalue(l) && l < k - threshold_tol(k)))
    }

    /// `sum over lambda >= k`.
    pub fn tail_mass(&self, k: f64) -> Result<f64> {
        check_threshold(k)?;
        Ok(self.mass_where(|l| !is_zero_eigenvalue(l) && at_least(l, k)))
    }

    /// `sum over lambda > k`.
    pub fn mass_strictly_above(&self, k: f64) -> Result<f64> {
        check_threshold(k)?;
        Ok(self.mass_where(|l| !is_zero_eigenvalue(l) && strictly_above(l, k)))
    }

    /// Largest eigenvalue appearing in the profile.
    pub fn max_eigenvalue(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.eigenvalue))
    }

    /// Smallest nonzero eigenvalue, if any.
    pub fn min_positive_eigenvalue(&self) -> Option<f64> {
        self.entries
            .iter()
            .map(|e| e.eigenvalue)
            .filter(|l| !is_zero_eigenvalue(*l))
            .min_by(f64::total_cmp)
    }

    /// `E[f(X_0) f(X_t)] = sum e^{-t lambda} f_hat^2`.
    pub fn exact_correlation(&self, t: f64) -> Result<f64> {
        check_time("t", t)?;
        Ok(self
            .entries
            .iter()
            .map(|e| (-t * e.eigenvalue).exp() * e.coefficient * e.coefficient)
            .sum())
    }

    /// `Cov(f(X_0), f(X_t))`.
    pub fn exact_covariance(&self, t: f64) -> Result<f64> {
        Ok(self.exact_correlation(t)? - self.mean * self.mean)
    }

    /// `P(f(X_0) != f(X_eps)) = 2 * sum (1 - e^{-eps lambda}) f_hat^2`, Boolean `f` only.
    pub fn exact_flip_probability(&self, eps: f64) -> Result<f64> {
        if let Some((index, value)) = self.non_boolean {
            return Err(Error::NotBoolean { index, value });
        }
        check_time("eps", eps)?;
        let p: f64 = self
            .entries
            .iter()
            .map(|e| -(-eps * e.eigenvalue).exp_m1() * e.coefficient * e.coefficient)
            .sum::<f64>()
            * 2.0;
        Ok(p.clamp(0.0, 1.0))
    }

    /// Squared coefficients summed over clusters of equal eigenvalues across
    /// all levels, in ascending eigenvalue order.
    pub fn mass_by_eigenvalue(&self) -> Vec<EigenvalueMass> {
        let mut pairs: Vec<(f64, f64)> = self
            .entries
            .iter()
            .map(|e| {
                let l = if is_zero_eigenvalue(e.eigenvalue) {
                    0.0
                } else {
                    e.eigenvalue
                };
                (l, e.coefficient * e.coefficient)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64, usize)> = Vec::new();
        for (l, m) in pairs {
            match out.last_mut() {
                Some((first, mass, count)) if (l - *first).abs() <= GROUP_RTOL * first.abs().max(1.0) => {
                    *mass += m;
                    *count += 1;
                }
                _ => out.push((l, m, 1)),
            }
        }
        out.into_iter()
            .map(|(eigenvalue, mass, _)| EigenvalueMass { eigenvalue, mass })
            .collect()
    }

    pub fn summary(&self) -> ProfileSummary {
        ProfileSummary {
            mean: self.mean,
            variance: self.variance(),
            conditional_mean_variance: self.conditional_mean_variance,
            mass_by_eigenvalue: self.mass_by_eigenvalue(),
        }
    }

    /// CSV rows `level,eigenvalue,coeff_sq`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,eigenvalue,coeff_sq\n");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{},{},{}",
                e.level,
                csv_float(e.eigenvalue),
                csv_float(e.coefficient * e.coefficient)
            );
        }
        out
    }
}
