//! Marble configurations and level slices.
//!
//! A configuration on `n` vertices is an `n`-bit word; bit `v` is 1 when
//! vertex `v` holds a black marble. Level `l` is the set of words with
//! exactly `l` bits set, enumerated in ascending numeric order. Every
//! matrix and level function in the crate indexes against that order.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const DEFAULT_STATE_CAP: usize = 20_000;

/// Upper bound on the number of states in one level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateCap(pub usize);

impl Default for StateCap {
    fn default() -> Self {
        StateCap(DEFAULT_STATE_CAP)
    }
}

/// `binom(n, k)`, exact.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    bits: u64,
    n: usize,
}

impl Configuration {
    pub fn new(bits: u64, n: usize) -> Result<Self> {
        if n > 63 {
            return Err(Error::invalid("n", format!("at most 63 vertices, got {n}")));
        }
        if bits >> n != 0 {
            return Err(Error::invalid(
                "bits",
                format!("{bits:#b} has marbles beyond vertex {n}"),
            ));
        }
        Ok(Self { bits, n })
    }

    pub fn from_vertices(n: usize, black: &[usize]) -> Result<Self> {
        let mut bits = 0u64;
        for &v in black {
            if v >= n {
                return Err(Error::VertexOutOfRange { vertex: v, n });
            }
            bits |= 1 << v;
        }
        Self::new(bits, n)
    }

    #[inline]
    pub fn bits(self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn n(self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(self, v: usize) -> bool {
        self.bits >> v & 1 == 1
    }

    /// Number of black marbles.
    #[inline]
    pub fn weight(self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn complement(self) -> Self {
        Self {
            bits: !self.bits & mask(self.n),
            n: self.n,
        }
    }
}

#[inline]
pub(crate) fn mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Vertex 0 is printed leftmost.
impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in 0..self.n {
            f.write_str(if self.get(v) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Configuration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut bits = 0u64;
        for (v, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => bits |= 1 << v,
                other => {
                    return Err(Error::invalid(
                        "configuration",
                        format!("unexpected character {other:?}"),
                    ))
                }
            }
        }
        Self::new(bits, s.chars().count())
    }
}

/// `x_v`: the configuration differing from `x` only at vertex `v`.
pub fn flip_vertex(x: Configuration, v: usize) -> Result<Configuration> {
    if v >= x.n {
        return Err(Error::VertexOutOfRange { vertex: v, n: x.n });
    }
    Ok(Configuration {
        bits: x.bits ^ (1 << v),
        n: x.n,
    })
}

/// `x_e`: exchange the marbles at the endpoints of `(u, v)`.
pub fn swap_edge(x: Configuration, (u, v): (usize, usize)) -> Result<Configuration> {
    for w in [u, v] {
        if w >= x.n {
            return Err(Error::VertexOutOfRange { vertex: w, n: x.n });
        }
    }
    Ok(Configuration {
        bits: swap_bits(x.bits, u, v),
        n: x.n,
    })
}

#[inline]
pub(crate) fn swap_bits(bits: u64, u: usize, v: usize) -> u64 {
    if (bits >> u ^ bits >> v) & 1 == 1 {
        bits ^ (1 << u | 1 << v)
    } else {
        bits
    }
}

/// `y <= x`: every black marble of `y` sits on a black vertex of `x`.
pub fn is_below(y: Configuration, x: Configuration) -> Result<bool> {
    if y.n != x.n {
        return Err(Error::DimensionMismatch {
            expected: x.n,
            actual: y.n,
        });
    }
    Ok(y.bits & !x.bits == 0)
}

/// All configurations with exactly `level` black marbles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelStateSpace {
    n: usize,
    level: usize,
    states: Vec<u64>,
}

impl LevelStateSpace {
    pub fn enumerate(n: usize, level: usize, cap: StateCap) -> Result<Self> {
        if n > 63 {
            return Err(Error::invalid("n", format!("at most 63 vertices, got {n}")));
        }
        if level > n {
            return Err(Error::invalid("level", format!("level {level} exceeds n = {n}")));
        }
        let count = binomial(n, level);
        if count > cap.0 as u128 {
            return Err(Error::CapExceeded {
                states: count,
                cap: cap.0,
            });
        }
        let count = count as usize;
        let mut states = Vec::with_capacity(count);
        if level == 0 {
            states.push(0);
        } else {
            // Gosper's hack walks same-popcount words in increasing order.
            let mut x: u64 = (1 << level) - 1;
            let limit = 1u64 << n;
            while x < limit {
                states.push(x);
                let c = x & x.wrapping_neg();
                let r = x + c;
                x = (((r ^ x) >> 2) / c) | r;
            }
        }
        debug_assert_eq!(states.len(), count);
        Ok(Self { n, level, states })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn level(&self) -> usize {
        self.level
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.states.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Raw bit words in enumeration order.
    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.states
    }

    pub fn state(&self, i: usize) -> Configuration {
        Configuration {
            bits: self.states[i],
            n: self.n,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Configuration> + '_ {
        self.states.iter().map(move |&bits| Configuration { bits, n: self.n })
    }

    /// Position of a bit word in the enumeration.
    #[inline]
    pub fn index_of(&self, bits: u64) -> Option<usize> {
        self.states.binary_search(&bits).ok()
    }

    /// Uniform stationary weight `1 / binom(n, level)`.
    pub fn weight(&self) -> f64 {
        1.0 / self.states.len() as f64
    }

    /// Probability that a uniform configuration on all `2^n` lands in this level.
    pub fn level_probability(&self) -> f64 {
        self.states.len() as f64 / (1u64 << self.n) as f64
    }
}

/// Enumerates a level with the default state cap.
pub fn enumerate_level(n: usize, level: usize) -> Result<LevelStateSpace> {
    LevelStateSpace::enumerate(n, level, StateCap::default())
}
