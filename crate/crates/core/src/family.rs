//! Textual graph specifications (`complete:8`, `cycle:10`, ...) and rate rules
//! that may depend on the family parameter.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::{make_complete, make_cycle, make_half_complete_cycle, random_connected, Graph};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphFamily {
    Complete,
    Cycle,
    /// Parameter is the half size; the graph has twice as many vertices.
    HalfCompleteCycle,
    /// Random connected graph with the given extra-edge probability and seed.
    Random {
        extra_edge_prob: f64,
        seed: u64,
    },
}

impl GraphFamily {
    /// Builds the family member at parameter `param` with unit rates.
    pub fn build(&self, param: usize) -> Result<Graph> {
        match *self {
            GraphFamily::Complete => make_complete(param, 1.0),
            GraphFamily::Cycle => make_cycle(param, 1.0),
            GraphFamily::HalfCompleteCycle => make_half_complete_cycle(param, 1.0),
            GraphFamily::Random { extra_edge_prob, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                random_connected(param, extra_edge_prob, 1.0, &mut rng)
            }
        }
    }
}

impl fmt::Display for GraphFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphFamily::Complete => write!(f, "complete"),
            GraphFamily::Cycle => write!(f, "cycle"),
            GraphFamily::HalfCompleteCycle => write!(f, "half-complete-cycle"),
            GraphFamily::Random { extra_edge_prob, seed } => write!(f, "random:{extra_edge_prob}:{seed}"),
        }
    }
}

/// Parses a family without its size: `complete`, `cycle`,
/// `half-complete-cycle` or `random:P:SEED`.
impl FromStr for GraphFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split(':').collect::<Vec<_>>().as_slice() {
            ["complete"] => Ok(GraphFamily::Complete),
            ["cycle"] => Ok(GraphFamily::Cycle),
            ["half-complete-cycle"] => Ok(GraphFamily::HalfCompleteCycle),
            ["random", p, seed] => {
                let spec: GraphSpec = format!("random:0:{p}:{seed}").parse()?;
                Ok(spec.family)
            }
            _ => Err(Error::invalid(
                "graph",
                format!("unknown graph family `{s}` (expected complete, cycle, half-complete-cycle or random:P:SEED)"),
            )),
        }
    }
}

/// A family plus its size parameter, written `family:param`.
///
/// Accepted forms: `complete:N`, `cycle:N`, `half-complete-cycle:H`,
/// `random:N:P:SEED`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphSpec {
    pub family: GraphFamily,
    pub param: usize,
}

impl GraphSpec {
    pub fn build(&self) -> Result<Graph> {
        self.family.build(self.param)
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            GraphFamily::Random { extra_edge_prob, seed } => {
                write!(f, "random:{}:{extra_edge_prob}:{seed}", self.param)
            }
            family => write!(f, "{family}:{}", self.param),
        }
    }
}

fn parse_field<T: FromStr>(field: &'static str, s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::invalid(field, format!("cannot parse `{s}`")))
}

impl FromStr for GraphSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let family = match (parts[0], parts.len()) {
            ("complete", 2) => GraphFamily::Complete,
            ("cycle", 2) => GraphFamily::Cycle,
            ("half-complete-cycle", 2) => GraphFamily::HalfCompleteCycle,
            ("random", 4) => {
                let p: f64 = parse_field("graph", parts[2])?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::invalid("graph", format!("edge probability {p} outside [0, 1]")));
                }
                GraphFamily::Random {
                    extra_edge_prob: p,
                    seed: parse_field("graph", parts[3])?,
                }
            }
            _ => {
                return Err(Error::invalid(
                    "graph",
                    format!(
                    "unknown graph spec `{s}` (expected complete:N, cycle:N, half-complete-cycle:H or random:N:P:SEED)"
                ),
                ))
            }
        };
        Ok(GraphSpec {
            family,
            param: parse_field("graph", parts[1])?,
        })
    }
}

/// How the uniform swap rate is chosen for a family member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateRule {
    Constant(f64),
    /// `1 / (param + offset)`.
    InverseParam {
        offset: i64,
    },
    /// `1 / |V|`.
    InverseVertices,
    /// `1 / max degree`.
    InverseMaxDegree,
}

impl RateRule {
    pub fn rate(&self, param: usize, g: &Graph) -> Result<f64> {
        let rate = match *self {
            RateRule::Constant(r) => r,
            RateRule::InverseParam { offset } => {
                let denom = param as i64 + offset;
                if denom <= 0 {
                    return Err(Error::invalid("rate", format!("{self} is undefined at n = {param}")));
                }
                1.0 / denom as f64
            }
            RateRule::InverseVertices => 1.0 / g.n() as f64,
            RateRule::InverseMaxDegree => 1.0 / g.max_degree() as f64,
        };
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::invalid(
                "rate",
                format!("must be positive and finite, got {rate}"),
            ));
        }
        Ok(rate)
    }

    /// Rescales `g` to the uniform rate this rule prescribes.
    pub fn apply(&self, param: usize, g: &Graph) -> Result<Graph> {
        g.with_uniform_rate(self.rate(param, g)?)
    }
}

impl fmt::Display for RateRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            RateRule::Constant(r) => write!(f, "{r}"),
            RateRule::InverseParam { offset: 0 } => write!(f, "1/n"),
            RateRule::InverseParam { offset } if offset < 0 => write!(f, "1/(n-{})", -offset),
            RateRule::InverseParam { offset } => write!(f, "1/(n+{offset})"),
            RateRule::InverseVertices => write!(f, "1/v"),
            RateRule::InverseMaxDegree => write!(f, "1/d"),
        }
    }
}

impl Serialize for RateRule {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl Serialize for GraphSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Parses `0.25`, `1/4`, `1/n`, `1/(n-1)`, `1/(n+2)`, `1/v` or `1/d`.
impl FromStr for RateRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::invalid("rate", format!("cannot parse rate `{s}`"));
        match t.as_str() {
            "1/n" => return Ok(RateRule::InverseParam { offset: 0 }),
            "1/v" => return Ok(RateRule::InverseVertices),
            "1/d" => return Ok(RateRule::InverseMaxDegree),
            _ => {}
        }
        if let Some(inner) = t.strip_prefix("1/(n").and_then(|r| r.strip_suffix(')')) {
            let offset: i64 = if let Some(m) = inner.strip_prefix('-') {
                -m.parse::<i64>().map_err(|_| bad())?
            } else if let Some(p) = inner.strip_prefix('+') {
                p.parse().map_err(|_| bad())?
            } else {
                return Err(bad());
            };
            return Ok(RateRule::InverseParam { offset });
        }
        let value = match t.split_once('/') {
            Some((a, b)) => {
                let a: f64 = a.parse().map_err(|_| bad())?;
                let b: f64 = b.parse().map_err(|_| bad())?;
                a / b
            }
            None => t.parse().map_err(|_| bad())?,
        };
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::invalid(
                "rate",
                format!("must be positive and finite, got `{s}`"),
            ));
        }
        Ok(RateRule::Constant(value))
    }
}
