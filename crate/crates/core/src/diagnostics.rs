//! Finite-n checks of the comparison results: sensitivity tables over a
//! grid of sizes, span containment against the complete graph, the
//! projection-mass inequality and the edge-monotonicity inequality.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{GraphFamily, RateRule};
use crate::fourier::{spectral_profile, BooleanFunction, FunctionFamily, SpectralProfile};
use crate::generator::build_level_generator;
use crate::graph::{make_complete, Graph};
use crate::linalg::dot;
use crate::spectral::{
    all_level_bases, at_most, eigendecompose, is_zero_eigenvalue, mirror_basis, EigenMethod, SpectralBasis,
};
use crate::statespace::StateCap;

/// Slack allowed on the inequality checks.
pub const INEQUALITY_TOL: f64 = 1e-10;

/// Aggregate outcome of one named check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub name: String,
    pub instances: usize,
    pub violations: usize,
    pub max_residual: f64,
}

impl CheckSummary {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            instances: 0,
            violations: 0,
            max_residual: 0.0,
        }
    }

    /// Records one instance with its residual; `ok` decides pass/fail.
    pub fn record(&mut self, residual: f64, ok: bool) {
        self.instances += 1;
        if !ok {
            self.violations += 1;
        }
        if residual.is_nan() || residual > self.max_residual {
            self.max_residual = residual;
        }
    }
}

/// Profiles of `f` under every level basis of `g`.
pub fn full_profile(g: &Graph, f: &BooleanFunction, cap: StateCap) -> Result<SpectralProfile> {
    let bases = all_level_bases(g, cap, EigenMethod::default())?;
    spectral_profile(f, &bases)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityFamily {
    pub graph: GraphFamily,
    pub rate: RateRule,
    pub function: FunctionFamily,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityRecord {
    /// Family parameter.
    pub n: usize,
    pub vertices: usize,
    pub rate: f64,
    pub variance: f64,
    pub conditional_mean_variance: f64,
    pub zero_mass: f64,
    pub total_mass: f64,
    /// One entry per `k` in the grid.
    pub low_frequency_mass: Vec<f64>,
    pub tail_mass: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trend {
    pub k: f64,
    pub low_frequency_mass: &'static str,
    pub tail_mass: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Truncation {
    pub n: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub family: String,
    pub n_grid: Vec<usize>,
    pub k_grid: Vec<f64>,
    pub records: Vec<SensitivityRecord>,
    pub trends: Vec<Trend>,
    pub checks: Vec<CheckSummary>,
    pub truncated: Option<Truncation>,
}

/// Direction of a sequence, for reporting only.
pub fn trend(values: &[f64]) -> &'static str {
    let tol = 1e-12;
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    if diffs.is_empty() || diffs.iter().all(|d| d.abs() <= tol) {
        "flat"
    } else if diffs.iter().all(|d| *d <= tol) {
        "decreasing"
    } else if diffs.iter().all(|d| *d >= -tol) {
        "increasing"
    } else {
        "mixed"
    }
}

/// Tabulates the variance split and the low/high frequency masses of a
/// function family over a grid of sizes. Sizes beyond the state cap end the
/// table early with a truncation marker.
pub fn sensitivity_profile(
    family: &SensitivityFamily,
    n_grid: &[usize],
    k_grid: &[f64],
    cap: StateCap,
) -> Result<SensitivityReport> {
    if n_grid.is_empty() || k_grid.is_empty() {
        return Err(Error::invalid("grid", "n and k grids must be nonempty"));
    }
    if let Some(k) = k_grid.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
        return Err(Error::invalid("k", format!("thresholds must be positive, got {k}")));
    }
    let mut records = Vec::new();
    let mut truncated = None;
    let mut identity = CheckSummary::new("mass_decomposition");
    for &n in n_grid {
        let record = (|| -> Result<SensitivityRecord> {
            let base = family.graph.build(n)?;
            let rate = family.rate.rate(n, &base)?;
            let g = base.with_uniform_rate(rate)?;
            let f = family.function.build(g.n())?;
            let p = full_profile(&g, &f, cap)?;
            let mut low = Vec::with_capacity(k_grid.len());
            let mut tail = Vec::with_capacity(k_grid.len());
            for &k in k_grid {
                low.push(p.low_frequency_mass(k)?);
                tail.push(p.tail_mass(k)?);
                let sum = p.mass_strictly_below(k)? + p.tail_mass(k)? + p.zero_mass();
                let gap = (sum - p.total_mass()).abs();
                identity.record(gap, gap <= INEQUALITY_TOL);
            }
            Ok(SensitivityRecord {
                n,
                vertices: g.n(),
                rate,
                variance: p.variance(),
                conditional_mean_variance: p.conditional_mean_variance(),
                zero_mass: p.zero_mass(),
                total_mass: p.total_mass(),
                low_frequency_mass: low,
                tail_mass: tail,
            })
        })();
        match record {
            Ok(r) => records.push(r),
            Err(e @ Error::CapExceeded { .. }) => {
                truncated = Some(Truncation {
                    n,
                    reason: e.to_string(),
                });
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let trends = k_grid
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let low: Vec<f64> = records.iter().map(|r| r.low_frequency_mass[j]).collect();
            let tail: Vec<f64> = records.iter().map(|r| r.tail_mass[j]).collect();
            Trend {
                k,
                low_frequency_mass: trend(&low),
                tail_mass: trend(&tail),
            }
        })
        .collect();
    Ok(SensitivityReport {
        family: format!("{} rate {} function {}", family.graph, family.rate, family.function),
        n_grid: n_grid.to_vec(),
        k_grid: k_grid.to_vec(),
        records,
        trends,
        checks: vec![identity],
        truncated,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContainmentResult {
    /// Largest level-norm distance of a low eigenvector from the target span.
    pub residual: f64,
    /// Number of eigenvectors with `0 < lambda <= k`.
    pub checked_vectors: usize,
    /// Eigenvalue bound `2 beta k' d` defining the target span.
    pub window: f64,
}

/// Validates the containment hypothesis and returns the window `2 beta k' d`.
///
/// `ga` must be complete with uniform rate `alpha`, `gb` must carry a uniform
/// rate `beta`, and `alpha k' (n - k' + 1) >= k` must hold.
pub fn containment_window(ga: &Graph, gb: &Graph, k: f64, kprime: f64) -> Result<f64> {
    if !ga.is_complete() {
        return Err(Error::Hypothesis("the source graph must be complete".into()));
    }
    if ga.n() != gb.n() {
        return Err(Error::DimensionMismatch {
            expected: ga.n(),
            actual: gb.n(),
        });
    }
    let alpha = ga
        .uniform_rate()
        .ok_or_else(|| Error::Hypothesis("the complete graph needs a uniform rate".into()))?;
    let beta = gb
        .uniform_rate()
        .ok_or_else(|| Error::Hypothesis("the comparison graph needs a uniform rate".into()))?;
    for (name, v) in [("k", k), ("kprime", kprime)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(name, format!("must be positive, got {v}")));
        }
    }
    let n = ga.n() as f64;
    let reach = alpha * kprime * (n - kprime + 1.0);
    if reach < k * (1.0 - 1e-12) {
        return Err(Error::Hypothesis(format!(
            "alpha k' (n - k' + 1) = {reach} is below k = {k}; the containment is not claimed"
        )));
    }
    Ok(2.0 * beta * kprime * gb.max_degree() as f64)
}

/// Containment residual from precomputed bases of one level: for each `psi`
/// with `0 < lambda <= k`, the norm of its component along the `chi` with
/// `mu` above `window`.
pub fn containment_residual_from_bases(
    psi: &SpectralBasis,
    chi: &SpectralBasis,
    k: f64,
    window: f64,
) -> Result<ContainmentResult> {
    if psi.space().words() != chi.space().words() {
        return Err(Error::invalid("level", "bases live on different levels"));
    }
    let w = psi.space().weight();
    let outside: Vec<usize> = (0..chi.len())
        .filter(|&j| !at_most(chi.eigenvalues()[j], window))
        .collect();
    let mut residual: f64 = 0.0;
    let mut checked = 0;
    for i in 0..psi.len() {
        let lambda = psi.eigenvalues()[i];
        if is_zero_eigenvalue(lambda) || !at_most(lambda, k) {
            continue;
        }
        checked += 1;
        // by completeness, the squared distance is the mass on the excluded vectors
        let v = psi.vector(i);
        let dist_sq = outside
            .iter()
            .fold(0.0, |acc, &j| acc + (dot(v, chi.vector(j)) * w).powi(2));
        residual = residual.max(dist_sq.sqrt());
    }
    Ok(ContainmentResult {
        residual,
        checked_vectors: checked,
        window,
    })
}

fn level_basis(g: &Graph, level: usize, cap: StateCap) -> Result<SpectralBasis> {
    let n = g.n();
    if level > n {
        return Err(Error::invalid("level", format!("{level} exceeds n = {n}")));
    }
    let lower = level.min(n - level);
    let b = eigendecompose(&build_level_generator(g, lower, cap)?)?;
    Ok(if lower == level { b } else { mirror_basis(&b) })
}

/// Checks `span{psi : lambda <= k} ⊆ span{chi : mu <= 2 beta k' d}` on one level.
pub fn containment_residual(
    ga: &Graph,
    gb: &Graph,
    level: usize,
    k: f64,
    kprime: f64,
    cap: StateCap,
) -> Result<ContainmentResult> {
    let window = containment_window(ga, gb, k, kprime)?;
    let psi = level_basis(ga, level, cap)?;
    let chi = level_basis(gb, level, cap)?;
    containment_residual_from_bases(&psi, &chi, k, window)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `lhs = sum_{0 < mu <= 4k} f_check^2` on the general graph must dominate
/// `rhs = sum_{0 < lambda <= k} f_hat^2` on the complete graph.
pub fn projection_mass_from_profiles(
    complete: &SpectralProfile,
    general: &SpectralProfile,
    k: f64,
) -> Result<InequalityCheck> {
    let rhs = complete.low_frequency_mass(k)?;
    let lhs = general.low_frequency_mass(4.0 * k)?;
    Ok(InequalityCheck {
        lhs,
        rhs,
        holds: rhs <= lhs + INEQUALITY_TOL,
    })
}

/// Compares `f` on `K_n` at rate `1/n` with `f` on `gb` rescaled to rate
/// `1 / max degree`, for `k <= n/4`.
pub fn projection_mass_inequality(gb: &Graph, f: &BooleanFunction, k: f64, cap: StateCap) -> Result<InequalityCheck> {
    let n = gb.n();
    if !(k > 0.0 && k <= n as f64 / 4.0) {
        return Err(Error::invalid(
            "k",
            format!("need 0 < k <= n/4 = {}, got {k}", n as f64 / 4.0),
        ));
    }
    let complete = make_complete(n, 1.0 / n as f64)?;
    let general = gb.with_inverse_degree_rate()?;
    let pc = full_profile(&complete, f, cap)?;
    let pg = full_profile(&general, f, cap)?;
    projection_mass_from_profiles(&pc, &pg, k)
}

/// `sum_{mu > k'} <f, chi>^2 <= (sqrt(k/k' * low_g(k)) + sqrt(high_g(k)))^2`
/// where `chi, mu` belong to the subgraph and the right side to `g`.
pub fn monotonicity_from_profiles(
    g: &SpectralProfile,
    sub: &SpectralProfile,
    k: f64,
    kprime: f64,
) -> Result<InequalityCheck> {
    let lhs = sub.mass_strictly_above(kprime)?;
    let low = g.low_frequency_mass(k)?;
    let high = g.mass_strictly_above(k)?;
    let rhs = ((k / kprime * low).sqrt() + high.sqrt()).powi(2);
    Ok(InequalityCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + INEQUALITY_TOL,
    })
}

fn check_subgraph(g: &Graph, sub: &Graph) -> Result<()> {
    if g.n() != sub.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            actual: sub.n(),
        });
    }
    if !g.is_connected() || !sub.is_connected() {
        return Err(Error::Disconnected);
    }
    if !g.contains_rated_edges_of(sub) {
        return Err(Error::Hypothesis(
            "the smaller graph must be a subgraph with equal rates on shared edges".into(),
        ));
    }
    Ok(())
}

pub fn monotonicity_inequality_check(
    g: &Graph,
    sub: &Graph,
    f: &BooleanFunction,
    k: f64,
    kprime: f64,
    cap: StateCap,
) -> Result<InequalityCheck> {
    check_subgraph(g, sub)?;
    let pg = full_profile(g, f, cap)?;
    let ps = full_profile(sub, f, cap)?;
    monotonicity_from_profiles(&pg, &ps, k, kprime)
}

/// Largest `mu_i - lambda_i` over all levels and sorted positions, where `mu`
/// is the spectrum of the subgraph. Nonpositive up to rounding when adding
/// edges can only raise eigenvalues.
pub fn spectral_monotonicity_gap(g: &Graph, sub: &Graph, cap: StateCap) -> Result<f64> {
    check_subgraph(g, sub)?;
    let mut worst = f64::NEG_INFINITY;
    for level in 0..=g.n() / 2 {
        let big = eigendecompose(&build_level_generator(g, level, cap)?)?;
        let small = eigendecompose(&build_level_generator(sub, level, cap)?)?;
        for (mu, lambda) in small.eigenvalues().iter().zip(big.eigenvalues()) {
            worst = worst.max(mu - lambda);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{make_cycle, make_half_complete_cycle, random_connected};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const CAP: StateCap = StateCap(20_000);

    #[test]
    fn constant_family_has_no_mass() {
        let fam = SensitivityFamily {
            graph: GraphFamily::Complete,
            rate: RateRule::InverseParam { offset: 0 },
            function: FunctionFamily::Constant(1.0),
        };
        let r = sensitivity_profile(&fam, &[4, 5, 6], &[1.0, 4.0], CAP).unwrap();
        for rec in &r.records {
            assert!(rec.conditional_mean_variance.abs() < 1e-12);
            assert!(rec
                .low_frequency_mass
                .iter()
                .chain(&rec.tail_mass)
                .all(|m| m.abs() < 1e-12));
        }
        assert_eq!(r.checks[0].violations, 0);
        assert!(r.truncated.is_none());
    }

    #[test]
    fn dictators_keep_low_frequency_mass() {
        let fam = SensitivityFamily {
            graph: GraphFamily::Complete,
            rate: RateRule::InverseParam { offset: 0 },
            function: FunctionFamily::Dictator(0),
        };
        let r = sensitivity_profile(&fam, &[4, 6, 8, 10], &[4.0], CAP).unwrap();
        for rec in &r.records {
            // the whole non-kernel mass of x(0) sits at eigenvalue alpha * n = 1
            assert!((rec.low_frequency_mass[0] - (0.25 - 1.0 / 4.0 / rec.n as f64)).abs() < 1e-10);
        }
    }

    #[test]
    fn truncation_marker() {
        let fam = SensitivityFamily {
            graph: GraphFamily::Cycle,
            rate: RateRule::Constant(0.5),
            function: FunctionFamily::Majority,
        };
        let r = sensitivity_profile(&fam, &[6, 8, 12], &[1.0], StateCap(100)).unwrap();
        assert_eq!(r.records.len(), 2);
        assert_eq!(r.truncated.as_ref().unwrap().n, 12);
    }

    #[test]
    fn example_contrast_direction() {
        let k = [1.0, 2.0];
        let cyc = SensitivityFamily {
            graph: GraphFamily::Cycle,
            rate: RateRule::Constant(0.5),
            function: FunctionFamily::LowerHalfParity,
        };
        let half = SensitivityFamily {
            graph: GraphFamily::HalfCompleteCycle,
            rate: RateRule::InverseParam { offset: -1 },
            function: FunctionFamily::LowerHalfParity,
        };
        let a = sensitivity_profile(&cyc, &[6, 8, 10, 12], &k, CAP).unwrap();
        let b = sensitivity_profile(&half, &[3, 4, 5, 6], &k, CAP).unwrap();
        // six vertices: the graphs differ by one chord and the order flips at k = 1
        assert!(a.records[0].low_frequency_mass[0] > b.records[0].low_frequency_mass[0]);
        for (x, y) in a.records.iter().zip(&b.records).skip(1) {
            assert_eq!(x.vertices, y.vertices);
            for j in 0..k.len() {
                assert!(x.low_frequency_mass[j] < y.low_frequency_mass[j], "{x:?} {y:?}");
            }
        }
    }

    #[test]
    fn containment_examples() {
        for n in [6, 8] {
            let ga = make_complete(n, 1.0 / n as f64).unwrap();
            for gb in [
                make_cycle(n, 0.5).unwrap(),
                make_half_complete_cycle(n / 2, 1.0).unwrap(),
            ] {
                let gb = gb.with_inverse_degree_rate().unwrap();
                for l in 0..=n {
                    for k in [0.5, 1.0, n as f64 / 4.0] {
                        let r = containment_residual(&ga, &gb, l, k, 2.0 * k, CAP).unwrap();
                        assert!(r.residual <= 1e-8, "n={n} l={l} k={k}: {r:?}");
                    }
                }
            }
            // self-containment
            let r = containment_residual(&ga, &ga, n / 2, 1.0, 2.0, CAP).unwrap();
            assert!(r.residual <= 1e-8);
        }
    }

    #[test]
    fn containment_is_vacuous_below_the_gap() {
        let ga = make_complete(6, 1.0 / 6.0).unwrap();
        let gb = make_cycle(6, 0.5).unwrap();
        let r = containment_residual(&ga, &gb, 3, 0.5, 1.0, CAP).unwrap();
        assert_eq!((r.residual, r.checked_vectors), (0.0, 0));
    }

    #[test]
    fn containment_refuses_bad_input() {
        let ga = make_complete(6, 1.0 / 6.0).unwrap();
        let gb = make_cycle(6, 0.5).unwrap();
        assert!(matches!(
            containment_residual(&gb, &ga, 2, 1.0, 2.0, CAP),
            Err(Error::Hypothesis(_))
        ));
        // alpha k'(n - k' + 1) = 1/6 * 0.5 * 6.5 < 1
        assert!(matches!(
            containment_residual(&ga, &gb, 2, 1.0, 0.5, CAP),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn projection_mass_examples() {
        let c = BooleanFunction::constant(8, 1.0).unwrap();
        let r = projection_mass_inequality(&make_cycle(8, 1.0).unwrap(), &c, 1.0, CAP).unwrap();
        assert!(r.lhs.abs() < 1e-12 && r.rhs.abs() < 1e-12);
        let f = BooleanFunction::parity_on_set(8, &[0, 2, 4, 6]).unwrap();
        let r = projection_mass_inequality(&make_cycle(8, 1.0).unwrap(), &f, 1.0, CAP).unwrap();
        assert!(r.holds, "{r:?}");
        let r = projection_mass_inequality(&make_complete(8, 1.0).unwrap(), &f, 2.0, CAP).unwrap();
        assert!(r.holds && r.lhs >= r.rhs);
        assert!(projection_mass_inequality(&make_cycle(8, 1.0).unwrap(), &f, 2.5, CAP).is_err());
    }

    #[test]
    fn monotonicity_examples() {
        let g = make_complete(6, 1.0).unwrap();
        let sub = make_cycle(6, 1.0).unwrap();
        let f = BooleanFunction::dictator(6, 0).unwrap();
        let r = monotonicity_inequality_check(&g, &sub, &f, 4.0, 8.0, CAP).unwrap();
        assert!(r.holds, "{r:?}");
        let same = monotonicity_inequality_check(&sub, &sub, &f, 1.5, 1.5, CAP).unwrap();
        assert!(same.holds && same.rhs >= same.lhs);
        assert!(monotonicity_inequality_check(&sub, &g, &f, 1.0, 1.0, CAP).is_err());
        let slower = make_cycle(6, 0.5).unwrap();
        assert!(monotonicity_inequality_check(&g, &slower, &f, 1.0, 1.0, CAP).is_err());
    }

    #[test]
    fn monotonicity_random_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let n = rng.random_range(5..=6);
            let rate = rng.random_range(0.3..1.5);
            let sub = random_connected(n, 0.2, rate, &mut rng).unwrap();
            let extra: Vec<(usize, usize, f64)> = (0..n)
                .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                .filter(|p| !sub.edge_pairs().contains(p))
                .filter(|_| rng.random_bool(0.5))
                .map(|(u, v)| (u, v, rate))
                .collect();
            let g = Graph::new(n, sub.edges().iter().map(|e| (e.u, e.v, e.rate)).chain(extra)).unwrap();
            let values = (0..1 << n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let f = BooleanFunction::explicit_table(n, values).unwrap();
            let pg = full_profile(&g, &f, CAP).unwrap();
            let ps = full_profile(&sub, &f, CAP).unwrap();
            let top = 2.0 * pg.max_eigenvalue();
            let k = rng.random_range(0.0..top) + 1e-3;
            let kp = rng.random_range(0.0..top) + 1e-3;
            let r = monotonicity_from_profiles(&pg, &ps, k, kp).unwrap();
            assert!(r.holds, "{r:?}");
        }
    }

    #[test]
    fn adding_edges_raises_spectra() {
        for half in 3..=5 {
            let c = make_cycle(2 * half, 1.0).unwrap();
            let h = make_half_complete_cycle(half, 1.0).unwrap();
            let k = make_complete(2 * half, 1.0).unwrap();
            assert!(spectral_monotonicity_gap(&h, &c, CAP).unwrap() <= 1e-10);
            assert!(spectral_monotonicity_gap(&k, &h, CAP).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn trend_labels() {
        assert_eq!(trend(&[1.0, 0.5, 0.2]), "decreasing");
        assert_eq!(trend(&[1.0, 1.0]), "flat");
        assert_eq!(trend(&[0.1, 0.5]), "increasing");
        assert_eq!(trend(&[0.1, 0.5, 0.2]), "mixed");
        assert_eq!(trend(&[0.3]), "flat");
    }
}
