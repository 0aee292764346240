//! The verification suite behind `xproc verify`: every module invariant and
//! the three comparison inequalities, swept over a seeded corpus of graphs
//! with up to `nmax` vertices.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::diagnostics::{
    containment_residual_from_bases, containment_window, monotonicity_from_profiles, projection_mass_from_profiles,
    spectral_monotonicity_gap, CheckSummary,
};
use crate::dynamics::{estimate_covariance, estimate_flip_probability, InitialDistribution, SimulationSpec};
use crate::error::{Error, Result};
use crate::fourier::{spectral_profile, BooleanFunction, SpectralProfile};
use crate::generator::build_level_generator;
use crate::graph::{make_complete, make_cycle, make_half_complete_cycle, random_connected, Graph};
use crate::linalg::dot;
use crate::oracle::{brute_force_correlation, matrix_exponential};
use crate::spectral::{
    all_level_bases, complete_graph_spectrum, lift_down, lift_up, max_abs_diff, EigenMethod, SpectralBasis,
};
use crate::statespace::StateCap;

pub const SCHEMA_VERSION: u32 = 1;
pub const MAX_SUITE_N: usize = 12;
/// Largest n for the brute-force oracle comparisons.
const ORACLE_N: usize = 6;
/// Samples per Monte Carlo instance.
const MC_SAMPLES: usize = 20_000;
/// Standard errors allowed between a Monte Carlo estimate and its exact value.
const MC_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Generator,
    Spectral,
    Fourier,
    Oracle,
    Diagnostics,
    Dynamics,
    All,
}

impl Suite {
    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Suite::Generator => "generator",
            Suite::Spectral => "spectral",
            Suite::Fourier => "fourier",
            Suite::Oracle => "oracle",
            Suite::Diagnostics => "diagnostics",
            Suite::Dynamics => "dynamics",
            Suite::All => "all",
        };
        f.write_str(s)
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "generator" => Suite::Generator,
            "spectral" => Suite::Spectral,
            "fourier" => Suite::Fourier,
            "oracle" => Suite::Oracle,
            "diagnostics" => Suite::Diagnostics,
            "dynamics" => Suite::Dynamics,
            "all" => Suite::All,
            _ => {
                return Err(Error::invalid(
                    "suite",
                    format!("unknown suite `{s}` (generator, spectral, fourier, oracle, diagnostics, dynamics, all)"),
                ))
            }
        })
    }
}

impl Serialize for Suite {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub suite: Suite,
    pub nmax: usize,
    pub seed: u64,
    pub state_cap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub check: String,
    pub instance: String,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub passed: bool,
    pub checks: Vec<CheckSummary>,
    pub violations: Vec<Violation>,
}

#[derive(Default)]
struct Recorder {
    checks: Vec<CheckSummary>,
    violations: Vec<Violation>,
}

impl Recorder {
    fn record(&mut self, check: &str, instance: impl FnOnce() -> String, residual: f64, ok: bool) {
        let ok = ok && !residual.is_nan();
        let idx = match self.checks.iter().position(|c| c.name == check) {
            Some(i) => i,
            None => {
                self.checks.push(CheckSummary::new(check));
                self.checks.len() - 1
            }
        };
        self.checks[idx].record(residual, ok);
        if !ok {
            self.violations.push(Violation {
                check: check.to_string(),
                instance: instance(),
                residual,
            });
        }
    }

    /// Records a failed computation as a violation instead of aborting the run.
    fn guard<T>(&mut self, check: &str, instance: &str, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.record(check, || format!("{instance}: {e}"), f64::INFINITY, false);
                None
            }
        }
    }
}

struct Case {
    label: String,
    graph: Graph,
    bases: Vec<SpectralBasis>,
}

fn corpus(nmax: usize, rng: &mut ChaCha8Rng, cap: StateCap) -> Result<Vec<Case>> {
    let mut graphs = Vec::new();
    for n in 2..=nmax {
        graphs.push((format!("complete:{n}@1/{n}"), make_complete(n, 1.0 / n as f64)?));
        if n >= 3 {
            graphs.push((format!("cycle:{n}@1"), make_cycle(n, 1.0)?));
        }
        if n >= 4 && n % 2 == 0 {
            graphs.push((
                format!("half-complete-cycle:{}@1/2", n / 2),
                make_half_complete_cycle(n / 2, 0.5)?,
            ));
        }
        if n >= 3 {
            let rate = rng.random_range(0.2..1.5);
            graphs.push((format!("random:{n}@{rate}"), random_connected(n, 0.35, rate, rng)?));
        }
    }
    graphs
        .into_iter()
        .map(|(label, graph)| {
            let bases = all_level_bases(&graph, cap, EigenMethod::default())?;
            Ok(Case { label, graph, bases })
        })
        .collect()
}

fn random_vector(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn random_function(rng: &mut ChaCha8Rng, n: usize) -> Result<BooleanFunction> {
    match rng.random_range(0..4) {
        0 => BooleanFunction::dictator(n, rng.random_range(0..n)),
        1 => BooleanFunction::majority(n),
        2 => {
            let set: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
            BooleanFunction::parity_on_set(n, &set)
        }
        _ => BooleanFunction::explicit_table(n, random_vector(rng, 1 << n)),
    }
}

/// Runs the selected checks. Fails only on invalid configuration; numerical
/// trouble inside a check is reported as a violation.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    if !(2..=MAX_SUITE_N).contains(&cfg.nmax) {
        return Err(Error::invalid(
            "nmax",
            format!("must lie in 2..={MAX_SUITE_N}, got {}", cfg.nmax),
        ));
    }
    let cap = StateCap(cfg.state_cap);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rec = Recorder::default();
    let cases = corpus(cfg.nmax, &mut rng, cap)?;
    let s = cfg.suite;

    if s.includes(Suite::Generator) {
        generator_checks(&mut rec, &cases, &mut rng, cap);
    }
    if s.includes(Suite::Spectral) {
        spectral_checks(&mut rec, &cases, cfg.nmax, cap);
    }
    if s.includes(Suite::Fourier) {
        fourier_checks(&mut rec, &cases, &mut rng);
    }
    if s.includes(Suite::Oracle) {
        oracle_checks(&mut rec, &cases, &mut rng, cap);
    }
    if s.includes(Suite::Diagnostics) {
        diagnostics_checks(&mut rec, &cases, cfg.nmax, &mut rng, cap);
    }
    if s.includes(Suite::Dynamics) {
        dynamics_checks(&mut rec, cfg.seed, cap);
    }
    Ok(SuiteReport {
        passed: rec.violations.is_empty(),
        checks: rec.checks,
        violations: rec.violations,
    })
}

fn generator_checks(rec: &mut Recorder, cases: &[Case], rng: &mut ChaCha8Rng, cap: StateCap) {
    for case in cases {
        for level in 0..=case.graph.n() {
            let inst = format!("{} level {level}", case.label);
            let Some(gen) = rec.guard(
                "generator.structure",
                &inst,
                build_level_generator(&case.graph, level, cap),
            ) else {
                continue;
            };
            let m = gen.matrix();
            let scale = m.max_abs().max(1.0);
            let asym = m.symmetry_violation(0.0).map_or(0.0, |(_, _, gap)| gap);
            let row_sum = (0..m.rows()).fold(0.0, |w: f64, i| w.max(m.row(i).iter().sum::<f64>().abs()));
            let residual = asym.max(row_sum) / scale;
            rec.record("generator.structure", || inst.clone(), residual, residual <= 1e-12);

            let f = random_vector(rng, gen.dim());
            let (Ok(a), Ok(b)) = (gen.dirichlet_form(&f), gen.quadratic_form(&f)) else {
                continue;
            };
            let gap = (a - b).abs() / a.abs().max(1.0);
            rec.record(
                "generator.dirichlet_form",
                || inst.clone(),
                gap,
                gap <= 1e-12 && a >= -1e-12,
            );
        }
    }
}

fn spectral_checks(rec: &mut Recorder, cases: &[Case], nmax: usize, cap: StateCap) {
    for case in cases {
        let g = &case.graph;
        let (alpha, d) = (g.uniform_rate().unwrap_or(f64::NAN), g.max_degree() as f64);
        for b in &case.bases {
            let l = b.level();
            let inst = format!("{} level {l}", case.label);
            let Some(gen) = rec.guard("spectral.eigen_residual", &inst, build_level_generator(g, l, cap)) else {
                continue;
            };
            let residual = match b.max_residual(&gen) {
                Ok(r) => r / gen.matrix().norm_1().max(1.0),
                Err(_) => f64::INFINITY,
            };
            let residual = residual.max(b.orthonormality_defect());
            rec.record("spectral.eigen_residual", || inst.clone(), residual, residual <= 1e-8);

            let top = b.eigenvalues().last().copied().unwrap_or(0.0);
            let bound = 2.0 * alpha * l as f64 * d;
            rec.record(
                "spectral.eigenvalue_bound",
                || inst.clone(),
                top - bound,
                top <= bound + 1e-10,
            );

            lift_checks(rec, case, b, &inst);
        }
    }

    for n in 2..=nmax {
        for alpha in [1.0, 1.0 / n as f64] {
            let Ok(g) = make_complete(n, alpha) else { continue };
            let Ok(bases) = all_level_bases(&g, cap, EigenMethod::default()) else {
                continue;
            };
            for b in bases.iter().take(n / 2 + 1) {
                let l = b.level();
                let inst = format!("complete:{n}@{alpha} level {l}");
                let table = complete_graph_spectrum(n, l, alpha);
                let mut err: f64 = 0.0;
                let mut shape_ok = b.groups().len() == table.len();
                for (r, (lambda, mult)) in b.groups().iter().zip(&table) {
                    shape_ok &= r.len() as u128 == *mult;
                    for &x in &b.eigenvalues()[r.clone()] {
                        err = err.max((x - lambda).abs() / lambda.abs().max(1.0));
                    }
                }
                rec.record(
                    "spectral.complete_multiplicities",
                    || inst,
                    err,
                    shape_ok && err <= 1e-8,
                );

                let alpha_l = alpha * l as f64;
                for i in 0..b.len() {
                    let lambda = b.eigenvalues()[i];
                    if l >= 1 {
                        let to = &bases[l - 1];
                        let want = ((n - l + 1) as f64 / alpha_l) * (alpha_l * (n - l + 1) as f64 - lambda);
                        length_record(rec, b, i, to, want, false, n, alpha);
                    }
                    if l < n {
                        let to = &bases[l + 1];
                        let lf = (l + 1) as f64;
                        let want = (lf / (alpha * (n - l) as f64)) * (alpha * lf * (n - l) as f64 - lambda);
                        length_record(rec, b, i, to, want, true, n, alpha);
                    }
                }
            }
        }
    }

    for case in cases.iter().filter(|c| c.label.starts_with("cycle:")) {
        let n = case.graph.n();
        let Ok(k) = make_complete(n, 1.0) else { continue };
        let Ok(kb) = all_level_bases(&k, cap, EigenMethod::default()) else {
            continue;
        };
        for (a, b) in case.bases.iter().zip(&kb) {
            let gap = max_abs_diff(&a.kernel_projector(), &b.kernel_projector());
            rec.record(
                "spectral.kernel_independence",
                || format!("cycle:{n} vs complete:{n} level {}", a.level()),
                gap,
                gap <= 1e-12,
            );
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn length_record(
    rec: &mut Recorder,
    b: &SpectralBasis,
    i: usize,
    to: &SpectralBasis,
    want: f64,
    up: bool,
    n: usize,
    alpha: f64,
) {
    let v = b.vector(i);
    let lifted = if up {
        lift_up(v, b.space(), to.space())
    } else {
        lift_down(v, b.space(), to.space())
    };
    let Ok(lifted) = lifted else { return };
    let got = dot(&lifted, &lifted) * to.space().weight();
    let err = (got - want).abs() / want.abs().max(1.0);
    rec.record(
        "spectral.lift_lengths",
        || {
            format!(
                "complete:{n}@{alpha} level {} vector {i} {}",
                b.level(),
                if up { "up" } else { "down" }
            )
        },
        err,
        err <= 1e-8,
    );
}

/// Lifts of eigenvectors are eigenvectors with the same eigenvalue or zero,
/// and lifts of an orthogonal basis stay pairwise orthogonal on the complete
/// graph.
fn lift_checks(rec: &mut Recorder, case: &Case, b: &SpectralBasis, inst: &str) {
    let l = b.level();
    let n = case.graph.n();
    let complete = case.graph.is_complete();
    for (up, target) in [(false, l.checked_sub(1)), (true, (l < n).then_some(l + 1))] {
        let Some(t) = target else { continue };
        let to = &case.bases[t];
        let Ok(gen) = build_level_generator(&case.graph, t, StateCap(to.len().max(1))) else {
            continue;
        };
        let mut lifted = Vec::with_capacity(b.len());
        for i in 0..b.len() {
            let v = b.vector(i);
            let w = if up {
                lift_up(v, b.space(), to.space())
            } else {
                lift_down(v, b.space(), to.space())
            };
            let Ok(w) = w else { continue };
            let Ok(qw) = gen.apply(&w) else { continue };
            let lambda = b.eigenvalues()[i];
            let res = qw.iter().zip(&w).map(|(a, x)| (a - lambda * x).powi(2)).sum::<f64>() * to.space().weight();
            let res = res.sqrt() / lambda.max(1.0);
            rec.record(
                "spectral.lift_dichotomy",
                || format!("{inst} vector {i} {}", if up { "up" } else { "down" }),
                res,
                res <= 1e-8,
            );
            lifted.push(w);
        }
        if complete {
            let mut worst: f64 = 0.0;
            for i in 0..lifted.len() {
                for j in 0..i {
                    worst = worst.max((dot(&lifted[i], &lifted[j]) * to.space().weight()).abs());
                }
            }
            rec.record(
                "spectral.lift_orthogonality",
                || format!("{inst} {}", if up { "up" } else { "down" }),
                worst,
                worst <= 1e-8,
            );
        }
    }
}

fn fourier_checks(rec: &mut Recorder, cases: &[Case], rng: &mut ChaCha8Rng) {
    for case in cases {
        let n = case.graph.n();
        for _ in 0..2 {
            let Ok(f) = random_function(rng, n) else { continue };
            let inst = format!("{} function {}", case.label, f.name());
            let Some(p) = rec.guard("fourier.parseval", &inst, spectral_profile(&f, &case.bases)) else {
                continue;
            };
            let gap = (p.total_mass() - f.norm_sq()).abs() + (p.zero_mass() - zero_mass_direct(&f)).abs();
            rec.record("fourier.parseval", || inst.clone(), gap, gap <= 1e-10);

            let k = rng.random_range(0.05..2.0 * p.max_eigenvalue().max(0.1));
            let split = match (p.mass_strictly_below(k), p.tail_mass(k)) {
                (Ok(a), Ok(b)) => (a + b + p.zero_mass() - p.total_mass()).abs(),
                _ => f64::INFINITY,
            };
            rec.record(
                "fourier.decomposition",
                || format!("{inst} k {k}"),
                split,
                split <= 1e-10,
            );
        }
    }
}

/// Kernel mass from the level means alone.
fn zero_mass_direct(f: &BooleanFunction) -> f64 {
    let n = f.n();
    f.level_means()
        .iter()
        .enumerate()
        .map(|(l, m)| crate::statespace::binomial(n, l) as f64 / (1u64 << n) as f64 * m * m)
        .sum()
}

fn oracle_checks(rec: &mut Recorder, cases: &[Case], rng: &mut ChaCha8Rng, cap: StateCap) {
    for case in cases.iter().filter(|c| c.graph.n() <= ORACLE_N) {
        let n = case.graph.n();
        let Ok(f) = random_function(rng, n) else { continue };
        let t = rng.random_range(0.05..2.5);
        let inst = format!("{} function {} t {t}", case.label, f.name());
        let exact = spectral_profile(&f, &case.bases).and_then(|p| p.exact_correlation(t));
        let brute = brute_force_correlation(&case.graph, &f, t, cap);
        let Some((e, b)) = rec.guard("oracle.correlation", &inst, exact.and_then(|e| Ok((e, brute?)))) else {
            continue;
        };
        let gap = (e - b).abs();
        rec.record("oracle.correlation", || inst.clone(), gap, gap <= 1e-8);

        let l = n / 2;
        if let Ok(gen) = build_level_generator(&case.graph, l, cap) {
            if let Ok(h) = matrix_exponential(&gen, t) {
                let d = h.stochasticity_defect();
                rec.record(
                    "oracle.stochastic",
                    || format!("{} level {l} t {t}", case.label),
                    d,
                    d <= 1e-10,
                );
            }
        }
    }
}

fn profile_of(g: &Graph, f: &BooleanFunction, cap: StateCap) -> Result<SpectralProfile> {
    spectral_profile(f, &all_level_bases(g, cap, EigenMethod::default())?)
}

fn diagnostics_checks(rec: &mut Recorder, cases: &[Case], nmax: usize, rng: &mut ChaCha8Rng, cap: StateCap) {
    // containment of low complete-graph eigenspaces
    for n in (6..=nmax).step_by(2) {
        let Ok(ga) = make_complete(n, 1.0 / n as f64) else {
            continue;
        };
        let Ok(psi) = all_level_bases(&ga, cap, EigenMethod::default()) else {
            continue;
        };
        let targets = [
            ("cycle", make_cycle(n, 1.0)),
            ("half-complete-cycle", make_half_complete_cycle(n / 2, 1.0)),
            ("random", random_connected(n, 0.3, 1.0, rng)),
        ];
        for (name, gb) in targets {
            let Ok(gb) = gb.and_then(|g| g.with_inverse_degree_rate()) else {
                continue;
            };
            let Ok(chi) = all_level_bases(&gb, cap, EigenMethod::default()) else {
                continue;
            };
            for k in [0.5, 1.0, 2.0, n as f64 / 4.0] {
                let inst = format!("{name}:{n} k {k}");
                let Some(window) = rec.guard(
                    "diagnostics.containment",
                    &inst,
                    containment_window(&ga, &gb, k, 2.0 * k),
                ) else {
                    continue;
                };
                for (a, b) in psi.iter().zip(&chi) {
                    if let Ok(r) = containment_residual_from_bases(a, b, k, window) {
                        rec.record(
                            "diagnostics.containment",
                            || format!("{inst} level {}", a.level()),
                            r.residual,
                            r.residual <= 1e-8,
                        );
                    }
                }
            }
        }
    }

    // projection mass on the corpus graphs
    for case in cases.iter().filter(|c| c.graph.n() >= 4) {
        let n = case.graph.n();
        let (Ok(general), Ok(complete)) = (case.graph.with_inverse_degree_rate(), make_complete(n, 1.0 / n as f64))
        else {
            continue;
        };
        let Ok(f) = random_function(rng, n) else { continue };
        let k = rng.random_range(0.01..=n as f64 / 4.0);
        let inst = format!("{} function {} k {k}", case.label, f.name());
        let check = profile_of(&complete, &f, cap)
            .and_then(|pc| Ok((pc, profile_of(&general, &f, cap)?)))
            .and_then(|(pc, pg)| projection_mass_from_profiles(&pc, &pg, k));
        if let Some(c) = rec.guard("diagnostics.projection_mass", &inst, check) {
            rec.record("diagnostics.projection_mass", || inst, c.rhs - c.lhs, c.holds);
        }
    }

    // monotonicity under edge deletion
    for n in 5..=nmax.min(6) {
        for _ in 0..8 {
            let rate = rng.random_range(0.3..1.5);
            let Ok(sub) = random_connected(n, 0.2, rate, rng) else {
                continue;
            };
            let present = sub.edge_pairs();
            let extra: Vec<(usize, usize, f64)> = (0..n)
                .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                .filter(|p| !present.contains(p))
                .filter(|_| rng.random_bool(0.5))
                .map(|(u, v)| (u, v, rate))
                .collect();
            let Ok(g) = Graph::new(n, sub.edges().iter().map(|e| (e.u, e.v, e.rate)).chain(extra)) else {
                continue;
            };
            let Ok(f) = random_function(rng, n) else { continue };
            let inst = format!(
                "random:{n} ({} of {} edges) function {}",
                sub.edge_count(),
                g.edge_count(),
                f.name()
            );
            let Some((pg, ps)) = rec.guard(
                "diagnostics.monotonicity",
                &inst,
                profile_of(&g, &f, cap).and_then(|pg| Ok((pg, profile_of(&sub, &f, cap)?))),
            ) else {
                continue;
            };
            let top = 2.0 * pg.max_eigenvalue().max(0.1);
            let k = rng.random_range(1e-3..top);
            let kp = rng.random_range(1e-3..top);
            if let Ok(c) = monotonicity_from_profiles(&pg, &ps, k, kp) {
                rec.record(
                    "diagnostics.monotonicity",
                    || format!("{inst} k {k} k' {kp}"),
                    c.lhs - c.rhs,
                    c.holds,
                );
            }
        }
    }

    // sorted spectra along cycle(2h) < half_complete_cycle(h) < complete(2h)
    for h in 2..=nmax / 2 {
        let chain = (
            make_cycle(2 * h, 1.0),
            make_half_complete_cycle(h, 1.0),
            make_complete(2 * h, 1.0),
        );
        let (Ok(c), Ok(m), Ok(k)) = chain else { continue };
        for (name, big, small) in [("half/cycle", &m, &c), ("complete/half", &k, &m)] {
            let inst = format!("{name} h {h}");
            if let Some(gap) = rec.guard(
                "diagnostics.edge_monotone_spectra",
                &inst,
                spectral_monotonicity_gap(big, small, cap),
            ) {
                rec.record("diagnostics.edge_monotone_spectra", || inst, gap, gap <= 1e-10);
            }
        }
    }
}

fn dynamics_checks(rec: &mut Recorder, seed: u64, cap: StateCap) {
    let instances: Vec<(&str, Result<Graph>, Result<BooleanFunction>, f64)> = vec![
        (
            "complete:4",
            make_complete(4, 1.0),
            BooleanFunction::dictator(4, 0),
            0.2,
        ),
        (
            "cycle:6",
            make_cycle(6, 1.0),
            BooleanFunction::parity_on_set(6, &[0, 2]),
            1.0,
        ),
        (
            "half-complete-cycle:3",
            make_half_complete_cycle(3, 0.5),
            BooleanFunction::parity_on_set(6, &[0, 4]),
            1.0,
        ),
        ("cycle:5", make_cycle(5, 1.0), BooleanFunction::majority(5), 0.2),
    ];
    for (i, (name, g, f, t)) in instances.into_iter().enumerate() {
        let (Ok(g), Ok(f)) = (g, f) else { continue };
        let Ok(p) = profile_of(&g, &f, cap) else { continue };
        let inst = format!("{name} function {} t {t}", f.name());
        let Ok(spec) = SimulationSpec::new(
            g,
            t,
            InitialDistribution::Uniform,
            seed.wrapping_add(i as u64),
            MC_SAMPLES,
        ) else {
            continue;
        };
        if let (Ok(est), Ok(exact)) = (estimate_covariance(&f, &spec), p.exact_covariance(t)) {
            let z = est.z_score(exact).abs();
            rec.record(
                "dynamics.monte_carlo",
                || format!("{inst} covariance"),
                z,
                z <= MC_SIGMAS,
            );
        }
        if let (Ok(est), Ok(exact)) = (estimate_flip_probability(&f, &spec), p.exact_flip_probability(t)) {
            let z = est.z_score(exact).abs();
            rec.record(
                "dynamics.monte_carlo",
                || format!("{inst} flip probability"),
                z,
                z <= MC_SIGMAS,
            );
        }
    }
}
