//! The ten acceptance criteria. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line; exits nonzero if any fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xproc_core::diagnostics::{
    containment_residual_from_bases, containment_window, monotonicity_from_profiles, projection_mass_from_profiles,
    spectral_monotonicity_gap,
};
use xproc_core::dynamics::{estimate_covariance, estimate_flip_probability, InitialDistribution, SimulationSpec};
use xproc_core::fourier::{spectral_profile, BooleanFunction, SpectralProfile};
use xproc_core::generator::build_level_generator;
use xproc_core::graph::{make_complete, make_cycle, make_half_complete_cycle, random_connected, Graph};
use xproc_core::linalg::dot;
use xproc_core::oracle::brute_force_correlation;
use xproc_core::spectral::{
    all_level_bases, complete_graph_spectrum, lift_down, lift_up, max_abs_diff, EigenMethod, SpectralBasis,
};
use xproc_core::statespace::{binomial, StateCap};

const CAP: StateCap = StateCap(20_000);

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn bases(g: &Graph) -> Vec<SpectralBasis> {
    all_level_bases(g, CAP, EigenMethod::default()).expect("level bases")
}

fn profile(g: &Graph, f: &BooleanFunction) -> SpectralProfile {
    spectral_profile(f, &bases(g)).expect("profile")
}

fn random_table(rng: &mut ChaCha8Rng, n: usize) -> BooleanFunction {
    match rng.random_range(0..3) {
        0 => BooleanFunction::explicit_table(n, (0..1 << n).map(|_| rng.random_range(-1.0..1.0)).collect()),
        1 => BooleanFunction::explicit_table(n, (0..1 << n).map(|_| f64::from(rng.random_bool(0.5))).collect()),
        _ => BooleanFunction::dictator(n, rng.random_range(0..n)),
    }
    .expect("function")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn complete_spectrum() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in 2..=10 {
        for alpha in [1.0, 1.0 / n as f64] {
            let g = make_complete(n, alpha).unwrap();
            for b in bases(&g).iter().take(n / 2 + 1) {
                let table = complete_graph_spectrum(n, b.level(), alpha);
                if b.groups().len() != table.len() {
                    return Err(format!(
                        "n={n} l={} has {} groups, want {}",
                        b.level(),
                        b.groups().len(),
                        table.len()
                    ));
                }
                for (r, (lambda, mult)) in b.groups().iter().zip(&table) {
                    if r.len() as u128 != *mult {
                        return Err(format!(
                            "n={n} l={} eigenvalue {lambda}: multiplicity {}",
                            b.level(),
                            r.len()
                        ));
                    }
                    for &x in &b.eigenvalues()[r.clone()] {
                        worst = worst.max(rel(x, *lambda));
                    }
                }
                cases += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    if worst > 1e-8 || elapsed > Duration::from_secs(60) {
        return Err(format!("max relative error {worst:e}, {elapsed:?}"));
    }
    Ok(format!(
        "{cases} (n, l, alpha) cases, max relative error {worst:e}, {elapsed:.1?}"
    ))
}

/// Squared pi-norm of a lift and the residual of the lift as an eigenvector.
fn lift_stats(g: &Graph, all: &[SpectralBasis], l: usize, i: usize, up: bool) -> (f64, f64) {
    let b = &all[l];
    let t = if up { l + 1 } else { l - 1 };
    let to = all[t].space();
    let v = b.vector(i);
    let w = if up {
        lift_up(v, b.space(), to)
    } else {
        lift_down(v, b.space(), to)
    }
    .unwrap();
    let gen = build_level_generator(g, t, CAP).unwrap();
    let qw = gen.apply(&w).unwrap();
    let lambda = b.eigenvalues()[i];
    let res = qw.iter().zip(&w).map(|(a, x)| (a - lambda * x).powi(2)).sum::<f64>() * to.weight();
    (dot(&w, &w) * to.weight(), res.sqrt() / lambda.max(1.0))
}

fn lift_lengths() -> Outcome {
    let mut worst_len: f64 = 0.0;
    let mut worst_res: f64 = 0.0;
    let mut count = 0;
    for n in 2..=10 {
        let alpha = 1.0 / n as f64;
        let g = make_complete(n, alpha).unwrap();
        let all = bases(&g);
        for l in 0..=n / 2 {
            for i in 0..all[l].len() {
                let lambda = all[l].eigenvalues()[i];
                if l >= 1 {
                    let al = alpha * l as f64;
                    let want = ((n - l + 1) as f64 / al) * (al * (n - l + 1) as f64 - lambda);
                    worst_len = worst_len.max(rel(lift_stats(&g, &all, l, i, false).0, want));
                    count += 1;
                }
                let lf = (l + 1) as f64;
                let want = (lf / (alpha * (n - l) as f64)) * (alpha * lf * (n - l) as f64 - lambda);
                worst_len = worst_len.max(rel(lift_stats(&g, &all, l, i, true).0, want));
                count += 1;
            }
        }
    }
    for n in 3..=10 {
        let g = make_cycle(n, 1.0).unwrap();
        let all = bases(&g);
        for l in 0..=n {
            for i in 0..all[l].len() {
                if l >= 1 {
                    worst_res = worst_res.max(lift_stats(&g, &all, l, i, false).1);
                }
                if l < n {
                    worst_res = worst_res.max(lift_stats(&g, &all, l, i, true).1);
                }
            }
        }
    }
    if worst_len > 1e-8 || worst_res > 1e-8 {
        return Err(format!("length error {worst_len:e}, cycle lift residual {worst_res:e}"));
    }
    Ok(format!(
        "{count} complete-graph lifts, length error {worst_len:e}; cycle lift residual {worst_res:e}"
    ))
}

fn eigenvalue_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut violations = 0;
    let mut tightest = f64::INFINITY;
    for _ in 0..100 {
        let n = rng.random_range(2..=8);
        let alpha = rng.random_range(0.1..2.0);
        let g = random_connected(n, rng.random_range(0.0..1.0), alpha, &mut rng).unwrap();
        let d = g.max_degree() as f64;
        for b in bases(&g) {
            let top = b.eigenvalues().last().copied().unwrap_or(0.0);
            let bound = 2.0 * alpha * b.level() as f64 * d;
            if top > bound + 1e-10 {
                violations += 1;
            }
            if b.level() > 0 {
                tightest = tightest.min(bound - top);
            }
        }
    }
    match violations {
        0 => Ok(format!("100 graphs, all levels, smallest slack {tightest:e}")),
        v => Err(format!("{v} violations")),
    }
}

fn covariance_formula() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(2..=6);
        let g = random_connected(n, 0.4, rng.random_range(0.2..1.5), &mut rng).unwrap();
        let f = random_table(&mut rng, n);
        let t = rng.random_range(0.0..3.0);
        let exact = profile(&g, &f).exact_correlation(t).unwrap();
        let brute = brute_force_correlation(&g, &f, t, CAP).unwrap();
        worst = worst.max((exact - brute).abs());
    }
    let elapsed = start.elapsed();
    if worst > 1e-8 || elapsed > Duration::from_secs(120) {
        return Err(format!("max gap {worst:e}, {elapsed:?}"));
    }
    Ok(format!(
        "50 instances, max |exact - brute force| {worst:e}, {elapsed:.1?}"
    ))
}

fn monte_carlo() -> Outcome {
    let start = Instant::now();
    let k4 = make_complete(4, 1.0).unwrap();
    let c8 = make_cycle(8, 1.0).unwrap();
    let h3 = make_half_complete_cycle(3, 1.0).unwrap();
    let f = |n: usize, set: &[usize]| BooleanFunction::parity_on_set(n, set).unwrap();
    let d = |n: usize, v: usize| BooleanFunction::dictator(n, v).unwrap();
    let instances = [
        (&k4, d(4, 0), 0.2),
        (&k4, d(4, 0), 1.0),
        (&k4, f(4, &[0, 1]), 0.2),
        (&c8, d(8, 3), 0.2),
        (&c8, d(8, 3), 1.0),
        (&c8, f(8, &[0, 2, 4]), 0.2),
        (&c8, f(8, &[1, 5]), 1.0),
        (&h3, d(6, 0), 0.2),
        (&h3, f(6, &[0, 4]), 1.0),
        (&h3, f(6, &[1, 3, 5]), 0.2),
    ];
    let mut inside = 0;
    let mut worst: f64 = 0.0;
    for (i, (g, func, t)) in instances.iter().enumerate() {
        let p = profile(g, func);
        let spec =
            SimulationSpec::new((*g).clone(), *t, InitialDistribution::Uniform, 7000 + i as u64, 100_000).unwrap();
        let z_cov = estimate_covariance(func, &spec)
            .unwrap()
            .z_score(p.exact_covariance(*t).unwrap());
        let z_flip = estimate_flip_probability(func, &spec)
            .unwrap()
            .z_score(p.exact_flip_probability(*t).unwrap());
        worst = worst.max(z_cov).max(z_flip);
        if z_cov <= 3.0 && z_flip <= 3.0 {
            inside += 1;
        }
    }
    let elapsed = start.elapsed();
    if inside < 9 || elapsed > Duration::from_secs(300) {
        return Err(format!("{inside}/10 instances within 3 SE, {elapsed:?}"));
    }
    Ok(format!(
        "{inside}/10 instances within 3 SE on both estimators, largest |z| {worst:.2}, {elapsed:.1?}"
    ))
}

fn containment() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for n in [6, 8, 10, 12] {
        let ga = make_complete(n, 1.0 / n as f64).unwrap();
        let psi = bases(&ga);
        let targets = [
            make_cycle(n, 1.0).unwrap(),
            make_half_complete_cycle(n / 2, 1.0).unwrap(),
            random_connected(n, 0.3, 1.0, &mut rng).unwrap(),
        ];
        for gb in targets {
            let gb = gb.with_inverse_degree_rate().unwrap();
            let chi = bases(&gb);
            for k in [0.5, 1.0, 2.0, n as f64 / 4.0] {
                let window = containment_window(&ga, &gb, k, 2.0 * k).map_err(|e| format!("n={n} k={k}: {e}"))?;
                for (a, b) in psi.iter().zip(&chi) {
                    let r = containment_residual_from_bases(a, b, k, window).unwrap();
                    worst = worst.max(r.residual);
                    count += 1;
                }
            }
        }
    }
    if worst > 1e-8 {
        return Err(format!("max residual {worst:e}"));
    }
    Ok(format!("{count} (graph, level, k) cases, max residual {worst:e}"))
}

fn projection_mass() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut violations = 0;
    let mut min_slack = f64::INFINITY;
    for _ in 0..100 {
        let n = rng.random_range(4..=8);
        let gb = random_connected(n, rng.random_range(0.0..0.8), 1.0, &mut rng)
            .unwrap()
            .with_inverse_degree_rate()
            .unwrap();
        let f = random_table(&mut rng, n);
        let k = rng.random_range(0.05..=n as f64 / 4.0);
        let pc = profile(&make_complete(n, 1.0 / n as f64).unwrap(), &f);
        let pg = profile(&gb, &f);
        let c = projection_mass_from_profiles(&pc, &pg, k).unwrap();
        if !c.holds {
            violations += 1;
        }
        min_slack = min_slack.min(c.lhs - c.rhs);
    }
    match violations {
        0 => Ok(format!("100 instances, smallest lhs - rhs {min_slack:e}")),
        v => Err(format!("{v} violations")),
    }
}

fn monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut violations = 0;
    for _ in 0..100 {
        let n = rng.random_range(5..=6);
        let rate = rng.random_range(0.3..1.5);
        let sub = random_connected(n, 0.2, rate, &mut rng).unwrap();
        let present = sub.edge_pairs();
        let mut edges: Vec<(usize, usize, f64)> = sub.edges().iter().map(|e| (e.u, e.v, e.rate)).collect();
        for u in 0..n {
            for v in u + 1..n {
                if !present.contains(&(u, v)) && rng.random_bool(0.5) {
                    edges.push((u, v, rate));
                }
            }
        }
        let g = Graph::new(n, edges).unwrap();
        let f = random_table(&mut rng, n);
        let (pg, ps) = (profile(&g, &f), profile(&sub, &f));
        let top = 2.0 * pg.max_eigenvalue();
        let k = rng.random_range(1e-3..=top);
        let kp = rng.random_range(1e-3..=top);
        if !monotonicity_from_profiles(&pg, &ps, k, kp).unwrap().holds {
            violations += 1;
        }
    }
    let mut gap = f64::NEG_INFINITY;
    for h in 2..=6 {
        let c = make_cycle(2 * h, 1.0).unwrap();
        let m = make_half_complete_cycle(h, 1.0).unwrap();
        let k = make_complete(2 * h, 1.0).unwrap();
        gap = gap.max(spectral_monotonicity_gap(&m, &c, CAP).unwrap());
        gap = gap.max(spectral_monotonicity_gap(&k, &m, CAP).unwrap());
    }
    if violations > 0 || gap > 1e-10 {
        return Err(format!("{violations} inequality violations, chain gap {gap:e}"));
    }
    Ok(format!(
        "100 instances, 0 violations; chain up to 12 vertices, max mu_i - lambda_i {gap:e}"
    ))
}

fn kernel_independence() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 3..=10 {
        let a = bases(&make_cycle(n, 1.0).unwrap());
        let b = bases(&make_complete(n, 1.0).unwrap());
        for (x, y) in a.iter().zip(&b) {
            worst = worst.max(max_abs_diff(&x.kernel_projector(), &y.kernel_projector()));
        }
        assert_eq!(
            a.iter().map(|x| x.len() as u128).sum::<u128>(),
            (0..=n).map(|l| binomial(n, l)).sum()
        );
    }
    if worst > 1e-12 {
        return Err(format!("max projector gap {worst:e}"));
    }
    Ok(format!("n = 3..10, all levels, max projector gap {worst:e}"))
}

fn determinism() -> Outcome {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_xproc"))
            .args(["verify", "--suite", "all", "--nmax", "8", "--seed", "7"])
            .output()
            .map_err(|e| e.to_string())
    };
    let (a, b) = (run()?, run()?);
    if !a.status.success() || !b.status.success() {
        return Err(format!(
            "exit codes {:?} / {:?}: {}",
            a.status.code(),
            b.status.code(),
            String::from_utf8_lossy(&a.stderr)
        ));
    }
    if a.stdout != b.stdout {
        return Err("reports differ between runs".into());
    }
    Ok(format!("exit 0 twice, {} identical bytes", a.stdout.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("complete-graph spectrum", complete_spectrum),
        ("lift length formulas", lift_lengths),
        ("eigenvalue bound", eigenvalue_bound),
        ("spectral covariance formula", covariance_formula),
        ("Monte Carlo consistency", monte_carlo),
        ("span containment", containment),
        ("projection-mass inequality", projection_mass),
        ("monotonicity inequality", monotonicity),
        ("kernel independence", kernel_independence),
        ("end-to-end determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
