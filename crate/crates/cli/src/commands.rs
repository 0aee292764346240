use std::fmt::Write as _;

use serde_json::{json, Value};
use xproc_core::diagnostics::{
    containment_residual_from_bases, containment_window, monotonicity_from_profiles, projection_mass_inequality,
    sensitivity_profile, spectral_monotonicity_gap, SensitivityFamily, INEQUALITY_TOL,
};
use xproc_core::dynamics::{estimate_covariance, estimate_flip_probability, InitialDistribution, SimulationSpec};
use xproc_core::fourier::{spectral_profile, BooleanFunction, SpectralProfile};
use xproc_core::generator::build_level_generator;
use xproc_core::graph::Graph;
use xproc_core::numfmt::csv_float;
use xproc_core::spectral::{all_level_bases, eigendecompose, mirror_basis, spectrum_csv, EigenMethod, SpectralBasis};
use xproc_core::statespace::StateCap;
use xproc_core::suite::{run_suite, Suite, SuiteConfig};
use xproc_core::Error;

use crate::config::{
    function_family, graph_family, level_choice, load_function, other_graph, parse_grid, positive_list, primary_graph,
    rate_rule, require, Blame, CliError, CliResult, LevelChoice, Options,
};

/// Residual bound for span containment.
const CONTAINMENT_TOL: f64 = 1e-8;
const DEFAULT_SAMPLES: usize = 10_000;

pub struct Report {
    pub result: Value,
    pub csv: String,
    /// A verification inside the command failed.
    pub failed: bool,
}

fn graph_summary(g: &Graph, spec: &str) -> Value {
    json!({
        "spec": spec,
        "n": g.n(),
        "edges": g.edge_count(),
        "max_degree": g.max_degree(),
        "uniform_rate": g.uniform_rate(),
        "fingerprint": format!("{:016x}", g.fingerprint()),
    })
}

fn basis_at(g: &Graph, level: usize, cap: StateCap) -> CliResult<SpectralBasis> {
    let n = g.n();
    if level > n {
        return Err(CliError::config("level", format!("{level} exceeds n = {n}")));
    }
    let lower = level.min(n - level);
    let b = eigendecompose(&build_level_generator(g, lower, cap).blame("graph")?).blame("graph")?;
    Ok(if lower == level { b } else { mirror_basis(&b) })
}

fn selected_bases(g: &Graph, o: &Options, cap: StateCap) -> CliResult<Vec<SpectralBasis>> {
    match level_choice(o)? {
        LevelChoice::All => all_level_bases(g, cap, EigenMethod::default()).blame("graph"),
        LevelChoice::One(l) => Ok(vec![basis_at(g, l, cap)?]),
    }
}

fn full_profile(g: &Graph, f: &BooleanFunction, cap: StateCap) -> CliResult<SpectralProfile> {
    let bases = all_level_bases(g, cap, EigenMethod::default()).blame("graph")?;
    spectral_profile(f, &bases).blame("function")
}

pub fn spectrum(o: &Options, cap: StateCap) -> CliResult<Report> {
    let g = primary_graph(o)?;
    let bases = selected_bases(&g, o, cap)?;
    let mut csv = spectrum_csv(&bases);
    let mut levels = Vec::with_capacity(bases.len());
    for b in &bases {
        let groups: Vec<Value> = b
            .groups()
            .iter()
            .map(|r| {
                let mean = b.eigenvalues()[r.clone()].iter().sum::<f64>() / r.len() as f64;
                json!({"eigenvalue": mean, "multiplicity": r.len()})
            })
            .collect();
        let mut entry = json!({
            "level": b.level(),
            "dimension": b.len(),
            "eigenvalues": b.eigenvalues(),
            "groups": groups,
        });
        if o.dump_matrix {
            let gen = build_level_generator(&g, b.level(), cap).blame("graph")?;
            let rows: Vec<&[f64]> = (0..gen.dim()).map(|i| gen.matrix().row(i)).collect();
            entry["generator"] = json!(rows);
            let _ = writeln!(csv, "# generator level {}", b.level());
            csv.push_str(&gen.to_csv());
        }
        levels.push(entry);
    }
    Ok(Report {
        result: json!({"graph": graph_summary(&g, require(&o.graph, "graph")?), "levels": levels}),
        csv,
        failed: false,
    })
}

fn thresholds(o: &Options) -> CliResult<Vec<f64>> {
    let k = o.k.clone().unwrap_or_else(|| vec![1.0]);
    positive_list(&k, "k", false)?;
    Ok(k)
}

pub fn profile(o: &Options, cap: StateCap) -> CliResult<Report> {
    if o.n_grid.is_some() {
        return sensitivity(o, cap);
    }
    let g = primary_graph(o)?;
    let f = load_function(o, g.n())?;
    let p = full_profile(&g, &f, cap)?;
    let ks = thresholds(o)?;
    let mut masses = Vec::with_capacity(ks.len());
    for &k in &ks {
        masses.push(json!({
            "k": k,
            "low_frequency_mass": p.low_frequency_mass(k).blame("k")?,
            "tail_mass": p.tail_mass(k).blame("k")?,
        }));
    }
    Ok(Report {
        result: json!({
            "graph": graph_summary(&g, require(&o.graph, "graph")?),
            "function": f.name(),
            "total_mass": p.total_mass(),
            "zero_mass": p.zero_mass(),
            "summary": p.summary(),
            "masses": masses,
            "entries": p.entries(),
        }),
        csv: p.to_csv(),
        failed: false,
    })
}

fn sensitivity(o: &Options, cap: StateCap) -> CliResult<Report> {
    let family = SensitivityFamily {
        graph: graph_family(o)?,
        rate: rate_rule(o)?,
        function: function_family(o)?,
    };
    let grid = parse_grid(require(&o.n_grid, "n_grid")?)?;
    let ks = thresholds(o)?;
    let report = sensitivity_profile(&family, &grid, &ks, cap).blame("n_grid")?;
    let mut csv =
        String::from("n,vertices,rate,variance,conditional_mean_variance,zero_mass,k,low_frequency_mass,tail_mass\n");
    for r in &report.records {
        for (j, k) in ks.iter().enumerate() {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{}",
                r.n,
                r.vertices,
                csv_float(r.rate),
                csv_float(r.variance),
                csv_float(r.conditional_mean_variance),
                csv_float(r.zero_mass),
                csv_float(*k),
                csv_float(r.low_frequency_mass[j]),
                csv_float(r.tail_mass[j]),
            );
        }
    }
    if let Some(t) = &report.truncated {
        let _ = writeln!(csv, "# truncated at n = {}: {}", t.n, t.reason);
    }
    let failed = report.checks.iter().any(|c| c.violations > 0);
    Ok(Report {
        result: serde_json::to_value(&report).expect("report serializes"),
        csv,
        failed,
    })
}

fn times(o: &Options) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let t = o.t.clone().unwrap_or_default();
    let eps = o.eps.clone().unwrap_or_default();
    if t.is_empty() && eps.is_empty() {
        return Err(CliError::config("t", "give --t and/or --eps"));
    }
    positive_list(&t, "t", true)?;
    positive_list(&eps, "eps", true)?;
    Ok((t, eps))
}

pub fn exact(o: &Options, cap: StateCap) -> CliResult<Report> {
    let g = primary_graph(o)?;
    let f = load_function(o, g.n())?;
    let (ts, eps) = times(o)?;
    if !eps.is_empty() {
        f.require_boolean().blame("function")?;
    }
    let p = full_profile(&g, &f, cap)?;
    let mut csv = String::from("quantity,time,value\n");
    let mut rows = Vec::new();
    for &t in &ts {
        let corr = p.exact_correlation(t).blame("t")?;
        let cov = p.exact_covariance(t).blame("t")?;
        let _ = writeln!(csv, "correlation,{},{}", csv_float(t), csv_float(corr));
        let _ = writeln!(csv, "covariance,{},{}", csv_float(t), csv_float(cov));
        rows.push(json!({"t": t, "correlation": corr, "covariance": cov}));
    }
    let mut flips = Vec::new();
    for &e in &eps {
        let q = p.exact_flip_probability(e).blame("eps")?;
        let _ = writeln!(csv, "flip_probability,{},{}", csv_float(e), csv_float(q));
        flips.push(json!({"eps": e, "flip_probability": q}));
    }
    Ok(Report {
        result: json!({
            "graph": graph_summary(&g, require(&o.graph, "graph")?),
            "function": f.name(),
            "mean": p.mean(),
            "variance": p.variance(),
            "times": rows,
            "flips": flips,
        }),
        csv,
        failed: false,
    })
}

pub fn simulate(o: &Options, cap: StateCap) -> CliResult<Report> {
    let g = primary_graph(o)?;
    let f = load_function(o, g.n())?;
    let (ts, eps) = times(o)?;
    let samples = o.samples.unwrap_or(DEFAULT_SAMPLES);
    let seed = o.seed.unwrap_or(0);
    let initial = match level_choice(o)? {
        LevelChoice::All => InitialDistribution::Uniform,
        LevelChoice::One(l) => InitialDistribution::Level(l),
    };
    // exact values only describe the uniform start
    let profile = match initial {
        InitialDistribution::Uniform => Some(full_profile(&g, &f, cap)?),
        InitialDistribution::Level(_) => None,
    };
    let mut csv = String::from("quantity,time,estimate,std_error,exact\n");
    let mut row = |quantity: &str, time: f64, est: xproc_core::dynamics::EstimateResult, exact: Option<f64>| {
        let _ = writeln!(
            csv,
            "{quantity},{},{},{},{}",
            csv_float(time),
            csv_float(est.point),
            csv_float(est.std_error),
            exact.map(csv_float).unwrap_or_default()
        );
        json!({
            "time": time,
            "estimate": est.point,
            "std_error": est.std_error,
            "samples": est.samples,
            "exact": exact,
            "z_score": exact.map(|x| est.z_score(x)),
        })
    };
    let mut covariance = Vec::new();
    for &t in &ts {
        let spec = SimulationSpec::new(g.clone(), t, initial, seed, samples).blame("samples")?;
        let est = estimate_covariance(&f, &spec).blame("function")?;
        let exact = profile.as_ref().map(|p| p.exact_covariance(t)).transpose().blame("t")?;
        covariance.push(row("covariance", t, est, exact));
    }
    let mut flips = Vec::new();
    for &e in &eps {
        let spec = SimulationSpec::new(g.clone(), e, initial, seed, samples).blame("samples")?;
        let est = estimate_flip_probability(&f, &spec).blame("function")?;
        let exact = profile
            .as_ref()
            .map(|p| p.exact_flip_probability(e))
            .transpose()
            .blame("eps")?;
        flips.push(row("flip_probability", e, est, exact));
    }
    Ok(Report {
        result: json!({
            "graph": graph_summary(&g, require(&o.graph, "graph")?),
            "function": f.name(),
            "initial": initial,
            "samples": samples,
            "seed": seed,
            "covariance": covariance,
            "flip_probability": flips,
        }),
        csv,
        failed: false,
    })
}

pub fn verify(o: &Options, cap: StateCap) -> CliResult<Report> {
    let suite: Suite = o.suite.as_deref().unwrap_or("all").parse().blame("suite")?;
    let cfg = SuiteConfig {
        suite,
        nmax: o.nmax.unwrap_or(8),
        seed: o.seed.unwrap_or(0),
        state_cap: cap.0,
    };
    let report = run_suite(&cfg).blame("nmax")?;
    let mut csv = String::from("check,instances,violations,max_residual\n");
    for c in &report.checks {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            c.name,
            c.instances,
            c.violations,
            csv_float(c.max_residual)
        );
    }
    for v in &report.violations {
        let _ = writeln!(csv, "# violation {}: {} (residual {})", v.check, v.instance, v.residual);
    }
    Ok(Report {
        failed: !report.passed,
        result: serde_json::to_value(&report).expect("report serializes"),
        csv,
    })
}

/// Pairs each `k` with its `k'` (default `2k`).
fn threshold_pairs(o: &Options) -> CliResult<Vec<(f64, f64)>> {
    let ks = thresholds(o)?;
    let kps = match &o.kprime {
        None => ks.iter().map(|k| 2.0 * k).collect(),
        Some(v) if v.len() == 1 => vec![v[0]; ks.len()],
        Some(v) if v.len() == ks.len() => v.clone(),
        Some(v) => {
            return Err(CliError::config(
                "kprime",
                format!("expected 1 or {} values, got {}", ks.len(), v.len()),
            ))
        }
    };
    positive_list(&kps, "kprime", false)?;
    Ok(ks.into_iter().zip(kps).collect())
}

fn skipped(reason: impl std::fmt::Display) -> Value {
    json!({"skipped": reason.to_string()})
}

pub fn compare(o: &Options, cap: StateCap) -> CliResult<Report> {
    let ga = primary_graph(o)?;
    let gb = other_graph(o)?;
    if ga.n() != gb.n() {
        return Err(CliError::config(
            "other_graph",
            format!("has {} vertices, --graph has {}", gb.n(), ga.n()),
        ));
    }
    let n = ga.n();
    let pairs = threshold_pairs(o)?;
    let f = o.function.as_ref().map(|_| load_function(o, n)).transpose()?;
    let mut failed = false;
    let mut csv = String::from("check,k,kprime,lhs,rhs,holds\n");
    let line = |csv: &mut String, name: &str, k: f64, kp: Option<f64>, lhs: f64, rhs: f64, holds: bool| {
        let _ = writeln!(
            csv,
            "{name},{},{},{},{},{holds}",
            csv_float(k),
            kp.map(csv_float).unwrap_or_default(),
            csv_float(lhs),
            csv_float(rhs)
        );
    };

    // span containment, graph -> other graph
    let mut containment = Vec::new();
    let bases_a = selected_bases(&ga, o, cap)?;
    let bases_b = selected_bases(&gb, o, cap)?;
    for &(k, kp) in &pairs {
        match containment_window(&ga, &gb, k, kp) {
            Ok(window) => {
                let mut levels = Vec::new();
                let mut worst: f64 = 0.0;
                for (a, b) in bases_a.iter().zip(&bases_b) {
                    let r = containment_residual_from_bases(a, b, k, window).blame("level")?;
                    worst = worst.max(r.residual);
                    levels.push(
                        json!({"level": a.level(), "residual": r.residual, "checked_vectors": r.checked_vectors}),
                    );
                }
                let holds = worst <= CONTAINMENT_TOL;
                failed |= !holds;
                line(&mut csv, "containment", k, Some(kp), worst, CONTAINMENT_TOL, holds);
                containment.push(json!({
                    "k": k, "kprime": kp, "window": window, "max_residual": worst, "holds": holds, "levels": levels,
                }));
            }
            Err(e @ (Error::Hypothesis(_) | Error::DimensionMismatch { .. })) => {
                let mut v = skipped(e);
                v["k"] = json!(k);
                v["kprime"] = json!(kp);
                containment.push(v);
            }
            Err(e) => return Err(CliError::from_core("k", e)),
        }
    }

    // edge monotonicity, other graph as the subgraph
    let nested = ga.contains_rated_edges_of(&gb);
    let edge_monotone = if nested {
        let gap = spectral_monotonicity_gap(&ga, &gb, cap).blame("other_graph")?;
        let holds = gap <= INEQUALITY_TOL;
        failed |= !holds;
        line(&mut csv, "edge_monotone_spectra", 0.0, None, gap, INEQUALITY_TOL, holds);
        json!({"max_gap": gap, "holds": holds})
    } else {
        skipped("--other-graph is not a rated subgraph of --graph")
    };

    let mut monotonicity = Vec::new();
    let mut projection = Vec::new();
    if let Some(f) = &f {
        if nested {
            let pa = full_profile(&ga, f, cap)?;
            let pb = full_profile(&gb, f, cap)?;
            for &(k, kp) in &pairs {
                let c = monotonicity_from_profiles(&pa, &pb, k, kp).blame("k")?;
                failed |= !c.holds;
                line(&mut csv, "monotonicity", k, Some(kp), c.lhs, c.rhs, c.holds);
                monotonicity.push(json!({"k": k, "kprime": kp, "lhs": c.lhs, "rhs": c.rhs, "holds": c.holds}));
            }
        }
        for &(k, _) in &pairs {
            if k > n as f64 / 4.0 {
                let mut v = skipped(format!("k = {k} exceeds n/4"));
                v["k"] = json!(k);
                projection.push(v);
                continue;
            }
            let c = projection_mass_inequality(&gb, f, k, cap).blame("other_graph")?;
            failed |= !c.holds;
            line(&mut csv, "projection_mass", k, None, c.lhs, c.rhs, c.holds);
            projection.push(json!({"k": k, "lhs": c.lhs, "rhs": c.rhs, "holds": c.holds}));
        }
    }

    Ok(Report {
        result: json!({
            "graph": graph_summary(&ga, require(&o.graph, "graph")?),
            "other_graph": graph_summary(&gb, require(&o.other_graph, "other_graph")?),
            "function": f.as_ref().map(|f| f.name().to_string()),
            "containment": containment,
            "edge_monotone_spectra": edge_monotone,
            "monotonicity": monotonicity,
            "projection_mass": projection,
            "passed": !failed,
        }),
        csv,
        failed,
    })
}
