//! Closed-form values checked against hand derivations that do not go
//! through the spectral code.

use approx::assert_relative_eq;
use xproc_core::fourier::{spectral_profile, BooleanFunction};
use xproc_core::graph::{make_complete, make_cycle, make_half_complete_cycle, Graph};
use xproc_core::oracle::brute_force_correlation;
use xproc_core::spectral::{all_level_bases, complete_graph_basis, complete_graph_spectrum, EigenMethod};
use xproc_core::statespace::{binomial, StateCap};

const CAP: StateCap = StateCap(20_000);

fn profile(g: &Graph, f: &BooleanFunction) -> xproc_core::fourier::SpectralProfile {
    spectral_profile(f, &all_level_bases(g, CAP, EigenMethod::default()).unwrap()).unwrap()
}

#[test]
fn complete_graph_multiplicities_fill_each_level() {
    for n in 1..=12 {
        for l in 0..=n / 2 {
            let table = complete_graph_spectrum(n, l, 1.0);
            let total: u128 = table.iter().map(|(_, m)| m).sum();
            assert_eq!(total, binomial(n, l), "n={n} l={l}");
            for (j, (lambda, _)) in table.iter().enumerate() {
                assert_eq!(*lambda, (j * (n - j + 1)) as f64);
            }
        }
    }
}

#[test]
fn k2_dictator_by_hand() {
    // Levels 0 and 2 are frozen; on level 1 the two states swap at rate a,
    // so P(unchanged at t) = (1 + e^{-2at}) / 2 and
    // E[x0(0) x0(t)] = 1/4 + (1/4)(1 + e^{-2at}) / 2.
    let a = 0.6;
    let g = make_complete(2, a).unwrap();
    let f = BooleanFunction::dictator(2, 0).unwrap();
    let p = profile(&g, &f);
    for t in [0.0, 0.1, 1.0, 4.0] {
        let want = 0.25 + 0.125 * (1.0 + (-2.0 * a * t).exp());
        assert_relative_eq!(p.exact_correlation(t).unwrap(), want, epsilon = 1e-15);
        assert_relative_eq!(p.exact_covariance(t).unwrap(), want - 0.25, epsilon = 1e-15);
    }
    assert_relative_eq!(p.zero_mass(), 0.375, epsilon = 1e-15);
    assert_relative_eq!(p.conditional_mean_variance(), 0.125, epsilon = 1e-15);
}

#[test]
fn dictator_on_complete_graphs() {
    // x(0) - l/n on level l is an eigenvector with eigenvalue a n, so the
    // covariance is cmv + (Var - cmv) e^{-a n t} with cmv = 1/(4n).
    for n in [3, 5, 8] {
        let a = 1.0 / n as f64;
        let p = profile(&make_complete(n, a).unwrap(), &BooleanFunction::dictator(n, 0).unwrap());
        let cmv = 0.25 / n as f64;
        assert_relative_eq!(p.conditional_mean_variance(), cmv, epsilon = 1e-14);
        for t in [0.3f64, 2.0] {
            let want = cmv + (0.25 - cmv) * (-t).exp();
            assert_relative_eq!(p.exact_covariance(t).unwrap(), want, epsilon = 1e-12);
        }
        let k = complete_graph_basis(n, 1, a, CAP).unwrap();
        assert_relative_eq!(k.eigenvalues()[1], 1.0, epsilon = 1e-14);
    }
}

#[test]
fn parity_flip_matches_brute_force() {
    // P(f(X_0) != f(X_e)) = 2 (E f^2 - E f(X_0) f(X_e)) for 0/1 valued f
    let g = make_half_complete_cycle(3, 0.5).unwrap();
    let f = BooleanFunction::parity_on_set(6, &[0, 2]).unwrap();
    let p = profile(&g, &f);
    for eps in [0.05, 0.5, 3.0] {
        let brute = brute_force_correlation(&g, &f, eps, CAP).unwrap();
        let want = 2.0 * (f.norm_sq() - brute);
        assert_relative_eq!(p.exact_flip_probability(eps).unwrap(), want, epsilon = 1e-12);
    }
}

#[test]
fn example_graph_chain_sizes() {
    for half in 3..=7 {
        let c = make_cycle(2 * half, 1.0).unwrap();
        let h = make_half_complete_cycle(half, 1.0).unwrap();
        let k = make_complete(2 * half, 1.0).unwrap();
        // cycle edges plus the chords of the upper half that are not cycle edges
        assert_eq!(h.edge_count(), 2 * half + half * (half - 1) / 2 - (half - 1));
        assert!(c.edge_count() < h.edge_count() && h.edge_count() < k.edge_count());
        assert!(h.contains_rated_edges_of(&c) && k.contains_rated_edges_of(&h));
    }
    assert_eq!(make_half_complete_cycle(7, 1.0).unwrap().edge_count(), 29);
}

#[test]
fn cycle_level_one_is_the_laplacian() {
    // one particle performs a random walk: eigenvalues 2a(1 - cos(2 pi j / n))
    let (n, a) = (9, 0.4);
    let b = &all_level_bases(&make_cycle(n, a).unwrap(), CAP, EigenMethod::default()).unwrap()[1];
    let mut want: Vec<f64> = (0..n)
        .map(|j| 2.0 * a * (1.0 - (2.0 * std::f64::consts::PI * j as f64 / n as f64).cos()))
        .collect();
    want.sort_by(f64::total_cmp);
    for (x, y) in b.eigenvalues().iter().zip(want) {
        assert_relative_eq!(*x, y, epsilon = 1e-12);
    }
}
