//! Level generators `-Q` of the exclusion process and their quadratic forms.
//!
//! The stored matrix is the positive semidefinite `-Q`: entry `(x, y)` for
//! `x != y` is minus the total rate of edges that carry `x` to `y`, and the
//! diagonal holds the total rate of swap-active edges at `x`. Inner products
//! use the uniform level measure, `<f, g> = (1/|S|) * sum f(x) g(x)`.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{dot, Matrix};
use crate::numfmt::csv_float;
use crate::statespace::{swap_bits, LevelStateSpace, StateCap};

#[derive(Debug, Clone)]
pub struct LevelGenerator {
    space: LevelStateSpace,
    matrix: Matrix,
    graph: Graph,
    fingerprint: u64,
}

/// Assembles `-Q` on `level` for a connected graph.
pub fn build_level_generator(g: &Graph, level: usize, cap: StateCap) -> Result<LevelGenerator> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let space = LevelStateSpace::enumerate(g.n(), level, cap)?;
    let dim = space.len();
    let mut matrix = Matrix::zeros(dim, dim);
    for (i, &x) in space.words().iter().enumerate() {
        for e in g.edges() {
            let y = swap_bits(x, e.u, e.v);
            if y == x {
                continue;
            }
            let j = space.index_of(y).expect("swaps preserve the level");
            matrix[(i, j)] -= e.rate;
            matrix[(i, i)] += e.rate;
        }
    }
    Ok(LevelGenerator {
        space,
        matrix,
        fingerprint: g.fingerprint(),
        graph: g.clone(),
    })
}

impl LevelGenerator {
    pub fn space(&self) -> &LevelStateSpace {
        &self.space
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn dim(&self) -> usize {
        self.space.len()
    }

    fn check_dim(&self, f: &[f64]) -> Result<()> {
        if f.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: f.len(),
            })
        }
    }

    /// `(-Q) f`.
    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(f)?;
        Ok(self.matrix.mul_vec(f))
    }

    /// `<f, g>` under the uniform level measure.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        self.check_dim(f)?;
        self.check_dim(g)?;
        Ok(dot(f, g) / self.dim() as f64)
    }

    /// `<-Q f, f>` via the edge sum
    /// `(1/|S|) * sum_x sum_e rate(e) * (f(x) - f(x_e))^2 / 2`.
    pub fn dirichlet_form(&self, f: &[f64]) -> Result<f64> {
        self.check_dim(f)?;
        let mut total = 0.0;
        for (i, &x) in self.space.words().iter().enumerate() {
            for e in self.graph.edges() {
                let y = swap_bits(x, e.u, e.v);
                if y == x {
                    continue;
                }
                let j = self.space.index_of(y).expect("swaps preserve the level");
                let diff = f[i] - f[j];
                total += e.rate * diff * diff;
            }
        }
        Ok(total / (2.0 * self.dim() as f64))
    }

    /// `<-Q f, f>` via the stored matrix.
    pub fn quadratic_form(&self, f: &[f64]) -> Result<f64> {
        let qf = self.apply(f)?;
        Ok(dot(&qf, f) / self.dim() as f64)
    }

    /// `<-Q f, f> / <f, f>`.
    pub fn rayleigh_quotient(&self, f: &[f64]) -> Result<f64> {
        let norm = self.inner(f, f)?;
        if norm == 0.0 {
            return Err(Error::ZeroFunction);
        }
        Ok(self.dirichlet_form(f)? / norm)
    }

    /// Row-major CSV dump in enumeration order.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.dim() {
            let row = self.matrix.row(i);
            for (j, x) in row.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(&csv_float(*x));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{make_complete, make_cycle, random_connected};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn build(g: &Graph, l: usize) -> LevelGenerator {
        build_level_generator(g, l, StateCap::default()).unwrap()
    }

    #[test]
    fn k2_level_one() {
        let gen = build(&make_complete(2, 1.0).unwrap(), 1);
        assert_eq!(gen.matrix(), &Matrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]));
        assert_eq!(gen.dirichlet_form(&[1.0, -1.0]).unwrap(), 2.0);
        assert_eq!(gen.quadratic_form(&[1.0, -1.0]).unwrap(), 2.0);
    }

    #[test]
    fn empty_level_is_zero() {
        let g = make_cycle(5, 0.3).unwrap();
        for l in [0, 5] {
            let gen = build(&g, l);
            assert_eq!(gen.matrix(), &Matrix::zeros(1, 1));
        }
    }

    #[test]
    fn k4_level_two_diagonal() {
        let g = make_complete(4, 1.0).unwrap();
        let gen = build(&g, 2);
        assert_eq!(gen.dim(), 6);
        // brute force: count edges whose endpoints differ in color
        for (i, x) in gen.space().iter().enumerate() {
            let active = g.edges().iter().filter(|e| x.get(e.u) != x.get(e.v)).count();
            assert_eq!(active, 4);
            assert_eq!(gen.matrix()[(i, i)], 4.0);
        }
    }

    #[test]
    fn complete_graph_diagonal_is_constant() {
        for n in 2..=8 {
            let rate = 0.5;
            let g = make_complete(n, rate).unwrap();
            for l in 0..=n {
                let gen = build(&g, l);
                for i in 0..gen.dim() {
                    assert_eq!(gen.matrix()[(i, i)], (l * (n - l)) as f64 * rate);
                }
            }
        }
    }

    #[test]
    fn generator_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..=7 {
            let g = random_connected(n, 0.4, 0.7, &mut rng).unwrap();
            for l in 0..=n {
                let gen = build(&g, l);
                let m = gen.matrix();
                assert!(m.symmetry_violation(0.0).is_none());
                let ones = vec![1.0; gen.dim()];
                let res = gen.apply(&ones).unwrap();
                let scale = m.max_abs().max(1.0);
                assert!(res.iter().all(|r| r.abs() <= 1e-12 * scale));
                for i in 0..gen.dim() {
                    assert!(m[(i, i)] >= 0.0);
                    for j in 0..gen.dim() {
                        if i != j {
                            assert!(m[(i, j)] <= 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_disconnected_and_oversized() {
        let g = Graph::new(4, [(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert_eq!(
            build_level_generator(&g, 2, StateCap::default()).unwrap_err(),
            Error::Disconnected
        );
        let k = make_complete(10, 1.0).unwrap();
        assert!(matches!(
            build_level_generator(&k, 5, StateCap(100)),
            Err(Error::CapExceeded { states: 252, .. })
        ));
    }

    #[test]
    fn rayleigh_quotient_edge_cases() {
        let gen = build(&make_cycle(5, 1.0).unwrap(), 2);
        assert_eq!(gen.rayleigh_quotient(&[3.0; 10]).unwrap(), 0.0);
        assert_eq!(gen.rayleigh_quotient(&[0.0; 10]), Err(Error::ZeroFunction));
        assert!(matches!(
            gen.dirichlet_form(&[1.0; 3]),
            Err(Error::DimensionMismatch {
                expected: 10,
                actual: 3
            })
        ));
    }

    proptest! {
        #[test]
        fn edge_sum_matches_matrix_form(values in prop::collection::vec(-5.0f64..5.0, 15)) {
            let g = Graph::new(6, [(0, 1, 0.3), (1, 2, 1.1), (2, 3, 0.5), (3, 4, 2.0), (4, 5, 0.9), (0, 5, 0.4), (1, 4, 0.7)]).unwrap();
            let gen = build(&g, 2);
            let a = gen.dirichlet_form(&values).unwrap();
            let b = gen.quadratic_form(&values).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
        }

        #[test]
        fn subgraph_quotient_is_smaller(values in prop::collection::vec(-1.0f64..1.0, 20), seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let big = random_connected(6, 0.5, 1.0, &mut rng).unwrap();
            let spanning_cycle = make_cycle(6, 1.0).unwrap();
            // union of the two, so the cycle is a subgraph of it
            let mut pairs = big.edge_pairs();
            pairs.extend(spanning_cycle.edge_pairs());
            let union = Graph::new(6, pairs.into_iter().map(|(u, v)| (u, v, 1.0))).unwrap();
            prop_assume!(values.iter().any(|v| *v != 0.0));
            let small_q = build(&spanning_cycle, 3).rayleigh_quotient(&values).unwrap();
            let big_q = build(&union, 3).rayleigh_quotient(&values).unwrap();
            prop_assert!(small_q <= big_q + 1e-12);
        }
    }
}
