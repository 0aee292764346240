//! Level eigenbases, the lift operators and the complete-graph eigenstructure.
//!
//! Eigenvectors are normalized in the uniform level measure, so
//! `<psi, psi> = (1/|S|) * sum psi(x)^2 = 1` and each vector has Euclidean
//! norm `sqrt(|S|)`. Vectors are stored as rows of a matrix in enumeration
//! order of the level.

use std::fmt::Write as _;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::generator::{build_level_generator, LevelGenerator};
use crate::graph::Graph;
use crate::linalg::{dot, jacobi_eigen, tridiagonal_ql_eigen, Matrix, SymmetricEigen};
use crate::numfmt::csv_float;
use crate::statespace::{binomial, LevelStateSpace, StateCap};

/// Relative tolerance for treating two eigenvalues as equal.
pub const GROUP_RTOL: f64 = 1e-8;
/// Absolute tolerance below which an eigenvalue counts as zero.
pub const ZERO_ATOL: f64 = 1e-8;

pub fn is_zero_eigenvalue(lambda: f64) -> bool {
    lambda.abs() <= ZERO_ATOL
}

/// Tolerance used when comparing an eigenvalue against a threshold `k`.
pub fn threshold_tol(k: f64) -> f64 {
    GROUP_RTOL * k.abs().max(1.0)
}

/// `lambda <= k` up to [`threshold_tol`].
pub fn at_most(lambda: f64, k: f64) -> bool {
    lambda <= k + threshold_tol(k)
}

/// `lambda > k` beyond [`threshold_tol`].
pub fn strictly_above(lambda: f64, k: f64) -> bool {
    lambda > k + threshold_tol(k)
}

/// `lambda >= k` up to [`threshold_tol`].
pub fn at_least(lambda: f64, k: f64) -> bool {
    lambda >= k - threshold_tol(k)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum EigenMethod {
    /// Householder reduction followed by implicit QL.
    #[default]
    TridiagonalQl,
    /// Cyclic Jacobi rotations.
    Jacobi,
}

#[derive(Debug, Clone)]
pub struct SpectralBasis {
    space: LevelStateSpace,
    eigenvalues: Vec<f64>,
    vectors: Matrix,
    groups: Vec<Range<usize>>,
}

impl SpectralBasis {
    /// Assembles a basis from ascending eigenvalues and unit-Euclidean rows.
    fn from_unit_rows(space: LevelStateSpace, eigenvalues: Vec<f64>, mut vectors: Matrix) -> Self {
        let scale = (space.len() as f64).sqrt();
        for i in 0..vectors.rows() {
            let row = vectors.row_mut(i);
            fix_sign(row);
            for x in row.iter_mut() {
                *x *= scale;
            }
        }
        let groups = group_sorted(&eigenvalues);
        SpectralBasis {
            space,
            eigenvalues,
            vectors,
            groups,
        }
    }

    pub fn n(&self) -> usize {
        self.space.n()
    }

    pub fn level(&self) -> usize {
        self.space.level()
    }

    pub fn space(&self) -> &LevelStateSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Rows are the eigenvectors.
    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        self.vectors.row(i)
    }

    /// Index ranges of eigenvalue clusters, in ascending order.
    pub fn groups(&self) -> &[Range<usize>] {
        &self.groups
    }

    /// Group id of every eigenvector.
    pub fn group_ids(&self) -> Vec<usize> {
        let mut ids = vec![0; self.len()];
        for (g, r) in self.groups.iter().enumerate() {
            for i in r.clone() {
                ids[i] = g;
            }
        }
        ids
    }

    /// `<f, psi_i>` for every basis vector, in the level measure.
    pub fn coefficients(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.space.len() {
            return Err(Error::DimensionMismatch {
                expected: self.space.len(),
                actual: f.len(),
            });
        }
        let w = self.space.weight();
        Ok((0..self.len()).map(|i| dot(self.vector(i), f) * w).collect())
    }

    /// Orthogonal projector onto the span of the selected vectors, as a
    /// matrix acting on level functions.
    pub fn span_projector<I: IntoIterator<Item = usize>>(&self, indices: I) -> Matrix {
        let dim = self.space.len();
        let w = self.space.weight();
        let mut p = Matrix::zeros(dim, dim);
        for i in indices {
            let v = self.vector(i);
            for a in 0..dim {
                let va = v[a] * w;
                if va == 0.0 {
                    continue;
                }
                let row = p.row_mut(a);
                for (pb, vb) in row.iter_mut().zip(v) {
                    *pb += va * vb;
                }
            }
        }
        p
    }

    /// One projector per eigenvalue group, tagged with the group's mean eigenvalue.
    pub fn eigenspace_projectors(&self) -> Vec<(f64, Matrix)> {
        self.groups
            .iter()
            .map(|r| {
                let mean = self.eigenvalues[r.clone()].iter().sum::<f64>() / r.len() as f64;
                (mean, self.span_projector(r.clone()))
            })
            .collect()
    }

    /// Projector onto the kernel.
    pub fn kernel_projector(&self) -> Matrix {
        self.span_projector((0..self.len()).filter(|&i| is_zero_eigenvalue(self.eigenvalues[i])))
    }

    /// Largest `||(-Q) psi_i - lambda_i psi_i||` in the level norm.
    pub fn max_residual(&self, gen: &LevelGenerator) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for i in 0..self.len() {
            let v = self.vector(i);
            let qv = gen.apply(v)?;
            let r: f64 = qv
                .iter()
                .zip(v)
                .map(|(a, b)| (a - self.eigenvalues[i] * b).powi(2))
                .sum();
            worst = worst.max((r * self.space.weight()).sqrt());
        }
        Ok(worst)
    }

    /// Largest `|<psi_i, psi_j> - delta_ij|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = self.vectors.mul(&self.vectors.transpose());
        let w = self.space.weight();
        let mut worst: f64 = 0.0;
        for i in 0..self.len() {
            for j in 0..self.len() {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] * w - want).abs());
            }
        }
        worst
    }
}

/// Makes the first clearly nonzero coordinate positive.
fn fix_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12 * max) {
        if *first < 0.0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
    }
}

/// Chains ascending eigenvalues into clusters of near-equal values.
fn group_sorted(values: &[f64]) -> Vec<Range<usize>> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        let split = i == values.len() || {
            let (a, b) = (values[i - 1], values[i]);
            (b - a).abs() > GROUP_RTOL * a.abs().max(1.0)
        };
        if split {
            groups.push(start..i);
            start = i;
        }
    }
    groups
}

/// Eigenbasis of a level generator using the default solver.
pub fn eigendecompose(gen: &LevelGenerator) -> Result<SpectralBasis> {
    eigendecompose_with(gen, EigenMethod::default())
}

pub fn eigendecompose_with(gen: &LevelGenerator, method: EigenMethod) -> Result<SpectralBasis> {
    eigendecompose_matrix(gen.matrix(), gen.space().clone(), method)
}

/// Eigenbasis of an arbitrary symmetric level operator whose kernel contains
/// the constants.
pub fn eigendecompose_matrix(matrix: &Matrix, space: LevelStateSpace, method: EigenMethod) -> Result<SpectralBasis> {
    let dim = space.len();
    if matrix.rows() != dim || matrix.cols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: matrix.rows(),
        });
    }
    let scale = matrix.max_abs().max(f64::MIN_POSITIVE);
    if let Some((row, col, gap)) = matrix.symmetry_violation(1e-12 * scale) {
        return Err(Error::SymmetryViolation { row, col, gap });
    }
    let ones = vec![1.0; dim];
    let kernel_gap = matrix.mul_vec(&ones).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if kernel_gap > 1e-10 * scale {
        return Err(Error::Hypothesis(format!(
            "constants are not in the kernel (row sum up to {kernel_gap:e})"
        )));
    }

    let SymmetricEigen {
        mut values,
        mut vectors,
    } = match method {
        EigenMethod::TridiagonalQl => tridiagonal_ql_eigen(matrix)?,
        EigenMethod::Jacobi => jacobi_eigen(matrix)?,
    };
    install_constant(&mut values, &mut vectors);
    Ok(SpectralBasis::from_unit_rows(space, values, vectors))
}

/// Replaces the kernel block by an orthonormal basis starting with the
/// exact constant vector.
fn install_constant(values: &mut [f64], vectors: &mut Matrix) {
    let dim = values.len();
    let kernel: Vec<usize> = (0..dim).filter(|&i| is_zero_eigenvalue(values[i])).collect();
    let constant = vec![1.0 / (dim as f64).sqrt(); dim];
    let mut accepted = vec![constant];
    for &i in &kernel {
        if accepted.len() == kernel.len() {
            break;
        }
        if let Some(v) = orthogonalize(vectors.row(i), &accepted, 1e-3) {
            accepted.push(v);
        }
    }
    // the kernel block sits at the front of the ascending order
    for (slot, (&i, v)) in kernel.iter().zip(&accepted).enumerate() {
        debug_assert_eq!(i, slot);
        vectors.row_mut(i).copy_from_slice(v);
    }
    if let Some(&first) = kernel.first() {
        values[first] = 0.0;
    }
    // keep everything else exactly orthogonal to the constants
    let c = 1.0 / (dim as f64).sqrt();
    for i in kernel.len()..dim {
        let row = vectors.row_mut(i);
        let along: f64 = row.iter().sum::<f64>() * c;
        for x in row.iter_mut() {
            *x -= along * c;
        }
        let norm = dot(row, row).sqrt();
        for x in row.iter_mut() {
            *x /= norm;
        }
    }
}

/// Twice-iterated Gram-Schmidt of `v` against orthonormal `basis`; returns the
/// normalized remainder when its norm exceeds `min_norm * ||v||`.
fn orthogonalize(v: &[f64], basis: &[Vec<f64>], min_norm: f64) -> Option<Vec<f64>> {
    let original = dot(v, v).sqrt();
    let mut w = v.to_vec();
    for _ in 0..2 {
        for b in basis {
            let c = dot(&w, b);
            for (x, y) in w.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
    }
    let norm = dot(&w, &w).sqrt();
    if norm > min_norm * original {
        for x in &mut w {
            *x /= norm;
        }
        Some(w)
    } else {
        None
    }
}

/// Eigenbases of every level `0..=n`. Levels above `n/2` are obtained by
/// complementing the bases of the lower half.
pub fn all_level_bases(g: &Graph, cap: StateCap, method: EigenMethod) -> Result<Vec<SpectralBasis>> {
    let n = g.n();
    let mut lower = Vec::with_capacity(n / 2 + 1);
    for level in 0..=n / 2 {
        let gen = build_level_generator(g, level, cap)?;
        lower.push(eigendecompose_with(&gen, method)?);
    }
    let mut all = lower.clone();
    for level in (n / 2 + 1)..=n {
        all.push(mirror_basis(&lower[n - level]));
    }
    Ok(all)
}

fn check_same_n(a: &LevelStateSpace, b: &LevelStateSpace) -> Result<()> {
    if a.n() != b.n() {
        return Err(Error::invalid(
            "n",
            format!("spaces have {} and {} vertices", a.n(), b.n()),
        ));
    }
    Ok(())
}

fn check_len(space: &LevelStateSpace, psi: &[f64]) -> Result<()> {
    if psi.len() != space.len() {
        return Err(Error::DimensionMismatch {
            expected: space.len(),
            actual: psi.len(),
        });
    }
    Ok(())
}

/// `psi_plus(x) = sum over empty sites v of psi(x with v filled)`, mapping
/// level `l` to level `l - 1`.
pub fn lift_down(psi: &[f64], from: &LevelStateSpace, to: &LevelStateSpace) -> Result<Vec<f64>> {
    check_same_n(from, to)?;
    check_len(from, psi)?;
    if from.level() == 0 {
        return Err(Error::invalid("level", "cannot lift below level 0"));
    }
    if to.level() + 1 != from.level() {
        return Err(Error::invalid(
            "level",
            format!("target level must be {}", from.level() - 1),
        ));
    }
    let n = from.n();
    Ok(to
        .words()
        .iter()
        .map(|&x| {
            (0..n)
                .filter(|v| x >> v & 1 == 0)
                .map(|v| psi[from.index_of(x | 1 << v).expect("one more marble")])
                .sum()
        })
        .collect())
}

/// `psi_minus(x) = sum over occupied sites v of psi(x with v emptied)`,
/// mapping level `l` to level `l + 1`.
pub fn lift_up(psi: &[f64], from: &LevelStateSpace, to: &LevelStateSpace) -> Result<Vec<f64>> {
    check_same_n(from, to)?;
    check_len(from, psi)?;
    if from.level() == from.n() {
        return Err(Error::invalid("level", "cannot lift above the full level"));
    }
    if to.level() != from.level() + 1 {
        return Err(Error::invalid(
            "level",
            format!("target level must be {}", from.level() + 1),
        ));
    }
    let n = from.n();
    Ok(to
        .words()
        .iter()
        .map(|&x| {
            (0..n)
                .filter(|v| x >> v & 1 == 1)
                .map(|v| psi[from.index_of(x & !(1 << v)).expect("one less marble")])
                .sum()
        })
        .collect())
}

/// `psi(x) = sum over y <= x at level m of psi_m(y)`.
pub fn sum_lift(psi: &[f64], from: &LevelStateSpace, to: &LevelStateSpace) -> Result<Vec<f64>> {
    check_same_n(from, to)?;
    check_len(from, psi)?;
    let m = from.level();
    if to.level() <= m {
        return Err(Error::invalid("level", format!("target level must exceed {m}")));
    }
    let l = to.level();
    Ok(to
        .words()
        .iter()
        .map(|&x| {
            let sites: Vec<usize> = (0..from.n()).filter(|v| x >> v & 1 == 1).collect();
            let mut total = 0.0;
            for_each_subset(l, m, |pick| {
                let y = sites
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| pick >> j & 1 == 1)
                    .fold(0u64, |acc, (_, v)| acc | 1 << v);
                total += psi[from.index_of(y).expect("subset is on level m")];
            });
            total
        })
        .collect())
}

/// Calls `f` with every `k`-bit subset of `0..n` encoded as a word.
fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(u64)) {
    if k == 0 {
        f(0);
        return;
    }
    let limit = 1u64 << n;
    let mut x = (1u64 << k) - 1;
    while x < limit {
        f(x);
        let c = x & x.wrapping_neg();
        let r = x + c;
        x = (((r ^ x) >> 2) / c) | r;
    }
}

/// Exact eigenbasis of the complete graph on `level <= n/2` with uniform rate
/// `alpha`, built by lifting the lower levels and completing with the new
/// eigenvalue `alpha * level * (n - level + 1)`.
pub fn complete_graph_basis(n: usize, level: usize, alpha: f64, cap: StateCap) -> Result<SpectralBasis> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid(
            "rate",
            format!("must be positive and finite, got {alpha}"),
        ));
    }
    if level > n / 2 {
        return Err(Error::invalid(
            "level",
            format!("{level} > n/2 = {}; build level {} and mirror it", n / 2, n - level),
        ));
    }
    let mut space = LevelStateSpace::enumerate(n, 0, cap)?;
    // (eigenvalue, unit-Euclidean vector)
    let mut basis: Vec<(f64, Vec<f64>)> = vec![(0.0, vec![1.0])];
    for m in 1..=level {
        let next = LevelStateSpace::enumerate(n, m, cap)?;
        let mut lifted = Vec::with_capacity(next.len());
        for (lambda, v) in &basis {
            let mut up = lift_up(v, &space, &next)?;
            let norm = dot(&up, &up).sqrt();
            for x in &mut up {
                *x /= norm;
            }
            lifted.push((*lambda, up));
        }
        let mut accepted: Vec<Vec<f64>> = lifted.iter().map(|(_, v)| v.clone()).collect();
        let fresh = alpha * (m * (n - m + 1)) as f64;
        let mut e = vec![0.0; next.len()];
        for i in 0..next.len() {
            if accepted.len() == next.len() {
                break;
            }
            e[i] = 1.0;
            if let Some(v) = orthogonalize(&e, &accepted, 1e-3) {
                accepted.push(v.clone());
                lifted.push((fresh, v));
            }
            e[i] = 0.0;
        }
        debug_assert_eq!(lifted.len(), next.len());
        basis = lifted;
        space = next;
    }

    // eigenvalues grow with j on j <= n/2, so a stable sort keeps lift order
    basis.sort_by(|a, b| a.0.total_cmp(&b.0));
    let dim = space.len();
    let mut vectors = Matrix::zeros(dim, dim);
    let mut values = Vec::with_capacity(dim);
    for (i, (lambda, v)) in basis.into_iter().enumerate() {
        vectors.row_mut(i).copy_from_slice(&v);
        values.push(lambda);
    }
    Ok(SpectralBasis::from_unit_rows(space, values, vectors))
}

/// Basis on level `n - l` obtained by complementing every configuration.
///
/// Complementation reverses the ascending enumeration, so every vector is
/// simply read backwards.
pub fn mirror_basis(b: &SpectralBasis) -> SpectralBasis {
    let n = b.n();
    let space =
        LevelStateSpace::enumerate(n, n - b.level(), StateCap(b.len())).expect("mirror level has the same size");
    let dim = b.len();
    let mut vectors = Matrix::zeros(dim, dim);
    for i in 0..dim {
        let row = vectors.row_mut(i);
        for (dst, src) in row.iter_mut().zip(b.vector(i).iter().rev()) {
            *dst = *src;
        }
        fix_sign(row);
    }
    SpectralBasis {
        space,
        eigenvalues: b.eigenvalues.clone(),
        vectors,
        groups: b.groups.clone(),
    }
}

/// The complete-graph spectrum on a level: `(eigenvalue, multiplicity)` for
/// `j = 0..=min(l, n - l)`.
pub fn complete_graph_spectrum(n: usize, level: usize, alpha: f64) -> Vec<(f64, u128)> {
    let top = level.min(n - level);
    (0..=top)
        .map(|j| {
            let mult = if j == 0 { 1 } else { binomial(n, j) - binomial(n, j - 1) };
            (alpha * (j * (n - j + 1)) as f64, mult)
        })
        .collect()
}

/// CSV rows `level,index,eigenvalue,multiplicity_group_id`.
pub fn spectrum_csv(bases: &[SpectralBasis]) -> String {
    let mut out = String::from("level,index,eigenvalue,multiplicity_group_id\n");
    for b in bases {
        let ids = b.group_ids();
        for (i, lambda) in b.eigenvalues().iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{}", b.level(), i, csv_float(*lambda), ids[i]);
        }
    }
    out
}

/// Largest entrywise gap between two matrices of equal shape.
pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{make_complete, make_cycle, random_connected};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn level_basis(g: &Graph, l: usize) -> (LevelGenerator, SpectralBasis) {
        let gen = build_level_generator(g, l, StateCap::default()).unwrap();
        let b = eigendecompose(&gen).unwrap();
        (gen, b)
    }

    fn space(n: usize, l: usize) -> LevelStateSpace {
        LevelStateSpace::enumerate(n, l, StateCap::default()).unwrap()
    }

    fn norm_sq(s: &LevelStateSpace, v: &[f64]) -> f64 {
        dot(v, v) * s.weight()
    }

    #[test]
    fn k2_level_one() {
        let (_, b) = level_basis(&make_complete(2, 1.0).unwrap(), 1);
        assert_eq!(b.eigenvalues()[0], 0.0);
        assert_relative_eq!(b.eigenvalues()[1], 2.0, epsilon = 1e-14);
        assert_eq!(b.vector(0), &[1.0, 1.0]);
        let v = b.vector(1);
        assert_relative_eq!(v[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(v[1], -1.0, epsilon = 1e-14);
    }

    #[test]
    fn cycle4_level_one() {
        let alpha = 0.3;
        let (_, b) = level_basis(&make_cycle(4, alpha).unwrap(), 1);
        let want = [0.0, 2.0 * alpha, 2.0 * alpha, 4.0 * alpha];
        for (x, y) in b.eigenvalues().iter().zip(want) {
            assert_relative_eq!(*x, y, epsilon = 1e-13);
        }
        assert_eq!(b.groups(), &[0..1, 1..3, 3..4]);
    }

    #[test]
    fn complete_graph_multiplicities() {
        for n in 2..=8 {
            for l in 0..=n / 2 {
                let alpha = 1.0 / n as f64;
                let (gen, b) = level_basis(&make_complete(n, alpha).unwrap(), l);
                let table = complete_graph_spectrum(n, l, alpha);
                assert_eq!(b.groups().len(), table.len());
                for (r, (lambda, mult)) in b.groups().iter().zip(&table) {
                    assert_eq!(r.len() as u128, *mult);
                    for i in r.clone() {
                        assert_relative_eq!(b.eigenvalues()[i], lambda, max_relative = 1e-10);
                    }
                }
                assert!(b.max_residual(&gen).unwrap() <= 1e-10 * gen.matrix().norm_1().max(1.0));
                assert!(b.orthonormality_defect() <= 1e-10);
            }
        }
    }

    #[test]
    fn solvers_agree_on_eigenspaces() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_connected(7, 0.3, 0.6, &mut rng).unwrap();
        let gen = build_level_generator(&g, 3, StateCap::default()).unwrap();
        let a = eigendecompose_with(&gen, EigenMethod::TridiagonalQl).unwrap();
        let b = eigendecompose_with(&gen, EigenMethod::Jacobi).unwrap();
        assert_eq!(a.groups(), b.groups());
        for ((la, pa), (lb, pb)) in a.eigenspace_projectors().iter().zip(b.eigenspace_projectors()) {
            assert_relative_eq!(*la, lb, max_relative = 1e-10, epsilon = 1e-12);
            assert!(max_abs_diff(pa, &pb) < 1e-8);
        }
    }

    #[test]
    fn constant_is_installed_exactly() {
        let (_, b) = level_basis(&make_cycle(6, 1.0).unwrap(), 3);
        assert_eq!(b.eigenvalues()[0], 0.0);
        assert!(b.vector(0).iter().all(|x| (x - 1.0).abs() < 1e-15));
        assert!(b.eigenvalues()[1] > 1e-3);
        for i in 1..b.len() {
            assert!(b.vector(i).iter().sum::<f64>().abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_asymmetric_matrix() {
        let m = Matrix::from_rows(&[vec![1.0, -1.0], vec![-1.0 + 1e-6, 1.0 - 1e-6]]);
        let err = eigendecompose_matrix(&m, space(2, 1), EigenMethod::default()).unwrap_err();
        assert!(matches!(err, Error::SymmetryViolation { .. }));
    }

    #[test]
    fn lifts_of_constants() {
        let (n, l) = (6, 2);
        let (s, down, up) = (space(n, l), space(n, l - 1), space(n, l + 1));
        let ones = vec![1.0; s.len()];
        let d = lift_down(&ones, &s, &down).unwrap();
        assert!(d.iter().all(|&x| x == (n - l + 1) as f64));
        let u = lift_up(&ones, &s, &up).unwrap();
        assert!(u.iter().all(|&x| x == (l + 1) as f64));
        let four = space(n, 4);
        let sl = sum_lift(&ones, &s, &four).unwrap();
        assert!(sl.iter().all(|&x| x == 6.0));
        assert!(lift_down(&[1.0], &space(n, 0), &space(n, 0)).is_err());
        assert!(lift_up(&[1.0], &space(n, n), &space(n, n)).is_err());
        assert!(sum_lift(&ones, &s, &s).is_err());
    }

    #[test]
    fn sum_lift_is_scaled_repeated_lift_up() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 7;
        let s1 = space(n, 1);
        let psi: Vec<f64> = (0..s1.len())
            .map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0))
            .collect();
        let s2 = space(n, 2);
        let s4 = space(n, 4);
        let s3 = space(n, 3);
        let rep = lift_up(&lift_up(&lift_up(&psi, &s1, &s2).unwrap(), &s2, &s3).unwrap(), &s3, &s4).unwrap();
        let direct = sum_lift(&psi, &s1, &s4).unwrap();
        for (a, b) in rep.iter().zip(direct) {
            assert_relative_eq!(*a / 6.0, b, max_relative = 1e-12, epsilon = 1e-14);
        }
    }

    #[test]
    fn lift_lengths_on_complete_graphs() {
        for n in 2..=8 {
            let alpha = 0.7;
            let g = make_complete(n, alpha).unwrap();
            for l in 0..=n / 2 {
                let (_, b) = level_basis(&g, l);
                for i in 0..b.len() {
                    let lambda = b.eigenvalues()[i];
                    let v = b.vector(i);
                    if l >= 1 {
                        let to = space(n, l - 1);
                        let d = lift_down(v, b.space(), &to).unwrap();
                        let lf = l as f64;
                        let want = ((n - l + 1) as f64 / (alpha * lf)) * (alpha * lf * (n - l + 1) as f64 - lambda);
                        assert_relative_eq!(norm_sq(&to, &d), want, max_relative = 1e-8, epsilon = 1e-8);
                    }
                    if l < n {
                        let to = space(n, l + 1);
                        let u = lift_up(v, b.space(), &to).unwrap();
                        let lf = (l + 1) as f64;
                        let want = (lf / (alpha * (n - l) as f64)) * (alpha * lf * (n - l) as f64 - lambda);
                        assert_relative_eq!(norm_sq(&to, &u), want, max_relative = 1e-8, epsilon = 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn top_vectors_of_k4_lift_down_to_zero() {
        // lambda = 6 alpha = alpha * l * (n - l + 1) at l = 2, so the length vanishes
        let alpha = 0.5;
        let (_, b) = level_basis(&make_complete(4, alpha).unwrap(), 2);
        let to = space(4, 1);
        for i in b.groups()[2].clone() {
            assert_relative_eq!(b.eigenvalues()[i], 6.0 * alpha, max_relative = 1e-12);
            let d = lift_down(b.vector(i), b.space(), &to).unwrap();
            assert!(norm_sq(&to, &d) < 1e-20);
        }
    }

    #[test]
    fn lift_up_of_k5_kernel_vector() {
        let alpha = 0.25;
        let (_, b) = level_basis(&make_complete(5, alpha).unwrap(), 1);
        let to = space(5, 2);
        let u = lift_up(b.vector(0), b.space(), &to).unwrap();
        let want = (2.0 / (4.0 * alpha)) * (8.0 * alpha);
        assert_eq!(want, 4.0);
        assert_relative_eq!(norm_sq(&to, &u), want, max_relative = 1e-12);
    }

    #[test]
    fn lift_up_preserves_orthogonality_on_k6() {
        let (_, b) = level_basis(&make_complete(6, 1.0).unwrap(), 2);
        let to = space(6, 3);
        let lifted: Vec<Vec<f64>> = (0..b.len())
            .map(|i| lift_up(b.vector(i), b.space(), &to).unwrap())
            .collect();
        for i in 0..lifted.len() {
            for j in 0..i {
                assert!(dot(&lifted[i], &lifted[j]).abs() * to.weight() < 1e-10);
            }
        }
    }

    #[test]
    fn sum_lift_keeps_eigenvalue_on_k6() {
        let g = make_complete(6, 1.0).unwrap();
        let (_, b1) = level_basis(&g, 1);
        let gen3 = build_level_generator(&g, 3, StateCap::default()).unwrap();
        let to = space(6, 3);
        for i in b1.groups()[1].clone() {
            assert_relative_eq!(b1.eigenvalues()[i], 6.0, max_relative = 1e-12);
            let v = sum_lift(b1.vector(i), b1.space(), &to).unwrap();
            let qv = gen3.apply(&v).unwrap();
            let res: f64 = qv
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - 6.0 * b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(norm_sq(&to, &v) > 1e-3);
            assert!(res < 1e-10 * dot(&v, &v).sqrt());
        }
    }

    #[test]
    fn sum_lift_on_cycle_is_eigenvector_or_zero() {
        let g = make_cycle(6, 1.0).unwrap();
        let (_, b1) = level_basis(&g, 1);
        let gen2 = build_level_generator(&g, 2, StateCap::default()).unwrap();
        let to = space(6, 2);
        let i = b1.groups()[1].start;
        let lambda = b1.eigenvalues()[i];
        let v = sum_lift(b1.vector(i), b1.space(), &to).unwrap();
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-8 {
            let qv = gen2.apply(&v).unwrap();
            let res: f64 = qv
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - lambda * b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(res < 1e-10 * norm);
        }
    }

    #[test]
    fn complete_basis_examples() {
        let b = complete_graph_basis(5, 1, 0.5, StateCap::default()).unwrap();
        assert_eq!(b.eigenvalues(), &[0.0, 2.5, 2.5, 2.5, 2.5]);
        let b = complete_graph_basis(4, 2, 1.0, StateCap::default()).unwrap();
        assert_eq!(b.eigenvalues(), &[0.0, 4.0, 4.0, 4.0, 6.0, 6.0]);
        assert!(b.orthonormality_defect() < 1e-12);
        assert!(complete_graph_basis(5, 3, 1.0, StateCap::default()).is_err());
    }

    #[test]
    fn complete_basis_matches_generic_solver() {
        let b = complete_graph_basis(6, 3, 0.5, StateCap::default()).unwrap();
        let (gen, e) = level_basis(&make_complete(6, 0.5).unwrap(), 3);
        assert!(b.max_residual(&gen).unwrap() < 1e-10);
        assert_eq!(b.groups(), e.groups());
        for ((la, pa), (lb, pb)) in b.eigenspace_projectors().iter().zip(e.eigenspace_projectors()) {
            assert_relative_eq!(*la, lb, max_relative = 1e-10);
            assert!(max_abs_diff(pa, &pb) <= 1e-8);
        }
    }

    #[test]
    fn mirror_examples() {
        let g = make_complete(5, 1.0).unwrap();
        let (_, b2) = level_basis(&g, 2);
        let (gen3, b3) = level_basis(&g, 3);
        let m = mirror_basis(&b2);
        assert_eq!(m.level(), 3);
        for (x, y) in m.eigenvalues().iter().zip(b3.eigenvalues()) {
            assert_relative_eq!(*x, y, max_relative = 1e-10);
        }
        assert!(m.max_residual(&gen3).unwrap() < 1e-10);
        let back = mirror_basis(&m);
        assert_eq!(back.vectors(), b2.vectors());

        let (_, b0) = level_basis(&g, 0);
        let top = mirror_basis(&b0);
        assert_eq!(top.level(), 5);
        assert_eq!(top.vector(0), &[1.0]);
    }

    #[test]
    fn mirror_on_a_random_graph() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = random_connected(7, 0.3, 1.0, &mut rng).unwrap();
        let (_, b2) = level_basis(&g, 2);
        let gen5 = build_level_generator(&g, 5, StateCap::default()).unwrap();
        assert!(mirror_basis(&b2).max_residual(&gen5).unwrap() < 1e-10);
    }

    #[test]
    fn kernel_is_graph_independent() {
        for n in [4, 7] {
            let c = make_cycle(n, 1.0).unwrap();
            let k = make_complete(n, 0.2).unwrap();
            for l in 0..=n {
                let (_, a) = level_basis(&c, l);
                let (_, b) = level_basis(&k, l);
                assert!(max_abs_diff(&a.kernel_projector(), &b.kernel_projector()) <= 1e-12);
            }
        }
    }

    #[test]
    fn spectrum_csv_rows() {
        let (_, b) = level_basis(&make_complete(4, 1.0).unwrap(), 2);
        let csv = spectrum_csv(&[b]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "level,index,eigenvalue,multiplicity_group_id");
        let values: Vec<&str> = lines[1..].iter().map(|l| l.split(',').nth(2).unwrap()).collect();
        assert_eq!(values, ["0", "4", "4", "4", "6", "6"]);
    }

    #[test]
    fn grouping_chains_close_values() {
        assert_eq!(group_sorted(&[]), Vec::<Range<usize>>::new());
        assert_eq!(
            group_sorted(&[0.0, 1e-10, 1.0, 1.0 + 5e-9, 2.0]),
            vec![0..2, 2..4, 4..5]
        );
    }
}
