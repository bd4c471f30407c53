//! The coupled random walk of two semiautomata on `S_N × S_N`.
//!
//! Both automata read the same uniformly random word, so the pair of total
//! permutations performs a random walk whose single step is the distribution
//! of `(δ_a, δ'_a)` over a uniform symbol `a`. The agreement probability
//! after `T` steps depends only on the Fourier transform `M` of that step
//! distribution at `std ⊗ std`:
//!
//! ```text
//! P_agree(T) = 1/N + (1/N) v^T M^T v,    v = Σ_i e_i ⊗ e_i
//! ```
//!
//! Everything here computes the residual `(1/N) v^T M^T v` directly by
//! repeated matrix-vector products; `M^T` is never formed, and the residual
//! is never recovered by subtracting `1/N` from a probability.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::automata::Semiautomaton;
use crate::error::{domain, Error, Result};
use crate::perm::{all_permutations, Permutation, Transposition};
use crate::symrep::{char_ratio, irrep_dim, std_matrix, Partition, RepMatrix, StdCache};

/// Default budget for brute-force enumeration, in `(word, start)` evaluations.
pub const DEFAULT_BRUTE_LIMIT: u128 = 100_000_000;

const SYMMETRY_TOL: f64 = 1e-10;
const EIGEN_RESIDUAL_TOL: f64 = 1e-8;

/// One support point of the step distribution: a pair of step permutations
/// (`None` = identity) and the number of symbols producing it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepMass {
    pub first: Option<Transposition>,
    pub second: Option<Transposition>,
    pub count: u64,
}

/// `T_SA(g, h) = |{a : (δ_a, δ'_a) = (g, h)}| / |Σ|`, aggregated over
/// distinct pairs. Masses are exact: `count / total`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepDistribution {
    n: usize,
    total: u64,
    entries: Vec<StepMass>,
}

impl StepDistribution {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `|Σ|`, the common denominator of all masses.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn entries(&self) -> &[StepMass] {
        &self.entries
    }

    pub fn mass(&self, entry: &StepMass) -> f64 {
        entry.count as f64 / self.total as f64
    }

    pub fn exact_mass(&self, entry: &StepMass) -> Ratio<u64> {
        Ratio::new(entry.count, self.total)
    }

    /// Support as explicit permutation pairs with their masses.
    pub fn pairs(&self) -> Result<Vec<(Permutation, Permutation, f64)>> {
        let lift = |t: Option<Transposition>| match t {
            None => Ok(Permutation::identity(self.n)),
            Some(t) => t.to_permutation(self.n),
        };
        self.entries
            .iter()
            .map(|e| Ok((lift(e.first)?, lift(e.second)?, self.mass(e))))
            .collect()
    }
}

fn check_pair(a: &Semiautomaton, b: &Semiautomaton) -> Result<()> {
    if a.n_states() != b.n_states() || a.alphabet() != b.alphabet() {
        return Err(Error::Size(format!(
            "automata disagree on alphabet: N = {} vs {}, |Σ| = {} vs {}",
            a.n_states(),
            b.n_states(),
            a.alphabet_size(),
            b.alphabet_size()
        )));
    }
    Ok(())
}

/// Single-step distribution of the coupled walk driven by `a` and `b`.
pub fn step_distribution(a: &Semiautomaton, b: &Semiautomaton) -> Result<StepDistribution> {
    check_pair(a, b)?;
    let mut counts: BTreeMap<(Option<Transposition>, Option<Transposition>), u64> = BTreeMap::new();
    for symbol in 0..a.alphabet_size() {
        *counts
            .entry((a.transition(symbol), b.transition(symbol)))
            .or_default() += 1;
    }
    Ok(StepDistribution {
        n: a.n_states(),
        total: a.alphabet_size() as u64,
        entries: counts
            .into_iter()
            .map(|((first, second), count)| StepMass {
                first,
                second,
                count,
            })
            .collect(),
    })
}

/// `M_{Π0}`: the Fourier transform of a step distribution at `std ⊗ std`.
///
/// Symmetric because every step is an involution and `std` is orthogonal.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierMatrix {
    n: usize,
    matrix: DMatrix<f64>,
}

impl FourierMatrix {
    pub fn from_matrix(n: usize, matrix: DMatrix<f64>) -> Result<Self> {
        let d = n.saturating_sub(1).pow(2);
        if n < 2 || matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::Size(format!(
                "expected a {d}x{d} matrix for N = {n}, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(FourierMatrix { n, matrix })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let d = (n.max(2) - 1).pow(2);
        FourierMatrix::from_matrix(n, DMatrix::identity(d, d))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `(N-1)^2`.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// Max-entry asymmetry `‖M - M^T‖_∞`.
    pub fn asymmetry(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }
}

/// `Σ mass · std(g) ⊗ std(h)` over the support of `dist`.
pub fn fourier_pi0(dist: &StepDistribution, cache: &StdCache) -> Result<FourierMatrix> {
    if cache.n() != dist.n {
        return Err(Error::Size(format!(
            "matrix cache is for N = {}, distribution for N = {}",
            cache.n(),
            dist.n
        )));
    }
    let d = cache.dim() * cache.dim();
    let mut m = DMatrix::zeros(d, d);
    for e in &dist.entries {
        let term = cache.step(e.first).kronecker(cache.step(e.second));
        m += term * dist.mass(e);
    }
    FourierMatrix::from_matrix(dist.n, m)
}

/// `v = Σ_{i=1}^{N-1} e_i ⊗ e_i`, with `‖v‖² = N - 1`.
pub fn diag_vector(n: usize) -> DVector<f64> {
    let d = n - 1;
    let mut v = DVector::zeros(d * d);
    for i in 0..d {
        v[i * d + i] = 1.0;
    }
    v
}

/// Residuals `(1/N) v^T M^t v` for `t = 0 ..= t_max`.
pub fn residual_series(m: &FourierMatrix, t_max: usize) -> Vec<f64> {
    let n = m.n as f64;
    let v = diag_vector(m.n);
    let mut x = v.clone();
    let mut out = Vec::with_capacity(t_max + 1);
    out.push(v.dot(&x) / n);
    for _ in 0..t_max {
        x = &m.matrix * &x;
        out.push(v.dot(&x) / n);
    }
    out
}

/// How an agreement probability was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgreementMethod {
    ExactSpectral,
    BruteForce,
    MonteCarlo,
}

impl AgreementMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            AgreementMethod::ExactSpectral => "exact-spectral",
            AgreementMethod::BruteForce => "brute-force",
            AgreementMethod::MonteCarlo => "monte-carlo",
        }
    }
}

/// Exact rational agreement from enumeration: `agreeing / total`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExactCount {
    pub agreeing: u128,
    pub total: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub n: usize,
    pub t: usize,
    pub p_agree: f64,
    /// `p_agree - 1/N`.
    pub residual: f64,
    pub method: AgreementMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactCount>,
}

impl AgreementReport {
    fn from_residual(n: usize, t: usize, residual: f64, method: AgreementMethod) -> Self {
        AgreementReport {
            n,
            t,
            p_agree: 1.0 / n as f64 + residual,
            residual,
            method,
            stderr: None,
            exact: None,
        }
    }

    fn from_probability(n: usize, t: usize, p_agree: f64, method: AgreementMethod) -> Self {
        AgreementReport {
            n,
            t,
            p_agree,
            residual: p_agree - 1.0 / n as f64,
            method,
            stderr: None,
            exact: None,
        }
    }
}

/// A pair of automata together with its step distribution and Fourier matrix.
#[derive(Debug, Clone)]
pub struct CoupledWalk {
    distribution: StepDistribution,
    operator: FourierMatrix,
}

impl CoupledWalk {
    pub fn new(a: &Semiautomaton, b: &Semiautomaton, cache: &StdCache) -> Result<Self> {
        let distribution = step_distribution(a, b)?;
        let operator = fourier_pi0(&distribution, cache)?;
        Ok(CoupledWalk {
            distribution,
            operator,
        })
    }

    pub fn n(&self) -> usize {
        self.distribution.n
    }

    pub fn distribution(&self) -> &StepDistribution {
        &self.distribution
    }

    pub fn operator(&self) -> &FourierMatrix {
        &self.operator
    }

    pub fn p_agree(&self, t: usize) -> AgreementReport {
        let residual = residual_series(&self.operator, t)[t];
        AgreementReport::from_residual(self.n(), t, residual, AgreementMethod::ExactSpectral)
    }

    pub fn mixing_scan(&self, t_max: usize) -> Result<MixingScan> {
        mixing_scan_operator(&self.operator, t_max)
    }
}

/// `P_agree(T)` through the Fourier formula.
pub fn p_agree_exact(
    a: &Semiautomaton,
    b: &Semiautomaton,
    t: usize,
    cache: &StdCache,
) -> Result<AgreementReport> {
    Ok(CoupledWalk::new(a, b, cache)?.p_agree(t))
}

/// `|Σ|^T · N`, saturating.
pub fn enumeration_size(alphabet: usize, t: usize, n: usize) -> u128 {
    let words = u32::try_from(t)
        .ok()
        .and_then(|t| (alphabet as u128).checked_pow(t))
        .unwrap_or(u128::MAX);
    words.saturating_mul(n as u128)
}

fn agreeing_leaves(
    a: &Semiautomaton,
    b: &Semiautomaton,
    depth: usize,
    states_a: &[usize],
    states_b: &[usize],
) -> u64 {
    if depth == 0 {
        return states_a
            .iter()
            .zip(states_b)
            .filter(|(x, y)| x == y)
            .count() as u64;
    }
    let mut next_a = states_a.to_vec();
    let mut next_b = states_b.to_vec();
    let mut total = 0;
    for symbol in 0..a.alphabet_size() {
        for (dst, &x) in next_a.iter_mut().zip(states_a) {
            *dst = a.step(symbol, x);
        }
        for (dst, &x) in next_b.iter_mut().zip(states_b) {
            *dst = b.step(symbol, x);
        }
        total += agreeing_leaves(a, b, depth - 1, &next_a, &next_b);
    }
    total
}

/// `P_agree(T)` by enumerating every word of length `T` and every start.
///
/// Refuses when `|Σ|^T · N` exceeds `limit`.
pub fn p_agree_bruteforce(
    a: &Semiautomaton,
    b: &Semiautomaton,
    t: usize,
    limit: u128,
) -> Result<AgreementReport> {
    check_pair(a, b)?;
    let n = a.n_states();
    let size = a.alphabet_size();
    let total = enumeration_size(size, t, n);
    if total > limit {
        return Err(Error::Guard {
            what: "brute-force agreement",
            estimate: total,
            limit,
        });
    }
    let starts: Vec<usize> = (0..n).collect();
    let agreeing: u64 = if t == 0 {
        n as u64
    } else {
        (0..size)
            .into_par_iter()
            .map(|symbol| {
                let sa: Vec<usize> = starts.iter().map(|&x| a.step(symbol, x)).collect();
                let sb: Vec<usize> = starts.iter().map(|&x| b.step(symbol, x)).collect();
                agreeing_leaves(a, b, t - 1, &sa, &sb)
            })
            .sum()
    };
    let mut report = AgreementReport::from_probability(
        n,
        t,
        agreeing as f64 / total as f64,
        AgreementMethod::BruteForce,
    );
    report.exact = Some(ExactCount {
        agreeing: agreeing as u128,
        total,
    });
    Ok(report)
}

const MC_BATCH: u64 = 4096;

/// Monte Carlo estimate of `P_agree(T)` from `samples` uniform
/// `(word, start)` draws.
///
/// Sample batches use ChaCha8 stream `batch` of `seed`, so the estimate is
/// reproducible and independent of the worker count.
pub fn p_agree_montecarlo(
    a: &Semiautomaton,
    b: &Semiautomaton,
    t: usize,
    samples: u64,
    seed: u64,
) -> Result<AgreementReport> {
    check_pair(a, b)?;
    if samples == 0 {
        return domain("Monte Carlo needs at least one sample");
    }
    let n = a.n_states();
    let size = a.alphabet_size();
    let batches = samples.div_ceil(MC_BATCH);
    let agreeing: u64 = (0..batches)
        .into_par_iter()
        .map(|batch| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(batch);
            let count = MC_BATCH.min(samples - batch * MC_BATCH);
            let mut hits = 0;
            for _ in 0..count {
                let start = rng.random_range(0..n);
                let (mut x, mut y) = (start, start);
                for _ in 0..t {
                    let symbol = rng.random_range(0..size);
                    x = a.step(symbol, x);
                    y = b.step(symbol, y);
                }
                hits += u64::from(x == y);
            }
            hits
        })
        .sum();
    let p = agreeing as f64 / samples as f64;
    let mut report = AgreementReport::from_probability(n, t, p, AgreementMethod::MonteCarlo);
    report.stderr = Some((p * (1.0 - p) / samples as f64).sqrt());
    Ok(report)
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Size(format!(
            "{}x{} matrix is not square",
            m.nrows(),
            m.ncols()
        )));
    }
    let asym = (m - m.transpose()).amax();
    if asym > SYMMETRY_TOL * m.amax().max(1.0) {
        return domain(format!("matrix is not symmetric (asymmetry {asym:e})"));
    }
    Ok(())
}

/// Eigenvalues of a symmetric matrix in ascending order.
///
/// Every eigenpair is checked to satisfy `‖Mx - λx‖ ≤ 1e-8`.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_symmetric(m)?;
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym.clone());
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        let x = eig.eigenvectors.column(i);
        let residual = (&sym * x - x * lambda).norm();
        if residual > EIGEN_RESIDUAL_TOL {
            return Err(Error::Numerical(format!(
                "eigenpair {i} residual {residual:e} exceeds {EIGEN_RESIDUAL_TOL:e}"
            )));
        }
    }
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// `‖M‖₂` as the largest absolute eigenvalue of a symmetric matrix.
pub fn spectral_norm(m: &DMatrix<f64>) -> Result<f64> {
    let values = symmetric_eigenvalues(m)?;
    Ok(values.iter().fold(0.0_f64, |acc, x| acc.max(x.abs())))
}

/// Power-iteration estimate of `‖M‖₂`, used as a cross-check on the
/// eigensolver.
pub fn power_iteration_norm(m: &DMatrix<f64>, iterations: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DVector::from_fn(m.ncols(), |_, _| rng.random_range(-1.0..1.0));
    x /= x.norm();
    let mut estimate = 0.0;
    for _ in 0..iterations {
        let y = m * &x;
        estimate = y.norm();
        if estimate == 0.0 {
            return 0.0;
        }
        x = y / estimate;
    }
    estimate
}

/// Groups sorted eigenvalues into clusters of width `tol`:
/// `(mean, multiplicity)`.
pub fn cluster_eigenvalues(sorted: &[f64], tol: f64) -> Vec<(f64, usize)> {
    let mut clusters: Vec<Vec<f64>> = Vec::new();
    for &x in sorted {
        match clusters.last_mut() {
            Some(c) if (x - c[0]).abs() <= tol => c.push(x),
            _ => clusters.push(vec![x]),
        }
    }
    clusters
        .into_iter()
        .map(|c| (c.iter().sum::<f64>() / c.len() as f64, c.len()))
        .collect()
}

/// `E[M]` for masks drawn i.i.d. Bernoulli(`p`): the average over
/// transpositions of `A_τ ⊗ A_τ`, `A_τ = p std(τ) + (1 - p) I`.
pub fn expected_operator(n: usize, p: f64, cache: &StdCache) -> Result<FourierMatrix> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("p must lie in (0, 1), got {p}"));
    }
    if cache.n() != n {
        return Err(Error::Size(format!(
            "matrix cache is for N = {}, not {n}",
            cache.n()
        )));
    }
    let d = cache.dim();
    let transpositions = crate::perm::all_transpositions(n)?;
    let mut m = DMatrix::zeros(d * d, d * d);
    for &t in &transpositions {
        let a: RepMatrix = cache.transposition(t) * p + cache.identity() * (1.0 - p);
        m += a.kronecker(&a);
    }
    m /= transpositions.len() as f64;
    FourierMatrix::from_matrix(n, m)
}

/// One block of the closed-form spectrum of `E[M]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExpectedEigenvalue {
    pub irrep: String,
    pub numerator: i64,
    pub denominator: i64,
    pub multiplicity: u64,
}

impl ExpectedEigenvalue {
    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

fn spectrum_irreps(n: usize) -> Result<[Partition; 4]> {
    if n < 4 {
        return domain(format!(
            "closed-form spectrum needs N >= 4 (std ⊗ std decomposition), got {n}"
        ));
    }
    Ok([
        Partition::trivial(n)?,
        Partition::standard(n)?,
        Partition::new(vec![n - 2, 2])?,
        Partition::new(vec![n - 2, 1, 1])?,
    ])
}

/// Closed-form spectrum of `E[M]` at `p = 1/2`: for each summand `a` of
/// `std ⊗ std ≅ triv ⊕ std ⊕ (N-2,2) ⊕ (N-2,1,1)` the eigenvalue
/// `(r(a) + 2 r(std) + 1) / 4` with multiplicity `d_a`.
pub fn expected_spectrum(n: usize) -> Result<Vec<ExpectedEigenvalue>> {
    let irreps = spectrum_irreps(n)?;
    let r_std = char_ratio(&irreps[1])?;
    irreps
        .iter()
        .map(|a| {
            let value = (char_ratio(a)? + r_std * 2 + 1) / 4;
            Ok(ExpectedEigenvalue {
                irrep: a.to_string(),
                numerator: *value.numer(),
                denominator: *value.denom(),
                multiplicity: irrep_dim(a)? as u64,
            })
        })
        .collect()
}

/// Eigenvalues of `E[M]` for a general Bernoulli parameter:
/// `p² r(a) + 2p(1-p) r(std) + (1-p)²`, paired with multiplicities.
pub fn expected_spectrum_at(n: usize, p: f64) -> Result<Vec<(String, f64, u64)>> {
    let irreps = spectrum_irreps(n)?;
    let to_f64 = |r: Ratio<i64>| *r.numer() as f64 / *r.denom() as f64;
    let r_std = to_f64(char_ratio(&irreps[1])?);
    irreps
        .iter()
        .map(|a| {
            let r = to_f64(char_ratio(a)?);
            let value = p * p * r + 2.0 * p * (1.0 - p) * r_std + (1.0 - p) * (1.0 - p);
            Ok((a.to_string(), value, irrep_dim(a)? as u64))
        })
        .collect()
}

/// `‖M - E[M]‖₂` against the Bernoulli(`p`) expectation.
pub fn deviation_from_expected(m: &FourierMatrix, p: f64, cache: &StdCache) -> Result<f64> {
    let expected = expected_operator(m.n, p, cache)?;
    spectral_norm(&(m.matrix() - expected.matrix()))
}

/// Outcome of the direct Fourier summation of `(g, h) ↦ |fix(h⁻¹ g)|`.
#[derive(Debug, Clone, Serialize)]
pub struct FixFourierReport {
    pub n: usize,
    /// `(N!)² / (N - 1)`.
    pub scale: f64,
    /// Max-entry error of the `std ⊗ std` sum against `scale · v v^T / (N-1)`,
    /// relative to the largest expected entry.
    pub std_std_relative_error: f64,
    pub triv_std_max: f64,
    pub std_triv_max: f64,
    pub passed: bool,
}

pub const FIX_FOURIER_MAX_N: usize = 5;

/// Sums `Σ_{g,h} |fix(h⁻¹g)| Π(g, h)` over all of `S_N × S_N` for
/// `Π ∈ {std ⊗ std, triv ⊗ std, std ⊗ triv}` and compares with the
/// projection formula.
pub fn fix_fourier_check(n: usize) -> Result<FixFourierReport> {
    if !(2..=FIX_FOURIER_MAX_N).contains(&n) {
        return domain(format!(
            "fix-Fourier summation is limited to 2 <= N <= {FIX_FOURIER_MAX_N}, got {n}"
        ));
    }
    let group = all_permutations(n);
    let mats = group.iter().map(std_matrix).collect::<Result<Vec<_>>>()?;
    let inverses: Vec<Permutation> = group.iter().map(Permutation::inverse).collect();
    let d = n - 1;

    let mut std_std = DMatrix::<f64>::zeros(d * d, d * d);
    let mut triv_std = DMatrix::<f64>::zeros(d, d);
    let mut std_triv = DMatrix::<f64>::zeros(d, d);
    for (h, h_inv) in mats.iter().zip(&inverses) {
        for (g_perm, g) in group.iter().zip(&mats) {
            let weight = h_inv.compose(g_perm)?.fix_count() as f64;
            if weight == 0.0 {
                continue;
            }
            for i in 0..d {
                for j in 0..d {
                    let gij = weight * g[(i, j)];
                    if gij == 0.0 {
                        continue;
                    }
                    for k in 0..d {
                        for l in 0..d {
                            std_std[(i * d + k, j * d + l)] += gij * h[(k, l)];
                        }
                    }
                }
            }
            triv_std += h * weight;
            std_triv += g * weight;
        }
    }

    let fact: f64 = (1..=n).map(|i| i as f64).product();
    let scale = fact * fact / (n - 1) as f64;
    let v = diag_vector(n);
    let expected = &v * v.transpose() * (scale / (n - 1) as f64);
    let std_std_relative_error = (&std_std - &expected).amax() / expected.amax();
    let triv_std_max = triv_std.amax();
    let std_triv_max = std_triv.amax();
    Ok(FixFourierReport {
        n,
        scale,
        std_std_relative_error,
        triv_std_max,
        std_triv_max,
        passed: std_std_relative_error <= 1e-6 && triv_std_max <= 1e-8 && std_triv_max <= 1e-8,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MixingRow {
    pub t: usize,
    pub p_agree: f64,
    pub residual: f64,
    /// `(1 - 1/(2N))^T`.
    pub upper_bound: f64,
    /// `(1/2)(1 - 3/N)^T`.
    pub lower_bound: f64,
    pub upper_violated: bool,
    pub lower_violated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MixingScan {
    pub n: usize,
    pub spectral_norm: f64,
    pub lambda_min: f64,
    /// `‖M‖₂ ≤ 1 - 1/(2N)`, so the upper bound must hold.
    pub upper_applies: bool,
    /// `N ≥ 5`, `M ≻ 0` and `λ_min(M) ≥ (N-3)/(N-1) - 1/(2N)`, so the lower
    /// bound must hold.
    pub lower_applies: bool,
    pub violations: usize,
    pub rows: Vec<MixingRow>,
}

/// Residual series with the upper and lower decay envelopes, flagging any
/// violation of a bound whose hypothesis holds for this operator.
pub fn mixing_scan_operator(m: &FourierMatrix, t_max: usize) -> Result<MixingScan> {
    let n = m.n;
    let nf = n as f64;
    let eigs = symmetric_eigenvalues(m.matrix())?;
    let lambda_min = eigs[0];
    let norm = eigs.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    let upper_rate = 1.0 - 1.0 / (2.0 * nf);
    let lower_rate = 1.0 - 3.0 / nf;
    let upper_applies = norm <= upper_rate;
    let lower_threshold = (nf - 3.0) / (nf - 1.0) - 1.0 / (2.0 * nf);
    let lower_applies = n >= 5 && lambda_min > 0.0 && lambda_min >= lower_threshold;

    let mut violations = 0;
    let rows = residual_series(m, t_max)
        .into_iter()
        .enumerate()
        .map(|(t, residual)| {
            let upper_bound = upper_rate.powi(t as i32);
            let lower_bound = 0.5 * lower_rate.powi(t as i32);
            let upper_violated = upper_applies && residual.abs() > upper_bound;
            let lower_violated = lower_applies && residual.abs() < lower_bound;
            violations += usize::from(upper_violated) + usize::from(lower_violated);
            MixingRow {
                t,
                p_agree: 1.0 / nf + residual,
                residual,
                upper_bound,
                lower_bound,
                upper_violated,
                lower_violated,
            }
        })
        .collect();
    Ok(MixingScan {
        n,
        spectral_norm: norm,
        lambda_min,
        upper_applies,
        lower_applies,
        violations,
        rows,
    })
}

pub fn mixing_scan(
    a: &Semiautomaton,
    b: &Semiautomaton,
    t_max: usize,
    cache: &StdCache,
) -> Result<MixingScan> {
    if t_max == 0 {
        return domain("mixing scan needs T_max >= 1");
    }
    CoupledWalk::new(a, b, cache)?.mixing_scan(t_max)
}
