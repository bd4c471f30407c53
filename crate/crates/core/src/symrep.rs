//! Representation data for `S_N`: partitions, irrep dimensions, character
//! ratios on transpositions, and explicit orthogonal matrices for the
//! permutation and standard representations.
//!
//! Dimensions and character ratios are exact (big integers and rationals).
//! Matrices are `f64`.
//!
//! The standard representation is realised on the mean-zero subspace of
//! `R^N` in the fixed orthonormal basis
//!
//! ```text
//! f_i = (e_1 + .. + e_i - i * e_{i+1}) / sqrt(i (i + 1)),   i = 1 .. N-1
//! ```
//!
//! so `std(g) = B^T perm(g) B` where the columns of `B` are the `f_i`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{domain, Result};
use crate::perm::{all_transpositions, transposition_count, Permutation, Transposition};

/// Dense real matrix of a representation.
pub type RepMatrix = DMatrix<f64>;

/// Integer partition `λ_1 ≥ .. ≥ λ_k ≥ 1` of `N`, naming an irrep of `S_N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    parts: Vec<usize>,
}

impl Partition {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() {
            return domain("empty partition");
        }
        if parts.contains(&0) {
            return domain(format!("{parts:?} has a zero part"));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return domain(format!("{parts:?} is not non-increasing"));
        }
        Ok(Partition { parts })
    }

    /// `(N)`.
    pub fn trivial(n: usize) -> Result<Self> {
        Partition::new(vec![n])
    }

    /// `(N-1, 1)`.
    pub fn standard(n: usize) -> Result<Self> {
        if n < 2 {
            return domain("the standard representation needs N >= 2");
        }
        Partition::new(vec![n - 1, 1])
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn size(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn is_trivial(&self) -> bool {
        self.parts.len() == 1
    }

    /// All partitions of `n`, largest first part first.
    pub fn all(n: usize) -> Vec<Partition> {
        fn rec(remaining: usize, max: usize, prefix: &mut Vec<usize>, out: &mut Vec<Partition>) {
            if remaining == 0 {
                out.push(Partition {
                    parts: prefix.clone(),
                });
                return;
            }
            for part in (1..=remaining.min(max)).rev() {
                prefix.push(part);
                rec(remaining - part, part, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if n > 0 {
            rec(n, n, &mut Vec::new(), &mut out);
        }
        out
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str(")")
    }
}

fn factorial_big(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// `d_λ = N! / (l_1! .. l_k!) * Π_{i<j} (l_i - l_j)` with `l_i = λ_i + k - i`.
pub fn irrep_dim(lambda: &Partition) -> Result<u128> {
    let n = lambda.size();
    let k = lambda.parts.len();
    let shifted: Vec<i64> = lambda
        .parts
        .iter()
        .enumerate()
        .map(|(i, &p)| (p + k - (i + 1)) as i64)
        .collect();
    let mut numerator = factorial_big(n);
    for i in 0..k {
        for j in i + 1..k {
            numerator *= BigInt::from(shifted[i] - shifted[j]);
        }
    }
    let denominator = shifted
        .iter()
        .fold(BigInt::one(), |acc, &l| acc * factorial_big(l as usize));
    let (dim, rem) = (&numerator / &denominator, &numerator % &denominator);
    debug_assert!(rem.is_zero());
    match dim.to_u128() {
        Some(d) if d > 0 => Ok(d),
        _ => domain(format!("dimension of {lambda} does not fit in u128")),
    }
}

/// `r(λ) = χ_λ(τ) / d_λ` for a transposition `τ`:
/// `(1 / (N (N-1))) Σ_j [(λ_j - j)(λ_j - j + 1) - j (j - 1)]`.
pub fn char_ratio(lambda: &Partition) -> Result<Ratio<i64>> {
    let n = lambda.size() as i64;
    if n < 2 {
        return domain("character ratio on transpositions needs N >= 2");
    }
    let sum: i64 = lambda
        .parts
        .iter()
        .enumerate()
        .map(|(idx, &p)| {
            let j = idx as i64 + 1;
            let p = p as i64;
            (p - j) * (p - j + 1) - j * (j - 1)
        })
        .sum();
    Ok(Ratio::new(sum, n * (n - 1)))
}

/// `χ_λ(τ) = r(λ) d_λ`, an integer.
pub fn transposition_character(lambda: &Partition) -> Result<i128> {
    let r = char_ratio(lambda)?;
    let d = irrep_dim(lambda)? as i128;
    let value = Ratio::new(*r.numer() as i128, *r.denom() as i128) * Ratio::from_integer(d);
    if !value.is_integer() {
        return domain(format!("non-integral character for {lambda}"));
    }
    Ok(value.to_integer())
}

/// A class function supported on the identity and the transposition class,
/// or constant on all of `S_N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassFunction {
    Local { identity: f64, transposition: f64 },
    Constant(f64),
}

impl ClassFunction {
    /// Builds a [`ClassFunction::Local`] from `(cycle type, value)` pairs.
    ///
    /// Only the cycle types `(1^N)` and `(2, 1^{N-2})` are supported; any
    /// other class is rejected.
    pub fn from_cycle_types(n: usize, values: &[(Partition, f64)]) -> Result<Self> {
        let mut identity = 0.0;
        let mut transposition = 0.0;
        for (cycle_type, value) in values {
            if cycle_type.size() != n {
                return domain(format!("cycle type {cycle_type} is not a partition of {n}"));
            }
            let ones = cycle_type.parts.iter().filter(|&&p| p == 1).count();
            if ones == n {
                identity = *value;
            } else if n >= 2 && cycle_type.parts[0] == 2 && ones == n - 2 {
                transposition = *value;
            } else {
                return domain(format!("unsupported conjugacy class {cycle_type}"));
            }
        }
        Ok(ClassFunction::Local {
            identity,
            transposition,
        })
    }
}

/// The scalar `C` with `ρ_λ(f) = C I` for a class function `f`:
/// `C = (1/d_λ) Σ_classes f_i n_i χ_λ(class_i)`.
pub fn class_fourier_scalar(f: &ClassFunction, lambda: &Partition) -> Result<f64> {
    let n = lambda.size();
    match *f {
        ClassFunction::Local {
            identity,
            transposition,
        } => {
            if transposition == 0.0 || n < 2 {
                return Ok(identity);
            }
            let r = char_ratio(lambda)?;
            let r = *r.numer() as f64 / *r.denom() as f64;
            Ok(identity + transposition * transposition_count(n) as f64 * r)
        }
        ClassFunction::Constant(c) => {
            // Σ_g χ_λ(g) = N! <χ_λ, χ_triv>
            if lambda.is_trivial() {
                let fact = factorial_big(n)
                    .to_f64()
                    .expect("factorial is finite in f64 at desk scale");
                Ok(c * fact)
            } else {
                Ok(0.0)
            }
        }
    }
}

/// 0/1 matrix with entry `(g(i), i) = 1`.
pub fn perm_matrix(g: &Permutation) -> RepMatrix {
    let n = g.degree();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(g.apply(i), i)] = 1.0;
    }
    m
}

/// `N x (N-1)` matrix whose columns are the orthonormal basis `f_i` of the
/// mean-zero subspace.
pub fn std_basis(n: usize) -> Result<RepMatrix> {
    if n < 2 {
        return domain("the standard representation needs N >= 2");
    }
    let mut b = DMatrix::zeros(n, n - 1);
    for col in 0..n - 1 {
        let i = (col + 1) as f64;
        let scale = 1.0 / (i * (i + 1.0)).sqrt();
        for row in 0..=col {
            b[(row, col)] = scale;
        }
        b[(col + 1, col)] = -i * scale;
    }
    Ok(b)
}

/// `(N-1) x (N-1)` orthogonal matrix of `g` in the standard representation.
pub fn std_matrix(g: &Permutation) -> Result<RepMatrix> {
    let b = std_basis(g.degree())?;
    Ok(b.transpose() * perm_matrix(g) * b)
}

/// Standard-representation matrices of the identity and of every
/// transposition of `S_N`, built once and shared.
#[derive(Debug, Clone)]
pub struct StdCache {
    n: usize,
    identity: Arc<RepMatrix>,
    transpositions: Arc<Vec<RepMatrix>>,
}

impl StdCache {
    pub fn new(n: usize) -> Result<Self> {
        let mats = all_transpositions(n)?
            .iter()
            .map(|t| std_matrix(&t.to_permutation(n)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(StdCache {
            n,
            identity: Arc::new(DMatrix::identity(n - 1, n - 1)),
            transpositions: Arc::new(mats),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n - 1
    }

    pub fn identity(&self) -> &RepMatrix {
        &self.identity
    }

    pub fn transposition(&self, t: Transposition) -> &RepMatrix {
        &self.transpositions[t.lex_index(self.n)]
    }

    /// Matrix of a step that is either the identity (`None`) or a swap.
    pub fn step(&self, t: Option<Transposition>) -> &RepMatrix {
        match t {
            None => self.identity(),
            Some(t) => self.transposition(t),
        }
    }
}

/// `‖Q^T Q - I‖_∞` (max-entry norm).
pub fn orthogonality_defect(q: &RepMatrix) -> f64 {
    let gram = q.transpose() * q;
    let id = DMatrix::<f64>::identity(q.ncols(), q.ncols());
    (gram - id).amax()
}

/// CSV rendering for debugging dumps.
pub fn matrix_to_csv(m: &RepMatrix) -> String {
    let mut out = String::new();
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|c| format!("{:.17e}", m[(r, c)]))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
