//! Permutations of the 0-based ground set `{0, .., N-1}`.
//!
//! Composition is right-to-left: `g.compose(&h)` applies `h` first and then
//! `g`, so a word `a_1 .. a_T` processed by a semiautomaton corresponds to the
//! product `delta(a_T) ∘ .. ∘ delta(a_1)`.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{domain, Error, Result};

/// A bijection of `{0, .., N-1}` stored as its image list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            images: (0..n).collect(),
        }
    }

    /// Builds a permutation from `images[i] = g(i)`, checking bijectivity.
    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        if n == 0 {
            return domain("a permutation needs at least one point");
        }
        let mut seen = vec![false; n];
        for &x in &images {
            if x >= n || seen[x] {
                return domain(format!("{images:?} is not a bijection of 0..{n}"));
            }
            seen[x] = true;
        }
        Ok(Permutation { images })
    }

    /// Number of points `N`.
    pub fn degree(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &x)| i == x)
    }

    /// `self ∘ h`: apply `h`, then `self`.
    pub fn compose(&self, h: &Permutation) -> Result<Permutation> {
        if self.degree() != h.degree() {
            return Err(Error::Size(format!(
                "cannot compose permutations of degree {} and {}",
                self.degree(),
                h.degree()
            )));
        }
        Ok(Permutation {
            images: h.images.iter().map(|&x| self.images[x]).collect(),
        })
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.degree()];
        for (i, &x) in self.images.iter().enumerate() {
            inv[x] = i;
        }
        Permutation { images: inv }
    }

    /// `|{i : g(i) = i}|`, the permutation character.
    pub fn fix_count(&self) -> usize {
        self.images
            .iter()
            .enumerate()
            .filter(|&(i, &x)| i == x)
            .count()
    }

    /// Uniform draw from `S_N` (Fisher-Yates through `SliceRandom::shuffle`).
    pub fn sample_uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Permutation {
        let mut images: Vec<usize> = (0..n).collect();
        images.shuffle(rng);
        Permutation { images }
    }
}

/// Free-function form of [`Permutation::compose`].
pub fn compose(g: &Permutation, h: &Permutation) -> Result<Permutation> {
    g.compose(h)
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, x) in self.images.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

impl FromStr for Permutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let images = s
            .split_whitespace()
            .map(|tok| {
                tok.parse::<usize>()
                    .map_err(|e| Error::Parse(format!("bad image {tok:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Permutation::from_images(images)
    }
}

/// The swap of two distinct points, normalised so that `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transposition {
    a: usize,
    b: usize,
}

impl Transposition {
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a == b {
            return domain(format!(
                "transposition needs two distinct points, got ({a} {b})"
            ));
        }
        Ok(Transposition {
            a: a.min(b),
            b: a.max(b),
        })
    }

    pub fn a(&self) -> usize {
        self.a
    }

    pub fn b(&self) -> usize {
        self.b
    }

    #[inline]
    pub fn apply(&self, x: usize) -> usize {
        if x == self.a {
            self.b
        } else if x == self.b {
            self.a
        } else {
            x
        }
    }

    /// Position of `(a b)` in the lexicographic list from [`all_transpositions`].
    pub fn lex_index(&self, n: usize) -> usize {
        self.a * (2 * n - self.a - 1) / 2 + (self.b - self.a - 1)
    }

    pub fn to_permutation(&self, n: usize) -> Result<Permutation> {
        if self.b >= n {
            return domain(format!(
                "({} {}) does not act on {n} points",
                self.a, self.b
            ));
        }
        let mut images: Vec<usize> = (0..n).collect();
        images.swap(self.a, self.b);
        Ok(Permutation { images })
    }
}

impl fmt::Display for Transposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {})", self.a, self.b)
    }
}

/// `C(N, 2)`.
pub fn transposition_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// All transpositions of `S_N` in lexicographic `(a, b)` order.
pub fn all_transpositions(n: usize) -> Result<Vec<Transposition>> {
    if n < 2 {
        return domain(format!("S_{n} has no transpositions"));
    }
    let mut out = Vec::with_capacity(transposition_count(n));
    for a in 0..n {
        for b in a + 1..n {
            out.push(Transposition { a, b });
        }
    }
    Ok(out)
}

/// Every element of `S_N` in lexicographic order of image lists.
///
/// Intended for exhaustive checks; `N!` grows fast, so callers cap `N`.
pub fn all_permutations(n: usize) -> Vec<Permutation> {
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let mut current: Vec<usize> = (0..n).collect();
    loop {
        out.push(Permutation {
            images: current.clone(),
        });
        // next lexicographic permutation
        let Some(i) = (0..n - 1).rev().find(|&i| current[i] < current[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| current[j] > current[i]).unwrap();
        current.swap(i, j);
        current[i + 1..].reverse();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn perm(images: &[usize]) -> Permutation {
        Permutation::from_images(images.to_vec()).unwrap()
    }

    #[test]
    fn compose_identity_and_inverse() {
        let g = perm(&[2, 0, 3, 1]);
        assert_eq!(compose(&Permutation::identity(4), &g).unwrap(), g);
        assert!(compose(&g, &g.inverse()).unwrap().is_identity());
    }

    #[test]
    fn compose_applies_right_factor_first() {
        let t01 = Transposition::new(0, 1).unwrap().to_permutation(3).unwrap();
        let t12 = Transposition::new(1, 2).unwrap().to_permutation(3).unwrap();
        // 0 -> (12) -> 0 -> (01) -> 1; 1 -> 2 -> 2; 2 -> 1 -> 0
        assert_eq!(compose(&t01, &t12).unwrap(), perm(&[1, 2, 0]));
    }

    #[test]
    fn compose_rejects_degree_mismatch() {
        let err = compose(&Permutation::identity(3), &Permutation::identity(4)).unwrap_err();
        assert!(matches!(err, Error::Size(_)));
    }

    #[test]
    fn from_images_rejects_non_bijection() {
        assert!(Permutation::from_images(vec![0, 0, 1]).is_err());
        assert!(Permutation::from_images(vec![0, 3, 1]).is_err());
        assert!(Permutation::from_images(vec![]).is_err());
    }

    #[test]
    fn fix_counts() {
        assert_eq!(Permutation::identity(5).fix_count(), 5);
        let t = Transposition::new(1, 3).unwrap().to_permutation(5).unwrap();
        assert_eq!(t.fix_count(), 3);
        let total: usize = all_permutations(4).iter().map(Permutation::fix_count).sum();
        assert_eq!(total, 24);
    }

    #[test]
    fn transposition_lists() {
        let t3: Vec<_> = all_transpositions(3)
            .unwrap()
            .iter()
            .map(|t| (t.a(), t.b()))
            .collect();
        assert_eq!(t3, vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(all_transpositions(4).unwrap().len(), 6);
        let t5 = all_transpositions(5).unwrap();
        assert_eq!(t5.len(), 10);
        assert_eq!((t5[0].a(), t5[0].b()), (0, 1));
        assert_eq!((t5[9].a(), t5[9].b()), (3, 4));
        assert!(all_transpositions(1).is_err());
        for (i, t) in t5.iter().enumerate() {
            assert_eq!(t.lex_index(5), i);
            let p = t.to_permutation(5).unwrap();
            assert!(p.compose(&p).unwrap().is_identity());
        }
    }

    #[test]
    fn sampling_is_seeded_and_trivial_at_one_point() {
        let a = Permutation::sample_uniform(8, &mut ChaCha8Rng::seed_from_u64(7));
        let b = Permutation::sample_uniform(8, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            assert!(Permutation::sample_uniform(1, &mut rng).is_identity());
        }
    }

    #[test]
    fn expected_fix_count_is_one() {
        // exhaustive oracle at N=4: mean fixed points over S_4 is exactly 1
        let all = all_permutations(4);
        let mean4 = all.iter().map(|g| g.fix_count() as f64).sum::<f64>() / all.len() as f64;
        assert_eq!(mean4, 1.0);

        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let draws = 100_000;
        let xs: Vec<f64> = (0..draws)
            .map(|_| Permutation::sample_uniform(6, &mut rng).fix_count() as f64)
            .collect();
        let mean = xs.iter().sum::<f64>() / draws as f64;
        // Var(fix) = 1 for N >= 2
        let sigma = (1.0 / draws as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn all_permutations_counts() {
        assert_eq!(all_permutations(1).len(), 1);
        assert_eq!(all_permutations(4).len(), 24);
        assert_eq!(all_permutations(5).len(), 120);
    }

    #[test]
    fn text_form_round_trip() {
        let g = perm(&[2, 0, 1]);
        assert_eq!(g.to_string(), "2 0 1");
        assert_eq!("2 0 1".parse::<Permutation>().unwrap(), g);
        assert!("2 x 1".parse::<Permutation>().is_err());
    }

    #[test]
    fn exhaustive_group_laws_small_n() {
        for n in 1..=4 {
            let all = all_permutations(n);
            for g in &all {
                for h in &all {
                    let gh = g.compose(h).unwrap();
                    assert_eq!(gh.inverse(), h.inverse().compose(&g.inverse()).unwrap());
                    // conjugation preserves the fixed-point count
                    let conj = h.compose(g).unwrap().compose(&h.inverse()).unwrap();
                    assert_eq!(conj.fix_count(), g.fix_count());
                }
            }
        }
        let all = all_permutations(4);
        for a in &all {
            for b in &all {
                for c in &all {
                    let left = a.compose(b).unwrap().compose(c).unwrap();
                    let right = a.compose(&b.compose(c).unwrap()).unwrap();
                    assert_eq!(left, right);
                }
            }
        }
    }
}
