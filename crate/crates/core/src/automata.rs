//! Semiautomata over transposition alphabets and the randomized
//! `(k, M)`-shuffle family.
//!
//! The alphabet `Σ_k` is `k` labelled copies of the `C(N, 2)` transpositions,
//! ordered copy-major: symbol `j` belongs to copy `j / C(N,2)` and stands for
//! transposition `all_transpositions(N)[j % C(N,2)]`. Each member carries one
//! mask bit per symbol; a set bit makes the symbol swap its transposition,
//! a clear bit makes it act as the identity.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::perm::{all_transpositions, Permutation, Transposition};

/// The shared symbol-to-transposition map of a family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    n: usize,
    copies: usize,
    transpositions: Vec<Transposition>,
}

impl Alphabet {
    pub fn new(n: usize, copies: usize) -> Result<Self> {
        if copies == 0 {
            return domain("alphabet needs at least one copy of the transpositions");
        }
        Ok(Alphabet {
            n,
            copies,
            transpositions: all_transpositions(n)?,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    /// `|Σ_k| = k C(N, 2)`.
    pub fn len(&self) -> usize {
        self.copies * self.transpositions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn transposition(&self, symbol: usize) -> Transposition {
        self.transpositions[symbol % self.transpositions.len()]
    }

    pub fn copy_of(&self, symbol: usize) -> usize {
        symbol / self.transpositions.len()
    }
}

/// A permutation semiautomaton from the shuffle construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Semiautomaton {
    alphabet: Arc<Alphabet>,
    mask: Vec<bool>,
}

impl Semiautomaton {
    pub fn new(alphabet: Arc<Alphabet>, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != alphabet.len() {
            return Err(Error::Size(format!(
                "mask has {} bits, alphabet has {} symbols",
                mask.len(),
                alphabet.len()
            )));
        }
        Ok(Semiautomaton { alphabet, mask })
    }

    /// Convenience constructor with a fresh alphabet.
    pub fn from_mask(n: usize, copies: usize, mask: Vec<bool>) -> Result<Self> {
        Semiautomaton::new(Arc::new(Alphabet::new(n, copies)?), mask)
    }

    pub fn n_states(&self) -> usize {
        self.alphabet.n
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet.len()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// The transposition applied by `symbol`, or `None` for the identity.
    #[inline]
    pub fn transition(&self, symbol: usize) -> Option<Transposition> {
        self.mask[symbol].then(|| self.alphabet.transposition(symbol))
    }

    #[inline]
    pub fn step(&self, symbol: usize, state: usize) -> usize {
        match self.transition(symbol) {
            Some(t) => t.apply(state),
            None => state,
        }
    }

    fn check_word(&self, word: &[usize]) -> Result<()> {
        match word.iter().find(|&&a| a >= self.alphabet_size()) {
            Some(a) => domain(format!(
                "symbol {a} out of range for alphabet of size {}",
                self.alphabet_size()
            )),
            None => Ok(()),
        }
    }

    /// `f_δ(w, X) = (δ_{a_T} ∘ .. ∘ δ_{a_1})(X)`.
    pub fn run_word(&self, word: &[usize], start: usize) -> Result<usize> {
        if start >= self.n_states() {
            return domain(format!(
                "state {start} out of range for {} states",
                self.n_states()
            ));
        }
        self.check_word(word)?;
        Ok(word.iter().fold(start, |x, &a| self.step(a, x)))
    }

    /// The total permutation computed by `word`.
    pub fn word_permutation(&self, word: &[usize]) -> Result<Permutation> {
        self.check_word(word)?;
        let mut images: Vec<usize> = (0..self.n_states()).collect();
        for &a in word {
            if let Some(t) = self.transition(a) {
                for x in images.iter_mut() {
                    *x = t.apply(*x);
                }
            }
        }
        Permutation::from_images(images)
    }
}

/// Parameters of a randomized `(k, M)`-shuffle family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyConfig {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub p: f64,
    pub seed: u64,
}

impl FamilyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return domain(format!("N must be at least 2, got {}", self.n));
        }
        if self.n > u16::MAX as usize {
            return domain(format!("N = {} does not fit the family format", self.n));
        }
        if self.k == 0 || self.k > u32::MAX as usize {
            return domain(format!("k must be in 1..=2^32-1, got {}", self.k));
        }
        if self.m == 0 || self.m > u32::MAX as usize {
            return domain(format!("M must be in 1..=2^32-1, got {}", self.m));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return domain(format!("p must lie in (0, 1), got {}", self.p));
        }
        Ok(())
    }
}

/// `M` semiautomata sharing one alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct ShuffleFamily {
    config: FamilyConfig,
    alphabet: Arc<Alphabet>,
    members: Vec<Semiautomaton>,
}

impl ShuffleFamily {
    pub fn from_parts(config: FamilyConfig, masks: Vec<Vec<bool>>) -> Result<Self> {
        config.validate()?;
        if masks.len() != config.m {
            return Err(Error::Size(format!(
                "expected {} masks, got {}",
                config.m,
                masks.len()
            )));
        }
        let alphabet = Arc::new(Alphabet::new(config.n, config.k)?);
        let members = masks
            .into_iter()
            .map(|mask| Semiautomaton::new(alphabet.clone(), mask))
            .collect::<Result<Vec<_>>>()?;
        Ok(ShuffleFamily {
            config,
            alphabet,
            members,
        })
    }

    pub fn config(&self) -> &FamilyConfig {
        &self.config
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn members(&self) -> &[Semiautomaton] {
        &self.members
    }

    pub fn member(&self, i: usize) -> Result<&Semiautomaton> {
        self.members.get(i).ok_or_else(|| {
            Error::Domain(format!(
                "member {i} out of range for M = {}",
                self.members.len()
            ))
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Mask bits of member `index`, drawn from ChaCha8 stream `index` of `seed`.
pub fn member_mask(cfg: &FamilyConfig, index: u64, bits: usize) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index);
    (0..bits).map(|_| rng.random_bool(cfg.p)).collect()
}

/// Builds the randomized `(k, M)`-shuffle family described by `cfg`.
///
/// Members are generated in parallel; each one depends only on
/// `(seed, member index)`, so the result is independent of thread count.
pub fn build_family(cfg: &FamilyConfig) -> Result<ShuffleFamily> {
    cfg.validate()?;
    let alphabet = Alphabet::new(cfg.n, cfg.k)?;
    let bits = alphabet.len();
    let masks: Vec<Vec<bool>> = (0..cfg.m as u64)
        .into_par_iter()
        .map(|i| member_mask(cfg, i, bits))
        .collect();
    ShuffleFamily::from_parts(*cfg, masks)
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// `ln C(N!, 2) = ln N! + ln(N! - 1) - ln 2`, evaluated without forming `N!`.
fn ln_pairs_of_permutations(n: usize) -> f64 {
    let lf = ln_factorial(n);
    // ln(N! - 1) = ln N! + ln(1 - 1/N!)
    lf + lf + (-(-lf).exp()).ln_1p() - std::f64::consts::LN_2
}

/// The bracket `N ln N + ln C(N!, 2) + 2 ln(N-1)` of the alphabet bound.
pub fn k_threshold_bracket(n: usize) -> f64 {
    let nf = n as f64;
    nf * nf.ln() + ln_pairs_of_permutations(n) + 2.0 * (nf - 1.0).ln()
}

/// `ceil(16 (3N + 1) / (3 (N - 1)) * bracket)`.
pub fn k_threshold_from_bracket(n: usize, bracket: f64) -> Result<u64> {
    if n < 4 {
        return domain(format!("alphabet bound requires N >= 4, got {n}"));
    }
    let nf = n as f64;
    let value = 16.0 * (3.0 * nf + 1.0) / (3.0 * (nf - 1.0)) * bracket;
    Ok(value.ceil() as u64)
}

/// Smallest copy count `k` for which the spectral concentration bound holds.
pub fn k_threshold(n: usize) -> Result<u64> {
    k_threshold_from_bracket(n, k_threshold_bracket(n))
}

/// `ceil(2 N ln N!)`, the word length that drives the residual below `1/N!`.
pub fn min_word_length(n: usize) -> Result<u64> {
    if n < 2 {
        return domain(format!("word-length bound needs N >= 2, got {n}"));
    }
    Ok((2.0 * n as f64 * ln_factorial(n)).ceil() as u64)
}

const MAGIC: &[u8; 4] = b"SQSA";
const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 2 + 4 + 4 + 8 + 8;

/// Encodes a family in the little-endian `SQSA` format.
///
/// Layout: magic `SQSA`, version `u16`, N `u16`, k `u32`, M `u32`, p `f64`,
/// seed `u64`, then `M` masks of `ceil(k C(N,2) / 8)` bytes each. Bit `j` of a
/// mask lives in byte `j / 8` at bit position `j % 8`; padding bits are zero.
pub fn serialize_family(family: &ShuffleFamily) -> Vec<u8> {
    let cfg = family.config;
    let bits = family.alphabet.len();
    let stride = bits.div_ceil(8);
    let mut out = Vec::with_capacity(HEADER_LEN + stride * family.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(cfg.n as u16).to_le_bytes());
    out.extend_from_slice(&(cfg.k as u32).to_le_bytes());
    out.extend_from_slice(&(cfg.m as u32).to_le_bytes());
    out.extend_from_slice(&cfg.p.to_le_bytes());
    out.extend_from_slice(&cfg.seed.to_le_bytes());
    for member in &family.members {
        let mut bytes = vec![0u8; stride];
        for (j, _) in member.mask.iter().enumerate().filter(|(_, &b)| b) {
            bytes[j / 8] |= 1 << (j % 8);
        }
        out.extend_from_slice(&bytes);
    }
    out
}

fn take<const L: usize>(bytes: &[u8], at: &mut usize) -> [u8; L] {
    let mut buf = [0u8; L];
    buf.copy_from_slice(&bytes[*at..*at + L]);
    *at += L;
    buf
}

/// Decodes the `SQSA` format. Any inconsistency yields a parse error and no
/// partial family.
pub fn deserialize_family(bytes: &[u8]) -> Result<ShuffleFamily> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Parse(format!(
            "payload of {} bytes is shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Parse("bad magic, expected SQSA".into()));
    }
    let mut at = 4;
    let version = u16::from_le_bytes(take(bytes, &mut at));
    if version != FORMAT_VERSION {
        return Err(Error::Parse(format!(
            "unsupported format version {version}"
        )));
    }
    let n = u16::from_le_bytes(take(bytes, &mut at)) as usize;
    let k = u32::from_le_bytes(take(bytes, &mut at)) as usize;
    let m = u32::from_le_bytes(take(bytes, &mut at)) as usize;
    let p = f64::from_le_bytes(take(bytes, &mut at));
    let seed = u64::from_le_bytes(take(bytes, &mut at));
    let config = FamilyConfig { n, k, m, p, seed };
    config
        .validate()
        .map_err(|e| Error::Parse(format!("invalid header: {e}")))?;

    let bits = k * n * (n - 1) / 2;
    let stride = bits.div_ceil(8);
    let expected = stride
        .checked_mul(m)
        .and_then(|body| body.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Parse("declared sizes overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Parse(format!(
            "payload is {} bytes, header declares {expected}",
            bytes.len()
        )));
    }
    let mut masks = Vec::with_capacity(m);
    for chunk in bytes[HEADER_LEN..].chunks_exact(stride) {
        let mask: Vec<bool> = (0..bits)
            .map(|j| chunk[j / 8] >> (j % 8) & 1 == 1)
            .collect();
        if !bits.is_multiple_of(8) && chunk[stride - 1] >> (bits % 8) != 0 {
            return Err(Error::Parse("non-zero padding bits in mask".into()));
        }
        masks.push(mask);
    }
    ShuffleFamily::from_parts(config, masks).map_err(|e| Error::Parse(e.to_string()))
}
