//! Statistical-query testbed: pairwise correlations, SQ-dimension
//! certificates, and the adversarial oracle that answers every query with
//! `⟨H, ē⟩_D`.
//!
//! Inputs are `x = (word, start)` drawn from `D_T`, uniform over words of
//! length `T` and start states; labels are final states, so `|Y| = N`.
//! A concept `f` is embedded as `u_f(x) = e_{f(x)} - ē` with `ē = (1/N) 1`,
//! and a query `h` as `H(x)_y = h(x, y)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::automata::{Semiautomaton, ShuffleFamily};
use crate::error::{domain, Error, Result};
use crate::symrep::StdCache;
use crate::walk::{
    enumeration_size, p_agree_bruteforce, p_agree_exact, p_agree_montecarlo, AgreementMethod,
    AgreementReport, DEFAULT_BRUTE_LIMIT,
};

/// `D_T` is enumerated exactly up to this many `(word, start)` pairs.
pub const EXACT_ENUMERATION_LIMIT: u128 = 10_000_000;

/// Enumeration budget under which [`ChiMethod::Auto`] prefers brute force.
const AUTO_BRUTE_LIMIT: u128 = 1_000_000;

/// A concept `f_δ: (word, start) ↦ final state`, realised by an automaton.
#[derive(Debug, Clone)]
pub struct ConceptHandle {
    pub id: usize,
    automaton: Semiautomaton,
}

impl ConceptHandle {
    pub fn new(id: usize, automaton: Semiautomaton) -> Self {
        ConceptHandle { id, automaton }
    }

    pub fn automaton(&self) -> &Semiautomaton {
        &self.automaton
    }

    /// `|Y| = N`.
    pub fn label_count(&self) -> usize {
        self.automaton.n_states()
    }

    pub fn evaluate(&self, word: &[usize], start: usize) -> Result<usize> {
        self.automaton.run_word(word, start)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationEstimate {
    /// `χ(f, g) = P[f(x) = g(x)] - 1/|Y|`.
    pub chi: f64,
    pub method: AgreementMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
}

impl From<AgreementReport> for CorrelationEstimate {
    fn from(r: AgreementReport) -> Self {
        CorrelationEstimate {
            chi: r.residual,
            method: r.method,
            stderr: r.stderr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChiMethod {
    /// Brute force when the enumeration is small, the spectral formula otherwise.
    Auto,
    Spectral,
    BruteForce,
    MonteCarlo {
        samples: u64,
        seed: u64,
    },
}

pub fn pairwise_chi(
    f: &Semiautomaton,
    g: &Semiautomaton,
    t: usize,
    method: ChiMethod,
    cache: &StdCache,
) -> Result<CorrelationEstimate> {
    let report = match method {
        ChiMethod::Auto => {
            if enumeration_size(f.alphabet_size(), t, f.n_states()) <= AUTO_BRUTE_LIMIT {
                p_agree_bruteforce(f, g, t, AUTO_BRUTE_LIMIT)?
            } else {
                p_agree_exact(f, g, t, cache)?
            }
        }
        ChiMethod::Spectral => p_agree_exact(f, g, t, cache)?,
        ChiMethod::BruteForce => p_agree_bruteforce(f, g, t, DEFAULT_BRUTE_LIMIT)?,
        ChiMethod::MonteCarlo { samples, seed } => p_agree_montecarlo(f, g, t, samples, seed)?,
    };
    Ok(report.into())
}

#[derive(Debug, Clone, Serialize)]
pub struct SqDimCertificate {
    pub d: usize,
    pub t: usize,
    pub pairs_checked: usize,
    /// `1/d`.
    pub threshold: f64,
    pub max_abs_chi: f64,
    pub worst_pair: Option<(usize, usize)>,
    /// First pair in lexicographic order with `|χ| > 1/d`.
    pub violating_pair: Option<(usize, usize, f64)>,
    pub passed: bool,
}

/// Checks `|χ(f_i, f_j)| ≤ 1/d` for all pairs among the first `d` members,
/// using the spectral formula.
pub fn sq_dim_certificate(
    family: &ShuffleFamily,
    t: usize,
    d: usize,
    cache: &StdCache,
) -> Result<SqDimCertificate> {
    if d == 0 {
        return domain("SQ dimension certificate needs d >= 1");
    }
    if family.len() < d {
        return domain(format!(
            "family has {} members, fewer than d = {d}",
            family.len()
        ));
    }
    let members = &family.members()[..d];
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|i| (i + 1..d).map(move |j| (i, j)))
        .collect();
    let chis = pairs
        .par_iter()
        .map(|&(i, j)| Ok(p_agree_exact(&members[i], &members[j], t, cache)?.residual))
        .collect::<Result<Vec<f64>>>()?;

    let threshold = 1.0 / d as f64;
    let mut max_abs_chi = 0.0;
    let mut worst_pair = None;
    let mut violating_pair = None;
    for (&(i, j), &chi) in pairs.iter().zip(&chis) {
        if chi.abs() > max_abs_chi || worst_pair.is_none() {
            max_abs_chi = chi.abs();
            worst_pair = Some((i, j));
        }
        if violating_pair.is_none() && chi.abs() > threshold {
            violating_pair = Some((i, j, chi));
        }
    }
    Ok(SqDimCertificate {
        d,
        t,
        pairs_checked: pairs.len(),
        threshold,
        max_abs_chi,
        worst_pair,
        violating_pair,
        passed: violating_pair.is_none(),
    })
}

/// Per-query elimination cap `2d(|Y|-1) / (dτ² - |Y|)`, defined when
/// `dτ² > |Y|`.
pub fn elimination_bound(d: usize, tau: f64, y_count: usize) -> Option<f64> {
    let (d, y) = (d as f64, y_count as f64);
    let denom = d * tau * tau - y;
    (denom > 0.0).then(|| 2.0 * d * (y - 1.0) / denom)
}

/// `q ≥ (d-1)(dτ² - |Y|) / (2d(|Y|-1))`; non-positive values are vacuous.
pub fn query_lower_bound(d: usize, tau: f64, y_count: usize) -> Result<f64> {
    if d == 0 {
        return domain("query lower bound needs d >= 1");
    }
    if tau.is_nan() || tau <= 0.0 {
        return domain(format!("tolerance must be positive, got {tau}"));
    }
    if y_count < 2 {
        return domain(format!("need at least two labels, got {y_count}"));
    }
    let (d, y) = (d as f64, y_count as f64);
    Ok((d - 1.0) * (d * tau * tau - y) / (2.0 * d * (y - 1.0)))
}

/// A statistical query `h: X × Y → [-1, 1]`.
pub trait Query: Sync {
    fn evaluate(&self, word: &[usize], start: usize, label: usize) -> f64;
}

impl<F> Query for F
where
    F: Fn(&[usize], usize, usize) -> f64 + Sync,
{
    fn evaluate(&self, word: &[usize], start: usize, label: usize) -> f64 {
        self(word, start, label)
    }
}

/// Named queries available to scripted sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builtin", content = "params", rename_all = "kebab-case")]
pub enum BuiltinQuery {
    /// `h(x, y) = value`.
    Constant { value: f64 },
    /// `h(x, y) = 1{y = f_reference(x)}` for a concept of the session.
    LabelIndicator { reference: usize },
    /// `h((w, X), y) = 1{y = (X + shift) mod N}`.
    StartAgreement { shift: usize },
    /// `h(x, y) = (-1)^y`.
    Parity {},
}

impl BuiltinQuery {
    pub fn name(&self) -> &'static str {
        match self {
            BuiltinQuery::Constant { .. } => "constant",
            BuiltinQuery::LabelIndicator { .. } => "label-indicator",
            BuiltinQuery::StartAgreement { .. } => "start-agreement",
            BuiltinQuery::Parity {} => "parity",
        }
    }

    pub fn params(&self) -> Value {
        match serde_json::to_value(self) {
            Ok(Value::Object(mut map)) => map
                .remove("params")
                .unwrap_or(Value::Object(Default::default())),
            _ => Value::Null,
        }
    }

    fn resolve(&self, concepts: &[Semiautomaton]) -> Result<ResolvedQuery> {
        Ok(match *self {
            BuiltinQuery::Constant { value } => ResolvedQuery::Constant(value),
            BuiltinQuery::LabelIndicator { reference } => ResolvedQuery::LabelIndicator(
                concepts
                    .get(reference)
                    .ok_or_else(|| Error::Domain(format!("no concept {reference} in session")))?
                    .clone(),
            ),
            BuiltinQuery::StartAgreement { shift } => {
                let n = concepts.first().map_or(1, Semiautomaton::n_states);
                ResolvedQuery::StartAgreement { shift, n }
            }
            BuiltinQuery::Parity {} => ResolvedQuery::Parity,
        })
    }
}

enum ResolvedQuery {
    Constant(f64),
    LabelIndicator(Semiautomaton),
    StartAgreement { shift: usize, n: usize },
    Parity,
}

impl Query for ResolvedQuery {
    fn evaluate(&self, word: &[usize], start: usize, label: usize) -> f64 {
        match self {
            ResolvedQuery::Constant(c) => *c,
            ResolvedQuery::LabelIndicator(a) => {
                let y = word.iter().fold(start, |x, &s| a.step(s, x));
                f64::from(u8::from(label == y))
            }
            ResolvedQuery::StartAgreement { shift, n } => {
                f64::from(u8::from(label == (start + shift) % n))
            }
            ResolvedQuery::Parity => {
                if label.is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

/// `D_T`: uniform over words of length `T` and start states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InputDistribution {
    pub n: usize,
    pub t: usize,
    pub alphabet_size: usize,
}

impl InputDistribution {
    pub fn support_size(&self) -> u128 {
        enumeration_size(self.alphabet_size, self.t, self.n)
    }

    fn word_count(&self) -> u128 {
        enumeration_size(self.alphabet_size, self.t, 1)
    }

    fn decode_word(&self, mut index: u128, word: &mut [usize]) {
        for slot in word.iter_mut().rev() {
            *slot = (index % self.alphabet_size as u128) as usize;
            index /= self.alphabet_size as u128;
        }
    }
}

/// `⟨u_f, u_g⟩_D = E_x Σ_y (1{f(x)=y} - 1/N)(1{g(x)=y} - 1/N)` by exact
/// enumeration of `D_T`.
pub fn u_inner_product(f: &Semiautomaton, g: &Semiautomaton, t: usize) -> Result<f64> {
    let dist = InputDistribution {
        n: f.n_states(),
        t,
        alphabet_size: f.alphabet_size(),
    };
    if dist.support_size() > EXACT_ENUMERATION_LIMIT {
        return Err(Error::Guard {
            what: "exact inner product",
            estimate: dist.support_size(),
            limit: EXACT_ENUMERATION_LIMIT,
        });
    }
    let n = dist.n;
    let ebar = 1.0 / n as f64;
    let mut word = vec![0; t];
    let mut sum = 0.0;
    for w in 0..dist.word_count() {
        dist.decode_word(w, &mut word);
        for start in 0..n {
            let fy = f.run_word(&word, start)?;
            let gy = g.run_word(&word, start)?;
            sum += (0..n)
                .map(|y| {
                    (f64::from(u8::from(fy == y)) - ebar) * (f64::from(u8::from(gy == y)) - ebar)
                })
                .sum::<f64>();
        }
    }
    Ok(sum / dist.support_size() as f64)
}

/// One answered query.
#[derive(Debug, Clone, Serialize)]
pub struct LedgerEntry {
    pub query_id: usize,
    pub builtin: String,
    pub params: Value,
    /// The adversarial answer `⟨H, ē⟩_D`.
    pub answer: f64,
    /// `⟨H, u_i⟩_D` for every concept that survived into this query.
    pub inner_products: Vec<(usize, f64)>,
    /// Standard errors of the inner products under sampling; zero when exact.
    pub stderr: f64,
    /// Elimination threshold actually applied.
    pub threshold: f64,
    pub eliminated_ids: Vec<usize>,
    pub survivor_count: usize,
}

/// JSON-lines transcript record.
#[derive(Debug, Clone, Serialize)]
pub struct TranscriptRecord<'a> {
    pub query_id: usize,
    pub builtin: &'a str,
    pub params: &'a Value,
    pub answer: f64,
    pub eliminated_ids: &'a [usize],
    pub survivor_count: usize,
}

impl LedgerEntry {
    pub fn transcript(&self) -> TranscriptRecord<'_> {
        TranscriptRecord {
            query_id: self.query_id,
            builtin: &self.builtin,
            params: &self.params,
            answer: self.answer,
            eliminated_ids: &self.eliminated_ids,
            survivor_count: self.survivor_count,
        }
    }
}

const WORD_CHUNK: u128 = 2048;
const MC_BATCH: u64 = 1024;

/// Partial sums over a block of inputs: `(Σ hbar, per-concept Σ (h(x,f_i(x)) - hbar))`.
struct Partial {
    answer: f64,
    inner: Vec<f64>,
}

/// An adversarial SQ oracle over a fixed concept list.
#[derive(Debug, Clone)]
pub struct OracleSession {
    concepts: Vec<Semiautomaton>,
    distribution: InputDistribution,
    tau: f64,
    seed: u64,
    samples: u64,
    exact_limit: u128,
    survivors: Vec<bool>,
    ledger: Vec<LedgerEntry>,
}

impl OracleSession {
    pub fn new(concepts: Vec<Semiautomaton>, t: usize, tau: f64) -> Result<Self> {
        let first = concepts
            .first()
            .ok_or_else(|| Error::Domain("oracle session needs at least one concept".into()))?;
        if concepts.iter().any(|c| c.alphabet() != first.alphabet()) {
            return Err(Error::Size("concepts must share one alphabet".into()));
        }
        if tau.is_nan() || tau <= 0.0 {
            return domain(format!("tolerance must be positive, got {tau}"));
        }
        let distribution = InputDistribution {
            n: first.n_states(),
            t,
            alphabet_size: first.alphabet_size(),
        };
        let survivors = vec![true; concepts.len()];
        Ok(OracleSession {
            concepts,
            distribution,
            tau,
            seed: 0,
            samples: 20_000,
            exact_limit: EXACT_ENUMERATION_LIMIT,
            survivors,
            ledger: Vec::new(),
        })
    }

    /// Sampling parameters used when `D_T` is too large to enumerate.
    pub fn with_sampling(mut self, samples: u64, seed: u64) -> Self {
        self.samples = samples.max(2);
        self.seed = seed;
        self
    }

    pub fn with_exact_limit(mut self, limit: u128) -> Self {
        self.exact_limit = limit;
        self
    }

    pub fn distribution(&self) -> &InputDistribution {
        &self.distribution
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn concepts(&self) -> &[Semiautomaton] {
        &self.concepts
    }

    pub fn is_exact(&self) -> bool {
        self.distribution.support_size() <= self.exact_limit
    }

    pub fn survivor_ids(&self) -> Vec<usize> {
        (0..self.concepts.len())
            .filter(|&i| self.survivors[i])
            .collect()
    }

    pub fn survivor_count(&self) -> usize {
        self.survivors.iter().filter(|&&s| s).count()
    }

    pub fn ledger(&self) -> &[LedgerEntry] {
        &self.ledger
    }

    pub fn ask(&mut self, query: &BuiltinQuery) -> Result<f64> {
        let resolved = query.resolve(&self.concepts)?;
        self.answer(query.name(), query.params(), &resolved)
    }

    /// Answers `h` with `⟨H, ē⟩_D`, then eliminates every survivor with
    /// `|⟨H, u_i⟩_D| > τ` (widened by `4·stderr` under sampling).
    pub fn answer(&mut self, builtin: &str, params: Value, query: &dyn Query) -> Result<f64> {
        let ids = self.survivor_ids();
        let (answer, inner, stderr) = if self.is_exact() {
            let (a, inner) = self.exact_inner_products(&ids, query)?;
            (a, inner, vec![0.0; ids.len()])
        } else {
            self.sampled_inner_products(&ids, query)?
        };

        let mut eliminated_ids = Vec::new();
        let mut worst_stderr = 0.0_f64;
        for ((&id, &ip), &se) in ids.iter().zip(&inner).zip(&stderr) {
            worst_stderr = worst_stderr.max(se);
            if ip.abs() > self.tau + 4.0 * se {
                self.survivors[id] = false;
                eliminated_ids.push(id);
            }
        }
        let entry = LedgerEntry {
            query_id: self.ledger.len(),
            builtin: builtin.to_string(),
            params,
            answer,
            inner_products: ids.iter().copied().zip(inner).collect(),
            stderr: worst_stderr,
            threshold: self.tau + 4.0 * worst_stderr,
            eliminated_ids,
            survivor_count: self.survivor_count(),
        };
        self.ledger.push(entry);
        Ok(answer)
    }

    fn block(
        &self,
        ids: &[usize],
        query: &dyn Query,
        word: &[usize],
        acc: &mut Partial,
    ) -> Result<()> {
        let n = self.distribution.n;
        for start in 0..n {
            let mut hbar = 0.0;
            for y in 0..n {
                let h = query.evaluate(word, start, y);
                if !(-1.0..=1.0).contains(&h) {
                    return domain(format!("query value {h} outside [-1, 1]"));
                }
                hbar += h;
            }
            hbar /= n as f64;
            acc.answer += hbar;
            for (slot, &id) in acc.inner.iter_mut().zip(ids) {
                let y = word
                    .iter()
                    .fold(start, |x, &s| self.concepts[id].step(s, x));
                *slot += query.evaluate(word, start, y) - hbar;
            }
        }
        Ok(())
    }

    fn exact_inner_products(&self, ids: &[usize], query: &dyn Query) -> Result<(f64, Vec<f64>)> {
        let dist = self.distribution;
        let words = dist.word_count();
        let chunks = words.div_ceil(WORD_CHUNK) as u64;
        let partials = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut acc = Partial {
                    answer: 0.0,
                    inner: vec![0.0; ids.len()],
                };
                let mut word = vec![0; dist.t];
                let lo = c as u128 * WORD_CHUNK;
                for w in lo..(lo + WORD_CHUNK).min(words) {
                    dist.decode_word(w, &mut word);
                    self.block(ids, query, &word, &mut acc)?;
                }
                Ok(acc)
            })
            .collect::<Result<Vec<Partial>>>()?;
        // reduce in chunk order so results do not depend on scheduling
        let total = dist.support_size() as f64;
        let mut answer = 0.0;
        let mut inner = vec![0.0; ids.len()];
        for p in partials {
            answer += p.answer;
            for (dst, x) in inner.iter_mut().zip(p.inner) {
                *dst += x;
            }
        }
        Ok((
            answer / total,
            inner.into_iter().map(|x| x / total).collect(),
        ))
    }

    /// Stratified estimate: sampled words, every start state per word.
    fn sampled_inner_products(
        &self,
        ids: &[usize],
        query: &dyn Query,
    ) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let dist = self.distribution;
        let samples = self.samples;
        let n = dist.n as f64;
        let query_stream = (self.ledger.len() as u64) << 32;
        let batches = samples.div_ceil(MC_BATCH);
        let partials = (0..batches)
            .into_par_iter()
            .map(|b| {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(query_stream | b);
                let count = MC_BATCH.min(samples - b * MC_BATCH);
                let mut word = vec![0; dist.t];
                let mut sum_answer = 0.0;
                let mut sums = vec![0.0; ids.len()];
                let mut squares = vec![0.0; ids.len()];
                for _ in 0..count {
                    for s in word.iter_mut() {
                        *s = rng.random_range(0..dist.alphabet_size);
                    }
                    let mut acc = Partial {
                        answer: 0.0,
                        inner: vec![0.0; ids.len()],
                    };
                    self.block(ids, query, &word, &mut acc)?;
                    sum_answer += acc.answer / n;
                    for ((s, q), x) in sums.iter_mut().zip(squares.iter_mut()).zip(acc.inner) {
                        let x = x / n;
                        *s += x;
                        *q += x * x;
                    }
                }
                Ok((sum_answer, sums, squares))
            })
            .collect::<Result<Vec<_>>>()?;

        let m = samples as f64;
        let mut answer = 0.0;
        let mut sums = vec![0.0; ids.len()];
        let mut squares = vec![0.0; ids.len()];
        for (a, s, q) in partials {
            answer += a;
            for i in 0..ids.len() {
                sums[i] += s[i];
                squares[i] += q[i];
            }
        }
        let means: Vec<f64> = sums.iter().map(|s| s / m).collect();
        let stderr = means
            .iter()
            .zip(&squares)
            .map(|(mean, q)| {
                let var = ((q / m - mean * mean) * m / (m - 1.0)).max(0.0);
                (var / m).sqrt()
            })
            .collect();
        Ok((answer / m, means, stderr))
    }
}
