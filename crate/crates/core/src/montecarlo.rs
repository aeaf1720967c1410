//! Nontriviality probabilities of word maps, their lower bounds, and
//! finite-depth freeness experiments.
//!
//! Every sample `i` draws from its own stream `substream(seed, i)`, so an
//! estimate depends only on `(seed, samples)` and never on how the samples
//! are spread over worker threads.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, DiscreteCDF, Hypergeometric};
use thiserror::Error;

use crate::perm::{Bsgs, GroupKind, PermError, PermGroup, Permutation};
use crate::trees::{IteratedWreath, Portrait};
use crate::words::{Letter, Word, WordError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonteCarloError {
    #[error("the empty word is trivial in every group")]
    EmptyWord,
    #[error("enumeration needs {needed} tuples, budget is {budget}")]
    Budget { needed: String, budget: u128 },
    #[error("sample count must be positive")]
    Samples,
    #[error("confidence {0} is not in (0, 1)")]
    Confidence(f64),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("cannot start worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Perm(#[from] PermError),
    #[error(transparent)]
    Word(#[from] WordError),
}

pub const DEFAULT_EXACT_BUDGET: u128 = 10_000_000;

/// The random source for sample `index`: ChaCha8 keyed by
/// `seed_from_u64(seed)` on stream number `index`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A per-row seed derived from a master seed and a row label, drawn from
/// a stream far from the ones used for samples.
pub fn derive_seed(master: u64, label: u64) -> u64 {
    substream(master, u64::MAX - label).next_u64()
}

/// A finite group with a uniform element source.
pub trait UniformSampler: Sync {
    type Element: Clone + Send;

    fn identity(&self) -> Self::Element;
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Element;
    fn multiply(&self, f: &Self::Element, g: &Self::Element) -> Self::Element;
    fn invert(&self, f: &Self::Element) -> Self::Element;
    fn is_identity(&self, f: &Self::Element) -> bool;
}

impl UniformSampler for Bsgs {
    type Element = Permutation;

    fn identity(&self) -> Permutation {
        Permutation::identity(self.degree())
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Permutation {
        self.uniform_element(rng)
    }

    fn multiply(&self, f: &Permutation, g: &Permutation) -> Permutation {
        f.then(g)
    }

    fn invert(&self, f: &Permutation) -> Permutation {
        f.inverse()
    }

    fn is_identity(&self, f: &Permutation) -> bool {
        f.is_identity()
    }
}

/// Haar sampling of a truncated iterated wreath product; identity means
/// identity at the truncation depth.
impl UniformSampler for IteratedWreath {
    type Element = Portrait;

    fn identity(&self) -> Portrait {
        IteratedWreath::identity(self)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Portrait {
        IteratedWreath::sample(self, rng)
    }

    fn multiply(&self, f: &Portrait, g: &Portrait) -> Portrait {
        f.then(g)
    }

    fn invert(&self, f: &Portrait) -> Portrait {
        f.inverse()
    }

    fn is_identity(&self, f: &Portrait) -> bool {
        f.is_identity()
    }
}

/// `max(0, 1 - n/a)^n`, exactly.
pub fn finperm_bound(n: usize, a: usize) -> BigRational {
    if n >= a {
        return BigRational::zero();
    }
    let base = BigRational::new(BigInt::from(a - n), BigInt::from(a));
    num_traits::pow(base, n)
}

/// The bound for a word of length `n` over `A_k`, which separates with
/// order `(n, k - n)` whenever `n <= k - 3`.
pub fn alter_bound(n: usize, k: usize) -> Option<BigRational> {
    (n + 1 < k).then(|| finperm_bound(n, k - n))
}

/// A proportion with a two-sided Hoeffding interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub successes: u64,
    pub samples: u64,
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
    pub seed: u64,
}

impl Estimate {
    pub fn hoeffding(successes: u64, samples: u64, confidence: f64, seed: u64) -> Result<Self, MonteCarloError> {
        if samples == 0 {
            return Err(MonteCarloError::Samples);
        }
        check_confidence(confidence)?;
        let point = successes as f64 / samples as f64;
        let radius = hoeffding_radius(samples, confidence);
        Ok(Estimate {
            successes,
            samples,
            point,
            ci_low: (point - radius).max(0.0),
            ci_high: (point + radius).min(1.0),
            confidence,
            seed,
        })
    }

    pub fn exact_point(&self) -> BigRational {
        BigRational::new(BigInt::from(self.successes), BigInt::from(self.samples))
    }
}

/// Half-width `sqrt(ln(2 / (1 - confidence)) / (2 N))`.
pub fn hoeffding_radius(samples: u64, confidence: f64) -> f64 {
    ((2.0 / (1.0 - confidence)).ln() / (2.0 * samples as f64)).sqrt()
}

fn check_confidence(confidence: f64) -> Result<(), MonteCarloError> {
    if confidence > 0.0 && confidence < 1.0 {
        Ok(())
    } else {
        Err(MonteCarloError::Confidence(confidence))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
    Skipped,
    #[serde(rename = "n/a")]
    NotApplicable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Skipped => "skipped",
            Verdict::NotApplicable => "n/a",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub estimate: Estimate,
    #[serde(serialize_with = "serialize_rational")]
    pub bound: BigRational,
    pub verdict: Verdict,
}

fn serialize_rational<S: serde::Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

/// Pass when the whole interval is at or above the bound, fail when it is
/// entirely below.
pub fn check_bound(estimate: &Estimate, bound: &BigRational) -> BoundCheck {
    let b = bound.to_f64().unwrap_or(f64::NAN);
    let verdict = if estimate.ci_low >= b {
        Verdict::Pass
    } else if estimate.ci_high < b {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    };
    BoundCheck {
        estimate: estimate.clone(),
        bound: bound.clone(),
        verdict,
    }
}

/// Runs `f` on a pool of `workers` threads, or on the global pool when
/// `workers` is zero.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, MonteCarloError> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| MonteCarloError::Pool(e.to_string()))?;
    Ok(pool.install(f))
}

/// Counts the indices in `0..samples` for which `trial(rng)` holds, each
/// trial on its own substream.
pub fn count_successes<F>(samples: u64, seed: u64, workers: usize, trial: F) -> Result<u64, MonteCarloError>
where
    F: Fn(&mut ChaCha8Rng) -> bool + Sync,
{
    with_workers(workers, || {
        (0..samples)
            .into_par_iter()
            .filter(|&i| trial(&mut substream(seed, i)))
            .count() as u64
    })
}

/// Monte Carlo estimate of `P(w(g_1, ..., g_k) != 1)` with independent
/// uniform entries.
pub fn estimate_nontrivial_prob<G: UniformSampler>(
    group: &G,
    word: &Word,
    samples: u64,
    confidence: f64,
    seed: u64,
    workers: usize,
) -> Result<Estimate, MonteCarloError> {
    if samples == 0 {
        return Err(MonteCarloError::Samples);
    }
    check_confidence(confidence)?;
    let rank = word.rank();
    let successes = count_successes(samples, seed, workers, |rng| {
        let tuple: Vec<G::Element> = (0..rank).map(|_| group.sample(rng)).collect();
        let value = word
            .evaluate(&tuple, group.identity(), |f, g| group.multiply(f, g), |f| group.invert(f))
            .expect("tuple has the word's rank");
        !group.is_identity(&value)
    })?;
    Estimate::hoeffding(successes, samples, confidence, seed)
}

/// Exact fraction of tuples on which `word` is not the identity, by full
/// enumeration of `G^k`.
pub fn exact_prob_small(group: &Bsgs, word: &Word, budget: u128) -> Result<BigRational, MonteCarloError> {
    if word.is_empty() {
        return Err(MonteCarloError::EmptyWord);
    }
    let k = word.rank();
    let total: BigUint = num_traits::pow(group.order(), k);
    if total > BigUint::from(budget) {
        return Err(MonteCarloError::Budget {
            needed: total.to_string(),
            budget,
        });
    }
    let elements = group.elements();
    let size = elements.len();
    let mut index = vec![0usize; k];
    let mut nontrivial: u64 = 0;
    loop {
        let tuple: Vec<Permutation> = index.iter().map(|&i| elements[i].clone()).collect();
        if !Permutation::evaluate_word(word, &tuple, group.degree())?.is_identity() {
            nontrivial += 1;
        }
        // mixed-radix increment
        let mut pos = 0;
        while pos < k {
            index[pos] += 1;
            if index[pos] < size {
                break;
            }
            index[pos] = 0;
            pos += 1;
        }
        if pos == k {
            break;
        }
    }
    Ok(BigRational::new(BigInt::from(nontrivial), BigInt::from(total)))
}

/// One-sided Fisher exact test of `p1 > p2` from `x1` of `n1` and `x2` of
/// `n2` successes; returns the p-value.
pub fn fisher_greater(x1: u64, n1: u64, x2: u64, n2: u64) -> f64 {
    if x1 == 0 {
        return 1.0;
    }
    match Hypergeometric::new(n1 + n2, x1 + x2, n1) {
        Ok(h) => h.sf(x1 - 1).clamp(0.0, 1.0),
        Err(_) => 1.0,
    }
}

/// Whether `a` has a larger success rate than `b` at level `alpha`.
pub fn significantly_greater(a: &Estimate, b: &Estimate, alpha: f64) -> bool {
    fisher_greater(a.successes, a.samples, b.successes, b.samples) < alpha
}

/// Pearson chi-square statistic and p-value against equal cell
/// probabilities.
pub fn chi_square_uniform(counts: &[u64]) -> (f64, f64) {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    let df = (counts.len() - 1) as f64;
    let p = ChiSquared::new(df).map(|chi| chi.sf(stat)).unwrap_or(f64::NAN);
    (stat, p)
}

/// One row of an experiment table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub params: BTreeMap<String, String>,
    pub estimate: Option<Estimate>,
    pub bound: Option<String>,
    pub verdict: Verdict,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Rows of estimates with a metadata block. Contains nothing that varies
/// between runs with the same configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentTable {
    pub experiment: String,
    pub metadata: BTreeMap<String, String>,
    pub rows: Vec<Row>,
}

impl ExperimentTable {
    pub fn new(experiment: impl Into<String>) -> Self {
        ExperimentTable {
            experiment: experiment.into(),
            metadata: BTreeMap::new(),
            rows: Vec::new(),
        }
    }

    pub fn any_fail(&self) -> bool {
        self.rows.iter().any(|r| r.verdict == Verdict::Fail)
    }

    /// CSV with one `param_*` column per parameter, then the estimate,
    /// bound, verdict and seed.
    pub fn to_csv(&self) -> String {
        let param_names: Vec<&String> = self.rows.first().map(|r| r.params.keys().collect()).unwrap_or_default();
        let mut out = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = param_names.iter().map(|p| format!("param_{p}")).collect();
        header.extend(
            ["samples", "successes", "point", "ci_low", "ci_high", "bound", "verdict", "seed"]
                .iter()
                .map(|s| s.to_string()),
        );
        out.write_record(&header).expect("in-memory write");
        for row in &self.rows {
            let mut record: Vec<String> = param_names
                .iter()
                .map(|p| row.params.get(*p).cloned().unwrap_or_default())
                .collect();
            match &row.estimate {
                Some(e) => record.extend([
                    e.samples.to_string(),
                    e.successes.to_string(),
                    format!("{:.6}", e.point),
                    format!("{:.6}", e.ci_low),
                    format!("{:.6}", e.ci_high),
                ]),
                None => record.extend(std::iter::repeat_n(String::new(), 5)),
            }
            record.push(row.bound.clone().unwrap_or_default());
            record.push(row.verdict.to_string());
            record.push(row.seed.to_string());
            out.write_record(&record).expect("in-memory write");
        }
        String::from_utf8(out.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tables serialize")
    }
}

/// Exact fraction followed by its decimal value.
pub fn rational_cell(r: &BigRational) -> String {
    format!("{} ({:.6})", r, r.to_f64().unwrap_or(f64::NAN))
}

/// Estimates `P_{A_k}(w)` for each degree and checks it against the
/// `(n, k - n)` separation bound. Rows with `k <= n + 1` are skipped.
pub fn alter_sweep(
    word: &Word,
    degrees: &[usize],
    samples: u64,
    confidence: f64,
    seed: u64,
    workers: usize,
) -> Result<ExperimentTable, MonteCarloError> {
    if word.is_empty() {
        return Err(MonteCarloError::EmptyWord);
    }
    let n = word.len();
    let mut table = ExperimentTable::new("alter-sweep");
    table.metadata = metadata(seed, samples, confidence);
    table.metadata.insert("word".into(), word.to_string());
    for &k in degrees {
        let row_seed = derive_seed(seed, k as u64);
        let mut params = BTreeMap::new();
        params.insert("k".to_string(), k.to_string());
        params.insert("word".to_string(), word.to_string());
        let Some(bound) = alter_bound(n, k) else {
            table.rows.push(Row {
                params,
                estimate: None,
                bound: None,
                verdict: Verdict::Skipped,
                seed: row_seed,
                note: Some(format!("degree {k} does not exceed word length {n} plus one")),
            });
            continue;
        };
        let group = PermGroup::standard(GroupKind::Alternating, k)?.bsgs();
        let estimate = estimate_nontrivial_prob(&group, word, samples, confidence, row_seed, workers)?;
        let check = check_bound(&estimate, &bound);
        table.rows.push(Row {
            params,
            estimate: Some(estimate),
            bound: Some(rational_cell(&bound)),
            verdict: check.verdict,
            seed: row_seed,
            note: None,
        });
    }
    Ok(table)
}

fn metadata(seed: u64, samples: u64, confidence: f64) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("seed".to_string(), seed.to_string()),
        ("samples".to_string(), samples.to_string()),
        ("confidence".to_string(), confidence.to_string()),
        ("interval".to_string(), "hoeffding".to_string()),
        ("stream".to_string(), "chacha8, stream = sample index".to_string()),
    ])
}

/// Whether some nonempty reduced word of length at most `max_len` in the
/// tuple's generators is the identity.
pub fn has_short_relation<G: UniformSampler>(group: &G, tuple: &[G::Element], max_len: usize) -> bool {
    let letters: Vec<(Letter, G::Element)> = tuple
        .iter()
        .enumerate()
        .flat_map(|(i, g)| [(Letter::gen(i + 1), g.clone()), (Letter::gen_inv(i + 1), group.invert(g))])
        .collect();
    fn search<G: UniformSampler>(
        group: &G,
        letters: &[(Letter, G::Element)],
        prefix: &G::Element,
        last: Option<Letter>,
        remaining: usize,
    ) -> bool {
        if remaining == 0 {
            return false;
        }
        letters.iter().any(|(l, g)| {
            if last == Some(l.inverse()) {
                return false;
            }
            let next = group.multiply(prefix, g);
            group.is_identity(&next) || search(group, letters, &next, Some(*l), remaining - 1)
        })
    }
    search(group, &letters, &group.identity(), None, max_len)
}

/// For each depth, the fraction of Haar-random `rank`-tuples in the depth-`D`
/// truncation of the `arity`-ary iterated wreath product that satisfy a
/// relation of length at most `max_len`.
#[allow(clippy::too_many_arguments)]
pub fn freeness_experiment(
    arity: usize,
    depths: &[usize],
    rank: usize,
    max_len: usize,
    samples: u64,
    confidence: f64,
    seed: u64,
    workers: usize,
) -> Result<ExperimentTable, MonteCarloError> {
    if rank == 0 || max_len == 0 {
        return Err(MonteCarloError::Parameter("tuple size and word length must be positive".into()));
    }
    if !(2..=crate::trees::MAX_ARITY).contains(&arity) {
        return Err(MonteCarloError::Parameter(format!("arity {arity} unsupported")));
    }
    if samples == 0 {
        return Err(MonteCarloError::Samples);
    }
    check_confidence(confidence)?;
    let mut table = ExperimentTable::new("freeness");
    table.metadata = metadata(seed, samples, confidence);
    table.metadata.insert("arity".into(), arity.to_string());
    table.metadata.insert("rank".into(), rank.to_string());
    table.metadata.insert("max_len".into(), max_len.to_string());
    for &depth in depths {
        if depth == 0 || depth > 20 {
            return Err(MonteCarloError::Parameter(format!("depth {depth} outside 1..=20")));
        }
        let row_seed = derive_seed(seed, depth as u64);
        let group = IteratedWreath::full(arity, depth);
        let successes = count_successes(samples, row_seed, workers, |rng| {
            let tuple: Vec<Portrait> = (0..rank).map(|_| group.sample(rng)).collect();
            has_short_relation(&group, &tuple, max_len)
        })?;
        let estimate = Estimate::hoeffding(successes, samples, confidence, row_seed)?;
        let params = BTreeMap::from([
            ("arity".to_string(), arity.to_string()),
            ("depth".to_string(), depth.to_string()),
            ("max_len".to_string(), max_len.to_string()),
            ("rank".to_string(), rank.to_string()),
        ]);
        table.rows.push(Row {
            params,
            estimate: Some(estimate),
            bound: None,
            verdict: Verdict::NotApplicable,
            seed: row_seed,
            note: None,
        });
    }
    Ok(table)
}

/// Verdicts for the decay of freeness fractions along the rows: no
/// significant increase between consecutive depths, and a significant
/// decrease from the first to the last row.
pub fn decay_verdict(table: &ExperimentTable, alpha: f64) -> (bool, bool) {
    let estimates: Vec<&Estimate> = table.rows.iter().filter_map(|r| r.estimate.as_ref()).collect();
    let non_increasing = estimates.windows(2).all(|w| !significantly_greater(w[1], w[0], alpha));
    let decreased = match (estimates.first(), estimates.last()) {
        (Some(first), Some(last)) if estimates.len() > 1 => significantly_greater(first, last, alpha),
        _ => false,
    };
    (non_increasing, decreased)
}

/// The exact probability that a Haar-random element of the full depth-`D`
/// truncation is the identity.
pub fn identity_probability(arity: usize, depth: usize) -> Option<BigRational> {
    IteratedWreath::full(arity, depth)
        .order()
        .map(|order| BigRational::new(BigInt::one(), BigInt::from(order)))
}
