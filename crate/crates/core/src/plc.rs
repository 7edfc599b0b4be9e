//! The full ranking model with unobserved consideration: exact probabilities
//! by enumeration over consideration sets, a randomized additive-error
//! estimator, a deterministic multiplicative-error estimator based on
//! log-scale bucketing of subset exp-utility sums, exact top-l statistics,
//! and a witness construction showing consideration probabilities are not
//! identifiable.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::consideration::{normalizer_z, sample_consideration_set};
use crate::error::{Error, Result};
use crate::plackett_luce::pl_sample_ranking;
use crate::types::{
    validate_ranking, ConsiderationProbs, ItemSet, Ranking, StatsSource, TopLStats, Utilities,
};

/// Largest universe the exact enumerators accept by default; the subset sum
/// has 2^(n-k) terms.
pub const MAX_EXACT_UNIVERSE: usize = 25;

/// Utility magnitude standing in for +/- infinity in the witness
/// construction; exp(-30) pushes unwanted ranking mass below 1e-12.
pub const WITNESS_UTILITY_MAGNITUDE: f64 = 30.0;

/// Configuration for the randomized estimator [`plc_prob_mc`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    epsilon: f64,
    delta: f64,
    seed: u64,
}

impl McConfig {
    /// `epsilon` is the additive tolerance and `delta` the failure
    /// probability; both must lie strictly inside (0, 1).
    pub fn new(epsilon: f64, delta: f64, seed: u64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidInput(format!("epsilon must lie in (0,1), got {epsilon}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidInput(format!("delta must lie in (0,1), got {delta}")));
        }
        Ok(Self { epsilon, delta, seed })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Number of accepted consideration-set samples needed for an epsilon-additive
/// estimate with failure probability delta: ceil(ln(4/delta) / (2 epsilon^2)).
pub fn mc_sample_count(epsilon: f64, delta: f64) -> usize {
    ((4.0 / delta).ln() / (2.0 * epsilon * epsilon)).ceil() as usize
}

/// A full model parameterization (utilities plus consideration probabilities).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub utilities: Utilities,
    pub consideration: ConsiderationProbs,
}

fn check_dimensions(u: &Utilities, p: &ConsiderationProbs) -> Result<usize> {
    if u.len() != p.len() {
        return Err(Error::InvalidInput(format!(
            "utilities cover {} items but consideration probabilities cover {}",
            u.len(),
            p.len()
        )));
    }
    Ok(u.len())
}

/// Exp-utilities shifted by the maximum so products cannot overflow;
/// every ranking probability is invariant to the shift.
fn scaled_exp(u: &[f64]) -> Vec<f64> {
    let max = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    u.iter().map(|x| (x - max).exp()).collect()
}

/// PL probability of `entries` when the consideration set is the ranked
/// items plus extra items whose scaled exp-utilities sum to `extra`.
fn pl_prob_given_extra(entries: &[usize], e: &[f64], suffix: &[f64], extra: f64) -> f64 {
    let mut prob = 1.0;
    for (t, &item) in entries.iter().enumerate() {
        prob *= e[item] / (extra + suffix[t]);
    }
    prob
}

fn ranked_suffix_sums(entries: &[usize], e: &[f64]) -> Vec<f64> {
    let mut suffix = vec![0.0; entries.len()];
    let mut acc = 0.0;
    for t in (0..entries.len()).rev() {
        acc += e[entries[t]];
        suffix[t] = acc;
    }
    suffix
}

/// Sum over all supersets of the ranked items: consideration mass times PL
/// probability. Only subsets of the complement are enumerated; every other
/// consideration set contributes zero.
fn exact_prob_core(entries: &[usize], e: &[f64], p: &[f64], z: f64) -> f64 {
    let n = p.len();
    let suffix = ranked_suffix_sums(entries, e);
    let complement: Vec<usize> = (0..n).filter(|i| !entries.contains(i)).collect();
    let base_mass: f64 = entries.iter().map(|&i| p[i]).product();
    let walk = SubsetWalk { complement: &complement, e, p, entries, suffix: &suffix };
    let mut acc = 0.0;
    walk.accumulate(0, base_mass, 0.0, &mut acc);
    acc / z
}

/// Depth-first include/exclude over complement items, carrying the raw
/// consideration mass and the exp-utility sum of included extras.
struct SubsetWalk<'a> {
    complement: &'a [usize],
    e: &'a [f64],
    p: &'a [f64],
    entries: &'a [usize],
    suffix: &'a [f64],
}

impl SubsetWalk<'_> {
    fn accumulate(&self, idx: usize, mass: f64, extra: f64, acc: &mut f64) {
        if mass == 0.0 {
            return;
        }
        if idx == self.complement.len() {
            *acc += mass * pl_prob_given_extra(self.entries, self.e, self.suffix, extra);
            return;
        }
        let item = self.complement[idx];
        self.accumulate(idx + 1, mass * self.p[item], extra + self.e[item], acc);
        self.accumulate(idx + 1, mass * (1.0 - self.p[item]), extra, acc);
    }
}

/// Exact probability of observing `r`, summing over every consideration set
/// that could have produced it. Enumerates 2^(n-k) subsets, so the universe
/// is guarded by [`MAX_EXACT_UNIVERSE`].
pub fn plc_prob_exact(r: &Ranking, u: &Utilities, p: &ConsiderationProbs) -> Result<f64> {
    plc_prob_exact_with_limit(r, u, p, MAX_EXACT_UNIVERSE)
}

/// [`plc_prob_exact`] with an explicit enumeration guard.
pub fn plc_prob_exact_with_limit(
    r: &Ranking,
    u: &Utilities,
    p: &ConsiderationProbs,
    limit: usize,
) -> Result<f64> {
    let n = check_dimensions(u, p)?;
    if n > limit {
        return Err(Error::UniverseTooLargeForExact { n, limit });
    }
    validate_ranking(r, n)?;
    let k = r.len();
    let z = normalizer_z(p, k);
    if z <= 0.0 {
        return Err(Error::NormalizerZero);
    }
    let e = scaled_exp(u.as_slice());
    Ok(exact_prob_core(r.entries(), &e, p.as_slice(), z))
}

/// Exact Pr(item `i` ranked within the top `l`) of a length-`k` ranking.
pub fn plc_top_l_prob(
    item: usize,
    l: usize,
    u: &Utilities,
    p: &ConsiderationProbs,
    k: usize,
) -> Result<f64> {
    let n = check_dimensions(u, p)?;
    if item >= n {
        return Err(Error::ItemOutOfRange(item));
    }
    if l < 1 || l > k {
        return Err(Error::InvalidInput(format!("cutoff {l} must lie in 1..={k}")));
    }
    let stats = plc_exact_top_l_stats(u, p, k)?;
    Ok(stats.prob_top(item, l))
}

/// Exact top-l statistics for every item and cutoff, by enumerating all
/// length-`k` rankings and accumulating their exact probabilities.
pub fn plc_exact_top_l_stats(u: &Utilities, p: &ConsiderationProbs, k: usize) -> Result<TopLStats> {
    plc_exact_top_l_stats_with_limit(u, p, k, MAX_EXACT_UNIVERSE)
}

pub fn plc_exact_top_l_stats_with_limit(
    u: &Utilities,
    p: &ConsiderationProbs,
    k: usize,
    limit: usize,
) -> Result<TopLStats> {
    let n = check_dimensions(u, p)?;
    if n > limit {
        return Err(Error::UniverseTooLargeForExact { n, limit });
    }
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("ranking length {k} must lie in 1..={n}")));
    }
    let z = normalizer_z(p, k);
    if z <= 0.0 {
        return Err(Error::NormalizerZero);
    }
    let e = scaled_exp(u.as_slice());
    let mut pr_top = vec![vec![0.0; k]; n];
    let mut current = Vec::with_capacity(k);
    let mut used = vec![false; n];
    enumerate_rankings(
        &mut current,
        &mut used,
        n,
        k,
        &mut |entries: &[usize]| {
            let prob = exact_prob_core(entries, &e, p.as_slice(), z);
            for (pos, &item) in entries.iter().enumerate() {
                for cell in &mut pr_top[item][pos..] {
                    *cell += prob;
                }
            }
        },
    );
    TopLStats::new(pr_top, StatsSource::Exact)
}

fn enumerate_rankings(
    current: &mut Vec<usize>,
    used: &mut [bool],
    n: usize,
    k: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    if current.len() == k {
        visit(current);
        return;
    }
    for item in 0..n {
        if !used[item] {
            used[item] = true;
            current.push(item);
            enumerate_rankings(current, used, n, k, visit);
            current.pop();
            used[item] = false;
        }
    }
}

/// Draws a ranking from the full generative model: a consideration set of
/// size >= `k` followed by a PL draw restricted to it.
pub fn sample_plc_ranking(
    u: &Utilities,
    p: &ConsiderationProbs,
    k: usize,
    rng: &mut impl Rng,
) -> Result<Ranking> {
    check_dimensions(u, p)?;
    let set = sample_consideration_set(p, k, rng)?;
    pl_sample_ranking(&set, u, k, rng)
}

/// Randomized additive-error estimate of the exact probability: averages the
/// PL probability of `r` over accepted consideration-set samples.
///
/// With `s = ceil(ln(4/delta) / (2 epsilon^2))` accepted samples the estimate
/// is within `epsilon` of the exact value with probability at least
/// `1 - delta`. Rejection attempts are capped from the expected-waste bound,
/// so a normalizer too small for the budget surfaces as
/// [`Error::RejectionCapExceeded`].
pub fn plc_prob_mc(
    r: &Ranking,
    u: &Utilities,
    p: &ConsiderationProbs,
    cfg: &McConfig,
) -> Result<f64> {
    let n = check_dimensions(u, p)?;
    validate_ranking(r, n)?;
    let k = r.len();
    let z = normalizer_z(p, k);
    if z <= 0.0 {
        return Err(Error::NormalizerZero);
    }
    let s = mc_sample_count(cfg.epsilon, cfg.delta);
    // Attempt budget from the expected rejection waste, with an absolute
    // ceiling so a vanishing normalizer fails fast instead of spinning.
    let budget = (2.0 * (2.0 / cfg.delta).ln() + 2.0 * s as f64) / z;
    let ceiling = (10_000_000usize).max(2 * s);
    let cap = if budget.is_finite() && budget <= ceiling as f64 {
        (budget.ceil() as usize).max(1000)
    } else {
        ceiling
    };

    let e = scaled_exp(u.as_slice());
    let suffix = ranked_suffix_sums(r.entries(), &e);
    let entries = r.entries();
    let in_ranking: Vec<bool> = {
        let mut v = vec![false; n];
        for &i in entries {
            v[i] = true;
        }
        v
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut accepted = 0usize;
    let mut attempts = 0usize;
    let mut total = 0.0;
    while accepted < s {
        if attempts >= cap {
            return Err(Error::RejectionCapExceeded(cap));
        }
        attempts += 1;
        let mut size = 0usize;
        let mut extra = 0.0;
        let mut covers_ranking = true;
        for i in 0..n {
            if rng.random::<f64>() < p.get(i) {
                size += 1;
                if !in_ranking[i] {
                    extra += e[i];
                }
            } else if in_ranking[i] {
                covers_ranking = false;
            }
        }
        if size < k {
            continue;
        }
        accepted += 1;
        if covers_ranking {
            total += pl_prob_given_extra(entries, &e, &suffix, extra);
        }
    }
    Ok(total / s as f64)
}

/// One bucket of the binned estimator: accumulated consideration mass and
/// the largest exp-utility sum routed into the bucket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinEntry {
    pub mass: f64,
    pub max_exp_utility: f64,
}

/// Consideration mass over subsets of the complement of a ranking, bucketed
/// by exp-utility sum on a log scale of ratio `1 + epsilon/(2kn)`.
///
/// Entry 0 is the reserved bucket for the empty subset; entry `j + 1` covers
/// exp-utility sums near `(1 + delta_bin)^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedAccumulator {
    entries: Vec<BinEntry>,
    delta_bin: f64,
}

impl BinnedAccumulator {
    /// Folds every complement item's consideration Bernoulli into the
    /// buckets. Requires strictly positive utilities so bucket indices are
    /// non-negative.
    pub fn build(r: &Ranking, u: &Utilities, p: &ConsiderationProbs, epsilon: f64) -> Result<Self> {
        let n = check_dimensions(u, p)?;
        validate_ranking(r, n)?;
        let eps_ok = epsilon > 0.0;
        if !eps_ok {
            return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
        }
        if let Some(i) = u.as_slice().iter().position(|&x| x <= 0.0) {
            return Err(Error::NonPositiveUtility(i));
        }
        let k = r.len();
        if k >= n {
            return Err(Error::InvalidInput(
                "binned accumulator needs a non-empty complement (k < n)".into(),
            ));
        }
        let delta_bin = epsilon / (2.0 * k as f64 * n as f64);
        let log_ratio = (1.0 + delta_bin).ln();
        let complement: Vec<usize> = (0..n).filter(|i| !r.contains(*i)).collect();
        let total_exp: f64 = complement.iter().map(|&i| u.get(i).exp()).sum();
        // u > 0 makes total_exp > 1, so the top bucket index is at least 0.
        let top = (total_exp.ln() / log_ratio).floor() as usize;

        let mut entries = vec![BinEntry { mass: 0.0, max_exp_utility: 0.0 }; top + 2];
        entries[0].mass = 1.0;
        for &item in &complement {
            let pi = p.get(item);
            let exp_u = u.get(item).exp();
            let mut next = entries.clone();
            for entry in &mut next {
                entry.mass *= 1.0 - pi;
            }
            for entry in entries.iter() {
                if entry.mass > 0.0 {
                    let sum = entry.max_exp_utility + exp_u;
                    // Bucket index from the stored maximum, clamped against
                    // float-edge rounding; the analysis keeps it in range.
                    let h = (sum.ln() / log_ratio).floor();
                    let h = (h.max(0.0) as usize).min(top);
                    next[h + 1].mass += entry.mass * pi;
                    if sum > next[h + 1].max_exp_utility {
                        next[h + 1].max_exp_utility = sum;
                    }
                }
            }
            entries = next;
        }
        Ok(Self { entries, delta_bin })
    }

    pub fn delta_bin(&self) -> f64 {
        self.delta_bin
    }

    /// Number of buckets including the reserved empty-subset bucket.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Bucket for the empty subset.
    pub fn empty_bin(&self) -> BinEntry {
        self.entries[0]
    }

    /// Bucket `j` for `j >= 0` (offset past the empty-subset bucket).
    pub fn bin(&self, j: usize) -> BinEntry {
        self.entries[j + 1]
    }

    /// Total consideration mass across buckets; sums to 1 over all subsets
    /// of the complement.
    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.mass).sum()
    }

    /// Representative exp-utility sum for bucket index `idx` (0 = empty
    /// subset, which is represented exactly).
    fn bin_value(&self, idx: usize) -> f64 {
        if idx == 0 {
            0.0
        } else {
            (1.0 + self.delta_bin).powi((idx - 1) as i32)
        }
    }

    fn iter_mass(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.mass > 0.0)
            .map(|(idx, e)| (self.bin_value(idx), e.mass))
    }
}

/// Deterministic estimate of the exact probability with multiplicative error
/// at most `1 + epsilon`, obtained by replacing each complement subset's
/// exp-utility sum with its bucket's representative value.
///
/// Requires strictly positive utilities; `k = n` short-circuits to the plain
/// PL probability over the whole universe. The bucketing works on raw
/// exp-utilities, so utilities must stay below ~700 - ln(n) to avoid
/// overflow.
pub fn plc_prob_binned(
    r: &Ranking,
    u: &Utilities,
    p: &ConsiderationProbs,
    epsilon: f64,
) -> Result<f64> {
    let n = check_dimensions(u, p)?;
    validate_ranking(r, n)?;
    if let Some(i) = u.as_slice().iter().position(|&x| x <= 0.0) {
        return Err(Error::NonPositiveUtility(i));
    }
    let k = r.len();
    if k == n {
        let all = ItemSet::new((0..n).collect());
        return crate::plackett_luce::pl_ranking_prob(r, &all, u);
    }
    let acc = BinnedAccumulator::build(r, u, p, epsilon)?;
    let z = normalizer_z(p, k);
    if z <= 0.0 {
        return Err(Error::NormalizerZero);
    }
    let entries = r.entries();
    // Unscaled exp-utilities: bucket values live on the same scale.
    let mut suffix = vec![0.0; k];
    let mut running = 0.0;
    for t in (0..k).rev() {
        running += u.get(entries[t]).exp();
        suffix[t] = running;
    }
    let ranked_mass: f64 = entries.iter().map(|&i| p.get(i)).product();
    let mut total = 0.0;
    for (bin_value, mass) in acc.iter_mass() {
        let mut pl = 1.0;
        for t in 0..k {
            pl *= u.get(entries[t]).exp() / (bin_value + suffix[t]);
        }
        total += mass * pl;
    }
    Ok(ranked_mass / z * total)
}

/// Two distinct parameterizations with identical ranking distributions:
/// `k - 1` always-considered items of very high utility, `n - k` "good"
/// items at utility 1 considered with probability `g_t`, and one very low
/// utility item whose consideration probability is solved so the observable
/// "bad ranking" mass equals `c` in both.
///
/// Requires `0 < c <= min((1-g1)^(n-k), (1-g2)^(n-k))` for the solved
/// probabilities to stay in (0, 1].
pub fn nonidentifiability_witness(
    n: usize,
    k: usize,
    g1: f64,
    g2: f64,
    c: f64,
) -> Result<(ModelParams, ModelParams)> {
    if n < 2 || k < 1 || k >= n {
        return Err(Error::InvalidInput(format!(
            "witness needs n > 1 and 1 <= k < n, got n={n}, k={k}"
        )));
    }
    for g in [g1, g2] {
        if !(g > 0.0 && g < 1.0) {
            return Err(Error::InvalidInput(format!("g must lie in (0,1), got {g}")));
        }
    }
    let lambda1 = (1.0 - g1).powi((n - k) as i32);
    let lambda2 = (1.0 - g2).powi((n - k) as i32);
    let max_c = lambda1.min(lambda2);
    if !(c > 0.0 && c <= max_c) {
        return Err(Error::InfeasibleC { c, max: max_c });
    }
    let params_for = |g: f64, lambda: f64| -> Result<ModelParams> {
        let b = c / (1.0 - c) * (1.0 - lambda) / lambda;
        let mut utilities = Vec::with_capacity(n);
        let mut probs = Vec::with_capacity(n);
        for _ in 0..k - 1 {
            utilities.push(WITNESS_UTILITY_MAGNITUDE);
            probs.push(1.0);
        }
        for _ in 0..n - k {
            utilities.push(1.0);
            probs.push(g);
        }
        utilities.push(-WITNESS_UTILITY_MAGNITUDE);
        probs.push(b.min(1.0));
        Ok(ModelParams {
            utilities: Utilities::new(utilities)?,
            consideration: ConsiderationProbs::new(probs)?,
        })
    };
    Ok((params_for(g1, lambda1)?, params_for(g2, lambda2)?))
}

/// Total variation distance between the exact ranking distributions of two
/// parameterizations over the same universe and ranking length.
pub fn total_variation_exact(a: &ModelParams, b: &ModelParams, k: usize) -> Result<f64> {
    let n = check_dimensions(&a.utilities, &a.consideration)?;
    if check_dimensions(&b.utilities, &b.consideration)? != n {
        return Err(Error::InvalidInput("parameterizations cover different universes".into()));
    }
    let za = normalizer_z(&a.consideration, k);
    let zb = normalizer_z(&b.consideration, k);
    if za <= 0.0 || zb <= 0.0 {
        return Err(Error::NormalizerZero);
    }
    let ea = scaled_exp(a.utilities.as_slice());
    let eb = scaled_exp(b.utilities.as_slice());
    let mut tv = 0.0;
    let mut current = Vec::with_capacity(k);
    let mut used = vec![false; n];
    enumerate_rankings(&mut current, &mut used, n, k, &mut |entries: &[usize]| {
        let pa = exact_prob_core(entries, &ea, a.consideration.as_slice(), za);
        let pb = exact_prob_core(entries, &eb, b.consideration.as_slice(), zb);
        tv += (pa - pb).abs();
    });
    Ok(tv / 2.0)
}
