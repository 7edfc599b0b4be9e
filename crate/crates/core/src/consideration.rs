//! The independent-consideration distribution over sets: exact set
//! probabilities, the size normalizer via the Poisson-binomial PMF, and
//! rejection sampling of feasible sets.

use rand::Rng;

use crate::error::{Error, Result};
use crate::types::{ConsiderationProbs, ItemSet};

/// Default cap on rejection-sampling attempts, so near-zero normalizers
/// surface as errors instead of hanging.
pub const DEFAULT_REJECTION_CAP: usize = 1_000_000;

/// Distribution of the number of successes among independent Bernoulli
/// trials: `pmf[m]` = Pr(exactly `m` of `n` succeed).
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonBinomialPmf {
    pmf: Vec<f64>,
}

impl PoissonBinomialPmf {
    pub fn n(&self) -> usize {
        self.pmf.len() - 1
    }

    pub fn prob(&self, m: usize) -> f64 {
        self.pmf[m]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.pmf
    }

    /// Pr(at least `m` successes).
    pub fn tail(&self, m: usize) -> f64 {
        if m >= self.pmf.len() {
            return 0.0;
        }
        self.pmf[m..].iter().sum()
    }
}

/// Exact PMF of the consideration-set size, by iterative convolution: fold
/// each item's Bernoulli into the running PMF in O(current length), O(n^2)
/// total.
pub fn poisson_binomial_pmf(p: &ConsiderationProbs) -> PoissonBinomialPmf {
    let mut pmf = vec![1.0];
    for &pi in p.as_slice() {
        let mut next = vec![0.0; pmf.len() + 1];
        for (m, &mass) in pmf.iter().enumerate() {
            next[m] += mass * (1.0 - pi);
            next[m + 1] += mass * pi;
        }
        pmf = next;
    }
    PoissonBinomialPmf { pmf }
}

/// The normalizer z_{k,p}: probability that an unconditioned independent
/// draw considers at least `k` items.
pub fn normalizer_z(p: &ConsiderationProbs, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    poisson_binomial_pmf(p).tail(k)
}

/// Probability of drawing consideration set `c` conditioned on |C| >= k.
/// Sets smaller than `k` have probability 0 by definition.
pub fn consideration_set_prob(c: &ItemSet, p: &ConsiderationProbs, k: usize) -> f64 {
    if c.len() < k {
        return 0.0;
    }
    let raw = raw_set_mass(c, p);
    raw / normalizer_z(p, k)
}

/// Unconditioned mass of a set: product of p over members and (1-p) over
/// non-members. A p_i = 1 item outside the set contributes factor 0 with no
/// special casing.
pub(crate) fn raw_set_mass(c: &ItemSet, p: &ConsiderationProbs) -> f64 {
    let mut mass = 1.0;
    for (i, &pi) in p.as_slice().iter().enumerate() {
        mass *= if c.contains(i) { pi } else { 1.0 - pi };
    }
    mass
}

/// Draws a consideration set of size >= `k` by independent Bernoulli draws
/// with rejection, using the default attempt cap. Deterministic given `rng`.
pub fn sample_consideration_set(
    p: &ConsiderationProbs,
    k: usize,
    rng: &mut impl Rng,
) -> Result<ItemSet> {
    sample_consideration_set_capped(p, k, DEFAULT_REJECTION_CAP, rng)
}

/// [`sample_consideration_set`] with an explicit attempt cap.
pub fn sample_consideration_set_capped(
    p: &ConsiderationProbs,
    k: usize,
    cap: usize,
    rng: &mut impl Rng,
) -> Result<ItemSet> {
    if k > p.len() {
        return Err(Error::NormalizerZero);
    }
    for _ in 0..cap {
        let mut items = Vec::new();
        for (i, &pi) in p.as_slice().iter().enumerate() {
            if rng.random::<f64>() < pi {
                items.push(i);
            }
        }
        if items.len() >= k {
            return Ok(ItemSet::new(items));
        }
    }
    Err(Error::RejectionCapExceeded(cap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn probs(v: &[f64]) -> ConsiderationProbs {
        ConsiderationProbs::new(v.to_vec()).unwrap()
    }

    /// Brute-force PMF over all 2^n subsets, for cross-checking.
    fn pmf_by_enumeration(p: &[f64]) -> Vec<f64> {
        let n = p.len();
        let mut pmf = vec![0.0; n + 1];
        for mask in 0u32..(1 << n) {
            let mut mass = 1.0;
            let mut size = 0;
            for (i, &pi) in p.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    mass *= pi;
                    size += 1;
                } else {
                    mass *= 1.0 - pi;
                }
            }
            pmf[size] += mass;
        }
        pmf
    }

    #[test]
    fn pmf_fair_coins() {
        let got = poisson_binomial_pmf(&probs(&[0.5, 0.5]));
        assert_eq!(got.as_slice(), &[0.25, 0.5, 0.25]);
    }

    #[test]
    fn pmf_certain_success() {
        let got = poisson_binomial_pmf(&probs(&[1.0]));
        assert_eq!(got.as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn pmf_hand_convolution() {
        // (0.2, 0.7): hand-folded and cross-checked by enumerating 4 outcomes.
        let got = poisson_binomial_pmf(&probs(&[0.2, 0.7]));
        let expect = [0.24, 0.62, 0.14];
        for (g, e) in got.as_slice().iter().zip(expect) {
            assert!((g - e).abs() < 1e-15, "{g} vs {e}");
        }
        let brute = pmf_by_enumeration(&[0.2, 0.7]);
        for (g, b) in got.as_slice().iter().zip(brute) {
            assert!((g - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pmf_matches_enumeration_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = rng.random_range(1..=12);
            let p: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..=1.0)).collect();
            let got = poisson_binomial_pmf(&probs(&p));
            let brute = pmf_by_enumeration(&p);
            for (g, b) in got.as_slice().iter().zip(brute) {
                assert!((g - b).abs() < 1e-12, "{g} vs {b}");
            }
            let total: f64 = got.as_slice().iter().sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn normalizer_trivial_cases() {
        let p = probs(&[0.5, 0.5]);
        assert_eq!(normalizer_z(&p, 0), 1.0);
        assert!((normalizer_z(&p, 2) - 0.25).abs() < 1e-15);
        assert_eq!(normalizer_z(&p, 3), 0.0);
    }

    #[test]
    fn normalizer_matches_subset_enumeration() {
        let p = [0.2, 0.7, 0.9];
        let mut tail = 0.0;
        for mask in 0u32..8 {
            let size = mask.count_ones() as usize;
            if size >= 2 {
                let mut mass = 1.0;
                for (i, &pi) in p.iter().enumerate() {
                    mass *= if mask >> i & 1 == 1 { pi } else { 1.0 - pi };
                }
                tail += mass;
            }
        }
        let got = normalizer_z(&probs(&p), 2);
        assert!((got - tail).abs() < 1e-12, "{got} vs {tail}");
    }

    #[test]
    fn normalizer_monotone_in_k_and_p() {
        let p = probs(&[0.3, 0.6, 0.8, 0.4]);
        for k in 0..4 {
            assert!(normalizer_z(&p, k) >= normalizer_z(&p, k + 1) - 1e-15);
        }
        let bumped = probs(&[0.3, 0.7, 0.8, 0.4]);
        for k in 0..=4 {
            assert!(normalizer_z(&bumped, k) >= normalizer_z(&p, k) - 1e-15);
        }
    }

    #[test]
    fn set_prob_zero_below_k() {
        let p = probs(&[0.5, 0.5, 0.5]);
        let c = ItemSet::new(vec![0]);
        assert_eq!(consideration_set_prob(&c, &p, 2), 0.0);
    }

    #[test]
    fn set_prob_three_feasible_sets() {
        // n=2, k=1, p=(0.5,0.5): each feasible set has raw mass 0.25, z=0.75.
        let p = probs(&[0.5, 0.5]);
        for c in [ItemSet::new(vec![0]), ItemSet::new(vec![1]), ItemSet::new(vec![0, 1])] {
            let got = consideration_set_prob(&c, &p, 1);
            assert!((got - 1.0 / 3.0).abs() < 1e-12, "{got}");
        }
    }

    #[test]
    fn set_probs_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let n = rng.random_range(1..=10usize);
            let k = rng.random_range(0..=n);
            let p: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..=1.0)).collect();
            let cp = probs(&p);
            let mut total = 0.0;
            for mask in 0u32..(1 << n) {
                let items: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
                total += consideration_set_prob(&ItemSet::new(items), &cp, k);
            }
            assert!((total - 1.0).abs() < 1e-10, "n={n} k={k}: {total}");
        }
    }

    #[test]
    fn sampler_deterministic_consideration() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = probs(&[1.0, 1.0, 1.0]);
        for _ in 0..20 {
            let c = sample_consideration_set(&p, 2, &mut rng).unwrap();
            assert_eq!(c.items(), &[0, 1, 2]);
        }
    }

    #[test]
    fn sampler_conditional_set_frequency() {
        // n=2, k=1, p=(0.5,0.5): Pr({0,1}) = 1/3.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let p = probs(&[0.5, 0.5]);
        let mut both = 0;
        let trials = 30_000;
        for _ in 0..trials {
            let c = sample_consideration_set(&p, 1, &mut rng).unwrap();
            if c.len() == 2 {
                both += 1;
            }
        }
        let freq = both as f64 / trials as f64;
        assert!((freq - 1.0 / 3.0).abs() < 0.01, "freq {freq}");
    }

    #[test]
    fn sampler_unconditioned_inclusion_rates() {
        // k = 0 never rejects; per-item inclusion tracks p_i.
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let pv = [0.01, 0.35, 0.9];
        let p = probs(&pv);
        let trials = 30_000;
        let mut counts = [0usize; 3];
        for _ in 0..trials {
            let c = sample_consideration_set(&p, 0, &mut rng).unwrap();
            for (i, count) in counts.iter_mut().enumerate() {
                if c.contains(i) {
                    *count += 1;
                }
            }
        }
        for i in 0..3 {
            let freq = counts[i] as f64 / trials as f64;
            assert!((freq - pv[i]).abs() < 0.01, "item {i}: {freq} vs {}", pv[i]);
        }
    }

    #[test]
    fn sampler_infeasible_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let p = probs(&[0.5, 0.5]);
        assert_eq!(sample_consideration_set(&p, 3, &mut rng), Err(Error::NormalizerZero));
    }

    #[test]
    fn sampler_cap_exceeded_on_tiny_normalizer() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let p = probs(&[1e-9, 1e-9, 1e-9]);
        let got = sample_consideration_set_capped(&p, 3, 1000, &mut rng);
        assert_eq!(got, Err(Error::RejectionCapExceeded(1000)));
    }

    #[test]
    fn sampler_matches_exact_distribution() {
        // n=3, k=1: empirical set frequencies within 3 standard errors.
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let p = probs(&[0.3, 0.8, 0.5]);
        let trials = 100_000usize;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..trials {
            let c = sample_consideration_set(&p, 1, &mut rng).unwrap();
            *counts.entry(c.items().to_vec()).or_insert(0usize) += 1;
        }
        for mask in 1u32..8 {
            let items: Vec<usize> = (0..3).filter(|i| mask >> i & 1 == 1).collect();
            let expect = consideration_set_prob(&ItemSet::new(items.clone()), &p, 1);
            let got = *counts.get(&items).unwrap_or(&0) as f64 / trials as f64;
            let se = (expect * (1.0 - expect) / trials as f64).sqrt();
            assert!((got - expect).abs() <= 3.0 * se + 1e-9, "set {items:?}: {got} vs {expect}");
        }
    }
}
