//! Cross-checks between the exact enumerators, the approximation algorithms,
//! and the generative samplers. The exact path is the oracle for everything
//! else.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use plc_core::plackett_luce::{
    infer_utility_order, pl_fit_from, pl_sample_ranking, FitConfig,
};
use plc_core::plc::{
    plc_prob_exact, plc_prob_mc, plc_top_l_prob, sample_plc_ranking, McConfig,
};
use plc_core::types::NormalizeMode;
use plc_core::{
    normalize_utilities, ConsiderationProbs, ItemSet, Observation, Ranking, RankingDataset,
    Utilities,
};

fn utils(v: &[f64]) -> Utilities {
    Utilities::new(v.to_vec()).unwrap()
}

fn probs(v: &[f64]) -> ConsiderationProbs {
    ConsiderationProbs::new(v.to_vec()).unwrap()
}

fn all_rankings(n: usize, k: usize) -> Vec<Ranking> {
    fn rec(n: usize, k: usize, current: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Ranking>) {
        if current.len() == k {
            out.push(Ranking::new(current.clone()));
            return;
        }
        for i in 0..n {
            if !used[i] {
                used[i] = true;
                current.push(i);
                rec(n, k, current, used, out);
                current.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(n, k, &mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

#[test]
fn exact_probabilities_normalize_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for trial in 0..20 {
        let n = rng.random_range(2..=7usize);
        let k = rng.random_range(1..=3.min(n));
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..=1.0)).collect();
        let uu = utils(&u);
        let pp = probs(&p);
        let total: f64 = all_rankings(n, k)
            .iter()
            .map(|r| plc_prob_exact(r, &uu, &pp).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-8, "trial {trial} (n={n}, k={k}): total {total}");
    }
}

#[test]
fn sampler_reduces_to_pl_when_all_considered() {
    let u = utils(&[0.5, -0.3, 0.8]);
    let p = probs(&[1.0, 1.0, 1.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let trials = 100_000usize;
    let mut counts = std::collections::HashMap::new();
    for _ in 0..trials {
        let r = sample_plc_ranking(&u, &p, 3, &mut rng).unwrap();
        *counts.entry(r).or_insert(0usize) += 1;
    }
    let full = ItemSet::new(vec![0, 1, 2]);
    for r in all_rankings(3, 3) {
        let expect = plc_core::plackett_luce::pl_ranking_prob(&r, &full, &u).unwrap();
        let got = *counts.get(&r).unwrap_or(&0) as f64 / trials as f64;
        let se = (expect * (1.0 - expect) / trials as f64).sqrt();
        assert!((got - expect).abs() <= 3.0 * se, "{r:?}: {got} vs {expect}");
    }
}

#[test]
fn sampler_symmetric_singletons() {
    let u = utils(&[1.0, 1.0, 1.0]);
    let p = probs(&[0.4, 0.4, 0.4]);
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let trials = 100_000usize;
    let mut counts = [0usize; 3];
    for _ in 0..trials {
        let r = sample_plc_ranking(&u, &p, 1, &mut rng).unwrap();
        counts[r.entries()[0]] += 1;
    }
    for (i, c) in counts.iter().enumerate() {
        let freq = *c as f64 / trials as f64;
        assert!((freq - 1.0 / 3.0).abs() < 0.01, "item {i}: {freq}");
    }
}

#[test]
fn sampler_matches_exact_distribution_chi_squared() {
    let u = utils(&[0.6, -0.2, 0.1, 1.0]);
    let p = probs(&[0.7, 0.4, 0.9, 0.5]);
    let k = 2;
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let trials = 100_000usize;
    let mut counts = std::collections::HashMap::new();
    for _ in 0..trials {
        let r = sample_plc_ranking(&u, &p, k, &mut rng).unwrap();
        *counts.entry(r).or_insert(0usize) += 1;
    }
    let rankings = all_rankings(4, k);
    let mut chi2 = 0.0;
    for r in &rankings {
        let expect = plc_prob_exact(r, &u, &p).unwrap() * trials as f64;
        let got = *counts.get(r).unwrap_or(&0) as f64;
        chi2 += (got - expect) * (got - expect) / expect;
    }
    let df = (rankings.len() - 1) as f64;
    // Mean df, variance 2*df; six sigma leaves no flake room.
    assert!(chi2 < df + 6.0 * (2.0 * df).sqrt(), "chi2 {chi2} for df {df}");
}

#[test]
fn top_l_matches_monte_carlo() {
    // Exact top-l values against a million-draw empirical estimate.
    let u = utils(&[1.0, 0.5, 0.0, -0.5, -1.0]);
    let p = probs(&[0.9, 0.7, 0.5, 0.3, 0.2]);
    let k = 2;
    let trials = 1_000_000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut counts = vec![vec![0usize; k]; 5];
    for _ in 0..trials {
        let r = sample_plc_ranking(&u, &p, k, &mut rng).unwrap();
        for (pos, &item) in r.entries().iter().enumerate() {
            for cell in &mut counts[item][pos..] {
                *cell += 1;
            }
        }
    }
    for (item, item_counts) in counts.iter().enumerate() {
        for l in 1..=k {
            let exact = plc_top_l_prob(item, l, &u, &p, k).unwrap();
            let got = item_counts[l - 1] as f64 / trials as f64;
            let se = (exact * (1.0 - exact) / trials as f64).sqrt();
            assert!(
                (got - exact).abs() <= 3.0 * se,
                "item {item}, l={l}: {got} vs {exact} (se {se})"
            );
        }
    }
}

#[test]
fn mc_estimator_additive_guarantee_sample() {
    // Lighter version of the acceptance check: 50 runs, failure rate under
    // the nominal 5% plus generous slack.
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let n = 6;
    let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
    let p: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..=1.0)).collect();
    let uu = utils(&u);
    let pp = probs(&p);
    let r = Ranking::new(vec![2, 4]);
    let exact = plc_prob_exact(&r, &uu, &pp).unwrap();
    let epsilon = 0.02;
    let mut violations = 0;
    for seed in 0..50u64 {
        let cfg = McConfig::new(epsilon, 0.05, seed).unwrap();
        let est = plc_prob_mc(&r, &uu, &pp, &cfg).unwrap();
        if (est - exact).abs() > epsilon {
            violations += 1;
        }
    }
    assert!(violations <= 8, "{violations} of 50 runs violated the additive band");
}

#[test]
fn fit_recovers_generating_utilities() {
    // Moderate-size recovery run; the acceptance suite runs the full one.
    let n = 4;
    let u_true = utils(&[0.0, 0.5, 1.0, 1.5]);
    let c = ItemSet::new((0..n).collect());
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    let mut observations = Vec::with_capacity(20_000);
    for _ in 0..20_000 {
        let r = pl_sample_ranking(&c, &u_true, n, &mut rng).unwrap();
        observations.push(Observation { ranking: r, consideration: Some(c.clone()) });
    }
    let d = RankingDataset::new(n, n, observations).unwrap();
    let fitted = plc_core::plackett_luce::pl_fit(&d, &FitConfig::default()).unwrap();
    let fitted = normalize_utilities(&fitted, NormalizeMode::MeanZero);
    let target = normalize_utilities(&u_true, NormalizeMode::MeanZero);
    for i in 0..n {
        assert!(
            (fitted.get(i) - target.get(i)).abs() < 0.08,
            "item {i}: {} vs {}",
            fitted.get(i),
            target.get(i)
        );
    }
}

#[test]
fn fit_invariant_to_initialization() {
    let n = 4;
    let u_true = utils(&[0.3, -0.2, 0.9, 0.0]);
    let c = ItemSet::new((0..n).collect());
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let mut observations = Vec::with_capacity(2_000);
    for _ in 0..2_000 {
        let r = pl_sample_ranking(&c, &u_true, 3, &mut rng).unwrap();
        observations.push(Observation { ranking: r, consideration: Some(c.clone()) });
    }
    let d = RankingDataset::new(n, 3, observations).unwrap();
    let cfg = FitConfig::default();
    let from_zero = pl_fit_from(&d, &cfg, &utils(&[0.0; 4])).unwrap();
    let from_far = pl_fit_from(&d, &cfg, &utils(&[3.0, -2.0, 1.0, -4.0])).unwrap();
    let a = normalize_utilities(&from_zero, NormalizeMode::MeanZero);
    let b = normalize_utilities(&from_far, NormalizeMode::MeanZero);
    for i in 0..n {
        assert!(
            (a.get(i) - b.get(i)).abs() < 1e-4,
            "item {i}: {} vs {}",
            a.get(i),
            b.get(i)
        );
    }
}

#[test]
fn win_rates_respect_utility_order_in_generative_model() {
    // Co-occurrence wins identify the utility order even with consideration
    // in the way, given symmetric consideration probabilities.
    let u = utils(&[2.0, 1.0, 0.0, -1.0, -2.0]);
    let p = probs(&[0.8; 5]);
    let mut rng = ChaCha8Rng::seed_from_u64(59);
    let mut rankings = Vec::with_capacity(20_000);
    for _ in 0..20_000 {
        rankings.push(sample_plc_ranking(&u, &p, 3, &mut rng).unwrap());
    }
    let d = RankingDataset::from_rankings(5, 3, rankings).unwrap();
    let stats = infer_utility_order(&d);
    for i in 0..5 {
        for j in 0..5 {
            if u.get(i) > u.get(j) {
                if let Some(rate) = stats.win_rate(i, j) {
                    assert!(rate > 0.5, "pair ({i},{j}): win rate {rate}");
                }
            }
        }
    }
}
