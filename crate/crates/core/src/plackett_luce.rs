//! Plackett-Luce probabilities over fixed consideration sets, generative
//! sampling, maximum-likelihood utility fitting, and relative-utility
//! inference from co-occurrence counts.

use rand::Rng;

use crate::error::{Error, Result};
use crate::types::{validate_ranking, ItemSet, Ranking, RankingDataset, Utilities};

/// Configuration for [`pl_fit`].
///
/// Defaults follow the sign-based adaptive optimizer setup used for the
/// rating data: initial step 0.05, L2 strength 1e-6, stopping once the
/// squared gradient magnitude drops below 1e-8.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub learning_rate: f64,
    pub l2_strength: f64,
    pub grad_sq_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            l2_strength: 1e-6,
            grad_sq_tolerance: 1e-8,
            max_iterations: 20_000,
        }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<()> {
        // Negated forms so NaN fails every check.
        let lr_ok = self.learning_rate > 0.0;
        if !lr_ok {
            return Err(Error::InvalidInput("learning_rate must be positive".into()));
        }
        let l2_ok = self.l2_strength >= 0.0;
        if !l2_ok {
            return Err(Error::InvalidInput("l2_strength must be non-negative".into()));
        }
        let tol_ok = self.grad_sq_tolerance > 0.0;
        if !tol_ok {
            return Err(Error::InvalidInput("grad_sq_tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Co-occurrence win counts: `wins[i][j]` is the number of observed rankings
/// containing both `i` and `j` with `i` ranked above `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairwiseWinStats {
    wins: Vec<Vec<u64>>,
}

impl PairwiseWinStats {
    pub fn n(&self) -> usize {
        self.wins.len()
    }

    pub fn wins(&self, i: usize, j: usize) -> u64 {
        self.wins[i][j]
    }

    /// Fraction of co-occurrences won by `i` over `j`, or `None` when the
    /// pair never co-occurs (no information either way).
    pub fn win_rate(&self, i: usize, j: usize) -> Option<f64> {
        let total = self.wins[i][j] + self.wins[j][i];
        if total == 0 {
            None
        } else {
            Some(self.wins[i][j] as f64 / total as f64)
        }
    }
}

/// Log of the PL probability of `r` given consideration items `c_items`,
/// assuming `r` is valid and fully contained in `c_items`.
pub(crate) fn pl_log_prob_unchecked(r: &[usize], c_items: &[usize], u: &[f64]) -> f64 {
    let mut log_prob = 0.0;
    for (stage, &chosen) in r.iter().enumerate() {
        let remaining = c_items.iter().copied().filter(|item| !r[..stage].contains(item));
        let log_denom = crate::types::logsumexp_over(remaining, u);
        log_prob += u[chosen] - log_denom;
    }
    log_prob
}

/// Probability of observing ranking `r` under Plackett-Luce restricted to the
/// consideration set `c`. Returns exactly 0 when a ranked item is outside `c`.
///
/// Accumulation happens in log space, so utilities up to |u| = 700 cannot
/// overflow intermediate products.
pub fn pl_ranking_prob(r: &Ranking, c: &ItemSet, u: &Utilities) -> Result<f64> {
    let n = u.len();
    validate_ranking(r, n)?;
    if let Some(max) = c.max_item() {
        if max >= n {
            return Err(Error::ItemOutOfRange(max));
        }
    }
    if c.len() < r.len() {
        return Err(Error::ConsiderationSetTooSmall);
    }
    if !c.is_superset_of(r.entries()) {
        return Ok(0.0);
    }
    Ok(pl_log_prob_unchecked(r.entries(), c.items(), u.as_slice()).exp())
}

/// Sequential softmax draw of a length-`k` ranking from the items of `c`.
/// Deterministic given the state of `rng`.
pub fn pl_sample_ranking(c: &ItemSet, u: &Utilities, k: usize, rng: &mut impl Rng) -> Result<Ranking> {
    if k == 0 {
        return Err(Error::EmptyRanking);
    }
    if c.len() < k {
        return Err(Error::ConsiderationSetTooSmall);
    }
    if let Some(max) = c.max_item() {
        if max >= u.len() {
            return Err(Error::ItemOutOfRange(max));
        }
    }
    let us = u.as_slice();
    let mut remaining: Vec<usize> = c.items().to_vec();
    let max_u = remaining.iter().map(|&i| us[i]).fold(f64::NEG_INFINITY, f64::max);
    let mut entries = Vec::with_capacity(k);
    for _ in 0..k {
        let weights: Vec<f64> = remaining.iter().map(|&i| (us[i] - max_u).exp()).collect();
        let total: f64 = weights.iter().sum();
        let mut target = rng.random_range(0.0..total);
        let mut pick = remaining.len() - 1;
        for (idx, w) in weights.iter().enumerate() {
            if target < *w {
                pick = idx;
                break;
            }
            target -= w;
        }
        entries.push(remaining.swap_remove(pick));
    }
    Ok(Ranking::new(entries))
}

/// L2-regularized negative log-likelihood and its exact gradient over a
/// dataset in which every observation carries a consideration set.
///
/// Accumulation is sequential over observations, so results are bit-stable
/// for a given dataset ordering.
pub fn pl_nll_gradient(dataset: &RankingDataset, u: &Utilities, l2: f64) -> Result<(f64, Vec<f64>)> {
    let n = u.len();
    if dataset.n() != n {
        return Err(Error::InvalidInput(format!(
            "dataset over {} items but utilities cover {n}",
            dataset.n()
        )));
    }
    let us = u.as_slice();
    // Kahan-compensated objective accumulation: the fit's step-acceptance
    // check compares objective values whose true difference can sit near
    // the accumulator's ulp on large datasets.
    let mut nll = 0.0;
    let mut nll_comp = 0.0;
    let add = |acc: &mut f64, comp: &mut f64, term: f64| {
        let y = term - *comp;
        let t = *acc + y;
        *comp = (t - *acc) - y;
        *acc = t;
    };
    let mut grad = vec![0.0; n];
    let mut remaining: Vec<usize> = Vec::new();
    for (idx, obs) in dataset.observations().iter().enumerate() {
        let set = obs.consideration.as_ref().ok_or(Error::MissingConsiderationSet(idx))?;
        let r = obs.ranking.entries();
        remaining.clear();
        remaining.extend_from_slice(set.items());
        for &chosen in r {
            debug_assert!(remaining.contains(&chosen));
            let max_u = remaining.iter().map(|&i| us[i]).fold(f64::NEG_INFINITY, f64::max);
            let total: f64 = remaining.iter().map(|&i| (us[i] - max_u).exp()).sum();
            add(&mut nll, &mut nll_comp, (max_u + total.ln()) - us[chosen]);
            for &item in &remaining {
                let softmax = (us[item] - max_u).exp() / total;
                grad[item] += softmax;
            }
            grad[chosen] -= 1.0;
            let pos = remaining.iter().position(|&i| i == chosen).expect("chosen in remaining");
            remaining.swap_remove(pos);
        }
    }
    for i in 0..n {
        add(&mut nll, &mut nll_comp, l2 * us[i] * us[i]);
        grad[i] += 2.0 * l2 * us[i];
    }
    Ok((nll, grad))
}

/// Fits utilities by maximum likelihood with a sign-based adaptive step
/// (Rprop-style per-coordinate step sizes with a global backtracking check so
/// the objective never increases across accepted steps).
///
/// Starts from all-zero utilities; the objective is convex, so the start
/// point only affects the path, not the result.
pub fn pl_fit(dataset: &RankingDataset, cfg: &FitConfig) -> Result<Utilities> {
    pl_fit_traced(dataset, cfg).map(|(u, _)| u)
}

/// Like [`pl_fit`] but starting from explicit initial utilities. The
/// objective is convex, so any start point reaches the same optimum; this
/// entry exists to make that property testable.
pub fn pl_fit_from(dataset: &RankingDataset, cfg: &FitConfig, init: &Utilities) -> Result<Utilities> {
    if init.len() != dataset.n() {
        return Err(Error::InvalidInput(format!(
            "initial utilities cover {} items but dataset covers {}",
            init.len(),
            dataset.n()
        )));
    }
    fit_impl(dataset, cfg, init.as_slice().to_vec()).map(|(u, _)| u)
}

/// Like [`pl_fit`] but also returns the objective value after every accepted
/// step, which is useful for checking monotone progress.
pub fn pl_fit_traced(dataset: &RankingDataset, cfg: &FitConfig) -> Result<(Utilities, Vec<f64>)> {
    let init = vec![0.0; dataset.n()];
    fit_impl(dataset, cfg, init)
}

fn fit_impl(
    dataset: &RankingDataset,
    cfg: &FitConfig,
    init: Vec<f64>,
) -> Result<(Utilities, Vec<f64>)> {
    cfg.validate()?;
    let n = dataset.n();
    let mut considered = vec![false; n];
    for (idx, obs) in dataset.observations().iter().enumerate() {
        let set = obs.consideration.as_ref().ok_or(Error::MissingConsiderationSet(idx))?;
        for &i in set.items() {
            considered[i] = true;
        }
    }
    if let Some(i) = considered.iter().position(|&c| !c) {
        return Err(Error::ItemNeverConsidered(i));
    }

    const STEP_GROW: f64 = 1.2;
    const STEP_SHRINK: f64 = 0.5;
    const STEP_MIN: f64 = 1e-12;
    const STEP_MAX: f64 = 50.0;

    let mut u = init;
    let mut steps = vec![cfg.learning_rate; n];
    let mut prev_grad = vec![0.0; n];
    let (mut nll, mut grad) = eval(dataset, &u, cfg.l2_strength);
    let mut best_u = u.clone();
    let mut best_nll = nll;
    let mut trace = vec![nll];

    for iter in 0..cfg.max_iterations {
        let grad_sq: f64 = grad.iter().map(|g| g * g).sum();
        if grad_sq <= cfg.grad_sq_tolerance {
            return Ok((Utilities::new(u).expect("finite iterate"), trace));
        }
        // Candidate signed step per coordinate.
        let candidate: Vec<f64> = (0..n)
            .map(|i| {
                if grad[i] > 0.0 {
                    u[i] - steps[i]
                } else if grad[i] < 0.0 {
                    u[i] + steps[i]
                } else {
                    u[i]
                }
            })
            .collect();
        let (cand_nll, cand_grad) = eval(dataset, &candidate, cfg.l2_strength);
        // Accept steps that do not increase the objective beyond its
        // evaluation precision; near the optimum the true decrease sits
        // below the ulp of the accumulated objective.
        let slack = 16.0 * f64::EPSILON * nll.abs() + 1e-12;
        if cand_nll <= nll + slack {
            // Accepted: adapt step sizes from gradient sign agreement.
            for i in 0..n {
                let s = grad[i] * prev_grad[i];
                if s > 0.0 {
                    steps[i] = (steps[i] * STEP_GROW).min(STEP_MAX);
                } else if s < 0.0 {
                    steps[i] = (steps[i] * STEP_SHRINK).max(STEP_MIN);
                }
            }
            prev_grad.copy_from_slice(&grad);
            u = candidate;
            nll = cand_nll;
            grad = cand_grad;
            trace.push(nll);
            if nll < best_nll {
                best_nll = nll;
                best_u = u.clone();
            }
        } else {
            // Rejected: the signed step is a descent direction, so shrinking
            // far enough must eventually make progress.
            for step in &mut steps {
                *step = (*step * STEP_SHRINK).max(STEP_MIN);
            }
        }
        let _ = iter;
    }
    Err(Error::MaxIterationsExceeded {
        iterations: cfg.max_iterations,
        best: Utilities::new(best_u).expect("finite iterate"),
    })
}

fn eval(dataset: &RankingDataset, u: &[f64], l2: f64) -> (f64, Vec<f64>) {
    let util = Utilities::new(u.to_vec()).expect("finite iterate");
    pl_nll_gradient(dataset, &util, l2).expect("dataset pre-validated")
}

/// Counts, for every ordered pair, how often `i` is ranked above `j` among
/// rankings containing both. Consumers may conclude `u_i > u_j` where the win
/// rate exceeds 1/2; the significance threshold is the caller's policy.
pub fn infer_utility_order(dataset: &RankingDataset) -> PairwiseWinStats {
    let n = dataset.n();
    let mut wins = vec![vec![0u64; n]; n];
    for r in dataset.rankings() {
        let e = r.entries();
        for a in 0..e.len() {
            for b in (a + 1)..e.len() {
                wins[e[a]][e[b]] += 1;
            }
        }
    }
    PairwiseWinStats { wins }
}
