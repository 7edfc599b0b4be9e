//! Domain types shared by every other module.
//!
//! Items are dense 0-based indices everywhere in this crate; string labels
//! exist only at the I/O boundary. All types here are immutable value objects
//! and safe to share across threads.

use crate::error::{Error, Result};

/// The item universe: `n` items identified by indices `0..n`, optionally
/// carrying one distinct non-empty string label per item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Universe {
    n: usize,
    labels: Option<Vec<String>>,
}

impl Universe {
    pub fn unlabeled(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("universe must contain at least one item".into()));
        }
        Ok(Self { n, labels: None })
    }

    /// Builds a universe from labels; labels must be distinct and non-empty.
    pub fn labeled(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidInput("universe must contain at least one item".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for label in &labels {
            if label.is_empty() {
                return Err(Error::InvalidInput("empty item label".into()));
            }
            if !seen.insert(label.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate item label '{label}'")));
            }
        }
        Ok(Self { n: labels.len(), labels: Some(labels) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Label for item `i`, or a synthesized `item{i}` when unlabeled.
    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(labels) => labels[i].clone(),
            None => format!("item{i}"),
        }
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.as_ref()?.iter().position(|l| l == label)
    }
}

/// Per-item log-strengths. Entries must be finite; the vector is stored
/// unnormalized and shifting is an explicit step (see [`normalize_utilities`]).
#[derive(Debug, Clone, PartialEq)]
pub struct Utilities(Vec<f64>);

impl Utilities {
    pub fn new(u: Vec<f64>) -> Result<Self> {
        if u.is_empty() {
            return Err(Error::InvalidInput("utilities must be non-empty".into()));
        }
        if let Some(i) = u.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("utility {i} is not finite")));
        }
        Ok(Self(u))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }
}

/// Per-item consideration probabilities, each strictly positive and at most 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsiderationProbs(Vec<f64>);

impl ConsiderationProbs {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidInput("consideration probabilities must be non-empty".into()));
        }
        if let Some(i) = p.iter().position(|x| !(*x > 0.0 && *x <= 1.0)) {
            return Err(Error::InvalidInput(format!(
                "consideration probability {i} must lie in (0, 1], got {}",
                p[i]
            )));
        }
        Ok(Self(p))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// An ordered list of distinct item indices; position 0 is the top rank.
///
/// Construction is unchecked so that [`validate_ranking`] can report the
/// precise defect; operations that need a valid ranking validate first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ranking(Vec<usize>);

impl Ranking {
    pub fn new(entries: Vec<usize>) -> Self {
        Self(entries)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, item: usize) -> bool {
        self.0.contains(&item)
    }

    /// Position of `item` (0 = top), if ranked.
    pub fn position_of(&self, item: usize) -> Option<usize> {
        self.0.iter().position(|&x| x == item)
    }
}

/// Checks that a ranking is non-empty, duplicate-free, and within `0..n`.
pub fn validate_ranking(r: &Ranking, n: usize) -> Result<()> {
    if r.is_empty() {
        return Err(Error::EmptyRanking);
    }
    let mut seen = vec![false; n];
    for &item in r.entries() {
        if item >= n {
            return Err(Error::ItemOutOfRange(item));
        }
        if seen[item] {
            return Err(Error::DuplicateItem(item));
        }
        seen[item] = true;
    }
    Ok(())
}

/// A subset of the universe, stored as sorted distinct indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ItemSet(Vec<usize>);

impl ItemSet {
    pub fn new(mut items: Vec<usize>) -> Self {
        items.sort_unstable();
        items.dedup();
        Self(items)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn items(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, item: usize) -> bool {
        self.0.binary_search(&item).is_ok()
    }

    pub fn is_superset_of(&self, other: &[usize]) -> bool {
        other.iter().all(|&i| self.contains(i))
    }

    pub fn max_item(&self) -> Option<usize> {
        self.0.last().copied()
    }
}

impl FromIterator<usize> for ItemSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

/// One observed ranking, optionally with the consideration set it was drawn
/// from (known for fixed-slate data, absent for free-recall data).
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub ranking: Ranking,
    pub consideration: Option<ItemSet>,
}

/// A collection of equal-length rankings over a common universe.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingDataset {
    n: usize,
    k: usize,
    observations: Vec<Observation>,
}

impl RankingDataset {
    /// Validates uniform length `k`, ranking well-formedness, and that any
    /// attached consideration set covers its ranking.
    pub fn new(n: usize, k: usize, observations: Vec<Observation>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("universe must contain at least one item".into()));
        }
        if k == 0 || k > n {
            return Err(Error::InvalidInput(format!("ranking length {k} must lie in 1..={n}")));
        }
        for (idx, obs) in observations.iter().enumerate() {
            if obs.ranking.len() != k {
                return Err(Error::InvalidInput(format!(
                    "ranking {idx} has length {}, expected {k}",
                    obs.ranking.len()
                )));
            }
            validate_ranking(&obs.ranking, n)?;
            if let Some(set) = &obs.consideration {
                if let Some(max) = set.max_item() {
                    if max >= n {
                        return Err(Error::ItemOutOfRange(max));
                    }
                }
                if set.len() < k || !set.is_superset_of(obs.ranking.entries()) {
                    return Err(Error::InvalidInput(format!(
                        "consideration set of ranking {idx} does not cover the ranking"
                    )));
                }
            }
        }
        Ok(Self { n, k, observations })
    }

    pub fn from_rankings(n: usize, k: usize, rankings: Vec<Ranking>) -> Result<Self> {
        let observations = rankings
            .into_iter()
            .map(|ranking| Observation { ranking, consideration: None })
            .collect();
        Self::new(n, k, observations)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn rankings(&self) -> impl Iterator<Item = &Ranking> {
        self.observations.iter().map(|o| &o.ranking)
    }
}

/// How a [`TopLStats`] table was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatsSource {
    /// Computed by exact enumeration of the model.
    Exact,
    /// Estimated from `samples` observed rankings.
    Empirical { samples: usize },
}

/// Per-item probabilities of appearing within the top `l` positions, for
/// every cutoff `l` in `1..=k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TopLStats {
    pr_top: Vec<Vec<f64>>,
    k: usize,
    source: StatsSource,
}

impl TopLStats {
    /// `pr_top[i][l-1]` is the probability item `i` appears in the top `l`.
    ///
    /// Rows must be monotone in `l` and lie in [0, 1]. For exact stats the
    /// column sums must equal `l` (each ranking contributes exactly `l`
    /// items to its top `l`); empirical tables skip the column check since
    /// file round-trips may have rounded entries.
    pub fn new(pr_top: Vec<Vec<f64>>, source: StatsSource) -> Result<Self> {
        if pr_top.is_empty() {
            return Err(Error::InvalidInput("stats table must cover at least one item".into()));
        }
        let k = pr_top[0].len();
        if k == 0 {
            return Err(Error::InvalidInput("stats table must cover at least one cutoff".into()));
        }
        for (i, row) in pr_top.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidInput(format!("stats row {i} has ragged length")));
            }
            for (l, &v) in row.iter().enumerate() {
                if !(0.0..=1.0 + 1e-9).contains(&v) {
                    return Err(Error::InvalidInput(format!(
                        "stats entry for item {i}, cutoff {} out of [0,1]: {v}",
                        l + 1
                    )));
                }
                if l > 0 && row[l] < row[l - 1] - 1e-9 {
                    return Err(Error::InvalidInput(format!(
                        "stats row {i} is not monotone at cutoff {}",
                        l + 1
                    )));
                }
            }
        }
        if source == StatsSource::Exact {
            for l in 0..k {
                let col: f64 = pr_top.iter().map(|row| row[l]).sum();
                if (col - (l + 1) as f64).abs() > 1e-9 {
                    return Err(Error::InvalidInput(format!(
                        "exact stats column {} sums to {col}, expected {}",
                        l + 1,
                        l + 1
                    )));
                }
            }
        }
        Ok(Self { pr_top, k, source })
    }

    pub fn n(&self) -> usize {
        self.pr_top.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn source(&self) -> StatsSource {
        self.source
    }

    pub fn samples(&self) -> Option<usize> {
        match self.source {
            StatsSource::Exact => None,
            StatsSource::Empirical { samples } => Some(samples),
        }
    }

    /// Pr(item `i` in the top `l`); `l` is 1-based and must be in `1..=k`.
    pub fn prob_top(&self, i: usize, l: usize) -> f64 {
        assert!(l >= 1 && l <= self.k, "cutoff {l} out of 1..={}", self.k);
        self.pr_top[i][l - 1]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.pr_top
    }
}

/// Normalization mode for [`normalize_utilities`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizeMode {
    MeanZero,
    MinZero,
}

/// Shifts utilities by a constant so the mean (or minimum) is zero.
/// Ranking probabilities are invariant to this shift.
pub fn normalize_utilities(u: &Utilities, mode: NormalizeMode) -> Utilities {
    let s = u.as_slice();
    let shift = match mode {
        NormalizeMode::MeanZero => s.iter().sum::<f64>() / s.len() as f64,
        NormalizeMode::MinZero => s.iter().cloned().fold(f64::INFINITY, f64::min),
    };
    Utilities::new(s.iter().map(|x| x - shift).collect()).expect("shift preserves finiteness")
}

/// Numerically stable log(sum(exp(x))) over the utilities of `items`.
pub(crate) fn logsumexp_over(items: impl Iterator<Item = usize> + Clone, u: &[f64]) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for i in items.clone() {
        max = max.max(u[i]);
    }
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = items.map(|i| (u[i] - max).exp()).sum();
    max + sum.ln()
}
