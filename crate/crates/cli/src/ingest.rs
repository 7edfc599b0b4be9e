//! Ingestion of ranking and rating files into the in-memory model types.
//!
//! Rankings file: one comma-separated ranking per line, first label = top.
//! An optional section introduced by a `#considered` sentinel line attaches
//! one `|`-separated consideration set per ranking, in the same row order.
//! Other `#`-prefixed lines are comments.
//!
//! Ratings file: CSV rows `respondent,item,score` (header optional).

use std::collections::HashMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use plc_core::{ItemSet, Observation, Ranking, RankingDataset, StatsSource, TopLStats, Universe};

use crate::error::{CliError, CliResult, IngestError};

/// A rankings file decoded against its own interned universe.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRankings {
    pub universe: Universe,
    pub dataset: RankingDataset,
}

struct Interner {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl Interner {
    fn new() -> Self {
        Self { labels: Vec::new(), index: HashMap::new() }
    }

    fn intern(&mut self, label: &str) -> usize {
        if let Some(&i) = self.index.get(label) {
            return i;
        }
        let i = self.labels.len();
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), i);
        i
    }
}

pub fn parse_rankings_csv(path: &Path) -> CliResult<ParsedRankings> {
    let text = std::fs::read_to_string(path)?;
    parse_rankings_str(&text).map_err(CliError::from)
}

pub fn parse_rankings_str(text: &str) -> Result<ParsedRankings, IngestError> {
    let mut interner = Interner::new();
    let mut rankings: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut considered: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut in_considered = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "#considered" {
            in_considered = true;
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        if !in_considered {
            if line.contains('|') {
                return Err(IngestError::UnknownSeparator { line: line_no });
            }
            let items = split_labels(line, ',', line_no, &mut interner)?;
            rankings.push((line_no, items));
        } else {
            if line.contains(',') {
                return Err(IngestError::UnknownSeparator { line: line_no });
            }
            let items = split_labels(line, '|', line_no, &mut interner)?;
            considered.push((line_no, items));
        }
    }

    if rankings.is_empty() {
        return Err(IngestError::EmptyDataset);
    }
    let k = rankings[0].1.len();
    for (line, items) in &rankings {
        if items.len() != k {
            return Err(IngestError::NonUniformK { line: *line, expected: k, got: items.len() });
        }
    }
    if !considered.is_empty() && considered.len() != rankings.len() {
        return Err(IngestError::ConsiderationRowMismatch {
            expected: rankings.len(),
            got: considered.len(),
        });
    }

    let n = interner.labels.len();
    let mut observations = Vec::with_capacity(rankings.len());
    for (row, (line, entries)) in rankings.into_iter().enumerate() {
        let consideration = if considered.is_empty() {
            None
        } else {
            let (set_line, set_items) = &considered[row];
            let set = ItemSet::new(set_items.clone());
            if set.len() < k || !set.is_superset_of(&entries) {
                return Err(IngestError::ConsiderationNotSuperset { line: *set_line });
            }
            Some(set)
        };
        let _ = line;
        observations.push(Observation { ranking: Ranking::new(entries), consideration });
    }

    let universe = Universe::labeled(interner.labels)
        .map_err(|e| IngestError::Malformed { line: 0, message: e.to_string() })?;
    let dataset = RankingDataset::new(n, k, observations)
        .map_err(|e| IngestError::Malformed { line: 0, message: e.to_string() })?;
    Ok(ParsedRankings { universe, dataset })
}

fn split_labels(
    line: &str,
    sep: char,
    line_no: usize,
    interner: &mut Interner,
) -> Result<Vec<usize>, IngestError> {
    let mut items = Vec::new();
    for label in line.split(sep) {
        let label = label.trim();
        if label.is_empty() {
            return Err(IngestError::Malformed { line: line_no, message: "empty item label".into() });
        }
        let idx = interner.intern(label);
        if items.contains(&idx) {
            return Err(IngestError::DuplicateItem { line: line_no, label: label.to_string() });
        }
        items.push(idx);
    }
    Ok(items)
}

/// One numeric rating given by one respondent to one item.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingRow {
    pub respondent: String,
    pub item: String,
    pub score: f64,
}

/// All ratings, validated so that a respondent rates an item at most once.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingsTable {
    rows: Vec<RatingRow>,
}

impl RatingsTable {
    pub fn new(rows: Vec<RatingRow>) -> Result<Self, IngestError> {
        let mut seen = std::collections::HashSet::new();
        for row in &rows {
            if !seen.insert((row.respondent.clone(), row.item.clone())) {
                return Err(IngestError::DuplicateRating {
                    respondent: row.respondent.clone(),
                    item: row.item.clone(),
                });
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[RatingRow] {
        &self.rows
    }

    pub fn from_csv_path(path: &Path) -> CliResult<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(false)
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| CliError::Io(e.to_string()))?;
        let mut rows = Vec::new();
        for (idx, record) in reader.records().enumerate() {
            let record = record.map_err(|e| CliError::Io(e.to_string()))?;
            if record.len() != 3 {
                return Err(IngestError::Malformed {
                    line: idx + 1,
                    message: format!("expected 3 columns, found {}", record.len()),
                }
                .into());
            }
            let score_text = record[2].trim();
            // A non-numeric score in the first row is a header.
            match score_text.parse::<f64>() {
                Ok(score) => rows.push(RatingRow {
                    respondent: record[0].trim().to_string(),
                    item: record[1].trim().to_string(),
                    score,
                }),
                Err(_) if idx == 0 => continue,
                Err(_) => {
                    return Err(IngestError::Malformed {
                        line: idx + 1,
                        message: format!("score '{score_text}' is not a number"),
                    }
                    .into())
                }
            }
        }
        Ok(Self::new(rows)?)
    }
}

/// How equal scores are ordered when ratings become rankings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TiePolicy {
    /// Tied items keep their order of appearance in the ratings file.
    Stable,
    /// Tied items are ordered by a seeded shuffle.
    Random { seed: u64 },
}

impl TiePolicy {
    /// Parses `stable` or `random:<seed>`.
    pub fn parse(text: &str) -> Result<Self, String> {
        if text == "stable" {
            return Ok(TiePolicy::Stable);
        }
        if let Some(seed_text) = text.strip_prefix("random:") {
            return seed_text
                .parse::<u64>()
                .map(|seed| TiePolicy::Random { seed })
                .map_err(|_| format!("invalid tie-policy seed '{seed_text}'"));
        }
        Err(format!("unknown tie policy '{text}'; expected 'stable' or 'random:<seed>'"))
    }
}

/// Ratings converted to rankings, with each respondent's full rated set
/// attached as the consideration set.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingsConversion {
    pub universe: Universe,
    pub dataset: RankingDataset,
    /// Respondents whose rankings depended on the tie policy.
    pub respondents_with_ties: Vec<String>,
}

/// Sorts each respondent's rated items by descending score into a ranking,
/// optionally truncated to length `k`; the consideration set is always the
/// full rated set.
pub fn ratings_to_rankings(
    table: &RatingsTable,
    k: Option<usize>,
    policy: TiePolicy,
) -> Result<RatingsConversion, IngestError> {
    // Group rows by respondent, preserving order of first appearance.
    let mut respondent_order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<&RatingRow>> = HashMap::new();
    for row in table.rows() {
        groups.entry(row.respondent.clone()).or_insert_with(|| {
            respondent_order.push(row.respondent.clone());
            Vec::new()
        });
        groups.get_mut(&row.respondent).expect("just inserted").push(row);
    }
    if respondent_order.is_empty() {
        return Err(IngestError::EmptyDataset);
    }

    let mut interner = Interner::new();
    let mut rng = match policy {
        TiePolicy::Stable => None,
        TiePolicy::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
    };
    let mut observations = Vec::new();
    let mut ties = Vec::new();
    let mut uniform_len: Option<usize> = None;

    for respondent in &respondent_order {
        let rows = &groups[respondent];
        if rows.len() < 2 {
            return Err(IngestError::TooFewRatings { respondent: respondent.clone() });
        }
        let ranking_len = match k {
            Some(k) => {
                if rows.len() < k {
                    return Err(IngestError::TooFewRatings { respondent: respondent.clone() });
                }
                k
            }
            None => match uniform_len {
                Some(len) if len != rows.len() => {
                    return Err(IngestError::MixedRatingCounts { respondent: respondent.clone() })
                }
                _ => {
                    uniform_len = Some(rows.len());
                    rows.len()
                }
            },
        };

        // Stable sort on descending score keeps appearance order for ties;
        // the random policy replaces appearance order with a seeded shuffle.
        let mut keyed: Vec<(usize, &RatingRow, u64)> = rows
            .iter()
            .enumerate()
            .map(|(pos, row)| {
                let key = rng.as_mut().map(|r| r.random::<u64>()).unwrap_or(pos as u64);
                (pos, *row, key)
            })
            .collect();
        keyed.sort_by(|a, b| {
            b.1.score
                .partial_cmp(&a.1.score)
                .expect("scores validated finite")
                .then(a.2.cmp(&b.2))
        });
        let has_tie = keyed.windows(2).any(|w| w[0].1.score == w[1].1.score);
        if has_tie {
            ties.push(respondent.clone());
        }

        let full_set: Vec<usize> = keyed.iter().map(|(_, row, _)| interner.intern(&row.item)).collect();
        let entries: Vec<usize> = full_set.iter().take(ranking_len).copied().collect();
        observations.push(Observation {
            ranking: Ranking::new(entries),
            consideration: Some(ItemSet::new(full_set)),
        });
    }

    let n = interner.labels.len();
    let k_final = observations[0].ranking.len();
    let universe = Universe::labeled(interner.labels)
        .map_err(|e| IngestError::Malformed { line: 0, message: e.to_string() })?;
    let dataset = RankingDataset::new(n, k_final, observations)
        .map_err(|e| IngestError::Malformed { line: 0, message: e.to_string() })?;
    Ok(RatingsConversion { universe, dataset, respondents_with_ties: ties })
}

/// Empirical top-l appearance rates: the fraction of rankings in which each
/// item shows up within the first `l` positions.
pub fn empirical_top_l_stats(dataset: &RankingDataset) -> Result<TopLStats, IngestError> {
    if dataset.is_empty() {
        return Err(IngestError::EmptyDataset);
    }
    let n = dataset.n();
    let k = dataset.k();
    let m = dataset.len();
    let mut counts = vec![vec![0usize; k]; n];
    for r in dataset.rankings() {
        for (pos, &item) in r.entries().iter().enumerate() {
            for cell in &mut counts[item][pos..] {
                *cell += 1;
            }
        }
    }
    let rows: Vec<Vec<f64>> = counts
        .into_iter()
        .map(|row| row.into_iter().map(|c| c as f64 / m as f64).collect())
        .collect();
    TopLStats::new(rows, StatsSource::Empirical { samples: m })
        .map_err(|e| IngestError::Malformed { line: 0, message: e.to_string() })
}
