//! On-disk column formats: utilities (`item,utility`), consideration
//! probabilities (`item,prob`), and long-format top-l statistics
//! (`item,l,prob`). All numeric output is fixed at 6 decimals; `#` lines are
//! comments, with the stats source recorded as `# source=... samples=...`.

use std::io::Write;
use std::path::Path;

use plc_core::{ConsiderationProbs, StatsSource, TopLStats, Universe, Utilities};

use crate::error::{CliError, CliResult};

pub fn write_utilities(
    path: &Path,
    universe: &Universe,
    utilities: &Utilities,
    shift: Option<f64>,
) -> CliResult<()> {
    let mut out = String::new();
    if let Some(shift) = shift {
        out.push_str(&format!("# shift={shift:.6}\n"));
    }
    out.push_str("item,utility\n");
    for i in 0..universe.n() {
        out.push_str(&format!("{},{:.6}\n", universe.label(i), utilities.get(i)));
    }
    write_atomic(path, &out)
}

pub fn read_utilities(path: &Path) -> CliResult<(Vec<String>, Utilities)> {
    let (labels, values) = read_two_column(path, "utility")?;
    let utilities = Utilities::new(values).map_err(|e| CliError::Validation(e.to_string()))?;
    Ok((labels, utilities))
}

pub fn write_probs(path: &Path, universe: &Universe, probs: &ConsiderationProbs) -> CliResult<()> {
    let mut out = String::from("item,prob\n");
    for i in 0..universe.n() {
        out.push_str(&format!("{},{:.6}\n", universe.label(i), probs.get(i)));
    }
    write_atomic(path, &out)
}

pub fn read_probs(path: &Path) -> CliResult<(Vec<String>, ConsiderationProbs)> {
    let (labels, values) = read_two_column(path, "prob")?;
    let probs = ConsiderationProbs::new(values).map_err(|e| CliError::Validation(e.to_string()))?;
    Ok((labels, probs))
}

fn read_two_column(path: &Path, value_name: &str) -> CliResult<(Vec<String>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)?;
    let mut labels = Vec::new();
    let mut values = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split(',');
        let label = parts.next().unwrap_or("").trim().to_string();
        let value_text = parts.next().unwrap_or("").trim();
        if parts.next().is_some() {
            return Err(CliError::Validation(format!(
                "{}: line {}: expected 2 columns",
                path.display(),
                idx + 1
            )));
        }
        match value_text.parse::<f64>() {
            Ok(v) => {
                if label.is_empty() {
                    return Err(CliError::Validation(format!(
                        "{}: line {}: empty item label",
                        path.display(),
                        idx + 1
                    )));
                }
                if !seen.insert(label.clone()) {
                    return Err(CliError::Validation(format!(
                        "{}: line {}: duplicate item '{label}'",
                        path.display(),
                        idx + 1
                    )));
                }
                labels.push(label);
                values.push(v);
            }
            // Tolerate a header row.
            Err(_) if labels.is_empty() && value_text.eq_ignore_ascii_case(value_name) => continue,
            Err(_) => {
                return Err(CliError::Validation(format!(
                    "{}: line {}: '{value_text}' is not a number",
                    path.display(),
                    idx + 1
                )))
            }
        }
    }
    if labels.is_empty() {
        return Err(CliError::Validation(format!("{}: no data rows", path.display())));
    }
    Ok((labels, values))
}

pub fn write_stats(path: &Path, universe: &Universe, stats: &TopLStats) -> CliResult<()> {
    let mut out = String::new();
    match stats.source() {
        StatsSource::Exact => out.push_str("# source=exact\n"),
        StatsSource::Empirical { samples } => {
            out.push_str(&format!("# source=empirical samples={samples}\n"))
        }
    }
    out.push_str("item,l,prob\n");
    for i in 0..stats.n() {
        for l in 1..=stats.k() {
            out.push_str(&format!("{},{l},{:.6}\n", universe.label(i), stats.prob_top(i, l)));
        }
    }
    write_atomic(path, &out)
}

/// A stats file before alignment with a universe: labels in file order,
/// one full row of cutoffs per label.
#[derive(Debug, Clone, PartialEq)]
pub struct RawStats {
    pub labels: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub source: StatsSource,
}

impl RawStats {
    pub fn k(&self) -> usize {
        self.rows.first().map_or(0, |r| r.len())
    }

    /// Re-indexes the rows onto `labels` (the model universe). Items absent
    /// from the stats file get all-zero rows (never observed); items in the
    /// stats file but not in the universe are an error.
    pub fn align_to(&self, labels: &[String]) -> CliResult<TopLStats> {
        let k = self.k();
        let position: std::collections::HashMap<&str, usize> =
            labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        for label in &self.labels {
            if !position.contains_key(label.as_str()) {
                return Err(CliError::Validation(format!(
                    "stats file item '{label}' is missing from the utilities file"
                )));
            }
        }
        let mut rows = vec![vec![0.0; k]; labels.len()];
        for (label, row) in self.labels.iter().zip(&self.rows) {
            rows[position[label.as_str()]] = row.clone();
        }
        TopLStats::new(rows, self.source).map_err(|e| CliError::Validation(e.to_string()))
    }
}

pub fn read_stats(path: &Path) -> CliResult<RawStats> {
    let text = std::fs::read_to_string(path)?;
    let mut source: Option<StatsSource> = None;
    let mut entries: Vec<(String, usize, f64)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(tag) = rest.strip_prefix("source=") {
                source = Some(parse_source_tag(tag).map_err(|m| {
                    CliError::Validation(format!("{}: line {}: {m}", path.display(), idx + 1))
                })?);
            }
            continue;
        }
        if line.eq_ignore_ascii_case("item,l,prob") {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(CliError::Validation(format!(
                "{}: line {}: expected 3 columns",
                path.display(),
                idx + 1
            )));
        }
        let l: usize = parts[1].parse().map_err(|_| {
            CliError::Validation(format!(
                "{}: line {}: cutoff '{}' is not an integer",
                path.display(),
                idx + 1,
                parts[1]
            ))
        })?;
        let prob: f64 = parts[2].parse().map_err(|_| {
            CliError::Validation(format!(
                "{}: line {}: probability '{}' is not a number",
                path.display(),
                idx + 1,
                parts[2]
            ))
        })?;
        entries.push((parts[0].to_string(), l, prob));
    }
    if entries.is_empty() {
        return Err(CliError::Validation(format!("{}: no data rows", path.display())));
    }
    let k = entries.iter().map(|(_, l, _)| *l).max().expect("non-empty");
    if k == 0 {
        return Err(CliError::Validation(format!("{}: cutoffs must start at 1", path.display())));
    }
    let mut labels: Vec<String> = Vec::new();
    let mut index = std::collections::HashMap::new();
    let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
    for (label, l, prob) in entries {
        let i = *index.entry(label.clone()).or_insert_with(|| {
            labels.push(label.clone());
            rows.push(vec![None; k]);
            labels.len() - 1
        });
        if l == 0 || l > k {
            return Err(CliError::Validation(format!("cutoff {l} out of range for '{label}'")));
        }
        if rows[i][l - 1].replace(prob).is_some() {
            return Err(CliError::Validation(format!(
                "duplicate stats entry for item '{label}' at cutoff {l}"
            )));
        }
    }
    let rows: Vec<Vec<f64>> = labels
        .iter()
        .zip(rows)
        .map(|(label, row)| {
            row.into_iter()
                .enumerate()
                .map(|(l, v)| {
                    v.ok_or_else(|| {
                        CliError::Validation(format!(
                            "item '{label}' is missing a stats entry at cutoff {}",
                            l + 1
                        ))
                    })
                })
                .collect::<CliResult<Vec<f64>>>()
        })
        .collect::<CliResult<Vec<Vec<f64>>>>()?;
    let source = source.unwrap_or(StatsSource::Empirical { samples: 0 });
    Ok(RawStats { labels, rows, source })
}

fn parse_source_tag(tag: &str) -> Result<StatsSource, String> {
    let mut parts = tag.split_whitespace();
    match parts.next() {
        Some("exact") => Ok(StatsSource::Exact),
        Some("empirical") => {
            let samples = parts
                .next()
                .and_then(|p| p.strip_prefix("samples="))
                .map(|s| s.parse::<usize>())
                .transpose()
                .map_err(|_| "invalid samples count".to_string())?
                .unwrap_or(0);
            Ok(StatsSource::Empirical { samples })
        }
        other => Err(format!("unknown stats source {other:?}")),
    }
}

pub(crate) fn write_atomic(path: &Path, content: &str) -> CliResult<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(content.as_bytes())?;
    Ok(())
}
