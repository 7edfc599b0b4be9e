//! Bound-report emission (CSV and JSON) and the flip-graph DOT rendering.

use std::path::Path;

use serde::{Deserialize, Serialize};

use plc_core::bounds::{transitive_reduction, BoundsOutcome, FlipDag};
use plc_core::{StatsSource, Universe, Utilities};

use crate::error::{CliError, CliResult};
use crate::files::write_atomic;

/// One report row; values are stored already rounded to the 6-decimal file
/// precision so CSV and JSON agree and JSON round-trips exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub item: String,
    pub lower_initial: f64,
    pub lower: f64,
    pub upper_initial: f64,
    pub upper: f64,
    pub utility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub alpha: f64,
    pub k: usize,
    pub items: usize,
    pub stats_source: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stats_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub conservative_ci: Option<f64>,
}

/// Per-item consideration-probability intervals, initial and tightened,
/// ordered by descending utility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub meta: ReportMeta,
    pub rows: Vec<BoundsRow>,
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

impl BoundsReport {
    pub fn from_outcome(
        outcome: &BoundsOutcome,
        universe: &Universe,
        utilities: &Utilities,
        alpha: f64,
        k: usize,
        stats_source: StatsSource,
        conservative_ci: Option<f64>,
    ) -> Self {
        let n = universe.n();
        let mut rows: Vec<BoundsRow> = (0..n)
            .map(|i| BoundsRow {
                item: universe.label(i),
                lower_initial: round6(outcome.initial.lower()[i]),
                lower: round6(outcome.tightened.lower()[i]),
                upper_initial: round6(outcome.initial.upper()[i]),
                upper: round6(outcome.tightened.upper()[i]),
                utility: round6(utilities.get(i)),
            })
            .collect();
        rows.sort_by(|a, b| {
            b.utility
                .partial_cmp(&a.utility)
                .expect("utilities are finite")
                .then_with(|| a.item.cmp(&b.item))
        });
        let (source, samples) = match stats_source {
            StatsSource::Exact => ("exact".to_string(), None),
            StatsSource::Empirical { samples } => ("empirical".to_string(), Some(samples)),
        };
        BoundsReport {
            meta: ReportMeta {
                alpha,
                k,
                items: n,
                stats_source: source,
                stats_samples: samples,
                conservative_ci,
            },
            rows,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("item,lower_initial,lower,upper_initial,upper,utility\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                row.item, row.lower_initial, row.lower, row.upper_initial, row.upper, row.utility
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Csv,
    Json,
}

pub fn emit_bounds_report(path: &Path, report: &BoundsReport, format: ReportFormat) -> CliResult<()> {
    let content = match format {
        ReportFormat::Csv => report.to_csv(),
        ReportFormat::Json => report.to_json(),
    };
    write_atomic(path, &content)
}

/// Renders the transitive reduction of the flip graph in DOT syntax: one
/// node per item participating in an edge, edges in deterministic label
/// order.
pub fn render_dag_dot(dag: &FlipDag, universe: &Universe) -> CliResult<String> {
    let reduced = transitive_reduction(dag).map_err(|e| CliError::Validation(e.to_string()))?;
    let mut nodes: Vec<String> = reduced
        .participating_items()
        .into_iter()
        .map(|i| universe.label(i))
        .collect();
    nodes.sort();
    let mut edges: Vec<(String, String)> = reduced
        .edges()
        .iter()
        .map(|e| (universe.label(e.from), universe.label(e.to)))
        .collect();
    edges.sort();
    let mut out = String::from("digraph consideration_flips {\n");
    for node in &nodes {
        out.push_str(&format!("  \"{}\";\n", escape_dot(node)));
    }
    for (from, to) in &edges {
        out.push_str(&format!("  \"{}\" -> \"{}\";\n", escape_dot(from), escape_dot(to)));
    }
    out.push_str("}\n");
    Ok(out)
}

pub fn emit_dag_dot(path: &Path, dag: &FlipDag, universe: &Universe) -> CliResult<()> {
    let content = render_dag_dot(dag, universe)?;
    write_atomic(path, &content)
}

fn escape_dot(label: &str) -> String {
    label.replace('\\', "\\\\").replace('"', "\\\"")
}

#[cfg(test)]
mod tests {
    use super::*;
    use plc_core::bounds::{BoundStage, BoundState, FlipDag, FlipEdge};

    fn dag(n: usize, edges: &[(usize, usize)]) -> FlipDag {
        FlipDag::new(
            n,
            edges
                .iter()
                .map(|&(from, to)| FlipEdge { from, to, ratios: vec![] })
                .collect(),
        )
        .unwrap()
    }

    fn sample_report() -> BoundsReport {
        let universe = Universe::labeled(vec!["MA".into()]).unwrap();
        let utilities = Utilities::new(vec![2.5]).unwrap();
        let outcome = BoundsOutcome {
            initial: BoundState::new(vec![0.59], vec![1.0], BoundStage::Initial).unwrap(),
            tightened: BoundState::new(vec![0.59], vec![1.0], BoundStage::Tightened).unwrap(),
            dag: dag(1, &[]),
        };
        BoundsReport::from_outcome(
            &outcome,
            &universe,
            &utilities,
            5.0,
            3,
            StatsSource::Empirical { samples: 2900 },
            None,
        )
    }

    #[test]
    fn csv_row_formatting_contract() {
        let report = sample_report();
        let csv = report.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("item,lower_initial,lower,upper_initial,upper,utility"));
        assert_eq!(lines.next(), Some("MA,0.590000,0.590000,1.000000,1.000000,2.500000"));
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn empty_report_is_header_only() {
        let mut report = sample_report();
        report.rows.clear();
        assert_eq!(report.to_csv(), "item,lower_initial,lower,upper_initial,upper,utility\n");
    }

    #[test]
    fn json_round_trip_identity() {
        let report = sample_report();
        let parsed = BoundsReport::from_json(&report.to_json()).unwrap();
        assert_eq!(parsed, report);
    }

    #[test]
    fn rows_sorted_by_descending_utility() {
        let universe =
            Universe::labeled(vec!["low".into(), "high".into(), "mid".into()]).unwrap();
        let utilities = Utilities::new(vec![0.1, 2.0, 1.0]).unwrap();
        let outcome = BoundsOutcome {
            initial: BoundState::new(vec![0.0; 3], vec![1.0; 3], BoundStage::Initial).unwrap(),
            tightened: BoundState::new(vec![0.0; 3], vec![1.0; 3], BoundStage::Tightened).unwrap(),
            dag: dag(3, &[]),
        };
        let report = BoundsReport::from_outcome(
            &outcome,
            &universe,
            &utilities,
            2.0,
            1,
            StatsSource::Exact,
            None,
        );
        let items: Vec<&str> = report.rows.iter().map(|r| r.item.as_str()).collect();
        assert_eq!(items, vec!["high", "mid", "low"]);
    }

    #[test]
    fn dot_applies_transitive_reduction() {
        let universe =
            Universe::labeled(vec!["MA".into(), "VA".into(), "NY".into()]).unwrap();
        let d = dag(3, &[(0, 1), (1, 2), (0, 2)]);
        let dot = render_dag_dot(&d, &universe).unwrap();
        assert!(dot.contains("\"MA\" -> \"VA\";"));
        assert!(dot.contains("\"VA\" -> \"NY\";"));
        assert!(!dot.contains("\"MA\" -> \"NY\";"));
    }

    #[test]
    fn dot_empty_graph() {
        let universe = Universe::labeled(vec!["a".into()]).unwrap();
        let dot = render_dag_dot(&dag(1, &[]), &universe).unwrap();
        assert_eq!(dot, "digraph consideration_flips {\n}\n");
    }
}
