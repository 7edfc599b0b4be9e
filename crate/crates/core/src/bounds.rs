//! Absolute and relative bounds on consideration probabilities: the
//! Chernoff tail on consideration-set size, initial lower/upper bounds from
//! top-l statistics, the odds-ratio transfer inequalities, the utility-vs-
//! rank-frequency flip graph, and bound propagation in topological order.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::types::{logsumexp_over, StatsSource, TopLStats, Utilities};

/// The exogenous assumption that expected consideration-set size is at least
/// `alpha * k`, with `alpha > 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaAssumption {
    alpha: f64,
    k: usize,
}

impl AlphaAssumption {
    pub fn new(alpha: f64, k: usize) -> Result<Self> {
        // NaN must fail this check too.
        let valid = alpha > 1.0;
        if !valid {
            return Err(Error::AlphaNotGreaterThanOne(alpha));
        }
        if k == 0 {
            return Err(Error::InvalidInput("ranking length k must be at least 1".into()));
        }
        Ok(Self { alpha, k })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

/// Upper bound on the probability that an unconditioned consideration set
/// has size at most `k`: `(alpha * e^(1-alpha))^k`.
pub fn chernoff_discard_bound(a: &AlphaAssumption) -> f64 {
    (a.alpha * (1.0 - a.alpha).exp()).powi(a.k as i32)
}

/// Upper bound on the conditional mass of consideration sets of size exactly
/// `k`: `q / (1 - q)` with `q` the discard bound.
pub fn exactly_k_mass_bound(a: &AlphaAssumption) -> Result<f64> {
    let q = chernoff_discard_bound(a);
    if q >= 1.0 {
        return Err(Error::BoundDegenerate);
    }
    Ok(q / (1.0 - q))
}

/// Initial per-item lower bounds: the top-k appearance rate corrected for
/// discarded too-small consideration sets.
pub fn initial_lower_bounds(stats: &TopLStats, a: &AlphaAssumption) -> Result<Vec<f64>> {
    if a.k > stats.k() {
        return Err(Error::InvalidInput(format!(
            "assumption covers k={} but stats only reach cutoff {}",
            a.k,
            stats.k()
        )));
    }
    let correction = 1.0 - chernoff_discard_bound(a);
    Ok((0..stats.n()).map(|i| stats.prob_top(i, a.k) * correction).collect())
}

/// Initial per-item upper bounds from top-1 rates against the hypothetical
/// where every other item is always considered, clamped into [0, 1].
pub fn initial_upper_bounds(
    stats: &TopLStats,
    u: &Utilities,
    a: &AlphaAssumption,
) -> Result<Vec<f64>> {
    let n = stats.n();
    if u.len() != n {
        return Err(Error::InvalidInput(format!(
            "stats cover {n} items but utilities cover {}",
            u.len()
        )));
    }
    let slack = a.k as f64 * exactly_k_mass_bound(a)?;
    let lse = logsumexp_over(0..n, u.as_slice());
    Ok((0..n)
        .map(|i| {
            let ratio = (lse - u.get(i)).exp();
            (ratio * (stats.prob_top(i, 1) + slack)).min(1.0)
        })
        .collect())
}

/// The flip-strength ratio `c = Pr(top-l of i) / Pr(top-l of j)`, when the
/// bound machinery applies: defined, positive, and at most 1. `None` carries
/// no information and is not an error.
///
/// A zero numerator is also not applicable: the transfer inequalities need
/// `c > 0`, and exact statistics never produce a zero rate for an item with
/// positive consideration probability, so `c = 0` only arises from sampling
/// zeros.
pub fn relative_gap_c(stats: &TopLStats, i: usize, j: usize, l: usize) -> Option<f64> {
    let denom = stats.prob_top(j, l);
    if denom <= 0.0 {
        return None;
    }
    let c = stats.prob_top(i, l) / denom;
    if c > 0.0 && c <= 1.0 {
        Some(c)
    } else {
        None
    }
}

/// Transfers a lower bound across a flip: given `p_i >= b_i` and ratio `c`,
/// `p_j >= b_i / (c - c*b_i + b_i)`. Increasing in `b_i`, decreasing in `c`.
pub fn lb_transfer(b_i: f64, c: f64) -> Result<f64> {
    let denom = c - c * b_i + b_i;
    if denom <= 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    Ok(b_i / denom)
}

/// Transfers an upper bound across a flip: given `p_j <= b_j` and ratio `c`,
/// `p_i <= c*b_j / (1 - b_j + c*b_j)`. Increasing in `b_j` and in `c`.
pub fn ub_transfer(b_j: f64, c: f64) -> Result<f64> {
    let denom = 1.0 - b_j + c * b_j;
    if denom <= 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    Ok(c * b_j / denom)
}

/// A qualifying cutoff for an edge together with its ratio `c <= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioAtCutoff {
    /// 1-based position cutoff.
    pub cutoff: usize,
    pub c: f64,
}

/// An edge `from -> to` recording that `from` has strictly higher utility
/// yet appears in the top `l` strictly less often for some cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipEdge {
    pub from: usize,
    pub to: usize,
    pub ratios: Vec<RatioAtCutoff>,
}

/// Directed acyclic graph of utility-vs-rank-frequency flips. Utilities
/// strictly decrease along every edge, which is what makes it acyclic.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipDag {
    n: usize,
    edges: Vec<FlipEdge>,
}

impl FlipDag {
    /// Validates node indices, `c <= 1` on every stored ratio, and
    /// acyclicity.
    pub fn new(n: usize, edges: Vec<FlipEdge>) -> Result<Self> {
        for e in &edges {
            if e.from >= n || e.to >= n {
                return Err(Error::ItemOutOfRange(e.from.max(e.to)));
            }
            if e.from == e.to {
                return Err(Error::CycleDetected);
            }
            for r in &e.ratios {
                let ratio_ok = r.c <= 1.0 && r.cutoff > 0;
                if !ratio_ok {
                    return Err(Error::InvalidInput(format!(
                        "edge {} -> {} stores invalid ratio {:?}",
                        e.from, e.to, r
                    )));
                }
            }
        }
        let dag = Self { n, edges };
        if dag.try_topological_order(false).is_none() {
            return Err(Error::CycleDetected);
        }
        Ok(dag)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[FlipEdge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.iter().any(|e| e.from == from && e.to == to)
    }

    /// Nodes with at least one incident edge.
    pub fn participating_items(&self) -> Vec<usize> {
        let mut seen = vec![false; self.n];
        for e in &self.edges {
            seen[e.from] = true;
            seen[e.to] = true;
        }
        (0..self.n).filter(|&i| seen[i]).collect()
    }

    fn adjacency(&self, reversed: bool) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            let (a, b) = if reversed { (e.to, e.from) } else { (e.from, e.to) };
            adj[a].push(b);
        }
        adj
    }

    /// Kahn's algorithm with lowest-index tie-breaking, so the canonical
    /// order is reproducible. Returns `None` on a cycle.
    fn try_topological_order(&self, reversed: bool) -> Option<Vec<usize>> {
        let adj = self.adjacency(reversed);
        let mut indegree = vec![0usize; self.n];
        for targets in &adj {
            for &t in targets {
                indegree[t] += 1;
            }
        }
        let mut ready: BinaryHeap<Reverse<usize>> = (0..self.n)
            .filter(|&i| indegree[i] == 0)
            .map(Reverse)
            .collect();
        let mut order = Vec::with_capacity(self.n);
        while let Some(Reverse(node)) = ready.pop() {
            order.push(node);
            for &t in &adj[node] {
                indegree[t] -= 1;
                if indegree[t] == 0 {
                    ready.push(Reverse(t));
                }
            }
        }
        (order.len() == self.n).then_some(order)
    }

    /// Canonical topological order (edges point forward).
    pub fn topological_order(&self) -> Vec<usize> {
        self.try_topological_order(false).expect("validated acyclic at construction")
    }

    /// Canonical topological order of the reversed graph (edges point
    /// backward), used by upper-bound propagation.
    pub fn reverse_topological_order(&self) -> Vec<usize> {
        self.try_topological_order(true).expect("validated acyclic at construction")
    }
}

/// Builds the flip graph from utilities and top-l statistics: an edge
/// `i -> j` whenever `u_i > u_j` strictly and `j` strictly out-ranks `i` at
/// some cutoff. Utility ties produce no edge. Each edge records every cutoff
/// whose ratio is defined and at most 1.
pub fn build_flip_dag(u: &Utilities, stats: &TopLStats) -> Result<FlipDag> {
    let n = stats.n();
    if u.len() != n {
        return Err(Error::InvalidInput(format!(
            "stats cover {n} items but utilities cover {}",
            u.len()
        )));
    }
    let k = stats.k();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            // Utility ties produce no edge; the inequality must be strict.
            if i == j || u.get(i) <= u.get(j) {
                continue;
            }
            let flipped =
                (1..=k).any(|l| stats.prob_top(i, l) < stats.prob_top(j, l));
            if !flipped {
                continue;
            }
            let ratios: Vec<RatioAtCutoff> = (1..=k)
                .filter_map(|l| relative_gap_c(stats, i, j, l).map(|c| RatioAtCutoff { cutoff: l, c }))
                .collect();
            edges.push(FlipEdge { from: i, to: j, ratios });
        }
    }
    FlipDag::new(n, edges)
}

/// How transfer ratios are formed from statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CRatioPolicy {
    /// Use the point estimates directly.
    Point,
    /// For empirical statistics, use the largest plausible ratio (Wilson
    /// upper interval of the numerator over Wilson lower of the denominator)
    /// so the transferred bound stays valid with the stated confidence even
    /// under sampling noise. Exact statistics fall back to point ratios.
    ConservativeWilson { confidence: f64 },
}

fn policy_ratio(
    stats: &TopLStats,
    i: usize,
    j: usize,
    l: usize,
    policy: CRatioPolicy,
) -> Option<f64> {
    match policy {
        CRatioPolicy::Point => relative_gap_c(stats, i, j, l),
        CRatioPolicy::ConservativeWilson { confidence } => match stats.source() {
            StatsSource::Exact => relative_gap_c(stats, i, j, l),
            StatsSource::Empirical { samples } => {
                let (_, hi_i) = wilson_interval(stats.prob_top(i, l), samples, confidence);
                let (lo_j, _) = wilson_interval(stats.prob_top(j, l), samples, confidence);
                if lo_j <= 0.0 {
                    return None;
                }
                let c = hi_i / lo_j;
                (c <= 1.0).then_some(c)
            }
        },
    }
}

fn validate_order(order: &[usize], dag: &FlipDag) -> Result<Vec<usize>> {
    if order.len() != dag.n() {
        return Err(Error::InvalidInput("order must cover every item exactly once".into()));
    }
    let mut position = vec![usize::MAX; dag.n()];
    for (pos, &node) in order.iter().enumerate() {
        if node >= dag.n() || position[node] != usize::MAX {
            return Err(Error::InvalidInput("order must be a permutation of the items".into()));
        }
        position[node] = pos;
    }
    Ok(position)
}

/// Propagates lower bounds forward through the flip graph in topological
/// order: each edge and qualifying cutoff can only raise the target's bound.
pub fn tighten_lower_bounds(
    initial: &[f64],
    dag: &FlipDag,
    stats: &TopLStats,
) -> Result<Vec<f64>> {
    let order = dag.topological_order();
    tighten_lower_bounds_in_order(initial, dag, stats, CRatioPolicy::Point, &order)
}

/// [`tighten_lower_bounds`] under an explicit ratio policy and topological
/// order; the result is the same for every valid order.
pub fn tighten_lower_bounds_in_order(
    initial: &[f64],
    dag: &FlipDag,
    stats: &TopLStats,
    policy: CRatioPolicy,
    order: &[usize],
) -> Result<Vec<f64>> {
    if initial.len() != dag.n() {
        return Err(Error::InvalidInput("bounds must cover every item".into()));
    }
    let position = validate_order(order, dag)?;
    let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); dag.n()];
    for (idx, e) in dag.edges().iter().enumerate() {
        if position[e.from] >= position[e.to] {
            return Err(Error::InvalidInput("order is not topological for this graph".into()));
        }
        out_edges[e.from].push(idx);
    }
    let mut bounds = initial.to_vec();
    for &i in order {
        for &idx in &out_edges[i] {
            let edge = &dag.edges()[idx];
            for l in 1..=stats.k() {
                if let Some(c) = policy_ratio(stats, edge.from, edge.to, l, policy) {
                    let transferred = lb_transfer(bounds[edge.from], c)?;
                    if transferred > bounds[edge.to] {
                        bounds[edge.to] = transferred;
                    }
                }
            }
        }
    }
    Ok(bounds)
}

/// Propagates upper bounds against the edge direction (from the lower-utility
/// endpoint to the higher) in topological order of the reversed graph: each
/// edge and qualifying cutoff can only lower the source's bound.
pub fn tighten_upper_bounds(
    initial: &[f64],
    dag: &FlipDag,
    stats: &TopLStats,
) -> Result<Vec<f64>> {
    let order = dag.reverse_topological_order();
    tighten_upper_bounds_in_order(initial, dag, stats, CRatioPolicy::Point, &order)
}

/// [`tighten_upper_bounds`] under an explicit ratio policy and an explicit
/// topological order of the reversed graph.
pub fn tighten_upper_bounds_in_order(
    initial: &[f64],
    dag: &FlipDag,
    stats: &TopLStats,
    policy: CRatioPolicy,
    order: &[usize],
) -> Result<Vec<f64>> {
    if initial.len() != dag.n() {
        return Err(Error::InvalidInput("bounds must cover every item".into()));
    }
    let position = validate_order(order, dag)?;
    let mut in_edges: Vec<Vec<usize>> = vec![Vec::new(); dag.n()];
    for (idx, e) in dag.edges().iter().enumerate() {
        if position[e.to] >= position[e.from] {
            return Err(Error::InvalidInput(
                "order is not topological for the reversed graph".into(),
            ));
        }
        in_edges[e.to].push(idx);
    }
    let mut bounds = initial.to_vec();
    for &j in order {
        for &idx in &in_edges[j] {
            let edge = &dag.edges()[idx];
            for l in 1..=stats.k() {
                if let Some(c) = policy_ratio(stats, edge.from, edge.to, l, policy) {
                    let transferred = ub_transfer(bounds[edge.to], c)?;
                    if transferred < bounds[edge.from] {
                        bounds[edge.from] = transferred;
                    }
                }
            }
        }
    }
    Ok(bounds)
}

/// The unique minimal edge set with the same reachability relation.
pub fn transitive_reduction(dag: &FlipDag) -> Result<FlipDag> {
    let n = dag.n();
    let adj = {
        let mut adj = vec![Vec::new(); n];
        for e in dag.edges() {
            adj[e.from].push(e.to);
        }
        adj
    };
    // reach[a][b]: a path of length >= 1 from a to b exists.
    let mut reach = vec![vec![false; n]; n];
    for start in 0..n {
        let mut stack: Vec<usize> = adj[start].clone();
        while let Some(node) = stack.pop() {
            if !reach[start][node] {
                reach[start][node] = true;
                stack.extend(adj[node].iter().copied());
            }
        }
    }
    let kept: Vec<FlipEdge> = dag
        .edges()
        .iter()
        .filter(|e| {
            !adj[e.from]
                .iter()
                .any(|&mid| mid != e.to && reach[mid][e.to])
        })
        .cloned()
        .collect();
    FlipDag::new(n, kept)
}

/// Pipeline stage of a [`BoundState`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundStage {
    Initial,
    Tightened,
}

/// Per-item lower and upper consideration-probability bounds, clamped into
/// [0, 1]. A lower bound exceeding its upper after clamping signals violated
/// assumptions (wrong alpha, noisy statistics, or a wrong utility order);
/// such items are recorded rather than silently adjusted.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundState {
    lower: Vec<f64>,
    upper: Vec<f64>,
    stage: BoundStage,
    crossed: Vec<usize>,
}

impl BoundState {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, stage: BoundStage) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::InvalidInput("bound vectors differ in length".into()));
        }
        let lower: Vec<f64> = lower.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        let upper: Vec<f64> = upper.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        let crossed = (0..lower.len()).filter(|&i| lower[i] > upper[i]).collect();
        Ok(Self { lower, upper, stage, crossed })
    }

    pub fn n(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn stage(&self) -> BoundStage {
        self.stage
    }

    /// Items whose clamped lower bound exceeds their upper bound.
    pub fn crossed_items(&self) -> &[usize] {
        &self.crossed
    }

    pub fn is_consistent(&self) -> bool {
        self.crossed.is_empty()
    }
}

/// Everything the bound pipeline produces for one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsOutcome {
    pub initial: BoundState,
    pub tightened: BoundState,
    pub dag: FlipDag,
}

/// Runs the full bound pipeline: initial absolute bounds, flip-graph
/// construction, and one propagation pass in each direction.
pub fn derive_bounds(
    stats: &TopLStats,
    u: &Utilities,
    a: &AlphaAssumption,
    policy: CRatioPolicy,
) -> Result<BoundsOutcome> {
    let lower0 = initial_lower_bounds(stats, a)?;
    let upper0 = initial_upper_bounds(stats, u, a)?;
    let dag = build_flip_dag(u, stats)?;
    let lower = tighten_lower_bounds_in_order(&lower0, &dag, stats, policy, &dag.topological_order())?;
    let upper = tighten_upper_bounds_in_order(
        &upper0,
        &dag,
        stats,
        policy,
        &dag.reverse_topological_order(),
    )?;
    Ok(BoundsOutcome {
        initial: BoundState::new(lower0, upper0, BoundStage::Initial)?,
        tightened: BoundState::new(lower, upper, BoundStage::Tightened)?,
        dag,
    })
}

/// Wilson score interval for a proportion estimated from `samples` trials,
/// at the given two-sided confidence level.
pub fn wilson_interval(p_hat: f64, samples: usize, confidence: f64) -> (f64, f64) {
    if samples == 0 {
        return (0.0, 1.0);
    }
    let z = normal_quantile(0.5 + confidence.clamp(0.0, 1.0 - 1e-12) / 2.0);
    let m = samples as f64;
    let z2 = z * z;
    let denom = 1.0 + z2 / m;
    let center = (p_hat + z2 / (2.0 * m)) / denom;
    let half = z * (p_hat * (1.0 - p_hat) / m + z2 / (4.0 * m * m)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Inverse standard-normal CDF (Acklam's rational approximation, relative
/// error below 1.2e-9 across (0, 1)).
fn normal_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.38357751867269e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}
