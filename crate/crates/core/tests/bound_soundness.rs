//! Generative soundness checks for the bound machinery: on synthetic models
//! whose parameters satisfy the expected-size assumption, the computed
//! bounds must bracket the true consideration probabilities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use plc_core::bounds::{
    build_flip_dag, derive_bounds, exactly_k_mass_bound, initial_lower_bounds,
    initial_upper_bounds, tighten_lower_bounds_in_order, tighten_upper_bounds_in_order,
    transitive_reduction, AlphaAssumption, CRatioPolicy, FlipDag,
};
use plc_core::consideration::poisson_binomial_pmf;
use plc_core::plc::plc_exact_top_l_stats;
use plc_core::{ConsiderationProbs, TopLStats, Utilities};

struct Instance {
    alpha: f64,
    k: usize,
    u: Utilities,
    p: ConsiderationProbs,
    stats: TopLStats,
}

/// Draws a model whose consideration probabilities satisfy sum(p) >= alpha*k
/// by construction, with exact top-l statistics.
fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let alpha = [1.5, 2.0, 5.0][rng.random_range(0..3)];
    // Feasibility needs n > alpha * k with p_i <= 1.
    let (k, n) = loop {
        let k = rng.random_range(1..=3usize);
        let n_min = (alpha * k as f64).ceil() as usize + 1;
        if n_min <= 8 {
            break (k, rng.random_range(n_min..=8));
        }
    };
    let floor = alpha * k as f64 / n as f64;
    let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
    let p: Vec<f64> = (0..n).map(|_| floor + (1.0 - floor) * rng.random::<f64>()).collect();
    let u = Utilities::new(u).unwrap();
    let p = ConsiderationProbs::new(p).unwrap();
    assert!(p.sum() >= alpha * k as f64);
    let stats = plc_exact_top_l_stats(&u, &p, k).unwrap();
    Instance { alpha, k, u, p, stats }
}

#[test]
fn exactly_k_bound_dominates_enumerated_mass() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for trial in 0..40 {
        let inst = random_instance(&mut rng);
        let a = AlphaAssumption::new(inst.alpha, inst.k).unwrap();
        let bound = exactly_k_mass_bound(&a).unwrap();
        let pmf = poisson_binomial_pmf(&inst.p);
        let actual = pmf.prob(inst.k) / pmf.tail(inst.k);
        assert!(
            actual <= bound + 1e-12,
            "trial {trial}: exact mass {actual} exceeds bound {bound}"
        );
    }
}

#[test]
fn initial_bounds_bracket_true_probabilities() {
    let mut rng = ChaCha8Rng::seed_from_u64(67);
    for trial in 0..60 {
        let inst = random_instance(&mut rng);
        let a = AlphaAssumption::new(inst.alpha, inst.k).unwrap();
        let lower = initial_lower_bounds(&inst.stats, &a).unwrap();
        let upper = initial_upper_bounds(&inst.stats, &inst.u, &a).unwrap();
        for i in 0..inst.p.len() {
            let pi = inst.p.get(i);
            assert!(lower[i] <= pi + 1e-9, "trial {trial}, item {i}: lb {} > p {pi}", lower[i]);
            assert!(upper[i] >= pi - 1e-9, "trial {trial}, item {i}: ub {} < p {pi}", upper[i]);
        }
    }
}

#[test]
fn flip_edges_imply_consideration_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    for trial in 0..40 {
        let inst = random_instance(&mut rng);
        let dag = build_flip_dag(&inst.u, &inst.stats).unwrap();
        for e in dag.edges() {
            assert!(
                inst.p.get(e.from) <= inst.p.get(e.to) + 1e-9,
                "trial {trial}: edge {} -> {} but p {} > p {}",
                e.from,
                e.to,
                inst.p.get(e.from),
                inst.p.get(e.to)
            );
        }
    }
}

#[test]
fn tightened_bounds_still_bracket_true_probabilities() {
    let mut rng = ChaCha8Rng::seed_from_u64(73);
    for trial in 0..40 {
        let inst = random_instance(&mut rng);
        let a = AlphaAssumption::new(inst.alpha, inst.k).unwrap();
        let outcome = derive_bounds(&inst.stats, &inst.u, &a, CRatioPolicy::Point).unwrap();
        assert!(outcome.tightened.is_consistent());
        for i in 0..inst.p.len() {
            let pi = inst.p.get(i);
            let lb = outcome.tightened.lower()[i];
            let ub = outcome.tightened.upper()[i];
            assert!(lb <= pi + 1e-9, "trial {trial}, item {i}: lb {lb} > p {pi}");
            assert!(ub >= pi - 1e-9, "trial {trial}, item {i}: ub {ub} < p {pi}");
            assert!(lb >= outcome.initial.lower()[i] - 1e-15);
            assert!(ub <= outcome.initial.upper()[i] + 1e-15);
        }
    }
}

/// Kahn's algorithm preferring the *largest* ready index, to get a second
/// valid topological order distinct from the library's canonical one.
fn max_index_topological_order(dag: &FlipDag, reversed: bool) -> Vec<usize> {
    let n = dag.n();
    let mut adj = vec![Vec::new(); n];
    for e in dag.edges() {
        let (a, b) = if reversed { (e.to, e.from) } else { (e.from, e.to) };
        adj[a].push(b);
    }
    let mut indegree = vec![0usize; n];
    for targets in &adj {
        for &t in targets {
            indegree[t] += 1;
        }
    }
    let mut ready: std::collections::BinaryHeap<usize> =
        (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(node) = ready.pop() {
        order.push(node);
        for &t in &adj[node] {
            indegree[t] -= 1;
            if indegree[t] == 0 {
                ready.push(t);
            }
        }
    }
    assert_eq!(order.len(), n);
    order
}

#[test]
fn propagation_is_order_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(79);
    for trial in 0..25 {
        let inst = random_instance(&mut rng);
        let a = AlphaAssumption::new(inst.alpha, inst.k).unwrap();
        let dag = build_flip_dag(&inst.u, &inst.stats).unwrap();
        let lower0 = initial_lower_bounds(&inst.stats, &a).unwrap();
        let upper0 = initial_upper_bounds(&inst.stats, &inst.u, &a).unwrap();

        let lb_min = tighten_lower_bounds_in_order(
            &lower0,
            &dag,
            &inst.stats,
            CRatioPolicy::Point,
            &dag.topological_order(),
        )
        .unwrap();
        let lb_max = tighten_lower_bounds_in_order(
            &lower0,
            &dag,
            &inst.stats,
            CRatioPolicy::Point,
            &max_index_topological_order(&dag, false),
        )
        .unwrap();
        let ub_min = tighten_upper_bounds_in_order(
            &upper0,
            &dag,
            &inst.stats,
            CRatioPolicy::Point,
            &dag.reverse_topological_order(),
        )
        .unwrap();
        let ub_max = tighten_upper_bounds_in_order(
            &upper0,
            &dag,
            &inst.stats,
            CRatioPolicy::Point,
            &max_index_topological_order(&dag, true),
        )
        .unwrap();
        for i in 0..dag.n() {
            assert!(
                (lb_min[i] - lb_max[i]).abs() <= 1e-12,
                "trial {trial}, item {i}: {} vs {}",
                lb_min[i],
                lb_max[i]
            );
            assert!(
                (ub_min[i] - ub_max[i]).abs() <= 1e-12,
                "trial {trial}, item {i}: {} vs {}",
                ub_min[i],
                ub_max[i]
            );
        }
    }
}

fn reachability(dag: &FlipDag) -> Vec<Vec<bool>> {
    let n = dag.n();
    let mut adj = vec![Vec::new(); n];
    for e in dag.edges() {
        adj[e.from].push(e.to);
    }
    let mut reach = vec![vec![false; n]; n];
    for start in 0..n {
        let mut stack = adj[start].clone();
        while let Some(node) = stack.pop() {
            if !reach[start][node] {
                reach[start][node] = true;
                stack.extend(adj[node].iter().copied());
            }
        }
    }
    reach
}

#[test]
fn transitive_reduction_preserves_reachability() {
    let mut rng = ChaCha8Rng::seed_from_u64(83);
    for trial in 0..30 {
        let inst = random_instance(&mut rng);
        let dag = build_flip_dag(&inst.u, &inst.stats).unwrap();
        let reduced = transitive_reduction(&dag).unwrap();
        assert!(reduced.edge_count() <= dag.edge_count());
        let before = reachability(&dag);
        let after = reachability(&reduced);
        assert_eq!(before, after, "trial {trial}: reachability changed");
        for e in reduced.edges() {
            assert!(dag.has_edge(e.from, e.to));
        }
    }
}

#[test]
fn conservative_ratios_stay_sound_on_noisy_stats() {
    // Perturbs exact statistics the way sampling noise would and checks the
    // Wilson-based policy does not produce bound crossings against truth.
    let mut rng = ChaCha8Rng::seed_from_u64(89);
    for _ in 0..20 {
        let inst = random_instance(&mut rng);
        let samples = 200_000usize;
        let noisy_rows: Vec<Vec<f64>> = (0..inst.p.len())
            .map(|i| {
                (1..=inst.k)
                    .map(|l| {
                        let exact = inst.stats.prob_top(i, l);
                        let se = (exact * (1.0 - exact) / samples as f64).sqrt();
                        (exact + se * (rng.random::<f64>() * 2.0 - 1.0)).clamp(0.0, 1.0)
                    })
                    .collect()
            })
            .collect();
        // Re-impose row monotonicity after perturbation.
        let noisy_rows: Vec<Vec<f64>> = noisy_rows
            .into_iter()
            .map(|mut row| {
                for l in 1..row.len() {
                    row[l] = row[l].max(row[l - 1]);
                }
                row
            })
            .collect();
        let noisy = TopLStats::new(noisy_rows, plc_core::StatsSource::Empirical { samples }).unwrap();
        let a = AlphaAssumption::new(inst.alpha, inst.k).unwrap();
        let outcome = derive_bounds(
            &noisy,
            &inst.u,
            &a,
            CRatioPolicy::ConservativeWilson { confidence: 0.99 },
        )
        .unwrap();
        for i in 0..inst.p.len() {
            let pi = inst.p.get(i);
            // Initial bounds absorb the (tiny) stats noise; the CI policy
            // must keep the transferred bounds from overshooting.
            assert!(
                outcome.tightened.lower()[i] <= pi + 2e-3,
                "item {i}: lb {} vs p {pi}",
                outcome.tightened.lower()[i]
            );
            assert!(
                outcome.tightened.upper()[i] >= pi - 2e-3,
                "item {i}: ub {} vs p {pi}",
                outcome.tightened.upper()[i]
            );
        }
    }
}
