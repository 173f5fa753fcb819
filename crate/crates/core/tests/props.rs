//! Property tests: engine behavior against brute-force references and
//! structural invariants, over randomized graphs, grounded sets, and DAGs.

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use converge_core::oracle::{
    closure_by_iteration, random_dag_obo, random_graph, random_grounded, reference_scores,
    reference_support,
};
use converge_core::scoring::{score_candidates, AlphaSpec, ScoringConfig};
use converge_core::traversal::{multi_source_traverse, TraversalConfig};
use converge_core::{OntologyDag, PropertyGraph};

fn config_with_k(k: usize) -> TraversalConfig {
    TraversalConfig {
        k,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Engine bins and df equal exhaustive path enumeration, and no gene
    /// lands in two bins of one target.
    #[test]
    fn min_hop_bins_match_enumeration(seed in any::<u64>(), k in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = random_graph(&mut rng, 60, 140);
        let grounded = random_grounded(&graph, &mut rng, 8);
        prop_assume!(!grounded.is_empty());
        let config = config_with_k(k);
        let table = multi_source_traverse(&graph, &grounded, &config).unwrap();
        let reference = reference_support(&graph, &grounded, &config);

        let engine_bins: Vec<_> = table.iter().map(|(t, bins)| (t, bins.clone())).collect();
        let reference_bins: Vec<_> = reference.bins.iter().map(|(&t, b)| (t, b.clone())).collect();
        prop_assert_eq!(engine_bins, reference_bins);

        for (rank, df) in table.df_entries() {
            prop_assert_eq!(df, reference.df[&rank]);
        }
        for (_, bins) in table.iter() {
            let mut seen = BTreeSet::new();
            for ranks in bins.values() {
                for &rank in ranks {
                    prop_assert!(seen.insert(rank), "gene rank {} in two bins", rank);
                }
            }
        }
    }

    /// Scores from the engine equal direct formula evaluation over the
    /// enumerated support, within 1e-9.
    #[test]
    fn scores_match_reference(seed in any::<u64>(), k in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = random_graph(&mut rng, 50, 120);
        let grounded = random_grounded(&graph, &mut rng, 6);
        prop_assume!(!grounded.is_empty());
        let config = config_with_k(k);
        let table = multi_source_traverse(&graph, &grounded, &config).unwrap();
        let scoring = ScoringConfig::default();
        let ranked = score_candidates(&graph, &table, &grounded, &scoring).unwrap();

        let reference = reference_support(&graph, &grounded, &config);
        let expected = reference_scores(&reference, &scoring.alpha);
        prop_assert_eq!(ranked.len(), expected.len());
        for candidate in &ranked {
            let idx = graph.node_index(&candidate.target_id).unwrap();
            let want = expected[&idx];
            prop_assert!(
                (candidate.score - want).abs() < 1e-9,
                "score {} vs reference {}",
                candidate.score,
                want
            );
        }
    }

    /// Raising the horizon only adds candidates; bins at hops within the
    /// smaller horizon are unchanged.
    #[test]
    fn horizon_monotonicity(seed in any::<u64>(), k in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = random_graph(&mut rng, 60, 140);
        let grounded = random_grounded(&graph, &mut rng, 6);
        prop_assume!(!grounded.is_empty());
        let small = multi_source_traverse(&graph, &grounded, &config_with_k(k)).unwrap();
        let large = multi_source_traverse(&graph, &grounded, &config_with_k(k + 1)).unwrap();

        let small_candidates: BTreeSet<_> = small.candidates().collect();
        let large_candidates: BTreeSet<_> = large.candidates().collect();
        prop_assert!(small_candidates.is_subset(&large_candidates));

        for (target, bins) in small.iter() {
            let large_bins = large.bins(target).unwrap();
            for (&hop, ranks) in bins {
                prop_assert_eq!(ranks, &large_bins[&hop]);
            }
            for (&hop, ranks) in large_bins {
                if usize::from(hop) <= k {
                    prop_assert_eq!(ranks, &bins[&hop]);
                }
            }
        }
    }

    /// Scaling every alpha by a power of two never changes the ranking.
    #[test]
    fn alpha_scaling_preserves_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = random_graph(&mut rng, 50, 120);
        let grounded = random_grounded(&graph, &mut rng, 6);
        prop_assume!(!grounded.is_empty());
        let table = multi_source_traverse(&graph, &grounded, &config_with_k(3)).unwrap();
        let order = |alphas: Vec<f64>| {
            let cfg = ScoringConfig { alpha: AlphaSpec::Explicit(alphas), top_k: 10 };
            score_candidates(&graph, &table, &grounded, &cfg)
                .unwrap()
                .into_iter()
                .map(|c| c.target_id)
                .collect::<Vec<_>>()
        };
        prop_assert_eq!(
            order(vec![1.0, 0.5, 0.25]),
            order(vec![4.0, 2.0, 1.0])
        );
    }

    /// Traversal and scoring are pure: repeated runs serialize identically.
    #[test]
    fn retrieval_is_deterministic(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = random_graph(&mut rng, 40, 90);
        let grounded = random_grounded(&graph, &mut rng, 5);
        prop_assume!(!grounded.is_empty());
        let config = config_with_k(2);
        let scoring = ScoringConfig::default();
        let run = || {
            let table = multi_source_traverse(&graph, &grounded, &config).unwrap();
            let ranked = score_candidates(&graph, &table, &grounded, &scoring).unwrap();
            serde_json::to_string(&ranked).unwrap()
        };
        prop_assert_eq!(run(), run());
    }

    /// Ancestor closure from the parser equals repeated-expansion closure;
    /// on_same_path is reflexive and symmetric.
    #[test]
    fn dag_closure_matches_bruteforce(seed in any::<u64>(), n_terms in 2usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let obo_text = random_dag_obo(&mut rng, n_terms, 3);
        let dag = OntologyDag::parse_str(&obo_text).unwrap();

        let id_of = |i: usize| format!("T:{i:04}");
        let parents: Vec<Vec<usize>> = (0..n_terms)
            .map(|i| {
                dag.term(&id_of(i))
                    .unwrap()
                    .parents
                    .iter()
                    .map(|p| p[2..].parse::<usize>().unwrap())
                    .collect()
            })
            .collect();
        let expected = closure_by_iteration(&parents);
        for (i, want) in expected.iter().enumerate() {
            let got: BTreeSet<usize> = dag
                .ancestors(&id_of(i))
                .unwrap()
                .iter()
                .map(|a| a[2..].parse::<usize>().unwrap())
                .collect();
            prop_assert_eq!(&got, want);
            prop_assert!(!got.contains(&i));
        }
        for i in 0..n_terms.min(12) {
            for j in 0..n_terms.min(12) {
                let ij = dag.on_same_path(&id_of(i), &id_of(j)).unwrap();
                let ji = dag.on_same_path(&id_of(j), &id_of(i)).unwrap();
                prop_assert_eq!(ij, ji);
            }
            prop_assert!(dag.on_same_path(&id_of(i), &id_of(i)).unwrap());
        }
    }

    /// Every term resolves back from its own name when that name is unique
    /// under normalization (always true for the generated fixtures).
    #[test]
    fn resolve_by_name_round_trips(seed in any::<u64>(), n_terms in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dag = OntologyDag::parse_str(&random_dag_obo(&mut rng, n_terms, 2)).unwrap();
        for term in dag.terms() {
            prop_assert_eq!(dag.resolve_label(&term.name), Some(term.id.as_str()));
            prop_assert_eq!(dag.resolve_label(&term.id), Some(term.id.as_str()));
        }
    }
}

/// Neighbor iteration order survives a reload of the same files.
#[test]
fn neighbor_order_stable_across_loads() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let graph = random_graph(&mut rng, 40, 100);

    let dir = tempfile::tempdir().unwrap();
    let nodes_path = dir.path().join("nodes.tsv");
    let edges_path = dir.path().join("edges.tsv");
    let mut nodes = String::from("id\tsemantic_type\tname\tsynonyms\n");
    for node in graph.nodes() {
        nodes.push_str(&format!(
            "{}\t{}\t{}\t\n",
            node.id,
            graph.type_set().name(node.semantic_type),
            node.name
        ));
    }
    let mut edges = String::from("source\trelation\ttarget\n");
    for node in graph.nodes() {
        for n in graph.neighbors(&node.id).unwrap() {
            if n.direction == converge_core::graph::Direction::Outgoing {
                edges.push_str(&format!("{}\t{}\t{}\n", node.id, n.relation, n.id));
            }
        }
    }
    std::fs::write(&nodes_path, &nodes).unwrap();
    std::fs::write(&edges_path, &edges).unwrap();

    let a = PropertyGraph::load(&nodes_path, &edges_path).unwrap();
    let b = PropertyGraph::load(&nodes_path, &edges_path).unwrap();
    for node in a.nodes() {
        assert_eq!(
            a.neighbors(&node.id).unwrap(),
            b.neighbors(&node.id).unwrap()
        );
    }
}
