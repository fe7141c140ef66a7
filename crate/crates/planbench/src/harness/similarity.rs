//! Comparing an extracted graph against the one it was generated from.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::graph::{NodeId, TaskGraph};

/// Relative weight of each graph component in the similarity score.
///
/// The split between rules and the two endpoint indicators is a judgment
/// call, so it lives in config rather than in the formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityWeights {
    pub rules: f64,
    pub initial: f64,
    pub target: f64,
}

impl Default for SimilarityWeights {
    fn default() -> Self {
        SimilarityWeights {
            rules: 0.8,
            initial: 0.1,
            target: 0.1,
        }
    }
}

/// A rule stripped to what it means: sorted sources, target, time, cost.
/// Ids and source order are presentation details and do not count.
type RuleKey = (Vec<NodeId>, NodeId, u64, u64);

fn rule_key(rule: &crate::graph::Rule) -> RuleKey {
    let mut source: Vec<NodeId> = rule.source.clone();
    source.sort();
    (source, rule.target, rule.time, rule.cost)
}

fn rule_multiset(graph: &TaskGraph) -> BTreeMap<RuleKey, usize> {
    let mut counts = BTreeMap::new();
    for rule in &graph.rules {
        *counts.entry(rule_key(rule)).or_insert(0) += 1;
    }
    counts
}

/// How closely `extracted` matches `gold`, as (exact?, score in [0, 1]).
///
/// Exact means the rule multisets, the initial-source sets, and the targets
/// all agree. The graded score is the Jaccard index of the rule sets blended
/// with equality indicators for the endpoints, using [`SimilarityWeights`].
pub fn graph_similarity_weighted(
    extracted: &TaskGraph,
    gold: &TaskGraph,
    weights: SimilarityWeights,
) -> (bool, f64) {
    let extracted_rules = rule_multiset(extracted);
    let gold_rules = rule_multiset(gold);
    let initial_match = extracted.initial_set() == gold.initial_set();
    let target_match = extracted.target == gold.target;
    let exact = extracted_rules == gold_rules && initial_match && target_match;

    let a: BTreeSet<&RuleKey> = extracted_rules.keys().collect();
    let b: BTreeSet<&RuleKey> = gold_rules.keys().collect();
    let union = a.union(&b).count();
    let jaccard = if union == 0 {
        1.0
    } else {
        a.intersection(&b).count() as f64 / union as f64
    };
    let score = weights.rules * jaccard
        + weights.initial * f64::from(initial_match)
        + weights.target * f64::from(target_match);
    (exact, score)
}

/// [`graph_similarity_weighted`] with the default 0.8 / 0.1 / 0.1 split.
pub fn graph_similarity(extracted: &TaskGraph, gold: &TaskGraph) -> (bool, f64) {
    graph_similarity_weighted(extracted, gold, SimilarityWeights::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{example_graph, n, query_graph, rule};
    use crate::TaskGraph;

    #[test]
    fn identical_graphs_are_exact() {
        let g = query_graph();
        assert_eq!(graph_similarity(&g, &g), (true, 1.0));
    }

    #[test]
    fn rule_ids_and_source_order_do_not_matter() {
        let gold = example_graph();
        let mut shuffled = gold.clone();
        for r in &mut shuffled.rules {
            r.id += 100;
            r.source.reverse();
        }
        shuffled.rules.reverse();
        let (exact, score) = graph_similarity(&shuffled, &gold);
        assert!(exact);
        assert!((score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_missing_rule_out_of_nine() {
        let gold = query_graph();
        let mut partial = gold.clone();
        // Drop the N1 -> N9 shortcut; the rest of the graph stays achievable.
        partial.rules.retain(|r| r.id != 8);
        let (exact, score) = graph_similarity(&partial, &gold);
        assert!(!exact);
        let expected = 0.8 * (8.0 / 9.0) + 0.1 + 0.1;
        assert!((score - expected).abs() < 1e-12, "{score} vs {expected}");
        assert!((score - 0.911).abs() < 1e-3);
    }

    #[test]
    fn disjoint_rules_and_wrong_target_stay_under_a_tenth() {
        let gold = example_graph();
        let other = TaskGraph {
            rules: vec![rule(0, &[7], 8, 2), rule(1, &[8], 9, 2)],
            initial_source: vec![n(7)],
            target: n(9),
        };
        let (exact, score) = graph_similarity(&other, &gold);
        assert!(!exact);
        assert!(score <= 0.1 + 1e-12, "{score}");
    }

    #[test]
    fn duplicate_rules_break_exactness_but_not_the_set_score() {
        let gold = example_graph();
        let mut doubled = gold.clone();
        let mut copy = doubled.rules[0].clone();
        copy.id = 99;
        doubled.rules.push(copy);
        let (exact, score) = graph_similarity(&doubled, &gold);
        assert!(!exact);
        // As sets the rules agree, so only exactness is lost.
        assert!((score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn changed_time_counts_as_a_different_rule() {
        let gold = example_graph();
        let mut off = gold.clone();
        off.rules[0].time += 1;
        let (exact, score) = graph_similarity(&off, &gold);
        assert!(!exact);
        // 4 shared keys, 6 in the union.
        let expected = 0.8 * (4.0 / 6.0) + 0.2;
        assert!((score - expected).abs() < 1e-12);
    }

    #[test]
    fn custom_weights_are_respected() {
        let gold = example_graph();
        let mut wrong_target = gold.clone();
        wrong_target.target = n(4);
        let weights = SimilarityWeights {
            rules: 0.5,
            initial: 0.25,
            target: 0.25,
        };
        let (_, score) = graph_similarity_weighted(&wrong_target, &gold, weights);
        assert!((score - 0.75).abs() < 1e-12);
    }
}
