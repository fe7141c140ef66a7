//! Turning task graphs into narrative queries, with verification.
//!
//! A story is only as good as its round trip: the story is fed back through
//! graph extraction and compared with the source graph. On a mismatch the
//! model gets a report of what differs and another try. The verifier prompt
//! lives in [`QueryOptions`] so the re-prompt format is visible and
//! adjustable, not baked into the loop.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::endpoint::ChatModel;
use super::parse::parse_extracted_graph;
use super::prompt::{extract_prompt, generate_query_prompt};
use super::similarity::{graph_similarity_weighted, SimilarityWeights};
use crate::graph::TaskGraph;

/// Knobs for the generate/verify loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryOptions {
    /// Upper bound on generation rounds (first try included). At least 1.
    pub max_rounds: usize,
    /// Similarity blend used by the verifier.
    #[serde(default)]
    pub weights: SimilarityWeights,
    /// Preamble of the correction prompt; the mismatch report and the
    /// original instructions are appended after it.
    #[serde(default = "default_retry_preamble")]
    pub retry_preamble: String,
}

fn default_retry_preamble() -> String {
    "Your previous story did not encode the task faithfully. \
     A reader reconstructing the rules from it found these differences:"
        .to_string()
}

impl Default for QueryOptions {
    fn default() -> Self {
        QueryOptions {
            max_rounds: 3,
            weights: SimilarityWeights::default(),
            retry_preamble: default_retry_preamble(),
        }
    }
}

/// What happened in one round of the loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRound {
    /// 1-based round number.
    pub round: usize,
    /// The story the model produced, when the request succeeded.
    pub story: Option<String>,
    /// Why verification could not score this round (request or parse).
    pub failure: Option<String>,
    pub exact_match: bool,
    pub similarity: Option<f64>,
    /// The report shown to the model before the next round, if any.
    pub mismatch_report: Option<String>,
}

/// A story that survived verification, plus the full audit trail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedQuery {
    pub story: String,
    pub exact_match: bool,
    pub similarity: f64,
    pub rounds: Vec<QueryRound>,
}

/// No round produced a story whose extraction round-trip parsed.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("every generation round failed verification; best attempt similarity {best_similarity:?}")]
pub struct AllRoundsFailed {
    /// The last story text, if any round got that far.
    pub best_attempt: Option<String>,
    /// Similarity of the best attempt; None when nothing ever parsed.
    pub best_similarity: Option<f64>,
    pub rounds: Vec<QueryRound>,
}

/// Differences between the reconstructed graph and the source, in the shape
/// shown to the model on a retry.
pub fn mismatch_report(extracted: &TaskGraph, gold: &TaskGraph) -> String {
    let describe = |r: &crate::graph::Rule| {
        let sources: Vec<String> = {
            let mut s: Vec<_> = r.source.iter().map(|n| n.to_string()).collect();
            s.sort();
            s
        };
        format!(
            "[{}] -> {} (time {}, cost {})",
            sources.join(", "),
            r.target,
            r.time,
            r.cost
        )
    };
    let key = |r: &crate::graph::Rule| {
        let mut s = r.source.clone();
        s.sort();
        (s, r.target, r.time, r.cost)
    };
    let gold_keys: Vec<_> = gold.rules.iter().map(key).collect();
    let extracted_keys: Vec<_> = extracted.rules.iter().map(key).collect();

    let mut lines = Vec::new();
    let missing: Vec<String> = gold
        .rules
        .iter()
        .filter(|r| !extracted_keys.contains(&key(r)))
        .map(describe)
        .collect();
    if !missing.is_empty() {
        lines.push(format!("Rules missing from the story: {}", missing.join("; ")));
    }
    let invented: Vec<String> = extracted
        .rules
        .iter()
        .filter(|r| !gold_keys.contains(&key(r)))
        .map(describe)
        .collect();
    if !invented.is_empty() {
        lines.push(format!("Rules not in the task: {}", invented.join("; ")));
    }
    if extracted.rules.len() != gold.rules.len() {
        lines.push(format!(
            "The story encodes {} rules; the task has {}.",
            extracted.rules.len(),
            gold.rules.len()
        ));
    }
    if extracted.initial_set() != gold.initial_set() {
        let show = |g: &TaskGraph| {
            g.initial_set()
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        lines.push(format!(
            "Starting nodes differ: story has [{}], task has [{}].",
            show(extracted),
            show(gold)
        ));
    }
    if extracted.target != gold.target {
        lines.push(format!(
            "Final target differs: story ends at {}, task ends at {}.",
            extracted.target, gold.target
        ));
    }
    if lines.is_empty() {
        "The rule sets match; only identifiers or phrasing differ.".to_string()
    } else {
        lines.join("\n")
    }
}

/// Generate a narrative for `graph`, verifying by extraction round-trip.
///
/// Returns as soon as a round reconstructs the graph exactly; otherwise
/// keeps the best-similarity story seen. The audit trail covers every round
/// and never exceeds `max_rounds` entries. Request failures and unparseable
/// stories are logged per round, not fatal, unless no round ever verifies.
pub fn generate_query(
    graph: &TaskGraph,
    model: &dyn ChatModel,
    options: &QueryOptions,
) -> Result<GeneratedQuery, AllRoundsFailed> {
    let base_prompt = generate_query_prompt(graph);
    let mut rounds: Vec<QueryRound> = Vec::new();
    let mut best: Option<(String, f64)> = None;
    let mut last_story: Option<String> = None;
    let mut prompt = base_prompt.clone();

    for round in 1..=options.max_rounds.max(1) {
        let mut entry = QueryRound {
            round,
            story: None,
            failure: None,
            exact_match: false,
            similarity: None,
            mismatch_report: None,
        };
        let story = match model.complete(&prompt) {
            Ok(text) => {
                let story = text.trim().to_string();
                entry.story = Some(story.clone());
                last_story = Some(story.clone());
                story
            }
            Err(e) => {
                entry.failure = Some(format!("generation request failed: {e}"));
                rounds.push(entry);
                prompt = base_prompt.clone();
                continue;
            }
        };

        // Round-trip: have the same endpoint read its own story back.
        let verification = model
            .complete(&extract_prompt(&story))
            .map_err(|e| format!("verification request failed: {e}"))
            .and_then(|text| {
                parse_extracted_graph(&text).map_err(|e| format!("extraction did not parse: {e}"))
            });
        let extracted = match verification {
            Ok(g) => g,
            Err(why) => {
                entry.failure = Some(why);
                rounds.push(entry);
                prompt = base_prompt.clone();
                continue;
            }
        };

        let (exact, similarity) = graph_similarity_weighted(&extracted, graph, options.weights);
        entry.exact_match = exact;
        entry.similarity = Some(similarity);
        if best.as_ref().is_none_or(|(_, s)| similarity > *s) {
            best = Some((story.clone(), similarity));
        }
        if exact {
            rounds.push(entry);
            return Ok(GeneratedQuery {
                story,
                exact_match: true,
                similarity,
                rounds,
            });
        }

        let report = mismatch_report(&extracted, graph);
        entry.mismatch_report = Some(report.clone());
        rounds.push(entry);
        prompt = format!(
            "{preamble}\n\n{report}\n\nRewrite the story so it encodes the task exactly.\n\n{base}",
            preamble = options.retry_preamble,
            report = report,
            base = base_prompt,
        );
    }

    match best {
        Some((story, similarity)) => Ok(GeneratedQuery {
            story,
            exact_match: false,
            similarity,
            rounds,
        }),
        None => Err(AllRoundsFailed {
            best_attempt: last_story,
            best_similarity: None,
            rounds,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::endpoint::EndpointError;
    use crate::harness::prompt::{QUERY_EXAMPLE, QUERY_EXAMPLE_PLAN};
    use crate::harness::stub::{FixedModel, ScriptedModel};
    use crate::testutil::query_graph;

    /// Echoes the canned story, then answers extraction prompts with the
    /// canned graph, i.e. a model that happens to be perfectly consistent.
    struct Canned;
    impl ChatModel for Canned {
        fn complete(&self, prompt: &str) -> Result<String, EndpointError> {
            if prompt.contains("Extract structured transition rules") {
                Ok(QUERY_EXAMPLE_PLAN.to_string())
            } else {
                Ok(QUERY_EXAMPLE.to_string())
            }
        }
    }

    #[test]
    fn consistent_model_verifies_in_round_one() {
        let graph = query_graph();
        let result = generate_query(&graph, &Canned, &QueryOptions::default()).unwrap();
        assert!(result.exact_match);
        assert_eq!(result.similarity, 1.0);
        assert_eq!(result.story, QUERY_EXAMPLE.trim());
        assert_eq!(result.rounds.len(), 1);
        assert!(result.rounds[0].mismatch_report.is_none());
    }

    #[test]
    fn unparseable_story_every_round_fails() {
        let graph = query_graph();
        let model = FixedModel::new("once upon a time, nothing resembled JSON");
        let options = QueryOptions {
            max_rounds: 2,
            ..QueryOptions::default()
        };
        let err = generate_query(&graph, &model, &options).unwrap_err();
        assert_eq!(err.rounds.len(), 2);
        assert_eq!(err.best_similarity, None);
        assert!(err.best_attempt.is_some());
        assert!(err.rounds.iter().all(|r| r.failure.is_some()));
    }

    #[test]
    fn mismatch_then_exact_takes_two_rounds() {
        let graph = query_graph();
        let mut partial = graph.clone();
        partial.rules.retain(|r| r.id != 8);
        // Round 1: story extracts to the partial graph. Round 2: full graph.
        let model = ScriptedModel::new([
            "draft story".to_string(),
            partial.to_pretty_json(),
            "better story".to_string(),
            graph.to_pretty_json(),
        ]);
        let result = generate_query(&graph, &model, &QueryOptions::default()).unwrap();
        assert!(result.exact_match);
        assert_eq!(result.story, "better story");
        assert_eq!(result.rounds.len(), 2);
        let first = &result.rounds[0];
        assert!(!first.exact_match);
        let report = first.mismatch_report.as_deref().unwrap();
        assert!(report.contains("missing from the story"), "{report}");
        assert!(report.contains("N9"), "{report}");
    }

    #[test]
    fn best_attempt_wins_when_rounds_run_out() {
        let graph = query_graph();
        let mut worse = graph.clone();
        worse.rules.retain(|r| r.id < 7);
        worse.target = crate::graph::NodeId::new(8);
        let mut better = graph.clone();
        better.rules.retain(|r| r.id != 8);
        let model = ScriptedModel::new([
            "weak story".to_string(),
            worse.to_pretty_json(),
            "strong story".to_string(),
            better.to_pretty_json(),
        ]);
        let options = QueryOptions {
            max_rounds: 2,
            ..QueryOptions::default()
        };
        let result = generate_query(&graph, &model, &options).unwrap();
        assert!(!result.exact_match);
        assert_eq!(result.story, "strong story");
        let expected = 0.8 * (8.0 / 9.0) + 0.1 + 0.1;
        assert!((result.similarity - expected).abs() < 1e-12);
        assert_eq!(result.rounds.len(), 2);
    }

    #[test]
    fn audit_trail_never_exceeds_max_rounds() {
        let graph = query_graph();
        let model = FixedModel::new("never json");
        for max_rounds in [1, 2, 5] {
            let options = QueryOptions {
                max_rounds,
                ..QueryOptions::default()
            };
            let err = generate_query(&graph, &model, &options).unwrap_err();
            assert_eq!(err.rounds.len(), max_rounds);
        }
    }

    #[test]
    fn mismatch_report_covers_each_difference() {
        let gold = query_graph();
        let mut wrong = gold.clone();
        wrong.rules.retain(|r| r.id != 0);
        wrong.rules.push(crate::testutil::rule(20, &[4], 5, 9));
        wrong.initial_source = vec![crate::graph::NodeId::new(3), crate::graph::NodeId::new(7)];
        wrong.target = crate::graph::NodeId::new(6);
        let report = mismatch_report(&wrong, &gold);
        assert!(report.contains("missing from the story"), "{report}");
        assert!(report.contains("not in the task"), "{report}");
        assert!(report.contains("Starting nodes differ"), "{report}");
        assert!(report.contains("Final target differs"), "{report}");
    }
}
