//! Prompt templates and rendering.
//!
//! The four templates and three worked examples are checked-in text assets;
//! the bodies here are byte-identical to those files. Rendering is pure
//! placeholder substitution: `{task}` and friends are replaced, everything
//! else is copied through untouched, and substituted text is never rescanned
//! (a graph JSON containing `{` stays literal).

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::graph::TaskGraph;

/// Which of the four canned templates a [`PromptTemplate`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TemplateKind {
    /// Plan over an explicit transformation-rule graph.
    GraphPlanning,
    /// Plan from a natural-language task description.
    QueryPlanning,
    /// Recover the rule graph from a narrative.
    ExtractGraph,
    /// Turn a rule graph into a narrative.
    GenerateQuery,
}

impl fmt::Display for TemplateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            TemplateKind::GraphPlanning => "graph_planning",
            TemplateKind::QueryPlanning => "query_planning",
            TemplateKind::ExtractGraph => "extract_graph",
            TemplateKind::GenerateQuery => "generate_query",
        };
        f.write_str(name)
    }
}

/// A template body plus its kind. `body` uses `{name}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub kind: TemplateKind,
    pub body: String,
}

/// Worked example: a small rule graph and its expected plan, shown before the
/// real task in the graph-planning prompt.
pub const GRAPH_PLANNING_EXAMPLE: &str =
    include_str!("../../assets/examples/graph_planning_example.txt");

/// Worked example: a narrative description of a nine-rule project graph.
pub const QUERY_EXAMPLE: &str = include_str!("../../assets/examples/query_example.txt");

/// The rule graph behind [`QUERY_EXAMPLE`], in the loose JSON the narrative
/// prompts expect models to emit (single-quoted keys and a trailing comma
/// included; the lenient parser accepts it as-is).
pub const QUERY_EXAMPLE_PLAN: &str = include_str!("../../assets/examples/query_example_plan.txt");

impl PromptTemplate {
    /// The checked-in template of the given kind.
    pub fn builtin(kind: TemplateKind) -> PromptTemplate {
        let body = match kind {
            TemplateKind::GraphPlanning => include_str!("../../assets/prompts/graph_planning.txt"),
            TemplateKind::QueryPlanning => include_str!("../../assets/prompts/query_planning.txt"),
            TemplateKind::ExtractGraph => include_str!("../../assets/prompts/extract_graph.txt"),
            TemplateKind::GenerateQuery => include_str!("../../assets/prompts/generate_query.txt"),
        };
        PromptTemplate {
            kind,
            body: body.to_string(),
        }
    }
}

/// A placeholder in the template body had no binding.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("template has no binding for placeholder {{{name}}}")]
pub struct MissingBinding {
    pub name: String,
}

/// Substitute `{name}` placeholders from `bindings` into the template body.
///
/// Placeholders are runs of `[a-z_]` in braces; all other text, including any
/// braces that do not fit that shape, is copied verbatim. Every placeholder
/// must be bound. Rendering the same inputs twice gives identical output.
pub fn render_prompt(
    template: &PromptTemplate,
    bindings: &BTreeMap<&str, String>,
) -> Result<String, MissingBinding> {
    let body = template.body.as_str();
    let mut out = String::with_capacity(body.len());
    let mut rest = body;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let name_len = after
            .bytes()
            .take_while(|b| b.is_ascii_lowercase() || *b == b'_')
            .count();
        if name_len > 0 && after[name_len..].starts_with('}') {
            let name = &after[..name_len];
            match bindings.get(name) {
                Some(value) => out.push_str(value),
                None => {
                    return Err(MissingBinding {
                        name: name.to_string(),
                    })
                }
            }
            rest = &after[name_len + 1..];
        } else {
            out.push('{');
            rest = after;
        }
    }
    out.push_str(rest);
    Ok(out)
}

/// Graph-planning prompt for `graph`, with the worked example filled in.
///
/// The graph appears in the prompt as its pretty JSON, byte for byte; dataset
/// records and the evaluation harness both rely on that.
pub fn planning_prompt(graph: &TaskGraph) -> String {
    let template = PromptTemplate::builtin(TemplateKind::GraphPlanning);
    let bindings = BTreeMap::from([
        ("graph_planning_example", GRAPH_PLANNING_EXAMPLE.to_string()),
        ("task", graph.to_pretty_json()),
    ]);
    render_prompt(&template, &bindings).expect("builtin template bindings are complete")
}

/// Query-planning prompt: plan directly from the narrative `query`.
pub fn query_planning_prompt(query: &str) -> String {
    let template = PromptTemplate::builtin(TemplateKind::QueryPlanning);
    let bindings = BTreeMap::from([
        ("query_example", QUERY_EXAMPLE.to_string()),
        ("query_example_plan", QUERY_EXAMPLE_PLAN.to_string()),
        ("task", query.to_string()),
    ]);
    render_prompt(&template, &bindings).expect("builtin template bindings are complete")
}

/// Extraction prompt: recover the rule graph from the narrative `query`.
pub fn extract_prompt(query: &str) -> String {
    let template = PromptTemplate::builtin(TemplateKind::ExtractGraph);
    let bindings = BTreeMap::from([
        ("query_example", QUERY_EXAMPLE.to_string()),
        ("query_example_plan", QUERY_EXAMPLE_PLAN.to_string()),
        ("task", query.to_string()),
    ]);
    render_prompt(&template, &bindings).expect("builtin template bindings are complete")
}

/// Narrative-generation prompt: turn `graph` into a story.
pub fn generate_query_prompt(graph: &TaskGraph) -> String {
    let template = PromptTemplate::builtin(TemplateKind::GenerateQuery);
    let bindings = BTreeMap::from([
        ("query_example", QUERY_EXAMPLE.to_string()),
        ("query_example_plan", QUERY_EXAMPLE_PLAN.to_string()),
        ("task", graph.to_pretty_json()),
    ]);
    render_prompt(&template, &bindings).expect("builtin template bindings are complete")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::example_graph;

    #[test]
    fn builtin_bodies_match_assets() {
        for (kind, path) in [
            (TemplateKind::GraphPlanning, "assets/prompts/graph_planning.txt"),
            (TemplateKind::QueryPlanning, "assets/prompts/query_planning.txt"),
            (TemplateKind::ExtractGraph, "assets/prompts/extract_graph.txt"),
            (TemplateKind::GenerateQuery, "assets/prompts/generate_query.txt"),
        ] {
            let on_disk = std::fs::read_to_string(
                std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join(path),
            )
            .unwrap();
            assert_eq!(PromptTemplate::builtin(kind).body, on_disk, "{kind}");
        }
    }

    #[test]
    fn planning_prompt_embeds_graph_json_verbatim() {
        let graph = example_graph();
        let prompt = planning_prompt(&graph);
        assert!(prompt.contains(&graph.to_pretty_json()));
        assert!(prompt.contains(GRAPH_PLANNING_EXAMPLE));
        // No placeholder survives rendering.
        assert!(!prompt.contains("{task}"));
        assert!(!prompt.contains("{graph_planning_example}"));
    }

    #[test]
    fn rendering_is_pure() {
        let graph = example_graph();
        assert_eq!(planning_prompt(&graph), planning_prompt(&graph));
        assert_eq!(
            extract_prompt("a story"),
            extract_prompt("a story"),
        );
    }

    #[test]
    fn unbound_placeholder_is_an_error() {
        let template = PromptTemplate::builtin(TemplateKind::GraphPlanning);
        let bindings = BTreeMap::from([("graph_planning_example", String::new())]);
        let err = render_prompt(&template, &bindings).unwrap_err();
        assert_eq!(err.name, "task");
    }

    #[test]
    fn substituted_text_is_not_rescanned() {
        let template = PromptTemplate {
            kind: TemplateKind::GraphPlanning,
            body: "before {task} after".to_string(),
        };
        let bindings = BTreeMap::from([("task", "{graph_planning_example}".to_string())]);
        let rendered = render_prompt(&template, &bindings).unwrap();
        assert_eq!(rendered, "before {graph_planning_example} after");
    }

    #[test]
    fn non_placeholder_braces_pass_through() {
        let template = PromptTemplate {
            kind: TemplateKind::GraphPlanning,
            body: "json like {\"a\": 1} and {Mixed} and {task}".to_string(),
        };
        let bindings = BTreeMap::from([("task", "T".to_string())]);
        assert_eq!(
            render_prompt(&template, &bindings).unwrap(),
            "json like {\"a\": 1} and {Mixed} and T"
        );
    }

    #[test]
    fn all_four_flows_render() {
        let graph = example_graph();
        assert!(query_planning_prompt("do the thing").contains("do the thing"));
        assert!(extract_prompt("a story").contains(QUERY_EXAMPLE));
        assert!(generate_query_prompt(&graph).contains(&graph.to_pretty_json()));
    }
}
