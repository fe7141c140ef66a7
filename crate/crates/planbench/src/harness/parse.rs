//! Pulling structured answers out of free-form model responses.
//!
//! Responses rarely arrive as clean JSON: they come wrapped in code fences,
//! preceded by reasoning, sometimes with single-quoted keys or trailing
//! commas. The approach here is to scan for balanced bracket spans, try them
//! from the last one backwards, and run each candidate through a small
//! JSON-dialect normalizer before decoding.

use thiserror::Error;

use crate::graph::{GraphError, TaskGraph};
use crate::plan::{Plan, SubPlan};

/// Why a response could not be decoded.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no well-formed JSON {0} found in the response")]
    NoJsonFound(&'static str),
    #[error("response JSON does not fit the expected schema: {0}")]
    SchemaMismatch(String),
    #[error("extracted graph violates an invariant: {0}")]
    InvariantViolation(#[from] GraphError),
}

/// Balanced `open`..`close` spans in `text`, in order of closing position.
///
/// Brackets inside double-quoted strings do not count, and backslash escapes
/// are honored. Single quotes are deliberately not string delimiters here: a
/// prose apostrophe ("it's") would otherwise swallow everything after it.
/// Loose single-quoted strings are the normalizer's problem, and they only
/// matter once a span is already in hand. Unclosed opens are dropped; nested
/// spans are all reported.
fn balanced_spans(text: &str, open: u8, close: u8) -> Vec<&str> {
    let bytes = text.as_bytes();
    let mut spans = Vec::new();
    let mut starts: Vec<usize> = Vec::new();
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate() {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            _ if b == open => starts.push(i),
            _ if b == close => {
                if let Some(start) = starts.pop() {
                    spans.push(&text[start..=i]);
                }
            }
            _ => {}
        }
    }
    spans
}

/// Rewrite a loose JSON dialect into strict JSON.
///
/// Handles exactly two deviations seen in practice: single-quoted strings
/// (rewritten to double-quoted, with embedded `"` escaped) and trailing
/// commas before `]` or `}` (dropped). Everything else, numbers included,
/// passes through byte for byte.
fn normalize_lenient(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    let mut in_string: Option<char> = None;
    while let Some(c) = chars.next() {
        match in_string {
            Some(quote) => match c {
                '\\' => {
                    let next = chars.next();
                    if quote == '\'' && next == Some('\'') {
                        // \' is only meaningful inside single quotes.
                        out.push('\'');
                    } else {
                        out.push('\\');
                        if let Some(n) = next {
                            out.push(n);
                        }
                    }
                }
                '"' if quote == '\'' => out.push_str("\\\""),
                _ if c == quote => {
                    out.push('"');
                    in_string = None;
                }
                _ => out.push(c),
            },
            None => match c {
                '"' | '\'' => {
                    out.push('"');
                    in_string = Some(c);
                }
                ',' => {
                    // Peek past whitespace: a comma directly before a closer
                    // is the trailing-comma idiom and gets dropped.
                    let mut lookahead = chars.clone();
                    let mut ws = String::new();
                    loop {
                        match lookahead.peek() {
                            Some(&w) if w.is_whitespace() => {
                                ws.push(w);
                                lookahead.next();
                            }
                            Some(&']') | Some(&'}') => break,
                            _ => {
                                out.push(',');
                                break;
                            }
                        }
                    }
                    out.push_str(&ws);
                    for _ in 0..ws.chars().count() {
                        chars.next();
                    }
                }
                _ => out.push(c),
            },
        }
    }
    out
}

/// The last span (by closing position) that normalizes to well-formed JSON.
fn last_json_span(text: &str, open: u8, close: u8) -> Option<serde_json::Value> {
    balanced_spans(text, open, close)
        .into_iter()
        .rev()
        .find_map(|span| serde_json::from_str(&normalize_lenient(span)).ok())
}

/// Decode the last well-formed JSON array in `text` as a [`Plan`].
///
/// The array is located whether it sits bare, inside code fences, or nested
/// in a wrapper object. Schema problems in that array are reported, not
/// papered over by falling back to an earlier array. Graph-level soundness
/// (do the steps match rules, are sources available) is the evaluator's job;
/// this only guarantees shape.
pub fn parse_plan(text: &str) -> Result<Plan, ParseError> {
    let value = last_json_span(text, b'[', b']').ok_or(ParseError::NoJsonFound("array"))?;
    let elements = value
        .as_array()
        .expect("span starting with '[' parses to an array")
        .clone();
    let mut subtasks = Vec::with_capacity(elements.len());
    for (i, element) in elements.into_iter().enumerate() {
        let sub: SubPlan = serde_json::from_value(element)
            .map_err(|e| ParseError::SchemaMismatch(format!("element {i}: {e}")))?;
        subtasks.push(sub);
    }
    Ok(Plan::new(subtasks))
}

/// Decode the last well-formed JSON object in `text` as a [`TaskGraph`].
///
/// Unlike [`parse_plan`], the full graph invariants are checked here:
/// an extraction that decodes but describes a cyclic or unachievable graph
/// is reported as a violation rather than silently repaired.
pub fn parse_extracted_graph(text: &str) -> Result<TaskGraph, ParseError> {
    let value = last_json_span(text, b'{', b'}').ok_or(ParseError::NoJsonFound("object"))?;
    let graph: TaskGraph =
        serde_json::from_value(value).map_err(|e| ParseError::SchemaMismatch(e.to_string()))?;
    graph.validate()?;
    Ok(graph)
}
