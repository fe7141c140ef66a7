//! Model evaluation harness: prompts, endpoint access, response parsing,
//! and the pipelines that tie them to the evaluator.

pub mod endpoint;
pub mod eval;
pub mod parse;
pub mod prompt;
pub mod query;
pub mod similarity;
pub mod stub;

pub use endpoint::{
    ChatModel, ConfigError, EndpointError, HttpChatModel, ModelEndpointConfig, RetryPolicy,
};
pub use eval::{run_eval, EvalCase, EvalError, EvalOutcome, Pipeline, ResponseRecord, VerdictRecord};
pub use parse::{parse_extracted_graph, parse_plan, ParseError};
pub use prompt::{
    extract_prompt, generate_query_prompt, planning_prompt, query_planning_prompt, render_prompt,
    PromptTemplate, TemplateKind,
};
pub use query::{generate_query, AllRoundsFailed, GeneratedQuery, QueryOptions, QueryRound};
pub use similarity::{graph_similarity, graph_similarity_weighted, SimilarityWeights};
