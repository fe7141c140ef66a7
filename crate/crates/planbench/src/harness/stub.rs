//! Local stand-ins for a chat endpoint.
//!
//! These exist so the whole pipeline can be exercised hermetically: the
//! oracle closes the loop with provably correct answers, the fixed and
//! scripted models inject arbitrary or staged responses.

use std::collections::VecDeque;
use std::sync::Mutex;

use super::endpoint::{ChatModel, EndpointError};
use super::parse::parse_extracted_graph;
use crate::solver::optimal_plan;

/// Answers planning prompts perfectly by solving the task graph embedded in
/// the prompt itself.
///
/// Works with prompts whose final JSON object is the task (the graph-planning
/// template has that shape). A run driven by this model is the upper
/// baseline: every metric pins to its ideal value.
pub struct OracleModel;

impl ChatModel for OracleModel {
    fn complete(&self, prompt: &str) -> Result<String, EndpointError> {
        let graph = parse_extracted_graph(prompt)
            .map_err(|e| EndpointError::BadResponse(format!("oracle found no task graph: {e}")))?;
        let solution = optimal_plan(&graph)
            .map_err(|e| EndpointError::BadResponse(format!("oracle could not solve: {e}")))?;
        Ok(format!(
            "```json\n{}\n```",
            solution.plan.to_pretty_json()
        ))
    }
}

/// Always returns the same text, whatever the prompt.
pub struct FixedModel {
    pub response: String,
}

impl FixedModel {
    pub fn new(response: impl Into<String>) -> FixedModel {
        FixedModel {
            response: response.into(),
        }
    }

    /// A model that never produces JSON; every case downstream fails to parse.
    pub fn garbage() -> FixedModel {
        FixedModel::new("Sorry, I can only describe the approach in prose, not produce a plan.")
    }
}

impl ChatModel for FixedModel {
    fn complete(&self, _prompt: &str) -> Result<String, EndpointError> {
        Ok(self.response.clone())
    }
}

/// Plays back a fixed sequence of responses, one per request, then errors.
pub struct ScriptedModel {
    responses: Mutex<VecDeque<String>>,
}

impl ScriptedModel {
    pub fn new(responses: impl IntoIterator<Item = impl Into<String>>) -> ScriptedModel {
        ScriptedModel {
            responses: Mutex::new(responses.into_iter().map(Into::into).collect()),
        }
    }

    pub fn remaining(&self) -> usize {
        self.responses.lock().expect("script lock").len()
    }
}

impl ChatModel for ScriptedModel {
    fn complete(&self, _prompt: &str) -> Result<String, EndpointError> {
        self.responses
            .lock()
            .expect("script lock")
            .pop_front()
            .ok_or_else(|| EndpointError::Transport("scripted responses exhausted".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::parse::parse_plan;
    use crate::harness::prompt::planning_prompt;
    use crate::plan::PlanScore;
    use crate::schedule::simulate;
    use crate::testutil::example_graph;

    #[test]
    fn oracle_answers_a_planning_prompt_optimally() {
        let graph = example_graph();
        let response = OracleModel.complete(&planning_prompt(&graph)).unwrap();
        let plan = parse_plan(&response).unwrap();
        let result = simulate(&graph, &plan).unwrap();
        assert_eq!(result.score(), PlanScore::new(7, 4));
    }

    #[test]
    fn oracle_rejects_promptless_garbage() {
        assert!(matches!(
            OracleModel.complete("no graph here"),
            Err(EndpointError::BadResponse(_))
        ));
    }

    #[test]
    fn scripted_model_plays_in_order_then_errors() {
        let model = ScriptedModel::new(["one", "two"]);
        assert_eq!(model.complete("x").unwrap(), "one");
        assert_eq!(model.complete("x").unwrap(), "two");
        assert!(matches!(
            model.complete("x"),
            Err(EndpointError::Transport(_))
        ));
        assert_eq!(model.remaining(), 0);
    }
}
