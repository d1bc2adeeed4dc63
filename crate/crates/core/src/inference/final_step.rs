use std::collections::BTreeMap;

use crate::error::Result;
use crate::gateway::{CompletionRequest, ModelGateway};
use crate::model::{FactSet, Prediction, Query, Verdict, VerdictMode};
use crate::paths::{parse_completion, parse_direct_answer, SplitterConfig};
use crate::prompts::PromptFixture;

/// Backend that turns supporting facts into the final answer.
#[derive(Debug, Clone, Copy)]
pub enum FinalBackend {
    /// Extractive/abstractive QA over the question and the joined facts.
    Qa,
    /// Chain-of-thought prompt whose answer is seeded with the facts.
    Completion {
        fixture: &'static PromptFixture,
        max_tokens: usize,
    },
}

/// Answer `query` from `facts` alone.
pub fn final_inference(
    gateway: &dyn ModelGateway,
    query: &Query,
    facts: &FactSet,
    backend: FinalBackend,
    mode: VerdictMode,
) -> Result<Verdict> {
    let prediction = match backend {
        FinalBackend::Qa => {
            let answer = gateway.answer(&query.text, &facts.joined())?;
            if answer.trim().is_empty() {
                Prediction::unparsed()
            } else {
                parse_direct_answer(&answer, query.task)
            }
        }
        FinalBackend::Completion { fixture, max_tokens } => {
            let mut prompt = fixture.render(query)?;
            if !facts.is_empty() {
                prompt.push(' ');
                prompt.push_str(&facts.joined());
            }
            let req = CompletionRequest::new(prompt, 1, 0.0, max_tokens)?;
            let text = gateway.complete(&req)?.into_iter().next().unwrap_or_default();
            let seeded = format!("{} {text}", facts.joined());
            parse_completion(&seeded, query.task, &SplitterConfig::default()).1
        }
    };
    let mut candidate_scores = BTreeMap::new();
    if prediction.is_parsed() {
        candidate_scores.insert(prediction.normalized.clone(), 1.0);
    }
    Ok(Verdict {
        prediction,
        candidate_scores,
        per_path: Vec::new(),
        mode,
        selected_path: None,
        facts: Some(facts.clone()),
    })
}
