//! Counter-action generation: the rule backend over the verb lexicon and
//! an optional HTTP client for LLM-served counter-actions.
//!
//! Whatever the backend, the canonical counter-action form is
//! "<participle> by" with no leading "be"; a leading "be " returned by an
//! LLM is stripped before use.

use serde::{Deserialize, Serialize};
use std::time::Duration;

use super::lexicon::VerbLexicon;
use super::TextError;

/// How counter-actions are produced.
pub enum CounterActionBackend {
    /// Built-in morphology: irregular-participle table plus regular
    /// inflection heuristics.
    Rules,
    /// Remote LLM behind an HTTP endpoint.
    Llm(LlmClient),
}

/// Endpoint settings for the LLM backend.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LlmConfig {
    pub url: String,
    pub timeout_ms: u64,
    pub retries: u32,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            url: "http://127.0.0.1:8601/counter-action".to_string(),
            timeout_ms: 5_000,
            retries: 1,
        }
    }
}

/// HTTP client that posts `{"prompt": ...}` and expects `{"answer": ...}`.
pub struct LlmClient {
    config: LlmConfig,
    agent: ureq::Agent,
}

#[derive(Serialize)]
struct PromptBody<'a> {
    prompt: &'a str,
}

#[derive(Deserialize)]
struct AnswerBody {
    answer: String,
}

impl LlmClient {
    pub fn new(config: LlmConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .build()
            .into();
        Self { config, agent }
    }

    /// The two-shot question template sent to the model, with `{relation}`
    /// substituted.
    pub fn prompt_for(relation: &str) -> String {
        format!(
            "Question: Given the action 'ride', please generate its corresponding counter-action.\n\
             Answer: 'be ridden by'.\n\
             Question: Given the action 'eat', please generate its corresponding counter-action.\n\
             Answer: 'be eaten by'.\n\
             Question: Given the action '{relation}', please generate its corresponding counter-action.\n\
             Answer:"
        )
    }

    /// Ask the endpoint for the counter-action of `verb`, retrying up to
    /// the configured count before giving up.
    pub fn counter_action(&self, verb: &str) -> Result<String, TextError> {
        let prompt = Self::prompt_for(verb);
        let mut last_error = String::new();
        for _ in 0..=self.config.retries {
            match self.request(&prompt) {
                Ok(answer) => return Ok(normalize_answer(&answer)),
                Err(e) => last_error = e,
            }
        }
        Err(TextError::LlmUnavailable {
            url: self.config.url.clone(),
            reason: last_error,
        })
    }

    fn request(&self, prompt: &str) -> Result<String, String> {
        let mut response = self
            .agent
            .post(&self.config.url)
            .send_json(PromptBody { prompt })
            .map_err(|e| e.to_string())?;
        let body: AnswerBody = response
            .body_mut()
            .read_json()
            .map_err(|e| e.to_string())?;
        Ok(body.answer)
    }
}

/// Strip quotes, a trailing period, and a leading "be " from a raw LLM
/// answer, yielding the canonical "<participle> by" form.
fn normalize_answer(raw: &str) -> String {
    let mut s = raw.trim();
    s = s.trim_matches(|c| matches!(c, '\'' | '"' | '`' | '.'));
    let s = s.trim();
    let s = s.strip_prefix("be ").unwrap_or(s);
    s.to_lowercase()
}

/// Counter-action of `verb` through the chosen backend. The rule backend is
/// deterministic and never fails; the LLM backend may return
/// [`TextError::LlmUnavailable`], after which callers may retry with rules.
pub fn counter_action(verb: &str, backend: &CounterActionBackend) -> Result<String, TextError> {
    match backend {
        CounterActionBackend::Rules => Ok(VerbLexicon::builtin().counter_action(verb)),
        CounterActionBackend::Llm(client) => client.counter_action(verb),
    }
}
