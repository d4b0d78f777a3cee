//! Chat-completions client backends.

use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::model::{SlideDoc, Status, TOKEN_BUDGET};

use super::prompt::{format_prompt, parse_response, Message};
use super::{Contributor, Role, RoleError, Reviewer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemoteModelConfig {
    pub endpoint: String,
    pub model: String,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub max_tokens: usize,
    pub temperature: f64,
    /// Extra attempts after an unparseable reply.
    pub repair_attempts: u32,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
}

impl Default for RemoteModelConfig {
    fn default() -> Self {
        RemoteModelConfig {
            endpoint: "http://127.0.0.1:8000/v1/chat/completions".into(),
            model: "slide-designer".into(),
            api_key: None,
            max_tokens: TOKEN_BUDGET,
            temperature: 0.0,
            repair_attempts: 2,
            timeout_secs: 120,
            max_in_flight: 4,
        }
    }
}

impl RemoteModelConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_tokens == 0 || self.max_tokens > TOKEN_BUDGET {
            return Err(format!("max_tokens {} must be in 1..={TOKEN_BUDGET}", self.max_tokens));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(format!("temperature {} must be >= 0", self.temperature));
        }
        if self.max_in_flight == 0 {
            return Err("max_in_flight must be at least 1".into());
        }
        if self.endpoint.is_empty() {
            return Err("endpoint is empty".into());
        }
        Ok(())
    }
}

/// Counting gate that caps concurrent requests.
#[derive(Debug)]
struct Gate {
    in_flight: Mutex<usize>,
    freed: Condvar,
    cap: usize,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().unwrap_or_else(|p| p.into_inner());
        while *n >= self.cap {
            n = self.freed.wait(n).unwrap_or_else(|p| p.into_inner());
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.in_flight.lock().unwrap_or_else(|p| p.into_inner());
        *n -= 1;
        self.0.freed.notify_one();
    }
}

#[derive(Debug)]
pub struct RemoteClient {
    config: RemoteModelConfig,
    http: reqwest::blocking::Client,
    gate: Gate,
}

impl RemoteClient {
    pub fn new(config: RemoteModelConfig) -> Result<Arc<Self>, RoleError> {
        config.validate().map_err(RoleError::Contract)?;
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| RoleError::Transport {
                message: e.to_string(),
                raw: None,
            })?;
        let cap = config.max_in_flight;
        Ok(Arc::new(RemoteClient {
            config,
            http,
            gate: Gate {
                in_flight: Mutex::new(0),
                freed: Condvar::new(),
                cap,
            },
        }))
    }

    pub fn config(&self) -> &RemoteModelConfig {
        &self.config
    }

    /// Sends one chat request and returns the first choice's text.
    pub fn complete(&self, messages: &[Message], seed: Option<u64>) -> Result<String, RoleError> {
        let mut body = json!({
            "model": self.config.model,
            "messages": messages,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        });
        if let Some(seed) = seed {
            body["seed"] = json!(seed);
            if self.config.temperature == 0.0 {
                body["temperature"] = json!(0.7);
            }
        }
        let _permit = self.gate.acquire();
        let mut req = self.http.post(&self.config.endpoint).json(&body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| RoleError::Transport {
            message: e.to_string(),
            raw: None,
        })?;
        let status = resp.status();
        let text = resp.text().map_err(|e| RoleError::Transport {
            message: e.to_string(),
            raw: None,
        })?;
        if !status.is_success() {
            return Err(RoleError::Transport {
                message: format!("endpoint answered {status}"),
                raw: Some(text),
            });
        }
        let parsed: Value = serde_json::from_str(&text).map_err(|e| RoleError::Transport {
            message: format!("response is not JSON: {e}"),
            raw: Some(text.clone()),
        })?;
        parsed
            .pointer("/choices/0/message/content")
            .or_else(|| parsed.pointer("/choices/0/text"))
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| RoleError::Transport {
                message: "response has no choices[0] content".into(),
                raw: Some(text),
            })
    }

    /// Asks for `role`'s answer on `doc`, retrying unparseable replies.
    fn ask(&self, role: Role, doc: &SlideDoc, seed: Option<u64>) -> Result<SlideDoc, RoleError> {
        let messages = format_prompt(role, doc)?;
        let mut last = None;
        for _ in 0..=self.config.repair_attempts {
            let text = self.complete(&messages, seed)?;
            match parse_response(role, &text) {
                Ok(doc) => return Ok(doc),
                Err(e) => last = Some(e),
            }
        }
        Err(last.expect("at least one attempt"))
    }
}

/// Reviewer that trusts only the statuses of the model's reply.
#[derive(Debug, Clone)]
pub struct RemoteReviewer(pub Arc<RemoteClient>);

impl Reviewer for RemoteReviewer {
    fn label(&self, doc: &SlideDoc) -> Result<SlideDoc, RoleError> {
        let reply = self.0.ask(Role::Reviewer, doc, None)?;
        let flagged: Vec<String> = reply.tentative_ids().into_iter().collect();
        Ok(doc.with_flags(&flagged))
    }
}

#[derive(Debug, Clone)]
pub struct RemoteContributor(pub Arc<RemoteClient>);

impl Contributor for RemoteContributor {
    fn revise(&self, doc: &SlideDoc, variant: u64) -> Result<SlideDoc, RoleError> {
        let seed = (variant != 0).then_some(variant);
        Ok(self.0.ask(Role::Contributor, doc, seed)?.with_status(Status::Final))
    }
}
