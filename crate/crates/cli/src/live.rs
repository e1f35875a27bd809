use std::time::Duration;

use serde_json::{json, Value};
use tabletask_core::taskgen::{BackendError, CompletionBackend};

use crate::config::TaskgenConfig;

/// Chat-completions client for an OpenAI-compatible endpoint.
pub struct LiveBackend {
    agent: ureq::Agent,
    url: String,
    model: String,
    api_key: Option<String>,
    timeout_secs: u64,
}

impl LiveBackend {
    pub fn new(base_url: &str, model: &str, api_key: Option<String>, timeout_secs: u64) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(timeout_secs)))
            .build()
            .into();
        Self {
            agent,
            url: format!("{}/chat/completions", base_url.trim_end_matches('/')),
            model: model.to_string(),
            api_key,
            timeout_secs,
        }
    }

    /// Endpoint, model and key from the environment variables named in `cfg`.
    pub fn from_env(cfg: &TaskgenConfig, env: impl Fn(&str) -> Option<String>) -> Result<Self, BackendError> {
        let need = |name: &str| env(name).ok_or_else(|| BackendError::Unavailable(format!("{name} is not set")));
        let base = need(&cfg.base_url_env)?;
        let model = need(&cfg.model_env)?;
        Ok(Self::new(&base, &model, env(&cfg.api_key_env), cfg.timeout_secs))
    }
}

impl CompletionBackend for LiveBackend {
    fn complete(&mut self, prompt: &str) -> Result<String, BackendError> {
        let body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0.0,
        });
        let mut req = self.agent.post(&self.url);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| match e {
            ureq::Error::Timeout(_) => BackendError::Timeout(self.timeout_secs),
            other => BackendError::Transport(other.to_string()),
        })?;
        let value: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| BackendError::Transport(format!("unreadable response: {e}")))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| BackendError::Transport("response has no choices[0].message.content".into()))
    }
}
