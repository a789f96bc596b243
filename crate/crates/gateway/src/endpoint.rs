//! Chat-style completion endpoint with retries and caching.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::cache::ResponseCache;
use crate::{Completion, CompletionModel, GatewayError, Query, Result};

/// Request and response field names, so one client fits several provider
/// schemas.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct WireFields {
    pub model: String,
    pub messages: String,
    pub temperature: String,
    pub role: String,
    pub content: String,
    pub user_role: String,
    /// JSON pointer to the generated text in the response body.
    pub response_text: String,
}

impl Default for WireFields {
    fn default() -> WireFields {
        WireFields {
            model: "model".into(),
            messages: "messages".into(),
            temperature: "temperature".into(),
            role: "role".into(),
            content: "content".into(),
            user_role: "user".into(),
            response_text: "/choices/0/message/content".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointConfig {
    /// Full URL the request is posted to.
    pub url: String,
    pub model: String,
    /// Environment variable holding the credential; no auth header if unset.
    pub credential_env: Option<String>,
    pub auth_header: String,
    pub auth_prefix: String,
    /// Always 0 for evaluation runs; any other value is rejected.
    pub temperature: f64,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub parallelism: usize,
    pub fields: WireFields,
    /// Extra top-level request fields, such as a token limit.
    pub extra: Map<String, Value>,
}

impl Default for EndpointConfig {
    fn default() -> EndpointConfig {
        EndpointConfig {
            url: String::new(),
            model: String::new(),
            credential_env: None,
            auth_header: "Authorization".into(),
            auth_prefix: "Bearer ".into(),
            temperature: 0.0,
            timeout_secs: 120,
            max_retries: 4,
            backoff_ms: 1000,
            parallelism: 4,
            fields: WireFields::default(),
            extra: Map::new(),
        }
    }
}

impl EndpointConfig {
    pub fn validate(&self) -> Result<()> {
        if self.url.is_empty() || self.model.is_empty() {
            return Err(GatewayError::Config("url and model are required".into()));
        }
        if self.temperature != 0.0 {
            return Err(GatewayError::Config(format!(
                "temperature must be 0, got {}",
                self.temperature
            )));
        }
        if self.parallelism == 0 {
            return Err(GatewayError::Config("parallelism must be positive".into()));
        }
        Ok(())
    }

    pub fn request_body(&self, prompt: &str) -> Value {
        let f = &self.fields;
        let mut body = self.extra.clone();
        body.insert(f.model.clone(), json!(self.model));
        body.insert(
            f.messages.clone(),
            json!([{ f.role.clone(): f.user_role.clone(), f.content.clone(): prompt }]),
        );
        body.insert(f.temperature.clone(), json!(self.temperature));
        Value::Object(body)
    }

    pub fn response_text(&self, body: &str) -> Result<String> {
        let v: Value = serde_json::from_str(body).map_err(|e| GatewayError::Response(e.to_string()))?;
        v.pointer(&self.fields.response_text)
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| GatewayError::Response(format!("no text at {}", self.fields.response_text)))
    }
}

/// One HTTP exchange: status and body, or a connection-level failure.
pub trait Transport: Send + Sync {
    fn post(
        &self,
        url: &str,
        headers: &[(String, String)],
        body: &Value,
        timeout: Duration,
    ) -> std::result::Result<(u16, String), String>;
}

#[derive(Debug, Default)]
pub struct UreqTransport;

impl Transport for UreqTransport {
    fn post(
        &self,
        url: &str,
        headers: &[(String, String)],
        body: &Value,
        timeout: Duration,
    ) -> std::result::Result<(u16, String), String> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let mut req = agent.post(url);
        for (k, v) in headers {
            req = req.header(k, v);
        }
        let mut resp = req.send_json(body).map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| e.to_string())?;
        Ok((status, text))
    }
}

fn retryable(status: u16) -> bool {
    status == 408 || status == 429 || status >= 500
}

pub struct HttpModel {
    cfg: EndpointConfig,
    credential: Option<String>,
    transport: Box<dyn Transport>,
    cache: Option<ResponseCache>,
}

impl HttpModel {
    /// Resolves the credential now, so a missing variable fails before any
    /// request is made.
    pub fn new(cfg: EndpointConfig, transport: Box<dyn Transport>, cache: Option<ResponseCache>) -> Result<HttpModel> {
        cfg.validate()?;
        let credential = match &cfg.credential_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                GatewayError::Credential(format!("environment variable {var} is not set"))
            })?),
            None => None,
        };
        Ok(HttpModel {
            cfg,
            credential,
            transport,
            cache,
        })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.cfg
    }

    fn headers(&self) -> Vec<(String, String)> {
        let mut h = vec![("Content-Type".to_string(), "application/json".to_string())];
        if let Some(c) = &self.credential {
            h.push((self.cfg.auth_header.clone(), format!("{}{c}", self.cfg.auth_prefix)));
        }
        h
    }

    /// Text for `prompt`, from the cache when present.
    pub fn complete_prompt(&self, prompt: &str) -> Result<Completion> {
        let start = Instant::now();
        let key = ResponseCache::key(prompt, &self.cfg.model, self.cfg.temperature);
        if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(&key)) {
            return Ok(Completion {
                text: hit.response,
                attempts: hit.attempts,
                latency_ms: start.elapsed().as_millis() as u64,
                cached: true,
            });
        }
        let body = self.cfg.request_body(prompt);
        let headers = self.headers();
        let timeout = Duration::from_secs(self.cfg.timeout_secs);
        let mut attempts = 0;
        let mut last_status = None;
        let mut last_message = String::new();
        while attempts <= self.cfg.max_retries {
            if attempts > 0 {
                let wait = self.cfg.backoff_ms.saturating_mul(1 << (attempts - 1).min(16));
                std::thread::sleep(Duration::from_millis(wait));
            }
            attempts += 1;
            match self.transport.post(&self.cfg.url, &headers, &body, timeout) {
                Ok((status, text)) if (200..300).contains(&status) => {
                    let out = self.cfg.response_text(&text)?;
                    if let Some(c) = &self.cache {
                        c.put(&self.cfg.model, self.cfg.temperature, prompt, &out, attempts)?;
                    }
                    return Ok(Completion {
                        text: out,
                        attempts,
                        latency_ms: start.elapsed().as_millis() as u64,
                        cached: false,
                    });
                }
                Ok((status @ (401 | 403), text)) => {
                    return Err(GatewayError::Credential(format!("status {status}: {text}")));
                }
                Ok((status, text)) => {
                    last_status = Some(status);
                    last_message = text;
                    if !retryable(status) {
                        break;
                    }
                }
                Err(e) => {
                    last_status = None;
                    last_message = e;
                }
            }
        }
        Err(GatewayError::Transport {
            status: last_status,
            attempts,
            message: last_message,
        })
    }
}

impl CompletionModel for HttpModel {
    fn model_id(&self) -> &str {
        &self.cfg.model
    }

    fn complete(&self, q: &Query<'_>) -> Result<Completion> {
        self.complete_prompt(q.prompt)
    }
}
