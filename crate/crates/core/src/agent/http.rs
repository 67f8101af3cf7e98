use std::time::Duration;

use serde_json::{json, Value};

use super::{PolicyBackend, PolicyError, Role};

pub const MODEL_URL_ENV: &str = "MEDAGENT_MODEL_URL";

/// Remote text-completion backend. Sends `{"prompt", "role", "max_tokens"}`
/// as JSON and accepts `{"text": ...}`, an OpenAI-style `choices` array, or
/// a plain-text body.
#[derive(Debug, Clone)]
pub struct HttpPolicy {
    url: String,
    max_tokens: usize,
    client: reqwest::blocking::Client,
}

impl HttpPolicy {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Result<Self, PolicyError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| PolicyError::Backend(e.to_string()))?;
        Ok(Self { url: url.into(), max_tokens: 512, client })
    }

    /// Reads the endpoint from `MEDAGENT_MODEL_URL`.
    pub fn from_env(timeout: Duration) -> Result<Self, PolicyError> {
        let url = std::env::var(MODEL_URL_ENV)
            .map_err(|_| PolicyError::Backend(format!("{MODEL_URL_ENV} is not set")))?;
        Self::new(url, timeout)
    }

    pub fn with_max_tokens(mut self, n: usize) -> Self {
        self.max_tokens = n;
        self
    }
}

fn extract_text(body: &str) -> String {
    let Ok(v) = serde_json::from_str::<Value>(body) else { return body.to_string() };
    let choice = v.pointer("/choices/0");
    v.get("text")
        .or_else(|| choice.and_then(|c| c.get("text")))
        .or_else(|| choice.and_then(|c| c.pointer("/message/content")))
        .and_then(Value::as_str)
        .map_or_else(|| body.to_string(), str::to_string)
}

impl PolicyBackend for HttpPolicy {
    fn complete(&self, prompt: &str, role: Role) -> Result<String, PolicyError> {
        let req = json!({"prompt": prompt, "role": role.as_str(), "max_tokens": self.max_tokens});
        let resp = self
            .client
            .post(&self.url)
            .header("content-type", "application/json")
            .body(req.to_string())
            .send()
            .map_err(|e| if e.is_timeout() { PolicyError::Timeout } else { PolicyError::Backend(e.to_string()) })?;
        let status = resp.status();
        let body = resp.text().map_err(|e| {
            if e.is_timeout() {
                PolicyError::Timeout
            } else {
                PolicyError::Backend(e.to_string())
            }
        })?;
        if !status.is_success() {
            return Err(PolicyError::Backend(format!("HTTP {status}: {body}")));
        }
        Ok(extract_text(&body))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn response_shapes() {
        assert_eq!(extract_text(r#"{"text":"<action>x</action>"}"#), "<action>x</action>");
        assert_eq!(extract_text(r#"{"choices":[{"text":"a"}]}"#), "a");
        assert_eq!(extract_text(r#"{"choices":[{"message":{"content":"b"}}]}"#), "b");
        assert_eq!(extract_text("<reason>r</reason>"), "<reason>r</reason>");
    }

    #[test]
    fn unreachable_endpoint_is_an_error() {
        let p = HttpPolicy::new("http://127.0.0.1:9/complete", Duration::from_millis(300)).unwrap();
        assert!(p.complete("### role: planner", Role::Planner).is_err());
    }
}
