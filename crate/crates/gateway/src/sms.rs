use std::time::Duration;

use medagent_core::toolbox::{DeliveryAck, SmsGateway};
use serde::Deserialize;
use serde_json::json;

/// Posts `{"phone_no", "text"}` to a relay that does the actual delivery.
/// The relay may answer with `{"reference": "..."}`.
#[derive(Debug, Clone)]
pub struct HttpSms {
    url: String,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct RelayReply {
    reference: Option<String>,
}

impl HttpSms {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Result<Self, String> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| e.to_string())?;
        Ok(Self { url: url.into(), client })
    }
}

impl SmsGateway for HttpSms {
    fn send(&self, phone_no: &str, text: &str) -> Result<DeliveryAck, String> {
        let resp = self
            .client
            .post(&self.url)
            .json(&json!({"phone_no": phone_no, "text": text}))
            .send()
            .map_err(|e| e.to_string())?;
        if !resp.status().is_success() {
            return Err(format!("relay answered {}", resp.status()));
        }
        let reference = resp.json::<RelayReply>().ok().and_then(|r| r.reference);
        Ok(DeliveryAck { delivered: true, reference })
    }
}
