use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use medagent_core::agent::{HttpPolicy, PolicyBackend, RulePolicy};
use medagent_core::memory::MemoryStore;
use medagent_core::toolbox::{MockSms, WorldFixture};
use medagent_core::trajectory::parse_timestamp;

use crate::clock::{Clock, OffsetClock, SystemClock};
use crate::service::{Policies, Service, ServiceOptions};
use crate::sms::HttpSms;

pub const DEMO_WORLD: &str = include_str!("../fixtures/demo_world.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SmsMode {
    /// Messages only go to the in-process message log.
    Mock,
    /// Messages are also posted to the relay at `--sms-url`.
    External,
}

/// Service settings. Every flag falls back to its environment variable.
#[derive(Debug, Clone, Args)]
pub struct Config {
    #[arg(long, env = "MEDAGENT_HOST", default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, env = "MEDAGENT_PORT", default_value_t = 8080)]
    pub port: u16,
    /// Long-term store file; in memory when unset.
    #[arg(long, env = "MEDAGENT_STORE")]
    pub store: Option<PathBuf>,
    /// Text-completion endpoint for the planner and caller. Without one the
    /// built-in rule policy drives sessions.
    #[arg(long, env = "MEDAGENT_MODEL_URL")]
    pub model_url: Option<String>,
    #[arg(long, env = "MEDAGENT_MODEL_TIMEOUT_SECS", default_value_t = 60)]
    pub model_timeout_secs: u64,
    #[arg(long, env = "MEDAGENT_SMS", value_enum, default_value = "mock")]
    pub sms: SmsMode,
    #[arg(long, env = "MEDAGENT_SMS_URL")]
    pub sms_url: Option<String>,
    /// World fixture with users, specialists and ambulances; a demo world
    /// is used when unset.
    #[arg(long, env = "MEDAGENT_WORLD")]
    pub world: Option<PathBuf>,
    /// `system`, or a start timestamp from which the clock runs on. Defaults
    /// to the fixture's clock.
    #[arg(long, env = "MEDAGENT_CLOCK")]
    pub clock: Option<String>,
    /// Seconds between reminder scheduler ticks.
    #[arg(long, env = "MEDAGENT_TICK_SECS", default_value_t = 30)]
    pub tick_secs: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            host: "127.0.0.1".into(),
            port: 8080,
            store: None,
            model_url: None,
            model_timeout_secs: 60,
            sms: SmsMode::Mock,
            sms_url: None,
            world: None,
            clock: None,
            tick_secs: 30,
        }
    }
}

impl Config {
    pub fn build_service(&self) -> anyhow::Result<Service> {
        let text = match &self.world {
            Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
            None => DEMO_WORLD.to_string(),
        };
        let fixture = WorldFixture::parse(&text)?;
        let store = match &self.store {
            Some(p) => MemoryStore::open(p).with_context(|| format!("opening store {}", p.display()))?,
            None => MemoryStore::in_memory(),
        };
        let world = fixture.build(store)?;
        let world = match (self.sms, &self.sms_url) {
            (SmsMode::Mock, _) => world.with_sms(Arc::new(MockSms)),
            (SmsMode::External, Some(url)) => {
                let sms = HttpSms::new(url, Duration::from_secs(10)).map_err(anyhow::Error::msg)?;
                world.with_sms(Arc::new(sms))
            }
            (SmsMode::External, None) => bail!("external SMS mode needs MEDAGENT_SMS_URL"),
        };
        let timeout = Duration::from_secs(self.model_timeout_secs);
        let model: Option<Arc<dyn PolicyBackend>> = match &self.model_url {
            Some(url) => Some(Arc::new(HttpPolicy::new(url.as_str(), timeout)?)),
            None => None,
        };
        let policy = model.clone().unwrap_or_else(|| Arc::new(RulePolicy::default()));
        let clock: Arc<dyn Clock> = match self.clock.as_deref() {
            Some("system") => Arc::new(SystemClock),
            Some(ts) => Arc::new(OffsetClock::starting_at(
                parse_timestamp(ts).with_context(|| format!("unreadable clock `{ts}`"))?,
            )),
            None => Arc::new(OffsetClock::starting_at(fixture.clock)),
        };
        let opts = ServiceOptions { report_backend: model, ..ServiceOptions::default() };
        Ok(Service::new(world, Policies::new(policy), clock, opts))
    }
}
