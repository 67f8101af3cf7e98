//! Scenario sampling and episode generation.
//!
//! Every episode draws from its own ChaCha stream keyed by (seed, family,
//! index), so batches can be generated in any order or in parallel and still
//! come out identical.

use std::sync::OnceLock;

use chrono::{Duration, NaiveDate, NaiveDateTime, NaiveTime};
use medagent_core::agent::rules::{choose_specialization, symptom_phrases, RulePolicy};
use medagent_core::agent::{run_session, Limits, Outcome, PolicyBackend, PolicyError, Role};
use medagent_core::calendar::{Slot, TimeRange};
use medagent_core::catalog::Disease;
use medagent_core::goldens::Family;
use medagent_core::health::{soft_sos_query, BloodPressure, SleepMinutes, VitalsSample};
use medagent_core::memory::{MemoryStore, PastComplaint};
use medagent_core::toolbox::{
    load_default_registry, Ambulance, CallContext, ExecOutcome, GeoPoint, Specialist, ToolError,
    UserProfile, World,
};
use medagent_core::trajectory::{State, Trajectory, UserDetails, UserId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::EnhancementConfig;
use crate::template::UseCaseTemplate;

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("generation backend failed after {attempts} attempts: {last}")]
    BackendFailure { attempts: usize, last: String },
    #[error("tool call failed during generation: {0}")]
    Tool(#[from] ToolError),
    #[error("policy asked an unanticipated question: {0}")]
    Unanswered(String),
    #[error("episode did not reach <END> within {0} planner steps")]
    Incomplete(usize),
    #[error("could not seed the world: {0}")]
    World(String),
}

const BACKEND_ATTEMPTS: usize = 3;

pub fn family_index(f: Family) -> u64 {
    Family::ALL.iter().position(|x| *x == f).unwrap_or(0) as u64
}

/// The random stream for one (family, index) slot.
pub fn stream(seed: u64, family: Family, index: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream((family_index(family) << 48) | index);
    rng
}

const SCENARIO: u64 = 1;

pub fn random_user_id(rng: &mut impl Rng) -> String {
    let mut s: String = (0..4).map(|_| rng.gen_range(b'A'..=b'Z') as char).collect();
    s.push_str(&format!("{:06}", rng.gen_range(0..1_000_000)));
    s
}

pub fn random_phone(rng: &mut impl Rng, digits: usize) -> String {
    let mut s = String::from("+");
    s.push(char::from(b'1' + rng.gen_range(0..9)));
    for _ in 1..digits {
        s.push(char::from(b'0' + rng.gen_range(0..10)));
    }
    s
}

pub fn random_name(rng: &mut impl Rng, cfg: &EnhancementConfig) -> String {
    format!(
        "{} {}",
        cfg.first_names.choose(rng).expect("validated pool"),
        cfg.last_names.choose(rng).expect("validated pool")
    )
}

fn random_date(rng: &mut impl Rng, from: NaiveDate, to: NaiveDate) -> NaiveDate {
    let span = (to - from).num_days().max(0);
    from + Duration::days(rng.gen_range(0..=span))
}

fn coordinate(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo..hi) * 10_000.0).round() / 10_000.0
}

fn title_case(s: &str) -> String {
    s.split(' ')
        .map(|w| {
            let mut c = w.chars();
            c.next().map_or_else(String::new, |f| f.to_uppercase().chain(c).collect())
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn join_list(items: &[&str]) -> String {
    match items {
        [] => String::new(),
        [one] => one.to_string(),
        [rest @ .., last] => format!("{} and {last}", rest.join(", ")),
    }
}

const COMPLAINT_TEMPLATES: &[&str] = &[
    "I've been feeling {} for the past few days.",
    "For a while now I've had {}.",
    "I have {} and it's getting worse.",
    "Lately I've been dealing with {}. It's hard to get through the day.",
    "I woke up with {} this morning.",
    "Since last week I've noticed {}.",
];

const DIET_REQUESTS: &[&str] = &[
    "I want help managing what I eat.",
    "Could you help me plan a better diet?",
    "I think I need a meal plan that suits me.",
    "I'd like advice on my eating habits.",
];

const VAGUE_QUERIES: &[&str] = &[
    "I've been having some trouble with my movement lately.",
    "I just don't feel like myself these days.",
    "Something feels off with my body recently.",
    "I'm not feeling right and I can't explain it.",
    "I've been out of sorts for a while now.",
    "My health has been bothering me lately.",
];

const VAGUE_ANSWERS: &[&str] = &[
    "It's hard to put into words, I just don't feel right.",
    "I'm not sure how to describe it.",
    "It comes and goes, I can't really say.",
];

const SYMPTOM_ANSWERS: &[&str] = &["I've noticed {}.", "Mostly {}.", "I keep getting {}.", "There's {} most days."];

const YES: &[&str] = &["Yes, please", "Yes, that works for me.", "Sure, book it.", "Okay, go ahead.", "Yes, please book it."];

const NO: &[&str] = &[
    "No, not at this time.",
    "No thanks, I'll wait and see.",
    "Not right now, thank you.",
    "No, I'd rather not book anything yet.",
];

/// Phrases without recognizable symptoms, checked once against the extractor.
fn vague(pool: &'static [&'static str]) -> Vec<&'static str> {
    pool.iter().copied().filter(|q| symptom_phrases(q).is_empty()).collect()
}

fn vague_queries() -> &'static [&'static str] {
    static CELL: OnceLock<Vec<&'static str>> = OnceLock::new();
    CELL.get_or_init(|| vague(VAGUE_QUERIES))
}

fn vague_answers() -> &'static [&'static str] {
    static CELL: OnceLock<Vec<&'static str>> = OnceLock::new();
    CELL.get_or_init(|| vague(VAGUE_ANSWERS))
}

/// A seeded episode start: who asks what, and the world they ask it in.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub family: Family,
    pub details: UserDetails,
    pub query: String,
    pub world: World,
    pub disease: Option<&'static Disease>,
}

fn pick_symptoms<'a>(rng: &mut impl Rng, d: &'a Disease) -> Vec<&'a str> {
    let k = rng.gen_range(2..=d.symptoms.len().min(4));
    let mut s: Vec<&str> = d.symptoms.choose_multiple(rng, k).copied().collect();
    s.shuffle(rng);
    s
}

fn fill(rng: &mut impl Rng, pool: &[&str], list: &str) -> String {
    pool.choose(rng).expect("non-empty pool").replacen("{}", list, 1)
}

pub fn sample_scenario(family: Family, cfg: &EnhancementConfig, index: u64) -> Result<Scenario, GenerateError> {
    let mut rng = stream(cfg.seed, family, index, SCENARIO);
    let date = random_date(&mut rng, cfg.earliest, cfg.latest);
    let now = date.and_time(NaiveTime::from_hms_opt(rng.gen_range(6..22), rng.gen_range(0..60), 0).expect("valid time"));
    let user_id = random_user_id(&mut rng);
    let name = random_name(&mut rng, cfg);
    let location = GeoPoint::new(coordinate(&mut rng, -50.0, 60.0), coordinate(&mut rng, -170.0, 170.0));
    let contacts = (0..rng.gen_range(1..=2)).map(|_| random_phone(&mut rng, 11)).collect();
    let mut world = World::new(now, MemoryStore::in_memory());
    world
        .add_user(UserProfile {
            user_id: user_id.clone(),
            name: name.clone(),
            phone_no: Some(random_phone(&mut rng, 11)),
            location,
            emergency_contacts: contacts,
        })
        .map_err(|e| GenerateError::World(e.to_string()))?;
    let details = UserDetails::new(UserId::parse(&user_id).map_err(|e| GenerateError::World(e.to_string()))?, name, now);

    let (query, disease) = match family {
        Family::SoftSos => (soft_sos_query(&abnormal_sample(&mut rng, now)), None),
        Family::HardSosStart => {
            for _ in 0..rng.gen_range(2..=4) {
                let a = ambulance(&mut rng, location);
                world.add_ambulance(a);
            }
            ("Hard SOS triggered".to_string(), None)
        }
        Family::HardSosEnd => {
            let assigned = ambulance(&mut rng, location);
            let id = assigned.ambulance_id.clone();
            world.add_ambulance(assigned);
            for _ in 0..rng.gen_range(0..=2) {
                let a = ambulance(&mut rng, location);
                world.add_ambulance(a);
            }
            world.assign_ambulance(&user_id, &id);
            ("End SOS triggered".to_string(), None)
        }
        _ => appointment(&mut rng, family, cfg, &mut world, &user_id, now)?,
    };
    Ok(Scenario { family, details, query, world, disease })
}

fn abnormal_sample(rng: &mut impl Rng, at: NaiveDateTime) -> VitalsSample {
    let (hr_bad, o2_bad) = match rng.gen_range(0..3) {
        0 => (true, false),
        1 => (false, true),
        _ => (true, true),
    };
    let heart_rate = if !hr_bad {
        rng.gen_range(60..=100)
    } else if rng.gen_bool(0.5) {
        rng.gen_range(30..60)
    } else {
        rng.gen_range(101..170)
    };
    let oxygen = if o2_bad { rng.gen_range(80..95) } else { rng.gen_range(95..=100) };
    let sleep = rng.gen_bool(0.5).then(|| SleepMinutes {
        deep: rng.gen_range(20..120),
        light: rng.gen_range(120..300),
        rem: rng.gen_range(30..120),
        awake: rng.gen_range(5..60),
    });
    let blood_pressure = rng
        .gen_bool(0.3)
        .then(|| BloodPressure { systolic: rng.gen_range(85..160), diastolic: rng.gen_range(55..100) });
    VitalsSample { timestamp: at, heart_rate, oxygen, sleep, blood_pressure }
}

fn ambulance(rng: &mut impl Rng, near: GeoPoint) -> Ambulance {
    const ALNUM: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";
    let suffix: String = (0..4).map(|_| ALNUM[rng.gen_range(0..ALNUM.len())] as char).collect();
    Ambulance {
        ambulance_id: format!("AMB{suffix}"),
        phone_no: random_phone(rng, 12),
        location: GeoPoint::new(
            coordinate(rng, near.latitude - 0.3, near.latitude + 0.3),
            coordinate(rng, near.longitude - 0.3, near.longitude + 0.3),
        ),
    }
}

fn specialist(rng: &mut impl Rng, cfg: &EnhancementConfig, specialization: &str, today: NaiveDate) -> Specialist {
    let mut slots: Vec<Slot> = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let date = today + Duration::days(rng.gen_range(1..=cfg.window_days));
        let start = NaiveTime::from_hms_opt(rng.gen_range(8..=17), if rng.gen_bool(0.5) { 30 } else { 0 }, 0)
            .expect("valid time");
        let slot = Slot::new(date, TimeRange::new(start, start + Duration::minutes(30)));
        if !slots.contains(&slot) {
            slots.push(slot);
        }
    }
    Specialist {
        specialist_id: random_user_id(rng),
        name: format!("Dr. {} ({})", random_name(rng, cfg), title_case(specialization)),
        specialization: specialization.to_string(),
        slots,
    }
}

fn appointment(
    rng: &mut ChaCha8Rng,
    family: Family,
    cfg: &EnhancementConfig,
    world: &mut World,
    user_id: &str,
    now: NaiveDateTime,
) -> Result<(String, Option<&'static Disease>), GenerateError> {
    let pool: Vec<&'static Disease> = cfg.diseases().iter().filter(|d| family != Family::Dietician || d.dietary).collect();
    let disease = *pool.choose(rng).expect("catalog has dietary diseases");
    let symptoms = pick_symptoms(rng, disease);
    let complaint = fill(rng, COMPLAINT_TEMPLATES, &join_list(&symptoms));

    // the text the policy will read before choosing a specialization
    let (query, conversation) = match family {
        Family::Counter => {
            let query = vague_queries().choose(rng).expect("vague queries").to_string();
            let mut conversation = query.clone();
            if rng.gen_bool(0.3) {
                let a = vague_answers().choose(rng).expect("vague answers").to_string();
                conversation.push_str(". ");
                conversation.push_str(&a);
                world.push_user_answer(json!({ "user": a }));
            }
            let a = fill(rng, SYMPTOM_ANSWERS, &join_list(&symptoms));
            conversation.push_str(". ");
            conversation.push_str(&a);
            world.push_user_answer(json!({ "user": a }));
            (query, conversation)
        }
        Family::Dietician => {
            let q = format!("{complaint} {}", DIET_REQUESTS.choose(rng).expect("diet requests"));
            (q.clone(), q)
        }
        _ => (complaint.clone(), complaint),
    };
    let answer = if family == Family::Negative { NO } else { YES };
    world.push_user_answer(Value::String(answer.choose(rng).expect("answers").to_string()));

    let wanted = choose_specialization(&conversation, &symptom_phrases(&conversation));
    let today = now.date();
    world.add_specialist(specialist(rng, cfg, &wanted, today));
    let mut others: Vec<&str> = cfg.diseases().iter().map(|d| d.specialization).filter(|s| *s != wanted).collect();
    others.sort_unstable();
    others.dedup();
    for spec in others.choose_multiple(rng, 2).copied().collect::<Vec<_>>() {
        world.add_specialist(specialist(rng, cfg, spec, today));
    }

    if rng.gen_bool(0.6) {
        let k = rng.gen_range(1..=2.min(symptoms.len()));
        let text = match k {
            1 => format!("mild {}", symptoms[0]),
            _ => format!("{} and {}", symptoms[0], symptoms[1]),
        };
        let date = today - Duration::days(rng.gen_range(7..=cfg.history_days));
        world
            .memory()
            .store_past_complaint(user_id, &PastComplaint { date, symptoms: text })
            .map_err(|e| GenerateError::World(e.to_string()))?;
    }
    if rng.gen_bool(0.3) {
        let other = cfg.diseases().choose(rng).expect("catalog");
        let date = today - Duration::days(rng.gen_range(7..=cfg.history_days));
        world
            .memory()
            .store_past_complaint(user_id, &PastComplaint { date, symptoms: other.symptoms[0].to_string() })
            .map_err(|e| GenerateError::World(e.to_string()))?;
    }
    Ok((query, Some(disease)))
}

/// Runs the offline rule policy over the scenario's world.
pub fn run_skeleton(scenario: Scenario, limits: &Limits) -> Result<Trajectory, GenerateError> {
    let Scenario { family, details, query, mut world, .. } = scenario;
    let policy = RulePolicy::default();
    let ctx = CallContext { user_id: details.user_id.to_string(), now: details.timestamp };
    let mut t = Trajectory::new(details);
    t.push(State::user(query));
    for _ in 0..limits.step_budget {
        let d = policy.decide(&t.states);
        let terminal = d.step.is_terminal();
        t.push(State::planner(d.step));
        if terminal {
            break;
        }
        let call = d.call.expect("non-terminal decisions carry a call");
        t.push(State::caller(call.clone()));
        match world.execute(&call, &ctx)? {
            ExecOutcome::Observation(v) => t.push(State::observation(v)),
            ExecOutcome::AwaitUser { question } => return Err(GenerateError::Unanswered(question)),
        }
    }
    if !t.is_complete() {
        return Err(GenerateError::Incomplete(limits.step_budget));
    }
    t.extra.insert("family".into(), Value::String(family.as_str().into()));
    Ok(t)
}

/// Puts the template's reference episode in front of every prompt.
struct OneShot<'a> {
    inner: &'a dyn PolicyBackend,
    example: &'a str,
}

impl PolicyBackend for OneShot<'_> {
    fn complete(&self, prompt: &str, role: Role) -> Result<String, PolicyError> {
        let with_example = match prompt.find("\n### user\n") {
            Some(at) => format!("{}\n### example\n{}{}", &prompt[..at], self.example, &prompt[at..]),
            None => prompt.to_string(),
        };
        self.inner.complete(&with_example, role)
    }
}

pub fn generate_trajectory(
    template: &UseCaseTemplate,
    cfg: &EnhancementConfig,
    index: u64,
    backend: Option<&dyn PolicyBackend>,
) -> Result<Trajectory, GenerateError> {
    let scenario = sample_scenario(template.family, cfg, index)?;
    let limits = Limits::default();
    let Some(backend) = backend else {
        return run_skeleton(scenario, &limits);
    };
    let policy = OneShot { inner: backend, example: &template.example };
    let registry = load_default_registry();
    let mut last = String::new();
    for _ in 0..BACKEND_ATTEMPTS {
        let mut world = scenario.world.clone();
        let run = run_session(&scenario.query, scenario.details.clone(), &mut world, &registry, &policy, limits);
        match run.outcome {
            Outcome::Completed => {
                let mut t = run.trajectory;
                t.extra.insert("family".into(), Value::String(template.family.as_str().into()));
                return Ok(t);
            }
            other => last = format!("{other:?}"),
        }
    }
    Err(GenerateError::BackendFailure { attempts: BACKEND_ATTEMPTS, last })
}

/// Family recorded on a generated episode, if any.
pub fn family_of(t: &Trajectory) -> Option<Family> {
    t.extra.get("family")?.as_str()?.parse().ok()
}
