//! Walks the release criteria in order and prints a PASS/FAIL line for
//! each. Runs without the libtest harness so the lines always show.

#[path = "../../core/tests/support/strategies.rs"]
mod strategies;
#[path = "../../core/tests/support/validation.rs"]
#[allow(dead_code)]
mod validation;
#[path = "../../core/tests/support/world.rs"]
mod world_support;
#[path = "../../eval/tests/support/oracle.rs"]
mod oracle;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use chrono::{NaiveDate, NaiveDateTime};
use http_body_util::BodyExt;
use medagent_core::agent::{run_session, Limits, Outcome, PolicyBackend, RulePolicy, ScriptedPolicy};
use medagent_core::goldens::Family;
use medagent_core::memory::{Collection, MemoryStore};
use medagent_core::toolbox::{load_default_registry, validate_call, CallContext, ExecOutcome, World, WorldFixture};
use medagent_core::trajectory::{
    parse_caller_output, parse_planner_output, parse_trajectory, render_caller_output, render_planner_output,
    serialize_trajectory, StateKind, ToolCall, Trajectory,
};
use medagent_datagen::{entity_consistency, generate_trajectory, interleave, run_family, EnhancementConfig, PipelineOptions, UseCaseTemplate};
use medagent_eval::{bleu, call_accuracy, evaluate_samples, rouge_l, rouge_n, EvalSample, MetricConfig};
use medagent_gateway::config::DEMO_WORLD;
use medagent_gateway::{replay_file, router, ManualClock, Policies, Service, ServiceOptions, SessionKind};
use proptest::test_runner::{Config as ProptestConfig, TestRunner};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use tower::ServiceExt;

type Criterion = (&'static str, fn() -> String);

fn main() -> std::process::ExitCode {
    // `cargo test -- <filter>` passes arguments through; honour a filter on
    // the target name so unrelated filtered runs skip the slow criteria.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return std::process::ExitCode::SUCCESS;
    }
    std::panic::set_hook(Box::new(|_| {}));
    let criteria: [Criterion; 7] = [
        ("golden replay", golden_replay),
        ("fixed-sequence metrics", fixed_sequence_metrics),
        ("metric oracle", metric_oracle),
        ("datagen invariants at scale", datagen_at_scale),
        ("tool-world conformance", tool_conformance),
        ("service end to end", service_e2e),
        ("parser round trip", parser_round_trip),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        match catch_unwind(AssertUnwindSafe(check)) {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", i + 1),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("FAIL [{}] {name}: {msg}", i + 1);
                failed.push(*name);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed.len(), criteria.len());
    if failed.is_empty() {
        std::process::ExitCode::SUCCESS
    } else {
        std::process::ExitCode::FAILURE
    }
}

fn goldens_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/goldens")
}

fn golden_replay() -> String {
    let started = Instant::now();
    let reg = load_default_registry();
    for f in Family::ALL {
        let g = f.golden();
        let mut world = World::from_trajectory(&g);
        let run = run_session(
            g.query().unwrap(),
            g.user_details().unwrap().clone(),
            &mut world,
            &reg,
            &ScriptedPolicy::for_family(f),
            Limits::default(),
        );
        assert_eq!(run.outcome, Outcome::Completed, "{}", f.as_str());
        assert_eq!(run.trajectory.states, g.states, "{} differs from its golden", f.as_str());
    }
    let mut files = 0;
    for entry in std::fs::read_dir(goldens_dir()).unwrap() {
        let path = entry.unwrap().path();
        let report = replay_file(&path).unwrap();
        assert!(report.is_identical(), "{}: {report}", path.display());
        files += 1;
    }
    assert_eq!(files, 7);
    let took = started.elapsed();
    assert!(took < Duration::from_secs(5), "took {took:?}");
    format!("7 families through run_session and 7 files through replay, identical, in {took:.2?}")
}

fn fixed_sequence_metrics() -> String {
    let reg = load_default_registry();
    let mut preds = Vec::new();
    let mut golds = Vec::new();
    for f in [Family::SoftSos, Family::HardSosStart, Family::HardSosEnd] {
        let policy = ScriptedPolicy::for_family(f);
        for s in interleave(&f.golden(), &reg, 11) {
            preds.push(policy.complete(&s.input, s.role).unwrap());
            golds.push(EvalSample { role: s.role, family: s.family, output: s.output });
        }
    }
    let report = evaluate_samples(&preds, &golds, &MetricConfig::default()).unwrap();
    assert!(!report.rows.is_empty());
    for r in &report.rows {
        assert!((r.bleu - 100.0).abs() <= 1e-6, "{} {} bleu {}", r.role, r.category, r.bleu);
        for (m, v) in [("rouge1", r.rouge1), ("rouge2", r.rouge2), ("rouge_l", r.rouge_l)] {
            assert_eq!(v, 1.0, "{} {} {m}", r.role, r.category);
        }
        for (m, v) in [("tool_acc", r.tool_acc), ("param_acc", r.param_acc), ("values_acc", r.values_acc)] {
            if let Some(v) = v {
                assert_eq!(v, 1.0, "{} {} {m}", r.role, r.category);
            }
        }
    }
    let caller_rows = report.rows.iter().filter(|r| r.tool_acc.is_some()).count();
    assert!(caller_rows > 0, "no caller rows were scored");
    format!("{} samples over {} rows score BLEU 100 and 1.0 elsewhere", preds.len(), report.rows.len())
}

const VOCAB: &[&str] = &["the", "user", "fever", "cough", "book", "slot", "Dr.", "at", "11:00", "yes", "no", "a", "b"];

fn metric_oracle() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cfg = MetricConfig::default();
    let text = |rng: &mut ChaCha8Rng| {
        let n = rng.gen_range(0..14);
        (0..n).map(|_| *VOCAB.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
    };
    let (mut cs, mut rs) = (Vec::new(), Vec::new());
    for _ in 0..100 {
        let (c, r) = (text(&mut rng), text(&mut rng));
        for n in 1..=2 {
            assert!((rouge_n(&c, &r, n) - oracle::rouge_n(&c, &r, n)).abs() < 1e-9, "rouge{n}: {c} | {r}");
        }
        assert!((rouge_l(&c, &r) - oracle::rouge_l(&c, &r)).abs() < 1e-9, "rougeL: {c} | {r}");
        let one = bleu(&[c.clone()], &[r.clone()], &cfg).unwrap();
        assert!((one - oracle::bleu(&[c.clone()], &[r.clone()])).abs() < 1e-9, "bleu: {c} | {r}");
        cs.push(c);
        rs.push(r);
    }
    assert!((bleu(&cs, &rs, &cfg).unwrap() - oracle::bleu(&cs, &rs)).abs() < 1e-9);

    assert_eq!(rouge_l("a b c d", "a c d e"), 0.75);
    let call = |tool: &str| ToolCall::new(tool).with("user_id", "JICC571413").with("message", "hi");
    let golds = vec![call("notify_user"), call("notify_user"), call("save_appointment_history"), call("notify_user")];
    let mut preds: Vec<Option<ToolCall>> = golds.iter().cloned().map(Some).collect();
    preds[2] = Some(call("notify_user"));
    let acc = call_accuracy(&preds, &golds).unwrap();
    assert_eq!((acc.tool, acc.params, acc.values), (0.75, 0.75, 0.75));

    "100 random pairs agree with the oracle to 1e-9; RougeL 0.75 and gated 0.75 fixtures exact. \
     The per-family reference scores need a fine-tuned 7B model and are not reproduced; \
     this oracle suite stands in for them"
        .into()
}

/// Appointment dates a caller state commits to, in `HH:MM-HH:MM, DD/MM/YYYY`.
fn call_date(call: &ToolCall) -> Option<NaiveDate> {
    let s = call.param_str("appointment_time_date")?;
    let (_, date) = s.split_once(',')?;
    let date = date.trim();
    let short_year = date.rsplit('/').next()?.len() == 2;
    NaiveDate::parse_from_str(date, if short_year { "%d/%m/%y" } else { "%d/%m/%Y" }).ok()
}

fn temporal_ok(t: &Trajectory, window: i64) -> Result<(), String> {
    let today = t.user_details().ok_or("no user details")?.timestamp.date();
    let upcoming = |d: NaiveDate| d > today && (d - today).num_days() <= window;
    for (c, o) in t.call_observations() {
        match (c.tool.as_str(), o) {
            ("retrieve_past_complaints", Some(o)) => {
                for rec in o.as_array().ok_or("complaints are not a list")? {
                    let d: NaiveDate = rec["date"].as_str().and_then(|s| s.parse().ok()).ok_or("undated complaint")?;
                    if d >= today {
                        return Err(format!("complaint on {d} is not before {today}"));
                    }
                }
            }
            ("get_available_specialists", Some(o)) => {
                let d: NaiveDate =
                    o["available_slot"]["date"].as_str().and_then(|s| s.parse().ok()).ok_or("undated slot")?;
                if !upcoming(d) {
                    return Err(format!("offered {d} outside ({today}, +{window}d]"));
                }
            }
            _ => {}
        }
        if c.param("appointment_time_date").is_some() {
            let d = call_date(c).ok_or("unreadable appointment date")?;
            if !upcoming(d) {
                return Err(format!("booked {d} outside ({today}, +{window}d]"));
            }
        }
    }
    Ok(())
}

fn datagen_at_scale() -> String {
    const PER_FAMILY: u64 = 10_000;
    let started = Instant::now();
    let reg = load_default_registry();
    let cfg = EnhancementConfig::with_seed(7);
    let mut total = 0;
    for f in Family::ALL {
        let batch = run_family(f, &cfg, PER_FAMILY, &reg, None, PipelineOptions::default());
        assert!(batch.rejected.is_empty(), "{}: {} rejected, first: {:?}", f.as_str(), batch.rejected.len(), batch.rejected.first());
        assert_eq!(batch.accepted.len() as u64, PER_FAMILY);
        let template = UseCaseTemplate::for_family(f);
        batch.accepted.par_iter().enumerate().for_each(|(i, t)| {
            temporal_ok(t, cfg.window_days).unwrap_or_else(|e| panic!("{} #{i}: {e}", f.as_str()));
            let original = generate_trajectory(&template, &cfg, i as u64, None).unwrap();
            entity_consistency(&original, t).unwrap_or_else(|e| panic!("{} #{i}: {e}", f.as_str()));
            let samples = interleave(t, &reg, i as u64);
            let planner = samples.iter().filter(|s| s.role == medagent_core::agent::Role::Planner).count();
            let caller = samples.iter().filter(|s| s.role == medagent_core::agent::Role::Caller).count();
            assert_eq!((planner, caller), (t.count(StateKind::Planner), t.count(StateKind::Caller)), "{} #{i}", f.as_str());
        });
        total += batch.accepted.len();
    }
    let took = started.elapsed();
    assert!(took < Duration::from_secs(120), "took {took:?}");
    format!("{total} episodes verified clean with temporal, entity and interleave checks in {took:.1?}")
}

fn tool_conformance() -> String {
    let reg = load_default_registry();
    assert_eq!(reg.names().len(), 13);
    let u = "JICC571413";
    let ctx = |user: &str| CallContext {
        user_id: user.into(),
        now: NaiveDateTime::parse_from_str("2024-09-02T10:57:00", "%Y-%m-%dT%H:%M:%S").unwrap(),
    };
    let mut w = world_support::world();
    let mut seen = Vec::new();
    for call in world_support::conformance_calls(u) {
        let declared = &reg.lookup(&call.tool).unwrap().returns.ty;
        match w.execute(&call, &ctx(u)).unwrap() {
            ExecOutcome::Observation(v) => assert!(world_support::shaped_as(declared, &v), "{} returned {v}", call.tool),
            other => panic!("{}: {other:?}", call.tool),
        }
        seen.push(call.tool);
    }
    w.push_user_answer("Yes, please");
    let ask = ToolCall::new("get_input_from_user").with("user_id", u).with("questions", "Book it?");
    match w.execute(&ask, &ctx(u)).unwrap() {
        ExecOutcome::Observation(v) => assert!(world_support::shaped_as(&reg.lookup("get_input_from_user").unwrap().returns.ty, &v)),
        other => panic!("get_input_from_user: {other:?}"),
    }
    seen.push(ask.tool);
    seen.sort();
    seen.dedup();
    assert_eq!(seen.len(), 13);

    let mut w = world_support::world();
    let book = |user: &str| {
        ToolCall::new("confirm_appointment")
            .with("user_id", user)
            .with("specialist_id", "AECJ317777")
            .with("appointment_time_date", "11:00-11:30, 30/11/2024")
    };
    assert_eq!(w.execute(&book(u), &ctx(u)).unwrap(), ExecOutcome::Observation(json!(true)));
    assert!(w.execute(&book("EORZ618635"), &ctx("EORZ618635")).is_err(), "double booking accepted");
    let end = ToolCall::new("get_assigned_ambulance").with("user_id", "EORZ618635");
    assert!(w.execute(&end, &ctx("EORZ618635")).is_err(), "hard end without start accepted");

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..10_000 {
        let call = validation::random_call(&mut rng, &reg);
        let report = validate_call(&call, &reg);
        match validation::expected(&call, &reg) {
            None => assert!(!report.tool_known),
            Some(want) => assert_eq!(validation::reported(&report), want, "{call:?}"),
        }
    }
    "13 tools shaped as declared; double booking and orphan SOS end refused; 10000 validations match".into()
}

async fn send(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn service_e2e() -> String {
    let store = MemoryStore::in_memory();
    let world = WorldFixture::parse(DEMO_WORLD).unwrap().build(store.clone()).unwrap();
    let clock = Arc::new(ManualClock::new(
        NaiveDateTime::parse_from_str("2024-09-02T10:57:00", "%Y-%m-%dT%H:%M:%S").unwrap(),
    ));
    let policies = Policies::new(Arc::new(RulePolicy::default()))
        .with(SessionKind::Chat, Arc::new(ScriptedPolicy::for_family(Family::General)));
    let svc = Arc::new(Service::new(world, policies, clock.clone(), ServiceOptions::default()));
    let app = router(svc);
    let u = "JICC571413";
    let symptoms_before = store.scan(Collection::Symptoms, Some(u), None).len();
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    rt.block_on(async {
        let query = Family::General.golden().query().unwrap().to_string();
        let (s, v) = send(&app, Method::POST, "/chat", Some(json!({"user_id": u, "text": query}))).await;
        assert_eq!(s, StatusCode::OK, "{v}");
        assert_eq!(v["status"], "awaiting_user");
        assert!(v["question"].as_str().unwrap().ends_with("Would you like to schedule an appointment?"));
        let (s, v) = send(&app, Method::POST, "/chat", Some(json!({"user_id": u, "text": "Yes, please"}))).await;
        assert_eq!((s, v["status"].as_str()), (StatusCode::OK, Some("completed")));
        assert_eq!(store.appointment_history(u).len(), 1);
        assert_eq!(store.scan(Collection::Symptoms, Some(u), None).len(), symptoms_before + 1);
        let (_, notes) = send(&app, Method::GET, &format!("/notifications?user_id={u}"), None).await;
        assert_eq!(notes.as_array().unwrap().len(), 1);

        clock.set(NaiveDateTime::parse_from_str("2025-02-01T08:11:00", "%Y-%m-%dT%H:%M:%S").unwrap());
        let body = json!({"user_id": "PKFG301655", "oxygen": 85, "heart_rate": 41});
        let (s, v) = send(&app, Method::POST, "/vitals", Some(body)).await;
        assert_eq!(s, StatusCode::OK, "{v}");
        assert_eq!(v["soft_sos"]["kind"], "soft_sos");
        assert_eq!(v["soft_sos"]["status"], "completed");
        let (_, msgs) = send(&app, Method::GET, "/messages", None).await;
        assert_eq!(msgs, json!([]), "soft SOS must not send SMS");
    });
    "booking suspends, resumes on yes, stores 1 appointment, 1 symptom record, 1 notification; vitals alert sends no SMS".into()
}

fn parser_round_trip() -> String {
    let mut runner =
        TestRunner::new(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() });
    runner
        .run(&strategies::trajectory(), |t| {
            proptest::prop_assert_eq!(parse_trajectory(&serialize_trajectory(&t)).unwrap(), t);
            Ok(())
        })
        .unwrap();
    runner
        .run(&strategies::step(), |s| {
            proptest::prop_assert_eq!(parse_planner_output(&render_planner_output(&s)).unwrap(), s);
            Ok(())
        })
        .unwrap();
    runner
        .run(&strategies::call(), |c| {
            proptest::prop_assert_eq!(parse_caller_output(&render_caller_output(&c)).unwrap(), c);
            Ok(())
        })
        .unwrap();
    "1000 trajectories, 1000 planner steps and 1000 calls round-trip".into()
}
