use chrono::{Duration, NaiveDate, NaiveDateTime};
use medagent_core::agent::{run_session, Limits, Outcome, RulePolicy};
use medagent_core::goldens::Family;
use medagent_core::health::{
    check_vitals, directives_to_reminders, due_reminders, generate_report, parse_prescription,
    reminders_for, schedule_reminders, soft_sos_query, AlertEvent, BloodPressure, DayData, Metric,
    MetricStats, Reminder, ReminderStatus, VitalsMonitor, VitalsSample, VitalsThresholds,
};
use medagent_core::memory::MemoryStore;
use medagent_core::toolbox::{load_default_registry, World};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

fn at(h: u32, m: u32) -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2025, 2, 1).unwrap().and_hms_opt(h, m, 0).unwrap()
}

fn sample(ts: NaiveDateTime, hr: u32, o2: u32, bp: Option<(u32, u32)>) -> VitalsSample {
    VitalsSample {
        timestamp: ts,
        heart_rate: hr,
        oxygen: o2,
        sleep: None,
        blood_pressure: bp.map(|(systolic, diastolic)| BloodPressure { systolic, diastolic }),
    }
}

#[test]
fn vitals_verdicts_match_per_metric_comparison() {
    let t = VitalsThresholds::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10_000 {
        let bp = rng.gen_bool(0.5).then(|| (rng.gen_range(70..190), rng.gen_range(40..110)));
        let s = sample(at(8, 0), rng.gen_range(20..200), rng.gen_range(70..=100), bp);
        let mut expected = Vec::new();
        if s.heart_rate < 60 || s.heart_rate > 100 {
            expected.push(Metric::HeartRate);
        }
        if s.oxygen < 95 {
            expected.push(Metric::Oxygen);
        }
        if let Some((sys, dia)) = bp {
            if !(90..=140).contains(&sys) {
                expected.push(Metric::Systolic);
            }
            if !(60..=90).contains(&dia) {
                expected.push(Metric::Diastolic);
            }
        }
        let got: Vec<Metric> = check_vitals(&s, &t).iter().map(|a| a.metric).collect();
        assert_eq!(got, expected, "{s:?}");
    }
}

#[test]
fn soft_sos_message_and_cooldown() {
    let s = sample(at(8, 11), 41, 85, None);
    assert_eq!(soft_sos_query(&s), "Soft SOS triggered. Abnormal Vitals: {'oxygen': 85, 'heart_rate': 41}");
    let monitor = VitalsMonitor::default();
    assert!(monitor.ingest("PKFG301655", &s).soft_sos());
    assert!(!monitor.ingest("PKFG301655", &sample(at(8, 30), 41, 85, None)).soft_sos());
    assert!(monitor.ingest("PKFG301655", &sample(at(8, 41), 41, 85, None)).soft_sos());
    assert!(monitor.ingest("BLTA888285", &sample(at(8, 31), 41, 85, None)).soft_sos());
    assert!(!monitor.ingest("BLTA888285", &sample(at(8, 32), 70, 98, None)).soft_sos());
}

#[test]
fn soft_sos_session_only_alerts() {
    let g = Family::SoftSos.golden();
    let mut world = World::from_trajectory(&g);
    let run = run_session(
        &soft_sos_query(&sample(at(8, 11), 41, 85, None)),
        g.user_details().unwrap().clone(),
        &mut world,
        &load_default_registry(),
        &RulePolicy::default(),
        Limits::default(),
    );
    assert_eq!(run.outcome, Outcome::Completed);
    assert!(world.messages().is_empty());
    assert!(world.assigned_ambulance("PKFG301655").is_none());
    assert_eq!(world.notifications().len(), 1);
    assert!(world.notifications()[0].message.contains("Heart Rate: 41 bps\nOxygen: 85"));
}

#[derive(Deserialize)]
struct Labelled {
    text: String,
    directives: Vec<LabelledDirective>,
    unparsed: Vec<String>,
}

#[derive(Deserialize)]
struct LabelledDirective {
    medicine_name: String,
    dose: String,
    frequency: u32,
    duration_days: u32,
    times: Vec<String>,
}

fn corpus() -> Vec<Labelled> {
    serde_json::from_str(include_str!("fixtures/prescriptions.json")).unwrap()
}

#[test]
fn prescription_corpus_matches_labels() {
    let corpus = corpus();
    assert_eq!(corpus.len(), 20);
    for (i, case) in corpus.iter().enumerate() {
        let got = parse_prescription(&case.text).unwrap();
        assert_eq!(got.unparsed, case.unparsed, "case {i}");
        assert_eq!(got.directives.len(), case.directives.len(), "case {i}");
        for (d, want) in got.directives.iter().zip(&case.directives) {
            assert_eq!(d.medicine_name, want.medicine_name, "case {i}");
            assert_eq!(d.dose, want.dose, "case {i}");
            assert_eq!(d.frequency, want.frequency, "case {i}");
            assert_eq!(d.duration_days, want.duration_days, "case {i}");
            let times: Vec<String> = d.times.iter().map(|t| t.format("%H:%M").to_string()).collect();
            assert_eq!(times, want.times, "case {i}");
            assert_eq!(d.times.len() as u32, d.frequency);
        }
    }
}

#[test]
fn reminder_counts_match_nested_expansion() {
    let start = NaiveDate::from_ymd_opt(2025, 2, 1).unwrap();
    for case in corpus() {
        let ds = parse_prescription(&case.text).unwrap().directives;
        let rs = directives_to_reminders("JICC571413", &ds, start);
        let mut expected = 0;
        for d in &ds {
            for _day in 0..d.duration_days {
                for _t in &d.times {
                    expected += 1;
                }
            }
        }
        assert_eq!(rs.len(), expected);
        for r in &rs {
            let d = ds.iter().find(|d| d.medicine_name == r.medicine_name).unwrap();
            assert!(r.fire_at.date() >= start);
            assert!(r.fire_at.date() < start + Duration::days(d.duration_days.into()));
        }
    }
}

#[test]
fn due_reminders_match_a_linear_filter() {
    let store = MemoryStore::in_memory();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let base = at(0, 0);
    let rs: Vec<Reminder> = (0..1000)
        .map(|i| Reminder {
            user_id: if i % 2 == 0 { "JICC571413" } else { "BLTA888285" }.into(),
            medicine_name: format!("m{i}"),
            dose: String::new(),
            fire_at: base + Duration::minutes(rng.gen_range(0..(3 * 24 * 60))),
            status: ReminderStatus::Pending,
        })
        .collect();
    schedule_reminders(&store, &rs).unwrap();
    let mut fired_total = 0;
    for hours in [0, 5, 17, 30, 30, 48, 80] {
        let now = base + Duration::hours(hours);
        let before = reminders_for(&store, None);
        let expected: Vec<String> = before
            .iter()
            .filter(|r| r.reminder.status == ReminderStatus::Pending && r.reminder.fire_at <= now)
            .map(|r| r.reminder.medicine_name.clone())
            .collect();
        let got: Vec<String> = due_reminders(now, &store, None).unwrap().into_iter().map(|r| r.reminder.medicine_name).collect();
        assert_eq!(got, expected);
        fired_total += got.len();
        let all = reminders_for(&store, None);
        assert_eq!(all.len(), 1000);
        assert_eq!(all.iter().filter(|r| r.reminder.status == ReminderStatus::Fired).count(), fired_total);
    }
    assert_eq!(fired_total, 1000);
    let empty = MemoryStore::in_memory();
    assert!(due_reminders(base, &empty, None).unwrap().is_empty());
}

#[test]
fn report_stats_match_a_recount() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let vitals: Vec<VitalsSample> = (0..200)
        .map(|i| {
            let bp = (i % 3 == 0).then(|| (rng.gen_range(90..150), rng.gen_range(55..95)));
            sample(at(0, 0) + Duration::minutes(i * 7), rng.gen_range(40..140), rng.gen_range(80..=100), bp)
        })
        .collect();
    let day = DayData {
        user_id: "JICC571413".into(),
        alerts: vec![AlertEvent { at: at(9, 0), metrics: vec![Metric::Oxygen], query: "Soft SOS triggered.".into() }],
        vitals: vitals.clone(),
        ..Default::default()
    };
    let date = at(0, 0).date();
    let report = generate_report(&day, date, None);
    assert_eq!(report.anomalies.len(), 1);
    for m in Metric::ALL {
        let vals: Vec<f64> = vitals
            .iter()
            .filter(|s| s.timestamp.date() == date)
            .filter_map(|s| match m {
                Metric::HeartRate => Some(s.heart_rate),
                Metric::Oxygen => Some(s.oxygen),
                Metric::Systolic => s.blood_pressure.map(|b| b.systolic),
                Metric::Diastolic => s.blood_pressure.map(|b| b.diastolic),
            })
            .map(f64::from)
            .collect();
        let stats: &MetricStats = &report.vitals[&m];
        assert_eq!(stats.count, vals.len());
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for v in &vals {
            lo = lo.min(*v);
            hi = hi.max(*v);
            sum += v;
        }
        assert_eq!(f64::from(stats.min), lo);
        assert_eq!(f64::from(stats.max), hi);
        assert!((stats.mean - sum / vals.len() as f64).abs() < 1e-9);
    }
}
