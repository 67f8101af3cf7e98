use chrono::NaiveDate;
use medagent_core::goldens::Family;
use medagent_core::toolbox::load_default_registry;
use medagent_core::trajectory::{Payload, Trajectory};
use medagent_datagen::{
    count_entities, enhance, enhance_detailed, entity_consistency, generate_trajectory, verify_as,
    EnhanceError, EnhancementConfig, EntityClass, UseCaseTemplate, VerifyOptions,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn generated(f: Family, i: u64) -> Trajectory {
    generate_trajectory(&UseCaseTemplate::for_family(f), &EnhancementConfig::with_seed(21), i, None).unwrap()
}

#[test]
fn goldens_enhance_consistently() {
    let cfg = EnhancementConfig::with_seed(1);
    for f in Family::ALL {
        let g = f.golden();
        for s in 0..20 {
            let e = enhance(&g, &cfg, &mut ChaCha8Rng::seed_from_u64(s)).unwrap();
            entity_consistency(&g, &e).unwrap_or_else(|err| panic!("{f:?} seed {s}: {err}"));
            assert_eq!(count_entities(&g), count_entities(&e), "{f:?}");
            assert_eq!(g.states.len(), e.states.len());
        }
    }
}

#[test]
fn every_id_name_and_phone_changes() {
    let cfg = EnhancementConfig::with_seed(2);
    for f in Family::ALL {
        let g = generated(f, 3);
        let (_, r) = enhance_detailed(&g, &cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert!(!r.ids.is_empty() && !r.names.is_empty() && !r.dates.is_empty() && !r.times.is_empty());
        for (a, b) in r.ids.iter().chain(&r.names).chain(&r.phones) {
            assert_ne!(a, b);
        }
        for (a, b) in &r.phones {
            assert_eq!(a.len(), b.len());
        }
    }
}

#[test]
fn date_order_and_window_survive() {
    let cfg = EnhancementConfig::with_seed(3);
    let reg = load_default_registry();
    for f in Family::ALL {
        for i in 0..40 {
            let g = generated(f, i);
            let today = g.user_details().unwrap().timestamp.date();
            let (e, r) = enhance_detailed(&g, &cfg, &mut ChaCha8Rng::seed_from_u64(i)).unwrap();
            let new_today = e.user_details().unwrap().timestamp.date();
            assert_eq!(r.dates[&today], new_today);
            let pairs: Vec<(&NaiveDate, &NaiveDate)> = r.dates.iter().collect();
            for w in pairs.windows(2) {
                assert!(w[1].1 > w[0].1, "order broken: {w:?}");
            }
            for (old, new) in &r.dates {
                assert_eq!(old.cmp(&today), new.cmp(&new_today));
                if new > &new_today {
                    assert!((*new - new_today).num_days() <= cfg.window_days);
                }
            }
            let report = verify_as(&e, &reg, Some(f), VerifyOptions::default());
            assert!(report.is_clean(), "{f:?} {i}: {:?}", report.violations);
        }
    }
}

#[test]
fn slot_lengths_and_bounds_survive() {
    let cfg = EnhancementConfig::with_seed(4);
    for i in 0..60 {
        let g = generated(Family::General, i);
        let e = enhance(&g, &cfg, &mut ChaCha8Rng::seed_from_u64(i)).unwrap();
        let slot = e
            .calls()
            .find(|c| c.tool == "confirm_appointment")
            .and_then(|c| c.param_str("appointment_time_date"))
            .and_then(medagent_core::calendar::Slot::parse_call_format)
            .unwrap();
        assert_eq!(slot.time.minutes(), 30);
        let start = slot.time.start;
        assert!(start >= chrono::NaiveTime::from_hms_opt(7, 0, 0).unwrap());
        assert!(slot.time.end <= chrono::NaiveTime::from_hms_opt(20, 0, 0).unwrap());
    }
}

#[test]
fn missing_entity_classes_are_reported() {
    let cfg = EnhancementConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let g = Family::SoftSos.golden();
    let mut nameless = g.clone();
    if let Payload::System(d) = &mut nameless.states[0].payload {
        d.name.clear();
    }
    assert!(matches!(enhance(&nameless, &cfg, &mut rng), Err(EnhanceError::PatternMiss(EntityClass::Name))));
    assert!(matches!(enhance(&Trajectory::default(), &cfg, &mut rng), Err(EnhanceError::NoSystemState)));
    assert!(enhance(&g, &cfg, &mut rng).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn enhancement_is_a_consistent_rewrite(family in 0usize..7, index in 0u64..100_000, seed in any::<u64>()) {
        let f = Family::ALL[family];
        let g = generated(f, index);
        let e = enhance(&g, &EnhancementConfig::with_seed(seed), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert!(entity_consistency(&g, &e).is_ok(), "{:?}", entity_consistency(&g, &e));
        prop_assert_eq!(count_entities(&g), count_entities(&e));
    }
}

#[test]
fn the_audit_catches_a_half_renamed_id() {
    let g = generated(Family::General, 1);
    let e = enhance(&g, &EnhancementConfig::default(), &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    let mut broken = e.clone();
    let id = g.user_details().unwrap().user_id.to_string();
    // put the original id back in one caller state only
    let c = broken.states.iter_mut().find_map(|s| match &mut s.payload {
        Payload::Caller(c) if c.param("user_id").is_some() => Some(c),
        _ => None,
    });
    c.unwrap().parameters.insert("user_id".into(), id.into());
    assert!(entity_consistency(&g, &broken).is_err());
    assert!(entity_consistency(&g, &g).is_ok());
}
