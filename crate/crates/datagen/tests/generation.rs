use medagent_core::goldens::Family;
use medagent_core::toolbox::load_default_registry;
use medagent_core::trajectory::{parse_trajectory_with, serialize_trajectory_line, ParseOptions, StateKind};
use medagent_datagen::{
    family_of, generate_trajectory, verify_as, EnhancementConfig, UseCaseTemplate, VerifyOptions,
};

fn generate(family: Family, seed: u64, index: u64) -> medagent_core::trajectory::Trajectory {
    let cfg = EnhancementConfig::with_seed(seed);
    generate_trajectory(&UseCaseTemplate::for_family(family), &cfg, index, None).unwrap()
}

#[test]
fn same_seed_same_episode() {
    for f in Family::ALL {
        for i in [0, 7, 4242] {
            let a = serialize_trajectory_line(&generate(f, 11, i));
            assert_eq!(a, serialize_trajectory_line(&generate(f, 11, i)));
            assert_ne!(a, serialize_trajectory_line(&generate(f, 11, i + 1)));
            assert_ne!(a, serialize_trajectory_line(&generate(f, 12, i)));
        }
    }
}

#[test]
fn every_skeleton_obeys_the_grammar() {
    for t in UseCaseTemplate::all() {
        assert!(t.skeleton_is_valid(), "{:?}", t.family);
        assert_eq!(t.skeleton[0].kind, StateKind::System);
        assert_eq!(t.disease_slot, t.family.is_appointment());
    }
}

#[test]
fn hard_sos_start_follows_the_fixed_sequence() {
    let expected = [
        "notify_user",
        "get_location",
        "search_ambulance",
        "send_message",
        "send_message",
        "notify_user",
    ];
    for i in 0..50 {
        let t = generate(Family::HardSosStart, 3, i);
        let tools: Vec<&str> = t.calls().map(|c| c.tool.as_str()).collect();
        assert_eq!(tools, expected);
        assert_eq!(t.count(StateKind::Planner), 7);
    }
}

#[test]
fn negative_episodes_decline_and_book_nothing() {
    for i in 0..50 {
        let t = generate(Family::Negative, 5, i);
        let answer = t
            .call_observations()
            .into_iter()
            .find(|(c, _)| c.tool == "get_input_from_user")
            .and_then(|(_, o)| o.and_then(|v| v.as_str().map(String::from)))
            .unwrap();
        assert!(!medagent_core::agent::rules::consent(&answer), "{answer}");
        assert!(t.calls().all(|c| c.tool != "confirm_appointment"));
        assert!(t.calls().any(|c| c.tool == "store_symptoms"));
    }
}

#[test]
fn counter_episodes_clarify_before_searching() {
    for i in 0..50 {
        let t = generate(Family::Counter, 9, i);
        let tools: Vec<&str> = t.calls().map(|c| c.tool.as_str()).collect();
        let ask = tools.iter().position(|x| *x == "get_input_from_user").unwrap();
        let search = tools.iter().position(|x| *x == "get_available_specialists").unwrap();
        assert!(ask < search, "{tools:?}");
        let clarified = t
            .call_observations()
            .into_iter()
            .take_while(|(c, _)| c.tool == "get_input_from_user")
            .filter(|(_, o)| o.is_some_and(|v| v.get("user").is_some()))
            .count();
        assert!((1..=2).contains(&clarified));
    }
}

#[test]
fn dietician_episodes_search_for_a_dietician() {
    for i in 0..50 {
        let t = generate(Family::Dietician, 2, i);
        let spec = t.calls().find(|c| c.tool == "get_available_specialists").unwrap();
        assert_eq!(spec.param_str("specialization"), Some("dietician"));
    }
}

#[test]
fn raw_episodes_verify_clean_and_reparse_strictly() {
    let reg = load_default_registry();
    for f in Family::ALL {
        for i in 0..100 {
            let t = generate(f, 1, i);
            assert_eq!(family_of(&t), Some(f));
            let report = verify_as(&t, &reg, Some(f), VerifyOptions::default());
            assert!(report.is_clean(), "{f:?} {i}: {:?}", report.violations);
            let line = serialize_trajectory_line(&t);
            assert_eq!(parse_trajectory_with(&line, ParseOptions::STRICT).unwrap(), t);
        }
    }
}

#[test]
fn past_complaints_precede_the_query_and_slots_follow_it() {
    let cfg = EnhancementConfig::with_seed(4);
    for f in Family::ALL.into_iter().filter(|f| f.is_appointment()) {
        for i in 0..100 {
            let t = generate(f, 4, i);
            let today = t.user_details().unwrap().timestamp.date();
            for (c, o) in t.call_observations() {
                let o = o.unwrap();
                if c.tool == "retrieve_past_complaints" {
                    for rec in o.as_array().unwrap() {
                        let d: chrono::NaiveDate = rec["date"].as_str().unwrap().parse().unwrap();
                        assert!(d < today && (today - d).num_days() <= cfg.history_days);
                    }
                }
                if c.tool == "get_available_specialists" {
                    let d: chrono::NaiveDate = o["available_slot"]["date"].as_str().unwrap().parse().unwrap();
                    assert!(d > today && (d - today).num_days() <= cfg.window_days);
                }
            }
        }
    }
}

#[test]
fn an_invalid_config_is_rejected() {
    let mut cfg = EnhancementConfig::default();
    cfg.window_days = 0;
    assert!(cfg.validate().is_err());
    let mut cfg = EnhancementConfig::default();
    cfg.first_names.clear();
    assert!(cfg.validate().is_err());
    assert!(EnhancementConfig::default().validate().is_ok());
}
