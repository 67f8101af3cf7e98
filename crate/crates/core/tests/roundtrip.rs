#[path = "support/strategies.rs"]
mod strategies;

use medagent_core::trajectory::{
    parse_caller_output, parse_planner_output, parse_trajectory, parse_trajectory_with,
    render_caller_output, render_planner_output, serialize_trajectory, serialize_trajectory_line,
    ParseOptions,
};
use proptest::prelude::*;
use strategies::{call, step, trajectory};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn trajectories_round_trip(t in trajectory()) {
        let pretty = parse_trajectory(&serialize_trajectory(&t)).unwrap();
        prop_assert_eq!(&pretty, &t);
        let line = parse_trajectory(&serialize_trajectory_line(&t)).unwrap();
        prop_assert_eq!(&line, &t);
    }

    #[test]
    fn planner_outputs_round_trip(s in step()) {
        prop_assert_eq!(parse_planner_output(&render_planner_output(&s)).unwrap(), s);
    }

    #[test]
    fn caller_outputs_round_trip(c in call()) {
        prop_assert_eq!(parse_caller_output(&render_caller_output(&c)).unwrap(), c);
    }
}

#[test]
fn strict_mode_rejects_a_missing_observation() {
    // this listing leaves a string unterminated
    assert!(parse_trajectory(include_str!("fixtures/soft_sos_unterminated.txt")).is_err());
    let text = include_str!("fixtures/soft_sos_repaired.json");
    assert!(parse_trajectory(text).is_ok());
    let err = parse_trajectory_with(text, ParseOptions::STRICT).unwrap_err();
    assert!(err.is_ordering());
}

#[test]
fn nested_observation_records_are_preserved() {
    let g = medagent_core::goldens::Family::General.golden();
    let back = parse_trajectory(&serialize_trajectory(&g)).unwrap();
    let slot = back.states[7].as_observation().unwrap().get("available_slot").unwrap();
    assert_eq!(slot, &serde_json::json!({"date": "2024-11-30", "time": "11:00-11:30"}));
}
