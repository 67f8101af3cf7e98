use medagent_core::trajectory::ToolCall;
use medagent_eval::{bleu, call_accuracy, rouge_l, rouge_n, tokenize, MetricConfig, MetricError};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[path = "support/oracle.rs"]
mod oracle;

const VOCAB: &[&str] = &["the", "user", "fever", "cough", "book", "slot", "Dr.", "at", "11:00", "yes", "no", "a", "b"];

fn random_text(rng: &mut impl Rng) -> String {
    let n = rng.gen_range(0..12);
    (0..n).map(|_| *VOCAB.choose(rng).unwrap()).collect::<Vec<_>>().join(if rng.gen_bool(0.5) { " " } else { ",  " })
}

#[test]
fn scores_match_the_formula_oracle_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let cfg = MetricConfig::default();
    let (mut cs, mut rs) = (Vec::new(), Vec::new());
    for _ in 0..100 {
        let (c, r) = (random_text(&mut rng), random_text(&mut rng));
        for n in 1..=2 {
            assert!((rouge_n(&c, &r, n) - oracle::rouge_n(&c, &r, n)).abs() < 1e-9, "{c} | {r}");
        }
        assert!((rouge_l(&c, &r) - oracle::rouge_l(&c, &r)).abs() < 1e-9, "{c} | {r}");
        let single = bleu(&[c.clone()], &[r.clone()], &cfg).unwrap();
        assert!((single - oracle::bleu(&[c.clone()], &[r.clone()])).abs() < 1e-9, "{c} | {r}");
        cs.push(c);
        rs.push(r);
    }
    assert!((bleu(&cs, &rs, &cfg).unwrap() - oracle::bleu(&cs, &rs)).abs() < 1e-9);
}

#[test]
fn rouge_l_of_the_lcs_fixture_is_three_quarters() {
    // LCS("a b c d", "a c d e") = "a c d": P = R = 3/4
    assert!((rouge_l("a b c d", "a c d e") - 0.75).abs() < 1e-12);
}

#[test]
fn truncated_candidate_pays_the_brevity_penalty() {
    let got = bleu(&["the cat"], &["the cat sat"], &MetricConfig::default()).unwrap();
    let expected = 100.0 * (1.0f64 - 3.0 / 2.0).exp();
    assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
}

#[test]
fn identity_disjoint_and_empty_cases() {
    let cfg = MetricConfig::default();
    let s = "Use the get_available_specialists tool to find a general physician.";
    assert!((bleu(&[s], &[s], &cfg).unwrap() - 100.0).abs() < 1e-9);
    for n in 1..=2 {
        assert_eq!(rouge_n(s, s, n), 1.0);
    }
    assert_eq!(rouge_l(s, s), 1.0);
    assert_eq!(rouge_n("alpha beta", "gamma delta", 1), 0.0);
    assert_eq!(rouge_l("alpha beta", "gamma delta"), 0.0);
    assert!(bleu(&["alpha beta gamma delta"], &["one two three four"], &cfg).unwrap() < 1.0);
    assert_eq!(rouge_l("", ""), 1.0);
    assert_eq!(rouge_n("  ", "", 1), 1.0);
    assert_eq!(bleu::<&str>(&[], &[], &cfg), Err(MetricError::EmptyCorpus));
    assert!(matches!(bleu(&["a"], &["a", "b"], &cfg), Err(MetricError::LengthMismatch { .. })));
}

#[test]
fn tokenizer_ignores_case_whitespace_and_punctuation() {
    assert_eq!(tokenize("  Hello,   WORLD!\n<END>"), ["hello", "world", "end"]);
    let (a, b) = ("Book the 11:00 slot", "book\tthe 11 : 00   slot.");
    assert_eq!(rouge_l(a, b), 1.0);
    assert!((bleu(&[a], &[b], &MetricConfig::default()).unwrap() - 100.0).abs() < 1e-9);
}

fn call(tool: &str) -> ToolCall {
    ToolCall::new(tool).with("user_id", "JICC571413").with("appointment_time_date", "11:00-11:30, 30/11/2024")
}

#[test]
fn one_wrong_tool_in_four_gates_everything_to_three_quarters() {
    let golds = vec![call("confirm_appointment"), call("save_appointment_history"), call("confirm_appointment"), call("confirm_appointment")];
    let mut preds: Vec<Option<ToolCall>> = golds.iter().cloned().map(Some).collect();
    preds[1] = Some(call("notify_user"));
    let acc = call_accuracy(&preds, &golds).unwrap();
    assert_eq!((acc.tool, acc.params, acc.values), (0.75, 0.75, 0.75));
    let perfect: Vec<Option<ToolCall>> = golds.iter().cloned().map(Some).collect();
    let acc = call_accuracy(&perfect, &golds).unwrap();
    assert_eq!((acc.tool, acc.params, acc.values), (1.0, 1.0, 1.0));
}

#[test]
fn a_different_date_costs_only_values() {
    let gold = vec![call("confirm_appointment")];
    let moved = ToolCall::new("confirm_appointment")
        .with("user_id", "JICC571413")
        .with("appointment_time_date", "11:00-11:30, 01/12/2024");
    let acc = call_accuracy(&[Some(moved)], &gold).unwrap();
    assert_eq!((acc.tool, acc.params, acc.values), (1.0, 1.0, 0.0));
    // the same slot spelled differently still counts
    let respelled = ToolCall::new("confirm_appointment")
        .with("user_id", "JICC571413")
        .with("appointment_time_date", "11:00-11:30, 30/11/24");
    assert_eq!(call_accuracy(&[Some(respelled)], &gold).unwrap().values, 1.0);
    let renamed = ToolCall::new("confirm_appointment").with("user_id", "JICC571413").with("slot", "x");
    let acc = call_accuracy(&[Some(renamed), None], &[gold[0].clone(), gold[0].clone()]).unwrap();
    assert_eq!((acc.tool, acc.params, acc.values), (0.5, 0.0, 0.0));
    assert!(matches!(call_accuracy(&[], &gold), Err(MetricError::LengthMismatch { .. })));
}

proptest! {
    #[test]
    fn gated_accuracies_are_monotone(choices in proptest::collection::vec((0u8..3, 0u8..3, 0u8..3), 1..40)) {
        let tools = ["notify_user", "send_message", "get_location"];
        let golds: Vec<ToolCall> = choices.iter().map(|(t, _, _)| ToolCall::new(tools[*t as usize]).with("text", "hi")).collect();
        let preds: Vec<Option<ToolCall>> = choices
            .iter()
            .map(|(t, p, v)| {
                let name = tools[((*t + u8::from(*p == 2)) % 3) as usize];
                let key = if *p == 1 { "message" } else { "text" };
                Some(ToolCall::new(name).with(key, if *v == 0 { "hi" } else { "bye" }))
            })
            .collect();
        let acc = call_accuracy(&preds, &golds).unwrap();
        prop_assert!(acc.values <= acc.params && acc.params <= acc.tool);
    }

    #[test]
    fn self_similarity_is_maximal(words in proptest::collection::vec("[a-z]{1,6}", 1..20)) {
        let s = words.join(" ");
        prop_assert_eq!(rouge_n(&s, &s, 1), 1.0);
        prop_assert_eq!(rouge_n(&s, &s, 2), 1.0);
        prop_assert_eq!(rouge_l(&s, &s), 1.0);
        prop_assert!((bleu(&[s.clone()], &[s], &MetricConfig::default()).unwrap() - 100.0).abs() < 1e-9);
    }
}
