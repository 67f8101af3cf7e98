use clap::Parser;
use medagent_core::agent::Role;
use medagent_core::goldens::Family;
use medagent_core::toolbox::load_default_registry;
use medagent_datagen::{interleave, TrainingSample};
use medagent_eval::cli::{run, EvalArgs};
use medagent_eval::{evaluate_samples, EvalSample, MetricConfig};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn golden_samples() -> Vec<TrainingSample> {
    let reg = load_default_registry();
    Family::ALL
        .iter()
        .flat_map(|f| {
            let mut g = f.golden();
            g.extra.insert("family".into(), f.as_str().into());
            interleave(&g, &reg, 0)
        })
        .collect()
}

fn refs(s: &[TrainingSample]) -> Vec<EvalSample> {
    s.iter().map(|x| EvalSample { role: x.role, family: x.family.clone(), output: x.output.clone() }).collect()
}

#[test]
fn goldens_against_themselves_are_maximal() {
    let s = golden_samples();
    let preds: Vec<String> = s.iter().map(|x| x.output.clone()).collect();
    let report = evaluate_samples(&preds, &refs(&s), &MetricConfig::default()).unwrap();
    // seven families plus `all`, for each role
    assert_eq!(report.rows.len(), 16);
    for r in &report.rows {
        assert!((r.bleu - 100.0).abs() < 1e-6, "{r:?}");
        assert_eq!((r.rouge1, r.rouge2, r.rouge_l), (1.0, 1.0, 1.0));
        if r.role == Role::Caller {
            assert_eq!((r.tool_acc, r.param_acc, r.values_acc), (Some(1.0), Some(1.0), Some(1.0)));
        } else {
            assert!(r.tool_acc.is_none());
        }
    }
    let text = report.to_string();
    assert!(text.contains("ValuesAcc") && text.contains("hard_sos_start"));
}

#[test]
fn shuffled_predictions_score_below_maximal() {
    let s = golden_samples();
    let mut preds: Vec<String> = s.iter().map(|x| x.output.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    // shuffle within each (role, family) group
    let mut groups: std::collections::BTreeMap<(&str, Option<String>), Vec<usize>> = Default::default();
    for (i, x) in s.iter().enumerate() {
        groups.entry((x.role.as_str(), x.family.clone())).or_default().push(i);
    }
    for idx in groups.values() {
        let mut moved = idx.clone();
        while idx.len() > 1 && moved.iter().zip(idx).any(|(a, b)| a == b) {
            moved.shuffle(&mut rng);
        }
        let texts: Vec<String> = moved.iter().map(|k| s[*k].output.clone()).collect();
        for (k, t) in idx.iter().zip(texts) {
            preds[*k] = t;
        }
    }
    let report = evaluate_samples(&preds, &refs(&s), &MetricConfig::default()).unwrap();
    for r in report.rows.iter().filter(|r| r.samples > 1) {
        assert!(r.bleu < 100.0 && r.rouge_l < 1.0, "{r:?}");
        if r.role == Role::Caller {
            assert!(r.values_acc.unwrap() < 1.0, "{r:?}");
        }
    }
}

#[derive(Parser)]
struct Cli {
    #[command(flatten)]
    args: EvalArgs,
}

#[test]
fn the_command_gates_on_thresholds_and_writes_a_record() {
    let dir = tempfile::tempdir().unwrap();
    let s = golden_samples();
    let gold = dir.path().join("gold.jsonl");
    let pred = dir.path().join("pred.jsonl");
    let json = dir.path().join("report.json");
    let lines = |f: &dyn Fn(&TrainingSample) -> String| s.iter().map(f).collect::<Vec<_>>().join("\n");
    std::fs::write(&gold, lines(&|x| serde_json::to_string(x).unwrap())).unwrap();
    // predictions as bare JSON strings, one dropped tool name
    std::fs::write(
        &pred,
        lines(&|x| serde_json::to_string(&x.output.replace("get_location", "get_place")).unwrap()),
    )
    .unwrap();
    let parse = |extra: &[&str]| {
        let mut argv = vec!["eval", "--pred", pred.to_str().unwrap(), "--gold", gold.to_str().unwrap()];
        argv.extend_from_slice(extra);
        Cli::try_parse_from(argv).unwrap().args
    };
    run(parse(&["--json-out", json.to_str().unwrap(), "--min", "rouge_l=0.5"])).unwrap();
    let record: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(record["rows"].as_array().unwrap().len(), 16);
    assert!(run(parse(&["--min", "tool_acc=1.0"])).is_err());
    assert!(Cli::try_parse_from(["eval", "--pred", "a", "--gold", "b", "--min", "speed=1"]).is_err());
}
