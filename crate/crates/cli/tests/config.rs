use std::path::Path;

use pbvqo_cli::config::{ExperimentConfig, ExperimentKind};
use pbvqo_cli::CliError;

fn validation_message(text: &str) -> String {
    match ExperimentConfig::from_toml(text) {
        Err(CliError::Validation(msg)) => msg,
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn minimal_sweep_fills_defaults() {
    let cfg = ExperimentConfig::from_toml(
        r#"
        kind = "pbvqo-sweep"
        [problem]
        n_qubits = 8
        durations = [1, 2, 3, 4, 5, 6, 7]
        "#,
    )
    .unwrap();
    assert_eq!(cfg.kind, ExperimentKind::PbvqoSweep);
    assert_eq!(cfg.durations(), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
    assert_eq!(cfg.problem.omega, 6.0);
    assert_eq!(cfg.problem.coupling_bound, 1.0);
    assert_eq!(cfg.problem.ansatz_size, 3);
    assert_eq!(cfg.ensemble.n_restarts, 50);
    assert_eq!(cfg.seed, 0);
    let problem = cfg.hard_problem().unwrap();
    assert_eq!(problem.n_qubits(), 8);
    assert_eq!(problem.n_params(), 6);
}

#[test]
fn zero_qubits_names_the_field() {
    let msg = validation_message("kind = \"pbvqo-sweep\"\n[problem]\nn_qubits = 0\n");
    assert!(msg.contains("problem.n_qubits"), "{msg}");
}

#[test]
fn unknown_keys_are_rejected_at_every_level() {
    for text in [
        "kind = \"qaoa\"\nbogus = 1\n",
        "kind = \"qaoa\"\n[problem]\nN = 8\n",
        "kind = \"qaoa\"\n[bfgs]\nlearning_rate = 0.1\n",
        "kind = \"qaoa\"\n[ga]\nislands = 4\n",
    ] {
        let msg = validation_message(text);
        assert!(msg.contains("unknown field"), "{msg}");
    }
}

#[test]
fn syntax_errors_carry_a_line() {
    let msg = validation_message("kind = \"qaoa\"\n[problem\n");
    assert!(msg.contains("line 2"), "{msg}");
}

#[test]
fn unknown_kind_is_rejected() {
    let msg = validation_message("kind = \"annealing\"\n");
    assert!(msg.contains("kind") || msg.contains("variant"), "{msg}");
}

#[test]
fn out_of_range_values_name_their_field() {
    let cases = [
        ("kind = \"pbvqo-sweep\"\n[problem]\nduration = -1.0\n", "problem.duration"),
        ("kind = \"pbvqo-sweep\"\n[problem]\ndt = 0.0\n", "problem.dt"),
        ("kind = \"qaoa\"\n[problem]\ndepth = 0\n", "problem.depth"),
        ("kind = \"histogram\"\n[ensemble]\nn_runs = 5\n", "ensemble.n_runs"),
        ("kind = \"meta\"\n[problem]\neasy_n_qubits = 3\n", "problem.easy_n_qubits"),
        ("kind = \"meta\"\n[ga]\npopulation_size = 0\n", "ga."),
        ("kind = \"qaoa\"\n[bfgs]\nc2 = 2.0\n", "bfgs.c1/c2"),
        ("kind = \"qaoa\"\n[sampling]\namplitude_range = [1.0, -1.0]\n", "sampling.amplitude_range"),
        ("kind = \"qaoa\"\n[problem]\ndurations = [1.0]\n", "problem.durations"),
        ("kind = \"qaoa\"\n[output]\ntrace_samples = 1\n", "output.trace_samples"),
    ];
    for (text, field) in cases {
        let msg = validation_message(text);
        assert!(msg.contains(field), "expected {field} in {msg}");
    }
}

#[test]
fn meta_config_pairs_two_and_eight_qubits() {
    let cfg = ExperimentConfig::from_toml(
        r#"
        kind = "meta"
        [problem]
        n_qubits = 8
        easy_n_qubits = 2
        "#,
    )
    .unwrap();
    assert_eq!(cfg.easy_problem().unwrap().n_qubits(), 2);
    assert_eq!(cfg.hard_problem().unwrap().n_qubits(), 8);
    let ga = cfg.ga_config();
    assert_eq!(ga.bounds.len(), 6);
    assert_eq!(ga.bounds[0], (-5.0, 5.0));
}

#[test]
fn larger_easy_problem_needs_opt_in() {
    let cfg = ExperimentConfig::from_toml(
        "kind = \"meta\"\n[problem]\nn_qubits = 8\neasy_n_qubits = 4\nallow_any_easy_size = true\n",
    )
    .unwrap();
    assert_eq!(cfg.easy_problem().unwrap().n_qubits(), 4);
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            ExperimentConfig::from_path(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert_eq!(seen, 5);
}

#[test]
fn annotated_config_spells_out_the_defaults() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/sweep.toml");
    let annotated = ExperimentConfig::from_path(&path).unwrap();
    let mut defaults = ExperimentConfig::from_toml("kind = \"pbvqo-sweep\"\nname = \"duration-sweep\"\n").unwrap();
    defaults.problem.durations = annotated.problem.durations.clone();
    assert_eq!(annotated, defaults);
}

#[test]
fn fixed_step_overrides_divisions() {
    let cfg = ExperimentConfig::from_toml("kind = \"pbvqo-sweep\"\n[problem]\ndivisions = 10\ndt = 0.01\n").unwrap();
    assert_eq!(cfg.evolution().step_count(5.0), 500);
}
