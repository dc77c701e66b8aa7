//! End-to-end command-line flow: generate a dataset, train on it from a
//! config file, re-render the report, run an ablation axis, and check that
//! the written artifacts are consistent with each other (the saved
//! checkpoint really is the model whose accuracies the final CSV row
//! records).

use mada::datagen::read_dataset;
use mada::runner::cli::run_cli;
use mada::runner::evaluate;
use mada::runner::report::parse_rounds_csv;
use mada::udn::UdnModel;
use std::path::Path;

fn write_config(path: &Path, dataset: &Path) {
    let text = format!(
        "# small, fast experiment for the CLI flow test\n\
         dataset = {}\n\
         seed = 3\n\
         rounds = 2\n\
         epochs_per_round = 3\n\
         pretrain_epochs = 2\n\
         budget_fraction = 0.02\n",
        dataset.display()
    );
    std::fs::write(path, text).unwrap();
}

#[test]
fn gen_run_report_ablate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data_dir = dir.path().join("data");
    let run_dir = dir.path().join("run");
    let ablate_dir = dir.path().join("ablate");
    let cfg_path = dir.path().join("experiment.cfg");

    // gen: dataset CSV plus sidecar, parseable, with the advertised shape.
    let code = run_cli(["mada", "gen", "--seed", "3", "--out", data_dir.to_str().unwrap()]);
    assert_eq!(code, 0, "gen must succeed");
    let dataset_csv = data_dir.join("dataset.csv");
    assert!(dataset_csv.is_file());
    assert!(data_dir.join("dataset.csv.meta").is_file());
    let ds = read_dataset(&dataset_csv).unwrap();
    assert_eq!((ds.k, ds.d, ds.m), (5, 2, 3));
    assert_eq!(ds.all_samples().count(), 2000);

    // run: drives the loop from a config file pointing at that CSV.
    write_config(&cfg_path, &dataset_csv);
    let code = run_cli([
        "mada",
        "run",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        run_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "run must succeed");
    for name in ["rounds.csv", "selection_log.csv", "report.md", "model.ckpt"] {
        assert!(run_dir.join(name).is_file(), "{name} must be written");
    }

    // rounds.csv: one row per round plus the final summary phase, with a
    // budget of 10 labels split 5 + 5 over the two rounds.
    let parsed = parse_rounds_csv(&std::fs::read_to_string(run_dir.join("rounds.csv")).unwrap())
        .unwrap();
    assert_eq!(parsed.reports.len(), 3);
    assert_eq!(parsed.reports[0].round, Some(1));
    assert_eq!(parsed.reports[1].round, Some(2));
    assert_eq!(parsed.reports[2].round, None);
    assert_eq!(parsed.reports[0].selected.len(), 5);
    assert_eq!(parsed.reports[1].selected.len(), 5);
    assert!(parsed.reports[2].selected.is_empty());
    assert_eq!(parsed.domains, vec!["source0", "source1", "source2", "target"]);

    // The checkpoint written next to the CSVs reproduces the final row's
    // accuracies exactly when re-evaluated on the same dataset.
    let model = UdnModel::load(&run_dir.join("model.ckpt")).unwrap();
    let accs = evaluate(&model, &ds).unwrap();
    let final_row = &parsed.reports[2];
    assert_eq!(accs.len(), final_row.domain_acc.len());
    for ((name, acc), (row_name, row_acc)) in accs.iter().zip(&final_row.domain_acc) {
        assert_eq!(name, row_name);
        assert_eq!(acc, row_acc, "checkpoint accuracy for {name} must match the CSV");
    }

    // report: re-renders report.md from the CSVs alone.
    let before = std::fs::read_to_string(run_dir.join("report.md")).unwrap();
    assert!(before.contains("target"));
    let code = run_cli(["mada", "report", "--out", run_dir.to_str().unwrap()]);
    assert_eq!(code, 0, "report must succeed");
    let after = std::fs::read_to_string(run_dir.join("report.md")).unwrap();
    assert!(after.contains("target"));

    // ablate: one subdirectory per variant plus a combined report.
    let code = run_cli([
        "mada",
        "ablate",
        "--axis",
        "uncertainty",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        ablate_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "ablate must succeed");
    for slug in ["u-dom-pre", "u-dom-only", "u-pre-only"] {
        assert!(ablate_dir.join(slug).join("rounds.csv").is_file(), "{slug} run output");
    }
    let combined = std::fs::read_to_string(ablate_dir.join("report.md")).unwrap();
    for label in ["U_dom+U_pre", "U_dom-only", "U_pre-only"] {
        assert!(combined.contains(label), "combined report lists {label}");
    }

    // report over the ablation directory aggregates the subdirectories.
    let code = run_cli(["mada", "report", "--out", ablate_dir.to_str().unwrap()]);
    assert_eq!(code, 0, "report over ablation directory must succeed");
}

#[test]
fn missing_dataset_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("experiment.cfg");
    write_config(&cfg_path, &dir.path().join("nowhere/dataset.csv"));
    let code = run_cli([
        "mada",
        "run",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        dir.path().join("run").to_str().unwrap(),
    ]);
    assert_eq!(code, 1, "missing dataset must exit 1");
}

#[test]
fn report_on_an_empty_directory_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let code = run_cli(["mada", "report", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 1);
}
