//! Runs the full multi-round active adaptation loop twice on the same small
//! problem - once with the integrated-uncertainty + density selection, once
//! with random selection - and prints the per-round target accuracy of both.
//!
//! ```sh
//! cargo run --example active_loop
//! ```

use mada::runner::config::{ExperimentConfig, SelectionMethod};
use mada::runner::run_active_loop;

fn small(seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.seed = seed;
    cfg.rounds = 4;
    cfg.epochs_per_round = 12;
    cfg.budget_fraction = 0.04;
    cfg.lambda_u = 0.3;
    cfg.learning_rate = 2.2e-3;
    cfg
}

fn main() -> Result<(), mada::Error> {
    let full = run_active_loop(&small(1))?;

    let mut cfg = small(1);
    cfg.selection = SelectionMethod::Random;
    let random = run_active_loop(&cfg)?;

    println!(
        "budget: {} target labels over {} rounds (pool of {})\n",
        full.budget,
        small(1).rounds,
        500
    );
    println!("{:>8} {:>10} {:>18} {:>18}", "round", "labels", "informed target acc", "random target acc");
    for (f, r) in full.reports.iter().zip(&random.reports) {
        println!(
            "{:>8} {:>10} {:>18} {:>18}",
            f.round_label(),
            f.selected.len(),
            format!("{:.1}%", 100.0 * f.target_acc().unwrap()),
            format!("{:.1}%", 100.0 * r.target_acc().unwrap()),
        );
    }

    let last = |o: &mada::runner::ExperimentOutcome| o.reports.last().unwrap().target_acc().unwrap();
    println!(
        "\nfinal: informed {:.1}% vs random {:.1}% ({} oracle queries each, {:.1}s per run)",
        100.0 * last(&full),
        100.0 * last(&random),
        full.oracle_queries,
        full.wall_secs
    );
    println!("(single seed on a small budget - run the acceptance tests for the 5-seed comparison)");
    Ok(())
}
