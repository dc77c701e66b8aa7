//! Verifies the reverse-mode gradients of the full model against central
//! finite differences: backbone, sample encoder, parameter generator, the
//! generated per-sample classifier, and the training loss on top.
//!
//! ```sh
//! cargo run --example gradient_check
//! ```

use mada::diffcore::{grad_check, Matrix};
use mada::evidence::{loss_total, LossWeights};
use mada::rng::Rng64;
use mada::udn::{ClassifierMode, ModelConfig, UdnModel};

fn main() -> Result<(), mada::Error> {
    let config = ModelConfig {
        d: 3,
        k: 4,
        hidden: 10,
        d_f: 8,
        d_e: 5,
        d_h: 6,
        dynamic_layers: vec![(8, 4)],
        mode: ClassifierMode::Gpg,
    };
    println!(
        "model: {} -> backbone({}) -> features({}) -> encoder({}) -> generator({}) -> per-sample classifier -> {} classes",
        config.d, config.hidden, config.d_f, config.d_e, config.d_h, config.k
    );

    for seed in 0..3u64 {
        let model = UdnModel::new(config.clone(), seed)?;
        let mut rng = Rng64::new(100 + seed);
        let x = Matrix::from_fn(6, config.d, |_, _| rng.uniform(-2.0, 2.0));
        let labels: Vec<usize> = (0..6).map(|_| rng.next_below(config.k as u64) as usize).collect();
        let weights = LossWeights::default();

        let report = grad_check(&model.params, 1e-5, |tape, bound| {
            let alpha = model.alpha_value(tape, bound, &x).unwrap();
            loss_total(tape, &alpha, &labels, &weights, 4).unwrap()
        })?;
        println!(
            "seed {seed}: {} coordinates checked, {} skipped at activation kinks, max relative error {:.3e}",
            report.checked, report.skipped_kinks, report.max_rel_error
        );
        assert!(report.max_rel_error < 1e-4);
    }
    println!("all analytic gradients agree with finite differences");
    Ok(())
}
