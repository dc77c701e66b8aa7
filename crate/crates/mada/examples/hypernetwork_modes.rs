//! Shows the three classifier modes side by side:
//!
//! - `Static`: one fixed classifier head for every sample.
//! - `Gpg`: a generator network emits a complete classifier per sample.
//! - `Lps`: the generator emits a residual on top of a frozen pretrained
//!   classifier, so a zeroed generator reproduces the pretrained head
//!   exactly - the safe starting point for adaptation.
//!
//! ```sh
//! cargo run --example hypernetwork_modes
//! ```

use mada::datagen::{gen_blobs, BlobConfig, DomainTransform};
use mada::diffcore::Matrix;
use mada::evidence::LossWeights;
use mada::rng::Rng64;
use mada::runner::{train_rounds, TrainItem, TrainSettings};
use mada::udn::{ClassifierMode, ModelConfig, UdnModel};

fn main() -> Result<(), mada::Error> {
    // --- Gpg: the generated classifier is a function of the sample. ---
    let config = ModelConfig {
        d: 2,
        k: 3,
        hidden: 12,
        d_f: 6,
        d_e: 4,
        d_h: 5,
        dynamic_layers: vec![(6, 3)],
        mode: ClassifierMode::Gpg,
    };
    let model = UdnModel::new(config, 1)?;
    // Rows 0 and 2 are the same point; row 1 is somewhere else.
    let x = Matrix::from_vec(3, 2, vec![0.8, -1.1, -2.0, 0.4, 0.8, -1.1]);

    let tape = mada::diffcore::Tape::new();
    let bound = model.bind(&tape);
    let features = model.backbone_forward(&tape, &bound, &x)?;
    let generated = model.hyper_generate(&tape, &bound, &features)[0].data();

    let row = |i: usize| -> Vec<f64> {
        (0..generated.cols()).map(|j| generated[(i, j)]).collect()
    };
    println!("per-sample generated classifier parameters (first 4 of {}):", generated.cols());
    for i in 0..3 {
        let r = row(i);
        println!("  sample {i}: [{:.4}, {:.4}, {:.4}, {:.4}, ...]", r[0], r[1], r[2], r[3]);
    }
    assert_eq!(row(0), row(2));
    assert_ne!(row(0), row(1));
    println!("identical inputs get identical classifiers; different inputs get their own\n");

    // --- Static -> Lps: pretrain a fixed head, then freeze it as a basis. ---
    let d = 2;
    let ds = gen_blobs(&BlobConfig {
        k: 3,
        d,
        m: 2,
        samples_per_domain: 60,
        class_separation: 4.0,
        noise_sigma: 0.4,
        domain_transforms: vec![
            DomainTransform::rotation(0.0, d),
            DomainTransform::rotation(15.0, d),
            DomainTransform::rotation(30.0, d),
        ],
        seed: 2,
    })?;
    let config = ModelConfig {
        d,
        k: 3,
        hidden: 16,
        d_f: 8,
        d_e: 4,
        d_h: 6,
        dynamic_layers: vec![(8, 3)],
        mode: ClassifierMode::Static,
    };
    let mut model = UdnModel::new(config, 7)?;
    let items: Vec<TrainItem> = ds
        .sources
        .iter()
        .flatten()
        .map(|s| TrainItem { features: s.features.clone(), label: s.label })
        .collect();
    let settings = TrainSettings {
        batch_size: 32,
        epochs: 4,
        epoch_offset: 0,
        learning_rate: 0.02,
        momentum: 0.9,
        weight_decay: 5e-5,
    };
    let trace =
        train_rounds(&mut model, &items, &LossWeights::default(), &settings, &mut Rng64::new(3))?;
    println!("pretrained a static head on the sources, loss {:.3} -> {:.3}", trace[0], trace[3]);

    let probe = Matrix::from_fn(8, d, |i, j| ds.target[i].features[j]);
    let pretrained = model.logits_f64(&probe)?;

    model.freeze_basis();
    println!("froze the basis; mode is now {:?}", model.config.mode);
    let with_residual = model.logits_f64(&probe)?;
    let drift: f64 = pretrained
        .data()
        .iter()
        .zip(with_residual.data())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("freshly initialized residual shifts logits by at most {drift:.2e}");

    for name in ["hyper.0.w2", "hyper.0.b2"] {
        let m = model.params.get_mut(name).unwrap();
        *m = Matrix::zeros(m.rows(), m.cols());
    }
    let zeroed = model.logits_f64(&probe)?;
    assert_eq!(zeroed, pretrained);
    println!("with the generator output zeroed, logits equal the pretrained head exactly");
    Ok(())
}
