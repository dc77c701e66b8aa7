//! Generates a multi-domain blob dataset, prints its shape and the domain
//! shift it encodes, and writes the CSV + sidecar to `target/example-out/`.
//!
//! ```sh
//! cargo run --example generate_dataset
//! ```

use mada::datagen::{gen_blobs, read_dataset, write_dataset, BlobConfig};
use std::collections::BTreeMap;

fn centroid(samples: &[mada::datagen::Sample]) -> Vec<f64> {
    let d = samples[0].features.len();
    let mut c = vec![0.0; d];
    for s in samples {
        for (ci, f) in c.iter_mut().zip(&s.features) {
            *ci += f;
        }
    }
    for ci in c.iter_mut() {
        *ci /= samples.len() as f64;
    }
    c
}

fn main() -> Result<(), mada::Error> {
    let cfg = BlobConfig::default_shift(42);
    let ds = gen_blobs(&cfg)?;
    println!(
        "dataset: {} classes, {} features, {} sources + 1 target, {} samples/domain",
        ds.k,
        ds.d,
        ds.m,
        cfg.samples_per_domain
    );

    // Per-domain class balance.
    for (name, dom) in ds
        .sources
        .iter()
        .enumerate()
        .map(|(i, s)| (format!("source{i}"), s))
        .chain(std::iter::once(("target".to_string(), &ds.target)))
    {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for s in dom {
            *counts.entry(s.label).or_default() += 1;
        }
        let counts: Vec<usize> = counts.values().copied().collect();
        println!("  {name}: class counts {counts:?}");
    }

    // The shift: each domain is a progressively larger rotation of the same
    // class layout, so per-class centroids drift apart domain by domain.
    println!("\nper-class centroid drift from source0 (Euclidean distance):");
    print!("{:>10}", "class");
    for i in 1..ds.m {
        print!("{:>12}", format!("source{i}"));
    }
    println!("{:>12}", "target");
    for class in 0..ds.k {
        let by_class = |dom: &[mada::datagen::Sample]| -> Vec<mada::datagen::Sample> {
            dom.iter().filter(|s| s.label == class).cloned().collect()
        };
        let base = centroid(&by_class(&ds.sources[0]));
        print!("{class:>10}");
        for dom in ds.sources[1..].iter().chain(std::iter::once(&ds.target)) {
            let c = centroid(&by_class(dom));
            let dist: f64 =
                base.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            print!("{dist:>12.3}");
        }
        println!();
    }
    println!("(classes built from a rotated spoke drift far; the ring and origin classes drift little)");

    // Round-trip through the CSV format.
    let out = std::path::Path::new("target/example-out");
    std::fs::create_dir_all(out)?;
    let path = out.join("dataset.csv");
    write_dataset(&ds, &path)?;
    let back = read_dataset(&path)?;
    assert_eq!(back, ds, "the CSV round-trip is lossless");
    println!("\nwrote {} (+ .meta sidecar); re-read it losslessly", path.display());
    Ok(())
}
