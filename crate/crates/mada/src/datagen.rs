//! Synthetic multi-domain classification data.
//!
//! A dataset holds M labeled source domains plus one target domain whose
//! labels are reachable only through a [`LabelOracle`]. Domains share a label
//! space and differ by an affine transform of common class prototypes:
//! rotation in the first two feature coordinates, a global scale, and a
//! translation, followed by Gaussian noise. Increasing rotation across
//! domains realizes a controllable domain shift.
//!
//! Persistence is a CSV (`id,domain,label,f0..f{d-1}`) with floats printed at
//! 17 significant digits, plus a `<path>.meta` sidecar carrying `K`, `d`,
//! `M`, `seed`. Round-trips are lossless.

use crate::error::{Error, Result};
use crate::rng::Rng64;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write as _};
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: usize,
    /// 0..M-1 are sources; M is the target domain.
    pub domain: usize,
    pub label: usize,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiDomainDataset {
    pub sources: Vec<Vec<Sample>>,
    pub target: Vec<Sample>,
    pub k: usize,
    pub d: usize,
    pub m: usize,
    pub seed: u64,
}

/// Affine map a domain applies to the shared class prototypes.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainTransform {
    /// Rotation of the first two feature coordinates, degrees.
    pub rotation_deg: f64,
    pub scale: f64,
    /// Added per coordinate; length d.
    pub translation: Vec<f64>,
}

impl DomainTransform {
    pub fn rotation(rotation_deg: f64, d: usize) -> Self {
        DomainTransform { rotation_deg, scale: 1.0, translation: vec![0.0; d] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlobConfig {
    pub k: usize,
    pub d: usize,
    pub m: usize,
    pub samples_per_domain: usize,
    pub class_separation: f64,
    pub noise_sigma: f64,
    /// One per domain, sources first, target last (m + 1 entries).
    pub domain_transforms: Vec<DomainTransform>,
    pub seed: u64,
}

impl BlobConfig {
    /// Three sources rotated 0/25/50 degrees, target rotated 75 degrees.
    pub fn default_shift(seed: u64) -> Self {
        let d = 2;
        BlobConfig {
            k: 5,
            d,
            m: 3,
            samples_per_domain: 500,
            class_separation: 2.0,
            noise_sigma: 0.3,
            domain_transforms: vec![
                DomainTransform::rotation(0.0, d),
                DomainTransform::rotation(25.0, d),
                DomainTransform::rotation(50.0, d),
                DomainTransform::rotation(75.0, d),
            ],
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.k < 2 {
            bad.push(format!("k must be >= 2, got {}", self.k));
        }
        if self.d < 2 {
            bad.push(format!("d must be >= 2 (rotations use two coordinates), got {}", self.d));
        }
        if self.m < 2 {
            bad.push(format!("m must be >= 2, got {}", self.m));
        }
        if self.samples_per_domain < self.k {
            bad.push(format!(
                "samples_per_domain must be >= k, got {} < {}",
                self.samples_per_domain, self.k
            ));
        }
        if !(self.noise_sigma > 0.0) {
            bad.push(format!("noise_sigma must be > 0, got {}", self.noise_sigma));
        }
        if !(self.class_separation > 0.0) {
            bad.push(format!("class_separation must be > 0, got {}", self.class_separation));
        }
        if self.domain_transforms.len() != self.m + 1 {
            bad.push(format!(
                "domain_transforms must have m + 1 = {} entries, got {}",
                self.m + 1,
                self.domain_transforms.len()
            ));
        }
        for (i, t) in self.domain_transforms.iter().enumerate() {
            if t.translation.len() != self.d {
                bad.push(format!(
                    "domain_transforms[{i}].translation must have d = {} entries, got {}",
                    self.d,
                    t.translation.len()
                ));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad.join("; ")))
        }
    }
}

fn apply_transform(t: &DomainTransform, x: &[f64]) -> Vec<f64> {
    let mut out = x.to_vec();
    let rad = t.rotation_deg.to_radians();
    let (s, c) = rad.sin_cos();
    let (x0, x1) = (out[0], out[1]);
    out[0] = c * x0 - s * x1;
    out[1] = s * x0 + c * x1;
    for (o, tr) in out.iter_mut().zip(&t.translation) {
        *o = *o * t.scale + tr;
    }
    out
}

/// Generates a class-balanced blob dataset. Deterministic given the seed:
/// prototypes come from one substream, each domain's noise from its own.
///
/// Each class is a union of one or more Gaussian modes, laid out so the
/// classes react to a domain rotation in deliberately different ways:
///
/// - The first k-2 classes (at least one) form a radial "spoke" at a fixed
///   anchor angle: each contributes three modes stacked at increasing
///   radius. A rotation swings the whole spoke into previously empty
///   angular territory, breaking these classes mode by mode.
/// - The next class (present when k >= 3) is a "pinwheel" ring whose five
///   modes sit 75 degrees apart, so moderate rotations map the ring
///   roughly onto itself and the class survives domain shift.
/// - The last class sits at the origin, which every rotation leaves fixed.
///
/// Radii and angles carry light seeded jitter; higher feature coordinates,
/// if any, get ordinary seeded offsets shared by all modes of a class.
/// Sample i of a domain takes label i % k and cycles through its class's
/// modes, so classes and modes are both balanced.
pub fn gen_blobs(cfg: &BlobConfig) -> Result<MultiDomainDataset> {
    cfg.validate()?;
    let mut proto_rng = Rng64::substream(cfg.seed, 0);
    let rail = (cfg.k - 2).max(1);
    let sep = cfg.class_separation;
    let mut class_modes: Vec<Vec<(f64, f64)>> = Vec::with_capacity(cfg.k);
    for c in 0..cfg.k {
        if c < rail {
            class_modes.push(
                (0..3)
                    .map(|m| (sep * (1.0 + 1.2 * c as f64 + 0.35 * m as f64), 40.0))
                    .collect(),
            );
        } else if c + 1 < cfg.k {
            let radius = sep * (1.2 * rail as f64 + 1.9);
            class_modes.push((0..5).map(|m| (radius, 75.0 * m as f64)).collect());
        } else {
            class_modes.push(vec![(0.0, 0.0)]);
        }
    }
    let prototypes: Vec<Vec<Vec<f64>>> = class_modes
        .into_iter()
        .map(|modes| {
            let mut high: Vec<f64> = Vec::new();
            for _ in 2..cfg.d {
                high.push(proto_rng.normal() * sep);
            }
            modes
                .into_iter()
                .map(|(radius, angle_deg)| {
                    let radius = (radius + 0.05 * sep * proto_rng.uniform(-1.0, 1.0)).max(0.0);
                    let angle = (angle_deg + 3.0 * proto_rng.uniform(-1.0, 1.0)).to_radians();
                    let mut p = vec![0.0; cfg.d];
                    p[0] = radius * angle.cos();
                    p[1] = radius * angle.sin();
                    p[2..cfg.d].copy_from_slice(&high);
                    p
                })
                .collect()
        })
        .collect();

    let mut next_id = 0;
    let mut domain_samples = |domain: usize| -> Vec<Sample> {
        let mut rng = Rng64::substream(cfg.seed, 1 + domain as u64);
        let t = &cfg.domain_transforms[domain];
        (0..cfg.samples_per_domain)
            .map(|i| {
                let label = i % cfg.k;
                let modes = &prototypes[label];
                let proto = &modes[(i / cfg.k) % modes.len()];
                let mut features = apply_transform(t, proto);
                for f in features.iter_mut() {
                    *f += rng.normal() * cfg.noise_sigma;
                }
                let id = next_id;
                next_id += 1;
                Sample { id, domain, label, features }
            })
            .collect()
    };

    let sources: Vec<Vec<Sample>> = (0..cfg.m).map(&mut domain_samples).collect();
    let target = domain_samples(cfg.m);
    Ok(MultiDomainDataset { sources, target, k: cfg.k, d: cfg.d, m: cfg.m, seed: cfg.seed })
}

impl MultiDomainDataset {
    pub fn all_samples(&self) -> impl Iterator<Item = &Sample> {
        self.sources.iter().flatten().chain(self.target.iter())
    }

    pub fn sample_by_id(&self, id: usize) -> Option<&Sample> {
        self.all_samples().find(|s| s.id == id)
    }
}

/// Writes the dataset CSV plus its `<path>.meta` sidecar.
pub fn write_dataset(ds: &MultiDomainDataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str("id,domain,label");
    for j in 0..ds.d {
        let _ = write!(out, ",f{j}");
    }
    out.push('\n');
    for s in ds.all_samples() {
        let _ = write!(out, "{},{},{}", s.id, s.domain, s.label);
        for f in &s.features {
            let _ = write!(out, ",{f:.16e}");
        }
        out.push('\n');
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(out.as_bytes())?;
    file.flush()?;

    let meta = format!("K = {}\nd = {}\nM = {}\nseed = {}\n", ds.k, ds.d, ds.m, ds.seed);
    std::fs::write(meta_path(path), meta)?;
    Ok(())
}

fn meta_path(path: &Path) -> std::path::PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".meta");
    p.into()
}

fn parse_meta(path: &Path) -> Result<(usize, usize, usize, u64)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read sidecar {}: {e}", path.display())))?;
    let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            msg: format!("sidecar line is not key = value: {line:?}"),
        })?;
        fields.insert(key.trim(), value.trim());
    }
    let get = |key: &str| -> Result<&str> {
        fields
            .get(key)
            .copied()
            .ok_or_else(|| Error::Config(format!("sidecar missing key {key:?}")))
    };
    let int = |key: &str| -> Result<usize> {
        get(key)?
            .parse()
            .map_err(|e| Error::Config(format!("sidecar key {key:?}: {e}")))
    };
    let seed: u64 = get("seed")?
        .parse()
        .map_err(|e| Error::Config(format!("sidecar key \"seed\": {e}")))?;
    Ok((int("K")?, int("d")?, int("M")?, seed))
}

/// Reads a dataset written by [`write_dataset`], validating the schema and
/// every field. Errors cite the 1-based line number.
pub fn read_dataset(path: &Path) -> Result<MultiDomainDataset> {
    let (k, d, m, seed) = parse_meta(&meta_path(path))?;
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();

    let header = lines
        .next()
        .ok_or(Error::Parse { line: 1, msg: "empty file, expected header".into() })??;
    let mut expected = vec!["id".to_string(), "domain".to_string(), "label".to_string()];
    expected.extend((0..d).map(|j| format!("f{j}")));
    let got: Vec<&str> = header.split(',').collect();
    for (i, want) in expected.iter().enumerate() {
        if got.get(i).copied() != Some(want.as_str()) {
            return Err(Error::Parse {
                line: 1,
                msg: format!("header missing or misplaced column {want:?}"),
            });
        }
    }
    if got.len() != expected.len() {
        return Err(Error::Parse {
            line: 1,
            msg: format!("header has {} columns, expected {}", got.len(), expected.len()),
        });
    }

    let mut sources: Vec<Vec<Sample>> = vec![Vec::new(); m];
    let mut target = Vec::new();
    let mut seen_ids = BTreeSet::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected.len() {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("row has {} fields, expected {}", fields.len(), expected.len()),
            });
        }
        let parse_int = |name: &str, v: &str| -> Result<usize> {
            v.parse().map_err(|e| Error::Parse {
                line: line_no,
                msg: format!("column {name}: {e}"),
            })
        };
        let id = parse_int("id", fields[0])?;
        let domain = parse_int("domain", fields[1])?;
        let label = parse_int("label", fields[2])?;
        if !seen_ids.insert(id) {
            return Err(Error::Parse { line: line_no, msg: format!("duplicate id {id}") });
        }
        if domain > m {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("domain {domain} out of range 0..={m}"),
            });
        }
        if label >= k {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("label {label} out of range 0..{k}"),
            });
        }
        let mut features = Vec::with_capacity(d);
        for (j, v) in fields[3..].iter().enumerate() {
            let f: f64 = v.parse().map_err(|e| Error::Parse {
                line: line_no,
                msg: format!("column f{j}: {e}"),
            })?;
            if !f.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("column f{j}: non-finite value {v}"),
                });
            }
            features.push(f);
        }
        let sample = Sample { id, domain, label, features };
        if domain < m {
            sources[domain].push(sample);
        } else {
            target.push(sample);
        }
    }

    for (i, s) in sources.iter().enumerate() {
        if s.is_empty() {
            return Err(Error::Config(format!("source domain {i} is empty")));
        }
    }
    if target.is_empty() {
        return Err(Error::Config("target domain is empty".into()));
    }
    Ok(MultiDomainDataset { sources, target, k, d, m, seed })
}

/// Answers label queries for target samples and records which ids were asked.
#[derive(Debug)]
pub struct LabelOracle {
    labels: BTreeMap<usize, usize>,
    queried: BTreeSet<usize>,
}

impl LabelOracle {
    /// True label for a target sample. Ids outside the target pool are
    /// errors; repeat queries are idempotent.
    pub fn query(&mut self, id: usize) -> Result<usize> {
        match self.labels.get(&id) {
            Some(&label) => {
                self.queried.insert(id);
                Ok(label)
            }
            None => Err(Error::Oracle(format!("id {id} is not a target sample"))),
        }
    }

    /// Number of distinct ids ever queried.
    pub fn distinct_queries(&self) -> usize {
        self.queried.len()
    }
}

/// Splits off the target pool: every target id starts unlabeled, and the
/// returned oracle is the only path to target labels. The seed only shuffles
/// the initial pool order.
pub fn split_target_pool(ds: &MultiDomainDataset, oracle_seed: u64) -> (Vec<usize>, LabelOracle) {
    let labels: BTreeMap<usize, usize> = ds.target.iter().map(|s| (s.id, s.label)).collect();
    let mut ids: Vec<usize> = ds.target.iter().map(|s| s.id).collect();
    let mut rng = Rng64::substream(oracle_seed, 0x706f6f6c);
    rng.shuffle(&mut ids);
    (ids, LabelOracle { labels, queried: BTreeSet::new() })
}
