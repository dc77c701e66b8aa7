//! Multi-round active adaptation experiments.
//!
//! A run couples two moving parts: the adaptation model (trained by SGD on
//! all labeled data) and the acquisition step (which spends the labeling
//! budget on the target pool). Per round the model trains on sources plus
//! the target labels bought so far, scores the remaining pool, selects, and
//! queries the oracle; after the last round one more training phase absorbs
//! the final labels and produces the summary evaluation.
//!
//! Everything derives from the master seed through named substreams, so a
//! run is reproducible byte-for-byte in its CSV outputs.

pub mod cli;
pub mod config;
pub mod report;
pub mod sgd;

use crate::datagen::{gen_blobs, read_dataset, split_target_pool, BlobConfig, MultiDomainDataset};
use crate::diffcore::Matrix;
use crate::error::{Error, Result};
use crate::evidence::{expected_prob, score_batch, LossWeights, UncertaintyScore};
use crate::rng::Rng64;
use crate::selector::{
    baseline_select, candidate_count, cdc_filter, entropy, rank_by_uncertainty, BaselineStrategy,
    BudgetState, CandidateSet, ScheduleConfig,
};
use crate::udn::{ClassifierMode, ModelConfig, UdnModel};
use config::{ExperimentConfig, SelectionMethod};
use report::{RoundReport, SelectionRow};
use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

const STREAM_TRAIN: u64 = 0x747261696e;
const STREAM_BASELINE: u64 = 0x62617365;

/// One labeled training example.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainItem {
    pub features: Vec<f64>,
    pub label: usize,
}

/// Optimizer and schedule knobs for one training phase.
#[derive(Debug, Clone, Copy)]
pub struct TrainSettings {
    pub batch_size: usize,
    pub epochs: usize,
    /// Cumulative epochs already trained; keeps the regularizer ramp
    /// increasing across pretraining, rounds and the final phase.
    pub epoch_offset: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
}

impl TrainSettings {
    fn from_config(cfg: &ExperimentConfig, epochs: usize, epoch_offset: usize) -> Self {
        TrainSettings {
            batch_size: cfg.batch_size,
            epochs,
            epoch_offset,
            learning_rate: cfg.learning_rate,
            momentum: cfg.momentum,
            weight_decay: cfg.weight_decay,
        }
    }
}

/// Trains the model in place over seeded shuffled mini-batches and returns
/// the mean per-sample loss of each epoch. Velocities start at zero for
/// every call.
pub fn train_rounds(
    model: &mut UdnModel,
    items: &[TrainItem],
    weights: &LossWeights,
    settings: &TrainSettings,
    rng: &mut Rng64,
) -> Result<Vec<f64>> {
    if items.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    let d = model.config.d;
    let k = model.config.k;
    for (i, item) in items.iter().enumerate() {
        if item.features.len() != d {
            return Err(Error::Shape(format!(
                "training item {i} has {} features, model expects {d}",
                item.features.len()
            )));
        }
        if item.label >= k {
            return Err(Error::Config(format!(
                "training item {i} has label {} outside 0..{k}",
                item.label
            )));
        }
    }

    let trainable = model.trainable_keys();
    let mut opt =
        sgd::Sgd::new(settings.learning_rate, settings.momentum, settings.weight_decay);
    let mut trace = Vec::with_capacity(settings.epochs);
    let mut order: Vec<usize> = (0..items.len()).collect();

    for epoch in 0..settings.epochs {
        let global_epoch = settings.epoch_offset + epoch;
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        for (batch_idx, chunk) in order.chunks(settings.batch_size).enumerate() {
            let x = Matrix::from_fn(chunk.len(), d, |i, j| items[chunk[i]].features[j]);
            let labels: Vec<usize> = chunk.iter().map(|&i| items[i].label).collect();

            let tape = crate::diffcore::Tape::new();
            let bound = model.bind(&tape);
            let alpha = model.alpha_value(&tape, &bound, &x)?;
            let loss =
                crate::evidence::loss_total(&tape, &alpha, &labels, weights, global_epoch)?;
            let value = loss.item();
            if !value.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite loss {value} at epoch {global_epoch}, batch {batch_idx}"
                )));
            }
            loss.backward()?;

            let grads: BTreeMap<String, Matrix> =
                trainable.iter().map(|key| (key.clone(), bound[key].grad())).collect();
            opt.step(&mut model.params, &grads, &trainable)?;
            loss_sum += value * chunk.len() as f64;
        }
        trace.push(loss_sum / items.len() as f64);
    }
    Ok(trace)
}

/// Predicted class of one concentration row: argmax, ties to the lowest
/// class index.
pub fn argmax_class(alpha_row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in alpha_row.iter().enumerate() {
        if v > alpha_row[best] {
            best = i;
        }
    }
    best
}

/// Per-domain and mean accuracy, on ground-truth labels. Empty domains are
/// left out instead of reported as zero.
pub fn evaluate(model: &UdnModel, ds: &MultiDomainDataset) -> Result<Vec<(String, f64)>> {
    let mut acc = Vec::new();
    let mut domains: Vec<(String, &[crate::datagen::Sample])> = Vec::new();
    for (s, samples) in ds.sources.iter().enumerate() {
        domains.push((format!("source{s}"), samples));
    }
    domains.push(("target".to_string(), &ds.target));

    for (name, samples) in domains {
        if samples.is_empty() {
            continue;
        }
        let x = Matrix::from_fn(samples.len(), ds.d, |i, j| samples[i].features[j]);
        let alpha = model.predict_alpha(&x)?;
        let correct = (0..samples.len())
            .filter(|&i| argmax_class(alpha.row(i)) == samples[i].label)
            .count();
        acc.push((name, correct as f64 / samples.len() as f64));
    }
    Ok(acc)
}

fn mean_accuracy(domain_acc: &[(String, f64)]) -> f64 {
    domain_acc.iter().map(|&(_, a)| a).sum::<f64>() / domain_acc.len() as f64
}

/// Everything a finished experiment produced.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub label: String,
    pub domains: Vec<String>,
    pub reports: Vec<RoundReport>,
    pub selection_log: Vec<SelectionRow>,
    pub model: UdnModel,
    pub budget: usize,
    pub oracle_queries: usize,
    pub wall_secs: f64,
}

/// Builds the dataset named by the config: the `blobs3` preset or a CSV
/// path.
pub fn resolve_dataset(cfg: &ExperimentConfig) -> Result<MultiDomainDataset> {
    if cfg.dataset == "blobs3" {
        gen_blobs(&BlobConfig::default_shift(cfg.seed))
    } else {
        read_dataset(Path::new(&cfg.dataset))
    }
}

/// Row label for the report table, from the selection method and ablation
/// toggles.
pub fn derive_label(cfg: &ExperimentConfig) -> String {
    match cfg.selection {
        SelectionMethod::Random => "random".into(),
        SelectionMethod::Entropy => "entropy".into(),
        SelectionMethod::Margin => "margin".into(),
        SelectionMethod::Full => {
            let mut tags = String::new();
            if cfg.disable_udn {
                tags.push_str("-UDN");
            }
            if cfg.disable_ius {
                tags.push_str("-IUS");
            }
            if cfg.disable_cdc {
                tags.push_str("-CDC");
            }
            if tags.is_empty() {
                "full".into()
            } else {
                tags
            }
        }
    }
}

struct PoolScores {
    ids: Vec<usize>,
    scores: Vec<UncertaintyScore>,
    probs: Vec<Vec<f64>>,
}

fn score_pool(model: &UdnModel, ds: &MultiDomainDataset, ids: Vec<usize>, cfg: &ExperimentConfig) -> Result<PoolScores> {
    let x = Matrix::from_fn(ids.len(), ds.d, |i, j| {
        ds.sample_by_id(ids[i]).expect("pool id exists").features[j]
    });
    let alpha = model.predict_alpha(&x)?;
    let scores = score_batch(&alpha, &ids, cfg.lambda_dom, cfg.lambda_pre)?;
    let probs = (0..ids.len())
        .map(|i| expected_prob(alpha.row(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PoolScores { ids, scores, probs })
}

/// Runs the full multi-round experiment described by the config.
pub fn run_active_loop(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let started = Instant::now();
    let ds = resolve_dataset(cfg)?;
    let (pool, mut oracle) = split_target_pool(&ds, cfg.seed);
    let budget_total = (cfg.budget_fraction * pool.len() as f64).floor() as usize;

    let mode = if cfg.disable_udn { ClassifierMode::Static } else { cfg.strategy };
    let initial_mode = if mode == ClassifierMode::Lps { ClassifierMode::Static } else { mode };
    let model_cfg = ModelConfig {
        d: ds.d,
        k: ds.k,
        hidden: cfg.hidden,
        d_f: cfg.d_f,
        d_e: cfg.d_e,
        d_h: cfg.d_h,
        dynamic_layers: vec![(cfg.d_f, ds.k)],
        mode: initial_mode,
    };
    let mut model = UdnModel::new(model_cfg, cfg.seed)?;

    let weights = LossWeights {
        lambda_mar: cfg.lambda_mar,
        lambda_kl: cfg.lambda_kl,
        kl_anneal_epochs: cfg.kl_anneal_epochs,
    };
    weights.validate()?;
    let mut rng_train = Rng64::substream(cfg.seed, STREAM_TRAIN);
    let mut rng_baseline = Rng64::substream(cfg.seed, STREAM_BASELINE);
    let mut epoch_cursor = 0usize;

    let source_items: Vec<TrainItem> = ds
        .sources
        .iter()
        .flatten()
        .map(|s| TrainItem { features: s.features.clone(), label: s.label })
        .collect();

    if mode == ClassifierMode::Lps {
        // The residual strategy needs a pretrained static classifier to
        // shift; build it from sources only, then freeze it as the basis.
        let settings = TrainSettings::from_config(cfg, cfg.pretrain_epochs, epoch_cursor);
        train_rounds(&mut model, &source_items, &weights, &settings, &mut rng_train)?;
        epoch_cursor += cfg.pretrain_epochs;
        model.freeze_basis();
    }
    let initial_model = model.clone();

    let mut budget = BudgetState::new(budget_total, cfg.rounds, pool.iter().copied())?;
    let mut labeled: BTreeMap<usize, usize> = BTreeMap::new();
    let mut reports: Vec<RoundReport> = Vec::new();
    let mut selection_log: Vec<SelectionRow> = Vec::new();

    if budget_total == 0 {
        // Degenerate budget: pure source-only adaptation with one summary
        // evaluation, trained for the same total number of epochs.
        let settings =
            TrainSettings::from_config(cfg, cfg.rounds * cfg.epochs_per_round, epoch_cursor);
        let trace = train_rounds(&mut model, &source_items, &weights, &settings, &mut rng_train)?;
        let domain_acc = evaluate(&model, &ds)?;
        let mean_acc = mean_accuracy(&domain_acc);
        let domains: Vec<String> = domain_acc.iter().map(|(n, _)| n.clone()).collect();
        reports.push(RoundReport {
            round: None,
            selected: Vec::new(),
            loss_trace: trace,
            domain_acc,
            mean_acc,
            wall_secs: started.elapsed().as_secs_f64(),
        });
        assert_eq!(oracle.distinct_queries(), 0, "degenerate budget must not query");
        return Ok(ExperimentOutcome {
            label: derive_label(cfg),
            domains,
            reports,
            selection_log,
            model,
            budget: 0,
            oracle_queries: 0,
            wall_secs: started.elapsed().as_secs_f64(),
        });
    }

    for r in 1..=cfg.rounds {
        let round_start = Instant::now();
        if cfg.reinit_per_round {
            model = initial_model.clone();
        }
        let mut items = source_items.clone();
        items.extend(labeled.iter().map(|(&id, &label)| TrainItem {
            features: ds.sample_by_id(id).expect("labeled id exists").features.clone(),
            label,
        }));
        let settings = TrainSettings::from_config(cfg, cfg.epochs_per_round, epoch_cursor);
        let trace = train_rounds(&mut model, &items, &weights, &settings, &mut rng_train)?;
        epoch_cursor += cfg.epochs_per_round;

        let quota = budget.round_quota(r);
        let unlabeled: Vec<usize> = budget.unlabeled.iter().copied().collect();
        let pool_scores = score_pool(&model, &ds, unlabeled, cfg)?;
        let by_id: BTreeMap<usize, &UncertaintyScore> =
            pool_scores.scores.iter().map(|s| (s.id, s)).collect();

        let (selected, logged): (Vec<usize>, Vec<(usize, f64)>) = match cfg.selection {
            SelectionMethod::Full => {
                let ranking: BTreeMap<usize, f64> = if cfg.disable_ius {
                    pool_scores
                        .ids
                        .iter()
                        .zip(&pool_scores.probs)
                        .map(|(&id, p)| (id, entropy(p)))
                        .collect()
                } else {
                    pool_scores.scores.iter().map(|s| (s.id, s.u_int)).collect()
                };
                if cfg.disable_cdc {
                    let (mut sel, _) = rank_by_uncertainty(&ranking, quota);
                    sel.sort_unstable();
                    let logged = sel.iter().map(|&id| (id, 0.0)).collect();
                    (sel, logged)
                } else {
                    let schedule = ScheduleConfig {
                        lambda_u: cfg.lambda_u,
                        tau: cfg.tau,
                        pool_size: pool_scores.ids.len(),
                    };
                    let n_hat = candidate_count(&schedule, quota, r, cfg.rounds);
                    let (cand, _) = rank_by_uncertainty(&ranking, n_hat);
                    let feats: Vec<Vec<f64>> = {
                        let x = Matrix::from_fn(cand.len(), ds.d, |i, j| {
                            ds.sample_by_id(cand[i]).expect("candidate exists").features[j]
                        });
                        let f = model.backbone_features_f64(&x)?;
                        (0..cand.len()).map(|i| f.row(i).to_vec()).collect()
                    };
                    let u_ints: Vec<f64> = cand.iter().map(|id| by_id[id].u_int).collect();
                    let cands = CandidateSet::new(cand.clone(), u_ints, feats, cfg.knn_k);
                    let selected = cdc_filter(&cands, quota)?;
                    let logged =
                        cand.iter().zip(&cands.densities).map(|(&id, &d)| (id, d)).collect();
                    (selected, logged)
                }
            }
            baseline => {
                let strategy = match baseline {
                    SelectionMethod::Random => BaselineStrategy::Random,
                    SelectionMethod::Entropy => BaselineStrategy::Entropy,
                    SelectionMethod::Margin => BaselineStrategy::Margin,
                    SelectionMethod::Full => unreachable!(),
                };
                let probs: BTreeMap<usize, Vec<f64>> = pool_scores
                    .ids
                    .iter()
                    .zip(&pool_scores.probs)
                    .map(|(&id, p)| (id, p.clone()))
                    .collect();
                let sel = baseline_select(strategy, &probs, quota, &mut rng_baseline)?;
                let logged = sel.iter().map(|&id| (id, 0.0)).collect();
                (sel, logged)
            }
        };

        let selected_set: std::collections::BTreeSet<usize> =
            selected.iter().copied().collect();
        let mut log_rows: Vec<SelectionRow> = logged
            .iter()
            .map(|&(id, density)| {
                let s = by_id[&id];
                SelectionRow {
                    round: r,
                    id,
                    u_dom: s.u_dom,
                    u_pre: s.u_pre,
                    u_int: s.u_int,
                    density,
                    selected: selected_set.contains(&id),
                }
            })
            .collect();
        log_rows.sort_by_key(|row| row.id);
        selection_log.extend(log_rows);

        for &id in &selected {
            let label = oracle.query(id)?;
            labeled.insert(id, label);
        }
        budget.mark_labeled(&selected)?;

        let domain_acc = evaluate(&model, &ds)?;
        let mean_acc = mean_accuracy(&domain_acc);
        reports.push(RoundReport {
            round: Some(r),
            selected,
            loss_trace: trace,
            domain_acc,
            mean_acc,
            wall_secs: round_start.elapsed().as_secs_f64(),
        });
    }

    // Final phase: absorb the last round's labels, then the summary row.
    let final_start = Instant::now();
    let mut items = source_items.clone();
    items.extend(labeled.iter().map(|(&id, &label)| TrainItem {
        features: ds.sample_by_id(id).expect("labeled id exists").features.clone(),
        label,
    }));
    let settings = TrainSettings::from_config(cfg, cfg.epochs_per_round, epoch_cursor);
    let trace = train_rounds(&mut model, &items, &weights, &settings, &mut rng_train)?;
    let domain_acc = evaluate(&model, &ds)?;
    let mean_acc = mean_accuracy(&domain_acc);
    let domains: Vec<String> = domain_acc.iter().map(|(n, _)| n.clone()).collect();
    reports.push(RoundReport {
        round: None,
        selected: Vec::new(),
        loss_trace: trace,
        domain_acc,
        mean_acc,
        wall_secs: final_start.elapsed().as_secs_f64(),
    });

    let queries = oracle.distinct_queries();
    assert_eq!(queries, budget_total, "oracle discipline: queries must equal the budget");

    Ok(ExperimentOutcome {
        label: derive_label(cfg),
        domains,
        reports,
        selection_log,
        model,
        budget: budget_total,
        oracle_queries: queries,
        wall_secs: started.elapsed().as_secs_f64(),
    })
}

/// Writes `rounds.csv`, `selection_log.csv`, `report.md` and `model.ckpt`
/// into `out`.
pub fn write_run_outputs(out: &Path, outcome: &ExperimentOutcome) -> Result<()> {
    std::fs::create_dir_all(out)?;
    report::write_text(
        &out.join("rounds.csv"),
        &report::rounds_csv(&outcome.reports, &outcome.domains),
    )?;
    report::write_text(
        &out.join("selection_log.csv"),
        &report::selection_csv(&outcome.selection_log),
    )?;
    let run = report::ParsedRun {
        domains: outcome.domains.clone(),
        reports: outcome.reports.clone(),
    };
    let md = report::render_report_md(
        &[(outcome.label.clone(), run)],
        Some(outcome.wall_secs),
    )?;
    report::write_text(&out.join("report.md"), &md)?;
    outcome.model.save(&out.join("model.ckpt"))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationAxis {
    /// full vs -UDN vs -IUS vs -CDC.
    Module,
    /// LPS vs GPG weight-generation strategies.
    Strategy,
    /// Both uncertainties vs each alone.
    Uncertainty,
}

/// One ablation run: display label, directory slug and the config to run.
#[derive(Debug, Clone)]
pub struct AblationVariant {
    pub label: String,
    pub slug: String,
    pub config: ExperimentConfig,
}

/// The runs an ablation axis compares. All variants force the full
/// selection method so each axis isolates exactly one factor.
pub fn ablation_variants(axis: AblationAxis, base: &ExperimentConfig) -> Vec<AblationVariant> {
    let mut base = base.clone();
    base.selection = SelectionMethod::Full;
    let mk = |label: &str, slug: &str, f: &dyn Fn(&mut ExperimentConfig)| {
        let mut cfg = base.clone();
        f(&mut cfg);
        AblationVariant { label: label.into(), slug: slug.into(), config: cfg }
    };
    match axis {
        AblationAxis::Module => vec![
            mk("full", "full", &|_| {}),
            mk("-UDN", "no-udn", &|c| c.disable_udn = true),
            mk("-IUS", "no-ius", &|c| c.disable_ius = true),
            mk("-CDC", "no-cdc", &|c| c.disable_cdc = true),
        ],
        AblationAxis::Strategy => vec![
            mk("LPS", "lps", &|c| c.strategy = ClassifierMode::Lps),
            mk("GPG", "gpg", &|c| c.strategy = ClassifierMode::Gpg),
        ],
        AblationAxis::Uncertainty => vec![
            mk("U_dom+U_pre", "u-dom-pre", &|_| {}),
            mk("U_dom-only", "u-dom-only", &|c| c.lambda_pre = 0.0),
            mk("U_pre-only", "u-pre-only", &|c| c.lambda_dom = 0.0),
        ],
    }
}

/// Runs every variant of the axis, writes per-variant outputs into
/// `out/<slug>/` and a combined `report.md` at the top of `out`.
pub fn run_ablation(
    axis: AblationAxis,
    base: &ExperimentConfig,
    out: &Path,
) -> Result<Vec<ExperimentOutcome>> {
    let started = Instant::now();
    let variants = ablation_variants(axis, base);
    let mut outcomes = Vec::with_capacity(variants.len());
    for v in &variants {
        let mut outcome = run_active_loop(&v.config)?;
        outcome.label = v.label.clone();
        write_run_outputs(&out.join(&v.slug), &outcome)?;
        outcomes.push(outcome);
    }
    let runs: Vec<(String, report::ParsedRun)> = outcomes
        .iter()
        .map(|o| {
            (
                o.label.clone(),
                report::ParsedRun { domains: o.domains.clone(), reports: o.reports.clone() },
            )
        })
        .collect();
    let md = report::render_report_md(&runs, Some(started.elapsed().as_secs_f64()))?;
    report::write_text(&out.join("report.md"), &md)?;
    Ok(outcomes)
}
