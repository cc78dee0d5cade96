//! The experiment runner: source-model training, the attack grid, repeats,
//! aggregation, and deterministic output.
//!
//! Everything derives from `(config, master seed)`: the dataset, the split,
//! the source model, and each grid cell's per-repeat seeds. Grid cells run
//! independently (optionally in parallel) and never share mutable state;
//! files are written per cell and the summary is assembled afterwards in a
//! fixed order, so two runs with the same inputs produce byte-identical
//! output trees.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use mialab::attacks::{
    run_blackbox_target_attack, run_transmia, AttackSettings, BlackboxTargetPlan, SvmConfig,
};
use mialab::data::{
    load_table, partition, split_four_way_with, synth_generate, FourWaySplit, SplitSizes,
    SynthConfig,
};
use mialab::metrics::{aggregate, evaluate, write_report_csv, write_report_json, MetricsReport};
use mialab::nn::train::{self, TrainConfig};
use mialab::nn::{LayerStack, LayeredNet, NetSpec};
use mialab::rng::{derive_indexed_seed, derive_seed, tag};
use mialab::shadow::{ShadowPlan, ShadowRegime};
use mialab::transfer::{transfer_train, TransferPlan};
use mialab::{Error, Result};

use crate::config::{parse_kind, parse_mode, parse_regime, ExperimentConfig};
use crate::report::write_summary_csv;

/// Identifies one grid cell. For the main experiment `size` is the shadow
/// training-set size; for the target-model experiment it is the target
/// training-set size.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct CellKey {
    pub regime: String,
    pub kind: String,
    pub size: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellReport {
    #[serde(flatten)]
    pub key: CellKey,
    pub seed: u64,
    pub aggregate: MetricsReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellFailure {
    #[serde(flatten)]
    pub key: CellKey,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub master_seed: u64,
    pub version: String,
    pub cells: Vec<(CellKey, u64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub provenance: Provenance,
    pub cells: Vec<CellReport>,
    pub failures: Vec<CellFailure>,
    pub partial: bool,
}

/// Per-repeat reports plus their aggregate, as produced by one grid cell.
type CellComputation = mialab::Result<(MetricsReport, Vec<MetricsReport>)>;

/// Prepared inputs shared read-only by every cell.
struct Prepared {
    split: FourWaySplit<f64>,
    source: LayeredNet<f64>,
    source_shallow: LayerStack<f64>,
    source_arch: NetSpec,
}

fn build_dataset(cfg: &ExperimentConfig, master_seed: u64) -> Result<mialab::Dataset64> {
    match cfg.dataset.kind.as_str() {
        "synth" => synth_generate(&SynthConfig {
            class_count: cfg.dataset.classes,
            dim: cfg.dataset.dim,
            points_per_class: cfg.dataset.points_per_class,
            class_mean_scale: cfg.dataset.class_mean_scale,
            noise_sigma: cfg.dataset.noise_sigma,
            seed: derive_seed(master_seed, tag::DATA),
        }),
        "file" => {
            let path = cfg.dataset.path.as_ref().expect("validated");
            load_table(Path::new(path), None)
        }
        other => Err(Error::InvalidInput(format!("unknown dataset kind `{other}`"))),
    }
}

fn prepare(cfg: &ExperimentConfig, master_seed: u64) -> Result<Prepared> {
    let dataset = build_dataset(cfg, master_seed)?;
    let split = split_four_way_with(
        &dataset,
        SplitSizes {
            train: cfg.split.train,
            test: cfg.split.test,
            shadow_train: cfg.split.shadow_train,
            shadow_test: cfg.split.shadow_test,
        },
        derive_seed(master_seed, tag::SPLIT),
        cfg.split.stratified,
    )?;

    let mut source_arch = NetSpec::dense(
        dataset.feature_dim(),
        &cfg.source.hidden,
        dataset.class_count(),
    );
    source_arch.split_index = cfg.transfer_split();

    let source_seed = derive_seed(master_seed, tag::SOURCE);
    let fresh = LayeredNet::init(&source_arch, derive_seed(source_seed, tag::INIT))?;
    let train_cfg = cfg.source_train_cfg(source_seed);
    let mask = train::all_trainable(fresh.num_layers());
    let source = if cfg.source.select_best_epoch {
        train::train_selecting_best(&fresh, &split.train, &split.test, &train_cfg, &mask)?
    } else {
        train::train(&fresh, &split.train, &train_cfg, &mask)?
    };
    let source_shallow = source.shallow_stack()?;

    Ok(Prepared { split, source, source_shallow, source_arch })
}

/// The grid in its deterministic enumeration order: configured regimes x
/// kinds x sizes, then the optional full-size baseline control per kind.
fn grid_cells(cfg: &ExperimentConfig) -> Vec<CellKey> {
    let mut cells = Vec::new();
    for regime in &cfg.attack.regimes {
        for kind in &cfg.attack.kinds {
            for &size in &cfg.shadows.sizes {
                cells.push(CellKey { regime: regime.clone(), kind: kind.clone(), size });
            }
        }
    }
    if let Some(full) = cfg.attack.baseline_full_size {
        for kind in &cfg.attack.kinds {
            let key = CellKey { regime: "baseline".into(), kind: kind.clone(), size: full };
            if !cells.contains(&key) {
                cells.push(key);
            }
        }
    }
    cells
}

fn shadow_arch(cfg: &ExperimentConfig, prepared: &Prepared) -> NetSpec {
    match &cfg.shadows.head_hidden {
        None => prepared.source_arch.clone(),
        Some(head_hidden) => {
            let split = prepared.source_arch.split_index;
            let mut layer_dims: Vec<usize> =
                prepared.source_arch.layer_dims[..split].to_vec();
            layer_dims.extend_from_slice(head_hidden);
            layer_dims.push(prepared.source_arch.class_count());
            let mut activations = prepared.source_arch.activations[..split].to_vec();
            activations.extend(vec![
                mialab::nn::Activation::Relu;
                head_hidden.len()
            ]);
            activations.push(mialab::nn::Activation::Identity);
            NetSpec {
                input_dim: prepared.source_arch.input_dim,
                layer_dims,
                activations,
                split_index: split,
            }
        }
    }
}

fn run_cell(
    cfg: &ExperimentConfig,
    prepared: &Prepared,
    key: &CellKey,
    cell_seed: u64,
) -> CellComputation {
    let regime = parse_regime(&key.regime)
        .ok_or_else(|| Error::InvalidInput(format!("unknown regime `{}`", key.regime)))?;
    let kind = parse_kind(&key.kind)
        .ok_or_else(|| Error::InvalidInput(format!("unknown kind `{}`", key.kind)))?;

    let mut repeats = Vec::with_capacity(cfg.attack.repeats);
    for r in 0..cfg.attack.repeats {
        let repeat_seed = derive_indexed_seed(cell_seed, tag::REPEAT, r as u64);
        let plan = ShadowPlan {
            num_shadows: cfg.shadows.count,
            shadow_size: key.size,
            regime,
            source_shallow: match regime {
                ShadowRegime::Baseline => None,
                _ => Some(prepared.source_shallow.clone()),
            },
            arch: shadow_arch(cfg, prepared),
            train_cfg: cfg.shadow_train_cfg(derive_seed(repeat_seed, tag::SHADOW)),
        };
        let settings = AttackSettings {
            train: cfg.attack_train_cfg(derive_seed(repeat_seed, tag::ATTACK_CLASS)),
            svm: SvmConfig { lambda: cfg.attack.svm_lambda, epochs: cfg.attack.svm_epochs },
        };
        let (adversary, _ensemble) = run_transmia(
            &prepared.source,
            &prepared.split.shadow_train,
            &prepared.split.shadow_test,
            &plan,
            kind,
            &settings,
        )?;
        repeats.push(evaluate(
            &adversary,
            &prepared.source,
            &prepared.split.train,
            &prepared.split.test,
        )?);
    }
    let agg = aggregate(&repeats)?;
    Ok((agg, repeats))
}

fn cell_dir(out_dir: &Path, key: &CellKey) -> PathBuf {
    out_dir
        .join(&key.regime)
        .join(&key.kind)
        .join(format!("size_{}", key.size))
}

fn write_cell_outputs(
    out_dir: &Path,
    key: &CellKey,
    aggregate: &MetricsReport,
    repeats: &[MetricsReport],
) -> Result<()> {
    let dir = cell_dir(out_dir, key);
    for (r, report) in repeats.iter().enumerate() {
        let rep_dir = dir.join(format!("repeat_{r}"));
        std::fs::create_dir_all(&rep_dir)?;
        write_report_csv(report, std::fs::File::create(rep_dir.join("report.csv"))?)?;
        write_report_json(report, std::fs::File::create(rep_dir.join("report.json"))?)?;
    }
    std::fs::create_dir_all(&dir)?;
    write_report_csv(aggregate, std::fs::File::create(dir.join("aggregate.csv"))?)?;
    write_report_json(aggregate, std::fs::File::create(dir.join("aggregate.json"))?)?;
    Ok(())
}

fn finish(
    out_dir: &Path,
    raw_config: &str,
    master_seed: u64,
    keyed: Vec<(CellKey, u64)>,
    outcomes: Vec<(CellKey, u64, CellComputation)>,
) -> Result<ExperimentReport> {
    let mut cells = Vec::new();
    let mut failures = Vec::new();
    for (key, seed, outcome) in outcomes {
        match outcome {
            Ok((agg, repeats)) => {
                write_cell_outputs(out_dir, &key, &agg, &repeats)?;
                cells.push(CellReport { key, seed, aggregate: agg });
            }
            Err(e) => {
                log::error!("cell {key:?} failed: {e}");
                failures.push(CellFailure { key, error: e.to_string() });
            }
        }
    }

    let report = ExperimentReport {
        provenance: Provenance {
            config_sha256: hex_sha256(raw_config),
            master_seed,
            version: env!("CARGO_PKG_VERSION").into(),
            cells: keyed,
        },
        partial: !failures.is_empty(),
        cells,
        failures,
    };

    std::fs::create_dir_all(out_dir)?;
    write_summary_csv(&report, std::fs::File::create(out_dir.join("summary.csv"))?)?;
    serde_json::to_writer_pretty(std::fs::File::create(out_dir.join("report.json"))?, &report)
        .map_err(|e| Error::Parse(format!("report serialization failed: {e}")))?;
    Ok(report)
}

fn hex_sha256(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs the full attack grid described by the config.
///
/// `raw_config` is the exact config text (hashed into the provenance
/// block); `master_seed` and `out_dir` are the post-override values.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    raw_config: &str,
    master_seed: u64,
    out_dir: &Path,
) -> Result<ExperimentReport> {
    let prepared = prepare(cfg, master_seed)?;
    log::info!(
        "source model ready: train accuracy {:.3}, test accuracy {:.3}",
        mialab::nn::classification_accuracy(&prepared.source, &prepared.split.train)?,
        mialab::nn::classification_accuracy(&prepared.source, &prepared.split.test)?,
    );

    let cells = grid_cells(cfg);
    let keyed: Vec<(CellKey, u64)> = cells
        .into_iter()
        .enumerate()
        .map(|(i, key)| (key, derive_indexed_seed(master_seed, tag::CELL, i as u64)))
        .collect();

    let outcomes: Vec<(CellKey, u64, CellComputation)> = keyed
        .par_iter()
        .map(|(key, seed)| (key.clone(), *seed, run_cell(cfg, &prepared, key, *seed)))
        .collect();

    finish(out_dir, raw_config, master_seed, keyed, outcomes)
}

fn appendix_cell(
    cfg: &ExperimentConfig,
    prepared: &Prepared,
    target_pool: &mialab::Dataset64,
    size: usize,
    cell_seed: u64,
) -> CellComputation {
    let app = cfg.appendix.as_ref().expect("validated");
    let victim_mode = parse_mode(&app.victim_mode)
        .ok_or_else(|| Error::InvalidInput(format!("unknown mode `{}`", app.victim_mode)))?;

    let mut head_dims = app.target_hidden.clone();
    head_dims.push(app.target_classes);

    // The victim's target model for this cell.
    let target_parts = partition(
        target_pool,
        &[size, size],
        derive_seed(cell_seed, tag::SPLIT),
        true,
    )?;
    let (target_train, _target_test) = (&target_parts[0], &target_parts[1]);
    let victim_seed = derive_seed(cell_seed, tag::TARGET);
    let victim = transfer_train(
        &TransferPlan {
            source_shallow: prepared.source_shallow.clone(),
            target_head_dims: head_dims.clone(),
            mode: victim_mode,
            train_cfg: TrainConfig {
                epochs: app.target_epochs,
                batch_size: app.target_batch_size,
                learning_rate: app.target_learning_rate,
                momentum: 0.0,
                weight_decay: 0.0,
                seed: victim_seed,
            },
        },
        target_train,
    )?;

    let shadow_size = app
        .shadow_size
        .or_else(|| cfg.shadows.sizes.iter().max().copied())
        .unwrap_or(100);

    let mut repeats = Vec::with_capacity(cfg.attack.repeats);
    for r in 0..cfg.attack.repeats {
        let repeat_seed = derive_indexed_seed(cell_seed, tag::REPEAT, r as u64);
        let plan = BlackboxTargetPlan {
            num_shadows: cfg.shadows.count,
            shadow_size,
            source_arch: prepared.source_arch.clone(),
            shadow_train_cfg: cfg.shadow_train_cfg(derive_seed(repeat_seed, tag::SHADOW)),
            transfer_mode: victim_mode,
            target_head_dims: head_dims.clone(),
            target_train_cfg: TrainConfig {
                epochs: app.target_epochs,
                batch_size: app.target_batch_size,
                learning_rate: app.target_learning_rate,
                momentum: 0.0,
                weight_decay: 0.0,
                seed: derive_seed(repeat_seed, tag::TARGET),
            },
            attack_cfg: cfg.attack_train_cfg(derive_seed(repeat_seed, tag::ATTACK_CLASS)),
        };
        let adversary = run_blackbox_target_attack(
            &victim,
            target_train,
            &prepared.split.shadow_train,
            &prepared.split.shadow_test,
            &plan,
        )?;
        // Membership in the source training data, observed through the
        // victim target model's outputs.
        repeats.push(evaluate(
            &adversary,
            &victim,
            &prepared.split.train,
            &prepared.split.test,
        )?);
    }
    let agg = aggregate(&repeats)?;
    Ok((agg, repeats))
}

/// Runs the target-model attack sweep: cells are keyed by target
/// training-set size, the regime column carries the victim's transfer mode,
/// and the attack model is the per-class DNN.
pub fn run_appendix_experiment(
    cfg: &ExperimentConfig,
    raw_config: &str,
    master_seed: u64,
    out_dir: &Path,
) -> Result<ExperimentReport> {
    let app = cfg
        .appendix
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("config has no [appendix] section".into()))?;
    let prepared = prepare(cfg, master_seed)?;

    let target_pool = synth_generate::<f64>(&SynthConfig {
        class_count: app.target_classes,
        dim: cfg.dataset.dim,
        points_per_class: app.target_points_per_class,
        class_mean_scale: app.target_mean_scale,
        noise_sigma: app.target_noise_sigma,
        seed: derive_indexed_seed(master_seed, tag::DATA, 1),
    })?;

    let keyed: Vec<(CellKey, u64)> = app
        .target_sizes
        .iter()
        .enumerate()
        .map(|(i, &size)| {
            (
                CellKey { regime: app.victim_mode.clone(), kind: "dnn".into(), size },
                derive_indexed_seed(master_seed, tag::CELL, i as u64),
            )
        })
        .collect();

    let outcomes: Vec<(CellKey, u64, CellComputation)> = keyed
        .par_iter()
        .map(|(key, seed)| {
            (
                key.clone(),
                *seed,
                appendix_cell(cfg, &prepared, &target_pool, key.size, *seed),
            )
        })
        .collect();

    finish(out_dir, raw_config, master_seed, keyed, outcomes)
}
