//! Experiment configuration: TOML schema, defaults, and validation.
//!
//! Validation is exhaustive: every violation is reported at once with the
//! path of the offending field, and nothing is computed until the whole
//! config passes.

use serde::{Deserialize, Serialize};

use mialab::attacks::AttackKind;
use mialab::nn::TrainConfig;
use mialab::shadow::ShadowRegime;
use mialab::transfer::TransferMode;

/// One validation failure, addressed by field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "defaults::master_seed")]
    pub master_seed: u64,
    #[serde(default = "defaults::out_dir")]
    pub out_dir: String,
    /// Worker threads for grid cells; 0 keeps the process default.
    #[serde(default)]
    pub workers: usize,
    pub dataset: DatasetSection,
    pub split: SplitSection,
    pub source: SourceSection,
    #[serde(default)]
    pub shadows: ShadowSection,
    #[serde(default)]
    pub attack: AttackSection,
    #[serde(default)]
    pub appendix: Option<AppendixSection>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    /// `synth` or `file`.
    #[serde(default = "defaults::dataset_kind")]
    pub kind: String,
    /// Feature table path for `kind = "file"`.
    #[serde(default)]
    pub path: Option<String>,
    /// Class count; optional for files (inferred from labels).
    #[serde(default = "defaults::classes")]
    pub classes: usize,
    #[serde(default = "defaults::dim")]
    pub dim: usize,
    #[serde(default = "defaults::points_per_class")]
    pub points_per_class: usize,
    #[serde(default = "defaults::class_mean_scale")]
    pub class_mean_scale: f64,
    #[serde(default = "defaults::noise_sigma")]
    pub noise_sigma: f64,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSection {
    pub train: usize,
    pub test: usize,
    pub shadow_train: usize,
    pub shadow_test: usize,
    #[serde(default = "defaults::yes")]
    pub stratified: bool,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    pub hidden: Vec<usize>,
    #[serde(default = "defaults::source_epochs")]
    pub epochs: usize,
    #[serde(default = "defaults::batch_size")]
    pub batch_size: usize,
    #[serde(default = "defaults::learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "defaults::source_momentum")]
    pub momentum: f64,
    #[serde(default)]
    pub weight_decay: f64,
    /// Keep the epoch snapshot with the best test-split accuracy.
    #[serde(default = "defaults::yes")]
    pub select_best_epoch: bool,
    /// Shallow/deep boundary; defaults to every layer but the last.
    #[serde(default)]
    pub transfer_split: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ShadowSection {
    /// Shadow models per attack.
    #[serde(default = "defaults::shadow_count")]
    pub count: usize,
    /// Shadow training-set sizes to sweep.
    #[serde(default = "defaults::shadow_sizes")]
    pub sizes: Vec<usize>,
    /// Head widths above the seam; defaults to the source head.
    #[serde(default)]
    pub head_hidden: Option<Vec<usize>>,
    #[serde(default = "defaults::shadow_epochs")]
    pub epochs: usize,
    #[serde(default = "defaults::batch_size")]
    pub batch_size: usize,
    #[serde(default = "defaults::learning_rate")]
    pub learning_rate: f64,
    #[serde(default)]
    pub momentum: f64,
    #[serde(default)]
    pub weight_decay: f64,
}

impl Default for ShadowSection {
    fn default() -> Self {
        toml::from_str("").expect("empty shadow section deserializes")
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSection {
    /// Subset of `dnn`, `svm`, `mpe`.
    #[serde(default = "defaults::kinds")]
    pub kinds: Vec<String>,
    /// Subset of `baseline`, `freezing`, `fine_tuning`.
    #[serde(default = "defaults::regimes")]
    pub regimes: Vec<String>,
    #[serde(default = "defaults::repeats")]
    pub repeats: usize,
    #[serde(default = "defaults::dnn_epochs")]
    pub dnn_epochs: usize,
    #[serde(default = "defaults::batch_size")]
    pub dnn_batch_size: usize,
    #[serde(default = "defaults::learning_rate")]
    pub dnn_learning_rate: f64,
    #[serde(default)]
    pub dnn_momentum: f64,
    #[serde(default = "defaults::svm_epochs")]
    pub svm_epochs: usize,
    #[serde(default = "defaults::svm_lambda")]
    pub svm_lambda: f64,
    /// Extra baseline control at this shadow size (full-knowledge baseline).
    #[serde(default)]
    pub baseline_full_size: Option<usize>,
}

impl Default for AttackSection {
    fn default() -> Self {
        toml::from_str("").expect("empty attack section deserializes")
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AppendixSection {
    /// The victim's transfer approach: `freezing` or `fine_tuning`.
    pub victim_mode: String,
    /// The attacker's approach; must equal the victim's.
    pub attacker_mode: String,
    /// Target training-set sizes to sweep (test sets match).
    pub target_sizes: Vec<usize>,
    /// Training-set size of each shadow source model; defaults to the
    /// largest entry of `shadows.sizes`.
    #[serde(default)]
    pub shadow_size: Option<usize>,
    #[serde(default = "defaults::classes")]
    pub target_classes: usize,
    #[serde(default = "defaults::points_per_class")]
    pub target_points_per_class: usize,
    #[serde(default = "defaults::class_mean_scale")]
    pub target_mean_scale: f64,
    #[serde(default = "defaults::noise_sigma")]
    pub target_noise_sigma: f64,
    /// Hidden widths of the target head; the class layer is appended.
    #[serde(default)]
    pub target_hidden: Vec<usize>,
    #[serde(default = "defaults::shadow_epochs")]
    pub target_epochs: usize,
    #[serde(default = "defaults::batch_size")]
    pub target_batch_size: usize,
    #[serde(default = "defaults::learning_rate")]
    pub target_learning_rate: f64,
}

mod defaults {
    pub fn master_seed() -> u64 {
        42
    }
    pub fn out_dir() -> String {
        "out".into()
    }
    pub fn dataset_kind() -> String {
        "synth".into()
    }
    pub fn classes() -> usize {
        10
    }
    pub fn dim() -> usize {
        16
    }
    pub fn points_per_class() -> usize {
        240
    }
    pub fn class_mean_scale() -> f64 {
        1.0
    }
    pub fn noise_sigma() -> f64 {
        0.8
    }
    pub fn yes() -> bool {
        true
    }
    pub fn source_epochs() -> usize {
        120
    }
    pub fn source_momentum() -> f64 {
        0.9
    }
    pub fn batch_size() -> usize {
        32
    }
    pub fn learning_rate() -> f64 {
        0.1
    }
    pub fn shadow_count() -> usize {
        100
    }
    pub fn shadow_sizes() -> Vec<usize> {
        vec![100, 200, 300, 400, 500, 600, 800, 1000]
    }
    pub fn shadow_epochs() -> usize {
        50
    }
    pub fn kinds() -> Vec<String> {
        vec!["dnn".into(), "svm".into(), "mpe".into()]
    }
    pub fn regimes() -> Vec<String> {
        vec!["baseline".into(), "freezing".into(), "fine_tuning".into()]
    }
    pub fn repeats() -> usize {
        10
    }
    pub fn dnn_epochs() -> usize {
        50
    }
    pub fn svm_epochs() -> usize {
        200
    }
    pub fn svm_lambda() -> f64 {
        1e-3
    }
}

pub fn parse_kind(s: &str) -> Option<AttackKind> {
    match s {
        "dnn" => Some(AttackKind::Dnn),
        "svm" => Some(AttackKind::Svm),
        "mpe" => Some(AttackKind::Mpe),
        _ => None,
    }
}

pub fn parse_regime(s: &str) -> Option<ShadowRegime> {
    match s {
        "baseline" => Some(ShadowRegime::Baseline),
        "freezing" => Some(ShadowRegime::Freezing),
        "fine_tuning" => Some(ShadowRegime::FineTuning),
        _ => None,
    }
}

pub fn parse_mode(s: &str) -> Option<TransferMode> {
    match s {
        "freezing" => Some(TransferMode::Freezing),
        "fine_tuning" => Some(TransferMode::FineTuning),
        _ => None,
    }
}

impl ExperimentConfig {
    pub fn source_train_cfg(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.source.epochs,
            batch_size: self.source.batch_size,
            learning_rate: self.source.learning_rate,
            momentum: self.source.momentum,
            weight_decay: self.source.weight_decay,
            seed,
        }
    }

    pub fn shadow_train_cfg(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.shadows.epochs,
            batch_size: self.shadows.batch_size,
            learning_rate: self.shadows.learning_rate,
            momentum: self.shadows.momentum,
            weight_decay: self.shadows.weight_decay,
            seed,
        }
    }

    pub fn attack_train_cfg(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.attack.dnn_epochs,
            batch_size: self.attack.dnn_batch_size,
            learning_rate: self.attack.dnn_learning_rate,
            momentum: self.attack.dnn_momentum,
            weight_decay: 0.0,
            seed,
        }
    }

    /// Number of layers in the source network.
    pub fn source_layers(&self) -> usize {
        self.source.hidden.len() + 1
    }

    /// The shallow/deep boundary, defaulting to all layers but the last.
    pub fn transfer_split(&self) -> usize {
        self.source
            .transfer_split
            .unwrap_or_else(|| self.source_layers().saturating_sub(1))
    }
}

/// Parses and validates a config. All violations are reported together; the
/// config is only returned when the list is empty.
pub fn validate_config(raw: &str) -> Result<ExperimentConfig, Vec<ConfigIssue>> {
    let cfg: ExperimentConfig = toml::from_str(raw).map_err(|e| {
        vec![ConfigIssue { path: "<toml>".into(), message: e.message().to_string() }]
    })?;
    let issues = semantic_issues(&cfg);
    if issues.is_empty() {
        Ok(cfg)
    } else {
        Err(issues)
    }
}

fn semantic_issues(cfg: &ExperimentConfig) -> Vec<ConfigIssue> {
    let mut issues = Vec::new();
    let mut push = |path: &str, message: String| {
        issues.push(ConfigIssue { path: path.into(), message });
    };

    // dataset
    match cfg.dataset.kind.as_str() {
        "synth" => {
            if cfg.dataset.classes == 0 {
                push("dataset.classes", "must be positive".into());
            }
            if cfg.dataset.dim == 0 {
                push("dataset.dim", "must be positive".into());
            }
            if cfg.dataset.points_per_class == 0 {
                push("dataset.points_per_class", "must be positive".into());
            }
            if !cfg.dataset.noise_sigma.is_finite() || cfg.dataset.noise_sigma <= 0.0 {
                push("dataset.noise_sigma", "must be positive".into());
            }
            if !cfg.dataset.class_mean_scale.is_finite() || cfg.dataset.class_mean_scale <= 0.0 {
                push("dataset.class_mean_scale", "must be positive".into());
            }
        }
        "file" => {
            if cfg.dataset.path.is_none() {
                push("dataset.path", "required when kind = \"file\"".into());
            }
        }
        other => push("dataset.kind", format!("unknown kind `{other}` (synth | file)")),
    }

    // split (full feasibility needs the loaded dataset; synth sizes are known here)
    let split = &cfg.split;
    for (name, v) in [
        ("split.train", split.train),
        ("split.test", split.test),
        ("split.shadow_train", split.shadow_train),
        ("split.shadow_test", split.shadow_test),
    ] {
        if v == 0 {
            push(name, "must be positive".into());
        } else if split.stratified && cfg.dataset.kind == "synth" && cfg.dataset.classes > 0
            && v % cfg.dataset.classes != 0
        {
            push(name, format!("not divisible by dataset.classes = {}", cfg.dataset.classes));
        }
    }
    if cfg.dataset.kind == "synth" {
        let total = split.train + split.test + split.shadow_train + split.shadow_test;
        let available = cfg.dataset.classes * cfg.dataset.points_per_class;
        if total > available {
            push(
                "split",
                format!("requested {total} records but the synthetic dataset holds {available}"),
            );
        }
    }

    // source
    if cfg.source.hidden.is_empty() {
        push("source.hidden", "at least one hidden layer is required for a transfer split".into());
    }
    if cfg.source.hidden.contains(&0) {
        push("source.hidden", "layer widths must be positive".into());
    }
    for (name, cfg_check) in [
        ("source", cfg.source_train_cfg(0)),
        ("shadows", cfg.shadow_train_cfg(0)),
        ("attack", cfg.attack_train_cfg(0)),
    ] {
        if let Err(e) = cfg_check.validate() {
            push(name, e.to_string());
        }
    }
    let layers = cfg.source_layers();
    let ts = cfg.transfer_split();
    if ts == 0 || ts >= layers {
        push(
            "source.transfer_split",
            format!("{ts} leaves an empty stack (network has {layers} layers)"),
        );
    }

    // shadows
    if cfg.shadows.count == 0 {
        push("shadows.count", "must be positive".into());
    }
    if cfg.shadows.sizes.is_empty() {
        push("shadows.sizes", "must not be empty".into());
    }
    for (i, &size) in cfg.shadows.sizes.iter().enumerate() {
        if size == 0 {
            push(&format!("shadows.sizes[{i}]"), "must be positive".into());
        } else if size > split.shadow_train || size > split.shadow_test {
            push(
                &format!("shadows.sizes[{i}]"),
                format!(
                    "{size} exceeds the shadow pools ({} train / {} test)",
                    split.shadow_train, split.shadow_test
                ),
            );
        }
    }
    if let Some(hh) = &cfg.shadows.head_hidden {
        if hh.contains(&0) {
            push("shadows.head_hidden", "layer widths must be positive".into());
        }
    }

    // attack
    if cfg.attack.repeats == 0 {
        push("attack.repeats", "must be at least 1".into());
    }
    if cfg.attack.kinds.is_empty() {
        push("attack.kinds", "must not be empty".into());
    }
    for (i, kind) in cfg.attack.kinds.iter().enumerate() {
        if parse_kind(kind).is_none() {
            push(&format!("attack.kinds[{i}]"), format!("unknown kind `{kind}` (dnn | svm | mpe)"));
        }
    }
    if cfg.attack.regimes.is_empty() {
        push("attack.regimes", "must not be empty".into());
    }
    for (i, regime) in cfg.attack.regimes.iter().enumerate() {
        if parse_regime(regime).is_none() {
            push(
                &format!("attack.regimes[{i}]"),
                format!("unknown regime `{regime}` (baseline | freezing | fine_tuning)"),
            );
        }
    }
    if !cfg.attack.svm_lambda.is_finite() || cfg.attack.svm_lambda <= 0.0 {
        push("attack.svm_lambda", "must be positive".into());
    }
    if cfg.attack.svm_epochs == 0 {
        push("attack.svm_epochs", "must be positive".into());
    }
    if let Some(full) = cfg.attack.baseline_full_size {
        if full == 0 || full > split.shadow_train || full > split.shadow_test {
            push(
                "attack.baseline_full_size",
                format!(
                    "{full} exceeds the shadow pools ({} train / {} test)",
                    split.shadow_train, split.shadow_test
                ),
            );
        }
    }

    // appendix
    if let Some(app) = &cfg.appendix {
        match (parse_mode(&app.victim_mode), parse_mode(&app.attacker_mode)) {
            (None, _) => push(
                "appendix.victim_mode",
                format!("unknown mode `{}` (freezing | fine_tuning)", app.victim_mode),
            ),
            (_, None) => push(
                "appendix.attacker_mode",
                format!("unknown mode `{}` (freezing | fine_tuning)", app.attacker_mode),
            ),
            (Some(v), Some(a)) if v != a => push(
                "appendix.attacker_mode",
                "the attacker's transfer mode must equal the victim's".into(),
            ),
            _ => {}
        }
        if app.target_sizes.is_empty() {
            push("appendix.target_sizes", "must not be empty".into());
        }
        if app.target_classes == 0 {
            push("appendix.target_classes", "must be positive".into());
        }
        for (i, &size) in app.target_sizes.iter().enumerate() {
            let path = format!("appendix.target_sizes[{i}]");
            if size == 0 {
                push(&path, "must be positive".into());
            } else {
                if app.target_classes > 0 && size % app.target_classes != 0 {
                    push(
                        &path,
                        format!("not divisible by appendix.target_classes = {}", app.target_classes),
                    );
                }
                if app.target_classes > 0
                    && 2 * size > app.target_classes * app.target_points_per_class
                {
                    push(
                        &path,
                        format!(
                            "train + test of {size} each exceed the target dataset ({} records)",
                            app.target_classes * app.target_points_per_class
                        ),
                    );
                }
            }
        }
        if !app.target_noise_sigma.is_finite() || app.target_noise_sigma <= 0.0 {
            push("appendix.target_noise_sigma", "must be positive".into());
        }
        if app.target_hidden.contains(&0) {
            push("appendix.target_hidden", "layer widths must be positive".into());
        }
        if let Some(size) = app.shadow_size {
            if size == 0 || size > split.shadow_train {
                push(
                    "appendix.shadow_size",
                    format!("{size} exceeds the shadow train pool ({})", split.shadow_train),
                );
            }
        }
    }

    issues
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[dataset]
classes = 4
dim = 8
points_per_class = 600

[split]
train = 40
test = 40
shadow_train = 1000
shadow_test = 1000

[source]
hidden = [16]
"#;

    #[test]
    fn minimal_config_echoes_protocol_defaults() {
        let cfg = validate_config(MINIMAL).unwrap();
        assert_eq!(cfg.shadows.count, 100);
        assert_eq!(cfg.shadows.sizes, vec![100, 200, 300, 400, 500, 600, 800, 1000]);
        assert_eq!(cfg.attack.repeats, 10);
        assert_eq!(cfg.attack.dnn_epochs, 50);
        assert_eq!(cfg.attack.kinds, vec!["dnn", "svm", "mpe"]);
        assert_eq!(cfg.source.epochs, 120);
        assert_eq!(cfg.transfer_split(), 1);
        assert_eq!(cfg.master_seed, 42);
    }

    #[test]
    fn oversized_sweep_entry_names_the_field() {
        let raw = format!("{MINIMAL}\n[shadows]\nsizes = [100, 10000]\n");
        let issues = validate_config(&raw).unwrap_err();
        assert!(issues.iter().any(|i| i.path == "shadows.sizes[1]"));
    }

    #[test]
    fn zero_repeats_is_rejected() {
        let raw = format!("{MINIMAL}\n[attack]\nrepeats = 0\n");
        let issues = validate_config(&raw).unwrap_err();
        assert!(issues.iter().any(|i| i.path == "attack.repeats"));
    }

    #[test]
    fn violations_are_collected_together() {
        let raw = r#"
[dataset]
classes = 0
dim = 0
points_per_class = 100

[split]
train = 40
test = 40
shadow_train = 120
shadow_test = 120

[source]
hidden = []

[attack]
repeats = 0
kinds = ["laser"]
"#;
        let issues = validate_config(raw).unwrap_err();
        let paths: Vec<&str> = issues.iter().map(|i| i.path.as_str()).collect();
        for expected in [
            "dataset.classes",
            "dataset.dim",
            "source.hidden",
            "attack.repeats",
            "attack.kinds[0]",
        ] {
            assert!(paths.contains(&expected), "missing issue for {expected}: {paths:?}");
        }
    }

    #[test]
    fn mismatched_appendix_modes_are_rejected() {
        let raw = format!(
            "{MINIMAL}\n[appendix]\nvictim_mode = \"freezing\"\nattacker_mode = \"fine_tuning\"\ntarget_sizes = [40]\ntarget_classes = 4\n"
        );
        let issues = validate_config(&raw).unwrap_err();
        assert!(issues.iter().any(|i| i.path == "appendix.attacker_mode"));
    }

    #[test]
    fn malformed_toml_is_a_single_issue() {
        let issues = validate_config("not [valid toml").unwrap_err();
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].path, "<toml>");
    }
}
