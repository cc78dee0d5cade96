//! Acceptance suite: one test per shipped criterion, each printing a
//! PASS line with its measurements. Run with `--nocapture` to see them:
//!
//! ```text
//! cargo test -p mialab-cli --test acceptance -- --nocapture
//! ```

use std::collections::BTreeMap;
use std::process::Command;

use mialab::attacks::{
    infer, modified_entropy, run_blackbox_target_attack, run_transmia, threshold_objective,
    Adversary, AttackKind, AttackSettings, BlackboxTargetPlan, ClassEntropies,
};
use mialab::data::{partition, split_four_way, LabeledDataset, Record, SplitSizes, SynthConfig};
use mialab::metrics::{aggregate, evaluate, ConfusionCounts};
use mialab::nn::train::{self, TrainConfig};
use mialab::nn::{gradient_check, Activation, LayeredNet, NetSpec};
use mialab::scalar::entropy_saturation;
use mialab::shadow::{build_attack_training_set, build_shadow_ensemble, Membership, ShadowPlan, ShadowRegime};
use mialab::transfer::{transfer_train, TransferMode, TransferPlan};

// ---------------------------------------------------------------------------
// Criterion 1: modified prediction entropy unit behavior.
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_mpe_unit_suite() {
    // One-hot at the correct label: exactly zero.
    assert_eq!(modified_entropy(&[0.0f64, 1.0, 0.0], 1).unwrap(), 0.0);

    // One-hot at a wrong label: exactly the saturation constant.
    let sat = entropy_saturation::<f64>();
    assert_eq!(modified_entropy(&[0.0f64, 1.0, 0.0], 0).unwrap(), sat);

    // Uniform two-class vector: ln 2 within 1e-9.
    let me = modified_entropy(&[0.5f64, 0.5], 0).unwrap();
    assert!((me - std::f64::consts::LN_2).abs() < 1e-9);

    // Strict monotone decrease in the correct-label confidence for several
    // shapes of the incorrect mass.
    let shapes: [&dyn Fn(f64) -> Vec<f64>; 3] = [
        &|vy| {
            let r = (1.0 - vy) / 3.0;
            vec![vy, r, r, r]
        },
        &|vy| vec![vy, 1.0 - vy, 0.0, 0.0],
        &|vy| {
            let r = (1.0 - vy) / 4.0;
            vec![vy, 2.0 * r, r, r]
        },
    ];
    for shape in shapes {
        let mut prev = f64::INFINITY;
        for k in 1..=9 {
            let vy = k as f64 / 10.0;
            let me = modified_entropy(&shape(vy), 0).unwrap();
            assert!(me < prev, "not strictly decreasing at v_y = {vy}");
            prev = me;
        }
    }
    println!("[criterion 1] PASS - entropy values exact (saturation {sat:.4}) and monotone");
}

// ---------------------------------------------------------------------------
// Criterion 2: analytic gradients against central finite differences.
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_gradient_correctness() {
    use rand::Rng;
    let mut rng = mialab::rng::rng_from_seed(4242);
    let mut worst = 0.0f64;
    for trial in 0..24 {
        let input = rng.gen_range(2..7);
        let hidden = rng.gen_range(3..9);
        let classes = rng.gen_range(2..6);
        let act = match trial % 3 {
            0 => Activation::Relu,
            1 => Activation::Tanh,
            _ => Activation::Identity,
        };
        let spec = NetSpec {
            input_dim: input,
            layer_dims: vec![hidden, classes],
            activations: vec![act, Activation::Identity],
            split_index: 1,
        };
        let net: LayeredNet<f64> = LayeredNet::init(&spec, 9000 + trial).unwrap();
        let x: Vec<f64> = (0..input).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let label = rng.gen_range(0..classes);
        let err = gradient_check(&net, (&x, label), 1e-5).unwrap();
        assert!(err < 1e-4, "trial {trial}: max relative error {err}");
        worst = worst.max(err);
    }
    println!("[criterion 2] PASS - 24 random nets, worst relative error {worst:.2e} < 1e-4");
}

// ---------------------------------------------------------------------------
// Criterion 3: threshold selection equals exhaustive search exactly.
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_threshold_optimality() {
    use rand::Rng;
    let mut rng = mialab::rng::rng_from_seed(333);
    for trial in 0..120 {
        let n_train = rng.gen_range(1..=50);
        let n_test = rng.gen_range(1..=50);
        // Half the instances use a coarse grid to force ties and duplicates.
        let coarse = trial % 2 == 0;
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 {
            if coarse {
                rng.gen_range(0..=15) as f64 / 5.0
            } else {
                rng.gen_range(0.0..3.0)
            }
        };
        let entropies = ClassEntropies {
            train: (0..n_train).map(|_| draw(&mut rng)).collect(),
            test: (0..n_test).map(|_| draw(&mut rng)).collect(),
        };

        let (tau, value) = mialab::attacks::optimize_threshold(&entropies);

        // Exhaustive reference over every observed cut plus the zero cut.
        let mut best = 0usize;
        for &cut in entropies.train.iter().chain(entropies.test.iter()) {
            best = best.max(threshold_objective(&entropies, cut));
        }
        best = best.max(threshold_objective(&entropies, 0.0));

        assert_eq!(value, best, "trial {trial}: objective differs from brute force");
        assert_eq!(
            value,
            threshold_objective(&entropies, tau),
            "trial {trial}: reported tau does not attain the reported objective"
        );
    }
    println!("[criterion 3] PASS - 120 random instances match exhaustive search exactly");
}

// ---------------------------------------------------------------------------
// Criterion 4: metrics against an independent confusion recomputation.
// ---------------------------------------------------------------------------

fn random_eval_instance(
    seed: u64,
) -> (Adversary<f64>, LabeledDataset<f64>, LabeledDataset<f64>) {
    use rand::Rng;
    let mut rng = mialab::rng::rng_from_seed(seed);
    let classes = rng.gen_range(2..5);
    let n = rng.gen_range(3..40);
    let mut make = |offset: u64, n: usize| {
        let records: Vec<Record<f64>> = (0..n)
            .map(|k| {
                let mut v: Vec<f64> = (0..classes).map(|_| rng.gen_range(0.01..1.0)).collect();
                let total: f64 = v.iter().sum();
                v.iter_mut().for_each(|p| *p /= total);
                Record { id: offset + k as u64, features: v, label: k % classes }
            })
            .collect();
        LabeledDataset::new(records, classes).unwrap()
    };
    let members = make(0, n);
    let nonmembers = make(10_000, n);
    let taus: BTreeMap<usize, f64> = (0..classes)
        .map(|c| (c, rng.gen_range(0.0..2.5)))
        .collect();
    (Adversary::EntropyThreshold { per_class_tau: taus }, members, nonmembers)
}

fn identity_box(x: &[f64]) -> mialab::Result<Vec<f64>> {
    Ok(x.to_vec())
}

#[test]
fn criterion_04_metrics_oracle() {
    for trial in 0..110u64 {
        let (adv, members, nonmembers) = random_eval_instance(5000 + trial);
        let report = evaluate(&adv, &identity_box, &members, &nonmembers).unwrap();

        // Independent recomputation straight from the decision rule.
        let mut counts = ConfusionCounts::default();
        let mut per_class: BTreeMap<usize, ConfusionCounts> = BTreeMap::new();
        for (ds, is_member) in [(&members, true), (&nonmembers, false)] {
            for rec in ds.iter() {
                let said_in = infer(&adv, rec.label, &rec.features).unwrap() == Membership::In;
                let slot = per_class.entry(rec.label).or_default();
                match (is_member, said_in) {
                    (true, true) => {
                        counts.true_pos += 1;
                        slot.true_pos += 1;
                    }
                    (true, false) => {
                        counts.false_neg += 1;
                        slot.false_neg += 1;
                    }
                    (false, true) => {
                        counts.false_pos += 1;
                        slot.false_pos += 1;
                    }
                    (false, false) => {
                        counts.true_neg += 1;
                        slot.true_neg += 1;
                    }
                }
            }
        }
        assert_eq!(report.overall.counts, counts, "trial {trial}: counts differ");
        assert_eq!(report.overall.metrics, counts.rates(), "trial {trial}: rates differ");
        for (class, expect) in &per_class {
            let slice = &report.per_class[class];
            assert_eq!(slice.counts, *expect, "trial {trial} class {class}");
            assert_eq!(slice.metrics, expect.rates(), "trial {trial} class {class}");
        }

        // Aggregation over three distinct repeats must match an independent
        // recomputation of the mean and population standard deviation.
        let mut reports = vec![report];
        for variant in 0..2u64 {
            use rand::Rng;
            let mut rng2 = mialab::rng::rng_from_seed(90_000 + trial * 10 + variant);
            let taus: BTreeMap<usize, f64> = (0..members.class_count())
                .map(|c| (c, rng2.gen_range(0.0..2.5)))
                .collect();
            let adv2 = Adversary::EntropyThreshold { per_class_tau: taus };
            reports.push(evaluate(&adv2, &identity_box, &members, &nonmembers).unwrap());
        }
        let agg = aggregate(&reports).unwrap();
        assert_eq!(agg.repeats, reports.len());
        let accs: Vec<f64> = reports
            .iter()
            .map(|r| r.overall.metrics.accuracy.unwrap())
            .collect();
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        let std = (accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / accs.len() as f64).sqrt();
        assert_eq!(agg.overall.metrics.accuracy, Some(mean), "trial {trial}: aggregate mean");
        assert_eq!(agg.overall.dispersion.accuracy, Some(std), "trial {trial}: aggregate std");
    }

    // The always-in adversary on balanced sets: (0.5, 0.5, 1.0) exactly.
    let sat = entropy_saturation::<f64>();
    let (_, members, nonmembers) = random_eval_instance(77);
    let classes = members.class_count();
    let always_in = Adversary::EntropyThreshold {
        per_class_tau: (0..classes).map(|c| (c, sat)).collect(),
    };
    let report = evaluate(&always_in, &identity_box, &members, &nonmembers).unwrap();
    assert_eq!(report.overall.metrics.accuracy, Some(0.5));
    assert_eq!(report.overall.metrics.precision, Some(0.5));
    assert_eq!(report.overall.metrics.recall, Some(1.0));
    println!("[criterion 4] PASS - 110 instances match the confusion oracle exactly; always-in = (0.5, 0.5, 1.0)");
}

// ---------------------------------------------------------------------------
// Criterion 5: transfer contracts.
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_transfer_contracts() {
    let data = mialab::data::synth_generate::<f64>(&SynthConfig {
        class_count: 4,
        dim: 6,
        points_per_class: 50,
        class_mean_scale: 2.0,
        noise_sigma: 0.5,
        seed: 11,
    })
    .unwrap();
    let spec = NetSpec {
        input_dim: 6,
        layer_dims: vec![8, 7, 4],
        activations: vec![Activation::Relu, Activation::Tanh, Activation::Identity],
        split_index: 2,
    };
    let fresh = LayeredNet::init(&spec, 3).unwrap();
    let cfg = TrainConfig { epochs: 25, seed: 5, ..TrainConfig::default() };
    let source = train::train(&fresh, &data, &cfg, &[true, true, true]).unwrap();
    let (g, h) = source.split().unwrap();

    // Split/compose is a forward-output identity, bitwise.
    let recomposed = LayeredNet::from_stacks(g.clone(), h).unwrap();
    for rec in data.iter().take(20) {
        let a = source.forward(&rec.features).unwrap();
        let b = recomposed.forward(&rec.features).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    // Freezing preserves the shallow stack bitwise through real training.
    let frozen = transfer_train(
        &TransferPlan {
            source_shallow: g.clone(),
            target_head_dims: vec![5, 4],
            mode: TransferMode::Freezing,
            train_cfg: TrainConfig { epochs: 15, seed: 9, ..TrainConfig::default() },
        },
        &data,
    )
    .unwrap();
    assert_eq!(&frozen.layers()[..frozen.split_index()], g.layers());

    // Fine-tuning at epoch zero matches the source shallow stack bitwise.
    let tuned0 = transfer_train(
        &TransferPlan {
            source_shallow: g.clone(),
            target_head_dims: vec![5, 4],
            mode: TransferMode::FineTuning,
            train_cfg: TrainConfig { epochs: 0, seed: 9, ..TrainConfig::default() },
        },
        &data,
    )
    .unwrap();
    assert_eq!(&tuned0.layers()[..tuned0.split_index()], g.layers());
    println!("[criterion 5] PASS - freeze, epoch-zero fine-tune, and split/compose are bitwise");
}

// ---------------------------------------------------------------------------
// Criterion 6: transfer shadow training beats the baseline on an
// overfit source (main directional result).
// ---------------------------------------------------------------------------

/// Overfit-source fixture: 100 tightly packed classes, 20 train points per
/// class, and a 150-epoch source run that memorizes them.
fn overfit_fixture(seed: u64) -> (LayeredNet<f64>, mialab::data::FourWaySplit<f64>, f64) {
    let data = mialab::data::synth_generate::<f64>(&SynthConfig {
        class_count: 100,
        dim: 16,
        points_per_class: 60,
        class_mean_scale: 1.0,
        noise_sigma: 1.0,
        seed,
    })
    .unwrap();
    let split = split_four_way(
        &data,
        SplitSizes { train: 2000, test: 2000, shadow_train: 1000, shadow_test: 1000 },
        seed,
    )
    .unwrap();
    let fresh = LayeredNet::init(&NetSpec::dense(16, &[32], 100), seed).unwrap();
    let cfg = TrainConfig { epochs: 150, momentum: 0.9, seed, ..TrainConfig::default() };
    let source = train::train(&fresh, &split.train, &cfg, &[true, true]).unwrap();
    let gap = mialab::nn::classification_accuracy(&source, &split.train).unwrap()
        - mialab::nn::classification_accuracy(&source, &split.test).unwrap();
    (source, split, gap)
}

#[test]
fn criterion_06_freezing_dnn_beats_baseline_dnn_on_overfit_source() {
    let mut freezing_sum = 0.0;
    let mut baseline_sum = 0.0;
    let seeds: Vec<u64> = (1..=5).collect();
    for &seed in &seeds {
        let (source, split, gap) = overfit_fixture(seed);
        assert!(gap >= 0.15, "seed {seed}: source gap {gap:.3} below the overfit bar");

        let settings = AttackSettings::from_train_cfg(TrainConfig {
            epochs: 50,
            seed: 77 + seed,
            ..TrainConfig::default()
        });
        let attack_accuracy = |regime: ShadowRegime| -> f64 {
            let plan = ShadowPlan {
                num_shadows: 25,
                shadow_size: 100,
                regime,
                source_shallow: match regime {
                    ShadowRegime::Baseline => None,
                    _ => Some(source.shallow_stack().unwrap()),
                },
                arch: NetSpec::dense(16, &[32], 100),
                train_cfg: TrainConfig { epochs: 20, seed: 1000 + seed, ..TrainConfig::default() },
            };
            let (adversary, _) = run_transmia(
                &source,
                &split.shadow_train,
                &split.shadow_test,
                &plan,
                AttackKind::Dnn,
                &settings,
            )
            .unwrap();
            evaluate(&adversary, &source, &split.train, &split.test)
                .unwrap()
                .overall
                .metrics
                .accuracy
                .unwrap()
        };
        let frz = attack_accuracy(ShadowRegime::Freezing);
        let base = attack_accuracy(ShadowRegime::Baseline);
        println!("  seed {seed}: gap {gap:.3}, freezing {frz:.4}, baseline {base:.4}");
        freezing_sum += frz;
        baseline_sum += base;
    }
    let n = seeds.len() as f64;
    let margin = freezing_sum / n - baseline_sum / n;
    assert!(
        margin >= 0.03,
        "freezing-baseline margin {margin:.4} below 0.03 (freezing {:.4}, baseline {:.4})",
        freezing_sum / n,
        baseline_sum / n
    );
    println!(
        "[criterion 6] PASS - mean freezing-DNN {:.4} vs baseline-DNN {:.4} (margin {margin:+.4} >= 0.03)",
        freezing_sum / n,
        baseline_sum / n
    );
}

// ---------------------------------------------------------------------------
// Criterion 7: learning-based attack does not fall below the entropy
// attack on a well-trained source.
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_freezing_dnn_matches_or_beats_freezing_mpe_on_well_trained_source() {
    let mut dnn_sum = 0.0;
    let mut mpe_sum = 0.0;
    let seeds: Vec<u64> = (1..=5).collect();
    for &seed in &seeds {
        let data = mialab::data::synth_generate::<f64>(&SynthConfig {
            class_count: 10,
            dim: 16,
            points_per_class: 600,
            class_mean_scale: 1.0,
            noise_sigma: 1.5,
            seed,
        })
        .unwrap();
        let split = split_four_way(
            &data,
            SplitSizes { train: 2000, test: 2000, shadow_train: 1000, shadow_test: 1000 },
            seed,
        )
        .unwrap();
        // A capacity-limited source generalizes: small accuracy gap.
        let fresh = LayeredNet::init(&NetSpec::dense(16, &[8], 10), seed).unwrap();
        let cfg = TrainConfig { epochs: 200, momentum: 0.9, seed, ..TrainConfig::default() };
        let source = train::train(&fresh, &split.train, &cfg, &[true, true]).unwrap();
        let gap = mialab::nn::classification_accuracy(&source, &split.train).unwrap()
            - mialab::nn::classification_accuracy(&source, &split.test).unwrap();
        assert!(gap < 0.05, "seed {seed}: source gap {gap:.3} is not well-trained");

        let plan = ShadowPlan {
            num_shadows: 25,
            shadow_size: 50,
            regime: ShadowRegime::Freezing,
            source_shallow: Some(source.shallow_stack().unwrap()),
            arch: NetSpec::dense(16, &[8], 10),
            train_cfg: TrainConfig { epochs: 600, seed: seed * 1000, ..TrainConfig::default() },
        };
        let settings = AttackSettings::from_train_cfg(TrainConfig {
            epochs: 20,
            weight_decay: 0.001,
            seed: seed * 77,
            ..TrainConfig::default()
        });
        let attack_accuracy = |kind: AttackKind| -> f64 {
            let (adversary, _) = run_transmia(
                &source,
                &split.shadow_train,
                &split.shadow_test,
                &plan,
                kind,
                &settings,
            )
            .unwrap();
            evaluate(&adversary, &source, &split.train, &split.test)
                .unwrap()
                .overall
                .metrics
                .accuracy
                .unwrap()
        };
        let dnn = attack_accuracy(AttackKind::Dnn);
        let mpe = attack_accuracy(AttackKind::Mpe);
        println!("  seed {seed}: gap {gap:.3}, dnn {dnn:.4}, mpe {mpe:.4}");
        dnn_sum += dnn;
        mpe_sum += mpe;
    }
    let n = seeds.len() as f64;
    assert!(
        dnn_sum >= mpe_sum,
        "mean DNN accuracy {:.4} fell below mean MPE accuracy {:.4}",
        dnn_sum / n,
        mpe_sum / n
    );
    println!(
        "[criterion 7] PASS - mean freezing-DNN {:.4} >= mean freezing-MPE {:.4}",
        dnn_sum / n,
        mpe_sum / n
    );
}

// ---------------------------------------------------------------------------
// Criterion 8: the target-model attack stays near chance.
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_blackbox_target_attack_is_near_chance() {
    let mut acc_sum = 0.0;
    let seeds: Vec<u64> = (1..=5).collect();
    for &seed in &seeds {
        let data = mialab::data::synth_generate::<f64>(&SynthConfig {
            class_count: 10,
            dim: 16,
            points_per_class: 640,
            class_mean_scale: 1.0,
            noise_sigma: 1.0,
            seed,
        })
        .unwrap();
        let split = split_four_way(
            &data,
            SplitSizes { train: 2000, test: 2000, shadow_train: 1000, shadow_test: 1000 },
            seed,
        )
        .unwrap();
        let fresh = LayeredNet::init(&NetSpec::dense(16, &[32], 10), seed).unwrap();
        let cfg = TrainConfig { epochs: 120, momentum: 0.9, seed, ..TrainConfig::default() };
        let source = train::train(&fresh, &split.train, &cfg, &[true, true]).unwrap();

        // The victim's target model on a different 6-class task.
        let target_data = mialab::data::synth_generate::<f64>(&SynthConfig {
            class_count: 6,
            dim: 16,
            points_per_class: 80,
            class_mean_scale: 1.0,
            noise_sigma: 1.0,
            seed: 5000 + seed,
        })
        .unwrap();
        let target_parts = partition(&target_data, &[120, 120], 500 + seed, true).unwrap();
        let victim = transfer_train(
            &TransferPlan {
                source_shallow: source.shallow_stack().unwrap(),
                target_head_dims: vec![6],
                mode: TransferMode::Freezing,
                train_cfg: TrainConfig { epochs: 40, seed: 900 + seed, ..TrainConfig::default() },
            },
            &target_parts[0],
        )
        .unwrap();

        let plan = BlackboxTargetPlan {
            num_shadows: 10,
            shadow_size: 200,
            source_arch: NetSpec::dense(16, &[32], 10),
            shadow_train_cfg: TrainConfig { epochs: 30, seed: 1000 + seed, ..TrainConfig::default() },
            transfer_mode: TransferMode::Freezing,
            target_head_dims: vec![6],
            target_train_cfg: TrainConfig { epochs: 40, seed: 2000 + seed, ..TrainConfig::default() },
            attack_cfg: TrainConfig { epochs: 50, seed: 3000 + seed, ..TrainConfig::default() },
        };
        let adversary = run_blackbox_target_attack(
            &victim,
            &target_parts[0],
            &split.shadow_train,
            &split.shadow_test,
            &plan,
        )
        .unwrap();
        let acc = evaluate(&adversary, &victim, &split.train, &split.test)
            .unwrap()
            .overall
            .metrics
            .accuracy
            .unwrap();
        println!("  seed {seed}: target-attack accuracy {acc:.4}");
        acc_sum += acc;
    }
    let mean = acc_sum / seeds.len() as f64;
    assert!(
        (0.43..=0.57).contains(&mean),
        "mean target-attack accuracy {mean:.4} outside [0.43, 0.57]"
    );
    println!("[criterion 8] PASS - mean target-attack accuracy {mean:.4} within [0.43, 0.57]");
}

// ---------------------------------------------------------------------------
// Criterion 9: byte-identical outputs for identical config and seed.
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_default_experiment_is_byte_deterministic() {
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/default.toml");
    let tmp = tempfile::tempdir().unwrap();
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    for out in [&out_a, &out_b] {
        let status = Command::new(env!("CARGO_BIN_EXE_mialab"))
            .args(["run", config, "--seed", "42", "--out"])
            .arg(out)
            .status()
            .expect("binary runs");
        assert!(status.success(), "experiment run failed");
    }
    let summary_a = std::fs::read(out_a.join("summary.csv")).unwrap();
    let summary_b = std::fs::read(out_b.join("summary.csv")).unwrap();
    assert_eq!(summary_a, summary_b, "summary CSVs differ between runs");
    let report_a = std::fs::read(out_a.join("report.json")).unwrap();
    let report_b = std::fs::read(out_b.join("report.json")).unwrap();
    assert_eq!(report_a, report_b, "combined reports differ between runs");
    println!(
        "[criterion 9] PASS - two runs produced byte-identical summary.csv ({} bytes) and report.json",
        summary_a.len()
    );
}

// ---------------------------------------------------------------------------
// Criterion 10: the attack training set is exactly balanced.
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_attack_set_balance() {
    let data = mialab::data::synth_generate::<f64>(&SynthConfig {
        class_count: 5,
        dim: 8,
        points_per_class: 120,
        class_mean_scale: 1.5,
        noise_sigma: 0.8,
        seed: 21,
    })
    .unwrap();
    let split = split_four_way(
        &data,
        SplitSizes { train: 50, test: 50, shadow_train: 250, shadow_test: 250 },
        21,
    )
    .unwrap();
    let fresh = LayeredNet::init(&NetSpec::dense(8, &[10], 5), 2).unwrap();
    let cfg = TrainConfig { epochs: 30, seed: 2, ..TrainConfig::default() };
    let source = train::train(&fresh, &split.train, &cfg, &[true, true]).unwrap();

    let mut plans_checked = 0;
    for regime in [ShadowRegime::Baseline, ShadowRegime::Freezing, ShadowRegime::FineTuning] {
        for (num_shadows, shadow_size) in [(1usize, 7usize), (4, 25), (9, 100)] {
            let plan = ShadowPlan {
                num_shadows,
                shadow_size,
                regime,
                source_shallow: match regime {
                    ShadowRegime::Baseline => None,
                    _ => Some(source.shallow_stack().unwrap()),
                },
                arch: NetSpec::dense(8, &[10], 5),
                train_cfg: TrainConfig { epochs: 3, seed: 31, ..TrainConfig::default() },
            };
            let ensemble =
                build_shadow_ensemble(&split.shadow_train, &split.shadow_test, &plan).unwrap();
            let records = build_attack_training_set(&ensemble).unwrap();
            assert_eq!(records.len(), 2 * num_shadows * shadow_size);
            let ins = records.iter().filter(|r| r.membership == Membership::In).count();
            assert_eq!(
                ins * 2,
                records.len(),
                "imbalance under {regime:?} with {num_shadows} shadows of {shadow_size}"
            );
            plans_checked += 1;
        }
    }
    println!("[criterion 10] PASS - exact in/out balance across {plans_checked} plans");
}
