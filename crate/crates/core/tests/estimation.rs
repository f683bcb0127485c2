//! Estimator behavior on sampled data: discretization populations,
//! plug-in accuracy, the permutation floor, and refinement monotonicity.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use pigou_core::batch::RecordBatch;
use pigou_core::bins::{discretize, BinSpec};
use pigou_core::estimate::{empirical_joint, estimate_leakage, EstimatorConfig};
use pigou_core::info::mutual_information;
use pigou_core::schema::{
    AttributeSchema, ChannelKind, FeatureChannel, ProtectedDim, SchemaSpec,
};
use pigou_oracle::{binary_symmetric, sample_rows};

const BS_QUARTER_MI: f64 = 0.188722;

fn one_dim_schema(levels: usize, channel: FeatureChannel) -> AttributeSchema {
    AttributeSchema::build(SchemaSpec {
        protected_dims: vec![ProtectedDim {
            name: "group".into(),
            levels: (0..levels).map(|l| format!("g{l}")).collect(),
        }],
        feature_channels: vec![channel],
    })
    .unwrap()
}

fn categorical_channel(name: &str) -> FeatureChannel {
    FeatureChannel {
        name: name.into(),
        kind: ChannelKind::Categorical,
        bin_spec: None,
    }
}

fn continuous_channel(name: &str, spec: BinSpec) -> FeatureChannel {
    FeatureChannel {
        name: name.into(),
        kind: ChannelKind::Continuous,
        bin_spec: Some(spec),
    }
}

/// Builds a batch for a one-dimension schema from (feature label, level) pairs.
fn batch_from_pairs(schema: &AttributeSchema, pairs: &[(String, usize)]) -> RecordBatch {
    let channel = &schema.feature_channels()[0].name;
    let mut csv = format!("group,{channel}\n");
    for (value, level) in pairs {
        csv.push_str(&format!("g{level},{value}\n"));
    }
    RecordBatch::from_csv_reader(csv.as_bytes(), schema).unwrap()
}

#[test]
fn equal_frequency_quartiles_on_normal_sample() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let values: Vec<f64> = (0..10_000)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let d = discretize(&values, &BinSpec::EqualFrequency { bin_count: 4 }, false).unwrap();
    let mut counts = [0usize; 4];
    for &c in &d.cells {
        counts[c] += 1;
    }
    // continuous draws: no boundary ties, so the split is exact
    assert_eq!(counts, [2500, 2500, 2500, 2500]);
    assert_eq!(d.edges.len(), 5);
}

#[test]
fn plugin_estimate_recovers_binary_symmetric_information() {
    let joint = binary_symmetric(0.25).unwrap();
    let rows = sample_rows(&joint, 100_000, 2024);
    let schema = one_dim_schema(2, categorical_channel("chan"));
    let pairs: Vec<(String, usize)> = rows
        .iter()
        .map(|&(x, s)| (format!("x{x}"), s))
        .collect();
    let batch = batch_from_pairs(&schema, &pairs);
    let ej = empirical_joint(&batch, "chan", &schema, &EstimatorConfig::default(), None).unwrap();
    let mi = mutual_information(&ej.table).unwrap().bits();
    assert!(
        (mi - BS_QUARTER_MI).abs() <= 0.01,
        "plug-in {mi} too far from {BS_QUARTER_MI}"
    );
}

#[test]
fn independent_channel_reports_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let schema = one_dim_schema(4, categorical_channel("noise"));
    let pairs: Vec<(String, usize)> = (0..10_000)
        .map(|_| {
            (
                format!("v{}", rng.random_range(0..6)),
                rng.random_range(0..4),
            )
        })
        .collect();
    let batch = batch_from_pairs(&schema, &pairs);
    let leak =
        estimate_leakage(&batch, "noise", &schema, &EstimatorConfig::default(), None).unwrap();
    assert_eq!(leak.mi_reported.bits(), 0.0);
    assert!(leak.permutation_floor.bits() >= 0.0);
}

#[test]
fn profile_copy_channel_reports_full_information() {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let schema = one_dim_schema(4, categorical_channel("copy"));
    let pairs: Vec<(String, usize)> = (0..10_000)
        .map(|_| {
            let s = rng.random_range(0..4usize);
            (format!("v{s}"), s)
        })
        .collect();
    let batch = batch_from_pairs(&schema, &pairs);
    let leak =
        estimate_leakage(&batch, "copy", &schema, &EstimatorConfig::default(), None).unwrap();
    assert!(
        (leak.mi_reported.bits() - 2.0).abs() <= 0.02,
        "reported {} not near 2 bits",
        leak.mi_reported.bits()
    );
}

#[test]
fn finer_bins_never_lose_plugin_information() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let schema = one_dim_schema(
        2,
        continuous_channel("x", BinSpec::EqualFrequency { bin_count: 2 }),
    );
    let relaxed = EstimatorConfig {
        min_rows: 1,
        ..EstimatorConfig::default()
    };
    for _ in 0..100 {
        let pairs: Vec<(String, usize)> = (0..400)
            .map(|_| {
                let s = rng.random_range(0..2usize);
                // mild dependence so information is nontrivial
                let v: f64 = rng.random::<f64>() + 0.3 * s as f64;
                (format!("{v}"), s)
            })
            .collect();
        let batch = batch_from_pairs(&schema, &pairs);
        let coarse = empirical_joint(
            &batch,
            "x",
            &schema,
            &relaxed,
            Some(&BinSpec::EqualFrequency { bin_count: 2 }),
        )
        .unwrap();
        let fine = empirical_joint(
            &batch,
            "x",
            &schema,
            &relaxed,
            Some(&BinSpec::EqualFrequency { bin_count: 4 }),
        )
        .unwrap();
        let mi_coarse = mutual_information(&coarse.table).unwrap().bits();
        let mi_fine = mutual_information(&fine.table).unwrap().bits();
        assert!(
            mi_fine >= mi_coarse - 1e-12,
            "refinement dropped plug-in MI: {mi_coarse} -> {mi_fine}"
        );
    }
}

#[test]
fn permutation_floor_zeroes_independent_batches() {
    let schema = one_dim_schema(3, categorical_channel("noise"));
    let mut zeros = 0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let pairs: Vec<(String, usize)> = (0..1500)
            .map(|_| {
                (
                    format!("v{}", rng.random_range(0..5)),
                    rng.random_range(0..3),
                )
            })
            .collect();
        let batch = batch_from_pairs(&schema, &pairs);
        let cfg = EstimatorConfig {
            seed,
            ..EstimatorConfig::default()
        };
        let leak = estimate_leakage(&batch, "noise", &schema, &cfg, None).unwrap();
        if leak.mi_reported.bits() == 0.0 {
            zeros += 1;
        }
    }
    assert!(zeros >= 17, "only {zeros}/20 independent batches reported zero");
}

#[test]
fn dropped_rows_leave_table_normalized() {
    let schema = one_dim_schema(2, categorical_channel("chan"));
    let mut csv = String::from("group,chan\n");
    for i in 0..60 {
        match i % 4 {
            0 => csv.push_str("g0,a\n"),
            1 => csv.push_str("g1,b\n"),
            2 => csv.push_str(",a\n"),   // missing dimension
            _ => csv.push_str("g0,\n"), // missing channel
        }
    }
    let batch = RecordBatch::from_csv_reader(csv.as_bytes(), &schema).unwrap();
    let cfg = EstimatorConfig {
        min_rows: 10,
        ..EstimatorConfig::default()
    };
    let ej = empirical_joint(&batch, "chan", &schema, &cfg, None).unwrap();
    assert_eq!(ej.dropped_rows, 30);
    assert_eq!(ej.sample_count, 30);
    let total: f64 = ej.table.iter_nonzero().map(|(_, _, p)| p).sum();
    assert!((total - 1.0).abs() <= 1e-9);
}

#[test]
fn estimates_deterministic_for_fixed_seed() {
    let joint = binary_symmetric(0.25).unwrap();
    let rows = sample_rows(&joint, 5000, 5);
    let schema = one_dim_schema(2, categorical_channel("chan"));
    let pairs: Vec<(String, usize)> = rows.iter().map(|&(x, s)| (format!("x{x}"), s)).collect();
    let batch = batch_from_pairs(&schema, &pairs);
    let cfg = EstimatorConfig {
        seed: 31,
        ..EstimatorConfig::default()
    };
    let a = estimate_leakage(&batch, "chan", &schema, &cfg, None).unwrap();
    let b = estimate_leakage(&batch, "chan", &schema, &cfg, None).unwrap();
    assert_eq!(a.mi_reported.bits(), b.mi_reported.bits());
    assert_eq!(a.permutation_floor.bits(), b.permutation_floor.bits());
}
