//! Regenerates the shipped fitness-app fixture deterministically:
//!
//! ```sh
//! cargo run -p pigou-cli --example gen_fixture
//! ```
//!
//! The planted story: when someone opens a fitness app is strongly tied to
//! their (age band, ability) intersection — older disabled users cluster in
//! the early-morning block — the plan tier is mildly tied to it, and the
//! battery level at open is pure noise. The generator prints the exact
//! information content of each planted channel, computed by the
//! brute-force oracle, so the fixture's ground truth is on record.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::PathBuf;

use pigou_core::bins::BinSpec;
use pigou_core::joint::JointTable;
use pigou_core::schema::{ChannelKind, FeatureChannel, ProtectedDim, SchemaSpec};
use pigou_oracle::oracle_mi;

const SEED: u64 = 20260801;
const ROWS: usize = 6000;

const AGE_BANDS: [&str; 4] = ["18-29", "30-44", "45-64", "65+"];
const GENDERS: [&str; 3] = ["female", "male", "nonbinary"];
const ABILITIES: [&str; 2] = ["disabled", "nondisabled"];
const TIERS: [&str; 3] = ["free", "plus", "pro"];
const HOUR_BLOCKS: usize = 8;

fn profile_weights() -> Vec<f64> {
    let age = [0.30, 0.30, 0.25, 0.15];
    let gender = [0.49, 0.48, 0.03];
    let ability = [0.15, 0.85];
    let mut w = Vec::with_capacity(24);
    for (a, &wa) in age.iter().enumerate() {
        for &wg in &gender {
            for (d, &wd) in ability.iter().enumerate() {
                // older disabled users are overrepresented relative to the
                // product prior: the intersection matters, not the margins
                let boost = if a == 3 && d == 0 { 2.5 } else { 1.0 };
                w.push(wa * wg * wd * boost);
            }
        }
    }
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

/// flat profile index -> (age, gender, ability)
fn unflatten(s: usize) -> (usize, usize, usize) {
    (s / 6, (s / 2) % 3, s % 2)
}

fn hour_block_dist(s: usize) -> [f64; HOUR_BLOCKS] {
    let (a, g, d) = unflatten(s);
    if a == 3 && d == 0 {
        // the planted intersection: a fixed early-morning habit
        let rest = 0.2 / (HOUR_BLOCKS - 1) as f64;
        let mut p = [rest; HOUR_BLOCKS];
        p[1] = 0.8;
        p
    } else {
        let pref = [4usize, 3, 2, 1][a].saturating_sub(usize::from(d == 0)).max(1);
        let conc = 0.45 + if g == 0 { 0.05 } else { 0.0 };
        let rest = (1.0 - conc) / (HOUR_BLOCKS - 1) as f64;
        let mut p = [rest; HOUR_BLOCKS];
        p[pref] = conc;
        p
    }
}

fn tier_dist(s: usize) -> [f64; 3] {
    let (a, _, d) = unflatten(s);
    let mut free = [0.30, 0.35, 0.42, 0.50][a];
    if d == 0 {
        free += 0.18;
    }
    let plus = 0.30;
    [free, plus, 1.0 - free - plus]
}

fn draw(rng: &mut ChaCha8Rng, dist: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    dist.len() - 1
}

fn main() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/fitness");
    std::fs::create_dir_all(&dir).expect("create fixture dir");

    let schema = SchemaSpec {
        protected_dims: vec![
            ProtectedDim {
                name: "age_band".into(),
                levels: AGE_BANDS.iter().map(|s| s.to_string()).collect(),
            },
            ProtectedDim {
                name: "gender".into(),
                levels: GENDERS.iter().map(|s| s.to_string()).collect(),
            },
            ProtectedDim {
                name: "ability".into(),
                levels: ABILITIES.iter().map(|s| s.to_string()).collect(),
            },
        ],
        feature_channels: vec![
            FeatureChannel {
                name: "open_hour".into(),
                kind: ChannelKind::Continuous,
                bin_spec: Some(BinSpec::EqualWidth {
                    bin_count: HOUR_BLOCKS,
                }),
            },
            FeatureChannel {
                name: "plan_tier".into(),
                kind: ChannelKind::Categorical,
                bin_spec: None,
            },
            FeatureChannel {
                name: "battery_pct".into(),
                kind: ChannelKind::Continuous,
                bin_spec: Some(BinSpec::EqualFrequency { bin_count: 5 }),
            },
        ],
    };
    let schema_json = serde_json::to_string_pretty(&schema).unwrap() + "\n";
    std::fs::write(dir.join("schema.json"), schema_json).unwrap();

    // exact planted joints, for the record
    let p_s = profile_weights();
    let hour_joint: Vec<f64> = (0..HOUR_BLOCKS)
        .flat_map(|b| (0..24).map(move |s| (b, s)))
        .map(|(b, s)| p_s[s] * hour_block_dist(s)[b])
        .collect();
    let hour_table = JointTable::from_weights(HOUR_BLOCKS, 24, &hour_joint).unwrap();
    let tier_joint: Vec<f64> = (0..3)
        .flat_map(|t| (0..24).map(move |s| (t, s)))
        .map(|(t, s)| p_s[s] * tier_dist(s)[t])
        .collect();
    let tier_table = JointTable::from_weights(3, 24, &tier_joint).unwrap();
    println!("planted I(open_hour block; profile) = {:.6} bits", oracle_mi(&hour_table));
    println!("planted I(plan_tier; profile)      = {:.6} bits", oracle_mi(&tier_table));
    println!("planted I(battery_pct; profile)    = 0 by construction");

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut csv = String::from("age_band,gender,ability,open_hour,plan_tier,battery_pct\n");
    for _ in 0..ROWS {
        let s = draw(&mut rng, &p_s);
        let (a, g, d) = unflatten(s);
        let block = draw(&mut rng, &hour_block_dist(s));
        let hour = 3.0 * block as f64 + 0.05 + rng.random::<f64>() * 2.90;
        let tier = TIERS[draw(&mut rng, &tier_dist(s))];
        let battery = 5.0 + rng.random::<f64>() * 90.0;

        // sprinkle realistic missingness
        let gender_str = if rng.random::<f64>() < 0.004 { "" } else { GENDERS[g] };
        let hour_str = if rng.random::<f64>() < 0.005 {
            String::new()
        } else {
            format!("{hour:.4}")
        };
        let battery_str = if rng.random::<f64>() < 0.010 {
            String::new()
        } else {
            format!("{battery:.2}")
        };
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            AGE_BANDS[a], gender_str, ABILITIES[d], hour_str, tier, battery_str
        )
        .unwrap();
    }
    std::fs::write(dir.join("records.csv"), csv).unwrap();

    let run = r#"{
  "schema_path": "schema.json",
  "data_path": "records.csv",
  "channels": "all",
  "estimator": {
    "bias_mode": "miller_madow",
    "permutation_count": 200,
    "percentile": 0.95,
    "min_rows": 30,
    "seed": 7
  },
  "policy": {
    "c_p": 0.01,
    "lambda": 2.0,
    "lambda_grid": [0.0, 1.0, 2.0, 4.0],
    "currency": "EUR",
    "rounding_dp": 6
  },
  "mode": "marginal",
  "output_path": "out/report.json"
}
"#;
    std::fs::write(dir.join("run.json"), run).unwrap();
    println!("fixture written to {}", dir.display());
}
