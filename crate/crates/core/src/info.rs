//! Exact entropy, conditional entropy, and mutual information over
//! tabulated joint distributions, in bits.
//!
//! Mutual information is computed twice — as the entropy difference
//! H(S) − H(S|X) and as the expected log-ratio sum — and the two routes must
//! agree within [`DUAL_FORM_TOLERANCE`]; disagreement is an internal
//! consistency failure, never silently absorbed.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::joint::{JointTable, MASS_TOLERANCE};

/// Conversion factor from bits to nats (ln 2), echoed in reports.
pub const NATS_PER_BIT: f64 = std::f64::consts::LN_2;

/// Residue below this magnitude is treated as exact zero. Anything more
/// negative is an internal error.
pub const ZERO_FLOOR: f64 = 1e-12;

/// Maximum allowed disagreement between the two mutual-information routes.
pub const DUAL_FORM_TOLERANCE: f64 = 1e-9;

/// A nonnegative information quantity in bits (log base 2).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct BitsValue(f64);

impl BitsValue {
    /// Wraps a computed value, clamping residue within `±ZERO_FLOOR` to an
    /// exact zero and rejecting anything meaningfully negative.
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::InternalConsistency {
                message: format!("information value is not finite: {value}"),
            });
        }
        if value < -ZERO_FLOOR {
            return Err(Error::InternalConsistency {
                message: format!("information value {value} below the negative floor"),
            });
        }
        if value.abs() <= ZERO_FLOOR {
            return Ok(BitsValue(0.0));
        }
        Ok(BitsValue(value))
    }

    pub const fn zero() -> Self {
        BitsValue(0.0)
    }

    pub fn bits(self) -> f64 {
        self.0
    }

    pub fn nats(self) -> f64 {
        self.0 * NATS_PER_BIT
    }
}

/// Shannon entropy of a normalized probability vector, with 0·log 0 ≡ 0.
pub fn entropy(marginal: &[f64]) -> Result<BitsValue> {
    let mut total = 0.0;
    for (i, &p) in marginal.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::NegativeMass {
                x: i,
                s: 0,
                value: p,
            });
        }
        total += p;
    }
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::NotNormalized { total });
    }
    BitsValue::new(entropy_terms(marginal))
}

fn entropy_terms(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

/// H(S|X) = Σ_x P(x) · H(S | X = x); zero-mass feature cells contribute 0.
pub fn conditional_entropy(joint: &JointTable) -> Result<BitsValue> {
    let px = joint.x_marginal();
    let mut h = 0.0;
    for (x, _, p) in joint.iter_nonzero() {
        // p ≤ px[x], so every term is nonnegative up to rounding
        h -= p * (p / px[x]).log2();
    }
    BitsValue::new(h)
}

/// I(X;S), the expected entropy loss about the profile from observing the
/// channel.
///
/// Returns the log-ratio sum Σ p(x,s)·log₂[p(x,s)/(p(x)p(s))], cross-checked
/// against H(S) − H(S|X).
pub fn mutual_information(joint: &JointTable) -> Result<BitsValue> {
    let px = joint.x_marginal();
    let ps = joint.s_marginal();

    let mut kl_form = 0.0;
    let mut h_s_given_x = 0.0;
    for (x, s, p) in joint.iter_nonzero() {
        kl_form += p * (p / (px[x] * ps[s])).log2();
        h_s_given_x -= p * (p / px[x]).log2();
    }
    let diff_form = entropy_terms(&ps) - h_s_given_x;

    if (kl_form - diff_form).abs() > DUAL_FORM_TOLERANCE {
        return Err(Error::InternalConsistency {
            message: format!(
                "mutual information routes disagree: log-ratio {kl_form} vs entropy difference {diff_form}"
            ),
        });
    }
    BitsValue::new(kl_form)
}

/// Merges feature cells according to `merge_map` (one target per feature
/// cell) and re-tabulates. Coarsening a channel can only destroy
/// information, never create it.
pub fn coarsen_channel(joint: &JointTable, merge_map: &[usize]) -> Result<JointTable> {
    if merge_map.len() != joint.x_arity() {
        return Err(Error::IncompleteMergeMap {
            expected: joint.x_arity(),
            got: merge_map.len(),
        });
    }
    let new_arity = merge_map.iter().max().copied().unwrap_or(0) + 1;
    let entries = joint
        .iter_nonzero()
        .map(|(x, s, p)| (merge_map[x], s, p));
    JointTable::from_sparse(new_arity, joint.s_arity(), entries)
}
