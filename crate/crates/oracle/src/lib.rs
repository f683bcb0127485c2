//! Independent brute-force checks for the engine.
//!
//! [`oracle_mi`] recomputes mutual information by direct double summation
//! over every cell, using natural logs and a deliberately naive order. It
//! shares no computation with the engine's information module — only the
//! table type — so agreement between the two is a genuine cross-check, not
//! a tautology.
//!
//! The generators build exact tables with known information content:
//! products (zero), diagonals (log₂ k), binary symmetric channels
//! (1 − H_b(flip)), Dirichlet-random tables, and additive pairs whose
//! channels are independent both marginally and given the profile, so that
//! the sum rule I(X₁X₂;S) = I(X₁;S) + I(X₂;S) holds exactly.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pigou_core::error::Result;
use pigou_core::joint::JointTable;

const LN_2: f64 = std::f64::consts::LN_2;

/// Mutual information in bits by naive double summation:
/// Σ p(x,s) · ln[p(x,s) / (p(x)p(s))] / ln 2, visiting every cell.
#[allow(clippy::needless_range_loop)] // plain indexed loops on purpose
pub fn oracle_mi(joint: &JointTable) -> f64 {
    let nx = joint.x_arity();
    let ns = joint.s_arity();

    let mut px = vec![0.0; nx];
    for (i, slot) in px.iter_mut().enumerate() {
        for j in 0..ns {
            *slot += joint.get(i, j);
        }
    }
    let mut ps = vec![0.0; ns];
    for (j, slot) in ps.iter_mut().enumerate() {
        for i in 0..nx {
            *slot += joint.get(i, j);
        }
    }

    let mut total = 0.0;
    for i in 0..nx {
        for j in 0..ns {
            let p = joint.get(i, j);
            if p > 0.0 {
                total += p * (p / (px[i] * ps[j])).ln() / LN_2;
            }
        }
    }
    total
}

/// How an instance was built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Construction {
    /// Outer product of random marginals; X and S are independent.
    Product { x: usize, s: usize },
    /// Uniform diagonal k×k; X determines S exactly.
    Diagonal { k: usize },
    /// 2×2 channel that flips the bit with the given probability.
    BinarySymmetric { flip: f64 },
    /// All cells drawn jointly from a flat Dirichlet.
    RandomDirichlet { x: usize, s: usize },
    /// Two channels reading disjoint independent halves of the profile.
    AdditivePair {
        x1: usize,
        x2: usize,
        s1: usize,
        s2: usize,
    },
}

/// An exact table with its construction tag and oracle-computed
/// information content.
#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub joint: JointTable,
    pub construction: Construction,
    pub true_mi: f64,
    pub seed: u64,
}

/// Builds a deterministic instance for the given construction and seed.
pub fn generate(construction: Construction, seed: u64) -> Result<GeneratedInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let joint = match construction {
        Construction::Product { x, s } => {
            let px = dirichlet_flat(&mut rng, x);
            let ps = dirichlet_flat(&mut rng, s);
            outer_product(&px, &ps)?
        }
        Construction::Diagonal { k } => {
            let mut weights = vec![0.0; k * k];
            for i in 0..k {
                weights[i * k + i] = 1.0 / k as f64;
            }
            JointTable::from_weights(k, k, &weights)?
        }
        Construction::BinarySymmetric { flip } => binary_symmetric(flip)?,
        Construction::RandomDirichlet { x, s } => {
            let weights = dirichlet_flat(&mut rng, x * s);
            JointTable::from_weights(x, s, &weights)?
        }
        Construction::AdditivePair { x1, x2, s1, s2 } => {
            generate_additive_pair(x1, x2, s1, s2, seed)?.pair
        }
    };
    let true_mi = oracle_mi(&joint);
    Ok(GeneratedInstance {
        joint,
        construction,
        true_mi,
        seed,
    })
}

/// P(X=s') = 1−flip on the diagonal, flip off it, uniform input.
pub fn binary_symmetric(flip: f64) -> Result<JointTable> {
    let d = (1.0 - flip) / 2.0;
    let o = flip / 2.0;
    JointTable::from_weights(2, 2, &[d, o, o, d])
}

/// Exact outer product of two marginals.
pub fn outer_product(px: &[f64], ps: &[f64]) -> Result<JointTable> {
    let weights: Vec<f64> = px
        .iter()
        .flat_map(|&a| ps.iter().map(move |&b| a * b))
        .collect();
    JointTable::from_weights(px.len(), ps.len(), &weights)
}

/// A pair of channels together with their single-channel tables, all over
/// the same composite profile space.
///
/// The profile splits as S = (S_a, S_b) with independent halves; X₁ reads
/// only S_a and X₂ only S_b. That makes X₁ and X₂ independent both
/// marginally and conditionally on S, the regime in which disclosure
/// surcharges add exactly.
#[derive(Debug, Clone)]
pub struct AdditivePair {
    /// Joint of the concatenated channel (X₁,X₂) against S; feature cell
    /// x₁·|X₂| + x₂.
    pub pair: JointTable,
    /// Joint of X₁ alone against S.
    pub first: JointTable,
    /// Joint of X₂ alone against S.
    pub second: JointTable,
    pub seed: u64,
}

pub fn generate_additive_pair(
    x1: usize,
    x2: usize,
    s1: usize,
    s2: usize,
    seed: u64,
) -> Result<AdditivePair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pa = dirichlet_flat(&mut rng, s1);
    let pb = dirichlet_flat(&mut rng, s2);
    // rows of conditionals: P(x1 | s_a), P(x2 | s_b)
    let cond1: Vec<Vec<f64>> = (0..s1).map(|_| dirichlet_flat(&mut rng, x1)).collect();
    let cond2: Vec<Vec<f64>> = (0..s2).map(|_| dirichlet_flat(&mut rng, x2)).collect();

    let s_arity = s1 * s2;
    let mut pair = vec![0.0; x1 * x2 * s_arity];
    let mut first = vec![0.0; x1 * s_arity];
    let mut second = vec![0.0; x2 * s_arity];
    for a in 0..s1 {
        for b in 0..s2 {
            let s = a * s2 + b;
            let p_s = pa[a] * pb[b];
            for i in 0..x1 {
                first[i * s_arity + s] = cond1[a][i] * p_s;
                for j in 0..x2 {
                    pair[(i * x2 + j) * s_arity + s] = cond1[a][i] * cond2[b][j] * p_s;
                }
            }
            for j in 0..x2 {
                second[j * s_arity + s] = cond2[b][j] * p_s;
            }
        }
    }
    Ok(AdditivePair {
        pair: JointTable::from_weights(x1 * x2, s_arity, &pair)?,
        first: JointTable::from_weights(x1, s_arity, &first)?,
        second: JointTable::from_weights(x2, s_arity, &second)?,
        seed,
    })
}

/// A flat Dirichlet draw: normalized i.i.d. Exp(1) variates.
pub fn dirichlet_flat(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            -u.ln()
        })
        .collect();
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    w
}

/// Draws `n` (feature cell, profile cell) pairs from a table by inverse
/// CDF over its nonzero cells. Deterministic for a given seed.
pub fn sample_rows(joint: &JointTable, n: usize, seed: u64) -> Vec<(usize, usize)> {
    let cells: Vec<(usize, usize, f64)> = joint.iter_nonzero().collect();
    let mut cdf = Vec::with_capacity(cells.len());
    let mut acc = 0.0;
    for &(_, _, p) in &cells {
        acc += p;
        cdf.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u: f64 = rng.random::<f64>() * acc;
            let idx = cdf.partition_point(|&c| c < u).min(cells.len() - 1);
            (cells[idx].0, cells[idx].1)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn product_has_zero_information() {
        let inst = generate(Construction::Product { x: 3, s: 4 }, 7).unwrap();
        assert_abs_diff_eq!(inst.true_mi, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn uniform_diagonal_eight_gives_three_bits() {
        let inst = generate(Construction::Diagonal { k: 8 }, 0).unwrap();
        assert_abs_diff_eq!(inst.true_mi, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn binary_symmetric_quarter_flip() {
        // 1 − H_b(0.25) = 0.188722…
        let inst = generate(Construction::BinarySymmetric { flip: 0.25 }, 0).unwrap();
        assert_abs_diff_eq!(inst.true_mi, 0.188722, epsilon = 1e-6);
    }

    #[test]
    fn additive_pair_information_adds_exactly() {
        for seed in 0..20 {
            let ap = generate_additive_pair(3, 4, 2, 3, seed).unwrap();
            let gap = oracle_mi(&ap.pair) - oracle_mi(&ap.first) - oracle_mi(&ap.second);
            assert_abs_diff_eq!(gap, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let a = generate(Construction::RandomDirichlet { x: 5, s: 5 }, 42).unwrap();
        let b = generate(Construction::RandomDirichlet { x: 5, s: 5 }, 42).unwrap();
        for x in 0..5 {
            for s in 0..5 {
                assert_eq!(a.joint.get(x, s), b.joint.get(x, s));
            }
        }
        assert_eq!(a.true_mi, b.true_mi);
    }

    #[test]
    fn sample_rows_deterministic_and_in_range() {
        let t = binary_symmetric(0.25).unwrap();
        let rows = sample_rows(&t, 1000, 9);
        let again = sample_rows(&t, 1000, 9);
        assert_eq!(rows, again);
        assert!(rows.iter().all(|&(x, s)| x < 2 && s < 2));
    }
}
