//! Validated probability tables over (feature cell × profile cell).
//!
//! Construction re-normalizes nonnegative weights to total mass 1 and keeps
//! the pre-normalization total around for audit. Zero rows and columns are
//! retained: they carry zero mass and contribute nothing downstream.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Tables with more cells than this are stored sparsely.
pub const SPARSE_THRESHOLD: usize = 10_000;

/// Absolute tolerance on total mass for inputs that claim to be normalized.
pub const MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
enum Storage {
    Dense(Vec<f64>),
    Sparse(BTreeMap<(u32, u32), f64>),
}

/// A normalized joint distribution P(X, S).
#[derive(Debug, Clone)]
pub struct JointTable {
    x_arity: usize,
    s_arity: usize,
    storage: Storage,
    prenorm_total: f64,
}

impl JointTable {
    /// Builds a table from dense row-major weights (`x_arity * s_arity`
    /// entries, feature-cell major).
    pub fn from_weights(x_arity: usize, s_arity: usize, weights: &[f64]) -> Result<Self> {
        let cells = check_arity(x_arity, s_arity)?;
        if weights.len() != cells {
            return Err(Error::ShapeMismatch {
                expected: cells,
                got: weights.len(),
            });
        }
        let mut total = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            check_mass(i / s_arity, i % s_arity, w)?;
            total += w;
        }
        if total <= 0.0 {
            return Err(Error::AllZero);
        }
        let storage = if cells > SPARSE_THRESHOLD {
            let mut map = BTreeMap::new();
            for (i, &w) in weights.iter().enumerate() {
                if w > 0.0 {
                    map.insert(((i / s_arity) as u32, (i % s_arity) as u32), w / total);
                }
            }
            Storage::Sparse(map)
        } else {
            Storage::Dense(weights.iter().map(|w| w / total).collect())
        };
        Ok(JointTable {
            x_arity,
            s_arity,
            storage,
            prenorm_total: total,
        })
    }

    /// Builds a table from sparse weights; duplicate coordinates accumulate.
    pub fn from_sparse(
        x_arity: usize,
        s_arity: usize,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let cells = check_arity(x_arity, s_arity)?;
        let mut map: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        let mut total = 0.0;
        for (x, s, w) in entries {
            if x >= x_arity || s >= s_arity {
                return Err(Error::ShapeMismatch {
                    expected: cells,
                    got: x * s_arity + s + 1,
                });
            }
            check_mass(x, s, w)?;
            if w > 0.0 {
                *map.entry((x as u32, s as u32)).or_insert(0.0) += w;
                total += w;
            }
        }
        if total <= 0.0 {
            return Err(Error::AllZero);
        }
        for v in map.values_mut() {
            *v /= total;
        }
        let storage = if cells > SPARSE_THRESHOLD {
            Storage::Sparse(map)
        } else {
            let mut dense = vec![0.0; cells];
            for (&(x, s), &p) in &map {
                dense[x as usize * s_arity + s as usize] = p;
            }
            Storage::Dense(dense)
        };
        Ok(JointTable {
            x_arity,
            s_arity,
            storage,
            prenorm_total: total,
        })
    }

    pub fn x_arity(&self) -> usize {
        self.x_arity
    }

    pub fn s_arity(&self) -> usize {
        self.s_arity
    }

    pub fn cells(&self) -> usize {
        self.x_arity * self.s_arity
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    /// Total mass of the raw input, before normalization.
    pub fn prenorm_total(&self) -> f64 {
        self.prenorm_total
    }

    /// How far the raw input was from summing to 1.
    pub fn prenorm_deviation(&self) -> f64 {
        (self.prenorm_total - 1.0).abs()
    }

    pub fn get(&self, x: usize, s: usize) -> f64 {
        assert!(x < self.x_arity && s < self.s_arity, "cell out of range");
        match &self.storage {
            Storage::Dense(v) => v[x * self.s_arity + s],
            Storage::Sparse(m) => m.get(&(x as u32, s as u32)).copied().unwrap_or(0.0),
        }
    }

    /// Nonzero cells in deterministic (row-major) order.
    pub fn iter_nonzero(&self) -> Box<dyn Iterator<Item = (usize, usize, f64)> + '_> {
        match &self.storage {
            Storage::Dense(v) => Box::new(v.iter().enumerate().filter_map(move |(i, &p)| {
                (p > 0.0).then_some((i / self.s_arity, i % self.s_arity, p))
            })),
            Storage::Sparse(m) => Box::new(
                m.iter()
                    .map(|(&(x, s), &p)| (x as usize, s as usize, p)),
            ),
        }
    }

    /// P(X): marginal over feature cells.
    pub fn x_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.x_arity];
        for (x, _, p) in self.iter_nonzero() {
            out[x] += p;
        }
        out
    }

    /// P(S): marginal over profile cells.
    pub fn s_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.s_arity];
        for (_, s, p) in self.iter_nonzero() {
            out[s] += p;
        }
        out
    }

    /// The same distribution with the roles of X and S swapped. Cell values
    /// are moved, not recomputed.
    pub fn transpose(&self) -> JointTable {
        let storage = match &self.storage {
            Storage::Dense(v) => {
                let mut out = vec![0.0; v.len()];
                for x in 0..self.x_arity {
                    for s in 0..self.s_arity {
                        out[s * self.x_arity + x] = v[x * self.s_arity + s];
                    }
                }
                Storage::Dense(out)
            }
            Storage::Sparse(m) => {
                Storage::Sparse(m.iter().map(|(&(x, s), &p)| ((s, x), p)).collect())
            }
        };
        JointTable {
            x_arity: self.s_arity,
            s_arity: self.x_arity,
            storage,
            prenorm_total: self.prenorm_total,
        }
    }
}

fn check_arity(x_arity: usize, s_arity: usize) -> Result<usize> {
    if x_arity == 0 || s_arity == 0 {
        return Err(Error::ShapeMismatch {
            expected: 1,
            got: 0,
        });
    }
    x_arity
        .checked_mul(s_arity)
        .ok_or(Error::ProfileSpaceTooLarge {
            cells: x_arity as u128 * s_arity as u128,
            cap: usize::MAX,
        })
}

fn check_mass(x: usize, s: usize, w: f64) -> Result<()> {
    if !w.is_finite() {
        return Err(Error::InternalConsistency {
            message: format!("non-finite weight at cell ({x}, {s})"),
        });
    }
    if w < 0.0 {
        return Err(Error::NegativeMass { x, s, value: w });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_weights_normalize() {
        let t = JointTable::from_weights(2, 2, &[2.0, 2.0, 2.0, 2.0]).unwrap();
        for x in 0..2 {
            for s in 0..2 {
                assert_eq!(t.get(x, s), 0.25);
            }
        }
        assert_eq!(t.prenorm_total(), 8.0);
    }

    #[test]
    fn negative_weight_rejected() {
        let err = JointTable::from_weights(2, 2, &[1.0, -0.1, 0.0, 1.0]).unwrap_err();
        assert_eq!(err.code(), "NEGATIVE_MASS");
    }

    #[test]
    fn all_zero_rejected() {
        let err = JointTable::from_weights(2, 2, &[0.0; 4]).unwrap_err();
        assert_eq!(err.code(), "ALL_ZERO");
    }

    #[test]
    fn zero_cells_retained() {
        let t = JointTable::from_weights(2, 2, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(t.get(0, 0), 0.5);
        assert_eq!(t.get(0, 1), 0.0);
        assert_eq!(t.get(1, 0), 0.0);
        assert_eq!(t.get(1, 1), 0.5);
    }

    #[test]
    fn marginals_sum_to_one() {
        let t = JointTable::from_weights(2, 3, &[0.1, 0.2, 0.1, 0.3, 0.2, 0.1]).unwrap();
        let sx: f64 = t.x_marginal().iter().sum();
        let ss: f64 = t.s_marginal().iter().sum();
        assert!((sx - 1.0).abs() < MASS_TOLERANCE);
        assert!((ss - 1.0).abs() < MASS_TOLERANCE);
    }

    #[test]
    fn revalidation_is_identity() {
        let t = JointTable::from_weights(2, 2, &[3.0, 1.0, 2.0, 2.0]).unwrap();
        let dense: Vec<f64> = (0..4).map(|i| t.get(i / 2, i % 2)).collect();
        let again = JointTable::from_weights(2, 2, &dense).unwrap();
        for x in 0..2 {
            for s in 0..2 {
                assert!((t.get(x, s) - again.get(x, s)).abs() <= 1e-12);
            }
        }
        assert!(again.prenorm_deviation() <= 1e-12);
    }

    #[test]
    fn large_tables_go_sparse() {
        let entries = vec![(0, 0, 1.0), (2, 4999, 3.0)];
        let t = JointTable::from_sparse(3, 5000, entries).unwrap();
        assert!(t.is_sparse());
        assert_eq!(t.get(0, 0), 0.25);
        assert_eq!(t.get(2, 4999), 0.75);
        assert_eq!(t.get(1, 1234), 0.0);
    }

    #[test]
    fn sparse_duplicates_accumulate() {
        let entries = vec![(0, 0, 1.0), (0, 0, 1.0), (1, 1, 2.0)];
        let t = JointTable::from_sparse(2, 2, entries).unwrap();
        assert_eq!(t.get(0, 0), 0.5);
        assert_eq!(t.get(1, 1), 0.5);
    }

    #[test]
    fn transpose_swaps_roles() {
        let t = JointTable::from_weights(2, 3, &[0.5, 0.0, 0.1, 0.0, 0.3, 0.1]).unwrap();
        let tt = t.transpose();
        assert_eq!(tt.x_arity(), 3);
        assert_eq!(tt.s_arity(), 2);
        for x in 0..2 {
            for s in 0..3 {
                assert_eq!(t.get(x, s), tt.get(s, x));
            }
        }
    }
}
