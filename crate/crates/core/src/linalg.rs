//! Symmetric positive-semidefinite systems over a [`Scalar`].
//!
//! Gram and Hankel matrices are factored as `G = L D Lᵀ` in basis order.
//! Pivots under the floor (zero in exact mode) are skipped and their
//! directions dropped, so lower-degree representatives are kept and both
//! modes pick the same ones. Dropped directions get zero coefficients.

use crate::scalar::{NumericMode, Scalar};

/// Relative pivot floor used in float mode (against the trace).
pub const FLOAT_PIVOT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SymmetricFactorization<S> {
    size: usize,
    /// Original indices in pivot order (kept directions only).
    order: Vec<usize>,
    /// Unit lower-triangular factor in pivot order, `lower[a][b]` for `b < a`.
    lower: Vec<Vec<S>>,
    pivots: Vec<S>,
    dropped: Vec<usize>,
}

impl<S: Scalar> SymmetricFactorization<S> {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn rank(&self) -> usize {
        self.order.len()
    }

    /// Indices of basis directions removed under the floor.
    pub fn dropped(&self) -> &[usize] {
        &self.dropped
    }

    pub fn pivots(&self) -> &[S] {
        &self.pivots
    }

    /// Ratio of the largest to the smallest retained pivot.
    pub fn condition(&self) -> f64 {
        let vals: Vec<f64> = self.pivots.iter().map(|p| p.to_f64().abs()).collect();
        let max = vals.iter().cloned().fold(0.0, f64::max);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        if vals.is_empty() || min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// Minimum-norm-in-kept-coordinates solution of `G x = rhs`.
    pub fn solve(&self, rhs: &[S]) -> Vec<S> {
        assert_eq!(rhs.len(), self.size, "rhs length mismatch");
        let r = self.order.len();
        let mut y: Vec<S> = Vec::with_capacity(r);
        for a in 0..r {
            let mut acc = rhs[self.order[a]].clone();
            for (b, yb) in y.iter().enumerate() {
                acc = acc - self.lower[a][b].clone() * yb;
            }
            y.push(acc);
        }
        for (ya, d) in y.iter_mut().zip(&self.pivots) {
            *ya = ya.clone() / d;
        }
        for a in (0..r).rev() {
            let mut acc = y[a].clone();
            for b in a + 1..r {
                acc = acc - self.lower[b][a].clone() * &y[b];
            }
            y[a] = acc;
        }
        let mut x = vec![S::zero(); self.size];
        for (a, &idx) in self.order.iter().enumerate() {
            x[idx] = y[a].clone();
        }
        x
    }
}

fn pivot_floor<S: Scalar>(matrix: &[Vec<S>], relative: f64) -> f64 {
    match S::MODE {
        NumericMode::Exact => 0.0,
        NumericMode::Float => {
            let trace: f64 = (0..matrix.len()).map(|i| matrix[i][i].to_f64().abs()).sum();
            relative * trace
        }
    }
}

/// `LDLᵀ` of a symmetric PSD matrix with the default floor.
pub fn factor_symmetric<S: Scalar>(matrix: &[Vec<S>]) -> SymmetricFactorization<S> {
    factor_symmetric_with_floor(matrix, FLOAT_PIVOT_FLOOR)
}

pub fn factor_symmetric_with_floor<S: Scalar>(
    matrix: &[Vec<S>],
    relative_floor: f64,
) -> SymmetricFactorization<S> {
    let n = matrix.len();
    let floor = pivot_floor(matrix, relative_floor);
    let mut work: Vec<Vec<S>> = matrix.to_vec();
    let mut active: Vec<usize> = (0..n).collect();
    let mut order = Vec::new();
    let mut pivots = Vec::new();
    // Column multipliers per pivot, indexed by original row.
    let mut columns: Vec<Vec<(usize, S)>> = Vec::new();

    while !active.is_empty() {
        // Elimination in basis order: a direction is dropped only when its
        // remainder after the earlier ones is under the floor.
        let choice = active.iter().position(|&i| match S::MODE {
            NumericMode::Exact => work[i][i] > S::zero(),
            NumericMode::Float => work[i][i].to_f64() > floor,
        });
        let Some(pos) = choice else {
            break;
        };
        let p = active[pos];
        let pivot = work[p][p].clone();
        active.remove(pos);
        let mut column = Vec::with_capacity(active.len());
        for &i in &active {
            column.push((i, work[i][p].clone() / &pivot));
        }
        for (ci, (i, li)) in column.iter().enumerate() {
            if li.is_zero() {
                continue;
            }
            for (j, _) in column.iter().skip(ci) {
                let delta = li.clone() * &work[p][*j];
                let updated = work[*i][*j].clone() - delta;
                work[*j][*i] = updated.clone();
                work[*i][*j] = updated;
            }
        }
        order.push(p);
        pivots.push(pivot);
        columns.push(column);
    }

    let r = order.len();
    let mut position = vec![usize::MAX; n];
    for (a, &idx) in order.iter().enumerate() {
        position[idx] = a;
    }
    let mut lower = vec![vec![S::zero(); r]; r];
    for (b, column) in columns.iter().enumerate() {
        for (i, li) in column {
            let a = position[*i];
            if a != usize::MAX {
                lower[a][b] = li.clone();
            }
        }
    }
    let mut dropped: Vec<usize> = active;
    dropped.sort_unstable();

    SymmetricFactorization {
        size: n,
        order,
        lower,
        pivots,
        dropped,
    }
}

/// PSD test by pivoted elimination: negative pivots or a nonzero Schur
/// complement with vanishing diagonal reject the matrix.
pub fn is_positive_semidefinite<S: Scalar>(matrix: &[Vec<S>], tol: f64) -> bool {
    let n = matrix.len();
    let scale: f64 = matrix
        .iter()
        .flat_map(|row| row.iter())
        .map(|x| x.to_f64().abs())
        .fold(0.0, f64::max)
        .max(1.0);
    let threshold = match S::MODE {
        NumericMode::Exact => 0.0,
        NumericMode::Float => tol * scale,
    };
    let negligible = |x: &S| match S::MODE {
        NumericMode::Exact => x.is_zero(),
        NumericMode::Float => x.to_f64().abs() <= threshold,
    };
    let mut work: Vec<Vec<S>> = matrix.to_vec();
    let mut active: Vec<usize> = (0..n).collect();
    while !active.is_empty() {
        let (pos, &p) = active
            .iter()
            .enumerate()
            .max_by(|(_, &a), (_, &b)| {
                work[a][a]
                    .partial_cmp(&work[b][b])
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("nonempty");
        let pivot = work[p][p].clone();
        if negligible(&pivot) || pivot < S::zero() {
            if pivot < S::zero() && !negligible(&pivot) {
                return false;
            }
            return active
                .iter()
                .all(|&i| active.iter().all(|&j| negligible(&work[i][j])));
        }
        active.remove(pos);
        let column: Vec<(usize, S)> = active
            .iter()
            .map(|&i| (i, work[i][p].clone() / &pivot))
            .collect();
        for (i, li) in &column {
            for &j in &active {
                let updated = work[*i][j].clone() - li.clone() * &work[p][j];
                work[*i][j] = updated;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(p: i64, d: i64) -> Rational {
        Rational::ratio(p, d)
    }

    #[test]
    fn exact_solve_recovers_solution() {
        let g = vec![
            vec![q(4, 1), q(2, 1), q(0, 1)],
            vec![q(2, 1), q(3, 1), q(1, 1)],
            vec![q(0, 1), q(1, 1), q(2, 1)],
        ];
        let x = vec![q(1, 2), q(-1, 3), q(2, 1)];
        let rhs: Vec<Rational> = g
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&x)
                    .fold(Rational::from_i64(0), |acc, (a, b)| acc + a.clone() * b)
            })
            .collect();
        let f = factor_symmetric(&g);
        assert_eq!(f.rank(), 3);
        assert_eq!(f.solve(&rhs), x);
    }

    #[test]
    fn dependent_direction_is_dropped_exactly() {
        // Columns 0 and 2 coincide.
        let g = vec![
            vec![q(1, 1), q(0, 1), q(1, 1)],
            vec![q(0, 1), q(2, 1), q(0, 1)],
            vec![q(1, 1), q(0, 1), q(1, 1)],
        ];
        let f = factor_symmetric(&g);
        assert_eq!(f.rank(), 2);
        assert_eq!(f.dropped().len(), 1);
        let rhs = vec![q(3, 1), q(4, 1), q(3, 1)];
        let x = f.solve(&rhs);
        // G x reproduces the consistent right-hand side.
        for (row, r) in g.iter().zip(&rhs) {
            let gx = row
                .iter()
                .zip(&x)
                .fold(Rational::from_i64(0), |acc, (a, b)| acc + a.clone() * b);
            assert_eq!(&gx, r);
        }
    }

    #[test]
    fn psd_detection() {
        let good = vec![vec![1.0, 0.5], vec![0.5, 1.0]];
        let bad = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        let singular = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert!(is_positive_semidefinite(&good, 1e-12));
        assert!(!is_positive_semidefinite(&bad, 1e-12));
        assert!(is_positive_semidefinite(&singular, 1e-12));
        let neg = vec![vec![q(-1, 1)]];
        assert!(!is_positive_semidefinite(&neg, 0.0));
    }
}
