//! Dense phase-I simplex for `A theta = b, theta >= 0` feasibility, used for
//! convex-combination membership tests.

use nalgebra::{DMatrix, DVector};

/// Finds `theta >= 0` with `A theta = b`, or `None` when the smallest
/// attainable residual (1-norm, relative to `1 + |b|_1`) exceeds `tol`.
pub fn nonneg_solution(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> Option<DVector<f64>> {
    let (r, m) = a.shape();
    let cols = m + r;
    // Tableau rows 0..r are constraints, row r is the phase-I objective.
    let mut tab = DMatrix::<f64>::zeros(r + 1, cols + 1);
    for i in 0..r {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..m {
            tab[(i, j)] = sign * a[(i, j)];
        }
        tab[(i, m + i)] = 1.0;
        tab[(i, cols)] = sign * b[i];
    }
    // Reduced costs of minimizing the sum of artificials.
    for j in 0..=cols {
        let mut s = 0.0;
        for i in 0..r {
            s += tab[(i, j)];
        }
        tab[(r, j)] = if j >= m && j < cols { 0.0 } else { s };
    }
    let mut basis: Vec<usize> = (m..m + r).collect();
    let scale = 1.0 + b.iter().map(|v| v.abs()).sum::<f64>();
    let eps = 1e-12 * (1.0 + crate::linalg::max_abs(a));
    for _ in 0..50 * (cols + r) {
        // Bland: lowest index with positive reduced cost.
        let Some(enter) = (0..cols).find(|&j| tab[(r, j)] > eps) else {
            break;
        };
        let mut leave = None;
        let mut best = f64::INFINITY;
        for i in 0..r {
            let piv = tab[(i, enter)];
            if piv > eps {
                let ratio = tab[(i, cols)] / piv;
                if ratio < best - 1e-15 || (ratio <= best + 1e-15 && leave.is_some_and(|l: usize| basis[i] < basis[l])) {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(p) = leave else { break };
        let pv = tab[(p, enter)];
        for j in 0..=cols {
            tab[(p, j)] /= pv;
        }
        for i in 0..=r {
            if i != p {
                let f = tab[(i, enter)];
                if f != 0.0 {
                    for j in 0..=cols {
                        tab[(i, j)] -= f * tab[(p, j)];
                    }
                }
            }
        }
        basis[p] = enter;
    }
    let mut theta = DVector::zeros(m);
    for (i, &bv) in basis.iter().enumerate() {
        if bv < m {
            theta[bv] = tab[(i, cols)].max(0.0);
        }
    }
    let resid = (a * &theta - b).iter().map(|v| v.abs()).sum::<f64>();
    if resid <= tol * scale {
        Some(theta)
    } else {
        None
    }
}

/// Convex weights expressing `point` over the columns of `vertices` (one
/// vertex per column), if any exist.
pub fn convex_weights(vertices: &DMatrix<f64>, point: &DVector<f64>, tol: f64) -> Option<DVector<f64>> {
    let (d, m) = vertices.shape();
    let mut a = DMatrix::zeros(d + 1, m);
    a.view_mut((0, 0), (d, m)).copy_from(vertices);
    for j in 0..m {
        a[(d, j)] = 1.0;
    }
    let mut b = DVector::zeros(d + 1);
    b.rows_mut(0, d).copy_from(point);
    b[d] = 1.0;
    nonneg_solution(&a, &b, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 4, &[0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0])
    }

    #[test]
    fn inside_and_outside() {
        let v = square();
        let w = convex_weights(&v, &DVector::from_vec(vec![0.3, 0.6]), 1e-9).unwrap();
        assert!((w.sum() - 1.0).abs() < 1e-12);
        assert!((&v * &w - DVector::from_vec(vec![0.3, 0.6])).norm() < 1e-12);
        assert!(convex_weights(&v, &DVector::from_vec(vec![1.2, 0.5]), 1e-9).is_none());
        assert!(convex_weights(&v, &DVector::from_vec(vec![1.0, 1.0]), 1e-9).is_some());
    }
}
