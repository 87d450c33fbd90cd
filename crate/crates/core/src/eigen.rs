//! Dense non-Hermitian eigensystems with biorthonormal left/right vectors.

use std::cmp::Ordering;

use nalgebra::linalg::Schur;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::{CMatrix, CVector};

/// Eigenvalue clusters closer than this (relative) are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;
const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct Eigensystem {
    /// Sorted by ascending real part, then ascending imaginary part.
    pub values: Vec<Complex64>,
    /// Columns are right eigenvectors |λ_j).
    pub right: CMatrix,
    /// Rows are left eigenvectors {λ_j| with {λ_i|λ_j) = δ_ij.
    pub left: CMatrix,
    /// Spectral condition number of the right eigenvector matrix.
    pub condition: f64,
}

fn order(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

fn condition_number(m: &CMatrix) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Right eigenvectors of an upper-triangular matrix by back-substitution.
fn triangular_eigenvectors(t: &CMatrix) -> CMatrix {
    let n = t.nrows();
    let scale = t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let smin = f64::EPSILON * scale;
    let mut y = CMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        y[(k, k)] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut s = Complex64::default();
            for j in i + 1..=k {
                s += t[(i, j)] * y[(j, k)];
            }
            let mut d = t[(i, i)] - lambda;
            if d.norm() < smin {
                d = Complex64::new(smin, 0.0);
            }
            y[(i, k)] = -s / d;
        }
    }
    y
}

fn normalize_columns(v: &mut CMatrix) {
    for mut col in v.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= Complex64::new(n, 0.0);
        }
    }
}

/// Groups of indices (into sorted `values`) whose eigenvalues coincide.
fn clusters(values: &[Complex64], scale: f64) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (i, v) in values.iter().enumerate() {
        let tol = DEGENERACY_TOL * v.norm().max(scale);
        match out
            .iter_mut()
            .find(|g| g.iter().any(|&j| (values[j] - v).norm() <= tol))
        {
            Some(g) => g.push(i),
            None => out.push(vec![i]),
        }
    }
    out
}

pub fn eigendecompose(m: &CMatrix) -> Result<Eigensystem> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.ncols(),
        });
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000).ok_or(Error::EigenConvergence)?;
    let (q, t) = schur.unpack();
    let mut v = &q * triangular_eigenvectors(&t);
    normalize_columns(&mut v);

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| order(&t[(a, a)], &t[(b, b)]));
    let values: Vec<Complex64> = idx.iter().map(|&k| t[(k, k)]).collect();
    let mut right = CMatrix::from_fn(n, n, |r, c| v[(r, idx[c])]);

    let mut condition = condition_number(&right);
    if condition > 1e8 {
        // re-span each degenerate cluster by an orthonormal basis
        for group in clusters(&values, scale).into_iter().filter(|g| g.len() > 1) {
            let sub = CMatrix::from_fn(n, group.len(), |r, c| right[(r, group[c])]);
            let qr = sub.qr().q();
            for (c, &k) in group.iter().enumerate() {
                right.set_column(k, &qr.column(c));
            }
        }
        condition = condition_number(&right);
        for (k, lambda) in values.iter().enumerate() {
            let col = right.column(k).into_owned();
            let resid = (m * &col - &col * *lambda).norm();
            if resid > 1e-8 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::Defective {
                    condition: condition.max(1.0 / f64::EPSILON),
                });
            }
        }
    }
    if !(condition <= MAX_CONDITION) {
        return Err(Error::Defective { condition });
    }
    let left = right
        .clone()
        .try_inverse()
        .ok_or(Error::Defective { condition })?;
    Ok(Eigensystem {
        values,
        right,
        left,
        condition,
    })
}

impl Eigensystem {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// max |{λ_i|λ_j) − δ_ij|.
    pub fn biorthogonality_residual(&self) -> f64 {
        let p = &self.left * &self.right;
        let n = p.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let d = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((p[(i, j)] - Complex64::new(d, 0.0)).norm());
            }
        }
        worst
    }

    /// Σ_j λ_j |λ_j){λ_j|.
    pub fn reconstruct(&self) -> CMatrix {
        let d = CMatrix::from_diagonal(&CVector::from_vec(self.values.clone()));
        &self.right * d * &self.left
    }
}
