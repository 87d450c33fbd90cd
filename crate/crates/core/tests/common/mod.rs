#![allow(dead_code)]

use num_complex::Complex64;
use rbxe::CMatrix;

fn real(rows: [[f64; 6]; 6]) -> CMatrix {
    CMatrix::from_fn(6, 6, |r, c| Complex64::new(rows[r][c], 0.0))
}

fn diag(d: [f64; 6]) -> CMatrix {
    let mut rows = [[0.0; 6]; 6];
    for (k, v) in d.into_iter().enumerate() {
        rows[k][k] = v;
    }
    real(rows)
}

pub fn s_damping() -> CMatrix {
    diag([16.0, 12.0, 9.0, 7.0, 13.0, 11.0].map(|x| x / 16.0))
}

pub fn f_damping() -> CMatrix {
    diag([10.0, 6.0, 3.0, 1.0, 3.0, 1.0])
}

pub fn s_exchange_z() -> CMatrix {
    let r105 = 105f64.sqrt();
    let r70 = 70f64.sqrt();
    real([
        [0.0, r105 / 14.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, r70 / 10.0, 0.0, 0.0, 0.0],
        [0.0, r70 / 70.0, 0.0, 3.0 * r105 / 40.0, 0.0, 0.0],
        [0.0, 0.0, r105 / 40.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, -1.0 / 8.0],
        [0.0, 0.0, 0.0, 0.0, -3.0 / 8.0, 0.0],
    ])
}

pub fn f_exchange_z() -> CMatrix {
    let r105 = 105f64.sqrt();
    let r70 = 70f64.sqrt();
    real([
        [0.0, 5.0 * r105 / 7.0, 0.0, 0.0, 0.0, 0.0],
        [-3.0 * r105 / 7.0, 0.0, 32.0 * r70 / 35.0, 0.0, 0.0, 0.0],
        [0.0, -16.0 * r70 / 35.0, 0.0, 3.0 * r105 / 5.0, 0.0, 0.0],
        [0.0, 0.0, -r105 / 5.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 3.0],
        [0.0, 0.0, 0.0, 0.0, -1.0, 0.0],
    ])
}

/// Transverse exchange block at electron polarization `p`.
pub fn transverse_exchange(p: f64) -> CMatrix {
    let mut rows = [[0.0; 6]; 6];
    rows[0][3] = 4.0 * (10.0f64 / 7.0).sqrt() * p.powi(3);
    rows[1][3] = 4.0 * 6f64.sqrt() * p * p;
    rows[2][3] = (15.0f64 / 7.0).sqrt() * p * (7.0 + p * p);
    rows[3][3] = 5.0 + 3.0 * p * p;
    rows[4][5] = p - p.powi(3);
    rows[5][5] = 1.0 - p * p;
    real(rows) / Complex64::new(16.0 * (1.0 + p * p), 0.0)
}

pub fn max_deviation(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Polarizations at which the transverse block is compared.
pub const SAMPLED_POLARIZATIONS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 0.95];
