//! Complex Lorentzian least-squares fit: A(Δ) = c / (i(Δ − Δ₀) + γ) + o.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{storage::Owned, DMatrix, DVector, Dyn};
use num_complex::Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianFit {
    /// Resonance offset Δ₀, same units as the grid.
    pub center: f64,
    /// Half width at half maximum.
    pub hwhm: f64,
    pub amplitude: Complex64,
    pub offset: Complex64,
    /// RMS residual divided by the peak amplitude.
    pub relative_residual: f64,
    pub converged: bool,
}

impl LorentzianFit {
    pub fn eval(&self, delta: f64) -> Complex64 {
        self.amplitude / (I * (delta - self.center) + self.hwhm) + self.offset
    }
}

struct Problem<'a> {
    x: &'a [f64],
    y: &'a [Complex64],
    p: DVector<f64>,
}

impl Problem<'_> {
    fn parts(&self) -> (f64, f64, Complex64, Complex64) {
        let p = &self.p;
        (p[0], p[1], Complex64::new(p[2], p[3]), Complex64::new(p[4], p[5]))
    }
}

impl LeastSquaresProblem<f64, Dyn, Dyn> for Problem<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, p: &DVector<f64>) {
        self.p.copy_from(p);
    }

    fn params(&self) -> DVector<f64> {
        self.p.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let (x0, g, c, o) = self.parts();
        let n = self.x.len();
        let mut r = DVector::zeros(2 * n);
        for (k, (&x, &y)) in self.x.iter().zip(self.y).enumerate() {
            let d = c / (I * (x - x0) + g) + o - y;
            r[k] = d.re;
            r[n + k] = d.im;
        }
        Some(r)
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        let (x0, g, c, _) = self.parts();
        let n = self.x.len();
        let mut j = DMatrix::zeros(2 * n, 6);
        for (k, &x) in self.x.iter().enumerate() {
            let inv = 1.0 / (I * (x - x0) + g);
            let cols = [
                I * c * inv * inv,
                -c * inv * inv,
                inv,
                I * inv,
                Complex64::new(1.0, 0.0),
                I,
            ];
            for (col, z) in cols.iter().enumerate() {
                j[(k, col)] = z.re;
                j[(n + k, col)] = z.im;
            }
        }
        Some(j)
    }
}

/// Fits a single complex Lorentzian. Returns `None` only for empty or
/// degenerate input; a fit that did not converge is flagged instead.
pub fn fit_lorentzian(grid: &[f64], values: &[Complex64]) -> Option<LorentzianFit> {
    let n = grid.len().min(values.len());
    if n < 4 {
        return None;
    }
    let (grid, values) = (&grid[..n], &values[..n]);
    let peak_idx = (0..n).max_by(|&a, &b| values[a].norm().total_cmp(&values[b].norm()))?;
    let peak = values[peak_idx].norm();
    let (lo, hi) = grid
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    let xs = (hi - lo) / 20.0;
    if !(peak > 0.0 && xs > 0.0) {
        return None;
    }

    // half width from where |A| falls to peak/√2
    let target = peak / 2f64.sqrt();
    let mut width = f64::INFINITY;
    for dir in [-1i64, 1] {
        let mut k = peak_idx as i64;
        while k >= 0 && (k as usize) < n {
            if values[k as usize].norm() <= target {
                width = width.min((grid[k as usize] - grid[peak_idx]).abs());
                break;
            }
            k += dir;
        }
    }
    if !width.is_finite() || width == 0.0 {
        width = xs;
    }

    let x: Vec<f64> = grid.iter().map(|&g| g / xs).collect();
    let y: Vec<Complex64> = values.iter().map(|&v| v / peak).collect();
    let g0 = width / xs;
    let c0 = y[peak_idx] * g0;
    let p0 = DVector::from_vec(vec![x[peak_idx], g0, c0.re, c0.im, 0.0, 0.0]);
    let problem = Problem { x: &x, y: &y, p: p0 };
    let (solved, report) = LevenbergMarquardt::new()
        .with_ftol(1e-14)
        .with_xtol(1e-14)
        .with_gtol(1e-14)
        .with_patience(400)
        .minimize(problem);
    let p = &solved.p;
    let rms = (2.0 * report.objective_function / n as f64).sqrt();
    let fit = LorentzianFit {
        center: p[0] * xs,
        hwhm: p[1].abs() * xs,
        amplitude: Complex64::new(p[2], p[3]) * peak * xs * p[1].signum(),
        offset: Complex64::new(p[4], p[5]) * peak,
        relative_residual: rms,
        converged: report.termination.was_successful() && p.iter().all(|v| v.is_finite()),
    };
    Some(fit)
}
