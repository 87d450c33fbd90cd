//! Linewidths and lineshapes from the first-order coherence generator.

use num_complex::Complex64;

use crate::eigen::{eigendecompose, Eigensystem};
use crate::error::{Error, Result};
use crate::fit::{fit_lorentzian, LorentzianFit};
use crate::generator::GeneratorWda;
use crate::rates::RateSet;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Points and half-range (in units of the narrowest width) of the grid used
/// to collapse a multi-term spectrum into one Lorentzian width.
pub const COLLAPSE_POINTS: usize = 401;
pub const COLLAPSE_SPAN: f64 = 10.0;

/// w_j = (Sx|λ_j){λ_j|[Sx©]₁,₀|ρ_eq).
pub fn weights(gen: &GeneratorWda, eig: &Eigensystem) -> Vec<Complex64> {
    (0..eig.len())
        .map(|j| {
            let s = gen.observable.dot(&eig.right.column(j));
            let u = eig.left.row(j).transpose().dot(&gen.drive_coupling);
            s * u
        })
        .collect()
}

/// (Sx|ρ̃₁) = −(iΩ_R/2) Σ_j w_j / (iΔ + λ_j) over the chosen terms.
pub fn spectrum_value(
    values: &[Complex64],
    weights: &[Complex64],
    terms: &[usize],
    rabi: f64,
    delta: f64,
) -> Complex64 {
    let sum: Complex64 = terms
        .iter()
        .map(|&j| weights[j] / (I * delta + values[j]))
        .sum();
    -I * (rabi / 2.0) * sum
}

/// Smallest real part of the spectrum.
pub fn linewidth_single(eig: &Eigensystem) -> f64 {
    eig.values[0].re
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoTermEstimate {
    pub hwhm: f64,
    /// Index of the second eigenvalue kept alongside the narrowest one.
    pub partner: usize,
    pub fit: Option<LorentzianFit>,
}

/// Detuning grid centred on the narrowest resonance.
pub fn collapse_grid(eig: &Eigensystem) -> Vec<f64> {
    let lead = eig.values[0];
    let half = COLLAPSE_SPAN * lead.re.abs().max(f64::MIN_POSITIVE);
    let n = COLLAPSE_POINTS;
    (0..n)
        .map(|k| -lead.im - half + 2.0 * half * k as f64 / (n - 1) as f64)
        .collect()
}

fn collapse(eig: &Eigensystem, w: &[Complex64], terms: &[usize]) -> Option<LorentzianFit> {
    let grid = collapse_grid(eig);
    let amp: Vec<Complex64> = grid
        .iter()
        .map(|&d| spectrum_value(&eig.values, w, terms, 1.0, d))
        .collect();
    fit_lorentzian(&grid, &amp)
}

/// Width of one Lorentzian fitted to the narrowest term plus the
/// strongest remaining term.
///
/// The partner is chosen by weight rather than by the second-smallest real
/// part: a near-degenerate term with vanishing weight would otherwise
/// displace the one that actually shapes the line.
pub fn linewidth_two(eig: &Eigensystem, w: &[Complex64]) -> TwoTermEstimate {
    let single = linewidth_single(eig);
    let partner = (1..eig.len())
        .max_by(|&a, &b| w[a].norm().total_cmp(&w[b].norm()))
        .unwrap_or(0);
    if partner == 0 || w[partner].norm() == 0.0 || w[0].norm() == 0.0 {
        return TwoTermEstimate {
            hwhm: single,
            partner,
            fit: None,
        };
    }
    let fit = collapse(eig, w, &[0, partner]);
    let hwhm = match fit {
        Some(f) if f.converged && f.hwhm.is_finite() => f.hwhm,
        _ => single,
    };
    TwoTermEstimate { hwhm, partner, fit }
}

/// Width of one Lorentzian fitted to the full multi-term spectrum.
pub fn linewidth_full(eig: &Eigensystem, w: &[Complex64]) -> Option<LorentzianFit> {
    let all: Vec<usize> = (0..eig.len()).collect();
    collapse(eig, w, &all)
}

/// Leading-order width at low polarization and its split by N₂ dependence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowPolarizationLimit {
    pub total: f64,
    /// Terms that do not depend on N₂.
    pub base: f64,
    /// Binary Rb–N₂ spin destruction, linear in [N₂].
    pub buffer: f64,
    /// Molecular terms, roughly ∝ 1/[N₂].
    pub vdw: f64,
}

pub fn analytic_low(rates: &RateSet) -> LowPolarizationLimit {
    let r = rates;
    let total = r.f_damping + 7.0 / 16.0 * r.total - 5.0 / 16.0 * r.se_rb_rb;
    let base = r.se_rb_rb / 8.0 + 7.0 / 16.0 * (r.pumping + r.se_rb_xe + r.sd_rb_xe + r.sd_rb_rb);
    let buffer = 7.0 / 16.0 * r.sd_rb_n2;
    // the molecular exchange rate is N₂-dependent and belongs with the
    // molecular terms
    let vdw = r.f_damping + 7.0 / 16.0 * (r.sd_vdw + r.se_vdw);
    LowPolarizationLimit {
        total,
        base,
        buffer,
        vdw,
    }
}

/// High-polarization width. Diverges at zero pumping.
pub fn analytic_high(rates: &RateSet) -> Result<f64> {
    let r = rates;
    if !(r.pumping > 0.0) {
        return Err(Error::ZeroPumping);
    }
    Ok(r.pumping / 4.0
        + r.sd_polarized / 2.0
        + r.f_damping
        + 5.0 * r.se_rb_rb / (24.0 * r.pumping) * r.sd_polarized)
}

/// Pumping rate minimizing the high-polarization width.
pub fn optimal_pumping_high(rates: &RateSet) -> f64 {
    (10.0 * rates.se_rb_rb * rates.sd_polarized / 3.0).sqrt() / 2.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinewidthResult {
    pub eigenvalues: Vec<Complex64>,
    pub weights: Vec<Complex64>,
    pub single: f64,
    pub two: TwoTermEstimate,
    pub low: LowPolarizationLimit,
    pub high: Option<f64>,
    pub dominant_index: usize,
    pub polarization: f64,
    pub condition: f64,
}

pub fn analyze(gen: &GeneratorWda) -> Result<LinewidthResult> {
    let eig = eigendecompose(&gen.matrix)?;
    Ok(analyze_with(gen, &eig))
}

pub fn analyze_with(gen: &GeneratorWda, eig: &Eigensystem) -> LinewidthResult {
    let w = weights(gen, eig);
    let dominant_index = (0..w.len())
        .max_by(|&a, &b| w[a].norm().total_cmp(&w[b].norm()))
        .unwrap_or(0);
    LinewidthResult {
        single: linewidth_single(eig),
        two: linewidth_two(eig, &w),
        low: analytic_low(&gen.rates),
        high: analytic_high(&gen.rates).ok(),
        eigenvalues: eig.values.clone(),
        weights: w,
        dominant_index,
        polarization: gen.polarization,
        condition: eig.condition,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineshapeSpectrum {
    /// Offset Δ₁ from the upper-multiplet resonance, rad/s.
    pub detuning: Vec<f64>,
    pub amplitude: Vec<Complex64>,
    pub fit: Option<LorentzianFit>,
}

/// Evaluates the multi-term spectrum over `grid`, optionally fitting it.
pub fn lineshape(
    eig: &Eigensystem,
    w: &[Complex64],
    terms: &[usize],
    rabi: f64,
    grid: &[f64],
    fit: bool,
) -> LineshapeSpectrum {
    let amplitude: Vec<Complex64> = grid
        .iter()
        .map(|&d| spectrum_value(&eig.values, w, terms, rabi, d))
        .collect();
    let fit = if fit {
        fit_lorentzian(grid, &amplitude)
    } else {
        None
    };
    LineshapeSpectrum {
        detuning: grid.to_vec(),
        amplitude,
        fit,
    }
}
