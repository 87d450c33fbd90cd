//! Gas densities, binary collision rates and van der Waals molecular rates.
//!
//! Rates are [X]σv̄ in s⁻¹ and are used directly as angular rates.

use std::f64::consts::PI;

use crate::constants::{
    BOLTZMANN, DEFAULT_FILL_TEMPERATURE, GAMMA_ELECTRON, GAMMA_NUCLEAR_RB87, MASS_N2, MASS_RB87,
    MASS_XE129, OMEGA_HF_RB87, TORR,
};
use crate::error::{Error, Result};

/// Cell state, SI/angular units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellConditions {
    /// Cell temperature, K.
    pub temperature: f64,
    /// Temperature at which the gases were filled, K.
    pub fill_temperature: f64,
    /// Torr.
    pub n2_pressure: f64,
    /// Torr.
    pub xe_pressure: f64,
    /// rad/s.
    pub pumping_rate: f64,
    /// Xe longitudinal polarization ⟨Kz⟩.
    pub xe_polarization: f64,
    /// Static field along z, T.
    pub field: f64,
    /// Mean photon spin along z, +1 for σ₊.
    pub photon_spin: f64,
}

impl Default for CellConditions {
    fn default() -> Self {
        CellConditions {
            temperature: 383.15,
            fill_temperature: DEFAULT_FILL_TEMPERATURE,
            n2_pressure: 450.0,
            xe_pressure: 3.0,
            pumping_rate: 2.0 * PI,
            xe_polarization: 0.0,
            field: 1e-5,
            photon_spin: 1.0,
        }
    }
}

impl CellConditions {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConditions(msg));
        if !(self.temperature > 0.0) {
            return bad(format!("temperature must be positive, got {} K", self.temperature));
        }
        if !(self.fill_temperature > 0.0) {
            return bad(format!(
                "fill temperature must be positive, got {} K",
                self.fill_temperature
            ));
        }
        if !(self.n2_pressure >= 0.0) || !(self.xe_pressure >= 0.0) {
            return bad("pressures must be non-negative".into());
        }
        if !(self.pumping_rate >= 0.0) {
            return bad(format!("pumping rate must be non-negative, got {}", self.pumping_rate));
        }
        if !(self.xe_polarization.abs() <= 0.5) {
            return bad(format!("|Kz| must be ≤ 1/2, got {}", self.xe_polarization));
        }
        if !(self.photon_spin.abs() <= 1.0) {
            return bad(format!("|s_z| must be ≤ 1, got {}", self.photon_spin));
        }
        if !self.field.is_finite() {
            return bad("field must be finite".into());
        }
        Ok(())
    }

    /// Electron Larmor frequency Ω₀ = |γe|B0.
    pub fn electron_larmor(&self) -> f64 {
        GAMMA_ELECTRON * self.field
    }

    /// Nuclear Larmor frequency Ω_I = γI·B0, γI taken positive.
    pub fn nuclear_larmor(&self) -> f64 {
        GAMMA_NUCLEAR_RB87 * self.field
    }
}

/// Cross sections and molecular parameters. Defaults are the Rb/Xe/N₂ set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionParams {
    /// cm².
    pub sd_rb_n2: f64,
    pub sd_rb_rb: f64,
    pub sd_rb_xe: f64,
    pub se_rb_rb: f64,
    pub se_rb_xe: f64,
    /// Three-body formation coefficient, cm⁶/s.
    pub formation_coeff: f64,
    /// Spin-rotation strength γN/2π, Hz.
    pub spin_rotation_hz: f64,
    /// γN/α.
    pub coupling_ratio: f64,
    /// Characteristic pressure, Torr.
    pub characteristic_pressure: f64,
    /// Hyperfine splitting, rad/s.
    pub hyperfine: f64,
    /// kg.
    pub mass_rb: f64,
    pub mass_n2: f64,
    pub mass_xe: f64,
}

impl Default for CollisionParams {
    fn default() -> Self {
        CollisionParams {
            sd_rb_n2: 1e-22,
            sd_rb_rb: 1.6e-17,
            sd_rb_xe: 2e-19,
            se_rb_rb: 1.9e-14,
            se_rb_xe: 1.6e-20,
            formation_coeff: 5e-32,
            spin_rotation_hz: 120e6,
            coupling_ratio: 3.2,
            characteristic_pressure: 103.0,
            hyperfine: OMEGA_HF_RB87,
            mass_rb: MASS_RB87,
            mass_n2: MASS_N2,
            mass_xe: MASS_XE129,
        }
    }
}

impl CollisionParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("sd_rb_n2", self.sd_rb_n2),
            ("sd_rb_rb", self.sd_rb_rb),
            ("sd_rb_xe", self.sd_rb_xe),
            ("se_rb_rb", self.se_rb_rb),
            ("se_rb_xe", self.se_rb_xe),
            ("formation_coeff", self.formation_coeff),
            ("spin_rotation_hz", self.spin_rotation_hz),
            ("coupling_ratio", self.coupling_ratio),
            ("characteristic_pressure", self.characteristic_pressure),
            ("hyperfine", self.hyperfine),
            ("mass_rb", self.mass_rb),
            ("mass_n2", self.mass_n2),
            ("mass_xe", self.mass_xe),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Every rate entering the generator, in rad/s unless noted.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RateSet {
    pub sd_rb_rb: f64,
    pub sd_rb_n2: f64,
    pub sd_rb_xe: f64,
    pub se_rb_rb: f64,
    pub se_rb_xe: f64,
    pub se_vdw: f64,
    pub sd_vdw: f64,
    pub f_damping: f64,
    pub f_exchange: f64,
    /// Γ_SE^RbXe + Γ_SE,vdW.
    pub se_xe_total: f64,
    /// Binary spin destruction Γ_SD^RbRb + Γ_SD^RbN2 + Γ_SD^RbXe.
    pub sd_binary: f64,
    /// Coefficient of the S-damping superoperator.
    pub total: f64,
    /// Spin destruction seen by the polarized ensemble.
    pub sd_polarized: f64,
    pub pumping: f64,
    pub fraction_short: f64,
    pub fraction_long: f64,
    pub phase_alpha: f64,
    pub phase_gamma: f64,
    /// Molecular lifetime, s.
    pub lifetime: f64,
    /// Molecule formation rate per Rb atom, s⁻¹.
    pub formation_rate: f64,
}

impl RateSet {
    /// (name, value) pairs in a fixed order, for tables.
    pub fn fields(&self) -> [(&'static str, f64); 20] {
        [
            ("sd_rb_rb", self.sd_rb_rb),
            ("sd_rb_n2", self.sd_rb_n2),
            ("sd_rb_xe", self.sd_rb_xe),
            ("se_rb_rb", self.se_rb_rb),
            ("se_rb_xe", self.se_rb_xe),
            ("se_vdw", self.se_vdw),
            ("sd_vdw", self.sd_vdw),
            ("f_damping", self.f_damping),
            ("f_exchange", self.f_exchange),
            ("se_xe_total", self.se_xe_total),
            ("sd_binary", self.sd_binary),
            ("total", self.total),
            ("sd_polarized", self.sd_polarized),
            ("pumping", self.pumping),
            ("fraction_short", self.fraction_short),
            ("fraction_long", self.fraction_long),
            ("phase_alpha", self.phase_alpha),
            ("phase_gamma", self.phase_gamma),
            ("lifetime", self.lifetime),
            ("formation_rate", self.formation_rate),
        ]
    }
}

/// Saturated Rb number density, cm⁻³.
pub fn rb_density(temperature: f64) -> f64 {
    let (a, b) = if temperature > 39.3 + 273.15 {
        (4.312, 4040.0)
    } else {
        (4.857, 4215.0)
    };
    10f64.powf(21.866 + a - b / temperature) / temperature
}

/// Ideal-gas number density at the fill temperature, cm⁻³.
pub fn gas_density(pressure_torr: f64, fill_temperature: f64) -> f64 {
    pressure_torr * TORR / (BOLTZMANN * fill_temperature) * 1e-6
}

/// Mean relative speed √(8kT/πμ), cm/s.
pub fn mean_relative_velocity(m1: f64, m2: f64, temperature: f64) -> f64 {
    let mu = m1 * m2 / (m1 + m2);
    (8.0 * BOLTZMANN * temperature / (PI * mu)).sqrt() * 100.0
}

pub fn binary_rate(density: f64, cross_section: f64, velocity: f64) -> f64 {
    density * cross_section * velocity
}

/// Molecular quantities and the rates they produce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VdwRates {
    pub phase_gamma: f64,
    pub phase_alpha: f64,
    pub lifetime: f64,
    pub fraction_short: f64,
    pub fraction_long: f64,
    pub formation_rate: f64,
    pub se_vdw: f64,
    pub sd_vdw: f64,
    pub f_damping: f64,
    pub f_exchange: f64,
}

pub fn vdw_rates(cond: &CellConditions, params: &CollisionParams) -> Result<VdwRates> {
    if !(cond.n2_pressure > 0.0) {
        return Err(Error::MissingThirdBody);
    }
    let phase_gamma = params.characteristic_pressure / cond.n2_pressure;
    let lifetime = phase_gamma / (2.0 * PI * params.spin_rotation_hz);
    let phase_alpha = phase_gamma / params.coupling_ratio;
    let wt = params.hyperfine * lifetime;
    let fraction_short = 1.0 / (1.0 + wt * wt);
    let fraction_long = 1.0 - fraction_short;
    let formation_rate = params.formation_coeff
        * gas_density(cond.n2_pressure, cond.fill_temperature)
        * gas_density(cond.xe_pressure, cond.fill_temperature);

    let rotation = 2.0 * phase_gamma * phase_gamma / 3.0 * formation_rate;
    let exchange = phase_alpha * phase_alpha / 2.0 * formation_rate;
    // [I]² with I = 3/2
    let nuclear_sq = 16.0;
    Ok(VdwRates {
        phase_gamma,
        phase_alpha,
        lifetime,
        fraction_short,
        fraction_long,
        formation_rate,
        se_vdw: fraction_short * exchange,
        sd_vdw: fraction_short * (rotation + exchange),
        f_damping: fraction_long / nuclear_sq * (rotation + exchange),
        f_exchange: fraction_long / nuclear_sq * exchange,
    })
}

pub fn assemble_rates(cond: &CellConditions, params: &CollisionParams) -> Result<RateSet> {
    cond.validate()?;
    params.validate()?;
    let t = cond.temperature;
    let n_rb = rb_density(t);
    let n_n2 = gas_density(cond.n2_pressure, cond.fill_temperature);
    let n_xe = gas_density(cond.xe_pressure, cond.fill_temperature);
    let v_rr = mean_relative_velocity(params.mass_rb, params.mass_rb, t);
    let v_rn = mean_relative_velocity(params.mass_rb, params.mass_n2, t);
    let v_rx = mean_relative_velocity(params.mass_rb, params.mass_xe, t);

    let sd_rb_rb = binary_rate(n_rb, params.sd_rb_rb, v_rr);
    let sd_rb_n2 = binary_rate(n_n2, params.sd_rb_n2, v_rn);
    let sd_rb_xe = binary_rate(n_xe, params.sd_rb_xe, v_rx);
    let se_rb_rb = binary_rate(n_rb, params.se_rb_rb, v_rr);
    let se_rb_xe = binary_rate(n_xe, params.se_rb_xe, v_rx);
    let vdw = vdw_rates(cond, params)?;

    let se_xe_total = se_rb_xe + vdw.se_vdw;
    let sd_binary = sd_rb_rb + sd_rb_n2 + sd_rb_xe;
    let pumping = cond.pumping_rate;
    Ok(RateSet {
        sd_rb_rb,
        sd_rb_n2,
        sd_rb_xe,
        se_rb_rb,
        se_rb_xe,
        se_vdw: vdw.se_vdw,
        sd_vdw: vdw.sd_vdw,
        f_damping: vdw.f_damping,
        f_exchange: vdw.f_exchange,
        se_xe_total,
        sd_binary,
        total: se_rb_rb + pumping + se_xe_total + vdw.sd_vdw + sd_binary,
        sd_polarized: sd_binary + se_xe_total + vdw.sd_vdw,
        pumping,
        fraction_short: vdw.fraction_short,
        fraction_long: vdw.fraction_long,
        phase_alpha: vdw.phase_alpha,
        phase_gamma: vdw.phase_gamma,
        lifetime: vdw.lifetime,
        formation_rate: vdw.formation_rate,
    })
}
