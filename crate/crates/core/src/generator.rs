//! Relaxation generators: the full Liouvillian and its reduction to the
//! first-order coherence block under the rotating-wave and weak-driving
//! approximations.

use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::liouville::{
    commutator, vectorize, CoherenceProjector, LiouvilleVector, RelaxationSuperoperators,
    Superoperator, TensorFrame,
};
use crate::rates::{CellConditions, RateSet};
use crate::spin::{SpinOperators, SpinQuantum};
use crate::{CMatrix, CVector};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Operators, superoperators and tensor blocks shared by every grid point.
#[derive(Debug, Clone)]
pub struct Model {
    pub ops: SpinOperators,
    pub relax: RelaxationSuperoperators,
    pub populations: CoherenceProjector,
    pub coherences: CoherenceProjector,
    pub frame: TensorFrame,
    pub s_damping_block: CMatrix,
    pub f_damping_block: CMatrix,
    pub s_exchange_z_block: CMatrix,
    pub f_exchange_z_block: CMatrix,
    sx_commutator: Superoperator,
    transverse_rows: [CVector; 2],
}

impl Model {
    pub fn new(quantum: SpinQuantum) -> Self {
        let ops = SpinOperators::new(quantum);
        let relax = RelaxationSuperoperators::new(&ops);
        let frame = TensorFrame::new(&ops, 1);
        let transverse_rows = [0, 1].map(|j| frame.bra_coordinates(&vectorize(&ops.s[j])));
        Model {
            populations: CoherenceProjector::new(&ops, 0),
            coherences: CoherenceProjector::new(&ops, 1),
            s_damping_block: frame.block(&relax.s_damping),
            f_damping_block: frame.block(&relax.f_damping),
            s_exchange_z_block: frame.block(&relax.s_exchange[2]),
            f_exchange_z_block: frame.block(&relax.f_exchange[2]),
            sx_commutator: commutator(&ops.s[0]),
            transverse_rows,
            frame,
            relax,
            ops,
        }
    }

    /// Process-wide ⁸⁷Rb model, built on first use.
    pub fn shared() -> &'static Model {
        static MODEL: OnceLock<Model> = OnceLock::new();
        MODEL.get_or_init(|| Model::new(SpinQuantum::rb87()))
    }

    pub fn block_dim(&self) -> usize {
        self.frame.dim()
    }

    pub fn sx_commutator(&self) -> &Superoperator {
        &self.sx_commutator
    }

    /// Block of the transverse spin-exchange feedback at polarization `p`:
    /// Σ_{j=x,y} P₁A_SE,jP₀|ρ_eq)(S_j|P₁.
    pub fn transverse_exchange_block(&self, state: &SpinTemperatureState) -> CMatrix {
        let n = self.block_dim();
        let mut out = CMatrix::zeros(n, n);
        for j in 0..2 {
            let col = self
                .frame
                .coordinates(&(&self.relax.s_exchange[j] * self.populations.apply(&state.vector)));
            out += col * self.transverse_rows[j].transpose();
        }
        out
    }

    /// Tensor coordinates of [Sx©]₁,₀|ρ_eq).
    pub fn drive_coupling(&self, state: &SpinTemperatureState) -> CVector {
        self.frame
            .coordinates(&(&self.sx_commutator * self.populations.apply(&state.vector)))
    }

    /// Row `s` with (Sx|ρ₁) = s·c for block coordinates c.
    pub fn sx_row(&self) -> &CVector {
        &self.transverse_rows[0]
    }
}

/// ρ ∝ exp(βFz).
#[derive(Debug, Clone)]
pub struct SpinTemperatureState {
    pub beta: f64,
    pub polarization: f64,
    pub partition: f64,
    pub density: CMatrix,
    pub vector: LiouvilleVector,
}

impl SpinTemperatureState {
    pub fn from_polarization(ops: &SpinOperators, polarization: f64) -> Result<Self> {
        if !(polarization.abs() < 1.0) {
            return Err(Error::UnphysicalPolarization(polarization));
        }
        let beta = 2.0 * polarization.atanh();
        let weights: Vec<f64> = ops.states.iter().map(|s| (beta * s.m.value()).exp()).collect();
        let partition: f64 = weights.iter().sum();
        let n = ops.dim();
        let density = CMatrix::from_fn(n, n, |r, c| {
            if r == c {
                re(weights[r] / partition)
            } else {
                Complex64::default()
            }
        });
        Ok(SpinTemperatureState {
            beta,
            polarization,
            partition,
            vector: vectorize(&density),
            density,
        })
    }
}

/// Electron polarization balancing pumping, Xe spin exchange and spin
/// destruction.
pub fn equilibrium_polarization(rates: &RateSet, cond: &CellConditions) -> Result<f64> {
    let denom = rates.sd_binary + rates.pumping;
    if !(denom > 0.0) {
        return Err(Error::InvalidConditions(
            "spin destruction plus pumping must be positive".into(),
        ));
    }
    let p = (cond.photon_spin * rates.pumping + 2.0 * cond.xe_polarization * rates.se_xe_total)
        / denom;
    if !(p.abs() < 1.0) {
        return Err(Error::UnphysicalPolarization(p));
    }
    Ok(p)
}

pub fn equilibrium_state(
    ops: &SpinOperators,
    rates: &RateSet,
    cond: &CellConditions,
) -> Result<SpinTemperatureState> {
    SpinTemperatureState::from_polarization(ops, equilibrium_polarization(rates, cond)?)
}

/// Drive applied along x: Ω_R Sx cos(ωt).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveParams {
    /// rad/s.
    pub rabi: f64,
    /// rad/s.
    pub frequency: f64,
}

/// Resonance frequencies of the two multiplets, rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeemanFrequencies {
    pub upper: f64,
    pub lower: f64,
}

/// H₀ = Ω₀Sz + Ω_I Iz + Ω_hf I·S with Ω_hf = ω_hf/(I + 1/2).
pub fn static_hamiltonian(ops: &SpinOperators, cond: &CellConditions, hyperfine: f64) -> CMatrix {
    let coupling = hyperfine / (ops.quantum.nuclear.value() + 0.5);
    let mut h = &ops.s[2] * re(cond.electron_larmor()) + &ops.i[2] * re(cond.nuclear_larmor());
    for k in 0..3 {
        h += &ops.i[k] * &ops.s[k] * re(coupling);
    }
    h
}

/// Mean Zeeman frequency of each multiplet from the exact eigenvalues of H₀.
///
/// H₀ only mixes (a,m) with (b,m), so each m-block is diagonalized on its
/// own and the upper level is assigned to the upper multiplet.
pub fn zeeman_frequencies(ops: &SpinOperators, cond: &CellConditions, hyperfine: f64) -> ZeemanFrequencies {
    let h = static_hamiltonian(ops, cond, hyperfine).map(|z| z.re);
    let q = ops.quantum;
    let (a, b) = (q.upper(), q.lower());
    let level = |f: crate::spin::HalfInt, m: i32| -> f64 {
        let idx: Vec<usize> = (0..ops.dim()).filter(|&k| ops.states[k].m.twice() == m).collect();
        let sub = DMatrix::<f64>::from_fn(idx.len(), idx.len(), |r, c| h[(idx[r], idx[c])]);
        let mut e: Vec<f64> = SymmetricEigen::new(sub).eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        if f == a {
            *e.last().unwrap()
        } else {
            e[0]
        }
    };
    let upper = (level(a, a.twice()) - level(a, -a.twice())) / (2.0 * a.value());
    let lower = (level(b, -b.twice()) - level(b, b.twice())) / (2.0 * b.value());
    ZeemanFrequencies { upper, lower }
}

/// Per-multiplet detuning Δ_F = ω_F − ω entering the block as +iΔ_F.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Detuning {
    pub upper: f64,
    pub lower: f64,
}

impl Detuning {
    pub fn uniform(delta: f64) -> Self {
        Detuning {
            upper: delta,
            lower: delta,
        }
    }

    pub fn from_drive(zeeman: ZeemanFrequencies, frequency: f64) -> Self {
        Detuning {
            upper: zeeman.upper - frequency,
            lower: zeeman.lower - frequency,
        }
    }

    /// Detuning with the upper multiplet on resonance.
    pub fn relative(zeeman: ZeemanFrequencies) -> Self {
        Detuning {
            upper: 0.0,
            lower: zeeman.lower - zeeman.upper,
        }
    }

    pub fn shifted(self, delta: f64) -> Self {
        Detuning {
            upper: self.upper + delta,
            lower: self.lower + delta,
        }
    }
}

/// Full Liouvillian, split into a linear part and the Rb–Rb exchange
/// feedback that depends on ⟨S⟩.
///
/// dρ/dt = −L ρ − iΩ_R cos(ωt) Sx©ρ + Γ_SE Σ_j (S_j|ρ) A_SE,j ρ.
#[derive(Debug, Clone)]
pub struct FullGenerator {
    pub linear: Superoperator,
    pub drive: Superoperator,
    pub hamiltonian: CMatrix,
    pub exchange_rate: f64,
    pub drive_params: DriveParams,
    pub(crate) s_exchange: [Superoperator; 3],
    pub(crate) spin_vectors: [LiouvilleVector; 3],
}

pub fn build_full_generator(
    model: &Model,
    rates: &RateSet,
    cond: &CellConditions,
    hyperfine: f64,
    drive: DriveParams,
) -> FullGenerator {
    let ops = &model.ops;
    let relax = &model.relax;
    let hamiltonian = static_hamiltonian(ops, cond, hyperfine);
    let kz = cond.xe_polarization;
    let mut linear = commutator(&hamiltonian) * I;
    linear += &relax.f_damping * re(rates.f_damping);
    linear += &relax.s_damping * re(rates.total);
    let sez = 0.5 * cond.photon_spin * rates.pumping + rates.se_xe_total * kz;
    linear -= &relax.s_exchange[2] * re(sez);
    linear -= &relax.f_exchange[2] * re(rates.f_exchange * kz);
    FullGenerator {
        linear,
        drive: model.sx_commutator().clone(),
        hamiltonian,
        exchange_rate: rates.se_rb_rb,
        drive_params: drive,
        s_exchange: relax.s_exchange.clone(),
        spin_vectors: ops.s.each_ref().map(vectorize),
    }
}

impl FullGenerator {
    /// ⟨S⟩ = (S|ρ).
    pub fn spin_expectation(&self, rho: &LiouvilleVector) -> [f64; 3] {
        self.spin_vectors.each_ref().map(|s| s.dotc(rho).re)
    }

    /// Γ_SE Σ_j s_j A_SE,j, the exchange feedback frozen at spin `s`.
    pub fn exchange_superoperator(&self, s: [f64; 3]) -> Superoperator {
        let mut out = Superoperator::zeros(self.linear.nrows(), self.linear.ncols());
        for j in 0..3 {
            if s[j] != 0.0 {
                out += &self.s_exchange[j] * re(self.exchange_rate * s[j]);
            }
        }
        out
    }

    /// Γ_SE Σ_j s_j A_SE,j ρ.
    pub fn exchange_term(&self, s: [f64; 3], rho: &LiouvilleVector) -> LiouvilleVector {
        let mut out = CVector::zeros(rho.len());
        for j in 0..3 {
            if s[j] != 0.0 {
                out.gemv(re(self.exchange_rate * s[j]), &self.s_exchange[j], rho, re(1.0));
            }
        }
        out
    }

    /// Time derivative of |ρ) at time `t`.
    pub fn rhs(&self, t: f64, rho: &LiouvilleVector) -> LiouvilleVector {
        let mut out = &self.linear * rho * re(-1.0);
        let DriveParams { rabi, frequency } = self.drive_params;
        if rabi != 0.0 {
            out.gemv(-I * (rabi * (frequency * t).cos()), &self.drive, rho, re(1.0));
        }
        out + self.exchange_term(self.spin_expectation(rho), rho)
    }
}

/// First-order coherence generator in tensor coordinates.
#[derive(Debug, Clone)]
pub struct GeneratorWda {
    /// Relaxation part without detuning.
    pub relaxation: CMatrix,
    /// Relaxation plus i·diag(Δ).
    pub matrix: CMatrix,
    /// |v̄₁) = (i/2)[Sx©]₁,₀|ρ_eq).
    pub source: CVector,
    /// [Sx©]₁,₀|ρ_eq).
    pub drive_coupling: CVector,
    /// (Sx| as a row.
    pub observable: CVector,
    pub detuning: Detuning,
    pub upper_len: usize,
    pub rates: RateSet,
    pub polarization: f64,
}

/// Scalar coefficients of the reduced generator, exposed for inspection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WdaCoefficients {
    pub s_damping: f64,
    pub f_damping: f64,
    pub s_exchange_z: f64,
    pub f_exchange_z: f64,
    pub transverse: f64,
}

impl WdaCoefficients {
    pub fn new(rates: &RateSet, cond: &CellConditions, polarization: f64) -> Self {
        let kz = cond.xe_polarization;
        WdaCoefficients {
            s_damping: rates.total,
            f_damping: rates.f_damping,
            s_exchange_z: 0.5 * cond.photon_spin * rates.pumping
                + rates.se_rb_rb * polarization / 2.0
                + rates.se_xe_total * kz,
            f_exchange_z: rates.f_exchange * kz,
            transverse: rates.se_rb_rb,
        }
    }
}

pub fn build_wda_generator(
    model: &Model,
    rates: &RateSet,
    cond: &CellConditions,
    state: &SpinTemperatureState,
    detuning: Detuning,
) -> GeneratorWda {
    let c = WdaCoefficients::new(rates, cond, state.polarization);
    let relaxation = &model.s_damping_block * re(c.s_damping)
        + &model.f_damping_block * re(c.f_damping)
        - &model.s_exchange_z_block * re(c.s_exchange_z)
        - &model.f_exchange_z_block * re(c.f_exchange_z)
        - model.transverse_exchange_block(state) * re(c.transverse);
    let drive_coupling = model.drive_coupling(state);
    let mut gen = GeneratorWda {
        matrix: relaxation.clone(),
        relaxation,
        source: &drive_coupling * (I * 0.5),
        drive_coupling,
        observable: model.sx_row().clone(),
        detuning,
        upper_len: model.frame.upper_len,
        rates: *rates,
        polarization: state.polarization,
    };
    gen.set_detuning(detuning);
    gen
}

impl GeneratorWda {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn set_detuning(&mut self, detuning: Detuning) {
        self.detuning = detuning;
        self.matrix = self.relaxation.clone();
        for k in 0..self.dim() {
            let d = if k < self.upper_len {
                detuning.upper
            } else {
                detuning.lower
            };
            self.matrix[(k, k)] += I * d;
        }
    }

    /// Steady first-order coherence (G + iΔ₁)|ρ̃₁) = −Ω_R|v̄₁).
    pub fn steady_state(&self, rabi: f64, delta: f64) -> Result<CVector> {
        let mut a = self.matrix.clone();
        for k in 0..self.dim() {
            a[(k, k)] += I * delta;
        }
        a.lu()
            .solve(&(&self.source * re(-rabi)))
            .ok_or(Error::Singular("first-order steady state"))
    }

    /// (Sx|ρ̃₁) at detuning offset `delta`.
    pub fn signal(&self, rabi: f64, delta: f64) -> Result<Complex64> {
        let x = self.steady_state(rabi, delta)?;
        Ok(self.observable.dot(&x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::OMEGA_HF_RB87;
    use crate::rates::{assemble_rates, CollisionParams};
    use approx::assert_abs_diff_eq;

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn cell() -> CellConditions {
        CellConditions::default()
    }

    #[test]
    fn unpolarized_equilibrium() {
        let model = Model::shared();
        let c = CellConditions {
            pumping_rate: 0.0,
            ..cell()
        };
        let r = assemble_rates(&c, &CollisionParams::default()).unwrap();
        let st = equilibrium_state(&model.ops, &r, &c).unwrap();
        assert_eq!(st.polarization, 0.0);
        let id = CMatrix::identity(8, 8) / re(8.0);
        assert!(max_abs(&(&st.density - id)) < 1e-15);
    }

    #[test]
    fn strong_pumping_approaches_full_polarization() {
        let model = Model::shared();
        let c = CellConditions {
            pumping_rate: 1e9,
            ..cell()
        };
        let r = assemble_rates(&c, &CollisionParams::default()).unwrap();
        let p = equilibrium_polarization(&r, &c).unwrap();
        assert!(p > 0.999999 && p < 1.0);
        assert!(equilibrium_state(&model.ops, &r, &c).is_ok());
    }

    #[test]
    fn spin_temperature_half_polarization() {
        let ops = &Model::shared().ops;
        let st = SpinTemperatureState::from_polarization(ops, 0.5).unwrap();
        assert_abs_diff_eq!(st.beta, 1.0986122886681098, epsilon = 1e-12);
        let sz = (&ops.s[2] * &st.density).trace().re;
        assert_abs_diff_eq!(2.0 * sz, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(st.density.trace().re, 1.0, epsilon = 1e-14);
        assert!(SpinTemperatureState::from_polarization(ops, 1.0).is_err());
    }

    #[test]
    fn unphysical_polarization_is_rejected() {
        let c = CellConditions {
            pumping_rate: 0.0,
            xe_polarization: 0.5,
            ..cell()
        };
        let mut r = assemble_rates(&c, &CollisionParams::default()).unwrap();
        r.se_xe_total = 10.0 * r.sd_binary;
        assert!(matches!(
            equilibrium_polarization(&r, &c),
            Err(Error::UnphysicalPolarization(_))
        ));
    }

    #[test]
    fn coherent_only_generator_is_hamiltonian_commutator() {
        let model = Model::shared();
        let r = RateSet::default();
        let c = CellConditions {
            pumping_rate: 0.0,
            ..cell()
        };
        let drive = DriveParams {
            rabi: 0.0,
            frequency: 0.0,
        };
        let g = build_full_generator(model, &r, &c, OMEGA_HF_RB87, drive);
        let h = static_hamiltonian(&model.ops, &c, OMEGA_HF_RB87);
        assert_eq!(max_abs(&(&g.linear - commutator(&h) * I)), 0.0);
    }

    #[test]
    fn full_generator_preserves_trace() {
        let model = Model::shared();
        let c = CellConditions {
            xe_polarization: 0.3,
            pumping_rate: 500.0,
            ..cell()
        };
        let r = assemble_rates(&c, &CollisionParams::default()).unwrap();
        let drive = DriveParams {
            rabi: 10.0,
            frequency: 1e3,
        };
        let g = build_full_generator(model, &r, &c, OMEGA_HF_RB87, drive);
        let id = vectorize(&CMatrix::identity(8, 8));
        let scale = max_abs(&g.linear);
        assert!((id.adjoint() * &g.linear).iter().all(|z| z.norm() <= 1e-10 * scale));
        let rho = SpinTemperatureState::from_polarization(&model.ops, 0.4).unwrap().vector;
        assert!(id.dotc(&g.rhs(0.1, &rho)).norm() <= 1e-9 * scale);
    }

    #[test]
    fn s_damping_euler_step() {
        // dSz/dt = −Γ_SD Sz for the electron-only part at a pure product state
        let model = Model::shared();
        let r = RateSet {
            total: 100.0,
            ..RateSet::default()
        };
        let c = CellConditions {
            field: 0.0,
            pumping_rate: 0.0,
            ..cell()
        };
        let drive = DriveParams {
            rabi: 0.0,
            frequency: 0.0,
        };
        let g = build_full_generator(model, &r, &c, 0.0, drive);
        let st = SpinTemperatureState::from_polarization(&model.ops, 0.6).unwrap();
        let dt = 1e-7;
        let next = &st.vector + g.rhs(0.0, &st.vector) * re(dt);
        let sz = |v: &LiouvilleVector| g.spin_expectation(v)[2];
        // A_SD ρ = ρ − φ and Tr(Sz φ) = 0, so d⟨Sz⟩/dt = −Γ⟨Sz⟩
        let want = sz(&st.vector) * (1.0 - 100.0 * dt);
        assert_abs_diff_eq!(sz(&next), want, epsilon = 1e-14);
    }

    #[test]
    fn zeeman_frequencies_low_field() {
        let ops = &Model::shared().ops;
        let c = cell();
        let z = zeeman_frequencies(ops, &c, OMEGA_HF_RB87);
        let w0 = c.electron_larmor();
        let wi = c.nuclear_larmor();
        assert!((z.upper - (w0 / 4.0 + 0.75 * wi)).abs() < 1e-5 * w0);
        assert!((z.lower - (w0 / 4.0 - 1.25 * wi)).abs() < 1e-5 * w0);
        let zero = zeeman_frequencies(ops, &CellConditions { field: 0.0, ..c }, OMEGA_HF_RB87);
        assert_abs_diff_eq!(zero.upper, 0.0, epsilon = 1e-3);
        assert_abs_diff_eq!(zero.lower, 0.0, epsilon = 1e-3);
        let d = Detuning::from_drive(zero, 5.0);
        assert_abs_diff_eq!(d.upper, d.lower, epsilon = 1e-3);
    }

    #[test]
    fn bare_s_damping_generator() {
        let model = Model::shared();
        let r = RateSet {
            total: 160.0,
            ..RateSet::default()
        };
        let c = CellConditions {
            pumping_rate: 0.0,
            ..cell()
        };
        let st = SpinTemperatureState::from_polarization(&model.ops, 0.0).unwrap();
        let g = build_wda_generator(model, &r, &c, &st, Detuning::uniform(3.0));
        let diag = [16.0, 12.0, 9.0, 7.0, 13.0, 11.0];
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j {
                    Complex64::new(10.0 * diag[i], 3.0)
                } else {
                    Complex64::default()
                };
                assert!((g.matrix[(i, j)] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn transverse_exchange_at_boundary_polarizations() {
        let model = Model::shared();
        let st = SpinTemperatureState::from_polarization(&model.ops, 0.0).unwrap();
        let a = model.transverse_exchange_block(&st);
        assert_abs_diff_eq!(a[(3, 3)].re, 5.0 / 16.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a[(5, 5)].re, 1.0 / 16.0, epsilon = 1e-12);
        let st = SpinTemperatureState::from_polarization(&model.ops, 1.0 - 1e-12).unwrap();
        let a = model.transverse_exchange_block(&st);
        assert!(a[(4, 5)].norm() < 1e-9 && a[(5, 5)].norm() < 1e-9);
    }

    #[test]
    fn stable_spectrum_and_conjugate_block() {
        let model = Model::shared();
        let c = CellConditions {
            pumping_rate: 2.0 * std::f64::consts::PI * 300.0,
            xe_polarization: 0.2,
            ..cell()
        };
        let r = assemble_rates(&c, &CollisionParams::default()).unwrap();
        let st = equilibrium_state(&model.ops, &r, &c).unwrap();
        let g = build_wda_generator(model, &r, &c, &st, Detuning::default());
        let ev = crate::eigen::eigendecompose(&g.matrix).unwrap().values;
        for z in ev.iter() {
            assert!(z.re >= 0.0);
        }
        // the order −1 block is the complex conjugate of the order +1 block
        assert!(g.relaxation.iter().all(|z| z.im.abs() < 1e-12));
    }

    fn random_cell() -> impl proptest::strategy::Strategy<Value = CellConditions> {
        use proptest::prelude::*;
        (330.0..430.0f64, 10.0..2000.0f64, 0.0..10.0f64, 0.0..1e4f64, -0.5..=0.5f64).prop_map(
            |(t, pn, px, r, k)| CellConditions {
                temperature: t,
                n2_pressure: pn,
                xe_pressure: px,
                pumping_rate: r,
                xe_polarization: k,
                ..CellConditions::default()
            },
        )
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]
        #[test]
        fn wda_spectrum_is_damped_and_shift_covariant(c in random_cell(), shift in -1e4..1e4f64) {
            let model = Model::shared();
            let r = assemble_rates(&c, &CollisionParams::default()).unwrap();
            let st = equilibrium_state(&model.ops, &r, &c).unwrap();
            let still = build_wda_generator(model, &r, &c, &st, Detuning::uniform(0.0));
            let moved = build_wda_generator(model, &r, &c, &st, Detuning::uniform(shift));
            let a = crate::eigen::eigendecompose(&still.matrix).unwrap();
            let b = crate::eigen::eigendecompose(&moved.matrix).unwrap();
            let scale = a.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
            for z in &a.values {
                proptest::prop_assert!(z.re >= -1e-10 * scale, "{}", z);
            }
            for (x, y) in a.values.iter().zip(&b.values) {
                proptest::prop_assert!((x.re - y.re).abs() <= 1e-9 * scale);
                proptest::prop_assert!((y.im - x.im - shift).abs() <= 1e-9 * (scale + shift.abs()));
            }
        }
    }
}
