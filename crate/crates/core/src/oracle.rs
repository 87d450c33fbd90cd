//! Time-domain reference: the full nonlinear master equation integrated in
//! the lab frame with an explicit cos(ωt) drive, demodulated at ω.
//!
//! The stiff linear part (hyperfine, Zeeman and relaxation) is propagated
//! exactly by exponential time differencing (ETDRK4); the drive and the
//! ⟨S⟩-dependent exchange feedback are the explicit part. The linear part
//! conserves the total coherence order m − m', so its exponentials are
//! block-diagonal and stored per sector.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fit::{fit_lorentzian, LorentzianFit};
use crate::generator::{
    build_full_generator, zeeman_frequencies, DriveParams, FullGenerator, Model,
};
use crate::liouville::{devectorize, vectorize, LiouvilleVector, Superoperator};
use crate::rates::{CellConditions, RateSet};
use crate::spin::SpinOperators;
use crate::{CMatrix, CVector};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Fits above this relative residual are reported as non-Lorentzian.
pub const RESIDUAL_LIMIT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Exponential integrator; exact for the linear part.
    #[default]
    Etdrk4,
    /// Classical RK4 on the full right-hand side. Needs steps well below
    /// the hyperfine period, so only usable over short horizons.
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationSpec {
    pub method: Method,
    /// Steps per drive period.
    pub steps_per_period: usize,
    /// Time discarded before demodulation, s.
    pub settle_time: f64,
    /// Drive periods demodulated after settling.
    pub measure_periods: usize,
    /// Largest tolerated |Tr ρ − 1| or ‖ρ − ρ†‖.
    pub drift_tolerance: f64,
}

impl Default for IntegrationSpec {
    fn default() -> Self {
        IntegrationSpec {
            method: Method::Etdrk4,
            steps_per_period: 32,
            settle_time: 0.0,
            measure_periods: 40,
            drift_tolerance: 1e-6,
        }
    }
}

impl IntegrationSpec {
    /// Settles for ten lifetimes of a resonance of half-width `width`.
    pub fn for_width(width: f64) -> Self {
        IntegrationSpec {
            settle_time: 10.0 / width,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps_per_period < 4 {
            return Err(Error::Config("steps_per_period must be at least 4".into()));
        }
        if self.measure_periods == 0 {
            return Err(Error::Config("measure_periods must be positive".into()));
        }
        if !(self.settle_time >= 0.0 && self.settle_time.is_finite()) {
            return Err(Error::Config(format!("settle_time {} s", self.settle_time)));
        }
        if !(self.drift_tolerance > 0.0) {
            return Err(Error::Config("drift_tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Row-compressed sparse complex matrix.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    starts: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl SparseOperator {
    pub fn from_dense(m: &CMatrix) -> Self {
        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let cut = 1e-15 * scale;
        let mut starts = vec![0];
        let (mut cols, mut vals) = (Vec::new(), Vec::new());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let z = m[(r, c)];
                if z.norm() > cut {
                    cols.push(c);
                    vals.push(z);
                }
            }
            starts.push(cols.len());
        }
        SparseOperator { starts, cols, vals }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// out += alpha · self · v.
    pub fn apply_add(&self, alpha: Complex64, v: &CVector, out: &mut CVector) {
        for r in 0..self.starts.len() - 1 {
            let mut s = Complex64::default();
            for k in self.starts[r]..self.starts[r + 1] {
                s += self.vals[k] * v[self.cols[k]];
            }
            out[r] += alpha * s;
        }
    }
}

/// Liouville indices grouped by total coherence order m − m'.
pub fn coherence_sectors(ops: &SpinOperators) -> Vec<Vec<usize>> {
    let n = ops.dim();
    let order = |k: usize| ops.states[k / n].m.twice() - ops.states[k % n].m.twice();
    let mut orders: Vec<i32> = (0..n * n).map(order).collect();
    orders.sort_unstable();
    orders.dedup();
    orders
        .into_iter()
        .map(|q| (0..n * n).filter(|&k| order(k) == q).collect())
        .collect()
}

#[derive(Debug, Clone)]
struct Block {
    idx: Vec<usize>,
    m: CMatrix,
}

/// Square matrix stored as dense diagonal blocks on index subsets.
#[derive(Debug, Clone)]
pub struct BlockOperator {
    dim: usize,
    blocks: Vec<Block>,
}

impl BlockOperator {
    /// Splits `m` along `sectors`, or keeps one dense block when `m`
    /// couples them.
    pub fn split(m: &CMatrix, sectors: &[Vec<usize>]) -> Self {
        let n = m.nrows();
        let mut label = vec![0usize; n];
        for (s, idx) in sectors.iter().enumerate() {
            for &k in idx {
                label[k] = s;
            }
        }
        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let coupled = (0..n)
            .any(|r| (0..n).any(|c| label[r] != label[c] && m[(r, c)].norm() > 1e-13 * scale));
        let groups: Vec<Vec<usize>> = if coupled {
            vec![(0..n).collect()]
        } else {
            sectors.to_vec()
        };
        let blocks = groups
            .into_iter()
            .map(|idx| Block {
                m: CMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])]),
                idx,
            })
            .collect();
        BlockOperator { dim: n, blocks }
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for b in &self.blocks {
            for (r, &i) in b.idx.iter().enumerate() {
                for (c, &j) in b.idx.iter().enumerate() {
                    out[(i, j)] = b.m[(r, c)];
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        let mut out = CVector::zeros(self.dim);
        self.apply_add(re(1.0), v, &mut out);
        out
    }

    /// out += alpha · self · v.
    pub fn apply_add(&self, alpha: Complex64, v: &CVector, out: &mut CVector) {
        for b in &self.blocks {
            for (r, &i) in b.idx.iter().enumerate() {
                let mut s = Complex64::default();
                for (c, &j) in b.idx.iter().enumerate() {
                    s += b.m[(r, c)] * v[j];
                }
                out[i] += alpha * s;
            }
        }
    }
}

/// e^B and φ₁..φ_k(B) from one exponential of an augmented matrix.
fn phi_functions(b: &CMatrix, k: usize) -> Vec<CMatrix> {
    let n = b.nrows();
    let mut z = CMatrix::zeros(n * (k + 1), n * (k + 1));
    z.view_mut((0, 0), (n, n)).copy_from(b);
    for j in 0..k {
        for d in 0..n {
            z[(j * n + d, (j + 1) * n + d)] = re(1.0);
        }
    }
    let e = z.exp();
    (0..=k)
        .map(|j| e.view((0, j * n), (n, n)).into_owned())
        .collect()
}

/// ETDRK4 weights for u' = −L u + N(u, t) at step h.
#[derive(Debug, Clone)]
pub struct EtdCoefficients {
    pub step: f64,
    half_exp: BlockOperator,
    half_phi: BlockOperator,
    full_exp: BlockOperator,
    f1: BlockOperator,
    f2: BlockOperator,
    f3: BlockOperator,
}

impl EtdCoefficients {
    pub fn new(linear: &BlockOperator, step: f64) -> Self {
        let h = step;
        let half: Vec<Vec<CMatrix>> = linear
            .blocks
            .iter()
            .map(|b| phi_functions(&(&b.m * re(-h / 2.0)), 1))
            .collect();
        let full: Vec<Vec<CMatrix>> = linear
            .blocks
            .iter()
            .map(|b| phi_functions(&(&b.m * re(-h)), 3))
            .collect();
        let pick = |set: &Vec<Vec<CMatrix>>, f: &dyn Fn(&[CMatrix]) -> CMatrix| BlockOperator {
            dim: linear.dim,
            blocks: linear
                .blocks
                .iter()
                .zip(set)
                .map(|(b, p)| Block {
                    idx: b.idx.clone(),
                    m: f(p),
                })
                .collect(),
        };
        EtdCoefficients {
            step,
            half_exp: pick(&half, &|p| p[0].clone()),
            half_phi: pick(&half, &|p| &p[1] * re(h / 2.0)),
            full_exp: pick(&full, &|p| p[0].clone()),
            f1: pick(&full, &|p| (&p[1] - &p[2] * re(3.0) + &p[3] * re(4.0)) * re(h)),
            f2: pick(&full, &|p| (&p[2] - &p[3] * re(2.0)) * re(h)),
            f3: pick(&full, &|p| (&p[3] * re(4.0) - &p[2]) * re(h)),
        }
    }

    /// e^{−Lh} as a dense matrix.
    pub fn propagator(&self) -> CMatrix {
        self.full_exp.to_dense()
    }
}

/// Explicit part of the right-hand side: drive plus exchange feedback.
#[derive(Debug, Clone)]
pub struct Forcing {
    drive: SparseOperator,
    rabi: f64,
    frequency: f64,
    exchange: [SparseOperator; 3],
    exchange_rate: f64,
    spin: [LiouvilleVector; 3],
}

impl Forcing {
    pub fn new(gen: &FullGenerator) -> Self {
        Forcing {
            drive: SparseOperator::from_dense(&gen.drive),
            rabi: gen.drive_params.rabi,
            frequency: gen.drive_params.frequency,
            exchange: gen.s_exchange.each_ref().map(SparseOperator::from_dense),
            exchange_rate: gen.exchange_rate,
            spin: gen.spin_vectors.clone(),
        }
    }

    pub fn spin(&self, u: &CVector) -> [f64; 3] {
        self.spin.each_ref().map(|s| s.dotc(u).re)
    }

    pub fn eval(&self, t: f64, u: &CVector) -> CVector {
        let mut out = CVector::zeros(u.len());
        if self.rabi != 0.0 {
            let a = -I * (self.rabi * (self.frequency * t).cos());
            self.drive.apply_add(a, u, &mut out);
        }
        if self.exchange_rate != 0.0 {
            let s = self.spin(u);
            for j in 0..3 {
                if s[j] != 0.0 {
                    self.exchange[j].apply_add(re(self.exchange_rate * s[j]), u, &mut out);
                }
            }
        }
        out
    }
}

/// Fixed-step integrator for the full master equation.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub step: f64,
    forcing: Forcing,
    scheme: Scheme,
}

#[derive(Debug, Clone)]
enum Scheme {
    Etd(Box<EtdCoefficients>),
    Rk4(Box<Superoperator>),
}

impl Stepper {
    pub fn new(gen: &FullGenerator, sectors: &[Vec<usize>], method: Method, step: f64) -> Self {
        let scheme = match method {
            Method::Etdrk4 => {
                let linear = BlockOperator::split(&gen.linear, sectors);
                Scheme::Etd(Box::new(EtdCoefficients::new(&linear, step)))
            }
            Method::Rk4 => Scheme::Rk4(Box::new(&gen.linear * re(-1.0))),
        };
        Stepper {
            step,
            forcing: Forcing::new(gen),
            scheme,
        }
    }

    pub fn forcing(&self) -> &Forcing {
        &self.forcing
    }

    /// Advances `u` from `t` to `t + step`.
    pub fn advance(&self, t: f64, u: &CVector) -> CVector {
        let h = self.step;
        let n = &self.forcing;
        match &self.scheme {
            Scheme::Etd(c) => {
                let nu = n.eval(t, u);
                let eu = c.half_exp.apply(u);
                let mut a = eu.clone();
                c.half_phi.apply_add(re(1.0), &nu, &mut a);
                let na = n.eval(t + h / 2.0, &a);
                let mut b = eu;
                c.half_phi.apply_add(re(1.0), &na, &mut b);
                let nb = n.eval(t + h / 2.0, &b);
                let mut d = c.half_exp.apply(&a);
                c.half_phi.apply_add(re(1.0), &(&nb * re(2.0) - &nu), &mut d);
                let nd = n.eval(t + h, &d);
                let mut out = c.full_exp.apply(u);
                c.f1.apply_add(re(1.0), &nu, &mut out);
                c.f2.apply_add(re(2.0), &(na + nb), &mut out);
                c.f3.apply_add(re(1.0), &nd, &mut out);
                out
            }
            Scheme::Rk4(l) => {
                let f = |t: f64, v: &CVector| -> CVector { &**l * v + n.eval(t, v) };
                let k1 = f(t, u);
                let k2 = f(t + h / 2.0, &(u + &k1 * re(h / 2.0)));
                let k3 = f(t + h / 2.0, &(u + &k2 * re(h / 2.0)));
                let k4 = f(t + h, &(u + &k3 * re(h)));
                u + (k1 + k2 * re(2.0) + k3 * re(2.0) + k4) * re(h / 6.0)
            }
        }
    }
}

/// Trace and Hermiticity defects of a state and its smallest eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateHealth {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

pub fn state_health(u: &CVector, n: usize) -> Result<StateHealth> {
    let rho = devectorize(u, n)?;
    let trace_error = (rho.trace() - re(1.0)).norm();
    let hermiticity_error = (&rho - rho.adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let sym = (&rho + rho.adjoint()) * re(0.5);
    let min_eigenvalue = SymmetricEigen::new(sym).eigenvalues.min();
    Ok(StateHealth {
        trace_error,
        hermiticity_error,
        min_eigenvalue,
    })
}

fn check_health(u: &CVector, n: usize, t: f64, tol: f64) -> Result<StateHealth> {
    let h = state_health(u, n)?;
    let reason = if !(h.trace_error <= tol) {
        Some(format!("trace drift {:.3e}", h.trace_error))
    } else if !(h.hermiticity_error <= tol) {
        Some(format!("hermiticity drift {:.3e}", h.hermiticity_error))
    } else if !(h.min_eigenvalue >= -1e-8) {
        Some(format!("negative eigenvalue {:.3e}", h.min_eigenvalue))
    } else {
        None
    };
    match reason {
        Some(reason) => Err(Error::Integration { time: t, reason }),
        None => Ok(h),
    }
}

/// Drive-free stationary state of the full equation, with the exchange
/// feedback solved self-consistently.
#[derive(Debug, Clone)]
pub struct StationaryState {
    pub vector: LiouvilleVector,
    /// ⟨Sz⟩.
    pub spin_z: f64,
    /// 2⟨Sz⟩.
    pub polarization: f64,
}

fn stationary_for(gen: &FullGenerator, trace_row: &CVector, sz: f64) -> Result<CVector> {
    let mut m = &gen.linear - gen.exchange_superoperator([0.0, 0.0, sz]);
    let n = m.nrows();
    m.set_row(0, &trace_row.transpose());
    let mut rhs = CVector::zeros(n);
    rhs[0] = re(1.0);
    m.lu()
        .solve(&rhs)
        .ok_or(Error::Singular("stationary state"))
}

pub fn stationary_state(gen: &FullGenerator) -> Result<StationaryState> {
    let n = (gen.linear.nrows() as f64).sqrt().round() as usize;
    let trace_row = vectorize(&CMatrix::identity(n, n)).map(|z| z.conj());
    let sz_vec = &gen.spin_vectors[2];
    let residual = |s: f64| -> Result<(f64, CVector)> {
        let v = stationary_for(gen, &trace_row, s)?;
        Ok((sz_vec.dotc(&v).re - s, v))
    };
    if gen.exchange_rate == 0.0 {
        let (g, v) = residual(0.0)?;
        return Ok(StationaryState {
            vector: v,
            spin_z: g,
            polarization: 2.0 * g,
        });
    }
    // Illinois false position on the bracket [−½, ½]
    let (mut lo, mut hi) = (-0.5, 0.5);
    let (mut glo, _) = residual(lo)?;
    let (mut ghi, _) = residual(hi)?;
    if glo * ghi > 0.0 {
        return Err(Error::SteadyState(format!(
            "no sign change in ⟨Sz⟩ residual ({glo:.3e}, {ghi:.3e})"
        )));
    }
    let mut side = 0i8;
    for _ in 0..200 {
        let s = (lo * ghi - hi * glo) / (ghi - glo);
        let (g, v) = residual(s)?;
        if g.abs() <= 1e-15 || (hi - lo).abs() <= 1e-15 {
            return Ok(StationaryState {
                vector: v,
                spin_z: s,
                polarization: 2.0 * s,
            });
        }
        if g * ghi > 0.0 {
            hi = s;
            ghi = g;
            if side == 1 {
                glo /= 2.0;
            }
            side = 1;
        } else {
            lo = s;
            glo = g;
            if side == -1 {
                ghi /= 2.0;
            }
            side = -1;
        }
    }
    Err(Error::SteadyState("⟨Sz⟩ iteration did not converge".into()))
}

/// Sampled free or driven evolution.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub spin: Vec<[f64; 3]>,
    pub final_state: CVector,
    pub worst: StateHealth,
}

/// Integrates from `initial` over `steps` steps of `stepper`, sampling ⟨S⟩
/// every `sample_every` steps and checking state health at each sample.
pub fn integrate_master_equation(
    stepper: &Stepper,
    initial: &CVector,
    steps: usize,
    sample_every: usize,
    drift_tolerance: f64,
) -> Result<Trajectory> {
    let n = (initial.len() as f64).sqrt().round() as usize;
    let every = sample_every.max(1);
    let mut u = initial.clone();
    let mut times = vec![0.0];
    let mut spin = vec![stepper.forcing.spin(&u)];
    let mut worst = check_health(&u, n, 0.0, drift_tolerance)?;
    for k in 0..steps {
        let t = k as f64 * stepper.step;
        u = stepper.advance(t, &u);
        if (k + 1) % every == 0 || k + 1 == steps {
            let t1 = (k + 1) as f64 * stepper.step;
            let h = check_health(&u, n, t1, drift_tolerance)?;
            worst.trace_error = worst.trace_error.max(h.trace_error);
            worst.hermiticity_error = worst.hermiticity_error.max(h.hermiticity_error);
            worst.min_eigenvalue = worst.min_eigenvalue.min(h.min_eigenvalue);
            times.push(t1);
            spin.push(stepper.forcing.spin(&u));
        }
    }
    Ok(Trajectory {
        times,
        spin,
        final_state: u,
        worst,
    })
}

/// Demodulated response at one drive frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OraclePoint {
    /// Offset Δ = ω_ref − ω, rad/s.
    pub offset: f64,
    /// Drive frequency ω, rad/s.
    pub frequency: f64,
    /// ⟨Sx⟩ = mean + in_phase·cos ωt + quadrature·sin ωt.
    pub in_phase: f64,
    pub quadrature: f64,
    pub mean: f64,
    /// Complex amplitude A with ⟨Sx⟩ = A e^{−iωt} + c.c.
    pub amplitude: Complex64,
    pub worst_trace_error: f64,
    pub worst_hermiticity_error: f64,
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub points: Vec<OraclePoint>,
    pub fit: Option<LorentzianFit>,
    /// False when the fit failed or its residual exceeds [`RESIDUAL_LIMIT`].
    pub lorentzian: bool,
    /// Relative HWHM change when the Rabi frequency is halved.
    pub linearity: Option<f64>,
}

impl OracleResult {
    pub fn hwhm(&self) -> Option<f64> {
        self.fit.filter(|f| f.converged).map(|f| f.hwhm)
    }
}

/// Least-squares fit of samples to c₀ + c₁cos ωt + c₂sin ωt.
pub fn demodulate(times: &[f64], values: &[f64], frequency: f64) -> Option<[f64; 3]> {
    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    for (&t, &y) in times.iter().zip(values) {
        let (s, c) = (frequency * t).sin_cos();
        let row = Vector3::new(1.0, c, s);
        ata += row * row.transpose();
        atb += row * y;
    }
    let x = ata.cholesky()?.solve(&atb);
    Some([x[0], x[1], x[2]])
}

/// Lab-frame driven master equation for one cell.
#[derive(Debug, Clone)]
pub struct Oracle {
    pub generator: FullGenerator,
    pub stationary: StationaryState,
    /// Upper-multiplet resonance, rad/s.
    pub reference: f64,
    pub spec: IntegrationSpec,
    sectors: Vec<Vec<usize>>,
    dim: usize,
}

impl Oracle {
    pub fn new(
        model: &Model,
        rates: &RateSet,
        cond: &CellConditions,
        hyperfine: f64,
        rabi: f64,
        spec: IntegrationSpec,
    ) -> Result<Self> {
        spec.validate()?;
        if !(rabi >= 0.0 && rabi.is_finite()) {
            return Err(Error::InvalidConditions(format!("Rabi frequency {rabi}")));
        }
        let reference = zeeman_frequencies(&model.ops, cond, hyperfine).upper;
        if !(reference > 0.0) {
            return Err(Error::InvalidConditions(
                "a positive static field is required for the drive".into(),
            ));
        }
        let drive = DriveParams {
            rabi,
            frequency: reference,
        };
        let generator = build_full_generator(model, rates, cond, hyperfine, drive);
        let stationary = stationary_state(&generator)?;
        Ok(Oracle {
            generator,
            stationary,
            reference,
            spec,
            sectors: coherence_sectors(&model.ops),
            dim: model.ops.dim(),
        })
    }

    pub fn rabi(&self) -> f64 {
        self.generator.drive_params.rabi
    }

    pub fn with_rabi(&self, rabi: f64) -> Self {
        let mut o = self.clone();
        o.generator.drive_params.rabi = rabi;
        o
    }

    /// Integrates at ω = reference − offset and demodulates ⟨Sx⟩.
    pub fn point(&self, offset: f64) -> Result<OraclePoint> {
        let frequency = self.reference - offset;
        if !(frequency > 0.0) {
            return Err(Error::InvalidConditions(format!(
                "drive frequency {frequency} rad/s"
            )));
        }
        let mut gen = self.generator.clone();
        gen.drive_params.frequency = frequency;
        let period = 2.0 * std::f64::consts::PI / frequency;
        let per = self.spec.steps_per_period;
        let stepper = Stepper::new(&gen, &self.sectors, self.spec.method, period / per as f64);
        let settle = (self.spec.settle_time / period).ceil() as usize;
        let measure = self.spec.measure_periods;
        let tol = self.spec.drift_tolerance;

        let mut u = self.stationary.vector.clone();
        let mut worst = check_health(&u, self.dim, 0.0, tol)?;
        let mut times = Vec::with_capacity(measure * per);
        let mut sx = Vec::with_capacity(measure * per);
        for p in 0..settle + measure {
            for k in 0..per {
                let idx = p * per + k;
                let t = idx as f64 * stepper.step;
                if p >= settle {
                    times.push(t);
                    sx.push(stepper.forcing.spin(&u)[0]);
                }
                u = stepper.advance(t, &u);
            }
            let t = ((p + 1) * per) as f64 * stepper.step;
            let h = check_health(&u, self.dim, t, tol)?;
            worst.trace_error = worst.trace_error.max(h.trace_error);
            worst.hermiticity_error = worst.hermiticity_error.max(h.hermiticity_error);
        }
        let [mean, in_phase, quadrature] = demodulate(&times, &sx, frequency).ok_or(
            Error::Integration {
                time: times.last().copied().unwrap_or(0.0),
                reason: "demodulation is singular".into(),
            },
        )?;
        Ok(OraclePoint {
            offset,
            frequency,
            in_phase,
            quadrature,
            mean,
            amplitude: Complex64::new(in_phase, quadrature) * 0.5,
            worst_trace_error: worst.trace_error,
            worst_hermiticity_error: worst.hermiticity_error,
        })
    }

    pub fn sweep(&self, offsets: &[f64]) -> Result<Vec<OraclePoint>> {
        offsets.iter().map(|&d| self.point(d)).collect()
    }

    /// Sweeps `offsets`, fits one Lorentzian and optionally repeats at half
    /// the Rabi frequency to check linear response.
    pub fn sweep_and_fit(&self, offsets: &[f64], check_linearity: bool) -> Result<OracleResult> {
        let points = self.sweep(offsets)?;
        let mut result = fit_points(points);
        if check_linearity {
            let half = fit_points(self.with_rabi(self.rabi() / 2.0).sweep(offsets)?);
            result.linearity = match (result.hwhm(), half.hwhm()) {
                (Some(a), Some(b)) => Some((b / a - 1.0).abs()),
                _ => None,
            };
        }
        Ok(result)
    }
}

/// Fits a Lorentzian in the offset variable to demodulated points.
pub fn fit_points(points: Vec<OraclePoint>) -> OracleResult {
    let x: Vec<f64> = points.iter().map(|p| p.offset).collect();
    let y: Vec<Complex64> = points.iter().map(|p| p.amplitude).collect();
    let fit = fit_lorentzian(&x, &y);
    let lorentzian = fit.is_some_and(|f| f.converged && f.relative_residual <= RESIDUAL_LIMIT);
    OracleResult {
        points,
        fit,
        lorentzian,
        linearity: None,
    }
}

/// Uniform offset grid of `n` points over ±`span`·`width` about `center`.
pub fn offset_grid(center: f64, width: f64, span: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![center],
        _ => (0..n)
            .map(|k| center - span * width + 2.0 * span * width * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::OMEGA_HF_RB87;
    use crate::eigen::eigendecompose;
    use crate::generator::equilibrium_polarization;
    use crate::rates::{assemble_rates, CollisionParams};
    use std::f64::consts::PI;

    fn zero_rates() -> RateSet {
        let c = CellConditions {
            xe_pressure: 0.0,
            pumping_rate: 0.0,
            ..CellConditions::default()
        };
        let mut r = assemble_rates(&c, &CollisionParams::default()).unwrap();
        for f in [
            &mut r.sd_rb_rb,
            &mut r.sd_rb_n2,
            &mut r.sd_rb_xe,
            &mut r.se_rb_rb,
            &mut r.se_rb_xe,
            &mut r.se_vdw,
            &mut r.sd_vdw,
            &mut r.f_damping,
            &mut r.f_exchange,
            &mut r.se_xe_total,
            &mut r.sd_binary,
            &mut r.total,
            &mut r.sd_polarized,
            &mut r.pumping,
        ] {
            *f = 0.0;
        }
        r
    }

    fn gen(rates: &RateSet, cond: &CellConditions, hyperfine: f64, rabi: f64) -> FullGenerator {
        let drive = DriveParams {
            rabi,
            frequency: 2.0 * PI * 7e4,
        };
        build_full_generator(Model::shared(), rates, cond, hyperfine, drive)
    }

    #[test]
    fn linear_part_is_block_diagonal_by_coherence_order() {
        let model = Model::shared();
        let sectors = coherence_sectors(&model.ops);
        let sizes: Vec<usize> = sectors.iter().map(|s| s.len()).collect();
        assert_eq!(sizes, vec![1, 4, 8, 12, 14, 12, 8, 4, 1]);
        let c = CellConditions {
            xe_polarization: 0.3,
            pumping_rate: 2.0 * PI * 200.0,
            ..CellConditions::default()
        };
        let r = assemble_rates(&c, &CollisionParams::default()).unwrap();
        let g = gen(&r, &c, OMEGA_HF_RB87, 0.0);
        let b = BlockOperator::split(&g.linear, &sectors);
        assert_eq!(b.block_count(), 9);
        let d = (b.to_dense() - &g.linear).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert_eq!(d, 0.0);
    }

    #[test]
    fn etd_propagator_matches_dense_exponential() {
        let model = Model::shared();
        let c = CellConditions::default();
        let r = assemble_rates(&c, &CollisionParams::default()).unwrap();
        // a reduced hyperfine keeps the dense exponential well scaled
        let g = gen(&r, &c, 2.0 * PI * 2e6, 0.0);
        let h = 3e-7;
        let b = BlockOperator::split(&g.linear, &coherence_sectors(&model.ops));
        let e = EtdCoefficients::new(&b, h).propagator();
        let want = (&g.linear * re(-h)).exp();
        let d = (e - want).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(d < 1e-11, "{d:e}");
    }

    #[test]
    fn phi_functions_of_scalar() {
        let z = Complex64::new(-0.7, 2.3);
        let p = phi_functions(&CMatrix::from_element(1, 1, z), 3);
        let e = z.exp();
        let phi1 = (e - 1.0) / z;
        let phi2 = (e - 1.0 - z) / (z * z);
        let phi3 = (e - 1.0 - z - z * z / 2.0) / (z * z * z);
        for (got, want) in p.iter().zip([e, phi1, phi2, phi3]) {
            assert!((got[(0, 0)] - want).norm() < 1e-13);
        }
    }

    #[test]
    fn free_precession_conserves_fz_and_purity() {
        let model = Model::shared();
        let r = zero_rates();
        let c = CellConditions::default();
        let g = gen(&r, &c, OMEGA_HF_RB87, 0.0);
        // pure state tipped away from z
        let psi = CVector::from_fn(8, |k, _| re(1.0 + k as f64).sqrt());
        let psi = &psi / re(psi.norm());
        let rho0 = &psi * psi.adjoint();
        let fz = vectorize(&model.ops.f[2]);
        let stepper = Stepper::new(&g, &coherence_sectors(&model.ops), Method::Etdrk4, 1e-6);
        let tr = integrate_master_equation(&stepper, &vectorize(&rho0), 200, 50, 1e-6).unwrap();
        let rho = devectorize(&tr.final_state, 8).unwrap();
        let purity = (&rho * &rho).trace().re;
        assert!((purity - 1.0).abs() < 1e-8, "{purity}");
        let fz0 = fz.dotc(&vectorize(&rho0)).re;
        let fz1 = fz.dotc(&tr.final_state).re;
        assert!((fz1 - fz0).abs() < 1e-8, "{fz0} {fz1}");
    }

    #[test]
    fn etd_agrees_with_rk4_over_short_driven_run() {
        let model = Model::shared();
        let c = CellConditions {
            pumping_rate: 2.0 * PI * 300.0,
            ..CellConditions::default()
        };
        let r = assemble_rates(&c, &CollisionParams::default()).unwrap();
        let g = gen(&r, &c, OMEGA_HF_RB87, 2.0 * PI * 5e3);
        let st = stationary_state(&g).unwrap();
        let sectors = coherence_sectors(&model.ops);
        // RK4 must resolve the hyperfine period
        let h_fine = 1.0 / (50.0 * OMEGA_HF_RB87);
        let t_end = 4000.0 * h_fine;
        let rk = Stepper::new(&g, &sectors, Method::Rk4, h_fine);
        let a = integrate_master_equation(&rk, &st.vector, 4000, 4000, 1e-8).unwrap();
        let etd = Stepper::new(&g, &sectors, Method::Etdrk4, t_end / 8.0);
        let b = integrate_master_equation(&etd, &st.vector, 8, 8, 1e-8).unwrap();
        let d = (&a.final_state - &b.final_state).norm();
        let moved = (&a.final_state - &st.vector).norm();
        assert!(moved > 0.0 && d < 1e-9, "{d:e} vs {moved:e}");
    }

    #[test]
    fn s_damping_relaxes_to_identity_at_generator_rates() {
        let model = Model::shared();
        let mut r = zero_rates();
        r.sd_binary = 300.0;
        r.total = 300.0;
        let c = CellConditions::default();
        let g = gen(&r, &c, OMEGA_HF_RB87, 0.0);
        let rho0 = crate::generator::SpinTemperatureState::from_polarization(&model.ops, 0.6)
            .unwrap()
            .vector;
        let h = 1e-5;
        let stepper = Stepper::new(&g, &coherence_sectors(&model.ops), Method::Etdrk4, h);
        let tr = integrate_master_equation(&stepper, &rho0, 10_000, 20, 1e-6).unwrap();
        // population block of the S-damping superoperator: its spectrum
        // carries the nuclear slowing
        let pops: Vec<usize> = (0..8).map(|k| k * 8 + k).collect();
        let a = &model.relax.s_damping;
        let sub = CMatrix::from_fn(8, 8, |i, j| a[(pops[i], pops[j])] * 300.0);
        let ev = eigendecompose(&sub).unwrap().values;
        let slowest = ev.iter().map(|z| z.re).filter(|&x| x > 1e-9).fold(f64::INFINITY, f64::min);
        let sz: Vec<f64> = tr.spin.iter().map(|s| s[2]).collect();
        let k = sz.len() - 1;
        let rate = -(sz[k] / sz[k - 50]).ln() / (50.0 * 20.0 * h);
        assert!((rate / slowest - 1.0).abs() < 1e-3, "{rate} vs {slowest}");
        // the remaining distance from identity/8 decays at the slowest rate
        let gap = |v: &CVector| {
            let rho = devectorize(v, 8).unwrap() - CMatrix::identity(8, 8) * re(0.125);
            rho.iter().map(|z| z.norm()).fold(0.0, f64::max)
        };
        let t = *tr.times.last().unwrap();
        let bound = gap(&rho0) * (-slowest * t).exp();
        assert!(gap(&tr.final_state) <= bound * 1.01, "{:e} vs {bound:e}", gap(&tr.final_state));
    }

    #[test]
    fn pumping_against_spin_destruction_reaches_rate_balance() {
        let model = Model::shared();
        let mut r = zero_rates();
        let (pump, sd) = (400.0, 100.0);
        r.pumping = pump;
        r.sd_binary = sd;
        r.total = pump + sd;
        let c = CellConditions {
            pumping_rate: pump,
            ..CellConditions::default()
        };
        let g = gen(&r, &c, OMEGA_HF_RB87, 0.0);
        let rho0 = vectorize(&(CMatrix::identity(8, 8) * re(0.125)));
        let stepper = Stepper::new(&g, &coherence_sectors(&model.ops), Method::Etdrk4, 1e-5);
        let tr = integrate_master_equation(&stepper, &rho0, 20_000, 1000, 1e-6).unwrap();
        let p = 2.0 * tr.spin.last().unwrap()[2];
        let want = equilibrium_polarization(&r, &c).unwrap();
        assert!((p / want - 1.0).abs() < 1e-3, "{p} vs {want}");
    }

    #[test]
    fn stationary_state_is_self_consistent() {
        let c = CellConditions {
            pumping_rate: 2.0 * PI * 200.0,
            ..CellConditions::default()
        };
        let r = assemble_rates(&c, &CollisionParams::default()).unwrap();
        let g = gen(&r, &c, OMEGA_HF_RB87, 0.0);
        let st = stationary_state(&g).unwrap();
        let rhs = g.rhs(0.0, &st.vector);
        assert!(rhs.norm() < 1e-6 * g.exchange_rate, "{}", rhs.norm());
        // F-damping drains ⟨Fz⟩ = qP/2 with the spin-temperature slowing
        // factor q, on top of the electron-spin losses
        let mut p = 0.5;
        for _ in 0..200 {
            let q = (6.0 + 2.0 * p * p) / (1.0 + p * p);
            p = r.pumping / (r.pumping + r.sd_polarized + q * r.f_damping);
        }
        assert!((st.polarization / p - 1.0).abs() < 0.02, "{} vs {p}", st.polarization);
    }

    #[test]
    fn demodulation_recovers_quadratures() {
        let w = 2.0 * PI * 1e3;
        let t: Vec<f64> = (0..320).map(|k| k as f64 * 1e-3 / 32.0).collect();
        let y: Vec<f64> = t.iter().map(|&t| 0.1 + 2.0 * (w * t).cos() - 0.5 * (w * t).sin()).collect();
        let [m, c, s] = demodulate(&t, &y, w).unwrap();
        assert!((m - 0.1).abs() < 1e-12 && (c - 2.0).abs() < 1e-12 && (s + 0.5).abs() < 1e-12);
    }

    #[test]
    fn offset_grid_is_symmetric() {
        let g = offset_grid(1.0, 2.0, 3.0, 5);
        assert_eq!(g, vec![-5.0, -2.0, 1.0, 4.0, 7.0]);
        assert!(offset_grid(0.0, 1.0, 1.0, 0).is_empty());
    }

    #[test]
    fn sparse_operator_matches_dense() {
        let m = Model::shared().sx_commutator().clone();
        let s = SparseOperator::from_dense(&m);
        assert!(s.nnz() < 64 * 64 / 8);
        let v = CVector::from_fn(64, |k, _| Complex64::new(k as f64, 1.0 - k as f64));
        let mut out = CVector::zeros(64);
        s.apply_add(re(1.0), &v, &mut out);
        assert!((out - &m * &v).norm() < 1e-12);
    }
}
