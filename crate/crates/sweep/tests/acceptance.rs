//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rbxe::eigen::eigendecompose;
use rbxe::generator::{
    build_full_generator, build_wda_generator, equilibrium_state, DriveParams, Detuning, Model,
    SpinTemperatureState,
};
use rbxe::liouville::{devectorize, vectorize, CoherenceProjector};
use rbxe::rates::{assemble_rates, CollisionParams};
use rbxe::{CMatrix, CVector};
use rbxe_sweep::analysis::{find_optimum, inverse_fit, light_narrowing_threshold, linear_fit, Mode};
use rbxe_sweep::config::{BoundaryConditions, OracleSettings, SweepSpec};
use rbxe_sweep::run::{centred_grid, oracle_sweep, PointModel};
use rbxe_sweep::scenario::builtin;
use rbxe_sweep::{run_scenario, ResultTable};

type Check = Result<(bool, String), String>;

struct Criterion {
    id: &'static str,
    title: &'static str,
    budget: Duration,
    run: fn() -> Check,
}

fn table(name: &str, edit: impl FnOnce(&mut SweepSpec)) -> Result<ResultTable, String> {
    let mut spec = builtin(name).map_err(|e| e.to_string())?;
    edit(&mut spec);
    run_scenario(&spec, None).map_err(|e| e.to_string())
}

fn col(t: &ResultTable, name: &str) -> Result<Vec<f64>, String> {
    t.column(name).map_err(|e| e.to_string())
}

fn rows_where(t: &ResultTable, column: &str, value: f64) -> Result<Vec<usize>, String> {
    Ok(col(t, column)?
        .iter()
        .enumerate()
        .filter(|(_, v)| **v == value)
        .map(|(i, _)| i)
        .collect())
}

fn golden_matrices() -> Check {
    let model = Model::shared();
    let mut worst = 0.0f64;
    let mut cmp = |a: &CMatrix, b: &CMatrix| worst = worst.max(common::max_deviation(a, b));
    cmp(&model.s_damping_block, &common::s_damping());
    cmp(&model.f_damping_block, &common::f_damping());
    cmp(&model.s_exchange_z_block, &common::s_exchange_z());
    cmp(&model.f_exchange_z_block, &common::f_exchange_z());
    for p in common::SAMPLED_POLARIZATIONS {
        let st = SpinTemperatureState::from_polarization(&model.ops, p).map_err(|e| e.to_string())?;
        cmp(&model.transverse_exchange_block(&st), &common::transverse_exchange(p));
    }
    Ok((worst <= 1e-12, format!("max entry deviation {worst:.1e} (tol 1e-12)")))
}

fn perturbative_regime() -> Check {
    let t = table("fig2c", |_| {})?;
    let idx = rows_where(&t, "pumping_rate_Hz", 1.0)?;
    let (g, low) = (col(&t, "Gamma2_Hz")?, col(&t, "Gamma2_low_Hz")?);
    let worst = idx
        .iter()
        .map(|&i| (g[i] / low[i] - 1.0).abs())
        .fold(0.0, f64::max);
    Ok((
        worst <= 0.05 && idx.len() == 21,
        format!("{} points, max |rel dev| {:.3}% (tol 5%)", idx.len(), 100.0 * worst),
    ))
}

fn high_polarization() -> Check {
    let t = table("fig2c", |_| {})?;
    let idx = rows_where(&t, "pumping_rate_Hz", 1000.0)?;
    let (g, high) = (col(&t, "Gamma2_Hz")?, col(&t, "Gamma2_high_Hz")?);
    let dev: Vec<f64> = idx.iter().map(|&i| (g[i] / high[i] - 1.0).abs()).collect();
    let mid = dev.len() / 2;
    let low_half = &dev[..=mid];
    let high_half = &dev[mid..];
    let worst_low = low_half.iter().copied().fold(0.0, f64::max);
    let growing = high_half.windows(2).all(|w| w[1] > w[0]);
    let low_monotone = low_half.windows(2).all(|w| w[1] >= w[0]);
    Ok((
        worst_low <= 0.10 && growing,
        format!(
            "low-Xe half max |rel dev| {:.2}% (tol 10%); |dev| rises {:.2}% -> {:.2}% over the \
             upper half, monotone: {growing}; monotone over the low half too: {low_monotone}",
            100.0 * worst_low,
            100.0 * high_half[0],
            100.0 * high_half[high_half.len() - 1],
        ),
    ))
}

fn optimal_nitrogen() -> Check {
    let t = table("fig3c", |_| {})?;
    let opt = find_optimum(&t, "Gamma2_Hz", Mode::Min).map_err(|e| e.to_string())?;
    let o = opt[0];
    let n2 = col(&t, "n2_density_per_cm3")?;
    let bi = linear_fit(&n2, &col(&t, "Gamma2_bi_Hz")?);
    let (_, r2_vdw) = inverse_fit(&n2, &col(&t, "Gamma2_vdw_Hz")?);
    Ok((
        o.interior && bi.r_squared > 0.999 && r2_vdw > 0.99,
        format!(
            "minimum {:.2} Hz at {:.0} Torr (interior: {}); R2 bi-linear {:.6}, R2 vdW ~ 1/[N2] {:.4}",
            o.refined_value, o.refined_x, o.interior, bi.r_squared, r2_vdw
        ),
    ))
}

fn light_narrowing() -> Check {
    let mut found = Vec::new();
    for name in ["fig4a", "fig4b"] {
        let t = table(name, |_| {})?;
        let a = light_narrowing_threshold(&t, "Gamma2_Hz").map_err(|e| e.to_string())?;
        found.push((name, a));
    }
    let (a1, a3) = (&found[0].1, &found[1].1);
    let ordered = match (a1.threshold, a3.threshold) {
        (Some(t1), Some(t3)) => t3 > t1,
        _ => false,
    };
    let show = |a: &rbxe_sweep::analysis::ThresholdAnalysis| {
        format!(
            "T_c in ({}, {}] C, clean split: {}",
            a.below.map_or("-".into(), |v| v.to_string()),
            a.threshold.map_or("-".into(), |v| v.to_string()),
            a.clean
        )
    };
    Ok((
        a1.clean && a3.clean && a1.below.is_some() && a3.below.is_some() && ordered,
        format!("Xe 1 Torr: {}; Xe 3 Torr: {}", show(a1), show(a3)),
    ))
}

fn xe_polarization() -> Check {
    let mut worst_all = 0.0f64;
    let mut worst_low = 0.0f64;
    for pumping in [1.0, 1000.0] {
        let t = table("fig2a", |s| s.conditions.pumping_rate_hz = pumping)?;
        let dens = col(&t, "xe_density_per_cm3")?;
        let g = col(&t, "Gamma2_Hz")?;
        let mut groups: Vec<(f64, Vec<f64>)> = Vec::new();
        for (d, v) in dens.iter().zip(&g) {
            match groups.last_mut() {
                Some((k, vs)) if k == d => vs.push(*v),
                _ => groups.push((*d, vec![*v])),
            }
        }
        let max_d = groups.last().map_or(0.0, |g| g.0);
        for (d, vs) in &groups {
            let max = vs.iter().copied().fold(f64::MIN, f64::max);
            let min = vs.iter().copied().fold(f64::MAX, f64::min);
            let mean = vs.iter().sum::<f64>() / vs.len() as f64;
            let var = (max - min) / mean;
            worst_all = worst_all.max(var);
            if *d <= 0.25 * max_d {
                worst_low = worst_low.max(var);
            }
        }
    }
    Ok((
        worst_all <= 0.05 && worst_low <= 0.02,
        format!(
            "max variation {:.2}% (tol 5%), lowest quarter of densities {:.2}% (tol 2%), \
             R_op = 1 and 1000 Hz",
            100.0 * worst_all,
            100.0 * worst_low
        ),
    ))
}

struct OracleRun {
    single: f64,
    two: f64,
    oracle: f64,
    p_model: f64,
    p_stationary: f64,
    linearity: Option<f64>,
}

fn oracle_run(pumping_hz: f64, linearity: bool) -> Result<OracleRun, String> {
    let boundary = BoundaryConditions {
        temperature_c: 110.0,
        n2_pressure_torr: 450.0,
        xe_pressure_torr: 3.0,
        pumping_rate_hz: pumping_hz,
        xe_polarization: 0.0,
        ..BoundaryConditions::default()
    };
    let settings = OracleSettings::default();
    let pm = PointModel::new(boundary, CollisionParams::default()).map_err(|e| e.to_string())?;
    let (_, eig, res) = pm.linewidth().map_err(|e| e.to_string())?;
    let oracle = pm.oracle(&settings, res.two.hwhm).map_err(|e| e.to_string())?;
    let grid = centred_grid(&eig, res.two.hwhm, settings.span, settings.points);
    let out = oracle_sweep(&oracle, &grid, linearity).map_err(|e| e.to_string())?;
    let oracle_width = out.hwhm().ok_or("oracle fit did not converge")?;
    Ok(OracleRun {
        single: res.single,
        two: res.two.hwhm,
        oracle: oracle_width,
        p_model: res.polarization,
        p_stationary: oracle.stationary.polarization,
        linearity: out.linearity,
    })
}

fn oracle_equivalence() -> Check {
    let hz = |w: f64| w / (2.0 * PI);
    let high = oracle_run(1000.0, false)?;
    let high_dev = (high.single / high.oracle - 1.0).abs();
    let high_ok = high.p_model >= 0.5 && high.p_stationary >= 0.5 && high_dev <= 0.05;
    let low = oracle_run(1.0, true)?;
    let closer = (low.two - low.oracle).abs() < (low.single - low.oracle).abs();
    let linear = low.linearity.is_some_and(|l| l < 0.01);
    Ok((
        high_ok && closer && linear,
        format!(
            "high (R_op 1000 Hz, P {:.3} model / {:.3} stationary): oracle {:.1} Hz, single {:.1} Hz, \
             |dev| {:.2}% (tol 5%) [{}]; low (R_op 1 Hz): oracle {:.1}, two {:.1}, single {:.1} Hz, \
             two closer: {closer}; half-Rabi relative width change {:.1e} (tol 1e-2)",
            high.p_model,
            high.p_stationary,
            hz(high.oracle),
            hz(high.single),
            100.0 * high_dev,
            if high_ok { "ok" } else { "fails" },
            hz(low.oracle),
            hz(low.two),
            hz(low.single),
            low.linearity.unwrap_or(f64::NAN),
        ),
    ))
}

fn random_hermitian_state(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let a = CMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    rho / tr
}

fn structural_invariants() -> Check {
    let model = Model::shared();
    let ops = &model.ops;
    let n = ops.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut trace_row = CVector::zeros(n * n);
    for i in 0..n {
        trace_row[i * n + i] = Complex64::new(1.0, 0.0);
    }
    let max_order = CoherenceProjector::max_order(ops);
    let mut projectors: Vec<CoherenceProjector> = (-max_order..=max_order)
        .map(|k| CoherenceProjector::new(ops, k))
        .collect();
    projectors.push(CoherenceProjector::hyperfine(ops));

    let mut failures: Vec<String> = Vec::new();
    let mut worst = [0.0f64; 6];
    let mut accepted = 0;
    let mut drawn = 0;
    while accepted < 100 {
        drawn += 1;
        let b = BoundaryConditions {
            temperature_c: rng.random_range(60.0..150.0),
            n2_pressure_torr: 10f64.powf(rng.random_range(1.3..3.3)),
            xe_pressure_torr: rng.random_range(0.0..5.0),
            pumping_rate_hz: rng.random_range(0.0..5000.0),
            xe_polarization: rng.random_range(-0.5..0.5),
            field_t: 10f64.powf(rng.random_range(-6.0..-4.0)),
            ..BoundaryConditions::default()
        };
        let cond = b.to_cell();
        let params = CollisionParams::default();
        let Ok(rates) = assemble_rates(&cond, &params) else { continue };
        let Ok(state) = equilibrium_state(&ops, &rates, &cond) else { continue };
        accepted += 1;
        let label = format!("T={:.1}C N2={:.0} Xe={:.2} R={:.0}", b.temperature_c, b.n2_pressure_torr, b.xe_pressure_torr, b.pumping_rate_hz);

        // f_s + f_F = 1
        let d = (rates.fraction_short + rates.fraction_long - 1.0).abs();
        worst[0] = worst[0].max(d);
        if d > 1e-12 {
            failures.push(format!("fractions {label}"));
        }

        // (1| is a left null vector of every generator part
        let drive = DriveParams { rabi: 2.0 * PI * rng.random_range(0.0..10.0), frequency: 1e5 };
        let full = build_full_generator(model, &rates, &cond, params.hyperfine, drive);
        let s = [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)];
        for (m, scale) in [
            (&full.linear, full.linear.norm()),
            (&full.drive, full.drive.norm()),
            (&full.exchange_superoperator(s), full.exchange_superoperator(s).norm().max(1.0)),
        ] {
            let leak = (trace_row.transpose() * m).norm() / scale;
            worst[1] = worst[1].max(leak);
            if leak > 1e-12 {
                failures.push(format!("trace {label}: {leak:.1e}"));
            }
        }

        // generator maps Hermitian states to Hermitian derivatives
        let rho = random_hermitian_state(&mut rng, n);
        let t = rng.random_range(0.0..1e-4);
        let dv = full.rhs(t, &vectorize(&rho));
        let dm = devectorize(&dv, n).map_err(|e| e.to_string())?;
        let herm = (&dm - dm.adjoint()).norm() / dm.norm().max(f64::MIN_POSITIVE);
        worst[2] = worst[2].max(herm);
        if herm > 1e-12 {
            failures.push(format!("hermiticity {label}: {herm:.1e}"));
        }

        // coherence projectors: idempotent, orthogonal, complete
        let v = vectorize(&random_hermitian_state(&mut rng, n));
        let parts: Vec<CVector> = projectors.iter().map(|p| p.apply(&v)).collect();
        let mut sum = CVector::zeros(v.len());
        let mut proj_err = 0.0f64;
        for (i, p) in projectors.iter().enumerate() {
            proj_err = proj_err.max((p.apply(&parts[i]) - &parts[i]).norm());
            for (j, q) in projectors.iter().enumerate() {
                if i != j {
                    proj_err = proj_err.max(q.apply(&parts[i]).norm());
                }
            }
            sum += &parts[i];
        }
        proj_err = proj_err.max((sum - &v).norm());
        worst[3] = worst[3].max(proj_err);
        if proj_err > 1e-14 {
            failures.push(format!("projectors {label}"));
        }

        // spectrum at Δ = 0 lies in the closed right half-plane
        let wda = build_wda_generator(model, &rates, &cond, &state, Detuning::uniform(0.0));
        let eig0 = eigendecompose(&wda.matrix).map_err(|e| e.to_string())?;
        let scale = eig0.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let neg = eig0.values.iter().map(|z| -z.re / scale).fold(f64::MIN, f64::max);
        worst[4] = worst[4].max(neg);
        if neg > 1e-12 {
            failures.push(format!("negative decay rate {label}: {neg:.1e}"));
        }

        // a uniform detuning shifts every eigenvalue by iδ
        let delta = rng.random_range(-1e4..1e4);
        let shifted = build_wda_generator(model, &rates, &cond, &state, Detuning::uniform(delta));
        let eig1 = eigendecompose(&shifted.matrix).map_err(|e| e.to_string())?;
        let i_delta = Complex64::new(0.0, delta);
        let shift_err = eig1
            .values
            .iter()
            .map(|z| {
                eig0.values
                    .iter()
                    .map(|w| (z - (w + i_delta)).norm())
                    .fold(f64::MAX, f64::min)
            })
            .fold(0.0, f64::max)
            / scale.max(delta.abs());
        worst[5] = worst[5].max(shift_err);
        if shift_err > 1e-9 {
            failures.push(format!("shift {label}: {shift_err:.1e}"));
        }
    }
    Ok((
        failures.is_empty(),
        format!(
            "{accepted} configurations ({drawn} drawn); worst: fractions {:.0e}, trace row {:.0e}, \
             hermiticity {:.0e}, projectors {:.0e}, -Re(lambda)/|lambda| {:.0e}, shift {:.0e}{}",
            worst[0],
            worst[1],
            worst[2],
            worst[3],
            worst[4],
            worst[5],
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    ))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: "C1", title: "golden matrices", budget: Duration::from_secs(1), run: golden_matrices },
        Criterion { id: "C2", title: "perturbative-regime agreement", budget: Duration::from_secs(10), run: perturbative_regime },
        Criterion { id: "C3", title: "high-polarization agreement", budget: Duration::from_secs(10), run: high_polarization },
        Criterion { id: "C4", title: "optimal N2 pressure", budget: Duration::from_secs(30), run: optimal_nitrogen },
        Criterion { id: "C5", title: "light-narrowing threshold", budget: Duration::from_secs(120), run: light_narrowing },
        Criterion { id: "C6", title: "Xe-polarization insensitivity", budget: Duration::from_secs(30), run: xe_polarization },
        Criterion { id: "C7", title: "oracle equivalence", budget: Duration::from_secs(600), run: oracle_equivalence },
        Criterion { id: "C8", title: "structural invariants", budget: Duration::from_secs(60), run: structural_invariants },
    ];
    // warm the shared model so C1 times only the comparison
    let _ = Model::shared();
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(c.run);
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(Ok((ok, d))) => (ok, d),
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".into()),
        };
        let in_time = elapsed <= c.budget;
        let pass = ok && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "{} {} {}: {} [{:.2} s, budget {} s{}]",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.title,
            detail,
            elapsed.as_secs_f64(),
            c.budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
