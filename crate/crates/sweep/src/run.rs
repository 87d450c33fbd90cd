//! Evaluates a sweep over its grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use rbxe::eigen::{eigendecompose, Eigensystem};
use rbxe::generator::{
    build_wda_generator, equilibrium_state, zeeman_frequencies, Detuning, GeneratorWda, Model,
};
use rbxe::linewidth::{analytic_high, analytic_low, analyze_with, spectrum_value, LinewidthResult};
use rbxe::oracle::{fit_points, offset_grid, IntegrationSpec, Oracle, OraclePoint, OracleResult};
use rbxe::rates::{assemble_rates, CellConditions, CollisionParams, RateSet};

use crate::config::{BoundaryConditions, OracleSettings, Output, Parameter, SweepSpec};
use crate::error::{Result, SweepError};
use crate::table::{AxisColumn, ResultTable};

fn hz(w: f64) -> f64 {
    w / (2.0 * PI)
}

const CONDITION_COLUMNS: [&str; 9] = [
    "temperature_C",
    "n2_pressure_Torr",
    "xe_pressure_Torr",
    "xe_density_per_cm3",
    "n2_density_per_cm3",
    "rb_density_per_cm3",
    "pumping_rate_Hz",
    "xe_polarization_dimless",
    "field_T",
];

const LINEWIDTH_COLUMNS: [&str; 6] = [
    "Gamma2_Hz",
    "Gamma2_two_Hz",
    "resonance_offset_Hz",
    "partner_width_Hz",
    "polarization_dimless",
    "eigen_condition_dimless",
];

const ANALYTIC_COLUMNS: [&str; 6] = [
    "Gamma2_low_Hz",
    "Gamma2_base_Hz",
    "Gamma2_bi_Hz",
    "Gamma2_vdw_Hz",
    "Gamma2_high_Hz",
    "pumping_optimal_high_Hz",
];

const ORACLE_COLUMNS: [&str; 6] = [
    "Gamma2_oracle_Hz",
    "oracle_center_Hz",
    "oracle_residual_dimless",
    "oracle_lorentzian_flag",
    "oracle_linearity_dimless",
    "oracle_polarization_dimless",
];

const LINESHAPE_COLUMNS: [&str; 9] = [
    "detuning_Hz",
    "signal_re_dimless",
    "signal_im_dimless",
    "single_re_dimless",
    "single_im_dimless",
    "partner_re_dimless",
    "partner_im_dimless",
    "two_re_dimless",
    "two_im_dimless",
];

const LINESHAPE_ORACLE_COLUMNS: [&str; 2] = ["oracle_re_dimless", "oracle_im_dimless"];

/// Column name of a rate field, with its unit.
pub fn rate_column(field: &str) -> String {
    match field {
        "fraction_short" | "fraction_long" => format!("{field}_dimless"),
        "phase_alpha" | "phase_gamma" => format!("{field}_rad"),
        "lifetime" => "lifetime_s".into(),
        "formation_rate" => "formation_rate_per_s".into(),
        _ => format!("rate_{field}_Hz"),
    }
}

fn rate_value(field: &str, v: f64) -> f64 {
    match field {
        "fraction_short" | "fraction_long" | "phase_alpha" | "phase_gamma" | "lifetime"
        | "formation_rate" => v,
        _ => hz(v),
    }
}

/// Output columns of `spec`, in order.
pub fn columns(spec: &SweepSpec) -> Vec<String> {
    let mut cols: Vec<String> = CONDITION_COLUMNS.iter().map(|s| s.to_string()).collect();
    if spec.has(Output::Rates) {
        let names = RateSet::default().fields().map(|(n, _)| rate_column(n));
        cols.extend(names);
    }
    let sets: [(Output, &[&str]); 3] = [
        (Output::Linewidth, &LINEWIDTH_COLUMNS),
        (Output::Analytic, &ANALYTIC_COLUMNS),
        (Output::Oracle, &ORACLE_COLUMNS),
    ];
    for (o, names) in sets {
        if spec.has(o) {
            cols.extend(names.iter().map(|s| s.to_string()));
        }
    }
    if spec.has(Output::Lineshape) {
        cols.extend(LINESHAPE_COLUMNS.iter().map(|s| s.to_string()));
        if spec.has(Output::Oracle) {
            cols.extend(LINESHAPE_ORACLE_COLUMNS.iter().map(|s| s.to_string()));
        }
    }
    cols
}

/// Everything computed at one cell state.
pub struct PointModel {
    pub boundary: BoundaryConditions,
    pub cond: CellConditions,
    pub params: CollisionParams,
    pub rates: RateSet,
}

impl PointModel {
    pub fn new(boundary: BoundaryConditions, params: CollisionParams) -> Result<Self> {
        let cond = boundary.to_cell();
        let rates = assemble_rates(&cond, &params)?;
        Ok(PointModel {
            boundary,
            cond,
            params,
            rates,
        })
    }

    /// WDA generator with the upper multiplet on resonance.
    pub fn generator(&self) -> Result<GeneratorWda> {
        let model = Model::shared();
        let state = equilibrium_state(&model.ops, &self.rates, &self.cond)?;
        let zeeman = zeeman_frequencies(&model.ops, &self.cond, self.params.hyperfine);
        Ok(build_wda_generator(
            model,
            &self.rates,
            &self.cond,
            &state,
            Detuning::relative(zeeman),
        ))
    }

    pub fn linewidth(&self) -> Result<(GeneratorWda, Eigensystem, LinewidthResult)> {
        let gen = self.generator()?;
        let eig = eigendecompose(&gen.matrix)?;
        let res = analyze_with(&gen, &eig);
        Ok((gen, eig, res))
    }

    pub fn oracle(&self, settings: &OracleSettings, width: f64) -> Result<Oracle> {
        let spec = IntegrationSpec {
            steps_per_period: settings.steps_per_period,
            measure_periods: settings.measure_periods,
            settle_time: settings.settle_lifetimes / width,
            ..IntegrationSpec::default()
        };
        Ok(Oracle::new(
            Model::shared(),
            &self.rates,
            &self.cond,
            self.params.hyperfine,
            settings.rabi(),
            spec,
        )?)
    }
}

/// Oracle points over `offsets`, evaluated in parallel and kept in order.
pub fn oracle_points(oracle: &Oracle, offsets: &[f64]) -> Result<Vec<OraclePoint>> {
    Ok(offsets
        .par_iter()
        .map(|&d| oracle.point(d))
        .collect::<rbxe::Result<Vec<_>>>()?)
}

/// Sweep, fit and optional half-Rabi repeat.
pub fn oracle_sweep(oracle: &Oracle, offsets: &[f64], linearity: bool) -> Result<OracleResult> {
    let mut result = fit_points(oracle_points(oracle, offsets)?);
    if linearity {
        let half = fit_points(oracle_points(&oracle.with_rabi(oracle.rabi() / 2.0), offsets)?);
        result.linearity = match (result.hwhm(), half.hwhm()) {
            (Some(a), Some(b)) => Some((b / a - 1.0).abs()),
            _ => None,
        };
    }
    Ok(result)
}

/// Offsets centred on the narrowest resonance.
pub fn centred_grid(eig: &Eigensystem, width: f64, span: f64, n: usize) -> Vec<f64> {
    offset_grid(-eig.values[0].im, width, span, n)
}

fn condition_values(b: &BoundaryConditions) -> [f64; 9] {
    [
        b.temperature_c,
        b.n2_pressure_torr,
        b.xe_pressure_torr,
        b.get(Parameter::XeDensity),
        b.n2_density(),
        b.rb_density(),
        b.pumping_rate_hz,
        b.xe_polarization,
        b.field_t,
    ]
}

fn oracle_summary(o: &OracleResult, oracle: &Oracle) -> [f64; 6] {
    let nan = f64::NAN;
    let fit = o.fit.filter(|f| f.converged);
    [
        o.hwhm().map_or(nan, hz),
        fit.map_or(nan, |f| hz(f.center)),
        o.fit.map_or(nan, |f| f.relative_residual),
        if o.lorentzian { 1.0 } else { 0.0 },
        o.linearity.unwrap_or(nan),
        oracle.stationary.polarization,
    ]
}

/// Rows produced at one grid point.
pub fn evaluate_point(
    spec: &SweepSpec,
    params: &CollisionParams,
    boundary: BoundaryConditions,
) -> Result<Vec<Vec<f64>>> {
    let pm = PointModel::new(boundary, *params)?;
    let mut base: Vec<f64> = condition_values(&boundary).to_vec();
    if spec.has(Output::Rates) {
        base.extend(pm.rates.fields().map(|(n, v)| rate_value(n, v)));
    }
    let needs_generator =
        spec.has(Output::Linewidth) || spec.has(Output::Lineshape) || spec.has(Output::Oracle);
    let lw = if needs_generator {
        Some(pm.linewidth()?)
    } else {
        None
    };
    if let (true, Some((_, eig, res))) = (spec.has(Output::Linewidth), &lw) {
        base.extend([
            hz(res.single),
            hz(res.two.hwhm),
            hz(-eig.values[0].im),
            hz(eig.values[res.two.partner].re),
            res.polarization,
            res.condition,
        ]);
    }
    if spec.has(Output::Analytic) {
        let low = analytic_low(&pm.rates);
        let high = analytic_high(&pm.rates).map_or(f64::NAN, hz);
        base.extend([
            hz(low.total),
            hz(low.base),
            hz(low.buffer),
            hz(low.vdw),
            high,
            hz(rbxe::linewidth::optimal_pumping_high(&pm.rates)),
        ]);
    }

    let Some((_, eig, res)) = lw else {
        return Ok(vec![base]);
    };
    let width = res.two.hwhm;
    let grid = if spec.has(Output::Lineshape) {
        centred_grid(&eig, width, spec.lineshape.span, spec.lineshape.points)
    } else {
        centred_grid(&eig, width, spec.oracle.span, spec.oracle.points)
    };
    let oracle_run = if spec.has(Output::Oracle) {
        let oracle = pm.oracle(&spec.oracle, width)?;
        let result = oracle_sweep(&oracle, &grid, spec.oracle.check_linearity)?;
        base.extend(oracle_summary(&result, &oracle));
        Some(result)
    } else {
        None
    };
    if !spec.has(Output::Lineshape) {
        return Ok(vec![base]);
    }

    let rabi = spec.oracle.rabi();
    let all: Vec<usize> = (0..eig.len()).collect();
    let partner = res.two.partner;
    let rows = grid
        .iter()
        .enumerate()
        .map(|(k, &d)| {
            let at = |terms: &[usize]| spectrum_value(&eig.values, &res.weights, terms, rabi, d);
            let parts: [Complex64; 4] = [at(&all), at(&[0]), at(&[partner]), at(&[0, partner])];
            let mut row = base.clone();
            row.push(hz(d));
            for z in parts {
                row.extend([z.re, z.im]);
            }
            if let Some(o) = &oracle_run {
                row.extend([o.points[k].amplitude.re, o.points[k].amplitude.im]);
            }
            row
        })
        .collect();
    Ok(rows)
}

/// Rayon pool of `jobs` workers, or the default size.
pub fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            return Err(SweepError::Config("--jobs must be at least 1".into()));
        }
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| SweepError::Config(format!("thread pool: {e}")))
}

/// Evaluates every grid point, rows in grid order.
pub fn run_scenario(spec: &SweepSpec, jobs: Option<usize>) -> Result<ResultTable> {
    spec.validate()?;
    let params = spec.collision_params()?;
    let points = spec.grid();
    let per_point: Vec<Vec<Vec<f64>>> = pool(jobs)?.install(|| {
        points
            .par_iter()
            .map(|p| evaluate_point(spec, &params, spec.conditions_at(p)))
            .collect::<Result<Vec<_>>>()
    })?;
    let columns = columns(spec);
    let rows: Vec<Vec<f64>> = per_point.into_iter().flatten().collect();
    debug_assert!(rows.iter().all(|r| r.len() == columns.len()));
    Ok(ResultTable {
        scenario: spec.name.clone(),
        config_hash: spec.hash(),
        timestamp: None,
        axes: spec
            .axes
            .iter()
            .map(|a| AxisColumn {
                column: a.parameter.column().to_string(),
                log: a.grid.is_log(),
            })
            .collect(),
        columns,
        rows,
    })
}

/// Per-offset oracle table for one cell.
pub fn oracle_table(spec: &SweepSpec) -> Result<ResultTable> {
    spec.validate()?;
    let params = spec.collision_params()?;
    let pm = PointModel::new(spec.conditions, params)?;
    let (_, eig, res) = pm.linewidth()?;
    let width = res.two.hwhm;
    let oracle = pm.oracle(&spec.oracle, width)?;
    let grid = centred_grid(&eig, width, spec.oracle.span, spec.oracle.points);
    let result = oracle_sweep(&oracle, &grid, spec.oracle.check_linearity)?;
    let summary = oracle_summary(&result, &oracle);
    let mut columns: Vec<String> = [
        "omega_Hz",
        "offset_Hz",
        "amp_in_phase_dimless",
        "amp_quadrature_dimless",
        "amp_mean_dimless",
        "fit_re_dimless",
        "fit_im_dimless",
        "trace_error_dimless",
        "Gamma2_Hz",
        "Gamma2_two_Hz",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    columns.extend(ORACLE_COLUMNS.iter().map(|s| s.to_string()));
    let rows = result
        .points
        .iter()
        .map(|p| {
            let fit = result.fit.map_or(Complex64::new(f64::NAN, f64::NAN), |f| f.eval(p.offset));
            let mut row = vec![
                hz(p.frequency),
                hz(p.offset),
                p.in_phase,
                p.quadrature,
                p.mean,
                fit.re,
                fit.im,
                p.worst_trace_error,
                hz(res.single),
                hz(res.two.hwhm),
            ];
            row.extend(summary);
            row
        })
        .collect();
    Ok(ResultTable {
        scenario: format!("{}-oracle", spec.name),
        config_hash: spec.hash(),
        timestamp: None,
        axes: vec![AxisColumn {
            column: "offset_Hz".into(),
            log: false,
        }],
        columns,
        rows,
    })
}
