//! Post-processing of result tables: optima, light-narrowing onset, fits.

use crate::error::{Result, SweepError};
use crate::table::ResultTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Min,
    Max,
}

impl std::str::FromStr for Mode {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(Mode::Min),
            "max" => Ok(Mode::Max),
            other => Err(SweepError::UnknownParameter {
                name: other.to_string(),
                suggestions: crate::config::suggest(other, ["min", "max"]),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    /// Value of the outer axis for two-axis sweeps.
    pub group: Option<f64>,
    pub index: usize,
    pub x: f64,
    pub value: f64,
    /// Vertex of the parabola through the optimum and its neighbours.
    pub refined_x: f64,
    pub refined_value: f64,
    /// False when the grid optimum sits on a boundary.
    pub interior: bool,
}

/// Vertex of the parabola through three points.
pub fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> Option<(f64, f64)> {
    let [x0, x1, x2] = x;
    let [y0, y1, y2] = y;
    let denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
    if denom == 0.0 {
        return None;
    }
    let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
    let b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
    let c = (x1 * x2 * (x1 - x2) * y0 + x2 * x0 * (x2 - x0) * y1 + x0 * x1 * (x0 - x1) * y2)
        / denom;
    if a == 0.0 {
        return None;
    }
    let xv = -b / (2.0 * a);
    Some((xv, c - b * b / (4.0 * a)))
}

/// Grid optimum of `y` over `x` with parabolic refinement, done in ln x
/// when `log` is set.
pub fn optimum_1d(x: &[f64], y: &[f64], mode: Mode, log: bool) -> Result<Optimum> {
    if x.is_empty() || x.len() != y.len() {
        return Err(SweepError::Config("optimum needs a non-empty scan".into()));
    }
    let better = |a: f64, b: f64| match mode {
        Mode::Min => a < b,
        Mode::Max => a > b,
    };
    let mut k = 0;
    for i in 1..y.len() {
        if y[i].is_nan() {
            continue;
        }
        if y[k].is_nan() || better(y[i], y[k]) {
            k = i;
        }
    }
    if y[k].is_nan() {
        return Err(SweepError::Config("objective is NaN over the whole scan".into()));
    }
    let interior = k > 0 && k + 1 < y.len();
    let (mut refined_x, mut refined_value) = (x[k], y[k]);
    if interior {
        let t = |v: f64| if log { v.ln() } else { v };
        if let Some((xv, yv)) =
            parabola_vertex([t(x[k - 1]), t(x[k]), t(x[k + 1])], [y[k - 1], y[k], y[k + 1]])
        {
            let (lo, hi) = (t(x[k - 1]).min(t(x[k + 1])), t(x[k - 1]).max(t(x[k + 1])));
            if xv >= lo && xv <= hi {
                refined_x = if log { xv.exp() } else { xv };
                refined_value = yv;
            }
        }
    }
    Ok(Optimum {
        group: None,
        index: k,
        x: x[k],
        value: y[k],
        refined_x,
        refined_value,
        interior,
    })
}

/// Rows of `table` split by the outer axis, with the inner axis as abscissa.
fn scans(table: &ResultTable, objective: &str) -> Result<Vec<(Option<f64>, Vec<f64>, Vec<f64>)>> {
    let y = table.column(objective)?;
    match table.axes.as_slice() {
        [] => Err(SweepError::Config(
            "optimum needs at least one swept axis".into(),
        )),
        [inner] => Ok(vec![(None, table.column(&inner.column)?, y)]),
        [outer, inner] => {
            let g = table.column(&outer.column)?;
            let x = table.column(&inner.column)?;
            let mut out: Vec<(Option<f64>, Vec<f64>, Vec<f64>)> = Vec::new();
            for i in 0..g.len() {
                match out.last_mut() {
                    Some((Some(v), xs, ys)) if *v == g[i] => {
                        xs.push(x[i]);
                        ys.push(y[i]);
                    }
                    _ => out.push((Some(g[i]), vec![x[i]], vec![y[i]])),
                }
            }
            Ok(out)
        }
        _ => Err(SweepError::Config("at most two axes".into())),
    }
}

fn check_scan(x: &[f64]) -> Result<()> {
    let up = x.windows(2).all(|w| w[1] > w[0]);
    let down = x.windows(2).all(|w| w[1] < w[0]);
    if up || down {
        Ok(())
    } else {
        Err(SweepError::Config(
            "one row per grid point is required (lineshape tables are not supported)".into(),
        ))
    }
}

/// Optimum along the inner axis, one per outer-axis value.
pub fn find_optimum(table: &ResultTable, objective: &str, mode: Mode) -> Result<Vec<Optimum>> {
    let log = table.axes.last().is_some_and(|a| a.log);
    scans(table, objective)?
        .into_iter()
        .map(|(g, x, y)| {
            check_scan(&x)?;
            let mut o = optimum_1d(&x, &y, mode, log)?;
            o.group = g;
            Ok(o)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// Non-decreasing over the whole scan.
    Increasing,
    /// Rises to a local maximum, then falls.
    InteriorMaximum,
    Other,
}

/// Shape of a scan ordered by increasing abscissa.
pub fn classify(y: &[f64]) -> Profile {
    let tol = |a: f64, b: f64| 1e-12 * a.abs().max(b.abs());
    if y.windows(2).all(|w| w[1] >= w[0] - tol(w[0], w[1])) {
        return Profile::Increasing;
    }
    let peak = (1..y.len().saturating_sub(1))
        .find(|&k| y[k] > y[k - 1] + tol(y[k], y[k - 1]) && y[k] > y[k + 1] + tol(y[k], y[k + 1]));
    match peak {
        Some(_) => Profile::InteriorMaximum,
        None => Profile::Other,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdAnalysis {
    /// (outer-axis value, profile of the inner scan), ascending.
    pub profiles: Vec<(f64, Profile)>,
    /// Smallest outer value whose scan has an interior maximum.
    pub threshold: Option<f64>,
    /// Largest outer value below the threshold.
    pub below: Option<f64>,
    /// Every scan below the threshold increases and every one above peaks.
    pub clean: bool,
}

/// Light-narrowing onset from a (temperature × pumping) table.
pub fn light_narrowing_threshold(table: &ResultTable, objective: &str) -> Result<ThresholdAnalysis> {
    if table.axes.len() != 2 {
        return Err(SweepError::Config(
            "threshold analysis needs an outer and an inner axis".into(),
        ));
    }
    let mut profiles: Vec<(f64, Profile)> = scans(table, objective)?
        .into_iter()
        .map(|(g, mut x, mut y)| {
            check_scan(&x)?;
            if x.first() > x.last() {
                x.reverse();
                y.reverse();
            }
            Ok((g.unwrap_or(f64::NAN), classify(&y)))
        })
        .collect::<Result<_>>()?;
    profiles.sort_by(|a, b| a.0.total_cmp(&b.0));
    let first = profiles.iter().position(|(_, p)| *p == Profile::InteriorMaximum);
    let threshold = first.map(|i| profiles[i].0);
    let below = match first {
        Some(0) | None => None,
        Some(i) => Some(profiles[i - 1].0),
    };
    let split = first.unwrap_or(profiles.len());
    let clean = profiles[..split].iter().all(|(_, p)| *p == Profile::Increasing)
        && profiles[split..].iter().all(|(_, p)| *p == Profile::InteriorMaximum);
    Ok(ThresholdAnalysis {
        profiles,
        threshold,
        below,
        clean,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares y = a x + b.
pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let pred: Vec<f64> = x.iter().map(|a| slope * a + intercept).collect();
    LinearFit {
        slope,
        intercept,
        r_squared: r_squared(y, &pred),
    }
}

/// Least squares y = c / x; returns (c, R²).
pub fn inverse_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let num: f64 = x.iter().zip(y).map(|(a, b)| b / a).sum();
    let den: f64 = x.iter().map(|a| 1.0 / (a * a)).sum();
    let c = num / den;
    let pred: Vec<f64> = x.iter().map(|a| c / a).collect();
    (c, r_squared(y, &pred))
}

pub fn r_squared(y: &[f64], pred: &[f64]) -> f64 {
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let ss_res: f64 = y.iter().zip(pred).map(|(a, b)| (a - b).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|a| (a - my).powi(2)).sum();
    1.0 - ss_res / ss_tot
}
