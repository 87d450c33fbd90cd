//! Sweep configuration in boundary units (°C, Torr, Hz, T).
//!
//! Precedence, lowest first: built-in defaults, the config file, command-line
//! flags.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rbxe::constants::{celsius_to_kelvin, AMU};
use rbxe::rates::{gas_density, rb_density, CellConditions, CollisionParams};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SweepError};

pub const MAX_AXES: usize = 2;

/// Closest names to `name`, best first.
pub fn suggest<'a>(name: &str, candidates: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut scored: Vec<(f64, &str)> = candidates
        .into_iter()
        .map(|c| (strsim::jaro_winkler(&name.to_lowercase(), &c.to_lowercase()), c))
        .filter(|(s, _)| *s >= 0.75)
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));
    scored.into_iter().take(3).map(|(_, c)| c.to_string()).collect()
}

fn unknown<'a>(name: &str, candidates: impl IntoIterator<Item = &'a str>) -> SweepError {
    SweepError::UnknownParameter {
        name: name.to_string(),
        suggestions: suggest(name, candidates),
    }
}

/// A cell quantity that can be fixed or swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Parameter {
    FillTemperature,
    Temperature,
    N2Pressure,
    XePressure,
    XeDensity,
    PumpingRate,
    XePolarization,
    Field,
    PhotonSpin,
}

impl Parameter {
    pub const ALL: [Parameter; 9] = [
        Parameter::FillTemperature,
        Parameter::Temperature,
        Parameter::N2Pressure,
        Parameter::XePressure,
        Parameter::XeDensity,
        Parameter::PumpingRate,
        Parameter::XePolarization,
        Parameter::Field,
        Parameter::PhotonSpin,
    ];

    /// Config key.
    pub fn name(self) -> &'static str {
        match self {
            Parameter::FillTemperature => "fill_temperature_C",
            Parameter::Temperature => "temperature_C",
            Parameter::N2Pressure => "n2_pressure_Torr",
            Parameter::XePressure => "xe_pressure_Torr",
            Parameter::XeDensity => "xe_density_per_cm3",
            Parameter::PumpingRate => "pumping_rate_Hz",
            Parameter::XePolarization => "xe_polarization",
            Parameter::Field => "field_T",
            Parameter::PhotonSpin => "photon_spin",
        }
    }

    /// Output column holding this quantity.
    pub fn column(self) -> &'static str {
        match self {
            Parameter::XePolarization => "xe_polarization_dimless",
            Parameter::PhotonSpin => "photon_spin_dimless",
            p => p.name(),
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Parameter::ALL
            .into_iter()
            .find(|p| p.name() == name || p.column() == name)
            .ok_or_else(|| unknown(name, Parameter::ALL.iter().map(|p| p.name())))
    }
}

impl Serialize for Parameter {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// Cell conditions in boundary units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryConditions {
    #[serde(rename = "fill_temperature_C")]
    pub fill_temperature_c: f64,
    #[serde(rename = "temperature_C")]
    pub temperature_c: f64,
    #[serde(rename = "n2_pressure_Torr")]
    pub n2_pressure_torr: f64,
    #[serde(rename = "xe_pressure_Torr")]
    pub xe_pressure_torr: f64,
    #[serde(rename = "pumping_rate_Hz")]
    pub pumping_rate_hz: f64,
    pub xe_polarization: f64,
    #[serde(rename = "field_T")]
    pub field_t: f64,
    pub photon_spin: f64,
}

impl Default for BoundaryConditions {
    fn default() -> Self {
        BoundaryConditions {
            fill_temperature_c: 20.0,
            temperature_c: 110.0,
            n2_pressure_torr: 450.0,
            xe_pressure_torr: 3.0,
            pumping_rate_hz: 1.0,
            xe_polarization: 0.0,
            field_t: 1e-5,
            photon_spin: 1.0,
        }
    }
}

impl BoundaryConditions {
    /// Gas density per Torr at the fill temperature, cm⁻³.
    fn density_per_torr(&self) -> f64 {
        gas_density(1.0, celsius_to_kelvin(self.fill_temperature_c))
    }

    pub fn get(&self, p: Parameter) -> f64 {
        match p {
            Parameter::FillTemperature => self.fill_temperature_c,
            Parameter::Temperature => self.temperature_c,
            Parameter::N2Pressure => self.n2_pressure_torr,
            Parameter::XePressure => self.xe_pressure_torr,
            Parameter::XeDensity => self.xe_pressure_torr * self.density_per_torr(),
            Parameter::PumpingRate => self.pumping_rate_hz,
            Parameter::XePolarization => self.xe_polarization,
            Parameter::Field => self.field_t,
            Parameter::PhotonSpin => self.photon_spin,
        }
    }

    pub fn set(&mut self, p: Parameter, v: f64) {
        match p {
            Parameter::FillTemperature => self.fill_temperature_c = v,
            Parameter::Temperature => self.temperature_c = v,
            Parameter::N2Pressure => self.n2_pressure_torr = v,
            Parameter::XePressure => self.xe_pressure_torr = v,
            Parameter::XeDensity => self.xe_pressure_torr = v / self.density_per_torr(),
            Parameter::PumpingRate => self.pumping_rate_hz = v,
            Parameter::XePolarization => self.xe_polarization = v,
            Parameter::Field => self.field_t = v,
            Parameter::PhotonSpin => self.photon_spin = v,
        }
    }

    pub fn n2_density(&self) -> f64 {
        self.n2_pressure_torr * self.density_per_torr()
    }

    pub fn rb_density(&self) -> f64 {
        rb_density(celsius_to_kelvin(self.temperature_c))
    }

    pub fn to_cell(&self) -> CellConditions {
        CellConditions {
            temperature: celsius_to_kelvin(self.temperature_c),
            fill_temperature: celsius_to_kelvin(self.fill_temperature_c),
            n2_pressure: self.n2_pressure_torr,
            xe_pressure: self.xe_pressure_torr,
            pumping_rate: 2.0 * PI * self.pumping_rate_hz,
            xe_polarization: self.xe_polarization,
            field: self.field_t,
            photon_spin: self.photon_spin,
        }
    }

    /// Applies `name = value` pairs; fill temperature goes first so that
    /// densities convert with the final value.
    pub fn apply<'a>(&mut self, pairs: impl IntoIterator<Item = (&'a str, f64)>) -> Result<()> {
        let mut parsed = Vec::new();
        for (k, v) in pairs {
            parsed.push((Parameter::from_name(k)?, v));
        }
        parsed.sort_by_key(|(p, _)| *p);
        for (p, v) in parsed {
            self.set(p, v);
        }
        Ok(())
    }
}

type Setter = fn(&mut CollisionParams, f64);

/// Overridable collision parameters: key, setter.
const COLLISION_KEYS: [(&str, Setter); 13] = [
    ("sd_rb_n2_cm2", |p, v| p.sd_rb_n2 = v),
    ("sd_rb_rb_cm2", |p, v| p.sd_rb_rb = v),
    ("sd_rb_xe_cm2", |p, v| p.sd_rb_xe = v),
    ("se_rb_rb_cm2", |p, v| p.se_rb_rb = v),
    ("se_rb_xe_cm2", |p, v| p.se_rb_xe = v),
    ("formation_coeff_cm6_per_s", |p, v| p.formation_coeff = v),
    ("spin_rotation_Hz", |p, v| p.spin_rotation_hz = v),
    ("coupling_ratio", |p, v| p.coupling_ratio = v),
    ("characteristic_pressure_Torr", |p, v| p.characteristic_pressure = v),
    ("hyperfine_Hz", |p, v| p.hyperfine = 2.0 * PI * v),
    ("mass_rb_amu", |p, v| p.mass_rb = v * AMU),
    ("mass_n2_amu", |p, v| p.mass_n2 = v * AMU),
    ("mass_xe_amu", |p, v| p.mass_xe = v * AMU),
];

pub fn collision_keys() -> impl Iterator<Item = &'static str> {
    COLLISION_KEYS.iter().map(|(k, _)| *k)
}

/// Validates override keys and applies them to the default parameter set.
pub fn collision_params(overrides: &BTreeMap<String, f64>) -> Result<CollisionParams> {
    let mut params = CollisionParams::default();
    for (k, &v) in overrides {
        let (_, set) = COLLISION_KEYS
            .iter()
            .find(|(name, _)| name == k)
            .ok_or_else(|| unknown(k, collision_keys()))?;
        set(&mut params, v);
    }
    params.validate()?;
    Ok(params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Output {
    Rates,
    Linewidth,
    Analytic,
    Lineshape,
    Oracle,
}

impl Output {
    pub const ALL: [Output; 5] = [
        Output::Rates,
        Output::Linewidth,
        Output::Analytic,
        Output::Lineshape,
        Output::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Output::Rates => "rates",
            Output::Linewidth => "linewidth",
            Output::Analytic => "analytic",
            Output::Lineshape => "lineshape",
            Output::Oracle => "oracle",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Output::ALL
            .into_iter()
            .find(|o| o.name() == name)
            .ok_or_else(|| unknown(name, Output::ALL.iter().map(|o| o.name())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "grid", rename_all = "lowercase")]
pub enum Grid {
    Linear { from: f64, to: f64, count: usize },
    Log { from: f64, to: f64, count: usize },
    List { values: Vec<f64> },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        let spaced = |from: f64, to: f64, count: usize, f: &dyn Fn(f64) -> f64| -> Vec<f64> {
            match count {
                0 => Vec::new(),
                1 => vec![from],
                n => (0..n)
                    .map(|k| {
                        if k == 0 {
                            from
                        } else if k == n - 1 {
                            to
                        } else {
                            f(k as f64 / (n - 1) as f64)
                        }
                    })
                    .collect(),
            }
        };
        match self {
            Grid::Linear { from, to, count } => {
                spaced(*from, *to, *count, &|s| from + (to - from) * s)
            }
            Grid::Log { from, to, count } => {
                let (a, b) = (from.ln(), to.ln());
                spaced(*from, *to, *count, &|s| (a + (b - a) * s).exp())
            }
            Grid::List { values } => values.clone(),
        }
    }

    pub fn is_log(&self) -> bool {
        matches!(self, Grid::Log { .. })
    }

    fn validate(&self, name: &str) -> Result<()> {
        let bad = |m: String| Err(SweepError::Config(format!("axis {name}: {m}")));
        match self {
            Grid::Linear { from, to, count } | Grid::Log { from, to, count } => {
                if *count == 0 {
                    return bad("count must be positive".into());
                }
                if !from.is_finite() || !to.is_finite() {
                    return bad("bounds must be finite".into());
                }
                if *count > 1 && from == to {
                    return bad("bounds must differ when count > 1".into());
                }
                if self.is_log() && !(*from > 0.0 && *to > 0.0) {
                    return bad("log grid bounds must be positive".into());
                }
            }
            Grid::List { values } => {
                if values.is_empty() {
                    return bad("value list is empty".into());
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return bad("values must be finite".into());
                }
                let up = values.windows(2).all(|w| w[1] > w[0]);
                let down = values.windows(2).all(|w| w[1] < w[0]);
                if !(up || down) {
                    return bad("values must be strictly monotone".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub parameter: Parameter,
    #[serde(flatten)]
    pub grid: Grid,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        self.grid.values()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LineshapeSettings {
    pub points: usize,
    /// Half-range in units of the narrowest width.
    pub span: f64,
}

impl Default for LineshapeSettings {
    fn default() -> Self {
        LineshapeSettings {
            points: 201,
            span: 10.0,
        }
    }
}

impl LineshapeSettings {
    const KEYS: [&'static str; 2] = ["points", "span"];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSettings {
    /// Drive Rabi frequency Ω_R/2π, also used for lineshape amplitudes.
    #[serde(rename = "rabi_Hz")]
    pub rabi_hz: f64,
    pub points: usize,
    /// Half-range in units of the estimated width.
    pub span: f64,
    pub steps_per_period: usize,
    pub measure_periods: usize,
    /// Settling time in lifetimes of the estimated width.
    pub settle_lifetimes: f64,
    /// Repeat each sweep at half the Rabi frequency.
    pub check_linearity: bool,
}

impl Default for OracleSettings {
    fn default() -> Self {
        OracleSettings {
            rabi_hz: 0.1,
            points: 21,
            span: 10.0,
            steps_per_period: 32,
            measure_periods: 40,
            settle_lifetimes: 10.0,
            check_linearity: false,
        }
    }
}

impl OracleSettings {
    const KEYS: [&'static str; 7] = [
        "rabi_Hz",
        "points",
        "span",
        "steps_per_period",
        "measure_periods",
        "settle_lifetimes",
        "check_linearity",
    ];

    pub fn rabi(&self) -> f64 {
        2.0 * PI * self.rabi_hz
    }
}

const TOP_KEYS: [&str; 8] = [
    "name",
    "description",
    "outputs",
    "conditions",
    "collision",
    "axes",
    "lineshape",
    "oracle",
];
const AXIS_KEYS: [&str; 6] = ["parameter", "grid", "from", "to", "count", "values"];

/// A validated sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub name: String,
    pub description: String,
    pub outputs: Vec<Output>,
    pub conditions: BoundaryConditions,
    pub collision: BTreeMap<String, f64>,
    pub axes: Vec<Axis>,
    pub lineshape: LineshapeSettings,
    pub oracle: OracleSettings,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            name: "custom".into(),
            description: String::new(),
            outputs: vec![Output::Linewidth],
            conditions: BoundaryConditions::default(),
            collision: BTreeMap::new(),
            axes: Vec::new(),
            lineshape: LineshapeSettings::default(),
            oracle: OracleSettings::default(),
        }
    }
}

fn check_keys(table: &toml::Table, allowed: &[&str], prefix: &str) -> Result<()> {
    for k in table.keys() {
        if !allowed.contains(&k.as_str()) {
            let mut e = unknown(k, allowed.iter().copied());
            if let SweepError::UnknownParameter { name, .. } = &mut e {
                *name = format!("{prefix}{k}");
            }
            return Err(e);
        }
    }
    Ok(())
}

fn number(v: &toml::Value, key: &str) -> Result<f64> {
    match v {
        toml::Value::Float(x) => Ok(*x),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(SweepError::Config(format!("{key} must be a number"))),
    }
}

fn numbers(table: Option<&toml::Value>, section: &str) -> Result<BTreeMap<String, f64>> {
    let Some(v) = table else {
        return Ok(BTreeMap::new());
    };
    let t = v
        .as_table()
        .ok_or_else(|| SweepError::Config(format!("[{section}] must be a table")))?;
    t.iter()
        .map(|(k, v)| Ok((k.clone(), number(v, &format!("{section}.{k}"))?)))
        .collect()
}

fn parse_axis(v: &toml::Value, idx: usize) -> Result<Axis> {
    let t = v
        .as_table()
        .ok_or_else(|| SweepError::Config(format!("axes[{idx}] must be a table")))?;
    check_keys(t, &AXIS_KEYS, &format!("axes[{idx}]."))?;
    let parameter = t
        .get("parameter")
        .and_then(|p| p.as_str())
        .ok_or_else(|| SweepError::Config(format!("axes[{idx}].parameter must be a string")))?;
    let parameter = Parameter::from_name(parameter)?;
    let kind = match t.get("grid") {
        None => "linear",
        Some(g) => g
            .as_str()
            .ok_or_else(|| SweepError::Config(format!("axes[{idx}].grid must be a string")))?,
    };
    let field = |k: &str| -> Result<f64> {
        t.get(k)
            .ok_or_else(|| SweepError::Config(format!("axes[{idx}].{k} is required")))
            .and_then(|v| number(v, k))
    };
    let count = || -> Result<usize> {
        t.get("count")
            .and_then(|c| c.as_integer())
            .and_then(|c| usize::try_from(c).ok())
            .ok_or_else(|| {
                SweepError::Config(format!("axes[{idx}].count must be a non-negative integer"))
            })
    };
    let grid = match kind {
        "linear" => Grid::Linear {
            from: field("from")?,
            to: field("to")?,
            count: count()?,
        },
        "log" => Grid::Log {
            from: field("from")?,
            to: field("to")?,
            count: count()?,
        },
        "list" => {
            let arr = t.get("values").and_then(|v| v.as_array()).ok_or_else(|| {
                SweepError::Config(format!("axes[{idx}].values must be an array"))
            })?;
            let values = arr
                .iter()
                .map(|v| number(v, "values"))
                .collect::<Result<Vec<_>>>()?;
            Grid::List { values }
        }
        other => return Err(unknown(other, ["linear", "log", "list"])),
    };
    grid.validate(parameter.name())?;
    Ok(Axis { parameter, grid })
}

impl SweepSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let root: toml::Table = toml::from_str(text)?;
        check_keys(&root, &TOP_KEYS, "")?;
        let mut spec = SweepSpec::default();
        if let Some(v) = root.get("name") {
            spec.name = v
                .as_str()
                .ok_or_else(|| SweepError::Config("name must be a string".into()))?
                .to_string();
        }
        if let Some(v) = root.get("description") {
            spec.description = v
                .as_str()
                .ok_or_else(|| SweepError::Config("description must be a string".into()))?
                .to_string();
        }
        if let Some(v) = root.get("outputs") {
            let arr = v
                .as_array()
                .ok_or_else(|| SweepError::Config("outputs must be an array".into()))?;
            spec.outputs = arr
                .iter()
                .map(|o| {
                    o.as_str()
                        .ok_or_else(|| SweepError::Config("outputs must be strings".into()))
                        .and_then(Output::from_name)
                })
                .collect::<Result<Vec<_>>>()?;
        }
        let conditions = numbers(root.get("conditions"), "conditions")?;
        spec.conditions
            .apply(conditions.iter().map(|(k, v)| (k.as_str(), *v)))?;
        spec.collision = numbers(root.get("collision"), "collision")?;
        if let Some(v) = root.get("axes") {
            let arr = v
                .as_array()
                .ok_or_else(|| SweepError::Config("axes must be an array of tables".into()))?;
            spec.axes = arr
                .iter()
                .enumerate()
                .map(|(i, a)| parse_axis(a, i))
                .collect::<Result<Vec<_>>>()?;
        }
        if let Some(v) = root.get("lineshape") {
            if let Some(t) = v.as_table() {
                check_keys(t, &LineshapeSettings::KEYS, "lineshape.")?;
            }
            spec.lineshape = v.clone().try_into()?;
        }
        if let Some(v) = root.get("oracle") {
            if let Some(t) = v.as_table() {
                check_keys(t, &OracleSettings::KEYS, "oracle.")?;
            }
            spec.oracle = v.clone().try_into()?;
        }
        spec.normalize();
        spec.validate()?;
        Ok(spec)
    }

    pub fn normalize(&mut self) {
        self.outputs.sort();
        self.outputs.dedup();
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.len() > MAX_AXES {
            return Err(SweepError::Config(format!(
                "at most {MAX_AXES} swept axes, got {}",
                self.axes.len()
            )));
        }
        for a in &self.axes {
            a.grid.validate(a.parameter.name())?;
        }
        let xe = |p: Parameter| matches!(p, Parameter::XePressure | Parameter::XeDensity);
        for (i, a) in self.axes.iter().enumerate() {
            for b in &self.axes[i + 1..] {
                if a.parameter == b.parameter || (xe(a.parameter) && xe(b.parameter)) {
                    return Err(SweepError::Config(format!(
                        "axes {} and {} set the same quantity",
                        a.parameter.name(),
                        b.parameter.name()
                    )));
                }
            }
        }
        if self.outputs.is_empty() {
            return Err(SweepError::Config("no outputs requested".into()));
        }
        let ls = &self.lineshape;
        if ls.points == 0 || !(ls.span > 0.0) {
            return Err(SweepError::Config(
                "lineshape needs points > 0 and span > 0".into(),
            ));
        }
        let o = &self.oracle;
        if !(o.rabi_hz > 0.0 && o.rabi_hz.is_finite()) {
            return Err(SweepError::Config(format!("oracle.rabi_Hz {}", o.rabi_hz)));
        }
        if o.points < 4 || !(o.span > 0.0) || !(o.settle_lifetimes >= 0.0) {
            return Err(SweepError::Config(
                "oracle needs points ≥ 4, span > 0, settle_lifetimes ≥ 0".into(),
            ));
        }
        collision_params(&self.collision)?;
        Ok(())
    }

    pub fn has(&self, o: Output) -> bool {
        self.outputs.contains(&o)
    }

    pub fn collision_params(&self) -> Result<CollisionParams> {
        collision_params(&self.collision)
    }

    /// Canonical text form; equal specs give equal text.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    /// SHA-256 of the canonical form, hex.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Grid points, outer axis slowest.
    pub fn grid(&self) -> Vec<Vec<f64>> {
        let mut points = vec![Vec::new()];
        for axis in &self.axes {
            let values = axis.values();
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        points
    }

    /// Conditions at one grid point.
    pub fn conditions_at(&self, point: &[f64]) -> BoundaryConditions {
        let mut c = self.conditions;
        let mut pairs: Vec<(Parameter, f64)> = self
            .axes
            .iter()
            .zip(point)
            .map(|(a, &v)| (a.parameter, v))
            .collect();
        pairs.sort_by_key(|(p, _)| *p);
        for (p, v) in pairs {
            c.set(p, v);
        }
        c
    }
}
