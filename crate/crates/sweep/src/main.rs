use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rbxe_sweep::analysis::{find_optimum, light_narrowing_threshold, Mode, Profile};
use rbxe_sweep::config::{collision_keys, Output, Parameter, SweepSpec};
use rbxe_sweep::run::{oracle_table, run_scenario};
use rbxe_sweep::table::{AxisColumn, ResultTable};
use rbxe_sweep::{emit_csv, scenario, write_csv, Result, SweepError};

#[derive(Parser)]
#[command(name = "rbxe", version, about = "Rb magnetic-resonance linewidth in Rb/Xe/N2 cells")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Args)]
struct Common {
    /// TOML config; flags given here override it.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write the wall-clock time into the header.
    #[arg(long)]
    timestamp: bool,
    /// Override a condition or collision parameter, e.g. temperature_C=100.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long = "temperature-c")]
    temperature_c: Option<f64>,
    #[arg(long = "n2-torr")]
    n2_torr: Option<f64>,
    #[arg(long = "xe-torr")]
    xe_torr: Option<f64>,
    #[arg(long = "pumping-hz")]
    pumping_hz: Option<f64>,
    /// Xe polarization ⟨Kz⟩.
    #[arg(long)]
    kz: Option<f64>,
    #[arg(long = "field-t")]
    field_t: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Collision rates at one cell state.
    Rates(Common),
    /// Eigenvalue linewidths and closed-form limits at one cell state.
    Linewidth(Common),
    /// Multi-term lineshape around the narrowest resonance.
    Lineshape(Common),
    /// Time-domain master-equation sweep at one cell state.
    Oracle(Common),
    /// Runs a built-in scenario or a config file.
    Sweep {
        scenario: String,
        #[command(flatten)]
        common: Common,
    },
    /// Optimum of a column along the inner axis of a sweep.
    Optimum {
        scenario: String,
        #[arg(long, default_value = "Gamma2_Hz")]
        objective: String,
        #[arg(long, default_value = "min")]
        mode: String,
        #[command(flatten)]
        common: Common,
    },
    /// Light-narrowing onset from a temperature by pumping-rate sweep.
    Threshold {
        scenario: String,
        #[arg(long, default_value = "Gamma2_Hz")]
        objective: String,
        #[command(flatten)]
        common: Common,
    },
    /// Lists built-in scenarios.
    Scenarios,
}

impl Common {
    fn apply(&self, spec: &mut SweepSpec) -> Result<()> {
        let flags = [
            (Parameter::Temperature, self.temperature_c),
            (Parameter::N2Pressure, self.n2_torr),
            (Parameter::XePressure, self.xe_torr),
            (Parameter::PumpingRate, self.pumping_hz),
            (Parameter::XePolarization, self.kz),
            (Parameter::Field, self.field_t),
        ];
        let mut conditions = Vec::new();
        for s in &self.set {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| SweepError::Config(format!("--set expects KEY=VALUE, got {s}")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| SweepError::Config(format!("--set {k}: not a number")))?;
            let k = k.trim();
            if collision_keys().any(|c| c == k) {
                spec.collision.insert(k.to_string(), v);
            } else {
                conditions.push((k.to_string(), v));
            }
        }
        spec.conditions
            .apply(conditions.iter().map(|(k, v)| (k.as_str(), *v)))?;
        for (p, v) in flags {
            if let Some(v) = v {
                spec.conditions.set(p, v);
            }
        }
        spec.validate()
    }

    fn base(&self) -> Result<SweepSpec> {
        match &self.config {
            Some(p) => scenario::load_file(p),
            None => Ok(SweepSpec::default()),
        }
    }

    fn single_point(&self, name: &str, outputs: &[Output]) -> Result<SweepSpec> {
        let mut spec = self.base()?;
        spec.name = name.into();
        spec.axes.clear();
        spec.outputs = outputs.to_vec();
        self.apply(&mut spec)?;
        Ok(spec)
    }

    fn scenario(&self, name: &str) -> Result<SweepSpec> {
        let mut spec = scenario::load(name)?;
        self.apply(&mut spec)?;
        Ok(spec)
    }

    fn emit(&self, mut table: ResultTable) -> Result<()> {
        let Format::Csv = self.format;
        if self.timestamp {
            let secs = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            table.timestamp = Some(format!("unix:{secs}"));
        }
        match &self.out {
            Some(p) => emit_csv(&table, p),
            None => {
                let stdout = std::io::stdout();
                let mut lock = stdout.lock();
                write_csv(&table, &mut lock)?;
                lock.flush().map_err(|e| SweepError::io("<stdout>", e))
            }
        }
    }
}

fn optimum_table(table: &ResultTable, objective: &str, mode: Mode) -> Result<ResultTable> {
    let found = find_optimum(table, objective, mode)?;
    let inner = table.axes.last().map(|a| a.column.clone()).unwrap_or_default();
    let mut columns = Vec::new();
    if table.axes.len() == 2 {
        columns.push(table.axes[0].column.clone());
    }
    columns.extend([
        inner.clone(),
        objective.to_string(),
        format!("refined_{inner}"),
        format!("refined_{objective}"),
        "interior_flag".to_string(),
    ]);
    let rows = found
        .iter()
        .map(|o| {
            let mut r: Vec<f64> = o.group.into_iter().collect();
            r.extend([
                o.x,
                o.value,
                o.refined_x,
                o.refined_value,
                if o.interior { 1.0 } else { 0.0 },
            ]);
            r
        })
        .collect();
    Ok(ResultTable {
        scenario: format!("{}-optimum", table.scenario),
        config_hash: table.config_hash.clone(),
        timestamp: None,
        axes: table.axes[..table.axes.len().saturating_sub(1)].to_vec(),
        columns,
        rows,
    })
}

fn threshold_table(table: &ResultTable, objective: &str) -> Result<ResultTable> {
    let a = light_narrowing_threshold(table, objective)?;
    let outer = table.axes[0].column.clone();
    let nan = f64::NAN;
    let rows = a
        .profiles
        .iter()
        .map(|(g, p)| {
            let code = match p {
                Profile::Increasing => 0.0,
                Profile::InteriorMaximum => 1.0,
                Profile::Other => 2.0,
            };
            vec![*g, code, a.threshold.unwrap_or(nan), a.below.unwrap_or(nan), f64::from(u8::from(a.clean))]
        })
        .collect();
    Ok(ResultTable {
        scenario: format!("{}-threshold", table.scenario),
        config_hash: table.config_hash.clone(),
        timestamp: None,
        axes: vec![AxisColumn {
            column: outer.clone(),
            log: false,
        }],
        columns: vec![
            outer.clone(),
            "profile_flag".into(),
            format!("threshold_{outer}"),
            format!("below_threshold_{outer}"),
            "clean_flag".into(),
        ],
        rows,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Rates(c) => {
            let spec = c.single_point("rates", &[Output::Rates])?;
            c.emit(run_scenario(&spec, c.jobs)?)
        }
        Command::Linewidth(c) => {
            let spec = c.single_point("linewidth", &[Output::Linewidth, Output::Analytic])?;
            c.emit(run_scenario(&spec, c.jobs)?)
        }
        Command::Lineshape(c) => {
            let spec = c.single_point("lineshape", &[Output::Lineshape])?;
            c.emit(run_scenario(&spec, c.jobs)?)
        }
        Command::Oracle(c) => {
            let spec = c.single_point("oracle", &[Output::Linewidth, Output::Oracle])?;
            let table = rbxe_sweep::run::pool(c.jobs)?.install(|| oracle_table(&spec))?;
            c.emit(table)
        }
        Command::Sweep { scenario, common } => {
            let spec = common.scenario(&scenario)?;
            common.emit(run_scenario(&spec, common.jobs)?)
        }
        Command::Optimum {
            scenario,
            objective,
            mode,
            common,
        } => {
            let mode: Mode = mode.parse()?;
            let spec = common.scenario(&scenario)?;
            let table = run_scenario(&spec, common.jobs)?;
            common.emit(optimum_table(&table, &objective, mode)?)
        }
        Command::Threshold {
            scenario,
            objective,
            common,
        } => {
            let spec = common.scenario(&scenario)?;
            let table = run_scenario(&spec, common.jobs)?;
            common.emit(threshold_table(&table, &objective)?)
        }
        Command::Scenarios => {
            for name in scenario::names() {
                let s = scenario::builtin(name)?;
                println!("{name}\t{}", s.description);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
