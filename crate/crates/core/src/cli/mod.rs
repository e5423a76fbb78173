//! Command-line front end: `heatlab run --config <path> [--out <dir>] [--preset <name>] [--jobs N]`.
//!
//! A run resolves a [`RunConfig`] (preset first, then the config file on top),
//! computes one table, and writes `<name>.csv`, `<name>.meta` and optionally
//! `<name>.plot.py` into the output directory.

pub mod config;
pub mod presets;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::analysis::{
    amplification_factor, detect_ndtc, gate_currents, solve_device, sweep_coupling, sweep_temperature_bias, Device,
    NMaxPolicy, SweepResult, Transistor, NDTC_MIN_POINTS, NDTC_THRESHOLD,
};
use crate::baths::{BathLabel, BathSpec};
use crate::error::Error;
use crate::hilbert::{HybridSystem, TwoQubitSystem};
use crate::steadystate::{certify_with, CERTIFY_RELATIVE, DEFAULT_TOLERANCE};

pub use config::{Grid, Mode, NMaxSetting, RunConfig};

pub const JOBS_ENV: &str = "HEATLAB_JOBS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error in '{key}': {message}")]
    Config { key: String, message: String },
    #[error("solver failure: {0}")]
    Solver(Error),
    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 1,
            CliError::Solver(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            // parameter combinations the per-key checks let through
            Error::Domain(msg) => CliError::config("parameters", msg),
            other => CliError::Solver(other),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "heatlab", version, about = "Heat transport through a qubit-phonon hybrid system")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one configured experiment and write its CSV and metadata.
    Run(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Config file (`key = value` lines); applied on top of the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Built-in experiment: fig2a, fig3, fig4, fig5, fig6, fig8.
    #[arg(long)]
    pub preset: Option<String>,
    /// Worker threads; `HEATLAB_JOBS` takes precedence.
    #[arg(long)]
    pub jobs: Option<usize>,
}

pub fn resolve_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    if args.config.is_none() && args.preset.is_none() {
        return Err(CliError::config("config", "give --config, --preset or both"));
    }
    let mut config = RunConfig::default();
    if let Some(name) = &args.preset {
        let text = presets::preset(name)
            .ok_or_else(|| CliError::config("preset", format!("unknown preset '{name}' (have {})", presets::NAMES.join(", "))))?;
        config.apply(text)?;
    }
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        config.apply(&text)?;
    }
    config.validate()?;
    Ok(config)
}

/// Thread count from `HEATLAB_JOBS`, else `--jobs`, else rayon's default.
pub fn resolve_jobs(flag: Option<usize>, env: Option<&str>) -> Result<Option<usize>, CliError> {
    let jobs = match env {
        Some(v) => Some(v.trim().parse::<usize>().map_err(|_| CliError::config(JOBS_ENV, format!("'{v}' is not a thread count")))?),
        None => flag,
    };
    if jobs == Some(0) {
        return Err(CliError::config(if env.is_some() { JOBS_ENV } else { "jobs" }, "must be at least 1"));
    }
    Ok(jobs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(usize),
}

impl Cell {
    fn render(self) -> String {
        match self {
            Cell::Real(v) => format!("{v:.16e}"),
            Cell::Int(n) => n.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub table: Table,
    /// Result summaries appended to the metadata after the configuration.
    pub summary: Vec<(String, String)>,
}

fn policy(config: &RunConfig) -> NMaxPolicy {
    match config.n_max {
        NMaxSetting::Fixed(n) => NMaxPolicy::Fixed(n),
        NMaxSetting::Auto => NMaxPolicy::Certify {
            start: config.certify_start,
            growth: config.certify_growth,
            cap: config.certify_cap,
        },
    }
}

fn device(config: &RunConfig, lambda: f64) -> Result<Device, CliError> {
    let n = match config.n_max {
        NMaxSetting::Fixed(n) => n,
        NMaxSetting::Auto => config.certify_start,
    };
    Ok(Device {
        sys: HybridSystem::new(config.epsilon, config.omega0, lambda, n)?,
        bath_a: BathSpec::new(BathLabel::PhononA, config.alpha_a, config.omega_c, config.t_a)?,
        bath_sigma: BathSpec::new(BathLabel::QubitSigma, config.alpha_sigma, config.omega_c, config.t_sigma)?,
    })
}

struct Diagnostics {
    n_min: usize,
    n_max: usize,
    max_residual: f64,
    max_delta: Option<f64>,
    points: usize,
}

impl Diagnostics {
    fn new() -> Self {
        Self {
            n_min: usize::MAX,
            n_max: 0,
            max_residual: 0.0,
            max_delta: None,
            points: 0,
        }
    }

    fn record(&mut self, n: usize, residual: f64, delta: Option<f64>) {
        self.n_min = self.n_min.min(n);
        self.n_max = self.n_max.max(n);
        self.max_residual = self.max_residual.max(residual);
        if let Some(d) = delta {
            self.max_delta = Some(self.max_delta.map_or(d, |m: f64| m.max(d)));
        }
        self.points += 1;
    }

    fn record_sweep(&mut self, sweep: &SweepResult) {
        for r in &sweep.rows {
            self.record(r.n_max_used, r.residual, r.certificate_delta);
        }
    }

    fn pairs(&self, policy: &str) -> Vec<(String, String)> {
        let mut out = vec![
            ("certificate.policy".to_string(), policy.to_string()),
            ("certificate.n_max_min".to_string(), self.n_min.to_string()),
            ("certificate.n_max_max".to_string(), self.n_max.to_string()),
        ];
        if let Some(d) = self.max_delta {
            out.push(("certificate.max_relative_change".into(), format!("{d:e}")));
        }
        out.push(("solver.max_residual".into(), format!("{:e}", self.max_residual)));
        out.push(("solver.points".into(), self.points.to_string()));
        out
    }
}

fn ndtc_summary(prefix: String, sweep: &SweepResult, out: &mut Vec<(String, String)>) -> Result<(), CliError> {
    match detect_ndtc(sweep) {
        Ok(r) => {
            out.push((format!("{prefix}.present"), r.present.to_string()));
            out.push((format!("{prefix}.peak_delta_t"), format!("{:?}", r.peak_bias)));
            out.push((format!("{prefix}.suppression_ratio"), format!("{:e}", r.suppression_ratio)));
        }
        Err(Error::InsufficientGrid { .. }) => out.push((format!("{prefix}.present"), "undetermined".into())),
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

/// Computes the table for `config` on the current rayon pool.
pub fn execute(config: &RunConfig) -> Result<RunOutput, CliError> {
    config.validate()?;
    let policy_name = match config.n_max {
        NMaxSetting::Auto => "auto",
        NMaxSetting::Fixed(_) => "fixed",
    };
    let mut diag = Diagnostics::new();
    let mut summary = Vec::new();
    let table = match config.mode {
        Mode::Steady => {
            let row = solve_device(&device(config, config.lambda)?, config.lambda, policy(config))?;
            diag.record(row.n_max_used, row.residual, row.certificate_delta);
            Table {
                header: ["lambda", "t_a", "t_sigma", "j_ss", "sigma_z", "n_max", "residual"].map(String::from).to_vec(),
                rows: vec![vec![
                    Cell::Real(config.lambda),
                    Cell::Real(config.t_a),
                    Cell::Real(config.t_sigma),
                    Cell::Real(row.j_ss),
                    Cell::Real(row.polarization),
                    Cell::Int(row.n_max_used),
                    Cell::Real(row.residual),
                ]],
            }
        }
        Mode::SweepLambda => {
            let sweep = sweep_coupling(&device(config, 0.0)?, &config.lambda_grid.values(), policy(config))?;
            diag.record_sweep(&sweep);
            let k = config.population_columns;
            let mut header: Vec<String> = ["lambda", "j_ss", "sigma_z", "n_max", "residual"].map(String::from).to_vec();
            header.extend((0..k).map(|n| format!("p_up_{n}")));
            header.extend((0..k).map(|n| format!("p_down_{n}")));
            let rows = sweep
                .rows
                .iter()
                .map(|r| {
                    let levels = r.populations.len() / 2;
                    let mut row = vec![
                        Cell::Real(r.axis_value),
                        Cell::Real(r.j_ss),
                        Cell::Real(r.polarization),
                        Cell::Int(r.n_max_used),
                        Cell::Real(r.residual),
                    ];
                    row.extend((0..k).map(|n| Cell::Real(r.populations[n])));
                    row.extend((0..k).map(|n| Cell::Real(r.populations[levels + n])));
                    row
                })
                .collect();
            Table { header, rows }
        }
        Mode::SweepBias => {
            let biases = config.bias_grid.values();
            let mut rows = Vec::new();
            for lambda in config.lambdas.values() {
                let sweep = sweep_temperature_bias(&device(config, lambda)?, config.t0, &biases, policy(config))?;
                diag.record_sweep(&sweep);
                ndtc_summary(format!("ndtc.lambda_{lambda:?}"), &sweep, &mut summary)?;
                rows.extend(sweep.rows.iter().map(|r| {
                    vec![Cell::Real(r.axis_value), Cell::Real(lambda), Cell::Real(r.j_ss / (lambda * lambda))]
                }));
            }
            Table {
                header: ["delta_t", "lambda", "j_ss_over_lambda2"].map(String::from).to_vec(),
                rows,
            }
        }
        Mode::Rectify => {
            let biases = config.bias_grid.values();
            let mut grid: Vec<f64> = biases.iter().rev().map(|b| -b).collect();
            grid.extend(&biases);
            let mut rows = Vec::new();
            for lambda in config.lambdas.values() {
                let sweep = sweep_temperature_bias(&device(config, lambda)?, config.t0, &grid, policy(config))?;
                diag.record_sweep(&sweep);
                let nb = biases.len();
                for (i, &b) in biases.iter().enumerate() {
                    let (forward, reverse) = (sweep.rows[nb + i].j_ss, sweep.rows[nb - 1 - i].j_ss);
                    let r = crate::analysis::rectification_factor(forward, reverse);
                    rows.push(vec![Cell::Real(b), Cell::Real(lambda), Cell::Real(r.r), Cell::Real(forward), Cell::Real(reverse)]);
                }
            }
            Table {
                header: ["delta_t", "lambda", "r", "j_forward", "j_reverse"].map(String::from).to_vec(),
                rows,
            }
        }
        Mode::Detune => {
            let biases = config.bias_grid.values();
            let mut rows = Vec::new();
            for delta in config.detuning_grid.values() {
                let mut c = config.clone();
                c.epsilon = config.omega0 - delta;
                let sweep = sweep_temperature_bias(&device(&c, config.lambda)?, config.t0, &biases, policy(config))?;
                diag.record_sweep(&sweep);
                ndtc_summary(format!("ndtc.delta_{delta:?}"), &sweep, &mut summary)?;
                let scale = config.lambda * config.lambda;
                rows.extend(
                    sweep
                        .rows
                        .iter()
                        .map(|r| vec![Cell::Real(delta), Cell::Real(r.axis_value), Cell::Real(r.j_ss / scale)]),
                );
            }
            Table {
                header: ["delta", "delta_t", "j_ss_over_lambda2"].map(String::from).to_vec(),
                rows,
            }
        }
        Mode::Amplify => {
            let gates = config.gate_grid.values();
            let base = Transistor {
                sys: TwoQubitSystem {
                    eps_l: config.eps_l,
                    eps_r: config.eps_r,
                    lambda_l: config.lambda_l,
                    lambda_r: config.lambda_r,
                    omega0: config.omega0,
                    n_max: 1,
                },
                bath_a: BathSpec::new(BathLabel::PhononA, config.alpha_a, config.omega_c, config.t_a)?,
                bath_l: BathSpec::new(BathLabel::LeftSigma, config.alpha_l, config.omega_c, gates[0])?,
                bath_r: BathSpec::new(BathLabel::RightSigma, config.alpha_r, config.omega_c, config.t_r)?,
            };
            let (n_max, delta) = match config.n_max {
                NMaxSetting::Fixed(n) => (n, None),
                NMaxSetting::Auto => {
                    // certified once, at the hottest gate, on the drain current
                    let hottest = *gates.last().expect("validated nonempty");
                    let floor = 1e-13 * config.alpha_a.max(config.alpha_l).max(config.alpha_r) * config.omega0 * config.omega0;
                    let cert = certify_with(config.certify_start, config.certify_growth, config.certify_cap, floor, |n| {
                        let t = Transistor { sys: TwoQubitSystem { n_max: n, ..base.sys }, ..base };
                        let point = gate_currents(&t, hottest)?;
                        Ok((point.j_r, point.edge_weight))
                    })?;
                    (cert.n_max, Some(cert.delta))
                }
            };
            let device = Transistor { sys: TwoQubitSystem { n_max, ..base.sys }, ..base };
            let rows = amplification_factor(&device, &gates)?;
            let residuals = gates
                .par_iter()
                .map(|&t| gate_currents(&device, t).map(|p| p.residual))
                .collect::<Result<Vec<_>, _>>()?;
            for r in residuals {
                diag.record(n_max, r, delta);
            }
            if let Some(peak) = rows.iter().filter(|r| r.beta_r.is_finite()).max_by(|a, b| a.beta_r.total_cmp(&b.beta_r)) {
                summary.push(("amplification.peak_beta_r".into(), format!("{:e}", peak.beta_r)));
                summary.push(("amplification.peak_t_sigma_l".into(), format!("{:?}", peak.t_gate)));
            }
            summary.push((
                "amplification.degenerate_points".into(),
                rows.iter().filter(|r| r.degenerate).count().to_string(),
            ));
            Table {
                header: ["t_sigma_l", "j_l", "j_r", "beta_r"].map(String::from).to_vec(),
                rows: rows
                    .iter()
                    .map(|r| vec![Cell::Real(r.t_gate), Cell::Real(r.j_l), Cell::Real(r.j_r), Cell::Real(r.beta_r)])
                    .collect(),
            }
        }
    };
    let mut all = diag.pairs(policy_name);
    all.extend(summary);
    Ok(RunOutput { table, summary: all })
}

/// Fixed conventions that shape every result, echoed into the metadata.
pub fn design_defaults() -> Vec<(&'static str, String)> {
    vec![
        ("design.epsilon_default", "1 (resonance, used when a figure leaves epsilon unstated)".into()),
        ("design.bias_convention", "t_a = t0 + delta_t/2, t_sigma = t0 - delta_t/2".into()),
        ("design.current_sign", "positive when heat enters the qubit bath (the drain bath sigma_r in amplify mode)".into()),
        ("design.spectral_density", "ohmic alpha*omega*exp(-omega/omega_c), shared omega_c".into()),
        ("design.ndtc_threshold", format!("{NDTC_THRESHOLD:?}")),
        ("design.ndtc_min_points", NDTC_MIN_POINTS.to_string()),
        ("design.beta_r_stencil", "central differences on the gate grid, one-sided at the ends".into()),
        ("design.beta_r_degenerate", "inf when the gate-current difference is below 1e-12 of the current scale".into()),
        ("design.steady_state_solver", "state reduction on the unique closed class".into()),
        ("design.steady_tolerance", format!("{DEFAULT_TOLERANCE:e} relative to the largest rate")),
        ("design.certify_relative", format!("{CERTIFY_RELATIVE:e}")),
        ("design.amplify_certify_point", "hottest gate temperature, drain current".into()),
        ("design.csv_float_format", "17 significant digits, scientific".into()),
    ]
}

pub fn render_csv(table: &Table) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Io {
        path: "<csv buffer>".into(),
        message: e.to_string(),
    };
    w.write_record(&table.header).map_err(csv_err)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|c| c.render())).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io {
        path: "<csv buffer>".into(),
        message: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

pub fn render_meta(config: &RunConfig, output: &RunOutput) -> String {
    let mut text = String::from("# heatlab run metadata\n");
    text.push_str(&format!("heatlab.version = {}\n", env!("CARGO_PKG_VERSION")));
    text.push_str(&config.to_text());
    for (k, v) in design_defaults() {
        text.push_str(&format!("{k} = {v}\n"));
    }
    for (k, v) in &output.summary {
        text.push_str(&format!("{k} = {v}\n"));
    }
    text
}

pub fn render_plot(config: &RunConfig) -> String {
    let (x, y, group) = match config.mode {
        Mode::Steady | Mode::SweepLambda => ("lambda", "j_ss", None),
        Mode::SweepBias => ("delta_t", "j_ss_over_lambda2", Some("lambda")),
        Mode::Rectify => ("delta_t", "r", Some("lambda")),
        Mode::Detune => ("delta_t", "j_ss_over_lambda2", Some("delta")),
        Mode::Amplify => ("t_sigma_l", "beta_r", None),
    };
    let logx = matches!(config.lambda_grid, Grid::Log { .. }) && config.mode == Mode::SweepLambda;
    format!(
        r#"# Generated by heatlab; plots {name}.csv next to this script.
import csv, os, sys
from collections import defaultdict
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(here, "{name}.csv")) as f:
    rows = list(csv.DictReader(f))
group = {group}
curves = defaultdict(list)
for r in rows:
    curves[r[group] if group else ""].append((float(r["{x}"]), float(r["{y}"])))
fig, ax = plt.subplots()
for label, pts in curves.items():
    ax.plot([p[0] for p in pts], [p[1] for p in pts], marker=".", label=(group + " = " + label) if group else None)
if {logx}:
    ax.set_xscale("log")
ax.set_xlabel("{x}")
ax.set_ylabel("{y}")
if group:
    ax.legend()
fig.savefig(os.path.join(here, sys.argv[1] if len(sys.argv) > 1 else "{name}.png"), dpi=150)
"#,
        name = config.name,
        group = group.map_or("None".to_string(), |g| format!("\"{g}\"")),
        logx = if logx { "True" } else { "False" },
        x = x,
        y = y,
    )
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Writes the CSV, metadata and optional plot script; returns the paths written.
pub fn write_outputs(config: &RunConfig, output: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let csv_path = dir.join(format!("{}.csv", config.name));
    let meta_path = dir.join(format!("{}.meta", config.name));
    write_file(&csv_path, &render_csv(&output.table)?)?;
    write_file(&meta_path, &render_meta(config, output))?;
    let mut written = vec![csv_path, meta_path];
    if config.plot {
        let plot_path = dir.join(format!("{}.plot.py", config.name));
        write_file(&plot_path, &render_plot(config))?;
        written.push(plot_path);
    }
    Ok(written)
}

/// Full `run` subcommand: resolve, compute on a pool of the requested size, write.
pub fn run(args: &RunArgs, env_jobs: Option<&str>) -> Result<Vec<PathBuf>, CliError> {
    let config = resolve_config(args)?;
    let jobs = resolve_jobs(args.jobs, env_jobs)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::config("jobs", e.to_string()))?;
    log::info!("running {} ({} mode)", config.name, config.mode.as_str());
    let output = pool.install(|| execute(&config))?;
    write_outputs(&config, &output, &args.out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::config("k", "m").exit_code(), 1);
        assert_eq!(CliError::from(Error::NonErgodic { closed_classes: 2 }).exit_code(), 2);
        assert_eq!(CliError::from(Error::NoConvergence { cap: 10, last_delta: 1.0 }).exit_code(), 2);
        assert_eq!(CliError::io(Path::new("x"), "denied").exit_code(), 3);
    }

    #[test]
    fn jobs_precedence() {
        assert_eq!(resolve_jobs(Some(2), None).unwrap(), Some(2));
        assert_eq!(resolve_jobs(Some(2), Some("3")).unwrap(), Some(3));
        assert_eq!(resolve_jobs(None, None).unwrap(), None);
        assert!(resolve_jobs(None, Some("many")).unwrap_err().to_string().contains(JOBS_ENV));
        assert!(resolve_jobs(Some(0), None).is_err());
    }

    #[test]
    fn csv_format() {
        let t = Table {
            header: vec!["a".into(), "n".into()],
            rows: vec![vec![Cell::Real(0.1), Cell::Int(3)], vec![Cell::Real(-2.5e-7), Cell::Int(10)]],
        };
        assert_eq!(
            render_csv(&t).unwrap(),
            "a,n\n1.0000000000000001e-1,3\n-2.4999999999999999e-7,10\n"
        );
    }
}
