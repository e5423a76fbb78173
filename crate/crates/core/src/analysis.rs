//! Parameter sweeps and figures of merit: coupling turnover, NDTC, thermal
//! rectification, detuning and three-terminal heat amplification.
//!
//! Every sweep evaluates its grid points in parallel and returns rows in grid
//! order, so the output does not depend on scheduling.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::baths::{BathLabel, BathSpec};
use crate::error::{Error, Result};
use crate::hilbert::{HybridSystem, TwoQubitSystem};
use crate::liouvillian::build_two_qubit_rate_matrices;
use crate::observables::{current_report, qubit_polarization};
use crate::steadystate::{certify_truncation, edge_weight, solve_point, solve_steady_state, TruncationCertificate};

/// Fraction by which the end-of-grid current must fall below the peak for NDTC.
pub const NDTC_THRESHOLD: f64 = 0.1;
pub const NDTC_MIN_POINTS: usize = 5;
/// Default number of gate temperatures for the amplification sweep.
pub const DEFAULT_GATE_POINTS: usize = 41;
/// Largest bias as a fraction of `2 T0`, keeping the cold bath off `T = 0`.
pub const DEFAULT_BIAS_FRACTION: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    CouplingLambda,
    TempBias,
    GateTemperature,
    Detuning,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::CouplingLambda => "lambda",
            SweepAxis::TempBias => "delta_t",
            SweepAxis::GateTemperature => "t_sigma_l",
            SweepAxis::Detuning => "delta",
        }
    }
}

/// How the Fock cutoff is chosen at each grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NMaxPolicy {
    Fixed(usize),
    /// Grow from `start` in steps of `growth` until the current settles, up to `cap`.
    Certify { start: usize, growth: usize, cap: usize },
}

/// Single-qubit device: system plus its two baths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Device {
    pub sys: HybridSystem,
    pub bath_a: BathSpec,
    pub bath_sigma: BathSpec,
}

impl Device {
    pub fn with_temperatures(self, t_a: f64, t_sigma: f64) -> Self {
        Self {
            bath_a: self.bath_a.with_temperature(t_a),
            bath_sigma: self.bath_sigma.with_temperature(t_sigma),
            ..self
        }
    }

    /// Temperatures `T_a = T0 + ΔT/2`, `T_σ = T0 − ΔT/2`.
    pub fn biased(self, t0: f64, bias: f64) -> Result<Self> {
        let (t_a, t_s) = (t0 + bias / 2.0, t0 - bias / 2.0);
        if t_a < 0.0 || t_s < 0.0 {
            return Err(Error::domain(format!("bias {bias} drives a temperature below zero at T0 = {t0}")));
        }
        Ok(self.with_temperatures(t_a, t_s))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    /// `J_σ`, positive when heat reaches the qubit bath.
    pub j_ss: f64,
    pub polarization: f64,
    pub n_max_used: usize,
    pub residual: f64,
    /// Relative change of the current at the certified cutoff, if certified.
    pub certificate_delta: Option<f64>,
    pub populations: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn axis_values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.axis_value).collect()
    }

    pub fn currents(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.j_ss).collect()
    }
}

fn check_monotone(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("grid values must be finite"));
    }
    let up = grid.windows(2).all(|w| w[1] > w[0]);
    let down = grid.windows(2).all(|w| w[1] < w[0]);
    if up || down {
        Ok(())
    } else {
        Err(Error::domain("grid must be strictly monotone"))
    }
}

/// Solves one device with the given cutoff policy.
pub fn solve_device(device: &Device, axis_value: f64, policy: NMaxPolicy) -> Result<SweepRow> {
    let (n_max, certificate) = match policy {
        NMaxPolicy::Fixed(n) => (n, None),
        NMaxPolicy::Certify { start, growth, cap } => {
            let cert: TruncationCertificate =
                certify_truncation(&device.sys.with_n_max(start), &device.bath_a, &device.bath_sigma, growth, cap)?;
            (cert.n_max, Some(cert.delta))
        }
    };
    let sys = device.sys.with_n_max(n_max);
    let (rates, result) = solve_point(&sys, &device.bath_a, &device.bath_sigma)?;
    let report = current_report(&result, &rates)?;
    Ok(SweepRow {
        axis_value,
        j_ss: report.j_ss,
        polarization: qubit_polarization(&result.populations)?,
        n_max_used: n_max,
        residual: result.residual,
        certificate_delta: certificate,
        populations: result.populations,
    })
}

fn run_grid(axis: SweepAxis, grid: &[f64], point: impl Fn(f64) -> Result<SweepRow> + Sync) -> Result<SweepResult> {
    check_monotone(grid)?;
    let rows = grid.par_iter().map(|&v| point(v)).collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { axis, rows })
}

/// `J_ss(λ)` at fixed temperatures.
pub fn sweep_coupling(base: &Device, lambdas: &[f64], policy: NMaxPolicy) -> Result<SweepResult> {
    if lambdas.iter().any(|&l| l < 0.0) {
        return Err(Error::domain("coupling grid must be nonnegative"));
    }
    run_grid(SweepAxis::CouplingLambda, lambdas, |lambda| {
        let device = Device { sys: base.sys.with_lambda(lambda), ..*base };
        solve_device(&device, lambda, policy)
    })
}

/// `J_ss(ΔT)` with `T_a = T0 + ΔT/2`, `T_σ = T0 − ΔT/2`.
pub fn sweep_temperature_bias(base: &Device, t0: f64, biases: &[f64], policy: NMaxPolicy) -> Result<SweepResult> {
    if let Some(&b) = biases.iter().find(|b| b.abs() > 2.0 * t0) {
        return Err(Error::domain(format!("|delta_t| = {} exceeds 2 T0 = {}", b.abs(), 2.0 * t0)));
    }
    run_grid(SweepAxis::TempBias, biases, |bias| solve_device(&base.biased(t0, bias)?, bias, policy))
}

/// One `J_ss(ΔT)` curve per detuning `δ = ω0 − ε`.
pub fn sweep_detuning(
    base: &Device,
    t0: f64,
    detunings: &[f64],
    biases: &[f64],
    policy: NMaxPolicy,
) -> Result<Vec<(f64, SweepResult)>> {
    check_monotone(detunings)?;
    detunings
        .iter()
        .map(|&delta| {
            let epsilon = base.sys.omega0 - delta;
            if !(epsilon > 0.0) {
                return Err(Error::domain(format!("detuning {delta} leaves epsilon = {epsilon} non-positive")));
            }
            let device = Device {
                sys: HybridSystem { epsilon, ..base.sys },
                ..*base
            };
            Ok((delta, sweep_temperature_bias(&device, t0, biases, policy)?))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NdtcReport {
    pub present: bool,
    pub peak_bias: f64,
    /// `J(ΔT_end) / J_max`.
    pub suppression_ratio: f64,
}

/// NDTC on the positive-bias part of a `J(ΔT)` sweep: an interior maximum
/// with the current at the largest bias below `(1 − threshold) J_max`.
pub fn detect_ndtc(sweep: &SweepResult) -> Result<NdtcReport> {
    let mut points: Vec<(f64, f64)> = sweep
        .rows
        .iter()
        .filter(|r| r.axis_value > 0.0)
        .map(|r| (r.axis_value, r.j_ss))
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    detect_ndtc_points(&points)
}

pub fn detect_ndtc_points(points: &[(f64, f64)]) -> Result<NdtcReport> {
    if points.len() < NDTC_MIN_POINTS {
        return Err(Error::InsufficientGrid { found: points.len(), required: NDTC_MIN_POINTS });
    }
    let (peak, &(peak_bias, j_max)) = points
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("nonempty grid");
    let j_end = points[points.len() - 1].1;
    let suppression_ratio = if j_max != 0.0 { j_end / j_max } else { 1.0 };
    let interior = peak > 0 && peak + 1 < points.len();
    Ok(NdtcReport {
        present: interior && j_max > 0.0 && j_end < (1.0 - NDTC_THRESHOLD) * j_max,
        peak_bias,
        suppression_ratio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rectification {
    pub r: f64,
    /// Both currents were zero; `r` is then reported as 0.
    pub both_zero: bool,
}

/// `R = |J(ΔT) + J(−ΔT)| / max(|J(ΔT)|, |J(−ΔT)|)`.
pub fn rectification_factor(j_forward: f64, j_reverse: f64) -> Rectification {
    let scale = j_forward.abs().max(j_reverse.abs());
    if scale == 0.0 {
        return Rectification { r: 0.0, both_zero: true };
    }
    Rectification {
        r: (j_forward + j_reverse).abs() / scale,
        both_zero: false,
    }
}

/// Rectification of `device` at bias `±ΔT` around `T0`.
pub fn rectification_at(device: &Device, t0: f64, bias: f64, policy: NMaxPolicy) -> Result<Rectification> {
    let (forward, reverse) = rayon::join(
        || solve_device(&device.biased(t0, bias)?, bias, policy),
        || solve_device(&device.biased(t0, -bias)?, -bias, policy),
    );
    Ok(rectification_factor(forward?.j_ss, reverse?.j_ss))
}

/// Three-terminal device: two qubits on one mode, gate bath `σ_L`, drain `σ_R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transistor {
    pub sys: TwoQubitSystem,
    pub bath_a: BathSpec,
    pub bath_l: BathSpec,
    pub bath_r: BathSpec,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GatePoint {
    pub t_gate: f64,
    pub j_l: f64,
    pub j_r: f64,
    pub j_a: f64,
    pub residual: f64,
    /// Population on the top Fock level.
    pub edge_weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplificationRow {
    pub t_gate: f64,
    pub j_l: f64,
    pub j_r: f64,
    /// `|∂J_R/∂J_L|`, `+∞` when `∂J_L` vanishes.
    pub beta_r: f64,
    pub degenerate: bool,
}

/// Currents into the three baths at gate temperature `t_gate`.
pub fn gate_currents(device: &Transistor, t_gate: f64) -> Result<GatePoint> {
    let bath_l = device.bath_l.with_temperature(t_gate);
    let rates = build_two_qubit_rate_matrices(&device.sys, &device.bath_a, &bath_l, &device.bath_r)?;
    let result = solve_steady_state(&rates)?;
    let report = current_report(&result, &rates)?;
    Ok(GatePoint {
        t_gate,
        j_l: report.get(BathLabel::LeftSigma),
        j_r: report.get(BathLabel::RightSigma),
        j_a: report.get(BathLabel::PhononA),
        residual: result.residual,
        edge_weight: edge_weight(&result, &rates),
    })
}

fn beta(d_jr: f64, d_jl: f64, scale: f64) -> (f64, bool) {
    // ∂J_L indistinguishable from round-off on the current scale
    if d_jl.abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
        (f64::INFINITY, true)
    } else {
        ((d_jr / d_jl).abs(), false)
    }
}

/// `β_R` over a gate grid by finite differences of both currents on the same
/// stencil: central inside, one-sided at the ends.
pub fn amplification_factor(device: &Transistor, gate_grid: &[f64]) -> Result<Vec<AmplificationRow>> {
    if gate_grid.len() < 2 {
        return Err(Error::InsufficientGrid { found: gate_grid.len(), required: 2 });
    }
    check_monotone(gate_grid)?;
    let points = gate_grid
        .par_iter()
        .map(|&t| gate_currents(device, t))
        .collect::<Result<Vec<_>>>()?;
    let scale = points.iter().fold(0.0f64, |m, p| m.max(p.j_l.abs()).max(p.j_r.abs()));
    let last = points.len() - 1;
    Ok((0..=last)
        .map(|i| {
            let (lo, hi) = (i.saturating_sub(1), (i + 1).min(last));
            let (beta_r, degenerate) = beta(points[hi].j_r - points[lo].j_r, points[hi].j_l - points[lo].j_l, scale);
            AmplificationRow {
                t_gate: points[i].t_gate,
                j_l: points[i].j_l,
                j_r: points[i].j_r,
                beta_r,
                degenerate,
            }
        })
        .collect())
}

/// Central-difference `β_R` at one gate temperature with half-width `h`.
pub fn amplification_at(device: &Transistor, t_gate: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) || t_gate - h < 0.0 {
        return Err(Error::domain(format!("stencil half-width {h} invalid at T = {t_gate}")));
    }
    let (lo, hi) = rayon::join(|| gate_currents(device, t_gate - h), || gate_currents(device, t_gate + h));
    let (lo, hi) = (lo?, hi?);
    let scale = lo.j_l.abs().max(hi.j_l.abs()).max(lo.j_r.abs()).max(hi.j_r.abs());
    Ok(beta(hi.j_r - lo.j_r, hi.j_l - lo.j_l, scale).0)
}

/// `n` evenly spaced points on `[a, b]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// `n` log-spaced points on `[a, b]`, both positive.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = linspace(a.ln(), b.ln(), n).into_iter().map(f64::exp).collect();
    // pin the endpoints against exp(ln(·)) round-off
    if let Some(first) = v.first_mut() {
        *first = a;
    }
    if n > 1 {
        v[n - 1] = b;
    }
    v
}

impl Default for NMaxPolicy {
    fn default() -> Self {
        NMaxPolicy::Fixed(crate::steadystate::DEFAULT_N_MAX)
    }
}
