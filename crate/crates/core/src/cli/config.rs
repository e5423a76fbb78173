//! Flat `key = value` run configuration.

use std::fmt;
use std::str::FromStr;

use super::CliError;
use crate::analysis::{linspace, logspace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Steady,
    SweepLambda,
    SweepBias,
    Rectify,
    Detune,
    Amplify,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::Steady,
        Mode::SweepLambda,
        Mode::SweepBias,
        Mode::Rectify,
        Mode::Detune,
        Mode::Amplify,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Steady => "steady",
            Mode::SweepLambda => "sweep-lambda",
            Mode::SweepBias => "sweep-bias",
            Mode::Rectify => "rectify",
            Mode::Detune => "detune",
            Mode::Amplify => "amplify",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mode '{s}'"))
    }
}

/// Grid syntax: `lin:a:b:n`, `log:a:b:n` or a comma-separated list.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Lin { start: f64, stop: f64, n: usize },
    Log { start: f64, stop: f64, n: usize },
    List(Vec<f64>),
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Grid::Lin { start, stop, n } => linspace(start, stop, n),
            Grid::Log { start, stop, n } => logspace(start, stop, n),
            Grid::List(ref v) => v.clone(),
        }
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grid::Lin { start, stop, n } => write!(f, "lin:{start:?}:{stop:?}:{n}"),
            Grid::Log { start, stop, n } => write!(f, "log:{start:?}:{stop:?}:{n}"),
            Grid::List(v) => {
                let parts: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

fn parse_real(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("'{}' is not a number", s.trim()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{}' is not finite", s.trim()))
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let spaced = |rest: &str| -> Result<(f64, f64, usize), String> {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err(format!("expected start:stop:count, got '{rest}'"));
            }
            let n: usize = parts[2].trim().parse().map_err(|_| format!("'{}' is not a count", parts[2]))?;
            if n == 0 {
                return Err("grid needs at least one point".into());
            }
            Ok((parse_real(parts[0])?, parse_real(parts[1])?, n))
        };
        if let Some(rest) = s.strip_prefix("lin:") {
            let (start, stop, n) = spaced(rest)?;
            Ok(Grid::Lin { start, stop, n })
        } else if let Some(rest) = s.strip_prefix("log:") {
            let (start, stop, n) = spaced(rest)?;
            if start <= 0.0 || stop <= 0.0 {
                return Err("log grid bounds must be positive".into());
            }
            Ok(Grid::Log { start, stop, n })
        } else {
            let values = s.split(',').map(parse_real).collect::<Result<Vec<_>, _>>()?;
            Ok(Grid::List(values))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NMaxSetting {
    Auto,
    Fixed(usize),
}

impl fmt::Display for NMaxSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NMaxSetting::Auto => f.write_str("auto"),
            NMaxSetting::Fixed(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for NMaxSetting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "auto" => Ok(NMaxSetting::Auto),
            other => other
                .parse()
                .map(NMaxSetting::Fixed)
                .map_err(|_| format!("expected 'auto' or a cutoff, got '{other}'")),
        }
    }
}

/// Everything a run needs. Single-qubit keys drive every mode except
/// `amplify`, which reads the two-qubit keys.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    /// Stem of the emitted files.
    pub name: String,
    pub omega0: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub alpha_a: f64,
    pub alpha_sigma: f64,
    pub omega_c: f64,
    pub t_a: f64,
    pub t_sigma: f64,
    pub t0: f64,
    pub lambda_grid: Grid,
    pub bias_grid: Grid,
    pub lambdas: Grid,
    pub detuning_grid: Grid,
    pub eps_l: f64,
    pub eps_r: f64,
    pub lambda_l: f64,
    pub lambda_r: f64,
    pub alpha_l: f64,
    pub alpha_r: f64,
    pub t_r: f64,
    pub gate_grid: Grid,
    pub n_max: NMaxSetting,
    pub certify_start: usize,
    pub certify_growth: usize,
    pub certify_cap: usize,
    /// Number of `P_{n↑}`, `P_{n↓}` columns added to `sweep-lambda` output.
    pub population_columns: usize,
    pub plot: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Steady,
            name: "run".into(),
            omega0: 1.0,
            epsilon: 1.0,
            lambda: 0.1,
            alpha_a: 0.005,
            alpha_sigma: 0.005,
            omega_c: 10.0,
            t_a: 1.5,
            t_sigma: 0.5,
            t0: 1.0,
            lambda_grid: Grid::Log { start: 0.01, stop: 4.0, n: 25 },
            bias_grid: Grid::Lin { start: 0.06, stop: 1.98, n: 33 },
            lambdas: Grid::List(vec![0.01, 0.1, 0.2, 0.4]),
            detuning_grid: Grid::List(vec![0.0, 0.2, 0.4, 0.6, 0.8]),
            eps_l: 1.0,
            eps_r: 1.0,
            lambda_l: 0.1,
            lambda_r: 0.4,
            alpha_l: 0.005,
            alpha_r: 0.005,
            t_r: 0.2,
            gate_grid: Grid::Lin { start: 0.25, stop: 1.15, n: crate::analysis::DEFAULT_GATE_POINTS },
            n_max: NMaxSetting::Auto,
            certify_start: 20,
            certify_growth: 10,
            certify_cap: crate::steadystate::DEFAULT_CERTIFY_CAP,
            population_columns: 0,
            plot: false,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    value.trim().parse().map_err(|e: T::Err| CliError::config(key, e.to_string()))
}

fn real(key: &str, value: &str) -> Result<f64, CliError> {
    parse_real(value).map_err(|e| CliError::config(key, e))
}

/// Splits `key = value` lines, dropping `#` comments and blank lines.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("line {}", lineno + 1), format!("expected 'key = value', got '{line}'")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(CliError::config(format!("line {}", lineno + 1), "empty key"));
        }
        if pairs.iter().any(|(k, _)| k == key) {
            return Err(CliError::config(key, "given more than once"));
        }
        pairs.push((key.to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut config = Self::default();
        config.apply(text)?;
        Ok(config)
    }

    /// Overrides fields from `text`; keys not mentioned keep their value.
    pub fn apply(&mut self, text: &str) -> Result<(), CliError> {
        for (key, value) in parse_pairs(text)? {
            self.set(&key, &value)?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value;
        match key {
            "mode" => self.mode = parse_value(key, v)?,
            "name" => {
                let name = v.trim();
                if name.is_empty() || name.contains(['/', '\\']) {
                    return Err(CliError::config(key, "must be a plain file stem"));
                }
                self.name = name.to_string();
            }
            "omega0" => self.omega0 = real(key, v)?,
            "epsilon" => self.epsilon = real(key, v)?,
            "lambda" => self.lambda = real(key, v)?,
            "alpha_a" => self.alpha_a = real(key, v)?,
            "alpha_sigma" => self.alpha_sigma = real(key, v)?,
            "omega_c" => self.omega_c = real(key, v)?,
            "t_a" => self.t_a = real(key, v)?,
            "t_sigma" => self.t_sigma = real(key, v)?,
            "t0" => self.t0 = real(key, v)?,
            "lambda_grid" => self.lambda_grid = parse_value(key, v)?,
            "bias_grid" => self.bias_grid = parse_value(key, v)?,
            "lambdas" => self.lambdas = parse_value(key, v)?,
            "detuning_grid" => self.detuning_grid = parse_value(key, v)?,
            "eps_l" => self.eps_l = real(key, v)?,
            "eps_r" => self.eps_r = real(key, v)?,
            "lambda_l" => self.lambda_l = real(key, v)?,
            "lambda_r" => self.lambda_r = real(key, v)?,
            "alpha_l" => self.alpha_l = real(key, v)?,
            "alpha_r" => self.alpha_r = real(key, v)?,
            "t_r" => self.t_r = real(key, v)?,
            "gate_grid" => self.gate_grid = parse_value(key, v)?,
            "n_max" => self.n_max = parse_value(key, v)?,
            "certify_start" => self.certify_start = parse_value(key, v)?,
            "certify_growth" => self.certify_growth = parse_value(key, v)?,
            "certify_cap" => self.certify_cap = parse_value(key, v)?,
            "population_columns" => self.population_columns = parse_value(key, v)?,
            "plot" => self.plot = parse_value(key, v)?,
            _ => return Err(CliError::config(key, "unknown key")),
        }
        Ok(())
    }

    /// Every field in file order.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("mode", self.mode.as_str().to_string()),
            ("name", self.name.clone()),
            ("omega0", format!("{:?}", self.omega0)),
            ("epsilon", format!("{:?}", self.epsilon)),
            ("lambda", format!("{:?}", self.lambda)),
            ("alpha_a", format!("{:?}", self.alpha_a)),
            ("alpha_sigma", format!("{:?}", self.alpha_sigma)),
            ("omega_c", format!("{:?}", self.omega_c)),
            ("t_a", format!("{:?}", self.t_a)),
            ("t_sigma", format!("{:?}", self.t_sigma)),
            ("t0", format!("{:?}", self.t0)),
            ("lambda_grid", self.lambda_grid.to_string()),
            ("bias_grid", self.bias_grid.to_string()),
            ("lambdas", self.lambdas.to_string()),
            ("detuning_grid", self.detuning_grid.to_string()),
            ("eps_l", format!("{:?}", self.eps_l)),
            ("eps_r", format!("{:?}", self.eps_r)),
            ("lambda_l", format!("{:?}", self.lambda_l)),
            ("lambda_r", format!("{:?}", self.lambda_r)),
            ("alpha_l", format!("{:?}", self.alpha_l)),
            ("alpha_r", format!("{:?}", self.alpha_r)),
            ("t_r", format!("{:?}", self.t_r)),
            ("gate_grid", self.gate_grid.to_string()),
            ("n_max", self.n_max.to_string()),
            ("certify_start", self.certify_start.to_string()),
            ("certify_growth", self.certify_growth.to_string()),
            ("certify_cap", self.certify_cap.to_string()),
            ("population_columns", self.population_columns.to_string()),
            ("plot", self.plot.to_string()),
        ]
    }

    pub fn to_text(&self) -> String {
        self.pairs().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Checks the keys the selected mode reads; errors name the offending key.
    pub fn validate(&self) -> Result<(), CliError> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 {
                Ok(())
            } else {
                Err(CliError::config(key, format!("must be positive, got {v}")))
            }
        };
        let nonneg = |key: &str, v: f64| {
            if v >= 0.0 {
                Ok(())
            } else {
                Err(CliError::config(key, format!("must be nonnegative, got {v}")))
            }
        };
        let monotone = |key: &str, g: &Grid| {
            let v = g.values();
            if v.is_empty() {
                return Err(CliError::config(key, "empty grid"));
            }
            if v.windows(2).all(|w| w[1] > w[0]) {
                Ok(v)
            } else {
                Err(CliError::config(key, "grid must be strictly increasing"))
            }
        };
        positive("omega0", self.omega0)?;
        positive("omega_c", self.omega_c)?;
        nonneg("alpha_a", self.alpha_a)?;
        if self.certify_growth == 0 {
            return Err(CliError::config("certify_growth", "must be at least 1"));
        }
        if self.certify_cap < self.certify_start + self.certify_growth {
            return Err(CliError::config("certify_cap", "leaves no room to grow from certify_start"));
        }
        match self.n_max {
            NMaxSetting::Fixed(0) => return Err(CliError::config("n_max", "must be at least 1")),
            NMaxSetting::Auto if self.certify_start == 0 => {
                return Err(CliError::config("certify_start", "must be at least 1"))
            }
            _ => {}
        }
        nonneg("t_a", self.t_a)?;
        if self.mode == Mode::Amplify {
            for (k, v) in [("alpha_l", self.alpha_l), ("alpha_r", self.alpha_r), ("t_r", self.t_r)] {
                nonneg(k, v)?;
            }
            nonneg("lambda_l", self.lambda_l)?;
            nonneg("lambda_r", self.lambda_r)?;
            let gates = monotone("gate_grid", &self.gate_grid)?;
            if gates.len() < 2 {
                return Err(CliError::config("gate_grid", "need at least 2 gate temperatures"));
            }
            if gates[0] < 0.0 {
                return Err(CliError::config("gate_grid", "temperatures must be nonnegative"));
            }
            return Ok(());
        }
        nonneg("alpha_sigma", self.alpha_sigma)?;
        nonneg("t_sigma", self.t_sigma)?;
        nonneg("lambda", self.lambda)?;
        let check_bias = |key: &str| -> Result<(), CliError> {
            nonneg("t0", self.t0)?;
            let biases = monotone(key, &self.bias_grid)?;
            if biases.iter().any(|b| b.abs() > 2.0 * self.t0) {
                return Err(CliError::config(key, format!("|delta_t| must not exceed 2 t0 = {}", 2.0 * self.t0)));
            }
            Ok(())
        };
        let check_lambdas = || -> Result<(), CliError> {
            let l = monotone("lambdas", &self.lambdas)?;
            if l[0] <= 0.0 {
                return Err(CliError::config("lambdas", "couplings must be positive"));
            }
            Ok(())
        };
        match self.mode {
            Mode::Steady => {}
            Mode::SweepLambda => {
                let l = monotone("lambda_grid", &self.lambda_grid)?;
                if l[0] < 0.0 {
                    return Err(CliError::config("lambda_grid", "couplings must be nonnegative"));
                }
                let levels = match self.n_max {
                    NMaxSetting::Fixed(n) => n,
                    NMaxSetting::Auto => self.certify_start,
                } + 1;
                if self.population_columns > levels {
                    return Err(CliError::config("population_columns", format!("exceeds the {levels} Fock levels")));
                }
            }
            Mode::SweepBias => {
                check_bias("bias_grid")?;
                check_lambdas()?;
            }
            Mode::Rectify => {
                check_bias("bias_grid")?;
                check_lambdas()?;
                if self.bias_grid.values()[0] <= 0.0 {
                    return Err(CliError::config("bias_grid", "rectify mode needs strictly positive biases"));
                }
            }
            Mode::Detune => {
                check_bias("bias_grid")?;
                positive("lambda", self.lambda)?;
                let d = monotone("detuning_grid", &self.detuning_grid)?;
                if d.iter().any(|&delta| self.omega0 - delta <= 0.0) {
                    return Err(CliError::config("detuning_grid", "epsilon = omega0 - delta must stay positive"));
                }
            }
            Mode::Amplify => unreachable!(),
        }
        Ok(())
    }
}
