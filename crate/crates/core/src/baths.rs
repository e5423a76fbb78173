//! Ohmic bath spectra, Bose occupations and the θ-gated sequential rates.

use std::fmt;

use crate::error::{Error, Result};

/// Which reservoir a bath couples to.
///
/// `a` is the phonon-mode bath, `σ` the qubit bath; the two-qubit device adds a
/// left and a right qubit bath.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BathLabel {
    PhononA,
    QubitSigma,
    LeftSigma,
    RightSigma,
}

impl BathLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            BathLabel::PhononA => "a",
            BathLabel::QubitSigma => "sigma",
            BathLabel::LeftSigma => "sigma_l",
            BathLabel::RightSigma => "sigma_r",
        }
    }

    /// Whether the bath couples through the mode operator `a` rather than a `σ_x`.
    pub fn is_mode_bath(self) -> bool {
        self == BathLabel::PhononA
    }
}

impl fmt::Display for BathLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec {
    pub alpha: f64,
    pub omega_c: f64,
    pub temperature: f64,
    pub label: BathLabel,
}

impl BathSpec {
    pub fn new(label: BathLabel, alpha: f64, omega_c: f64, temperature: f64) -> Result<Self> {
        let bath = Self {
            alpha,
            omega_c,
            temperature,
            label,
        };
        bath.validate()?;
        Ok(bath)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.omega_c.is_finite() && self.temperature.is_finite()) {
            return Err(Error::domain(format!("bath {} parameters must be finite", self.label)));
        }
        if self.alpha < 0.0 {
            return Err(Error::domain(format!("bath {}: alpha must be nonnegative", self.label)));
        }
        if self.omega_c <= 0.0 {
            return Err(Error::domain(format!("bath {}: omega_c must be positive", self.label)));
        }
        if self.temperature < 0.0 {
            return Err(Error::domain(format!("bath {}: temperature must be nonnegative", self.label)));
        }
        Ok(())
    }

    pub fn with_temperature(self, temperature: f64) -> Self {
        Self { temperature, ..self }
    }
}

/// `γ(ω) = α ω e^{−|ω|/ω_c}`, queried only at positive gaps.
pub fn ohmic_spectral(omega: f64, bath: &BathSpec) -> Result<f64> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::domain(format!("spectral density queried at non-positive frequency {omega}")));
    }
    Ok(bath.alpha * omega * (-omega.abs() / bath.omega_c).exp())
}

/// `n(ω) = 1/(e^{ω/T} − 1)`, exactly zero at `T = 0`.
pub fn bose_occupation(omega: f64, temperature: f64) -> Result<f64> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::domain(format!("Bose occupation queried at non-positive frequency {omega}")));
    }
    if !(temperature >= 0.0) {
        return Err(Error::domain(format!("negative temperature {temperature}")));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (omega / temperature).exp_m1())
}

/// Absorption and emission rates `(κ⁺, κ⁻) = θ(ω) γ(ω) (n, 1+n)`.
///
/// θ(0) = 0: a zero gap carries no rate at all.
pub fn sequential_rates(omega: f64, bath: &BathSpec) -> (f64, f64) {
    if !(omega > 0.0) || !omega.is_finite() {
        return (0.0, 0.0);
    }
    // Both calls are infallible for ω > 0 and a validated bath.
    let gamma = ohmic_spectral(omega, bath).unwrap_or(0.0);
    let n = bose_occupation(omega, bath.temperature).unwrap_or(0.0);
    (gamma * n, gamma * (1.0 + n))
}
