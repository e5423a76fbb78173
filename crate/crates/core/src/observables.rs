//! Heat currents and qubit polarization.
//!
//! Sign convention: `J_μ > 0` means energy flows into bath `μ`. For the
//! two-bath device `J_ss ≡ J_σ = −J_a`, positive when the mode bath is hot.

use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::baths::{ohmic_spectral, bose_occupation, sequential_rates, BathLabel, BathSpec};
use crate::error::{Error, Result};
use crate::hilbert::{displacement_matrix, HybridSystem};
use crate::liouvillian::RateMatrixSet;
use crate::steadystate::{strong_coupling_populations, SteadyStateResult};

#[derive(Debug, Clone, PartialEq)]
pub struct CurrentReport {
    pub j_per_bath: BTreeMap<BathLabel, f64>,
    /// `J_σ` for the two-bath device, the drain current `J^σ_R` for the three-bath one.
    pub j_ss: f64,
    /// `|Σ_μ J_μ|`
    pub conservation_residual: f64,
    /// `Σ_μ Σ_{i≠j} |E_i − E_j| Γ^μ_{i→j} P_i`; each `J_μ` is a cancelling sum
    /// of these fluxes, so its round-off is of order `f64::EPSILON` times this.
    pub gross_flux: f64,
}

/// Fraction of the gross flux below which a current is treated as zero when
/// checking conservation.
pub const RESOLVABLE_FRACTION: f64 = 1e-4;

impl CurrentReport {
    pub fn get(&self, label: BathLabel) -> f64 {
        self.j_per_bath.get(&label).copied().unwrap_or(0.0)
    }

    /// `|Σ J| / max(|J_μ|, floor)`
    pub fn relative_imbalance(&self, floor: f64) -> f64 {
        let scale = self.j_per_bath.values().fold(floor, |m, j| m.max(j.abs()));
        self.conservation_residual / scale
    }

    /// [`relative_imbalance`](Self::relative_imbalance) with currents below
    /// [`RESOLVABLE_FRACTION`] of the gross flux counted as round-off.
    pub fn conservation_error(&self) -> f64 {
        self.relative_imbalance(RESOLVABLE_FRACTION * self.gross_flux)
    }
}

/// `J_μ = Σ_{i,j} (E_i − E_j) Γ^μ_{i→j} P_i`: downward jumps deposit their gap
/// into the bath, upward jumps withdraw it.
pub fn heat_current_for(label: BathLabel, populations: &DVector<f64>, rates: &RateMatrixSet) -> Result<f64> {
    let dim = rates.dim();
    if populations.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: populations.len() });
    }
    let w = rates
        .generator(label)
        .ok_or_else(|| Error::domain(format!("no bath {label} in rate set")))?;
    let mut total = 0.0;
    for from in 0..dim {
        let p = populations[from];
        if p == 0.0 {
            continue;
        }
        let mut outflow = 0.0;
        for to in 0..dim {
            if to != from {
                outflow += rates.gap_table[(from, to)] * w[(to, from)];
            }
        }
        total += outflow * p;
    }
    Ok(total)
}

pub fn heat_current(label: BathLabel, pops: &SteadyStateResult, rates: &RateMatrixSet) -> Result<f64> {
    heat_current_for(label, &pops.populations, rates)
}

pub fn current_report(pops: &SteadyStateResult, rates: &RateMatrixSet) -> Result<CurrentReport> {
    let mut j_per_bath = BTreeMap::new();
    for &label in rates.per_bath.keys() {
        j_per_bath.insert(label, heat_current(label, pops, rates)?);
    }
    let j_ss = j_per_bath
        .get(&BathLabel::QubitSigma)
        .or_else(|| j_per_bath.get(&BathLabel::RightSigma))
        .copied()
        .unwrap_or(0.0);
    let conservation_residual = j_per_bath.values().sum::<f64>().abs();
    let dim = rates.dim();
    let mut gross_flux = 0.0;
    for w in rates.per_bath.values() {
        for from in 0..dim {
            for to in (0..dim).filter(|&to| to != from) {
                gross_flux += rates.gap_table[(from, to)].abs() * w[(to, from)] * pops.populations[from];
            }
        }
    }
    Ok(CurrentReport {
        j_per_bath,
        j_ss,
        conservation_residual,
        gross_flux,
    })
}

/// Mode-bath form of the steady current,
/// `J_ss = ω0 Σ_{m,η} m [κ⁺_a(ω0) P_{m−1,η} − κ⁻_a(ω0) P_{m,η}]`,
/// i.e. the energy drawn from the mode bath (equal to `−J_a`).
pub fn weak_limit_current(populations: &DVector<f64>, sys: &HybridSystem, bath_a: &BathSpec) -> Result<f64> {
    let levels = sys.n_max + 1;
    if populations.len() != 2 * levels {
        return Err(Error::DimensionMismatch { expected: 2 * levels, found: populations.len() });
    }
    let (absorb, emit) = sequential_rates(sys.omega0, bath_a);
    let mut j = 0.0;
    for branch in [0, levels] {
        for m in 1..levels {
            j += m as f64 * (absorb * populations[branch + m - 1] - emit * populations[branch + m]);
        }
    }
    Ok(sys.omega0 * j)
}

/// Strong-coupling current: the qubit-bath current evaluated on the closed-form
/// populations (both branches thermal at `T_a`),
/// `J ≈ Σ_{n,m} D²_nm(2λ/ω0) Δ [κ⁻_σ(Δ) P_high − κ⁺_σ(Δ) P_low]`
/// with `Δ = |E_{n↑} − E_{m↓}|`.
pub fn strong_coupling_current(sys: &HybridSystem, bath_a: &BathSpec, bath_sigma: &BathSpec) -> Result<f64> {
    let levels = sys.n_max + 1;
    let p = strong_coupling_populations(sys, bath_a)?;
    let d = displacement_matrix(levels, sys.displacement())?;
    let mut j = 0.0;
    for n in 0..levels {
        for m in 0..levels {
            let weight = d[(n, m)] * d[(n, m)];
            if weight == 0.0 {
                continue;
            }
            let gap = sys.epsilon + sys.omega0 * (n as f64 - m as f64);
            let (up, down) = (p[n], p[levels + m]);
            let (high, low) = if gap > 0.0 { (up, down) } else { (down, up) };
            let (absorb, emit) = sequential_rates(gap.abs(), bath_sigma);
            j += weight * gap.abs() * (emit * high - absorb * low);
        }
    }
    Ok(j)
}

/// The strong-coupling current expression in its printed form, with the
/// `[1 + 2n_σ]` weights:
///
/// `Σ_{n,m} D²_nm g {θ(−g) γ_σ(−g) [1+2n_σ(−g)] P_{n↑} − θ(g) γ_σ(g) [1+2n_σ(g)] P_{m↓}}`,
/// `g = E_{n↑} − E_{m↓}`.
///
/// Kept for comparison only: every term is ≤ 0, so it neither vanishes at
/// `T_a = T_σ` nor changes sign with the bias. See [`strong_coupling_current`].
pub fn strong_coupling_current_printed(sys: &HybridSystem, bath_a: &BathSpec, bath_sigma: &BathSpec) -> Result<f64> {
    let levels = sys.n_max + 1;
    let p = strong_coupling_populations(sys, bath_a)?;
    let d = displacement_matrix(levels, sys.displacement())?;
    let weight = |omega: f64| -> Result<f64> {
        if omega > 0.0 {
            Ok(ohmic_spectral(omega, bath_sigma)? * (1.0 + 2.0 * bose_occupation(omega, bath_sigma.temperature)?))
        } else {
            Ok(0.0)
        }
    };
    let mut j = 0.0;
    for n in 0..levels {
        for m in 0..levels {
            let g = sys.epsilon + sys.omega0 * (n as f64 - m as f64);
            let d2 = d[(n, m)] * d[(n, m)];
            j += d2 * g * (weight(-g)? * p[n] - weight(g)? * p[levels + m]);
        }
    }
    Ok(j)
}

/// `⟨σ_z⟩ = Σ_n (P_{n↑} − P_{n↓})` for the `(up, down)` layout.
pub fn qubit_polarization(populations: &DVector<f64>) -> Result<f64> {
    let len = populations.len();
    if len == 0 || len % 2 != 0 {
        return Err(Error::DimensionMismatch { expected: len + len % 2, found: len });
    }
    let levels = len / 2;
    let up: f64 = populations.rows(0, levels).sum();
    let down: f64 = populations.rows(levels, levels).sum();
    Ok((up - down).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouvillian::build_rate_matrices;
    use crate::steadystate::{decoupled_populations, solve_point};
    use approx::assert_abs_diff_eq;

    fn baths(t_a: f64, t_s: f64) -> (BathSpec, BathSpec) {
        (
            BathSpec::new(BathLabel::PhononA, 0.005, 10.0, t_a).unwrap(),
            BathSpec::new(BathLabel::QubitSigma, 0.005, 10.0, t_s).unwrap(),
        )
    }

    #[test]
    fn equilibrium_carries_no_current() {
        let sys = HybridSystem::new(1.0, 1.0, 0.6, 20).unwrap();
        let (a, s) = baths(0.8, 0.8);
        let (rates, result) = solve_point(&sys, &a, &s).unwrap();
        let report = current_report(&result, &rates).unwrap();
        let scale = 1e-12 * rates.max_rate();
        assert!(report.get(BathLabel::PhononA).abs() < scale);
        assert!(report.get(BathLabel::QubitSigma).abs() < scale);
    }

    #[test]
    fn decoupled_subsystems_carry_no_current() {
        let sys = HybridSystem::new(1.0, 1.0, 0.0, 20).unwrap();
        let (a, s) = baths(1.5, 0.5);
        let (rates, result) = solve_point(&sys, &a, &s).unwrap();
        let report = current_report(&result, &rates).unwrap();
        assert!(report.j_ss.abs() < 1e-18);
        assert!(report.get(BathLabel::PhononA).abs() < 1e-18);
    }

    #[test]
    fn heat_flows_from_hot_mode_bath() {
        let sys = HybridSystem::new(1.0, 1.0, 0.05, 30).unwrap();
        let (a, s) = baths(1.5, 0.5);
        let (rates, result) = solve_point(&sys, &a, &s).unwrap();
        let report = current_report(&result, &rates).unwrap();
        assert!(report.get(BathLabel::PhononA) < 0.0);
        assert!(report.get(BathLabel::QubitSigma) > 0.0);
        assert!(report.relative_imbalance(0.0) < 1e-10);
        let weak = weak_limit_current(&result.populations, &sys, &a).unwrap();
        assert_abs_diff_eq!(weak, -report.get(BathLabel::PhononA), epsilon = 1e-12 * weak.abs());
    }

    #[test]
    fn weak_limit_vanishes_on_mode_gibbs() {
        let sys = HybridSystem::new(1.0, 1.0, 0.0, 25).unwrap();
        let (a, s) = baths(1.5, 0.5);
        let p0 = decoupled_populations(&sys, &a, &s);
        assert!(weak_limit_current(&p0, &sys, &a).unwrap().abs() < 1e-16);
        let gibbs_a = decoupled_populations(&sys, &a, &a.with_temperature(1.5));
        assert!(weak_limit_current(&gibbs_a, &sys, &a).unwrap().abs() < 1e-16);
    }

    #[test]
    fn strong_current_vanishes_at_equilibrium_and_large_coupling() {
        let (a, s) = baths(1.0, 1.0);
        let sys = HybridSystem::new(1.0, 1.0, 3.0, 40).unwrap();
        let j = strong_coupling_current(&sys, &a, &s).unwrap();
        assert!(j.abs() < 1e-18, "{j}");
        let (a, s) = baths(1.5, 0.5);
        let j3 = strong_coupling_current(&sys, &a, &s).unwrap();
        let j6 = strong_coupling_current(&sys.with_lambda(6.0), &a, &s).unwrap();
        assert!(j3 > 0.0);
        assert!(j6 < 1e-6 * j3);
    }

    #[test]
    fn printed_strong_current_is_sign_definite() {
        let sys = HybridSystem::new(1.0, 1.0, 3.0, 40).unwrap();
        for (t_a, t_s) in [(1.5, 0.5), (1.0, 1.0), (0.5, 1.5)] {
            let (a, s) = baths(t_a, t_s);
            assert!(strong_coupling_current_printed(&sys, &a, &s).unwrap() < 0.0);
        }
    }

    #[test]
    fn polarization_bounds() {
        let sys = HybridSystem::new(0.0, 1.0, 0.3, 10).unwrap();
        let (a, s) = baths(0.9, 0.9);
        let rates = build_rate_matrices(&sys, &a, &s).unwrap();
        let (_, result) = solve_point(&sys, &a, &s).unwrap();
        assert_eq!(result.populations.len(), rates.dim());
        assert_abs_diff_eq!(qubit_polarization(&result.populations).unwrap(), 0.0, epsilon = 1e-14);
        let ground = DVector::from_fn(4, |i, _| if i == 2 { 1.0 } else { 0.0 });
        assert_eq!(qubit_polarization(&ground).unwrap(), -1.0);
        assert!(qubit_polarization(&DVector::from_element(3, 1.0 / 3.0)).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let sys = HybridSystem::new(1.0, 1.0, 0.3, 4).unwrap();
        let (a, s) = baths(1.0, 0.5);
        let rates = build_rate_matrices(&sys, &a, &s).unwrap();
        let wrong = DVector::from_element(3, 1.0 / 3.0);
        assert!(heat_current_for(BathLabel::PhononA, &wrong, &rates).is_err());
        assert!(weak_limit_current(&wrong, &sys, &a).is_err());
    }
}
