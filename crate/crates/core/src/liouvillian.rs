//! Population-transfer generators of the dressed master equation.
//!
//! In the dressed eigenbasis every dissipator connects eigenstates, so the
//! diagonal of the density matrix closes on itself and obeys a classical rate
//! equation `dP/dt = W P`. Generators here use the column convention
//! `W[(to, from)] = rate(from → to)` with `W[(i, i)] = −Σ_out`, so every column
//! sums to zero.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::baths::{sequential_rates, BathLabel, BathSpec};
use crate::error::{Error, Result};
use crate::hilbert::{build_dressed_basis, build_two_qubit_basis, DressedBasis, HybridSystem, TwoQubitSystem};

/// Per-bath generators over one dressed basis, their sum, and the gap table.
#[derive(Debug, Clone)]
pub struct RateMatrixSet {
    pub basis: DressedBasis,
    pub baths: BTreeMap<BathLabel, BathSpec>,
    pub per_bath: BTreeMap<BathLabel, DMatrix<f64>>,
    pub total: DMatrix<f64>,
    /// `gap_table[(i, j)] = E_i − E_j`.
    pub gap_table: DMatrix<f64>,
}

impl RateMatrixSet {
    pub fn dim(&self) -> usize {
        self.total.nrows()
    }

    pub fn generator(&self, label: BathLabel) -> Option<&DMatrix<f64>> {
        self.per_bath.get(&label)
    }

    /// Largest single transition rate (off-diagonal entry) of the total generator.
    pub fn max_rate(&self) -> f64 {
        let n = self.dim();
        let mut max = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                if i != j {
                    max = max.max(self.total[(i, j)]);
                }
            }
        }
        max
    }

    /// Largest escape rate `max_i |W_ii|`.
    pub fn max_escape_rate(&self) -> f64 {
        self.total.diagonal().iter().fold(0.0f64, |m, d| m.max(d.abs()))
    }
}

/// Squared coupling matrix element `|⟨hi|S†|lo⟩|²` between states `i` and `j`
/// for the operator attached to `label`.
fn coupling_weight(basis: &DressedBasis, label: BathLabel, i: usize, j: usize) -> f64 {
    if label.is_mode_bath() {
        let (hi, lo) = if basis.states[i].n >= basis.states[j].n { (i, j) } else { (j, i) };
        basis.a_dagger_element(hi, lo).powi(2)
    } else {
        basis.sigma_element(label, i, j).powi(2)
    }
}

fn check_bath_fits(basis: &DressedBasis, bath: &BathSpec) -> Result<()> {
    bath.validate()?;
    if !bath.label.is_mode_bath() && basis.qubit(bath.label).is_none() {
        return Err(Error::domain(format!("basis has no qubit coupled to bath {}", bath.label)));
    }
    Ok(())
}

/// Total rate for the jump `from → to` mediated by `bath`.
///
/// Upward jumps absorb the gap from the bath at `κ⁺`, downward jumps emit it at
/// `κ⁻`; a zero gap or a vanishing matrix element gives zero.
pub fn transition_rate(basis: &DressedBasis, bath: &BathSpec, from: usize, to: usize) -> Result<f64> {
    let dim = basis.dim();
    for idx in [from, to] {
        if idx >= dim {
            return Err(Error::DimensionMismatch { expected: dim, found: idx + 1 });
        }
    }
    check_bath_fits(basis, bath)?;
    if from == to {
        return Ok(0.0);
    }
    let w = coupling_weight(basis, bath.label, from, to);
    if w == 0.0 {
        return Ok(0.0);
    }
    let gap = basis.gap(to, from);
    let (absorb, emit) = sequential_rates(gap.abs(), bath);
    Ok(if gap > 0.0 {
        absorb * w
    } else if gap < 0.0 {
        emit * w
    } else {
        0.0
    })
}

fn bath_generator(basis: &DressedBasis, bath: &BathSpec) -> DMatrix<f64> {
    let dim = basis.dim();
    let mut w = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in (i + 1)..dim {
            let weight = coupling_weight(basis, bath.label, i, j);
            if weight == 0.0 {
                continue;
            }
            let gap = basis.gap(i, j);
            if gap == 0.0 {
                continue;
            }
            let (absorb, emit) = sequential_rates(gap.abs(), bath);
            let (hi, lo) = if gap > 0.0 { (i, j) } else { (j, i) };
            w[(hi, lo)] += absorb * weight;
            w[(lo, hi)] += emit * weight;
        }
    }
    close_columns(&mut w);
    w
}

/// Sets each diagonal entry to minus the column's off-diagonal sum.
pub(crate) fn close_columns(w: &mut DMatrix<f64>) {
    let dim = w.nrows();
    for j in 0..dim {
        w[(j, j)] = 0.0;
        let out: f64 = w.column(j).iter().sum();
        w[(j, j)] = -out;
    }
}

/// Assembles generators for an arbitrary basis and set of baths.
pub fn build_generators(basis: DressedBasis, baths: &[BathSpec]) -> Result<RateMatrixSet> {
    let dim = basis.dim();
    let mut per_bath = BTreeMap::new();
    let mut specs = BTreeMap::new();
    let mut total = DMatrix::zeros(dim, dim);
    for bath in baths {
        check_bath_fits(&basis, bath)?;
        if specs.insert(bath.label, *bath).is_some() {
            return Err(Error::domain(format!("bath {} given twice", bath.label)));
        }
        let w = bath_generator(&basis, bath);
        total += &w;
        per_bath.insert(bath.label, w);
    }
    let gap_table = DMatrix::from_fn(dim, dim, |i, j| basis.gap(i, j));
    Ok(RateMatrixSet {
        basis,
        baths: specs,
        per_bath,
        total,
        gap_table,
    })
}

fn expect_label(bath: &BathSpec, label: BathLabel) -> Result<()> {
    if bath.label == label {
        Ok(())
    } else {
        Err(Error::domain(format!("expected bath {label}, got {}", bath.label)))
    }
}

/// Single-qubit device: mode bath `a` plus qubit bath `σ`.
pub fn build_rate_matrices(sys: &HybridSystem, bath_a: &BathSpec, bath_sigma: &BathSpec) -> Result<RateMatrixSet> {
    expect_label(bath_a, BathLabel::PhononA)?;
    expect_label(bath_sigma, BathLabel::QubitSigma)?;
    build_generators(build_dressed_basis(sys)?, &[*bath_a, *bath_sigma])
}

/// Three-terminal device: mode bath `a` plus left and right qubit baths.
pub fn build_two_qubit_rate_matrices(
    sys: &TwoQubitSystem,
    bath_a: &BathSpec,
    bath_l: &BathSpec,
    bath_r: &BathSpec,
) -> Result<RateMatrixSet> {
    expect_label(bath_a, BathLabel::PhononA)?;
    expect_label(bath_l, BathLabel::LeftSigma)?;
    expect_label(bath_r, BathLabel::RightSigma)?;
    build_generators(build_two_qubit_basis(sys)?, &[*bath_a, *bath_l, *bath_r])
}

/// Weak-coupling split `W ≈ M_a + M_σ + (2λ/ω0)² M_λ` of the single-qubit generator.
///
/// Populations are ordered `[P_{0↑}, …, P_{N↑}, P_{0↓}, …, P_{N↓}]` as in the
/// dressed basis. `M_σ` holds the bare flips `↑_m ↔ ↓_m` at `κ±_σ(ε)`; `M_λ`
/// the one-phonon side bands `↑_m ↔ ↓_{m±1}` at `κ±_σ(ε ± ω0)` and
/// `κ±_σ(ω0 − ε)` weighted by the phonon number.
#[derive(Debug, Clone)]
pub struct WeakCouplingGenerators {
    pub m_a: DMatrix<f64>,
    pub m_sigma: DMatrix<f64>,
    pub m_lambda: DMatrix<f64>,
}

pub fn weak_coupling_generators(
    sys: &HybridSystem,
    bath_a: &BathSpec,
    bath_sigma: &BathSpec,
) -> Result<WeakCouplingGenerators> {
    sys.validate()?;
    expect_label(bath_a, BathLabel::PhononA)?;
    expect_label(bath_sigma, BathLabel::QubitSigma)?;
    bath_a.validate()?;
    bath_sigma.validate()?;
    if sys.epsilon <= 0.0 {
        return Err(Error::domain("weak-coupling expansion assumes epsilon > 0"));
    }
    let levels = sys.n_max + 1;
    let dim = 2 * levels;
    let up = |m: usize| m;
    let down = |m: usize| levels + m;
    let (eps, w0) = (sys.epsilon, sys.omega0);

    let mut m_a = DMatrix::zeros(dim, dim);
    let (ka_up, ka_down) = sequential_rates(w0, bath_a);
    for branch in [0, levels] {
        for m in 0..sys.n_max {
            let k = (m + 1) as f64;
            m_a[(branch + m + 1, branch + m)] = ka_up * k;
            m_a[(branch + m, branch + m + 1)] = ka_down * k;
        }
    }
    close_columns(&mut m_a);

    let mut m_sigma = DMatrix::zeros(dim, dim);
    let (ks_up, ks_down) = sequential_rates(eps, bath_sigma);
    for m in 0..levels {
        m_sigma[(up(m), down(m))] = ks_up;
        m_sigma[(down(m), up(m))] = ks_down;
    }
    close_columns(&mut m_sigma);

    let mut m_lambda = DMatrix::zeros(dim, dim);
    let (sum_up, sum_down) = sequential_rates(w0 + eps, bath_sigma);
    let (red_up, red_down) = sequential_rates(w0 - eps, bath_sigma);
    let (blue_up, blue_down) = sequential_rates(eps - w0, bath_sigma);
    for m in 0..sys.n_max {
        let k = (m + 1) as f64;
        // ↓_m ↔ ↑_{m+1}, gap ε + ω0
        m_lambda[(up(m + 1), down(m))] += k * sum_up;
        m_lambda[(down(m), up(m + 1))] += k * sum_down;
        // ↑_m ↔ ↓_{m+1}, gap ε − ω0; only one orientation survives the θ gate
        m_lambda[(up(m), down(m + 1))] += k * (red_down + blue_up);
        m_lambda[(down(m + 1), up(m))] += k * (red_up + blue_down);
    }
    close_columns(&mut m_lambda);

    Ok(WeakCouplingGenerators { m_a, m_sigma, m_lambda })
}
