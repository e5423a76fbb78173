//! Dressed eigenbasis of the qubit–phonon Hamiltonian.
//!
//! Because `σ_z` commutes with the system Hamiltonian, every eigenstate is a
//! qubit projection tensored with a Fock state displaced by `±λ/ω0`. Only the
//! matrix elements of the bath coupling operators are needed downstream, so
//! the displaced states themselves are never materialized; the basis stores
//! energies and the Franck–Condon overlaps `D_nm(x)`.

use nalgebra::DMatrix;

use crate::baths::BathLabel;
use crate::error::{Error, Result};

/// Qubit–phonon system with a hard Fock cutoff (`0..=n_max`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridSystem {
    pub epsilon: f64,
    pub omega0: f64,
    pub lambda: f64,
    pub n_max: usize,
}

impl HybridSystem {
    pub fn new(epsilon: f64, omega0: f64, lambda: f64, n_max: usize) -> Result<Self> {
        let sys = Self {
            epsilon,
            omega0,
            lambda,
            n_max,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.omega0.is_finite() && self.lambda.is_finite()) {
            return Err(Error::domain("system parameters must be finite"));
        }
        if self.omega0 <= 0.0 {
            return Err(Error::domain(format!("omega0 must be positive, got {}", self.omega0)));
        }
        if self.lambda < 0.0 {
            return Err(Error::domain(format!("lambda must be nonnegative, got {}", self.lambda)));
        }
        if self.n_max < 1 {
            return Err(Error::domain("n_max must be at least 1"));
        }
        Ok(())
    }

    /// Relative displacement `2λ/ω0` between the two qubit branches.
    pub fn displacement(&self) -> f64 {
        2.0 * self.lambda / self.omega0
    }

    /// Polaron shift `-λ²/ω0` common to both branches.
    pub fn polaron_shift(&self) -> f64 {
        -self.lambda * self.lambda / self.omega0
    }

    pub fn energy(&self, branch: Branch, n: usize) -> f64 {
        self.omega0 * n as f64 + self.polaron_shift() + branch.sign() * self.epsilon / 2.0
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    pub fn with_n_max(self, n_max: usize) -> Self {
        Self { n_max, ..self }
    }
}

/// Qubit projection of a single-qubit dressed state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    Up,
    Down,
}

impl Branch {
    pub const ALL: [Branch; 2] = [Branch::Up, Branch::Down];

    /// Position in the `(up, down)` branch ordering.
    pub fn index(self) -> usize {
        match self {
            Branch::Up => 0,
            Branch::Down => 1,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Branch::Up => 1.0,
            Branch::Down => -1.0,
        }
    }
}

/// Orientation of a `σ_x` matrix element between the two qubit branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `⟨φ↑_n|σ_x|φ↓_m⟩`
    UpFromDown,
    /// `⟨φ↓_n|σ_x|φ↑_m⟩`
    DownFromUp,
}

/// Two qubits sharing one phonon mode, each qubit coupled to its own bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitSystem {
    pub eps_l: f64,
    pub eps_r: f64,
    pub lambda_l: f64,
    pub lambda_r: f64,
    pub omega0: f64,
    pub n_max: usize,
}

impl TwoQubitSystem {
    pub fn validate(&self) -> Result<()> {
        let all = [self.eps_l, self.eps_r, self.lambda_l, self.lambda_r, self.omega0];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("system parameters must be finite"));
        }
        if self.omega0 <= 0.0 {
            return Err(Error::domain(format!("omega0 must be positive, got {}", self.omega0)));
        }
        if self.lambda_l < 0.0 || self.lambda_r < 0.0 {
            return Err(Error::domain("qubit-phonon couplings must be nonnegative"));
        }
        Ok(())
    }

    /// Displacements `g_1..g_4` of the spin basis `|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩`.
    pub fn displaced_coefficients(&self) -> [f64; 4] {
        let sum = (self.lambda_l + self.lambda_r) / self.omega0;
        let diff = (self.lambda_l - self.lambda_r) / self.omega0;
        [sum, diff, -diff, -sum]
    }

    /// Branch energy offsets `Λ_1..Λ_4`.
    pub fn displaced_energies(&self) -> [f64; 4] {
        let levels = self.branch_levels();
        [0, 1, 2, 3].map(|i| levels[i].offset())
    }

    fn branch_levels(&self) -> Vec<BranchLevel> {
        let g = self.displaced_coefficients();
        let sum_shift = -(self.lambda_l + self.lambda_r).powi(2) / self.omega0;
        let diff_shift = -(self.lambda_l - self.lambda_r).powi(2) / self.omega0;
        let (l, r) = (self.eps_l, self.eps_r);
        vec![
            BranchLevel::new("uu", (l + r) / 2.0, sum_shift, g[0]),
            BranchLevel::new("ud", (l - r) / 2.0, diff_shift, g[1]),
            BranchLevel::new("du", (-l + r) / 2.0, diff_shift, g[2]),
            BranchLevel::new("dd", -(l + r) / 2.0, sum_shift, g[3]),
        ]
    }
}

/// Franck–Condon overlap of Fock states displaced by `x`:
///
/// `D_nm(x) = e^{-x²/2} Σ_l (-1)^l √(n! m!) x^{n+m-2l} / ((n-l)! (m-l)! l!)`
///
/// Evaluated through the equivalent associated-Laguerre form
/// `D_nm(x) = (-1)^m e^{-x²/2} √(m!/n!) x^{n-m} L_m^{(n-m)}(x²)` (for `n ≥ m`)
/// with the prefactor carried in log space, so large indices neither overflow
/// nor lose the result to cancellation in the alternating sum.
pub fn displacement_coefficient(n: usize, m: usize, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("displacement must be finite, got {x}")));
    }
    let (hi, lo) = if n >= m { (n, m) } else { (m, n) };
    let ln_fact = ln_factorials(hi);
    let mut out = 0.0;
    laguerre_run(lo, hi - lo, x, &ln_fact, |j, value| {
        if j == lo {
            out = value;
        }
    });
    Ok(out)
}

/// Full symmetric table `D_nm(x)` for `0 ≤ n, m < dim`.
pub fn displacement_matrix(dim: usize, x: f64) -> Result<DMatrix<f64>> {
    if !x.is_finite() {
        return Err(Error::domain(format!("displacement must be finite, got {x}")));
    }
    let mut d = DMatrix::zeros(dim, dim);
    if dim == 0 {
        return Ok(d);
    }
    let ln_fact = ln_factorials(dim - 1);
    for k in 0..dim {
        laguerre_run(dim - 1 - k, k, x, &ln_fact, |j, value| {
            d[(j + k, j)] = value;
            d[(j, j + k)] = value;
        });
    }
    Ok(d)
}

fn ln_factorials(max: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(max + 1);
    let mut acc = 0.0f64;
    table.push(0.0);
    for i in 1..=max {
        acc += (i as f64).ln();
        table.push(acc);
    }
    table
}

/// Walks `j = 0..=last`, emitting `D_{j+k, j}(x)` for each `j`.
///
/// The three-term recurrence in the degree is run on `L_j^{(k)}(x²)` with a
/// running log scale so intermediate values stay inside the f64 range.
fn laguerre_run(last: usize, k: usize, x: f64, ln_fact: &[f64], mut emit: impl FnMut(usize, f64)) {
    const RESCALE: f64 = 1e150;
    let y = x * x;
    let a = k as f64;

    if x == 0.0 {
        // Only the k = 0 diagonal survives: D_jj(0) = (-1)^j.
        for j in 0..=last {
            let value = if k == 0 { parity(j) } else { 0.0 };
            emit(j, value);
        }
        return;
    }

    let ln_abs_x = x.abs().ln();
    let x_sign = if x < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
    let mut ln_scale = 0.0f64;
    let mut prev = 0.0f64;
    let mut cur = 1.0f64;
    for j in 0..=last {
        if j == 1 {
            prev = cur;
            cur = 1.0 + a - y;
        } else if j > 1 {
            let jf = (j - 1) as f64;
            let next = ((2.0 * jf + 1.0 + a - y) * cur - (jf + a) * prev) / (jf + 1.0);
            prev = cur;
            cur = next;
        }
        if cur.abs() > RESCALE {
            prev /= RESCALE;
            cur /= RESCALE;
            ln_scale += RESCALE.ln();
        }

        let value = if cur == 0.0 {
            0.0
        } else {
            let ln_mag = -0.5 * y + 0.5 * (ln_fact[j] - ln_fact[j + k]) + a * ln_abs_x
                + cur.abs().ln()
                + ln_scale;
            parity(j) * x_sign * cur.signum() * ln_mag.exp()
        };
        emit(j, value);
    }
}

fn parity(n: usize) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `⟨φ↑_n|σ_x|φ↓_m⟩ = (-1)^n D_nm(2λ/ω0)`; the reverse orientation carries `(-1)^m`.
pub fn sigma_x_element(n: usize, m: usize, direction: Direction, sys: &HybridSystem) -> Result<f64> {
    check_index(n, sys.n_max)?;
    check_index(m, sys.n_max)?;
    let d = displacement_coefficient(n, m, sys.displacement())?;
    Ok(match direction {
        Direction::UpFromDown => parity(n) * d,
        Direction::DownFromUp => parity(m) * d,
    })
}

/// `⟨φ^η_n|a†|φ^η_m⟩ = √(m+1) δ_{n,m+1} − g_η δ_{n,m}` with `g_↑ = λ/ω0`, `g_↓ = −λ/ω0`.
pub fn a_dagger_element(n: usize, m: usize, branch: Branch, sys: &HybridSystem) -> Result<f64> {
    check_index(n, sys.n_max)?;
    check_index(m, sys.n_max)?;
    let g = branch.sign() * sys.lambda / sys.omega0;
    Ok(a_dagger(n, m, g))
}

fn a_dagger(n: usize, m: usize, g: f64) -> f64 {
    if n == m + 1 {
        ((m + 1) as f64).sqrt()
    } else if n == m {
        -g
    } else {
        0.0
    }
}

fn check_index(index: usize, n_max: usize) -> Result<()> {
    if index > n_max {
        Err(Error::IndexOutOfRange { index, n_max })
    } else {
        Ok(())
    }
}

/// Energy bookkeeping for one spin branch: `E_n = ω0·n + bias + shift`.
///
/// Bias (qubit Zeeman part) and shift (polaron part) are kept apart so that
/// gaps between branches sharing a shift come out exact; resonant gaps must be
/// exactly zero for the θ(0) = 0 convention to bite.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchLevel {
    pub label: &'static str,
    pub bias: f64,
    pub shift: f64,
    pub g: f64,
}

impl BranchLevel {
    fn new(label: &'static str, bias: f64, shift: f64, g: f64) -> Self {
        Self {
            label,
            bias,
            shift,
            g,
        }
    }

    pub fn offset(&self) -> f64 {
        self.bias + self.shift
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressedState {
    pub branch: usize,
    pub n: usize,
    pub energy: f64,
}

/// A qubit `σ_x` coupling: which branch pairs it flips, and the overlap table.
#[derive(Debug, Clone)]
pub struct QubitChannel {
    pub label: BathLabel,
    /// Ordered pairs `(a, b)` with `⟨n,a|σ_x|m,b⟩ = (-1)^n D_nm(x)`.
    pub pairs: Vec<(usize, usize)>,
    pub x: f64,
    overlap: DMatrix<f64>,
}

impl QubitChannel {
    pub fn overlap(&self, n: usize, m: usize) -> f64 {
        self.overlap[(n, m)]
    }
}

/// Enumerated dressed eigenstates, ordered by branch then `n` ascending.
#[derive(Debug, Clone)]
pub struct DressedBasis {
    pub n_max: usize,
    pub omega0: f64,
    pub branches: Vec<BranchLevel>,
    pub states: Vec<DressedState>,
    pub qubits: Vec<QubitChannel>,
}

impl DressedBasis {
    fn assemble(
        n_max: usize,
        omega0: f64,
        branches: Vec<BranchLevel>,
        couplings: Vec<(BathLabel, Vec<(usize, usize)>, f64)>,
    ) -> Result<Self> {
        let levels = n_max + 1;
        let states = branches
            .iter()
            .enumerate()
            .flat_map(|(b, level)| {
                (0..levels).map(move |n| DressedState {
                    branch: b,
                    n,
                    energy: omega0 * n as f64 + level.offset(),
                })
            })
            .collect();
        let qubits = couplings
            .into_iter()
            .map(|(label, pairs, x)| {
                Ok(QubitChannel {
                    label,
                    pairs,
                    x,
                    overlap: displacement_matrix(levels, x)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            n_max,
            omega0,
            branches,
            states,
            qubits,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn levels(&self) -> usize {
        self.n_max + 1
    }

    pub fn index(&self, branch: usize, n: usize) -> usize {
        branch * self.levels() + n
    }

    /// `E_i − E_j`, with branch offsets differenced before adding `ω0·(n_i − n_j)`.
    pub fn gap(&self, i: usize, j: usize) -> f64 {
        let (si, sj) = (&self.states[i], &self.states[j]);
        let (bi, bj) = (&self.branches[si.branch], &self.branches[sj.branch]);
        (bi.bias - bj.bias) + (bi.shift - bj.shift) + self.omega0 * (si.n as f64 - sj.n as f64)
    }

    pub fn qubit(&self, label: BathLabel) -> Option<&QubitChannel> {
        self.qubits.iter().find(|q| q.label == label)
    }

    /// `⟨i|σ_x|j⟩` for the qubit coupled to `label`; zero for unconnected branches.
    pub fn sigma_element(&self, label: BathLabel, i: usize, j: usize) -> f64 {
        let Some(q) = self.qubit(label) else {
            return 0.0;
        };
        let (si, sj) = (&self.states[i], &self.states[j]);
        for &(a, b) in &q.pairs {
            if (si.branch, sj.branch) == (a, b) {
                return parity(si.n) * q.overlap(si.n, sj.n);
            }
            if (si.branch, sj.branch) == (b, a) {
                return parity(sj.n) * q.overlap(si.n, sj.n);
            }
        }
        0.0
    }

    /// `⟨i|a†|j⟩`; zero across branches.
    pub fn a_dagger_element(&self, i: usize, j: usize) -> f64 {
        let (si, sj) = (&self.states[i], &self.states[j]);
        if si.branch != sj.branch {
            return 0.0;
        }
        a_dagger(si.n, sj.n, self.branches[si.branch].g)
    }
}

/// Single-qubit basis: branches `(up, down)`, one `σ_x` channel with `x = 2λ/ω0`.
pub fn build_dressed_basis(sys: &HybridSystem) -> Result<DressedBasis> {
    sys.validate()?;
    let shift = sys.polaron_shift();
    let g = sys.lambda / sys.omega0;
    let branches = vec![
        BranchLevel::new("up", sys.epsilon / 2.0, shift, g),
        BranchLevel::new("down", -sys.epsilon / 2.0, shift, -g),
    ];
    DressedBasis::assemble(
        sys.n_max,
        sys.omega0,
        branches,
        vec![(BathLabel::QubitSigma, vec![(0, 1)], sys.displacement())],
    )
}

/// Two-qubit basis over `|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩`: `σ^L_x` flips pairs (1,3),(2,4)
/// and `σ^R_x` flips pairs (1,2),(3,4).
pub fn build_two_qubit_basis(sys: &TwoQubitSystem) -> Result<DressedBasis> {
    sys.validate()?;
    DressedBasis::assemble(
        sys.n_max,
        sys.omega0,
        sys.branch_levels(),
        vec![
            (BathLabel::LeftSigma, vec![(0, 2), (1, 3)], 2.0 * sys.lambda_l / sys.omega0),
            (BathLabel::RightSigma, vec![(0, 1), (2, 3)], 2.0 * sys.lambda_r / sys.omega0),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sys(epsilon: f64, lambda: f64, n_max: usize) -> HybridSystem {
        HybridSystem::new(epsilon, 1.0, lambda, n_max).unwrap()
    }

    #[test]
    fn displacement_trivial_values() {
        assert_eq!(displacement_coefficient(0, 0, 0.0).unwrap(), 1.0);
        assert_eq!(displacement_coefficient(1, 1, 0.0).unwrap(), -1.0);
        assert_eq!(displacement_coefficient(3, 5, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn displacement_first_offdiagonal() {
        // direct summation: only l = 0 contributes, 0.2 e^{-0.02}
        let expected = 0.2 * (-0.02f64).exp();
        assert_abs_diff_eq!(displacement_coefficient(0, 1, 0.2).unwrap(), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(expected, 0.196040, epsilon = 1e-6);
    }

    #[test]
    fn displacement_rejects_nonfinite() {
        assert!(matches!(displacement_coefficient(0, 0, f64::NAN), Err(Error::Domain(_))));
        assert!(displacement_matrix(3, f64::INFINITY).is_err());
    }

    #[test]
    fn matrix_matches_pointwise() {
        let x = 1.7;
        let d = displacement_matrix(12, x).unwrap();
        for n in 0..12 {
            for m in 0..12 {
                assert_abs_diff_eq!(d[(n, m)], displacement_coefficient(n, m, x).unwrap(), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn negative_displacement_flips_odd_offsets() {
        let x = 0.9;
        for (n, m) in [(0, 1), (2, 5), (4, 4), (3, 1)] {
            let p = displacement_coefficient(n, m, x).unwrap();
            let q = displacement_coefficient(n, m, -x).unwrap();
            let s = if (n + m) % 2 == 0 { 1.0 } else { -1.0 };
            assert_abs_diff_eq!(q, s * p, epsilon = 1e-15);
        }
    }

    #[test]
    fn sigma_x_at_zero_coupling() {
        let s = sys(1.0, 0.0, 4);
        for n in 0..=4 {
            for dir in [Direction::UpFromDown, Direction::DownFromUp] {
                assert_eq!(sigma_x_element(n, n, dir, &s).unwrap().abs(), 1.0);
                for m in (0..=4).filter(|&m| m != n) {
                    assert_eq!(sigma_x_element(n, m, dir, &s).unwrap(), 0.0);
                }
            }
        }
    }

    #[test]
    fn sigma_x_side_band() {
        let s = sys(1.0, 0.1, 3);
        let v = sigma_x_element(0, 1, Direction::UpFromDown, &s).unwrap();
        assert_abs_diff_eq!(v, 0.196040, epsilon = 1e-6);
        let w = sigma_x_element(0, 1, Direction::DownFromUp, &s).unwrap();
        assert_abs_diff_eq!(v * v, w * w, epsilon = 1e-16);
    }

    #[test]
    fn sigma_x_index_out_of_range() {
        let s = sys(1.0, 0.1, 3);
        assert_eq!(
            sigma_x_element(4, 0, Direction::UpFromDown, &s),
            Err(Error::IndexOutOfRange { index: 4, n_max: 3 })
        );
    }

    #[test]
    fn a_dagger_values() {
        let s = sys(1.0, 0.3, 3);
        assert_eq!(a_dagger_element(1, 0, Branch::Up, &s).unwrap(), 1.0);
        assert_abs_diff_eq!(a_dagger_element(2, 2, Branch::Up, &s).unwrap(), -0.3);
        assert_abs_diff_eq!(a_dagger_element(2, 2, Branch::Down, &s).unwrap(), 0.3);
        assert_eq!(a_dagger_element(2, 0, Branch::Down, &s).unwrap(), 0.0);
        assert!(a_dagger_element(0, 7, Branch::Down, &s).is_err());
    }

    #[test]
    fn basis_layout_and_energies() {
        let b = build_dressed_basis(&sys(1.0, 0.0, 1)).unwrap();
        assert_eq!(b.dim(), 4);
        let energies: Vec<f64> = b.states.iter().map(|s| s.energy).collect();
        assert_eq!(energies, vec![0.5, 1.5, -0.5, 0.5]);
        let mut sorted = energies.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(sorted, vec![-0.5, 0.5, 0.5, 1.5]);
        assert_eq!(b.states[3], DressedState { branch: 1, n: 1, energy: 0.5 });
    }

    #[test]
    fn basis_polaron_shift() {
        let free = build_dressed_basis(&sys(1.0, 0.0, 3)).unwrap();
        let dressed = build_dressed_basis(&sys(1.0, 0.5, 3)).unwrap();
        for (a, b) in free.states.iter().zip(&dressed.states) {
            assert_abs_diff_eq!(b.energy - a.energy, -0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn gaps_are_exact() {
        let s = sys(0.73, 0.41, 5);
        let b = build_dressed_basis(&s).unwrap();
        for n in 0..=5 {
            assert_eq!(b.gap(b.index(0, n), b.index(1, n)), 0.73);
            if n < 5 {
                for br in 0..2 {
                    assert_eq!(b.gap(b.index(br, n + 1), b.index(br, n)), 1.0);
                }
            }
        }
        let resonant = build_dressed_basis(&sys(1.0, 0.3, 4)).unwrap();
        assert_eq!(resonant.gap(resonant.index(0, 2), resonant.index(1, 3)), 0.0);
    }

    #[test]
    fn basis_elements_match_free_functions() {
        let s = sys(1.0, 0.35, 6);
        let b = build_dressed_basis(&s).unwrap();
        for n in 0..=6 {
            for m in 0..=6 {
                let up = b.sigma_element(BathLabel::QubitSigma, b.index(0, n), b.index(1, m));
                let down = b.sigma_element(BathLabel::QubitSigma, b.index(1, n), b.index(0, m));
                assert_abs_diff_eq!(up, sigma_x_element(n, m, Direction::UpFromDown, &s).unwrap(), epsilon = 1e-15);
                assert_abs_diff_eq!(down, sigma_x_element(n, m, Direction::DownFromUp, &s).unwrap(), epsilon = 1e-15);
                assert_eq!(b.sigma_element(BathLabel::QubitSigma, b.index(0, n), b.index(0, m)), 0.0);
                assert_abs_diff_eq!(
                    b.a_dagger_element(b.index(1, n), b.index(1, m)),
                    a_dagger_element(n, m, Branch::Down, &s).unwrap()
                );
            }
        }
    }

    #[test]
    fn two_qubit_layout() {
        let t = TwoQubitSystem { eps_l: 1.0, eps_r: 1.0, lambda_l: 0.0, lambda_r: 0.0, omega0: 1.0, n_max: 0 };
        let b = build_two_qubit_basis(&t).unwrap();
        assert_eq!(b.dim(), 4);
        assert_eq!(t.displaced_energies(), [1.0, 0.0, 0.0, -1.0]);
    }

    #[test]
    fn two_qubit_displacements() {
        let t = TwoQubitSystem { eps_l: 1.0, eps_r: 1.0, lambda_l: 0.1, lambda_r: 0.4, omega0: 1.0, n_max: 3 };
        let g = t.displaced_coefficients();
        for (got, want) in g.iter().zip([0.5, -0.3, 0.3, -0.5]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
        let b = build_two_qubit_basis(&t).unwrap();
        assert_eq!(b.dim(), 16);
        assert_abs_diff_eq!(b.qubit(BathLabel::LeftSigma).unwrap().x, 0.2);
        assert_abs_diff_eq!(b.qubit(BathLabel::RightSigma).unwrap().x, 0.8);
        // σ^L flips the left spin only: |↑↑⟩ ↔ |↓↑⟩
        let l = b.sigma_element(BathLabel::LeftSigma, b.index(0, 1), b.index(2, 1));
        assert_abs_diff_eq!(l, -displacement_coefficient(1, 1, 0.2).unwrap(), epsilon = 1e-15);
        assert_eq!(b.sigma_element(BathLabel::LeftSigma, b.index(0, 1), b.index(1, 1)), 0.0);
        assert_eq!(b.sigma_element(BathLabel::RightSigma, b.index(0, 1), b.index(2, 1)), 0.0);
    }

    #[test]
    fn two_qubit_shift_pairs_match_overlap_displacement() {
        // g_a − g_b for each flipped pair equals the channel's displacement
        let t = TwoQubitSystem { eps_l: 0.7, eps_r: 1.3, lambda_l: 0.15, lambda_r: 0.25, omega0: 1.0, n_max: 2 };
        let g = t.displaced_coefficients();
        let b = build_two_qubit_basis(&t).unwrap();
        for q in &b.qubits {
            for &(a, c) in &q.pairs {
                assert_abs_diff_eq!(g[a] - g[c], q.x, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn invalid_system_rejected() {
        assert!(HybridSystem::new(1.0, 0.0, 0.1, 5).is_err());
        assert!(HybridSystem::new(1.0, 1.0, -0.1, 5).is_err());
        assert!(HybridSystem::new(1.0, 1.0, 0.1, 0).is_err());
        assert!(HybridSystem::new(f64::NAN, 1.0, 0.1, 3).is_err());
    }
}
