//! Stationary populations of the dressed rate equation.
//!
//! The production path is [`solve_steady_state`]; the other solvers exist to
//! cross-check it: [`evolve_to_stationarity`] integrates the rate equation in
//! time, [`solve_weak_coupling_perturbative`] expands to first order in
//! `(2λ/ω0)²`, and [`strong_coupling_populations`] is the closed form reached
//! when the qubit bath decouples.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::baths::{bose_occupation, BathSpec};
use crate::error::{Error, Result};
use crate::hilbert::HybridSystem;
use crate::liouvillian::{build_rate_matrices, weak_coupling_generators, RateMatrixSet};
use crate::observables;

/// Residual tolerance relative to the largest transition rate.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
/// Fock cutoff used when none is requested and all temperatures are ≤ 2ω0.
pub const DEFAULT_N_MAX: usize = 30;
/// Relative current change accepted by [`certify_truncation`].
pub const CERTIFY_RELATIVE: f64 = 1e-3;

/// Largest population on the top Fock level for which a current at the noise
/// floor counts as converged rather than truncated away.
pub const CERTIFY_EDGE_WEIGHT: f64 = 1e-4;
pub const DEFAULT_CERTIFY_CAP: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateResult {
    pub populations: DVector<f64>,
    /// `‖W P‖_∞` after normalization.
    pub residual: f64,
    pub n_max_used: usize,
    pub converged: bool,
    /// Magnitude of the most negative population removed by clipping.
    pub clipped: f64,
}

/// Default cutoff for a set of temperatures (in units of ω0).
pub fn default_n_max(max_temperature: f64) -> usize {
    if max_temperature <= 2.0 {
        DEFAULT_N_MAX
    } else {
        (15.0 * max_temperature).ceil() as usize
    }
}

/// Indices of the closed communicating classes of `w` (edge `j → i` when `W_ij > 0`).
pub fn closed_classes(w: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = w.nrows();
    let mut graph = DiGraph::<(), ()>::with_capacity(n, 0);
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for from in 0..n {
        for to in 0..n {
            if from != to && w[(to, from)] > 0.0 {
                graph.add_edge(nodes[from], nodes[to], ());
            }
        }
    }
    let mut component = vec![0usize; n];
    let sccs = tarjan_scc(&graph);
    for (c, members) in sccs.iter().enumerate() {
        for node in members {
            component[node.index()] = c;
        }
    }
    let mut leaks = vec![false; sccs.len()];
    for edge in graph.raw_edges() {
        let (s, t) = (component[edge.source().index()], component[edge.target().index()]);
        if s != t {
            leaks[s] = true;
        }
    }
    let mut classes: Vec<Vec<usize>> = sccs
        .into_iter()
        .enumerate()
        .filter(|(c, _)| !leaks[*c])
        .map(|(_, members)| {
            let mut idx: Vec<usize> = members.into_iter().map(|v| v.index()).collect();
            idx.sort_unstable();
            idx
        })
        .collect();
    classes.sort();
    classes
}

/// Stationary vector of an irreducible chain by Grassmann–Taksar–Heyman state
/// reduction. Only additions, multiplications and divisions of nonnegative
/// numbers occur, so every component carries a small relative error.
fn gth(rates: &mut [Vec<f64>]) -> Option<Vec<f64>> {
    let n = rates.len();
    for k in (1..n).rev() {
        let s: f64 = rates[k][..k].iter().sum();
        if !(s > 0.0) {
            return None;
        }
        for i in 0..k {
            rates[i][k] /= s;
        }
        for i in 0..k {
            let f = rates[i][k];
            if f == 0.0 {
                continue;
            }
            let (head, tail) = rates.split_at_mut(k);
            let row_k = &tail[0];
            for (dst, &src) in head[i][..k].iter_mut().zip(&row_k[..k]) {
                *dst += f * src;
            }
        }
    }
    let mut pi = vec![0.0; n];
    pi[0] = 1.0;
    for j in 1..n {
        pi[j] = (0..j).map(|i| pi[i] * rates[i][j]).sum();
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= total);
    Some(pi)
}

fn max_off_diagonal(w: &DMatrix<f64>) -> f64 {
    let n = w.nrows();
    let mut max = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            if i != j {
                max = max.max(w[(i, j)]);
            }
        }
    }
    max
}

fn check_generator(w: &DMatrix<f64>) -> Result<()> {
    if w.nrows() != w.ncols() {
        return Err(Error::DimensionMismatch { expected: w.nrows(), found: w.ncols() });
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("generator has non-finite entries"));
    }
    Ok(())
}

/// Normalized null vector of a column-conservative generator.
///
/// Fails with [`Error::NonErgodic`] unless exactly one closed class exists;
/// transient states get zero weight.
pub fn stationary_distribution(w: &DMatrix<f64>, tolerance: f64) -> Result<(DVector<f64>, f64)> {
    check_generator(w)?;
    let n = w.nrows();
    let classes = closed_classes(w);
    if classes.len() != 1 {
        return Err(Error::NonErgodic { closed_classes: classes.len() });
    }
    let class = &classes[0];
    let mut reduced: Vec<Vec<f64>> = class
        .iter()
        .map(|&from| class.iter().map(|&to| if from == to { 0.0 } else { w[(to, from)] }).collect())
        .collect();
    let pi = gth(&mut reduced).ok_or(Error::NonErgodic { closed_classes: 0 })?;
    let mut p = DVector::zeros(n);
    for (&idx, &v) in class.iter().zip(&pi) {
        p[idx] = v;
    }
    let residual = (w * &p).amax();
    let scale = max_off_diagonal(w);
    if residual > tolerance * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::SolverFailure { residual, tolerance: tolerance * scale });
    }
    Ok((p, residual))
}

pub fn solve_steady_state(rates: &RateMatrixSet) -> Result<SteadyStateResult> {
    let (populations, residual) = stationary_distribution(&rates.total, DEFAULT_TOLERANCE)?;
    Ok(SteadyStateResult {
        populations,
        residual,
        n_max_used: rates.basis.n_max,
        converged: true,
        clipped: 0.0,
    })
}

/// Builds the single-qubit generators and solves them.
pub fn solve_point(sys: &HybridSystem, bath_a: &BathSpec, bath_sigma: &BathSpec) -> Result<(RateMatrixSet, SteadyStateResult)> {
    let rates = build_rate_matrices(sys, bath_a, bath_sigma)?;
    let result = solve_steady_state(&rates)?;
    Ok((rates, result))
}

/// Step `0.1 / max|W_ii|` used for oracle runs.
pub fn default_oracle_step(w: &DMatrix<f64>) -> f64 {
    let max_diag = w.diagonal().iter().fold(0.0f64, |m, d| m.max(d.abs()));
    0.1 / max_diag
}

/// Integrates `dP/dt = W P` with classical fixed-step RK4 up to `horizon`.
///
/// One RK4 step is the linear map `S = Σ_{k≤4} (hW)^k / k!`; long horizons
/// apply `S^steps` by repeated squaring, which is the same step sequence
/// evaluated in `O(log steps)` matrix products. The result is renormalized:
/// the exact flow conserves probability, while round-off in the column sums
/// of the step compounds through the squarings into a drift of total mass.
pub fn evolve_to_stationarity(w: &DMatrix<f64>, p0: &DVector<f64>, horizon: f64, dt: f64) -> Result<DVector<f64>> {
    check_generator(w)?;
    if p0.len() != w.nrows() {
        return Err(Error::DimensionMismatch { expected: w.nrows(), found: p0.len() });
    }
    if p0.iter().any(|&p| p < 0.0 || !p.is_finite()) || (p0.sum() - 1.0).abs() > 1e-12 {
        return Err(Error::domain("initial populations must be nonnegative and normalized"));
    }
    if !(dt > 0.0) || !(horizon >= 0.0) {
        return Err(Error::domain("dt must be positive and horizon nonnegative"));
    }
    let max_diag = w.diagonal().iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let bound = if max_diag > 0.0 { 2.0 / max_diag } else { f64::INFINITY };
    if dt > bound {
        return Err(Error::StepTooLarge { dt, bound });
    }
    let mut steps = (horizon / dt).round() as u64;
    let n = w.nrows();

    let hw = w * dt;
    let mut step = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=4 {
        term = &hw * &term / k as f64;
        step += &term;
    }

    let mut p = p0.clone();
    if steps <= 4 * n as u64 {
        for _ in 0..steps {
            p = &step * &p;
        }
        p /= p.sum();
        return Ok(p);
    }
    let mut power = step;
    while steps > 0 {
        if steps & 1 == 1 {
            p = &power * &p;
        }
        steps >>= 1;
        if steps > 0 {
            power = &power * &power;
        }
    }
    p /= p.sum();
    Ok(p)
}

fn clip_and_normalize(p: &mut DVector<f64>) -> f64 {
    let clipped = p.iter().fold(0.0f64, |m, &v| m.max(-v));
    p.iter_mut().for_each(|v| *v = v.max(0.0));
    let total = p.sum();
    p.iter_mut().for_each(|v| *v /= total);
    clipped
}

/// Zeroth-order state: qubit Gibbs at `T_σ` times mode Gibbs at `T_a`,
/// normalized over the truncated ladder.
pub fn decoupled_populations(sys: &HybridSystem, bath_a: &BathSpec, bath_sigma: &BathSpec) -> DVector<f64> {
    let levels = sys.n_max + 1;
    // energies measured from the lower qubit level keep the weights ≤ 1
    let qubit = |sign: f64| boltzmann((sign * sys.epsilon + sys.epsilon.abs()) / 2.0, bath_sigma.temperature);
    let mode: Vec<f64> = (0..levels)
        .map(|n| boltzmann(sys.omega0 * n as f64, bath_a.temperature))
        .collect();
    let mut p = DVector::from_fn(2 * levels, |i, _| {
        let (sign, n) = if i < levels { (1.0, i) } else { (-1.0, i - levels) };
        qubit(sign) * mode[n]
    });
    let total = p.sum();
    p /= total;
    p
}

/// `e^{−E/T}` relative to the ground level, with `T = 0` handled as a limit.
fn boltzmann(energy: f64, temperature: f64) -> f64 {
    if temperature > 0.0 {
        (-energy / temperature).exp()
    } else if energy > 0.0 {
        0.0
    } else {
        1.0
    }
}

/// First-order response `y` with `M₀ y = M_λ P₀` and `Σ y = 0`, where
/// `M₀ = M_a + M_σ`. The perturbative state is `P₀ − (2λ/ω0)² y`.
pub fn perturbative_correction(sys: &HybridSystem, bath_a: &BathSpec, bath_sigma: &BathSpec) -> Result<(DVector<f64>, DVector<f64>)> {
    let gens = weak_coupling_generators(sys, bath_a, bath_sigma)?;
    let m0 = &gens.m_a + &gens.m_sigma;
    if closed_classes(&m0).len() != 1 {
        return Err(Error::SingularReducedOperator);
    }
    let p0 = decoupled_populations(sys, bath_a, bath_sigma);
    let source = &gens.m_lambda * &p0;

    // Replace the first balance row by the trace constraint ⟨I|y⟩ = 0.
    let scale = max_off_diagonal(&m0).max(f64::MIN_POSITIVE);
    let mut system = m0.clone();
    let mut rhs = source;
    for j in 0..system.ncols() {
        system[(0, j)] = scale;
    }
    rhs[0] = 0.0;
    let y = system.full_piv_lu().solve(&rhs).ok_or(Error::SingularReducedOperator)?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularReducedOperator);
    }
    Ok((p0, y))
}

/// `|P⟩ ≈ |P₀⟩ − (2λ/ω0)² Q M₀⁻¹ Q M_λ |P₀⟩`, renormalized.
pub fn solve_weak_coupling_perturbative(sys: &HybridSystem, bath_a: &BathSpec, bath_sigma: &BathSpec) -> Result<SteadyStateResult> {
    if sys.lambda / sys.omega0 > 0.05 {
        log::warn!(
            "perturbative solver used at λ/ω0 = {} outside the weak-coupling regime",
            sys.lambda / sys.omega0
        );
    }
    let (p0, y) = perturbative_correction(sys, bath_a, bath_sigma)?;
    let x2 = sys.displacement().powi(2);
    let mut p = &p0 - &y * x2;
    let clipped = clip_and_normalize(&mut p);

    let gens = weak_coupling_generators(sys, bath_a, bath_sigma)?;
    let w = gens.m_a + gens.m_sigma + gens.m_lambda * x2;
    let residual = (&w * &p).amax();
    Ok(SteadyStateResult {
        populations: p,
        residual,
        n_max_used: sys.n_max,
        converged: true,
        clipped,
    })
}

/// Strong-coupling closed form: both branches thermal at `T_a`,
/// `P_{n,↑↓} = e^{−(nω0 ± ε/2)/T_a} / (2 cosh(ε/2T_a) [1 + n_a(ω0)])`.
///
/// The normalization is the untruncated one, so the entries sum to
/// `1 − e^{−(n_max+1)ω0/T_a}`.
pub fn strong_coupling_populations(sys: &HybridSystem, bath_a: &BathSpec) -> Result<DVector<f64>> {
    sys.validate()?;
    bath_a.validate()?;
    let t = bath_a.temperature;
    let levels = sys.n_max + 1;
    if t == 0.0 {
        let mut p = DVector::zeros(2 * levels);
        // ground state |φ↓_0⟩ for ε > 0, |φ↑_0⟩ for ε < 0, equal split at ε = 0
        if sys.epsilon > 0.0 {
            p[levels] = 1.0;
        } else if sys.epsilon < 0.0 {
            p[0] = 1.0;
        } else {
            p[0] = 0.5;
            p[levels] = 0.5;
        }
        return Ok(p);
    }
    let z = 2.0 * (sys.epsilon / (2.0 * t)).cosh() * (1.0 + bose_occupation(sys.omega0, t)?);
    Ok(DVector::from_fn(2 * levels, |i, _| {
        let (sign, n) = if i < levels { (1.0, i) } else { (-1.0, i - levels) };
        (-(sys.omega0 * n as f64 + sign * sys.epsilon / 2.0) / t).exp() / z
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationCertificate {
    /// Smallest cutoff on the growth ladder whose current agrees with the next rung.
    pub n_max: usize,
    /// Relative current change between `n_max` and `n_max + growth`.
    pub delta: f64,
    /// Current at `n_max + growth`.
    pub current: f64,
}

/// Grows a cutoff by `growth` until `observe(n)` and `observe(n + growth)`
/// differ by less than [`CERTIFY_RELATIVE`] relative.
///
/// `observe` returns the current and the population on the top Fock level.
/// Currents at the noise floor (`|J| ≤ floor`) count as converged only when
/// that edge weight is below [`CERTIFY_EDGE_WEIGHT`]; a cutoff too small to
/// hold the displaced states can suppress the current to zero.
pub fn certify_with(
    start: usize,
    growth: usize,
    cap: usize,
    floor: f64,
    mut observe: impl FnMut(usize) -> Result<(f64, f64)>,
) -> Result<TruncationCertificate> {
    if growth < 1 {
        return Err(Error::domain("growth must be at least 1"));
    }
    let mut n = start;
    let (mut current, mut edge) = observe(n)?;
    let mut last_delta = f64::INFINITY;
    while n + growth <= cap {
        let (next, next_edge) = observe(n + growth)?;
        let diff = (next - current).abs();
        let delta = if next.abs() > floor {
            diff / next.abs()
        } else if diff <= floor && edge.max(next_edge) <= CERTIFY_EDGE_WEIGHT {
            0.0
        } else {
            f64::INFINITY
        };
        if delta < CERTIFY_RELATIVE {
            return Ok(TruncationCertificate { n_max: n, delta, current: next });
        }
        last_delta = delta;
        n += growth;
        current = next;
        edge = next_edge;
    }
    Err(Error::NoConvergence { cap, last_delta })
}

/// Total population on the highest Fock level of the basis.
pub fn edge_weight(result: &SteadyStateResult, rates: &RateMatrixSet) -> f64 {
    let top = rates.basis.states.iter().map(|s| s.n).max().unwrap_or(0);
    rates.basis.states.iter().zip(result.populations.iter()).filter(|(s, _)| s.n == top).map(|(_, p)| p).sum()
}

/// Certifies the Fock cutoff of a single-qubit point by its steady current `J_σ`.
pub fn certify_truncation(
    sys: &HybridSystem,
    bath_a: &BathSpec,
    bath_sigma: &BathSpec,
    growth: usize,
    cap: usize,
) -> Result<TruncationCertificate> {
    // noise floor: far below any current resolvable against the largest rate
    let floor = 1e-13 * bath_a.alpha.max(bath_sigma.alpha) * sys.omega0 * sys.omega0;
    certify_with(sys.n_max, growth, cap, floor, |n| {
        let s = sys.with_n_max(n);
        let (rates, result) = solve_point(&s, bath_a, bath_sigma)?;
        let j = observables::heat_current(crate::baths::BathLabel::QubitSigma, &result, &rates)?;
        Ok((j, edge_weight(&result, &rates)))
    })
}
