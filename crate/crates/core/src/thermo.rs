//! Thermodynamic structure on top of covariant dynamics.
//!
//! Channels with a thermal fixed point form a hierarchy: covariant maps
//! fixing the Gibbs state, the subset generated by master equations with
//! L pi = 0, the detailed-balanced ones, and finally the generators obeying
//! quantum detailed balance, which are exactly the optimal coherence
//! processors. This module carries the Gibbs context, the three balance
//! checks, the qubit bounds for the first two sets, and the thermal bounds
//! on coherence transport rates. Units: hbar = k_B = 1, so beta * omega is
//! dimensionless.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::ComplexMatrix;
use crate::lindblad::{action_on, CovariantGenerator, PopulationGenerator};
use crate::spectrum::{Hamiltonian, SpectrumError};

#[derive(Debug, Error)]
pub enum ThermoError {
    #[error("inverse temperature must be non-negative and finite, got {0}")]
    BadBeta(f64),
    #[error("dimension mismatch between {0} and the thermal context")]
    DimensionMismatch(&'static str),
    #[error("the Gibbs state is not a fixed point: max |(L pi)_x| = {0:e}")]
    NotAFixedPoint(f64),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

/// Inverse temperature, Hamiltonian and the associated Gibbs populations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThermalContext {
    pub beta: f64,
    pub hamiltonian: Hamiltonian,
    pub pi: Vec<f64>,
}

/// Gibbs populations pi_x proportional to e^{-beta w_x}.
pub fn gibbs(beta: f64, h: &Hamiltonian) -> Result<ThermalContext, ThermoError> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(ThermoError::BadBeta(beta));
    }
    // shift by the minimum frequency so large beta cannot underflow everything
    let wmin = h.omegas().iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = h
        .omegas()
        .iter()
        .map(|&w| (-beta * (w - wmin)).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    Ok(ThermalContext {
        beta,
        hamiltonian: h.clone(),
        pi: weights.into_iter().map(|w| w / z).collect(),
    })
}

impl ThermalContext {
    pub fn dim(&self) -> usize {
        self.pi.len()
    }

    /// e^{-beta (w_x - w_y)} = pi_x / pi_y, computed from the frequencies so
    /// it stays exact even where the populations underflow.
    pub fn gibbs_ratio(&self, x: usize, y: usize) -> f64 {
        (-self.beta * (self.hamiltonian.omegas()[x] - self.hamiltonian.omegas()[y])).exp()
    }
}

/// Result of the classical balance checks: the detailed-balance equality
/// and the weaker fixed-point condition L pi = 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BalanceReport {
    pub detailed_balance: bool,
    pub gibbs_fixed_point: bool,
    pub max_db_defect: f64,
    pub max_fixed_point_defect: f64,
}

/// Check L_{x'|x} pi_x = L_{x|x'} pi_{x'} for all pairs, and report the
/// fixed-point defect |L pi| alongside.
pub fn detailed_balance_check(
    l: &PopulationGenerator,
    ctx: &ThermalContext,
    tol: f64,
) -> BalanceReport {
    let d = l.dim().min(ctx.dim());
    let mut max_db = 0.0_f64;
    for x in 0..d {
        for xp in 0..x {
            let forward = l.rate(xp, x) * ctx.pi[x];
            let backward = l.rate(x, xp) * ctx.pi[xp];
            max_db = max_db.max((forward - backward).abs());
        }
    }
    let residual = l.matrix().matvec(&ctx.pi);
    let max_fp = residual.iter().fold(0.0_f64, |acc, r| acc.max(r.abs()));
    BalanceReport {
        detailed_balance: l.dim() == ctx.dim() && max_db <= tol,
        gibbs_fixed_point: l.dim() == ctx.dim() && max_fp <= tol,
        max_db_defect: max_db,
        max_fixed_point_defect: max_fp,
    }
}

/// Quantum detailed balance on matrix elements: for all entry pairs in the
/// same mode,
/// e^{-beta w_y} <x'|L(|x><y|)|y'> = e^{-beta w_y'} conj(<x|L(|x'><y'|)|y>).
pub fn qdb_check(
    gen: &CovariantGenerator,
    ctx: &ThermalContext,
    tol: f64,
) -> Result<bool, ThermoError> {
    if gen.dim() != ctx.dim() {
        return Err(ThermoError::DimensionMismatch("generator"));
    }
    let d = gen.dim();
    let omegas = ctx.hamiltonian.omegas();
    // precompute the action on every matrix unit
    let mut images = Vec::with_capacity(d * d);
    for x in 0..d {
        for y in 0..d {
            let mut unit = ComplexMatrix::zeros(d, d);
            unit[(x, y)] = Complex64::new(1.0, 0.0);
            images.push(action_on(gen, &unit));
        }
    }
    let table = gen.table();
    for mode in table.modes() {
        for &(x, y) in &mode.pairs {
            for &(xp, yp) in &mode.pairs {
                let lhs = images[x * d + y][(xp, yp)].scale((-ctx.beta * omegas[y]).exp());
                let rhs = images[xp * d + yp][(x, y)]
                    .conj()
                    .scale((-ctx.beta * omegas[yp]).exp());
                if (lhs - rhs).norm() > tol {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Qubit coherence bounds for thermal covariant processes, as functions of
/// the final ground population pt. Both use q_beta(t) = (1 - p(t)) e^{beta w}.
///
/// - `nm_bound`: the tight bound over all covariant maps with the Gibbs
///   state fixed (no Markovianity assumed),
///   sqrt((pt - q0)(p0 - qt)) / |p0 - q0| * |c0|;
/// - `markov_bound`: the tighter bound for master-equation dynamics,
///   sqrt((pt - qt)/(p0 - q0)) * |c0|.
///
/// A negative square-root argument means the population value is not
/// reachable within the respective class and the bound collapses to zero.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GtoBounds {
    pub nm_bound: f64,
    pub markov_bound: f64,
}

pub fn gto_qubit_bounds(p0: f64, c0_abs: f64, beta: f64, omega: f64, pt: f64) -> GtoBounds {
    let q = |p: f64| (1.0 - p) * (beta * omega).exp();
    let q0 = q(p0);
    let qt = q(pt);
    let nm_arg = (pt - q0) * (p0 - qt);
    let nm_bound = if nm_arg >= 0.0 && (p0 - q0).abs() > 0.0 {
        nm_arg.sqrt() / (p0 - q0).abs() * c0_abs
    } else {
        0.0
    };
    let mk_arg = (pt - qt) / (p0 - q0);
    let markov_bound = if mk_arg >= 0.0 {
        mk_arg.sqrt() * c0_abs
    } else {
        0.0
    };
    GtoBounds {
        nm_bound,
        markov_bound,
    }
}

/// One violated transport-rate bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransportViolation {
    /// (x', x, y', y): transport from entry (x, y) to entry (x', y').
    pub indices: (usize, usize, usize, usize),
    pub transport_rate: f64,
    pub bound: f64,
    /// Which inequality failed: the damping bound or (under detailed
    /// balance) the reverse-rate asymmetry bound.
    pub kind: TransportBoundKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransportBoundKind {
    DampingGibbsFactor,
    ReverseRateAsymmetry,
}

const TRANSPORT_TOL: f64 = 1e-9;
const FIXED_POINT_TOL: f64 = 1e-9;

/// Check the thermal bounds on coherence transport rates for a rate matrix
/// with the Gibbs state as fixed point:
/// t^{x'|x}_{y'|y} <= gamma_{x'y'} e^{-beta w_{x'x}}, and under detailed
/// balance also t^{x'|x}_{y'|y} <= t^{x|x'}_{y|y'} e^{-beta w_{x'x}}.
/// For uphill jumps (w_{x'x} > 0) the Gibbs factor is below one and damps
/// the transport exponentially; downhill jumps carry the inverse factor,
/// which is what detailed balance itself enforces (the reverse of every
/// damped uphill rate). Returns the list of violations (empty when all
/// bounds hold).
pub fn transport_bounds_check(
    l: &PopulationGenerator,
    ctx: &ThermalContext,
) -> Result<Vec<TransportViolation>, ThermoError> {
    if l.dim() != ctx.dim() {
        return Err(ThermoError::DimensionMismatch("rate matrix"));
    }
    let report = detailed_balance_check(l, ctx, FIXED_POINT_TOL);
    if !report.gibbs_fixed_point {
        return Err(ThermoError::NotAFixedPoint(report.max_fixed_point_defect));
    }
    let table = crate::spectrum::bohr_modes(&ctx.hamiltonian, crate::spectrum::FREQ_MERGE_TOL)?;
    let mut violations = Vec::new();
    for mode in table.modes() {
        if mode.omega == 0.0 {
            continue;
        }
        for &(xp, yp) in &mode.pairs {
            for &(x, y) in &mode.pairs {
                if (xp, yp) == (x, y) {
                    continue;
                }
                let transport = (l.rate(xp, x) * l.rate(yp, y)).sqrt();
                let gibbs_cap = ctx.gibbs_ratio(xp, x);
                let damping_bound = l.damping_rate(xp, yp) * gibbs_cap;
                if transport > damping_bound + TRANSPORT_TOL {
                    violations.push(TransportViolation {
                        indices: (xp, x, yp, y),
                        transport_rate: transport,
                        bound: damping_bound,
                        kind: TransportBoundKind::DampingGibbsFactor,
                    });
                }
                if report.detailed_balance {
                    let reverse = (l.rate(x, xp) * l.rate(y, yp)).sqrt();
                    let reverse_bound = reverse * gibbs_cap;
                    if transport > reverse_bound + TRANSPORT_TOL {
                        violations.push(TransportViolation {
                            indices: (xp, x, yp, y),
                            transport_rate: transport,
                            bound: reverse_bound,
                            kind: TransportBoundKind::ReverseRateAsymmetry,
                        });
                    }
                }
            }
        }
    }
    Ok(violations)
}
