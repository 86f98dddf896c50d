//! Coherence transfer and mixing scenarios.
//!
//! Three settings from the optimal-evolution bound on ladder systems:
//!
//! - equidistant qutrit: transfer between the overlapping entries rho_10 and
//!   rho_21. The mode ODE reduces to an overdamped oscillator, and no rate
//!   matrix moves more than 1/sqrt(2) of the initial coherence;
//! - four-level ladder: transfer between the non-overlapping entries rho_10
//!   and rho_32 is perfect as t -> infinity for a rate matrix with two
//!   stationary directions;
//! - coherence mixing on the same ladder: the mode total S_W stays constant
//!   while the two entries equalize.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{LinalgError, Trajectory};
use crate::lindblad::{mode_propagator, LindbladError, PopulationGenerator};
use crate::spectrum::{bohr_modes, Hamiltonian, ModeTable, SpectrumError, FREQ_MERGE_TOL};

/// Discriminants below this are treated as critically damped and routed
/// through the exponential propagator instead of the closed form.
pub const CRITICAL_DAMPING_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum TransferError {
    #[error("scenario needs a {expected}-level rate matrix, got {got}")]
    WrongDimension { expected: usize, got: usize },
    #[error("rate {name} must be positive, got {value}")]
    NonPositiveRate { name: &'static str, value: f64 },
    #[error("optimizer grid density must be at least 8, got {0}")]
    GridTooCoarse(usize),
    #[error(transparent)]
    Lindblad(#[from] LindbladError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

/// The equidistant three-level Hamiltonian used by the qutrit scenario.
pub fn qutrit_hamiltonian() -> Hamiltonian {
    Hamiltonian::equidistant(3, 1.0).expect("static spectrum is valid")
}

/// The four-level ladder 0, W, W+D, 2W+D with W = 1, D = 0.4: entries
/// (1,0) and (3,2) share a mode without overlapping.
pub fn four_level_hamiltonian() -> Hamiltonian {
    Hamiltonian::new(vec![0.0, 1.0, 1.4, 2.4]).expect("static spectrum is valid")
}

/// Rate matrix of the perfect four-level transfer: L_{2|0} = L_{3|1} = lambda.
pub fn four_level_transfer_rates(lambda: f64) -> Result<PopulationGenerator, TransferError> {
    if !(lambda > 0.0) {
        return Err(TransferError::NonPositiveRate {
            name: "lambda",
            value: lambda,
        });
    }
    Ok(PopulationGenerator::from_rates(4, |to, from| {
        if (to, from) == (2, 0) || (to, from) == (3, 1) {
            lambda
        } else {
            0.0
        }
    })?)
}

/// Rate matrix of the coherence-mixing process: symmetric hopping 0 <-> 2
/// and 1 <-> 3 at rate lambda.
pub fn mixing_rates(lambda: f64) -> Result<PopulationGenerator, TransferError> {
    if !(lambda > 0.0) {
        return Err(TransferError::NonPositiveRate {
            name: "lambda",
            value: lambda,
        });
    }
    Ok(PopulationGenerator::from_rates(4, |to, from| {
        match (to, from) {
            (2, 0) | (0, 2) | (3, 1) | (1, 3) => lambda,
            _ => 0.0,
        }
    })?)
}

/// Damped-oscillator parameters of the qutrit transfer ODE
/// d(c1, c2)/dt = Q (c1, c2).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransferProblem {
    pub l: PopulationGenerator,
    /// eta = gamma_10 + gamma_21 = -tr Q.
    pub eta: f64,
    /// nu^2 = det Q = gamma_10 gamma_21 - sqrt(L_{0|1} L_{1|2} L_{1|0} L_{2|1}).
    pub nu2: f64,
    /// Discriminant D = eta^2 - 4 nu^2 >= 0 (over- or critically damped).
    pub disc: f64,
}

impl TransferProblem {
    pub fn new(l: PopulationGenerator) -> Result<Self, TransferError> {
        if l.dim() != 3 {
            return Err(TransferError::WrongDimension {
                expected: 3,
                got: l.dim(),
            });
        }
        let g10 = l.damping_rate(1, 0);
        let g21 = l.damping_rate(2, 1);
        let cross = (l.rate(0, 1) * l.rate(1, 2) * l.rate(1, 0) * l.rate(2, 1)).sqrt();
        let eta = g10 + g21;
        let nu2 = g10 * g21 - cross;
        Ok(Self {
            l,
            eta,
            nu2,
            disc: eta * eta - 4.0 * nu2,
        })
    }

    fn gamma_10(&self) -> f64 {
        self.l.damping_rate(1, 0)
    }

    fn gamma_21(&self) -> f64 {
        self.l.damping_rate(2, 1)
    }

    fn transport_to_upper(&self) -> f64 {
        (self.l.rate(1, 0) * self.l.rate(2, 1)).sqrt()
    }

    /// Closed-form (c1, c2) at time t for positive discriminant.
    fn closed_form(&self, c1_0: f64, t: f64) -> (f64, f64) {
        let s = self.disc.sqrt() / 2.0;
        let damp = (-0.5 * self.eta * t).exp();
        let (ch, sh) = ((s * t).cosh(), (s * t).sinh());
        let c1 = damp * c1_0 * (ch + (self.gamma_21() - self.gamma_10()) / (2.0 * s) * sh);
        let c2 = 2.0 * c1_0 * self.transport_to_upper() / self.disc.sqrt() * damp * sh;
        (c1, c2)
    }

    /// The auxiliary nu = 0 envelope that dominates c2(t).
    pub fn relaxed_ceiling(&self, c1_0: f64, t: f64) -> f64 {
        if self.eta == 0.0 {
            return 0.0;
        }
        c1_0 * self.transport_to_upper() / self.eta * (1.0 - (-self.eta * t).exp())
    }

    /// max over t of c2(t) and the time attaining it (infinite when the
    /// supremum is approached asymptotically).
    pub fn peak_transfer(&self, c1_0: f64) -> (f64, f64) {
        let transport = self.transport_to_upper();
        if transport == 0.0 || c1_0 == 0.0 {
            return (0.0, 0.0);
        }
        let sqrt_d = self.disc.max(0.0).sqrt();
        if self.nu2 <= CRITICAL_DAMPING_TOL {
            // sup approached as t -> infinity
            return (c1_0 * transport / self.eta, f64::INFINITY);
        }
        // tanh(sqrt(D) t / 2) = sqrt(D)/eta
        let ratio = (sqrt_d / self.eta).min(1.0 - 1e-16);
        let t_star = 2.0 / sqrt_d * ratio.atanh();
        (self.closed_form(c1_0, t_star).1, t_star)
    }
}

/// Transfer curve (c1(t), c2(t)) for the overlapping qutrit scenario with
/// initial mode amplitudes (c1_0, 0). Closed-form damped-oscillator
/// solution away from critical damping, exponential propagation otherwise.
pub fn qutrit_transfer_curve(
    l: &PopulationGenerator,
    c1_0: f64,
    times: &[f64],
) -> Result<Trajectory<Vec<f64>>, TransferError> {
    let problem = TransferProblem::new(l.clone())?;
    if problem.disc > CRITICAL_DAMPING_TOL {
        let states = times.iter().map(|&t| {
            let (c1, c2) = problem.closed_form(c1_0, t);
            vec![c1, c2]
        });
        Ok(Trajectory::new(times.to_vec(), states.collect())?)
    } else {
        let table = bohr_modes(&qutrit_hamiltonian(), FREQ_MERGE_TOL)?;
        let prop = mode_propagator(l, 1.0, &table)?;
        let mut states = Vec::with_capacity(times.len());
        for &t in times {
            let v = prop.q.expm_scaled(t)?.matvec(&[c1_0, 0.0]);
            states.push(v);
        }
        Ok(Trajectory::new(times.to_vec(), states)?)
    }
}

/// Result of the qutrit transfer search: the best rates found, the peak
/// transferred fraction, and the time attaining it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QutritTransferOptimum {
    pub best_l: PopulationGenerator,
    pub best_value: f64,
    pub best_time: f64,
}

/// Search max over L and t of c2(t)/c1(0) for the overlapping qutrit.
///
/// The objective depends on L only through rate ratios and a time rescale,
/// so the damping eta is normalized to one; the search is a coordinate grid
/// over the six off-diagonal rates followed by compass refinement. The
/// certified ceiling 1/sqrt(2) is not claimed to be attained.
pub fn qutrit_transfer_optimize(
    grid_density: usize,
) -> Result<QutritTransferOptimum, TransferError> {
    if grid_density < 8 {
        return Err(TransferError::GridTooCoarse(grid_density));
    }

    // rates = [L10, L20, L01, L21, L02, L12]
    let eval = |rates: &[f64; 6]| -> f64 {
        let l = PopulationGenerator::from_rates(3, |to, from| match (to, from) {
            (1, 0) => rates[0],
            (2, 0) => rates[1],
            (0, 1) => rates[2],
            (2, 1) => rates[3],
            (0, 2) => rates[4],
            (1, 2) => rates[5],
            _ => 0.0,
        })
        .expect("non-negative rates are valid");
        match TransferProblem::new(l) {
            Ok(p) if p.eta > 0.0 => p.peak_transfer(1.0).0,
            _ => 0.0,
        }
    };

    let mut best: ([f64; 6], f64) = ([0.0; 6], 0.0);
    // coordinate grid over the two transport rates with the rest set by a
    // coarse secondary sweep
    for i in 1..=grid_density {
        for j in 1..=grid_density {
            for &(idle_up, idle_down) in
                &[(0.0, 0.0), (0.1, 0.0), (0.0, 0.1), (0.1, 0.1), (0.3, 0.3)]
            {
                let rates = [
                    i as f64 / grid_density as f64,
                    idle_up,
                    idle_down,
                    j as f64 / grid_density as f64,
                    idle_up,
                    idle_down,
                ];
                let v = eval(&rates);
                if v > best.1 {
                    best = (rates, v);
                }
            }
        }
    }

    // compass search refinement over all six rates
    let mut step = 0.25;
    let mut current = best;
    while step > 1e-10 {
        let mut improved = false;
        for k in 0..6 {
            for dir in [1.0, -1.0] {
                let mut trial = current.0;
                trial[k] = (trial[k] + dir * step).max(0.0);
                let v = eval(&trial);
                if v > current.1 {
                    current = (trial, v);
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }

    let l = PopulationGenerator::from_rates(3, |to, from| match (to, from) {
        (1, 0) => current.0[0],
        (2, 0) => current.0[1],
        (0, 1) => current.0[2],
        (2, 1) => current.0[3],
        (0, 2) => current.0[4],
        (1, 2) => current.0[5],
        _ => 0.0,
    })?;
    let problem = TransferProblem::new(l.clone())?;
    let (value, time) = problem.peak_transfer(1.0);
    Ok(QutritTransferOptimum {
        best_l: l,
        best_value: value,
        best_time: time,
    })
}

/// Perfect transfer on the four-level ladder: with L_{2|0} = L_{3|1} = lambda
/// the pair (|rho_10|, |rho_32|) evolves as
/// (c1(0) e^{-lambda t}, c1(0)(1 - e^{-lambda t})), monotonically moving all
/// coherence into the upper entry.
pub fn four_level_transfer(
    lambda: f64,
    c1_0: f64,
    times: &[f64],
) -> Result<Trajectory<Vec<f64>>, TransferError> {
    if !(lambda > 0.0) {
        return Err(TransferError::NonPositiveRate {
            name: "lambda",
            value: lambda,
        });
    }
    let states = times
        .iter()
        .map(|&t| {
            let decay = (-lambda * t).exp();
            vec![c1_0 * decay, c1_0 * (1.0 - decay)]
        })
        .collect();
    Ok(Trajectory::new(times.to_vec(), states)?)
}

/// Optimal coherence mixing on the four-level ladder: the two mode entries
/// relax towards their common mean while the mode total stays constant.
pub fn coherence_mixing(
    lambda: f64,
    m10_0: f64,
    m32_0: f64,
    times: &[f64],
) -> Result<Trajectory<Vec<f64>>, TransferError> {
    if !(lambda > 0.0) {
        return Err(TransferError::NonPositiveRate {
            name: "lambda",
            value: lambda,
        });
    }
    let states = times
        .iter()
        .map(|&t| {
            let keep = 0.5 * (1.0 + (-2.0 * lambda * t).exp());
            let swap = 0.5 * (1.0 - (-2.0 * lambda * t).exp());
            vec![keep * m10_0 + swap * m32_0, swap * m10_0 + keep * m32_0]
        })
        .collect();
    Ok(Trajectory::new(times.to_vec(), states)?)
}

/// Mode table of the four-level ladder (shared by callers cross-checking
/// the mixing and transfer scenarios against the generic machinery).
pub fn four_level_table() -> Result<ModeTable, SpectrumError> {
    bohr_modes(&four_level_hamiltonian(), FREQ_MERGE_TOL)
}
