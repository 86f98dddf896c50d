//! Covariant Markovian generators and the minimal-decoherence bound.
//!
//! A covariant Lindbladian has the form L(rho) = A(rho) - {A^dag(1), rho}/2
//! with A a covariant CP map, so it carries the same mode-block structure as
//! a covariant channel. The magnitude of every coherence entry is then
//! bounded by the solution of a linear ODE built from damping rates
//! gamma_{x'y'} = (|L_{x'|x'}| + |L_{y'|y'}|)/2 and transport rates
//! sqrt(L_{x'|x} L_{y'|y}), and the bound is attained by an explicit
//! generator whenever the initial phases are matched within each mode.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channels::{blocks_from_dtos, blocks_to_dtos, BlockDto, ChannelError};
use crate::linalg::{
    eigvals_real, expm, psd_check, ComplexMatrix, LinalgError, RealMatrix, Trajectory,
};
use crate::spectrum::{
    bohr_modes, DensityMatrix, Hamiltonian, ModeTable, SpectrumError, FREQ_MERGE_TOL,
};

/// Off-diagonal rates may undershoot zero by at most this much.
pub const RATE_CLIP: f64 = 1e-12;
/// Tolerance on generator column sums.
pub const COLUMN_SUM_TOL: f64 = 1e-10;
/// PSD tolerance for the Choi blocks of the CP part.
pub const CP_PSD_TOL: f64 = 1e-9;
/// Tolerance for the phase-matching condition.
pub const PHASE_TOL: f64 = 1e-9;
/// An eigenvalue this close to zero counts as a stationary direction.
pub const NULL_EIG_TOL: f64 = 1e-10;
/// Minimum stationary-population entry for ergodicity.
pub const SUPPORT_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Error)]
pub enum LindbladError {
    #[error("population generator invalid: {0}")]
    InvalidGenerator(String),
    #[error("covariant generator structure invalid: {0}")]
    Structure(String),
    #[error("covariant generator fails CP validation: {0}")]
    NotCompletelyPositive(String),
    #[error("mode frequency {0} does not label a coherence mode")]
    NotACoherenceMode(f64),
    #[error(
        "phase matching fails in mode {omega}: pairs ({xp},{yp}) and ({x},{y}) differ by {defect:e}"
    )]
    PhaseMismatch {
        omega: f64,
        xp: usize,
        yp: usize,
        x: usize,
        y: usize,
        defect: f64,
    },
    #[error("evolved state left the density-matrix tolerance at t = {t}: {reason}")]
    StateDrift { t: f64, reason: String },
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Generator of a stochastic matrix: non-negative off-diagonal rates,
/// columns summing to zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "PopulationGeneratorDto", into = "PopulationGeneratorDto")]
pub struct PopulationGenerator {
    l: RealMatrix,
}

#[derive(Serialize, Deserialize)]
struct PopulationGeneratorDto {
    #[serde(rename = "L")]
    l: Vec<Vec<f64>>,
}

impl TryFrom<PopulationGeneratorDto> for PopulationGenerator {
    type Error = LindbladError;
    fn try_from(dto: PopulationGeneratorDto) -> Result<Self, LindbladError> {
        PopulationGenerator::from_rows(&dto.l)
    }
}

impl From<PopulationGenerator> for PopulationGeneratorDto {
    fn from(g: PopulationGenerator) -> Self {
        PopulationGeneratorDto { l: g.l.to_nested() }
    }
}

impl PopulationGenerator {
    pub fn new(m: RealMatrix) -> Result<Self, LindbladError> {
        if !m.is_square() {
            return Err(LindbladError::InvalidGenerator(format!(
                "matrix is {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        if !m.is_finite() {
            return Err(LindbladError::InvalidGenerator("non-finite entries".into()));
        }
        let d = m.rows();
        let mut l = m;
        for r in 0..d {
            for c in 0..d {
                let v = l[(r, c)];
                if r != c {
                    if v < -RATE_CLIP {
                        return Err(LindbladError::InvalidGenerator(format!(
                            "off-diagonal rate ({r},{c}) = {v:e} is negative"
                        )));
                    }
                    if v < 0.0 {
                        l[(r, c)] = 0.0;
                    }
                } else if v > RATE_CLIP {
                    return Err(LindbladError::InvalidGenerator(format!(
                        "diagonal entry ({r},{r}) = {v:e} is positive"
                    )));
                }
            }
        }
        for c in 0..d {
            let sum: f64 = (0..d).map(|r| l[(r, c)]).sum();
            if sum.abs() > COLUMN_SUM_TOL {
                return Err(LindbladError::InvalidGenerator(format!(
                    "column {c} sums to {sum:e}, expected 0"
                )));
            }
        }
        Ok(Self { l })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LindbladError> {
        Self::new(RealMatrix::from_rows(rows)?)
    }

    /// Build from the off-diagonal rates alone; diagonals take whatever
    /// value makes the columns sum to zero.
    pub fn from_rates(
        d: usize,
        mut rate: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, LindbladError> {
        let mut m = RealMatrix::zeros(d, d);
        for x_to in 0..d {
            for x_from in 0..d {
                if x_to != x_from {
                    m[(x_to, x_from)] = rate(x_to, x_from);
                }
            }
        }
        for c in 0..d {
            let sum: f64 = (0..d).filter(|&r| r != c).map(|r| m[(r, c)]).sum();
            m[(c, c)] = -sum;
        }
        Self::new(m)
    }

    pub fn zero(d: usize) -> Self {
        Self {
            l: RealMatrix::zeros(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// L_{x'|x}, clamped at zero for the off-diagonal rates.
    pub fn rate(&self, x_to: usize, x_from: usize) -> f64 {
        if x_to == x_from {
            self.l[(x_to, x_from)]
        } else {
            self.l[(x_to, x_from)].max(0.0)
        }
    }

    /// |L_{x|x}|: total exit rate of level x.
    pub fn exit_rate(&self, x: usize) -> f64 {
        self.l[(x, x)].abs()
    }

    /// Damping rate gamma_{xy} = (|L_{x|x}| + |L_{y|y}|)/2.
    pub fn damping_rate(&self, x: usize, y: usize) -> f64 {
        0.5 * (self.exit_rate(x) + self.exit_rate(y))
    }

    pub fn matrix(&self) -> &RealMatrix {
        &self.l
    }

    /// Stochastic propagator e^(L t).
    pub fn propagator(&self, t: f64) -> Result<crate::channels::PopulationMatrix, ChannelError> {
        crate::channels::PopulationMatrix::new(self.l.expm_scaled(t)?)
    }

    pub fn eigenvalues(&self) -> Result<Vec<Complex64>, LinalgError> {
        eigvals_real(&self.l)
    }

    /// Eigenvalues within [`NULL_EIG_TOL`] of zero.
    pub fn null_eigenvalues(&self) -> Result<Vec<Complex64>, LinalgError> {
        Ok(self
            .eigenvalues()?
            .into_iter()
            .filter(|z| z.norm() <= NULL_EIG_TOL)
            .collect())
    }

    /// Ergodic means a unique stationary direction with full support: one
    /// null eigenvalue whose normalized eigenvector is strictly positive.
    pub fn is_ergodic(&self) -> Result<bool, LinalgError> {
        if self.null_eigenvalues()?.len() != 1 {
            return Ok(false);
        }
        match self.stationary_population() {
            Ok(pi) => Ok(pi.iter().all(|&p| p > SUPPORT_TOL)),
            Err(_) => Ok(false),
        }
    }

    /// The stationary population, computed as the image of the uniform
    /// distribution under e^(L T) for a horizon set by the slowest
    /// relaxation rate.
    pub fn stationary_population(&self) -> Result<Vec<f64>, LinalgError> {
        let slowest = self
            .eigenvalues()?
            .iter()
            .filter(|z| z.norm() > NULL_EIG_TOL)
            .map(|z| z.re.abs())
            .fold(f64::INFINITY, f64::min);
        if !slowest.is_finite() || slowest <= 0.0 {
            return Err(LinalgError::DimensionMismatch(
                "generator has no relaxing directions".into(),
            ));
        }
        let d = self.dim();
        let horizon = 60.0 / slowest;
        let p = self.l.expm_scaled(horizon)?;
        let uniform = vec![1.0 / d as f64; d];
        let mut pi = p.matvec(&uniform);
        let norm: f64 = pi.iter().sum();
        for v in &mut pi {
            *v /= norm;
        }
        Ok(pi)
    }
}

/// Covariant CP-map coefficients A^{x'|x}_{y'|y}, in the same per-mode block
/// layout as a channel; the induced population generator is read off the
/// nonzero-mode diagonals.
#[derive(Debug, Clone)]
pub struct CovariantGenerator {
    table: ModeTable,
    ablocks: Vec<ComplexMatrix>,
}

impl CovariantGenerator {
    /// Validates structure and complete positivity of the CP part; the
    /// induced population generator must also be valid.
    pub fn new(table: ModeTable, ablocks: Vec<ComplexMatrix>) -> Result<Self, LindbladError> {
        let gen = Self::new_unchecked(table, ablocks)?;
        for (mode, block) in gen.table.modes().iter().zip(&gen.ablocks) {
            match psd_check(block, CP_PSD_TOL) {
                Ok(true) => {}
                Ok(false) => {
                    return Err(LindbladError::NotCompletelyPositive(format!(
                        "Choi block at frequency {} is not positive semidefinite",
                        mode.omega
                    )))
                }
                Err(e) => {
                    return Err(LindbladError::NotCompletelyPositive(format!(
                        "Choi block at frequency {}: {e}",
                        mode.omega
                    )))
                }
            }
        }
        gen.population_generator()?;
        Ok(gen)
    }

    /// Structural checks only (shapes, finiteness, Hermiticity). Used for
    /// probing perturbed generators that may sit outside the CP cone.
    pub fn new_unchecked(
        table: ModeTable,
        ablocks: Vec<ComplexMatrix>,
    ) -> Result<Self, LindbladError> {
        if ablocks.len() != table.modes().len() {
            return Err(LindbladError::Structure(format!(
                "{} blocks for {} modes",
                ablocks.len(),
                table.modes().len()
            )));
        }
        for (mode, block) in table.modes().iter().zip(&ablocks) {
            let n = mode.pairs.len();
            if block.rows() != n || block.cols() != n {
                return Err(LindbladError::Structure(format!(
                    "block at frequency {} is {}x{}, mode has {} pairs",
                    mode.omega,
                    block.rows(),
                    block.cols(),
                    n
                )));
            }
            if !block.is_finite() {
                return Err(LindbladError::Structure("non-finite block entries".into()));
            }
            if block.hermiticity_defect() > 1e-12 {
                return Err(LindbladError::Structure(format!(
                    "block at frequency {} is not Hermitian",
                    mode.omega
                )));
            }
        }
        Ok(Self { table, ablocks })
    }

    pub fn zero(table: ModeTable) -> Self {
        let ablocks = table
            .modes()
            .iter()
            .map(|m| ComplexMatrix::zeros(m.pairs.len(), m.pairs.len()))
            .collect();
        Self { table, ablocks }
    }

    pub fn table(&self) -> &ModeTable {
        &self.table
    }

    pub fn ablocks(&self) -> &[ComplexMatrix] {
        &self.ablocks
    }

    pub fn dim(&self) -> usize {
        self.table.dim()
    }

    /// A^{x'|x}_{y'|y}; zero across modes.
    pub fn coefficient(&self, x_to: usize, x_from: usize, y_to: usize, y_from: usize) -> Complex64 {
        let (mi, i) = self.table.pair_position(x_to, x_from);
        let (mj, j) = self.table.pair_position(y_to, y_from);
        if mi != mj {
            ZERO
        } else {
            self.ablocks[mi][(i, j)]
        }
    }

    /// Diagonal rate A_{x'|x} = A^{x'|x}_{x'|x}.
    pub fn a_rate(&self, x_to: usize, x_from: usize) -> f64 {
        let (mi, i) = self.table.pair_position(x_to, x_from);
        self.ablocks[mi][(i, i)].re
    }

    /// Total A-exit weight of level x: sum_z A_{z|x}.
    pub fn a_exit(&self, x: usize) -> f64 {
        (0..self.dim()).map(|z| self.a_rate(z, x)).sum()
    }

    /// Decoherence coefficient alpha_{xy} = (sum_z A_{z|x} + A_{z|y})/2 - A^{x|x}_{y|y}.
    pub fn alpha(&self, x: usize, y: usize) -> Complex64 {
        Complex64::new(0.5 * (self.a_exit(x) + self.a_exit(y)), 0.0) - self.coefficient(x, x, y, y)
    }

    /// The population generator induced on the diagonal: L_{x'|x} = A_{x'|x}
    /// off the diagonal and L_{x|x} = -sum_{z != x} A_{z|x}.
    pub fn population_generator(&self) -> Result<PopulationGenerator, LindbladError> {
        let d = self.dim();
        PopulationGenerator::from_rates(d, |x_to, x_from| self.a_rate(x_to, x_from))
    }
}

/// Action of the dissipator on an arbitrary matrix:
/// (d m / dt)_{x'y'} = sum over the mode of A^{x'|x}_{y'|y} m_{xy}
///                     minus (sum_z A_{z|x'} + A_{z|y'})/2 times m_{x'y'}.
pub fn action_on(gen: &CovariantGenerator, m: &ComplexMatrix) -> ComplexMatrix {
    let d = gen.dim();
    let exits: Vec<f64> = (0..d).map(|x| gen.a_exit(x)).collect();
    let mut out = ComplexMatrix::zeros(d, d);
    for mode in gen.table.modes() {
        for &(x_to, y_to) in &mode.pairs {
            let mut acc = ZERO;
            for &(x_from, y_from) in &mode.pairs {
                let a = gen.coefficient(x_to, x_from, y_to, y_from);
                if a != ZERO {
                    acc += a * m[(x_from, y_from)];
                }
            }
            acc -= m[(x_to, y_to)].scale(0.5 * (exits[x_to] + exits[y_to]));
            out[(x_to, y_to)] = acc;
        }
    }
    out
}

/// d rho / dt for a state; trace-free and Hermitian by construction.
pub fn lindbladian_action(
    gen: &CovariantGenerator,
    rho: &DensityMatrix,
) -> Result<ComplexMatrix, LindbladError> {
    if rho.dim() != gen.dim() {
        return Err(LindbladError::Structure(format!(
            "state dimension {} does not match generator dimension {}",
            rho.dim(),
            gen.dim()
        )));
    }
    Ok(action_on(gen, rho.matrix()))
}

/// Superoperator matrix of the dissipator in the column-stacking convention.
pub fn generator_superoperator(gen: &CovariantGenerator) -> ComplexMatrix {
    let d = gen.dim();
    let mut s = ComplexMatrix::zeros(d * d, d * d);
    for col in 0..d * d {
        let (c_from, r_from) = (col / d, col % d);
        let mut unit = ComplexMatrix::zeros(d, d);
        unit[(r_from, c_from)] = Complex64::new(1.0, 0.0);
        let image = action_on(gen, &unit);
        for row in 0..d * d {
            let (c_to, r_to) = (row / d, row % d);
            s[(row, col)] = image[(r_to, c_to)];
        }
    }
    s
}

/// Free-function mirror of [`CovariantGenerator::population_generator`].
pub fn population_generator(
    gen: &CovariantGenerator,
) -> Result<PopulationGenerator, LindbladError> {
    gen.population_generator()
}

/// Check the defining symmetry directly: the dissipator must commute with
/// the Hamiltonian commutator on a matrix-unit basis.
pub fn verify_covariance(
    gen: &CovariantGenerator,
    h: &Hamiltonian,
    tol: f64,
) -> Result<bool, LindbladError> {
    let d = gen.dim();
    if h.dim() != d {
        return Err(LindbladError::Structure(
            "Hamiltonian dimension mismatch".into(),
        ));
    }
    let comm = |m: &ComplexMatrix| -> ComplexMatrix {
        ComplexMatrix::from_fn(d, d, |r, c| m[(r, c)].scale(h.omegas()[r] - h.omegas()[c]))
    };
    for x in 0..d {
        for y in 0..d {
            let mut unit = ComplexMatrix::zeros(d, d);
            unit[(x, y)] = Complex64::new(1.0, 0.0);
            let lhs = action_on(gen, &comm(&unit));
            let rhs = comm(&action_on(gen, &unit));
            if lhs.sub(&rhs).max_abs() > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// The complex per-mode evolution matrix M with d v / dt = M v for the
/// mode's amplitude vector v.
fn mode_generator(gen: &CovariantGenerator, mode_index: usize) -> ComplexMatrix {
    let mode = &gen.table.modes()[mode_index];
    let n = mode.pairs.len();
    let d = gen.dim();
    let exits: Vec<f64> = (0..d).map(|x| gen.a_exit(x)).collect();
    ComplexMatrix::from_fn(n, n, |i, j| {
        let (x_to, y_to) = mode.pairs[i];
        let (x_from, y_from) = mode.pairs[j];
        let mut v = gen.coefficient(x_to, x_from, y_to, y_from);
        if i == j {
            v -= Complex64::new(0.5 * (exits[x_to] + exits[y_to]), 0.0);
        }
        v
    })
}

/// Frame choice for trajectory output. The energy-preserving unitary part
/// commutes with the dissipator, so the lab frame differs from the
/// interaction picture only by the conjugation rho -> e^{-iHt} rho e^{iHt}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    Interaction,
    Lab,
}

/// Solve the master equation on a time grid by exact per-mode propagation:
/// populations through e^(L t), every positive mode through expm of its
/// block generator, negative modes by conjugation.
pub fn evolve(
    gen: &CovariantGenerator,
    rho0: &DensityMatrix,
    times: &[f64],
) -> Result<Trajectory<DensityMatrix>, LindbladError> {
    evolve_in_frame(gen, rho0, times, Frame::Interaction)
}

pub fn evolve_in_frame(
    gen: &CovariantGenerator,
    rho0: &DensityMatrix,
    times: &[f64],
    frame: Frame,
) -> Result<Trajectory<DensityMatrix>, LindbladError> {
    let d = gen.dim();
    if rho0.dim() != d {
        return Err(LindbladError::Structure(format!(
            "state dimension {} does not match generator dimension {d}",
            rho0.dim()
        )));
    }
    if times.is_empty() || times.windows(2).any(|w| w[1] <= w[0]) || times[0] < 0.0 {
        return Err(LindbladError::Linalg(LinalgError::BadTimeGrid));
    }
    let l = gen.population_generator()?;
    let p0 = rho0.populations();

    let positive: Vec<usize> = gen.table.positive_mode_indices().collect();
    let mode_gens: Vec<ComplexMatrix> =
        positive.iter().map(|&mi| mode_generator(gen, mi)).collect();
    let mode_v0: Vec<Vec<Complex64>> = positive
        .iter()
        .map(|&mi| {
            gen.table.modes()[mi]
                .pairs
                .iter()
                .map(|&(x, y)| rho0.entry(x, y))
                .collect()
        })
        .collect();

    let mut states = Vec::with_capacity(times.len());
    for &t in times {
        let populations = l.matrix().expm_scaled(t)?.matvec(&p0);
        let mut m = ComplexMatrix::zeros(d, d);
        for (x, &p) in populations.iter().enumerate() {
            m[(x, x)] = Complex64::new(p, 0.0);
        }
        for ((&mi, mg), v0) in positive.iter().zip(&mode_gens).zip(&mode_v0) {
            let v = expm(&mg.scale_re(t))?.matvec(v0);
            for (&(x, y), &a) in gen.table.modes()[mi].pairs.iter().zip(&v) {
                m[(x, y)] = a;
                m[(y, x)] = a.conj();
            }
        }
        let mut state = DensityMatrix::new(m).map_err(|e| LindbladError::StateDrift {
            t,
            reason: e.to_string(),
        })?;
        if frame == Frame::Lab {
            let omegas = gen.table.omegas();
            let rotated = ComplexMatrix::from_fn(d, d, |r, c| {
                state.entry(r, c) * Complex64::new(0.0, -(omegas[r] - omegas[c]) * t).exp()
            });
            state = DensityMatrix::new(rotated).map_err(|e| LindbladError::StateDrift {
                t,
                reason: e.to_string(),
            })?;
        }
        states.push(state);
    }
    Ok(Trajectory::new(times.to_vec(), states)?)
}

/// The bound ODE matrix of a coherence mode: damping rates on the diagonal
/// (negated), transport rates sqrt(L_{x'|x} L_{y'|y}) everywhere else.
#[derive(Debug, Clone)]
pub struct ModePropagator {
    pub omega: f64,
    pub pairs: Vec<(usize, usize)>,
    pub q: RealMatrix,
}

pub fn mode_propagator(
    l: &PopulationGenerator,
    omega: f64,
    table: &ModeTable,
) -> Result<ModePropagator, LindbladError> {
    let mode = table.mode(omega)?;
    if mode.omega == 0.0 {
        return Err(LindbladError::NotACoherenceMode(omega));
    }
    if l.dim() != table.dim() {
        return Err(LindbladError::Structure(
            "generator and table dimensions differ".into(),
        ));
    }
    let n = mode.pairs.len();
    let q = RealMatrix::from_fn(n, n, |i, j| {
        let (x_to, y_to) = mode.pairs[i];
        let (x_from, y_from) = mode.pairs[j];
        if i == j {
            -l.damping_rate(x_to, y_to)
        } else {
            (l.rate(x_to, x_from) * l.rate(y_to, y_from)).sqrt()
        }
    });
    Ok(ModePropagator {
        omega: mode.omega,
        pairs: mode.pairs.clone(),
        q,
    })
}

/// The optimal coherence envelope: magnitudes of the mode entries evolved
/// by e^(Q t) from their initial values. Componentwise non-negative.
pub fn bound_trajectory(
    l: &PopulationGenerator,
    rho0: &DensityMatrix,
    omega: f64,
    table: &ModeTable,
    times: &[f64],
) -> Result<Trajectory<Vec<f64>>, LindbladError> {
    let prop = mode_propagator(l, omega, table)?;
    bound_trajectory_with(&prop, rho0, times)
}

pub fn bound_trajectory_with(
    prop: &ModePropagator,
    rho0: &DensityMatrix,
    times: &[f64],
) -> Result<Trajectory<Vec<f64>>, LindbladError> {
    if times.is_empty() || times.windows(2).any(|w| w[1] <= w[0]) || times[0] < 0.0 {
        return Err(LindbladError::Linalg(LinalgError::BadTimeGrid));
    }
    let v0: Vec<f64> = prop
        .pairs
        .iter()
        .map(|&(x, y)| rho0.magnitude(x, y))
        .collect();
    let mut states = Vec::with_capacity(times.len());
    for &t in times {
        let v = prop.q.expm_scaled(t)?.matvec(&v0);
        // e^(Qt) of a Metzler matrix is entrywise non-negative; clamp rounding
        states.push(v.into_iter().map(|x| x.max(0.0)).collect::<Vec<f64>>());
    }
    Ok(Trajectory::new(times.to_vec(), states)?)
}

/// Check the phase-matching condition for mode `omega`: for any two entry
/// pairs (x', y') and (x, y) of the mode,
/// theta_{x'y'} conj(theta_{xy}) = theta_{x'x} conj(theta_{y'y}).
/// Entries of zero magnitude use the phase-1 convention.
pub fn phase_matching(
    rho0: &DensityMatrix,
    omega: f64,
    table: &ModeTable,
) -> Result<bool, LindbladError> {
    Ok(find_phase_mismatch(rho0, omega, table)?.is_none())
}

fn find_phase_mismatch(
    rho0: &DensityMatrix,
    omega: f64,
    table: &ModeTable,
) -> Result<Option<LindbladError>, LindbladError> {
    let mode = table.mode(omega)?;
    for &(xp, yp) in &mode.pairs {
        for &(x, y) in &mode.pairs {
            if (xp, yp) == (x, y) {
                continue;
            }
            let lhs = rho0.coherence_phase(xp, yp) * rho0.coherence_phase(x, y).conj();
            let rhs = rho0.coherence_phase(xp, x) * rho0.coherence_phase(yp, y).conj();
            let defect = (lhs - rhs).norm();
            if defect > PHASE_TOL {
                return Ok(Some(LindbladError::PhaseMismatch {
                    omega: mode.omega,
                    xp,
                    yp,
                    x,
                    y,
                    defect,
                }));
            }
        }
    }
    Ok(None)
}

/// The generator attaining the coherence bound for a given population
/// dynamics: A_{x'|x'} = 0 and
/// A^{x'|x}_{y'|y} = theta_{x'x}(0) conj(theta_{y'y}(0)) sqrt(L_{x'|x} L_{y'|y}).
///
/// Requires the phase-matching condition in every multi-entry mode; the
/// first violated quadruple is reported otherwise.
pub fn optimal_generator(
    l: &PopulationGenerator,
    rho0: &DensityMatrix,
    table: &ModeTable,
) -> Result<CovariantGenerator, LindbladError> {
    let d = table.dim();
    if l.dim() != d || rho0.dim() != d {
        return Err(LindbladError::Structure(
            "generator, state and mode table dimensions differ".into(),
        ));
    }
    for mode in table.modes() {
        if mode.omega != 0.0 && mode.pairs.len() > 1 {
            if let Some(err) = find_phase_mismatch(rho0, mode.omega, table)? {
                return Err(err);
            }
        }
    }
    let zero_index = table.zero_mode_index();
    let ablocks = table
        .modes()
        .iter()
        .enumerate()
        .map(|(mi, mode)| {
            let n = mode.pairs.len();
            if mi == zero_index {
                // A_{x|x} = 0 forces the whole zero block to vanish
                ComplexMatrix::zeros(n, n)
            } else {
                ComplexMatrix::from_fn(n, n, |i, j| {
                    let (x_to, x_from) = mode.pairs[i];
                    let (y_to, y_from) = mode.pairs[j];
                    let mag = (l.rate(x_to, x_from) * l.rate(y_to, y_from)).sqrt();
                    rho0.coherence_phase(x_to, x_from)
                        * rho0.coherence_phase(y_to, y_from).conj()
                        * mag
                })
            }
        })
        .collect();
    CovariantGenerator::new(table.clone(), ablocks)
}

// ---------------------------------------------------------------------------
// serialization

#[derive(Serialize, Deserialize)]
struct GeneratorDto {
    omegas: Vec<f64>,
    #[serde(rename = "Ablocks")]
    ablocks: Vec<BlockDto>,
}

impl Serialize for CovariantGenerator {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        GeneratorDto {
            omegas: self.table.omegas().to_vec(),
            ablocks: blocks_to_dtos(&self.table, &self.ablocks),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CovariantGenerator {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let dto = GeneratorDto::deserialize(deserializer)?;
        let h = Hamiltonian::new(dto.omegas).map_err(D::Error::custom)?;
        let table = bohr_modes(&h, FREQ_MERGE_TOL).map_err(D::Error::custom)?;
        let ablocks = blocks_from_dtos(&table, &dto.ablocks).map_err(D::Error::custom)?;
        CovariantGenerator::new(table, ablocks).map_err(D::Error::custom)
    }
}
