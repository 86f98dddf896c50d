//! Hamiltonians, Bohr spectra, mode tables and mode decompositions.
//!
//! A non-degenerate Hamiltonian H = sum_x w_x |x><x| splits the entries of a
//! density matrix into modes: entry (x, y) belongs to the mode with Bohr
//! frequency w_x - w_y. Covariant maps act block-wise on these modes, so the
//! mode table built here is the index structure everything else runs on.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{psd_check, ComplexMatrix, LinalgError};

/// Relative tolerance used to merge Bohr frequencies read from user input.
pub const FREQ_MERGE_TOL: f64 = 1e-9;
/// Hermiticity tolerance for density matrices.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Trace tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalue floor for density matrices.
pub const PSD_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("a Hamiltonian needs at least two levels, got {0}")]
    TooSmall(usize),
    #[error("frequencies must be finite")]
    NonFinite,
    #[error("degenerate Hamiltonian: levels {x} and {y} coincide within tolerance ({wx} vs {wy})")]
    Degenerate {
        x: usize,
        y: usize,
        wx: f64,
        wy: f64,
    },
    #[error("frequency {0} is not in the Bohr spectrum")]
    UnknownMode(f64),
    #[error("dimension mismatch: state is {state}, mode table is {table}")]
    DimensionMismatch { state: usize, table: usize },
    #[error("not a density matrix: {0}")]
    InvalidState(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Non-degenerate Hamiltonian given by its level frequencies (hbar = 1).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "HamiltonianDto", into = "HamiltonianDto")]
pub struct Hamiltonian {
    omegas: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct HamiltonianDto {
    omegas: Vec<f64>,
}

impl TryFrom<HamiltonianDto> for Hamiltonian {
    type Error = SpectrumError;
    fn try_from(dto: HamiltonianDto) -> Result<Self, SpectrumError> {
        Hamiltonian::new(dto.omegas)
    }
}

impl From<Hamiltonian> for HamiltonianDto {
    fn from(h: Hamiltonian) -> Self {
        HamiltonianDto { omegas: h.omegas }
    }
}

impl Hamiltonian {
    pub fn new(omegas: Vec<f64>) -> Result<Self, SpectrumError> {
        if omegas.len() < 2 {
            return Err(SpectrumError::TooSmall(omegas.len()));
        }
        if !omegas.iter().all(|w| w.is_finite()) {
            return Err(SpectrumError::NonFinite);
        }
        let tol = level_tolerance(&omegas, FREQ_MERGE_TOL);
        for x in 0..omegas.len() {
            for y in x + 1..omegas.len() {
                if (omegas[x] - omegas[y]).abs() <= tol {
                    return Err(SpectrumError::Degenerate {
                        x,
                        y,
                        wx: omegas[x],
                        wy: omegas[y],
                    });
                }
            }
        }
        Ok(Self { omegas })
    }

    /// Equidistant ladder 0, w, 2w, ...
    pub fn equidistant(d: usize, omega: f64) -> Result<Self, SpectrumError> {
        Self::new((0..d).map(|k| k as f64 * omega).collect())
    }

    pub fn dim(&self) -> usize {
        self.omegas.len()
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn bohr_frequency(&self, x: usize, y: usize) -> f64 {
        self.omegas[x] - self.omegas[y]
    }
}

fn level_tolerance(omegas: &[f64], rel: f64) -> f64 {
    let scale = omegas.iter().fold(0.0f64, |acc, w| acc.max(w.abs()));
    rel * scale.max(f64::MIN_POSITIVE)
}

/// One mode of the Bohr spectrum: its frequency and the ordered (x, y)
/// entry pairs with w_x - w_y equal to it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mode {
    pub omega: f64,
    pub pairs: Vec<(usize, usize)>,
}

/// All modes of a Hamiltonian, sorted by frequency. Pairs of modes with
/// omega >= 0 are sorted lexicographically; the pairs of mode -w are the
/// element-wise transposes of mode w in the same order, so conjugate modes
/// stay aligned.
#[derive(Debug, Clone)]
pub struct ModeTable {
    omegas: Vec<f64>,
    modes: Vec<Mode>,
    pair_index: Vec<(usize, usize)>, // (mode, position) for entry x*d + y
    freq_tol: f64,
}

/// Group the matrix entries of a d-level system by Bohr frequency.
/// `tol` is the relative frequency-merge tolerance (see [`FREQ_MERGE_TOL`]).
pub fn bohr_modes(h: &Hamiltonian, tol: f64) -> Result<ModeTable, SpectrumError> {
    let d = h.dim();
    let eff = level_tolerance(h.omegas(), tol);
    for x in 0..d {
        for y in x + 1..d {
            if (h.omegas[x] - h.omegas[y]).abs() <= eff {
                return Err(SpectrumError::Degenerate {
                    x,
                    y,
                    wx: h.omegas[x],
                    wy: h.omegas[y],
                });
            }
        }
    }

    // positive Bohr frequencies, clustered within the effective tolerance
    let mut positive: Vec<(f64, (usize, usize))> = Vec::new();
    for x in 0..d {
        for y in 0..d {
            if x != y {
                let w = h.omegas[x] - h.omegas[y];
                if w > 0.0 {
                    positive.push((w, (x, y)));
                }
            }
        }
    }
    positive.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut modes: Vec<Mode> = Vec::new();
    let mut i = 0;
    while i < positive.len() {
        let mut j = i + 1;
        while j < positive.len() && positive[j].0 - positive[j - 1].0 <= eff {
            j += 1;
        }
        let freq = positive[i..j].iter().map(|p| p.0).sum::<f64>() / (j - i) as f64;
        let mut pairs: Vec<(usize, usize)> = positive[i..j].iter().map(|p| p.1).collect();
        pairs.sort();
        modes.push(Mode { omega: freq, pairs });
        i = j;
    }

    let mut all = Vec::with_capacity(2 * modes.len() + 1);
    for m in modes.iter().rev() {
        all.push(Mode {
            omega: -m.omega,
            pairs: m.pairs.iter().map(|&(x, y)| (y, x)).collect(),
        });
    }
    all.push(Mode {
        omega: 0.0,
        pairs: (0..d).map(|x| (x, x)).collect(),
    });
    all.extend(modes);

    let mut pair_index = vec![(usize::MAX, usize::MAX); d * d];
    for (mi, m) in all.iter().enumerate() {
        for (pos, &(x, y)) in m.pairs.iter().enumerate() {
            pair_index[x * d + y] = (mi, pos);
        }
    }
    debug_assert!(pair_index.iter().all(|&(m, _)| m != usize::MAX));

    Ok(ModeTable {
        omegas: h.omegas.clone(),
        modes: all,
        pair_index,
        freq_tol: eff,
    })
}

impl ModeTable {
    pub fn dim(&self) -> usize {
        self.omegas.len()
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn hamiltonian(&self) -> Hamiltonian {
        Hamiltonian {
            omegas: self.omegas.clone(),
        }
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn freq_tol(&self) -> f64 {
        self.freq_tol
    }

    pub fn mode_index(&self, omega: f64) -> Option<usize> {
        self.modes
            .iter()
            .position(|m| (m.omega - omega).abs() <= self.freq_tol.max(1e-300))
    }

    pub fn mode(&self, omega: f64) -> Result<&Mode, SpectrumError> {
        self.mode_index(omega)
            .map(|i| &self.modes[i])
            .ok_or(SpectrumError::UnknownMode(omega))
    }

    pub fn zero_mode_index(&self) -> usize {
        self.mode_index(0.0)
            .expect("mode table always contains the zero mode")
    }

    /// (mode index, position within the mode) of entry (x, y).
    pub fn pair_position(&self, x: usize, y: usize) -> (usize, usize) {
        self.pair_index[x * self.dim() + y]
    }

    pub fn pair_mode(&self, x: usize, y: usize) -> usize {
        self.pair_position(x, y).0
    }

    pub fn bohr_frequency(&self, x: usize, y: usize) -> f64 {
        self.omegas[x] - self.omegas[y]
    }

    /// True when every nonzero mode holds a single entry pair.
    pub fn is_nondegenerate_bohr(&self) -> bool {
        let zero = self.zero_mode_index();
        self.modes
            .iter()
            .enumerate()
            .all(|(i, m)| i == zero || m.pairs.len() == 1)
    }

    /// Indices of the modes with omega > 0.
    pub fn positive_mode_indices(&self) -> impl Iterator<Item = usize> + '_ {
        let zero = self.zero_mode_index();
        (zero + 1)..self.modes.len()
    }

    /// Index of the mode with frequency -w given the index of mode w.
    pub fn conjugate_mode_index(&self, index: usize) -> usize {
        self.modes.len() - 1 - index
    }
}

/// d x d density matrix: Hermitian, unit trace, positive semidefinite
/// within fixed tolerances.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "DensityMatrixDto", into = "DensityMatrixDto")]
pub struct DensityMatrix {
    m: ComplexMatrix,
}

#[derive(Serialize, Deserialize)]
struct DensityMatrixDto {
    d: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl TryFrom<DensityMatrixDto> for DensityMatrix {
    type Error = SpectrumError;
    fn try_from(dto: DensityMatrixDto) -> Result<Self, SpectrumError> {
        let d = dto.d;
        if dto.re.len() != d
            || dto.im.len() != d
            || dto.re.iter().any(|r| r.len() != d)
            || dto.im.iter().any(|r| r.len() != d)
        {
            return Err(SpectrumError::InvalidState(
                "re/im shape does not match d".into(),
            ));
        }
        let m = ComplexMatrix::from_fn(d, d, |r, c| Complex64::new(dto.re[r][c], dto.im[r][c]));
        DensityMatrix::new(m)
    }
}

impl From<DensityMatrix> for DensityMatrixDto {
    fn from(rho: DensityMatrix) -> Self {
        let d = rho.dim();
        DensityMatrixDto {
            d,
            re: (0..d)
                .map(|r| (0..d).map(|c| rho.m[(r, c)].re).collect())
                .collect(),
            im: (0..d)
                .map(|r| (0..d).map(|c| rho.m[(r, c)].im).collect())
                .collect(),
        }
    }
}

impl DensityMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self, SpectrumError> {
        let d = m.require_square()?;
        if d == 0 {
            return Err(SpectrumError::InvalidState("empty matrix".into()));
        }
        if !m.is_finite() {
            return Err(SpectrumError::InvalidState("non-finite entries".into()));
        }
        let defect = m.hermiticity_defect();
        if defect > HERMITICITY_TOL {
            return Err(SpectrumError::InvalidState(format!(
                "hermiticity defect {defect:e} exceeds {HERMITICITY_TOL:e}"
            )));
        }
        let tr = m.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(SpectrumError::InvalidState(format!("trace {tr} is not 1")));
        }
        if !psd_check(&m.add(&m.dagger()).scale_re(0.5), PSD_TOL)? {
            return Err(SpectrumError::InvalidState(format!(
                "an eigenvalue is below -{PSD_TOL:e}"
            )));
        }
        Ok(Self { m })
    }

    pub fn from_pure(psi: &[Complex64]) -> Result<Self, SpectrumError> {
        let norm_sq: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if norm_sq <= 0.0 {
            return Err(SpectrumError::InvalidState("zero state vector".into()));
        }
        let d = psi.len();
        let m = ComplexMatrix::from_fn(d, d, |r, c| psi[r] * psi[c].conj() / norm_sq);
        Self::new(m)
    }

    pub fn maximally_mixed(d: usize) -> Self {
        let m = ComplexMatrix::identity(d).scale_re(1.0 / d as f64);
        Self { m }
    }

    /// Qubit state [[p, c], [conj(c), 1-p]].
    pub fn qubit(p: f64, c: Complex64) -> Result<Self, SpectrumError> {
        let mut m = ComplexMatrix::zeros(2, 2);
        m[(0, 0)] = Complex64::new(p, 0.0);
        m[(0, 1)] = c;
        m[(1, 0)] = c.conj();
        m[(1, 1)] = Complex64::new(1.0 - p, 0.0);
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.m.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn entry(&self, x: usize, y: usize) -> Complex64 {
        self.m[(x, y)]
    }

    pub fn magnitude(&self, x: usize, y: usize) -> f64 {
        self.m[(x, y)].norm()
    }

    /// Unit phase factor of entry (x, y); 1 when the entry vanishes.
    pub fn phase_factor(&self, x: usize, y: usize) -> Complex64 {
        let z = self.m[(x, y)];
        let mag = z.norm();
        if mag == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            z / mag
        }
    }

    /// Phase factor of an off-diagonal entry; diagonal entries are
    /// populations and carry phase 1 by convention (they may sit a rounding
    /// error below zero after propagation, which must not read as phase -1).
    pub fn coherence_phase(&self, x: usize, y: usize) -> Complex64 {
        if x == y {
            Complex64::new(1.0, 0.0)
        } else {
            self.phase_factor(x, y)
        }
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|x| self.m[(x, x)].re).collect()
    }
}

/// The amplitudes of one mode of a state, aligned with the mode's pair order.
#[derive(Debug, Clone)]
pub struct ModeVector {
    pub omega: f64,
    pub amplitudes: Vec<Complex64>,
}

/// Split a state into its modes of coherence; summing the pieces
/// reconstructs the state entry for entry.
pub fn decompose(rho: &DensityMatrix, table: &ModeTable) -> Result<Vec<ModeVector>, SpectrumError> {
    if rho.dim() != table.dim() {
        return Err(SpectrumError::DimensionMismatch {
            state: rho.dim(),
            table: table.dim(),
        });
    }
    Ok(table
        .modes()
        .iter()
        .map(|m| ModeVector {
            omega: m.omega,
            amplitudes: m.pairs.iter().map(|&(x, y)| rho.entry(x, y)).collect(),
        })
        .collect())
}

/// Total coherence magnitude of the mode at frequency `omega`:
/// the sum of |rho_xy| over the mode's pairs.
pub fn s_omega(rho: &DensityMatrix, omega: f64, table: &ModeTable) -> Result<f64, SpectrumError> {
    if rho.dim() != table.dim() {
        return Err(SpectrumError::DimensionMismatch {
            state: rho.dim(),
            table: table.dim(),
        });
    }
    let mode = table.mode(omega)?;
    Ok(mode.pairs.iter().map(|&(x, y)| rho.magnitude(x, y)).sum())
}

/// `s_omega` computed directly from a full magnitude matrix rather than a
/// validated state; used by the trajectory witnesses, where only |rho_xy|
/// is observed.
pub fn s_omega_from_magnitudes(
    mags: &[Vec<f64>],
    omega: f64,
    table: &ModeTable,
) -> Result<f64, SpectrumError> {
    let mode = table.mode(omega)?;
    Ok(mode.pairs.iter().map(|&(x, y)| mags[x][y]).sum())
}
