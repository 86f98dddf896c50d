//! Covariant CPTP maps.
//!
//! A channel commuting with time translations cannot mix modes, so its Choi
//! matrix is block-diagonal: one Hermitian block per Bohr frequency, indexed
//! by the jump pairs (x', x) with w_x' - w_x equal to that frequency. The
//! diagonal of the blocks is the population transfer matrix P; off-diagonal
//! entries move coherence between entries of the same state mode. Complete
//! positivity is positivity of every block.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{psd_check, ComplexMatrix, LinalgError, RealMatrix};
use crate::spectrum::{
    bohr_modes, DensityMatrix, Hamiltonian, ModeTable, SpectrumError, FREQ_MERGE_TOL,
};

/// Tolerance on stochastic column sums.
pub const STOCHASTIC_TOL: f64 = 1e-10;
/// Entries of a population matrix may undershoot zero by at most this much.
pub const ENTRY_CLIP: f64 = 1e-12;
/// Hermiticity tolerance for channel blocks.
pub const BLOCK_HERMITICITY_TOL: f64 = 1e-12;
/// PSD tolerance for Choi blocks.
pub const CHOI_PSD_TOL: f64 = 1e-9;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("population matrix invalid: {0}")]
    InvalidPopulation(String),
    #[error("channel structure invalid: {0}")]
    Structure(String),
    #[error("channel fails validation: {0}")]
    InvalidChannel(String),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Column-stochastic population transfer matrix P_{x'|x} (column x holds the
/// outgoing distribution of level x).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "PopulationMatrixDto", into = "PopulationMatrixDto")]
pub struct PopulationMatrix {
    p: RealMatrix,
}

#[derive(Serialize, Deserialize)]
struct PopulationMatrixDto {
    #[serde(rename = "P")]
    p: Vec<Vec<f64>>,
}

impl TryFrom<PopulationMatrixDto> for PopulationMatrix {
    type Error = ChannelError;
    fn try_from(dto: PopulationMatrixDto) -> Result<Self, ChannelError> {
        PopulationMatrix::from_rows(&dto.p)
    }
}

impl From<PopulationMatrix> for PopulationMatrixDto {
    fn from(p: PopulationMatrix) -> Self {
        PopulationMatrixDto { p: p.p.to_nested() }
    }
}

impl PopulationMatrix {
    pub fn new(m: RealMatrix) -> Result<Self, ChannelError> {
        if !m.is_square() {
            return Err(ChannelError::InvalidPopulation(format!(
                "matrix is {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        if !m.is_finite() {
            return Err(ChannelError::InvalidPopulation("non-finite entries".into()));
        }
        let d = m.rows();
        let mut clipped = m;
        for r in 0..d {
            for c in 0..d {
                let v = clipped[(r, c)];
                if v < -ENTRY_CLIP {
                    return Err(ChannelError::InvalidPopulation(format!(
                        "entry ({r},{c}) = {v:e} is negative beyond the clip tolerance"
                    )));
                }
                if v < 0.0 {
                    clipped[(r, c)] = 0.0;
                }
            }
        }
        for c in 0..d {
            let sum: f64 = (0..d).map(|r| clipped[(r, c)]).sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(ChannelError::InvalidPopulation(format!(
                    "column {c} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(Self { p: clipped })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ChannelError> {
        Self::new(RealMatrix::from_rows(rows)?)
    }

    pub fn identity(d: usize) -> Self {
        Self {
            p: RealMatrix::identity(d),
        }
    }

    pub fn dim(&self) -> usize {
        self.p.rows()
    }

    /// P_{x'|x}.
    pub fn get(&self, x_to: usize, x_from: usize) -> f64 {
        self.p[(x_to, x_from)]
    }

    pub fn matrix(&self) -> &RealMatrix {
        &self.p
    }

    pub fn apply(&self, populations: &[f64]) -> Vec<f64> {
        self.p.matvec(populations)
    }
}

/// Covariant channel stored as one Hermitian coefficient block per mode of
/// the Bohr spectrum; block entry (i, j) is C^{x'|x}_{y'|y} with (x', x) the
/// i-th and (y', y) the j-th jump pair of the mode.
#[derive(Debug, Clone)]
pub struct CovariantChannel {
    table: ModeTable,
    blocks: Vec<ComplexMatrix>,
}

/// Outcome of channel validation: faults are reported as diagnostics rather
/// than errors, so callers can inspect what failed.
#[derive(Debug, Clone)]
pub struct ChannelValidity {
    pub valid: bool,
    pub diagnostics: Vec<String>,
}

impl CovariantChannel {
    /// Structural construction: block shapes and Hermiticity are enforced,
    /// positivity and stochasticity are left to [`CovariantChannel::validate`].
    pub fn new(table: ModeTable, blocks: Vec<ComplexMatrix>) -> Result<Self, ChannelError> {
        if blocks.len() != table.modes().len() {
            return Err(ChannelError::Structure(format!(
                "{} blocks for {} modes",
                blocks.len(),
                table.modes().len()
            )));
        }
        for (mode, block) in table.modes().iter().zip(&blocks) {
            let n = mode.pairs.len();
            if block.rows() != n || block.cols() != n {
                return Err(ChannelError::Structure(format!(
                    "block at frequency {} is {}x{}, mode has {} pairs",
                    mode.omega,
                    block.rows(),
                    block.cols(),
                    n
                )));
            }
            if !block.is_finite() {
                return Err(ChannelError::Structure("non-finite block entries".into()));
            }
            let defect = block.hermiticity_defect();
            if defect > BLOCK_HERMITICITY_TOL {
                return Err(ChannelError::Structure(format!(
                    "block at frequency {} has hermiticity defect {defect:e}",
                    mode.omega
                )));
            }
        }
        Ok(Self { table, blocks })
    }

    /// The identity channel on the given mode structure.
    pub fn identity(table: ModeTable) -> Self {
        let zero_index = table.zero_mode_index();
        let blocks = table
            .modes()
            .iter()
            .enumerate()
            .map(|(i, mode)| {
                let n = mode.pairs.len();
                if i == zero_index {
                    ComplexMatrix::from_fn(n, n, |_, _| ONE)
                } else {
                    ComplexMatrix::zeros(n, n)
                }
            })
            .collect();
        Self { table, blocks }
    }

    pub fn table(&self) -> &ModeTable {
        &self.table
    }

    pub fn blocks(&self) -> &[ComplexMatrix] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.table.dim()
    }

    /// Coefficient C^{x'|x}_{y'|y}; zero when the two jump pairs belong to
    /// different modes (covariance forbids such couplings).
    pub fn coefficient(&self, x_to: usize, x_from: usize, y_to: usize, y_from: usize) -> Complex64 {
        let (mi, i) = self.table.pair_position(x_to, x_from);
        let (mj, j) = self.table.pair_position(y_to, y_from);
        if mi != mj {
            ZERO
        } else {
            self.blocks[mi][(i, j)]
        }
    }

    /// The population transfer matrix read off the block diagonals.
    pub fn population_matrix(&self) -> Result<PopulationMatrix, ChannelError> {
        let d = self.dim();
        let m = RealMatrix::from_fn(d, d, |x_to, x_from| {
            let (mi, i) = self.table.pair_position(x_to, x_from);
            self.blocks[mi][(i, i)].re
        });
        PopulationMatrix::new(m)
    }

    /// Full CP/TP validation: every Choi block PSD, induced P stochastic,
    /// and the necessary bound |C| <= sqrt(P P) on every coefficient.
    pub fn validate(&self) -> ChannelValidity {
        let mut diagnostics = Vec::new();
        for (mode, block) in self.table.modes().iter().zip(&self.blocks) {
            let n = mode.pairs.len();
            match psd_check(block, CHOI_PSD_TOL) {
                Ok(true) => {}
                Ok(false) => diagnostics.push(format!(
                    "Choi block at frequency {} is not positive semidefinite",
                    mode.omega
                )),
                Err(e) => diagnostics.push(format!("Choi block at frequency {}: {e}", mode.omega)),
            }
            for i in 0..n {
                for j in i + 1..n {
                    let cap = (block[(i, i)].re.max(0.0) * block[(j, j)].re.max(0.0)).sqrt();
                    if block[(i, j)].norm() > cap + CHOI_PSD_TOL {
                        diagnostics.push(format!(
                            "block at frequency {}: |C| = {} exceeds sqrt(P P) = {} for pairs {:?}, {:?}",
                            mode.omega,
                            block[(i, j)].norm(),
                            cap,
                            mode.pairs[i],
                            mode.pairs[j]
                        ));
                    }
                }
            }
        }
        if let Err(e) = self.population_matrix() {
            diagnostics.push(format!("induced population matrix: {e}"));
        }
        ChannelValidity {
            valid: diagnostics.is_empty(),
            diagnostics,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.validate().valid
    }
}

/// Assemble the d^2 x d^2 Choi matrix: entry (1/d) C^{x'|x}_{y'|y} sits at
/// row x'*d + x, column y'*d + y.
pub fn choi(ch: &CovariantChannel) -> ComplexMatrix {
    let d = ch.dim();
    let mut j = ComplexMatrix::zeros(d * d, d * d);
    let weight = 1.0 / d as f64;
    for (mode, block) in ch.table.modes().iter().zip(&ch.blocks) {
        for (i, &(x_to, x_from)) in mode.pairs.iter().enumerate() {
            for (k, &(y_to, y_from)) in mode.pairs.iter().enumerate() {
                j[(x_to * d + x_from, y_to * d + y_from)] = block[(i, k)].scale(weight);
            }
        }
    }
    j
}

/// Apply the channel to a state. Requires a valid channel; populations map
/// through P and every mode through its own block.
pub fn apply(ch: &CovariantChannel, rho: &DensityMatrix) -> Result<DensityMatrix, ChannelError> {
    if rho.dim() != ch.dim() {
        return Err(ChannelError::Structure(format!(
            "state dimension {} does not match channel dimension {}",
            rho.dim(),
            ch.dim()
        )));
    }
    let validity = ch.validate();
    if !validity.valid {
        return Err(ChannelError::InvalidChannel(
            validity.diagnostics.join("; "),
        ));
    }
    let d = ch.dim();
    let mut out = ComplexMatrix::zeros(d, d);
    for mode in ch.table.modes() {
        for &(x_to, y_to) in &mode.pairs {
            let mut acc = ZERO;
            for &(x_from, y_from) in &mode.pairs {
                let c = ch.coefficient(x_to, x_from, y_to, y_from);
                if c != ZERO {
                    acc += c * rho.entry(x_from, y_from);
                }
            }
            out[(x_to, y_to)] = acc;
        }
    }
    DensityMatrix::new(out).map_err(ChannelError::from)
}

/// Superoperator matrix of the channel in the column-stacking convention:
/// vec(rho) stacks columns, so entry rho_{r,c} sits at index c*d + r.
pub fn superoperator(ch: &CovariantChannel) -> ComplexMatrix {
    let d = ch.dim();
    ComplexMatrix::from_fn(d * d, d * d, |row, col| {
        let (c_to, r_to) = (row / d, row % d);
        let (c_from, r_from) = (col / d, col % d);
        ch.coefficient(r_to, r_from, c_to, c_from)
    })
}

/// True iff the superoperator (column-stacking convention) commutes with
/// time translations generated by `h`: equivalently, every coefficient
/// linking entries of different modes vanishes within `tol`.
pub fn is_covariant(
    superop: &ComplexMatrix,
    h: &Hamiltonian,
    tol: f64,
) -> Result<bool, ChannelError> {
    let d = h.dim();
    if superop.rows() != d * d || superop.cols() != d * d {
        return Err(ChannelError::Structure(format!(
            "superoperator is {}x{}, expected {}x{}",
            superop.rows(),
            superop.cols(),
            d * d,
            d * d
        )));
    }
    let table = bohr_modes(h, FREQ_MERGE_TOL)?;
    for row in 0..d * d {
        let (c_to, r_to) = (row / d, row % d);
        let out_mode = table.pair_mode(r_to, c_to);
        for col in 0..d * d {
            let (c_from, r_from) = (col / d, col % d);
            if table.pair_mode(r_from, c_from) != out_mode && superop[(row, col)].norm() > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Right side of the covariant coherence bound: the largest |sigma_{x'y'}|
/// any covariant channel with population transfer `p` can produce is the
/// sum over the mode of sqrt(P_{x'|x} P_{y'|y}) |rho_xy(0)|.
pub fn bound_nm(
    p: &PopulationMatrix,
    rho0: &DensityMatrix,
    x_to: usize,
    y_to: usize,
    table: &ModeTable,
) -> f64 {
    let mode = &table.modes()[table.pair_mode(x_to, y_to)];
    mode.pairs
        .iter()
        .map(|&(x, y)| (p.get(x_to, x) * p.get(y_to, y)).sqrt() * rho0.magnitude(x, y))
        .sum()
}

/// Construct the covariant channel that attains [`bound_nm`].
///
/// Every block is the rank-one dressing of P by Kraus phases phi_{x'x}:
/// C^{x'|x}_{y'|y} = phi_{x'x} conj(phi_{y'y}) sqrt(P_{x'|x} P_{y'|y}).
/// The phases come from a single table over the energy-sorted levels, built
/// iteratively from the initial phases of consecutive-level coherences:
/// first row and column one, then
/// phi[i+1][j+1] = phi[i][j] * conj(theta_{level(j+1), level(j)}).
///
/// With a non-degenerate Bohr spectrum this saturates the bound for every
/// entry regardless of the initial phases; with degenerate spectra it does
/// so whenever the initial phases factorize (pure states, common-phase
/// mixed states). In the remaining cases each entry is still bounded and
/// the within-mode choice stays optimal for the chain it was built from.
pub fn saturating_channel(
    p: &PopulationMatrix,
    rho0: &DensityMatrix,
    table: &ModeTable,
) -> Result<CovariantChannel, ChannelError> {
    let d = table.dim();
    if p.dim() != d || rho0.dim() != d {
        return Err(ChannelError::Structure(
            "population matrix, state and mode table dimensions differ".into(),
        ));
    }
    // levels in non-decreasing energy order
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| table.omegas()[a].partial_cmp(&table.omegas()[b]).unwrap());
    let mut position = vec![0usize; d];
    for (pos, &level) in order.iter().enumerate() {
        position[level] = pos;
    }

    let mut phi = vec![vec![ONE; d]; d];
    for i in 0..d.saturating_sub(1) {
        for j in 0..d.saturating_sub(1) {
            let theta = rho0.coherence_phase(order[j + 1], order[j]);
            phi[i + 1][j + 1] = phi[i][j] * theta.conj();
        }
    }
    let kraus_phase =
        |x_to: usize, x_from: usize| -> Complex64 { phi[position[x_to]][position[x_from]] };

    let blocks = table
        .modes()
        .iter()
        .map(|mode| {
            let n = mode.pairs.len();
            ComplexMatrix::from_fn(n, n, |i, j| {
                let (x_to, x_from) = mode.pairs[i];
                let (y_to, y_from) = mode.pairs[j];
                let mag = (p.get(x_to, x_from) * p.get(y_to, y_from)).sqrt();
                kraus_phase(x_to, x_from) * kraus_phase(y_to, y_from).conj() * mag
            })
        })
        .collect();
    CovariantChannel::new(table.clone(), blocks)
}

// ---------------------------------------------------------------------------
// serialization

#[derive(Serialize, Deserialize)]
pub(crate) struct BlockDto {
    pub omega: f64,
    pub pairs: Vec<(usize, usize)>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ChannelDto {
    omegas: Vec<f64>,
    blocks: Vec<BlockDto>,
}

pub(crate) fn blocks_to_dtos(table: &ModeTable, blocks: &[ComplexMatrix]) -> Vec<BlockDto> {
    table
        .modes()
        .iter()
        .zip(blocks)
        .map(|(mode, block)| {
            let n = mode.pairs.len();
            BlockDto {
                omega: mode.omega,
                pairs: mode.pairs.clone(),
                re: (0..n)
                    .map(|r| (0..n).map(|c| block[(r, c)].re).collect())
                    .collect(),
                im: (0..n)
                    .map(|r| (0..n).map(|c| block[(r, c)].im).collect())
                    .collect(),
            }
        })
        .collect()
}

pub(crate) fn blocks_from_dtos(
    table: &ModeTable,
    dtos: &[BlockDto],
) -> Result<Vec<ComplexMatrix>, ChannelError> {
    let mut blocks: Vec<ComplexMatrix> = table
        .modes()
        .iter()
        .map(|m| ComplexMatrix::zeros(m.pairs.len(), m.pairs.len()))
        .collect();
    for dto in dtos {
        let mi = table
            .mode_index(dto.omega)
            .ok_or(SpectrumError::UnknownMode(dto.omega))?;
        let mode = &table.modes()[mi];
        if dto.pairs != mode.pairs {
            return Err(ChannelError::Structure(format!(
                "pair list for frequency {} does not match the canonical mode ordering",
                dto.omega
            )));
        }
        let n = mode.pairs.len();
        if dto.re.len() != n || dto.im.len() != n {
            return Err(ChannelError::Structure(format!(
                "block at frequency {} has wrong shape",
                dto.omega
            )));
        }
        blocks[mi] =
            ComplexMatrix::from_fn(n, n, |r, c| Complex64::new(dto.re[r][c], dto.im[r][c]));
    }
    Ok(blocks)
}

impl Serialize for CovariantChannel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ChannelDto {
            omegas: self.table.omegas().to_vec(),
            blocks: blocks_to_dtos(&self.table, &self.blocks),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CovariantChannel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let dto = ChannelDto::deserialize(deserializer)?;
        let h = Hamiltonian::new(dto.omegas).map_err(D::Error::custom)?;
        let table = bohr_modes(&h, FREQ_MERGE_TOL).map_err(D::Error::custom)?;
        let blocks = blocks_from_dtos(&table, &dto.blocks).map_err(D::Error::custom)?;
        CovariantChannel::new(table, blocks).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn qubit_table() -> ModeTable {
        bohr_modes(&Hamiltonian::new(vec![0.0, 1.0]).unwrap(), FREQ_MERGE_TOL).unwrap()
    }

    /// Qubit channel from (P_{0|0}, P_{1|1}, C^{0|0}_{1|1}).
    fn qubit_channel(p00: f64, p11: f64, coh: Complex64) -> CovariantChannel {
        let table = qubit_table();
        let zero =
            ComplexMatrix::from_rows(&[vec![c(p00, 0.0), coh], vec![coh.conj(), c(p11, 0.0)]])
                .unwrap();
        let up = ComplexMatrix::from_rows(&[vec![c(1.0 - p00, 0.0)]]).unwrap();
        let down = ComplexMatrix::from_rows(&[vec![c(1.0 - p11, 0.0)]]).unwrap();
        // modes are sorted by frequency: -1, 0, +1
        CovariantChannel::new(table, vec![down, zero, up]).unwrap()
    }

    #[test]
    fn identity_channel_choi_is_maximally_entangled_state() {
        let ch = CovariantChannel::identity(qubit_table());
        let j = choi(&ch);
        // |phi+><phi+| has 1/d at rows/cols x*d+x
        for r in 0..4 {
            for col in 0..4 {
                let expected = if (r == 0 || r == 3) && (col == 0 || col == 3) {
                    0.5
                } else {
                    0.0
                };
                assert!((j[(r, col)] - c(expected, 0.0)).norm() < 1e-15);
            }
        }
        let eigs = crate::linalg::eigvals(&j).unwrap();
        let rank = eigs.iter().filter(|e| e.norm() > 1e-12).count();
        assert_eq!(rank, 1);
        assert!((j.trace() - ONE).norm() < 1e-14);
    }

    #[test]
    fn qubit_choi_matches_printed_blocks() {
        let (p00, p11) = (0.8, 0.6);
        let coh = c(0.5, 0.2);
        let j = choi(&qubit_channel(p00, p11, coh));
        // basis |x'x>: 00 -> 0, 01 -> 1, 10 -> 2, 11 -> 3
        assert!((j[(0, 0)] - c(p00 / 2.0, 0.0)).norm() < 1e-15);
        assert!((j[(3, 3)] - c(p11 / 2.0, 0.0)).norm() < 1e-15);
        assert!((j[(0, 3)] - coh.scale(0.5)).norm() < 1e-15);
        assert!((j[(3, 0)] - coh.conj().scale(0.5)).norm() < 1e-15);
        assert!((j[(2, 2)] - c((1.0 - p00) / 2.0, 0.0)).norm() < 1e-15);
        assert!((j[(1, 1)] - c((1.0 - p11) / 2.0, 0.0)).norm() < 1e-15);
        // everything else vanishes
        let named = [(0, 0), (3, 3), (0, 3), (3, 0), (2, 2), (1, 1)];
        for r in 0..4 {
            for col in 0..4 {
                if !named.contains(&(r, col)) {
                    assert_eq!(j[(r, col)], ZERO);
                }
            }
        }
    }

    #[test]
    fn dephasing_channel_has_diagonal_choi() {
        let table = qubit_table();
        let zero = ComplexMatrix::identity(2);
        let ch = CovariantChannel::new(
            table,
            vec![ComplexMatrix::zeros(1, 1), zero, ComplexMatrix::zeros(1, 1)],
        )
        .unwrap();
        let j = choi(&ch);
        for r in 0..4 {
            for col in 0..4 {
                if r != col {
                    assert_eq!(j[(r, col)], ZERO);
                }
            }
        }
        assert!(ch.is_valid());
    }

    #[test]
    fn validity_boundary_matches_printed_inequality() {
        // C at the boundary sqrt(P00 P11) is valid
        let boundary = (0.5f64 * 0.7).sqrt();
        assert!(qubit_channel(0.5, 0.7, c(boundary, 0.0)).is_valid());
        // C = 1 with P00 = P11 = 0.5 violates |C| <= 0.5
        let report = qubit_channel(0.5, 0.5, c(1.0, 0.0)).validate();
        assert!(!report.valid);
        assert!(report.diagnostics.iter().any(|d| d.contains("frequency 0")));
    }

    #[test]
    fn bloch_channel_beyond_decoherence_cap_is_invalid() {
        // e^{-t/T2} > sqrt(P00 P11) cannot be completely positive
        let (p00, p11) = (0.9_f64, 0.7);
        let too_much = (p00 * p11).sqrt() + 0.05;
        assert!(!qubit_channel(p00, p11, c(too_much, 0.0)).is_valid());
    }

    #[test]
    fn relaxation_family_is_valid_only_up_to_twice_t1() {
        // time-parametrized relaxation channel: populations follow e^{-t/T1}
        // towards pi, coherence decays at e^{-t/T2}
        let (t1, pi) = (1.0_f64, 0.65);
        let family = |t2: f64, t: f64| {
            let decay = (-t / t1).exp();
            let p00 = pi + (1.0 - pi) * decay;
            let p11 = (1.0 - pi) + pi * decay;
            qubit_channel(p00, p11, c((-t / t2).exp(), 0.0))
        };
        for k in 1..=20 {
            let t = 0.25 * k as f64;
            assert!(family(2.0 * t1, t).is_valid(), "valid at t = {t}");
        }
        // a slightly longer decoherence time breaks positivity at short times
        let t = 0.01;
        assert!(!family(2.2 * t1, t).is_valid());
    }

    #[test]
    fn identity_channel_preserves_states() {
        let ch = CovariantChannel::identity(qubit_table());
        let rho = DensityMatrix::qubit(0.3, c(0.25, -0.1)).unwrap();
        let out = apply(&ch, &rho).unwrap();
        assert!(out.matrix().sub(rho.matrix()).max_abs() < 1e-14);
    }

    #[test]
    fn diagonal_states_map_through_population_matrix() {
        let ch = qubit_channel(0.75, 0.6, c(0.3, 0.1));
        let rho = DensityMatrix::qubit(0.4, ZERO).unwrap();
        let out = apply(&ch, &rho).unwrap();
        let p = ch.population_matrix().unwrap();
        let expect = p.apply(&[0.4, 0.6]);
        assert!((out.entry(0, 0).re - expect[0]).abs() < 1e-14);
        assert!((out.entry(1, 1).re - expect[1]).abs() < 1e-14);
        assert!(out.entry(0, 1).norm() < 1e-15);
    }

    #[test]
    fn plus_state_through_three_quarter_channel() {
        let ch = qubit_channel(0.75, 0.75, c(0.75, 0.0));
        let plus = DensityMatrix::from_pure(&[ONE, ONE]).unwrap();
        let out = apply(&ch, &plus).unwrap();
        assert!((out.magnitude(0, 1) - 0.375).abs() < 1e-14);
        // direct multiplication oracle through the superoperator
        let s = superoperator(&ch);
        let d = 2;
        let vec_rho: Vec<Complex64> = (0..d * d).map(|k| plus.entry(k % d, k / d)).collect();
        let out_vec = s.matvec(&vec_rho);
        // entry (0,1) sits at column-stacked index 1*d + 0 = 2
        assert!((out_vec[2].norm() - 0.375).abs() < 1e-14);
    }

    #[test]
    fn apply_rejects_invalid_channels() {
        let bad = qubit_channel(0.5, 0.5, c(1.0, 0.0));
        let rho = DensityMatrix::maximally_mixed(2);
        assert!(matches!(
            apply(&bad, &rho),
            Err(ChannelError::InvalidChannel(_))
        ));
    }

    #[test]
    fn channel_superoperators_are_covariant() {
        let h = Hamiltonian::new(vec![0.0, 1.0]).unwrap();
        let ch = qubit_channel(0.8, 0.7, c(0.4, 0.3));
        assert!(is_covariant(&superoperator(&ch), &h, 1e-12).unwrap());
    }

    #[test]
    fn unitary_conjugation_is_covariant() {
        let h = Hamiltonian::new(vec![0.0, 1.3]).unwrap();
        let d = 2;
        let t = 0.37;
        // superop of rho -> U rho U^dag with U = diag(e^{-i w_x t})
        let s = ComplexMatrix::from_fn(d * d, d * d, |row, col| {
            let (c_to, r_to) = (row / d, row % d);
            let (c_from, r_from) = (col / d, col % d);
            if r_to == r_from && c_to == c_from {
                Complex64::new(0.0, -(h.omegas()[r_to] - h.omegas()[c_to]) * t).exp()
            } else {
                ZERO
            }
        });
        assert!(is_covariant(&s, &h, 1e-12).unwrap());
    }

    #[test]
    fn depolarizing_to_coherent_state_is_not_covariant() {
        let h = Hamiltonian::new(vec![0.0, 1.0]).unwrap();
        let sigma = DensityMatrix::qubit(0.5, c(0.4, 0.0)).unwrap();
        let d = 2;
        // E(rho) = tr(rho) sigma
        let s = ComplexMatrix::from_fn(d * d, d * d, |row, col| {
            let (c_to, r_to) = (row / d, row % d);
            let (c_from, r_from) = (col / d, col % d);
            if r_from == c_from {
                sigma.entry(r_to, c_to)
            } else {
                ZERO
            }
        });
        assert!(!is_covariant(&s, &h, 1e-12).unwrap());
        // cross-check against the defining conjugation property at a sample time
        let tsamp = 0.73;
        let u = |x: usize| Complex64::new(0.0, -h.omegas()[x] * tsamp).exp();
        let rho = DensityMatrix::qubit(0.2, c(0.35, 0.1)).unwrap();
        let rot = ComplexMatrix::from_fn(d, d, |r, col| rho.entry(r, col) * u(r) * u(col).conj());
        let apply_s = |m: &ComplexMatrix| -> ComplexMatrix {
            let v: Vec<Complex64> = (0..d * d).map(|k| m[(k % d, k / d)]).collect();
            let w = s.matvec(&v);
            ComplexMatrix::from_fn(d, d, |r, col| w[col * d + r])
        };
        let lhs = apply_s(&rot);
        let out = apply_s(rho.matrix());
        let rhs = ComplexMatrix::from_fn(d, d, |r, col| out[(r, col)] * u(r) * u(col).conj());
        assert!(lhs.sub(&rhs).max_abs() > 1e-3);
    }

    #[test]
    fn bound_with_identity_population_is_initial_magnitude() {
        let table = qubit_table();
        let rho = DensityMatrix::qubit(0.4, c(0.2, 0.1)).unwrap();
        let b = bound_nm(&PopulationMatrix::identity(2), &rho, 1, 0, &table);
        assert!((b - rho.magnitude(1, 0)).abs() < 1e-15);
    }

    #[test]
    fn qubit_bound_printed_value() {
        let table = qubit_table();
        let p = PopulationMatrix::from_rows(&[vec![0.75, 0.25], vec![0.25, 0.75]]).unwrap();
        let rho = DensityMatrix::from_pure(&[ONE, ONE]).unwrap(); // |rho_10| = 1/2
        let b = bound_nm(&p, &rho, 1, 0, &table);
        assert!((b - 0.375).abs() < 1e-15);
    }

    #[test]
    fn saturating_channel_attains_bound_on_qubit() {
        let table = qubit_table();
        let p = PopulationMatrix::from_rows(&[vec![0.75, 0.25], vec![0.25, 0.75]]).unwrap();
        let rho = DensityMatrix::from_pure(&[ONE, ONE]).unwrap();
        let ch = saturating_channel(&p, &rho, &table).unwrap();
        assert!(ch.is_valid());
        let out = apply(&ch, &rho).unwrap();
        assert!((out.magnitude(1, 0) - 0.375).abs() < 1e-12);
    }

    #[test]
    fn saturating_channel_handles_all_modes_of_a_pure_qutrit() {
        let h = Hamiltonian::equidistant(3, 1.0).unwrap();
        let table = bohr_modes(&h, FREQ_MERGE_TOL).unwrap();
        let psi = vec![c(0.6, 0.2), c(0.5, -0.4), c(0.3, 0.35)];
        let rho = DensityMatrix::from_pure(&psi).unwrap();
        let p = PopulationMatrix::from_rows(&[
            vec![0.6, 0.2, 0.1],
            vec![0.3, 0.5, 0.2],
            vec![0.1, 0.3, 0.7],
        ])
        .unwrap();
        let ch = saturating_channel(&p, &rho, &table).unwrap();
        assert!(ch.is_valid());
        let out = apply(&ch, &rho).unwrap();
        for mode in table.modes() {
            if mode.omega == 0.0 {
                continue;
            }
            for &(x_to, y_to) in &mode.pairs {
                let bound = bound_nm(&p, &rho, x_to, y_to, &table);
                assert!(
                    (out.magnitude(x_to, y_to) - bound).abs() < 1e-9,
                    "pair ({x_to},{y_to}): got {}, bound {}",
                    out.magnitude(x_to, y_to),
                    bound
                );
            }
        }
    }

    #[test]
    fn channel_serde_round_trip() {
        let ch = qubit_channel(0.8, 0.65, c(0.3, -0.2));
        let json = serde_json::to_string(&ch).unwrap();
        let back: CovariantChannel = serde_json::from_str(&json).unwrap();
        for (a, b) in ch.blocks().iter().zip(back.blocks()) {
            assert!(a.sub(b).max_abs() < 1e-15);
        }
    }
}
