//! Relaxation and decoherence timescales.
//!
//! For a non-degenerate Bohr spectrum every coherence entry decays as a
//! single exponential with rate Re(alpha_{xy}), giving per-entry T2 times;
//! the population relaxation times T1 come from the nonzero eigenvalues of
//! the rate matrix L. The harmonic means obey
//! <T2>_h <= d/(d-1) <T1>_h, with equality for the optimal generator.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::LinalgError;
use crate::lindblad::{CovariantGenerator, LindbladError, PopulationGenerator, NULL_EIG_TOL};
use crate::spectrum::{Hamiltonian, ModeTable, SpectrumError};
use crate::thermo::{detailed_balance_check, gibbs, ThermoError};

#[derive(Debug, Error)]
pub enum RelaxError {
    #[error("the Bohr spectrum is degenerate: mode {omega} holds {pairs} coherence entries")]
    DegenerateBohrSpectrum { omega: f64, pairs: usize },
    #[error(
        "population dynamics is not ergodic: {0} eigenvalues lie within the null tolerance ({1:?})"
    )]
    NotErgodic(usize, Vec<(f64, f64)>),
    #[error("relaxation times must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("detailed balance does not hold for the supplied thermal context")]
    DetailedBalanceViolated,
    #[error(transparent)]
    Lindblad(#[from] LindbladError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Thermo(#[from] ThermoError),
}

/// Harmonic mean n / sum(1/v); every value must be positive.
pub fn harmonic_mean(values: &[f64]) -> Result<f64, RelaxError> {
    if values.is_empty() {
        return Err(RelaxError::NonPositiveTime(f64::NAN));
    }
    let mut inv_sum = 0.0;
    for &v in values {
        if !(v > 0.0) {
            return Err(RelaxError::NonPositiveTime(v));
        }
        inv_sum += 1.0 / v;
    }
    Ok(values.len() as f64 / inv_sum)
}

/// T1 and T2 times of a generator, with their harmonic means.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelaxationProfile {
    /// d-1 relaxation times, sorted descending.
    pub t1: Vec<f64>,
    /// Oscillation frequencies Im(lambda) paired with the T1 list.
    pub t1_oscillation: Vec<f64>,
    /// Decoherence time per entry pair (x, y) with x > y.
    pub t2: BTreeMap<(usize, usize), f64>,
    pub hmean_t1: f64,
    pub hmean_t2: f64,
}

/// Decoherence times 1/Re(alpha_{xy}) for every coherence entry. Requires a
/// non-degenerate Bohr spectrum, where each entry decouples and decays as a
/// pure exponential.
pub fn t2_times(
    gen: &CovariantGenerator,
    table: &ModeTable,
) -> Result<BTreeMap<(usize, usize), f64>, RelaxError> {
    for mode in table.modes() {
        if mode.omega != 0.0 && mode.pairs.len() > 1 {
            return Err(RelaxError::DegenerateBohrSpectrum {
                omega: mode.omega,
                pairs: mode.pairs.len(),
            });
        }
    }
    let d = gen.dim();
    let mut out = BTreeMap::new();
    for x in 0..d {
        for y in 0..x {
            let rate = gen.alpha(x, y).re;
            if !(rate > 0.0) {
                return Err(RelaxError::NonPositiveTime(1.0 / rate));
            }
            out.insert((x, y), 1.0 / rate);
        }
    }
    Ok(out)
}

/// Relaxation times 1/|Re(lambda)| over the nonzero eigenvalues of L,
/// sorted descending, together with their oscillation parts Im(lambda).
/// Requires a unique null eigenvalue.
pub fn t1_times(l: &PopulationGenerator) -> Result<(Vec<f64>, Vec<f64>), RelaxError> {
    let eigs = l.eigenvalues()?;
    let nulls: Vec<_> = eigs.iter().filter(|z| z.norm() <= NULL_EIG_TOL).collect();
    if nulls.len() != 1 {
        return Err(RelaxError::NotErgodic(
            nulls.len(),
            nulls.iter().map(|z| (z.re, z.im)).collect(),
        ));
    }
    let mut decaying: Vec<(f64, f64)> = eigs
        .iter()
        .filter(|z| z.norm() > NULL_EIG_TOL)
        .map(|z| (1.0 / z.re.abs(), z.im))
        .collect();
    decaying.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    Ok(decaying.into_iter().unzip())
}

/// Outcome of the harmonic-mean comparison <T2>_h vs d/(d-1) <T1>_h.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HarmonicMeanBound {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

const HM_BOUND_TOL: f64 = 1e-9;

/// Evaluate the harmonic-mean bound for a covariant generator.
pub fn harmonic_mean_bound_check(
    gen: &CovariantGenerator,
    table: &ModeTable,
) -> Result<HarmonicMeanBound, RelaxError> {
    let d = gen.dim() as f64;
    let t2: Vec<f64> = t2_times(gen, table)?.into_values().collect();
    let (t1, _) = t1_times(&gen.population_generator()?)?;
    let lhs = harmonic_mean(&t2)?;
    let rhs = d / (d - 1.0) * harmonic_mean(&t1)?;
    Ok(HarmonicMeanBound {
        lhs,
        rhs,
        holds: lhs <= rhs + HM_BOUND_TOL,
    })
}

/// Full profile for reporting: T1, T2 and their harmonic means.
pub fn relaxation_profile(
    gen: &CovariantGenerator,
    table: &ModeTable,
) -> Result<RelaxationProfile, RelaxError> {
    let t2 = t2_times(gen, table)?;
    let (t1, t1_oscillation) = t1_times(&gen.population_generator()?)?;
    let t2_vals: Vec<f64> = t2.values().copied().collect();
    Ok(RelaxationProfile {
        hmean_t1: harmonic_mean(&t1)?,
        hmean_t2: harmonic_mean(&t2_vals)?,
        t1,
        t1_oscillation,
        t2,
    })
}

const DB_TOL: f64 = 1e-9;

/// Closed-form harmonic mean of the T1 times for a detailed-balanced rate
/// matrix: (d-1) / sum_{x'<x} L_{x'|x} (1 + e^{-beta w_{xx'}}), which equals
/// (d-1)/|tr L|.
pub fn thermal_t1_hmean(
    l: &PopulationGenerator,
    beta: f64,
    h: &Hamiltonian,
) -> Result<f64, RelaxError> {
    let ctx = gibbs(beta, h)?;
    let report = detailed_balance_check(l, &ctx, DB_TOL);
    if !report.detailed_balance {
        return Err(RelaxError::DetailedBalanceViolated);
    }
    let d = l.dim();
    let mut denom = 0.0;
    for x in 0..d {
        for xp in 0..x {
            // pairs with x' < x; the Gibbs factor restores the reverse rate
            denom += l.rate(xp, x) * (1.0 + (-beta * (h.omegas()[x] - h.omegas()[xp])).exp());
        }
    }
    if denom <= 0.0 {
        return Err(RelaxError::NonPositiveTime(denom));
    }
    Ok((d as f64 - 1.0) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ComplexMatrix;
    use crate::spectrum::{bohr_modes, DensityMatrix, FREQ_MERGE_TOL};
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn qubit_table() -> ModeTable {
        bohr_modes(&Hamiltonian::new(vec![0.0, 1.0]).unwrap(), FREQ_MERGE_TOL).unwrap()
    }

    fn qubit_generator(a: f64, b: f64, dephasing: f64) -> CovariantGenerator {
        let table = qubit_table();
        let zero = ComplexMatrix::diag(&[c(dephasing, 0.0), c(dephasing, 0.0)]);
        let up = ComplexMatrix::from_rows(&[vec![c(a, 0.0)]]).unwrap();
        let down = ComplexMatrix::from_rows(&[vec![c(b, 0.0)]]).unwrap();
        CovariantGenerator::new(table, vec![down, zero, up]).unwrap()
    }

    #[test]
    fn amplitude_damping_gives_t2_twice_over_rate() {
        // single decay channel Gamma from 1 -> 0, no dephasing
        let gamma = 0.8;
        let gen = qubit_generator(0.0, gamma, 0.0);
        let table = qubit_table();
        let t2 = t2_times(&gen, &table).unwrap();
        assert!((t2[&(1, 0)] - 2.0 / gamma).abs() < 1e-14);
    }

    #[test]
    fn optimal_generator_t2_is_inverse_damping_rate() {
        let l = PopulationGenerator::from_rates(2, |to, from| match (to, from) {
            (1, 0) => 0.4,
            (0, 1) => 0.9,
            _ => 0.0,
        })
        .unwrap();
        let table = qubit_table();
        let rho0 = DensityMatrix::qubit(0.5, c(0.3, 0.1)).unwrap();
        let gen = crate::lindblad::optimal_generator(&l, &rho0, &table).unwrap();
        let t2 = t2_times(&gen, &table).unwrap();
        let gamma = l.damping_rate(1, 0);
        assert!((t2[&(1, 0)] - 1.0 / gamma).abs() < 1e-12);
    }

    #[test]
    fn degenerate_bohr_spectrum_is_refused() {
        let h = Hamiltonian::equidistant(3, 1.0).unwrap();
        let table = bohr_modes(&h, FREQ_MERGE_TOL).unwrap();
        let gen = crate::lindblad::CovariantGenerator::zero(table.clone());
        assert!(matches!(
            t2_times(&gen, &table),
            Err(RelaxError::DegenerateBohrSpectrum { .. })
        ));
    }

    #[test]
    fn qubit_t1_matches_printed_rate_sum() {
        let (a, b) = (0.3, 0.7);
        let l = PopulationGenerator::from_rates(2, |to, from| match (to, from) {
            (1, 0) => a,
            (0, 1) => b,
            _ => 0.0,
        })
        .unwrap();
        let (t1, _) = t1_times(&l).unwrap();
        assert_eq!(t1.len(), 1);
        // T1 = 1/(|L_{0|0}| + L_{0|1})
        assert!((t1[0] - 1.0 / (a + b)).abs() < 1e-12);
    }

    #[test]
    fn t1_sum_rule_matches_trace() {
        let l = PopulationGenerator::from_rates(4, |to, from| {
            0.1 + 0.15 * ((3 * to + from) % 5) as f64
        })
        .unwrap();
        let (t1, _) = t1_times(&l).unwrap();
        let sum_rates: f64 = t1.iter().map(|t| 1.0 / t).sum();
        assert!((sum_rates - l.matrix().trace().abs()).abs() < 1e-10);
    }

    #[test]
    fn complex_eigenvalue_pairs_give_equal_t1() {
        // cyclic 3-level driving has a conjugate eigenvalue pair
        let l = PopulationGenerator::from_rates(
            3,
            |to, from| {
                if (from + 1) % 3 == to {
                    1.0
                } else {
                    0.0
                }
            },
        )
        .unwrap();
        let (t1, osc) = t1_times(&l).unwrap();
        assert_eq!(t1.len(), 2);
        assert!((t1[0] - t1[1]).abs() < 1e-10);
        assert!((osc[0] + osc[1]).abs() < 1e-10); // conjugate pair
    }

    #[test]
    fn non_ergodic_rate_matrices_are_refused() {
        let split = PopulationGenerator::from_rates(4, |to, from| match (to, from) {
            (0, 1) | (1, 0) => 0.3,
            (2, 3) | (3, 2) => 0.7,
            _ => 0.0,
        })
        .unwrap();
        match t1_times(&split) {
            Err(RelaxError::NotErgodic(n, dirs)) => {
                assert_eq!(n, 2);
                assert_eq!(dirs.len(), 2);
            }
            other => panic!("expected NotErgodic, got {other:?}"),
        }
    }

    #[test]
    fn qubit_bound_is_t2_le_2t1() {
        let gen = qubit_generator(0.4, 0.6, 0.25);
        let table = qubit_table();
        let check = harmonic_mean_bound_check(&gen, &table).unwrap();
        assert!(check.holds);
        assert!(check.lhs <= check.rhs + 1e-12);
        // rhs is exactly 2 T1 for a qubit
        let (t1, _) = t1_times(&gen.population_generator().unwrap()).unwrap();
        assert!((check.rhs - 2.0 * t1[0]).abs() < 1e-12);
    }

    #[test]
    fn optimal_generator_saturates_harmonic_mean_bound() {
        let h = Hamiltonian::new(vec![0.0, 1.0, 2.6]).unwrap();
        let table = bohr_modes(&h, FREQ_MERGE_TOL).unwrap();
        let l =
            PopulationGenerator::from_rates(3, |to, from| 0.2 + 0.1 * ((to + 2 * from) % 4) as f64)
                .unwrap();
        let rho0 = DensityMatrix::maximally_mixed(3);
        let gen = crate::lindblad::optimal_generator(&l, &rho0, &table).unwrap();
        let check = harmonic_mean_bound_check(&gen, &table).unwrap();
        assert!(check.holds);
        assert!(
            (check.lhs - check.rhs).abs() < 1e-9,
            "lhs {} vs rhs {}",
            check.lhs,
            check.rhs
        );
    }

    #[test]
    fn thermal_t1_formula_matches_spectral_route() {
        let h = Hamiltonian::new(vec![0.0, 0.8]).unwrap();
        let beta = 1.3;
        // detailed balance by construction: L_{0|1}/L_{1|0} = e^{beta w}
        let down = 0.6;
        let up = down * (-beta * 0.8f64).exp();
        let l = PopulationGenerator::from_rates(2, |to, from| match (to, from) {
            (1, 0) => up,
            (0, 1) => down,
            _ => 0.0,
        })
        .unwrap();
        let hm = thermal_t1_hmean(&l, beta, &h).unwrap();
        let (t1, _) = t1_times(&l).unwrap();
        assert!((hm - harmonic_mean(&t1).unwrap()).abs() < 1e-10);
        // and equals (d-1)/|tr L|
        assert!((hm - 1.0 / l.matrix().trace().abs()).abs() < 1e-12);
    }

    #[test]
    fn infinite_temperature_doubles_the_rate_sum() {
        let h = Hamiltonian::new(vec![0.0, 1.0, 2.2]).unwrap();
        // at beta = 0 detailed balance is symmetry of the rates
        let l = PopulationGenerator::from_rates(3, |to, from| {
            [[0.0, 0.3, 0.5], [0.3, 0.0, 0.2], [0.5, 0.2, 0.0]][to][from]
        })
        .unwrap();
        let hm = thermal_t1_hmean(&l, 0.0, &h).unwrap();
        let lower_sum = 0.3 + 0.5 + 0.2;
        assert!((hm - 2.0 / (2.0 * lower_sum)).abs() < 1e-12);
    }

    #[test]
    fn detailed_balance_violation_is_refused() {
        let h = Hamiltonian::new(vec![0.0, 1.0]).unwrap();
        let l = PopulationGenerator::from_rates(2, |_, _| 0.4).unwrap(); // symmetric rates, beta > 0
        assert!(matches!(
            thermal_t1_hmean(&l, 2.0, &h),
            Err(RelaxError::DetailedBalanceViolated)
        ));
    }

    #[test]
    fn harmonic_mean_rejects_non_positive_values() {
        assert!(harmonic_mean(&[1.0, 0.0]).is_err());
        assert!(harmonic_mean(&[1.0, -2.0]).is_err());
        assert!((harmonic_mean(&[2.0, 2.0]).unwrap() - 2.0).abs() < 1e-15);
    }
}
