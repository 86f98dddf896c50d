//! Non-Markovianity certification from observed data.
//!
//! All verdicts are conditional on covariance: the dynamics is assumed to
//! commute with time translations, and the witnesses ask whether a
//! Markovian (semigroup) realization can explain the data. Data that not
//! even a covariant channel can produce gets its own label.
//!
//! Three observation models are covered: a single before/after snapshot of
//! a qubit with known stationary population, a monitored trajectory (via
//! monotonicity of the per-mode coherence totals), and the population
//! transfer matrix alone (via the eigenvalue region of embeddable
//! stochastic matrices).

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channels::PopulationMatrix;
use crate::linalg::{eigvals_real, LinalgError, RealMatrix, Trajectory};
use crate::spectrum::{s_omega, DensityMatrix, ModeTable, SpectrumError};

/// Slack applied before declaring any bound violated.
pub const VIOLATION_TOL: f64 = 1e-9;
/// Populations closer to the fixed point than this are indistinguishable.
pub const POPULATION_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum WitnessError {
    #[error("snapshot invalid: {0}")]
    InvalidSnapshot(String),
    #[error("trajectory must contain at least two states")]
    TrajectoryTooShort,
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Ground population and coherence magnitude of a qubit at times 0 and t,
/// plus the known stationary ground population.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QubitSnapshot {
    pub p0: f64,
    pub c0_abs: f64,
    pub pt: f64,
    pub ct_abs: f64,
    pub pi: f64,
}

impl QubitSnapshot {
    pub fn new(p0: f64, c0_abs: f64, pt: f64, ct_abs: f64, pi: f64) -> Result<Self, WitnessError> {
        for (name, p) in [("p0", p0), ("pt", pt), ("pi", pi)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(WitnessError::InvalidSnapshot(format!(
                    "{name} = {p} outside [0, 1]"
                )));
            }
        }
        for (name, c, p) in [("c0", c0_abs, p0), ("ct", ct_abs, pt)] {
            if c < 0.0 {
                return Err(WitnessError::InvalidSnapshot(format!(
                    "{name} = {c} negative"
                )));
            }
            let cap = (p * (1.0 - p)).sqrt();
            if c > cap + 1e-12 {
                return Err(WitnessError::InvalidSnapshot(format!(
                    "{name} = {c} exceeds the positivity cap sqrt(p(1-p)) = {cap}"
                )));
            }
        }
        Ok(Self {
            p0,
            c0_abs,
            pt,
            ct_abs,
            pi,
        })
    }
}

/// What a witness concluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictLabel {
    /// The data fits a covariant Markovian semigroup.
    ConsistentMarkovianCovariant,
    /// No covariant semigroup explains the data, but a general covariant
    /// map does: non-Markovianity is certified given covariance.
    NonMarkovianGivenCovariance,
    /// Not even a covariant map explains the data.
    InconsistentWithCovariance,
    /// The observation carries no usable signal.
    Inconclusive,
}

/// Verdict plus the distance to the bound that decided it (slack for the
/// consistent label, excess for the violation labels).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verdict {
    pub label: VerdictLabel,
    pub margin: f64,
    /// The bounds the observation was compared against, for reporting.
    pub bound_values: Vec<(String, f64)>,
}

/// Single-snapshot witness for a qubit with known stationary population.
///
/// Markovian covariant dynamics with fixed point pi relaxes the population
/// monotonically on one side of pi and keeps
/// |c(t)| <= sqrt((p(t)-pi)/(p(0)-pi)) |c(0)|. A general covariant map with
/// the same fixed point is pinned by the two population constraints, giving
/// |c(t)| <= sqrt(P_00 P_11) |c(0)|. The strongest sustainable verdict wins.
pub fn qubit_snapshot_witness(s: &QubitSnapshot) -> Verdict {
    let dev0 = s.p0 - s.pi;
    let devt = s.pt - s.pi;

    if dev0.abs() <= POPULATION_TOL {
        // started at the fixed population: only coherence growth is decisive
        if s.ct_abs > s.c0_abs + VIOLATION_TOL {
            return Verdict {
                label: VerdictLabel::InconsistentWithCovariance,
                margin: s.ct_abs - s.c0_abs,
                bound_values: vec![("coherence_total".into(), s.c0_abs)],
            };
        }
        return Verdict {
            label: VerdictLabel::Inconclusive,
            margin: 0.0,
            bound_values: vec![("coherence_total".into(), s.c0_abs)],
        };
    }

    // covariant bound: the pinned stochastic matrix with P pi = pi and
    // P p0 = pt, feasible only when its entries are probabilities
    let ratio = devt / dev0;
    let p00 = s.pi + (1.0 - s.pi) * ratio;
    let p11 = (1.0 - s.pi) + s.pi * ratio;
    let feasible = (-1e-12..=1.0 + 1e-12).contains(&p00) && (-1e-12..=1.0 + 1e-12).contains(&p11);
    let covariant_bound = if feasible {
        (p00.max(0.0) * p11.max(0.0)).sqrt() * s.c0_abs
    } else {
        0.0
    };

    // Markovian bound: population may only creep towards pi on its own side
    let markov_feasible = (-1e-12..=1.0 + 1e-12).contains(&ratio);
    let markov_bound = if markov_feasible {
        ratio.clamp(0.0, 1.0).sqrt() * s.c0_abs
    } else {
        0.0
    };

    let bound_values = vec![
        ("markov_bound".into(), markov_bound),
        ("covariant_bound".into(), covariant_bound),
    ];

    if markov_feasible && s.ct_abs <= markov_bound + VIOLATION_TOL {
        Verdict {
            label: VerdictLabel::ConsistentMarkovianCovariant,
            margin: markov_bound - s.ct_abs,
            bound_values,
        }
    } else if feasible && s.ct_abs <= covariant_bound + VIOLATION_TOL {
        Verdict {
            label: VerdictLabel::NonMarkovianGivenCovariance,
            margin: s.ct_abs - markov_bound,
            bound_values,
        }
    } else {
        Verdict {
            label: VerdictLabel::InconsistentWithCovariance,
            margin: s.ct_abs - covariant_bound,
            bound_values,
        }
    }
}

/// Trajectory witness: under Markovian covariant dynamics every per-mode
/// coherence total S_w is non-increasing; any rise between consecutive
/// samples certifies non-Markovianity (given covariance of the snapshots).
pub fn s_omega_monotonicity_witness(
    traj: &Trajectory<DensityMatrix>,
    table: &ModeTable,
) -> Result<Verdict, WitnessError> {
    if traj.len() < 2 {
        return Err(WitnessError::TrajectoryTooShort);
    }
    let series: Vec<Vec<f64>> = traj
        .states()
        .iter()
        .map(|rho| {
            table
                .modes()
                .iter()
                .filter(|m| m.omega > 0.0)
                .map(|m| s_omega(rho, m.omega, table))
                .collect::<Result<Vec<f64>, SpectrumError>>()
        })
        .collect::<Result<_, _>>()?;
    Ok(mode_total_monotonicity(&series))
}

/// The same monotonicity check on raw per-mode totals (one row per time,
/// one column per monitored mode); this entry point serves observations
/// where only |rho_xy| magnitudes were recorded.
pub fn mode_total_monotonicity(series: &[Vec<f64>]) -> Verdict {
    let mut max_rise = 0.0_f64;
    for w in series.windows(2) {
        for (before, after) in w[0].iter().zip(&w[1]) {
            max_rise = max_rise.max(after - before);
        }
    }
    if max_rise > VIOLATION_TOL {
        Verdict {
            label: VerdictLabel::NonMarkovianGivenCovariance,
            margin: max_rise,
            bound_values: vec![("max_s_omega_rise".into(), max_rise)],
        }
    } else {
        Verdict {
            label: VerdictLabel::ConsistentMarkovianCovariant,
            margin: max_rise.max(0.0),
            bound_values: vec![("max_s_omega_rise".into(), max_rise)],
        }
    }
}

/// Radius of the embeddable-eigenvalue region at phase angle phi:
/// r(phi) = e^{-|phi| tan(pi/d)}. For d = 2 the region collapses onto the
/// segment [0, 1]; the implementation returns 0 for any |phi| >= pi - 1e-9.
pub fn embeddability_region(d: usize, phi: f64) -> f64 {
    assert!(d >= 2, "dimension must be at least 2");
    let phi = phi.abs();
    if d == 2 && phi >= std::f64::consts::PI - 1e-9 {
        return 0.0;
    }
    (-phi * (std::f64::consts::PI / d as f64).tan()).exp()
}

/// Population-only witness: eigenvalues of an embeddable stochastic matrix
/// must lie inside the region of [`embeddability_region`]; any eigenvalue
/// outside certifies that no rate matrix generates P.
pub fn spectral_witness(p: &PopulationMatrix) -> Result<Verdict, WitnessError> {
    let d = p.dim();
    let eigs = eigvals_real(p.matrix())?;
    let mut max_excess = 0.0_f64;
    let mut worst: Option<Complex64> = None;
    for lambda in eigs {
        let r = lambda.norm();
        let phi = lambda.im.atan2(lambda.re);
        let excess = r - embeddability_region(d, phi);
        if excess > max_excess {
            max_excess = excess;
            worst = Some(lambda);
        }
    }
    let bound_values = match worst {
        Some(w) => vec![
            ("worst_eigenvalue_re".into(), w.re),
            ("worst_eigenvalue_im".into(), w.im),
            ("region_radius".into(), w.norm() - max_excess),
        ],
        None => vec![],
    };
    if max_excess > VIOLATION_TOL {
        Ok(Verdict {
            label: VerdictLabel::NonMarkovianGivenCovariance,
            margin: max_excess,
            bound_values,
        })
    } else {
        Ok(Verdict {
            label: VerdictLabel::ConsistentMarkovianCovariant,
            margin: max_excess.max(0.0),
            bound_values,
        })
    }
}

/// Eigenvalue cloud of `n` random stochastic matrices with columns drawn
/// uniformly from the simplex; used to compare the generic stochastic
/// spectrum against the embeddable region.
pub fn karpelevic_sample(d: usize, n: usize, seed: u64) -> Result<Vec<Complex64>, WitnessError> {
    assert!(d >= 2 && n >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cloud = Vec::with_capacity(d * n);
    for _ in 0..n {
        let m = random_stochastic(d, &mut rng);
        cloud.extend(eigvals_real(&m)?);
    }
    Ok(cloud)
}

/// Column-stochastic matrix with columns uniform on the simplex
/// (normalized exponentials).
pub fn random_stochastic(d: usize, rng: &mut impl Rng) -> RealMatrix {
    let mut m = RealMatrix::zeros(d, d);
    for c in 0..d {
        let mut col: Vec<f64> = (0..d).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
        let sum: f64 = col.iter().sum();
        for v in &mut col {
            *v /= sum;
        }
        for (r, v) in col.into_iter().enumerate() {
            m[(r, c)] = v;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::{evolve, optimal_generator, PopulationGenerator};
    use crate::spectrum::{bohr_modes, Hamiltonian, FREQ_MERGE_TOL};

    #[test]
    fn identity_snapshot_is_consistent() {
        let c0 = 5.0_f64.sqrt() / 6.0;
        let s = QubitSnapshot::new(1.0 / 6.0, c0, 1.0 / 6.0, c0, 0.5).unwrap();
        let v = qubit_snapshot_witness(&s);
        assert_eq!(v.label, VerdictLabel::ConsistentMarkovianCovariant);
    }

    #[test]
    fn coherence_between_the_bounds_is_non_markovian() {
        // p0 = 1/6, pi = 1/2, pt = 0.4: the Markovian cap is
        // sqrt(0.3) c0 ~ 0.204 and the covariant cap 0.65 c0 ~ 0.242
        let c0 = 5.0_f64.sqrt() / 6.0;
        let markov_cap = (0.3_f64).sqrt() * c0;
        let covariant_cap = 0.65 * c0;
        let ct = 0.23;
        assert!(ct > markov_cap && ct < covariant_cap);
        let s = QubitSnapshot::new(1.0 / 6.0, c0, 0.4, ct, 0.5).unwrap();
        let v = qubit_snapshot_witness(&s);
        assert_eq!(v.label, VerdictLabel::NonMarkovianGivenCovariance);
        assert!(v.margin > 0.0);
        assert!((v.margin - (ct - markov_cap)).abs() < 1e-12);
    }

    #[test]
    fn coherence_beyond_the_covariant_cap_is_inconsistent() {
        let c0 = 5.0_f64.sqrt() / 6.0;
        let ct = 0.30; // valid state at pt = 0.4, above 0.242
        let s = QubitSnapshot::new(1.0 / 6.0, c0, 0.4, ct, 0.5).unwrap();
        let v = qubit_snapshot_witness(&s);
        assert_eq!(v.label, VerdictLabel::InconsistentWithCovariance);
        assert!(v.margin > 0.05);
    }

    #[test]
    fn population_overshoot_is_non_markovian_even_with_tiny_coherence() {
        // pt on the far side of pi from p0, small ct within the covariant cap
        let s = QubitSnapshot::new(0.2, 0.3, 0.55, 0.05, 0.5).unwrap();
        let v = qubit_snapshot_witness(&s);
        assert_eq!(v.label, VerdictLabel::NonMarkovianGivenCovariance);
    }

    #[test]
    fn start_at_fixed_point_is_inconclusive_unless_coherence_grows() {
        let s = QubitSnapshot::new(0.5, 0.1, 0.5, 0.08, 0.5).unwrap();
        assert_eq!(qubit_snapshot_witness(&s).label, VerdictLabel::Inconclusive);
        let s = QubitSnapshot::new(0.5, 0.1, 0.5, 0.3, 0.5).unwrap();
        let v = qubit_snapshot_witness(&s);
        assert_eq!(v.label, VerdictLabel::InconsistentWithCovariance);
        assert!((v.margin - 0.2).abs() < 1e-12);
    }

    #[test]
    fn snapshots_reject_unphysical_inputs() {
        assert!(QubitSnapshot::new(0.4, 0.55, 0.4, 0.1, 0.5).is_err()); // c > sqrt(p(1-p))
        assert!(QubitSnapshot::new(1.2, 0.0, 0.4, 0.1, 0.5).is_err());
    }

    #[test]
    fn markovian_evolution_never_triggers_the_snapshot_witness() {
        let h = Hamiltonian::new(vec![0.0, 1.0]).unwrap();
        let table = bohr_modes(&h, FREQ_MERGE_TOL).unwrap();
        let (a, b) = (0.3, 0.5);
        let l = PopulationGenerator::from_rates(2, |to, from| match (to, from) {
            (1, 0) => a,
            (0, 1) => b,
            _ => 0.0,
        })
        .unwrap();
        let pi = b / (a + b);
        let rho0 = DensityMatrix::qubit(0.9, Complex64::new(0.25, 0.1)).unwrap();
        let gen = optimal_generator(&l, &rho0, &table).unwrap();
        for &t in &[0.2, 0.7, 1.5, 4.0] {
            let traj = evolve(&gen, &rho0, &[t]).unwrap();
            let state = &traj.states()[0];
            let s = QubitSnapshot::new(
                rho0.entry(0, 0).re,
                rho0.magnitude(0, 1),
                state.entry(0, 0).re,
                state.magnitude(0, 1),
                pi,
            )
            .unwrap();
            let v = qubit_snapshot_witness(&s);
            assert_eq!(
                v.label,
                VerdictLabel::ConsistentMarkovianCovariant,
                "flagged at t = {t}: {v:?}"
            );
        }
    }

    #[test]
    fn monotone_series_pass_and_revivals_flag() {
        let falling = vec![vec![0.5], vec![0.4], vec![0.35]];
        assert_eq!(
            mode_total_monotonicity(&falling).label,
            VerdictLabel::ConsistentMarkovianCovariant
        );
        let revival = vec![vec![0.5], vec![0.2], vec![0.3]];
        let v = mode_total_monotonicity(&revival);
        assert_eq!(v.label, VerdictLabel::NonMarkovianGivenCovariance);
        assert!((v.margin - 0.1).abs() < 1e-12);
        let constant = vec![vec![0.5], vec![0.5], vec![0.5]];
        assert_eq!(
            mode_total_monotonicity(&constant).label,
            VerdictLabel::ConsistentMarkovianCovariant
        );
    }

    #[test]
    fn evolved_trajectories_are_monotone() {
        let h = Hamiltonian::new(vec![0.0, 1.0]).unwrap();
        let table = bohr_modes(&h, FREQ_MERGE_TOL).unwrap();
        let l = PopulationGenerator::from_rates(2, |_, _| 0.45).unwrap();
        let rho0 = DensityMatrix::qubit(0.7, Complex64::new(0.3, -0.2)).unwrap();
        let gen = optimal_generator(&l, &rho0, &table).unwrap();
        let times: Vec<f64> = (0..25).map(|k| 0.2 * k as f64).collect();
        let traj = evolve(&gen, &rho0, &times).unwrap();
        let v = s_omega_monotonicity_witness(&traj, &table).unwrap();
        assert_eq!(v.label, VerdictLabel::ConsistentMarkovianCovariant);
    }

    #[test]
    fn region_value_matches_formula() {
        assert_eq!(embeddability_region(3, 0.0), 1.0);
        let phi = std::f64::consts::PI / 3.0;
        let expected = (-(phi) * 3.0_f64.sqrt()).exp();
        assert!((embeddability_region(3, phi) - expected).abs() < 1e-15);
        // even and non-increasing in |phi|
        let mut last = 1.0;
        for k in 0..=10 {
            let phi = k as f64 * std::f64::consts::PI / 10.0;
            let r = embeddability_region(4, phi);
            assert_eq!(r, embeddability_region(4, -phi));
            assert!(r <= last + 1e-15);
            last = r;
        }
        // d = 2 collapse at phi = pi
        assert_eq!(embeddability_region(2, std::f64::consts::PI), 0.0);
    }

    #[test]
    fn identity_population_matrix_is_consistent() {
        let p = PopulationMatrix::identity(3);
        let v = spectral_witness(&p).unwrap();
        assert_eq!(v.label, VerdictLabel::ConsistentMarkovianCovariant);
    }

    #[test]
    fn rigid_translation_is_flagged_with_the_known_margin() {
        // T(1/2) = I/2 + cycle/2 on three levels
        let q = 0.5;
        let mut rows = vec![vec![0.0; 3]; 3];
        for i in 0..3 {
            rows[i][i] = 1.0 - q;
            rows[(i + 1) % 3][i] = q;
        }
        let p = PopulationMatrix::from_rows(&rows).unwrap();
        let v = spectral_witness(&p).unwrap();
        assert_eq!(v.label, VerdictLabel::NonMarkovianGivenCovariance);
        // |lambda| = 1/2 at phi = pi/3 vs r = e^{-(pi/3) sqrt(3)}
        let expected = 0.5 - (-(std::f64::consts::PI / 3.0) * 3.0_f64.sqrt()).exp();
        assert!((v.margin - expected).abs() < 1e-9, "margin {}", v.margin);
        assert!(v.margin >= 0.33);
    }

    #[test]
    fn exponentials_of_rate_matrices_are_never_flagged() {
        let l = PopulationGenerator::from_rates(4, |to, from| {
            0.05 + 0.1 * ((to * 3 + from) % 4) as f64
        })
        .unwrap();
        for &t in &[0.1, 1.0, 10.0] {
            let p = l.propagator(t).unwrap();
            let v = spectral_witness(&p).unwrap();
            assert_eq!(
                v.label,
                VerdictLabel::ConsistentMarkovianCovariant,
                "t = {t}"
            );
        }
    }

    #[test]
    fn sampled_spectra_stay_in_the_unit_disc_and_contain_one() {
        let cloud = karpelevic_sample(3, 200, 7).unwrap();
        assert_eq!(cloud.len(), 600);
        let mut ones = 0;
        for chunk in cloud.chunks(3) {
            assert!(chunk.iter().all(|z| z.norm() <= 1.0 + 1e-12));
            if chunk
                .iter()
                .any(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-8)
            {
                ones += 1;
            }
        }
        assert_eq!(ones, 200);
    }

    #[test]
    fn some_stochastic_spectra_fall_outside_the_embeddable_region() {
        let cloud = karpelevic_sample(3, 10_000, 99).unwrap();
        let outside = cloud
            .iter()
            .filter(|z| z.norm() > embeddability_region(3, z.im.atan2(z.re)) + 1e-9)
            .count();
        assert!(outside > 0, "expected a non-empty embeddability gap");
    }

    #[test]
    fn sampling_is_deterministic_in_the_seed() {
        let a = karpelevic_sample(4, 50, 1234).unwrap();
        let b = karpelevic_sample(4, 50, 1234).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x, y);
        }
    }
}
