//! Seeded random instances of the domain objects.
//!
//! The witnesses and the bound checks need ensembles of valid covariant
//! channels, generators and states. Everything here takes an explicit RNG
//! so ensembles are reproducible from a seed.

use num_complex::Complex64;
use rand::Rng;

use crate::channels::{CovariantChannel, PopulationMatrix};
use crate::linalg::ComplexMatrix;
use crate::lindblad::{CovariantGenerator, PopulationGenerator};
use crate::spectrum::{bohr_modes, DensityMatrix, Hamiltonian, ModeTable, FREQ_MERGE_TOL};
use crate::thermo::ThermalContext;

fn complex_gaussianish(rng: &mut impl Rng) -> Complex64 {
    // uniform box noise is plenty for producing generic PSD factors
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Random PSD matrix G G^dag.
pub fn random_psd(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(n, n, |_, _| complex_gaussianish(rng));
    g.matmul(&g.dagger())
}

/// Random PSD matrix with a prescribed non-negative diagonal: the
/// correlation part comes from a Gram matrix, then rows/columns are scaled
/// so the diagonal matches exactly.
pub fn random_psd_with_diagonal(diag: &[f64], rng: &mut impl Rng) -> ComplexMatrix {
    let n = diag.len();
    let raw = random_psd(n, rng);
    ComplexMatrix::from_fn(n, n, |r, c| {
        let denom = (raw[(r, r)].re * raw[(c, c)].re).sqrt();
        let corr = if denom > 0.0 {
            raw[(r, c)] / denom
        } else {
            Complex64::new(0.0, 0.0)
        };
        if r == c {
            Complex64::new(diag[r], 0.0)
        } else {
            corr * (diag[r] * diag[c]).sqrt()
        }
    })
}

/// Random state: a mixture of a random diagonal and a random pure state,
/// which keeps all coherence entries generically nonzero.
pub fn random_density_matrix(d: usize, rng: &mut impl Rng) -> DensityMatrix {
    let psi: Vec<Complex64> = (0..d)
        .map(|_| Complex64::new(rng.gen_range(0.05..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let weights: Vec<f64> = {
        let raw: Vec<f64> = (0..d).map(|_| rng.gen_range(0.05..1.0)).collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / s).collect()
    };
    let mix = rng.gen_range(0.2..0.8);
    let m = ComplexMatrix::from_fn(d, d, |r, c| {
        let pure = psi[r] * psi[c].conj() / norm;
        let diag = if r == c {
            Complex64::new(weights[r], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
        pure.scale(mix) + diag.scale(1.0 - mix)
    });
    DensityMatrix::new(m).expect("mixture of valid states is valid")
}

/// Random pure state.
pub fn random_pure_state(d: usize, rng: &mut impl Rng) -> DensityMatrix {
    let psi: Vec<Complex64> = (0..d).map(|_| complex_gaussianish(rng)).collect();
    DensityMatrix::from_pure(&psi).expect("generic vectors are nonzero")
}

/// Random state whose phases factorize as theta_xy = phi_x conj(phi_y), so
/// the phase-matching condition holds in every mode; every coherence entry
/// is nonzero.
pub fn random_phase_matched_state(d: usize, rng: &mut impl Rng) -> DensityMatrix {
    // real positive-entry core, conjugated by a diagonal phase unitary
    let u: Vec<f64> = (0..d).map(|_| rng.gen_range(0.3..1.0)).collect();
    let unorm: f64 = u.iter().map(|x| x * x).sum();
    let weights: Vec<f64> = {
        let raw: Vec<f64> = (0..d).map(|_| rng.gen_range(0.1..1.0)).collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / s).collect()
    };
    let mix = rng.gen_range(0.3..0.7);
    let phases: Vec<Complex64> = (0..d)
        .map(|_| Complex64::new(0.0, rng.gen_range(0.0..std::f64::consts::TAU)).exp())
        .collect();
    let m = ComplexMatrix::from_fn(d, d, |r, c| {
        let core = mix * u[r] * u[c] / unorm
            + if r == c {
                (1.0 - mix) * weights[r]
            } else {
                0.0
            };
        phases[r] * phases[c].conj() * core
    });
    DensityMatrix::new(m).expect("conjugated positive core is a valid state")
}

/// Random non-degenerate Hamiltonian whose Bohr frequencies are also
/// pairwise distinct (resampled until the mode table has singleton modes).
pub fn random_nondegenerate_bohr_hamiltonian(d: usize, rng: &mut impl Rng) -> Hamiltonian {
    loop {
        let mut omegas: Vec<f64> = vec![0.0];
        for _ in 1..d {
            omegas.push(omegas.last().unwrap() + rng.gen_range(0.2..2.0));
        }
        if let Ok(h) = Hamiltonian::new(omegas) {
            if let Ok(table) = bohr_modes(&h, FREQ_MERGE_TOL) {
                if table.is_nondegenerate_bohr() {
                    return h;
                }
            }
        }
    }
}

/// Random rate matrix with all off-diagonal rates strictly positive (hence
/// ergodic with full-support stationary state).
pub fn random_ergodic_generator(d: usize, rng: &mut impl Rng) -> PopulationGenerator {
    PopulationGenerator::from_rates(d, |_, _| rng.gen_range(0.05..1.0))
        .expect("positive rates always form a valid generator")
}

/// Random stochastic matrix wrapped as a [`PopulationMatrix`].
pub fn random_population_matrix(d: usize, rng: &mut impl Rng) -> PopulationMatrix {
    PopulationMatrix::new(crate::witness::random_stochastic(d, rng))
        .expect("simplex columns are stochastic")
}

/// Random valid covariant channel: random PSD blocks whose diagonals are
/// rescaled so the induced population matrix is exactly stochastic.
pub fn random_covariant_channel(table: &ModeTable, rng: &mut impl Rng) -> CovariantChannel {
    let d = table.dim();
    let raw: Vec<ComplexMatrix> = table
        .modes()
        .iter()
        .map(|m| random_psd(m.pairs.len(), rng))
        .collect();
    // column sums of the induced transition weights
    let mut col_sum = vec![0.0_f64; d];
    for (mode, block) in table.modes().iter().zip(&raw) {
        for (i, &(x_to, x_from)) in mode.pairs.iter().enumerate() {
            let _ = x_to;
            col_sum[x_from] += block[(i, i)].re;
        }
    }
    let blocks: Vec<ComplexMatrix> = table
        .modes()
        .iter()
        .zip(&raw)
        .map(|(mode, block)| {
            ComplexMatrix::from_fn(mode.pairs.len(), mode.pairs.len(), |i, j| {
                let (_, x_from) = mode.pairs[i];
                let (_, y_from) = mode.pairs[j];
                block[(i, j)] / (col_sum[x_from] * col_sum[y_from]).sqrt()
            })
        })
        .collect();
    CovariantChannel::new(table.clone(), blocks).expect("scaled PSD blocks form a channel")
}

/// Random valid covariant channel with a prescribed population matrix.
pub fn random_covariant_channel_with_population(
    table: &ModeTable,
    p: &PopulationMatrix,
    rng: &mut impl Rng,
) -> CovariantChannel {
    let blocks: Vec<ComplexMatrix> = table
        .modes()
        .iter()
        .map(|mode| {
            let diag: Vec<f64> = mode
                .pairs
                .iter()
                .map(|&(x_to, x_from)| p.get(x_to, x_from))
                .collect();
            random_psd_with_diagonal(&diag, rng)
        })
        .collect();
    CovariantChannel::new(table.clone(), blocks).expect("blocks with stochastic diagonal")
}

/// Random valid covariant generator: PSD blocks for every mode, with rates
/// scaled into a moderate range. All induced off-diagonal rates are
/// strictly positive, so the population dynamics is ergodic.
pub fn random_covariant_generator(table: &ModeTable, rng: &mut impl Rng) -> CovariantGenerator {
    let zero_index = table.zero_mode_index();
    let blocks: Vec<ComplexMatrix> = table
        .modes()
        .iter()
        .enumerate()
        .map(|(mi, mode)| {
            let n = mode.pairs.len();
            let scale = rng.gen_range(0.1..0.6);
            let mut block = random_psd(n, rng).scale_re(scale);
            if mi != zero_index {
                // keep every transition rate away from zero
                for i in 0..n {
                    block[(i, i)] += Complex64::new(rng.gen_range(0.05..0.3), 0.0);
                }
            }
            block
        })
        .collect();
    CovariantGenerator::new(table.clone(), blocks).expect("PSD blocks form a generator")
}

/// Random detailed-balanced rate matrix for a thermal context: a symmetric
/// positive seed S gives L_{x'|x} = S_{x'x} sqrt(pi_x' / pi_x), which
/// satisfies L_{x'|x} pi_x = L_{x|x'} pi_x' exactly.
pub fn random_detailed_balanced_generator(
    ctx: &ThermalContext,
    rng: &mut impl Rng,
) -> PopulationGenerator {
    let d = ctx.dim();
    let mut seed = vec![vec![0.0_f64; d]; d];
    for x in 0..d {
        for y in 0..x {
            let s = rng.gen_range(0.1..1.0);
            seed[x][y] = s;
            seed[y][x] = s;
        }
    }
    PopulationGenerator::from_rates(d, |to, from| {
        seed[to][from] * ctx.gibbs_ratio(to, from).sqrt()
    })
    .expect("balanced rates are non-negative")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::{detailed_balance_check, gibbs};
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn random_channels_validate() {
        let mut rng = StdRng::seed_from_u64(0x5eed_0101);
        let h = Hamiltonian::equidistant(3, 1.0).unwrap();
        let table = bohr_modes(&h, FREQ_MERGE_TOL).unwrap();
        for _ in 0..25 {
            let ch = random_covariant_channel(&table, &mut rng);
            assert!(ch.is_valid());
        }
    }

    #[test]
    fn random_channels_respect_prescribed_population() {
        let mut rng = StdRng::seed_from_u64(0x5eed_0102);
        let h = Hamiltonian::new(vec![0.0, 1.0, 1.4, 2.4]).unwrap();
        let table = bohr_modes(&h, FREQ_MERGE_TOL).unwrap();
        for _ in 0..10 {
            let p = random_population_matrix(4, &mut rng);
            let ch = random_covariant_channel_with_population(&table, &p, &mut rng);
            assert!(ch.is_valid());
            let induced = ch.population_matrix().unwrap();
            for r in 0..4 {
                for c in 0..4 {
                    assert!((induced.get(r, c) - p.get(r, c)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn random_generators_validate_and_are_ergodic() {
        let mut rng = StdRng::seed_from_u64(0x5eed_0103);
        let h = Hamiltonian::equidistant(4, 1.0).unwrap();
        let table = bohr_modes(&h, FREQ_MERGE_TOL).unwrap();
        for _ in 0..15 {
            let gen = random_covariant_generator(&table, &mut rng);
            let l = gen.population_generator().unwrap();
            assert!(l.is_ergodic().unwrap());
        }
    }

    #[test]
    fn phase_matched_states_satisfy_phase_matching() {
        let mut rng = StdRng::seed_from_u64(0x5eed_0104);
        let h = Hamiltonian::equidistant(4, 1.0).unwrap();
        let table = bohr_modes(&h, FREQ_MERGE_TOL).unwrap();
        for _ in 0..20 {
            let rho = random_phase_matched_state(4, &mut rng);
            for mode in table.modes() {
                if mode.omega > 0.0 {
                    assert!(crate::lindblad::phase_matching(&rho, mode.omega, &table).unwrap());
                }
            }
        }
    }

    #[test]
    fn detailed_balanced_samples_pass_the_check() {
        let mut rng = StdRng::seed_from_u64(0x5eed_0105);
        let h = Hamiltonian::new(vec![0.0, 0.7, 1.9]).unwrap();
        for _ in 0..20 {
            let beta = rng.gen_range(0.0..3.0);
            let ctx = gibbs(beta, &h).unwrap();
            let l = random_detailed_balanced_generator(&ctx, &mut rng);
            let report = detailed_balance_check(&l, &ctx, 1e-10);
            assert!(report.detailed_balance);
            assert!(report.gibbs_fixed_point);
        }
    }

    #[test]
    fn nondegenerate_bohr_hamiltonians_have_singleton_modes() {
        let mut rng = StdRng::seed_from_u64(0x5eed_0106);
        for d in 3..=5 {
            let h = random_nondegenerate_bohr_hamiltonian(d, &mut rng);
            let table = bohr_modes(&h, FREQ_MERGE_TOL).unwrap();
            assert!(table.is_nondegenerate_bohr());
        }
    }
}
