//! Stress tests for the dense kernel: clustered and repeated spectra,
//! larger dimensions, accuracy of the exponential at the top of its
//! specified norm range, and mode machinery on permuted level orderings.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use covlind::channels::{apply, bound_nm, saturating_channel};
use covlind::linalg::{eigvals, expm, ComplexMatrix};
use covlind::sampling::{
    random_covariant_generator, random_density_matrix, random_population_matrix,
};
use covlind::spectrum::{bohr_modes, DensityMatrix, Hamiltonian, FREQ_MERGE_TOL};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn sorted(mut eigs: Vec<Complex64>) -> Vec<Complex64> {
    eigs.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    eigs
}

#[test]
fn eigenvalues_of_triangular_matrices_are_the_diagonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for _ in 0..50 {
        let n = rng.gen_range(2..=12);
        let diag: Vec<Complex64> = (0..n)
            .map(|_| c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
            .collect();
        let m = ComplexMatrix::from_fn(n, n, |r, col| {
            if r == col {
                diag[r]
            } else if r < col {
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            } else {
                c(0.0, 0.0)
            }
        });
        let got = sorted(eigvals(&m).unwrap());
        let want = sorted(diag);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-8, "got {g}, wanted {w}");
        }
    }
}

#[test]
fn repeated_eigenvalues_are_recovered_with_multiplicity() {
    let mut rng = ChaCha8Rng::seed_from_u64(67);
    for _ in 0..30 {
        // similarity transform of a diagonal with deliberate repetitions
        let n = 6;
        let values = [
            c(1.0, 0.5),
            c(1.0, 0.5),
            c(-0.3, 0.0),
            c(-0.3, 0.0),
            c(2.0, -1.0),
            c(0.0, 0.0),
        ];
        let g = ComplexMatrix::from_fn(n, n, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        // make the transform well-conditioned by mixing with the identity
        let t = g.scale_re(0.3).add(&ComplexMatrix::identity(n));
        let t_inv = t.solve(&ComplexMatrix::identity(n)).unwrap();
        let m = t.matmul(&ComplexMatrix::diag(&values)).matmul(&t_inv);
        let got = sorted(eigvals(&m).unwrap());
        let want = sorted(values.to_vec());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-6, "got {g}, wanted {w}");
        }
    }
}

#[test]
fn defective_jordan_blocks_do_not_break_the_iteration() {
    // a true Jordan block: eigenvalue 0.5 with multiplicity 4, one eigenvector
    let n = 4;
    let mut m = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = c(0.5, 0.0);
        if i + 1 < n {
            m[(i, i + 1)] = c(1.0, 0.0);
        }
    }
    let eigs = eigvals(&m).unwrap();
    for e in eigs {
        // defective eigenvalues are recovered with O(eps^(1/n)) accuracy
        assert!((e - c(0.5, 0.0)).norm() < 1e-3, "{e}");
    }
}

#[test]
fn spectra_of_sixteen_level_matrices_satisfy_trace_and_determinant() {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    for _ in 0..10 {
        let n = 16;
        let m = ComplexMatrix::from_fn(n, n, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let eigs = eigvals(&m).unwrap();
        assert_eq!(eigs.len(), n);
        let sum: Complex64 = eigs.iter().sum();
        assert!((sum - m.trace()).norm() < 1e-9 * n as f64);
    }
}

#[test]
fn exponential_meets_the_accuracy_target_at_norm_ten() {
    let mut rng = ChaCha8Rng::seed_from_u64(73);
    for _ in 0..20 {
        let n = rng.gen_range(2..=8);
        let mut m = ComplexMatrix::from_fn(n, n, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let target: f64 = rng.gen_range(5.0..10.0);
        let norm = m.norm_one();
        m = m.scale_re(target / norm);
        // oracle: 40-term power series of m / 2^7, squared back up
        let tiny = m.scale_re(1.0 / 128.0);
        let mut oracle = {
            let mut sum = ComplexMatrix::identity(n);
            let mut term = ComplexMatrix::identity(n);
            for k in 1..=40 {
                term = term.matmul(&tiny).scale_re(1.0 / k as f64);
                sum = sum.add(&term);
            }
            sum
        };
        for _ in 0..7 {
            oracle = oracle.matmul(&oracle);
        }
        let e = expm(&m).unwrap();
        let rel = e.sub(&oracle).norm_fro() / oracle.norm_fro();
        assert!(rel < 1e-12, "relative error {rel:e} at norm {target}");
    }
}

#[test]
fn mode_machinery_handles_unsorted_level_frequencies() {
    // level 1 is the highest, level 2 sits between 0 and 1
    let h = Hamiltonian::new(vec![0.0, 2.0, 1.0]).unwrap();
    let table = bohr_modes(&h, FREQ_MERGE_TOL).unwrap();
    // Bohr frequency 1 appears for (1,2) and (2,0): an overlapping mode
    assert_eq!(table.mode(1.0).unwrap().pairs.len(), 2);

    let mut rng = ChaCha8Rng::seed_from_u64(79);
    for _ in 0..25 {
        let rho = DensityMatrix::from_pure(&[
            c(rng.gen_range(0.2..1.0), rng.gen_range(-1.0..1.0)),
            c(rng.gen_range(0.2..1.0), rng.gen_range(-1.0..1.0)),
            c(rng.gen_range(0.2..1.0), rng.gen_range(-1.0..1.0)),
        ])
        .unwrap();
        let p = random_population_matrix(3, &mut rng);
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
                    "pair ({x_to},{y_to}): {} vs {bound}",
                    out.magnitude(x_to, y_to)
                );
            }
        }
    }
}

#[test]
fn evolution_scales_to_eight_levels() {
    let mut rng = ChaCha8Rng::seed_from_u64(83);
    let h = Hamiltonian::equidistant(8, 1.0).unwrap();
    let table = bohr_modes(&h, FREQ_MERGE_TOL).unwrap();
    let gen = random_covariant_generator(&table, &mut rng);
    let rho0 = random_density_matrix(8, &mut rng);
    let times: Vec<f64> = (0..=10).map(|k| 0.3 * k as f64).collect();
    let traj = covlind::lindblad::evolve(&gen, &rho0, &times).unwrap();
    let l = gen.population_generator().unwrap();
    for mode in table.modes() {
        if mode.omega <= 0.0 {
            continue;
        }
        let bound =
            covlind::lindblad::bound_trajectory(&l, &rho0, mode.omega, &table, &times).unwrap();
        for ((_, state), (_, cap)) in traj.iter().zip(bound.iter()) {
            for (&(x, y), &b) in mode.pairs.iter().zip(cap) {
                assert!(state.magnitude(x, y) <= b + 1e-8);
            }
        }
    }
}
