use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use super::LinalgError;

// 1-norm switch points for the [m/m] diagonal approximants, after
// Higham, "The Scaling and Squaring Method for the Matrix Exponential
// Revisited", SIAM J. Matrix Anal. Appl. 26(4), 2005.
const THETA_3: f64 = 1.495_585_217_958_292e-2;
const THETA_5: f64 = 2.539_398_330_063_23e-1;
const THETA_7: f64 = 9.504_178_996_162_932e-1;
const THETA_9: f64 = 2.097_847_961_257_068;
const THETA_13: f64 = 5.371_920_351_148_152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25200.0,
    1512.0,
    56.0,
    1.0,
];
const B9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16380.0,
    182.0,
    1.0,
];

/// Matrix exponential via scaling and squaring with a degree-13 diagonal
/// rational approximant (lower degrees are used when the norm permits).
pub fn expm(m: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    let n = m.require_square()?;
    if !m.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    if n == 0 {
        return Ok(ComplexMatrix::zeros(0, 0));
    }
    let norm = m.norm_one();
    let ident = ComplexMatrix::identity(n);

    let (u, v, squarings) = if norm <= THETA_3 {
        let m2 = m.matmul(m);
        let (u, v) = pade_odd_even(m, &[&ident, &m2], &B3);
        (u, v, 0)
    } else if norm <= THETA_5 {
        let m2 = m.matmul(m);
        let m4 = m2.matmul(&m2);
        let (u, v) = pade_odd_even(m, &[&ident, &m2, &m4], &B5);
        (u, v, 0)
    } else if norm <= THETA_7 {
        let m2 = m.matmul(m);
        let m4 = m2.matmul(&m2);
        let m6 = m4.matmul(&m2);
        let (u, v) = pade_odd_even(m, &[&ident, &m2, &m4, &m6], &B7);
        (u, v, 0)
    } else if norm <= THETA_9 {
        let m2 = m.matmul(m);
        let m4 = m2.matmul(&m2);
        let m6 = m4.matmul(&m2);
        let m8 = m6.matmul(&m2);
        let (u, v) = pade_odd_even(m, &[&ident, &m2, &m4, &m6, &m8], &B9);
        (u, v, 0)
    } else {
        let squarings = ((norm / THETA_13).log2().ceil().max(0.0)) as u32;
        let scaled = m.scale_re(0.5f64.powi(squarings as i32));
        let m2 = scaled.matmul(&scaled);
        let m4 = m2.matmul(&m2);
        let m6 = m4.matmul(&m2);
        let (u, v) = pade13(&scaled, &ident, &m2, &m4, &m6);
        (u, v, squarings)
    };

    // (V - U) X = (V + U)
    let mut result = v.sub(&u).solve(&v.add(&u))?;
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    Ok(result)
}

/// U = A * (sum of odd coefficients over even powers), V = even part.
fn pade_odd_even(
    a: &ComplexMatrix,
    even_powers: &[&ComplexMatrix],
    b: &[f64],
) -> (ComplexMatrix, ComplexMatrix) {
    let n = a.rows();
    let mut u_poly = ComplexMatrix::zeros(n, n);
    let mut v = ComplexMatrix::zeros(n, n);
    for (k, p) in even_powers.iter().enumerate() {
        u_poly = u_poly.add(&p.scale_re(b[2 * k + 1]));
        v = v.add(&p.scale_re(b[2 * k]));
    }
    (a.matmul(&u_poly), v)
}

fn pade13(
    a: &ComplexMatrix,
    ident: &ComplexMatrix,
    m2: &ComplexMatrix,
    m4: &ComplexMatrix,
    m6: &ComplexMatrix,
) -> (ComplexMatrix, ComplexMatrix) {
    let u_high = m6.matmul(
        &m6.scale_re(B13[13])
            .add(&m4.scale_re(B13[11]))
            .add(&m2.scale_re(B13[9])),
    );
    let u_low = m6
        .scale_re(B13[7])
        .add(&m4.scale_re(B13[5]))
        .add(&m2.scale_re(B13[3]))
        .add(&ident.scale_re(B13[1]));
    let u = a.matmul(&u_high.add(&u_low));
    let v_high = m6.matmul(
        &m6.scale_re(B13[12])
            .add(&m4.scale_re(B13[10]))
            .add(&m2.scale_re(B13[8])),
    );
    let v = v_high
        .add(&m6.scale_re(B13[6]))
        .add(&m4.scale_re(B13[4]))
        .add(&m2.scale_re(B13[2]))
        .add(&ident.scale_re(B13[0]));
    (u, v)
}

#[allow(dead_code)]
pub fn expm_taylor(m: &ComplexMatrix, terms: usize) -> ComplexMatrix {
    // reference oracle for tests: plain truncated power series
    let n = m.rows();
    let mut sum = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    for k in 1..=terms {
        term = term.matmul(m).scale(Complex64::new(1.0 / k as f64, 0.0));
        sum = sum.add(&term);
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let z = ComplexMatrix::zeros(3, 3);
        let e = expm(&z).unwrap();
        assert!(e.sub(&ComplexMatrix::identity(3)).max_abs() < 1e-15);
    }

    #[test]
    fn exp_of_diagonal_exponentiates_entries() {
        let a = c(0.3, -1.1);
        let b = c(-2.0, 0.7);
        let m = ComplexMatrix::diag(&[a, b]);
        let e = expm(&m).unwrap();
        assert!((e[(0, 0)] - a.exp()).norm() < 1e-14);
        assert!((e[(1, 1)] - b.exp()).norm() < 1e-14);
        assert!(e[(0, 1)].norm() < 1e-15);
        assert!(e[(1, 0)].norm() < 1e-15);
    }

    #[test]
    fn matches_taylor_oracle_on_random_4x4() {
        let mut rng = StdRng::seed_from_u64(0x5eed_0001);
        for _ in 0..20 {
            let mut m = ComplexMatrix::from_fn(4, 4, |_, _| {
                c(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))
            });
            // keep the 1-norm at or below 2 so 30 Taylor terms are reliable
            let norm = m.norm_one();
            if norm > 2.0 {
                m = m.scale_re(2.0 / norm);
            }
            let e = expm(&m).unwrap();
            let t = expm_taylor(&m, 30);
            assert!(
                e.sub(&t).max_abs() < 1e-10,
                "deviation {:e}",
                e.sub(&t).max_abs()
            );
        }
    }

    #[test]
    fn inverse_law_holds_up_to_norm_five() {
        let mut rng = StdRng::seed_from_u64(0x5eed_0002);
        for _ in 0..20 {
            let mut m = ComplexMatrix::from_fn(5, 5, |_, _| {
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let norm = m.norm_one();
            if norm > 5.0 {
                m = m.scale_re(5.0 / norm);
            }
            let prod = expm(&m).unwrap().matmul(&expm(&m.scale_re(-1.0)).unwrap());
            assert!(prod.sub(&ComplexMatrix::identity(5)).max_abs() < 1e-9);
        }
    }

    #[test]
    fn semigroup_law_holds() {
        let mut rng = StdRng::seed_from_u64(0x5eed_0003);
        for _ in 0..20 {
            let g = ComplexMatrix::from_fn(4, 4, |_, _| {
                c(rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8))
            });
            let s = rng.gen_range(0.1..2.0);
            let t = rng.gen_range(0.1..2.0);
            let whole = expm(&g.scale_re(s + t)).unwrap();
            let split = expm(&g.scale_re(s))
                .unwrap()
                .matmul(&expm(&g.scale_re(t)).unwrap());
            assert!(whole.sub(&split).max_abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_non_square() {
        let m = ComplexMatrix::zeros(2, 3);
        assert!(matches!(expm(&m), Err(LinalgError::NotSquare { .. })));
    }
}
