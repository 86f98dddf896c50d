use num_complex::Complex64;

use super::matrix::{ComplexMatrix, RealMatrix};
use super::LinalgError;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// All eigenvalues of a square complex matrix, with multiplicity, sorted by
/// (real, imaginary) part. Hessenberg reduction followed by explicitly
/// shifted QR with Wilkinson shifts; the iteration cap is 500 per dimension.
pub fn eigvals(m: &ComplexMatrix) -> Result<Vec<Complex64>, LinalgError> {
    let n = m.require_square()?;
    if !m.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let mut eigs = match n {
        0 => Vec::new(),
        1 => vec![m[(0, 0)]],
        _ => francis(hessenberg(m))?,
    };
    eigs.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    Ok(eigs)
}

/// Eigenvalues of a real matrix (returned as complex; conjugate pairs appear
/// together in the multiset up to rounding).
pub fn eigvals_real(m: &RealMatrix) -> Result<Vec<Complex64>, LinalgError> {
    eigvals(&m.to_complex())
}

/// True iff the Hermitian matrix `h` has smallest eigenvalue >= -tol.
///
/// The input must be Hermitian within `tol`; anything worse is rejected as a
/// precondition error rather than silently symmetrized.
pub fn psd_check(h: &ComplexMatrix, tol: f64) -> Result<bool, LinalgError> {
    h.require_square()?;
    let defect = h.hermiticity_defect();
    if defect > tol {
        return Err(LinalgError::NotHermitian {
            tol,
            deviation: defect,
        });
    }
    // symmetrize so the QR iteration sees an exactly Hermitian operator
    let sym = h.add(&h.dagger()).scale_re(0.5);
    let min_eig = eigvals(&sym)?
        .into_iter()
        .map(|z| z.re)
        .fold(f64::INFINITY, f64::min);
    Ok(min_eig >= -tol)
}

/// Householder reduction to upper Hessenberg form.
fn hessenberg(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.rows();
    let mut h = m.clone();
    for k in 0..n.saturating_sub(2) {
        // reflector annihilating h[k+2.., k]
        let col: Vec<Complex64> = (k + 1..n).map(|r| h[(r, k)]).collect();
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = col[0];
        let phase = if x0 == ZERO {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * norm;
        let mut v = col;
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm < f64::MIN_POSITIVE.sqrt() {
            continue;
        }
        for z in &mut v {
            *z /= vnorm;
        }
        // left: rows k+1..n
        for c in 0..n {
            let dot: Complex64 = (0..v.len()).map(|i| v[i].conj() * h[(k + 1 + i, c)]).sum();
            let two_dot = dot * 2.0;
            for i in 0..v.len() {
                let sub = two_dot * v[i];
                h[(k + 1 + i, c)] -= sub;
            }
        }
        // right: columns k+1..n
        for r in 0..n {
            let dot: Complex64 = (0..v.len()).map(|i| h[(r, k + 1 + i)] * v[i]).sum();
            let two_dot = dot * 2.0;
            for i in 0..v.len() {
                let sub = two_dot * v[i].conj();
                h[(r, k + 1 + i)] -= sub;
            }
        }
    }
    // zero out the strictly-lower part that the similarity left as rounding noise
    for r in 2..n {
        for c in 0..r - 1 {
            h[(r, c)] = ZERO;
        }
    }
    h
}

/// Shifted QR iteration on an upper Hessenberg matrix.
fn francis(mut h: ComplexMatrix) -> Result<Vec<Complex64>, LinalgError> {
    let n = h.rows();
    let scale = h.max_abs().max(f64::MIN_POSITIVE);
    let mut eigs = Vec::with_capacity(n);
    let mut hi = n;
    let max_iter = 500 * n;
    let mut total_iter = 0usize;
    let mut stuck = 0usize;

    while hi > 0 {
        clean_subdiagonal(&mut h, hi, scale);
        if hi == 1 {
            eigs.push(h[(0, 0)]);
            hi = 0;
            continue;
        }
        if h[(hi - 1, hi - 2)] == ZERO {
            eigs.push(h[(hi - 1, hi - 1)]);
            hi -= 1;
            stuck = 0;
            continue;
        }
        // start of the unreduced block ending at hi-1
        let mut lo = hi - 1;
        while lo > 0 && h[(lo, lo - 1)] != ZERO {
            lo -= 1;
        }
        if hi - lo == 2 {
            let (l1, l2) = eig2(
                h[(lo, lo)],
                h[(lo, lo + 1)],
                h[(lo + 1, lo)],
                h[(lo + 1, lo + 1)],
            );
            eigs.push(l1);
            eigs.push(l2);
            hi = lo;
            stuck = 0;
            continue;
        }
        total_iter += 1;
        stuck += 1;
        if total_iter > max_iter {
            return Err(LinalgError::EigNonConvergence {
                iterations: total_iter,
                residual: h[(hi - 1, hi - 2)].norm(),
            });
        }
        let shift = if stuck.is_multiple_of(12) {
            // exceptional shift to break symmetric stalls
            h[(hi - 1, hi - 1)] + Complex64::new(1.5 * h[(hi - 1, hi - 2)].norm(), 0.0)
        } else {
            wilkinson(&h, hi)
        };
        qr_step(&mut h, lo, hi, shift);
    }
    Ok(eigs)
}

fn clean_subdiagonal(h: &mut ComplexMatrix, hi: usize, scale: f64) {
    for i in 1..hi {
        let local = h[(i - 1, i - 1)].norm() + h[(i, i)].norm();
        let tol = f64::EPSILON * if local > 0.0 { local } else { scale };
        if h[(i, i - 1)].norm() <= tol {
            h[(i, i - 1)] = ZERO;
        }
    }
}

/// Eigenvalues of a 2x2 complex matrix.
fn eig2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> (Complex64, Complex64) {
    let mid = (a + d) * 0.5;
    let disc = ((a - d) * 0.5).powu(2) + b * c;
    let root = disc.sqrt();
    (mid + root, mid - root)
}

/// Wilkinson shift: the eigenvalue of the trailing 2x2 closest to the corner.
fn wilkinson(h: &ComplexMatrix, hi: usize) -> Complex64 {
    let a = h[(hi - 2, hi - 2)];
    let b = h[(hi - 2, hi - 1)];
    let c = h[(hi - 1, hi - 2)];
    let d = h[(hi - 1, hi - 1)];
    let (l1, l2) = eig2(a, b, c, d);
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Complex Givens rotation [[c, s], [-conj(s), c]] (c real) zeroing `b`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    if b == ZERO {
        return (1.0, ZERO);
    }
    if a == ZERO {
        return (0.0, b.conj() / b.norm());
    }
    let rho = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let c = a.norm() / rho;
    let s = (a / a.norm()) * b.conj() / rho;
    (c, s)
}

/// One explicit shifted QR sweep on the active block [lo, hi).
fn qr_step(h: &mut ComplexMatrix, lo: usize, hi: usize, shift: Complex64) {
    for i in lo..hi {
        h[(i, i)] -= shift;
    }
    let mut rotations = Vec::with_capacity(hi - lo - 1);
    for i in lo..hi - 1 {
        let (c, s) = givens(h[(i, i)], h[(i + 1, i)]);
        rotations.push((c, s));
        for col in i..hi {
            let top = h[(i, col)];
            let bot = h[(i + 1, col)];
            h[(i, col)] = top * c + bot * s;
            h[(i + 1, col)] = -top * s.conj() + bot * c;
        }
    }
    for (k, &(c, s)) in rotations.iter().enumerate() {
        let i = lo + k;
        let row_end = (i + 2).min(hi);
        for row in lo..row_end {
            let left = h[(row, i)];
            let right = h[(row, i + 1)];
            h[(row, i)] = left * c + right * s.conj();
            h[(row, i + 1)] = -left * s + right * c;
        }
    }
    for i in lo..hi {
        h[(i, i)] += shift;
    }
}
