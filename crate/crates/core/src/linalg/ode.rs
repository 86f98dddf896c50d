use num_complex::Complex64;

use super::expm::expm;
use super::matrix::ComplexMatrix;
use super::LinalgError;

/// A time grid together with the states sampled on it.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    times: Vec<f64>,
    states: Vec<T>,
}

impl<T> Trajectory<T> {
    pub fn new(times: Vec<f64>, states: Vec<T>) -> Result<Self, LinalgError> {
        if times.len() != states.len() {
            return Err(LinalgError::TrajectoryMismatch {
                times: times.len(),
                states: states.len(),
            });
        }
        if !strictly_increasing(&times) {
            return Err(LinalgError::BadTimeGrid);
        }
        Ok(Self { times, states })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[T] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &T)> {
        self.times.iter().copied().zip(self.states.iter())
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Trajectory<U> {
        Trajectory {
            times: self.times.clone(),
            states: self.states.iter().map(f).collect(),
        }
    }
}

fn strictly_increasing(times: &[f64]) -> bool {
    times.windows(2).all(|w| w[1] > w[0]) && times.iter().all(|t| t.is_finite())
}

fn check_grid(times: &[f64]) -> Result<(), LinalgError> {
    if times.is_empty() || !strictly_increasing(times) || times[0] < 0.0 {
        return Err(LinalgError::BadTimeGrid);
    }
    Ok(())
}

/// Propagate the autonomous linear system dy/dt = G y exactly: each grid
/// point is e^(G t) y0, never a stepwise approximation.
pub fn integrate_linear(
    g: &ComplexMatrix,
    y0: &[Complex64],
    times: &[f64],
) -> Result<Trajectory<Vec<Complex64>>, LinalgError> {
    let n = g.require_square()?;
    if y0.len() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "initial vector has length {}, generator is {n}x{n}",
            y0.len()
        )));
    }
    check_grid(times)?;
    let states = times
        .iter()
        .map(|&t| Ok(expm(&g.scale_re(t))?.matvec(y0)))
        .collect::<Result<Vec<_>, LinalgError>>()?;
    Trajectory::new(times.to_vec(), states)
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
// difference between the 5th- and 4th-order weights
const ERR: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Adaptive embedded Runge-Kutta (Dormand-Prince 5(4)) with per-step local
/// error at most `tol`, sampled on the supplied grid. This is the
/// independent oracle for cross-checking exponential propagation.
pub fn integrate_rk<F>(
    f: F,
    y0: &[Complex64],
    times: &[f64],
    tol: f64,
) -> Result<Trajectory<Vec<Complex64>>, LinalgError>
where
    F: Fn(f64, &[Complex64]) -> Vec<Complex64>,
{
    check_grid(times)?;
    let n = y0.len();
    let mut states = Vec::with_capacity(times.len());
    let mut t = times[0];
    let mut y = y0.to_vec();
    states.push(y.clone());

    let mut h = {
        // conservative first step from the initial derivative scale
        let d0 = f(t, &y)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
            .max(1e-8);
        (tol.powf(0.2) / d0).clamp(1e-8, 0.1)
    };

    for &target in &times[1..] {
        while t < target {
            if !y.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(LinalgError::NonFinite);
            }
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(LinalgError::StepUnderflow { t });
            }
            let step = h.min(target - t);
            let mut k: Vec<Vec<Complex64>> = Vec::with_capacity(7);
            k.push(f(t, &y));
            for stage in 0..6 {
                let mut ys = y.clone();
                for (j, kj) in k.iter().enumerate() {
                    let a = A[stage][j];
                    if a != 0.0 {
                        for i in 0..n {
                            ys[i] += kj[i] * (a * step);
                        }
                    }
                }
                k.push(f(t + C[stage] * step, &ys));
            }
            // stage 6 used the 5th-order weights, so k[6] was evaluated at y5
            let y5: Vec<Complex64> = {
                let mut ys = y.clone();
                for (j, kj) in k.iter().take(6).enumerate() {
                    let a = A[5][j];
                    if a != 0.0 {
                        for i in 0..n {
                            ys[i] += kj[i] * (a * step);
                        }
                    }
                }
                ys
            };
            let mut err = 0.0f64;
            for i in 0..n {
                let mut e = Complex64::new(0.0, 0.0);
                for (j, kj) in k.iter().enumerate() {
                    e += kj[i] * (ERR[j] * step);
                }
                err = err.max(e.norm());
            }
            if err <= tol {
                t += step;
                y = y5;
                let grow = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * (tol / err).powf(0.2)).clamp(0.2, 5.0)
                };
                h = (step * grow).max(1e-300);
            } else {
                h = step * (0.9 * (tol / err).powf(0.2)).clamp(0.1, 1.0);
            }
        }
        states.push(y.clone());
        t = target;
    }
    Trajectory::new(times.to_vec(), states)
}
