//! Simulation toolkit for open quantum systems constrained by
//! time-translation symmetry.
//!
//! The crate models finite-dimensional systems whose dissipative dynamics
//! commute with the Hamiltonian-generated time translations. Under that
//! symmetry the density matrix splits into modes of coherence that evolve
//! independently, which makes the optimal (least-decohering) evolution
//! compatible with a given population dynamics computable in closed form.
//!
//! Module map:
//! - [`linalg`]: dense complex/real matrix kernel (expm, eigenvalues, PSD
//!   checks, exact linear propagation, adaptive Runge-Kutta oracle);
//! - [`spectrum`]: Hamiltonians, Bohr spectra, mode tables and mode
//!   decompositions of density matrices;
//! - [`channels`]: covariant CPTP maps, their block Choi structure, the
//!   coherence transfer bound for general covariant maps and the channel
//!   saturating it;
//! - [`lindblad`]: covariant Markovian generators, master-equation
//!   evolution, the minimal-decoherence bound ODE and its optimal generator;
//! - [`relaxometry`]: T1/T2 extraction and the harmonic-mean bound
//!   relating them;
//! - [`transfer`]: coherence transfer and mixing scenarios on three- and
//!   four-level systems;
//! - [`witness`]: non-Markovianity certification from snapshots,
//!   trajectories and population spectra;
//! - [`thermo`]: Gibbs fixed points, detailed balance, quantum detailed
//!   balance and thermal bounds on transport rates;
//! - [`sampling`]: seeded random generators for states, channels and rate
//!   matrices, used by the witnesses and the test oracles.

pub mod channels;
pub mod linalg;
pub mod lindblad;
pub mod relaxometry;
pub mod sampling;
pub mod spectrum;
pub mod thermo;
pub mod transfer;
pub mod witness;
