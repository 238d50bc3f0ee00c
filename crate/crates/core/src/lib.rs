//! Classical and quantum dynamics of a single ion shuttled through a
//! segmented Paul-trap electrode array, together with the synthesis of the
//! electrode waveforms that realize the moving harmonic well.
//!
//! The crate is organized around the pipeline
//!
//! * [`profiles`] — normalized transport functions `q0(t)` and their
//!   derivatives (sine, error-function, tabulated),
//! * [`ermakov`] — the parametrically driven, forced oscillator: Ermakov
//!   amplitude/phase solutions, Green's-function trajectories, and the
//!   adiabatic suppression amplitude that measures transferred energy,
//! * [`quantum`] — transition probabilities, energy moments, coherent-state
//!   expectation values and squeezing of the dragged oscillator,
//! * [`electrodes`] — the analytic stripe-electrode potential basis and the
//!   axial-frequency geometry factor,
//! * [`optimizer`] — per-time-step Tikhonov-regularized least squares that
//!   turns a transport profile into electrode waveforms and extracts the
//!   residual-potential perturbations they imply.
//!
//! Support modules [`special`], [`quadrature`] and [`ode`] provide the
//! complex error function, adaptive Gauss-Legendre quadrature and an
//! embedded Runge-Kutta integrator used throughout.

pub mod electrodes;
pub mod ermakov;
pub mod error;
pub mod io;
pub mod ode;
pub mod optimizer;
pub mod profiles;
pub mod quadrature;
pub mod quantum;
pub mod special;

pub use electrodes::ElectrodeArray;
pub use ermakov::{ErmakovSolution, ForcingTerm, FrequencyProgram, SuppressionResult};
pub use error::CoreError;
pub use optimizer::{OptimizationConfig, PerturbationTrace, WaveformSolution};
pub use profiles::{ProfileSample, TransportProfile};
pub use quantum::{DispersionTrace, MomentResult, TransitionTable};


/// Reduced Planck constant, J*s (CODATA 2018 exact).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Atomic mass unit, kg (CODATA 2018).
pub const ATOMIC_MASS_KG: f64 = 1.660_539_066_60e-27;
/// Elementary charge, C (exact).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
