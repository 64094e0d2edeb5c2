//! Perfect-entangler spectroscopy of crosstalk in a tunable-coupler transmon
//! device.
//!
//! Three fixed-frequency transmons share a flux-driven coupler. Two of them
//! perform a parametric entangling gate while the third, the spectator, is
//! swept in frequency. For every spectator frequency the simulator propagates
//! the logical states, extracts the two-qubit gates conditioned on the
//! spectator being in `|0⟩` or `|1⟩`, and scores them with
//!
//! ```text
//! J = J_PE(U0) + J_PE(U1) + w_S · S(U0, U1)
//! ```
//!
//! where `J_PE` measures the distance from the perfect-entangler polyhedron
//! (plus a leakage penalty) and `S` the dissimilarity of the two blocks.
//! Peaks of `J` against the spectator frequency mark crosstalk; the
//! [`resonance`] module attributes them to static or drive-induced
//! resonances.
//!
//! All numerics are generic over [`Real`] (`f32`/`f64`); the aliases at the
//! crate root fix the scalar to `f64`, which is what the tolerances used
//! throughout assume.

pub mod device;
pub mod error;
pub mod flux;
pub mod gates;
pub mod linalg;
pub mod metrics;
pub mod num;
pub mod perturbation;
pub mod presets;
pub mod propagation;
pub mod resonance;
pub mod spectrum;
pub mod tomography;

pub use error::{Error, Result};
pub use num::Real;

pub type TransmonSpec = device::TransmonSpec<f64>;
pub type CouplerSpec = device::CouplerSpec<f64>;
pub type DeviceSpec = device::DeviceSpec<f64>;
pub type OperatorSet = device::OperatorSet<f64>;
pub type FluxPulse = flux::FluxPulse<f64>;
pub type Preset = presets::Preset<f64>;
pub type PropagationConfig = propagation::PropagationConfig<f64>;
pub type PropagationResult = propagation::PropagationResult<f64>;
pub type GateBlocks = metrics::GateBlocks<f64>;
pub type LocalInvariants = metrics::LocalInvariants<f64>;
pub type WeylCoordinates = metrics::WeylCoordinates<f64>;
pub type MetricWeights = metrics::MetricWeights<f64>;
pub type JBreakdown = metrics::JBreakdown<f64>;
pub type SweepConfig = spectrum::SweepConfig<f64>;
pub type SpectrumPoint = spectrum::SpectrumPoint<f64>;
pub type ResonanceConfig = resonance::ResonanceConfig<f64>;
pub type EigenSpectrum = resonance::EigenSpectrum<f64>;
pub type ToyModel = perturbation::ToyModel<f64>;
pub type ReconstructionInput = tomography::ReconstructionInput<f64>;
