//! Incidence-angle model of the canonical optical weak-value amplification
//! device: a preselection polarizer, a tilted uniaxial birefringent plate and
//! a nearly crossed post-selection polarizer acting on a Gaussian pointer.
//!
//! The crate is `no_std` (it only needs `alloc`). Everything is a pure
//! function of its inputs, so values can be shared freely across threads.
//!
//! Units are SI throughout: lengths in metres, angles in radians,
//! wavenumbers in rad/m.
//!
//! * [`optics`] – ray displacements and phase retardation of the plate.
//! * [`pointer`] – post-selected pointer state, closed-form moments, weak
//!   values and regime labels.
//! * [`oracle`] – brute-force trapezoid moments used to check the closed forms.
//! * [`coherency`] – enumeration of coherency and anti-coherency angles.
//! * [`sensitivity`] – tilt sensitivity, sweeps, maps and ε optimisation.
//! * [`fit`] – synthetic measurements and boost-strength recovery.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(test, allow(clippy::excessive_precision))]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod coherency;
mod error;
pub mod fit;
mod numerics;
pub mod optics;
pub mod oracle;
pub mod pointer;
pub mod sensitivity;
mod setup;

pub use coherency::{locate_points, nth_point, CoherencyPoint, PointKind, ScanOptions};
pub use error::{Error, Result};
pub use fit::{
    beam_divergence, fit_boost, synthesize_measurements, FitModel, FitOptions, FitParams, FitResult, MeasurementSample,
    ParamMask, DEFAULT_FRAMES,
};
pub use optics::{
    classical_tilt_sensitivity, interaction_params, phase_shift, phase_slope, ray_displacements, BeamSpec, CrystalSpec,
    InteractionParams, PhaseModel,
};
pub use oracle::{moment, oracle_expectation_z, oracle_probability, GridRequest};
pub use pointer::{
    classify_regime, expectation_z, final_wavefunction, inverse_wva_prediction, postselection_probability, weak_value,
    wva_prediction, BoostSpec, InverseWvaPrediction, PointerWavefunction, Regime, RegimeLabel, RegimeThresholds,
    SelectionSpec, P_FLOOR,
};
pub use sensitivity::{
    amplification_factor, density_map, optimal_epsilon, probability_map, sweep_epsilon, sweep_theta, tilt_sensitivity,
    EpsilonRecord, Map2d, OptimalEpsilon, SweepRecord, DEFAULT_DTHETA,
};
pub use setup::Setup;
