//! Crystal optics of a tilted uniaxial plate whose optic axis is
//! perpendicular to the plane of incidence.
//!
//! The ordinary (H) and extraordinary (V) rays refract with indices `n_o` and
//! `n_e` and leave the plate parallel to the incident beam but translated
//! along z by `a_o` and `a_e`. Their optical path difference gives the
//! relative retardation `phi`. The pointer model only needs the mean and
//! half-difference of the two translations, collected in
//! [`InteractionParams`].

use core::f64::consts::FRAC_PI_2;

use libm::{cos, sin, sqrt};

use crate::error::{Error, Result};

/// How the relative retardation is computed from the two refraction radicals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseModel {
    /// `T k_o [sqrt(n_e^2 - s^2) - sqrt(n_o^2 - s^2)]`, the optical path
    /// difference of the two rays.
    #[default]
    Difference,
    /// `T k_o [sqrt(n_e^2 - s^2) / sqrt(n_o^2 - s^2) - 1]`, kept for
    /// comparison with the ratio rendering of the retardation formula.
    Ratio,
}

/// Geometry and refractive indices of the birefringent plate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrystalSpec {
    /// Plate thickness `T` in metres.
    pub thickness: f64,
    pub n_o: f64,
    pub n_e: f64,
    pub n_air: f64,
    pub phase_model: PhaseModel,
}

impl CrystalSpec {
    pub const DEFAULT_THICKNESS: f64 = 4e-3;
    pub const DEFAULT_N_O: f64 = 1.5427;
    pub const DEFAULT_N_E: f64 = 1.55175;
    pub const DEFAULT_N_AIR: f64 = 1.0;

    /// Validated constructor using the difference phase model.
    pub fn new(thickness: f64, n_o: f64, n_e: f64, n_air: f64) -> Result<Self> {
        let spec = Self {
            thickness,
            n_o,
            n_e,
            n_air,
            phase_model: PhaseModel::Difference,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_phase_model(mut self, model: PhaseModel) -> Self {
        self.phase_model = model;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.thickness.is_finite() && self.thickness > 0.0) {
            return Err(Error::InvalidParameter("T > 0"));
        }
        if !(self.n_air.is_finite() && self.n_air >= 1.0) {
            return Err(Error::InvalidParameter("n_air >= 1"));
        }
        if !(self.n_o.is_finite() && self.n_o > self.n_air) {
            return Err(Error::InvalidParameter("n_o > n_air"));
        }
        if !(self.n_e.is_finite() && self.n_e > self.n_air) {
            return Err(Error::InvalidParameter("n_e > n_air"));
        }
        if self.n_o == self.n_e {
            return Err(Error::InvalidParameter("n_o != n_e"));
        }
        Ok(())
    }

    /// Sign of the birefringence, `sign(n_e - n_o)`.
    pub fn birefringence_sign(&self) -> f64 {
        if self.n_e >= self.n_o {
            1.0
        } else {
            -1.0
        }
    }
}

impl Default for CrystalSpec {
    fn default() -> Self {
        Self {
            thickness: Self::DEFAULT_THICKNESS,
            n_o: Self::DEFAULT_N_O,
            n_e: Self::DEFAULT_N_E,
            n_air: Self::DEFAULT_N_AIR,
            phase_model: PhaseModel::Difference,
        }
    }
}

/// Laser beam: vacuum wavenumber and pointer width.
///
/// `sigma` is the amplitude width of the Gaussian pointer; `2 sigma` is the
/// e^-2 intensity radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSpec {
    /// Vacuum wavenumber `k_o` in rad/m.
    pub wavenumber: f64,
    /// Pointer width in metres.
    pub sigma: f64,
}

impl BeamSpec {
    pub const DEFAULT_WAVELENGTH: f64 = 633e-9;
    pub const DEFAULT_SIGMA: f64 = 1.68e-4;

    pub fn new(wavenumber: f64, sigma: f64) -> Result<Self> {
        let beam = Self { wavenumber, sigma };
        beam.validate()?;
        Ok(beam)
    }

    pub fn from_wavelength(wavelength: f64, sigma: f64) -> Result<Self> {
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(Error::InvalidParameter("wavelength > 0"));
        }
        Self::new(2.0 * core::f64::consts::PI / wavelength, sigma)
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * core::f64::consts::PI / self.wavenumber
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wavenumber.is_finite() && self.wavenumber > 0.0) {
            return Err(Error::InvalidParameter("k_o > 0"));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidParameter("sigma > 0"));
        }
        Ok(())
    }
}

impl Default for BeamSpec {
    fn default() -> Self {
        Self {
            wavenumber: 2.0 * core::f64::consts::PI / Self::DEFAULT_WAVELENGTH,
            sigma: Self::DEFAULT_SIGMA,
        }
    }
}

/// Per-angle interaction strengths of the plate.
///
/// The ordinary path is translated by `gamma_common + gamma` and the
/// extraordinary path by `gamma_common - gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionParams {
    pub theta: f64,
    pub a_o: f64,
    pub a_e: f64,
    /// Polarization-independent translation `gamma_o`.
    pub gamma_common: f64,
    /// Half the relative translation, `(a_o - a_e) / 2`.
    pub gamma: f64,
    /// Relative phase retardation in radians.
    pub phi: f64,
}

impl InteractionParams {
    /// Parameters not tied to a plate geometry, for exploring the pointer
    /// model directly (`theta` is set to 0).
    pub fn from_strengths(gamma_common: f64, gamma: f64, phi: f64) -> Self {
        Self {
            theta: 0.0,
            a_o: gamma_common + gamma,
            a_e: gamma_common - gamma,
            gamma_common,
            gamma,
            phi,
        }
    }
}

fn check_angle(theta: f64) -> Result<()> {
    if theta.is_finite() && theta.abs() < FRAC_PI_2 {
        Ok(())
    } else {
        Err(Error::AngleOutOfDomain { theta })
    }
}

/// `sqrt(n^2 - (n_air sin theta)^2)`.
fn radical(n: f64, n_air: f64, theta: f64) -> Result<f64> {
    let s = n_air * sin(theta);
    let radicand = n * n - s * s;
    if radicand > 0.0 {
        Ok(sqrt(radicand))
    } else {
        Err(Error::NoRefraction { theta, radicand })
    }
}

fn displacement(thickness: f64, n: f64, n_air: f64, theta: f64) -> Result<f64> {
    let r = radical(n, n_air, theta)?;
    Ok(thickness * sin(theta) * (n_air * cos(theta) / r - 1.0))
}

/// d/dtheta of [`displacement`].
fn displacement_slope(thickness: f64, n: f64, n_air: f64, theta: f64) -> Result<f64> {
    let r = radical(n, n_air, theta)?;
    let (s, c) = (sin(theta), cos(theta));
    let refracted = n_air * (c * c - s * s) / r + n_air * n_air * n_air * s * s * c * c / (r * r * r);
    Ok(thickness * (refracted - c))
}

/// Transverse translations `(a_o, a_e)` of the ordinary and extraordinary rays.
pub fn ray_displacements(crystal: &CrystalSpec, theta: f64) -> Result<(f64, f64)> {
    check_angle(theta)?;
    let a_o = displacement(crystal.thickness, crystal.n_o, crystal.n_air, theta)?;
    let a_e = displacement(crystal.thickness, crystal.n_e, crystal.n_air, theta)?;
    Ok((a_o, a_e))
}

/// `r_e - r_o` without the cancellation of subtracting the two radicals.
fn radical_difference(crystal: &CrystalSpec, r_o: f64, r_e: f64) -> f64 {
    (crystal.n_e - crystal.n_o) * (crystal.n_e + crystal.n_o) / (r_e + r_o)
}

/// Relative phase retardation `phi(theta)` between the two rays.
pub fn phase_shift(crystal: &CrystalSpec, k_o: f64, theta: f64) -> Result<f64> {
    check_angle(theta)?;
    let r_o = radical(crystal.n_o, crystal.n_air, theta)?;
    let r_e = radical(crystal.n_e, crystal.n_air, theta)?;
    let diff = radical_difference(crystal, r_o, r_e);
    let scale = crystal.thickness * k_o;
    Ok(match crystal.phase_model {
        PhaseModel::Difference => scale * diff,
        PhaseModel::Ratio => scale * diff / r_o,
    })
}

/// Analytic `d phi / d theta`.
pub fn phase_slope(crystal: &CrystalSpec, k_o: f64, theta: f64) -> Result<f64> {
    check_angle(theta)?;
    let r_o = radical(crystal.n_o, crystal.n_air, theta)?;
    let r_e = radical(crystal.n_e, crystal.n_air, theta)?;
    // d r / d theta = -n_air^2 sin cos / r
    let q = crystal.n_air * crystal.n_air * sin(theta) * cos(theta);
    let (dr_o, dr_e) = (-q / r_o, -q / r_e);
    let scale = crystal.thickness * k_o;
    Ok(match crystal.phase_model {
        PhaseModel::Difference => scale * q * radical_difference(crystal, r_o, r_e) / (r_o * r_e),
        PhaseModel::Ratio => scale * (dr_e * r_o - r_e * dr_o) / (r_o * r_o),
    })
}

/// Displacements and phase at one incidence angle.
pub fn interaction_params(crystal: &CrystalSpec, k_o: f64, theta: f64) -> Result<InteractionParams> {
    let (a_o, a_e) = ray_displacements(crystal, theta)?;
    let phi = phase_shift(crystal, k_o, theta)?;
    let r_o = radical(crystal.n_o, crystal.n_air, theta)?;
    let r_e = radical(crystal.n_e, crystal.n_air, theta)?;
    // (a_o - a_e) / 2 with the radical difference formed directly.
    let gamma =
        0.5 * crystal.thickness * sin(theta) * crystal.n_air * cos(theta) * radical_difference(crystal, r_o, r_e)
            / (r_o * r_e);
    Ok(InteractionParams {
        theta,
        a_o,
        a_e,
        gamma_common: 0.5 * (a_o + a_e),
        gamma,
        phi,
    })
}

/// Analytic `d gamma_o / d theta`: the pointer's tilt response without
/// any weak-value amplification.
pub fn classical_tilt_sensitivity(crystal: &CrystalSpec, theta: f64) -> Result<f64> {
    check_angle(theta)?;
    let d_o = displacement_slope(crystal.thickness, crystal.n_o, crystal.n_air, theta)?;
    let d_e = displacement_slope(crystal.thickness, crystal.n_e, crystal.n_air, theta)?;
    Ok(0.5 * (d_o + d_e))
}

/// Common translation with `T cos(theta) n_air sin(theta) / 2` factored out
/// of all three terms, as the closed form is sometimes printed. It differs
/// from `(a_o + a_e) / 2` in the trailing term and is kept only for
/// comparison.
pub fn printed_common_displacement(crystal: &CrystalSpec, theta: f64) -> Result<f64> {
    check_angle(theta)?;
    let r_o = radical(crystal.n_o, crystal.n_air, theta)?;
    let r_e = radical(crystal.n_e, crystal.n_air, theta)?;
    let pre = 0.5 * crystal.thickness * cos(theta) * crystal.n_air * sin(theta);
    Ok(pre * (1.0 / r_o + 1.0 / r_e - 2.0))
}
