//! Coherency points (`cos phi = 1`) and anti-coherency points
//! (`cos phi = -1`) of the plate.
//!
//! The retardation is monotone in the incidence angle, so every point is a
//! crossing of `phi` through a level `offset + 2 pi m`. The scan walks the
//! angle with steps small enough that `phi` moves by well under half a cycle,
//! and bisects every bracket in which the cycle index changes.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use libm::floor;

use crate::error::{Error, Result};
use crate::numerics::bisect;
use crate::optics::{classical_tilt_sensitivity, interaction_params, phase_shift, phase_slope, CrystalSpec};

/// Largest scan angle used when no upper bound is given.
const THETA_CEILING: f64 = FRAC_PI_2 - 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    /// `cos phi = 1`: the rays exit in phase.
    Coherency,
    /// `cos phi = -1`: the rays exit half a wave apart.
    Anti,
}

impl PointKind {
    fn offset(self) -> f64 {
        match self {
            PointKind::Coherency => 0.0,
            PointKind::Anti => PI,
        }
    }
}

/// A located point with the optics evaluated there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherencyPoint {
    /// 1-based ordinal counted from normal incidence.
    pub index: usize,
    pub kind: PointKind,
    pub theta: f64,
    /// `phi / 2 pi`.
    pub phase_cycles: f64,
    pub gamma_common: f64,
    pub gamma: f64,
    /// `d gamma_o / d theta` (m/rad).
    pub classical_slope: f64,
    /// `d phi / d theta`.
    pub phase_slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Multiplies every scan step; values below 1 give a finer scan.
    pub step_scale: f64,
    /// Bisection stops once the bracket is this narrow (rad).
    pub tolerance: f64,
    pub min_step: f64,
    pub max_step: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            step_scale: 1.0,
            tolerance: 1e-13,
            min_step: 1e-5,
            max_step: 1e-2,
        }
    }
}

/// All points of `kind` with `theta` in `[theta_min, theta_max]`, ascending.
pub fn locate_points(
    crystal: &CrystalSpec,
    k_o: f64,
    theta_range: (f64, f64),
    kind: PointKind,
) -> Result<Vec<CoherencyPoint>> {
    locate_points_with(crystal, k_o, theta_range, kind, &ScanOptions::default())
}

pub fn locate_points_with(
    crystal: &CrystalSpec,
    k_o: f64,
    (theta_min, theta_max): (f64, f64),
    kind: PointKind,
    options: &ScanOptions,
) -> Result<Vec<CoherencyPoint>> {
    if !(theta_min >= 0.0 && theta_min < theta_max && theta_max < FRAC_PI_2) {
        return Err(Error::InvalidRange {
            min: theta_min,
            max: theta_max,
        });
    }
    if !(options.step_scale > 0.0 && options.tolerance > 0.0 && options.min_step > 0.0) {
        return Err(Error::InvalidParameter("positive scan options"));
    }
    let offset = kind.offset();
    let phase = |theta: f64| phase_shift(crystal, k_o, theta);
    let cycle = |phi: f64| floor((phi - offset) / TAU);

    // Ordinals count crossings from normal incidence.
    let phi_zero = phase(0.0)?;
    let increasing = phase(THETA_CEILING)? >= phi_zero;
    let first_level = if increasing {
        libm::ceil((phi_zero - offset) / TAU)
    } else {
        floor((phi_zero - offset) / TAU)
    };

    let mut points = Vec::new();
    let mut theta = theta_min;
    let mut phi = phase(theta)?;
    if (phi - offset) / TAU == cycle(phi) {
        points.push(theta);
    }
    while theta < theta_max {
        let slope = phase_slope(crystal, k_o, theta)?.abs();
        let mut step = if slope > 0.0 {
            FRAC_PI_4 / slope
        } else {
            options.max_step
        };
        step = step.clamp(options.min_step, options.max_step) * options.step_scale;
        let (next, next_phi) = loop {
            let next = (theta + step).min(theta_max);
            let next_phi = phase(next)?;
            if (next_phi - phi).abs() < FRAC_PI_2 || step <= options.min_step * options.step_scale {
                break (next, next_phi);
            }
            step *= 0.5;
        };
        let (c0, c1) = (cycle(phi), cycle(next_phi));
        if c0 != c1 {
            let target = offset + TAU * c0.max(c1);
            let root = bisect(
                |t| phase(t).map_or(f64::NAN, |p| p - target),
                theta,
                next,
                options.tolerance,
            );
            if points.last().is_none_or(|&last| root > last) {
                points.push(root);
            }
        }
        theta = next;
        phi = next_phi;
    }

    points
        .into_iter()
        .map(|theta| {
            let ip = interaction_params(crystal, k_o, theta)?;
            let level = floor((ip.phi - offset) / TAU + 0.5);
            let ordinal = if increasing {
                level - first_level
            } else {
                first_level - level
            };
            Ok(CoherencyPoint {
                index: ordinal as usize + 1,
                kind,
                theta,
                phase_cycles: ip.phi / TAU,
                gamma_common: ip.gamma_common,
                gamma: ip.gamma,
                classical_slope: classical_tilt_sensitivity(crystal, theta)?,
                phase_slope: phase_slope(crystal, k_o, theta)?,
            })
        })
        .collect()
}

/// The `n`-th point (1-based) of `kind` above normal incidence.
pub fn nth_point(crystal: &CrystalSpec, k_o: f64, n: usize, kind: PointKind) -> Result<CoherencyPoint> {
    if n == 0 {
        return Err(Error::InvalidParameter("point index >= 1"));
    }
    let points = locate_points(crystal, k_o, (0.0, THETA_CEILING), kind)?;
    points
        .iter()
        .find(|p| p.index == n)
        .copied()
        .ok_or(Error::PointNotFound {
            index: n,
            available: points.len(),
        })
}
