//! Tilt sensitivity of the pointer, sweeps over the incidence angle and
//! post-selector, density and probability maps, and the ε that maximises
//! the pointer shift at a coherency point.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_4;

use crate::coherency::CoherencyPoint;
use crate::error::{Error, Result};
use crate::numerics::{golden_section_max, richardson_derivative};
use crate::pointer::{
    expectation_z_with_floor, postselection_probability, probability_raw, shift_at, wva_prediction, AmplitudeKernel,
};
use crate::setup::Setup;

/// Default central-difference step for [`tilt_sensitivity`] (rad).
pub const DEFAULT_DTHETA: f64 = 1e-7;

/// `d<z>/d theta` of the full model: `gamma_o`, `gamma` and `phi` are all
/// re-evaluated at the displaced angles. Central difference with step
/// `dtheta`, Richardson-extrapolated against `dtheta / 2`.
pub fn tilt_sensitivity(setup: &Setup, theta: f64, dtheta: f64) -> Result<f64> {
    if !(dtheta.is_finite() && dtheta > 0.0) {
        return Err(Error::InvalidParameter("dtheta > 0"));
    }
    richardson_derivative(|t| setup.expectation(t), theta, dtheta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub theta: f64,
    pub gamma_common: f64,
    pub gamma: f64,
    pub phi: f64,
    /// `None` where post-selection is degenerate.
    pub z_exp: Option<f64>,
    pub probability: f64,
    pub slope: Option<f64>,
}

fn uniform(range: (f64, f64), n: usize) -> Result<Vec<f64>> {
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) || n == 0 || (n == 1 && lo != hi) {
        return Err(Error::InvalidRange { min: lo, max: hi });
    }
    if n == 1 {
        return Ok(alloc::vec![lo]);
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

/// `n_points` uniformly spaced angles over `range` (inclusive). Slopes are
/// computed with step `slope_step` when it is given.
pub fn sweep_theta(
    setup: &Setup,
    range: (f64, f64),
    n_points: usize,
    slope_step: Option<f64>,
) -> Result<Vec<SweepRecord>> {
    uniform(range, n_points)?
        .into_iter()
        .map(|theta| {
            let ip = setup.params(theta)?;
            let z_exp = match expectation_z_with_floor(&ip, &setup.selection, &setup.beam, &setup.boost, setup.p_floor)
            {
                Ok(z) => Some(z),
                Err(Error::DegeneratePostSelection { .. }) => None,
                Err(e) => return Err(e),
            };
            let slope = match slope_step.filter(|_| z_exp.is_some()) {
                Some(step) => match tilt_sensitivity(setup, theta, step) {
                    Ok(s) => Some(s),
                    Err(Error::DegeneratePostSelection { .. }) => None,
                    Err(e) => return Err(e),
                },
                None => None,
            };
            Ok(SweepRecord {
                theta,
                gamma_common: ip.gamma_common,
                gamma: ip.gamma,
                phi: ip.phi,
                z_exp,
                probability: postselection_probability(&ip, &setup.selection, &setup.beam, &setup.boost),
                slope,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonRecord {
    pub epsilon: f64,
    pub gamma_common: f64,
    pub z_exp: Option<f64>,
    /// Weak-value prediction; `None` at `epsilon = 0`.
    pub wva: Option<f64>,
    pub probability: f64,
}

/// Pointer position against post-selector deviation at a fixed angle.
pub fn sweep_epsilon(setup: &Setup, theta: f64, epsilons: &[f64]) -> Result<Vec<EpsilonRecord>> {
    let ip = setup.params(theta)?;
    epsilons
        .iter()
        .map(|&epsilon| {
            let sel = setup.selection.with_epsilon(epsilon)?;
            let z_exp = match expectation_z_with_floor(&ip, &sel, &setup.beam, &setup.boost, setup.p_floor) {
                Ok(z) => Some(z),
                Err(Error::DegeneratePostSelection { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(EpsilonRecord {
                epsilon,
                gamma_common: ip.gamma_common,
                z_exp,
                wva: wva_prediction(&ip, &sel).ok(),
                probability: postselection_probability(&ip, &sel, &setup.beam, &setup.boost),
            })
        })
        .collect()
}

/// Row-major matrix over two axes: `values[i * cols + j]` belongs to
/// `(rows_axis[i], cols_axis[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Map2d {
    pub rows_axis: Vec<f64>,
    pub cols_axis: Vec<f64>,
    pub values: Vec<f64>,
}

impl Map2d {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols_axis.len() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let n = self.cols_axis.len();
        &self.values[row * n..(row + 1) * n]
    }
}

/// `|Phi_f(z)|^2` with rows over `theta_grid` and columns over absolute
/// positions `z_grid`.
pub fn density_map(setup: &Setup, theta_grid: &[f64], z_grid: &[f64]) -> Result<Map2d> {
    let mut values = Vec::with_capacity(theta_grid.len() * z_grid.len());
    for &theta in theta_grid {
        let ip = setup.params(theta)?;
        let kernel = AmplitudeKernel::new(
            &ip,
            setup.selection.regime(),
            setup.selection.epsilon(),
            &setup.beam,
            &setup.boost,
        );
        values.extend(z_grid.iter().map(|&z| kernel.amplitude(z).norm_sqr()));
    }
    Ok(Map2d {
        rows_axis: theta_grid.to_vec(),
        cols_axis: z_grid.to_vec(),
        values,
    })
}

/// Post-selection probability with rows over `theta_grid` and columns over
/// `epsilon_grid`, in the setup's selection regime. Epsilon values are not
/// restricted to `(-pi/4, pi/4]`, so a single map can show both families of
/// dark bands.
pub fn probability_map(setup: &Setup, theta_grid: &[f64], epsilon_grid: &[f64]) -> Result<Map2d> {
    let regime = setup.selection.regime();
    let mut values = Vec::with_capacity(theta_grid.len() * epsilon_grid.len());
    for &theta in theta_grid {
        let ip = setup.params(theta)?;
        values.extend(
            epsilon_grid
                .iter()
                .map(|&eps| probability_raw(regime, eps, &ip, &setup.beam, &setup.boost)),
        );
    }
    Ok(Map2d {
        rows_axis: theta_grid.to_vec(),
        cols_axis: epsilon_grid.to_vec(),
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalEpsilon {
    pub epsilon: f64,
    /// `<z> - gamma_o` at `epsilon`.
    pub shift: f64,
    pub probability: f64,
}

/// Post-selector deviation maximising the pointer shift at a point.
///
/// Searches `epsilon` with the sign of `gamma` in `(0, pi/4)` by golden
/// section; the shift is unimodal there.
pub fn optimal_epsilon(point: &CoherencyPoint, setup: &Setup) -> Result<OptimalEpsilon> {
    let ip = setup.params(point.theta)?;
    let sign = if ip.gamma < 0.0 { -1.0 } else { 1.0 };
    let alpha_shift = setup.selection.alpha() - setup.selection.epsilon();
    let magnitude =
        |e: f64| shift_at(alpha_shift + sign * e, &ip, &setup.beam, &setup.boost, setup.p_floor).map_or(0.0, f64::abs);
    let (e, _) = golden_section_max(magnitude, 0.0, FRAC_PI_4, 1e-12);
    let sel = setup.selection.with_epsilon(sign * e)?;
    let shift = expectation_z_with_floor(&ip, &sel, &setup.beam, &setup.boost, setup.p_floor)
        .map_or(0.0, |z| z - ip.gamma_common);
    Ok(OptimalEpsilon {
        epsilon: sign * e,
        shift,
        probability: postselection_probability(&ip, &sel, &setup.beam, &setup.boost),
    })
}

/// `|measured / classical|`.
pub fn amplification_factor(measured_slope: f64, classical_slope: f64) -> Result<f64> {
    if classical_slope == 0.0 || !classical_slope.is_finite() {
        return Err(Error::ZeroClassicalSlope);
    }
    Ok((measured_slope / classical_slope).abs())
}
