//! Synthetic pointer measurements around a coherency point and
//! least-squares recovery of the boost strength `k sigma`.
//!
//! Samples are relative to a reference point: `theta_offset` from the
//! coherency angle and `z_mean` from `gamma_o` at that angle.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::coherency::CoherencyPoint;
use crate::error::{Error, Result};
use crate::numerics::solve_dense;
use crate::optics::{interaction_params, BeamSpec};
use crate::pointer::{alpha_of, inverse_wva_prediction, shift_at, BoostSpec};
use crate::setup::Setup;

pub const DEFAULT_FRAMES: u32 = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSample {
    /// rad, relative to the coherency angle.
    pub theta_offset: f64,
    /// m, relative to `gamma_o` at the coherency angle.
    pub z_mean: f64,
    pub z_stddev: f64,
    pub frame_count: u32,
}

impl MeasurementSample {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_offset.is_finite() && self.z_mean.is_finite()) {
            return Err(Error::InvalidParameter("finite sample"));
        }
        if !(self.z_stddev >= 0.0 && self.z_stddev.is_finite()) {
            return Err(Error::InvalidParameter("z_stddev >= 0"));
        }
        if self.frame_count == 0 {
            return Err(Error::InvalidParameter("frame_count >= 1"));
        }
        Ok(())
    }
}

/// Draw samples of the exact model at `point.theta + offset`, each with
/// seeded Gaussian noise of standard deviation `noise_z` on `z_mean`.
pub fn synthesize_measurements(
    truth: &Setup,
    point: &CoherencyPoint,
    theta_offsets: &[f64],
    noise_z: f64,
    seed: u64,
) -> Result<Vec<MeasurementSample>> {
    if !(noise_z >= 0.0 && noise_z.is_finite()) {
        return Err(Error::InvalidParameter("noise_z >= 0"));
    }
    let reference = truth.params(point.theta)?.gamma_common;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_z).map_err(|_| Error::InvalidParameter("noise_z >= 0"))?;
    theta_offsets
        .iter()
        .map(|&offset| {
            let z = truth.expectation(point.theta + offset)? - reference;
            let z_mean = if noise_z > 0.0 { z + noise.sample(&mut rng) } else { z };
            Ok(MeasurementSample {
                theta_offset: offset,
                z_mean,
                z_stddev: noise_z,
                frame_count: DEFAULT_FRAMES,
            })
        })
        .collect()
}

/// Model curve the fit is run against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitModel {
    /// Full closed-form expectation value.
    #[default]
    Exact,
    /// Small-phase inverse weak-value form; ignores `epsilon`.
    InverseWva,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitParams {
    pub k_sigma: f64,
    pub epsilon: f64,
    /// Added to every sample's `theta_offset`.
    pub theta_offset: f64,
    /// Added to the model position.
    pub z_offset: f64,
}

impl FitParams {
    fn get(&self, i: usize) -> f64 {
        [self.k_sigma, self.epsilon, self.theta_offset, self.z_offset][i]
    }

    fn set(&mut self, i: usize, v: f64) {
        match i {
            0 => self.k_sigma = v,
            1 => self.epsilon = v,
            2 => self.theta_offset = v,
            _ => self.z_offset = v,
        }
    }
}

/// Which parameters the fit may move. Defaults to `k_sigma` alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamMask {
    pub k_sigma: bool,
    pub epsilon: bool,
    pub theta_offset: bool,
    pub z_offset: bool,
}

impl Default for ParamMask {
    fn default() -> Self {
        Self {
            k_sigma: true,
            epsilon: false,
            theta_offset: false,
            z_offset: false,
        }
    }
}

impl ParamMask {
    pub fn all() -> Self {
        Self {
            k_sigma: true,
            epsilon: true,
            theta_offset: true,
            z_offset: true,
        }
    }

    fn indices(&self) -> Vec<usize> {
        [self.k_sigma, self.epsilon, self.theta_offset, self.z_offset]
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn count(&self) -> usize {
        self.indices().len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub model: FitModel,
    pub free: ParamMask,
    /// Starting point. `k_sigma` is replaced by the best value of a
    /// logarithmic scan when it is free; the other fields default to the
    /// known selection and zero offsets.
    pub initial: Option<FitParams>,
    pub max_iterations: usize,
    pub step_tolerance: f64,
    /// Bound on the scaled gradient `|J^T r| / (|J| |r|)` for a converged
    /// fit. `|r|` is floored at 1e-9 of the weighted data norm.
    pub gradient_tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            model: FitModel::Exact,
            free: ParamMask::default(),
            initial: None,
            max_iterations: 100,
            step_tolerance: 1e-10,
            gradient_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub params: FitParams,
    pub k_sigma_hat: f64,
    /// Unweighted RMS of `z_mean - model` (m).
    pub residual_rms: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Beam divergence `k / k_o` (rad) implied by a boost strength.
pub fn beam_divergence(k_sigma: f64, beam: &BeamSpec) -> f64 {
    k_sigma / (beam.sigma * beam.wavenumber)
}

struct Problem<'a> {
    samples: &'a [MeasurementSample],
    weights: Vec<f64>,
    known: &'a Setup,
    theta_ref: f64,
    z_ref: f64,
    model: FitModel,
}

impl Problem<'_> {
    fn model_at(&self, p: &FitParams, offset: f64) -> Result<f64> {
        let theta = self.theta_ref + offset + p.theta_offset;
        let ip = interaction_params(&self.known.crystal, self.known.beam.wavenumber, theta)?;
        // Negative k sigma is allowed here so the Jacobian can straddle zero.
        let boost = BoostSpec { k_sigma: p.k_sigma };
        let shift = match self.model {
            FitModel::Exact => {
                let alpha = alpha_of(self.known.selection.regime(), p.epsilon);
                shift_at(alpha, &ip, &self.known.beam, &boost, 0.0)?
            }
            FitModel::InverseWva => inverse_wva_prediction(&ip, &self.known.beam, &boost)?.small_phase,
        };
        Ok(ip.gamma_common + shift - self.z_ref + p.z_offset)
    }

    fn residuals(&self, p: &FitParams) -> Result<Vec<f64>> {
        self.samples
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| Ok(w * (self.model_at(p, s.theta_offset)? - s.z_mean)))
            .collect()
    }

    fn cost(&self, p: &FitParams) -> f64 {
        self.residuals(p)
            .map_or(f64::INFINITY, |r| r.iter().map(|v| v * v).sum())
    }

    fn rms(&self, p: &FitParams) -> f64 {
        let sum: f64 = self
            .samples
            .iter()
            .map(|s| {
                self.model_at(p, s.theta_offset)
                    .map_or(f64::INFINITY, |m| (m - s.z_mean) * (m - s.z_mean))
            })
            .sum();
        libm::sqrt(sum / self.samples.len() as f64)
    }
}

fn typical_scale(i: usize, beam: &BeamSpec) -> f64 {
    match i {
        0 => 1e-2,
        1 => 1e-3,
        2 => 1e-4,
        _ => 1e-2 * beam.sigma,
    }
}

/// Recover `k sigma` (and optionally `epsilon` and the two reference
/// offsets) from samples around `point` by Levenberg-Marquardt on the
/// weighted residuals. Weights are `1 / z_stddev^2` when every sample has a
/// positive spread, uniform otherwise. `k sigma` is kept non-negative.
pub fn fit_boost(
    samples: &[MeasurementSample],
    point: &CoherencyPoint,
    known: &Setup,
    options: &FitOptions,
) -> Result<FitResult> {
    for s in samples {
        s.validate()?;
    }
    let free = options.free.indices();
    if samples.len() < 3 || free.len() > samples.len() {
        return Err(Error::RankDeficient {
            free: free.len(),
            supported: if samples.len() < 3 { 0 } else { samples.len() },
        });
    }
    if free.is_empty() {
        return Err(Error::InvalidParameter("at least one free parameter"));
    }
    let weighted = samples.iter().all(|s| s.z_stddev > 0.0);
    let problem = Problem {
        samples,
        weights: samples
            .iter()
            .map(|s| if weighted { 1.0 / s.z_stddev } else { 1.0 })
            .collect(),
        known,
        theta_ref: point.theta,
        z_ref: known.params(point.theta)?.gamma_common,
        model: options.model,
    };

    let mut p = options.initial.unwrap_or(FitParams {
        k_sigma: known.boost.k_sigma,
        epsilon: known.selection.epsilon(),
        theta_offset: 0.0,
        z_offset: 0.0,
    });
    if options.free.k_sigma {
        let mut best = (f64::INFINITY, p.k_sigma);
        for i in 0..=60 {
            let mut trial = p;
            trial.k_sigma = 1e-3 * libm::pow(500.0, i as f64 / 60.0);
            let c = problem.cost(&trial);
            if c < best.0 {
                best = (c, trial.k_sigma);
            }
        }
        p.k_sigma = best.1;
    }

    let m = samples.len();
    let n = free.len();
    let mut cost = problem.cost(&p);
    if !cost.is_finite() {
        return Err(Error::DegeneratePostSelection {
            probability: 0.0,
            floor: 0.0,
        });
    }
    let data_norm = libm::sqrt(
        samples
            .iter()
            .zip(&problem.weights)
            .map(|(s, w)| (w * s.z_mean) * (w * s.z_mean))
            .sum::<f64>(),
    );
    let rounding_floor = (1e-9 * data_norm).max(f64::MIN_POSITIVE);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    let mut gradient_norm = f64::NAN;

    while iterations < options.max_iterations {
        iterations += 1;
        let r = problem.residuals(&p)?;
        let mut jac = alloc::vec![0.0; m * n];
        for (col, &i) in free.iter().enumerate() {
            let h = 1e-6 * p.get(i).abs().max(typical_scale(i, &known.beam));
            let (mut plus, mut minus) = (p, p);
            plus.set(i, p.get(i) + h);
            minus.set(i, p.get(i) - h);
            let rp = problem.residuals(&plus)?;
            let rm = problem.residuals(&minus)?;
            for row in 0..m {
                jac[row * n + col] = (rp[row] - rm[row]) / (2.0 * h);
            }
        }
        let mut jtj = alloc::vec![0.0; n * n];
        let mut jtr = alloc::vec![0.0; n];
        for row in 0..m {
            for a in 0..n {
                jtr[a] += jac[row * n + a] * r[row];
                for b in 0..n {
                    jtj[a * n + b] += jac[row * n + a] * jac[row * n + b];
                }
            }
        }
        let j_norm = libm::sqrt(jac.iter().map(|v| v * v).sum::<f64>());
        // Residuals below rounding of the data carry no direction.
        let r_norm = libm::sqrt(cost).max(rounding_floor);
        let g_norm = libm::sqrt(jtr.iter().map(|v| v * v).sum::<f64>());
        gradient_norm = if j_norm == 0.0 { 0.0 } else { g_norm / (j_norm * r_norm) };
        if solve_dense(jtj.clone(), jtr.clone(), 1e-13).is_none() {
            return Err(Error::RankDeficient {
                free: n,
                supported: (0..n).filter(|&a| jtj[a * n + a] > 0.0).count().min(n - 1),
            });
        }
        if cost == 0.0 {
            converged = true;
            break;
        }

        let mut step_done = false;
        while !step_done {
            let mut a = jtj.clone();
            for d in 0..n {
                a[d * n + d] += lambda * jtj[d * n + d];
            }
            let neg: Vec<f64> = jtr.iter().map(|v| -v).collect();
            let delta = match solve_dense(a, neg, 1e-15) {
                Some(d) => d,
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let mut trial = p;
            for (col, &i) in free.iter().enumerate() {
                trial.set(i, p.get(i) + delta[col]);
            }
            trial.k_sigma = trial.k_sigma.max(0.0);
            let relative_step = free
                .iter()
                .map(|&i| (trial.get(i) - p.get(i)).abs() / p.get(i).abs().max(typical_scale(i, &known.beam)))
                .fold(0.0, f64::max);
            let trial_cost = problem.cost(&trial);
            if trial_cost <= cost {
                p = trial;
                cost = trial_cost;
                lambda = (lambda * 0.1).max(1e-12);
                step_done = true;
            } else {
                lambda *= 10.0;
            }
            if relative_step < options.step_tolerance {
                converged = gradient_norm <= options.gradient_tolerance;
                break;
            }
            if lambda > 1e16 {
                converged = gradient_norm <= options.gradient_tolerance;
                break;
            }
        }
        if converged || !step_done {
            break;
        }
    }

    Ok(FitResult {
        params: p,
        k_sigma_hat: p.k_sigma,
        residual_rms: problem.rms(&p),
        gradient_norm,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherency::{nth_point, PointKind};
    use crate::pointer::SelectionSpec;

    fn truth(ks: f64) -> Setup {
        Setup::default().with_boost(BoostSpec::new(ks).unwrap())
    }

    fn point(n: usize) -> CoherencyPoint {
        let s = Setup::default();
        nth_point(&s.crystal, s.beam.wavenumber, n, PointKind::Coherency).unwrap()
    }

    fn offsets(n: usize, half: f64) -> Vec<f64> {
        (0..n).map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn noiseless_samples_lie_on_curve() {
        let t = truth(0.05);
        let p = point(7);
        let s = synthesize_measurements(&t, &p, &offsets(9, 5e-3), 0.0, 1).unwrap();
        let reference = t.params(p.theta).unwrap().gamma_common;
        for m in &s {
            assert_eq!(m.z_mean, t.expectation(p.theta + m.theta_offset).unwrap() - reference);
            assert_eq!(m.frame_count, 500);
            assert_eq!(m.z_stddev, 0.0);
        }
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let t = truth(0.05);
        let p = point(7);
        let a = synthesize_measurements(&t, &p, &offsets(25, 5e-3), 2e-6, 42).unwrap();
        let b = synthesize_measurements(&t, &p, &offsets(25, 5e-3), 2e-6, 42).unwrap();
        let c = synthesize_measurements(&t, &p, &offsets(25, 5e-3), 2e-6, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(synthesize_measurements(&t, &p, &[0.0], -1.0, 0).is_err());
    }

    #[test]
    fn recovers_k_sigma_exactly() {
        let t = truth(0.05);
        let p = point(7);
        let s = synthesize_measurements(&t, &p, &offsets(25, 5e-3), 0.0, 0).unwrap();
        let fit = fit_boost(&s, &p, &Setup::default(), &FitOptions::default()).unwrap();
        assert!(fit.converged);
        assert!((fit.k_sigma_hat - 0.05).abs() <= 0.05 * 1e-6);
        assert!(fit.residual_rms < 1e-12);
    }

    #[test]
    fn recovers_every_free_parameter() {
        let t = truth(0.08).with_selection(SelectionSpec::coherency(0.01).unwrap());
        let p = point(4);
        let s: Vec<_> = synthesize_measurements(&t, &p, &offsets(31, 6e-3), 0.0, 0)
            .unwrap()
            .into_iter()
            .map(|mut m| {
                m.theta_offset -= 2e-4;
                m.z_mean += 3e-6;
                m
            })
            .collect();
        let known = Setup::default();
        let options = FitOptions {
            free: ParamMask::all(),
            initial: Some(FitParams {
                k_sigma: 0.05,
                epsilon: 0.005,
                theta_offset: 0.0,
                z_offset: 0.0,
            }),
            ..Default::default()
        };
        let fit = fit_boost(&s, &p, &known, &options).unwrap();
        assert!(fit.converged, "{fit:?}");
        let q = fit.params;
        assert!((q.k_sigma / 0.08 - 1.0).abs() < 1e-6, "{q:?}");
        assert!((q.epsilon / 0.01 - 1.0).abs() < 1e-6, "{q:?}");
        assert!((q.theta_offset / 2e-4 - 1.0).abs() < 1e-6, "{q:?}");
        assert!((q.z_offset / 3e-6 - 1.0).abs() < 1e-6, "{q:?}");
    }

    #[test]
    fn noisy_recovery_and_divergence() {
        let t = truth(0.05);
        let p = point(7);
        let s = synthesize_measurements(&t, &p, &offsets(25, 5e-3), 2e-6, 7).unwrap();
        let fit = fit_boost(&s, &p, &Setup::default(), &FitOptions::default()).unwrap();
        assert!(fit.converged);
        assert!(fit.k_sigma_hat > 0.045 && fit.k_sigma_hat < 0.055);
        assert!(fit.residual_rms > 5e-7 && fit.residual_rms < 5e-6);
        let d = beam_divergence(0.05, &Setup::default().beam);
        assert!((d / 30e-6 - 1.0).abs() < 0.02);
    }

    #[test]
    fn inverse_wva_model_fits_close_to_the_point() {
        let t = truth(0.05);
        let p = point(7);
        let s = synthesize_measurements(&t, &p, &offsets(15, 1e-4), 0.0, 0).unwrap();
        let options = FitOptions {
            model: FitModel::InverseWva,
            ..Default::default()
        };
        let fit = fit_boost(&s, &p, &Setup::default(), &options).unwrap();
        // With gamma/sigma close to k sigma the shift barely depends on k sigma,
        // so the model error of the small-phase form is amplified.
        assert!(fit.converged);
        assert!((fit.k_sigma_hat / 0.05 - 1.0).abs() < 0.1);
    }

    #[test]
    fn too_few_samples_or_unsupported_mask() {
        let t = truth(0.05);
        let p = point(7);
        let s = synthesize_measurements(&t, &p, &[0.0, 1e-3], 0.0, 0).unwrap();
        assert!(matches!(
            fit_boost(&s, &p, &t, &FitOptions::default()),
            Err(Error::RankDeficient { .. })
        ));
        let s = synthesize_measurements(&t, &p, &offsets(3, 1e-3), 0.0, 0).unwrap();
        let options = FitOptions {
            free: ParamMask::all(),
            ..Default::default()
        };
        assert!(matches!(
            fit_boost(&s, &p, &t, &options),
            Err(Error::RankDeficient { .. })
        ));
        // The small-phase form has no epsilon dependence.
        let s = synthesize_measurements(&t, &p, &offsets(9, 1e-4), 0.0, 0).unwrap();
        let options = FitOptions {
            model: FitModel::InverseWva,
            free: ParamMask {
                epsilon: true,
                ..Default::default()
            },
            ..Default::default()
        };
        assert!(matches!(
            fit_boost(&s, &p, &t, &options),
            Err(Error::RankDeficient { .. })
        ));
    }
}
