//! Post-selected pointer state and its closed-form moments.
//!
//! The qubit is preselected into `(|H> + |V>)/sqrt(2)`, the plate acts as
//! translate-then-boost-then-phase, and the qubit is projected onto
//! `cos(beta)|H> + sin(beta)|V>`. Writing `u = z - gamma_o`, the
//! (unnormalised) final pointer amplitude is
//!
//! ```text
//! Phi_f(z) = [cos(beta) e^{+iku/2} G(u - gamma) + sin(beta) e^{-iku/2} e^{-i phi} G(u + gamma)] / sqrt(2)
//! ```
//!
//! with `G` the unit-norm Gaussian of amplitude width `sigma`. The global
//! phase `e^{i phi/2}` is dropped, and the boost is referenced to the common
//! beam centre `gamma_o` so the closed forms below are exact.
//!
//! Both selection conventions are handled through a single angle `alpha`
//! (`alpha = epsilon` for coherency, `epsilon + pi/2` for anti-coherency,
//! `beta = alpha - pi/4`):
//!
//! ```text
//! P       = [1 - cos(2 alpha) cos(phi) e^{-E}] / 2
//! <z> - gamma_o = [gamma sin(2 alpha) + k sigma^2 cos(2 alpha) sin(phi) e^{-E}] / (2 P)
//! E       = ((k sigma)^2 + (gamma / sigma)^2) / 2
//! ```

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use libm::{cos, exp, expm1, sin, sqrt};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::optics::{BeamSpec, InteractionParams};
use crate::oracle::GridRequest;

/// Post-selection probabilities below this are reported as
/// [`Error::DegeneratePostSelection`] instead of producing a 0/0 moment.
pub const P_FLOOR: f64 = 1e-12;

/// Which pair of nearly-dark polarizer settings `epsilon` is measured from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Regime {
    /// Post-selector nearly crossed with the preselector, `beta = epsilon - pi/4`.
    #[default]
    Coherency,
    /// Post-selector nearly aligned with the preselector, `beta = epsilon + pi/4`.
    AntiCoherency,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionSpec {
    epsilon: f64,
    regime: Regime,
}

impl SelectionSpec {
    /// `epsilon` must lie in `(-pi/4, pi/4]`.
    pub fn new(epsilon: f64, regime: Regime) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > -FRAC_PI_4 && epsilon <= FRAC_PI_4) {
            return Err(Error::InvalidParameter("epsilon in (-pi/4, pi/4]"));
        }
        Ok(Self { epsilon, regime })
    }

    pub fn coherency(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, Regime::Coherency)
    }

    pub fn anti_coherency(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, Regime::AntiCoherency)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// Same regime, different deviation.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(epsilon, self.regime)
    }

    /// Post-selector angle from the z-axis.
    pub fn beta(&self) -> f64 {
        alpha_of(self.regime, self.epsilon) - FRAC_PI_4
    }

    pub(crate) fn alpha(&self) -> f64 {
        alpha_of(self.regime, self.epsilon)
    }
}

impl Default for SelectionSpec {
    fn default() -> Self {
        Self {
            epsilon: 0.0,
            regime: Regime::Coherency,
        }
    }
}

pub(crate) fn alpha_of(regime: Regime, epsilon: f64) -> f64 {
    match regime {
        Regime::Coherency => epsilon,
        Regime::AntiCoherency => epsilon + FRAC_PI_2,
    }
}

/// Relative transverse momentum boost between the two rays, in units of the
/// pointer width (`k sigma`).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoostSpec {
    pub k_sigma: f64,
}

impl BoostSpec {
    pub fn new(k_sigma: f64) -> Result<Self> {
        if !(k_sigma.is_finite() && k_sigma >= 0.0) {
            return Err(Error::InvalidParameter("k_sigma >= 0"));
        }
        Ok(Self { k_sigma })
    }

    pub fn none() -> Self {
        Self { k_sigma: 0.0 }
    }

    /// Boost wavenumber `k = k_sigma / sigma` in rad/m.
    pub fn wavenumber(&self, beam: &BeamSpec) -> f64 {
        self.k_sigma / beam.sigma
    }
}

/// Sampled final pointer amplitude on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PointerWavefunction {
    pub grid_center: f64,
    pub grid_halfwidth: f64,
    /// Amplitudes in m^{-1/2}, first sample at `grid_center - grid_halfwidth`.
    pub amplitudes: Vec<Complex64>,
    /// Pointer width used to build the state.
    pub sigma: f64,
    /// Boost wavenumber `k` used to build the state.
    pub boost_wavenumber: f64,
}

impl PointerWavefunction {
    pub fn sample_count(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.grid_halfwidth / (self.amplitudes.len() - 1) as f64
    }

    pub fn z(&self, i: usize) -> f64 {
        self.grid_center - self.grid_halfwidth + i as f64 * self.spacing()
    }

    /// `|Phi_f(z_i)|^2`.
    pub fn density(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| (self.z(i), a.norm_sqr()))
    }
}

/// Coarsest spacing accepted for a state of width `sigma` and boost `k`.
pub(crate) fn spacing_limit(sigma: f64, boost_wavenumber: f64) -> f64 {
    let gaussian = 0.5 * sigma;
    if boost_wavenumber > 0.0 {
        gaussian.min(PI / (10.0 * boost_wavenumber))
    } else {
        gaussian
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeLabel {
    Wva,
    InverseWva,
    Intermediate,
    Strong,
}

/// Numeric meaning of "much less than" for [`classify_regime`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeThresholds {
    /// Required ratio between a small quantity and the one it must be much
    /// smaller than.
    pub separation: f64,
    /// Upper bound on the larger quantity of each pair.
    pub cap: f64,
    /// `gamma / sigma` above which the interaction is strong.
    pub strong: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self {
            separation: 10.0,
            cap: 0.1,
            strong: 0.3,
        }
    }
}

/// Phase reduced to `(-pi, pi]`.
pub(crate) fn wrap_phase(phi: f64) -> f64 {
    let r = phi - TAU * libm::round(phi / TAU);
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

/// Overlap exponent `E = ((k sigma)^2 + (gamma/sigma)^2) / 2`.
fn overlap_exponent(ip: &InteractionParams, beam: &BeamSpec, boost: &BoostSpec) -> f64 {
    let x = ip.gamma / beam.sigma;
    0.5 * (boost.k_sigma * boost.k_sigma + x * x)
}

/// `1 - cos(2 alpha) cos(phi) e^{-E}`, twice the post-selection probability,
/// evaluated without cancellation near the dark port.
fn dark_denominator(alpha: f64, phi: f64, e: f64) -> f64 {
    let phi = wrap_phase(phi);
    let (_, c2) = double_angle(alpha);
    if c2.abs() < 0.5 {
        return 1.0 - c2 * cos(phi) * exp(-e);
    }
    let s_plus = sin(alpha + 0.5 * phi);
    let s_minus = sin(alpha - 0.5 * phi);
    let in_phase = s_plus * s_plus + s_minus * s_minus;
    (in_phase - c2 * cos(phi) * expm1(-e)).max(0.0)
}

/// `(sin 2 alpha, cos 2 alpha)` with rounding residue at the zeros removed,
/// so that `epsilon = pi/4` gives `P = 1/2` exactly.
fn double_angle(alpha: f64) -> (f64, f64) {
    let snap = |v: f64| if v.abs() < 4.0 * f64::EPSILON { 0.0 } else { v };
    (snap(sin(2.0 * alpha)), snap(cos(2.0 * alpha)))
}

fn probability_at(alpha: f64, ip: &InteractionParams, beam: &BeamSpec, boost: &BoostSpec) -> f64 {
    (0.5 * dark_denominator(alpha, ip.phi, overlap_exponent(ip, beam, boost))).min(1.0)
}

pub(crate) fn shift_at(
    alpha: f64,
    ip: &InteractionParams,
    beam: &BeamSpec,
    boost: &BoostSpec,
    floor: f64,
) -> Result<f64> {
    let e = overlap_exponent(ip, beam, boost);
    let denominator = dark_denominator(alpha, ip.phi, e);
    let probability = 0.5 * denominator;
    if !(probability >= floor) {
        return Err(Error::DegeneratePostSelection { probability, floor });
    }
    let (s2, c2) = double_angle(alpha);
    let boost_term = boost.k_sigma * beam.sigma * c2 * sin(ip.phi) * exp(-e);
    Ok((ip.gamma * s2 + boost_term) / denominator)
}

/// Probability that a photon survives post-selection.
pub fn postselection_probability(
    ip: &InteractionParams,
    sel: &SelectionSpec,
    beam: &BeamSpec,
    boost: &BoostSpec,
) -> f64 {
    probability_at(sel.alpha(), ip, beam, boost)
}

/// Probability for a raw selection angle, not restricted to `(-pi/4, pi/4]`.
pub(crate) fn probability_raw(
    regime: Regime,
    epsilon: f64,
    ip: &InteractionParams,
    beam: &BeamSpec,
    boost: &BoostSpec,
) -> f64 {
    probability_at(alpha_of(regime, epsilon), ip, beam, boost)
}

/// Exact position expectation value of the post-selected pointer.
pub fn expectation_z(ip: &InteractionParams, sel: &SelectionSpec, beam: &BeamSpec, boost: &BoostSpec) -> Result<f64> {
    expectation_z_with_floor(ip, sel, beam, boost, P_FLOOR)
}

pub fn expectation_z_with_floor(
    ip: &InteractionParams,
    sel: &SelectionSpec,
    beam: &BeamSpec,
    boost: &BoostSpec,
    floor: f64,
) -> Result<f64> {
    Ok(ip.gamma_common + shift_at(sel.alpha(), ip, beam, boost, floor)?)
}

/// `cot(epsilon)` for coherency selection, `-cot(epsilon)` for anti-coherency.
pub fn weak_value(sel: &SelectionSpec) -> Result<f64> {
    let eps = sel.epsilon();
    if eps == 0.0 {
        return Err(Error::SingularSelection);
    }
    let cot = cos(eps) / sin(eps);
    Ok(match sel.regime() {
        Regime::Coherency => cot,
        Regime::AntiCoherency => -cot,
    })
}

/// Weak-value prediction `gamma_o + A_w gamma`.
pub fn wva_prediction(ip: &InteractionParams, sel: &SelectionSpec) -> Result<f64> {
    Ok(ip.gamma_common + weak_value(sel)? * ip.gamma)
}

/// Both forms of the inverse weak-value shift `<z> - gamma_o` at `epsilon = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseWvaPrediction {
    /// `k sigma^2 sin(phi) / (e^E - cos(phi))`.
    pub exact: f64,
    /// `2 phi / (k [1 + (gamma / (k sigma^2))^2])`, with `phi` reduced to
    /// `(-pi, pi]` (the phase distance to the nearest coherency point).
    pub small_phase: f64,
}

pub fn inverse_wva_prediction(
    ip: &InteractionParams,
    beam: &BeamSpec,
    boost: &BoostSpec,
) -> Result<InverseWvaPrediction> {
    let phi = wrap_phase(ip.phi);
    let e = overlap_exponent(ip, beam, boost);
    let half_sin = sin(0.5 * phi);
    // e^E - cos(phi)
    let denominator = expm1(e) + 2.0 * half_sin * half_sin;
    if (boost.k_sigma == 0.0 && phi == 0.0) || !(denominator > 0.0) {
        return Err(Error::DegeneratePostSelection {
            probability: 0.0,
            floor: P_FLOOR,
        });
    }
    let sigma = beam.sigma;
    let k = boost.wavenumber(beam);
    let exact = k * sigma * sigma * sin(phi) / denominator;
    // k [1 + (gamma/(k sigma^2))^2] rewritten to stay finite as k -> 0.
    let s4 = sigma * sigma * sigma * sigma;
    let small_den = k * k * s4 + ip.gamma * ip.gamma;
    let small_phase = if small_den > 0.0 {
        2.0 * phi * k * s4 / small_den
    } else {
        return Err(Error::DegeneratePostSelection {
            probability: 0.0,
            floor: P_FLOOR,
        });
    };
    Ok(InverseWvaPrediction { exact, small_phase })
}

/// Label the operating point by which asymptotic description applies.
///
/// `Strong` when `|gamma|/sigma > strong`; `Wva` when
/// `|gamma|/sigma <= |eps|/sep`, `|eps| <= cap` and `k sigma <= |eps|/sep`;
/// `InverseWva` when `|eps| <= k sigma/sep` and `k sigma <= cap`; otherwise
/// `Intermediate`.
pub fn classify_regime(
    ip: &InteractionParams,
    sel: &SelectionSpec,
    beam: &BeamSpec,
    boost: &BoostSpec,
    thresholds: &RegimeThresholds,
) -> RegimeLabel {
    let x = (ip.gamma / beam.sigma).abs();
    let eps = sel.epsilon().abs();
    let ks = boost.k_sigma.abs();
    let sep = thresholds.separation;
    if x > thresholds.strong {
        RegimeLabel::Strong
    } else if x <= eps / sep && eps <= thresholds.cap && ks <= eps / sep {
        RegimeLabel::Wva
    } else if eps <= ks / sep && ks <= thresholds.cap {
        RegimeLabel::InverseWva
    } else {
        RegimeLabel::Intermediate
    }
}

/// Precomputed coefficients for evaluating the final amplitude pointwise.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AmplitudeKernel {
    center: f64,
    gamma: f64,
    half_k: f64,
    inv_four_var: f64,
    norm: f64,
    h_coeff: f64,
    v_coeff: Complex64,
}

impl AmplitudeKernel {
    pub(crate) fn new(
        ip: &InteractionParams,
        regime: Regime,
        epsilon: f64,
        beam: &BeamSpec,
        boost: &BoostSpec,
    ) -> Self {
        let beta = alpha_of(regime, epsilon) - FRAC_PI_4;
        let sigma = beam.sigma;
        let phi = wrap_phase(ip.phi);
        let inv_sqrt2 = core::f64::consts::FRAC_1_SQRT_2;
        Self {
            center: ip.gamma_common,
            gamma: ip.gamma,
            half_k: 0.5 * boost.wavenumber(beam),
            inv_four_var: 1.0 / (4.0 * sigma * sigma),
            norm: 1.0 / sqrt(sqrt(TAU * sigma * sigma)),
            h_coeff: inv_sqrt2 * cos(beta),
            v_coeff: Complex64::new(cos(phi), -sin(phi)) * (inv_sqrt2 * sin(beta)),
        }
    }

    fn gaussian(&self, v: f64) -> f64 {
        self.norm * exp(-v * v * self.inv_four_var)
    }

    pub(crate) fn amplitude(&self, z: f64) -> Complex64 {
        let u = z - self.center;
        let (s, c) = (sin(self.half_k * u), cos(self.half_k * u));
        let h = Complex64::new(c, s) * (self.h_coeff * self.gaussian(u - self.gamma));
        let v = Complex64::new(c, -s) * self.v_coeff * self.gaussian(u + self.gamma);
        h + v
    }
}

/// Sample the final pointer amplitude on a uniform grid.
pub fn final_wavefunction(
    ip: &InteractionParams,
    sel: &SelectionSpec,
    beam: &BeamSpec,
    boost: &BoostSpec,
    grid: &GridRequest,
) -> Result<PointerWavefunction> {
    let resolved = grid.resolve(ip, beam, boost)?;
    let kernel = AmplitudeKernel::new(ip, sel.regime(), sel.epsilon(), beam, boost);
    let start = resolved.center - resolved.halfwidth;
    let step = 2.0 * resolved.halfwidth / (resolved.sample_count - 1) as f64;
    let amplitudes = (0..resolved.sample_count)
        .map(|i| kernel.amplitude(start + i as f64 * step))
        .collect();
    Ok(PointerWavefunction {
        grid_center: resolved.center,
        grid_halfwidth: resolved.halfwidth,
        amplitudes,
        sigma: beam.sigma,
        boost_wavenumber: boost.wavenumber(beam),
    })
}
