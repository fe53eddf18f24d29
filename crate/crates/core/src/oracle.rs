//! Brute-force moments of a sampled pointer state.
//!
//! These share nothing with the closed forms in [`crate::pointer`] except the
//! amplitude itself, so agreement between the two is a real check of the
//! algebra.

use crate::error::{Error, Result};
use crate::optics::{BeamSpec, InteractionParams};
use crate::pointer::{final_wavefunction, spacing_limit, BoostSpec, PointerWavefunction, SelectionSpec, P_FLOOR};

/// Number of pointer widths kept on each side of the two displaced modes.
const TAIL_WIDTHS: f64 = 12.0;
const MIN_AUTO_SAMPLES: usize = 16384;

/// Sampling grid for [`final_wavefunction`]. `None` / `0` fields are filled
/// in by the automatic rule: centred on `gamma_o`, half-width
/// `|gamma| + 12 sigma`, and `max(16384, ceil(20 halfwidth k / pi))` samples
/// rounded up to a power of two.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GridRequest {
    pub center: Option<f64>,
    pub halfwidth: Option<f64>,
    pub sample_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ResolvedGrid {
    pub center: f64,
    pub halfwidth: f64,
    pub sample_count: usize,
}

impl GridRequest {
    pub fn auto() -> Self {
        Self::default()
    }

    pub fn with_samples(mut self, sample_count: usize) -> Self {
        self.sample_count = sample_count;
        self
    }

    pub fn with_halfwidth(mut self, halfwidth: f64) -> Self {
        self.halfwidth = Some(halfwidth);
        self
    }

    pub fn with_center(mut self, center: f64) -> Self {
        self.center = Some(center);
        self
    }

    pub(crate) fn resolve(&self, ip: &InteractionParams, beam: &BeamSpec, boost: &BoostSpec) -> Result<ResolvedGrid> {
        let center = self.center.unwrap_or(ip.gamma_common);
        let required = (center - ip.gamma_common).abs() + ip.gamma.abs() + TAIL_WIDTHS * beam.sigma;
        let halfwidth = self.halfwidth.unwrap_or(required);
        if !(halfwidth.is_finite() && center.is_finite()) {
            return Err(Error::InvalidParameter("finite grid"));
        }
        if halfwidth < required * (1.0 - 1e-12) {
            return Err(Error::GridTooNarrow { halfwidth, required });
        }
        let k = boost.wavenumber(beam);
        let sample_count = match self.sample_count {
            0 => {
                let oscillation = libm::ceil(20.0 * halfwidth * k / core::f64::consts::PI) as usize;
                oscillation.max(MIN_AUTO_SAMPLES).next_power_of_two()
            }
            1 => return Err(Error::InvalidParameter("sample_count >= 2")),
            n => n,
        };
        let spacing = 2.0 * halfwidth / (sample_count - 1) as f64;
        let limit = spacing_limit(beam.sigma, k);
        if spacing > limit {
            return Err(Error::GridTooCoarse { spacing, limit });
        }
        Ok(ResolvedGrid {
            center,
            halfwidth,
            sample_count,
        })
    }
}

/// Trapezoid integral of `z^order |Phi_f(z)|^2`, for `order` in 0..=2.
pub fn moment(wf: &PointerWavefunction, order: u32) -> Result<f64> {
    if order > 2 {
        return Err(Error::InvalidParameter("moment order in 0..=2"));
    }
    let n = wf.sample_count();
    if n < 2 {
        return Err(Error::InvalidParameter("sample_count >= 2"));
    }
    let spacing = wf.spacing();
    let limit = spacing_limit(wf.sigma, wf.boost_wavenumber);
    if spacing > limit {
        return Err(Error::GridTooCoarse { spacing, limit });
    }
    let term = |(z, density): (f64, f64)| match order {
        0 => density,
        1 => z * density,
        _ => z * z * density,
    };
    let mut sum = 0.0;
    let mut ends = 0.0;
    for (i, sample) in wf.density().enumerate() {
        let value = term(sample);
        if i == 0 || i == n - 1 {
            ends += value;
        }
        sum += value;
    }
    Ok(spacing * (sum - 0.5 * ends))
}

/// `<z>` from trapezoid moments of the sampled state on the automatic grid.
pub fn oracle_expectation_z(
    ip: &InteractionParams,
    sel: &SelectionSpec,
    beam: &BeamSpec,
    boost: &BoostSpec,
) -> Result<f64> {
    let wf = final_wavefunction(ip, sel, beam, boost, &GridRequest::auto())?;
    let norm = moment(&wf, 0)?;
    if !(norm >= P_FLOOR) {
        return Err(Error::DegeneratePostSelection {
            probability: norm,
            floor: P_FLOOR,
        });
    }
    Ok(moment(&wf, 1)? / norm)
}

/// Post-selection probability as the trapezoid norm of the sampled state.
pub fn oracle_probability(
    ip: &InteractionParams,
    sel: &SelectionSpec,
    beam: &BeamSpec,
    boost: &BoostSpec,
) -> Result<f64> {
    let wf = final_wavefunction(ip, sel, beam, boost, &GridRequest::auto())?;
    moment(&wf, 0)
}
