use crate::error::Result;
use crate::optics::{interaction_params, BeamSpec, CrystalSpec, InteractionParams};
use crate::pointer::{expectation_z_with_floor, postselection_probability, BoostSpec, SelectionSpec, P_FLOOR};

/// Everything needed to evaluate the pointer at an incidence angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setup {
    pub crystal: CrystalSpec,
    pub beam: BeamSpec,
    pub selection: SelectionSpec,
    pub boost: BoostSpec,
    /// Post-selection probability below which `<z>` is reported as degenerate.
    pub p_floor: f64,
}

impl Default for Setup {
    fn default() -> Self {
        Self {
            crystal: CrystalSpec::default(),
            beam: BeamSpec::default(),
            selection: SelectionSpec::default(),
            boost: BoostSpec::default(),
            p_floor: P_FLOOR,
        }
    }
}

impl Setup {
    pub fn params(&self, theta: f64) -> Result<InteractionParams> {
        interaction_params(&self.crystal, self.beam.wavenumber, theta)
    }

    pub fn expectation(&self, theta: f64) -> Result<f64> {
        expectation_z_with_floor(
            &self.params(theta)?,
            &self.selection,
            &self.beam,
            &self.boost,
            self.p_floor,
        )
    }

    pub fn probability(&self, theta: f64) -> Result<f64> {
        Ok(postselection_probability(
            &self.params(theta)?,
            &self.selection,
            &self.beam,
            &self.boost,
        ))
    }

    pub fn with_selection(mut self, selection: SelectionSpec) -> Self {
        self.selection = selection;
        self
    }

    pub fn with_boost(mut self, boost: BoostSpec) -> Self {
        self.boost = boost;
        self
    }
}
