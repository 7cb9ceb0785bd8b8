use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::llm::LlmSettings;
use crate::prune::{BeamWidths, PruningStrategy};

pub const DEFAULT_D_MAX: usize = 3;
pub const DEFAULT_ALIGN_THRESHOLD: f64 = 0.75;
pub const MAX_PREDICTIONS: usize = 3;

/// Run-wide knobs shared by every question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PogConfig {
    pub d_max: usize,
    pub widths: BeamWidths,
    pub strategy: PruningStrategy,
    /// Render one sampled relation per superedge instead of the full set.
    pub pog_e: bool,
    pub seed: u64,
    pub llm: LlmSettings,
    /// Minimum cosine for aligning a predicted entity to a subgraph entity.
    pub align_threshold: f64,
    pub max_predictions: usize,
    pub cluster: bool,
    pub reduce: bool,
}

impl Default for PogConfig {
    fn default() -> Self {
        Self {
            d_max: DEFAULT_D_MAX,
            widths: BeamWidths::default(),
            strategy: PruningStrategy::ThreeStep,
            pog_e: false,
            seed: 0,
            llm: LlmSettings::default(),
            align_threshold: DEFAULT_ALIGN_THRESHOLD,
            max_predictions: MAX_PREDICTIONS,
            cluster: true,
            reduce: true,
        }
    }
}

impl PogConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_max == 0 {
            return Err(Error::Config("d_max must be at least 1".into()));
        }
        self.widths.validate()?;
        if !(0.0..=1.0).contains(&self.llm.exploration_temperature)
            || !(0.0..=1.0).contains(&self.llm.reasoning_temperature)
        {
            return Err(Error::Config("temperatures must lie in [0, 1]".into()));
        }
        if self.llm.max_tokens == 0 {
            return Err(Error::Config("max_tokens must be positive".into()));
        }
        if self.max_predictions == 0 {
            return Err(Error::Config("max_predictions must be positive".into()));
        }
        Ok(())
    }
}
