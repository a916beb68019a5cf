//! Simulation config and channel description files.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::SimError;
use crate::channel::{blackwell_optimal_structure, GenericBc, GlitchMap};
use crate::polar::{CodeRules, PolarTransform};
use crate::prob::{ConditionalPmf, JointPmf};
use crate::regions::InputStructure;
use crate::scheme::{Corner, Interleaver};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Tsa,
    TimeSharing,
    Corner,
    Region,
    Profile,
    Oracle,
}

impl ExperimentKind {
    /// Whether the experiment produces frame error rate rows.
    pub fn is_sweep(self) -> bool {
        matches!(self, Self::Tsa | Self::TimeSharing | Self::Corner)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum Experiments {
    One(ExperimentKind),
    Many(Vec<ExperimentKind>),
}

impl Experiments {
    pub fn kinds(&self) -> Vec<ExperimentKind> {
        match self {
            Self::One(k) => vec![*k],
            Self::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterleaverKind {
    #[default]
    Identity,
    Random,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageOrder {
    #[default]
    ButterflyFirst,
    AdjacentFirst,
}

/// Flat simulation config. Every key is optional; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub experiment: Experiments,
    /// Block length, a power of two.
    pub n: usize,
    /// Offset fraction of TSA and the corner-2 share of time sharing.
    pub alpha: f64,
    pub list_size: usize,
    /// Back-off grid from the sum capacity, bits per channel use.
    pub backoff: Vec<f64>,
    /// Frames per grid point.
    pub frames: u64,
    pub seed: u64,
    /// Cross-over added to noiseless decoder laws.
    pub smoothing: f64,
    pub interleaver: InterleaverKind,
    pub stage_order: StageOrder,
    /// Map the Blackwell pair (1, 1) to input 1 instead of 2.
    pub glitch_to_one: bool,
    /// Channel description file; the Blackwell channel when absent.
    pub channel: Option<PathBuf>,
    /// Output file; standard output when absent.
    pub output: Option<PathBuf>,
    pub profile_samples: u64,
    pub rx_cutoff: f64,
    pub freeze_above: Option<f64>,
    /// Blocks per encoded stream.
    pub blocks_per_stream: usize,
    /// Stop a grid point after 200 frame errors.
    pub early_stop: bool,
    /// Corner used by the `corner` experiment, 1 or 2.
    pub corner: u8,
    /// User whose profile the `profile` experiment writes, 1 or 2.
    pub profile_user: u8,
    /// Where the `profile` experiment writes the code built at the first back-off.
    pub code_output: Option<PathBuf>,
    /// Boundary samples of the `region` experiment.
    pub region_points: usize,
    pub oracle_n: Vec<usize>,
    pub oracle_trials: usize,
    pub oracle_eps: f64,
    /// Message rates of the oracle as a fraction of the TSA rates.
    pub oracle_rate_fraction: f64,
    /// Bin rate of both oracle users; `I(U;V) + 0.25` when absent.
    pub oracle_bin_rate: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            experiment: Experiments::One(ExperimentKind::Tsa),
            n: 1024,
            alpha: 0.5,
            list_size: 8,
            backoff: vec![0.2, 0.3, 0.4],
            frames: 1000,
            seed: 1,
            smoothing: 0.01,
            interleaver: InterleaverKind::Identity,
            stage_order: StageOrder::ButterflyFirst,
            glitch_to_one: false,
            channel: None,
            output: None,
            profile_samples: 50_000,
            rx_cutoff: CodeRules::default().rx_cutoff,
            freeze_above: None,
            blocks_per_stream: 10,
            early_stop: false,
            corner: 1,
            profile_user: 1,
            code_output: None,
            region_points: 101,
            oracle_n: vec![4, 8, 12],
            oracle_trials: 10_000,
            oracle_eps: 0.3,
            oracle_rate_fraction: 0.5,
            oracle_bin_rate: None,
        }
    }
}

fn bad(msg: impl Into<String>) -> SimError {
    SimError::Config(msg.into())
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let cfg: Self = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; a relative `channel` path is resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let (Some(ch), Some(dir)) = (&cfg.channel, path.parent()) {
            if ch.is_relative() {
                cfg.channel = Some(dir.join(ch));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let kinds = self.experiment.kinds();
        if kinds.is_empty() {
            return Err(bad("experiment list is empty"));
        }
        if kinds.len() > 1 && !kinds.iter().all(|k| k.is_sweep()) {
            return Err(bad("only tsa, time-sharing and corner can be combined"));
        }
        if !self.n.is_power_of_two() || self.n < 2 {
            return Err(bad(format!("n = {} is not a power of two >= 2", self.n)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(bad(format!("alpha = {} outside [0, 1]", self.alpha)));
        }
        if self.list_size == 0 || !self.list_size.is_power_of_two() {
            return Err(bad(format!("list_size = {} is not a power of two", self.list_size)));
        }
        if self.backoff.iter().any(|b| !b.is_finite() || *b < 0.0) {
            return Err(bad("back-off values must be finite and non-negative"));
        }
        if !(0.0..0.5).contains(&self.smoothing) {
            return Err(bad(format!("smoothing = {} outside [0, 0.5)", self.smoothing)));
        }
        if self.profile_samples == 0 {
            return Err(bad("profile_samples must be positive"));
        }
        if !(0.0..=1.0).contains(&self.rx_cutoff) {
            return Err(bad(format!("rx_cutoff = {} outside [0, 1]", self.rx_cutoff)));
        }
        if let Some(f) = self.freeze_above {
            if !(0.0..=1.0).contains(&f) {
                return Err(bad(format!("freeze_above = {f} outside [0, 1]")));
            }
        }
        if self.blocks_per_stream == 0 {
            return Err(bad("blocks_per_stream must be positive"));
        }
        if !matches!(self.corner, 1 | 2) {
            return Err(bad(format!("corner = {} is not 1 or 2", self.corner)));
        }
        if !matches!(self.profile_user, 1 | 2) {
            return Err(bad(format!("profile_user = {} is not 1 or 2", self.profile_user)));
        }
        if kinds.contains(&ExperimentKind::TimeSharing) {
            let blocks = self.blocks_per_stream as f64 * self.alpha;
            if (blocks - blocks.round()).abs() > 1e-9 {
                return Err(bad("alpha * blocks_per_stream must be a whole number for time sharing"));
            }
            let tail = (self.frames % self.blocks_per_stream as u64) as f64 * self.alpha;
            if (tail - tail.round()).abs() > 1e-9 {
                return Err(bad("frames must split into streams with a whole number of corner-2 blocks"));
            }
        }
        if kinds.contains(&ExperimentKind::Region) && self.region_points < 2 {
            return Err(bad("region_points must be at least 2"));
        }
        if kinds.contains(&ExperimentKind::Oracle) {
            if self.oracle_n.is_empty() || self.oracle_n.iter().any(|&n| n == 0 || n > crate::scheme::ORACLE_MAX_N) {
                return Err(bad(format!("oracle_n entries must lie in 1..={}", crate::scheme::ORACLE_MAX_N)));
            }
            if self.oracle_trials == 0 {
                return Err(bad("oracle_trials must be positive"));
            }
            if !(self.oracle_eps > 0.0) || !(0.0..=1.0).contains(&self.oracle_rate_fraction) {
                return Err(bad("oracle_eps must be positive and oracle_rate_fraction in [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn glitch(&self) -> GlitchMap {
        if self.glitch_to_one {
            GlitchMap::ToOne
        } else {
            GlitchMap::ToTwo
        }
    }

    pub fn transform(&self) -> Result<PolarTransform, SimError> {
        let t = match self.stage_order {
            StageOrder::ButterflyFirst => PolarTransform::butterfly_first(self.n),
            StageOrder::AdjacentFirst => PolarTransform::adjacent_first(self.n),
        };
        t.map_err(|e| bad(e.to_string()))
    }

    pub fn rules(&self) -> CodeRules {
        CodeRules { rx_cutoff: self.rx_cutoff, freeze_above: self.freeze_above }
    }

    pub fn interleaver(&self) -> Interleaver {
        match self.interleaver {
            InterleaverKind::Identity => Interleaver::Identity,
            InterleaverKind::Random => Interleaver::Random { seed: crate::rng::derive_seed(self.seed, &[0x696c76]) },
        }
    }

    pub fn corner_kind(&self) -> Corner {
        if self.corner == 2 {
            Corner::Two
        } else {
            Corner::One
        }
    }

    /// Input structure from the channel file, or the Blackwell structure.
    pub fn structure(&self) -> Result<InputStructure<f64>, SimError> {
        match &self.channel {
            None => Ok(blackwell_optimal_structure(self.glitch())),
            Some(path) => ChannelFile::load(path)?.structure(),
        }
    }
}

/// Channel description: either `preset = "blackwell"` or an explicit structure.
///
/// An explicit structure gives `joint` (the `P_UV` matrix), `symbol_map` (`x = g(u, v)`),
/// `y1_size`, `y2_size` and `law`, whose row `x` lists `P(y1, y2 | x)` at column `y1 * y2_size + y2`.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelFile {
    pub preset: Option<String>,
    pub glitch_to_one: bool,
    pub joint: Option<Vec<Vec<f64>>>,
    pub symbol_map: Option<Vec<Vec<usize>>>,
    pub y1_size: Option<usize>,
    pub y2_size: Option<usize>,
    pub law: Option<Vec<Vec<f64>>>,
}

impl ChannelFile {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        toml::from_str(text).map_err(|e| bad(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn structure(&self) -> Result<InputStructure<f64>, SimError> {
        let explicit = [self.joint.is_some(), self.symbol_map.is_some(), self.law.is_some()];
        match self.preset.as_deref() {
            Some("blackwell") => {
                if explicit.iter().any(|&e| e) {
                    return Err(bad("preset channels take no explicit structure"));
                }
                let glitch = if self.glitch_to_one { GlitchMap::ToOne } else { GlitchMap::ToTwo };
                Ok(blackwell_optimal_structure(glitch))
            }
            Some(other) => Err(bad(format!("unknown channel preset {other:?}"))),
            None => {
                let (Some(joint), Some(map), Some(law), Some(y1), Some(y2)) =
                    (&self.joint, &self.symbol_map, &self.law, self.y1_size, self.y2_size)
                else {
                    return Err(bad("channel needs joint, symbol_map, law, y1_size and y2_size"));
                };
                let joint = JointPmf::from_matrix(joint.clone()).map_err(|e| bad(e.to_string()))?;
                let law = ConditionalPmf::new(law.clone()).map_err(|e| bad(e.to_string()))?;
                let channel = GenericBc::new(law, y1, y2).map_err(|e| bad(e.to_string()))?;
                InputStructure::new(joint, map.clone(), channel).map_err(|e| bad(e.to_string()))
            }
        }
    }
}
