//! Partition of transform indices into data, shaping and frozen sets.

use serde::{Deserialize, Serialize};

use super::profile::ReliabilityProfile;
use super::PolarError;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BitRole {
    /// Carries a message bit.
    Data,
    /// Sampled from its posterior at the encoder, re-estimated at the decoder.
    Shaping,
    /// Fixed to zero.
    Frozen,
}

/// Index sets of one polar code; indices are 0-based transform positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSpec {
    pub n: usize,
    pub rate: f64,
    pub data: Vec<usize>,
    pub shaping: Vec<usize>,
    pub frozen: Vec<usize>,
}

impl CodeSpec {
    /// Builds a code from its three sets, which must partition `0..n`.
    pub fn from_sets(n: usize, mut data: Vec<usize>, mut shaping: Vec<usize>, mut frozen: Vec<usize>) -> Result<Self, PolarError> {
        let mut seen = vec![false; n];
        for &i in data.iter().chain(&shaping).chain(&frozen) {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(PolarError::NotAPartition(n));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(PolarError::NotAPartition(n));
        }
        data.sort_unstable();
        shaping.sort_unstable();
        frozen.sort_unstable();
        let rate = if n == 0 { 0.0 } else { data.len() as f64 / n as f64 };
        Ok(Self { n, rate, data, shaping, frozen })
    }

    /// Every position carries data.
    pub fn all_data(n: usize) -> Self {
        Self::from_sets(n, (0..n).collect(), Vec::new(), Vec::new()).expect("partition")
    }

    /// Every position is shaped.
    pub fn all_shaping(n: usize) -> Self {
        Self::from_sets(n, Vec::new(), (0..n).collect(), Vec::new()).expect("partition")
    }

    pub fn data_bits(&self) -> usize {
        self.data.len()
    }

    /// Role of every index.
    pub fn roles(&self) -> Vec<BitRole> {
        let mut roles = vec![BitRole::Frozen; self.n];
        for &i in &self.data {
            roles[i] = BitRole::Data;
        }
        for &i in &self.shaping {
            roles[i] = BitRole::Shaping;
        }
        roles
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plain data serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, PolarError> {
        let raw: CodeSpec = toml::from_str(text).map_err(|e| PolarError::Format(e.to_string()))?;
        let spec = Self::from_sets(raw.n, raw.data, raw.shaping, raw.frozen)?;
        if (spec.rate - raw.rate).abs() > 1e-12 {
            return Err(PolarError::Format(format!("rate {} does not match data set ({})", raw.rate, spec.rate)));
        }
        Ok(spec)
    }
}

/// Thresholds used by [`build_code`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodeRules {
    /// Indices with `h_rx` above this are not decodable and get frozen.
    pub rx_cutoff: f64,
    /// When set, decodable non-data indices with `h_state` above this are frozen instead of shaped.
    pub freeze_above: Option<f64>,
}

impl Default for CodeRules {
    fn default() -> Self {
        Self { rx_cutoff: 0.1, freeze_above: None }
    }
}

/// Rank-based construction with exactly `target` data bits.
///
/// Data goes to the `target` decodable indices (`h_rx <= rx_cutoff`) with the highest `h_state`,
/// lower index first on ties. Undecodable indices are frozen; the remaining decodable indices are
/// shaped so that the codeword keeps its intended distribution.
pub fn build_code<T: Real>(profile: &ReliabilityProfile<T>, target: usize, rules: &CodeRules) -> Result<CodeSpec, PolarError> {
    let n = profile.n();
    let cutoff = T::lit(rules.rx_cutoff);
    let mut eligible: Vec<usize> = (0..n).filter(|&i| profile.h_rx[i] <= cutoff).collect();
    if target > eligible.len() {
        return Err(PolarError::Infeasible { requested: target, max: eligible.len() });
    }
    // stable sort keeps ascending index order among equal entropies
    eligible.sort_by(|&a, &b| profile.h_state[b].partial_cmp(&profile.h_state[a]).expect("finite entropies"));
    let mut is_data = vec![false; n];
    for &i in &eligible[..target] {
        is_data[i] = true;
    }
    let (mut data, mut shaping, mut frozen) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..n {
        if is_data[i] {
            data.push(i);
        } else if profile.h_rx[i] > cutoff || rules.freeze_above.is_some_and(|th| profile.h_state[i] > T::lit(th)) {
            frozen.push(i);
        } else {
            shaping.push(i);
        }
    }
    CodeSpec::from_sets(n, data, shaping, frozen)
}
