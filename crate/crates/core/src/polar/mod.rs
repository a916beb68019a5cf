//! Polar transform, genie-aided bit-channel profiling and index-set construction.

mod code;
mod profile;
pub(crate) mod sc;

use thiserror::Error;

pub use code::{build_code, BitRole, CodeRules, CodeSpec};
pub use profile::{
    estimate_profile, BitChannelModel, BlockSource, IidSource, ProfileBlock, RecordedSource, ReliabilityProfile,
    StateMask,
};

use crate::prob::ProbError;

#[derive(Debug, Error)]
pub enum PolarError {
    #[error("block length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("stage order {0:?} is not a permutation of the transform stages")]
    BadStageOrder(Vec<u32>),
    #[error("input has length {got}, transform has length {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("requested {requested} data bits but only {max} indices are decodable")]
    Infeasible { requested: usize, max: usize },
    #[error("sample source exhausted after {0} blocks")]
    Exhausted(u64),
    #[error("profiling needs at least one sample block")]
    NoSamples,
    #[error("index sets do not partition 0..{0}")]
    NotAPartition(usize),
    #[error("bad code file: {0}")]
    Format(String),
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// `x = u G_n` with `G_n = [[1,0],[1,1]]^{(x) log2 n}` together with the order in which its
/// butterfly stages are peeled off by the successive-cancellation recursion.
///
/// `stage_order[t]` is the index bit `b` whose butterflies `(i, i + 2^b)` form the `t`-th stage
/// counted from the channel side. The linear map itself does not depend on the stage order
/// (bit permutations commute with `G_n`); the order fixes which transform index is estimated
/// at each step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolarTransform {
    n: usize,
    stage_order: Vec<u32>,
    canonical: Vec<usize>,
}

impl PolarTransform {
    pub fn new(n: usize, stage_order: Vec<u32>) -> Result<Self, PolarError> {
        if n == 0 || !n.is_power_of_two() {
            return Err(PolarError::NotPowerOfTwo(n));
        }
        let k = n.trailing_zeros();
        let mut seen = vec![false; k as usize];
        if stage_order.len() != k as usize {
            return Err(PolarError::BadStageOrder(stage_order));
        }
        for &b in &stage_order {
            if b >= k || std::mem::replace(&mut seen[b as usize], true) {
                return Err(PolarError::BadStageOrder(stage_order));
            }
        }
        // canonical bit (k-1-t) carries actual bit stage_order[t]
        let canonical = (0..n)
            .map(|c| {
                stage_order
                    .iter()
                    .enumerate()
                    .map(|(t, &b)| ((c >> (k as usize - 1 - t)) & 1) << b)
                    .sum()
            })
            .collect();
        Ok(Self { n, stage_order, canonical })
    }

    /// Largest butterflies `(i, i + n/2)` act on `x` first; estimation runs in natural index order.
    pub fn butterfly_first(n: usize) -> Result<Self, PolarError> {
        if n == 0 || !n.is_power_of_two() {
            return Err(PolarError::NotPowerOfTwo(n));
        }
        let k = n.trailing_zeros();
        Self::new(n, (0..k).rev().collect())
    }

    /// Adjacent butterflies `(2i, 2i + 1)` act on `x` first (bit-reversed estimation order).
    pub fn adjacent_first(n: usize) -> Result<Self, PolarError> {
        if n == 0 || !n.is_power_of_two() {
            return Err(PolarError::NotPowerOfTwo(n));
        }
        Self::new(n, (0..n.trailing_zeros()).collect())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn stage_order(&self) -> &[u32] {
        &self.stage_order
    }

    /// Transform index estimated at step `c` of successive cancellation; also the channel
    /// position feeding canonical leaf `c`.
    #[inline]
    pub fn canonical_to_actual(&self) -> &[usize] {
        &self.canonical
    }

    /// Index order in which successive cancellation estimates the transform bits.
    pub fn decoding_order(&self) -> &[usize] {
        &self.canonical
    }

    /// Butterfly pairs of the stage applied to `x` first.
    pub fn first_stage_pairs(&self) -> Vec<(usize, usize)> {
        match self.stage_order.first() {
            None => Vec::new(),
            Some(&b) => {
                let step = 1usize << b;
                (0..self.n).filter(|i| i & step == 0).map(|i| (i, i + step)).collect()
            }
        }
    }

    /// In-place `x = u G_n` over GF(2); `bits` must have length `n`.
    pub fn apply_in_place(&self, bits: &mut [u8]) {
        debug_assert_eq!(bits.len(), self.n);
        let mut step = 1;
        while step < self.n {
            for block in bits.chunks_exact_mut(2 * step) {
                let (lo, hi) = block.split_at_mut(step);
                for (a, &b) in lo.iter_mut().zip(hi.iter()) {
                    *a ^= b;
                }
            }
            step <<= 1;
        }
    }

    pub fn transform(&self, bits: &[u8]) -> Result<Vec<u8>, PolarError> {
        if bits.len() != self.n {
            return Err(PolarError::LengthMismatch { got: bits.len(), expected: self.n });
        }
        let mut out = bits.to_vec();
        self.apply_in_place(&mut out);
        Ok(out)
    }
}

/// `x G_n` for a bit string whose length must be a power of two.
pub fn transform(bits: &[u8]) -> Result<Vec<u8>, PolarError> {
    PolarTransform::butterfly_first(bits.len())?.transform(bits)
}

/// Transform whose first stage combines positions `i` and `i + n/2`.
pub fn stage_order_butterfly_first(n: usize) -> Result<PolarTransform, PolarError> {
    PolarTransform::butterfly_first(n)
}
