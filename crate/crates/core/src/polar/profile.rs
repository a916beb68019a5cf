//! Monte-Carlo estimation of bit-channel reliabilities by genie-aided successive cancellation.

use std::io::{BufRead, Write};

use rand::Rng;
use rayon::prelude::*;

use super::sc::{self, Prob, ScScratch};
use super::{PolarError, PolarTransform};
use crate::prob::{ConditionalPmf, Pmf, ProbError};
use crate::rng::stream_rng;
use crate::scalar::{binary_entropy, Real};

/// Blocks handled by one worker task; fixed so the reduction order never depends on threads.
const CHUNK: u64 = 64;
/// Chunks reduced together before the next batch is dispatched.
const BATCH: usize = 64;

/// One sampled block: the transform input `u` and per-position likelihoods of `u_i`.
///
/// `state[i]` is proportional to `P(u_i, side_i)` and `rx[i]` to `P(u_i, y_i)`, both in channel
/// position order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileBlock<T> {
    pub u: Vec<u8>,
    pub state: Vec<[T; 2]>,
    pub rx: Vec<[T; 2]>,
}

impl<T: Real> ProfileBlock<T> {
    pub fn zeroed(n: usize) -> Self {
        Self { u: vec![0; n], state: vec![[T::zero(); 2]; n], rx: vec![[T::zero(); 2]; n] }
    }
}

/// Source of i.i.d. profiling blocks addressed by index.
pub trait BlockSource<T>: Sync {
    fn block_len(&self) -> usize;

    /// Writes block `index` into `out`; `false` once the source is exhausted.
    fn fill(&self, index: u64, out: &mut ProfileBlock<T>) -> bool;
}

/// Which positions of a block see the side information.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateMask {
    All,
    None,
    /// Positions `0..k`.
    Prefix(usize),
    /// Each position independently with this probability.
    Bernoulli(f64),
}

/// Single-letter law of one transform input bit with its side information and observation.
///
/// Absent side or observation channels mean "nothing is seen".
#[derive(Debug, Clone, PartialEq)]
pub struct BitChannelModel<T> {
    prior: Pmf<T>,
    side: Option<ConditionalPmf<T>>,
    observation: Option<ConditionalPmf<T>>,
}

impl<T: Real> BitChannelModel<T> {
    pub fn new(
        prior: Pmf<T>,
        side: Option<ConditionalPmf<T>>,
        observation: Option<ConditionalPmf<T>>,
    ) -> Result<Self, ProbError> {
        if prior.alphabet_size() != 2 {
            return Err(ProbError::NotBinary(prior.alphabet_size()));
        }
        for w in side.iter().chain(observation.iter()) {
            if w.input_size() != 2 {
                return Err(ProbError::DimensionMismatch(format!(
                    "channel has {} inputs, bit model needs 2",
                    w.input_size()
                )));
            }
        }
        Ok(Self { prior, side, observation })
    }

    pub fn prior(&self) -> &Pmf<T> {
        &self.prior
    }

    pub fn side(&self) -> Option<&ConditionalPmf<T>> {
        self.side.as_ref()
    }

    pub fn observation(&self) -> Option<&ConditionalPmf<T>> {
        self.observation.as_ref()
    }

    /// Unnormalized `P(u, s)` for `u = 0, 1`; `None` is the erased symbol.
    #[inline]
    pub fn state_leaf(&self, s: Option<usize>) -> [T; 2] {
        leaf(&self.prior, self.side.as_ref(), s)
    }

    /// Unnormalized `P(u, y)` for `u = 0, 1`.
    #[inline]
    pub fn rx_leaf(&self, y: Option<usize>) -> [T; 2] {
        leaf(&self.prior, self.observation.as_ref(), y)
    }

    /// `P_{U|S'}` over the side alphabet extended by a trailing erasure symbol, whose row is the
    /// prior.
    pub fn augmented_posterior(&self) -> ConditionalPmf<T> {
        let sizes = self.side.as_ref().map_or(0, |w| w.output_size());
        let mut rows: Vec<Vec<T>> = (0..sizes)
            .map(|s| {
                let [a, b] = self.state_leaf(Some(s));
                let total = a + b;
                if total > T::zero() {
                    vec![a / total, b / total]
                } else {
                    // side symbol impossible under the model
                    self.prior.probs().to_vec()
                }
            })
            .collect();
        rows.push(self.prior.probs().to_vec());
        ConditionalPmf::new(rows).expect("normalized rows")
    }

    fn sample<R: Rng + ?Sized>(&self, known: bool, rng: &mut R) -> (u8, Option<usize>, Option<usize>) {
        let u = self.prior.sample(rng);
        let s = match (&self.side, known) {
            (Some(w), true) => Some(w.row(u).sample(rng)),
            _ => None,
        };
        let y = self.observation.as_ref().map(|w| w.row(u).sample(rng));
        (u as u8, s, y)
    }
}

#[inline]
fn leaf<T: Real>(prior: &Pmf<T>, w: Option<&ConditionalPmf<T>>, sym: Option<usize>) -> [T; 2] {
    let p = prior.probs();
    match (w, sym) {
        (Some(w), Some(s)) => [p[0] * w.prob(0, s), p[1] * w.prob(1, s)],
        _ => [p[0], p[1]],
    }
}

/// Blocks of i.i.d. draws from a [`BitChannelModel`], each from its own random stream.
#[derive(Debug, Clone)]
pub struct IidSource<T> {
    model: BitChannelModel<T>,
    mask: StateMask,
    n: usize,
    seed: u64,
}

impl<T: Real> IidSource<T> {
    pub fn new(model: BitChannelModel<T>, mask: StateMask, n: usize, seed: u64) -> Self {
        Self { model, mask, n, seed }
    }

    pub fn model(&self) -> &BitChannelModel<T> {
        &self.model
    }
}

impl<T: Real> BlockSource<T> for IidSource<T> {
    fn block_len(&self) -> usize {
        self.n
    }

    fn fill(&self, index: u64, out: &mut ProfileBlock<T>) -> bool {
        let mut rng = stream_rng(self.seed, &[index]);
        for i in 0..self.n {
            let known = match self.mask {
                StateMask::All => true,
                StateMask::None => false,
                StateMask::Prefix(k) => i < k,
                StateMask::Bernoulli(p) => rng.random::<f64>() < p,
            };
            let (u, s, y) = self.model.sample(known, &mut rng);
            out.u[i] = u;
            out.state[i] = self.model.state_leaf(s);
            out.rx[i] = self.model.rx_leaf(y);
        }
        true
    }
}

/// A fixed list of pre-recorded blocks.
#[derive(Debug, Clone)]
pub struct RecordedSource<T> {
    blocks: Vec<ProfileBlock<T>>,
}

impl<T: Real> RecordedSource<T> {
    pub fn new(blocks: Vec<ProfileBlock<T>>) -> Result<Self, PolarError> {
        let n = blocks.first().ok_or(PolarError::NoSamples)?.u.len();
        for b in &blocks {
            for len in [b.u.len(), b.state.len(), b.rx.len()] {
                if len != n {
                    return Err(PolarError::LengthMismatch { got: len, expected: n });
                }
            }
        }
        Ok(Self { blocks })
    }
}

impl<T: Real> BlockSource<T> for RecordedSource<T> {
    fn block_len(&self) -> usize {
        self.blocks[0].u.len()
    }

    fn fill(&self, index: u64, out: &mut ProfileBlock<T>) -> bool {
        match self.blocks.get(index as usize) {
            Some(b) => {
                out.clone_from(b);
                true
            }
            None => false,
        }
    }
}

/// Per-index estimates of `H(u_i | u^{i-1}, side)` and `H(u_i | u^{i-1}, y)` and the matching
/// Bhattacharyya parameters, indexed by transform position.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityProfile<T> {
    pub h_state: Vec<T>,
    pub h_rx: Vec<T>,
    pub z_state: Vec<T>,
    pub z_rx: Vec<T>,
    /// Standard errors of the four vectors above (zero when loaded from CSV).
    pub h_state_se: Vec<T>,
    pub h_rx_se: Vec<T>,
    pub z_state_se: Vec<T>,
    pub z_rx_se: Vec<T>,
    /// Standard error of the block average of `h_state` / `h_rx`.
    pub mean_h_state_se: T,
    pub mean_h_rx_se: T,
    pub sample_count: u64,
}

impl<T: Real> ReliabilityProfile<T> {
    pub fn n(&self) -> usize {
        self.h_state.len()
    }

    /// `(1/n) sum_i h_state[i]`.
    pub fn mean_h_state(&self) -> T {
        mean(&self.h_state)
    }

    pub fn mean_h_rx(&self) -> T {
        mean(&self.h_rx)
    }

    /// Profile given directly by its entropy vectors; Bhattacharyya values are taken as the
    /// tightest bound compatible with `h` (`z = sqrt(h)`).
    pub fn from_entropies(h_state: Vec<T>, h_rx: Vec<T>) -> Result<Self, PolarError> {
        if h_state.len() != h_rx.len() {
            return Err(PolarError::LengthMismatch { got: h_rx.len(), expected: h_state.len() });
        }
        let n = h_state.len();
        Ok(Self {
            z_state: h_state.iter().map(|h| h.sqrt()).collect(),
            z_rx: h_rx.iter().map(|h| h.sqrt()).collect(),
            h_state,
            h_rx,
            h_state_se: vec![T::zero(); n],
            h_rx_se: vec![T::zero(); n],
            z_state_se: vec![T::zero(); n],
            z_rx_se: vec![T::zero(); n],
            mean_h_state_se: T::zero(),
            mean_h_rx_se: T::zero(),
            sample_count: 0,
        })
    }

    /// CSV with columns `index,h_state,h_rx,z_state,z_rx`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<(), PolarError> {
        writeln!(out, "index,h_state,h_rx,z_state,z_rx")?;
        for i in 0..self.n() {
            writeln!(
                out,
                "{},{:e},{:e},{:e},{:e}",
                i,
                self.h_state[i].as_f64(),
                self.h_rx[i].as_f64(),
                self.z_state[i].as_f64(),
                self.z_rx[i].as_f64()
            )?;
        }
        Ok(())
    }

    /// Inverse of [`write_csv`](Self::write_csv); standard errors and sample count are not stored
    /// and come back as zero.
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self, PolarError> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| PolarError::Format("empty profile".into()))??;
        if header.trim() != "index,h_state,h_rx,z_state,z_rx" {
            return Err(PolarError::Format(format!("unexpected header {header:?}")));
        }
        let mut cols: [Vec<T>; 4] = Default::default();
        for (row, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 || fields[0].trim().parse::<usize>().ok() != Some(row) {
                return Err(PolarError::Format(format!("bad profile row {line:?}")));
            }
            for (col, f) in cols.iter_mut().zip(&fields[1..]) {
                let v: f64 = f.trim().parse().map_err(|_| PolarError::Format(format!("bad number {f:?}")))?;
                col.push(T::lit(v));
            }
        }
        let [h_state, h_rx, z_state, z_rx] = cols;
        let mut p = Self::from_entropies(h_state, h_rx)?;
        p.z_state = z_state;
        p.z_rx = z_rx;
        Ok(p)
    }
}

fn mean<T: Real>(v: &[T]) -> T {
    if v.is_empty() {
        return T::zero();
    }
    v.iter().copied().sum::<T>() / T::from_usize(v.len()).unwrap()
}

#[derive(Clone)]
struct Accumulator {
    // per index: sum and sum of squares for h_state, h_rx, z_state, z_rx
    sums: [Vec<f64>; 4],
    squares: [Vec<f64>; 4],
    block_mean: [f64; 2],
    block_mean_sq: [f64; 2],
    count: u64,
}

impl Accumulator {
    fn new(n: usize) -> Self {
        Self {
            sums: std::array::from_fn(|_| vec![0.0; n]),
            squares: std::array::from_fn(|_| vec![0.0; n]),
            block_mean: [0.0; 2],
            block_mean_sq: [0.0; 2],
            count: 0,
        }
    }

    fn merge(&mut self, other: &Self) {
        for k in 0..4 {
            for (a, b) in self.sums[k].iter_mut().zip(&other.sums[k]) {
                *a += b;
            }
            for (a, b) in self.squares[k].iter_mut().zip(&other.squares[k]) {
                *a += b;
            }
        }
        for k in 0..2 {
            self.block_mean[k] += other.block_mean[k];
            self.block_mean_sq[k] += other.block_mean_sq[k];
        }
        self.count += other.count;
    }
}

/// Genie-aided posteriors of one block, written as `(h, z)` per transform index.
struct BlockProfiler<T> {
    t: PolarTransform,
    scratch: ScScratch<Prob<T>>,
    leaves: Vec<Prob<T>>,
    ubar: Vec<u8>,
    codeword: Vec<u8>,
}

impl<T: Real> BlockProfiler<T> {
    fn new(t: &PolarTransform) -> Self {
        let n = t.n();
        let half = T::lit(0.5);
        Self {
            t: t.clone(),
            scratch: ScScratch::new(n, Prob([half, half])),
            leaves: vec![Prob([half, half]); n],
            ubar: vec![0; n],
            codeword: vec![0; n],
        }
    }

    /// Adds the block to `acc`; `side` selects `state` (0) or `rx` (1) likelihoods.
    fn run(&mut self, block: &ProfileBlock<T>, side: usize, acc: &mut Accumulator) {
        let canon = self.t.canonical_to_actual();
        let src = if side == 0 { &block.state } else { &block.rx };
        for (c, leaf) in self.leaves.iter_mut().enumerate() {
            let [a, b] = src[canon[c]];
            *leaf = Prob::normalized(a, b);
        }
        self.ubar.copy_from_slice(&block.u);
        self.t.apply_in_place(&mut self.ubar);
        let ubar = &self.ubar;
        let (h_sum, h_sq) = acc.sums.split_at_mut(2);
        let (h_sum, z_sum) = (&mut h_sum[side], &mut h_sq[side]);
        let (hq, zq) = acc.squares.split_at_mut(2);
        let (hq, zq) = (&mut hq[side], &mut zq[side]);
        let mut total = 0.0;
        sc::run(&self.leaves, &mut self.scratch, &mut self.codeword, |c, m: Prob<T>| {
            let i = canon[c];
            let p1 = m.p1().as_f64().clamp(0.0, 1.0);
            let h = binary_entropy(p1);
            let z = 2.0 * (p1 * (1.0 - p1)).sqrt();
            h_sum[i] += h;
            hq[i] += h * h;
            z_sum[i] += z;
            zq[i] += z * z;
            total += h;
            ubar[i]
        });
        let m = total / self.t.n() as f64;
        acc.block_mean[side] += m;
        acc.block_mean_sq[side] += m * m;
    }
}

/// Estimates the reliability profile of transform `t` from `samples` blocks of `source`.
///
/// Work is split into fixed chunks reduced in index order, so the result does not depend on the
/// number of threads.
pub fn estimate_profile<T: Real, S: BlockSource<T>>(
    source: &S,
    t: &PolarTransform,
    samples: u64,
) -> Result<ReliabilityProfile<T>, PolarError> {
    if samples == 0 {
        return Err(PolarError::NoSamples);
    }
    let n = t.n();
    if source.block_len() != n {
        return Err(PolarError::LengthMismatch { got: source.block_len(), expected: n });
    }
    let chunks = samples.div_ceil(CHUNK);
    let mut total = Accumulator::new(n);
    let mut next = 0u64;
    while next < chunks {
        let end = (next + BATCH as u64).min(chunks);
        let parts: Vec<Result<Accumulator, PolarError>> = (next..end)
            .into_par_iter()
            .map(|chunk| {
                let mut acc = Accumulator::new(n);
                let mut profiler = BlockProfiler::new(t);
                let mut block = ProfileBlock::zeroed(n);
                for index in chunk * CHUNK..((chunk + 1) * CHUNK).min(samples) {
                    if !source.fill(index, &mut block) {
                        return Err(PolarError::Exhausted(index));
                    }
                    profiler.run(&block, 0, &mut acc);
                    profiler.run(&block, 1, &mut acc);
                    acc.count += 1;
                }
                Ok(acc)
            })
            .collect();
        for part in parts {
            total.merge(&part?);
        }
        next = end;
    }
    Ok(finish(total))
}

fn finish<T: Real>(acc: Accumulator) -> ReliabilityProfile<T> {
    let count = acc.count as f64;
    let stats = |sum: f64, sq: f64| -> (T, T) {
        let mean = sum / count;
        let var = if acc.count > 1 { ((sq - count * mean * mean) / (count - 1.0)).max(0.0) } else { 0.0 };
        (T::lit(mean.clamp(0.0, 1.0)), T::lit((var / count).sqrt()))
    };
    let mut cols: [(Vec<T>, Vec<T>); 4] = Default::default();
    for (k, (mean, se)) in cols.iter_mut().enumerate() {
        (*mean, *se) = acc.sums[k].iter().zip(&acc.squares[k]).map(|(&s, &q)| stats(s, q)).unzip();
    }
    let [(h_state, h_state_se), (h_rx, h_rx_se), (z_state, z_state_se), (z_rx, z_rx_se)] = cols;
    ReliabilityProfile {
        h_state,
        h_rx,
        z_state,
        z_rx,
        h_state_se,
        h_rx_se,
        z_state_se,
        z_rx_se,
        mean_h_state_se: stats(acc.block_mean[0], acc.block_mean_sq[0]).1,
        mean_h_rx_se: stats(acc.block_mean[1], acc.block_mean_sq[1]).1,
        sample_count: acc.count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{conditional_entropy, entropy, JointPmf};

    fn ber(p: f64) -> Pmf<f64> {
        Pmf::bernoulli(p).unwrap()
    }

    #[test]
    fn uniform_input_has_full_entropy_everywhere() {
        let model = BitChannelModel::new(ber(0.5), None, None).unwrap();
        let src = IidSource::new(model, StateMask::None, 64, 1);
        let p: ReliabilityProfile<f64> = estimate_profile(&src, &PolarTransform::butterfly_first(64).unwrap(), 500).unwrap();
        for (&h, &z) in p.h_state.iter().zip(&p.z_state) {
            assert!((h - 1.0).abs() < 1e-12);
            assert!((z - 1.0).abs() < 1e-12);
        }
        assert_eq!(p.sample_count, 500);
    }

    #[test]
    fn known_state_gives_zero_entropy() {
        let model = BitChannelModel::new(ber(0.3), Some(ConditionalPmf::identity(2).unwrap()), None).unwrap();
        let src = IidSource::new(model, StateMask::All, 32, 2);
        let p: ReliabilityProfile<f64> = estimate_profile(&src, &PolarTransform::butterfly_first(32).unwrap(), 200).unwrap();
        assert!(p.h_state.iter().all(|&h| h < 1e-12));
        // nothing observed on the receiver side
        assert!((p.mean_h_rx() - entropy(&ber(0.3))).abs() < 0.02);
    }

    #[test]
    fn conservation_at_moderate_length() {
        let model = BitChannelModel::new(ber(1.0 / 3.0), None, None).unwrap();
        let src = IidSource::new(model, StateMask::None, 256, 3);
        let p: ReliabilityProfile<f64> = estimate_profile(&src, &PolarTransform::butterfly_first(256).unwrap(), 2000).unwrap();
        let target = entropy(&ber(1.0 / 3.0));
        assert!((p.mean_h_state() - target).abs() < 3.0 * p.mean_h_state_se + 1e-12);
    }

    #[test]
    fn conservation_with_partial_side_information() {
        // side information through a BSC(0.1) on the first half of the block
        let side = ConditionalPmf::bsc(0.1).unwrap();
        let prior = ber(0.4);
        let model = BitChannelModel::new(prior.clone(), Some(side.clone()), None).unwrap();
        let src = IidSource::new(model, StateMask::Prefix(128), 256, 4);
        for t in [PolarTransform::butterfly_first(256).unwrap(), PolarTransform::adjacent_first(256).unwrap()] {
            let p: ReliabilityProfile<f64> = estimate_profile(&src, &t, 4000).unwrap();
            let h_cond = conditional_entropy(&JointPmf::from_marginal_and_channel(&prior, &side).unwrap());
            let target = 0.5 * h_cond + 0.5 * entropy(&prior);
            assert!(
                (p.mean_h_state() - target).abs() < 3.0 * p.mean_h_state_se,
                "{} vs {target}",
                p.mean_h_state()
            );
        }
    }

    #[test]
    fn bounds_hold_per_index() {
        let model = BitChannelModel::new(ber(0.2), Some(ConditionalPmf::bsc(0.15).unwrap()), None).unwrap();
        let src = IidSource::new(model, StateMask::Bernoulli(0.5), 128, 5);
        let p: ReliabilityProfile<f64> = estimate_profile(&src, &PolarTransform::butterfly_first(128).unwrap(), 1000).unwrap();
        for i in 0..128 {
            assert!(p.z_state[i] * p.z_state[i] <= p.h_state[i] + 1e-12);
            assert!(p.h_state[i] <= p.z_state[i] + 1e-12);
        }
    }

    #[test]
    fn independent_of_thread_count() {
        let model = BitChannelModel::new(ber(0.25), Some(ConditionalPmf::bsc(0.2).unwrap()), None).unwrap();
        let src = IidSource::new(model, StateMask::Bernoulli(0.3), 64, 6);
        let t = PolarTransform::butterfly_first(64).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate_profile::<f64, _>(&src, &t, 3000).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn recorded_source_exhausts() {
        let block = ProfileBlock { u: vec![0, 1], state: vec![[0.5, 0.5]; 2], rx: vec![[0.5, 0.5]; 2] };
        let src = RecordedSource::new(vec![block.clone(), block]).unwrap();
        let t = PolarTransform::butterfly_first(2).unwrap();
        assert!(estimate_profile::<f64, _>(&src, &t, 2).is_ok());
        assert!(matches!(estimate_profile::<f64, _>(&src, &t, 3), Err(PolarError::Exhausted(2))));
        assert!(matches!(estimate_profile::<f64, _>(&src, &t, 0), Err(PolarError::NoSamples)));
    }

    #[test]
    fn csv_round_trip() {
        let model = BitChannelModel::new(ber(0.3), None, Some(ConditionalPmf::bsc(0.1).unwrap())).unwrap();
        let src = IidSource::new(model, StateMask::None, 16, 7);
        let p: ReliabilityProfile<f64> = estimate_profile(&src, &PolarTransform::butterfly_first(16).unwrap(), 100).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let q = ReliabilityProfile::<f64>::read_csv(&buf[..]).unwrap();
        assert_eq!(q.h_state, p.h_state);
        assert_eq!(q.h_rx, p.h_rx);
        assert_eq!(q.z_state, p.z_state);
        assert_eq!(q.z_rx, p.z_rx);
    }

    #[test]
    fn augmented_posterior_erasure_row_is_prior() {
        let prior = ber(1.0 / 3.0);
        let model = BitChannelModel::new(prior.clone(), Some(ConditionalPmf::bsc(0.2).unwrap()), None).unwrap();
        let post = model.augmented_posterior();
        assert_eq!(post.input_size(), 3);
        assert_eq!(post.row(2).probs(), prior.probs());
        // Bayes: P(u=1|s=1) = (1/3 * 0.8) / (1/3 * 0.8 + 2/3 * 0.2)
        assert!((post.prob(1, 1) - (0.8 / 3.0) / (0.8 / 3.0 + 0.4 / 3.0)).abs() < 1e-12);
    }
}
