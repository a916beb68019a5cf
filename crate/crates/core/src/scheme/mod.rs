//! Time-shifted alternating block schedule, stream encoding and decoding, the time-sharing
//! baseline and a brute-force random-coding oracle for tiny block lengths.

mod codes;
mod oracle;
mod stream;

use std::io::Write;

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::channel::ChannelError;
use crate::coder::CoderError;
use crate::polar::{PolarError, StateMask};
use crate::prob::ProbError;
use crate::regions::{RegionError, User};
use crate::rng::stream_rng;

pub use codes::{profile_user, user_model, CodeBuilder, SchemeCodes, UserCode};
pub use oracle::{typicality_oracle, OracleParams, ORACLE_MAX_N};
pub use stream::{
    corner_block, decode_stream, encode_stream, time_sharing_stream, tsa_stream, uses_corner_two, BlockOutcome, Corner,
    EncodedStream, StreamMessages, StreamResult,
};

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("offset {n1} exceeds block length {n}")]
    OffsetTooLarge { n1: usize, n: usize },
    #[error("offset fraction {0} outside [0, 1]")]
    BadAlpha(f64),
    #[error("fraction {alpha} of {blocks} blocks is not a whole number of blocks")]
    NonIntegralSplit { alpha: f64, blocks: usize },
    #[error("user {user} has {got} message blocks, schedule has {expected}")]
    MessageCount { user: usize, got: usize, expected: usize },
    #[error("layout block length {layout} differs from code length {code}")]
    LayoutMismatch { layout: usize, code: usize },
    #[error("observation has length {got}, layout needs {expected}")]
    ObservationLength { got: usize, expected: usize },
    #[error("polar coding needs binary auxiliaries, structure is {0}x{1}")]
    NotBinary(usize, usize),
    #[error("oracle block length {0} is too large for exhaustive search")]
    OracleTooLarge(usize),
    #[error("oracle needs at least one trial")]
    NoTrials,
    #[error(transparent)]
    Coder(#[from] CoderError),
    #[error(transparent)]
    Polar(#[from] PolarError),
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Placement of a block's codeword positions on its channel span.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Interleaver {
    #[default]
    Identity,
    /// Independent uniform permutation per user and block.
    Random { seed: u64 },
}

/// Block length `n`, user-2 shift `n1` and number of blocks per user.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TsaSchedule {
    n: usize,
    n1: usize,
    num_blocks: usize,
    interleaver: Interleaver,
}

impl TsaSchedule {
    pub fn new(n: usize, n1: usize, num_blocks: usize, interleaver: Interleaver) -> Result<Self, SchemeError> {
        if n1 > n {
            return Err(SchemeError::OffsetTooLarge { n1, n });
        }
        Ok(Self { n, n1, num_blocks, interleaver })
    }

    /// `n1 = round(alpha n)`.
    pub fn from_alpha(n: usize, alpha: f64, num_blocks: usize, interleaver: Interleaver) -> Result<Self, SchemeError> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(SchemeError::BadAlpha(alpha));
        }
        Self::new(n, (alpha * n as f64).round() as usize, num_blocks, interleaver)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n - self.n1
    }

    pub fn alpha(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.n1 as f64 / self.n as f64
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    pub fn interleaver(&self) -> Interleaver {
        self.interleaver
    }

    /// Channel uses of the whole stream, including the start-up and closing overlaps.
    pub fn stream_len(&self) -> usize {
        self.num_blocks * self.n + self.n1
    }

    /// Number of positions of a `user` block whose other-user symbol is known when it is encoded.
    pub fn known_count(&self, user: User) -> usize {
        match user {
            User::One => self.n1,
            User::Two => self.n2(),
        }
    }

    /// First channel use of block `b` of `user`.
    pub fn block_start(&self, user: User, b: usize) -> usize {
        b * self.n + if user == User::Two { self.n1 } else { 0 }
    }

    /// Profiling mask matching this schedule for `user`.
    pub fn profile_mask(&self, user: User) -> StateMask {
        let k = self.known_count(user);
        match self.interleaver {
            Interleaver::Identity => StateMask::Prefix(k),
            Interleaver::Random { .. } => StateMask::Bernoulli(k as f64 / self.n as f64),
        }
    }

    /// Channel offset (within the block span) of each codeword index.
    pub fn offsets(&self, user: User, b: usize) -> Vec<usize> {
        let mut offsets: Vec<usize> = (0..self.n).collect();
        if let Interleaver::Random { seed } = self.interleaver {
            offsets.shuffle(&mut stream_rng(seed, &[user.index() as u64, b as u64]));
        }
        offsets
    }
}

/// Where one block lives on the channel and which of its positions are state-known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLayout {
    pub user: User,
    pub block: usize,
    pub start: usize,
    /// Channel offset of codeword index `j`, relative to `start`.
    pub offsets: Vec<usize>,
    /// Whether the other user's symbol at codeword index `j` is fixed before this block is encoded.
    pub known: Vec<bool>,
}

impl BlockLayout {
    #[inline]
    pub fn position(&self, j: usize) -> usize {
        self.start + self.offsets[j]
    }
}

/// Both users' block layouts for a schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameLayout {
    pub schedule: TsaSchedule,
    pub user1: Vec<BlockLayout>,
    pub user2: Vec<BlockLayout>,
}

impl FrameLayout {
    pub fn blocks(&self, user: User) -> &[BlockLayout] {
        match user {
            User::One => &self.user1,
            User::Two => &self.user2,
        }
    }

    /// CSV with columns `user,block,index,position,known`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<(), SchemeError> {
        writeln!(out, "user,block,index,position,known")?;
        for b in self.user1.iter().chain(&self.user2) {
            for j in 0..b.offsets.len() {
                writeln!(out, "{},{},{},{},{}", b.user.index() + 1, b.block, j, b.position(j), u8::from(b.known[j]))?;
            }
        }
        Ok(())
    }
}

/// Lays out user-1 block `b` on `[b n, b n + n)` and user-2 block `b` on `[b n + n1, (b + 1) n + n1)`.
///
/// User-1 blocks know user 2's symbols on their first `n1` channel uses (the tail of the
/// previous user-2 block, or the all-zero start-up segment); user-2 blocks know user 1's symbols
/// on their first `n2` channel uses. User 1's last block is followed by an all-zero closing
/// segment of length `n1`.
pub fn build_layout(s: &TsaSchedule) -> FrameLayout {
    let per_user = |user: User| {
        let k = s.known_count(user);
        (0..s.num_blocks)
            .map(|b| {
                let offsets = s.offsets(user, b);
                let known = offsets.iter().map(|&o| o < k).collect();
                BlockLayout { user, block: b, start: s.block_start(user, b), offsets, known }
            })
            .collect()
    };
    FrameLayout { schedule: *s, user1: per_user(User::One), user2: per_user(User::Two) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn corner_offsets() {
        let l = build_layout(&TsaSchedule::new(8, 0, 3, Interleaver::Identity).unwrap());
        assert!(l.user1.iter().all(|b| b.known.iter().all(|k| !k)));
        assert!(l.user2.iter().all(|b| b.known.iter().all(|&k| k)));
        assert_eq!(l.user2[1].start, l.user1[1].start);
        let l = build_layout(&TsaSchedule::new(8, 8, 3, Interleaver::Identity).unwrap());
        assert!(l.user1.iter().all(|b| b.known.iter().all(|&k| k)));
        assert!(l.user2.iter().all(|b| b.known.iter().all(|k| !k)));
        assert!(matches!(TsaSchedule::new(8, 9, 1, Interleaver::Identity), Err(SchemeError::OffsetTooLarge { .. })));
    }

    #[test]
    fn staircase_at_half_offset() {
        let s = TsaSchedule::new(2048, 1024, 4, Interleaver::Identity).unwrap();
        let l = build_layout(&s);
        assert_eq!(s.stream_len(), 4 * 2048 + 1024);
        for b in 0..4 {
            let (u, v) = (&l.user1[b], &l.user2[b]);
            assert_eq!(u.known.iter().filter(|&&k| k).count(), 1024);
            assert_eq!(v.known.iter().filter(|&&k| k).count(), 1024);
            assert!(u.known[..1024].iter().all(|&k| k) && u.known[1024..].iter().all(|&k| !k));
            // user 2 starts half-way through user 1's block and knows exactly the overlap
            assert_eq!(v.start, u.start + 1024);
            for j in 0..2048 {
                let p = v.position(j);
                assert_eq!(v.known[j], p < u.start + 2048);
            }
        }
    }

    #[test]
    fn masks_tile_each_channel_use_once() {
        for n1 in [0, 3, 8, 13, 16] {
            let s = TsaSchedule::new(16, n1, 5, Interleaver::Random { seed: 4 }).unwrap();
            let l = build_layout(&s);
            // every interior channel use is GP-encoded by exactly one user
            let mut gp = vec![0usize; s.stream_len()];
            let mut covered = vec![0usize; s.stream_len()];
            for b in l.user1.iter().chain(&l.user2) {
                for j in 0..16 {
                    covered[b.position(j)] += 1;
                    gp[b.position(j)] += usize::from(b.known[j]);
                }
                let known = b.known.iter().filter(|&&k| k).count();
                assert_eq!(known, s.known_count(b.user));
            }
            for p in n1..s.num_blocks() * 16 {
                assert_eq!(covered[p], 2);
                assert_eq!(gp[p], 1, "n1={n1} p={p}");
            }
            assert_eq!(s.known_count(User::One) + s.known_count(User::Two), 16);
        }
    }

    #[test]
    fn random_interleaver_spreads_known_positions_uniformly() {
        let n = 64;
        let blocks = 2000;
        let s = TsaSchedule::new(n, 16, blocks, Interleaver::Random { seed: 77 }).unwrap();
        let l = build_layout(&s);
        let mut counts = vec![0f64; n];
        for b in &l.user1 {
            for (c, &k) in counts.iter_mut().zip(&b.known) {
                *c += f64::from(u8::from(k));
            }
        }
        let expected = blocks as f64 * 16.0 / n as f64;
        let stat: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
        let crit = ChiSquared::new((n - 1) as f64).unwrap().inverse_cdf(0.99);
        assert!(stat < crit, "chi2 {stat} >= {crit}");
    }

    #[test]
    fn layout_csv_has_one_row_per_position() {
        let l = build_layout(&TsaSchedule::new(4, 1, 2, Interleaver::Identity).unwrap());
        let mut buf = Vec::new();
        l.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * 2 * 4);
        assert!(text.contains("2,0,0,1,1"));
    }
}
