//! Encoding, transmission and decoding of whole block streams.

use rand::Rng;

use super::{FrameLayout, SchemeCodes, SchemeError};
use crate::coder::{Codeword, DecodeResult, ListDecoder, SideInfo};
use crate::regions::{InputStructure, User};
use crate::scalar::Real;

/// Encoding order of a corner point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corner {
    /// User 1 plain, user 2 Gelfand-Pinsker coded against it.
    One,
    /// User 2 plain, user 1 Gelfand-Pinsker coded against it.
    Two,
}

/// Message bits per user and block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamMessages {
    pub user1: Vec<Vec<u8>>,
    pub user2: Vec<Vec<u8>>,
}

impl StreamMessages {
    /// Uniform random messages with `k1` / `k2` bits per block.
    pub fn random<R: Rng + ?Sized>(k1: usize, k2: usize, blocks: usize, rng: &mut R) -> Self {
        let mut draw = |k: usize| (0..blocks).map(|_| (0..k).map(|_| rng.random_range(0..2u8)).collect()).collect();
        let user1 = draw(k1);
        let user2 = draw(k2);
        Self { user1, user2 }
    }

    /// Per-block sizes may differ, as in the time-sharing baseline.
    pub fn random_sized<R: Rng + ?Sized>(sizes: &[(usize, usize)], rng: &mut R) -> Self {
        let mut user1 = Vec::with_capacity(sizes.len());
        let mut user2 = Vec::with_capacity(sizes.len());
        for &(k1, k2) in sizes {
            user1.push((0..k1).map(|_| rng.random_range(0..2u8)).collect());
            user2.push((0..k2).map(|_| rng.random_range(0..2u8)).collect());
        }
        Self { user1, user2 }
    }

    pub fn user(&self, user: User) -> &[Vec<u8>] {
        match user {
            User::One => &self.user1,
            User::Two => &self.user2,
        }
    }
}

/// Channel input of a stream together with both users' codewords.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedStream {
    /// User-1 auxiliary symbol per channel use (zero on the closing segment).
    pub u: Vec<u8>,
    /// User-2 auxiliary symbol per channel use (zero on the start-up segment).
    pub v: Vec<u8>,
    pub x: Vec<usize>,
    pub user1: Vec<Codeword>,
    pub user2: Vec<Codeword>,
    /// Channel uses whose `(u, v)` pair has zero probability under `P_UV`.
    pub glitches: usize,
}

fn check_messages(messages: &StreamMessages, blocks: usize) -> Result<(), SchemeError> {
    for (user, m) in [(1, &messages.user1), (2, &messages.user2)] {
        if m.len() != blocks {
            return Err(SchemeError::MessageCount { user, got: m.len(), expected: blocks });
        }
    }
    Ok(())
}

fn finish_stream<T: Real>(u: Vec<u8>, v: Vec<u8>, user1: Vec<Codeword>, user2: Vec<Codeword>, model: &InputStructure<T>) -> EncodedStream {
    let mut glitches = 0;
    let x = u
        .iter()
        .zip(&v)
        .map(|(&a, &b)| {
            glitches += usize::from(model.joint().get(a as usize, b as usize) == T::zero());
            model.map(a as usize, b as usize)
        })
        .collect();
    EncodedStream { u, v, x, user1, user2, glitches }
}

/// Alternating encoding: user-1 block `b`, then user-2 block `b`, each Gelfand-Pinsker coded on
/// the positions where the other user's symbols are already fixed.
pub fn encode_stream<T: Real>(
    messages: &StreamMessages,
    layout: &FrameLayout,
    codes: &SchemeCodes<T>,
    model: &InputStructure<T>,
) -> Result<EncodedStream, SchemeError> {
    let s = &layout.schedule;
    check_messages(messages, s.num_blocks())?;
    if codes.n() != s.n() || codes.user2.encoder.n() != s.n() {
        return Err(SchemeError::LayoutMismatch { layout: s.n(), code: codes.n() });
    }
    let len = s.stream_len();
    let mut u = vec![0u8; len];
    let mut v = vec![0u8; len];
    let mut user1 = Vec::with_capacity(s.num_blocks());
    let mut user2 = Vec::with_capacity(s.num_blocks());
    for b in 0..s.num_blocks() {
        for (user, blk) in [(User::One, &layout.user1[b]), (User::Two, &layout.user2[b])] {
            let (own, other) = match user {
                User::One => (&mut u, &v),
                User::Two => (&mut v, &u),
            };
            let side = SideInfo::new(
                (0..s.n()).map(|j| blk.known[j].then(|| other[blk.position(j)] as usize)).collect(),
            );
            let cw = codes.user(user).encoder.encode(&messages.user(user)[b], &side, b as u64)?;
            for (j, &bit) in cw.u.iter().enumerate() {
                own[blk.position(j)] = bit;
            }
            match user {
                User::One => user1.push(cw),
                User::Two => user2.push(cw),
            }
        }
    }
    Ok(finish_stream(u, v, user1, user2, model))
}

/// Decoding outcome of one block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOutcome<T> {
    pub result: DecodeResult<T>,
    pub error: bool,
}

/// Per-block decoding results of a stream. Frame `b` is the pair (user-1 block `b`, user-2
/// block `b`) and is in error when either block is.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamResult<T> {
    pub user1: Vec<BlockOutcome<T>>,
    pub user2: Vec<BlockOutcome<T>>,
    pub user1_errors: usize,
    pub user2_errors: usize,
    pub frame_errors: usize,
    pub glitches: usize,
}

impl<T> StreamResult<T> {
    pub fn frames(&self) -> usize {
        self.user1.len()
    }

    pub fn frame_error(&self, b: usize) -> bool {
        self.user1[b].error || self.user2[b].error
    }
}

fn tally<T>(user1: Vec<BlockOutcome<T>>, user2: Vec<BlockOutcome<T>>, glitches: usize) -> StreamResult<T> {
    let user1_errors = user1.iter().filter(|o| o.error).count();
    let user2_errors = user2.iter().filter(|o| o.error).count();
    let frame_errors = user1.iter().zip(&user2).filter(|(a, b)| a.error || b.error).count();
    StreamResult { user1, user2, user1_errors, user2_errors, frame_errors, glitches }
}

/// Decodes every block of both users independently with list size `list_size`.
pub fn decode_stream<T: Real>(
    y1: &[usize],
    y2: &[usize],
    layout: &FrameLayout,
    codes: &SchemeCodes<T>,
    list_size: usize,
    messages: &StreamMessages,
) -> Result<StreamResult<T>, SchemeError> {
    let s = &layout.schedule;
    check_messages(messages, s.num_blocks())?;
    for y in [y1, y2] {
        if y.len() != s.stream_len() {
            return Err(SchemeError::ObservationLength { got: y.len(), expected: s.stream_len() });
        }
    }
    if list_size == 0 {
        return Err(crate::coder::CoderError::ListSize.into());
    }
    let mut decoder = ListDecoder::new(s.n(), list_size);
    let mut outcomes = [Vec::new(), Vec::new()];
    for (user, y) in [(User::One, y1), (User::Two, y2)] {
        let code = codes.user(user);
        for blk in layout.blocks(user) {
            let obs: Vec<usize> = (0..s.n()).map(|j| y[blk.position(j)]).collect();
            let result = decoder.decode(&obs, &code.encoder, &code.law)?;
            let error = result.message_bits != messages.user(user)[blk.block];
            outcomes[user.index()].push(BlockOutcome { result, error });
        }
    }
    let [o1, o2] = outcomes;
    Ok(tally(o1, o2, 0))
}

/// Encodes a TSA stream, sends it through the structure's channel and decodes every block.
pub fn tsa_stream<T: Real, R: Rng + ?Sized>(
    messages: &StreamMessages,
    layout: &FrameLayout,
    codes: &SchemeCodes<T>,
    model: &InputStructure<T>,
    list_size: usize,
    rng: &mut R,
) -> Result<(EncodedStream, StreamResult<T>), SchemeError> {
    let stream = encode_stream(messages, layout, codes, model)?;
    let (y1, y2) = model.channel().transmit(&stream.x, rng)?;
    let mut result = decode_stream(&y1, &y2, layout, codes, list_size, messages)?;
    result.glitches = stream.glitches;
    Ok((stream, result))
}

/// One corner-point block coded directly: the leading user plainly, the other against it on the
/// same channel uses. `tags` are the shaping stream indices of user 1 and user 2.
pub fn corner_block<T: Real>(
    corner: Corner,
    m1: &[u8],
    m2: &[u8],
    codes: &SchemeCodes<T>,
    tags: (u64, u64),
) -> Result<(Codeword, Codeword), SchemeError> {
    let n = codes.n();
    let as_side = |bits: &[u8]| SideInfo::new(bits.iter().map(|&b| Some(b as usize)).collect());
    Ok(match corner {
        Corner::One => {
            let c1 = codes.user1.encoder.encode(m1, &SideInfo::erased(n), tags.0)?;
            let c2 = codes.user2.encoder.encode(m2, &as_side(&c1.u), tags.1)?;
            (c1, c2)
        }
        Corner::Two => {
            let c2 = codes.user2.encoder.encode(m2, &SideInfo::erased(n), tags.1)?;
            let c1 = codes.user1.encoder.encode(m1, &as_side(&c2.u), tags.0)?;
            (c1, c2)
        }
    })
}

/// Whether block `j` of a time-sharing stream with corner-2 fraction `alpha` uses corner 2.
///
/// Corner-2 blocks are spread evenly: block `j` is one iff `floor((j + 1) alpha) > floor(j alpha)`.
pub fn uses_corner_two(j: usize, alpha: f64) -> bool {
    const SLACK: f64 = 1e-9;
    ((j + 1) as f64 * alpha + SLACK).floor() > (j as f64 * alpha + SLACK).floor()
}

/// Time-sharing baseline: whole blocks at corner 1 or corner 2, a fraction `alpha` of them at
/// corner 2, encoded, sent through the structure's channel and decoded with list size `list_size`.
#[allow(clippy::too_many_arguments)]
pub fn time_sharing_stream<T: Real, R: Rng + ?Sized>(
    messages: &StreamMessages,
    alpha: f64,
    corner1: &SchemeCodes<T>,
    corner2: &SchemeCodes<T>,
    model: &InputStructure<T>,
    list_size: usize,
    rng: &mut R,
) -> Result<(EncodedStream, StreamResult<T>), SchemeError> {
    let blocks = messages.user1.len();
    check_messages(messages, blocks)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(SchemeError::BadAlpha(alpha));
    }
    let share = alpha * blocks as f64;
    if (share - share.round()).abs() > 1e-9 {
        return Err(SchemeError::NonIntegralSplit { alpha, blocks });
    }
    if list_size == 0 {
        return Err(crate::coder::CoderError::ListSize.into());
    }
    let n = corner1.n();
    let (mut u, mut v) = (Vec::with_capacity(blocks * n), Vec::with_capacity(blocks * n));
    let (mut cw1, mut cw2) = (Vec::with_capacity(blocks), Vec::with_capacity(blocks));
    let mut corners = Vec::with_capacity(blocks);
    for j in 0..blocks {
        let (corner, codes) = if uses_corner_two(j, alpha) { (Corner::Two, corner2) } else { (Corner::One, corner1) };
        let (c1, c2) = corner_block(corner, &messages.user1[j], &messages.user2[j], codes, (j as u64, j as u64))?;
        u.extend_from_slice(&c1.u);
        v.extend_from_slice(&c2.u);
        cw1.push(c1);
        cw2.push(c2);
        corners.push(codes);
    }
    let stream = finish_stream(u, v, cw1, cw2, model);
    let (y1, y2) = model.channel().transmit(&stream.x, rng)?;
    let mut decoder = ListDecoder::new(n, list_size);
    let mut outcomes = [Vec::new(), Vec::new()];
    for (j, codes) in corners.iter().enumerate() {
        for (user, y) in [(User::One, &y1), (User::Two, &y2)] {
            let code = codes.user(user);
            let result = decoder.decode(&y[j * n..(j + 1) * n], &code.encoder, &code.law)?;
            let error = result.message_bits != messages.user(user)[j];
            outcomes[user.index()].push(BlockOutcome { result, error });
        }
    }
    let [o1, o2] = outcomes;
    let glitches = stream.glitches;
    Ok((stream, tally(o1, o2, glitches)))
}
