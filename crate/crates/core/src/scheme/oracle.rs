//! Random-coding TSA experiment with typicality encoding and decoding, for tiny block lengths.

use rand::Rng;

use super::SchemeError;
use crate::prob::{is_jointly_typical, JointPmf};
use crate::regions::InputStructure;
use crate::rng::stream_rng;
use crate::scalar::Real;

/// Largest block length the oracle accepts.
pub const ORACLE_MAX_N: usize = 12;

/// Parameters of [`typicality_oracle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleParams {
    pub n: usize,
    /// Offset fraction; `n1 = round(alpha n)`.
    pub alpha: f64,
    /// Message rates in bits per channel use.
    pub r1: f64,
    pub r2: f64,
    /// Bin rates of the Gelfand-Pinsker parts.
    pub bin_rate1: f64,
    pub bin_rate2: f64,
    pub eps: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Codebooks of one user: binned part `binned[m][l]` (length `nb`) and plain part `plain[m]`.
struct Codebook {
    binned: Vec<Vec<Vec<usize>>>,
    plain: Vec<Vec<usize>>,
}

fn draw_string<T: Real, R: Rng + ?Sized>(p: &crate::prob::Pmf<T>, len: usize, rng: &mut R) -> Vec<usize> {
    (0..len).map(|_| p.sample(rng)).collect()
}

impl Codebook {
    fn draw<T: Real, R: Rng + ?Sized>(
        p: &crate::prob::Pmf<T>,
        messages: usize,
        bins: usize,
        nb: usize,
        np: usize,
        rng: &mut R,
    ) -> Self {
        let binned = (0..messages).map(|_| (0..bins).map(|_| draw_string(p, nb, rng)).collect()).collect();
        let plain = (0..messages).map(|_| draw_string(p, np, rng)).collect();
        Self { binned, plain }
    }

    /// First bin index whose binned word is jointly typical with `state`; 0 if none.
    fn bin_for<T: Real>(&self, m: usize, state: &[usize], joint: &JointPmf<T>, eps: T) -> usize {
        if state.is_empty() {
            return 0;
        }
        self.binned[m]
            .iter()
            .position(|w| is_jointly_typical(w, state, joint, eps).unwrap_or(false))
            .unwrap_or(0)
    }

    /// The unique message with some bin whose binned part is typical with the first segment of
    /// `y` and whose plain part is typical with the rest; `None` when there is no such message or
    /// more than one.
    fn decode<T: Real>(&self, y: &[usize], joint: &JointPmf<T>, eps: T) -> Option<usize> {
        let split = self.binned.first().and_then(|b| b.first()).map_or(0, Vec::len);
        let (y_binned, y_plain) = y.split_at(split);
        let typical = |w: &[usize], y: &[usize]| w.is_empty() || is_jointly_typical(w, y, joint, eps).unwrap_or(false);
        let mut found = None;
        for m in 0..self.plain.len() {
            if typical(&self.plain[m], y_plain) && self.binned[m].iter().any(|w| typical(w, y_binned)) {
                if found.is_some() {
                    return None;
                }
                found = Some(m);
            }
        }
        found
    }
}

fn count(rate: f64, len: usize) -> usize {
    ((rate * len as f64).exp2().round() as usize).max(1)
}

/// Empirical error rate of the random-coding TSA scheme.
///
/// Each trial draws fresh codebooks and a chain of four blocks (previous user-2 block, user-1
/// block, user-2 block, next user-1 block) so that both decoded blocks see a fully encoded
/// neighbourhood. Each receiver checks typicality separately on the binned and the plain
/// segment of its block. A trial is an error when either receiver fails to single out its
/// message.
pub fn typicality_oracle<T: Real>(model: &InputStructure<T>, params: &OracleParams) -> Result<f64, SchemeError> {
    let n = params.n;
    if n == 0 || n > ORACLE_MAX_N {
        return Err(SchemeError::OracleTooLarge(n));
    }
    if params.trials == 0 {
        return Err(SchemeError::NoTrials);
    }
    if !(0.0..=1.0).contains(&params.alpha) {
        return Err(SchemeError::BadAlpha(params.alpha));
    }
    let n1 = (params.alpha * n as f64).round() as usize;
    let n2 = n - n1;
    let eps = T::lit(params.eps);
    let joint = model.joint();
    let joint_vu = joint.transpose();
    let ju = model.joint_u_y1();
    let jv = model.joint_v_y2();
    let (pu, pv) = (joint.marginal_x(), joint.marginal_y());
    let (m1, m2) = (count(params.r1, n), count(params.r2, n));
    let (l1, l2) = (count(params.bin_rate1, n1), count(params.bin_rate2, n2));
    let mut errors = 0usize;
    for trial in 0..params.trials {
        let mut rng = stream_rng(params.seed, &[trial as u64]);
        // user 1: binned part first (n1), plain part (n2); user 2: binned (n2), plain (n1)
        let book1 = Codebook::draw(&pu, m1, l1, n1, n2, &mut rng);
        let book2 = Codebook::draw(&pv, m2, l2, n2, n1, &mut rng);
        let msg = |rng: &mut crate::rng::StreamRng, m: usize| rng.random_range(0..m);
        let (prev2, msg1, msg2, next1) = (msg(&mut rng, m2), msg(&mut rng, m1), msg(&mut rng, m2), msg(&mut rng, m1));

        let v_prev = &book2.plain[prev2];
        let b1 = book1.bin_for(msg1, v_prev, joint, eps);
        let u_gp = &book1.binned[msg1][b1];
        let u_plain = &book1.plain[msg1];
        let b2 = book2.bin_for(msg2, u_plain, &joint_vu, eps);
        let v_gp = &book2.binned[msg2][b2];
        let v_plain = &book2.plain[msg2];
        let bn = book1.bin_for(next1, v_plain, joint, eps);
        let u_next = &book1.binned[next1][bn];

        // channel uses: [v_prev | u_gp], [v_gp | u_plain], [v_plain | u_next]
        let pairs: Vec<(usize, usize)> = u_gp
            .iter()
            .zip(v_prev)
            .chain(u_plain.iter().zip(v_gp))
            .chain(u_next.iter().zip(v_plain))
            .map(|(&u, &v)| (u, v))
            .collect();
        let x: Vec<usize> = pairs.iter().map(|&(u, v)| model.map(u, v)).collect();
        let (y1, y2) = model.channel().transmit(&x, &mut rng)?;
        let y1_block = &y1[..n];
        let y2_block = &y2[n1..n1 + n];
        let d1 = book1.decode(y1_block, &ju, eps);
        let d2 = book2.decode(y2_block, &jv, eps);
        if d1 != Some(msg1) || d2 != Some(msg2) {
            errors += 1;
        }
    }
    Ok(errors as f64 / params.trials as f64)
}
