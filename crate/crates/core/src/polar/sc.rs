//! Single-path successive cancellation over the canonical (natural-order) transform.
//!
//! The engine is shared by the shaping encoder, the genie-aided profiler and the SC decoder;
//! only the message domain and the per-leaf decision rule differ.

use crate::scalar::Real;

/// Belief about one bit, combined along the butterfly tree.
pub(crate) trait BitMessage: Copy {
    /// Belief about `a ^ b` from beliefs about `a` and `b`.
    fn check(a: Self, b: Self) -> Self;
    /// Belief about `b` from two observations of it, the first XOR-ed with known `s`.
    fn var(a: Self, b: Self, s: u8) -> Self;
}

/// Normalized probability pair `[P(0), P(1)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Prob<T>(pub [T; 2]);

impl<T: Real> Prob<T> {
    #[inline]
    pub fn normalized(p0: T, p1: T) -> Self {
        let s = p0 + p1;
        if s > T::zero() && s.is_finite() {
            Prob([p0 / s, p1 / s])
        } else {
            // contradictory evidence: no preference either way
            let h = T::lit(0.5);
            Prob([h, h])
        }
    }

    #[inline]
    pub fn p1(self) -> T {
        self.0[1]
    }
}

impl<T: Real> BitMessage for Prob<T> {
    #[inline]
    fn check(a: Self, b: Self) -> Self {
        let [a0, a1] = a.0;
        let [b0, b1] = b.0;
        Prob::normalized(a0 * b0 + a1 * b1, a0 * b1 + a1 * b0)
    }

    #[inline]
    fn var(a: Self, b: Self, s: u8) -> Self {
        let s = s as usize;
        Prob::normalized(a.0[s] * b.0[0], a.0[1 ^ s] * b.0[1])
    }
}

/// Log-likelihood ratio `ln(P(0) / P(1))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Llr<T>(pub T);

/// `ln(1 + e^{-|x|})`
#[inline]
fn log1p_exp_neg<T: Real>(x: T) -> T {
    (-x.abs()).exp().ln_1p()
}

impl<T: Real> BitMessage for Llr<T> {
    #[inline]
    fn check(a: Self, b: Self) -> Self {
        // exact box-plus
        let (x, y) = (a.0, b.0);
        let sign = if (x < T::zero()) != (y < T::zero()) { -T::one() } else { T::one() };
        Llr(sign * x.abs().min(y.abs()) + log1p_exp_neg(x + y) - log1p_exp_neg(x - y))
    }

    #[inline]
    fn var(a: Self, b: Self, s: u8) -> Self {
        if s == 0 {
            Llr(b.0 + a.0)
        } else {
            Llr(b.0 - a.0)
        }
    }
}

/// Cost in bits of deciding `bit` against LLR `llr`: `-log2 P(bit)`.
#[inline]
pub(crate) fn decision_cost<T: Real>(llr: T, bit: u8) -> T {
    // softplus(-(1 - 2 bit) llr) / ln 2
    let z = if bit == 0 { -llr } else { llr };
    let sp = if z > T::zero() { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
    sp * T::LOG2_E()
}

/// Reusable scratch for [`run`].
pub(crate) struct ScScratch<M> {
    levels: Vec<Vec<M>>,
}

impl<M: BitMessage> ScScratch<M> {
    pub fn new(n: usize, fill: M) -> Self {
        let mut levels = Vec::new();
        let mut len = n / 2;
        while len >= 1 {
            levels.push(vec![fill; len]);
            len /= 2;
        }
        Self { levels }
    }
}

/// Runs successive cancellation over canonical `leaves`.
///
/// `decide(c, belief)` returns the bit at canonical step `c`. On return `codeword` holds the
/// re-encoded canonical codeword `u G_n`.
pub(crate) fn run<M, F>(leaves: &[M], scratch: &mut ScScratch<M>, codeword: &mut [u8], mut decide: F)
where
    M: BitMessage,
    F: FnMut(usize, M) -> u8,
{
    debug_assert_eq!(leaves.len(), codeword.len());
    recurse(leaves, &mut scratch.levels, codeword, 0, &mut decide);
}

fn recurse<M, F>(msgs: &[M], levels: &mut [Vec<M>], out: &mut [u8], base: usize, decide: &mut F)
where
    M: BitMessage,
    F: FnMut(usize, M) -> u8,
{
    let n = msgs.len();
    if n == 1 {
        out[0] = decide(base, msgs[0]);
        return;
    }
    let half = n / 2;
    let (buf, rest) = levels.split_first_mut().expect("scratch sized for block");
    let buf = &mut buf[..half];
    let (lo, hi) = msgs.split_at(half);
    for ((d, &a), &b) in buf.iter_mut().zip(lo).zip(hi) {
        *d = M::check(a, b);
    }
    let (out_lo, out_hi) = out.split_at_mut(half);
    recurse(buf, rest, out_lo, base, decide);
    for (((d, &a), &b), &s) in buf.iter_mut().zip(lo).zip(hi).zip(out_lo.iter()) {
        *d = M::var(a, b, s);
    }
    recurse(buf, rest, out_hi, base + half, decide);
    for (a, &b) in out_lo.iter_mut().zip(out_hi.iter()) {
        *a ^= b;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polar::transform;
    use crate::rng::stream_rng;
    use rand::Rng;

    /// Exact posterior of `u_i` given `u^{i-1}` by enumerating every completion.
    fn brute_posterior(leaves: &[[f64; 2]], prefix: &[u8]) -> [f64; 2] {
        let n = leaves.len();
        let i = prefix.len();
        let mut p = [0.0; 2];
        for tail in 0..(1u32 << (n - i)) {
            let mut u = prefix.to_vec();
            u.extend((0..n - i).map(|k| ((tail >> k) & 1) as u8));
            let x = transform(&u).unwrap();
            let w: f64 = x.iter().zip(leaves).map(|(&b, l)| l[b as usize]).product();
            p[u[i] as usize] += w;
        }
        let s = p[0] + p[1];
        [p[0] / s, p[1] / s]
    }

    #[test]
    fn posteriors_match_enumeration() {
        let mut rng = stream_rng(11, &[]);
        for n in [2usize, 4, 8] {
            for _ in 0..20 {
                let leaves: Vec<[f64; 2]> = (0..n)
                    .map(|_| {
                        let p: f64 = rng.random_range(0.05..0.95);
                        [1.0 - p, p]
                    })
                    .collect();
                let truth: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
                let msgs: Vec<_> = leaves.iter().map(|&l| Prob(l)).collect();
                let mut scratch = ScScratch::new(n, Prob([0.5, 0.5]));
                let mut code = vec![0u8; n];
                let mut seen = Vec::new();
                run(&msgs, &mut scratch, &mut code, |c, m: Prob<f64>| {
                    seen.push(m.0);
                    truth[c]
                });
                for (i, got) in seen.iter().enumerate() {
                    let want = brute_posterior(&leaves, &truth[..i]);
                    assert!((got[1] - want[1]).abs() < 1e-12, "n={n} i={i}");
                }
                assert_eq!(code, transform(&truth).unwrap());

                // same beliefs in the LLR domain
                let llrs: Vec<_> = leaves.iter().map(|l| Llr((l[0] / l[1]).ln())).collect();
                let mut scratch = ScScratch::new(n, Llr(0.0));
                let mut k = 0;
                run(&llrs, &mut scratch, &mut code, |c, m: Llr<f64>| {
                    let p1 = 1.0 / (1.0 + m.0.exp());
                    assert!((p1 - seen[k][1]).abs() < 1e-9);
                    k += 1;
                    truth[c]
                });
            }
        }
    }

    #[test]
    fn cost_is_negative_log_probability() {
        for llr in [-30.0, -2.0, 0.0, 0.7, 25.0] {
            let p0 = 1.0 / (1.0 + (-llr as f64).exp());
            assert!((decision_cost(llr, 0) + p0.log2()).abs() < 1e-9);
            let p1 = 1.0 / (1.0 + (llr as f64).exp());
            assert!((decision_cost(llr, 1) + p1.log2()).abs() < 1e-9);
        }
    }
}
