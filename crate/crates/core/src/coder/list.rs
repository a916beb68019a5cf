//! Successive-cancellation list decoder with lazy copying of intermediate arrays.
//!
//! Layer `l` (`1..=m`) holds LLR arrays and partial-sum pairs of length `2^(m-l)`; layer 0 is the
//! channel, shared by all paths. Pairs combine positions `b` and `b + 2^(m-l)`, which is the
//! natural-order recursion of [`crate::polar::sc`], so a list of one reproduces SC exactly.

use std::cmp::Ordering;

use super::{CoderError, DecodeResult, DecoderLaw, EncoderState};
use crate::polar::sc::{decision_cost, BitMessage, Llr};
use crate::polar::BitRole;
use crate::scalar::Real;

struct Layer<T> {
    llr: Vec<Vec<T>>,
    bits: Vec<Vec<[u8; 2]>>,
    refs: Vec<usize>,
    free: Vec<usize>,
    /// Array used by each path.
    owner: Vec<usize>,
}

impl<T: Real> Layer<T> {
    fn new(len: usize, list: usize) -> Self {
        Self {
            llr: vec![vec![T::zero(); len]; list],
            bits: vec![vec![[0; 2]; len]; list],
            refs: vec![0; list],
            free: (0..list).rev().collect(),
            owner: vec![usize::MAX; list],
        }
    }

    fn reset(&mut self) {
        self.refs.iter_mut().for_each(|r| *r = 0);
        self.free.clear();
        self.free.extend((0..self.refs.len()).rev());
    }

    /// Array of `path`, copied first if another path shares it.
    fn writable(&mut self, path: usize) -> usize {
        let s = self.owner[path];
        if self.refs[s] == 1 {
            return s;
        }
        let t = self.free.pop().expect("list pool sized for every path");
        copy_within(&mut self.llr, s, t);
        copy_within(&mut self.bits, s, t);
        self.refs[s] -= 1;
        self.refs[t] = 1;
        self.owner[path] = t;
        t
    }
}

fn copy_within<X: Copy>(arrays: &mut [Vec<X>], from: usize, to: usize) {
    let (src, dst) = if from < to {
        let (lo, hi) = arrays.split_at_mut(to);
        (&lo[from], &mut hi[0])
    } else {
        let (lo, hi) = arrays.split_at_mut(from);
        (&hi[0], &mut lo[to])
    };
    dst.copy_from_slice(src);
}

#[derive(Clone, Copy)]
struct Candidate<T> {
    metric: T,
    path: usize,
    /// 0 for the bit the path itself prefers.
    rank: u8,
    bit: u8,
}

/// Reusable SCL decoder for one block length and list size.
pub struct ListDecoder<T> {
    n: usize,
    m: usize,
    list: usize,
    channel: Vec<T>,
    layers: Vec<Layer<T>>,
    active: Vec<bool>,
    free_paths: Vec<usize>,
    metric: Vec<T>,
    u_bar: Vec<Vec<u8>>,
    candidates: Vec<Candidate<T>>,
}

impl<T: Real> ListDecoder<T> {
    pub fn new(n: usize, list: usize) -> Self {
        assert!(n.is_power_of_two() && list >= 1);
        let m = n.trailing_zeros() as usize;
        // index 0 is a placeholder for the channel layer
        let layers = (0..=m).map(|l| Layer::new(if l == 0 { 0 } else { n >> l }, list)).collect();
        Self {
            n,
            m,
            list,
            channel: vec![T::zero(); n],
            layers,
            active: vec![false; list],
            free_paths: Vec::new(),
            metric: vec![T::zero(); list],
            u_bar: vec![vec![0; n]; list],
            candidates: Vec::with_capacity(2 * list),
        }
    }

    pub fn list_size(&self) -> usize {
        self.list
    }

    pub fn decode(&mut self, y: &[usize], st: &EncoderState<T>, law: &DecoderLaw<T>) -> Result<DecodeResult<T>, CoderError> {
        if st.n() != self.n {
            return Err(CoderError::CodeMismatch { code: st.n(), transform: self.n });
        }
        let leaves = law.leaves(y, st.transform())?;
        for (d, l) in self.channel.iter_mut().zip(&leaves) {
            *d = l.0;
        }
        self.init();
        let canon = st.transform().canonical_to_actual();
        let roles = st.roles();
        for phase in 0..self.n {
            for path in 0..self.list {
                if self.active[path] {
                    self.calc(self.m, phase, path);
                }
            }
            let i = canon[phase];
            match roles[i] {
                BitRole::Frozen => {
                    for path in 0..self.list {
                        if self.active[path] {
                            self.set_bit(path, phase, i, 0);
                        }
                    }
                }
                _ => self.branch(phase, i),
            }
            if phase % 2 == 1 {
                for path in 0..self.list {
                    if self.active[path] {
                        self.update_bits(self.m, phase, path);
                    }
                }
            }
        }
        let best = (0..self.list)
            .filter(|&p| self.active[p])
            .min_by(|&a, &b| cmp_metric(self.metric[a], self.metric[b]).then(a.cmp(&b)))
            .expect("at least one surviving path");
        let u_bar = self.u_bar[best].clone();
        let metric = self.metric[best];
        Ok(DecodeResult { message_bits: st.extract(&u_bar), path_metric: metric, success_flag: metric.is_finite(), u_bar })
    }

    fn init(&mut self) {
        self.active.iter_mut().for_each(|a| *a = false);
        self.free_paths.clear();
        self.free_paths.extend((1..self.list).rev());
        self.active[0] = true;
        self.metric[0] = T::zero();
        for layer in &mut self.layers[1..] {
            layer.reset();
            let s = layer.free.pop().unwrap();
            layer.refs[s] = 1;
            layer.owner[0] = s;
        }
    }

    fn leaf_llr(&self, path: usize) -> T {
        let top = &self.layers[self.m];
        top.llr[top.owner[path]][0]
    }

    fn set_bit(&mut self, path: usize, phase: usize, index: usize, bit: u8) {
        let llr = self.leaf_llr(path);
        self.metric[path] = self.metric[path] + decision_cost(llr, bit);
        let top = &mut self.layers[self.m];
        let s = top.writable(path);
        top.bits[s][0][phase % 2] = bit;
        self.u_bar[path][index] = bit;
    }

    fn branch(&mut self, phase: usize, index: usize) {
        self.candidates.clear();
        for path in 0..self.list {
            if !self.active[path] {
                continue;
            }
            let llr = self.leaf_llr(path);
            let preferred = u8::from(llr < T::zero());
            for (rank, bit) in [(0, preferred), (1, 1 - preferred)] {
                self.candidates.push(Candidate { metric: self.metric[path] + decision_cost(llr, bit), path, rank, bit });
            }
        }
        self.candidates.sort_by(|a, b| {
            cmp_metric(a.metric, b.metric).then(a.path.cmp(&b.path)).then(a.rank.cmp(&b.rank))
        });
        self.candidates.truncate(self.list);
        let mut keep = vec![[false; 2]; self.list];
        for c in &self.candidates {
            keep[c.path][c.bit as usize] = true;
        }
        for path in 0..self.list {
            if self.active[path] && keep[path] == [false, false] {
                self.kill(path);
            }
        }
        let survivors: Vec<usize> = (0..self.list).filter(|&p| self.active[p]).collect();
        for path in survivors {
            match keep[path] {
                [true, true] => {
                    let twin = self.clone_path(path);
                    self.set_bit(path, phase, index, 0);
                    self.set_bit(twin, phase, index, 1);
                }
                [true, false] => self.set_bit(path, phase, index, 0),
                [false, true] => self.set_bit(path, phase, index, 1),
                [false, false] => unreachable!(),
            }
        }
    }

    fn kill(&mut self, path: usize) {
        self.active[path] = false;
        self.free_paths.push(path);
        for layer in &mut self.layers[1..] {
            let s = layer.owner[path];
            layer.refs[s] -= 1;
            if layer.refs[s] == 0 {
                layer.free.push(s);
            }
        }
    }

    fn clone_path(&mut self, path: usize) -> usize {
        let twin = self.free_paths.pop().expect("fewer than list-size paths active");
        self.active[twin] = true;
        self.metric[twin] = self.metric[path];
        copy_within(&mut self.u_bar, path, twin);
        for layer in &mut self.layers[1..] {
            let s = layer.owner[path];
            layer.owner[twin] = s;
            layer.refs[s] += 1;
        }
        twin
    }

    fn calc(&mut self, l: usize, phase: usize, path: usize) {
        if l == 0 {
            return;
        }
        let psi = phase >> 1;
        if phase % 2 == 0 {
            self.calc(l - 1, psi, path);
        }
        let half = self.n >> l;
        let (below, rest) = self.layers.split_at_mut(l);
        let layer = &mut rest[0];
        let s = layer.writable(path);
        let src: &[T] = if l == 1 {
            &self.channel
        } else {
            let b = &below[l - 1];
            &b.llr[b.owner[path]]
        };
        let (lo, hi) = src.split_at(half);
        let out = &mut layer.llr[s];
        if phase % 2 == 0 {
            for ((d, &a), &b) in out.iter_mut().zip(lo).zip(hi) {
                *d = Llr::check(Llr(a), Llr(b)).0;
            }
        } else {
            let bits = &layer.bits[s];
            for (((d, &a), &b), pair) in out.iter_mut().zip(lo).zip(hi).zip(bits) {
                *d = Llr::var(Llr(a), Llr(b), pair[0]).0;
            }
        }
    }

    fn update_bits(&mut self, l: usize, phase: usize, path: usize) {
        debug_assert!(phase % 2 == 1);
        if l <= 1 {
            // the channel layer keeps no partial sums
            return;
        }
        let psi = phase >> 1;
        let half = self.n >> l;
        let (below, rest) = self.layers.split_at_mut(l);
        let layer = &rest[0];
        let src = &layer.bits[layer.owner[path]];
        let target = &mut below[l - 1];
        let t = target.writable(path);
        let dst = &mut target.bits[t];
        let col = psi % 2;
        for (b, pair) in src.iter().enumerate().take(half) {
            dst[b][col] = pair[0] ^ pair[1];
            dst[b + half][col] = pair[1];
        }
        if psi % 2 == 1 {
            self.update_bits(l - 1, psi, path);
        }
    }
}

#[inline]
fn cmp_metric<T: Real>(a: T, b: T) -> Ordering {
    a.partial_cmp(&b).unwrap_or_else(|| a.is_nan().cmp(&b.is_nan()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coder::{sc_decode, scl_decode, SideInfo};
    use crate::polar::{CodeSpec, PolarTransform};
    use crate::prob::{ConditionalPmf, Pmf};
    use crate::rng::stream_rng;
    use rand::seq::SliceRandom;
    use rand::Rng;

    /// Exhaustive maximum likelihood over all messages of a code without shaping bits.
    fn ml_metric(y: &[usize], st: &EncoderState<f64>, law: &DecoderLaw<f64>) -> f64 {
        let k = st.code().data.len();
        let mut best = f64::INFINITY;
        for m in 0..(1u32 << k) {
            let msg: Vec<u8> = (0..k).map(|j| ((m >> j) & 1) as u8).collect();
            let mut u_bar = vec![0u8; st.n()];
            for (j, &i) in st.code().data.iter().enumerate() {
                u_bar[i] = msg[j];
            }
            let metric = super::super::path_metric(&u_bar, y, st.transform(), law).unwrap();
            best = best.min(metric);
        }
        best
    }

    fn setup(n: usize, k: usize, seed: u64) -> (EncoderState<f64>, DecoderLaw<f64>) {
        let mut rng = stream_rng(seed, &[]);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let code = CodeSpec::from_sets(n, idx[..k].to_vec(), vec![], idx[k..].to_vec()).unwrap();
        let prior = Pmf::bernoulli(0.5).unwrap();
        let st = EncoderState::without_side(code, PolarTransform::butterfly_first(n).unwrap(), &prior, 0).unwrap();
        let law = DecoderLaw::new(&prior, &ConditionalPmf::bsc(0.12).unwrap()).unwrap();
        (st, law)
    }

    #[test]
    fn list_one_equals_sc() {
        let mut rng = stream_rng(21, &[]);
        for trial in 0..200 {
            let n = 1 << rng.random_range(1..7);
            let prior = Pmf::bernoulli(rng.random_range(0.1..0.9)).unwrap();
            let mut roles: Vec<usize> = (0..n).collect();
            roles.shuffle(&mut rng);
            let (a, b) = (rng.random_range(0..=n), rng.random_range(0..=n));
            let (a, b) = (a.min(b), a.max(b));
            let code = CodeSpec::from_sets(n, roles[..a].to_vec(), roles[a..b].to_vec(), roles[b..].to_vec()).unwrap();
            let t = if trial % 2 == 0 { PolarTransform::butterfly_first(n) } else { PolarTransform::adjacent_first(n) };
            let st = EncoderState::without_side(code, t.unwrap(), &prior, 0).unwrap();
            let law = DecoderLaw::new(&prior, &ConditionalPmf::bsc(rng.random_range(0.01..0.3)).unwrap()).unwrap();
            let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
            assert_eq!(scl_decode(&y, &st, &law, 1).unwrap(), sc_decode(&y, &st, &law).unwrap());
        }
    }

    #[test]
    fn full_list_is_maximum_likelihood() {
        // with 2^k <= L paths nothing is ever pruned, so the best path is the ML message
        for seed in 0..30 {
            let (st, law) = setup(16, 4, seed);
            let mut rng = stream_rng(seed, &[1]);
            let y: Vec<usize> = (0..16).map(|_| rng.random_range(0..2)).collect();
            let r = scl_decode(&y, &st, &law, 16).unwrap();
            let direct: f64 = super::super::path_metric(&r.u_bar, &y, st.transform(), &law).unwrap();
            assert!((direct - r.path_metric).abs() < 1e-9, "seed {seed}: {direct} vs {}", r.path_metric);
            // ties between messages are common on a BSC, so compare likelihoods
            assert!((r.path_metric - ml_metric(&y, &st, &law)).abs() < 1e-9);
        }
    }

    #[test]
    fn larger_lists_do_not_lose_on_average() {
        let (st, law) = setup(64, 32, 3);
        let mut rng = stream_rng(4, &[]);
        let mut errors = [0usize; 2];
        for block in 0..400 {
            let msg: Vec<u8> = (0..32).map(|_| rng.random_range(0..2)).collect();
            let cw = st.encode(&msg, &SideInfo::erased(64), block).unwrap();
            let y: Vec<usize> = cw.u.iter().map(|&b| (b ^ u8::from(rng.random::<f64>() < 0.06)) as usize).collect();
            for (e, list) in errors.iter_mut().zip([1, 8]) {
                *e += usize::from(scl_decode(&y, &st, &law, list).unwrap().message_bits != msg);
            }
        }
        assert!(errors[1] <= errors[0], "{errors:?}");
        assert!(errors[0] > 0);
    }

    #[test]
    fn decoder_is_reusable() {
        let (st, law) = setup(32, 10, 5);
        let mut dec = ListDecoder::new(32, 4);
        let mut rng = stream_rng(6, &[]);
        for _ in 0..20 {
            let y: Vec<usize> = (0..32).map(|_| rng.random_range(0..2)).collect();
            assert_eq!(dec.decode(&y, &st, &law).unwrap(), scl_decode(&y, &st, &law, 4).unwrap());
        }
    }
}
