//! Shaping / Gelfand-Pinsker polar encoder and SC / SCL decoders for a single user block.

mod list;

use std::io::Write;

use rand::Rng;
use thiserror::Error;

use crate::polar::sc::{self, decision_cost, Llr, Prob, ScScratch};
use crate::polar::{BitRole, CodeSpec, PolarError, PolarTransform};
use crate::prob::{ConditionalPmf, Pmf, ProbError};
use crate::rng::stream_rng;
use crate::scalar::Real;

pub use list::ListDecoder;

/// Probabilities below this are raised to it before taking logarithms.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CoderError {
    #[error("message has {got} bits, code carries {expected}")]
    MessageLength { got: usize, expected: usize },
    #[error("side information has length {got}, block length is {expected}")]
    SideLength { got: usize, expected: usize },
    #[error("observation has length {got}, block length is {expected}")]
    ObservationLength { got: usize, expected: usize },
    #[error("side symbol {symbol} at position {position} outside alphabet of size {size}")]
    SideSymbol { position: usize, symbol: usize, size: usize },
    #[error("observation {symbol} at position {position} has zero probability under the decoder law")]
    ZeroLikelihood { position: usize, symbol: usize },
    #[error("observation {symbol} at position {position} outside alphabet of size {size}")]
    ObservationSymbol { position: usize, symbol: usize, size: usize },
    #[error("list size must be at least 1")]
    ListSize,
    #[error("code length {code} does not match transform length {transform}")]
    CodeMismatch { code: usize, transform: usize },
    #[error("conditional law must have binary output, has {0}")]
    NotBinary(usize),
    #[error(transparent)]
    Polar(#[from] PolarError),
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Side information string over `V ∪ {⊥}`; `None` is `⊥` (symbol not known at encoding time).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SideInfo {
    symbols: Vec<Option<usize>>,
}

impl SideInfo {
    pub fn new(symbols: Vec<Option<usize>>) -> Self {
        Self { symbols }
    }

    /// Nothing known.
    pub fn erased(n: usize) -> Self {
        Self { symbols: vec![None; n] }
    }

    /// Everything known.
    pub fn known(symbols: &[usize]) -> Self {
        Self { symbols: symbols.iter().map(|&s| Some(s)).collect() }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[Option<usize>] {
        &self.symbols
    }

    pub fn known_count(&self) -> usize {
        self.symbols.iter().filter(|s| s.is_some()).count()
    }
}

/// Everything the encoder needs for one user: code, transform, `P_{U|V'}` and shaping seed.
///
/// `conditional` has one row per side symbol plus a final row for `⊥`, which must equal the
/// marginal `P_U`; its output alphabet is binary.
#[derive(Debug, Clone)]
pub struct EncoderState<T> {
    code: CodeSpec,
    transform: PolarTransform,
    conditional: ConditionalPmf<T>,
    shaping_seed: u64,
    roles: Vec<BitRole>,
    data_slot: Vec<usize>,
}

impl<T: Real> EncoderState<T> {
    pub fn new(code: CodeSpec, transform: PolarTransform, conditional: ConditionalPmf<T>, shaping_seed: u64) -> Result<Self, CoderError> {
        if code.n != transform.n() {
            return Err(CoderError::CodeMismatch { code: code.n, transform: transform.n() });
        }
        if conditional.output_size() != 2 {
            return Err(CoderError::NotBinary(conditional.output_size()));
        }
        let roles = code.roles();
        let mut data_slot = vec![usize::MAX; code.n];
        for (j, &i) in code.data.iter().enumerate() {
            data_slot[i] = j;
        }
        Ok(Self { code, transform, conditional, shaping_seed, roles, data_slot })
    }

    /// State for a code without side information: `prior` is `P_U`.
    pub fn without_side(code: CodeSpec, transform: PolarTransform, prior: &Pmf<T>, shaping_seed: u64) -> Result<Self, CoderError> {
        let rows = ConditionalPmf::from_rows(vec![prior.clone()])?;
        Self::new(code, transform, rows, shaping_seed)
    }

    pub fn code(&self) -> &CodeSpec {
        &self.code
    }

    pub fn transform(&self) -> &PolarTransform {
        &self.transform
    }

    pub fn conditional(&self) -> &ConditionalPmf<T> {
        &self.conditional
    }

    pub fn shaping_seed(&self) -> u64 {
        self.shaping_seed
    }

    pub fn n(&self) -> usize {
        self.code.n
    }

    /// Marginal `P_U`, the `⊥` row.
    pub fn prior(&self) -> &Pmf<T> {
        self.conditional.row(self.conditional.input_size() - 1)
    }

    pub fn roles(&self) -> &[BitRole] {
        &self.roles
    }

    fn side_leaves(&self, side: &SideInfo) -> Result<Vec<Prob<T>>, CoderError> {
        let n = self.n();
        if side.len() != n {
            return Err(CoderError::SideLength { got: side.len(), expected: n });
        }
        let erased = self.conditional.input_size() - 1;
        self.transform
            .canonical_to_actual()
            .iter()
            .map(|&i| {
                let s = side.symbols[i].unwrap_or(erased);
                if s >= erased && side.symbols[i].is_some() {
                    return Err(CoderError::SideSymbol { position: i, symbol: s, size: erased });
                }
                let row = self.conditional.row(s).probs();
                Ok(Prob([row[0], row[1]]))
            })
            .collect()
    }

    /// Encodes `msg` given `side`; shaping draws come from the stream `(shaping_seed, block)`.
    pub fn encode(&self, msg: &[u8], side: &SideInfo, block: u64) -> Result<Codeword, CoderError> {
        self.encode_inner(msg, side, block, None)
    }

    /// Like [`encode`](Self::encode) and also records every decision in decoding order.
    pub fn encode_traced(&self, msg: &[u8], side: &SideInfo, block: u64) -> Result<(Codeword, Vec<TraceRow>), CoderError> {
        let mut trace = Vec::with_capacity(self.n());
        let cw = self.encode_inner(msg, side, block, Some(&mut trace))?;
        Ok((cw, trace))
    }

    fn encode_inner(&self, msg: &[u8], side: &SideInfo, block: u64, mut trace: Option<&mut Vec<TraceRow>>) -> Result<Codeword, CoderError> {
        if msg.len() != self.code.data.len() {
            return Err(CoderError::MessageLength { got: msg.len(), expected: self.code.data.len() });
        }
        let n = self.n();
        let leaves = self.side_leaves(side)?;
        let half = T::lit(0.5);
        let mut scratch = ScScratch::new(n, Prob([half, half]));
        let mut canonical = vec![0u8; n];
        let mut u_bar = vec![0u8; n];
        let mut rng = stream_rng(self.shaping_seed, &[block]);
        let canon = self.transform.canonical_to_actual();
        sc::run(&leaves, &mut scratch, &mut canonical, |c, m: Prob<T>| {
            let i = canon[c];
            let p1 = m.p1().as_f64();
            let bit = match self.roles[i] {
                BitRole::Data => msg[self.data_slot[i]] & 1,
                BitRole::Frozen => 0,
                BitRole::Shaping => u8::from(rng.random::<f64>() < p1),
            };
            if let Some(t) = trace.as_deref_mut() {
                t.push(TraceRow { index: i, role: self.roles[i], p1, bit });
            }
            u_bar[i] = bit;
            bit
        });
        let mut u = vec![0u8; n];
        for (c, &b) in canonical.iter().enumerate() {
            u[canon[c]] = b;
        }
        Ok(Codeword { u, u_bar })
    }

    /// Message bits carried by a transform-domain vector.
    pub fn extract(&self, u_bar: &[u8]) -> Vec<u8> {
        self.code.data.iter().map(|&i| u_bar[i]).collect()
    }
}

/// Encoder output: channel-domain `u` and transform-domain `u_bar` with `u = u_bar G_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codeword {
    pub u: Vec<u8>,
    pub u_bar: Vec<u8>,
}

/// One successive-cancellation decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub index: usize,
    pub role: BitRole,
    /// Posterior probability of a one.
    pub p1: f64,
    pub bit: u8,
}

/// Writes `index,role,p1,bit` rows.
pub fn write_trace_csv<W: Write>(out: &mut W, rows: &[TraceRow]) -> Result<(), CoderError> {
    writeln!(out, "index,role,p1,bit")?;
    for r in rows {
        let role = match r.role {
            BitRole::Data => "data",
            BitRole::Shaping => "shaping",
            BitRole::Frozen => "frozen",
        };
        writeln!(out, "{},{},{:e},{}", r.index, role, r.p1, r.bit)?;
    }
    Ok(())
}

/// Replaces zero entries of a law so that every output has positive probability under every
/// input: `W_s = (1 - eps) W + eps / (|Y| - 1) (1 - W)`. Laws without zeros are returned as is.
pub fn smooth_law<T: Real>(law: &ConditionalPmf<T>, eps: T) -> Result<ConditionalPmf<T>, CoderError> {
    let ny = law.output_size();
    let has_zero = law.rows().iter().any(|r| r.probs().iter().any(|&p| p == T::zero()));
    if !has_zero || ny < 2 || eps == T::zero() {
        return Ok(law.clone());
    }
    if !(eps > T::zero() && eps < T::one()) {
        return Err(ProbError::OutOfRange { index: 0, value: eps.as_f64() }.into());
    }
    let spread = eps / T::from_usize(ny - 1).unwrap();
    let rows = law
        .rows()
        .iter()
        .map(|r| r.probs().iter().map(|&p| (T::one() - eps) * p + spread * (T::one() - p)).collect())
        .collect();
    Ok(ConditionalPmf::new(rows)?)
}

/// Per-symbol leaf LLRs `ln(P_U(0) W(y|0) / P_U(1) W(y|1))` with the probability floor applied.
#[derive(Debug, Clone)]
pub struct DecoderLaw<T> {
    llr: Vec<Option<T>>,
    posterior: Vec<Option<[T; 2]>>,
}

impl<T: Real> DecoderLaw<T> {
    pub fn new(prior: &Pmf<T>, law: &ConditionalPmf<T>) -> Result<Self, CoderError> {
        if law.input_size() != 2 || prior.alphabet_size() != 2 {
            return Err(CoderError::NotBinary(law.input_size()));
        }
        let floor = T::lit(PROB_FLOOR);
        let mut llr = Vec::new();
        let mut posterior = Vec::new();
        for y in 0..law.output_size() {
            let a = prior.prob(0) * law.prob(0, y);
            let b = prior.prob(1) * law.prob(1, y);
            if a == T::zero() && b == T::zero() {
                llr.push(None);
                posterior.push(None);
            } else {
                let (a, b) = (a.max(floor), b.max(floor));
                llr.push(Some((a / b).ln()));
                posterior.push(Some([a / (a + b), b / (a + b)]));
            }
        }
        Ok(Self { llr, posterior })
    }

    pub fn output_size(&self) -> usize {
        self.llr.len()
    }

    fn leaf(&self, position: usize, y: usize) -> Result<T, CoderError> {
        match self.llr.get(y) {
            None => Err(CoderError::ObservationSymbol { position, symbol: y, size: self.llr.len() }),
            Some(None) => Err(CoderError::ZeroLikelihood { position, symbol: y }),
            Some(Some(l)) => Ok(*l),
        }
    }

    /// Channel LLRs in canonical leaf order.
    pub(crate) fn leaves(&self, y: &[usize], t: &PolarTransform) -> Result<Vec<Llr<T>>, CoderError> {
        if y.len() != t.n() {
            return Err(CoderError::ObservationLength { got: y.len(), expected: t.n() });
        }
        t.canonical_to_actual().iter().map(|&i| self.leaf(i, y[i]).map(Llr)).collect()
    }
}

/// Output of a block decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult<T> {
    pub message_bits: Vec<u8>,
    /// `-log2 P(u_bar | y)` of the returned path under the decoder law.
    pub path_metric: T,
    /// The returned path has finite metric (it is consistent with the observation).
    pub success_flag: bool,
    pub u_bar: Vec<u8>,
}

/// `-log2 P(u_bar | y)` computed directly from `u = u_bar G_n` and the per-position posteriors.
pub fn path_metric<T: Real>(u_bar: &[u8], y: &[usize], t: &PolarTransform, law: &DecoderLaw<T>) -> Result<T, CoderError> {
    if y.len() != t.n() {
        return Err(CoderError::ObservationLength { got: y.len(), expected: t.n() });
    }
    let u = t.transform(u_bar)?;
    let mut total = T::zero();
    for (i, (&b, &s)) in u.iter().zip(y).enumerate() {
        law.leaf(i, s)?;
        let p = law.posterior[s].expect("checked above")[b as usize];
        total = total - p.log2();
    }
    Ok(total)
}

/// Successive-cancellation decoding: frozen bits are 0, every other bit takes its posterior
/// argmax (ties to 0).
pub fn sc_decode<T: Real>(y: &[usize], st: &EncoderState<T>, law: &DecoderLaw<T>) -> Result<DecodeResult<T>, CoderError> {
    sc_decode_inner(y, st, law, None)
}

/// [`sc_decode`] with a per-decision trace.
pub fn sc_decode_traced<T: Real>(
    y: &[usize],
    st: &EncoderState<T>,
    law: &DecoderLaw<T>,
) -> Result<(DecodeResult<T>, Vec<TraceRow>), CoderError> {
    let mut trace = Vec::with_capacity(st.n());
    let r = sc_decode_inner(y, st, law, Some(&mut trace))?;
    Ok((r, trace))
}

fn sc_decode_inner<T: Real>(
    y: &[usize],
    st: &EncoderState<T>,
    law: &DecoderLaw<T>,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<DecodeResult<T>, CoderError> {
    let t = st.transform();
    let leaves = law.leaves(y, t)?;
    let n = t.n();
    let mut scratch = ScScratch::new(n, Llr(T::zero()));
    let mut codeword = vec![0u8; n];
    let mut u_bar = vec![0u8; n];
    let mut metric = T::zero();
    let canon = t.canonical_to_actual();
    sc::run(&leaves, &mut scratch, &mut codeword, |c, m: Llr<T>| {
        let i = canon[c];
        let bit = match st.roles[i] {
            BitRole::Frozen => 0,
            _ => u8::from(m.0 < T::zero()),
        };
        metric = metric + decision_cost(m.0, bit);
        if let Some(tr) = trace.as_deref_mut() {
            let p1 = 1.0 / (1.0 + m.0.as_f64().exp());
            tr.push(TraceRow { index: i, role: st.roles[i], p1, bit });
        }
        u_bar[i] = bit;
        bit
    });
    Ok(DecodeResult { message_bits: st.extract(&u_bar), path_metric: metric, success_flag: metric.is_finite(), u_bar })
}

/// Successive-cancellation list decoding with `list_size` paths.
pub fn scl_decode<T: Real>(
    y: &[usize],
    st: &EncoderState<T>,
    law: &DecoderLaw<T>,
    list_size: usize,
) -> Result<DecodeResult<T>, CoderError> {
    if list_size == 0 {
        return Err(CoderError::ListSize);
    }
    ListDecoder::new(st.n(), list_size).decode(y, st, law)
}
