//! Two-receiver broadcast channel models.

use rand::Rng;
use thiserror::Error;

use crate::prob::{ConditionalPmf, JointPmf, Pmf, ProbError};
use crate::regions::InputStructure;
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("input symbol {symbol} at position {position} outside alphabet of size {size}")]
    SymbolOutOfRange { position: usize, symbol: usize, size: usize },
    #[error("law has {got} outputs, expected |Y1| * |Y2| = {expected}")]
    OutputSize { got: usize, expected: usize },
    #[error(transparent)]
    Prob(#[from] ProbError),
}

/// Noiseless Blackwell channel: `0 -> (0,0)`, `1 -> (0,1)`, `2 -> (1,0)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BlackwellChannel;

impl BlackwellChannel {
    pub const MAP: [(usize, usize); 3] = [(0, 0), (0, 1), (1, 0)];

    #[inline]
    pub fn output(x: usize) -> Option<(usize, usize)> {
        Self::MAP.get(x).copied()
    }

    pub fn transmit(&self, x: &[usize]) -> Result<(Vec<usize>, Vec<usize>), ChannelError> {
        x.iter()
            .enumerate()
            .map(|(position, &s)| {
                Self::output(s).ok_or(ChannelError::SymbolOutOfRange { position, symbol: s, size: 3 })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(|pairs| pairs.into_iter().unzip())
    }

    pub fn law<T: Real>(&self) -> GenericBc<T> {
        let rows = Self::MAP
            .iter()
            .map(|&(a, b)| Pmf::point(4, 2 * a + b))
            .collect::<Result<Vec<_>, _>>()
            .expect("static law");
        GenericBc::new(ConditionalPmf::from_rows(rows).expect("static law"), 2, 2).expect("static law")
    }
}

/// Finite-alphabet broadcast channel `P_{Y1 Y2 | X}`.
///
/// The joint output `(y1, y2)` is flattened to `y1 * |Y2| + y2`.
#[derive(Debug, Clone, PartialEq)]
pub struct GenericBc<T> {
    law: ConditionalPmf<T>,
    y1_size: usize,
    y2_size: usize,
    // point-mass rows resolved once so deterministic channels skip the RNG
    deterministic: Option<Vec<(usize, usize)>>,
}

impl<T: Real> GenericBc<T> {
    pub fn new(law: ConditionalPmf<T>, y1_size: usize, y2_size: usize) -> Result<Self, ChannelError> {
        if law.output_size() != y1_size * y2_size {
            return Err(ChannelError::OutputSize { got: law.output_size(), expected: y1_size * y2_size });
        }
        let deterministic = law.is_deterministic().then(|| {
            law.rows()
                .iter()
                .map(|r| {
                    let y = r.probs().iter().position(|&p| p == T::one()).unwrap();
                    (y / y2_size, y % y2_size)
                })
                .collect()
        });
        Ok(Self { law, y1_size, y2_size, deterministic })
    }

    /// Both receivers see the input unchanged.
    pub fn identity(size: usize) -> Result<Self, ChannelError> {
        let rows = (0..size)
            .map(|x| Pmf::point(size * size, x * size + x))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(ConditionalPmf::from_rows(rows)?, size, size)
    }

    #[inline]
    pub fn law(&self) -> &ConditionalPmf<T> {
        &self.law
    }

    #[inline]
    pub fn input_size(&self) -> usize {
        self.law.input_size()
    }

    #[inline]
    pub fn output_sizes(&self) -> (usize, usize) {
        (self.y1_size, self.y2_size)
    }

    pub fn is_deterministic(&self) -> bool {
        self.deterministic.is_some()
    }

    fn marginal(&self, first: bool) -> ConditionalPmf<T> {
        let size = if first { self.y1_size } else { self.y2_size };
        let rows = self
            .law
            .rows()
            .iter()
            .map(|r| {
                let mut m = vec![T::zero(); size];
                for (y, &p) in r.probs().iter().enumerate() {
                    let k = if first { y / self.y2_size } else { y % self.y2_size };
                    m[k] = m[k] + p;
                }
                m
            })
            .collect();
        ConditionalPmf::new(rows).expect("marginal of a valid law")
    }

    /// `P_{Y1|X}`.
    pub fn marginal_y1(&self) -> ConditionalPmf<T> {
        self.marginal(true)
    }

    /// `P_{Y2|X}`.
    pub fn marginal_y2(&self) -> ConditionalPmf<T> {
        self.marginal(false)
    }

    /// Draws one output pair.
    #[inline]
    pub fn transmit_symbol<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> (usize, usize) {
        match &self.deterministic {
            Some(map) => map[x],
            None => {
                let y = self.law.row(x).sample(rng);
                (y / self.y2_size, y % self.y2_size)
            }
        }
    }

    /// Independent per-symbol draws.
    pub fn transmit<R: Rng + ?Sized>(&self, x: &[usize], rng: &mut R) -> Result<(Vec<usize>, Vec<usize>), ChannelError> {
        let size = self.input_size();
        if let Some((position, &symbol)) = x.iter().enumerate().find(|(_, &s)| s >= size) {
            return Err(ChannelError::SymbolOutOfRange { position, symbol, size });
        }
        Ok(x.iter().map(|&s| self.transmit_symbol(s, rng)).unzip())
    }
}

/// Which input absorbs the infeasible Blackwell pair `(u, v) = (1, 1)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum GlitchMap {
    /// `g(1,1) = 2`: receiver 1 still sees `u`, receiver 2 sees a flipped `v`.
    #[default]
    ToTwo,
    /// `g(1,1) = 1`: receiver 2 sees `v`, receiver 1 sees a flipped `u`.
    ToOne,
}

/// Sum-rate optimal structure for the Blackwell channel.
///
/// Uniform `P_X` with `U ~ Ber(1/3)`, `V|U=0 ~ Ber(1/2)`, `V|U=1 = 0`; `Y1 = U`, `Y2 = V`.
pub fn blackwell_optimal_structure<T: Real>(glitch: GlitchMap) -> InputStructure<T> {
    let third = T::one() / T::lit(3.0);
    let joint = JointPmf::from_matrix(vec![vec![third, third], vec![third, T::zero()]]).expect("static table");
    let corner = match glitch {
        GlitchMap::ToTwo => 2,
        GlitchMap::ToOne => 1,
    };
    InputStructure::new(joint, vec![vec![0, 1], vec![2, corner]], BlackwellChannel.law())
        .expect("static structure")
}
