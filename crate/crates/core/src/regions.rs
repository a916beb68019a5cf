//! Marton's region, its corner points and the time-shifted alternating rate line at a fixed
//! input structure.

use std::io::Write;

use thiserror::Error;

use crate::channel::GenericBc;
use crate::prob::{mutual_information, ConditionalPmf, JointPmf, Pmf, ProbError};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum RegionError {
    #[error("symbol map is {rows}x{cols}, expected {u}x{v}")]
    MapShape { rows: usize, cols: usize, u: usize, v: usize },
    #[error("symbol map sends ({u}, {v}) to {x}, channel has {size} inputs")]
    MapRange { u: usize, v: usize, x: usize, size: usize },
    #[error("offset fraction {0} outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Receiver index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum User {
    One,
    Two,
}

impl User {
    pub fn other(self) -> Self {
        match self {
            User::One => User::Two,
            User::Two => User::One,
        }
    }

    pub fn index(self) -> usize {
        match self {
            User::One => 0,
            User::Two => 1,
        }
    }
}

/// `P_UV`, the symbol map `x = g(u, v)` and the channel `P_{Y1 Y2 | X}`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputStructure<T> {
    joint: JointPmf<T>,
    symbol_map: Vec<Vec<usize>>,
    channel: GenericBc<T>,
}

impl<T: Real> InputStructure<T> {
    pub fn new(joint: JointPmf<T>, symbol_map: Vec<Vec<usize>>, channel: GenericBc<T>) -> Result<Self, RegionError> {
        let (u, v) = joint.sizes();
        let cols = symbol_map.first().map_or(0, Vec::len);
        if symbol_map.len() != u || symbol_map.iter().any(|r| r.len() != v) {
            return Err(RegionError::MapShape { rows: symbol_map.len(), cols, u, v });
        }
        let size = channel.input_size();
        for (a, row) in symbol_map.iter().enumerate() {
            for (b, &x) in row.iter().enumerate() {
                if x >= size {
                    return Err(RegionError::MapRange { u: a, v: b, x, size });
                }
            }
        }
        Ok(Self { joint, symbol_map, channel })
    }

    #[inline]
    pub fn joint(&self) -> &JointPmf<T> {
        &self.joint
    }

    #[inline]
    pub fn symbol_map(&self) -> &[Vec<usize>] {
        &self.symbol_map
    }

    #[inline]
    pub fn channel(&self) -> &GenericBc<T> {
        &self.channel
    }

    #[inline]
    pub fn map(&self, u: usize, v: usize) -> usize {
        self.symbol_map[u][v]
    }

    /// `P_X` induced through `g`.
    pub fn input_pmf(&self) -> Pmf<T> {
        let mut px = vec![T::zero(); self.channel.input_size()];
        let (nu, nv) = self.joint.sizes();
        for u in 0..nu {
            for v in 0..nv {
                let x = self.symbol_map[u][v];
                px[x] = px[x] + self.joint.get(u, v);
            }
        }
        Pmf::new(px).expect("pushforward of a valid joint")
    }

    /// `P(y_k | u, v)` with rows indexed by `u * |V| + v`.
    pub fn pair_law(&self, user: User) -> ConditionalPmf<T> {
        let w = match user {
            User::One => self.channel.marginal_y1(),
            User::Two => self.channel.marginal_y2(),
        };
        let (nu, nv) = self.joint.sizes();
        let rows = (0..nu)
            .flat_map(|u| (0..nv).map(move |v| (u, v)))
            .map(|(u, v)| w.row(self.symbol_map[u][v]).clone())
            .collect();
        ConditionalPmf::from_rows(rows).expect("rows of a valid law")
    }

    fn joint_with_output(&self, user: User) -> JointPmf<T> {
        let pair = self.pair_law(user);
        let (nu, nv) = self.joint.sizes();
        let ny = pair.output_size();
        let own = match user {
            User::One => nu,
            User::Two => nv,
        };
        let mut table = vec![T::zero(); own * ny];
        for u in 0..nu {
            for v in 0..nv {
                let p = self.joint.get(u, v);
                let a = if user == User::One { u } else { v };
                for y in 0..ny {
                    table[a * ny + y] = table[a * ny + y] + p * pair.prob(u * nv + v, y);
                }
            }
        }
        JointPmf::new(own, ny, table).expect("valid joint")
    }

    /// `P_{U Y1}`.
    pub fn joint_u_y1(&self) -> JointPmf<T> {
        self.joint_with_output(User::One)
    }

    /// `P_{V Y2}`.
    pub fn joint_v_y2(&self) -> JointPmf<T> {
        self.joint_with_output(User::Two)
    }

    /// `P(y_k | own auxiliary symbol)` with the other auxiliary averaged out.
    pub fn effective_law(&self, user: User) -> ConditionalPmf<T> {
        self.joint_with_output(user).y_given_x()
    }
}

/// Rate pair in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePair<T> {
    pub r1: T,
    pub r2: T,
}

impl<T: Real> RatePair<T> {
    fn clamped(r1: T, r2: T) -> Self {
        Self { r1: r1.max(T::zero()), r2: r2.max(T::zero()) }
    }

    pub fn sum(&self) -> T {
        self.r1 + self.r2
    }
}

/// The three Marton bounds at a fixed `P_UV`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MartonBounds<T> {
    /// `I(U; Y1)`
    pub r1_max: T,
    /// `I(V; Y2)`
    pub r2_max: T,
    /// `I(U; Y1) + I(V; Y2) - I(U; V)`
    pub sum_max: T,
    /// `I(U; V)`
    pub binning_loss: T,
}

pub fn marton_constraints<T: Real>(s: &InputStructure<T>) -> MartonBounds<T> {
    let r1_max = mutual_information(&s.joint_u_y1());
    let r2_max = mutual_information(&s.joint_v_y2());
    let binning_loss = mutual_information(s.joint());
    MartonBounds { r1_max, r2_max, sum_max: r1_max + r2_max - binning_loss, binning_loss }
}

/// Corner points reached by encoding `U` first (first element) or `V` first (second element).
pub fn corner_points<T: Real>(s: &InputStructure<T>) -> (RatePair<T>, RatePair<T>) {
    let b = marton_constraints(s);
    (
        RatePair::clamped(b.r1_max, b.r2_max - b.binning_loss),
        RatePair::clamped(b.r1_max - b.binning_loss, b.r2_max),
    )
}

/// Rates of time-shifted alternating encoding with offset fraction `alpha = n1 / n`.
pub fn tsa_rates<T: Real>(s: &InputStructure<T>, alpha: T) -> Result<RatePair<T>, RegionError> {
    if !(alpha >= T::zero() && alpha <= T::one()) {
        return Err(RegionError::AlphaOutOfRange(alpha.as_f64()));
    }
    let b = marton_constraints(s);
    Ok(RatePair::clamped(
        b.r1_max - alpha * b.binning_loss,
        b.r2_max - (T::one() - alpha) * b.binning_loss,
    ))
}

/// One sample of the rate line between the two corner points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionSample<T> {
    pub alpha: T,
    pub r1: T,
    pub r2: T,
}

/// `tsa_rates` on `count` evenly spaced offsets in `[0, 1]`.
pub fn region_samples<T: Real>(s: &InputStructure<T>, count: usize) -> Vec<RegionSample<T>> {
    let steps = T::from_usize(count.max(2) - 1).unwrap();
    (0..count.max(2))
        .map(|k| {
            let alpha = T::from_usize(k).unwrap() / steps;
            let r = tsa_rates(s, alpha).expect("alpha in range");
            RegionSample { alpha, r1: r.r1, r2: r.r2 }
        })
        .collect()
}

/// CSV with columns `alpha,r1,r2`.
pub fn write_region_csv<T: Real, W: Write>(out: &mut W, samples: &[RegionSample<T>]) -> Result<(), RegionError> {
    writeln!(out, "alpha,r1,r2")?;
    for s in samples {
        writeln!(out, "{},{},{}", s.alpha, s.r1, s.r2)?;
    }
    Ok(())
}

/// Objective for [`grid_search`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridObjective<T> {
    SumRate,
    /// `w1 R1 + w2 R2`, maximized over both corner points.
    Weighted(T, T),
}

/// Best member of a user-supplied parametrized family of input structures.
///
/// Returns the winning parameter, its structure and the objective value. Members for which
/// `family` returns `None` are skipped.
pub fn grid_search<T, P, F>(grid: &[P], family: F, objective: GridObjective<T>) -> Option<(P, InputStructure<T>, T)>
where
    T: Real,
    P: Clone,
    F: Fn(&P) -> Option<InputStructure<T>>,
{
    let score = |s: &InputStructure<T>| match objective {
        GridObjective::SumRate => marton_constraints(s).sum_max,
        GridObjective::Weighted(w1, w2) => {
            let (a, b) = corner_points(s);
            (w1 * a.r1 + w2 * a.r2).max(w1 * b.r1 + w2 * b.r2)
        }
    };
    grid.iter()
        .filter_map(|p| family(p).map(|s| (p.clone(), s)))
        .map(|(p, s)| {
            let v = score(&s);
            (p, s, v)
        })
        .fold(None, |best: Option<(P, InputStructure<T>, T)>, cand| match &best {
            Some(b) if b.2 >= cand.2 => best,
            _ => Some(cand),
        })
}
