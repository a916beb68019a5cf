//! Finite-alphabet probability tables and information measures.
//!
//! All tables are stored in the linear domain. Entropies are in bits.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::Rng;
use thiserror::Error;

use crate::scalar::{xlog2x, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbError {
    #[error("empty alphabet")]
    EmptyAlphabet,
    #[error("entry {index} is {value}, outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("total mass {0} differs from 1")]
    NotNormalized(f64),
    #[error("row {row} has {got} entries, expected {expected}")]
    RaggedRow { row: usize, got: usize, expected: usize },
    #[error("table has {got} entries, expected {expected}")]
    WrongSize { got: usize, expected: usize },
    #[error("expected a binary variable, alphabet has {0} symbols")]
    NotBinary(usize),
    #[error("symbol {symbol} outside alphabet of size {size}")]
    SymbolOutOfRange { symbol: usize, size: usize },
    #[error("empty string")]
    EmptyString,
    #[error("typicality slack must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("linear program failed: {0}")]
    Solver(String),
}

fn check_entries<T: Real>(probs: &[T]) -> Result<(), ProbError> {
    for (index, &p) in probs.iter().enumerate() {
        if !(p >= T::zero() && p <= T::one() + T::mass_tol()) {
            return Err(ProbError::OutOfRange {
                index,
                value: p.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    Ok(())
}

fn check_mass<T: Real>(probs: &[T]) -> Result<(), ProbError> {
    let total: T = probs.iter().copied().sum();
    if (total - T::one()).abs() > T::mass_tol() {
        return Err(ProbError::NotNormalized(total.as_f64()));
    }
    Ok(())
}

/// Probability mass function over `{0, .., alphabet_size - 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf<T> {
    probs: Vec<T>,
}

impl<T: Real> Pmf<T> {
    pub fn new(probs: Vec<T>) -> Result<Self, ProbError> {
        if probs.is_empty() {
            return Err(ProbError::EmptyAlphabet);
        }
        check_entries(&probs)?;
        check_mass(&probs)?;
        Ok(Self { probs })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(weights: Vec<T>) -> Result<Self, ProbError> {
        if weights.is_empty() {
            return Err(ProbError::EmptyAlphabet);
        }
        let total: T = weights.iter().copied().sum();
        if !(total > T::zero()) || weights.iter().any(|&w| w < T::zero()) {
            return Err(ProbError::NotNormalized(total.as_f64()));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(size: usize) -> Result<Self, ProbError> {
        if size == 0 {
            return Err(ProbError::EmptyAlphabet);
        }
        let p = T::one() / T::from_usize(size).unwrap();
        Ok(Self { probs: vec![p; size] })
    }

    /// `Ber(p)`: probability `p` on symbol 1.
    pub fn bernoulli(p: T) -> Result<Self, ProbError> {
        Self::new(vec![T::one() - p, p])
    }

    pub fn point(size: usize, symbol: usize) -> Result<Self, ProbError> {
        if symbol >= size {
            return Err(ProbError::SymbolOutOfRange { symbol, size });
        }
        let mut probs = vec![T::zero(); size];
        probs[symbol] = T::one();
        Ok(Self { probs })
    }

    #[inline]
    pub fn alphabet_size(&self) -> usize {
        self.probs.len()
    }

    #[inline]
    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    #[inline]
    pub fn prob(&self, symbol: usize) -> T {
        self.probs[symbol]
    }

    /// Inverse-CDF draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let r = T::lit(rng.random::<f64>());
        let mut acc = T::zero();
        for (a, &p) in self.probs.iter().enumerate() {
            acc = acc + p;
            if r < acc {
                return a;
            }
        }
        // r landed in the rounding gap above the last cumulative sum
        self.probs.iter().rposition(|&p| p > T::zero()).unwrap_or(0)
    }
}

/// Channel `P_{Y|X}`: one [`Pmf`] per input symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalPmf<T> {
    rows: Vec<Pmf<T>>,
    output_size: usize,
}

impl<T: Real> ConditionalPmf<T> {
    pub fn new(rows: Vec<Vec<T>>) -> Result<Self, ProbError> {
        let output_size = rows.first().ok_or(ProbError::EmptyAlphabet)?.len();
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(row, r)| {
                if r.len() != output_size {
                    return Err(ProbError::RaggedRow { row, got: r.len(), expected: output_size });
                }
                Pmf::new(r)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { rows, output_size })
    }

    pub fn from_rows(rows: Vec<Pmf<T>>) -> Result<Self, ProbError> {
        let output_size = rows.first().ok_or(ProbError::EmptyAlphabet)?.alphabet_size();
        if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.alphabet_size() != output_size) {
            return Err(ProbError::RaggedRow { row, got: r.alphabet_size(), expected: output_size });
        }
        Ok(Self { rows, output_size })
    }

    pub fn identity(size: usize) -> Result<Self, ProbError> {
        Self::from_rows((0..size).map(|a| Pmf::point(size, a)).collect::<Result<_, _>>()?)
    }

    /// Binary symmetric channel with crossover `p`.
    pub fn bsc(p: T) -> Result<Self, ProbError> {
        Self::new(vec![vec![T::one() - p, p], vec![p, T::one() - p]])
    }

    #[inline]
    pub fn input_size(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn output_size(&self) -> usize {
        self.output_size
    }

    #[inline]
    pub fn row(&self, x: usize) -> &Pmf<T> {
        &self.rows[x]
    }

    #[inline]
    pub fn prob(&self, x: usize, y: usize) -> T {
        self.rows[x].probs[y]
    }

    pub fn rows(&self) -> &[Pmf<T>] {
        &self.rows
    }

    /// Cascade `self` then `next`: `P(z|x) = sum_y self(y|x) next(z|y)`.
    pub fn compose(&self, next: &ConditionalPmf<T>) -> Result<Self, ProbError> {
        if self.output_size != next.input_size() {
            return Err(ProbError::DimensionMismatch(format!(
                "cannot cascade {} outputs into {} inputs",
                self.output_size,
                next.input_size()
            )));
        }
        let rows = self
            .rows
            .iter()
            .map(|r| {
                (0..next.output_size)
                    .map(|z| {
                        r.probs
                            .iter()
                            .enumerate()
                            .map(|(y, &p)| p * next.prob(y, z))
                            .sum()
                    })
                    .collect()
            })
            .collect();
        Self::new(rows)
    }

    /// Joint `P_X(x) P(y|x)`.
    pub fn joint_with(&self, input: &Pmf<T>) -> Result<JointPmf<T>, ProbError> {
        if input.alphabet_size() != self.input_size() {
            return Err(ProbError::DimensionMismatch(format!(
                "input pmf has {} symbols, channel has {} inputs",
                input.alphabet_size(),
                self.input_size()
            )));
        }
        let table = self
            .rows
            .iter()
            .zip(&input.probs)
            .flat_map(|(r, &px)| r.probs.iter().map(move |&p| px * p))
            .collect();
        JointPmf::new(self.input_size(), self.output_size, table)
    }

    /// True if every row is a point mass.
    pub fn is_deterministic(&self) -> bool {
        self.rows.iter().all(|r| r.probs.iter().any(|&p| p == T::one()))
    }
}

/// Joint distribution of `(X, Y)`; rows index `X`, columns index `Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf<T> {
    rows: usize,
    cols: usize,
    table: Vec<T>,
}

impl<T: Real> JointPmf<T> {
    pub fn new(rows: usize, cols: usize, table: Vec<T>) -> Result<Self, ProbError> {
        if rows == 0 || cols == 0 {
            return Err(ProbError::EmptyAlphabet);
        }
        if table.len() != rows * cols {
            return Err(ProbError::WrongSize { got: table.len(), expected: rows * cols });
        }
        check_entries(&table)?;
        check_mass(&table)?;
        Ok(Self { rows, cols, table })
    }

    pub fn from_matrix(matrix: Vec<Vec<T>>) -> Result<Self, ProbError> {
        let rows = matrix.len();
        let cols = matrix.first().ok_or(ProbError::EmptyAlphabet)?.len();
        if let Some((row, r)) = matrix.iter().enumerate().find(|(_, r)| r.len() != cols) {
            return Err(ProbError::RaggedRow { row, got: r.len(), expected: cols });
        }
        Self::new(rows, cols, matrix.into_iter().flatten().collect())
    }

    /// `P_X(x) P(y|x)`.
    pub fn from_marginal_and_channel(px: &Pmf<T>, channel: &ConditionalPmf<T>) -> Result<Self, ProbError> {
        channel.joint_with(px)
    }

    /// Product distribution `P_X P_Y`.
    pub fn independent(px: &Pmf<T>, py: &Pmf<T>) -> Self {
        let table = px
            .probs
            .iter()
            .flat_map(|&a| py.probs.iter().map(move |&b| a * b))
            .collect();
        Self { rows: px.alphabet_size(), cols: py.alphabet_size(), table }
    }

    #[inline]
    pub fn sizes(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.table[x * self.cols + y]
    }

    #[inline]
    pub fn table(&self) -> &[T] {
        &self.table
    }

    pub fn marginal_x(&self) -> Pmf<T> {
        let probs = self.table.chunks(self.cols).map(|r| r.iter().copied().sum()).collect();
        Pmf { probs }
    }

    pub fn marginal_y(&self) -> Pmf<T> {
        let probs = (0..self.cols)
            .map(|y| (0..self.rows).map(|x| self.get(x, y)).sum())
            .collect();
        Pmf { probs }
    }

    pub fn transpose(&self) -> Self {
        let table = (0..self.cols)
            .flat_map(|y| (0..self.rows).map(move |x| (x, y)))
            .map(|(x, y)| self.get(x, y))
            .collect();
        Self { rows: self.cols, cols: self.rows, table }
    }

    /// `P(y|x)`; rows with zero mass fall back to the marginal of `Y`.
    pub fn y_given_x(&self) -> ConditionalPmf<T> {
        let py = self.marginal_y();
        let rows = self
            .table
            .chunks(self.cols)
            .map(|r| {
                let total: T = r.iter().copied().sum();
                if total > T::zero() {
                    Pmf { probs: r.iter().map(|&p| p / total).collect() }
                } else {
                    py.clone()
                }
            })
            .collect();
        ConditionalPmf { rows, output_size: self.cols }
    }

    /// `P(x|y)`, one row per `y`.
    pub fn x_given_y(&self) -> ConditionalPmf<T> {
        self.transpose().y_given_x()
    }
}

/// `H(p)` in bits.
pub fn entropy<T: Real>(p: &Pmf<T>) -> T {
    -p.probs.iter().map(|&q| xlog2x(q)).sum::<T>()
}

/// `H(X, Y)` in bits.
pub fn joint_entropy<T: Real>(joint: &JointPmf<T>) -> T {
    -joint.table.iter().map(|&q| xlog2x(q)).sum::<T>()
}

/// `H(X|Y) = H(X, Y) - H(Y)`, clamped at zero against rounding.
pub fn conditional_entropy<T: Real>(joint: &JointPmf<T>) -> T {
    (joint_entropy(joint) - entropy(&joint.marginal_y())).max(T::zero())
}

/// `I(X; Y) = H(X) - H(X|Y)`, clamped at zero against rounding.
pub fn mutual_information<T: Real>(joint: &JointPmf<T>) -> T {
    (entropy(&joint.marginal_x()) + entropy(&joint.marginal_y()) - joint_entropy(joint)).max(T::zero())
}

/// Conditional Bhattacharyya parameter `Z(X|Y) = 2 E[sqrt(P(0|Y) P(1|Y))]` for binary `X`.
pub fn bhattacharyya<T: Real>(joint: &JointPmf<T>) -> Result<T, ProbError> {
    if joint.rows != 2 {
        return Err(ProbError::NotBinary(joint.rows));
    }
    let two = T::lit(2.0);
    let z = (0..joint.cols)
        .map(|y| (joint.get(0, y) * joint.get(1, y)).sqrt())
        .sum::<T>();
    Ok((two * z).min(T::one()))
}

/// Multiplicative typicality: `|N(a|x)/n - P(a)| <= eps P(a)` for every `a`.
///
/// A string containing a zero-probability symbol is never typical.
pub fn is_typical<T: Real>(x: &[usize], p: &Pmf<T>, eps: T) -> Result<bool, ProbError> {
    if x.is_empty() {
        return Err(ProbError::EmptyString);
    }
    if !(eps > T::zero()) {
        return Err(ProbError::BadEpsilon(eps.as_f64()));
    }
    let size = p.alphabet_size();
    let mut counts = vec![0usize; size];
    for &a in x {
        if a >= size {
            return Err(ProbError::SymbolOutOfRange { symbol: a, size });
        }
        counts[a] += 1;
    }
    let n = T::from_usize(x.len()).unwrap();
    Ok(counts.iter().zip(&p.probs).all(|(&c, &pa)| {
        let freq = T::from_usize(c).unwrap() / n;
        (freq - pa).abs() <= eps * pa
    }))
}

/// Joint typicality of two equal-length strings against a [`JointPmf`].
pub fn is_jointly_typical<T: Real>(x: &[usize], y: &[usize], joint: &JointPmf<T>, eps: T) -> Result<bool, ProbError> {
    if x.len() != y.len() {
        return Err(ProbError::DimensionMismatch(format!("string lengths {} and {}", x.len(), y.len())));
    }
    let (rows, cols) = joint.sizes();
    let mut pairs = Vec::with_capacity(x.len());
    for (&a, &b) in x.iter().zip(y) {
        if a >= rows {
            return Err(ProbError::SymbolOutOfRange { symbol: a, size: rows });
        }
        if b >= cols {
            return Err(ProbError::SymbolOutOfRange { symbol: b, size: cols });
        }
        pairs.push(a * cols + b);
    }
    let flat = Pmf { probs: joint.table.clone() };
    is_typical(&pairs, &flat, eps)
}

/// Residual tolerance of the degradedness feasibility problem.
pub const DEGRADED_TOL: f64 = 1e-9;

/// Whether `w1` is stochastically degraded with respect to `w2`, i.e. `w1 = w2` followed by
/// some channel `W`.
///
/// Solved as an L1 fit over the simplex of intermediate channels; `w1` is degraded when the
/// worst constraint residual of the optimum is within [`DEGRADED_TOL`].
pub fn is_degraded<T: Real>(w1: &ConditionalPmf<T>, w2: &ConditionalPmf<T>) -> Result<bool, ProbError> {
    if w1.input_size() != w2.input_size() {
        return Err(ProbError::DimensionMismatch(format!(
            "input alphabets {} and {}",
            w1.input_size(),
            w2.input_size()
        )));
    }
    let (nx, n1, n2) = (w1.input_size(), w1.output_size(), w2.output_size());
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    // W[b][a] = P(y1 = a | y2 = b)
    let w: Vec<Vec<_>> = (0..n2)
        .map(|_| (0..n1).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect())
        .collect();
    for row in &w {
        lp.add_constraint(row.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, 1.0);
    }
    let mut slacks = Vec::with_capacity(nx * n1);
    for x in 0..nx {
        for a in 0..n1 {
            let plus = lp.add_var(1.0, (0.0, f64::INFINITY));
            let minus = lp.add_var(1.0, (0.0, f64::INFINITY));
            let mut expr: Vec<_> = (0..n2).map(|b| (w[b][a], w2.prob(x, b).as_f64())).collect();
            expr.push((plus, 1.0));
            expr.push((minus, -1.0));
            lp.add_constraint(expr, ComparisonOp::Eq, w1.prob(x, a).as_f64());
            slacks.push((plus, minus));
        }
    }
    let solution = lp.solve().map_err(|e| ProbError::Solver(e.to_string()))?;
    let worst = slacks
        .iter()
        .map(|&(p, m)| solution[p] + solution[m])
        .fold(0.0, f64::max);
    Ok(worst <= DEGRADED_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn blackwell_uv() -> JointPmf<f64> {
        let t = 1.0 / 3.0;
        JointPmf::from_matrix(vec![vec![t, t], vec![t, 0.0]]).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&Pmf::bernoulli(0.5).unwrap()), 1.0);
        assert_eq!(entropy(&Pmf::bernoulli(0.0).unwrap()), 0.0);
        let h = entropy(&Pmf::bernoulli(1.0 / 3.0).unwrap());
        assert!((h - (3f64.log2() - 2.0 / 3.0)).abs() < 1e-15);
        assert!((h - 0.918296).abs() < 1e-6);
    }

    #[test]
    fn conditional_entropy_examples() {
        let eq = JointPmf::<f64>::from_matrix(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert!(conditional_entropy(&eq).abs() < 1e-15);
        let px = Pmf::<f64>::bernoulli(1.0 / 3.0).unwrap();
        let indep = JointPmf::independent(&px, &Pmf::bernoulli(0.2).unwrap());
        assert!((conditional_entropy(&indep) - 0.918296).abs() < 1e-6);
        // H(V|U): rows of the transposed table are V
        let h = conditional_entropy(&blackwell_uv().transpose());
        assert!((h - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_examples() {
        let px = Pmf::<f64>::bernoulli(0.3).unwrap();
        let indep = JointPmf::independent(&px, &Pmf::bernoulli(0.6).unwrap());
        assert!(mutual_information(&indep).abs() < 1e-12);
        let i = mutual_information(&blackwell_uv());
        assert!((i - 0.251629).abs() < 1e-6);
        let t: f64 = 1.0 / 3.0;
        let same = JointPmf::from_matrix(vec![vec![1.0 - t, 0.0], vec![0.0, t]]).unwrap();
        assert!((mutual_information(&same) - 0.918296).abs() < 1e-6);
    }

    #[test]
    fn bhattacharyya_examples() {
        let half = JointPmf::independent(&Pmf::<f64>::bernoulli(0.5).unwrap(), &Pmf::uniform(3).unwrap());
        assert!((bhattacharyya(&half).unwrap() - 1.0).abs() < 1e-12);
        let det = JointPmf::from_matrix(vec![vec![0.4, 0.0], vec![0.0, 0.6]]).unwrap();
        assert_eq!(bhattacharyya(&det).unwrap(), 0.0);
        let third = JointPmf::independent(&Pmf::bernoulli(1.0 / 3.0).unwrap(), &Pmf::uniform(2).unwrap());
        let z = bhattacharyya(&third).unwrap();
        assert!((z - 2.0 * (2.0f64 / 9.0).sqrt()).abs() < 1e-12);
        assert!((z - 0.9428).abs() < 1e-4);
        let ternary = JointPmf::independent(&Pmf::<f64>::uniform(3).unwrap(), &Pmf::uniform(2).unwrap());
        assert_eq!(bhattacharyya(&ternary), Err(ProbError::NotBinary(3)));
    }

    #[test]
    fn typicality_examples() {
        let p = Pmf::bernoulli(1.0 / 3.0).unwrap();
        assert!(is_typical(&[0, 1, 0], &p, 1e-9).unwrap());
        assert!(!is_typical(&[1, 1, 1, 1], &p, 0.1).unwrap());
        assert!(is_typical(&[0, 0, 0, 0, 1, 1], &p, 0.01).unwrap());
        assert_eq!(is_typical(&[], &p, 0.1), Err(ProbError::EmptyString));
        assert!(matches!(is_typical(&[2], &p, 0.1), Err(ProbError::SymbolOutOfRange { .. })));
        // zero-probability symbols break typicality
        let z = Pmf::new(vec![1.0, 0.0]).unwrap();
        assert!(!is_typical(&[0, 0, 1], &z, 0.5).unwrap());
    }

    #[test]
    fn degradedness_examples() {
        let b1 = ConditionalPmf::bsc(0.1).unwrap();
        assert!(is_degraded(&b1, &b1).unwrap());
        let b2 = ConditionalPmf::bsc(0.2).unwrap();
        assert!(is_degraded(&b2, &b1).unwrap());
        assert_eq!(b1.compose(&ConditionalPmf::bsc(0.125).unwrap()).unwrap().prob(0, 1), 0.2);
        let id = ConditionalPmf::identity(2).unwrap();
        assert!(!is_degraded(&id, &b1).unwrap());
        assert!(is_degraded(&b1, &id).unwrap());
        let wide = ConditionalPmf::<f64>::identity(3).unwrap();
        assert!(matches!(is_degraded(&wide, &b1), Err(ProbError::DimensionMismatch(_))));
    }

    #[test]
    fn validation() {
        assert!(matches!(Pmf::new(vec![0.5, 0.6]), Err(ProbError::NotNormalized(_))));
        assert!(matches!(Pmf::new(vec![-0.1, 1.1]), Err(ProbError::OutOfRange { .. })));
        assert!(matches!(Pmf::<f64>::new(vec![]), Err(ProbError::EmptyAlphabet)));
        assert!(matches!(
            ConditionalPmf::new(vec![vec![1.0, 0.0], vec![1.0]]),
            Err(ProbError::RaggedRow { .. })
        ));
        // f32 tables use a tolerance scaled to their precision
        assert!(Pmf::<f32>::new(vec![0.1, 0.2, 0.7]).is_ok());
    }

    fn joint_strategy(cols: usize) -> impl Strategy<Value = JointPmf<f64>> {
        prop::collection::vec(0.0f64..1.0, 2 * cols).prop_filter_map("zero mass", move |w| {
            let total: f64 = w.iter().sum();
            (total > 1e-6).then(|| JointPmf::new(2, cols, w.iter().map(|v| v / total).collect()).unwrap())
        })
    }

    fn channel_strategy(nin: usize, nout: usize) -> impl Strategy<Value = ConditionalPmf<f64>> {
        prop::collection::vec(prop::collection::vec(0.01f64..1.0, nout), nin).prop_map(|rows| {
            ConditionalPmf::from_rows(rows.into_iter().map(|r| Pmf::from_weights(r).unwrap()).collect()).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn bhattacharyya_sandwiches_entropy(j in joint_strategy(3)) {
            let z = bhattacharyya(&j).unwrap();
            let h = conditional_entropy(&j);
            prop_assert!(z * z <= h + 1e-12);
            prop_assert!(h <= z + 1e-12);
        }

        #[test]
        fn mutual_information_identity(j in joint_strategy(4)) {
            let lhs = mutual_information(&j);
            let rhs = entropy(&j.marginal_x()) + entropy(&j.marginal_y()) - joint_entropy(&j);
            prop_assert!((lhs - rhs.max(0.0)).abs() < 1e-12);
            prop_assert!((mutual_information(&j.transpose()) - lhs).abs() < 1e-12);
            prop_assert!(conditional_entropy(&j) <= entropy(&j.marginal_x()) + 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn conditioning_reduces_bhattacharyya(j in joint_strategy(6)) {
            // columns are (y, s) pairs with |S| = 2; summing s out coarsens the observation
            let coarse: Vec<f64> = (0..2)
                .flat_map(|x| (0..3).map(move |y| (x, y)))
                .map(|(x, y)| j.get(x, 2 * y) + j.get(x, 2 * y + 1))
                .collect();
            let coarse = JointPmf::new(2, 3, coarse).unwrap();
            prop_assert!(bhattacharyya(&j).unwrap() <= bhattacharyya(&coarse).unwrap() + 1e-12);
        }

        #[test]
        fn normalization_survives_composition(a in channel_strategy(3, 4), b in channel_strategy(4, 2)) {
            let c = a.compose(&b).unwrap();
            for r in c.rows() {
                prop_assert!((r.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            let px = Pmf::uniform(3).unwrap();
            let j = c.joint_with(&px).unwrap();
            prop_assert!((j.table().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!((j.marginal_y().probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn degradedness_reflexive_and_transitive(
            w2 in channel_strategy(2, 3),
            first in channel_strategy(3, 3),
            second in channel_strategy(3, 2),
        ) {
            let w1 = w2.compose(&first).unwrap();
            let w0 = w1.compose(&second).unwrap();
            prop_assert!(is_degraded(&w2, &w2).unwrap());
            prop_assert!(is_degraded(&w1, &w2).unwrap());
            prop_assert!(is_degraded(&w0, &w1).unwrap());
            prop_assert!(is_degraded(&w0, &w2).unwrap());
        }
    }
}
