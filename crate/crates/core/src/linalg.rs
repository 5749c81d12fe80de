//! Exact rank computations over the rationals.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::Rational;

/// Dense row-major matrix of rationals.
#[derive(Clone, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Rational>,
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RationalMatrix {
            rows,
            cols,
            entries: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Rational::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch {
                left: cols,
                right: bad.len(),
            });
        }
        Ok(RationalMatrix {
            rows: rows.len(),
            cols,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_i64(rows: &[&[i64]]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| Rational::from_integer(v.into())).collect())
                .collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Rational {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Rational) {
        self.entries[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Rational] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    /// Rank over the rationals.
    ///
    /// Rows are cleared of denominators (which preserves rank) and reduced by
    /// fraction-free Bareiss elimination with full pivoting.
    pub fn rank(&self) -> usize {
        if self.rows == 0 || self.cols == 0 {
            return 0;
        }
        let mut a: Vec<Vec<BigInt>> = (0..self.rows).map(|r| integer_row(self.row(r))).collect();
        let (rows, cols) = (self.rows, self.cols);
        let mut prev = BigInt::one();
        let mut rank = 0;
        while rank < rows.min(cols) {
            let Some((pr, pc)) = (rank..rows)
                .flat_map(|r| (rank..cols).map(move |c| (r, c)))
                .find(|&(r, c)| !a[r][c].is_zero())
            else {
                break;
            };
            a.swap(rank, pr);
            for row in a.iter_mut() {
                row.swap(rank, pc);
            }
            let (head, tail) = a.split_at_mut(rank + 1);
            let pivot_row = &head[rank];
            let pivot = pivot_row[rank].clone();
            for row in tail.iter_mut() {
                let factor = row[rank].clone();
                for c in rank + 1..cols {
                    let v = &pivot * &row[c] - &factor * &pivot_row[c];
                    row[c] = v / &prev;
                }
                row[rank] = BigInt::zero();
            }
            prev = pivot;
            rank += 1;
        }
        rank
    }
}

fn integer_row(row: &[Rational]) -> Vec<BigInt> {
    let lcm = row
        .iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    row.iter()
        .map(|v| v.numer() * (&lcm / v.denom()))
        .collect()
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RationalMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let cells: Vec<String> = self.row(r).iter().map(ToString::to_string).collect();
            writeln!(f, "  [{}]", cells.join(", "))?;
        }
        write!(f, "]")
    }
}

pub fn rank_exact(m: &RationalMatrix) -> usize {
    m.rank()
}

/// Rank of a list of equally long vectors.
pub fn span_dimension(vectors: &[Vec<Rational>]) -> Result<usize> {
    if vectors.is_empty() {
        return Ok(0);
    }
    Ok(RationalMatrix::from_rows(vectors.to_vec())?.rank())
}

/// Polynomial with rational coefficients in a fixed number of parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, Rational>,
}

impl ParamPoly {
    pub fn zero(nvars: usize) -> Self {
        ParamPoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    /// The parameter with index `k`.
    pub fn var(nvars: usize, k: usize) -> Self {
        let mut e = vec![0; nvars];
        e[k] = 1;
        let mut p = Self::zero(nvars);
        p.terms.insert(e, Rational::one());
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            let slot = out.terms.entry(e.clone()).or_insert_with(Rational::zero);
            *slot += c;
            if slot.is_zero() {
                out.terms.remove(e);
            }
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        ParamPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                out = out.add(&ParamPoly {
                    nvars: self.nvars,
                    terms: BTreeMap::from([(e, ca * cb)]),
                });
            }
        }
        out
    }

    pub fn eval(&self, point: &[Rational]) -> Rational {
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(point)
                    .fold(c.clone(), |acc, (&k, x)| acc * num_traits::pow(x.clone(), k as usize))
            })
            .fold(Rational::zero(), |a, b| a + b)
    }
}

/// Matrix whose entries are polynomials in a shared parameter list.
#[derive(Clone, Debug)]
pub struct ParamMatrix {
    nvars: usize,
    rows: Vec<Vec<ParamPoly>>,
}

impl ParamMatrix {
    pub fn new(nvars: usize, rows: Vec<Vec<ParamPoly>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        for row in &rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    left: cols,
                    right: row.len(),
                });
            }
            if let Some(p) = row.iter().find(|p| p.nvars() != nvars) {
                return Err(Error::DimensionMismatch {
                    left: nvars,
                    right: p.nvars(),
                });
            }
        }
        Ok(ParamMatrix { nvars, rows })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn entry(&self, r: usize, c: usize) -> &ParamPoly {
        &self.rows[r][c]
    }

    pub fn substitute(&self, point: &[Rational]) -> RationalMatrix {
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(|p| p.eval(point)).collect())
            .collect();
        RationalMatrix::from_rows(rows).expect("rectangular by construction")
    }
}

/// Random rational with numerator and denominator uniform in `[1, 10^6]`.
fn draw_parameter(rng: &mut ChaCha8Rng) -> Rational {
    let num: i64 = rng.gen_range(1..=1_000_000);
    let den: i64 = rng.gen_range(1..=1_000_000);
    Rational::new(num.into(), den.into())
}

/// Parameter points used by [`generic_rank`]; exposed so callers can audit them.
pub fn substitution_points(nvars: usize, trials: usize, seed: u64) -> Vec<Vec<Rational>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|_| (0..nvars).map(|_| draw_parameter(&mut rng)).collect())
        .collect()
}

/// Maximum rank over `trials` random rational substitutions of the parameters.
///
/// The points for `trials = t` are a prefix of those for any larger `t` with
/// the same seed, so the result is monotone in `trials`.
pub fn generic_rank(m: &ParamMatrix, trials: usize, seed: u64) -> Result<usize> {
    if trials < 1 {
        return Err(Error::InvalidTrials);
    }
    let points = substitution_points(m.nvars(), trials, seed);
    Ok(points
        .par_iter()
        .map(|p| m.substitute(p).rank())
        .max()
        .unwrap_or(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank_exact(&RationalMatrix::identity(3)), 3);
        assert_eq!(rank_exact(&RationalMatrix::zeros(4, 7)), 0);
        assert_eq!(
            rank_exact(&RationalMatrix::from_i64(&[&[1, 2], &[2, 4]]).unwrap()),
            1
        );
    }

    #[test]
    fn rank_with_fractions() {
        let m = RationalMatrix::from_rows(vec![
            vec![r(1, 2), r(1, 3), r(0, 1)],
            vec![r(3, 2), r(1, 1), r(0, 1)],
            vec![r(0, 1), r(0, 1), r(5, 7)],
        ])
        .unwrap();
        assert_eq!(m.rank(), 2);
    }

    #[test]
    fn generic_rank_examples() {
        let u = ParamPoly::var(1, 0);
        let z = ParamPoly::zero(1);
        let diag = ParamMatrix::new(1, vec![vec![u.clone(), z.clone()], vec![z, u.clone()]]).unwrap();
        assert_eq!(generic_rank(&diag, 5, 1).unwrap(), 2);
        let same = ParamMatrix::new(1, vec![vec![u.clone(), u.clone()], vec![u.clone(), u]]).unwrap();
        assert_eq!(generic_rank(&same, 5, 1).unwrap(), 1);
        assert!(matches!(generic_rank(&same, 0, 1), Err(Error::InvalidTrials)));
    }

    #[test]
    fn poly_eval() {
        let u = ParamPoly::var(2, 0);
        let v = ParamPoly::var(2, 1);
        let p = u.mul(&v).add(&ParamPoly::constant(2, r(3, 1)));
        assert_eq!(p.eval(&[r(2, 1), r(1, 2)]), r(4, 1));
        assert!(u.add(&u.scale(&r(-1, 1))).is_zero());
    }
}
