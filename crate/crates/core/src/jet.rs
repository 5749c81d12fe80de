//! Truncated multivariate Taylor expansions ("jets") at the coordinate origin
//! with exact rational coefficients.
//!
//! A [`JetScalar`] of order `k` in `N` coordinates stores every Taylor
//! coefficient `c_α` with `|α| ≤ k`. Arithmetic truncates to the smaller of
//! the two operand orders, and each partial derivative lowers the order by
//! one, so a jet never claims more accuracy than its inputs justify.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Rational;

/// Graded enumeration of the monomials `x^α` with `|α| ≤ order`.
///
/// Monomials are listed degree by degree, so the basis of a lower order is
/// always a prefix of the basis of a higher order in the same dimension.
#[derive(Debug)]
pub struct Basis {
    dim: usize,
    order: usize,
    monomials: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
    /// `(i, j, k)` with `monomials[i] + monomials[j] == monomials[k]`.
    products: Vec<(usize, usize, usize)>,
}

impl Basis {
    fn build(dim: usize, order: usize) -> Self {
        let mut monomials = Vec::new();
        for degree in 0..=order {
            let mut alpha = vec![0u32; dim];
            push_degree(&mut monomials, &mut alpha, 0, degree as u32);
        }
        let index: HashMap<_, _> = monomials
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        let degrees: Vec<u32> = monomials.iter().map(|a| a.iter().sum()).collect();
        let mut products = Vec::new();
        for (i, a) in monomials.iter().enumerate() {
            for (j, b) in monomials.iter().enumerate() {
                if (degrees[i] + degrees[j]) as usize > order {
                    continue;
                }
                let sum: Vec<u32> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                products.push((i, j, index[&sum]));
            }
        }
        Basis {
            dim,
            order,
            monomials,
            index,
            products,
        }
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomials(&self) -> &[Vec<u32>] {
        &self.monomials
    }

    fn position(&self, alpha: &[u32]) -> Option<usize> {
        self.index.get(alpha).copied()
    }
}

fn push_degree(out: &mut Vec<Vec<u32>>, alpha: &mut [u32], slot: usize, remaining: u32) {
    if slot + 1 == alpha.len() {
        alpha[slot] = remaining;
        out.push(alpha.to_vec());
        alpha[slot] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        alpha[slot] = e;
        push_degree(out, alpha, slot + 1, remaining - e);
    }
    alpha[slot] = 0;
}

/// Number of monomials of degree at most `order` in `dim` variables.
#[cfg(test)]
fn basis_len(dim: usize, order: usize) -> usize {
    // binomial(dim + order, order)
    let mut acc: usize = 1;
    for i in 1..=order {
        acc = acc * (dim + i) / i;
    }
    acc
}

type BasisCache = Mutex<HashMap<(usize, usize), Arc<Basis>>>;

pub(crate) fn basis(dim: usize, order: usize) -> Arc<Basis> {
    static CACHE: OnceLock<BasisCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("basis cache poisoned");
    guard
        .entry((dim, order))
        .or_insert_with(|| Arc::new(Basis::build(dim, order)))
        .clone()
}

/// A truncated Taylor expansion at the origin with exact rational coefficients.
///
/// Coefficients are stored as integer numerators over one shared positive
/// denominator, kept in lowest terms, so products are integer convolutions
/// with a single normalization pass.
#[derive(Clone)]
pub struct JetScalar {
    basis: Arc<Basis>,
    nums: Vec<BigInt>,
    den: BigInt,
}

impl JetScalar {
    fn from_parts(basis: Arc<Basis>, mut nums: Vec<BigInt>, mut den: BigInt) -> Self {
        debug_assert_eq!(nums.len(), basis.len());
        if den.is_negative() {
            den = -den;
            nums.iter_mut().for_each(|n| *n = -&*n);
        }
        let mut g = den.clone();
        for n in &nums {
            if g.is_one() {
                break;
            }
            if !n.is_zero() {
                g = g.gcd(n);
            }
        }
        if nums.iter().all(Zero::is_zero) {
            den = BigInt::one();
        } else if !g.is_one() {
            nums.iter_mut().for_each(|n| *n /= &g);
            den /= &g;
        }
        JetScalar { basis, nums, den }
    }

    fn from_rationals(basis: Arc<Basis>, coeffs: &[Rational]) -> Self {
        let den = coeffs
            .iter()
            .fold(BigInt::one(), |acc, c| if c.is_zero() { acc } else { acc.lcm(c.denom()) });
        let nums = coeffs.iter().map(|c| c.numer() * (&den / c.denom())).collect();
        Self::from_parts(basis, nums, den)
    }

    /// # Panics
    ///
    /// Panics if `dim == 0`.
    pub fn zero(dim: usize, order: usize) -> Self {
        assert!(dim > 0, "jets need at least one coordinate");
        let basis = basis(dim, order);
        let nums = vec![BigInt::zero(); basis.len()];
        JetScalar {
            basis,
            nums,
            den: BigInt::one(),
        }
    }

    pub fn constant(dim: usize, order: usize, value: Rational) -> Self {
        let mut jet = Self::zero(dim, order);
        jet.nums[0] = value.numer().clone();
        jet.den = value.denom().clone();
        jet
    }

    pub fn one(dim: usize, order: usize) -> Self {
        Self::constant(dim, order, Rational::one())
    }

    /// The coordinate function `x_k` (zero-based `k`).
    pub fn coordinate(dim: usize, order: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::InvalidIndex {
                what: "coordinate",
                value: k,
            });
        }
        let mut jet = Self::zero(dim, order);
        if order >= 1 {
            let mut alpha = vec![0; dim];
            alpha[k] = 1;
            let pos = jet.basis.position(&alpha).expect("degree-1 monomial");
            jet.nums[pos] = BigInt::one();
        }
        Ok(jet)
    }

    /// Builds a jet from `(α, c_α)` pairs. Terms with `|α| > order` are dropped.
    pub fn from_terms<I>(dim: usize, order: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, Rational)>,
    {
        assert!(dim > 0, "jets need at least one coordinate");
        let basis = basis(dim, order);
        let mut coeffs = vec![Rational::zero(); basis.len()];
        for (alpha, c) in terms {
            if alpha.len() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: alpha.len(),
                });
            }
            if alpha.iter().sum::<u32>() as usize > order {
                continue;
            }
            let pos = basis.position(&alpha).expect("monomial within order");
            coeffs[pos] += c;
        }
        Ok(Self::from_rationals(basis, &coeffs))
    }

    pub fn dim(&self) -> usize {
        self.basis.dim
    }

    pub fn order(&self) -> usize {
        self.basis.order
    }

    fn rational(&self, pos: usize) -> Rational {
        Rational::new(self.nums[pos].clone(), self.den.clone())
    }

    pub fn coeff(&self, alpha: &[u32]) -> Rational {
        self.basis
            .position(alpha)
            .map(|p| self.rational(p))
            .unwrap_or_else(Rational::zero)
    }

    /// Nonzero `(α, c_α)` pairs in graded order.
    pub fn terms(&self) -> impl Iterator<Item = (&[u32], Rational)> + '_ {
        self.basis
            .monomials
            .iter()
            .enumerate()
            .filter(|(p, _)| !self.nums[*p].is_zero())
            .map(|(p, a)| (a.as_slice(), self.rational(p)))
    }

    /// All coefficients in graded monomial order, zeros included.
    pub fn coefficients(&self) -> Vec<Rational> {
        (0..self.nums.len()).map(|p| self.rational(p)).collect()
    }

    pub fn value_at_base(&self) -> Rational {
        self.rational(0)
    }

    pub fn is_zero(&self) -> bool {
        self.nums.iter().all(Zero::is_zero)
    }

    pub fn truncate(&self, order: usize) -> Self {
        if order >= self.order() {
            return self.clone();
        }
        let basis = basis(self.dim(), order);
        let nums = self.nums[..basis.len()].to_vec();
        Self::from_parts(basis, nums, self.den.clone())
    }

    /// Basis of the lower-order operand (the result basis of binary ops).
    fn common_basis(&self, other: &Self) -> Arc<Basis> {
        if self.order() <= other.order() {
            self.basis.clone()
        } else {
            other.basis.clone()
        }
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(())
    }

    fn combine(&self, other: &Self, negate: bool) -> Result<Self> {
        self.check_dim(other)?;
        let basis = self.common_basis(other);
        let len = basis.len();
        let (a, b) = (&self.nums[..len], &other.nums[..len]);
        let pick = |x: &BigInt, y: &BigInt| if negate { x - y } else { x + y };
        if self.den == other.den {
            let nums = a.iter().zip(b).map(|(x, y)| pick(x, y)).collect();
            return Ok(Self::from_parts(basis, nums, self.den.clone()));
        }
        let den = self.den.lcm(&other.den);
        let (fa, fb) = (&den / &self.den, &den / &other.den);
        let nums = a
            .iter()
            .zip(b)
            .map(|(x, y)| pick(&(x * &fa), &(y * &fb)))
            .collect();
        Ok(Self::from_parts(basis, nums, den))
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.combine(other, false)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, true)
    }

    /// Cauchy product truncated to the smaller operand order.
    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let basis = self.common_basis(other);
        let mut nums = vec![BigInt::zero(); basis.len()];
        for &(i, j, k) in &basis.products {
            let (a, b) = (&self.nums[i], &other.nums[j]);
            if a.is_zero() || b.is_zero() {
                continue;
            }
            nums[k] += a * b;
        }
        Ok(Self::from_parts(basis, nums, &self.den * &other.den))
    }

    pub fn scale(&self, factor: &Rational) -> Self {
        let nums = self.nums.iter().map(|n| n * factor.numer()).collect();
        Self::from_parts(self.basis.clone(), nums, &self.den * factor.denom())
    }

    /// Formal partial derivative with respect to coordinate `k`; the result has
    /// order one less than `self`.
    pub fn partial(&self, k: usize) -> Result<Self> {
        if k >= self.dim() {
            return Err(Error::InvalidIndex {
                what: "coordinate",
                value: k,
            });
        }
        if self.order() == 0 {
            return Err(Error::OrderExhausted);
        }
        let out_basis = basis(self.dim(), self.order() - 1);
        let mut nums = vec![BigInt::zero(); out_basis.len()];
        for (alpha, n) in self.basis.monomials.iter().zip(&self.nums) {
            if alpha[k] == 0 || n.is_zero() {
                continue;
            }
            let mut lowered = alpha.clone();
            lowered[k] -= 1;
            let pos = out_basis.position(&lowered).expect("lowered monomial");
            nums[pos] += n * BigInt::from(alpha[k]);
        }
        Ok(Self::from_parts(out_basis, nums, self.den.clone()))
    }

    /// Multiplicative inverse up to the truncation order.
    pub fn inverse(&self) -> Result<Self> {
        let a0 = self.value_at_base();
        if a0.is_zero() {
            return Err(Error::ZeroConstantTerm);
        }
        // self = a0 (1 + e) with e(0) = 0, so self^-1 = a0^-1 Σ (-e)^k.
        let inv0 = a0.recip();
        let scaled = self.scale(&(-&inv0));
        let mut nums = scaled.nums;
        nums[0] = BigInt::zero();
        let minus_e = Self::from_parts(self.basis.clone(), nums, scaled.den);
        let mut acc = JetScalar::one(self.dim(), self.order());
        let mut power = acc.clone();
        for _ in 0..self.order() {
            power = &power * &minus_e;
            acc = &acc + &power;
        }
        Ok(acc.scale(&inv0))
    }

    pub fn sum<'a, I>(dim: usize, order: usize, items: I) -> Self
    where
        I: IntoIterator<Item = &'a JetScalar>,
    {
        items
            .into_iter()
            .fold(Self::zero(dim, order), |acc, x| &acc + x)
    }

    /// Largest absolute coefficient; zero for the zero jet.
    pub fn max_abs_coeff(&self) -> Rational {
        let top = self.nums.iter().map(|n| n.abs()).max().unwrap_or_else(BigInt::zero);
        Rational::new(top, self.den.clone())
    }
}

impl PartialEq for JetScalar {
    fn eq(&self, other: &Self) -> bool {
        self.dim() == other.dim()
            && self.order() == other.order()
            && self.den == other.den
            && self.nums == other.nums
    }
}

impl Eq for JetScalar {}

impl fmt::Debug for JetScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet[N={},k={}](", self.dim(), self.order())?;
        let mut first = true;
        for (alpha, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (k, e) in alpha.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "·x{}", k + 1)?,
                    _ => write!(f, "·x{}^{e}", k + 1)?,
                }
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, ")")
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl $tr<&JetScalar> for &JetScalar {
            type Output = JetScalar;
            /// # Panics
            ///
            /// Panics on dimension mismatch; use the `checked_*` form to get an error.
            fn $method(self, rhs: &JetScalar) -> JetScalar {
                self.$checked(rhs).expect("jet dimension mismatch")
            }
        }
        impl $tr<JetScalar> for JetScalar {
            type Output = JetScalar;
            fn $method(self, rhs: JetScalar) -> JetScalar {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&JetScalar> for JetScalar {
            type Output = JetScalar;
            fn $method(self, rhs: &JetScalar) -> JetScalar {
                (&self).$method(rhs)
            }
        }
        impl $tr<JetScalar> for &JetScalar {
            type Output = JetScalar;
            fn $method(self, rhs: JetScalar) -> JetScalar {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);

impl Neg for &JetScalar {
    type Output = JetScalar;
    fn neg(self) -> JetScalar {
        JetScalar {
            basis: self.basis.clone(),
            nums: self.nums.iter().map(|c| -c).collect(),
            den: self.den.clone(),
        }
    }
}

impl Neg for JetScalar {
    type Output = JetScalar;
    fn neg(self) -> JetScalar {
        -&self
    }
}

#[derive(Serialize, Deserialize)]
struct TermWire {
    alpha: Vec<u32>,
    num: String,
    den: String,
}

#[derive(Serialize, Deserialize)]
struct JetWire {
    dim: usize,
    order: usize,
    coeffs: Vec<TermWire>,
}

impl Serialize for JetScalar {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let coeffs = self
            .terms()
            .map(|(alpha, c)| TermWire {
                alpha: alpha.to_vec(),
                num: c.numer().to_string(),
                den: c.denom().to_string(),
            })
            .collect();
        JetWire {
            dim: self.dim(),
            order: self.order(),
            coeffs,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for JetScalar {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let wire = JetWire::deserialize(deserializer)?;
        if wire.dim == 0 {
            return Err(D::Error::custom("jet dim must be positive"));
        }
        let mut terms = Vec::with_capacity(wire.coeffs.len());
        for t in wire.coeffs {
            if t.alpha.len() != wire.dim {
                return Err(D::Error::custom("multi-index length differs from dim"));
            }
            if t.alpha.iter().sum::<u32>() as usize > wire.order {
                return Err(D::Error::custom("multi-index exceeds jet order"));
            }
            let num: BigInt = t.num.parse().map_err(D::Error::custom)?;
            let den: BigInt = t.den.parse().map_err(D::Error::custom)?;
            if !den.is_positive() {
                return Err(D::Error::custom("denominator must be positive"));
            }
            terms.push((t.alpha, Rational::new(num, den)));
        }
        JetScalar::from_terms(wire.dim, wire.order, terms).map_err(D::Error::custom)
    }
}
