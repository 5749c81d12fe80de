//! Seeded draws of small rational jets and fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::Space;
use crate::jet::{basis, JetScalar};
use crate::tensor::{Down, TensorField, Up, Variance};
use crate::Rational;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Numerator in `[-9, 9]`, denominator in `[1, 9]`.
pub fn small_rational(rng: &mut SeededRng) -> Rational {
    let num: i64 = rng.gen_range(-9..=9);
    let den: i64 = rng.gen_range(1..=9);
    Rational::new(num.into(), den.into())
}

/// Jet with every coefficient up to `order` drawn independently.
pub fn jet(rng: &mut SeededRng, dim: usize, order: usize) -> JetScalar {
    let b = basis(dim, order);
    let terms: Vec<(Vec<u32>, Rational)> = b
        .monomials()
        .iter()
        .map(|alpha| (alpha.clone(), small_rational(rng)))
        .collect();
    JetScalar::from_terms(dim, order, terms).expect("monomials match dimension")
}

pub fn field(rng: &mut SeededRng, dim: usize, valence: &[Variance], order: usize) -> TensorField {
    TensorField::from_fn(dim, valence, |_| jet(rng, dim, order))
}

/// Random `(0,2)` field symmetric in its two slots.
pub fn symmetric_form(rng: &mut SeededRng, dim: usize, order: usize) -> TensorField {
    let upper: Vec<Vec<JetScalar>> = (0..dim)
        .map(|j| (0..dim).map(|k| if k >= j { jet(rng, dim, order) } else { JetScalar::zero(dim, order) }).collect())
        .collect();
    TensorField::from_fn(dim, &[Down, Down], |ix| {
        let (j, k) = (ix[0].min(ix[1]), ix[0].max(ix[1]));
        upper[j][k].clone()
    })
}

/// Space with an unconstrained random non-symmetric connection.
pub fn space(rng: &mut SeededRng, dim: usize, order: usize) -> Space {
    Space::from_connection(field(rng, dim, &[Up, Down, Down], order)).expect("connection valence")
}
