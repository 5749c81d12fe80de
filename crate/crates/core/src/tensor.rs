//! Dense indexed tensor fields whose components are jets.
//!
//! Slots are identified by position. Components are stored row-major in the
//! slot order, so for valence `(up, down, down)` the component
//! `T^i_{jk}` lives at `i·N² + j·N + k`.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::JetScalar;
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variance {
    Up,
    Down,
}

impl Variance {
    pub fn flip(self) -> Self {
        match self {
            Variance::Up => Variance::Down,
            Variance::Down => Variance::Up,
        }
    }
}

pub use Variance::{Down, Up};

/// Iterates all multi-indices in `[0, dim)^rank` in row-major order.
pub fn multi_indices(dim: usize, rank: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = dim.pow(rank as u32);
    (0..total).map(move |mut flat| {
        let mut idx = vec![0; rank];
        for slot in (0..rank).rev() {
            idx[slot] = flat % dim;
            flat /= dim;
        }
        idx
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorField {
    dim: usize,
    valence: Vec<Variance>,
    components: Vec<JetScalar>,
}

impl TensorField {
    pub fn new(dim: usize, valence: Vec<Variance>, components: Vec<JetScalar>) -> Result<Self> {
        let expected = dim.pow(valence.len() as u32);
        if components.len() != expected {
            return Err(Error::Malformed(format!(
                "expected {expected} components, got {}",
                components.len()
            )));
        }
        if let Some(c) = components.iter().find(|c| c.dim() != dim) {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: c.dim(),
            });
        }
        Ok(TensorField {
            dim,
            valence,
            components,
        })
    }

    pub fn from_fn<F>(dim: usize, valence: &[Variance], mut f: F) -> Self
    where
        F: FnMut(&[usize]) -> JetScalar,
    {
        let components = multi_indices(dim, valence.len()).map(|ix| f(&ix)).collect();
        TensorField {
            dim,
            valence: valence.to_vec(),
            components,
        }
    }

    pub fn try_from_fn<F>(dim: usize, valence: &[Variance], mut f: F) -> Result<Self>
    where
        F: FnMut(&[usize]) -> Result<JetScalar>,
    {
        let components = multi_indices(dim, valence.len())
            .map(|ix| f(&ix))
            .collect::<Result<Vec<_>>>()?;
        TensorField::new(dim, valence.to_vec(), components)
    }

    pub fn zeros(dim: usize, valence: &[Variance], order: usize) -> Self {
        Self::from_fn(dim, valence, |_| JetScalar::zero(dim, order))
    }

    /// The Kronecker delta `δ^i_j`.
    pub fn kronecker(dim: usize, order: usize) -> Self {
        Self::from_fn(dim, &[Up, Down], |ix| {
            if ix[0] == ix[1] {
                JetScalar::one(dim, order)
            } else {
                JetScalar::zero(dim, order)
            }
        })
    }

    pub fn scalar(value: JetScalar) -> Self {
        TensorField {
            dim: value.dim(),
            valence: Vec::new(),
            components: vec![value],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn valence(&self) -> &[Variance] {
        &self.valence
    }

    pub fn rank(&self) -> usize {
        self.valence.len()
    }

    pub fn components(&self) -> &[JetScalar] {
        &self.components
    }

    /// Smallest jet order among the components.
    pub fn order(&self) -> usize {
        self.components.iter().map(JetScalar::order).min().unwrap_or(0)
    }

    fn offset(&self, ix: &[usize]) -> usize {
        debug_assert_eq!(ix.len(), self.rank());
        ix.iter().fold(0, |acc, &i| {
            debug_assert!(i < self.dim);
            acc * self.dim + i
        })
    }

    pub fn get(&self, ix: &[usize]) -> &JetScalar {
        &self.components[self.offset(ix)]
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(JetScalar::is_zero)
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        if self.valence != other.valence {
            return Err(Error::ValenceMismatch(format!(
                "{:?} vs {:?}",
                self.valence, other.valence
            )));
        }
        Ok(())
    }

    fn zip_with<F>(&self, other: &Self, f: F) -> Result<Self>
    where
        F: Fn(&JetScalar, &JetScalar) -> JetScalar,
    {
        self.same_shape(other)?;
        Ok(TensorField {
            dim: self.dim,
            valence: self.valence.clone(),
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn neg(&self) -> Self {
        self.map(|c| -c)
    }

    pub fn map<F>(&self, f: F) -> Self
    where
        F: Fn(&JetScalar) -> JetScalar,
    {
        TensorField {
            dim: self.dim,
            valence: self.valence.clone(),
            components: self.components.iter().map(f).collect(),
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        self.map(|x| x.scale(c))
    }

    pub fn scale_jet(&self, c: &JetScalar) -> Result<Self> {
        if c.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: c.dim(),
            });
        }
        Ok(self.map(|x| x * c))
    }

    /// Tensor product; slots of `self` come first.
    pub fn outer(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let mut components = Vec::with_capacity(self.components.len() * other.components.len());
        for a in &self.components {
            for b in &other.components {
                components.push(a * b);
            }
        }
        let mut valence = self.valence.clone();
        valence.extend_from_slice(&other.valence);
        Ok(TensorField {
            dim: self.dim,
            valence,
            components,
        })
    }

    fn check_slot(&self, slot: usize) -> Result<()> {
        if slot >= self.rank() {
            return Err(Error::InvalidIndex {
                what: "slot",
                value: slot,
            });
        }
        Ok(())
    }

    /// Sums over a contravariant/covariant slot pair; both slots are removed.
    pub fn contract(&self, slot_up: usize, slot_down: usize) -> Result<Self> {
        self.check_slot(slot_up)?;
        self.check_slot(slot_down)?;
        if self.valence[slot_up] != Up || self.valence[slot_down] != Down {
            return Err(Error::ValenceMismatch(format!(
                "contraction needs an up slot and a down slot, got {:?} at {slot_up} and {:?} at {slot_down}",
                self.valence[slot_up], self.valence[slot_down]
            )));
        }
        let valence: Vec<Variance> = self
            .valence
            .iter()
            .enumerate()
            .filter(|(s, _)| *s != slot_up && *s != slot_down)
            .map(|(_, v)| *v)
            .collect();
        let order = self.order();
        let dim = self.dim;
        Ok(Self::from_fn(dim, &valence, |out| {
            let mut full = vec![0; self.rank()];
            let mut rest = out.iter();
            for (s, slot) in full.iter_mut().enumerate() {
                if s != slot_up && s != slot_down {
                    *slot = *rest.next().expect("free slot");
                }
            }
            let mut acc = JetScalar::zero(dim, order);
            for a in 0..dim {
                full[slot_up] = a;
                full[slot_down] = a;
                acc = &acc + self.get(&full);
            }
            acc
        }))
    }

    /// Reorders slots: slot `s` of the result is slot `perm[s]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.rank()];
        if perm.len() != self.rank() {
            return Err(Error::Malformed(format!(
                "permutation of length {} for rank {}",
                perm.len(),
                self.rank()
            )));
        }
        for &p in perm {
            self.check_slot(p)?;
            if std::mem::replace(&mut seen[p], true) {
                return Err(Error::Malformed("permutation repeats a slot".into()));
            }
        }
        let valence: Vec<Variance> = perm.iter().map(|&p| self.valence[p]).collect();
        let mut src = vec![0; self.rank()];
        Ok(Self::from_fn(self.dim, &valence, |ix| {
            for (s, &p) in perm.iter().enumerate() {
                src[p] = ix[s];
            }
            self.get(&src).clone()
        }))
    }

    /// Exchanges two slots of equal variance.
    pub fn swap_slots(&self, s1: usize, s2: usize) -> Result<Self> {
        self.check_pair(s1, s2)?;
        let mut perm: Vec<usize> = (0..self.rank()).collect();
        perm.swap(s1, s2);
        self.permute(&perm)
    }

    fn check_pair(&self, s1: usize, s2: usize) -> Result<()> {
        self.check_slot(s1)?;
        self.check_slot(s2)?;
        if self.valence[s1] != self.valence[s2] {
            return Err(Error::ValenceMismatch(format!(
                "slots {s1} and {s2} have different variance"
            )));
        }
        Ok(())
    }

    /// `T[s1 s2] = T(s1,s2) − T(s2,s1)`, without the factor ½.
    pub fn antisym_pair_nodiv(&self, s1: usize, s2: usize) -> Result<Self> {
        self.check_pair(s1, s2)?;
        self.sub(&self.swap_slots(s1, s2)?)
    }

    /// `½(T(s1,s2) + T(s2,s1))`.
    pub fn sym_pair(&self, s1: usize, s2: usize) -> Result<Self> {
        self.check_pair(s1, s2)?;
        Ok(self.add(&self.swap_slots(s1, s2)?)?.scale(&half()))
    }

    /// `½(T(s1,s2) − T(s2,s1))`.
    pub fn antisym_pair(&self, s1: usize, s2: usize) -> Result<Self> {
        Ok(self.antisym_pair_nodiv(s1, s2)?.scale(&half()))
    }

    /// Componentwise `∂_k`; valence is unchanged (the result is generally not a tensor).
    pub fn partial_deriv_field(&self, k: usize) -> Result<Self> {
        let components = self
            .components
            .iter()
            .map(|c| c.partial(k))
            .collect::<Result<Vec<_>>>()?;
        Ok(TensorField {
            dim: self.dim,
            valence: self.valence.clone(),
            components,
        })
    }

    /// All comma derivatives stacked into a new trailing covariant slot.
    pub fn gradient(&self) -> Result<Self> {
        let partials = (0..self.dim)
            .map(|k| self.partial_deriv_field(k))
            .collect::<Result<Vec<_>>>()?;
        let mut valence = self.valence.clone();
        valence.push(Down);
        let rank = self.rank();
        Ok(Self::from_fn(self.dim, &valence, |ix| {
            partials[ix[rank]].get(&ix[..rank]).clone()
        }))
    }

    /// Every jet coefficient of every component, component-major.
    pub fn flatten_coefficients(&self) -> Vec<Rational> {
        self.components
            .iter()
            .flat_map(JetScalar::coefficients)
            .collect()
    }

    pub fn flatten_at_base(&self) -> Vec<Rational> {
        self.components.iter().map(JetScalar::value_at_base).collect()
    }

    /// Largest absolute coefficient over all components.
    pub fn max_abs_coeff(&self) -> Rational {
        self.components
            .iter()
            .map(JetScalar::max_abs_coeff)
            .max()
            .unwrap_or_else(Rational::zero)
    }
}

fn half() -> Rational {
    Rational::new(1.into(), 2.into())
}

#[derive(Serialize, Deserialize)]
struct TensorWire {
    dim: usize,
    valence: Vec<Variance>,
    components: Vec<JetScalar>,
}

impl Serialize for TensorField {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        TensorWire {
            dim: self.dim,
            valence: self.valence.clone(),
            components: self.components.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TensorField {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let w = TensorWire::deserialize(deserializer)?;
        TensorField::new(w.dim, w.valence, w.components).map_err(serde::de::Error::custom)
    }
}
