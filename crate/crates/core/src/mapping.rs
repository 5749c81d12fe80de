//! Equitorsion almost geodesic mappings of the third type.
//!
//! A mapping deforms the connection by
//! `Γ̄^i_{jk} = Γ^i_{jk} + ψ_jδ^i_k + ψ_kδ^i_j + 2σ_{jk}φ^i`
//! where `φ` satisfies `φ^i_{|j} = ν_jφ^i + μδ^i_j` for the covariant
//! derivative of the first or second kind.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DerivKind, Space};
use crate::jet::JetScalar;
use crate::random::{self, SeededRng};
use crate::report::VerificationReport;
use crate::tensor::{Down, TensorField, Up, Variance};
use crate::{rat, Rational};

const MAX_SYNTH_ATTEMPTS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum MappingKind {
    First,
    Second,
}

impl MappingKind {
    pub const ALL: [MappingKind; 2] = [MappingKind::First, MappingKind::Second];

    pub fn deriv_kind(self) -> DerivKind {
        match self {
            MappingKind::First => DerivKind::First,
            MappingKind::Second => DerivKind::Second,
        }
    }

    /// `+1` for the first kind, `-1` for the second.
    pub fn sign(self) -> Rational {
        match self {
            MappingKind::First => Rational::one(),
            MappingKind::Second => -Rational::one(),
        }
    }

    pub fn number(self) -> u8 {
        match self {
            MappingKind::First => 1,
            MappingKind::Second => 2,
        }
    }
}

impl TryFrom<u8> for MappingKind {
    type Error = Error;

    fn try_from(k: u8) -> Result<Self> {
        match k {
            1 => Ok(MappingKind::First),
            2 => Ok(MappingKind::Second),
            _ => Err(Error::InvalidIndex {
                what: "mapping kind",
                value: k as usize,
            }),
        }
    }
}

impl From<MappingKind> for u8 {
    fn from(k: MappingKind) -> u8 {
        k.number()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MappingWire")]
pub struct AG3Mapping {
    pub psi: TensorField,
    pub sigma: TensorField,
    pub phi: TensorField,
    pub nu: TensorField,
    pub mu: JetScalar,
    pub kind: MappingKind,
}

#[derive(Deserialize)]
struct MappingWire {
    psi: TensorField,
    sigma: TensorField,
    phi: TensorField,
    nu: TensorField,
    mu: JetScalar,
    kind: MappingKind,
}

impl TryFrom<MappingWire> for AG3Mapping {
    type Error = Error;

    fn try_from(w: MappingWire) -> Result<Self> {
        AG3Mapping::new(w.psi, w.sigma, w.phi, w.nu, w.mu, w.kind)
    }
}

fn expect_valence(name: &str, t: &TensorField, valence: &[Variance], dim: usize) -> Result<()> {
    if t.valence() != valence {
        return Err(Error::ValenceMismatch(format!(
            "{name} must have valence {valence:?}, got {:?}",
            t.valence()
        )));
    }
    if t.dim() != dim {
        return Err(Error::DimensionMismatch {
            left: dim,
            right: t.dim(),
        });
    }
    Ok(())
}

impl AG3Mapping {
    /// Validates valences, dimensions and the symmetry of `sigma`.
    pub fn new(
        psi: TensorField,
        sigma: TensorField,
        phi: TensorField,
        nu: TensorField,
        mu: JetScalar,
        kind: MappingKind,
    ) -> Result<Self> {
        let dim = phi.dim();
        expect_valence("phi", &phi, &[Up], dim)?;
        expect_valence("psi", &psi, &[Down], dim)?;
        expect_valence("nu", &nu, &[Down], dim)?;
        expect_valence("sigma", &sigma, &[Down, Down], dim)?;
        if mu.dim() != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: mu.dim(),
            });
        }
        if !sigma.antisym_pair_nodiv(0, 1)?.is_zero() {
            return Err(Error::Malformed("sigma must be symmetric".into()));
        }
        Ok(AG3Mapping {
            psi,
            sigma,
            phi,
            nu,
            mu,
            kind,
        })
    }

    pub fn dim(&self) -> usize {
        self.phi.dim()
    }

    /// `σ_{jα}φ^α`.
    pub fn sigma_phi(&self) -> TensorField {
        contract_vector(&self.sigma, &self.phi)
    }

    /// `ψ_αφ^α`.
    pub fn psi_phi(&self) -> JetScalar {
        contract_vector(&self.psi, &self.phi).get(&[]).clone()
    }
}

/// Contracts the last covariant slot of `a` with the vector `v`.
pub(crate) fn contract_vector(a: &TensorField, v: &TensorField) -> TensorField {
    let last = a.rank() - 1;
    a.outer(v)
        .and_then(|t| t.contract(a.rank(), last))
        .expect("shapes checked by caller")
}

/// `G_j = Γ^α_{jα}` for a symmetric connection.
pub(crate) fn connection_trace(sym: &TensorField) -> TensorField {
    sym.contract(0, 2).expect("connection valence")
}

pub fn transform_connection(s: &Space, m: &AG3Mapping) -> Result<Space> {
    if s.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            left: s.dim(),
            right: m.dim(),
        });
    }
    let g = s.gamma();
    let two = rat(2, 1);
    let gamma = TensorField::from_fn(s.dim(), &[Up, Down, Down], |ix| {
        let (i, j, k) = (ix[0], ix[1], ix[2]);
        let mut v = g.get(ix) + &(m.sigma.get(&[j, k]) * m.phi.get(&[i])).scale(&two);
        if i == k {
            v = v + m.psi.get(&[j]);
        }
        if i == j {
            v = v + m.psi.get(&[k]);
        }
        v
    });
    Space::from_connection(gamma)
}

/// `φ^i_{|j} − ν_jφ^i − μδ^i_j` with the derivative kind of the mapping.
pub fn basic_equation_residual(s: &Space, m: &AG3Mapping) -> Result<TensorField> {
    let cd = s.cov_deriv_kind(&m.phi, m.kind.deriv_kind())?;
    let rhs = TensorField::from_fn(s.dim(), &[Up, Down], |ix| {
        let (i, j) = (ix[0], ix[1]);
        let v = m.nu.get(&[j]) * m.phi.get(&[i]);
        if i == j {
            v + &m.mu
        } else {
            v
        }
    });
    cd.sub(&rhs)
}

/// Inverse mapping data on the target space:
/// `ψ̄ = −ψ`, `σ̄ = −σ`, `φ̄ = φ`, `ν̄_j = ν_j + ψ_j + 2σ_{jα}φ^α`, `μ̄ = μ + ψ_αφ^α`.
///
/// Fails if the input does not satisfy the basic equation, or if the result
/// does not map the target back onto the source.
pub fn reciprocity_inverse(s: &Space, m: &AG3Mapping) -> Result<AG3Mapping> {
    let residual = basic_equation_residual(s, m)?;
    if !residual.is_zero() {
        return Err(Error::NonzeroResidual);
    }
    let target = transform_connection(s, m)?;
    let inv = inverse_data(m, &m.psi.neg());
    let back = transform_connection(&target, &inv)?;
    let round_trip = back.gamma().sub(s.gamma())?;
    if !round_trip.is_zero() {
        return Err(Error::IdentityFailed(Box::new(VerificationReport::from_residual(
            "reciprocity_round_trip",
            round_trip,
        ))));
    }
    let target_residual = basic_equation_residual(&target, &inv)?;
    if !target_residual.is_zero() {
        return Err(Error::IdentityFailed(Box::new(VerificationReport::from_residual(
            "reciprocity_basic_equation",
            target_residual,
        ))));
    }
    Ok(inv)
}

/// Barred data for a given `ψ̄`, with `ν̄` and `μ̄` derived from it:
/// `ν̄ = ν − ψ̄ + 2σφ`, `μ̄ = μ − ψ̄_αφ^α`.
fn inverse_data(m: &AG3Mapping, psi_bar: &TensorField) -> AG3Mapping {
    let sigma_phi = m.sigma_phi();
    let nu = m
        .nu
        .sub(psi_bar)
        .and_then(|t| t.add(&sigma_phi.scale(&rat(2, 1))))
        .expect("same shape");
    let mu = &m.mu - contract_vector(psi_bar, &m.phi).get(&[]);
    AG3Mapping {
        psi: psi_bar.clone(),
        sigma: m.sigma.neg(),
        phi: m.phi.clone(),
        nu,
        mu,
        kind: m.kind,
    }
}

/// Negative control: the inverse data with the sign of `ψ̄` flipped
/// (`ψ̄ = +ψ`) and `ν̄`, `μ̄` recomputed from it.
pub fn corrupted_inverse(m: &AG3Mapping) -> AG3Mapping {
    inverse_data(m, &m.psi)
}

/// Source space, mapping, and the target space it produces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MappedPair {
    pub source: Space,
    pub mapping: AG3Mapping,
    pub target: Space,
}

impl MappedPair {
    pub fn new(source: Space, mapping: AG3Mapping) -> Result<Self> {
        let target = transform_connection(&source, &mapping)?;
        Ok(MappedPair {
            source,
            mapping,
            target,
        })
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    pub fn inverse_mapping(&self) -> Result<AG3Mapping> {
        reciprocity_inverse(&self.source, &self.mapping)
    }

    pub fn certificate(&self) -> Result<Certificate> {
        Ok(Certificate {
            basic_equation_residual_zero: basic_equation_residual(&self.source, &self.mapping)?
                .is_zero(),
            equitorsion: self.source.torsion() == self.target.torsion(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub basic_equation_residual_zero: bool,
    pub equitorsion: bool,
}

#[derive(Serialize, Deserialize)]
struct PairWire {
    source: Space,
    mapping: AG3Mapping,
    target: Space,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    certificate: Option<Certificate>,
}

impl Serialize for MappedPair {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::Error as _;
        PairWire {
            source: self.source.clone(),
            mapping: self.mapping.clone(),
            target: self.target.clone(),
            certificate: Some(self.certificate().map_err(S::Error::custom)?),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MappedPair {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = PairWire::deserialize(deserializer)?;
        let pair = MappedPair::new(w.source, w.mapping).map_err(D::Error::custom)?;
        if pair.target != w.target {
            return Err(D::Error::custom(
                "target connection does not match the transformed source",
            ));
        }
        Ok(pair)
    }
}

/// Checks `Γ̄^i_{(jk)} − Γ^i_{(jk)}` against the factorized form
/// `[a̅_jδ^i_k + a̅_kδ^i_j − σ̄_{jk}φ̄^i] − [a_jδ^i_k + a_kδ^i_j − σ_{jk}φ^i]`
/// with `a_j = (Γ^α_{jα} + σ_{jα}φ^α)/(N+1)`, and returns the common value.
pub fn gamma_diff_factorized(pair: &MappedPair) -> Result<TensorField> {
    let barred = pair.inverse_mapping()?;
    let lhs = pair.target.symmetric_part().sub(&pair.source.symmetric_part())?;
    let rhs = factorized_part(&pair.target, &barred)?.sub(&factorized_part(&pair.source, &pair.mapping)?)?;
    let residual = lhs.sub(&rhs)?;
    if !residual.is_zero() {
        return Err(Error::IdentityFailed(Box::new(VerificationReport::from_residual(
            "gamma_diff_factorized",
            residual,
        ))));
    }
    Ok(lhs)
}

fn factorized_part(s: &Space, m: &AG3Mapping) -> Result<TensorField> {
    let n = s.dim();
    let c = Rational::new(1.into(), ((n + 1) as i64).into());
    let a = connection_trace(&s.symmetric_part()).add(&m.sigma_phi())?.scale(&c);
    Ok(TensorField::from_fn(n, &[Up, Down, Down], |ix| {
        let (i, j, k) = (ix[0], ix[1], ix[2]);
        let mut v = -(m.sigma.get(&[j, k]) * m.phi.get(&[i]));
        if i == k {
            v = v + a.get(&[j]);
        }
        if i == j {
            v = v + a.get(&[k]);
        }
        v
    }))
}

/// Builds a source space and mapping that satisfy the basic equation exactly.
///
/// With `w_k = δ_k^1/φ^1` (so `w_αφ^α = 1`) and
/// `T^i_j = ν_jφ^i + μδ^i_j − φ^i_{,j}`, the connection
/// `Γ^i_{kj} = T^i_jw_k + B^i_{kj} − w_kB^i_{αj}φ^α` (first kind, lower slots
/// swapped for the second kind) satisfies `Γ^i_{αj}φ^α = T^i_j` for any `B`.
///
/// `order` is the jet order of the connection; `φ` carries one order more.
pub fn synthesize_instance(n: usize, kind: MappingKind, seed: u64, order: usize) -> Result<MappedPair> {
    if n < 2 {
        return Err(Error::InvalidIndex {
            what: "dimension (must be at least 2)",
            value: n,
        });
    }
    if order < 1 {
        return Err(Error::InvalidIndex {
            what: "jet order (must be at least 1)",
            value: order,
        });
    }
    let mut rng = random::rng(seed);
    for _ in 0..MAX_SYNTH_ATTEMPTS {
        if let Some(pair) = synthesize_attempt(&mut rng, n, kind, order)? {
            return Ok(pair);
        }
    }
    Err(Error::Synthesis(format!(
        "phi^1 vanished at the base point in {MAX_SYNTH_ATTEMPTS} draws"
    )))
}

fn synthesize_attempt(rng: &mut SeededRng, n: usize, kind: MappingKind, order: usize) -> Result<Option<MappedPair>> {
    let phi = random::field(rng, n, &[Up], order + 1);
    let nu = random::field(rng, n, &[Down], order);
    let mu = random::jet(rng, n, order);
    let psi = random::field(rng, n, &[Down], order);
    let sigma = random::symmetric_form(rng, n, order);
    let b = random::field(rng, n, &[Up, Down, Down], order);
    if phi.get(&[0]).value_at_base().is_zero() {
        return Ok(None);
    }
    let w0 = phi.get(&[0]).inverse()?;
    let phi_grad = phi.gradient()?;
    let t = TensorField::from_fn(n, &[Up, Down], |ix| {
        let (i, j) = (ix[0], ix[1]);
        let mut v = nu.get(&[j]) * phi.get(&[i]) - phi_grad.get(&[i, j]);
        if i == j {
            v = v + &mu;
        }
        v
    });
    // b_phi[i][j] = B^i_{αj}φ^α (first kind) or B^i_{jα}φ^α (second kind)
    let b_phi = TensorField::from_fn(n, &[Up, Down], |ix| {
        let (i, j) = (ix[0], ix[1]);
        let terms: Vec<JetScalar> = (0..n)
            .map(|a| match kind {
                MappingKind::First => b.get(&[i, a, j]) * phi.get(&[a]),
                MappingKind::Second => b.get(&[i, j, a]) * phi.get(&[a]),
            })
            .collect();
        JetScalar::sum(n, order, &terms)
    });
    let gamma = TensorField::from_fn(n, &[Up, Down, Down], |ix| {
        // contracted slot k, free slot j
        let (i, k, j) = match kind {
            MappingKind::First => (ix[0], ix[1], ix[2]),
            MappingKind::Second => (ix[0], ix[2], ix[1]),
        };
        if k == 0 {
            b.get(ix) + (t.get(&[i, j]) - b_phi.get(&[i, j])) * &w0
        } else {
            b.get(ix).clone()
        }
    });
    let source = Space::from_connection(gamma)?;
    let mapping = AG3Mapping::new(psi, sigma, phi, nu, mu, kind)?;
    let residual = basic_equation_residual(&source, &mapping)?;
    if !residual.is_zero() {
        return Err(Error::IdentityFailed(Box::new(VerificationReport::from_residual(
            "synthesized_basic_equation",
            residual,
        ))));
    }
    MappedPair::new(source, mapping).map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn konst(n: usize, order: usize, v: Rational) -> JetScalar {
        JetScalar::constant(n, order, v)
    }

    fn flat(n: usize, order: usize) -> Space {
        Space::from_connection(TensorField::zeros(n, &[Up, Down, Down], order)).unwrap()
    }

    /// φ^i = c·x^i on flat space, ν = 0, μ = c, with the given ψ and σ.
    fn radial(n: usize, c: i64, psi: TensorField, sigma: TensorField, kind: MappingKind) -> AG3Mapping {
        let phi = TensorField::from_fn(n, &[Up], |ix| {
            JetScalar::coordinate(n, 3, ix[0]).unwrap().scale(&rat(c, 1))
        });
        AG3Mapping::new(
            psi,
            sigma,
            phi,
            TensorField::zeros(n, &[Down], 2),
            konst(n, 2, rat(c, 1)),
            kind,
        )
        .unwrap()
    }

    fn identity(n: usize, kind: MappingKind) -> AG3Mapping {
        radial(
            n,
            2,
            TensorField::zeros(n, &[Down], 2),
            TensorField::zeros(n, &[Down, Down], 2),
            kind,
        )
    }

    #[test]
    fn identity_mapping_keeps_connection() {
        let s = random::space(&mut random::rng(3), 2, 2);
        let t = transform_connection(&s, &identity(2, MappingKind::First)).unwrap();
        assert_eq!(t.gamma(), s.gamma());
    }

    #[test]
    fn transform_hand_example() {
        let psi = TensorField::from_fn(2, &[Down], |ix| konst(2, 2, rat(i64::from(ix[0] == 0), 1)));
        let m = radial(2, 1, psi, TensorField::zeros(2, &[Down, Down], 2), MappingKind::First);
        let t = transform_connection(&flat(2, 2), &m).unwrap();
        let at = |i, j, k| t.gamma().get(&[i, j, k]).value_at_base();
        assert_eq!(at(0, 0, 0), rat(2, 1));
        assert_eq!(at(0, 0, 1), rat(0, 1));
        assert_eq!(at(0, 1, 0), rat(0, 1));
        assert_eq!(at(1, 0, 1), rat(1, 1));
        assert_eq!(at(1, 1, 0), rat(1, 1));
    }

    #[test]
    fn flat_radial_solves_basic_equation() {
        for kind in MappingKind::ALL {
            let r = basic_equation_residual(&flat(3, 2), &identity(3, kind)).unwrap();
            assert!(r.is_zero());
        }
    }

    #[test]
    fn unrelated_data_has_nonzero_residual() {
        let mut rng = random::rng(11);
        let s = random::space(&mut rng, 3, 2);
        let m = AG3Mapping::new(
            random::field(&mut rng, 3, &[Down], 2),
            random::symmetric_form(&mut rng, 3, 2),
            random::field(&mut rng, 3, &[Up], 3),
            random::field(&mut rng, 3, &[Down], 2),
            random::jet(&mut rng, 3, 2),
            MappingKind::First,
        )
        .unwrap();
        assert!(!basic_equation_residual(&s, &m).unwrap().is_zero());
        assert!(matches!(reciprocity_inverse(&s, &m), Err(Error::NonzeroResidual)));
    }

    #[test]
    fn identity_inverse_keeps_nu_mu() {
        let m = identity(2, MappingKind::Second);
        let inv = reciprocity_inverse(&flat(2, 2), &m).unwrap();
        assert_eq!(inv.nu, m.nu);
        assert_eq!(inv.mu, m.mu);
    }

    #[test]
    fn degenerate_synthesis_hand_expansion() {
        // B = 0, ν = 0, μ constant, φ constant: Γ^i_{kj} = μδ^i_jw_k
        let n = 2;
        let mu = rat(3, 1);
        let phi0 = rat(2, 1);
        let w0 = rat(1, 2);
        let gamma = TensorField::from_fn(n, &[Up, Down, Down], |ix| {
            let (i, k, j) = (ix[0], ix[1], ix[2]);
            konst(n, 2, if i == j && k == 0 { &mu * &w0 } else { rat(0, 1) })
        });
        let s = Space::from_connection(gamma).unwrap();
        let phi = TensorField::from_fn(n, &[Up], |ix| konst(n, 3, if ix[0] == 0 { phi0.clone() } else { rat(0, 1) }));
        let m = AG3Mapping::new(
            TensorField::zeros(n, &[Down], 2),
            TensorField::zeros(n, &[Down, Down], 2),
            phi,
            TensorField::zeros(n, &[Down], 2),
            konst(n, 2, mu.clone()),
            MappingKind::First,
        )
        .unwrap();
        assert!(basic_equation_residual(&s, &m).unwrap().is_zero());
        // torsion^i_{kj} = ½μ(δ^i_jw_k − δ^i_kw_j)
        let tor = s.torsion();
        assert_eq!(tor.get(&[1, 0, 1]).value_at_base(), rat(3, 4));
        assert_eq!(tor.get(&[1, 1, 0]).value_at_base(), rat(-3, 4));
        assert!(tor.get(&[0, 0, 0]).is_zero());
    }

    #[test]
    fn pure_psi_gamma_difference() {
        let mut rng = random::rng(2);
        let psi = random::field(&mut rng, 2, &[Down], 2);
        let m = radial(2, 1, psi.clone(), TensorField::zeros(2, &[Down, Down], 2), MappingKind::First);
        let pair = MappedPair::new(flat(2, 2), m).unwrap();
        let diff = gamma_diff_factorized(&pair).unwrap();
        let expected = TensorField::from_fn(2, &[Up, Down, Down], |ix| {
            let (i, j, k) = (ix[0], ix[1], ix[2]);
            let mut v = JetScalar::zero(2, 2);
            if i == k {
                v = v + psi.get(&[j]);
            }
            if i == j {
                v = v + psi.get(&[k]);
            }
            v
        });
        assert_eq!(diff, expected);
    }

    #[test]
    fn synthesized_instances_satisfy_contracts() {
        for kind in MappingKind::ALL {
            for seed in 0..3 {
                let pair = synthesize_instance(3, kind, seed, 2).unwrap();
                // independent route: explicit loop for φ^i_{,j} + Γ^i_{αj}φ^α (or Γ^i_{jα})
                let g = pair.source.gamma();
                let m = &pair.mapping;
                for i in 0..3 {
                    for j in 0..3 {
                        let mut v = m.phi.get(&[i]).partial(j).unwrap();
                        for a in 0..3 {
                            let c = match kind {
                                MappingKind::First => g.get(&[i, a, j]),
                                MappingKind::Second => g.get(&[i, j, a]),
                            };
                            v = v + c * m.phi.get(&[a]);
                        }
                        v = v - m.nu.get(&[j]) * m.phi.get(&[i]);
                        if i == j {
                            v = v - &m.mu;
                        }
                        assert!(v.is_zero(), "kind {kind:?} seed {seed} ({i},{j})");
                    }
                }
                assert!(!pair.source.torsion().is_zero());
                assert_eq!(pair.source.torsion(), pair.target.torsion());
                gamma_diff_factorized(&pair).unwrap();
            }
        }
    }

    #[test]
    fn corrupted_inverse_breaks_basic_equation() {
        let pair = synthesize_instance(3, MappingKind::First, 4, 2).unwrap();
        let bad = corrupted_inverse(&pair.mapping);
        assert!(!basic_equation_residual(&pair.target, &bad).unwrap().is_zero());
    }

    #[test]
    fn synthesis_rejects_bad_arguments() {
        assert!(synthesize_instance(1, MappingKind::First, 0, 2).is_err());
        assert!(MappingKind::try_from(3).is_err());
    }

    #[test]
    fn pair_json_round_trip() {
        let pair = synthesize_instance(2, MappingKind::Second, 8, 2).unwrap();
        let text = serde_json::to_string(&pair).unwrap();
        assert!(text.contains("\"basic_equation_residual_zero\":true"));
        let back: MappedPair = serde_json::from_str(&text).unwrap();
        assert_eq!(back, pair);
        let bad_sigma = text.replacen("\"kind\":2", "\"kind\":5", 1);
        assert!(serde_json::from_str::<MappedPair>(&bad_sigma).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn reciprocity_is_an_involution(seed in any::<u64>(), second in any::<bool>()) {
            let kind = if second { MappingKind::Second } else { MappingKind::First };
            let pair = synthesize_instance(2, kind, seed, 2).unwrap();
            let inv = pair.inverse_mapping().unwrap();
            let back = transform_connection(&pair.target, &inv).unwrap();
            prop_assert_eq!(back.gamma(), pair.source.gamma());
            prop_assert!(basic_equation_residual(&pair.target, &inv).unwrap().is_zero());
            let again = reciprocity_inverse(&pair.target, &inv).unwrap();
            prop_assert_eq!(again, pair.mapping.clone());
        }
    }
}
