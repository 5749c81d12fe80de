//! Invariants of equitorsion third-type almost geodesic mappings.
//!
//! Notation in comments: `T` is the torsion `Γ^i_{[jk]}` (with ½), `S` the
//! symmetric part of the connection, `G_j = S^α_{jα}`, `F_j = φ^ασ_{αj}`,
//! `c = 1/(N+1)`, and `;` the covariant derivative of the symmetric part.

use std::sync::OnceLock;

use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CurvatureParams, Space};
use crate::jet::JetScalar;
use crate::linalg::{span_dimension, ParamMatrix, ParamPoly, RationalMatrix};
use crate::mapping::{connection_trace, AG3Mapping, MappedPair, MappingKind};
use crate::random;
use crate::report::VerificationReport;
use crate::tensor::{Down, TensorField, Up};
use crate::{rat, Rational};

pub const U_COUNT: usize = 20;
pub const SIGMA_COUNT: usize = 8;

const CURVATURE: [crate::tensor::Variance; 4] = [Up, Down, Down, Down];

/// Which reading of the `W★` correction terms to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WStarForm {
    /// The correction terms exactly as printed.
    Printed,
    /// Correction terms re-derived from the transformation law; see
    /// [`InvariantContext::corrections`].
    Derived,
}

impl WStarForm {
    pub fn name(self) -> &'static str {
        match self {
            WStarForm::Printed => "printed",
            WStarForm::Derived => "derived",
        }
    }
}

/// Everything derived from one (space, mapping) pair, evaluated once.
pub struct InvariantContext {
    n: usize,
    c: Rational,
    sym: TensorField,
    tor: TensorField,
    r: TensorField,
    k_terms: [TensorField; 5],
    trace: TensorField,
    trace_cd: TensorField,
    tor_cd: TensorField,
    sigma: TensorField,
    sigma_cd: TensorField,
    sigma_phi: TensorField,
    phi: TensorField,
    nu: TensorField,
    mu: JetScalar,
    /// `T^i_{αn}φ^α`
    tor_phi: TensorField,
    us: Vec<TensorField>,
    sigmas: OnceLock<Vec<TensorField>>,
    corrections: [OnceLock<TensorField>; 4],
}

fn field4<F>(n: usize, mut f: F) -> TensorField
where
    F: FnMut(usize, usize, usize, usize) -> JetScalar,
{
    TensorField::from_fn(n, &CURVATURE, |ix| f(ix[0], ix[1], ix[2], ix[3]))
}

fn check_index(what: &'static str, value: usize, max: usize) -> Result<usize> {
    if (1..=max).contains(&value) {
        Ok(value - 1)
    } else {
        Err(Error::InvalidIndex { what, value })
    }
}

fn inv_n_plus_one(n: usize) -> Rational {
    rat(1, n as i64 + 1)
}

impl InvariantContext {
    pub fn new(space: &Space, mapping: &AG3Mapping) -> Result<Self> {
        let n = space.dim();
        if mapping.dim() != n {
            return Err(Error::DimensionMismatch {
                left: n,
                right: mapping.dim(),
            });
        }
        let (sym, tor) = space.split_connection();
        let trace = connection_trace(&sym);
        let trace_cd = space.cov_deriv_assoc(&trace)?;
        let tor_cd = space.cov_deriv_assoc(&tor)?;
        let sigma_cd = space.cov_deriv_assoc(&mapping.sigma)?;
        let tor_phi = tor
            .outer(&mapping.phi)?
            .contract(3, 1)?;
        let mut ctx = InvariantContext {
            n,
            c: inv_n_plus_one(n),
            r: space.curvature_r()?,
            k_terms: space.k_coefficient_tensors()?,
            sym,
            tor,
            trace,
            trace_cd,
            tor_cd,
            sigma: mapping.sigma.clone(),
            sigma_cd,
            sigma_phi: mapping.sigma_phi(),
            phi: mapping.phi.clone(),
            nu: mapping.nu.clone(),
            mu: mapping.mu.clone(),
            tor_phi,
            us: Vec::new(),
            sigmas: OnceLock::new(),
            corrections: Default::default(),
        };
        ctx.us = ctx.build_us();
        Ok(ctx)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn curvature_r(&self) -> &TensorField {
        &self.r
    }

    pub fn torsion(&self) -> &TensorField {
        &self.tor
    }

    /// `T^i_{jm;n}`
    pub fn torsion_cd(&self) -> &TensorField {
        &self.tor_cd
    }

    /// `T^i_{jm;n}, T^i_{jn;m}, T^α_{jm}T^i_{αn}, T^α_{jn}T^i_{αm}, T^α_{mn}T^i_{αj}`.
    pub fn k_terms(&self) -> &[TensorField; 5] {
        &self.k_terms
    }

    fn zero(&self) -> JetScalar {
        JetScalar::zero(self.n, self.r.order().max(1))
    }

    fn sum<F: Fn(usize) -> JetScalar>(&self, f: F) -> JetScalar {
        (0..self.n).fold(self.zero(), |acc, a| acc + f(a))
    }

    pub fn curvature_k(&self, params: &CurvatureParams) -> TensorField {
        let mut k = self.r.clone();
        for (coef, t) in params.as_array().into_iter().zip(&self.k_terms) {
            if !coef.is_zero() {
                k = k.add(&t.scale(coef)).expect("same shape");
            }
        }
        k
    }

    /// `η★_{jk} = c²((N+1)σ_{jk}φ^αA_α − A_jA_k)
    ///   − c(σ_{jα;k}φ^α + σ_{jk}μ + σ_{jα}(ν_kφ^α ∓ T^α_{βk}φ^β))`
    /// with `A_j = G_j + σ_{jα}φ^α`; the torsion term enters with `−` for the
    /// first kind and `+` for the second.
    pub fn eta_star(&self, which: MappingKind) -> TensorField {
        let eps = which.sign();
        let n = self.n;
        let np1 = rat(n as i64 + 1, 1);
        let c2 = &self.c * &self.c;
        let a = self.trace.add(&self.sigma_phi).expect("covectors");
        let phi_a = self.sum(|al| self.phi.get(&[al]) * a.get(&[al]));
        TensorField::from_fn(n, &[Down, Down], |ix| {
            let (j, k) = (ix[0], ix[1]);
            let sjk = self.sigma.get(&[j, k]);
            let quad = (sjk * &phi_a).scale(&np1) - a.get(&[j]) * a.get(&[k]);
            let lin = self.sum(|al| self.sigma_cd.get(&[j, al, k]) * self.phi.get(&[al]))
                + sjk * &self.mu
                + self.sigma_phi.get(&[j]) * self.nu.get(&[k])
                - self
                    .sum(|al| self.sigma.get(&[j, al]) * self.tor_phi.get(&[al, k]))
                    .scale(&eps);
            quad.scale(&c2) - lin.scale(&self.c)
        })
    }

    /// `W★ − R`, cached per kind and form.
    ///
    /// Printed form:
    /// ```text
    /// δ^i_jη★_{[mn]} − cδ^i_m(G_{j;n} − (N+1)(η★_{jn} + μσ_{jn}))
    /// + cδ^i_n(G_{j;m} − (N+1)(η★_{jm} + μσ_{jm}))
    /// − (σ_{jm;n} − σ_{jn;m} − (σ_{jm}F_n − σ_{jn}F_m))φ^i
    /// ± (σ_{jm}T^i_{αn} − σ_{jn}T^i_{αm})φ^α
    /// ```
    ///
    /// Derived form:
    /// ```text
    /// δ^i_j(η★_{[mn]} − c(G_{m;n} − G_{n;m})) + δ^i_m(η★_{jn} − cG_{j;n})
    /// − δ^i_n(η★_{jm} − cG_{j;m}) + (σ_{jm;n} − σ_{jn;m})φ^i
    /// + (σ_{jm}ν_n − σ_{jn}ν_m)φ^i + μ(σ_{jm}δ^i_n − σ_{jn}δ^i_m)
    /// ∓ (σ_{jm}T^i_{αn} − σ_{jn}T^i_{αm})φ^α
    /// ```
    ///
    /// Upper signs for the first kind. `[mn]` is antisymmetrization without
    /// division.
    pub fn corrections(&self, which: MappingKind, form: WStarForm) -> &TensorField {
        let slot = (which.number() as usize - 1) * 2 + usize::from(form == WStarForm::Derived);
        self.corrections[slot].get_or_init(|| self.build_corrections(which, form))
    }

    fn build_corrections(&self, which: MappingKind, form: WStarForm) -> TensorField {
        let eps = which.sign();
        let np1 = rat(self.n as i64 + 1, 1);
        let c = &self.c;
        let eta = self.eta_star(which);
        let eta_skew = eta.antisym_pair_nodiv(0, 1).expect("covariant pair");
        let s = |a: usize, b: usize| self.sigma.get(&[a, b]);
        let scd = |a: usize, b: usize, d: usize| self.sigma_cd.get(&[a, b, d]);
        let gcd = |a: usize, b: usize| self.trace_cd.get(&[a, b]);
        field4(self.n, |i, j, m, n| {
            let torsion_block = s(j, m) * self.tor_phi.get(&[i, n]) - s(j, n) * self.tor_phi.get(&[i, m]);
            let curl = scd(j, m, n) - scd(j, n, m);
            let mut v = self.zero();
            match form {
                WStarForm::Printed => {
                    if i == j {
                        v = v + eta_skew.get(&[m, n]);
                    }
                    if i == m {
                        let inner = gcd(j, n) - (eta.get(&[j, n]) + &self.mu * s(j, n)).scale(&np1);
                        v = v - inner.scale(c);
                    }
                    if i == n {
                        let inner = gcd(j, m) - (eta.get(&[j, m]) + &self.mu * s(j, m)).scale(&np1);
                        v = v + inner.scale(c);
                    }
                    let quad = s(j, m) * self.sigma_phi.get(&[n]) - s(j, n) * self.sigma_phi.get(&[m]);
                    v = v - (curl - quad) * self.phi.get(&[i]) + torsion_block.scale(&eps);
                }
                WStarForm::Derived => {
                    if i == j {
                        v = v + eta_skew.get(&[m, n]) - (gcd(m, n) - gcd(n, m)).scale(c);
                    }
                    if i == m {
                        v = v + eta.get(&[j, n]) - gcd(j, n).scale(c) - &self.mu * s(j, n);
                    }
                    if i == n {
                        v = v - eta.get(&[j, m]) + gcd(j, m).scale(c) + &self.mu * s(j, m);
                    }
                    let nu_block = s(j, m) * self.nu.get(&[n]) - s(j, n) * self.nu.get(&[m]);
                    v = v + (curl + nu_block) * self.phi.get(&[i]) - torsion_block.scale(&eps);
                }
            }
            v
        })
    }

    pub fn w_star(&self, which: MappingKind, form: WStarForm) -> TensorField {
        self.r.add(self.corrections(which, form)).expect("same shape")
    }

    fn build_us(&self) -> Vec<TensorField> {
        let t = |a: usize, b: usize, d: usize| self.tor.get(&[a, b, d]);
        let s = |a: usize, b: usize, d: usize| self.sym.get(&[a, b, d]);
        let g = |a: usize| self.trace.get(&[a]);
        let f = |a: usize| self.sigma_phi.get(&[a]);
        let sg = |a: usize, b: usize| self.sigma.get(&[a, b]);
        let ph = |a: usize| self.phi.get(&[a]);
        let tp = |a: usize, b: usize| self.tor_phi.get(&[a, b]);
        let z = || self.zero();
        let n = self.n;
        let build = |theta: usize| {
            field4(n, |i, j, m, nn| match theta {
                1 => self.sum(|a| t(a, j, m) * s(i, a, nn)),
                2 => self.sum(|a| t(a, j, nn) * s(i, a, m)),
                3 => self.sum(|a| t(i, a, m) * s(a, j, nn)),
                4 => self.sum(|a| t(i, a, nn) * s(a, j, m)),
                5 => self.sum(|a| t(i, j, a) * s(a, m, nn)),
                6 => t(i, j, m) * g(nn),
                7 => t(i, j, nn) * g(m),
                8 => t(i, m, nn) * g(j),
                9 => tp(i, m) * sg(j, nn),
                10 => tp(i, nn) * sg(j, m),
                11 => self.sum(|a| t(i, j, a) * ph(a)) * sg(m, nn),
                12 => t(i, j, m) * f(nn),
                13 => t(i, j, nn) * f(m),
                14 => t(i, m, nn) * f(j),
                15 if i == nn => self.sum(|a| t(a, j, m) * g(a)),
                16 if i == m => self.sum(|a| t(a, j, nn) * g(a)),
                17 if i == nn => self.sum(|a| t(a, j, m) * f(a)),
                18 if i == m => self.sum(|a| t(a, j, nn) * f(a)),
                19 => self.sum(|a| t(a, j, m) * sg(a, nn)) * ph(i),
                20 => self.sum(|a| t(a, j, nn) * sg(a, m)) * ph(i),
                _ => z(),
            })
        };
        (1..=U_COUNT).map(build).collect()
    }

    /// The product `U_θ`, `θ ∈ 1..=20`.
    pub fn u_theta(&self, theta: usize) -> Result<&TensorField> {
        Ok(&self.us[check_index("U index", theta, U_COUNT)?])
    }

    /// `σ₍ₚ₎`, `p ∈ 1..=8`, evaluated term by term from its defining formula.
    pub fn sigma_p(&self, p: usize) -> Result<&TensorField> {
        let idx = check_index("sigma index", p, SIGMA_COUNT)?;
        Ok(&self.sigmas.get_or_init(|| (1..=SIGMA_COUNT).map(|p| self.build_sigma(p)).collect())[idx])
    }

    fn build_sigma(&self, p: usize) -> TensorField {
        let t = |a: usize, b: usize, d: usize| self.tor.get(&[a, b, d]);
        let s = |a: usize, b: usize, d: usize| self.sym.get(&[a, b, d]);
        let ph = |a: usize| self.phi.get(&[a]);
        let sg = |a: usize, b: usize| self.sigma.get(&[a, b]);
        // G_k = S^α_{kα}, F_k = φ^ασ_{αk}, recomputed here from the raw fields
        let gt: Vec<JetScalar> = (0..self.n).map(|k| self.sum(|a| s(a, k, a).clone())).collect();
        let fp: Vec<JetScalar> = (0..self.n).map(|k| self.sum(|a| ph(a) * sg(a, k))).collect();
        let c = &self.c;
        field4(self.n, |i, j, m, n| {
            // T^α_{jm}S^i_{αn}, T^i_{αm}S^α_{jn}, T^i_{jα}S^α_{mn}
            let ts1 = || self.sum(|a| t(a, j, m) * s(i, a, n));
            let ts2 = || self.sum(|a| t(i, a, m) * s(a, j, n));
            let ts3 = || self.sum(|a| t(i, j, a) * s(a, m, n));
            // T^α_{jm}φ^iσ_{αn}, T^i_{αm}φ^ασ_{jn}, T^i_{jα}φ^ασ_{mn}
            let tf1 = || self.sum(|a| t(a, j, m) * ph(i) * sg(a, n));
            let tf2 = || self.sum(|a| t(i, a, m) * ph(a) * sg(j, n));
            let tf3 = || self.sum(|a| t(i, j, a) * ph(a) * sg(m, n));
            // δ^i_nT^α_{jm}G_α and δ^i_nT^α_{jm}F_α
            let dg = || if i == n { self.sum(|a| t(a, j, m) * &gt[a]) } else { self.zero() };
            let df = || if i == n { self.sum(|a| t(a, j, m) * &fp[a]) } else { self.zero() };
            let two = rat(2, 1);
            match p {
                1 => ts1() - ts2() - ts3(),
                2 => {
                    let g_part = (t(i, j, m) * &gt[n]).scale(&two) + t(i, j, n) * &gt[m] - t(i, m, n) * &gt[j];
                    let f_part = (t(i, j, m) * &fp[n]).scale(&two) + t(i, j, n) * &fp[m] - t(i, m, n) * &fp[j];
                    ts1() + tf2() + tf3() - g_part.scale(c) - f_part.scale(c)
                }
                3 => {
                    let bracket = t(i, j, m) * &gt[n] + t(i, j, n) * &gt[m] + t(i, j, m) * &fp[n] + t(i, j, n) * &fp[m];
                    ts1() - ts2() + tf3() - bracket.scale(c)
                }
                4 => {
                    let bracket = t(i, j, m) * &gt[n] - t(i, m, n) * &gt[j] + t(i, j, m) * &fp[n] - t(i, m, n) * &fp[j];
                    ts1() - ts3() + tf2() - bracket.scale(c)
                }
                5 => {
                    let bracket = dg() + t(i, j, m) * &gt[n] + df() + t(i, j, m) * &fp[n];
                    -tf1() - ts2() - ts3() + bracket.scale(c)
                }
                6 => {
                    let g_part = dg() - t(i, j, m) * &gt[n] - t(i, j, n) * &gt[m] + t(i, m, n) * &gt[j];
                    let f_part = df() - t(i, j, m) * &fp[n] - t(i, j, n) * &fp[m] + t(i, m, n) * &fp[j];
                    -tf1() + tf2() + tf3() + g_part.scale(c) + f_part.scale(c)
                }
                7 => {
                    let g_part = dg() - t(i, j, n) * &gt[m];
                    let f_part = df() - t(i, j, n) * &fp[m];
                    -tf1() - ts2() + tf3() + g_part.scale(c) + f_part.scale(c)
                }
                8 => {
                    let g_part = dg() + t(i, m, n) * &gt[j];
                    let f_part = df() + t(i, m, n) * &fp[j];
                    -tf1() - ts3() + tf2() + g_part.scale(c) + f_part.scale(c)
                }
                _ => unreachable!("p checked by caller"),
            }
        })
    }

    /// `Σ_θ coeffs[θ]·U_θ`.
    pub fn u_combination(&self, coeffs: &[Rational]) -> TensorField {
        let mut acc = TensorField::zeros(self.n, &CURVATURE, self.zero().order());
        for (coef, u) in coeffs.iter().zip(&self.us) {
            if !coef.is_zero() {
                acc = acc.add(&u.scale(coef)).expect("same shape");
            }
        }
        acc
    }

    /// Checks `σ₍ₚ₎ = Σ_θ u^p_θU_θ` for every `p` against the coefficient table.
    pub fn validate_sigma_coeff_matrix(&self) -> Result<()> {
        let table = sigma_coeff_matrix(self.n)?;
        for p in 1..=SIGMA_COUNT {
            let diff = self.sigma_p(p)?.sub(&self.u_combination(table.row(p - 1)))?;
            if !diff.is_zero() {
                return Err(Error::IdentityFailed(Box::new(
                    VerificationReport::from_residual("sigma_coeff_matrix", diff).with_param("p", p),
                )));
            }
        }
        Ok(())
    }

    /// `T̃ᵖ = T^i_{jm;n} − Σ_θ u^ρ_θU_θ`.
    pub fn t_tilde(&self, rho: usize) -> Result<TensorField> {
        let idx = check_index("T-tilde index", rho, SIGMA_COUNT)?;
        let table = sigma_coeff_matrix(self.n)?;
        self.tor_cd.sub(&self.u_combination(table.row(idx)))
    }

    /// `K(u,u′,v,v′,w) + (W★ − R) − u·σ₍ₚ₎^i_{jmn} − u′·σ₍q₎^i_{jnm}`.
    pub fn w_family(
        &self,
        which: MappingKind,
        form: WStarForm,
        p: usize,
        q: usize,
        params: &CurvatureParams,
    ) -> Result<TensorField> {
        let sp = self.sigma_p(p)?;
        let sq_swapped = self.sigma_p(q)?.swap_slots(2, 3)?;
        self.curvature_k(params)
            .add(self.corrections(which, form))?
            .sub(&sp.scale(&params.u))?
            .sub(&sq_swapped.scale(&params.u_prime))
    }

    /// Every `W_family` cell for one parameter draw, sharing the
    /// parameter-only part across cells.
    pub fn family_table(
        &self,
        which: MappingKind,
        form: WStarForm,
        params: &CurvatureParams,
    ) -> Result<FamilyTable> {
        let k = self.curvature_k(params);
        let base = k.add(self.corrections(which, form))?;
        let u_sigma = (1..=SIGMA_COUNT)
            .map(|p| Ok(self.sigma_p(p)?.scale(&params.u)))
            .collect::<Result<Vec<_>>>()?;
        let u_prime_sigma_swapped = (1..=SIGMA_COUNT)
            .map(|q| Ok(self.sigma_p(q)?.swap_slots(2, 3)?.scale(&params.u_prime)))
            .collect::<Result<Vec<_>>>()?;
        Ok(FamilyTable {
            k,
            base,
            u_sigma,
            u_prime_sigma_swapped,
        })
    }

    /// Right side of the correlation identity:
    /// `W★ − uσ₍ₚ₎ − u′σ₍q₎(m↔n) + uT_{jm;n} + u′T_{jn;m} + vT^α_{jm}T^i_{αn}
    ///  + v′T^α_{jn}T^i_{αm} + wT^α_{mn}T^i_{αj}`.
    pub fn correlation_rhs(
        &self,
        which: MappingKind,
        form: WStarForm,
        p: usize,
        q: usize,
        params: &CurvatureParams,
    ) -> Result<TensorField> {
        let mut acc = self
            .w_star(which, form)
            .sub(&self.sigma_p(p)?.scale(&params.u))?
            .sub(&self.sigma_p(q)?.swap_slots(2, 3)?.scale(&params.u_prime))?;
        for (coef, t) in params.as_array().into_iter().zip(&self.k_terms) {
            acc = acc.add(&t.scale(coef))?;
        }
        Ok(acc)
    }
}

/// Parameter-dependent pieces of the `W_family` cells for one draw.
pub struct FamilyTable {
    k: TensorField,
    base: TensorField,
    u_sigma: Vec<TensorField>,
    u_prime_sigma_swapped: Vec<TensorField>,
}

impl FamilyTable {
    pub fn curvature_k(&self) -> &TensorField {
        &self.k
    }

    /// `uσ₍ₚ₎ + u′σ₍q₎(m↔n)`.
    pub fn sigma_shift(&self, p: usize, q: usize) -> Result<TensorField> {
        let p = check_index("family index p", p, SIGMA_COUNT)?;
        let q = check_index("family index q", q, SIGMA_COUNT)?;
        self.u_sigma[p].add(&self.u_prime_sigma_swapped[q])
    }

    pub fn cell(&self, p: usize, q: usize) -> Result<TensorField> {
        self.base.sub(&self.sigma_shift(p, q)?)
    }
}

/// Coefficients of `σ₍ₚ₎` in the `U` basis, rows `p = 1..8`, columns `θ = 1..20`.
pub fn sigma_coeff_matrix(n: usize) -> Result<RationalMatrix> {
    if n < 2 {
        return Err(Error::InvalidIndex {
            what: "dimension (must be at least 2)",
            value: n,
        });
    }
    let c = inv_n_plus_one(n);
    let one = Rational::one();
    // (θ, multiple of 1) and (θ, multiple of c)
    type Terms = &'static [(usize, i64)];
    let rows: [(Terms, Terms); SIGMA_COUNT] = [
        (&[(1, 1), (3, -1), (5, -1)], &[]),
        (
            &[(1, 1), (9, 1), (11, 1)],
            &[(6, -2), (7, -1), (8, 1), (12, -2), (13, -1), (14, 1)],
        ),
        (&[(1, 1), (3, -1), (11, 1)], &[(6, -1), (7, -1), (12, -1), (13, -1)]),
        (&[(1, 1), (5, -1), (9, 1)], &[(6, -1), (8, 1), (12, -1), (14, 1)]),
        (&[(19, -1), (3, -1), (5, -1)], &[(15, 1), (6, 1), (17, 1), (12, 1)]),
        (
            &[(19, -1), (9, 1), (11, 1)],
            &[(15, 1), (6, -1), (7, -1), (8, 1), (17, 1), (12, -1), (13, -1), (14, 1)],
        ),
        (&[(19, -1), (3, -1), (11, 1)], &[(15, 1), (7, -1), (17, 1), (13, -1)]),
        (&[(19, -1), (5, -1), (9, 1)], &[(15, 1), (8, 1), (17, 1), (14, 1)]),
    ];
    let mut m = RationalMatrix::zeros(SIGMA_COUNT, U_COUNT);
    for (p, (plain, scaled)) in rows.iter().enumerate() {
        for &(theta, k) in plain.iter() {
            m.set(p, theta - 1, &one * rat(k, 1));
        }
        for &(theta, k) in scaled.iter() {
            m.set(p, theta - 1, &c * rat(k, 1));
        }
    }
    Ok(m)
}

/// Exchanging `m` and `n` sends `U_θ` to `sign·U_{target}`; entry `θ−1` is
/// `(target−1, sign)`.
pub const U_SWAP: [(usize, i64); U_COUNT] = [
    (1, 1),
    (0, 1),
    (3, 1),
    (2, 1),
    (4, 1),
    (6, 1),
    (5, 1),
    (7, -1),
    (9, 1),
    (8, 1),
    (10, 1),
    (12, 1),
    (11, 1),
    (13, -1),
    (15, 1),
    (14, 1),
    (17, 1),
    (16, 1),
    (19, 1),
    (18, 1),
];

/// Row `q` of the coefficient table transported through `m ↔ n`.
pub fn swapped_coeff_row(row: &[Rational]) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); U_COUNT];
    for (theta, coef) in row.iter().enumerate() {
        let (target, sign) = U_SWAP[theta];
        out[target] = coef * rat(sign, 1);
    }
    out
}

/// The `64 × 26` matrix with rows `(p, q)`:
/// `[1 | −(u·u^p_θ + u′·u^{q*}_θ) | u, u′, v, v′, w]` in parameters `(u, u′, v, v′, w)`.
pub fn build_w_matrix(n: usize) -> Result<ParamMatrix> {
    let table = sigma_coeff_matrix(n)?;
    const NV: usize = 5;
    let vars: Vec<ParamPoly> = (0..NV).map(|k| ParamPoly::var(NV, k)).collect();
    let mut rows = Vec::with_capacity(SIGMA_COUNT * SIGMA_COUNT);
    for p in 0..SIGMA_COUNT {
        for q in 0..SIGMA_COUNT {
            let swapped = swapped_coeff_row(table.row(q));
            let mut row = vec![ParamPoly::constant(NV, Rational::one())];
            for (theta, sw) in swapped.iter().enumerate().take(U_COUNT) {
                let entry = vars[0]
                    .scale(table.get(p, theta))
                    .add(&vars[1].scale(sw))
                    .scale(&-Rational::one());
                row.push(entry);
            }
            row.extend(vars.iter().cloned());
            rows.push(row);
        }
    }
    ParamMatrix::new(NV, rows)
}

fn random_params(rng: &mut random::SeededRng) -> CurvatureParams {
    let mut draw = || loop {
        let q = random::small_rational(rng);
        if !q.is_zero() {
            break q;
        }
    };
    CurvatureParams::new(draw(), draw(), draw(), draw(), draw())
}

/// Nonzero random family parameters from a seed.
pub fn family_params(seed: u64) -> CurvatureParams {
    random_params(&mut random::rng(seed))
}

/// Dimension of the span of `W_family − W★` over parameter-family cells.
///
/// One parameter draw is fixed from `seed`. Row `k` evaluates the cell
/// `(p, q)` with `k < 64` enumerating the grid and later rows drawn at
/// random; each row concatenates every jet coefficient across `pairs`.
pub fn family_span_dimension(
    pairs: &[MappedPair],
    which: MappingKind,
    samples: usize,
    seed: u64,
) -> Result<usize> {
    const MIN_SAMPLES: usize = 26;
    if samples < MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_SAMPLES,
            got: samples,
        });
    }
    let mut rng = random::rng(seed);
    let params = random_params(&mut rng);
    let contexts = pairs
        .iter()
        .map(|p| InvariantContext::new(&p.source, &p.mapping))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(samples);
    for k in 0..samples {
        let (p, q) = if k < SIGMA_COUNT * SIGMA_COUNT {
            (k / SIGMA_COUNT + 1, k % SIGMA_COUNT + 1)
        } else {
            (rng.gen_range(1..=SIGMA_COUNT), rng.gen_range(1..=SIGMA_COUNT))
        };
        let mut row = Vec::new();
        for ctx in &contexts {
            let fam = ctx.w_family(which, WStarForm::Printed, p, q, &params)?;
            let common = ctx.w_star(which, WStarForm::Printed);
            let diff = fam.sub(&common)?;
            row.extend(coefficient_row(&diff, diff.order()));
        }
        rows.push(row);
    }
    span_dimension(&rows)
}

/// Coefficients of `t` truncated to `order`, so fields of mixed jet order
/// flatten to vectors of equal length.
fn coefficient_row(t: &TensorField, order: usize) -> Vec<Rational> {
    t.map(|c| c.truncate(order)).flatten_coefficients()
}

/// Span of the eight `U`-combinations `Σ_θ u^ρ_θU_θ`, each flattened across
/// all contexts.
pub fn u_combination_span(contexts: &[InvariantContext]) -> Result<usize> {
    let Some(first) = contexts.first() else {
        return Ok(0);
    };
    let table = sigma_coeff_matrix(first.dim())?;
    let rows: Vec<Vec<Rational>> = (0..SIGMA_COUNT)
        .map(|rho| {
            contexts
                .iter()
                .flat_map(|ctx| {
                    let t = ctx.u_combination(table.row(rho));
                    coefficient_row(&t, t.order())
                })
                .collect()
        })
        .collect();
    span_dimension(&rows)
}

/// Span of the five torsion terms of the curvature family, each flattened
/// across all spaces.
pub fn curvature_family_span(spaces: &[Space]) -> Result<usize> {
    let terms = spaces
        .iter()
        .map(Space::k_coefficient_tensors)
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<Vec<Rational>> = (0..5)
        .map(|k| {
            terms
                .iter()
                .flat_map(|t| {
                    let order = t.iter().map(TensorField::order).min().unwrap_or(0);
                    coefficient_row(&t[k], order)
                })
                .collect()
        })
        .collect();
    span_dimension(&rows)
}

/// Source-side and target-side contexts of a mapped pair.
pub struct PairContexts {
    pub kind: MappingKind,
    pub source: InvariantContext,
    pub target: InvariantContext,
}

impl PairContexts {
    /// Barred data from the reciprocity inverse.
    pub fn new(pair: &MappedPair) -> Result<Self> {
        Self::with_barred(pair, &pair.inverse_mapping()?)
    }

    /// Barred data supplied by the caller (used for negative controls).
    pub fn with_barred(pair: &MappedPair, barred: &AG3Mapping) -> Result<Self> {
        Ok(PairContexts {
            kind: pair.mapping.kind,
            source: InvariantContext::new(&pair.source, &pair.mapping)?,
            target: InvariantContext::new(&pair.target, barred)?,
        })
    }

    pub fn w_star_invariance(&self, which: MappingKind, form: WStarForm) -> VerificationReport {
        let residual = self
            .target
            .w_star(which, form)
            .sub(&self.source.w_star(which, form))
            .expect("same shape");
        VerificationReport::from_residual("w_star_invariance", residual)
            .with_param("which", which.number())
            .with_param("form", form.name())
    }

    pub fn t_tilde_invariance(&self, rho: usize) -> Result<VerificationReport> {
        let residual = self.target.t_tilde(rho)?.sub(&self.source.t_tilde(rho)?)?;
        Ok(VerificationReport::from_residual("t_tilde_invariance", residual).with_param("rho", rho))
    }

    pub fn w_family_invariance(
        &self,
        which: MappingKind,
        form: WStarForm,
        p: usize,
        q: usize,
        params: &CurvatureParams,
    ) -> Result<VerificationReport> {
        let residual = self
            .target
            .w_family(which, form, p, q, params)?
            .sub(&self.source.w_family(which, form, p, q, params)?)?;
        Ok(VerificationReport::from_residual("w_family_invariance", residual)
            .with_param("which", which.number())
            .with_param("form", form.name())
            .with_param("p", p)
            .with_param("q", q)
            .with_param("params", serde_json::to_value(params).unwrap_or_default()))
    }

    /// `T̄_{jm;̄n} − T_{jm;n}` against the connection-difference expansion
    /// `T^α_{jm}D^i_{αn} − T^i_{αm}D^α_{jn} − T^i_{jα}D^α_{mn}`, `D = S̄ − S`.
    pub fn torsion_cd_expansion_check(&self) -> Result<VerificationReport> {
        let (s, t) = (&self.source, &self.target);
        let lhs = t.tor_cd.sub(&s.tor_cd)?;
        let d = t.sym.sub(&s.sym)?;
        let tor = &s.tor;
        let zero = s.zero();
        let sum = |f: &dyn Fn(usize) -> JetScalar| (0..s.n).fold(zero.clone(), |acc, a| acc + f(a));
        let expansion = field4(s.n, |i, j, m, n| {
            sum(&|a| tor.get(&[a, j, m]) * d.get(&[i, a, n]))
                - sum(&|a| tor.get(&[i, a, m]) * d.get(&[a, j, n]))
                - sum(&|a| tor.get(&[i, j, a]) * d.get(&[a, m, n]))
        });
        Ok(VerificationReport::from_residual("torsion_cd_expansion", lhs.sub(&expansion)?))
    }

    /// `T̄_{jm;̄n} − T_{jm;n} = σ̄₍ₚ₎ − σ₍ₚ₎`.
    pub fn sigma_difference_check(&self, p: usize) -> Result<VerificationReport> {
        let (s, t) = (&self.source, &self.target);
        let lhs = t.tor_cd.sub(&s.tor_cd)?;
        let sigma_diff = t.sigma_p(p)?.sub(s.sigma_p(p)?)?;
        Ok(VerificationReport::from_residual("sigma_difference", lhs.sub(&sigma_diff)?).with_param("p", p))
    }

    /// Both torsion-derivative checks; the first failure is reported.
    pub fn torsion_cd_difference_check(&self, p: usize) -> Result<VerificationReport> {
        let first = self.torsion_cd_expansion_check()?;
        let report = if first.pass {
            self.sigma_difference_check(p)?
        } else {
            first.with_note("difference of torsion derivatives does not match the connection-difference expansion")
        };
        Ok(VerificationReport {
            check: "torsion_cd_difference".into(),
            ..report
        }
        .with_param("p", p))
    }

    /// `R̄ = R − C̄ + C` with `C = W★ − R` on each side.
    pub fn r_transformation_check(&self, which: MappingKind, form: WStarForm) -> Result<VerificationReport> {
        let (s, t) = (&self.source, &self.target);
        let shift = s.corrections(which, form).sub(t.corrections(which, form))?;
        let residual = t.r.sub(&s.r.add(&shift)?)?;
        Ok(VerificationReport::from_residual("r_transformation", residual)
            .with_param("which", which.number())
            .with_param("form", form.name()))
    }

    /// Family invariance, correlation identity and `K` transformation for
    /// every `(p, q)` in `grid` at one parameter draw.
    pub fn family_checks(
        &self,
        which: MappingKind,
        form: WStarForm,
        params: &CurvatureParams,
        grid: &[(usize, usize)],
    ) -> Result<Vec<VerificationReport>> {
        let (s, t) = (&self.source, &self.target);
        let src = s.family_table(which, form, params)?;
        let tgt = t.family_table(which, form, params)?;
        let shift = s.corrections(which, form).sub(t.corrections(which, form))?;
        let k_base = src.curvature_k().add(&shift)?;
        let mut rhs_base = s.w_star(which, form);
        for (coef, term) in params.as_array().into_iter().zip(&s.k_terms) {
            rhs_base = rhs_base.add(&term.scale(coef))?;
        }
        let params_json = serde_json::to_value(params).unwrap_or_default();
        let mut out = Vec::with_capacity(grid.len() * 3);
        for &(p, q) in grid {
            let tag = |r: VerificationReport| {
                r.with_param("which", which.number())
                    .with_param("form", form.name())
                    .with_param("p", p)
                    .with_param("q", q)
                    .with_param("params", params_json.clone())
            };
            let (src_shift, tgt_shift) = (src.sigma_shift(p, q)?, tgt.sigma_shift(p, q)?);
            let src_cell = src.cell(p, q)?;
            let invariance = tgt.cell(p, q)?.sub(&src_cell)?;
            out.push(tag(VerificationReport::from_residual("w_family_invariance", invariance)));
            let correlation = src_cell.sub(&rhs_base.sub(&src_shift)?)?;
            out.push(tag(VerificationReport::from_residual("correlation_identity", correlation)));
            let k_rhs = k_base.add(&tgt_shift)?.sub(&src_shift)?;
            let k_residual = tgt.curvature_k().sub(&k_rhs)?;
            out.push(tag(VerificationReport::from_residual("k_transformation", k_residual)));
        }
        Ok(out)
    }

    /// Correlation identity on the source side.
    pub fn correlation_check(
        &self,
        which: MappingKind,
        form: WStarForm,
        p: usize,
        q: usize,
        params: &CurvatureParams,
    ) -> Result<VerificationReport> {
        let ctx = &self.source;
        let residual = ctx
            .w_family(which, form, p, q, params)?
            .sub(&ctx.correlation_rhs(which, form, p, q, params)?)?;
        Ok(VerificationReport::from_residual("correlation_identity", residual)
            .with_param("which", which.number())
            .with_param("p", p)
            .with_param("q", q))
    }

    /// `R̄ = R − C̄ + C` and
    /// `K̄ = K − C̄ + C + uσ̄₍ₚ₎ + u′σ̄₍q₎(m↔n) − uσ₍ₚ₎ − u′σ₍q₎(m↔n)`,
    /// where `C = W★ − R` on each side.
    pub fn r_and_k_transformation_check(
        &self,
        which: MappingKind,
        form: WStarForm,
        p: usize,
        q: usize,
        params: &CurvatureParams,
    ) -> Result<[VerificationReport; 2]> {
        let (s, t) = (&self.source, &self.target);
        let shift = s
            .corrections(which, form)
            .sub(t.corrections(which, form))?;
        let r_rhs = s.r.add(&shift)?;
        let r_report = VerificationReport::from_residual("r_transformation", t.r.sub(&r_rhs)?);

        let sigma_shift = |ctx: &InvariantContext| -> Result<TensorField> {
            ctx.sigma_p(p)?
                .scale(&params.u)
                .add(&ctx.sigma_p(q)?.swap_slots(2, 3)?.scale(&params.u_prime))
        };
        let k_rhs = s
            .curvature_k(params)
            .add(&shift)?
            .add(&sigma_shift(t)?)?
            .sub(&sigma_shift(s)?)?;
        let k_report =
            VerificationReport::from_residual("k_transformation", t.curvature_k(params).sub(&k_rhs)?);
        let tag = |r: VerificationReport| {
            r.with_param("which", which.number())
                .with_param("form", form.name())
                .with_param("p", p)
                .with_param("q", q)
        };
        Ok([tag(r_report), tag(k_report)])
    }
}

pub fn eta_star(s: &Space, m: &AG3Mapping, which: MappingKind) -> Result<TensorField> {
    Ok(InvariantContext::new(s, m)?.eta_star(which))
}

/// `W★` exactly as printed.
pub fn w_star(s: &Space, m: &AG3Mapping, which: MappingKind) -> Result<TensorField> {
    Ok(InvariantContext::new(s, m)?.w_star(which, WStarForm::Printed))
}

pub fn u_theta(s: &Space, m: &AG3Mapping, theta: usize) -> Result<TensorField> {
    InvariantContext::new(s, m)?.u_theta(theta).cloned()
}

pub fn sigma_p(s: &Space, m: &AG3Mapping, p: usize) -> Result<TensorField> {
    InvariantContext::new(s, m)?.sigma_p(p).cloned()
}

pub fn t_tilde(s: &Space, m: &AG3Mapping, rho: usize) -> Result<TensorField> {
    InvariantContext::new(s, m)?.t_tilde(rho)
}

pub fn w_family(
    s: &Space,
    m: &AG3Mapping,
    which: MappingKind,
    p: usize,
    q: usize,
    params: &CurvatureParams,
) -> Result<TensorField> {
    InvariantContext::new(s, m)?.w_family(which, WStarForm::Printed, p, q, params)
}

pub fn torsion_cd_difference_check(pair: &MappedPair, p: usize) -> Result<VerificationReport> {
    PairContexts::new(pair)?.torsion_cd_difference_check(p)
}

pub fn r_and_k_transformation_check(
    pair: &MappedPair,
    which: MappingKind,
    p: usize,
    q: usize,
    params: &CurvatureParams,
) -> Result<[VerificationReport; 2]> {
    PairContexts::new(pair)?.r_and_k_transformation_check(which, WStarForm::Printed, p, q, params)
}

#[cfg(test)]
mod tests;
