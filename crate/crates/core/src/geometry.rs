//! Generalized Riemannian spaces given by a non-symmetric connection.
//!
//! The connection `Γ^i_{jk}` is stored with valence `(up, down, down)`. Its
//! symmetric part defines the associated space, which carries the `;`
//! covariant derivative and the curvature tensor `R`. The antisymmetric part
//! is the torsion tensor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::JetScalar;
use crate::tensor::{Down, TensorField, Up, Variance};
use crate::Rational;
use num_traits::Zero;

/// The four covariant derivatives of a non-symmetric connection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DerivKind {
    First,
    Second,
    Third,
    Fourth,
}

impl TryFrom<u8> for DerivKind {
    type Error = Error;

    fn try_from(k: u8) -> Result<Self> {
        match k {
            1 => Ok(DerivKind::First),
            2 => Ok(DerivKind::Second),
            3 => Ok(DerivKind::Third),
            4 => Ok(DerivKind::Fourth),
            _ => Err(Error::InvalidIndex {
                what: "covariant derivative kind",
                value: k as usize,
            }),
        }
    }
}

impl DerivKind {
    /// Contravariant slots use `Γ^i_{αk}` (true) or `Γ^i_{kα}` (false).
    fn up_uses_alpha_first(self) -> bool {
        matches!(self, DerivKind::First | DerivKind::Third)
    }

    /// Covariant slots use `Γ^α_{jk}` (true) or `Γ^α_{kj}` (false).
    fn down_uses_slot_first(self) -> bool {
        matches!(self, DerivKind::First | DerivKind::Fourth)
    }
}

/// Constants `(u, u′, v, v′, w)` selecting a member of the curvature family `K`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurvatureParams {
    pub u: Rational,
    pub u_prime: Rational,
    pub v: Rational,
    pub v_prime: Rational,
    pub w: Rational,
}

impl CurvatureParams {
    pub fn new(u: Rational, u_prime: Rational, v: Rational, v_prime: Rational, w: Rational) -> Self {
        CurvatureParams {
            u,
            u_prime,
            v,
            v_prime,
            w,
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn as_array(&self) -> [&Rational; 5] {
        [&self.u, &self.u_prime, &self.v, &self.v_prime, &self.w]
    }

    pub fn is_zero(&self) -> bool {
        self.as_array().iter().all(|c| c.is_zero())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Space {
    dim: usize,
    gamma: TensorField,
    metric: Option<TensorField>,
}

const CONNECTION: [Variance; 3] = [Up, Down, Down];

impl Space {
    pub fn from_connection(gamma: TensorField) -> Result<Self> {
        if gamma.valence() != CONNECTION {
            return Err(Error::ValenceMismatch(format!(
                "connection must have valence (up, down, down), got {:?}",
                gamma.valence()
            )));
        }
        Ok(Space {
            dim: gamma.dim(),
            gamma,
            metric: None,
        })
    }

    /// Space whose connection is the Christoffel symbol of a non-symmetric metric.
    pub fn from_metric(metric: TensorField) -> Result<Self> {
        let gamma = christoffel_from_metric(&metric)?;
        Ok(Space {
            dim: gamma.dim(),
            gamma,
            metric: Some(metric),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gamma(&self) -> &TensorField {
        &self.gamma
    }

    pub fn metric(&self) -> Option<&TensorField> {
        self.metric.as_ref()
    }

    /// `(Γ^i_{(jk)}, Γ^i_{[jk]})` with the factor ½ in both parts.
    pub fn split_connection(&self) -> (TensorField, TensorField) {
        (self.symmetric_part(), self.torsion())
    }

    pub fn symmetric_part(&self) -> TensorField {
        self.gamma.sym_pair(1, 2).expect("connection lower slots")
    }

    pub fn torsion(&self) -> TensorField {
        self.gamma.antisym_pair(1, 2).expect("connection lower slots")
    }

    /// Covariant derivative `;` of the associated (symmetric) connection,
    /// appended as a trailing covariant slot. One `+Γ` term per contravariant
    /// slot and one `−Γ` term per covariant slot.
    pub fn cov_deriv_assoc(&self, a: &TensorField) -> Result<TensorField> {
        let sym = self.symmetric_part();
        covariant_derivative(a, self.dim, |up, i, alpha, k| {
            if up {
                sym.get(&[i, alpha, k]).clone()
            } else {
                sym.get(&[alpha, i, k]).clone()
            }
        })
    }

    /// One of the four covariant derivatives of the full connection.
    ///
    /// For a `(1,1)` tensor:
    /// kind 1: `a^i_{j,k} + Γ^i_{αk}a^α_j − Γ^α_{jk}a^i_α`,
    /// kind 2: `a^i_{j,k} + Γ^i_{kα}a^α_j − Γ^α_{kj}a^i_α`,
    /// kind 3: `a^i_{j,k} + Γ^i_{αk}a^α_j − Γ^α_{kj}a^i_α`,
    /// kind 4: `a^i_{j,k} + Γ^i_{kα}a^α_j − Γ^α_{jk}a^i_α`.
    /// Other valences apply the same rule slot by slot.
    pub fn cov_deriv_kind(&self, a: &TensorField, kind: DerivKind) -> Result<TensorField> {
        let g = &self.gamma;
        covariant_derivative(a, self.dim, |up, i, alpha, k| {
            if up {
                if kind.up_uses_alpha_first() {
                    g.get(&[i, alpha, k]).clone()
                } else {
                    g.get(&[i, k, alpha]).clone()
                }
            } else if kind.down_uses_slot_first() {
                g.get(&[alpha, i, k]).clone()
            } else {
                g.get(&[alpha, k, i]).clone()
            }
        })
    }

    /// `R^i_{jmn} = Γ^i_{jm,n} − Γ^i_{jn,m} + Γ^α_{jm}Γ^i_{αn} − Γ^α_{jn}Γ^i_{αm}`
    /// for the symmetric part of the connection.
    pub fn curvature_r(&self) -> Result<TensorField> {
        let sym = self.symmetric_part();
        let grad = sym.gradient()?;
        let n = self.dim;
        Ok(TensorField::from_fn(n, &[Up, Down, Down, Down], |ix| {
            let (i, j, m, nn) = (ix[0], ix[1], ix[2], ix[3]);
            let mut acc = grad.get(&[i, j, m, nn]) - grad.get(&[i, j, nn, m]);
            for a in 0..n {
                acc = acc + sym.get(&[a, j, m]) * sym.get(&[i, a, nn])
                    - sym.get(&[a, j, nn]) * sym.get(&[i, a, m]);
            }
            acc
        }))
    }

    /// The five tensors multiplied by `u, u′, v, v′, w` in the curvature family:
    /// `Γ^i_{jm;n}`, `Γ^i_{jn;m}`, `Γ^α_{jm}Γ^i_{αn}`, `Γ^α_{jn}Γ^i_{αm}`,
    /// `Γ^α_{mn}Γ^i_{αj}` (all in the torsion).
    pub fn k_coefficient_tensors(&self) -> Result<[TensorField; 5]> {
        let tor = self.torsion();
        let tor_cd = self.cov_deriv_assoc(&tor)?;
        let tor_cd_swapped = tor_cd.swap_slots(2, 3)?;
        let n = self.dim;
        let quad = |f: &dyn Fn(usize, usize, usize, usize, usize) -> JetScalar| {
            TensorField::from_fn(n, &[Up, Down, Down, Down], |ix| {
                let terms: Vec<JetScalar> = (0..n).map(|a| f(a, ix[0], ix[1], ix[2], ix[3])).collect();
                JetScalar::sum(n, tor.order(), &terms)
            })
        };
        let x = quad(&|a, i, j, m, nn| tor.get(&[a, j, m]) * tor.get(&[i, a, nn]));
        let y = quad(&|a, i, j, m, nn| tor.get(&[a, j, nn]) * tor.get(&[i, a, m]));
        let z = quad(&|a, i, j, m, nn| tor.get(&[a, m, nn]) * tor.get(&[i, a, j]));
        Ok([tor_cd, tor_cd_swapped, x, y, z])
    }

    /// `K = R + uΓ^i_{jm;n} + u′Γ^i_{jn;m} + vΓ^α_{jm}Γ^i_{αn} + v′Γ^α_{jn}Γ^i_{αm} + wΓ^α_{mn}Γ^i_{αj}`
    /// with torsion in every correction term.
    pub fn curvature_k(&self, params: &CurvatureParams) -> Result<TensorField> {
        let mut k = self.curvature_r()?;
        for (coef, t) in params.as_array().into_iter().zip(self.k_coefficient_tensors()?) {
            if !coef.is_zero() {
                k = k.add(&t.scale(coef))?;
            }
        }
        Ok(k)
    }
}

/// Shared covariant-derivative skeleton. `conn(up, i, α, k)` returns the
/// connection coefficient added for a contravariant slot holding `i`
/// (`up = true`) or subtracted for a covariant slot holding `i`.
fn covariant_derivative<C>(a: &TensorField, dim: usize, conn: C) -> Result<TensorField>
where
    C: Fn(bool, usize, usize, usize) -> JetScalar,
{
    if a.dim() != dim {
        return Err(Error::DimensionMismatch {
            left: dim,
            right: a.dim(),
        });
    }
    let grad = a.gradient()?;
    let rank = a.rank();
    let valence = grad.valence().to_vec();
    let mut src = vec![0; rank];
    Ok(TensorField::from_fn(dim, &valence, |ix| {
        let k = ix[rank];
        let mut acc = grad.get(ix).clone();
        for (s, var) in a.valence().iter().enumerate() {
            src.copy_from_slice(&ix[..rank]);
            for alpha in 0..dim {
                src[s] = alpha;
                let term = conn(*var == Up, ix[s], alpha, k) * a.get(&src);
                acc = match var {
                    Up => acc + term,
                    Down => acc - term,
                };
            }
        }
        acc
    }))
}

/// Christoffel symbols of a non-symmetric metric.
///
/// `Γ_{i.jk} = ½(g_{ji,k} − g_{jk,i} + g_{ik,j})` and `Γ^i_{jk} = h^{iα}Γ_{α.jk}`
/// where `h^{iα}g_{jα} = δ^i_j`.
pub fn christoffel_from_metric(g: &TensorField) -> Result<TensorField> {
    if g.valence() != [Down, Down] {
        return Err(Error::ValenceMismatch(format!(
            "metric must have valence (down, down), got {:?}",
            g.valence()
        )));
    }
    let n = g.dim();
    let grad = g.gradient()?;
    let half = Rational::new(1.into(), 2.into());
    let lowered = TensorField::from_fn(n, &[Down, Down, Down], |ix| {
        let (i, j, k) = (ix[0], ix[1], ix[2]);
        (grad.get(&[j, i, k]) - grad.get(&[j, k, i]) + grad.get(&[i, k, j])).scale(&half)
    });
    // h M = I with M[α][j] = g_{jα}
    let m: Vec<Vec<JetScalar>> = (0..n)
        .map(|alpha| (0..n).map(|j| g.get(&[j, alpha]).clone()).collect())
        .collect();
    let h = jet_matrix_inverse(m)?;
    let order = lowered.order();
    Ok(TensorField::from_fn(n, &CONNECTION, |ix| {
        let (i, j, k) = (ix[0], ix[1], ix[2]);
        let mut acc = JetScalar::zero(n, order);
        for (alpha, h_ia) in h[i].iter().enumerate() {
            acc = acc + h_ia * lowered.get(&[alpha, j, k]);
        }
        acc
    }))
}

/// Gauss-Jordan inverse of a square matrix of jets. Pivots must have a
/// nonzero constant term, so the matrix must be invertible at the base point.
fn jet_matrix_inverse(mut m: Vec<Vec<JetScalar>>) -> Result<Vec<Vec<JetScalar>>> {
    let n = m.len();
    let dim = m[0][0].dim();
    let order = m.iter().flatten().map(JetScalar::order).min().unwrap_or(0);
    let mut inv: Vec<Vec<JetScalar>> = (0..n)
        .map(|r| {
            (0..n)
                .map(|c| {
                    if r == c {
                        JetScalar::one(dim, order)
                    } else {
                        JetScalar::zero(dim, order)
                    }
                })
                .collect()
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !m[r][col].value_at_base().is_zero())
            .ok_or(Error::SingularMetric)?;
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let p_inv = m[col][col].inverse()?;
        m[col] = m[col].iter().map(|x| x * &p_inv).collect();
        inv[col] = inv[col].iter().map(|x| x * &p_inv).collect();
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r][col].clone();
            if f.is_zero() {
                continue;
            }
            for c in 0..n {
                let mv = &m[r][c] - &(&f * &m[col][c]);
                m[r][c] = mv;
                let iv = &inv[r][c] - &(&f * &inv[col][c]);
                inv[r][c] = iv;
            }
        }
    }
    Ok(inv)
}

#[derive(Serialize, Deserialize)]
struct SpaceWire {
    dim: usize,
    gamma: TensorField,
    metric: Option<TensorField>,
}

impl Serialize for Space {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SpaceWire {
            dim: self.dim,
            gamma: self.gamma.clone(),
            metric: self.metric.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Space {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = SpaceWire::deserialize(deserializer)?;
        if w.gamma.dim() != w.dim {
            return Err(D::Error::custom("gamma dimension differs from space dimension"));
        }
        let mut space = Space::from_connection(w.gamma).map_err(D::Error::custom)?;
        if let Some(g) = w.metric {
            if g.valence() != [Down, Down] || g.dim() != w.dim {
                return Err(D::Error::custom("metric must be a (0,2) field of the space dimension"));
            }
            space.metric = Some(g);
        }
        Ok(space)
    }
}
