//! The full identity and invariance run over synthesized mapped pairs.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::CurvatureParams;
use crate::invariants::{family_params, InvariantContext, PairContexts, WStarForm, SIGMA_COUNT};
use crate::mapping::{
    basic_equation_residual, corrupted_inverse, gamma_diff_factorized, synthesize_instance, AG3Mapping, MappedPair,
    MappingKind,
};
use crate::report::VerificationReport;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteConfig {
    pub form: WStarForm,
    /// `(p, q)` cells of the family grid, each in `1..=8`.
    pub grid: Vec<(usize, usize)>,
    /// Number of random `(u, u′, v, v′, w)` draws per pair.
    pub param_draws: usize,
    pub param_seed: u64,
    /// Negative control: use barred data with the sign of `ψ̄` flipped.
    pub corrupt_inverse: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            form: WStarForm::Printed,
            grid: full_grid(),
            param_draws: 3,
            param_seed: 0,
            corrupt_inverse: false,
        }
    }
}

pub fn full_grid() -> Vec<(usize, usize)> {
    (1..=SIGMA_COUNT)
        .flat_map(|p| (1..=SIGMA_COUNT).map(move |q| (p, q)))
        .collect()
}

impl SuiteConfig {
    fn validate(&self) -> Result<()> {
        if self.param_draws == 0 {
            return Err(Error::InvalidTrials);
        }
        for &(p, q) in &self.grid {
            for v in [p, q] {
                if !(1..=SIGMA_COUNT).contains(&v) {
                    return Err(Error::InvalidIndex {
                        what: "family grid index",
                        value: v,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Vec<CurvatureParams> {
        (0..self.param_draws as u64)
            .map(|d| family_params(self.param_seed.wrapping_add(d)))
            .collect()
    }
}

/// Runs every check on `pair` with barred data from the reciprocity inverse
/// (or its corrupted variant when `cfg.corrupt_inverse` is set).
pub fn verify_pair(pair: &MappedPair, cfg: &SuiteConfig) -> Result<Vec<VerificationReport>> {
    if cfg.corrupt_inverse {
        return verify_pair_with_barred(pair, &corrupted_inverse(&pair.mapping), cfg);
    }
    match pair.inverse_mapping() {
        Ok(barred) => verify_pair_with_barred(pair, &barred, cfg),
        Err(Error::IdentityFailed(report)) => Ok(vec![*report]),
        Err(Error::NonzeroResidual) => {
            let residual = basic_equation_residual(&pair.source, &pair.mapping)?;
            Ok(vec![VerificationReport::from_residual("basic_equation", residual)])
        }
        Err(e) => Err(e),
    }
}

/// Runs every check on `pair` with caller-supplied barred data.
pub fn verify_pair_with_barred(
    pair: &MappedPair,
    barred: &AG3Mapping,
    cfg: &SuiteConfig,
) -> Result<Vec<VerificationReport>> {
    cfg.validate()?;
    let kind = pair.mapping.kind;
    let mut out = Vec::new();

    out.push(VerificationReport::from_residual(
        "basic_equation",
        basic_equation_residual(&pair.source, &pair.mapping)?,
    ));
    let equitorsion = VerificationReport::from_residual(
        "equitorsion",
        pair.target.torsion().sub(&pair.source.torsion())?,
    );
    out.push(if pair.source.torsion().is_zero() {
        equitorsion.with_note("torsion vanishes; torsion-dependent identities hold trivially")
    } else {
        equitorsion
    });
    out.push(VerificationReport::from_residual(
        "reciprocity",
        basic_equation_residual(&pair.target, barred)?,
    ));
    out.push(match gamma_diff_factorized(pair) {
        Ok(_) => VerificationReport::from_outcome("gamma_diff_factorized", true),
        Err(Error::IdentityFailed(report)) => *report,
        Err(e) => return Err(e),
    });

    let sides = PairContexts::with_barred(pair, barred)?;
    out.push(sigma_table_report(&sides.source));
    out.push(sides.torsion_cd_expansion_check()?);
    for p in 1..=SIGMA_COUNT {
        out.push(sides.sigma_difference_check(p)?);
    }
    out.push(sides.w_star_invariance(kind, cfg.form));
    for rho in 1..=SIGMA_COUNT {
        out.push(sides.t_tilde_invariance(rho)?);
    }
    out.push(sides.r_transformation_check(kind, cfg.form)?);
    for params in cfg.params() {
        out.extend(sides.family_checks(kind, cfg.form, &params, &cfg.grid)?);
    }
    Ok(out)
}

fn sigma_table_report(ctx: &InvariantContext) -> VerificationReport {
    match ctx.validate_sigma_coeff_matrix() {
        Ok(()) => VerificationReport::from_outcome("sigma_table", true),
        Err(Error::IdentityFailed(report)) => *report,
        Err(e) => VerificationReport::from_outcome("sigma_table", false).with_note(e.to_string()),
    }
}

/// Synthesizes one pair per seed and verifies each, tagging reports with
/// the seed. Reports keep seed order.
pub fn verify_seeds(
    dim: usize,
    kind: MappingKind,
    seeds: &[u64],
    order: usize,
    cfg: &SuiteConfig,
) -> Result<Vec<VerificationReport>> {
    let per_seed = seeds
        .par_iter()
        .map(|&seed| {
            let pair = synthesize_instance(dim, kind, seed, order)?;
            let reports = verify_pair(&pair, cfg)?;
            Ok(reports
                .into_iter()
                .map(|r| r.with_param("seed", seed).with_param("dim", dim).with_param("kind", kind.number()))
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_seed.into_iter().flatten().collect())
}

/// Verifies independent pairs; results keep input order.
pub fn verify_pairs(pairs: &[MappedPair], cfg: &SuiteConfig) -> Result<Vec<Vec<VerificationReport>>> {
    pairs.par_iter().map(|p| verify_pair(p, cfg)).collect()
}

pub fn all_pass(reports: &[VerificationReport]) -> bool {
    reports.iter().all(|r| r.pass)
}
