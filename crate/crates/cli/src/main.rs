//! `eqlab`: synthesize mapped pairs, run the verification suite, compute the
//! rank claims, and evaluate index-notation files.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 usage or parse error,
//! 3 I/O error.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use eqlab::dsl;
use eqlab::invariants::{build_w_matrix, curvature_family_span, family_span_dimension, sigma_coeff_matrix};
use eqlab::suite::{self, full_grid, SuiteConfig};
use eqlab::{generic_rank, random, synthesize_instance, MappedPair, MappingKind, Space, TensorField, VerificationReport, WStarForm};

const SEED_ENV: &str = "EQLAB_SEED";
const DEFAULT_VERIFY_DRAWS: usize = 3;
const DEFAULT_RANK_TRIALS: usize = 5;
const CURVATURE_SPACES: usize = 10;
const FAMILY_SPAN_PAIRS: u64 = 2;
const FAMILY_SPAN_SAMPLES: usize = 64;

#[derive(Parser)]
#[command(name = "eqlab", version, about = "Exact verification workbench for equitorsion almost geodesic mappings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthesized mapped pair per seed.
    Synth(SynthArgs),
    /// Run the identity and invariance suite.
    Verify(VerifyArgs),
    /// Report the rank and span claims.
    Ranks(RanksArgs),
    /// Evaluate an assignment file against an instance.
    Eval(EvalArgs),
}

#[derive(Args)]
struct InstanceArgs {
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    kind: u8,
    /// Overridden by the EQLAB_SEED environment variable.
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(2..=3))]
    order: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormArg {
    Printed,
    Derived,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Output file for one seed, directory for several; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Pair files to verify instead of synthesizing.
    #[arg(long)]
    input: Vec<PathBuf>,
    /// `all` or a comma-separated list of `p:q` cells.
    #[arg(long, default_value = "all")]
    grid: String,
    /// Parameter draws per pair (default 3).
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_enum, default_value_t = FormArg::Printed)]
    form: FormArg,
    /// Negative control: flip the sign of the inverse's ψ.
    #[arg(long)]
    corrupt_inverse: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct RanksArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Random substitutions for the generic rank (default 5).
    #[arg(long)]
    trials: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct EvalArgs {
    /// Assignment file, one `Name[indices] = expr` per line.
    file: PathBuf,
    /// Space or pair JSON; a pair is synthesized from the seed if absent.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Verification(String),
    Usage(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Verification(m) | Failure::Usage(m) | Failure::Io(m) => m,
        }
    }
}

impl From<eqlab::Error> for Failure {
    fn from(e: eqlab::Error) -> Self {
        use eqlab::Error::*;
        match e {
            Parse { .. } | IndexDiscipline(_) | Unbound(_) | AtLine { .. } | InvalidIndex { .. }
            | ValenceMismatch(_) | DimensionMismatch { .. } | Malformed(_) | InvalidTrials
            | InsufficientSamples { .. } | OrderExhausted => Failure::Usage(e.to_string()),
            _ => Failure::Verification(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Verify(a) => verify(a),
        Command::Ranks(a) => ranks(a),
        Command::Eval(a) => eval(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("eqlab: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

impl InstanceArgs {
    fn check(&self) -> CliResult<()> {
        if self.dim < 2 {
            return Err(Failure::Usage(format!("--dim must be at least 2, got {}", self.dim)));
        }
        Ok(())
    }

    fn kind(&self) -> MappingKind {
        MappingKind::try_from(self.kind).expect("range-checked by the parser")
    }

    fn order(&self) -> usize {
        self.order as usize
    }

    fn seeds(&self) -> CliResult<Vec<u64>> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            let seed = v
                .trim()
                .parse()
                .map_err(|_| Failure::Usage(format!("{SEED_ENV} is not an unsigned integer: {v:?}")))?;
            return Ok(vec![seed]);
        }
        if !self.seeds.is_empty() {
            return Ok(self.seeds.clone());
        }
        Ok(vec![self.seed.unwrap_or(0)])
    }

    fn synthesize(&self, seed: u64) -> CliResult<MappedPair> {
        Ok(synthesize_instance(self.dim, self.kind(), seed, self.order())?)
    }
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn write_output(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Io(format!("stdout: {e}"))),
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn synth(a: SynthArgs) -> CliResult<()> {
    a.instance.check()?;
    let seeds = a.instance.seeds()?;
    let pairs = seeds
        .iter()
        .map(|&s| a.instance.synthesize(s))
        .collect::<CliResult<Vec<_>>>()?;
    match (&a.out, pairs.as_slice()) {
        (None, [one]) => write_output(None, &to_json(one)),
        (None, many) => write_output(None, &to_json(many)),
        (Some(path), [one]) => write_output(Some(path), &to_json(one)),
        (Some(dir), many) => {
            fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
            for (seed, pair) in seeds.iter().zip(many) {
                let name = format!("pair-n{}-kind{}-seed{seed}.json", a.instance.dim, a.instance.kind);
                write_output(Some(&dir.join(name)), &to_json(pair))?;
            }
            Ok(())
        }
    }
}

fn parse_grid(src: &str) -> CliResult<Vec<(usize, usize)>> {
    if src.trim() == "all" {
        return Ok(full_grid());
    }
    src.split(',')
        .map(|cell| {
            let bad = || Failure::Usage(format!("bad grid cell {cell:?}; expected p:q with p, q in 1..=8"));
            let (p, q) = cell.trim().split_once(':').ok_or_else(bad)?;
            let p: usize = p.parse().map_err(|_| bad())?;
            let q: usize = q.parse().map_err(|_| bad())?;
            if !(1..=8).contains(&p) || !(1..=8).contains(&q) {
                return Err(bad());
            }
            Ok((p, q))
        })
        .collect()
}

fn verify(a: VerifyArgs) -> CliResult<()> {
    a.instance.check()?;
    let cfg = SuiteConfig {
        form: match a.form {
            FormArg::Printed => WStarForm::Printed,
            FormArg::Derived => WStarForm::Derived,
        },
        grid: parse_grid(&a.grid)?,
        param_draws: a.trials.unwrap_or(DEFAULT_VERIFY_DRAWS),
        param_seed: 0,
        corrupt_inverse: a.corrupt_inverse,
    };
    let reports: Vec<VerificationReport> = if a.input.is_empty() {
        let seeds = a.instance.seeds()?;
        suite::verify_seeds(a.instance.dim, a.instance.kind(), &seeds, a.instance.order(), &cfg)?
    } else {
        let pairs = a.input.iter().map(|p| read_json::<MappedPair>(p)).collect::<CliResult<Vec<_>>>()?;
        let per_pair = suite::verify_pairs(&pairs, &cfg)?;
        per_pair
            .into_iter()
            .zip(&a.input)
            .flat_map(|(rs, path)| {
                let label = path.display().to_string();
                rs.into_iter().map(move |r| r.with_param("input", label.clone()))
            })
            .collect()
    };
    let text = match a.output.format {
        Format::Json => to_json(&reports),
        Format::Csv => verify_csv(&reports)?,
    };
    write_output(a.output.out.as_deref(), &text)?;
    let failed: Vec<&VerificationReport> = reports.iter().filter(|r| !r.pass).collect();
    eprintln!("{} checks, {} failed", reports.len(), failed.len());
    if failed.is_empty() {
        Ok(())
    } else {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for r in &failed {
            *counts.entry(r.check.as_str()).or_default() += 1;
        }
        let kinds: Vec<String> = counts.iter().map(|(k, n)| format!("{k} ({n})")).collect();
        Err(Failure::Verification(format!("failed checks: {}", kinds.join(", "))))
    }
}

fn csv_text<F>(header: &[&str], fill: F) -> CliResult<String>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let run = || -> csv::Result<Vec<u8>> {
        w.write_record(header)?;
        fill(&mut w)?;
        w.into_inner().map_err(|e| e.into_error().into())
    };
    let bytes = run().map_err(|e| Failure::Io(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn verify_csv(reports: &[VerificationReport]) -> CliResult<String> {
    csv_text(&["check", "params", "pass", "max_abs_residual_num_digits"], |w| {
        for r in reports {
            w.write_record([
                r.check.clone(),
                serde_json::to_string(&r.params).expect("json"),
                r.pass.to_string(),
                r.max_abs_residual_num_digits.to_string(),
            ])?;
        }
        Ok(())
    })
}

fn ranks(a: RanksArgs) -> CliResult<()> {
    a.instance.check()?;
    let n = a.instance.dim;
    let trials = a.trials.unwrap_or(DEFAULT_RANK_TRIALS);
    let seed = a.instance.seeds()?[0];
    let order = a.instance.order();

    let sigma_rank = sigma_coeff_matrix(n)?.rank();
    let w_rank = generic_rank(&build_w_matrix(n)?, trials, seed)?;
    let mut rng = random::rng(seed);
    let spaces: Vec<Space> = (0..CURVATURE_SPACES).map(|_| random::space(&mut rng, n, order)).collect();
    let curvature_span = curvature_family_span(&spaces)?;
    let pairs = (0..FAMILY_SPAN_PAIRS)
        .map(|k| a.instance.synthesize(seed.wrapping_add(k)))
        .collect::<CliResult<Vec<_>>>()?;
    let family_span = family_span_dimension(&pairs, a.instance.kind(), FAMILY_SPAN_SAMPLES, seed)?;

    let reports: Vec<VerificationReport> = [
        ("sigma_coeff_matrix_rank", 4, sigma_rank),
        ("w_matrix_generic_rank", 6, w_rank),
        ("curvature_family_span", 5, curvature_span),
        ("family_span_dimension", 6, family_span),
    ]
    .into_iter()
    .map(|(check, expected, observed)| {
        VerificationReport::from_rank(check, expected, observed)
            .with_param("dim", n)
            .with_param("trials", trials)
    })
    .collect();
    let text = match a.output.format {
        Format::Json => to_json(&reports),
        Format::Csv => csv_text(&["check", "dim", "expected", "observed", "pass"], |w| {
            for r in &reports {
                w.write_record([
                    r.check.clone(),
                    n.to_string(),
                    r.params["expected"].to_string(),
                    r.rank.expect("rank report").to_string(),
                    r.pass.to_string(),
                ])?;
            }
            Ok(())
        })?,
    };
    write_output(a.output.out.as_deref(), &text)?;
    if reports.iter().all(|r| r.pass) {
        Ok(())
    } else {
        Err(Failure::Verification("a rank differs from its expected value".into()))
    }
}

/// Names available to assignment files.
fn space_bindings(prefix: &str, space: &Space, out: &mut BTreeMap<String, TensorField>) {
    out.insert(format!("Gamma{prefix}"), space.gamma().clone());
    out.insert(format!("S{prefix}"), space.symmetric_part());
    out.insert(format!("T{prefix}"), space.torsion());
    if let Some(g) = space.metric() {
        out.insert(format!("g{prefix}"), g.clone());
    }
}

fn pair_bindings(pair: &MappedPair) -> BTreeMap<String, TensorField> {
    let mut b = BTreeMap::new();
    space_bindings("", &pair.source, &mut b);
    space_bindings("Bar", &pair.target, &mut b);
    let m = &pair.mapping;
    b.insert("psi".into(), m.psi.clone());
    b.insert("sigma".into(), m.sigma.clone());
    b.insert("phi".into(), m.phi.clone());
    b.insert("nu".into(), m.nu.clone());
    b.insert("mu".into(), TensorField::scalar(m.mu.clone()));
    b
}

#[derive(Serialize)]
struct Named<'a> {
    name: &'a str,
    value: &'a TensorField,
}

fn eval(a: EvalArgs) -> CliResult<()> {
    let src = read_text(&a.file)?;
    let bindings = match &a.input {
        Some(path) => {
            let value: serde_json::Value = read_json(path)?;
            let bad = |e: serde_json::Error| Failure::Usage(format!("{}: {e}", path.display()));
            if value.get("source").is_some() {
                pair_bindings(&serde_json::from_value(value).map_err(bad)?)
            } else {
                let space: Space = serde_json::from_value(value).map_err(bad)?;
                let mut b = BTreeMap::new();
                space_bindings("", &space, &mut b);
                b
            }
        }
        None => {
            a.instance.check()?;
            pair_bindings(&a.instance.synthesize(a.instance.seeds()?[0])?)
        }
    };
    let results = dsl::evaluate_program(&src, &bindings)?;
    let named: Vec<Named> = results.iter().map(|(name, value)| Named { name, value }).collect();
    write_output(a.out.as_deref(), &to_json(&named))
}
