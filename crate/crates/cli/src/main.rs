//! `jetconv`: feasibility checks, constants and convex extensions of 1-jets
//! from the command line.
//!
//! Exit status: 0 when every check passes, 1 for mathematical infeasibility
//! or a failed bound, 2 for unusable input.

mod reproduce;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use jetconv::c1::{self, C1Config, C1Extension};
use jetconv::envelope::{DomainBox, MIN_RESOLUTION};
use jetconv::extension::{self, build_extension, Choice, ExtensionConfig, ExtensionError, ExtensionModel};
use jetconv::jet::{self, DEFAULT_TOL};
use jetconv::{Jet, Modulus};

#[derive(Parser, Debug)]
#[command(name = "jetconv", version, about = "Convex C^{1,ω} extensions of 1-jets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check conditions (C), (CW1) and compute A for a jet.
    Validate(ValidateArgs),
    /// Print A (both routes), lip_ω(G), L and the seminorm relation.
    Constants(ValidateArgs),
    /// Build the extension, write grid samples and a verification report.
    Extend(ExtendArgs),
    /// Build the extension and print only the verification report.
    #[command(alias = "report")]
    Verify(ExtendArgs),
    /// Construct a modulus from the data and extend with the sharp Lipschitz constant.
    C1(C1Args),
    /// Recompute a named example and compare with the expected values.
    Reproduce { name: Example },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Example {
    #[value(name = "example-3.3")]
    SymmetricPower,
    #[value(name = "section-3-holder-gap")]
    HolderGap,
    Huber,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// Jet JSON file.
    jet: PathBuf,
    /// `holder:α`, `linear` or `table:FILE`.
    #[arg(long, default_value = "linear")]
    modulus: String,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Also write the JSON report to this file.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Box bounds `lo1 hi1 [lo2 hi2 ...]`; defaults to the data grown by max(1, 2·diam).
    #[arg(long, num_args = 2.., allow_negative_numbers = true)]
    domain: Option<Vec<f64>>,
    /// Grid nodes per axis.
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random pairs used by the verification; defaults to 10000 in 1-D, 500 otherwise.
    #[arg(long)]
    samples: Option<usize>,
    /// Grid samples as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON report; printed to stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write a gnuplot script plotting the CSV samples.
    #[arg(long)]
    gnuplot: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExtendArgs {
    jet: PathBuf,
    #[arg(long, default_value = "linear")]
    modulus: String,
    /// `auto` (the jet's constant A) or a number ≥ A.
    #[arg(long = "M", default_value = "auto")]
    m: String,
    /// `auto` (max |G|) or a number ≥ max |G|; omit for no Lipschitz variant.
    #[arg(long)]
    lipschitz: Option<String>,
    /// Smoothness constant of the norm.
    #[arg(long = "K")]
    k: Option<f64>,
    /// Multiplies an automatic M.
    #[arg(long, default_value_t = 1.0)]
    safety_factor: f64,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args, Debug)]
struct C1Args {
    jet: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long = "K")]
    k: Option<f64>,
    #[command(flatten)]
    grid: GridArgs,
}

/// Errors sorted by exit status.
enum Failure {
    /// Exit 1.
    Math(anyhow::Error),
    /// Exit 2.
    Input(anyhow::Error),
}

type Outcome = Result<bool, Failure>;

fn input<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Input(e.into())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate(a) => cmd_validate(&a),
        Command::Constants(a) => cmd_constants(&a),
        Command::Extend(a) => cmd_extend(&a, true),
        Command::Verify(a) => cmd_extend(&a, false),
        Command::C1(a) => cmd_c1(&a),
        Command::Reproduce { name } => Ok(reproduce::run(name)),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Math(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn read_jet(path: &Path) -> Result<Jet, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display())).map_err(input)?;
    serde_json::from_str(&text).map_err(|e| input(json_error(&format!("jet in {}", path.display()), e)))
}

/// serde_json appends `at line L column C` to syntax errors.
fn json_error(what: &str, e: serde_json::Error) -> anyhow::Error {
    anyhow!("invalid {what}: {e}")
}

fn parse_modulus(spec: &str) -> anyhow::Result<Modulus> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    match kind {
        "linear" if arg.is_empty() => Ok(Modulus::linear()),
        "holder" => {
            let alpha: f64 = arg.parse().with_context(|| format!("bad exponent in `{spec}`"))?;
            Ok(Modulus::holder(alpha)?)
        }
        "table" => {
            let text = fs::read_to_string(arg).with_context(|| format!("cannot read modulus table {arg}"))?;
            // either a full modulus object or a bare list of knots
            if let Ok(knots) = serde_json::from_str::<Vec<[f64; 2]>>(&text) {
                return Ok(Modulus::table(knots.into_iter().map(|[t, v]| (t, v)).collect())?);
            }
            serde_json::from_str(&text).map_err(|e| json_error(&format!("modulus in {arg}"), e))
        }
        _ => bail!("unknown modulus `{spec}`; expected holder:α, linear or table:FILE"),
    }
}

fn parse_choice(value: &str, what: &str) -> anyhow::Result<Choice> {
    if value == "auto" {
        return Ok(Choice::Auto);
    }
    let v: f64 = value.parse().with_context(|| format!("{what} must be `auto` or a number, got `{value}`"))?;
    Ok(Choice::Fixed(v))
}

fn emit_json<T: Serialize>(value: &T, report: Option<&Path>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(input)?;
    match report {
        Some(path) => fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display())).map_err(input),
        None => {
            print_stdout(&text);
            Ok(())
        }
    }
}

/// Writes a line to stdout; a closed pipe is not an error.
fn print_stdout(text: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn cmd_validate(args: &ValidateArgs) -> Outcome {
    let jet = read_jet(&args.jet)?;
    let modulus = parse_modulus(&args.modulus).map_err(input)?;
    let report = jet::feasibility_report(&jet, &modulus, args.tol);
    let text = serde_json::to_string_pretty(&report).map_err(input)?;
    print_stdout(&text);
    if let Some(path) = &args.report {
        fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display())).map_err(input)?;
    }
    if !report.condition_c.holds {
        eprintln!("condition (C) fails, first pair (y={}, z={})", report.condition_c.violations[0].y, report.condition_c.violations[0].z);
    } else if !report.condition_cw1.holds {
        eprintln!("condition (CW1) fails, first pair (y={}, z={})", report.condition_cw1.violations[0].y, report.condition_cw1.violations[0].z);
    }
    Ok(report.feasible)
}

#[derive(Serialize)]
struct ConstantsReport {
    #[serde(rename = "A_intrinsic", serialize_with = "jet::serialize_extended")]
    a_intrinsic: f64,
    #[serde(rename = "A_extrinsic", serialize_with = "jet::serialize_extended")]
    a_extrinsic: f64,
    #[serde(serialize_with = "jet::serialize_extended")]
    lip_omega_g: f64,
    #[serde(rename = "L")]
    l: f64,
    seminorm: jet::SeminormReport,
}

fn cmd_constants(args: &ValidateArgs) -> Outcome {
    let jet = read_jet(&args.jet)?;
    let modulus = parse_modulus(&args.modulus).map_err(input)?;
    let a_extrinsic = jet::compute_a_extrinsic(&jet, &modulus);
    let a_intrinsic = match jet::compute_a_intrinsic(&jet, &modulus) {
        Ok(r) => r.value,
        Err(_) => f64::NAN,
    };
    let seminorm = jet::verify_seminorm_relation(&jet, &modulus);
    let report = ConstantsReport {
        a_intrinsic,
        a_extrinsic,
        lip_omega_g: jet::lip_omega_g(&jet, &modulus),
        l: jet::sup_norm_g(&jet),
        seminorm,
    };
    emit_json(&report, args.report.as_deref())?;
    Ok(report.seminorm.applicable && report.seminorm.general_holds && report.seminorm.holder_holds != Some(false))
}

fn domain_of(grid: &GridArgs) -> Result<Option<DomainBox>, Failure> {
    grid.domain.as_deref().map(DomainBox::from_pairs).transpose().map_err(input)
}

fn check_resolution(grid: &GridArgs) -> Result<(), Failure> {
    match grid.resolution {
        Some(r) if r < MIN_RESOLUTION => Err(input(anyhow!("--resolution must be at least {MIN_RESOLUTION}"))),
        _ => Ok(()),
    }
}

fn default_samples(jet: &Jet) -> usize {
    if jet.dimension() == 1 {
        10_000
    } else {
        500
    }
}

#[derive(Serialize)]
struct ExtendReport<'a> {
    #[serde(rename = "A")]
    a: f64,
    #[serde(rename = "M")]
    m: f64,
    #[serde(rename = "L")]
    l: Option<f64>,
    #[serde(rename = "K")]
    k: f64,
    resolution: usize,
    spacing: f64,
    gradient_step: f64,
    verification: &'a extension::VerificationReport,
}

fn extension_failure(e: ExtensionError) -> Failure {
    match e {
        ExtensionError::Infeasible { .. } | ExtensionError::LipschitzTooSmall { .. } => Failure::Math(e.into()),
        ExtensionError::ConstantTooSmall { m, a } => Failure::Math(anyhow!("M < A ({m} < {a}): {e}")),
        other => Failure::Input(other.into()),
    }
}

fn write_outputs(model: &ExtensionModel, grid: &GridArgs, write_csv: bool) -> Result<(), Failure> {
    if !write_csv {
        return Ok(());
    }
    if let Some(path) = &grid.out {
        let file = fs::File::create(path).with_context(|| format!("cannot create {}", path.display())).map_err(input)?;
        model.envelope().write_csv(std::io::BufWriter::new(file)).map_err(input)?;
        if let Some(script) = &grid.gnuplot {
            fs::write(script, gnuplot_script(path, model.envelope().dimension(), model.lipschitz().is_some()))
                .with_context(|| format!("cannot write {}", script.display()))
                .map_err(input)?;
        }
    } else if grid.gnuplot.is_some() {
        return Err(input(anyhow!("--gnuplot needs --out")));
    }
    Ok(())
}

fn cmd_extend(args: &ExtendArgs, write_csv: bool) -> Outcome {
    let jet = read_jet(&args.jet)?;
    check_resolution(&args.grid)?;
    let mut cfg = ExtensionConfig::new(parse_modulus(&args.modulus).map_err(input)?);
    cfg.m = parse_choice(&args.m, "--M").map_err(input)?;
    cfg.lipschitz = args.lipschitz.as_deref().map(|v| parse_choice(v, "--lipschitz")).transpose().map_err(input)?;
    cfg.smoothness_k = args.k;
    cfg.safety_factor = args.safety_factor;
    cfg.domain = domain_of(&args.grid)?;
    cfg.resolution = args.grid.resolution;
    let model = build_extension(&jet, cfg).map_err(extension_failure)?;
    write_outputs(&model, &args.grid, write_csv)?;
    let samples = args.grid.samples.unwrap_or_else(|| default_samples(&jet));
    let verification = extension::verify_extension(&model, samples, args.grid.seed);
    let report = ExtendReport {
        a: model.a(),
        m: model.m(),
        l: model.lipschitz(),
        k: model.smoothness_k(),
        resolution: model.envelope().grid().resolution(),
        spacing: model.spacing(),
        gradient_step: model.gradient_step(),
        verification: &verification,
    };
    emit_json(&report, args.grid.report.as_deref())?;
    for c in verification.bound_checks.iter().filter(|c| !c.pass) {
        eprintln!("bound check failed: {} (measured {}, bound {})", c.name, c.measured, c.bound);
    }
    Ok(verification.all_pass())
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum C1Report<'a> {
    Constant {
        value: f64,
    },
    Built {
        constructed: &'a c1::ConstructedModulus,
        invariants: c1::InvariantReport,
        #[serde(rename = "A")]
        a: f64,
        verification: &'a extension::VerificationReport,
    },
}

fn cmd_c1(args: &C1Args) -> Outcome {
    let jet = read_jet(&args.jet)?;
    check_resolution(&args.grid)?;
    let cfg = C1Config {
        alpha: Some(args.alpha),
        domain: domain_of(&args.grid)?,
        resolution: args.grid.resolution,
        smoothness_k: args.k,
        samples: args.grid.samples,
        seed: args.grid.seed,
    };
    let outcome = c1::c1_extend(&jet, &cfg).map_err(|e| match e {
        c1::C1Error::InvalidAlpha(_) | c1::C1Error::NonPositiveT(_) => Failure::Input(e.into()),
        c1::C1Error::Extension(inner) => extension_failure(inner),
        other => Failure::Math(other.into()),
    })?;
    match &outcome {
        C1Extension::Constant { value } => {
            emit_json(&C1Report::Constant { value: *value }, args.grid.report.as_deref())?;
            Ok(true)
        }
        C1Extension::Built { constructed, a, model, report } => {
            write_outputs(model, &args.grid, true)?;
            let invariants = constructed.check_invariants();
            let clean = invariants.is_clean();
            emit_json(&C1Report::Built { constructed, invariants, a: *a, verification: report }, args.grid.report.as_deref())?;
            Ok(clean && report.all_pass())
        }
    }
}

fn gnuplot_script(csv: &Path, dimension: usize, lipschitz: bool) -> String {
    let file = csv.display();
    let mut s = String::from("set datafile separator ','\nset key autotitle columnhead\n");
    if dimension == 1 {
        s += &format!("plot '{file}' using 1:2 with lines, '' using 1:3 with lines, '' using 1:4 with lines");
        if lipschitz {
            s += ", '' using 1:5 with lines";
        }
    } else {
        let f = dimension + 3;
        s += &format!("set dgrid3d\nsplot '{file}' using 1:2:{f} with lines");
    }
    s + "\npause -1\n"
}
