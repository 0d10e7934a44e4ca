//! `gundy-stein`: certified decompositions, sharpness oracles, multiplier
//! estimates, and John-Nirenberg certificates over instance files.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 on input
//! or configuration errors. The default arithmetic is exact rational; set
//! `GUNDY_STEIN_MODE=float` or pass `--float` for f64 with documented
//! tolerances (1e-12 identities, 1e-9 inequalities).

use clap::{Parser, Subcommand, ValueEnum};
use gundy_stein::decomposition::{decompose_positive, decompose_signed, flag_non_measurable};
use gundy_stein::generator::{self, GeneratorConfig, ProbabilityScheme, ValueScheme};
use gundy_stein::john_nirenberg as jn;
use gundy_stein::multipliers::{
    certify_weak_type, diagnose_proof, ito_isometry_check, transform, MultiplierSequence,
};
use gundy_stein::sharpness::{
    dichotomy_check, minimize_phi_analytic, minimize_phi_bruteforce, minimizing_witness, phi,
    Dichotomy, TwoPointInstance,
};
use gundy_stein::{Certification, CheckRecord, CheckStatus, Rational, Scalar};
use gundy_stein_cli::io::{parse_instance, render_instance, FunctionData, Instance};
use gundy_stein_cli::suite::{run_suite, SuiteConfig};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use thiserror::Error;

#[derive(Parser)]
#[command(
    name = "gundy-stein",
    version,
    about = "Certified Gundy-Stein decompositions on finite atomic filtrations"
)]
struct Cli {
    /// Float arithmetic with fixed tolerances instead of exact rationals.
    #[arg(long, global = true, conflicts_with = "exact")]
    float: bool,
    /// Exact rational arithmetic (the default; overrides GUNDY_STEIN_MODE).
    #[arg(long, global = true)]
    exact: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an instance file and report its shape.
    Validate {
        #[arg(long)]
        input: PathBuf,
    },
    /// Decompose at (lambda, theta) and certify every stated bound.
    Decompose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        lambda: String,
        #[arg(long)]
        theta: String,
        /// Split a signed function and certify the combined bounds.
        #[arg(long)]
        signed: bool,
        /// Also write the report to this path.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Two-point sharpness oracles: closed form vs grid, dichotomy branches.
    Sharpness {
        #[arg(long)]
        p: String,
        #[arg(long)]
        lambda: String,
        #[arg(long)]
        beta: String,
        /// Grid resolution for the brute-force minimizer.
        #[arg(long, default_value_t = 1000)]
        grid: usize,
    },
    /// Truncated multiplier transform with optional certificates.
    Multiplier {
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated coefficients, e.g. "1,-1,1/2".
        #[arg(long)]
        a: String,
        /// Truncation level.
        #[arg(long = "N")]
        n_max: usize,
        /// Certify the weak-type bound over the exhaustive level sweep.
        #[arg(long)]
        certify: bool,
        /// Certify the per-term proof bounds at a chosen level.
        #[arg(long)]
        diagnose_proof: bool,
        /// Level for the diagnostics (default: sup|a| times ||f||_1).
        #[arg(long)]
        lambda: Option<String>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// John-Nirenberg pipeline rooted at a named atom.
    Jn {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        root: String,
        /// Selection threshold (default: lower Euler bound times the norm).
        #[arg(long)]
        s: Option<String>,
        /// Exponential-moment rate (default: alpha over twice the Euler ceiling).
        #[arg(long)]
        beta: Option<String>,
        /// Additional parametric tail base u > 1.
        #[arg(long)]
        u: Option<String>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Seeded batch verification across every module.
    Suite {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        decompositions: usize,
        #[arg(long = "signed", default_value_t = 500)]
        signed: usize,
        #[arg(long, default_value_t = 120)]
        multipliers: usize,
        #[arg(long, default_value_t = 500)]
        isometries: usize,
        #[arg(long, default_value_t = 300)]
        jn: usize,
        /// Negate one bound on purpose; the run must then fail.
        #[arg(long)]
        corrupt: bool,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Emit a seeded random instance in the text format.
    Generate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        depth_min: usize,
        #[arg(long, default_value_t = 6)]
        depth_max: usize,
        #[arg(long, default_value_t = 1)]
        branching_min: usize,
        #[arg(long, default_value_t = 4)]
        branching_max: usize,
        /// Use random splits with this per-child floor instead of uniform.
        #[arg(long)]
        min_ratio: Option<String>,
        #[arg(long, value_enum, default_value_t = ValuesArg::Nonneg)]
        values: ValuesArg,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ValuesArg {
    Nonneg,
    Signed,
    Spike,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("cannot read {path}: {err}")]
    Read { path: String, err: String },
    #[error("cannot write {path}: {err}")]
    Write { path: String, err: String },
}

fn input_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Exact,
    Float,
}

impl Mode {
    fn label(self) -> &'static str {
        match self {
            Mode::Exact => "exact-rational",
            Mode::Float => "float(1e-12 identities, 1e-9 inequalities)",
        }
    }
}

fn resolve_mode(float: bool, exact: bool) -> Mode {
    if float {
        Mode::Float
    } else if exact {
        Mode::Exact
    } else {
        match std::env::var("GUNDY_STEIN_MODE").as_deref().map(str::trim) {
            Ok("float") => Mode::Float,
            _ => Mode::Exact,
        }
    }
}

/// A per-run report document: `#` notes, record lines, and a summary.
struct Doc {
    lines: Vec<String>,
    pass: usize,
    fail: usize,
    flag: usize,
}

impl Doc {
    fn new() -> Self {
        Doc {
            lines: Vec::new(),
            pass: 0,
            fail: 0,
            flag: 0,
        }
    }

    fn note(&mut self, text: impl Into<String>) {
        self.lines.push(format!("# {}", text.into()));
    }

    fn record<S: Scalar>(&mut self, rec: &CheckRecord<S>) {
        match rec.status {
            CheckStatus::Pass => self.pass += 1,
            CheckStatus::Fail => self.fail += 1,
            CheckStatus::Flag => self.flag += 1,
        }
        self.lines.push(rec.to_line());
    }

    fn absorb<S: Scalar>(&mut self, cert: &Certification<S>) {
        for rec in cert.records() {
            self.record(rec);
        }
    }

    fn all_pass(&self) -> bool {
        self.fail == 0
    }

    fn render(&self) -> (String, String) {
        let mut text = String::new();
        for line in &self.lines {
            let _ = writeln!(text, "{line}");
        }
        let summary = format!(
            "# records={} pass={} fail={} flag={}\n# verdict {}",
            self.pass + self.fail + self.flag,
            self.pass,
            self.fail,
            self.flag,
            if self.all_pass() { "PASS" } else { "FAIL" }
        );
        (text, summary)
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Write {
        path: path.display().to_string(),
        err: e.to_string(),
    })
}

/// Prints the document (or writes it to `report` and prints the summary)
/// and converts its verdict into the process outcome.
fn deliver(doc: &Doc, report: Option<&Path>) -> Result<bool, CliError> {
    let (text, summary) = doc.render();
    match report {
        Some(path) => {
            write_file(path, &format!("{text}{summary}\n"))?;
            println!("report written to {}", path.display());
            println!("{summary}");
        }
        None => {
            print!("{text}");
            println!("{summary}");
        }
    }
    Ok(doc.all_pass())
}

/// Instance identity for report headers: content hash, not path, so moved
/// files keep identical reports.
fn content_hash(text: &str) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(text.as_bytes());
    let mut out = String::with_capacity(16);
    for byte in &digest[..8] {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

fn load<S: Scalar>(path: &Path) -> Result<(Instance<S>, String), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Read {
        path: path.display().to_string(),
        err: e.to_string(),
    })?;
    let inst =
        parse_instance(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok((inst, content_hash(&text)))
}

fn parse_num<S: Scalar>(text: &str, what: &str) -> Result<S, CliError> {
    S::parse(text).map_err(|e| CliError::Input(format!("{what} `{text}`: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mode = resolve_mode(cli.float, cli.exact);
    let outcome = match mode {
        Mode::Exact => run::<Rational>(cli.command, mode),
        Mode::Float => run::<f64>(cli.command, mode),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run<S: Scalar>(command: Command, mode: Mode) -> Result<bool, CliError> {
    match command {
        Command::Validate { input } => {
            let (inst, _): (Instance<S>, _) = load(&input)?;
            let filt = &inst.filtration;
            match &inst.function {
                FunctionData::Terminal(f) => println!(
                    "ok: horizon {}, {} atoms, {} leaves, ||f||_1 = {}",
                    filt.horizon(),
                    filt.atom_count(),
                    filt.leaf_count(),
                    f.l1_norm(filt)
                ),
                FunctionData::Raw(raw) => println!(
                    "ok: horizon {}, {} atoms, {} leaves, raw leaf data{}",
                    filt.horizon(),
                    filt.atom_count(),
                    filt.leaf_count(),
                    match raw.non_measurable_leaf() {
                        Some(leaf) =>
                            format!(" (splits leaf `{}`)", filt.atom(filt.leaves()[leaf]).id),
                        None => String::new(),
                    }
                ),
            }
            Ok(true)
        }
        Command::Decompose {
            input,
            lambda,
            theta,
            signed,
            report,
        } => {
            let (inst, hash): (Instance<S>, _) = load(&input)?;
            let filt = &inst.filtration;
            let lambda: S = parse_num(&lambda, "lambda")?;
            let theta: S = parse_num(&theta, "theta")?;
            let mut doc = Doc::new();
            doc.note(format!("decompose input sha256:{hash}"));
            doc.note(format!("lambda={lambda} theta={theta} mode={}", mode.label()));
            match &inst.function {
                FunctionData::Raw(raw) => {
                    // Within-leaf data violates measurability; instead of a
                    // decomposition the run flags the hypothesis failure.
                    doc.note("raw leaf data: flagging hypothesis violations instead");
                    doc.absorb(&flag_non_measurable(filt, raw, &lambda));
                }
                FunctionData::Terminal(f) if signed => {
                    let d = decompose_signed(filt, f, &lambda, &theta).map_err(input_err)?;
                    doc.absorb(&d.certification);
                }
                FunctionData::Terminal(f) => {
                    if !f.is_nonnegative() {
                        return Err(CliError::Input(
                            "terminal values are signed; rerun with --signed".into(),
                        ));
                    }
                    let d = decompose_positive(filt, f, &lambda, &theta).map_err(input_err)?;
                    doc.absorb(&d.certification);
                }
            }
            deliver(&doc, report.as_deref())
        }
        Command::Sharpness {
            p,
            lambda,
            beta,
            grid,
        } => {
            // Closed forms live on exact rationals regardless of mode.
            let p: Rational = parse_num(&p, "p")?;
            let lambda: Rational = parse_num(&lambda, "lambda")?;
            let beta: Rational = parse_num(&beta, "beta")?;
            let inst = TwoPointInstance::new(p, lambda, beta).map_err(input_err)?;
            let mut doc = Doc::new();
            let analytic = minimize_phi_analytic(&inst);
            doc.note(format!(
                "analytic minimum {} at ({}, {})",
                analytic.value, analytic.argmin.0, analytic.argmin.1
            ));
            let brute = minimize_phi_bruteforce(&inst, grid).map_err(input_err)?;
            doc.note(format!(
                "grid minimum {} at ({}, {}) with grid {}",
                brute.value, brute.argmin.0, brute.argmin.1, grid
            ));
            doc.record(&CheckRecord::identity(
                "sharpness.brute_vs_analytic",
                "boundary-augmented grid minimum equals the closed form",
                brute.value,
                analytic.value.clone(),
            ));
            doc.record(&CheckRecord::identity(
                "sharpness.phi_at_argmin",
                "Phi at the analytic argmin equals the analytic minimum",
                phi(&inst, &analytic.argmin.0, &analytic.argmin.1),
                analytic.value,
            ));
            let witness = minimizing_witness(&inst);
            doc.note(format!(
                "witness h = ({}, {}), k = ({}, {})",
                witness.h.0, witness.h.1, witness.k.0, witness.k.1
            ));
            let dichotomy = dichotomy_check(&inst, &witness).map_err(input_err)?;
            match &dichotomy.verdict {
                Dichotomy::FullLocalization { localization_prob } => {
                    doc.note(format!("dichotomy: localization prob {localization_prob}"));
                }
                Dichotomy::VariationBounded { variation, bound } => {
                    doc.note(format!("dichotomy: variation {variation} >= {bound}"));
                }
            }
            doc.absorb(&dichotomy.certification);
            deliver(&doc, None)
        }
        Command::Multiplier {
            input,
            a,
            n_max,
            certify,
            diagnose_proof: diagnose,
            lambda,
            report,
        } => {
            let (inst, hash): (Instance<S>, _) = load(&input)?;
            let filt = &inst.filtration;
            let f = inst.terminal().ok_or_else(|| {
                CliError::Input("multiplier transforms need leaf-measurable values".into())
            })?;
            let coeffs = a
                .split(',')
                .map(|t| parse_num::<S>(t.trim(), "coefficient"))
                .collect::<Result<Vec<_>, _>>()?;
            let a = MultiplierSequence::new(coeffs).map_err(input_err)?;
            let mut doc = Doc::new();
            doc.note(format!("multiplier input sha256:{hash}"));
            doc.note(format!(
                "N={n_max} sup|a|={} ||f||_1={} mode={}",
                a.sup_norm(),
                f.l1_norm(filt),
                mode.label()
            ));
            let t = transform(filt, f, &a, n_max).map_err(input_err)?;
            doc.note(format!("||T_N(a;f)||_inf = {}", t.sup_norm()));
            if certify {
                let cert = certify_weak_type(filt, f, &a, n_max).map_err(input_err)?;
                doc.note(format!(
                    "empirical constant {} at lambda {} over {} levels",
                    cert.empirical_constant, cert.worst_lambda, cert.sweep_points
                ));
                doc.absorb(&cert.certification);
                let iso = ito_isometry_check(filt, f, &a, n_max).map_err(input_err)?;
                doc.record(&iso.record);
            }
            if diagnose {
                let level = match lambda {
                    Some(text) => parse_num(&text, "lambda")?,
                    None => a.sup_norm().clone() * f.l1_norm(filt),
                };
                let diag = diagnose_proof(filt, f, &a, n_max, &level).map_err(input_err)?;
                doc.note(format!("proof diagnostics at lambda {}", diag.lambda));
                doc.absorb(&diag.certification);
            }
            deliver(&doc, report.as_deref())
        }
        Command::Jn {
            input,
            root,
            s,
            beta,
            u,
            report,
        } => {
            let (inst, hash): (Instance<S>, _) = load(&input)?;
            let filt = &inst.filtration;
            let f = inst.terminal().ok_or_else(|| {
                CliError::Input("the John-Nirenberg pipeline needs leaf-measurable values".into())
            })?;
            let root_idx = filt
                .atom_by_id(&root)
                .ok_or_else(|| CliError::Input(format!("no atom named `{root}`")))?;
            let alpha = jn::regularity_constant(filt);
            let profile = jn::bmo_norm(filt, f);
            let mut doc = Doc::new();
            doc.note(format!("jn input sha256:{hash} root={root}"));
            doc.note(format!(
                "alpha={alpha} norm={} mode={}",
                profile.norm,
                mode.label()
            ));
            if let Some(worst) = profile.worst_atom {
                doc.note(format!(
                    "oscillation attained on `{}`",
                    filt.atom(worst).id
                ));
            }
            if f.is_nonnegative() {
                let overshoot = jn::overshoot_check(filt, f).map_err(input_err)?;
                doc.absorb(&overshoot.certification);
            } else {
                doc.note("signed values: the nonnegative overshoot bound does not apply");
            }
            let threshold = match s {
                Some(text) => parse_num(&text, "threshold")?,
                None if profile.norm.is_zero() => S::one(),
                None => S::e_lower() * profile.norm.clone(),
            };
            let run = jn::cz_generations(filt, f, root_idx, &threshold, filt.horizon())
                .map_err(input_err)?;
            doc.note(format!(
                "threshold {} produced {} generations",
                run.threshold,
                run.generations.len()
            ));
            doc.absorb(&run.certification);
            let grid = jn::default_t_grid(&profile.norm);
            let tail = jn::certify_jn_tail(filt, f, root_idx, &grid).map_err(input_err)?;
            doc.absorb(&tail.certification);
            if let Some(text) = u {
                let base: S = parse_num(&text, "base")?;
                let tail = jn::certify_jn_tail_parametric(filt, f, root_idx, &grid, &base)
                    .map_err(input_err)?;
                doc.absorb(&tail.certification);
            }
            let rate = match beta {
                Some(text) => parse_num(&text, "rate")?,
                None => jn::default_exp_rate(&alpha),
            };
            let moment =
                jn::certify_exp_integrability(filt, f, root_idx, &rate).map_err(input_err)?;
            doc.note(format!(
                "exp moment {} against bound {}",
                moment.moment, moment.bound
            ));
            doc.absorb(&moment.certification);
            deliver(&doc, report.as_deref())
        }
        Command::Suite {
            seed,
            decompositions,
            signed,
            multipliers,
            isometries,
            jn,
            corrupt,
            report,
        } => {
            if mode == Mode::Float {
                return Err(CliError::Input(
                    "the batch suite runs in exact arithmetic; drop --float".into(),
                ));
            }
            let config = SuiteConfig {
                seed,
                decompositions,
                signed,
                multipliers,
                isometries,
                jn,
                corrupt,
            };
            let result = run_suite(&config);
            match report {
                Some(path) => {
                    write_file(&path, &result.render())?;
                    println!("report written to {}", path.display());
                    println!("{}", result.summary());
                }
                None => print!("{}", result.render()),
            }
            Ok(result.all_pass())
        }
        Command::Generate {
            seed,
            depth_min,
            depth_max,
            branching_min,
            branching_max,
            min_ratio,
            values,
            output,
        } => {
            let mut config = GeneratorConfig::<S>::new(seed);
            config.depth = depth_min..=depth_max;
            config.branching = branching_min..=branching_max;
            if let Some(text) = min_ratio {
                config.probabilities = ProbabilityScheme::RandomSplit {
                    min_ratio: parse_num(&text, "min ratio")?,
                };
            }
            config.values = match values {
                ValuesArg::Nonneg => ValueScheme::NonnegativeUniform,
                ValuesArg::Signed => ValueScheme::SignedUniform,
                ValuesArg::Spike => ValueScheme::SparseSpike,
            };
            let (filt, f) = generator::generate(&config).map_err(input_err)?;
            let text = render_instance(&filt, &f);
            match output {
                Some(path) => {
                    write_file(&path, &text)?;
                    println!("instance written to {}", path.display());
                }
                None => print!("{text}"),
            }
            Ok(true)
        }
    }
}
