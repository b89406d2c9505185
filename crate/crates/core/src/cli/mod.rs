//! The `kweave` command line.
//!
//! Exit codes: `0` when the computed result is positive (a frame, a K-frame,
//! woven, the condition holds, range included), `1` when it is a negative
//! certificate, `2` for input or usage errors.

pub mod examples;
pub mod io;

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::error::{Error, Result};
use crate::frames::{self, Frame};
use crate::kframe::{self, KOperator};
use crate::linalg::ComplexMatrix;
use crate::perturbation::{self, PerturbationOptions, PerturbationParams, PerturbationReport};
use crate::weaving::{self, CertifyOptions, SearchMode, WeavingReport};

use examples::ExampleName;
use io::{InputDigest, ReportFileV1};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Worker-count hint for parallel partition evaluation.
pub const THREADS_ENV: &str = "KWEAVE_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "kweave",
    version,
    about = "Frame, K-frame and weaving certification in C^d"
)]
pub struct Cli {
    /// Also write a machine-readable JSON report to this path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimal frame bounds of a frame file.
    FrameBounds { frame: PathBuf },
    /// Optimal lower K-frame bound and membership test.
    KframeCheck {
        frame: PathBuf,
        op: PathBuf,
        /// Required lower bound [default: 1e-8 * (1 + upper)].
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Certify that frames are K-woven; the last file is the operator K.
    WeaveCertify {
        #[arg(required = true, num_args = 2..)]
        files: Vec<PathBuf>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Certify the images {U phi_ij} against U K; the last file is K.
    WeaveTransform {
        #[arg(required = true, num_args = 2..)]
        files: Vec<PathBuf>,
        #[arg(long = "u")]
        u: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Evaluate the perturbation criterion for two frames.
    PerturbCheck {
        f1: PathBuf,
        f2: PathBuf,
        op: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long, default_value_t = 0.0)]
        nu: f64,
        #[arg(long)]
        alpha: f64,
        /// Manual lower bound A1 for the first frame (at most the optimal one).
        #[arg(long)]
        a1: Option<f64>,
        /// Seed for the sampled gap check (used when mu or nu is nonzero).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cross-check the prediction with exhaustive certification.
        #[arg(long)]
        certify: bool,
    },
    /// Douglas range inclusion R(L1) ⊆ R(L2).
    Douglas { l1: PathBuf, l2: PathBuf },
    /// Generate a truncated standard example.
    PaperExample {
        name: String,
        #[arg(long)]
        dim: usize,
        /// Write f1.json, f2.json, k.json (and u.json) into this directory.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exhaustive,
    Sampled,
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Exhaustive)]
    mode: ModeArg,
    /// Random partitions visited in sampled mode.
    #[arg(long, default_value_t = 4096)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest number of weavings visited in exhaustive mode.
    #[arg(long, default_value_t = weaving::DEFAULT_PARTITION_CAP)]
    cap: u64,
    /// Woven threshold [default: 1e-8 * (1 + universal upper)].
    #[arg(long)]
    threshold: Option<f64>,
    /// Print one row per visited partition as CSV instead of the summary.
    #[arg(long)]
    csv: bool,
}

/// What a subcommand produced.
struct Outcome {
    text: String,
    result: serde_json::Value,
    inputs: Vec<InputDigest>,
    seed: Option<u64>,
    negative: bool,
}

/// Formats a number with at most ten significant digits.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x > 0.0 { "inf".into() } else { x.to_string() };
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..=9).contains(&exp) {
        let decimals = (9 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.9e}")
    }
}

fn fmt_vec(v: &[[f64; 2]]) -> String {
    let parts: Vec<String> = v
        .iter()
        .map(|z| {
            if z[1] == 0.0 || fmt_num(z[1]) == "0" {
                fmt_num(z[0])
            } else {
                format!("{}{:+}i", fmt_num(z[0]), fmt_num(z[1]))
            }
        })
        .collect();
    format!("[{}]", parts.join(", "))
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn table(rows: &[(&str, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut s = String::new();
    for (k, v) in rows {
        let _ = writeln!(s, "{k:<width$}  {v}");
    }
    s
}

fn digest(path: &Path, d: String) -> InputDigest {
    InputDigest {
        path: path.display().to_string(),
        sha256: d,
    }
}

fn load_family(files: &[PathBuf]) -> Result<(Vec<Frame>, KOperator, Vec<InputDigest>)> {
    let (op_path, frame_paths) = files.split_last().expect("clap requires two files");
    let mut inputs = Vec::new();
    let mut frames = Vec::new();
    for p in frame_paths {
        let l = io::load_frame(p)?;
        inputs.push(digest(p, l.digest));
        frames.push(l.value);
    }
    let k = io::load_operator(op_path)?;
    inputs.push(digest(op_path, k.digest));
    Ok((frames, KOperator::new(k.value)?, inputs))
}

fn certify_options(
    search: &SearchArgs,
    m: usize,
    n: usize,
    warn: &mut dyn Write,
) -> CertifyOptions {
    let mut opts = CertifyOptions {
        mode: match search.mode {
            ModeArg::Exhaustive => SearchMode::Exhaustive,
            ModeArg::Sampled => SearchMode::Sampled {
                budget: search.budget,
                seed: search.seed,
            },
        },
        partition_cap: search.cap,
        woven_threshold: search.threshold,
    };
    if opts.mode == SearchMode::Exhaustive {
        let total = (m as f64).powi(n as i32);
        if total > search.cap as f64 {
            let _ = writeln!(
                warn,
                "warning: {m}^{n} partitions exceed the cap of {}; switching to sampled mode \
                 (budget {}, seed {}). A woven verdict is then only \"no counterexample found\".",
                search.cap, search.budget, search.seed
            );
            opts.mode = SearchMode::Sampled {
                budget: search.budget,
                seed: search.seed,
            };
        }
    }
    opts
}

fn weaving_text(r: &WeavingReport) -> String {
    let verdict = match (r.woven, r.exhaustive) {
        (true, true) => "woven (certified)".to_string(),
        (true, false) => "no counterexample found (sampled, not a certificate)".to_string(),
        (false, _) => "not woven".to_string(),
    };
    let mut rows = vec![
        ("verdict", verdict),
        ("weakly woven", yes_no(r.weakly_woven).to_string()),
        ("universal lower", fmt_num(r.universal_lower)),
        ("universal upper", fmt_num(r.universal_upper)),
        ("sum of upper bounds", fmt_num(r.sum_upper_bound)),
        ("woven threshold", fmt_num(r.woven_threshold)),
        (
            "partitions checked",
            format!(
                "{} ({})",
                r.partitions_checked,
                if r.exhaustive {
                    "exhaustive"
                } else {
                    "sampled"
                }
            ),
        ),
        ("worst partition", r.worst_partition.to_string()),
    ];
    if let Some(p) = &r.failing_partition {
        rows.push(("failing partition", p.to_string()));
    }
    if let Some(w) = &r.witness {
        rows.push(("witness", fmt_vec(w)));
    }
    if let Some(s) = r.seed {
        rows.push(("seed", s.to_string()));
    }
    table(&rows)
}

fn csv_table(frames: &[Frame], k: &KOperator, opts: &CertifyOptions) -> Result<String> {
    let rows = weaving::partition_table(frames, k, opts)?;
    let mut s = String::from("partition,lower,upper\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{:e},{:e}",
            r.partition.digits(),
            r.bounds.lower,
            r.bounds.upper
        );
    }
    Ok(s)
}

fn perturbation_text(r: &PerturbationReport) -> Vec<(&'static str, String)> {
    let mode = match r.gap_verification {
        perturbation::GapVerification::Exact => "exact".to_string(),
        perturbation::GapVerification::Sampled { samples, seed } => {
            format!("sampled ({samples} directions, seed {seed})")
        }
    };
    vec![
        ("condition holds", yes_no(r.condition_holds).to_string()),
        ("lhs", fmt_num(r.lhs)),
        ("rhs", fmt_num(r.rhs)),
        (
            "gap condition holds",
            yes_no(r.gap_condition_holds).to_string(),
        ),
        ("gap verification", mode),
        ("gap violations", r.gap_violations.to_string()),
        ("synthesis gap", fmt_num(r.synthesis_gap)),
        (
            "predicted lower",
            r.predicted_lower.map_or("-".to_string(), fmt_num),
        ),
        ("predicted upper", fmt_num(r.predicted_upper)),
        ("A1", fmt_num(r.a1)),
        ("B1", fmt_num(r.b1)),
        ("B2", fmt_num(r.b2)),
        ("sigma_min_pos(K)", fmt_num(r.sigma_min_pos)),
    ]
}

fn matrix_json(m: &ComplexMatrix) -> serde_json::Value {
    let rows: Vec<Vec<[f64; 2]>> = (0..m.rows())
        .map(|i| {
            (0..m.cols())
                .map(|j| [m.get(i, j).re, m.get(i, j).im])
                .collect()
        })
        .collect();
    json!(rows)
}

fn execute(cmd: &Command, csv_out: &mut bool, warn: &mut dyn Write) -> Result<Outcome> {
    match cmd {
        Command::FrameBounds { frame } => {
            let l = io::load_frame(frame)?;
            let b = frames::frame_bounds(&l.value);
            let is_frame = frames::is_frame(&l.value);
            Ok(Outcome {
                text: format!(
                    "lower={} upper={}\n{}",
                    fmt_num(b.lower),
                    fmt_num(b.upper),
                    table(&[("frame", yes_no(is_frame).to_string())])
                ),
                result: json!({ "lower": b.lower, "upper": b.upper, "is_frame": is_frame }),
                inputs: vec![digest(frame, l.digest)],
                seed: None,
                negative: !is_frame,
            })
        }
        Command::KframeCheck {
            frame,
            op,
            threshold,
        } => {
            let f = io::load_frame(frame)?;
            let k = io::load_operator(op)?;
            let kop = KOperator::new(k.value)?;
            if kop.near_rank_deficient() {
                let _ = writeln!(
                    warn,
                    "warning: K is nearly rank-deficient (sigma_min_pos / sigma_max < 1e-6)"
                );
            }
            let upper = frames::frame_bounds(&f.value).upper;
            let t = threshold.unwrap_or_else(|| weaving::default_woven_threshold(upper));
            let r = kframe::is_kframe(&f.value, &kop, t)?;
            let mut rows = vec![
                ("K-frame", yes_no(r.is_kframe).to_string()),
                ("lower", fmt_num(r.lower)),
                ("upper", fmt_num(r.upper)),
                ("threshold", fmt_num(t)),
            ];
            if let Some(w) = &r.witness {
                rows.push(("witness", fmt_vec(w)));
            }
            let mut result = serde_json::to_value(&r)?;
            result["threshold"] = json!(t);
            Ok(Outcome {
                text: table(&rows),
                result,
                inputs: vec![digest(frame, f.digest), digest(op, k.digest)],
                seed: None,
                negative: !r.is_kframe,
            })
        }
        Command::WeaveCertify { files, search } => {
            let (fams, k, inputs) = load_family(files)?;
            let (_, n) = weaving::family_shape(&fams)?;
            let opts = certify_options(search, fams.len(), n, warn);
            let r = weaving::certify_woven(&fams, &k, &opts)?;
            let text = if search.csv {
                *csv_out = true;
                csv_table(&fams, &k, &opts)?
            } else {
                weaving_text(&r)
            };
            Ok(Outcome {
                text,
                result: serde_json::to_value(&r)?,
                inputs,
                seed: r.seed,
                negative: !r.woven,
            })
        }
        Command::WeaveTransform { files, u, search } => {
            let (fams, k, mut inputs) = load_family(files)?;
            let ul = io::load_operator(u)?;
            inputs.push(digest(u, ul.digest));
            let (_, n) = weaving::family_shape(&fams)?;
            let opts = certify_options(search, fams.len(), n, warn);
            let r = weaving::transform_weaving(&fams, &k, &ul.value, &opts)?;
            let text = if search.csv {
                *csv_out = true;
                let images = fams
                    .iter()
                    .map(|f| f.image(&ul.value))
                    .collect::<Result<Vec<_>>>()?;
                csv_table(&images, &k.compose_left(&ul.value)?, &opts)?
            } else {
                weaving_text(&r)
            };
            Ok(Outcome {
                text,
                result: serde_json::to_value(&r)?,
                inputs,
                seed: r.seed,
                negative: !r.woven,
            })
        }
        Command::PerturbCheck {
            f1,
            f2,
            op,
            lambda,
            mu,
            nu,
            alpha,
            a1,
            seed,
            certify,
        } => {
            let l1 = io::load_frame(f1)?;
            let l2 = io::load_frame(f2)?;
            let k = io::load_operator(op)?;
            let kop = KOperator::new(k.value)?;
            let params = PerturbationParams::new(*lambda, *mu, *nu, *alpha)?;
            let popts = PerturbationOptions {
                seed: *seed,
                a1_override: *a1,
            };
            let inputs = vec![
                digest(f1, l1.digest),
                digest(f2, l2.digest),
                digest(op, k.digest),
            ];
            let sampled = *mu != 0.0 || *nu != 0.0;
            if *certify {
                let cert = perturbation::perturbation_certify(
                    &l1.value,
                    &l2.value,
                    &kop,
                    &params,
                    &popts,
                    &CertifyOptions::default(),
                )?;
                let mut rows = perturbation_text(&cert.report);
                rows.push(("measured woven", yes_no(cert.measured.woven).to_string()));
                rows.push(("measured lower", fmt_num(cert.measured.universal_lower)));
                rows.push(("measured upper", fmt_num(cert.measured.universal_upper)));
                rows.push(("consistent", yes_no(cert.consistent).to_string()));
                Ok(Outcome {
                    text: table(&rows),
                    negative: !cert.report.applies() || !cert.consistent,
                    result: serde_json::to_value(&cert)?,
                    inputs,
                    seed: sampled.then_some(*seed),
                })
            } else {
                let r = perturbation::perturbation_condition(
                    &l1.value, &l2.value, &kop, &params, &popts,
                )?;
                Ok(Outcome {
                    text: table(&perturbation_text(&r)),
                    negative: !r.applies(),
                    result: serde_json::to_value(&r)?,
                    inputs,
                    seed: sampled.then_some(*seed),
                })
            }
        }
        Command::Douglas { l1, l2 } => {
            let a = io::load_matrix(l1)?;
            let b = io::load_matrix(l2)?;
            let r = kframe::douglas_check(&a.value, &b.value)?;
            let lambda_sq = if r.lambda_sq.is_finite() {
                json!(r.lambda_sq)
            } else {
                json!("inf")
            };
            Ok(Outcome {
                text: table(&[
                    ("range included", yes_no(r.range_included).to_string()),
                    ("inf mu (bisection)", fmt_num(r.lambda_sq)),
                    ("||C||^2", fmt_num(r.factor_norm_sq)),
                ]),
                result: json!({
                    "range_included": r.range_included,
                    "lambda_sq": lambda_sq,
                    "factor": matrix_json(&r.factor),
                    "factor_norm_sq": r.factor_norm_sq,
                }),
                inputs: vec![digest(l1, a.digest), digest(l2, b.digest)],
                seed: None,
                negative: !r.range_included,
            })
        }
        Command::PaperExample { name, dim, emit } => {
            let name: ExampleName = name.parse().map_err(Error::InvalidFormat)?;
            let ex = examples::paper_example(name, *dim)?;
            let mut written = Vec::new();
            if let Some(dir) = emit {
                std::fs::create_dir_all(dir)?;
                for (file, frame) in [("f1.json", &ex.frames[0]), ("f2.json", &ex.frames[1])] {
                    io::save_frame(&dir.join(file), frame)?;
                    written.push(file);
                }
                io::save_operator(&dir.join("k.json"), ex.k.matrix())?;
                written.push("k.json");
                if let Some(u) = &ex.u {
                    io::save_operator(&dir.join("u.json"), u)?;
                    written.push("u.json");
                }
            }
            let mut rows = vec![
                ("example", ex.name.to_string()),
                ("dim", ex.dim.to_string()),
                ("count", ex.count().to_string()),
            ];
            if let Some(dir) = emit {
                rows.push((
                    "written",
                    format!("{} in {}", written.join(", "), dir.display()),
                ));
            }
            Ok(Outcome {
                text: table(&rows),
                result: json!({
                    "example": ex.name.as_str(),
                    "dim": ex.dim,
                    "count": ex.count(),
                    "files": written,
                }),
                inputs: Vec::new(),
                seed: None,
                negative: false,
            })
        }
    }
}

fn configure_threads(err: &mut dyn Write) {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                // Fails only if the global pool already exists; the hint is then moot.
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => {
                let _ = writeln!(err, "warning: ignoring {THREADS_ENV}={v:?}");
            }
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    configure_threads(err);

    let mut csv = false;
    let outcome = match execute(&cli.command, &mut csv, err) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let _ = write!(out, "{}", outcome.text);

    if let Some(path) = &cli.out {
        let command: Vec<String> = args
            .iter()
            .skip(1)
            .map(|a| a.to_string_lossy().into_owned())
            .collect();
        let report = ReportFileV1::new(command, outcome.inputs, outcome.seed, outcome.result);
        if let Err(e) = report.write(path) {
            let _ = writeln!(err, "error: writing {}: {e}", path.display());
            return EXIT_USAGE;
        }
    }
    if outcome.negative {
        EXIT_NEGATIVE
    } else {
        EXIT_OK
    }
}
