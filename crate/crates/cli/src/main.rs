//! `nclmi` command-line front end. Every subcommand reads JSON inputs and
//! writes one JSON document.
//!
//! Exit codes: 0 success, 2 input error, 3 witness or failed check,
//! 4 budget exhausted.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use nclmi::boundary::{compress_pair, find_boundary_pairs, BoundaryPair, CompressionMode, SizeConstants};
use nclmi::convexity::{contraction_closure_check, midpoint_falsifier, FalsifierConfig};
use nclmi::evaluate::{eval_poly, ray_membership, signature, RayOptions};
use nclmi::pencil::{pencil_membership, quadratic_to_lmi};
use nclmi::separate::{separating_pencil, SeparationConfig};
use nclmi::synth::{min_degree_witness, synthesize_lmi, SynthesisConfig};
use nclmi::vanishing::{dominating_representative_parts, vanishing_space, SampleSet};
use nclmi::{catalog, demos, io, Error, NcPolynomial};

#[derive(Parser)]
#[command(name = "nclmi", version, about = "Free convex sets, boundary pairs and LMI synthesis")]
struct Cli {
    /// Write the JSON document here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct PolyArg {
    /// Polynomial JSON file, or `catalog:<name>` (interval, ball, ball3, tv, b, f, fbf, bfb, b+f).
    #[arg(long)]
    poly: String,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a polynomial at a tuple.
    Eval {
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long)]
        tuple: PathBuf,
        /// Zero tolerance for the reported signature.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Membership of a tuple in D_p (ray scan) or D_L (eigenvalues).
    Member {
        #[arg(long, conflicts_with = "pencil", required_unless_present = "pencil")]
        poly: Option<String>,
        #[arg(long)]
        pencil: Option<PathBuf>,
        #[arg(long)]
        tuple: PathBuf,
        /// Boundary band around the critical scale.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Boundary pairs along the ray through a direction.
    Boundary {
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long)]
        direction: PathBuf,
        /// Also report compressions.
        #[arg(long, value_enum)]
        compress: Option<Mode>,
    },
    /// Vanishing space of a list of boundary pairs.
    Vanish {
        /// JSON array of boundary pairs (or a single pair).
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        degree: usize,
    },
    /// Dominating representative of a list of boundary pairs.
    Dominate {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        degree: usize,
    },
    /// Search for a matrix-convexity violation.
    FalsifyConvexity {
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
        #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
        levels: Vec<usize>,
        #[arg(long, value_enum, default_value_t = Falsifier::Midpoint)]
        search: Falsifier,
    },
    /// Separating monic pencil at a boundary point.
    Separate {
        #[command(flatten)]
        poly: PolyArg,
        /// Tuple JSON of the boundary point.
        #[arg(long)]
        point: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Interior samples per certificate level.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
        levels: Vec<usize>,
    },
    /// Exact monic LMI for a scalar quadratic with p(0) = 1.
    Lmi2 {
        #[command(flatten)]
        poly: PolyArg,
    },
    /// Empirical LMI synthesis by pencil augmentation.
    Synth {
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long)]
        seed: u64,
        /// Random directions probed for the boundary pool.
        #[arg(long, default_value_t = 60)]
        budget: usize,
        #[arg(long, default_value_t = 20)]
        iteration_cap: usize,
        /// Samples per level for the final agreement check.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
        levels: Vec<usize>,
    },
    /// Dimension of the sampled vanishing space at degree floor(d/2) + 1.
    MinDegreeWitness {
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long)]
        seed: u64,
        /// Number of boundary pairs.
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
    /// Worked examples.
    Demo {
        #[command(subcommand)]
        which: Demo,
    },
}

#[derive(Subcommand)]
enum Demo {
    /// Lifted LMI family for 1 - x^4 - y^4.
    Tvscreen {
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 201)]
        grid: usize,
        #[arg(long, default_value_t = 300)]
        samples: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        levels: Vec<usize>,
        /// Seed for the sampled containment check.
        #[arg(long)]
        seed: u64,
    },
    /// Level-one agreement of b ⊕ f, fbf and bfb.
    Bandf {
        #[arg(long, default_value_t = 201)]
        grid: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Full,
    Half,
}

#[derive(Clone, Copy, ValueEnum)]
enum Falsifier {
    Midpoint,
    Compression,
}

/// Outcome of a command: the document and its exit code.
struct Outcome {
    doc: Value,
    code: u8,
}

fn ok<T: Serialize>(v: T) -> Result<Outcome, Failure> {
    Ok(Outcome {
        doc: serde_json::to_value(v).map_err(Error::from)?,
        code: 0,
    })
}

enum Failure {
    Input(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_poly(arg: &str) -> Result<NcPolynomial, Failure> {
    match arg.strip_prefix("catalog:") {
        Some(name) => Ok(catalog::by_name(name)?),
        None => Ok(io::parse_polynomial(&read(Path::new(arg))?)?),
    }
}

fn load_pairs(path: &Path) -> Result<SampleSet, Failure> {
    let text = read(path)?;
    let value: Value = serde_json::from_str(&text).map_err(Error::from)?;
    let pairs: Vec<BoundaryPair> = if value.is_array() {
        serde_json::from_value(value).map_err(Error::from)?
    } else {
        vec![serde_json::from_value(value).map_err(Error::from)?]
    };
    Ok(SampleSet::new(pairs)?)
}

fn run(command: Command) -> Result<Outcome, Failure> {
    match command {
        Command::Eval { poly, tuple, tol } => {
            let p = load_poly(&poly.poly)?;
            let x = io::parse_tuple(&read(&tuple)?)?;
            let v = eval_poly(&p, &x)?;
            let sig = if v.is_square() && p.is_symmetric(1e-12) {
                Some(signature(&v, tol)?)
            } else {
                None
            };
            ok(json!({ "value": io::matrix_to_rows(&v), "signature": sig }))
        }
        Command::Member { poly, pencil, tuple, tol } => {
            let x = io::parse_tuple(&read(&tuple)?)?;
            if let Some(path) = pencil {
                let l = io::parse_pencil(&read(&path)?)?;
                let min = l.min_eigenvalue(&x)?;
                return ok(json!({ "inside": pencil_membership(&l, &x)?, "min_eigenvalue": min }));
            }
            let p = load_poly(poly.as_deref().expect("clap enforces one of poly/pencil"))?;
            let opts = RayOptions {
                boundary_tol: tol,
                ..Default::default()
            };
            ok(ray_membership(&p, &x, opts)?)
        }
        Command::Boundary { poly, direction, compress } => {
            let p = load_poly(&poly.poly)?;
            let dir = io::parse_tuple(&read(&direction)?)?;
            let pairs = find_boundary_pairs(&p, &dir)?;
            let compressed = match compress {
                None => None,
                Some(m) => {
                    let mode = match m {
                        Mode::Full => CompressionMode::FullDegree,
                        Mode::Half => CompressionMode::HalfDegree,
                    };
                    Some(pairs.iter().map(|q| compress_pair(&p, q, mode)).collect::<nclmi::Result<Vec<_>>>()?)
                }
            };
            ok(json!({ "pairs": pairs, "compressed": compressed, "sizes": SizeConstants::of(&p) }))
        }
        Command::Vanish { pairs, degree } => {
            let s = load_pairs(&pairs)?;
            ok(vanishing_space(&s, degree)?)
        }
        Command::Dominate { pairs, degree } => {
            let s = load_pairs(&pairs)?;
            let (rep, used) = dominating_representative_parts(&s, degree)?;
            let dim = vanishing_space(&s, degree)?.dim();
            ok(json!({ "representative": rep, "members": used, "vanishing_dim": dim }))
        }
        Command::FalsifyConvexity {
            poly,
            seed,
            budget,
            levels,
            search,
        } => {
            let p = load_poly(&poly.poly)?;
            let config = FalsifierConfig {
                seed,
                budget,
                levels,
                ..Default::default()
            };
            let report = match search {
                Falsifier::Midpoint => midpoint_falsifier(&p, &config)?,
                Falsifier::Compression => contraction_closure_check(&p, &config)?,
            };
            let code = if report.witness.is_some() { 3 } else { 0 };
            Ok(Outcome {
                doc: json!({ "config": config, "report": report }),
                code,
            })
        }
        Command::Separate {
            poly,
            point,
            seed,
            samples,
            levels,
        } => {
            let p = load_poly(&poly.poly)?;
            let x = io::parse_tuple(&read(&point)?)?;
            let mut config = SeparationConfig::with_seed(seed);
            config.certificate_samples = samples;
            config.certificate_levels = levels;
            ok(separating_pencil(&p, &x, &config)?)
        }
        Command::Lmi2 { poly } => {
            let p = load_poly(&poly.poly)?;
            let (l, dec) = quadratic_to_lmi(&p)?;
            ok(json!({ "pencil": l, "decomposition": dec, "schur_identity": true }))
        }
        Command::Synth {
            poly,
            seed,
            budget,
            iteration_cap,
            samples,
            levels,
        } => {
            let p = load_poly(&poly.poly)?;
            let mut config = SynthesisConfig::new(seed);
            config.boundary_budget = budget;
            config.iteration_cap = iteration_cap;
            config.agreement_samples = samples;
            config.agreement_levels = levels;
            let (_, report) = synthesize_lmi(&p, &config)?;
            let code = match &report.agreement {
                Some(a) if a.disagreements == 0 => 0,
                _ => 3,
            };
            Ok(Outcome {
                doc: json!({ "budget": budget, "iteration_cap": iteration_cap, "report": report }),
                code,
            })
        }
        Command::MinDegreeWitness { poly, seed, samples } => {
            let p = load_poly(&poly.poly)?;
            let report = min_degree_witness(&p, samples, seed)?;
            let code = if report.dimension == 0 { 3 } else { 0 };
            Ok(Outcome {
                doc: serde_json::to_value(report).map_err(Error::from)?,
                code,
            })
        }
        Command::Demo { which } => {
            let (doc, passed) = match which {
                Demo::Tvscreen {
                    alpha,
                    grid,
                    samples,
                    levels,
                    seed,
                } => {
                    if !alpha.is_finite() || alpha <= 0.0 || levels.is_empty() {
                        return Err(Failure::Input("alpha must be positive and levels non-empty".into()));
                    }
                    let r = demos::tvscreen(alpha, grid, samples, &levels, seed)?;
                    let passed = r.passed;
                    (serde_json::to_value(r).map_err(Error::from)?, passed)
                }
                Demo::Bandf { grid } => {
                    let r = demos::bandf(grid)?;
                    let passed = r.passed;
                    (serde_json::to_value(r).map_err(Error::from)?, passed)
                }
            };
            Ok(Outcome {
                doc,
                code: if passed { 0 } else { 3 },
            })
        }
    }
}

fn error_doc(kind: &str, message: String, extra: Value) -> Value {
    json!({ "error": kind, "message": message, "details": extra })
}

fn failure_outcome(f: Failure) -> Outcome {
    match f {
        Failure::Input(msg) => Outcome {
            doc: error_doc("input", msg, Value::Null),
            code: 2,
        },
        Failure::Lib(e) => {
            let message = e.to_string();
            match e {
                Error::IterationCapExceeded(report) => Outcome {
                    doc: error_doc("budget", message, serde_json::to_value(*report).unwrap_or(Value::Null)),
                    code: 4,
                },
                Error::NotPsd { eigenvalue, direction } => Outcome {
                    doc: error_doc("not_psd", message, json!({ "eigenvalue": eigenvalue, "direction": direction })),
                    code: 3,
                },
                Error::SeparationFailed(_)
                | Error::StateNotFound(_)
                | Error::SynthesisStalled { .. }
                | Error::NotOnBoundary { .. }
                | Error::CompressionResidual { .. }
                | Error::RayNeverExits { .. }
                | Error::Numerical(_) => Outcome {
                    doc: error_doc("failure", message, Value::Null),
                    code: 3,
                },
                _ => Outcome {
                    doc: error_doc("input", message, Value::Null),
                    code: 2,
                },
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = run(cli.command).unwrap_or_else(failure_outcome);
    let text = io::to_json(&outcome.doc);
    match &cli.out {
        Some(path) => {
            if let Err(e) = fs::write(path, text + "\n") {
                eprintln!("cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => println!("{text}"),
    }
    if let Some(msg) = outcome.doc.get("message").and_then(Value::as_str) {
        eprintln!("nclmi: {msg}");
    }
    ExitCode::from(outcome.code)
}
