use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use fillcurve::lance_thomas::{self, ParamMap};
use fillcurve::reparam::{self, AreaProfile};
use fillcurve::scalar::{format_rational, parse_rational, to_decimal};
use fillcurve::{
    check_knopp, check_lance_thomas, render_knopp, render_lt, KnoppCurve, KnoppSchedule,
    LanceThomasSchedule, Rational, SvgOptions,
};

/// Largest Knopp depth accepted on the command line (2^24 triangles).
const MAX_KNOPP_DEPTH: usize = 24;
/// Largest Lance–Thomas generation accepted (2·4^10 − 1 segments).
const MAX_LT_GENERATION: usize = 10;

#[derive(Parser)]
#[command(
    name = "fillcurve",
    version,
    about = "Exact area-filling curve constructions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a chain level or generation and write it as JSON.
    Build {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the approximating curve at a rational parameter.
    Eval {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long, value_name = "NUM/DEN")]
        t: String,
    },
    /// Area table of the chains up to the given depth.
    Measure {
        #[command(flatten)]
        curve: CurveArgs,
    },
    /// Area of a dyadic Knopp arc at a finite horizon.
    Arc {
        #[arg(long, value_enum, default_value_t = Family::Knopp)]
        family: Family,
        #[arg(long, value_name = "NUM/DEN")]
        beta: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        j: usize,
        #[arg(long)]
        horizon: usize,
    },
    /// Run the invariant checks; exit status 1 if any fails.
    Verify {
        #[command(flatten)]
        curve: CurveArgs,
        /// Also write the report, with timings, to this file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Homogeneous reparametrization profile, or the t² counterexample.
    Reparam {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long)]
        demo_square: bool,
        /// Largest horizon of the counterexample table.
        #[arg(long, default_value_t = 10)]
        horizon: usize,
        /// Print decimals instead of exact fractions in the CSV profile.
        #[arg(long)]
        decimal: bool,
    },
    /// Draw the construction as SVG.
    Render {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        fill: Option<String>,
        #[arg(long)]
        alt_fill: Option<String>,
        #[arg(long)]
        stroke: Option<String>,
        /// Stroke width as a fraction of the figure width.
        #[arg(long, value_name = "NUM/DEN")]
        stroke_width: Option<String>,
        #[arg(long)]
        no_polyline: bool,
        /// Lance–Thomas only: draw the Cantor stage below the square.
        #[arg(long)]
        cantor_stage: bool,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    Knopp,
    Lt,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long, value_name = "NUM/DEN")]
    beta: Option<String>,
    #[arg(long, value_name = "NUM/DEN")]
    alpha: Option<String>,
    #[arg(long, default_value_t = 0)]
    depth: usize,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<fillcurve::Error> for Failure {
    fn from(e: fillcurve::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome<T> = Result<T, Failure>;

enum Built {
    Knopp(Box<KnoppCurve>),
    Lt(LanceThomasSchedule),
}

fn rational(flag: &str, text: &str) -> Outcome<Rational> {
    parse_rational(text).map_err(|e| Failure::Usage(format!("--{flag}: {e}")))
}

impl CurveArgs {
    fn knopp(&self, horizon: usize) -> Outcome<KnoppCurve> {
        let beta = self
            .beta
            .as_deref()
            .ok_or_else(|| Failure::Usage("--family knopp needs --beta NUM/DEN".into()))?;
        knopp_curve(beta, horizon)
    }

    fn lt(&self, horizon: usize) -> Outcome<LanceThomasSchedule> {
        let alpha = self
            .alpha
            .as_deref()
            .ok_or_else(|| Failure::Usage("--family lt needs --alpha NUM/DEN".into()))?;
        if horizon > MAX_LT_GENERATION {
            return Err(Failure::Usage(format!(
                "--depth {horizon} above limit {MAX_LT_GENERATION} for lt"
            )));
        }
        Ok(LanceThomasSchedule::new(
            rational("alpha", alpha)?,
            horizon,
        )?)
    }

    fn build(&self) -> Outcome<Built> {
        Ok(match self.family {
            Family::Knopp => Built::Knopp(Box::new(self.knopp(self.depth)?)),
            Family::Lt => Built::Lt(self.lt(self.depth)?),
        })
    }
}

fn knopp_curve(beta: &str, horizon: usize) -> Outcome<KnoppCurve> {
    if horizon > MAX_KNOPP_DEPTH {
        return Err(Failure::Usage(format!(
            "depth {horizon} above limit {MAX_KNOPP_DEPTH} for knopp"
        )));
    }
    let schedule = KnoppSchedule::new(rational("beta", beta)?, horizon)?;
    Ok(KnoppCurve::with_default_root(schedule))
}

fn generation(schedule: &LanceThomasSchedule, n: usize) -> Outcome<ParamMap> {
    Ok(lance_thomas::generation(schedule, n)?)
}

fn emit(out: Option<&PathBuf>, text: &str) -> Outcome<()> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

fn pretty(value: &Value) -> String {
    serde_json::to_string_pretty(value).expect("json value serializes")
}

fn q(value: &Rational) -> Value {
    Value::String(format_rational(value))
}

fn run(cli: Cli) -> Outcome<ExitCode> {
    match cli.command {
        Command::Build { curve, out } => {
            let text = match curve.build()? {
                Built::Knopp(c) => c.build_chain(curve.depth)?.to_json(),
                Built::Lt(s) => generation(&s, curve.depth)?.to_json(&s),
            };
            emit(out.as_ref(), &text)?;
        }
        Command::Eval { curve, t } => {
            let t = rational("t", &t)?;
            let point = match curve.build()? {
                Built::Knopp(c) => c.gamma_eval(&t, curve.depth)?,
                Built::Lt(s) => generation(&s, curve.depth)?.eval(&t)?,
            };
            let doc = json!({
                "t": q(&t),
                "depth": curve.depth,
                "point": point.point,
                "error_radius_sq": q(&point.error_radius_sq),
                "exact": point.is_exact(),
            });
            emit(None, &pretty(&doc))?;
        }
        Command::Measure { curve } => {
            let doc = match curve.build()? {
                Built::Knopp(c) => {
                    let s = c.schedule();
                    let rows: Vec<Value> = (0..=curve.depth)
                        .map(|n| {
                            json!({
                                "n": n,
                                "p": q(s.p(n)),
                                "residual": q(&(s.p(n) - s.beta())),
                            })
                        })
                        .collect();
                    json!({ "family": "knopp", "beta": q(s.beta()), "rows": rows })
                }
                Built::Lt(s) => {
                    let beta = s.beta();
                    let rows: Vec<Value> = (0..=curve.depth)
                        .map(|n| {
                            let q2 = s.q(n) * s.q(n);
                            json!({
                                "n": n,
                                "q": q(s.q(n)),
                                "q_squared": q(&q2),
                                "residual": q(&(&q2 - &beta)),
                            })
                        })
                        .collect();
                    json!({
                        "family": "lt",
                        "alpha": q(s.alpha()),
                        "beta": q(&beta),
                        "rows": rows,
                    })
                }
            };
            emit(None, &pretty(&doc))?;
        }
        Command::Arc {
            family,
            beta,
            n,
            j,
            horizon,
        } => {
            if family != Family::Knopp {
                return Err(Failure::Usage(
                    "arc is defined for --family knopp only".into(),
                ));
            }
            let c = knopp_curve(&beta, horizon.max(n))?;
            let arc = c.arc_area(n, j, horizon)?;
            let doc = json!({
                "n": n,
                "j": j,
                "horizon": horizon,
                "value": q(&arc.value),
                "limit": q(&arc.limit),
                "residual": q(&arc.residual()),
            });
            emit(None, &pretty(&doc))?;
        }
        Command::Verify { curve, report } => {
            let r = match curve.build()? {
                Built::Knopp(c) => check_knopp(&c.build_chain(curve.depth)?),
                Built::Lt(s) => check_lance_thomas(&generation(&s, curve.depth)?, &s),
            };
            if let Some(path) = &report {
                emit(Some(path), &r.to_json(true))?;
            }
            emit(None, &r.to_json(false))?;
            for f in r.failures() {
                eprintln!(
                    "FAIL {}: {} [{}]",
                    f.name,
                    f.detail,
                    f.witness.as_deref().unwrap_or("")
                );
            }
            if !r.passed() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Reparam {
            curve,
            demo_square,
            horizon,
            decimal,
        } => {
            if demo_square {
                // The counterexample lives on the Knopp curve of the same area.
                let c = match curve.family {
                    Family::Knopp => curve.knopp(horizon)?,
                    Family::Lt => {
                        let beta = curve.lt(0)?.beta();
                        knopp_curve(&format_rational(&beta), horizon)?
                    }
                };
                let rows = (2..=horizon)
                    .map(|m| {
                        let p = reparam::square_pullback_demo(&c, m)?;
                        Ok(json!({
                            "horizon": m,
                            "left": q(&p.left),
                            "right": q(&p.right),
                            "left_limit": q(&p.left_limit),
                            "right_limit": q(&p.right_limit),
                            "left_residual": q(&p.left_residual()),
                            "right_residual": q(&p.right_residual()),
                        }))
                    })
                    .collect::<Outcome<Vec<Value>>>()?;
                let doc = json!({ "beta": q(c.beta()), "rows": rows });
                emit(None, &pretty(&doc))?;
            } else {
                let profile = match curve.build()? {
                    Built::Knopp(c) => AreaProfile::knopp_limit(&c, curve.depth)?,
                    Built::Lt(s) => AreaProfile::lance_thomas(&generation(&s, curve.depth)?, &s)?,
                };
                emit(None, &profile_csv(&profile, decimal))?;
            }
        }
        Command::Render {
            curve,
            out,
            fill,
            alt_fill,
            stroke,
            stroke_width,
            no_polyline,
            cantor_stage,
        } => {
            let mut opts = SvgOptions {
                show_polyline: !no_polyline,
                show_cantor_stage: cantor_stage,
                ..SvgOptions::default()
            };
            if let Some(v) = fill {
                opts.fill = v;
            }
            if let Some(v) = alt_fill {
                opts.alt_fill = v;
            }
            if let Some(v) = stroke {
                opts.stroke = v;
            }
            if let Some(v) = stroke_width {
                opts.stroke_width = rational("stroke-width", &v)?;
            }
            let doc = match curve.build()? {
                Built::Knopp(c) => render_knopp(&c.build_chain(curve.depth)?, &opts),
                Built::Lt(s) => render_lt(&generation(&s, curve.depth)?, &opts),
            };
            emit(out.as_ref(), &doc)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// `t,F,s` rows: source parameter, arc area, homogeneous parameter `F/β`.
fn profile_csv(profile: &AreaProfile, decimal: bool) -> String {
    let render = |v: &Rational| {
        if decimal {
            to_decimal(v, 12)
        } else {
            format_rational(v)
        }
    };
    let beta = profile.total();
    let mut out = String::from("t,F,s\n");
    for p in profile.points() {
        out.push_str(&format!(
            "{},{},{}\n",
            render(&p.t),
            render(&p.mass),
            render(&(&p.mass / beta))
        ));
    }
    out
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("FILLCURVE_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("FILLCURVE_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("fillcurve: {msg}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("fillcurve: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("fillcurve: {msg}");
            ExitCode::from(1)
        }
    }
}
