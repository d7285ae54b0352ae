//! `stratlab`: transversality, condition (a), witnesses and openness probes
//! from JSON inputs.

mod output;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use stratlab::exact::{self, ExactVerdict};
use stratlab::gallery::{self, GalleryOptions};
use stratlab::io::{self, ConditionADoc, FaultDoc, ProbeDoc};
use stratlab::neighborhoods::probe_openness;
use stratlab::regularity::check_condition_a;
use stratlab::scalar::real_coords;
use stratlab::transversality::{is_transverse_at, transverse_on_compact, TransversalityVerdict};
use stratlab::witness::{complex_witness, real_witness, AnyFault, WitnessOptions};
use stratlab::{BoxRegion, Error, Field, GridSpec, Scalar, Tolerances};

use output::{render, Format};

#[derive(Debug, Parser)]
#[command(name = "stratlab", version, about = "Transversality to stratified sets in coordinates")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Relative singular-value threshold for rank decisions.
    #[arg(long, global = true)]
    tol_rank: Option<f64>,
    /// Containment residual threshold for condition (a).
    #[arg(long, global = true)]
    tol_a: Option<f64>,
    /// Grid points per axis on compact boxes.
    #[arg(long, global = true, default_value_t = 401)]
    grid: usize,
    /// Seed for random perturbations (overrides a seed in the input).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    out: Format,
    /// Field of the input data; inferred from the inputs when omitted.
    #[arg(long, global = true, value_enum)]
    field: Option<FieldArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FieldArg {
    Real,
    Complex,
}

impl From<FieldArg> for Field {
    fn from(f: FieldArg) -> Self {
        match f {
            FieldArg::Real => Field::Real,
            FieldArg::Complex => Field::Complex,
        }
    }
}

#[derive(Debug, Args)]
struct PointInput {
    /// Polynomial map JSON.
    #[arg(long)]
    map: PathBuf,
    /// Stratum or stratification JSON.
    #[arg(long)]
    stratum: PathBuf,
    /// Source point in real coordinates, e.g. `0.5` or `1,0`.
    #[arg(long, allow_hyphen_values = true)]
    point: String,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Verdict and margin of a map at a point against each stratum.
    Check(PointInput),
    /// Grid report of transversality on a compact box.
    CheckCompact {
        /// Polynomial map JSON.
        #[arg(long)]
        map: PathBuf,
        /// Stratum or stratification JSON.
        #[arg(long)]
        stratum: PathBuf,
        /// Box as JSON text `{"lo": [...], "hi": [...]}` or a file.
        #[arg(long)]
        k: String,
    },
    /// Condition (a) along a curve or point sequence.
    ConditionA {
        /// Pair, frontier point and curve or point sequence as JSON.
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Witness family built from an (a)-fault.
    Witness {
        /// Fault JSON: pair, frontier point, approach and source dimension.
        #[arg(long = "in")]
        input: PathBuf,
        /// Radius of the source chart box (global chart when omitted).
        #[arg(long)]
        chart_radius: Option<f64>,
    },
    /// Openness probe of a weak neighbourhood.
    Probe {
        /// Neighbourhood spec JSON: map, stratification, K, epsilon.
        #[arg(long)]
        spec: PathBuf,
        /// Number of random members (overrides the spec).
        #[arg(long)]
        count: Option<usize>,
    },
    /// Runs built-in fixtures; exit 1 when an expectation is missed.
    Gallery {
        /// Run one fixture by name.
        #[arg(long, conflicts_with = "all")]
        name: Option<String>,
        /// Run every fixture.
        #[arg(long)]
        all: bool,
        /// List fixture names and exit.
        #[arg(long)]
        list: bool,
    },
    /// Reruns `check` in exact rational arithmetic and compares.
    Oracle(PointInput),
}

/// Failure carrying its exit code.
struct Exit(u8, String);

impl From<Error> for Exit {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::Malformed(_)) { 2 } else { 1 };
        Exit(code, e.to_string())
    }
}

impl From<anyhow::Error> for Exit {
    fn from(e: anyhow::Error) -> Self {
        Exit(1, e.to_string())
    }
}

type Run = Result<String, Exit>;

impl Global {
    fn tolerances(&self) -> Tolerances {
        let mut t = Tolerances::default();
        if let Some(r) = self.tol_rank {
            t.rank = r;
        }
        if let Some(a) = self.tol_a {
            t.a = a;
        }
        t
    }

    fn grid(&self) -> GridSpec {
        GridSpec::new(self.grid)
    }

    /// Field from the flag, checked against the field found in `path`.
    fn field_for(&self, path: &Path) -> Result<Field, Exit> {
        let found = io::file_field(path)?;
        match self.field.map(Field::from) {
            Some(f) if f != found => Err(Exit(
                1,
                format!("--field {f} given, but {} holds {found} data", path.display()),
            )),
            _ => Ok(found),
        }
    }
}

#[derive(Serialize)]
struct CheckReport {
    field: Field,
    chart: &'static str,
    map: String,
    point: Vec<f64>,
    transverse: bool,
    verdicts: Vec<TransversalityVerdict>,
}

fn check<T: Scalar>(g: &Global, inp: &PointInput) -> Result<CheckReport, Exit> {
    let tol = g.tolerances();
    let f = io::load_map::<T>(&inp.map)?;
    let sigma = io::load_stratification::<T>(&inp.stratum)?;
    let coords = io::parse_point(&inp.point)?;
    let x = io::point::<T>(&coords, stratlab::DifferentiableMap::source_dim(&f))?;
    let verdicts = sigma
        .strata
        .iter()
        .map(|s| is_transverse_at(&f, &x, s, &tol))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CheckReport {
        field: T::FIELD,
        chart: "identity",
        map: stratlab::DifferentiableMap::describe(&f),
        point: real_coords(&x),
        transverse: verdicts.iter().all(|v| v.transverse),
        verdicts,
    })
}

#[derive(Serialize)]
struct OracleRow {
    stratum: String,
    float: TransversalityVerdict,
    exact: Option<ExactVerdict>,
    conclusive: bool,
    agree: Option<bool>,
}

#[derive(Serialize)]
struct OracleReport {
    field: Field,
    point: Vec<f64>,
    rows: Vec<OracleRow>,
    /// Every conclusive floating verdict with an exact counterpart matches it.
    agree: bool,
}

fn oracle<T: Scalar>(g: &Global, inp: &PointInput) -> Result<OracleReport, Exit> {
    let tol = g.tolerances();
    let f = io::load_map::<T>(&inp.map)?;
    let sigma = io::load_stratification::<T>(&inp.stratum)?;
    let coords = io::parse_point(&inp.point)?;
    let x = io::point::<T>(&coords, stratlab::DifferentiableMap::source_dim(&f))?;
    let xe: Vec<T::Exact> = x.iter().map(|c| c.to_exact()).collect();
    let mut rows = Vec::new();
    for s in &sigma.strata {
        let float = is_transverse_at(&f, &x, s, &tol)?;
        let ex = exact::transverse_at(&f, &xe, s);
        let conclusive = float.conclusive();
        let agree = ex.as_ref().map(|e| e.transverse == float.transverse);
        rows.push(OracleRow {
            stratum: s.name.clone(),
            float,
            exact: ex,
            conclusive,
            agree,
        });
    }
    let agree = rows.iter().all(|r| !r.conclusive || r.agree != Some(false));
    Ok(OracleReport {
        field: T::FIELD,
        point: real_coords(&x),
        rows,
        agree,
    })
}

fn parse_box(text: &str) -> Result<BoxRegion, Exit> {
    let p = Path::new(text);
    if p.is_file() {
        Ok(io::read_json(p)?)
    } else {
        Ok(io::parse(text, "--k")?)
    }
}

fn check_compact<T: Scalar>(g: &Global, map: &Path, stratum: &Path, k: &str) -> Run {
    let f = io::load_map::<T>(map)?;
    let sigma = io::load_stratification::<T>(stratum)?;
    let k = parse_box(k)?;
    let rep = transverse_on_compact(&f, &k, &sigma, g.grid(), &g.tolerances())?;
    Ok(render(&rep, g.out, Some("records"))?)
}

fn condition_a<T: Scalar>(g: &Global, doc: &ConditionADoc, base: &Path) -> Run {
    let tol = g.tolerances();
    let inp = doc.build::<T>(base, &tol)?;
    let x_stratum = inp.sigma.stratum(&inp.x_stratum).expect("checked by build");
    let rep = check_condition_a(x_stratum, &inp.x, &inp.seq, &tol)?;
    Ok(render(&rep, g.out, Some("steps"))?)
}

fn run(cli: &Cli) -> Run {
    let g = &cli.global;
    match &cli.command {
        Command::Check(inp) => match g.field_for(&inp.map)? {
            Field::Real => Ok(render(&check::<f64>(g, inp)?, g.out, Some("verdicts"))?),
            Field::Complex => Ok(render(&check::<Complex64>(g, inp)?, g.out, Some("verdicts"))?),
        },
        Command::Oracle(inp) => {
            let rep = match g.field_for(&inp.map)? {
                Field::Real => serde_json::to_value(oracle::<f64>(g, inp)?),
                Field::Complex => serde_json::to_value(oracle::<Complex64>(g, inp)?),
            }
            .map_err(anyhow::Error::from)?;
            let text = render(&rep, g.out, Some("rows"))?;
            if rep["agree"] == serde_json::Value::Bool(true) {
                Ok(text)
            } else {
                print!("{text}");
                Err(Exit(1, "floating and exact verdicts disagree".into()))
            }
        }
        Command::CheckCompact { map, stratum, k } => match g.field_for(map)? {
            Field::Real => check_compact::<f64>(g, map, stratum, k),
            Field::Complex => check_compact::<Complex64>(g, map, stratum, k),
        },
        Command::ConditionA { input } => {
            let doc = ConditionADoc::load(input)?;
            let base = io::base_dir(input);
            let field = doc.field(&base)?;
            if let Some(f) = g.field {
                if Field::from(f) != field {
                    return Err(Exit(1, format!("--field {} given, input is {field}", Field::from(f))));
                }
            }
            match field {
                Field::Real => condition_a::<f64>(g, &doc, &base),
                Field::Complex => condition_a::<Complex64>(g, &doc, &base),
            }
        }
        Command::Witness { input, chart_radius } => {
            let tol = g.tolerances();
            let doc = FaultDoc::load(input)?;
            let fault = doc.build(&io::base_dir(input), &tol)?;
            if let Some(f) = g.field {
                if Field::from(f) != fault.field() {
                    return Err(Exit(1, format!("--field {} given, fault is {}", Field::from(f), fault.field())));
                }
            }
            let opts = WitnessOptions {
                chart_radius: chart_radius.or(doc.chart_radius),
                grid: g.grid(),
            };
            match &fault {
                AnyFault::Real(f) => Ok(render(&real_witness(f, &opts, &tol)?.report, g.out, Some("members"))?),
                AnyFault::Complex(f, src) => {
                    Ok(render(&complex_witness(f, src, &opts, &tol)?.report, g.out, Some("members"))?)
                }
            }
        }
        Command::Probe { spec, count } => {
            if g.field == Some(FieldArg::Complex) {
                return Err(Exit(1, "neighbourhood probes take real maps".into()));
            }
            let doc = ProbeDoc::load(spec)?;
            let inp = doc.build(&io::base_dir(spec))?;
            let seed = g.seed.or(inp.seed).unwrap_or(0);
            let rep = probe_openness(
                &inp.spec,
                &inp.sigma,
                count.unwrap_or(inp.count),
                seed,
                g.grid(),
                inp.directed.as_ref(),
                &g.tolerances(),
            )?;
            Ok(render(&rep, g.out, None)?)
        }
        Command::Gallery { name, all: _, list } => {
            if *list {
                return Ok(gallery::fixtures()
                    .iter()
                    .map(|f| format!("{}\t{}\n", f.name, f.summary))
                    .collect());
            }
            let opts = GalleryOptions {
                tol: g.tolerances(),
                grid: g.grid(),
                seed: g.seed.unwrap_or(0),
            };
            let reports = match name {
                Some(n) => {
                    let fx = gallery::find(n).ok_or_else(|| {
                        let names: Vec<&str> = gallery::fixtures().iter().map(|f| f.name).collect();
                        Exit(1, format!("no fixture `{n}`; available: {}", names.join(", ")))
                    })?;
                    vec![fx.run(&opts)]
                }
                None => gallery::run_all(&opts),
            };
            let text = match g.out {
                Format::Json => render(&reports, g.out, None)?,
                Format::Csv => {
                    let rows: Vec<serde_json::Value> = reports
                        .iter()
                        .flat_map(|r| {
                            r.expectations.iter().map(move |e| {
                                serde_json::json!({
                                    "fixture": r.name, "check": e.check,
                                    "expected": e.expected, "observed": e.observed, "pass": e.pass
                                })
                            })
                        })
                        .collect();
                    output::csv_table(&rows)?
                }
            };
            let misses: Vec<String> = reports
                .iter()
                .flat_map(|r| {
                    r.misses()
                        .map(move |e| format!("- {} / {}\n    expected: {}\n    observed: {}", r.name, e.check, e.expected, e.observed))
                })
                .collect();
            if misses.is_empty() {
                Ok(text)
            } else {
                print!("{text}");
                Err(Exit(1, format!("expectation misses:\n{}", misses.join("\n"))))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => {
            let _ = std::io::stdout().write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(Exit(code, msg)) => {
            eprintln!("stratlab: {msg}");
            ExitCode::from(code)
        }
    }
}
