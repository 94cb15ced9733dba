mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use robust_t::gmix::{
    crossing_point, g_cdf, g_critical_value, generate_table, phi_g, phi_g_quantile, STANDARD_ALPHAS,
};
use robust_t::mcsim::{type_one_error, MixtureSpec, Model};
use robust_t::specfun::{student_t_cdf, student_t_quantile, DegreesOfFreedom};
use robust_t::symt::{phi_s_approx, s_bound, s_critical_value, s_tail_exact, N_MAX};
use robust_t::transform::{a_from_x, x_from_a};

use output::{Cell, Provenance, Record};

#[derive(Debug, Parser)]
#[command(
    name = "robust-t",
    version,
    about = "Robust critical values for Student's t test"
)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,

    /// Write to this file instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CdfModel {
    Classic,
    #[value(name = "G")]
    G,
    #[value(name = "S")]
    S,
    #[value(name = "phiG")]
    PhiG,
    #[value(name = "phiS")]
    PhiS,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FiniteModel {
    Classic,
    #[value(name = "G")]
    G,
    #[value(name = "S")]
    S,
}

impl From<FiniteModel> for Model {
    fn from(m: FiniteModel) -> Self {
        match m {
            FiniteModel::Classic => Model::Classic,
            FiniteModel::G => Model::G,
            FiniteModel::S => Model::S,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Worst-case distribution function and tail at a threshold.
    Cdf(CdfArgs),
    /// Threshold at which the worst-case distribution function reaches `p`.
    Quantile(QuantileArgs),
    /// Critical value at a one-sided level.
    Critical(CriticalArgs),
    /// Critical values on a grid of degrees of freedom and levels.
    Table(TableArgs),
    /// Crossing points of consecutive equal-scale tail curves.
    Crossings(CrossingsArgs),
    /// Monte Carlo type-I error of the two-sided test.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("threshold").required(true).args(["x", "a"])))]
struct CdfArgs {
    #[arg(long, value_enum)]
    model: CdfModel,
    /// Threshold on the t scale.
    #[arg(long, allow_negative_numbers = true)]
    x: Option<f64>,
    /// Threshold on the ratio scale.
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    /// Sample size.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Debug, Args)]
struct QuantileArgs {
    #[arg(long, value_enum)]
    model: CdfModel,
    #[arg(long)]
    p: f64,
    /// Sample size.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("size").required(true).args(["n", "dof"])))]
struct CriticalArgs {
    #[arg(long, value_enum, default_value = "G")]
    model: FiniteModel,
    /// Sample size.
    #[arg(long)]
    n: Option<usize>,
    /// Degrees of freedom, `n - 1`.
    #[arg(long)]
    dof: Option<usize>,
    /// One-sided level.
    #[arg(long)]
    alpha: f64,
}

#[derive(Debug, Args)]
struct TableArgs {
    #[arg(long, value_enum, default_value = "G")]
    model: FiniteModel,
    /// Degrees of freedom as a list of values and inclusive ranges.
    #[arg(long, default_value = "2-25,100,500,1000")]
    dofs: String,
    /// One-sided levels.
    #[arg(long, value_delimiter = ',', default_values_t = STANDARD_ALPHAS.to_vec())]
    alphas: Vec<f64>,
}

#[derive(Debug, Args)]
struct CrossingsArgs {
    /// Largest `k`; rows run over `2..=k-max`.
    #[arg(long, default_value_t = 10)]
    k_max: usize,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// One of `two-point:S,L,W`, `exponential:B`, `student:NU`, `constant:SIGMA`, `rademacher`.
    #[arg(long)]
    spec: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "G")]
    model: FiniteModel,
    #[arg(long, default_value_t = 100_000)]
    reps: u64,
    #[arg(long)]
    seed: u64,
}

enum CliError {
    Usage(String),
    Lib(robust_t::Error),
    Io(std::io::Error),
}

impl From<robust_t::Error> for CliError {
    fn from(e: robust_t::Error) -> Self {
        CliError::Lib(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn need_n(n: Option<usize>, model: &str) -> CliResult<usize> {
    n.ok_or_else(|| CliError::Usage(format!("--n is required for model {model}")))
}

fn dof_of(n: usize) -> CliResult<DegreesOfFreedom> {
    Ok(DegreesOfFreedom::for_sample_size(n)?)
}

/// Signed `x` and `a` for sample size `n`.
fn both_scales(x: Option<f64>, a: Option<f64>, n: usize) -> CliResult<(f64, f64)> {
    match (x, a) {
        (Some(x), _) => Ok((x, a_from_x(x.abs(), n)?.copysign(x))),
        (None, Some(a)) => {
            let x = if a * a >= n as f64 {
                f64::INFINITY
            } else {
                x_from_a(a.abs(), n)?
            };
            Ok((x.copysign(a), a))
        }
        (None, None) => Err(CliError::Usage("one of --x or --a is required".into())),
    }
}

fn cdf(args: CdfArgs) -> CliResult<Record> {
    let model_name = args
        .model
        .to_possible_value()
        .expect("named")
        .get_name()
        .to_owned();
    let mut rec = Record::new("cdf", &["model", "n", "x", "a", "cdf", "tail", "m"])
        .input("model", Cell::Text(model_name.clone()));
    if let Some(x) = args.x {
        rec = rec.input("x", Cell::Input(x));
    }
    if let Some(a) = args.a {
        rec = rec.input("a", Cell::Input(a));
    }
    if let Some(n) = args.n {
        rec = rec.input("n", Cell::Int(n as i64));
    }
    let model = Cell::Text(model_name.clone());
    let row = |n: Option<usize>, x: f64, a: f64, cdf: f64, m: Option<u64>| {
        vec![
            model.clone(),
            n.map_or(Cell::Missing, |n| Cell::Int(n as i64)),
            Cell::Num(x),
            Cell::Num(a),
            Cell::Num(cdf),
            Cell::Num(1.0 - cdf),
            m.map_or(Cell::Missing, |m| Cell::Int(m as i64)),
        ]
    };
    match args.model {
        CdfModel::Classic => {
            let n = need_n(args.n, &model_name)?;
            let (x, a) = both_scales(args.x, args.a, n)?;
            let c = student_t_cdf(x, dof_of(n)?).get();
            rec.push(row(Some(n), x, a, c, None), Provenance::Exact);
        }
        CdfModel::G => {
            let n = need_n(args.n, &model_name)?;
            let (x, a) = both_scales(args.x, args.a, n)?;
            let c = g_cdf(a, n)?.get();
            rec.push(row(Some(n), x, a, c, None), Provenance::Exact);
        }
        CdfModel::S => {
            let n = need_n(args.n, &model_name)?;
            let (x, a) = both_scales(args.x, args.a, n)?;
            if n <= N_MAX {
                let r = s_tail_exact(n, a.abs())?;
                let tail = r.tail().get();
                let c = if a >= 0.0 { 1.0 - tail } else { tail };
                rec.push(row(Some(n), x, a, c, Some(r.m)), Provenance::Exact);
            } else {
                if a <= 0.0 {
                    return Err(CliError::Usage(format!(
                        "the S bound for n > {N_MAX} needs a positive threshold"
                    )));
                }
                let lower = s_bound(n, a)?.lower.get();
                rec.push(row(Some(n), x, a, 1.0 - lower, None), Provenance::Bound);
            }
        }
        CdfModel::PhiG => {
            let x = args.x.or(args.a).expect("group requires one");
            rec.push(row(None, x, x, phi_g(x).get(), None), Provenance::Exact);
        }
        CdfModel::PhiS => {
            let x = args.x.or(args.a).expect("group requires one");
            let c = phi_s_approx(x)?.get();
            rec.push(row(None, x, x, c, None), Provenance::Bound);
        }
    }
    Ok(rec)
}

fn quantile(args: QuantileArgs) -> CliResult<Record> {
    let model_name = args
        .model
        .to_possible_value()
        .expect("named")
        .get_name()
        .to_owned();
    let mut rec = Record::new("quantile", &["model", "n", "p", "x", "a"])
        .input("model", Cell::Text(model_name.clone()))
        .input("p", Cell::Input(args.p));
    if let Some(n) = args.n {
        rec = rec.input("n", Cell::Int(n as i64));
    }
    let p = args.p;
    let (n, x, a, prov) = match args.model {
        CdfModel::Classic => {
            let n = need_n(args.n, &model_name)?;
            let x = student_t_quantile(p, dof_of(n)?)?;
            (
                Some(n),
                x,
                a_from_x(x.abs(), n)?.copysign(x),
                Provenance::Exact,
            )
        }
        CdfModel::G => {
            let n = need_n(args.n, &model_name)?;
            let x = g_critical_value(n, 1.0 - p)?;
            (Some(n), x, a_from_x(x, n)?, Provenance::Exact)
        }
        CdfModel::S => {
            let n = need_n(args.n, &model_name)?;
            let c = s_critical_value(n, 1.0 - p)?;
            let prov = if c.exact {
                Provenance::Exact
            } else {
                Provenance::Bound
            };
            (Some(n), c.x, c.a, prov)
        }
        CdfModel::PhiG => {
            let x = phi_g_quantile(p)?;
            (None, x, x, Provenance::Exact)
        }
        CdfModel::PhiS => {
            return Err(CliError::Usage(
                "phiS is only known through a bound; no quantile is offered".into(),
            ));
        }
    };
    rec.push(
        vec![
            Cell::Text(model_name),
            n.map_or(Cell::Missing, |n| Cell::Int(n as i64)),
            Cell::Input(p),
            Cell::Num(x),
            Cell::Num(a),
        ],
        prov,
    );
    Ok(rec)
}

fn critical_cell(model: FiniteModel, n: usize, alpha: f64) -> CliResult<(f64, f64, Provenance)> {
    match model {
        FiniteModel::S => {
            let c = s_critical_value(n, alpha)?;
            Ok((
                c.x,
                c.a,
                if c.exact {
                    Provenance::Exact
                } else {
                    Provenance::Bound
                },
            ))
        }
        _ => {
            let x = robust_t::mcsim::critical_value(model.into(), n, alpha)?;
            Ok((x, a_from_x(x, n)?, Provenance::Exact))
        }
    }
}

fn critical(args: CriticalArgs) -> CliResult<Record> {
    let n = match (args.n, args.dof) {
        (Some(n), _) => n,
        (None, Some(d)) => d + 1,
        (None, None) => return Err(CliError::Usage("one of --n or --dof is required".into())),
    };
    let model = Model::from(args.model);
    let mut rec = Record::new("critical", &["model", "n", "dof", "alpha", "x", "a"])
        .input("model", Cell::Text(model.to_string()))
        .input("n", Cell::Int(n as i64))
        .input("alpha", Cell::Input(args.alpha));
    let (x, a, prov) = critical_cell(args.model, n, args.alpha)?;
    rec.push(
        vec![
            Cell::Text(model.to_string()),
            Cell::Int(n as i64),
            Cell::Int(n as i64 - 1),
            Cell::Input(args.alpha),
            Cell::Num(x),
            Cell::Num(a),
        ],
        prov,
    );
    Ok(rec)
}

fn parse_dofs(text: &str) -> CliResult<Vec<u32>> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parse = |s: &str| {
            s.trim()
                .parse::<u32>()
                .map_err(|e| CliError::Usage(format!("bad degrees of freedom {s:?}: {e}")))
        };
        match item.split_once('-') {
            Some((lo, hi)) => out.extend(parse(lo)?..=parse(hi)?),
            None => out.push(parse(item)?),
        }
    }
    if out.contains(&0) {
        return Err(CliError::Usage(
            "degrees of freedom must be at least 1".into(),
        ));
    }
    Ok(out)
}

fn table(args: TableArgs) -> CliResult<Record> {
    let dofs = parse_dofs(&args.dofs)?;
    let model = Model::from(args.model);
    let labels: Vec<String> = args.alphas.iter().map(|a| a.to_string()).collect();
    let mut columns = vec!["dof"];
    columns.extend(labels.iter().map(String::as_str));
    let mut rec = Record::new("table", &columns)
        .input("model", Cell::Text(model.to_string()))
        .input("dofs", Cell::Text(args.dofs.clone()));
    for (label, &alpha) in labels.iter().zip(&args.alphas) {
        rec = rec.input(&format!("alpha_{label}"), Cell::Input(alpha));
    }
    match args.model {
        FiniteModel::G => {
            let t = generate_table(&dofs, &args.alphas)?;
            for r in t.rows {
                let mut row = vec![Cell::Int(i64::from(r.dof))];
                row.extend(r.values.into_iter().map(Cell::Num));
                rec.push(row, Provenance::Exact);
            }
        }
        other => {
            for &dof in &dofs {
                let n = dof as usize + 1;
                let mut row = vec![Cell::Int(i64::from(dof))];
                let mut prov = Provenance::Exact;
                for &alpha in &args.alphas {
                    match critical_cell(other, n, alpha) {
                        Ok((x, _, p)) => {
                            if p == Provenance::Bound {
                                prov = p;
                            }
                            row.push(Cell::Num(x));
                        }
                        Err(CliError::Lib(robust_t::Error::Infeasible { .. })) => {
                            row.push(Cell::Missing)
                        }
                        Err(e) => return Err(e),
                    }
                }
                rec.push(row, prov);
            }
        }
    }
    Ok(rec)
}

fn crossings(args: CrossingsArgs) -> CliResult<Record> {
    let mut rec = Record::new("crossings", &["k", "a_star", "a_star_squared"])
        .input("k_max", Cell::Int(args.k_max as i64));
    for k in 2..=args.k_max {
        let c = crossing_point(k)?;
        rec.push(
            vec![
                Cell::Int(k as i64),
                Cell::Num(c.a_star),
                Cell::Num(c.a_star_squared),
            ],
            Provenance::Exact,
        );
    }
    Ok(rec)
}

fn simulate(args: SimulateArgs) -> CliResult<Record> {
    let spec: MixtureSpec = args.spec.parse()?;
    let model = Model::from(args.model);
    let r = type_one_error(spec, args.n, args.alpha, model, args.reps, args.seed)?;
    let mut rec = Record::new(
        "simulate",
        &[
            "spec",
            "n",
            "alpha",
            "model",
            "critical_value",
            "reps",
            "rejections",
            "estimate",
            "std_error",
            "seed",
        ],
    )
    .input("spec", Cell::Text(spec.to_string()))
    .input("n", Cell::Int(args.n as i64))
    .input("alpha", Cell::Input(args.alpha))
    .input("model", Cell::Text(model.to_string()))
    .input("reps", Cell::Int(args.reps as i64))
    .input("seed", Cell::Text(args.seed.to_string()));
    rec.push(
        vec![
            Cell::Text(r.spec.to_string()),
            Cell::Int(r.n as i64),
            Cell::Input(r.alpha),
            Cell::Text(r.model.to_string()),
            Cell::Num(r.critical_value),
            Cell::Int(r.reps as i64),
            Cell::Int(r.rejections as i64),
            Cell::Num(r.estimate),
            Cell::Num(r.std_error),
            Cell::Text(r.seed.to_string()),
        ],
        Provenance::MonteCarlo,
    );
    Ok(rec)
}

fn run(cli: Cli) -> CliResult<()> {
    let rec = match cli.command {
        Command::Cdf(a) => cdf(a)?,
        Command::Quantile(a) => quantile(a)?,
        Command::Critical(a) => critical(a)?,
        Command::Table(a) => table(a)?,
        Command::Crossings(a) => crossings(a)?,
        Command::Simulate(a) => simulate(a)?,
    };
    let text = match cli.format {
        Format::Csv => rec.to_csv(),
        Format::Json => rec.to_json(),
    };
    match cli.output {
        Some(path) => fs::write(path, text).map_err(CliError::Io),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Lib(e @ robust_t::Error::Infeasible { .. })) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(CliError::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(CliError::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
