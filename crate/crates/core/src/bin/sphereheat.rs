use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dashu_ratio::RBig;

use sphereheat::gaussian_limit::gaussian_moment;
use sphereheat::heatop::Route;
use sphereheat::numeric::Precision;
use sphereheat::operators::SphereConfig;
use sphereheat::pde_appendix::{residual, spectral_evolve, spectral_evolve_extrapolated, Grid, ParabolicVariant};
use sphereheat::polyalg::{MultiIndex, Polynomial};
use sphereheat::sphere_mc::{mc_moments, mc_moments_coupled, McConfig};
use sphereheat::study::{
    compute_moment, parse_list, parse_monomials, run_study, ConfigFile, McSettings, StudyError, StudySpec,
};
use sphereheat::verify::{run_verify, Suite};

const USAGE: u8 = 2;
const FAILURE: u8 = 1;

#[derive(Parser)]
#[command(name = "sphereheat", version, about = "Heat-kernel moments on shifted spheres and their Gaussian limit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Finite-N moment of one monomial by one or more routes
    Moment(MomentArgs),
    /// Sweep monomials × N × t × routes and write CSV
    Study(StudyArgs),
    /// Run an invariant suite
    Verify {
        #[arg(default_value = "all")]
        suite: String,
    },
    /// Monte Carlo estimate of monomial moments
    Mc(McArgs),
    /// Check the one-dimensional parabolic equations of the limit kernel
    Pde(PdeArgs),
}

#[derive(Args)]
struct MomentArgs {
    #[arg(long = "N", default_value_t = 16)]
    n: u32,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Variables kept (defaults to the monomial's length)
    #[arg(long)]
    k: Option<usize>,
    /// Basis degree cap (defaults to the monomial's degree)
    #[arg(long)]
    degree: Option<usize>,
    /// Comma-separated exponents, e.g. 2,0
    #[arg(long)]
    monomial: String,
    #[arg(long, default_value = "matexp,series")]
    routes: String,
    #[arg(long, default_value = "double")]
    precision: String,
    #[arg(long, default_value_t = 100_000)]
    paths: usize,
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct StudyArgs {
    /// key=value file; flags given on the command line take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// List of N, e.g. 16,32,64
    #[arg(long = "N")]
    n: Option<String>,
    /// List of t
    #[arg(long)]
    t: Option<String>,
    /// Repeat for several monomials
    #[arg(long)]
    monomial: Vec<String>,
    #[arg(long)]
    routes: Option<String>,
    #[arg(long)]
    precision: Option<String>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct McArgs {
    #[arg(long = "N", default_value_t = 8)]
    n: u32,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long)]
    k: Option<usize>,
    /// Repeat for several monomials
    #[arg(long, required = true)]
    monomial: Vec<String>,
    #[arg(long, default_value_t = 100_000)]
    paths: usize,
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also run at step/2 on the same increments and report the bias estimate
    #[arg(long)]
    coupled: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    First,
    Other,
    Both,
}

#[derive(Args)]
struct PdeArgs {
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, value_enum, default_value = "both")]
    variant: VariantArg,
    /// Variance of the mollified initial delta
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    #[arg(long, default_value_t = 20.0)]
    half_width: f64,
    #[arg(long, default_value_t = 16384)]
    points: usize,
    /// Mesh for the finite-difference residual
    #[arg(long, default_value_t = 1e-3)]
    h: f64,
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(USAGE)
}

fn report(e: StudyError) -> ExitCode {
    if e.is_usage() {
        usage(e)
    } else {
        eprintln!("error: {e}");
        ExitCode::from(FAILURE)
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("SPHEREHEAT_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| format!("SPHEREHEAT_THREADS must be a positive integer, got '{v}'"))?;
    if n == 0 {
        return Err("SPHEREHEAT_THREADS must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        return usage(e);
    }
    match cli.command {
        Command::Moment(a) => moment(a),
        Command::Study(a) => study(a),
        Command::Verify { suite } => match suite.parse::<Suite>() {
            Ok(s) => {
                let rep = run_verify(s);
                println!("{rep}");
                if rep.passed() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(FAILURE)
                }
            }
            Err(e) => usage(e),
        },
        Command::Mc(a) => mc(a),
        Command::Pde(a) => pde(a),
    }
}

fn moment(a: MomentArgs) -> ExitCode {
    let run = || -> Result<(), StudyError> {
        let alpha: MultiIndex = a.monomial.parse()?;
        let precision: Precision = a.precision.parse().map_err(StudyError::Usage)?;
        let routes: Vec<Route> = parse_list(&a.routes)?;
        let k = a.k.unwrap_or(alpha.vars());
        if k < alpha.vars() {
            return Err(StudyError::Usage(format!(
                "--k {k} is smaller than the monomial's {} variables",
                alpha.vars()
            )));
        }
        let cfg = SphereConfig::new(a.n, a.t, k, a.degree.unwrap_or(alpha.degree()))
            .map_err(|e| StudyError::Usage(e.to_string()))?;
        let f = Polynomial::monomial(alpha.widen(k), RBig::ONE);
        let mc = McSettings { paths: a.paths, step: a.step, seed: a.seed };
        if a.t > 0.0 {
            println!("limit\t{:.16e}", gaussian_moment(&alpha, a.t)?);
        }
        let mut failed = None;
        for route in routes {
            match compute_moment(&cfg, &f, route, precision, &mc) {
                Ok(m) => println!("{}\t{:.16e}\t±{:.3e}", route, m.value, m.error_bound),
                Err(e) => {
                    println!("{route}\tfailed: {e}");
                    failed = Some(e);
                }
            }
        }
        failed.map_or(Ok(()), Err)
    };
    run().map_or_else(report, |_| ExitCode::SUCCESS)
}

fn study_spec(a: StudyArgs) -> Result<StudySpec, StudyError> {
    let file = match &a.config {
        Some(p) => std::fs::read_to_string(p)?.parse::<ConfigFile>()?,
        None => ConfigFile::default(),
    };
    const KEYS: [&str; 9] = ["N", "t", "monomial", "routes", "precision", "paths", "step", "seed", "out"];
    if let Some(bad) = file.keys().find(|k| !KEYS.contains(k)) {
        return Err(StudyError::Usage(format!("unknown config key '{bad}'")));
    }
    let pick = |flag: Option<String>, key: &str, default: &str| -> String {
        flag.or_else(|| file.last(key).map(str::to_string)).unwrap_or_else(|| default.to_string())
    };
    let monomials = if a.monomial.is_empty() {
        file.get("monomial")
            .unwrap_or_default()
            .iter()
            .map(|m| parse_monomials(m))
            .collect::<Result<Vec<_>, _>>()?
            .concat()
    } else {
        a.monomial.iter().map(|m| parse_monomials(m)).collect::<Result<Vec<_>, _>>()?.concat()
    };
    let defaults = McSettings::default();
    let num = |flag: Option<String>, key: &str, default: String| pick(flag, key, &default);
    Ok(StudySpec {
        monomials,
        n_values: parse_list(&pick(a.n, "N", "16,32,64,128,256"))?,
        t_values: parse_list(&pick(a.t, "t", "1"))?,
        routes: parse_list(&pick(a.routes, "routes", "matexp"))?,
        precision: pick(a.precision, "precision", "double").parse().map_err(StudyError::Usage)?,
        mc: McSettings {
            paths: parse_one(&num(a.paths.map(|v| v.to_string()), "paths", defaults.paths.to_string()))?,
            step: parse_one(&num(a.step.map(|v| v.to_string()), "step", defaults.step.to_string()))?,
            seed: parse_one(&num(a.seed.map(|v| v.to_string()), "seed", defaults.seed.to_string()))?,
        },
        out: a.out.or_else(|| file.last("out").map(PathBuf::from)),
    })
}

fn parse_one<T: std::str::FromStr>(s: &str) -> Result<T, StudyError>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e| StudyError::Usage(format!("cannot parse '{s}': {e}")))
}

fn study(a: StudyArgs) -> ExitCode {
    let run = || -> Result<(), StudyError> {
        let spec = study_spec(a)?;
        let out = run_study(&spec)?;
        let csv = out.to_csv()?;
        match &spec.out {
            Some(p) => std::fs::write(p, csv)?,
            None => print!("{csv}"),
        }
        eprint!("{}", out.summary());
        Ok(())
    };
    run().map_or_else(report, |_| ExitCode::SUCCESS)
}

fn mc(a: McArgs) -> ExitCode {
    let run = || -> Result<(), StudyError> {
        let alphas = a.monomial.iter().map(|m| parse_monomials(m)).collect::<Result<Vec<_>, _>>()?.concat();
        let k = a.k.unwrap_or_else(|| alphas.iter().map(|x| x.vars()).max().unwrap_or(1));
        let degree = alphas.iter().map(|x| x.degree()).max().unwrap_or(0);
        let cfg = SphereConfig::new(a.n, a.t, k, degree).map_err(|e| StudyError::Usage(e.to_string()))?;
        let mcfg = McConfig::new(cfg, a.step, a.paths, a.seed).map_err(|e| StudyError::Usage(e.to_string()))?;
        if a.coupled {
            for (alpha, e) in alphas.iter().zip(mc_moments_coupled(&mcfg, &alphas)?) {
                println!(
                    "({alpha})\th: {:.10} ± {:.3e}\th/2: {:.10} ± {:.3e}\tbias(h) ≈ {:.3e} ± {:.3e}",
                    e.coarse.mean,
                    e.coarse.stderr,
                    e.fine.mean,
                    e.fine.stderr,
                    2.0 * e.difference.mean,
                    2.0 * e.difference.stderr
                );
            }
        } else {
            for (alpha, e) in alphas.iter().zip(mc_moments(&mcfg, &alphas)?) {
                println!("({alpha})\t{:.10} ± {:.3e}\t({} paths, step {})", e.mean, e.stderr, e.paths, e.step);
            }
        }
        Ok(())
    };
    run().map_or_else(report, |_| ExitCode::SUCCESS)
}

fn pde(a: PdeArgs) -> ExitCode {
    let variants = match a.variant {
        VariantArg::First => vec![ParabolicVariant::FirstCoordinate],
        VariantArg::Other => vec![ParabolicVariant::OtherCoordinate],
        VariantArg::Both => vec![ParabolicVariant::FirstCoordinate, ParabolicVariant::OtherCoordinate],
    };
    let grid = match Grid::new(a.half_width, a.points) {
        Ok(g) => g,
        Err(e) => return usage(e),
    };
    for v in variants {
        let res = residual(v, a.t, 0.0, a.h).and_then(|r0| Ok((r0, residual(v, a.t, 0.0, 0.5 * a.h)?)));
        let evolved = spectral_evolve(v, a.eps, a.t, &grid);
        let extrapolated = spectral_evolve_extrapolated(v, a.eps, a.t, &grid);
        match (res, evolved, extrapolated) {
            (Ok((r1, r2)), Ok(u), Ok(x)) => {
                println!(
                    "{v:?}: residual(h) {r1:.3e}, ratio {:.3}; mass {:.12}; variance {:.8} (expected {:.8}); extrapolated max deviation {:.3e}",
                    r1 / r2,
                    u.mass(),
                    u.variance(),
                    a.eps * (-a.t).exp() + v.variance(a.t),
                    x.max_deviation(|y| v.closed_form(a.t, y))
                );
            }
            (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => return usage(e),
        }
    }
    ExitCode::SUCCESS
}
