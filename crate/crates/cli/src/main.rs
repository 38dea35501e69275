//! `rba`: growth-rate feasibility, maximal growth search, and optimal
//! allocation dynamics from the command line.
//!
//! Exit codes: 0 success or feasible, 3 infeasible, 2 numerical or limit
//! condition, 1 usage, file or parse error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use rba_core::assembly::{load_turnover, Problem};
use rba_core::golden;
use rba_core::growth::{feasibility_profile, mu_max, GrowthError, GrowthSearchOptions, GrowthStatus};
use rba_core::lp::{check_point, solve_with, LpError, SolveOptions, SolveStatus};
use rba_core::model::{compile, compile_eukaryote, expand_duplications, load_model};
use rba_core::ocp::{cost, integrate, ControlSignal, OcpError, OcpInstance};
use rba_core::pmp::{envelope_check, sweep, SweepOptions};
use rba_core::random::{random_model, RandomModelOptions};

#[derive(Parser, Debug)]
#[command(name = "rba", version, about = "Resource balance analysis and optimal allocation dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
enum Format {
    Text,
    Csv,
}

#[derive(clap::Args, Debug)]
struct ModelArgs {
    /// Model file, or the name of a bundled model (toy_prokaryote, toy_eukaryote).
    #[arg(long)]
    model: String,
    /// Turnover file to add degradation demands.
    #[arg(long)]
    turnover: Option<PathBuf>,
    /// Solve the compartmented problem; the model needs a `[eukaryote]` section.
    #[arg(long)]
    eukaryote: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide feasibility at one growth rate.
    Feasible {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        mu: f64,
        /// Relative feasibility tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Write the witness as `name,value` lines.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the assembled program as a tableau.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Bisect for the maximal feasible growth rate.
    Mumax {
        #[command(flatten)]
        model: ModelArgs,
        /// Bracket width.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Write a feasibility profile over [0, 1.5 mu_max] as CSV.
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long, default_value_t = 31)]
        profile_points: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Integrate the two-pool dynamics under a given allocation.
    Simulate {
        /// Instance file, or a bundled instance name (symmetric, asymmetric, ...).
        #[arg(long)]
        instance: String,
        /// `t,alpha` CSV; the last row gives the end time.
        #[arg(long, conflicts_with = "alpha")]
        control: Option<PathBuf>,
        /// Constant allocation over the instance grid.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// Trajectory CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Compute an optimal allocation by forward-backward sweep.
    Optimize {
        #[arg(long)]
        instance: String,
        #[arg(long)]
        grid_n: Option<usize>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Extremal CSV destination.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Emit a seeded random model document.
    GenRandomModel {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        eukaryote: bool,
        #[arg(long, default_value_t = 20)]
        max_dim: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Ordered key/value report.
struct Report(Vec<(&'static str, String)>);

impl Report {
    fn new() -> Self {
        Report(Vec::new())
    }

    fn add(&mut self, key: &'static str, value: impl ToString) -> &mut Self {
        self.0.push((key, value.to_string()));
        self
    }

    fn print(&self, format: Format) {
        let mut out = io::stdout().lock();
        for (k, v) in &self.0 {
            let _ = match format {
                Format::Text => writeln!(out, "{k} = {v}"),
                Format::Csv => writeln!(out, "{k},{v}"),
            };
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write_to(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut f = io::BufWriter::new(fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?);
            body(&mut f)?;
            f.flush()?;
        }
        None => body(&mut io::stdout().lock())?,
    }
    Ok(())
}

/// Files win over bundled names so a local file can shadow them.
fn model_source(name: &str) -> Result<String> {
    let path = Path::new(name);
    if path.exists() {
        return read(path);
    }
    golden::model_text(name)
        .map(str::to_string)
        .with_context(|| format!("no model file or bundled model named {name}"))
}

fn instance(name: &str) -> Result<OcpInstance> {
    let path = Path::new(name);
    let text = if path.exists() {
        read(path)?
    } else {
        golden::ocp_text(name)
            .with_context(|| format!("no instance file or bundled instance named {name}"))?
            .to_string()
    };
    Ok(OcpInstance::from_toml(&text)?)
}

fn problem(args: &ModelArgs) -> Result<Problem> {
    let spec = expand_duplications(&load_model(&model_source(&args.model)?)?);
    let model = compile(&spec)?;
    let mut problem = Problem::prokaryotic(model.clone());
    if let Some(path) = &args.turnover {
        let t = load_turnover(&read(path)?, &model)?;
        problem = problem.with_turnover(&t)?;
    }
    if args.eukaryote {
        let Some(ext) = compile_eukaryote(&spec, &model)? else {
            bail!("--eukaryote given but the model has no eukaryote section");
        };
        problem = problem.with_eukaryote(ext)?;
    }
    Ok(problem)
}

fn feasible(
    model: &ModelArgs,
    mu: f64,
    tol: f64,
    out: Option<&Path>,
    dump_lp: Option<&Path>,
    format: Format,
) -> Result<ExitCode> {
    if !(mu >= 0.0 && mu.is_finite()) {
        bail!("--mu must be a finite nonnegative number");
    }
    let lp = problem(model)?.build(mu);
    if let Some(path) = dump_lp {
        write_to(Some(path), |w| lp.write_tableau(w))?;
    }
    let opts = SolveOptions {
        feasibility_tol: tol,
        ..Default::default()
    };
    let r = solve_with(&lp, &opts)?;
    let mut report = Report::new();
    let status = match r.status {
        SolveStatus::Infeasible => "infeasible",
        _ => "feasible",
    };
    report.add("status", status).add("mu", mu).add("iterations", r.iterations);
    if let Some(w) = &r.witness {
        let check = check_point(&lp, w, tol)?;
        report
            .add("residual_eq", check.eq)
            .add("residual_ineq", check.ineq)
            .add("residual_bounds", check.bounds)
            .add("witness_nonzeros", w.iter().filter(|v| **v != 0.0).count())
            .add("witness_max", w.amax());
        if out.is_some() {
            write_to(out, |f| {
                writeln!(f, "name,value")?;
                for (name, v) in lp.variable_names.iter().zip(w.iter()) {
                    writeln!(f, "{name},{v:?}")?;
                }
                Ok(())
            })?;
        }
    }
    report.print(format);
    Ok(if r.witness.is_some() && r.status != SolveStatus::Infeasible {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    })
}

fn mumax(model: &ModelArgs, tol: f64, profile: Option<&Path>, points: usize, format: Format) -> Result<ExitCode> {
    let problem = problem(model)?;
    let opts = GrowthSearchOptions {
        tol,
        ..Default::default()
    };
    let r = mu_max(|mu| problem.build(mu), &opts)?;
    let mut report = Report::new();
    let status = match r.status {
        GrowthStatus::Bracketed => "bracketed",
        GrowthStatus::BasalCompositionInadmissible => "basal-composition-inadmissible",
    };
    report
        .add("status", status)
        .add("mu_max", format!("{:?}", r.mu_max))
        .add("bracket_lo", format!("{:?}", r.bracket.0))
        .add("bracket_hi", format!("{:?}", r.bracket.1))
        .add("iterations", r.iterations);
    if let Some(path) = profile {
        let top = if r.mu_max > 0.0 { 1.5 * r.mu_max } else { 1.0 };
        let n = points.max(2);
        let mus: Vec<f64> = (0..n).map(|k| top * k as f64 / (n - 1) as f64).collect();
        let prof = feasibility_profile(|mu| problem.build(mu), &mus, &opts.solve);
        fs::write(path, prof.to_csv()).with_context(|| format!("cannot write {}", path.display()))?;
        report.add("profile_monotone", prof.is_monotone());
    }
    report.print(format);
    Ok(ExitCode::SUCCESS)
}

fn simulate(
    name: &str,
    control: Option<&Path>,
    alpha: Option<f64>,
    dt: Option<f64>,
    out: Option<&Path>,
    format: Format,
) -> Result<ExitCode> {
    let inst = instance(name)?;
    let u = match (control, alpha) {
        (Some(path), _) => ControlSignal::from_csv(&read(path)?)?,
        (None, Some(a)) => ControlSignal::constant(inst.t_end, inst.grid_n, a)?,
        (None, None) => bail!("give either --control or --alpha"),
    };
    let t_end = u.t_end();
    let tr = integrate(inst.x0(), &u, &inst.params, t_end, dt.unwrap_or_else(|| inst.dt()))?;
    // Keep stdout for the trajectory when no file is given.
    if out.is_some() {
        let end = tr.terminal();
        let mut report = Report::new();
        report
            .add("status", "ok")
            .add("cost", format!("{:?}", cost(&tr)))
            .add("e_end", format!("{:?}", end.e))
            .add("m_end", format!("{:?}", end.m));
        report.print(format);
    }
    write_to(out, |w| tr.write_csv(w))?;
    Ok(ExitCode::SUCCESS)
}

fn optimize(name: &str, grid_n: Option<usize>, tol: f64, out: Option<&Path>, format: Format) -> Result<ExitCode> {
    let inst = instance(name)?;
    let opts = SweepOptions {
        grid_n: grid_n.unwrap_or(inst.grid_n),
        dt_max: inst.dt_max,
        tol,
        ..Default::default()
    };
    let r = sweep(inst.x0(), &inst.params, inst.t_end, &opts)?;
    let mut report = Report::new();
    report
        .add("status", "ok")
        .add("cost", format!("{:?}", r.cost))
        .add("converged", r.converged)
        .add("iterations", r.iterations)
        .add("singular_fraction", r.singular_fraction)
        .add("alpha_initial", r.control.values[0])
        .add("max_condition_violation", r.max_condition_violation())
        .add("hamiltonian_spread", r.hamiltonian_spread());
    match envelope_check(&r, &inst.params) {
        Ok(env) => {
            report
                .add("manifold_residual", env.manifold_residual)
                .add("alpha_avg", env.alpha_avg)
                .add("alpha_ss", env.alpha_ss);
        }
        Err(e) => {
            report.add("envelope", format!("unavailable ({e})"));
        }
    }
    if let Some(path) = out {
        write_to(Some(path), |w| r.write_csv(w))?;
    }
    report.print(format);
    Ok(ExitCode::SUCCESS)
}

fn gen_random_model(seed: u64, eukaryote: bool, max_dim: usize, out: Option<&Path>) -> Result<ExitCode> {
    if max_dim < 4 {
        bail!("--max-dim must be at least 4");
    }
    let spec = random_model(seed, &RandomModelOptions { max_dim, eukaryote });
    let text = spec.to_toml();
    write_to(out, |w| w.write_all(text.as_bytes()))?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Feasible {
            model,
            mu,
            tol,
            out,
            dump_lp,
            format,
        } => feasible(model, *mu, *tol, out.as_deref(), dump_lp.as_deref(), *format),
        Command::Mumax {
            model,
            tol,
            profile,
            profile_points,
            format,
        } => mumax(model, *tol, profile.as_deref(), *profile_points, *format),
        Command::Simulate {
            instance,
            control,
            alpha,
            dt,
            out,
            format,
        } => simulate(instance, control.as_deref(), *alpha, *dt, out.as_deref(), *format),
        Command::Optimize {
            instance,
            grid_n,
            tol,
            out,
            format,
        } => optimize(instance, *grid_n, *tol, out.as_deref(), *format),
        Command::GenRandomModel {
            seed,
            eukaryote,
            max_dim,
            out,
        } => gen_random_model(*seed, *eukaryote, *max_dim, out.as_deref()),
    }
}

/// Numerical trouble and search limits get 2; everything else is a usage,
/// file or parse problem.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    let numerical = err.chain().any(|cause| {
        matches!(
            cause.downcast_ref::<GrowthError>(),
            Some(GrowthError::CapReached { .. } | GrowthError::Lp(LpError::IterationLimit(_) | LpError::SingularBasis))
        ) || matches!(
            cause.downcast_ref::<LpError>(),
            Some(LpError::IterationLimit(_) | LpError::SingularBasis)
        ) || matches!(
            cause.downcast_ref::<OcpError>(),
            Some(OcpError::NegativeState { .. } | OcpError::Kink { .. })
        )
    });
    if numerical {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
