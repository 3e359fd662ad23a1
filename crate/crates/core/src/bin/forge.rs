use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use peakforge::constants::{constants_table, write_constants_csv, ExpansionModel};
use peakforge::lab::{verify_lemma, Check, LemmaId, Verdict};
use peakforge::pipeline::{emit_report, positivity_check, run_pipeline, validate_eps, AssembledSolution, RunConfig};
use peakforge::reduced::{reduced_degree, solve_full_reduced, solve_reduced, GradientSource, ReducedSystem};

#[derive(Parser)]
#[command(name = "forge", about = "Two-peak solutions of the critical biharmonic equation")]
struct Cli {
    /// JSON run configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every sampled quantity (overrides the config seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for CSV and JSON files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated, strictly decreasing ε values.
    #[arg(long, global = true, value_delimiter = ',')]
    eps_list: Option<Vec<f64>>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structure and expansion constants with their cross-checks.
    Constants,
    /// Empirical check of appendix estimates (a1..a7, b1..b4, or all).
    Verify { ids: Vec<String> },
    /// Correction solve at the model root for every ε.
    Reduce,
    /// Model root of the reduced map and the full reduced solve for every ε.
    SolveReduced,
    /// Brouwer degree of the reduced map, model and full.
    Degree,
    /// The full construction over the ε sweep, with reports.
    Pipeline,
    /// Positivity of the constructed solution for every ε.
    Positivity,
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg = cfg.with_seed(s);
    }
    if let Some(e) = &cli.eps_list {
        validate_eps(e)?;
        cfg.eps = e.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_verdict(v: &Verdict) {
    println!("{} {}", if v.passed() { "PASS" } else { "FAIL" }, v.name);
    for c in &v.checks {
        println!("  [{}] {}: {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail);
    }
}

fn out_dir(cli: &Cli) -> Option<PathBuf> {
    cli.out.clone()
}

fn write_verdict(cli: &Cli, v: &Verdict) -> Result<()> {
    if let Some(dir) = out_dir(cli) {
        std::fs::create_dir_all(&dir)?;
        let path = dir.join(format!("verdict_{}.csv", v.name));
        v.write_csv(std::fs::File::create(&path).with_context(|| path.display().to_string())?)?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = load(cli)?;
    let dim = cfg.dim()?;
    let field = cfg.field();
    let spec = cfg.quadrature();
    let mut verdicts = Vec::new();
    match &cli.command {
        Command::Constants => {
            let rows = constants_table(&dim, &cfg.betas, &spec)?;
            println!("{:<14} {:>5} {:>24} {:>12}  method", "name", "beta", "value", "rel dev");
            for r in &rows {
                let b = r.beta.map(|b| b.to_string()).unwrap_or_default();
                println!("{:<14} {:>5} {:>24.15e} {:>12.3e}  {}", r.name, b, r.value, r.rel_dev, r.method);
            }
            let model = ExpansionModel::analytic(&dim, &field, &spec)?;
            println!("m_k = {:?}, d_k = {:?}, kappa = {:?}", model.mk, model.dk, model.kappa);
            if let Some(dir) = out_dir(cli) {
                std::fs::create_dir_all(&dir)?;
                write_constants_csv(&rows, std::fs::File::create(dir.join("constants.csv"))?)?;
            }
            return Ok(true);
        }
        Command::Verify { ids } => {
            let ids: Vec<LemmaId> = if ids.is_empty() || ids.iter().any(|s| s == "all") {
                LemmaId::ALL.to_vec()
            } else {
                ids.iter().map(|s| s.parse()).collect::<peakforge::Result<_>>()?
            };
            for id in ids {
                let v = verify_lemma(id, &dim, &cfg.lab, &spec)?;
                write_verdict(cli, &v)?;
                verdicts.push(v);
            }
        }
        Command::Reduce => {
            let model = ExpansionModel::analytic(&dim, &field, &spec)?;
            let source = cfg.source();
            let root = solve_reduced(model.mk, model.beta, &dim, &cfg.reduced_box.t_box()?)?;
            let mut v = Verdict::new("reduce");
            for &eps in &cfg.eps {
                let sys = ReducedSystem::new(&dim, &field, eps, &model)?;
                let x = [vec![0.0; dim.n()], vec![0.0; dim.n()]];
                let (_, sol) = sys.evaluate(root.t, &x, &source)?.solved.context("no correction")?;
                println!(
                    "eps {eps:e}: lambda {:?}, alpha {:?}, |v| {:e}, iterations {}, |omega| {:e}, |Q^-1||f| {:e}",
                    sys.lambdas(root.t),
                    sol.alpha,
                    sol.v_norm,
                    sol.iterations,
                    sol.omega_norm,
                    sol.q_inv_norm * sol.f_norm
                );
                v.check(Check::new(format!("converged by 20 iterations at eps={eps}"), sol.iterations <= 20, sol.iterations.to_string()));
                v.check(Check::new(
                    format!("omega bounded at eps={eps}"),
                    sol.omega_norm <= 1.2 * sol.q_inv_norm * sol.f_norm,
                    format!("{:e} vs 1.2 x {:e}", sol.omega_norm, sol.q_inv_norm * sol.f_norm),
                ));
            }
            verdicts.push(v);
        }
        Command::SolveReduced => {
            let model = ExpansionModel::analytic(&dim, &field, &spec)?;
            let root = solve_reduced(model.mk, model.beta, &dim, &cfg.reduced_box.t_box()?)?;
            println!("model root t = {:?}, residual {:e}, det Jac = {:e}", root.t, root.residual, root.jacobian.det);
            let mut v = Verdict::new("solve-reduced");
            for &eps in &cfg.eps {
                match solve_full_reduced(&dim, &field, eps, &model, &cfg.source(), &cfg.reduced_box) {
                    Ok(p) => {
                        println!("eps {eps:e}: t = {:?}, lambda = {:?}, |R_t| = {:?}, |R_x| = {:e}, {} steps", p.t, p.lambda, p.residual_t, p.residual_x, p.iterations);
                        v.check(Check::new(format!("converged at eps={eps}"), true, format!("{:?}", p.step_trace)));
                    }
                    Err(e) => v.check(Check::new(format!("converged at eps={eps}"), false, e.to_string())),
                }
            }
            verdicts.push(v);
        }
        Command::Degree => {
            let model = ExpansionModel::analytic(&dim, &field, &spec)?;
            let res = cfg.degree_resolution.unwrap_or(2);
            let mut v = Verdict::new("degree");
            for &eps in &cfg.eps {
                for source in [GradientSource::Model, cfg.source()] {
                    let p = solve_full_reduced(&dim, &field, eps, &model, &source, &cfg.reduced_box)?;
                    let grid = if source == GradientSource::Model { 16 } else { res };
                    let d = reduced_degree(&dim, &field, &p, &model, &source, &cfg.reduced_box, grid)?;
                    v.check(Check::new(
                        format!("{} degree -1 at eps={eps}", source.name()),
                        d.degree == -1,
                        format!("offset {} x scale {}", d.offset.degree, d.scale.degree),
                    ));
                }
            }
            verdicts.push(v);
        }
        Command::Pipeline => {
            let report = run_pipeline(&cfg)?;
            let dir = out_dir(cli).unwrap_or_else(|| cfg.outputs.dir.clone());
            let files = emit_report(&report, &dir)?;
            for p in &report.points {
                if let Some(f) = &p.failure {
                    println!("eps {:e}: {} failed: {}", p.eps, f.stage, f.error);
                }
            }
            verdicts.extend(report.all_verdicts().cloned());
            println!("wrote {} files to {} ({:.1} s)", files.len(), dir.display(), report.timing.total());
        }
        Command::Positivity => {
            let cfg = RunConfig { degree_resolution: None, verify: Vec::new(), ..cfg.clone() };
            let model = ExpansionModel::analytic(&dim, &field, &spec)?;
            let mut v = Verdict::new("positivity");
            for &eps in &cfg.eps {
                let p = solve_full_reduced(&dim, &field, eps, &model, &cfg.source(), &cfg.reduced_box)?;
                let sys = ReducedSystem::new(&dim, &field, eps, &model)?;
                let (space, sol) = sys.evaluate(p.t, &p.x, &cfg.source())?.solved.context("no correction")?;
                let r = positivity_check(&AssembledSolution::from_correction(&space, &sol)?, &cfg.positivity, cfg.seed)?;
                for c in r.verdict.checks {
                    v.check(Check { name: format!("{} at eps={eps}", c.name), ..c });
                }
                for w in &r.witnesses {
                    println!("  witness u({:?}) = {:e}", w.x, w.u);
                }
            }
            verdicts.push(v);
        }
    }
    for v in &verdicts {
        print_verdict(v);
    }
    Ok(verdicts.iter().all(Verdict::passed))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
