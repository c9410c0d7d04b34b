use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use helmdg::benchmarks::{lookup, BenchmarkParams};
use helmdg::mesh::write_ascii;
use helmdg::verify::{self, VerifyOptions};
use helmdg::{
    adapt, AdaptOptions, BenchmarkName, DegreeMap, Penalty, RefineMode, StopCriteria, Variant,
};

#[derive(Parser)]
#[command(
    name = "helmdg",
    version,
    about = "Adaptive hp-dG solver for the Helmholtz equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark with uniform or adaptive refinement.
    Run(RunArgs),
    /// Run the built-in self checks.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Refine {
    Uniform,
    Adaptive,
}

#[derive(Args)]
struct RunArgs {
    /// plane-wave, plane-wave-x, lshape-bessel or piecewise-k
    #[arg(long, value_parser = parse_name)]
    example: BenchmarkName,
    #[arg(long, default_value_t = 5.0)]
    k: f64,
    /// Wavenumber inside the disc (piecewise-k).
    #[arg(long, default_value_t = 10.0)]
    k1: f64,
    /// Wavenumber outside the disc (piecewise-k).
    #[arg(long, default_value_t = 1.0)]
    k2: f64,
    /// Boundary datum of piecewise-k: g1 or g2.
    #[arg(long, default_value = "g1", value_parser = parse_variant)]
    variant: Variant,
    #[arg(long, default_value_t = 1)]
    p: usize,
    #[arg(long, value_enum, default_value_t = Refine::Adaptive)]
    refine: Refine,
    #[arg(long, default_value_t = 0.7)]
    theta: f64,
    #[arg(long, default_value_t = 30.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    /// Cells per side of the initial structured mesh.
    #[arg(long, default_value_t = 1)]
    init_res: usize,
    #[arg(long, default_value_t = 10)]
    max_steps: usize,
    #[arg(long)]
    max_dofs: Option<usize>,
    #[arg(long)]
    target_eta: Option<f64>,
    /// Exactness degree for integrals of non-polynomial data.
    #[arg(long)]
    quad_order: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Write the mesh of every step.
    #[arg(long)]
    dump_meshes: bool,
    /// Write per-element estimators of every step.
    #[arg(long)]
    dump_elements: bool,
    /// Recorded in the log; runs are deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write 0 in the seconds column so repeated runs are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, hide = true)]
    corrupt_quadrature: bool,
}

fn parse_name(s: &str) -> Result<BenchmarkName, String> {
    s.parse()
        .map_err(|e: helmdg::benchmarks::BenchmarkError| e.to_string())
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse()
        .map_err(|e: helmdg::benchmarks::BenchmarkError| e.to_string())
}

fn run(args: RunArgs) -> Result<()> {
    if !(args.theta > 0.0 && args.theta <= 1.0) {
        bail!("--theta must lie in (0, 1], got {}", args.theta);
    }
    if args.p == 0 {
        bail!("--p must be at least 1");
    }
    if !(args.alpha > 0.0 && args.beta > 0.0 && args.delta > 0.0) {
        bail!("--alpha, --beta and --delta must be positive");
    }
    if args.init_res == 0 {
        bail!("--init-res must be at least 1");
    }
    log::debug!("seed {}", args.seed);

    let params = BenchmarkParams {
        k: args.k,
        k1: args.k1,
        k2: args.k2,
        variant: args.variant,
    };
    let mut bench = lookup(args.example, &params)?;
    bench.problem = bench
        .problem
        .with_penalty(Penalty {
            alpha: args.alpha,
            beta: args.beta,
            delta: args.delta,
        })
        .with_data_order(args.quad_order);
    let mesh = bench.initial_mesh(args.init_res)?;
    let degrees = DegreeMap::uniform(mesh.num_triangles(), args.p);

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let options = AdaptOptions {
        theta: args.theta,
        mode: match args.refine {
            Refine::Uniform => RefineMode::Uniform,
            Refine::Adaptive => RefineMode::Adaptive,
        },
        stop: StopCriteria {
            max_steps: args.max_steps,
            max_dofs: args.max_dofs,
            target_eta: args.target_eta,
        },
        exact: bench.exact.clone(),
        timing: !args.no_timing,
    };

    let out = args.out.clone();
    let mut last_margin = 0.0;
    let (history, _, _) = adapt(&bench.problem, mesh, degrees, &options, |view| {
        let step = view.record.step;
        last_margin = 0.5 - view.record.solvability;
        if args.dump_meshes {
            let mut w = BufWriter::new(File::create(out.join(format!("mesh_{step:03}.txt")))?);
            write_ascii(view.mesh, &mut w)?;
            w.flush()?;
        }
        if args.dump_elements {
            let w = BufWriter::new(File::create(out.join(format!("elements_{step:03}.csv")))?);
            view.report.write_csv(w).map_err(std::io::Error::other)?;
        }
        Ok(())
    })?;

    let path = args.out.join("history.csv");
    history
        .write_csv(BufWriter::new(File::create(&path)?))
        .with_context(|| format!("writing {}", path.display()))?;

    let last = history.last().expect("at least one step");
    println!("example      {}", args.example);
    println!("steps        {}", last.step);
    println!("elements     {}", last.nelems);
    println!("dofs         {}", last.ndofs);
    println!("eta_check    {:.6e}", last.eta_check);
    println!("eta          {:.6e}", last.eta);
    if let (Some(abs), Some(rel)) = (last.err_ht, last.err_rel) {
        println!("error        {abs:.6e} (relative {rel:.6e})");
    }
    println!("M_kh/p       {:.6}", last.mkhp);
    println!(
        "solvability  {:.6} ({})",
        last_margin,
        if last.solvable {
            "guaranteed"
        } else {
            "not guaranteed"
        }
    );
    println!("history      {}", path.display());
    Ok(())
}

fn verify_cmd(args: VerifyArgs) -> Result<bool> {
    let report = verify::run(&VerifyOptions {
        seed: args.seed,
        corrupt_quadrature: args.corrupt_quadrature,
    });
    for s in &report.suites {
        println!(
            "{} {:<22} {}",
            if s.passed { "PASS" } else { "FAIL" },
            s.name,
            s.detail
        );
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args).map(|_| true),
        Command::Verify(args) => verify_cmd(args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
