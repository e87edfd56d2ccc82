use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use cycle_experiments::sweep::{fit_report_column, run_sweep, SweepConfig};
use normal_cycles::body::{parse_body, AnyBody, ConvexBody};
use normal_cycles::cycle::{evaluate_normal_cycle, normal_bundle};
use normal_cycles::face_measures::exact_support_measure;
use normal_cycles::flat::{dbl_flow, dbl_lp, DblInstance, DEFAULT_LP_CAP};
use normal_cycles::forms::{catalog, centered_box_2d, centered_box_3d};
use normal_cycles::measure::DiscreteMeasure;
use normal_cycles::shell::{
    extract_support_measures, mc_local_parallel_measure, vandermonde_coefficients, ShellSampler,
};
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "cycle-experiments",
    version,
    about = "Support measures, bounded Lipschitz distances and normal cycles of convex bodies"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Inspect body files
    Bodies {
        #[command(subcommand)]
        cmd: BodiesCmd,
    },
    /// Compute support measures of a body
    Measures {
        #[command(subcommand)]
        cmd: MeasuresCmd,
    },
    /// Bounded Lipschitz distance between two measure files
    Dbl {
        a: PathBuf,
        b: PathBuf,
        /// cross-check against the dense LP oracle (small instances)
        #[arg(long)]
        oracle: bool,
    },
    /// Normal cycle evaluation
    Nc {
        #[command(subcommand)]
        cmd: NcCmd,
    },
    /// Hausdorff-distance sweeps
    Sweep {
        #[command(subcommand)]
        cmd: SweepCmd,
    },
}

#[derive(Subcommand)]
enum BodiesCmd {
    /// Parse a body file and print a summary
    Validate { file: PathBuf },
}

#[derive(Subcommand)]
enum MeasuresCmd {
    /// Exact face-decomposition route (polytopes only)
    Exact {
        body: PathBuf,
        /// support measure index
        #[arg(long)]
        index: usize,
        /// mesh cell size
        #[arg(long, default_value_t = 0.02)]
        mesh: f64,
        /// write the measure as JSON
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo + radius-expansion route
    Mc {
        body: PathBuf,
        #[arg(long)]
        index: usize,
        /// samples per shell radius
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// optional coarsening cell size for the output
        #[arg(long)]
        coarsen: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum NcCmd {
    /// Evaluate the normal cycle against a catalog form
    Eval {
        body: PathBuf,
        /// form name, e.g. perimeter2d, turning2d, area3d, gauss3d, poly:<seed>
        #[arg(long)]
        form: String,
        /// quadrature refinement level
        #[arg(long, default_value_t = 3)]
        level: usize,
    },
}

#[derive(Subcommand)]
enum SweepCmd {
    /// Run a sweep from a JSON config; exit code reflects the gates
    Run { config: PathBuf },
    /// Log-log fit of one report column against another
    Fit {
        report: PathBuf,
        #[arg(long, default_value = "d_h")]
        x: String,
        #[arg(long)]
        y: String,
    },
}

fn load_body(path: &PathBuf) -> Result<AnyBody> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading body file {}", path.display()))?;
    Ok(parse_body(&text)?)
}

fn load_measure(path: &PathBuf) -> Result<DiscreteMeasure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading measure file {}", path.display()))?;
    Ok(DiscreteMeasure::from_json(&text)?)
}

fn describe<const N: usize>(b: &ConvexBody<N>) -> String {
    match b {
        ConvexBody::Polytope(p) => format!("polytope with {} vertices", p.vertices().len()),
        ConvexBody::Ball { radius, .. } => format!("ball of radius {radius}"),
        ConvexBody::Parallel { inner, rho } => {
            format!("parallel body at distance {rho} around a {}", describe(inner))
        }
    }
}

fn validate_body(file: PathBuf) -> Result<()> {
    let any = load_body(&file)?;
    match &any {
        AnyBody::D2(b) => {
            println!("dimension 2: {}", describe(b));
            println!("circumradius {:.6}", b.circumradius());
            println!("smoothing radius {:.6}", b.smoothness());
            let patches = normal_bundle(b)?;
            println!("normal bundle: {} patches", patches.len());
        }
        AnyBody::D3(b) => {
            println!("dimension 3: {}", describe(b));
            println!("circumradius {:.6}", b.circumradius());
            println!("smoothing radius {:.6}", b.smoothness());
            let patches = normal_bundle(b)?;
            println!("normal bundle: {} patches", patches.len());
        }
    }
    println!("ok");
    Ok(())
}

fn write_measure(mu: &DiscreteMeasure, out: Option<PathBuf>) -> Result<()> {
    if let Some(path) = out {
        fs::write(&path, mu.to_json()?)
            .with_context(|| format!("writing measure {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn measures_exact(body: PathBuf, index: usize, mesh: f64, out: Option<PathBuf>) -> Result<()> {
    fn go<const N: usize>(
        b: &ConvexBody<N>,
        index: usize,
        mesh: f64,
        out: Option<PathBuf>,
    ) -> Result<()> {
        let p = match b.as_polytope() {
            Some(p) => p,
            None => bail!("the exact route needs a polytope body"),
        };
        let (mu, bound) = exact_support_measure(p, index, mesh)?;
        println!("Lambda_{index}: total mass {:.12}", mu.total_mass());
        println!("atoms {}   discretization bound {:.3e}", mu.atoms.len(), bound);
        write_measure(&mu, out)
    }
    match load_body(&body)? {
        AnyBody::D2(b) => go(&b, index, mesh, out),
        AnyBody::D3(b) => go(&b, index, mesh, out),
    }
}

fn measures_mc(
    body: PathBuf,
    index: usize,
    samples: usize,
    seed: u64,
    coarsen_h: Option<f64>,
    out: Option<PathBuf>,
) -> Result<()> {
    fn go<const N: usize>(
        b: &ConvexBody<N>,
        index: usize,
        samples: usize,
        seed: u64,
        coarsen_h: Option<f64>,
        out: Option<PathBuf>,
    ) -> Result<()> {
        let sys = vandermonde_coefficients(N)?;
        let mut mus = Vec::new();
        let mut stat = 0.0;
        for (j, &rho) in sys.radii.iter().enumerate() {
            let sampler = ShellSampler::new(b.clone(), rho, samples, seed ^ (j as u64 + 1))?;
            let (mu, err3) = mc_local_parallel_measure(&sampler)?;
            stat += sys.a[index][j].abs() * err3;
            mus.push((rho, mu));
        }
        let lam = extract_support_measures(&mus, &sys)?;
        let mut mu = lam.into_iter().nth(index).expect("index checked by the system");
        println!("Lambda_{index}: total mass {:.6} (3 sigma {:.3e})", mu.total_mass(), stat);
        if let Some(h) = coarsen_h {
            let (coarse, bound) = normal_cycles::flat::coarsen(&mu, h)?;
            println!(
                "coarsened to {} atoms, bound {:.3e}",
                coarse.atoms.len(),
                bound
            );
            mu = coarse;
        } else {
            println!("atoms {}", mu.atoms.len());
        }
        write_measure(&mu, out)
    }
    match load_body(&body)? {
        AnyBody::D2(b) => go(&b, index, samples, seed, coarsen_h, out),
        AnyBody::D3(b) => go(&b, index, samples, seed, coarsen_h, out),
    }
}

fn dbl_cmd(a: PathBuf, b: PathBuf, oracle: bool) -> Result<()> {
    let mu = load_measure(&a)?;
    let nu = load_measure(&b)?;
    let inst = DblInstance::difference(&mu, &nu)?;
    let cert = dbl_flow(&inst)?;
    println!("d_bL = {:.12}", cert.value);
    println!(
        "certificate: duality gap {:.3e}, witness residual {:.3e}",
        cert.duality_gap.unwrap_or(f64::NAN),
        cert.objective_residual
    );
    if !cert.is_valid(1e-7) {
        bail!("flow certificate failed verification");
    }
    if oracle {
        if inst.len() > DEFAULT_LP_CAP {
            bail!(
                "oracle cross-check limited to {DEFAULT_LP_CAP} support points, instance has {}",
                inst.len()
            );
        }
        let lp = dbl_lp(&inst)?;
        println!("lp oracle = {:.12}   |difference| = {:.3e}", lp.value, (lp.value - cert.value).abs());
        if (lp.value - cert.value).abs() > 1e-9 {
            bail!("flow and LP oracle disagree beyond 1e-9");
        }
    }
    Ok(())
}

fn nc_eval(body: PathBuf, form: String, level: usize) -> Result<()> {
    match load_body(&body)? {
        AnyBody::D2(b) => {
            let r = b.circumradius() + b.smoothness() + 2.0;
            let (lo, hi) = centered_box_2d(r);
            let phi = catalog(&form, &lo, &hi)?;
            let (value, err) = evaluate_normal_cycle(&b, &phi, level)?;
            println!("T({form}) = {value:.12}   err_est {err:.3e}");
        }
        AnyBody::D3(b) => {
            let r = b.circumradius() + b.smoothness() + 2.0;
            let (lo, hi) = centered_box_3d(r);
            let phi = catalog(&form, &lo, &hi)?;
            let (value, err) = evaluate_normal_cycle(&b, &phi, level)?;
            println!("T({form}) = {value:.12}   err_est {err:.3e}");
        }
    }
    Ok(())
}

fn sweep_run(config: PathBuf) -> Result<ExitCode> {
    let text = fs::read_to_string(&config)
        .with_context(|| format!("reading config {}", config.display()))?;
    let cfg: SweepConfig = serde_json::from_str(&text).context("parsing sweep config")?;
    let report = run_sweep(&cfg)?;
    println!("report: {}", cfg.output.display());
    println!("sidecar: {}", cfg.sidecar_path().display());
    for (key, fit) in &report.fits {
        let show = |f: &Option<cycle_experiments::LoglogFit>| match f {
            Some(f) => format!("{:.3} (max residual {:.2e})", f.slope, f.max_residual),
            None => "n/a".to_string(),
        };
        println!("fit {key}: slope {} | lower-range slope {}", show(&fit.full), show(&fit.lower));
    }
    let mut ok = true;
    for check in &report.invariants {
        let tag = if check.passed { "pass" } else { "FAIL" };
        println!("[{tag}] {}: {}", check.name, check.detail);
        ok &= check.passed;
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn sweep_fit(report: PathBuf, x: String, y: String) -> Result<()> {
    let fit = fit_report_column(&report, &x, &y)?;
    println!("log {y} = {:.6} * log {x} + {:.6}", fit.slope, fit.intercept);
    println!(
        "max residual {:.3e} over {} rows ({} excluded as nonpositive)",
        fit.max_residual, fit.used, fit.excluded
    );
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Bodies { cmd: BodiesCmd::Validate { file } } => validate_body(file)?,
        Cmd::Measures { cmd } => match cmd {
            MeasuresCmd::Exact { body, index, mesh, out } => measures_exact(body, index, mesh, out)?,
            MeasuresCmd::Mc { body, index, samples, seed, coarsen, out } => {
                measures_mc(body, index, samples, seed, coarsen, out)?
            }
        },
        Cmd::Dbl { a, b, oracle } => dbl_cmd(a, b, oracle)?,
        Cmd::Nc { cmd: NcCmd::Eval { body, form, level } } => nc_eval(body, form, level)?,
        Cmd::Sweep { cmd } => match cmd {
            SweepCmd::Run { config } => return sweep_run(config),
            SweepCmd::Fit { report, x, y } => sweep_fit(report, x, y)?,
        },
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
