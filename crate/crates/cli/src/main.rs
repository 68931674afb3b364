use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use fsicost_core::cost::equivalent_time;
use fsicost_core::harness::replay::parse_published_table;
use fsicost_core::harness::sweep::write_sweep_csv;
use fsicost_core::harness::{
    emit_contour, fit_from_rows, read_factor_rows, read_sweep_csv, replay_published, run_sweep, Quantity, StudyConfig,
};
use fsicost_core::{run_simulation, RunRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Partitioned FSI coupling studies: single runs, cap sweeps, cost-model
/// replay, cost-factor fits and contour grids.
#[derive(Parser)]
#[command(name = "fsicost", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write per-step counters to `<out>/run.csv`.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every (nmax_f, nmax_s) cell of the config grids into `<out>/sweep.csv`.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the `workers` key of the config.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Recompute a published table from its iteration counts and a factor file.
    Replay {
        table: PathBuf,
        factors: PathBuf,
        /// Factor row to use; defaults to the `# study:` line of the table.
        #[arg(long)]
        study: Option<String>,
    },
    /// Fit cost factors to the timings of a sweep file.
    Fit {
        sweep: PathBuf,
        /// Multiply every timing by a uniform factor in [1-r, 1+r] first.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write the grid of one sweep quantity to `<out>/contour_<quantity>.csv`.
    Contour {
        sweep: PathBuf,
        /// One of N_c, N_f, N_s, teq_norm.
        quantity: Quantity,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Run { config, out } => run(&config, out.as_deref()),
        Command::Sweep { config, out, workers } => sweep(&config, &out, workers),
        Command::Replay { table, factors, study } => replay(&table, &factors, study.as_deref()),
        Command::Fit { sweep, noise, seed } => fit(&sweep, noise, seed),
        Command::Contour { sweep, quantity, out } => contour(&sweep, quantity, out.as_deref()),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn steps_csv(rec: &RunRecord) -> String {
    let mut s = String::from("step,converged,N_c,N_f,N_s,residual,fallback_events\n");
    for st in &rec.steps {
        let res = st.accepted_norms.map(|n| format!("{:?}", n.residual)).unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            st.step, st.converged, st.coupling_iters, st.flow_iters, st.solid_iters, res, st.fallback_events
        ));
    }
    s
}

fn run(config: &Path, out: Option<&Path>) -> Result<bool> {
    let cfg = StudyConfig::load(config)?;
    let mut problem = cfg.build_problem()?;
    let (rec, failure) = match run_simulation(&mut problem, &cfg.coupling) {
        Ok(r) => (r, None),
        Err(e) => match e.partial_record().cloned() {
            Some(r) => (r, Some(e.to_string())),
            None => return Err(e.into()),
        },
    };
    let (n_c, n_f, n_s) = rec.counters.totals();
    println!("model: {}  steps: {}/{}", cfg.model, rec.steps.len(), cfg.steps());
    println!("N_c = {n_c}  N_f = {n_f}  N_s = {n_s}");
    println!("teq = {:.4} s (factors from config)", equivalent_time((n_c, n_f, n_s), &cfg.factors));
    println!("T_f = {:.4} s  T_s = {:.4} s  T_c = {:.4} s", rec.timings.flow, rec.timings.solid, rec.timings.coupling);
    if let Some(dir) = out {
        create_dir(dir)?;
        let path = dir.join("run.csv");
        fs::write(&path, steps_csv(&rec)).with_context(|| format!("cannot write {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    match failure {
        None if rec.converged => {
            println!("converged");
            Ok(true)
        }
        other => {
            println!("not converged: {}", other.unwrap_or_else(|| "coupling failed".into()));
            Ok(false)
        }
    }
}

fn sweep(config: &Path, out: &Path, workers: Option<usize>) -> Result<bool> {
    let mut cfg = StudyConfig::load(config)?;
    if let Some(w) = workers {
        if w == 0 {
            bail!("--workers must be positive");
        }
        cfg.workers = w;
    }
    let rows = run_sweep(&cfg)?;
    create_dir(out)?;
    let path = out.join("sweep.csv");
    let file = fs::File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
    write_sweep_csv(&rows, file)?;
    let diverged = rows.iter().filter(|r| !r.converged).count();
    println!("{} cells, {} diverged, wrote {}", rows.len(), diverged, path.display());
    Ok(true)
}

fn replay(table: &Path, factors: &Path, study: Option<&str>) -> Result<bool> {
    let text = fs::read_to_string(table).with_context(|| format!("cannot read {}", table.display()))?;
    let table_data = parse_published_table(&text, &table.display().to_string())?;
    let rows = read_factor_rows(factors)?;
    let name = match study.map(str::to_string).or_else(|| table_data.study.clone()) {
        Some(n) => n,
        None => bail!("table has no `# study:` line; pass --study"),
    };
    let Some(row) = rows.iter().find(|r| r.study == name) else {
        bail!("no factor row named `{name}` in {}", factors.display());
    };
    let report = replay_published(&table_data, &row.factors)?;
    println!("{report}");
    Ok(report.pass)
}

fn fit(sweep: &Path, noise: f64, seed: u64) -> Result<bool> {
    if !(0.0..1.0).contains(&noise) {
        bail!("--noise must lie in [0, 1)");
    }
    let mut table = read_sweep_csv(sweep)?;
    if noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for r in &mut table.rows {
            for t in [&mut r.t_f, &mut r.t_s, &mut r.t_c] {
                *t *= 1.0 + rng.random_range(-noise..=noise);
            }
        }
    }
    let report = fit_from_rows(&table.rows)?;
    println!("{report}");
    Ok(true)
}

fn contour(sweep: &Path, quantity: Quantity, out: Option<&Path>) -> Result<bool> {
    let table = read_sweep_csv(sweep)?;
    let grid = emit_contour(&table, quantity)?;
    match out {
        Some(dir) => {
            create_dir(dir)?;
            let path = dir.join(format!("contour_{quantity}.csv"));
            fs::write(&path, grid).with_context(|| format!("cannot write {}", path.display()))?;
            println!("wrote {}", path.display());
        }
        None => print!("{grid}"),
    }
    Ok(true)
}
