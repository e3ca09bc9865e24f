use std::fs;
use std::io::BufReader;
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use slicelab::agent::PolicyCheckpoint;
use slicelab::bench::{
    fit_encoder, report_from_dir, run_experiment, run_matrix, BenchError, ExperimentConfig, MatrixConfig, Mode,
};
use slicelab::kpm::{ingest_trace, train_autoencoder, EncoderParams};
use slicelab::ric::{run_wire_client, serve_wire, LoopConfig, PolicyXapp, XappDescriptor};
use slicelab::sim::BsState;

#[derive(Parser)]
#[command(name = "slicelab", version, about = "RAN slicing xApp testbed")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy and evaluate it.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a trained policy.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Policy file; defaults to the config's checkpoint or <out>/policy.json.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Train and evaluate every configuration of a matrix, then report.
    BenchMatrix {
        #[command(flatten)]
        common: Common,
    },
    /// Rebuild report tables from existing run directories.
    Report {
        #[command(flatten)]
        common: Common,
        /// Directory holding run directories.
        #[arg(long)]
        runs: PathBuf,
    },
    /// Host the cell and serve remote xApps over TCP.
    Serve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "127.0.0.1:7878")]
        listen: String,
        /// Subscriptions to wait for before the clock starts.
        #[arg(long, default_value_t = 1)]
        xapps: usize,
    },
    /// Fit the state encoder on simulated windows or a recorded trace.
    EncodeFit {
        #[command(flatten)]
        common: Common,
        /// KPM trace CSV to fit on instead of simulating.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run a trained policy as a remote xApp against `serve`.
    Xapp {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "127.0.0.1:7878")]
        connect: String,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value = "xapp")]
        id: String,
        /// Reporting period; defaults to the one the policy was trained at.
        #[arg(long)]
        period_ms: Option<u64>,
    },
}

fn base_of(path: &Path) -> PathBuf {
    path.parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .to_path_buf()
}

fn experiment(common: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    let path = common.config.as_ref().context("--config is required")?;
    let cfg = ExperimentConfig::load(path)?;
    Ok((cfg, base_of(path)))
}

fn out_dir(common: &Common, fallback: &str) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from("runs").join(fallback))
}

fn train_cmd(common: &Common) -> Result<()> {
    let (mut cfg, base) = experiment(common)?;
    cfg.mode = Mode::Train;
    if let Some(s) = common.seed {
        cfg.train.seed = s;
    }
    let dir = out_dir(common, &cfg.name);
    let run = run_experiment(&cfg, &dir, &base, None)?;
    if let Some(last) = run.curve.last() {
        eprintln!(
            "trained {} for {} iterations, final mean step reward {:.4}",
            cfg.name,
            run.curve.len(),
            last.mean_step_reward
        );
    }
    println!("{}", dir.display());
    Ok(())
}

fn evaluate_cmd(common: &Common, checkpoint: Option<PathBuf>) -> Result<()> {
    let (mut cfg, base) = experiment(common)?;
    cfg.mode = Mode::Evaluate;
    if let Some(s) = common.seed {
        cfg.seeds = vec![s];
    }
    let base = match checkpoint {
        Some(p) => {
            cfg.checkpoint = Some(fs::canonicalize(&p).with_context(|| format!("checkpoint {}", p.display()))?);
            base
        }
        None => base,
    };
    let dir = out_dir(common, &cfg.name);
    let run = run_experiment(&cfg, &dir, &base, None)?;
    eprintln!("evaluated {} over {} seed(s)", cfg.name, run.logs.len());
    println!("{}", dir.display());
    Ok(())
}

fn matrix_cmd(common: &Common) -> Result<()> {
    let path = common.config.as_ref().context("--config is required")?;
    let mut m = MatrixConfig::load(path)?;
    if let Some(s) = common.seed {
        m.train.seed = s;
    }
    let out = out_dir(common, &m.name);
    let outcome = run_matrix(&m, &out, &mut |msg| eprintln!("{msg}"))?;
    for s in &outcome.ranking.slices {
        if let Some(best) = s.entries.first() {
            eprintln!("best for {}: {} ({} = {})", s.slice, best.config, s.metric.column(), best.median);
        }
    }
    println!("{}", out.display());
    Ok(())
}

fn report_cmd(common: &Common, runs: &Path) -> Result<()> {
    let out = common.out.clone().unwrap_or_else(|| runs.join("report"));
    match report_from_dir(runs, &out) {
        Err(BenchError::NoLogs(_)) => bail!("no logs found in {}", runs.display()),
        Err(e) => Err(e.into()),
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            Ok(())
        }
    }
}

fn serve_cmd(common: &Common, listen: &str, xapps: usize) -> Result<()> {
    let (cfg, _) = experiment(common)?;
    let scenario = cfg.scenario.resolve()?;
    let seed = common.seed.unwrap_or(cfg.seeds[0]);
    let listener = TcpListener::bind(listen).with_context(|| format!("binding {listen}"))?;
    eprintln!("waiting for {xapps} xApp subscription(s) on {}", listener.local_addr()?);
    let (stream, peer) = listener.accept()?;
    eprintln!("connected: {peer}");
    let mut bs = BsState::new(&scenario, seed)?;
    let reader = BufReader::new(stream.try_clone()?);
    let (log, stats) = serve_wire(reader, &stream, &mut bs, xapps, &LoopConfig::new(cfg.duration_s * 1000))?;
    let dir = out_dir(common, &format!("{}-served", cfg.name));
    fs::create_dir_all(dir.join("logs"))?;
    log.save(
        &dir.join("logs").join(format!("seed-{seed}.csv")),
        &dir.join("logs").join(format!("actions-seed-{seed}.csv")),
    )?;
    for (id, n) in &stats.indications {
        eprintln!("{id}: {n} indications");
    }
    println!("{}", dir.display());
    Ok(())
}

fn encode_fit_cmd(common: &Common, trace: Option<PathBuf>) -> Result<()> {
    let (cfg, _) = experiment(common)?;
    let mut spec = cfg.encoder.clone();
    if let Some(s) = common.seed {
        spec.seed = s;
    }
    let encoder = match trace {
        Some(t) => {
            let windows = ingest_trace(&t)?;
            eprintln!("{} windows from {}", windows.len(), t.display());
            let fit = train_autoencoder(&windows, &spec.autoencoder_config())?;
            eprintln!("reconstruction MSE {:.6} -> {:.6}", fit.initial_mse, fit.final_mse);
            fit.encoder
        }
        None => fit_encoder(&cfg.scenario.resolve()?, &spec)?,
    };
    let dir = out_dir(common, "encoder");
    fs::create_dir_all(&dir)?;
    let path = dir.join("encoder.json");
    encoder.save(&path)?;
    println!("{}", path.display());
    Ok(())
}

fn xapp_cmd(connect: &str, checkpoint: &Path, id: &str, period_ms: Option<u64>) -> Result<()> {
    let ckpt = PolicyCheckpoint::load(checkpoint)?;
    let encoder = EncoderParams::load(&base_of(checkpoint).join(&ckpt.encoder))?;
    let descriptor = XappDescriptor {
        checkpoint: Some(checkpoint.to_path_buf()),
        ..XappDescriptor::new(id, ckpt.action_space.into(), period_ms.unwrap_or(ckpt.period_ms))
    };
    let mut xapp = PolicyXapp::new(descriptor, &ckpt, encoder)?;
    let stream = TcpStream::connect(connect).with_context(|| format!("connecting to {connect}"))?;
    let reader = BufReader::new(stream.try_clone()?);
    let stats = run_wire_client(reader, &stream, &mut xapp)?;
    eprintln!(
        "{} indications, {} accepted controls, {} rejected",
        stats.indications, stats.acks_ok, stats.acks_error
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { common } => train_cmd(&common),
        Command::Evaluate { common, checkpoint } => evaluate_cmd(&common, checkpoint),
        Command::BenchMatrix { common } => matrix_cmd(&common),
        Command::Report { common, runs } => report_cmd(&common, &runs),
        Command::Serve { common, listen, xapps } => serve_cmd(&common, &listen, xapps),
        Command::EncodeFit { common, trace } => encode_fit_cmd(&common, trace),
        Command::Xapp {
            common: _,
            connect,
            checkpoint,
            id,
            period_ms,
        } => xapp_cmd(&connect, &checkpoint, &id, period_ms),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
