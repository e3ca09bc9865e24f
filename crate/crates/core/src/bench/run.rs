use std::collections::BTreeMap;
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use super::config::{hierarchical_name, EncoderSpec, ExperimentConfig, HierarchicalSpec, MatrixConfig, Mode};
use super::report::emit_report;
use super::stats::{rank_policies, RankingReport};
use super::BenchError;
use crate::agent::{train, write_training_curve, ActionSpaceKind, CurvePoint, PolicyCheckpoint, PolicyParams, SlicingEnv};
use crate::kpm::{simulate_windows, train_autoencoder, EncoderParams};
use crate::metrics::MetricLog;
use crate::ric::{run_control_loop, HierarchicalSetup, LoopConfig, PolicyXapp, XappDescriptor, XappEndpoint};
use crate::sim::{BsState, Scenario};

/// Offset that keeps training episodes away from evaluation seeds.
const TRAIN_SEED_OFFSET: u64 = 1_000_003;

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> BenchError + '_ {
    move |e| BenchError::Io(path.display().to_string(), e.to_string())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), BenchError> {
    let text = serde_json::to_string_pretty(value).expect("configs serialize");
    fs::write(path, text + "\n").map_err(io_err(path))
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub name: String,
    pub dir: PathBuf,
    /// One log per evaluation seed, in seed order.
    pub logs: Vec<MetricLog>,
    /// Empty unless the run trained a policy.
    pub curve: Vec<CurvePoint>,
}

/// Fits the state encoder on windows simulated under random controls.
pub fn fit_encoder(scenario: &Scenario, spec: &EncoderSpec) -> Result<EncoderParams, BenchError> {
    let data = simulate_windows(scenario, spec.windows_per_slice, spec.sample_interval, spec.seed)?;
    Ok(train_autoencoder(&data, &spec.autoencoder_config())?.encoder)
}

fn obtain_encoder(spec: &EncoderSpec, scenario: &Scenario, base: &Path) -> Result<EncoderParams, BenchError> {
    match &spec.path {
        Some(p) => Ok(EncoderParams::load(&resolve(base, p))?),
        None => fit_encoder(scenario, spec),
    }
}

fn load_checkpoint(path: &Path) -> Result<(PolicyCheckpoint, EncoderParams), BenchError> {
    if !path.is_file() {
        return Err(BenchError::MissingCheckpoint(path.to_path_buf()));
    }
    let ckpt = PolicyCheckpoint::load(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let encoder = EncoderParams::load(&resolve(dir, Path::new(&ckpt.encoder)))?;
    Ok((ckpt, encoder))
}

fn save_log(dir: &Path, seed: u64, log: &MetricLog) -> Result<(), BenchError> {
    let logs = dir.join("logs");
    fs::create_dir_all(&logs).map_err(io_err(&logs))?;
    let kpm = logs.join(format!("seed-{seed}.csv"));
    let actions = logs.join(format!("actions-seed-{seed}.csv"));
    log.save(&kpm, &actions)
        .map_err(|e| BenchError::Io(kpm.display().to_string(), e.to_string()))
}

fn evaluate(
    cfg: &ExperimentConfig,
    dir: &Path,
    mut make_xapps: impl FnMut() -> Result<Vec<PolicyXapp>, BenchError>,
) -> Result<Vec<MetricLog>, BenchError> {
    let scenario = cfg.scenario.resolve()?;
    let loop_cfg = LoopConfig::new(cfg.duration_s * 1000);
    let mut logs = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let mut bs = BsState::new(&scenario, seed)?;
        let mut xapps = make_xapps()?;
        let mut endpoints: Vec<&mut dyn XappEndpoint> = xapps.iter_mut().map(|x| x as &mut dyn XappEndpoint).collect();
        let (log, _) = run_control_loop(&mut bs, &mut endpoints, &loop_cfg)?;
        save_log(dir, seed, &log)?;
        logs.push(log);
    }
    Ok(logs)
}

/// Trains (in train mode) and evaluates one configuration under `dir`.
///
/// Relative paths inside `cfg` are resolved against `base`. A provided
/// `encoder` takes precedence over the config's encoder settings.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    dir: &Path,
    base: &Path,
    encoder: Option<&EncoderParams>,
) -> Result<RunOutcome, BenchError> {
    cfg.validate()?;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_json(&dir.join("config.json"), &cfg.resolved()?)?;

    if let Some(h) = &cfg.hierarchical {
        let logs = evaluate_hierarchical(cfg, h, dir, base)?;
        return Ok(RunOutcome {
            name: cfg.name.clone(),
            dir: dir.to_path_buf(),
            logs,
            curve: Vec::new(),
        });
    }

    let (ckpt_path, curve) = match cfg.mode {
        Mode::Train => {
            let env_cfg = cfg.env_config()?;
            let enc = match encoder {
                Some(e) => e.clone(),
                None => obtain_encoder(&cfg.encoder, &env_cfg.scenario, base)?,
            };
            enc.save(&dir.join("encoder.json"))?;
            let mut env = SlicingEnv::new(env_cfg, enc, cfg.train.seed.wrapping_add(TRAIN_SEED_OFFSET))?;
            let params = PolicyParams::new(cfg.action_space, cfg.train.seed);
            let out = train(&mut env, params, &cfg.train.to_train_config(cfg.gamma))?;
            let ckpt = PolicyCheckpoint::new(out.params, cfg.gamma, cfg.weights.resolve()?, cfg.period_ms, "encoder.json");
            let path = dir.join("policy.json");
            ckpt.save(&path)?;
            write_training_curve(&dir.join("training_curve.csv"), &out.curve)?;
            (path, out.curve)
        }
        Mode::Evaluate => {
            let path = match &cfg.checkpoint {
                Some(p) => resolve(base, p),
                None => dir.join("policy.json"),
            };
            (path, Vec::new())
        }
    };

    let (ckpt, enc) = load_checkpoint(&ckpt_path)?;
    if ckpt.action_space != cfg.action_space {
        return Err(BenchError::InvalidConfig(format!(
            "checkpoint {} controls {}, the config asks for {}",
            ckpt_path.display(),
            ckpt.action_space,
            cfg.action_space
        )));
    }
    let descriptor = XappDescriptor {
        checkpoint: Some(ckpt_path.clone()),
        ..XappDescriptor::new(&cfg.name, cfg.action_space.into(), cfg.period_ms)
    };
    let logs = evaluate(cfg, dir, || Ok(vec![PolicyXapp::new(descriptor.clone(), &ckpt, enc.clone())?]))?;
    Ok(RunOutcome {
        name: cfg.name.clone(),
        dir: dir.to_path_buf(),
        logs,
        curve,
    })
}

fn evaluate_hierarchical(
    cfg: &ExperimentConfig,
    h: &HierarchicalSpec,
    dir: &Path,
    base: &Path,
) -> Result<Vec<MetricLog>, BenchError> {
    let setup = HierarchicalSetup::from_id(h.setup)?;
    let s_path = resolve(base, &h.slicing_checkpoint);
    let d_path = resolve(base, &h.scheduling_checkpoint);
    let (s_ckpt, s_enc) = load_checkpoint(&s_path)?;
    let (d_ckpt, d_enc) = load_checkpoint(&d_path)?;
    for (c, want, p) in [
        (&s_ckpt, ActionSpaceKind::SlicingOnly, &s_path),
        (&d_ckpt, ActionSpaceKind::SchedulingOnly, &d_path),
    ] {
        if c.action_space != want {
            return Err(BenchError::InvalidConfig(format!(
                "{} controls {}, expected {}",
                p.display(),
                c.action_space,
                want
            )));
        }
    }
    let s_desc = XappDescriptor {
        checkpoint: Some(s_path.clone()),
        ..setup.slicing_descriptor()
    };
    let d_desc = XappDescriptor {
        checkpoint: Some(d_path.clone()),
        ..setup.scheduling_descriptor()
    };
    evaluate(cfg, dir, || {
        Ok(vec![
            PolicyXapp::new(s_desc.clone(), &s_ckpt, s_enc.clone())?,
            PolicyXapp::new(d_desc.clone(), &d_ckpt, d_enc.clone())?,
        ])
    })
}

#[derive(Clone, Debug)]
pub struct MatrixOutcome {
    pub runs: BTreeMap<String, RunOutcome>,
    pub ranking: RankingReport,
    pub medians: BTreeMap<String, [f64; 3]>,
    pub report_files: Vec<PathBuf>,
}

impl MatrixOutcome {
    pub fn logs(&self) -> BTreeMap<String, Vec<MetricLog>> {
        self.runs.iter().map(|(k, v)| (k.clone(), v.logs.clone())).collect()
    }
}

/// Trains and evaluates every matrix entry, then the hierarchical
/// compositions, then writes the report under `<out>/report`.
pub fn run_matrix(m: &MatrixConfig, out: &Path, progress: &mut dyn FnMut(&str)) -> Result<MatrixOutcome, BenchError> {
    m.validate()?;
    fs::create_dir_all(out).map_err(io_err(out))?;
    write_json(&out.join("matrix.json"), m)?;
    let scenario = m.scenario.resolve()?;
    progress("fitting state encoder");
    let encoder = obtain_encoder(&m.encoder, &scenario, out)?;
    encoder.save(&out.join("encoder.json"))?;

    let mut runs = BTreeMap::new();
    let exps = m.experiments();
    for (i, e) in exps.iter().enumerate() {
        progress(&format!("[{}/{}] {}", i + 1, exps.len(), e.name));
        let dir = out.join(&e.name);
        let r = run_experiment(e, &dir, &dir, Some(&encoder))?;
        runs.insert(e.name.clone(), r);
    }
    for h in &m.hierarchical {
        let name = hierarchical_name(h.setup);
        progress(&format!("{name}: {} + {}", h.slicing, h.scheduling));
        let dir = out.join("hierarchical").join(format!("setup-{}", h.setup));
        let cfg = ExperimentConfig {
            name: name.clone(),
            scenario: m.scenario.clone(),
            action_space: ActionSpaceKind::SlicingOnly,
            gamma: exps[0].gamma,
            weights: exps[0].weights,
            hierarchical: Some(HierarchicalSpec {
                setup: h.setup,
                slicing_checkpoint: PathBuf::from("../..").join(&h.slicing).join("policy.json"),
                scheduling_checkpoint: PathBuf::from("../..").join(&h.scheduling).join("policy.json"),
            }),
            seeds: m.seeds.clone(),
            duration_s: m.duration_s,
            period_ms: m.period_ms,
            mode: Mode::Evaluate,
            train: m.train,
            encoder: m.encoder.clone(),
            checkpoint: None,
        };
        let r = run_experiment(&cfg, &dir, &dir, None)?;
        runs.insert(name, r);
    }

    let logs: BTreeMap<String, Vec<MetricLog>> = runs.iter().map(|(k, v)| (k.clone(), v.logs.clone())).collect();
    progress("writing report");
    let (ranking, medians) = rank_policies(&logs)?;
    let report_files = emit_report(&out.join("report"), &ranking, &medians, &logs, &m.design_options)?;
    Ok(MatrixOutcome {
        runs,
        ranking,
        medians,
        report_files,
    })
}

/// Every run directory (holding `config.json` and `logs/seed-*.csv`) at most
/// two levels below `root`, keyed by run name.
pub fn collect_run_logs(root: &Path) -> Result<BTreeMap<String, Vec<MetricLog>>, BenchError> {
    let mut found = BTreeMap::new();
    let mut stack = vec![(root.to_path_buf(), 0)];
    while let Some((dir, depth)) = stack.pop() {
        let logs_dir = dir.join("logs");
        let cfg_path = dir.join("config.json");
        if cfg_path.is_file() && logs_dir.is_dir() {
            let cfg = ExperimentConfig::load(&cfg_path)?;
            let mut files: Vec<PathBuf> = fs::read_dir(&logs_dir)
                .map_err(io_err(&logs_dir))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    p.file_name()
                        .and_then(|n| n.to_str())
                        .is_some_and(|n| n.starts_with("seed-") && n.ends_with(".csv"))
                })
                .collect();
            files.sort_by_key(|p| {
                p.file_stem()
                    .and_then(|s| s.to_str())
                    .and_then(|s| s.trim_start_matches("seed-").parse::<u64>().ok())
                    .unwrap_or(u64::MAX)
            });
            let mut logs = Vec::new();
            for f in files {
                let file = File::open(&f).map_err(io_err(&f))?;
                logs.push(MetricLog::read_csv(file).map_err(|e| BenchError::Io(f.display().to_string(), e))?);
            }
            if !logs.is_empty() {
                found.insert(cfg.name, logs);
            }
        }
        if depth < 2 {
            if let Ok(entries) = fs::read_dir(&dir) {
                for e in entries.flatten() {
                    if e.path().is_dir() && e.file_name() != "logs" {
                        stack.push((e.path(), depth + 1));
                    }
                }
            }
        }
    }
    Ok(found)
}

/// Rebuilds the report of the runs under `root` into `out`.
pub fn report_from_dir(root: &Path, out: &Path) -> Result<Vec<PathBuf>, BenchError> {
    let logs = collect_run_logs(root)?;
    if logs.is_empty() {
        return Err(BenchError::NoLogs(root.to_path_buf()));
    }
    let options = match MatrixConfig::load(&root.join("matrix.json")) {
        Ok(m) => m.design_options.into_iter().filter(|o| logs.contains_key(o)).collect(),
        Err(_) => Vec::new(),
    };
    let (ranking, medians) = rank_policies(&logs)?;
    emit_report(out, &ranking, &medians, &logs, &options)
}
