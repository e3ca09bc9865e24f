//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufReader;
use std::os::unix::net::UnixStream;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::thread;
use std::time::{Duration, Instant};

use ndarray::Array2;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use slicelab::agent::{
    actor_forward, compute_weights, discounted_return, gae, gradient_error, ActionSpaceKind, Batch, PolicyCheckpoint,
    PolicyParams, PpoConfig, RewardWeights, Step, Trajectory, STATE_DIM,
};
use slicelab::bench::{
    collect_run_logs, median, run_experiment, static_partition_medians, EncoderSpec, ExperimentConfig, Mode,
    RandomXapp, ScenarioRef, TrainSpec, WeightSpec,
};
use slicelab::kpm::{Autoencoder, EncoderParams, INPUT_WIDTH};
use slicelab::metrics::{Metric, MetricLog};
use slicelab::ric::{
    run_control_loop, run_wire_client, serve_wire, AckMsg, ControlMsg, ControlledParameter, HierarchicalSetup,
    IndicationMsg, LoopConfig, MetricName, PolicyXapp, RicError, Runtime, SubscribeMsg, WireMessage,
    XappDescriptor, XappEndpoint,
};
use slicelab::sim::{
    BsState, PrbPartition, Scenario, SchedulerAssignment, SliceKind, TrafficProfile, TOTAL_PRBS,
};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn c1_weight_arithmetic() -> Check {
    let w = compute_weights(1000.0, 456.0, 1.0, 13.88, 304.0, 20186.0).map_err(|e| e.to_string())?;
    ensure(w.mmtc == 1.5, format!("456/304 gave {}", w.mmtc))?;
    ensure((4.95e-5..=4.96e-5).contains(&w.urllc), format!("1/20186 gave {}", w.urllc))?;
    ensure(
        (RewardWeights::DEFAULT.urllc - w.urllc).abs() < 1e-6,
        "URLLC magnitude disagrees with the tabulated weight",
    )?;
    Ok(format!("mMTC weight {} exactly, URLLC weight {:.4e}", w.mmtc, w.urllc))
}

fn brute_return(r: &[f64], gamma: f64, t: usize, tail: f64) -> f64 {
    let mut g = 0.0;
    for (k, x) in r.iter().enumerate().skip(t) {
        g += gamma.powi((k - t) as i32) * x;
    }
    g + gamma.powi((r.len() - t) as i32) * tail
}

fn c2_return_oracles() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let gammas = [0.0, 0.5, 0.99, 1.0];
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let gamma = gammas[i % 4];
        let n = rng.random_range(0..=20);
        let r: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let next = rng.random_range(-10.0..10.0);
        let g = discounted_return(&r, gamma);
        let a = gae(&r, &v, next, gamma, 1.0);
        ensure(g.len() == n && a.len() == n, "length mismatch")?;
        for t in 0..n {
            worst = worst.max((g[t] - brute_return(&r, gamma, t, 0.0)).abs());
            worst = worst.max((a[t] - (brute_return(&r, gamma, t, next) - v[t])).abs());
        }
    }
    ensure(worst <= 1e-9, format!("max abs error {worst:e}"))?;
    Ok(format!("1000 sequences, max abs error {worst:.1e}"))
}

fn toy_batch(seed: u64, params: &PolicyParams, len: usize, cfg: &PpoConfig) -> Batch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = (0..len)
        .map(|_| {
            let mut state = [0.0; STATE_DIM];
            for x in state.iter_mut() {
                *x = rng.random_range(-1.0..1.0);
            }
            let action = rng.random_range(0..params.n_actions());
            Step {
                state,
                action,
                reward: rng.random_range(-2.0..2.0),
                value: rng.random_range(-1.0..1.0),
                log_prob: actor_forward(params, &state).log_prob(action) + rng.random_range(-0.4..0.4),
            }
        })
        .collect();
    let t = Trajectory {
        steps,
        terminal: false,
        bootstrap_value: rng.random_range(-1.0..1.0),
    };
    Batch::from_trajectories(&[t], cfg.gamma, cfg.lambda, params.n_actions()).unwrap()
}

fn c3_gradient_checks() -> Check {
    let cfg = PpoConfig::default();
    let mut ppo_worst: f64 = 0.0;
    for (i, kind) in ActionSpaceKind::ALL.into_iter().enumerate() {
        let p = PolicyParams::new(kind, 30 + i as u64);
        let batch = toy_batch(40 + i as u64, &p, 4, &cfg);
        ppo_worst = ppo_worst.max(gradient_error(&p, &batch, &cfg));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut ae_worst: f64 = 0.0;
    for seed in 0..3 {
        let ae = Autoencoder::new(50 + seed);
        let x = Array2::from_shape_fn((4, INPUT_WIDTH), |_| rng.random_range(0.0..1.0));
        let idx: Vec<usize> = (0..600).map(|_| rng.random_range(0..ae.param_count())).collect();
        ae_worst = ae_worst.max(ae.gradient_error(x.view(), &idx, 1e-5));
    }
    ensure(ppo_worst <= 1e-4, format!("PPO relative error {ppo_worst:e}"))?;
    ensure(ae_worst <= 1e-4, format!("autoencoder relative error {ae_worst:e}"))?;
    Ok(format!(
        "PPO max rel err {ppo_worst:.1e} (3 batches, every parameter), autoencoder {ae_worst:.1e} (3 batches, 600 sampled parameters each)"
    ))
}

fn random_control(rng: &mut ChaCha8Rng) -> (Option<PrbPartition>, Option<SchedulerAssignment>) {
    let parts = PrbPartition::catalog();
    let assigns = SchedulerAssignment::catalog();
    match rng.random_range(0..3) {
        0 => (Some(parts[rng.random_range(0..parts.len())]), None),
        1 => (None, Some(assigns[rng.random_range(0..assigns.len())])),
        _ => (
            Some(parts[rng.random_range(0..parts.len())]),
            Some(assigns[rng.random_range(0..assigns.len())]),
        ),
    }
}

fn c4_simulator_invariants() -> Check {
    const TTIS: u64 = 100_000;
    let base = Scenario::contended();
    let mut heavier = base.clone();
    for ue in heavier.ues.iter_mut().filter(|u| u.slice == SliceKind::Mmtc) {
        ue.traffic = TrafficProfile::poisson(9e6, 125).unwrap();
    }
    let mut bs = BsState::new(&base, 4).unwrap();
    let mut twin = BsState::new(&base, 4).unwrap();
    let mut other = BsState::new(&heavier, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut next_control = 0;
    for tti in 0..TTIS {
        if tti == next_control {
            let (p, a) = random_control(&mut rng);
            for b in [&mut bs, &mut twin, &mut other] {
                b.apply_control(p, a).unwrap();
            }
            next_control += rng.random_range(1..400);
        }
        let out = bs.serve_tti();
        let out_twin = twin.serve_tti();
        let out_other = other.serve_tti();
        ensure(out == out_twin, format!("same-seed runs diverged at TTI {tti}"))?;
        let mut total = 0;
        for slice in SliceKind::ALL {
            let g = out.slice_grants(&bs, slice);
            ensure(g <= bs.partition().share(slice), format!("{slice} exceeded its share at TTI {tti}"))?;
            total += g;
            if slice != SliceKind::Mmtc {
                for &i in bs.slice_members(slice) {
                    ensure(
                        out.grants[i] == out_other.grants[i] && out.served_bytes[i] == out_other.served_bytes[i],
                        format!("mMTC load changed {slice} service at TTI {tti}"),
                    )?;
                }
            }
        }
        ensure(total <= TOTAL_PRBS, format!("{total} PRBs granted at TTI {tti}"))?;
        for ue in bs.ues() {
            ensure(ue.served_bytes <= ue.arrived_bytes, format!("UE {} served more than offered", ue.id))?;
            ensure(
                ue.arrived_bytes - ue.served_bytes == ue.buffer.bytes(),
                format!("UE {} buffer accounting broke at TTI {tti}", ue.id),
            )?;
        }
    }

    let log = |seed| {
        let mut bs = BsState::new(&base, seed).unwrap();
        let mut x = RandomXapp::new("random", ActionSpaceKind::Joint, 100, 9);
        let mut xs: Vec<&mut dyn XappEndpoint> = vec![&mut x];
        let (l, _) = run_control_loop(&mut bs, &mut xs, &LoopConfig::new(20_000)).unwrap();
        let mut actions = Vec::new();
        l.write_actions_csv(&mut actions).unwrap();
        l.to_csv_string().into_bytes().into_iter().chain(actions).collect::<Vec<u8>>()
    };
    ensure(log(5) == log(5), "same-seed logs differ")?;
    Ok(format!("{TTIS} fuzzed TTIs: conservation, isolation, buffer accounting, served <= offered, determinism"))
}

fn c5_learning_sanity(work: &Path) -> Check {
    let scenario = Scenario::paper_default();
    let seeds = [1, 2, 3];
    let oracle = static_partition_medians(&scenario, SliceKind::Embb, Metric::Throughput, &seeds, 60)
        .map_err(|e| e.to_string())?;
    let best = oracle.iter().map(|(_, m)| *m).fold(f64::NEG_INFINITY, f64::max);
    let acceptable: BTreeSet<PrbPartition> =
        oracle.iter().filter(|(_, m)| *m >= 0.98 * best).map(|(p, _)| *p).collect();

    let cfg = ExperimentConfig {
        name: "embb-only".into(),
        scenario: ScenarioRef::Named("default".into()),
        action_space: ActionSpaceKind::SlicingOnly,
        gamma: 0.5,
        weights: WeightSpec::Custom(RewardWeights::new(1.0, 0.0, 0.0).unwrap()),
        hierarchical: None,
        seeds: seeds.to_vec(),
        duration_s: 120,
        period_ms: 1000,
        mode: Mode::Train,
        train: TrainSpec {
            iterations: 100,
            horizon: 40,
            episode_steps: 40,
            seed: 7,
            ..TrainSpec::default()
        },
        encoder: EncoderSpec::default(),
        checkpoint: None,
    };
    let start = Instant::now();
    let run = run_experiment(&cfg, &work.join("embb-only"), work, None).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let chosen: Vec<PrbPartition> = run
        .logs
        .iter()
        .flat_map(|l| l.actions().iter().filter_map(|a| a.partition))
        .collect();
    ensure(!chosen.is_empty(), "policy issued no controls")?;
    let hits = chosen.iter().filter(|p| acceptable.contains(p)).count();
    let frac = hits as f64 / chosen.len() as f64;
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for p in &chosen {
        *counts.entry(p.to_string()).or_default() += 1;
    }
    let detail = format!(
        "oracle best {best:.3} Mbps, {} of 36 partitions within 2%; policy in set for {:.1}% of {} steps ({:?}); train+eval {:.0} s",
        acceptable.len(),
        100.0 * frac,
        chosen.len(),
        counts,
        elapsed.as_secs_f64()
    );
    ensure(elapsed <= Duration::from_secs(15 * 60), format!("over the CPU budget: {detail}"))?;
    ensure(frac >= 0.9, detail.clone())?;
    Ok(detail)
}

struct Silent(XappDescriptor);

impl XappEndpoint for Silent {
    fn descriptor(&self) -> &XappDescriptor {
        &self.0
    }

    fn on_indication(&mut self, ind: &IndicationMsg) -> Result<ControlMsg, RicError> {
        Ok(ControlMsg {
            xapp_id: self.0.xapp_id.clone(),
            seq: ind.seq,
            partition: None,
            assignment: None,
        })
    }
}

fn c8_hierarchical_cadence() -> Check {
    let mut seen = Vec::new();
    for setup in HierarchicalSetup::ALL {
        let mut a = Silent(setup.slicing_descriptor());
        let mut b = Silent(setup.scheduling_descriptor());
        let mut xs: Vec<&mut dyn XappEndpoint> = vec![&mut a, &mut b];
        let mut bs = BsState::reset(1);
        let (_, stats) = run_control_loop(&mut bs, &mut xs, &LoopConfig::new(100_000)).map_err(|e| e.to_string())?;
        let want = (100_000 / setup.slicing_period_ms, 100_000 / setup.sched_period_ms);
        let got = (stats.indications["slicing"], stats.indications["scheduling"]);
        ensure(got == want, format!("setup {}: got {got:?}, want {want:?}", setup.id))?;
        seen.push(format!("{}:{}/{}", setup.id, got.0, got.1));
    }
    let mut rt = Runtime::new();
    rt.subscribe(XappDescriptor::new("a", ControlledParameter::Slicing, 1000)).map_err(|e| e.to_string())?;
    ensure(
        matches!(
            rt.subscribe(XappDescriptor::new("b", ControlledParameter::Both, 1000)),
            Err(RicError::Conflict { .. })
        ),
        "overlapping registration accepted",
    )?;
    let mut a = Silent(XappDescriptor::new("a", ControlledParameter::Scheduling, 1000));
    let mut b = Silent(XappDescriptor::new("b", ControlledParameter::Scheduling, 5000));
    let mut xs: Vec<&mut dyn XappEndpoint> = vec![&mut a, &mut b];
    ensure(
        matches!(
            run_control_loop(&mut BsState::reset(1), &mut xs, &LoopConfig::new(10)),
            Err(RicError::Conflict { .. })
        ),
        "conflicting control loop started",
    )?;
    Ok(format!("indications slicing/scheduling per setup over 100 s: {}; conflicts rejected", seen.join(", ")))
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![any::<f64>().prop_filter("finite", |x| x.is_finite()), -1e6..1e6f64, Just(0.0)]
}

fn slices() -> impl Strategy<Value = Vec<SliceKind>> {
    proptest::sample::subsequence(SliceKind::ALL.to_vec(), 0..=3)
}

fn wire_message() -> impl Strategy<Value = WireMessage> {
    let id = "[a-zA-Z0-9_\\-\"\\\\ é]{0,12}";
    let partition = proptest::option::of(proptest::sample::select(PrbPartition::catalog()));
    let assignment = proptest::option::of(proptest::sample::select(SchedulerAssignment::catalog()));
    let controls = proptest::option::of(proptest::sample::select(vec![
        ControlledParameter::Slicing,
        ControlledParameter::Scheduling,
        ControlledParameter::Both,
    ]));
    let rows = proptest::array::uniform10(proptest::array::uniform3(finite()));
    prop_oneof![
        (id, any::<u64>(), proptest::sample::subsequence(MetricName::ALL.to_vec(), 0..=3), slices(), controls)
            .prop_map(|(xapp_id, period_ms, metrics, slices, controls)| {
                WireMessage::Subscribe(SubscribeMsg { xapp_id, period_ms, metrics, slices, controls })
            }),
        (id, any::<u64>(), any::<u64>(), slices(), proptest::collection::vec(rows, 3)).prop_map(
            |(xapp_id, seq, tti, slices, rows)| {
                let windows = slices.into_iter().zip(rows).collect();
                WireMessage::Indication(IndicationMsg { xapp_id, seq, tti, windows })
            }
        ),
        (id, any::<u64>(), partition, assignment).prop_map(|(xapp_id, seq, partition, assignment)| {
            WireMessage::Control(ControlMsg { xapp_id, seq, partition, assignment })
        }),
        (any::<u64>(), any::<bool>(), proptest::option::of(".{0,20}"))
            .prop_map(|(seq, ok, error)| WireMessage::Ack(AckMsg { seq, ok, error })),
    ]
}

fn joint_policy() -> PolicyXapp {
    let kind = ActionSpaceKind::Joint;
    let ckpt = PolicyCheckpoint::new(PolicyParams::new(kind, 21), 0.5, RewardWeights::DEFAULT, 1000, "encoder.json");
    PolicyXapp::new(XappDescriptor::new("joint", kind.into(), 1000), &ckpt, EncoderParams::random(22)).unwrap()
}

fn log_bytes(log: &MetricLog) -> String {
    let mut actions = Vec::new();
    log.write_actions_csv(&mut actions).unwrap();
    log.to_csv_string() + &String::from_utf8(actions).unwrap()
}

fn c9_protocol() -> Check {
    const CASES: u32 = 10_000;
    let mut runner = TestRunner::new(Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&wire_message(), |msg| {
            let line = msg.to_line();
            prop_assert!(!line.contains('\n'));
            prop_assert_eq!(WireMessage::parse(&line).unwrap(), msg);
            Ok(())
        })
        .map_err(|e| e.to_string())?;

    const DURATION: u64 = 60_000;
    let scenario = Scenario::contended();
    let mut x = joint_policy();
    let mut xs: Vec<&mut dyn XappEndpoint> = vec![&mut x];
    let (local, _) = run_control_loop(&mut BsState::new(&scenario, 13).unwrap(), &mut xs, &LoopConfig::new(DURATION))
        .map_err(|e| e.to_string())?;

    let (server_end, client_end) = UnixStream::pair().map_err(|e| e.to_string())?;
    let client = thread::spawn(move || {
        let mut x = joint_policy();
        let reader = BufReader::new(client_end.try_clone().unwrap());
        run_wire_client(reader, client_end, &mut x)
    });
    let mut bs = BsState::new(&scenario, 13).unwrap();
    let reader = BufReader::new(server_end.try_clone().map_err(|e| e.to_string())?);
    let (remote, _) = serve_wire(reader, &server_end, &mut bs, 1, &LoopConfig::new(DURATION)).map_err(|e| e.to_string())?;
    let _ = server_end.shutdown(std::net::Shutdown::Both);
    let cstats = client.join().map_err(|_| "client panicked")?.map_err(|e| e.to_string())?;
    ensure(log_bytes(&local) == log_bytes(&remote), "wire log differs from in-process log")?;
    Ok(format!(
        "{CASES} random messages round-trip; 60 s wire run ({} indications, {} controls) byte-identical to in-process",
        cstats.indications,
        remote.actions().len()
    ))
}

struct Matrix {
    root: PathBuf,
    logs: BTreeMap<String, Vec<MetricLog>>,
    elapsed: Duration,
    status: Result<(), String>,
}

fn run_matrix_cli(work: &Path) -> Matrix {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/paper12.json");
    let root = work.join("paper12");
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_slicelab"))
        .args(["bench-matrix", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&root)
        .output();
    let elapsed = start.elapsed();
    let status = match out {
        Ok(o) if o.status.success() => Ok(()),
        Ok(o) => Err(format!("bench-matrix failed: {}", String::from_utf8_lossy(&o.stderr))),
        Err(e) => Err(format!("bench-matrix did not start: {e}")),
    };
    let logs = collect_run_logs(&root).unwrap_or_default();
    Matrix {
        root,
        logs,
        elapsed,
        status,
    }
}

fn trained_names(m: &Matrix) -> Vec<&String> {
    m.logs.keys().filter(|k| !k.starts_with("hierarchical")).collect()
}

fn read_table(path: &Path) -> Result<Vec<Vec<String>>, String> {
    let mut r = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    r.records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()).map_err(|e| e.to_string()))
        .collect()
}

fn c10_matrix(m: &Matrix) -> Check {
    m.status.clone()?;
    let trained = trained_names(m);
    ensure(trained.len() == 12, format!("{} trained configurations", trained.len()))?;
    for name in &trained {
        ensure(m.root.join(name).join("policy.json").is_file(), format!("{name} has no policy"))?;
        ensure(m.logs[*name].len() == 3, format!("{name} has {} seed logs", m.logs[*name].len()))?;
    }
    let report = m.root.join("report");
    let medians = read_table(&report.join("medians.csv"))?;
    let options = read_table(&report.join("design_options.csv"))?;
    ensure(medians.len() == m.logs.len(), "medians table is missing rows")?;
    ensure(options.len() == 4, format!("{} design options", options.len()))?;
    for row in medians.iter().chain(&options) {
        for cell in row {
            ensure(!cell.is_empty(), format!("empty cell in {row:?}"))?;
        }
        for cell in &row[row.len() - 3..] {
            let v: f64 = cell.parse().map_err(|_| format!("non-numeric cell in {row:?}"))?;
            ensure(v.is_finite(), format!("non-finite cell in {row:?}"))?;
        }
    }
    ensure(m.elapsed <= Duration::from_secs(4 * 3600), "over the 4 h budget")?;
    Ok(format!(
        "12 trained + {} hierarchical configurations in {:.0} s; medians and design options fully populated",
        m.logs.len() - 12,
        m.elapsed.as_secs_f64()
    ))
}

fn seed_median(log: &MetricLog, slice: SliceKind) -> f64 {
    median(&log.values(slice, Metric::objective(slice))).unwrap_or(f64::NAN)
}

fn pooled_median(logs: &[MetricLog], slice: SliceKind) -> f64 {
    let v: Vec<f64> = logs.iter().flat_map(|l| l.values(slice, Metric::objective(slice))).collect();
    median(&v).unwrap_or(f64::NAN)
}

fn best_for(m: &Matrix, slice: SliceKind) -> Option<&String> {
    m.logs
        .iter()
        .map(|(k, v)| (k, pooled_median(v, slice)))
        .max_by(|a, b| a.1.total_cmp(&b.1).then_with(|| b.0.cmp(a.0)))
        .map(|(k, _)| k)
}

fn c6_competition(m: &Matrix) -> Check {
    m.status.clone()?;
    let e = best_for(m, SliceKind::Embb).ok_or("no configurations")?;
    let p = best_for(m, SliceKind::Mmtc).ok_or("no configurations")?;
    ensure(e != p, format!("{e} is best for both eMBB and mMTC"))?;
    let mut lines = Vec::new();
    for (i, (le, lp)) in m.logs[e].iter().zip(&m.logs[p]).enumerate() {
        let (pe, pp) = (seed_median(le, SliceKind::Mmtc), seed_median(lp, SliceKind::Mmtc));
        let (te, tp) = (seed_median(le, SliceKind::Embb), seed_median(lp, SliceKind::Embb));
        let line = format!("seed {}: pkts {pp} vs {pe}, Mbps {tp:.3} vs {te:.3}", i + 1);
        ensure(pp > pe && tp <= te, format!("{p} vs {e}, {line}"))?;
        lines.push(line);
    }
    ensure(lines.len() == 3, "fewer than 3 seeds")?;
    Ok(format!("mMTC-best {p} vs eMBB-best {e}: {}", lines.join("; ")))
}

fn c7_urllc(m: &Matrix) -> Check {
    m.status.clone()?;
    let trained = trained_names(m);
    ensure(trained.len() == 12, format!("{} trained configurations", trained.len()))?;
    for name in &trained {
        let med = pooled_median(&m.logs[*name], SliceKind::Urllc);
        ensure(med == 0.0, format!("{name}: URLLC median buffer {med} bytes"))?;
    }
    let all_zero = m.logs.values().all(|l| pooled_median(l, SliceKind::Urllc) == 0.0);
    Ok(format!(
        "median URLLC buffer 0 bytes in all 12 trained configurations{}",
        if all_zero { " and every hierarchical composition" } else { "" }
    ))
}

fn main() {
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let wanted = |n: u32| only.as_ref().is_none_or(|o| o.contains(&n));
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        for n in 1..=10 {
            println!("criterion_{n}: test");
        }
        return;
    }

    let work = tempfile::tempdir().expect("temporary directory");
    let mut results: BTreeMap<u32, (&str, Check)> = BTreeMap::new();
    let mut record = |n: u32, name: &'static str, f: &mut dyn FnMut() -> Check| {
        if !wanted(n) {
            return;
        }
        let start = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let tag = if r.is_ok() { "PASS" } else { "FAIL" };
        let text = r.as_ref().unwrap_or_else(|e| e);
        println!("{tag} criterion {n} ({name}, {:.1} s): {text}", start.elapsed().as_secs_f64());
        results.insert(n, (name, r));
    };

    record(1, "weight arithmetic", &mut c1_weight_arithmetic);
    record(2, "return and GAE oracles", &mut c2_return_oracles);
    record(3, "gradient checks", &mut c3_gradient_checks);
    record(4, "simulator invariants", &mut c4_simulator_invariants);
    record(5, "learning sanity", &mut || c5_learning_sanity(work.path()));
    record(8, "hierarchical cadence", &mut c8_hierarchical_cadence);
    record(9, "protocol round trip", &mut c9_protocol);
    if [6, 7, 10].into_iter().any(wanted) {
        let matrix = run_matrix_cli(work.path());
        record(10, "matrix completes", &mut || c10_matrix(&matrix));
        record(6, "competition direction", &mut || c6_competition(&matrix));
        record(7, "URLLC emptiness", &mut || c7_urllc(&matrix));
    }

    println!();
    let mut failed = 0;
    for (n, (name, r)) in &results {
        println!("criterion {n:>2} {:<24} {}", name, if r.is_ok() { "PASS" } else { "FAIL" });
        failed += r.is_err() as usize;
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
