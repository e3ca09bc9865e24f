//! C interface to slicelab.
//!
//! Every fallible function returns an [`SlStatus`]. On failure a
//! description is kept per thread and can be read with [`sl_last_error`].
//! Objects are opaque handles created by a `*_new`/`*_load` function and
//! released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use slicelab::agent::{compute_weights, step_reward, ActionSpaceKind, PolicyCheckpoint, RewardWeights};
use slicelab::kpm::{EncoderParams, KpmSample, KpmWindow, METRICS, WINDOW_LEN};
use slicelab::ric::{PolicyXapp, XappDescriptor};
use slicelab::sim::{BsState, PrbPartition, Scenario, SchedulerAssignment, SchedulerKind, SliceKind};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Internal = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlScheduler {
    Rr = 0,
    Wf = 1,
    Pf = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlActionSpace {
    Slicing = 0,
    Scheduling = 1,
    Joint = 2,
}

/// One slice measurement. Arrays of three are ordered eMBB, mMTC, URLLC.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SlKpm {
    pub tti: u64,
    pub dl_throughput_mbps: f64,
    pub buffer_bytes: f64,
    pub tx_packets: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SlWeights {
    pub embb: f64,
    pub mmtc: f64,
    pub urllc: f64,
}

/// A control decision. Fields behind a zero `has_*` flag are unset.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlAction {
    pub has_partition: u8,
    pub partition: [u32; 3],
    pub has_schedulers: u8,
    pub schedulers: [SlScheduler; 3],
}

/// Opaque simulated cell.
pub struct SlSim {
    bs: BsState,
}

/// Opaque trained policy with its state encoder.
pub struct SlPolicy {
    xapp: PolicyXapp,
    space: ActionSpaceKind,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

type FfiResult = Result<(), (SlStatus, String)>;

fn guard(f: impl FnOnce() -> FfiResult) -> SlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SlStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SlStatus::Internal
        }
    }
}

fn invalid(e: impl ToString) -> (SlStatus, String) {
    (SlStatus::InvalidArgument, e.to_string())
}

fn null(what: &str) -> (SlStatus, String) {
    (SlStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, (SlStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn borrow_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (SlStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (SlStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (SlStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn to_kind(s: SlScheduler) -> SchedulerKind {
    match s {
        SlScheduler::Rr => SchedulerKind::RR,
        SlScheduler::Wf => SchedulerKind::WF,
        SlScheduler::Pf => SchedulerKind::PF,
    }
}

fn from_kind(k: SchedulerKind) -> SlScheduler {
    match k {
        SchedulerKind::RR => SlScheduler::Rr,
        SchedulerKind::WF => SlScheduler::Wf,
        SchedulerKind::PF => SlScheduler::Pf,
    }
}

fn to_sample(slice: SliceKind, k: &SlKpm) -> KpmSample {
    KpmSample {
        slice,
        tti: k.tti,
        dl_throughput_mbps: k.dl_throughput_mbps,
        buffer_bytes: k.buffer_bytes,
        tx_packets: k.tx_packets,
    }
}

fn from_sample(s: &KpmSample) -> SlKpm {
    SlKpm {
        tti: s.tti,
        dl_throughput_mbps: s.dl_throughput_mbps,
        buffer_bytes: s.buffer_bytes,
        tx_packets: s.tx_packets,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or an empty string.
/// Valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn sl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates the default cell (two UEs per slice) seeded with `seed`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn sl_sim_new(seed: u64, out: *mut *mut SlSim) -> SlStatus {
    sl_sim_new_named(c"default".as_ptr(), seed, out)
}

/// Creates a built-in scenario by name (`default` or `contended`).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_sim_new_named(name: *const c_char, seed: u64, out: *mut *mut SlSim) -> SlStatus {
    guard(|| {
        let out = borrow_mut(out, "out")?;
        let name = c_str(name, "name")?;
        let scenario = Scenario::by_name(name).ok_or_else(|| invalid(format!("unknown scenario `{name}`")))?;
        let bs = BsState::new(&scenario, seed).map_err(invalid)?;
        *out = Box::into_raw(Box::new(SlSim { bs }));
        Ok(())
    })
}

/// Creates a cell from a scenario JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_sim_new_json(json: *const c_char, seed: u64, out: *mut *mut SlSim) -> SlStatus {
    guard(|| {
        let out = borrow_mut(out, "out")?;
        let scenario: Scenario =
            serde_json::from_str(c_str(json, "json")?).map_err(|e| (SlStatus::Parse, e.to_string()))?;
        scenario.validate().map_err(invalid)?;
        let bs = BsState::new(&scenario, seed).map_err(invalid)?;
        *out = Box::into_raw(Box::new(SlSim { bs }));
        Ok(())
    })
}

/// Releases a cell. Null is ignored.
///
/// # Safety
/// `sim` must come from a `sl_sim_new*` call and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sl_sim_free(sim: *mut SlSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Sets the PRB split; it governs every TTI served afterwards.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_sim_set_partition(sim: *mut SlSim, embb: u32, mmtc: u32, urllc: u32) -> SlStatus {
    guard(|| {
        let sim = borrow_mut(sim, "sim")?;
        let p = PrbPartition::new(embb, mmtc, urllc).map_err(invalid)?;
        sim.bs.apply_control(Some(p), None).map_err(invalid)
    })
}

/// Sets the per-slice schedulers (eMBB, mMTC, URLLC).
///
/// # Safety
/// `sim` must be a live handle and `schedulers` point to three values.
#[no_mangle]
pub unsafe extern "C" fn sl_sim_set_schedulers(sim: *mut SlSim, schedulers: *const SlScheduler) -> SlStatus {
    guard(|| {
        let sim = borrow_mut(sim, "sim")?;
        if schedulers.is_null() {
            return Err(null("schedulers"));
        }
        let s = std::slice::from_raw_parts(schedulers, 3);
        let a = SchedulerAssignment([to_kind(s[0]), to_kind(s[1]), to_kind(s[2])]);
        sim.bs.apply_control(None, Some(a)).map_err(invalid)
    })
}

/// Serves `ttis` TTIs and writes the per-slice KPMs measured over them to
/// `kpms` (three entries).
///
/// # Safety
/// `sim` must be a live handle and `kpms` point to three writable entries.
#[no_mangle]
pub unsafe extern "C" fn sl_sim_run(sim: *mut SlSim, ttis: u64, kpms: *mut SlKpm) -> SlStatus {
    guard(|| {
        let sim = borrow_mut(sim, "sim")?;
        if kpms.is_null() {
            return Err(null("kpms"));
        }
        if ttis == 0 {
            return Err(invalid("ttis must be positive"));
        }
        let mark = sim.bs.snapshot();
        sim.bs.run(ttis);
        let out = std::slice::from_raw_parts_mut(kpms, 3);
        for slice in SliceKind::ALL {
            let s = sim.bs.measure_kpm(slice, &mark).map_err(invalid)?;
            out[slice.index()] = from_sample(&s);
        }
        Ok(())
    })
}

/// Current TTI counter of the cell.
///
/// # Safety
/// `sim` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_sim_tti(sim: *const SlSim, out: *mut u64) -> SlStatus {
    guard(|| {
        let sim = borrow(sim, "sim")?;
        *borrow_mut(out, "out")? = sim.bs.tti_counter;
        Ok(())
    })
}

/// Reward weights `alpha/a`, `beta/b`, `gamma_u/c`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_compute_weights(
    alpha: f64,
    beta: f64,
    gamma_u: f64,
    a: f64,
    b: f64,
    c: f64,
    out: *mut SlWeights,
) -> SlStatus {
    guard(|| {
        let out = borrow_mut(out, "out")?;
        let w = compute_weights(alpha, beta, gamma_u, a, b, c).map_err(invalid)?;
        *out = SlWeights {
            embb: w.embb,
            mmtc: w.mmtc,
            urllc: w.urllc,
        };
        Ok(())
    })
}

/// Per-step reward of three slice KPMs under `weights`.
///
/// # Safety
/// `kpms` must point to three entries; `weights` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sl_step_reward(kpms: *const SlKpm, weights: *const SlWeights, out: *mut f64) -> SlStatus {
    guard(|| {
        let w = borrow(weights, "weights")?;
        let out = borrow_mut(out, "out")?;
        if kpms.is_null() {
            return Err(null("kpms"));
        }
        let k = std::slice::from_raw_parts(kpms, 3);
        let samples = SliceKind::ALL.map(|s| to_sample(s, &k[s.index()]));
        let weights = RewardWeights::new(w.embb, w.mmtc, w.urllc).map_err(invalid)?;
        *out = step_reward(&samples, &weights);
        Ok(())
    })
}

/// Loads a policy file and the encoder it names.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_policy_load(path: *const c_char, out: *mut *mut SlPolicy) -> SlStatus {
    guard(|| {
        let out = borrow_mut(out, "out")?;
        let path = Path::new(c_str(path, "path")?);
        let io = |e: &dyn ToString| (SlStatus::Io, e.to_string());
        let ckpt = PolicyCheckpoint::load(path).map_err(|e| io(&e))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let encoder = EncoderParams::load(&dir.join(&ckpt.encoder)).map_err(|e| io(&e))?;
        let descriptor = XappDescriptor::new("ffi", ckpt.action_space.into(), ckpt.period_ms);
        let xapp = PolicyXapp::new(descriptor, &ckpt, encoder).map_err(invalid)?;
        *out = Box::into_raw(Box::new(SlPolicy {
            xapp,
            space: ckpt.action_space,
        }));
        Ok(())
    })
}

/// Releases a policy. Null is ignored.
///
/// # Safety
/// `policy` must come from [`sl_policy_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sl_policy_free(policy: *mut SlPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// The parameter family the policy controls.
///
/// # Safety
/// `policy` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_policy_action_space(policy: *const SlPolicy, out: *mut SlActionSpace) -> SlStatus {
    guard(|| {
        let p = borrow(policy, "policy")?;
        *borrow_mut(out, "out")? = match p.space {
            ActionSpaceKind::SlicingOnly => SlActionSpace::Slicing,
            ActionSpaceKind::SchedulingOnly => SlActionSpace::Scheduling,
            ActionSpaceKind::Joint => SlActionSpace::Joint,
        };
        Ok(())
    })
}

/// Greedy action for one observation: `windows` holds 90 values, per slice
/// (eMBB, mMTC, URLLC) ten rows of throughput Mbps, buffer bytes and
/// transmitted packets.
///
/// # Safety
/// `policy` must be a live handle, `windows` point to 90 values and `out`
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_policy_act(policy: *mut SlPolicy, windows: *const f64, out: *mut SlAction) -> SlStatus {
    guard(|| {
        let p = borrow_mut(policy, "policy")?;
        let out = borrow_mut(out, "out")?;
        if windows.is_null() {
            return Err(null("windows"));
        }
        let values = std::slice::from_raw_parts(windows, 3 * WINDOW_LEN * METRICS);
        let mut ws = Vec::with_capacity(3);
        for slice in SliceKind::ALL {
            let chunk = &values[slice.index() * WINDOW_LEN * METRICS..][..WINDOW_LEN * METRICS];
            let mut rows = [[0.0; METRICS]; WINDOW_LEN];
            for (r, row) in rows.iter_mut().enumerate() {
                row.copy_from_slice(&chunk[r * METRICS..][..METRICS]);
            }
            if rows.iter().flatten().any(|v| !v.is_finite()) {
                return Err(invalid("windows contain a non-finite value"));
            }
            ws.push(KpmWindow { slice, rows });
        }
        let windows: [KpmWindow; 3] = ws.try_into().expect("three slices");
        let a = p.xapp.decide(&windows).map_err(invalid)?;
        *out = SlAction {
            has_partition: a.partition.is_some() as u8,
            partition: a.partition.map(|p| p.shares()).unwrap_or_default(),
            has_schedulers: a.assignment.is_some() as u8,
            schedulers: a.assignment.map(|s| s.0.map(from_kind)).unwrap_or([SlScheduler::Rr; 3]),
        };
        Ok(())
    })
}
