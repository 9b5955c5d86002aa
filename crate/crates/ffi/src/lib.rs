//! C ABI over the `csdlma` crate.
//!
//! Every fallible function returns a [`CsdlmaStatus`]; on failure a message
//! is available from [`csdlma_last_error`] on the same thread. Handles are
//! opaque, created by `*_new`/`*_load`/`*_run` functions and released by the
//! matching `*_free`. Output pointers are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use csdlma::agent::{Agent, Gateway};
use csdlma::fairness::{alpha_utility, Alpha};
use csdlma::harness::{run_experiment, save_csv, RunRecord, ScenarioConfig};
use csdlma::netsim::{Observation, Simulator};
use csdlma::oracle::{per_slot_throughputs, simulate_model_aware, strategy_throughputs, BenchmarkScenario, Strategy};
use csdlma::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsdlmaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    Checkpoint = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsdlmaObservation {
    Idle = 0,
    Busy = 1,
    Successful = 2,
    Collided = 3,
}

impl From<Observation> for CsdlmaObservation {
    fn from(o: Observation) -> Self {
        match o {
            Observation::Idle => CsdlmaObservation::Idle,
            Observation::Busy => CsdlmaObservation::Busy,
            Observation::Successful => CsdlmaObservation::Successful,
            Observation::Collided => CsdlmaObservation::Collided,
        }
    }
}

/// Model-aware strategy selectors for the benchmark functions.
pub const CSDLMA_STRATEGY_GREEDY: u32 = 0;
pub const CSDLMA_STRATEGY_POLITE: u32 = 1;

/// A parsed scenario.
pub struct CsdlmaScenario(ScenarioConfig);

/// Records of a completed experiment, one per seed.
pub struct CsdlmaRun(Vec<RunRecord>);

/// A learner and its channel, advanced one decision epoch at a time.
pub struct CsdlmaSession {
    sim: Simulator,
    agent: Agent,
    gateway: Gateway,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(CsdlmaStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Config(_) => CsdlmaStatus::Config,
            Error::Io { .. } => CsdlmaStatus::Io,
            Error::Checkpoint(_) => CsdlmaStatus::Checkpoint,
            _ => CsdlmaStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(CsdlmaStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(CsdlmaStatus::InvalidArgument, msg.into())
}

/// Runs `f`, translating errors and panics into a status and the last-error message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CsdlmaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CsdlmaStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            CsdlmaStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not UTF-8")))
}

fn strategy(code: u32) -> Result<Strategy, Failure> {
    match code {
        CSDLMA_STRATEGY_GREEDY => Ok(Strategy::Greedy),
        CSDLMA_STRATEGY_POLITE => Ok(Strategy::Polite),
        other => Err(invalid(format!("unknown strategy {other}"))),
    }
}

/// Message of the last failure on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn csdlma_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// α-fair utility of `x` (clamped below at 1e-6).
///
/// # Safety
/// `result` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn csdlma_alpha_utility(x: f64, alpha: f64, result: *mut f64) -> CsdlmaStatus {
    guard(|| {
        let r = out(result, "result")?;
        *r = alpha_utility(x, Alpha::new(alpha)?)?;
        Ok(())
    })
}

/// Per-slot throughputs of a model-aware strategy against ALOHA.
///
/// # Safety
/// `agent` and `aloha` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn csdlma_per_slot_throughputs(
    strategy_code: u32,
    q: f64,
    slot_len: usize,
    header: f64,
    agent: *mut f64,
    aloha: *mut f64,
) -> CsdlmaStatus {
    guard(|| {
        let (a, b) = (out(agent, "agent")?, out(aloha, "aloha")?);
        let t = per_slot_throughputs(strategy(strategy_code)?, q, slot_len, header)?;
        *a = t.agent;
        *b = t.aloha;
        Ok(())
    })
}

/// Closed-form `(agent, tdma, aloha)` throughputs of `strategy_code` in the
/// reference TDMA/ALOHA scenario with ALOHA probability `q`. With
/// `minislots > 0` the scripted node is simulated instead.
///
/// # Safety
/// `throughputs` must be null or valid for 3 writes.
#[no_mangle]
pub unsafe extern "C" fn csdlma_reference_benchmark(
    strategy_code: u32,
    q: f64,
    minislots: u64,
    seed: u64,
    throughputs: *mut f64,
) -> CsdlmaStatus {
    guard(|| {
        if throughputs.is_null() {
            return Err(null("throughputs"));
        }
        let mut scenario = BenchmarkScenario::reference();
        scenario.aloha.q = q;
        let s = strategy(strategy_code)?;
        let b = if minislots == 0 {
            strategy_throughputs(&scenario, s)?
        } else {
            simulate_model_aware(&scenario, s, minislots, seed)?
        };
        std::slice::from_raw_parts_mut(throughputs, 3).copy_from_slice(&b.as_array());
        Ok(())
    })
}

/// Parses a TOML scenario.
///
/// # Safety
/// `text` must be null or a nul-terminated string; `scenario` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn csdlma_scenario_from_toml(text: *const c_char, scenario: *mut *mut CsdlmaScenario) -> CsdlmaStatus {
    guard(|| {
        let o = out(scenario, "scenario")?;
        let config = ScenarioConfig::from_toml(str_arg(text, "text")?)?;
        *o = Box::into_raw(Box::new(CsdlmaScenario(config)));
        Ok(())
    })
}

/// Loads a TOML scenario file.
///
/// # Safety
/// `path` must be null or a nul-terminated string; `scenario` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn csdlma_scenario_load(path: *const c_char, scenario: *mut *mut CsdlmaScenario) -> CsdlmaStatus {
    guard(|| {
        let o = out(scenario, "scenario")?;
        let config = ScenarioConfig::load(Path::new(str_arg(path, "path")?))?;
        *o = Box::into_raw(Box::new(CsdlmaScenario(config)));
        Ok(())
    })
}

/// Overrides the decision epochs per run.
///
/// # Safety
/// `scenario` must be null or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn csdlma_scenario_set_steps(scenario: *mut CsdlmaScenario, steps: u64) -> CsdlmaStatus {
    guard(|| {
        out(scenario, "scenario")?.0.steps = steps;
        Ok(())
    })
}

/// Overrides the fairness exponent.
///
/// # Safety
/// `scenario` must be null or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn csdlma_scenario_set_alpha(scenario: *mut CsdlmaScenario, alpha: f64) -> CsdlmaStatus {
    guard(|| {
        out(scenario, "scenario")?.0.alpha = Alpha::new(alpha)?;
        Ok(())
    })
}

/// Replaces the seed list.
///
/// # Safety
/// `scenario` must be null or a live scenario handle; `seeds` valid for `len` reads.
#[no_mangle]
pub unsafe extern "C" fn csdlma_scenario_set_seeds(scenario: *mut CsdlmaScenario, seeds: *const u64, len: usize) -> CsdlmaStatus {
    guard(|| {
        let s = out(scenario, "scenario")?;
        if seeds.is_null() && len > 0 {
            return Err(null("seeds"));
        }
        let list = if len == 0 { Vec::new() } else { std::slice::from_raw_parts(seeds, len).to_vec() };
        let mut next = s.0.clone();
        next.seeds = list;
        next.validate()?;
        s.0 = next;
        Ok(())
    })
}

/// Number of reward components: the learner plus each coexisting node.
///
/// # Safety
/// `scenario` must be null or a live handle; `nodes` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn csdlma_scenario_nodes(scenario: *const CsdlmaScenario, nodes: *mut usize) -> CsdlmaStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        *out(nodes, "nodes")? = s.0.nodes.len() + 1;
        Ok(())
    })
}

/// Releases a scenario handle. Null is ignored.
///
/// # Safety
/// `scenario` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn csdlma_scenario_free(scenario: *mut CsdlmaScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs every seed of the scenario to completion.
///
/// # Safety
/// `scenario` must be null or a live handle; `run` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn csdlma_run(scenario: *const CsdlmaScenario, run: *mut *mut CsdlmaRun) -> CsdlmaStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        let o = out(run, "run")?;
        let records = run_experiment(&s.0)?;
        *o = Box::into_raw(Box::new(CsdlmaRun(records)));
        Ok(())
    })
}

/// Number of records (seeds) in a run.
///
/// # Safety
/// `run` must be null or a live handle; `count` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn csdlma_run_count(run: *const CsdlmaRun, count: *mut usize) -> CsdlmaStatus {
    guard(|| {
        let r = run.as_ref().ok_or_else(|| null("run"))?;
        *out(count, "count")? = r.0.len();
        Ok(())
    })
}

/// Tail-window throughput mean and standard deviation per node across
/// records. `means` and `stds` must each hold `len` values; `len` must be
/// at least the node count.
///
/// # Safety
/// `run` must be null or a live handle; `means`/`stds` null or valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn csdlma_run_summary(
    run: *const CsdlmaRun,
    window: usize,
    means: *mut f64,
    stds: *mut f64,
    len: usize,
) -> CsdlmaStatus {
    guard(|| {
        let r = run.as_ref().ok_or_else(|| null("run"))?;
        if means.is_null() || stds.is_null() {
            return Err(null("means or stds"));
        }
        let stats = csdlma::harness::summarize(&r.0, window)?;
        if len < stats.len() {
            return Err(Failure(
                CsdlmaStatus::BufferTooSmall,
                format!("{} nodes need {} slots, got {len}", stats.len(), stats.len()),
            ));
        }
        let (m, s) = (std::slice::from_raw_parts_mut(means, len), std::slice::from_raw_parts_mut(stds, len));
        for (k, st) in stats.iter().enumerate() {
            m[k] = st.mean;
            s[k] = st.std;
        }
        Ok(())
    })
}

/// Writes the run's cumulative-throughput log as CSV.
///
/// # Safety
/// `run` must be null or a live handle; `path` null or a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn csdlma_run_write_csv(run: *const CsdlmaRun, path: *const c_char) -> CsdlmaStatus {
    guard(|| {
        let r = run.as_ref().ok_or_else(|| null("run"))?;
        save_csv(&r.0, Path::new(str_arg(path, "path")?))?;
        Ok(())
    })
}

/// Releases a run handle. Null is ignored.
///
/// # Safety
/// `run` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn csdlma_run_free(run: *mut CsdlmaRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Starts a learner on the scenario's channel with `seed`.
///
/// # Safety
/// `scenario` must be null or a live handle; `session` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn csdlma_session_new(
    scenario: *const CsdlmaScenario,
    seed: u64,
    session: *mut *mut CsdlmaSession,
) -> CsdlmaStatus {
    guard(|| {
        let s = &scenario.as_ref().ok_or_else(|| null("scenario"))?.0;
        let o = out(session, "session")?;
        s.validate()?;
        let sim = Simulator::new(&s.nodes, s.header, seed)?;
        let agent = Agent::new(s.hyperparams.clone(), s.alpha, s.score_mode(), s.nodes.len(), seed)?;
        *o = Box::into_raw(Box::new(CsdlmaSession {
            sim,
            agent,
            gateway: Gateway::new(s.agents),
        }));
        Ok(())
    })
}

/// Runs one decision epoch: act, simulate, learn. `member` receives the
/// transmitting member id (1-based) or 0 when the learner sensed.
///
/// # Safety
/// `session` must be null or a live handle; each output null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn csdlma_session_step(
    session: *mut CsdlmaSession,
    action: *mut usize,
    observation: *mut CsdlmaObservation,
    duration: *mut usize,
    member: *mut usize,
) -> CsdlmaStatus {
    guard(|| {
        let s = out(session, "session")?;
        let (a_out, o_out, d_out, m_out) = (
            out(action, "action")?,
            out(observation, "observation")?,
            out(duration, "duration")?,
            out(member, "member")?,
        );
        let a = s.agent.act()?;
        let m = s.gateway.dispatch(a);
        let e = s.sim.step_agent(a);
        s.agent.observe(a, e.observation, &e.rewards)?;
        *a_out = a;
        *o_out = e.observation.into();
        *d_out = e.duration;
        *m_out = m.unwrap_or(0);
        Ok(())
    })
}

/// Cumulative throughput per node since the session started; `len` must be
/// at least the node count.
///
/// # Safety
/// `session` must be null or a live handle; `throughputs` null or valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn csdlma_session_throughputs(session: *const CsdlmaSession, throughputs: *mut f64, len: usize) -> CsdlmaStatus {
    guard(|| {
        let s = session.as_ref().ok_or_else(|| null("session"))?;
        if throughputs.is_null() {
            return Err(null("throughputs"));
        }
        let t = s.sim.throughputs();
        if len < t.len() {
            return Err(Failure(
                CsdlmaStatus::BufferTooSmall,
                format!("{} nodes need {} slots, got {len}", t.len(), t.len()),
            ));
        }
        std::slice::from_raw_parts_mut(throughputs, len)[..t.len()].copy_from_slice(&t);
        Ok(())
    })
}

/// Current exploration rate of the session's learner.
///
/// # Safety
/// `session` must be null or a live handle; `epsilon` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn csdlma_session_epsilon(session: *const CsdlmaSession, epsilon: *mut f64) -> CsdlmaStatus {
    guard(|| {
        let s = session.as_ref().ok_or_else(|| null("session"))?;
        *out(epsilon, "epsilon")? = s.agent.epsilon();
        Ok(())
    })
}

/// Saves the session learner's parameters and settings.
///
/// # Safety
/// `session` must be null or a live handle; `path` null or a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn csdlma_session_save(session: *const CsdlmaSession, path: *const c_char) -> CsdlmaStatus {
    guard(|| {
        let s = session.as_ref().ok_or_else(|| null("session"))?;
        s.agent.save(Path::new(str_arg(path, "path")?))?;
        Ok(())
    })
}

/// Releases a session handle. Null is ignored.
///
/// # Safety
/// `session` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn csdlma_session_free(session: *mut CsdlmaSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}
