//! C ABI over the `rmaddpg` crate.
//!
//! Every function returns an [`RmaddpgStatus`]; on failure the message is
//! kept per thread and read back with [`rmaddpg_last_error`]. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rmaddpg::agents::{actor_forward, greedy_action, AgentBundle, Checkpoint};
use rmaddpg::env::{self, AgentAction, EnvConfig, Observability, Observation, Physical, Verbal, WorldState};
use rmaddpg::experiment::{run_experiment, ExperimentSpec};
use rmaddpg::nnet::RecurrentState;
use rmaddpg::Error;

/// Flattened observation width per agent.
pub const RMADDPG_OBS_DIM: usize = 7;
pub const RMADDPG_PHYSICAL_ACTIONS: usize = 5;
pub const RMADDPG_VERBAL_ACTIONS: usize = 2;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RmaddpgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    EpisodeFinished = 4,
    Io = 5,
    Format = 6,
    Incompatible = 7,
    Numerical = 8,
    /// At least one grid cell of a training job failed or aborted.
    RunFailed = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RmaddpgReward {
    pub r_dist: f64,
    pub r_diff: f64,
    pub reward: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RmaddpgObservability {
    Full = 0,
    Partial = 1,
}

/// Environment settings; start from [`rmaddpg_env_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmaddpgEnvConfig {
    pub n_agents: u32,
    pub episode_length: u32,
    pub budget_messages: u32,
    pub observability: RmaddpgObservability,
}

/// Opaque environment handle.
pub struct RmaddpgEnv {
    config: EnvConfig,
    state: Option<WorldState>,
}

/// Opaque greedy policy handle built from a checkpoint.
pub struct RmaddpgPolicy {
    bundles: Vec<AgentBundle>,
    states: Vec<RecurrentState>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(msg).expect("nul bytes removed")));
}

fn status_of(e: &Error) -> RmaddpgStatus {
    match e {
        Error::EpisodeFinished(_) => RmaddpgStatus::EpisodeFinished,
        Error::Io { .. } => RmaddpgStatus::Io,
        Error::Format(_) | Error::Json(_) => RmaddpgStatus::Format,
        Error::Incompatible(_) => RmaddpgStatus::Incompatible,
        Error::NonFinite(_) | Error::Diverged(_) => RmaddpgStatus::Numerical,
        _ => RmaddpgStatus::InvalidArgument,
    }
}

struct Failure(RmaddpgStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn fail<T>(status: RmaddpgStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

/// Runs `f`, converting errors and panics into a status plus message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RmaddpgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            RmaddpgStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RmaddpgStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .map_or_else(|| fail(RmaddpgStatus::NullPointer, format!("{what} is null")), Ok)
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .map_or_else(|| fail(RmaddpgStatus::NullPointer, format!("{what} is null")), Ok)
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if p.is_null() {
        return fail(RmaddpgStatus::NullPointer, format!("{what} is null"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if p.is_null() {
        return fail(RmaddpgStatus::NullPointer, format!("{what} is null"));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<String, Failure> {
    if p.is_null() {
        return fail(RmaddpgStatus::NullPointer, format!("{what} is null"));
    }
    match CStr::from_ptr(p).to_str() {
        Ok(s) => Ok(s.to_owned()),
        Err(_) => fail(RmaddpgStatus::InvalidArgument, format!("{what} is not UTF-8")),
    }
}

fn write_observations(obs: &[Observation], out: &mut [f64]) -> Result<(), Failure> {
    let need = obs.len() * RMADDPG_OBS_DIM;
    if out.len() < need {
        return fail(
            RmaddpgStatus::BufferTooSmall,
            format!("observation buffer holds {} values, need {need}", out.len()),
        );
    }
    for (o, chunk) in obs.iter().zip(out.chunks_exact_mut(RMADDPG_OBS_DIM)) {
        chunk.copy_from_slice(&o.flatten());
    }
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn rmaddpg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rmaddpg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn rmaddpg_env_config_default() -> RmaddpgEnvConfig {
    let d = EnvConfig::default();
    RmaddpgEnvConfig {
        n_agents: d.n_agents as u32,
        episode_length: d.episode_length as u32,
        budget_messages: d.budget_messages,
        observability: match d.observability {
            Observability::Full => RmaddpgObservability::Full,
            Observability::Partial => RmaddpgObservability::Partial,
        },
    }
}

/// Rewards for `n_agents` positions given as `[x0, y0, x1, y1, …]`.
///
/// # Safety
/// `positions` must point to `2 * n_agents` readable doubles and `out` to
/// a writable [`RmaddpgReward`].
#[no_mangle]
pub unsafe extern "C" fn rmaddpg_compute_reward(
    positions: *const f64,
    n_agents: usize,
    goal_x: f64,
    goal_y: f64,
    out: *mut RmaddpgReward,
) -> RmaddpgStatus {
    guard(|| {
        let flat = slice(positions, 2 * n_agents, "positions")?;
        let out = deref_mut(out, "out")?;
        let pts: Vec<[f64; 2]> = flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        let r = env::compute_reward(&pts, [goal_x, goal_y]);
        *out = RmaddpgReward {
            r_dist: r.r_dist,
            r_diff: r.r_diff,
            reward: r.reward,
        };
        Ok(())
    })
}

/// # Safety
/// `config` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rmaddpg_env_new(config: *const RmaddpgEnvConfig, out: *mut *mut RmaddpgEnv) -> RmaddpgStatus {
    guard(|| {
        let c = deref(config, "config")?;
        let out = deref_mut(out, "out")?;
        let config = EnvConfig {
            n_agents: c.n_agents as usize,
            episode_length: c.episode_length as usize,
            budget_messages: c.budget_messages,
            observability: match c.observability {
                RmaddpgObservability::Full => Observability::Full,
                RmaddpgObservability::Partial => Observability::Partial,
            },
            ..EnvConfig::default()
        };
        config.validate()?;
        *out = Box::into_raw(Box::new(RmaddpgEnv {
            config,
            state: None,
        }));
        Ok(())
    })
}

/// # Safety
/// `env` must come from [`rmaddpg_env_new`] and not be used afterwards.
/// Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn rmaddpg_env_free(env: *mut RmaddpgEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Starts an episode and writes `n_agents * RMADDPG_OBS_DIM` observation
/// values.
///
/// # Safety
/// `env` must be a live handle; `obs` must hold `obs_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rmaddpg_env_reset(env: *mut RmaddpgEnv, seed: u64, obs: *mut f64, obs_len: usize) -> RmaddpgStatus {
    guard(|| {
        let env = deref_mut(env, "env")?;
        let out = slice_mut(obs, obs_len, "obs")?;
        let (state, observations) = env::reset(&env.config, seed)?;
        write_observations(&observations, out)?;
        env.state = Some(state);
        Ok(())
    })
}

/// Advances one timestep. `physical[i]` indexes none/north/east/west/south
/// and `verbal[i]` communicate/silent.
///
/// # Safety
/// `physical` and `verbal` must hold `n_agents` values, `obs` `obs_len`
/// doubles; `reward` and `done` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rmaddpg_env_step(
    env: *mut RmaddpgEnv,
    physical: *const u32,
    verbal: *const u32,
    n_agents: usize,
    obs: *mut f64,
    obs_len: usize,
    reward: *mut RmaddpgReward,
    done: *mut bool,
) -> RmaddpgStatus {
    guard(|| {
        let env = deref_mut(env, "env")?;
        let phys = slice(physical, n_agents, "physical")?;
        let verb = slice(verbal, n_agents, "verbal")?;
        let out = slice_mut(obs, obs_len, "obs")?;
        let reward = deref_mut(reward, "reward")?;
        let done = deref_mut(done, "done")?;
        let Some(state) = env.state.as_ref() else {
            return fail(RmaddpgStatus::InvalidArgument, "environment has not been reset");
        };
        let actions = phys
            .iter()
            .zip(verb)
            .map(|(&p, &v)| {
                Ok(AgentAction::new(
                    Physical::from_index(p as usize)?,
                    Verbal::from_index(v as usize)?,
                ))
            })
            .collect::<Result<Vec<_>, Error>>()?;
        let step = env::step(state, &actions, &env.config)?;
        write_observations(&step.observations, out)?;
        *reward = RmaddpgReward {
            r_dist: step.reward.r_dist,
            r_diff: step.reward.r_diff,
            reward: step.reward.reward,
        };
        *done = step.done;
        env.state = Some(step.state);
        Ok(())
    })
}

/// Remaining budget fraction in `[0, 1]`.
///
/// # Safety
/// `env` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rmaddpg_env_budget(env: *const RmaddpgEnv, out: *mut f64) -> RmaddpgStatus {
    guard(|| {
        let env = deref(env, "env")?;
        let out = deref_mut(out, "out")?;
        let Some(state) = env.state.as_ref() else {
            return fail(RmaddpgStatus::InvalidArgument, "environment has not been reset");
        };
        *out = state.budget;
        Ok(())
    })
}

/// Agent positions as `[x0, y0, x1, y1, …]`.
///
/// # Safety
/// `env` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rmaddpg_env_positions(env: *const RmaddpgEnv, out: *mut f64, len: usize) -> RmaddpgStatus {
    guard(|| {
        let env = deref(env, "env")?;
        let out = slice_mut(out, len, "out")?;
        let Some(state) = env.state.as_ref() else {
            return fail(RmaddpgStatus::InvalidArgument, "environment has not been reset");
        };
        if len < 2 * state.positions.len() {
            return fail(RmaddpgStatus::BufferTooSmall, "position buffer too small");
        }
        for (p, c) in state.positions.iter().zip(out.chunks_exact_mut(2)) {
            c.copy_from_slice(p);
        }
        Ok(())
    })
}

/// Loads a checkpoint file as a greedy policy with zeroed recurrent state.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rmaddpg_policy_load(path: *const c_char, out: *mut *mut RmaddpgPolicy) -> RmaddpgStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        let out = deref_mut(out, "out")?;
        let bundles = Checkpoint::load(&path)?.to_bundles()?;
        let states = bundles
            .iter()
            .map(|b| RecurrentState::zeros(b.actor.net.hidden_dim()))
            .collect();
        *out = Box::into_raw(Box::new(RmaddpgPolicy { bundles, states }));
        Ok(())
    })
}

/// # Safety
/// `policy` must come from [`rmaddpg_policy_load`] and not be used
/// afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn rmaddpg_policy_free(policy: *mut RmaddpgPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Number of agents the policy controls.
///
/// # Safety
/// `policy` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rmaddpg_policy_n_agents(policy: *const RmaddpgPolicy) -> usize {
    policy.as_ref().map_or(0, |p| p.bundles.len())
}

/// Zeroes the recurrent state; call at every episode start.
///
/// # Safety
/// `policy` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rmaddpg_policy_reset(policy: *mut RmaddpgPolicy) -> RmaddpgStatus {
    guard(|| {
        let p = deref_mut(policy, "policy")?;
        for (s, b) in p.states.iter_mut().zip(&p.bundles) {
            *s = RecurrentState::zeros(b.actor.net.hidden_dim());
        }
        Ok(())
    })
}

/// Greedy joint action for the flattened observations of every agent
/// (`n_agents * RMADDPG_OBS_DIM` values, as written by the env functions).
///
/// # Safety
/// `obs` must hold `n_agents * RMADDPG_OBS_DIM` doubles; `physical` and
/// `verbal` must hold `n_agents` writable values.
#[no_mangle]
pub unsafe extern "C" fn rmaddpg_policy_act(
    policy: *mut RmaddpgPolicy,
    obs: *const f64,
    n_agents: usize,
    physical: *mut u32,
    verbal: *mut u32,
) -> RmaddpgStatus {
    guard(|| {
        let p = deref_mut(policy, "policy")?;
        if n_agents != p.bundles.len() {
            return fail(
                RmaddpgStatus::Incompatible,
                format!("policy controls {} agents, got {n_agents}", p.bundles.len()),
            );
        }
        let obs = slice(obs, n_agents * RMADDPG_OBS_DIM, "obs")?;
        let phys_out = slice_mut(physical, n_agents, "physical")?;
        let verb_out = slice_mut(verbal, n_agents, "verbal")?;
        for i in 0..n_agents {
            let o = &obs[i * RMADDPG_OBS_DIM..(i + 1) * RMADDPG_OBS_DIM];
            let message = (o[4] != -1.0 || o[5] != -1.0).then_some([o[4], o[5]]);
            let observation = Observation {
                own_position: [o[0], o[1]],
                goal: [o[2], o[3]],
                message,
                budget: o[6],
            };
            let (pl, vl, next) = actor_forward(&p.bundles[i].actor, &observation, &p.states[i])?;
            let s = greedy_action(&pl, &vl)?;
            phys_out[i] = s.action.physical.index() as u32;
            verb_out[i] = s.action.verbal.index() as u32;
            p.states[i] = next;
        }
        Ok(())
    })
}

/// Runs the experiment grid described by a TOML spec file, writing the
/// usual run directories and manifest.
///
/// # Safety
/// `spec_path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rmaddpg_run_experiment(spec_path: *const c_char) -> RmaddpgStatus {
    guard(|| {
        let path = path_arg(spec_path, "spec_path")?;
        let manifest = run_experiment(&ExperimentSpec::load(&path)?)?;
        if !manifest.all_completed() {
            return fail(RmaddpgStatus::RunFailed, "one or more grid cells failed or aborted");
        }
        Ok(())
    })
}
