use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rmaddpg::agents::{AgentBundle, Checkpoint, NetDims, Variant};
use rmaddpg::env::EnvConfig;
use rmaddpg_ffi::*;

fn last_error() -> String {
    let p = rmaddpg_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn new_env(budget: u32) -> *mut RmaddpgEnv {
    let mut cfg = rmaddpg_env_config_default();
    cfg.budget_messages = budget;
    let mut env = ptr::null_mut();
    assert_eq!(unsafe { rmaddpg_env_new(&cfg, &mut env) }, RmaddpgStatus::Ok);
    env
}

#[test]
fn defaults_match_the_core_crate() {
    let c = rmaddpg_env_config_default();
    let d = EnvConfig::default();
    assert_eq!(c.n_agents as usize, d.n_agents);
    assert_eq!(c.episode_length as usize, d.episode_length);
    assert_eq!(c.budget_messages, d.budget_messages);
    assert_eq!(RMADDPG_OBS_DIM, rmaddpg::env::OBS_DIM);
    let v = unsafe { CStr::from_ptr(rmaddpg_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn episode_runs_to_the_horizon() {
    let env = new_env(20);
    let mut obs = [0.0; 2 * RMADDPG_OBS_DIM];
    assert_eq!(unsafe { rmaddpg_env_reset(env, 9, obs.as_mut_ptr(), obs.len()) }, RmaddpgStatus::Ok);
    assert_eq!(&obs[4..7], &[-1.0, -1.0, 1.0]);
    let (phys, verb) = ([2u32, 0], [0u32, 1]);
    let mut reward = RmaddpgReward::default();
    let mut done = false;
    let mut steps = 0;
    while !done {
        let s = unsafe {
            rmaddpg_env_step(env, phys.as_ptr(), verb.as_ptr(), 2, obs.as_mut_ptr(), obs.len(), &mut reward, &mut done)
        };
        assert_eq!(s, RmaddpgStatus::Ok);
        assert!(reward.reward <= 0.0);
        steps += 1;
    }
    assert_eq!(steps, 100);
    let mut budget = -1.0;
    assert_eq!(unsafe { rmaddpg_env_budget(env, &mut budget) }, RmaddpgStatus::Ok);
    assert_eq!(budget, 0.0);
    let s = unsafe {
        rmaddpg_env_step(env, phys.as_ptr(), verb.as_ptr(), 2, obs.as_mut_ptr(), obs.len(), &mut reward, &mut done)
    };
    assert_eq!(s, RmaddpgStatus::EpisodeFinished);
    assert!(last_error().contains("finished"));
    unsafe { rmaddpg_env_free(env) };
}

#[test]
fn bad_arguments_report_status_and_message() {
    let mut env = ptr::null_mut();
    assert_eq!(unsafe { rmaddpg_env_new(ptr::null(), &mut env) }, RmaddpgStatus::NullPointer);
    assert!(last_error().contains("config"));

    let env = new_env(5);
    let mut small = [0.0; 3];
    assert_eq!(unsafe { rmaddpg_env_reset(env, 1, small.as_mut_ptr(), small.len()) }, RmaddpgStatus::BufferTooSmall);
    let mut obs = [0.0; 14];
    let mut budget = 0.0;
    assert_eq!(unsafe { rmaddpg_env_budget(env, &mut budget) }, RmaddpgStatus::InvalidArgument);
    assert_eq!(unsafe { rmaddpg_env_reset(env, 1, obs.as_mut_ptr(), obs.len()) }, RmaddpgStatus::Ok);
    assert!(rmaddpg_last_error().is_null());
    let (phys, verb) = ([7u32, 0], [0u32, 0]);
    let (mut r, mut d) = (RmaddpgReward::default(), false);
    let s = unsafe { rmaddpg_env_step(env, phys.as_ptr(), verb.as_ptr(), 2, obs.as_mut_ptr(), 14, &mut r, &mut d) };
    assert_eq!(s, RmaddpgStatus::InvalidArgument);
    unsafe {
        rmaddpg_env_free(env);
        rmaddpg_env_free(ptr::null_mut());
    }
}

#[test]
fn reward_matches_the_core_function() {
    let pos = [0.0, 0.0, 3.0, 4.0];
    let mut out = RmaddpgReward::default();
    assert_eq!(unsafe { rmaddpg_compute_reward(pos.as_ptr(), 2, 0.0, 0.0, &mut out) }, RmaddpgStatus::Ok);
    assert_eq!((out.r_dist, out.r_diff, out.reward), (5.0, 5.0, -10.0));
}

#[test]
fn policy_from_checkpoint_drives_the_env() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ckpt.bin");
    let env_cfg = EnvConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let bundles: Vec<_> = (0..2)
        .map(|_| AgentBundle::new(Variant::Rmaddpg, NetDims::new(2, 16), &mut rng))
        .collect();
    Checkpoint::from_bundles(Variant::Rmaddpg, &env_cfg, &bundles).save(&path).unwrap();

    let c_path = CString::new(path.to_str().unwrap()).unwrap();
    let mut policy = ptr::null_mut();
    assert_eq!(unsafe { rmaddpg_policy_load(c_path.as_ptr(), &mut policy) }, RmaddpgStatus::Ok);
    assert_eq!(unsafe { rmaddpg_policy_n_agents(policy) }, 2);

    let run = |policy: *mut RmaddpgPolicy| {
        let env = new_env(20);
        let mut obs = [0.0; 14];
        let mut actions = Vec::new();
        unsafe {
            rmaddpg_policy_reset(policy);
            rmaddpg_env_reset(env, 11, obs.as_mut_ptr(), 14);
        }
        let (mut r, mut done) = (RmaddpgReward::default(), false);
        while !done {
            let (mut p, mut v) = ([0u32; 2], [0u32; 2]);
            let s = unsafe { rmaddpg_policy_act(policy, obs.as_ptr(), 2, p.as_mut_ptr(), v.as_mut_ptr()) };
            assert_eq!(s, RmaddpgStatus::Ok);
            assert!(p.iter().all(|&x| x < 5) && v.iter().all(|&x| x < 2));
            actions.push((p, v));
            unsafe { rmaddpg_env_step(env, p.as_ptr(), v.as_ptr(), 2, obs.as_mut_ptr(), 14, &mut r, &mut done) };
        }
        unsafe { rmaddpg_env_free(env) };
        actions
    };
    assert_eq!(run(policy), run(policy));

    let (mut p, mut v) = ([0u32; 3], [0u32; 3]);
    let obs = [0.0; 21];
    let s = unsafe { rmaddpg_policy_act(policy, obs.as_ptr(), 3, p.as_mut_ptr(), v.as_mut_ptr()) };
    assert_eq!(s, RmaddpgStatus::Incompatible);
    unsafe { rmaddpg_policy_free(policy) };

    let missing = CString::new(dir.path().join("nope.bin").to_str().unwrap()).unwrap();
    let mut policy = ptr::null_mut();
    assert_eq!(unsafe { rmaddpg_policy_load(missing.as_ptr(), &mut policy) }, RmaddpgStatus::Io);
    assert!(policy.is_null());
}

#[test]
fn experiment_entry_point_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.toml");
    let out = dir.path().join("out");
    std::fs::write(
        &spec,
        format!(
            "variants = [\"maddpg\"]\nseeds = [1]\nepisodes = 2\neval_period = 1\nout = {:?}\n[train]\nbatch_episodes = 2\neval_episodes = 1\nrecord_wall_clock = false\n[env]\nepisode_length = 10\n",
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let c = CString::new(spec.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { rmaddpg_run_experiment(c.as_ptr()) }, RmaddpgStatus::Ok);
    assert!(out.join("manifest.json").is_file());
    assert!(out.join("partial-maddpg-b20-s1/checkpoint.bin").is_file());
}

#[test]
fn header_is_valid_c_and_cpp() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/rmaddpg.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["rmaddpg_env_new", "rmaddpg_policy_act", "rmaddpg_last_error", "RMADDPG_STATUS_OK"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let Ok(status) = Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg(&header)
            .status()
        else {
            eprintln!("{compiler} not available; skipping syntax check");
            continue;
        };
        assert!(status.success(), "{compiler} rejected the header");
    }
}

/// Builds the C example against the shared library from this build and
/// checks its result against the Rust API.
#[test]
fn c_program_links_and_runs() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(Path::parent).unwrap();
    if !profile_dir.join("librmaddpg_ffi.so").is_file() {
        eprintln!("shared library not built in {}; skipping", profile_dir.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("episode");
    let Ok(status) = Command::new("cc")
        .arg(manifest.join("examples/c/episode.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg("-L")
        .arg(profile_dir)
        .arg(format!("-Wl,-rpath,{}", profile_dir.display()))
        .args(["-lrmaddpg_ffi", "-o"])
        .arg(&bin)
        .status()
    else {
        eprintln!("cc not available; skipping");
        return;
    };
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();

    let cfg = EnvConfig {
        observability: rmaddpg::env::Observability::Full,
        ..EnvConfig::default()
    };
    let (mut state, _) = rmaddpg::env::reset(&cfg, 7).unwrap();
    use rmaddpg::env::{AgentAction, Physical, Verbal};
    let acts = [
        AgentAction::new(Physical::North, Verbal::Silent),
        AgentAction::new(Physical::West, Verbal::Silent),
    ];
    let mut last = 0.0;
    for _ in 0..cfg.episode_length {
        let o = rmaddpg::env::step(&state, &acts, &cfg).unwrap();
        last = o.reward.reward;
        state = o.state;
    }
    assert_eq!(text.trim(), format!("steps=100 reward={last:.6}"));
}
