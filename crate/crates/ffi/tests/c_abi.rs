use std::ffi::{CStr, CString};
use std::ptr;

use csdlma_ffi::*;

const SCENARIO: &str = r#"
alpha = 0.0
steps = 60
seeds = [3, 4]
log_every = 20

[hyperparams]
history_len = 3
hidden = 4
batch_size = 4

[[node]]
kind = "aloha"
q = 0.3
slot_len = 5
"#;

fn last_error() -> String {
    let p = csdlma_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn scenario() -> *mut CsdlmaScenario {
    let text = CString::new(SCENARIO).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { csdlma_scenario_from_toml(text.as_ptr(), &mut s) }, CsdlmaStatus::Ok);
    assert!(!s.is_null());
    s
}

#[test]
fn utility_matches_closed_form() {
    let mut u = 0.0;
    assert_eq!(unsafe { csdlma_alpha_utility(0.25, 1.0, &mut u) }, CsdlmaStatus::Ok);
    assert_eq!(u, 0.25f64.ln());
    assert_eq!(unsafe { csdlma_alpha_utility(0.5, 2.0, &mut u) }, CsdlmaStatus::Ok);
    assert_eq!(u, -2.0);
}

#[test]
fn bad_arguments_set_status_and_message() {
    let mut u = 0.0;
    assert_eq!(unsafe { csdlma_alpha_utility(0.5, -1.0, &mut u) }, CsdlmaStatus::InvalidArgument);
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { csdlma_alpha_utility(0.5, 1.0, ptr::null_mut()) }, CsdlmaStatus::NullPointer);
    assert!(last_error().contains("result"));
    let (mut a, mut b) = (0.0, 0.0);
    assert_eq!(
        unsafe { csdlma_per_slot_throughputs(9, 0.5, 10, 0.5, &mut a, &mut b) },
        CsdlmaStatus::InvalidArgument
    );
    assert!(last_error().contains("strategy"));
}

#[test]
fn reference_benchmark_table() {
    let mut t = [0.0; 3];
    let status = unsafe { csdlma_reference_benchmark(CSDLMA_STRATEGY_POLITE, 0.5, 0, 0, t.as_mut_ptr()) };
    assert_eq!(status, CsdlmaStatus::Ok);
    assert!((t[0] - 0.255).abs() < 1e-12 && (t[1] - 0.19).abs() < 1e-12 && (t[2] - 0.285).abs() < 1e-12, "{t:?}");
    let status = unsafe { csdlma_reference_benchmark(CSDLMA_STRATEGY_POLITE, 0.5, 200_000, 7, t.as_mut_ptr()) };
    assert_eq!(status, CsdlmaStatus::Ok);
    assert!((t[0] - 0.255).abs() < 0.02, "{t:?}");
}

#[test]
fn malformed_scenario_is_a_config_error() {
    let text = CString::new("alpha = 1.0\nbogus = 3\n").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { csdlma_scenario_from_toml(text.as_ptr(), &mut s) }, CsdlmaStatus::Config);
    assert!(s.is_null());
    let path = CString::new("/nonexistent/scenario.toml").unwrap();
    assert_eq!(unsafe { csdlma_scenario_load(path.as_ptr(), &mut s) }, CsdlmaStatus::Io);
    assert!(last_error().contains("nonexistent"));
}

#[test]
fn run_summary_and_csv() {
    let s = scenario();
    let mut nodes = 0;
    unsafe {
        assert_eq!(csdlma_scenario_nodes(s, &mut nodes), CsdlmaStatus::Ok);
        assert_eq!(nodes, 2);
        let dup = [1u64, 1];
        assert_eq!(csdlma_scenario_set_seeds(s, dup.as_ptr(), 2), CsdlmaStatus::Config);
        assert_eq!(csdlma_scenario_set_seeds(s, ptr::null(), 1), CsdlmaStatus::NullPointer);
        assert_eq!(csdlma_scenario_set_alpha(s, 1.0), CsdlmaStatus::Ok);
        assert_eq!(csdlma_scenario_set_steps(s, 40), CsdlmaStatus::Ok);

        let mut run = ptr::null_mut();
        assert_eq!(csdlma_run(s, &mut run), CsdlmaStatus::Ok);
        let mut count = 0;
        assert_eq!(csdlma_run_count(run, &mut count), CsdlmaStatus::Ok);
        assert_eq!(count, 2);

        let (mut means, mut stds) = ([0.0; 2], [0.0; 2]);
        assert_eq!(
            csdlma_run_summary(run, 20, means.as_mut_ptr(), stds.as_mut_ptr(), 1),
            CsdlmaStatus::BufferTooSmall
        );
        assert_eq!(
            csdlma_run_summary(run, 20, means.as_mut_ptr(), stds.as_mut_ptr(), 2),
            CsdlmaStatus::Ok
        );
        assert!(means.iter().all(|m| (0.0..=1.0).contains(m)));
        assert!(stds.iter().all(|s| *s >= 0.0));
        assert_eq!(
            csdlma_run_summary(run, 41, means.as_mut_ptr(), stds.as_mut_ptr(), 2),
            CsdlmaStatus::InvalidArgument
        );

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("runs.csv").to_str().unwrap()).unwrap();
        assert_eq!(csdlma_run_write_csv(run, path.as_ptr()), CsdlmaStatus::Ok);
        let text = std::fs::read_to_string(dir.path().join("runs.csv")).unwrap();
        // 2 runs × 2 snapshots × 2 nodes plus the header.
        assert_eq!(text.lines().count(), 9);

        csdlma_run_free(run);
        csdlma_scenario_free(s);
    }
}

#[test]
fn session_steps_match_invariants() {
    let s = scenario();
    unsafe {
        let mut session = ptr::null_mut();
        assert_eq!(csdlma_session_new(s, 11, &mut session), CsdlmaStatus::Ok);
        csdlma_scenario_free(s);
        let mut elapsed = 0;
        let mut previous = CsdlmaObservation::Idle;
        for _ in 0..200 {
            let (mut a, mut o, mut d, mut m) = (0, CsdlmaObservation::Idle, 0, 0);
            assert_eq!(csdlma_session_step(session, &mut a, &mut o, &mut d, &mut m), CsdlmaStatus::Ok);
            if previous != CsdlmaObservation::Idle {
                assert_eq!(a, 0);
            }
            assert_eq!(d, a.max(1));
            assert_eq!(m == 0, a == 0);
            elapsed += d;
            previous = o;
        }
        let mut t = [0.0; 2];
        assert_eq!(csdlma_session_throughputs(session, t.as_mut_ptr(), 2), CsdlmaStatus::Ok);
        assert!(t.iter().sum::<f64>() <= 1.0 && elapsed >= 200);
        let mut eps = 0.0;
        assert_eq!(csdlma_session_epsilon(session, &mut eps), CsdlmaStatus::Ok);
        assert!(eps < 1.0);

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("ckpt").to_str().unwrap()).unwrap();
        assert_eq!(csdlma_session_save(session, path.as_ptr()), CsdlmaStatus::Ok);
        csdlma_session_free(session);
    }
}

#[test]
fn null_handles_are_rejected_and_free_ignores_null() {
    unsafe {
        let mut n = 0;
        assert_eq!(csdlma_scenario_nodes(ptr::null(), &mut n), CsdlmaStatus::NullPointer);
        assert_eq!(csdlma_run(ptr::null(), ptr::null_mut()), CsdlmaStatus::NullPointer);
        let (mut a, mut o, mut d, mut m) = (0, CsdlmaObservation::Idle, 0, 0);
        assert_eq!(
            csdlma_session_step(ptr::null_mut(), &mut a, &mut o, &mut d, &mut m),
            CsdlmaStatus::NullPointer
        );
        csdlma_scenario_free(ptr::null_mut());
        csdlma_run_free(ptr::null_mut());
        csdlma_session_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/csdlma.h")).unwrap();
    for name in [
        "csdlma_last_error",
        "csdlma_alpha_utility",
        "csdlma_per_slot_throughputs",
        "csdlma_reference_benchmark",
        "csdlma_scenario_from_toml",
        "csdlma_scenario_free",
        "csdlma_run_summary",
        "csdlma_session_step",
        "CSDLMA_STATUS_NULL_POINTER",
        "typedef struct CsdlmaSession CsdlmaSession",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
