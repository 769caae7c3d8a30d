//! Exercise the C ABI from Rust, the same way a C caller would.

use piola_ffi::*;
use std::ffi::{CStr, CString};
use std::ptr;

fn c(text: &str) -> CString {
    CString::new(text).unwrap()
}

#[test]
fn builtin_roundtrip_passes() {
    unsafe {
        let mut scenario = ptr::null_mut();
        let name = c("euclidean-polar-target");
        assert_eq!(piola_scenario_builtin(name.as_ptr(), &mut scenario), 0);
        assert!(!scenario.is_null());

        let mut report = ptr::null_mut();
        assert_eq!(piola_run(scenario, 7, &mut report), 0);
        assert_eq!(piola_report_passed(report), 1);

        let mut json = ptr::null_mut();
        assert_eq!(piola_report_json(report, &mut json), 0);
        let text = CStr::from_ptr(json).to_str().unwrap().to_string();
        assert!(text.contains("\"scenario\": \"euclidean-polar-target\""));
        assert!(text.contains("\"seed\": 7"));
        assert!(text.contains("\"verdict\": \"pass\""));
        piola_string_free(json);

        let mut table = ptr::null_mut();
        assert_eq!(piola_report_text(report, &mut table), 0);
        assert!(CStr::from_ptr(table).to_str().unwrap().contains("mh83-negative"));
        piola_string_free(table);

        piola_report_free(report);
        piola_scenario_free(scenario);
    }
}

#[test]
fn seeded_runs_are_byte_identical() {
    unsafe {
        let mut scenario = ptr::null_mut();
        let name = c("euclidean-cartesian");
        assert_eq!(piola_scenario_builtin(name.as_ptr(), &mut scenario), 0);
        let render = |seed: i64| {
            let mut report = ptr::null_mut();
            assert_eq!(piola_run(scenario, seed, &mut report), 0);
            let mut json = ptr::null_mut();
            assert_eq!(piola_report_json(report, &mut json), 0);
            let text = CStr::from_ptr(json).to_str().unwrap().to_string();
            piola_string_free(json);
            piola_report_free(report);
            text
        };
        assert_eq!(render(3), render(3));
        assert_ne!(render(3), render(4));
        piola_scenario_free(scenario);
    }
}

#[test]
fn load_errors_set_message() {
    unsafe {
        let mut scenario = ptr::null_mut();
        let bad = c("{\"schema\": 9}");
        assert_eq!(
            piola_scenario_from_json(bad.as_ptr(), &mut scenario),
            PIOLA_ERR_LOAD
        );
        let msg = piola_last_error();
        assert!(!msg.is_null());
        let msg = CStr::from_ptr(msg).to_str().unwrap();
        assert!(msg.contains("schema") || msg.contains("missing"), "{msg}");

        let unknown = c("no-such-builtin");
        assert_eq!(
            piola_scenario_builtin(unknown.as_ptr(), &mut scenario),
            PIOLA_ERR_LOAD
        );
    }
}

#[test]
fn null_arguments_are_rejected() {
    unsafe {
        let mut scenario = ptr::null_mut();
        assert_eq!(
            piola_scenario_from_json(ptr::null(), &mut scenario),
            PIOLA_ERR_NULL_ARGUMENT
        );
        let mut report = ptr::null_mut();
        assert_eq!(
            piola_run(ptr::null(), -1, &mut report),
            PIOLA_ERR_NULL_ARGUMENT
        );
        assert_eq!(piola_report_passed(ptr::null()), -1);
        // frees tolerate null
        piola_scenario_free(ptr::null_mut());
        piola_report_free(ptr::null_mut());
        piola_string_free(ptr::null_mut());
    }
}

#[test]
fn scenario_json_runs_end_to_end() {
    let text = r#"{
        "schema": 1,
        "name": "ffi-inline",
        "source": {"dim": 2, "box": [[0,1],[0,1]], "metric": [["1","0"],["0","1"]]},
        "target": {"dim": 2, "box": [[-0.5,1.8],[-0.5,1.7]], "metric": [["1","0"],["0","1"]]},
        "map": ["x0 + 0.3*sin(x1)", "x1 + 0.2*x0^2"],
        "checks": ["riemannian-piola", "generalized"],
        "sampling": {"points": 40, "seed": 5}
    }"#;
    unsafe {
        let mut scenario = ptr::null_mut();
        let json = c(text);
        assert_eq!(piola_scenario_from_json(json.as_ptr(), &mut scenario), 0);
        let mut report = ptr::null_mut();
        assert_eq!(piola_run(scenario, -1, &mut report), 0);
        assert_eq!(piola_report_passed(report), 1);
        piola_report_free(report);
        piola_scenario_free(scenario);
    }
}

#[test]
fn generated_header_covers_the_surface() {
    let header = include_str!("../include/piola.h");
    for symbol in [
        "piola_scenario_from_json",
        "piola_scenario_builtin",
        "piola_scenario_free",
        "piola_run",
        "piola_report_passed",
        "piola_report_json",
        "piola_report_text",
        "piola_report_free",
        "piola_string_free",
        "piola_last_error",
        "PIOLA_ERR_LOAD",
    ] {
        assert!(header.contains(symbol), "header lacks {symbol}");
    }
}
