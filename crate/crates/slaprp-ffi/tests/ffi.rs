use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use slaprp::model::{generate_random_instance, Layout, Problem, RandomSpec};
use slaprp::oracle::enumerate_slaprp;
use slaprp::routing::Policy;
use slaprp_ffi::*;

fn instance_json(seed: u64) -> String {
    let spec = RandomSpec {
        layout: Layout::single_block(2, 3, 1),
        n_skus: 4,
        n_orders: 3,
        min_order_size: 1,
        max_order_size: 3,
        n_fixed: 1,
    };
    generate_random_instance(&spec, seed).unwrap().to_json()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(slaprp_last_error()).to_string_lossy().into_owned() }
}

#[test]
fn solve_round_trip_matches_oracle() {
    let json = instance_json(6);
    let expected = enumerate_slaprp(&Problem::new(slaprp::model::Instance::from_json(&json).unwrap()).unwrap(), Policy::Return)
        .unwrap()
        .objective;
    unsafe {
        let text = CString::new(json).unwrap();
        let mut inst = ptr::null_mut();
        assert_eq!(slaprp_instance_from_json(text.as_ptr(), &mut inst), SlaprpStatus::Ok);
        let (mut skus, mut orders) = (0, 0);
        assert_eq!(slaprp_instance_size(inst, &mut skus, &mut orders, ptr::null_mut()), SlaprpStatus::Ok);
        assert_eq!((skus, orders), (4, 3));

        let cfg = slaprp_config_new();
        assert_eq!(slaprp_config_set(cfg, c"policy".as_ptr(), c"return".as_ptr()), SlaprpStatus::Ok);
        let mut res = ptr::null_mut();
        assert_eq!(slaprp_solve(inst, cfg, &mut res), SlaprpStatus::Ok);
        let mut st = SlaprpSolveStatus::NoIncumbent;
        assert_eq!(slaprp_result_status(res, &mut st), SlaprpStatus::Ok);
        assert_eq!(st, SlaprpSolveStatus::Optimal);
        let (mut obj, mut lb, mut nodes) = (0i64, 0i64, 0usize);
        assert_eq!(slaprp_result_bounds(res, &mut obj, &mut lb, &mut nodes), SlaprpStatus::Ok);
        assert_eq!((obj, lb), (expected, expected));
        assert!(nodes >= 1);

        let mut len = 2usize;
        let mut buf = [0usize; 4];
        assert_eq!(slaprp_result_assignment(res, buf.as_mut_ptr(), &mut len), SlaprpStatus::BufferTooSmall);
        assert_eq!(len, 4);
        assert_eq!(slaprp_result_assignment(res, buf.as_mut_ptr(), &mut len), SlaprpStatus::Ok);

        let mut s = ptr::null_mut();
        assert_eq!(slaprp_result_solution_json(res, &mut s), SlaprpStatus::Ok);
        let sol: serde_json::Value = serde_json::from_str(CStr::from_ptr(s).to_str().unwrap()).unwrap();
        assert_eq!(sol["total"], expected);
        assert_eq!(sol["assignment"][0][1], buf[0]);
        slaprp_string_free(s);
        slaprp_result_free(res);
        slaprp_config_free(cfg);
        slaprp_instance_free(inst);
    }
}

#[test]
fn errors_set_codes_and_messages() {
    unsafe {
        let mut inst = ptr::null_mut();
        assert_eq!(slaprp_instance_from_json(c"{".as_ptr(), &mut inst), SlaprpStatus::Parse);
        assert!(inst.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(slaprp_instance_from_json(ptr::null(), &mut inst), SlaprpStatus::NullPointer);
        assert_eq!(last_error(), "json is null");
        assert_eq!(slaprp_instance_load(c"/nonexistent/x.json".as_ptr(), &mut inst), SlaprpStatus::Io);

        let mut bad: serde_json::Value = serde_json::from_str(&instance_json(1)).unwrap();
        bad["orders"][0] = serde_json::json!([999]);
        let text = CString::new(bad.to_string()).unwrap();
        assert_eq!(slaprp_instance_from_json(text.as_ptr(), &mut inst), SlaprpStatus::InvalidInstance);

        let cfg = slaprp_config_new();
        assert_eq!(slaprp_config_set(cfg, c"policy".as_ptr(), c"zigzag".as_ptr()), SlaprpStatus::Parse);
        assert!(last_error().contains("zigzag"));
        assert_eq!(slaprp_config_set(cfg, c"bogus".as_ptr(), c"1".as_ptr()), SlaprpStatus::Parse);
        slaprp_config_free(cfg);

        let mut st = SlaprpSolveStatus::Optimal;
        assert_eq!(slaprp_result_status(ptr::null(), &mut st), SlaprpStatus::NullPointer);
        slaprp_instance_free(ptr::null_mut());
        slaprp_result_free(ptr::null_mut());
        slaprp_string_free(ptr::null_mut());
        assert_eq!(CStr::from_ptr(slaprp_solve_status_name(SlaprpSolveStatus::Limit)).to_str().unwrap(), "limit");
        assert_eq!(CStr::from_ptr(slaprp_version()).to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/slaprp.h")).unwrap();
    for name in [
        "typedef struct SlaprpInstance SlaprpInstance;",
        "SLAPRP_STATUS_BUFFER_TOO_SMALL = 8",
        "slaprp_solve(const struct SlaprpInstance *inst",
        "void slaprp_string_free(char *s);",
        "const char *slaprp_last_error(void);",
    ] {
        assert!(header.contains(name), "missing `{name}`");
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "slaprp.h"

int main(int argc, char **argv) {
    SlaprpInstance *inst = NULL;
    if (slaprp_instance_load(argv[1], &inst) != SLAPRP_STATUS_OK) {
        fprintf(stderr, "%s\n", slaprp_last_error());
        return 1;
    }
    SlaprpConfig *cfg = slaprp_config_new();
    slaprp_config_set(cfg, "policy", "sshape");
    SlaprpResult *res = NULL;
    if (slaprp_solve(inst, cfg, &res) != SLAPRP_STATUS_OK) return 2;
    SlaprpSolveStatus st;
    int64_t obj = 0;
    slaprp_result_status(res, &st);
    slaprp_result_bounds(res, &obj, NULL, NULL);
    printf("%s %lld\n", slaprp_solve_status_name(st), (long long)obj);
    if (slaprp_instance_load(NULL, &inst) != SLAPRP_STATUS_NULL_POINTER) return 3;
    slaprp_result_free(res);
    slaprp_config_free(cfg);
    slaprp_instance_free(inst);
    return 0;
}
"#;

#[test]
fn c_program_links_against_the_shared_library() {
    let exe = std::env::current_exe().unwrap();
    let deps = exe.parent().unwrap();
    let lib = [deps.to_path_buf(), deps.parent().unwrap().to_path_buf()]
        .into_iter()
        .find(|d| d.join("libslaprp_ffi.so").exists())
        .expect("libslaprp_ffi.so next to the test binary");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let json = instance_json(3);
    std::fs::write(dir.path().join("inst.json"), &json).unwrap();
    let bin = dir.path().join("main");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-Wall")
        .arg("-Werror")
        .arg(format!("-I{}/include", env!("CARGO_MANIFEST_DIR")))
        .arg(format!("-L{}", lib.display()))
        .arg("-lslaprp_ffi")
        .arg("-o")
        .arg(&bin)
        .status()
        .expect("C compiler");
    assert!(status.success());
    let out = Command::new(&bin).arg(dir.path().join("inst.json")).env("LD_LIBRARY_PATH", &lib).output().unwrap();
    assert!(out.status.success(), "{out:?}");
    let p = Problem::new(slaprp::model::Instance::from_json(&json).unwrap()).unwrap();
    let expected = enumerate_slaprp(&p, Policy::SShape).unwrap().objective;
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), format!("optimal {expected}"));
}
