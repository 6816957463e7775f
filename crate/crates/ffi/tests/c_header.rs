//! Compiles and runs a C program against the generated header and the
//! static library.

use std::path::{Path, PathBuf};
use std::process::Command;

fn target_dir() -> PathBuf {
    // target/<profile>/deps/<this test binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

fn compiler() -> Option<String> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    Command::new(&cc).arg("--version").output().ok().filter(|o| o.status.success()).map(|_| cc)
}

#[test]
fn header_is_generated() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/ibkernel.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in [
        "IbStatus",
        "ib_kernel_phi",
        "ib_kernel_derivative",
        "ib_kernel_spec",
        "ib_kernel_weights",
        "ib_grid_new",
        "ib_grid_spread",
        "ib_grid_interpolate",
        "ib_grid_pair_coupling",
        "ib_bench_run",
        "ib_bench_max_std",
        "ib_last_error",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
}

#[test]
fn c_program_links_and_runs() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libibkernel_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let exe = Path::new(env!("CARGO_TARGET_TMPDIR")).join("ibkernel_smoke");
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Wextra", "-Werror", "-o"])
        .arg(&exe)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl"])
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
