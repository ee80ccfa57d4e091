use std::path::{Path, PathBuf};
use std::process::Command;

fn static_lib() -> PathBuf {
    let deps = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let candidates = [
        deps.parent().unwrap().join("libdicke_ffi.a"),
        deps.join("libdicke_ffi.a"),
    ];
    candidates
        .into_iter()
        .find(|p| p.exists())
        .expect("libdicke_ffi.a next to the test binary")
}

#[test]
fn c_program_links_and_runs() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let out = Path::new(env!("CARGO_TARGET_TMPDIR")).join("dicke_smoke");
    let status = Command::new("gcc")
        .args(["-std=c11", "-Wall", "-Werror", "-O1"])
        .arg("-I")
        .arg(root.join("include"))
        .arg(root.join("tests/c/smoke.c"))
        .arg(static_lib())
        .args(["-lopenblas", "-lm", "-lpthread", "-ldl", "-o"])
        .arg(&out)
        .status()
        .expect("gcc is available");
    assert!(status.success(), "compiling the C smoke test failed");
    let run = Command::new(&out).output().unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(
        run.status.success(),
        "C smoke test failed:\n{stdout}\n{}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(stdout.contains("c smoke ok"));
}
