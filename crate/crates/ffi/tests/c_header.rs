use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "slicelab.h"

int main(void) {
    SlSim *sim = NULL;
    SlKpm kpms[3];
    SlWeights w;
    double r = 0.0;
    if (sl_sim_new(3, &sim) != SL_STATUS_OK) return 1;
    if (sl_sim_set_partition(sim, 30, 15, 6) != SL_STATUS_INVALID_ARGUMENT) return 2;
    if (strlen(sl_last_error()) == 0) return 3;
    if (sl_sim_run(sim, 1000, kpms) != SL_STATUS_OK) return 4;
    if (sl_compute_weights(1000.0, 456.0, 1.0, 13.88, 304.0, 20186.0, &w) != SL_STATUS_OK) return 5;
    if (w.mmtc != 1.5) return 6;
    if (sl_step_reward(kpms, &w, &r) != SL_STATUS_OK) return 7;
    sl_sim_free(sim);
    printf("%s %.3f\n", sl_version(), kpms[0].dl_throughput_mbps);
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    assert!(include.join("slicelab.h").is_file());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(&src, PROGRAM).unwrap();

    let syntax = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .status();
    let Ok(syntax) = syntax else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(syntax.success());

    let lib = target_dir().join("libslicelab_ffi.a");
    if !lib.is_file() {
        eprintln!("static library not built at {}; link step skipped", lib.display());
        return;
    }
    let bin = dir.path().join("smoke");
    let link = Command::new("cc")
        .args(["-std=c99", "-I"])
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(link.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with(env!("CARGO_PKG_VERSION")));
}
