//! Builds a small C program against `include/isac.h` and the static library.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "isac.h"

int main(void) {
    IsacConfig *cfg = NULL;
    if (isac_config_from_toml("[scenario]\nnum_slots = 12\n", &cfg) != ISAC_STATUS_OK) return 1;
    IsacEpisode *ep = NULL;
    if (isac_episode_run(cfg, ISAC_MODE_POWER_ONLY, 1, &ep) != ISAC_STATUS_OK) return 2;
    size_t slots = 0;
    isac_episode_num_slots(ep, &slots);
    IsacSlotSummary s;
    if (isac_episode_slot(ep, slots - 1, &s) != ISAC_STATUS_OK) return 3;
    if (isac_episode_slot(ep, slots, &s) != ISAC_STATUS_INVALID_ARGUMENT) return 4;
    char msg[128];
    isac_last_error_message(msg, sizeof msg);
    if (strstr(msg, "out of range") == NULL) return 5;
    printf("%s %zu %.6e\n", isac_version(), slots, s.sum_sens_sinr);
    isac_episode_free(ep);
    isac_config_free(cfg);
    return 0;
}
"#;

fn static_lib() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    let dir = exe.parent().and_then(Path::parent).unwrap();
    dir.join("libisac_ffi.a")
}

#[test]
fn c_program_links_and_runs() {
    let lib = static_lib();
    assert!(lib.exists(), "{} not built", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let bin = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let out = Command::new(cc)
        .args(["-std=c11", "-Wall", "-Werror", "-I"])
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .expect("no C compiler");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let stdout = String::from_utf8(run.stdout).unwrap();
    let fields: Vec<&str> = stdout.split_whitespace().collect();
    assert_eq!(fields[..2], [env!("CARGO_PKG_VERSION"), "12"]);
    assert!(fields[2].parse::<f64>().unwrap() > 0.0);
}
