//! Compiles and runs a small C client against the generated header and the
//! static library. Skipped when no C compiler is on PATH.

use std::path::PathBuf;
use std::process::Command;

const CLIENT: &str = r#"
#include "rydwire.h"
#include <stdio.h>
#include <string.h>

int main(void) {
    RwProblem *p = NULL;
    if (rw_fixture_problem("fig6", &p) != RW_STATUS_OK) return 10;
    RwEmbedding *e = NULL;
    if (rw_embed(p, -1.0, &e) != RW_STATUS_OK) return 11;
    size_t atoms = 0;
    rw_embedding_atom_count(e, &atoms);
    RwSolution *s = NULL;
    if (rw_problem_solve(p, &s) != RW_STATUS_OK) return 12;
    char *bits = NULL;
    rw_solution_configuration(s, 0, &bits);
    printf("%zu %s\n", atoms, bits);
    rw_string_free(bits);
    if (rw_problem_from_json("[", &p) != RW_STATUS_INVALID_INPUT) return 13;
    if (strlen(rw_last_error_message()) == 0) return 14;
    rw_solution_free(s);
    rw_embedding_free(e);
    return 0;
}
"#;

fn have(cmd: &str) -> bool {
    Command::new(cmd).arg("--version").output().is_ok()
}

#[test]
fn c_client_links_and_runs() {
    if !have("cc") {
        eprintln!("no C compiler; skipping");
        return;
    }
    // target/<profile>/deps/<test> → target/<profile>
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("librydwire_ffi.a");
    if !lib.exists() {
        eprintln!("static library not built at {}; skipping", lib.display());
        return;
    }
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile_dir();
    let src = dir.join("client.c");
    let bin = dir.join("client");
    std::fs::write(&src, CLIENT).unwrap();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .unwrap();
    assert!(status.success(), "C client failed to build");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "client exited with {:?}", out.status);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut parts = stdout.split_whitespace();
    assert!(parts.next().unwrap().parse::<usize>().unwrap() > 4);
    assert_eq!(parts.next().unwrap().len(), 4);
}

fn tempfile_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rydwire-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
