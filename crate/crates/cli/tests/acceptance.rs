//! Acceptance criterion 16: the sweep output is reproducible byte for byte
//! and does not depend on the worker count.

use std::process::Command;

fn sweep(jobs: &str) -> (Option<i32>, Vec<u8>) {
    let o = Command::new(env!("CARGO_BIN_EXE_hmstab")).args(["--jobs", jobs, "sweep", "--r-list", "10,20,40,80"]).output().unwrap();
    (o.status.code(), o.stdout)
}

fn main() {
    let (c1, a) = sweep("1");
    let (c2, b) = sweep("1");
    let (c3, c) = sweep("8");
    let ok = [c1, c2, c3].iter().all(|&c| c == Some(0)) && !a.is_empty();
    let repeat = ok && a == b;
    let jobs = ok && a == c;
    let pass = repeat && jobs;
    println!(
        "criterion 16: {} repeated sweep identical: {repeat}; --jobs 1 vs --jobs 8 identical: {jobs}; {} bytes",
        if pass { "PASS" } else { "FAIL" },
        a.len()
    );
    if !pass {
        std::process::exit(1);
    }
}
