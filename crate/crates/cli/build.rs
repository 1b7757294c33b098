use std::process::Command;

fn main() {
    let rev = Command::new("git")
        .args(["rev-parse", "--short=12", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "unknown".into());
    let dirty = Command::new("git")
        .args(["status", "--porcelain", "--untracked-files=no"])
        .output()
        .ok()
        .map(|o| !o.stdout.is_empty())
        .unwrap_or(false);
    let profile = std::env::var("PROFILE").unwrap_or_else(|_| "unknown".into());
    let parallel = std::env::var_os("CARGO_FEATURE_PARALLEL").is_some();
    println!("cargo:rustc-env=LMREG_GIT_REV={rev}{}", if dirty { "-dirty" } else { "" });
    println!("cargo:rustc-env=LMREG_BUILD_PROFILE={profile}");
    println!("cargo:rustc-env=LMREG_FEATURES={}", if parallel { "parallel" } else { "sequential" });
    println!("cargo:rerun-if-changed=../../.git/HEAD");
    println!("cargo:rerun-if-changed=build.rs");
}
