#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

pub fn erosion(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_erosion"))
        .args(args)
        .env("EV_LOG_LEVEL", "error")
        .output()
        .expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn write_config(dir: &Path, name: &str, config: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}

/// Runs `command` on `config` with outputs in `out`; extra flags appended.
pub fn run_cmd(command: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![command, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    erosion(&args)
}

/// Header and rows of a CSV written by the CLI, skipping `#` lines.
pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}

pub fn column(path: &Path, name: &str) -> Vec<f64> {
    let (header, rows) = read_csv(path);
    let k = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

/// `X_{t+1} = 0.99 X_t + w_t` on `[-R, R]` from the origin.
pub fn linear_config(horizon: usize, delta: f64, radius: f64) -> Value {
    json!({
        "model": {"name": "linear_scalar", "a": 0.99},
        "noise": {"type": "gaussian", "variance": 1e-3},
        "safe_set": {"interval_radius": radius},
        "horizon": horizon,
        "delta": delta,
        "trials": 2000,
        "seed": 11
    })
}

pub fn unicycle_config(trials: usize) -> Value {
    json!({
        "model": {"name": "unicycle", "eta": 0.01},
        "safe_set": {
            "spatial_coords": [0, 1],
            "obstacles": [
                {"type": "ball", "center": [1.5, 3.5], "radius": 0.9},
                {"type": "ball", "center": [-0.5, 2.0], "radius": 0.72},
                {"type": "ball", "center": [6.2, 0.7], "radius": 0.75}
            ]
        },
        "initial_set": {"type": "axis_box",
            "lower": [4.9, 4.9, -std::f64::consts::FRAC_PI_3 - 0.1],
            "upper": [5.1, 5.1, -std::f64::consts::FRAC_PI_3 + 0.1]},
        "horizon": 100,
        "delta": 1e-4,
        "erosion": "max",
        "trials": trials,
        "seed": 5
    })
}

/// `Ψ_T = σ² Σ_{k<T} L^{2k}` summed term by term.
pub fn psi_sum(l: f64, sigma2: f64, horizon: usize) -> f64 {
    (0..horizon).map(|k| sigma2 * l.powi(2 * k as i32)).sum()
}

/// Root of `T·exp(-(R²/(2Ψ_T) - log 2)) = δ` by bisection.
pub fn bisect_threshold_root(l: f64, sigma2: f64, horizon: usize, delta: f64) -> f64 {
    let psi = psi_sum(l, sigma2, horizon);
    let f = |r: f64| horizon as f64 * (-(r * r / (2.0 * psi) - 2f64.ln())).exp() - delta;
    let (mut lo, mut hi) = (0.0f64, 100.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
