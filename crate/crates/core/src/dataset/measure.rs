//! Runtime measurement through external compile and run commands.

use std::fmt;
use std::io::Read;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use wait_timeout::ChildExt;

use crate::variantgen::KernelVariant;

pub const TIME_MARKER: &str = "KERNEL_TIME_US=";

/// Shell command templates. Placeholders: `{src}` (harness source), `{bin}`
/// (binary to produce), `{kernel}`, `{kind}`, `{teams}`, `{threads}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutorConfig {
    pub compile: String,
    pub run: String,
    #[serde(default = "default_timeout")]
    pub timeout_s: u64,
    #[serde(default)]
    pub retries: u32,
    #[serde(default = "default_platform")]
    pub platform: String,
}

fn default_timeout() -> u64 {
    600
}

fn default_platform() -> String {
    "local".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Compile,
    Run,
    Parse,
    Timeout,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Compile => "compile",
            Stage::Run => "run",
            Stage::Parse => "parse",
            Stage::Timeout => "timeout",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{stage} failed for {variant}: {message}")]
pub struct MeasureError {
    pub stage: Stage,
    pub variant: String,
    pub message: String,
    pub stderr: String,
}

fn expand(template: &str, harness: &Path, bin: &Path, v: &KernelVariant) -> String {
    template
        .replace("{src}", &harness.display().to_string())
        .replace("{bin}", &bin.display().to_string())
        .replace("{kernel}", &v.kernel_name)
        .replace("{kind}", v.kind.as_str())
        .replace("{teams}", &v.params.num_teams.to_string())
        .replace("{threads}", &v.params.num_threads.to_string())
}

struct Output {
    ok: bool,
    code: Option<i32>,
    stdout: String,
    stderr: String,
}

fn run_shell(cmd: &str, threads: u32, timeout: Duration) -> Result<Option<Output>, std::io::Error> {
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(cmd)
        .env("OMP_NUM_THREADS", threads.to_string())
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()?;
    let mut out_pipe = child.stdout.take().expect("piped stdout");
    let mut err_pipe = child.stderr.take().expect("piped stderr");
    let out_reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = out_pipe.read_to_string(&mut s);
        s
    });
    let err_reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = err_pipe.read_to_string(&mut s);
        s
    });
    let status = match child.wait_timeout(timeout)? {
        Some(s) => s,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Ok(None);
        }
    };
    Ok(Some(Output {
        ok: status.success(),
        code: status.code(),
        stdout: out_reader.join().unwrap_or_default(),
        stderr: err_reader.join().unwrap_or_default(),
    }))
}

/// Extracts the last `KERNEL_TIME_US=<x>` value; it must be finite and
/// positive.
pub fn parse_marker(stdout: &str) -> Result<f64, String> {
    let value = stdout
        .lines()
        .filter_map(|l| l.trim().strip_prefix(TIME_MARKER))
        .next_back()
        .ok_or_else(|| format!("no `{TIME_MARKER}` line in output"))?;
    let x: f64 = value.trim().parse().map_err(|_| format!("marker value `{}` is not a number", value.trim()))?;
    if !(x.is_finite() && x > 0.0) {
        return Err(format!("marker value {x} is not a positive runtime"));
    }
    Ok(x)
}

fn attempt(v: &KernelVariant, harness: &Path, bin: &Path, cfg: &ExecutorConfig) -> Result<f64, MeasureError> {
    let timeout = Duration::from_secs(cfg.timeout_s.max(1));
    let fail = |stage, message: String, stderr: String| MeasureError { stage, variant: v.stem(), message, stderr };
    let threads = v.params.num_threads;
    for (stage, template) in [(Stage::Compile, &cfg.compile), (Stage::Run, &cfg.run)] {
        if template.trim().is_empty() {
            continue;
        }
        let cmd = expand(template, harness, bin, v);
        let out = run_shell(&cmd, threads, timeout)
            .map_err(|e| fail(stage, format!("cannot start `{cmd}`: {e}"), String::new()))?
            .ok_or_else(|| fail(Stage::Timeout, format!("{stage} exceeded {} s", cfg.timeout_s), String::new()))?;
        if !out.ok {
            let code = out.code.map_or("signal".to_string(), |c| c.to_string());
            return Err(fail(stage, format!("`{cmd}` exited with {code}"), out.stderr));
        }
        if stage == Stage::Run {
            return parse_marker(&out.stdout).map_err(|m| fail(Stage::Parse, m, out.stderr));
        }
    }
    Err(fail(Stage::Run, "no run command configured".into(), String::new()))
}

/// Compiles and runs the harness for `variant`, retrying up to
/// `cfg.retries` extra times. The last failure is returned when every
/// attempt fails.
pub fn measure_runtime(
    variant: &KernelVariant,
    harness: &Path,
    work_dir: &Path,
    cfg: &ExecutorConfig,
) -> Result<f64, MeasureError> {
    if let Err(e) = std::fs::create_dir_all(work_dir) {
        return Err(MeasureError {
            stage: Stage::Compile,
            variant: variant.stem(),
            message: format!("cannot create {}: {e}", work_dir.display()),
            stderr: String::new(),
        });
    }
    let bin = work_dir.join(format!("{}.bin", variant.stem()));
    let mut last = None;
    for n in 0..=cfg.retries {
        match attempt(variant, harness, &bin, cfg) {
            Ok(us) => return Ok(us),
            Err(e) => {
                log::warn!("attempt {} of {}: {e}", n + 1, cfg.retries + 1);
                last = Some(e);
            }
        }
    }
    Err(last.expect("at least one attempt"))
}
