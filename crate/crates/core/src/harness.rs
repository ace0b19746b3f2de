//! Wire protocol of the execution harness and single-process supervision.
//!
//! One request JSON goes to the harness on stdin; exactly one response JSON
//! line comes back on stdout. The bundled harness script is materialized to
//! the temp directory on first use unless a path is configured.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::OnceLock;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use wait_timeout::ChildExt;

use crate::error::{Error, Result};

/// Source of the bundled harness script.
pub const HARNESS_SOURCE: &str = include_str!("../harness/utd_harness.py");

/// Extra wall time granted to the harness process beyond its own timer.
pub const KILL_GRACE_MS: u64 = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HarnessMode {
    Call,
    Check,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessRequest {
    pub mode: HarnessMode,
    pub code: String,
    pub entry_point: String,
    pub args_expr: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_expr: Option<String>,
    pub timeout_ms: u64,
    pub float_abs_tol: f64,
    pub float_rel_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HarnessStatus {
    Ok,
    Exception,
    Timeout,
    LoadError,
    ArgError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessResponse {
    pub status: HarnessStatus,
    #[serde(default)]
    pub value_canon: Option<String>,
    #[serde(default)]
    pub equal: Option<bool>,
    #[serde(default)]
    pub error_type: Option<String>,
    #[serde(default)]
    pub error_msg: Option<String>,
    pub duration_ms: u64,
}

impl HarnessResponse {
    /// Checks the response invariants against the request mode.
    pub fn validate(&self, mode: HarnessMode) -> Result<()> {
        if self.status == HarnessStatus::Ok && self.value_canon.is_none() {
            return Err(Error::Infra("ok response without value_canon".into()));
        }
        let want_equal = mode == HarnessMode::Check && self.status == HarnessStatus::Ok;
        if want_equal != self.equal.is_some() {
            return Err(Error::Infra(format!(
                "equal field presence violates protocol (mode {mode:?}, status {:?})",
                self.status
            )));
        }
        Ok(())
    }

    pub fn timeout(elapsed_ms: u64, timeout_ms: u64) -> Self {
        Self {
            status: HarnessStatus::Timeout,
            value_canon: None,
            equal: None,
            error_type: Some("timeout".into()),
            error_msg: Some(format!("killed after exceeding {timeout_ms} ms")),
            duration_ms: elapsed_ms,
        }
    }
}

/// Everything observed from one harness process.
#[derive(Debug, Clone)]
pub struct RawReply {
    pub stdout: String,
    pub stderr: String,
    pub exit_code: Option<i32>,
    /// The controller killed the process at the hard deadline.
    pub killed: bool,
    pub elapsed: Duration,
}

/// Interpreter and script used to launch harness processes.
#[derive(Debug, Clone)]
pub struct HarnessCommand {
    pub python: String,
    pub script: PathBuf,
}

impl HarnessCommand {
    pub fn new(python: impl Into<String>, script: impl Into<PathBuf>) -> Self {
        Self {
            python: python.into(),
            script: script.into(),
        }
    }

    /// Bundled script, `UTD_HARNESS` / `UTD_PYTHON` overrides honored.
    pub fn bundled() -> Result<Self> {
        let python = std::env::var("UTD_PYTHON").unwrap_or_else(|_| "python3".into());
        let script = match std::env::var_os("UTD_HARNESS") {
            Some(p) => PathBuf::from(p),
            None => bundled_script_path()?,
        };
        Ok(Self { python, script })
    }

    /// Spawns one harness process, feeds `request`, and waits for it to
    /// exit or for `timeout_ms + KILL_GRACE_MS` to elapse.
    pub fn exchange_raw(&self, request: &[u8], timeout_ms: u64) -> std::io::Result<RawReply> {
        let started = Instant::now();
        let mut child = Command::new(&self.python)
            .arg("-I")
            .arg("-S")
            .arg(&self.script)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()?;

        let mut stdout = child.stdout.take().expect("piped stdout");
        let mut stderr = child.stderr.take().expect("piped stderr");
        let out_reader = thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stdout.read_to_end(&mut buf);
            buf
        });
        let err_reader = thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = (&mut stderr).take(16 * 1024).read_to_end(&mut buf);
            let _ = std::io::copy(&mut stderr, &mut std::io::sink());
            buf
        });

        if let Some(mut stdin) = child.stdin.take() {
            // a harness that dies early closes the pipe; that is reported via stdout
            let _ = stdin.write_all(request);
        }

        let deadline = Duration::from_millis(timeout_ms.saturating_add(KILL_GRACE_MS));
        let remaining = deadline.saturating_sub(started.elapsed());
        let (exit_code, killed) = match child.wait_timeout(remaining)? {
            Some(status) => (status.code(), false),
            None => {
                let _ = child.kill();
                let status = child.wait()?;
                (status.code(), true)
            }
        };
        let stdout = out_reader.join().unwrap_or_default();
        let stderr = err_reader.join().unwrap_or_default();
        Ok(RawReply {
            stdout: String::from_utf8_lossy(&stdout).into_owned(),
            stderr: String::from_utf8_lossy(&stderr).into_owned(),
            exit_code,
            killed,
            elapsed: started.elapsed(),
        })
    }

    /// One typed round trip. A killed process becomes a `timeout` response;
    /// anything unparseable is an infrastructure error.
    pub fn exchange(&self, request: &HarnessRequest) -> Result<HarnessResponse> {
        let body = serde_json::to_vec(request)?;
        let reply = self.exchange_raw(&body, request.timeout_ms)?;
        if reply.killed {
            return Ok(HarnessResponse::timeout(
                reply.elapsed.as_millis() as u64,
                request.timeout_ms,
            ));
        }
        let mut lines = reply.stdout.lines().filter(|l| !l.trim().is_empty());
        let line = lines.next().ok_or_else(|| {
            Error::Infra(format!(
                "harness produced no response (exit {:?}): {}",
                reply.exit_code,
                reply.stderr.trim()
            ))
        })?;
        if lines.next().is_some() {
            return Err(Error::Infra("harness wrote more than one line".into()));
        }
        let resp: HarnessResponse = serde_json::from_str(line)
            .map_err(|e| Error::Infra(format!("malformed harness response: {e}")))?;
        resp.validate(request.mode)?;
        Ok(resp)
    }
}

fn bundled_script_path() -> Result<PathBuf> {
    static PATH: OnceLock<std::result::Result<PathBuf, String>> = OnceLock::new();
    PATH.get_or_init(|| materialize(&std::env::temp_dir()).map_err(|e| e.to_string()))
        .clone()
        .map_err(Error::Config)
}

fn materialize(dir: &Path) -> Result<PathBuf> {
    let digest = hex::encode(Sha256::digest(HARNESS_SOURCE.as_bytes()));
    let path = dir.join(format!("utd_harness_{}.py", &digest[..16]));
    if std::fs::read_to_string(&path).ok().as_deref() != Some(HARNESS_SOURCE) {
        crate::model::write_atomic(&path, HARNESS_SOURCE.as_bytes())?;
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn response_invariants() {
        let ok_call = HarnessResponse {
            status: HarnessStatus::Ok,
            value_canon: Some("1".into()),
            equal: None,
            error_type: None,
            error_msg: None,
            duration_ms: 1,
        };
        assert!(ok_call.validate(HarnessMode::Call).is_ok());
        assert!(ok_call.validate(HarnessMode::Check).is_err());
        let mut no_value = ok_call.clone();
        no_value.value_canon = None;
        assert!(no_value.validate(HarnessMode::Call).is_err());
    }

    #[test]
    fn request_wire_names_are_snake_case() {
        let req = HarnessRequest {
            mode: HarnessMode::Check,
            code: "c".into(),
            entry_point: "f".into(),
            args_expr: vec!["1".into()],
            expected_expr: Some("2".into()),
            timeout_ms: 10,
            float_abs_tol: 1e-6,
            float_rel_tol: 1e-6,
        };
        let v: serde_json::Value = serde_json::to_value(&req).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        for k in [
            "mode",
            "code",
            "entry_point",
            "args_expr",
            "expected_expr",
            "timeout_ms",
            "float_abs_tol",
            "float_rel_tol",
        ] {
            assert!(keys.contains(&k.to_string()), "missing {k}");
        }
        assert_eq!(v["mode"], "check");
    }

    #[test]
    fn response_parses_harness_shape() {
        let line = r#"{"status": "load_error", "value_canon": null, "equal": null, "error_type": "SyntaxError", "error_msg": "x", "duration_ms": 2}"#;
        let r: HarnessResponse = serde_json::from_str(line).unwrap();
        assert_eq!(r.status, HarnessStatus::LoadError);
    }
}
