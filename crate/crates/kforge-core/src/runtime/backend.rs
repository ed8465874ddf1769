//! Stage-2 (HLS) compiler drivers. The MOCK backend packages the OpenCL C
//! source verbatim, optionally after an artificial delay, standing in for a
//! vendor toolchain at desk scale. The EXTERNAL backend shells out to a
//! configured command template, enabling real HLS toolchains.

use std::io::Write;
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

/// Environment variable holding the external command template.
pub const HLS_CMD_ENV: &str = "KFORGE_HLS_CMD";

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("no HLS backend available: {0}")]
    BackendUnavailable(String),
    #[error("external HLS tool failed with exit code {code}: {stderr}")]
    ExternalToolFailure { code: i32, stderr: String },
    #[error("external HLS tool i/o error: {0}")]
    ToolIo(String),
}

#[derive(Debug, Default)]
pub struct MockHlsBackend {
    delay: Option<Duration>,
    calls: AtomicU64,
}

impl MockHlsBackend {
    pub fn new(delay_ms: Option<u64>) -> Self {
        MockHlsBackend {
            delay: delay_ms.map(Duration::from_millis),
            calls: AtomicU64::new(0),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    fn compile(&self, source: &str) -> Result<Vec<u8>, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if let Some(d) = self.delay {
            std::thread::sleep(d);
        }
        Ok(source.as_bytes().to_vec())
    }
}

/// Invokes a user-configured command with `{input}`/`{output}` placeholders
/// substituted by the `.cl` source path and the expected artifact path.
#[derive(Debug, Clone)]
pub struct ExternalHlsBackend {
    pub template: String,
}

impl ExternalHlsBackend {
    pub fn from_env() -> Option<Self> {
        std::env::var(HLS_CMD_ENV)
            .ok()
            .filter(|t| !t.trim().is_empty())
            .map(|template| ExternalHlsBackend { template })
    }

    fn compile(&self, source: &str, entry: &str) -> Result<Vec<u8>, BackendError> {
        let dir = std::env::temp_dir();
        let tag = format!("kforge-{}-{}", std::process::id(), entry);
        let input = dir.join(format!("{tag}.cl"));
        let output = dir.join(format!("{tag}.bin"));
        let mut f = std::fs::File::create(&input).map_err(|e| BackendError::ToolIo(e.to_string()))?;
        f.write_all(source.as_bytes())
            .map_err(|e| BackendError::ToolIo(e.to_string()))?;
        drop(f);

        let cmd = self
            .template
            .replace("{input}", &input.to_string_lossy())
            .replace("{output}", &output.to_string_lossy());
        let result = Command::new("sh")
            .arg("-c")
            .arg(&cmd)
            .output()
            .map_err(|e| BackendError::ToolIo(e.to_string()))?;
        if !result.status.success() {
            return Err(BackendError::ExternalToolFailure {
                code: result.status.code().unwrap_or(-1),
                stderr: String::from_utf8_lossy(&result.stderr).into_owned(),
            });
        }
        let payload = std::fs::read(&output).map_err(|e| {
            BackendError::ToolIo(format!(
                "tool exited 0 but produced no output at {}: {e}",
                output.display()
            ))
        })?;
        let _ = std::fs::remove_file(&input);
        let _ = std::fs::remove_file(&output);
        Ok(payload)
    }
}

/// The configured stage-2 driver.
#[derive(Debug, Clone)]
pub enum Backend {
    Mock(Arc<MockHlsBackend>),
    External(ExternalHlsBackend),
}

impl Backend {
    pub fn id(&self) -> &'static str {
        match self {
            Backend::Mock(_) => "mock",
            Backend::External(_) => "external",
        }
    }

    /// Runs the backend on a worker thread and awaits the result, mirroring
    /// the separate-compilation-thread structure of the full JIT mode.
    pub fn compile(&self, source: &str, entry: &str) -> Result<Vec<u8>, BackendError> {
        std::thread::scope(|scope| {
            scope
                .spawn(|| match self {
                    Backend::Mock(m) => m.compile(source),
                    Backend::External(e) => e.compile(source, entry),
                })
                .join()
                .expect("HLS worker thread panicked")
        })
    }
}
