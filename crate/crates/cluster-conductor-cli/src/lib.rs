//! Library side of the `cluster-conductor` command: argument types, grid
//! runners and the commands themselves, kept out of `main` for testing.

pub mod args;
pub mod commands;
pub mod grid;

use serde_json::{json, Value};

pub use args::{Cli, Command};

pub const THREADS_ENV: &str = "CLUSTER_CONDUCTOR_THREADS";

/// Text for stdout, an optional JSON payload for stderr, and the exit code.
#[derive(Debug)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: Option<Value>,
    pub code: i32,
}

impl Outcome {
    pub fn ok(stdout: String) -> Self {
        Outcome { stdout, stderr: None, code: 0 }
    }

    pub fn mismatch(stdout: String, report: Value) -> Self {
        Outcome { stdout, stderr: Some(report), code: 1 }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: String,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, kind: &str, message: String) -> Self {
        CliError { code, kind: kind.to_string(), message }
    }

    pub fn to_json(&self) -> Value {
        json!({"error": self.kind, "message": self.message})
    }
}

impl From<cluster_conductor::Error> for CliError {
    fn from(e: cluster_conductor::Error) -> Self {
        CliError::new(2, e.kind(), e.to_string())
    }
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::new(2, "config", format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::new(2, "config", e.to_string()))
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let pool = thread_pool()?;
    pool.install(|| match &cli.command {
        Command::Picture(a) => commands::run_picture(a),
        Command::Conductor(a) => commands::run_conductor(a),
        Command::Verify(a) => commands::run_verify(a),
        Command::Table(a) => commands::run_table(a),
        Command::Generic(a) => commands::run_generic(a),
    })
}
