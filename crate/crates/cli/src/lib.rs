//! Library side of the `expower` command: config handling, subcommands,
//! markdown and SVG rendering.

pub mod commands;
pub mod config;
pub mod plot;
pub mod report;

use std::fmt;

/// Worker-count override for the evaluation pool.
pub const WORKERS_ENV: &str = "EXPOWER_WORKERS";

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_CONTRACT: i32 = 4;
pub const EXIT_GATING: i32 = 5;

/// Bad flags, names or config values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Process exit code for a failed command.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    use expower_core::Error as E;
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Io { .. } | E::Format { .. } | E::Parse { .. } => EXIT_IO,
                E::EmptyCommittee(_) => EXIT_GATING,
                E::Config(_) => EXIT_USAGE,
                _ => EXIT_CONTRACT,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_IO;
        }
    }
    1
}

/// Threads for the evaluation pool: the environment override, else all cores.
pub fn worker_count() -> anyhow::Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(UsageError(format!("{WORKERS_ENV} must be a positive integer, got {v:?}")).into()),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::Context;

    #[test]
    fn exit_codes_by_cause() {
        let usage: anyhow::Error = UsageError("x".into()).into();
        assert_eq!(exit_code(&usage), EXIT_USAGE);
        let io: anyhow::Error = std::fs::read("/definitely/missing").context("reading").unwrap_err();
        assert_eq!(exit_code(&io), EXIT_IO);
        let gate: anyhow::Error = expower_core::Error::EmptyCommittee(vec![]).into();
        assert_eq!(exit_code(&gate.context("eval")), EXIT_GATING);
        let contract: anyhow::Error = expower_core::Error::InvalidInput("bad".into()).into();
        assert_eq!(exit_code(&contract), EXIT_CONTRACT);
    }
}
