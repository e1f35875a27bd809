use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::str::FromStr;

use tabletask_core::layout::Layout;
use tabletask_core::scene::TaskScenario;
use tabletask_core::sim::{NoisyPolicy, NullPolicy, Observation, OraclePolicy, Policy, PolicyError, SkillCall};
use tabletask_core::util::mix_seed;

use crate::config::EngineConfig;
use crate::error::CliError;

pub const DEFAULT_NOISE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    Oracle,
    Null,
    Noisy(f64),
    /// Shell command speaking one JSON record per line on stdio.
    Exec(String),
}

impl FromStr for PolicySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "oracle" => Ok(PolicySpec::Oracle),
            None if s == "null" => Ok(PolicySpec::Null),
            None if s == "noisy" => Ok(PolicySpec::Noisy(DEFAULT_NOISE)),
            Some(("noisy", p)) => match p.parse::<f64>() {
                Ok(p) if (0.0..=1.0).contains(&p) => Ok(PolicySpec::Noisy(p)),
                _ => Err(format!("noisy failure probability {p:?} is not in [0, 1]")),
            },
            Some(("exec", cmd)) if !cmd.trim().is_empty() => Ok(PolicySpec::Exec(cmd.to_string())),
            _ => Err(format!("unknown policy {s:?} (oracle, null, noisy[:p], exec:<command>)")),
        }
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::Oracle => f.write_str("oracle"),
            PolicySpec::Null => f.write_str("null"),
            PolicySpec::Noisy(p) => write!(f, "noisy:{p}"),
            PolicySpec::Exec(cmd) => write!(f, "exec:{cmd}"),
        }
    }
}

impl PolicySpec {
    pub fn build(&self, s: &TaskScenario, layout: &Layout, cfg: &EngineConfig) -> Result<Box<dyn Policy>, CliError> {
        let oracle = || OraclePolicy::new(s, layout, &cfg.sim, &cfg.thresholds);
        Ok(match self {
            PolicySpec::Oracle => Box::new(oracle()),
            PolicySpec::Null => Box::new(NullPolicy),
            PolicySpec::Noisy(p) => Box::new(NoisyPolicy::new(oracle(), *p, mix_seed(cfg.seed, s.seed))),
            PolicySpec::Exec(cmd) => Box::new(ExternalPolicy::spawn(cmd)?),
        })
    }
}

/// A policy in a child process: one observation per line on its stdin,
/// one skill call per line on its stdout.
pub struct ExternalPolicy {
    command: String,
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl ExternalPolicy {
    pub fn spawn(command: &str) -> Result<Self, CliError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| CliError::Validation(format!("cannot start policy {command:?}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(Self {
            command: command.to_string(),
            child,
            stdin,
            stdout,
        })
    }
}

impl Policy for ExternalPolicy {
    fn name(&self) -> String {
        format!("exec:{}", self.command)
    }

    fn next_skill(&mut self, obs: &Observation) -> Result<SkillCall, PolicyError> {
        let line = serde_json::to_string(obs).map_err(|e| PolicyError(e.to_string()))?;
        writeln!(self.stdin, "{line}")
            .and_then(|_| self.stdin.flush())
            .map_err(|e| PolicyError(format!("policy stdin: {e}")))?;
        let mut reply = String::new();
        let n = self
            .stdout
            .read_line(&mut reply)
            .map_err(|e| PolicyError(format!("policy stdout: {e}")))?;
        if n == 0 {
            return Err(PolicyError("policy process closed its output".into()));
        }
        serde_json::from_str(reply.trim()).map_err(|e| PolicyError(format!("bad skill call {:?}: {e}", reply.trim())))
    }
}

impl Drop for ExternalPolicy {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
