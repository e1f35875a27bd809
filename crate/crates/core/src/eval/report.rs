use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{EpisodeResult, EvalError};
use crate::scene::{TaskScenario, TaskType};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub n: usize,
    pub sr: f64,
    pub spl: f64,
}

impl ReportRow {
    fn of(label: impl Into<String>, results: &[&EpisodeResult]) -> Result<Self, EvalError> {
        if results.is_empty() {
            return Err(EvalError::Empty);
        }
        let n = results.len() as f64;
        Ok(Self {
            label: label.into(),
            n: results.len(),
            sr: results.iter().map(|r| r.score).sum::<f64>() / n,
            spl: results.iter().map(|r| r.spl_term()).sum::<f64>() / n,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub n: usize,
    /// One row per task type present, then "Overall".
    pub by_task: Vec<ReportRow>,
    /// One row per horizon (atoms in the first conjunction).
    pub by_horizon: Vec<ReportRow>,
    /// Counts of unsuccessful episodes by how they ended.
    pub failures: BTreeMap<String, usize>,
    pub notes: Vec<String>,
}

impl BenchmarkReport {
    pub fn overall(&self) -> &ReportRow {
        self.by_task.last().expect("overall row")
    }

    pub fn task(&self, t: TaskType) -> Option<&ReportRow> {
        self.by_task.iter().find(|r| r.label == t.title())
    }

    pub fn horizon(&self, h: usize) -> Option<&ReportRow> {
        self.by_horizon.iter().find(|r| r.label == h.to_string())
    }

    /// Aligned plain-text tables.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let table = |out: &mut String, head: &str, rows: &[ReportRow]| {
            let w = rows.iter().map(|r| r.label.len()).chain([head.len()]).max().unwrap_or(0);
            let _ = writeln!(out, "{head:<w$}  {:>5}  {:>6}  {:>6}", "N", "SR", "SPL");
            for r in rows {
                let _ = writeln!(out, "{:<w$}  {:>5}  {:>6.3}  {:>6.3}", r.label, r.n, r.sr, r.spl);
            }
        };
        table(&mut out, "Task type", &self.by_task);
        out.push('\n');
        table(&mut out, "Horizon", &self.by_horizon);
        if !self.failures.is_empty() {
            out.push_str("\nFailures\n");
            for (k, v) in &self.failures {
                let _ = writeln!(out, "  {k}: {v}");
            }
        }
        for note in &self.notes {
            let _ = writeln!(out, "note: {note}");
        }
        out
    }
}

/// Aggregates episode results by task type and horizon.
pub fn report(results: &[EpisodeResult], scenarios: &[TaskScenario]) -> Result<BenchmarkReport, EvalError> {
    if results.is_empty() {
        return Err(EvalError::Empty);
    }
    let index: BTreeMap<&str, &TaskScenario> = scenarios.iter().map(|s| (s.id.as_str(), s)).collect();
    let mut by_type: BTreeMap<TaskType, Vec<&EpisodeResult>> = BTreeMap::new();
    let mut by_horizon: BTreeMap<usize, Vec<&EpisodeResult>> = BTreeMap::new();
    let mut failures = BTreeMap::new();
    for r in results {
        let s = index
            .get(r.scenario_id.as_str())
            .ok_or_else(|| EvalError::DanglingScenario(r.scenario_id.clone()))?;
        by_type.entry(s.task_type).or_default().push(r);
        by_horizon.entry(s.goals.horizon()).or_default().push(r);
        if !r.success {
            let why = match r.termination.as_deref() {
                None | Some("done") => "goals_unmet",
                Some(t) => t,
            };
            *failures.entry(why.to_string()).or_default() += 1;
        }
    }

    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for t in TaskType::ALL {
        match by_type.get(&t) {
            Some(rs) => rows.push(ReportRow::of(t.title(), rs)?),
            None => notes.push(format!("no episodes for task type {}", t.title())),
        }
    }
    let all: Vec<&EpisodeResult> = results.iter().collect();
    rows.push(ReportRow::of("Overall", &all)?);
    let horizon_rows = by_horizon
        .iter()
        .map(|(h, rs)| ReportRow::of(h.to_string(), rs))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(BenchmarkReport {
        n: results.len(),
        by_task: rows,
        by_horizon: horizon_rows,
        failures,
        notes,
    })
}
