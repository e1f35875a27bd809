//! On-disk layout of a pipeline run: one directory per stage.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use tabletask_core::layout::Layout;
use tabletask_core::scene::{parse_scenario, TaskScenario};

use crate::error::{CliError, Result};

#[derive(Debug, Clone)]
pub struct RunDir {
    pub root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn scenarios(&self) -> PathBuf {
        self.root.join("scenarios")
    }

    pub fn layouts(&self) -> PathBuf {
        self.root.join("layouts")
    }

    pub fn episodes(&self) -> PathBuf {
        self.root.join("episodes")
    }

    pub fn curation(&self) -> PathBuf {
        self.root.join("curation")
    }

    pub fn results(&self) -> PathBuf {
        self.root.join("results.jsonl")
    }

    pub fn report_text(&self) -> PathBuf {
        self.root.join("report.txt")
    }

    pub fn report_json(&self) -> PathBuf {
        self.root.join("report.json")
    }

    pub fn scenario_path(&self, id: &str) -> PathBuf {
        self.scenarios().join(format!("{id}.json"))
    }

    pub fn layout_path(&self, id: &str) -> PathBuf {
        self.layouts().join(format!("{id}.json"))
    }

    pub fn episode_path(&self, id: &str) -> PathBuf {
        self.episodes().join(format!("{id}.json"))
    }

    pub fn curation_path(&self, id: &str) -> PathBuf {
        self.curation().join(format!("{id}.json"))
    }

    /// Every scenario file, sorted by file name.
    pub fn load_scenarios(&self) -> Result<Vec<TaskScenario>> {
        let dir = self.scenarios();
        let files = json_files(&dir).map_err(|_| stage_mismatch(&dir, "generate"))?;
        if files.is_empty() {
            return Err(stage_mismatch(&dir, "generate"));
        }
        files
            .iter()
            .map(|p| {
                let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                parse_scenario(&text).map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))
            })
            .collect()
    }

    pub fn load_layout(&self, id: &str) -> Result<Layout> {
        let path = self.layout_path(id);
        if !path.exists() {
            return Err(stage_mismatch(&path, "solve"));
        }
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        Layout::from_json(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    /// Creates `dir` and proves it is writable before any artifact lands.
    pub fn prepare(dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let probe = dir.join(".write-probe");
        fs::write(&probe, b"").map_err(|e| CliError::io(dir, e))?;
        fs::remove_file(&probe).map_err(|e| CliError::io(&probe, e))
    }
}

pub fn stage_mismatch(missing: &Path, stage: &str) -> CliError {
    CliError::Validation(format!(
        "stage mismatch: {} is missing; run `{stage}` first",
        missing.display()
    ))
}

pub fn json_files(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    out.sort();
    Ok(out)
}

/// Writes through a sibling temporary file so readers never see a torn file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, contents).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}
