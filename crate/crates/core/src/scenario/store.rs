use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use super::{Scenario, ScenarioInput};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("unknown scenario {0}")]
    NotFound(String),
    #[error("scenario {id} is at version {current}, not {expected}")]
    Conflict {
        id: String,
        expected: u64,
        current: u64,
    },
    #[error("store i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt document {0}")]
    Corrupt(String),
}

/// Directory of versioned scenario documents:
/// `<root>/<id>/v00000001.json`, `v00000002.json`, ... Every version is
/// written to a temporary file and renamed into place, so a crash never
/// leaves a partial document behind. Deleting writes a `deleted` marker and
/// keeps the history; ids are never reused.
pub struct ScenarioStore {
    root: PathBuf,
    writes: Mutex<()>,
}

const DELETED: &str = "deleted";

impl ScenarioStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(ScenarioStore {
            root,
            writes: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// `input.assignment` must already be filled in.
    pub fn create(&self, input: ScenarioInput) -> Result<Scenario, StoreError> {
        let _guard = self.writes.lock().unwrap_or_else(|e| e.into_inner());
        let next = self
            .ids()?
            .iter()
            .filter_map(|id| parse_id(id))
            .max()
            .unwrap_or(0)
            + 1;
        let id = format!("sc-{next:06}");
        fs::create_dir_all(self.root.join(&id))?;
        let s = scenario(id, 1, input);
        self.write(&s)?;
        Ok(s)
    }

    pub fn get(&self, id: &str) -> Result<Scenario, StoreError> {
        let dir = self.dir(id)?;
        let version = latest_version(&dir)?.ok_or_else(|| StoreError::NotFound(id.into()))?;
        let path = dir.join(file_name(version));
        let text = fs::read_to_string(&path)?;
        serde_json::from_str(&text).map_err(|_| StoreError::Corrupt(path.display().to_string()))
    }

    /// Live scenarios, by id.
    pub fn list(&self) -> Result<Vec<Scenario>, StoreError> {
        let mut out = Vec::new();
        for id in self.ids()? {
            match self.get(&id) {
                Ok(s) => out.push(s),
                Err(StoreError::NotFound(_)) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }

    /// Writes a new version if the stored one is `expected_version`.
    pub fn update(
        &self,
        id: &str,
        expected_version: u64,
        input: ScenarioInput,
    ) -> Result<Scenario, StoreError> {
        let _guard = self.writes.lock().unwrap_or_else(|e| e.into_inner());
        let current = self.get(id)?;
        if current.version != expected_version {
            return Err(StoreError::Conflict {
                id: id.into(),
                expected: expected_version,
                current: current.version,
            });
        }
        let s = scenario(id.into(), current.version + 1, input);
        self.write(&s)?;
        Ok(s)
    }

    pub fn delete(&self, id: &str) -> Result<(), StoreError> {
        let _guard = self.writes.lock().unwrap_or_else(|e| e.into_inner());
        self.get(id)?;
        let dir = self.dir(id)?;
        atomic_write(&dir, DELETED, b"")?;
        Ok(())
    }

    fn dir(&self, id: &str) -> Result<PathBuf, StoreError> {
        if parse_id(id).is_none() {
            return Err(StoreError::NotFound(id.into()));
        }
        let dir = self.root.join(id);
        if !dir.is_dir() || dir.join(DELETED).exists() {
            return Err(StoreError::NotFound(id.into()));
        }
        Ok(dir)
    }

    fn ids(&self) -> Result<Vec<String>, StoreError> {
        let mut ids: Vec<String> = fs::read_dir(&self.root)?
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().into_string().ok())
            .filter(|n| parse_id(n).is_some())
            .collect();
        ids.sort();
        Ok(ids)
    }

    fn write(&self, s: &Scenario) -> Result<(), StoreError> {
        let body = serde_json::to_vec_pretty(s).expect("plain data");
        atomic_write(&self.root.join(&s.id), &file_name(s.version), &body)
    }
}

fn scenario(id: String, version: u64, input: ScenarioInput) -> Scenario {
    Scenario {
        id,
        version,
        name: input.name,
        curriculum_source: input.curriculum_source,
        assignment: input.assignment.unwrap_or_default(),
        schedule: input.schedule,
        horizon: input.horizon,
    }
}

fn parse_id(id: &str) -> Option<u64> {
    let digits = id.strip_prefix("sc-")?;
    if digits.len() == 6 && digits.bytes().all(|b| b.is_ascii_digit()) {
        digits.parse().ok()
    } else {
        None
    }
}

fn file_name(version: u64) -> String {
    format!("v{version:08}.json")
}

fn latest_version(dir: &Path) -> Result<Option<u64>, StoreError> {
    Ok(fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter_map(|n| {
            let v = n.strip_prefix('v')?.strip_suffix(".json")?;
            (v.len() == 8).then(|| v.parse().ok()).flatten()
        })
        .max())
}

fn atomic_write(dir: &Path, name: &str, body: &[u8]) -> Result<(), StoreError> {
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp)?;
    f.write_all(body)?;
    f.sync_all()?;
    fs::rename(&tmp, dir.join(name))?;
    Ok(())
}
