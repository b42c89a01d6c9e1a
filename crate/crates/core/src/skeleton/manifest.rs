//! JSON dataset manifest listing sequence and annotation files.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{parse_annotations, parse_sequence, AnnotationTrack, SequenceMeta, Setting, SkeletonSequence, Task};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub sequence: PathBuf,
    #[serde(default)]
    pub annotations: Vec<PathBuf>,
    pub child_id: String,
    pub setting: Setting,
    pub task: Task,
}

impl ManifestEntry {
    pub fn meta(&self) -> SequenceMeta {
        SequenceMeta {
            child_id: self.child_id.clone(),
            setting: self.setting,
            task: self.task,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

/// A sequence with every annotation track listed for it.
#[derive(Debug, Clone)]
pub struct LoadedEntry {
    pub sequence: SkeletonSequence,
    pub tracks: Vec<AnnotationTrack>,
}

impl DatasetManifest {
    /// Reads a manifest; relative paths are resolved against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: DatasetManifest = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for entry in &mut manifest.entries {
            entry.sequence = resolve(base, &entry.sequence);
            for a in &mut entry.annotations {
                *a = resolve(base, a);
            }
        }
        manifest.check_unique_paths()?;
        Ok(manifest)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn check_unique_paths(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for entry in &self.entries {
            for p in std::iter::once(&entry.sequence).chain(entry.annotations.iter()) {
                if !seen.insert(p.clone()) {
                    return Err(Error::Validation(format!("path {} listed more than once", p.display())));
                }
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn load_entry(entry: &ManifestEntry) -> Result<LoadedEntry> {
    let sequence = parse_sequence(&entry.sequence, entry.meta())?;
    let tracks = entry
        .annotations
        .iter()
        .map(parse_annotations)
        .collect::<Result<Vec<_>>>()?;
    for track in &tracks {
        super::check_track_span(&sequence.timestamps(), track, 1.0 / sequence.nominal_rate)
            .map_err(|e| Error::Validation(format!("{}: {e}", entry.sequence.display())))?;
    }
    Ok(LoadedEntry { sequence, tracks })
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_layout() {
        let json = r#"{"entries":[{"sequence":"a.csv","annotations":["a_r1.csv"],"child_id":"c1","setting":"A","task":"forming_angles"}]}"#;
        let m: DatasetManifest = serde_json::from_str(json).unwrap();
        assert_eq!(m.entries[0].setting, Setting::A);
        assert_eq!(m.entries[0].task, Task::FormingAngles);
        assert!(m.check_unique_paths().is_ok());
    }

    #[test]
    fn duplicate_paths_rejected() {
        let json = r#"{"entries":[
            {"sequence":"a.csv","annotations":[],"child_id":"c1","setting":"A","task":"forming_angles"},
            {"sequence":"a.csv","annotations":[],"child_id":"c2","setting":"B","task":"sums_rotating"}]}"#;
        let m: DatasetManifest = serde_json::from_str(json).unwrap();
        assert!(m.check_unique_paths().is_err());
    }
}
