use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{NormalizationStats, PatternId, Source};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    None,
}

/// Dataset-wide clip geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoConfig {
    pub frames: u16,
    pub height: u16,
    pub width: u16,
    pub fps: u8,
}

impl VideoConfig {
    /// 16 frames of 64x64 at 4 fps.
    pub const DESK: VideoConfig = VideoConfig {
        frames: 16,
        height: 64,
        width: 64,
        fps: 4,
    };

    /// 50 frames of 224x224 at 10 fps (5 s clips).
    pub const FULL: VideoConfig = VideoConfig {
        frames: 50,
        height: 224,
        width: 224,
        fps: 10,
    };

    pub fn duration(&self) -> f64 {
        f64::from(self.frames) / f64::from(self.fps)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 || self.height == 0 || self.width == 0 || self.fps == 0 {
            return Err(Error::InvalidConfig(format!("degenerate video config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub sample_id: String,
    /// Video container path, relative to the manifest's directory.
    pub path: String,
    pub class_id: u8,
    #[serde(serialize_with = "crate::dataset::json_f64::serialize")]
    pub nu: f64,
    #[serde(serialize_with = "crate::dataset::json_f64::serialize")]
    pub omega_rpm: f64,
    pub pattern_id: PatternId,
    pub lighting_id: u8,
    pub source: Source,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub norm_stats: NormalizationStats,
    pub video_config: VideoConfig,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeaderRecord {
    norm_stats: NormalizationStats,
    video_config: VideoConfig,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        self.norm_stats.validate()?;
        self.video_config.validate()?;
        let mut seen = HashSet::with_capacity(self.entries.len());
        for e in &self.entries {
            if !seen.insert(e.sample_id.as_str()) {
                return Err(Error::InvalidManifest(format!("duplicate sample_id `{}`", e.sample_id)));
            }
            validate_entry(e).map_err(|m| Error::InvalidManifest(format!("{}: {m}", e.sample_id)))?;
        }
        Ok(())
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    /// Recomputes normalization statistics from the training split (all
    /// entries if nothing is labelled train).
    pub fn recompute_norm_stats(&mut self) -> Result<()> {
        let train: Vec<f64> = self.split(Split::Train).map(|e| e.nu).collect();
        let nus = if train.is_empty() {
            self.entries.iter().map(|e| e.nu).collect()
        } else {
            train
        };
        self.norm_stats = NormalizationStats::from_viscosities(nus)?;
        Ok(())
    }

    /// Absolute path of an entry's video, given the manifest file location.
    pub fn video_path(manifest_path: &Path, entry: &ManifestEntry) -> PathBuf {
        let p = Path::new(&entry.path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            manifest_path.parent().unwrap_or(Path::new(".")).join(p)
        }
    }
}

fn validate_entry(e: &ManifestEntry) -> std::result::Result<(), String> {
    if e.sample_id.is_empty() {
        return Err("empty sample_id".into());
    }
    if usize::from(e.class_id) >= super::NUM_CLASSES {
        return Err(format!("class_id {} out of range", e.class_id));
    }
    if !(e.nu > 0.0) || !e.nu.is_finite() {
        return Err(format!("nu {} must be positive", e.nu));
    }
    if !(0.0..=1000.0).contains(&e.omega_rpm) {
        return Err(format!("omega_rpm {} outside [0, 1000]", e.omega_rpm));
    }
    if e.lighting_id > 4 {
        return Err(format!("lighting_id {} outside 0..=4", e.lighting_id));
    }
    Ok(())
}

/// Writes the manifest as JSON lines: a header record followed by one
/// record per entry.
pub fn save_manifest(manifest: &DatasetManifest, path: &Path) -> Result<()> {
    manifest.validate()?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let header = HeaderRecord {
        norm_stats: manifest.norm_stats,
        video_config: manifest.video_config,
    };
    let mut write_line = |s: String| -> Result<()> {
        w.write_all(s.as_bytes())
            .and_then(|_| w.write_all(b"\n"))
            .map_err(|e| Error::io(path, e))
    };
    write_line(serde_json::to_string(&header)?)?;
    for e in &manifest.entries {
        write_line(serde_json::to_string(e)?)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut header: Option<HeaderRecord> = None;
    let mut entries = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |e: serde_json::Error| Error::ManifestParse {
            line: line_no,
            message: e.to_string(),
        };
        if header.is_none() {
            header = Some(serde_json::from_str(&line).map_err(parse_err)?);
            continue;
        }
        let entry: ManifestEntry = serde_json::from_str(&line).map_err(parse_err)?;
        validate_entry(&entry).map_err(|message| Error::ManifestParse { line: line_no, message })?;
        entries.push(entry);
    }
    let header = header.ok_or_else(|| Error::ManifestParse {
        line: 1,
        message: "missing header record".into(),
    })?;
    let manifest = DatasetManifest {
        entries,
        norm_stats: header.norm_stats,
        video_config: header.video_config,
    };
    manifest.validate()?;
    Ok(manifest)
}
