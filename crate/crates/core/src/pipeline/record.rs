//! On-disk training records: `<id>.aug.nef`, `<id>.clean.nef` and a
//! `<id>.meta` sidecar of `key = value` lines.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::features::{FeatureRole, FeatureSequence};
use crate::room::Position;

pub const AUG_SUFFIX: &str = ".aug.nef";
pub const CLEAN_SUFFIX: &str = ".clean.nef";
pub const META_SUFFIX: &str = ".meta";

pub fn record_id(index: u64) -> String {
    format!("ex{index:08}")
}

/// Everything needed to identify and regenerate a record.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordMeta {
    pub id: String,
    pub index: u64,
    pub seed: u64,
    pub source: String,
    pub passthrough: bool,
    pub room_dimensions: [f64; 3],
    pub reflection_coefficient: f64,
    pub t60: f64,
    pub snr_db: f64,
    pub target_position: Position,
    pub mic_position: Position,
    pub noise_sources: Vec<String>,
    pub noise_positions: Vec<Position>,
    pub mix_seed: u64,
    pub applied_delay: usize,
    pub applied_gain: f64,
    pub epoch: f64,
    pub w: f64,
    pub lambda: f64,
    pub lr: f64,
    pub num_frames: usize,
    pub num_mel: usize,
}

fn fmt_pos(p: &Position) -> String {
    format!("{},{},{}", p[0], p[1], p[2])
}

fn parse_pos(s: &str) -> Option<Position> {
    let mut it = s.split(',').map(|v| v.trim().parse::<f64>());
    let p = [it.next()?.ok()?, it.next()?.ok()?, it.next()?.ok()?];
    it.next().is_none().then_some(p)
}

/// Splits sidecar text into keys and values. Duplicate keys are an error.
pub fn parse_sidecar(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::format("sidecar", format!("line {}: expected `key = value`", i + 1)));
        };
        let key = k.trim();
        if key.is_empty() {
            return Err(Error::format("sidecar", format!("line {}: empty key", i + 1)));
        }
        if map.insert(key.to_string(), v.trim().to_string()).is_some() {
            return Err(Error::format("sidecar", format!("duplicate key `{key}`")));
        }
    }
    Ok(map)
}

struct Fields(BTreeMap<String, String>);

impl Fields {
    fn raw(&self, key: &str) -> Result<&str> {
        self.0
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::format("sidecar", format!("missing `{key}`")))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        self.raw(key)?
            .parse()
            .map_err(|_| Error::format("sidecar", format!("bad value for `{key}`")))
    }

    fn pos(&self, key: &str) -> Result<Position> {
        parse_pos(self.raw(key)?).ok_or_else(|| Error::format("sidecar", format!("bad position for `{key}`")))
    }
}

impl RecordMeta {
    pub fn to_sidecar(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("id", self.id.clone());
        kv("index", self.index.to_string());
        kv("seed", self.seed.to_string());
        kv("source", self.source.clone());
        kv("passthrough", self.passthrough.to_string());
        kv("room", fmt_pos(&self.room_dimensions));
        kv("reflection_coefficient", self.reflection_coefficient.to_string());
        kv("t60", self.t60.to_string());
        kv("snr_db", self.snr_db.to_string());
        kv("target_position", fmt_pos(&self.target_position));
        kv("mic_position", fmt_pos(&self.mic_position));
        kv("noise_count", self.noise_positions.len().to_string());
        for (i, (name, pos)) in self.noise_sources.iter().zip(&self.noise_positions).enumerate() {
            kv(&format!("noise_source_{i}"), name.clone());
            kv(&format!("noise_position_{i}"), fmt_pos(pos));
        }
        kv("mix_seed", self.mix_seed.to_string());
        kv("applied_delay", self.applied_delay.to_string());
        kv("applied_gain", self.applied_gain.to_string());
        kv("epoch", self.epoch.to_string());
        kv("w", self.w.to_string());
        kv("lambda", self.lambda.to_string());
        kv("lr", self.lr.to_string());
        kv("num_frames", self.num_frames.to_string());
        kv("num_mel", self.num_mel.to_string());
        s
    }

    pub fn from_sidecar(text: &str) -> Result<Self> {
        let f = Fields(parse_sidecar(text)?);
        let noise_count: usize = f.get("noise_count")?;
        if noise_count > 1024 {
            return Err(Error::format("sidecar", "noise_count too large"));
        }
        let mut noise_sources = Vec::with_capacity(noise_count);
        let mut noise_positions = Vec::with_capacity(noise_count);
        for i in 0..noise_count {
            noise_sources.push(f.raw(&format!("noise_source_{i}"))?.to_string());
            noise_positions.push(f.pos(&format!("noise_position_{i}"))?);
        }
        Ok(RecordMeta {
            id: f.raw("id")?.to_string(),
            index: f.get("index")?,
            seed: f.get("seed")?,
            source: f.raw("source")?.to_string(),
            passthrough: f.get("passthrough")?,
            room_dimensions: f.pos("room")?,
            reflection_coefficient: f.get("reflection_coefficient")?,
            t60: f.get("t60")?,
            snr_db: f.get("snr_db")?,
            target_position: f.pos("target_position")?,
            mic_position: f.pos("mic_position")?,
            noise_sources,
            noise_positions,
            mix_seed: f.get("mix_seed")?,
            applied_delay: f.get("applied_delay")?,
            applied_gain: f.get("applied_gain")?,
            epoch: f.get("epoch")?,
            w: f.get("w")?,
            lambda: f.get("lambda")?,
            lr: f.get("lr")?,
            num_frames: f.get("num_frames")?,
            num_mel: f.get("num_mel")?,
        })
    }
}

pub fn write_record(dir: &Path, meta: &RecordMeta, x_aug: &FeatureSequence, x_clean: &FeatureSequence) -> Result<()> {
    let write = |suffix: &str, bytes: &[u8]| {
        let path = dir.join(format!("{}{suffix}", meta.id));
        std::fs::write(&path, bytes).map_err(|e| Error::io(path, e))
    };
    write(AUG_SUFFIX, &x_aug.encode())?;
    write(CLEAN_SUFFIX, &x_clean.encode())?;
    write(META_SUFFIX, meta.to_sidecar().as_bytes())
}

/// Raw bytes of one stored record.
pub struct StoredRecord {
    pub meta_text: String,
    pub aug_bytes: Vec<u8>,
    pub clean_bytes: Vec<u8>,
}

impl StoredRecord {
    pub fn read(dir: &Path, id: &str) -> Result<Self> {
        let read = |suffix: &str| {
            let path = dir.join(format!("{id}{suffix}"));
            std::fs::read(&path).map_err(|e| Error::io(path, e))
        };
        let meta_text = String::from_utf8(read(META_SUFFIX)?)
            .map_err(|_| Error::format("sidecar", "not UTF-8"))?;
        Ok(StoredRecord { meta_text, aug_bytes: read(AUG_SUFFIX)?, clean_bytes: read(CLEAN_SUFFIX)? })
    }

    pub fn decode(&self) -> Result<(RecordMeta, FeatureSequence, FeatureSequence)> {
        Ok((
            RecordMeta::from_sidecar(&self.meta_text)?,
            FeatureSequence::decode(&self.aug_bytes, FeatureRole::Augmented)?,
            FeatureSequence::decode(&self.clean_bytes, FeatureRole::Clean)?,
        ))
    }
}

/// Ids of every record in `dir` with a sidecar, sorted.
pub fn list_records(dir: &Path) -> Result<Vec<String>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut ids = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        if let Some(id) = entry.file_name().to_str().and_then(|n| n.strip_suffix(META_SUFFIX)) {
            ids.push(id.to_string());
        }
    }
    ids.sort();
    Ok(ids)
}
