use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{RunConfig, Stage};
use super::stages::{execute, Layout, StageOutput};
use super::{read_json, write_json};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "run_manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub seconds: f64,
    /// Artifact path (relative to the run directory) → SHA-256.
    pub artifacts: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_hash: String,
    /// Worker threads; artifacts are bit-reproducible only at a fixed count.
    pub threads: usize,
    pub stages: Vec<StageRecord>,
}

impl RunManifest {
    pub fn new(cfg: &RunConfig) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: cfg.hash(),
            threads: rayon::current_num_threads(),
            stages: Vec::new(),
        }
    }

    pub fn record(&self, stage: Stage) -> Option<&StageRecord> {
        self.stages.iter().find(|r| r.stage == stage)
    }

    fn upsert(&mut self, rec: StageRecord) {
        match self.stages.iter_mut().find(|r| r.stage == rec.stage) {
            Some(slot) => *slot = rec,
            None => self.stages.push(rec),
        }
        self.stages.sort_by_key(|r| r.stage);
    }
}

fn relative(root: &Path, p: &Path) -> String {
    let rel = p.strip_prefix(root).unwrap_or(p);
    crate::synthgen::portable_path(rel)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(crate::seed::sha256_hex(&bytes))
}

fn checksums(root: &Path, out: &StageOutput) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for f in &out.files {
        map.insert(relative(root, f), sha256_file(f)?);
    }
    for (name, base, rels) in &out.image_sets {
        let mut h = Sha256::new();
        for rel in rels {
            h.update(rel.as_bytes());
            h.update(b"\t");
            h.update(sha256_file(&base.join(rel))?.as_bytes());
            h.update(b"\n");
        }
        map.insert(format!("{name}/ ({} images)", rels.len()), hex::encode(h.finalize()));
    }
    Ok(map)
}

pub fn manifest_path(cfg: &RunConfig) -> PathBuf {
    cfg.out_dir.join(MANIFEST_FILE)
}

/// Run one stage and record it in the run manifest.
pub fn run_stage(cfg: &RunConfig, stage: Stage) -> Result<StageRecord> {
    let layout = Layout::new(&cfg.out_dir);
    log::info!("stage {stage}: start");
    let start = Instant::now();
    let out = execute(cfg, stage, &layout)?;
    let seconds = start.elapsed().as_secs_f64();
    let rec = StageRecord { stage, seconds, artifacts: checksums(&cfg.out_dir, &out)? };
    log::info!("stage {stage}: done in {seconds:.1}s");

    let path = manifest_path(cfg);
    let mut manifest = match read_json::<RunManifest>(&path) {
        Ok(m) if m.config_hash == cfg.hash() => m,
        _ => RunManifest::new(cfg),
    };
    manifest.threads = rayon::current_num_threads();
    manifest.upsert(rec.clone());
    write_json(&path, &manifest)?;
    Ok(rec)
}

/// Run every configured stage in pipeline order, stopping at the first failure.
pub fn run_all(cfg: &RunConfig) -> Result<RunManifest> {
    let mut manifest = RunManifest::new(cfg);
    for stage in Stage::ALL.into_iter().filter(|s| cfg.stages.contains(s)) {
        manifest.upsert(run_stage(cfg, stage)?);
    }
    Ok(manifest)
}

/// Cap worker threads for the whole process; call once before any stage.
pub fn init_thread_pool(threads: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidArgument(format!("cannot configure {threads} threads: {e}")))
}
