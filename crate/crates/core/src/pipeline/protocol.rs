use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{Pair, PairLabel, PairList};
use crate::pipeline::csv_writer;
use crate::seed;
use crate::synthgen::{IdentityEntry, IdentityManifest, Split};

/// Every same-subject pair plus at most `max_imposters` seeded
/// different-subject pairs, in `(i, j)` order with `i < j`.
pub fn build_pairs(entries: &[&IdentityEntry], max_imposters: usize, seed_v: u64) -> PairList {
    let mut all = Vec::new();
    let mut imposters = Vec::new();
    for i in 0..entries.len() {
        for j in i + 1..entries.len() {
            if entries[i].subject == entries[j].subject {
                all.push((i, j, PairLabel::Genuine));
            } else {
                imposters.push((i, j));
            }
        }
    }
    if imposters.len() > max_imposters {
        let mut rng = seed::rng(seed_v);
        let mut keep = index::sample(&mut rng, imposters.len(), max_imposters).into_vec();
        keep.sort_unstable();
        imposters = keep.into_iter().map(|k| imposters[k]).collect();
    }
    all.extend(imposters.into_iter().map(|(i, j)| (i, j, PairLabel::Imposter)));
    all.sort_by_key(|&(i, j, _)| (i, j));
    let pairs = all
        .into_iter()
        .map(|(i, j, label)| Pair { path1: entries[i].path.clone(), path2: entries[j].path.clone(), label })
        .collect();
    PairList::new(pairs).expect("distinct index pairs cannot conflict")
}

/// One labeled image of an identification set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Enrolled {
    pub path: String,
    pub subject: String,
}

/// Gallery and probe images for identification.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GalleryProbe {
    pub gallery: Vec<Enrolled>,
    pub probes: Vec<Enrolled>,
}

impl GalleryProbe {
    /// First test image of each subject enrolls it; the remaining test images probe.
    pub fn from_manifest(m: &IdentityManifest) -> Self {
        let mut out = GalleryProbe::default();
        for e in m.split(Split::Test) {
            let item = Enrolled { path: e.path.clone(), subject: e.subject.clone() };
            if out.gallery.iter().any(|g| g.subject == e.subject) {
                out.probes.push(item);
            } else {
                out.gallery.push(item);
            }
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv_writer(path)?;
        w.write_record(["path", "subject", "role"])?;
        for (role, list) in [("gallery", &self.gallery), ("probe", &self.probes)] {
            for e in list {
                w.write_record([e.path.as_str(), e.subject.as_str(), role])?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
        if r.headers()?.iter().collect::<Vec<_>>() != ["path", "subject", "role"] {
            return Err(Error::parse(path, 1, "expected header `path,subject,role`"));
        }
        let mut out = GalleryProbe::default();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            if rec.len() != 3 {
                return Err(Error::parse(path, line, "expected 3 fields"));
            }
            let item = Enrolled { path: rec[0].to_string(), subject: rec[1].to_string() };
            match &rec[2] {
                "gallery" => out.gallery.push(item),
                "probe" => out.probes.push(item),
                other => return Err(Error::parse(path, line, format!("unknown role `{other}`"))),
            }
        }
        Ok(out)
    }
}
