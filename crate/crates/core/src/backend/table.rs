use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use super::{arity_error, Backend, BackendMode, BackendOutput, Score, ScoreInput, ScoreKind};
use crate::error::{Error, Result};
use crate::pipeline::{csv_writer, parse_f64};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Key {
    Single(String),
    /// Stored with the smaller path first; lookups are symmetric.
    Pair(String, String),
}

impl Key {
    fn from_input(input: ScoreInput<'_>) -> Self {
        match input {
            ScoreInput::Single(a) => Key::Single(a.to_string()),
            ScoreInput::Pair(a, b) if a <= b => Key::Pair(a.to_string(), b.to_string()),
            ScoreInput::Pair(a, b) => Key::Pair(b.to_string(), a.to_string()),
        }
    }

    fn describe(&self) -> String {
        match self {
            Key::Single(a) => a.clone(),
            Key::Pair(a, b) => format!("({a}, {b})"),
        }
    }
}

/// Scores exported by an external model, keyed by image path or path pair.
///
/// CSV layout, selected by the header:
/// - identity: `path1,v0,...,v{n-1}`
/// - pair: `path1,path2,v0,v1` (`[same, different]`)
/// - distance: `path1,path2,distance`
#[derive(Debug, Clone, PartialEq)]
pub struct PrecomputedScoreTable {
    kind: ScoreKind,
    dim: usize,
    entries: BTreeMap<Key, Vec<f64>>,
}

impl PrecomputedScoreTable {
    /// An empty table; `dim` is the activation length (ignored for distances).
    pub fn new(kind: ScoreKind, dim: usize) -> Result<Self> {
        let dim = match kind {
            ScoreKind::Distance => 1,
            ScoreKind::Pair if dim != 2 => return Err(Error::DimensionMismatch { expected: 2, got: dim }),
            _ if dim < 2 => return Err(Error::InvalidArgument("activations need at least two entries".into())),
            _ => dim,
        };
        Ok(Self { kind, dim, entries: BTreeMap::new() })
    }

    pub fn kind(&self) -> ScoreKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, input: ScoreInput<'_>, values: Vec<f64>) -> Result<()> {
        let single = matches!(input, ScoreInput::Single(_));
        if single != (self.kind == ScoreKind::Identity) {
            return Err(arity_error(self.kind, input));
        }
        let empty = match input {
            ScoreInput::Single(a) => a.is_empty(),
            ScoreInput::Pair(a, b) => a.is_empty() || b.is_empty(),
        };
        if empty {
            return Err(Error::InvalidArgument("empty image path".into()));
        }
        if values.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: values.len() });
        }
        match self.kind {
            ScoreKind::Identity => drop(BackendOutput::new(BackendMode::Identity, values.clone())?),
            ScoreKind::Pair => drop(BackendOutput::new(BackendMode::Pair, values.clone())?),
            ScoreKind::Distance => {
                if !(values[0].is_finite() && values[0] >= 0.0) {
                    return Err(Error::InvalidArgument(format!("distance {} is not finite and ≥ 0", values[0])));
                }
            }
        }
        let key = Key::from_input(input);
        if self.entries.contains_key(&key) {
            return Err(Error::DuplicateKey(key.describe()));
        }
        self.entries.insert(key, values);
        Ok(())
    }

    pub fn get(&self, input: ScoreInput<'_>) -> Option<&[f64]> {
        self.entries.get(&Key::from_input(input)).map(Vec::as_slice)
    }

    /// Every image path referenced by the table.
    pub fn paths(&self) -> std::collections::BTreeSet<&str> {
        self.entries
            .keys()
            .flat_map(|k| match k {
                Key::Single(a) => vec![a.as_str()],
                Key::Pair(a, b) => vec![a.as_str(), b.as_str()],
            })
            .collect()
    }

    /// Check that every referenced path is known to the evaluation manifest.
    pub fn validate_paths(&self, known: impl Fn(&str) -> bool) -> Result<()> {
        let missing: Vec<&str> = self.paths().into_iter().filter(|p| !known(p)).collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "{} score-table paths are not in the manifest, first: {}",
                missing.len(),
                missing[0]
            )))
        }
    }

    /// Record exactly what `backend` emits for `inputs`.
    pub fn capture(backend: &dyn Backend, inputs: &[ScoreInput<'_>]) -> Result<Self> {
        let scores: Vec<Score> = inputs.par_iter().map(|&i| backend.score(i)).collect::<Result<_>>()?;
        let dim = match scores.first() {
            Some(Score::Activation(a)) => a.activation().len(),
            _ => 2,
        };
        let mut table = Self::new(backend.kind(), dim)?;
        for (&input, score) in inputs.iter().zip(scores) {
            let values = match score {
                Score::Activation(a) => a.activation().to_vec(),
                Score::Distance(d) => vec![d],
            };
            if table.get(input).is_none() {
                table.insert(input, values)?;
            }
        }
        Ok(table)
    }

    fn header(&self) -> Vec<String> {
        let mut h = vec!["path1".to_string()];
        if self.kind != ScoreKind::Identity {
            h.push("path2".into());
        }
        match self.kind {
            ScoreKind::Distance => h.push("distance".into()),
            _ => h.extend((0..self.dim).map(|i| format!("v{i}"))),
        }
        h
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = csv_writer(path)?;
        w.write_record(self.header())?;
        for (key, values) in &self.entries {
            let mut rec = match key {
                Key::Single(a) => vec![a.clone()],
                Key::Pair(a, b) => vec![a.clone(), b.clone()],
            };
            rec.extend(values.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_path(path)?;
        let mut records = r.records();
        let header = match records.next() {
            Some(h) => h?,
            None => return Err(Error::parse(path, 1, "missing header")),
        };
        let cols: Vec<&str> = header.iter().map(str::trim).collect();
        let (kind, n_keys) = match cols.as_slice() {
            ["path1", "path2", "distance"] => (ScoreKind::Distance, 2),
            ["path1", "path2", ..] => (ScoreKind::Pair, 2),
            ["path1", ..] => (ScoreKind::Identity, 1),
            _ => return Err(Error::parse(path, 1, "header must start with `path1`")),
        };
        let dim = cols.len() - n_keys;
        if kind != ScoreKind::Distance {
            let expected: Vec<String> = (0..dim).map(|i| format!("v{i}")).collect();
            if cols[n_keys..] != expected {
                return Err(Error::parse(path, 1, "activation columns must be named v0, v1, ..."));
            }
        }
        let mut table = Self::new(kind, dim).map_err(|e| Error::parse(path, 1, e.to_string()))?;
        for (i, rec) in records.enumerate() {
            let rec = rec?;
            let line = i + 2;
            if rec.len() != cols.len() {
                return Err(Error::parse(path, line, format!("expected {} fields, found {}", cols.len(), rec.len())));
            }
            let values = (n_keys..rec.len()).map(|j| parse_f64(path, line, &rec[j])).collect::<Result<Vec<_>>>()?;
            let input = match kind {
                ScoreKind::Identity => ScoreInput::Single(&rec[0]),
                _ => ScoreInput::Pair(&rec[0], &rec[1]),
            };
            table.insert(input, values).map_err(|e| match e {
                Error::DuplicateKey(k) => Error::DuplicateKey(format!("{k} at {}:{line}", path.display())),
                other => Error::parse(path, line, other.to_string()),
            })?;
        }
        Ok(table)
    }
}

impl Backend for PrecomputedScoreTable {
    fn kind(&self) -> ScoreKind {
        self.kind
    }

    fn score(&self, input: ScoreInput<'_>) -> Result<Score> {
        if matches!(input, ScoreInput::Single(_)) != (self.kind == ScoreKind::Identity) {
            return Err(arity_error(self.kind, input));
        }
        let values = self
            .get(input)
            .ok_or_else(|| Error::MissingScore(Key::from_input(input).describe()))?;
        Ok(match self.kind {
            ScoreKind::Identity => Score::Activation(BackendOutput::new(BackendMode::Identity, values.to_vec())?),
            ScoreKind::Pair => Score::Activation(BackendOutput::new(BackendMode::Pair, values.to_vec())?),
            ScoreKind::Distance => Score::Distance(values[0]),
        })
    }
}
