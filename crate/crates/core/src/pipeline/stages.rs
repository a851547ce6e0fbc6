use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{BackendKind, RunConfig, Stage};
use super::protocol::{build_pairs, Enrolled, GalleryProbe};
use super::{read_json, write_json};
use crate::backend::{
    reference_classifier_train, supervised_distance, BackendMode, LiveBackend, PrecomputedScoreTable,
    ReferenceClassifier, ReferenceConfig, ScoreInput, ScoreKind,
};
use crate::cost_space::{compute_centroids, encode_batch, CentroidSet, CostEncoder, FeatureScaler, FeatureTable, SubtypeCodes};
use crate::error::{Error, Result};
use crate::fusion::{
    activation_distance, cmc, fuse, fuse_records, grid_search_alpha, normalize_scores, verification_metrics,
    AlphaSearch, Channel, DistanceMetric, Normalization, PairList, ScoreSet,
};
use crate::mlp::{accuracy, init_mlp, train, MlpModel, TrainConfig};
use crate::seed;
use crate::sparse_dict::{encode_all, export_atoms, image_signal, learn_dictionary, Dictionary, Signal};
use crate::synthgen::{
    gen_dataset, gen_identity_dataset, gen_texture_standin_dataset, ingest_texture_dir, DatasetManifest,
    IdentityManifest, RasterImage, Split, SplitCounts, Subtype, STANDIN_CLASS_LIMIT,
};

/// Where every artifact lives under the run directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn data_dir(&self) -> PathBuf {
        self.root.join("data")
    }

    pub fn subtype_manifest(&self, s: Subtype) -> PathBuf {
        self.data_dir().join(format!("{s}_manifest.csv"))
    }

    pub fn identity_manifest(&self) -> PathBuf {
        self.data_dir().join("identity_manifest.csv")
    }

    pub fn pairs(&self, split: Split) -> PathBuf {
        self.data_dir().join(format!("pairs_{split}.csv"))
    }

    pub fn gallery_probe(&self) -> PathBuf {
        self.data_dir().join("gallery_probe.csv")
    }

    pub fn dictionary(&self, s: Subtype) -> PathBuf {
        self.root.join("dict").join(format!("{s}.json"))
    }

    pub fn atoms_png(&self, s: Subtype) -> PathBuf {
        self.root.join("dict").join(format!("{s}_atoms.png"))
    }

    pub fn learn_report(&self, s: Subtype) -> PathBuf {
        self.root.join("dict").join(format!("{s}_report.json"))
    }

    pub fn centroids(&self) -> PathBuf {
        self.root.join("cost").join("centroids.json")
    }

    pub fn features(&self) -> PathBuf {
        self.root.join("cost").join("features.csv")
    }

    pub fn cost_model(&self) -> PathBuf {
        self.root.join("models").join("cost_mlp.json")
    }

    pub fn cost_scaler(&self) -> PathBuf {
        self.root.join("models").join("cost_scaler.json")
    }

    pub fn cost_loss(&self) -> PathBuf {
        self.root.join("models").join("cost_loss.json")
    }

    pub fn backend_model(&self) -> PathBuf {
        self.root.join("models").join("backend.json")
    }

    pub fn backend_table(&self) -> PathBuf {
        self.root.join("models").join("backend_table.csv")
    }

    pub fn cost_activations(&self) -> PathBuf {
        self.root.join("scores").join("cost_activations.csv")
    }

    pub fn backend_scores(&self) -> PathBuf {
        self.root.join("scores").join("backend_scores.csv")
    }

    pub fn scores(&self, split: Split) -> PathBuf {
        self.root.join("scores").join(format!("scores_{split}.csv"))
    }

    pub fn score_meta(&self) -> PathBuf {
        self.root.join("scores").join("fusion.json")
    }

    pub fn identification_scores(&self) -> PathBuf {
        self.root.join("scores").join("identification.json")
    }

    pub fn fused_scores(&self, split: Split) -> PathBuf {
        self.root.join("fusion").join(format!("scores_{split}.csv"))
    }

    pub fn alpha_search(&self) -> PathBuf {
        self.root.join("fusion").join("alpha.json")
    }

    pub fn verification(&self) -> PathBuf {
        self.root.join("eval").join("verification.json")
    }

    pub fn roc(&self, c: Channel) -> PathBuf {
        self.root.join("eval").join(format!("roc_{}.csv", channel_name(c)))
    }

    pub fn identification(&self) -> PathBuf {
        self.root.join("eval").join("identification.json")
    }

    pub fn cmc(&self, c: Channel) -> PathBuf {
        self.root.join("eval").join(format!("cmc_{}.csv", channel_name(c)))
    }
}

pub fn channel_name(c: Channel) -> &'static str {
    match c {
        Channel::Cost => "cost",
        Channel::Supervised => "supervised",
        Channel::Fused => "fused",
    }
}

const CHANNELS: [Channel; 3] = [Channel::Fused, Channel::Cost, Channel::Supervised];

/// Files written by a stage. `image_sets` lists (name, root, relative paths)
/// of bulk image outputs, summarised by one digest each.
#[derive(Debug, Default)]
pub struct StageOutput {
    pub files: Vec<PathBuf>,
    pub image_sets: Vec<(String, PathBuf, Vec<String>)>,
}

fn require(stage: Stage, path: &Path, producer: Stage) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingDependency {
            stage: stage.to_string(),
            artifact: path.to_path_buf(),
            producer: producer.to_string(),
        })
    }
}

/// α and settings the stored fused column was built with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMeta {
    pub alpha: f64,
    pub normalization: Normalization,
    pub distance: DistanceMetric,
}

/// Raw probe × gallery distances for both channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationScores {
    pub gallery: Vec<Enrolled>,
    pub probes: Vec<Enrolled>,
    pub cost: Vec<Vec<f64>>,
    pub supervised: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelVerification {
    pub gar_at_1: f64,
    pub gar_at_01: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub alpha: f64,
    pub genuine_pairs: usize,
    pub imposter_pairs: usize,
    pub channels: BTreeMap<String, ChannelVerification>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationReport {
    pub alpha: f64,
    pub gallery_size: usize,
    pub probes: usize,
    pub rank1: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostTrainingReport {
    pub classes: Vec<String>,
    pub train_accuracy: f64,
    pub loss: Vec<f64>,
}

pub fn execute(cfg: &RunConfig, stage: Stage, layout: &Layout) -> Result<StageOutput> {
    let seed_v = seed::derive(cfg.seed, &[&stage.as_str()]);
    match stage {
        Stage::Gen => gen(cfg, layout, seed_v),
        Stage::LearnDict => learn_dict(cfg, layout, seed_v),
        Stage::Centroids => centroids(cfg, layout),
        Stage::Encode => encode(cfg, layout),
        Stage::TrainCost => train_cost(cfg, layout, seed_v),
        Stage::TrainBackend => train_backend(cfg, layout, seed_v),
        Stage::Score => score(cfg, layout),
        Stage::Fuse => fuse_stage(cfg, layout),
        Stage::EvalVerify => eval_verify(cfg, layout),
        Stage::EvalIdentify => eval_identify(cfg, layout),
    }
}

fn image_set(name: &str, m: &DatasetManifest) -> (String, PathBuf, Vec<String>) {
    let rels = m.entries.iter().map(|e| crate::synthgen::portable_path(&e.path)).collect();
    (name.to_string(), m.root.clone(), rels)
}

fn gen(cfg: &RunConfig, layout: &Layout, seed_v: u64) -> Result<StageOutput> {
    let d = &cfg.data;
    let data = layout.data_dir();
    let table = d.color_table();
    let mut out = StageOutput::default();

    let color = gen_dataset(Subtype::Color, d.color_per_class, seed::derive(seed_v, &[&"color"]), d.image_size, &data, table)?;
    let shape = gen_dataset(Subtype::Shape, d.shape_per_class, seed::derive(seed_v, &[&"shape"]), d.image_size, &data, table)?;
    let texture = match &d.texture_dir {
        Some(dir) => {
            let report = ingest_texture_dir(dir, d.image_size, &data)?;
            report.manifest.write_csv(&layout.subtype_manifest(Subtype::Texture))?;
            report.manifest
        }
        None => gen_texture_standin_dataset(
            d.texture_classes,
            d.texture_per_class,
            seed::derive(seed_v, &[&"texture"]),
            d.image_size,
            &data,
        )?,
    };
    for (s, m) in [(Subtype::Color, &color), (Subtype::Shape, &shape), (Subtype::Texture, &texture)] {
        log::info!("gen: {} {s} images", m.entries.len());
        out.files.push(layout.subtype_manifest(s));
        out.image_sets.push(image_set(&format!("data/{s}"), m));
    }

    let id = &cfg.identity;
    let counts = SplitCounts { train: id.train_per_subject, val: id.val_per_subject, test: id.test_per_subject };
    let identity = gen_identity_dataset(
        id.subjects,
        counts,
        d.texture_classes.clamp(1, STANDIN_CLASS_LIMIT),
        seed::derive(seed_v, &[&"identity"]),
        d.image_size,
        &data,
        table,
    )?;
    out.files.push(layout.identity_manifest());
    out.image_sets.push((
        "data/identity".into(),
        identity.root.clone(),
        identity.entries.iter().map(|e| e.path.clone()).collect(),
    ));
    for split in [Split::Val, Split::Test] {
        let entries: Vec<_> = identity.split(split).collect();
        let pairs = build_pairs(&entries, id.max_imposter_pairs, seed::derive(seed_v, &[&"pairs", &split.as_str()]));
        pairs.write_csv(&layout.pairs(split))?;
        out.files.push(layout.pairs(split));
    }
    GalleryProbe::from_manifest(&identity).write_csv(&layout.gallery_probe())?;
    out.files.push(layout.gallery_probe());
    Ok(out)
}

fn subtype_signals(m: &DatasetManifest, size: u32) -> Result<Vec<Signal>> {
    m.entries
        .par_iter()
        .map(|e| RasterImage::load(&m.resolve(e)).and_then(|img| image_signal(&img, size, size)))
        .collect()
}

fn load_subtype_manifest(stage: Stage, layout: &Layout, s: Subtype) -> Result<DatasetManifest> {
    let path = layout.subtype_manifest(s);
    require(stage, &path, Stage::Gen)?;
    DatasetManifest::read_csv(&path)
}

fn learn_dict(cfg: &RunConfig, layout: &Layout, seed_v: u64) -> Result<StageOutput> {
    let dc = &cfg.dictionary;
    let params = dc.coding_params();
    let mut out = StageOutput::default();
    for s in Subtype::ALL {
        let m = load_subtype_manifest(Stage::LearnDict, layout, s)?;
        let xs = subtype_signals(&m, dc.signal_size)?;
        let (dict, report) = learn_dictionary(s, &xs, dc.atoms, &params, dc.epochs, seed::derive(seed_v, &[&s.as_str()]))?;
        log::info!(
            "learn-dict: {s} objective {:.4} -> {:.4} over {} epochs",
            report.objectives.first().copied().unwrap_or(f64::NAN),
            report.final_objective,
            report.epochs
        );
        dict.save(&layout.dictionary(s))?;
        write_json(&layout.learn_report(s), &report)?;
        export_atoms(&dict, dc.signal_size, dc.signal_size, &layout.atoms_png(s))?;
        out.files.extend([layout.dictionary(s), layout.learn_report(s), layout.atoms_png(s)]);
    }
    Ok(out)
}

fn load_dictionaries(stage: Stage, layout: &Layout) -> Result<Vec<Dictionary>> {
    Subtype::ALL
        .into_iter()
        .map(|s| {
            let p = layout.dictionary(s);
            require(stage, &p, Stage::LearnDict)?;
            Dictionary::load(&p)
        })
        .collect()
}

fn centroids(cfg: &RunConfig, layout: &Layout) -> Result<StageOutput> {
    let dicts = load_dictionaries(Stage::Centroids, layout)?;
    let params = cfg.dictionary.coding_params();
    let mut inputs = Vec::new();
    for (s, dict) in Subtype::ALL.into_iter().zip(&dicts) {
        let m = load_subtype_manifest(Stage::Centroids, layout, s)?;
        let xs = subtype_signals(&m, cfg.dictionary.signal_size)?;
        let codes = encode_all(dict, &xs, &params)?;
        let classes = match s.fixed_labels() {
            Some(l) => l.iter().map(|c| c.to_string()).collect(),
            None => {
                let mut l = m.labels();
                l.sort();
                l
            }
        };
        let mut sc = SubtypeCodes::new(s, classes);
        for (e, code) in m.entries.iter().zip(codes) {
            sc.push(&e.label, code);
        }
        inputs.push(sc);
    }
    let set = compute_centroids(&inputs)?;
    log::info!("centroids: {} classes", set.len());
    set.save(&layout.centroids())?;
    Ok(StageOutput { files: vec![layout.centroids()], ..Default::default() })
}

fn load_identity(stage: Stage, layout: &Layout) -> Result<IdentityManifest> {
    let p = layout.identity_manifest();
    require(stage, &p, Stage::Gen)?;
    IdentityManifest::read_csv(&p)
}

fn encode(cfg: &RunConfig, layout: &Layout) -> Result<StageOutput> {
    let dicts = load_dictionaries(Stage::Encode, layout)?;
    require(Stage::Encode, &layout.centroids(), Stage::Centroids)?;
    let cents = CentroidSet::load(&layout.centroids())?;
    let identity = load_identity(Stage::Encode, layout)?;
    let params = cfg.dictionary.coding_params();
    let s = cfg.dictionary.signal_size;
    let encoder = CostEncoder::new(&dicts, &cents, &params, (s, s))?;
    let items: Vec<(String, PathBuf, String)> = identity
        .entries
        .iter()
        .map(|e| (e.path.clone(), identity.resolve(e), e.subject.clone()))
        .collect();
    let batch = encode_batch(&items, &encoder);
    if let Some((key, msg)) = batch.failures.first() {
        return Err(Error::Numeric(format!("encoding {key} failed: {msg}")));
    }
    batch.table.write_csv(&layout.features(), cents.len())?;
    Ok(StageOutput { files: vec![layout.features()], ..Default::default() })
}

fn split_rows<'a>(table: &'a FeatureTable, identity: &IdentityManifest, split: Split) -> Vec<&'a crate::cost_space::FeatureRow> {
    let splits: HashMap<&str, Split> = identity.entries.iter().map(|e| (e.path.as_str(), e.split)).collect();
    table.rows.iter().filter(|r| splits.get(r.path.as_str()) == Some(&split)).collect()
}

fn train_cost(cfg: &RunConfig, layout: &Layout, seed_v: u64) -> Result<StageOutput> {
    require(Stage::TrainCost, &layout.features(), Stage::Encode)?;
    let table = FeatureTable::read_csv(&layout.features())?;
    let identity = load_identity(Stage::TrainCost, layout)?;
    let rows = split_rows(&table, &identity, Split::Train);
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no training rows in the feature file".into()));
    }
    let mut classes: Vec<String> = rows.iter().map(|r| r.label.clone()).collect();
    classes.sort();
    classes.dedup();
    let dim = rows[0].vector.len();
    let scaler = if cfg.cost_classifier.standardize {
        FeatureScaler::fit(&rows.iter().map(|r| r.vector.as_slice()).collect::<Vec<_>>())?
    } else {
        FeatureScaler { mean: vec![0.0; dim], std: vec![1.0; dim] }
    };
    let data: Vec<(Vec<f64>, usize)> = rows
        .iter()
        .map(|r| (scaler.apply(&r.vector), classes.binary_search(&r.label).expect("label from rows")))
        .collect();
    let cc = &cfg.cost_classifier;
    let model = init_mlp(&[dim, cc.hidden[0], cc.hidden[1], classes.len()], classes.clone(), seed_v)?;
    let tc = TrainConfig { epochs: cc.epochs, learning_rate: cc.learning_rate, seed: seed_v };
    let (model, loss) = train(&model, &data, &tc)?;
    let train_accuracy = accuracy(&model, &data)?;
    log::info!(
        "train-cost: loss {:.4} -> {:.4}, training accuracy {train_accuracy:.3}",
        loss[0],
        loss[loss.len() - 1]
    );
    model.save(&layout.cost_model())?;
    write_json(&layout.cost_scaler(), &scaler)?;
    write_json(&layout.cost_loss(), &CostTrainingReport { classes, train_accuracy, loss })?;
    Ok(StageOutput { files: vec![layout.cost_model(), layout.cost_scaler(), layout.cost_loss()], ..Default::default() })
}

fn train_backend(cfg: &RunConfig, layout: &Layout, seed_v: u64) -> Result<StageOutput> {
    let identity = load_identity(Stage::TrainBackend, layout)?;
    let b = &cfg.backend;
    match b.kind {
        BackendKind::Reference => {
            let items: Vec<(String, PathBuf, String)> = identity
                .split(Split::Train)
                .map(|e| (e.path.clone(), identity.resolve(e), e.subject.clone()))
                .collect();
            let rc = ReferenceConfig {
                hidden: b.hidden,
                epochs: b.epochs,
                learning_rate: b.learning_rate,
                max_pairs: b.max_pairs,
                seed: seed_v,
            };
            let model = reference_classifier_train(&items, b.mode, &rc)?;
            model.save(&layout.backend_model())?;
            Ok(StageOutput { files: vec![layout.backend_model()], ..Default::default() })
        }
        BackendKind::Precomputed => {
            let src = b.table.as_ref().expect("validated");
            let table = PrecomputedScoreTable::load(src)?;
            table.validate_paths(|p| identity.contains(p))?;
            table.save(&layout.backend_table())?;
            Ok(StageOutput { files: vec![layout.backend_table()], ..Default::default() })
        }
    }
}

fn load_pairs(stage: Stage, layout: &Layout, split: Split) -> Result<PairList> {
    let p = layout.pairs(split);
    require(stage, &p, Stage::Gen)?;
    PairList::read_csv(&p)
}

fn score(cfg: &RunConfig, layout: &Layout) -> Result<StageOutput> {
    let st = Stage::Score;
    require(st, &layout.features(), Stage::Encode)?;
    require(st, &layout.cost_model(), Stage::TrainCost)?;
    require(st, &layout.cost_scaler(), Stage::TrainCost)?;
    require(st, &layout.gallery_probe(), Stage::Gen)?;
    let identity = load_identity(st, layout)?;
    let pair_lists = [(Split::Val, load_pairs(st, layout, Split::Val)?), (Split::Test, load_pairs(st, layout, Split::Test)?)];
    let gp = GalleryProbe::read_csv(&layout.gallery_probe())?;
    let metric = cfg.fusion.distance;

    let features = FeatureTable::read_csv(&layout.features())?;
    let model = MlpModel::load(&layout.cost_model())?;
    let scaler: FeatureScaler = read_json(&layout.cost_scaler())?;
    let mut cost = PrecomputedScoreTable::new(ScoreKind::Identity, model.n_classes())?;
    let mut eval_rows = split_rows(&features, &identity, Split::Val);
    eval_rows.extend(split_rows(&features, &identity, Split::Test));
    for row in &eval_rows {
        cost.insert(ScoreInput::Single(&row.path), model.forward(&scaler.apply(&row.vector))?)?;
    }
    cost.save(&layout.cost_activations())?;

    let mut files = vec![layout.cost_activations()];
    let backend = match cfg.backend.kind {
        BackendKind::Reference => {
            require(st, &layout.backend_model(), Stage::TrainBackend)?;
            let live = LiveBackend { classifier: ReferenceClassifier::load(&layout.backend_model())?, root: identity.root.clone() };
            let inputs: Vec<ScoreInput> = match live.classifier.mode() {
                BackendMode::Identity => eval_rows.iter().map(|r| ScoreInput::Single(r.path.as_str())).collect(),
                BackendMode::Pair => pair_lists
                    .iter()
                    .flat_map(|(_, l)| l.pairs().iter().map(|p| ScoreInput::Pair(&p.path1, &p.path2)))
                    .chain(gp.probes.iter().flat_map(|p| gp.gallery.iter().map(move |g| ScoreInput::Pair(&p.path, &g.path))))
                    .collect(),
            };
            let table = PrecomputedScoreTable::capture(&live, &inputs)?;
            table.save(&layout.backend_scores())?;
            files.push(layout.backend_scores());
            table
        }
        BackendKind::Precomputed => {
            require(st, &layout.backend_table(), Stage::TrainBackend)?;
            PrecomputedScoreTable::load(&layout.backend_table())?
        }
    };

    let cost_distance = |a: &str, b: &str| -> Result<f64> {
        let pa = cost.get(ScoreInput::Single(a)).ok_or_else(|| Error::MissingScore(a.to_string()))?;
        let pb = cost.get(ScoreInput::Single(b)).ok_or_else(|| Error::MissingScore(b.to_string()))?;
        activation_distance(pa, pb, metric)
    };
    for (split, pairs) in &pair_lists {
        let mut dc = Vec::with_capacity(pairs.len());
        let mut ds = Vec::with_capacity(pairs.len());
        for p in pairs.pairs() {
            dc.push(cost_distance(&p.path1, &p.path2)?);
            ds.push(supervised_distance(&backend, &p.path1, &p.path2, metric)?);
        }
        let set = fuse_records(pairs, &dc, &ds, cfg.fusion.alpha, cfg.fusion.normalization)?;
        set.write_csv(&layout.scores(*split))?;
        files.push(layout.scores(*split));
    }
    write_json(
        &layout.score_meta(),
        &ScoreMeta { alpha: cfg.fusion.alpha, normalization: cfg.fusion.normalization, distance: metric },
    )?;

    let mut ident = IdentificationScores {
        gallery: gp.gallery.clone(),
        probes: gp.probes.clone(),
        cost: Vec::new(),
        supervised: Vec::new(),
    };
    for p in &gp.probes {
        let mut c = Vec::with_capacity(gp.gallery.len());
        let mut s = Vec::with_capacity(gp.gallery.len());
        for g in &gp.gallery {
            c.push(cost_distance(&p.path, &g.path)?);
            s.push(supervised_distance(&backend, &p.path, &g.path, metric)?);
        }
        ident.cost.push(c);
        ident.supervised.push(s);
    }
    write_json(&layout.identification_scores(), &ident)?;
    files.extend([layout.score_meta(), layout.identification_scores()]);
    Ok(StageOutput { files, ..Default::default() })
}

fn fuse_stage(cfg: &RunConfig, layout: &Layout) -> Result<StageOutput> {
    let st = Stage::Fuse;
    for p in [layout.scores(Split::Val), layout.scores(Split::Test), layout.score_meta()] {
        require(st, &p, Stage::Score)?;
    }
    let meta: ScoreMeta = read_json(&layout.score_meta())?;
    let val = ScoreSet::read_csv(&layout.scores(Split::Val), meta.alpha)?;
    let test = ScoreSet::read_csv(&layout.scores(Split::Test), meta.alpha)?;
    let search = grid_search_alpha(&val, &cfg.fusion.grid)?;
    log::info!("fuse: α = {} (validation GAR@1%FAR {:.4})", search.alpha, search.gar_at_1);
    write_json(&layout.alpha_search(), &search)?;
    val.refuse(search.alpha)?.write_csv(&layout.fused_scores(Split::Val))?;
    test.refuse(search.alpha)?.write_csv(&layout.fused_scores(Split::Test))?;
    Ok(StageOutput {
        files: vec![layout.alpha_search(), layout.fused_scores(Split::Val), layout.fused_scores(Split::Test)],
        ..Default::default()
    })
}

/// α used for evaluation: the grid-search result when `fuse` is part of the
/// run, otherwise the one the score files were built with.
fn eval_alpha(cfg: &RunConfig, stage: Stage, layout: &Layout) -> Result<f64> {
    if cfg.stages.contains(&Stage::Fuse) {
        require(stage, &layout.alpha_search(), Stage::Fuse)?;
        Ok(read_json::<AlphaSearch>(&layout.alpha_search())?.alpha)
    } else {
        require(stage, &layout.score_meta(), Stage::Score)?;
        Ok(read_json::<ScoreMeta>(&layout.score_meta())?.alpha)
    }
}

fn eval_verify(cfg: &RunConfig, layout: &Layout) -> Result<StageOutput> {
    let st = Stage::EvalVerify;
    let path = if cfg.stages.contains(&Stage::Fuse) {
        let p = layout.fused_scores(Split::Test);
        require(st, &p, Stage::Fuse)?;
        p
    } else {
        let p = layout.scores(Split::Test);
        require(st, &p, Stage::Score)?;
        p
    };
    let alpha = eval_alpha(cfg, st, layout)?;
    let set = ScoreSet::read_csv(&path, alpha)?;
    let (g, i) = set.split(Channel::Fused);
    let mut channels = BTreeMap::new();
    let mut files = Vec::new();
    for c in CHANNELS {
        let v = verification_metrics(&set, c)?;
        v.roc.write_csv(&layout.roc(c))?;
        files.push(layout.roc(c));
        log::info!("eval-verify: {} GAR@1%FAR {:.4}, GAR@0.1%FAR {:.4}", channel_name(c), v.gar_at_1, v.gar_at_01);
        channels.insert(channel_name(c).to_string(), ChannelVerification { gar_at_1: v.gar_at_1, gar_at_01: v.gar_at_01 });
    }
    let report = VerificationReport { alpha, genuine_pairs: g.len(), imposter_pairs: i.len(), channels };
    write_json(&layout.verification(), &report)?;
    files.push(layout.verification());
    Ok(StageOutput { files, ..Default::default() })
}

/// Normalise a whole matrix as one score set.
fn normalize_matrix(m: &[Vec<f64>], method: Normalization) -> Result<Vec<Vec<f64>>> {
    let flat: Vec<f64> = m.iter().flatten().copied().collect();
    let norm = normalize_scores(&flat, method)?;
    Ok(norm.chunks(m[0].len()).map(<[f64]>::to_vec).collect())
}

fn eval_identify(cfg: &RunConfig, layout: &Layout) -> Result<StageOutput> {
    let st = Stage::EvalIdentify;
    require(st, &layout.identification_scores(), Stage::Score)?;
    let alpha = eval_alpha(cfg, st, layout)?;
    let scores: IdentificationScores = read_json(&layout.identification_scores())?;
    if scores.probes.is_empty() || scores.gallery.is_empty() {
        return Err(Error::InvalidArgument("identification needs probes and a gallery".into()));
    }
    let norm = cfg.fusion.normalization;
    let c = normalize_matrix(&scores.cost, norm)?;
    let s = normalize_matrix(&scores.supervised, norm)?;
    let fused = c
        .iter()
        .zip(&s)
        .map(|(rc, rs)| rc.iter().zip(rs).map(|(a, b)| fuse(*a, *b, alpha)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let probe_ids: Vec<&str> = scores.probes.iter().map(|p| p.subject.as_str()).collect();
    let gallery_ids: Vec<&str> = scores.gallery.iter().map(|g| g.subject.as_str()).collect();
    let mut rank1 = BTreeMap::new();
    let mut files = Vec::new();
    for (ch, m) in [(Channel::Fused, &fused), (Channel::Cost, &c), (Channel::Supervised, &s)] {
        let curve = cmc(m, &probe_ids, &gallery_ids)?;
        curve.write_csv(&layout.cmc(ch))?;
        files.push(layout.cmc(ch));
        log::info!("eval-identify: {} rank-1 {:.4}", channel_name(ch), curve.at(1));
        rank1.insert(channel_name(ch).to_string(), curve.at(1));
    }
    let report = IdentificationReport { alpha, gallery_size: gallery_ids.len(), probes: probe_ids.len(), rank1 };
    write_json(&layout.identification(), &report)?;
    files.push(layout.identification());
    Ok(StageOutput { files, ..Default::default() })
}
