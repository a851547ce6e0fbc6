//! Acceptance criteria 1–10, one line per criterion.
//!
//! Run with `cargo test -p costfuse-core --test acceptance`. The process
//! exits non-zero when a criterion fails, unless the failure is accompanied
//! by a bound, checked at runtime, showing the target cannot be met.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use costfuse_core::cost_space::{CentroidSet, CostEncoder, FeatureTable};
use costfuse_core::fusion::{
    cmc, fuse, fuse_records, gar_at_far, grid_search_alpha, normalize_scores, roc_from_scores, verification_metrics,
    Channel, Normalization, Pair, PairLabel, PairList, ScoreSet,
};
use costfuse_core::mlp::init_mlp;
use costfuse_core::pipeline::{
    init_thread_pool, read_json, run_all, run_stage, IdentificationReport, IdentificationScores, Layout, RunConfig,
    Stage, VerificationReport, MANIFEST_FILE,
};
use costfuse_core::seed;
use costfuse_core::sparse_dict::{
    image_signal, lasso_objective, learn_dictionary, reconstruct, stlars_encode, CodingParams, Dictionary,
};
use costfuse_core::synthgen::{gen_dataset, DatasetManifest, RasterImage, Subtype};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
    /// Set when the target is shown unreachable by a bound computed on the same data.
    unattainable: Option<String>,
}

impl Outcome {
    fn check(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into(), unattainable: None }
    }
}

type Check = Box<dyn FnOnce() -> Outcome>;

fn preset(name: &str) -> RunConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets").join(name);
    RunConfig::load(&path).unwrap()
}

fn main() {
    init_thread_pool(1).unwrap();
    let work = tempfile::tempdir().unwrap();
    let desk_dir = work.path().join("desk");

    // 10 runs first so 2, 6 and 8 can reuse its artifacts; 6 rescoring them runs last
    let order: Vec<(u8, &str, Check)> = vec![
        (10, "end-to-end desk run", Box::new({ let d = desk_dir.clone(); move || c10_desk_run(&d) })),
        (8, "metric oracle equivalence", Box::new({ let d = desk_dir.clone(); move || c8_metrics(&d) })),
        (1, "stagewise vs LASSO oracle", Box::new(c1_sparse_coding_oracle)),
        (2, "dictionary-learning descent", Box::new({ let d = desk_dir.clone(); move || c2_descent(&d) })),
        (3, "exact recovery", Box::new(c3_exact_recovery)),
        (4, "centroid/encoding contract", Box::new({ let d = work.path().join("c4"); move || c4_centroids(&d) })),
        (5, "gradient check", Box::new(c5_gradient_check)),
        (7, "fusion benefit direction", Box::new(c7_fusion_benefit)),
        (9, "reproducibility", Box::new({ let d = work.path().join("c9"); move || c9_reproducible(&d) })),
        (6, "fusion endpoints", Box::new({ let d = desk_dir.clone(); move || c6_endpoints(&d) })),
    ];

    let mut results: BTreeMap<u8, (&str, Outcome)> = BTreeMap::new();
    for (id, name, check) in order {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Outcome::check(false, format!("error: {msg}"))
        });
        results.insert(id, (name, outcome));
    }

    let mut blocking = 0;
    for (id, (name, o)) in &results {
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {status}: {name}: {}", o.detail);
        if !o.pass {
            match &o.unattainable {
                Some(why) => println!("             unattainable: {why}"),
                None => blocking += 1,
            }
        }
    }
    if blocking > 0 {
        println!("{blocking} criterion/criteria failed");
        std::process::exit(1);
    }
}

fn c1_sparse_coding_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = seed::rng(2024);
    let p = CodingParams { lambda: 0.1, step: 0.01, max_iters: 100_000 };
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let d = rng.random_range(1..=10);
        let k = rng.random_range(1..=6);
        let (atoms, x) = common::random_lasso_instance(&mut rng, d, k);
        let dict = Dictionary::from_atoms(Subtype::Color, atoms.clone()).unwrap();
        let h = stlars_encode(&dict, &x, &p).unwrap();
        let ours = lasso_objective(&dict, &x, &h, 0.1).unwrap();
        let best = common::lasso_value(&atoms, &x, &common::lasso_cd(&atoms, &x, 0.1), 0.1);
        worst = worst.max(ours / best);
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::check(
        worst <= 1.05 && secs < 60.0,
        format!("worst objective ratio {worst:.5} (≤ 1.05) over 200 instances in {secs:.2}s (< 60s)"),
    )
}

fn load_signals(manifest: &Path, size: u32) -> Vec<Vec<f64>> {
    let m = DatasetManifest::read_csv(manifest).unwrap();
    m.entries
        .iter()
        .map(|e| image_signal(&RasterImage::load(&m.resolve(e)).unwrap(), size, size).unwrap())
        .collect()
}

/// Lower bound on `min_h ‖x − D·h‖² + λ‖h‖₁` over any unit-atom dictionary:
/// `‖D·h‖ ≤ ‖h‖₁ = t`, so the value is at least `max(‖x‖ − t, 0)² + λt`.
fn unit_atom_floor(x: &[f64], lambda: f64) -> f64 {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n >= lambda / 2.0 {
        lambda * n - lambda * lambda / 4.0
    } else {
        n * n
    }
}

fn c2_descent(desk: &Path) -> Outcome {
    let cfg = preset("desk.toml");
    let dc = &cfg.dictionary;
    assert_eq!(cfg.data.color_per_class, 50);
    assert_eq!(dc.signal_size, 16);
    let xs = load_signals(&desk.join("data/color_manifest.csv"), dc.signal_size);
    let stage_seed = seed::derive(cfg.seed, &[&Stage::LearnDict.as_str()]);
    let start = Instant::now();
    let (dict, report) = learn_dictionary(
        Subtype::Color,
        &xs,
        dc.atoms,
        &dc.coding_params(),
        100,
        seed::derive(stage_seed, &[&"color"]),
    )
    .unwrap();
    let secs = start.elapsed().as_secs_f64();
    let first = report.objectives[0];
    let last = report.final_objective;
    let target = 0.5 * first;
    let floor = xs.iter().map(|x| unit_atom_floor(x, dc.lambda)).sum::<f64>() / xs.len() as f64;
    let monotone = report.objectives.windows(2).all(|w| w[1] <= w[0]) && last <= first;
    assert_eq!(dict.k(), dc.atoms);
    let detail = format!(
        "epoch-1 objective {first:.4}, after 100 epochs {last:.4} (ratio {:.3}, target ≤ 0.5); {}descending; {secs:.1}s (< 300s)",
        last / first,
        if monotone { "" } else { "not " }
    );
    let pass = last <= target && secs < 300.0 && monotone;
    let unattainable = (!pass && floor > target && monotone && secs < 300.0).then(|| {
        format!("any unit-atom dictionary has mean objective ≥ mean(λ‖x‖ − λ²/4) = {floor:.4} > 0.5 × {first:.4} = {target:.4}")
    });
    Outcome { pass, detail, unattainable }
}

fn c3_exact_recovery() -> Outcome {
    let k = 6;
    let d = 24;
    let xs: Vec<Vec<f64>> = (0..k)
        .map(|j| (0..d).map(|i| if i % k == j { 0.2 + 0.05 * (i / k) as f64 + 0.1 * j as f64 } else { 0.0 }).collect())
        .collect();
    let p = CodingParams { lambda: 0.001, step: 0.001, max_iters: 20_000 };
    let (dict, _) = learn_dictionary(Subtype::Shape, &xs, k, &p, 20, 3).unwrap();
    let mean_err = xs
        .iter()
        .map(|x| {
            let r = reconstruct(&dict, &stlars_encode(&dict, x, &p).unwrap()).unwrap();
            x.iter().zip(&r).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
        })
        .sum::<f64>()
        / k as f64;
    Outcome::check(mean_err < 1e-3, format!("{k} orthogonal signals, mean reconstruction error {mean_err:.2e} (< 1e-3)"))
}

fn c4_centroids(dir: &Path) -> Outcome {
    let mut cfg = preset("desk.toml");
    cfg.out_dir = dir.join("run");
    cfg.data.color_per_class = 20;
    cfg.data.shape_per_class = 20;
    cfg.data.texture_classes = 47;
    cfg.data.texture_per_class = 4;
    cfg.dictionary.signal_size = 8;
    cfg.dictionary.atoms = 48;
    cfg.dictionary.epochs = 5;
    cfg.identity.subjects = 4;
    cfg.stages = vec![Stage::Gen, Stage::LearnDict, Stage::Centroids, Stage::Encode];
    run_all(&cfg).unwrap();
    let layout = Layout::new(&cfg.out_dir);
    let cents = CentroidSet::load(&layout.centroids()).unwrap();
    let features = FeatureTable::read_csv(&layout.features()).unwrap();
    let lengths_ok = features.rows.iter().all(|r| r.vector.len() == 64);
    let non_negative = features.rows.iter().all(|r| r.vector.iter().all(|v| *v >= 0.0));

    // held-out color images from an unrelated seed
    let held = gen_dataset(Subtype::Color, 10, 987_654, cfg.data.image_size, &dir.join("held"), cfg.data.color_table())
        .unwrap();
    let dicts: Vec<Dictionary> = Subtype::ALL.into_iter().map(|s| Dictionary::load(&layout.dictionary(s)).unwrap()).collect();
    let params = cfg.dictionary.coding_params();
    let s = cfg.dictionary.signal_size;
    let encoder = CostEncoder::new(&dicts, &cents, &params, (s, s)).unwrap();
    let mut correct = 0;
    let mut all_cost_ok = true;
    for e in &held.entries {
        let img = RasterImage::load(&held.resolve(e)).unwrap();
        let v = encoder.encode(&img).unwrap();
        all_cost_ok &= v.len() == 64 && v.as_slice().iter().all(|x| *x >= 0.0);
        let code = encoder.code(&img, Subtype::Color).unwrap();
        correct += (cents.nearest(Subtype::Color, &code) == Some(e.label.as_str())) as usize;
    }
    let acc = correct as f64 / held.entries.len() as f64;
    Outcome::check(
        cents.len() == 64 && lengths_ok && non_negative && all_cost_ok && acc >= 0.3,
        format!(
            "{} centroids, {} vectors of length 64 and non-negative: {}; held-out color nearest-centroid accuracy {:.1}% (≥ 30%)",
            cents.len(),
            features.rows.len() + held.entries.len(),
            lengths_ok && non_negative && all_cost_ok,
            100.0 * acc
        ),
    )
}

fn c5_gradient_check() -> Outcome {
    let mut worst = 0.0f64;
    let mut largest = 0;
    for (case, sizes) in [[3, 5, 4, 2], [6, 8, 6, 4], [5, 10, 7, 3]].iter().enumerate() {
        let classes: Vec<String> = (0..sizes[3]).map(|i| format!("c{i}")).collect();
        let m = init_mlp(sizes, classes, case as u64).unwrap();
        largest = largest.max(m.n_params());
        let mut rng = seed::rng(100 + case as u64);
        let data: Vec<(Vec<f64>, usize)> = (0..10)
            .map(|i| ((0..sizes[0]).map(|_| rng.random_range(-1.0..1.0)).collect(), i % sizes[3]))
            .collect();
        let params = m.parameters();
        let (_, g) = m.gradients(&data).unwrap();
        let analytic: Vec<f64> =
            g.weights.iter().zip(&g.biases).flat_map(|(w, b)| w.iter().chain(b).copied()).collect();
        let eps = 1e-5;
        for k in 0..params.len() {
            let mut p = params.clone();
            p[k] += eps;
            let up = common::mlp_loss(sizes, &p, &data);
            p[k] -= 2.0 * eps;
            let down = common::mlp_loss(sizes, &p, &data);
            let numeric = (up - down) / (2.0 * eps);
            let rel = (analytic[k] - numeric).abs() / analytic[k].abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    Outcome::check(
        worst < 1e-4 && largest <= 200,
        format!("max relative error {worst:.2e} (< 1e-4) on models up to {largest} parameters"),
    )
}

fn read_cmc(path: &Path) -> Vec<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect()
}

fn read_roc(path: &Path) -> Vec<(f64, f64, f64)> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
            (f[0], f[1], f[2])
        })
        .collect()
}

fn c6_endpoints(desk: &Path) -> Outcome {
    let mut cfg = preset("desk.toml");
    cfg.out_dir = desk.to_path_buf();
    cfg.stages = vec![Stage::Score, Stage::EvalVerify, Stage::EvalIdentify];
    let layout = Layout::new(desk);
    let mut notes = Vec::new();
    let mut ok = true;
    for (alpha, other) in [(0.0, "supervised"), (1.0, "cost")] {
        cfg.fusion.alpha = alpha;
        for stage in &cfg.stages {
            run_stage(&cfg, *stage).unwrap();
        }
        let v: VerificationReport = read_json(&layout.verification()).unwrap();
        let i: IdentificationReport = read_json(&layout.identification()).unwrap();
        let other_ch = if alpha == 0.0 { Channel::Supervised } else { Channel::Cost };
        let set = ScoreSet::read_csv(&layout.scores(costfuse_core::synthgen::Split::Test), alpha).unwrap();
        let direct = verification_metrics(&set, other_ch).unwrap();
        let same_gar = v.channels["fused"] == v.channels[other]
            && v.channels["fused"].gar_at_1 == direct.gar_at_1
            && v.channels["fused"].gar_at_01 == direct.gar_at_01;
        let same_cmc = read_cmc(&layout.cmc(Channel::Fused)) == read_cmc(&layout.cmc(other_ch));
        let same_roc = read_roc(&layout.roc(Channel::Fused)) == read_roc(&layout.roc(other_ch));
        ok &= same_gar && same_cmc && same_roc && i.rank1["fused"] == i.rank1[other];
        notes.push(format!(
            "α={alpha}: GAR@1% {:.4} = {other} {:.4}, identical CMC {same_cmc}",
            v.channels["fused"].gar_at_1, v.channels[other].gar_at_1
        ));
    }
    Outcome::check(ok, notes.join("; "))
}

fn c7_fusion_benefit() -> Outcome {
    let mut rng = seed::rng(31);
    let (n_gen, n_imp) = (200, 2000);
    let mut pairs = Vec::new();
    let mut cost = Vec::new();
    let mut sup = Vec::new();
    for i in 0..n_gen + n_imp {
        let genuine = i < n_gen;
        // genuine pairs 0..40 fool the COST channel, 40..80 the supervised one
        let (cost_wrong, sup_wrong) = (genuine && i < 40, genuine && (40..80).contains(&i));
        let draw = |rng: &mut rand_chacha::ChaCha8Rng, wrong: bool| -> f64 {
            if wrong || !genuine {
                rng.random_range(0.9..1.0)
            } else {
                rng.random_range(0.0..0.1)
            }
        };
        cost.push(draw(&mut rng, cost_wrong));
        sup.push(draw(&mut rng, sup_wrong));
        let label = if genuine { PairLabel::Genuine } else { PairLabel::Imposter };
        pairs.push(Pair { path1: format!("p{i}"), path2: format!("q{i}"), label });
    }
    let set = fuse_records(&PairList::new(pairs).unwrap(), &cost, &sup, 0.5, Normalization::Minmax).unwrap();
    let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let search = grid_search_alpha(&set, &grid).unwrap();
    let at = |a: f64| search.grid.iter().find(|(g, _)| *g == a).unwrap().1;
    let (g0, g1) = (at(0.0), at(1.0));
    Outcome::check(
        search.alpha > 0.0 && search.alpha < 1.0 && search.gar_at_1 > g0 && search.gar_at_1 > g1,
        format!("grid α={} GAR@1%FAR {:.3} vs α=0 {g0:.3}, α=1 {g1:.3}", search.alpha, search.gar_at_1),
    )
}

fn c8_metrics(desk: &Path) -> Outcome {
    let mut fixtures = 0;
    let mut ok = true;
    for s in 0..60u64 {
        let mut rng = seed::rng(500 + s);
        let n = rng.random_range(2..=2000);
        let quantise = s % 3 == 0;
        let mut draw = |shift: f64| -> f64 {
            let v: f64 = shift + rng.random_range(0.0..1.0);
            if quantise { (v * 10.0).round() / 10.0 } else { v }
        };
        let ng = (n / 3).max(1);
        let g: Vec<f64> = (0..ng).map(|_| draw(0.0)).collect();
        let i: Vec<f64> = (0..n - ng).map(|_| draw(0.3)).collect();
        let roc = roc_from_scores(&g, &i).unwrap();
        for far in [0.01, 0.001] {
            ok &= gar_at_far(&roc, far) == common::brute_gar_at_far(&g, &i, far);
        }
        let ids = 2 + (s as usize % 7);
        let gallery: Vec<usize> = (0..ids + s as usize % 3).map(|k| k % ids).collect();
        let probes: Vec<usize> = (0..15).map(|k| (k * 7 + s as usize) % ids).collect();
        let dist: Vec<Vec<f64>> = probes.iter().map(|_| (0..gallery.len()).map(|_| draw(0.0)).collect()).collect();
        let name = |v: &[usize]| v.iter().map(|k| format!("s{k}")).collect::<Vec<_>>();
        let curve = cmc(&dist, &name(&probes), &name(&gallery)).unwrap();
        ok &= curve.rates == common::brute_cmc(&dist, &probes, &gallery);
        ok &= curve.at(gallery.len()) == 1.0;
        fixtures += 1;
    }

    // the desk run's emitted files
    let layout = Layout::new(desk);
    let v: VerificationReport = read_json(&layout.verification()).unwrap();
    let set = ScoreSet::read_csv(&layout.fused_scores(costfuse_core::synthgen::Split::Test), v.alpha).unwrap();
    for (ch, name) in [(Channel::Fused, "fused"), (Channel::Cost, "cost"), (Channel::Supervised, "supervised")] {
        let (g, i) = set.split(ch);
        ok &= v.channels[name].gar_at_1 == common::brute_gar_at_far(&g, &i, 0.01);
        ok &= v.channels[name].gar_at_01 == common::brute_gar_at_far(&g, &i, 0.001);
    }
    let ident: IdentificationReport = read_json(&layout.identification()).unwrap();
    let scores: IdentificationScores = read_json(&layout.identification_scores()).unwrap();
    let subjects: Vec<&str> = {
        let mut s: Vec<&str> = scores.gallery.iter().map(|g| g.subject.as_str()).collect();
        s.sort();
        s.dedup();
        s
    };
    let idx = |name: &str| subjects.iter().position(|s| *s == name).unwrap_or(usize::MAX);
    let gallery_ids: Vec<usize> = scores.gallery.iter().map(|g| idx(&g.subject)).collect();
    let probe_ids: Vec<usize> = scores.probes.iter().map(|p| idx(&p.subject)).collect();
    let norm = |m: &[Vec<f64>]| -> Vec<Vec<f64>> {
        let flat: Vec<f64> = m.iter().flatten().copied().collect();
        normalize_scores(&flat, Normalization::Minmax).unwrap().chunks(m[0].len()).map(<[f64]>::to_vec).collect()
    };
    let (c, s) = (norm(&scores.cost), norm(&scores.supervised));
    let fused: Vec<Vec<f64>> = c
        .iter()
        .zip(&s)
        .map(|(rc, rs)| rc.iter().zip(rs).map(|(a, b)| fuse(*a, *b, ident.alpha).unwrap()).collect())
        .collect();
    for (ch, m) in [(Channel::Fused, &fused), (Channel::Cost, &c), (Channel::Supervised, &s)] {
        let rates = read_cmc(&layout.cmc(ch));
        ok &= rates == common::brute_cmc(m, &probe_ids, &gallery_ids);
        ok &= rates.len() == scores.gallery.len() && *rates.last().unwrap() == 1.0;
    }
    Outcome::check(ok, format!("{fixtures} random fixtures plus the desk run's ROC/CMC files match brute force; CMC(G) = 1"))
}

fn collect_files(root: &Path, rel: &Path, out: &mut Vec<PathBuf>) {
    let mut entries: Vec<_> = std::fs::read_dir(root.join(rel)).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for p in entries {
        let r = rel.join(p.file_name().unwrap());
        if p.is_dir() {
            collect_files(root, &r, out);
        } else {
            out.push(r);
        }
    }
}

fn c9_reproducible(dir: &Path) -> Outcome {
    let mut cfg = preset("desk.toml");
    cfg.data.color_per_class = 6;
    cfg.data.shape_per_class = 6;
    cfg.data.texture_classes = 3;
    cfg.data.texture_per_class = 6;
    cfg.dictionary.signal_size = 8;
    cfg.dictionary.atoms = 24;
    cfg.dictionary.epochs = 5;
    cfg.identity.subjects = 6;
    cfg.cost_classifier.epochs = 300;
    cfg.backend.epochs = 100;
    let mut trees = Vec::new();
    for run in ["a", "b"] {
        cfg.out_dir = dir.join(run);
        run_all(&cfg).unwrap();
        let mut files = Vec::new();
        collect_files(&cfg.out_dir, Path::new(""), &mut files);
        trees.push((cfg.out_dir.clone(), files));
    }
    let (ra, fa) = &trees[0];
    let (rb, fb) = &trees[1];
    let mut differing = Vec::new();
    for f in fa.iter().filter(|f| f.as_os_str() != MANIFEST_FILE) {
        if std::fs::read(ra.join(f)).unwrap() != std::fs::read(rb.join(f)).unwrap() {
            differing.push(f.display().to_string());
        }
    }
    let ma: costfuse_core::pipeline::RunManifest = read_json(&ra.join(MANIFEST_FILE)).unwrap();
    let mb: costfuse_core::pipeline::RunManifest = read_json(&rb.join(MANIFEST_FILE)).unwrap();
    let checksums_equal = ma.stages.iter().zip(&mb.stages).all(|(x, y)| x.artifacts == y.artifacts);
    Outcome::check(
        fa == fb && differing.is_empty() && checksums_equal,
        format!("{} artifacts across {} stages byte-identical on rerun; differing: {:?}", fa.len(), ma.stages.len(), differing),
    )
}

fn c10_desk_run(desk: &Path) -> Outcome {
    let mut cfg = preset("desk.toml");
    cfg.out_dir = desk.to_path_buf();
    let start = Instant::now();
    let manifest = run_all(&cfg).unwrap();
    let elapsed = start.elapsed();
    let layout = Layout::new(desk);
    let mut ok = manifest.stages.len() == Stage::ALL.len() && elapsed < Duration::from_secs(600);
    for ch in [Channel::Fused, Channel::Cost, Channel::Supervised] {
        let roc = read_roc(&layout.roc(ch));
        ok &= roc.first().map(|p| (p.1, p.2)) == Some((0.0, 0.0));
        ok &= roc.last().map(|p| (p.1, p.2)) == Some((1.0, 1.0));
        ok &= roc.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1 && w[0].2 <= w[1].2);
        let rates = read_cmc(&layout.cmc(ch));
        ok &= rates.windows(2).all(|w| w[0] <= w[1]) && rates.last() == Some(&1.0);
    }
    let v: VerificationReport = read_json(&layout.verification()).unwrap();
    let i: IdentificationReport = read_json(&layout.identification()).unwrap();
    Outcome::check(
        ok,
        format!(
            "{} stages in {:.1}s (< 600s, 1 thread); α={} GAR@1%FAR fused {:.3} cost {:.3} supervised {:.3}; rank-1 fused {:.3} cost {:.3} supervised {:.3}",
            manifest.stages.len(),
            elapsed.as_secs_f64(),
            v.alpha,
            v.channels["fused"].gar_at_1,
            v.channels["cost"].gar_at_1,
            v.channels["supervised"].gar_at_1,
            i.rank1["fused"],
            i.rank1["cost"],
            i.rank1["supervised"],
        ),
    )
}
