//! The CLI verbs: prepare, train, eval, sweep, compare, cost.
//!
//! Every command is deterministic under a fixed config and seed: outputs are
//! byte-identical across runs and thread counts. Nothing time- or
//! host-dependent is ever written into an output file.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use hdst_core::costmodel::{self, CostReport};
use hdst_core::dataio::{self, RawRecording};
use hdst_core::encoder::{encode_batch_baseline, encode_batch_ideal, EncoderConfig};
use hdst_core::learner::TrainedModel;
use hdst_core::pipeline::{self, Dataset};
use hdst_core::{par, SeededRng};

use crate::config::{RunConfig, STREAM_CELL};

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .with_context(|| format!("serializing {}", path.display()))?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// One subject's train/test windows.
struct Subject {
    name: String,
    train: Dataset,
    test: Dataset,
}

fn frame_prefix_split(rec: &RawRecording, fraction: f64) -> (RawRecording, RawRecording) {
    let cut = (rec.frames() as f64 * fraction).floor() as usize;
    let take = |range: std::ops::Range<usize>| RawRecording {
        sample_rate: rec.sample_rate,
        channel_names: rec.channel_names.clone(),
        channels: rec
            .channels
            .iter()
            .map(|s| s[range.clone()].to_vec())
            .collect(),
        labels: rec.labels[range.clone()].to_vec(),
    };
    (take(0..cut), take(cut..rec.frames()))
}

fn csv_subject(cfg: &RunConfig, enc: &EncoderConfig, path: &Path) -> Result<Subject> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "subject".into());
    let rec =
        dataio::load_recording(path).with_context(|| format!("loading {}", path.display()))?;
    if rec.channel_count() != enc.channels() {
        bail!(
            "{}: {} channels in file, config expects {}",
            path.display(),
            rec.channel_count(),
            enc.channels()
        );
    }
    let rec = dataio::downsample(&rec, cfg.downsample)?;
    let (train_rec, test_rec) = frame_prefix_split(&rec, cfg.train_fraction);
    // quantizer frozen from the training split only
    let quantizer = dataio::QuantizerSpec::fit(&train_rec, &enc.level_counts)
        .with_context(|| format!("fitting quantizer on {}", path.display()))?;
    let mut train = pipeline::windows_from_levels(enc, &quantizer.quantize(&train_rec)?)?;
    let mut test = pipeline::windows_from_levels(enc, &quantizer.quantize(&test_rec)?)?;
    let classes = train.classes.max(test.classes);
    train.classes = classes;
    test.classes = classes;
    Ok(Subject { name, train, test })
}

fn load_subjects(cfg: &RunConfig, enc: &EncoderConfig, seed: u64) -> Result<Vec<Subject>> {
    if cfg.dataset.is_empty() {
        let spec = cfg.synth_spec(enc)?;
        let data = dataio::synth_generate(&spec, &mut cfg.synth_rng(seed))?;
        let (train, test) = Dataset::from_synth(&data).split(cfg.train_fraction)?;
        return Ok(vec![Subject {
            name: "synth".into(),
            train,
            test,
        }]);
    }
    cfg.dataset
        .iter()
        .map(|path| csv_subject(cfg, enc, path))
        .collect()
}

fn model_path(out_dir: &Path, index: usize, name: &str, total: usize) -> PathBuf {
    if total == 1 {
        out_dir.join("model.bin")
    } else {
        out_dir.join(format!("model_{index}_{name}.bin"))
    }
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

// ---------------------------------------------------------------- prepare

pub fn prepare(cfg: &RunConfig, seed: u64) -> Result<()> {
    let enc = cfg.encoder_config(seed)?;
    let spec = cfg.synth_spec(&enc)?;
    let data = dataio::synth_generate(&spec, &mut cfg.synth_rng(seed))?;
    let rec = data.to_level_recording().to_recording();
    let path = cfg.out_dir.join("synth.csv");
    dataio::write_recording(&path, &rec)?;
    println!(
        "prepare: wrote {} windows ({} classes, {} frames) to {}",
        data.windows.len(),
        spec.classes,
        rec.frames(),
        path.display()
    );
    println!("prepare: consume with \"window_mode\": \"disjoint\" to recover the windows");
    Ok(())
}

// ------------------------------------------------------------------ train

#[derive(Serialize)]
struct TrainSubjectMetrics {
    name: String,
    classes: usize,
    train_windows: usize,
    test_windows: usize,
    train_accuracy: f64,
    model_file: String,
}

#[derive(Serialize)]
struct TrainMetrics {
    command: &'static str,
    seed: u64,
    dim: usize,
    ngram_sizes: Vec<usize>,
    level_counts: Vec<usize>,
    train_fraction: f64,
    subjects: Vec<TrainSubjectMetrics>,
    mean_train_accuracy: f64,
}

pub fn train(cfg: &RunConfig, seed: u64) -> Result<()> {
    let enc = cfg.encoder_config(seed)?;
    let subjects = load_subjects(cfg, &enc, seed)?;
    let total = subjects.len();
    let mut entries = Vec::with_capacity(total);
    for (i, subject) in subjects.iter().enumerate() {
        let model = pipeline::train(&enc, &subject.train)?;
        let outcome = pipeline::eval_software(&enc, &model, &subject.train)?;
        let path = model_path(&cfg.out_dir, i, &subject.name, total);
        model.save(&path)?;
        entries.push(TrainSubjectMetrics {
            name: subject.name.clone(),
            classes: model.classes(),
            train_windows: subject.train.len(),
            test_windows: subject.test.len(),
            train_accuracy: outcome.accuracy,
            model_file: path
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default(),
        });
    }
    let metrics = TrainMetrics {
        command: "train",
        seed,
        dim: enc.dim,
        ngram_sizes: enc.ngram_sizes.clone(),
        level_counts: enc.level_counts.clone(),
        train_fraction: cfg.train_fraction,
        mean_train_accuracy: mean(&entries.iter().map(|e| e.train_accuracy).collect::<Vec<_>>()),
        subjects: entries,
    };
    write_json(&cfg.out_dir.join("metrics.json"), &metrics)?;
    println!(
        "train: {} subject(s), mean training accuracy {:.4}, models in {}",
        total,
        metrics.mean_train_accuracy,
        cfg.out_dir.display()
    );
    Ok(())
}

// ------------------------------------------------------------------- eval

#[derive(Serialize)]
struct PathOutcome {
    accuracy: f64,
    confusion: Vec<Vec<u64>>,
}

#[derive(Serialize)]
struct EvalSubjectMetrics {
    name: String,
    test_windows: usize,
    software: PathOutcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    in_memory: Option<PathOutcome>,
}

#[derive(Serialize)]
struct EvalMetrics {
    command: &'static str,
    seed: u64,
    dim: usize,
    ngram_sizes: Vec<usize>,
    level_counts: Vec<usize>,
    noise_applied: bool,
    subjects: Vec<EvalSubjectMetrics>,
    mean_accuracy_software: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_accuracy_in_memory: Option<f64>,
}

fn check_model_compatibility(
    model: &TrainedModel,
    enc: &EncoderConfig,
    data: &Dataset,
) -> Result<()> {
    if model.dim() != enc.dim {
        bail!(
            "model dimension {} does not match config dimension {}",
            model.dim(),
            enc.dim
        );
    }
    if model.image.level_counts() != enc.level_counts.as_slice() {
        bail!(
            "model level counts {:?} do not match config {:?}",
            model.image.level_counts(),
            enc.level_counts
        );
    }
    if let Some(&label) = data.labels.iter().max() {
        if label >= model.classes() {
            bail!(
                "dataset labels reach class {label} but the model has {} classes",
                model.classes()
            );
        }
    }
    Ok(())
}

pub fn eval(cfg: &RunConfig, seed: u64, model_flags: &[PathBuf]) -> Result<()> {
    let enc = cfg.encoder_config(seed)?;
    let subjects = load_subjects(cfg, &enc, seed)?;
    let total = subjects.len();
    if !model_flags.is_empty() && model_flags.len() != total {
        bail!(
            "{} --model paths given for {} subject(s)",
            model_flags.len(),
            total
        );
    }
    let noise = cfg.resolved_noise(seed);
    let apply_noise = !noise.is_noiseless();

    let mut entries = Vec::with_capacity(total);
    for (i, subject) in subjects.iter().enumerate() {
        let path = model_flags
            .get(i)
            .cloned()
            .unwrap_or_else(|| model_path(&cfg.out_dir, i, &subject.name, total));
        let model = TrainedModel::load(&path)
            .with_context(|| format!("loading model {}", path.display()))?;
        check_model_compatibility(&model, &enc, &subject.test)?;
        let mut test = subject.test.clone();
        test.classes = model.classes();
        let software = pipeline::eval_software(&enc, &model, &test)?;
        let in_memory = if apply_noise {
            Some(pipeline::eval_in_memory(&enc, &model, &test, &noise)?)
        } else {
            None
        };
        entries.push(EvalSubjectMetrics {
            name: subject.name.clone(),
            test_windows: test.len(),
            software: PathOutcome {
                accuracy: software.accuracy,
                confusion: software.confusion,
            },
            in_memory: in_memory.map(|o| PathOutcome {
                accuracy: o.accuracy,
                confusion: o.confusion,
            }),
        });
    }
    let metrics = EvalMetrics {
        command: "eval",
        seed,
        dim: enc.dim,
        ngram_sizes: enc.ngram_sizes.clone(),
        level_counts: enc.level_counts.clone(),
        noise_applied: apply_noise,
        mean_accuracy_software: mean(
            &entries
                .iter()
                .map(|e| e.software.accuracy)
                .collect::<Vec<_>>(),
        ),
        mean_accuracy_in_memory: apply_noise.then(|| {
            mean(
                &entries
                    .iter()
                    .filter_map(|e| e.in_memory.as_ref().map(|o| o.accuracy))
                    .collect::<Vec<_>>(),
            )
        }),
        subjects: entries,
    };
    write_json(&cfg.out_dir.join("metrics.json"), &metrics)?;
    match metrics.mean_accuracy_in_memory {
        Some(hw) => println!(
            "eval: mean accuracy software {:.4}, in-memory {:.4} ({} subject(s))",
            metrics.mean_accuracy_software, hw, total
        ),
        None => println!(
            "eval: mean accuracy {:.4} ({} subject(s))",
            metrics.mean_accuracy_software, total
        ),
    }
    Ok(())
}

// ------------------------------------------------------------------ sweep

#[derive(Clone, Serialize)]
struct SweepCell {
    ngram: usize,
    levels: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    train_windows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    test_windows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    accuracy_software: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    accuracy_in_memory: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cost: Option<CostReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct SweepMetrics {
    command: &'static str,
    seed: u64,
    dim: usize,
    channels: usize,
    noise_applied: bool,
    cells: Vec<SweepCell>,
    failed_cells: usize,
}

fn run_cell(base: &RunConfig, seed: u64, ngram: usize, levels: usize) -> Result<SweepCell> {
    let cell_seed = SeededRng::derive(seed, &[STREAM_CELL, ngram as u64, levels as u64]).next_u64();
    let mut cfg = base.clone();
    cfg.ngram = ngram;
    cfg.levels = levels;
    cfg.ngram_per_channel = None;
    cfg.levels_per_channel = None;
    let enc = cfg.encoder_config(cell_seed)?;
    let noise = cfg.resolved_noise(cell_seed);
    let apply_noise = !noise.is_noiseless();
    let subjects = load_subjects(&cfg, &enc, cell_seed)?;

    let mut sw = Vec::new();
    let mut hw = Vec::new();
    let mut train_windows = 0;
    let mut test_windows = 0;
    for subject in &subjects {
        let model = pipeline::train(&enc, &subject.train)?;
        sw.push(pipeline::eval_software(&enc, &model, &subject.test)?.accuracy);
        if apply_noise {
            hw.push(pipeline::eval_in_memory(&enc, &model, &subject.test, &noise)?.accuracy);
        }
        train_windows += subject.train.len();
        test_windows += subject.test.len();
    }
    let cost = costmodel::estimate(&enc, &cfg.energy)?;
    Ok(SweepCell {
        ngram,
        levels,
        train_windows: Some(train_windows),
        test_windows: Some(test_windows),
        accuracy_software: Some(mean(&sw)),
        accuracy_in_memory: apply_noise.then(|| mean(&hw)),
        cost: Some(cost),
        error: None,
    })
}

fn sweep_csv(cells: &[SweepCell]) -> String {
    let mut out = String::from(
        "ngram,levels,train_windows,test_windows,accuracy_software,accuracy_in_memory,\
         crossbar_row_reads,xor_ops_saved_by_precompute,cycles_per_ngram,energy_per_ngram_j,\
         ngrams_per_second,ngrams_per_second_per_watt,error\n",
    );
    for c in cells {
        let fmt_opt_u = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        let fmt_opt_f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let cost_field = |f: fn(&CostReport) -> String| c.cost.as_ref().map(f).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            c.ngram,
            c.levels,
            fmt_opt_u(c.train_windows),
            fmt_opt_u(c.test_windows),
            fmt_opt_f(c.accuracy_software),
            fmt_opt_f(c.accuracy_in_memory),
            cost_field(|r| r.crossbar_row_reads.to_string()),
            cost_field(|r| r.xor_ops_saved_by_precompute.to_string()),
            cost_field(|r| r.cycles_per_ngram.to_string()),
            cost_field(|r| r.energy_per_ngram_j.to_string()),
            cost_field(|r| r.ngrams_per_second.to_string()),
            cost_field(|r| r.ngrams_per_second_per_watt.to_string()),
            c.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
        ));
    }
    out
}

pub fn sweep(cfg: &RunConfig, seed: u64) -> Result<()> {
    if cfg.sweep_ngrams.is_empty() || cfg.sweep_levels.is_empty() {
        bail!("sweep grids must be non-empty");
    }
    let grid: Vec<(usize, usize)> = cfg
        .sweep_ngrams
        .iter()
        .flat_map(|&n| cfg.sweep_levels.iter().map(move |&l| (n, l)))
        .collect();
    // cells run in parallel on the worker pool; per-cell seeds make the
    // results independent of execution order
    let cells: Vec<SweepCell> = par::map_indexed(grid.len(), |i| {
        let (n, l) = grid[i];
        run_cell(cfg, seed, n, l).unwrap_or_else(|e| SweepCell {
            ngram: n,
            levels: l,
            train_windows: None,
            test_windows: None,
            accuracy_software: None,
            accuracy_in_memory: None,
            cost: None,
            error: Some(format!("{e:#}")),
        })
    });
    let failed = cells.iter().filter(|c| c.error.is_some()).count();
    let metrics = SweepMetrics {
        command: "sweep",
        seed,
        dim: cfg.dim,
        channels: cfg.channels,
        noise_applied: !cfg.noise.is_noiseless(),
        cells: cells.clone(),
        failed_cells: failed,
    };
    fs::write(cfg.out_dir.join("sweep.csv"), sweep_csv(&cells))?;
    write_json(&cfg.out_dir.join("sweep.json"), &metrics)?;
    println!(
        "sweep: {} cells ({} failed), results in {}",
        cells.len(),
        failed,
        cfg.out_dir.display()
    );
    for c in &cells {
        match (&c.error, c.accuracy_software) {
            (Some(e), _) => println!("  N={} L={}: FAILED: {e}", c.ngram, c.levels),
            (None, Some(acc)) => match c.accuracy_in_memory {
                Some(hw) => println!(
                    "  N={} L={}: accuracy software {:.4}, in-memory {:.4}",
                    c.ngram, c.levels, acc, hw
                ),
                None => println!("  N={} L={}: accuracy {:.4}", c.ngram, c.levels, acc),
            },
            _ => {}
        }
    }
    if failed > 0 {
        bail!("{failed} sweep cell(s) failed");
    }
    Ok(())
}

// ---------------------------------------------------------------- compare

const HAMMING_BUCKETS: usize = 16;

#[derive(Serialize)]
struct CompareSubject {
    name: String,
    queries: usize,
    bitexact_rate: f64,
    prediction_agreement_rate: f64,
    mean_hamming: f64,
    /// Counts of per-query Hamming distances, bucketed uniformly over 0..=D.
    hamming_histogram: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    first_divergent_query: Option<usize>,
}

#[derive(Serialize)]
struct CompareMetrics {
    command: &'static str,
    seed: u64,
    dim: usize,
    ngram: usize,
    levels: Vec<usize>,
    hamming_bucket_width: f64,
    subjects: Vec<CompareSubject>,
    mean_bitexact_rate: f64,
    mean_prediction_agreement_rate: f64,
}

pub fn compare(cfg: &RunConfig, seed: u64) -> Result<()> {
    let enc = cfg.encoder_config(seed)?;
    let Some(ngram) = enc.uniform_ngram() else {
        bail!("compare requires a uniform n-gram size (conventional encoder constraint)");
    };
    let subjects = load_subjects(cfg, &enc, seed)?;
    let (im, cims) = enc.build_memories()?;

    let mut entries = Vec::new();
    for subject in &subjects {
        let queries = &subject.test;
        if queries.is_empty() {
            bail!("subject {} has no test windows", subject.name);
        }
        let baseline_protos = pipeline::train_baseline(&enc, &subject.train)?;
        let adapted_model = pipeline::train(&enc, &subject.train)?;

        let baseline_grams = encode_batch_baseline(&enc, &queries.windows, &im, &cims)?;
        let adapted_grams = encode_batch_ideal(&enc, &queries.windows, &adapted_model.image)?;

        let mut histogram = vec![0u64; HAMMING_BUCKETS];
        let mut bitexact = 0usize;
        let mut hamming_sum = 0u64;
        let mut first_divergent = None;
        for (i, (g, g2)) in baseline_grams.iter().zip(&adapted_grams).enumerate() {
            let d = g.hamming(g2)?;
            hamming_sum += d as u64;
            histogram[d * HAMMING_BUCKETS / (enc.dim + 1)] += 1;
            if d == 0 {
                bitexact += 1;
            } else if first_divergent.is_none() {
                first_divergent = Some(i);
            }
        }

        let base_preds =
            hdst_core::learner::predict_batch_software(&baseline_protos, &baseline_grams)?;
        let adapt_preds =
            hdst_core::learner::predict_batch_software(&adapted_model.prototypes, &adapted_grams)?;
        let agree = base_preds
            .iter()
            .zip(&adapt_preds)
            .filter(|((a, _), (b, _))| a == b)
            .count();

        let n = queries.len();
        entries.push(CompareSubject {
            name: subject.name.clone(),
            queries: n,
            bitexact_rate: bitexact as f64 / n as f64,
            prediction_agreement_rate: agree as f64 / n as f64,
            mean_hamming: hamming_sum as f64 / n as f64,
            hamming_histogram: histogram,
            first_divergent_query: first_divergent,
        });
    }
    let metrics = CompareMetrics {
        command: "compare",
        seed,
        dim: enc.dim,
        ngram,
        levels: enc.level_counts.clone(),
        hamming_bucket_width: (enc.dim + 1) as f64 / HAMMING_BUCKETS as f64,
        mean_bitexact_rate: mean(&entries.iter().map(|e| e.bitexact_rate).collect::<Vec<_>>()),
        mean_prediction_agreement_rate: mean(
            &entries
                .iter()
                .map(|e| e.prediction_agreement_rate)
                .collect::<Vec<_>>(),
        ),
        subjects: entries,
    };
    write_json(&cfg.out_dir.join("compare.json"), &metrics)?;
    println!(
        "compare: bit-exact rate {:.4}, prediction agreement {:.4}",
        metrics.mean_bitexact_rate, metrics.mean_prediction_agreement_rate
    );
    Ok(())
}

// ------------------------------------------------------------------- cost

#[derive(Serialize)]
struct CostMetrics {
    command: &'static str,
    seed: u64,
    dim: usize,
    ngram_sizes: Vec<usize>,
    level_counts: Vec<usize>,
    report: CostReport,
}

pub fn cost(cfg: &RunConfig, seed: u64) -> Result<()> {
    let enc = cfg.encoder_config(seed)?;
    let report = costmodel::estimate(&enc, &cfg.energy)?;
    let metrics = CostMetrics {
        command: "cost",
        seed,
        dim: enc.dim,
        ngram_sizes: enc.ngram_sizes.clone(),
        level_counts: enc.level_counts.clone(),
        report,
    };
    write_json(&cfg.out_dir.join("cost.json"), &metrics)?;
    println!(
        "cost: {} row reads, {} cycles, {:.3e} J per n-gram",
        report.crossbar_row_reads, report.cycles_per_ngram, report.energy_per_ngram_j
    );
    Ok(())
}
