//! Command implementations.
//!
//! Every command loads what it needs from the data root, writes its
//! artifacts into a run directory (configuration snapshot plus digest
//! manifest), and prints a short human-readable summary to stdout.
//! Failures surface as staged errors; the process exit path tags them
//! with the stage that failed.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use gaze_zsl::baselines::{
    attribute_embeddings, build_bow_embeddings, embed_central_point, embed_random_points,
    embed_saliency_histogram, encode_bubbles_bfs, fuse_embeddings,
};
use gaze_zsl::embed::{
    build_gaze_embeddings, read_embedding_set, write_embedding_set, ClassEmbeddings,
};
use gaze_zsl::eval::{
    image_set, make_splits, run_experiment, sweep_filter_params, AblationMode,
    ResultRecord, SweepOutcome,
};
use gaze_zsl::fixation::{
    detect_fixations, read_fixation_sequences, write_fixation_sequences, FixationSequence,
    GazeDataset,
};
use gaze_zsl::ingest::DatasetManifest;
use gaze_zsl::model::{
    predict_with, train_for_embeddings, write_model, CompatibilityModel, SvmConfig,
    TrainedModel,
};
use gaze_zsl::synth;
use gaze_zsl::{Error, Result};

use crate::config::{EmbeddingSource, RunConfig};
use crate::data::DataRoot;
use crate::rundir::RunDir;

/// Versioned header comment on TOML result files.
const RECORD_HEADER: &str = "# gaze-zsl record v1";

/// Generates a synthetic dataset into the data root and digests every
/// file it wrote.
pub fn cmd_synth(config: &RunConfig, out: Option<&str>) -> Result<()> {
    let data = synth::generate(&config.synth)?;
    synth::write_dataset(&data, &config.data_root).map_err(|e| e.in_stage("write"))?;

    let root = DataRoot::from_config(config);
    let mut run = RunDir::create(&config.run_root, out.unwrap_or("synth"), config)?;
    for rel in root.inventory(&data.manifest) {
        let label = format!("data/{}", rel.display());
        run.record(&label, &config.data_root.join(&rel))
            .map_err(|e| e.in_stage("write"))?;
    }
    let summary = format!(
        "classes {}\nimages {}\nparticipants {}\nstreams {}\nsamples per stream {}\n\
         signal strength {}\nseed {}\n",
        data.manifest.classes.len(),
        data.manifest.images.len(),
        data.manifest.participants.len(),
        data.streams.len(),
        config.synth.samples_per_stream,
        config.synth.class_signal_strength,
        config.synth.seed,
    );
    run.write("summary.txt", &summary)?;
    let dir = run.finish()?;
    println!(
        "wrote {} classes / {} images / {} participants to {}",
        data.manifest.classes.len(),
        data.manifest.images.len(),
        data.manifest.participants.len(),
        config.data_root.display(),
    );
    println!("run directory: {}", dir.display());
    Ok(())
}

/// Runs the fixation filter over every raw log and writes one fixation
/// file for the whole dataset. Streams yielding no fixation are skipped
/// and counted; downstream stages will fail loudly if a needed pair is
/// missing.
pub fn cmd_preprocess(config: &RunConfig, out: Option<&str>) -> Result<()> {
    let root = DataRoot::from_config(config);
    let manifest = root.manifest().map_err(|e| e.in_stage("ingest"))?;
    let streams = root.streams(&manifest).map_err(|e| e.in_stage("ingest"))?;

    let mut sequences: Vec<FixationSequence> = Vec::with_capacity(streams.len());
    let mut skipped = 0usize;
    for stream in &streams {
        let seq =
            detect_fixations(stream, &config.filter).map_err(|e| e.in_stage("fixation"))?;
        if seq.fixations.is_empty() {
            skipped += 1;
        } else {
            sequences.push(seq);
        }
    }
    if sequences.is_empty() {
        return Err(Error::invalid(
            "fixation",
            "no stream produced any fixation; filter parameters are too strict",
        ));
    }

    let mut run = RunDir::create(&config.run_root, out.unwrap_or("preprocess"), config)?;
    run.record("in/manifest.toml", &root.manifest_path())?;
    let fixation_path = run.path().join("fixations.csv");
    write_fixation_sequences(&sequences, &fixation_path)
        .map_err(|e| e.in_stage("write"))?;
    run.record("fixations.csv", &fixation_path)?;

    let mut summary = String::new();
    for participant in &manifest.participants {
        let mine: Vec<&FixationSequence> = sequences
            .iter()
            .filter(|s| &s.participant_id == participant)
            .collect();
        let fixations: usize = mine.iter().map(|s| s.fixations.len()).sum();
        let duration: f64 = mine
            .iter()
            .flat_map(|s| &s.fixations)
            .map(|f| f.duration_ms)
            .sum();
        summary.push_str(&format!(
            "{participant}: {} sequences, {} fixations, mean {:.1} per sequence, \
             mean duration {:.1} ms\n",
            mine.len(),
            fixations,
            fixations as f64 / (mine.len().max(1)) as f64,
            duration / (fixations.max(1)) as f64,
        ));
    }
    summary.push_str(&format!(
        "total: {} sequences from {} streams ({} empty, skipped)\n",
        sequences.len(),
        streams.len(),
        skipped,
    ));
    run.write("summary.txt", &summary)?;
    let dir = run.finish()?;
    print!("{summary}");
    println!("run directory: {}", dir.display());
    Ok(())
}

/// Builds the configured class embeddings and writes them, one file per
/// fused set or one per participant under late fusion.
pub fn cmd_embed(
    config: &RunConfig,
    fixations: Option<&Path>,
    out: Option<&str>,
) -> Result<()> {
    let root = DataRoot::from_config(config);
    let manifest = root.manifest().map_err(|e| e.in_stage("ingest"))?;
    let embeddings = build_embeddings(config, &root, &manifest, fixations)?;

    let mut run = RunDir::create(&config.run_root, out.unwrap_or("embed"), config)?;
    run.record("in/manifest.toml", &root.manifest_path())?;
    if let Some(path) = fixations {
        run.record("in/fixations.csv", path)?;
    }
    for (name, set) in named_sets(&embeddings, &manifest) {
        let path = run.path().join(&name);
        write_embedding_set(set, &path).map_err(|e| e.in_stage("write"))?;
        run.record(&name, &path)?;
        println!(
            "{name}: {} classes x {} dims ({})",
            set.classes.len(),
            set.dim(),
            set.source,
        );
    }
    let dir = run.finish()?;
    println!("run directory: {}", dir.display());
    Ok(())
}

/// Trains a compatibility model on every class and reports training-set
/// accuracy as a sanity signal.
pub fn cmd_train(
    config: &RunConfig,
    embeddings: &[PathBuf],
    out: Option<&str>,
) -> Result<()> {
    let root = DataRoot::from_config(config);
    let manifest = root.manifest().map_err(|e| e.in_stage("ingest"))?;
    let features = root.features(&manifest).map_err(|e| e.in_stage("ingest"))?;
    let images = image_set(&manifest, &features).map_err(|e| e.in_stage("ingest"))?;
    let (xs, labels) = images
        .for_classes(&manifest.classes)
        .map_err(|e| e.in_stage("ingest"))?;

    let embeddings = embeddings_for(config, &root, &manifest, embeddings, None)?;
    let trained = train_for_embeddings(&xs, &labels, &embeddings, &config.train)
        .map_err(|e| e.in_stage("train"))?;

    let mut correct = 0usize;
    for (i, &label) in labels.iter().enumerate() {
        let predicted = predict_with(&trained, &embeddings, xs.row(i))
            .map_err(|e| e.in_stage("train"))?;
        correct += usize::from(predicted == label);
    }
    let accuracy = correct as f64 / labels.len() as f64;

    let mut run = RunDir::create(&config.run_root, out.unwrap_or("train"), config)?;
    run.record("in/manifest.toml", &root.manifest_path())?;
    let models: Vec<(String, &CompatibilityModel)> = match &trained {
        TrainedModel::Single(model) => vec![("model.txt".to_string(), model)],
        TrainedModel::PerParticipant(models) => models
            .iter()
            .enumerate()
            .map(|(i, model)| {
                let name = if models.len() == manifest.participants.len() {
                    format!("model_{}.txt", manifest.participants[i])
                } else {
                    format!("model_{i}.txt")
                };
                (name, model)
            })
            .collect(),
    };
    for (name, model) in &models {
        let path = run.path().join(name);
        write_model(&path, model, &manifest.classes, &config.train)
            .map_err(|e| e.in_stage("write"))?;
        run.record(name, &path)?;
    }
    let summary = format!(
        "source {}\nimages {}\nclasses {}\nmodels {}\ntraining accuracy {:.3}\n",
        embeddings.source(),
        labels.len(),
        manifest.classes.len(),
        models.len(),
        accuracy,
    );
    run.write("summary.txt", &summary)?;
    let dir = run.finish()?;
    print!("{summary}");
    println!("run directory: {}", dir.display());
    Ok(())
}

/// Runs the zero-shot protocol: disjoint-class splits, per-split
/// cross-validation, held-out test accuracy.
pub fn cmd_eval(
    config: &RunConfig,
    embeddings: &[PathBuf],
    out: Option<&str>,
) -> Result<()> {
    let root = DataRoot::from_config(config);
    let manifest = root.manifest().map_err(|e| e.in_stage("ingest"))?;
    let features = root.features(&manifest).map_err(|e| e.in_stage("ingest"))?;
    let images = image_set(&manifest, &features).map_err(|e| e.in_stage("ingest"))?;
    let class_embeddings = embeddings_for(config, &root, &manifest, embeddings, None)?;
    let splits = make_splits(&manifest.classes, config.splits.count, config.splits.seed)?;

    let record = run_experiment(
        &images,
        &class_embeddings,
        &splits,
        &config.cv,
        class_embeddings.source(),
    )
    .map_err(|e| e.in_stage("experiment"))?;

    let mut run = RunDir::create(&config.run_root, out.unwrap_or("eval"), config)?;
    run.record("in/manifest.toml", &root.manifest_path())?;
    for path in embeddings {
        let label = format!("in/{}", file_label(path));
        run.record(&label, path)?;
    }
    run.write("record.toml", &record_toml(&record)?)?;
    let summary = render_record(&record);
    run.write("summary.txt", &summary)?;
    let dir = run.finish()?;
    print!("{summary}");
    println!("run directory: {}", dir.display());
    Ok(())
}

/// Degrades the gaze data toward bubble-like data and evaluates each
/// requested rung with the same protocol as `eval`.
pub fn cmd_ablate(
    config: &RunConfig,
    mode: Option<AblationMode>,
    out: Option<&str>,
) -> Result<()> {
    let root = DataRoot::from_config(config);
    let manifest = root.manifest().map_err(|e| e.in_stage("ingest"))?;
    let features = root.features(&manifest).map_err(|e| e.in_stage("ingest"))?;
    let images = image_set(&manifest, &features).map_err(|e| e.in_stage("ingest"))?;
    let tracks = root.bubbles().map_err(|e| e.in_stage("ingest"))?;
    let dataset = root
        .gaze_dataset(&manifest, &config.filter)
        .map_err(|e| e.in_stage("fixation"))?;
    let gaze_config = config.embedding.gaze_config()?;
    let splits = make_splits(&manifest.classes, config.splits.count, config.splits.seed)?;

    let modes = match mode {
        Some(m) => vec![m],
        None => vec![
            AblationMode::SameImages,
            AblationMode::SameLocationsConcat,
            AblationMode::SameLocationsAvg,
            AblationMode::SameLocationsRand,
        ],
    };

    let mut run = RunDir::create(&config.run_root, out.unwrap_or("ablate"), config)?;
    run.record("in/manifest.toml", &root.manifest_path())?;
    let mut rows = Vec::new();
    for mode in modes {
        let record = gaze_zsl::eval::ablate_bubbles(
            &dataset,
            &tracks,
            mode,
            &images,
            &gaze_config,
            &splits,
            &config.cv,
            config.splits.seed,
        )?;
        run.write(&format!("record_{mode}.toml"), &record_toml(&record)?)?;
        rows.push((mode.to_string(), record.mean_accuracy, record.std_accuracy));
    }

    let width = rows.iter().map(|(m, _, _)| m.len()).max().unwrap_or(4);
    let mut summary = format!("{:<width$}   mean    std\n", "mode");
    for (mode, mean, std) in &rows {
        summary.push_str(&format!("{mode:<width$}  {mean:.3}  {std:.3}\n"));
    }
    run.write("summary.txt", &summary)?;
    let dir = run.finish()?;
    print!("{summary}");
    println!("run directory: {}", dir.display());
    Ok(())
}

/// Scores fixation filter settings over a (dispersion x duration) grid
/// with a linear probe on the streams and renders the accuracy table.
pub fn cmd_sweep(
    config: &RunConfig,
    dispersions: &[f64],
    durations: &[f64],
    out: Option<&str>,
) -> Result<()> {
    let root = DataRoot::from_config(config);
    let manifest = root.manifest().map_err(|e| e.in_stage("ingest"))?;
    let streams = root.streams(&manifest).map_err(|e| e.in_stage("ingest"))?;
    let indices = DataRoot::class_indices(&manifest, &streams)?;

    let outcomes = sweep_filter_params(
        &streams,
        &indices,
        dispersions,
        durations,
        config.sweep.k,
        &SvmConfig::default(),
    )
    .map_err(|e| e.in_stage("sweep"))?;

    let mut run = RunDir::create(&config.run_root, out.unwrap_or("sweep"), config)?;
    run.record("in/manifest.toml", &root.manifest_path())?;

    #[derive(Serialize)]
    struct SweepFile<'a> {
        outcome: &'a [SweepOutcome],
    }
    let body = toml::to_string_pretty(&SweepFile { outcome: &outcomes })
        .map_err(|e| Error::invalid("sweep record", e.to_string()))?;
    run.write("sweep.toml", &format!("{RECORD_HEADER}\n{body}"))?;

    let table = render_sweep_table(&outcomes, dispersions, durations);
    run.write("summary.txt", &table)?;
    let dir = run.finish()?;
    print!("{table}");
    println!("run directory: {}", dir.display());
    Ok(())
}

/// Collects every result record under the run root and renders one
/// summary table.
pub fn cmd_report(run_root: &Path) -> Result<()> {
    let mut records: Vec<(PathBuf, ResultRecord)> = Vec::new();
    collect_records(run_root, &mut records)?;
    if records.is_empty() {
        println!("no result records under {}", run_root.display());
        return Ok(());
    }
    records.sort_by(|a, b| (&a.1.description, &a.0).cmp(&(&b.1.description, &b.0)));

    let width = records
        .iter()
        .map(|(_, r)| r.description.len())
        .max()
        .unwrap()
        .max("source".len());
    println!("{:<width$}   mean    std  splits  chosen", "source");
    for (_, record) in &records {
        println!(
            "{:<width$}  {:.3}  {:.3}  {:>6}  {}",
            record.description,
            record.mean_accuracy,
            record.std_accuracy,
            record.split_accuracies.len(),
            chosen_summary(record),
        );
    }
    Ok(())
}

/// Reads sequences from a fixation file, or filters the raw logs.
fn load_gaze_dataset(
    config: &RunConfig,
    root: &DataRoot,
    manifest: &DatasetManifest,
    fixations: Option<&Path>,
) -> Result<GazeDataset> {
    match fixations {
        Some(path) => {
            let mut dataset = GazeDataset::new(manifest.clone())?;
            for seq in read_fixation_sequences(path)? {
                dataset.insert(seq)?;
            }
            Ok(dataset)
        }
        None => root.gaze_dataset(manifest, &config.filter),
    }
}

/// Builds the configured embedding source over the manifest classes.
fn build_embeddings(
    config: &RunConfig,
    root: &DataRoot,
    manifest: &DatasetManifest,
    fixations: Option<&Path>,
) -> Result<ClassEmbeddings> {
    let classes = &manifest.classes;
    let emb = &config.embedding;
    let built = match emb.source {
        EmbeddingSource::Gaze => {
            let dataset = load_gaze_dataset(config, root, manifest, fixations)
                .map_err(|e| e.in_stage("fixation"))?;
            build_gaze_embeddings(&dataset, classes, &emb.gaze_config()?)
        }
        EmbeddingSource::Attributes => {
            let attributes = root.attributes(manifest).map_err(|e| e.in_stage("ingest"))?;
            attribute_embeddings(&attributes).map(ClassEmbeddings::Fused)
        }
        EmbeddingSource::Bow => {
            let corpus = root.corpus(manifest).map_err(|e| e.in_stage("ingest"))?;
            build_bow_embeddings(&corpus, emb.vocab).map(ClassEmbeddings::Fused)
        }
        EmbeddingSource::Random => {
            embed_random_points(manifest, classes, &emb.gaze_config()?, emb.count, emb.seed)
        }
        EmbeddingSource::Central => {
            embed_central_point(manifest, classes, &emb.gaze_config()?)
        }
        EmbeddingSource::Saliency => {
            let maps = root.saliency(manifest).map_err(|e| e.in_stage("ingest"))?;
            embed_saliency_histogram(&maps, manifest, classes, emb.grid())
                .map(ClassEmbeddings::Fused)
        }
        EmbeddingSource::Bubbles => {
            let tracks = root.bubbles().map_err(|e| e.in_stage("ingest"))?;
            encode_bubbles_bfs(&tracks, manifest, classes, emb.count)
                .map(ClassEmbeddings::Fused)
        }
        EmbeddingSource::Combined => {
            let dataset = load_gaze_dataset(config, root, manifest, fixations)
                .map_err(|e| e.in_stage("fixation"))?;
            let gaze = match build_gaze_embeddings(&dataset, classes, &emb.gaze_config()?)
                .map_err(|e| e.in_stage("embedding"))?
            {
                ClassEmbeddings::Fused(set) => set,
                ClassEmbeddings::PerParticipant(_) => {
                    return Err(Error::invalid(
                        "embed",
                        "gaze+attributes needs average or early fusion",
                    ))
                }
            };
            let attributes = root.attributes(manifest).map_err(|e| e.in_stage("ingest"))?;
            let attrs = attribute_embeddings(&attributes)?;
            fuse_embeddings(&gaze, &attrs).map(ClassEmbeddings::Fused)
        }
    };
    built.map_err(|e| match e {
        Error::Stage { .. } => e,
        other => other.in_stage("embedding"),
    })
}

/// Embeddings from explicit files when given, otherwise built from the
/// configuration. Either way the set is realigned to manifest class order
/// so training labels index the right rows.
fn embeddings_for(
    config: &RunConfig,
    root: &DataRoot,
    manifest: &DatasetManifest,
    files: &[PathBuf],
    fixations: Option<&Path>,
) -> Result<ClassEmbeddings> {
    let embeddings = if files.is_empty() {
        build_embeddings(config, root, manifest, fixations)?
    } else {
        let sets = files
            .iter()
            .map(|p| read_embedding_set(p))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.in_stage("ingest"))?;
        if sets.len() == 1 {
            ClassEmbeddings::Fused(sets.into_iter().next().expect("one set"))
        } else {
            ClassEmbeddings::PerParticipant(sets)
        }
    };
    embeddings
        .restrict(&manifest.classes)
        .map_err(|e| e.in_stage("embedding"))
}

/// File name for each embedding set: one fused file, or one per
/// participant under late fusion.
fn named_sets<'a>(
    embeddings: &'a ClassEmbeddings,
    manifest: &DatasetManifest,
) -> Vec<(String, &'a gaze_zsl::embed::EmbeddingSet)> {
    match embeddings {
        ClassEmbeddings::Fused(set) => vec![("embeddings.txt".to_string(), set)],
        ClassEmbeddings::PerParticipant(sets) => sets
            .iter()
            .enumerate()
            .map(|(i, set)| {
                let name = if sets.len() == manifest.participants.len() {
                    format!("embeddings_{}.txt", manifest.participants[i])
                } else {
                    format!("embeddings_{i}.txt")
                };
                (name, set)
            })
            .collect(),
    }
}

fn record_toml(record: &ResultRecord) -> Result<String> {
    let body = toml::to_string_pretty(record)
        .map_err(|e| Error::invalid("record", e.to_string()))?;
    Ok(format!("{RECORD_HEADER}\n{body}"))
}

fn render_record(record: &ResultRecord) -> String {
    let mut out = format!(
        "{}\nmean accuracy {:.3}, std {:.3}, {} splits\n",
        record.description,
        record.mean_accuracy,
        record.std_accuracy,
        record.split_accuracies.len(),
    );
    for (i, (acc, chosen)) in record
        .split_accuracies
        .iter()
        .zip(&record.split_configs)
        .enumerate()
    {
        out.push_str(&format!(
            "split {i}: {acc:.3} (step {}, {} epochs, val {:.3})\n",
            chosen.learning_rate, chosen.epochs, chosen.val_accuracy,
        ));
    }
    out
}

/// Most frequent winning (step, epochs) pair, smallest first on ties.
fn chosen_summary(record: &ResultRecord) -> String {
    let mut counts: HashMap<(u64, usize), usize> = HashMap::new();
    for c in &record.split_configs {
        *counts.entry((c.learning_rate.to_bits(), c.epochs)).or_insert(0) += 1;
    }
    let mut ranked: Vec<((u64, usize), usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| {
        b.1.cmp(&a.1)
            .then(f64::from_bits(a.0 .0).total_cmp(&f64::from_bits(b.0 .0)))
            .then(a.0 .1.cmp(&b.0 .1))
    });
    let ((rate_bits, epochs), n) = ranked[0];
    format!(
        "step {} x {} epochs ({}/{})",
        f64::from_bits(rate_bits),
        epochs,
        n,
        record.split_configs.len(),
    )
}

/// Accuracy grid, dispersions down the side and durations across the top,
/// plus the best cell.
fn render_sweep_table(
    outcomes: &[SweepOutcome],
    dispersions: &[f64],
    durations: &[f64],
) -> String {
    let by_cell: HashMap<(u64, u64), &SweepOutcome> = outcomes
        .iter()
        .map(|o| ((o.dispersion.to_bits(), o.min_duration_ms.to_bits()), o))
        .collect();
    let mut out = String::from(
        "probe accuracy by dispersion (rows) and min duration ms (columns)\n",
    );
    out.push_str(&format!("{:>10}", "disp\\dur"));
    for d in durations {
        out.push_str(&format!("{d:>9.1}"));
    }
    out.push('\n');
    let mut best: Option<&SweepOutcome> = None;
    for w in dispersions {
        out.push_str(&format!("{w:>10.1}"));
        for d in durations {
            match by_cell.get(&(w.to_bits(), d.to_bits())) {
                Some(o) => {
                    out.push_str(&format!("{:>9.3}", o.accuracy));
                    if best.is_none_or(|b| o.accuracy > b.accuracy) {
                        best = Some(o);
                    }
                }
                None => out.push_str(&format!("{:>9}", "-")),
            }
        }
        out.push('\n');
    }
    if let Some(b) = best {
        out.push_str(&format!(
            "best: dispersion {:.1}, min duration {:.1} ms -> accuracy {:.3} \
             (mean {:.1} fixations)\n",
            b.dispersion, b.min_duration_ms, b.accuracy, b.mean_fixation_count,
        ));
    }
    out
}

/// Recursively gathers `record*.toml` files; unparseable ones are skipped
/// with a warning so one stray file cannot hide every other result.
fn collect_records(dir: &Path, records: &mut Vec<(PathBuf, ResultRecord)>) -> Result<()> {
    if !dir.is_dir() {
        return Err(Error::invalid(
            "report",
            format!("{} is not a directory", dir.display()),
        ));
    }
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for path in entries {
        if path.is_dir() {
            collect_records(&path, records)?;
            continue;
        }
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if !name.starts_with("record") || !name.ends_with(".toml") {
            continue;
        }
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        match toml::from_str::<ResultRecord>(&text) {
            Ok(record) => records.push((path, record)),
            Err(e) => log::warn!("skipping {}: {e}", path.display()),
        }
    }
    Ok(())
}

fn file_label(path: &Path) -> String {
    path.file_name()
        .and_then(|n| n.to_str())
        .map(str::to_string)
        .unwrap_or_else(|| path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use gaze_zsl::eval::ChosenConfig;

    fn record(configs: &[(f64, usize)]) -> ResultRecord {
        let accs = vec![0.5; configs.len()];
        let chosen = configs
            .iter()
            .map(|&(learning_rate, epochs)| ChosenConfig {
                learning_rate,
                epochs,
                val_accuracy: 1.0,
            })
            .collect();
        ResultRecord::new("unit".into(), accs, chosen).unwrap()
    }

    #[test]
    fn chosen_summary_picks_the_mode() {
        let r = record(&[(0.1, 20), (0.1, 20), (1.0, 40)]);
        assert_eq!(chosen_summary(&r), "step 0.1 x 20 epochs (2/3)");
    }

    #[test]
    fn chosen_summary_breaks_ties_toward_smaller() {
        let r = record(&[(1.0, 40), (0.1, 20)]);
        assert_eq!(chosen_summary(&r), "step 0.1 x 20 epochs (1/2)");
    }

    #[test]
    fn sweep_table_lists_every_cell_and_the_best() {
        let outcomes = vec![
            SweepOutcome {
                dispersion: 10.0,
                min_duration_ms: 5.0,
                accuracy: 0.25,
                mean_fixation_count: 4.0,
            },
            SweepOutcome {
                dispersion: 10.0,
                min_duration_ms: 50.0,
                accuracy: 0.75,
                mean_fixation_count: 2.0,
            },
        ];
        let table = render_sweep_table(&outcomes, &[10.0], &[5.0, 50.0]);
        assert!(table.contains("0.250"));
        assert!(table.contains("0.750"));
        assert!(table.contains("best: dispersion 10.0, min duration 50.0"));
    }

    #[test]
    fn record_toml_round_trips() {
        let r = record(&[(0.1, 20)]);
        let text = record_toml(&r).unwrap();
        assert!(text.starts_with(RECORD_HEADER));
        let back: ResultRecord = toml::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
}
