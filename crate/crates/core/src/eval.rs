//! Zero-shot evaluation: disjoint class splits, per-class accuracy,
//! hyperparameter selection, the experiment runner, the gaze-to-bubbles
//! ablation ladder, and the fixation filter sweep.
//!
//! Classes are partitioned into train / validation / test sets; the model
//! never sees a test class during training and at evaluation time chooses
//! among test classes only. Hyperparameters (step size, epochs) are chosen
//! by validation-class accuracy per split.

use std::collections::{BTreeSet, HashMap, HashSet};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::BubbleTrack;
use crate::embed::{build_gaze_embeddings, ClassEmbeddings, Encoder, GazeEmbedConfig};
use crate::features::{extract_features, FeatureMask};
use crate::fixation::{detect_fixations, FilterParams, Fixation, FixationSequence, GazeDataset};
use crate::ingest::{DatasetManifest, FeatureMatrix, GazeStream};
use crate::model::{predict_with, train_for_embeddings, SvmConfig, TrainConfig};
use crate::{Error, Result};

/// One zero-shot split: disjoint class lists and the seed that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
}

impl SplitSpec {
    /// Checks the split is usable against a manifest class list: parts
    /// non-empty, pairwise disjoint, and drawn from known classes.
    pub fn validate(&self, known: &[String]) -> Result<()> {
        if self.train.is_empty() || self.val.is_empty() || self.test.is_empty() {
            return Err(Error::invalid("split", "every split part must be non-empty"));
        }
        let known: HashSet<&str> = known.iter().map(String::as_str).collect();
        let mut seen = HashSet::new();
        for part in [&self.train, &self.val, &self.test] {
            for class in part {
                if !known.contains(class.as_str()) {
                    return Err(Error::UnknownLabel(class.clone()));
                }
                if !seen.insert(class.as_str()) {
                    return Err(Error::invalid(
                        "split",
                        format!("class '{class}' appears in more than one part"),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Draws `n_splits` distinct splits: test and validation each take
/// `floor(C/4)` classes, training the remainder (24 -> 12/6/6, 4 -> 2/1/1).
/// Lists are sorted within each part; the partition itself is what varies.
pub fn make_splits(classes: &[String], n_splits: usize, seed: u64) -> Result<Vec<SplitSpec>> {
    let c = classes.len();
    if c < 4 {
        return Err(Error::invalid(
            "splits",
            format!("need at least 4 classes to split, found {c}"),
        ));
    }
    if n_splits == 0 {
        return Err(Error::invalid("splits", "need at least one split"));
    }
    let held = c / 4;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut splits: Vec<SplitSpec> = Vec::with_capacity(n_splits);
    for index in 0..n_splits {
        let mut attempts = 0;
        let split = loop {
            let mut deck: Vec<String> = classes.to_vec();
            deck.shuffle(&mut rng);
            let mut test: Vec<String> = deck[..held].to_vec();
            let mut val: Vec<String> = deck[held..2 * held].to_vec();
            let mut train: Vec<String> = deck[2 * held..].to_vec();
            test.sort();
            val.sort();
            train.sort();
            let candidate = SplitSpec {
                train,
                val,
                test,
                seed: seed.wrapping_add(index as u64),
            };
            let duplicate = splits
                .iter()
                .any(|s| s.train == candidate.train && s.val == candidate.val && s.test == candidate.test);
            if !duplicate {
                break candidate;
            }
            attempts += 1;
            if attempts >= 100 {
                return Err(Error::invalid(
                    "splits",
                    format!("could not draw {n_splits} distinct splits from {c} classes"),
                ));
            }
        };
        splits.push(split);
    }
    Ok(splits)
}

/// Mean over classes of the within-class correct rate. Classes with no
/// true instances are excluded from the mean, so a dominant class cannot
/// mask failure on a rare one.
pub fn per_class_accuracy(
    predictions: &[usize],
    truths: &[usize],
    n_classes: usize,
) -> Result<f64> {
    if truths.is_empty() {
        return Err(Error::invalid("accuracy", "no instances"));
    }
    if predictions.len() != truths.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions for {} truths",
            predictions.len(),
            truths.len()
        )));
    }
    let mut correct = vec![0usize; n_classes];
    let mut total = vec![0usize; n_classes];
    for (&p, &t) in predictions.iter().zip(truths) {
        if t >= n_classes {
            return Err(Error::UnknownLabel(format!(
                "true class index {t} out of range for {n_classes} classes"
            )));
        }
        total[t] += 1;
        if p == t {
            correct[t] += 1;
        }
    }
    let mut sum = 0.0;
    let mut present = 0usize;
    for c in 0..n_classes {
        if total[c] > 0 {
            sum += correct[c] as f64 / total[c] as f64;
            present += 1;
        }
    }
    Ok(sum / present as f64)
}

/// The (step size, epoch) grid searched per split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperGrid {
    pub learning_rates: Vec<f64>,
    pub epoch_counts: Vec<usize>,
}

impl Default for HyperGrid {
    fn default() -> Self {
        HyperGrid {
            learning_rates: vec![0.001, 0.01, 0.1, 1.0],
            epoch_counts: vec![10, 20, 40],
        }
    }
}

impl HyperGrid {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rates.is_empty() || self.epoch_counts.is_empty() {
            return Err(Error::invalid("grid", "grid must not be empty"));
        }
        if self
            .learning_rates
            .iter()
            .any(|r| !r.is_finite() || *r <= 0.0)
        {
            return Err(Error::invalid("grid", "learning rates must be positive"));
        }
        if self.epoch_counts.iter().any(|&e| e == 0) {
            return Err(Error::invalid("grid", "epoch counts must be at least 1"));
        }
        Ok(())
    }
}

/// The grid winner for one split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChosenConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub val_accuracy: f64,
}

/// Evaluates every grid point through `eval_fn` (validation accuracy) and
/// returns the best. Candidates are visited with step sizes ascending and
/// epochs ascending inside, replacing only on a strict improvement, so
/// ties go to the smaller step size, then to fewer epochs.
pub fn cross_validate<F>(grid: &HyperGrid, mut eval_fn: F) -> Result<ChosenConfig>
where
    F: FnMut(f64, usize) -> Result<f64>,
{
    grid.validate()?;
    let mut rates = grid.learning_rates.clone();
    rates.sort_by(|a, b| a.partial_cmp(b).expect("validated finite"));
    rates.dedup();
    let mut epochs = grid.epoch_counts.clone();
    epochs.sort_unstable();
    epochs.dedup();
    let mut best: Option<ChosenConfig> = None;
    for &rate in &rates {
        for &n in &epochs {
            let acc = eval_fn(rate, n)?;
            if best.is_none_or(|b| acc > b.val_accuracy) {
                best = Some(ChosenConfig {
                    learning_rate: rate,
                    epochs: n,
                    val_accuracy: acc,
                });
            }
        }
    }
    Ok(best.expect("grid validated non-empty"))
}

/// Image features joined with manifest labels, rows in manifest order.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSet {
    pub x: Array2<f64>,
    /// Class name of each row.
    pub class_names: Vec<String>,
    pub image_ids: Vec<String>,
}

impl ImageSet {
    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rows belonging to `classes`, with labels re-indexed into that list.
    pub fn for_classes(&self, classes: &[String]) -> Result<(Array2<f64>, Vec<usize>)> {
        let position: HashMap<&str, usize> = classes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let rows: Vec<usize> = (0..self.len())
            .filter(|&i| position.contains_key(self.class_names[i].as_str()))
            .collect();
        if rows.is_empty() {
            return Err(Error::invalid(
                "image set",
                format!("no images for classes {classes:?}"),
            ));
        }
        let mut x = Array2::zeros((rows.len(), self.x.ncols()));
        let mut labels = Vec::with_capacity(rows.len());
        for (out, &i) in rows.iter().enumerate() {
            x.row_mut(out).assign(&self.x.row(i));
            labels.push(position[self.class_names[i].as_str()]);
        }
        Ok((x, labels))
    }
}

/// Joins a manifest with its feature matrix.
pub fn image_set(manifest: &DatasetManifest, features: &FeatureMatrix) -> Result<ImageSet> {
    if features.len() != manifest.images.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} feature rows for {} manifest images",
            features.len(),
            manifest.images.len()
        )));
    }
    let mut x = Array2::zeros((manifest.images.len(), features.dim()));
    let mut class_names = Vec::with_capacity(manifest.images.len());
    let mut image_ids = Vec::with_capacity(manifest.images.len());
    for (i, img) in manifest.images.iter().enumerate() {
        x.row_mut(i).assign(&features.rows.row(img.feature_row));
        class_names.push(img.class.clone());
        image_ids.push(img.id.clone());
    }
    Ok(ImageSet {
        x,
        class_names,
        image_ids,
    })
}

/// Outcome of one experiment over several splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    /// What was evaluated (embedding source, fusion, encoder settings).
    pub description: String,
    /// Test accuracy per split, in split order.
    pub split_accuracies: Vec<f64>,
    /// Winning hyperparameters per split.
    pub split_configs: Vec<ChosenConfig>,
    pub mean_accuracy: f64,
    /// Population standard deviation over splits (divisor n).
    pub std_accuracy: f64,
}

impl ResultRecord {
    pub fn new(
        description: String,
        split_accuracies: Vec<f64>,
        split_configs: Vec<ChosenConfig>,
    ) -> Result<Self> {
        if split_accuracies.is_empty() || split_accuracies.len() != split_configs.len() {
            return Err(Error::invalid("result", "no split results"));
        }
        if split_accuracies.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::invalid("result", "accuracy outside [0, 1]"));
        }
        let n = split_accuracies.len() as f64;
        let mean = split_accuracies.iter().sum::<f64>() / n;
        let var = split_accuracies
            .iter()
            .map(|a| (a - mean).powi(2))
            .sum::<f64>()
            / n;
        Ok(ResultRecord {
            description,
            split_accuracies,
            split_configs,
            mean_accuracy: mean,
            std_accuracy: var.sqrt(),
        })
    }
}

fn evaluate_split(
    images: &ImageSet,
    embeddings: &ClassEmbeddings,
    split: &SplitSpec,
    grid: &HyperGrid,
) -> Result<(f64, ChosenConfig)> {
    split.validate(embeddings.classes())?;
    let train_emb = embeddings.restrict(&split.train)?;
    let val_emb = embeddings.restrict(&split.val)?;
    let test_emb = embeddings.restrict(&split.test)?;
    let (train_x, train_y) = images.for_classes(&split.train)?;
    let (val_x, val_y) = images.for_classes(&split.val)?;
    let (test_x, test_y) = images.for_classes(&split.test)?;

    let chosen = cross_validate(grid, |rate, epochs| {
        let config = TrainConfig {
            learning_rate: rate,
            epochs,
            seed: split.seed,
            shuffle: true,
        };
        let model = train_for_embeddings(&train_x, &train_y, &train_emb, &config)?;
        let preds: Vec<usize> = (0..val_x.nrows())
            .map(|i| predict_with(&model, &val_emb, val_x.row(i)))
            .collect::<Result<_>>()?;
        per_class_accuracy(&preds, &val_y, split.val.len())
    })?;

    let config = TrainConfig {
        learning_rate: chosen.learning_rate,
        epochs: chosen.epochs,
        seed: split.seed,
        shuffle: true,
    };
    let model = train_for_embeddings(&train_x, &train_y, &train_emb, &config)?;
    let preds: Vec<usize> = (0..test_x.nrows())
        .map(|i| predict_with(&model, &test_emb, test_x.row(i)))
        .collect::<Result<_>>()?;
    let accuracy = per_class_accuracy(&preds, &test_y, split.test.len())?;
    Ok((accuracy, chosen))
}

/// Runs the full protocol: per split, cross-validate on validation
/// classes, then report the winner's accuracy on the held-out test
/// classes. Splits evaluate in parallel when the `parallel` feature is on;
/// the record is identical either way.
pub fn run_experiment(
    images: &ImageSet,
    embeddings: &ClassEmbeddings,
    splits: &[SplitSpec],
    grid: &HyperGrid,
    description: &str,
) -> Result<ResultRecord> {
    if splits.is_empty() {
        return Err(Error::invalid("experiment", "no splits"));
    }
    #[cfg(feature = "parallel")]
    let outcomes = {
        use rayon::prelude::*;
        splits
            .par_iter()
            .map(|split| evaluate_split(images, embeddings, split, grid))
            .collect::<Result<Vec<_>>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes = splits
        .iter()
        .map(|split| evaluate_split(images, embeddings, split, grid))
        .collect::<Result<Vec<_>>>()?;
    let (accs, configs): (Vec<f64>, Vec<ChosenConfig>) = outcomes.into_iter().unzip();
    ResultRecord::new(description.to_string(), accs, configs)
}

/// How gaze data is degraded toward bubble-like data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationMode {
    /// Keep only bubble-annotated images; gaze untouched.
    SameImages,
    /// Additionally keep only fixations inside some bubble.
    SameLocationsConcat,
    /// As concat, then collapse each sequence to its mean point.
    SameLocationsAvg,
    /// As concat, then keep one seeded-random fixation per sequence.
    SameLocationsRand,
}

impl std::fmt::Display for AblationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            AblationMode::SameImages => "same_images",
            AblationMode::SameLocationsConcat => "same_locations_concat",
            AblationMode::SameLocationsAvg => "same_locations_avg",
            AblationMode::SameLocationsRand => "same_locations_rand",
        };
        write!(f, "{name}")
    }
}

impl std::str::FromStr for AblationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "same_images" => Ok(AblationMode::SameImages),
            "same_locations_concat" => Ok(AblationMode::SameLocationsConcat),
            "same_locations_avg" => Ok(AblationMode::SameLocationsAvg),
            "same_locations_rand" => Ok(AblationMode::SameLocationsRand),
            other => Err(Error::invalid(
                "ablation",
                format!("unknown ablation mode '{other}'"),
            )),
        }
    }
}

fn inside_any_bubble(fix: &Fixation, track: &BubbleTrack) -> bool {
    track.bubbles.iter().any(|b| {
        let dx = fix.x - b.x;
        let dy = fix.y - b.y;
        // closed ball: a fixation exactly on the boundary is retained.
        dx * dx + dy * dy <= b.radius * b.radius
    })
}

fn mean_fixation(kept: &[Fixation]) -> Fixation {
    let n = kept.len() as f64;
    Fixation {
        x: kept.iter().map(|f| f.x).sum::<f64>() / n,
        y: kept.iter().map(|f| f.y).sum::<f64>() / n,
        onset_ms: kept
            .iter()
            .map(|f| f.onset_ms)
            .fold(f64::INFINITY, f64::min),
        duration_ms: kept.iter().map(|f| f.duration_ms).sum::<f64>() / n,
        pupil: kept.iter().map(|f| f.pupil).sum::<f64>() / n,
    }
}

/// Applies one ablation mode, producing a dataset restricted to
/// bubble-annotated images. Location modes drop fixations outside every
/// bubble; a sequence left empty is an error naming the class and mode.
pub fn ablate_dataset(
    dataset: &GazeDataset,
    tracks: &[BubbleTrack],
    mode: AblationMode,
    seed: u64,
) -> Result<GazeDataset> {
    let by_image: HashMap<&str, &BubbleTrack> = tracks
        .iter()
        .filter(|t| !t.bubbles.is_empty())
        .map(|t| (t.image_id.as_str(), t))
        .collect();
    let manifest = &dataset.manifest;
    let annotated: BTreeSet<&str> = manifest
        .images
        .iter()
        .map(|i| i.id.as_str())
        .filter(|id| by_image.contains_key(id))
        .collect();
    if annotated.is_empty() {
        return Err(Error::invalid(
            "ablation",
            "no manifest image has bubble annotations",
        ));
    }
    let mut reduced = manifest.clone();
    reduced.images = manifest
        .images
        .iter()
        .filter(|i| annotated.contains(i.id.as_str()))
        .cloned()
        .collect();
    // the reduced manifest is only used to drive embedding construction;
    // renumber rows compactly so it stays internally valid.
    for (row, img) in reduced.images.iter_mut().enumerate() {
        img.feature_row = row;
    }
    let class_of: HashMap<&str, &str> = manifest
        .images
        .iter()
        .map(|i| (i.id.as_str(), i.class.as_str()))
        .collect();

    let mut out = GazeDataset::new(reduced.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for participant in &reduced.participants {
        for image in &reduced.images {
            let seq = dataset.require(participant, &image.id)?;
            let fixations = match mode {
                AblationMode::SameImages => seq.fixations.clone(),
                _ => {
                    let track = by_image[image.id.as_str()];
                    let kept: Vec<Fixation> = seq
                        .fixations
                        .iter()
                        .filter(|f| inside_any_bubble(f, track))
                        .copied()
                        .collect();
                    if kept.is_empty() {
                        return Err(Error::EmptyClass {
                            class: class_of[image.id.as_str()].to_string(),
                            context: format!(
                                "ablation '{mode}' left no fixations \
                                 (participant '{participant}', image '{}')",
                                image.id
                            ),
                        });
                    }
                    match mode {
                        AblationMode::SameLocationsConcat => kept,
                        AblationMode::SameLocationsAvg => vec![mean_fixation(&kept)],
                        AblationMode::SameLocationsRand => {
                            vec![kept[rng.random_range(0..kept.len())]]
                        }
                        AblationMode::SameImages => unreachable!(),
                    }
                }
            };
            out.insert(FixationSequence {
                image_id: image.id.clone(),
                participant_id: participant.clone(),
                image_width: seq.image_width,
                image_height: seq.image_height,
                fixations,
            })?;
        }
    }
    Ok(out)
}

/// Runs the experiment protocol on a bubble-ablated copy of the gaze data.
#[allow(clippy::too_many_arguments)]
pub fn ablate_bubbles(
    dataset: &GazeDataset,
    tracks: &[BubbleTrack],
    mode: AblationMode,
    images: &ImageSet,
    config: &GazeEmbedConfig,
    splits: &[SplitSpec],
    grid: &HyperGrid,
    seed: u64,
) -> Result<ResultRecord> {
    let ablated =
        ablate_dataset(dataset, tracks, mode, seed).map_err(|e| e.in_stage("ablation"))?;
    let classes = ablated.manifest.classes.clone();
    let embeddings = build_gaze_embeddings(&ablated, &classes, config)
        .map_err(|e| e.in_stage("embedding"))?;
    run_experiment(
        images,
        &embeddings,
        splits,
        grid,
        &format!("ablation:{mode}:{}", embeddings.source()),
    )
    .map_err(|e| e.in_stage("experiment"))
}

/// One grid point of the fixation filter sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub dispersion: f64,
    pub min_duration_ms: f64,
    /// Per-class accuracy of the linear probe on held-out streams.
    pub accuracy: f64,
    /// Mean fixations per stream at these settings.
    pub mean_fixation_count: f64,
}

/// Scores (dispersion, duration) filter settings by how well a linear
/// one-vs-rest SVM on sampled fixation features separates the stream
/// classes. Streams alternate between train and test within each class;
/// a stream with no fixations contributes a zero vector.
pub fn sweep_filter_params(
    streams: &[GazeStream],
    class_indices: &[usize],
    dispersions: &[f64],
    durations: &[f64],
    k: usize,
    svm: &SvmConfig,
) -> Result<Vec<SweepOutcome>> {
    if streams.is_empty() || streams.len() != class_indices.len() {
        return Err(Error::invalid(
            "sweep",
            "streams and class labels must align and be non-empty",
        ));
    }
    if dispersions.is_empty() || durations.is_empty() {
        return Err(Error::invalid("sweep", "empty parameter grid"));
    }
    if k == 0 {
        return Err(Error::invalid("sweep", "k must be at least 1"));
    }
    let n_classes = class_indices.iter().max().unwrap() + 1;
    if n_classes < 2 {
        return Err(Error::invalid("sweep", "need at least two stream classes"));
    }
    // alternate train/test per class so both sides see every class.
    let mut seen = vec![0usize; n_classes];
    let mut is_train = Vec::with_capacity(streams.len());
    for &c in class_indices {
        is_train.push(seen[c] % 2 == 0);
        seen[c] += 1;
    }
    if seen.iter().any(|&n| n < 2) {
        return Err(Error::invalid(
            "sweep",
            "every class needs at least two streams",
        ));
    }

    let grid: Vec<(f64, f64)> = dispersions
        .iter()
        .flat_map(|&w| durations.iter().map(move |&t| (w, t)))
        .collect();
    let encoder = Encoder::SequenceFeatures {
        k,
        mask: FeatureMask::all(),
    };
    let evaluate = |&(dispersion, min_duration_ms): &(f64, f64)| -> Result<SweepOutcome> {
        let params = FilterParams {
            dispersion,
            min_duration_ms,
        };
        let mut x = Array2::zeros((streams.len(), encoder.dim()));
        let mut total_fixations = 0usize;
        for (i, stream) in streams.iter().enumerate() {
            let seq = detect_fixations(stream, &params)?;
            total_fixations += seq.len();
            if !seq.is_empty() {
                let v = encoder.encode(&extract_features(&seq))?;
                x.row_mut(i).assign(&v);
            }
        }
        let train_rows: Vec<usize> = (0..streams.len()).filter(|&i| is_train[i]).collect();
        let test_rows: Vec<usize> = (0..streams.len()).filter(|&i| !is_train[i]).collect();
        let select = |rows: &[usize]| {
            let mut m = Array2::zeros((rows.len(), x.ncols()));
            let mut y = Vec::with_capacity(rows.len());
            for (out, &i) in rows.iter().enumerate() {
                m.row_mut(out).assign(&x.row(i));
                y.push(class_indices[i]);
            }
            (m, y)
        };
        let (mut train_x, train_y) = select(&train_rows);
        let (mut test_x, test_y) = select(&test_rows);
        // z-score columns with training statistics; raw columns mix
        // normalized coordinates with millisecond durations, which the
        // fixed-rate SGD probe cannot absorb on its own.
        for j in 0..train_x.ncols() {
            let col = train_x.column(j);
            let mean = col.sum() / col.len() as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
            let scale = if var > 0.0 { var.sqrt().recip() } else { 0.0 };
            train_x.column_mut(j).mapv_inplace(|v| (v - mean) * scale);
            test_x.column_mut(j).mapv_inplace(|v| (v - mean) * scale);
        }
        let classifier = crate::model::train_ovr_svm(&train_x, &train_y, svm)?;
        let preds: Vec<usize> = (0..test_x.nrows())
            .map(|i| classifier.predict(test_x.row(i)))
            .collect::<Result<_>>()?;
        Ok(SweepOutcome {
            dispersion,
            min_duration_ms,
            accuracy: per_class_accuracy(&preds, &test_y, n_classes)?,
            mean_fixation_count: total_fixations as f64 / streams.len() as f64,
        })
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        grid.par_iter().map(evaluate).collect()
    }
    #[cfg(not(feature = "parallel"))]
    grid.iter().map(evaluate).collect()
}
