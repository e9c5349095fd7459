//! Bilinear compatibility model trained with a structured ranking loss.
//!
//! An image with feature vector `x` and a class with embedding `e` are
//! scored by `x' W e`. Training visits labelled examples by SGD: for each
//! example the highest-scoring class under a 0/1 margin cost is found, and
//! when it beats the true class the rank-one update
//! `W += lr * x * (e_true - e_violator)'` is applied. Prediction is the
//! argmax of the class scores, ties broken by the lowest class index.
//!
//! Also hosts the linear one-vs-rest SVM used to compare fixation filter
//! settings on stacked per-image gaze features.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embed::{ClassEmbeddings, EmbeddingSet};
use crate::{Error, Result};

/// Per-class scores aligned with an [`EmbeddingSet`]'s class order.
pub type ScoreVector = Array1<f64>;

/// Index of the maximal score; exact ties go to the lowest index.
pub fn argmax_lowest(scores: &ScoreVector) -> usize {
    let mut best = 0;
    for (i, &v) in scores.iter().enumerate().skip(1) {
        if v > scores[best] {
            best = i;
        }
    }
    best
}

/// SGD hyperparameters for compatibility training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            epochs: 20,
            seed: 0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    /// Configuration-level validation: a useful run needs a positive step.
    /// (`train_sje` itself also accepts a zero rate, which leaves the model
    /// at its zero initialization.)
    pub fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::invalid(
                "train config",
                "learning_rate must be positive and finite",
            ));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("train config", "epochs must be at least 1"));
        }
        Ok(())
    }
}

/// The bilinear map `W` between image features (rows) and class embeddings
/// (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityModel {
    pub w: Array2<f64>,
}

impl CompatibilityModel {
    pub fn zeros(input_dim: usize, embedding_dim: usize) -> Self {
        CompatibilityModel {
            w: Array2::zeros((input_dim, embedding_dim)),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn embedding_dim(&self) -> usize {
        self.w.ncols()
    }

    fn check_dims(&self, theta: ArrayView1<'_, f64>, set: &EmbeddingSet) -> Result<()> {
        if theta.len() != self.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "image vector has {} entries, model expects {}",
                theta.len(),
                self.input_dim()
            )));
        }
        if set.dim() != self.embedding_dim() {
            return Err(Error::DimensionMismatch(format!(
                "class embeddings have {} dims, model expects {}",
                set.dim(),
                self.embedding_dim()
            )));
        }
        Ok(())
    }

    /// Compatibility of one image with every class: `theta' W e_y`.
    pub fn score(&self, theta: ArrayView1<'_, f64>, set: &EmbeddingSet) -> Result<ScoreVector> {
        self.check_dims(theta, set)?;
        let projected = theta.dot(&self.w);
        Ok(set.vectors.dot(&projected))
    }

    /// Class index with the highest compatibility.
    pub fn predict(&self, theta: ArrayView1<'_, f64>, set: &EmbeddingSet) -> Result<usize> {
        Ok(argmax_lowest(&self.score(theta, set)?))
    }

    /// Structured hinge loss of one example: how far the margin-augmented
    /// best score exceeds the true class score. Nonnegative; zero exactly
    /// when the true class wins every comparison by at least 1.
    pub fn example_loss(
        &self,
        theta: ArrayView1<'_, f64>,
        truth: usize,
        set: &EmbeddingSet,
    ) -> Result<f64> {
        let scores = self.augmented(theta, truth, set)?;
        Ok(scores[argmax_lowest(&scores)] - (scores[truth]))
    }

    /// Scores with the 0/1 margin cost added to every wrong class.
    fn augmented(
        &self,
        theta: ArrayView1<'_, f64>,
        truth: usize,
        set: &EmbeddingSet,
    ) -> Result<ScoreVector> {
        if truth >= set.classes.len() {
            return Err(Error::UnknownLabel(format!(
                "class index {truth} out of range for {} classes",
                set.classes.len()
            )));
        }
        let mut scores = self.score(theta, set)?;
        for (y, s) in scores.iter_mut().enumerate() {
            if y != truth {
                *s += 1.0;
            }
        }
        Ok(scores)
    }

    /// One SGD step on one example. Finds the margin-augmented best class;
    /// if it differs from the truth and strictly violates the margin, moves
    /// `W` toward the true embedding and away from the violator. Returns
    /// whether an update happened.
    pub fn hinge_step(
        &mut self,
        theta: ArrayView1<'_, f64>,
        truth: usize,
        set: &EmbeddingSet,
        learning_rate: f64,
    ) -> Result<bool> {
        let scores = self.augmented(theta, truth, set)?;
        let violator = argmax_lowest(&scores);
        if violator == truth || scores[violator] - scores[truth] <= 0.0 {
            return Ok(false);
        }
        let diff = &set.vectors.row(truth) - &set.vectors.row(violator);
        for (i, &t) in theta.iter().enumerate() {
            let step = learning_rate * t;
            for (j, &d) in diff.iter().enumerate() {
                self.w[[i, j]] += step * d;
            }
        }
        Ok(true)
    }
}

fn validate_training_inputs(
    xs: &Array2<f64>,
    labels: &[usize],
    set: &EmbeddingSet,
) -> Result<()> {
    if xs.nrows() == 0 {
        return Err(Error::invalid("training", "no training examples"));
    }
    if labels.len() != xs.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} examples",
            labels.len(),
            xs.nrows()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= set.classes.len()) {
        return Err(Error::UnknownLabel(format!(
            "class index {bad} out of range for {} classes",
            set.classes.len()
        )));
    }
    Ok(())
}

/// Trains a compatibility model by SGD from a zero matrix. Deterministic
/// given the example order, the seed and the configuration. A zero
/// learning rate is allowed and leaves the matrix at zero.
pub fn train_sje(
    xs: &Array2<f64>,
    labels: &[usize],
    set: &EmbeddingSet,
    config: &TrainConfig,
) -> Result<CompatibilityModel> {
    Ok(train_sje_with_history(xs, labels, set, config)?.0)
}

/// As [`train_sje`], also returning the mean example loss measured after
/// each epoch.
pub fn train_sje_with_history(
    xs: &Array2<f64>,
    labels: &[usize],
    set: &EmbeddingSet,
    config: &TrainConfig,
) -> Result<(CompatibilityModel, Vec<f64>)> {
    validate_training_inputs(xs, labels, set)?;
    if !config.learning_rate.is_finite() || config.learning_rate < 0.0 {
        return Err(Error::invalid(
            "training",
            "learning rate must be finite and nonnegative",
        ));
    }
    if config.epochs == 0 {
        return Err(Error::invalid("training", "epochs must be at least 1"));
    }
    let mut model = CompatibilityModel::zeros(xs.ncols(), set.dim());
    let mut order: Vec<usize> = (0..xs.nrows()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut history = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        for &i in &order {
            model.hinge_step(xs.row(i), labels[i], set, config.learning_rate)?;
        }
        history.push(mean_loss(&model, xs, labels, set)?);
    }
    Ok((model, history))
}

/// Mean structured hinge loss over a labelled set.
pub fn mean_loss(
    model: &CompatibilityModel,
    xs: &Array2<f64>,
    labels: &[usize],
    set: &EmbeddingSet,
) -> Result<f64> {
    validate_training_inputs(xs, labels, set)?;
    let mut total = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        total += model.example_loss(xs.row(i), label, set)?;
    }
    Ok(total / labels.len() as f64)
}

/// Averages per-participant score vectors and takes the argmax. All
/// participants must list classes in the same order.
pub fn predict_late(
    models: &[CompatibilityModel],
    theta: ArrayView1<'_, f64>,
    sets: &[EmbeddingSet],
) -> Result<usize> {
    if models.is_empty() || models.len() != sets.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} models for {} embedding sets",
            models.len(),
            sets.len()
        )));
    }
    for set in &sets[1..] {
        if set.classes != sets[0].classes {
            return Err(Error::invalid(
                "late fusion",
                "participants disagree on class order",
            ));
        }
    }
    let mut mean: ScoreVector = Array1::zeros(sets[0].classes.len());
    for (model, set) in models.iter().zip(sets) {
        mean += &model.score(theta, set)?;
    }
    mean /= models.len() as f64;
    Ok(argmax_lowest(&mean))
}

/// One model per fused embedding set, or one per participant for late
/// score fusion.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Single(CompatibilityModel),
    PerParticipant(Vec<CompatibilityModel>),
}

/// Trains whichever shape the embeddings call for. Per-participant models
/// are independent and train in parallel when the `parallel` feature is on.
pub fn train_for_embeddings(
    xs: &Array2<f64>,
    labels: &[usize],
    embeddings: &ClassEmbeddings,
    config: &TrainConfig,
) -> Result<TrainedModel> {
    match embeddings {
        ClassEmbeddings::Fused(set) => Ok(TrainedModel::Single(train_sje(xs, labels, set, config)?)),
        ClassEmbeddings::PerParticipant(sets) => {
            #[cfg(feature = "parallel")]
            let models = {
                use rayon::prelude::*;
                sets.par_iter()
                    .map(|set| train_sje(xs, labels, set, config))
                    .collect::<Result<Vec<_>>>()?
            };
            #[cfg(not(feature = "parallel"))]
            let models = sets
                .iter()
                .map(|set| train_sje(xs, labels, set, config))
                .collect::<Result<Vec<_>>>()?;
            Ok(TrainedModel::PerParticipant(models))
        }
    }
}

/// Predicts a class index with whichever shape was trained. The embedding
/// shape must match the model shape.
pub fn predict_with(
    trained: &TrainedModel,
    embeddings: &ClassEmbeddings,
    theta: ArrayView1<'_, f64>,
) -> Result<usize> {
    match (trained, embeddings) {
        (TrainedModel::Single(model), ClassEmbeddings::Fused(set)) => model.predict(theta, set),
        (TrainedModel::PerParticipant(models), ClassEmbeddings::PerParticipant(sets)) => {
            predict_late(models, theta, sets)
        }
        _ => Err(Error::invalid(
            "predict",
            "model shape does not match embedding shape (fused vs per-participant)",
        )),
    }
}

/// A deterministic linearly separable reference instance: `per_class`
/// examples for each of three classes whose image features cluster around
/// distinct prototypes aligned with orthogonal class embeddings.
pub fn separable_instance(per_class: usize, seed: u64) -> (Array2<f64>, Vec<usize>, EmbeddingSet) {
    use rand::Rng;
    let classes = 3usize;
    let dim = 4usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Array2::zeros((classes * per_class, dim));
    let mut labels = Vec::with_capacity(classes * per_class);
    for c in 0..classes {
        for i in 0..per_class {
            let row = c * per_class + i;
            for j in 0..dim {
                let base = if j == c { 1.0 } else { 0.0 };
                xs[[row, j]] = base + rng.random_range(-0.1..0.1);
            }
            labels.push(c);
        }
    }
    let mut vectors = Array2::zeros((classes, classes));
    for c in 0..classes {
        vectors[[c, c]] = 1.0;
    }
    let set = EmbeddingSet {
        classes: (0..classes).map(|c| format!("class{c}")).collect(),
        vectors,
        source: "reference".into(),
    };
    (xs, labels, set)
}

pub const MODEL_FILE_MAGIC: &str = "# sje-model v1";

/// Writes a trained model with its class order and training configuration.
/// Matrix entries round-trip exactly through decimal.
pub fn write_model(
    path: &Path,
    model: &CompatibilityModel,
    classes: &[String],
    config: &TrainConfig,
) -> Result<()> {
    let mut out = String::new();
    out.push_str(MODEL_FILE_MAGIC);
    out.push('\n');
    out.push_str(&format!(
        "# dims: {} {}\n",
        model.input_dim(),
        model.embedding_dim()
    ));
    out.push_str(&format!("# classes: {}\n", classes.join(",")));
    out.push_str(&format!("# learning_rate: {}\n", config.learning_rate));
    out.push_str(&format!("# epochs: {}\n", config.epochs));
    out.push_str(&format!("# seed: {}\n", config.seed));
    out.push_str(&format!("# shuffle: {}\n", config.shuffle));
    for row in model.w.rows() {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            out.push_str(&v.to_string());
            first = false;
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a model file written by [`write_model`].
pub fn read_model(path: &Path) -> Result<(CompatibilityModel, Vec<String>, TrainConfig)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == MODEL_FILE_MAGIC => {}
        _ => return Err(Error::parse(path, 1, format!("expected '{MODEL_FILE_MAGIC}'"))),
    }
    let mut dims: Option<(usize, usize)> = None;
    let mut classes: Option<Vec<String>> = None;
    let mut config = TrainConfig::default();
    let mut data: Vec<f64> = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            let field = |v: &str, what: &str| -> Result<String> {
                if v.is_empty() {
                    Err(Error::parse(path, lineno, format!("empty {what}")))
                } else {
                    Ok(v.to_string())
                }
            };
            if let Some(v) = rest.strip_prefix("dims:") {
                let parts: Vec<&str> = v.split_whitespace().collect();
                if parts.len() != 2 {
                    return Err(Error::parse(path, lineno, "dims needs two integers"));
                }
                let d = parts[0].parse().map_err(|_| {
                    Error::parse(path, lineno, "bad input dimension")
                })?;
                let e = parts[1].parse().map_err(|_| {
                    Error::parse(path, lineno, "bad embedding dimension")
                })?;
                dims = Some((d, e));
            } else if let Some(v) = rest.strip_prefix("classes:") {
                classes = Some(
                    field(v.trim(), "class list")?
                        .split(',')
                        .map(|c| c.trim().to_string())
                        .collect(),
                );
            } else if let Some(v) = rest.strip_prefix("learning_rate:") {
                config.learning_rate = v.trim().parse().map_err(|_| {
                    Error::parse(path, lineno, "bad learning rate")
                })?;
            } else if let Some(v) = rest.strip_prefix("epochs:") {
                config.epochs = v.trim().parse().map_err(|_| {
                    Error::parse(path, lineno, "bad epoch count")
                })?;
            } else if let Some(v) = rest.strip_prefix("seed:") {
                config.seed = v.trim().parse().map_err(|_| {
                    Error::parse(path, lineno, "bad seed")
                })?;
            } else if let Some(v) = rest.strip_prefix("shuffle:") {
                config.shuffle = v.trim().parse().map_err(|_| {
                    Error::parse(path, lineno, "bad shuffle flag")
                })?;
            }
            continue;
        }
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("'{tok}' is not a number")))?;
            data.push(v);
        }
    }
    let (d, e) = dims.ok_or_else(|| Error::parse(path, 1, "missing dims header"))?;
    let classes = classes.ok_or_else(|| Error::parse(path, 1, "missing classes header"))?;
    if data.len() != d * e {
        return Err(Error::DimensionMismatch(format!(
            "{} matrix entries for a {d}x{e} model",
            data.len()
        )));
    }
    let w = Array2::from_shape_vec((d, e), data)
        .map_err(|err| Error::invalid("model file", err.to_string()))?;
    Ok((CompatibilityModel { w }, classes, config))
}

/// Linear one-vs-rest SVM hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            lambda: 1e-4,
            epochs: 30,
            seed: 0,
        }
    }
}

/// Per-class linear scorers with an implicit bias feature.
#[derive(Debug, Clone, PartialEq)]
pub struct OneVsRestSvm {
    /// One row per class over the input dims plus a trailing bias weight.
    pub weights: Array2<f64>,
}

impl OneVsRestSvm {
    pub fn n_classes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn scores(&self, x: ArrayView1<'_, f64>) -> Result<ScoreVector> {
        if x.len() + 1 != self.weights.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "sample has {} features, classifier expects {}",
                x.len(),
                self.weights.ncols() - 1
            )));
        }
        let mut scores = Array1::zeros(self.n_classes());
        for (c, row) in self.weights.rows().into_iter().enumerate() {
            let mut s = row[x.len()];
            for (w, v) in row.iter().zip(x.iter()) {
                s += w * v;
            }
            scores[c] = s;
        }
        Ok(scores)
    }

    pub fn predict(&self, x: ArrayView1<'_, f64>) -> Result<usize> {
        Ok(argmax_lowest(&self.scores(x)?))
    }
}

/// Trains one binary hinge-loss classifier per class with decaying-rate
/// SGD and L2 regularization. Used to compare fixation filter settings;
/// absolute accuracy is not the point.
pub fn train_ovr_svm(
    xs: &Array2<f64>,
    labels: &[usize],
    config: &SvmConfig,
) -> Result<OneVsRestSvm> {
    if xs.nrows() == 0 {
        return Err(Error::invalid("svm", "no training examples"));
    }
    if labels.len() != xs.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} examples",
            labels.len(),
            xs.nrows()
        )));
    }
    let n_classes = labels.iter().max().map_or(0, |&m| m + 1);
    if n_classes < 2 {
        return Err(Error::invalid("svm", "need at least two classes"));
    }
    if !config.lambda.is_finite() || config.lambda <= 0.0 {
        return Err(Error::invalid("svm", "lambda must be positive"));
    }
    if config.epochs == 0 {
        return Err(Error::invalid("svm", "epochs must be at least 1"));
    }
    let dim = xs.ncols() + 1;
    let mut weights = Array2::zeros((n_classes, dim));
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..xs.nrows()).collect();
    for c in 0..n_classes {
        let mut w = vec![0.0f64; dim];
        let mut t = 0u64;
        for _ in 0..config.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1;
                let rate = 1.0 / (config.lambda * t as f64);
                let target = if labels[i] == c { 1.0 } else { -1.0 };
                let x = xs.row(i);
                let mut margin = w[dim - 1];
                for (wj, vj) in w.iter().zip(x.iter()) {
                    margin += wj * vj;
                }
                margin *= target;
                let decay = 1.0 - rate * config.lambda;
                for wj in w.iter_mut() {
                    *wj *= decay;
                }
                if margin < 1.0 {
                    let step = rate * target;
                    for (wj, vj) in w.iter_mut().zip(x.iter()) {
                        *wj += step * vj;
                    }
                    w[dim - 1] += step;
                }
            }
        }
        for (j, &wj) in w.iter().enumerate() {
            weights[[c, j]] = wj;
        }
    }
    Ok(OneVsRestSvm { weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::Rng;

    fn simple_set(vectors: Array2<f64>) -> EmbeddingSet {
        EmbeddingSet {
            classes: (0..vectors.nrows()).map(|i| format!("c{i}")).collect(),
            vectors,
            source: "test".into(),
        }
    }

    #[test]
    fn identity_model_scores_basis_vectors() {
        let model = CompatibilityModel { w: Array2::eye(2) };
        let set = simple_set(array![[1.0, 0.0], [0.0, 1.0]]);
        let scores = model.score(array![1.0, 0.0].view(), &set).unwrap();
        assert_eq!(scores, array![1.0, 0.0]);
        assert_eq!(model.predict(array![1.0, 0.0].view(), &set).unwrap(), 0);

        let zero = CompatibilityModel::zeros(2, 2);
        assert_eq!(zero.score(array![1.0, 0.5].view(), &set).unwrap(), array![0.0, 0.0]);
    }

    #[test]
    fn score_matches_the_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let d = rng.random_range(1..6);
            let e = rng.random_range(1..6);
            let c = rng.random_range(1..5);
            let w = Array2::from_shape_fn((d, e), |_| rng.random_range(-2.0..2.0));
            let theta = Array1::from_shape_fn(d, |_| rng.random_range(-2.0..2.0));
            let set = simple_set(Array2::from_shape_fn((c, e), |_| rng.random_range(-2.0..2.0)));
            let model = CompatibilityModel { w: w.clone() };
            let scores = model.score(theta.view(), &set).unwrap();
            for y in 0..c {
                let mut expected = 0.0;
                for i in 0..d {
                    for j in 0..e {
                        expected += theta[i] * w[[i, j]] * set.vectors[[y, j]];
                    }
                }
                assert_relative_eq!(scores[y], expected, max_relative = 1e-10, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn ties_and_positive_scaling_resolve_predictably() {
        let model = CompatibilityModel::zeros(2, 2);
        let set = simple_set(array![[1.0, 0.0], [0.0, 1.0]]);
        // all scores zero: exact tie goes to the first class.
        assert_eq!(model.predict(array![1.0, 1.0].view(), &set).unwrap(), 0);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let w = Array2::from_shape_fn((3, 4), |_| rng.random_range(-1.0..1.0));
            let model = CompatibilityModel { w };
            let theta = Array1::from_shape_fn(3, |_| rng.random_range(-1.0..1.0));
            let set = simple_set(Array2::from_shape_fn((5, 4), |_| rng.random_range(-1.0..1.0)));
            let scale = rng.random_range(0.01..50.0);
            let scaled = simple_set(set.vectors.mapv(|v| v * scale));
            assert_eq!(
                model.predict(theta.view(), &set).unwrap(),
                model.predict(theta.view(), &scaled).unwrap()
            );
        }
    }

    #[test]
    fn no_update_when_the_margin_is_met() {
        // W scores the true class 2.0 and the other 0.0: margin 2 >= 1.
        let mut model = CompatibilityModel { w: array![[2.0, 0.0]] };
        let set = simple_set(array![[1.0, 0.0], [0.0, 1.0]]);
        let before = model.w.clone();
        let updated = model
            .hinge_step(array![1.0].view(), 0, &set, 0.5)
            .unwrap();
        assert!(!updated);
        assert_eq!(model.w, before);
        assert_eq!(model.example_loss(array![1.0].view(), 0, &set).unwrap(), 0.0);
    }

    #[test]
    fn first_update_from_zero_has_closed_form() {
        let mut model = CompatibilityModel::zeros(2, 2);
        let set = simple_set(array![[1.0, -0.5], [0.2, 0.9]]);
        let updated = model
            .hinge_step(array![1.0, 0.0].view(), 0, &set, 0.1)
            .unwrap();
        assert!(updated);
        // update = lr * e1 * (e_0 - e_1)': only row 0 of W moves.
        assert_relative_eq!(model.w[[0, 0]], 0.1 * (1.0 - 0.2), max_relative = 1e-12);
        assert_relative_eq!(model.w[[0, 1]], 0.1 * (-0.5 - 0.9), max_relative = 1e-12);
        assert_eq!(model.w.row(1), array![0.0, 0.0]);
    }

    #[test]
    fn unknown_label_and_dimension_mismatches_error() {
        let mut model = CompatibilityModel::zeros(2, 2);
        let set = simple_set(array![[1.0, 0.0], [0.0, 1.0]]);
        assert!(model.score(array![1.0].view(), &set).is_err());
        assert!(model.hinge_step(array![1.0, 0.0].view(), 7, &set, 0.1).is_err());
        let wide = simple_set(array![[1.0, 0.0, 0.0]]);
        assert!(model.score(array![1.0, 0.0].view(), &wide).is_err());
    }

    #[test]
    fn separable_instance_trains_to_full_accuracy_within_20_epochs() {
        let (xs, labels, set) = separable_instance(10, 0);
        let config = TrainConfig {
            learning_rate: 0.01,
            epochs: 20,
            ..TrainConfig::default()
        };
        let model = train_sje(&xs, &labels, &set, &config).unwrap();
        let correct = labels
            .iter()
            .enumerate()
            .filter(|&(i, &l)| model.predict(xs.row(i), &set).unwrap() == l)
            .count();
        assert_eq!(correct, labels.len());
    }

    #[test]
    fn zero_learning_rate_leaves_w_zero_but_config_validation_rejects_it() {
        let (xs, labels, set) = separable_instance(4, 1);
        let config = TrainConfig {
            learning_rate: 0.0,
            epochs: 3,
            ..TrainConfig::default()
        };
        let model = train_sje(&xs, &labels, &set, &config).unwrap();
        assert_eq!(model.w, Array2::zeros((4, 3)));
        assert!(config.validate().is_err());
        assert!(TrainConfig::default().validate().is_ok());
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let (xs, labels, set) = separable_instance(8, 2);
        let config = TrainConfig::default();
        let a = train_sje(&xs, &labels, &set, &config).unwrap();
        let b = train_sje(&xs, &labels, &set, &config).unwrap();
        assert_eq!(a.w, b.w);
        let c = train_sje(&xs, &labels, &set, &TrainConfig { seed: 99, ..config }).unwrap();
        // a different visiting order changes some update sequence.
        assert_ne!(a.w, c.w);
    }

    #[test]
    fn per_epoch_loss_is_non_increasing_on_the_separable_instance() {
        let (xs, labels, set) = separable_instance(10, 0);
        let config = TrainConfig {
            learning_rate: 0.01,
            epochs: 25,
            ..TrainConfig::default()
        };
        let (_, history) = train_sje_with_history(&xs, &labels, &set, &config).unwrap();
        assert_eq!(history.len(), 25);
        for pair in history.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-12,
                "loss rose from {} to {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn co_scaling_embeddings_and_rate_preserves_training() {
        let (xs, labels, set) = separable_instance(10, 4);
        for scale in [2.0f64, 0.5] {
            let config = TrainConfig {
                learning_rate: 0.01,
                epochs: 6,
                ..TrainConfig::default()
            };
            let scaled_set = EmbeddingSet {
                vectors: set.vectors.mapv(|v| v * scale),
                ..set.clone()
            };
            let scaled_config = TrainConfig {
                learning_rate: config.learning_rate / scale,
                ..config
            };
            let base = train_sje(&xs, &labels, &set, &config).unwrap();
            let scaled = train_sje(&xs, &labels, &scaled_set, &scaled_config).unwrap();
            for (i, _) in labels.iter().enumerate() {
                assert_eq!(
                    base.predict(xs.row(i), &set).unwrap(),
                    scaled.predict(xs.row(i), &scaled_set).unwrap(),
                    "prediction diverged at example {i} under scale {scale}"
                );
            }
        }
    }

    #[test]
    fn late_fusion_with_one_participant_matches_predict() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let w = Array2::from_shape_fn((3, 4), |_| rng.random_range(-1.0..1.0));
            let model = CompatibilityModel { w };
            let set = simple_set(Array2::from_shape_fn((4, 4), |_| rng.random_range(-1.0..1.0)));
            let theta = Array1::from_shape_fn(3, |_| rng.random_range(-1.0..1.0));
            assert_eq!(
                predict_late(
                    std::slice::from_ref(&model),
                    theta.view(),
                    std::slice::from_ref(&set)
                )
                .unwrap(),
                model.predict(theta.view(), &set).unwrap()
            );
        }
    }

    #[test]
    fn late_fusion_averages_scores_and_breaks_ties_low() {
        // model scores (1,0) for the first set and (0,1) for the second.
        let m1 = CompatibilityModel { w: array![[1.0, 0.0]] };
        let m2 = CompatibilityModel { w: array![[0.0, 1.0]] };
        let set = simple_set(array![[1.0, 0.0], [0.0, 1.0]]);
        let sets = vec![set.clone(), set.clone()];
        let models = vec![m1, m2];
        assert_eq!(predict_late(&models, array![1.0].view(), &sets).unwrap(), 0);
    }

    #[test]
    fn late_fusion_equals_argmax_of_summed_scores() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let p = rng.random_range(2..5);
            let models: Vec<CompatibilityModel> = (0..p)
                .map(|_| CompatibilityModel {
                    w: Array2::from_shape_fn((3, 2), |_| rng.random_range(-1.0..1.0)),
                })
                .collect();
            let sets: Vec<EmbeddingSet> = (0..p)
                .map(|_| simple_set(Array2::from_shape_fn((4, 2), |_| rng.random_range(-1.0..1.0))))
                .collect();
            let theta = Array1::from_shape_fn(3, |_| rng.random_range(-1.0..1.0));
            let mut sum: ScoreVector = Array1::zeros(4);
            for (m, s) in models.iter().zip(&sets) {
                sum += &m.score(theta.view(), s).unwrap();
            }
            assert_eq!(
                predict_late(&models, theta.view(), &sets).unwrap(),
                argmax_lowest(&sum)
            );
        }
    }

    #[test]
    fn late_fusion_rejects_mismatched_class_orders() {
        let model = CompatibilityModel::zeros(2, 2);
        let a = simple_set(array![[1.0, 0.0], [0.0, 1.0]]);
        let mut b = a.clone();
        b.classes.reverse();
        let models = vec![model.clone(), model];
        let sets = vec![a, b];
        assert!(predict_late(&models, array![1.0, 0.0].view(), &sets).is_err());
    }

    #[test]
    fn shaped_training_and_prediction_must_agree() {
        let (xs, labels, set) = separable_instance(5, 0);
        let fused = ClassEmbeddings::Fused(set.clone());
        let per_p = ClassEmbeddings::PerParticipant(vec![set.clone(), set]);
        let config = TrainConfig::default();
        let single = train_for_embeddings(&xs, &labels, &fused, &config).unwrap();
        let multi = train_for_embeddings(&xs, &labels, &per_p, &config).unwrap();
        assert!(matches!(single, TrainedModel::Single(_)));
        assert!(matches!(multi, TrainedModel::PerParticipant(ref m) if m.len() == 2));
        assert!(predict_with(&single, &fused, xs.row(0)).is_ok());
        assert!(predict_with(&single, &per_p, xs.row(0)).is_err());
        assert!(predict_with(&multi, &per_p, xs.row(0)).is_ok());
    }

    #[test]
    fn model_file_round_trips_exactly() {
        let dir = tempfile::TempDir::new().unwrap();
        let path = dir.path().join("model.txt");
        let model = CompatibilityModel {
            w: array![[0.1 + 0.2, -3.5e-9], [1.0 / 3.0, 2.0f64.sqrt()]],
        };
        let classes = vec!["owl".to_string(), "tern".to_string()];
        let config = TrainConfig {
            learning_rate: 0.007,
            epochs: 31,
            seed: 1234,
            shuffle: false,
        };
        write_model(&path, &model, &classes, &config).unwrap();
        let (loaded, loaded_classes, loaded_config) = read_model(&path).unwrap();
        assert_eq!(loaded, model);
        assert_eq!(loaded_classes, classes);
        assert_eq!(loaded_config, config);

        std::fs::write(&path, "# some-other-file\n1 2\n").unwrap();
        assert!(read_model(&path).is_err());
    }

    fn gaussian_blobs(
        n_per_class: usize,
        seed: u64,
        separation: f64,
    ) -> (Array2<f64>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = Array2::zeros((2 * n_per_class, 3));
        let mut labels = Vec::new();
        for c in 0..2 {
            let center = if c == 0 { -separation } else { separation };
            for i in 0..n_per_class {
                let row = c * n_per_class + i;
                for j in 0..3 {
                    xs[[row, j]] = center + rng.random_range(-0.5..0.5);
                }
                labels.push(c);
            }
        }
        (xs, labels)
    }

    #[test]
    fn svm_separates_gaussian_blobs() {
        let (train_x, train_y) = gaussian_blobs(60, 0, 2.0);
        let (test_x, test_y) = gaussian_blobs(40, 1, 2.0);
        let svm = train_ovr_svm(&train_x, &train_y, &SvmConfig::default()).unwrap();
        let correct = test_y
            .iter()
            .enumerate()
            .filter(|&(i, &l)| svm.predict(test_x.row(i)).unwrap() == l)
            .count();
        assert!(
            correct as f64 / test_y.len() as f64 >= 0.95,
            "accuracy {}/{}",
            correct,
            test_y.len()
        );
    }

    #[test]
    fn svm_survives_contradictory_labels() {
        // identical feature vectors with conflicting labels.
        let xs = array![[1.0, 1.0], [1.0, 1.0], [1.0, 1.0], [1.0, 1.0]];
        let labels = vec![0, 1, 0, 1];
        let svm = train_ovr_svm(&xs, &labels, &SvmConfig::default()).unwrap();
        let correct = labels
            .iter()
            .enumerate()
            .filter(|&(i, &l)| svm.predict(xs.row(i)).unwrap() == l)
            .count();
        assert!(correct < labels.len());
    }

    #[test]
    fn svm_is_deterministic_and_rejects_single_class() {
        let (xs, labels) = gaussian_blobs(20, 3, 2.0);
        let a = train_ovr_svm(&xs, &labels, &SvmConfig::default()).unwrap();
        let b = train_ovr_svm(&xs, &labels, &SvmConfig::default()).unwrap();
        assert_eq!(a.weights, b.weights);

        let one_class = vec![0; labels.len()];
        assert!(train_ovr_svm(&xs, &one_class, &SvmConfig::default()).is_err());
    }

    proptest! {
        #[test]
        fn score_is_bilinear_in_theta(
            data in proptest::collection::vec(-3.0f64..3.0, 40),
            a in -2.0f64..2.0,
            b in -2.0f64..2.0,
        ) {
            let w = Array2::from_shape_fn((3, 4), |(i, j)| data[(i * 4 + j) % data.len()]);
            let model = CompatibilityModel { w };
            let set = simple_set(Array2::from_shape_fn((3, 4), |(i, j)| data[(7 + i * 4 + j) % data.len()]));
            let t1 = Array1::from_shape_fn(3, |i| data[(29 + i) % data.len()]);
            let t2 = Array1::from_shape_fn(3, |i| data[(33 + i) % data.len()]);
            let combined = &t1 * a + &t2 * b;
            let lhs = model.score(combined.view(), &set).unwrap();
            let s1 = model.score(t1.view(), &set).unwrap();
            let s2 = model.score(t2.view(), &set).unwrap();
            for y in 0..3 {
                let rhs = a * s1[y] + b * s2[y];
                prop_assert!((lhs[y] - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
            }
        }

        #[test]
        fn example_loss_is_nonnegative_and_zero_iff_wide_margin(
            data in proptest::collection::vec(-2.0f64..2.0, 32),
            truth in 0usize..3,
        ) {
            let w = Array2::from_shape_fn((2, 3), |(i, j)| data[(i * 3 + j) % data.len()]);
            let model = CompatibilityModel { w };
            let set = simple_set(Array2::from_shape_fn((3, 3), |(i, j)| data[(11 + i * 3 + j) % data.len()]));
            let theta = Array1::from_shape_fn(2, |i| data[(27 + i) % data.len()]);
            let loss = model.example_loss(theta.view(), truth, &set).unwrap();
            prop_assert!(loss >= 0.0);
            let scores = model.score(theta.view(), &set).unwrap();
            let margin_ok = (0..3).filter(|&y| y != truth)
                .all(|y| scores[truth] - scores[y] >= 1.0);
            prop_assert_eq!(loss == 0.0, margin_ok);
        }
    }
}
