//! Class embeddings built from gaze data.
//!
//! Three encoders turn a sequence of fixation feature rows into a fixed-size
//! vector:
//!
//! * histogram: fixation counts over a spatial grid
//! * grid features: per-cell means of selected feature columns
//! * sequence features: selected feature columns at `k` evenly spaced
//!   fixations
//!
//! A class embedding is the mean over the encoded images of that class, per
//! participant. Participants are then fused by averaging, by concatenation,
//! or kept separate for late score fusion. Fused matrices are standardized:
//! each dimension is z-scored across classes, then each class vector is
//! scaled to unit length.

use std::fmt;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::features::{extract_features, FeatureMask, GazeFeatures, COL_X, COL_Y};
use crate::fixation::{FixationSequence, GazeDataset};
use crate::{Error, Result};

/// Spatial grid over the unit square: `rows` cells down, `cols` cells
/// across. The default 3x3 gives nine bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Grid { rows: 3, cols: 3 }
    }
}

impl Grid {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("grid", "grid must have at least one cell"));
        }
        Ok(Grid { rows, cols })
    }

    pub fn cells(&self) -> usize {
        self.rows * self.cols
    }

    /// Row-major cell index for a normalized point.
    pub fn cell(&self, x: f64, y: f64) -> usize {
        grid_bin(y, self.rows) * self.cols + grid_bin(x, self.cols)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

/// Bin index of a normalized coordinate among `n` cells.
///
/// A point exactly on an interior cell boundary belongs to the lower-index
/// cell, so `grid_bin(1.0 / 3.0, 3) == 0`; `v = 1` maps to the last cell.
/// Values outside `[0, 1]` clamp to the edge cells.
pub fn grid_bin(v: f64, n: usize) -> usize {
    debug_assert!(n > 0);
    if v <= 0.0 {
        0
    } else {
        (((v * n as f64).ceil() as usize).saturating_sub(1)).min(n - 1)
    }
}

/// Indices of `k` evenly spaced elements of a length-`len` sequence.
///
/// Index `i` maps to `round(i * (len-1) / (k-1))`, so endpoints are always
/// included for `k > 1`; a single sample sits in the middle. When
/// `len < k`, indices repeat so the output length is still `k`.
pub fn sample_indices(len: usize, k: usize) -> Result<Vec<usize>> {
    if len == 0 {
        return Err(Error::invalid("sampling", "cannot sample an empty sequence"));
    }
    if k == 0 {
        return Err(Error::invalid("sampling", "k must be at least 1"));
    }
    let last = (len - 1) as f64;
    if k == 1 {
        return Ok(vec![(last / 2.0).round() as usize]);
    }
    Ok((0..k)
        .map(|i| (i as f64 * last / (k - 1) as f64).round() as usize)
        .collect())
}

/// A gaze sequence encoder with a fixed output dimension.
#[derive(Debug, Clone, PartialEq)]
pub enum Encoder {
    /// Fixation counts per grid cell. Empty sequences give the zero vector.
    Histogram { grid: Grid },
    /// Mean of the masked feature columns per grid cell; empty cells (and
    /// empty sequences) are zero. The layout is cell-major: all masked
    /// features of cell 0, then cell 1, and so on.
    GridFeatures { grid: Grid, mask: FeatureMask },
    /// Masked feature columns of `k` evenly spaced fixations, concatenated
    /// in time order. Undefined (an error) for empty sequences.
    SequenceFeatures { k: usize, mask: FeatureMask },
}

impl Encoder {
    pub fn dim(&self) -> usize {
        match self {
            Encoder::Histogram { grid } => grid.cells(),
            Encoder::GridFeatures { grid, mask } => grid.cells() * mask.len(),
            Encoder::SequenceFeatures { k, mask } => k * mask.len(),
        }
    }

    pub fn encode(&self, features: &GazeFeatures) -> Result<Array1<f64>> {
        let rows = &features.rows;
        match self {
            Encoder::Histogram { grid } => {
                let mut out = Array1::zeros(grid.cells());
                for row in rows.rows() {
                    out[grid.cell(row[COL_X], row[COL_Y])] += 1.0;
                }
                Ok(out)
            }
            Encoder::GridFeatures { grid, mask } => {
                let m = mask.len();
                let mut sums = Array2::<f64>::zeros((grid.cells(), m));
                let mut counts = vec![0usize; grid.cells()];
                for row in rows.rows() {
                    let cell = grid.cell(row[COL_X], row[COL_Y]);
                    counts[cell] += 1;
                    for (j, &col) in mask.columns().iter().enumerate() {
                        sums[[cell, j]] += row[col];
                    }
                }
                for (cell, &count) in counts.iter().enumerate() {
                    if count > 0 {
                        for j in 0..m {
                            sums[[cell, j]] /= count as f64;
                        }
                    }
                }
                Ok(Array1::from_iter(sums.iter().copied()))
            }
            Encoder::SequenceFeatures { k, mask } => {
                if features.is_empty() {
                    return Err(Error::invalid(
                        "encode",
                        format!(
                            "sequence sampling needs at least one fixation \
                             (participant '{}', image '{}')",
                            features.participant_id, features.image_id
                        ),
                    ));
                }
                let idx = sample_indices(rows.nrows(), *k)?;
                let mut out = Array1::zeros(*k * mask.len());
                let mut pos = 0;
                for i in idx {
                    for &col in mask.columns() {
                        out[pos] = rows[[i, col]];
                        pos += 1;
                    }
                }
                Ok(out)
            }
        }
    }
}

impl fmt::Display for Encoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Encoder::Histogram { grid } => write!(f, "gh:{grid}"),
            Encoder::GridFeatures { grid, mask } => write!(f, "gfg:{grid}:{}", mask.spec()),
            Encoder::SequenceFeatures { k, mask } => write!(f, "gfs:k={k}:{}", mask.spec()),
        }
    }
}

/// Convenience: fixation sequence straight to an encoded vector.
pub fn encode_sequence(seq: &FixationSequence, encoder: &Encoder) -> Result<Array1<f64>> {
    encoder.encode(&extract_features(seq))
}

/// Z-scores every column across rows (population variance; constant columns
/// become zero), then scales every row to unit Euclidean length (zero rows
/// stay zero). Needs at least two rows: a single class cannot be z-scored.
pub fn standardize(matrix: &mut Array2<f64>) -> Result<()> {
    let n = matrix.nrows();
    if n < 2 {
        return Err(Error::invalid(
            "standardize",
            "at least two classes are required",
        ));
    }
    for mut col in matrix.columns_mut() {
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        // relative guard: a column of identical values can pick up rounding
        // noise in the mean, and z-scoring would blow that noise up to a
        // full-strength constant dimension.
        let scale = col.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        if std > scale * 1e-12 {
            col.mapv_inplace(|v| (v - mean) / std);
        } else {
            col.fill(0.0);
        }
    }
    for mut row in matrix.rows_mut() {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.mapv_inplace(|v| v / norm);
        }
    }
    Ok(())
}

/// Concatenates per-participant class matrices along the feature axis, in
/// the given order. Row counts must match; the slice of the output covering
/// participant `p`'s columns is bitwise equal to its input.
pub fn concat_participants(mats: &[Array2<f64>]) -> Result<Array2<f64>> {
    if mats.is_empty() {
        return Err(Error::invalid("fusion", "no participant matrices"));
    }
    let n = mats[0].nrows();
    if mats.iter().any(|m| m.nrows() != n) {
        return Err(Error::DimensionMismatch(
            "participant matrices disagree on class count".into(),
        ));
    }
    let total: usize = mats.iter().map(|m| m.ncols()).sum();
    let mut out = Array2::zeros((n, total));
    let mut offset = 0;
    for m in mats {
        out.slice_mut(ndarray::s![.., offset..offset + m.ncols()])
            .assign(m);
        offset += m.ncols();
    }
    Ok(out)
}

/// Elementwise mean of per-participant class matrices. All shapes must match.
pub fn average_participants(mats: &[Array2<f64>]) -> Result<Array2<f64>> {
    if mats.is_empty() {
        return Err(Error::invalid("fusion", "no participant matrices"));
    }
    let shape = mats[0].dim();
    if mats.iter().any(|m| m.dim() != shape) {
        return Err(Error::DimensionMismatch(
            "participant matrices disagree on shape".into(),
        ));
    }
    let mut out = Array2::zeros(shape);
    for m in mats {
        out += m;
    }
    out /= mats.len() as f64;
    Ok(out)
}

/// How per-participant embeddings are merged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fusion {
    /// Elementwise mean, then standardize.
    Average,
    /// Concatenate in participant order, then standardize.
    Early,
    /// Standardize each participant separately; scores are averaged at
    /// prediction time.
    Late,
}

impl fmt::Display for Fusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fusion::Average => write!(f, "avg"),
            Fusion::Early => write!(f, "early"),
            Fusion::Late => write!(f, "late"),
        }
    }
}

impl std::str::FromStr for Fusion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "avg" | "average" => Ok(Fusion::Average),
            "early" => Ok(Fusion::Early),
            "late" => Ok(Fusion::Late),
            other => Err(Error::invalid(
                "fusion",
                format!("unknown fusion '{other}', expected avg, early or late"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderKind {
    Histogram,
    Grid,
    Sequence,
}

impl std::str::FromStr for EncoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gh" | "histogram" => Ok(EncoderKind::Histogram),
            "gfg" | "grid" => Ok(EncoderKind::Grid),
            "gfs" | "sequence" => Ok(EncoderKind::Sequence),
            other => Err(Error::invalid(
                "encoder",
                format!("unknown encoder '{other}', expected gh, gfg or gfs"),
            )),
        }
    }
}

/// Which encoder to build, with `k = None` meaning "use the largest k every
/// sequence supports" (the smallest fixation count).
#[derive(Debug, Clone, PartialEq)]
pub struct GazeEmbedConfig {
    pub kind: EncoderKind,
    pub grid: Grid,
    pub mask: FeatureMask,
    pub k: Option<usize>,
    pub fusion: Fusion,
}

impl GazeEmbedConfig {
    /// Concrete encoder for one participant. Automatic `k` uses that
    /// participant's smallest sequence, except under average fusion where
    /// every participant must produce the same dimension, so the global
    /// smallest is used.
    pub fn encoder_for(&self, dataset: &GazeDataset, participant: &str) -> Result<Encoder> {
        Ok(match self.kind {
            EncoderKind::Histogram => Encoder::Histogram { grid: self.grid },
            EncoderKind::Grid => Encoder::GridFeatures {
                grid: self.grid,
                mask: self.mask.clone(),
            },
            EncoderKind::Sequence => {
                let k = match self.k {
                    Some(k) if k > 0 => k,
                    Some(_) => return Err(Error::invalid("embed config", "k must be at least 1")),
                    None => match self.fusion {
                        Fusion::Average => dataset.min_fixation_count(None)?,
                        _ => dataset.min_fixation_count(Some(participant))?,
                    },
                };
                Encoder::SequenceFeatures {
                    k,
                    mask: self.mask.clone(),
                }
            }
        })
    }
}

/// A named, ordered set of class vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    pub classes: Vec<String>,
    pub vectors: Array2<f64>,
    pub source: String,
}

impl EmbeddingSet {
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn row_of(&self, class: &str) -> Option<ndarray::ArrayView1<'_, f64>> {
        self.classes
            .iter()
            .position(|c| c == class)
            .map(|i| self.vectors.row(i))
    }

    /// Subset restricted to `classes`, in the given order.
    pub fn restrict(&self, classes: &[String]) -> Result<EmbeddingSet> {
        let mut vectors = Array2::zeros((classes.len(), self.dim()));
        for (i, class) in classes.iter().enumerate() {
            let row = self
                .row_of(class)
                .ok_or_else(|| Error::UnknownLabel(class.clone()))?;
            vectors.row_mut(i).assign(&row);
        }
        Ok(EmbeddingSet {
            classes: classes.to_vec(),
            vectors,
            source: self.source.clone(),
        })
    }
}

/// Class embeddings ready for a compatibility model: either one fused set
/// or one set per participant for late score fusion.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassEmbeddings {
    Fused(EmbeddingSet),
    PerParticipant(Vec<EmbeddingSet>),
}

impl ClassEmbeddings {
    pub fn classes(&self) -> &[String] {
        match self {
            ClassEmbeddings::Fused(set) => &set.classes,
            ClassEmbeddings::PerParticipant(sets) => &sets[0].classes,
        }
    }

    pub fn restrict(&self, classes: &[String]) -> Result<ClassEmbeddings> {
        Ok(match self {
            ClassEmbeddings::Fused(set) => ClassEmbeddings::Fused(set.restrict(classes)?),
            ClassEmbeddings::PerParticipant(sets) => ClassEmbeddings::PerParticipant(
                sets.iter()
                    .map(|s| s.restrict(classes))
                    .collect::<Result<_>>()?,
            ),
        })
    }

    /// Source tag of the underlying set (first participant's under late
    /// fusion, where sets differ only in the participant suffix).
    pub fn source(&self) -> &str {
        match self {
            ClassEmbeddings::Fused(set) => &set.source,
            ClassEmbeddings::PerParticipant(sets) => &sets[0].source,
        }
    }
}

/// Raw (not yet standardized) class matrix for one participant: the mean
/// encoded vector over each class's images, classes in the given order.
pub fn class_matrix_for_participant(
    dataset: &GazeDataset,
    classes: &[String],
    participant: &str,
    encoder: &Encoder,
) -> Result<Array2<f64>> {
    let mut matrix = Array2::zeros((classes.len(), encoder.dim()));
    for (ci, class) in classes.iter().enumerate() {
        let mut count = 0usize;
        let mut acc = Array1::<f64>::zeros(encoder.dim());
        for img in dataset.manifest.images_of(class) {
            let seq = dataset.require(participant, &img.id)?;
            acc += &encode_sequence(seq, encoder)?;
            count += 1;
        }
        if count == 0 {
            return Err(Error::EmptyClass {
                class: class.clone(),
                context: "no images for class when building embeddings".into(),
            });
        }
        acc /= count as f64;
        matrix.row_mut(ci).assign(&acc);
    }
    Ok(matrix)
}

/// Builds gaze class embeddings for `classes` over every manifest
/// participant, applying the configured fusion and standardization.
pub fn build_gaze_embeddings(
    dataset: &GazeDataset,
    classes: &[String],
    config: &GazeEmbedConfig,
) -> Result<ClassEmbeddings> {
    let participants = &dataset.manifest.participants;
    if participants.is_empty() {
        return Err(Error::invalid("embed", "manifest lists no participants"));
    }
    let mut mats = Vec::with_capacity(participants.len());
    let mut descs = Vec::with_capacity(participants.len());
    for p in participants {
        let encoder = config.encoder_for(dataset, p)?;
        descs.push(encoder.to_string());
        mats.push(class_matrix_for_participant(dataset, classes, p, &encoder)?);
    }
    match config.fusion {
        Fusion::Average => {
            let mut fused = average_participants(&mats)?;
            standardize(&mut fused)?;
            Ok(ClassEmbeddings::Fused(EmbeddingSet {
                classes: classes.to_vec(),
                vectors: fused,
                source: format!("{}:avg", descs[0]),
            }))
        }
        Fusion::Early => {
            let mut fused = concat_participants(&mats)?;
            standardize(&mut fused)?;
            Ok(ClassEmbeddings::Fused(EmbeddingSet {
                classes: classes.to_vec(),
                vectors: fused,
                source: format!("{}:early", descs.join("+")),
            }))
        }
        Fusion::Late => {
            let mut sets = Vec::with_capacity(mats.len());
            for ((mut m, p), desc) in mats.into_iter().zip(participants).zip(descs) {
                standardize(&mut m)?;
                sets.push(EmbeddingSet {
                    classes: classes.to_vec(),
                    vectors: m,
                    source: format!("{desc}:late:{p}"),
                });
            }
            Ok(ClassEmbeddings::PerParticipant(sets))
        }
    }
}

pub const EMBEDDING_FILE_MAGIC: &str = "# class-embeddings v1";

/// Writes an embedding set with a commented header followed by one
/// whitespace-separated row per class. Values round-trip exactly.
pub fn write_embedding_set(set: &EmbeddingSet, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(EMBEDDING_FILE_MAGIC);
    out.push('\n');
    out.push_str(&format!("# source: {}\n", set.source));
    out.push_str(&format!("# classes: {}\n", set.classes.join(",")));
    out.push_str(&format!("# dim: {}\n", set.dim()));
    for row in set.vectors.rows() {
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

pub fn read_embedding_set(path: &Path) -> Result<EmbeddingSet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate().peekable();
    match lines.next() {
        Some((_, l)) if l.trim() == EMBEDDING_FILE_MAGIC => {}
        _ => return Err(Error::parse(path, 1, format!("expected '{EMBEDDING_FILE_MAGIC}'"))),
    }
    let mut source = String::new();
    let mut classes: Option<Vec<String>> = None;
    let mut dim: Option<usize> = None;
    while let Some((_, l)) = lines.peek() {
        let Some(rest) = l.strip_prefix('#') else { break };
        let (idx, _) = lines.next().unwrap();
        let rest = rest.trim();
        if let Some(v) = rest.strip_prefix("source:") {
            source = v.trim().to_string();
        } else if let Some(v) = rest.strip_prefix("classes:") {
            classes = Some(v.trim().split(',').map(|c| c.trim().to_string()).collect());
        } else if let Some(v) = rest.strip_prefix("dim:") {
            dim = Some(v.trim().parse().map_err(|_| {
                Error::parse(path, idx + 1, "dim is not an integer")
            })?);
        }
    }
    let classes = classes.ok_or_else(|| Error::parse(path, 1, "missing classes header"))?;
    let dim = dim.ok_or_else(|| Error::parse(path, 1, "missing dim header"))?;
    let mut data = Vec::with_capacity(classes.len() * dim);
    let mut rows = 0usize;
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let before = data.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("'{tok}' is not a number")))?;
            data.push(v);
        }
        if data.len() - before != dim {
            return Err(Error::parse(
                path,
                lineno,
                format!("row has {} entries, expected {dim}", data.len() - before),
            ));
        }
        rows += 1;
    }
    if rows != classes.len() {
        return Err(Error::DimensionMismatch(format!(
            "{rows} rows for {} classes",
            classes.len()
        )));
    }
    let vectors = Array2::from_shape_vec((rows, dim), data)
        .map_err(|e| Error::invalid("embedding file", e.to_string()))?;
    Ok(EmbeddingSet {
        classes,
        vectors,
        source,
    })
}
