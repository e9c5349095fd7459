//! File ingestion: gaze logs, dataset manifests, image feature matrices and
//! auxiliary side-information files (bubble tracks, attributes, text corpus,
//! saliency grids).
//!
//! All parsers validate their invariants up front and return structures that
//! are immutable after construction. Parsing distinct files is side-effect
//! free and safe to run in parallel.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::baselines::{AttributeMatrix, Bubble, BubbleTrack, CorpusDocument, SaliencyMap};
use crate::{Error, Result};

/// Column header every gaze log must start with.
pub const GAZE_LOG_HEADER: &str =
    "timestamp_ms,left_x,left_y,right_x,right_y,left_pupil,right_pupil,left_valid,right_valid";

/// One timestamped binocular tracker record. Validity code 0 means best
/// confidence for that eye.
#[derive(Debug, Clone, PartialEq)]
pub struct RawGazeSample {
    pub timestamp_ms: f64,
    pub left_x: f64,
    pub left_y: f64,
    pub right_x: f64,
    pub right_y: f64,
    pub left_pupil: f64,
    pub right_pupil: f64,
    pub left_valid: u8,
    pub right_valid: u8,
}

impl RawGazeSample {
    pub fn is_binocular_valid(&self) -> bool {
        self.left_valid == 0 && self.right_valid == 0
    }

    /// Gaze point as the mean of the two eyes, in image pixels.
    pub fn point(&self) -> (f64, f64) {
        (
            (self.left_x + self.right_x) / 2.0,
            (self.left_y + self.right_y) / 2.0,
        )
    }

    /// Mean pupil diameter of the two eyes, in millimeters.
    pub fn pupil(&self) -> f64 {
        (self.left_pupil + self.right_pupil) / 2.0
    }
}

/// An ordered gaze recording for one (image, participant) pair.
///
/// Streams returned by [`parse_gaze_log`] only contain samples valid for
/// both eyes, with coordinates clamped to the image bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct GazeStream {
    pub image_id: String,
    pub participant_id: String,
    pub image_width: u32,
    pub image_height: u32,
    pub samples: Vec<RawGazeSample>,
}

/// Parses a gaze log and keeps only samples valid for both eyes.
///
/// The image id is taken from the file stem and the participant id from the
/// parent directory name (the canonical layout is
/// `<gaze_root>/<participant>/<image_id>.csv`).
///
/// Retained samples have their eye coordinates clamped to
/// `[0, width] x [0, height]`; the derived gaze point is the mean of the two
/// clamped eyes.
pub fn parse_gaze_log(path: &Path, image_dims: (u32, u32)) -> Result<GazeStream> {
    let (width, height) = image_dims;
    if width == 0 || height == 0 {
        return Err(Error::invalid("image dims", "width and height must be > 0"));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();

    match lines.next() {
        Some((_, header)) if header.trim() == GAZE_LOG_HEADER => {}
        Some((_, header)) => {
            return Err(Error::parse(
                path,
                1,
                format!("bad header '{}', expected '{}'", header.trim(), GAZE_LOG_HEADER),
            ))
        }
        None => return Err(Error::parse(path, 1, "empty file, header required")),
    }

    let mut samples: Vec<RawGazeSample> = Vec::new();
    let mut last_t = f64::NEG_INFINITY;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let sample = parse_sample_row(line)
            .map_err(|message| Error::parse(path, lineno, message))?;
        if sample.timestamp_ms < last_t {
            return Err(Error::parse(
                path,
                lineno,
                format!(
                    "timestamp {} decreases below {}",
                    sample.timestamp_ms, last_t
                ),
            ));
        }
        last_t = sample.timestamp_ms;
        if !sample.is_binocular_valid() {
            continue;
        }
        if sample.left_pupil <= 0.0 || sample.right_pupil <= 0.0 {
            return Err(Error::parse(
                path,
                lineno,
                "pupil diameter must be > 0 for a valid eye",
            ));
        }
        let mut s = sample;
        s.left_x = s.left_x.clamp(0.0, width as f64);
        s.right_x = s.right_x.clamp(0.0, width as f64);
        s.left_y = s.left_y.clamp(0.0, height as f64);
        s.right_y = s.right_y.clamp(0.0, height as f64);
        samples.push(s);
    }

    if samples.is_empty() {
        return Err(Error::EmptyStream(path.to_path_buf()));
    }

    let image_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let participant_id = path
        .parent()
        .and_then(|p| p.file_name())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();

    Ok(GazeStream {
        image_id,
        participant_id,
        image_width: width,
        image_height: height,
        samples,
    })
}

fn parse_sample_row(line: &str) -> std::result::Result<RawGazeSample, String> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 9 {
        return Err(format!("expected 9 fields, found {}", fields.len()));
    }
    let num = |i: usize, name: &str| -> std::result::Result<f64, String> {
        let v: f64 = fields[i]
            .trim()
            .parse()
            .map_err(|_| format!("field {name}: '{}' is not a number", fields[i].trim()))?;
        if !v.is_finite() {
            return Err(format!("field {name}: non-finite value"));
        }
        Ok(v)
    };
    let code = |i: usize, name: &str| -> std::result::Result<u8, String> {
        fields[i]
            .trim()
            .parse()
            .map_err(|_| format!("field {name}: '{}' is not a validity code", fields[i].trim()))
    };
    Ok(RawGazeSample {
        timestamp_ms: num(0, "timestamp_ms")?,
        left_x: num(1, "left_x")?,
        left_y: num(2, "left_y")?,
        right_x: num(3, "right_x")?,
        right_y: num(4, "right_y")?,
        left_pupil: num(5, "left_pupil")?,
        right_pupil: num(6, "right_pupil")?,
        left_valid: code(7, "left_valid")?,
        right_valid: code(8, "right_valid")?,
    })
}

/// Writes a stream back to the log format. Reparsing the result yields an
/// identical stream (floats round-trip exactly).
pub fn write_gaze_log(stream: &GazeStream, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(stream.samples.len() * 48 + 96);
    out.push_str(GAZE_LOG_HEADER);
    out.push('\n');
    for s in &stream.samples {
        out.push_str(&format_sample_row(s));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn format_sample_row(s: &RawGazeSample) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        s.timestamp_ms,
        s.left_x,
        s.left_y,
        s.right_x,
        s.right_y,
        s.left_pupil,
        s.right_pupil,
        s.left_valid,
        s.right_valid
    )
}

/// One image entry in a dataset manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestImage {
    pub id: String,
    pub class: String,
    pub feature_row: usize,
}

/// Dataset description: images with class labels and feature-matrix rows,
/// the ordered class list, and the recorded participants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub classes: Vec<String>,
    pub participants: Vec<String>,
    pub images: Vec<ManifestImage>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::invalid("manifest", "class list is empty"));
        }
        for id in self
            .classes
            .iter()
            .chain(self.participants.iter())
            .chain(self.images.iter().map(|i| &i.id))
        {
            if id.is_empty() || id.contains(|c: char| c.is_whitespace() || c == ',') {
                return Err(Error::invalid(
                    "manifest",
                    format!("identifier '{id}' must be non-empty without whitespace or commas"),
                ));
            }
        }
        let mut seen_classes = HashSet::new();
        for c in &self.classes {
            if !seen_classes.insert(c) {
                return Err(Error::invalid("manifest", format!("duplicate class '{c}'")));
            }
        }
        let mut seen_participants = HashSet::new();
        for p in &self.participants {
            if !seen_participants.insert(p) {
                return Err(Error::invalid(
                    "manifest",
                    format!("duplicate participant '{p}'"),
                ));
            }
        }
        let mut seen_images = HashSet::new();
        let mut seen_rows = HashSet::new();
        for img in &self.images {
            if !seen_images.insert(&img.id) {
                return Err(Error::invalid(
                    "manifest",
                    format!("duplicate image '{}'", img.id),
                ));
            }
            if !seen_classes.contains(&img.class) {
                return Err(Error::UnknownLabel(img.class.clone()));
            }
            if img.feature_row >= self.images.len() {
                return Err(Error::invalid(
                    "manifest",
                    format!(
                        "image '{}' feature_row {} out of range 0..{}",
                        img.id,
                        img.feature_row,
                        self.images.len()
                    ),
                ));
            }
            if !seen_rows.insert(img.feature_row) {
                return Err(Error::invalid(
                    "manifest",
                    format!("feature_row {} assigned twice", img.feature_row),
                ));
            }
        }
        Ok(())
    }

    pub fn class_index(&self) -> HashMap<&str, usize> {
        self.classes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect()
    }

    /// Images of one class, in manifest order.
    pub fn images_of<'a>(&'a self, class: &'a str) -> impl Iterator<Item = &'a ManifestImage> + 'a {
        self.images.iter().filter(move |i| i.class == class)
    }
}

/// Loads and validates a TOML manifest, preserving class order exactly.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: DatasetManifest = toml::from_str(&text)
        .map_err(|e| Error::parse(path, 1, format!("manifest: {e}")))?;
    manifest.validate()?;
    Ok(manifest)
}

pub fn write_manifest(manifest: &DatasetManifest, path: &Path) -> Result<()> {
    let text = toml::to_string(manifest)
        .map_err(|e| Error::invalid("manifest", e.to_string()))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Precomputed image embeddings, one row per manifest image.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: Array2<f64>,
}

impl FeatureMatrix {
    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }
}

/// Loads a plain-text feature matrix (one image per line, numbers separated
/// by whitespace) and checks it against the manifest.
pub fn load_feature_matrix(path: &Path, manifest: &DatasetManifest) -> Result<FeatureMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut data: Vec<f64> = Vec::new();
    let mut dim: Option<usize> = None;
    let mut n_rows = 0usize;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let start = data.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("'{tok}' is not a number")))?;
            if !v.is_finite() {
                return Err(Error::parse(path, lineno, "non-finite entry"));
            }
            data.push(v);
        }
        let row_len = data.len() - start;
        match dim {
            None => dim = Some(row_len),
            Some(d) if d != row_len => {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("row has {row_len} entries, expected {d}"),
                ))
            }
            _ => {}
        }
        n_rows += 1;
    }
    if n_rows != manifest.images.len() {
        return Err(Error::DimensionMismatch(format!(
            "feature matrix has {n_rows} rows but manifest lists {} images",
            manifest.images.len()
        )));
    }
    let dim = dim.unwrap_or(0);
    let rows = Array2::from_shape_vec((n_rows, dim), data)
        .map_err(|e| Error::invalid("feature matrix", e.to_string()))?;
    Ok(FeatureMatrix { rows })
}

pub fn write_feature_matrix(matrix: &Array2<f64>, path: &Path) -> Result<()> {
    let mut out = String::new();
    for row in matrix.rows() {
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

/// Loads bubble tracks from `image_id,x,y,radius` lines, grouped per image
/// in recorded order.
pub fn load_bubble_tracks(path: &Path) -> Result<Vec<BubbleTrack>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut order: Vec<String> = Vec::new();
    let mut by_image: BTreeMap<String, Vec<Bubble>> = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let image_id = fields[0].trim().to_string();
        let parse = |i: usize, name: &str| -> Result<f64> {
            let v: f64 = fields[i].trim().parse().map_err(|_| {
                Error::parse(path, lineno, format!("field {name}: not a number"))
            })?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("field {name}: {v} outside [0,1]"),
                ));
            }
            Ok(v)
        };
        let bubble = Bubble {
            x: parse(1, "x")?,
            y: parse(2, "y")?,
            radius: parse(3, "radius")?,
        };
        if !by_image.contains_key(&image_id) {
            order.push(image_id.clone());
        }
        by_image.entry(image_id).or_default().push(bubble);
    }
    Ok(order
        .into_iter()
        .map(|image_id| {
            let bubbles = by_image.remove(&image_id).unwrap();
            BubbleTrack { image_id, bubbles }
        })
        .collect())
}

/// Writes bubble tracks in the `image_id,x,y,radius` line format, one line
/// per bubble, images in track order.
pub fn write_bubble_tracks(tracks: &[BubbleTrack], path: &Path) -> Result<()> {
    let mut out = String::new();
    for track in tracks {
        for b in &track.bubbles {
            out.push_str(&format!("{},{},{},{}\n", track.image_id, b.x, b.y, b.radius));
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Loads per-class attribute vectors. Each line is `label v1 v2 ...`; every
/// manifest class must appear exactly once.
pub fn load_attribute_matrix(path: &Path, manifest: &DatasetManifest) -> Result<AttributeMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut by_label: HashMap<String, Vec<f64>> = HashMap::new();
    let mut dim: Option<usize> = None;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let label = toks.next().unwrap().to_string();
        let mut values = Vec::new();
        for tok in toks {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("'{tok}' is not a number")))?;
            if !v.is_finite() {
                return Err(Error::parse(path, lineno, "non-finite entry"));
            }
            values.push(v);
        }
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("row has {} entries, expected {d}", values.len()),
                ))
            }
            _ => {}
        }
        if by_label.insert(label.clone(), values).is_some() {
            return Err(Error::parse(path, lineno, format!("duplicate class '{label}'")));
        }
    }
    let mut rows = Vec::with_capacity(manifest.classes.len());
    for class in &manifest.classes {
        let row = by_label
            .remove(class)
            .ok_or_else(|| Error::EmptyClass {
                class: class.clone(),
                context: "attribute matrix".into(),
            })?;
        rows.push(row);
    }
    Ok(AttributeMatrix {
        classes: manifest.classes.clone(),
        rows,
    })
}

pub fn write_attribute_matrix(attributes: &AttributeMatrix, path: &Path) -> Result<()> {
    let mut out = String::new();
    for (class, row) in attributes.classes.iter().zip(&attributes.rows) {
        out.push_str(class);
        for v in row {
            out.push(' ');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Loads one text document per manifest class from `<dir>/<label>.txt`.
pub fn load_corpus(dir: &Path, manifest: &DatasetManifest) -> Result<Vec<CorpusDocument>> {
    let mut docs = Vec::with_capacity(manifest.classes.len());
    for class in &manifest.classes {
        let path = dir.join(format!("{class}.txt"));
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        if text.trim().is_empty() {
            return Err(Error::EmptyClass {
                class: class.clone(),
                context: "corpus document is empty".into(),
            });
        }
        docs.push(CorpusDocument {
            class: class.clone(),
            text,
        });
    }
    Ok(docs)
}

/// Writes one `<dir>/<class>.txt` document per corpus entry.
pub fn write_corpus(docs: &[CorpusDocument], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for doc in docs {
        let path = dir.join(format!("{}.txt", doc.class));
        fs::write(&path, &doc.text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

pub fn write_saliency_map(map: &SaliencyMap, path: &Path) -> Result<()> {
    let mut out = String::new();
    for r in 0..map.rows {
        for c in 0..map.cols {
            if c > 0 {
                out.push(' ');
            }
            out.push_str(&map.values[r * map.cols + c].to_string());
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Loads per-image saliency grids from `<dir>/<image_id>.txt` (rows of
/// nonnegative numbers).
pub fn load_saliency_maps(
    dir: &Path,
    manifest: &DatasetManifest,
) -> Result<HashMap<String, SaliencyMap>> {
    let mut maps = HashMap::with_capacity(manifest.images.len());
    for img in &manifest.images {
        let path = dir.join(format!("{}.txt", img.id));
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut values: Vec<f64> = Vec::new();
        let mut cols: Option<usize> = None;
        let mut rows = 0usize;
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let start = values.len();
            for tok in line.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| {
                    Error::parse(&path, lineno, format!("'{tok}' is not a number"))
                })?;
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::parse(
                        &path,
                        lineno,
                        "saliency values must be finite and nonnegative",
                    ));
                }
                values.push(v);
            }
            let row_len = values.len() - start;
            match cols {
                None => cols = Some(row_len),
                Some(c) if c != row_len => {
                    return Err(Error::parse(
                        &path,
                        lineno,
                        format!("row has {row_len} entries, expected {c}"),
                    ))
                }
                _ => {}
            }
            rows += 1;
        }
        if rows == 0 {
            return Err(Error::parse(&path, 1, "empty saliency map"));
        }
        maps.insert(
            img.id.clone(),
            SaliencyMap {
                rows,
                cols: cols.unwrap(),
                values,
            },
        );
    }
    Ok(maps)
}
