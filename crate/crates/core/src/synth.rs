//! Deterministic synthetic dataset generation.
//!
//! Every class gets a latent 2-D attention anchor, a pupil level and a
//! latent image-feature direction. One knob, the class signal strength
//! `σ ∈ [0, 1]`, interpolates between fully deterministic class structure
//! (σ = 1: streams sit exactly on the anchor, image features are exact
//! linear functions of the latent class descriptor) and fully exchangeable
//! noise (σ = 0: streams wander around a class-independent point, image
//! features are pure noise). Everything is driven by one seeded generator
//! in a fixed order, so equal specs produce byte-identical files.

use std::path::Path;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{AttributeMatrix, Bubble, BubbleTrack, CorpusDocument, SaliencyMap};
use crate::eval::{image_set, ImageSet};
use crate::fixation::{detect_fixations, FilterParams, GazeDataset};
use crate::ingest::{
    self, DatasetManifest, FeatureMatrix, GazeStream, ManifestImage, RawGazeSample,
};
use crate::{Error, Result};

/// Synthetic images are square with this side length in pixels.
pub const IMAGE_DIM_PX: u32 = 1000;
/// Dimension of generated image feature vectors.
pub const IMAGE_FEATURE_DIM: usize = 16;
/// Dimension of generated per-class attribute vectors.
pub const ATTRIBUTE_DIM: usize = 8;
/// Side length of generated saliency grids.
pub const SALIENCY_GRID: usize = 8;

/// 300 Hz sampling.
const SAMPLE_INTERVAL_MS: f64 = 1000.0 / 300.0;
/// Per-sample walk step bound in pixels. Must stay small enough that any
/// five consecutive samples fit the default dispersion threshold, which
/// guarantees at least one detected fixation per stream at every σ.
const WALK_STEP_PX: f64 = 3.0;
/// Walk excursion bound around the stream center, in pixels.
const WALK_CAP_PX: f64 = 100.0;
/// Horizontal separation of the two synthetic eyes from the gaze point.
const EYE_OFFSET_PX: f64 = 0.5;
/// Fraction of samples marked invalid at σ = 0; scales with 1 − σ.
const INVALID_RATE: f64 = 0.02;

/// Generation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub n_classes: usize,
    pub images_per_class: usize,
    pub participants: usize,
    pub samples_per_stream: usize,
    /// σ: 1 = deterministic class structure, 0 = exchangeable noise.
    pub class_signal_strength: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_classes: 8,
            images_per_class: 20,
            participants: 3,
            samples_per_stream: 150,
            class_signal_strength: 1.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_classes == 0
            || self.images_per_class == 0
            || self.participants == 0
            || self.samples_per_stream == 0
        {
            return Err(Error::invalid("synth spec", "all counts must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.class_signal_strength) {
            return Err(Error::invalid(
                "synth spec",
                format!(
                    "class signal strength {} outside [0, 1]",
                    self.class_signal_strength
                ),
            ));
        }
        Ok(())
    }
}

/// A complete generated dataset, in memory. [`write_dataset`] lays it out
/// on disk in the ingestion formats.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub manifest: DatasetManifest,
    /// Participant-major, images in manifest order within each participant.
    pub streams: Vec<GazeStream>,
    /// One row per image, aligned with `manifest.images` (feature_row = index).
    pub features: Array2<f64>,
    pub attributes: AttributeMatrix,
    pub bubbles: Vec<BubbleTrack>,
    pub corpus: Vec<CorpusDocument>,
    /// Per-image saliency grids in manifest image order.
    pub saliency: Vec<(String, SaliencyMap)>,
    /// Latent class anchors in normalized coordinates, class order.
    pub anchors: Vec<(f64, f64)>,
    /// Latent class pupil levels in millimeters, class order.
    pub pupil_levels: Vec<f64>,
}

impl SynthDataset {
    /// Runs fixation detection over every stream and indexes the results.
    pub fn gaze_dataset(&self, params: &FilterParams) -> Result<GazeDataset> {
        let mut dataset = GazeDataset::new(self.manifest.clone())?;
        for stream in &self.streams {
            dataset.insert(detect_fixations(stream, params)?)?;
        }
        Ok(dataset)
    }

    pub fn image_set(&self) -> Result<ImageSet> {
        image_set(
            &self.manifest,
            &FeatureMatrix {
                rows: self.features.clone(),
            },
        )
    }
}

/// Latent descriptor a class's observable structure is derived from:
/// anchor position, centered pupil level, and a bias term.
fn latent(anchor: (f64, f64), pupil_level: f64) -> Array1<f64> {
    ndarray::array![anchor.0, anchor.1, pupil_level - 3.5, 1.0]
}

fn blend(sigma: f64, signal: f64, noise: f64) -> f64 {
    sigma * signal + (1.0 - sigma) * noise
}

/// Pupil levels that give every class the same standardized signature
/// norm. The gaze pipeline z-scores embedding columns and then unit-
/// normalizes rows; if per-class (x, y, pupil) z-score norms are equal,
/// that row step is a uniform rescale and between-class geometry passes
/// through undistorted. Each class gets a pupil elevation topping its
/// spatial z-norm up to a shared target, signs balanced so the elevations
/// stay near zero mean (the pipeline's own z-scoring then reproduces
/// them). Levels are offset from 3.5 mm at half scale to stay plausible.
fn pupil_levels_for(anchors: &[(f64, f64)]) -> Vec<f64> {
    let c = anchors.len();
    if c == 1 {
        return vec![3.5];
    }
    let zscores = |vals: Vec<f64>| -> Vec<f64> {
        let mean = vals.iter().sum::<f64>() / c as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / c as f64;
        if var <= f64::EPSILON {
            vec![0.0; c]
        } else {
            vals.iter().map(|v| (v - mean) / var.sqrt()).collect()
        }
    };
    let zx = zscores(anchors.iter().map(|a| a.0).collect());
    let zy = zscores(anchors.iter().map(|a| a.1).collect());
    let r2: Vec<f64> = (0..c).map(|i| zx[i] * zx[i] + zy[i] * zy[i]).collect();
    // target norm 1 + mean(r^2) makes the elevations unit-variance, so
    // downstream z-scoring leaves their relative magnitudes intact.
    let target = 1.0 + r2.iter().sum::<f64>() / c as f64;
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| r2[a].partial_cmp(&r2[b]).unwrap().then(a.cmp(&b)));
    let mut levels = vec![3.5; c];
    let mut running = 0.0;
    for &i in &order {
        let magnitude = (target - r2[i]).max(0.0).sqrt();
        let sign = if running > 0.0 { -1.0 } else { 1.0 };
        running += sign * magnitude;
        levels[i] = 3.5 + 0.5 * sign * magnitude;
    }
    levels
}

/// Gram-Schmidt on columns. An orthonormal map preserves latent inner
/// products in feature space, so class similarity in the emitted features
/// reflects latent similarity rather than a random linear distortion.
fn orthonormalize_columns(m: &mut Array2<f64>) {
    for j in 0..m.ncols() {
        for k in 0..j {
            let proj = m.column(j).dot(&m.column(k));
            let prev = m.column(k).to_owned();
            m.column_mut(j).zip_mut_with(&prev, |a, b| *a -= proj * b);
        }
        let norm = m.column(j).dot(&m.column(j)).sqrt();
        assert!(norm > 1e-9, "degenerate feature map draw");
        m.column_mut(j).mapv_inplace(|v| v / norm);
    }
}

/// Three lowercase letters encoding `i` in base 26.
fn letters(mut i: usize) -> String {
    let mut s = [0u8; 3];
    for slot in (0..3).rev() {
        s[slot] = b'a' + (i % 26) as u8;
        i /= 26;
    }
    String::from_utf8(s.to_vec()).expect("ascii")
}

/// Class document: a few signature words unique to the class, repeated,
/// plus a shared filler sentence (with stop words) common to every class.
fn class_document(class_index: usize) -> String {
    let mut words: Vec<String> = Vec::new();
    for j in 0..4 {
        let word = format!("w{}", letters(class_index * 4 + j));
        for _ in 0..2 + (class_index + j) % 3 {
            words.push(word.clone());
        }
    }
    format!(
        "{}. The observers looked at the screen and it was recorded.\n",
        words.join(" ")
    )
}

/// Generates a dataset. Draw order is fixed, and the number of generator
/// draws does not depend on σ, so datasets with equal seeds share their
/// latent class structure across σ values.
pub fn generate(spec: &SynthSpec) -> Result<SynthDataset> {
    spec.validate()?;
    let sigma = spec.class_signal_strength;
    let c = spec.n_classes;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // anchors on a jittered ceil(sqrt(C)) grid, shuffled so class index
    // carries no spatial order. Cells are taken outside-in: a class in the
    // central cell would sit at the marginal mean of both coordinates and
    // become nearly indistinguishable after standardization.
    let g = (c as f64).sqrt().ceil() as usize;
    let mid = (g as f64 - 1.0) / 2.0;
    let mut cells: Vec<(usize, usize)> = (0..g * g).map(|i| (i / g, i % g)).collect();
    cells.sort_by(|a, b| {
        let d = |(r, c): &(usize, usize)| (*r as f64 - mid).powi(2) + (*c as f64 - mid).powi(2);
        d(b).partial_cmp(&d(a)).unwrap().then((a.0, a.1).cmp(&(b.0, b.1)))
    });
    let jitter = 0.1 / g as f64;
    let mut anchors: Vec<(f64, f64)> = cells[..c]
        .iter()
        .map(|&(row, col)| {
            (
                (col as f64 + 0.5) / g as f64 + rng.random_range(-jitter..jitter),
                (row as f64 + 0.5) / g as f64 + rng.random_range(-jitter..jitter),
            )
        })
        .collect();
    anchors.shuffle(&mut rng);
    let pupil_levels = pupil_levels_for(&anchors);
    let mut feature_map =
        Array2::from_shape_fn((IMAGE_FEATURE_DIM, 4), |_| rng.random_range(-1.0..1.0));
    orthonormalize_columns(&mut feature_map);
    let attribute_map =
        Array2::from_shape_fn((ATTRIBUTE_DIM, 4), |_| rng.random_range(-1.0..1.0));

    let classes: Vec<String> = (0..c).map(|i| format!("c{i:02}")).collect();
    let participants: Vec<String> = (0..spec.participants).map(|i| format!("p{i}")).collect();
    let images: Vec<ManifestImage> = (0..c * spec.images_per_class)
        .map(|i| ManifestImage {
            id: format!("img{i:04}"),
            class: classes[i / spec.images_per_class].clone(),
            feature_row: i,
        })
        .collect();
    let manifest = DatasetManifest {
        classes: classes.clone(),
        participants: participants.clone(),
        images,
    };

    let mut features = Array2::zeros((manifest.images.len(), IMAGE_FEATURE_DIM));
    for (i, img) in manifest.images.iter().enumerate() {
        let class = i / spec.images_per_class;
        let direction = feature_map.dot(&latent(anchors[class], pupil_levels[class]));
        for j in 0..IMAGE_FEATURE_DIM {
            features[[i, j]] = blend(sigma, direction[j], rng.random_range(-1.0..1.0));
        }
        debug_assert_eq!(img.feature_row, i);
    }

    let attributes = AttributeMatrix {
        classes: classes.clone(),
        rows: (0..c)
            .map(|class| {
                attribute_map
                    .dot(&latent(anchors[class], pupil_levels[class]))
                    .to_vec()
            })
            .collect(),
    };

    let mut bubbles = Vec::with_capacity(manifest.images.len());
    for (i, img) in manifest.images.iter().enumerate() {
        let class = i / spec.images_per_class;
        // one bubble riding the anchor (so bubble ablation keeps the
        // attended region at high σ) plus two decoys.
        let mut tracks = vec![Bubble {
            x: blend(sigma, anchors[class].0, rng.random_range(0.2..0.8)),
            y: blend(sigma, anchors[class].1, rng.random_range(0.2..0.8)),
            radius: 0.25,
        }];
        for _ in 0..2 {
            tracks.push(Bubble {
                x: rng.random_range(0.05..0.95),
                y: rng.random_range(0.05..0.95),
                radius: rng.random_range(0.05..0.2),
            });
        }
        bubbles.push(BubbleTrack {
            image_id: img.id.clone(),
            bubbles: tracks,
        });
    }

    let mut saliency = Vec::with_capacity(manifest.images.len());
    for (i, img) in manifest.images.iter().enumerate() {
        let class = i / spec.images_per_class;
        let center = (
            blend(sigma, anchors[class].0, rng.random_range(0.2..0.8)),
            blend(sigma, anchors[class].1, rng.random_range(0.2..0.8)),
        );
        let n = SALIENCY_GRID;
        let mut values = Vec::with_capacity(n * n);
        for row in 0..n {
            for col in 0..n {
                let cx = (col as f64 + 0.5) / n as f64;
                let cy = (row as f64 + 0.5) / n as f64;
                let d2 = (cx - center.0).powi(2) + (cy - center.1).powi(2);
                let bump = (-d2 / (2.0 * 0.08f64.powi(2))).exp();
                values.push(blend(sigma, bump, rng.random::<f64>()));
            }
        }
        saliency.push((
            img.id.clone(),
            SaliencyMap {
                rows: n,
                cols: n,
                values,
            },
        ));
    }

    let corpus: Vec<CorpusDocument> = (0..c)
        .map(|class| CorpusDocument {
            class: classes[class].clone(),
            text: class_document(class),
        })
        .collect();

    let dim = IMAGE_DIM_PX as f64;
    let mut streams = Vec::with_capacity(spec.participants * manifest.images.len());
    for participant in &participants {
        for (i, img) in manifest.images.iter().enumerate() {
            let class = i / spec.images_per_class;
            let center_px = (
                blend(sigma, anchors[class].0, rng.random_range(0.2..0.8)) * dim,
                blend(sigma, anchors[class].1, rng.random_range(0.2..0.8)) * dim,
            );
            let (mut ox, mut oy) = (0.0f64, 0.0f64);
            let mut samples = Vec::with_capacity(spec.samples_per_stream);
            for t in 0..spec.samples_per_stream {
                ox = (ox + rng.random_range(-WALK_STEP_PX..WALK_STEP_PX))
                    .clamp(-WALK_CAP_PX, WALK_CAP_PX);
                oy = (oy + rng.random_range(-WALK_STEP_PX..WALK_STEP_PX))
                    .clamp(-WALK_CAP_PX, WALK_CAP_PX);
                let x = (center_px.0 + (1.0 - sigma) * ox)
                    .clamp(EYE_OFFSET_PX, dim - EYE_OFFSET_PX);
                let y = (center_px.1 + (1.0 - sigma) * oy).clamp(0.0, dim);
                let pupil = 3.5
                    + sigma * (pupil_levels[class] - 3.5)
                    + (1.0 - sigma) * rng.random_range(-0.3..0.3);
                // never invalidate the first sample: a stream must keep at
                // least one valid row to reparse cleanly.
                let invalid = rng.random::<f64>() < INVALID_RATE * (1.0 - sigma) && t > 0;
                samples.push(RawGazeSample {
                    timestamp_ms: t as f64 * SAMPLE_INTERVAL_MS,
                    left_x: x - EYE_OFFSET_PX,
                    left_y: y,
                    right_x: x + EYE_OFFSET_PX,
                    right_y: y,
                    left_pupil: pupil - 0.05,
                    right_pupil: pupil + 0.05,
                    left_valid: if invalid { 4 } else { 0 },
                    right_valid: 0,
                });
            }
            streams.push(GazeStream {
                image_id: img.id.clone(),
                participant_id: participant.clone(),
                image_width: IMAGE_DIM_PX,
                image_height: IMAGE_DIM_PX,
                samples,
            });
        }
    }

    Ok(SynthDataset {
        manifest,
        streams,
        features,
        attributes,
        bubbles,
        corpus,
        saliency,
        anchors,
        pupil_levels,
    })
}

/// Writes the dataset under `root` in the canonical layout:
/// `manifest.toml`, `features.txt`, `attributes.txt`, `bubbles.csv`,
/// `gaze/<participant>/<image>.csv`, `corpus/<class>.txt`,
/// `saliency/<image>.txt`.
pub fn write_dataset(data: &SynthDataset, root: &Path) -> Result<()> {
    std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    ingest::write_manifest(&data.manifest, &root.join("manifest.toml"))?;
    ingest::write_feature_matrix(&data.features, &root.join("features.txt"))?;
    ingest::write_attribute_matrix(&data.attributes, &root.join("attributes.txt"))?;
    ingest::write_bubble_tracks(&data.bubbles, &root.join("bubbles.csv"))?;
    ingest::write_corpus(&data.corpus, &root.join("corpus"))?;
    let saliency_dir = root.join("saliency");
    std::fs::create_dir_all(&saliency_dir).map_err(|e| Error::io(&saliency_dir, e))?;
    for (image_id, map) in &data.saliency {
        ingest::write_saliency_map(map, &saliency_dir.join(format!("{image_id}.txt")))?;
    }
    for stream in &data.streams {
        let dir = root.join("gaze").join(&stream.participant_id);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        ingest::write_gaze_log(stream, &dir.join(format!("{}.csv", stream.image_id)))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use tempfile::TempDir;

    fn small_spec() -> SynthSpec {
        SynthSpec {
            n_classes: 4,
            images_per_class: 2,
            participants: 2,
            samples_per_stream: 30,
            class_signal_strength: 1.0,
            seed: 42,
        }
    }

    #[test]
    fn spec_validation_guards_counts_and_signal_range() {
        SynthSpec::default().validate().unwrap();
        for bad in [
            SynthSpec {
                n_classes: 0,
                ..SynthSpec::default()
            },
            SynthSpec {
                samples_per_stream: 0,
                ..SynthSpec::default()
            },
            SynthSpec {
                class_signal_strength: 1.5,
                ..SynthSpec::default()
            },
            SynthSpec {
                class_signal_strength: -0.1,
                ..SynthSpec::default()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn full_signal_streams_fixate_exactly_on_the_anchor() {
        let data = generate(&small_spec()).unwrap();
        for stream in &data.streams {
            let seq = detect_fixations(stream, &FilterParams::default()).unwrap();
            assert_eq!(seq.len(), 1, "σ=1 stream is one long fixation");
            let class = data
                .manifest
                .images
                .iter()
                .position(|i| i.id == stream.image_id)
                .unwrap()
                / 2;
            let (ax, ay) = data.anchors[class];
            assert!((seq.fixations[0].x - ax).abs() < 1e-6);
            assert!((seq.fixations[0].y - ay).abs() < 1e-6);
        }
    }

    #[test]
    fn half_second_at_three_hundred_hertz_reparses_to_150_samples() {
        let spec = SynthSpec {
            n_classes: 1,
            images_per_class: 1,
            participants: 1,
            samples_per_stream: 150,
            class_signal_strength: 1.0,
            seed: 3,
        };
        let data = generate(&spec).unwrap();
        let dir = TempDir::new().unwrap();
        write_dataset(&data, dir.path()).unwrap();
        let path = dir.path().join("gaze/p0/img0000.csv");
        let stream = ingest::parse_gaze_log(&path, (IMAGE_DIM_PX, IMAGE_DIM_PX)).unwrap();
        assert_eq!(stream.samples.len(), 150);
        for pair in stream.samples.windows(2) {
            assert!(pair[1].timestamp_ms > pair[0].timestamp_ms);
        }
        let span = stream.samples.last().unwrap().timestamp_ms;
        assert!((span - 149.0 * SAMPLE_INTERVAL_MS).abs() < 1e-9);
    }

    #[test]
    fn same_seed_produces_byte_identical_trees() {
        let spec = SynthSpec {
            class_signal_strength: 0.5,
            ..small_spec()
        };
        let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
        write_dataset(&generate(&spec).unwrap(), a.path()).unwrap();
        write_dataset(&generate(&spec).unwrap(), b.path()).unwrap();
        let mut compared = 0;
        for entry in walk(a.path()) {
            let rel = entry.strip_prefix(a.path()).unwrap();
            let left = std::fs::read(&entry).unwrap();
            let right = std::fs::read(b.path().join(rel)).unwrap();
            assert_eq!(left, right, "{rel:?} differs");
            compared += 1;
        }
        // manifest, features, attributes, bubbles, 4 corpus docs,
        // 8 saliency grids, 16 gaze logs.
        assert_eq!(compared, 32);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
    }

    fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
        let mut files = Vec::new();
        let mut stack = vec![dir.to_path_buf()];
        while let Some(d) = stack.pop() {
            for entry in std::fs::read_dir(&d).unwrap() {
                let path = entry.unwrap().path();
                if path.is_dir() {
                    stack.push(path);
                } else {
                    files.push(path);
                }
            }
        }
        files.sort();
        files
    }

    #[test]
    fn written_trees_reload_through_every_parser() {
        for sigma in [0.0, 0.5, 1.0] {
            let spec = SynthSpec {
                class_signal_strength: sigma,
                ..small_spec()
            };
            let data = generate(&spec).unwrap();
            let dir = TempDir::new().unwrap();
            write_dataset(&data, dir.path()).unwrap();
            let manifest = ingest::load_manifest(&dir.path().join("manifest.toml")).unwrap();
            assert_eq!(manifest, data.manifest);
            let features =
                ingest::load_feature_matrix(&dir.path().join("features.txt"), &manifest).unwrap();
            assert_eq!(features.rows, data.features);
            let attributes =
                ingest::load_attribute_matrix(&dir.path().join("attributes.txt"), &manifest)
                    .unwrap();
            assert_eq!(attributes, data.attributes);
            let bubbles = ingest::load_bubble_tracks(&dir.path().join("bubbles.csv")).unwrap();
            assert_eq!(bubbles, data.bubbles);
            let corpus = ingest::load_corpus(&dir.path().join("corpus"), &manifest).unwrap();
            assert_eq!(corpus, data.corpus);
            let saliency =
                ingest::load_saliency_maps(&dir.path().join("saliency"), &manifest).unwrap();
            for (id, map) in &data.saliency {
                assert_eq!(saliency.get(id.as_str()), Some(map));
            }
            for participant in &manifest.participants {
                for img in &manifest.images {
                    let path = dir
                        .path()
                        .join("gaze")
                        .join(participant)
                        .join(format!("{}.csv", img.id));
                    ingest::parse_gaze_log(&path, (IMAGE_DIM_PX, IMAGE_DIM_PX)).unwrap();
                }
            }
        }
    }

    #[test]
    fn every_stream_yields_a_fixation_at_default_thresholds() {
        for sigma in [0.0, 0.5, 1.0] {
            let spec = SynthSpec {
                class_signal_strength: sigma,
                seed: 7,
                ..small_spec()
            };
            let data = generate(&spec).unwrap();
            let dataset = data.gaze_dataset(&FilterParams::default()).unwrap();
            dataset.validate_complete().unwrap();
            assert!(dataset.min_fixation_count(None).unwrap() >= 1);
        }
    }

    #[test]
    fn anchors_stay_separated_and_latents_are_shared_across_sigma()
    {
        let strong = generate(&small_spec()).unwrap();
        let weak = generate(&SynthSpec {
            class_signal_strength: 0.0,
            ..small_spec()
        })
        .unwrap();
        assert_eq!(strong.anchors, weak.anchors);
        assert_eq!(strong.pupil_levels, weak.pupil_levels);
        assert_ne!(strong.features, weak.features);
        let g = (small_spec().n_classes as f64).sqrt().ceil();
        for (i, a) in strong.anchors.iter().enumerate() {
            for b in &strong.anchors[i + 1..] {
                let d = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
                assert!(d >= 0.7 / g, "anchors {a:?} and {b:?} too close");
            }
        }
    }

    #[test]
    fn class_documents_share_filler_but_not_signature_words() {
        let data = generate(&small_spec()).unwrap();
        assert_eq!(data.corpus.len(), 4);
        for (i, doc) in data.corpus.iter().enumerate() {
            assert!(doc.text.contains("observers"));
            let own = format!("w{}", letters(i * 4));
            assert!(doc.text.contains(&own));
            for (j, other) in data.corpus.iter().enumerate() {
                if i != j {
                    assert!(!other.text.contains(&own));
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn generated_data_respects_basic_invariants(
            n_classes in 1usize..6,
            images_per_class in 1usize..4,
            participants in 1usize..3,
            samples in 10usize..60,
            sigma in 0.0f64..=1.0,
            seed in 0u64..1000,
        ) {
            let spec = SynthSpec {
                n_classes,
                images_per_class,
                participants,
                samples_per_stream: samples,
                class_signal_strength: sigma,
                seed,
            };
            let data = generate(&spec).unwrap();
            data.manifest.validate().unwrap();
            prop_assert_eq!(data.streams.len(), participants * n_classes * images_per_class);
            prop_assert_eq!(data.features.nrows(), n_classes * images_per_class);
            for stream in &data.streams {
                prop_assert_eq!(stream.samples.len(), samples);
                prop_assert_eq!(stream.samples[0].left_valid, 0);
                for s in &stream.samples {
                    prop_assert!(s.left_x >= 0.0 && s.right_x <= IMAGE_DIM_PX as f64);
                    prop_assert!(s.left_y >= 0.0 && s.left_y <= IMAGE_DIM_PX as f64);
                    prop_assert!(s.left_pupil > 0.0 && s.right_pupil > 0.0);
                }
            }
            prop_assert!(data.features.iter().all(|v| v.is_finite()));
            for (_, map) in &data.saliency {
                prop_assert!(map.values.iter().all(|v| *v >= 0.0));
            }
        }
    }
}
