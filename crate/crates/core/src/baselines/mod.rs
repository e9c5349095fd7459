//! Competitor class embeddings: random points, central point, saliency
//! histograms, bubble tracks, bag-of-words text and per-class attributes,
//! plus pairwise fusion of any two embedding sets.
//!
//! Every builder returns the same [`EmbeddingSet`] / [`ClassEmbeddings`]
//! types as the gaze pipeline, so all sources are interchangeable inputs to
//! the compatibility model.

mod bow;
mod stem;

pub use bow::{bow_class_matrix, build_bow_embeddings, tokenize, DEFAULT_BOW_VOCABULARY};

use std::collections::HashMap;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embed::{
    build_gaze_embeddings, standardize, ClassEmbeddings, EmbeddingSet, GazeEmbedConfig, Grid,
};
use crate::fixation::{Fixation, FixationSequence, GazeDataset};
use crate::ingest::DatasetManifest;
use crate::{Error, Result};

/// One mouse-click bubble: a disc the annotator revealed on the image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bubble {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

/// The ordered bubbles recorded for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct BubbleTrack {
    pub image_id: String,
    pub bubbles: Vec<Bubble>,
}

/// Per-class attribute vectors of a fixed dimension, classes in row order.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeMatrix {
    pub classes: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl AttributeMatrix {
    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn matrix(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.rows.len(), self.dim()));
        for (i, row) in self.rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m[[i, j]] = v;
            }
        }
        m
    }
}

/// One text document describing a class.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusDocument {
    pub class: String,
    pub text: String,
}

/// A per-image saliency grid stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl SaliencyMap {
    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }
}

/// Dwell time written into synthetic substitution fixations.
const SUBSTITUTE_DURATION_MS: f64 = 250.0;
/// Pupil diameter written into synthetic substitution fixations.
const SUBSTITUTE_PUPIL: f64 = 3.5;

fn substitute_dataset<F>(manifest: &DatasetManifest, mut points: F) -> Result<GazeDataset>
where
    F: FnMut() -> Vec<(f64, f64)>,
{
    let mut dataset = GazeDataset::new(manifest.clone())?;
    for participant in &manifest.participants {
        for image in &manifest.images {
            let fixations = points()
                .into_iter()
                .enumerate()
                .map(|(i, (x, y))| Fixation {
                    x,
                    y,
                    onset_ms: i as f64 * SUBSTITUTE_DURATION_MS,
                    duration_ms: SUBSTITUTE_DURATION_MS,
                    pupil: SUBSTITUTE_PUPIL,
                })
                .collect();
            dataset.insert(FixationSequence {
                image_id: image.id.clone(),
                participant_id: participant.clone(),
                image_width: 1000,
                image_height: 1000,
                fixations,
            })?;
        }
    }
    Ok(dataset)
}

/// Dataset whose every sequence is `count` uniform random points in the
/// unit square; the gaze each image actually received is ignored.
pub fn random_points_dataset(
    manifest: &DatasetManifest,
    count: usize,
    seed: u64,
) -> Result<GazeDataset> {
    if count == 0 {
        return Err(Error::invalid("random baseline", "count must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    substitute_dataset(manifest, move || {
        (0..count)
            .map(|_| (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)))
            .collect()
    })
}

/// Dataset whose every sequence is the single fixation (0.5, 0.5).
pub fn central_point_dataset(manifest: &DatasetManifest) -> Result<GazeDataset> {
    substitute_dataset(manifest, || vec![(0.5, 0.5)])
}

fn retag(embeddings: ClassEmbeddings, tag: &str) -> ClassEmbeddings {
    match embeddings {
        ClassEmbeddings::Fused(mut set) => {
            set.source = format!("{tag}:{}", set.source);
            ClassEmbeddings::Fused(set)
        }
        ClassEmbeddings::PerParticipant(mut sets) => {
            for set in &mut sets {
                set.source = format!("{tag}:{}", set.source);
            }
            ClassEmbeddings::PerParticipant(sets)
        }
    }
}

/// Random-points control: the gaze encoder path applied to uniform noise.
pub fn embed_random_points(
    manifest: &DatasetManifest,
    classes: &[String],
    config: &GazeEmbedConfig,
    count: usize,
    seed: u64,
) -> Result<ClassEmbeddings> {
    let dataset = random_points_dataset(manifest, count, seed)?;
    Ok(retag(build_gaze_embeddings(&dataset, classes, config)?, "random"))
}

/// Central-point control: every sequence collapsed to the image center.
pub fn embed_central_point(
    manifest: &DatasetManifest,
    classes: &[String],
    config: &GazeEmbedConfig,
) -> Result<ClassEmbeddings> {
    let dataset = central_point_dataset(manifest)?;
    Ok(retag(build_gaze_embeddings(&dataset, classes, config)?, "central"))
}

/// Mean saliency of one map inside each grid cell; map pixels are binned
/// by their centers and cells covering no pixel are zero.
pub fn saliency_cell_means(map: &SaliencyMap, grid: Grid) -> Array1<f64> {
    let mut sums = Array1::zeros(grid.cells());
    let mut counts = vec![0usize; grid.cells()];
    for r in 0..map.rows {
        let y = (r as f64 + 0.5) / map.rows as f64;
        for c in 0..map.cols {
            let x = (c as f64 + 0.5) / map.cols as f64;
            let cell = grid.cell(x, y);
            sums[cell] += map.value(r, c);
            counts[cell] += 1;
        }
    }
    for (cell, &n) in counts.iter().enumerate() {
        if n > 0 {
            sums[cell] /= n as f64;
        }
    }
    sums
}

/// Raw per-class saliency matrix: the mean of every class image's cell
/// means. Errors if any manifest image of a requested class has no map.
pub fn saliency_class_matrix(
    maps: &HashMap<String, SaliencyMap>,
    manifest: &DatasetManifest,
    classes: &[String],
    grid: Grid,
) -> Result<Array2<f64>> {
    let mut matrix = Array2::zeros((classes.len(), grid.cells()));
    for (ci, class) in classes.iter().enumerate() {
        let mut count = 0usize;
        let mut acc = Array1::<f64>::zeros(grid.cells());
        for image in manifest.images_of(class) {
            let map = maps.get(&image.id).ok_or_else(|| {
                Error::invalid(
                    "saliency baseline",
                    format!("no saliency map for image '{}'", image.id),
                )
            })?;
            acc += &saliency_cell_means(map, grid);
            count += 1;
        }
        if count == 0 {
            return Err(Error::EmptyClass {
                class: class.clone(),
                context: "no images for class in saliency baseline".into(),
            });
        }
        acc /= count as f64;
        matrix.row_mut(ci).assign(&acc);
    }
    Ok(matrix)
}

/// Standardized saliency-histogram class embeddings.
pub fn embed_saliency_histogram(
    maps: &HashMap<String, SaliencyMap>,
    manifest: &DatasetManifest,
    classes: &[String],
    grid: Grid,
) -> Result<EmbeddingSet> {
    let mut matrix = saliency_class_matrix(maps, manifest, classes, grid)?;
    standardize(&mut matrix)?;
    Ok(EmbeddingSet {
        classes: classes.to_vec(),
        vectors: matrix,
        source: format!("saliency:{grid}"),
    })
}

/// Raw per-class bubble matrix: each annotated image contributes `k`
/// evenly sampled (x, y, radius) triples, averaged per class. Images
/// without a track are skipped; a class with none is an error.
pub fn bubble_class_matrix(
    tracks: &[BubbleTrack],
    manifest: &DatasetManifest,
    classes: &[String],
    k: usize,
) -> Result<Array2<f64>> {
    let by_image: HashMap<&str, &BubbleTrack> =
        tracks.iter().map(|t| (t.image_id.as_str(), t)).collect();
    let dim = 3 * k;
    let mut matrix = Array2::zeros((classes.len(), dim));
    for (ci, class) in classes.iter().enumerate() {
        let mut count = 0usize;
        let mut acc = Array1::<f64>::zeros(dim);
        for image in manifest.images_of(class) {
            let Some(track) = by_image.get(image.id.as_str()) else {
                continue;
            };
            let idx = crate::embed::sample_indices(track.bubbles.len(), k)?;
            for (slot, i) in idx.into_iter().enumerate() {
                let b = track.bubbles[i];
                acc[slot * 3] += b.x;
                acc[slot * 3 + 1] += b.y;
                acc[slot * 3 + 2] += b.radius;
            }
            count += 1;
        }
        if count == 0 {
            return Err(Error::EmptyClass {
                class: class.clone(),
                context: "no bubble tracks for class".into(),
            });
        }
        acc /= count as f64;
        matrix.row_mut(ci).assign(&acc);
    }
    Ok(matrix)
}

/// Standardized bubble-sequence class embeddings.
pub fn encode_bubbles_bfs(
    tracks: &[BubbleTrack],
    manifest: &DatasetManifest,
    classes: &[String],
    k: usize,
) -> Result<EmbeddingSet> {
    let mut matrix = bubble_class_matrix(tracks, manifest, classes, k)?;
    standardize(&mut matrix)?;
    Ok(EmbeddingSet {
        classes: classes.to_vec(),
        vectors: matrix,
        source: format!("bfs:k={k}"),
    })
}

/// Standardized attribute class embeddings.
pub fn attribute_embeddings(attributes: &AttributeMatrix) -> Result<EmbeddingSet> {
    if attributes.rows.iter().any(|r| r.len() != attributes.dim()) {
        return Err(Error::DimensionMismatch(
            "attribute rows have unequal lengths".into(),
        ));
    }
    let mut matrix = attributes.matrix();
    standardize(&mut matrix)?;
    Ok(EmbeddingSet {
        classes: attributes.classes.clone(),
        vectors: matrix,
        source: "attributes".into(),
    })
}

/// Standardizes both sets and concatenates them per class. `b` is
/// reordered to `a`'s class order; a class missing from `b` is an error.
pub fn fuse_embeddings(a: &EmbeddingSet, b: &EmbeddingSet) -> Result<EmbeddingSet> {
    let b = b.restrict(&a.classes)?;
    let mut left = a.vectors.clone();
    let mut right = b.vectors;
    standardize(&mut left)?;
    standardize(&mut right)?;
    let n = a.classes.len();
    let mut vectors = Array2::zeros((n, left.ncols() + right.ncols()));
    vectors.slice_mut(ndarray::s![.., ..left.ncols()]).assign(&left);
    vectors.slice_mut(ndarray::s![.., left.ncols()..]).assign(&right);
    Ok(EmbeddingSet {
        classes: a.classes.clone(),
        vectors,
        source: "fused".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{class_matrix_for_participant, Encoder, EncoderKind, Fusion};
    use crate::features::FeatureMask;
    use crate::ingest::ManifestImage;
    use approx::assert_relative_eq;
    use ndarray::array;

    fn small_manifest() -> DatasetManifest {
        DatasetManifest {
            classes: vec!["left".into(), "right".into()],
            participants: vec!["p0".into()],
            images: vec![
                ManifestImage { id: "a".into(), class: "left".into(), feature_row: 0 },
                ManifestImage { id: "b".into(), class: "right".into(), feature_row: 1 },
            ],
        }
    }

    fn gh_config() -> GazeEmbedConfig {
        GazeEmbedConfig {
            kind: EncoderKind::Histogram,
            grid: Grid::default(),
            mask: FeatureMask::xy(),
            k: None,
            fusion: Fusion::Average,
        }
    }

    #[test]
    fn random_points_are_deterministic_per_seed() {
        let manifest = small_manifest();
        let a = embed_random_points(&manifest, &manifest.classes, &gh_config(), 50, 7).unwrap();
        let b = embed_random_points(&manifest, &manifest.classes, &gh_config(), 50, 7).unwrap();
        let c = embed_random_points(&manifest, &manifest.classes, &gh_config(), 50, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        match a {
            ClassEmbeddings::Fused(set) => assert!(set.source.starts_with("random:")),
            _ => panic!("expected fused set"),
        }
    }

    #[test]
    fn many_random_points_spread_almost_uniformly() {
        let manifest = DatasetManifest {
            classes: vec!["only".into()],
            participants: vec!["p0".into()],
            images: vec![ManifestImage { id: "a".into(), class: "only".into(), feature_row: 0 }],
        };
        let dataset = random_points_dataset(&manifest, 9000, 11).unwrap();
        let enc = Encoder::Histogram { grid: Grid::default() };
        let m = class_matrix_for_participant(&dataset, &manifest.classes, "p0", &enc).unwrap();
        for &count in m.row(0) {
            assert!((950.0..=1050.0).contains(&count), "cell count {count}");
        }
    }

    #[test]
    fn central_point_collapses_every_sequence_to_the_center() {
        let manifest = small_manifest();
        let dataset = central_point_dataset(&manifest).unwrap();

        // raw histogram: one count in the middle cell for every class.
        let gh = Encoder::Histogram { grid: Grid::default() };
        let m = class_matrix_for_participant(&dataset, &manifest.classes, "p0", &gh).unwrap();
        assert_eq!(m.row(0), m.row(1));
        assert_eq!(m[[0, 4]], 1.0);
        assert_eq!(m.row(0).sum(), 1.0);

        // raw single-sample sequence embedding: exactly (0.5, 0.5).
        let gfs = Encoder::SequenceFeatures { k: 1, mask: FeatureMask::xy() };
        let m = class_matrix_for_participant(&dataset, &manifest.classes, "p0", &gfs).unwrap();
        assert_eq!(m, array![[0.5, 0.5], [0.5, 0.5]]);
    }

    #[test]
    fn uniform_saliency_gives_equal_cells_and_delta_concentrates() {
        let uniform = SaliencyMap { rows: 6, cols: 6, values: vec![2.0; 36] };
        let cells = saliency_cell_means(&uniform, Grid::default());
        for &v in &cells {
            assert_relative_eq!(v, 2.0, max_relative = 1e-12);
        }

        let mut values = vec![0.0; 25];
        values[12] = 9.0;
        let delta = SaliencyMap { rows: 5, cols: 5, values };
        let cells = saliency_cell_means(&delta, Grid::default());
        assert_eq!(cells[4], 9.0);
        assert_eq!(cells.sum(), 9.0);
    }

    #[test]
    fn saliency_matrix_errors_on_a_missing_map() {
        let manifest = small_manifest();
        let mut maps = HashMap::new();
        maps.insert(
            "a".to_string(),
            SaliencyMap { rows: 3, cols: 3, values: vec![1.0; 9] },
        );
        let err = saliency_class_matrix(&maps, &manifest, &manifest.classes, Grid::default());
        assert!(err.is_err());

        maps.insert(
            "b".to_string(),
            SaliencyMap { rows: 3, cols: 3, values: vec![3.0; 9] },
        );
        let m = saliency_class_matrix(&maps, &manifest, &manifest.classes, Grid::default()).unwrap();
        assert_eq!(m.row(0).sum(), 9.0);
        assert_eq!(m.row(1).sum(), 27.0);
    }

    #[test]
    fn single_bubble_with_k1_is_the_raw_triple() {
        let manifest = small_manifest();
        let tracks = vec![
            BubbleTrack {
                image_id: "a".into(),
                bubbles: vec![Bubble { x: 0.3, y: 0.4, radius: 0.05 }],
            },
            BubbleTrack {
                image_id: "b".into(),
                bubbles: vec![Bubble { x: 0.6, y: 0.7, radius: 0.1 }],
            },
        ];
        let m = bubble_class_matrix(&tracks, &manifest, &manifest.classes, 1).unwrap();
        assert_eq!(m, array![[0.3, 0.4, 0.05], [0.6, 0.7, 0.1]]);
    }

    #[test]
    fn two_bubbles_with_k2_concatenate_in_order() {
        let manifest = DatasetManifest {
            classes: vec!["only".into(), "none".into()],
            participants: vec!["p0".into()],
            images: vec![
                ManifestImage { id: "a".into(), class: "only".into(), feature_row: 0 },
                ManifestImage { id: "b".into(), class: "none".into(), feature_row: 1 },
            ],
        };
        let tracks = vec![BubbleTrack {
            image_id: "a".into(),
            bubbles: vec![
                Bubble { x: 0.1, y: 0.2, radius: 0.01 },
                Bubble { x: 0.8, y: 0.9, radius: 0.02 },
            ],
        }];
        let m = bubble_class_matrix(&tracks, &manifest, &["only".to_string()], 2).unwrap();
        assert_eq!(m, array![[0.1, 0.2, 0.01, 0.8, 0.9, 0.02]]);

        // class "none" has no annotated image.
        let err = bubble_class_matrix(&tracks, &manifest, &manifest.classes, 2);
        assert!(matches!(err, Err(Error::EmptyClass { .. })));
    }

    #[test]
    fn attribute_embeddings_standardize_rows() {
        let attrs = AttributeMatrix {
            classes: vec!["a".into(), "b".into()],
            rows: vec![vec![1.0, 0.0, 3.0], vec![0.0, 1.0, 5.0]],
        };
        let set = attribute_embeddings(&attrs).unwrap();
        assert_eq!(set.source, "attributes");
        for row in set.vectors.rows() {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert_relative_eq!(norm, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn fusing_a_set_with_itself_duplicates_blocks() {
        let set = EmbeddingSet {
            classes: vec!["a".into(), "b".into()],
            vectors: array![[1.0, 5.0], [3.0, -1.0]],
            source: "attributes".into(),
        };
        let fused = fuse_embeddings(&set, &set).unwrap();
        assert_eq!(fused.source, "fused");
        assert_eq!(fused.dim(), 4);
        assert_eq!(
            fused.vectors.slice(ndarray::s![.., ..2]),
            fused.vectors.slice(ndarray::s![.., 2..])
        );
    }

    #[test]
    fn fusion_reorders_the_second_set_and_rejects_mismatches() {
        let a = EmbeddingSet {
            classes: vec!["a".into(), "b".into()],
            vectors: array![[1.0, 0.0], [0.0, 1.0]],
            source: "x".into(),
        };
        let b = EmbeddingSet {
            classes: vec!["b".into(), "a".into()],
            vectors: array![[2.0, 1.0], [1.0, 2.0]],
            source: "y".into(),
        };
        let fused = fuse_embeddings(&a, &b).unwrap();
        assert_eq!(fused.classes, vec!["a", "b"]);
        // b's row for class "a" is (1,2): after z-scoring columns of the
        // reordered matrix [[1,2],[2,1]], class a gets (-1,1)/sqrt(2).
        assert_relative_eq!(fused.vectors[[0, 2]], -1.0 / 2f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(fused.vectors[[0, 3]], 1.0 / 2f64.sqrt(), max_relative = 1e-12);

        let c = EmbeddingSet {
            classes: vec!["a".into(), "zz".into()],
            vectors: array![[1.0], [2.0]],
            source: "z".into(),
        };
        assert!(fuse_embeddings(&a, &c).is_err());
    }
}
