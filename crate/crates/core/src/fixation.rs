//! Dispersion-based fixation detection and the fixation-level dataset
//! container used by the embedding stages.
//!
//! Raw gaze samples are noisy and oversampled; downstream stages work on
//! fixations instead. A fixation is a maximal window of consecutive samples
//! that lasts at least `min_duration_ms` and whose spatial dispersion
//! `(max_x - min_x) + (max_y - min_y)` stays within `dispersion`. Detection
//! runs in the input pixel coordinates; emitted centroids are normalized to
//! the unit square.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ingest::{DatasetManifest, GazeStream};
use crate::{Error, Result};

/// Detection thresholds. The dispersion threshold is in the same unit as
/// the input coordinates (pixels); use [`ScreenGeometry`] to derive it from
/// a visual angle when the recording setup is known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterParams {
    pub dispersion: f64,
    pub min_duration_ms: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        FilterParams {
            dispersion: 25.0,
            min_duration_ms: 10.0,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dispersion.is_finite() && self.dispersion > 0.0) {
            return Err(Error::invalid(
                "filter params",
                "dispersion threshold must be a positive finite number",
            ));
        }
        if !(self.min_duration_ms.is_finite() && self.min_duration_ms > 0.0) {
            return Err(Error::invalid(
                "filter params",
                "duration threshold must be a positive finite number",
            ));
        }
        Ok(())
    }
}

/// One detected fixation. The centroid is in normalized image coordinates;
/// onset and duration are in milliseconds; pupil is the mean diameter over
/// the member samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fixation {
    pub x: f64,
    pub y: f64,
    pub onset_ms: f64,
    pub duration_ms: f64,
    pub pupil: f64,
}

/// All fixations of one (image, participant) recording, ordered by onset.
#[derive(Debug, Clone, PartialEq)]
pub struct FixationSequence {
    pub image_id: String,
    pub participant_id: String,
    pub image_width: u32,
    pub image_height: u32,
    pub fixations: Vec<Fixation>,
}

impl FixationSequence {
    pub fn len(&self) -> usize {
        self.fixations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixations.is_empty()
    }
}

/// Converts between visual angle and on-screen pixels for a recording setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScreenGeometry {
    pub screen_width_px: f64,
    pub screen_width_mm: f64,
    pub viewing_distance_mm: f64,
}

impl ScreenGeometry {
    /// Pixels spanned by one degree of visual angle at screen center.
    pub fn pixels_per_degree(&self) -> f64 {
        let mm_per_degree = 2.0 * self.viewing_distance_mm * (0.5f64.to_radians()).tan();
        mm_per_degree * self.screen_width_px / self.screen_width_mm
    }

    pub fn degrees_to_pixels(&self, degrees: f64) -> f64 {
        degrees * self.pixels_per_degree()
    }
}

fn dispersion(points: &[(f64, f64)]) -> f64 {
    let mut min_x = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for &(x, y) in points {
        min_x = min_x.min(x);
        max_x = max_x.max(x);
        min_y = min_y.min(y);
        max_y = max_y.max(y);
    }
    (max_x - min_x) + (max_y - min_y)
}

/// Sample index windows `[start, end]` (inclusive) that form fixations.
///
/// The window over `[i, j]` starts at the smallest `j` whose time span
/// reaches the duration threshold. A window within the dispersion threshold
/// grows until the next sample would break it and is then emitted; otherwise
/// the start slides forward by one sample. A trailing stretch shorter than
/// the duration threshold is discarded.
fn fixation_windows(
    points: &[(f64, f64)],
    times: &[f64],
    params: &FilterParams,
) -> Vec<(usize, usize)> {
    debug_assert_eq!(points.len(), times.len());
    let n = points.len();
    let mut windows = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && times[j] - times[i] < params.min_duration_ms {
            j += 1;
        }
        if j == n {
            break;
        }
        if dispersion(&points[i..=j]) <= params.dispersion {
            while j + 1 < n && dispersion(&points[i..=j + 1]) <= params.dispersion {
                j += 1;
            }
            windows.push((i, j));
            i = j + 1;
        } else {
            i += 1;
        }
    }
    windows
}

/// Runs fixation detection over the valid samples of a stream. A stream
/// shorter than the duration threshold yields an empty sequence, not an
/// error.
pub fn detect_fixations(stream: &GazeStream, params: &FilterParams) -> Result<FixationSequence> {
    params.validate()?;
    if stream.image_width == 0 || stream.image_height == 0 {
        return Err(Error::invalid("fixation", "image dims must be > 0"));
    }
    let w = stream.image_width as f64;
    let h = stream.image_height as f64;
    let points: Vec<(f64, f64)> = stream.samples.iter().map(|s| s.point()).collect();
    let times: Vec<f64> = stream.samples.iter().map(|s| s.timestamp_ms).collect();
    let pupils: Vec<f64> = stream.samples.iter().map(|s| s.pupil()).collect();

    let fixations = fixation_windows(&points, &times, params)
        .into_iter()
        .map(|(start, end)| {
            let count = (end - start + 1) as f64;
            let (sx, sy) = points[start..=end]
                .iter()
                .fold((0.0, 0.0), |(ax, ay), &(x, y)| (ax + x, ay + y));
            let pupil = pupils[start..=end].iter().sum::<f64>() / count;
            Fixation {
                x: sx / count / w,
                y: sy / count / h,
                onset_ms: times[start],
                duration_ms: times[end] - times[start],
                pupil,
            }
        })
        .collect();

    Ok(FixationSequence {
        image_id: stream.image_id.clone(),
        participant_id: stream.participant_id.clone(),
        image_width: stream.image_width,
        image_height: stream.image_height,
        fixations,
    })
}

/// Fixation-level dataset: one sequence per (participant, image) pair.
///
/// Sequences are stored in insertion order; lookups go through an index on
/// the pair of ids.
#[derive(Debug, Clone)]
pub struct GazeDataset {
    pub manifest: DatasetManifest,
    sequences: Vec<FixationSequence>,
    by_pair: HashMap<(String, String), usize>,
}

impl GazeDataset {
    pub fn new(manifest: DatasetManifest) -> Result<Self> {
        manifest.validate()?;
        Ok(GazeDataset {
            manifest,
            sequences: Vec::new(),
            by_pair: HashMap::new(),
        })
    }

    pub fn insert(&mut self, sequence: FixationSequence) -> Result<()> {
        if !self
            .manifest
            .participants
            .contains(&sequence.participant_id)
        {
            return Err(Error::UnknownLabel(sequence.participant_id.clone()));
        }
        if !self.manifest.images.iter().any(|i| i.id == sequence.image_id) {
            return Err(Error::UnknownLabel(sequence.image_id.clone()));
        }
        let key = (sequence.participant_id.clone(), sequence.image_id.clone());
        if self.by_pair.contains_key(&key) {
            return Err(Error::invalid(
                "dataset",
                format!("duplicate sequence for participant '{}' image '{}'", key.0, key.1),
            ));
        }
        self.by_pair.insert(key, self.sequences.len());
        self.sequences.push(sequence);
        Ok(())
    }

    pub fn sequence(&self, participant: &str, image: &str) -> Option<&FixationSequence> {
        self.by_pair
            .get(&(participant.to_string(), image.to_string()))
            .map(|&i| &self.sequences[i])
    }

    pub fn require(&self, participant: &str, image: &str) -> Result<&FixationSequence> {
        self.sequence(participant, image).ok_or_else(|| {
            Error::invalid(
                "dataset",
                format!("no sequence recorded for participant '{participant}' image '{image}'"),
            )
        })
    }

    pub fn sequences(&self) -> impl Iterator<Item = &FixationSequence> {
        self.sequences.iter()
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// Checks that every (participant, image) pair has a non-empty sequence.
    pub fn validate_complete(&self) -> Result<()> {
        for p in &self.manifest.participants {
            for img in &self.manifest.images {
                let seq = self.require(p, &img.id)?;
                if seq.is_empty() {
                    return Err(Error::invalid(
                        "dataset",
                        format!("participant '{p}' image '{}' has no fixations", img.id),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Smallest fixation count over one participant's sequences, or over all
    /// sequences when `participant` is `None`. Used to pick a sampling size
    /// that every sequence can satisfy.
    pub fn min_fixation_count(&self, participant: Option<&str>) -> Result<usize> {
        let mut min: Option<usize> = None;
        for seq in &self.sequences {
            if let Some(p) = participant {
                if seq.participant_id != p {
                    continue;
                }
            }
            min = Some(min.map_or(seq.len(), |m| m.min(seq.len())));
        }
        let min = min.ok_or_else(|| Error::invalid("dataset", "no sequences"))?;
        if min == 0 {
            return Err(Error::invalid(
                "dataset",
                "a sequence has zero fixations; filter or re-detect before embedding",
            ));
        }
        Ok(min)
    }
}

pub const FIXATION_FILE_HEADER: &str =
    "image_id,participant_id,image_width,image_height,onset_ms,duration_ms,x,y,pupil";

/// Writes fixation sequences as CSV. Consecutive rows with the same
/// (image, participant) pair form one sequence; floats are written in the
/// shortest form that parses back to the same value.
pub fn write_fixation_sequences(sequences: &[FixationSequence], path: &Path) -> Result<()> {
    let mut out = String::from(FIXATION_FILE_HEADER);
    out.push('\n');
    for seq in sequences {
        if seq.is_empty() {
            return Err(Error::invalid(
                "fixation file",
                format!(
                    "sequence for participant '{}' image '{}' is empty and cannot be written",
                    seq.participant_id, seq.image_id
                ),
            ));
        }
        for f in &seq.fixations {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                seq.image_id,
                seq.participant_id,
                seq.image_width,
                seq.image_height,
                f.onset_ms,
                f.duration_ms,
                f.x,
                f.y,
                f.pupil
            ));
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_fixation_sequences(path: &Path) -> Result<Vec<FixationSequence>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == FIXATION_FILE_HEADER => {}
        _ => {
            return Err(Error::parse(
                path,
                1,
                format!("expected header '{FIXATION_FILE_HEADER}'"),
            ))
        }
    }
    let mut sequences: Vec<FixationSequence> = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 9 fields, found {}", fields.len()),
            ));
        }
        let num = |i: usize| -> Result<f64> {
            fields[i]
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("'{}' is not a number", fields[i])))
        };
        let dim = |i: usize| -> Result<u32> {
            fields[i]
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("'{}' is not a size", fields[i])))
        };
        let image_id = fields[0].trim().to_string();
        let participant_id = fields[1].trim().to_string();
        let fixation = Fixation {
            onset_ms: num(4)?,
            duration_ms: num(5)?,
            x: num(6)?,
            y: num(7)?,
            pupil: num(8)?,
        };
        let same_tail = sequences
            .last()
            .map(|s| s.image_id == image_id && s.participant_id == participant_id)
            .unwrap_or(false);
        if same_tail {
            sequences.last_mut().unwrap().fixations.push(fixation);
        } else {
            sequences.push(FixationSequence {
                image_id,
                participant_id,
                image_width: dim(2)?,
                image_height: dim(3)?,
                fixations: vec![fixation],
            });
        }
    }
    Ok(sequences)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::RawGazeSample;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn stream_from(points: &[(f64, f64)], step_ms: f64) -> GazeStream {
        let samples = points
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| RawGazeSample {
                timestamp_ms: i as f64 * step_ms,
                left_x: x,
                left_y: y,
                right_x: x,
                right_y: y,
                left_pupil: 3.0,
                right_pupil: 3.0,
                left_valid: 0,
                right_valid: 0,
            })
            .collect();
        GazeStream {
            image_id: "img".into(),
            participant_id: "p0".into(),
            image_width: 1000,
            image_height: 1000,
            samples,
        }
    }

    #[test]
    fn steady_gaze_is_one_fixation_with_normalized_centroid() {
        let stream = stream_from(&[(100.0, 100.0); 7], 5.0);
        let seq = detect_fixations(&stream, &FilterParams::default()).unwrap();
        assert_eq!(seq.len(), 1);
        let f = seq.fixations[0];
        assert_eq!((f.x, f.y), (0.1, 0.1));
        assert_eq!(f.onset_ms, 0.0);
        assert_eq!(f.duration_ms, 30.0);
        assert_eq!(f.pupil, 3.0);
    }

    #[test]
    fn saccade_splits_into_two_fixations() {
        let mut pts = vec![(100.0, 100.0); 6];
        pts.extend([(400.0, 300.0); 6]);
        let stream = stream_from(&pts, 5.0);
        let seq = detect_fixations(&stream, &FilterParams::default()).unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!((seq.fixations[0].x, seq.fixations[0].y), (0.1, 0.1));
        assert_eq!((seq.fixations[1].x, seq.fixations[1].y), (0.4, 0.3));
        assert!(seq.fixations[0].onset_ms < seq.fixations[1].onset_ms);
    }

    #[test]
    fn jitter_within_dispersion_threshold_stays_one_fixation() {
        // x spans 16, y spans 8: dispersion 24 <= 25.
        let pts = [
            (100.0, 100.0),
            (108.0, 104.0),
            (116.0, 108.0),
            (100.0, 100.0),
            (116.0, 108.0),
        ];
        let stream = stream_from(&pts, 5.0);
        let seq = detect_fixations(&stream, &FilterParams::default()).unwrap();
        assert_eq!(seq.len(), 1);
        assert_relative_eq!(seq.fixations[0].x, 0.108, max_relative = 1e-12);
        assert_relative_eq!(seq.fixations[0].y, 0.104, max_relative = 1e-12);
    }

    #[test]
    fn dispersion_exactly_at_threshold_is_kept() {
        // x spans 25, y spans 0: dispersion == 25.
        let pts = [(100.0, 100.0), (125.0, 100.0), (112.0, 100.0), (100.0, 100.0)];
        let stream = stream_from(&pts, 5.0);
        let seq = detect_fixations(&stream, &FilterParams::default()).unwrap();
        assert_eq!(seq.len(), 1);
        let over = [(100.0, 100.0), (125.1, 100.0), (112.0, 100.0), (100.0, 100.0)];
        let stream = stream_from(&over, 5.0);
        let seq = detect_fixations(&stream, &FilterParams::default()).unwrap();
        assert_eq!(seq.len(), 0);
    }

    #[test]
    fn stream_shorter_than_duration_threshold_yields_nothing() {
        let stream = stream_from(&[(100.0, 100.0); 3], 3.0);
        let seq = detect_fixations(&stream, &FilterParams::default()).unwrap();
        assert!(seq.is_empty());
    }

    #[test]
    fn noisy_prefix_slides_until_a_stable_window() {
        let mut pts = vec![(0.0, 0.0), (500.0, 0.0), (0.0, 500.0)];
        pts.extend([(200.0, 200.0); 6]);
        let stream = stream_from(&pts, 5.0);
        let seq = detect_fixations(&stream, &FilterParams::default()).unwrap();
        assert_eq!(seq.len(), 1);
        assert_eq!((seq.fixations[0].x, seq.fixations[0].y), (0.2, 0.2));
        assert_eq!(seq.fixations[0].onset_ms, 15.0);
    }

    #[test]
    fn pupil_is_averaged_over_the_window() {
        let mut stream = stream_from(&[(100.0, 100.0); 4], 5.0);
        for (i, s) in stream.samples.iter_mut().enumerate() {
            s.left_pupil = 2.0 + i as f64;
            s.right_pupil = 4.0 + i as f64;
        }
        let seq = detect_fixations(&stream, &FilterParams::default()).unwrap();
        // per-sample pupil means are 3,4,5,6.
        assert_relative_eq!(seq.fixations[0].pupil, 4.5, max_relative = 1e-12);
    }

    #[test]
    fn wider_dispersion_windows_merge_clusters() {
        // three clusters 300 px apart with +-10 px jitter each.
        let mut pts = Vec::new();
        for cx in [100.0, 400.0, 700.0] {
            for i in 0..8 {
                pts.push((cx + if i % 2 == 0 { 10.0 } else { -10.0 }, 100.0));
            }
        }
        let stream = stream_from(&pts, 5.0);
        let counts: Vec<usize> = [10.0, 30.0, 120.0, 400.0, 2000.0]
            .iter()
            .map(|&w| {
                let params = FilterParams { dispersion: w, min_duration_ms: 10.0 };
                detect_fixations(&stream, &params).unwrap().len()
            })
            .collect();
        // jitter alone defeats w=10; once windows form, raising the
        // threshold only merges them.
        assert_eq!(counts, vec![0, 3, 3, 2, 1]);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let stream = stream_from(&[(0.0, 0.0); 5], 5.0);
        for params in [
            FilterParams { dispersion: 0.0, ..Default::default() },
            FilterParams { min_duration_ms: -1.0, ..Default::default() },
            FilterParams { dispersion: f64::NAN, ..Default::default() },
        ] {
            assert!(detect_fixations(&stream, &params).is_err());
        }
    }

    #[test]
    fn degree_conversion_matches_small_angle_geometry() {
        let geom = ScreenGeometry {
            screen_width_px: 1920.0,
            screen_width_mm: 520.0,
            viewing_distance_mm: 600.0,
        };
        // 1 degree subtends 2 * 600 * tan(0.5 deg) mm; at this distance the
        // small-angle value 600 mm * (pi / 180) is equal to within 0.01%.
        let small_angle_px = 600.0 * std::f64::consts::PI / 180.0 * (1920.0 / 520.0);
        assert_relative_eq!(geom.pixels_per_degree(), small_angle_px, max_relative = 1e-4);
        assert_relative_eq!(
            geom.degrees_to_pixels(2.0),
            2.0 * geom.pixels_per_degree(),
            max_relative = 1e-12
        );
    }

    fn demo_manifest() -> DatasetManifest {
        use crate::ingest::ManifestImage;
        DatasetManifest {
            classes: vec!["a".into()],
            participants: vec!["p0".into(), "p1".into()],
            images: vec![ManifestImage {
                id: "i0".into(),
                class: "a".into(),
                feature_row: 0,
            }],
        }
    }

    fn demo_sequence(participant: &str, image: &str) -> FixationSequence {
        FixationSequence {
            image_id: image.into(),
            participant_id: participant.into(),
            image_width: 800,
            image_height: 600,
            fixations: vec![Fixation {
                x: 0.1,
                y: 0.2,
                onset_ms: 0.0,
                duration_ms: 33.0,
                pupil: 3.5,
            }],
        }
    }

    #[test]
    fn dataset_rejects_unknown_ids_and_duplicates() {
        let mut ds = GazeDataset::new(demo_manifest()).unwrap();
        ds.insert(demo_sequence("p0", "i0")).unwrap();
        assert!(ds.insert(demo_sequence("p0", "i0")).is_err());
        assert!(ds.insert(demo_sequence("p9", "i0")).is_err());
        assert!(ds.insert(demo_sequence("p0", "i9")).is_err());
    }

    #[test]
    fn dataset_completeness_requires_every_pair() {
        let mut ds = GazeDataset::new(demo_manifest()).unwrap();
        ds.insert(demo_sequence("p0", "i0")).unwrap();
        assert!(ds.validate_complete().is_err());
        ds.insert(demo_sequence("p1", "i0")).unwrap();
        ds.validate_complete().unwrap();
        assert_eq!(ds.min_fixation_count(Some("p0")).unwrap(), 1);
        assert_eq!(ds.min_fixation_count(None).unwrap(), 1);
    }

    #[test]
    fn fixation_file_round_trips() {
        let dir = tempfile::TempDir::new().unwrap();
        let path = dir.path().join("fixations.csv");
        let mut a = demo_sequence("p0", "i0");
        a.fixations.push(Fixation {
            x: 0.1 + 0.2,
            y: 1.0 / 3.0,
            onset_ms: 40.0,
            duration_ms: 16.75,
            pupil: 2.0 / 7.0,
        });
        let b = demo_sequence("p1", "i0");
        write_fixation_sequences(&[a.clone(), b.clone()], &path).unwrap();
        let loaded = read_fixation_sequences(&path).unwrap();
        assert_eq!(loaded, vec![a, b]);
    }

    proptest! {
        #[test]
        fn detected_fixations_are_ordered_and_long_enough(
            xs in proptest::collection::vec(0.0f64..1000.0, 2..60),
            ys in proptest::collection::vec(0.0f64..1000.0, 2..60),
            dispersion in 1.0f64..300.0,
            min_duration_ms in 1.0f64..40.0,
        ) {
            let n = xs.len().min(ys.len());
            let pts: Vec<(f64, f64)> = xs.iter().zip(&ys).take(n).map(|(&x, &y)| (x, y)).collect();
            let stream = stream_from(&pts, 10.0 / 3.0);
            let params = FilterParams { dispersion, min_duration_ms };
            let seq = detect_fixations(&stream, &params).unwrap();
            prop_assert!(seq.len() <= n);
            let mut prev_end = f64::NEG_INFINITY;
            for f in &seq.fixations {
                prop_assert!(f.duration_ms >= min_duration_ms);
                prop_assert!(f.onset_ms > prev_end);
                prev_end = f.onset_ms + f.duration_ms;
                prop_assert!((0.0..=1.0).contains(&f.x));
                prop_assert!((0.0..=1.0).contains(&f.y));
            }
            let again = detect_fixations(&stream, &params).unwrap();
            prop_assert_eq!(seq, again);
        }

        #[test]
        fn centroid_stays_inside_the_point_bounding_box(
            pts in proptest::collection::vec((0.0f64..1000.0, 0.0f64..1000.0), 4..40),
        ) {
            let stream = stream_from(&pts, 10.0 / 3.0);
            let params = FilterParams { dispersion: 3000.0, min_duration_ms: 5.0 };
            let seq = detect_fixations(&stream, &params).unwrap();
            // dispersion threshold exceeds any spread, so all samples merge.
            prop_assert_eq!(seq.len(), 1);
            let f = seq.fixations[0];
            let (min_x, max_x) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
            prop_assert!(f.x * 1000.0 >= min_x - 1e-9 && f.x * 1000.0 <= max_x + 1e-9);
        }
    }
}
