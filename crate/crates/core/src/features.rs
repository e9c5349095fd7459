//! Per-fixation feature vectors.
//!
//! Each fixation turns into a row of [`FEATURE_DIM`] values: position in
//! the unit square, duration in milliseconds, the angle from the previous
//! fixation, the angle to the next fixation, and the pupil diameter.
//! Angles use image coordinates (y grows downward) and are 0 at the
//! sequence boundaries.

use ndarray::Array2;

use crate::fixation::FixationSequence;
use crate::{Error, Result};

pub const FEATURE_DIM: usize = 6;
pub const FEATURE_NAMES: [&str; FEATURE_DIM] =
    ["x", "y", "duration", "angle_in", "angle_out", "pupil"];

/// Column indices into a feature row.
pub const COL_X: usize = 0;
pub const COL_Y: usize = 1;
pub const COL_DURATION: usize = 2;
pub const COL_ANGLE_IN: usize = 3;
pub const COL_ANGLE_OUT: usize = 4;
pub const COL_PUPIL: usize = 5;

/// Feature rows for one (image, participant) sequence, one row per fixation
/// in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct GazeFeatures {
    pub image_id: String,
    pub participant_id: String,
    pub rows: Array2<f64>,
}

impl GazeFeatures {
    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }
}

/// Computes feature rows for a fixation sequence. An empty sequence yields
/// zero rows.
///
/// The angle into fixation `i` equals the angle out of fixation `i-1`
/// exactly: both come from the same `atan2` over the same displacement.
pub fn extract_features(seq: &FixationSequence) -> GazeFeatures {
    let n = seq.len();
    let mut rows = Array2::zeros((n, FEATURE_DIM));
    for (i, f) in seq.fixations.iter().enumerate() {
        rows[[i, COL_X]] = f.x;
        rows[[i, COL_Y]] = f.y;
        rows[[i, COL_DURATION]] = f.duration_ms;
        rows[[i, COL_PUPIL]] = f.pupil;
    }
    for i in 0..n.saturating_sub(1) {
        let (a, b) = (&seq.fixations[i], &seq.fixations[i + 1]);
        let angle = (b.y - a.y).atan2(b.x - a.x);
        rows[[i, COL_ANGLE_OUT]] = angle;
        rows[[i + 1, COL_ANGLE_IN]] = angle;
    }

    GazeFeatures {
        image_id: seq.image_id.clone(),
        participant_id: seq.participant_id.clone(),
        rows,
    }
}

/// Ordered subset of feature columns. The location columns x and y are
/// always part of a mask; the other four are optional add-ons.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureMask(Vec<usize>);

impl FeatureMask {
    pub fn new(columns: Vec<usize>) -> Result<Self> {
        if !(columns.contains(&COL_X) && columns.contains(&COL_Y)) {
            return Err(Error::invalid(
                "feature mask",
                "mask must include the x and y location columns",
            ));
        }
        for w in columns.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::invalid(
                    "feature mask",
                    "columns must be strictly increasing",
                ));
            }
        }
        if *columns.last().unwrap() >= FEATURE_DIM {
            return Err(Error::invalid(
                "feature mask",
                format!("column index out of range 0..{FEATURE_DIM}"),
            ));
        }
        Ok(FeatureMask(columns))
    }

    /// Parses the flag syntax `xy[,d][,ang][,pupil]`. `ang` selects both
    /// angle columns; `ang1`/`ang2` select them individually. `xy` is
    /// mandatory.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut columns = Vec::new();
        for token in spec.split(',') {
            match token.trim() {
                "xy" => columns.extend([COL_X, COL_Y]),
                "d" | "duration" => columns.push(COL_DURATION),
                "ang" => columns.extend([COL_ANGLE_IN, COL_ANGLE_OUT]),
                "ang1" | "angle_in" => columns.push(COL_ANGLE_IN),
                "ang2" | "angle_out" => columns.push(COL_ANGLE_OUT),
                "pupil" | "r" => columns.push(COL_PUPIL),
                other => {
                    return Err(Error::invalid(
                        "feature mask",
                        format!("unknown feature token '{other}', expected xy, d, ang, ang1, ang2 or pupil"),
                    ))
                }
            }
        }
        columns.sort_unstable();
        columns.dedup();
        FeatureMask::new(columns)
    }

    pub fn all() -> Self {
        FeatureMask((0..FEATURE_DIM).collect())
    }

    /// Location only.
    pub fn xy() -> Self {
        FeatureMask(vec![COL_X, COL_Y])
    }

    pub fn columns(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Keeps the masked columns of each feature row, canonical order.
    pub fn project(&self, rows: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((rows.nrows(), self.0.len()));
        for (j, &col) in self.0.iter().enumerate() {
            out.column_mut(j).assign(&rows.column(col));
        }
        out
    }

    /// Canonical flag form of the mask.
    pub fn spec(&self) -> String {
        let mut parts = vec!["xy".to_string()];
        if self.0.contains(&COL_DURATION) {
            parts.push("d".into());
        }
        match (self.0.contains(&COL_ANGLE_IN), self.0.contains(&COL_ANGLE_OUT)) {
            (true, true) => parts.push("ang".into()),
            (true, false) => parts.push("ang1".into()),
            (false, true) => parts.push("ang2".into()),
            (false, false) => {}
        }
        if self.0.contains(&COL_PUPIL) {
            parts.push("pupil".into());
        }
        parts.join(",")
    }
}
