//! Declarative run configuration.
//!
//! Every command reads one TOML document describing the dataset location,
//! the fixation filter, the embedding recipe, the evaluation protocol, and
//! the generator parameters. All fields have defaults, so an absent file is
//! a valid (default) run; unknown keys are rejected so a typo cannot
//! silently redirect an experiment. Command-line flags override file
//! values, and the run directory snapshot records the merged result.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use gaze_zsl::embed::{EncoderKind, Fusion, GazeEmbedConfig, Grid};
use gaze_zsl::eval::{AblationMode, HyperGrid};
use gaze_zsl::features::FeatureMask;
use gaze_zsl::fixation::FilterParams;
use gaze_zsl::model::TrainConfig;
use gaze_zsl::synth::SynthSpec;

/// File read when no `--config` flag is given.
pub const DEFAULT_CONFIG_FILE: &str = "run.toml";

/// Environment variable consulted for the run root when no flag is given.
pub const RUN_ROOT_ENV: &str = "GAZE_ZSL_RUN_ROOT";

/// Whole-run configuration, one section per pipeline stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Dataset root in the canonical layout (`manifest.toml`,
    /// `features.txt`, `gaze/<participant>/<image>.csv`, ...).
    pub data_root: PathBuf,
    /// Run directories are created under this root.
    pub run_root: PathBuf,
    /// Stimulus size raw gaze coordinates are clamped against.
    pub image_width: u32,
    pub image_height: u32,
    pub filter: FilterParams,
    pub embedding: EmbeddingConfig,
    pub cv: HyperGrid,
    pub train: TrainConfig,
    pub splits: SplitConfig,
    pub sweep: SweepConfig,
    pub synth: SynthSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data_root: PathBuf::from("data"),
            run_root: PathBuf::from("runs"),
            image_width: 1000,
            image_height: 1000,
            filter: FilterParams::default(),
            embedding: EmbeddingConfig::default(),
            cv: HyperGrid::default(),
            train: TrainConfig::default(),
            splits: SplitConfig::default(),
            sweep: SweepConfig::default(),
            synth: SynthSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn image_dims(&self) -> (u32, u32) {
        (self.image_width, self.image_height)
    }
}

/// Which side information produces the class embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingSource {
    Gaze,
    Attributes,
    Bow,
    Random,
    Central,
    Saliency,
    Bubbles,
    /// Gaze and attribute class vectors concatenated.
    #[serde(rename = "gaze+attributes")]
    Combined,
}

impl FromStr for EmbeddingSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "gaze" => EmbeddingSource::Gaze,
            "attributes" => EmbeddingSource::Attributes,
            "bow" => EmbeddingSource::Bow,
            "random" => EmbeddingSource::Random,
            "central" => EmbeddingSource::Central,
            "saliency" => EmbeddingSource::Saliency,
            "bubbles" => EmbeddingSource::Bubbles,
            "gaze+attributes" => EmbeddingSource::Combined,
            other => {
                return Err(format!(
                    "unknown source '{other}', expected one of gaze, attributes, bow, \
                     random, central, saliency, bubbles, gaze+attributes"
                ))
            }
        })
    }
}

/// Embedding recipe: the source plus encoder settings for the gaze-shaped
/// sources (gaze itself and the random and central controls).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbeddingConfig {
    pub source: EmbeddingSource,
    pub encoder: EncoderKind,
    /// Spatial grid for the histogram and grid encoders and for saliency.
    pub rows: usize,
    pub cols: usize,
    /// Feature-column mask, e.g. "xy,d,ang,pupil".
    pub mask: String,
    /// Sequence-encoder sample count; 0 picks the largest count every
    /// sequence supports.
    pub k: usize,
    pub fusion: Fusion,
    /// Points per synthetic sequence (random control) and sampled bubbles
    /// per image (bubble baseline).
    pub count: usize,
    /// Seed for the random-points control.
    pub seed: u64,
    /// Bag-of-words vocabulary size.
    pub vocab: usize,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            source: EmbeddingSource::Gaze,
            encoder: EncoderKind::Sequence,
            rows: 4,
            cols: 4,
            mask: "xy,d,ang,pupil".into(),
            k: 0,
            fusion: Fusion::Average,
            count: 12,
            seed: 0,
            vocab: 1000,
        }
    }
}

impl EmbeddingConfig {
    pub fn grid(&self) -> Grid {
        Grid {
            rows: self.rows,
            cols: self.cols,
        }
    }

    /// Encoder settings in the shape the embedding builders take.
    pub fn gaze_config(&self) -> gaze_zsl::Result<GazeEmbedConfig> {
        Ok(GazeEmbedConfig {
            kind: self.encoder,
            grid: self.grid(),
            mask: FeatureMask::parse(&self.mask)?,
            k: if self.k == 0 { None } else { Some(self.k) },
            fusion: self.fusion,
        })
    }
}

/// Zero-shot split protocol: how many disjoint-class splits to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    pub count: usize,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { count: 5, seed: 0 }
    }
}

/// Fixation-filter sweep grid. Each range is an inclusive "lo..hi" pair
/// expanded to `points` evenly spaced values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Dispersion-threshold range, in the gaze coordinate unit (pixels).
    pub dispersions: String,
    /// Minimum fixation duration range, in milliseconds.
    pub durations: String,
    pub points: usize,
    /// Fixations sampled per stream for the probe classifier.
    pub k: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            dispersions: "5..50".into(),
            durations: "1..100".into(),
            points: 6,
            k: 3,
        }
    }
}

impl SweepConfig {
    /// Expands both ranges, reporting the offending field on bad syntax.
    pub fn grids(&self) -> Result<(Vec<f64>, Vec<f64>), String> {
        let expand = |field: &str, spec: &str| -> Result<Vec<f64>, String> {
            let (lo, hi) = parse_range(spec).map_err(|e| format!("sweep.{field}: {e}"))?;
            Ok(linspace(lo, hi, self.points))
        };
        if self.points == 0 {
            return Err("sweep.points: must be at least 1".into());
        }
        Ok((
            expand("dispersions", &self.dispersions)?,
            expand("durations", &self.durations)?,
        ))
    }
}

/// Parses an inclusive "lo..hi" range with finite endpoints, lo <= hi.
pub fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("'{s}' is not a lo..hi range"))?;
    let num = |t: &str| {
        let t = t.trim();
        t.parse::<f64>()
            .map_err(|_| format!("'{t}' is not a number"))
    };
    let (lo, hi) = (num(lo)?, num(hi)?);
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(format!("range '{s}' must have finite lo <= hi"));
    }
    Ok((lo, hi))
}

/// `n` evenly spaced values covering [lo, hi] inclusive; one value lands
/// on the midpoint.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![(lo + hi) / 2.0],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Parses a fusion name for the `--fusion` flag.
pub fn parse_fusion(s: &str) -> Result<Fusion, String> {
    match s {
        "average" | "avg" => Ok(Fusion::Average),
        "early" => Ok(Fusion::Early),
        "late" => Ok(Fusion::Late),
        other => Err(format!(
            "unknown fusion '{other}', expected average, early, or late"
        )),
    }
}

/// Parses an encoder name for the `--encoder` flag.
pub fn parse_encoder(s: &str) -> Result<EncoderKind, String> {
    EncoderKind::from_str(s).map_err(|e| e.to_string())
}

/// Parses an ablation mode name for the `--mode` flag.
pub fn parse_mode(s: &str) -> Result<AblationMode, String> {
    match s {
        "same_images" => Ok(AblationMode::SameImages),
        "same_locations_concat" => Ok(AblationMode::SameLocationsConcat),
        "same_locations_avg" => Ok(AblationMode::SameLocationsAvg),
        "same_locations_rand" => Ok(AblationMode::SameLocationsRand),
        other => Err(format!(
            "unknown mode '{other}', expected same_images, same_locations_concat, \
             same_locations_avg, or same_locations_rand"
        )),
    }
}

/// Reads `explicit` if given, the default file if present, or falls back
/// to the built-in defaults. A named but unreadable or invalid file is an
/// error; the rendered message points at the offending key.
pub fn load(explicit: Option<&Path>) -> Result<RunConfig, String> {
    let fallback = Path::new(DEFAULT_CONFIG_FILE);
    let path = match explicit {
        Some(p) => p,
        None if fallback.exists() => fallback,
        None => return Ok(RunConfig::default()),
    };
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("{}:\n{e}", path.display()))
}
