//! Reading a dataset root in the canonical on-disk layout.
//!
//! The layout is the one the synthetic generator writes and the ingest
//! readers expect:
//!
//! ```text
//! <root>/manifest.toml
//! <root>/features.txt
//! <root>/attributes.txt
//! <root>/bubbles.csv
//! <root>/corpus/<class>.txt
//! <root>/saliency/<image>.txt
//! <root>/gaze/<participant>/<image>.csv
//! ```
//!
//! Commands load only what they need; a dataset without, say, saliency
//! maps works for every command that never asks for them.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use gaze_zsl::baselines::{AttributeMatrix, BubbleTrack, CorpusDocument, SaliencyMap};
use gaze_zsl::fixation::{detect_fixations, FilterParams, GazeDataset};
use gaze_zsl::ingest::{self, DatasetManifest, FeatureMatrix, GazeStream};
use gaze_zsl::Result;

use crate::config::RunConfig;

pub struct DataRoot {
    root: PathBuf,
    dims: (u32, u32),
}

impl DataRoot {
    pub fn new(root: &Path, dims: (u32, u32)) -> DataRoot {
        DataRoot {
            root: root.to_path_buf(),
            dims,
        }
    }

    pub fn from_config(config: &RunConfig) -> DataRoot {
        DataRoot::new(&config.data_root, config.image_dims())
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.root.join("manifest.toml")
    }

    pub fn manifest(&self) -> Result<DatasetManifest> {
        ingest::load_manifest(&self.manifest_path())
    }

    pub fn features(&self, manifest: &DatasetManifest) -> Result<FeatureMatrix> {
        ingest::load_feature_matrix(&self.root.join("features.txt"), manifest)
    }

    pub fn attributes(&self, manifest: &DatasetManifest) -> Result<AttributeMatrix> {
        ingest::load_attribute_matrix(&self.root.join("attributes.txt"), manifest)
    }

    pub fn bubbles(&self) -> Result<Vec<BubbleTrack>> {
        ingest::load_bubble_tracks(&self.root.join("bubbles.csv"))
    }

    pub fn corpus(&self, manifest: &DatasetManifest) -> Result<Vec<CorpusDocument>> {
        ingest::load_corpus(&self.root.join("corpus"), manifest)
    }

    pub fn saliency(
        &self,
        manifest: &DatasetManifest,
    ) -> Result<HashMap<String, SaliencyMap>> {
        ingest::load_saliency_maps(&self.root.join("saliency"), manifest)
    }

    pub fn gaze_log_path(&self, participant: &str, image_id: &str) -> PathBuf {
        self.root
            .join("gaze")
            .join(participant)
            .join(format!("{image_id}.csv"))
    }

    /// All raw streams, participant-major in manifest order.
    pub fn streams(&self, manifest: &DatasetManifest) -> Result<Vec<GazeStream>> {
        let mut streams =
            Vec::with_capacity(manifest.participants.len() * manifest.images.len());
        for participant in &manifest.participants {
            for image in &manifest.images {
                let path = self.gaze_log_path(participant, &image.id);
                streams.push(ingest::parse_gaze_log(&path, self.dims)?);
            }
        }
        Ok(streams)
    }

    /// Runs the fixation filter over every stream and collects the result.
    pub fn gaze_dataset(
        &self,
        manifest: &DatasetManifest,
        params: &FilterParams,
    ) -> Result<GazeDataset> {
        let mut dataset = GazeDataset::new(manifest.clone())?;
        for stream in self.streams(manifest)? {
            dataset.insert(detect_fixations(&stream, params)?)?;
        }
        Ok(dataset)
    }

    /// Every file the canonical layout assigns to this manifest, relative
    /// to the root, in a fixed order. Used to digest a generated dataset.
    pub fn inventory(&self, manifest: &DatasetManifest) -> Vec<PathBuf> {
        let mut files = vec![
            PathBuf::from("manifest.toml"),
            PathBuf::from("features.txt"),
            PathBuf::from("attributes.txt"),
            PathBuf::from("bubbles.csv"),
        ];
        for class in &manifest.classes {
            files.push(PathBuf::from("corpus").join(format!("{class}.txt")));
        }
        for image in &manifest.images {
            files.push(PathBuf::from("saliency").join(format!("{}.txt", image.id)));
        }
        for participant in &manifest.participants {
            for image in &manifest.images {
                files.push(
                    PathBuf::from("gaze")
                        .join(participant)
                        .join(format!("{}.csv", image.id)),
                );
            }
        }
        files
    }

    /// Class index (position in `manifest.classes`) of each stream's image.
    pub fn class_indices(
        manifest: &DatasetManifest,
        streams: &[GazeStream],
    ) -> Result<Vec<usize>> {
        let class_of: HashMap<&str, &str> = manifest
            .images
            .iter()
            .map(|img| (img.id.as_str(), img.class.as_str()))
            .collect();
        streams
            .iter()
            .map(|s| {
                let class = class_of.get(s.image_id.as_str()).ok_or_else(|| {
                    gaze_zsl::Error::UnknownLabel(s.image_id.clone())
                })?;
                manifest
                    .classes
                    .iter()
                    .position(|c| c == class)
                    .ok_or_else(|| gaze_zsl::Error::UnknownLabel((*class).to_string()))
            })
            .collect()
    }
}
