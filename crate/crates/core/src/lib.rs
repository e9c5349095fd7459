//! Gaze embeddings as side information for zero-shot image classification.
//!
//! This library turns raw eye-tracking streams into class-discriminative
//! embeddings and uses them to train a bilinear compatibility model that
//! classifies images of classes never seen during training. The pipeline is:
//!
//! 1. [`ingest`] — parse gaze logs, dataset manifests, precomputed image
//!    feature matrices and auxiliary side-information files.
//! 2. [`fixation`] — reduce noisy gaze samples to fixations with a
//!    dispersion-threshold (I-DT) filter.
//! 3. [`features`] — turn fixation sequences into 6-dimensional gaze
//!    feature tuples `[x, y, d, a1, a2, R]`.
//! 4. [`embed`] — build per-class gaze embeddings (histogram, grid-averaged
//!    features, sequence-sampled features) and fuse multiple annotators.
//! 5. [`baselines`] — competitor class embeddings: random points, central
//!    point, saliency histograms, bubble tracks, bag-of-words, attributes,
//!    and attribute+gaze fusion.
//! 6. [`model`] — the bilinear compatibility model `F(x,y) = th(x)' W ph(y)`
//!    trained with a structured ranking hinge loss by SGD, late score
//!    fusion, and a linear one-vs-rest SVM probe.
//! 7. [`eval`] — disjoint-class zero-shot splits, per-class top-1 accuracy,
//!    hyperparameter cross-validation, the experiment runner, and the
//!    gaze-to-bubbles ablation ladder.
//! 8. [`synth`] — a deterministic synthetic data generator so the whole
//!    pipeline is testable without recorded gaze datasets.
//!
//! All randomized steps take explicit seeds; identical inputs and seeds
//! produce bit-identical outputs.

pub mod baselines;
pub mod embed;
mod error;
pub mod eval;
pub mod features;
pub mod fixation;
pub mod ingest;
pub mod model;
pub mod synth;

pub use error::{Error, Result};
