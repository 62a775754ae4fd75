//! Incident-ticket labeling: cleaning, dataset construction, prompt-prefix
//! templates, bag-of-words baselines, an MLP head over a pluggable encoder,
//! pool-based active learning, evaluation, and an annotation service.

pub mod builder;
pub mod cli;
pub mod classifiers;
pub mod corpus;
pub mod features;
pub mod preprocess;
pub mod synthgen;
pub mod active;
pub mod evalkit;
pub mod service;
