//! Configuration, stage execution and run manifests.
//!
//! Stages run in a fixed order and exchange artifacts through files under
//! the configured run directory. All randomness derives from the master
//! seed hashed with the stage name.

mod config;
mod io;
mod protocol;
mod run;
mod stages;

pub use config::{
    BackendConfig, BackendKind, CostClassifierConfig, DataConfig, DictionaryConfig, FusionConfig, IdentityConfig,
    RunConfig, Stage,
};
pub use io::{read_json, write_json, write_text};
pub(crate) use io::{csv_writer, parse_f64};
pub use protocol::{build_pairs, Enrolled, GalleryProbe};
pub use run::{init_thread_pool, manifest_path, run_all, run_stage, sha256_file, RunManifest, StageRecord, MANIFEST_FILE};
pub use stages::{
    channel_name, ChannelVerification, CostTrainingReport, IdentificationReport, IdentificationScores, Layout,
    ScoreMeta, VerificationReport,
};
