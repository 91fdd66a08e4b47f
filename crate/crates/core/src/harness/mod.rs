//! Dataset ingestion, backend clients, the experiment runner and reports.

mod backend;
mod config;
mod dataset;
mod experiment;
mod report;
mod synth;

pub use backend::{
    embed, enhance, mock_embedding, parse_embedding, BackendConfig, EmbedBackend, EnhanceBackend,
    MOCK_DIM, MOCK_SIDE,
};
pub use config::{
    ExperimentConfig, ParamsMode, Protocol, Settings, CONFIG_KEYS, DEFAULT_THRESHOLD, SEED_ENV,
};
pub use dataset::{ingest_dataset, DatasetManifest, IngestReport, ManifestEntry};
pub use experiment::{
    condition_key, load_manifest, plan_units, planned_trials, read_trials, run_experiment,
    RunOutcome, TrialUnit, GALLERY_FILE, IMAGES_DIR, TRIALS_FILE,
};
pub use report::{
    build_report, read_scores, write_report, ConditionSummary, Improvement, Report, ReportOptions,
    REPORT_FILES,
};
pub use synth::{synth_face, write_fixture, FACE_SIDE, FIXTURE_SEED};
