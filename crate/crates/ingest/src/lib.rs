//! File formats, corpus loading, deterministic scenario simulation and
//! atomic result bundles.

pub mod error;
pub mod format;
pub mod scenario;
pub mod session;
pub mod simulate;
pub mod store;

pub use error::{IngestError, Result};
pub use scenario::ScenarioSpec;
pub use session::{
    load_corpus_index, load_session, render_session_files, ChannelDescriptor, ChannelKind, CorpusIndex,
    CorpusManifest, CorpusTables, LoadedSession, RoomLayout, SessionManifest,
};
pub use simulate::{
    read_corpus_truth, read_session_truth, render_corpus, simulate_corpus, CorpusTruth, SessionTruth,
    SimulatedCorpus, TruthInterval, TruthScr,
};
pub use store::{read_bundle, store_results, BundleEntry, BundleManifest};
