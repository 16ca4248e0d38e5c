//! Seed-corpus ingestion and the on-disk artifact formats: utterance and
//! session manifests (JSON-lines), RTTM, and WAV.

mod loader;
mod manifest;
mod rttm;
mod split;
mod wav;

pub use loader::{AudioLoader, MemoryLoader, WavLoader};
pub use manifest::{
    check_sample_rate, group_by_speaker, load_session_manifests, load_utterance_manifest,
    load_utterances, parse_session_manifests, parse_utterance_manifest, write_session_manifest_line,
    write_session_manifests, write_utterance_manifest, AudioRef, SessionManifest, SourceUtterance,
    SpeakerPool, Supervision, Word, TIME_TOLERANCE,
};
pub use rttm::{read_rttm, parse_rttm, write_rttm, RttmSegment, RttmSession};
pub use split::{split_at_pauses, split_pools, DEFAULT_MIN_PAUSE};
pub use wav::{read_wav, write_wav, WavFormat};
