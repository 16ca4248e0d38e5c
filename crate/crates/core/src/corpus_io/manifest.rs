use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::turntaking::TransitionType;

/// Slack allowed when comparing annotation times against durations (1 ms).
pub const TIME_TOLERANCE: f64 = 1e-3;

/// A span of an audio file, in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AudioRef {
    pub path: PathBuf,
    pub offset: f64,
    pub duration: f64,
}

/// One aligned word; times are relative to the utterance start.
///
/// Serialized as a `[token, start, end]` triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "(String, f64, f64)", into = "(String, f64, f64)")]
pub struct Word {
    pub token: String,
    pub start: f64,
    pub end: f64,
}

impl Word {
    pub fn new(token: impl Into<String>, start: f64, end: f64) -> Self {
        Word {
            token: token.into(),
            start,
            end,
        }
    }
}

impl From<(String, f64, f64)> for Word {
    fn from((token, start, end): (String, f64, f64)) -> Self {
        Word { token, start, end }
    }
}

impl From<Word> for (String, f64, f64) {
    fn from(w: Word) -> Self {
        (w.token, w.start, w.end)
    }
}

/// A single-speaker seed utterance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceUtterance {
    pub id: String,
    #[serde(rename = "speaker")]
    pub speaker_id: String,
    pub audio: AudioRef,
    pub sample_rate: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub words: Option<Vec<Word>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl SourceUtterance {
    pub fn duration(&self) -> f64 {
        self.audio.duration
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |message: String| Error::InvalidUtterance {
            id: self.id.clone(),
            message,
        };
        let duration = self.audio.duration;
        if !(duration.is_finite() && duration > 0.0) {
            return Err(fail(format!("duration must be > 0, got {duration}")));
        }
        if !(self.audio.offset.is_finite() && self.audio.offset >= 0.0) {
            return Err(fail(format!("offset must be >= 0, got {}", self.audio.offset)));
        }
        if self.sample_rate == 0 {
            return Err(fail("sample_rate must be positive".into()));
        }
        if let Some(words) = &self.words {
            let mut prev_end = 0.0f64;
            for (i, w) in words.iter().enumerate() {
                if !(w.start.is_finite() && w.end.is_finite()) {
                    return Err(fail(format!("word {i} has non-finite times")));
                }
                if w.end < w.start {
                    return Err(fail(format!(
                        "word {i} ({}) ends before it starts: [{}, {}]",
                        w.token, w.start, w.end
                    )));
                }
                if w.start < 0.0 {
                    return Err(fail(format!("word {i} starts before 0")));
                }
                if i > 0 && w.start < prev_end {
                    return Err(fail(format!("word {i} ({}) overlaps the previous word", w.token)));
                }
                prev_end = w.end;
            }
            if prev_end > duration + TIME_TOLERANCE {
                return Err(fail(format!(
                    "last word ends at {prev_end} past utterance duration {duration}"
                )));
            }
        }
        Ok(())
    }
}

/// All seed utterances of one speaker.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerPool {
    pub speaker_id: String,
    pub utterances: Vec<SourceUtterance>,
}

/// One annotated segment of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Supervision {
    pub speaker: String,
    pub onset: f64,
    pub duration: f64,
    pub source_id: String,
    /// `None` for the opening utterance of a session.
    pub transition: Option<TransitionType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl Supervision {
    pub fn end(&self) -> f64 {
        self.onset + self.duration
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionManifest {
    pub session_id: String,
    /// Unset until the session has been rendered.
    pub audio_path: Option<PathBuf>,
    pub duration: f64,
    pub sample_rate: u32,
    pub supervisions: Vec<Supervision>,
}

impl SessionManifest {
    pub fn validate(&self) -> Result<()> {
        let fail = |message: String| Error::InvalidSession {
            session_id: self.session_id.clone(),
            message,
        };
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return Err(fail(format!("invalid duration {}", self.duration)));
        }
        for (i, s) in self.supervisions.iter().enumerate() {
            if !(s.onset.is_finite() && s.onset >= 0.0) {
                return Err(fail(format!("supervision {i} has onset {}", s.onset)));
            }
            if !(s.duration.is_finite() && s.duration > 0.0) {
                return Err(fail(format!("supervision {i} has duration {}", s.duration)));
            }
            if s.end() > self.duration + TIME_TOLERANCE {
                return Err(fail(format!(
                    "supervision {i} ends at {} past session duration {}",
                    s.end(),
                    self.duration
                )));
            }
        }
        let mut by_speaker: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
        for s in &self.supervisions {
            by_speaker
                .entry(s.speaker.as_str())
                .or_default()
                .push((s.onset, s.end()));
        }
        for (speaker, mut spans) in by_speaker {
            spans.sort_by(|a, b| a.0.total_cmp(&b.0));
            for pair in spans.windows(2) {
                if pair[1].0 < pair[0].1 {
                    return Err(fail(format!(
                        "speaker {speaker} overlaps themselves at [{}, {}] and [{}, {}]",
                        pair[0].0, pair[0].1, pair[1].0, pair[1].1
                    )));
                }
            }
        }
        Ok(())
    }
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push((i + 1, line));
    }
    Ok(out)
}

/// Parses utterance records from JSON-lines text. `origin` is only used in
/// error messages.
pub fn parse_utterance_manifest(text: &str, origin: &Path) -> Result<Vec<SourceUtterance>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let utt: SourceUtterance =
            serde_json::from_str(line).map_err(|e| Error::parse(origin, i + 1, e.to_string()))?;
        utt.validate()?;
        out.push(utt);
    }
    Ok(out)
}

/// Reads and validates every utterance in a JSON-lines manifest, in file order.
pub fn load_utterances(path: &Path) -> Result<Vec<SourceUtterance>> {
    let mut out = Vec::new();
    for (line_no, line) in read_lines(path)? {
        let utt: SourceUtterance =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, line_no, e.to_string()))?;
        utt.validate()?;
        out.push(utt);
    }
    Ok(out)
}

/// Loads an utterance manifest and groups it into per-speaker pools, ordered
/// by speaker id. Utterance order within a pool follows the file.
pub fn load_utterance_manifest(path: &Path) -> Result<Vec<SpeakerPool>> {
    Ok(group_by_speaker(load_utterances(path)?))
}

pub fn group_by_speaker(utterances: Vec<SourceUtterance>) -> Vec<SpeakerPool> {
    let mut groups: BTreeMap<String, Vec<SourceUtterance>> = BTreeMap::new();
    for utt in utterances {
        groups.entry(utt.speaker_id.clone()).or_default().push(utt);
    }
    groups
        .into_iter()
        .map(|(speaker_id, utterances)| SpeakerPool {
            speaker_id,
            utterances,
        })
        .collect()
}

/// All seed audio must share one rate; resampling is not supported.
pub fn check_sample_rate(pools: &[SpeakerPool], sample_rate: u32) -> Result<()> {
    for utt in pools.iter().flat_map(|p| &p.utterances) {
        if utt.sample_rate != sample_rate {
            return Err(Error::SampleRateMismatch {
                expected: sample_rate,
                actual: utt.sample_rate,
            });
        }
    }
    Ok(())
}

pub fn write_utterance_manifest<W: Write>(utterances: &[SourceUtterance], mut out: W) -> Result<()> {
    for utt in utterances {
        serde_json::to_writer(&mut out, utt).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn parse_session_manifests(text: &str, origin: &Path) -> Result<Vec<SessionManifest>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let session: SessionManifest =
            serde_json::from_str(line).map_err(|e| Error::parse(origin, i + 1, e.to_string()))?;
        session.validate()?;
        out.push(session);
    }
    Ok(out)
}

pub fn load_session_manifests(path: &Path) -> Result<Vec<SessionManifest>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_session_manifests(&text, path)
}

pub fn write_session_manifest_line<W: Write>(session: &SessionManifest, mut out: W) -> Result<()> {
    serde_json::to_writer(&mut out, session).map_err(std::io::Error::from)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_session_manifests(sessions: &[SessionManifest], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for s in sessions {
        write_session_manifest_line(s, &mut out)?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
