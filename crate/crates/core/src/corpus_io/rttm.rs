use std::io::Write;
use std::path::Path;

use super::manifest::SessionManifest;
use crate::error::{Error, Result};

/// Writes one `SPEAKER` line per supervision, ordered by onset then speaker.
pub fn write_rttm<W: Write>(manifest: &SessionManifest, mut out: W) -> Result<()> {
    let mut rows: Vec<(f64, f64, &str)> = manifest
        .supervisions
        .iter()
        .map(|s| (s.onset, s.duration, s.speaker.as_str()))
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.2.cmp(b.2)));
    for (onset, duration, speaker) in rows {
        writeln!(
            out,
            "SPEAKER {} 1 {onset:.3} {duration:.3} <NA> <NA> {speaker} <NA> <NA>",
            manifest.session_id
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RttmSegment {
    pub speaker: String,
    pub onset: f64,
    pub duration: f64,
}

/// Segments of one recording (the RTTM file id), in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct RttmSession {
    pub session_id: String,
    pub segments: Vec<RttmSegment>,
}

/// Parses `SPEAKER` lines; other record types and `;;` comments are skipped.
/// Sessions are returned in order of first appearance.
pub fn parse_rttm(text: &str, origin: &Path) -> Result<Vec<RttmSession>> {
    let mut sessions: Vec<RttmSession> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with(";;") {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields[0] != "SPEAKER" {
            continue;
        }
        if fields.len() < 8 {
            return Err(Error::parse(origin, line_no, "SPEAKER line needs at least 8 fields"));
        }
        let number = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v >= 0.0)
                .ok_or_else(|| Error::parse(origin, line_no, format!("bad {what} '{s}'")))
        };
        let onset = number(fields[3], "onset")?;
        let duration = number(fields[4], "duration")?;
        let segment = RttmSegment {
            speaker: fields[7].to_string(),
            onset,
            duration,
        };
        match sessions.iter_mut().find(|s| s.session_id == fields[1]) {
            Some(s) => s.segments.push(segment),
            None => sessions.push(RttmSession {
                session_id: fields[1].to_string(),
                segments: vec![segment],
            }),
        }
    }
    Ok(sessions)
}

pub fn read_rttm(path: &Path) -> Result<Vec<RttmSession>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_rttm(&text, path)
}
