//! Descriptive statistics of annotated sessions: speech, silence and overlap
//! time from an exact interval sweep, plus the transition histogram.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::corpus_io::SessionManifest;
use crate::error::{Error, Result};
use crate::turntaking::{classify_transitions, TimedTurn, TransitionEvent, TransitionType};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub sessions: usize,
    pub total_duration: f64,
    /// Time with at least one active speaker.
    pub total_speech: f64,
    pub total_silence: f64,
    /// Time with at least two active speakers.
    pub overlap_time: f64,
    /// `overlap_time / total_speech`.
    pub overlap_ratio: f64,
    /// Counts in (TH, TS, IR, BC) order.
    pub transition_histogram: [usize; 4],
    pub mean_gap_th: Option<f64>,
    pub mean_gap_ts: Option<f64>,
    pub mean_overlap_ratio_ir: Option<f64>,
    pub speakers: usize,
}

/// Mergeable partial sums behind a [`StatsReport`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StatsAccumulator {
    sessions: usize,
    total_duration: f64,
    speech: f64,
    overlap: f64,
    histogram: [usize; 4],
    gap_th: (f64, usize),
    gap_ts: (f64, usize),
    ratio_ir: (f64, usize),
    speakers: BTreeSet<String>,
}

fn add(acc: &mut (f64, usize), v: f64) {
    acc.0 += v;
    acc.1 += 1;
}

fn mean((sum, n): (f64, usize)) -> Option<f64> {
    (n > 0).then(|| sum / n as f64)
}

impl StatsAccumulator {
    pub fn merge(mut self, other: StatsAccumulator) -> StatsAccumulator {
        self.sessions += other.sessions;
        self.total_duration += other.total_duration;
        self.speech += other.speech;
        self.overlap += other.overlap;
        for (a, b) in self.histogram.iter_mut().zip(other.histogram) {
            *a += b;
        }
        for (a, b) in [
            (&mut self.gap_th, other.gap_th),
            (&mut self.gap_ts, other.gap_ts),
            (&mut self.ratio_ir, other.ratio_ir),
        ] {
            a.0 += b.0;
            a.1 += b.1;
        }
        self.speakers.extend(other.speakers);
        self
    }

    pub fn report(&self) -> StatsReport {
        StatsReport {
            sessions: self.sessions,
            total_duration: self.total_duration,
            total_speech: self.speech,
            total_silence: (self.total_duration - self.speech).max(0.0),
            overlap_time: self.overlap,
            overlap_ratio: if self.speech > 0.0 {
                self.overlap / self.speech
            } else {
                0.0
            },
            transition_histogram: self.histogram,
            mean_gap_th: mean(self.gap_th),
            mean_gap_ts: mean(self.gap_ts),
            mean_overlap_ratio_ir: mean(self.ratio_ir),
            speakers: self.speakers.len(),
        }
    }
}

/// Union-of-activity and overlap time of a set of intervals, by sweeping the
/// sorted boundaries. Intervals that merely touch do not overlap.
pub fn activity_times(intervals: &[(f64, f64)]) -> (f64, f64) {
    let mut boundaries: Vec<(f64, i32)> = intervals
        .iter()
        .flat_map(|&(s, e)| [(s, 1), (e, -1)])
        .collect();
    // ends before starts at equal times
    boundaries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let (mut speech, mut overlap) = (0.0, 0.0);
    let mut active = 0;
    let mut last = f64::NEG_INFINITY;
    for (t, delta) in boundaries {
        if active >= 1 {
            speech += t - last;
        }
        if active >= 2 {
            overlap += t - last;
        }
        active += delta;
        last = t;
    }
    (speech, overlap)
}

/// Transition events of one session, in onset order.
pub fn session_transitions(manifest: &SessionManifest, bc_max_duration: f64) -> Result<Vec<TransitionEvent>> {
    let mut turns: Vec<TimedTurn<'_>> = manifest
        .supervisions
        .iter()
        .map(|s| TimedTurn::new(&s.speaker, s.onset, s.end()))
        .collect();
    turns.sort_by(|a, b| a.start.total_cmp(&b.start));
    classify_transitions(&turns, bc_max_duration).map_err(|e| Error::InvalidSession {
        session_id: manifest.session_id.clone(),
        message: e.to_string(),
    })
}

pub fn session_stats(manifest: &SessionManifest, bc_max_duration: f64) -> Result<StatsAccumulator> {
    manifest.validate()?;
    let intervals: Vec<(f64, f64)> = manifest
        .supervisions
        .iter()
        .map(|s| (s.onset, s.end()))
        .collect();
    let (speech, overlap) = activity_times(&intervals);
    let mut acc = StatsAccumulator {
        sessions: 1,
        total_duration: manifest.duration,
        speech,
        overlap,
        speakers: manifest.supervisions.iter().map(|s| s.speaker.clone()).collect(),
        ..Default::default()
    };
    for event in session_transitions(manifest, bc_max_duration)? {
        acc.histogram[event.kind().index()] += 1;
        match event {
            TransitionEvent::TurnHold { gap } => add(&mut acc.gap_th, gap),
            TransitionEvent::TurnSwitch { gap } => add(&mut acc.gap_ts, gap),
            TransitionEvent::Interruption { overlap_ratio } => add(&mut acc.ratio_ir, overlap_ratio),
            TransitionEvent::Backchannel { .. } => {}
        }
    }
    Ok(acc)
}

pub fn compute_stats(manifests: &[SessionManifest], bc_max_duration: f64) -> Result<StatsReport> {
    let mut total = StatsAccumulator::default();
    for m in manifests {
        total = total.merge(session_stats(m, bc_max_duration)?);
    }
    Ok(total.report())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

impl fmt::Display for StatsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "sessions            {}", self.sessions)?;
        writeln!(f, "speakers            {}", self.speakers)?;
        writeln!(f, "total duration (s)  {:.3}", self.total_duration)?;
        writeln!(f, "speech (s)          {:.3}", self.total_speech)?;
        writeln!(f, "silence (s)         {:.3}", self.total_silence)?;
        writeln!(f, "overlap (s)         {:.3}", self.overlap_time)?;
        writeln!(f, "overlap ratio       {:.4}", self.overlap_ratio)?;
        let total: usize = self.transition_histogram.iter().sum();
        for t in TransitionType::ALL {
            let n = self.transition_histogram[t.index()];
            let share = if total > 0 { n as f64 / total as f64 } else { 0.0 };
            writeln!(f, "{:<19} {n} ({share:.3})", format!("transitions {}", t.label()))?;
        }
        writeln!(f, "mean TH gap (s)     {}", opt(self.mean_gap_th))?;
        writeln!(f, "mean TS gap (s)     {}", opt(self.mean_gap_ts))?;
        write!(f, "mean IR ratio       {}", opt(self.mean_overlap_ratio_ir))
    }
}
