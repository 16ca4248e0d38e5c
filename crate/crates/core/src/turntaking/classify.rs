use std::collections::HashMap;

use super::TransitionEvent;
use crate::error::{Error, Result};

/// Same-speaker overlap up to this many seconds is treated as the speaker
/// resuming exactly where they stopped. Millisecond timestamps (RTTM) can
/// produce that much spurious overlap.
pub const SELF_OVERLAP_TOLERANCE: f64 = 2e-3;

/// One utterance of an annotated timeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedTurn<'a> {
    pub speaker: &'a str,
    pub start: f64,
    pub end: f64,
}

impl<'a> TimedTurn<'a> {
    pub fn new(speaker: &'a str, start: f64, end: f64) -> Self {
        TimedTurn { speaker, start, end }
    }

    fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Labels every utterance after the first with the transition that produced it.
///
/// Each utterance is compared with the anchor, the most recent utterance that
/// was not itself a backchannel:
///
/// * no overlap, same speaker: TH with the pause as gap;
/// * no overlap, other speaker: TS with the gap;
/// * overlap, lasting at most `bc_max_duration` and ending inside the anchor: BC,
///   offset fraction `(start - anchor.start) / anchor.duration`;
/// * any other overlap: IR, ratio `(anchor.end - start) / min(durations)` in (0, 1].
///
/// Backchannels never become anchors, so a following utterance is classified
/// against the utterance the backchannel accompanied. The input must be sorted
/// by start time and free of same-speaker overlap beyond
/// [`SELF_OVERLAP_TOLERANCE`].
pub fn classify_transitions(timeline: &[TimedTurn<'_>], bc_max_duration: f64) -> Result<Vec<TransitionEvent>> {
    let mut last_end: HashMap<&str, f64> = HashMap::new();
    let mut events = Vec::with_capacity(timeline.len().saturating_sub(1));
    let mut anchor: Option<TimedTurn<'_>> = None;

    for (i, raw) in timeline.iter().enumerate() {
        let mut turn = *raw;
        if turn.end.partial_cmp(&turn.start) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::InvalidTimeline(format!(
                "utterance {i} of {} has non-positive duration [{}, {}]",
                turn.speaker, turn.start, turn.end
            )));
        }
        if let Some(prev) = i.checked_sub(1).map(|j| timeline[j]) {
            if turn.start < prev.start {
                return Err(Error::InvalidTimeline(format!("utterance {i} is not sorted by start")));
            }
        }
        if let Some(&end) = last_end.get(turn.speaker) {
            if turn.start < end && end - turn.start <= SELF_OVERLAP_TOLERANCE && turn.end > end {
                turn.start = end;
            }
            if turn.start < end {
                return Err(Error::InvalidTimeline(format!(
                    "speaker {} overlaps themselves at {} (previous utterance ends at {end})",
                    turn.speaker, turn.start
                )));
            }
        }
        last_end.insert(turn.speaker, turn.end);

        let Some(a) = anchor else {
            anchor = Some(turn);
            continue;
        };
        if turn.start >= a.end {
            let gap = turn.start - a.end;
            events.push(if turn.speaker == a.speaker {
                TransitionEvent::TurnHold { gap }
            } else {
                TransitionEvent::TurnSwitch { gap }
            });
            anchor = Some(turn);
        } else if turn.duration() <= bc_max_duration && turn.end <= a.end {
            events.push(TransitionEvent::Backchannel {
                offset_fraction: (turn.start - a.start) / a.duration(),
            });
        } else {
            let ratio = (a.end - turn.start) / a.duration().min(turn.duration());
            events.push(TransitionEvent::Interruption {
                overlap_ratio: ratio.clamp(f64::MIN_POSITIVE, 1.0),
            });
            anchor = Some(turn);
        }
    }
    Ok(events)
}
