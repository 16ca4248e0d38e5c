use super::manifest::{AudioRef, SourceUtterance, SpeakerPool, Word};

/// Default minimum inter-word silence (seconds) treated as a pause boundary.
pub const DEFAULT_MIN_PAUSE: f64 = 0.3;

/// Splits an utterance at every inter-word gap of at least `min_pause`.
///
/// Each resulting piece keeps at most `min_pause / 2` of silence on either
/// side of its voiced span, so a boundary falls at the gap midpoint whenever
/// the gap is exactly `min_pause` and inside the gap otherwise. Word times are
/// re-based to the start of their piece. Utterances without alignments are
/// returned unchanged; a single voiced span keeps the original id and text.
pub fn split_at_pauses(utt: &SourceUtterance, min_pause: f64) -> Vec<SourceUtterance> {
    let words = match &utt.words {
        Some(w) if !w.is_empty() => w,
        _ => return vec![utt.clone()],
    };
    let pad = min_pause / 2.0;
    let duration = utt.duration();

    let mut groups: Vec<&[Word]> = Vec::new();
    let mut first = 0;
    for i in 1..words.len() {
        if words[i].start - words[i - 1].end >= min_pause {
            groups.push(&words[first..i]);
            first = i;
        }
    }
    groups.push(&words[first..]);

    let single = groups.len() == 1;
    groups
        .iter()
        .enumerate()
        .map(|(k, group)| {
            let voiced_start = group[0].start;
            let voiced_end = group[group.len() - 1].end;
            let left = (voiced_start - pad).max(0.0);
            let right = (voiced_end + pad).min(duration.max(voiced_end));
            let words: Vec<Word> = group
                .iter()
                .map(|w| Word::new(w.token.clone(), w.start - left, w.end - left))
                .collect();
            let (id, text) = if single {
                (utt.id.clone(), utt.text.clone())
            } else {
                let text = words
                    .iter()
                    .map(|w| w.token.as_str())
                    .collect::<Vec<_>>()
                    .join(" ");
                (format!("{}_{k:03}", utt.id), Some(text))
            };
            SourceUtterance {
                id,
                speaker_id: utt.speaker_id.clone(),
                audio: AudioRef {
                    path: utt.audio.path.clone(),
                    offset: utt.audio.offset + left,
                    duration: right - left,
                },
                sample_rate: utt.sample_rate,
                words: Some(words),
                text,
            }
        })
        .collect()
}

pub fn split_pools(pools: &[SpeakerPool], min_pause: f64) -> Vec<SpeakerPool> {
    pools
        .iter()
        .map(|pool| SpeakerPool {
            speaker_id: pool.speaker_id.clone(),
            utterances: pool
                .utterances
                .iter()
                .flat_map(|u| split_at_pauses(u, min_pause))
                .collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::path::PathBuf;

    fn utt(duration: f64, words: Option<Vec<(f64, f64)>>) -> SourceUtterance {
        SourceUtterance {
            id: "u".into(),
            speaker_id: "A".into(),
            audio: AudioRef {
                path: PathBuf::from("a.wav"),
                offset: 1.0,
                duration,
            },
            sample_rate: 16000,
            words: words.map(|ws| {
                ws.into_iter()
                    .enumerate()
                    .map(|(i, (s, e))| Word::new(format!("w{i}"), s, e))
                    .collect()
            }),
            text: Some("orig".into()),
        }
    }

    fn span(u: &SourceUtterance) -> (f64, f64) {
        (u.audio.offset - 1.0, u.audio.offset - 1.0 + u.audio.duration)
    }

    #[test]
    fn splits_at_qualifying_gap_with_capped_padding() {
        let parts = split_at_pauses(&utt(1.4, Some(vec![(0.0, 0.5), (0.9, 1.4)])), 0.3);
        assert_eq!(parts.len(), 2);
        let (a0, a1) = span(&parts[0]);
        let (b0, b1) = span(&parts[1]);
        assert!((a0 - 0.0).abs() < 1e-12 && (a1 - 0.65).abs() < 1e-12);
        assert!((b0 - 0.75).abs() < 1e-12 && (b1 - 1.4).abs() < 1e-12);
        let w = &parts[1].words.as_ref().unwrap()[0];
        assert!((w.start - 0.15).abs() < 1e-12);
        assert_eq!(parts[0].id, "u_000");
        assert_eq!(parts[1].text.as_deref(), Some("w1"));
    }

    #[test]
    fn short_gap_keeps_one_piece() {
        let input = utt(1.0, Some(vec![(0.0, 0.5), (0.6, 1.0)]));
        let parts = split_at_pauses(&input, 0.3);
        assert_eq!(parts, vec![input]);
    }

    #[test]
    fn missing_words_is_identity() {
        let input = utt(3.0, None);
        assert_eq!(split_at_pauses(&input, 0.3), vec![input]);
    }

    #[test]
    fn trims_long_leading_and_trailing_silence() {
        let parts = split_at_pauses(&utt(3.0, Some(vec![(1.0, 1.5)])), 0.4);
        assert_eq!(parts.len(), 1);
        let (s, e) = span(&parts[0]);
        assert!((s - 0.8).abs() < 1e-12);
        assert!((e - 1.7).abs() < 1e-12);
    }

    fn arb_words() -> impl Strategy<Value = (f64, Vec<(f64, f64)>)> {
        prop::collection::vec((0.0f64..0.8, 0.05f64..0.6), 1..12).prop_map(|steps| {
            let mut t = 0.0;
            let mut words = Vec::new();
            for (gap, len) in steps {
                let s = t + gap;
                words.push((s, s + len));
                t = s + len;
            }
            (t + 0.5, words)
        })
    }

    proptest! {
        #[test]
        fn idempotent((duration, words) in arb_words(), min_pause in 0.05f64..0.7) {
            let once = split_at_pauses(&utt(duration, Some(words)), min_pause);
            let twice: Vec<_> = once.iter().flat_map(|u| split_at_pauses(u, min_pause)).collect();
            prop_assert_eq!(once.len(), twice.len());
            for (a, b) in once.iter().zip(&twice) {
                prop_assert!((a.audio.offset - b.audio.offset).abs() < 1e-9);
                prop_assert!((a.audio.duration - b.audio.duration).abs() < 1e-9);
                prop_assert_eq!(a.words.as_ref().unwrap().len(), b.words.as_ref().unwrap().len());
            }
        }

        #[test]
        fn every_word_covered_once((duration, words) in arb_words(), min_pause in 0.05f64..0.7) {
            let input = utt(duration, Some(words.clone()));
            let parts = split_at_pauses(&input, min_pause);
            let mut recovered = Vec::new();
            for p in &parts {
                let base = p.audio.offset - input.audio.offset;
                for w in p.words.as_ref().unwrap() {
                    prop_assert!(w.start >= -1e-12 && w.end <= p.audio.duration + 1e-9);
                    recovered.push((base + w.start, base + w.end));
                }
            }
            prop_assert_eq!(recovered.len(), words.len());
            for ((s, e), (rs, re)) in words.iter().zip(&recovered) {
                prop_assert!((s - rs).abs() < 1e-9 && (e - re).abs() < 1e-9);
            }
            for pair in parts.windows(2) {
                prop_assert!(pair[0].audio.offset + pair[0].audio.duration <= pair[1].audio.offset + 1e-9);
            }
        }
    }
}
