//! Splits word-aligned utterances at long pauses.

use convsim::corpus_io::{split_at_pauses, AudioRef, SourceUtterance, Word};

fn main() {
    let utt = SourceUtterance {
        id: "rec1".into(),
        speaker_id: "A".into(),
        audio: AudioRef {
            path: "rec1.wav".into(),
            offset: 0.0,
            duration: 5.0,
        },
        sample_rate: 16000,
        words: Some(vec![
            Word::new("so", 0.1, 0.4),
            Word::new("anyway", 0.5, 1.0),
            Word::new("right", 2.0, 2.3),
            Word::new("yes", 2.35, 2.6),
            Word::new("okay", 4.0, 4.5),
        ]),
        text: None,
    };
    for min_pause in [0.3, 1.2, 2.0] {
        println!("min_pause {min_pause}:");
        for piece in split_at_pauses(&utt, min_pause) {
            println!(
                "  {:<10} [{:.2}, {:.2}] {}",
                piece.id,
                piece.audio.offset,
                piece.audio.offset + piece.audio.duration,
                piece.text.unwrap_or_default()
            );
        }
    }
}
