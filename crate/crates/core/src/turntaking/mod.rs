//! Statistical turn-taking model.
//!
//! A conversation is a chain of transitions between consecutive utterances,
//! each one of four types:
//!
//! * turn hold (TH): the same speaker continues after a pause,
//! * turn switch (TS): another speaker starts after a gap,
//! * interruption (IR): another speaker starts before the current utterance ends,
//! * backchannel (BC): a short utterance of another speaker inside the current one.
//!
//! Types are drawn from a fixed categorical distribution or from a first-order
//! Markov chain. Pauses and gaps are exponential, interruption overlap is a
//! ratio drawn from an exponential truncated to (0, 1], and backchannels are
//! placed uniformly inside the utterance they accompany.

mod classify;
mod fit;
mod params;

use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use classify::{classify_transitions, TimedTurn, SELF_OVERLAP_TOLERANCE};
pub use fit::{fit_params, fit_truncated_exponential_rate, truncated_exponential_mean};
pub use params::{Recipe, TransitionMode, TurnTakingParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum TransitionType {
    TurnHold,
    TurnSwitch,
    Interruption,
    Backchannel,
}

impl TransitionType {
    /// Fixed sampling and serialization order.
    pub const ALL: [TransitionType; 4] = [
        TransitionType::TurnHold,
        TransitionType::TurnSwitch,
        TransitionType::Interruption,
        TransitionType::Backchannel,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(usize::from(code)).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            TransitionType::TurnHold => "TH",
            TransitionType::TurnSwitch => "TS",
            TransitionType::Interruption => "IR",
            TransitionType::Backchannel => "BC",
        }
    }

    pub fn is_overlap(self) -> bool {
        matches!(self, TransitionType::Interruption | TransitionType::Backchannel)
    }
}

impl From<TransitionType> for u8 {
    fn from(t: TransitionType) -> u8 {
        t.code()
    }
}

impl TryFrom<u8> for TransitionType {
    type Error = String;

    fn try_from(code: u8) -> Result<Self, String> {
        TransitionType::from_code(code).ok_or_else(|| format!("unknown transition code {code}"))
    }
}

impl std::fmt::Display for TransitionType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// One realized step of the generative process, carrying the parameter that
/// belongs to its type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransitionEvent {
    TurnHold { gap: f64 },
    TurnSwitch { gap: f64 },
    Interruption { overlap_ratio: f64 },
    /// Position of the backchannel inside the utterance it accompanies, in [0, 1].
    Backchannel { offset_fraction: f64 },
}

impl TransitionEvent {
    pub fn kind(&self) -> TransitionType {
        match self {
            TransitionEvent::TurnHold { .. } => TransitionType::TurnHold,
            TransitionEvent::TurnSwitch { .. } => TransitionType::TurnSwitch,
            TransitionEvent::Interruption { .. } => TransitionType::Interruption,
            TransitionEvent::Backchannel { .. } => TransitionType::Backchannel,
        }
    }
}

/// Inverse CDF over (TH, TS, IR, BC): picks the first type with non-zero
/// probability whose cumulative probability reaches `u`.
pub fn transition_from_uniform(probs: &[f64; 4], u: f64) -> TransitionType {
    let mut cumulative = 0.0;
    let mut last_positive = None;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        cumulative += p;
        last_positive = Some(i);
        if u <= cumulative {
            return TransitionType::ALL[i];
        }
    }
    // u beyond the rounded total
    TransitionType::ALL[last_positive.unwrap_or(0)]
}

/// Draws the next transition type from one uniform variate.
///
/// In Markov mode `prev` selects the row of the transition matrix; the first
/// step (`prev == None`) falls back to the categorical prior.
pub fn sample_transition<R: Rng + ?Sized>(
    params: &TurnTakingParams,
    prev: Option<TransitionType>,
    rng: &mut R,
) -> TransitionType {
    let u: f64 = rng.random();
    transition_from_uniform(params.transition_probs(prev), u)
}

/// Exponential inverse CDF, `-ln(1 - u) / rate`.
pub fn gap_from_uniform(rate: f64, u: f64) -> f64 {
    -(-u).ln_1p() / rate
}

/// Samples a pause (TH) or gap (TS) duration in seconds.
///
/// # Panics
///
/// If `kind` is not `TurnHold` or `TurnSwitch`.
pub fn sample_gap<R: Rng + ?Sized>(params: &TurnTakingParams, kind: TransitionType, rng: &mut R) -> f64 {
    let rate = match kind {
        TransitionType::TurnHold => params.beta_th,
        TransitionType::TurnSwitch => params.beta_ts,
        other => panic!("sample_gap called for {other}, which has no gap"),
    };
    gap_from_uniform(rate, rng.random())
}

/// Inverse CDF of an exponential with rate `beta` truncated to (0, 1].
pub fn overlap_ratio_from_uniform(beta: f64, u: f64) -> f64 {
    let mass = -(-beta).exp_m1();
    -(-u * mass).ln_1p() / beta
}

pub fn sample_overlap_ratio<R: Rng + ?Sized>(params: &TurnTakingParams, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    overlap_ratio_from_uniform(params.beta_ir, u).clamp(f64::MIN_POSITIVE, 1.0)
}

/// Samples a transition type together with its parameter.
pub fn sample_event<R: Rng + ?Sized>(
    params: &TurnTakingParams,
    prev: Option<TransitionType>,
    rng: &mut R,
) -> TransitionEvent {
    match sample_transition(params, prev, rng) {
        TransitionType::TurnHold => TransitionEvent::TurnHold {
            gap: sample_gap(params, TransitionType::TurnHold, rng),
        },
        TransitionType::TurnSwitch => TransitionEvent::TurnSwitch {
            gap: sample_gap(params, TransitionType::TurnSwitch, rng),
        },
        TransitionType::Interruption => TransitionEvent::Interruption {
            overlap_ratio: sample_overlap_ratio(params, rng),
        },
        TransitionType::Backchannel => TransitionEvent::Backchannel {
            offset_fraction: rng.random_range(0.0..=1.0),
        },
    }
}

/// Samples a chain of `n` events, threading the previous type through.
pub fn sample_events<R: Rng + ?Sized>(
    params: &TurnTakingParams,
    n: usize,
    rng: &mut R,
) -> Vec<TransitionEvent> {
    let mut prev = None;
    (0..n)
        .map(|_| {
            let event = sample_event(params, prev, rng);
            prev = Some(event.kind());
            event
        })
        .collect()
}

fn boost_row(row: &[f64; 4], factor: f64) -> [f64; 4] {
    let scaled = [row[0], row[1], factor * row[2], factor * row[3]];
    let total: f64 = scaled.iter().sum();
    scaled.map(|v| v / total)
}

/// Multiplies the IR and BC probabilities by `factor` and renormalizes.
/// Applied to `p` and to every row of the Markov matrix; rates are unchanged.
///
/// # Panics
///
/// If `factor` is not a positive finite number.
pub fn boost_overlap(params: &TurnTakingParams, factor: f64) -> TurnTakingParams {
    assert!(factor.is_finite() && factor > 0.0, "boost factor must be positive, got {factor}");
    let mut out = params.clone();
    out.p = boost_row(&params.p, factor);
    for (row, src) in out.transition_matrix.iter_mut().zip(&params.transition_matrix) {
        *row = boost_row(src, factor);
    }
    out
}
