//! Conversation planning: runs the turn-taking model over seed-utterance pools
//! and produces timed placements, with no audio involved.

use std::collections::VecDeque;
use std::fmt;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus_io::{SessionManifest, SpeakerPool, Supervision};
use crate::error::{Error, Result};
use crate::turntaking::{
    sample_event, sample_gap, sample_overlap_ratio, TransitionEvent, TransitionMode,
    TransitionType, TurnTakingParams,
};

#[derive(Debug, Clone, PartialEq)]
pub struct PlacedUtterance {
    pub source_id: String,
    pub speaker_id: String,
    pub onset: f64,
    pub duration: f64,
    /// `None` for the opening utterance.
    pub transition: Option<TransitionType>,
    pub gain_db: f64,
    /// Index of the utterance this one was timed against.
    pub anchor: Option<usize>,
}

impl PlacedUtterance {
    pub fn end(&self) -> f64 {
        self.onset + self.duration
    }
}

/// How often the planner had to deviate from a drawn transition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PlanFallbacks {
    /// Drawn events that fit nowhere at the time and were realized later.
    pub deferred: u32,
    /// Backchannels that found no room while the deferral queue was full and became interruptions.
    pub backchannel_to_interruption: u32,
    /// Interruptions whose onset was delayed, while the deferral queue was full, so the speaker would not overlap themselves.
    pub interruption_delayed: u32,
    /// Interruptions with no admissible speaker while the deferral queue was full, realized as turn switches.
    pub interruption_to_switch: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConversationPlan {
    pub session_id: String,
    pub num_speakers: usize,
    pub target_duration: f64,
    pub seed: u64,
    /// Sorted by onset; the first onset is 0.
    pub placements: Vec<PlacedUtterance>,
    pub fallbacks: PlanFallbacks,
}

impl ConversationPlan {
    pub fn end(&self) -> f64 {
        self.placements.iter().map(PlacedUtterance::end).fold(0.0, f64::max)
    }

    /// Session manifest with `audio_path` unset and duration equal to the
    /// last placement end. `text_of` maps a source id to its transcript.
    pub fn to_manifest(&self, sample_rate: u32, text_of: impl Fn(&str) -> Option<String>) -> SessionManifest {
        SessionManifest {
            session_id: self.session_id.clone(),
            audio_path: None,
            duration: self.end(),
            sample_rate,
            supervisions: self
                .placements
                .iter()
                .map(|p| Supervision {
                    speaker: p.speaker_id.clone(),
                    onset: p.onset,
                    duration: p.duration,
                    source_id: p.source_id.clone(),
                    transition: p.transition,
                    text: text_of(&p.source_id),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanRequest {
    pub session_id: String,
    pub num_speakers: usize,
    pub target_duration: f64,
    pub gain_range_db: (f64, f64),
    pub seed: u64,
}

/// Drawn events waiting for an anchor that admits them.
const MAX_DEFERRED: usize = 8;

struct Participant<'a> {
    pool: &'a SpeakerPool,
    queue: Vec<usize>,
    bc_eligible: Vec<usize>,
    bc_queue: Vec<usize>,
    shortest: usize,
    max_end: f64,
}

impl<'a> Participant<'a> {
    fn new(pool: &'a SpeakerPool, bc_max_duration: f64) -> Self {
        let bc_eligible = (0..pool.utterances.len())
            .filter(|&i| pool.utterances[i].duration() <= bc_max_duration)
            .collect();
        let shortest = (0..pool.utterances.len())
            .min_by(|&a, &b| {
                pool.utterances[a]
                    .duration()
                    .total_cmp(&pool.utterances[b].duration())
            })
            .expect("pools are non-empty");
        Participant {
            pool,
            queue: Vec::new(),
            bc_eligible,
            bc_queue: Vec::new(),
            shortest,
            max_end: f64::NEG_INFINITY,
        }
    }

    /// Next unused utterance, reshuffling the pool once it is exhausted.
    fn peek<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        if self.queue.is_empty() {
            self.queue.extend(0..self.pool.utterances.len());
            self.queue.shuffle(rng);
        }
        *self.queue.last().unwrap()
    }

    fn take(&mut self) {
        self.queue.pop();
    }

    fn peek_backchannel<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        if self.bc_eligible.is_empty() {
            return self.shortest;
        }
        if self.bc_queue.is_empty() {
            self.bc_queue.extend_from_slice(&self.bc_eligible);
            self.bc_queue.shuffle(rng);
        }
        *self.bc_queue.last().unwrap()
    }

    fn take_backchannel(&mut self) {
        self.bc_queue.pop();
    }

    fn duration(&self, utt: usize) -> f64 {
        self.pool.utterances[utt].duration()
    }
}

struct Planner<'a, R: Rng + ?Sized> {
    params: &'a TurnTakingParams,
    participants: Vec<Participant<'a>>,
    placements: Vec<PlacedUtterance>,
    anchor: usize,
    deferred: VecDeque<TransitionEvent>,
    gain_range_db: (f64, f64),
    fallbacks: PlanFallbacks,
    rng: &'a mut R,
}

impl<'a, R: Rng + ?Sized> Planner<'a, R> {
    fn place(&mut self, speaker: usize, utt: usize, onset: f64, transition: Option<TransitionType>) {
        let (low, high) = self.gain_range_db;
        let gain_db = if high > low {
            self.rng.random_range(low..=high)
        } else {
            low
        };
        let participant = &mut self.participants[speaker];
        let source = &participant.pool.utterances[utt];
        let placed = PlacedUtterance {
            source_id: source.id.clone(),
            speaker_id: participant.pool.speaker_id.clone(),
            onset,
            duration: source.duration(),
            transition,
            gain_db,
            anchor: transition.map(|_| self.anchor),
        };
        participant.max_end = participant.max_end.max(placed.end());
        let is_backchannel = transition == Some(TransitionType::Backchannel);
        self.placements.push(placed);
        if !is_backchannel {
            self.anchor = self.placements.len() - 1;
        }
    }

    fn anchor(&self) -> &PlacedUtterance {
        &self.placements[self.anchor]
    }

    fn anchor_speaker(&self) -> usize {
        let id = &self.anchor().speaker_id;
        self.participants
            .iter()
            .position(|p| &p.pool.speaker_id == id)
            .unwrap()
    }

    fn others_shuffled(&mut self) -> Vec<usize> {
        let current = self.anchor_speaker();
        let mut others: Vec<usize> = (0..self.participants.len()).filter(|&i| i != current).collect();
        others.shuffle(self.rng);
        others
    }

    fn gap_turn(&mut self, kind: TransitionType, gap: f64) -> TransitionType {
        let speaker = match kind {
            TransitionType::TurnHold => self.anchor_speaker(),
            _ => {
                let current = self.anchor_speaker();
                let pick = self.rng.random_range(0..self.participants.len() - 1);
                if pick >= current {
                    pick + 1
                } else {
                    pick
                }
            }
        };
        let onset = self.anchor().end() + gap;
        let utt = self.participants[speaker].peek(self.rng);
        self.participants[speaker].take();
        self.place(speaker, utt, onset, Some(kind));
        kind
    }

    /// Places an interruption with exactly the drawn ratio if some other
    /// speaker is free at the implied onset.
    fn try_interruption(&mut self, ratio: f64) -> bool {
        let (anchor_end, anchor_duration) = (self.anchor().end(), self.anchor().duration);
        for c in self.others_shuffled() {
            let utt = self.participants[c].peek(self.rng);
            let overlap = ratio * anchor_duration.min(self.participants[c].duration(utt));
            let onset = (anchor_end - overlap).max(0.0);
            if onset >= self.participants[c].max_end {
                self.participants[c].take();
                self.place(c, utt, onset, Some(TransitionType::Interruption));
                return true;
            }
        }
        false
    }

    /// Interruption that always places something: the first speaker to fall
    /// silent before the anchor ends starts as soon as they are free, and with
    /// nobody free the turn becomes a switch.
    fn force_interruption(&mut self, ratio: f64) -> TransitionType {
        if self.try_interruption(ratio) {
            return TransitionType::Interruption;
        }
        let (anchor_end, anchor_duration) = (self.anchor().end(), self.anchor().duration);
        for c in self.others_shuffled() {
            let free_at = self.participants[c].max_end;
            if free_at < anchor_end {
                let utt = self.participants[c].peek(self.rng);
                let overlap = ratio * anchor_duration.min(self.participants[c].duration(utt));
                self.fallbacks.interruption_delayed += 1;
                self.participants[c].take();
                self.place(c, utt, (anchor_end - overlap).max(free_at), Some(TransitionType::Interruption));
                return TransitionType::Interruption;
            }
        }
        self.fallbacks.interruption_to_switch += 1;
        let gap = sample_gap(self.params, TransitionType::TurnSwitch, self.rng);
        self.gap_turn(TransitionType::TurnSwitch, gap)
    }

    fn try_backchannel(&mut self, offset_fraction: f64) -> bool {
        let (anchor_onset, anchor_end) = (self.anchor().onset, self.anchor().end());
        for c in self.others_shuffled() {
            let utt = self.participants[c].peek_backchannel(self.rng);
            let duration = self.participants[c].duration(utt);
            let earliest = anchor_onset.max(self.participants[c].max_end);
            let latest = anchor_end - duration;
            if earliest > latest {
                continue;
            }
            let mut onset = earliest + offset_fraction * (latest - earliest);
            while onset + duration > anchor_end {
                onset = onset.next_down();
            }
            if onset < earliest {
                continue;
            }
            if !self.participants[c].bc_eligible.is_empty() {
                self.participants[c].take_backchannel();
            }
            self.place(c, utt, onset, Some(TransitionType::Backchannel));
            return true;
        }
        false
    }

    fn try_event(&mut self, event: TransitionEvent) -> bool {
        match event {
            TransitionEvent::Interruption { overlap_ratio } => self.try_interruption(overlap_ratio),
            TransitionEvent::Backchannel { offset_fraction } => self.try_backchannel(offset_fraction),
            TransitionEvent::TurnHold { gap } => {
                self.gap_turn(TransitionType::TurnHold, gap);
                true
            }
            TransitionEvent::TurnSwitch { gap } => {
                self.gap_turn(TransitionType::TurnSwitch, gap);
                true
            }
        }
    }

    /// One planning step. Returns the realized transition, or `None` when the
    /// drawn event was deferred and nothing was placed.
    fn step(&mut self, prev: Option<TransitionType>) -> Option<TransitionType> {
        if let Some(&event) = self.deferred.front() {
            if self.try_event(event) {
                self.deferred.pop_front();
                return Some(event.kind());
            }
        }
        let event = if self.participants.len() == 1 {
            TransitionEvent::TurnHold {
                gap: sample_gap(self.params, TransitionType::TurnHold, self.rng),
            }
        } else {
            sample_event(self.params, prev, self.rng)
        };
        if self.try_event(event) {
            return Some(event.kind());
        }
        if self.deferred.len() < MAX_DEFERRED {
            self.fallbacks.deferred += 1;
            self.deferred.push_back(event);
            return None;
        }
        Some(match event {
            TransitionEvent::Backchannel { .. } => {
                self.fallbacks.backchannel_to_interruption += 1;
                let ratio = sample_overlap_ratio(self.params, self.rng);
                self.force_interruption(ratio)
            }
            TransitionEvent::Interruption { overlap_ratio } => self.force_interruption(overlap_ratio),
            _ => unreachable!("gap turns always place"),
        })
    }
}

fn check_progress(params: &TurnTakingParams, num_speakers: usize) -> Result<()> {
    if num_speakers == 1 {
        return Ok(());
    }
    let bc = TransitionType::Backchannel.index();
    let stuck = params.p[bc] >= 1.0
        || (params.mode == TransitionMode::Markov && params.transition_matrix[bc][bc] >= 1.0);
    if stuck {
        return Err(Error::Plan(
            "parameters only ever draw backchannels, so the conversation never advances".into(),
        ));
    }
    Ok(())
}

/// Builds a plan with a ChaCha8 stream seeded from `request.seed`.
pub fn build_plan(params: &TurnTakingParams, pools: &[SpeakerPool], request: &PlanRequest) -> Result<ConversationPlan> {
    let mut rng = ChaCha8Rng::seed_from_u64(request.seed);
    build_plan_with_rng(params, pools, request, &mut rng)
}

/// Runs the generative loop until the most recent placement ends at or after
/// the target duration.
///
/// Participants are drawn without replacement from `pools`. The opening
/// utterance (uniform speaker, onset 0) becomes the first anchor; every later
/// utterance is timed against the current anchor, the latest utterance that
/// is not a backchannel:
///
/// * TH: the anchor speaker continues `gap` seconds after the anchor ends;
/// * TS: another speaker starts `gap` seconds after the anchor ends;
/// * IR: another speaker starts `ratio * min(anchor, new duration)` before the anchor ends;
/// * BC: a short utterance of another speaker placed uniformly inside the anchor.
///
/// No speaker may start before their own previous utterance has ended.
/// Interrupters are tried in random order. An interruption or backchannel
/// that fits no speaker keeps its drawn ratio or offset and waits in a short
/// queue; the oldest waiting event is retried before each new draw. When the
/// queue is full, an interruption starts as soon as the first speaker falls
/// silent before the anchor ends (or becomes a turn switch if nobody does),
/// and a backchannel becomes an interruption. Utterances are drawn per
/// speaker without replacement, reshuffled on exhaustion; backchannels draw
/// from the speaker's utterances no longer than `bc_max_duration`, or their
/// shortest one if there are none.
pub fn build_plan_with_rng<R: Rng + ?Sized>(
    params: &TurnTakingParams,
    pools: &[SpeakerPool],
    request: &PlanRequest,
    rng: &mut R,
) -> Result<ConversationPlan> {
    params.validate()?;
    let num_speakers = request.num_speakers;
    if num_speakers == 0 {
        return Err(Error::Plan("num_speakers must be at least 1".into()));
    }
    let usable: Vec<&SpeakerPool> = pools.iter().filter(|p| !p.utterances.is_empty()).collect();
    if usable.len() < num_speakers {
        return Err(Error::Plan(format!(
            "{num_speakers} speakers requested but only {} non-empty speaker pools are available",
            usable.len()
        )));
    }
    if !(request.target_duration.is_finite() && request.target_duration > 0.0) {
        return Err(Error::Plan(format!("target_duration must be > 0, got {}", request.target_duration)));
    }
    let (low, high) = request.gain_range_db;
    if !(low.is_finite() && high.is_finite() && low <= high) {
        return Err(Error::Plan(format!("invalid gain range [{low}, {high}] dB")));
    }
    check_progress(params, num_speakers)?;

    let participants: Vec<Participant<'_>> = index::sample(rng, usable.len(), num_speakers)
        .into_iter()
        .map(|i| Participant::new(usable[i], params.bc_max_duration))
        .collect();
    let mut planner = Planner {
        params,
        participants,
        placements: Vec::new(),
        anchor: 0,
        deferred: VecDeque::new(),
        gain_range_db: request.gain_range_db,
        fallbacks: PlanFallbacks::default(),
        rng,
    };

    let first = planner.rng.random_range(0..num_speakers);
    let utt = planner.participants[first].peek(planner.rng);
    planner.participants[first].take();
    planner.place(first, utt, 0.0, None);

    let mut prev = None;
    while planner.placements.last().unwrap().end() < request.target_duration {
        if let Some(kind) = planner.step(prev) {
            prev = Some(kind);
        }
    }

    let Planner {
        mut placements,
        fallbacks,
        ..
    } = planner;
    let mut order: Vec<usize> = (0..placements.len()).collect();
    order.sort_by(|&a, &b| placements[a].onset.total_cmp(&placements[b].onset));
    let mut new_index = vec![0; order.len()];
    for (new, &old) in order.iter().enumerate() {
        new_index[old] = new;
    }
    for p in &mut placements {
        p.anchor = p.anchor.map(|a| new_index[a]);
    }
    let mut slots: Vec<Option<PlacedUtterance>> = placements.into_iter().map(Some).collect();
    let placements = order.iter().map(|&i| slots[i].take().unwrap()).collect();

    Ok(ConversationPlan {
        session_id: request.session_id.clone(),
        num_speakers,
        target_duration: request.target_duration,
        seed: request.seed,
        placements,
        fallbacks,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanViolation {
    InvalidSpan { index: usize },
    FirstOnsetNotZero { onset: f64 },
    Unsorted { index: usize },
    SelfOverlap { speaker: String, first: usize, second: usize },
    BackchannelOutsideParent { index: usize, parent: Option<usize> },
}

impl fmt::Display for PlanViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanViolation::InvalidSpan { index } => write!(f, "placement {index} has a negative onset or non-positive duration"),
            PlanViolation::FirstOnsetNotZero { onset } => write!(f, "first placement starts at {onset}, not 0"),
            PlanViolation::Unsorted { index } => write!(f, "placement {index} starts before placement {}", index - 1),
            PlanViolation::SelfOverlap { speaker, first, second } => {
                write!(f, "speaker {speaker} overlaps themselves in placements {first} and {second}")
            }
            PlanViolation::BackchannelOutsideParent { index, parent: Some(p) } => {
                write!(f, "backchannel {index} is not contained in placement {p}")
            }
            PlanViolation::BackchannelOutsideParent { index, parent: None } => {
                write!(f, "backchannel {index} has no preceding placement")
            }
        }
    }
}

/// Checks every plan invariant by exhaustive comparison. An empty result means
/// the plan is valid.
///
/// A backchannel's parent is its recorded anchor, or else the nearest earlier
/// placement that is not a backchannel.
pub fn validate_plan(plan: &ConversationPlan) -> Vec<PlanViolation> {
    let ps = &plan.placements;
    let mut violations = Vec::new();
    if let Some(first) = ps.first() {
        if first.onset != 0.0 {
            violations.push(PlanViolation::FirstOnsetNotZero { onset: first.onset });
        }
    }
    for (i, p) in ps.iter().enumerate() {
        if !(p.onset >= 0.0 && p.duration > 0.0) {
            violations.push(PlanViolation::InvalidSpan { index: i });
        }
        if i > 0 && p.onset < ps[i - 1].onset {
            violations.push(PlanViolation::Unsorted { index: i });
        }
    }
    for i in 0..ps.len() {
        for j in i + 1..ps.len() {
            let (a, b) = (&ps[i], &ps[j]);
            if a.speaker_id == b.speaker_id && a.onset < b.end() && b.onset < a.end() {
                violations.push(PlanViolation::SelfOverlap {
                    speaker: a.speaker_id.clone(),
                    first: i,
                    second: j,
                });
            }
        }
    }
    for (i, p) in ps.iter().enumerate() {
        if p.transition != Some(TransitionType::Backchannel) {
            continue;
        }
        let parent = p.anchor.or_else(|| {
            (0..i)
                .rev()
                .find(|&j| ps[j].transition != Some(TransitionType::Backchannel))
        });
        let contained = parent
            .and_then(|j| ps.get(j))
            .is_some_and(|q| q.onset <= p.onset && p.end() <= q.end());
        if !contained {
            violations.push(PlanViolation::BackchannelOutsideParent { index: i, parent });
        }
    }
    violations
}
