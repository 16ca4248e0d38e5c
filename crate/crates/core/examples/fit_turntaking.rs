//! Simulates annotations with known parameters, writes them as RTTM and fits
//! the model back from the RTTM.

use std::path::Path;

use convsim::corpus_io::{parse_rttm, write_rttm};
use convsim::planner::{build_plan, PlanRequest};
use convsim::synthetic::SyntheticCorpus;
use convsim::turntaking::{classify_transitions, fit_params, Recipe, TimedTurn, TransitionMode};

fn main() -> convsim::Result<()> {
    let truth = Recipe::Nsf1.params();
    let (pools, _) = SyntheticCorpus::default().generate();
    let mut rttm = Vec::new();
    for seed in 0..300 {
        let request = PlanRequest {
            session_id: format!("s{seed:03}"),
            num_speakers: 2,
            target_duration: 120.0,
            gain_range_db: (0.0, 0.0),
            seed,
        };
        let manifest = build_plan(&truth, &pools, &request)?.to_manifest(16000, |_| None);
        write_rttm(&manifest, &mut rttm)?;
    }
    let text = String::from_utf8(rttm).expect("RTTM is ASCII");

    let mut events = Vec::new();
    for session in parse_rttm(&text, Path::new("simulated.rttm"))? {
        let turns: Vec<TimedTurn<'_>> = session
            .segments
            .iter()
            .map(|s| TimedTurn::new(&s.speaker, s.onset, s.onset + s.duration))
            .collect();
        events.extend(classify_transitions(&turns, truth.bc_max_duration)?);
    }
    let fit = fit_params(&events, TransitionMode::Categorical, truth.bc_max_duration)?;
    println!("events  {}", events.len());
    println!("p       true {:?}", truth.p);
    println!("        fit  [{:.3}, {:.3}, {:.3}, {:.3}]", fit.p[0], fit.p[1], fit.p[2], fit.p[3]);
    println!("beta_th true {:.2} fit {:.3}", truth.beta_th, fit.beta_th);
    println!("beta_ts true {:.2} fit {:.3}", truth.beta_ts, fit.beta_ts);
    println!("beta_ir true {:.2} fit {:.3}", truth.beta_ir, fit.beta_ir);
    Ok(())
}
