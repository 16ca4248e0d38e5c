//! Plans one conversation and prints its timeline.

use convsim::planner::{build_plan, validate_plan, PlanRequest};
use convsim::synthetic::SyntheticCorpus;
use convsim::turntaking::Recipe;

fn main() -> convsim::Result<()> {
    let (pools, _) = SyntheticCorpus::default().generate();
    let request = PlanRequest {
        session_id: "demo".into(),
        num_speakers: 3,
        target_duration: 45.0,
        gain_range_db: (-3.0, 3.0),
        seed: 11,
    };
    let plan = build_plan(&Recipe::Callhome.params(), &pools, &request)?;
    for p in &plan.placements {
        let kind = p.transition.map_or("--", |t| t.label());
        println!(
            "{:>7.2} {:>7.2}  {}  {:<12} {:+.1} dB",
            p.onset,
            p.end(),
            kind,
            p.speaker_id,
            p.gain_db
        );
    }
    println!("violations: {}", validate_plan(&plan).len());
    println!("fallbacks:  {:?}", plan.fallbacks);
    Ok(())
}
