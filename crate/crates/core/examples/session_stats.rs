//! Overlap and transition statistics of simulated sessions per recipe.

use convsim::planner::{build_plan, PlanRequest};
use convsim::stats::compute_stats;
use convsim::synthetic::SyntheticCorpus;
use convsim::turntaking::Recipe;

fn main() -> convsim::Result<()> {
    let (pools, _) = SyntheticCorpus::default().generate();
    for recipe in Recipe::ALL {
        let sessions = (0..100)
            .map(|seed| {
                let request = PlanRequest {
                    session_id: format!("{}-{seed}", recipe.name()),
                    num_speakers: 2,
                    target_duration: 120.0,
                    gain_range_db: (0.0, 0.0),
                    seed,
                };
                Ok(build_plan(&recipe.params(), &pools, &request)?.to_manifest(16000, |_| None))
            })
            .collect::<convsim::Result<Vec<_>>>()?;
        let report = compute_stats(&sessions, 1.0)?;
        println!("== {} ==\n{report}\n", recipe.name());
    }
    Ok(())
}
