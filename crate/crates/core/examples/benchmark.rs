//! Generation throughput at several worker counts, as CSV.

use convsim::pipeline::{benchmark, write_bench_csv, SimulationConfig};
use convsim::synthetic::SyntheticCorpus;

fn main() -> convsim::Result<()> {
    let work = std::env::temp_dir().join("convsim-bench-example");
    let source = SyntheticCorpus::default().write(&work.join("corpus"))?;
    let mut config = SimulationConfig::new(source, work.join("out"));
    config.num_conversations = 24;
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let counts: Vec<usize> = [1, 2, 4, 8].into_iter().filter(|&w| w == 1 || w <= cores).collect();
    let rows = benchmark(&config, &counts, 3)?;
    write_bench_csv(&rows, std::io::stdout().lock())
}
