//! Benchmark fixtures shared by the criterion benches.

use ordmed::{simulate_dataset, Dataset, EffectQuery, SimulationDesign};

/// The five-level study dataset with `n` rows.
pub fn five_level_data(n: usize, seed: u64) -> Dataset {
    simulate_dataset(&SimulationDesign {
        n,
        ..SimulationDesign::five_level_study(seed)
    })
    .expect("preset design is valid")
}

/// The query used throughout the reference designs.
pub fn reference_query() -> EffectQuery {
    EffectQuery::new(3.5, 2.0, vec![]).expect("finite query")
}
