//! Train the four headline variants on the default synthetic spec and
//! print the trend table.
//!
//! ```text
//! cargo run --release --example synthetic_trend -- 5
//! ```

use noisetag::benchmark::{run_matrix_experiment, ExperimentConfig, SyntheticSpec};
use noisetag::variant::ModelVariant;

fn main() -> noisetag::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let variants: Vec<ModelVariant> = ["base", "base+noise", "global-cm", "kmeans-cm-freq-ip"]
        .iter()
        .map(|v| v.parse())
        .collect::<noisetag::Result<_>>()?;
    let seeds: Vec<u64> = (1..=seeds).collect();
    let spec: SyntheticSpec = match std::env::var("SPEC") {
        Ok(j) => serde_json::from_str(&j)?,
        Err(_) => SyntheticSpec::default(),
    };
    let config: ExperimentConfig = match std::env::var("EXP") {
        Ok(j) => serde_json::from_str(&j)?,
        Err(_) => ExperimentConfig::default(),
    };
    let variants: Vec<ModelVariant> = match std::env::var("VARIANTS") {
        Ok(v) => v.split(',').map(|s| s.parse()).collect::<noisetag::Result<_>>()?,
        Err(_) => variants,
    };
    let report = run_matrix_experiment(&spec, &variants, &seeds, &config)?;
    print!("{}", report.render());
    Ok(())
}
