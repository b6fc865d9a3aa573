//! Runs the whole pipeline on the shipped synthetic fixture and prints the
//! score report.
//!
//! cargo run --example run_pipeline -- /tmp/simulcorpus-out

use simulcorpus::pipeline::{run_pipeline, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixture =
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic/pipeline.toml");
    let mut cfg = PipelineConfig::load(&fixture)?;
    if let Some(out) = std::env::args().nth(1) {
        cfg.paths.out = out.into();
    }
    let manifest = run_pipeline(&cfg, None)?;
    for stage in &manifest.stages {
        if let Some(s) = stage.stage {
            println!("{s:<13} {} outputs", stage.outputs.len());
        }
    }
    let report = std::fs::read_to_string(cfg.paths.out.join("score/report.json"))?;
    println!("\n{report}");
    Ok(())
}
