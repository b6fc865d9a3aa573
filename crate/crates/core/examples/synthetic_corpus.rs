//! Writes a seeded synthetic dialogue corpus with planted rule violations.
//!
//! cargo run --example synthetic_corpus -- fixtures/synthetic/dialogues.jsonl 120

use simulcorpus::corpus::write_corpus;
use simulcorpus::synth::{planted_corpus, PlantedViolations, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "dialogues.jsonl".into());
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(120);
    let corpus = planted_corpus(n, &PlantedViolations::default(), &SynthConfig::default());
    write_corpus(&out, &corpus.dialogues)?;
    println!("wrote {} dialogues to {out}", corpus.dialogues.len());
    for (rule, ids) in &corpus.planted {
        println!("  {rule:<28} {:>3} planted", ids.len());
    }
    Ok(())
}
