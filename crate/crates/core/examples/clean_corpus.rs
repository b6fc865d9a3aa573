//! Runs the default cleaning rules over a planted corpus and prints the
//! per-rule report.

use simulcorpus::cleaning::{default_dialogue_rules, filter_dialogues, filter_raw_interpretations};
use simulcorpus::synth::{planted_corpus, PlantedViolations, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = planted_corpus(100, &PlantedViolations::default(), &SynthConfig::default());
    let filtered = filter_dialogues(&corpus.dialogues, &default_dialogue_rules())?;
    println!("{}\n", filtered.report);
    let raw = filter_raw_interpretations(&filtered.kept, 4);
    println!("{}", raw.report);
    Ok(())
}
