//! Trains a translation-to-interpretation rewriter on synthetic triples and
//! rewrites a few held-out translations.

use simulcorpus::synth::{synthetic_triples, SynthConfig};
use simulcorpus::t2i::{train_t2i, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let triples = synthetic_triples(600, &SynthConfig::default());
    let (train, test) = triples.split_at(550);
    let pairs: Vec<(String, String)> = train
        .iter()
        .map(|t| (t.translation.clone(), t.interpretation.clone()))
        .collect();
    let bundle = train_t2i(&pairs, &TrainConfig::default())?;
    println!(
        "{} phrase pairs, {}-gram model\n",
        bundle.phrase_table.len(),
        bundle.lm.order
    );
    for t in test.iter().take(5) {
        println!(
            "T  {}\nI  {}\nP  {}\n",
            t.translation,
            t.interpretation,
            bundle.rewrite(&t.translation)?
        );
    }
    Ok(())
}
