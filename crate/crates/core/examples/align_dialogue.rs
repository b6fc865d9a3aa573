//! Aligns synthetic dialogues with the lexical provider and compares the
//! chunks with the generator's gold spans.

use simulcorpus::aligner::{align_dialogue, AlignLevel};
use simulcorpus::similarity::SimilarityProvider;
use simulcorpus::synth::{generate_dialogues, gold_spans, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let provider = SimilarityProvider::LexicalTfIdf;
    let (mut exact, mut total) = (0, 0);
    for d in generate_dialogues(50, &SynthConfig::default()) {
        let alignment = align_dialogue(&d, AlignLevel::SuperSentence, &provider)?;
        let gold = gold_spans(&d).unwrap_or_default();
        let found: Vec<_> = alignment.triples.iter().map(|t| t.span).collect();
        total += gold.len();
        exact += found.iter().zip(&gold).filter(|(a, b)| a == b).count();
        if d.id.ends_with("01") {
            for t in &alignment.triples {
                println!(
                    "{} #{} {:?} {:.3}\n  {}\n  {}",
                    t.dialogue_id, t.index, t.span, t.score, t.translation, t.interpretation
                );
            }
        }
    }
    println!("\n{exact} of {total} spans match the gold segmentation");
    Ok(())
}
