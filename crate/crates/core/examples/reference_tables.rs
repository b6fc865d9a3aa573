//! Prints the published reference results kept in the crate.

use simulcorpus::reference::{best_t2i_gain, largest_gap, GAP_TABLE, SYSTEM_TABLE};

fn main() {
    println!(
        "{:<5} {:>6} {:>5} {:>5} {:>7} {:>7} {:>6}",
        "lang", "pairs", "AP", "AL", "BLEU-T", "BLEU-I", "gap"
    );
    for r in &GAP_TABLE {
        println!(
            "{:<5} {:>6} {:>5.2} {:>5.2} {:>7.2} {:>7.2} {:>6.2}",
            r.lang,
            r.test_pairs,
            r.ap,
            r.al,
            r.bleu_translation,
            r.bleu_interpretation,
            r.gap()
        );
    }
    println!();
    for r in &SYSTEM_TABLE {
        println!(
            "{:<22} AP {:.2} AL {:.2}  T {:>5.2}  I-asr {:>5.2}  I {:>5.2}",
            r.system,
            r.ap,
            r.al,
            r.bleu_translation,
            r.bleu_interpretation_asr,
            r.bleu_interpretation
        );
    }
    let g = largest_gap();
    println!(
        "\nlargest gap: {} ({:.2}); best rewrite gain {:.2}",
        g.lang,
        g.gap(),
        best_t2i_gain()
    );
}
