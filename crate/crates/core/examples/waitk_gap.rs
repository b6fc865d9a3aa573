//! Wait-k simulation of a lookup system scored against translation and
//! interpretation references.

use simulcorpus::metrics::BleuConfig;
use simulcorpus::synth::gap_fixture;
use simulcorpus::waitk::{run_eval, TableGenerator, WaitKConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fx = gap_fixture(300, 0.2, 17);
    let generator = TableGenerator::from_pairs(
        "translation-table",
        fx.sources
            .iter()
            .cloned()
            .zip(fx.translations.iter().cloned()),
    );
    for k in [1, 3, 5] {
        let (report, _) = run_eval(
            &fx.sources,
            &fx.translations,
            &fx.interpretations,
            &WaitKConfig::new(k),
            &generator,
            &BleuConfig::default(),
        )?;
        println!(
            "k={k}  AP {:.3}  AL {:.3}  BLEU-T {:.2}  BLEU-I {:.2}  gap {:.2}",
            report.latency.ap,
            report.latency.al,
            report.bleu_translation,
            report.bleu_interpretation,
            report.gap
        );
    }
    Ok(())
}
