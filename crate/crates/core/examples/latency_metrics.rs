//! AP, AL and corpus BLEU on hand-made schedules and sentences.

use simulcorpus::metrics::{
    average_lagging, average_proportion, corpus_bleu, BleuConfig, ReadWriteSchedule, Smoothing,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for k in [1, 3, 5] {
        let s = ReadWriteSchedule::wait_k(k, 10, 10)?;
        println!(
            "wait-{k}: g = {:?}  AP {:.3}  AL {:.3}",
            s.g(),
            average_proportion(&s)?,
            average_lagging(&s)?
        );
    }
    let offline = ReadWriteSchedule::offline(10, 10)?;
    println!(
        "offline: AP {:.3}  AL {:.3}",
        average_proportion(&offline)?,
        average_lagging(&offline)?
    );

    let hyps = ["the cat sat on", "we will vote tomorrow"];
    let refs = ["the cat sat on the mat", "we will vote on it tomorrow"];
    for smoothing in [Smoothing::None, Smoothing::Exp] {
        let cfg = BleuConfig {
            smoothing,
            ..BleuConfig::default()
        };
        let b = corpus_bleu(&hyps, &refs, &cfg)?;
        println!(
            "BLEU ({smoothing:?}) {:.2}  bp {:.3}  precisions {:.1?}",
            b.score, b.brevity_penalty, b.precisions
        );
    }
    Ok(())
}
