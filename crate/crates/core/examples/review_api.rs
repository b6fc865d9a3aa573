//! Builds a review store over aligned synthetic dialogues and serves the
//! `/v1` API on localhost.
//!
//! SIMULCORPUS_API_TOKEN=secret cargo run --example review_api -- 127.0.0.1:8080

use simulcorpus::aligner::{align_corpus, AlignLevel};
use simulcorpus::service::{serve, ApiState, ReviewStore, API_TOKEN_VAR};
use simulcorpus::similarity::SimilarityProvider;
use simulcorpus::synth::{generate_dialogues, SynthConfig};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let addr = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "127.0.0.1:8080".into())
        .parse()?;
    let dialogues = generate_dialogues(20, &SynthConfig::default());
    let alignments = align_corpus(
        &dialogues,
        AlignLevel::SuperSentence,
        &SimilarityProvider::LexicalTfIdf,
    )?;
    let dir = tempfile_dir()?;
    let store = ReviewStore::from_alignments(&dialogues, &alignments).persist_to(&dir)?;
    println!("store in {}", dir.display());
    println!("try: curl -H 'Authorization: Bearer $TOKEN' http://{addr}/v1/dialogues");
    serve(
        ApiState::new(store, std::env::var(API_TOKEN_VAR).ok()),
        addr,
    )
    .await?;
    Ok(())
}

fn tempfile_dir() -> std::io::Result<std::path::PathBuf> {
    let dir = std::env::temp_dir().join(format!("simulcorpus-review-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}
