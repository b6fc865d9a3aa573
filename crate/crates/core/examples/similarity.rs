//! TF-IDF cosine between a translation unit and candidate interpretation
//! chunks.

use simulcorpus::corpus::Span;
use simulcorpus::similarity::{chunk_text, lexical_similarity, TfIdfScorer};

fn main() {
    let reference = "We will vote on the report tomorrow.";
    let utterances: Vec<String> = ["we vote tomorrow", "on the report", "thank you"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let context: Vec<&str> = std::iter::once(reference)
        .chain(utterances.iter().map(String::as_str))
        .collect();
    let tfidf = TfIdfScorer::fit(&context);
    for end in 1..=utterances.len() {
        let chunk = chunk_text(&utterances, Span::new(0, end));
        println!(
            "{:<45} tf-idf {:.3}  plain {:.3}",
            format!("{chunk:?}"),
            tfidf.cosine(reference, &chunk),
            lexical_similarity(reference, &chunk)
        );
    }
}
