use std::collections::{BTreeMap, HashMap};

use super::{Scorer, SimilarityError};
use crate::corpus::tokenize;

fn terms(text: &str) -> Vec<String> {
    tokenize(text, true)
        .tokens
        .into_iter()
        .filter(|t| t.chars().any(char::is_alphanumeric))
        .collect()
}

/// TF-IDF cosine similarity with smoothed IDF `ln((1 + D) / (1 + df)) + 1`
/// fitted over a fixed document set.
#[derive(Debug, Clone)]
pub struct TfIdfScorer {
    documents: usize,
    df: HashMap<String, usize>,
}

impl TfIdfScorer {
    pub fn fit<S: AsRef<str>>(documents: &[S]) -> Self {
        let mut df = HashMap::new();
        for doc in documents {
            let mut seen: Vec<String> = terms(doc.as_ref());
            seen.sort();
            seen.dedup();
            for term in seen {
                *df.entry(term).or_insert(0) += 1;
            }
        }
        TfIdfScorer {
            documents: documents.len(),
            df,
        }
    }

    pub fn idf(&self, term: &str) -> f64 {
        let df = self.df.get(term).copied().unwrap_or(0);
        ((1.0 + self.documents as f64) / (1.0 + df as f64)).ln() + 1.0
    }

    /// Sorted sparse vector so dot products sum in a fixed order.
    fn vector(&self, text: &str) -> BTreeMap<String, f64> {
        let mut tf: BTreeMap<String, f64> = BTreeMap::new();
        for term in terms(text) {
            *tf.entry(term).or_insert(0.0) += 1.0;
        }
        for (term, weight) in tf.iter_mut() {
            *weight *= self.idf(term);
        }
        tf
    }

    pub fn cosine(&self, a: &str, b: &str) -> f64 {
        let va = self.vector(a);
        let vb = self.vector(b);
        if va.is_empty() || vb.is_empty() {
            return 0.0;
        }
        let dot: f64 = va
            .iter()
            .filter_map(|(t, w)| vb.get(t).map(|x| w * x))
            .sum();
        let norm = |v: &BTreeMap<String, f64>| v.values().map(|w| w * w).sum::<f64>().sqrt();
        (dot / (norm(&va) * norm(&vb))).clamp(0.0, 1.0)
    }
}

impl Scorer for TfIdfScorer {
    fn score(&self, a: &str, b: &str) -> Result<f64, SimilarityError> {
        Ok(self.cosine(a, b))
    }
}

/// Similarity of two texts with IDF fitted on the pair itself.
pub fn lexical_similarity(a: &str, b: &str) -> f64 {
    TfIdfScorer::fit(&[a, b]).cosine(a, b)
}
