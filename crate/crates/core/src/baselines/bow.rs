//! Bag-of-words class embeddings from per-class text documents.
//!
//! Documents are tokenized into lowercase alphabetic runs, stop-words are
//! dropped, the remainder is stemmed, and each class is described by its
//! counts over the most frequent stems of the whole corpus.

use std::collections::HashMap;

use ndarray::Array2;

use crate::baselines::stem::stem;
use crate::baselines::CorpusDocument;
use crate::embed::{standardize, EmbeddingSet};
use crate::{Error, Result};

/// Vocabulary size used when none is configured.
pub const DEFAULT_BOW_VOCABULARY: usize = 1000;

/// Alphabetically ordered so membership is a binary search.
const STOP_WORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
    "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but",
    "by", "can", "cannot", "could", "did", "do", "does", "doing", "down", "during", "each",
    "few", "for", "from", "further", "had", "has", "have", "having", "he", "her", "here",
    "hers", "herself", "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it",
    "its", "itself", "just", "me", "more", "most", "my", "myself", "no", "nor", "not", "now",
    "of", "off", "on", "once", "only", "or", "other", "our", "ours", "ourselves", "out",
    "over", "own", "same", "she", "should", "so", "some", "such", "than", "that", "the",
    "their", "theirs", "them", "themselves", "then", "there", "these", "they", "this",
    "those", "through", "to", "too", "under", "until", "up", "very", "was", "we", "were",
    "what", "when", "where", "which", "while", "who", "whom", "why", "with", "would", "you",
    "your", "yours", "yourself", "yourselves",
];

fn is_stop_word(token: &str) -> bool {
    STOP_WORDS.binary_search(&token).is_ok()
}

/// Lowercase alphabetic tokens with stop-words removed, stemmed, in
/// document order.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut stems = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_ascii_alphabetic() {
            current.push(ch.to_ascii_lowercase());
        } else if !current.is_empty() {
            if !is_stop_word(&current) {
                stems.push(stem(&current));
            }
            current.clear();
        }
    }
    if !current.is_empty() && !is_stop_word(&current) {
        stems.push(stem(&current));
    }
    stems
}

/// Raw count matrix over the top-`vocab_size` stems, one row per document.
///
/// Stems are ranked by total corpus frequency, ties broken alphabetically,
/// and that ranking is the column order. A document contributing no stems
/// (only stop-words) becomes a zero row and logs a warning; a corpus with
/// no stems at all is an error.
pub fn bow_class_matrix(
    docs: &[CorpusDocument],
    vocab_size: usize,
) -> Result<(Vec<String>, Array2<f64>)> {
    if docs.is_empty() {
        return Err(Error::invalid("bag-of-words", "no documents"));
    }
    if vocab_size == 0 {
        return Err(Error::invalid("bag-of-words", "vocabulary size must be positive"));
    }
    let per_doc: Vec<Vec<String>> = docs.iter().map(|d| tokenize(&d.text)).collect();
    let mut totals: HashMap<&str, usize> = HashMap::new();
    for stems in &per_doc {
        for s in stems {
            *totals.entry(s).or_default() += 1;
        }
    }
    if totals.is_empty() {
        return Err(Error::invalid(
            "bag-of-words",
            "no vocabulary survives stop-word removal",
        ));
    }
    let mut ranked: Vec<(&str, usize)> = totals.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(vocab_size);
    let vocab: Vec<String> = ranked.iter().map(|(s, _)| s.to_string()).collect();
    let index: HashMap<&str, usize> = vocab
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();

    let mut matrix = Array2::zeros((docs.len(), vocab.len()));
    for (row, (doc, stems)) in docs.iter().zip(&per_doc).enumerate() {
        for s in stems {
            if let Some(&col) = index.get(s.as_str()) {
                matrix[[row, col]] += 1.0;
            }
        }
        if matrix.row(row).sum() == 0.0 {
            log::warn!(
                "document for class '{}' contains no vocabulary words",
                doc.class
            );
        }
    }
    Ok((vocab, matrix))
}

/// Standardized bag-of-words class embeddings.
pub fn build_bow_embeddings(docs: &[CorpusDocument], vocab_size: usize) -> Result<EmbeddingSet> {
    let classes: Vec<String> = docs.iter().map(|d| d.class.clone()).collect();
    for (i, c) in classes.iter().enumerate() {
        if classes[..i].contains(c) {
            return Err(Error::invalid(
                "bag-of-words",
                format!("class '{c}' has more than one document"),
            ));
        }
    }
    let (_, mut matrix) = bow_class_matrix(docs, vocab_size)?;
    standardize(&mut matrix)?;
    Ok(EmbeddingSet {
        classes,
        vectors: matrix,
        source: format!("bow:n={vocab_size}"),
    })
}
