//! The one tokenizer every metric in this crate shares.
//!
//! Scores from different metrics are only comparable if they segment text the
//! same way, so this module is deliberately tiny and the behavior is frozen by
//! golden tests: lowercase, keep maximal runs of alphanumeric characters, and
//! treat everything else as a separator. Punctuation never becomes a token,
//! and contractions split at the apostrophe ("don't" -> `don`, `t`).

/// Tokenizes `text` for metric computation.
pub fn metric_tokens(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            for lower in ch.to_lowercase() {
                current.push(lower);
            }
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Convenience wrapper for call sites that only need the count.
pub fn token_count(text: &str) -> usize {
    metric_tokens(text).len()
}
