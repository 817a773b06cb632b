//! Token count estimates for backends that do not report usage.

pub trait TokenEstimator: Send + Sync {
    fn estimate(&self, text: &str) -> usize;
}

/// Whitespace-delimited words times a fixed ratio, rounded up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WordEstimator {
    pub tokens_per_word: f64,
}

impl Default for WordEstimator {
    fn default() -> Self {
        WordEstimator { tokens_per_word: 1.3 }
    }
}

impl TokenEstimator for WordEstimator {
    fn estimate(&self, text: &str) -> usize {
        let words = text.split_whitespace().count();
        (words as f64 * self.tokens_per_word).ceil() as usize
    }
}

pub fn estimate_tokens(text: &str) -> usize {
    WordEstimator::default().estimate(text)
}
