/// Maximum sequence length, in proxy tokens, a serialized slide must fit.
pub const TOKEN_BUDGET: usize = 2048;

/// Deterministic token-count proxy: one token per four bytes, rounded up.
///
/// This is a budget gate, not a tokenizer. JSON punctuation-heavy text
/// tokenizes at roughly this rate in common BPE vocabularies.
pub fn estimate_token_length(text: &str) -> usize {
    text.len().div_ceil(4)
}
