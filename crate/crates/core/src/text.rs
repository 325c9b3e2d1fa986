//! Tokenization shared by the vectorizer and the hashed encoder.

/// Lowercase `text` and split it on every non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_on_punctuation_and_space() {
        assert_eq!(tokenize("August 22, 1935"), ["august", "22", "1935"]);
        assert_eq!(tokenize("  ***  "), Vec::<String>::new());
        assert_eq!(tokenize("São-Paulo"), ["são", "paulo"]);
    }
}
