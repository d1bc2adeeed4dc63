//! Tokenization and normalization helpers shared by retrieval, the lexical
//! mock backend and evaluation.

/// Function words ignored when measuring content-word containment.
pub const STOPWORDS: &[&str] = &[
    "a", "an", "the", "is", "are", "was", "were", "be", "been", "being", "am", "in", "on", "at", "of", "to", "for",
    "from", "by", "with", "as", "and", "or", "but", "it", "its", "this", "that", "these", "those", "thus", "so", "do",
    "does", "did", "has", "have", "had", "there", "which", "who", "what", "when", "s",
];

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.contains(&token)
}

/// Lowercase and split on anything that is not alphanumeric.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn content_tokens(text: &str) -> Vec<String> {
    tokenize(text).into_iter().filter(|t| !is_stopword(t)).collect()
}

fn is_article(word: &str) -> bool {
    matches!(word, "a" | "an" | "the")
}

/// SQuAD answer normalization: lowercase, drop ASCII punctuation, drop the
/// articles a/an/the, collapse whitespace.
pub fn normalize_answer(text: &str) -> String {
    let lowered = text.to_lowercase();
    let no_punct: String = lowered.chars().filter(|c| !c.is_ascii_punctuation()).collect();
    no_punct
        .split_whitespace()
        .filter(|w| !is_article(w))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Drop standalone articles and collapse whitespace, keeping punctuation.
pub(crate) fn strip_articles(text: &str) -> String {
    text.split_whitespace()
        .filter(|w| !is_article(w))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Uppercase the first character.
pub fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_strips_punctuation() {
        assert_eq!(
            tokenize("The Epson HX-20, the first laptop."),
            vec!["the", "epson", "hx", "20", "the", "first", "laptop"]
        );
        assert_eq!(tokenize("died in 322BC."), vec!["died", "in", "322bc"]);
        assert!(tokenize("...").is_empty());
    }

    #[test]
    fn squad_normalization() {
        assert_eq!(normalize_answer("Tim Pawlenty."), "tim pawlenty");
        assert_eq!(normalize_answer("The  Harry S. Truman"), "harry s truman");
        assert_eq!(normalize_answer("An apple, a pear"), "apple pear");
    }

    #[test]
    fn capitalize_first_letter() {
        assert_eq!(capitalize("married"), "Married");
        assert_eq!(capitalize(""), "");
    }
}
