//! Tokenization shared by the index, the title stage and the validators.

use std::collections::BTreeSet;
use std::sync::OnceLock;

const STOPWORD_DATA: &str = include_str!("../data/stopwords.txt");

pub fn stopwords() -> &'static BTreeSet<&'static str> {
    static SET: OnceLock<BTreeSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORD_DATA
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect()
    })
}

pub fn is_stopword(w: &str) -> bool {
    stopwords().contains(w)
}

/// Lowercased alphanumeric runs, stopwords kept.
pub fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Index terms: [`words`] without stopwords.
pub fn tokenize(text: &str) -> Vec<String> {
    words(text)
        .into_iter()
        .filter(|w| !is_stopword(w))
        .collect()
}

/// Distinct non-stopword words of four or more characters, first-seen order.
pub fn content_words(text: &str) -> Vec<String> {
    let mut seen = BTreeSet::new();
    tokenize(text)
        .into_iter()
        .filter(|w| w.chars().count() >= 4 && seen.insert(w.clone()))
        .collect()
}

/// Drops one trailing parenthetical, as in "Dunkirk (film)".
pub fn strip_disambiguation(title: &str) -> &str {
    let t = title.trim_end();
    match (t.ends_with(')'), t.rfind(" (")) {
        (true, Some(i)) if i > 0 => t[..i].trim_end(),
        _ => t,
    }
}

/// Case- and punctuation-insensitive title key.
pub fn title_key(title: &str) -> String {
    words(title).join(" ")
}
