//! Tokenization, entity masking, stopword removal and stemming.
//!
//! The classifier-ready form of a sentence is produced by
//! [`preprocess_text`]: tokenize, mask entities, drop stopwords and
//! punctuation, then stem. Placeholder tokens (`NUMBER`, `DATE`, ...) are
//! upper-case; everything else is lower-case.

mod porter;
mod vocab;

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

pub use porter::stem;
pub use vocab::{build_vocab, Vocabulary, DEFAULT_MIN_COUNT, UNK};

use crate::corpus::Sentence;
use crate::resources;

/// Entity placeholders produced by [`mask_entities`].
pub const PLACEHOLDERS: [&str; 7] = [
    "NUMBER",
    "MONEY",
    "TIME",
    "DATE",
    "PERSON",
    "LOCATION",
    "ORGANIZATION",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub sentence_id: String,
    pub tokens: Vec<String>,
}

/// Placeholders and emoticon codes: tokens that are never lower-cased,
/// stemmed or re-masked.
pub fn is_placeholder(token: &str) -> bool {
    PLACEHOLDERS.contains(&token) || is_emoticon_code(token)
}

fn is_emoticon_code(token: &str) -> bool {
    token
        .strip_prefix("EMO_")
        .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|c| c.is_ascii_uppercase()))
}

fn token_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?x)
              (?:https?://|www\.)[^\s]*[^\s.,!?;:)\]]    # url
            | EMO_[A-Z]+                                 # emoticon code
            | [$£€]\d+(?:[.,]\d+)*                       # currency
            | \d{1,2}:\d{2}(?:[aApP][mM])?               # clock time
            | \d{1,2}/\d{1,2}/\d{2,4} | \d{1,2}/\d{4} | \d{1,2}/\d{1,2}  # numeric date
            | \d+(?:[.,]\d+)*(?:st|nd|rd|th|%|[aApP][mM])?  # number
            | (?:\p{L}\.){2,}                            # dotted acronym (e.g.)
            | \p{L}+(?:['’]\p{L}+)*                      # word
            | [^\s]                                      # anything else, one char
            ",
        )
        .expect("token regex")
    })
}

/// Splits text into tokens, preserving the original case.
pub fn tokenize_cased(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut skip_to = 0;
    for m in token_regex().find_iter(text) {
        if m.start() < skip_to {
            continue;
        }
        let mut tok = m.as_str().replace('’', "'");
        // absorb the period of a known abbreviation ("Dec." stays one token)
        if tok.chars().all(char::is_alphabetic)
            && bytes.get(m.end()) == Some(&b'.')
            && resources::is_abbreviation(&format!("{tok}."))
        {
            tok.push('.');
            skip_to = m.end() + 1;
        }
        out.push(tok);
    }
    out
}

/// Splits text into tokens and lower-cases alphabetic tokens. Numbers,
/// currency amounts and emoticon codes are kept whole.
pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_cased(text)
        .into_iter()
        .map(normalize_case)
        .collect()
}

fn normalize_case(token: String) -> String {
    if is_placeholder(&token) {
        token
    } else {
        token.to_lowercase()
    }
}

fn has_word_char(token: &str) -> bool {
    token.chars().any(char::is_alphanumeric)
}

fn is_capitalized(token: &str) -> bool {
    let mut chars = token.chars();
    chars.next().is_some_and(char::is_uppercase)
        && !is_placeholder(token)
        && token.chars().any(char::is_lowercase)
}

fn is_alpha(token: &str) -> bool {
    !token.is_empty() && token.chars().all(char::is_alphabetic)
}

const MONTHS: [&str; 24] = [
    "jan",
    "january",
    "feb",
    "february",
    "mar",
    "march",
    "apr",
    "april",
    "may",
    "jun",
    "june",
    "jul",
    "july",
    "aug",
    "august",
    "sep",
    "sept",
    "september",
    "oct",
    "october",
    "nov",
    "november",
    "dec",
    "december",
];
const AMBIGUOUS_MONTHS: [&str; 3] = ["may", "mar", "march"];
const TITLES: [&str; 8] = ["dr", "dr.", "mr", "mr.", "mrs", "mrs.", "ms", "ms."];
const ORG_SUFFIXES: [&str; 11] = [
    "hospital",
    "clinic",
    "center",
    "centre",
    "institute",
    "university",
    "foundation",
    "society",
    "association",
    "insurance",
    "pharmaceuticals",
];

fn month_of(token: &str) -> Option<&'static str> {
    let lower = token.to_lowercase();
    let bare = lower.strip_suffix('.').unwrap_or(&lower);
    MONTHS.iter().copied().find(|m| *m == bare)
}

fn number_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\d+(?:[.,]\d+)*(?:st|nd|rd|th|%)?$").unwrap())
}

fn is_number(token: &str) -> bool {
    number_regex().is_match(&token.to_lowercase())
}

fn is_day_or_year(token: &str) -> bool {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(?:\d{1,2}(?:st|nd|rd|th)?|\d{4})$").unwrap())
        .is_match(&token.to_lowercase())
}

fn is_ordinal_day(token: &str) -> bool {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\d{1,2}(?:st|nd|rd|th)$").unwrap())
        .is_match(&token.to_lowercase())
}

fn is_money(token: &str) -> bool {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[$£€]\d+(?:[.,]\d+)*$").unwrap())
        .is_match(token)
}

fn is_time(token: &str) -> bool {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(?:\d{1,2}:\d{2}(?:[ap]m)?|\d{1,2}[ap]m)$").unwrap())
        .is_match(&token.to_lowercase())
}

fn is_numeric_date(token: &str) -> bool {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^(?:\d{1,2}/\d{1,2}/\d{2,4}|\d{1,2}/\d{4}|\d{1,2}/\d{1,2})$").unwrap()
    })
    .is_match(token)
}

/// Tries each entity rule at `tokens[i]`; returns the placeholder and the
/// number of tokens it consumes.
fn match_entity(tokens: &[String], i: usize) -> Option<(&'static str, usize)> {
    let tok = tokens[i].as_str();
    let lower = |j: usize| tokens.get(j).map(|t| t.to_lowercase());

    // gazetteer, longest match first
    let gaz = resources::gazetteer();
    for len in (1..=gaz.max_len.min(tokens.len() - i)).rev() {
        let key: Vec<String> = tokens[i..i + len]
            .iter()
            .map(|t| t.to_lowercase())
            .collect();
        if let Some(class) = gaz.entries.get(&key) {
            return Some((class, len));
        }
    }

    // title followed by capitalized name(s)
    if TITLES.contains(&tok.to_lowercase().as_str()) {
        let mut n = 1;
        while tokens
            .get(i + n)
            .is_some_and(|t| is_alpha(t) && is_capitalized(t))
        {
            n += 1;
        }
        if n > 1 {
            return Some(("PERSON", n));
        }
    }

    // capitalized run closed by an organization head word
    if is_alpha(tok) && is_capitalized(tok) {
        let mut n = 0;
        while tokens
            .get(i + n)
            .is_some_and(|t| is_alpha(t) && is_capitalized(t))
        {
            n += 1;
        }
        if let Some(last) = (1..=n).rev().find(|&len| {
            len >= 2 && ORG_SUFFIXES.contains(&tokens[i + len - 1].to_lowercase().as_str())
        }) {
            return Some(("ORGANIZATION", last));
        }
    }

    // dates
    if is_numeric_date(tok) {
        return Some(("DATE", 1));
    }
    if let Some(month) = month_of(tok) {
        if tokens.get(i + 1).is_some_and(|t| is_day_or_year(t)) {
            let mut n = 2;
            if lower(i + 2).as_deref() == Some(",")
                && tokens
                    .get(i + 3)
                    .is_some_and(|t| t.len() == 4 && is_day_or_year(t))
            {
                n = 4;
            } else if tokens
                .get(i + 2)
                .is_some_and(|t| t.len() == 4 && is_day_or_year(t))
                && tokens[i + 1].len() < 4
            {
                n = 3;
            }
            return Some(("DATE", n));
        }
        // a lone month name counts only when written with a capital
        if is_capitalized(tok) && !AMBIGUOUS_MONTHS.contains(&month) {
            return Some(("DATE", 1));
        }
    }
    if is_ordinal_day(tok) {
        let mut j = i + 1;
        if lower(j).as_deref() == Some("of") {
            j += 1;
        }
        if tokens.get(j).is_some_and(|t| month_of(t).is_some()) {
            return Some(("DATE", j - i + 1));
        }
    }

    // times
    if is_time(tok) {
        return Some(("TIME", 1));
    }
    if is_number(tok) && matches!(lower(i + 1).as_deref(), Some("am" | "pm" | "a.m." | "p.m.")) {
        return Some(("TIME", 2));
    }

    // money before plain numbers
    if is_money(tok) {
        return Some(("MONEY", 1));
    }
    if is_number(tok)
        && matches!(
            lower(i + 1).as_deref(),
            Some("dollars" | "dollar" | "bucks" | "cents" | "usd")
        )
    {
        return Some(("MONEY", 2));
    }

    if is_number(tok) {
        return Some(("NUMBER", 1));
    }
    None
}

/// Replaces numbers, amounts, times, dates and named entities with
/// placeholders. Multi-token entities collapse to one placeholder, so the
/// output is never longer than the input.
///
/// Capitalization rules only fire on original-case tokens; the gazetteer
/// and numeric rules are case-insensitive.
pub fn mask_entities(tokens: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        if is_placeholder(&tokens[i]) {
            out.push(tokens[i].clone());
            i += 1;
            continue;
        }
        match match_entity(tokens, i) {
            Some((placeholder, consumed)) => {
                out.push(placeholder.to_string());
                i += consumed;
            }
            None => {
                out.push(tokens[i].clone());
                i += 1;
            }
        }
    }
    out
}

/// Porter stem applied until it no longer changes the token.
///
/// A few Porter outputs stem further on a second pass (`agreed -> agre ->
/// agr`); iterating keeps preprocessing idempotent.
pub fn stem_stable(token: &str) -> String {
    let mut current = token.to_string();
    for _ in 0..8 {
        let next = stem(&current);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

/// Mask, normalize case, drop punctuation and stopwords, stem.
pub fn preprocess_tokens(cased_tokens: &[String]) -> Vec<String> {
    mask_entities(cased_tokens)
        .into_iter()
        .map(normalize_case)
        .filter(|t| has_word_char(t) && !resources::is_stopword(t))
        .map(|t| {
            if is_placeholder(&t) {
                t
            } else {
                stem_stable(&t)
            }
        })
        .filter(|t| !resources::is_stopword(t))
        .collect()
}

pub fn preprocess_text(text: &str) -> Vec<String> {
    preprocess_tokens(&tokenize_cased(text))
}

pub fn preprocess_sentence(sentence: &Sentence) -> TokenSequence {
    TokenSequence {
        sentence_id: sentence.sentence_id.clone(),
        tokens: preprocess_text(&sentence.text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &[&str]) -> Vec<String> {
        s.iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(
            tokenize("I tried everything!"),
            toks(&["i", "tried", "everything", "!"])
        );
        assert!(tokenize("").is_empty());
        assert_eq!(
            tokenize("a 1.2 cm mucinous bc"),
            toks(&["a", "1.2", "cm", "mucinous", "bc"])
        );
        assert_eq!(tokenize("On Dec. 18th"), toks(&["on", "dec.", "18th"]));
        assert_eq!(tokenize("thanks EMO_POS"), toks(&["thanks", "EMO_POS"]));
        assert_eq!(
            tokenize("costs $1,200.50 now"),
            toks(&["costs", "$1,200.50", "now"])
        );
        assert_eq!(tokenize("I don't know"), toks(&["i", "don't", "know"]));
    }

    #[test]
    fn mask_examples() {
        assert_eq!(mask_entities(&toks(&["$50"])), toks(&["MONEY"]));
        assert_eq!(mask_entities(&toks(&["dec.", "18th"])), toks(&["DATE"]));
        assert_eq!(
            mask_entities(&toks(&["cancer", "treatment", "centers", "of", "america"])),
            toks(&["ORGANIZATION"])
        );
        assert_eq!(mask_entities(&toks(&["50", "dollars"])), toks(&["MONEY"]));
        assert_eq!(
            mask_entities(&toks(&["at", "10:30am"])),
            toks(&["at", "TIME"])
        );
        assert_eq!(mask_entities(&toks(&["3", "pm"])), toks(&["TIME"]));
        assert_eq!(
            mask_entities(&toks(&["dx", "3/2010"])),
            toks(&["dx", "DATE"])
        );
        assert_eq!(
            mask_entities(&toks(&["1.2", "cm"])),
            toks(&["NUMBER", "cm"])
        );
        assert_eq!(
            mask_entities(&toks(&["saw", "Dr.", "Smith"])),
            toks(&["saw", "PERSON"])
        );
        assert_eq!(
            mask_entities(&toks(&["saw", "dr.", "smith"])),
            toks(&["saw", "dr.", "smith"])
        );
        assert_eq!(
            mask_entities(&toks(&["at", "Good", "Samaritan", "Hospital"])),
            toks(&["at", "ORGANIZATION"])
        );
        assert_eq!(
            mask_entities(&toks(&["in", "New", "York"])),
            toks(&["in", "LOCATION"])
        );
        assert_eq!(
            mask_entities(&toks(&["you", "may", "need"])),
            toks(&["you", "may", "need"])
        );
        assert_eq!(
            mask_entities(&toks(&["in", "January"])),
            toks(&["in", "DATE"])
        );
        assert_eq!(
            mask_entities(&toks(&["june", "5", ",", "2014"])),
            toks(&["DATE"])
        );
        assert_eq!(
            mask_entities(&toks(&["18th", "of", "may"])),
            toks(&["DATE"])
        );
    }

    #[test]
    fn hsys_example_is_masked_by_gazetteer() {
        let out = preprocess_text(
            "I don't know where you are located, but I would start with the Cancer Treatment Centers of America.",
        );
        assert_eq!(out, toks(&["know", "locat", "start", "ORGANIZATION"]));
    }

    #[test]
    fn preprocess_examples() {
        assert_eq!(
            preprocess_text("Hope this helps, cheers"),
            toks(&["hope", "help", "cheer"])
        );
        assert!(preprocess_text("").is_empty());
        assert_eq!(
            preprocess_text("$50 on Dec. 18th"),
            toks(&["MONEY", "DATE"])
        );
    }

    #[test]
    fn stem_stable_reaches_fixed_point() {
        assert_eq!(stem("agreed"), "agre");
        assert_eq!(stem_stable("agreed"), "agr");
        assert_eq!(stem(&stem_stable("agreed")), "agr");
    }
}
