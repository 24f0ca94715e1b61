//! Word lists shipped with the crate.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

const STOPWORDS: &str = include_str!("../data/stopwords.txt");
const ABBREVIATIONS: &str = include_str!("../data/abbreviations.txt");
const GAZETTEER: &str = include_str!("../data/gazetteer.tsv");
const EMOTICONS: &str = include_str!("../data/emoticons.tsv");

fn lines(src: &str) -> impl Iterator<Item = &str> {
    src.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

pub fn stopwords() -> &'static HashSet<String> {
    static CELL: OnceLock<HashSet<String>> = OnceLock::new();
    CELL.get_or_init(|| lines(STOPWORDS).map(str::to_lowercase).collect())
}

pub fn is_stopword(token: &str) -> bool {
    stopwords().contains(token)
}

/// Lowercase abbreviations, each ending in a period.
pub fn abbreviations() -> &'static HashSet<String> {
    static CELL: OnceLock<HashSet<String>> = OnceLock::new();
    CELL.get_or_init(|| lines(ABBREVIATIONS).map(str::to_lowercase).collect())
}

pub fn is_abbreviation(word_with_period: &str) -> bool {
    abbreviations().contains(&word_with_period.to_lowercase())
}

/// Gazetteer entries keyed by their lowercase token sequence.
pub struct Gazetteer {
    pub entries: HashMap<Vec<String>, &'static str>,
    pub max_len: usize,
}

pub fn gazetteer() -> &'static Gazetteer {
    static CELL: OnceLock<Gazetteer> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut entries = HashMap::new();
        let mut max_len = 0;
        for line in lines(GAZETTEER) {
            let Some((surface, class)) = line.split_once('\t') else {
                continue;
            };
            let class: &'static str = match class.trim() {
                "PERSON" => "PERSON",
                "LOCATION" => "LOCATION",
                "ORGANIZATION" => "ORGANIZATION",
                other => panic!("unknown gazetteer class {other}"),
            };
            let key: Vec<String> = surface.split_whitespace().map(str::to_lowercase).collect();
            max_len = max_len.max(key.len());
            entries.insert(key, class);
        }
        Gazetteer { entries, max_len }
    })
}

/// `(surface form, code)` pairs, longest surface first.
pub fn emoticons() -> &'static [(String, String)] {
    static CELL: OnceLock<Vec<(String, String)>> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut v: Vec<(String, String)> = lines(EMOTICONS)
            .filter_map(|l| l.split_once('\t'))
            .map(|(s, c)| (s.to_string(), c.trim().to_string()))
            .collect();
        v.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0.cmp(&b.0)));
        v
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_lists_load() {
        assert!((170..=180).contains(&stopwords().len()));
        assert!(is_stopword("this"));
        assert!(!is_stopword("hope"));
        assert!(is_abbreviation("Dec."));
        assert!(gazetteer().max_len >= 5);
        assert!(emoticons().iter().any(|(s, c)| s == ":)" && c == "EMO_POS"));
    }
}
