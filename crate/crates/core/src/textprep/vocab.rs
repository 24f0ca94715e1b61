use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::resources;

/// Token reserved for out-of-vocabulary words; always id 0.
pub const UNK: &str = "UNK";
pub const DEFAULT_MIN_COUNT: usize = 5;

/// Dense bijection between tokens and ids `0..V`, with `UNK` at id 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
    min_count: usize,
}

impl Vocabulary {
    fn from_tokens(tokens: Vec<String>, min_count: usize) -> Self {
        let ids = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary {
            tokens,
            ids,
            min_count,
        }
    }

    /// Builds a vocabulary from an explicit token list (UNK is prepended).
    pub fn from_list<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut list = vec![UNK.to_string()];
        for t in tokens {
            let t = t.into();
            if t != UNK && !list.contains(&t) {
                list.push(t);
            }
        }
        Self::from_tokens(list, 1)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    /// Id of `token`, or 0 (UNK) when absent.
    pub fn id(&self, token: &str) -> u32 {
        self.ids.get(token).copied().unwrap_or(0)
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<u32> {
        tokens.iter().map(|t| self.id(t)).collect()
    }

    /// `token TAB id` lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.tokens.iter().enumerate() {
            let _ = writeln!(out, "{t}\t{i}");
        }
        out
    }

    pub fn from_tsv(src: &str) -> Result<Self> {
        let mut tokens = Vec::new();
        for (line_no, line) in src.lines().enumerate() {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (tok, id) = line
                .rsplit_once('\t')
                .ok_or_else(|| Error::format("vocabulary", line_no + 1, "expected token<TAB>id"))?;
            let id: usize = id
                .parse()
                .map_err(|_| Error::format("vocabulary", line_no + 1, "bad id"))?;
            if id != tokens.len() {
                return Err(Error::format(
                    "vocabulary",
                    line_no + 1,
                    "ids must be dense and ordered",
                ));
            }
            tokens.push(tok.to_string());
        }
        if tokens.first().map(String::as_str) != Some(UNK) {
            return Err(Error::format("vocabulary", 1, "id 0 must be UNK"));
        }
        Ok(Self::from_tokens(tokens, 1))
    }
}

/// Tokens seen at least `min_count` times, stopwords excluded, ordered by
/// descending frequency then lexicographically. `UNK` is always id 0.
pub fn build_vocab<'a, I>(sequences: I, min_count: usize) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a [String]>,
{
    if min_count == 0 {
        return Err(Error::Config("min_count must be at least 1".into()));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for seq in sequences {
        for tok in seq {
            *counts.entry(tok.as_str()).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|&(t, c)| c >= min_count && t != UNK && !resources::is_stopword(t))
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let mut tokens = vec![UNK.to_string()];
    tokens.extend(kept.into_iter().map(|(t, _)| t.to_string()));
    Ok(Vocabulary::from_tokens(tokens, min_count))
}
