//! Forum posts, sentence segmentation, author profiles and the on-disk
//! corpus archive.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::Range;
use std::path::Path;
use std::sync::OnceLock;

use chrono::{DateTime, SubsecRound, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resources;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub post_id: String,
    pub thread_id: String,
    pub forum_id: String,
    pub author_id: String,
    pub created_at: DateTime<Utc>,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signature: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub sentence_id: String,
    pub post_id: String,
    pub index: usize,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<String>>,
}

impl Sentence {
    pub fn make_id(post_id: &str, index: usize) -> String {
        format!("{post_id}:{index}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CancerStage {
    Stage0,
    StageI,
    StageII,
    StageIII,
    StageIV,
    Unknown,
}

impl CancerStage {
    pub const KNOWN: [CancerStage; 5] = [
        CancerStage::Stage0,
        CancerStage::StageI,
        CancerStage::StageII,
        CancerStage::StageIII,
        CancerStage::StageIV,
    ];

    pub fn is_known(self) -> bool {
        self != CancerStage::Unknown
    }

    pub fn label(self) -> &'static str {
        match self {
            CancerStage::Stage0 => "0",
            CancerStage::StageI => "I",
            CancerStage::StageII => "II",
            CancerStage::StageIII => "III",
            CancerStage::StageIV => "IV",
            CancerStage::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorInfo {
    pub author_id: String,
    pub first_activity: DateTime<Utc>,
    pub stage: CancerStage,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub records: usize,
    pub malformed: usize,
    pub duplicates: usize,
}

/// An immutable collection of posts with their sentences and author index.
///
/// Sentences are stored grouped by post, in post order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    posts: Vec<Post>,
    sentences: Vec<Sentence>,
    authors: BTreeMap<String, AuthorInfo>,
    post_index: HashMap<String, usize>,
    sentence_ranges: Vec<Range<usize>>,
    sentence_index: HashMap<String, usize>,
}

impl Corpus {
    /// Builds a corpus from already-validated posts (unique ids),
    /// segmenting each post into sentences.
    pub fn from_posts(posts: Vec<Post>) -> Self {
        let mut sentences = Vec::new();
        for post in &posts {
            let text = substitute_emoticons(&post.text);
            for (index, s) in split_sentences(&text).into_iter().enumerate() {
                sentences.push(Sentence {
                    sentence_id: Sentence::make_id(&post.post_id, index),
                    post_id: post.post_id.clone(),
                    index,
                    text: s,
                    tokens: None,
                });
            }
        }
        let authors = index_authors(&posts);
        Self::assemble(posts, sentences, authors).expect("sentences derived from posts")
    }

    fn assemble(
        posts: Vec<Post>,
        sentences: Vec<Sentence>,
        authors: BTreeMap<String, AuthorInfo>,
    ) -> Result<Self> {
        let post_index: HashMap<String, usize> = posts
            .iter()
            .enumerate()
            .map(|(i, p)| (p.post_id.clone(), i))
            .collect();
        let mut sentence_ranges = vec![0..0; posts.len()];
        let mut sentence_index = HashMap::with_capacity(sentences.len());
        let mut last_post: Option<usize> = None;
        for (i, s) in sentences.iter().enumerate() {
            let p = *post_index.get(&s.post_id).ok_or_else(|| {
                Error::format("sentence", i + 1, format!("unknown post {}", s.post_id))
            })?;
            if last_post.is_some_and(|lp| lp > p) {
                return Err(Error::format(
                    "sentence",
                    i + 1,
                    "sentences out of post order",
                ));
            }
            let range = &mut sentence_ranges[p];
            if range.start == range.end {
                if s.index != 0 {
                    return Err(Error::format("sentence", i + 1, "indices must start at 0"));
                }
                *range = i..i + 1;
            } else {
                if range.end != i || s.index != range.len() {
                    return Err(Error::format(
                        "sentence",
                        i + 1,
                        "indices must be contiguous",
                    ));
                }
                range.end = i + 1;
            }
            last_post = Some(p);
            sentence_index.insert(s.sentence_id.clone(), i);
        }
        for p in &posts {
            if !authors.contains_key(&p.author_id) {
                return Err(Error::format(
                    "author",
                    0,
                    format!("missing author {}", p.author_id),
                ));
            }
        }
        Ok(Corpus {
            posts,
            sentences,
            authors,
            post_index,
            sentence_ranges,
            sentence_index,
        })
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn authors(&self) -> &BTreeMap<String, AuthorInfo> {
        &self.authors
    }

    pub fn post(&self, post_id: &str) -> Option<&Post> {
        self.post_index.get(post_id).map(|&i| &self.posts[i])
    }

    pub fn sentence(&self, sentence_id: &str) -> Option<&Sentence> {
        self.sentence_index
            .get(sentence_id)
            .map(|&i| &self.sentences[i])
    }

    pub fn sentences_of(&self, post_id: &str) -> &[Sentence] {
        match self.post_index.get(post_id) {
            Some(&i) => &self.sentences[self.sentence_ranges[i].clone()],
            None => &[],
        }
    }

    pub fn author(&self, author_id: &str) -> Option<&AuthorInfo> {
        self.authors.get(author_id)
    }

    /// Replaces each sentence's token list; `tokens` is parallel to
    /// [`Corpus::sentences`].
    pub fn with_tokens(mut self, tokens: Vec<Vec<String>>) -> Result<Self> {
        if tokens.len() != self.sentences.len() {
            return Err(Error::LengthMismatch {
                left: self.sentences.len(),
                right: tokens.len(),
            });
        }
        for (s, t) in self.sentences.iter_mut().zip(tokens) {
            s.tokens = Some(t);
        }
        Ok(self)
    }

    /// Writes `posts.jsonl`, `sentences.jsonl` and `authors.jsonl` into `dir`.
    pub fn write_archive(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_jsonl(&dir.join("posts.jsonl"), &self.posts)?;
        write_jsonl(&dir.join("sentences.jsonl"), &self.sentences)?;
        write_jsonl(&dir.join("authors.jsonl"), self.authors.values())?;
        Ok(())
    }

    pub fn read_archive(dir: &Path) -> Result<Self> {
        let posts: Vec<Post> = read_jsonl(&dir.join("posts.jsonl"), "post")?;
        let sentences: Vec<Sentence> = read_jsonl(&dir.join("sentences.jsonl"), "sentence")?;
        let authors: Vec<AuthorInfo> = read_jsonl(&dir.join("authors.jsonl"), "author")?;
        let authors = authors
            .into_iter()
            .map(|a| (a.author_id.clone(), a))
            .collect();
        Self::assemble(posts, sentences, authors)
    }
}

fn index_authors(posts: &[Post]) -> BTreeMap<String, AuthorInfo> {
    // stage comes from the most recent signature that names one
    let mut latest_stage: HashMap<&str, (DateTime<Utc>, CancerStage)> = HashMap::new();
    let mut authors: BTreeMap<String, AuthorInfo> = BTreeMap::new();
    for p in posts {
        authors
            .entry(p.author_id.clone())
            .and_modify(|a| a.first_activity = a.first_activity.min(p.created_at))
            .or_insert_with(|| AuthorInfo {
                author_id: p.author_id.clone(),
                first_activity: p.created_at,
                stage: CancerStage::Unknown,
            });
        let stage = p
            .signature
            .as_deref()
            .map(parse_stage)
            .unwrap_or(CancerStage::Unknown);
        if stage.is_known() {
            let entry = latest_stage
                .entry(p.author_id.as_str())
                .or_insert((p.created_at, stage));
            if p.created_at >= entry.0 {
                *entry = (p.created_at, stage);
            }
        }
    }
    for (author, (_, stage)) in latest_stage {
        if let Some(a) = authors.get_mut(author) {
            a.stage = stage;
        }
    }
    authors
}

/// Reads one JSON post record per line. Malformed lines and duplicate
/// post ids are skipped and counted; the first occurrence of an id wins.
pub fn ingest_posts<R: BufRead>(source: R) -> Result<(Corpus, IngestStats)> {
    let mut stats = IngestStats::default();
    let mut seen = std::collections::HashSet::new();
    let mut posts = Vec::new();
    for line in source.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut post: Post = match serde_json::from_str(&line) {
            Ok(p) => p,
            Err(_) => {
                stats.malformed += 1;
                continue;
            }
        };
        if !seen.insert(post.post_id.clone()) {
            stats.duplicates += 1;
            continue;
        }
        post.created_at = post.created_at.trunc_subsecs(0);
        stats.records += 1;
        posts.push(post);
    }
    Ok((Corpus::from_posts(posts), stats))
}

pub fn ingest_file(path: &Path) -> Result<(Corpus, IngestStats)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_posts(BufReader::new(file))
}

pub(crate) fn write_jsonl<'a, T, I>(path: &Path, items: I) -> Result<()>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub(crate) fn read_jsonl<T: serde::de::DeserializeOwned>(
    path: &Path,
    what: &'static str,
) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| Error::format(what, i + 1, e.to_string()))?,
        );
    }
    Ok(out)
}

/// Replaces text emoticons with `EMO_POS`, `EMO_NEG` or `EMO_OTHER`.
///
/// Only whitespace-delimited emoticons are replaced (optionally followed by
/// sentence punctuation), so URLs such as `http://` are left alone.
pub fn substitute_emoticons(text: &str) -> String {
    static CHUNK: OnceLock<Regex> = OnceLock::new();
    let chunk = CHUNK.get_or_init(|| Regex::new(r"\S+").unwrap());
    chunk
        .replace_all(text, |caps: &regex::Captures| {
            let c = &caps[0];
            let core = c.trim_end_matches(['.', ',', '!', '?']);
            let (core, tail) = if core.is_empty() {
                (c, "")
            } else {
                (core, &c[core.len()..])
            };
            match resources::emoticons().iter().find(|(s, _)| s == core) {
                Some((_, code)) => format!("{code}{tail}"),
                None => c.to_string(),
            }
        })
        .into_owned()
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '”' | '’')
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '…')
}

/// Splits text into sentences.
///
/// Line breaks always end a sentence. Within a line, a run of `.`, `!` or
/// `?` (plus closing quotes/brackets) ends a sentence when followed by
/// whitespace and an upper-case letter or digit, unless the run is a single
/// period closing a known abbreviation or a one-letter initial.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.lines() {
        split_line(line, &mut out);
    }
    out
}

fn split_line(line: &str, out: &mut Vec<String>) {
    let chars: Vec<(usize, char)> = line.char_indices().collect();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        if !is_terminator(chars[i].1) {
            i += 1;
            continue;
        }
        let run_start = i;
        while i < chars.len() && is_terminator(chars[i].1) {
            i += 1;
        }
        let run_len = i - run_start;
        while i < chars.len() && is_closer(chars[i].1) {
            i += 1;
        }
        let end_byte = chars.get(i).map_or(line.len(), |c| c.0);
        let mut j = i;
        if j >= chars.len() || !chars[j].1.is_whitespace() {
            continue;
        }
        while j < chars.len() && chars[j].1.is_whitespace() {
            j += 1;
        }
        let Some(&(_, next)) = chars.get(j) else {
            continue;
        };
        let next = if matches!(next, '"' | '\'' | '(' | '“' | '‘') {
            chars.get(j + 1).map_or(next, |c| c.1)
        } else {
            next
        };
        if !(next.is_uppercase() || next.is_ascii_digit()) {
            continue;
        }
        if run_len == 1 && chars[run_start].1 == '.' {
            let word_start = chars[..run_start]
                .iter()
                .rposition(|c| c.1.is_whitespace())
                .map_or(0, |p| p + 1);
            let word: String = chars[word_start..=run_start].iter().map(|c| c.1).collect();
            let word = word.trim_start_matches(['(', '"', '\'']);
            let single_initial = word.len() == 2 && word.starts_with(|c: char| c.is_alphabetic());
            if single_initial || resources::is_abbreviation(word) {
                continue;
            }
        }
        push_trimmed(&line[start..end_byte], out);
        start = end_byte;
    }
    push_trimmed(&line[start..], out);
}

fn push_trimmed(s: &str, out: &mut Vec<String>) {
    let s = s.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
}

fn stage_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\bstage\s*(iv|iii|ii|i|0|1|2|3|4)[abc]?\b").unwrap())
}

/// Extracts the cancer stage from a free-text signature.
///
/// Case-insensitive; sub-stages collapse to their base stage (`IIA` ->
/// `StageII`); the first mention wins.
pub fn parse_stage(signature: &str) -> CancerStage {
    let Some(caps) = stage_regex().captures(signature) else {
        return CancerStage::Unknown;
    };
    match caps[1].to_ascii_lowercase().as_str() {
        "0" => CancerStage::Stage0,
        "i" | "1" => CancerStage::StageI,
        "ii" | "2" => CancerStage::StageII,
        "iii" | "3" => CancerStage::StageIII,
        "iv" | "4" => CancerStage::StageIV,
        _ => CancerStage::Unknown,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn record(id: &str, author: &str, day: i64, text: &str) -> String {
        let ts = Utc.with_ymd_and_hms(2014, 1, 1, 0, 0, 0).unwrap() + chrono::Duration::days(day);
        serde_json::json!({
            "post_id": id, "thread_id": "t", "forum_id": "f", "author_id": author,
            "created_at": ts.to_rfc3339(), "text": text,
        })
        .to_string()
    }

    #[test]
    fn ingest_one_record_two_sentences() {
        let src = record("p1", "a", 0, "Hi. Thanks.");
        let (corpus, stats) = ingest_posts(src.as_bytes()).unwrap();
        assert_eq!(stats.records, 1);
        assert_eq!(corpus.posts().len(), 1);
        let texts: Vec<_> = corpus.sentences().iter().map(|s| s.text.as_str()).collect();
        assert_eq!(texts, ["Hi.", "Thanks."]);
        assert_eq!(corpus.sentences()[1].sentence_id, "p1:1");
    }

    #[test]
    fn ingest_empty_source() {
        let (corpus, stats) = ingest_posts(&b""[..]).unwrap();
        assert!(corpus.posts().is_empty());
        assert_eq!(stats, IngestStats::default());
    }

    #[test]
    fn first_activity_is_minimum() {
        let src = [
            record("p2", "a", 5, "x"),
            record("p1", "a", 0, "x"),
            record("p3", "a", 9, "x"),
        ]
        .join("\n");
        let (corpus, _) = ingest_posts(src.as_bytes()).unwrap();
        let first = corpus.author("a").unwrap().first_activity;
        assert_eq!(first, Utc.with_ymd_and_hms(2014, 1, 1, 0, 0, 0).unwrap());
    }

    #[test]
    fn malformed_and_duplicate_lines_are_counted() {
        let src = [
            record("p1", "a", 0, "first"),
            "{not json".to_string(),
            record("p1", "b", 1, "second"),
            r#"{"post_id":"p9"}"#.to_string(),
        ]
        .join("\n");
        let (corpus, stats) = ingest_posts(src.as_bytes()).unwrap();
        assert_eq!(stats.records, 1);
        assert_eq!(stats.malformed, 2);
        assert_eq!(stats.duplicates, 1);
        assert_eq!(corpus.post("p1").unwrap().text, "first");
    }

    #[test]
    fn split_examples() {
        assert_eq!(
            split_sentences("Hope this helps, cheers"),
            ["Hope this helps, cheers"]
        );
        assert!(split_sentences("").is_empty());
        assert!(split_sentences("   \n ").is_empty());
        let test_example = "When I went in for my second mammogram on Dec. 18th, the radiologist told me I had to go get a biopsy.";
        assert_eq!(split_sentences(test_example).len(), 1);
        assert_eq!(
            split_sentences("Saw Dr. Smith today. She was kind!"),
            ["Saw Dr. Smith today.", "She was kind!"]
        );
        assert_eq!(
            split_sentences("Really?! Yes. 3 more weeks"),
            ["Really?!", "Yes.", "3 more weeks"]
        );
        assert_eq!(
            split_sentences("a 1.2 cm mass. ok then"),
            ["a 1.2 cm mass. ok then"]
        );
        assert_eq!(
            split_sentences("Line one\nLine two"),
            ["Line one", "Line two"]
        );
        assert_eq!(
            split_sentences("He said \"go.\" Then left"),
            ["He said \"go.\"", "Then left"]
        );
        assert_eq!(
            split_sentences("Susan G. Komen helps"),
            ["Susan G. Komen helps"]
        );
    }

    #[test]
    fn emoticons_become_codes() {
        assert_eq!(
            substitute_emoticons("thanks :) see you :("),
            "thanks EMO_POS see you EMO_NEG"
        );
        assert_eq!(substitute_emoticons("great :D!"), "great EMO_POS!");
        assert_eq!(
            substitute_emoticons("see http://x.org :/"),
            "see http://x.org EMO_OTHER"
        );
        assert_eq!(substitute_emoticons("EMO_POS"), "EMO_POS");
    }

    #[test]
    fn stage_examples() {
        assert_eq!(
            parse_stage("Dx 3/2010, Stage IIA, ER+"),
            CancerStage::StageII
        );
        assert_eq!(parse_stage("no disease info"), CancerStage::Unknown);
        assert_eq!(parse_stage("stage iv since 2012"), CancerStage::StageIV);
        assert_eq!(parse_stage("Stage 0 DCIS"), CancerStage::Stage0);
        assert_eq!(
            parse_stage("stage IIIB, later Stage IV"),
            CancerStage::StageIII
        );
        assert_eq!(parse_stage("this stage is hard"), CancerStage::Unknown);
        assert_eq!(parse_stage("STAGE Ic"), CancerStage::StageI);
    }

    #[test]
    fn author_stage_uses_latest_signature() {
        let mut a = serde_json::from_str::<serde_json::Value>(&record("p1", "a", 0, "x")).unwrap();
        a["signature"] = "Stage IIA".into();
        let mut b = serde_json::from_str::<serde_json::Value>(&record("p2", "a", 3, "y")).unwrap();
        b["signature"] = "stage IV".into();
        let src = format!("{b}\n{a}\n{}", record("p3", "a", 5, "z"));
        let (corpus, _) = ingest_posts(src.as_bytes()).unwrap();
        assert_eq!(corpus.author("a").unwrap().stage, CancerStage::StageIV);
    }

    #[test]
    fn archive_round_trip() {
        let src = [
            record("p1", "a", 0, "Hi there. Thanks :)"),
            record("p2", "b", 2, "Stage talk.\nMore."),
        ]
        .join("\n");
        let (corpus, _) = ingest_posts(src.as_bytes()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        corpus.write_archive(dir.path()).unwrap();
        let back = Corpus::read_archive(dir.path()).unwrap();
        assert_eq!(back, corpus);
        let (again, _) = ingest_file(&dir.path().join("posts.jsonl")).unwrap();
        assert_eq!(again, corpus);
        assert_eq!(corpus.sentences_of("p2").len(), 2);
    }
}
