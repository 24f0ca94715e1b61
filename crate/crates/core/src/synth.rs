//! Seeded synthetic data with known ground truth: keyword-triggered
//! sentence corpora for the classifiers, planted topic corpora for the
//! topic model, and a small raw forum corpus for end-to-end runs.

use chrono::{Duration, TimeZone, Utc};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::annotation::GoldEntry;
use crate::corpus::{Post, Sentence};
use crate::eval::AnnotatedSentence;
use crate::llda::LabeledDoc;
use crate::schema::{LabelSet, N_TOPICS};

const CONSONANTS: &[u8] = b"bdfgkmnprtvz";
const VOWELS: &[u8] = b"aou";

/// Distinct three-syllable pseudo-words. They contain no suffix the
/// stemmer strips and never collide with stopwords, so they survive
/// preprocessing unchanged.
pub fn pseudo_words(n: usize, rng: &mut impl Rng) -> Vec<String> {
    let syllables: Vec<String> = CONSONANTS
        .iter()
        .flat_map(|&c| {
            VOWELS
                .iter()
                .map(move |&v| format!("{}{}", c as char, v as char))
        })
        .collect();
    let mut all: Vec<String> = Vec::with_capacity(syllables.len().pow(3));
    for a in &syllables {
        for b in &syllables {
            for c in &syllables {
                all.push(format!("{a}{b}{c}"));
            }
        }
    }
    assert!(
        n <= all.len(),
        "at most {} pseudo-words available",
        all.len()
    );
    all.partial_shuffle(rng, n).0.to_vec()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeywordCorpusConfig {
    pub n_sentences: usize,
    pub n_labels: usize,
    pub keywords_per_label: usize,
    /// Keywords emitted per label carried by a sentence.
    pub keywords_per_mention: usize,
    pub filler_vocab: usize,
    pub filler_range: (usize, usize),
    /// Probability that a sentence carries two labels instead of one.
    pub second_label: f64,
    /// Probability that any token is replaced by a random filler word.
    pub noise: f64,
    pub sentences_per_post: usize,
    pub seed: u64,
}

impl Default for KeywordCorpusConfig {
    fn default() -> Self {
        KeywordCorpusConfig {
            n_sentences: 2000,
            n_labels: N_TOPICS,
            keywords_per_label: 10,
            keywords_per_mention: 2,
            filler_vocab: 300,
            filler_range: (3, 6),
            second_label: 0.25,
            noise: 0.1,
            sentences_per_post: 4,
            seed: 17,
        }
    }
}

/// A keyword-triggered corpus: each label owns a pool of keywords and a
/// sentence carrying the label mentions some of them among filler words.
#[derive(Debug, Clone)]
pub struct KeywordCorpus {
    pub sentences: Vec<AnnotatedSentence>,
    pub keywords: Vec<Vec<String>>,
    pub filler: Vec<String>,
}

pub fn keyword_corpus(cfg: &KeywordCorpusConfig) -> KeywordCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let words = pseudo_words(
        cfg.n_labels * cfg.keywords_per_label + cfg.filler_vocab,
        &mut rng,
    );
    let keywords: Vec<Vec<String>> = words[..cfg.n_labels * cfg.keywords_per_label]
        .chunks(cfg.keywords_per_label)
        .map(<[String]>::to_vec)
        .collect();
    let filler = words[cfg.n_labels * cfg.keywords_per_label..].to_vec();
    let per_post = cfg.sentences_per_post.max(1);
    let sentences = (0..cfg.n_sentences)
        .map(|i| {
            let first = rng.random_range(0..cfg.n_labels);
            let mut labels = LabelSet::from_indices([first]);
            if cfg.n_labels > 1 && rng.random::<f64>() < cfg.second_label {
                let mut second = rng.random_range(0..cfg.n_labels - 1);
                if second >= first {
                    second += 1;
                }
                labels.insert(second);
            }
            let mut tokens = Vec::new();
            for k in labels.iter() {
                for _ in 0..cfg.keywords_per_mention {
                    tokens.push(keywords[k].choose(&mut rng).cloned().unwrap_or_default());
                }
            }
            let n_filler = rng.random_range(cfg.filler_range.0..=cfg.filler_range.1);
            for _ in 0..n_filler {
                tokens.push(filler.choose(&mut rng).cloned().unwrap_or_default());
            }
            tokens.shuffle(&mut rng);
            for t in &mut tokens {
                if rng.random::<f64>() < cfg.noise {
                    *t = filler.choose(&mut rng).cloned().unwrap_or_default();
                }
            }
            let post_id = format!("s{:05}", i / per_post);
            AnnotatedSentence {
                sentence_id: Sentence::make_id(&post_id, i % per_post),
                post_id,
                tokens,
                labels,
            }
        })
        .collect();
    KeywordCorpus {
        sentences,
        keywords,
        filler,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedTopicsConfig {
    pub n_topics: usize,
    pub vocab_size: usize,
    /// Probability mass each topic puts on its own block of words.
    pub dominant_mass: f64,
    pub n_docs: usize,
    pub doc_length: usize,
    pub n_test: usize,
    pub test_length: usize,
    pub seed: u64,
}

impl Default for PlantedTopicsConfig {
    fn default() -> Self {
        PlantedTopicsConfig {
            n_topics: 4,
            vocab_size: 200,
            dominant_mass: 0.9,
            n_docs: 500,
            doc_length: 60,
            n_test: 200,
            test_length: 15,
            seed: 23,
        }
    }
}

/// Documents drawn from planted topic-word distributions, with the
/// distributions themselves for comparison.
#[derive(Debug, Clone)]
pub struct PlantedTopics {
    pub phi: Vec<Vec<f64>>,
    pub train: Vec<LabeledDoc>,
    pub test: Vec<LabeledDoc>,
}

fn sample_discrete(weights: &[f64], rng: &mut impl Rng) -> usize {
    let mut u = rng.random::<f64>() * weights.iter().sum::<f64>();
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

/// Topic `k` puts `dominant_mass` on the k-th contiguous block of the
/// vocabulary (random weights within the block) and spreads the rest
/// uniformly. Each document carries one or two topics mixed by a uniform
/// random proportion.
pub fn planted_topics(cfg: &PlantedTopicsConfig) -> PlantedTopics {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let block = cfg.vocab_size / cfg.n_topics;
    let phi: Vec<Vec<f64>> = (0..cfg.n_topics)
        .map(|k| {
            let raw: Vec<f64> = (0..block).map(|_| rng.random_range(0.5..1.5)).collect();
            let raw_sum: f64 = raw.iter().sum();
            let rest = (1.0 - cfg.dominant_mass) / (cfg.vocab_size - block) as f64;
            (0..cfg.vocab_size)
                .map(|w| {
                    if w / block == k && w < block * cfg.n_topics {
                        cfg.dominant_mass * raw[w % block] / raw_sum
                    } else {
                        rest
                    }
                })
                .collect()
        })
        .collect();
    let doc = |len: usize, rng: &mut ChaCha8Rng| {
        let first = rng.random_range(0..cfg.n_topics);
        let mut topics = vec![first];
        if rng.random::<bool>() {
            let second = (first + rng.random_range(1..cfg.n_topics)) % cfg.n_topics;
            topics.push(second);
        }
        let mix: f64 = if topics.len() == 2 {
            rng.random_range(0.3..0.7)
        } else {
            1.0
        };
        let tokens = (0..len)
            .map(|_| {
                let k = if topics.len() == 2 && rng.random::<f64>() >= mix {
                    topics[1]
                } else {
                    topics[0]
                };
                sample_discrete(&phi[k], rng) as u32
            })
            .collect();
        LabeledDoc {
            tokens,
            labels: LabelSet::from_indices(topics),
        }
    };
    let train = (0..cfg.n_docs)
        .map(|_| doc(cfg.doc_length, &mut rng))
        .collect();
    let test = (0..cfg.n_test)
        .map(|_| doc(cfg.test_length, &mut rng))
        .collect();
    PlantedTopics { phi, train, test }
}

/// Raw forum posts whose sentences are the keyword corpus's sentences,
/// one per line, plus the matching gold labels. Authors post on a spread
/// of days and some state a cancer stage in their signature.
pub fn forum_fixture(cfg: &KeywordCorpusConfig, n_authors: usize) -> (Vec<Post>, Vec<GoldEntry>) {
    let corpus = keyword_corpus(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let t0 = Utc
        .with_ymd_and_hms(2009, 6, 1, 9, 0, 0)
        .single()
        .unwrap_or_default();
    let stages = ["Stage II", "stage IIIa", "Stage IV", "stage 1"];
    let mut posts = Vec::new();
    let mut gold = Vec::new();
    let mut by_post: Vec<(String, Vec<&AnnotatedSentence>)> = Vec::new();
    for s in &corpus.sentences {
        match by_post.last_mut() {
            Some((id, v)) if *id == s.post_id => v.push(s),
            _ => by_post.push((s.post_id.clone(), vec![s])),
        }
    }
    for (i, (post_id, sentences)) in by_post.into_iter().enumerate() {
        let author = i % n_authors.max(1);
        let day = (i / n_authors.max(1)) as i64 * 3 + rng.random_range(0..3);
        let text: Vec<String> = sentences.iter().map(|s| s.tokens.join(" ")).collect();
        let signature =
            (author % 5 != 4).then(|| format!("Dx 2008, {}", stages[author % stages.len()]));
        posts.push(Post {
            post_id: post_id.clone(),
            thread_id: format!("t{}", i / 5),
            forum_id: "breast-cancer".into(),
            author_id: format!("u{author:03}"),
            created_at: t0 + Duration::days(day) + Duration::minutes(rng.random_range(0..600)),
            text: text.join("\n"),
            signature,
        });
        for s in sentences {
            gold.push(GoldEntry {
                sentence_id: s.sentence_id.clone(),
                text: None,
                labels: s.labels,
            });
        }
    }
    (posts, gold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textprep::preprocess_text;

    #[test]
    fn pseudo_words_survive_preprocessing() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let words = pseudo_words(500, &mut rng);
        let mut unique = words.clone();
        unique.sort();
        unique.dedup();
        assert_eq!(unique.len(), 500);
        for w in &words {
            assert_eq!(preprocess_text(w), vec![w.clone()], "{w}");
        }
    }

    #[test]
    fn keyword_corpus_shape() {
        let cfg = KeywordCorpusConfig {
            n_sentences: 200,
            ..KeywordCorpusConfig::default()
        };
        let c = keyword_corpus(&cfg);
        assert_eq!(c.sentences.len(), 200);
        assert!(c
            .sentences
            .iter()
            .all(|s| (1..=2).contains(&s.labels.len())));
        assert_eq!(keyword_corpus(&cfg).sentences, c.sentences);
        let clean = keyword_corpus(&KeywordCorpusConfig { noise: 0.0, ..cfg });
        for s in &clean.sentences {
            for k in s.labels.iter() {
                assert!(s.tokens.iter().any(|t| clean.keywords[k].contains(t)));
            }
        }
    }

    #[test]
    fn planted_topics_are_distributions() {
        let p = planted_topics(&PlantedTopicsConfig::default());
        for row in &p.phi {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(p.train.len(), 500);
        assert!(p.train.iter().all(|d| !d.labels.is_empty()));
    }
}
