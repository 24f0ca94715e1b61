//! The fixed topic inventory and multi-label sets over it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Number of topics in the schema.
pub const N_TOPICS: usize = 11;

/// One of the eleven discussion topics.
///
/// Variants are declared in schema order (alphabetical by code); the
/// discriminant is the label index used by every classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Topic {
    Altr,
    Dail,
    Diag,
    Find,
    Hsys,
    Misc,
    Nutr,
    Pers,
    Rsrc,
    Test,
    Trea,
}

impl Topic {
    pub const ALL: [Topic; N_TOPICS] = [
        Topic::Altr,
        Topic::Dail,
        Topic::Diag,
        Topic::Find,
        Topic::Hsys,
        Topic::Misc,
        Topic::Nutr,
        Topic::Pers,
        Topic::Rsrc,
        Topic::Test,
        Topic::Trea,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Topic> {
        Topic::ALL.get(index).copied()
    }

    /// Four-letter code, e.g. `TREA`.
    pub fn code(self) -> &'static str {
        match self {
            Topic::Altr => "ALTR",
            Topic::Dail => "DAIL",
            Topic::Diag => "DIAG",
            Topic::Find => "FIND",
            Topic::Hsys => "HSYS",
            Topic::Misc => "MISC",
            Topic::Nutr => "NUTR",
            Topic::Pers => "PERS",
            Topic::Rsrc => "RSRC",
            Topic::Test => "TEST",
            Topic::Trea => "TREA",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Topic::Altr => "Alternative",
            Topic::Dail => "Daily",
            Topic::Diag => "Diagnosis",
            Topic::Find => "Finding",
            Topic::Hsys => "Health Systems",
            Topic::Misc => "Miscellaneous",
            Topic::Nutr => "Nutrition",
            Topic::Pers => "Personal",
            Topic::Rsrc => "Resources",
            Topic::Test => "Test",
            Topic::Trea => "Treatment",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Topic::Altr => "alternative and integrative medicine",
            Topic::Dail => "daily cancer-related experience",
            Topic::Diag => "diagnoses, measurements, and results of tests",
            Topic::Find => "health finding, sign, symptom or side effect",
            Topic::Hsys => {
                "health systems patients interact with, including nurses, doctors, \
                 practices, hospitals, and insurance companies"
            }
            Topic::Misc => {
                "greetings, uninformative sentence, or any sentence which does not fit \
                 under any other label"
            }
            Topic::Nutr => "nutrition",
            Topic::Pers => "personal information",
            Topic::Rsrc => "link, pointer, or quote towards an external information resource",
            Topic::Test => "testing procedures (but not results of tests)",
            Topic::Trea => "treatments, including procedures, medications and therapeutic devices",
        }
    }
}

impl fmt::Display for Topic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Topic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Topic::ALL
            .iter()
            .copied()
            .find(|t| t.code().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }
}

impl Serialize for Topic {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for Topic {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Static view of the schema: the ordered label list.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TopicSchema;

impl TopicSchema {
    pub fn labels(&self) -> &'static [Topic; N_TOPICS] {
        &Topic::ALL
    }

    pub fn len(&self) -> usize {
        N_TOPICS
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn codes(&self) -> impl Iterator<Item = &'static str> {
        Topic::ALL.iter().map(|t| t.code())
    }
}

/// A set of label indices, stored as a bitset.
///
/// Indices address the schema order, but classifiers trained on fewer
/// labels (synthetic benchmarks, gradient checks) use the same type with a
/// smaller label count. Up to 16 labels fit.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabelSet(u16);

impl LabelSet {
    pub const MAX_LABELS: usize = 16;

    pub const fn empty() -> Self {
        LabelSet(0)
    }

    /// All of the first `n` labels.
    pub fn full(n: usize) -> Self {
        assert!(
            n <= Self::MAX_LABELS,
            "label count {n} exceeds bitset width"
        );
        if n == Self::MAX_LABELS {
            LabelSet(u16::MAX)
        } else {
            LabelSet((1u16 << n) - 1)
        }
    }

    pub fn all_topics() -> Self {
        Self::full(N_TOPICS)
    }

    pub fn from_bits(bits: u16) -> Self {
        LabelSet(bits)
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        let mut set = LabelSet::empty();
        for i in indices {
            set.insert(i);
        }
        set
    }

    pub fn from_topics<I: IntoIterator<Item = Topic>>(topics: I) -> Self {
        Self::from_indices(topics.into_iter().map(Topic::index))
    }

    /// Parses a comma- or whitespace-separated list of codes.
    pub fn parse_codes(s: &str) -> Result<Self, Error> {
        let mut set = LabelSet::empty();
        for code in s.split(|c: char| c == ',' || c.is_whitespace()) {
            if code.is_empty() {
                continue;
            }
            set.insert_topic(code.parse()?);
        }
        Ok(set)
    }

    pub fn insert(&mut self, index: usize) {
        assert!(index < Self::MAX_LABELS, "label index {index} out of range");
        self.0 |= 1 << index;
    }

    pub fn insert_topic(&mut self, topic: Topic) {
        self.insert(topic.index());
    }

    pub fn remove(&mut self, index: usize) {
        if index < Self::MAX_LABELS {
            self.0 &= !(1 << index);
        }
    }

    pub fn contains(self, index: usize) -> bool {
        index < Self::MAX_LABELS && self.0 & (1 << index) != 0
    }

    pub fn contains_topic(self, topic: Topic) -> bool {
        self.contains(topic.index())
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: LabelSet) -> LabelSet {
        LabelSet(self.0 | other.0)
    }

    pub fn intersection(self, other: LabelSet) -> LabelSet {
        LabelSet(self.0 & other.0)
    }

    pub fn difference(self, other: LabelSet) -> LabelSet {
        LabelSet(self.0 & !other.0)
    }

    /// Label indices in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..Self::MAX_LABELS).filter(move |&i| self.contains(i))
    }

    /// Schema topics in the set; indices beyond the schema are skipped.
    pub fn topics(self) -> impl Iterator<Item = Topic> {
        self.iter().filter_map(Topic::from_index)
    }

    pub fn codes(self) -> Vec<&'static str> {
        self.topics().map(Topic::code).collect()
    }
}

impl fmt::Debug for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set()
            .entries(self.iter().map(|i| match Topic::from_index(i) {
                Some(t) => t.code().to_string(),
                None => format!("#{i}"),
            }))
            .finish()
    }
}

impl fmt::Display for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.codes().join(","))
    }
}

impl FromIterator<Topic> for LabelSet {
    fn from_iter<I: IntoIterator<Item = Topic>>(iter: I) -> Self {
        LabelSet::from_topics(iter)
    }
}

impl Serialize for LabelSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.topics().map(Topic::code))
    }
}

impl<'de> Deserialize<'de> for LabelSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let codes = Vec::<Topic>::deserialize(deserializer)?;
        Ok(LabelSet::from_topics(codes))
    }
}
