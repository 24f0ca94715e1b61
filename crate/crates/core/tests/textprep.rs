use ohc_topics::textprep::{
    build_vocab, preprocess_text, preprocess_tokens, stem, tokenize_cased, Vocabulary,
};
use proptest::prelude::*;

#[test]
fn porter_reference_vectors() {
    let src = include_str!("fixtures/porter_vectors.tsv");
    let mut mismatches = Vec::new();
    let mut total = 0;
    for line in src.lines().filter(|l| !l.is_empty()) {
        let (word, expected) = line.split_once('\t').expect("two columns");
        total += 1;
        let got = stem(word);
        if got != expected {
            mismatches.push(format!("{word}: got {got}, expected {expected}"));
        }
    }
    assert!(total > 2000, "fixture has {total} pairs");
    assert!(
        mismatches.is_empty(),
        "{} mismatches:\n{}",
        mismatches.len(),
        mismatches.join("\n")
    );
}

#[test]
fn spec_stem_examples() {
    assert_eq!(stem("caresses"), "caress");
    assert_eq!(stem("ponies"), "poni");
    assert_eq!(stem("sky"), "sky");
}

fn text_strategy() -> impl Strategy<Value = String> {
    let word = prop_oneof![
        "[a-z]{1,10}",
        "[A-Z][a-z]{1,8}",
        Just("Dec.".to_string()),
        Just("$50".to_string()),
        Just("18th".to_string()),
        Just("1.2".to_string()),
        Just(":)".to_string()),
        Just("the".to_string()),
        Just("!".to_string()),
    ];
    prop::collection::vec(word, 0..25).prop_map(|w| w.join(" "))
}

proptest! {
    #[test]
    fn preprocessing_is_deterministic(text in text_strategy()) {
        prop_assert_eq!(preprocess_text(&text), preprocess_text(&text));
    }

    #[test]
    fn preprocessing_is_idempotent(text in text_strategy()) {
        let once = preprocess_text(&text);
        let twice = preprocess_tokens(&once);
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn stemming_never_grows_a_word(word in "[a-z]{1,15}") {
        prop_assert!(stem(&word).len() <= word.len());
    }

    #[test]
    fn tokenizer_keeps_all_non_space_characters(text in "[a-zA-Z0-9 .,!?$]{0,60}") {
        let joined: String = tokenize_cased(&text).concat();
        let expected: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        prop_assert_eq!(joined, expected);
    }

    #[test]
    fn vocabulary_tsv_round_trips(seqs in prop::collection::vec(prop::collection::vec("[a-z]{2,6}", 0..10), 0..20)) {
        let vocab = build_vocab(seqs.iter().map(Vec::as_slice), 1).unwrap();
        let back = Vocabulary::from_tsv(&vocab.to_tsv()).unwrap();
        prop_assert_eq!(vocab.tokens(), back.tokens());
        for s in &seqs {
            prop_assert_eq!(vocab.encode(s), back.encode(s));
        }
    }
}
