use ohc_topics::embed::{cosine, sgns_gradients, sgns_loss, train_embeddings, EmbedConfig};
use ohc_topics::textprep::build_vocab;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sentences drawn from one of 50 four-word filler groups, so unrelated
/// words have distinct contexts. One sentence in three also carries the
/// adjacent pair `aaa bbb`.
fn cooccurrence_corpus() -> Vec<Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let groups: Vec<Vec<String>> = (0..50)
        .map(|g| (0..4).map(|i| format!("w{g:02}{i}")).collect())
        .collect();
    (0..3000)
        .map(|i| {
            let group = groups.choose(&mut rng).unwrap();
            let mut s: Vec<String> = (0..8)
                .map(|_| group.choose(&mut rng).unwrap().clone())
                .collect();
            if i % 3 == 0 {
                let at = rng.random_range(0..s.len());
                s.insert(at, "bbb".into());
                s.insert(at, "aaa".into());
            }
            s
        })
        .collect()
}

#[test]
fn cooccurring_words_are_closer_than_random_pairs() {
    let corpus = cooccurrence_corpus();
    let vocab = build_vocab(corpus.iter().map(Vec::as_slice), 1).unwrap();
    let config = EmbedConfig {
        dim: 50,
        epochs: 5,
        ..EmbedConfig::default()
    };
    let table = train_embeddings(&corpus, &vocab, &config).unwrap();
    let target = cosine(table.lookup("aaa"), table.lookup("bbb"));
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let words: Vec<&str> = vocab.tokens()[1..]
        .iter()
        .map(String::as_str)
        .filter(|w| w.starts_with('w'))
        .collect();
    let sims: Vec<f64> = (0..100)
        .map(|_| {
            let a = words.choose(&mut rng).unwrap();
            let mut b = words.choose(&mut rng).unwrap();
            while b == a {
                b = words.choose(&mut rng).unwrap();
            }
            cosine(table.lookup(a), table.lookup(b))
        })
        .collect();
    let mean = sims.iter().sum::<f64>() / sims.len() as f64;
    let sd =
        (sims.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (sims.len() - 1) as f64).sqrt();
    assert!(
        target > mean + 3.0 * sd,
        "cos(aaa,bbb) = {target:.3}, random pairs {mean:.3} ± {sd:.3}"
    );
}

#[test]
fn training_is_bit_identical_for_a_fixed_seed() {
    let corpus: Vec<Vec<String>> = cooccurrence_corpus().into_iter().take(300).collect();
    let vocab = build_vocab(corpus.iter().map(Vec::as_slice), 1).unwrap();
    let config = EmbedConfig {
        dim: 16,
        epochs: 2,
        ..EmbedConfig::default()
    };
    let a = train_embeddings(&corpus, &vocab, &config).unwrap();
    let b = train_embeddings(&corpus, &vocab, &config).unwrap();
    assert_eq!(a.as_slice(), b.as_slice());
    assert!(a.as_slice().iter().all(|x| x.is_finite()));
}

#[test]
fn sgns_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut vec = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };
    let center = vec(6);
    let context = vec(6);
    let negs: Vec<Vec<f64>> = (0..3).map(|_| vec(6)).collect();
    let neg_refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
    let (gc, gx, gn) = sgns_gradients(&center, &context, &neg_refs);
    let h = 1e-6;
    let rel = |a: f64, fd: f64| (a - fd).abs() / (a.abs() + 1e-8);
    for i in 0..6 {
        let mut p = center.clone();
        let mut m = center.clone();
        p[i] += h;
        m[i] -= h;
        let fd =
            (sgns_loss(&p, &context, &neg_refs) - sgns_loss(&m, &context, &neg_refs)) / (2.0 * h);
        assert!(rel(gc[i], fd) < 1e-4, "center[{i}]");
        let mut p = context.clone();
        let mut m = context.clone();
        p[i] += h;
        m[i] -= h;
        let fd =
            (sgns_loss(&center, &p, &neg_refs) - sgns_loss(&center, &m, &neg_refs)) / (2.0 * h);
        assert!(rel(gx[i], fd) < 1e-4, "context[{i}]");
        for (k, g) in gn.iter().enumerate() {
            let mut plus = negs.clone();
            let mut minus = negs.clone();
            plus[k][i] += h;
            minus[k][i] -= h;
            let pr: Vec<&[f64]> = plus.iter().map(Vec::as_slice).collect();
            let mr: Vec<&[f64]> = minus.iter().map(Vec::as_slice).collect();
            let fd =
                (sgns_loss(&center, &context, &pr) - sgns_loss(&center, &context, &mr)) / (2.0 * h);
            assert!(rel(g[i], fd) < 1e-4, "negative {k}[{i}]");
        }
    }
}
