mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use eqemb::corpus::{build_word_vocabulary, NegativeDistribution, NegativeSampler, RawToken, Stopwords, VocabParams};
use eqemb::eval::{early_stopping_controller, pseudo_log_likelihood_from_scores, softmax_log_likelihood, PseudoReading};
use eqemb::model::{decode_model, encode_model, EmbeddingTable, EquationProvenance, Mode, Model, ModelConfig, ObjectClass};
use eqemb::numeric::exact_mean;
use eqemb::retrieval::{top_k, word_query_vector, Metric};
use eqemb::slt::{parse_math, slt_tuples};

use common::{brute_force, within_one_ulp_of_mean, GradInstance, PARAMETERIZATIONS};

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6..1e6f64, -1.0..1.0f64, (-1e-6..1e-6f64)]
}

fn matrix(rows: usize, dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, rows * dim)
}

/// Random orthogonal matrix from Householder reflections of a seed.
fn orthogonal(dim: usize, seed: u64) -> Vec<Vec<f64>> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<Vec<f64>> = (0..dim).map(|i| (0..dim).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _ in 0..dim {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv < 1e-6 {
            continue;
        }
        for row in q.iter_mut() {
            let d: f64 = row.iter().zip(&v).map(|(a, b)| a * b).sum();
            for (x, vi) in row.iter_mut().zip(&v) {
                *x -= 2.0 * d / vv * vi;
            }
        }
    }
    q
}

fn rotate(q: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let dim = q.len();
    x.chunks(dim)
        .flat_map(|row| (0..dim).map(move |j| row.iter().zip(q).map(|(a, qr)| a * qr[j]).sum::<f64>()))
        .collect()
}

fn separated(scores: &[f64]) -> bool {
    scores.windows(2).all(|w| (w[0] - w[1]).abs() > 1e-9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn exact_mean_within_one_ulp(values in prop::collection::vec(finite(), 1..40)) {
        prop_assert!(within_one_ulp_of_mean(&values, exact_mean(&values)));
    }

    #[test]
    fn exact_mean_is_order_invariant(mut values in prop::collection::vec(finite(), 1..30)) {
        let m = exact_mean(&values);
        values.reverse();
        prop_assert_eq!(m.to_bits(), exact_mean(&values).to_bits());
    }

    #[test]
    fn gradients_match_finite_differences(seed in any::<u64>(), which in 0..PARAMETERIZATIONS.len()) {
        let inst = GradInstance::random(PARAMETERIZATIONS[which], &mut ChaCha8Rng::seed_from_u64(seed));
        let err = inst.relative_error(1e-5);
        prop_assert!(err < 1e-5, "relative error {}", err);
    }

    #[test]
    fn ranking_equals_brute_force(
        (rows, dim) in (1usize..40, 1usize..8),
        seed in any::<u64>(),
        k in 0usize..50,
        cosine in any::<bool>(),
    ) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m: Vec<f64> = (0..rows * dim).map(|_| f64::from(rng.random_range(-3i8..4)) / 2.0).collect();
        let q: Vec<f64> = (0..dim).map(|_| f64::from(rng.random_range(-3i8..4)) / 2.0).collect();
        let metric = if cosine { Metric::Cosine } else { Metric::Euclidean };
        let exclude = rng.random_bool(0.5).then(|| rng.random_range(0..rows as u32));
        let got: Vec<u32> = top_k(&q, &m, metric, k, exclude).iter().map(|h| h.id).collect();
        let want: Vec<u32> = brute_force(&q, &m, metric, k, exclude).iter().map(|h| h.id).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn cosine_ranking_ignores_query_scale(m in matrix(30, 4), q in prop::collection::vec(-5.0..5.0f64, 4), s in 0.001..1000.0f64) {
        let base = top_k(&q, &m, Metric::Cosine, 30, None);
        let scores: Vec<f64> = base.iter().map(|h| h.score).collect();
        prop_assume!(separated(&scores));
        let scaled: Vec<f64> = q.iter().map(|x| x * s).collect();
        let ids = |hits: Vec<eqemb::retrieval::Hit>| hits.into_iter().map(|h| h.id).collect::<Vec<_>>();
        prop_assert_eq!(ids(base), ids(top_k(&scaled, &m, Metric::Cosine, 30, None)));
    }

    #[test]
    fn euclidean_ranking_ignores_rotation(m in matrix(25, 5), seed in any::<u64>(), pick in 0u32..25) {
        let q = m[pick as usize * 5..pick as usize * 5 + 5].to_vec();
        let base = top_k(&q, &m, Metric::Euclidean, 25, Some(pick));
        let scores: Vec<f64> = base.iter().map(|h| h.score).collect();
        prop_assume!(separated(&scores));
        let rot = orthogonal(5, seed);
        let (rm, rq) = (rotate(&rot, &m), rotate(&rot, &q));
        let ids = |hits: Vec<eqemb::retrieval::Hit>| hits.into_iter().map(|h| h.id).collect::<Vec<_>>();
        prop_assert_eq!(ids(base), ids(top_k(&rq, &rm, Metric::Euclidean, 25, Some(pick))));
    }

    #[test]
    fn word_query_mean_of_duplicates(seed in any::<u64>(), id in 0u32..10) {
        let table = EmbeddingTable::random(ObjectClass::Word, 10, 6, 1.0, &mut ChaCha8Rng::seed_from_u64(seed));
        let one = word_query_vector(&table, &[id]).unwrap();
        prop_assert_eq!(&one[..], table.rho(id).unwrap());
        prop_assert_eq!(word_query_vector(&table, &[id, id]).unwrap(), one);
    }

    #[test]
    fn predictive_ll_is_a_log_probability(t in -30.0..30.0f64, negs in prop::collection::vec(-30.0..30.0f64, 1..20)) {
        let ll = softmax_log_likelihood(t, &negs);
        prop_assert!(ll <= 0.0 && ll.is_finite());
        for reading in [PseudoReading::Bernoulli, PseudoReading::Softmax] {
            let p = pseudo_log_likelihood_from_scores(t, &negs, reading);
            prop_assert!(p <= 0.0 && p.is_finite());
        }
    }

    #[test]
    fn early_stopping_rule(trace in prop::collection::vec(-10.0..0.0f64, 1..40), max in 1usize..25) {
        let (run, best) = early_stopping_controller(&trace, max);
        prop_assert!(run >= 1 && run <= max.min(trace.len()));
        prop_assert!((1..run.saturating_sub(1)).all(|i| trace[i] > trace[i - 1]));
        if run < max.min(trace.len()) {
            prop_assert!(run >= 2 && trace[run - 1] <= trace[run - 2]);
        }
        prop_assert!(best >= 1 && best <= run);
        prop_assert!(trace[..run].iter().all(|&s| s <= trace[best - 1]));
    }

    #[test]
    fn sampler_never_returns_excluded(freqs in prop::collection::vec(0u64..50, 2..30), exclude in 0u32..30, seed in any::<u64>()) {
        let sampler = NegativeSampler::new(&freqs, NegativeDistribution::Unigram);
        prop_assume!(sampler.can_sample_excluding(exclude));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for id in sampler.sample_excluding(&mut rng, exclude, 50) {
            prop_assert!(id != exclude);
            prop_assert!(freqs[id as usize] > 0);
        }
    }

    #[test]
    fn vocabulary_is_idempotent_without_rank_rules(
        docs in prop::collection::vec(prop::collection::vec("[a-f]{2,6}", 0..60), 1..6),
        min_tf in 1u64..4,
    ) {
        let params = VocabParams { min_tf, min_len: 3, top_stop: 0, abbrev_top: 0, abbrev_len: 2 };
        let stop = Stopwords::parse("abc\ndef\n");
        let lists: Vec<Vec<RawToken>> = docs.iter().map(|d| d.iter().cloned().map(RawToken::Word).collect()).collect();
        let Ok(vocab) = build_word_vocabulary(lists.iter().map(Vec::as_slice), &stop, &params) else {
            return Ok(());
        };
        let filtered: Vec<Vec<RawToken>> = lists
            .iter()
            .map(|l| l.iter().filter(|t| matches!(t, RawToken::Word(w) if vocab.id(w).is_some())).cloned().collect())
            .collect();
        prop_assume!(!vocab.is_empty());
        let again = build_word_vocabulary(filtered.iter().map(Vec::as_slice), &stop, &params).unwrap();
        prop_assert_eq!(again, vocab);
    }

    #[test]
    fn model_file_round_trip(seed in any::<u64>(), rows in 1usize..12, dim in 1usize..9, mode in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mode = Mode::ALL[mode];
        let model = Model {
            mode,
            provenance: EquationProvenance::for_mode(mode),
            config: ModelConfig { dim, seed, ..ModelConfig::default() },
            words: EmbeddingTable::random(ObjectClass::Word, rows, dim, 1.0, &mut rng),
            equations: EmbeddingTable::random(ObjectClass::Equation, rows + 1, dim, 1.0, &mut rng),
            units: (mode == Mode::EqEmbU).then(|| EmbeddingTable::random(ObjectClass::Unit, rows + 2, dim, 1.0, &mut rng)),
            eq_units: Vec::new(),
        };
        let bytes = encode_model(&model).unwrap();
        let back = decode_model(&bytes, std::path::Path::new("mem")).unwrap();
        prop_assert_eq!(encode_model(&back).unwrap(), bytes);
        let f32_exact = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| f64::from(*x as f32) == *y);
        prop_assert!(f32_exact(model.words.rho_matrix(), back.words.rho_matrix()));
        prop_assert!(f32_exact(model.equations.alpha_matrix(), back.equations.alpha_matrix()));
        prop_assert_eq!(back.mode, model.mode);
    }

    #[test]
    fn tuples_link_every_node_once(
        parts in prop::collection::vec(prop_oneof![
            Just("x".to_string()), Just("y^{2}".to_string()), Just("a_{i}".to_string()),
            Just("\\frac{p}{q}".to_string()), Just("\\sqrt{z}".to_string()), Just("+".to_string()),
            Just("\\sum_{k=1}^{n}".to_string()), Just("(u v)".to_string()),
        ], 1..8)
    ) {
        let latex = parts.join(" ");
        let tree = parse_math(&latex).unwrap();
        let tuples = slt_tuples(&tree, 1);
        prop_assert_eq!(tuples.len(), tree.node_count() - 1);
        prop_assert!(tuples.iter().all(|t| "nauow".contains(t.relation.code())));
    }
}
