//! Laws of the loss, the shared-parameter towers and the optimizer.

mod oracles;

use oracles::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use snasa_core::encoder::{cosine_similarity, encode, euclidean_energy, init_params, EncoderDims};
use snasa_core::trainer::*;
use snasa_core::{Dataset, LabelScheme, LabeledSentence, SentimentLabel, TrigramSequence};

fn small_dims() -> EncoderDims {
    EncoderDims::new(30, 6, 7, 10)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn loss_is_non_negative_and_zero_only_at_targets(c in -1.0f64..=1.0, m in 0.001f64..0.999, y in prop::bool::ANY) {
        let y = if y { 1 } else { -1 };
        let l = contrastive_loss(c, y, m).unwrap();
        prop_assert!(l >= 0.0);
        let zero_expected = (y == 1 && c == 1.0) || (y == -1 && c <= m);
        prop_assert_eq!(l == 0.0, zero_expected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn towers_are_symmetric_to_the_bit(
        seed in 0u64..1000,
        a in prop::collection::vec(0u32..30, 1..8),
        b in prop::collection::vec(0u32..30, 1..8),
        similar in prop::bool::ANY,
    ) {
        let params = random_params(small_dims(), seed, 0.6);
        let ea = encode(&TrigramSequence::new(a.clone(), "a"), &params).unwrap();
        let eb = encode(&TrigramSequence::new(b.clone(), "b"), &params).unwrap();
        prop_assert!(ea.values.iter().chain(&eb.values).all(|&v| v >= 0.0));
        prop_assert_eq!(
            cosine_similarity(&ea, &eb).unwrap().to_bits(),
            cosine_similarity(&eb, &ea).unwrap().to_bits()
        );
        prop_assert_eq!(
            euclidean_energy(&ea, &eb).unwrap().to_bits(),
            euclidean_energy(&eb, &ea).unwrap().to_bits()
        );
        let label = if similar { PairLabel::Similar } else { PairLabel::Dissimilar };
        let margin = Margin::new(0.05).unwrap();
        let (mut g1, mut g2) = (Gradients::zeros(params.dims()), Gradients::zeros(params.dims()));
        let l1 = backward_pair(&make_pair(a.clone(), b.clone(), label), &params, margin, &mut g1).unwrap();
        let l2 = backward_pair(&make_pair(b, a, label), &params, margin, &mut g2).unwrap();
        prop_assert_eq!(l1.to_bits(), l2.to_bits());
        prop_assert_eq!(g1, g2);
    }
}

fn dataset(name: &str, labels: &[SentimentLabel]) -> Dataset {
    Dataset::new(
        name,
        LabelScheme::ThreeClass,
        labels
            .iter()
            .enumerate()
            .map(|(i, &l)| LabeledSentence::new(format!("{name}{i}"), "w", l, name))
            .collect(),
    )
    .unwrap()
}

fn random_labels(rng: &mut impl Rng, n: usize) -> Vec<SentimentLabel> {
    let classes = LabelScheme::ThreeClass.classes();
    (0..n).map(|_| classes[rng.gen_range(0..3)]).collect()
}

#[test]
fn ratio_one_balances_similar_and_dissimilar_pairs() {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let mut configs = 0;
    while configs < 20 {
        let (np, nr) = (rng.gen_range(1..40), rng.gen_range(2..60));
        let poor = dataset("p", &random_labels(&mut rng, np));
        let rich = dataset("r", &random_labels(&mut rng, nr));
        let positives = rng.gen_range(1..6);
        let Ok(pairs) = generate_pairs(&poor, &rich, 1, positives, configs) else {
            // Unsatisfiable draws (a class missing on the rich side) are skipped.
            continue;
        };
        let similar = pairs.iter().filter(|p| p.label == PairLabel::Similar).count();
        assert_eq!(similar, pairs.len() - similar);
        assert_eq!(pairs.len(), 2 * positives * poor.len());
        configs += 1;
    }
}

#[test]
fn a_tiny_sgd_step_never_raises_the_pair_loss() {
    let mut rng = ChaCha20Rng::seed_from_u64(17);
    let margin = Margin::DEFAULT;
    let mut decreased = 0;
    for trial in 0..100u64 {
        let params = random_params(small_dims(), 1000 + trial, 0.5);
        let label = if trial % 2 == 0 { PairLabel::Similar } else { PairLabel::Dissimilar };
        let pair = make_pair(random_ids(&mut rng, 30, 1, 8), random_ids(&mut rng, 30, 1, 8), label);
        let pref = PairRef { poor: &pair.poor.ids, rich: &pair.rich.ids, label };
        let before = pair_loss(pref, &params, margin).unwrap();
        let mut grads = Gradients::zeros(params.dims());
        backward_pair(&pair, &params, margin, &mut grads).unwrap();
        let mut stepped = params.clone();
        Optimizer::new(OptimizerKind::Sgd, 1e-4, 0.0, None)
            .step(&mut stepped, &grads)
            .unwrap();
        let after = pair_loss(pref, &stepped, margin).unwrap();
        assert!(after <= before, "trial {trial}: {before} -> {after}");
        if after < before {
            decreased += 1;
        }
    }
    assert!(decreased > 0);
}

#[test]
fn permuting_a_batch_barely_moves_its_total() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let params = init_params(small_dims(), 4).unwrap();
    for _ in 0..20 {
        let mut pairs: Vec<TrainingPair> = (0..16)
            .map(|i| {
                let label = if i % 2 == 0 { PairLabel::Similar } else { PairLabel::Dissimilar };
                make_pair(random_ids(&mut rng, 30, 1, 8), random_ids(&mut rng, 30, 1, 8), label)
            })
            .collect();
        let (t1, _) = batch_loss(&PairBatch::new(pairs.clone()), &params, Margin::DEFAULT).unwrap();
        pairs.reverse();
        pairs.rotate_left(5);
        let (t2, _) = batch_loss(&PairBatch::new(pairs), &params, Margin::DEFAULT).unwrap();
        assert!((t1 - t2).abs() <= 1e-9 * t1.abs().max(f64::MIN_POSITIVE));
    }
}

#[test]
fn embedding_dimension_defaults_to_128() {
    assert_eq!(EncoderDims::with_vocab(10).output_dim, 128);
    assert_eq!(TrainConfig::default().output_dim, 128);
}
