//! Reference-set classification and evaluation laws.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use snasa_core::classifier::{class_scores, classify, ClassReferences, EvalReport};
use snasa_core::{ClassificationPolicy, LabelScheme, ReferenceSet, SentimentLabel};
use snasa_core::encoder::SentimentEmbedding;

fn random_embedding(rng: &mut impl Rng, dim: usize) -> SentimentEmbedding {
    // Non-negative like real embeddings, occasionally sparse.
    let v = (0..dim)
        .map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..1.0) })
        .collect();
    SentimentEmbedding::new(v, "r")
}

fn random_refs(rng: &mut impl Rng, dim: usize, per_class: usize) -> ReferenceSet {
    let classes = LabelScheme::ThreeClass
        .classes()
        .iter()
        .map(|&label| ClassReferences {
            label,
            embeddings: (0..per_class).map(|_| random_embedding(rng, dim)).collect(),
        })
        .collect();
    ReferenceSet::new(LabelScheme::ThreeClass, classes, per_class, 0, 0).unwrap()
}

fn naive_cos(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let n = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n(a) == 0.0 || n(b) == 0.0 { 0.0 } else { d / (n(a) * n(b)) }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn meansim_is_invariant_to_scaling_all_references(seed in 0u64..10_000, factor in 1e-3f64..1e3) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let refs = random_refs(&mut rng, 6, 5);
        let scaled = refs.scaled(factor);
        for _ in 0..10 {
            let q = random_embedding(&mut rng, 6);
            prop_assert_eq!(
                classify(&q, &refs, ClassificationPolicy::MeanSim).unwrap(),
                classify(&q, &scaled, ClassificationPolicy::MeanSim).unwrap()
            );
        }
    }

    #[test]
    fn one_nearest_neighbour_is_the_most_similar_reference(seed in 0u64..10_000) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let refs = random_refs(&mut rng, 5, 4);
        let q = random_embedding(&mut rng, 5);
        let mut best: Option<(f64, SentimentLabel)> = None;
        for c in refs.classes() {
            for r in &c.embeddings {
                let s = naive_cos(&q.values, &r.values);
                // Strictly greater keeps the earliest class on ties.
                if best.is_none_or(|(b, _)| s > b) {
                    best = Some((s, c.label));
                }
            }
        }
        prop_assert_eq!(classify(&q, &refs, ClassificationPolicy::KnnVote(1)).unwrap(), best.unwrap().1);
    }

    #[test]
    fn a_closer_duplicate_never_flips_a_strict_meansim_winner(seed in 0u64..10_000) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let refs = random_refs(&mut rng, 4, 3);
        let q = random_embedding(&mut rng, 4);
        let scores = class_scores(&q, &refs, ClassificationPolicy::MeanSim).unwrap();
        let winner = classify(&q, &refs, ClassificationPolicy::MeanSim).unwrap();
        let wi = LabelScheme::ThreeClass.index_of(winner).unwrap();
        prop_assume!(scores.iter().enumerate().all(|(i, &s)| i == wi || s < scores[wi]));
        let class = &refs.classes()[wi];
        for r in &class.embeddings {
            if naive_cos(&q.values, &r.values) > scores[wi] {
                let grown = refs.with_extra_reference(winner, r.clone()).unwrap();
                prop_assert_eq!(classify(&q, &grown, ClassificationPolicy::MeanSim).unwrap(), winner);
            }
        }
    }

    #[test]
    fn report_metrics_recompute_from_the_confusion_matrix(
        cells in prop::collection::vec(0usize..20, 9),
    ) {
        prop_assume!(cells.iter().sum::<usize>() > 0);
        let confusion: Vec<Vec<usize>> = cells.chunks(3).map(|r| r.to_vec()).collect();
        let report = EvalReport::from_confusion(LabelScheme::ThreeClass, confusion.clone()).unwrap();
        let total: usize = cells.iter().sum();
        let diag: usize = (0..3).map(|i| confusion[i][i]).sum();
        prop_assert!((report.accuracy - diag as f64 / total as f64).abs() <= 1e-12);
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let (mut mp, mut mr, mut mf) = (0.0, 0.0, 0.0);
        #[allow(clippy::needless_range_loop)]
        for k in 0..3 {
            let tp = confusion[k][k];
            let predicted: usize = (0..3).map(|i| confusion[i][k]).sum();
            let actual: usize = confusion[k].iter().sum();
            let p = ratio(tp, predicted);
            let r = ratio(tp, actual);
            let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
            let m = &report.per_class[k];
            prop_assert!((m.precision - p).abs() <= 1e-12);
            prop_assert!((m.recall - r).abs() <= 1e-12);
            prop_assert!((m.f1 - f).abs() <= 1e-12);
            prop_assert_eq!(m.support, actual);
            mp += p / 3.0;
            mr += r / 3.0;
            mf += f / 3.0;
        }
        prop_assert!((report.macro_precision - mp).abs() <= 1e-12);
        prop_assert!((report.macro_recall - mr).abs() <= 1e-12);
        prop_assert!((report.macro_f1 - mf).abs() <= 1e-12);
    }
}

#[test]
fn classification_is_deterministic_across_policies() {
    let mut rng = ChaCha20Rng::seed_from_u64(0);
    let refs = random_refs(&mut rng, 8, 6);
    for policy in [
        ClassificationPolicy::MeanSim,
        ClassificationPolicy::KnnVote(5),
        ClassificationPolicy::ThresholdCount(0.5),
    ] {
        for _ in 0..50 {
            let q = random_embedding(&mut rng, 8);
            assert_eq!(classify(&q, &refs, policy).unwrap(), classify(&q, &refs.clone(), policy).unwrap());
        }
    }
}
