use std::sync::Arc;

use gkc_core::cohort::{cohort_labels, generate_synthetic_cohort, SyntheticConfig};
use gkc_core::embedding::{
    concat_modalities, load_embedding_dir, save_embedding_dir, token_slot, tokenize, Embedder, EmbeddingError,
    MockEmbedder, TaskHint,
};
use gkc_core::eval::{default_grid, make_cv_plan, run_cv, CvOptions};
use gkc_core::features::{assemble_matrix, enf_column_names, enf_spans, FeatureSource, Strategy, ENF_WIDTH};
use gkc_core::knowledge::KnowledgeBase;
use gkc_core::learn::ModelKind;
use gkc_core::profiles::{profile_corpus, read_profile_dir, write_profile_dir};
use gkc_core::{Modality, ModalitySubset};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_cohort(n: usize, seed: u64) -> Vec<gkc_core::cohort::PatientRecord> {
    let cfg = SyntheticConfig { n_patients: n, seed, ..SyntheticConfig::default() };
    generate_synthetic_cohort(&cfg, &KnowledgeBase::bundled()).unwrap().patients
}

#[test]
fn enf_layout_is_78_wide() {
    let kb = KnowledgeBase::bundled();
    assert_eq!(ENF_WIDTH, 78);
    let names = enf_column_names(&kb, ModalitySubset::FULL);
    assert_eq!(names.len(), 78);
    let spans = enf_spans(ModalitySubset::FULL);
    assert_eq!(spans.iter().map(|s| (s.start, s.end)).collect::<Vec<_>>(), vec![(0, 50), (50, 51), (51, 78)]);

    let cohort = small_cohort(30, 3);
    let train: Vec<usize> = (0..20).collect();
    let fm = assemble_matrix(&cohort, &kb, Strategy::ENF, ModalitySubset::FULL, &train, None).unwrap();
    assert_eq!(fm.matrix.cols(), 78);
    assert_eq!(fm.matrix.rows(), 30);
}

#[test]
fn lab_series_pooled_and_standardized_on_training_rows() {
    let kb = KnowledgeBase::bundled();
    let cohort = small_cohort(40, 5);
    let train: Vec<usize> = (0..25).collect();
    let fm = assemble_matrix(&cohort, &kb, Strategy::ENF, ModalitySubset::single(Modality::Lab), &train, None).unwrap();
    for test in 0..10 {
        let pooled: Vec<f64> = train
            .iter()
            .flat_map(|&i| (test * 5..test * 5 + 5).map(move |j| (i, j)))
            .map(|(i, j)| fm.matrix.get(i, j))
            .collect();
        let mean = pooled.iter().sum::<f64>() / pooled.len() as f64;
        let var = pooled.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (pooled.len() - 1) as f64;
        assert!(mean.abs() < 1e-9, "test {test} mean {mean}");
        assert!(var == 0.0 || (var - 1.0).abs() < 1e-9, "test {test} variance {var}");
    }
}

#[test]
fn med_block_ignores_event_order() {
    let kb = KnowledgeBase::bundled();
    let cohort = small_cohort(20, 11);
    let mut shuffled = cohort.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for p in &mut shuffled {
        p.meds.shuffle(&mut rng);
        p.mutations.shuffle(&mut rng);
    }
    let train: Vec<usize> = (0..20).collect();
    let subset = ModalitySubset::new(&[Modality::Gene, Modality::Med]).unwrap();
    let a = assemble_matrix(&cohort, &kb, Strategy::ENF, subset, &train, None).unwrap();
    let b = assemble_matrix(&shuffled, &kb, Strategy::ENF, subset, &train, None).unwrap();
    assert_eq!(a.matrix, b.matrix);
}

#[test]
fn text_strategy_without_embeddings_is_rejected() {
    let kb = KnowledgeBase::bundled();
    let cohort = small_cohort(10, 2);
    assert!(FeatureSource::new(&cohort, &kb, Strategy::GKC, ModalitySubset::FULL, None).is_err());
}

#[test]
fn no_test_row_read_before_scoring() {
    let kb = KnowledgeBase::bundled();
    let cohort = small_cohort(60, 9);
    let labels = cohort_labels(&cohort).unwrap();
    let plan = make_cv_plan(&labels, 5, 10, 9).unwrap();
    let source = FeatureSource::new(&cohort, &kb, Strategy::ENF, ModalitySubset::FULL, None).unwrap();
    let grid = default_grid(ModelKind::LogRegEN)[..2].to_vec();
    let run =
        run_cv(&plan, &source, ModelKind::LogRegEN, &grid, &CvOptions { audit: true, ..Default::default() }).unwrap();
    assert_eq!(run.audits.len(), 50);
    for a in &run.audits {
        assert!(a.leaked_rows.is_empty(), "repeat {} fold {}: {:?}", a.repeat, a.fold, a.leaked_rows);
        assert_eq!(a.fold_stats_rows + a.test_rows.len(), 60);
        assert_eq!(a.final_fit_rows, a.fold_stats_rows);
    }
}

fn embedder(dim: usize) -> Embedder {
    Embedder::new(Arc::new(MockEmbedder::new(dim, true)), 4)
}

proptest! {
    #[test]
    fn one_token_change_moves_at_most_two_coordinates(
        words in prop::collection::vec("[a-z]{2,8}", 3..30),
        pos in any::<prop::sample::Index>(),
        replacement in "[a-z]{2,8}",
    ) {
        let raw = MockEmbedder::new(64, false);
        let mut edited = words.clone();
        edited[pos.index(words.len())] = replacement;
        let a = raw.raw_counts(&words.join(" "));
        let b = raw.raw_counts(&edited.join(" "));
        let changed = a.iter().zip(&b).filter(|(x, y)| x != y).count();
        prop_assert!(changed <= 2);
    }

    #[test]
    fn mock_vectors_are_unit_norm(words in prop::collection::vec("[a-z]{1,8}", 1..40)) {
        let text = words.join(" ");
        let v = embedder(32).embed_text(&text, TaskHint::Classification).unwrap();
        let expected: f64 = {
            let mut counts = vec![0.0; 32];
            for t in tokenize(&text) {
                let (i, s) = token_slot(&t, 32);
                counts[i] += s;
            }
            counts.iter().map(|c| c * c).sum::<f64>()
        };
        if expected > 0.0 {
            prop_assert!((v.norm() - 1.0).abs() < 1e-12);
        } else {
            prop_assert_eq!(v.norm(), 0.0);
        }
    }
}

#[test]
fn embedding_cache_round_trips_through_disk() {
    let e = embedder(16);
    let texts = ["albumin declining over the window", "no actionable mutations", "strong opioid started"];
    let vs: Vec<_> = texts.iter().map(|t| e.embed_text(t, TaskHint::Classification).unwrap()).collect();
    e.embed_text(texts[0], TaskHint::Classification).unwrap();
    assert_eq!(e.provider_calls(), 3);

    let dir = tempfile::tempdir().unwrap();
    save_embedding_dir(dir.path(), &e.entries()).unwrap();
    let warm = embedder(16);
    warm.preload(load_embedding_dir(dir.path()).unwrap()).unwrap();
    for (t, v) in texts.iter().zip(&vs) {
        assert_eq!(&warm.embed_text(t, TaskHint::Classification).unwrap(), v);
    }
    assert_eq!(warm.provider_calls(), 0);
    let (joined, spans) = concat_modalities(&vs[0], &vs[1], &vs[2]).unwrap();
    assert_eq!(joined.len(), 48);
    assert_eq!(spans[2].start, 32);
}

#[test]
fn preload_with_wrong_dimension_fails() {
    let a = embedder(16);
    a.embed_text("some text", TaskHint::Classification).unwrap();
    let b = embedder(8);
    b.embed_text("other text", TaskHint::Classification).unwrap();
    let err = b.preload(a.entries()).unwrap_err();
    assert_eq!(err, EmbeddingError::DimensionMismatch { expected: 8, found: 16 });
    let v16 = a.embed_text("some text", TaskHint::Classification).unwrap();
    let v8 = b.embed_text("other text", TaskHint::Classification).unwrap();
    assert!(concat_modalities(&v16, &v8, &v16).is_err());
}

#[test]
fn profile_corpus_round_trips_and_is_deterministic() {
    let kb = KnowledgeBase::bundled();
    let cohort = small_cohort(12, 4);
    let a = profile_corpus(&cohort, &kb, true).unwrap();
    let b = profile_corpus(&cohort, &kb, true).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 36);
    let dir = tempfile::tempdir().unwrap();
    write_profile_dir(dir.path(), &a).unwrap();
    assert_eq!(read_profile_dir(dir.path()).unwrap().profiles, a.profiles);
    let lab = a.get(&cohort[0].patient_id, Modality::Lab).unwrap();
    assert!(lab.text.starts_with("Laboratory Profile"));
}
