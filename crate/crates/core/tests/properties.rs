mod common;

use lbdface::classifier::{classify, compare, similarity_map, ClassifierParams};
use lbdface::gallery::{orl_manifest, Gallery, GalleryEntry, GalleryModel, Role};
use lbdface::{FeatureVector, Plane};
use proptest::prelude::*;

fn fv_strategy(channels: usize, side: usize) -> impl Strategy<Value = FeatureVector> {
    prop::collection::vec(prop::collection::vec(0.0f64..4.0, side * side), channels).prop_map(
        move |planes| {
            FeatureVector::new(
                planes
                    .into_iter()
                    .map(|v| Plane::new(side, side, v).unwrap())
                    .collect(),
            )
            .unwrap()
        },
    )
}

fn entry(subject: &str, sample: u32, features: FeatureVector) -> GalleryEntry {
    GalleryEntry {
        subject: subject.to_string(),
        sample,
        condition: None,
        features,
    }
}

proptest! {
    #[test]
    fn difference_is_symmetric(a in fv_strategy(1, 5), b in fv_strategy(1, 5)) {
        let (pa, pb) = (&a.channels()[0], &b.channels()[0]);
        let ab = similarity_map(pa, pb, 1e-6).unwrap();
        let ba = similarity_map(pb, pa, 1e-6).unwrap();
        prop_assert_eq!(ab.values(), ba.values());
        prop_assert!(similarity_map(pa, pa, 1e-6).unwrap().values().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn score_monotone_in_theta(a in fv_strategy(2, 6), b in fv_strategy(2, 6), t1 in 0.0f64..2.0, t2 in 0.0f64..2.0) {
        let (lo, hi) = (t1.min(t2), t1.max(t2));
        let base = ClassifierParams::default();
        let s_lo = compare(&a, &b, &ClassifierParams { theta: lo, ..base }).unwrap();
        let s_hi = compare(&a, &b, &ClassifierParams { theta: hi, ..base }).unwrap();
        prop_assert!(s_lo.raw() <= s_hi.raw());
    }

    #[test]
    fn joint_scaling_preserves_ranking(
        probe in fv_strategy(2, 4),
        g in prop::collection::vec(fv_strategy(2, 4), 2..5),
        c in 0.5f64..8.0,
    ) {
        // Scale by a power of two so scaled values stay exactly representable.
        let c = c.log2().round().exp2();
        let params = ClassifierParams { epsilon: 1e-12, ..ClassifierParams::default() };
        let plain = Gallery::new(
            g.iter().enumerate().map(|(i, f)| entry(&format!("s{i}"), 1, f.clone())).collect(),
            GalleryModel::Exemplar,
        ).unwrap();
        let scaled = Gallery::new(
            plain.entries().iter().map(|e| entry(&e.subject, 1, e.features.scaled(c).unwrap())).collect(),
            GalleryModel::Exemplar,
        ).unwrap();
        let a = classify(&probe, &plain, &params).unwrap();
        let b = classify(&probe.scaled(c).unwrap(), &scaled, &params).unwrap();
        let names = |r: &lbdface::MatchResult| r.ranked().iter().map(|m| m.subject.clone()).collect::<Vec<_>>();
        prop_assert_eq!(names(&a), names(&b));
    }

    #[test]
    fn match_result_is_sorted_permutation(probe in fv_strategy(2, 4), g in prop::collection::vec(fv_strategy(2, 4), 1..8)) {
        let gallery = Gallery::new(
            g.into_iter().enumerate().map(|(i, f)| entry(&format!("s{}", i % 3), i as u32, f)).collect(),
            GalleryModel::Exemplar,
        ).unwrap();
        let result = classify(&probe, &gallery, &ClassifierParams::default()).unwrap();
        prop_assert_eq!(result.len(), gallery.len());
        let mut ids: Vec<_> = result.ranked().iter().map(|m| (m.subject.clone(), m.sample)).collect();
        for w in result.ranked().windows(2) {
            prop_assert!(
                w[0].score > w[1].score
                    || (w[0].score == w[1].score && (&w[0].subject, w[0].sample) < (&w[1].subject, w[1].sample))
            );
        }
        ids.sort();
        let expected: Vec<_> = gallery.entries().iter().map(|e| (e.subject.clone(), e.sample)).collect();
        prop_assert_eq!(ids, expected);
    }

    #[test]
    fn average_gallery_has_one_entry_per_subject(g in prop::collection::vec((0usize..4, fv_strategy(1, 3)), 1..10)) {
        let entries = g.into_iter().enumerate().map(|(i, (s, f))| entry(&format!("s{s}"), i as u32, f)).collect::<Vec<_>>();
        let mut subjects: Vec<_> = entries.iter().map(|e| e.subject.clone()).collect();
        subjects.sort();
        subjects.dedup();
        let avg = Gallery::assemble(entries, GalleryModel::Average).unwrap();
        prop_assert_eq!(avg.len(), subjects.len());
    }

    #[test]
    fn models_agree_with_one_sample_per_subject(probe in fv_strategy(2, 4), g in prop::collection::vec(fv_strategy(2, 4), 1..5)) {
        let entries: Vec<_> = g.into_iter().enumerate().map(|(i, f)| entry(&format!("s{i}"), 1, f)).collect();
        let params = ClassifierParams::default();
        let ex = classify(&probe, &Gallery::assemble(entries.clone(), GalleryModel::Exemplar).unwrap(), &params).unwrap();
        let avg = classify(&probe, &Gallery::assemble(entries, GalleryModel::Average).unwrap(), &params).unwrap();
        let key = |r: &lbdface::MatchResult| r.ranked().iter().map(|m| (m.subject.clone(), m.score)).collect::<Vec<_>>();
        prop_assert_eq!(key(&ex), key(&avg));
    }
}

#[test]
fn orl_manifest_covers_corpus() {
    let root = common::orl_dir();
    if !root.join("s1").is_dir() {
        eprintln!("skipping: ORL corpus not present at {}", root.display());
        return;
    }
    let rows = orl_manifest(&root, 5).unwrap();
    assert_eq!(rows.len(), 400);
    let mut subjects: Vec<_> = rows.iter().map(|r| r.subject.as_str()).collect();
    subjects.sort();
    subjects.dedup();
    assert_eq!(subjects.len(), 40);
    assert_eq!(rows.iter().filter(|r| r.role == Role::Gallery).count(), 200);
}
