use proptest::prelude::*;

use screenforge::fingerprint::{FingerprintConfig, FingerprintVector};
use screenforge::simcluster::{
    distance_matrix, hier_cluster, medoid_representatives, pick_representatives, string_similarity,
    tanimoto, Linkage,
};

fn fingerprints() -> impl Strategy<Value = Vec<FingerprintVector>> {
    let cfg = FingerprintConfig::new(2, 128, 0).unwrap();
    proptest::collection::vec(proptest::collection::btree_set(0usize..128, 0..40), 2..24).prop_map(
        move |sets| {
            sets.into_iter()
                .map(|s| FingerprintVector::from_bits(cfg, s))
                .collect()
        },
    )
}

fn linkage() -> impl Strategy<Value = Linkage> {
    prop::sample::select(vec![Linkage::Single, Linkage::Complete, Linkage::Average])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn tanimoto_is_a_bounded_symmetric_similarity(fps in fingerprints()) {
        for a in &fps {
            prop_assert_eq!(tanimoto(a, a).unwrap(), 1.0);
            for b in &fps {
                let t = tanimoto(a, b).unwrap();
                prop_assert!((0.0..=1.0).contains(&t));
                prop_assert_eq!(t, tanimoto(b, a).unwrap());
            }
        }
    }

    #[test]
    fn clusters_partition_the_items(fps in fingerprints(), link in linkage(), kf in 0.0f64..1.0) {
        let n = fps.len();
        let k = 1 + ((n - 1) as f64 * kf) as usize;
        let (_, dist) = distance_matrix(&fps).unwrap();
        let a = hier_cluster(&dist, link, k).unwrap();
        prop_assert_eq!(a.labels.len(), n);
        prop_assert!(a.sizes().iter().all(|&s| s > 0));
        prop_assert_eq!(a.sizes().iter().sum::<usize>(), n);
        // dense labels numbered by first appearance
        let mut next = 0;
        for &l in &a.labels {
            prop_assert!(l <= next);
            if l == next {
                next += 1;
            }
        }
        prop_assert_eq!(&a.representatives, &medoid_representatives(&a.labels, k, &dist));
        for (c, &r) in a.representatives.iter().enumerate() {
            prop_assert_eq!(a.labels[r], c);
        }
        let picks = pick_representatives(&a, k.min(3)).unwrap();
        prop_assert_eq!(picks.len(), k.min(3));
        prop_assert!(picks.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(pick_representatives(&a, k + 1).is_err());
        prop_assert_eq!(hier_cluster(&dist, link, k).unwrap(), a);
    }

    #[test]
    fn string_similarity_bounds(a in "[A-Za-z0-9()=#]{0,20}", b in "[A-Za-z0-9()=#]{0,20}") {
        let s = string_similarity(&a, &b);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(s, string_similarity(&b, &a));
        prop_assert_eq!(string_similarity(&a, &a), 1.0);
    }
}
