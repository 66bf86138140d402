mod common;

use proptest::prelude::*;

use common::oracle_idsim;
use idsim_core::detect::EvalReport;
use idsim_core::kmeans::{assign, similarity_table, update_centroids};
use idsim_core::reduce::ReducedFeature;
use idsim_core::trace::read_matrix;
use idsim_core::{
    cluster, reduce_training, ClusterConfig, DuplicatePolicy, Idsim, Label, LabeledDataset,
    ProcessVector, Seeding, Vocabulary,
};

fn vec_pair() -> impl Strategy<Value = (Vec<u64>, Vec<u64>)> {
    (1usize..=64).prop_flat_map(|d| {
        (
            prop::collection::vec(0u64..=10, d),
            prop::collection::vec(0u64..=10, d),
        )
    })
}

fn dataset() -> impl Strategy<Value = LabeledDataset> {
    (1usize..=8, 2usize..=24).prop_flat_map(|(dims, n)| {
        (
            prop::collection::vec(prop::collection::vec(0u64..=6, dims), n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(move |(rows, flags)| {
                let vocab = Vocabulary::new((0..dims).map(|s| format!("c{s}"))).unwrap();
                let processes = rows
                    .into_iter()
                    .enumerate()
                    .map(|(i, r)| ProcessVector::new(format!("p{i}"), r))
                    .collect();
                let labels = flags
                    .into_iter()
                    .map(|f| if f { Label::Abnormal } else { Label::Normal })
                    .collect();
                LabeledDataset::new(vocab, processes, Some(labels)).unwrap()
            })
    })
}

fn f(v: &[u64]) -> Vec<f64> {
    common::as_f64(v)
}

proptest! {
    #[test]
    fn symmetric_and_bounded((a, b) in vec_pair()) {
        let m = Idsim::default();
        let ab = m.similarity(&f(&a), &f(&b)).unwrap().value();
        let ba = m.similarity(&f(&b), &f(&a)).unwrap().value();
        prop_assert_eq!(ab, ba);
        prop_assert!((0.5..=1.0).contains(&ab));
        if a != b {
            prop_assert!(ab < 1.0);
            let d = m.distance(&f(&a), &f(&b)).unwrap();
            prop_assert!(d > 0.0 && d <= 0.5);
        }
        prop_assert!((ab - oracle_idsim(&a, &b, 0.5)).abs() < 1e-12);
    }

    #[test]
    fn identity_is_exactly_one(a in prop::collection::vec(0u64..=10, 1..64)) {
        let m = Idsim::default();
        prop_assert_eq!(m.similarity(&f(&a), &f(&a)).unwrap().value(), 1.0);
    }

    #[test]
    fn permutation_invariant((a, b) in vec_pair(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut order: Vec<usize> = (0..a.len()).collect();
        order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let pa: Vec<u64> = order.iter().map(|&i| a[i]).collect();
        let pb: Vec<u64> = order.iter().map(|&i| b[i]).collect();
        let m = Idsim::default();
        let x = m.similarity(&f(&a), &f(&b)).unwrap().value();
        let y = m.similarity(&f(&pa), &f(&pb)).unwrap().value();
        prop_assert!((x - y).abs() < 1e-12);
    }

    #[test]
    fn wider_gap_never_raises_similarity((a, b) in vec_pair(), pick in any::<prop::sample::Index>(), bump in 1u64..5) {
        let s = pick.index(a.len());
        let mut wider = b.clone();
        if b[s] >= a[s] {
            wider[s] += bump;
        } else {
            wider[s] = b[s].saturating_sub(bump);
        }
        let m = Idsim::default();
        let before = m.similarity(&f(&a), &f(&b)).unwrap().value();
        let after = m.similarity(&f(&a), &f(&wider)).unwrap().value();
        if a[s] > 0 || b[s] > 0 {
            prop_assert!(after <= before + 1e-15);
        }
    }

    #[test]
    fn assignment_is_optimal_and_centroids_feasible(ds in dataset(), k in 1usize..=3) {
        prop_assume!(k <= ds.len());
        let cfg = ClusterConfig { k, ..ClusterConfig::default() };
        let model = cluster(&ds, &cfg).unwrap();
        let m = model.measure();
        let table = similarity_table(&ds, model.centroids(), m).unwrap();
        let fresh = assign(&ds, model.centroids(), m).unwrap();
        for (i, row) in table.iter().enumerate() {
            let best = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(row[fresh[i]], best);
            prop_assert!(row[..fresh[i]].iter().all(|&v| v < best));
        }
        for (j, members) in model.clusters().iter().enumerate() {
            if members.is_empty() {
                continue;
            }
            for s in 0..ds.dims() {
                let vals: Vec<f64> = members.iter().map(|&i| ds.process(i).values()[s]).collect();
                let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let c = model.centroids()[j].values()[s];
                prop_assert!(c >= lo - 1e-12 && c <= hi + 1e-12);
            }
        }
        if model.converged() {
            let h = model.history();
            prop_assert_eq!(&h[h.len() - 1], &h[h.len() - 2]);
        }
        for row in model.history() {
            prop_assert!(row.iter().all(|&c| c < k));
        }
        let again = update_centroids(&ds, model.assignment(), k, m).unwrap();
        prop_assert_eq!(again.len(), k);
    }

    #[test]
    fn seeded_runs_are_deterministic(ds in dataset(), seed in any::<u64>()) {
        let cfg = ClusterConfig { k: 2.min(ds.len()), seeding: Seeding::Random(seed), ..ClusterConfig::default() };
        prop_assert_eq!(cluster(&ds, &cfg).unwrap(), cluster(&ds, &cfg).unwrap());
    }

    #[test]
    fn features_bounded_and_consistent(ds in dataset()) {
        let model = cluster(&ds, &ClusterConfig { k: 2.min(ds.len()), ..ClusterConfig::default() }).unwrap();
        for policy in [DuplicatePolicy::Skip, DuplicatePolicy::Keep] {
            for r in reduce_training(&model, &ds, policy).unwrap() {
                prop_assert!((0.5..=1.0).contains(&r.feature));
                prop_assert!((0.0..=0.5).contains(&r.distance));
                let mut total = 0.0;
                for s in &r.cluster_sims {
                    total += s;
                }
                total += r.nn_sim;
                prop_assert_eq!(total, r.total);
                prop_assert_eq!(r.feature, r.total / (model.k() + 1) as f64);
            }
        }
    }

    #[test]
    fn feature_increases_with_nn_sim(sims in prop::collection::vec(0.5f64..=1.0, 1..5), nn in 0.5f64..0.99, up in 0.001f64..0.01) {
        let lo = ReducedFeature::new("p", sims.clone(), "q", nn);
        let hi = ReducedFeature::new("p", sims, "q", nn + up);
        prop_assert!(hi.feature > lo.feature);
    }

    #[test]
    fn csv_round_trip(ds in dataset(), labeled in any::<bool>()) {
        let ds = if labeled { ds } else { ds.without_labels() };
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let back = read_matrix(buf.as_slice(), labeled).unwrap();
        prop_assert_eq!(back, ds);
    }

    #[test]
    fn rates_recompute_from_counts(tp in 0usize..50, fp in 0usize..50, tn in 0usize..50, fn_ in 0usize..50) {
        let r = EvalReport::from_counts(tp, fp, tn, fn_);
        prop_assert_eq!(r.predictions, tp + fp + tn + fn_);
        match r.detection_rate {
            Some(d) => prop_assert_eq!(d, tp as f64 / (tp + fn_) as f64),
            None => prop_assert_eq!(tp + fn_, 0),
        }
        match r.false_positive_rate {
            Some(v) => prop_assert_eq!(v, fp as f64 / (fp + tn) as f64),
            None => prop_assert_eq!(fp + tn, 0),
        }
    }

    #[test]
    fn raw_prediction_ignores_training_order(ds in dataset(), probe in prop::collection::vec(0u64..=6, 8), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let probe = ProcessVector::new("probe", probe[..ds.dims()].to_vec());
        let m = Idsim::default();
        let a = idsim_core::classify_raw(&probe, &ds, &m).unwrap();
        let mut order: Vec<usize> = (0..ds.len()).collect();
        order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let labels = ds.labels().unwrap();
        let shuffled = LabeledDataset::new(
            ds.vocabulary().clone(),
            order.iter().map(|&i| ds.process(i).clone()).collect(),
            Some(order.iter().map(|&i| labels[i]).collect()),
        ).unwrap();
        let b = idsim_core::classify_raw(&probe, &shuffled, &m).unwrap();
        prop_assert_eq!(a.score, b.score);
        // Same best similarity; the label can only differ through a tie.
        let tied: Vec<Label> = (0..ds.len())
            .filter(|&i| m.similarity(probe.values(), ds.process(i).values()).unwrap().value() == a.score)
            .map(|i| labels[i])
            .collect();
        prop_assert!(tied.contains(&b.predicted));
        if tied.iter().all(|l| *l == tied[0]) {
            prop_assert_eq!(a.predicted, b.predicted);
        }
    }
}
