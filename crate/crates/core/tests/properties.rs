//! Property tests for the invariants every module promises.

mod common;

use dnn_tip::coverage::{coverage_profile, fit_neuron_stats, Criterion, NcConfig};
use dnn_tip::data::{argmax_predictions, ActivationMatrix, LabelVector, SoftmaxMatrix};
use dnn_tip::eval::{apfd, vargha_delaney_a12_paired, wilcoxon_signed_rank};
use dnn_tip::io::{load_activations, write_activations};
use dnn_tip::prioritize::{cam_order, ctm_order, score_order, Ranking};
use dnn_tip::surprise::{bucketize, fit_sa, sa_score, SaConfig, SaVariant};
use dnn_tip::uncertainty::{deepgini, entropy, vanilla_softmax};
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn matrix(rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> impl Strategy<Value = Array2<f64>> {
    (rows, cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(-8i32..=8, r * c)
            .prop_map(move |v| Array2::from_shape_vec((r, c), v.into_iter().map(|x| x as f64 / 4.0).collect()).unwrap())
    })
}

fn softmax_rows(rows: usize, classes: usize) -> impl Strategy<Value = SoftmaxMatrix> {
    prop::collection::vec(0.01f64..1.0, rows * classes).prop_map(move |v| {
        let mut m = Array2::from_shape_vec((rows, classes), v).unwrap();
        for mut r in m.rows_mut() {
            let s = r.sum();
            r /= s;
        }
        SoftmaxMatrix::new(m).unwrap()
    })
}

fn bit_rows(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<bool>>> {
    prop::collection::vec(prop::collection::vec(any::<bool>(), cols), rows)
}

fn profile_from(rows: &[Vec<bool>]) -> dnn_tip::coverage::CoverageProfile {
    let cols = rows[0].len();
    let mut bits = dnn_tip::bitmatrix::BitMatrix::zeros(rows.len(), cols);
    for (i, r) in rows.iter().enumerate() {
        for (j, &b) in r.iter().enumerate() {
            if b {
                bits.set(i, j);
            }
        }
    }
    dnn_tip::coverage::CoverageProfile {
        bits,
        targets_per_neuron: 1,
        source: dnn_tip::coverage::ProfileSource::Surprise {
            buckets: cols,
            upper: 1.0,
        },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn npy_roundtrip_is_bit_exact(m in matrix(1..20, 1..8), raw in prop::collection::vec(any::<f64>(), 1..8)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.npy");
        let acts = ActivationMatrix::single_layer(m).unwrap();
        write_activations(&path, &acts).unwrap();
        prop_assert_eq!(load_activations(&path).unwrap(), acts);
        let finite: Vec<f64> = raw.into_iter().filter(|v| v.is_finite()).collect();
        prop_assume!(!finite.is_empty());
        let acts = ActivationMatrix::single_layer(Array2::from_shape_vec((1, finite.len()), finite).unwrap()).unwrap();
        write_activations(&path, &acts).unwrap();
        let back = load_activations(&path).unwrap();
        for (a, b) in back.values().iter().zip(acts.values().iter()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn argmax_is_scale_invariant(sm in softmax_rows(10, 4), scale in 0.1f64..10.0) {
        let scaled = sm.values().mapv(|v| v * scale);
        let rows: Vec<Vec<f64>> = scaled.rows().into_iter().map(|r| r.to_vec()).collect();
        for (i, row) in rows.iter().enumerate() {
            let best = (0..row.len()).fold(0, |b, c| if row[c] > row[b] { c } else { b });
            prop_assert_eq!(argmax_predictions(&sm).get(i), best);
        }
    }

    #[test]
    fn coverage_invariants(train in matrix(2..20, 4..10), test in matrix(1..20, 4..10)) {
        let cols = train.ncols().min(test.ncols());
        let train = ActivationMatrix::single_layer(train.slice(ndarray::s![.., ..cols]).to_owned()).unwrap();
        let test = ActivationMatrix::single_layer(test.slice(ndarray::s![.., ..cols]).to_owned()).unwrap();
        let stats = fit_neuron_stats(&train).unwrap();
        let prof = |c: &str| coverage_profile(&test, &stats, &NcConfig::new(c.parse::<Criterion>().unwrap())).unwrap();

        // KMNC: at most one segment per neuron.
        let k = 3;
        let kmnc = prof("KMNC-3");
        for i in 0..test.rows() {
            let bits: Vec<bool> = kmnc.bits.row_bits(i).collect();
            for j in 0..cols {
                prop_assert!(bits[j * k..(j + 1) * k].iter().filter(|&&b| b).count() <= 1);
            }
        }
        // NBC-0 high target equals SNAC-0.
        let nbc = prof("NBC-0");
        let snac = prof("SNAC-0");
        for i in 0..test.rows() {
            for j in 0..cols {
                prop_assert_eq!(nbc.bits.get(i, 2 * j + 1), snac.bits.get(i, j));
            }
        }
        // Raising the NAC threshold never adds coverage.
        let low = prof("NAC-0");
        let high = prof("NAC-0.5");
        for i in 0..test.rows() {
            for j in 0..cols {
                prop_assert!(!high.bits.get(i, j) || low.bits.get(i, j));
            }
        }
    }

    #[test]
    fn cam_invariants(rows in (1usize..15, 1usize..20).prop_flat_map(|(r, c)| bit_rows(r, c))) {
        let p = profile_from(&rows);
        let cam = cam_order(&p);
        let ctm = ctm_order(&p);
        prop_assert!(cam.is_permutation());
        prop_assert_eq!(cam.order[0], ctm.order[0]);
        // Union coverage of the greedy prefix equals the union of all tests.
        let total: usize = (0..rows[0].len()).filter(|&c| rows.iter().any(|r| r[c])).count();
        prop_assert_eq!(cam.scores.iter().sum::<f64>() as usize, total);
        let (order, gains) = common::naive_cam(&rows);
        prop_assert_eq!(&cam.order, &order);
        for (t, g) in order.iter().zip(gains) {
            prop_assert_eq!(cam.scores[*t], g as f64);
        }
    }

    #[test]
    fn score_order_rank_invariance(raw in prop::collection::vec(-100i32..100, 1..200)) {
        let scores: Vec<f64> = raw.iter().map(|&v| v as f64 / 8.0).collect();
        let transformed: Vec<f64> = scores.iter().map(|v| v * 4.0 + 1.0).collect();
        let a = score_order(&scores).unwrap();
        prop_assert_eq!(a.order, score_order(&transformed).unwrap().order);
    }

    #[test]
    fn apfd_depends_only_on_fault_ranks(perm in Just((0..30).collect::<Vec<usize>>()).prop_shuffle(),
                                        faults in prop::collection::vec(any::<bool>(), 30)) {
        prop_assume!(faults.iter().any(|&f| f));
        let r = Ranking { order: perm.clone(), scores: vec![0.0; 30] };
        let v = apfd(&r, &faults).unwrap().apfd;
        prop_assert!((v - common::apfd_area(&perm, &faults)).abs() < 1e-12);
        // Relabel: move each fault to whichever test holds the same rank.
        let pos = r.positions();
        let ranks: Vec<usize> = (0..30).filter(|&t| faults[t]).map(|t| pos[t]).collect();
        let identity = Ranking { order: (0..30).collect(), scores: vec![0.0; 30] };
        let mut relabeled = vec![false; 30];
        ranks.iter().for_each(|&k| relabeled[k] = true);
        prop_assert!((apfd(&identity, &relabeled).unwrap().apfd - v).abs() < 1e-12);
    }

    #[test]
    fn moving_a_fault_earlier_raises_apfd(faults in prop::collection::vec(any::<bool>(), 2..40), pick in any::<prop::sample::Index>()) {
        let n = faults.len();
        let fault_positions: Vec<usize> = (0..n).filter(|&t| faults[t]).collect();
        prop_assume!(!fault_positions.is_empty());
        let t = fault_positions[pick.index(fault_positions.len())];
        prop_assume!(t > 0 && !faults[t - 1]);
        let mut order: Vec<usize> = (0..n).collect();
        let before = apfd(&Ranking { order: order.clone(), scores: vec![0.0; n] }, &faults).unwrap().apfd;
        order.swap(t - 1, t);
        let after = apfd(&Ranking { order, scores: vec![0.0; n] }, &faults).unwrap().apfd;
        prop_assert!(after > before);
    }

    #[test]
    fn wilcoxon_small_n_equals_enumeration(x in prop::collection::vec(0i32..6, 1..=12), y in prop::collection::vec(0i32..6, 12)) {
        let x: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        let y: Vec<f64> = y[..x.len()].iter().map(|&v| v as f64).collect();
        let p = wilcoxon_signed_rank(&x, &y).unwrap().p_value;
        prop_assert!((p - common::wilcoxon_enumerated(&x, &y)).abs() <= 1e-12);
    }

    #[test]
    fn a12_bounds_and_symmetry(x in prop::collection::vec(0i32..5, 1..30), y in prop::collection::vec(0i32..5, 30)) {
        let x: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        let y: Vec<f64> = y[..x.len()].iter().map(|&v| v as f64).collect();
        let a = vargha_delaney_a12_paired(&x, &y).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert_eq!(a, common::a12_counting(&x, &y));
        prop_assert!((a + vargha_delaney_a12_paired(&y, &x).unwrap() - 1.0).abs() < 1e-12);
        prop_assert_eq!(vargha_delaney_a12_paired(&x, &x).unwrap(), 0.5);
    }

    #[test]
    fn uniform_row_is_the_unique_maximum(sm in softmax_rows(1, 4)) {
        let uniform = SoftmaxMatrix::new(Array2::from_elem((1, 4), 0.25)).unwrap();
        let non_uniform = sm.row(0).iter().any(|&p| (p - 0.25).abs() > 1e-9);
        prop_assume!(non_uniform);
        prop_assert!(deepgini(&sm).scores[0] < deepgini(&uniform).scores[0]);
        prop_assert!(vanilla_softmax(&sm).scores[0] < vanilla_softmax(&uniform).scores[0]);
    }

    #[test]
    fn class_permutation_invariance(sm in softmax_rows(5, 4), perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle()) {
        let permuted = SoftmaxMatrix::new(sm.values().select(ndarray::Axis(1), &perm)).unwrap();
        for f in [deepgini, vanilla_softmax, entropy] {
            for (a, b) in f(&sm).scores.iter().zip(f(&permuted).scores) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dynamic_buckets_cover_exactly_one(raw in prop::collection::vec(0.0f64..100.0, 1..200), buckets in 1usize..50) {
        prop_assume!(raw.iter().any(|&v| v > 0.0));
        let p = bucketize(&raw, buckets, None, false).unwrap();
        for i in 0..raw.len() {
            prop_assert_eq!(p.covered(i), 1);
        }
    }
}

fn gaussian(seed: u64, rows: usize, cols: usize) -> Array2<f64> {
    dnn_tip::synthetic::normal_matrix(&mut ChaCha8Rng::seed_from_u64(seed), rows, cols)
}

fn scores(variant: SaVariant, per_class: bool, train: &Array2<f64>, labels: &[usize], test: &Array2<f64>, predicted: &[usize]) -> Vec<f64> {
    let cfg = SaConfig::new(variant).per_class(per_class);
    let model = fit_sa(
        &ActivationMatrix::single_layer(train.clone()).unwrap(),
        &LabelVector::new(labels.to_vec()),
        &cfg,
    )
    .unwrap();
    sa_score(&model, &ActivationMatrix::single_layer(test.clone()).unwrap(), &LabelVector::new(predicted.to_vec()))
        .unwrap()
        .scores
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mdsa_affine_equivariance(seed in any::<u64>(), a in prop::collection::vec(-2.0f64..2.0, 9)) {
        let m = Array2::from_shape_vec((3, 3), a).unwrap() + Array2::<f64>::eye(3) * 3.0;
        let train = gaussian(seed, 80, 3);
        let test = gaussian(seed ^ 1, 20, 3);
        let labels = vec![0; 80];
        let plain = scores(SaVariant::Mdsa, false, &train, &labels, &test, &[0; 20]);
        let mapped = scores(SaVariant::Mdsa, false, &train.dot(&m.t()), &labels, &test.dot(&m.t()), &[0; 20]);
        for (x, y) in plain.iter().zip(&mapped) {
            prop_assert!((x - y).abs() <= 1e-6 * x.abs().max(1.0), "{} vs {}", x, y);
        }
    }

    #[test]
    fn likelihood_variants_translation_invariant(seed in any::<u64>(), shift in prop::collection::vec(-50i32..50, 3)) {
        let shift = Array1::from_iter(shift.iter().map(|&s| s as f64));
        // Dyadic data keeps the shift exact.
        let train = gaussian(seed, 60, 3).mapv(|v| (v * 64.0).round() / 64.0);
        let test = gaussian(seed ^ 2, 15, 3).mapv(|v| (v * 64.0).round() / 64.0);
        let labels: Vec<usize> = (0..60).map(|i| i % 2).collect();
        let predicted: Vec<usize> = (0..15).map(|i| i % 2).collect();
        for variant in [SaVariant::Lsa, SaVariant::Mlsa] {
            let a = scores(variant, false, &train, &labels, &test, &predicted);
            let b = scores(variant, false, &(&train + &shift), &labels, &(&test + &shift), &predicted);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{:?}: {} vs {}", variant, x, y);
            }
        }
    }

    #[test]
    fn single_cluster_mmdsa_is_mdsa(seed in any::<u64>()) {
        let train = gaussian(seed, 50, 4);
        let test = gaussian(seed ^ 3, 10, 4);
        let labels = vec![0; 50];
        let cfg = SaConfig { mmdsa_clusters: 1, ..SaConfig::new(SaVariant::Mmdsa) };
        let model = fit_sa(&ActivationMatrix::single_layer(train.clone()).unwrap(), &LabelVector::new(labels.clone()), &cfg).unwrap();
        let mm = sa_score(&model, &ActivationMatrix::single_layer(test.clone()).unwrap(), &LabelVector::new(vec![0; 10])).unwrap().scores;
        let md = scores(SaVariant::Mdsa, false, &train, &labels, &test, &[0; 10]);
        for (x, y) in mm.iter().zip(&md) {
            prop_assert!((x - y).abs() <= 1e-9, "{} vs {}", x, y);
        }
    }

    #[test]
    fn single_class_composite_equals_plain(seed in any::<u64>(), class in 0usize..4) {
        let train = gaussian(seed, 40, 3);
        let test = gaussian(seed ^ 4, 10, 3);
        let labels = vec![class; 40];
        let predicted = vec![class; 10];
        for variant in SaVariant::ALL {
            let plain = scores(variant, false, &train, &labels, &test, &predicted);
            let composite = scores(variant, true, &train, &labels, &test, &predicted);
            prop_assert_eq!(plain, composite, "{:?}", variant);
        }
    }

    #[test]
    fn scores_are_always_finite(seed in any::<u64>(), rank in 1usize..4) {
        // Rank-deficient training data: 5 columns spanned by `rank` factors.
        let basis = gaussian(seed, rank, 5);
        let train = gaussian(seed ^ 5, 40, rank).dot(&basis);
        let test = gaussian(seed ^ 6, 10, 5);
        let labels: Vec<usize> = (0..40).map(|i| i % 2).collect();
        let predicted: Vec<usize> = (0..10).map(|i| i % 3).collect();
        for variant in SaVariant::ALL {
            for per_class in [false, true] {
                let s = scores(variant, per_class, &train, &labels, &test, &predicted);
                prop_assert!(s.iter().all(|v| v.is_finite()), "{:?} {}", variant, per_class);
            }
        }
    }
}

#[test]
fn binary_softmax_metrics_share_one_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sm = dnn_tip::synthetic::random_softmax(&mut rng, 500, 2, 3.0);
    let order = |s: Vec<f64>| score_order(&s).unwrap().order;
    let reference = order(deepgini(&sm).scores);
    assert_eq!(order(vanilla_softmax(&sm).scores), reference);
    assert_eq!(order(dnn_tip::uncertainty::pcs(&sm).scores), reference);
    assert_eq!(order(entropy(&sm).scores), reference);
}
