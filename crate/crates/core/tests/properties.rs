mod common;

use common::pairwise_auc;
use guide_guard::analysis::{per_nucleotide_histogram, single_mismatch_histogram, AnalysisOptions};
use guide_guard::dataset::{class_ids, kfold_split, GuideRecord};
use guide_guard::eval::roc_auc;
use guide_guard::nn::{argmax, softmax};
use guide_guard::seq::{
    encode_pair, mismatch_profile, reverse_complement, BaseWeights, EncodingMode, EncodingWeights, Nucleotide, Role, Sequence,
};
use proptest::prelude::*;

fn nucleotide() -> impl Strategy<Value = Nucleotide> {
    prop::sample::select(Nucleotide::ALL.to_vec())
}

fn sequence(len: usize, role: Role) -> impl Strategy<Value = Sequence> {
    prop::collection::vec(nucleotide(), len).prop_map(move |b| Sequence::new(b, role))
}

fn pair(len: usize) -> impl Strategy<Value = (Sequence, Sequence)> {
    (sequence(len, Role::Guide), sequence(len, Role::Target))
}

fn weights(len: usize) -> impl Strategy<Value = EncodingWeights> {
    (prop::collection::vec(0.1f64..3.0, len), prop::array::uniform4(0.1f64..3.0)).prop_map(|(p, b)| EncodingWeights {
        position_weights: p,
        base_weights: BaseWeights { a: b[0], c: b[1], g: b[2], u: b[3] },
        mode: EncodingMode::Zip,
    })
}

proptest! {
    #[test]
    fn reverse_complement_is_an_involution(s in sequence(23, Role::Target)) {
        let back = reverse_complement(&reverse_complement(&s));
        prop_assert_eq!(back.bases(), s.bases());
    }

    #[test]
    fn mismatch_count_is_hamming_distance((g, t) in pair(23)) {
        let aligned = reverse_complement(&t);
        let hamming = g.bases().iter().zip(aligned.bases()).filter(|(a, b)| a != b).count();
        let p = mismatch_profile(&g, &t).unwrap();
        prop_assert_eq!(p.len(), hamming);
        prop_assert!(p.positions.windows(2).all(|w| w[0] < w[1]));
        for (i, &pos) in p.positions.iter().enumerate() {
            prop_assert_eq!(p.originals[i], aligned.bases()[pos - 1]);
            prop_assert_eq!(p.substituted[i], g.bases()[pos - 1]);
        }
    }

    #[test]
    fn perfect_match_against_own_reverse_complement(g in sequence(23, Role::Guide)) {
        let t = reverse_complement(&g).with_role(Role::Target);
        prop_assert!(mismatch_profile(&g, &t).unwrap().is_perfect_match());
    }

    #[test]
    fn every_row_has_one_weighted_hot_channel((g, t) in pair(23), w in weights(23)) {
        let enc = encode_pair(&g, &t, &w).unwrap();
        prop_assert_eq!(enc.shape(), [46, 4]);
        let aligned = reverse_complement(&t);
        for i in 0..23 {
            for (r, base) in [(2 * i, g.bases()[i]), (2 * i + 1, aligned.bases()[i])] {
                let row = enc.row(r);
                prop_assert_eq!(row.iter().filter(|v| **v != 0.0).count(), 1);
                prop_assert_eq!(row[base.channel()], w.position_weights[i] * w.base_weights.get(base));
            }
        }
    }

    #[test]
    fn encoding_is_linear_in_position_weight((g, t) in pair(23), w in weights(23), pos in 0usize..23, k in 0.1f64..5.0) {
        let mut scaled = w.clone();
        scaled.position_weights[pos] *= k;
        let a = encode_pair(&g, &t, &w).unwrap();
        let b = encode_pair(&g, &t, &scaled).unwrap();
        for r in 0..46 {
            let factor = if r / 2 == pos { k } else { 1.0 };
            for c in 0..4 {
                let (x, y) = (b.row(r)[c], a.row(r)[c] * factor);
                prop_assert!((x - y).abs() <= 1e-12 * y.abs());
            }
        }
    }

    #[test]
    fn zip_and_concat_are_row_permutations((g, t) in pair(23), w in weights(23)) {
        let zip = encode_pair(&g, &t, &w).unwrap();
        let concat = encode_pair(&g, &t, &EncodingWeights { mode: EncodingMode::Concat, ..w }).unwrap();
        for i in 0..23 {
            prop_assert_eq!(zip.row(2 * i), concat.row(i));
            prop_assert_eq!(zip.row(2 * i + 1), concat.row(23 + i));
        }
    }

    #[test]
    fn octile_classes_are_balanced_and_monotone(eff in prop::collection::vec(-10.0f64..10.0, 8..300)) {
        let (ids, bounds) = class_ids(&eff, 8).unwrap();
        let mut sizes = [0usize; 8];
        for &c in &ids {
            sizes[c] += 1;
        }
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for i in 0..eff.len() {
            for j in 0..eff.len() {
                if eff[i] < eff[j] {
                    prop_assert!(ids[i] <= ids[j]);
                }
            }
        }
        let top = eff.iter().zip(&ids).filter(|(_, &c)| c == 7).map(|(e, _)| *e).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(bounds.positive_cutoff(), top);
    }

    #[test]
    fn folds_partition_the_records(n in 2usize..300, k in 2usize..12, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let f = kfold_split(n, k, seed).unwrap();
        let sizes = f.sizes();
        prop_assert_eq!(sizes.iter().sum::<usize>(), n);
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for fold in 0..k {
            let mut all = f.test_indices(fold);
            all.extend(f.train_indices(fold));
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
        prop_assert_eq!(kfold_split(n, k, seed).unwrap(), f);
    }

    #[test]
    fn auc_matches_pairwise_ordering(data in prop::collection::vec((0u8..6, any::<bool>()), 2..60)) {
        let scores: Vec<f64> = data.iter().map(|(s, _)| f64::from(*s) / 5.0).collect();
        let labels: Vec<bool> = data.iter().map(|(_, l)| *l).collect();
        prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
        let roc = roc_auc(&scores, &labels).unwrap();
        prop_assert!((roc.auc - pairwise_auc(&scores, &labels)).abs() <= 1e-12);
        prop_assert!(roc.points.windows(2).all(|w| w[0].fpr <= w[1].fpr && w[0].tpr <= w[1].tpr));
        let last = roc.points.last().unwrap();
        prop_assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
    }

    #[test]
    fn softmax_is_a_distribution(x in prop::collection::vec(-50.0f64..50.0, 1..12)) {
        let p = softmax(&x);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
        prop_assert_eq!(argmax(&p), argmax(&x));
    }

    #[test]
    fn per_base_histograms_partition_single_mismatches(
        items in prop::collection::vec((pair(23), -1.0f64..1.0), 1..40),
    ) {
        let records: Vec<GuideRecord> = items
            .into_iter()
            .map(|((g, t), e)| GuideRecord::new(g, t, e, "g").unwrap())
            .collect();
        let opts = AnalysisOptions::default();
        let single = single_mismatch_histogram(&records, &opts);
        prop_assert_eq!(single.matched + single.ignored, records.len());
        let mut counts = vec![0; 23];
        for b in Nucleotide::ALL {
            for (c, bin) in counts.iter_mut().zip(&per_nucleotide_histogram(&records, b, &opts).bins) {
                *c += bin.count;
            }
        }
        prop_assert_eq!(counts, single.bins.iter().map(|b| b.count).collect::<Vec<_>>());
    }
}
