use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use umiclab::corpus::Choice;
use umiclab::evalstats::{
    histogram_csv, kendall_counts, kendall_tau_b, kendall_tau_c, krippendorff_alpha, markdown_table, pascal_accuracy,
    score_histogram, MetricReport, RatingsMatrix, SignificanceMethod, StatsError, TauVariant, TieRule,
};
use umiclab::seed::derive_rng;

/// Exhaustive pair classification.
fn brute(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64) {
    let (mut c, mut d, mut tx, mut ty) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let s = (x[i] - x[j]) * (y[i] - y[j]);
            if x[i] == x[j] && y[i] == y[j] {
            } else if x[i] == x[j] {
                tx += 1.0;
            } else if y[i] == y[j] {
                ty += 1.0;
            } else if s > 0.0 {
                c += 1.0;
            } else {
                d += 1.0;
            }
        }
    }
    (c, d, tx, ty)
}

fn brute_tau_b(x: &[f64], y: &[f64]) -> f64 {
    let (c, d, tx, ty) = brute(x, y);
    (c - d) / ((c + d + tx) * (c + d + ty)).sqrt()
}

fn brute_tau_c(x: &[f64], y: &[f64]) -> f64 {
    let distinct = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s.dedup();
        s.len() as f64
    };
    let (c, d, _, _) = brute(x, y);
    let m = distinct(x).min(distinct(y));
    let n = x.len() as f64;
    2.0 * m * (c - d) / (n * n * (m - 1.0))
}

const TIED_X: [f64; 40] = [
    4.0, 3.0, 3.0, 2.0, 2.0, 1.0, 1.0, 1.0, 1.0, 4.0, 3.0, 4.0, 3.0, 3.0, 4.0, 3.0, 3.0, 3.0, 3.0, 4.0, 2.0, 4.0, 3.0,
    1.0, 2.0, 4.0, 3.0, 1.0, 4.0, 3.0, 4.0, 1.0, 1.0, 4.0, 1.0, 3.0, 1.0, 2.0, 2.0, 2.0,
];
const TIED_Y: [f64; 40] = [
    3.0, 1.0, 1.0, 1.0, 1.0, 4.0, 3.0, 4.0, 2.0, 4.0, 4.0, 2.0, 3.0, 5.0, 5.0, 5.0, 2.0, 4.0, 5.0, 4.0, 5.0, 4.0, 4.0,
    2.0, 5.0, 1.0, 3.0, 4.0, 5.0, 3.0, 2.0, 2.0, 3.0, 3.0, 4.0, 5.0, 1.0, 5.0, 3.0, 2.0,
];
const NORMAL_X: [f64; 30] = [
    -1.259066, 1.513924, 1.345875, 0.781311, 0.264456, -0.313923, 1.458021, 1.960258, 1.801635, 1.315104, 0.35738,
    -1.208319, -0.004454, 0.656475, -1.288361, 0.395122, 0.429864, 0.696043, -1.184118, -0.661703, -0.436435,
    -1.169802, 1.739368, -0.495911, 0.32897, -0.258573, 1.583473, 1.320361, 0.633353, -2.20351,
];
const NORMAL_Y: [f64; 30] = [
    -1.207037, 2.19761, 2.349837, 0.163404, 2.086467, -1.634354, 0.796493, 2.895308, 1.850689, 3.317496, 0.5459,
    -1.841513, -0.382018, -0.434671, -2.566042, 1.025534, 1.01103, 1.990602, -1.938724, 1.027405, -0.723823, 0.404606,
    1.306582, -1.231394, 0.578755, 0.772881, 1.744482, 0.734832, -0.707867, -3.60503,
];

#[test]
fn tau_small_examples() {
    let r = kendall_tau_b(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
    assert_eq!(r.coefficient, 1.0);
    assert_eq!(
        kendall_tau_b(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap().coefficient,
        -1.0
    );

    let (x, y) = ([1.0, 2.0, 2.0, 3.0], [1.0, 3.0, 2.0, 4.0]);
    let r = kendall_tau_b(&x, &y).unwrap();
    assert!((r.coefficient - brute_tau_b(&x, &y)).abs() < 1e-12);
    assert!((r.coefficient - 5.0 / 30f64.sqrt()).abs() < 1e-12);
    // Reference values from an independent statistics library.
    assert!((r.coefficient - 0.912870929175277).abs() < 1e-12);
    assert!((r.p_value - 0.07095149242730563).abs() < 1e-9);
    assert_eq!(r.method, SignificanceMethod::Normal);

    let r = kendall_tau_c(&[1.0, 1.0, 2.0, 2.0], &[1.0, 1.0, 2.0, 2.0]).unwrap();
    assert_eq!((r.concordant, r.discordant), (4, 0));
    assert_eq!(r.coefficient, 1.0);
}

#[test]
fn tau_matches_library_values_with_ties() {
    let b = kendall_tau_b(&TIED_X, &TIED_Y).unwrap();
    let c = kendall_tau_c(&TIED_X, &TIED_Y).unwrap();
    assert!((b.coefficient - 0.09631000569824764).abs() < 1e-12);
    assert!((c.coefficient - 0.09833333333333333).abs() < 1e-12);
    assert!((b.p_value - 0.4641406849751888).abs() < 1e-9);
    assert_eq!(b.p_value, c.p_value);
}

#[test]
fn significance_examples() {
    let x: Vec<f64> = (0..10).map(f64::from).collect();
    let r = kendall_tau_b(&x, &x).unwrap();
    let fact10: f64 = (1..=10).map(f64::from).product();
    assert_eq!(r.method, SignificanceMethod::Exact);
    assert!((r.p_value - 2.0 / fact10).abs() < 1e-20);

    let r = kendall_tau_b(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
    assert_eq!(r.p_value, 1.0);

    let x = [0.3, 1.2, 2.5, 0.7, 3.3, 2.2, 1.9, 0.1, 2.8, 1.5];
    let y = [1.1, 0.4, 2.9, 0.2, 3.1, 1.7, 2.4, 0.5, 2.0, 1.3];
    let r = kendall_tau_b(&x, &y).unwrap();
    assert!((r.coefficient - 0.6888888888888888).abs() < 1e-12);
    assert!((r.p_value - 0.00468694885361552).abs() < 1e-12);

    let r = kendall_tau_b(&NORMAL_X, &NORMAL_Y).unwrap();
    assert_eq!(r.method, SignificanceMethod::Normal);
    assert!((r.coefficient - 0.5816091954022989).abs() < 1e-12);
    assert!((r.p_value - 6.368202382630352e-06).abs() / 6.368202382630352e-06 < 1e-6);
}

#[test]
fn null_data_is_mostly_not_significant() {
    let mut rng = derive_rng(17, "null-tau", 0);
    let mut quiet = 0;
    for _ in 0..100 {
        let x: Vec<f64> = (0..200).map(|_| rng.gen()).collect();
        let y: Vec<f64> = (0..200).map(|_| rng.gen()).collect();
        if kendall_tau_b(&x, &y).unwrap().p_value > 0.05 {
            quiet += 1;
        }
    }
    assert!(quiet >= 90, "{quiet}");
}

#[test]
fn tau_errors() {
    assert_eq!(
        kendall_tau_b(&[1.0, 2.0], &[1.0]).unwrap_err(),
        StatsError::LengthMismatch(2, 1)
    );
    assert!(matches!(kendall_tau_b(&[1.0], &[1.0]), Err(StatsError::TooFew { .. })));
    assert!(matches!(
        kendall_tau_b(&[1.0, 1.0, 1.0], &[2.0, 2.0, 2.0]),
        Err(StatsError::Undefined(_))
    ));
    assert!(matches!(
        kendall_tau_c(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
        Err(StatsError::Undefined(_))
    ));
}

#[test]
fn tau_c_near_tau_b_without_ties() {
    let mut rng = derive_rng(5, "perm", 0);
    for _ in 0..20 {
        let n = 500;
        let x: Vec<f64> = (0..n).map(f64::from).collect();
        let mut y = x.clone();
        y.shuffle(&mut rng);
        let b = kendall_tau_b(&x, &y).unwrap().coefficient;
        let c = kendall_tau_c(&x, &y).unwrap().coefficient;
        // With m = n distinct values the two differ only by normalization.
        assert!((c - b * (n as f64 - 1.0) / n as f64 * n as f64 / (n as f64 - 1.0)).abs() < 1e-12);
        assert!((c - b).abs() <= 2.0 / n as f64);
    }
}

fn sample(max_len: usize, levels: i32) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2..=max_len).prop_flat_map(move |n| {
        (
            proptest::collection::vec((0..levels).prop_map(f64::from), n),
            proptest::collection::vec((0..levels).prop_map(f64::from), n),
        )
    })
}

fn counts_defined(x: &[f64], y: &[f64]) -> bool {
    let (c, d, tx, ty) = brute(x, y);
    c + d + tx > 0.0 && c + d + ty > 0.0
}

fn distinct(v: &[f64]) -> usize {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s.dedup();
    s.len()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn tau_matches_brute_force((x, y) in prop_oneof![sample(200, 4), sample(200, 1000)]) {
        let counts = kendall_counts(&x, &y).unwrap();
        let (c, d, _, _) = brute(&x, &y);
        prop_assert_eq!(counts.concordant as f64, c);
        prop_assert_eq!(counts.discordant as f64, d);
        if counts_defined(&x, &y) {
            let b = kendall_tau_b(&x, &y).unwrap();
            prop_assert!((b.coefficient - brute_tau_b(&x, &y)).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&b.p_value));
        }
        if distinct(&x).min(distinct(&y)) >= 2 {
            let c = kendall_tau_c(&x, &y).unwrap();
            prop_assert!((c.coefficient - brute_tau_c(&x, &y)).abs() < 1e-12);
        }
    }

    #[test]
    fn tau_is_a_rank_statistic((x, y) in sample(60, 6)) {
        prop_assume!(counts_defined(&x, &y) && distinct(&x).min(distinct(&y)) >= 2);
        let fx: Vec<f64> = x.iter().map(|v| (v * 0.7).exp() + 3.0).collect();
        let fy: Vec<f64> = y.iter().map(|v| v * v * v - 10.0).collect();
        for variant in [TauVariant::TauB, TauVariant::TauC] {
            let a = umiclab::evalstats::kendall_tau(&x, &y, variant).unwrap();
            let b = umiclab::evalstats::kendall_tau(&fx, &fy, variant).unwrap();
            prop_assert!((a.coefficient - b.coefficient).abs() < 1e-12);
            prop_assert_eq!(a.p_value, b.p_value);
            // Reversing one order relation negates the coefficient.
            let neg: Vec<f64> = y.iter().map(|v| -v).collect();
            let r = umiclab::evalstats::kendall_tau(&x, &neg, variant).unwrap();
            prop_assert!((r.coefficient + a.coefficient).abs() < 1e-12);
        }
    }

    #[test]
    fn tau_b_self_correlation_is_one((x, _) in sample(80, 8)) {
        prop_assume!(distinct(&x) >= 2);
        prop_assert!((kendall_tau_b(&x, &x).unwrap().coefficient - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pascal_accuracy_ignores_monotone_transforms(
        pairs in proptest::collection::vec((0u8..5, 0u8..5, any::<bool>()), 1..50),
    ) {
        let b: Vec<f64> = pairs.iter().map(|p| f64::from(p.0)).collect();
        let c: Vec<f64> = pairs.iter().map(|p| f64::from(p.1)).collect();
        let h: Vec<Choice> = pairs.iter().map(|p| if p.2 { Choice::B } else { Choice::C }).collect();
        let f = |v: &Vec<f64>| v.iter().map(|s| 2.0 * s.powi(3) + 1.0).collect::<Vec<_>>();
        for rule in [TieRule::Half, TieRule::Loss] {
            prop_assert_eq!(pascal_accuracy(&b, &c, &h, rule).unwrap(), pascal_accuracy(&f(&b), &f(&c), &h, rule).unwrap());
        }
    }

    #[test]
    fn alpha_is_shift_invariant(
        items in proptest::collection::vec(proptest::collection::vec(proptest::option::weighted(0.8, 1u8..=5), 3), 4..30),
        shift in -10.0f64..10.0,
    ) {
        let items: Vec<Vec<Option<f64>>> = items.iter().map(|r| r.iter().map(|v| v.map(f64::from)).collect()).collect();
        let shifted: Vec<Vec<Option<f64>>> = items.iter().map(|r| r.iter().map(|v| v.map(|x| x + shift)).collect()).collect();
        let (Ok(a), Ok(b)) = (RatingsMatrix::from_items(&items), RatingsMatrix::from_items(&shifted)) else {
            return Ok(());
        };
        match (krippendorff_alpha(&a), krippendorff_alpha(&b)) {
            (Ok(x), Ok(y)) => {
                prop_assert!((x - y).abs() < 1e-9);
                prop_assert!(x <= 1.0 + 1e-12);
            }
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "{:?}", other),
        }
    }

    #[test]
    fn histogram_partitions(scores in proptest::collection::vec(0.0f64..=1.0, 0..100), bins in 1usize..20) {
        let h = score_histogram(&scores, bins).unwrap();
        prop_assert_eq!(h.len(), bins);
        prop_assert_eq!(h.iter().sum::<usize>(), scores.len());
    }
}

#[test]
fn pascal_examples() {
    let h = [Choice::B, Choice::C, Choice::B];
    assert_eq!(
        pascal_accuracy(&[0.9, 0.1, 0.7], &[0.1, 0.9, 0.2], &h, TieRule::Half).unwrap(),
        1.0
    );
    assert_eq!(
        pascal_accuracy(&[0.1, 0.9, 0.2], &[0.9, 0.1, 0.7], &h, TieRule::Half).unwrap(),
        0.0
    );
    let mixed = pascal_accuracy(&[0.9, 0.9, 0.5], &[0.1, 0.1, 0.5], &h, TieRule::Half).unwrap();
    assert!((mixed - 0.5).abs() < 1e-15);
    let strict = pascal_accuracy(&[0.9, 0.9, 0.5], &[0.1, 0.1, 0.5], &h, TieRule::Loss).unwrap();
    assert!((strict - 1.0 / 3.0).abs() < 1e-15);
    assert!(matches!(
        pascal_accuracy(&[0.1], &[0.2, 0.3], &h, TieRule::Half),
        Err(StatsError::LengthMismatch(..))
    ));
}

#[test]
fn sign_test_values() {
    use umiclab::evalstats::{pascal_outcomes, sign_test};
    assert_eq!(sign_test(0, 0), 1.0);
    assert!((sign_test(1, 0) - 1.0).abs() < 1e-12);
    // 10 of 10: 2 * 0.5^10.
    assert!((sign_test(10, 0) - 2.0 / 1024.0).abs() < 1e-12);
    // 8 of 10: 2 * (1 + 10 + 45) / 1024.
    assert!((sign_test(8, 2) - 112.0 / 1024.0).abs() < 1e-12);
    assert_eq!(sign_test(3, 7), sign_test(7, 3));
    let h = [Choice::B, Choice::C, Choice::B];
    assert_eq!(pascal_outcomes(&[0.9, 0.9, 0.5], &[0.1, 0.1, 0.5], &h), (1, 1));
}

fn matrix(rows: &[&[Option<f64>]]) -> RatingsMatrix {
    RatingsMatrix::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
}

#[test]
fn alpha_examples() {
    let same = matrix(&[&[Some(1.0), Some(2.0)], &[Some(1.0), Some(2.0)]]);
    assert_eq!(krippendorff_alpha(&same).unwrap(), 1.0);

    // Coincidence table by hand for raters [1,2] and [2,3] over two items:
    // values 1,2 (item 1) and 2,3 (item 2); each item contributes two ordered
    // pairs at distance 1, so D_o = (2 + 2) / 4 = 1. Over all ordered pairs of
    // {1,2,2,3}: squared differences sum to 16 over 12 pairs, D_e = 4/3.
    let hand = matrix(&[&[Some(1.0), Some(2.0)], &[Some(2.0), Some(3.0)]]);
    let a = krippendorff_alpha(&hand).unwrap();
    assert!((a - 0.25).abs() < 1e-12, "{a}");

    let constant = matrix(&[&[Some(2.0), Some(2.0)], &[Some(2.0), Some(2.0)]]);
    assert!(matches!(krippendorff_alpha(&constant), Err(StatsError::Undefined(_))));
    assert!(RatingsMatrix::new(vec![vec![Some(1.0)]]).is_err());
}

/// Krippendorff's classic four-coder, twelve-unit reliability example.
#[test]
fn alpha_matches_reference_dataset() {
    let n = None;
    let s = |v: f64| Some(v);
    let data = matrix(&[
        &[
            s(1.0),
            s(2.0),
            s(3.0),
            s(3.0),
            s(2.0),
            s(1.0),
            s(4.0),
            s(1.0),
            s(2.0),
            n,
            n,
            n,
        ],
        &[
            s(1.0),
            s(2.0),
            s(3.0),
            s(3.0),
            s(2.0),
            s(2.0),
            s(4.0),
            s(1.0),
            s(2.0),
            s(5.0),
            n,
            s(3.0),
        ],
        &[
            n,
            s(3.0),
            s(3.0),
            s(3.0),
            s(2.0),
            s(3.0),
            s(4.0),
            s(2.0),
            s(2.0),
            s(5.0),
            s(1.0),
            n,
        ],
        &[
            s(1.0),
            s(2.0),
            s(3.0),
            s(3.0),
            s(2.0),
            s(4.0),
            s(4.0),
            s(1.0),
            s(2.0),
            s(5.0),
            s(1.0),
            n,
        ],
    ]);
    assert!((krippendorff_alpha(&data).unwrap() - 0.8491071428571428).abs() < 1e-12);

    let full = matrix(&[
        &[s(1.0), s(2.0), s(3.0), s(4.0), s(5.0)],
        &[s(2.0), s(2.0), s(4.0), s(4.0), s(5.0)],
        &[s(1.0), s(3.0), s(3.0), s(5.0), s(4.0)],
    ]);
    assert!((krippendorff_alpha(&full).unwrap() - 0.8232323232323232).abs() < 1e-12);
}

#[test]
fn alpha_near_zero_for_random_ratings() {
    let mut rng = derive_rng(2, "alpha-noise", 0);
    let ratings = (0..3)
        .map(|_| (0..1000).map(|_| Some(f64::from(rng.gen_range(1..=5)))).collect())
        .collect();
    let a = krippendorff_alpha(&RatingsMatrix::new(ratings).unwrap()).unwrap();
    assert!(a.abs() < 0.05, "{a}");
}

#[test]
fn histogram_examples() {
    assert_eq!(score_histogram(&[0.0, 0.5, 1.0], 2).unwrap(), vec![2, 1]);
    assert_eq!(score_histogram(&[0.1, 0.9, 0.3], 1).unwrap(), vec![3]);
    // Right-inclusive edges that are not exact in binary.
    assert_eq!(
        score_histogram(&[0.3, 0.30000000000000004, 0.7], 10).unwrap(),
        vec![0, 0, 1, 1, 0, 0, 1, 0, 0, 0]
    );
    assert_eq!(score_histogram(&[1.5], 4), Err(StatsError::OutOfRange(1.5)));
    assert_eq!(score_histogram(&[0.5], 0), Err(StatsError::NoBins));
    let csv = histogram_csv(&[2, 1]);
    assert_eq!(csv, "bin_start,bin_end,count\n0,0.5,2\n0.5,1,1\n");
}

#[test]
fn reports_and_table() {
    use umiclab::corpus::DatasetKind;
    let r = kendall_tau_c(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
    let reports = vec![
        MetricReport::correlation(DatasetKind::Flickr8k, "ROUGE-L", &r),
        MetricReport::correlation(
            DatasetKind::Composite,
            "BLEU-1",
            &kendall_tau_b(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(),
        ),
        MetricReport::accuracy(DatasetKind::Pascal50s, "BLEU-1", 0.625, Some(0.7), 8),
    ];
    let json = serde_json::to_value(&reports[0]).unwrap();
    assert_eq!(json["variant"], "TAU_C");
    assert_eq!(json["n"], 4);
    assert!(json.get("accuracy").is_none());
    let table = markdown_table(&reports);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "| Metric | Flickr8k | Composite | CapEval1k | PASCAL50s |");
    assert!(lines[2].starts_with("| BLEU-1 | - | 1.000 | - | 0.625 |"));
    assert!(lines[3].starts_with("| ROUGE-L | 0.667 |"));
}
