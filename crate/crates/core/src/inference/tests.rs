use super::*;
use crate::model::{Geoid, Occupancy};
use alloc::vec;
use proptest::prelude::*;

const TABLE2: [u64; 7] = [220, 201, 162, 2370, 54, 49, 78];
const TABLE3: [u64; 7] = [0, 11, 15, 2162, 230, 322, 401];

fn county(code: &str) -> AreaId {
    AreaId::County(Geoid::new(code).unwrap())
}

#[test]
fn one_sided_p_examples() {
    assert_eq!(one_sided_p(0.0, Some(0.7)), Some(0.5));
    // mpmath: ncdf(-2.575829) = 0.00500000438924081...
    let p = one_sided_p(-2.575829, Some(1.0)).unwrap();
    assert!((p - 0.005_000_004_389_240_817).abs() < 1e-15);
    assert_eq!(one_sided_p(0.3, Some(0.0)), None);
    assert_eq!(one_sided_p(0.3, Some(-1.0)), None);
    assert_eq!(one_sided_p(0.3, None), None);
}

#[test]
fn two_sided_class_examples() {
    assert_eq!(two_sided_class(0.997), SigClass::At1Pct);
    assert_eq!(two_sided_class(0.96), SigClass::At10Pct);
    assert_eq!(two_sided_class(0.5), SigClass::NotSignificant);
    assert_eq!(two_sided_class(0.0), SigClass::At1Pct);
    assert_eq!(two_sided_class(1.0), SigClass::At1Pct);
    assert_eq!(two_sided_class(0.01), SigClass::At5Pct);
    assert_eq!(two_sided_class(0.04), SigClass::At10Pct);
}

#[test]
fn bin_edges_are_half_open() {
    assert_eq!(PValueBin::of(0.995), PValueBin::Upper995);
    assert_eq!(PValueBin::of(0.975), PValueBin::Upper975);
    assert_eq!(PValueBin::of(0.95), PValueBin::Upper95);
    assert_eq!(PValueBin::of(0.05), PValueBin::Other);
    assert_eq!(PValueBin::of(0.025), PValueBin::Lower05);
    assert_eq!(PValueBin::of(0.005), PValueBin::Lower025);
    assert_eq!(PValueBin::of(0.004_999), PValueBin::Lower005);
}

#[test]
fn tabulation_reproduces_published_percents() {
    let tab = PValueTabulation::from_counts(TABLE2);
    assert_eq!(tab.n, 3134);
    let published = [7.02, 6.41, 5.17, 75.62, 1.72, 1.56, 2.49];
    for (b, want) in tab.bins.iter().zip(published) {
        assert!(
            (b.percent - want).abs() < 0.005 + 1e-9,
            "{:?}: {}",
            b.bin,
            b.percent
        );
    }
    let expected: Vec<f64> = tab.bins.iter().map(|b| b.expected_percent).collect();
    assert_eq!(expected, vec![0.5, 2.0, 2.5, 90.0, 2.5, 2.0, 0.5]);
}

#[test]
fn tabulation_edge_cases() {
    let empty = tabulate_pvalues(&[]);
    assert_eq!(empty.n, 0);
    assert!(empty.bins.iter().all(|b| b.count == 0 && b.percent == 0.0));

    let halves = PValueTabulation::from_pvalues(core::iter::repeat_n(0.5, 1000));
    assert_eq!(halves.count(PValueBin::Other), 1000);
    assert_eq!(halves.n, 1000);
}

#[test]
fn untested_results_are_not_counted() {
    let results = vec![
        DifferenceResult::new(
            county("01001"),
            Variable::VacancyRate,
            Some(0.1),
            Some(0.01),
            0.1,
        ),
        DifferenceResult::new(
            county("01003"),
            Variable::VacancyRate,
            Some(0.0),
            Some(0.0),
            0.1,
        ),
        DifferenceResult::new(county("01005"), Variable::VacancyRate, None, None, 0.1),
    ];
    assert_eq!(results[1].sig_class, SigClass::NoTest);
    assert_eq!(results[2].sig_class, SigClass::NoTest);
    assert_eq!(results[1].difference, Some(-0.1));
    assert_eq!(results[1].p_one_sided, None);
    assert_eq!(tabulate_pvalues(&results).n, 1);
}

#[test]
fn significance_table_matches_published() {
    let t4 = significance_table(&PValueTabulation::from_counts(TABLE2));
    assert_eq!(
        t4,
        SignificanceCounts {
            at_1pct: 298,
            at_5pct: 250,
            at_10pct: 216,
            not_significant: 2370
        }
    );
    let t5 = significance_table(&PValueTabulation::from_counts(TABLE3));
    assert_eq!(
        t5,
        SignificanceCounts {
            at_1pct: 401,
            at_5pct: 333,
            at_10pct: 245,
            not_significant: 2162
        }
    );
    assert_eq!(
        significance_table(&PValueTabulation::from_counts([0; 7])),
        SignificanceCounts::default()
    );
}

#[test]
fn sign_test_matches_published() {
    let vac = sign_test(764, 3134, 0.10).unwrap();
    assert!((vac.z - 26.83).abs() <= 0.005, "{}", vac.z);
    let pph = sign_test(979, 3141, 0.10).unwrap();
    assert!((pph.z - 39.55).abs() <= 0.005, "{}", pph.z);
    assert!(vac.p_upper() < 1e-4);
    assert_eq!(sign_test(100, 1000, 0.10).unwrap().z, 0.0);
}

#[test]
fn sign_test_errors() {
    assert_eq!(
        sign_test(5, 4, 0.1),
        Err(InferenceError::CountExceedsTotal { k: 5, n: 4 })
    );
    assert_eq!(sign_test(0, 0, 0.1), Err(InferenceError::NoTestedAreas));
    assert!(sign_test(1, 4, 0.0).is_err());
    assert!(sign_test(1, 4, 1.0).is_err());
}

#[test]
fn qq_examples() {
    assert_eq!(
        qq_series(&[0.5]),
        vec![QqPoint {
            expected: 0.5,
            observed: 0.5
        }]
    );
    let two = qq_series(&[0.8, 0.2]);
    assert_eq!(
        two[0],
        QqPoint {
            expected: 1.0 / 3.0,
            observed: 0.2
        }
    );
    assert_eq!(
        two[1],
        QqPoint {
            expected: 2.0 / 3.0,
            observed: 0.8
        }
    );
    assert!(qq_series(&[]).is_empty());
}

#[test]
fn t_test_examples() {
    let (t, _) = t_test(-0.083, 0.00148);
    assert!((t - (-56.081_081_081)).abs() < 1e-6);
    assert_eq!(t_test(0.0, 0.01), (0.0, 1.0));
    let (_, p) = t_test(-56.0 * 0.001, 0.001);
    assert!(p < 1e-4);
}

#[test]
fn national_test_on_records() {
    let reps_a: Vec<f64> = (0..8).map(|r| 1.0 + 0.1 * (r % 2) as f64).collect();
    let reps_b: Vec<f64> = (0..8).map(|r| 1.0 - 0.1 * (r % 3) as f64).collect();
    let g = Geoid::new("01001").unwrap();
    let recs = vec![
        UnitRecord::new(g, Occupancy::Occupied, 2, 1.0, reps_a.clone()).unwrap(),
        UnitRecord::new(g, Occupancy::Occupied, 4, 1.0, reps_b.clone()).unwrap(),
        UnitRecord::new(g, Occupancy::Vacant, 0, 1.0, reps_a).unwrap(),
    ];
    let nat = national_test(
        &recs,
        Variable::Pph,
        2.5,
        SdrFactor::successive_difference(8),
    )
    .unwrap();
    assert_eq!(nat.result.area, AreaId::National);
    assert_eq!(nat.result.difference, Some(0.5));
    assert_eq!(nat.n_units, 2);
    assert_eq!(nat.weight_sum, 2.0);
    let se = nat.result.se.unwrap();
    assert!((nat.t - 0.5 / se).abs() < 1e-12);

    let flat = vec![UnitRecord::new(g, Occupancy::Occupied, 2, 1.0, vec![1.0; 8]).unwrap()];
    assert_eq!(
        national_test(
            &flat,
            Variable::Pph,
            2.5,
            SdrFactor::successive_difference(8)
        ),
        Err(InferenceError::DegenerateNational(Variable::Pph))
    );
}

#[test]
fn sig_class_tokens_round_trip() {
    for c in [
        SigClass::At1Pct,
        SigClass::At5Pct,
        SigClass::At10Pct,
        SigClass::NotSignificant,
        SigClass::NoTest,
    ] {
        assert_eq!(c.token().parse::<SigClass>().unwrap(), c);
    }
}

proptest! {
    #[test]
    fn bins_partition_unit_interval(p in 0.0f64..=1.0) {
        let tab = PValueTabulation::from_pvalues([p]);
        prop_assert_eq!(tab.n, 1);
        prop_assert_eq!(tab.bins.iter().filter(|b| b.count == 1).count(), 1);
    }

    #[test]
    fn pair_sums_match_classes(ps in prop::collection::vec(0.0f64..=1.0, 0..300)) {
        let tab = PValueTabulation::from_pvalues(ps.iter().copied());
        let table = significance_table(&tab);
        for class in SigClass::TESTED {
            let direct = ps.iter().filter(|p| two_sided_class(**p) == class).count() as u64;
            prop_assert_eq!(table.get(class), direct);
        }
        prop_assert_eq!(table.total(), tab.n);
        let pct: f64 = tab.bins.iter().map(|b| b.percent).sum();
        if tab.n > 0 { prop_assert!((pct - 100.0).abs() < 0.05); }
    }

    #[test]
    fn negation_symmetry(d in -0.5f64..0.5, se in 1e-4f64..0.5) {
        let pos = DifferenceResult::new(AreaId::National, Variable::Pph, Some(2.0 + d), Some(se), 2.0);
        let neg = DifferenceResult::new(AreaId::National, Variable::Pph, Some(2.0 - d), Some(se), 2.0);
        let (p, q) = (pos.p_one_sided.unwrap(), neg.p_one_sided.unwrap());
        prop_assert!((p + q - 1.0).abs() < 1e-12);
        // edges are measure-zero; skip draws within rounding of one
        let near_edge = [0.005, 0.025, 0.05, 0.95, 0.975, 0.995].iter().any(|e| (p - e).abs() < 1e-12);
        if !near_edge {
            prop_assert_eq!(pos.sig_class, neg.sig_class);
        }
    }

    #[test]
    fn difference_is_exact(est in -10.0f64..10.0, base in -10.0f64..10.0) {
        let r = DifferenceResult::new(AreaId::National, Variable::Pph, Some(est), Some(1.0), base);
        prop_assert_eq!(r.difference, Some(est - base));
        prop_assert_eq!(r.sig_class, two_sided_class(r.p_one_sided.unwrap()));
    }

    #[test]
    fn sign_test_increasing_in_k(n in 1u64..10_000, a in 0u64..10_000, b in 0u64..10_000) {
        let (lo, hi) = (a.min(b) % (n + 1), a.max(b) % (n + 1));
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        let zl = sign_test(lo, n, 0.1).unwrap().z;
        let zh = sign_test(hi, n, 0.1).unwrap().z;
        if lo < hi { prop_assert!(zl < zh); } else { prop_assert_eq!(zl, zh); }
    }

    #[test]
    fn qq_is_sorted_with_plotting_positions(ps in prop::collection::vec(0.0f64..=1.0, 1..200)) {
        let qq = qq_series(&ps);
        prop_assert_eq!(qq.len(), ps.len());
        for w in qq.windows(2) {
            prop_assert!(w[0].observed <= w[1].observed);
            prop_assert!(w[0].expected < w[1].expected);
        }
        let n = ps.len() as f64;
        prop_assert!((qq[0].expected - 1.0 / (n + 1.0)).abs() < 1e-15);
    }
}
