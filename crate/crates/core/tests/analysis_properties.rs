use drlab::adversary::{assemble_family, Case, FamilyConfig};
use drlab::analysis::{
    distinguishability_experiment, fano_floor, hellinger_general, hellinger_single, order_statistic, quantile_risk,
    rate_sweep, EstimatorTag, QuantileRisk, Scenario,
};
use drlab::model::density;
use drlab::scenario::flat_center;
use drlab::{ErrorBudget, Func, NuisancePair, Quadrature};
use proptest::prelude::*;

fn q1() -> Quadrature {
    Quadrature::default_for(1)
}

#[test]
fn exact_constant_estimator_has_zero_risk() {
    let truth = NuisancePair::constant(1, 0.5, 0.3, 0.7, 0.1).unwrap();
    let s = Scenario::new(truth.clone(), truth, Func::constant(1, 1.0), &q1()).unwrap();
    let r = quantile_risk(EstimatorTag::PlugInWate, &s, 50, 20, 0.9, 3).unwrap();
    for g in [0.05, 0.5, 0.95] {
        assert!(r.at(g) < 1e-28);
    }
}

#[test]
fn median_matches_sorted_sample() {
    let s = Scenario::new(
        drlab::scenario::grid_center().unwrap(),
        drlab::scenario::grid_center().unwrap(),
        Func::constant(1, 1.0),
        &q1(),
    )
    .unwrap();
    let r = quantile_risk(EstimatorTag::DrWate, &s, 100, 40, 0.5, 8).unwrap();
    let mut e = r.errors.clone();
    e.sort_by(f64::total_cmp);
    assert_eq!(r.quantile_risk, e[19]);
}

#[test]
fn quantile_risk_validates_inputs() {
    let truth = NuisancePair::constant(1, 0.5, 0.3, 0.7, 0.1).unwrap();
    let s = Scenario::new(truth.clone(), truth, Func::constant(1, 1.0), &q1()).unwrap();
    assert!(quantile_risk(EstimatorTag::DrWate, &s, 10, 19, 0.5, 0).is_err());
    assert!(quantile_risk(EstimatorTag::DrWate, &s, 10, 20, 1.0, 0).is_err());
}

#[test]
fn estimator_failure_reports_replication() {
    let truth = NuisancePair::constant(1, 0.02, 0.3, 0.7, 0.01).unwrap();
    let s = Scenario::new(truth.clone(), truth, Func::constant(1, 1.0), &q1()).unwrap();
    let err = quantile_risk(EstimatorTag::DrAtt, &s, 5, 20, 0.5, 0).unwrap_err();
    assert!(matches!(err, drlab::Error::Replication { .. }), "{err}");
}

#[test]
fn sweep_rows_are_sorted_and_finite() {
    let truth = NuisancePair::constant(1, 0.5, 0.3, 0.7, 0.1).unwrap();
    let s = Scenario::new(truth.clone(), truth, Func::constant(1, 1.0), &q1()).unwrap();
    let rep = rate_sweep(|_| Ok(s.clone()), &[800, 100, 400, 200], EstimatorTag::DrWate, &[0.5, 0.9], 30, 2).unwrap();
    assert!(rep.rows.windows(2).all(|p| p[0].n <= p[1].n));
    assert!(rep.rows.iter().all(|r| r.quantile_risk >= 0.0 && r.quantile_risk.is_finite()));
    assert!(rep.fitted_slope.is_finite());
    // A null weight makes every error exactly zero, leaving no log-log slope.
    let null = Scenario { w: Func::constant(1, 0.0), theta_wate: 0.0, ..s.clone() };
    let exact = rate_sweep(|_| Ok(null.clone()), &[100, 200, 400, 800], EstimatorTag::PlugInWate, &[0.5], 20, 2).unwrap();
    assert!(exact.rows.iter().all(|r| r.quantile_risk == 0.0));
    assert!(exact.fitted_slope.is_nan());
    assert!(rate_sweep(|_| Ok(s.clone()), &[1, 2, 3], EstimatorTag::DrWate, &[0.5], 30, 2).is_err());
}

#[test]
fn single_observations_carry_no_information() {
    let center = flat_center(1, 0.5, 0.45).unwrap();
    let cfg = FamilyConfig::new(Case::Case1, ErrorBudget::uniform(0.36).unwrap(), 6);
    let fam = assemble_family(&cfg, &center, &Func::constant(1, 1.0), &q1()).unwrap();
    let r = distinguishability_experiment(&fam, 1, 4000, 17, 0.3).unwrap();
    assert!((r.empirical_test_error - 0.5).abs() <= 0.02, "{}", r.empirical_test_error);
    assert_eq!(r.fano_floor, fano_floor(0.3).unwrap());
    assert_eq!(r.m, 64);
}

#[test]
fn oracle_shift_hellinger_scales_like_one_over_n() {
    let center = drlab::scenario::grid_center().unwrap();
    let w = Func::constant(1, 1.0);
    let vals: Vec<f64> = [64usize, 1024, 16384]
        .iter()
        .map(|&n| {
            let cfg = FamilyConfig { n, ..FamilyConfig::new(Case::OracleShift, ErrorBudget::zero(), 1) };
            let fam = assemble_family(&cfg, &center, &w, &q1()).unwrap();
            let alt = fam.pair(&drlab::adversary::RademacherAssignment::all_plus(1));
            n as f64 * hellinger_single(&center, &alt, &q1()).unwrap()
        })
        .collect();
    let hi = vals.iter().copied().fold(0.0, f64::max);
    let lo = vals.iter().copied().fold(f64::MAX, f64::min);
    assert!(hi / lo <= 3.0, "{vals:?}");
}

fn grid_pair() -> impl Strategy<Value = NuisancePair> {
    prop::collection::vec(0.05..0.95f64, 12).prop_map(|v| {
        NuisancePair::new(
            Func::grid(1, 4, v[0..4].to_vec()),
            Func::grid(1, 4, v[4..8].to_vec()),
            Func::grid(1, 4, v[8..12].to_vec()),
            0.05,
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn quantile_monotone_in_gamma(mut e in prop::collection::vec(0.0..10.0f64, 20..60), a in 0.01..0.99f64, b in 0.01..0.99f64) {
        e.sort_by(f64::total_cmp);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(order_statistic(&e, lo) <= order_statistic(&e, hi));
        let qr = QuantileRisk { quantile_risk: 0.0, errors: e.clone() };
        prop_assert!(qr.at(lo) <= qr.at(hi));
    }

    #[test]
    fn hellinger_symmetric_and_bounded(p in grid_pair(), q in grid_pair()) {
        let a = hellinger_single(&p, &q, &q1()).unwrap();
        let b = hellinger_single(&q, &p, &q1()).unwrap();
        prop_assert!((a - b).abs() < 1e-15);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn hellinger_tensorizes(p in grid_pair(), q in grid_pair()) {
        let h1 = hellinger_single(&p, &q, &q1()).unwrap();
        let label = |l: usize| ((l >> 1 & 1) as u8, (l & 1) as u8);
        let prod = |pair: &NuisancePair, x: &[f64], l: usize| {
            let (d1, y1) = label(l & 3);
            let (d2, y2) = label(l >> 2);
            density(pair, &x[..1], d1, y1) * density(pair, &x[1..], d2, y2)
        };
        let grid = vec![vec![0.25, 0.5, 0.75]; 2];
        let h2 = hellinger_general(2, &grid, 16, &|x, l| prod(&p, x, l), &|x, l| prod(&q, x, l), &Quadrature::default_for(2)).unwrap();
        prop_assert!((h2 - (1.0 - (1.0 - h1).powi(2))).abs() <= 1e-8, "{h2} vs {h1}");
    }
}
