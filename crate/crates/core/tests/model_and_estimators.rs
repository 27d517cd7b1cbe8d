use drlab::estimators::{dr_att, dr_wate, plug_in_att, plug_in_wate};
use drlab::model::{density, sample_dataset, true_wate};
use drlab::rng::stream_rng;
use drlab::{Dataset, Func, NuisancePair, Quadrature};
use proptest::prelude::*;
use rand::Rng;

fn q1() -> Quadrature {
    Quadrature::default_for(1)
}

#[test]
fn treatment_frequency_matches_propensity() {
    let pair = NuisancePair::constant(1, 0.5, 0.5, 0.5, 0.1).unwrap();
    let data = sample_dataset(&pair, 100_000, 11).unwrap();
    let mean = data.d.iter().map(|&d| f64::from(d)).sum::<f64>() / data.len() as f64;
    // 3σ band: 3·sqrt(0.25/1e5) ≈ 0.0047.
    assert!((mean - 0.5).abs() < 0.0048, "mean {mean}");
}

#[test]
fn density_sums_to_one_at_random_points() {
    let pair = drlab::scenario::smooth_center(2).unwrap();
    let mut rng = stream_rng(3, 0);
    for _ in 0..10_000 {
        let x = [rng.random::<f64>(), rng.random::<f64>()];
        let total: f64 = [(0, 0), (0, 1), (1, 0), (1, 1)].iter().map(|&(d, y)| density(&pair, &x, d, y)).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }
}

#[test]
fn dr_wate_with_true_nuisances_is_unbiased() {
    let pair = drlab::scenario::grid_center().unwrap();
    let w = drlab::scenario::grid_weight();
    let theta = true_wate(&pair, &w, &q1()).unwrap();
    let data = sample_dataset(&pair, 100_000, 5).unwrap();
    let est = dr_wate(&data, &pair, &w).unwrap().value;
    // Standard error from the per-row influence terms.
    let terms: Vec<f64> = (0..data.len())
        .map(|i| {
            let one = Dataset::from_rows(1, &[(data.x(i).to_vec(), data.d[i], data.y[i])]).unwrap();
            dr_wate(&one, &pair, &w).unwrap().value
        })
        .collect();
    let mean = terms.iter().sum::<f64>() / terms.len() as f64;
    let var = terms.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (terms.len() - 1) as f64;
    let se = (var / terms.len() as f64).sqrt();
    assert!((est - mean).abs() < 1e-12);
    assert!((est - theta).abs() < 3.0 * se, "est {est}, theta {theta}, se {se}");
}

#[test]
fn plug_in_bias_limit() {
    use drlab::analysis::{quantile_risk, EstimatorTag, Scenario};
    let truth = NuisancePair::constant(1, 0.5, 0.3, 0.6, 0.1).unwrap();
    let mut hat = truth.clone();
    hat.g1 = hat.g1.map(|v| v + 0.1);
    let s = Scenario::new(truth, hat, Func::constant(1, 1.0), &q1()).unwrap();
    let r = quantile_risk(EstimatorTag::PlugInWate, &s, 1 << 16, 20, 0.9, 1).unwrap();
    assert!((r.quantile_risk - 0.01).abs() < 1e-12, "{}", r.quantile_risk);
}

fn rows() -> impl Strategy<Value = Vec<(f64, u8, u8)>> {
    prop::collection::vec((0.0..1.0f64, 0u8..2, 0u8..2), 1..40)
}

proptest! {
    #[test]
    fn dr_equals_plug_in_when_residuals_vanish(xs in prop::collection::vec(0.0..1.0f64, 1..30), d in prop::collection::vec(0u8..2, 30)) {
        // Binary outcomes only equal ĝ when ĝ ∈ {0, 1}.
        let hat = NuisancePair::new(
            Func::constant(1, 0.5),
            Func::new(1, |x| if x[0] < 0.5 { 0.0 } else { 1.0 }),
            Func::new(1, |x| if x[0] < 0.3 { 1.0 } else { 0.0 }),
            0.1,
        ).unwrap();
        let rows: Vec<(Vec<f64>, u8, u8)> = xs.iter().zip(&d).map(|(&x, &di)| {
            let y = hat.g(di, &[x]) as u8;
            (vec![x], di, y)
        }).collect();
        let data = Dataset::from_rows(1, &rows).unwrap();
        let w = Func::new(1, |x| 1.0 + x[0]);
        let a = dr_wate(&data, &hat, &w).unwrap().value;
        let b = plug_in_wate(&data, &hat, &w).unwrap().value;
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn dr_att_equals_plug_in_when_all_treated(r in rows(), g0 in 0.0..1.0f64) {
        let rows: Vec<(Vec<f64>, u8, u8)> = r.iter().map(|&(x, _, y)| (vec![x], 1, y)).collect();
        let data = Dataset::from_rows(1, &rows).unwrap();
        let hat = NuisancePair::new(Func::constant(1, 0.4), Func::constant(1, g0), Func::constant(1, 0.5), 0.1).unwrap();
        let a = dr_att(&data, &hat).unwrap().value;
        let b = plug_in_att(&data, &hat).unwrap().value;
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn null_weight_gives_zero(r in rows()) {
        let rows: Vec<(Vec<f64>, u8, u8)> = r.iter().map(|&(x, d, y)| (vec![x], d, y)).collect();
        let data = Dataset::from_rows(1, &rows).unwrap();
        let hat = drlab::scenario::grid_center().unwrap();
        let zero = Func::constant(1, 0.0);
        prop_assert_eq!(plug_in_wate(&data, &hat, &zero).unwrap().value, 0.0);
        prop_assert_eq!(dr_wate(&data, &hat, &zero).unwrap().value, 0.0);
    }
}
