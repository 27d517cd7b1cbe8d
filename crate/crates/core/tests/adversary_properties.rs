use std::sync::Arc;

use drlab::adversary::{
    assemble_family, build_partition, choose_u, construct, lemma1_premises, split_half, truncate_weight,
    verify_family_membership, verify_mixture_equality, verify_separation, Case, FamilyConfig, PerturbationParams,
    RectCollection, SmallnessPolicy, Tweak,
};
use drlab::nuisance_oracle::{verify_membership, NormKind};
use drlab::scenario::{flat_center, grid_center, grid_weight, smooth_center};
use drlab::{ErrorBudget, Func, NuisancePair, Quadrature};
use proptest::prelude::*;

fn q1() -> Quadrature {
    Quadrature::default_for(1)
}

#[test]
fn corrupted_case1_breaks_mixture_equality() {
    let center = flat_center(1, 0.5, 0.45).unwrap();
    let cfg = FamilyConfig::new(Case::Case1, ErrorBudget::uniform(0.36).unwrap(), 4);
    let fam = assemble_family(&cfg, &center, &Func::constant(1, 1.0), &q1()).unwrap();
    assert!(verify_mixture_equality(&fam, &q1()) <= 1e-12);
    let bad = fam.with_tweak(Tweak { beta_m: 2.0, ..Tweak::default() });
    let dev = verify_mixture_equality(&bad, &q1());
    assert!(dev > 1e-4, "deviation {dev}");
}

#[test]
fn case1_member_at_selected_params() {
    let center = grid_center().unwrap();
    let budget = ErrorBudget::new(0.0, 4e-3, 1e-3).unwrap();
    let cfg = FamilyConfig::new(Case::Case1, budget, 5);
    let fam = assemble_family(&cfg, &center, &grid_weight(), &q1()).unwrap();
    for s in 0..10 {
        let l = fam.random_lambda(9, s);
        assert!(verify_membership(&fam.pair(&l), &center, &budget, &q1()).member);
    }
}

#[test]
fn choose_u_bounds_hold() {
    let center = grid_center().unwrap();
    let aux = choose_u(&center, 32, 256, &q1()).unwrap();
    let nodes = q1().unit_nodes(1, aux.u.knots());
    assert!(nodes.sup_abs(|x| aux.u.eval(x)) <= aux.big_c_u);
    let moment = nodes.integrate(|x| {
        let m = center.m.eval(x);
        aux.u.eval(x) / (m * (1.0 - m))
    });
    assert!(moment >= aux.c_u, "{moment} < {}", aux.c_u);
}

#[test]
fn null_perturbation_has_zero_gap_and_zero_b() {
    let center = grid_center().unwrap();
    let wp = build_partition(&grid_weight(), 3, 1e-12, &q1()).unwrap();
    for case in [Case::Case1, Case::Case2, Case::Case3, Case::Case4] {
        let params = PerturbationParams::manual(case, 0.0, 0.0, 0.0);
        let fam = construct(case, &center, Arc::new(wp.partition.clone()), &params, Some(&wp.w), None, &q1()).unwrap();
        let l = vec![fam.random_lambda(1, 0)];
        let sep = verify_separation(&fam, &l, &q1());
        assert!(sep.gaps[0].abs() <= 1e-15, "{case}: {}", sep.gaps[0]);
        assert!(lemma1_premises(&fam, &q1()).b <= 1e-30, "{case}");
    }
}

#[test]
fn families_in_two_and_three_dimensions() {
    for dim in [2, 3] {
        let q = Quadrature::default_for(dim);
        let center = smooth_center(dim).unwrap();
        let w = Func::new(dim, |x| 0.5 + x[0]);
        let budget = ErrorBudget::uniform(1e-3).unwrap();
        for case in [Case::Case1, Case::Case4] {
            let fam = assemble_family(&FamilyConfig::new(case, budget, 3), &center, &w, &q).unwrap();
            assert!(verify_mixture_equality(&fam, &q) <= 1e-12, "K={dim} {case}");
            let ls: Vec<_> = (0..5).map(|s| fam.random_lambda(2, s)).collect();
            assert!(verify_separation(&fam, &ls, &q).pass, "K={dim} {case}");
            assert!(verify_family_membership(&fam, &budget, &ls, &q, NormKind::L2).all_member);
            assert!(lemma1_premises(&fam, &q).bound_ok);
        }
    }
    // ATT on a 2-D grid center.
    let q = Quadrature::default_for(2);
    let g1 = Func::grid(2, 4, (0..16).map(|i| 0.3 + 0.03 * i as f64).collect());
    let center = NuisancePair::new(Func::constant(2, 0.5), Func::constant(2, 0.3), g1, 0.1).unwrap();
    let cfg = FamilyConfig { att_grid_res: 8, ..FamilyConfig::new(Case::Att, ErrorBudget::uniform(1e-3).unwrap(), 4) };
    let fam = assemble_family(&cfg, &center, &Func::constant(2, 1.0), &q).unwrap();
    assert!(verify_mixture_equality(&fam, &q) <= 1e-12);
    let ls: Vec<_> = (0..5).map(|s| fam.random_lambda(4, s)).collect();
    assert!(verify_separation(&fam, &ls, &q).pass);
}

#[test]
fn enforce_policy_rejects_large_budgets() {
    let center = grid_center().unwrap();
    let cfg = FamilyConfig {
        policy: SmallnessPolicy::Enforce,
        ..FamilyConfig::new(Case::Case1, ErrorBudget::uniform(1e-3).unwrap(), 4)
    };
    let r = assemble_family(&cfg, &center, &grid_weight(), &q1());
    assert!(matches!(r, Err(drlab::Error::NTooSmall { .. })));
}

fn pl_weight() -> impl Strategy<Value = Func> {
    (prop::collection::vec(0.0..1.0f64, 0..6), prop::collection::vec(0.0..2.0f64, 8)).prop_map(|(mut inner, vals)| {
        inner.extend([0.0, 1.0]);
        inner.sort_by(f64::total_cmp);
        inner.dedup();
        let mut v: Vec<f64> = vals[..inner.len()].to_vec();
        v[0] += 0.1;
        Func::piecewise_linear(inner, v)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn split_halves_measure_and_weight(w in pl_weight()) {
        let q = q1();
        let unit = RectCollection::unit(1);
        let total = unit.integrate(&w, &q);
        let (a, b) = split_half(&unit, &w, 1e-13, &q).unwrap();
        for h in [&a, &b] {
            prop_assert!((h.measure() - 0.5).abs() <= 1e-9);
            prop_assert!((h.integrate(&w, &q) / total - 0.5).abs() <= 1e-9);
        }
    }

    #[test]
    fn weighted_partition_balances(w in pl_weight()) {
        // w·ŵ is piecewise quadratic: two-point Gauss is exact on every knot-cut box.
        let q = Quadrature::new(1024, drlab::Rule::GaussLegendre(2)).unwrap();
        let wp = build_partition(&w, 2, 1e-13, &q).unwrap();
        let target = wp.w.mul(&wp.what);
        let masses: Vec<f64> = wp.partition.cells().iter().map(|c| c.integrate(&target, &q)).collect();
        let mean = masses.iter().sum::<f64>() / masses.len() as f64;
        for m in masses {
            prop_assert!((m - mean).abs() <= 1e-9);
        }
        for c in wp.partition.cells() {
            prop_assert!((c.measure() - 0.25).abs() <= 1e-12);
        }
    }

    #[test]
    fn truncated_weight_is_dominated(w in pl_weight(), x in 0.0..1.0f64) {
        let what = truncate_weight(&w, &q1()).unwrap();
        prop_assert!(what.eval(&[x]) <= w.eval(&[x]));
    }

    #[test]
    fn mixture_equality_on_random_flat_centers(
        m in 0.2..0.8f64, g0 in 0.2..0.8f64, g1 in 0.2..0.8f64, b in 1e-5..1e-3f64, case in 0usize..4,
    ) {
        let center = NuisancePair::constant(1, m, g0, g1, 0.15).unwrap();
        let case = Case::MIXTURES[case];
        let budget = ErrorBudget::uniform(b).unwrap();
        let fam = assemble_family(&FamilyConfig::new(case, budget, 3), &center, &Func::new(1, |x| 1.0 + x[0]), &q1()).unwrap();
        prop_assert!(verify_mixture_equality(&fam, &q1()) <= 1e-12);
        let ls: Vec<_> = (0..3).map(|s| fam.random_lambda(5, s)).collect();
        prop_assert!(verify_separation(&fam, &ls, &q1()).pass);
    }
}
