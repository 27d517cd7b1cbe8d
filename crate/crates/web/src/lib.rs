//! Browser bindings: JSON in, JSON out. Each entry point has a plain-Rust twin
//! (`*_json`) so it can be tested natively.

use drlab::adversary::{
    assemble_family, lemma1_premises, verify_mixture_equality, verify_separation, Case, FamilyConfig,
    SmallnessPolicy,
};
use drlab::analysis::{distinguishability_experiment, rate_sweep, shifted_truth_scenario, EstimatorTag};
use drlab::scenario::{flat_center, grid_center, grid_weight};
use drlab::{ErrorBudget, Func, NuisancePair, Quadrature};
use serde::Deserialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn parse<'a, T: Deserialize<'a>>(input: &'a str) -> Result<T, String> {
    serde_json::from_str(input).map_err(|e| format!("bad request: {e}"))
}

fn err(e: drlab::Error) -> String {
    e.to_string()
}

fn center(name: &str, c: f64) -> Result<(NuisancePair, Func), String> {
    match name {
        "grid" => Ok((grid_center().map_err(err)?, grid_weight())),
        "flat" => Ok((flat_center(1, 0.5, c).map_err(err)?, Func::constant(1, 1.0))),
        other => Err(format!("unknown center `{other}`")),
    }
}

#[derive(Deserialize)]
struct FamilyRequest {
    case: String,
    center: String,
    #[serde(default = "default_c")]
    c: f64,
    budget: f64,
    levels: u32,
    #[serde(default)]
    seed: u64,
    /// Plot resolution.
    #[serde(default = "default_samples")]
    samples: usize,
}

fn default_c() -> f64 {
    0.1
}
fn default_samples() -> usize {
    400
}

/// Builds a family and returns its parameters, checks and one member's curves.
pub fn family_json(input: &str) -> Result<String, String> {
    let r: FamilyRequest = parse(input)?;
    let case: Case = r.case.parse().map_err(err)?;
    if !case.is_mixture() {
        return Err("pick one of case1..case4 or att".into());
    }
    if !(1..=10).contains(&r.levels) {
        return Err("levels must lie in 1..=10".into());
    }
    let (center, w) = center(&r.center, r.c)?;
    let quad = Quadrature::default_for(1);
    let cfg = FamilyConfig {
        policy: SmallnessPolicy::Record,
        ..FamilyConfig::new(case, ErrorBudget::uniform(r.budget).map_err(err)?, r.levels)
    };
    let fam = assemble_family(&cfg, &center, &w, &quad).map_err(err)?;
    let lambda = fam.random_lambda(r.seed, 0);
    let member = fam.pair(&lambda);
    let n = r.samples.clamp(16, 4000);
    let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let curve = |f: &Func| xs.iter().map(|&x| f.eval(&[x])).collect::<Vec<_>>();
    let sep = verify_separation(&fam, std::slice::from_ref(&lambda), &quad);
    let l1 = lemma1_premises(&fam, &quad);
    Ok(json!({
        "case": case.to_string(),
        "cells": fam.partition.len(),
        "alpha": fam.params.alpha,
        "beta": fam.params.beta,
        "smallness_holds": fam.params.smallness_holds(),
        "mixture_deviation": verify_mixture_equality(&fam, &quad),
        "separation_gap": sep.gaps[0],
        "separation_required": sep.required,
        "lemma1_b": l1.b,
        "x": xs,
        "center": { "m": curve(&center.m), "g0": curve(&center.g0), "g1": curve(&center.g1) },
        "member": { "m": curve(&member.m), "g0": curve(&member.g0), "g1": curve(&member.g1) },
    })
    .to_string())
}

#[derive(Deserialize)]
struct RatesRequest {
    estimator: String,
    /// Budgets are `n^exponent` (use a very negative value for zero budgets).
    exponent: f64,
    #[serde(default)]
    zero_budget: bool,
    n: Vec<usize>,
    reps: usize,
    gamma: f64,
    #[serde(default)]
    seed: u64,
}

/// Quantile-risk sweep around the flat center; returns rows and the fitted slope.
pub fn rates_json(input: &str) -> Result<String, String> {
    let r: RatesRequest = parse(input)?;
    let tag: EstimatorTag = r.estimator.parse().map_err(err)?;
    if r.n.iter().any(|&n| n > 1 << 16) || r.reps > 2000 {
        return Err("keep n <= 65536 and reps <= 2000 in the browser".into());
    }
    let (center, _) = center("flat", 0.1)?;
    let w = Func::constant(1, 1.0);
    let quad = Quadrature::default_for(1);
    let dir = Func::checkerboard(1, 6);
    let family = |n: usize| {
        let b = if r.zero_budget { 0.0 } else { (n as f64).powf(r.exponent) };
        shifted_truth_scenario(&center, &w, &ErrorBudget::uniform(b)?, &dir, &quad)
    };
    let rep = rate_sweep(family, &r.n, tag, &[r.gamma], r.reps, r.seed).map_err(err)?;
    let rows: Vec<Value> = rep.rows.iter().map(|x| json!({ "n": x.n, "risk": x.quantile_risk })).collect();
    Ok(json!({
        "estimator": tag.to_string(),
        "rows": rows,
        "slope": rep.fitted_slope,
        "stderr": rep.slope_stderr,
    })
    .to_string())
}

#[derive(Deserialize)]
struct DistinguishRequest {
    levels: Vec<u32>,
    n: usize,
    trials: usize,
    #[serde(default = "default_dc")]
    c: f64,
    #[serde(default = "default_db")]
    budget: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_delta")]
    delta: f64,
}

fn default_dc() -> f64 {
    0.45
}
fn default_db() -> f64 {
    0.36
}
fn default_delta() -> f64 {
    0.5
}

/// Likelihood-ratio test error of the Case-1 family for each cell count.
pub fn distinguish_json(input: &str) -> Result<String, String> {
    let r: DistinguishRequest = parse(input)?;
    if r.levels.iter().any(|l| !(1..=14).contains(l)) || r.trials > 5000 || r.n > 4096 {
        return Err("keep levels in 1..=14, trials <= 5000 and n <= 4096".into());
    }
    let (center, w) = center("flat", r.c)?;
    let quad = Quadrature::default_for(1);
    let mut out = Vec::new();
    for &lv in &r.levels {
        let cfg = FamilyConfig::new(Case::Case1, ErrorBudget::uniform(r.budget).map_err(err)?, lv);
        let fam = assemble_family(&cfg, &center, &w, &quad).map_err(err)?;
        let rep = distinguishability_experiment(&fam, r.n, r.trials, r.seed, r.delta).map_err(err)?;
        out.push(json!({
            "cells": rep.m,
            "error": rep.empirical_test_error,
            "fano_floor": rep.fano_floor,
        }));
    }
    Ok(Value::Array(out).to_string())
}

#[wasm_bindgen]
pub fn family(input: &str) -> Result<String, JsValue> {
    family_json(input).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn rates(input: &str) -> Result<String, JsValue> {
    rates_json(input).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn distinguish(input: &str) -> Result<String, JsValue> {
    distinguish_json(input).map_err(|e| JsValue::from_str(&e))
}
