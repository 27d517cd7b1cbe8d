use std::fs;

use drlab::adversary::{
    assemble_family, lemma1_premises, verify_delta_identities, verify_family_membership, verify_mixture_equality,
    verify_radii, verify_separation, Case, PerturbedFamily, Tweak,
};
use drlab::analysis::{distinguishability_experiment, rate_sweep, shifted_truth_scenario, RiskReport};
use drlab::nuisance_oracle::NormKind;
use drlab::rng::stream_rng;
use drlab::Func;
use rand::Rng;
use serde_json::json;

use crate::config::{Config, ConfigError};
use crate::output::Output;
use crate::svg;

pub enum Failure {
    Config(String),
    Invariant(String),
    Runtime(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Invariant(_) => 3,
            Failure::Runtime(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Invariant(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(format!("i/o error: {e}"))
    }
}

/// Library errors that come from the configured inputs count as config errors.
impl From<drlab::Error> for Failure {
    fn from(e: drlab::Error) -> Self {
        use drlab::Error::*;
        match e {
            InvalidArgument(_)
            | CaseMismatch { .. }
            | NTooSmall { .. }
            | BudgetInfeasible { .. }
            | ConstructionInvalid { .. }
            | DegenerateConstruction(_)
            | DegeneratePropensity(_) => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn family(cfg: &Config, case: Case, levels: u32) -> Result<PerturbedFamily, Failure> {
    let fc = cfg.family_config(case, levels)?;
    let fam = assemble_family(&fc, &cfg.center, &cfg.weight, &cfg.quad)?;
    Ok(match cfg.raw.construction.mutate {
        Some(m) => fam.with_tweak(Tweak {
            alpha_m: m.alpha_m,
            beta_m: m.beta_m,
            alpha_g: m.alpha_g,
            beta_g: m.beta_g,
        }),
        None => fam,
    })
}

fn levels(cfg: &Config) -> u32 {
    cfg.raw.construction.levels
}

struct Check {
    name: &'static str,
    case: Case,
    value: f64,
    threshold: f64,
    pass: bool,
}

pub fn verify(cfg: &Config, out: &mut Output) -> Result<(), Failure> {
    let q = &cfg.quad;
    let mut checks = Vec::new();
    let mut rng = stream_rng(cfg.seed, u64::MAX);
    let dim = cfg.center.dim();
    let points: Vec<Vec<f64>> = (0..cfg.raw.verify.points).map(|_| (0..dim).map(|_| rng.random()).collect()).collect();
    for &case in &cfg.cases {
        let fam = family(cfg, case, levels(cfg))?;
        let lambdas: Vec<_> = (0..cfg.raw.verify.lambdas).map(|i| fam.random_lambda(cfg.seed, i as u64)).collect();
        let mut push = |name, value: f64, threshold: f64, pass: bool| {
            checks.push(Check { name, case, value, threshold, pass });
        };
        if case.is_mixture() {
            let id = verify_delta_identities(&fam.partition, &fam.w, &fam.what, &lambdas, &points, q);
            push("delta_mean", id.max_mean, 0.0, id.max_mean == 0.0);
            push("delta_square", id.max_square_dev, 0.0, id.max_square_dev == 0.0);
            if case != Case::Att {
                push("delta_weighted_mean", id.max_weighted_mean, 1e-9, id.max_weighted_mean <= 1e-9);
            }
            let dev = verify_mixture_equality(&fam, q);
            push("mixture_equality", dev, 1e-10, dev <= 1e-10);
            let l1 = lemma1_premises(&fam, q);
            push("lemma1_b", l1.b, l1.b_bound, l1.b <= l1.b_bound);
            let target = 2.0 / fam.partition.len() as f64;
            let pj = (l1.max_pj - target).abs().max((l1.min_pj - target).abs());
            push("cell_pair_mass", pj, 1e-12, pj <= 1e-12);
        }
        let budget = cfg.budget_at(cfg.raw.construction.n)?;
        if case != Case::OracleShift {
            let mem = verify_family_membership(&fam, &budget, &lambdas, q, NormKind::L2);
            push("membership", mem.members as f64, mem.checked as f64, mem.all_member);
        }
        for r in verify_radii(&fam, &lambdas, q).checks {
            let name = match (r.component, r.r.is_infinite()) {
                ("m", false) => "radius_m_l2",
                ("m", true) => "radius_m_sup",
                ("g0", false) => "radius_g0_l2",
                ("g0", true) => "radius_g0_sup",
                (_, false) => "radius_g1_l2",
                (_, true) => "radius_g1_sup",
            };
            push(name, r.observed, r.bound, r.holds);
        }
        let sep = verify_separation(&fam, &lambdas, q);
        push("separation_margin", sep.min_margin, -drlab::adversary::SEPARATION_SLACK, sep.pass);
    }
    let rows: Vec<String> = checks
        .iter()
        .map(|c| format!("{},{},{},{},{}", c.name, c.case, c.value, c.threshold, c.pass))
        .collect();
    out.csv("verify.csv", "check,case,value,threshold,pass", &rows)?;
    let failed: Vec<String> = checks.iter().filter(|c| !c.pass).map(|c| format!("{}/{}", c.case, c.name)).collect();
    for c in &checks {
        eprintln!("{} {:<8} {:<22} {:.3e} (threshold {:.3e})", if c.pass { "ok  " } else { "FAIL" }, c.case.to_string(), c.name, c.value, c.threshold);
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Invariant(format!("invariant checks failed: {}", failed.join(", "))))
    }
}

pub fn rates(cfg: &Config, out: &mut Output) -> Result<(), Failure> {
    let r = cfg
        .rates
        .as_ref()
        .ok_or_else(|| Failure::Config("config error at `rates`: section required for `rates`".into()))?;
    let dir = Func::checkerboard(cfg.center.dim(), r.direction_levels);
    let label = cfg.raw.scenario.center.clone();
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    let mut series = Vec::new();
    for &tag in &r.estimators {
        let scenario = |n: usize| {
            let b = cfg.budget_at(n)?;
            shifted_truth_scenario(&cfg.center, &cfg.weight, &b, &dir, &cfg.quad)
        };
        let rep: RiskReport = rate_sweep(scenario, &r.n, tag, &r.gammas, r.reps, cfg.seed)?;
        for row in &rep.rows {
            rows.push(format!("{},{},{},{},{tag},{label}", row.n, row.gamma, row.quantile_risk, row.reps));
        }
        for &g in &r.gammas {
            let (slope, se) = rep.fit_for(g).unwrap_or((f64::NAN, f64::NAN));
            fits.push(format!("{tag},{g},{slope},{se},{}", r.n.len()));
            series.push(svg::Series {
                label: format!("{tag} γ={g} slope {slope:.2}"),
                points: rep.rows.iter().filter(|x| x.gamma == g).map(|x| (x.n as f64, x.quantile_risk)).collect(),
            });
            eprintln!("{tag} gamma={g}: slope {slope:.3} ± {se:.3}");
        }
    }
    out.csv("rates.csv", "n,gamma,quantile_risk,reps,estimator,case", &rows)?;
    out.csv("rates_fit.csv", "estimator,gamma,fitted_slope,slope_stderr,points", &fits)?;
    out.commented("rates.svg", &svg::loglog("Quantile risk against n", "n", "quantile risk", &series))?;
    Ok(())
}

pub fn distinguish(cfg: &Config, out: &mut Output) -> Result<(), Failure> {
    let d = cfg
        .distinguish
        .as_ref()
        .ok_or_else(|| Failure::Config("config error at `distinguish`: section required for `distinguish`".into()))?;
    let mut rows = Vec::new();
    for &case in &cfg.cases {
        if !case.is_mixture() {
            return Err(Failure::Config(format!("config error at `construction.case`: {case} is not a mixture")));
        }
        for &lv in &d.levels {
            let fam = family(cfg, case, lv)?;
            let r = distinguishability_experiment(&fam, d.n, d.trials, cfg.seed, d.delta)?;
            eprintln!("{case} M={}: test error {:.3} (floor {:.3})", r.m, r.empirical_test_error, r.fano_floor);
            rows.push(format!(
                "{},{},{},{},{},{},{},{case}",
                r.n, r.m, r.trials, r.errors, r.empirical_test_error, r.delta, r.fano_floor
            ));
        }
    }
    out.csv("distinguish.csv", "n,M,trials,errors,empirical_test_error,delta,fano_floor,case", &rows)?;
    Ok(())
}

pub fn adversary(cfg: &Config, out: &mut Output) -> Result<(), Failure> {
    let mut records = Vec::new();
    for &case in &cfg.cases {
        let fam = family(cfg, case, levels(cfg))?;
        let mut rec = json!({
            "case": case.to_string(),
            "cells": fam.partition.len(),
            "params": fam.params,
        });
        if case.is_mixture() {
            rec["mixture_deviation"] = json!(verify_mixture_equality(&fam, &cfg.quad));
            rec["lemma1"] = json!(lemma1_premises(&fam, &cfg.quad));
        }
        if let Some(aux) = &fam.aux {
            rec["att_auxiliary"] = json!(aux.summary());
        }
        eprintln!("{case}: alpha {:.4e}, beta {:.4e}, xi {:.4e}", fam.params.alpha, fam.params.beta, fam.params.xi);
        records.push(rec);
    }
    out.json("adversary.json", &json!(records))?;
    Ok(())
}

/// Summarizes whatever CSVs are present in the output directory.
pub fn report(out: &mut Output) -> Result<(), Failure> {
    let mut md = String::from("# Experiment summary\n");
    let mut summary = Vec::new();
    let mut found = 0;
    for (file, title) in [
        ("verify.csv", "Invariant checks"),
        ("rates_fit.csv", "Rate fits"),
        ("rates.csv", "Quantile risk"),
        ("distinguish.csv", "Distinguishability"),
    ] {
        let path = out.dir().join(file);
        let Ok(text) = fs::read_to_string(&path) else { continue };
        found += 1;
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| Failure::Runtime(format!("{file}: {e}")))?.clone();
        let stamp = text.lines().next().filter(|l| l.starts_with('#')).unwrap_or("");
        md.push_str(&format!("\n## {title}\n\nSource `{file}` ({})\n\n", stamp.trim_start_matches("# ")));
        md.push_str(&format!("| {} |\n|{}\n", headers.iter().collect::<Vec<_>>().join(" | "), "---|".repeat(headers.len())));
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Failure::Runtime(format!("{file}: {e}")))?;
            md.push_str(&format!("| {} |\n", rec.iter().collect::<Vec<_>>().join(" | ")));
            for (h, v) in headers.iter().zip(rec.iter()) {
                summary.push(format!("{file},{i},{h},{v}"));
            }
        }
    }
    if found == 0 {
        return Err(Failure::Config(format!(
            "config error at `out`: no result CSVs found in {}",
            out.dir().display()
        )));
    }
    out.commented("report.md", &md)?;
    out.csv("summary.csv", "source,row,column,value", &summary)?;
    Ok(())
}
