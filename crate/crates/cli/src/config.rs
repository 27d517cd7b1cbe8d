//! Experiment configuration: TOML in, validated settings out.

use std::path::Path;

use drlab::adversary::{Case, FamilyConfig, SmallnessPolicy};
use drlab::analysis::{EstimatorTag, PowerLaw};
use drlab::{ErrorBudget, Func, NuisancePair, Quadrature};
use serde::{Deserialize, Serialize};

/// A config problem, tagged with the offending field path.
#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error at `{}`: {}", self.field, self.message)
    }
}

fn bad<T>(field: &str, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError { field: field.into(), message: message.into() })
}

/// A number or a string like `"n^-0.25"` / `"0.5*n^-0.5"`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Expr {
    Num(f64),
    Text(String),
}

impl Expr {
    fn law(&self, field: &str) -> Result<PowerLaw, ConfigError> {
        let law = match self {
            Expr::Num(v) => PowerLaw::constant(*v),
            Expr::Text(s) => match s.parse::<PowerLaw>() {
                Ok(l) => l,
                Err(e) => return bad(field, e.to_string()),
            },
        };
        if !(law.coef >= 0.0) {
            return bad(field, "budget must be non-negative");
        }
        Ok(law)
    }
}

/// One value or a list.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    /// `grid`, `flat` or `smooth`.
    #[serde(default = "default_center")]
    pub center: String,
    #[serde(default = "one")]
    pub dim: usize,
    pub c: Option<f64>,
    /// Common nuisance value of the `flat` center.
    #[serde(default = "half")]
    pub value: f64,
    /// `one`, `grid` or `linear`.
    #[serde(default = "default_weight")]
    pub weight: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSection {
    pub e: Expr,
    pub e_prime: Expr,
    pub f: Expr,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructionSection {
    #[serde(default = "default_case")]
    pub case: String,
    #[serde(default = "four")]
    pub levels: u32,
    /// `record` or `enforce`.
    #[serde(default = "default_policy")]
    pub policy: String,
    /// Sample size at which budget expressions are evaluated.
    #[serde(default = "one")]
    pub n: usize,
    #[serde(default = "default_att_res")]
    pub att_grid_res: usize,
    /// Coefficient multipliers applied after construction, to check that `verify` notices.
    pub mutate: Option<MutateSection>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MutateSection {
    #[serde(default = "unit")]
    pub alpha_m: f64,
    #[serde(default = "unit")]
    pub beta_m: f64,
    #[serde(default = "unit")]
    pub alpha_g: f64,
    #[serde(default = "unit")]
    pub beta_g: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSection {
    pub n: Vec<usize>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    pub gamma: OneOrMany<f64>,
    pub estimators: OneOrMany<String>,
    /// Checkerboard depth of the direction the truth is shifted along.
    #[serde(default = "six")]
    pub direction_levels: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistinguishSection {
    pub n: usize,
    pub trials: usize,
    pub levels: Vec<u32>,
    #[serde(default = "half")]
    pub delta: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default = "hundred")]
    pub lambdas: usize,
    #[serde(default = "ten_thousand")]
    pub points: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection { lambdas: 100, points: 10_000 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub seed: u64,
    pub out: Option<String>,
    pub scenario: ScenarioSection,
    pub budget: BudgetSection,
    #[serde(default = "default_construction")]
    pub construction: ConstructionSection,
    pub rates: Option<RatesSection>,
    pub distinguish: Option<DistinguishSection>,
    #[serde(default)]
    pub verify: VerifySection,
}

fn default_center() -> String {
    "grid".into()
}
fn default_weight() -> String {
    "grid".into()
}
fn default_case() -> String {
    "case1".into()
}
fn default_policy() -> String {
    "record".into()
}
fn default_att_res() -> usize {
    256
}
fn default_reps() -> usize {
    200
}
fn default_construction() -> ConstructionSection {
    toml::from_str("").expect("construction defaults")
}
fn one() -> usize {
    1
}
fn four() -> u32 {
    4
}
fn six() -> u32 {
    6
}
fn unit() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn hundred() -> usize {
    100
}
fn ten_thousand() -> usize {
    10_000
}

/// Validated configuration plus the canonical text it hashes to.
#[derive(Clone, Debug)]
pub struct Config {
    pub raw: RawConfig,
    pub seed: u64,
    pub center: NuisancePair,
    pub weight: Func,
    pub quad: Quadrature,
    pub budget: [PowerLaw; 3],
    /// `all` expands to the five mixture constructions.
    pub cases: Vec<Case>,
    pub policy: SmallnessPolicy,
    pub rates: Option<Rates>,
    pub distinguish: Option<DistinguishSection>,
    pub hash: String,
}

#[derive(Clone, Debug)]
pub struct Rates {
    pub n: Vec<usize>,
    pub reps: usize,
    pub gammas: Vec<f64>,
    pub estimators: Vec<EstimatorTag>,
    pub direction_levels: u32,
}

impl Config {
    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Config, ConfigError> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return bad("<file>", format!("cannot read {}: {e}", path.display())),
        };
        Config::parse(&text, seed_override)
    }

    pub fn parse(text: &str, seed_override: Option<u64>) -> Result<Config, ConfigError> {
        let mut raw: RawConfig = match toml::from_str(text) {
            Ok(r) => r,
            Err(e) => {
                let field = field_from_toml_error(&e);
                return bad(&field, e.message().to_string());
            }
        };
        if let Some(s) = seed_override {
            raw.seed = s;
        }
        Config::validate(raw)
    }

    fn validate(raw: RawConfig) -> Result<Config, ConfigError> {
        let s = &raw.scenario;
        if !(1..=3).contains(&s.dim) {
            return bad("scenario.dim", format!("{} must be 1, 2 or 3", s.dim));
        }
        let center = match s.center.as_str() {
            "grid" if s.dim == 1 => drlab::scenario::grid_center(),
            "grid" => return bad("scenario.center", "the grid center is one-dimensional"),
            "flat" => drlab::scenario::flat_center(s.dim, s.value, s.c.unwrap_or(0.1)),
            "smooth" => drlab::scenario::smooth_center(s.dim),
            other => return bad("scenario.center", format!("unknown center `{other}` (grid, flat, smooth)")),
        };
        let mut center = match center {
            Ok(c) => c,
            Err(e) => return bad("scenario", e.to_string()),
        };
        if let Some(c) = s.c {
            if !(c > 0.0 && c < 0.5) {
                return bad("scenario.c", format!("{c} must lie in (0, 1/2)"));
            }
            center.c = c;
        }
        let quad = Quadrature::default_for(s.dim);
        if !center.is_bounded(&quad) {
            return bad("scenario.c", format!("center leaves [c, 1 - c] for c = {}", center.c));
        }
        let weight = match s.weight.as_str() {
            "one" => Func::constant(s.dim, 1.0),
            "grid" if s.dim == 1 => drlab::scenario::grid_weight(),
            "grid" => return bad("scenario.weight", "the grid weight is one-dimensional"),
            "linear" => Func::new(s.dim, |x| 0.5 + x[0]),
            other => return bad("scenario.weight", format!("unknown weight `{other}` (one, grid, linear)")),
        };
        let budget = [
            raw.budget.e.law("budget.e")?,
            raw.budget.e_prime.law("budget.e_prime")?,
            raw.budget.f.law("budget.f")?,
        ];
        let con = &raw.construction;
        let cases = if con.case == "all" {
            Case::MIXTURES.to_vec()
        } else {
            match con.case.parse::<Case>() {
                Ok(c) => vec![c],
                Err(e) => return bad("construction.case", e.to_string()),
            }
        };
        let policy = match con.policy.as_str() {
            "record" => SmallnessPolicy::Record,
            "enforce" => SmallnessPolicy::Enforce,
            other => return bad("construction.policy", format!("unknown policy `{other}` (record, enforce)")),
        };
        if !(1..=20).contains(&con.levels) {
            return bad("construction.levels", format!("{} must lie in 1..=20", con.levels));
        }
        if con.n == 0 {
            return bad("construction.n", "must be positive");
        }
        let rates = match &raw.rates {
            None => None,
            Some(r) => Some(validate_rates(r)?),
        };
        if let Some(d) = &raw.distinguish {
            if d.n == 0 {
                return bad("distinguish.n", "must be positive");
            }
            if d.trials == 0 {
                return bad("distinguish.trials", "must be positive");
            }
            if d.levels.is_empty() || d.levels.iter().any(|l| !(1..=20).contains(l)) {
                return bad("distinguish.levels", "needs one or more levels in 1..=20");
            }
            if !(0.0..=2.0).contains(&d.delta) {
                return bad("distinguish.delta", format!("{} must lie in [0, 2]", d.delta));
            }
        }
        if raw.verify.lambdas == 0 || raw.verify.points == 0 {
            return bad("verify", "lambdas and points must be positive");
        }
        let canonical = toml::to_string(&raw).expect("config serializes");
        let hash = hex::encode(sha2::Sha256::digest(canonical.as_bytes()));
        Ok(Config {
            seed: raw.seed,
            center,
            weight,
            quad,
            budget,
            cases,
            policy,
            rates,
            distinguish: raw.distinguish.clone(),
            hash,
            raw,
        })
    }

    pub fn budget_at(&self, n: usize) -> drlab::Result<ErrorBudget> {
        ErrorBudget::new(self.budget[0].eval(n), self.budget[1].eval(n), self.budget[2].eval(n))
    }

    pub fn family_config(&self, case: Case, levels: u32) -> drlab::Result<FamilyConfig> {
        let con = &self.raw.construction;
        Ok(FamilyConfig {
            policy: self.policy,
            att_grid_res: con.att_grid_res,
            n: con.n,
            ..FamilyConfig::new(case, self.budget_at(con.n)?, levels)
        })
    }
}

use sha2::Digest;

fn validate_rates(r: &RatesSection) -> Result<Rates, ConfigError> {
    if r.n.windows(2).any(|p| p[1] <= p[0]) {
        return bad("rates.n", "must be strictly increasing");
    }
    if r.n.len() < 4 {
        return bad("rates.n", "needs at least 4 values");
    }
    if r.n[0] == 0 {
        return bad("rates.n", "values must be positive");
    }
    if r.reps < 20 {
        return bad("rates.reps", format!("{} must be at least 20", r.reps));
    }
    let gammas = r.gamma.to_vec();
    if gammas.is_empty() {
        return bad("rates.gamma", "needs at least one value");
    }
    for g in &gammas {
        if !(*g > 0.0 && *g < 1.0) {
            return bad("rates.gamma", format!("gamma = {g} must lie in (0, 1)"));
        }
    }
    let mut estimators = Vec::new();
    for name in r.estimators.to_vec() {
        match name.parse::<EstimatorTag>() {
            Ok(t) => estimators.push(t),
            Err(e) => return bad("rates.estimators", e.to_string()),
        }
    }
    if estimators.is_empty() {
        return bad("rates.estimators", "needs at least one estimator");
    }
    Ok(Rates {
        n: r.n.clone(),
        reps: r.reps,
        gammas,
        estimators,
        direction_levels: r.direction_levels,
    })
}

/// Best-effort dotted path for a TOML decode error, from the span in the source.
fn field_from_toml_error(e: &toml::de::Error) -> String {
    let msg = e.message();
    for marker in ["unknown field `", "missing field `"] {
        if let Some(rest) = msg.split(marker).nth(1) {
            if let Some(name) = rest.split('`').next() {
                return name.to_string();
            }
        }
    }
    "<document>".into()
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        seed = 3
        [scenario]
        center = "grid"
        [budget]
        e = 1e-3
        e_prime = "n^-0.25"
        f = "2 * n^-0.5"
    "#;

    #[test]
    fn parses_budget_expressions() {
        let c = Config::parse(BASE, None).unwrap();
        let b = c.budget_at(16).unwrap();
        assert_eq!((b.e, b.e_prime, b.f), (1e-3, 0.5, 0.5));
        assert_eq!(c.cases, vec![Case::Case1]);
    }

    #[test]
    fn seed_override_changes_hash() {
        let a = Config::parse(BASE, None).unwrap();
        let b = Config::parse(BASE, Some(4)).unwrap();
        assert_eq!(b.seed, 4);
        assert_ne!(a.hash, b.hash);
        assert_eq!(a.hash, Config::parse(BASE, None).unwrap().hash);
    }

    #[test]
    fn bad_gamma_names_the_field() {
        let text = format!("{BASE}\n[rates]\nn = [1, 2, 3, 4]\ngamma = 1.5\nestimators = \"dr_wate\"\n");
        let e = Config::parse(&text, None).unwrap_err();
        assert_eq!(e.field, "rates.gamma");
        assert!(e.to_string().contains("gamma"));
    }

    #[test]
    fn unknown_field_is_reported() {
        let e = Config::parse(&format!("{BASE}\nbogus = 1\n"), None).unwrap_err();
        assert_eq!(e.field, "bogus");
    }
}
