//! Lower-bound constructions: weighted partitions, the bump `Δ(λ,x)`, the
//! perturbed families and their verifiers.

pub mod bump;
pub mod choose_u;
pub mod construct;
pub mod params;
pub mod partition;
pub mod verify;

pub use bump::{bump, bump_func, cell_sign, orient_weight, sup_norm, truncate_weight, RademacherAssignment};
pub use choose_u::{choose_u, AttAuxiliary};
pub use construct::{construct, param_inputs, perturb_point, Local, PerturbedFamily, Tweak};
pub use params::{select_params, Case, ParamInputs, PerturbationParams, SmallnessPolicy};
pub use partition::{build_partition, split_half, split_half_alpha, union_knots, Partition, RectCollection, WeightedPartition};
pub use verify::{
    lemma1_premises, member_functional, verify_delta_identities, verify_family_membership, verify_mixture_equality,
    verify_radii, verify_separation, DeltaIdentities, Lemma1Report, MembershipSummary, RadiusCheck, RadiusReport,
    SeparationReport, SEPARATION_SLACK,
};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::func::Func;
use crate::model::NuisancePair;
use crate::nuisance_oracle::ErrorBudget;
use crate::quadrature::Quadrature;

/// Everything needed to go from a center to a verified family in one call.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyConfig {
    pub case: Case,
    pub budget: ErrorBudget,
    /// `M = 2^levels` cells.
    pub levels: u32,
    pub policy: SmallnessPolicy,
    /// Balance tolerance for weighted splits.
    pub split_tol: f64,
    /// Fine grid cells per axis for the ATT partition.
    pub att_grid_res: usize,
    /// Sample size (sets `ξ` for the oracle shift).
    pub n: usize,
}

impl FamilyConfig {
    pub fn new(case: Case, budget: ErrorBudget, levels: u32) -> Self {
        FamilyConfig {
            case,
            budget,
            levels,
            policy: SmallnessPolicy::Record,
            split_tol: 1e-12,
            att_grid_res: 256,
            n: 1,
        }
    }
}

/// Partition, parameters and construction for `cfg.case` around `center`.
pub fn assemble_family(
    cfg: &FamilyConfig,
    center: &NuisancePair,
    w: &Func,
    quad: &Quadrature,
) -> Result<PerturbedFamily> {
    let dim = center.dim();
    match cfg.case {
        Case::Att => {
            let aux = choose_u(center, 1usize << cfg.levels, cfg.att_grid_res, quad)?;
            let inputs = param_inputs(Case::Att, center, w, Some(&aux), cfg.n, quad)?;
            let params = select_params(Case::Att, &cfg.budget, &inputs, cfg.policy)?;
            construct(Case::Att, center, aux.partition.clone(), &params, None, Some(&aux), quad)
        }
        Case::OracleShift => {
            let (w, _) = bump::orient_weight(w, quad)?;
            let inputs = param_inputs(Case::OracleShift, center, &w, None, cfg.n, quad)?;
            let params = select_params(Case::OracleShift, &cfg.budget, &inputs, cfg.policy)?;
            let partition = Arc::new(Partition::uniform(dim, 2)?);
            construct(Case::OracleShift, center, partition, &params, Some(&w), None, quad)
        }
        case => {
            let wp = build_partition(w, cfg.levels, cfg.split_tol, quad)?;
            let inputs = param_inputs(case, center, &wp.w, None, cfg.n, quad)?;
            let params = select_params(case, &cfg.budget, &inputs, cfg.policy)?;
            construct(case, center, Arc::new(wp.partition), &params, Some(&wp.w), None, quad)
        }
    }
}
