//! Residual-decomposition planner and oracle builder.

pub mod hash;
pub mod merge;
pub mod oracle;
pub mod params;
pub mod perturb;
pub mod plan;

pub use hash::{find_hash_matrix, hash_state_for, HashState};
pub use merge::{merge_phase_oracles, TruthTable};
pub use oracle::{parse_step_descriptions, plan_to_oracle, OracleSpec, ParsedStep};
pub use params::{derive_hash_params, derive_params, params_for, Strategy, SynthesisParams};
pub use perturb::perturbed_sign;
pub use plan::{
    build_plan, build_plan_with, ModeKind, PlanMode, PlanStep, StepPayload, SynthesisPlan,
};
