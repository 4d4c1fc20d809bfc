//! Axiom systems, normalisation to basic terms, and the harnesses that test
//! soundness and completeness against the operational semantics.

mod harness;
mod nf;
mod rewrite;
mod schema;

pub use harness::{
    check_coincidence, check_completeness, check_soundness, find_hhp_witness, schema_instances, substitutions,
    CoincidenceReport, CompletenessReport, Divergence, HarnessOptions, HhpWitness, HhpWitnessReport, InstanceFailure,
    SchemaTally, SoundnessReport, Violation,
};
pub use nf::{NormalForm, Summand, Tail};
pub use rewrite::{
    normal_form, normalize, normalize_bounded, normalize_shuffled, replay, Position, RewriteReport, TraceEntry,
    DEFAULT_REWRITE_BUDGET,
};
pub use schema::{axiom_schemas, instantiate, AxiomSchema, Meta, Pattern, SideCondition, Substitution, Var};
