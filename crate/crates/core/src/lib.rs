//! Coordination mechanisms for selfish scheduling on unrelated machines.
//!
//! Each machine runs a local policy (SmithRule, ProportionalSharing, Rand or
//! Approx); jobs pick machines selfishly. The crate evaluates completion times
//! exactly over rationals, checks the quadratic-form identities behind those
//! costs, runs potential-game dynamics, and provides brute-force oracles and
//! lower-bound instance families for desk-scale price-of-anarchy experiments.

pub mod dynamics;
pub mod error;
pub mod generate;
pub mod geometry;
pub mod instance;
pub mod oracle;
pub mod policies;
pub mod rational;
pub mod reduction;

pub use dynamics::{
    approx_guarantee, approx_schedule, approx_schedule_with, basic_dynamics, best_response,
    delta_gap, is_nash, potential, ApproxOutcome, DynamicsConfig, DynamicsStep, DynamicsTrace,
    NashVerdict, NashWitness,
};
pub use error::{Error, Result};
pub use generate::{
    gen_random, gen_smithrule_lowerbound, gen_tree_lowerbound, gen_tree_lowerbound_with,
    random_assignment, suite, LowerBoundBundle, RandomParams, TreeVariant,
};
pub use geometry::{
    chung_ratio, chung_ratio_exact, cost_identity_report, kernel_inner, kernel_pd_check,
    l2_inner, lemma_ineq_check, signature, step_profile, IdentityReport, Signature, StepProfile,
};
pub use instance::{
    lambda_term, load_assignment, load_instance, serialize_instance, Assignment, CostReport,
    Instance, PolicyKind,
};
pub use oracle::{brute_force_opt, enumerate_pure_nash, poa_report, PoAReport};
pub use policies::{
    deviation_cost, fluid_simulate_ps, policy_completion, rand_exhaustive_expectation,
    rand_precedence_prob, rand_sample_order, social_cost, DeviationQuery,
};
pub use rational::Rational;
pub use reduction::{
    equivalence_check, routing_costs, routing_is_nash, to_priority_routing, RoutingChoice,
    RoutingInstance,
};
