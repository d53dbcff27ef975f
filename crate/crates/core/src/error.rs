use thiserror::Error;

use crate::instance::PolicyKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    Parse(String),

    #[error("invalid rational literal {0:?}")]
    BadRational(String),

    #[error("job {job} has non-positive weight {weight}")]
    NonPositiveWeight { job: usize, weight: String },

    #[error("job {job} has non-positive processing time {value} on machine {machine}")]
    NonPositiveProcessingTime {
        machine: usize,
        job: usize,
        value: String,
    },

    #[error("job {job} has no feasible machine")]
    NoFeasibleMachine { job: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("job id {id} is used more than once")]
    DuplicateJobId { id: u64 },

    #[error("instance needs at least one job and one machine")]
    EmptyInstance,

    #[error("machine index {machine} out of range (instance has {num_machines} machines)")]
    MachineOutOfRange { machine: usize, num_machines: usize },

    #[error("job index {job} out of range (instance has {num_jobs} jobs)")]
    JobOutOfRange { job: usize, num_jobs: usize },

    #[error("job {job} cannot run on machine {machine}")]
    Forbidden { job: usize, machine: usize },

    #[error("invalid generator parameters: {0}")]
    InvalidParameters(String),

    #[error("m = {m} is not divisible by {x}^2 (required for every group x <= k)")]
    Divisibility { m: usize, x: usize },

    #[error("job set of size {len} exceeds the enumeration limit {max}")]
    JobsetTooLarge { len: usize, max: usize },

    #[error("{0} does not induce a potential game")]
    NoPotential(PolicyKind),

    #[error("invalid dynamics configuration: {0}")]
    InvalidConfig(String),

    #[error("dynamics did not converge within {steps} steps")]
    NotConverged { steps: usize },

    #[error("state space of {states} assignments exceeds the cap {cap}")]
    StateCapExceeded { states: u128, cap: u128 },

    #[error("routing reduction needs unit weights, job {job} has weight {weight}")]
    WeightedInstance { job: usize, weight: String },

    #[error("kernel size {kappa} is outside 1..={max}")]
    KappaOutOfRange { kappa: usize, max: usize },

    #[error("explicit routing graph would have {arcs} arcs (limit {limit})")]
    GraphTooLarge { arcs: String, limit: u64 },
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Parse(err.to_string())
    }
}
