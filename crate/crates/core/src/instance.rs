//! Scheduling instances, assignments and their JSON formats.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, is_positive, serde_rational, serde_rational_vec, Rational, RationalRepr};

/// Instances with more cells than this are written in the sparse JSON form.
pub const DENSE_CELL_LIMIT: usize = 1 << 20;

/// Jobs with weights, machines, and a (possibly partial) processing-time matrix.
///
/// Processing times are stored sparsely per job, sorted by machine; a missing
/// entry means the job is forbidden on that machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    weights: Vec<Rational>,
    entries: Vec<Vec<(usize, Rational)>>,
    ids: Vec<u64>,
    num_machines: usize,
}

impl Instance {
    /// Builds an instance from a dense `proc[machine][job]` matrix where `None`
    /// marks a forbidden pair.
    pub fn from_dense(
        weights: Vec<Rational>,
        proc: Vec<Vec<Option<Rational>>>,
        ids: Option<Vec<u64>>,
    ) -> Result<Self> {
        let n = weights.len();
        let m = proc.len();
        let mut triples = Vec::new();
        for (i, row) in proc.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "proc row {} has {} entries, expected {}",
                    i,
                    row.len(),
                    n
                )));
            }
            for (j, p) in row.into_iter().enumerate() {
                if let Some(p) = p {
                    triples.push((i, j, p));
                }
            }
        }
        Self::from_entries(m, weights, triples, ids)
    }

    /// Builds an instance from `(machine, job, processing time)` triples.
    pub fn from_entries(
        num_machines: usize,
        weights: Vec<Rational>,
        triples: Vec<(usize, usize, Rational)>,
        ids: Option<Vec<u64>>,
    ) -> Result<Self> {
        let n = weights.len();
        if n == 0 || num_machines == 0 {
            return Err(Error::EmptyInstance);
        }
        for (job, w) in weights.iter().enumerate() {
            if !is_positive(w) {
                return Err(Error::NonPositiveWeight {
                    job,
                    weight: rational::format_rational(w),
                });
            }
        }
        let mut entries: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); n];
        for (machine, job, p) in triples {
            if machine >= num_machines {
                return Err(Error::MachineOutOfRange {
                    machine,
                    num_machines,
                });
            }
            if job >= n {
                return Err(Error::JobOutOfRange { job, num_jobs: n });
            }
            if !is_positive(&p) {
                return Err(Error::NonPositiveProcessingTime {
                    machine,
                    job,
                    value: rational::format_rational(&p),
                });
            }
            entries[job].push((machine, p));
        }
        for (job, row) in entries.iter_mut().enumerate() {
            if row.is_empty() {
                return Err(Error::NoFeasibleMachine { job });
            }
            row.sort_by_key(|(machine, _)| *machine);
            if row.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::DimensionMismatch(format!(
                    "job {job} has two processing times on one machine"
                )));
            }
        }
        let ids = match ids {
            Some(ids) => {
                if ids.len() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "{} ids for {} jobs",
                        ids.len(),
                        n
                    )));
                }
                let mut seen = HashSet::with_capacity(n);
                for &id in &ids {
                    if !seen.insert(id) {
                        return Err(Error::DuplicateJobId { id });
                    }
                }
                ids
            }
            None => (0..n as u64).collect(),
        };
        Ok(Instance {
            weights,
            entries,
            ids,
            num_machines,
        })
    }

    pub fn num_jobs(&self) -> usize {
        self.weights.len()
    }

    pub fn num_machines(&self) -> usize {
        self.num_machines
    }

    pub fn weight(&self, job: usize) -> &Rational {
        &self.weights[job]
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    /// Tie-break priority: lower id runs first among equal ratios.
    pub fn job_id(&self, job: usize) -> u64 {
        self.ids[job]
    }

    pub fn job_ids(&self) -> &[u64] {
        &self.ids
    }

    /// Processing time of `job` on `machine`, `None` if forbidden.
    pub fn proc(&self, machine: usize, job: usize) -> Option<&Rational> {
        let row = &self.entries[job];
        row.binary_search_by_key(&machine, |(i, _)| *i)
            .ok()
            .map(|k| &row[k].1)
    }

    /// Processing time that is known to exist (assigned or validated pairs).
    pub(crate) fn proc_unchecked(&self, machine: usize, job: usize) -> &Rational {
        self.proc(machine, job)
            .unwrap_or_else(|| panic!("job {job} is forbidden on machine {machine}"))
    }

    /// ρ = p / w for the pair, `None` if forbidden.
    pub fn ratio(&self, machine: usize, job: usize) -> Option<Rational> {
        self.proc(machine, job).map(|p| p / &self.weights[job])
    }

    pub(crate) fn ratio_unchecked(&self, machine: usize, job: usize) -> Rational {
        self.proc_unchecked(machine, job) / &self.weights[job]
    }

    /// Feasible `(machine, processing time)` pairs of a job, sorted by machine.
    pub fn feasible(&self, job: usize) -> &[(usize, Rational)] {
        &self.entries[job]
    }

    pub fn feasible_machines(&self, job: usize) -> impl Iterator<Item = usize> + '_ {
        self.entries[job].iter().map(|(i, _)| *i)
    }

    pub fn is_feasible(&self, machine: usize, job: usize) -> bool {
        self.proc(machine, job).is_some()
    }

    /// True when every weight equals one.
    pub fn is_unweighted(&self) -> bool {
        let one = rational::one();
        self.weights.iter().all(|w| *w == one)
    }

    /// Number of feasible assignments (product of per-job option counts).
    pub fn state_count(&self) -> u128 {
        self.entries
            .iter()
            .try_fold(1u128, |acc, row| acc.checked_mul(row.len() as u128))
            .unwrap_or(u128::MAX)
    }

    pub(crate) fn check_job(&self, job: usize) -> Result<()> {
        if job >= self.num_jobs() {
            return Err(Error::JobOutOfRange {
                job,
                num_jobs: self.num_jobs(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_pair(&self, machine: usize, job: usize) -> Result<()> {
        self.check_job(job)?;
        if machine >= self.num_machines {
            return Err(Error::MachineOutOfRange {
                machine,
                num_machines: self.num_machines,
            });
        }
        if !self.is_feasible(machine, job) {
            return Err(Error::Forbidden { job, machine });
        }
        Ok(())
    }

    /// Serializes to the instance JSON format. Small instances use the dense
    /// `proc[machine][job]` matrix, large ones the sparse `entries` list.
    pub fn to_json(&self) -> serde_json::Value {
        let mut obj = serde_json::Map::new();
        obj.insert(
            "weights".into(),
            self.weights.iter().map(rational::to_json).collect(),
        );
        if self.num_jobs().saturating_mul(self.num_machines) <= DENSE_CELL_LIMIT {
            let proc: Vec<serde_json::Value> = (0..self.num_machines)
                .map(|i| {
                    (0..self.num_jobs())
                        .map(|j| match self.proc(i, j) {
                            Some(p) => rational::to_json(p),
                            None => serde_json::Value::from("inf"),
                        })
                        .collect()
                })
                .collect();
            obj.insert("proc".into(), proc.into());
        } else {
            obj.insert("num_machines".into(), self.num_machines.into());
            let entries: Vec<serde_json::Value> = self
                .entries
                .iter()
                .enumerate()
                .flat_map(|(j, row)| {
                    row.iter()
                        .map(move |(i, p)| serde_json::json!([i, j, rational::to_json(p)]))
                })
                .collect();
            obj.insert("entries".into(), entries.into());
        }
        if self.ids.iter().enumerate().any(|(j, &id)| id != j as u64) {
            obj.insert("ids".into(), self.ids.clone().into());
        }
        serde_json::Value::Object(obj)
    }
}

/// On-disk instance. Exactly one of `proc` or (`num_machines`, `entries`)
/// must be present.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    weights: Vec<RationalRepr>,
    #[serde(default)]
    proc: Option<Vec<Vec<RationalRepr>>>,
    #[serde(default)]
    num_machines: Option<usize>,
    #[serde(default)]
    entries: Option<Vec<(usize, usize, RationalRepr)>>,
    #[serde(default)]
    ids: Option<Vec<u64>>,
}

fn is_inf(repr: &RationalRepr) -> bool {
    matches!(repr, RationalRepr::Text(s) if s.trim().eq_ignore_ascii_case("inf"))
}

impl InstanceFile {
    fn into_instance(self) -> Result<Instance> {
        let weights = self
            .weights
            .into_iter()
            .map(RationalRepr::into_rational)
            .collect::<Result<Vec<_>>>()?;
        match (self.proc, self.num_machines, self.entries) {
            (Some(proc), None, None) => {
                let proc = proc
                    .into_iter()
                    .map(|row| {
                        row.into_iter()
                            .map(|cell| {
                                if is_inf(&cell) {
                                    Ok(None)
                                } else {
                                    cell.into_rational().map(Some)
                                }
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                Instance::from_dense(weights, proc, self.ids)
            }
            (None, Some(m), Some(entries)) => {
                let triples = entries
                    .into_iter()
                    .map(|(i, j, p)| p.into_rational().map(|p| (i, j, p)))
                    .collect::<Result<Vec<_>>>()?;
                Instance::from_entries(m, weights, triples, self.ids)
            }
            _ => Err(Error::Parse(
                "expected either \"proc\" or both \"num_machines\" and \"entries\"".into(),
            )),
        }
    }
}

/// Parses and validates an instance from its JSON bytes.
pub fn load_instance(bytes: &[u8]) -> Result<Instance> {
    let file: InstanceFile = serde_json::from_slice(bytes)?;
    file.into_instance()
}

pub fn instance_from_value(value: serde_json::Value) -> Result<Instance> {
    let file: InstanceFile = serde_json::from_value(value)?;
    file.into_instance()
}

pub fn serialize_instance(instance: &Instance) -> String {
    serde_json::to_string_pretty(&instance.to_json()).expect("json values always serialize")
}

impl Serialize for Instance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

/// Job → machine map, with the per-machine job lists kept alongside.
#[derive(Debug, Clone)]
pub struct Assignment {
    machine_of: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl Assignment {
    pub fn new(instance: &Instance, machine_of: Vec<usize>) -> Result<Self> {
        if machine_of.len() != instance.num_jobs() {
            return Err(Error::DimensionMismatch(format!(
                "assignment covers {} jobs, instance has {}",
                machine_of.len(),
                instance.num_jobs()
            )));
        }
        let mut members = vec![Vec::new(); instance.num_machines()];
        for (job, &machine) in machine_of.iter().enumerate() {
            instance.check_pair(machine, job)?;
            members[machine].push(job);
        }
        Ok(Assignment {
            machine_of,
            members,
        })
    }

    /// Every job on its cheapest machine (lowest index among ties).
    pub fn fastest(instance: &Instance) -> Self {
        let machine_of = (0..instance.num_jobs())
            .map(|j| {
                instance
                    .feasible(j)
                    .iter()
                    .min_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)))
                    .map(|(i, _)| *i)
                    .expect("validated instances have a feasible machine per job")
            })
            .collect();
        Assignment::new(instance, machine_of).expect("fastest machines are feasible")
    }

    pub fn machine_of(&self, job: usize) -> usize {
        self.machine_of[job]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.machine_of
    }

    pub fn num_jobs(&self) -> usize {
        self.machine_of.len()
    }

    /// Jobs on `machine` in increasing job index (X_i).
    pub fn jobs_on(&self, machine: usize) -> &[usize] {
        &self.members[machine]
    }

    pub fn num_machines(&self) -> usize {
        self.members.len()
    }

    /// Moves `job` to `to` in place.
    pub fn move_job(&mut self, instance: &Instance, job: usize, to: usize) -> Result<()> {
        instance.check_pair(to, job)?;
        let from = self.machine_of[job];
        if from == to {
            return Ok(());
        }
        let list = &mut self.members[from];
        let pos = list.binary_search(&job).expect("job listed on its machine");
        list.remove(pos);
        let list = &mut self.members[to];
        let pos = list.binary_search(&job).unwrap_err();
        list.insert(pos, job);
        self.machine_of[job] = to;
        Ok(())
    }

    /// Copy with one job moved.
    pub fn moved(&self, instance: &Instance, job: usize, to: usize) -> Result<Self> {
        let mut next = self.clone();
        next.move_job(instance, job, to)?;
        Ok(next)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "machine_of": self.machine_of })
    }
}

impl PartialEq for Assignment {
    fn eq(&self, other: &Self) -> bool {
        self.machine_of == other.machine_of
    }
}

impl Eq for Assignment {}

impl std::hash::Hash for Assignment {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.machine_of.hash(state)
    }
}

impl PartialOrd for Assignment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Assignment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.machine_of.cmp(&other.machine_of)
    }
}

impl Serialize for Assignment {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AssignmentFile {
    machine_of: Vec<usize>,
}

/// Parses `{"machine_of": [...]}` and validates it against `instance`.
pub fn load_assignment(instance: &Instance, bytes: &[u8]) -> Result<Assignment> {
    let file: AssignmentFile = serde_json::from_slice(bytes)?;
    Assignment::new(instance, file.machine_of)
}

pub fn assignment_from_value(instance: &Instance, value: serde_json::Value) -> Result<Assignment> {
    let file: AssignmentFile = serde_json::from_value(value)?;
    Assignment::new(instance, file.machine_of)
}

/// The local policy every machine runs.
///
/// ShortestFirst and EqualSharing are SmithRule and ProportionalSharing on
/// unit-weight instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolicyKind {
    SmithRule,
    ProportionalSharing,
    Rand,
    Approx,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::SmithRule,
        PolicyKind::ProportionalSharing,
        PolicyKind::Rand,
        PolicyKind::Approx,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            PolicyKind::SmithRule => "sr",
            PolicyKind::ProportionalSharing => "ps",
            PolicyKind::Rand => "rand",
            PolicyKind::Approx => "approx",
        }
    }

    pub fn has_potential(self) -> bool {
        !matches!(self, PolicyKind::SmithRule)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            PolicyKind::SmithRule => "SmithRule",
            PolicyKind::ProportionalSharing => "ProportionalSharing",
            PolicyKind::Rand => "Rand",
            PolicyKind::Approx => "Approx",
        };
        f.write_str(name)
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sr" | "smith" | "smithrule" | "sf" | "shortestfirst" => Ok(PolicyKind::SmithRule),
            "ps" | "proportionalsharing" | "es" | "equalsharing" => {
                Ok(PolicyKind::ProportionalSharing)
            }
            "r" | "rand" => Ok(PolicyKind::Rand),
            "a" | "approx" => Ok(PolicyKind::Approx),
            other => Err(Error::Parse(format!("unknown policy {other:?}"))),
        }
    }
}

/// Per-job completion times plus the social cost and load term of an assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostReport {
    #[serde(with = "serde_rational_vec")]
    pub completion: Vec<Rational>,
    #[serde(with = "serde_rational")]
    pub weighted_total: Rational,
    #[serde(rename = "lambda", with = "serde_rational")]
    pub lambda_term: Rational,
}

/// Λ(x) = Σ_j w_j p_{x_j j}.
pub fn lambda_term(instance: &Instance, assignment: &Assignment) -> Rational {
    (0..instance.num_jobs())
        .map(|j| instance.weight(j) * instance.proc_unchecked(assignment.machine_of(j), j))
        .sum()
}
