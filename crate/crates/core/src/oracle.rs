//! Exhaustive ground truth over all feasible assignments.

use serde::Serialize;

use crate::dynamics::is_nash;
use crate::error::{Error, Result};
use crate::instance::{Assignment, Instance, PolicyKind};
use crate::policies::social_cost;
use crate::rational::{serde_opt_rational, serde_rational, serde_rational_vec, Rational};

pub const DEFAULT_STATE_CAP: u128 = 10_000_000;

/// Feasible assignments in lexicographic order of `machine_of`.
pub struct Assignments<'a> {
    instance: &'a Instance,
    digits: Vec<usize>,
    done: bool,
}

impl<'a> Assignments<'a> {
    pub fn new(instance: &'a Instance) -> Self {
        Assignments {
            instance,
            digits: vec![0; instance.num_jobs()],
            done: false,
        }
    }
}

impl Iterator for Assignments<'_> {
    type Item = Assignment;

    fn next(&mut self) -> Option<Assignment> {
        if self.done {
            return None;
        }
        let machine_of = self
            .digits
            .iter()
            .enumerate()
            .map(|(j, &d)| self.instance.feasible(j)[d].0)
            .collect();
        // Odometer with the last job changing fastest.
        self.done = true;
        for j in (0..self.digits.len()).rev() {
            self.digits[j] += 1;
            if self.digits[j] < self.instance.feasible(j).len() {
                self.done = false;
                break;
            }
            self.digits[j] = 0;
        }
        Some(Assignment::new(self.instance, machine_of).expect("feasible by construction"))
    }
}

fn check_cap(instance: &Instance, cap: u128) -> Result<u128> {
    let states = instance.state_count();
    if states > cap {
        return Err(Error::StateCapExceeded { states, cap });
    }
    Ok(states)
}

pub fn brute_force_opt(instance: &Instance) -> Result<(Assignment, Rational)> {
    brute_force_opt_with_cap(instance, DEFAULT_STATE_CAP)
}

/// Lexicographically first assignment minimising the SmithRule cost.
pub fn brute_force_opt_with_cap(instance: &Instance, cap: u128) -> Result<(Assignment, Rational)> {
    check_cap(instance, cap)?;
    let mut best: Option<(Assignment, Rational)> = None;
    for x in Assignments::new(instance) {
        let cost = social_cost(instance, &x, PolicyKind::SmithRule);
        if best.as_ref().is_none_or(|(_, c)| cost < *c) {
            best = Some((x, cost));
        }
    }
    Ok(best.expect("at least one feasible assignment"))
}

pub fn enumerate_pure_nash(instance: &Instance, policy: PolicyKind) -> Result<Vec<Assignment>> {
    enumerate_pure_nash_with_cap(instance, policy, DEFAULT_STATE_CAP)
}

/// Every pure equilibrium under `policy`, in lexicographic order.
pub fn enumerate_pure_nash_with_cap(
    instance: &Instance,
    policy: PolicyKind,
    cap: u128,
) -> Result<Vec<Assignment>> {
    check_cap(instance, cap)?;
    Ok(Assignments::new(instance)
        .filter(|x| is_nash(instance, x, policy).is_nash)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PoAReport {
    pub policy: PolicyKind,
    #[serde(with = "serde_rational")]
    pub opt_cost: Rational,
    pub opt_assignment: Assignment,
    /// C^α of each pure equilibrium, in enumeration order.
    #[serde(with = "serde_rational_vec")]
    pub nash_costs: Vec<Rational>,
    /// Worst equilibrium cost over OPT; `None` when no pure equilibrium exists.
    #[serde(with = "serde_opt_rational")]
    pub worst_ratio: Option<Rational>,
    pub worst_nash: Option<Assignment>,
    pub enumerated_states: u128,
}

pub fn poa_report(instance: &Instance, policy: PolicyKind) -> Result<PoAReport> {
    poa_report_with_cap(instance, policy, DEFAULT_STATE_CAP)
}

/// OPT (SmithRule cost) and the policy cost of every pure equilibrium in one pass.
pub fn poa_report_with_cap(instance: &Instance, policy: PolicyKind, cap: u128) -> Result<PoAReport> {
    let states = check_cap(instance, cap)?;
    let mut opt: Option<(Assignment, Rational)> = None;
    let mut nash_costs = Vec::new();
    let mut worst: Option<(Assignment, Rational)> = None;
    for x in Assignments::new(instance) {
        let sr = social_cost(instance, &x, PolicyKind::SmithRule);
        if is_nash(instance, &x, policy).is_nash {
            let cost = if policy == PolicyKind::SmithRule {
                sr.clone()
            } else {
                social_cost(instance, &x, policy)
            };
            if worst.as_ref().is_none_or(|(_, c)| cost > *c) {
                worst = Some((x.clone(), cost.clone()));
            }
            nash_costs.push(cost);
        }
        if opt.as_ref().is_none_or(|(_, c)| sr < *c) {
            opt = Some((x, sr));
        }
    }
    let (opt_assignment, opt_cost) = opt.expect("at least one feasible assignment");
    let worst_ratio = worst.as_ref().map(|(_, c)| c / &opt_cost);
    Ok(PoAReport {
        policy,
        opt_cost,
        opt_assignment,
        nash_costs,
        worst_ratio,
        worst_nash: worst.map(|(x, _)| x),
        enumerated_states: states,
    })
}
