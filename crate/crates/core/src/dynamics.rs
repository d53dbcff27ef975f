//! Potentials, equilibrium checks, best-response dynamics and the local-search
//! approximation built on them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{lambda_term, Assignment, Instance, PolicyKind};
use crate::policies::{current_cost, deviation_cost, social_cost, DeviationQuery};
use crate::rational::{self, ratio, serde_rational, Rational};

/// Exact potential of the game induced by `policy`.
///
/// Φ^PS = ½C^PS + ½Λ, Φ^R = ½C^R + ½Λ, Φ^A = ½C^A + Λ. SmithRule games need
/// not have pure equilibria and have no potential.
pub fn potential(instance: &Instance, assignment: &Assignment, policy: PolicyKind) -> Result<Rational> {
    let half = rational::half();
    let cost = social_cost(instance, assignment, policy);
    let lambda = lambda_term(instance, assignment);
    match policy {
        PolicyKind::SmithRule => Err(Error::NoPotential(policy)),
        PolicyKind::ProportionalSharing | PolicyKind::Rand => Ok(&half * cost + &half * lambda),
        PolicyKind::Approx => Ok(&half * cost + lambda),
    }
}

/// Cheapest machine for `job` given everyone else stays put, with its
/// weighted cost. Ties favour the current machine, then the lowest index.
pub fn best_response(
    instance: &Instance,
    assignment: &Assignment,
    job: usize,
    policy: PolicyKind,
) -> Result<(usize, Rational)> {
    instance.check_job(job)?;
    let mut best_machine = assignment.machine_of(job);
    let mut best_cost = current_cost(instance, assignment, job, policy);
    for target in instance.feasible_machines(job) {
        if target == assignment.machine_of(job) {
            continue;
        }
        let cost = deviation_cost(
            instance,
            assignment,
            DeviationQuery {
                job,
                target_machine: target,
            },
            policy,
        )?;
        if cost < best_cost {
            best_cost = cost;
            best_machine = target;
        }
    }
    Ok((best_machine, best_cost))
}

/// An improving unilateral move.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NashWitness {
    pub job: usize,
    pub machine: usize,
    #[serde(with = "serde_rational")]
    pub current_cost: Rational,
    #[serde(with = "serde_rational")]
    pub deviation_cost: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NashVerdict {
    pub is_nash: bool,
    pub witness: Option<NashWitness>,
}

/// True iff no job can strictly lower its weighted cost by moving alone. On
/// failure the witness is the lowest-index improving job and its best response.
pub fn is_nash(instance: &Instance, assignment: &Assignment, policy: PolicyKind) -> NashVerdict {
    for job in 0..instance.num_jobs() {
        let here = current_cost(instance, assignment, job, policy);
        let (machine, cost) =
            best_response(instance, assignment, job, policy).expect("job index in range");
        if cost < here {
            return NashVerdict {
                is_nash: false,
                witness: Some(NashWitness {
                    job,
                    machine,
                    current_cost: here,
                    deviation_cost: cost,
                }),
            };
        }
    }
    NashVerdict {
        is_nash: true,
        witness: None,
    }
}

/// Δ(x) = Σ_j (w_j c_j(x) − w_j c_j(x_{−j}, best response of j)).
pub fn delta_gap(instance: &Instance, assignment: &Assignment, policy: PolicyKind) -> Rational {
    (0..instance.num_jobs())
        .map(|job| {
            let here = current_cost(instance, assignment, job, policy);
            let (_, best) =
                best_response(instance, assignment, job, policy).expect("job index in range");
            here - best
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynamicsConfig {
    /// A move qualifies when new cost ≤ (1 − α)·old cost (and is strictly lower).
    pub alpha: Rational,
    pub epsilon: Rational,
    pub max_steps: usize,
    pub policy: PolicyKind,
}

impl DynamicsConfig {
    pub fn new(alpha: Rational, epsilon: Rational, max_steps: usize, policy: PolicyKind) -> Result<Self> {
        let config = DynamicsConfig {
            alpha,
            epsilon,
            max_steps,
            policy,
        };
        config.validate()?;
        Ok(config)
    }

    /// Plain best-response dynamics: any strict improvement qualifies.
    pub fn exact(policy: PolicyKind, max_steps: usize) -> Self {
        DynamicsConfig {
            alpha: rational::zero(),
            epsilon: ratio(1, 16),
            max_steps,
            policy,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha < rational::zero() {
            return Err(Error::InvalidConfig("alpha must be nonnegative".into()));
        }
        if self.epsilon <= rational::zero() || self.epsilon >= ratio(1, 8) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must lie in (0, 1/8), got {}",
                rational::format_rational(&self.epsilon)
            )));
        }
        if self.alpha >= self.epsilon {
            return Err(Error::InvalidConfig("alpha must be smaller than epsilon".into()));
        }
        if !self.policy.has_potential() {
            return Err(Error::NoPotential(self.policy));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DynamicsStep {
    pub job: usize,
    pub from: usize,
    pub to: usize,
    #[serde(with = "serde_rational")]
    pub cost_before: Rational,
    #[serde(with = "serde_rational")]
    pub cost_after: Rational,
    #[serde(with = "serde_rational")]
    pub potential_before: Rational,
    #[serde(with = "serde_rational")]
    pub potential_after: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicsTrace {
    pub policy: PolicyKind,
    pub steps: Vec<DynamicsStep>,
    pub final_assignment: Assignment,
    pub converged: bool,
    #[serde(with = "serde_rational")]
    pub initial_potential: Rational,
    #[serde(with = "serde_rational")]
    pub final_potential: Rational,
    /// (n/ε)·ln(Φ0/Φ_final), the order of the known step bound.
    pub step_bound: f64,
}

impl DynamicsTrace {
    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }
}

/// The job with the largest absolute α-improvement (lowest job id on ties)
/// and its best response.
fn pick_mover(
    instance: &Instance,
    x: &Assignment,
    config: &DynamicsConfig,
) -> Option<(usize, usize, Rational, Rational)> {
    let keep = rational::one() - &config.alpha;
    let mut best: Option<(Rational, u64, usize, usize, Rational, Rational)> = None;
    for job in 0..instance.num_jobs() {
        let here = current_cost(instance, x, job, config.policy);
        let (to, cost) = best_response(instance, x, job, config.policy).expect("job in range");
        if cost >= here || cost > &keep * &here {
            continue;
        }
        let gain = &here - &cost;
        let id = instance.job_id(job);
        let better = match &best {
            None => true,
            Some((g, bid, ..)) => gain > *g || (gain == *g && id < *bid),
        };
        if better {
            best = Some((gain, id, job, to, here, cost));
        }
    }
    best.map(|(_, _, job, to, here, cost)| (job, to, here, cost))
}

/// Sequential α-improving best-response dynamics from `x0`.
pub fn basic_dynamics(instance: &Instance, config: &DynamicsConfig, x0: &Assignment) -> Result<DynamicsTrace> {
    config.validate()?;
    if x0.num_jobs() != instance.num_jobs() {
        return Err(Error::DimensionMismatch("start assignment does not fit the instance".into()));
    }
    let mut x = x0.clone();
    let initial_potential = potential(instance, &x, config.policy)?;
    let mut phi = initial_potential.clone();
    let mut steps = Vec::new();
    let mut converged = false;
    loop {
        let Some((job, to, cost_before, cost_after)) = pick_mover(instance, &x, config) else {
            converged = true;
            break;
        };
        if steps.len() >= config.max_steps {
            break;
        }
        let from = x.machine_of(job);
        x.move_job(instance, job, to)?;
        let next = potential(instance, &x, config.policy)?;
        steps.push(DynamicsStep {
            job,
            from,
            to,
            cost_before,
            cost_after,
            potential_before: std::mem::replace(&mut phi, next.clone()),
            potential_after: next,
        });
    }

    let ratio_f = rational::to_f64(&initial_potential) / rational::to_f64(&phi);
    let eps = rational::to_f64(&config.epsilon);
    let step_bound = instance.num_jobs() as f64 / eps * ratio_f.ln().max(0.0);
    if steps.len() as f64 > step_bound.max(1.0) {
        log::warn!(
            "dynamics took {} steps, above (n/eps)*ln(phi0/phi) = {:.2}",
            steps.len(),
            step_bound
        );
    }
    if !converged {
        log::warn!("dynamics stopped after {} steps without converging", steps.len());
    }
    Ok(DynamicsTrace {
        policy: config.policy,
        steps,
        final_assignment: x,
        converged,
        initial_potential,
        final_potential: phi,
        step_bound,
    })
}

pub const DEFAULT_APPROX_MAX_STEPS: usize = 100_000;

/// Guarantee 2/(1 − 4α/3) on C^SR(out)/OPT for the local-search output.
pub fn approx_guarantee(alpha: &Rational) -> Rational {
    rational::int(2) / (rational::one() - ratio(4, 3) * alpha)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproxOutcome {
    pub assignment: Assignment,
    /// Cost of the output when every machine runs SmithRule.
    #[serde(with = "serde_rational")]
    pub smith_cost: Rational,
    #[serde(with = "serde_rational")]
    pub alpha: Rational,
    pub trace: DynamicsTrace,
}

pub fn approx_schedule(instance: &Instance, epsilon: &Rational, x0: &Assignment) -> Result<ApproxOutcome> {
    approx_schedule_with(instance, epsilon, x0, DEFAULT_APPROX_MAX_STEPS)
}

/// Runs α = ε/2 dynamics under Approx costs and schedules the result with
/// SmithRule.
pub fn approx_schedule_with(
    instance: &Instance,
    epsilon: &Rational,
    x0: &Assignment,
    max_steps: usize,
) -> Result<ApproxOutcome> {
    let alpha = epsilon * rational::half();
    let config = DynamicsConfig::new(alpha.clone(), epsilon.clone(), max_steps, PolicyKind::Approx)?;
    let trace = basic_dynamics(instance, &config, x0)?;
    if !trace.converged {
        return Err(Error::NotConverged {
            steps: trace.num_steps(),
        });
    }
    let assignment = trace.final_assignment.clone();
    let smith_cost = social_cost(instance, &assignment, PolicyKind::SmithRule);
    Ok(ApproxOutcome {
        assignment,
        smith_cost,
        alpha,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{gen_random, random_assignment, RandomParams};
    use crate::instance::load_instance;
    use crate::rational::int;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn crossing() -> Instance {
        load_instance(br#"{"weights":[1,1],"proc":[[1,3],[3,1]]}"#).unwrap()
    }

    #[test]
    fn potential_examples() {
        let inst = load_instance(br#"{"weights":[1],"proc":[[1]]}"#).unwrap();
        let x = Assignment::new(&inst, vec![0]).unwrap();
        assert_eq!(potential(&inst, &x, PolicyKind::ProportionalSharing).unwrap(), int(1));
        assert!(matches!(
            potential(&inst, &x, PolicyKind::SmithRule),
            Err(Error::NoPotential(PolicyKind::SmithRule))
        ));

        let inst = load_instance(br#"{"weights":[1,1],"proc":[[1,2]]}"#).unwrap();
        let x = Assignment::new(&inst, vec![0, 0]).unwrap();
        assert_eq!(potential(&inst, &x, PolicyKind::ProportionalSharing).unwrap(), int(4));
        assert_eq!(potential(&inst, &x, PolicyKind::Approx).unwrap(), int(7));
    }

    #[test]
    fn best_response_examples() {
        let inst = load_instance(br#"{"weights":[1],"proc":[[1],[10]]}"#).unwrap();
        let x = Assignment::new(&inst, vec![1]).unwrap();
        assert_eq!(best_response(&inst, &x, 0, PolicyKind::Rand).unwrap(), (0, int(1)));

        let inst = load_instance(br#"{"weights":[1],"proc":[["inf"],[4]]}"#).unwrap();
        let x = Assignment::new(&inst, vec![1]).unwrap();
        assert_eq!(best_response(&inst, &x, 0, PolicyKind::SmithRule).unwrap(), (1, int(4)));

        // Ties stay home.
        let inst = load_instance(br#"{"weights":[1],"proc":[[2],[2]]}"#).unwrap();
        let x = Assignment::new(&inst, vec![1]).unwrap();
        assert_eq!(best_response(&inst, &x, 0, PolicyKind::SmithRule).unwrap().0, 1);
        assert!(best_response(&inst, &x, 3, PolicyKind::SmithRule).is_err());
    }

    #[test]
    fn single_machine_is_nash() {
        let inst = gen_random(5, 1, &RandomParams::default(), 4).unwrap();
        let x = Assignment::new(&inst, vec![0; 5]).unwrap();
        for policy in PolicyKind::ALL {
            assert!(is_nash(&inst, &x, policy).is_nash);
            assert_eq!(delta_gap(&inst, &x, policy), int(0));
        }
    }

    #[test]
    fn crossing_dynamics() {
        let inst = crossing();
        let x0 = Assignment::new(&inst, vec![0, 0]).unwrap();
        let config =
            DynamicsConfig::new(ratio(1, 100), ratio(1, 20), 10, PolicyKind::ProportionalSharing)
                .unwrap();
        let trace = basic_dynamics(&inst, &config, &x0).unwrap();
        assert!(trace.converged);
        assert!(trace.num_steps() <= 2);
        assert_eq!(trace.final_assignment.as_slice(), &[0, 1]);

        let again = basic_dynamics(&inst, &config, &trace.final_assignment).unwrap();
        assert_eq!(again.num_steps(), 0);
        assert!(again.converged);
    }

    #[test]
    fn witness_is_improving() {
        let inst = crossing();
        let x = Assignment::new(&inst, vec![1, 0]).unwrap();
        let v = is_nash(&inst, &x, PolicyKind::ProportionalSharing);
        let w = v.witness.unwrap();
        assert!(!v.is_nash);
        assert!(w.deviation_cost < w.current_cost);
        assert!(delta_gap(&inst, &x, PolicyKind::ProportionalSharing) > int(0));
    }

    #[test]
    fn config_validation() {
        let ps = PolicyKind::ProportionalSharing;
        assert!(DynamicsConfig::new(ratio(1, 10), ratio(1, 20), 5, ps).is_err());
        assert!(DynamicsConfig::new(ratio(1, 100), ratio(1, 8), 5, ps).is_err());
        assert!(matches!(
            DynamicsConfig::new(ratio(1, 100), ratio(1, 20), 5, PolicyKind::SmithRule),
            Err(Error::NoPotential(_))
        ));
    }

    #[test]
    fn approx_examples() {
        let inst = load_instance(br#"{"weights":[3],"proc":[[5],[2],[4]]}"#).unwrap();
        let x0 = Assignment::new(&inst, vec![0]).unwrap();
        let out = approx_schedule(&inst, &ratio(1, 20), &x0).unwrap();
        assert_eq!(out.assignment.as_slice(), &[1]);
        assert_eq!(out.smith_cost, int(6));

        let inst = crossing();
        let x0 = Assignment::new(&inst, vec![1, 0]).unwrap();
        let out = approx_schedule(&inst, &ratio(1, 20), &x0).unwrap();
        assert_eq!(out.smith_cost, int(2));

        assert_eq!(approx_guarantee(&ratio(1, 40)), ratio(60, 29));
    }

    #[test]
    fn step_cap_reports_non_convergence() {
        let inst = crossing();
        let x0 = Assignment::new(&inst, vec![1, 0]).unwrap();
        assert!(matches!(
            approx_schedule_with(&inst, &ratio(1, 20), &x0, 0),
            Err(Error::NotConverged { steps: 0 })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn exact_potential_moves(seed in any::<u64>(), n in 1usize..7, m in 2usize..4) {
            let inst = gen_random(n, m, &RandomParams::default(), seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_assignment(&inst, &mut rng);
            let job = rng.gen_range(0..n);
            let to = rng.gen_range(0..m);
            let y = x.moved(&inst, job, to).unwrap();
            for policy in [PolicyKind::ProportionalSharing, PolicyKind::Rand, PolicyKind::Approx] {
                let dphi = potential(&inst, &y, policy).unwrap() - potential(&inst, &x, policy).unwrap();
                let dc = current_cost(&inst, &y, job, policy) - current_cost(&inst, &x, job, policy);
                prop_assert_eq!(dphi, dc);
            }
            let phi_a = potential(&inst, &x, PolicyKind::Approx).unwrap();
            prop_assert!(phi_a <= social_cost(&inst, &x, PolicyKind::Approx));
        }

        #[test]
        fn traces_decrease_and_end_in_nash(seed in any::<u64>(), n in 1usize..9, m in 2usize..4) {
            let inst = gen_random(n, m, &RandomParams::default(), seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x0 = random_assignment(&inst, &mut rng);
            for policy in [PolicyKind::ProportionalSharing, PolicyKind::Rand, PolicyKind::Approx] {
                let trace = basic_dynamics(&inst, &DynamicsConfig::exact(policy, 10_000), &x0).unwrap();
                prop_assert!(trace.converged);
                for s in &trace.steps {
                    prop_assert!(s.potential_after < s.potential_before);
                    prop_assert_eq!(&s.potential_before - &s.potential_after, &s.cost_before - &s.cost_after);
                }
                prop_assert!(is_nash(&inst, &trace.final_assignment, policy).is_nash);
                prop_assert_eq!(delta_gap(&inst, &trace.final_assignment, policy), int(0));
            }
        }

        #[test]
        fn best_response_is_min(seed in any::<u64>(), n in 1usize..6) {
            let params = RandomParams { forbidden_prob: 0.3, ..RandomParams::default() };
            let inst = gen_random(n, 3, &params, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_assignment(&inst, &mut rng);
            for policy in PolicyKind::ALL {
                for job in 0..n {
                    let (_, cost) = best_response(&inst, &x, job, policy).unwrap();
                    let min = inst
                        .feasible_machines(job)
                        .map(|i| deviation_cost(&inst, &x, DeviationQuery { job, target_machine: i }, policy).unwrap())
                        .min()
                        .unwrap();
                    prop_assert_eq!(cost, min);
                }
                let direct: Rational = (0..n)
                    .map(|j| current_cost(&inst, &x, j, policy) - best_response(&inst, &x, j, policy).unwrap().1)
                    .sum();
                prop_assert_eq!(delta_gap(&inst, &x, policy), direct.clone());
                prop_assert_eq!(direct == int(0), is_nash(&inst, &x, policy).is_nash);
            }
        }
    }
}
