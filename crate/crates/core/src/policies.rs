//! Completion times under the four local policies, deviation costs, and the
//! simulation oracles used to validate the closed forms.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{lambda_term, Assignment, CostReport, Instance, PolicyKind};
use crate::rational::{self, Rational};

/// Job `job` considering a move to `target_machine`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeviationQuery {
    pub job: usize,
    pub target_machine: usize,
}

/// Largest job set the exhaustive Rand oracle accepts.
pub const MAX_EXHAUSTIVE_JOBS: usize = 9;

/// (M u)_ρ = Σ_s u_s · ρs/(ρ+s).
pub(crate) fn kernel_row(rho: &Rational, u: &BTreeMap<Rational, Rational>) -> Rational {
    u.iter()
        .map(|(s, weight)| weight * rho * s / (rho + s))
        .sum()
}

/// Per-machine signature: ρ → total weight.
pub(crate) fn machine_signature(
    instance: &Instance,
    machine: usize,
    jobs: impl IntoIterator<Item = usize>,
) -> BTreeMap<Rational, Rational> {
    let mut u = BTreeMap::new();
    for k in jobs {
        *u.entry(instance.ratio_unchecked(machine, k))
            .or_insert_with(rational::zero) += instance.weight(k);
    }
    u
}

/// Unweighted completion time of `job` on `machine` when the other jobs there
/// are `others` (which must not contain `job`).
fn completion_among(
    instance: &Instance,
    machine: usize,
    job: usize,
    others: &[usize],
    policy: PolicyKind,
) -> Rational {
    let p = instance.proc_unchecked(machine, job);
    let rho = instance.ratio_unchecked(machine, job);
    let id = instance.job_id(job);
    let others = others.iter().copied().filter(|&k| k != job);
    match policy {
        PolicyKind::SmithRule => {
            let ahead: Rational = others
                .filter(|&k| {
                    let rk = instance.ratio_unchecked(machine, k);
                    (rk, instance.job_id(k)) < (rho.clone(), id)
                })
                .map(|k| instance.proc_unchecked(machine, k).clone())
                .sum();
            ahead + p
        }
        PolicyKind::ProportionalSharing | PolicyKind::Approx => {
            let shared: Rational = others
                .map(|k| {
                    let rk = instance.ratio_unchecked(machine, k);
                    instance.weight(k) * rk.min(rho.clone())
                })
                .sum();
            let c = shared + p;
            if policy == PolicyKind::Approx {
                c + p
            } else {
                c
            }
        }
        PolicyKind::Rand => {
            let u = machine_signature(instance, machine, others);
            kernel_row(&rho, &u) + p
        }
    }
}

/// Unweighted completion times of `jobs`, all scheduled on `machine`.
pub fn machine_completions(
    instance: &Instance,
    machine: usize,
    jobs: &[usize],
    policy: PolicyKind,
) -> Vec<Rational> {
    match policy {
        PolicyKind::SmithRule => {
            let mut order: Vec<(Rational, u64, usize)> = jobs
                .iter()
                .enumerate()
                .map(|(pos, &k)| (instance.ratio_unchecked(machine, k), instance.job_id(k), pos))
                .collect();
            order.sort();
            let mut out = vec![rational::zero(); jobs.len()];
            let mut clock = rational::zero();
            for (_, _, pos) in order {
                clock += instance.proc_unchecked(machine, jobs[pos]);
                out[pos] = clock.clone();
            }
            out
        }
        PolicyKind::Rand => {
            // (M u)_ρ + p/2, with u the full signature of the machine.
            let u = machine_signature(instance, machine, jobs.iter().copied());
            jobs.iter()
                .map(|&k| {
                    let rho = instance.ratio_unchecked(machine, k);
                    kernel_row(&rho, &u) + instance.proc_unchecked(machine, k) * rational::half()
                })
                .collect()
        }
        _ => jobs
            .iter()
            .map(|&k| completion_among(instance, machine, k, jobs, policy))
            .collect(),
    }
}

/// Per-job completion times, weighted total and load term of an assignment.
pub fn policy_completion(
    instance: &Instance,
    assignment: &Assignment,
    policy: PolicyKind,
) -> CostReport {
    let mut completion = vec![rational::zero(); instance.num_jobs()];
    for machine in 0..instance.num_machines() {
        let jobs = assignment.jobs_on(machine);
        for (&k, c) in jobs
            .iter()
            .zip(machine_completions(instance, machine, jobs, policy))
        {
            completion[k] = c;
        }
    }
    let weighted_total = completion
        .iter()
        .enumerate()
        .map(|(j, c)| instance.weight(j) * c)
        .sum();
    CostReport {
        completion,
        weighted_total,
        lambda_term: lambda_term(instance, assignment),
    }
}

/// Social cost C^α(x).
pub fn social_cost(instance: &Instance, assignment: &Assignment, policy: PolicyKind) -> Rational {
    (0..instance.num_machines())
        .map(|i| {
            let jobs = assignment.jobs_on(i);
            machine_completions(instance, i, jobs, policy)
                .iter()
                .zip(jobs)
                .map(|(c, &k)| instance.weight(k) * c)
                .sum::<Rational>()
        })
        .sum()
}

/// Weighted cost w_j·c_j of the job in its current position.
pub fn current_cost(
    instance: &Instance,
    assignment: &Assignment,
    job: usize,
    policy: PolicyKind,
) -> Rational {
    let machine = assignment.machine_of(job);
    instance.weight(job) * completion_among(instance, machine, job, assignment.jobs_on(machine), policy)
}

/// w_j·c_j(x_{-j}, i): the job's weighted cost if it alone moved to the target.
pub fn deviation_cost(
    instance: &Instance,
    assignment: &Assignment,
    query: DeviationQuery,
    policy: PolicyKind,
) -> Result<Rational> {
    let DeviationQuery {
        job,
        target_machine,
    } = query;
    instance.check_pair(target_machine, job)?;
    let others = assignment.jobs_on(target_machine);
    Ok(instance.weight(job) * completion_among(instance, target_machine, job, others, policy))
}

/// w_j c^PS_j as Σ_{k≠j} w_j w_k min(ρ_k, ρ_j) + w_j p_j.
pub fn ps_cost_min_form(instance: &Instance, machine: usize, jobs: &[usize], job: usize) -> Rational {
    let w = instance.weight(job);
    let rho = instance.ratio_unchecked(machine, job);
    let shared: Rational = jobs
        .iter()
        .filter(|&&k| k != job)
        .map(|&k| w * instance.weight(k) * instance.ratio_unchecked(machine, k).min(rho.clone()))
        .sum();
    shared + w * instance.proc_unchecked(machine, job)
}

/// w_j c^PS_j as Σ_{k≠j, ρ_k≤ρ_j} w_j p_k + Σ_{ρ_k>ρ_j} w_k p_j + w_j p_j.
pub fn ps_cost_split_form(instance: &Instance, machine: usize, jobs: &[usize], job: usize) -> Rational {
    let w = instance.weight(job);
    let p = instance.proc_unchecked(machine, job);
    let rho = instance.ratio_unchecked(machine, job);
    let mut total = w * p;
    for &k in jobs.iter().filter(|&&k| k != job) {
        if instance.ratio_unchecked(machine, k) <= rho {
            total += w * instance.proc_unchecked(machine, k);
        } else {
            total += instance.weight(k) * p;
        }
    }
    total
}

/// Probability that a job with ratio `rho_j` precedes one with ratio `rho_k`
/// under Rand: ρ_k/(ρ_j+ρ_k), and 1/2 when both are zero.
pub fn rand_precedence_prob(rho_j: &Rational, rho_k: &Rational) -> Result<Rational> {
    let zero = rational::zero();
    if *rho_j < zero || *rho_k < zero {
        return Err(Error::InvalidParameters("ratios must be nonnegative".into()));
    }
    let sum = rho_j + rho_k;
    if sum == zero {
        return Ok(rational::half());
    }
    Ok(rho_k / sum)
}

/// Picks the index that goes to the back: proportional to ratio, uniform when
/// every remaining ratio is zero.
fn pick_last<R: Rng>(ratios: &[f64], rng: &mut R) -> usize {
    let total: f64 = ratios.iter().sum();
    if total <= 0.0 {
        return rng.gen_range(0..ratios.len());
    }
    let mut target = rng.gen::<f64>() * total;
    for (k, &r) in ratios.iter().enumerate() {
        if target < r {
            return k;
        }
        target -= r;
    }
    // Rounding can leave a sliver past the end; give it to the last positive entry.
    ratios.iter().rposition(|&r| r > 0.0).expect("total > 0")
}

/// One Rand ordering of `jobset` on `machine`: repeatedly choose a job with
/// probability proportional to its ratio and place it last.
pub fn rand_sample_order(
    instance: &Instance,
    machine: usize,
    jobset: &[usize],
    seed: u64,
) -> Result<Vec<usize>> {
    for &j in jobset {
        instance.check_pair(machine, j)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut remaining: Vec<usize> = jobset.to_vec();
    let mut ratios: Vec<f64> = remaining
        .iter()
        .map(|&j| rational::to_f64(&instance.ratio_unchecked(machine, j)))
        .collect();
    let mut order = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let k = pick_last(&ratios, &mut rng);
        order.push(remaining.swap_remove(k));
        ratios.swap_remove(k);
    }
    order.reverse();
    Ok(order)
}

/// Event-driven fluid simulation of proportional sharing: between completions
/// each live job is served at rate w_k / Σ_live w.
pub fn fluid_simulate_ps(instance: &Instance, machine: usize, jobset: &[usize]) -> Result<Vec<Rational>> {
    for &j in jobset {
        instance.check_pair(machine, j)?;
    }
    let zero = rational::zero();
    let mut left: Vec<Rational> = jobset
        .iter()
        .map(|&j| instance.proc_unchecked(machine, j).clone())
        .collect();
    let mut done = vec![None; jobset.len()];
    let mut live: Vec<usize> = (0..jobset.len()).collect();
    let mut clock = rational::zero();
    while !live.is_empty() {
        let total_w: Rational = live.iter().map(|&k| instance.weight(jobset[k])).sum();
        // Time until the first live job finishes at its current rate.
        let dt = live
            .iter()
            .map(|&k| &left[k] * &total_w / instance.weight(jobset[k]))
            .min()
            .expect("live is nonempty");
        clock += &dt;
        for &k in &live {
            left[k] -= &dt * instance.weight(jobset[k]) / &total_w;
            if left[k] == zero {
                done[k] = Some(clock.clone());
            }
        }
        live.retain(|&k| done[k].is_none());
    }
    Ok(done.into_iter().map(|c| c.expect("every job finishes")).collect())
}

/// Exact expected Rand completion times, by enumerating every ordering the
/// back-to-front sampling process can produce together with its probability.
pub fn rand_exhaustive_expectation(
    instance: &Instance,
    machine: usize,
    jobset: &[usize],
) -> Result<Vec<Rational>> {
    if jobset.len() > MAX_EXHAUSTIVE_JOBS {
        return Err(Error::JobsetTooLarge {
            len: jobset.len(),
            max: MAX_EXHAUSTIVE_JOBS,
        });
    }
    for &j in jobset {
        instance.check_pair(machine, j)?;
    }
    let ratios: Vec<Rational> = jobset
        .iter()
        .map(|&j| instance.ratio_unchecked(machine, j))
        .collect();
    let procs: Vec<Rational> = jobset
        .iter()
        .map(|&j| instance.proc_unchecked(machine, j).clone())
        .collect();
    let mut expect = vec![rational::zero(); jobset.len()];
    let mut suffix = Vec::with_capacity(jobset.len());
    let all: Vec<usize> = (0..jobset.len()).collect();
    enumerate_orders(&ratios, &procs, &all, &rational::one(), &mut suffix, &mut expect);
    Ok(expect)
}

fn enumerate_orders(
    ratios: &[Rational],
    procs: &[Rational],
    remaining: &[usize],
    prob: &Rational,
    suffix: &mut Vec<usize>,
    expect: &mut [Rational],
) {
    if remaining.is_empty() {
        // `suffix` lists the ordering back to front; walk it forwards.
        let mut clock = rational::zero();
        for &k in suffix.iter().rev() {
            clock += &procs[k];
            expect[k] += prob * &clock;
        }
        return;
    }
    let total: Rational = remaining.iter().map(|&k| ratios[k].clone()).sum();
    let uniform = total == rational::zero();
    for (pos, &k) in remaining.iter().enumerate() {
        let pick = if uniform {
            Rational::new(1.into(), (remaining.len() as i64).into())
        } else {
            &ratios[k] / &total
        };
        if pick == rational::zero() {
            continue;
        }
        let rest: Vec<usize> = remaining
            .iter()
            .enumerate()
            .filter(|&(q, _)| q != pos)
            .map(|(_, &r)| r)
            .collect();
        suffix.push(k);
        enumerate_orders(ratios, procs, &rest, &(prob * pick), suffix, expect);
        suffix.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{gen_random, random_assignment, RandomParams};
    use crate::instance::load_instance;
    use crate::rational::{int, ratio};
    use proptest::prelude::*;

    fn two_jobs() -> (Instance, Assignment) {
        let inst = load_instance(br#"{"weights":[1,1],"proc":[[1,2]]}"#).unwrap();
        let x = Assignment::new(&inst, vec![0, 0]).unwrap();
        (inst, x)
    }

    #[test]
    fn two_job_examples() {
        let (inst, x) = two_jobs();
        let sr = policy_completion(&inst, &x, PolicyKind::SmithRule);
        assert_eq!(sr.completion, vec![int(1), int(3)]);
        assert_eq!(sr.weighted_total, int(4));
        let ps = policy_completion(&inst, &x, PolicyKind::ProportionalSharing);
        assert_eq!(ps.completion, vec![int(2), int(3)]);
        assert_eq!(ps.weighted_total, int(5));
        let r = policy_completion(&inst, &x, PolicyKind::Rand);
        assert_eq!(r.completion, vec![ratio(5, 3), ratio(8, 3)]);
        assert_eq!(r.weighted_total, ratio(13, 3));
        let a = policy_completion(&inst, &x, PolicyKind::Approx);
        assert_eq!(a.weighted_total, int(8));
    }

    #[test]
    fn smith_ties_follow_ids() {
        let inst = load_instance(br#"{"weights":[1,1],"proc":[[2,2]],"ids":[5,1]}"#).unwrap();
        let x = Assignment::new(&inst, vec![0, 0]).unwrap();
        let sr = policy_completion(&inst, &x, PolicyKind::SmithRule);
        assert_eq!(sr.completion, vec![int(4), int(2)]);
    }

    #[test]
    fn deviation_examples() {
        // Lone job: w·p on the target.
        let inst = load_instance(br#"{"weights":[2],"proc":[[3],[5]]}"#).unwrap();
        let x = Assignment::new(&inst, vec![0]).unwrap();
        for policy in PolicyKind::ALL {
            let q = DeviationQuery {
                job: 0,
                target_machine: 1,
            };
            let expected = if policy == PolicyKind::Approx { int(20) } else { int(10) };
            assert_eq!(deviation_cost(&inst, &x, q, policy).unwrap(), expected);
        }

        let inst = load_instance(br#"{"weights":[1,1],"proc":[[1,"inf"],[1,2]]}"#).unwrap();
        let x = Assignment::new(&inst, vec![0, 1]).unwrap();
        let q = DeviationQuery {
            job: 0,
            target_machine: 1,
        };
        let ps = deviation_cost(&inst, &x, q, PolicyKind::ProportionalSharing).unwrap();
        assert_eq!(ps, int(2));
        let r = deviation_cost(&inst, &x, q, PolicyKind::Rand).unwrap();
        assert_eq!(r, ratio(5, 3));
        let bad = DeviationQuery {
            job: 1,
            target_machine: 0,
        };
        assert!(matches!(
            deviation_cost(&inst, &x, bad, PolicyKind::Rand),
            Err(Error::Forbidden { .. })
        ));
    }

    #[test]
    fn precedence_examples() {
        assert_eq!(rand_precedence_prob(&int(1), &int(1)).unwrap(), ratio(1, 2));
        assert_eq!(rand_precedence_prob(&int(1), &int(2)).unwrap(), ratio(2, 3));
        assert_eq!(rand_precedence_prob(&int(3), &int(1)).unwrap(), ratio(1, 4));
        assert_eq!(rand_precedence_prob(&int(0), &int(0)).unwrap(), ratio(1, 2));
        assert!(rand_precedence_prob(&int(-1), &int(1)).is_err());
    }

    #[test]
    fn sampler_basics() {
        let inst = load_instance(br#"{"weights":[1,1,1],"proc":[[1,2,3]]}"#).unwrap();
        assert_eq!(rand_sample_order(&inst, 0, &[1], 9).unwrap(), vec![1]);
        for seed in 0..100 {
            let mut order = rand_sample_order(&inst, 0, &[0, 1, 2], seed).unwrap();
            assert_eq!(order, rand_sample_order(&inst, 0, &[0, 1, 2], seed).unwrap());
            order.sort();
            assert_eq!(order, vec![0, 1, 2]);
        }
    }

    #[test]
    fn fluid_examples() {
        let inst = load_instance(br#"{"weights":[1,1],"proc":[[1,1]]}"#).unwrap();
        assert_eq!(fluid_simulate_ps(&inst, 0, &[0, 1]).unwrap(), vec![int(2), int(2)]);
        let (inst, _) = two_jobs();
        assert_eq!(fluid_simulate_ps(&inst, 0, &[0, 1]).unwrap(), vec![int(2), int(3)]);
    }

    #[test]
    fn exhaustive_examples() {
        let inst = load_instance(br#"{"weights":[1,1],"proc":[[1,1]]}"#).unwrap();
        assert_eq!(rand_exhaustive_expectation(&inst, 0, &[0]).unwrap(), vec![int(1)]);
        assert_eq!(
            rand_exhaustive_expectation(&inst, 0, &[0, 1]).unwrap(),
            vec![ratio(3, 2), ratio(3, 2)]
        );
        let (inst, _) = two_jobs();
        assert_eq!(
            rand_exhaustive_expectation(&inst, 0, &[0, 1]).unwrap(),
            vec![ratio(5, 3), ratio(8, 3)]
        );
        let big = gen_random(10, 1, &RandomParams::default(), 1).unwrap();
        let all: Vec<usize> = (0..10).collect();
        assert!(matches!(
            rand_exhaustive_expectation(&big, 0, &all),
            Err(Error::JobsetTooLarge { len: 10, max: 9 })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn closed_forms_match_oracles(seed in any::<u64>(), n in 1usize..6) {
            let inst = gen_random(n, 1, &RandomParams::default(), seed).unwrap();
            let jobs: Vec<usize> = (0..n).collect();
            let ps = machine_completions(&inst, 0, &jobs, PolicyKind::ProportionalSharing);
            prop_assert_eq!(&ps, &fluid_simulate_ps(&inst, 0, &jobs).unwrap());
            for &j in &jobs {
                let min_form = ps_cost_min_form(&inst, 0, &jobs, j);
                prop_assert_eq!(&min_form, &ps_cost_split_form(&inst, 0, &jobs, j));
                prop_assert_eq!(&min_form, &(inst.weight(j) * &ps[j]));
            }
            let r = machine_completions(&inst, 0, &jobs, PolicyKind::Rand);
            prop_assert_eq!(r, rand_exhaustive_expectation(&inst, 0, &jobs).unwrap());
        }

        #[test]
        fn deviation_to_current_matches(seed in any::<u64>(), n in 1usize..7, m in 1usize..4) {
            let inst = gen_random(n, m, &RandomParams::default(), seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_assignment(&inst, &mut rng);
            for policy in PolicyKind::ALL {
                let report = policy_completion(&inst, &x, policy);
                prop_assert_eq!(&report.weighted_total, &social_cost(&inst, &x, policy));
                for j in 0..n {
                    let q = DeviationQuery { job: j, target_machine: x.machine_of(j) };
                    let own = inst.weight(j) * &report.completion[j];
                    prop_assert_eq!(&deviation_cost(&inst, &x, q, policy).unwrap(), &own);
                    prop_assert_eq!(&current_cost(&inst, &x, j, policy), &own);
                }
            }
        }

        #[test]
        fn smith_is_cheapest(seed in any::<u64>(), n in 1usize..8, m in 1usize..4) {
            let inst = gen_random(n, m, &RandomParams::default(), seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
            let x = random_assignment(&inst, &mut rng);
            let sr = policy_completion(&inst, &x, PolicyKind::SmithRule);
            let ps = policy_completion(&inst, &x, PolicyKind::ProportionalSharing);
            for j in 0..n {
                prop_assert!(sr.completion[j] <= ps.completion[j]);
            }
            for policy in PolicyKind::ALL {
                let c = social_cost(&inst, &x, policy);
                prop_assert!(sr.weighted_total <= c);
                prop_assert!(sr.lambda_term <= c);
            }
        }
    }
}
