//! Random instances, named suites, and the two lower-bound families.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{Assignment, Instance, PolicyKind};
use crate::rational::{self, int, ratio, serde_rational, Rational};

/// Inclusive numerator/denominator bounds for random rationals.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomParams {
    pub weight_num: (u32, u32),
    pub weight_den: (u32, u32),
    pub proc_num: (u32, u32),
    pub proc_den: (u32, u32),
    /// Probability that a (machine, job) pair is forbidden. Every job keeps at
    /// least one feasible machine regardless.
    pub forbidden_prob: f64,
    pub unit_weights: bool,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            weight_num: (1, 5),
            weight_den: (1, 3),
            proc_num: (1, 9),
            proc_den: (1, 4),
            forbidden_prob: 0.0,
            unit_weights: false,
        }
    }
}

impl RandomParams {
    pub fn unweighted() -> Self {
        RandomParams {
            unit_weights: true,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [
            ("weight numerator", self.weight_num),
            ("weight denominator", self.weight_den),
            ("processing numerator", self.proc_num),
            ("processing denominator", self.proc_den),
        ] {
            if lo == 0 || lo > hi {
                return Err(Error::InvalidParameters(format!(
                    "{name} range {lo}..={hi} must be nonempty and positive"
                )));
            }
        }
        if !(0.0..1.0).contains(&self.forbidden_prob) {
            return Err(Error::InvalidParameters(format!(
                "forbidden probability {} must lie in [0, 1)",
                self.forbidden_prob
            )));
        }
        Ok(())
    }
}

fn draw(rng: &mut ChaCha8Rng, num: (u32, u32), den: (u32, u32)) -> Rational {
    let n = rng.gen_range(num.0..=num.1);
    let d = rng.gen_range(den.0..=den.1);
    ratio(n as i64, d as i64)
}

/// Random instance, deterministic in `seed`.
pub fn gen_random(n: usize, m: usize, params: &RandomParams, seed: u64) -> Result<Instance> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameters(format!(
            "need n, m >= 1 (got n = {n}, m = {m})"
        )));
    }
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = (0..n)
        .map(|_| {
            if params.unit_weights {
                rational::one()
            } else {
                draw(&mut rng, params.weight_num, params.weight_den)
            }
        })
        .collect();
    let mut triples = Vec::with_capacity(n * m);
    for j in 0..n {
        let keep: Vec<bool> = (0..m)
            .map(|_| params.forbidden_prob == 0.0 || !rng.gen_bool(params.forbidden_prob))
            .collect();
        let rescue = if keep.iter().any(|&k| k) {
            None
        } else {
            Some(rng.gen_range(0..m))
        };
        for (i, k) in keep.into_iter().enumerate() {
            let p = draw(&mut rng, params.proc_num, params.proc_den);
            if k || rescue == Some(i) {
                triples.push((i, j, p));
            }
        }
    }
    Instance::from_entries(m, weights, triples, None)
}

/// Uniformly random feasible assignment.
pub fn random_assignment<R: Rng>(instance: &Instance, rng: &mut R) -> Assignment {
    let machine_of = (0..instance.num_jobs())
        .map(|j| {
            let options = instance.feasible(j);
            options[rng.gen_range(0..options.len())].0
        })
        .collect();
    Assignment::new(instance, machine_of).expect("feasible machines only")
}

/// A seeded family of small random instances.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSpec {
    pub name: &'static str,
    pub count: usize,
    pub jobs: (usize, usize),
    pub machines: (usize, usize),
    pub params: RandomParams,
    pub seed: u64,
}

/// Known suite names.
pub const SUITES: [&str; 4] = ["small200", "unit200", "approx100", "identity200"];

pub fn suite_spec(name: &str) -> Result<SuiteSpec> {
    let spec = match name {
        "small200" => SuiteSpec {
            name: "small200",
            count: 200,
            jobs: (2, 6),
            machines: (2, 3),
            params: RandomParams::default(),
            seed: 0x5eed_0001,
        },
        "unit200" => SuiteSpec {
            name: "unit200",
            count: 200,
            jobs: (2, 6),
            machines: (2, 3),
            params: RandomParams::unweighted(),
            seed: 0x5eed_0002,
        },
        "approx100" => SuiteSpec {
            name: "approx100",
            count: 100,
            jobs: (3, 7),
            machines: (2, 3),
            params: RandomParams::default(),
            seed: 0x5eed_0003,
        },
        "identity200" => SuiteSpec {
            name: "identity200",
            count: 200,
            jobs: (1, 10),
            machines: (1, 4),
            params: RandomParams {
                forbidden_prob: 0.2,
                ..RandomParams::default()
            },
            seed: 0x5eed_0004,
        },
        other => {
            return Err(Error::InvalidParameters(format!(
                "unknown suite {other:?} (known: {})",
                SUITES.join(", ")
            )))
        }
    };
    Ok(spec)
}

impl SuiteSpec {
    /// Instances of the suite, each tagged `"<name>-<index>"`.
    pub fn instances(&self) -> Result<Vec<(String, Instance)>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.count)
            .map(|k| {
                let n = rng.gen_range(self.jobs.0..=self.jobs.1);
                let m = rng.gen_range(self.machines.0..=self.machines.1);
                let seed = rng.gen::<u64>();
                let inst = gen_random(n, m, &self.params, seed)?;
                Ok((format!("{}-{:03}", self.name, k), inst))
            })
            .collect()
    }
}

pub fn suite(name: &str) -> Result<Vec<(String, Instance)>> {
    suite_spec(name)?.instances()
}

/// An instance together with an optimal-reference and an equilibrium assignment.
#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundBundle {
    pub instance: Instance,
    pub opt_assignment: Assignment,
    pub nash_assignment: Assignment,
    /// The limit the family's ratio approaches.
    #[serde(with = "serde_rational")]
    pub target_ratio: Rational,
    /// Policy under which `nash_assignment` is an equilibrium.
    pub policy: PolicyKind,
}

/// Restricted unit-job family with groups g_1..g_k, where g_x has m/x² jobs
/// and the y-th job of a group may only use machines 0..y.
pub fn gen_smithrule_lowerbound(k: usize, m: usize) -> Result<LowerBoundBundle> {
    if k == 0 || m == 0 {
        return Err(Error::InvalidParameters(format!(
            "need k, m >= 1 (got k = {k}, m = {m})"
        )));
    }
    for x in 1..=k {
        if !m.is_multiple_of(x * x) {
            return Err(Error::Divisibility { m, x });
        }
    }
    // (x, y) pairs, 1-based, in priority order: larger y first, then smaller x.
    let mut jobs: Vec<(usize, usize)> = (1..=k)
        .flat_map(|x| (1..=m / (x * x)).map(move |y| (x, y)))
        .collect();
    jobs.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let n = jobs.len();

    let weights = vec![rational::one(); n];
    let triples = jobs
        .iter()
        .enumerate()
        .flat_map(|(j, &(_, y))| (0..y).map(move |i| (i, j, rational::one())))
        .collect();
    let ids = (0..n as u64).collect();
    let instance = Instance::from_entries(m, weights, triples, Some(ids))?;

    let opt = jobs.iter().map(|&(_, y)| y - 1).collect();
    // Jobs arrive in priority order, so each one finishes at load + 1 wherever it goes.
    let mut load = vec![0usize; m];
    let nash = jobs
        .iter()
        .map(|&(_, y)| {
            let i = (0..y).min_by_key(|&i| (load[i], i)).expect("y >= 1");
            load[i] += 1;
            i
        })
        .collect();

    Ok(LowerBoundBundle {
        opt_assignment: Assignment::new(&instance, opt)?,
        nash_assignment: Assignment::new(&instance, nash)?,
        instance,
        target_ratio: int(4),
        policy: PolicyKind::SmithRule,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TreeVariant {
    Deterministic13_6,
    Rand5_3,
}

impl TreeVariant {
    /// Tree base b and chain factor s.
    pub fn factors(self) -> (Rational, Rational) {
        match self {
            TreeVariant::Deterministic13_6 => (ratio(3, 2), ratio(1, 2)),
            TreeVariant::Rand5_3 => (ratio(4, 3), ratio(2, 3)),
        }
    }

    pub fn target_ratio(self) -> Rational {
        match self {
            TreeVariant::Deterministic13_6 => ratio(13, 6),
            TreeVariant::Rand5_3 => ratio(5, 3),
        }
    }

    pub fn policy(self) -> PolicyKind {
        match self {
            TreeVariant::Deterministic13_6 => PolicyKind::ProportionalSharing,
            TreeVariant::Rand5_3 => PolicyKind::Rand,
        }
    }
}

impl std::str::FromStr for TreeVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "det" | "deterministic" | "13/6" | "deterministic13_6" => {
                Ok(TreeVariant::Deterministic13_6)
            }
            "rand" | "5/3" | "rand5_3" => Ok(TreeVariant::Rand5_3),
            other => Err(Error::InvalidParameters(format!("unknown tree variant {other:?}"))),
        }
    }
}

/// Default per-rank perturbation, 2^-20.
pub fn default_tree_delta() -> Rational {
    ratio(1, 1 << 20)
}

pub const MAX_TREE_DEPTH: usize = 16;

pub fn gen_tree_lowerbound(depth: usize, variant: TreeVariant) -> Result<LowerBoundBundle> {
    gen_tree_lowerbound_with(depth, variant, &default_tree_delta())
}

/// Binary tree of depth ℓ with a chain of ℓ machines hanging below each leaf.
///
/// Machines are numbered breadth-first: tree nodes level by level, then the
/// chain machines at distance 1 from the leaves, distance 2, and so on. A node
/// at depth i < ℓ has base time b^(ℓ-i), a leaf has base time b, and a chain
/// machine at distance d has b·s^d. Every machine's time is scaled by
/// (1 + δ·index). Each arc toward the root is a unit-weight job that may run
/// on its head (equilibrium) or tail (optimum); each chain end carries one
/// extra job that can only stay there.
pub fn gen_tree_lowerbound_with(
    depth: usize,
    variant: TreeVariant,
    delta: &Rational,
) -> Result<LowerBoundBundle> {
    if depth == 0 || depth > MAX_TREE_DEPTH {
        return Err(Error::InvalidParameters(format!(
            "tree depth must lie in 1..={MAX_TREE_DEPTH} (got {depth})"
        )));
    }
    if *delta < rational::zero() {
        return Err(Error::InvalidParameters("perturbation must be nonnegative".into()));
    }
    let (b, s) = variant.factors();
    let tree_nodes = (1usize << (depth + 1)) - 1;
    let leaves = 1usize << depth;
    let first_leaf = leaves - 1;
    let m = tree_nodes + depth * leaves;
    let chain = |d: usize, leaf: usize| tree_nodes + (d - 1) * leaves + leaf;

    let pow = |x: &Rational, e: usize| -> Rational { num_traits::pow(x.clone(), e) };
    let mut base = Vec::with_capacity(m);
    for node in 0..tree_nodes {
        let node_depth = (usize::BITS - (node + 1).leading_zeros() - 1) as usize;
        base.push(if node_depth < depth {
            pow(&b, depth - node_depth)
        } else {
            b.clone()
        });
    }
    for d in 1..=depth {
        let t = &b * pow(&s, d);
        base.extend(std::iter::repeat_n(t, leaves));
    }
    let time: Vec<Rational> = base
        .into_iter()
        .enumerate()
        .map(|(rank, t)| t * (rational::one() + delta * int(rank as i64)))
        .collect();

    // (nash machine, opt machine) per job.
    let mut arcs: Vec<(usize, usize)> = (1..tree_nodes).map(|c| ((c - 1) / 2, c)).collect();
    for d in 1..=depth {
        for leaf in 0..leaves {
            let parent = if d == 1 { first_leaf + leaf } else { chain(d - 1, leaf) };
            arcs.push((parent, chain(d, leaf)));
        }
    }
    arcs.extend((0..leaves).map(|leaf| {
        let end = chain(depth, leaf);
        (end, end)
    }));

    let n = arcs.len();
    let mut triples = Vec::with_capacity(2 * n);
    for (j, &(nash, opt)) in arcs.iter().enumerate() {
        triples.push((nash, j, time[nash].clone()));
        if opt != nash {
            triples.push((opt, j, time[opt].clone()));
        }
    }
    let instance = Instance::from_entries(m, vec![rational::one(); n], triples, None)?;
    let nash = arcs.iter().map(|a| a.0).collect();
    let opt = arcs.iter().map(|a| a.1).collect();
    Ok(LowerBoundBundle {
        opt_assignment: Assignment::new(&instance, opt)?,
        nash_assignment: Assignment::new(&instance, nash)?,
        instance,
        target_ratio: variant.target_ratio(),
        policy: variant.policy(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_is_deterministic() {
        let p = RandomParams::default();
        assert_eq!(gen_random(3, 2, &p, 7).unwrap(), gen_random(3, 2, &p, 7).unwrap());
        assert_ne!(gen_random(3, 2, &p, 7).unwrap(), gen_random(3, 2, &p, 8).unwrap());
    }

    #[test]
    fn random_single_cell() {
        let inst = gen_random(1, 1, &RandomParams::default(), 3).unwrap();
        assert_eq!((inst.num_jobs(), inst.num_machines()), (1, 1));
        assert!(inst.proc(0, 0).is_some());
    }

    #[test]
    fn random_within_bounds() {
        let p = RandomParams::default();
        let inst = gen_random(5, 3, &p, 1).unwrap();
        for j in 0..5 {
            let w = inst.weight(j);
            assert!(*w >= ratio(1, 3) && *w <= int(5));
            for i in 0..3 {
                let v = inst.proc(i, j).unwrap();
                assert!(*v >= ratio(1, 4) && *v <= int(9));
                assert!(*v.denom() <= 4.into());
            }
        }
    }

    #[test]
    fn degenerate_bounds_rejected() {
        let p = RandomParams {
            proc_num: (3, 2),
            ..RandomParams::default()
        };
        assert!(gen_random(2, 2, &p, 0).is_err());
        assert!(gen_random(0, 2, &RandomParams::default(), 0).is_err());
    }

    #[test]
    fn forbidden_keeps_a_machine() {
        let p = RandomParams {
            forbidden_prob: 0.9,
            ..RandomParams::default()
        };
        for seed in 0..50 {
            let inst = gen_random(6, 3, &p, seed).unwrap();
            for j in 0..6 {
                assert!(!inst.feasible(j).is_empty());
            }
        }
    }

    #[test]
    fn suites_are_stable() {
        let a = suite("small200").unwrap();
        let b = suite("small200").unwrap();
        assert_eq!(a.len(), 200);
        assert_eq!(a, b);
        assert!(suite("unit200").unwrap().iter().all(|(_, i)| i.is_unweighted()));
        assert!(suite("nope").is_err());
    }

    #[test]
    fn smith_family_shape() {
        let bundle = gen_smithrule_lowerbound(2, 4).unwrap();
        assert_eq!(bundle.instance.num_jobs(), 5);
        assert!(matches!(
            gen_smithrule_lowerbound(3, 8),
            Err(Error::Divisibility { m: 8, x: 3 })
        ));
        let single = gen_smithrule_lowerbound(1, 1).unwrap();
        assert_eq!(single.nash_assignment, single.opt_assignment);
    }

    #[test]
    fn tree_shape() {
        let bundle = gen_tree_lowerbound_with(1, TreeVariant::Deterministic13_6, &rational::zero())
            .unwrap();
        assert_eq!(bundle.instance.num_machines(), 5);
        assert_eq!(bundle.instance.num_jobs(), 6);
        assert_eq!(bundle.instance.proc(0, 0), Some(&ratio(3, 2)));

        let big = gen_tree_lowerbound(12, TreeVariant::Rand5_3).unwrap();
        assert_eq!(big.instance.num_machines(), 8191 + 12 * 4096);
        assert_eq!(big.instance.num_jobs(), 8190 + 12 * 4096 + 4096);
        assert!(gen_tree_lowerbound(0, TreeVariant::Rand5_3).is_err());
    }
}
