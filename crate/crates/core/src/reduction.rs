//! Unweighted ShortestFirst scheduling as a prioritized routing game.
//!
//! Processing times are rescaled by the largest finite one so that every
//! p'_ij lies in (0, 1]. Machine i becomes a path of Q unit arcs from its
//! start to the common sink, Q being the lcm of the denominators of all
//! p'_ij, and each arc costs x/Q for its x-th user. Player j reaches path i
//! through a constant connector of cost p'_ij/2 that joins the path Q·p'_ij
//! arcs before its end. On each arc users are served in ShortestFirst order.
//!
//! Paths are kept implicit: positions along a path are rationals in [0, 1]
//! and arc costs are summed in closed form over maximal runs of arcs with the
//! same set of users.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::dynamics::is_nash;
use crate::error::{Error, Result};
use crate::instance::{Assignment, Instance, PolicyKind};
use crate::policies::policy_completion;
use crate::rational::{self, format_rational, Rational};

/// Entry point of player j on path i.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Connector {
    pub machine: usize,
    /// Normalised processing time p'_ij: the fraction of the path still ahead.
    pub length: Rational,
    /// Constant connector cost b = p'_ij / 2.
    pub cost: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutingInstance {
    pub num_paths: usize,
    /// Arcs per path.
    pub q: BigInt,
    /// Original time units per routing unit (the largest finite p_ij).
    pub scale: Rational,
    /// Per player, the paths it can reach, sorted by machine.
    pub connectors: Vec<Vec<Connector>>,
    /// Per path, players in arc priority order (shorter first, then job id).
    pub priority: Vec<Vec<usize>>,
}

impl RoutingInstance {
    pub fn num_players(&self) -> usize {
        self.connectors.len()
    }

    pub fn connector(&self, player: usize, path: usize) -> Option<&Connector> {
        self.connectors[player].iter().find(|c| c.machine == path)
    }
}

/// Path chosen by each player.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct RoutingChoice {
    pub path_of: Vec<usize>,
}

impl RoutingChoice {
    pub fn from_assignment(assignment: &Assignment) -> Self {
        RoutingChoice {
            path_of: assignment.as_slice().to_vec(),
        }
    }
}

pub fn to_priority_routing(instance: &Instance) -> Result<RoutingInstance> {
    let one = rational::one();
    for j in 0..instance.num_jobs() {
        if *instance.weight(j) != one {
            return Err(Error::WeightedInstance {
                job: j,
                weight: format_rational(instance.weight(j)),
            });
        }
    }
    let scale = (0..instance.num_jobs())
        .flat_map(|j| instance.feasible(j).iter().map(|(_, p)| p))
        .max()
        .expect("nonempty instance")
        .clone();
    let mut q = BigInt::one();
    let connectors: Vec<Vec<Connector>> = (0..instance.num_jobs())
        .map(|j| {
            instance
                .feasible(j)
                .iter()
                .map(|(i, p)| {
                    let length = p / &scale;
                    q = q.lcm(length.denom());
                    Connector {
                        machine: *i,
                        cost: &length * rational::half(),
                        length,
                    }
                })
                .collect()
        })
        .collect();
    let priority = (0..instance.num_machines())
        .map(|i| {
            let mut players: Vec<usize> = (0..instance.num_jobs())
                .filter(|&j| instance.is_feasible(i, j))
                .collect();
            players.sort_by(|&a, &b| {
                instance
                    .proc_unchecked(i, a)
                    .cmp(instance.proc_unchecked(i, b))
                    .then(instance.job_id(a).cmp(&instance.job_id(b)))
            });
            players
        })
        .collect();
    Ok(RoutingInstance {
        num_paths: instance.num_machines(),
        q,
        scale,
        connectors,
        priority,
    })
}

fn check_choice(routing: &RoutingInstance, choice: &RoutingChoice) -> Result<()> {
    if choice.path_of.len() != routing.num_players() {
        return Err(Error::DimensionMismatch(format!(
            "choice for {} players, game has {}",
            choice.path_of.len(),
            routing.num_players()
        )));
    }
    for (j, &i) in choice.path_of.iter().enumerate() {
        if routing.connector(j, i).is_none() {
            return Err(Error::Forbidden { job: j, machine: i });
        }
    }
    Ok(())
}

/// Cost of every player, in routing units.
///
/// The t-th user of an arc with cost x/Q pays ∫_{t-1}^{t} x/Q dx = (2t − 1)/(2Q),
/// so a run of arcs of total length L (in path fractions) costs L·(2t − 1)/2.
pub fn routing_costs(routing: &RoutingInstance, choice: &RoutingChoice) -> Result<Vec<Rational>> {
    check_choice(routing, choice)?;
    let half = rational::half();
    let mut cost: Vec<Rational> = (0..routing.num_players())
        .map(|j| routing.connector(j, choice.path_of[j]).expect("checked").cost.clone())
        .collect();
    for path in 0..routing.num_paths {
        // Users of the path in priority order, with their entry positions.
        let users: Vec<(usize, Rational)> = routing.priority[path]
            .iter()
            .filter(|&&j| choice.path_of[j] == path)
            .map(|&j| {
                let c = routing.connector(j, path).expect("checked");
                (j, rational::one() - &c.length)
            })
            .collect();
        let mut cuts: Vec<Rational> = users.iter().map(|(_, s)| s.clone()).collect();
        cuts.push(rational::one());
        cuts.sort();
        cuts.dedup();
        for w in cuts.windows(2) {
            let len = &w[1] - &w[0];
            let mut rank = 0i64;
            for (j, start) in &users {
                if *start <= w[0] {
                    rank += 1;
                    cost[*j] += &len * (rational::int(2 * rank - 1) * &half);
                }
            }
        }
    }
    Ok(cost)
}

/// True iff routing costs (rescaled to time units) equal the ShortestFirst
/// completion times of every job.
pub fn equivalence_check(instance: &Instance, assignment: &Assignment) -> Result<bool> {
    let routing = to_priority_routing(instance)?;
    let costs = routing_costs(&routing, &RoutingChoice::from_assignment(assignment))?;
    let report = policy_completion(instance, assignment, PolicyKind::SmithRule);
    Ok(costs
        .iter()
        .zip(&report.completion)
        .all(|(r, c)| r * &routing.scale == *c))
}

/// True iff no player can lower its routing cost by switching paths alone.
pub fn routing_is_nash(routing: &RoutingInstance, choice: &RoutingChoice) -> Result<bool> {
    let base = routing_costs(routing, choice)?;
    for j in 0..routing.num_players() {
        for c in &routing.connectors[j] {
            if c.machine == choice.path_of[j] {
                continue;
            }
            let mut alt = choice.clone();
            alt.path_of[j] = c.machine;
            if routing_costs(routing, &alt)?[j] < base[j] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Compares routing equilibria with ShortestFirst equilibria on one assignment.
pub fn nash_sets_agree_at(instance: &Instance, assignment: &Assignment) -> Result<bool> {
    let routing = to_priority_routing(instance)?;
    let choice = RoutingChoice::from_assignment(assignment);
    Ok(routing_is_nash(&routing, &choice)? == is_nash(instance, assignment, PolicyKind::SmithRule).is_nash)
}

pub const DEFAULT_EXPORT_ARC_LIMIT: u64 = 1_000_000;

/// Materialises the graph as JSON: nodes, arcs with cost `a·x + b`, and the
/// per-arc player priority. Fails if it would exceed `arc_limit` arcs.
pub fn export_graph(routing: &RoutingInstance, arc_limit: u64) -> Result<serde_json::Value> {
    let connectors: usize = routing.connectors.iter().map(Vec::len).sum();
    let arcs = &routing.q * BigInt::from(routing.num_paths) + BigInt::from(routing.num_paths + connectors);
    let q = match (arcs.to_u64(), routing.q.to_u64()) {
        (Some(a), Some(q)) if a <= arc_limit => q,
        _ => {
            return Err(Error::GraphTooLarge {
                arcs: arcs.to_string(),
                limit: arc_limit,
            })
        }
    };
    let qr = Rational::from_integer(routing.q.clone());
    let node = |i: usize, k: u64| format!("p{i}_{k}");
    let mut nodes = vec![serde_json::json!("t")];
    let mut out = Vec::new();
    for i in 0..routing.num_paths {
        for k in 0..=q {
            nodes.push(serde_json::json!(node(i, k)));
        }
        for k in 0..q {
            out.push(serde_json::json!({
                "from": node(i, k),
                "to": node(i, k + 1),
                "a": rational::to_json(&(rational::one() / &qr)),
                "b": 0,
                "priority": routing.priority[i],
            }));
        }
        out.push(serde_json::json!({"from": node(i, q), "to": "t", "a": 0, "b": 0, "priority": routing.priority[i]}));
    }
    for (j, list) in routing.connectors.iter().enumerate() {
        nodes.push(serde_json::json!(format!("s{j}")));
        for c in list {
            let entry = (&qr * (rational::one() - &c.length)).to_integer();
            out.push(serde_json::json!({
                "from": format!("s{j}"),
                "to": node(c.machine, entry.to_u64().expect("entry below q")),
                "a": 0,
                "b": rational::to_json(&c.cost),
                "priority": [j],
            }));
        }
    }
    Ok(serde_json::json!({
        "q": routing.q.to_string(),
        "scale": rational::to_json(&routing.scale),
        "nodes": nodes,
        "arcs": out,
        "sources": (0..routing.num_players()).map(|j| format!("s{j}")).collect::<Vec<_>>(),
        "sink": "t",
    }))
}
