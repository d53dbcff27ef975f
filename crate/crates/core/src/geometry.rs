//! Inner-product images of an assignment and the cost identities they carry.
//!
//! The step profile maps machine i to f_i(y) = Σ_{j∈X_i, ρ_ij > y} w_j; the
//! signature maps it to the vector u^i of total weight per ratio value. Smith
//! and proportional-sharing costs are quadratic forms in the first, Rand's
//! expected cost a quadratic form in the second under M_rs = rs/(r+s).

use std::collections::BTreeMap;

use num_bigint::BigInt;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{lambda_term, Assignment, Instance, PolicyKind};
use crate::policies::social_cost;
use crate::rational::{self, ratio, serde_rational, serde_rational_vec, Rational};

/// Per machine, the pieces `(end, value)` of a right-continuous nonincreasing
/// step function on [0, ∞): the value holds on [previous end, end) and the
/// function is zero after the last end.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StepProfile {
    pub machines: Vec<Vec<(Rational, Rational)>>,
}

impl StepProfile {
    /// Value of f_i at y.
    pub fn eval(&self, machine: usize, y: &Rational) -> Rational {
        self.machines[machine]
            .iter()
            .find(|(end, _)| y < end)
            .map(|(_, v)| v.clone())
            .unwrap_or_else(rational::zero)
    }
}

pub fn step_profile(instance: &Instance, assignment: &Assignment) -> StepProfile {
    let sig = signature(instance, assignment);
    let machines = sig
        .machines
        .iter()
        .map(|u| {
            // Walk ratios from the top down, accumulating weight.
            let mut pieces: Vec<(Rational, Rational)> = Vec::with_capacity(u.len());
            let mut acc = rational::zero();
            for (rho, w) in u.iter().rev() {
                acc += w;
                pieces.push((rho.clone(), acc.clone()));
            }
            pieces.reverse();
            pieces
        })
        .collect();
    StepProfile { machines }
}

fn l2_machine(a: &[(Rational, Rational)], b: &[(Rational, Rational)]) -> Rational {
    let mut total = rational::zero();
    let mut start = rational::zero();
    let (mut ia, mut ib) = (0, 0);
    while ia < a.len() && ib < b.len() {
        let end = a[ia].0.clone().min(b[ib].0.clone());
        total += (&end - &start) * &a[ia].1 * &b[ib].1;
        if a[ia].0 == end {
            ia += 1;
        }
        if b[ib].0 == end {
            ib += 1;
        }
        start = end;
    }
    total
}

/// Σ_i ∫_0^∞ a_i(y) b_i(y) dy.
pub fn l2_inner(a: &StepProfile, b: &StepProfile) -> Result<Rational> {
    if a.machines.len() != b.machines.len() {
        return Err(Error::DimensionMismatch(format!(
            "profiles over {} and {} machines",
            a.machines.len(),
            b.machines.len()
        )));
    }
    Ok(a.machines
        .iter()
        .zip(&b.machines)
        .map(|(x, y)| l2_machine(x, y))
        .sum())
}

/// Per machine, ratio value → total weight of the jobs with that ratio.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Signature {
    pub machines: Vec<BTreeMap<Rational, Rational>>,
}

impl Signature {
    /// Largest ratio present anywhere (κ), if any job is assigned.
    pub fn kappa(&self) -> Option<&Rational> {
        self.machines.iter().filter_map(|u| u.keys().next_back()).max()
    }

    pub fn is_zero(&self) -> bool {
        self.machines.iter().all(|u| u.is_empty())
    }
}

pub fn signature(instance: &Instance, assignment: &Assignment) -> Signature {
    let machines = (0..instance.num_machines())
        .map(|i| crate::policies::machine_signature(instance, i, assignment.jobs_on(i).iter().copied()))
        .collect();
    Signature { machines }
}

fn kernel_machine(a: &BTreeMap<Rational, Rational>, b: &BTreeMap<Rational, Rational>) -> Rational {
    let mut total = rational::zero();
    for (r, ar) in a {
        for (s, bs) in b {
            total += ar * bs * r * s / (r + s);
        }
    }
    total
}

/// Σ_i (u^i)ᵀ M v^i with M_rs = rs/(r+s), over the sparse keys.
pub fn kernel_inner(a: &Signature, b: &Signature) -> Result<Rational> {
    if a.machines.len() != b.machines.len() {
        return Err(Error::DimensionMismatch(format!(
            "signatures over {} and {} machines",
            a.machines.len(),
            b.machines.len()
        )));
    }
    Ok(a.machines
        .iter()
        .zip(&b.machines)
        .map(|(x, y)| kernel_machine(x, y))
        .sum())
}

pub const MAX_PD_KAPPA: usize = 40;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PdReport {
    pub kappa: usize,
    pub positive_definite: bool,
    /// Leading principal minors of orders 1..=κ (fewer if elimination hit a
    /// non-positive pivot).
    #[serde(with = "serde_rational_vec")]
    pub minors: Vec<Rational>,
}

/// Exact leading principal minors of the dense κ×κ matrix M_rs = rs/(r+s),
/// r, s ∈ {1..κ}, by fraction-exact Gaussian elimination without pivoting.
pub fn kernel_pd_check(kappa: usize) -> Result<PdReport> {
    if kappa == 0 || kappa > MAX_PD_KAPPA {
        return Err(Error::KappaOutOfRange {
            kappa,
            max: MAX_PD_KAPPA,
        });
    }
    let mut a: Vec<Vec<Rational>> = (1..=kappa as i64)
        .map(|r| (1..=kappa as i64).map(|s| ratio(r * s, r + s)).collect())
        .collect();
    let mut minors = Vec::with_capacity(kappa);
    let mut det = rational::one();
    let zero = rational::zero();
    for k in 0..kappa {
        let pivot = a[k][k].clone();
        if pivot <= zero {
            return Ok(PdReport {
                kappa,
                positive_definite: false,
                minors,
            });
        }
        det *= &pivot;
        minors.push(det.clone());
        for r in k + 1..kappa {
            let factor = &a[r][k] / &pivot;
            if factor == zero {
                continue;
            }
            for c in k..kappa {
                let delta = &factor * &a[k][c];
                a[r][c] -= delta;
            }
        }
    }
    Ok(PdReport {
        kappa,
        positive_definite: true,
        minors,
    })
}

fn validate_points(points: &[(f64, f64)]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::InvalidParameters("need at least one point".into()));
    }
    if points
        .iter()
        .any(|&(r, u)| !(r.is_finite() && u.is_finite() && r > 0.0 && u > 0.0))
    {
        return Err(Error::InvalidParameters("points must be finite and positive".into()));
    }
    Ok(())
}

/// Σ u_r u_s rs/(r+s) divided by Σ u_r u_s min(r, s).
pub fn chung_ratio(points: &[(f64, f64)]) -> Result<f64> {
    validate_points(points)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for &(r, ur) in points {
        for &(s, us) in points {
            num += ur * us * r * s / (r + s);
            den += ur * us * r.min(s);
        }
    }
    Ok(num / den)
}

/// A rational just below π/4.
pub fn pi_over_4_lower() -> Rational {
    Rational::new(
        BigInt::from(7_853_981_633_974_483u64),
        BigInt::from(10_000_000_000_000_000u64),
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChungExact {
    #[serde(with = "serde_rational")]
    pub kernel_sum: Rational,
    #[serde(with = "serde_rational")]
    pub min_sum: Rational,
    /// kernel_sum < L·min_sum for a rational L < π/4, so the ratio is
    /// certainly below π/4.
    pub certified_below: bool,
}

/// Exact version of [`chung_ratio`] for rational inputs.
pub fn chung_ratio_exact(points: &[(Rational, Rational)]) -> Result<ChungExact> {
    let zero = rational::zero();
    if points.is_empty() || points.iter().any(|(r, u)| *r <= zero || *u <= zero) {
        return Err(Error::InvalidParameters(
            "need a nonempty list of positive points".into(),
        ));
    }
    let mut kernel_sum = rational::zero();
    let mut min_sum = rational::zero();
    for (r, ur) in points {
        for (s, us) in points {
            let uu = ur * us;
            kernel_sum += &uu * r * s / (r + s);
            min_sum += uu * r.clone().min(s.clone());
        }
    }
    let certified_below = kernel_sum < pi_over_4_lower() * &min_sum;
    Ok(ChungExact {
        kernel_sum,
        min_sum,
        certified_below,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LemmaIneqReport {
    pub max_k: u64,
    pub holds: bool,
    pub pairs_checked: u64,
    /// Pairs where both sides are equal.
    pub tight_pairs: u64,
    pub first_violation: Option<(u64, u64)>,
}

/// Scans k*·(k+1) ≤ k²/3 + (5/3)·k*(k*+1)/2 over 0 ≤ k, k* ≤ max_k, in
/// integers after multiplying through by 6.
pub fn lemma_ineq_check(max_k: u64) -> LemmaIneqReport {
    let mut report = LemmaIneqReport {
        max_k,
        holds: true,
        pairs_checked: 0,
        tight_pairs: 0,
        first_violation: None,
    };
    for k in 0..=max_k as u128 {
        for ks in 0..=max_k as u128 {
            let lhs = 6 * ks * (k + 1);
            let rhs = 2 * k * k + 5 * ks * (ks + 1);
            report.pairs_checked += 1;
            if lhs == rhs {
                report.tight_pairs += 1;
            }
            if lhs > rhs && report.holds {
                report.holds = false;
                report.first_violation = Some((k as u64, ks as u64));
            }
        }
    }
    report
}

/// Every cost of an assignment computed both from the policy formulas and
/// from the inner-product forms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentityReport {
    #[serde(with = "serde_rational")]
    pub c_sr: Rational,
    #[serde(with = "serde_rational")]
    pub c_ps: Rational,
    #[serde(with = "serde_rational")]
    pub c_r: Rational,
    #[serde(with = "serde_rational")]
    pub c_a: Rational,
    #[serde(with = "serde_rational")]
    pub lambda: Rational,
    #[serde(with = "serde_rational")]
    pub phi_norm_sq: Rational,
    #[serde(with = "serde_rational")]
    pub kernel_norm_sq: Rational,
    pub smith_identity: bool,
    pub sharing_identity: bool,
    pub rand_identity: bool,
    pub approx_identity: bool,
    pub rand_crude_bound: bool,
    pub all_identities_hold: bool,
}

pub fn cost_identity_report(instance: &Instance, assignment: &Assignment) -> IdentityReport {
    let c_sr = social_cost(instance, assignment, PolicyKind::SmithRule);
    let c_ps = social_cost(instance, assignment, PolicyKind::ProportionalSharing);
    let c_r = social_cost(instance, assignment, PolicyKind::Rand);
    let c_a = social_cost(instance, assignment, PolicyKind::Approx);
    let lambda = lambda_term(instance, assignment);
    let phi = step_profile(instance, assignment);
    let phi_norm_sq = l2_inner(&phi, &phi).expect("same machine set");
    let u = signature(instance, assignment);
    let kernel_norm_sq = kernel_inner(&u, &u).expect("same machine set");
    let half = rational::half();
    let two = rational::int(2);

    let smith_identity = c_sr == &half * &phi_norm_sq + &half * &lambda;
    let sharing_identity = c_ps == phi_norm_sq;
    let rand_identity = c_r == &kernel_norm_sq + &half * &lambda;
    let approx_identity = c_a == &two * &c_sr;
    let rand_crude_bound = c_r <= &two * &c_sr - &lambda;
    IdentityReport {
        all_identities_hold: smith_identity
            && sharing_identity
            && rand_identity
            && approx_identity
            && rand_crude_bound,
        c_sr,
        c_ps,
        c_r,
        c_a,
        lambda,
        phi_norm_sq,
        kernel_norm_sq,
        smith_identity,
        sharing_identity,
        rand_identity,
        approx_identity,
        rand_crude_bound,
    }
}
