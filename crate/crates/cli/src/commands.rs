use anyhow::{anyhow, Context, Result};
use coordmech::dynamics::{approx_guarantee, approx_schedule_with, DynamicsConfig};
use coordmech::generate::{suite, RandomParams, TreeVariant};
use coordmech::oracle::{brute_force_opt_with_cap, poa_report_with_cap};
use coordmech::rational::{format_rational, half, to_f64, Rational};
use coordmech::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::io::{emit, emit_json, load, load_optional_assignment, parse_exact};
use crate::{ApproxArgs, CheckArgs, Cli, Command, DynamicsArgs, EvalArgs, GenKind, PoaArgs, Variant};

/// Runs a command; `Ok(false)` means a requested check failed.
pub fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Gen { kind, out } => gen(kind, out.as_deref()),
        Command::Eval(args) => eval(args),
        Command::Dynamics(args) => dynamics(args),
        Command::Approx(args) => approx(args),
        Command::Poa(args) => poa(args),
        Command::Check(args) => check(args),
    }
}

fn bundle_json(bundle: &LowerBoundBundle) -> Result<serde_json::Value> {
    let mut v = serde_json::to_value(bundle)?;
    let nash = social_cost(&bundle.instance, &bundle.nash_assignment, bundle.policy);
    let opt = social_cost(&bundle.instance, &bundle.opt_assignment, PolicyKind::SmithRule);
    let achieved = nash / opt;
    v["achieved_ratio"] = serde_json::json!(format_rational(&achieved));
    v["achieved_ratio_f64"] = serde_json::json!(to_f64(&achieved));
    Ok(v)
}

fn gen(kind: GenKind, out: Option<&std::path::Path>) -> Result<bool> {
    match kind {
        GenKind::Random {
            n,
            m,
            seed,
            unit,
            forbidden,
            max_proc_num,
            max_proc_den,
            max_weight_num,
            max_weight_den,
        } => {
            let params = RandomParams {
                weight_num: (1, max_weight_num),
                weight_den: (1, max_weight_den),
                proc_num: (1, max_proc_num),
                proc_den: (1, max_proc_den),
                forbidden_prob: forbidden,
                unit_weights: unit,
            };
            let inst = gen_random(n, m, &params, seed)?;
            emit(out, &serialize_instance(&inst))?;
        }
        GenKind::SmithLb { k, m } => {
            emit_json(out, &bundle_json(&gen_smithrule_lowerbound(k, m)?)?)?;
        }
        GenKind::TreeLb {
            depth,
            variant,
            delta,
        } => {
            let variant = match variant {
                Variant::Det => TreeVariant::Deterministic13_6,
                Variant::Rand => TreeVariant::Rand5_3,
            };
            let delta = match delta {
                Some(d) => parse_exact(&d)?,
                None => coordmech::generate::default_tree_delta(),
            };
            emit_json(out, &bundle_json(&gen_tree_lowerbound_with(depth, variant, &delta)?)?)?;
        }
    }
    Ok(true)
}

fn eval(args: EvalArgs) -> Result<bool> {
    let loaded = load(&args.input.instance, args.input.assignment.as_deref())?;
    let (inst, x) = (&loaded.instance, &loaded.assignment);
    let out = args.input.out.as_deref();
    if args.identities {
        let report = cost_identity_report(inst, x);
        emit_json(out, &report)?;
        return Ok(report.all_identities_hold);
    }
    let report = policy_completion(inst, x, args.policy);
    if args.nash {
        let verdict = is_nash(inst, x, args.policy);
        emit_json(out, &serde_json::json!({ "cost": report, "nash": verdict }))?;
        return Ok(verdict.is_nash);
    }
    emit_json(out, &report)?;
    Ok(true)
}

fn dynamics(args: DynamicsArgs) -> Result<bool> {
    let loaded = load(&args.input.instance, args.input.assignment.as_deref())?;
    let config = DynamicsConfig::new(
        parse_exact(&args.alpha)?,
        parse_exact(&args.epsilon)?,
        args.max_steps,
        args.policy,
    )?;
    let mut trace = basic_dynamics(&loaded.instance, &config, &loaded.assignment)?;
    let verdict = is_nash(&loaded.instance, &trace.final_assignment, args.policy);
    let num_steps = trace.num_steps();
    if args.summary {
        trace.steps.clear();
    }
    let mut v = serde_json::to_value(&trace)?;
    v["num_steps"] = serde_json::json!(num_steps);
    v["final_is_nash"] = serde_json::json!(verdict.is_nash);
    emit_json(args.input.out.as_deref(), &v)?;
    Ok(trace.converged)
}

#[derive(Serialize)]
struct Row {
    instance_id: String,
    policy: String,
    opt: String,
    cost: String,
    ratio: String,
    steps: String,
}

fn write_rows(out: Option<&std::path::Path>, mut rows: Vec<Row>) -> Result<()> {
    rows.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow!("csv: {e}"))?;
    emit(out, String::from_utf8(bytes)?.trim_end())
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .context("building thread pool")
}

fn ratio_text(r: &Rational) -> String {
    format!("{:.6}", to_f64(r))
}

fn approx(args: ApproxArgs) -> Result<bool> {
    let epsilon = parse_exact(&args.epsilon)?;
    let bound = approx_guarantee(&(&epsilon * half()));
    let out = args.out.as_deref();

    if let Some(path) = &args.instance {
        let loaded = load(path, None)?;
        let inst = &loaded.instance;
        let x0 = load_optional_assignment(inst, args.assignment.as_deref())?
            .unwrap_or_else(|| Assignment::fastest(inst));
        let outcome = approx_schedule_with(inst, &epsilon, &x0, args.max_steps)?;
        let opt = (inst.state_count() <= args.opt_cap)
            .then(|| brute_force_opt_with_cap(inst, args.opt_cap))
            .transpose()?
            .map(|(_, c)| c);
        let ratio = opt.as_ref().map(|o| &outcome.smith_cost / o);
        let within = ratio.as_ref().is_none_or(|r| *r <= bound);
        emit_json(
            out,
            &serde_json::json!({
                "assignment": outcome.assignment,
                "smith_cost": format_rational(&outcome.smith_cost),
                "steps": outcome.trace.num_steps(),
                "opt": opt.as_ref().map(format_rational),
                "ratio": ratio.as_ref().map(format_rational),
                "ratio_f64": ratio.as_ref().map(to_f64),
                "guarantee": format_rational(&bound),
                "within_guarantee": within,
            }),
        )?;
        return Ok(within);
    }

    let name = args
        .suite
        .as_deref()
        .ok_or_else(|| anyhow!("approx needs --instance or --suite"))?;
    let instances = suite(name)?;
    let seeds: Vec<u64> = {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        instances.iter().map(|_| rng.gen()).collect()
    };
    let results: Vec<Result<(Row, bool)>> = pool(args.jobs)?.install(|| {
        instances
            .par_iter()
            .zip(seeds.par_iter())
            .map(|((id, inst), &seed)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let x0 = random_assignment(inst, &mut rng);
                let outcome = approx_schedule_with(inst, &epsilon, &x0, args.max_steps)?;
                let (_, opt) = brute_force_opt_with_cap(inst, args.opt_cap)?;
                let ratio = &outcome.smith_cost / &opt;
                let ok = ratio <= bound;
                Ok((
                    Row {
                        instance_id: id.clone(),
                        policy: "approx".into(),
                        opt: format_rational(&opt),
                        cost: format_rational(&outcome.smith_cost),
                        ratio: ratio_text(&ratio),
                        steps: outcome.trace.num_steps().to_string(),
                    },
                    ok,
                ))
            })
            .collect()
    });
    let mut rows = Vec::new();
    let mut all = true;
    for r in results {
        let (row, ok) = r?;
        all &= ok;
        rows.push(row);
    }
    write_rows(out, rows)?;
    Ok(all)
}

fn poa(args: PoaArgs) -> Result<bool> {
    let instances = match (&args.suite, &args.instance) {
        (Some(name), _) => suite(name)?,
        (None, Some(path)) => vec![("instance".to_string(), load(path, None)?.instance)],
        (None, None) => return Err(anyhow!("poa needs --suite or --instance")),
    };
    let policy = args.policy;
    let results: Vec<Result<(Row, Option<f64>)>> = pool(args.jobs)?.install(|| {
        instances
            .par_iter()
            .map(|(id, inst)| {
                let r = poa_report_with_cap(inst, policy, args.cap)?;
                let worst = r.nash_costs.iter().max();
                Ok((
                    Row {
                        instance_id: id.clone(),
                        policy: policy.short_name().into(),
                        opt: format_rational(&r.opt_cost),
                        cost: worst.map(format_rational).unwrap_or_default(),
                        ratio: r.worst_ratio.as_ref().map(ratio_text).unwrap_or_default(),
                        steps: r.enumerated_states.to_string(),
                    },
                    r.worst_ratio.as_ref().map(to_f64),
                ))
            })
            .collect()
    });
    let mut rows = Vec::new();
    let mut all = true;
    let mut max = 0.0f64;
    for r in results {
        let (row, ratio) = r?;
        if let Some(q) = ratio {
            max = max.max(q);
            if let Some(b) = args.bound {
                all &= q <= b;
            }
        }
        rows.push(row);
    }
    log::info!("worst ratio over {} instances: {max:.6}", rows.len());
    write_rows(args.out.as_deref(), rows)?;
    Ok(all)
}

fn report(name: &str, pass: bool, detail: String) -> bool {
    println!("check {name}: {} - {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn check(args: CheckArgs) -> Result<bool> {
    let nothing = args.lemma_ineq.is_none()
        && args.pd.is_none()
        && args.identities.is_none()
        && args.chung.is_none()
        && args.reduction.is_none()
        && args.potential.is_none();
    let (lemma, pd, identities, chung, reduction, potential_moves) = if nothing {
        (Some(500), Some(25), Some("identity200".to_string()), Some(200), Some(50), Some(1000))
    } else {
        (args.lemma_ineq, args.pd, args.identities, args.chung, args.reduction, args.potential)
    };
    let mut all = true;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);

    if let Some(n) = lemma {
        let r = lemma_ineq_check(n);
        all &= report(
            "lemma-ineq",
            r.holds,
            format!("{} pairs up to {n}, {} tight, violation {:?}", r.pairs_checked, r.tight_pairs, r.first_violation),
        );
    }
    if let Some(kappa) = pd {
        let r = kernel_pd_check(kappa)?;
        let smallest = r.minors.last().map(|m| format!("{:.3e}", to_f64(m))).unwrap_or_default();
        all &= report(
            "pd",
            r.positive_definite,
            format!("kappa={kappa}, {} minors positive, last {smallest}", r.minors.len()),
        );
    }
    if let Some(name) = identities {
        let mut checked = 0;
        let mut ok = true;
        for (_, inst) in suite(&name)? {
            for _ in 0..args.assignments {
                ok &= cost_identity_report(&inst, &random_assignment(&inst, &mut rng)).all_identities_hold;
                checked += 1;
            }
        }
        all &= report("identities", ok, format!("{checked} assignments from {name}"));
    }
    if let Some(n) = chung {
        let series: Vec<f64> = (1..=n.max(1))
            .map(|len| {
                let pts: Vec<(f64, f64)> = (1..=len).map(|j| (1.0 / (j * j) as f64, 1.0)).collect();
                chung_ratio(&pts)
            })
            .collect::<coordmech::Result<_>>()?;
        let increasing = series.windows(2).all(|w| w[0] < w[1]);
        let mut random_ok = true;
        for _ in 0..100 {
            let len = rng.gen_range(1..=40);
            let pts: Vec<(f64, f64)> = (0..len)
                .map(|_| (rng.gen_range(0.01..100.0), rng.gen_range(0.01..100.0)))
                .collect();
            random_ok &= chung_ratio(&pts)? < std::f64::consts::FRAC_PI_4 + 1e-12;
        }
        let below = series.iter().all(|&r| r < std::f64::consts::FRAC_PI_4 + 1e-12);
        all &= report(
            "chung",
            increasing && below && random_ok,
            format!("1/j^2 family up to n={n}: last {:.6}, increasing {increasing}; 100 random inputs {random_ok}", series.last().unwrap()),
        );
    }
    if let Some(count) = reduction {
        let params = RandomParams {
            forbidden_prob: 0.2,
            ..RandomParams::unweighted()
        };
        let mut ok = true;
        for _ in 0..count {
            let inst = gen_random(rng.gen_range(1..=6), rng.gen_range(1..=3), &params, rng.gen())?;
            for _ in 0..10 {
                ok &= equivalence_check(&inst, &random_assignment(&inst, &mut rng))?;
            }
        }
        all &= report("reduction", ok, format!("{count} instances x 10 assignments"));
    }
    if let Some(moves) = potential_moves {
        let mut ok = true;
        for policy in [PolicyKind::ProportionalSharing, PolicyKind::Rand, PolicyKind::Approx] {
            for _ in 0..moves {
                let n = rng.gen_range(1..=6);
                let inst = gen_random(n, rng.gen_range(2..=4), &RandomParams::default(), rng.gen())?;
                let x = random_assignment(&inst, &mut rng);
                let job = rng.gen_range(0..n);
                let options = inst.feasible(job);
                let y = x.moved(&inst, job, options[rng.gen_range(0..options.len())].0)?;
                let dphi = potential(&inst, &y, policy)? - potential(&inst, &x, policy)?;
                let dc = coordmech::policies::current_cost(&inst, &y, job, policy)
                    - coordmech::policies::current_cost(&inst, &x, job, policy);
                ok &= dphi == dc;
            }
        }
        all &= report("potential", ok, format!("{moves} random moves per policy"));
    }
    Ok(all)
}
