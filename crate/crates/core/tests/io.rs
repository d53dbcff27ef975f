use coordmech::instance::DENSE_CELL_LIMIT;
use coordmech::rational::{int, ratio};
use coordmech::*;
use proptest::prelude::*;

#[test]
fn large_instances_round_trip_through_sparse_form() {
    let b = gen_tree_lowerbound(9, TreeVariant::Rand5_3).unwrap();
    let inst = &b.instance;
    assert!(inst.num_jobs() * inst.num_machines() > DENSE_CELL_LIMIT);
    let text = serialize_instance(inst);
    assert!(text.contains("\"entries\""));
    assert_eq!(&load_instance(text.as_bytes()).unwrap(), inst);
}

#[test]
fn bundle_json_has_all_parts() {
    let b = gen_smithrule_lowerbound(2, 4).unwrap();
    let v = serde_json::to_value(&b).unwrap();
    assert_eq!(v["target_ratio"], serde_json::json!(4));
    assert_eq!(v["policy"], serde_json::json!("SmithRule"));
    let inst = coordmech::instance::instance_from_value(v["instance"].clone()).unwrap();
    assert_eq!(inst, b.instance);
    let x = coordmech::instance::assignment_from_value(&inst, v["nash_assignment"].clone()).unwrap();
    assert_eq!(x, b.nash_assignment);
}

#[test]
fn cost_report_wire_format() {
    let inst = load_instance(br#"{"weights":[1,1],"proc":[[1,2]]}"#).unwrap();
    let x = Assignment::new(&inst, vec![0, 0]).unwrap();
    let r = policy_completion(&inst, &x, PolicyKind::Rand);
    let v = serde_json::to_value(&r).unwrap();
    assert_eq!(
        v,
        serde_json::json!({"completion": ["5/3", "8/3"], "weighted_total": "13/3", "lambda": 3})
    );
    let back: CostReport = serde_json::from_value(v).unwrap();
    assert_eq!(back, r);
    assert_eq!(back.lambda_term, int(3));
    assert_eq!(back.completion[0], ratio(5, 3));
}

#[test]
fn lambda_never_exceeds_costs() {
    for seed in 0..20 {
        let inst = gen_random(6, 3, &RandomParams::default(), seed).unwrap();
        let x = Assignment::fastest(&inst);
        let lambda = lambda_term(&inst, &x);
        for policy in PolicyKind::ALL {
            assert!(lambda <= social_cost(&inst, &x, policy));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_instances_round_trip(seed in any::<u64>(), n in 1usize..8, m in 1usize..5, forbid in 0.0f64..0.6) {
        let params = RandomParams { forbidden_prob: forbid, ..RandomParams::default() };
        let inst = gen_random(n, m, &params, seed).unwrap();
        let back = load_instance(serialize_instance(&inst).as_bytes()).unwrap();
        prop_assert_eq!(back, inst);
    }
}
