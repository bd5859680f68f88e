use std::collections::BTreeMap;

use ckmc::eval::{eval, VarEnv};
use ckmc::logic::parse;
use ckmc::scenarios::{
    broadcast_channel, clock_points, coordinated_attack, muddy_answers, muddy_children, ok_protocol, r2d2,
    scenario_by_name, staggered_knowledge, timestamp_t0, timestamped_demo, verify, MuddyParams, ScenarioManifest,
    SCENARIO_NAMES,
};
use ckmc::schema::{load_manifest, manifest_to_json};

fn check(m: &ScenarioManifest) {
    let report = verify(m);
    assert!(report.passed(), "{report}");
}

#[test]
fn every_manifest_verifies() {
    for n in 1..=4 {
        for announce in [true, false] {
            check(&muddy_children(&MuddyParams { n, announce, rounds: n as u32 + 1, staggered: false }).unwrap());
        }
        if n >= 2 {
            check(&muddy_children(&MuddyParams { n, announce: true, rounds: 2, staggered: true }).unwrap());
        }
    }
    for k in 1..=4 {
        check(&coordinated_attack(k, 2 * k).unwrap());
    }
    check(&coordinated_attack(2, 6).unwrap());
    for eps in [1, 2, 3] {
        for t_s in [1, 2, 3] {
            check(&r2d2(eps, t_s, 3).unwrap());
        }
    }
    for h in 3..=6 {
        check(&ok_protocol(h).unwrap());
    }
    check(&broadcast_channel(0, 1, 2, 3).unwrap());
    check(&broadcast_channel(2, 1, 3, 5).unwrap());
    check(&broadcast_channel(1, 2, 2, 6).unwrap());
    check(&broadcast_channel(1, 0, 3, 3).unwrap());
    for (d, e) in [(0, 1), (1, 1), (1, 2), (2, 1)] {
        check(&timestamped_demo(d, e, 2 + e + 2 * d + 1).unwrap());
    }
    check(&staggered_knowledge(1).unwrap());
    check(&staggered_knowledge(2).unwrap());
}

#[test]
fn named_scenarios_use_defaults_and_reject_unknown_parameters() {
    for name in SCENARIO_NAMES {
        check(&scenario_by_name(name, &BTreeMap::new()).unwrap());
    }
    let bad: BTreeMap<String, String> = [("colour".to_string(), "red".to_string())].into();
    assert!(scenario_by_name("r2d2", &bad).is_err());
    assert!(scenario_by_name("wise_men", &BTreeMap::new()).is_err());
}

#[test]
fn generators_are_deterministic_and_survive_serialization() {
    let a = manifest_to_json(&coordinated_attack(3, 6).unwrap());
    let b = manifest_to_json(&coordinated_attack(3, 6).unwrap());
    assert_eq!(a, b);
    let m = muddy_children(&MuddyParams { n: 3, announce: true, rounds: 3, staggered: false }).unwrap();
    let back = load_manifest(&manifest_to_json(&m)).unwrap();
    assert_eq!(back.model.system(), m.model.system());
    check(&back);
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

#[test]
fn muddy_answers_are_symmetric_in_the_children() {
    for n in 2..=4 {
        let p = MuddyParams { n, announce: true, rounds: n as u32 + 1, staggered: false };
        let runs = muddy_answers(&p).unwrap();
        let by_vector: BTreeMap<Vec<bool>, &Vec<Vec<bool>>> = runs.iter().map(|r| (r.muddy.clone(), &r.yes)).collect();
        for perm in permutations(n) {
            for r in &runs {
                let moved: Vec<bool> = (0..n).map(|j| r.muddy[perm.iter().position(|&x| x == j).unwrap()]).collect();
                let other = by_vector[&moved];
                for (q, round) in r.yes.iter().enumerate() {
                    for i in 0..n {
                        assert_eq!(round[i], other[q][perm[i]]);
                    }
                }
            }
        }
    }
}

/// Timestamped common knowledge against the other variants, at points where
/// some clock reads the stamp.
#[test]
fn timestamped_demo_inclusions() {
    for (delta, eps) in [(0, 1), (1, 1), (1, 2), (2, 1)] {
        let m = timestamped_demo(delta, eps, 2 + eps + 2 * delta + 1).unwrap();
        let sys = m.model.system();
        let t0 = timestamp_t0(delta, eps);
        for phi in ["sent_mt", "~sent_mt", "K1 sent_mt", "true"] {
            let ev = |f: String| eval(&m.model, &parse(&f).unwrap(), &VarEnv::new()).unwrap();
            for stamp in [t0 - 1, t0, t0 + 1] {
                let at = clock_points(sys, stamp);
                let ct = ev(format!("Ct[{stamp}]{{0,1}} ({phi})"));
                if delta == 0 {
                    assert_eq!(ct.intersection(&at), ev(format!("C{{0,1}} ({phi})")).intersection(&at));
                }
                let ce = ev(format!("Ceps[{delta}]{{0,1}} ({phi})"));
                assert!(ct.intersection(&at).is_subset(&ce), "delta {delta} eps {eps} stamp {stamp} {phi}");
                assert!(ct.is_subset(&ev(format!("Cv{{0,1}} ({phi})"))));
            }
        }
    }
}
