use lqnet_core::structure::is_nested_split;
use lqnet_core::verifier::{enumerate_ne_networks, verify_nash};
use lqnet_core::{EffortProfile, GameParams, IntentProfile, StrategyProfile};
use proptest::prelude::*;

const KAPPAS: [f64; 7] = [0.5, 1.0, 2.0, 3.1, 3.9, 5.0, 6.0];

fn certified(kappa: f64) -> Vec<StrategyProfile> {
    let p = GameParams::new(10.0, 4.0, 0.4, kappa, 5).unwrap();
    enumerate_ne_networks(&p, &[])
        .unwrap()
        .into_iter()
        .filter(|r| r.supportable)
        .map(|r| {
            assert!(is_nested_split(&r.network), "kappa {kappa}: {:?}", r.network.edges());
            r.witness.expect("supportable report carries a witness")
        })
        .collect()
}

#[test]
fn certified_witnesses_are_nash_nested_split_and_singly_sponsored() {
    let mut total = 0;
    for kappa in KAPPAS {
        let p = GameParams::new(10.0, 4.0, 0.4, kappa, 5).unwrap();
        for w in certified(kappa) {
            assert!(verify_nash(&p, &w).unwrap().is_nash);
            assert_eq!(w.intents.reciprocated_count(), 0);
            total += 1;
        }
    }
    assert!(total >= 7);
}

#[test]
fn single_effort_perturbations_break_equilibrium() {
    for kappa in KAPPAS {
        let p = GameParams::new(10.0, 4.0, 0.4, kappa, 5).unwrap();
        for w in certified(kappa) {
            for i in 0..p.n {
                for delta in [-0.5, 0.5] {
                    let mut x = w.efforts.as_slice().to_vec();
                    let moved = x[i] + delta;
                    if moved < p.effort_min || moved > p.effort_max {
                        continue;
                    }
                    x[i] = moved;
                    let profile =
                        StrategyProfile::new(EffortProfile::new(x, &p).unwrap(), w.intents.clone()).unwrap();
                    let report = verify_nash(&p, &profile).unwrap();
                    assert!(!report.is_nash, "kappa {kappa}, agent {i}, delta {delta}");
                    // the effort-only return to the best response alone is worth (beta/2) 0.25
                    assert!(report.worst_deviation.unwrap().gain >= p.beta / 2.0 * 0.25 - 1e-9);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn effort_only_gain_matches_closed_form(xs in prop::collection::vec(0.0f64..20.0, 5)) {
        // links are worthless at this cost, so the best deviation only moves effort
        let p = GameParams::new(10.0, 4.0, 0.4, 1e6, 5).unwrap();
        let profile = StrategyProfile::new(EffortProfile::new(xs.clone(), &p).unwrap(), IntentProfile::empty(5)).unwrap();
        let report = verify_nash(&p, &profile).unwrap();
        let expect = xs.iter().map(|x| p.beta / 2.0 * (x - 2.5).powi(2)).fold(0.0, f64::max);
        if expect > 1e-9 {
            let worst = report.worst_deviation.unwrap();
            prop_assert!((worst.gain - expect).abs() < 1e-9, "{} vs {}", worst.gain, expect);
            prop_assert!(worst.intents.is_empty());
            prop_assert!((worst.effort - 2.5).abs() < 1e-12);
        }
    }
}
