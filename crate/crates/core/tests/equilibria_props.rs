use lqnet_core::equilibria::{efficient_efforts, gross_welfare, nash_efforts};
use lqnet_core::model::best_response_effort;
use lqnet_core::{GameParams, Network, Treatment};
use proptest::prelude::*;

fn graph(max_n: usize) -> impl Strategy<Value = Network> {
    (2..=max_n).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        any::<u64>().prop_map(move |code| {
            let mask = if pairs == 0 { 0 } else { u64::MAX >> (64 - pairs) };
            Network::from_upper_bits(n, code & mask)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn nash_is_a_fixed_point(g in graph(9), lambda in 0.05f64..0.6) {
        let p = GameParams::new(10.0, 4.0, lambda, 1.0, g.n()).unwrap();
        let sol = nash_efforts(&p, &g).unwrap();
        let x = sol.efforts.as_slice();
        if sol.converged {
            for i in 0..g.n() {
                let br = best_response_effort(&p, g.neighbor_sum(i, x));
                prop_assert!((x[i] - br).abs() <= 1e-8, "agent {} off by {}", i, x[i] - br);
            }
        }
    }

    #[test]
    fn efficient_welfare_dominates_nash(g in graph(9), lambda in 0.05f64..0.45) {
        let p = GameParams::new(10.0, 4.0, lambda, 1.0, g.n()).unwrap();
        let nash = nash_efforts(&p, &g).unwrap();
        let eff = efficient_efforts(&p, &g).unwrap();
        let wn = gross_welfare(&p, &g, nash.efforts.as_slice());
        let we = gross_welfare(&p, &g, eff.efforts.as_slice());
        prop_assert!(we >= wn - 1e-7, "{} < {}", we, wn);
    }
}

#[test]
fn empty_network_efforts_coincide() {
    for n in 2..=9 {
        let p = GameParams::new(10.0, 4.0, 0.4, 1.0, n).unwrap();
        let g = Network::empty(n);
        let nash = nash_efforts(&p, &g).unwrap();
        let eff = efficient_efforts(&p, &g).unwrap();
        for k in 0..n {
            assert!((nash.efforts.as_slice()[k] - 2.5).abs() < 1e-9);
            assert!((eff.efforts.as_slice()[k] - 2.5).abs() < 1e-9);
        }
    }
}

#[test]
fn efficient_exceeds_nash_on_treatment_networks() {
    for t in Treatment::all() {
        let n = t.params.n;
        for g in [Network::empty(n), Network::star(n, 0), Network::complete(n)] {
            let nash = nash_efforts(&t.params, &g).unwrap();
            let eff = efficient_efforts(&t.params, &g).unwrap();
            for (a, b) in eff.efforts.as_slice().iter().zip(nash.efforts.as_slice()) {
                assert!(a + 1e-9 >= *b, "{}: {a} < {b}", t.name);
            }
        }
    }
}

#[test]
fn vertex_transitive_networks_give_constant_efforts() {
    for n in 3..=9 {
        let p = GameParams::new(10.0, 4.0, 0.25, 1.0, n).unwrap();
        for g in [Network::empty(n), Network::complete(n), Network::cycle(n)] {
            let x = nash_efforts(&p, &g).unwrap().efforts.into_inner();
            assert!(x.iter().all(|v| (v - x[0]).abs() < 1e-9), "n={n}: {x:?}");
        }
    }
}
