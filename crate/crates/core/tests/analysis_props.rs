use lqnet_core::analysis::{
    efficiency_report, fit_effort_model, frequency_report, link_diagnostics, treatment_summary, Window,
};
use lqnet_core::dynamics::{
    batch_run, run_session, AgentPolicy, EffortRule, InitialEffort, LinkRule, LogisticCoefficients, PeriodRecord,
    SessionRecord,
};
use lqnet_core::equilibria::nash_efforts;
use lqnet_core::model::realize_network;
use lqnet_core::{EffortProfile, GameParams, IntentProfile};
use proptest::prelude::*;

fn logistic_policies(n: usize, noise: f64) -> Vec<AgentPolicy> {
    AgentPolicy::uniform(
        n,
        AgentPolicy {
            effort_rule: EffortRule::new(0.3, 0.6, 0.02, noise)
                .unwrap()
                .with_initial(InitialEffort::Uniform),
            link_rule: LinkRule::LogisticChoice(LogisticCoefficients::benefit_components()),
        },
    )
}

fn permute(record: &SessionRecord, perm: &[usize]) -> SessionRecord {
    let n = record.params.n;
    let periods = record
        .periods
        .iter()
        .map(|p| {
            let pairs: Vec<(usize, usize)> = p.intents.pairs().into_iter().map(|(i, j)| (perm[i], perm[j])).collect();
            let intents = IntentProfile::from_pairs(n, &pairs).unwrap();
            let mut x = vec![0.0; n];
            let mut pay = p.payoffs.clone();
            for i in 0..n {
                x[perm[i]] = p.efforts.as_slice()[i];
                pay[perm[i]] = p.payoffs[i];
            }
            PeriodRecord {
                network: realize_network(&intents),
                intents,
                efforts: EffortProfile::new(x, &record.params).unwrap(),
                payoffs: pay,
            }
        })
        .collect();
    SessionRecord {
        periods,
        ..record.clone()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn near_matches_include_exact_matches(seed in any::<u64>(), n in 3usize..=9) {
        let p = GameParams::new(10.0, 4.0, 0.25, 1.0, n).unwrap();
        let rec = run_session(&p, &logistic_policies(n, 1.0), 15, seed).unwrap();
        let report = frequency_report(&[rec], Window::All).unwrap();
        for e in &report.entries {
            prop_assert!(e.within_two >= e.exact);
        }
    }

    #[test]
    fn diagnostics_ignore_agent_labels(seed in any::<u64>(), perm in Just((0..7).collect::<Vec<usize>>()).prop_shuffle()) {
        let p = GameParams::new(10.0, 4.0, 0.25, 1.0, 7).unwrap();
        let rec = run_session(&p, &logistic_policies(7, 1.0), 10, seed).unwrap();
        let a = link_diagnostics(&rec, Window::All).unwrap();
        let b = link_diagnostics(&permute(&rec, &perm), Window::All).unwrap();
        prop_assert!((a.avg_profitable_missing - b.avg_profitable_missing).abs() < 1e-12);
        prop_assert!((a.profitable_missing_share - b.profitable_missing_share).abs() < 1e-12);
        prop_assert!((a.avg_unprofitable_existing - b.avg_unprofitable_existing).abs() < 1e-12);
        prop_assert!((a.unprofitable_existing_share - b.unprofitable_existing_share).abs() < 1e-12);
        prop_assert!((a.reciprocated_share - b.reciprocated_share).abs() < 1e-12);
    }

    #[test]
    fn relative_efficiency_scales_with_payoffs(seed in any::<u64>(), factor in 0.1f64..5.0) {
        let p = GameParams::new(10.0, 4.0, 0.4, 1.0, 5).unwrap();
        let rec = run_session(&p, &logistic_policies(5, 1.0), 10, seed).unwrap();
        let mut scaled = rec.clone();
        for period in &mut scaled.periods {
            for b in &mut period.payoffs {
                b.total *= factor;
            }
        }
        let a = efficiency_report(&[rec], &p, Window::All).unwrap();
        let b = efficiency_report(&[scaled], &p, Window::All).unwrap();
        prop_assert!((b.relative_efficiency - factor * a.relative_efficiency).abs() < 1e-9 * (1.0 + a.relative_efficiency.abs()));
    }

    #[test]
    fn noiseless_fit_recovers_generating_rule(b0 in 0.0f64..0.5, b1 in 0.2f64..0.9, b2 in 0.0f64..0.05, seed in any::<u64>()) {
        // random linking keeps the three regressors from being collinear;
        // coefficients stay small enough that efforts remain inside the box
        let p = GameParams::new(10.0, 4.0, 0.25, 1.0, 6).unwrap();
        let rule = EffortRule::new(b0, b1, b2, 0.0).unwrap().with_initial(InitialEffort::Uniform);
        let policies = AgentPolicy::uniform(6, AgentPolicy {
            effort_rule: rule,
            link_rule: LinkRule::LogisticChoice(LogisticCoefficients {
                intercept: 0.0,
                lagged_link: 0.0,
                partner_effort: 0.0,
                above_median: 0.0,
                below_median: 0.0,
                own_effort: 0.0,
                lambda: 0.0,
                linking_cost: 0.0,
                large_group: 0.0,
            }),
        });
        let recs = batch_run(&p, &policies, 6, 8, seed).unwrap();
        let interior = recs.iter().flat_map(|r| &r.periods).all(|q| {
            q.efforts.as_slice().iter().all(|&x| x > p.effort_min && x < p.effort_max)
        });
        prop_assume!(interior);
        let fit = fit_effort_model(&recs).unwrap();
        prop_assert!((fit.b0 - b0).abs() < 1e-7, "b0 {} vs {}", fit.b0, b0);
        prop_assert!((fit.b1 - b1).abs() < 1e-7, "b1 {} vs {}", fit.b1, b1);
        prop_assert!((fit.b2 - b2).abs() < 1e-7, "b2 {} vs {}", fit.b2, b2);
        prop_assert!(fit.residual_sum_squares < 1e-12);
    }
}

#[test]
fn summary_benchmark_matches_solver_on_each_period() {
    let p = GameParams::new(10.0, 4.0, 0.25, 1.0, 9).unwrap();
    let rec = run_session(&p, &logistic_policies(9, 0.5), 4, 17).unwrap();
    let summary = treatment_summary(std::slice::from_ref(&rec), &p, Window::Range(2, 2)).unwrap();
    let direct = nash_efforts(&p, &rec.periods[1].network).unwrap().efforts.mean();
    assert!((summary.groups[0].mean.nash_effort_on_network - direct).abs() < 1e-12);
    // a one-period window has no spread
    assert!(summary.groups[0].std_dev.values().iter().all(|&v| v == 0.0));
}
