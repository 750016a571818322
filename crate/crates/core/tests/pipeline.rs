//! End-to-end loop invariants on a small synthetic dataset.

use std::collections::BTreeSet;

use ceal::config::{config_to_text, parse_config};
use ceal::orchestrator::{init_pools, read_log_csv, run_with, RunConfig, Strategy};
use ceal::predictor::RefPredictor;
use ceal::synthdata::{generate_samples, SynthParams};

fn small(strategy: Strategy) -> RunConfig {
    RunConfig {
        n_labeled: 40,
        n_unlabeled: 80,
        n_test: 30,
        iterations: 3,
        strategy,
        seed: 17,
        ..RunConfig::default()
    }
}

#[test]
fn iteration_invariants_hold() {
    let data = generate_samples(150, &SynthParams::default(), 2).unwrap();
    for strategy in [Strategy::Ceal, Strategy::Random] {
        let config = small(strategy);
        let test_ids: BTreeSet<u64> = init_pools(&data, &config).unwrap().test().keys().copied().collect();
        assert_eq!(test_ids.len(), 30);

        let mut prev_labeled = config.n_labeled;
        let mut seen_iterations = 0;
        let log = run_with(&config, &data, || RefPredictor::new(0.5), |o| {
            seen_iterations += 1;
            assert!(o.training_ids.iter().all(|id| !test_ids.contains(id)));
            o.state.check_invariants().unwrap();

            let oracle: BTreeSet<u64> = o.selection.oracle_ids().map(|(id, _)| id).collect();
            assert_eq!(oracle.len(), o.selection.oracle_count());
            assert!(o.selection.pseudo_ids().all(|id| !oracle.contains(&id)));
            assert!(o.state.labeled().len() >= prev_labeled);
            assert_eq!(o.state.labeled().len(), prev_labeled + oracle.len());
            prev_labeled = o.state.labeled().len();

            assert_eq!(o.regions.len(), o.scored.len());
            assert_eq!(o.record.regions.iter().sum::<usize>(), o.scored.len());
            if strategy == Strategy::Random {
                assert_eq!(o.record.n_pseudo, 0);
                assert_eq!(o.record.pseudo_threshold, 0.0);
            }
        })
        .unwrap();
        assert_eq!(seen_iterations, 3);
        assert_eq!(log.oracle_queries, prev_labeled - config.n_labeled);
        assert!(log.records.iter().all(|r| r.elapsed_ms == 0));
        assert!(log.records.iter().all(|r| (0.0..=1.0).contains(&r.mean_test_dice)));
        assert_eq!(read_log_csv(log.to_csv().unwrap().as_slice()).unwrap(), log.records);
    }
}

#[test]
fn seed_changes_the_run_and_config_echo_reproduces_it() {
    let data = generate_samples(150, &SynthParams::default(), 2).unwrap();
    let config = small(Strategy::Ceal);
    let a = run_with(&config, &data, || RefPredictor::new(0.5), |_| {}).unwrap();

    let echoed = parse_config(&config_to_text(&config)).unwrap();
    let b = run_with(&echoed, &data, || RefPredictor::new(0.5), |_| {}).unwrap();
    assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());

    let other = RunConfig { seed: 18, ..config };
    let c = run_with(&other, &data, || RefPredictor::new(0.5), |_| {}).unwrap();
    assert_ne!(a.to_csv().unwrap(), c.to_csv().unwrap());
}

#[test]
fn training_improves_on_the_untrained_model() {
    let data = generate_samples(150, &SynthParams::default(), 5).unwrap();
    let config = RunConfig {
        iterations: 1,
        ..small(Strategy::Ceal)
    };
    let log = run_with(&config, &data, || RefPredictor::new(0.5), |_| {}).unwrap();
    // An untrained zero-weight model predicts 0.5 everywhere, i.e. all foreground.
    assert!(log.initial_test_dice.0 > 0.8, "{:?}", log.initial_test_dice);
    assert!(log.records[0].mean_test_dice > 0.8);
}
