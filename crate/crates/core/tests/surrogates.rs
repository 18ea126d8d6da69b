//! Stand-ins for the GloVe-bound checks, run on synthetic embeddings. They
//! exercise the same code paths at the same scale but say nothing about
//! the numbers GloVe would produce.

mod common;

use std::sync::Arc;

use codenames_core::env::EnvConfig;
use codenames_core::eval::{evaluate, welch_t_test, Policy};
use codenames_core::setup::{load_resources, ResourceOptions};
use codenames_core::synth::{synthetic_vocab, SynthConfig};

#[test]
fn synthetic_400k_index_contract() {
    let cfg = SynthConfig {
        topics: 20_000,
        words_per_topic: 20,
        dim: 300,
        ..Default::default()
    };
    let store = Arc::new(synthetic_vocab(&cfg).store);
    assert_eq!(store.len(), 400_000);
    let checks = common::ann_contract(store, 50_000, 7);
    for c in &checks {
        eprintln!("[{}] {}: {}", if c.pass { "ok" } else { "x" }, c.name, c.detail);
    }
    assert!(checks.iter().all(|c| c.pass));
}

#[test]
fn synthetic_greedy_beats_random() {
    let r = load_resources(&ResourceOptions {
        synthetic: true,
        ..Default::default()
    })
    .unwrap();
    let config = EnvConfig::default();
    let greedy = evaluate(Policy::Greedy, &config, &r.search, &r.deck, 200, 2023).unwrap();
    let random = evaluate(Policy::Random, &config, &r.search, &r.deck, 200, 2023).unwrap();
    let w = welch_t_test(&greedy.returns, &random.returns);
    eprintln!(
        "greedy {:.2} +- {:.2}, random {:.2} +- {:.2}, t {:.2}, p {:.2e}",
        greedy.mean, greedy.std, random.mean, random.std, w.t, w.p
    );
    assert!(greedy.mean > random.mean);
    assert!(w.p < 0.01);
}
