//! Random networks and evidence shared by the property suites.
#![allow(dead_code)]

use qiq_core::infer;
use qiq_core::{BeliefNetwork, ConditionalModel, Evidence, Variable};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Probability in (0, 1), occasionally exactly 0 or 1 when `extremes`.
pub fn prob(rng: &mut ChaCha8Rng, extremes: bool) -> f64 {
    if extremes && rng.gen_bool(0.1) {
        if rng.gen_bool(0.5) {
            0.0
        } else {
            1.0
        }
    } else {
        rng.gen_range(0.01..0.99)
    }
}

pub fn model(rng: &mut ChaCha8Rng, parents: &[String], extremes: bool) -> ConditionalModel {
    if parents.is_empty() {
        return ConditionalModel::prior(rng.gen_range(0.01..0.99));
    }
    let names: Vec<&str> = parents.iter().map(String::as_str).collect();
    if rng.gen_bool(0.5) {
        let causes: Vec<(&str, f64)> = names.iter().map(|&n| (n, prob(rng, extremes))).collect();
        let leak = if rng.gen_bool(0.4) { 0.0 } else { rng.gen_range(0.0..0.3) };
        ConditionalModel::noisy_or(&causes, leak)
    } else {
        let rows = (0..1 << names.len()).map(|_| prob(rng, extremes)).collect();
        ConditionalModel::table(&names, rows)
    }
}

fn assemble(rng: &mut ChaCha8Rng, parents: Vec<Vec<usize>>, extremes: bool) -> BeliefNetwork {
    let n = parents.len();
    // Declare in shuffled order so nothing relies on declaration being topological.
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let entries = order
        .into_iter()
        .map(|i| {
            let ps: Vec<String> = parents[i].iter().map(|p| format!("v{p}")).collect();
            (Variable::new(format!("v{i}")), model(rng, &ps, extremes))
        })
        .collect();
    BeliefNetwork::new(entries).expect("generated network is valid")
}

/// Random polytree (possibly a forest) with `n` nodes.
pub fn polytree(rng: &mut ChaCha8Rng, n: usize, extremes: bool) -> BeliefNetwork {
    let mut parents = vec![Vec::new(); n];
    for i in 1..n {
        if rng.gen_bool(0.9) {
            let j = rng.gen_range(0..i);
            if rng.gen_bool(0.5) {
                parents[i].push(j);
            } else {
                parents[j].push(i);
            }
        }
    }
    // a forest skeleton cannot hold a directed cycle, whatever the orientation
    assemble(rng, parents, extremes)
}

/// Random DAG with up to `max_parents` parents per node.
pub fn dag(rng: &mut ChaCha8Rng, n: usize, max_parents: usize, extremes: bool) -> BeliefNetwork {
    let mut parents = vec![Vec::new(); n];
    for (i, ps) in parents.iter_mut().enumerate().skip(1) {
        let k = rng.gen_range(0..=max_parents.min(i));
        let mut pool: Vec<usize> = (0..i).collect();
        pool.shuffle(rng);
        ps.extend(pool.into_iter().take(k));
        ps.sort();
    }
    assemble(rng, parents, extremes)
}

/// Random evidence on up to `max` variables with positive probability.
pub fn evidence(rng: &mut ChaCha8Rng, net: &BeliefNetwork, max: usize) -> Evidence {
    let ids: Vec<_> = net.ids().collect();
    loop {
        let k = rng.gen_range(0..=max.min(ids.len()));
        let mut ev = Evidence::new();
        for &v in ids.choose_multiple(rng, k) {
            ev.insert(v, rng.gen_bool(0.5));
        }
        if infer::evidence_probability(net, &ev).unwrap() > 0.0 {
            return ev;
        }
    }
}
