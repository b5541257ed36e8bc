mod common;

use common::{dag, evidence, polytree, rng};
use proptest::prelude::*;
use qiq_core::infer::{self, d_separated, posterior};
use qiq_core::phrase::{default_absolute, default_relative, PhraseStyle};
use qiq_core::qual::{arc_sign, Sign};
use qiq_core::scenario::{enumerate_scenarios, prune_and_partition, render_scenario_label, LabelMode};
use qiq_core::{explain_why, BeliefNetwork, ConditionalModel, Evidence, ExplainParams, NetworkBuilder, ScaleRegistry};
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn json_round_trip(seed in any::<u64>(), n in 1usize..10, tree in any::<bool>()) {
        let mut r = rng(seed);
        let net = if tree { polytree(&mut r, n, true) } else { dag(&mut r, n, 3, true) };
        let text = net.to_json();
        let back = BeliefNetwork::from_json(&text).unwrap();
        prop_assert_eq!(&back, &net);
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn noisy_or_is_monotone(strengths in prop::collection::vec(0.0f64..=1.0, 1..5), leak in 0.0f64..=1.0) {
        let names: Vec<String> = (0..strengths.len()).map(|i| format!("c{i}")).collect();
        let causes: Vec<(&str, f64)> = names.iter().map(String::as_str).zip(strengths.iter().copied()).collect();
        let model = ConditionalModel::noisy_or(&causes, leak);
        let k = strengths.len();
        let row = |bits: usize| -> Vec<bool> { (0..k).map(|i| bits >> i & 1 == 1).collect() };
        for small in 0..1usize << k {
            let p = model.conditional_probability(true, &row(small)).unwrap();
            let q = model.conditional_probability(false, &row(small)).unwrap();
            prop_assert!((p + q - 1.0).abs() < 1e-15);
            for extra in 0..k {
                let big = small | 1 << extra;
                prop_assert!(model.conditional_probability(true, &row(big)).unwrap() >= p);
            }
        }
    }

    #[test]
    fn relevance_is_exact_on_dags(seed in any::<u64>(), n in 1usize..11) {
        let mut r = rng(seed);
        let net = dag(&mut r, n, 3, true);
        let ev = evidence(&mut r, &net, n / 2);
        let unobserved: Vec<_> = net.ids().filter(|v| !ev.contains(*v)).collect();
        prop_assume!(!unobserved.is_empty());
        let target = unobserved[r.gen_range(0..unobserved.len())];
        let set = enumerate_scenarios(&net, &ev, target).unwrap();
        let exact = posterior(&net, &ev, target).unwrap().probability;
        prop_assert!((set.compatible_total() - exact).abs() < 1e-12);
        let total: f64 = set.scenarios.iter().map(|s| s.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn d_separation_implies_independence(seed in any::<u64>(), n in 2usize..9) {
        let mut r = rng(seed);
        let net = dag(&mut r, n, 2, false);
        let ids: Vec<_> = net.ids().collect();
        let x = ids[r.gen_range(0..n)];
        let y = ids[r.gen_range(0..n)];
        prop_assume!(x != y);
        let mut given = evidence(&mut r, &net, n / 2);
        given.remove(x);
        given.remove(y);
        if d_separated(&net, x, y, &given.vars()).unwrap() {
            let base = posterior(&net, &given, x).unwrap().probability;
            for value in [true, false] {
                let with = given.with(y, value);
                if infer::evidence_probability(&net, &with).unwrap() > 0.0 {
                    let p = posterior(&net, &with, x).unwrap().probability;
                    prop_assert!((p - base).abs() < 1e-9, "{} vs {}", p, base);
                }
            }
        }
    }

    #[test]
    fn diagnostic_reversal(pa in 0.01f64..0.99, t in 0.0f64..=1.0, f in 0.0f64..=1.0) {
        let net = NetworkBuilder::new().root("a", pa).table("b", &["a"], vec![f, t]).build().unwrap();
        let (a, b) = (net.id("a").unwrap(), net.id("b").unwrap());
        let forward = arc_sign(&net, a, b).unwrap();
        let cond = |var, given: &[(_, bool)]| {
            let mut ev = Evidence::new();
            for &(g, x) in given {
                ev.insert(g, x);
            }
            infer::evidence_probability(&net, &ev).ok().filter(|m| *m > 0.0)?;
            Some(posterior(&net, &ev, var).unwrap().probability)
        };
        let backward = match (cond(a, &[(b, true)]), cond(a, &[(b, false)])) {
            (Some(x), Some(y)) => Sign::of(x - y),
            _ => return Ok(()),
        };
        prop_assert_eq!(forward, backward);
    }

    #[test]
    fn absolute_bands_are_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let s = default_absolute();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(s.band(lo) <= s.band(hi));
        prop_assert!(!s.phrase(a, PhraseStyle::Adjective).is_empty());
    }

    #[test]
    fn relative_phrases_are_antisymmetric(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let s = default_relative();
        prop_assert_eq!(s.band(a, b), s.band(b, a));
        let (x, y) = (s.phrase(a, b), s.phrase(b, a));
        if s.band(a, b) == 0 || a == b {
            prop_assert_eq!(x, y);
        } else {
            prop_assert_eq!(x.replace("more", "less"), y.replace("more", "less"));
            prop_assert_ne!(x, y);
        }
    }

    #[test]
    fn partition_conserves_mass(seed in any::<u64>(), n in 1usize..10, th in 0.01f64..0.5, cap in 0.01f64..0.5) {
        let mut r = rng(seed);
        let net = polytree(&mut r, n, true);
        let ev = evidence(&mut r, &net, n / 2);
        let Some(target) = net.ids().find(|v| !ev.contains(*v)) else { return Ok(()) };
        let set = enumerate_scenarios(&net, &ev, target).unwrap();
        let part = prune_and_partition(&set, th, cap);
        let mut seen = 0;
        for side in [&part.compatible, &part.incompatible] {
            let probs: Vec<f64> = side.listed.iter().map(|&i| set.scenarios[i].probability).collect();
            prop_assert!(probs.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!((probs.iter().sum::<f64>() + side.residual - side.total).abs() < 1e-12);
            prop_assert!(side.residual <= cap * side.total + 1e-15 || side.listed.len() + side.residual_count == 0);
            seen += side.listed.len();
        }
        prop_assert_eq!(part.tags.len(), seen);
        prop_assert!((part.compatible_total - set.compatible_total()).abs() < 1e-12);
    }

    #[test]
    fn label_connectives_match_probabilities(seed in any::<u64>(), n in 1usize..8, but in 0.05f64..0.5) {
        let mut r = rng(seed);
        let net = polytree(&mut r, n, true);
        let ev = evidence(&mut r, &net, n / 2);
        let Some(target) = net.ids().find(|v| !ev.contains(*v)) else { return Ok(()) };
        let set = enumerate_scenarios(&net, &ev, target).unwrap();
        for s in set.scenarios.iter().filter(|s| s.probability > 0.0) {
            let label = render_scenario_label(&net, &set, s, but, LabelMode::Listing).to_lowercase();
            let known = set.known(s);
            let words: Vec<&str> = label.split(' ').collect();
            let mut link = "";
            let mut event = 0;
            let mut i = 0;
            while i < words.len() {
                let w = words[i];
                if matches!(w, "and" | "hence" | "but" | "causing") {
                    link = w;
                    i += 1;
                    continue;
                }
                let value = w != "no";
                if !value {
                    i += 1;
                }
                let v = set.variables[event];
                prop_assert_eq!(words[i], net.label(v));
                prop_assert_eq!(Some(value), known.get(v));
                let parents: Vec<bool> = net.parents(v).iter().map(|&p| known.get(p).unwrap()).collect();
                let q = net.conditional_probability(v, value, &parents).unwrap();
                match link {
                    "hence" => prop_assert!(q >= 1.0 - 1e-12),
                    "but" => prop_assert!(q <= but),
                    _ => {}
                }
                event += 1;
                i += 1;
            }
            prop_assert_eq!(event, set.variables.len());
        }
    }

    #[test]
    fn explanations_render_deterministically(seed in any::<u64>(), n in 1usize..8) {
        let mut r = rng(seed);
        let net = polytree(&mut r, n, false);
        let ev = evidence(&mut r, &net, n / 2);
        let Some(target) = net.ids().find(|v| !ev.contains(*v)) else { return Ok(()) };
        let reg = ScaleRegistry::default();
        let a = explain_why(&net, &ev, target, &ExplainParams::default(), &reg).unwrap();
        let b = explain_why(&net, &ev, target, &ExplainParams::default(), &reg).unwrap();
        prop_assert_eq!(a.render(), b.render());
        prop_assert!(a.render().contains("Therefore"));
    }
}
