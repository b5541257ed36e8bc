//! Static description of a network as English assertions.

use serde::{Deserialize, Serialize};

use crate::network::{BeliefNetwork, ConditionalModel, VarId};
use crate::phrase::{PhraseError, PhraseOptions, PhraseStyle, ScaleRegistry};
use crate::text::{capitalize, fixed2, join_list, param};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DescriptionOptions {
    /// "The probability of X is affected by Y." for every arc.
    pub include_dependencies: bool,
    /// Relative sentences between pairs of root priors.
    pub compare_priors: bool,
    #[serde(flatten)]
    pub phrase: PhraseOptions,
}

fn with_p(show: bool, p: f64) -> String {
    if show {
        format!(" (p={})", param(p))
    } else {
        String::new()
    }
}

/// The stored prior of a root, if `v` is one.
fn prior(net: &BeliefNetwork, v: VarId) -> Option<f64> {
    match net.model(v) {
        ConditionalModel::Table { parents, p_true, .. } if parents.is_empty() => Some(p_true[0]),
        ConditionalModel::NoisyOr { causes, leak } if causes.is_empty() => Some(*leak),
        _ => None,
    }
}

/// One sentence per line, variables in topological order.
pub fn describe_network(
    net: &BeliefNetwork,
    options: &DescriptionOptions,
    scales: &ScaleRegistry,
) -> Result<Vec<String>, PhraseError> {
    options.phrase.validate(scales)?;
    let show = options.phrase.show_numbers;
    let mut out = Vec::new();
    for &v in net.topological_order() {
        let label = net.label(v);
        let scale = options.phrase.absolute_for(scales, net.name(v))?;
        if let Some(p) = prior(net, v) {
            out.push(format!(
                "{} is {}{}.",
                capitalize(label),
                scale.phrase(p, PhraseStyle::Adjective),
                with_p(show, p)
            ));
            continue;
        }
        let model = net.model(v);
        if options.include_dependencies || !model.is_noisy_or() {
            for &p in net.parents(v) {
                out.push(format!("The probability of {label} is affected by {}.", net.label(p)));
            }
        }
        let ConditionalModel::NoisyOr { causes, leak } = model else {
            continue;
        };
        let mut causal = Vec::new();
        for (cause, &p) in causes.iter().zip(net.parents(v)) {
            if cause.causal {
                causal.push(net.label(p).to_string());
                out.push(format!(
                    "{} {}{} causes {label}.",
                    capitalize(net.label(p)),
                    scale.phrase(cause.strength, PhraseStyle::Adverb),
                    with_p(show, cause.strength)
                ));
            } else if !options.include_dependencies {
                out.push(format!("The probability of {label} is affected by {}.", net.label(p)));
            }
        }
        for i in 0..causal.len() {
            for j in i + 1..causal.len() {
                out.push(format!(
                    "{} does not affect the tendency of {} to cause {label}, and vice versa.",
                    capitalize(&causal[i]),
                    causal[j]
                ));
            }
        }
        if *leak > 0.0 {
            out.push(format!(
                "There are also other {}{} causes of {label}.",
                scale.phrase(*leak, PhraseStyle::Adjective),
                with_p(show, *leak)
            ));
        } else if causes.len() == 1 {
            out.push(format!(
                "{} is the only cause of {label}.",
                capitalize(net.label(net.parents(v)[0]))
            ));
        } else {
            let all: Vec<String> = net.parents(v).iter().map(|&p| net.label(p).to_string()).collect();
            out.push(format!("There is no other cause of {label} than {}.", join_list(&all, "and")));
        }
    }
    if options.compare_priors {
        let relative = options.phrase.relative(scales)?;
        let roots: Vec<(VarId, f64)> = net
            .topological_order()
            .iter()
            .filter_map(|&v| prior(net, v).map(|p| (v, p)))
            .collect();
        for (i, &(a, pa)) in roots.iter().enumerate() {
            for &(b, pb) in &roots[i + 1..] {
                if relative.band(pa, pb) == 0 {
                    continue;
                }
                let numbers = if show {
                    format!(" ({}/{})", fixed2(pa), fixed2(pb))
                } else {
                    String::new()
                };
                out.push(format!(
                    "{} is {} {}{numbers}.",
                    capitalize(net.label(a)),
                    relative.phrase(pa, pb),
                    net.label(b)
                ));
            }
        }
    }
    Ok(out)
}
