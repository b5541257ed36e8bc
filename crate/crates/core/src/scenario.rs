//! Scenario-based explanation: enumerate complete instantiations of the
//! relevant variables, list the probable ones on each side of the target,
//! tell them as causal stories and contrast them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::infer::{self, Evidence, InferenceError, MAX_ENUMERATED};
use crate::network::{BeliefNetwork, VarId};
use crate::phrase::{PhraseError, PhraseOptions, PhraseStyle, ScaleRegistry};
use crate::text::{capitalize, fixed2, fmt_hundredths, hundredths, title_case};

/// Conditional probabilities this close to 1 read as certain.
const CERTAIN: f64 = 1.0 - 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Phrase(#[from] PhraseError),
    #[error("`{0}` is observed; there is nothing to explain")]
    TargetObserved(String),
    #[error("scenarios range over different variables")]
    Mismatch,
    #[error("{0} must lie in (0, 1)")]
    Fraction(&'static str),
    #[error("contrast factor must exceed 1")]
    ContrastFactor,
}

/// Knobs controlling how much of the scenario space is shown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioParams {
    /// A scenario is listed when it carries more than this share of its side.
    pub list_threshold: f64,
    /// Listing continues while the pooled remainder exceeds this share.
    pub residual_cap: f64,
    /// Ratio above which two event probabilities count as a contrast.
    pub contrast_factor: f64,
    /// Events at or below this conditional probability read as "but".
    pub but_threshold: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            list_threshold: 0.10,
            residual_cap: 0.15,
            contrast_factor: 1.2,
            but_threshold: 0.25,
        }
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let unit = |x: f64| x > 0.0 && x < 1.0;
        if !unit(self.list_threshold) {
            return Err(ScenarioError::Fraction("list threshold"));
        }
        if !unit(self.residual_cap) {
            return Err(ScenarioError::Fraction("residual cap"));
        }
        if !unit(self.but_threshold) {
            return Err(ScenarioError::Fraction("but threshold"));
        }
        if !(self.contrast_factor > 1.0) || !self.contrast_factor.is_finite() {
            return Err(ScenarioError::ContrastFactor);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// One value per entry of [`ScenarioSet::variables`].
    pub values: Vec<bool>,
    /// Joint probability of the scenario together with the evidence.
    pub raw_weight: f64,
    pub probability: f64,
}

/// Every instantiation of the variables relevant to a target.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    pub target: VarId,
    /// Relevant variables in story order.
    pub variables: Vec<VarId>,
    pub evidence: Evidence,
    pub scenarios: Vec<Scenario>,
    pub evidence_mass: f64,
}

impl ScenarioSet {
    pub fn value(&self, scenario: &Scenario, var: VarId) -> Option<bool> {
        self.variables
            .iter()
            .position(|&v| v == var)
            .map(|i| scenario.values[i])
            .or_else(|| self.evidence.get(var))
    }

    fn target_value(&self, scenario: &Scenario) -> bool {
        self.value(scenario, self.target).unwrap_or(false)
    }

    /// Scenario values plus the evidence, as one partial assignment.
    pub fn known(&self, scenario: &Scenario) -> Evidence {
        let mut known = self.evidence.clone();
        for (&v, &x) in self.variables.iter().zip(&scenario.values) {
            known.insert(v, x);
        }
        known
    }

    /// Total probability of the scenarios agreeing with the target.
    pub fn compatible_total(&self) -> f64 {
        self.scenarios
            .iter()
            .filter(|s| self.target_value(s))
            .map(|s| s.probability)
            .sum()
    }
}

/// Enumerates the scenarios over the variables relevant to `target`.
///
/// Weights multiply the conditionals of the relevant variables and of every
/// observed variable whose parents are all relevant or observed; the other
/// observations contribute a factor common to all scenarios.
pub fn enumerate_scenarios(
    net: &BeliefNetwork,
    evidence: &Evidence,
    target: VarId,
) -> Result<ScenarioSet, ScenarioError> {
    net.check(target).map_err(InferenceError::from)?;
    if evidence.contains(target) {
        return Err(ScenarioError::TargetObserved(net.name(target).to_string()));
    }
    infer::check_evidence(net, evidence)?;
    let relevant = infer::relevant_variables(net, target, evidence);
    if relevant.len() > MAX_ENUMERATED {
        return Err(InferenceError::TooLarge { free: relevant.len() }.into());
    }
    let mut in_scope = vec![false; net.len()];
    for v in relevant.iter().copied().chain(evidence.vars()) {
        in_scope[v.index()] = true;
    }
    let factors: Vec<VarId> = relevant
        .iter()
        .copied()
        .chain(
            evidence
                .vars()
                .into_iter()
                .filter(|&e| net.parents(e).iter().all(|p| in_scope[p.index()])),
        )
        .collect();
    let variables = net.story_order(&relevant);
    let fixed = evidence.mask();
    let mut scenarios = Vec::with_capacity(1 << variables.len());
    for k in 0u64..1 << variables.len() {
        let mut mask = fixed;
        let mut values = Vec::with_capacity(variables.len());
        for (bit, v) in variables.iter().enumerate() {
            let x = k >> (variables.len() - 1 - bit) & 1 == 1;
            values.push(x);
            mask |= (x as u64) << v.index();
        }
        let raw_weight = factors.iter().map(|&f| net.local_probability(f, mask)).product();
        scenarios.push(Scenario {
            values,
            raw_weight,
            probability: 0.0,
        });
    }
    let mass: f64 = scenarios.iter().map(|s| s.raw_weight).sum();
    if !(mass > 0.0) {
        return Err(InferenceError::ImpossibleEvidence(infer::Conflict { readings: vec![] }).into());
    }
    for s in &mut scenarios {
        s.probability = s.raw_weight / mass;
    }
    Ok(ScenarioSet {
        target,
        variables,
        evidence: evidence.clone(),
        scenarios,
        evidence_mass: mass,
    })
}

/// One side of the target: the listed scenarios and the pooled rest.
#[derive(Debug, Clone, PartialEq)]
pub struct SideList {
    pub value: bool,
    /// Indices into [`ScenarioSet::scenarios`], most probable first.
    pub listed: Vec<usize>,
    pub residual: f64,
    /// Positive-probability scenarios pooled into `residual`.
    pub residual_count: usize,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioPartition {
    pub compatible: SideList,
    pub incompatible: SideList,
    pub compatible_total: f64,
    /// Tags of listed scenarios, parallel to compatible then incompatible `listed`.
    pub tags: Vec<(usize, String)>,
}

impl ScenarioPartition {
    pub fn tag(&self, index: usize) -> Option<&str> {
        self.tags
            .iter()
            .find(|(i, _)| *i == index)
            .map(|(_, t)| t.as_str())
    }
}

fn side(set: &ScenarioSet, value: bool, threshold: f64, cap: f64) -> SideList {
    let mut members: Vec<usize> = (0..set.scenarios.len())
        .filter(|&i| set.target_value(&set.scenarios[i]) == value && set.scenarios[i].probability > 0.0)
        .collect();
    members.sort_by(|&a, &b| {
        set.scenarios[b]
            .probability
            .total_cmp(&set.scenarios[a].probability)
            .then(a.cmp(&b))
    });
    let p = |i: usize| set.scenarios[i].probability;
    let total: f64 = members.iter().map(|&i| p(i)).sum();
    let mut n = members.iter().take_while(|&&i| p(i) > threshold * total).count();
    let rest = |n: usize| members[n..].iter().map(|&i| p(i)).sum::<f64>();
    while n < members.len() && rest(n) > cap * total {
        n += 1;
    }
    SideList {
        value,
        residual: rest(n),
        residual_count: members.len() - n,
        listed: members[..n].to_vec(),
        total,
    }
}

/// A, B, ..., Z, AA, AB, ...
fn letter_tag(mut n: usize) -> String {
    let mut s = Vec::new();
    loop {
        s.push(b'A' + (n % 26) as u8);
        if n < 26 {
            break;
        }
        n = n / 26 - 1;
    }
    s.reverse();
    String::from_utf8(s).expect("ascii")
}

/// Splits scenarios by the target's value and picks which to list.
pub fn prune_and_partition(set: &ScenarioSet, list_threshold: f64, residual_cap: f64) -> ScenarioPartition {
    let compatible = side(set, true, list_threshold, residual_cap);
    let incompatible = side(set, false, list_threshold, residual_cap);
    let tags = compatible
        .listed
        .iter()
        .chain(&incompatible.listed)
        .enumerate()
        .map(|(n, &i)| (i, letter_tag(n)))
        .collect();
    ScenarioPartition {
        compatible_total: compatible.total,
        compatible,
        incompatible,
        tags,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    /// Scenario variables only, as in the scenario lists.
    Listing,
    /// Evidence interleaved, told as a causal story.
    Story,
}

/// `P(var = value)` given the values in `known`: read from the model when
/// every parent is known, otherwise inferred.
fn event_probability(net: &BeliefNetwork, known: &Evidence, var: VarId, value: bool) -> f64 {
    let parents = net.parents(var);
    let values: Option<Vec<bool>> = parents.iter().map(|&p| known.get(p)).collect();
    match values {
        Some(values) => net
            .conditional_probability(var, value, &values)
            .expect("parent count matches"),
        None => {
            let mut given = Evidence::new();
            for &p in parents {
                if let Some(x) = known.get(p) {
                    given.insert(p, x);
                }
            }
            match infer::posterior(net, &given, var) {
                Ok(p) if value => p.probability,
                Ok(p) => 1.0 - p.probability,
                Err(_) => 0.0,
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Link {
    First,
    And,
    Hence,
    But,
    Causes(VarId),
    Clause,
}

/// Renders a scenario as a sentence of events joined by causal conjunctions.
pub fn render_scenario_label(
    net: &BeliefNetwork,
    set: &ScenarioSet,
    scenario: &Scenario,
    but_threshold: f64,
    mode: LabelMode,
) -> String {
    let known = set.known(scenario);
    let events: Vec<VarId> = match mode {
        LabelMode::Listing => set.variables.clone(),
        LabelMode::Story => {
            let mut all = set.variables.clone();
            all.extend(set.evidence.vars());
            net.story_order(&all)
        }
    };
    let story = mode == LabelMode::Story;
    let mut out = String::new();
    let mut rendered: Vec<VarId> = Vec::new();
    let mut previous = Link::First;
    for &v in &events {
        let value = known.get(v).unwrap_or(false);
        let reading = net.variable(v).reading(value);
        let q = event_probability(net, &known, v, value);
        let has_parent = !net.parents(v).is_empty();
        let last = rendered.last().copied();
        let true_cause = |p: &VarId| {
            rendered.contains(p) && known.get(*p) == Some(true) && net.is_causal_arc(*p, v)
        };
        let link = if rendered.is_empty() {
            Link::First
        } else if has_parent && q >= CERTAIN {
            Link::Hence
        } else if has_parent && q <= but_threshold {
            Link::But
        } else if value && last.is_some_and(|l| true_cause(&l)) {
            Link::Causes(last.unwrap())
        } else if value && story && matches!(previous, Link::Causes(c) if true_cause(&c)) {
            // a second effect of the same cause: "dog causes barking and paw marks"
            Link::And
        } else if story && value && net.parents(v).iter().any(true_cause) {
            Link::Causes(*net.parents(v).iter().find(|p| true_cause(p)).unwrap())
        } else if story && !has_parent {
            Link::Clause
        } else {
            Link::And
        };
        match link {
            Link::First => {
                out += &match mode {
                    LabelMode::Listing if value => title_case(&reading),
                    LabelMode::Listing => match &net.variable(v).negated_label {
                        Some(neg) => capitalize(neg),
                        None => format!("No {}", title_case(net.label(v))),
                    },
                    LabelMode::Story => capitalize(&reading),
                }
            }
            Link::And => out += &format!(" and {reading}"),
            Link::Hence if story => out += &format!(", hence {reading}"),
            Link::Hence => out += &format!(" hence {reading}"),
            Link::But if story => out += &format!(", but {reading}"),
            Link::But => out += &format!(" but {reading}"),
            Link::Causes(c) if !story => {
                debug_assert_eq!(Some(c), last);
                out += &format!(" causing {reading}")
            }
            Link::Causes(c) if Some(c) == last => {
                if matches!(previous, Link::Causes(_)) {
                    out += &format!(", which causes {reading}")
                } else {
                    out += &format!(" causes {reading}")
                }
            }
            Link::Causes(c) => out += &format!("; {} causes {reading}", net.label(c)),
            Link::Clause => out += &format!("; {reading}"),
        }
        rendered.push(v);
        previous = link;
    }
    if story {
        out.push('.');
    }
    out
}

/// One event whose probability differs markedly between two scenarios.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contrast {
    pub variable: String,
    pub left_reading: String,
    pub right_reading: String,
    pub left_probability: f64,
    pub right_probability: f64,
    pub phrase: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub left: String,
    pub right: String,
    pub left_probability: f64,
    pub right_probability: f64,
    pub relation_phrase: String,
    /// Contrasts favouring the more probable scenario.
    pub because: Vec<Contrast>,
    /// Contrasts favouring the less probable one.
    pub although: Vec<Contrast>,
}

/// Contrasts the events of two scenarios over the same variables.
#[allow(clippy::too_many_arguments)]
pub fn compare_scenarios(
    net: &BeliefNetwork,
    set: &ScenarioSet,
    left: (&str, &Scenario),
    right: (&str, &Scenario),
    contrast_factor: f64,
    relative: &crate::phrase::RelativeScale,
) -> Result<Comparison, ScenarioError> {
    let (lt, ls) = left;
    let (rt, rs) = right;
    if ls.values.len() != set.variables.len() || rs.values.len() != set.variables.len() {
        return Err(ScenarioError::Mismatch);
    }
    let (lk, rk) = (set.known(ls), set.known(rs));
    let left_wins = ls.probability >= rs.probability;
    let mut because = Vec::new();
    let mut although = Vec::new();
    for (i, &v) in set.variables.iter().enumerate() {
        let (lv, rv) = (ls.values[i], rs.values[i]);
        if lv == rv {
            continue;
        }
        let pl = event_probability(net, &lk, v, lv);
        let pr = event_probability(net, &rk, v, rv);
        if pl >= CERTAIN || pr >= CERTAIN {
            continue;
        }
        let (hi, lo) = if pl >= pr { (pl, pr) } else { (pr, pl) };
        if !(hi > contrast_factor * lo) {
            continue;
        }
        let contrast = Contrast {
            variable: net.name(v).to_string(),
            left_reading: net.variable(v).reading(lv),
            right_reading: net.variable(v).reading(rv),
            left_probability: pl,
            right_probability: pr,
            phrase: relative.phrase(pl, pr),
        };
        if (pl > pr) == left_wins {
            because.push(contrast);
        } else {
            although.push(contrast);
        }
    }
    Ok(Comparison {
        left: lt.to_string(),
        right: rt.to_string(),
        left_probability: ls.probability,
        right_probability: rs.probability,
        relation_phrase: relative.phrase(ls.probability, rs.probability),
        because,
        although,
    })
}

fn pair(a: f64, b: f64, numbers: bool) -> String {
    if numbers {
        format!(" ({}/{})", fixed2(a), fixed2(b))
    } else {
        String::new()
    }
}

impl Comparison {
    pub fn render(&self, show_numbers: bool) -> String {
        let contrast = |c: &Contrast| {
            format!(
                "{} in {} is {} {} in {}{}",
                c.left_reading,
                self.left,
                c.phrase,
                c.right_reading,
                self.right,
                pair(c.left_probability, c.right_probability, show_numbers)
            )
        };
        let list = |cs: &[Contrast]| cs.iter().map(contrast).collect::<Vec<_>>().join(" and ");
        let mut s = format!(
            "Scenario {} is {} scenario {}{}",
            self.left,
            self.relation_phrase,
            self.right,
            pair(self.left_probability, self.right_probability, show_numbers)
        );
        if !self.because.is_empty() {
            s += &format!(" because {}", list(&self.because));
        }
        if !self.although.is_empty() {
            s += &format!(", although {}", list(&self.although));
        }
        s.push('.');
        s
    }
}

/// The "Given:" sentences, one per observation in topological order.
pub fn render_given(net: &BeliefNetwork, evidence: &Evidence) -> Vec<String> {
    net.topological_order()
        .iter()
        .filter_map(|&v| evidence.get(v).map(|x| (v, x)))
        .map(|(v, x)| {
            let subject = title_case(net.label(v));
            if !x {
                let reading = net.variable(v).reading(false);
                return format!("{} is observed.", capitalize(&reading));
            }
            match net.model(v) {
                crate::network::ConditionalModel::NoisyOr { causes, leak } if !causes.is_empty() => {
                    let mut names: Vec<String> = net
                        .parents(v)
                        .iter()
                        .map(|&p| net.label(p).to_string())
                        .collect();
                    if *leak > 0.0 {
                        names.push("another unknown cause".to_string());
                        format!("{subject} could have been caused by {}.", names.join(" or "))
                    } else {
                        format!("{subject} must have been caused by {}.", names.join(" or "))
                    }
                }
                _ => format!("{subject} is observed."),
            }
        })
        .collect()
}

/// Explanation parameters: scenario knobs plus phrasing.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExplainParams {
    #[serde(flatten)]
    pub scenario: ScenarioParams,
    #[serde(flatten)]
    pub phrase: PhraseOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reading {
    pub variable: String,
    pub value: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioEntry {
    pub tag: String,
    pub label: String,
    pub probability: f64,
    pub assignment: Vec<Reading>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioBlock {
    pub compatible: bool,
    pub heading: String,
    pub entries: Vec<ScenarioEntry>,
    /// Pooled probability of unlisted scenarios, if there are any.
    pub other: Option<f64>,
    /// Present when several scenarios are listed: the caption and the sum of
    /// the displayed two-decimal entries, so the column adds up as printed.
    pub total: Option<TotalLine>,
    /// Exact probability of this side.
    pub side_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TotalLine {
    pub caption: String,
    pub display: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conclusion {
    pub target: String,
    pub probability: f64,
    pub phrase: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExplanationDocument {
    pub target: String,
    pub target_label: String,
    pub given: Vec<String>,
    pub compatible: ScenarioBlock,
    pub incompatible: ScenarioBlock,
    pub comparisons: Vec<Comparison>,
    pub conclusion: Conclusion,
    pub show_numbers: bool,
}

const OTHER: &str = "Other less probable scenario(s)";

impl ScenarioBlock {
    fn render(&self, out: &mut Vec<String>, rule: bool) {
        out.push(self.heading.clone());
        let mut lines: Vec<String> = self
            .entries
            .iter()
            .map(|e| format!("{}. {}\t{}", e.tag, e.label, fixed2(e.probability)))
            .collect();
        if let Some(other) = self.other {
            lines.push(format!("{OTHER}\t{}", fixed2(other)));
        }
        if lines.is_empty() {
            lines.push("(none)".to_string());
        }
        if rule {
            let width = lines
                .iter()
                .map(|l| l.split('\t').next().unwrap_or("").chars().count())
                .max()
                .unwrap_or(0);
            lines.push(format!("{}\t------", "-".repeat(width)));
        }
        out.push(lines.join("\n"));
        if let Some(t) = &self.total {
            out.push(format!("{}\t{}", t.caption, t.display));
        }
    }
}

impl ExplanationDocument {
    /// Plain text: paragraphs separated by blank lines, list columns by tabs.
    pub fn render(&self) -> String {
        let mut paras = Vec::new();
        if !self.given.is_empty() {
            paras.push("Given:".to_string());
            paras.extend(self.given.iter().cloned());
        }
        self.compatible.render(&mut paras, false);
        self.incompatible.render(&mut paras, true);
        for c in &self.comparisons {
            paras.push(c.render(self.show_numbers));
        }
        let number = if self.show_numbers {
            format!(" (p={})", fixed2(self.conclusion.probability))
        } else {
            String::new()
        };
        paras.push(format!(
            "Therefore {} is {}{number}.",
            self.target_label, self.conclusion.phrase
        ));
        let mut s = paras.join("\n\n");
        s.push('\n');
        s
    }
}

fn block(
    net: &BeliefNetwork,
    set: &ScenarioSet,
    partition: &ScenarioPartition,
    side: &SideList,
    but_threshold: f64,
) -> ScenarioBlock {
    let target = net.variable(set.target);
    let entries: Vec<ScenarioEntry> = side
        .listed
        .iter()
        .map(|&i| {
            let s = &set.scenarios[i];
            ScenarioEntry {
                tag: partition.tag(i).unwrap_or_default().to_string(),
                label: render_scenario_label(net, set, s, but_threshold, LabelMode::Listing),
                probability: s.probability,
                assignment: set
                    .variables
                    .iter()
                    .zip(&s.values)
                    .map(|(&v, &x)| Reading {
                        variable: net.name(v).to_string(),
                        value: x,
                    })
                    .collect(),
            }
        })
        .collect();
    let other = (side.residual_count > 0).then_some(side.residual);
    let total = (entries.len() > 1).then(|| {
        let sum: i64 = entries
            .iter()
            .map(|e| hundredths(e.probability))
            .chain(other.map(hundredths))
            .sum();
        TotalLine {
            caption: format!("Total probability of {}", target.reading(side.value)),
            display: fmt_hundredths(sum),
        }
    });
    let relation = if side.value { "compatible" } else { "incompatible" };
    ScenarioBlock {
        compatible: side.value,
        heading: format!(
            "The following scenario(s) are {relation} with {}:",
            target.label
        ),
        entries,
        other,
        total,
        side_probability: side.total,
    }
}

/// Builds the full "why" explanation of `target` under `evidence`.
pub fn explain_why(
    net: &BeliefNetwork,
    evidence: &Evidence,
    target: VarId,
    params: &ExplainParams,
    scales: &ScaleRegistry,
) -> Result<ExplanationDocument, ScenarioError> {
    params.scenario.validate()?;
    params.phrase.validate(scales)?;
    let relative = params.phrase.relative(scales)?;
    let absolute = params.phrase.absolute_for(scales, net.name(target))?;
    let set = enumerate_scenarios(net, evidence, target)?;
    let sp = &params.scenario;
    let partition = prune_and_partition(&set, sp.list_threshold, sp.residual_cap);

    let compatible = block(net, &set, &partition, &partition.compatible, sp.but_threshold);
    let incompatible = block(net, &set, &partition, &partition.incompatible, sp.but_threshold);

    let listed: Vec<usize> = partition
        .compatible
        .listed
        .iter()
        .chain(&partition.incompatible.listed)
        .copied()
        .collect();
    let mut comparisons = Vec::new();
    if let Some((&anchor, others)) = listed.split_first() {
        let tag = |i: usize| partition.tag(i).unwrap_or_default().to_string();
        for &other in others {
            comparisons.push(compare_scenarios(
                net,
                &set,
                (&tag(anchor), &set.scenarios[anchor]),
                (&tag(other), &set.scenarios[other]),
                sp.contrast_factor,
                relative,
            )?);
        }
    }

    let p = partition.compatible_total;
    Ok(ExplanationDocument {
        target: net.name(target).to_string(),
        target_label: net.label(target).to_string(),
        given: render_given(net, evidence),
        compatible,
        incompatible,
        comparisons,
        conclusion: Conclusion {
            target: net.name(target).to_string(),
            probability: p,
            phrase: absolute.phrase(p, PhraseStyle::Adjective).to_string(),
        },
        show_numbers: params.phrase.show_numbers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(ev: &[(&str, bool)]) -> (BeliefNetwork, Evidence, VarId) {
        let net = BeliefNetwork::sneeze();
        let e = Evidence::from_names(&net, ev).unwrap();
        let cold = net.id("cold").unwrap();
        (net, e, cold)
    }

    fn find<'a>(net: &BeliefNetwork, set: &'a ScenarioSet, vals: &[(&str, bool)]) -> &'a Scenario {
        set.scenarios
            .iter()
            .find(|s| vals.iter().all(|(n, x)| set.value(s, net.id(n).unwrap()) == Some(*x)))
            .unwrap()
    }

    #[test]
    fn enumeration_matches_hand_values() {
        let (net, ev, cold) = setup(&[("sneezing", true)]);
        let set = enumerate_scenarios(&net, &ev, cold).unwrap();
        assert_eq!(set.scenarios.len(), 8);
        let p = |v: &[(&str, bool)]| find(&net, &set, v).probability;
        assert!((p(&[("cold", true), ("cat", false), ("allergy", false)]) - 0.4668).abs() < 5e-5);
        assert!((p(&[("cold", false), ("cat", true), ("allergy", true)]) - 0.4772).abs() < 5e-5);
        assert!((p(&[("cold", true), ("cat", true), ("allergy", true)]) - 0.0456).abs() < 5e-5);
        assert!((p(&[("cold", true), ("cat", true), ("allergy", false)]) - 0.0104).abs() < 5e-5);
        let post = infer::posterior(&net, &ev, cold).unwrap().probability;
        assert!((set.compatible_total() - post).abs() < 1e-12);

        let (net, ev, cold) = setup(&[]);
        let set = enumerate_scenarios(&net, &ev, cold).unwrap();
        let probs: Vec<f64> = set.scenarios.iter().map(|s| s.probability).collect();
        assert_eq!(probs, [0.92, 0.08]);
    }

    #[test]
    fn partition_of_second_transcript() {
        let (net, ev, cold) = setup(&[("sneezing", true), ("paw_marks", true), ("barking", true)]);
        let set = enumerate_scenarios(&net, &ev, cold).unwrap();
        let part = prune_and_partition(&set, 0.10, 0.15);
        assert_eq!(part.compatible.listed.len(), 2);
        assert_eq!(part.incompatible.listed.len(), 1);
        assert_eq!(part.compatible.residual_count, 1);
        assert_eq!(part.incompatible.residual_count, 0);
        let tags: Vec<&str> = part.tags.iter().map(|(_, t)| t.as_str()).collect();
        assert_eq!(tags, ["A", "B", "C"]);
        for side in [&part.compatible, &part.incompatible] {
            let listed: f64 = side.listed.iter().map(|&i| set.scenarios[i].probability).sum();
            assert!((listed + side.residual - side.total).abs() < 1e-12);
        }
    }

    #[test]
    fn tags() {
        assert_eq!(letter_tag(0), "A");
        assert_eq!(letter_tag(25), "Z");
        assert_eq!(letter_tag(26), "AA");
        assert_eq!(letter_tag(27), "AB");
    }

    #[test]
    fn story_labels() {
        let (net, ev, cold) = setup(&[("sneezing", true)]);
        let set = enumerate_scenarios(&net, &ev, cold).unwrap();
        let s = find(&net, &set, &[("cold", false), ("cat", true), ("allergy", true)]);
        assert_eq!(
            render_scenario_label(&net, &set, s, 0.25, LabelMode::Story),
            "No cold; cat causes allergy, which causes sneezing."
        );
        assert_eq!(
            render_scenario_label(&net, &set, s, 0.25, LabelMode::Listing),
            "No Cold and cat causing allergy"
        );

        let (net, ev, cold) = setup(&[("sneezing", false)]);
        let set = enumerate_scenarios(&net, &ev, cold).unwrap();
        let s = find(&net, &set, &[("cold", false), ("cat", true), ("allergy", false)]);
        assert_eq!(
            render_scenario_label(&net, &set, s, 0.25, LabelMode::Story),
            "No cold; cat, but no allergy, hence no sneezing."
        );
    }

    #[test]
    fn given_sentences() {
        let (net, ev, _) = setup(&[("sneezing", true), ("paw_marks", true), ("barking", true), ("cold", true)]);
        assert_eq!(
            render_given(&net, &ev),
            [
                "Cold is observed.",
                "Sneezing must have been caused by cold or allergy.",
                "Paw Marks could have been caused by cat or dog or another unknown cause.",
                "Barking must have been caused by dog.",
            ]
        );
        let (net, ev, _) = setup(&[("cat", false)]);
        assert_eq!(render_given(&net, &ev), ["No cat is observed."]);
    }

    #[test]
    fn identical_scenarios_have_no_contrasts() {
        let (net, ev, cold) = setup(&[("sneezing", true)]);
        let set = enumerate_scenarios(&net, &ev, cold).unwrap();
        let s = &set.scenarios[3];
        let rel = crate::phrase::default_relative();
        let c = compare_scenarios(&net, &set, ("A", s), ("B", s), 1.2, &rel).unwrap();
        assert_eq!(c.relation_phrase, "about as likely as");
        assert!(c.because.is_empty() && c.although.is_empty());
    }

    #[test]
    fn observed_target_is_rejected() {
        let (net, ev, cold) = setup(&[("cold", true)]);
        assert!(matches!(
            enumerate_scenarios(&net, &ev, cold),
            Err(ScenarioError::TargetObserved(_))
        ));
    }
}
