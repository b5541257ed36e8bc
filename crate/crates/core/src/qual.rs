//! Qualitative influence signs and their propagation along polytree paths.

use std::collections::VecDeque;
use std::fmt;
use std::ops::Mul;

use serde::Serialize;
use thiserror::Error;

use crate::infer::{self, Evidence, InferenceError};
use crate::network::{row_bits, BeliefNetwork, VarId};

/// Differences smaller than this count as equality.
pub const SIGN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QualError {
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error("qualitative propagation needs a singly connected network")]
    NotPolytree,
    #[error("`{parent}` is not a parent of `{child}`")]
    NotParent { parent: String, child: String },
    #[error("finding and target are both `{0}`")]
    SameVariable(String),
    #[error("`{0}` is already observed")]
    AlreadyObserved(String),
    #[error("unsupported case: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
    Zero,
    Ambiguous,
}

impl Mul for Sign {
    type Output = Sign;

    fn mul(self, rhs: Sign) -> Sign {
        use Sign::*;
        match (self, rhs) {
            (Zero, _) | (_, Zero) => Zero,
            (Ambiguous, _) | (_, Ambiguous) => Ambiguous,
            (Plus, s) | (s, Plus) => s,
            (Minus, Minus) => Plus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
            Sign::Zero => "0",
            Sign::Ambiguous => "?",
        })
    }
}

impl Sign {
    /// Sign of a single difference.
    pub fn of(d: f64) -> Sign {
        if d > SIGN_TOLERANCE {
            Sign::Plus
        } else if d < -SIGN_TOLERANCE {
            Sign::Minus
        } else {
            Sign::Zero
        }
    }

    /// Uniform sign of a set of differences: plus if none is negative and
    /// some is positive, zero if all vanish, ambiguous on mixed signs.
    pub fn uniform(diffs: impl IntoIterator<Item = f64>) -> Sign {
        let (mut pos, mut neg) = (false, false);
        for d in diffs {
            match Sign::of(d) {
                Sign::Plus => pos = true,
                Sign::Minus => neg = true,
                _ => {}
            }
        }
        match (pos, neg) {
            (true, true) => Sign::Ambiguous,
            (true, false) => Sign::Plus,
            (false, true) => Sign::Minus,
            (false, false) => Sign::Zero,
        }
    }
}

fn position(net: &BeliefNetwork, parent: VarId, child: VarId) -> Result<usize, QualError> {
    net.parents(child)
        .iter()
        .position(|&p| p == parent)
        .ok_or_else(|| QualError::NotParent {
            parent: net.name(parent).to_string(),
            child: net.name(child).to_string(),
        })
}

/// `P(child | parents)` with the parents at `fixed` positions set and the
/// rest read from `rest` in order.
fn p_child(net: &BeliefNetwork, child: VarId, fixed: &[(usize, bool)], rest: &mut dyn Iterator<Item = bool>) -> f64 {
    let k = net.parents(child).len();
    let mut values = Vec::with_capacity(k);
    for i in 0..k {
        match fixed.iter().find(|(pos, _)| *pos == i) {
            Some(&(_, v)) => values.push(v),
            None => values.push(rest.next().unwrap_or(false)),
        }
    }
    net.conditional_probability(child, true, &values)
        .expect("parent count matches by construction")
}

/// Calls `f` once per assignment of the child's parents other than `fixed`.
fn over_contexts(
    net: &BeliefNetwork,
    child: VarId,
    fixed_positions: &[usize],
    mut f: impl FnMut(&dyn Fn(&[(usize, bool)]) -> f64) -> f64,
) -> Vec<f64> {
    let others = net.parents(child).len() - fixed_positions.len();
    (0..1usize << others)
        .map(|row| {
            let eval = |fixed: &[(usize, bool)]| p_child(net, child, fixed, &mut row_bits(row, others));
            f(&eval)
        })
        .collect()
}

/// Sign of the influence of `parent` on `child`, uniformly over the child's
/// other parents.
pub fn arc_sign(net: &BeliefNetwork, parent: VarId, child: VarId) -> Result<Sign, QualError> {
    let a = position(net, parent, child)?;
    let diffs = over_contexts(net, child, &[a], |p| p(&[(a, true)]) - p(&[(a, false)]));
    Ok(Sign::uniform(diffs))
}

fn synergy_positions(
    net: &BeliefNetwork,
    a: VarId,
    b: VarId,
    collider: VarId,
) -> Result<(usize, usize), QualError> {
    let pa = position(net, a, collider)?;
    let pb = position(net, b, collider)?;
    if pa == pb {
        return Err(QualError::SameVariable(net.name(a).to_string()));
    }
    Ok((pa, pb))
}

/// Sign of `P(c|ab x)P(c|¬a¬b x) − P(c|a¬b x)P(c|¬ab x)` over all contexts `x`.
pub fn product_synergy_sign(
    net: &BeliefNetwork,
    a: VarId,
    b: VarId,
    collider: VarId,
) -> Result<Sign, QualError> {
    let (pa, pb) = synergy_positions(net, a, b, collider)?;
    let diffs = over_contexts(net, collider, &[pa, pb], |p| {
        p(&[(pa, true), (pb, true)]) * p(&[(pa, false), (pb, false)])
            - p(&[(pa, true), (pb, false)]) * p(&[(pa, false), (pb, true)])
    });
    Ok(Sign::uniform(diffs))
}

/// Sign of `P(c|ab x) + P(c|¬a¬b x) − P(c|a¬b x) − P(c|¬ab x)` over all contexts `x`.
pub fn additive_synergy_sign(
    net: &BeliefNetwork,
    a: VarId,
    b: VarId,
    collider: VarId,
) -> Result<Sign, QualError> {
    let (pa, pb) = synergy_positions(net, a, b, collider)?;
    let diffs = over_contexts(net, collider, &[pa, pb], |p| {
        p(&[(pa, true), (pb, true)]) + p(&[(pa, false), (pb, false)])
            - p(&[(pa, true), (pb, false)])
            - p(&[(pa, false), (pb, true)])
    });
    Ok(Sign::uniform(diffs))
}

/// Sign of the influence induced between two causes once their common
/// effect is observed. Only an effect observed true is characterised.
pub fn intercausal_sign(
    net: &BeliefNetwork,
    a: VarId,
    b: VarId,
    collider: VarId,
    observed: bool,
) -> Result<Sign, QualError> {
    if !observed {
        return Err(QualError::Unsupported(format!(
            "intercausal influence through {} observed false",
            net.label(collider)
        )));
    }
    product_synergy_sign(net, a, b, collider)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Predictive,
    Diagnostic,
    Intercausal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStep {
    pub kind: StepKind,
    pub from: String,
    pub to: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub via: Option<String>,
    pub step_sign: Sign,
    pub cumulative_sign: Sign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockReason {
    /// A collider on the path with no evidence at or below it.
    UnobservedCollider,
    /// An observed (or already certain) variable in a chain or fork.
    ObservedIntermediate,
    /// The finding is already certain given the evidence.
    FindingDetermined,
    /// The target is observed or already certain.
    TargetDetermined,
    /// No path joins finding and target.
    Disconnected,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Blocked {
    pub reason: BlockReason,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub at: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualitativeResult {
    pub finding: String,
    pub target: String,
    /// Earlier observations as (name, value), in topological order.
    pub context: Vec<(String, bool)>,
    pub overall_sign: Sign,
    pub steps: Vec<TraceStep>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocked: Option<Blocked>,
}

/// The unique skeleton path from `a` to `b`, if any.
fn skeleton_path(net: &BeliefNetwork, a: VarId, b: VarId) -> Option<Vec<VarId>> {
    let mut prev: Vec<Option<VarId>> = vec![None; net.len()];
    let mut seen = vec![false; net.len()];
    seen[a.index()] = true;
    let mut queue = VecDeque::from([a]);
    while let Some(u) = queue.pop_front() {
        if u == b {
            let mut path = vec![b];
            let mut cur = b;
            while let Some(p) = prev[cur.index()] {
                path.push(p);
                cur = p;
            }
            path.reverse();
            return Some(path);
        }
        for &w in net.parents(u).iter().chain(net.children(u)) {
            if !std::mem::replace(&mut seen[w.index()], true) {
                prev[w.index()] = Some(u);
                queue.push_back(w);
            }
        }
    }
    None
}

/// Truth value of `v` if observed or certain given the evidence.
fn settled(evidence: &Evidence, marginals: &[f64], v: VarId) -> Option<bool> {
    evidence.get(v).or(match marginals[v.index()] {
        p if p == 1.0 => Some(true),
        p if p == 0.0 => Some(false),
        _ => None,
    })
}

/// Traces the qualitative impact of observing `finding` true on `target`.
///
/// Earlier evidence only decides which paths are open: a collider must be
/// observed true to pass influence on, and an observed chain or fork
/// variable blocks. Variables made certain by the evidence count as
/// observed.
pub fn propagate_sign(
    net: &BeliefNetwork,
    evidence: &Evidence,
    finding: VarId,
    target: VarId,
) -> Result<QualitativeResult, QualError> {
    net.check(finding).map_err(InferenceError::from)?;
    net.check(target).map_err(InferenceError::from)?;
    if !net.is_polytree() {
        return Err(QualError::NotPolytree);
    }
    if finding == target {
        return Err(QualError::SameVariable(net.name(finding).to_string()));
    }
    if evidence.contains(finding) {
        return Err(QualError::AlreadyObserved(net.name(finding).to_string()));
    }
    let marginals = infer::marginals(net, evidence)?;
    let mut result = QualitativeResult {
        finding: net.name(finding).to_string(),
        target: net.name(target).to_string(),
        context: net
            .topological_order()
            .iter()
            .filter_map(|&v| evidence.get(v).map(|x| (net.name(v).to_string(), x)))
            .collect(),
        overall_sign: Sign::Zero,
        steps: Vec::new(),
        blocked: None,
    };
    let block = |mut r: QualitativeResult, reason, at: Option<VarId>| {
        r.steps.clear();
        r.overall_sign = Sign::Zero;
        r.blocked = Some(Blocked {
            reason,
            at: at.map(|v| net.name(v).to_string()),
        });
        Ok(r)
    };

    if settled(evidence, &marginals, finding).is_some() {
        return block(result, BlockReason::FindingDetermined, Some(finding));
    }
    if settled(evidence, &marginals, target).is_some() {
        return block(result, BlockReason::TargetDetermined, Some(target));
    }
    let Some(path) = skeleton_path(net, finding, target) else {
        return block(result, BlockReason::Disconnected, None);
    };
    let forward = |i: usize| net.parents(path[i + 1]).contains(&path[i]);

    // Classify interior nodes before emitting any step.
    for i in 1..path.len() - 1 {
        let v = path[i];
        let collider = forward(i - 1) && !forward(i);
        let state = settled(evidence, &marginals, v);
        if collider {
            match state {
                Some(true) => {}
                Some(false) => {
                    return Err(QualError::Unsupported(format!(
                        "intercausal influence through {} observed false",
                        net.label(v)
                    )))
                }
                None => {
                    if net.descendants(v).iter().any(|d| evidence.contains(*d)) {
                        return Err(QualError::Unsupported(format!(
                            "{} has only indirect evidence",
                            net.label(v)
                        )));
                    }
                    return block(result, BlockReason::UnobservedCollider, Some(v));
                }
            }
        } else if state.is_some() {
            return block(result, BlockReason::ObservedIntermediate, Some(v));
        }
    }

    let mut cumulative = Sign::Plus;
    let mut i = 0;
    while i + 1 < path.len() {
        let (from, next) = (path[i], path[i + 1]);
        let is_collider = i + 2 < path.len() && forward(i) && !forward(i + 1);
        let (kind, to, via, sign) = if is_collider {
            let to = path[i + 2];
            let sign = intercausal_sign(net, from, to, next, true)?;
            (StepKind::Intercausal, to, Some(next), sign)
        } else if forward(i) {
            (StepKind::Predictive, next, None, arc_sign(net, from, next)?)
        } else {
            // Bayes reversal keeps the sign of the forward arc.
            (StepKind::Diagnostic, next, None, arc_sign(net, next, from)?)
        };
        cumulative = cumulative * sign;
        result.steps.push(TraceStep {
            kind,
            from: net.name(from).to_string(),
            to: net.name(to).to_string(),
            via: via.map(|c| net.name(c).to_string()),
            step_sign: sign,
            cumulative_sign: cumulative,
        });
        i += if via.is_some() { 2 } else { 1 };
    }
    result.overall_sign = cumulative;
    Ok(result)
}

fn verb(sign: Sign) -> &'static str {
    match sign {
        Sign::Plus => "increases",
        Sign::Minus => "reduces",
        Sign::Zero => "does not change",
        Sign::Ambiguous => "has an ambiguous effect on",
    }
}

fn changed(sign: Sign) -> &'static str {
    match sign {
        Sign::Plus => "Increased",
        Sign::Minus => "Reduced",
        Sign::Zero => "Unchanged",
        Sign::Ambiguous => "Changed",
    }
}

/// Numbered trace in the style "1. Observation of barking is evidence for dog."
pub fn render_trace(result: &QualitativeResult, net: &BeliefNetwork) -> String {
    let label = |name: &str| net.id(name).map(|v| net.label(v).to_string()).unwrap_or_else(|_| name.to_string());
    let mut out = String::new();
    if !result.context.is_empty() {
        let readings: Vec<String> = result
            .context
            .iter()
            .map(|(n, v)| net.id(n).map(|id| net.variable(id).reading(*v)).unwrap_or_else(|_| n.clone()))
            .collect();
        out += &format!("Observe {}.\n\n", crate::text::join_list(&readings, "and"));
    }
    let finding = label(&result.finding);
    let target = label(&result.target);
    out += &format!("Impact of {finding} on {target}?\n\n");

    if let Some(b) = &result.blocked {
        let at = b.at.as_deref().map(label).unwrap_or_default();
        let line = match b.reason {
            BlockReason::UnobservedCollider => {
                format!("Observation of {finding} has no influence on {target} because {at} is not observed.")
            }
            BlockReason::ObservedIntermediate => format!(
                "Observation of {finding} has no influence on {target} because {at} is already known."
            ),
            BlockReason::FindingDetermined => {
                format!("Observation of {finding} has no influence on {target} because {finding} is already certain.")
            }
            BlockReason::TargetDetermined => {
                format!("Observation of {finding} has no influence on {target} because {target} is already known.")
            }
            BlockReason::Disconnected => format!(
                "Observation of {finding} has no influence on {target} because they are not connected."
            ),
        };
        out += &line;
        out.push('\n');
        return out;
    }

    let mut incoming: Option<Sign> = None;
    for (n, step) in result.steps.iter().enumerate() {
        let from = label(&step.from);
        let to = label(&step.to);
        let subject = match incoming {
            None => format!("Observation of {from}"),
            Some(s) => format!("{} probability of {from}", changed(s)),
        };
        let sentence = match step.kind {
            StepKind::Diagnostic if incoming.is_none() => match step.step_sign {
                Sign::Plus => format!("{subject} is evidence for {to}."),
                Sign::Minus => format!("{subject} is evidence against {to}."),
                s => format!("{subject} {} probability of {to}.", verb(s)),
            },
            StepKind::Predictive | StepKind::Diagnostic => {
                format!("{subject} {} probability of {to}.", verb(step.cumulative_sign))
            }
            StepKind::Intercausal => {
                let via = label(step.via.as_deref().unwrap_or_default());
                let rising = incoming.unwrap_or(Sign::Plus);
                match (rising, step.step_sign) {
                    (Sign::Plus, Sign::Minus) => {
                        format!("{subject} helps explain {via}, and so weakens evidence for {to}.")
                    }
                    (Sign::Minus, Sign::Minus) => format!(
                        "{subject} reduces ability to explain {via}, and so increases probability of {to}."
                    ),
                    (Sign::Plus, Sign::Plus) | (Sign::Minus, Sign::Plus) => format!(
                        "{subject}, together with {via}, {} probability of {to}.",
                        verb(step.cumulative_sign)
                    ),
                    _ => format!(
                        "{subject}, through {via}, {} probability of {to}.",
                        verb(step.cumulative_sign)
                    ),
                }
            }
        };
        out += &format!("{}. {sentence}\n", n + 1);
        incoming = Some(step.cumulative_sign);
    }
    let summary = match result.overall_sign {
        Sign::Plus => "increases",
        Sign::Minus => "decreases",
        Sign::Zero => "does not change",
        Sign::Ambiguous => "has an ambiguous effect on",
    };
    out += &format!("\nIn summary, observation of {finding} {summary} probability of {target}.\n");
    out
}
