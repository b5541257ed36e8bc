//! Exact inference by enumerating the full joint distribution, plus the
//! graphical queries used to decide which variables an explanation needs.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::network::{BeliefNetwork, NetworkError, VarId};

/// Largest number of unobserved variables enumerated in one query.
pub const MAX_ENUMERATED: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InferenceError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("{0}")]
    ImpossibleEvidence(Conflict),
    #[error("assignment covers {found} of {expected} variables")]
    PartialAssignment { expected: usize, found: usize },
    #[error("{free} unobserved variables exceed the enumeration limit of {MAX_ENUMERATED}")]
    TooLarge { free: usize },
    #[error("`{0}` is given twice")]
    SameVariable(String),
}

/// Why a set of observations has probability zero. `readings` is the smallest
/// conflicting subset found, empty when none was isolated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conflict {
    pub readings: Vec<(String, bool)>,
}

impl fmt::Display for Conflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.readings.is_empty() {
            return write!(f, "impossible evidence: the observations have zero probability");
        }
        let parts: Vec<String> = self
            .readings
            .iter()
            .map(|(n, v)| format!("{n}={v}"))
            .collect();
        write!(
            f,
            "impossible evidence: {} cannot hold together",
            parts.join(", ")
        )
    }
}

/// Observed truth values.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Evidence {
    values: BTreeMap<VarId, bool>,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds evidence from exact variable names.
    pub fn from_names(net: &BeliefNetwork, pairs: &[(&str, bool)]) -> Result<Self, NetworkError> {
        let mut ev = Evidence::new();
        for &(name, value) in pairs {
            ev.insert(net.id(name)?, value);
        }
        Ok(ev)
    }

    pub fn insert(&mut self, var: VarId, value: bool) -> Option<bool> {
        self.values.insert(var, value)
    }

    pub fn remove(&mut self, var: VarId) -> Option<bool> {
        self.values.remove(&var)
    }

    pub fn get(&self, var: VarId) -> Option<bool> {
        self.values.get(&var).copied()
    }

    pub fn contains(&self, var: VarId) -> bool {
        self.values.contains_key(&var)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, bool)> + '_ {
        self.values.iter().map(|(&k, &v)| (k, v))
    }

    pub fn vars(&self) -> Vec<VarId> {
        self.values.keys().copied().collect()
    }

    pub fn with(&self, var: VarId, value: bool) -> Evidence {
        let mut ev = self.clone();
        ev.insert(var, value);
        ev
    }

    pub(crate) fn mask(&self) -> u64 {
        self.iter()
            .filter(|&(_, v)| v)
            .fold(0, |m, (k, _)| m | 1 << k.index())
    }

    fn validate(&self, net: &BeliefNetwork) -> Result<(), NetworkError> {
        for v in self.values.keys() {
            net.check(*v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Posterior {
    pub target: VarId,
    pub probability: f64,
    /// Joint probability of the evidence.
    pub evidence_probability: f64,
}

/// Product of every variable's conditional probability under a total assignment.
pub fn joint_probability(net: &BeliefNetwork, assignment: &[bool]) -> Result<f64, InferenceError> {
    if assignment.len() != net.len() {
        return Err(InferenceError::PartialAssignment {
            expected: net.len(),
            found: assignment.len(),
        });
    }
    let mask = assignment
        .iter()
        .enumerate()
        .fold(0u64, |m, (i, &v)| m | (v as u64) << i);
    Ok(joint_mask(net, mask))
}

pub(crate) fn joint_mask(net: &BeliefNetwork, mask: u64) -> f64 {
    net.ids().map(|v| net.local_probability(v, mask)).product()
}

/// Calls `f` with every total assignment consistent with `evidence`, in a
/// fixed order, together with its joint probability.
fn for_each_completion(
    net: &BeliefNetwork,
    evidence: &Evidence,
    mut f: impl FnMut(u64, f64),
) -> Result<(), InferenceError> {
    evidence.validate(net)?;
    let free: Vec<usize> = net
        .ids()
        .filter(|&v| !evidence.contains(v))
        .map(VarId::index)
        .collect();
    if free.len() > MAX_ENUMERATED {
        return Err(InferenceError::TooLarge { free: free.len() });
    }
    let fixed = evidence.mask();
    for k in 0u64..1 << free.len() {
        let mut mask = fixed;
        for (bit, &var) in free.iter().enumerate() {
            mask |= (k >> bit & 1) << var;
        }
        f(mask, joint_mask(net, mask));
    }
    Ok(())
}

/// Joint probability of the observations.
pub fn evidence_probability(net: &BeliefNetwork, evidence: &Evidence) -> Result<f64, InferenceError> {
    let mut total = 0.0;
    for_each_completion(net, evidence, |_, p| total += p)?;
    Ok(total)
}

/// Fails with a described conflict when the evidence has probability zero,
/// otherwise returns its probability.
pub fn check_evidence(net: &BeliefNetwork, evidence: &Evidence) -> Result<f64, InferenceError> {
    let mass = evidence_probability(net, evidence)?;
    if mass > 0.0 {
        Ok(mass)
    } else {
        Err(InferenceError::ImpossibleEvidence(find_conflict(net, evidence)))
    }
}

/// `P(target = true | evidence)` by summing the joint over all completions.
/// An observed target yields its observed value as 0 or 1.
pub fn posterior(
    net: &BeliefNetwork,
    evidence: &Evidence,
    target: VarId,
) -> Result<Posterior, InferenceError> {
    net.check(target)?;
    evidence.validate(net)?;
    if evidence.is_empty() && net.is_root(target) {
        // summing the joint would only add rounding noise to the stored prior
        return Ok(Posterior {
            target,
            probability: net.p_true_in(target, 0),
            evidence_probability: 1.0,
        });
    }
    let bit = target.index();
    let (mut yes, mut no) = (0.0, 0.0);
    for_each_completion(net, evidence, |mask, p| {
        if mask >> bit & 1 == 1 {
            yes += p
        } else {
            no += p
        }
    })?;
    let mass = yes + no;
    if mass <= 0.0 {
        return Err(InferenceError::ImpossibleEvidence(find_conflict(net, evidence)));
    }
    let probability = match evidence.get(target) {
        Some(v) => f64::from(u8::from(v)),
        None if no == 0.0 => 1.0,
        None => yes / mass,
    };
    Ok(Posterior {
        target,
        probability,
        evidence_probability: mass,
    })
}

/// `P(v = true | evidence)` for every variable, from one enumeration pass.
pub fn marginals(net: &BeliefNetwork, evidence: &Evidence) -> Result<Vec<f64>, InferenceError> {
    let mut yes = vec![0.0; net.len()];
    let mut mass = 0.0;
    for_each_completion(net, evidence, |mask, p| {
        mass += p;
        for (i, y) in yes.iter_mut().enumerate() {
            if mask >> i & 1 == 1 {
                *y += p;
            }
        }
    })?;
    if mass <= 0.0 {
        return Err(InferenceError::ImpossibleEvidence(find_conflict(net, evidence)));
    }
    Ok(yes
        .into_iter()
        .map(|y| if y == mass { 1.0 } else { y / mass })
        .collect())
}

/// Looks for a small zero-probability subset of the evidence, trying each
/// observed variable together with its observed parents.
fn find_conflict(net: &BeliefNetwork, evidence: &Evidence) -> Conflict {
    let zero = |subset: &[(VarId, bool)]| {
        let ev = Evidence {
            values: subset.iter().copied().collect(),
        };
        matches!(evidence_probability(net, &ev), Ok(m) if m == 0.0)
    };
    for &v in net.topological_order() {
        let Some(value) = evidence.get(v) else { continue };
        let mut family: Vec<(VarId, bool)> = net
            .parents(v)
            .iter()
            .filter_map(|&p| evidence.get(p).map(|pv| (p, pv)))
            .collect();
        family.push((v, value));
        if !zero(&family) {
            continue;
        }
        let mut i = 0;
        while i < family.len() {
            let mut smaller = family.clone();
            smaller.remove(i);
            if !smaller.is_empty() && zero(&smaller) {
                family = smaller;
            } else {
                i += 1;
            }
        }
        family.sort_by_key(|&(id, _)| net.topological_order().iter().position(|&o| o == id));
        return Conflict {
            readings: family
                .into_iter()
                .map(|(id, val)| (net.name(id).to_string(), val))
                .collect(),
        };
    }
    Conflict {
        readings: Vec::new(),
    }
}

/// Whether `x` and `y` are d-separated by `given`.
///
/// Reachability walk over (node, direction) pairs: a trail may pass a
/// collider only when the collider or one of its descendants is in `given`.
pub fn d_separated(
    net: &BeliefNetwork,
    x: VarId,
    y: VarId,
    given: &[VarId],
) -> Result<bool, InferenceError> {
    net.check(x)?;
    net.check(y)?;
    for &g in given {
        net.check(g)?;
    }
    if x == y {
        return Err(InferenceError::SameVariable(net.name(x).to_string()));
    }
    if given.contains(&x) || given.contains(&y) {
        return Ok(true);
    }
    Ok(!reachable(net, x, given)[y.index()])
}

/// Nodes with an active trail from `source` given `given`.
pub(crate) fn reachable(net: &BeliefNetwork, source: VarId, given: &[VarId]) -> Vec<bool> {
    let n = net.len();
    let mut observed = vec![false; n];
    for g in given {
        observed[g.index()] = true;
    }
    // Nodes that are observed or have an observed descendant.
    let mut opens_collider = vec![false; n];
    let mut stack: Vec<VarId> = given.to_vec();
    while let Some(v) = stack.pop() {
        if std::mem::replace(&mut opens_collider[v.index()], true) {
            continue;
        }
        stack.extend_from_slice(net.parents(v));
    }

    const UP: usize = 0; // arrived from a child
    const DOWN: usize = 1; // arrived from a parent
    let mut visited = vec![[false; 2]; n];
    let mut reached = vec![false; n];
    let mut queue = vec![(source, UP)];
    while let Some((v, dir)) = queue.pop() {
        if std::mem::replace(&mut visited[v.index()][dir], true) {
            continue;
        }
        let obs = observed[v.index()];
        if !obs {
            reached[v.index()] = true;
        }
        if dir == UP && !obs {
            queue.extend(net.parents(v).iter().map(|&p| (p, UP)));
            queue.extend(net.children(v).iter().map(|&c| (c, DOWN)));
        } else if dir == DOWN {
            if !obs {
                queue.extend(net.children(v).iter().map(|&c| (c, DOWN)));
            }
            if opens_collider[v.index()] {
                queue.extend(net.parents(v).iter().map(|&p| (p, UP)));
            }
        }
    }
    reached
}

/// Variables an explanation of `target` must mention: barren variables are
/// pruned repeatedly, then variables d-separated from the target by the
/// evidence are dropped. Always contains the target; evidence is excluded.
/// Returned in declaration order.
pub fn relevant_variables(net: &BeliefNetwork, target: VarId, evidence: &Evidence) -> Vec<VarId> {
    let n = net.len();
    let mut alive = vec![true; n];
    loop {
        let mut changed = false;
        for v in net.ids() {
            let barren = alive[v.index()]
                && v != target
                && !evidence.contains(v)
                && net.children(v).iter().all(|c| !alive[c.index()]);
            if barren {
                alive[v.index()] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let given = evidence.vars();
    let connected = if given.contains(&target) {
        vec![false; n]
    } else {
        reachable(net, target, &given)
    };
    net.ids()
        .filter(|&v| {
            v == target || (alive[v.index()] && !evidence.contains(v) && connected[v.index()])
        })
        .collect()
}
