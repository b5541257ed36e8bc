//! Belief network model over binary variables.
//!
//! A network is an ordered list of variables, each carrying one conditional
//! model: either an explicit table of `P(var = true | parents)` or a noisy-OR
//! gate with per-cause strengths and a leak. Arcs are implied by the parent
//! lists. Networks are validated on construction and immutable afterwards.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard cap on network size; assignments are packed into a `u64`.
pub const MAX_VARIABLES: usize = 64;

const SNEEZE_JSON: &str = include_str!("../assets/sneeze.json");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("variable `{variable}`: {message}")]
    Schema { variable: String, message: String },
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("variable `{variable}` names unknown parent `{parent}`")]
    UnknownParent { variable: String, parent: String },
    #[error("variable `{variable}` lists parent `{parent}` twice")]
    DuplicateParent { variable: String, parent: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable name `{0}` is ambiguous")]
    AmbiguousVariable(String),
    #[error("variable `{variable}`: probability {value} is outside [0, 1]")]
    ProbabilityOutOfRange { variable: String, value: f64 },
    #[error("variable `{variable}`: table needs {expected} entries, found {found}")]
    TableSize {
        variable: String,
        expected: usize,
        found: usize,
    },
    #[error("variable `{variable}`: expected {expected} parent values, found {found}")]
    ParentArity {
        variable: String,
        expected: usize,
        found: usize,
    },
    #[error("cycle detected: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("variable `{0}` has an empty label")]
    EmptyLabel(String),
    #[error("network has {0} variables, at most {MAX_VARIABLES} are supported")]
    TooManyVariables(usize),
}

/// Index of a variable inside one [`BeliefNetwork`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub(crate) usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub label: String,
    pub negated_label: Option<String>,
}

impl Variable {
    /// A variable labelled after its name, with underscores read as spaces.
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        let label = name.replace('_', " ");
        Variable {
            name,
            label,
            negated_label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_negated_label(mut self, label: impl Into<String>) -> Self {
        self.negated_label = Some(label.into());
        self
    }

    /// Text for one truth value: "cat" or "no cat".
    pub fn reading(&self, value: bool) -> String {
        if value {
            self.label.clone()
        } else {
            match &self.negated_label {
                Some(neg) => neg.clone(),
                None => format!("no {}", self.label),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cause {
    pub parent: String,
    pub strength: f64,
    /// Whether the arc reads as cause -> effect in generated text.
    pub causal: bool,
}

impl Cause {
    pub fn new(parent: impl Into<String>, strength: f64) -> Self {
        Cause {
            parent: parent.into(),
            strength,
            causal: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConditionalModel {
    /// `p_true[row]` is `P(var = true | row)`; rows count in binary over
    /// `parents` with the first parent as the most significant bit, false first.
    Table {
        parents: Vec<String>,
        p_true: Vec<f64>,
        /// Parents whose arc carries cause -> effect semantics.
        causal: Vec<String>,
    },
    NoisyOr { causes: Vec<Cause>, leak: f64 },
}

impl ConditionalModel {
    /// A root variable's model: a table with no parents.
    pub fn prior(p: f64) -> Self {
        ConditionalModel::Table {
            parents: Vec::new(),
            p_true: vec![p],
            causal: Vec::new(),
        }
    }

    pub fn noisy_or(causes: &[(&str, f64)], leak: f64) -> Self {
        ConditionalModel::NoisyOr {
            causes: causes.iter().map(|&(p, s)| Cause::new(p, s)).collect(),
            leak,
        }
    }

    pub fn table(parents: &[&str], p_true: Vec<f64>) -> Self {
        ConditionalModel::Table {
            parents: parents.iter().map(|p| p.to_string()).collect(),
            p_true,
            causal: Vec::new(),
        }
    }

    /// Parent names in the model's own order.
    pub fn parents(&self) -> Vec<&str> {
        match self {
            ConditionalModel::Table { parents, .. } => parents.iter().map(String::as_str).collect(),
            ConditionalModel::NoisyOr { causes, .. } => {
                causes.iter().map(|c| c.parent.as_str()).collect()
            }
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            ConditionalModel::Table { parents, .. } => parents.len(),
            ConditionalModel::NoisyOr { causes, .. } => causes.len(),
        }
    }

    pub fn is_noisy_or(&self) -> bool {
        matches!(self, ConditionalModel::NoisyOr { .. })
    }

    /// Whether the arc from the parent at `position` is annotated causal.
    pub fn is_causal(&self, position: usize) -> bool {
        match self {
            ConditionalModel::Table {
                parents, causal, ..
            } => parents
                .get(position)
                .is_some_and(|p| causal.iter().any(|c| c == p)),
            ConditionalModel::NoisyOr { causes, .. } => {
                causes.get(position).is_some_and(|c| c.causal)
            }
        }
    }

    /// `P(var = true | parents)` with parent values in model order.
    /// The caller guarantees `parent_values.len() == self.arity()`.
    pub(crate) fn p_true(&self, parent_values: impl Iterator<Item = bool>) -> f64 {
        match self {
            ConditionalModel::Table { p_true, .. } => {
                let row = parent_values.fold(0usize, |row, v| (row << 1) | v as usize);
                p_true[row]
            }
            ConditionalModel::NoisyOr { causes, leak } => {
                let mut fail = 1.0 - leak;
                for (cause, present) in causes.iter().zip(parent_values) {
                    if present {
                        fail *= 1.0 - cause.strength;
                    }
                }
                1.0 - fail
            }
        }
    }

    /// Probability of `value` given parent values listed in model order.
    pub fn conditional_probability(
        &self,
        value: bool,
        parent_values: &[bool],
    ) -> Result<f64, NetworkError> {
        if parent_values.len() != self.arity() {
            return Err(NetworkError::ParentArity {
                variable: String::new(),
                expected: self.arity(),
                found: parent_values.len(),
            });
        }
        let p = self.p_true(parent_values.iter().copied());
        Ok(if value { p } else { 1.0 - p })
    }

    /// The equivalent explicit table. Tables are returned unchanged.
    pub fn to_table(&self) -> ConditionalModel {
        match self {
            ConditionalModel::Table { .. } => self.clone(),
            ConditionalModel::NoisyOr { causes, .. } => {
                let k = causes.len();
                let p_true = (0..1usize << k)
                    .map(|row| self.p_true(row_bits(row, k)))
                    .collect();
                ConditionalModel::Table {
                    parents: causes.iter().map(|c| c.parent.clone()).collect(),
                    p_true,
                    causal: causes
                        .iter()
                        .filter(|c| c.causal)
                        .map(|c| c.parent.clone())
                        .collect(),
                }
            }
        }
    }

    /// Table rows of `P(true | row)` with rows counted over `order`, which must
    /// be a permutation of the model's parents.
    pub fn to_table_ordered(&self, order: &[&str]) -> Result<Vec<f64>, NetworkError> {
        let own = self.parents();
        if order.len() != own.len() {
            return Err(NetworkError::ParentArity {
                variable: String::new(),
                expected: own.len(),
                found: order.len(),
            });
        }
        let mut position = Vec::with_capacity(own.len());
        for parent in &own {
            let pos = order
                .iter()
                .position(|o| o == parent)
                .ok_or_else(|| NetworkError::UnknownParent {
                    variable: String::new(),
                    parent: parent.to_string(),
                })?;
            position.push(pos);
        }
        let k = own.len();
        Ok((0..1usize << k)
            .map(|row| {
                let bits: Vec<bool> = row_bits(row, k).collect();
                self.p_true(position.iter().map(|&pos| bits[pos]))
            })
            .collect())
    }

    fn probabilities(&self) -> Vec<f64> {
        match self {
            ConditionalModel::Table { p_true, .. } => p_true.clone(),
            ConditionalModel::NoisyOr { causes, leak } => causes
                .iter()
                .map(|c| c.strength)
                .chain(std::iter::once(*leak))
                .collect(),
        }
    }
}

/// Bits of a table row, most significant first.
pub(crate) fn row_bits(row: usize, k: usize) -> impl Iterator<Item = bool> {
    (0..k).rev().map(move |i| (row >> i) & 1 == 1)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Arc {
    pub parent: VarId,
    pub child: VarId,
    pub causal: bool,
}

impl Serialize for VarId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(self.0 as u64)
    }
}

/// A validated, immutable belief network.
#[derive(Debug, Clone)]
pub struct BeliefNetwork {
    variables: Vec<Variable>,
    models: Vec<ConditionalModel>,
    parents: Vec<Vec<VarId>>,
    children: Vec<Vec<VarId>>,
    order: Vec<VarId>,
    index: HashMap<String, VarId>,
}

impl PartialEq for BeliefNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.variables == other.variables && self.models == other.models
    }
}

impl BeliefNetwork {
    pub fn new(entries: Vec<(Variable, ConditionalModel)>) -> Result<Self, NetworkError> {
        if entries.len() > MAX_VARIABLES {
            return Err(NetworkError::TooManyVariables(entries.len()));
        }
        let mut index = HashMap::new();
        for (i, (var, _)) in entries.iter().enumerate() {
            if index.insert(var.name.clone(), VarId(i)).is_some() {
                return Err(NetworkError::DuplicateVariable(var.name.clone()));
            }
            if var.label.trim().is_empty() {
                return Err(NetworkError::EmptyLabel(var.name.clone()));
            }
        }

        let mut parents = Vec::with_capacity(entries.len());
        for (var, model) in &entries {
            let mut ids = Vec::new();
            for p in model.parents() {
                let id = *index.get(p).ok_or_else(|| NetworkError::UnknownParent {
                    variable: var.name.clone(),
                    parent: p.to_string(),
                })?;
                if ids.contains(&id) {
                    return Err(NetworkError::DuplicateParent {
                        variable: var.name.clone(),
                        parent: p.to_string(),
                    });
                }
                ids.push(id);
            }
            validate_model(var, model)?;
            parents.push(ids);
        }

        let mut children = vec![Vec::new(); entries.len()];
        for (child, ps) in parents.iter().enumerate() {
            for p in ps {
                children[p.0].push(VarId(child));
            }
        }

        let (variables, models): (Vec<_>, Vec<_>) = entries.into_iter().unzip();
        let order = topological_sort(&parents, &children).map_err(|cycle| {
            NetworkError::Cycle(cycle.iter().map(|v| variables[v.0].name.clone()).collect())
        })?;

        Ok(BeliefNetwork {
            variables,
            models,
            parents,
            children,
            order,
            index,
        })
    }

    /// Parses the JSON network file format.
    pub fn from_json(text: &str) -> Result<Self, NetworkError> {
        let doc: NetworkDoc = serde_json::from_str(text).map_err(|e| NetworkError::Syntax {
            line: e.line(),
            column: e.column(),
            message: strip_position(&e.to_string()),
        })?;
        let entries = doc
            .variables
            .into_iter()
            .map(VariableDoc::into_entry)
            .collect::<Result<Vec<_>, _>>()?;
        BeliefNetwork::new(entries)
    }

    /// Canonical JSON rendering; `from_json(to_json(net)) == net`.
    pub fn to_json(&self) -> String {
        let doc = NetworkDoc {
            variables: self
                .variables
                .iter()
                .zip(&self.models)
                .map(|(v, m)| VariableDoc::from_entry(v, m))
                .collect(),
        };
        let mut out = serde_json::to_string_pretty(&doc).expect("network document serializes");
        out.push('\n');
        out
    }

    /// The bundled sneeze network.
    pub fn sneeze() -> Self {
        BeliefNetwork::from_json(SNEEZE_JSON).expect("bundled network is valid")
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = VarId> + '_ {
        (0..self.variables.len()).map(VarId)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn name(&self, id: VarId) -> &str {
        &self.variables[id.0].name
    }

    pub fn label(&self, id: VarId) -> &str {
        &self.variables[id.0].label
    }

    pub fn model(&self, id: VarId) -> &ConditionalModel {
        &self.models[id.0]
    }

    /// Parents in the order of the variable's model.
    pub fn parents(&self, id: VarId) -> &[VarId] {
        &self.parents[id.0]
    }

    pub fn children(&self, id: VarId) -> &[VarId] {
        &self.children[id.0]
    }

    pub fn is_root(&self, id: VarId) -> bool {
        self.parents[id.0].is_empty()
    }

    pub fn contains(&self, id: VarId) -> bool {
        id.0 < self.variables.len()
    }

    pub(crate) fn check(&self, id: VarId) -> Result<VarId, NetworkError> {
        if self.contains(id) {
            Ok(id)
        } else {
            Err(NetworkError::UnknownVariable(format!("#{}", id.0)))
        }
    }

    /// Exact lookup by name.
    pub fn id(&self, name: &str) -> Result<VarId, NetworkError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| NetworkError::UnknownVariable(name.to_string()))
    }

    /// Lenient lookup for typed input: case-insensitive, underscores match
    /// spaces, and labels are accepted as well as names.
    pub fn resolve(&self, text: &str) -> Result<VarId, NetworkError> {
        if let Ok(id) = self.id(text) {
            return Ok(id);
        }
        let wanted = normalize(text);
        let mut found = None;
        for (i, v) in self.variables.iter().enumerate() {
            if normalize(&v.name) == wanted || normalize(&v.label) == wanted {
                match found {
                    Some(j) if j != i => {
                        return Err(NetworkError::AmbiguousVariable(text.to_string()))
                    }
                    _ => found = Some(i),
                }
            }
        }
        found
            .map(VarId)
            .ok_or_else(|| NetworkError::UnknownVariable(text.to_string()))
    }

    pub fn arcs(&self) -> Vec<Arc> {
        let mut arcs = Vec::new();
        for child in self.ids() {
            for (pos, &parent) in self.parents(child).iter().enumerate() {
                arcs.push(Arc {
                    parent,
                    child,
                    causal: self.model(child).is_causal(pos),
                });
            }
        }
        arcs
    }

    /// Whether the arc `parent -> child` exists and reads causally.
    pub fn is_causal_arc(&self, parent: VarId, child: VarId) -> bool {
        self.parents(child)
            .iter()
            .position(|&p| p == parent)
            .is_some_and(|pos| self.model(child).is_causal(pos))
    }

    /// Probability of `value` for `var` given its parents' values in model order.
    pub fn conditional_probability(
        &self,
        var: VarId,
        value: bool,
        parent_values: &[bool],
    ) -> Result<f64, NetworkError> {
        self.check(var)?;
        self.model(var)
            .conditional_probability(value, parent_values)
            .map_err(|e| match e {
                NetworkError::ParentArity {
                    expected, found, ..
                } => NetworkError::ParentArity {
                    variable: self.name(var).to_string(),
                    expected,
                    found,
                },
                other => other,
            })
    }

    /// `P(var = true | parents)` reading parent values from a packed assignment.
    #[inline]
    pub(crate) fn p_true_in(&self, var: VarId, mask: u64) -> f64 {
        self.models[var.0].p_true(self.parents[var.0].iter().map(|p| mask >> p.0 & 1 == 1))
    }

    /// Probability of `var`'s value in `mask` given its parents' values in `mask`.
    #[inline]
    pub(crate) fn local_probability(&self, var: VarId, mask: u64) -> f64 {
        let p = self.p_true_in(var, mask);
        if mask >> var.0 & 1 == 1 {
            p
        } else {
            1.0 - p
        }
    }

    /// Parents before children, ties broken by declaration order.
    pub fn topological_order(&self) -> &[VarId] {
        &self.order
    }

    /// An order over `subset` in which every variable follows its parents
    /// from the subset, and each cause is followed as closely as possible by
    /// the effects it completes. Used to tell scenarios as causal stories.
    pub fn story_order(&self, subset: &[VarId]) -> Vec<VarId> {
        let mut member = vec![false; self.len()];
        for v in subset {
            member[v.0] = true;
        }
        let mut placed = vec![false; self.len()];
        let mut out = Vec::with_capacity(subset.len());
        for v in self.ids() {
            if member[v.0] && !placed[v.0] {
                self.story_visit(v, &member, &mut placed, &mut out);
            }
        }
        out
    }

    fn story_visit(&self, v: VarId, member: &[bool], placed: &mut [bool], out: &mut Vec<VarId>) {
        let ready = self
            .parents(v)
            .iter()
            .all(|p| !member[p.0] || placed[p.0]);
        if !ready {
            return;
        }
        placed[v.0] = true;
        out.push(v);
        for &c in self.children(v) {
            if member[c.0] && !placed[c.0] {
                self.story_visit(c, member, placed, out);
            }
        }
    }

    /// True iff the undirected skeleton has no cycle.
    pub fn is_polytree(&self) -> bool {
        let mut roots: Vec<usize> = (0..self.len()).collect();
        fn find(roots: &mut [usize], mut x: usize) -> usize {
            while roots[x] != x {
                roots[x] = roots[roots[x]];
                x = roots[x];
            }
            x
        }
        for arc in self.arcs() {
            let a = find(&mut roots, arc.parent.0);
            let b = find(&mut roots, arc.child.0);
            if a == b {
                return false;
            }
            roots[a] = b;
        }
        true
    }

    /// Descendants of `v`, excluding `v`.
    pub fn descendants(&self, v: VarId) -> Vec<VarId> {
        let mut seen = vec![false; self.len()];
        let mut stack: Vec<VarId> = self.children(v).to_vec();
        let mut out = Vec::new();
        while let Some(u) = stack.pop() {
            if std::mem::replace(&mut seen[u.0], true) {
                continue;
            }
            out.push(u);
            stack.extend_from_slice(self.children(u));
        }
        out.sort();
        out
    }
}

fn normalize(s: &str) -> String {
    s.trim().to_lowercase().replace('_', " ")
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

fn validate_model(var: &Variable, model: &ConditionalModel) -> Result<(), NetworkError> {
    for value in model.probabilities() {
        if !(0.0..=1.0).contains(&value) {
            return Err(NetworkError::ProbabilityOutOfRange {
                variable: var.name.clone(),
                value,
            });
        }
    }
    if let ConditionalModel::Table {
        parents,
        p_true,
        causal,
    } = model
    {
        let expected = 1usize << parents.len();
        if p_true.len() != expected {
            return Err(NetworkError::TableSize {
                variable: var.name.clone(),
                expected,
                found: p_true.len(),
            });
        }
        if let Some(c) = causal.iter().find(|c| !parents.contains(c)) {
            return Err(NetworkError::Schema {
                variable: var.name.clone(),
                message: format!("causal parent `{c}` is not a parent"),
            });
        }
    }
    Ok(())
}

/// Kahn's algorithm with a min-heap on declaration index. On failure returns
/// one directed cycle.
fn topological_sort(parents: &[Vec<VarId>], children: &[Vec<VarId>]) -> Result<Vec<VarId>, Vec<VarId>> {
    let n = parents.len();
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut heap: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&i| indegree[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(v)) = heap.pop() {
        order.push(VarId(v));
        for c in &children[v] {
            indegree[c.0] -= 1;
            if indegree[c.0] == 0 {
                heap.push(Reverse(c.0));
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }
    // Every unplaced node has an unplaced parent; walk parents until one repeats.
    let start = (0..n).find(|&i| indegree[i] > 0).expect("unplaced node");
    let mut path = vec![start];
    let mut cur = start;
    loop {
        let next = parents[cur]
            .iter()
            .find(|p| indegree[p.0] > 0)
            .expect("unplaced parent")
            .0;
        if let Some(pos) = path.iter().position(|&p| p == next) {
            let mut cycle: Vec<VarId> = path[pos..].iter().rev().map(|&i| VarId(i)).collect();
            cycle.push(cycle[0]);
            return Err(cycle);
        }
        path.push(next);
        cur = next;
    }
}

impl fmt::Display for BeliefNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in self.topological_order() {
            let parents: Vec<&str> = self.parents(*v).iter().map(|p| self.name(*p)).collect();
            if parents.is_empty() {
                writeln!(f, "{}", self.name(*v))?;
            } else {
                writeln!(f, "{} <- {}", self.name(*v), parents.join(", "))?;
            }
        }
        Ok(())
    }
}

/// Convenience constructor for networks built in code.
#[derive(Debug, Default, Clone)]
pub struct NetworkBuilder {
    entries: Vec<(Variable, ConditionalModel)>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn variable(mut self, var: Variable, model: ConditionalModel) -> Self {
        self.entries.push((var, model));
        self
    }

    pub fn root(self, name: &str, prior: f64) -> Self {
        self.variable(Variable::new(name), ConditionalModel::prior(prior))
    }

    pub fn noisy_or(self, name: &str, causes: &[(&str, f64)], leak: f64) -> Self {
        self.variable(Variable::new(name), ConditionalModel::noisy_or(causes, leak))
    }

    pub fn table(self, name: &str, parents: &[&str], p_true: Vec<f64>) -> Self {
        self.variable(Variable::new(name), ConditionalModel::table(parents, p_true))
    }

    pub fn build(self) -> Result<BeliefNetwork, NetworkError> {
        BeliefNetwork::new(self.entries)
    }
}

// ---------------------------------------------------------------------------
// File format

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    variables: Vec<VariableDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableDoc {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    negated_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prior: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    model: Option<ModelDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum ModelDoc {
    Table {
        parents: Vec<String>,
        p_true: Vec<f64>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        causal: Vec<String>,
    },
    NoisyOr {
        causes: Vec<CauseDoc>,
        #[serde(default)]
        leak: f64,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CauseDoc {
    parent: String,
    strength: f64,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    causal: bool,
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

impl VariableDoc {
    fn into_entry(self) -> Result<(Variable, ConditionalModel), NetworkError> {
        let model = match (self.prior, self.model) {
            (Some(p), None) => ConditionalModel::prior(p),
            (None, Some(ModelDoc::Table {
                parents,
                p_true,
                causal,
            })) => {
                if let Some(c) = causal.iter().find(|c| !parents.contains(c)) {
                    return Err(NetworkError::Schema {
                        variable: self.name,
                        message: format!("causal parent `{c}` is not a parent"),
                    });
                }
                // canonical order follows the parent list
                let causal = parents
                    .iter()
                    .filter(|p| causal.contains(p))
                    .cloned()
                    .collect();
                ConditionalModel::Table {
                    parents,
                    p_true,
                    causal,
                }
            }
            (None, Some(ModelDoc::NoisyOr { causes, leak })) => ConditionalModel::NoisyOr {
                causes: causes
                    .into_iter()
                    .map(|c| Cause {
                        parent: c.parent,
                        strength: c.strength,
                        causal: c.causal,
                    })
                    .collect(),
                leak,
            },
            (Some(_), Some(_)) => {
                return Err(NetworkError::Schema {
                    variable: self.name,
                    message: "give either `prior` or `model`, not both".into(),
                })
            }
            (None, None) => {
                return Err(NetworkError::Schema {
                    variable: self.name,
                    message: "missing `prior` or `model`".into(),
                })
            }
        };
        let mut var = Variable::new(self.name);
        if let Some(label) = self.label {
            var.label = label;
        }
        var.negated_label = self.negated_label;
        Ok((var, model))
    }

    fn from_entry(var: &Variable, model: &ConditionalModel) -> Self {
        let (prior, model) = match model {
            ConditionalModel::Table {
                parents, p_true, ..
            } if parents.is_empty() => (Some(p_true[0]), None),
            ConditionalModel::Table {
                parents,
                p_true,
                causal,
            } => (
                None,
                Some(ModelDoc::Table {
                    parents: parents.clone(),
                    p_true: p_true.clone(),
                    causal: causal.clone(),
                }),
            ),
            ConditionalModel::NoisyOr { causes, leak } => (
                None,
                Some(ModelDoc::NoisyOr {
                    causes: causes
                        .iter()
                        .map(|c| CauseDoc {
                            parent: c.parent.clone(),
                            strength: c.strength,
                            causal: c.causal,
                        })
                        .collect(),
                    leak: *leak,
                }),
            ),
        };
        VariableDoc {
            name: var.name.clone(),
            label: Some(var.label.clone()),
            negated_label: var.negated_label.clone(),
            prior,
            model,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn single_root() {
        let net = BeliefNetwork::from_json(
            r#"{"variables":[{"name":"cold","label":"cold","prior":0.08}]}"#,
        )
        .unwrap();
        assert_eq!(net.len(), 1);
        assert!(net.arcs().is_empty());
        let cold = net.id("cold").unwrap();
        assert_eq!(net.conditional_probability(cold, true, &[]).unwrap(), 0.08);
    }

    #[test]
    fn bundled_network() {
        let net = BeliefNetwork::sneeze();
        assert_eq!(net.len(), 7);
        let noisy = net.ids().filter(|&v| net.model(v).is_noisy_or()).count();
        assert_eq!(noisy, 4);
        for (name, p) in [("cold", 0.08), ("cat", 0.1), ("dog", 0.1)] {
            let v = net.id(name).unwrap();
            assert!(net.is_root(v));
            assert_eq!(net.conditional_probability(v, true, &[]).unwrap(), p);
        }
        assert_eq!(net.arcs().len(), 6);
        assert!(net.arcs().iter().all(|a| a.causal));
    }

    #[test]
    fn two_node_cycle_is_rejected() {
        let text = r#"{"variables":[
            {"name":"allergy","model":{"type":"noisy_or","causes":[{"parent":"cat","strength":0.8}],"leak":0.0}},
            {"name":"cat","model":{"type":"noisy_or","causes":[{"parent":"allergy","strength":0.5}],"leak":0.1}}
        ]}"#;
        match BeliefNetwork::from_json(text) {
            Err(NetworkError::Cycle(path)) => {
                assert_eq!(path.first(), path.last());
                assert_eq!(path.len(), 3);
            }
            other => panic!("expected cycle, got {other:?}"),
        }
    }

    #[test]
    fn parse_errors() {
        let err = BeliefNetwork::from_json("{\"variables\": [\n  {\"name\": }\n]}").unwrap_err();
        assert!(matches!(err, NetworkError::Syntax { line: 2, .. }), "{err:?}");

        let err = BeliefNetwork::from_json(
            r#"{"variables":[{"name":"a","model":{"type":"table","parents":["zz"],"p_true":[0.1,0.2]}}]}"#,
        )
        .unwrap_err();
        assert_eq!(
            err,
            NetworkError::UnknownParent {
                variable: "a".into(),
                parent: "zz".into()
            }
        );

        let err = BeliefNetwork::from_json(
            r#"{"variables":[{"name":"a","prior":0.1},{"name":"a","prior":0.2}]}"#,
        )
        .unwrap_err();
        assert_eq!(err, NetworkError::DuplicateVariable("a".into()));

        let err =
            BeliefNetwork::from_json(r#"{"variables":[{"name":"a","prior":1.5}]}"#).unwrap_err();
        assert!(matches!(err, NetworkError::ProbabilityOutOfRange { .. }));

        let err = BeliefNetwork::from_json(
            r#"{"variables":[{"name":"a","prior":0.5},{"name":"b","model":{"type":"table","parents":["a"],"p_true":[0.1]}}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, NetworkError::TableSize { expected: 2, found: 1, .. }));

        let err = BeliefNetwork::from_json(r#"{"variables":[{"name":"a"}]}"#).unwrap_err();
        assert!(matches!(err, NetworkError::Schema { .. }));

        let err = BeliefNetwork::from_json(r#"{"variables":[{"name":"a","prior":0.5,"colour":1}]}"#)
            .unwrap_err();
        assert!(matches!(err, NetworkError::Syntax { .. }));
    }

    #[test]
    fn noisy_or_probabilities() {
        let net = BeliefNetwork::sneeze();
        let pm = net.id("paw_marks").unwrap();
        assert!(close(net.conditional_probability(pm, true, &[true, true]).unwrap(), 0.775));
        assert!(close(net.conditional_probability(pm, true, &[false, false]).unwrap(), 0.1));
        let sneezing = net.id("sneezing").unwrap();
        assert_eq!(net.conditional_probability(sneezing, true, &[false, false]).unwrap(), 0.0);
        assert!(close(net.conditional_probability(sneezing, true, &[true, true]).unwrap(), 0.99));
        assert!(matches!(
            net.conditional_probability(sneezing, true, &[true]),
            Err(NetworkError::ParentArity { expected: 2, found: 1, .. })
        ));
    }

    #[test]
    fn tables_from_noisy_or() {
        let allergy = ConditionalModel::noisy_or(&[("cat", 0.8)], 0.0);
        match allergy.to_table() {
            ConditionalModel::Table { p_true, .. } => assert_eq!(p_true, vec![0.0, 0.8]),
            _ => unreachable!(),
        }
        let leak_only = ConditionalModel::noisy_or(&[], 0.3);
        match leak_only.to_table() {
            ConditionalModel::Table { p_true, .. } => assert!(close(p_true[0], 0.3) && p_true.len() == 1),
            _ => unreachable!(),
        }
        let pm = ConditionalModel::noisy_or(&[("cat", 0.5), ("dog", 0.5)], 0.1);
        let rows = pm.to_table_ordered(&["cat", "dog"]).unwrap();
        let expected = [0.1, 0.55, 0.55, 0.775];
        for (r, e) in rows.iter().zip(expected) {
            assert!(close(*r, e));
        }
        let t = ConditionalModel::table(&["a", "b"], vec![0.1, 0.2, 0.3, 0.4]);
        assert_eq!(t.to_table(), t);
        assert_eq!(t.to_table_ordered(&["b", "a"]).unwrap(), vec![0.1, 0.3, 0.2, 0.4]);
    }

    #[test]
    fn orders() {
        let net = BeliefNetwork::sneeze();
        let names: Vec<&str> = net.topological_order().iter().map(|&v| net.name(v)).collect();
        assert_eq!(
            names,
            ["cold", "cat", "dog", "allergy", "sneezing", "paw_marks", "barking"]
        );
        let chain = NetworkBuilder::new()
            .noisy_or("c", &[("b", 0.5)], 0.0)
            .noisy_or("b", &[("a", 0.5)], 0.0)
            .root("a", 0.5)
            .build()
            .unwrap();
        let names: Vec<&str> = chain.topological_order().iter().map(|&v| chain.name(v)).collect();
        assert_eq!(names, ["a", "b", "c"]);

        let subset: Vec<VarId> = ["cold", "cat", "dog", "allergy"]
            .iter()
            .map(|n| net.id(n).unwrap())
            .collect();
        let story: Vec<&str> = net.story_order(&subset).iter().map(|&v| net.name(v)).collect();
        assert_eq!(story, ["cold", "cat", "allergy", "dog"]);
    }

    #[test]
    fn polytree_check() {
        assert!(BeliefNetwork::sneeze().is_polytree());
        let diamond = NetworkBuilder::new()
            .root("a", 0.5)
            .noisy_or("b", &[("a", 0.5)], 0.0)
            .noisy_or("c", &[("a", 0.5)], 0.0)
            .noisy_or("d", &[("b", 0.5), ("c", 0.5)], 0.0)
            .build()
            .unwrap();
        assert!(!diamond.is_polytree());
        assert!(NetworkBuilder::new().build().unwrap().is_polytree());
    }

    #[test]
    fn lenient_lookup() {
        let net = BeliefNetwork::sneeze();
        let pm = net.id("paw_marks").unwrap();
        assert_eq!(net.resolve("Paw_Marks").unwrap(), pm);
        assert_eq!(net.resolve("paw marks").unwrap(), pm);
        assert!(net.resolve("ferret").is_err());
    }

    #[test]
    fn canonical_round_trip() {
        let net = BeliefNetwork::sneeze();
        let text = net.to_json();
        assert_eq!(text, include_str!("../assets/sneeze.json"));
        assert_eq!(BeliefNetwork::from_json(&text).unwrap(), net);
    }
}
