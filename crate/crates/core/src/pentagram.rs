//! The ten pentagram observables and the five lines recovered from them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pauli::{PauliError, PauliString};

/// Width of each party's observables.
pub const LOCAL_QUBITS: usize = 3;
pub const NODE_COUNT: usize = 10;
pub const LINE_COUNT: usize = 5;
pub const LINE_SIZE: usize = 4;

/// A bulb / observable on the pentagram, numbered 1..=10.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct NodeId(u8);

impl NodeId {
    pub fn new(id: u8) -> Option<Self> {
        (1..=NODE_COUNT as u8).contains(&id).then_some(NodeId(id))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Zero-based position, handy for bit masks.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn all() -> impl Iterator<Item = NodeId> {
        (1..=NODE_COUNT as u8).map(NodeId)
    }
}

impl TryFrom<u8> for NodeId {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, Self::Error> {
        NodeId::new(v).ok_or_else(|| format!("node id {v} outside 1..=10"))
    }
}

impl From<NodeId> for u8 {
    fn from(n: NodeId) -> u8 {
        n.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Switch setting / pentagram edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LineLabel {
    S1,
    S2,
    S3,
    S4,
    S5,
}

impl LineLabel {
    pub const ALL: [LineLabel; LINE_COUNT] = [
        LineLabel::S1,
        LineLabel::S2,
        LineLabel::S3,
        LineLabel::S4,
        LineLabel::S5,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(k: usize) -> Option<Self> {
        Self::ALL.get(k).copied()
    }
}

impl fmt::Display for LineLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{}", self.index() + 1)
    }
}

impl FromStr for LineLabel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.strip_prefix('S')
            .and_then(|d| d.parse::<usize>().ok())
            .and_then(|d| d.checked_sub(1))
            .and_then(LineLabel::from_index)
            .ok_or_else(|| format!("unknown line label {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line search found {0} qualifying 4-subsets, expected 5")]
    WrongLineCount(usize),
    #[error("line incidence violated: {0}")]
    Incidence(String),
    #[error("expected 10 observables, got {0}")]
    WrongNodeCount(usize),
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

/// The ten observables, indexed by node.
pub type Observables = BTreeMap<NodeId, PauliString>;

/// The reference operator table, nodes 1..=10 in order.
pub const REFERENCE_TABLE: [&str; NODE_COUNT] = [
    "-ZZZ", "+ZII", "+IXI", "+IIZ", "+IZI", "+XII", "-XXZ", "-XZX", "+IIX", "-ZXX",
];

pub fn build_observables() -> Observables {
    NodeId::all()
        .zip(REFERENCE_TABLE)
        .map(|(n, s)| (n, s.parse().expect("reference table parses")))
        .collect()
}

fn is_minus_identity(op: &PauliString) -> bool {
    op.has_identity_letters() && op.phase().sign() == Some(-1)
}

fn mutually_commuting(ops: &[&PauliString]) -> Result<bool, PauliError> {
    for (k, a) in ops.iter().enumerate() {
        for b in &ops[k + 1..] {
            if !a.commutes(b)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Recover the lines: every 4-subset that commutes pairwise and multiplies
/// to `-I`. Exactly five must survive and form a pentagram incidence.
///
/// Labels follow sorted node tuples, except that a unique line made only of
/// full-weight observables is always `S5`.
pub fn derive_lines<'a, I>(observables: I) -> Result<BTreeMap<LineLabel, BTreeSet<NodeId>>, ConfigError>
where
    I: IntoIterator<Item = (NodeId, &'a PauliString)>,
{
    let obs: BTreeMap<NodeId, &PauliString> = observables.into_iter().collect();
    if obs.len() != NODE_COUNT {
        return Err(ConfigError::WrongNodeCount(obs.len()));
    }
    let nodes: Vec<NodeId> = obs.keys().copied().collect();
    let mut found: Vec<[NodeId; LINE_SIZE]> = Vec::new();
    for a in 0..NODE_COUNT {
        for b in a + 1..NODE_COUNT {
            for c in b + 1..NODE_COUNT {
                for d in c + 1..NODE_COUNT {
                    let quad = [nodes[a], nodes[b], nodes[c], nodes[d]];
                    let ops: Vec<&PauliString> = quad.iter().map(|n| obs[n]).collect();
                    if !mutually_commuting(&ops)? {
                        continue;
                    }
                    if is_minus_identity(&PauliString::product_of(ops.iter().copied())?) {
                        found.push(quad);
                    }
                }
            }
        }
    }
    if found.len() != LINE_COUNT {
        return Err(ConfigError::WrongLineCount(found.len()));
    }

    // `found` is already in lexicographic order of sorted tuples.
    let full_weight: Vec<usize> = found
        .iter()
        .enumerate()
        .filter(|(_, quad)| quad.iter().all(|n| obs[n].weight() == obs[n].width()))
        .map(|(k, _)| k)
        .collect();
    if let [k] = full_weight[..] {
        let line = found.remove(k);
        found.push(line);
    }

    let lines: BTreeMap<LineLabel, BTreeSet<NodeId>> = LineLabel::ALL
        .into_iter()
        .zip(found)
        .map(|(label, quad)| (label, quad.into_iter().collect()))
        .collect();
    if let Some(problem) = incidence_problem(&lines) {
        return Err(ConfigError::Incidence(problem));
    }
    Ok(lines)
}

fn incidence_problem(lines: &BTreeMap<LineLabel, BTreeSet<NodeId>>) -> Option<String> {
    for n in NodeId::all() {
        let degree = lines.values().filter(|l| l.contains(&n)).count();
        if degree != 2 {
            return Some(format!("node {n} lies on {degree} lines"));
        }
    }
    for (a, la) in lines {
        for (b, lb) in lines.range(a..).skip(1) {
            let shared = la.intersection(lb).count();
            if shared != 1 {
                return Some(format!("lines {a} and {b} share {shared} nodes"));
            }
        }
    }
    None
}

/// Observables together with their line structure.
#[derive(Debug, Clone, PartialEq)]
pub struct PentagramConfig {
    observables: Observables,
    lines: BTreeMap<LineLabel, BTreeSet<NodeId>>,
    incidence: BTreeMap<NodeId, Vec<LineLabel>>,
}

impl PentagramConfig {
    /// Assemble a config without validating it; see [`validate_config`].
    pub fn from_parts(observables: Observables, lines: BTreeMap<LineLabel, BTreeSet<NodeId>>) -> Self {
        let mut incidence: BTreeMap<NodeId, Vec<LineLabel>> = BTreeMap::new();
        for (&label, nodes) in &lines {
            for &n in nodes {
                incidence.entry(n).or_default().push(label);
            }
        }
        Self {
            observables,
            lines,
            incidence,
        }
    }

    /// Reference observables with derived, canonically labelled lines.
    pub fn canonical() -> Result<Self, ConfigError> {
        let observables = build_observables();
        let lines = derive_lines(observables.iter().map(|(&n, op)| (n, op)))?;
        Ok(Self::from_parts(observables, lines))
    }

    pub fn observables(&self) -> &Observables {
        &self.observables
    }

    pub fn observable(&self, node: NodeId) -> &PauliString {
        &self.observables[&node]
    }

    pub fn lines(&self) -> &BTreeMap<LineLabel, BTreeSet<NodeId>> {
        &self.lines
    }

    /// Nodes of `label` in ascending order.
    pub fn line(&self, label: LineLabel) -> &BTreeSet<NodeId> {
        &self.lines[&label]
    }

    /// Lines through `node`, in label order.
    pub fn lines_through(&self, node: NodeId) -> &[LineLabel] {
        self.incidence.get(&node).map_or(&[], Vec::as_slice)
    }

    /// `(node, operator)` pairs of a line, ascending by node.
    pub fn line_observables(&self, label: LineLabel) -> Vec<(NodeId, &PauliString)> {
        self.line(label).iter().map(|&n| (n, &self.observables[&n])).collect()
    }

    /// Rename nodes and lines. `node_map[k]` is the new id of node `k + 1`;
    /// `line_map[k]` the new label of `ALL[k]`.
    pub fn relabeled(&self, node_map: &[NodeId; NODE_COUNT], line_map: &[LineLabel; LINE_COUNT]) -> Self {
        let observables = self
            .observables
            .iter()
            .map(|(n, op)| (node_map[n.index()], op.clone()))
            .collect();
        let lines = self
            .lines
            .iter()
            .map(|(l, nodes)| (line_map[l.index()], nodes.iter().map(|n| node_map[n.index()]).collect()))
            .collect();
        Self::from_parts(observables, lines)
    }

    /// Replace one node's operator; used to build corrupted configs.
    pub fn with_observable(&self, node: NodeId, op: PauliString) -> Self {
        let mut observables = self.observables.clone();
        observables.insert(node, op);
        Self::from_parts(observables, self.lines.clone())
    }
}

impl fmt::Display for PentagramConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "node  operator  lines")?;
        for (node, op) in &self.observables {
            let labels: Vec<String> = self.lines_through(*node).iter().map(|l| l.to_string()).collect();
            writeln!(f, "{:>4}  {:<8}  {}", node.get(), op.to_string(), labels.join(" "))?;
        }
        for (label, nodes) in &self.lines {
            let ids: Vec<String> = nodes.iter().map(|n| n.to_string()).collect();
            writeln!(f, "{label}: {{{}}}", ids.join(","))?;
        }
        Ok(())
    }
}

/// Nodes common to two lines.
pub fn shared_nodes(a: LineLabel, b: LineLabel, config: &PentagramConfig) -> BTreeSet<NodeId> {
    config.line(a).intersection(config.line(b)).copied().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let mark = if c.passed { "pass" } else { "FAIL" };
            writeln!(f, "[{mark}] {}: {}", c.name, c.detail)?;
        }
        Ok(())
    }
}

/// Check every structural property of a config; failures are reported, not raised.
pub fn validate_config(config: &PentagramConfig) -> ValidationReport {
    let mut checks = Vec::new();
    let mut push = |name: String, passed: bool, detail: String| checks.push(Check { name, passed, detail });

    let reference = build_observables();
    let mismatched: Vec<String> = NodeId::all()
        .filter(|n| config.observables.get(n) != reference.get(n))
        .map(|n| n.to_string())
        .collect();
    push(
        "observable table".into(),
        mismatched.is_empty(),
        if mismatched.is_empty() {
            "all ten operators match the reference table".into()
        } else {
            format!("nodes differing from reference: {}", mismatched.join(","))
        },
    );

    for (label, nodes) in &config.lines {
        let ops: Option<Vec<&PauliString>> = nodes.iter().map(|n| config.observables.get(n)).collect();
        let Some(ops) = ops else {
            push(
                format!("{label} commuting"),
                false,
                "line references a missing node".into(),
            );
            push(
                format!("{label} product"),
                false,
                "line references a missing node".into(),
            );
            continue;
        };
        let commuting = mutually_commuting(&ops).unwrap_or(false);
        push(
            format!("{label} commuting"),
            commuting,
            format!("{} observables pairwise commuting: {commuting}", ops.len()),
        );
        let product = PauliString::product_of(ops.iter().copied());
        let (ok, detail) = match &product {
            Ok(p) => (
                nodes.len() == LINE_SIZE && is_minus_identity(p),
                format!("product = {p}"),
            ),
            Err(e) => (false, e.to_string()),
        };
        push(format!("{label} product"), ok, detail);
    }

    let bad_degree: Vec<String> = NodeId::all()
        .filter(|&n| config.lines_through(n).len() != 2)
        .map(|n| format!("{n}:{}", config.lines_through(n).len()))
        .collect();
    push(
        "node degree".into(),
        bad_degree.is_empty() && config.lines.len() == LINE_COUNT,
        if bad_degree.is_empty() {
            "every node lies on exactly two lines".into()
        } else {
            format!("node:degree violations {}", bad_degree.join(" "))
        },
    );

    let mut bad_pairs = Vec::new();
    for (a, la) in &config.lines {
        for (b, lb) in config.lines.range(a..).skip(1) {
            let k = la.intersection(lb).count();
            if k != 1 {
                bad_pairs.push(format!("{a}&{b}:{k}"));
            }
        }
    }
    push(
        "line intersections".into(),
        bad_pairs.is_empty(),
        if bad_pairs.is_empty() {
            "every two lines share exactly one node".into()
        } else {
            format!("violations {}", bad_pairs.join(" "))
        },
    );

    ValidationReport { checks }
}
