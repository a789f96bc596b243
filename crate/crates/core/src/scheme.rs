//! Base graphs, scheme validity, the exclusion rules and typed labels.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formal::{Category, OutputType, PrimitiveId};

pub const NODES: usize = 4;
pub const FINAL_NODE: usize = 3;

const BASE_GRAPHS_JSON: &str = include_str!("../data/base_graphs.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseGraph {
    pub id: usize,
    pub edges: Vec<(usize, usize)>,
}

impl BaseGraph {
    /// Predecessors of `node`, ascending.
    pub fn preds(&self, node: usize) -> Vec<usize> {
        let mut p: Vec<usize> = self.edges.iter().filter(|e| e.1 == node).map(|e| e.0).collect();
        p.sort_unstable();
        p
    }

    pub fn succs(&self, node: usize) -> Vec<usize> {
        let mut s: Vec<usize> = self.edges.iter().filter(|e| e.0 == node).map(|e| e.1).collect();
        s.sort_unstable();
        s
    }

    /// Node pairs `(i, j)`, `i < j`, with equal predecessor and successor sets.
    pub fn symmetric_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..NODES {
            for j in i + 1..NODES {
                if self.preds(i) == self.preds(j) && self.succs(i) == self.succs(j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for &(a, b) in &self.edges {
            // Labels run bottom to top, so every edge points to a higher label.
            if a >= b || b >= NODES {
                return Err(Error::Data(format!("graph {}: bad edge {a}->{b}", self.id)));
            }
            if !seen.insert((a, b)) {
                return Err(Error::Data(format!("graph {}: duplicate edge {a}->{b}", self.id)));
            }
        }
        for n in 0..NODES {
            let sink = self.succs(n).is_empty();
            if sink != (n == FINAL_NODE) {
                return Err(Error::Data(format!("graph {}: node {n} sink mismatch", self.id)));
            }
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct GraphFile {
    version: u32,
    graphs: Vec<BaseGraph>,
}

/// The six base graphs, ids 0..5.
pub fn base_graphs() -> Vec<BaseGraph> {
    static GRAPHS: OnceLock<Vec<BaseGraph>> = OnceLock::new();
    GRAPHS
        .get_or_init(|| parse_graphs(BASE_GRAPHS_JSON).expect("bundled base graphs are valid"))
        .clone()
}

pub fn parse_graphs(json: &str) -> Result<Vec<BaseGraph>> {
    let file: GraphFile = serde_json::from_str(json).map_err(|e| Error::Data(e.to_string()))?;
    if file.version != 1 {
        return Err(Error::Data(format!("unsupported graph file version {}", file.version)));
    }
    for (i, g) in file.graphs.iter().enumerate() {
        if g.id != i {
            return Err(Error::Data(format!("graph ids must be 0..n in order, got {}", g.id)));
        }
        g.validate()?;
    }
    Ok(file.graphs)
}

pub type Assignment = [PrimitiveId; NODES];

/// Edge `from -> to` feeds parameter `slot` of `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SlotUse {
    pub from: usize,
    pub to: usize,
    pub slot: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scheme {
    pub scheme_id: String,
    pub graph_id: usize,
    pub assignment: Assignment,
    pub slot_matching: Vec<SlotUse>,
    pub typed_label: TypedGraphLabel,
}

impl Scheme {
    pub fn id_for(graph_id: usize, a: &Assignment) -> String {
        let digits: String = a.iter().map(|p| p.index().to_string()).collect();
        format!("g{graph_id}-{digits}")
    }

    /// Slot of `to` fed by `from`, if that edge exists.
    pub fn slot_of(&self, from: usize, to: usize) -> Option<usize> {
        self.slot_matching
            .iter()
            .find(|u| u.from == from && u.to == to)
            .map(|u| u.slot)
    }

    pub fn primitive_set(&self) -> BTreeSet<PrimitiveId> {
        self.assignment.iter().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TypedGraphLabel {
    pub graph_id: usize,
    /// A for a View output, B otherwise, for nodes 0..2.
    pub letters: [bool; 3],
}

impl TypedGraphLabel {
    pub fn of(graph_id: usize, a: &Assignment) -> TypedGraphLabel {
        let mut letters = [false; 3];
        for (i, l) in letters.iter_mut().enumerate() {
            *l = a[i].spec().output == OutputType::View;
        }
        TypedGraphLabel { graph_id, letters }
    }

    pub fn parse(s: &str) -> Option<TypedGraphLabel> {
        let (g, l) = s.split_once('-')?;
        let graph_id = g.parse().ok()?;
        let bytes = l.as_bytes();
        if bytes.len() != 3 {
            return None;
        }
        let mut letters = [false; 3];
        for (i, b) in bytes.iter().enumerate() {
            letters[i] = match b {
                b'A' => true,
                b'B' => false,
                _ => return None,
            };
        }
        Some(TypedGraphLabel { graph_id, letters })
    }
}

impl fmt::Display for TypedGraphLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l: String = self.letters.iter().map(|&a| if a { 'A' } else { 'B' }).collect();
        write!(f, "{}-{l}", self.graph_id)
    }
}

impl From<TypedGraphLabel> for String {
    fn from(l: TypedGraphLabel) -> String {
        l.to_string()
    }
}

impl TryFrom<String> for TypedGraphLabel {
    type Error = String;
    fn try_from(s: String) -> std::result::Result<Self, String> {
        TypedGraphLabel::parse(&s).ok_or_else(|| format!("bad typed label {s:?}"))
    }
}

pub fn typed_label(s: &Scheme) -> TypedGraphLabel {
    TypedGraphLabel::of(s.graph_id, &s.assignment)
}

/// How rule 3 treats a math node in the final position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalMathRule {
    /// Every final math node is excluded.
    Any,
    /// A final math node is excluded when one of its operands is a literal,
    /// that is, when it has fewer predecessors than parameters.
    LiteralOperand,
}

/// Membership lists and switches for the exclusion rules.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Rules {
    pub filter: Vec<PrimitiveId>,
    pub math: Vec<PrimitiveId>,
    pub count: Vec<PrimitiveId>,
    pub top_k: Vec<PrimitiveId>,
    pub final_math: FinalMathRule,
    /// Exclude schemes in which no node produces a view.
    pub require_scope_node: bool,
    /// Primitives that cannot appear without an incoming edge.
    pub needs_input: Vec<PrimitiveId>,
}

impl Default for Rules {
    fn default() -> Rules {
        let of = |c: Category| -> Vec<PrimitiveId> {
            PrimitiveId::all().filter(|p| p.spec().category == c).collect()
        };
        Rules {
            filter: of(Category::Filter),
            math: of(Category::MathOp),
            count: of(Category::Count),
            top_k: vec![pid(1)],
            final_math: FinalMathRule::LiteralOperand,
            require_scope_node: true,
            needs_input: vec![pid(8)],
        }
    }
}

impl Rules {
    /// The rule set read as literally as possible: plain type validity plus
    /// rules 1 to 4 with every final math node excluded.
    pub fn literal() -> Rules {
        Rules {
            final_math: FinalMathRule::Any,
            require_scope_node: false,
            needs_input: Vec::new(),
            ..Rules::default()
        }
    }
}

pub(crate) fn pid(i: u8) -> PrimitiveId {
    PrimitiveId::new(i).expect("primitive index in range")
}

/// Why an assignment was dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Exclusion {
    ConsecutiveFilter { from: usize, to: usize },
    ConsecutiveMath { from: usize, to: usize },
    CountAfterTopK { node: usize },
    FinalMath,
    SymmetricOrder { first: usize, second: usize },
    NoScopeNode,
}

impl Exclusion {
    /// Short rule name used in breakdown tables.
    pub fn rule(&self) -> &'static str {
        match self {
            Exclusion::ConsecutiveFilter { .. } => "rule1_filter",
            Exclusion::ConsecutiveMath { .. } => "rule1_math",
            Exclusion::CountAfterTopK { .. } => "rule2_count_after_top_k",
            Exclusion::FinalMath => "rule3_final_math",
            Exclusion::SymmetricOrder { .. } => "rule4_symmetric_order",
            Exclusion::NoScopeNode => "no_scope_node",
        }
    }
}

/// Canonical slot matching when every node's predecessors can be matched to
/// distinct parameters of the right type, and every unmatched parameter can be
/// filled with a literal or `all`.
pub fn is_valid_scheme(g: &BaseGraph, a: &Assignment, rules: &Rules) -> Option<Vec<SlotUse>> {
    let mut uses = Vec::new();
    for node in 0..NODES {
        let preds = g.preds(node);
        let prim = a[node];
        if preds.is_empty() && rules.needs_input.contains(&prim) {
            return None;
        }
        let params = &prim.spec().params;
        let types: Vec<OutputType> = preds.iter().map(|&p| a[p].spec().output).collect();
        let mut chosen = vec![usize::MAX; preds.len()];
        let mut used = vec![false; params.len()];
        if !match_slots(params, &types, 0, &mut chosen, &mut used) {
            return None;
        }
        for (&from, &slot) in preds.iter().zip(&chosen) {
            uses.push(SlotUse { from, to: node, slot });
        }
    }
    uses.sort();
    Some(uses)
}

/// Assigns predecessor `i` onward, each to the lowest free compatible slot,
/// backtracking when a later predecessor cannot be placed.
fn match_slots(
    params: &[crate::formal::ParamKind],
    types: &[OutputType],
    i: usize,
    chosen: &mut [usize],
    used: &mut [bool],
) -> bool {
    if i == types.len() {
        return params
            .iter()
            .zip(used.iter())
            .all(|(k, &u)| u || k.has_default());
    }
    for s in 0..params.len() {
        if !used[s] && params[s].edge_type() == Some(types[i]) {
            used[s] = true;
            chosen[i] = s;
            if match_slots(params, types, i + 1, chosen, used) {
                return true;
            }
            used[s] = false;
        }
    }
    false
}

/// Every exclusion that applies to a valid assignment.
pub fn exclusions(g: &BaseGraph, a: &Assignment, rules: &Rules) -> Vec<Exclusion> {
    let mut out = Vec::new();
    for &(from, to) in &g.edges {
        if rules.filter.contains(&a[from]) && rules.filter.contains(&a[to]) {
            out.push(Exclusion::ConsecutiveFilter { from, to });
        }
        if rules.math.contains(&a[from]) && rules.math.contains(&a[to]) {
            out.push(Exclusion::ConsecutiveMath { from, to });
        }
    }
    for node in 0..NODES {
        let preds = g.preds(node);
        if rules.count.contains(&a[node]) && preds.len() == 1 && rules.top_k.contains(&a[preds[0]]) {
            out.push(Exclusion::CountAfterTopK { node });
        }
    }
    let last = a[FINAL_NODE];
    if rules.math.contains(&last) {
        let fires = match rules.final_math {
            FinalMathRule::Any => true,
            FinalMathRule::LiteralOperand => g.preds(FINAL_NODE).len() < last.spec().arity(),
        };
        if fires {
            out.push(Exclusion::FinalMath);
        }
    }
    for (first, second) in g.symmetric_pairs() {
        if a[first] > a[second] {
            out.push(Exclusion::SymmetricOrder { first, second });
        }
    }
    if rules.require_scope_node && a.iter().all(|p| p.spec().output != OutputType::View) {
        out.push(Exclusion::NoScopeNode);
    }
    out
}

pub fn passes_exclusions(g: &BaseGraph, a: &Assignment, rules: &Rules) -> bool {
    exclusions(g, a, rules).is_empty()
}

fn all_assignments() -> impl Iterator<Item = Assignment> {
    (0..10usize.pow(NODES as u32)).map(|n| {
        let d = |k: u32| pid(((n / 10usize.pow(k)) % 10) as u8);
        [d(3), d(2), d(1), d(0)]
    })
}

/// All valid, non-excluded schemes over the given graphs, ordered by graph id
/// and then assignment.
pub fn enumerate_with(graphs: &[BaseGraph], rules: &Rules) -> Vec<Scheme> {
    let mut out = Vec::new();
    for g in graphs {
        for a in all_assignments() {
            let Some(slot_matching) = is_valid_scheme(g, &a, rules) else {
                continue;
            };
            if passes_exclusions(g, &a, rules) {
                out.push(Scheme {
                    scheme_id: Scheme::id_for(g.id, &a),
                    graph_id: g.id,
                    assignment: a,
                    slot_matching,
                    typed_label: TypedGraphLabel::of(g.id, &a),
                });
            }
        }
    }
    out
}

pub fn enumerate_schemes() -> Vec<Scheme> {
    enumerate_with(&base_graphs(), &Rules::default())
}

/// Per-rule counts over valid assignments: how many each rule fires on, and
/// how many it alone removes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Breakdown {
    pub valid: usize,
    pub kept: usize,
    pub fired: std::collections::BTreeMap<String, usize>,
    pub sole_cause: std::collections::BTreeMap<String, usize>,
}

pub fn exclusion_breakdown(graphs: &[BaseGraph], rules: &Rules) -> Breakdown {
    let mut b = Breakdown::default();
    for g in graphs {
        for a in all_assignments() {
            if is_valid_scheme(g, &a, rules).is_none() {
                continue;
            }
            b.valid += 1;
            let ex = exclusions(g, &a, rules);
            let rules_hit: BTreeSet<&str> = ex.iter().map(Exclusion::rule).collect();
            if rules_hit.is_empty() {
                b.kept += 1;
            }
            for r in &rules_hit {
                *b.fired.entry(r.to_string()).or_default() += 1;
            }
            if rules_hit.len() == 1 {
                let r = rules_hit.iter().next().expect("one rule");
                *b.sole_cause.entry(r.to_string()).or_default() += 1;
            }
        }
    }
    b
}
