//! The formal language: primitive signatures, naming schemes, the expression
//! grammar, rendering and parsing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Type carried by a variable. Each has its own name prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OutputType {
    View,
    Value,
    Row,
    Column,
}

impl OutputType {
    pub const ALL: [OutputType; 4] = [
        OutputType::View,
        OutputType::Value,
        OutputType::Row,
        OutputType::Column,
    ];

    pub fn prefix(self) -> &'static str {
        match self {
            OutputType::View => "view",
            OutputType::Value => "value",
            OutputType::Row => "row",
            OutputType::Column => "col",
        }
    }

    /// Kind implied by a variable name such as `view_3`.
    pub fn of_variable(name: &str) -> Option<OutputType> {
        let (prefix, digits) = name.rsplit_once('_')?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        OutputType::ALL.into_iter().find(|t| t.prefix() == prefix)
    }
}

/// What a parameter slot accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParamKind {
    /// A variable of the given type. `all` is accepted only for views.
    Var(OutputType),
    /// An `attr_<digits>` token.
    AttrLiteral,
    /// A positive integer, or a Value variable.
    NumberLiteral,
    /// A small positive integer.
    KLiteral,
    /// An `attr_<digits>` token or a Column variable.
    ColumnSlot,
}

impl ParamKind {
    /// Variable type this slot can receive along a graph edge.
    pub fn edge_type(self) -> Option<OutputType> {
        match self {
            ParamKind::Var(t) => Some(t),
            ParamKind::NumberLiteral => Some(OutputType::Value),
            ParamKind::ColumnSlot => Some(OutputType::Column),
            ParamKind::AttrLiteral | ParamKind::KLiteral => None,
        }
    }

    /// Whether the slot can be filled without an incoming edge.
    pub fn has_default(self) -> bool {
        !matches!(self, ParamKind::Var(OutputType::Row | OutputType::Value | OutputType::Column))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Filter,
    MathOp,
    Count,
    Other,
}

/// Index of a primitive, `f0` through `f9`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PrimitiveId(u8);

impl PrimitiveId {
    pub const COUNT: usize = 10;

    pub fn new(index: u8) -> Option<PrimitiveId> {
        ((index as usize) < Self::COUNT).then_some(PrimitiveId(index))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn all() -> impl Iterator<Item = PrimitiveId> {
        (0..Self::COUNT as u8).map(PrimitiveId)
    }

    /// Parses the opaque form `fN`.
    pub fn parse(s: &str) -> Option<PrimitiveId> {
        let digits = s.strip_prefix('f')?;
        if digits.len() != 1 {
            return None;
        }
        PrimitiveId::new(digits.parse().ok()?)
    }

    pub fn spec(self) -> &'static PrimitiveSpec {
        &registry()[self.index()]
    }
}

impl fmt::Display for PrimitiveId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.0)
    }
}

impl From<PrimitiveId> for String {
    fn from(p: PrimitiveId) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for PrimitiveId {
    type Error = String;
    fn try_from(s: String) -> std::result::Result<Self, String> {
        PrimitiveId::parse(&s).ok_or_else(|| format!("not a primitive id: {s}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrimitiveSpec {
    pub id: PrimitiveId,
    pub intuitive_name: &'static str,
    pub params: Vec<ParamKind>,
    pub output: OutputType,
    pub category: Category,
    pub swappable: bool,
    pub gloss: &'static str,
}

impl PrimitiveSpec {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

/// The ten primitives in id order.
pub fn primitive_registry() -> Vec<PrimitiveSpec> {
    registry().to_vec()
}

pub(crate) fn registry() -> &'static [PrimitiveSpec] {
    static REGISTRY: OnceLock<Vec<PrimitiveSpec>> = OnceLock::new();
    REGISTRY.get_or_init(build_registry)
}

fn build_registry() -> Vec<PrimitiveSpec> {
    use OutputType::*;
    use ParamKind::*;
    let rows: [(&str, Vec<ParamKind>, OutputType, Category, &str); 10] = [
        (
            "filter_gt",
            vec![Var(View), AttrLiteral, NumberLiteral],
            View,
            Category::Filter,
            "rows of view whose column value exceeds value",
        ),
        (
            "top_k",
            vec![Var(View), AttrLiteral, KLiteral],
            View,
            // A ranking, not a predicate filter: chains such as top_k over a
            // filtered view are kept by the consecutive-filter rule.
            Category::Other,
            "rows of view whose column value is in the top k",
        ),
        (
            "filter_gt_c",
            vec![Var(View), AttrLiteral, ColumnSlot],
            View,
            Category::Filter,
            "rows of view where column1 exceeds column2",
        ),
        (
            "kth_max",
            vec![Var(View), AttrLiteral, KLiteral],
            Value,
            Category::Other,
            "k-th largest value of column in view",
        ),
        ("sum", vec![Var(View), AttrLiteral], Value, Category::Other, "sum of column in view"),
        ("count", vec![Var(View)], Value, Category::Count, "number of rows in view"),
        (
            "kth_argmax",
            vec![Var(View), AttrLiteral, KLiteral],
            Row,
            Category::Other,
            "row holding the k-th largest value of column",
        ),
        ("hop", vec![Var(Row), AttrLiteral], Value, Category::Other, "value of column in row"),
        (
            "add",
            vec![NumberLiteral, NumberLiteral],
            Value,
            Category::MathOp,
            "value1 plus value2",
        ),
        (
            "add_c",
            vec![AttrLiteral, NumberLiteral],
            Column,
            Category::MathOp,
            "column with value added to every entry",
        ),
    ];
    rows.into_iter()
        .enumerate()
        .map(|(i, (name, params, output, category, gloss))| PrimitiveSpec {
            id: PrimitiveId(i as u8),
            intuitive_name: name,
            params,
            output,
            category,
            swappable: i == 8,
            gloss,
        })
        .collect()
}

/// Which naming table is in force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NamingKind {
    Opaque,
    Anomalous,
    CrossMapping,
}

/// Surface names for the ten primitives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamingScheme {
    pub kind: NamingKind,
    names: Vec<String>,
}

pub const DEFAULT_ANOMALOUS: [&str; 10] = [
    "filter_le",
    "bottom_k",
    "filter_le_c",
    "kth_min",
    "product",
    "width",
    "kth_argmin",
    "drop",
    "subtract",
    "subtract_c",
];

/// f1 takes kth_max and f3 takes top_k; the other eight shift cyclically
/// among themselves.
pub const DEFAULT_CROSS: [&str; 10] = [
    "filter_gt_c",
    "kth_max",
    "sum",
    "top_k",
    "count",
    "kth_argmax",
    "hop",
    "add",
    "add_c",
    "filter_gt",
];

impl NamingScheme {
    pub fn opaque() -> NamingScheme {
        NamingScheme {
            kind: NamingKind::Opaque,
            names: PrimitiveId::all().map(|p| p.to_string()).collect(),
        }
    }

    pub fn anomalous() -> NamingScheme {
        Self::from_names(NamingKind::Anomalous, DEFAULT_ANOMALOUS.map(String::from).to_vec())
            .expect("default anomalous table is valid")
    }

    pub fn cross_mapping() -> NamingScheme {
        Self::from_names(NamingKind::CrossMapping, DEFAULT_CROSS.map(String::from).to_vec())
            .expect("default cross-mapping table is valid")
    }

    pub fn default_for(kind: NamingKind) -> NamingScheme {
        match kind {
            NamingKind::Opaque => Self::opaque(),
            NamingKind::Anomalous => Self::anomalous(),
            NamingKind::CrossMapping => Self::cross_mapping(),
        }
    }

    /// Builds a table keyed by primitive id, as stored in config files.
    pub fn from_table(kind: NamingKind, table: &BTreeMap<String, String>) -> Result<NamingScheme> {
        let mut names = Vec::with_capacity(PrimitiveId::COUNT);
        for p in PrimitiveId::all() {
            let name = table
                .get(&p.to_string())
                .ok_or_else(|| Error::Naming(format!("no surface name for {p}")))?;
            names.push(name.clone());
        }
        if table.len() != PrimitiveId::COUNT {
            return Err(Error::Naming("naming table has keys other than f0..f9".into()));
        }
        Self::from_names(kind, names)
    }

    pub fn from_names(kind: NamingKind, names: Vec<String>) -> Result<NamingScheme> {
        if names.len() != PrimitiveId::COUNT {
            return Err(Error::Naming(format!("expected 10 names, got {}", names.len())));
        }
        let distinct: BTreeSet<&str> = names.iter().map(String::as_str).collect();
        if distinct.len() != names.len() {
            return Err(Error::Naming("two primitives share a surface name".into()));
        }
        for n in &names {
            if !is_identifier(n) || n == "all" || OutputType::of_variable(n).is_some() {
                return Err(Error::Naming(format!("unusable surface name {n:?}")));
            }
        }
        let intuitive: BTreeSet<&str> = registry().iter().map(|s| s.intuitive_name).collect();
        match kind {
            NamingKind::Opaque => {
                if names.iter().zip(PrimitiveId::all()).any(|(n, p)| *n != p.to_string()) {
                    return Err(Error::Naming("opaque naming must map fi to fi".into()));
                }
            }
            NamingKind::Anomalous => {
                if let Some(n) = names.iter().find(|n| intuitive.contains(n.as_str())) {
                    return Err(Error::Naming(format!("anomalous name {n} is an intuitive name")));
                }
            }
            NamingKind::CrossMapping => {
                for (n, spec) in names.iter().zip(registry()) {
                    if !intuitive.contains(n.as_str()) {
                        return Err(Error::Naming(format!("cross-mapping name {n} is not intuitive")));
                    }
                    if n == spec.intuitive_name {
                        return Err(Error::Naming(format!("{} keeps its own name", spec.id)));
                    }
                }
            }
        }
        Ok(NamingScheme { kind, names })
    }

    pub fn surface(&self, p: PrimitiveId) -> &str {
        &self.names[p.index()]
    }

    pub fn resolve(&self, name: &str) -> Option<PrimitiveId> {
        self.names
            .iter()
            .position(|n| n == name)
            .and_then(|i| PrimitiveId::new(i as u8))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Table keyed by primitive id, the config-file form.
    pub fn to_table(&self) -> BTreeMap<String, String> {
        PrimitiveId::all()
            .map(|p| (p.to_string(), self.surface(p).to_string()))
            .collect()
    }

    /// The inverse table as a naming of the same kind. Only meaningful for
    /// cross-mapping, where the image is the intuitive-name set.
    pub fn inverse_cross(&self) -> Result<NamingScheme> {
        let mut names = vec![String::new(); PrimitiveId::COUNT];
        for p in PrimitiveId::all() {
            let target = registry()
                .iter()
                .find(|s| s.intuitive_name == self.surface(p))
                .ok_or_else(|| Error::Naming("not a cross-mapping table".into()))?;
            names[target.id.index()] = p.spec().intuitive_name.to_string();
        }
        Self::from_names(NamingKind::CrossMapping, names)
    }
}

/// One argument of an expression.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Arg {
    All,
    Var(String),
    Attr(u32),
    Int(u64),
}

impl Arg {
    pub fn var(name: impl Into<String>) -> Arg {
        Arg::Var(name.into())
    }

    fn from_token(tok: &str) -> Option<Arg> {
        if tok == "all" {
            return Some(Arg::All);
        }
        if tok.bytes().all(|b| b.is_ascii_digit()) {
            return match tok.parse::<u64>() {
                Ok(n) if n.to_string() == tok => Some(Arg::Int(n)),
                _ if tok.is_empty() => None,
                _ => Some(Arg::Var(tok.to_string())),
            };
        }
        if !is_identifier(tok) {
            return None;
        }
        if let Some(d) = tok.strip_prefix("attr_") {
            if let Ok(n) = d.parse::<u32>() {
                if n.to_string() == d {
                    return Some(Arg::Attr(n));
                }
            }
        }
        Some(Arg::Var(tok.to_string()))
    }
}

impl fmt::Display for Arg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arg::All => f.write_str("all"),
            Arg::Var(v) => f.write_str(v),
            Arg::Attr(n) => write!(f, "attr_{n}"),
            Arg::Int(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Expression {
    pub lhs: String,
    pub callee: String,
    pub args: Vec<Arg>,
}

impl Expression {
    pub fn new(lhs: impl Into<String>, callee: impl Into<String>, args: Vec<Arg>) -> Expression {
        Expression {
            lhs: lhs.into(),
            callee: callee.into(),
            args,
        }
    }

    /// `callee (a, b, c)` without the assignment.
    pub fn call_text(&self) -> String {
        call_text(&self.callee, &self.args)
    }
}

pub(crate) fn call_text(callee: &str, args: &[Arg]) -> String {
    let joined: Vec<String> = args.iter().map(Arg::to_string).collect();
    format!("{callee} ({})", joined.join(", "))
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} := {};", self.lhs, self.call_text())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Program {
    pub expressions: Vec<Expression>,
}

impl Program {
    pub fn new(expressions: Vec<Expression>) -> Program {
        Program { expressions }
    }

    pub fn len(&self) -> usize {
        self.expressions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.expressions.is_empty()
    }

    /// Primitive id of each expression when callees are opaque ids.
    pub fn primitive_ids(&self) -> Option<Vec<PrimitiveId>> {
        self.expressions
            .iter()
            .map(|e| PrimitiveId::parse(&e.callee))
            .collect()
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.expressions.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// Renders a program whose callees are primitive ids under naming `n`.
pub fn render_program(p: &Program, n: &NamingScheme) -> Result<String> {
    let mut lines = Vec::with_capacity(p.len());
    for e in &p.expressions {
        let id = PrimitiveId::parse(&e.callee)
            .ok_or_else(|| Error::Render(format!("unknown primitive id {:?}", e.callee)))?;
        lines.push(format!("{} := {};", e.lhs, call_text(n.surface(id), &e.args)));
    }
    Ok(lines.join("\n"))
}

/// Renames callees from one naming to another, leaving everything else as is.
pub fn apply_naming(p: &Program, from: &NamingScheme, to: &NamingScheme) -> Result<Program> {
    let expressions = p
        .expressions
        .iter()
        .map(|e| {
            let id = from
                .resolve(&e.callee)
                .ok_or_else(|| Error::UnresolvableName(e.callee.clone()))?;
            Ok(Expression {
                lhs: e.lhs.clone(),
                callee: to.surface(id).to_string(),
                args: e.args.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Program { expressions })
}

/// A stretch of input the parser did not recognize as a statement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parsed {
    pub program: Program,
    pub skipped: Vec<Span>,
    /// Indices of statements accepted without a trailing semicolon.
    pub missing_semicolon: Vec<usize>,
}

fn statement_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"([A-Za-z_][A-Za-z0-9_]*)[ \t]*:=[ \t]*([A-Za-z_][A-Za-z0-9_]*)[ \t]*\(([^()\n]*)\)([ \t]*;)?",
        )
        .expect("statement regex")
    })
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Extracts every assignment statement from arbitrary text.
pub fn parse_program(text: &str) -> Result<Parsed> {
    let mut expressions = Vec::new();
    let mut skipped = Vec::new();
    let mut missing_semicolon = Vec::new();
    let mut cursor = 0;
    let push_gap = |from: usize, to: usize, skipped: &mut Vec<Span>| {
        let gap = &text[from..to];
        let trimmed = gap.trim();
        if !trimmed.is_empty() {
            let start = from + (gap.len() - gap.trim_start().len());
            skipped.push(Span {
                start,
                end: start + trimmed.len(),
                text: trimmed.to_string(),
            });
        }
    };
    for caps in statement_re().captures_iter(text) {
        let whole = caps.get(0).expect("match");
        let args: Option<Vec<Arg>> = caps[3].split(',').map(|a| Arg::from_token(a.trim())).collect();
        let Some(args) = args else {
            continue;
        };
        push_gap(cursor, whole.start(), &mut skipped);
        cursor = whole.end();
        if caps.get(4).is_none() {
            missing_semicolon.push(expressions.len());
        }
        expressions.push(Expression::new(&caps[1], &caps[2], args));
    }
    push_gap(cursor, text.len(), &mut skipped);
    if expressions.is_empty() {
        return Err(Error::NoProgram { skipped: skipped.len() });
    }
    Ok(Parsed {
        program: Program { expressions },
        skipped,
        missing_semicolon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variable_prefixes_map_to_one_kind() {
        assert_eq!(OutputType::of_variable("view_1"), Some(OutputType::View));
        assert_eq!(OutputType::of_variable("value_12"), Some(OutputType::Value));
        assert_eq!(OutputType::of_variable("row_3"), Some(OutputType::Row));
        assert_eq!(OutputType::of_variable("col_1"), Some(OutputType::Column));
        assert_eq!(OutputType::of_variable("result"), None);
        assert_eq!(OutputType::of_variable("view_"), None);
    }

    #[test]
    fn rejected_argument_list_is_skipped_not_truncated() {
        let parsed = parse_program("x := f0 (all, -3, 5);\nresult := f5 (all);").unwrap();
        assert_eq!(parsed.program.len(), 1);
        assert_eq!(parsed.skipped.len(), 1);
        assert_eq!(parsed.skipped[0].text, "x := f0 (all, -3, 5);");
    }

    #[test]
    fn leading_zero_literals_stay_raw() {
        let parsed = parse_program("result := f3 (all, attr_07, 007);").unwrap();
        let args = &parsed.program.expressions[0].args;
        assert_eq!(args[1], Arg::var("attr_07"));
        assert_eq!(parsed.program.to_string(), "result := f3 (all, attr_07, 007);");
    }
}
