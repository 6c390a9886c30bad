//! Constructions and grammars.
//!
//! A construction pairs a name, a set of context constraints, a vehicle (its
//! constituent structure plus feature-of-form tests) and a message template.
//! Grammars are loaded from the s-expression DSL described in the README:
//!
//! ```text
//! (construction sent(cmnd, v.np)
//!   :context ((<hr attends> sr))
//!   :vehicle (:struc (V NP)
//!             :eq ((<V cons_n> verb) (<V M v_type> action_verb) (<NP cons_n> np))
//!             :inh ((<NP governor> <V M sem_type>)))
//!   :message [ [sem_cat command] [a_type <V M sem_type>] [a_obj <NP M>] [agent hr] ])
//!
//! (lexeme "cancel" verb(cancel)
//!   :context ((<lang_code> english) (<lang_channel> text))
//!   :message [ [sem_type delete] ])
//!
//! (abstract verb :message [ [cat verb] [v_type action_verb] ])
//! ```
//!
//! Inside a vehicle, `<V M x>` is attribute `x` of the message of constituent
//! `V`, `<V cons_n>` is the name of the construction that built it and
//! `<V form x>` is one of its form features. `<^ x>` is inherited attribute `x`
//! of the construction itself.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use crate::avm::{self, match_value, overlay, Avm, Bindings, Path, SubstError, Value};
use crate::context::DiscourseContext;
use crate::sexp::{self, Sexp, SyntaxError};

/// Discourse symbols a context constraint may be rooted at.
pub const CONTEXT_SYMBOLS: &[&str] = &["hr", "sr", "p_utter", "lang_code", "lang_channel"];

/// Categories a complete parse may have.
pub const ROOT_HEADS: &[&str] = &["sent", "fragment"];

#[derive(Debug, thiserror::Error)]
pub enum GrammarError {
    #[error("syntax error: {0}")]
    Syntax(#[from] SyntaxError),
    #[error("line {line}: duplicate construction {name}")]
    DuplicateName { name: String, line: usize },
    #[error("line {line}: {construction}: variable {var} is not in struc")]
    DanglingVariable {
        construction: String,
        var: String,
        line: usize,
    },
    #[error("line {line}: {construction}: no construction has head `{category}`")]
    DanglingCategory {
        construction: String,
        category: String,
        line: usize,
    },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
}

fn invalid(line: usize, message: impl Into<String>) -> GrammarError {
    GrammarError::Invalid {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrucElement {
    Token(String),
    /// A token that may be absent, e.g. the comma in "no, but ...".
    OptionalToken(String),
    Var(String),
}

impl StrucElement {
    pub fn var(&self) -> Option<&str> {
        match self {
            StrucElement::Var(v) => Some(v),
            _ => None,
        }
    }
}

/// `<lhs> = rhs` test on the constituents of a vehicle.
///
/// When `rhs` is itself a path the two sides must agree wherever both are
/// present (a taxeme agreement such as article/noun onset).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureEquation {
    pub lhs: Path,
    pub rhs: Value,
}

impl FeatureEquation {
    pub fn is_category(&self) -> bool {
        self.lhs.attrs.len() == 1 && self.lhs.attrs[0] == "cons_n"
    }

    /// Struc variables the equation reads.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        if let Some(v) = self.lhs.root_var() {
            out.insert(v.to_string());
        }
        collect_vars(&self.rhs, &mut out);
        out
    }

    /// Evaluates the equation against constituent records.
    pub fn holds(&self, b: &Bindings) -> bool {
        let Ok(left) = avm::resolve_in(&self.lhs, b) else {
            return false;
        };
        match &self.rhs {
            Value::Path(p) => match avm::resolve_in(p, b) {
                Ok(right) => left == right,
                Err(SubstError::UnresolvablePath(_)) => true,
                Err(_) => false,
            },
            pattern if self.is_category() => category_matches(pattern, &left),
            pattern => match_value(pattern, &left).is_some(),
        }
    }
}

impl FeatureEquation {
    fn holds_partial(&self, b: &Bindings) -> bool {
        // path-rhs agreement tolerates a missing feature on either side
        if let Value::Path(_) = self.rhs {
            if matches!(avm::resolve_in(&self.lhs, b), Err(SubstError::UnresolvablePath(_))) {
                return true;
            }
        }
        self.holds(b)
    }
}

/// Precondition on the discourse state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextConstraint {
    pub lhs: Path,
    pub rhs: Value,
}

impl ContextConstraint {
    pub fn holds(&self, ctx: &Avm) -> bool {
        let Some(actual) = ctx.get_path(&self.lhs.attrs) else {
            return false;
        };
        let expected = match &self.rhs {
            Value::Atom(sym) if sym == "hr" || sym == "sr" => match ctx.get_path(&[sym.as_str(), "id"]) {
                Some(v) => v.clone(),
                None => return false,
            },
            other => other.clone(),
        };
        match_value(&expected, actual).is_some()
    }
}

/// `<VAR attr> = value`: an inherited attribute handed to constituent `VAR`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InheritedEquation {
    pub target: String,
    pub attr: String,
    pub value: Value,
}

/// `modifier` modifies `head`; subject to the domain's attachment filters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attachment {
    pub modifier: String,
    pub head: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vehicle {
    pub struc: Vec<StrucElement>,
    pub equations: Vec<FeatureEquation>,
    pub inherited: Vec<InheritedEquation>,
    pub attachments: Vec<Attachment>,
}

impl Vehicle {
    pub fn position(&self, var: &str) -> Option<usize> {
        self.struc.iter().position(|e| e.var() == Some(var))
    }

    /// The `cons_n` pattern constraining struc variable `var`.
    pub fn category_of(&self, var: &str) -> Option<&Value> {
        self.equations
            .iter()
            .find(|e| e.is_category() && e.lhs.root_var() == Some(var))
            .map(|e| &e.rhs)
    }

    pub fn is_lexical(&self) -> bool {
        self.struc.iter().all(|e| e.var().is_none())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Construction {
    /// `sent(cmnd, v.np)`, `verb(cancel)`, ...
    pub name: Value,
    pub context: Vec<ContextConstraint>,
    pub vehicle: Vehicle,
    /// Message parts, merged left to right after substitution.
    pub message: Vec<Value>,
    /// Form features (taxemes) visible to enclosing vehicles as `<V form x>`.
    pub form: Avm,
    pub line: usize,
}

impl Construction {
    pub fn head(&self) -> &str {
        self.name.head_symbol().unwrap_or("")
    }

    pub fn context_holds(&self, ctx: &Avm) -> bool {
        self.context.iter().all(|c| c.holds(ctx))
    }

    /// The single token of a one-word lexical construction.
    pub fn single_token(&self) -> Option<&str> {
        match self.vehicle.struc.as_slice() {
            [StrucElement::Token(t)] => Some(t),
            _ => None,
        }
    }
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

/// Per construction: inherited attributes handed to constituents and the
/// attributes its message synthesizes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AttributeClasses {
    pub inherited: Vec<(String, String)>,
    pub synthesized: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub construction: String,
    pub attribute: String,
    pub dependency: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: inherited {} depends on {}, which is not to its left",
            self.construction, self.attribute, self.dependency
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct Grammar {
    constructions: Vec<Construction>,
    abstracts: BTreeMap<String, Avm>,
    by_name: HashMap<Value, usize>,
    lexicon: BTreeMap<String, Vec<usize>>,
    by_head: BTreeMap<String, Vec<usize>>,
    classes: Vec<AttributeClasses>,
}

impl PartialEq for Grammar {
    fn eq(&self, other: &Self) -> bool {
        let strip = |cs: &[Construction]| {
            cs.iter()
                .map(|c| Construction { line: 0, ..c.clone() })
                .collect::<Vec<_>>()
        };
        strip(&self.constructions) == strip(&other.constructions) && self.abstracts == other.abstracts
    }
}

/// Whether a `cons_n` pattern admits a construction name. A bare atom names a
/// head (`np` admits `np(det.n)`); terms and wildcards match structurally.
pub fn category_matches(pattern: &Value, name: &Value) -> bool {
    match pattern {
        Value::Atom(h) => name.head_symbol() == Some(h.as_str()),
        _ => match_value(pattern, name).is_some(),
    }
}

fn collect_vars(v: &Value, out: &mut BTreeSet<String>) {
    match v {
        Value::Var(x) => {
            out.insert(x.clone());
        }
        Value::Path(p) | Value::Splice(p) => {
            if let Some(x) = p.root_var() {
                out.insert(x.to_string());
            }
        }
        Value::Avm(a) => a.0.values().for_each(|x| collect_vars(x, out)),
        Value::List(l) => l.iter().for_each(|x| collect_vars(x, out)),
        Value::Term(t) => t.args.iter().for_each(|x| collect_vars(x, out)),
        _ => {}
    }
}

fn collect_paths(v: &Value, out: &mut Vec<String>, vars: &mut Vec<String>) {
    match v {
        Value::Var(x) => {
            out.push(x.clone());
            vars.push(x.clone());
        }
        Value::Path(p) | Value::Splice(p) => {
            out.push(p.to_string());
            vars.push(p.root_var().unwrap_or(avm::INHERITED).to_string());
        }
        Value::Avm(a) => a.0.values().for_each(|x| collect_paths(x, out, vars)),
        Value::List(l) => l.iter().for_each(|x| collect_paths(x, out, vars)),
        Value::Term(t) => t.args.iter().for_each(|x| collect_paths(x, out, vars)),
        _ => {}
    }
}

impl Grammar {
    pub fn from_constructions(
        constructions: Vec<Construction>,
        abstracts: BTreeMap<String, Avm>,
    ) -> Result<Grammar, GrammarError> {
        let mut g = Grammar {
            abstracts,
            ..Grammar::default()
        };
        for c in constructions {
            if g.by_name.contains_key(&c.name) {
                return Err(GrammarError::DuplicateName {
                    name: c.name.to_string(),
                    line: c.line,
                });
            }
            let idx = g.constructions.len();
            g.by_name.insert(c.name.clone(), idx);
            if let Some(t) = c.single_token() {
                g.lexicon.entry(t.to_string()).or_default().push(idx);
            }
            g.by_head.entry(c.head().to_string()).or_default().push(idx);
            g.classes.push(AttributeClasses {
                inherited: c
                    .vehicle
                    .inherited
                    .iter()
                    .map(|e| (e.target.clone(), e.attr.clone()))
                    .collect(),
                synthesized: c
                    .message
                    .iter()
                    .filter_map(Value::as_avm)
                    .flat_map(|a| a.0.keys().cloned())
                    .collect(),
            });
            g.constructions.push(c);
        }
        g.check_references()?;
        Ok(g)
    }

    /// Loads a grammar from DSL text.
    pub fn load(source: &str) -> Result<Grammar, GrammarError> {
        let mut constructions = Vec::new();
        let mut abstracts = BTreeMap::new();
        for form in sexp::read_all(source)? {
            let Sexp::List(items, line) = &form else {
                return Err(invalid(form.line(), "expected a `( ... )` form"));
            };
            match items.first().and_then(Sexp::as_symbol) {
                Some("construction") => constructions.push(parse_construction(items, *line, false)?),
                Some("lexeme") => constructions.push(parse_construction(items, *line, true)?),
                Some("abstract") => {
                    let head = items
                        .get(1)
                        .and_then(Sexp::as_symbol)
                        .ok_or_else(|| invalid(*line, "abstract needs a head"))?;
                    let sections = sections(&items[2..], *line)?;
                    let msg = match sections.get("message").map(Vec::as_slice) {
                        Some([m]) => match Value::from_sexp(m)? {
                            Value::Avm(a) if a.is_ground() => a,
                            _ => return Err(invalid(*line, "abstract message must be a ground AVM")),
                        },
                        _ => return Err(invalid(*line, "abstract needs one :message")),
                    };
                    if abstracts.insert(head.to_string(), msg).is_some() {
                        return Err(GrammarError::DuplicateName {
                            name: head.to_string(),
                            line: *line,
                        });
                    }
                }
                _ => return Err(invalid(*line, "expected construction, lexeme or abstract")),
            }
        }
        Grammar::from_constructions(constructions, abstracts)
    }

    fn check_references(&self) -> Result<(), GrammarError> {
        for c in &self.constructions {
            let v = &c.vehicle;
            let struc_vars: BTreeSet<String> = v.struc.iter().filter_map(|e| e.var().map(String::from)).collect();
            let dangling = |var: &str| GrammarError::DanglingVariable {
                construction: c.name.to_string(),
                var: var.to_string(),
                line: c.line,
            };
            let mut used = BTreeSet::new();
            for part in &c.message {
                collect_vars(part, &mut used);
            }
            for e in &v.equations {
                used.extend(e.vars());
            }
            for e in &v.inherited {
                used.insert(e.target.clone());
                collect_vars(&e.value, &mut used);
            }
            for a in &v.attachments {
                used.insert(a.modifier.clone());
                used.insert(a.head.clone());
            }
            if let Some(var) = used.iter().find(|x| !struc_vars.contains(*x)) {
                return Err(dangling(var));
            }
            for ctx in &c.context {
                let root = ctx.lhs.attrs.first().map(String::as_str).unwrap_or("");
                if ctx.lhs.root.is_some() || !CONTEXT_SYMBOLS.contains(&root) {
                    return Err(invalid(
                        c.line,
                        format!("{}: context path {} is not rooted at a discourse symbol", c.name, ctx.lhs),
                    ));
                }
            }
            for var in &struc_vars {
                let Some(cat) = v.category_of(var) else {
                    return Err(invalid(c.line, format!("{}: {var} has no cons_n equation", c.name)));
                };
                let known = match cat {
                    Value::Atom(h) => self.by_head.contains_key(h),
                    pattern => self.constructions.iter().any(|d| category_matches(pattern, &d.name)),
                };
                if !known {
                    return Err(GrammarError::DanglingCategory {
                        construction: c.name.to_string(),
                        category: cat.to_string(),
                        line: c.line,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn constructions(&self) -> &[Construction] {
        &self.constructions
    }

    pub fn construction(&self, idx: usize) -> &Construction {
        &self.constructions[idx]
    }

    pub fn index_of(&self, name: &Value) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn get(&self, name: &Value) -> Option<&Construction> {
        self.index_of(name).map(|i| &self.constructions[i])
    }

    pub fn abstracts(&self) -> &BTreeMap<String, Avm> {
        &self.abstracts
    }

    pub fn attribute_classes(&self, idx: usize) -> &AttributeClasses {
        &self.classes[idx]
    }

    /// Construction indices whose head is `head`.
    pub fn with_head(&self, head: &str) -> &[usize] {
        self.by_head.get(head).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Construction indices admitted by a `cons_n` pattern.
    pub fn admitted_by(&self, pattern: &Value) -> Vec<usize> {
        match pattern {
            Value::Atom(h) => self.with_head(h).to_vec(),
            Value::Term(t) => self
                .with_head(&t.head)
                .iter()
                .copied()
                .filter(|&i| category_matches(pattern, &self.constructions[i].name))
                .collect(),
            _ => (0..self.constructions.len())
                .filter(|&i| category_matches(pattern, &self.constructions[i].name))
                .collect(),
        }
    }

    pub fn lexical_count(&self) -> usize {
        self.constructions.iter().filter(|c| c.vehicle.is_lexical()).count()
    }

    pub fn production_count(&self) -> usize {
        self.constructions.len() - self.lexical_count()
    }

    /// Instantiates the message of construction `idx` under constituent
    /// bindings, then lays it over the default message of its abstract head.
    pub fn build_message(&self, idx: usize, b: &Bindings) -> Result<Avm, SubstError> {
        let c = &self.constructions[idx];
        let mut msg = Avm::new();
        for part in &c.message {
            match avm::substitute(part, b)? {
                Value::Avm(a) => msg = avm::merge(&msg, &a)?,
                _ => return Err(SubstError::UnresolvablePath(Path::attrs(["M"]))),
            }
        }
        Ok(match self.abstracts.get(c.head()) {
            Some(default) => overlay(default, &msg),
            None => msg,
        })
    }

    /// Lexical constructions for a single token whose context holds, with
    /// their messages. Each sense of a word is a separate entry.
    pub fn lexical_candidates(&self, token: &str, ctx: &DiscourseContext) -> Vec<(&Construction, Avm)> {
        let ctx_avm = ctx.to_avm();
        self.lexicon
            .get(token)
            .into_iter()
            .flatten()
            .filter(|&&i| self.constructions[i].context_holds(&ctx_avm))
            .filter_map(|&i| Some((&self.constructions[i], self.build_message(i, &Bindings::new()).ok()?)))
            .collect()
    }

    /// Checks that every inherited attribute depends only on inherited
    /// attributes of the parent or on constituents to its left.
    pub fn validate_l_attributed(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for c in &self.constructions {
            let v = &c.vehicle;
            for eq in &v.inherited {
                let Some(pos) = v.position(&eq.target) else { continue };
                let mut deps = Vec::new();
                let mut roots = Vec::new();
                collect_paths(&eq.value, &mut deps, &mut roots);
                for (dep, root) in deps.iter().zip(&roots) {
                    let ok = root == avm::INHERITED || v.position(root).is_some_and(|p| p < pos);
                    if !ok {
                        out.push(Violation {
                            construction: c.name.to_string(),
                            attribute: format!("{}.{}", eq.target, eq.attr),
                            dependency: dep.clone(),
                        });
                    }
                }
            }
        }
        out
    }

    /// Serializes the grammar back to DSL text.
    pub fn to_dsl(&self) -> String {
        let mut out = String::new();
        for (head, msg) in &self.abstracts {
            let _ = writeln!(out, "(abstract {head} :message {msg})");
        }
        for c in &self.constructions {
            let _ = write!(out, "(construction {}", c.name);
            if !c.context.is_empty() {
                out.push_str("\n  :context (");
                for k in &c.context {
                    let _ = write!(out, "({} {})", k.lhs, k.rhs);
                }
                out.push(')');
            }
            let v = &c.vehicle;
            out.push_str("\n  :vehicle (:struc (");
            let elems: Vec<String> = v
                .struc
                .iter()
                .map(|e| match e {
                    StrucElement::Token(t) => quote(t),
                    StrucElement::OptionalToken(t) => format!("(? {})", quote(t)),
                    StrucElement::Var(x) => x.clone(),
                })
                .collect();
            out.push_str(&elems.join(" "));
            out.push(')');
            if !v.equations.is_empty() {
                out.push_str(" :eq (");
                for e in &v.equations {
                    let _ = write!(out, "({} {})", e.lhs, e.rhs);
                }
                out.push(')');
            }
            if !v.inherited.is_empty() {
                out.push_str(" :inh (");
                for e in &v.inherited {
                    let _ = write!(out, "(<{} {}> {})", e.target, e.attr, e.value);
                }
                out.push(')');
            }
            if !v.attachments.is_empty() {
                out.push_str(" :attach (");
                for a in &v.attachments {
                    let _ = write!(out, "({} {})", a.modifier, a.head);
                }
                out.push(')');
            }
            out.push(')');
            if !c.message.is_empty() {
                out.push_str("\n  :message");
                for m in &c.message {
                    let _ = write!(out, " {m}");
                }
            }
            if !c.form.is_empty() {
                let _ = write!(out, "\n  :form {}", c.form);
            }
            out.push_str(")\n");
        }
        out
    }
}

fn quote(t: &str) -> String {
    format!("\"{}\"", t.replace('\\', "\\\\").replace('"', "\\\""))
}

fn sections(items: &[Sexp], line: usize) -> Result<BTreeMap<String, Vec<Sexp>>, GrammarError> {
    let mut out: BTreeMap<String, Vec<Sexp>> = BTreeMap::new();
    let mut current: Option<String> = None;
    for item in items {
        if let Some(k) = item.as_keyword() {
            if out.contains_key(k) {
                return Err(invalid(item.line(), format!("repeated :{k}")));
            }
            out.insert(k.to_string(), Vec::new());
            current = Some(k.to_string());
        } else {
            let Some(k) = &current else {
                return Err(invalid(item.line(), "expected a :keyword section"));
            };
            out.get_mut(k).unwrap().push(item.clone());
        }
    }
    let _ = line;
    Ok(out)
}

fn single<'a>(sec: &'a BTreeMap<String, Vec<Sexp>>, key: &str, line: usize) -> Result<Option<&'a Sexp>, GrammarError> {
    match sec.get(key).map(Vec::as_slice) {
        None => Ok(None),
        Some([one]) => Ok(Some(one)),
        Some(_) => Err(invalid(line, format!(":{key} takes exactly one form"))),
    }
}

fn pairs(form: &Sexp) -> Result<Vec<(Sexp, Sexp)>, GrammarError> {
    let Sexp::List(items, line) = form else {
        return Err(invalid(form.line(), "expected a list of pairs"));
    };
    items
        .iter()
        .map(|p| match p {
            Sexp::List(kv, _) if kv.len() == 2 => Ok((kv[0].clone(), kv[1].clone())),
            _ => Err(invalid(*line, "expected a `(lhs rhs)` pair")),
        })
        .collect()
}

fn path_of(s: &Sexp) -> Result<Path, GrammarError> {
    match s {
        Sexp::Path(p, _) => Ok(p.clone()),
        other => Err(invalid(other.line(), "expected a path")),
    }
}

fn parse_construction(items: &[Sexp], line: usize, lexeme: bool) -> Result<Construction, GrammarError> {
    let (struc_from_lexeme, name_pos) = if lexeme {
        let tok = items
            .get(1)
            .and_then(|s| match s {
                Sexp::Str(t, _) => Some(t.clone()),
                _ => None,
            })
            .ok_or_else(|| invalid(line, "lexeme needs a quoted surface token"))?;
        (Some(tok), 2)
    } else {
        (None, 1)
    };
    let name = match items.get(name_pos) {
        Some(s @ (Sexp::Term(..) | Sexp::Atom(..))) => Value::from_sexp(s)?,
        _ => return Err(invalid(line, "expected a construction name")),
    };
    if !name.is_ground() {
        return Err(invalid(line, format!("construction name {name} must be ground")));
    }
    let sec = sections(&items[name_pos + 1..], line)?;
    for k in sec.keys() {
        if !["context", "vehicle", "message", "form"].contains(&k.as_str()) {
            return Err(invalid(line, format!("unknown section :{k}")));
        }
    }

    let mut context = Vec::new();
    if let Some(form) = single(&sec, "context", line)? {
        for (l, r) in pairs(form)? {
            context.push(ContextConstraint {
                lhs: path_of(&l)?,
                rhs: Value::from_sexp(&r)?,
            });
        }
    }

    let mut vehicle = Vehicle::default();
    if let Some(tok) = struc_from_lexeme {
        if sec.contains_key("vehicle") {
            return Err(invalid(line, "a lexeme takes its vehicle from the surface token"));
        }
        vehicle.struc.push(StrucElement::Token(tok));
    } else {
        let form = single(&sec, "vehicle", line)?.ok_or_else(|| invalid(line, "missing :vehicle"))?;
        let Sexp::List(vitems, vline) = form else {
            return Err(invalid(line, ":vehicle must be a list"));
        };
        let vsec = sections(vitems, *vline)?;
        let struc = single(&vsec, "struc", *vline)?.ok_or_else(|| invalid(*vline, "vehicle needs :struc"))?;
        let Sexp::List(elems, _) = struc else {
            return Err(invalid(*vline, ":struc must be a list"));
        };
        for e in elems {
            vehicle.struc.push(match e {
                Sexp::Str(t, _) | Sexp::Atom(t, _) => StrucElement::Token(t.clone()),
                Sexp::Var(v, _) => StrucElement::Var(v.clone()),
                Sexp::List(opt, l) => match opt.as_slice() {
                    [Sexp::Question(_), Sexp::Str(t, _)] => StrucElement::OptionalToken(t.clone()),
                    _ => return Err(invalid(*l, "expected (? \"token\")")),
                },
                other => return Err(invalid(other.line(), "bad struc element")),
            });
        }
        if let Some(eqs) = single(&vsec, "eq", *vline)? {
            for (l, r) in pairs(eqs)? {
                let lhs = path_of(&l)?;
                if lhs.root_var().is_none() {
                    return Err(invalid(l.line(), format!("equation {lhs} must be rooted at a struc variable")));
                }
                vehicle.equations.push(FeatureEquation {
                    lhs,
                    rhs: Value::from_sexp(&r)?,
                });
            }
        }
        if let Some(inh) = single(&vsec, "inh", *vline)? {
            for (l, r) in pairs(inh)? {
                let lhs = path_of(&l)?;
                let (Some(target), [attr]) = (lhs.root_var(), lhs.attrs.as_slice()) else {
                    return Err(invalid(l.line(), format!("inherited attribute {lhs} must be <VAR attr>")));
                };
                vehicle.inherited.push(InheritedEquation {
                    target: target.to_string(),
                    attr: attr.clone(),
                    value: Value::from_sexp(&r)?,
                });
            }
        }
        if let Some(att) = single(&vsec, "attach", *vline)? {
            for (m, h) in pairs(att)? {
                match (m, h) {
                    (Sexp::Var(m, _), Sexp::Var(h, _)) => vehicle.attachments.push(Attachment { modifier: m, head: h }),
                    (m, _) => return Err(invalid(m.line(), "attach takes (MODIFIER HEAD) variables")),
                }
            }
        }
        for k in vsec.keys() {
            if !["struc", "eq", "inh", "attach"].contains(&k.as_str()) {
                return Err(invalid(*vline, format!("unknown vehicle section :{k}")));
            }
        }
    }
    if vehicle.struc.iter().all(|e| matches!(e, StrucElement::OptionalToken(_))) {
        return Err(invalid(line, format!("{name}: struc needs a non-optional element")));
    }

    let message = match sec.get("message") {
        None => Vec::new(),
        Some(parts) => parts
            .iter()
            .map(|p| {
                let v = Value::from_sexp(p)?;
                match v {
                    Value::Avm(_) | Value::Path(_) => Ok(v),
                    _ => Err(invalid(p.line(), "message parts are AVMs or paths")),
                }
            })
            .collect::<Result<_, GrammarError>>()?,
    };
    let form = match single(&sec, "form", line)? {
        None => Avm::new(),
        Some(f) => match Value::from_sexp(f)? {
            Value::Avm(a) if a.is_ground() => a,
            _ => return Err(invalid(line, ":form must be a ground AVM")),
        },
    };
    Ok(Construction {
        name,
        context,
        vehicle,
        message,
        form,
        line,
    })
}

/// Checks every not-yet-checked equation of `c` that becomes decidable once
/// struc position `pos` is bound; `b` holds the constituent records bound so
/// far.
pub(crate) fn equations_hold_at(c: &Construction, pos: usize, b: &Bindings) -> bool {
    let v = &c.vehicle;
    v.equations.iter().all(|e| {
        let last = e
            .vars()
            .iter()
            .filter_map(|x| v.position(x))
            .max();
        last != Some(pos) || e.holds_partial(b)
    })
}

/// Computes the inherited environment handed to the constituent at `pos`.
pub(crate) fn inherited_env(c: &Construction, pos: usize, b: &Bindings) -> Avm {
    let mut env = Avm::new();
    let Some(var) = c.vehicle.struc[pos].var() else {
        return env;
    };
    for e in c.vehicle.inherited.iter().filter(|e| e.target == var) {
        if let Ok(v) = avm::substitute(&e.value, b) {
            env.insert(&e.attr, v);
        }
    }
    env
}
