//! Attribute-value matrices.
//!
//! An [`Avm`] is a tree-shaped map from attribute names to [`Value`]s. The same
//! type carries parsed messages, discourse contexts, slot values and, when it
//! contains variables or paths, message templates.
//!
//! The canonical text form mirrors the bracketed display used throughout the
//! project: an AVM is a bracket of rows, `[ [ hour [ 5 am_or_pm ] ] [ minute 0 ] ]`,
//! a list of scalars is a plain bracket `[ 5 am_or_pm ]`, and any other list
//! is written with parentheses. [`Value::from_str`] reads it back.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};

use crate::sexp::{self, Sexp, SyntaxError};

/// Variable bindings produced by [`match_value`] and consumed by [`substitute`].
///
/// Inherited attributes of the construction being built are bound under the
/// reserved key [`INHERITED`].
pub type Bindings = BTreeMap<String, Value>;

/// Binding key used for `<^ ...>` paths.
pub const INHERITED: &str = "^";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PathRoot {
    Var(String),
    /// `^`: the inherited attributes of the construction being built.
    Inherited,
}

/// A path such as `<V M v_type>` (rooted at `V`) or `<hr attends>` (unrooted).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path {
    pub root: Option<PathRoot>,
    pub attrs: Vec<String>,
}

impl Path {
    pub fn attrs<I, S>(attrs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Path {
            root: None,
            attrs: attrs.into_iter().map(Into::into).collect(),
        }
    }

    pub fn var<I, S>(var: &str, attrs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Path {
            root: Some(PathRoot::Var(var.to_string())),
            attrs: attrs.into_iter().map(Into::into).collect(),
        }
    }

    pub fn root_var(&self) -> Option<&str> {
        match &self.root {
            Some(PathRoot::Var(v)) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<")?;
        let mut parts: Vec<&str> = Vec::new();
        match &self.root {
            Some(PathRoot::Var(v)) => parts.push(v),
            Some(PathRoot::Inherited) => parts.push(INHERITED),
            None => {}
        }
        parts.extend(self.attrs.iter().map(String::as_str));
        f.write_str(&parts.join(" "))?;
        f.write_str(">")
    }
}

/// A constructor term such as `sent(cmnd, v.np)` or `time(hour)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term {
    pub head: String,
    pub args: Vec<Value>,
}

impl Term {
    pub fn new(head: impl Into<String>, args: Vec<Value>) -> Self {
        Term {
            head: head.into(),
            args,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.head)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    /// A symbol (`schedule`) or a quoted string (`"a conference"`).
    Atom(String),
    Num(i64),
    Avm(Avm),
    List(Vec<Value>),
    Term(Term),
    Var(String),
    Wildcard,
    /// Template-only: replaced by the value found at the path.
    Path(Path),
    /// Template-only, list element: spliced in from a list found at the path.
    Splice(Path),
}

impl Value {
    pub fn atom(s: impl Into<String>) -> Value {
        Value::Atom(s.into())
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Value::Atom(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_num(&self) -> Option<i64> {
        match self {
            Value::Num(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_avm(&self) -> Option<&Avm> {
        match self {
            Value::Avm(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Value]> {
        match self {
            Value::List(l) => Some(l),
            _ => None,
        }
    }

    pub fn as_term(&self) -> Option<&Term> {
        match self {
            Value::Term(t) => Some(t),
            _ => None,
        }
    }

    /// Head symbol of an atom or term; used for sort lookups like `time(hour)` → `time`.
    pub fn head_symbol(&self) -> Option<&str> {
        match self {
            Value::Atom(s) => Some(s),
            Value::Term(t) => Some(&t.head),
            _ => None,
        }
    }

    /// True when the value contains no variables, wildcards, paths or splices.
    pub fn is_ground(&self) -> bool {
        match self {
            Value::Atom(_) | Value::Num(_) => true,
            Value::Avm(a) => a.is_ground(),
            Value::List(l) => l.iter().all(Value::is_ground),
            Value::Term(t) => t.args.iter().all(Value::is_ground),
            Value::Var(_) | Value::Wildcard | Value::Path(_) | Value::Splice(_) => false,
        }
    }

    fn is_scalar(&self) -> bool {
        !matches!(self, Value::Avm(_) | Value::List(_))
    }

    pub(crate) fn from_sexp(s: &Sexp) -> Result<Value, SyntaxError> {
        Ok(match s {
            Sexp::Atom(a, _) | Sexp::Str(a, _) => Value::Atom(a.clone()),
            Sexp::Num(n, _) => Value::Num(*n),
            Sexp::Var(v, _) => Value::Var(v.clone()),
            Sexp::Wildcard(_) => Value::Wildcard,
            Sexp::Path(p, _) => Value::Path(p.clone()),
            Sexp::Splice(p, _) => Value::Splice(p.clone()),
            Sexp::Term(h, args, _) => Value::Term(Term {
                head: h.clone(),
                args: args.iter().map(Value::from_sexp).collect::<Result<_, _>>()?,
            }),
            Sexp::List(items, _) => {
                Value::List(items.iter().map(Value::from_sexp).collect::<Result<_, _>>()?)
            }
            Sexp::Bracket(items, line) => match items.first() {
                None => Value::Avm(Avm::new()),
                Some(Sexp::Bracket(..)) => {
                    let mut avm = Avm::new();
                    for row in items {
                        let Sexp::Bracket(cells, l) = row else {
                            return Err(SyntaxError::new(row.line(), "expected `[ attribute value ]` row"));
                        };
                        let (key, value) = match cells.as_slice() {
                            [Sexp::Atom(k, _) | Sexp::Var(k, _), v] => (k.clone(), Value::from_sexp(v)?),
                            _ => return Err(SyntaxError::new(*l, "expected `[ attribute value ]` row")),
                        };
                        if avm.0.insert(key.clone(), value).is_some() {
                            return Err(SyntaxError::new(*l, format!("duplicate attribute `{key}`")));
                        }
                    }
                    Value::Avm(avm)
                }
                Some(_) => {
                    let vals: Vec<Value> = items.iter().map(Value::from_sexp).collect::<Result<_, _>>()?;
                    if vals.iter().any(|v| !v.is_scalar()) {
                        return Err(SyntaxError::new(*line, "bracket lists hold scalars only; use ( ... )"));
                    }
                    Value::List(vals)
                }
            },
            Sexp::Keyword(k, l) => return Err(SyntaxError::new(*l, format!("unexpected keyword :{k}"))),
            Sexp::Question(l) => return Err(SyntaxError::new(*l, "unexpected `?`")),
        })
    }
}

fn write_atom(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    let mut chars = s.chars();
    let bare = chars.next().is_some_and(sexp::is_ident_start) && chars.all(sexp::is_ident_char);
    if bare {
        f.write_str(s)
    } else {
        write!(f, "\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Atom(s) => write_atom(f, s),
            Value::Num(n) => write!(f, "{n}"),
            Value::Avm(a) => write!(f, "{a}"),
            Value::List(items) => {
                let (open, close) = if !items.is_empty() && items.iter().all(Value::is_scalar) {
                    ("[", "]")
                } else {
                    ("(", ")")
                };
                f.write_str(open)?;
                for v in items {
                    write!(f, " {v}")?;
                }
                write!(f, " {close}")
            }
            Value::Term(t) => write!(f, "{t}"),
            Value::Var(v) => f.write_str(v),
            Value::Wildcard => f.write_str("*"),
            Value::Path(p) => write!(f, "{p}"),
            Value::Splice(p) => write!(f, "@{p}"),
        }
    }
}

impl FromStr for Value {
    type Err = SyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Value::from_sexp(&sexp::read_one(s)?)
    }
}

impl From<Avm> for Value {
    fn from(a: Avm) -> Self {
        Value::Avm(a)
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Value::Num(n)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Atom(s.to_string())
    }
}

impl From<Term> for Value {
    fn from(t: Term) -> Self {
        Value::Term(t)
    }
}

/// Attribute-value matrix. Attribute order is alphabetical.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Avm(pub BTreeMap<String, Value>);

impl Avm {
    pub fn new() -> Self {
        Avm(BTreeMap::new())
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.0.insert(key.to_string(), value.into());
        self
    }

    pub fn insert(&mut self, key: &str, value: impl Into<Value>) -> Option<Value> {
        self.0.insert(key.to_string(), value.into())
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.0.get(key)
    }

    pub fn remove(&mut self, key: &str) -> Option<Value> {
        self.0.remove(key)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.0.iter()
    }

    /// Successive attribute lookup.
    pub fn get_path<S: AsRef<str>>(&self, attrs: &[S]) -> Option<&Value> {
        let (first, rest) = attrs.split_first()?;
        let mut cur = self.0.get(first.as_ref())?;
        for a in rest {
            cur = cur.as_avm()?.0.get(a.as_ref())?;
        }
        Some(cur)
    }

    pub fn is_ground(&self) -> bool {
        self.0.values().all(Value::is_ground)
    }
}

impl fmt::Display for Avm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (k, v) in &self.0 {
            write!(f, " [ {k} {v} ]")?;
        }
        f.write_str(" ]")
    }
}

impl FromStr for Avm {
    type Err = SyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.parse::<Value>()? {
            Value::Avm(a) => Ok(a),
            _ => Err(SyntaxError::new(1, "expected an attribute-value matrix")),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Atom(a) => s.serialize_str(a),
            Value::Num(n) => s.serialize_i64(*n),
            Value::Avm(a) => a.serialize(s),
            Value::List(items) => {
                let mut seq = s.serialize_seq(Some(items.len()))?;
                for v in items {
                    seq.serialize_element(v)?;
                }
                seq.end()
            }
            other => s.serialize_str(&other.to_string()),
        }
    }
}

impl Serialize for Avm {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

/// Value at `attrs` inside `avm`, or `None` when any step is missing.
pub fn resolve<'a, S: AsRef<str>>(avm: &'a Avm, attrs: &[S]) -> Option<&'a Value> {
    avm.get_path(attrs)
}

/// Matches a pattern against a ground subject.
///
/// The subject may carry attributes the pattern does not mention. A list
/// pattern matches when its elements match a subsequence of the subject list
/// in order. A bare atom pattern does not match a term.
pub fn match_value(pattern: &Value, subject: &Value) -> Option<Bindings> {
    let mut b = Bindings::new();
    if match_into(pattern, subject, &mut b) {
        Some(b)
    } else {
        None
    }
}

fn match_into(pattern: &Value, subject: &Value, b: &mut Bindings) -> bool {
    match (pattern, subject) {
        (Value::Wildcard, _) => true,
        (Value::Var(v), s) => match b.get(v) {
            Some(bound) => bound == s,
            None => {
                b.insert(v.clone(), s.clone());
                true
            }
        },
        (Value::Atom(a), Value::Atom(c)) => a == c,
        (Value::Num(a), Value::Num(c)) => a == c,
        (Value::Term(p), Value::Term(s)) => {
            p.head == s.head
                && p.args.len() == s.args.len()
                && p.args.iter().zip(&s.args).all(|(pa, sa)| match_into(pa, sa, b))
        }
        (Value::Avm(p), Value::Avm(s)) => p
            .0
            .iter()
            .all(|(k, pv)| s.0.get(k).is_some_and(|sv| match_into(pv, sv, b))),
        (Value::List(p), Value::List(s)) => match_subsequence(p, s, b),
        _ => false,
    }
}

fn match_subsequence(pattern: &[Value], subject: &[Value], b: &mut Bindings) -> bool {
    let Some((first, rest)) = pattern.split_first() else {
        return true;
    };
    for (i, s) in subject.iter().enumerate() {
        let mut trial = b.clone();
        if match_into(first, s, &mut trial) && match_subsequence(rest, &subject[i + 1..], &mut trial) {
            *b = trial;
            return true;
        }
    }
    false
}

/// `match_value` over AVMs.
pub fn match_avm(pattern: &Avm, subject: &Avm) -> Option<Bindings> {
    let mut b = Bindings::new();
    pattern
        .0
        .iter()
        .all(|(k, pv)| subject.0.get(k).is_some_and(|sv| match_into(pv, sv, &mut b)))
        .then_some(b)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("merge conflict at <{}>", .path.join(" "))]
pub struct MergeConflict {
    pub path: Vec<String>,
}

/// Recursive union of two ground AVMs.
///
/// Identical leaves merge. Of two lists where one is a prefix of the other the
/// longer one wins, which lets a message extend a constituent's `mods`; any
/// other difference is a conflict.
pub fn merge(base: &Avm, overlay: &Avm) -> Result<Avm, MergeConflict> {
    let mut path = Vec::new();
    merge_avm(base, overlay, &mut path)
}

fn merge_avm(base: &Avm, overlay: &Avm, path: &mut Vec<String>) -> Result<Avm, MergeConflict> {
    let mut out = base.clone();
    for (k, ov) in &overlay.0 {
        path.push(k.clone());
        let merged = match base.0.get(k) {
            None => ov.clone(),
            Some(bv) => merge_value(bv, ov, path)?,
        };
        path.pop();
        out.0.insert(k.clone(), merged);
    }
    Ok(out)
}

fn merge_value(a: &Value, b: &Value, path: &mut Vec<String>) -> Result<Value, MergeConflict> {
    match (a, b) {
        _ if a == b => Ok(a.clone()),
        (Value::Avm(x), Value::Avm(y)) => Ok(Value::Avm(merge_avm(x, y, path)?)),
        (Value::List(x), Value::List(y)) if x.len() <= y.len() && y.starts_with(x) => Ok(b.clone()),
        (Value::List(x), Value::List(y)) if y.len() < x.len() && x.starts_with(y) => Ok(a.clone()),
        _ => Err(MergeConflict { path: path.clone() }),
    }
}

/// Merge where `over` wins at every leaf; used to apply defaults of abstract
/// constructions underneath concrete messages.
pub fn overlay(base: &Avm, over: &Avm) -> Avm {
    let mut out = base.clone();
    for (k, v) in &over.0 {
        let merged = match (out.0.get(k), v) {
            (Some(Value::Avm(b)), Value::Avm(o)) => Value::Avm(overlay(b, o)),
            _ => v.clone(),
        };
        out.0.insert(k.clone(), merged);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SubstError {
    #[error("unbound variable {0}")]
    UnboundVariable(String),
    #[error("unresolvable path {0}")]
    UnresolvablePath(Path),
    #[error("splice {0} outside a list")]
    MisplacedSplice(Path),
    #[error(transparent)]
    Conflict(#[from] MergeConflict),
}

fn lookup_path<'a>(path: &Path, b: &'a Bindings) -> Result<Option<&'a Value>, SubstError> {
    let base = match &path.root {
        Some(PathRoot::Var(v)) => b.get(v).ok_or_else(|| SubstError::UnboundVariable(v.clone()))?,
        Some(PathRoot::Inherited) => match b.get(INHERITED) {
            Some(v) => v,
            None => return Ok(None),
        },
        None => return Err(SubstError::UnresolvablePath(path.clone())),
    };
    let mut cur = base;
    for a in &path.attrs {
        match cur.as_avm().and_then(|m| m.get(a)) {
            Some(v) => cur = v,
            None => return Ok(None),
        }
    }
    Ok(Some(cur))
}

/// Resolves a path against bindings: `<V M sem_type>` looks up `V` and then
/// walks `M`, `sem_type`.
pub fn resolve_in(path: &Path, b: &Bindings) -> Result<Value, SubstError> {
    lookup_path(path, b)?
        .cloned()
        .ok_or_else(|| SubstError::UnresolvablePath(path.clone()))
}

/// Replaces every variable and path in `template` by its value under `b`.
pub fn substitute(template: &Value, b: &Bindings) -> Result<Value, SubstError> {
    Ok(match template {
        Value::Var(v) => b.get(v).cloned().ok_or_else(|| SubstError::UnboundVariable(v.clone()))?,
        Value::Path(p) => resolve_in(p, b)?,
        Value::Splice(p) => return Err(SubstError::MisplacedSplice(p.clone())),
        Value::Avm(a) => Value::Avm(substitute_avm(a, b)?),
        Value::Term(t) => Value::Term(Term {
            head: t.head.clone(),
            args: t.args.iter().map(|v| substitute(v, b)).collect::<Result<_, _>>()?,
        }),
        Value::List(items) => {
            let mut out = Vec::with_capacity(items.len());
            for item in items {
                match item {
                    Value::Splice(p) => match lookup_path(p, b)? {
                        None => {}
                        Some(Value::List(l)) => out.extend(l.iter().cloned()),
                        Some(v) => out.push(v.clone()),
                    },
                    other => out.push(substitute(other, b)?),
                }
            }
            Value::List(out)
        }
        Value::Atom(_) | Value::Num(_) | Value::Wildcard => template.clone(),
    })
}

pub fn substitute_avm(template: &Avm, b: &Bindings) -> Result<Avm, SubstError> {
    let mut out = Avm::new();
    for (k, v) in &template.0 {
        out.0.insert(k.clone(), substitute(v, b)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn avm(s: &str) -> Avm {
        s.parse().unwrap()
    }

    fn val(s: &str) -> Value {
        s.parse().unwrap()
    }

    #[test]
    fn resolve_examples() {
        let a = avm("[ [ hour [ 5 am_or_pm ] ] ]");
        assert_eq!(resolve(&a, &["hour"]), Some(&val("[ 5 am_or_pm ]")));
        assert_eq!(resolve(&Avm::new(), &["x"]), None);
        let a = avm("[ [ a [ [ b [ [ c 1 ] ] ] ] ] ]");
        assert_eq!(resolve(&a, &["a", "b", "c"]), Some(&Value::Num(1)));
        assert_eq!(resolve(&a, &["a", "x", "c"]), None);
    }

    #[test]
    fn match_examples() {
        assert_eq!(match_value(&val("sent(ques, *)"), &val("sent(ques, wh_time)")), Some(Bindings::new()));
        let b = match_value(&val("X"), &val("cancel")).unwrap();
        assert_eq!(b.get("X"), Some(&val("cancel")));
        assert_eq!(match_value(&val("sent(ques, *)"), &val("sent(assrt, svoc)")), None);
        // extra subject attributes are fine, missing ones are not
        assert!(match_value(&val("[ [ a 1 ] ]"), &val("[ [ a 1 ] [ b 2 ] ]")).is_some());
        assert!(match_value(&val("[ [ a 1 ] [ c 3 ] ]"), &val("[ [ a 1 ] [ b 2 ] ]")).is_none());
        // repeated variable must bind consistently
        assert!(match_value(&val("t(X, X)"), &val("t(a, a)")).is_some());
        assert!(match_value(&val("t(X, X)"), &val("t(a, b)")).is_none());
    }

    #[test]
    fn list_match_is_ordered_subsequence() {
        let s = val("[ a b c ]");
        assert!(match_value(&val("[ a c ]"), &s).is_some());
        assert!(match_value(&val("[ c a ]"), &s).is_none());
        assert!(match_value(&val("( )"), &s).is_some());
    }

    #[test]
    fn merge_examples() {
        let m = merge(&avm("[ [ truth_value 0 ] ]"), &avm("[ [ a_type arrange ] ]")).unwrap();
        assert_eq!(m, avm("[ [ a_type arrange ] [ truth_value 0 ] ]"));
        let h = avm("[ [ hour 5 ] ]");
        assert_eq!(merge(&h, &h).unwrap(), h);
        let err = merge(&h, &avm("[ [ hour 8 ] ]")).unwrap_err();
        assert_eq!(err.path, vec!["hour".to_string()]);
        let err = merge(&avm("[ [ a [ [ b x ] ] ] ]"), &avm("[ [ a [ [ b y ] ] ] ]")).unwrap_err();
        assert_eq!(err.path, vec!["a", "b"]);
    }

    #[test]
    fn merge_extends_lists() {
        let a = avm("[ [ mods ( [ [ det a ] ] ) ] ]");
        let b = avm("[ [ mods ( [ [ det a ] ] [ [ pp_msg x ] ] ) ] ]");
        assert_eq!(merge(&a, &b).unwrap(), b);
        assert_eq!(merge(&b, &a).unwrap(), b);
        assert!(merge(&a, &avm("[ [ mods ( [ [ det the ] ] ) ] ]")).is_err());
    }

    #[test]
    fn substitute_examples() {
        let t = val("[ [ a_type <V M sem_type> ] ]");
        let mut b = Bindings::new();
        b.insert("V".into(), val("[ [ M [ [ sem_type delete ] ] ] ]"));
        assert_eq!(substitute(&t, &b).unwrap(), val("[ [ a_type delete ] ]"));

        let t = val("[ [ agent hr ] ]");
        assert_eq!(substitute(&t, &Bindings::new()).unwrap(), t);

        let t = val("[ [ x <V M y> ] ]");
        assert_eq!(
            substitute(&t, &Bindings::new()),
            Err(SubstError::UnboundVariable("V".into()))
        );
        assert!(matches!(substitute(&t, &b), Err(SubstError::UnresolvablePath(_))));
    }

    #[test]
    fn splices() {
        let mut b = Bindings::new();
        b.insert("NP".into(), val("[ [ M [ [ mods ( [ [ det a ] ] ) ] ] ] ]"));
        b.insert("PP".into(), val("[ [ M [ [ prep at ] ] ] ]"));
        let t = val("( @<NP M mods> [ [ pp_msg <PP M> ] ] )");
        assert_eq!(
            substitute(&t, &b).unwrap(),
            val("( [ [ det a ] ] [ [ pp_msg [ [ prep at ] ] ] ] )")
        );
        // absent spliced lists contribute nothing
        let t = val("( @<PP M mods> x )");
        assert_eq!(substitute(&t, &b).unwrap(), val("[ x ]"));
    }

    #[test]
    fn canonical_text_round_trips() {
        for s in [
            "[ [ hour [ 5 am_or_pm ] ] [ minute 0 ] ]",
            "[ [ event_name \"a conference\" ] ]",
            "[ [ den want(other_agent) ] [ mods ( [ [ det a ] ] ) ] ]",
            "[ ]",
            "[ [ l ( ) ] [ n -3 ] [ t sent(ques, *) ] ]",
        ] {
            let v = val(s);
            assert_eq!(v.to_string(), s);
            assert_eq!(val(&v.to_string()), v);
        }
    }

    #[test]
    fn duplicate_attribute_rejected() {
        assert!("[ [ a 1 ] [ a 2 ] ]".parse::<Avm>().is_err());
    }

    // ---- property tests ----

    const ATOMS: &[&str] = &["a", "b", "office", "am_or_pm", "a conference"];
    const KEYS: &[&str] = &["den", "type", "hour", "mods", "x"];

    fn ground_value() -> impl Strategy<Value = Value> {
        let leaf = prop_oneof![
            prop::sample::select(ATOMS).prop_map(Value::atom),
            (0i64..20).prop_map(Value::Num),
        ];
        leaf.prop_recursive(3, 24, 4, |inner| {
            prop_oneof![
                prop::collection::btree_map(prop::sample::select(KEYS).prop_map(String::from), inner.clone(), 0..4)
                    .prop_map(|m| Value::Avm(Avm(m))),
                prop::collection::vec(inner.clone(), 0..3).prop_map(Value::List),
                (prop::sample::select(&["t", "sent"][..]), prop::collection::vec(inner, 1..3))
                    .prop_map(|(h, a)| Value::Term(Term::new(h, a))),
            ]
        })
    }

    fn ground_avm() -> impl Strategy<Value = Avm> {
        prop::collection::btree_map(prop::sample::select(KEYS).prop_map(String::from), ground_value(), 0..4)
            .prop_map(Avm)
    }

    /// Turns part of a ground value into a pattern: some subtrees become
    /// variables, some attributes are dropped.
    fn abstract_value(v: &Value, seed: &mut u64, n: &mut usize) -> Value {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let roll = (*seed >> 33) % 5;
        if roll == 0 {
            *n += 1;
            return Value::Var(format!("X{n}"));
        }
        match v {
            Value::Avm(a) => {
                let mut out = Avm::new();
                for (k, x) in &a.0 {
                    *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
                    if !(*seed >> 40).is_multiple_of(4) {
                        out.0.insert(k.clone(), abstract_value(x, seed, n));
                    }
                }
                Value::Avm(out)
            }
            Value::Term(t) => Value::Term(Term::new(
                t.head.clone(),
                t.args.iter().map(|x| abstract_value(x, seed, n)).collect(),
            )),
            other => other.clone(),
        }
    }

    proptest! {
        #[test]
        fn match_then_substitute_subsumes(subject in ground_value(), seed in any::<u64>()) {
            let mut s = seed;
            let mut n = 0;
            let pattern = abstract_value(&subject, &mut s, &mut n);
            let b = match_value(&pattern, &subject).expect("abstraction of subject must match");
            let inst = substitute(&pattern, &b).unwrap();
            prop_assert!(inst.is_ground());
            prop_assert_eq!(match_value(&inst, &subject), Some(Bindings::new()));
        }

        #[test]
        fn merge_idempotent(a in ground_avm()) {
            prop_assert_eq!(merge(&a, &a).unwrap(), a);
        }

        #[test]
        fn merge_commutative_and_associative(a in ground_avm(), b in ground_avm(), c in ground_avm()) {
            if let (Ok(ab), Ok(ba)) = (merge(&a, &b), merge(&b, &a)) {
                prop_assert_eq!(&ab, &ba);
                if let (Ok(ab_c), Ok(bc)) = (merge(&ab, &c), merge(&b, &c)) {
                    prop_assert_eq!(ab_c, merge(&a, &bc).unwrap());
                }
            }
        }

        #[test]
        fn resolve_after_substitute(subject in ground_avm(), seed in any::<u64>()) {
            // every path of the instantiated template resolves to what the
            // bindings put there
            let mut s = seed;
            let mut n = 0;
            let Value::Avm(template) = abstract_value(&Value::Avm(subject.clone()), &mut s, &mut n) else {
                return Ok(());
            };
            let b = match_avm(&template, &subject).unwrap();
            let inst = substitute_avm(&template, &b).unwrap();
            for (k, tv) in &template.0 {
                let expected = substitute(tv, &b).unwrap();
                prop_assert_eq!(resolve(&inst, &[k.as_str()]), Some(&expected));
                if let Value::Var(_) = tv {
                    prop_assert_eq!(resolve(&inst, &[k.as_str()]), resolve(&subject, &[k.as_str()]));
                }
            }
        }

        #[test]
        fn canonical_round_trip(v in ground_value()) {
            let text = v.to_string();
            prop_assert_eq!(text.parse::<Value>().unwrap(), v);
        }
    }
}
