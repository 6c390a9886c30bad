//! Left-to-right chart parser over a construction grammar.
//!
//! Items are predicted top-down from the root categories, only where the
//! construction's context holds. Inherited attributes are computed for a
//! constituent when the dot reaches it, so a completed constituent may only
//! advance parents that handed it the same inherited environment. Complete
//! items carry their ground message; the structure that produced it is not
//! returned.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::avm::{Avm, Bindings, Value, INHERITED};
use crate::context::DiscourseContext;
use crate::domain::FilterSet;
use crate::grammar::{self, category_matches, Construction, Grammar, StrucElement, ROOT_HEADS};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Token {
    pub surface: String,
    pub position: usize,
}

const PUNCT: &[char] = &[',', '.', '!', '?', ';'];

/// Splits an utterance into lowercased word and punctuation tokens.
///
/// Numerals stay whole ("8", "30th", "5:30"); a meridiem glued to a numeral is
/// split off ("5pm" becomes "5", "pm"). Apostrophes inside words are kept
/// ("i'll", "o'clock").
pub fn tokenize(input: &str) -> Vec<Token> {
    let mut words: Vec<String> = Vec::new();
    let chars: Vec<char> = input.to_lowercase().chars().collect();
    let mut cur = String::new();
    let flush = |cur: &mut String, words: &mut Vec<String>| {
        if !cur.is_empty() {
            words.push(std::mem::take(cur));
        }
    };
    for (i, &c) in chars.iter().enumerate() {
        let prev = i.checked_sub(1).map(|j| chars[j]);
        let next = chars.get(i + 1).copied();
        let inner = |p: Option<char>, n: Option<char>, f: fn(&char) -> bool| p.is_some_and(|p| f(&p)) && n.is_some_and(|n| f(&n));
        if c.is_alphanumeric() {
            cur.push(c);
        } else if (c == '\'' || c == '’' || c == '-') && inner(prev, next, |x| x.is_alphanumeric()) {
            cur.push(if c == '’' { '\'' } else { c });
        } else if (c == ':' || c == '.') && inner(prev, next, |x| x.is_ascii_digit()) {
            cur.push(':');
        } else if PUNCT.contains(&c) {
            flush(&mut cur, &mut words);
            words.push(c.to_string());
        } else {
            flush(&mut cur, &mut words);
        }
    }
    flush(&mut cur, &mut words);

    let mut out = Vec::new();
    for w in words {
        let split = ["am", "pm"].iter().find_map(|m| {
            let num = w.strip_suffix(m)?;
            (num.starts_with(|c: char| c.is_ascii_digit()) && num.chars().all(|c| c.is_ascii_digit() || c == ':'))
                .then(|| (num.to_string(), m.to_string()))
        });
        match split {
            Some((n, m)) => {
                out.push(n);
                out.push(m);
            }
            None => out.push(w),
        }
    }
    out.into_iter()
        .enumerate()
        .map(|(position, surface)| Token { surface, position })
        .collect()
}

pub fn surfaces(tokens: &[Token]) -> Vec<&str> {
    tokens.iter().map(|t| t.surface.as_str()).collect()
}

/// A chart item.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Edge {
    pub start: usize,
    pub end: usize,
    pub construction: usize,
    pub dot: usize,
    /// Struc variable → `[ [cons_n ..] [M ..] [form ..] ]` record of the
    /// constituent bound to it.
    pub bindings: Bindings,
    pub inherited_env: Avm,
    pub message: Option<Avm>,
}

impl Edge {
    pub(crate) fn scope(&self) -> Bindings {
        scope_of(&self.bindings, &self.inherited_env)
    }
}

pub(crate) fn scope_of(bindings: &Bindings, env: &Avm) -> Bindings {
    let mut b = bindings.clone();
    b.insert(INHERITED.to_string(), Value::Avm(env.clone()));
    b
}

/// What the parser knows about a constituent once it is complete.
pub(crate) fn record(c: &Construction, message: &Avm) -> Value {
    Value::Avm(
        Avm::new()
            .with("cons_n", c.name.clone())
            .with("M", message.clone())
            .with("form", c.form.clone()),
    )
}

/// A root reading of an utterance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Reading {
    #[serde(serialize_with = "ser_display")]
    pub construction: Value,
    pub message: Avm,
}

fn ser_display<S: serde::Serializer>(v: &Value, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ParseStats {
    pub edges: usize,
    pub predictions: usize,
    pub vetoed: usize,
}

/// The checks shared by the chart parser, the oracle and the enumerator.
pub(crate) struct Checks<'a> {
    pub grammar: &'a Grammar,
    pub filters: Option<&'a FilterSet>,
    pub ctx: Avm,
}

impl<'a> Checks<'a> {
    pub fn new(grammar: &'a Grammar, filters: Option<&'a FilterSet>, ctx: &DiscourseContext) -> Self {
        Checks {
            grammar,
            filters,
            ctx: ctx.to_avm(),
        }
    }

    /// Constructions that may fill the variable at `pos` of `c`, gated by
    /// context.
    pub fn candidates(&self, c: &Construction, pos: usize) -> Vec<usize> {
        let var = c.vehicle.struc[pos].var().expect("variable position");
        let pattern = c.vehicle.category_of(var).expect("validated grammar");
        self.grammar
            .admitted_by(pattern)
            .into_iter()
            .filter(|&i| self.grammar.construction(i).context_holds(&self.ctx))
            .collect()
    }

    pub fn roots(&self) -> Vec<usize> {
        ROOT_HEADS
            .iter()
            .flat_map(|h| self.grammar.with_head(h).iter().copied())
            .filter(|&i| self.grammar.construction(i).context_holds(&self.ctx))
            .collect()
    }

    /// Binds a completed constituent at `pos`; `None` if an equation or an
    /// attachment filter rejects it.
    pub fn bind(&self, c: &Construction, pos: usize, bindings: &Bindings, env: &Avm, child: Value) -> Option<Bindings> {
        let var = c.vehicle.struc[pos].var()?;
        let mut b = bindings.clone();
        b.insert(var.to_string(), child);
        let scope = scope_of(&b, env);
        if !grammar::equations_hold_at(c, pos, &scope) {
            return None;
        }
        if let Some(f) = self.filters {
            for a in &c.vehicle.attachments {
                let (Some(pm), Some(ph)) = (c.vehicle.position(&a.modifier), c.vehicle.position(&a.head)) else {
                    continue;
                };
                if pm.max(ph) != pos {
                    continue;
                }
                let msg = |v: &str| b.get(v).and_then(Value::as_avm).and_then(|r| r.get("M")).and_then(Value::as_avm);
                if let (Some(m), Some(h)) = (msg(&a.modifier), msg(&a.head)) {
                    if !f.allows_attachment(m, h) {
                        return None;
                    }
                }
            }
        }
        Some(b)
    }

    /// Message of a complete construction, subject to the selectional filter
    /// on its inherited `governor`.
    pub fn complete(&self, idx: usize, bindings: &Bindings, env: &Avm) -> Option<Avm> {
        let msg = self.grammar.build_message(idx, &scope_of(bindings, env)).ok()?;
        if let (Some(f), Some(g)) = (self.filters, env.get("governor")) {
            if !f.allows_selection(g, &msg) {
                return None;
            }
        }
        Some(msg)
    }
}

pub(crate) fn dedupe(readings: Vec<Reading>) -> Vec<Reading> {
    let mut seen = HashSet::new();
    readings.into_iter().filter(|r| seen.insert(r.clone())).collect()
}

struct Chart<'a> {
    checks: Checks<'a>,
    tokens: Vec<&'a str>,
    columns: Vec<Vec<Edge>>,
    seen: Vec<HashSet<Edge>>,
    stats: ParseStats,
}

impl<'a> Chart<'a> {
    fn add(&mut self, e: Edge) {
        let col = e.end;
        if self.seen[col].insert(e.clone()) {
            self.stats.edges += 1;
            self.columns[col].push(e);
        }
    }

    /// Moves the dot of `e` past a token or a bound constituent.
    fn advance(&mut self, e: &Edge, end: usize, bindings: Bindings) {
        let c = self.checks.grammar.construction(e.construction);
        let dot = e.dot + 1;
        let message = if dot == c.vehicle.struc.len() {
            match self.checks.complete(e.construction, &bindings, &e.inherited_env) {
                Some(m) => Some(m),
                None => {
                    self.stats.vetoed += 1;
                    return;
                }
            }
        } else {
            None
        };
        self.add(Edge {
            start: e.start,
            end,
            construction: e.construction,
            dot,
            bindings,
            inherited_env: e.inherited_env.clone(),
            message,
        });
    }

    fn predict(&mut self, e: &Edge, col: usize) {
        let g = self.checks.grammar;
        let c = g.construction(e.construction);
        let env = grammar::inherited_env(c, e.dot, &e.scope());
        for d in self.checks.candidates(c, e.dot) {
            self.stats.predictions += 1;
            self.add(Edge {
                start: col,
                end: col,
                construction: d,
                dot: 0,
                bindings: Bindings::new(),
                inherited_env: env.clone(),
                message: None,
            });
        }
    }

    fn complete(&mut self, done: &Edge) {
        let g = self.checks.grammar;
        let child = g.construction(done.construction);
        let msg = done.message.as_ref().expect("complete edge has a message");
        let rec = record(child, msg);
        let parents: Vec<Edge> = self.columns[done.start]
            .iter()
            .filter(|p| {
                let c = g.construction(p.construction);
                match c.vehicle.struc.get(p.dot) {
                    Some(StrucElement::Var(v)) => {
                        category_matches(c.vehicle.category_of(v).expect("validated"), &child.name)
                            && child.context_holds(&self.checks.ctx)
                    }
                    _ => false,
                }
            })
            .cloned()
            .collect();
        for p in parents {
            let c = g.construction(p.construction);
            if grammar::inherited_env(c, p.dot, &p.scope()) != done.inherited_env {
                continue;
            }
            match self.checks.bind(c, p.dot, &p.bindings, &p.inherited_env, rec.clone()) {
                Some(b) => self.advance(&p, done.end, b),
                None => self.stats.vetoed += 1,
            }
        }
    }

    fn run(&mut self) {
        for root in self.checks.roots() {
            self.add(Edge {
                start: 0,
                end: 0,
                construction: root,
                dot: 0,
                bindings: Bindings::new(),
                inherited_env: Avm::new(),
                message: None,
            });
        }
        for col in 0..=self.tokens.len() {
            let mut i = 0;
            while i < self.columns[col].len() {
                let e = self.columns[col][i].clone();
                i += 1;
                let c = self.checks.grammar.construction(e.construction);
                match c.vehicle.struc.get(e.dot) {
                    None => self.complete(&e),
                    Some(StrucElement::Token(t)) => {
                        if self.tokens.get(col) == Some(&t.as_str()) {
                            self.advance(&e, col + 1, e.bindings.clone());
                        }
                    }
                    Some(StrucElement::OptionalToken(t)) => {
                        if self.tokens.get(col) == Some(&t.as_str()) {
                            self.advance(&e, col + 1, e.bindings.clone());
                        }
                        self.advance(&e, col, e.bindings.clone());
                    }
                    Some(StrucElement::Var(_)) => self.predict(&e, col),
                }
            }
        }
    }

    fn readings(&self) -> Vec<Reading> {
        let g = self.checks.grammar;
        let n = self.tokens.len();
        if n == 0 {
            return Vec::new();
        }
        dedupe(
            self.columns[n]
                .iter()
                .filter(|e| e.start == 0 && e.message.is_some() && e.inherited_env.is_empty())
                .filter(|e| ROOT_HEADS.contains(&g.construction(e.construction).head()))
                .map(|e| Reading {
                    construction: g.construction(e.construction).name.clone(),
                    message: e.message.clone().unwrap(),
                })
                .collect(),
        )
    }
}

/// Parses `tokens`, returning every distinct root reading with its chart
/// statistics. `filters: None` disables the domain filters.
pub fn parse_with_stats(
    g: &Grammar,
    filters: Option<&FilterSet>,
    ctx: &DiscourseContext,
    tokens: &[Token],
) -> (Vec<Reading>, ParseStats) {
    let n = tokens.len();
    let mut chart = Chart {
        checks: Checks::new(g, filters, ctx),
        tokens: surfaces(tokens),
        columns: vec![Vec::new(); n + 1],
        seen: vec![HashSet::new(); n + 1],
        stats: ParseStats::default(),
    };
    chart.run();
    (chart.readings(), chart.stats)
}

pub fn parse(g: &Grammar, filters: Option<&FilterSet>, ctx: &DiscourseContext, tokens: &[Token]) -> Vec<Reading> {
    parse_with_stats(g, filters, ctx, tokens).0
}

/// Number of distinct root readings.
pub fn parse_count(g: &Grammar, filters: Option<&FilterSet>, ctx: &DiscourseContext, tokens: &[Token]) -> usize {
    parse(g, filters, ctx, tokens).len()
}

/// Brute-force reference parser for short inputs: tries every construction
/// over every split of every span, with the same checks as [`parse`].
pub fn oracle_parse(g: &Grammar, filters: Option<&FilterSet>, ctx: &DiscourseContext, tokens: &[Token]) -> Vec<Reading> {
    let mut o = Oracle {
        checks: Checks::new(g, filters, ctx),
        tokens: surfaces(tokens),
        memo: HashMap::new(),
        active: HashSet::new(),
    };
    let n = tokens.len();
    if n == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for root in o.checks.roots() {
        for msg in o.derive(root, 0, n, &Avm::new()) {
            out.push(Reading {
                construction: g.construction(root).name.clone(),
                message: msg,
            });
        }
    }
    let mut out = dedupe(out);
    out.sort();
    out
}

type OracleKey = (usize, usize, usize, Avm);

struct Oracle<'a> {
    checks: Checks<'a>,
    tokens: Vec<&'a str>,
    memo: HashMap<OracleKey, Vec<Avm>>,
    active: HashSet<OracleKey>,
}

impl Oracle<'_> {
    /// All messages of construction `idx` spanning `[i, k)`.
    fn derive(&mut self, idx: usize, i: usize, k: usize, env: &Avm) -> Vec<Avm> {
        let key = (idx, i, k, env.clone());
        if let Some(m) = self.memo.get(&key) {
            return m.clone();
        }
        if !self.active.insert(key.clone()) {
            return Vec::new();
        }
        let mut out = Vec::new();
        self.fill(idx, 0, i, k, env, Bindings::new(), &mut out);
        let mut seen = HashSet::new();
        out.retain(|m| seen.insert(m.clone()));
        self.active.remove(&key);
        self.memo.insert(key, out.clone());
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn fill(&mut self, idx: usize, pos: usize, at: usize, k: usize, env: &Avm, b: Bindings, out: &mut Vec<Avm>) {
        let g = self.checks.grammar;
        let c = g.construction(idx);
        let Some(el) = c.vehicle.struc.get(pos) else {
            if at == k {
                out.extend(self.checks.complete(idx, &b, env));
            }
            return;
        };
        match el {
            StrucElement::Token(t) => {
                if at < k && self.tokens[at] == t {
                    self.fill(idx, pos + 1, at + 1, k, env, b, out);
                }
            }
            StrucElement::OptionalToken(t) => {
                if at < k && self.tokens[at] == t {
                    self.fill(idx, pos + 1, at + 1, k, env, b.clone(), out);
                }
                self.fill(idx, pos + 1, at, k, env, b, out);
            }
            StrucElement::Var(_) => {
                let child_env = grammar::inherited_env(c, pos, &scope_of(&b, env));
                for end in at + 1..=k {
                    for d in self.checks.candidates(c, pos) {
                        for msg in self.derive(d, at, end, &child_env) {
                            let rec = record(g.construction(d), &msg);
                            if let Some(nb) = self.checks.bind(c, pos, &b, env, rec) {
                                self.fill(idx, pos + 1, end, k, env, nb, out);
                            }
                        }
                    }
                }
            }
        }
    }
}
