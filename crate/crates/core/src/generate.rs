//! Paraphrase enumeration: expands a root construction top-down into surface
//! strings, applying the same equations, filters and context gates as the
//! parser.

use std::collections::{HashMap, HashSet};
use std::rc::Rc;

use serde::Serialize;

use crate::avm::{Avm, Bindings, Value};
use crate::context::DiscourseContext;
use crate::dialog::Engine;
use crate::domain::SlotFrame;
use crate::grammar::{self, StrucElement};
use crate::parser::{record, scope_of, Checks};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenerateError {
    #[error("unknown construction `{0}`")]
    UnknownConstruction(String),
    #[error("construction `{0}` is not usable in a fresh session")]
    OutOfContext(String),
}

/// One enumerated string with the message and frame it was generated from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Generated {
    pub text: String,
    pub message: Avm,
    pub frame: SlotFrame,
}

pub const DEFAULT_DEPTH: usize = 5;

/// Tokens of a derivation and its record (`cons_n`, `M`, `form`).
type Deriv = Rc<(Vec<String>, Value)>;
type Derivs = Rc<Vec<Deriv>>;

struct Generator<'a> {
    checks: Checks<'a>,
    /// Results kept per constituent below the root.
    cap: usize,
    memo: HashMap<(usize, Avm, usize), Derivs>,
}

/// Round-robin over lists so that every alternative shows up early.
fn interleave<T: Clone>(lists: &[Rc<Vec<T>>], cap: usize) -> Vec<T> {
    let longest = lists.iter().map(|l| l.len()).max().unwrap_or(0);
    let mut out = Vec::new();
    for r in 0..longest {
        for l in lists {
            if let Some(x) = l.get(r) {
                out.push(x.clone());
                if out.len() == cap {
                    return out;
                }
            }
        }
    }
    out
}

impl Generator<'_> {
    fn derive_root(&mut self, idx: usize, depth: usize, limit: usize) -> Derivs {
        let inner = self.cap;
        // headroom for duplicate strings and messages that do not interpret
        self.cap = limit.max(1) * 2;
        let out = self.derive_uncached(idx, &Avm::new(), depth);
        self.cap = inner;
        out
    }

    fn derive(&mut self, idx: usize, env: &Avm, depth: usize) -> Derivs {
        if depth == 0 {
            return Rc::new(Vec::new());
        }
        let key = (idx, env.clone(), depth);
        if let Some(d) = self.memo.get(&key) {
            return d.clone();
        }
        let out = self.derive_uncached(idx, env, depth);
        self.memo.insert(key, out.clone());
        out
    }

    fn derive_uncached(&mut self, idx: usize, env: &Avm, depth: usize) -> Derivs {
        let g = self.checks.grammar;
        let c = g.construction(idx);
        let mut partials: Vec<(Vec<String>, Bindings)> = vec![(Vec::new(), Bindings::new())];
        for (pos, el) in c.vehicle.struc.iter().enumerate() {
            partials = match el {
                StrucElement::Token(t) => partials
                    .into_iter()
                    .map(|(mut toks, b)| {
                        toks.push(t.clone());
                        (toks, b)
                    })
                    .collect(),
                StrucElement::OptionalToken(t) => {
                    let mut out = Vec::new();
                    for (toks, b) in partials {
                        let mut with = toks.clone();
                        with.push(t.clone());
                        out.push((with, b.clone()));
                        out.push((toks, b));
                    }
                    out.truncate(self.cap);
                    out
                }
                StrucElement::Var(_) => self.extend(idx, pos, env, depth, partials),
            };
            if partials.is_empty() {
                break;
            }
        }
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (toks, b) in partials {
            if out.len() == self.cap {
                break;
            }
            if let Some(m) = self.checks.complete(idx, &b, env) {
                let d = Rc::new((toks, record(c, &m)));
                if seen.insert(d.clone()) {
                    out.push(d);
                }
            }
        }
        Rc::new(out)
    }

    /// Fills variable `pos`, pairing partials with children along
    /// anti-diagonals so short prefixes meet varied continuations.
    fn extend(
        &mut self,
        idx: usize,
        pos: usize,
        env: &Avm,
        depth: usize,
        partials: Vec<(Vec<String>, Bindings)>,
    ) -> Vec<(Vec<String>, Bindings)> {
        let g = self.checks.grammar;
        let c = g.construction(idx);
        let mut by_env: HashMap<Avm, Derivs> = HashMap::new();
        let mut children = Vec::with_capacity(partials.len());
        for (_, b) in &partials {
            let child_env = grammar::inherited_env(c, pos, &scope_of(b, env));
            if !by_env.contains_key(&child_env) {
                let lists: Vec<Derivs> = self
                    .checks
                    .candidates(c, pos)
                    .into_iter()
                    .map(|d| self.derive(d, &child_env, depth - 1))
                    .collect();
                by_env.insert(child_env.clone(), Rc::new(interleave(&lists, self.cap)));
            }
            children.push(by_env[&child_env].clone());
        }
        let longest = children.iter().map(|l| l.len()).max().unwrap_or(0);
        let mut out = Vec::new();
        let mut budget = self.cap * 4;
        for s in 0..partials.len() + longest {
            for (i, (toks, b)) in partials.iter().enumerate().take(s + 1) {
                let Some(child) = children[i].get(s - i) else { continue };
                let (ctoks, rec) = &**child;
                budget -= 1;
                if let Some(nb) = self.checks.bind(c, pos, b, env, rec.clone()) {
                    let mut t = toks.clone();
                    t.extend(ctoks.iter().cloned());
                    out.push((t, nb));
                    if out.len() == self.cap {
                        return out;
                    }
                }
                if budget == 0 {
                    return out;
                }
            }
        }
        out
    }
}

/// Up to `limit` distinct strings derivable from `root`, each with its
/// interpretable message. Derivations deeper than `max_depth` are cut.
pub fn enumerate(engine: &Engine, root: &str, limit: usize, max_depth: usize) -> Result<Vec<Generated>, GenerateError> {
    let unknown = || GenerateError::UnknownConstruction(root.to_string());
    let name: Value = root.parse().map_err(|_| unknown())?;
    let idx = engine.grammar.index_of(&name).ok_or_else(unknown)?;
    let ctx = DiscourseContext::live();
    let filters = engine.use_filters.then_some(&engine.ontology.filters);
    let checks = Checks::new(&engine.grammar, filters, &ctx);
    if !engine.grammar.construction(idx).context_holds(&checks.ctx) {
        return Err(GenerateError::OutOfContext(root.to_string()));
    }
    let mut gen = Generator {
        checks,
        cap: limit.div_ceil(4).max(1),
        memo: HashMap::new(),
    };
    let derivs = gen.derive_root(idx, max_depth, limit);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for d in derivs.iter() {
        let (toks, rec) = &**d;
        if out.len() == limit {
            break;
        }
        let Some(msg) = rec.as_avm().and_then(|r| r.get("M")).and_then(Value::as_avm) else {
            continue;
        };
        let text = toks.join(" ");
        if seen.contains(&text) {
            continue;
        }
        if let Ok(frame) = engine.interpret(msg) {
            seen.insert(text.clone());
            out.push(Generated {
                text,
                message: msg.clone(),
                frame,
            });
        }
    }
    Ok(out)
}

/// Whether parsing and interpreting `g.text` in a fresh session yields
/// exactly the generation frame.
pub fn round_trips(engine: &Engine, g: &Generated) -> bool {
    let readings = engine.parse(&DiscourseContext::live(), &g.text);
    !readings.is_empty()
        && readings
            .iter()
            .all(|r| engine.interpret(&r.message).is_ok_and(|f| f == g.frame))
}
