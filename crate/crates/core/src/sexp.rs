//! Reader for the bracketed s-expression dialect shared by AVM text,
//! grammar files and knowledge-base files.
//!
//! The dialect has four kinds of brackets:
//!
//! * `( ... )` lists (grammar forms, general value lists),
//! * `[ ... ]` attribute-value rows and scalar lists,
//! * `< ... >` paths such as `<V M sem_type>`,
//! * `head( ... )` constructor terms such as `sent(ques, *)`; the head must
//!   touch the opening parenthesis.
//!
//! `;` starts a comment that runs to the end of the line.

use std::fmt;

use crate::avm::{Path, PathRoot};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub message: String,
}

impl SyntaxError {
    pub(crate) fn new(line: usize, message: impl Into<String>) -> Self {
        SyntaxError {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    LBrack,
    RBrack,
    LAngle,
    RAngle,
    Comma,
    Star,
    At,
    Caret,
    Question,
    Keyword(String),
    Str(String),
    Num(i64),
    Ident(String),
    Var(String),
    TermOpen(String),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::LParen => f.write_str("("),
            Tok::RParen => f.write_str(")"),
            Tok::LBrack => f.write_str("["),
            Tok::RBrack => f.write_str("]"),
            Tok::LAngle => f.write_str("<"),
            Tok::RAngle => f.write_str(">"),
            Tok::Comma => f.write_str(","),
            Tok::Star => f.write_str("*"),
            Tok::At => f.write_str("@"),
            Tok::Caret => f.write_str("^"),
            Tok::Question => f.write_str("?"),
            Tok::Keyword(k) => write!(f, ":{k}"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::Num(n) => write!(f, "{n}"),
            Tok::Ident(s) | Tok::Var(s) => f.write_str(s),
            Tok::TermOpen(h) => write!(f, "{h}("),
        }
    }
}

pub(crate) fn is_ident_start(c: char) -> bool {
    c.is_ascii_lowercase() || c == '_'
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.'
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '\n' => {
                line += 1;
                i += 1;
            }
            c if c.is_whitespace() => i += 1,
            ';' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' => {
                out.push((Tok::LParen, line));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, line));
                i += 1;
            }
            '[' => {
                out.push((Tok::LBrack, line));
                i += 1;
            }
            ']' => {
                out.push((Tok::RBrack, line));
                i += 1;
            }
            '<' => {
                out.push((Tok::LAngle, line));
                i += 1;
            }
            '>' => {
                out.push((Tok::RAngle, line));
                i += 1;
            }
            ',' => {
                out.push((Tok::Comma, line));
                i += 1;
            }
            '*' => {
                out.push((Tok::Star, line));
                i += 1;
            }
            '@' => {
                out.push((Tok::At, line));
                i += 1;
            }
            '^' => {
                out.push((Tok::Caret, line));
                i += 1;
            }
            '?' => {
                out.push((Tok::Question, line));
                i += 1;
            }
            '"' => {
                let start_line = line;
                i += 1;
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None => return Err(SyntaxError::new(start_line, "unterminated string")),
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some('\\') => {
                            match chars.get(i + 1) {
                                Some('n') => s.push('\n'),
                                Some(&e) => s.push(e),
                                None => {
                                    return Err(SyntaxError::new(start_line, "unterminated string"))
                                }
                            }
                            i += 2;
                        }
                        Some(&ch) => {
                            if ch == '\n' {
                                line += 1;
                            }
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                out.push((Tok::Str(s), start_line));
            }
            ':' => {
                let start = i + 1;
                i += 1;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '-' || chars[i] == '_') {
                    i += 1;
                }
                if start == i {
                    return Err(SyntaxError::new(line, "empty keyword"));
                }
                out.push((Tok::Keyword(chars[start..i].iter().collect()), line));
            }
            c if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let start = i;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let n = text
                    .parse::<i64>()
                    .map_err(|_| SyntaxError::new(line, format!("bad number {text}")))?;
                out.push((Tok::Num(n), line));
            }
            c if is_ident_start(c) || c.is_ascii_uppercase() => {
                let start = i;
                i += 1;
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                if chars.get(i) == Some(&'(') && is_ident_start(c) {
                    i += 1;
                    out.push((Tok::TermOpen(word), line));
                } else if c.is_ascii_uppercase() {
                    out.push((Tok::Var(word), line));
                } else {
                    out.push((Tok::Ident(word), line));
                }
            }
            other => return Err(SyntaxError::new(line, format!("unexpected character {other:?}"))),
        }
    }
    Ok(out)
}

/// One node of the generic tree produced by [`read_all`].
#[derive(Debug, Clone, PartialEq)]
pub enum Sexp {
    List(Vec<Sexp>, usize),
    Bracket(Vec<Sexp>, usize),
    Term(String, Vec<Sexp>, usize),
    Path(Path, usize),
    Splice(Path, usize),
    Atom(String, usize),
    Str(String, usize),
    Var(String, usize),
    Num(i64, usize),
    Keyword(String, usize),
    Wildcard(usize),
    Question(usize),
}

impl Sexp {
    pub fn line(&self) -> usize {
        match self {
            Sexp::List(_, l)
            | Sexp::Bracket(_, l)
            | Sexp::Term(_, _, l)
            | Sexp::Path(_, l)
            | Sexp::Splice(_, l)
            | Sexp::Atom(_, l)
            | Sexp::Str(_, l)
            | Sexp::Var(_, l)
            | Sexp::Num(_, l)
            | Sexp::Keyword(_, l)
            | Sexp::Wildcard(l)
            | Sexp::Question(l) => *l,
        }
    }

    pub fn as_keyword(&self) -> Option<&str> {
        match self {
            Sexp::Keyword(k, _) => Some(k),
            _ => None,
        }
    }

    /// Bare identifier or quoted string.
    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            Sexp::Atom(s, _) | Sexp::Str(s, _) => Some(s),
            _ => None,
        }
    }
}

struct Reader {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Reader {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|(_, l)| *l)
            .unwrap_or(1)
    }

    fn next(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn read(&mut self) -> Result<Sexp, SyntaxError> {
        let line = self.line();
        let Some((tok, line)) = self.next() else {
            return Err(SyntaxError::new(line, "unexpected end of input"));
        };
        Ok(match tok {
            Tok::LParen => Sexp::List(self.read_seq(Tok::RParen, false)?, line),
            Tok::LBrack => Sexp::Bracket(self.read_seq(Tok::RBrack, false)?, line),
            Tok::TermOpen(head) => Sexp::Term(head, self.read_seq(Tok::RParen, true)?, line),
            Tok::LAngle => Sexp::Path(self.read_path(line)?, line),
            Tok::At => {
                if self.peek() != Some(&Tok::LAngle) {
                    return Err(SyntaxError::new(line, "`@` must be followed by a path"));
                }
                self.next();
                Sexp::Splice(self.read_path(line)?, line)
            }
            Tok::Ident(s) => Sexp::Atom(s, line),
            Tok::Str(s) => Sexp::Str(s, line),
            Tok::Var(s) => Sexp::Var(s, line),
            Tok::Num(n) => Sexp::Num(n, line),
            Tok::Keyword(k) => Sexp::Keyword(k, line),
            Tok::Star => Sexp::Wildcard(line),
            Tok::Question => Sexp::Question(line),
            other => return Err(SyntaxError::new(line, format!("unexpected `{other}`"))),
        })
    }

    fn read_seq(&mut self, close: Tok, commas: bool) -> Result<Vec<Sexp>, SyntaxError> {
        let mut items = Vec::new();
        loop {
            match self.peek() {
                None => return Err(SyntaxError::new(self.line(), format!("missing `{close}`"))),
                Some(t) if *t == close => {
                    self.next();
                    return Ok(items);
                }
                Some(Tok::Comma) if commas => {
                    self.next();
                }
                _ => items.push(self.read()?),
            }
        }
    }

    fn read_path(&mut self, line: usize) -> Result<Path, SyntaxError> {
        let mut root = None;
        let mut attrs = Vec::new();
        let mut first = true;
        loop {
            match self.next() {
                Some((Tok::RAngle, _)) => break,
                Some((Tok::Caret, _)) if first => root = Some(PathRoot::Inherited),
                Some((Tok::Var(v), _)) if first => root = Some(PathRoot::Var(v)),
                Some((Tok::Var(v), _)) | Some((Tok::Ident(v), _)) => attrs.push(v),
                Some((t, l)) => return Err(SyntaxError::new(l, format!("unexpected `{t}` in path"))),
                None => return Err(SyntaxError::new(line, "unterminated path")),
            }
            first = false;
        }
        if root.is_none() && attrs.is_empty() {
            return Err(SyntaxError::new(line, "empty path"));
        }
        Ok(Path { root, attrs })
    }
}

/// Reads every top-level form in `src`.
pub fn read_all(src: &str) -> Result<Vec<Sexp>, SyntaxError> {
    let mut r = Reader {
        toks: lex(src)?,
        pos: 0,
    };
    let mut out = Vec::new();
    while r.peek().is_some() {
        out.push(r.read()?);
    }
    Ok(out)
}

/// Reads exactly one form from `src`.
pub fn read_one(src: &str) -> Result<Sexp, SyntaxError> {
    let mut forms = read_all(src)?;
    match forms.len() {
        1 => Ok(forms.pop().unwrap()),
        0 => Err(SyntaxError::new(1, "empty input")),
        _ => Err(SyntaxError::new(forms[1].line(), "trailing input")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn term_needs_adjacent_paren() {
        let f = read_all("sent(ques, *) sent (a)").unwrap();
        assert!(matches!(&f[0], Sexp::Term(h, args, _) if h == "sent" && args.len() == 2));
        assert!(matches!(&f[1], Sexp::Atom(h, _) if h == "sent"));
        assert!(matches!(&f[2], Sexp::List(..)));
    }

    #[test]
    fn paths_and_splices() {
        let f = read_all("<V M v_type> @<NP M mods> <^ governor> <hr attends>").unwrap();
        match &f[0] {
            Sexp::Path(p, _) => {
                assert_eq!(p.root, Some(PathRoot::Var("V".into())));
                assert_eq!(p.attrs, vec!["M", "v_type"]);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(&f[1], Sexp::Splice(..)));
        assert!(matches!(&f[2], Sexp::Path(p, _) if p.root == Some(PathRoot::Inherited)));
        assert!(matches!(&f[3], Sexp::Path(p, _) if p.root.is_none() && p.attrs.len() == 2));
    }

    #[test]
    fn comments_and_line_numbers() {
        let err = read_all("; header\n(a\n b\n").unwrap_err();
        assert_eq!(err.line, 3);
        let err = read_all("(ok)\n\n  $").unwrap_err();
        assert_eq!(err.line, 3);
    }

    #[test]
    fn strings_escape() {
        let f = read_one(r#""say \"hi\"""#).unwrap();
        assert_eq!(f, Sexp::Str("say \"hi\"".into(), 1));
    }
}
