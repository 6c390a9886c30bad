//! Bracketed, indented AVM printing for terminal output.
//!
//! ```text
//! [ [ action_name schedule ]
//!   [ event_name
//!     [ a conference ] ]
//!   [ event_time
//!     [ [ hour [ 5 am_or_pm ] ]
//!       [ minute 0 ] ] ] ]
//! ```
//!
//! Attributes print in alphabetical order; list order is kept.

use mincal_core::avm::{Avm, Value};

fn is_flat(v: &Value) -> bool {
    match v {
        Value::Atom(a) => !a.contains(' '),
        Value::Avm(_) => false,
        Value::List(items) => !items.is_empty() && items.iter().all(|x| matches!(x, Value::Atom(_) | Value::Num(_))),
        _ => true,
    }
}

fn value_lines(v: &Value) -> Vec<String> {
    match v {
        Value::Atom(a) if a.contains(' ') => vec![format!("[ {a} ]")],
        Value::Avm(a) => avm_lines(a),
        Value::List(items) if !is_flat(v) => {
            if items.is_empty() {
                return vec!["( )".into()];
            }
            let mut out = Vec::new();
            for (i, item) in items.iter().enumerate() {
                for (j, line) in value_lines(item).into_iter().enumerate() {
                    let lead = if i == 0 && j == 0 { "( " } else { "  " };
                    out.push(format!("{lead}{line}"));
                }
            }
            close(&mut out, " )");
            out
        }
        other => vec![other.to_string()],
    }
}

fn close(lines: &mut [String], with: &str) {
    if let Some(last) = lines.last_mut() {
        last.push_str(with);
    }
}

fn avm_lines(a: &Avm) -> Vec<String> {
    if a.is_empty() {
        return vec!["[ ]".into()];
    }
    let mut out = Vec::new();
    for (i, (k, v)) in a.iter().enumerate() {
        let mut row = if is_flat(v) {
            vec![format!("[ {k} {v} ]")]
        } else {
            let mut row = vec![format!("[ {k}")];
            row.extend(value_lines(v).into_iter().map(|l| format!("  {l}")));
            close(&mut row, " ]");
            row
        };
        for (j, line) in row.drain(..).enumerate() {
            let lead = if i == 0 && j == 0 { "[ " } else { "  " };
            out.push(format!("{lead}{line}"));
        }
    }
    close(&mut out, " ]");
    out
}

/// Multi-line rendering of an AVM.
pub fn matrix(a: &Avm) -> String {
    avm_lines(a).join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_layout() {
        let a: Avm = "[ [action_name schedule] [event_name \"a conference\"] [event_time [ [minute 0] [hour (5 am_or_pm)] ]] ]"
            .parse()
            .unwrap();
        let expected = "\
[ [ action_name schedule ]
  [ event_name
    [ a conference ] ]
  [ event_time
    [ [ hour [ 5 am_or_pm ] ]
      [ minute 0 ] ] ] ]";
        assert_eq!(matrix(&a), expected);
        assert_eq!(matrix(&Avm::new()), "[ ]");
    }

    #[test]
    fn lists_of_matrices() {
        let a: Avm = "[ [mods ( [ [det a] ] [ [det my] ] )] ]".parse().unwrap();
        assert_eq!(matrix(&a), "[ [ mods\n    ( [ [ det a ] ]\n      [ [ det my ] ] ) ] ]");
    }
}
