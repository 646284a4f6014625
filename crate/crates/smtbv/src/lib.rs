//! A small SMT-LIB v2 solver for the QF_BV fragment.
//!
//! Supports the command subset needed for batch (one request, one response)
//! solving: `set-logic`, `set-option`, `set-info`, `declare-const`,
//! `declare-fun` / `define-fun` with zero arguments, `assert`, `check-sat`,
//! `get-value`, `exit`. Terms are bit-blasted to CNF and decided with the
//! splr SAT solver. Shift amounts must be constants.
//!
//! The crate also exposes a concrete evaluator ([`Script::eval`]) so that a
//! script's definitions can be executed directly against chosen values for
//! the declared constants.

mod blast;
mod eval;
mod sexpr;

use std::collections::HashMap;

pub use blast::{Bits, Blaster, Model, SatOutcome};
pub use eval::{parse_literal, Value};
pub use sexpr::{parse_all, SExpr};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("sort error: {0}")]
    Sort(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("evaluation error: {0}")]
    Eval(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sort {
    Bool,
    Bv(u32),
}

fn parse_sort(expr: &SExpr) -> Result<Sort, Error> {
    match expr {
        SExpr::Atom(a) if a == "Bool" => Ok(Sort::Bool),
        SExpr::List(items) => {
            let names: Vec<&str> = items.iter().filter_map(|e| e.atom()).collect();
            match names.as_slice() {
                ["_", "BitVec", n] => {
                    let n: u32 = n.parse().map_err(|_| Error::Parse("bad BitVec width".into()))?;
                    if n == 0 || n > 128 {
                        return Err(Error::Unsupported(format!("BitVec width {n}")));
                    }
                    Ok(Sort::Bv(n))
                }
                _ => Err(Error::Unsupported(format!("sort {expr}"))),
            }
        }
        _ => Err(Error::Unsupported(format!("sort {expr}"))),
    }
}

/// The declarative content of a script: declared constants, zero-argument
/// definitions in order, and asserted formulas.
#[derive(Debug, Default)]
pub struct Script {
    pub decls: Vec<(String, Sort)>,
    pub defs: Vec<(String, Sort, SExpr)>,
    pub asserts: Vec<SExpr>,
    pub get_values: Vec<String>,
}

impl Script {
    pub fn parse(text: &str) -> Result<Script, Error> {
        let mut script = Script::default();
        for cmd in parse_all(text)? {
            let items = cmd
                .list()
                .ok_or_else(|| Error::Parse(format!("expected a command, found {cmd}")))?;
            let Some(head) = items.first().and_then(|e| e.atom()) else {
                return Err(Error::Parse(format!("expected a command, found {cmd}")));
            };
            match head {
                "set-logic" | "set-option" | "set-info" | "check-sat" | "exit" => {}
                "declare-const" => {
                    let [_, name, sort] = items else {
                        return Err(Error::Parse("malformed declare-const".into()));
                    };
                    let name = name.atom().ok_or_else(|| Error::Parse("bad symbol".into()))?;
                    script.decls.push((name.to_string(), parse_sort(sort)?));
                }
                "declare-fun" => {
                    let [_, name, params, sort] = items else {
                        return Err(Error::Parse("malformed declare-fun".into()));
                    };
                    if params.list().map(|p| p.len()) != Some(0) {
                        return Err(Error::Unsupported("declare-fun with arguments".into()));
                    }
                    let name = name.atom().ok_or_else(|| Error::Parse("bad symbol".into()))?;
                    script.decls.push((name.to_string(), parse_sort(sort)?));
                }
                "define-fun" => {
                    let [_, name, params, sort, body] = items else {
                        return Err(Error::Parse("malformed define-fun".into()));
                    };
                    if params.list().map(|p| p.len()) != Some(0) {
                        return Err(Error::Unsupported("define-fun with arguments".into()));
                    }
                    let name = name.atom().ok_or_else(|| Error::Parse("bad symbol".into()))?;
                    script
                        .defs
                        .push((name.to_string(), parse_sort(sort)?, body.clone()));
                }
                "assert" => {
                    let [_, term] = items else {
                        return Err(Error::Parse("malformed assert".into()));
                    };
                    script.asserts.push(term.clone());
                }
                "get-value" => {
                    let [_, syms] = items else {
                        return Err(Error::Parse("malformed get-value".into()));
                    };
                    for s in syms.list().ok_or_else(|| Error::Parse("malformed get-value".into()))? {
                        let s = s
                            .atom()
                            .ok_or_else(|| Error::Unsupported("get-value of a non-symbol".into()))?;
                        script.get_values.push(s.to_string());
                    }
                }
                other => return Err(Error::Unsupported(format!("command {other}"))),
            }
        }
        Ok(script)
    }

    /// Evaluates every definition in order given concrete values for the
    /// declared constants. Returns the full symbol environment.
    pub fn eval(&self, inputs: &HashMap<String, Value>) -> Result<HashMap<String, Value>, Error> {
        let mut env = HashMap::new();
        for (name, sort) in &self.decls {
            let v = inputs
                .get(name)
                .ok_or_else(|| Error::Eval(format!("no value supplied for {name}")))?;
            match (sort, v) {
                (Sort::Bool, Value::Bool(_)) => {}
                (Sort::Bv(w), Value::Bv { width, .. }) if w == width => {}
                _ => return Err(Error::Eval(format!("value for {name} has the wrong sort"))),
            }
            env.insert(name.clone(), *v);
        }
        for (name, _, body) in &self.defs {
            let v = eval::eval(body, &env)?;
            env.insert(name.clone(), v);
        }
        Ok(env)
    }

    /// Evaluates the conjunction of all asserted formulas under `env`
    /// (as produced by [`Script::eval`]).
    pub fn asserts_hold(&self, env: &HashMap<String, Value>) -> Result<bool, Error> {
        for a in &self.asserts {
            match eval::eval(a, env)? {
                Value::Bool(true) => {}
                Value::Bool(false) => return Ok(false),
                Value::Bv { .. } => return Err(Error::Sort("assert of a bit-vector term".into())),
            }
        }
        Ok(true)
    }
}

/// Runs a full script and returns what a batch solver would print: the
/// `check-sat` answer on the first line, then one `get-value` answer.
pub fn run_script(text: &str) -> Result<String, Error> {
    let script = Script::parse(text)?;
    let mut blaster = Blaster::new();
    for (name, sort) in &script.decls {
        match sort {
            Sort::Bool => blaster.declare_bool(name),
            Sort::Bv(w) => blaster.declare_bv(name, *w),
        };
    }
    for (name, _, body) in &script.defs {
        let bits = blaster.blast(body)?;
        blaster.define(name, bits);
    }
    for a in &script.asserts {
        blaster.assert(a)?;
    }
    let mut out = String::new();
    match blaster.solve() {
        SatOutcome::Unsat => out.push_str("unsat\n"),
        SatOutcome::Unknown(reason) => {
            out.push_str("unknown\n");
            out.push_str(&format!("; {reason}\n"));
        }
        SatOutcome::Sat(model) => {
            out.push_str("sat\n");
            if !script.get_values.is_empty() {
                out.push('(');
                for (i, name) in script.get_values.iter().enumerate() {
                    let bits = blaster
                        .lookup(name)
                        .ok_or_else(|| Error::Eval(format!("get-value of unknown symbol {name}")))?;
                    let v = model.read(bits);
                    if i > 0 {
                        out.push_str("\n ");
                    }
                    out.push_str(&format!("({} {})", name, v.render()));
                }
                out.push_str(")\n");
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_sat_unsat() {
        assert_eq!(run_script("(assert true) (check-sat)").unwrap(), "sat\n");
        assert_eq!(run_script("(assert false) (check-sat)").unwrap(), "unsat\n");
    }

    #[test]
    fn model_satisfies_constraints() {
        let out = run_script(
            "(set-logic QF_BV)\n\
             (declare-const x (_ BitVec 4))\n\
             (define-fun y () (_ BitVec 4) (bvadd x #b0011))\n\
             (assert (= y #b0000))\n\
             (check-sat)\n\
             (get-value (x y))",
        )
        .unwrap();
        assert!(out.starts_with("sat\n"));
        assert!(out.contains("(x #b1101)"));
        assert!(out.contains("(y #b0000)"));
    }

    #[test]
    fn no_model_when_contradictory() {
        let out = run_script(
            "(declare-const x (_ BitVec 3))\n\
             (assert (bvult x #b010))\n\
             (assert (bvuge x #b100))\n\
             (check-sat)",
        )
        .unwrap();
        assert_eq!(out, "unsat\n");
    }
}
