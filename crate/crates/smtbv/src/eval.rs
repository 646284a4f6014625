//! Concrete term evaluation. Used for `get-value` on defined symbols and as
//! an executable semantics reference for the bit-blaster.

use std::collections::HashMap;

use crate::sexpr::SExpr;
use crate::Error;

/// A concrete SMT value. Bit-vectors are limited to 128 bits, stored
/// little-endian in `bits` with the unused high bits zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Value {
    Bool(bool),
    Bv { width: u32, bits: u128 },
}

impl Value {
    pub fn bv(width: u32, bits: u128) -> Value {
        Value::Bv {
            width,
            bits: mask(width) & bits,
        }
    }

    /// Two's-complement reading of a bit-vector value.
    pub fn as_signed(&self) -> Option<i128> {
        match *self {
            Value::Bool(_) => None,
            Value::Bv { width, bits } => Some(to_signed(width, bits)),
        }
    }

    /// Renders the value the way a solver prints it in a `get-value` answer.
    pub fn render(&self) -> String {
        match *self {
            Value::Bool(b) => b.to_string(),
            Value::Bv { width, bits } => {
                let mut s = String::with_capacity(width as usize + 2);
                s.push_str("#b");
                for i in (0..width).rev() {
                    s.push(if bits >> i & 1 == 1 { '1' } else { '0' });
                }
                s
            }
        }
    }
}

pub fn mask(width: u32) -> u128 {
    if width >= 128 {
        u128::MAX
    } else {
        (1u128 << width) - 1
    }
}

pub fn to_signed(width: u32, bits: u128) -> i128 {
    if width < 128 && bits >> (width - 1) & 1 == 1 {
        bits as i128 - (1i128 << width)
    } else {
        bits as i128
    }
}

/// Parses `#b...`, `#x...` and `(_ bvN w)` literals.
pub fn parse_literal(expr: &SExpr) -> Option<Value> {
    match expr {
        SExpr::Atom(a) => {
            if let Some(bits) = a.strip_prefix("#b") {
                let width = bits.len() as u32;
                if width == 0 || width > 128 {
                    return None;
                }
                let mut v: u128 = 0;
                for c in bits.chars() {
                    v = v << 1 | if c == '1' { 1 } else { 0 };
                    if c != '0' && c != '1' {
                        return None;
                    }
                }
                Some(Value::bv(width, v))
            } else if let Some(hex) = a.strip_prefix("#x") {
                let width = hex.len() as u32 * 4;
                if width == 0 || width > 128 {
                    return None;
                }
                u128::from_str_radix(hex, 16).ok().map(|v| Value::bv(width, v))
            } else if a == "true" {
                Some(Value::Bool(true))
            } else if a == "false" {
                Some(Value::Bool(false))
            } else {
                None
            }
        }
        SExpr::List(items) => {
            // (_ bvN w)
            let [u, n, w] = items.as_slice() else { return None };
            if u.atom() != Some("_") {
                return None;
            }
            let n = n.atom()?.strip_prefix("bv")?.parse::<u128>().ok()?;
            let w = w.atom()?.parse::<u32>().ok()?;
            if w == 0 || w > 128 {
                return None;
            }
            Some(Value::bv(w, n))
        }
    }
}

/// Evaluates a term under `env`. `env` must bind every free symbol the term
/// mentions (declared constants and previously defined symbols).
pub fn eval(expr: &SExpr, env: &HashMap<String, Value>) -> Result<Value, Error> {
    match expr {
        SExpr::Atom(a) => {
            if let Some(v) = parse_literal(expr) {
                return Ok(v);
            }
            env.get(a)
                .copied()
                .ok_or_else(|| Error::Eval(format!("unbound symbol {a}")))
        }
        SExpr::List(items) => {
            if let Some(v) = parse_literal(expr) {
                return Ok(v);
            }
            let (head, args) = items
                .split_first()
                .ok_or_else(|| Error::Eval("empty application".into()))?;
            match head {
                SExpr::Atom(op) if op == "let" => {
                    let [bindings, body] = args else {
                        return Err(Error::Eval("malformed let".into()));
                    };
                    let mut inner = env.clone();
                    for b in bindings.list().ok_or_else(|| Error::Eval("malformed let".into()))? {
                        let [name, val] = b.list().ok_or_else(|| Error::Eval("malformed let".into()))?
                        else {
                            return Err(Error::Eval("malformed let binding".into()));
                        };
                        let name = name.atom().ok_or_else(|| Error::Eval("malformed let".into()))?;
                        let v = eval(val, env)?;
                        inner.insert(name.to_string(), v);
                    }
                    eval(body, &inner)
                }
                SExpr::Atom(op) => {
                    let vals: Vec<Value> = args
                        .iter()
                        .map(|a| eval(a, env))
                        .collect::<Result<_, _>>()?;
                    apply(op, &vals)
                }
                SExpr::List(indexed) => {
                    let vals: Vec<Value> = args
                        .iter()
                        .map(|a| eval(a, env))
                        .collect::<Result<_, _>>()?;
                    apply_indexed(indexed, &vals)
                }
            }
        }
    }
}

fn bools(vals: &[Value]) -> Result<Vec<bool>, Error> {
    vals.iter()
        .map(|v| match v {
            Value::Bool(b) => Ok(*b),
            _ => Err(Error::Eval("expected Bool operand".into())),
        })
        .collect()
}

fn bv2(vals: &[Value]) -> Result<(u32, u128, u128), Error> {
    let [Value::Bv { width: w1, bits: a }, Value::Bv { width: w2, bits: b }] = vals else {
        return Err(Error::Eval("expected two bit-vector operands".into()));
    };
    if w1 != w2 {
        return Err(Error::Eval("width mismatch".into()));
    }
    Ok((*w1, *a, *b))
}

fn apply(op: &str, vals: &[Value]) -> Result<Value, Error> {
    match op {
        "and" => Ok(Value::Bool(bools(vals)?.iter().all(|&b| b))),
        "or" => Ok(Value::Bool(bools(vals)?.iter().any(|&b| b))),
        "xor" => Ok(Value::Bool(bools(vals)?.iter().fold(false, |x, &y| x ^ y))),
        "not" => match vals {
            [Value::Bool(b)] => Ok(Value::Bool(!b)),
            _ => Err(Error::Eval("not: expected one Bool".into())),
        },
        "=>" => {
            let bs = bools(vals)?;
            // right-associative implication chain
            let mut acc = *bs.last().ok_or_else(|| Error::Eval("=>: no operands".into()))?;
            for &b in bs[..bs.len() - 1].iter().rev() {
                acc = !b || acc;
            }
            Ok(Value::Bool(acc))
        }
        "=" => {
            let first = vals.first().ok_or_else(|| Error::Eval("=: no operands".into()))?;
            Ok(Value::Bool(vals.iter().all(|v| v == first)))
        }
        "distinct" => {
            for i in 0..vals.len() {
                for j in i + 1..vals.len() {
                    if vals[i] == vals[j] {
                        return Ok(Value::Bool(false));
                    }
                }
            }
            Ok(Value::Bool(true))
        }
        "ite" => match vals {
            [Value::Bool(c), t, e] => Ok(if *c { *t } else { *e }),
            _ => Err(Error::Eval("ite: malformed".into())),
        },
        "bvadd" => {
            let (w, a, b) = bv2(vals)?;
            Ok(Value::bv(w, a.wrapping_add(b)))
        }
        "bvsub" => {
            let (w, a, b) = bv2(vals)?;
            Ok(Value::bv(w, a.wrapping_sub(b)))
        }
        "bvmul" => {
            let (w, a, b) = bv2(vals)?;
            Ok(Value::bv(w, a.wrapping_mul(b)))
        }
        "bvneg" => match vals {
            [Value::Bv { width, bits }] => Ok(Value::bv(*width, bits.wrapping_neg())),
            _ => Err(Error::Eval("bvneg: malformed".into())),
        },
        "bvnot" => match vals {
            [Value::Bv { width, bits }] => Ok(Value::bv(*width, !bits)),
            _ => Err(Error::Eval("bvnot: malformed".into())),
        },
        "bvand" => {
            let (w, a, b) = bv2(vals)?;
            Ok(Value::bv(w, a & b))
        }
        "bvor" => {
            let (w, a, b) = bv2(vals)?;
            Ok(Value::bv(w, a | b))
        }
        "bvxor" => {
            let (w, a, b) = bv2(vals)?;
            Ok(Value::bv(w, a ^ b))
        }
        "bvshl" => {
            let (w, a, b) = bv2(vals)?;
            Ok(Value::bv(w, if b >= w as u128 { 0 } else { a << b }))
        }
        "bvlshr" => {
            let (w, a, b) = bv2(vals)?;
            Ok(Value::bv(w, if b >= w as u128 { 0 } else { a >> b }))
        }
        "bvashr" => {
            let (w, a, b) = bv2(vals)?;
            let sa = to_signed(w, a);
            let sh = if b >= w as u128 { w as u128 - 1 } else { b };
            Ok(Value::bv(w, (sa >> sh) as u128))
        }
        "bvult" => {
            let (_, a, b) = bv2(vals)?;
            Ok(Value::Bool(a < b))
        }
        "bvule" => {
            let (_, a, b) = bv2(vals)?;
            Ok(Value::Bool(a <= b))
        }
        "bvugt" => {
            let (_, a, b) = bv2(vals)?;
            Ok(Value::Bool(a > b))
        }
        "bvuge" => {
            let (_, a, b) = bv2(vals)?;
            Ok(Value::Bool(a >= b))
        }
        "bvslt" => {
            let (w, a, b) = bv2(vals)?;
            Ok(Value::Bool(to_signed(w, a) < to_signed(w, b)))
        }
        "bvsle" => {
            let (w, a, b) = bv2(vals)?;
            Ok(Value::Bool(to_signed(w, a) <= to_signed(w, b)))
        }
        "bvsgt" => {
            let (w, a, b) = bv2(vals)?;
            Ok(Value::Bool(to_signed(w, a) > to_signed(w, b)))
        }
        "bvsge" => {
            let (w, a, b) = bv2(vals)?;
            Ok(Value::Bool(to_signed(w, a) >= to_signed(w, b)))
        }
        "concat" => match vals {
            [Value::Bv { width: wh, bits: hi }, Value::Bv { width: wl, bits: lo }] => {
                if wh + wl > 128 {
                    return Err(Error::Eval("concat: result wider than 128 bits".into()));
                }
                Ok(Value::bv(wh + wl, hi << wl | lo))
            }
            _ => Err(Error::Eval("concat: malformed".into())),
        },
        _ => Err(Error::Unsupported(format!("operator {op}"))),
    }
}

fn apply_indexed(indexed: &[SExpr], vals: &[Value]) -> Result<Value, Error> {
    let names: Vec<&str> = indexed.iter().filter_map(|e| e.atom()).collect();
    match names.as_slice() {
        ["_", "extract", i, j] => {
            let (i, j) = (
                i.parse::<u32>().map_err(|_| Error::Eval("bad extract index".into()))?,
                j.parse::<u32>().map_err(|_| Error::Eval("bad extract index".into()))?,
            );
            let [Value::Bv { width, bits }] = vals else {
                return Err(Error::Eval("extract: malformed".into()));
            };
            if i < j || i >= *width {
                return Err(Error::Eval("extract: bad indices".into()));
            }
            Ok(Value::bv(i - j + 1, bits >> j))
        }
        ["_", "sign_extend", n] => {
            let n = n.parse::<u32>().map_err(|_| Error::Eval("bad sign_extend".into()))?;
            let [Value::Bv { width, bits }] = vals else {
                return Err(Error::Eval("sign_extend: malformed".into()));
            };
            if width + n > 128 {
                return Err(Error::Eval("sign_extend: wider than 128 bits".into()));
            }
            Ok(Value::bv(width + n, to_signed(*width, *bits) as u128))
        }
        ["_", "zero_extend", n] => {
            let n = n.parse::<u32>().map_err(|_| Error::Eval("bad zero_extend".into()))?;
            let [Value::Bv { width, bits }] = vals else {
                return Err(Error::Eval("zero_extend: malformed".into()));
            };
            if width + n > 128 {
                return Err(Error::Eval("zero_extend: wider than 128 bits".into()));
            }
            Ok(Value::bv(width + n, *bits))
        }
        _ => Err(Error::Unsupported(format!(
            "indexed operator ({})",
            names.join(" ")
        ))),
    }
}
