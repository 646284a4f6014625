//! Tseitin bit-blasting of QF_BV terms to CNF, solved with splr.
//!
//! Literals are DIMACS-style `i32`s. Variable 1 is pinned to true so that
//! constant bits can be represented as `1` / `-1` and folded eagerly.

use std::collections::HashMap;

use splr::{Certificate, SolverError};

use crate::eval::{parse_literal, Value};
use crate::sexpr::SExpr;
use crate::Error;

const TRUE: i32 = 1;
const FALSE: i32 = -1;

/// Bit-level representation of a term: one literal per Bool, LSB-first
/// literal vector per bit-vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Bits {
    Bool(i32),
    Bv(Vec<i32>),
}

impl Bits {
    fn as_bool(&self) -> Result<i32, Error> {
        match self {
            Bits::Bool(l) => Ok(*l),
            Bits::Bv(_) => Err(Error::Sort("expected Bool, found bit-vector".into())),
        }
    }

    fn as_bv(&self) -> Result<&[i32], Error> {
        match self {
            Bits::Bv(v) => Ok(v),
            Bits::Bool(_) => Err(Error::Sort("expected bit-vector, found Bool".into())),
        }
    }
}

#[derive(Debug)]
pub enum SatOutcome {
    Sat(Model),
    Unsat,
    Unknown(String),
}

/// A satisfying assignment, indexed by variable number.
#[derive(Debug)]
pub struct Model {
    assign: Vec<bool>,
}

impl Model {
    pub fn lit(&self, l: i32) -> bool {
        let v = self.assign.get(l.unsigned_abs() as usize).copied().unwrap_or(false);
        if l > 0 {
            v
        } else {
            !v
        }
    }

    pub fn read(&self, bits: &Bits) -> Value {
        match bits {
            Bits::Bool(l) => Value::Bool(self.lit(*l)),
            Bits::Bv(v) => {
                let mut out: u128 = 0;
                for (i, &l) in v.iter().enumerate() {
                    if self.lit(l) {
                        out |= 1 << i;
                    }
                }
                Value::bv(v.len() as u32, out)
            }
        }
    }
}

pub struct Blaster {
    clauses: Vec<Vec<i32>>,
    nvars: i32,
    syms: HashMap<String, Bits>,
}

impl Default for Blaster {
    fn default() -> Self {
        Self::new()
    }
}

impl Blaster {
    pub fn new() -> Blaster {
        Blaster {
            // pin variable 1 to true
            clauses: vec![vec![TRUE]],
            nvars: 1,
            syms: HashMap::new(),
        }
    }

    pub fn declare_bool(&mut self, name: &str) -> Bits {
        let b = Bits::Bool(self.fresh());
        self.syms.insert(name.to_string(), b.clone());
        b
    }

    pub fn declare_bv(&mut self, name: &str, width: u32) -> Bits {
        let b = Bits::Bv((0..width).map(|_| self.fresh()).collect());
        self.syms.insert(name.to_string(), b.clone());
        b
    }

    pub fn define(&mut self, name: &str, bits: Bits) {
        self.syms.insert(name.to_string(), bits);
    }

    pub fn lookup(&self, name: &str) -> Option<&Bits> {
        self.syms.get(name)
    }

    pub fn assert(&mut self, expr: &SExpr) -> Result<(), Error> {
        let lit = self.blast(expr)?.as_bool()?;
        self.clauses.push(vec![lit]);
        Ok(())
    }

    pub fn solve(&self) -> SatOutcome {
        match Certificate::try_from(self.clauses.clone()) {
            Ok(Certificate::SAT(lits)) => {
                let mut assign = vec![false; self.nvars as usize + 1];
                for l in lits {
                    let v = l.unsigned_abs() as usize;
                    if v < assign.len() {
                        assign[v] = l > 0;
                    }
                }
                SatOutcome::Sat(Model { assign })
            }
            Ok(Certificate::UNSAT) => SatOutcome::Unsat,
            Err(SolverError::EmptyClause)
            | Err(SolverError::Inconsistent)
            | Err(SolverError::RootLevelConflict(_)) => SatOutcome::Unsat,
            Err(e) => SatOutcome::Unknown(format!("SAT solver failure: {e:?}")),
        }
    }

    fn fresh(&mut self) -> i32 {
        self.nvars += 1;
        self.nvars
    }

    // ---- gates, with eager constant folding ----

    fn and2(&mut self, a: i32, b: i32) -> i32 {
        if a == TRUE {
            return b;
        }
        if b == TRUE {
            return a;
        }
        if a == FALSE || b == FALSE || a == -b {
            return FALSE;
        }
        if a == b {
            return a;
        }
        let g = self.fresh();
        self.clauses.push(vec![-g, a]);
        self.clauses.push(vec![-g, b]);
        self.clauses.push(vec![g, -a, -b]);
        g
    }

    fn or2(&mut self, a: i32, b: i32) -> i32 {
        -self.and2(-a, -b)
    }

    fn xor2(&mut self, a: i32, b: i32) -> i32 {
        if a == TRUE {
            return -b;
        }
        if a == FALSE {
            return b;
        }
        if b == TRUE {
            return -a;
        }
        if b == FALSE {
            return a;
        }
        if a == b {
            return FALSE;
        }
        if a == -b {
            return TRUE;
        }
        let g = self.fresh();
        self.clauses.push(vec![-g, a, b]);
        self.clauses.push(vec![-g, -a, -b]);
        self.clauses.push(vec![g, -a, b]);
        self.clauses.push(vec![g, a, -b]);
        g
    }

    fn mux(&mut self, c: i32, t: i32, e: i32) -> i32 {
        if c == TRUE {
            return t;
        }
        if c == FALSE {
            return e;
        }
        if t == e {
            return t;
        }
        let ct = self.and2(c, t);
        let ce = self.and2(-c, e);
        self.or2(ct, ce)
    }

    fn full_adder(&mut self, a: i32, b: i32, cin: i32) -> (i32, i32) {
        let ab = self.xor2(a, b);
        let sum = self.xor2(ab, cin);
        let t1 = self.and2(a, b);
        let t2 = self.and2(cin, ab);
        let cout = self.or2(t1, t2);
        (sum, cout)
    }

    /// Ripple-carry sum mod 2^n; returns (bits, carry-out).
    fn add_carry(&mut self, xs: &[i32], ys: &[i32], cin: i32) -> (Vec<i32>, i32) {
        debug_assert_eq!(xs.len(), ys.len());
        let mut out = Vec::with_capacity(xs.len());
        let mut carry = cin;
        for (&a, &b) in xs.iter().zip(ys) {
            let (s, c) = self.full_adder(a, b, carry);
            out.push(s);
            carry = c;
        }
        (out, carry)
    }

    fn add(&mut self, xs: &[i32], ys: &[i32]) -> Vec<i32> {
        self.add_carry(xs, ys, FALSE).0
    }

    fn sub(&mut self, xs: &[i32], ys: &[i32]) -> Vec<i32> {
        let nys: Vec<i32> = ys.iter().map(|&l| -l).collect();
        self.add_carry(xs, &nys, TRUE).0
    }

    fn neg(&mut self, xs: &[i32]) -> Vec<i32> {
        let zero = vec![FALSE; xs.len()];
        self.sub(&zero, xs)
    }

    fn mul(&mut self, xs: &[i32], ys: &[i32]) -> Vec<i32> {
        let n = xs.len();
        let mut acc = vec![FALSE; n];
        for (i, &y) in ys.iter().enumerate() {
            // partial product: (xs << i) & y
            let mut pp = vec![FALSE; n];
            for j in i..n {
                pp[j] = self.and2(xs[j - i], y);
            }
            acc = self.add(&acc, &pp);
        }
        acc
    }

    /// Unsigned a < b as (not carry-out of a + ~b + 1).
    fn ult(&mut self, xs: &[i32], ys: &[i32]) -> i32 {
        let nys: Vec<i32> = ys.iter().map(|&l| -l).collect();
        let (_, carry) = self.add_carry(xs, &nys, TRUE);
        -carry
    }

    fn slt(&mut self, xs: &[i32], ys: &[i32]) -> i32 {
        // flipping the sign bit maps two's-complement order to unsigned order
        let mut a = xs.to_vec();
        let mut b = ys.to_vec();
        *a.last_mut().unwrap() = -a.last().unwrap();
        *b.last_mut().unwrap() = -b.last().unwrap();
        self.ult(&a, &b)
    }

    fn eq_bits(&mut self, a: &Bits, b: &Bits) -> Result<i32, Error> {
        match (a, b) {
            (Bits::Bool(x), Bits::Bool(y)) => Ok(-self.xor2(*x, *y)),
            (Bits::Bv(xs), Bits::Bv(ys)) => {
                if xs.len() != ys.len() {
                    return Err(Error::Sort("=: width mismatch".into()));
                }
                let mut acc = TRUE;
                for (&x, &y) in xs.iter().zip(ys) {
                    let bit_eq = -self.xor2(x, y);
                    acc = self.and2(acc, bit_eq);
                }
                Ok(acc)
            }
            _ => Err(Error::Sort("=: mixed sorts".into())),
        }
    }

    fn const_bv(value: &Value) -> Result<Bits, Error> {
        match *value {
            Value::Bool(b) => Ok(Bits::Bool(if b { TRUE } else { FALSE })),
            Value::Bv { width, bits } => Ok(Bits::Bv(
                (0..width)
                    .map(|i| if bits >> i & 1 == 1 { TRUE } else { FALSE })
                    .collect(),
            )),
        }
    }

    /// Shift amount if the operand is a compile-time constant.
    fn const_amount(bits: &[i32]) -> Option<u32> {
        let mut v: u32 = 0;
        for (i, &l) in bits.iter().enumerate() {
            if l == TRUE {
                if i >= 32 {
                    return Some(u32::MAX);
                }
                v |= 1 << i;
            } else if l != FALSE {
                return None;
            }
        }
        Some(v)
    }

    // ---- term translation ----

    pub fn blast(&mut self, expr: &SExpr) -> Result<Bits, Error> {
        self.blast_in(expr, &HashMap::new())
    }

    fn blast_in(&mut self, expr: &SExpr, locals: &HashMap<String, Bits>) -> Result<Bits, Error> {
        if let Some(v) = parse_literal(expr) {
            return Self::const_bv(&v);
        }
        match expr {
            SExpr::Atom(a) => locals
                .get(a)
                .or_else(|| self.syms.get(a))
                .cloned()
                .ok_or_else(|| Error::Eval(format!("unbound symbol {a}"))),
            SExpr::List(items) => {
                let (head, args) = items
                    .split_first()
                    .ok_or_else(|| Error::Parse("empty application".into()))?;
                match head {
                    SExpr::Atom(op) if op == "let" => {
                        let [bindings, body] = args else {
                            return Err(Error::Parse("malformed let".into()));
                        };
                        let mut inner = locals.clone();
                        for b in bindings.list().ok_or_else(|| Error::Parse("malformed let".into()))? {
                            let [name, val] =
                                b.list().ok_or_else(|| Error::Parse("malformed let".into()))?
                            else {
                                return Err(Error::Parse("malformed let binding".into()));
                            };
                            let name =
                                name.atom().ok_or_else(|| Error::Parse("malformed let".into()))?;
                            let v = self.blast_in(val, locals)?;
                            inner.insert(name.to_string(), v);
                        }
                        self.blast_in(body, &inner)
                    }
                    SExpr::Atom(op) => {
                        let vals: Vec<Bits> = args
                            .iter()
                            .map(|a| self.blast_in(a, locals))
                            .collect::<Result<_, _>>()?;
                        self.apply(op, &vals)
                    }
                    SExpr::List(indexed) => {
                        let vals: Vec<Bits> = args
                            .iter()
                            .map(|a| self.blast_in(a, locals))
                            .collect::<Result<_, _>>()?;
                        self.apply_indexed(indexed, &vals)
                    }
                }
            }
        }
    }

    fn apply(&mut self, op: &str, vals: &[Bits]) -> Result<Bits, Error> {
        let bv2 = |vals: &[Bits]| -> Result<(Vec<i32>, Vec<i32>), Error> {
            let [a, b] = vals else {
                return Err(Error::Sort(format!("{op}: expected two operands")));
            };
            let (a, b) = (a.as_bv()?.to_vec(), b.as_bv()?.to_vec());
            if a.len() != b.len() {
                return Err(Error::Sort(format!("{op}: width mismatch")));
            }
            Ok((a, b))
        };
        match op {
            "and" => {
                let mut acc = TRUE;
                for v in vals {
                    let l = v.as_bool()?;
                    acc = self.and2(acc, l);
                }
                Ok(Bits::Bool(acc))
            }
            "or" => {
                let mut acc = FALSE;
                for v in vals {
                    let l = v.as_bool()?;
                    acc = self.or2(acc, l);
                }
                Ok(Bits::Bool(acc))
            }
            "xor" => {
                let mut acc = FALSE;
                for v in vals {
                    let l = v.as_bool()?;
                    acc = self.xor2(acc, l);
                }
                Ok(Bits::Bool(acc))
            }
            "not" => match vals {
                [b] => Ok(Bits::Bool(-b.as_bool()?)),
                _ => Err(Error::Sort("not: expected one operand".into())),
            },
            "=>" => {
                let lits: Vec<i32> = vals.iter().map(|v| v.as_bool()).collect::<Result<_, _>>()?;
                let (&last, init) = lits
                    .split_last()
                    .ok_or_else(|| Error::Sort("=>: no operands".into()))?;
                let mut acc = last;
                for &l in init.iter().rev() {
                    acc = self.or2(-l, acc);
                }
                Ok(Bits::Bool(acc))
            }
            "=" => {
                let mut acc = TRUE;
                for pair in vals.windows(2) {
                    let e = self.eq_bits(&pair[0], &pair[1])?;
                    acc = self.and2(acc, e);
                }
                Ok(Bits::Bool(acc))
            }
            "distinct" => {
                let mut acc = TRUE;
                for i in 0..vals.len() {
                    for j in i + 1..vals.len() {
                        let e = self.eq_bits(&vals[i], &vals[j])?;
                        acc = self.and2(acc, -e);
                    }
                }
                Ok(Bits::Bool(acc))
            }
            "ite" => match vals {
                [c, t, e] => {
                    let c = c.as_bool()?;
                    match (t, e) {
                        (Bits::Bool(t), Bits::Bool(e)) => Ok(Bits::Bool(self.mux(c, *t, *e))),
                        (Bits::Bv(ts), Bits::Bv(es)) if ts.len() == es.len() => Ok(Bits::Bv(
                            ts.iter()
                                .zip(es.clone())
                                .map(|(&t, e)| self.mux(c, t, e))
                                .collect(),
                        )),
                        _ => Err(Error::Sort("ite: branch sorts differ".into())),
                    }
                }
                _ => Err(Error::Sort("ite: expected three operands".into())),
            },
            "bvadd" => {
                let (a, b) = bv2(vals)?;
                Ok(Bits::Bv(self.add(&a, &b)))
            }
            "bvsub" => {
                let (a, b) = bv2(vals)?;
                Ok(Bits::Bv(self.sub(&a, &b)))
            }
            "bvmul" => {
                let (a, b) = bv2(vals)?;
                Ok(Bits::Bv(self.mul(&a, &b)))
            }
            "bvneg" => match vals {
                [a] => {
                    let a = a.as_bv()?.to_vec();
                    Ok(Bits::Bv(self.neg(&a)))
                }
                _ => Err(Error::Sort("bvneg: expected one operand".into())),
            },
            "bvnot" => match vals {
                [a] => Ok(Bits::Bv(a.as_bv()?.iter().map(|&l| -l).collect())),
                _ => Err(Error::Sort("bvnot: expected one operand".into())),
            },
            "bvand" | "bvor" | "bvxor" => {
                let (a, b) = bv2(vals)?;
                let bits = a
                    .iter()
                    .zip(b)
                    .map(|(&x, y)| match op {
                        "bvand" => self.and2(x, y),
                        "bvor" => self.or2(x, y),
                        _ => self.xor2(x, y),
                    })
                    .collect();
                Ok(Bits::Bv(bits))
            }
            "bvshl" | "bvlshr" | "bvashr" => {
                let (a, b) = bv2(vals)?;
                let n = a.len();
                let amount = Self::const_amount(&b).ok_or_else(|| {
                    Error::Unsupported(format!("{op} with non-constant shift amount"))
                })? as usize;
                let bits = match op {
                    "bvshl" => (0..n)
                        .map(|i| if i >= amount { a[i - amount] } else { FALSE })
                        .collect(),
                    "bvlshr" => (0..n)
                        .map(|i| if i + amount < n { a[i + amount] } else { FALSE })
                        .collect(),
                    _ => {
                        let sign = *a.last().unwrap();
                        (0..n)
                            .map(|i| if i + amount < n { a[i + amount] } else { sign })
                            .collect()
                    }
                };
                Ok(Bits::Bv(bits))
            }
            "bvult" | "bvule" | "bvugt" | "bvuge" | "bvslt" | "bvsle" | "bvsgt" | "bvsge" => {
                let (a, b) = bv2(vals)?;
                let lit = match op {
                    "bvult" => self.ult(&a, &b),
                    "bvule" => -self.ult(&b, &a),
                    "bvugt" => self.ult(&b, &a),
                    "bvuge" => -self.ult(&a, &b),
                    "bvslt" => self.slt(&a, &b),
                    "bvsle" => -self.slt(&b, &a),
                    "bvsgt" => self.slt(&b, &a),
                    _ => -self.slt(&a, &b),
                };
                Ok(Bits::Bool(lit))
            }
            "concat" => match vals {
                [hi, lo] => {
                    let mut bits = lo.as_bv()?.to_vec();
                    bits.extend_from_slice(hi.as_bv()?);
                    Ok(Bits::Bv(bits))
                }
                _ => Err(Error::Sort("concat: expected two operands".into())),
            },
            _ => Err(Error::Unsupported(format!("operator {op}"))),
        }
    }

    fn apply_indexed(&mut self, indexed: &[SExpr], vals: &[Bits]) -> Result<Bits, Error> {
        let names: Vec<&str> = indexed.iter().filter_map(|e| e.atom()).collect();
        let one = |vals: &[Bits]| -> Result<Vec<i32>, Error> {
            match vals {
                [a] => Ok(a.as_bv()?.to_vec()),
                _ => Err(Error::Sort("indexed op: expected one operand".into())),
            }
        };
        match names.as_slice() {
            ["_", "extract", i, j] => {
                let (i, j) = (
                    i.parse::<usize>().map_err(|_| Error::Parse("bad extract".into()))?,
                    j.parse::<usize>().map_err(|_| Error::Parse("bad extract".into()))?,
                );
                let a = one(vals)?;
                if i < j || i >= a.len() {
                    return Err(Error::Sort("extract: bad indices".into()));
                }
                Ok(Bits::Bv(a[j..=i].to_vec()))
            }
            ["_", "sign_extend", n] => {
                let n = n.parse::<usize>().map_err(|_| Error::Parse("bad sign_extend".into()))?;
                let mut a = one(vals)?;
                let sign = *a.last().ok_or_else(|| Error::Sort("sign_extend: empty".into()))?;
                a.extend(std::iter::repeat(sign).take(n));
                Ok(Bits::Bv(a))
            }
            ["_", "zero_extend", n] => {
                let n = n.parse::<usize>().map_err(|_| Error::Parse("bad zero_extend".into()))?;
                let mut a = one(vals)?;
                a.extend(std::iter::repeat(FALSE).take(n));
                Ok(Bits::Bv(a))
            }
            _ => Err(Error::Unsupported(format!(
                "indexed operator ({})",
                names.join(" ")
            ))),
        }
    }
}
