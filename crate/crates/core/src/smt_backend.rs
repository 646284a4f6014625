//! Bounded-model-checking backend: encodes the unrolled filter into an
//! SMT-LIB v2 `QF_BV` script, drives an external solver process, and decodes
//! the model back into a concrete counterexample.
//!
//! Mantissas are `w`-bit words; every arithmetic step is computed exactly at
//! `2w` bits (products via sign extension, the tie-away rounding as an
//! explicit circuit), so the range check happens on the true pre-wrap value.
//! For the overflow property the violated assertion is the disjunction of
//! per-operator range failures; the wrapped low word feeds the next step,
//! which coincides with the error-mode trajectory up to the first failure.
//!
//! Every `sat` answer is replayed through the simulator before it is
//! reported; a model that does not reproduce the violation is an encoding or
//! solver defect and degrades the verdict to `Unknown`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use crate::filter_model::{FilterSpec, FilterState};
use crate::fixedpoint::{FixedFormat, FxNum, OverflowMode};
use crate::verifier::{
    detect_cycle, simulate_trace, Counterexample, Property, VerificationResult, ViolationKind,
};

/// What a declared constant in the generated script stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarRole {
    /// Input sample `x(t)`, `t` counted from 1.
    Input(usize),
    /// Initial output history `y(-i)`, `i` counted from 1.
    InitY(usize),
    /// Initial input history `x(-i)`, `i` counted from 1.
    InitX(usize),
}

/// A generated script plus the mapping from its free variables back to
/// filter quantities.
#[derive(Debug, Clone)]
pub struct SmtScript {
    pub text: String,
    pub var_map: Vec<(String, VarRole)>,
}

/// How to reach the solver process.
#[derive(Debug, Clone)]
pub struct SmtEngineConfig {
    /// Program and arguments; the script is written to its stdin and the
    /// answer read from its stdout.
    pub solver_cmd: Vec<String>,
    pub timeout: Duration,
}

impl Default for SmtEngineConfig {
    fn default() -> SmtEngineConfig {
        SmtEngineConfig {
            solver_cmd: vec![default_solver_program()],
            timeout: Duration::from_secs(120),
        }
    }
}

/// Locates the bundled solver binary: an explicit `FIXCHECK_SOLVER` override,
/// else `fixcheck-solver` next to the current executable (also one directory
/// up, for test binaries living in `deps/`), else bare `fixcheck-solver`
/// resolved through `PATH`.
pub fn default_solver_program() -> String {
    if let Ok(p) = std::env::var("FIXCHECK_SOLVER") {
        return p;
    }
    if let Ok(exe) = std::env::current_exe() {
        let mut dirs = Vec::new();
        if let Some(d) = exe.parent() {
            dirs.push(d.to_path_buf());
            if d.ends_with("deps") {
                if let Some(up) = d.parent() {
                    dirs.push(up.to_path_buf());
                }
            }
        }
        for d in dirs {
            let cand = d.join(format!("fixcheck-solver{}", std::env::consts::EXE_SUFFIX));
            if cand.is_file() {
                return cand.to_string_lossy().into_owned();
            }
        }
    }
    "fixcheck-solver".to_string()
}

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("failed to start solver {0:?}: {1}")]
    Spawn(String, std::io::Error),
    #[error("solver i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("solver exceeded the {}s timeout", .0.as_secs())]
    Timeout(Duration),
    #[error("unexpected solver output: {0}")]
    Malformed(String),
}

/// Decoded solver answer; `Sat` carries the signed mantissa assigned to each
/// variable in the script's `var_map`.
#[derive(Debug, Clone)]
pub enum SolverOutcome {
    Sat(HashMap<String, i64>),
    Unsat,
    Unknown(String),
}

fn bv_const(mantissa: i64, width: u32) -> String {
    let m = if width >= 128 {
        mantissa as i128 as u128
    } else {
        (mantissa as i128 as u128) & ((1u128 << width) - 1)
    };
    format!("(_ bv{m} {width})")
}

struct Encoder {
    text: String,
    width: u32,
    wide: u32,
}

impl Encoder {
    fn new(format: FixedFormat) -> Encoder {
        Encoder {
            text: String::from("(set-logic QF_BV)\n"),
            width: format.width(),
            wide: 2 * format.width(),
        }
    }

    fn declare(&mut self, name: &str) {
        let w = self.width;
        let _ = writeln!(self.text, "(declare-const {name} (_ BitVec {w}))");
    }

    fn define(&mut self, name: &str, width: u32, body: &str) {
        let _ = writeln!(self.text, "(define-fun {name} () (_ BitVec {width}) {body})");
    }

    fn define_bool(&mut self, name: &str, body: &str) {
        let _ = writeln!(self.text, "(define-fun {name} () Bool {body})");
    }

    fn assert(&mut self, body: &str) {
        let _ = writeln!(self.text, "(assert {body})");
    }

    fn sext(&self, sym: &str) -> String {
        format!("((_ sign_extend {}) {})", self.width, sym)
    }

    /// Tie-away-from-zero division of `prod` (a `2w`-bit exact value) by
    /// `2^l`; the identity for `l = 0`.
    fn round_term(&self, prod: &str, frac_bits: u32) -> String {
        if frac_bits == 0 {
            return prod.to_string();
        }
        let half = bv_const(1i64 << (frac_bits - 1), self.wide);
        let shift = bv_const(frac_bits as i64, self.wide);
        let zero = bv_const(0, self.wide);
        format!(
            "(ite (bvslt {prod} {zero}) \
               (bvneg (bvashr (bvadd (bvneg {prod}) {half}) {shift})) \
               (bvashr (bvadd {prod} {half}) {shift}))"
        )
    }

    fn narrow(&self, sym: &str) -> String {
        format!("((_ extract {} 0) {})", self.width - 1, sym)
    }
}

/// Unrolls `bound` filter steps and encodes the requested property.
pub fn encode(spec: &FilterSpec, property: Property, bound: usize) -> SmtScript {
    assert!(bound >= 1);
    assert!(
        property != Property::Timing,
        "timing is a static check, not a search property"
    );
    let f = spec.format();
    let l = f.frac_bits();
    let mut e = Encoder::new(f);
    let mut var_map = Vec::new();

    e.define("zero", e.width, &bv_const(0, e.width));

    // coefficient constants
    for (i, c) in spec.b().iter().enumerate() {
        e.define(&format!("b{i}"), e.width, &bv_const(c.mantissa(), e.width));
    }
    for (i, c) in spec.a().iter().enumerate() {
        e.define(&format!("a{}", i + 1), e.width, &bv_const(c.mantissa(), e.width));
    }

    // initial histories
    let n = spec.feedback_order();
    let m = spec.feedforward_order();
    let mut y_hist: Vec<String> = Vec::with_capacity(n);
    let mut x_hist: Vec<String> = Vec::with_capacity(m);
    match property {
        Property::Overflow => {
            y_hist.resize(n, "zero".to_string());
            x_hist.resize(m, "zero".to_string());
        }
        Property::LimitCycle => {
            for i in 1..=n {
                let name = format!("iy_{i}");
                e.declare(&name);
                var_map.push((name.clone(), VarRole::InitY(i)));
                y_hist.push(name);
            }
            for i in 1..=m {
                let name = format!("ix_{i}");
                e.declare(&name);
                var_map.push((name.clone(), VarRole::InitX(i)));
                x_hist.push(name);
            }
        }
        Property::Timing => unreachable!(),
    }

    // inputs
    let grid = spec.input_grid_mantissas();
    let mut inputs: Vec<String> = Vec::with_capacity(bound);
    for t in 1..=bound {
        match property {
            Property::Overflow => {
                let name = format!("x_{t}");
                e.declare(&name);
                let lo = bv_const(*grid.start(), e.width);
                let hi = bv_const(*grid.end(), e.width);
                e.assert(&format!("(bvsle {lo} {name})"));
                e.assert(&format!("(bvsle {name} {hi})"));
                var_map.push((name.clone(), VarRole::Input(t)));
                inputs.push(name);
            }
            Property::LimitCycle => inputs.push("zero".to_string()),
            Property::Timing => unreachable!(),
        }
    }

    // unrolled steps
    let min_w = bv_const(f.min_mantissa(), e.wide);
    let max_w = bv_const(f.max_mantissa(), e.wide);
    let mut ok_flags: Vec<String> = Vec::new();
    // state vectors after each step; index 0 is the initial state
    let mut states: Vec<Vec<String>> = vec![y_hist.iter().chain(&x_hist).cloned().collect()];
    for t in 1..=bound {
        let x = inputs[t - 1].clone();
        let mut emit = |e: &mut Encoder, label: String, wide_body: String| -> String {
            let rnd = format!("s{t}_{label}");
            e.define(&rnd, e.wide, &wide_body);
            if property == Property::Overflow {
                let ok = format!("{rnd}_ok");
                e.define_bool(
                    &ok,
                    &format!("(and (bvsle {min_w} {rnd}) (bvsle {rnd} {max_w}))"),
                );
                ok_flags.push(ok);
            }
            let v = format!("{rnd}_v");
            let body = e.narrow(&rnd);
            e.define(&v, e.width, &body);
            v
        };
        let prod0 = e.round_term(&format!("(bvmul {} {})", e.sext("b0"), e.sext(&x)), l);
        let mut acc = emit(&mut e, "mb0".to_string(), prod0);
        for k in 1..=m {
            let prod = e.round_term(
                &format!("(bvmul {} {})", e.sext(&format!("b{k}")), e.sext(&x_hist[k - 1])),
                l,
            );
            let p = emit(&mut e, format!("mb{k}"), prod);
            let sum = format!("(bvadd {} {})", e.sext(&acc), e.sext(&p));
            acc = emit(&mut e, format!("ab{k}"), sum);
        }
        for k in 1..=n {
            let prod = e.round_term(
                &format!("(bvmul {} {})", e.sext(&format!("a{k}")), e.sext(&y_hist[k - 1])),
                l,
            );
            let p = emit(&mut e, format!("ma{k}"), prod);
            let diff = format!("(bvsub {} {})", e.sext(&acc), e.sext(&p));
            acc = emit(&mut e, format!("sa{k}"), diff);
        }
        let y = format!("y_{t}");
        e.define(&y, e.width, &acc);
        if !y_hist.is_empty() {
            y_hist.rotate_right(1);
            y_hist[0] = y;
        }
        if !x_hist.is_empty() {
            x_hist.rotate_right(1);
            x_hist[0] = x;
        }
        states.push(y_hist.iter().chain(&x_hist).cloned().collect());
    }

    // the property to violate
    match property {
        Property::Overflow => {
            let clauses: Vec<String> = ok_flags.iter().map(|f| format!("(not {f})")).collect();
            e.assert(&or_term(&clauses));
        }
        Property::LimitCycle => {
            let comps = states[0].len();
            let mut clauses = Vec::new();
            for i in 0..states.len() {
                for j in (i + 1)..states.len() {
                    let mut parts: Vec<String> = (0..comps)
                        .map(|c| format!("(= {} {})", states[i][c], states[j][c]))
                        .collect();
                    let nz: Vec<String> = (0..comps)
                        .map(|c| format!("(distinct {} zero)", states[i][c]))
                        .collect();
                    parts.push(or_term(&nz));
                    clauses.push(and_term(&parts));
                }
            }
            e.assert(&or_term(&clauses));
        }
        Property::Timing => unreachable!(),
    }

    let mut text = e.text;
    text.push_str("(check-sat)\n");
    if !var_map.is_empty() {
        let names: Vec<&str> = var_map.iter().map(|(n, _)| n.as_str()).collect();
        let _ = writeln!(text, "(get-value ({}))", names.join(" "));
    }
    SmtScript { text, var_map }
}

fn or_term(clauses: &[String]) -> String {
    match clauses {
        [] => "false".to_string(),
        [one] => one.clone(),
        many => format!("(or {})", many.join(" ")),
    }
}

fn and_term(clauses: &[String]) -> String {
    match clauses {
        [] => "true".to_string(),
        [one] => one.clone(),
        many => format!("(and {})", many.join(" ")),
    }
}

/// Runs the configured solver on `script` and decodes its answer.
pub fn solve(script: &SmtScript, cfg: &SmtEngineConfig) -> Result<SolverOutcome, SolverError> {
    let (program, args) = cfg
        .solver_cmd
        .split_first()
        .ok_or_else(|| SolverError::Malformed("empty solver command".into()))?;
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| SolverError::Spawn(cfg.solver_cmd.join(" "), e))?;

    // feed the script from a helper thread so a solver that streams output
    // before consuming all of its input cannot deadlock us
    let mut stdin = child.stdin.take().expect("stdin piped");
    let text = script.text.clone();
    let writer = std::thread::spawn(move || {
        let _ = stdin.write_all(text.as_bytes());
    });
    let mut stdout = child.stdout.take().expect("stdout piped");
    let reader = std::thread::spawn(move || {
        let mut out = String::new();
        let _ = stdout.read_to_string(&mut out);
        out
    });

    let start = Instant::now();
    loop {
        if child.try_wait()?.is_some() {
            break;
        }
        if start.elapsed() > cfg.timeout {
            let _ = child.kill();
            let _ = child.wait();
            let _ = writer.join();
            let _ = reader.join();
            return Err(SolverError::Timeout(cfg.timeout));
        }
        std::thread::sleep(Duration::from_millis(5));
    }
    let _ = writer.join();
    let out = reader.join().unwrap_or_default();

    let mut lines = out.lines();
    match lines.next().map(str::trim) {
        Some("unsat") => Ok(SolverOutcome::Unsat),
        Some("unknown") => Ok(SolverOutcome::Unknown(format!(
            "solver answered unknown: {}",
            lines.next().unwrap_or("").trim_start_matches(';').trim()
        ))),
        Some("sat") => {
            if script.var_map.is_empty() {
                return Ok(SolverOutcome::Sat(HashMap::new()));
            }
            let rest: String = out.splitn(2, '\n').nth(1).unwrap_or("").to_string();
            decode_model(&rest, script).map(SolverOutcome::Sat)
        }
        other => Err(SolverError::Malformed(format!(
            "first line was {:?}",
            other.unwrap_or("")
        ))),
    }
}

fn decode_model(body: &str, script: &SmtScript) -> Result<HashMap<String, i64>, SolverError> {
    let exprs =
        smtbv::parse_all(body).map_err(|e| SolverError::Malformed(format!("model: {e}")))?;
    let pairs = exprs
        .first()
        .and_then(|e| e.list())
        .ok_or_else(|| SolverError::Malformed("model is not a list".into()))?;
    let mut values = HashMap::new();
    for p in pairs {
        let Some([name, val]) = p.list() else {
            return Err(SolverError::Malformed(format!("bad model pair {p}")));
        };
        let name = name
            .atom()
            .ok_or_else(|| SolverError::Malformed("model key is not a symbol".into()))?;
        let v = smtbv::parse_literal(val).ok_or_else(|| {
            SolverError::Malformed(format!("model value for {name} is not a literal"))
        })?;
        let signed = v
            .as_signed()
            .ok_or_else(|| SolverError::Malformed(format!("{name} is not a bit-vector")))?;
        values.insert(name.to_string(), signed as i64);
    }
    for (name, _) in &script.var_map {
        if !values.contains_key(name) {
            return Err(SolverError::Malformed(format!("model is missing {name}")));
        }
    }
    Ok(values)
}

/// Rebuilds the concrete stimulus from the model, replays it, and returns a
/// validated counterexample. A model that does not replay is rejected.
pub fn extract_counterexample(
    spec: &FilterSpec,
    property: Property,
    bound: usize,
    script: &SmtScript,
    model: &HashMap<String, i64>,
) -> Result<Counterexample, String> {
    for (name, _) in &script.var_map {
        if !model.contains_key(name) {
            return Err(format!("model is missing {name}"));
        }
    }
    let f = spec.format();
    let fx = |name: &str| -> Result<FxNum, String> {
        let m = *model.get(name).ok_or_else(|| format!("model is missing {name}"))?;
        FxNum::from_mantissa(m, f).ok_or_else(|| format!("{name} = {m} is out of range for {f}"))
    };
    match property {
        Property::Overflow => {
            let spec = spec.with_overflow_mode(OverflowMode::Error);
            let mut inputs = Vec::with_capacity(bound);
            for t in 1..=bound {
                inputs.push(fx(&format!("x_{t}"))?);
            }
            let init = FilterState::zero(&spec);
            let sim = simulate_trace(&spec, &inputs, &init);
            let Some((step, op)) = sim.violation else {
                return Err("model does not replay to an overflow".into());
            };
            inputs.truncate(step + 1);
            Ok(Counterexample {
                inputs,
                initial_state: init,
                trace: sim.trace,
                violation: ViolationKind::Overflow { step, op },
            })
        }
        Property::LimitCycle => {
            let spec = spec.with_overflow_mode(OverflowMode::Wrap);
            let mut y = Vec::new();
            for i in 1..=spec.feedback_order() {
                y.push(fx(&format!("iy_{i}"))?);
            }
            let mut x = Vec::new();
            for i in 1..=spec.feedforward_order() {
                x.push(fx(&format!("ix_{i}"))?);
            }
            let init = FilterState::new(y, x);
            let zero = FxNum::zero(f);
            let sim = simulate_trace(&spec, &vec![zero; bound], &init);
            let Some((cycle_start, period, cycle)) = detect_cycle(&sim.states) else {
                return Err("model does not replay to a repeated nonzero state".into());
            };
            let steps = cycle_start + period;
            let mut trace = sim.trace;
            trace.steps.truncate(steps);
            Ok(Counterexample {
                inputs: vec![zero; steps],
                initial_state: init,
                trace,
                violation: ViolationKind::LimitCycle { cycle_start, period, cycle },
            })
        }
        Property::Timing => Err("timing has no counterexample trace".into()),
    }
}

/// Full SMT engine pass: encode, solve, decode, replay.
pub fn run(
    spec: &FilterSpec,
    property: Property,
    bound: usize,
    cfg: &SmtEngineConfig,
) -> VerificationResult {
    let script = encode(spec, property, bound);
    match solve(&script, cfg) {
        Err(e) => VerificationResult::Unknown(e.to_string()),
        Ok(SolverOutcome::Unknown(r)) => VerificationResult::Unknown(r),
        Ok(SolverOutcome::Unsat) => VerificationResult::Verified(bound),
        Ok(SolverOutcome::Sat(model)) => {
            match extract_counterexample(spec, property, bound, &script, &model) {
                Ok(cx) => VerificationResult::Violation(Box::new(cx)),
                Err(why) => VerificationResult::Unknown(format!(
                    "solver model failed replay validation: {why}"
                )),
            }
        }
    }
}
