//! CircuitDecoding: identify which candidate circuit hides behind each label
//! by querying labels on binary inputs.
//!
//! Candidates are small expression trees written as prefix strings, e.g.
//! `OR(AND(x0,x1),x2)`. A bare gate name (`AND`, `OR`, `XOR`) applies the
//! gate to every input; a bare `NOT` negates `x0`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Task, TaskKind};
use crate::belief::{ObservationTable, StateSpace};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    And,
    Or,
    Xor,
    Not,
}

impl Gate {
    fn name(self) -> &'static str {
        match self {
            Gate::And => "AND",
            Gate::Or => "OR",
            Gate::Xor => "XOR",
            Gate::Not => "NOT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Circuit {
    Input(usize),
    /// `None` arguments mean "all inputs" (or `x0` for `NOT`).
    Gate(Gate, Option<Vec<Circuit>>),
}

impl Circuit {
    /// Smallest number of inputs the circuit reads.
    pub fn min_arity(&self) -> usize {
        match self {
            Circuit::Input(i) => i + 1,
            Circuit::Gate(Gate::Not, None) => 1,
            Circuit::Gate(_, None) => 2,
            Circuit::Gate(_, Some(args)) => args.iter().map(Circuit::min_arity).max().unwrap_or(0),
        }
    }
}

/// Truth-table evaluation of a candidate on one input configuration.
pub fn cd_eval(circuit: &Circuit, bits: &[u8]) -> Result<u8> {
    if bits.iter().any(|&b| b > 1) {
        return Err(Error::InvalidParameter("input bits must be 0 or 1".into()));
    }
    if circuit.min_arity() > bits.len() {
        return Err(Error::DimensionMismatch {
            expected: circuit.min_arity(),
            got: bits.len(),
        });
    }
    Ok(eval_unchecked(circuit, bits))
}

fn eval_unchecked(circuit: &Circuit, bits: &[u8]) -> u8 {
    let fold = |gate: Gate, vals: &mut dyn Iterator<Item = u8>| -> u8 {
        match gate {
            Gate::And => vals.fold(1, |acc, v| acc & v),
            Gate::Or => vals.fold(0, |acc, v| acc | v),
            Gate::Xor => vals.fold(0, |acc, v| acc ^ v),
            Gate::Not => 1 - vals.next().unwrap_or(0),
        }
    };
    match circuit {
        Circuit::Input(i) => bits[*i],
        Circuit::Gate(Gate::Not, None) => 1 - bits[0],
        Circuit::Gate(g, None) => fold(*g, &mut bits.iter().copied()),
        Circuit::Gate(g, Some(args)) => fold(*g, &mut args.iter().map(|c| eval_unchecked(c, bits))),
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Circuit::Input(i) => write!(f, "x{i}"),
            Circuit::Gate(g, None) => f.write_str(g.name()),
            Circuit::Gate(g, Some(args)) => {
                write!(f, "{}(", g.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn err(&self, msg: &str) -> Error {
        Error::Parse(format!(
            "{msg} at offset {} in `{}`",
            self.pos,
            String::from_utf8_lossy(self.src)
        ))
    }

    fn ident(&mut self) -> Result<&str> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected identifier"));
        }
        Ok(std::str::from_utf8(&self.src[start..self.pos]).expect("ascii"))
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Circuit> {
        let word = self.ident()?.to_ascii_uppercase();
        let gate = match word.as_str() {
            "AND" => Gate::And,
            "OR" => Gate::Or,
            "XOR" => Gate::Xor,
            "NOT" => Gate::Not,
            w if w.starts_with('X') && w.len() > 1 => {
                return w[1..]
                    .parse()
                    .map(Circuit::Input)
                    .map_err(|_| self.err("bad input index"));
            }
            _ => return Err(self.err(&format!("unknown symbol `{word}`"))),
        };
        if self.peek() != Some(b'(') {
            return Ok(Circuit::Gate(gate, None));
        }
        self.pos += 1;
        let mut args = vec![self.expr()?];
        loop {
            match self.peek() {
                Some(b',') => {
                    self.pos += 1;
                    args.push(self.expr()?);
                }
                Some(b')') => {
                    self.pos += 1;
                    break;
                }
                _ => return Err(self.err("expected `,` or `)`")),
            }
        }
        if gate == Gate::Not && args.len() != 1 {
            return Err(self.err("NOT takes one argument"));
        }
        if gate != Gate::Not && args.len() < 2 {
            return Err(self.err("binary gate needs at least two arguments"));
        }
        Ok(Circuit::Gate(gate, Some(args)))
    }
}

impl FromStr for Circuit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser {
            src: s.as_bytes(),
            pos: 0,
        };
        let c = p.expr()?;
        if p.peek().is_some() {
            return Err(p.err("trailing input"));
        }
        Ok(c)
    }
}

impl Serialize for Circuit {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Circuit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Ten candidates over three inputs with pairwise distinct truth tables.
pub const DEFAULT_CANDIDATES: [&str; 10] = [
    "AND(x0,x1)",
    "OR(x0,x1)",
    "XOR(x0,x1)",
    "AND(x1,x2)",
    "OR(x1,x2)",
    "XOR(x0,x2)",
    "NOT(x0)",
    "OR(AND(x0,x1),x2)",
    "AND(OR(x0,x1),x2)",
    "XOR(XOR(x0,x1),x2)",
];

/// Circuit label for position `i`: `A`, `B`, …, `Z`, `L26`, ….
pub fn label_name(i: usize) -> String {
    if i < 26 {
        char::from(b'A' + i as u8).to_string()
    } else {
        format!("L{i}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitInstance {
    pub num_inputs: usize,
    pub candidates: Vec<Circuit>,
    pub hidden_assignment: BTreeMap<String, usize>,
    #[serde(default)]
    pub distinct_circuits: bool,
}

/// Upper bound on the number of joint assignments.
pub const MAX_CD_STATES: usize = 1_000_000;

impl CircuitInstance {
    /// The default ten-candidate library with `labels` hidden circuits,
    /// assignment drawn deterministically from `seed`.
    pub fn default_library(labels: usize, seed: u64) -> Result<Self> {
        let candidates: Vec<Circuit> = DEFAULT_CANDIDATES
            .iter()
            .map(|s| s.parse())
            .collect::<Result<_>>()?;
        let n = candidates.len() as u64;
        let hidden_assignment = (0..labels)
            .map(|i| {
                let idx = crate::runner::mix_seed(seed, 0xcd00 + i as u64) % n;
                (label_name(i), idx as usize)
            })
            .collect();
        let inst = Self {
            num_inputs: 3,
            candidates,
            hidden_assignment,
            distinct_circuits: false,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn labels(&self) -> Vec<&str> {
        self.hidden_assignment.keys().map(String::as_str).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.candidates.is_empty() {
            return Err(Error::InvalidInstance("no candidate circuits".into()));
        }
        if self.hidden_assignment.is_empty() {
            return Err(Error::InvalidInstance("no hidden circuits".into()));
        }
        if self.num_inputs == 0 || self.num_inputs > 16 {
            return Err(Error::InvalidInstance(format!(
                "num_inputs {} outside 1..=16",
                self.num_inputs
            )));
        }
        for c in &self.candidates {
            if c.min_arity() > self.num_inputs {
                return Err(Error::InvalidInstance(format!(
                    "candidate `{c}` reads more than {} inputs",
                    self.num_inputs
                )));
            }
        }
        for (label, &idx) in &self.hidden_assignment {
            if idx >= self.candidates.len() {
                return Err(Error::InvalidInstance(format!(
                    "label {label} points at candidate {idx} of {}",
                    self.candidates.len()
                )));
            }
        }
        if self.distinct_circuits {
            let mut seen: Vec<usize> = self.hidden_assignment.values().copied().collect();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != self.hidden_assignment.len() {
                return Err(Error::InvalidInstance(
                    "distinct_circuits is set but two labels share a candidate".into(),
                ));
            }
        }
        Ok(())
    }

    /// Output of the hidden circuit behind `label` on `bits`.
    pub fn cd_observe(&self, label: &str, bits: &[u8]) -> Result<u8> {
        let idx = self
            .hidden_assignment
            .get(label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
        if bits.len() != self.num_inputs {
            return Err(Error::DimensionMismatch {
                expected: self.num_inputs,
                got: bits.len(),
            });
        }
        cd_eval(&self.candidates[*idx], bits)
    }

    /// Joint assignments (one candidate per label), odometer order with the
    /// last label varying fastest.
    pub fn enumerate_assignments(&self) -> Result<Vec<Vec<usize>>> {
        let labels = self.hidden_assignment.len();
        let n = self.candidates.len();
        let total = n
            .checked_pow(labels as u32)
            .filter(|&t| t <= MAX_CD_STATES)
            .ok_or_else(|| {
                Error::InvalidInstance(format!("{n}^{labels} assignments exceed {MAX_CD_STATES}"))
            })?;
        let mut out = Vec::with_capacity(total);
        for code in 0..total {
            let mut tuple = vec![0; labels];
            let mut rest = code;
            for slot in tuple.iter_mut().rev() {
                *slot = rest % n;
                rest /= n;
            }
            if self.distinct_circuits {
                let mut s = tuple.clone();
                s.sort_unstable();
                s.dedup();
                if s.len() != labels {
                    continue;
                }
            }
            out.push(tuple);
        }
        Ok(out)
    }

    /// Actions are `(label, input)` pairs, label major, inputs in binary
    /// counting order with `x0` as the most significant bit.
    pub fn actions(&self) -> Vec<(usize, Vec<u8>)> {
        let n = self.num_inputs;
        (0..self.hidden_assignment.len())
            .flat_map(|l| {
                (0..1usize << n).map(move |code| {
                    let bits = (0..n).map(|i| ((code >> (n - 1 - i)) & 1) as u8).collect();
                    (l, bits)
                })
            })
            .collect()
    }

    pub fn task(&self) -> Result<Task> {
        self.validate()?;
        let states = self.enumerate_assignments()?;
        let labels = self.labels();
        let truth: Vec<usize> = self.hidden_assignment.values().copied().collect();
        let truth_index = states
            .iter()
            .position(|s| *s == truth)
            .expect("hidden assignment is enumerated");
        let actions = self.actions();
        // Truth tables, one row per candidate.
        let tables: Vec<Vec<u8>> = self
            .candidates
            .iter()
            .map(|c| {
                actions[..1usize << self.num_inputs]
                    .iter()
                    .map(|(_, bits)| eval_unchecked(c, bits))
                    .collect()
            })
            .collect();
        let per_label = 1usize << self.num_inputs;
        let table = ObservationTable::from_fn(states.len(), actions.len(), 2, |s, a| {
            let (label, code) = (a / per_label, a % per_label);
            tables[states[s][label]][code] as usize
        })?;
        let state_labels = states
            .iter()
            .map(|s| {
                s.iter()
                    .zip(&labels)
                    .map(|(c, l)| format!("{l}={}", self.candidates[*c]))
                    .collect::<Vec<_>>()
                    .join(";")
            })
            .collect();
        let action_labels = actions
            .iter()
            .map(|(l, bits)| {
                let b: Vec<String> = bits.iter().map(u8::to_string).collect();
                format!("{}({})", labels[*l], b.join(","))
            })
            .collect();
        let embeddings = actions
            .iter()
            .map(|(l, bits)| {
                let mut v = vec![0.0; labels.len()];
                v[*l] = 1.0;
                v.extend(bits.iter().map(|&b| f64::from(b)));
                v
            })
            .collect();
        Ok(Task {
            kind: TaskKind::CircuitDecoding,
            space: StateSpace::new(state_labels, truth_index)?,
            table: Arc::new(table),
            action_labels,
            observation_labels: vec!["0".into(), "1".into()],
            action_state: None,
            action_embeddings: embeddings,
            state_features: None,
            initial_step: None,
            solved_observation: None,
        })
    }
}
