//! Finite initialised monotone Mealy machines.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::circuit::Term;
use crate::error::{Error, Result};
use crate::interp::{Interpretation, Lattice, Value};
use crate::netlist::{Compiled, Netlist};

pub const DEFAULT_BUDGET: usize = 1_000_000;

/// A machine state: one number per register of each component, concatenated.
pub type State = Vec<u32>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Waveform {
    pub width: usize,
    pub values: Vec<Vec<Value>>,
}

impl Waveform {
    pub fn new(width: usize, values: Vec<Vec<Value>>) -> Result<Waveform> {
        if let Some(v) = values.iter().find(|v| v.len() != width) {
            return Err(Error::Width { expected: width, got: v.len() });
        }
        Ok(Waveform { width, values })
    }

    pub fn empty(width: usize) -> Waveform {
        Waveform { width, values: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// An explicit machine: numbered states, a transition table and an optional state order.
#[derive(Clone, Debug)]
pub struct TableMachine {
    pub state_names: Vec<String>,
    /// `order[a][b]` iff state a is below state b; `None` is the discrete order.
    pub order: Option<Vec<Vec<bool>>>,
    pub initial: u32,
    pub ins: usize,
    pub outs: usize,
    /// Next state per (state, input row).
    pub next: Vec<u32>,
    /// `outs` letters per (state, input row).
    pub output: Vec<Value>,
}

#[derive(Debug)]
enum Kind {
    Table(TableMachine),
    Circuit(Compiled),
    Cascade(MealyMachine, MealyMachine),
    Direct(MealyMachine, MealyMachine),
    Trace(usize, MealyMachine),
}

#[derive(Clone, Debug)]
pub struct MealyMachine {
    kind: Arc<Kind>,
    lattice: Arc<Lattice>,
    ins: usize,
    outs: usize,
    state_len: usize,
}

impl MealyMachine {
    pub fn from_table(lattice: Arc<Lattice>, t: TableMachine) -> Result<MealyMachine> {
        let n = t.state_names.len();
        let rows = lattice.word_count(t.ins).ok_or_else(|| Error::Budget("input space too large".into()))?;
        if n == 0 || t.initial as usize >= n {
            return Err(Error::Invalid("machine needs an initial state".into()));
        }
        if t.next.len() != n * rows || t.output.len() != n * rows * t.outs {
            return Err(Error::Invalid("transition table has the wrong size".into()));
        }
        if t.next.iter().any(|&s| s as usize >= n) {
            return Err(Error::Invalid("transition to an unknown state".into()));
        }
        if let Some(o) = &t.order {
            if o.len() != n || o.iter().any(|r| r.len() != n) {
                return Err(Error::Invalid("state order has the wrong shape".into()));
            }
        }
        let (ins, outs) = (t.ins, t.outs);
        Ok(MealyMachine { kind: Arc::new(Kind::Table(t)), lattice, ins, outs, state_len: 1 })
    }

    pub fn from_compiled(c: Compiled) -> MealyMachine {
        let (ins, outs, state_len) = (c.ins(), c.outs(), c.state_len());
        let lattice = c.lattice_arc();
        MealyMachine { kind: Arc::new(Kind::Circuit(c)), lattice, ins, outs, state_len }
    }

    /// A single-state machine computing `f` pointwise.
    pub fn combinational(
        lattice: Arc<Lattice>,
        ins: usize,
        outs: usize,
        f: impl Fn(&[Value]) -> Vec<Value>,
    ) -> Result<MealyMachine> {
        let output: Vec<Value> = lattice.words(ins).flat_map(|w| f(&w)).collect();
        let rows = lattice.word_count(ins).unwrap_or(0);
        MealyMachine::from_table(
            lattice,
            TableMachine {
                state_names: vec!["s".into()],
                order: None,
                initial: 0,
                ins,
                outs,
                next: vec![0; rows],
                output,
            },
        )
    }

    pub fn identity(lattice: Arc<Lattice>, n: usize) -> MealyMachine {
        MealyMachine::combinational(lattice, n, n, |w| w.to_vec()).expect("identity")
    }

    pub fn ins(&self) -> usize {
        self.ins
    }

    pub fn outs(&self) -> usize {
        self.outs
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn lattice_arc(&self) -> Arc<Lattice> {
        self.lattice.clone()
    }

    pub fn state_len(&self) -> usize {
        self.state_len
    }

    pub fn as_table(&self) -> Option<&TableMachine> {
        match &*self.kind {
            Kind::Table(t) => Some(t),
            _ => None,
        }
    }

    pub fn initial(&self) -> State {
        match &*self.kind {
            Kind::Table(t) => vec![t.initial],
            Kind::Circuit(c) => c.initial().iter().map(|v| v.0 as u32).collect(),
            Kind::Cascade(a, b) | Kind::Direct(a, b) => {
                let mut s = a.initial();
                s.extend(b.initial());
                s
            }
            Kind::Trace(_, m) => m.initial(),
        }
    }

    pub fn step(&self, s: &[u32], a: &[Value]) -> Result<(State, Vec<Value>)> {
        if a.len() != self.ins {
            return Err(Error::Width { expected: self.ins, got: a.len() });
        }
        match &*self.kind {
            Kind::Table(t) => {
                let row = self.lattice.word_index(a);
                let rows = self.lattice.word_count(t.ins).unwrap();
                let k = s[0] as usize * rows + row;
                Ok((vec![t.next[k]], t.output[k * t.outs..(k + 1) * t.outs].to_vec()))
            }
            Kind::Circuit(c) => {
                let st: Vec<Value> = s.iter().map(|&x| Value(x as u8)).collect();
                let (next, out) = c.step(&st, a);
                Ok((next.iter().map(|v| v.0 as u32).collect(), out))
            }
            Kind::Cascade(m1, m2) => {
                let (s1, s2) = s.split_at(m1.state_len);
                let (n1, mid) = m1.step(s1, a)?;
                let (n2, out) = m2.step(s2, &mid)?;
                Ok((concat(n1, n2), out))
            }
            Kind::Direct(m1, m2) => {
                let (s1, s2) = s.split_at(m1.state_len);
                let (n1, o1) = m1.step(s1, &a[..m1.ins])?;
                let (n2, o2) = m2.step(s2, &a[m1.ins..])?;
                Ok((concat(n1, n2), concat(o1, o2)))
            }
            Kind::Trace(x, m) => {
                let l = &self.lattice;
                let bound = x * l.height() + 1;
                let mut r = vec![l.bottom(); *x];
                for _ in 0..=bound {
                    let mut input = r.clone();
                    input.extend_from_slice(a);
                    let (next, out) = m.step(s, &input)?;
                    if out[..*x] == r[..] {
                        return Ok((next, out[*x..].to_vec()));
                    }
                    if !l.leq_word(&r, &out[..*x]) {
                        return Err(Error::NotMonotone("traced wires decreased during iteration".into()));
                    }
                    r = out[..*x].to_vec();
                }
                Err(Error::NoConvergence(bound))
            }
        }
    }

    /// Pointwise order on states; table states use their declared order.
    pub fn state_leq(&self, a: &[u32], b: &[u32]) -> bool {
        match &*self.kind {
            Kind::Table(t) => match &t.order {
                Some(o) => o[a[0] as usize][b[0] as usize],
                None => a[0] == b[0],
            },
            Kind::Circuit(_) => a.iter().zip(b).all(|(&x, &y)| self.lattice.leq(Value(x as u8), Value(y as u8))),
            Kind::Cascade(m1, m2) | Kind::Direct(m1, m2) => {
                let k = m1.state_len;
                m1.state_leq(&a[..k], &b[..k]) && m2.state_leq(&a[k..], &b[k..])
            }
            Kind::Trace(_, m) => m.state_leq(a, b),
        }
    }

    pub fn state_name(&self, s: &[u32]) -> String {
        match &*self.kind {
            Kind::Table(t) => t.state_names[s[0] as usize].clone(),
            Kind::Circuit(_) => {
                if s.is_empty() {
                    "init".into()
                } else {
                    s.iter().map(|&x| self.lattice.name(Value(x as u8))).collect::<Vec<_>>().join(".")
                }
            }
            Kind::Cascade(m1, m2) | Kind::Direct(m1, m2) => {
                let k = m1.state_len;
                format!("({},{})", m1.state_name(&s[..k]), m2.state_name(&s[k..]))
            }
            Kind::Trace(_, m) => m.state_name(s),
        }
    }

    fn input_rows(&self) -> Result<usize> {
        self.lattice
            .word_count(self.ins)
            .filter(|&n| n <= DEFAULT_BUDGET)
            .ok_or_else(|| Error::Budget(format!("{} input wires are too many to enumerate", self.ins)))
    }

    /// Checks monotonicity of the step over reachable states and all inputs.
    pub fn check_monotone(&self) -> Result<()> {
        let r = reachable(self)?;
        let t = r.as_table().unwrap();
        let l = &self.lattice;
        let rows = self.input_rows()?;
        let n = t.state_names.len();
        for s in 0..n {
            for s2 in 0..n {
                if !r.state_leq(&[s as u32], &[s2 as u32]) {
                    continue;
                }
                for row in 0..rows {
                    let a = l.word_at(row, self.ins);
                    for (k, &v) in a.iter().enumerate() {
                        for c in std::iter::once(v).chain(l.covers(v).iter().copied()) {
                            if s == s2 && c == v {
                                continue;
                            }
                            let mut b = a.clone();
                            b[k] = c;
                            let (n1, o1) = r.step(&[s as u32], &a)?;
                            let (n2, o2) = r.step(&[s2 as u32], &b)?;
                            if !l.leq_word(&o1, &o2) || !r.state_leq(&n1, &n2) {
                                return Err(Error::NotMonotone(format!(
                                    "step from {} on ({}) vs {} on ({})",
                                    t.state_names[s],
                                    l.word_name(&a),
                                    t.state_names[s2],
                                    l.word_name(&b)
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn concat<T>(mut a: Vec<T>, b: Vec<T>) -> Vec<T> {
    a.extend(b);
    a
}

pub fn circuit_to_mealy(t: &Term, i: &Interpretation) -> Result<MealyMachine> {
    Ok(MealyMachine::from_compiled(Compiled::new(&Netlist::from_term(t), i, None)?))
}

pub fn step(m: &MealyMachine, s: &[u32], a: &[Value]) -> Result<(State, Vec<Value>)> {
    m.step(s, a)
}

fn same_lattice(a: &MealyMachine, b: &MealyMachine) -> Result<()> {
    if a.lattice != b.lattice {
        return Err(Error::Invalid("machines use different value lattices".into()));
    }
    Ok(())
}

pub fn cascade(m1: &MealyMachine, m2: &MealyMachine) -> Result<MealyMachine> {
    if m1.outs != m2.ins {
        return Err(Error::Arity { left: m1.outs, right: m2.ins });
    }
    same_lattice(m1, m2)?;
    Ok(MealyMachine {
        lattice: m1.lattice.clone(),
        ins: m1.ins,
        outs: m2.outs,
        state_len: m1.state_len + m2.state_len,
        kind: Arc::new(Kind::Cascade(m1.clone(), m2.clone())),
    })
}

pub fn direct(m1: &MealyMachine, m2: &MealyMachine) -> Result<MealyMachine> {
    same_lattice(m1, m2)?;
    Ok(MealyMachine {
        lattice: m1.lattice.clone(),
        ins: m1.ins + m2.ins,
        outs: m1.outs + m2.outs,
        state_len: m1.state_len + m2.state_len,
        kind: Arc::new(Kind::Direct(m1.clone(), m2.clone())),
    })
}

pub fn mealy_trace(m: &MealyMachine, x: usize) -> Result<MealyMachine> {
    if x > m.ins || x > m.outs {
        return Err(Error::TraceWidth { x, ins: m.ins, outs: m.outs });
    }
    if x == 0 {
        return Ok(m.clone());
    }
    Ok(MealyMachine {
        lattice: m.lattice.clone(),
        ins: m.ins - x,
        outs: m.outs - x,
        state_len: m.state_len,
        kind: Arc::new(Kind::Trace(x, m.clone())),
    })
}

/// Breadth-first exploration of reachable states, inputs in index order.
fn explore(m: &MealyMachine, budget: usize) -> Result<(Vec<State>, Vec<u32>, Vec<Value>)> {
    let rows = m.input_rows()?;
    let mut index: HashMap<State, u32> = HashMap::new();
    let mut states = vec![m.initial()];
    index.insert(m.initial(), 0);
    let mut next = Vec::new();
    let mut output = Vec::new();
    let mut at = 0;
    let inputs: Vec<Vec<Value>> = m.lattice.words(m.ins).collect();
    while at < states.len() {
        for a in &inputs {
            let (n, o) = m.step(&states[at], a)?;
            let id = match index.get(&n) {
                Some(&i) => i,
                None => {
                    if states.len() >= budget {
                        return Err(Error::Budget(format!("more than {budget} reachable states")));
                    }
                    index.insert(n.clone(), states.len() as u32);
                    states.push(n);
                    (states.len() - 1) as u32
                }
            };
            next.push(id);
            output.extend(o);
        }
        at += 1;
    }
    debug_assert_eq!(next.len(), states.len() * rows);
    Ok((states, next, output))
}

/// Restriction to reachable states, as an explicit table machine.
pub fn reachable(m: &MealyMachine) -> Result<MealyMachine> {
    reachable_with_budget(m, DEFAULT_BUDGET)
}

pub fn reachable_with_budget(m: &MealyMachine, budget: usize) -> Result<MealyMachine> {
    let (states, next, output) = explore(m, budget)?;
    let order = states.iter().map(|a| states.iter().map(|b| m.state_leq(a, b)).collect()).collect();
    MealyMachine::from_table(
        m.lattice.clone(),
        TableMachine {
            state_names: states.iter().map(|s| m.state_name(s)).collect(),
            order: Some(order),
            initial: 0,
            ins: m.ins,
            outs: m.outs,
            next,
            output,
        },
    )
}

/// Quotient of the reachable part by behavioural equivalence (Moore refinement).
///
/// Classes are numbered by their first reachable member. They are ordered by behaviour: `c <= d`
/// when every input word gives pointwise smaller outputs from `c` than from `d`, which keeps a
/// monotone machine monotone.
pub fn minimize(m: &MealyMachine) -> Result<MealyMachine> {
    let r = reachable(m)?;
    let t = r.as_table().unwrap();
    let n = t.state_names.len();
    let rows = r.input_rows()?;
    let mut class: Vec<usize> = {
        let mut ids: HashMap<&[Value], usize> = HashMap::new();
        (0..n)
            .map(|s| {
                let sig = &t.output[s * rows * t.outs..(s + 1) * rows * t.outs];
                let k = ids.len();
                *ids.entry(sig).or_insert(k)
            })
            .collect()
    };
    loop {
        let mut ids: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
        let refined: Vec<usize> = (0..n)
            .map(|s| {
                let sig = (class[s], (0..rows).map(|k| class[t.next[s * rows + k] as usize]).collect());
                let k = ids.len();
                *ids.entry(sig).or_insert(k)
            })
            .collect();
        let done = ids.len() == class.iter().max().map_or(0, |&c| c + 1);
        class = refined;
        if done {
            break;
        }
    }
    let count = class.iter().max().map_or(0, |&c| c + 1);
    let mut rep = vec![usize::MAX; count];
    for (s, &c) in class.iter().enumerate() {
        if rep[c] == usize::MAX {
            rep[c] = s;
        }
    }
    let mut next = Vec::with_capacity(count * rows);
    let mut output = Vec::with_capacity(count * rows * t.outs);
    for &s in &rep {
        for k in 0..rows {
            next.push(class[t.next[s * rows + k] as usize] as u32);
        }
        output.extend_from_slice(&t.output[s * rows * t.outs..(s + 1) * rows * t.outs]);
    }
    let order = behaviour_order(&r.lattice, count, rows, t.outs, &next, &output);
    MealyMachine::from_table(
        m.lattice.clone(),
        TableMachine {
            state_names: rep.iter().map(|&s| t.state_names[s].clone()).collect(),
            order: Some(order),
            initial: class[0] as u32,
            ins: t.ins,
            outs: t.outs,
            next,
            output,
        },
    )
}

// Greatest relation contained in the one-step output order and closed under successors.
fn behaviour_order(l: &Lattice, n: usize, rows: usize, outs: usize, next: &[u32], output: &[Value]) -> Vec<Vec<bool>> {
    let out = |s: usize, k: usize| &output[(s * rows + k) * outs..(s * rows + k + 1) * outs];
    let mut le: Vec<Vec<bool>> =
        (0..n).map(|c| (0..n).map(|d| (0..rows).all(|k| l.leq_word(out(c, k), out(d, k)))).collect()).collect();
    loop {
        let mut changed = false;
        for c in 0..n {
            for d in 0..n {
                if le[c][d] && (0..rows).any(|k| !le[next[c * rows + k] as usize][next[d * rows + k] as usize]) {
                    le[c][d] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            return le;
        }
    }
}

/// An input sequence on which the machines first produce different outputs, if any.
pub fn bisim_witness(m1: &MealyMachine, m2: &MealyMachine) -> Result<Option<Waveform>> {
    bisim_witness_with_budget(m1, m2, DEFAULT_BUDGET)
}

pub fn bisim_witness_with_budget(
    m1: &MealyMachine,
    m2: &MealyMachine,
    budget: usize,
) -> Result<Option<Waveform>> {
    if m1.ins != m2.ins || m1.outs != m2.outs {
        return Err(Error::Width { expected: m1.ins + m1.outs, got: m2.ins + m2.outs });
    }
    same_lattice(m1, m2)?;
    m1.input_rows()?;
    let inputs: Vec<Vec<Value>> = m1.lattice.words(m1.ins).collect();
    let start = (m1.initial(), m2.initial());
    let mut parent: HashMap<(State, State), Option<(usize, usize)>> = HashMap::new();
    let mut pairs = vec![start.clone()];
    parent.insert(start, None);
    let mut at = 0;
    while at < pairs.len() {
        let (s1, s2) = pairs[at].clone();
        for (k, a) in inputs.iter().enumerate() {
            let (n1, o1) = m1.step(&s1, a)?;
            let (n2, o2) = m2.step(&s2, a)?;
            if o1 != o2 {
                let mut trail = vec![a.clone()];
                let mut cur = at;
                while let Some(&Some((prev, input))) = parent.get(&pairs[cur]) {
                    trail.push(inputs[input].clone());
                    cur = prev;
                }
                trail.reverse();
                return Ok(Some(Waveform { width: m1.ins, values: trail }));
            }
            let key = (n1, n2);
            if !parent.contains_key(&key) {
                if pairs.len() >= budget {
                    return Err(Error::Budget(format!("more than {budget} state pairs")));
                }
                parent.insert(key.clone(), Some((at, k)));
                pairs.push(key);
            }
        }
        at += 1;
    }
    Ok(None)
}

pub fn bisimilar(m1: &MealyMachine, m2: &MealyMachine) -> Result<bool> {
    Ok(bisim_witness(m1, m2)?.is_none())
}

pub fn run(m: &MealyMachine, w: &Waveform) -> Result<Waveform> {
    Ok(run_from(m, &m.initial(), w)?.0)
}

/// Runs from a given state, returning the outputs and the final state.
pub fn run_from(m: &MealyMachine, s: &[u32], w: &Waveform) -> Result<(Waveform, State)> {
    if w.width != m.ins {
        return Err(Error::Width { expected: m.ins, got: w.width });
    }
    let mut s = s.to_vec();
    let mut out = Vec::with_capacity(w.len());
    for a in &w.values {
        let (n, o) = m.step(&s, a)?;
        out.push(o);
        s = n;
    }
    Ok((Waveform { width: m.outs, values: out }, s))
}

#[derive(Serialize, Deserialize)]
struct MealyFile {
    format: String,
    inputs: usize,
    outputs: usize,
    values: Vec<String>,
    states: Vec<String>,
    #[serde(default)]
    order: Vec<(String, String)>,
    initial: String,
    transitions: Vec<Transition>,
}

#[derive(Serialize, Deserialize)]
struct Transition {
    state: String,
    input: Vec<String>,
    next: String,
    output: Vec<String>,
}

pub const MEALY_FORMAT: &str = "circsem-mealy/1";

/// Serializes the reachable part of a machine.
pub fn to_json(m: &MealyMachine) -> Result<String> {
    let r = reachable(m)?;
    let t = r.as_table().unwrap();
    let l = m.lattice();
    let rows = r.input_rows()?;
    let names = |w: &[Value]| w.iter().map(|&v| l.name(v).to_string()).collect::<Vec<_>>();
    let mut transitions = Vec::new();
    for s in 0..t.state_names.len() {
        for k in 0..rows {
            let i = s * rows + k;
            transitions.push(Transition {
                state: t.state_names[s].clone(),
                input: names(&l.word_at(k, t.ins)),
                next: t.state_names[t.next[i] as usize].clone(),
                output: names(&t.output[i * t.outs..(i + 1) * t.outs]),
            });
        }
    }
    let mut order = Vec::new();
    if let Some(o) = &t.order {
        for (a, row) in o.iter().enumerate() {
            for (b, &le) in row.iter().enumerate() {
                if le && a != b {
                    order.push((t.state_names[a].clone(), t.state_names[b].clone()));
                }
            }
        }
    }
    let file = MealyFile {
        format: MEALY_FORMAT.into(),
        inputs: t.ins,
        outputs: t.outs,
        values: l.names().to_vec(),
        states: t.state_names.clone(),
        order,
        initial: t.state_names[t.initial as usize].clone(),
        transitions,
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn from_json(text: &str, lattice: Arc<Lattice>) -> Result<MealyMachine> {
    let file: MealyFile = serde_json::from_str(text)?;
    if file.format != MEALY_FORMAT {
        return Err(Error::Invalid(format!("unsupported format `{}`", file.format)));
    }
    if file.values != lattice.names() {
        return Err(Error::Invalid("machine values differ from the interpretation".into()));
    }
    let state = |s: &str| {
        file.states
            .iter()
            .position(|x| x == s)
            .map(|i| i as u32)
            .ok_or_else(|| Error::Invalid(format!("unknown state `{s}`")))
    };
    let value = |s: &str| lattice.parse_value(s).ok_or_else(|| Error::Invalid(format!("unknown value `{s}`")));
    let n = file.states.len();
    let rows = lattice.word_count(file.inputs).ok_or_else(|| Error::Budget("too many inputs".into()))?;
    let mut next = vec![u32::MAX; n * rows];
    let mut output = vec![lattice.bottom(); n * rows * file.outputs];
    for tr in &file.transitions {
        let s = state(&tr.state)? as usize;
        let a = tr.input.iter().map(|x| value(x)).collect::<Result<Vec<_>>>()?;
        let o = tr.output.iter().map(|x| value(x)).collect::<Result<Vec<_>>>()?;
        if a.len() != file.inputs || o.len() != file.outputs {
            return Err(Error::Invalid("transition has the wrong width".into()));
        }
        let i = s * rows + lattice.word_index(&a);
        next[i] = state(&tr.next)?;
        output[i * file.outputs..(i + 1) * file.outputs].copy_from_slice(&o);
    }
    if next.contains(&u32::MAX) {
        return Err(Error::Invalid("transition table is not total".into()));
    }
    let order = if file.order.is_empty() {
        None
    } else {
        let mut o = vec![vec![false; n]; n];
        for (i, row) in o.iter_mut().enumerate() {
            row[i] = true;
        }
        for (a, b) in &file.order {
            o[state(a)? as usize][state(b)? as usize] = true;
        }
        Some(o)
    };
    MealyMachine::from_table(
        lattice,
        TableMachine {
            state_names: file.states.clone(),
            order,
            initial: state(&file.initial)?,
            ins: file.inputs,
            outs: file.outputs,
            next,
            output,
        },
    )
}
