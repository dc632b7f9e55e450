//! Seeded random generators for circuits, monotone tables and monotone machines.

use std::sync::Arc;

use rand::Rng;

use crate::circuit::Term;
use crate::interp::belnap_values::{BOT, F, T, TOP};
use crate::interp::{Lattice, Value};
use crate::mealy::{MealyMachine, TableMachine};
use crate::synth::TruthTable;

pub const BELNAP_VALUES: [Value; 4] = [BOT, F, T, TOP];

/// Limits for [`term`].
#[derive(Clone, Copy, Debug)]
pub struct TermShape {
    pub depth: usize,
    pub delays: bool,
    pub traces: bool,
}

fn leaf(r: &mut impl Rng, m: usize, n: usize, delays: bool) -> Term {
    let choices: Vec<Term> = match (m, n) {
        (2, 1) => vec![Term::prim("AND", 2, 1), Term::prim("OR", 2, 1), Term::join()],
        (1, 1) if delays => vec![Term::prim("NOT", 1, 1), Term::delay(1), Term::id(1)],
        (1, 1) => vec![Term::prim("NOT", 1, 1), Term::id(1)],
        (1, 2) => vec![Term::fork()],
        (0, 1) if delays => vec![Term::values(vec![BELNAP_VALUES[r.gen_range(0..4)]]), Term::intro()],
        (0, 1) => vec![Term::intro()],
        (1, 0) => vec![Term::elim()],
        (2, 2) => vec![Term::swap(), Term::id(2)],
        _ => {
            if m == 0 {
                return Term::par((0..n).map(|_| Term::intro()).collect());
            }
            let src: Vec<usize> = (0..n).map(|_| r.gen_range(0..m)).collect();
            return Term::wiring(m, &src);
        }
    };
    let k = r.gen_range(0..choices.len());
    choices[k].clone()
}

/// A random well-typed term `m -> n` over the Belnap gates.
pub fn term(r: &mut impl Rng, m: usize, n: usize, shape: TermShape) -> Term {
    if shape.depth == 0 {
        return leaf(r, m, n, shape.delays);
    }
    let sub = TermShape { depth: shape.depth - 1, ..shape };
    match r.gen_range(0..7) {
        0 => leaf(r, m, n, shape.delays),
        1 | 2 => {
            let k = r.gen_range(1..=3);
            let a = term(r, m, k, sub);
            let b = term(r, k, n, sub);
            Term::seq(vec![a, b]).expect("matching widths")
        }
        3 | 4 if m + n >= 2 => {
            let m1 = r.gen_range(0..=m);
            let n1 = r.gen_range(0..=n);
            let a = term(r, m1, n1, sub);
            let b = term(r, m - m1, n - n1, sub);
            Term::par(vec![a, b])
        }
        5 if shape.traces => Term::trace(1, term(r, m + 1, n + 1, sub)).expect("matching widths"),
        _ => {
            let a = term(r, m, n, sub);
            let b = term(r, n, n, sub);
            Term::seq(vec![a, b]).expect("matching widths")
        }
    }
}

fn level(v: Value) -> usize {
    match v {
        BOT => 0,
        TOP => 2,
        _ => 1,
    }
}

fn random_above(r: &mut impl Rng, lb: Value) -> Value {
    let above: Vec<Value> = BELNAP_VALUES.iter().copied().filter(|&v| v.0 & lb.0 == lb.0).collect();
    above[r.gen_range(0..above.len())]
}

/// Lower covers of each letter of `w`, one letter at a time.
fn lower_neighbours(w: &[Value]) -> Vec<Vec<Value>> {
    let mut out = Vec::new();
    for k in 0..w.len() {
        let lows: &[Value] = match w[k] {
            F | T => &[BOT],
            TOP => &[F, T],
            _ => &[],
        };
        for &c in lows {
            let mut d = w.to_vec();
            d[k] = c;
            out.push(d);
        }
    }
    out
}

fn index(w: &[Value]) -> usize {
    w.iter().fold(0, |acc, v| acc * 4 + v.index())
}

/// A random monotone table; with `strict` set the all-bottom row maps to bottom.
pub fn monotone_table(r: &mut impl Rng, ins: usize, outs: usize, strict: bool) -> TruthTable {
    let l = Lattice::belnap();
    let mut words: Vec<Vec<Value>> = l.words(ins).collect();
    words.sort_by_key(|w| w.iter().map(|&v| level(v)).sum::<usize>());
    let mut rows = vec![BOT; words.len() * outs];
    for w in &words {
        let mut lb = vec![BOT; outs];
        for d in lower_neighbours(w) {
            let i = index(&d);
            for j in 0..outs {
                lb[j] = Value(lb[j].0 | rows[i * outs + j].0);
            }
        }
        let i = index(w);
        let zero = strict && w.iter().all(|&v| v == BOT);
        for j in 0..outs {
            rows[i * outs + j] = if zero { BOT } else { random_above(r, lb[j]) };
        }
    }
    TruthTable { ins, outs, rows }
}

/// A state lattice for random machines: a chain of `n` states, or the four-element diamond.
pub fn state_lattice(n: usize, diamond: bool) -> Lattice {
    if diamond {
        Lattice::from_pairs(
            ["q0", "q1", "q2", "q3"].iter().map(|s| s.to_string()).collect(),
            &[(0, 1), (0, 2), (1, 3), (2, 3)],
        )
        .expect("diamond")
    } else {
        let names: Vec<String> = (0..n).map(|k| format!("q{k}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        Lattice::chain(&refs)
    }
}

/// A random machine over the Belnap values, monotone for the order of `states`.
///
/// Transitions are assigned in a linear extension of the product of the state order and the
/// input order, each one chosen above the join of the already assigned lower neighbours.
pub fn monotone_machine(r: &mut impl Rng, states: &Lattice, ins: usize, outs: usize) -> MealyMachine {
    let v = Lattice::belnap();
    let rows = v.word_count(ins).expect("small input width");
    let n = states.size();
    let mut lower: Vec<Vec<usize>> = vec![Vec::new(); n];
    for s in 0..n {
        for &c in states.covers(Value(s as u8)) {
            lower[c.index()].push(s);
        }
    }
    let rank = |s: usize| states.linear_extension().iter().position(|&x| x.index() == s).unwrap();
    let mut pairs: Vec<(usize, Vec<Value>)> =
        (0..n).flat_map(|s| v.words(ins).map(move |a| (s, a))).collect();
    pairs.sort_by_key(|(s, a)| (rank(*s) + a.iter().map(|&x| level(x)).sum::<usize>(), rank(*s)));
    let mut next: Vec<Option<usize>> = vec![None; n * rows];
    let mut output = vec![BOT; n * rows * outs];
    for (s, a) in pairs {
        let mut lb_state = states.bottom().index();
        let mut lb_out = vec![BOT; outs];
        let mut below: Vec<usize> = lower[s].iter().map(|&t| t * rows + index(&a)).collect();
        below.extend(lower_neighbours(&a).iter().map(|d| s * rows + index(d)));
        for k in below {
            let t = next[k].expect("lower pairs are assigned first");
            lb_state = states.join(Value(lb_state as u8), Value(t as u8)).index();
            for j in 0..outs {
                lb_out[j] = Value(lb_out[j].0 | output[k * outs + j].0);
            }
        }
        let above: Vec<usize> =
            (0..n).filter(|&t| states.leq(Value(lb_state as u8), Value(t as u8))).collect();
        let k = s * rows + index(&a);
        next[k] = Some(above[r.gen_range(0..above.len())]);
        for j in 0..outs {
            output[k * outs + j] = random_above(r, lb_out[j]);
        }
    }
    let order = (0..n).map(|a| (0..n).map(|b| states.leq(Value(a as u8), Value(b as u8))).collect()).collect();
    MealyMachine::from_table(
        Arc::new(v),
        TableMachine {
            state_names: states.names().to_vec(),
            order: Some(order),
            initial: states.bottom().index() as u32,
            ins,
            outs,
            next: next.into_iter().map(|s| s.unwrap() as u32).collect(),
            output,
        },
    )
    .expect("well-formed table")
}

fn linear_leaf(r: &mut impl Rng, m: usize, n: usize, delays: bool) -> Term {
    match (m, n) {
        (0, 0) => Term::id(0),
        (_, 0) => Term::par((0..m).map(|_| Term::prim("SINK", 1, 0)).collect()),
        (0, _) => Term::par(
            (0..n)
                .map(|_| match r.gen_range(0..3) {
                    0 if delays => Term::intro(),
                    _ => Term::values(vec![[F, T][r.gen_range(0..2)]]),
                })
                .collect(),
        ),
        (2, 1) => [Term::prim("AND", 2, 1), Term::prim("OR", 2, 1), Term::join()][r.gen_range(0..3)].clone(),
        (1, 1) => {
            let mut c = vec![Term::prim("NOT", 1, 1), Term::id(1)];
            if delays {
                c.push(Term::delay(1));
            }
            c[r.gen_range(0..c.len())].clone()
        }
        _ if m > n => {
            let g = linear_leaf(r, 2, 1, delays);
            let a = Term::par(vec![g, Term::id(m - 2)]);
            Term::seq(vec![a, linear_leaf(r, m - 1, n, delays)]).expect("matching widths")
        }
        _ if m < n => Term::par(vec![linear_leaf(r, m, m, delays), linear_leaf(r, 0, n - m, delays)]),
        _ => {
            let mut src: Vec<usize> = (0..m).collect();
            for k in (1..m).rev() {
                src.swap(k, r.gen_range(0..=k));
            }
            Term::wiring(m, &src)
        }
    }
}

/// A random term `m -> n` with no forks or eliminations, so every wire has exactly one
/// reader. Surplus inputs are folded by binary gates; a `SINK` blackbox `1 -> 0` is only
/// used where a leaf has inputs and no outputs.
pub fn linear_term(r: &mut impl Rng, m: usize, n: usize, shape: TermShape) -> Term {
    if shape.depth == 0 {
        return linear_leaf(r, m, n, shape.delays);
    }
    let sub = TermShape { depth: shape.depth - 1, ..shape };
    match r.gen_range(0..7) {
        0 => linear_leaf(r, m, n, shape.delays),
        1 | 2 => {
            let k = r.gen_range(1..=3);
            let a = linear_term(r, m, k, sub);
            let b = linear_term(r, k, n, sub);
            Term::seq(vec![a, b]).expect("matching widths")
        }
        3 | 4 if m + n >= 2 => {
            let m1 = r.gen_range(0..=m);
            let n1 = r.gen_range(0..=n);
            // Keep surplus inputs away from output-free halves when possible.
            let n1 = if m1 > 0 && n1 == 0 && n > 0 { 1 } else { n1 };
            let n1 = if m - m1 > 0 && n - n1 == 0 && n1 > 1 { n1 - 1 } else { n1 };
            let a = linear_term(r, m1, n1, sub);
            let b = linear_term(r, m - m1, n - n1, sub);
            Term::par(vec![a, b])
        }
        5 if shape.traces => Term::trace(1, linear_term(r, m + 1, n + 1, sub)).expect("matching widths"),
        _ => {
            let a = linear_term(r, m, n, sub);
            let b = linear_term(r, n, n, sub);
            Term::seq(vec![a, b]).expect("matching widths")
        }
    }
}
