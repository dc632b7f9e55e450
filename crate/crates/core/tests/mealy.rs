mod common;

use std::collections::{BTreeSet, VecDeque};
use std::sync::Arc;

use circsem::interp::belnap_values::{BOT, F, T, TOP};
use circsem::interp::{belnap_and, belnap_not, belnap_or};
use circsem::mealy::{self, TableMachine};
use circsem::{belnap, lang, library, Lattice, MealyMachine, Term, Value, Waveform};
use common::{waveform, word};
use proptest::prelude::*;

fn bool_lattice() -> Arc<Lattice> {
    Arc::new(Lattice::chain(&["f", "t"]))
}

fn table(names: &[&str], ins: usize, outs: usize, next: Vec<u32>, output: Vec<u8>) -> MealyMachine {
    MealyMachine::from_table(
        bool_lattice(),
        TableMachine {
            state_names: names.iter().map(|s| s.to_string()).collect(),
            order: None,
            initial: 0,
            ins,
            outs,
            next,
            output: output.into_iter().map(Value).collect(),
        },
    )
    .unwrap()
}

// Over the chain f < t, value 0 is f and value 1 is t.
fn machine_s() -> MealyMachine {
    table(&["s0", "s1"], 1, 1, vec![0, 1, 1, 0], vec![0, 1, 1, 0])
}

fn machine_g() -> MealyMachine {
    table(&["t0", "t1"], 1, 1, vec![0, 1, 1, 1], vec![0, 1, 1, 1])
}

fn latch() -> Term {
    lang::parse_term(library::SR_LATCH, &Lattice::belnap()).unwrap()
}

fn gate(name: &str, ins: usize) -> MealyMachine {
    mealy::circuit_to_mealy(&Term::prim(name, ins, 1), &belnap()).unwrap()
}

#[test]
fn delay_machine_shifts_by_one() {
    let m = mealy::circuit_to_mealy(&Term::delay(1), &belnap()).unwrap();
    assert_eq!(m.initial(), vec![BOT.0 as u32]);
    for v in common::V {
        for a in common::V {
            let (next, out) = m.step(&[v.0 as u32], &[a]).unwrap();
            assert_eq!(next, vec![a.0 as u32]);
            assert_eq!(out, vec![v]);
        }
    }
    assert_eq!(mealy::reachable(&m).unwrap().as_table().unwrap().state_names.len(), 4);
}

#[test]
fn and_machine_is_pointwise() {
    let m = gate("AND", 2);
    let out = mealy::run(&m, &waveform(2, &["tt", "fT"])).unwrap();
    assert_eq!(out.values, vec![word("t"), word("f")]);
    assert_eq!(m.step(&m.initial(), &[BOT, BOT]).unwrap().1, vec![BOT]);
}

#[test]
fn identity_machine_echoes() {
    let m = MealyMachine::identity(Arc::new(Lattice::belnap()), 2);
    let (s, out) = m.step(&m.initial(), &[T, TOP]).unwrap();
    assert_eq!(s, m.initial());
    assert_eq!(out, vec![T, TOP]);
}

#[test]
fn latch_runs_as_expected() {
    let m = mealy::circuit_to_mealy(&latch(), &belnap()).unwrap();
    let (s, out) = m.step(&m.initial(), &[F, T]).unwrap();
    assert_eq!(s, vec![T.0 as u32]);
    assert_eq!(out, vec![BOT, F]);
    let out = mealy::run(&m, &waveform(2, &["ft", "ff", "tf", "ff"])).unwrap();
    assert_eq!(out.values, vec![word("bf"), word("tf"), word("tf"), word("ft")]);
}

#[test]
fn empty_waveform_runs_to_empty() {
    let m = mealy::circuit_to_mealy(&latch(), &belnap()).unwrap();
    assert!(mealy::run(&m, &Waveform::empty(2)).unwrap().is_empty());
}

// Hand-written latch equations: the register holds q, and qbar depends only on q and s.
fn latch_oracle(q: Value, r: Value, s: Value) -> (Value, [Value; 2]) {
    let qbar = belnap_not(belnap_or(q, s));
    (belnap_not(belnap_or(r, qbar)), [q, qbar])
}

#[test]
fn latch_reachable_states_match_oracle() {
    let mut seen = BTreeSet::from([BOT.0]);
    let mut queue = VecDeque::from([BOT]);
    while let Some(q) = queue.pop_front() {
        for r in common::V {
            for s in common::V {
                let (n, _) = latch_oracle(q, r, s);
                if seen.insert(n.0) {
                    queue.push_back(n);
                }
            }
        }
    }
    let m = mealy::circuit_to_mealy(&latch(), &belnap()).unwrap();
    let reach = mealy::reachable(&m).unwrap();
    assert_eq!(reach.as_table().unwrap().state_names.len(), seen.len());
    assert_eq!(seen.len(), 4);
    for q in common::V {
        for r in common::V {
            for s in common::V {
                let (n, out) = m.step(&[q.0 as u32], &[r, s]).unwrap();
                let (n2, out2) = latch_oracle(q, r, s);
                assert_eq!((n, out), (vec![n2.0 as u32], out2.to_vec()));
            }
        }
    }
}

#[test]
fn cascade_and_direct_entries() {
    let (s, g) = (machine_s(), machine_g());
    let h = mealy::cascade(&s, &g).unwrap();
    let (next, out) = h.step(&[1, 0], &[Value(0)]).unwrap();
    assert_eq!((next, out), (vec![1, 1], vec![Value(1)]));
    let d = mealy::direct(&s, &g).unwrap();
    let (next, out) = d.step(&[0, 0], &[Value(1), Value(0)]).unwrap();
    assert_eq!((next, out), (vec![1, 0], vec![Value(1), Value(0)]));
    assert_eq!(d.state_name(&[1, 0]), "(s1,t0)");
}

#[test]
fn cascade_width_mismatch_is_an_error() {
    assert!(mealy::cascade(&gate("AND", 2), &gate("AND", 2)).is_err());
}

#[test]
fn unit_laws() {
    let l = Arc::new(Lattice::belnap());
    let m = mealy::circuit_to_mealy(&latch(), &belnap()).unwrap();
    let id = MealyMachine::identity(l.clone(), 2);
    assert!(mealy::bisimilar(&m, &mealy::cascade(&m, &id).unwrap()).unwrap());
    let zero = MealyMachine::identity(l.clone(), 0);
    assert!(mealy::bisimilar(&m, &mealy::direct(&m, &zero).unwrap()).unwrap());
    let w = mealy::direct(&gate("AND", 2), &gate("NOT", 1)).unwrap();
    assert_eq!((w.ins(), w.outs()), (3, 2));
    assert!(mealy::bisimilar(&m, &mealy::mealy_trace(&m, 0).unwrap()).unwrap());
}

#[test]
fn double_negation_is_identity() {
    let not = gate("NOT", 1);
    let nn = mealy::cascade(&not, &not).unwrap();
    let id = MealyMachine::identity(Arc::new(Lattice::belnap()), 1);
    assert!(mealy::bisimilar(&nn, &id).unwrap());
}

#[test]
fn yanking() {
    let sym = mealy::circuit_to_mealy(&Term::swap(), &belnap()).unwrap();
    let yanked = mealy::mealy_trace(&sym, 1).unwrap();
    let id = MealyMachine::identity(Arc::new(Lattice::belnap()), 1);
    assert!(mealy::bisimilar(&yanked, &id).unwrap());
}

// Pre-machine with state in the Belnap values: g(s, (x, y, z)) = (not y and not x, (not s and not z, s, not s and not z)).
fn latch_pre_machine() -> MealyMachine {
    let l = Arc::new(Lattice::belnap());
    let rows: Vec<Vec<Value>> = l.words(3).collect();
    let mut next = Vec::new();
    let mut output = Vec::new();
    for s in common::V {
        for a in &rows {
            let (x, y, z) = (a[0], a[1], a[2]);
            next.push(belnap_and(belnap_not(y), belnap_not(x)).0 as u32);
            let w = belnap_and(belnap_not(s), belnap_not(z));
            output.extend([w, s, w]);
        }
    }
    let order = (0..4).map(|a| (0..4).map(|b| l.leq(Value(a), Value(b))).collect()).collect();
    MealyMachine::from_table(
        l,
        TableMachine {
            state_names: common::V.iter().map(|&v| Lattice::belnap().name(v).to_string()).collect(),
            order: Some(order),
            initial: 0,
            ins: 3,
            outs: 3,
            next,
            output,
        },
    )
    .unwrap()
}

#[test]
fn tracing_the_latch_pre_machine() {
    let pre = latch_pre_machine();
    pre.check_monotone().unwrap();
    let m = mealy::mealy_trace(&pre, 1).unwrap();
    for s in common::V {
        for y in common::V {
            for z in common::V {
                let (next, out) = m.step(&[s.0 as u32], &[y, z]).unwrap();
                let v = belnap_and(belnap_not(s), belnap_not(z));
                assert_eq!(next, vec![belnap_and(belnap_not(y), belnap_not(v)).0 as u32]);
                assert_eq!(out, vec![s, v]);
            }
        }
    }
}

fn running_and() -> Term {
    let body = Term::seq(vec![
        Term::par(vec![Term::register(vec![T]), Term::id(1)]),
        Term::prim("AND", 2, 1),
        Term::fork(),
    ])
    .unwrap();
    Term::trace(1, body).unwrap()
}

#[test]
fn running_and_is_minimal_with_four_states() {
    let m = mealy::circuit_to_mealy(&running_and(), &belnap()).unwrap();
    let min = mealy::minimize(&m).unwrap();
    assert_eq!(min.as_table().unwrap().state_names.len(), 4);
    assert!(mealy::bisimilar(&m, &min).unwrap());
    let again = mealy::minimize(&min).unwrap();
    assert_eq!(again.as_table().unwrap().state_names.len(), 4);
}

#[test]
fn duplicate_states_collapse() {
    // Two copies of a toggle that never differ in output.
    let m = table(&["a", "b", "c"], 1, 1, vec![1, 2, 1, 2, 1, 2], vec![0, 1, 0, 1, 0, 1]);
    let min = mealy::minimize(&m).unwrap();
    assert_eq!(min.as_table().unwrap().state_names.len(), 1);
    let single = gate("NOT", 1);
    assert_eq!(mealy::minimize(&single).unwrap().as_table().unwrap().state_names.len(), 1);
    assert_eq!(mealy::reachable(&single).unwrap().as_table().unwrap().state_names.len(), 1);
}

#[test]
fn and_and_or_differ_on_t_f() {
    let w = mealy::bisim_witness(&gate("AND", 2), &gate("OR", 2)).unwrap().unwrap();
    let last = w.values.last().unwrap();
    assert_ne!(belnap_and(last[0], last[1]), belnap_or(last[0], last[1]));
    assert!(!mealy::bisimilar(&gate("AND", 2), &gate("OR", 2)).unwrap());
    let l = Arc::new(Lattice::belnap());
    let and = gate("AND", 2);
    let (_, a) = and.step(&and.initial(), &[T, F]).unwrap();
    assert_eq!(a, vec![F]);
    assert!(mealy::bisimilar(&and, &and).unwrap());
    let _ = l;
}

#[test]
fn json_round_trip() {
    let m = mealy::reachable(&mealy::circuit_to_mealy(&latch(), &belnap()).unwrap()).unwrap();
    let text = mealy::to_json(&m).unwrap();
    let back = mealy::from_json(&text, Arc::new(Lattice::belnap())).unwrap();
    assert!(mealy::bisimilar(&m, &back).unwrap());
}

fn small_term(seed: u64, m: usize, n: usize) -> Term {
    common::term(&mut common::rng(seed), m, n, 3, true, true)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn functorial_on_composition(seed in any::<u64>()) {
        let i = belnap();
        let f = small_term(seed, 2, 2);
        let g = small_term(seed.wrapping_add(1), 2, 1);
        let fg = circsem::circuit::compose(&f, &g).unwrap();
        let whole = mealy::circuit_to_mealy(&fg, &i).unwrap();
        let parts = mealy::cascade(&mealy::circuit_to_mealy(&f, &i).unwrap(), &mealy::circuit_to_mealy(&g, &i).unwrap()).unwrap();
        prop_assert!(mealy::bisimilar(&whole, &parts).unwrap());
    }

    #[test]
    fn functorial_on_tensor(seed in any::<u64>()) {
        let i = belnap();
        let f = small_term(seed, 1, 1);
        let g = small_term(seed.wrapping_add(7), 1, 2);
        let whole = mealy::circuit_to_mealy(&circsem::circuit::tensor(&f, &g), &i).unwrap();
        let parts = mealy::direct(&mealy::circuit_to_mealy(&f, &i).unwrap(), &mealy::circuit_to_mealy(&g, &i).unwrap()).unwrap();
        prop_assert!(mealy::bisimilar(&whole, &parts).unwrap());
    }

    #[test]
    fn functorial_on_trace(seed in any::<u64>()) {
        let i = belnap();
        let f = small_term(seed, 2, 2);
        let whole = mealy::circuit_to_mealy(&circsem::circuit::trace(1, &f).unwrap(), &i).unwrap();
        let parts = mealy::mealy_trace(&mealy::circuit_to_mealy(&f, &i).unwrap(), 1).unwrap();
        prop_assert!(mealy::bisimilar(&whole, &parts).unwrap());
    }

    #[test]
    fn combinational_terms_run_pointwise(seed in any::<u64>(), ticks in proptest::collection::vec(0usize..16, 0..6)) {
        let i = belnap();
        let t = common::term(&mut common::rng(seed), 2, 2, 3, false, false);
        let m = mealy::circuit_to_mealy(&t, &i).unwrap();
        let l = Lattice::belnap();
        let w = Waveform::new(2, ticks.iter().map(|&k| l.word_at(k, 2)).collect()).unwrap();
        let out = mealy::run(&m, &w).unwrap();
        for (a, b) in w.values.iter().zip(&out.values) {
            let (_, direct) = m.step(&m.initial(), a).unwrap();
            prop_assert_eq!(&direct, b);
        }
        prop_assert_eq!(mealy::minimize(&m).unwrap().as_table().unwrap().state_names.len(), 1);
    }

    #[test]
    fn minimize_is_sound_and_idempotent(seed in any::<u64>()) {
        let m = mealy::circuit_to_mealy(&small_term(seed, 1, 1), &belnap()).unwrap();
        let min = mealy::minimize(&m).unwrap();
        prop_assert!(mealy::bisimilar(&m, &min).unwrap());
        prop_assert!(min.check_monotone().is_ok());
        let again = mealy::minimize(&min).unwrap();
        prop_assert_eq!(again.as_table().unwrap().state_names.len(), min.as_table().unwrap().state_names.len());
    }

    #[test]
    fn runs_are_causal(seed in any::<u64>(), a in proptest::collection::vec(0usize..16, 0..5), b in proptest::collection::vec(0usize..16, 0..5)) {
        let l = Lattice::belnap();
        let m = mealy::circuit_to_mealy(&small_term(seed, 2, 1), &belnap()).unwrap();
        let w1 = Waveform::new(2, a.iter().map(|&k| l.word_at(k, 2)).collect()).unwrap();
        let w2 = Waveform::new(2, b.iter().map(|&k| l.word_at(k, 2)).collect()).unwrap();
        let mut both = w1.values.clone();
        both.extend(w2.values.clone());
        let whole = mealy::run(&m, &Waveform::new(2, both).unwrap()).unwrap();
        let (first, s) = mealy::run_from(&m, &m.initial(), &w1).unwrap();
        let (second, _) = mealy::run_from(&m, &s, &w2).unwrap();
        let mut joined = first.values;
        joined.extend(second.values);
        prop_assert_eq!(whole.values, joined);
    }

    #[test]
    fn circuit_machines_are_monotone(seed in any::<u64>()) {
        let m = mealy::circuit_to_mealy(&small_term(seed, 1, 1), &belnap()).unwrap();
        prop_assert!(mealy::reachable(&m).unwrap().check_monotone().is_ok());
    }
}
