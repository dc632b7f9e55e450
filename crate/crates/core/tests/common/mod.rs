#![allow(dead_code)]

use circsem::gen::{self, TermShape};
use circsem::interp::belnap_values::{BOT, F, T, TOP};
use circsem::{Term, Value};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const V: [Value; 4] = [BOT, F, T, TOP];

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn value(r: &mut StdRng) -> Value {
    V[r.gen_range(0..4)]
}

pub fn term(r: &mut StdRng, m: usize, n: usize, depth: usize, delays: bool, traces: bool) -> Term {
    gen::term(r, m, n, TermShape { depth, delays, traces })
}

pub fn word(s: &str) -> Vec<Value> {
    s.chars()
        .map(|c| match c {
            'b' | '⊥' => BOT,
            'f' => F,
            't' => T,
            'T' | '⊤' => TOP,
            _ => panic!("bad value letter {c}"),
        })
        .collect()
}

pub fn waveform(width: usize, ticks: &[&str]) -> circsem::Waveform {
    circsem::Waveform::new(width, ticks.iter().map(|t| word(t)).collect()).unwrap()
}

pub fn linear(r: &mut StdRng, m: usize, n: usize, depth: usize, traces: bool) -> Term {
    gen::linear_term(r, m, n, TermShape { depth, delays: true, traces })
}
