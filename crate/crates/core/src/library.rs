//! Bundled example circuits, as source text.

pub const SR_LATCH: &str = include_str!("../../../circuits/sr_latch.circ");
pub const CYCLIC: &str = include_str!("../../../circuits/cyclic.circ");
pub const HALF_ADDER: &str = include_str!("../../../circuits/half_adder.circ");
pub const GUARDED: &str = include_str!("../../../circuits/guarded.circ");
pub const COUNTER: &str = include_str!("../../../circuits/counter.circ");

pub const ALL: &[(&str, &str)] = &[
    ("sr_latch", SR_LATCH),
    ("cyclic", CYCLIC),
    ("half_adder", HALF_ADDER),
    ("guarded", GUARDED),
    ("counter", COUNTER),
];
