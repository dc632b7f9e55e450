mod common;

use circsem::formats::{self, OUTPUT_PREFIX, TRUTH_TABLE_HEADER, WAVEFORM_HEADER};
use circsem::gen;
use circsem::synth::TruthTable;
use circsem::{Lattice, Waveform};
use proptest::prelude::*;

#[test]
fn reads_a_waveform_with_comments_and_spaces() {
    let text = "# circsem waveform v1\n# set, hold, reset\nr, s\nf, t\n\nf,f\n t ,f\n";
    let (names, w) = formats::read_waveform(text, &Lattice::belnap()).unwrap();
    assert_eq!(names, ["r", "s"]);
    assert_eq!(w, common::waveform(2, &["ft", "ff", "tf"]));
}

#[test]
fn version_comment_is_optional_but_checked() {
    let l = Lattice::belnap();
    assert!(formats::read_waveform("a\nt\n", &l).is_ok());
    let err = formats::read_waveform("# circsem waveform v9\na\nt\n", &l).unwrap_err();
    assert!(err.to_string().contains("circsem waveform v1"), "{err}");
    assert!(formats::read_waveform(&format!("{TRUTH_TABLE_HEADER}\na\nt\n"), &l).is_err());
}

#[test]
fn waveform_errors_have_positions() {
    let l = Lattice::belnap();
    let err = formats::read_waveform("a,b\nt,f\nt\n", &l).unwrap_err().to_string();
    assert!(err.contains('3') && err.contains("columns"), "{err}");
    let err = formats::read_waveform("a\nmaybe\n", &l).unwrap_err().to_string();
    assert!(err.contains("maybe"), "{err}");
}

#[test]
fn zero_width_waveforms() {
    let l = Lattice::belnap();
    let text = formats::write_waveform(&[], &Waveform::empty(0), &l).unwrap();
    let (names, w) = formats::read_waveform(&text, &l).unwrap();
    assert!(names.is_empty());
    assert_eq!(w.width, 0);
}

#[test]
fn truth_table_rows_in_any_order() {
    let text = format!("{TRUTH_TABLE_HEADER}\na,{OUTPUT_PREFIX}z\ntop,top\nt,f\nf,t\nbot,bot\n");
    let (ins, outs, t) = formats::read_truth_table(&text).unwrap();
    assert_eq!((ins, outs), (vec!["a".to_string()], vec!["z".to_string()]));
    assert_eq!(t, TruthTable::new(1, 1, common::word("btfT")).unwrap());
}

#[test]
fn truth_table_rows_exactly_once() {
    let head = format!("a,{OUTPUT_PREFIX}z\n");
    let missing = formats::read_truth_table(&format!("{head}bot,bot\nf,t\nt,f\n")).unwrap_err();
    assert!(missing.to_string().contains("top"), "{missing}");
    let twice = formats::read_truth_table(&format!("{head}bot,bot\nf,t\nt,f\ntop,top\nf,f\n")).unwrap_err();
    assert!(twice.to_string().contains("twice"), "{twice}");
    let order = formats::read_truth_table(&format!("{OUTPUT_PREFIX}z,a\nbot,bot\n")).unwrap_err();
    assert!(order.to_string().contains("after an output"), "{order}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn waveforms_round_trip(width in 0usize..4, ticks in proptest::collection::vec(proptest::collection::vec(0usize..4, 4), 0..10)) {
        let l = Lattice::belnap();
        let values = ticks.iter().map(|t| t[..width].iter().map(|&k| common::V[k]).collect()).collect();
        let w = Waveform::new(width, values).unwrap();
        let names = formats::wire_names("x", width);
        let text = formats::write_waveform(&names, &w, &l).unwrap();
        prop_assert!(text.starts_with(WAVEFORM_HEADER));
        let (back_names, back) = formats::read_waveform(&text, &l).unwrap();
        prop_assert_eq!(back_names, names);
        prop_assert_eq!(back, w);
    }

    #[test]
    fn truth_tables_round_trip(seed in any::<u64>(), ins in 0usize..4, outs in 1usize..3) {
        let t = gen::monotone_table(&mut common::rng(seed), ins, outs, false);
        let (a, b) = (formats::wire_names("a", ins), formats::wire_names("z", outs));
        let text = formats::write_truth_table(&a, &b, &t).unwrap();
        let (a2, b2, back) = formats::read_truth_table(&text).unwrap();
        prop_assert_eq!((a2, b2), (a, b));
        prop_assert_eq!(back, t);
    }
}
