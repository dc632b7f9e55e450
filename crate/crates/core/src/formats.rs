//! Waveform and truth-table CSV files. Each starts with a version comment and a header row
//! naming the wires; column order is wire order.

use crate::error::{Error, Result};
use crate::interp::{Lattice, Value};
use crate::mealy::Waveform;
use crate::synth::TruthTable;

pub const WAVEFORM_HEADER: &str = "# circsem waveform v1";
pub const TRUTH_TABLE_HEADER: &str = "# circsem truth-table v1";

/// Output columns of a truth table carry this prefix in the header row.
pub const OUTPUT_PREFIX: &str = "out:";

fn check_version(text: &str, header: &str) -> Result<()> {
    let kind = header.trim_start_matches("# ");
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("# circsem ") {
            if line != header {
                return Err(Error::Parse { line: n + 1, col: 1, msg: format!("expected `{kind}`, found `circsem {rest}`") });
            }
            return Ok(());
        }
    }
    Ok(())
}

type Records = Vec<(usize, Vec<String>)>;

fn rows(text: &str) -> Result<(Vec<String>, Records)> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let names: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        out.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok((names, out))
}

fn is_blank(cells: &[String]) -> bool {
    cells.len() == 1 && cells[0].is_empty()
}

fn parse_row(cells: &[String], width: usize, line: usize, lattice: &Lattice) -> Result<Vec<Value>> {
    if cells.len() != width {
        return Err(Error::Parse { line, col: 1, msg: format!("expected {width} columns, found {}", cells.len()) });
    }
    cells
        .iter()
        .enumerate()
        .map(|(k, c)| {
            lattice
                .parse_value(c)
                .ok_or_else(|| Error::Parse { line, col: k + 1, msg: format!("`{c}` is not a value") })
        })
        .collect()
}

/// Wire names and the waveform, one row per tick.
pub fn read_waveform(text: &str, lattice: &Lattice) -> Result<(Vec<String>, Waveform)> {
    check_version(text, WAVEFORM_HEADER)?;
    let (names, records) = rows(text)?;
    let width = if names.len() == 1 && names[0].is_empty() { 0 } else { names.len() };
    // A tick of a zero-width waveform is a row holding one empty field.
    let ticks = records
        .iter()
        .filter(|(_, cells)| width == 0 || !is_blank(cells))
        .map(|(line, cells)| if width == 0 && is_blank(cells) { (line, &[][..]) } else { (line, &cells[..]) })
        .map(|(line, cells)| parse_row(cells, width, *line, lattice))
        .collect::<Result<Vec<_>>>()?;
    Ok((names.into_iter().take(width).collect(), Waveform::new(width, ticks)?))
}

fn write_rows(header: &str, names: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(names)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
        .expect("csv output is utf-8");
    Ok(format!("{header}\n{body}"))
}

pub fn write_waveform(names: &[String], w: &Waveform, lattice: &Lattice) -> Result<String> {
    if names.len() != w.width {
        return Err(Error::Width { expected: w.width, got: names.len() });
    }
    write_rows(
        WAVEFORM_HEADER,
        names,
        w.values.iter().map(|t| t.iter().map(|&v| lattice.name(v).to_string()).collect()),
    )
}

/// Default names `x0, x1, ...`.
pub fn wire_names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|k| format!("{prefix}{k}")).collect()
}

/// Input names, output names and the table. Every input row must appear exactly once,
/// in any order.
pub fn read_truth_table(text: &str) -> Result<(Vec<String>, Vec<String>, TruthTable)> {
    check_version(text, TRUTH_TABLE_HEADER)?;
    let lattice = Lattice::belnap();
    let (names, records) = rows(text)?;
    let ins: Vec<String> = names.iter().take_while(|n| !n.starts_with(OUTPUT_PREFIX)).cloned().collect();
    let outs: Vec<String> = names[ins.len()..]
        .iter()
        .map(|n| {
            n.strip_prefix(OUTPUT_PREFIX)
                .map(str::to_string)
                .ok_or_else(|| Error::Parse { line: 1, col: 1, msg: format!("input column `{n}` after an output column") })
        })
        .collect::<Result<_>>()?;
    let (m, n) = (ins.len(), outs.len());
    let mut table: Vec<Option<Vec<Value>>> = vec![None; 4usize.pow(m as u32)];
    for (line, cells) in records.iter().filter(|(_, c)| !is_blank(c)) {
        let row = parse_row(cells, m + n, *line, &lattice)?;
        let k = lattice.word_index(&row[..m]);
        if table[k].replace(row[m..].to_vec()).is_some() {
            return Err(Error::Parse { line: *line, col: 1, msg: format!("row `{}` given twice", lattice.word_name(&row[..m])) });
        }
    }
    let mut flat = Vec::new();
    for (k, r) in table.into_iter().enumerate() {
        let r = r.ok_or_else(|| {
            Error::Invalid(format!("truth table has no row for input `{}`", lattice.word_name(&lattice.word_at(k, m))))
        })?;
        flat.extend(r);
    }
    Ok((ins, outs, TruthTable::new(m, n, flat)?))
}

pub fn write_truth_table(ins: &[String], outs: &[String], t: &TruthTable) -> Result<String> {
    let lattice = Lattice::belnap();
    let mut names: Vec<String> = ins.to_vec();
    names.extend(outs.iter().map(|o| format!("{OUTPUT_PREFIX}{o}")));
    let rows = (0..t.row_count()).map(|k| {
        let w = lattice.word_at(k, t.ins);
        w.iter().chain(t.row(k)).map(|&v| lattice.name(v).to_string()).collect()
    });
    write_rows(TRUTH_TABLE_HEADER, &names, rows)
}
