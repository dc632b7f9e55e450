use std::io::{self, BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use circsem::dpo::{self, Mode, Rule};
use circsem::formats;
use circsem::hypergraph::{self, Discipline, ExtractMode, Translation};
use circsem::lang::{self, CircuitDef};
use circsem::opsem::{self, ObsMode};
use circsem::parteval::{self, Binding};
use circsem::{belnap, mealy, synth, Interpretation, Term};

macro_rules! out {
    ($($t:tt)*) => { write!(io::stdout(), $($t)*)? };
}

macro_rules! outln {
    ($($t:tt)*) => { writeln!(io::stdout(), $($t)*)? };
}

/// Exit status for a negative verdict: inequivalent circuits, a failed check, no rewrite.
const NEGATIVE: u8 = 1;
const USER_ERROR: u8 = 2;
const BUDGET: u8 = 3;

#[derive(Parser)]
#[command(name = "circsem", version, about = "Simulate, compare, synthesise and rewrite sequential circuits")]
struct Cli {
    /// Interpretation JSON (lattice and primitive tables); Belnap logic by default.
    #[arg(long, global = true, value_name = "FILE")]
    interp: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a circuit on an input waveform and print the output waveform.
    Eval {
        file: PathBuf,
        #[arg(long, value_name = "WAVE.csv")]
        inputs: PathBuf,
        /// Circuit to use when the file defines several (default: the last one).
        #[arg(long)]
        name: Option<String>,
    },
    /// Step a circuit one cycle at a time; commands `:state`, `:reset`, `:quit`.
    Step {
        file: PathBuf,
        #[arg(long)]
        name: Option<String>,
    },
    /// Decide observational equivalence; prints a distinguishing waveform otherwise.
    Equiv {
        a: PathBuf,
        b: PathBuf,
        /// Enumerate input waveforms instead of comparing machines.
        #[arg(long)]
        exhaustive: bool,
        #[arg(long)]
        name_a: Option<String>,
        #[arg(long)]
        name_b: Option<String>,
    },
    /// Print the reachable Mealy machine of a circuit.
    Mealy {
        file: PathBuf,
        #[arg(long)]
        json: bool,
        /// Minimise before printing.
        #[arg(long)]
        minimize: bool,
        #[arg(long)]
        name: Option<String>,
    },
    /// Build a circuit from a truth table (.csv) or a Mealy machine (.json).
    Synth {
        file: PathBuf,
        #[arg(long, default_value = "synth")]
        name: String,
    },
    /// Rewrite a circuit into Mealy form.
    Normalize {
        file: PathBuf,
        /// Register word into a trace-free core with feedback unrolled (the default).
        #[arg(long)]
        mealy_form: bool,
        #[arg(long)]
        name: Option<String>,
    },
    /// Print the hypergraph of a circuit and check degree disciplines.
    Graph {
        file: PathBuf,
        #[arg(long)]
        dot: bool,
        #[arg(long, value_enum)]
        check: Option<Check>,
        /// Draw joins and intros as shared vertices too.
        #[arg(long)]
        frobenius: bool,
        #[arg(long)]
        name: Option<String>,
    },
    /// Apply double-pushout rewrite rules to a circuit.
    Rewrite {
        file: PathBuf,
        /// Rule file; rules are `rule NAME(..) -> (..) lhs { .. } rhs { .. }` blocks.
        #[arg(long, value_name = "FILE")]
        rules: Option<PathBuf>,
        /// Built-in rules, used in addition to any rule file.
        #[arg(long, value_enum)]
        bank: Option<Bank>,
        #[arg(long, default_value = "traced")]
        mode: Mode,
        /// Print every rewrite, one per surviving complement.
        #[arg(long, conflicts_with = "normalize")]
        all: bool,
        /// Rewrite until no rule applies.
        #[arg(long)]
        normalize: bool,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        #[arg(long)]
        name: Option<String>,
    },
    /// Partially evaluate with some inputs fixed.
    Parteval {
        file: PathBuf,
        /// `wire=value` or `wire={v1,v2,..}` for an uncertain input.
        #[arg(long = "fix", value_name = "WIRE=VALUE")]
        fix: Vec<String>,
        #[arg(long, default_value_t = parteval::DEFAULT_BUDGET)]
        budget: usize,
        #[arg(long)]
        name: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    Pm,
    Plm,
    Ma,
}

#[derive(Clone, Copy, ValueEnum)]
enum Bank {
    Values,
    Comonoid,
    All,
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn interpretation(path: Option<&Path>) -> anyhow::Result<Interpretation> {
    match path {
        None => Ok(belnap()),
        Some(p) => Ok(Interpretation::from_json(&read(p)?)?),
    }
}

fn load(path: &Path, name: Option<&str>, i: &Interpretation) -> anyhow::Result<CircuitDef> {
    let src = lang::parse(&read(path)?, i.lattice()).with_context(|| path.display().to_string())?;
    Ok(src.circuit(name)?.clone())
}

fn show(t: &Term, def: &CircuitDef, name: &str, i: &Interpretation) -> String {
    if (t.ins(), t.outs()) == (def.input_names.len(), def.output_names.len()) {
        lang::print_named(t, name, &def.input_names, &def.output_names, i.lattice())
    } else {
        lang::print(t, name, i.lattice())
    }
}

fn parse_word(s: &str, i: &Interpretation) -> anyhow::Result<Vec<circsem::Value>> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|p| !p.is_empty())
        .map(|p| i.lattice().parse_value(p).ok_or_else(|| anyhow!("`{p}` is not a value")))
        .collect()
}

fn step_repl(def: &CircuitDef, i: &Interpretation) -> anyhow::Result<u8> {
    let t = def.term();
    let fresh = || opsem::Stepper::new(opsem::to_mealy_form(&t, i), i);
    let mut s = fresh()?;
    let l = i.lattice();
    let interactive = io::stdin().is_terminal();
    let mut out = io::stdout();
    let prompt = |out: &mut io::Stdout| -> io::Result<()> {
        if interactive {
            write!(out, "{}> ", def.input_names.join(","))?;
            out.flush()?;
        }
        Ok(())
    };
    prompt(&mut out)?;
    for line in io::stdin().lock().lines() {
        let line = line?;
        match line.trim() {
            "" => {}
            ":quit" | ":q" => break,
            ":state" => writeln!(out, "state: {}", l.word_name(s.state()))?,
            ":reset" => {
                s = fresh()?;
                writeln!(out, "state: {}", l.word_name(s.state()))?;
            }
            cmd if cmd.starts_with(':') => eprintln!("unknown command `{cmd}` (try :state, :reset, :quit)"),
            input => match parse_word(input, i).and_then(|w| Ok(s.step(&w)?)) {
                Ok(o) => {
                    let named: Vec<String> =
                        def.output_names.iter().zip(&o).map(|(n, &v)| format!("{n}={}", l.name(v))).collect();
                    writeln!(out, "{} | state: {}", named.join(" "), l.word_name(s.state()))?;
                }
                Err(e) => eprintln!("error: {e}"),
            },
        }
        prompt(&mut out)?;
    }
    Ok(0)
}

fn parse_binding(s: &str, i: &Interpretation) -> anyhow::Result<(String, Binding)> {
    let (k, v) = s.split_once('=').ok_or_else(|| anyhow!("expected WIRE=VALUE, got `{s}`"))?;
    let v = v.trim();
    let b = if let Some(inner) = v.strip_prefix('{').and_then(|r| r.strip_suffix('}')) {
        let alts = parse_word(inner, i)?;
        if alts.is_empty() {
            bail!("empty alternative set for `{k}`");
        }
        Binding::Uncertain(alts)
    } else {
        let w = parse_word(v, i)?;
        match w.as_slice() {
            [x] => Binding::Constant(*x),
            _ => bail!("expected one value for `{k}`, got `{v}`"),
        }
    };
    Ok((k.trim().to_string(), b))
}

fn load_rules(rules: Option<&Path>, bank: Option<Bank>, i: &Interpretation) -> anyhow::Result<Vec<Rule>> {
    let mut out = match bank {
        None => Vec::new(),
        Some(Bank::Values) => dpo::value_rules(i),
        Some(Bank::Comonoid) => dpo::comonoid_rules(i),
        Some(Bank::All) => dpo::rule_bank(i),
    };
    if let Some(p) = rules {
        out.extend(dpo::parse_rules(&read(p)?, i).with_context(|| p.display().to_string())?);
    }
    if out.is_empty() {
        bail!("no rules given (use --rules FILE or --bank)");
    }
    Ok(out)
}

fn extract(c: &hypergraph::Cospan, mode: Mode) -> anyhow::Result<Term> {
    let m = match mode {
        Mode::TracedComonoid => ExtractMode::TracedComonoid,
        _ => ExtractMode::Traced,
    };
    Ok(hypergraph::extract_term(c, m)?.simplify())
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let i = interpretation(cli.interp.as_deref())?;
    let l = i.lattice();
    match cli.cmd {
        Command::Eval { file, inputs, name } => {
            let def = load(&file, name.as_deref(), &i)?;
            let (names, w) = formats::read_waveform(&read(&inputs)?, l).with_context(|| inputs.display().to_string())?;
            if names.len() == def.input_names.len() && names != def.input_names {
                eprintln!("note: waveform columns {names:?} are taken in order for inputs {:?}", def.input_names);
            }
            let out = opsem::run_waveform(&def.term(), &w, &i)?;
            out!("{}", formats::write_waveform(&def.output_names, &out, l)?);
            Ok(0)
        }
        Command::Step { file, name } => step_repl(&load(&file, name.as_deref(), &i)?, &i),
        Command::Equiv { a, b, exhaustive, name_a, name_b } => {
            let da = load(&a, name_a.as_deref(), &i)?;
            let db = load(&b, name_b.as_deref(), &i)?;
            let mode = if exhaustive { ObsMode::exhaustive() } else { ObsMode::Oracle };
            match opsem::obs_witness(&da.term(), &db.term(), mode, &i)? {
                None => {
                    outln!("equivalent");
                    Ok(0)
                }
                Some(w) => {
                    let ta = opsem::run_waveform(&da.term(), &w, &i)?;
                    let tb = opsem::run_waveform(&db.term(), &w, &i)?;
                    eprintln!("not equivalent; distinguishing input:");
                    out!("{}", formats::write_waveform(&da.input_names, &w, l)?);
                    let last = w.len().saturating_sub(1);
                    if let (Some(x), Some(y)) = (ta.values.get(last), tb.values.get(last)) {
                        eprintln!("final outputs differ: {} vs {}", l.word_name(x), l.word_name(y));
                    }
                    Ok(NEGATIVE)
                }
            }
        }
        Command::Mealy { file, json, minimize, name } => {
            let def = load(&file, name.as_deref(), &i)?;
            let m = mealy::reachable(&mealy::circuit_to_mealy(&def.term(), &i)?)?;
            let m = if minimize { mealy::minimize(&m)? } else { m };
            if json {
                outln!("{}", mealy::to_json(&m)?);
            } else {
                let t = m.as_table().ok_or_else(|| anyhow!("machine has no explicit table"))?;
                outln!("{} inputs, {} outputs, {} reachable states", t.ins, t.outs, t.state_names.len());
                outln!("initial state: {}", t.state_names[t.initial as usize]);
            }
            Ok(0)
        }
        Command::Synth { file, name } => {
            let text = read(&file)?;
            let is_json = file.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
            let out = if is_json {
                let m = mealy::from_json(&text, i.lattice_arc())?;
                lang::print(&synth::mealy_to_circuit(&m, &synth::default_value_order())?, &name, l)
            } else {
                let (ins, outs, table) = formats::read_truth_table(&text).with_context(|| file.display().to_string())?;
                table.check_monotone()?;
                lang::print_named(&synth::belnap_express(&table)?, &name, &ins, &outs, l)
            };
            out!("{out}");
            Ok(0)
        }
        Command::Normalize { file, mealy_form: _, name } => {
            let def = load(&file, name.as_deref(), &i)?;
            let mf = opsem::to_mealy_form(&def.term(), &i);
            out!("{}", show(&mf.to_term(), &def, &format!("{}_mealy", def.name), &i));
            Ok(0)
        }
        Command::Graph { file, dot, check, frobenius, name } => {
            let def = load(&file, name.as_deref(), &i)?;
            let mode = if frobenius { Translation::Frobenius } else { Translation::Comonoid };
            let c = hypergraph::term_to_cospan_with(&def.term(), mode);
            if dot {
                out!("{}", hypergraph::to_dot(&c, &def.name));
            } else {
                outln!(
                    "{} vertices, {} edges, {} inputs, {} outputs",
                    c.graph.vertices,
                    c.graph.edges.len(),
                    c.inputs.len(),
                    c.outputs.len()
                );
            }
            let Some(check) = check else { return Ok(0) };
            let (d, label) = match check {
                Check::Pm => (Discipline::PartialMonogamous, "partial monogamous"),
                Check::Plm => (Discipline::PartialLeftMonogamous, "partial left-monogamous"),
                Check::Ma => (Discipline::MonogamousAcyclic, "monogamous acyclic"),
            };
            let bad = hypergraph::violations(&c, d);
            if bad.is_empty() {
                eprintln!("{label}: yes");
                Ok(0)
            } else {
                eprintln!("{label}: no");
                for b in bad {
                    eprintln!("  {b}");
                }
                Ok(NEGATIVE)
            }
        }
        Command::Rewrite { file, rules, bank, mode, all, normalize, steps, name } => {
            let def = load(&file, name.as_deref(), &i)?;
            let rules = load_rules(rules.as_deref(), bank, &i)?;
            let host = hypergraph::term_to_cospan(&def.term());
            let discipline = match mode {
                Mode::Smc => Discipline::Monogamous,
                Mode::Traced => Discipline::PartialMonogamous,
                Mode::TracedComonoid => Discipline::PartialLeftMonogamous,
            };
            let bad = hypergraph::violations(&host, discipline);
            if !bad.is_empty() {
                bail!(
                    "`{}` is not a {mode} graph ({}); forks and discards need --mode traced-comonoid",
                    def.name,
                    bad.join("; ")
                );
            }
            let results: Vec<(String, hypergraph::Cospan)> = if normalize {
                let (g, trace) = dpo::normalize(&rules, &host, mode, steps)?;
                eprintln!("{} rewrite steps", trace.len());
                for r in &trace {
                    eprintln!("  {r}");
                }
                vec![(def.name.clone(), g)]
            } else if all {
                let mut v = Vec::new();
                for r in &rules {
                    for g in dpo::rewrite_all(r, &host, mode)? {
                        v.push((format!("{}_{}", def.name, v.len() + 1), g));
                    }
                }
                v
            } else {
                match dpo::rewrite_once(&rules, &host, mode)? {
                    Some((k, g)) => {
                        eprintln!("applied {}", rules[k].name);
                        vec![(def.name.clone(), g)]
                    }
                    None => vec![],
                }
            };
            if results.is_empty() {
                eprintln!("no rule applies");
                return Ok(NEGATIVE);
            }
            let texts = results
                .iter()
                .map(|(n, g)| Ok(show(&extract(g, mode)?, &def, n, &i)))
                .collect::<anyhow::Result<Vec<_>>>()?;
            out!("{}", texts.join("\n"));
            Ok(0)
        }
        Command::Parteval { file, fix, budget, name } => {
            let def = load(&file, name.as_deref(), &i)?;
            let mut bindings = vec![None; def.input_names.len()];
            for f in &fix {
                let (k, b) = parse_binding(f, &i)?;
                let at = def
                    .input_names
                    .iter()
                    .position(|n| *n == k)
                    .ok_or_else(|| anyhow!("`{}` has no input named `{k}`", def.name))?;
                bindings[at] = Some(b);
            }
            let out = parteval::partial_evaluate_with_budget(&def.term(), &bindings, &i, budget)?;
            let inputs: Vec<String> =
                def.input_names.iter().zip(&bindings).filter(|(_, b)| b.is_none()).map(|(n, _)| n.clone()).collect();
            let t = &out.term;
            if t.ins() == inputs.len() && t.outs() == def.output_names.len() {
                out!("{}", lang::print_named(t, &format!("{}_pe", def.name), &inputs, &def.output_names, l));
            } else {
                out!("{}", lang::print(t, &format!("{}_pe", def.name), l));
            }
            for b in &out.blocked {
                eprintln!("note: {b}");
            }
            if out.exhausted {
                eprintln!("rewrite budget of {budget} steps exhausted; the result is partial");
                return Ok(BUDGET);
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) if e.chain().any(|c| c.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe)) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let budget = e.chain().any(|c| c.downcast_ref::<circsem::Error>().is_some_and(circsem::Error::is_budget));
            ExitCode::from(if budget { BUDGET } else { USER_ERROR })
        }
    }
}
