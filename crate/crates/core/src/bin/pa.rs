use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Write as _;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use pa::axioms::{self, HarnessOptions};
use pa::enumerate::{count_terms, enum_terms, Dedup, EnumSpec};
use pa::equiv::{self, Budgets, EquivalenceKind};
use pa::parse::{parse_term, parse_term_raw};
use pa::sos::{self, canonical_pomset, init_state, pomset_transitions};
use pa::{Backtrack, Causality, EventLabel, Policy, SemanticsConfig, System, Term};

#[derive(Parser)]
#[command(name = "pa", version, about = "Workbench for the PA1/PA2 process algebras")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Built-in config name (cfg0, cfg_empty) or path to a config file.
    #[arg(long, global = true, default_value = "cfg0")]
    config: String,
    /// Override the config's step-composition policy.
    #[arg(long, global = true)]
    policy: Option<Policy>,
    /// Override the config's causality.
    #[arg(long, global = true)]
    causality: Option<Causality>,
    /// Override how the hhp game treats configurations reached by undoing.
    #[arg(long, global = true)]
    backtrack: Option<Backtrack>,
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for the harnesses (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Cap on LTS states and game positions.
    #[arg(long, global = true, default_value_t = sos::DEFAULT_STATE_BUDGET)]
    state_budget: usize,
    /// Cap on occurrences in one pomset transition.
    #[arg(long, global = true, default_value_t = sos::DEFAULT_POMSET_BUDGET)]
    pomset_budget: usize,
    /// Cap on rewrite steps during normalisation.
    #[arg(long, global = true, default_value_t = axioms::DEFAULT_REWRITE_BUDGET)]
    rewrite_budget: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a term and print its canonical form.
    Parse {
        term: String,
        #[arg(long, default_value = "pa2")]
        system: System,
    },
    /// Build the step transition system of a term.
    Lts {
        term: String,
        #[arg(long, default_value = "pa2")]
        system: System,
        /// Graphviz output.
        #[arg(long, conflicts_with = "json")]
        dot: bool,
    },
    /// List the pomset transitions of a term.
    Pomsets {
        term: String,
        #[arg(long, default_value = "pa2")]
        system: System,
    },
    /// Decide an equivalence between two terms.
    Equiv {
        t1: String,
        t2: String,
        #[arg(long, default_value = "s")]
        rel: EquivalenceKind,
        #[arg(long, default_value = "pa2")]
        system: System,
    },
    /// Normalise a term with the axioms of a system.
    Normalize {
        term: String,
        #[arg(long, default_value = "pa2")]
        system: System,
        /// Print every rewrite with its position.
        #[arg(long)]
        trace: bool,
    },
    /// Check every axiom instance up to a size bound.
    Soundness {
        #[arg(long)]
        system: System,
        /// One or more relations, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "s")]
        rel: Vec<EquivalenceKind>,
        #[arg(long, default_value_t = 3)]
        size: usize,
        /// Labels for enumerated terms.
        #[arg(long, value_delimiter = ',', default_value = "a,b")]
        alphabet: Vec<String>,
    },
    /// Compare equivalence classes with normal forms up to a size bound.
    Completeness {
        #[arg(long)]
        system: System,
        #[arg(long, default_value = "s")]
        rel: EquivalenceKind,
        #[arg(long, default_value_t = 4)]
        size: usize,
        #[arg(long, value_delimiter = ',', default_value = "a,b")]
        alphabet: Vec<String>,
    },
    /// Check that pomset and hp bisimilarity coincide with the step classes.
    Coincidence {
        #[arg(long)]
        system: System,
        #[arg(long, default_value_t = 4)]
        size: usize,
        /// Cross-class pairs to sample.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "a,b")]
        alphabet: Vec<String>,
    },
    /// Search PA1 axiom instances that are hp- but not hhp-sound.
    HhpWitness {
        #[arg(long, default_value_t = 3)]
        size: usize,
        #[arg(long, value_delimiter = ',', default_value = "a,b")]
        alphabet: Vec<String>,
    },
    /// Enumerate closed terms, one per line.
    Enumerate {
        #[arg(long, default_value = "pa1")]
        system: System,
        #[arg(long, default_value_t = 3)]
        size: usize,
        #[arg(long, value_delimiter = ',', default_value = "a,b")]
        alphabet: Vec<String>,
        /// Keep one term per class up to swapping operands of + and ||.
        #[arg(long)]
        modulo_ac: bool,
        /// Print only the number of terms.
        #[arg(long)]
        count: bool,
    },
}

/// Outcome of a command: text or JSON to print, and whether the check
/// passed.
struct Outcome {
    text: String,
    json: Value,
    ok: bool,
}

fn load_config(c: &Common) -> Result<SemanticsConfig, String> {
    let mut cfg = match SemanticsConfig::builtin(&c.config) {
        Some(cfg) => cfg,
        None => {
            let text =
                std::fs::read_to_string(&c.config).map_err(|e| format!("cannot read config `{}`: {e}", c.config))?;
            SemanticsConfig::load(&text).map_err(|e| format!("config `{}`: {e}", c.config))?
        }
    };
    if let Some(p) = c.policy {
        cfg.policy = p;
    }
    if let Some(k) = c.causality {
        cfg.causality = k;
    }
    if let Some(b) = c.backtrack {
        cfg.backtrack = b;
    }
    Ok(cfg)
}

fn labels(names: &[String]) -> Result<Vec<EventLabel>, String> {
    names
        .iter()
        .map(|n| {
            let n = n.trim();
            if EventLabel::is_valid_name(n) {
                Ok(EventLabel::new(n))
            } else {
                Err(format!("`{n}` is not a valid event label"))
            }
        })
        .collect()
}

fn term(text: &str, system: System, cfg: &SemanticsConfig) -> Result<Term, String> {
    parse_term(text, system, cfg).map_err(|e| format!("`{text}`: {e}"))
}

fn harness_options(c: &Common, alphabet: &[String], cfg: &SemanticsConfig) -> Result<HarnessOptions, String> {
    let term_alphabet = labels(alphabet)?;
    if let Some(l) = term_alphabet.iter().find(|l| !cfg.contains(l)) {
        return Err(format!("label `{l}` is not in the config alphabet"));
    }
    Ok(HarnessOptions { term_alphabet, budgets: budgets(c) })
}

fn budgets(c: &Common) -> Budgets {
    Budgets { states: c.state_budget, pomset: c.pomset_budget }
}

fn run(cli: &Cli) -> Result<Outcome, String> {
    let c = &cli.common;
    let cfg = load_config(c)?;
    let err = |e: pa::Error| e.to_string();
    match &cli.command {
        Command::Parse { term: text, system } => {
            let t = if c.config == "cfg0" { parse_term_raw(text, *system) } else { parse_term(text, *system, &cfg) }
                .map_err(|e| format!("`{text}`: {e}"))?;
            Ok(Outcome {
                text: format!("{t}\n"),
                json: json!({ "term": t.to_string(), "system": t.system(), "size": t.size(), "atoms": t.atom_count() }),
                ok: true,
            })
        }
        Command::Lts { term: text, system, dot } => {
            let t = term(text, *system, &cfg)?;
            let lts = sos::build_lts(&t, *system, &cfg, c.state_budget).map_err(err)?;
            let mut s = String::new();
            if *dot {
                s = lts.to_dot();
            } else {
                let _ = writeln!(s, "{} states, {} transitions", lts.state_count(), lts.edge_count());
                for i in 0..lts.state_count() {
                    let name = lts.state(i).map_or("TERM".to_string(), Term::to_string);
                    let tag = if lts.is_stuck(i) { "  (stuck)" } else { "" };
                    let _ = writeln!(s, "s{i}: {name}{tag}");
                }
                for (from, step, to) in lts.edges() {
                    let _ = writeln!(s, "s{from} --{step:?}--> s{to}");
                }
            }
            Ok(Outcome { text: s, json: lts.to_json(), ok: true })
        }
        Command::Pomsets { term: text, system } => {
            let t = term(text, *system, &cfg)?;
            if t.system() > *system {
                return Err(format!("`{text}` uses operators outside {system}"));
            }
            let st = init_state(&t, &cfg).map_err(err)?;
            let mut rows = BTreeSet::new();
            for (p, end) in pomset_transitions(&st, &cfg, c.pomset_budget).map_err(err)? {
                let code = canonical_pomset(&p, c.pomset_budget).map_err(err)?;
                let residual = end.residual_term().map_or("TERM".to_string(), |t| t.to_string());
                rows.insert((p.len(), code, residual));
            }
            let mut s = String::new();
            for (_, code, residual) in &rows {
                let _ = writeln!(s, "[{code}] -> {residual}");
            }
            let json = Value::Array(
                rows.iter().map(|(n, code, r)| json!({ "size": n, "pomset": code, "residual": r })).collect(),
            );
            Ok(Outcome { text: s, json, ok: true })
        }
        Command::Equiv { t1, t2, rel, system } => {
            let (a, b) = (term(t1, *system, &cfg)?, term(t2, *system, &cfg)?);
            let v = equiv::check(*rel, &a, &b, *system, &cfg, budgets(c)).map_err(err)?;
            let mut s = format!(
                "{} {} {}: {}\n",
                a,
                rel.symbol(),
                b,
                if v.equivalent { "equivalent" } else { "not equivalent" }
            );
            for m in v.witness.iter().flatten() {
                let _ = writeln!(s, "  {m}");
            }
            let mut json = serde_json::to_value(&v).expect("verdict");
            json["lhs"] = json!(a.to_string());
            json["rhs"] = json!(b.to_string());
            Ok(Outcome { text: s, json, ok: v.equivalent })
        }
        Command::Normalize { term: text, system, trace } => {
            let t = term(text, *system, &cfg)?;
            let r = axioms::normalize_bounded(&t, *system, &cfg, c.rewrite_budget).map_err(err)?;
            let mut s = String::new();
            if *trace {
                for e in &r.rule_trace {
                    let _ = writeln!(s, "{:<9} at {}", e.rule, e.position);
                }
            }
            let _ = writeln!(s, "{}", r.nf);
            Ok(Outcome { text: s, json: r.to_json(), ok: true })
        }
        Command::Soundness { system, rel, size, alphabet } => {
            let opts = harness_options(c, alphabet, &cfg)?;
            let r = axioms::check_soundness(*system, rel, *size, &cfg, &opts).map_err(err)?;
            Ok(Outcome {
                text: r.summary(),
                json: serde_json::to_value(&r).expect("report"),
                ok: r.failures.is_empty(),
            })
        }
        Command::Completeness { system, rel, size, alphabet } => {
            let opts = harness_options(c, alphabet, &cfg)?;
            let r = axioms::check_completeness(*system, *rel, *size, &cfg, &opts).map_err(err)?;
            let ok = r.violations.is_empty() && r.oracle_disagreements.is_empty();
            Ok(Outcome { text: r.summary(), json: serde_json::to_value(&r).expect("report"), ok })
        }
        Command::Coincidence { system, size, samples, seed, alphabet } => {
            let opts = harness_options(c, alphabet, &cfg)?;
            let r = axioms::check_coincidence(*system, *size, *samples, *seed, &cfg, &opts).map_err(err)?;
            Ok(Outcome {
                text: r.summary(),
                json: serde_json::to_value(&r).expect("report"),
                ok: r.divergences.is_empty(),
            })
        }
        Command::HhpWitness { size, alphabet } => {
            let opts = harness_options(c, alphabet, &cfg)?;
            let r = axioms::find_hhp_witness(*size, &cfg, &opts).map_err(err)?;
            Ok(Outcome { text: r.summary(), json: serde_json::to_value(&r).expect("report"), ok: true })
        }
        Command::Enumerate { system, size, alphabet, modulo_ac, count } => {
            let spec = EnumSpec {
                system: *system,
                alphabet: labels(alphabet)?,
                max_size: *size,
                dedup: if *modulo_ac { Dedup::ModuloAc } else { Dedup::None },
            };
            if *count {
                let n = count_terms(&spec).map_err(err)?;
                return Ok(Outcome { text: format!("{n}\n"), json: json!({ "count": n.to_string() }), ok: true });
            }
            let terms: Vec<String> = enum_terms(&spec).map_err(err)?.map(|t| t.to_string()).collect();
            let mut s = terms.join("\n");
            s.push('\n');
            Ok(Outcome { text: s, json: json!({ "count": terms.len().to_string(), "terms": terms }), ok: true })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.common.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("pa: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(out) => {
            let text =
                if cli.common.json { serde_json::to_string_pretty(&out.json).expect("json") + "\n" } else { out.text };
            // a closed pipe (`pa ... | head`) is not an error
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            ExitCode::from(if out.ok { 0 } else { 1 })
        }
        Err(msg) => {
            eprintln!("pa: {msg}");
            ExitCode::from(2)
        }
    }
}
