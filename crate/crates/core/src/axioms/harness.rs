//! Theorem-checking harnesses over bounded enumerations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::SemanticsConfig;
use crate::enumerate::{enum_terms, EnumSpec};
use crate::equiv::{check, step_fingerprint, Budgets, EquivalenceKind};
use crate::error::{Error, Result};
use crate::syntax::{EventLabel, System, Term};

use super::nf::NormalForm;
use super::rewrite::normal_form;
use super::schema::{axiom_schemas, instantiate, AxiomSchema, Substitution};

/// Bounds shared by the harnesses.
#[derive(Debug, Clone)]
pub struct HarnessOptions {
    /// Labels the enumerated terms are built from. Event metavariables
    /// range over the whole configured alphabet instead.
    pub term_alphabet: Vec<EventLabel>,
    pub budgets: Budgets,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        HarnessOptions { term_alphabet: vec![EventLabel::new("a"), EventLabel::new("b")], budgets: Budgets::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceFailure {
    pub schema: String,
    pub substitution: BTreeMap<String, String>,
    pub lhs: String,
    pub rhs: String,
    pub relation: EquivalenceKind,
    pub verdict: bool,
    pub witness: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SchemaTally {
    pub schema: String,
    pub instances: usize,
    pub skipped: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SoundnessReport {
    pub system: System,
    pub relations: Vec<EquivalenceKind>,
    pub size_bound: usize,
    pub config: String,
    pub schemas: Vec<SchemaTally>,
    pub failures: Vec<InstanceFailure>,
}

impl SoundnessReport {
    pub fn instances(&self) -> usize {
        self.schemas.iter().map(|s| s.instances).sum()
    }

    pub fn skipped(&self) -> usize {
        self.schemas.iter().map(|s| s.skipped).sum()
    }

    pub fn summary(&self) -> String {
        let rels: Vec<String> = self.relations.iter().map(|r| r.to_string()).collect();
        let mut s = format!(
            "soundness {} [{}] size<={}: {} instances, {} skipped, {} failures\n",
            self.system,
            rels.join(","),
            self.size_bound,
            self.instances(),
            self.skipped(),
            self.failures.len()
        );
        for t in &self.schemas {
            let _ = writeln!(
                s,
                "  {:<4} {:>7} checked {:>6} skipped {:>6} failed",
                t.schema, t.instances, t.skipped, t.failures
            );
        }
        for f in self.failures.iter().take(20) {
            let _ = writeln!(
                s,
                "  FAIL {} [{}] {} vs {} ({}): {}",
                f.schema,
                subst_text(&f.substitution),
                f.lhs,
                f.rhs,
                f.relation,
                f.witness.join("; ")
            );
        }
        if self.failures.len() > 20 {
            let _ = writeln!(s, "  ... {} more", self.failures.len() - 20);
        }
        s
    }
}

fn subst_text(m: &BTreeMap<String, String>) -> String {
    m.iter().map(|(k, v)| format!("{k}:={v}")).collect::<Vec<_>>().join(", ")
}

fn subst_map(s: &Substitution) -> BTreeMap<String, String> {
    let mut m: BTreeMap<String, String> = s.vars.iter().map(|(v, t)| (v.to_string(), t.to_string())).collect();
    m.extend(s.events.iter().map(|(k, l)| (k.to_string(), l.to_string())));
    m
}

/// Every substitution for `schema`: term variables over `terms`, event
/// metavariables over `labels`, in lexicographic order.
pub fn substitutions(schema: &AxiomSchema, terms: &[Term], labels: &[EventLabel]) -> Vec<Substitution> {
    let (vars, metas) = schema.variables();
    let mut out = vec![Substitution::default()];
    for v in vars {
        out = out
            .into_iter()
            .flat_map(|s| {
                terms.iter().map(move |t| {
                    let mut s = s.clone();
                    s.vars.insert(v, t.clone());
                    s
                })
            })
            .collect();
    }
    for m in metas {
        out = out
            .into_iter()
            .flat_map(|s| {
                labels.iter().map(move |l| {
                    let mut s = s.clone();
                    s.events.insert(m, l.clone());
                    s
                })
            })
            .collect();
    }
    out
}

fn terms_up_to(system: System, size: usize, opts: &HarnessOptions) -> Result<Vec<Term>> {
    let spec =
        EnumSpec { system, alphabet: opts.term_alphabet.clone(), max_size: size, dedup: crate::enumerate::Dedup::None };
    Ok(enum_terms(&spec)?.collect())
}

/// Instances of `schemas` with their outcome under each of `kinds`:
/// `None` when skipped, otherwise the first failing relation (if any).
fn run_instances(
    schemas: &[AxiomSchema],
    terms: &[Term],
    cfg: &SemanticsConfig,
    kinds: &[EquivalenceKind],
    budgets: Budgets,
) -> Result<Vec<(usize, Substitution, Option<Vec<(EquivalenceKind, Option<Vec<String>>)>>)>> {
    let jobs: Vec<(usize, Substitution)> = schemas
        .iter()
        .enumerate()
        .flat_map(|(i, s)| substitutions(s, terms, cfg.alphabet()).into_iter().map(move |sub| (i, sub)))
        .collect();
    jobs.into_par_iter()
        .map(|(i, sub)| {
            let Some((lhs, rhs)) = instantiate(&schemas[i], &sub, cfg)? else {
                return Ok((i, sub, None));
            };
            let mut verdicts = Vec::new();
            for &k in kinds {
                let v = check(k, &lhs, &rhs, schemas[i].system, cfg, budgets)?;
                verdicts.push((k, v.witness));
            }
            Ok((i, sub, Some(verdicts)))
        })
        .collect()
}

/// Checks every non-skipped instance with closed terms up to `size_bound`
/// under each relation in `kinds`.
pub fn check_soundness(
    system: System,
    kinds: &[EquivalenceKind],
    size_bound: usize,
    cfg: &SemanticsConfig,
    opts: &HarnessOptions,
) -> Result<SoundnessReport> {
    let schemas = axiom_schemas(system);
    let terms = terms_up_to(system, size_bound, opts)?;
    let results = run_instances(&schemas, &terms, cfg, kinds, opts.budgets)?;
    let mut tallies: Vec<SchemaTally> =
        schemas.iter().map(|s| SchemaTally { schema: s.name.to_string(), ..Default::default() }).collect();
    let mut failures = Vec::new();
    for (i, sub, verdicts) in results {
        let tally = &mut tallies[i];
        let Some(verdicts) = verdicts else {
            tally.skipped += 1;
            continue;
        };
        tally.instances += 1;
        let mut failed = false;
        for (k, witness) in verdicts {
            if let Some(w) = witness {
                failed = true;
                let (lhs, rhs) = instantiate(&schemas[i], &sub, cfg)?.expect("instance");
                failures.push(InstanceFailure {
                    schema: schemas[i].name.to_string(),
                    substitution: subst_map(&sub),
                    lhs: lhs.to_string(),
                    rhs: rhs.to_string(),
                    relation: k,
                    verdict: false,
                    witness: w,
                });
            }
        }
        if failed {
            tally.failures += 1;
        }
    }
    Ok(SoundnessReport {
        system,
        relations: kinds.to_vec(),
        size_bound,
        config: cfg.to_text(),
        schemas: tallies,
        failures,
    })
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    /// Equivalent terms with different normal forms.
    SplitClass { terms: Vec<String>, normal_forms: Vec<String> },
    /// Inequivalent terms with one normal form.
    SharedNormalForm { normal_form: String, terms: Vec<String> },
}

#[derive(Debug, Clone, Serialize)]
pub struct CompletenessReport {
    pub system: System,
    pub relation: EquivalenceKind,
    pub size_bound: usize,
    pub config: String,
    pub terms: usize,
    pub buckets: usize,
    pub classes: usize,
    pub violations: Vec<Violation>,
    /// Equivalent pairs identified only through communication: their normal
    /// forms agree, but differ once γ is dropped. The PA1 axioms have none
    /// deriving them, so they are listed instead of counted as passes.
    pub gamma_caveat: Vec<(String, String)>,
    /// Intra-bucket pairs the game for `relation` separates although their
    /// step fingerprints agree (step relation only: should be empty).
    pub oracle_disagreements: Vec<(String, String)>,
}

impl CompletenessReport {
    pub fn summary(&self) -> String {
        let mut s = format!(
            "completeness {} {} size<={}: {} terms, {} step buckets, {} classes, {} violations, {} gamma-caveat pairs, {} oracle disagreements\n",
            self.system,
            self.relation,
            self.size_bound,
            self.terms,
            self.buckets,
            self.classes,
            self.violations.len(),
            self.gamma_caveat.len(),
            self.oracle_disagreements.len()
        );
        for v in self.violations.iter().take(20) {
            match v {
                Violation::SplitClass { terms, normal_forms } => {
                    let _ = writeln!(s, "  SPLIT {{{}}} -> {} normal forms", terms.join(" ; "), normal_forms.len());
                }
                Violation::SharedNormalForm { normal_form, terms } => {
                    let _ = writeln!(s, "  SHARED {normal_form} <- {{{}}}", terms.join(" ; "));
                }
            }
        }
        for (a, b) in self.gamma_caveat.iter().take(10) {
            let _ = writeln!(s, "  CAVEAT {a}  ~  {b}");
        }
        if self.gamma_caveat.len() > 10 {
            let _ = writeln!(s, "  ... {} more caveat pairs", self.gamma_caveat.len() - 10);
        }
        s
    }
}

struct Entry {
    term: Term,
    fingerprint: String,
    nf: NormalForm,
    gamma_free: Option<NormalForm>,
}

/// Groups the enumerated terms into classes of `relation` and checks that
/// classes and normal forms correspond one to one.
pub fn check_completeness(
    system: System,
    relation: EquivalenceKind,
    size_bound: usize,
    cfg: &SemanticsConfig,
    opts: &HarnessOptions,
) -> Result<CompletenessReport> {
    let terms = terms_up_to(system, size_bound, opts)?;
    let caveats = system == System::Pa1 && cfg.has_gamma();
    let free = cfg.without_gamma();
    let entries: Vec<Entry> = terms
        .into_par_iter()
        .map(|term| {
            Ok(Entry {
                fingerprint: step_fingerprint(&term, system, cfg, opts.budgets.states)?,
                nf: normal_form(&term, system, cfg)?,
                gamma_free: if caveats { Some(normal_form(&term, system, &free)?) } else { None },
                term,
            })
        })
        .collect::<Result<_>>()?;

    let mut buckets: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, e) in entries.iter().enumerate() {
        buckets.entry(&e.fingerprint).or_default().push(i);
    }

    // Refine every bucket by the game for `relation`; for the step relation
    // the game must agree with the bucket.
    let refined: Vec<(Vec<Vec<usize>>, Vec<(usize, usize)>)> = buckets
        .values()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|members| {
            let mut classes: Vec<Vec<usize>> = Vec::new();
            let mut disagreements = Vec::new();
            for &i in members {
                let mut placed = false;
                for class in classes.iter_mut() {
                    let rep = class[0];
                    let eq =
                        check(relation, &entries[rep].term, &entries[i].term, system, cfg, opts.budgets)?.equivalent;
                    if eq {
                        class.push(i);
                        placed = true;
                        break;
                    }
                }
                if !placed {
                    if relation == EquivalenceKind::Step && !classes.is_empty() {
                        disagreements.push((classes[0][0], i));
                    }
                    classes.push(vec![i]);
                }
            }
            Ok((classes, disagreements))
        })
        .collect::<Result<_>>()?;

    let mut violations = Vec::new();
    let mut gamma_caveat = Vec::new();
    let mut oracle_disagreements = Vec::new();
    let mut by_nf: BTreeMap<&NormalForm, Vec<usize>> = BTreeMap::new();
    let mut class_count = 0;
    for (classes, disagreements) in &refined {
        for &(a, b) in disagreements {
            oracle_disagreements.push((entries[a].term.to_string(), entries[b].term.to_string()));
        }
        for class in classes {
            class_count += 1;
            let nfs: BTreeSet<&NormalForm> = class.iter().map(|&i| &entries[i].nf).collect();
            if nfs.len() > 1 {
                violations.push(Violation::SplitClass {
                    terms: class.iter().map(|&i| entries[i].term.to_string()).collect(),
                    normal_forms: nfs.iter().map(|n| n.to_string()).collect(),
                });
            }
            for nf in nfs {
                by_nf.entry(nf).or_default().push(class[0]);
            }
            if caveats {
                let mut groups: BTreeMap<&NormalForm, usize> = BTreeMap::new();
                for &i in class {
                    let g = entries[i].gamma_free.as_ref().expect("gamma-free normal form");
                    if let Some(&first) = groups.values().next() {
                        if !groups.contains_key(g) {
                            gamma_caveat.push((entries[first].term.to_string(), entries[i].term.to_string()));
                        }
                    }
                    groups.entry(g).or_insert(i);
                }
            }
        }
    }
    for (nf, reps) in by_nf {
        if reps.len() > 1 {
            violations.push(Violation::SharedNormalForm {
                normal_form: nf.to_string(),
                terms: reps.iter().map(|&i| entries[i].term.to_string()).collect(),
            });
        }
    }
    Ok(CompletenessReport {
        system,
        relation,
        size_bound,
        config: cfg.to_text(),
        terms: entries.len(),
        buckets: buckets.len(),
        classes: class_count,
        violations,
        gamma_caveat,
        oracle_disagreements,
    })
}

/// A pair on which the relations disagree with the step buckets.
#[derive(Debug, Clone, Serialize)]
pub struct Divergence {
    pub lhs: String,
    pub rhs: String,
    pub relation: EquivalenceKind,
    /// Whether the two terms share a step bucket.
    pub same_bucket: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoincidenceReport {
    pub system: System,
    pub size_bound: usize,
    pub config: String,
    pub terms: usize,
    pub buckets: usize,
    pub intra_pairs: usize,
    pub cross_pairs: usize,
    pub divergences: Vec<Divergence>,
}

impl CoincidenceReport {
    pub fn summary(&self) -> String {
        let mut s = format!(
            "coincidence {} size<={}: {} terms, {} buckets, {} intra-bucket pairs, {} cross-bucket pairs, {} divergences\n",
            self.system,
            self.size_bound,
            self.terms,
            self.buckets,
            self.intra_pairs,
            self.cross_pairs,
            self.divergences.len()
        );
        for d in self.divergences.iter().take(20) {
            let rel = if d.same_bucket { "not" } else { "unexpectedly" };
            let _ = writeln!(s, "  DIVERGE {} {rel} {} {}", d.lhs, d.relation.symbol(), d.rhs);
        }
        s
    }
}

/// Checks that pomset and hp bisimilarity coincide with the step buckets:
/// every pair inside a bucket is related, and `samples` seeded random pairs
/// across buckets (all of them if there are fewer) are unrelated by step,
/// pomset and hp bisimilarity.
pub fn check_coincidence(
    system: System,
    size_bound: usize,
    samples: usize,
    seed: u64,
    cfg: &SemanticsConfig,
    opts: &HarnessOptions,
) -> Result<CoincidenceReport> {
    let terms = terms_up_to(system, size_bound, opts)?;
    let prints: Vec<String> =
        terms.par_iter().map(|t| step_fingerprint(t, system, cfg, opts.budgets.states)).collect::<Result<_>>()?;
    let mut buckets: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, f) in prints.iter().enumerate() {
        buckets.entry(f).or_default().push(i);
    }
    let mut intra = Vec::new();
    for members in buckets.values() {
        for (k, &i) in members.iter().enumerate() {
            intra.extend(members[k + 1..].iter().map(|&j| (i, j)));
        }
    }
    let mut cross: Vec<(usize, usize)> = Vec::new();
    let total_cross = terms.len() * (terms.len() - 1) / 2 - intra.len();
    if total_cross <= samples {
        for i in 0..terms.len() {
            cross.extend((i + 1..terms.len()).filter(|&j| prints[i] != prints[j]).map(|j| (i, j)));
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let idx: Vec<usize> = (0..terms.len()).collect();
        let mut seen = BTreeSet::new();
        while seen.len() < samples {
            let (&i, &j) = (idx.choose(&mut rng).expect("terms"), idx.choose(&mut rng).expect("terms"));
            if prints[i] != prints[j] {
                seen.insert((i.min(j), i.max(j)));
            }
        }
        cross.extend(seen);
    }

    let kinds = [EquivalenceKind::Step, EquivalenceKind::Pomset, EquivalenceKind::Hp];
    let jobs: Vec<(usize, usize, bool)> =
        intra.iter().map(|&(i, j)| (i, j, true)).chain(cross.iter().map(|&(i, j)| (i, j, false))).collect();
    let found: Vec<Vec<Divergence>> = jobs
        .into_par_iter()
        .map(|(i, j, same)| {
            let mut out = Vec::new();
            // inside a bucket step equivalence is the fingerprint itself
            for &k in if same { &kinds[1..] } else { &kinds[..] } {
                if check(k, &terms[i], &terms[j], system, cfg, opts.budgets)?.equivalent != same {
                    out.push(Divergence {
                        lhs: terms[i].to_string(),
                        rhs: terms[j].to_string(),
                        relation: k,
                        same_bucket: same,
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(CoincidenceReport {
        system,
        size_bound,
        config: cfg.to_text(),
        terms: terms.len(),
        buckets: buckets.len(),
        intra_pairs: intra.len(),
        cross_pairs: cross.len(),
        divergences: found.into_iter().flatten().collect(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HhpWitness {
    pub schema: String,
    pub substitution: BTreeMap<String, String>,
    pub lhs: String,
    pub rhs: String,
    pub moves: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HhpWitnessReport {
    pub system: System,
    pub size_bound: usize,
    pub config: String,
    /// Non-skipped P1-P7 instances searched.
    pub instances: usize,
    /// Of those, how many are hp-equivalent.
    pub hp_equivalent: usize,
    pub witness: Option<HhpWitness>,
    /// P-schema instances with `lhs ~hp rhs` but not `~hhp`, per schema.
    pub per_schema: BTreeMap<String, usize>,
    /// Sanity row: A1-A5 instances that separate hp from hhp (expected 0).
    pub a_axiom_witnesses: usize,
    /// Instances whose games ran out of budget.
    pub undecided: Vec<Undecided>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Undecided {
    pub schema: String,
    pub substitution: BTreeMap<String, String>,
    pub lhs: String,
    pub rhs: String,
    pub reason: String,
}

impl HhpWitnessReport {
    pub fn summary(&self) -> String {
        let mut s = format!(
            "hhp-witness {} size<={}: {} instances searched, {} hp-equivalent, {} undecided, A-axiom witnesses {}\n",
            self.system,
            self.size_bound,
            self.instances,
            self.hp_equivalent,
            self.undecided.len(),
            self.a_axiom_witnesses
        );
        for u in self.undecided.iter().take(10) {
            let _ = writeln!(
                s,
                "  UNDECIDED {} [{}] {} vs {}: {}",
                u.schema,
                subst_text(&u.substitution),
                u.lhs,
                u.rhs,
                u.reason
            );
        }
        for (k, n) in &self.per_schema {
            let _ = writeln!(s, "  {k:<4} {n} witnesses");
        }
        match &self.witness {
            Some(w) => {
                let _ = writeln!(
                    s,
                    "  WITNESS {} [{}]: {} ~hp {} but not ~hhp: {}",
                    w.schema,
                    subst_text(&w.substitution),
                    w.lhs,
                    w.rhs,
                    w.moves.join("; ")
                );
            }
            None => s.push_str("  no witness within the bound\n"),
        }
        s
    }
}

/// Searches the PA1 schema instances for one that is hp- but not
/// hhp-sound. The reported witness is the first in schema/substitution
/// order. Instances whose games exceed the budgets are listed as undecided
/// rather than aborting the search.
pub fn find_hhp_witness(size_bound: usize, cfg: &SemanticsConfig, opts: &HarnessOptions) -> Result<HhpWitnessReport> {
    let system = System::Pa1;
    let schemas = axiom_schemas(system);
    let terms = terms_up_to(system, size_bound, opts)?;
    let jobs: Vec<(usize, Substitution)> = schemas
        .iter()
        .enumerate()
        .flat_map(|(i, s)| substitutions(s, &terms, cfg.alphabet()).into_iter().map(move |sub| (i, sub)))
        .collect();
    type Outcome = Option<std::result::Result<(bool, Option<Vec<String>>), Error>>;
    let results: Vec<(usize, Substitution, Outcome)> = jobs
        .into_par_iter()
        .map(|(i, sub)| {
            let Some((lhs, rhs)) = instantiate(&schemas[i], &sub, cfg)? else {
                return Ok((i, sub, None));
            };
            let verdict = (|| {
                let hp = check(EquivalenceKind::Hp, &lhs, &rhs, system, cfg, opts.budgets)?.equivalent;
                let hhp =
                    if hp { check(EquivalenceKind::Hhp, &lhs, &rhs, system, cfg, opts.budgets)?.witness } else { None };
                Ok((hp, hhp))
            })();
            match verdict {
                Err(e @ Error::Budget { .. }) => Ok((i, sub, Some(Err(e)))),
                Err(e) => Err(e),
                Ok(v) => Ok((i, sub, Some(Ok(v)))),
            }
        })
        .collect::<Result<_>>()?;
    let mut report = HhpWitnessReport {
        system,
        size_bound,
        config: cfg.to_text(),
        instances: 0,
        hp_equivalent: 0,
        witness: None,
        per_schema: BTreeMap::new(),
        a_axiom_witnesses: 0,
        undecided: Vec::new(),
    };
    for (i, sub, outcome) in results {
        let Some(outcome) = outcome else { continue };
        let is_p = schemas[i].name.starts_with('P');
        if is_p {
            report.instances += 1;
        }
        let (hp, hhp_moves) = match outcome {
            Ok(v) => v,
            Err(e) => {
                let (lhs, rhs) = instantiate(&schemas[i], &sub, cfg)?.expect("instance");
                report.undecided.push(Undecided {
                    schema: schemas[i].name.to_string(),
                    substitution: subst_map(&sub),
                    lhs: lhs.to_string(),
                    rhs: rhs.to_string(),
                    reason: e.to_string(),
                });
                continue;
            }
        };
        if is_p {
            report.hp_equivalent += usize::from(hp);
        }
        if let Some(moves) = hhp_moves {
            if !is_p {
                report.a_axiom_witnesses += 1;
                continue;
            }
            *report.per_schema.entry(schemas[i].name.to_string()).or_default() += 1;
            if report.witness.is_none() {
                let (lhs, rhs) = instantiate(&schemas[i], &sub, cfg)?.expect("instance");
                report.witness = Some(HhpWitness {
                    schema: schemas[i].name.to_string(),
                    substitution: subst_map(&sub),
                    lhs: lhs.to_string(),
                    rhs: rhs.to_string(),
                    moves,
                });
            }
        }
    }
    Ok(report)
}

/// Instances of one schema, for callers that want to drive the checks
/// themselves.
pub fn schema_instances(
    schema: &AxiomSchema,
    size_bound: usize,
    cfg: &SemanticsConfig,
    opts: &HarnessOptions,
) -> Result<Vec<(Substitution, Term, Term)>> {
    let terms = terms_up_to(schema.system, size_bound, opts)?;
    let mut out = Vec::new();
    for sub in substitutions(schema, &terms, cfg.alphabet()) {
        if let Some((l, r)) = instantiate(schema, &sub, cfg)? {
            out.push((sub, l, r));
        }
    }
    Ok(out)
}
