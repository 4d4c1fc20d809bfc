//! Axiom-oriented normalisation.
//!
//! Terms are rewritten over steps rather than single events: once a
//! parallel combination of events has been folded, the resulting multiset
//! is one step atom, and the event schemas (P3-P5, L2-L4, C7-C9) match
//! step atoms. `0` is the internal empty process that side-condition
//! failures reduce to.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use serde::Serialize;

use crate::config::{Policy, SemanticsConfig};
use crate::error::{Error, Result};
use crate::sos::{join_steps, Join, Step};
use crate::syntax::{Op, System, Term};

use super::nf::{NormalForm, Summand, Tail};

pub const DEFAULT_REWRITE_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) enum RTerm {
    Zero,
    Step(Step),
    Op(Op, Box<RTerm>, Box<RTerm>),
}

impl RTerm {
    fn from_term(t: &Term) -> RTerm {
        match t {
            Term::Atom(l) => RTerm::Step(Step::single(l.clone())),
            Term::Op(op, l, r) => RTerm::op(*op, RTerm::from_term(l), RTerm::from_term(r)),
        }
    }

    fn op(op: Op, l: RTerm, r: RTerm) -> RTerm {
        RTerm::Op(op, Box::new(l), Box::new(r))
    }

    fn seq(l: RTerm, r: RTerm) -> RTerm {
        RTerm::op(Op::Seq, l, r)
    }

    fn sum(steps: BTreeSet<Step>) -> RTerm {
        steps.into_iter().map(RTerm::Step).reduce(|acc, s| RTerm::op(Op::Plus, acc, s)).unwrap_or(RTerm::Zero)
    }

    /// `(s, None)` for a step atom, `(s, Some(x))` for `s . x`.
    fn head(&self) -> Option<(&Step, Option<&RTerm>)> {
        match self {
            RTerm::Step(s) => Some((s, None)),
            RTerm::Op(Op::Seq, l, r) => match &**l {
                RTerm::Step(s) => Some((s, Some(r))),
                _ => None,
            },
            _ => None,
        }
    }

    fn at_mut(&mut self, path: &[u8]) -> Option<&mut RTerm> {
        match path.split_first() {
            None => Some(self),
            Some((&side, rest)) => match self {
                RTerm::Op(_, l, r) => if side == 1 { l } else { r }.at_mut(rest),
                _ => None,
            },
        }
    }
}

impl fmt::Display for RTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RTerm::Zero => f.write_str("0"),
            RTerm::Step(s) if s.len() == 1 => write!(f, "{}", s.labels()[0]),
            RTerm::Step(s) => {
                let labels: Vec<&str> = s.labels().iter().map(|l| l.as_str()).collect();
                write!(f, "{{{}}}", labels.join(","))
            }
            RTerm::Op(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
        }
    }
}

/// Subterm position: `1` is the left operand, `2` the right.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Position(pub Vec<u8>);

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        let parts: Vec<String> = self.0.iter().map(u8::to_string).collect();
        f.write_str(&parts.join("."))
    }
}

impl Serialize for Position {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceEntry {
    pub rule: &'static str,
    pub position: Position,
}

#[derive(Debug, Clone)]
pub struct RewriteReport {
    pub input: Term,
    pub nf: NormalForm,
    pub rule_trace: Vec<TraceEntry>,
    pub system: System,
    pub policy: Policy,
    pub config: String,
}

impl RewriteReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "input": self.input.to_string(),
            "nf": self.nf.to_json(),
            "nf_text": self.nf.to_string(),
            "rule_trace": self.rule_trace,
            "system": self.system,
            "policy": self.policy,
            "config": self.config,
        })
    }
}

fn merge_heads(
    join: Join,
    l: &RTerm,
    r: &RTerm,
    cfg: &SemanticsConfig,
    names: [&'static str; 4],
    fail: &'static str,
) -> Option<(&'static str, RTerm)> {
    let ((s1, x), (s2, y)) = (l.head()?, r.head()?);
    let steps = join_steps(s1, s2, join, cfg);
    if steps.is_empty() {
        return Some((fail, RTerm::Zero));
    }
    let op = match join {
        Join::LeftMerge => Op::LeftMerge,
        Join::CommMerge => Op::CommMerge,
        Join::Par => Op::Par,
    };
    let first = || RTerm::op(op, RTerm::Step(s1.clone()), RTerm::Step(s2.clone()));
    Some(match (x, y) {
        (None, None) => (names[0], RTerm::sum(steps)),
        (None, Some(y)) => (names[1], RTerm::seq(first(), y.clone())),
        (Some(x), None) => (names[2], RTerm::seq(first(), x.clone())),
        (Some(x), Some(y)) => (names[3], RTerm::seq(first(), RTerm::op(Op::Par, x.clone(), y.clone()))),
    })
}

/// The rule that applies at the root of `t`, with its result. At most one
/// rule is chosen, by a fixed priority, so a trace entry determines the
/// rewrite it stands for.
pub(crate) fn rule_at(t: &RTerm, system: System, cfg: &SemanticsConfig) -> Option<(&'static str, RTerm)> {
    let RTerm::Op(op, l, r) = t else { return None };
    let (l, r) = (&**l, &**r);
    let plus = |x: &RTerm| matches!(x, RTerm::Op(Op::Plus, ..));
    let split = |x: &RTerm| match x {
        RTerm::Op(Op::Plus, a, b) => ((**a).clone(), (**b).clone()),
        _ => unreachable!(),
    };
    match op {
        Op::Plus => match (l, r) {
            (RTerm::Zero, _) => Some(("0-sum", r.clone())),
            (_, RTerm::Zero) => Some(("0-sum", l.clone())),
            _ => None,
        },
        Op::Seq => match l {
            RTerm::Zero => Some(("0-seq", RTerm::Zero)),
            RTerm::Op(Op::Plus, x, y) => Some((
                "A4",
                RTerm::op(Op::Plus, RTerm::seq((**x).clone(), r.clone()), RTerm::seq((**y).clone(), r.clone())),
            )),
            RTerm::Op(Op::Seq, x, y) => Some(("A5", RTerm::seq((**x).clone(), RTerm::seq((**y).clone(), r.clone())))),
            _ => None,
        },
        _ if *l == RTerm::Zero || *r == RTerm::Zero => Some(("0-par", RTerm::Zero)),
        Op::Par if system == System::Pa2 => {
            let m = |a: &RTerm, b: &RTerm, o| RTerm::op(o, a.clone(), b.clone());
            Some((
                "P1",
                RTerm::op(
                    Op::Plus,
                    RTerm::op(Op::Plus, m(l, r, Op::LeftMerge), m(r, l, Op::LeftMerge)),
                    m(l, r, Op::CommMerge),
                ),
            ))
        }
        Op::LeftMerge | Op::CommMerge | Op::Par => {
            let (dl, dr, names, fail, join) = match op {
                Op::Par => ("P6", "P7", ["step-fold", "P3", "P4", "P5"], "step-fold", Join::Par),
                Op::LeftMerge => ("L5", "L5'", ["step-fold", "L2", "L3", "L4"], "L0", Join::LeftMerge),
                _ => ("C10", "C11", ["C6", "C7", "C8", "C9"], "C0", Join::CommMerge),
            };
            if plus(l) {
                let (x, y) = split(l);
                return Some((dl, RTerm::op(Op::Plus, RTerm::op(*op, x, r.clone()), RTerm::op(*op, y, r.clone()))));
            }
            if plus(r) {
                let (y, z) = split(r);
                return Some((dr, RTerm::op(Op::Plus, RTerm::op(*op, l.clone(), y), RTerm::op(*op, l.clone(), z))));
            }
            merge_heads(join, l, r, cfg, names, fail)
        }
    }
}

struct Engine<'a> {
    system: System,
    cfg: &'a SemanticsConfig,
    steps: usize,
    budget: usize,
    trace: Option<Vec<TraceEntry>>,
}

impl Engine<'_> {
    /// Innermost-first: operands are normalised before the root is tried,
    /// and every rewrite result is normalised again in place.
    fn norm(&mut self, t: RTerm, path: &mut Vec<u8>) -> Result<RTerm> {
        let t = match t {
            RTerm::Op(op, l, r) => {
                path.push(1);
                let l = self.norm(*l, path);
                path.pop();
                path.push(2);
                let r = self.norm(*r, path);
                path.pop();
                RTerm::op(op, l?, r?)
            }
            leaf => return Ok(leaf),
        };
        match rule_at(&t, self.system, self.cfg) {
            None => Ok(t),
            Some((rule, next)) => {
                self.steps += 1;
                if self.steps > self.budget {
                    return Err(Error::budget("rewrite step", self.budget));
                }
                if let Some(trace) = &mut self.trace {
                    trace.push(TraceEntry { rule, position: Position(path.clone()) });
                }
                self.norm(next, path)
            }
        }
    }
}

fn fold(t: &RTerm) -> Result<NormalForm> {
    fn go(t: &RTerm, out: &mut BTreeSet<Summand>) -> Result<()> {
        match t {
            RTerm::Op(Op::Plus, l, r) => {
                go(l, out)?;
                go(r, out)
            }
            RTerm::Step(s) => {
                out.insert(Summand { step: s.clone(), tail: Tail::Terminal });
                Ok(())
            }
            RTerm::Op(Op::Seq, l, r) => match &**l {
                RTerm::Step(s) => {
                    out.insert(Summand { step: s.clone(), tail: Tail::Then(Box::new(fold(r)?)) });
                    Ok(())
                }
                _ => Err(Error::Invalid(format!("not a basic term: {t}"))),
            },
            _ => Err(Error::Invalid(format!("not a basic term: {t}"))),
        }
    }
    if *t == RTerm::Zero {
        return Ok(NormalForm::Nil);
    }
    let mut set = BTreeSet::new();
    go(t, &mut set)?;
    Ok(NormalForm::from_summands(set))
}

fn check_input(t: &Term, system: System, cfg: &SemanticsConfig) -> Result<()> {
    if t.system() > system {
        return Err(Error::OperatorNotInSystem { op: "|_ or |", system: system.name() });
    }
    cfg.check_term(t)
}

/// Normal form with the full rule trace.
pub fn normalize(t: &Term, system: System, cfg: &SemanticsConfig) -> Result<RewriteReport> {
    normalize_bounded(t, system, cfg, DEFAULT_REWRITE_BUDGET)
}

/// [`normalize`] with an explicit cap on rewrite steps.
pub fn normalize_bounded(t: &Term, system: System, cfg: &SemanticsConfig, budget: usize) -> Result<RewriteReport> {
    check_input(t, system, cfg)?;
    let mut e = Engine { system, cfg, steps: 0, budget, trace: Some(Vec::new()) };
    let nf = fold(&e.norm(RTerm::from_term(t), &mut Vec::new())?)?;
    Ok(RewriteReport {
        input: t.clone(),
        nf,
        rule_trace: e.trace.unwrap_or_default(),
        system,
        policy: cfg.policy,
        config: cfg.to_text(),
    })
}

/// Normal form only; skips the trace.
pub fn normal_form(t: &Term, system: System, cfg: &SemanticsConfig) -> Result<NormalForm> {
    check_input(t, system, cfg)?;
    let mut e = Engine { system, cfg, steps: 0, budget: DEFAULT_REWRITE_BUDGET, trace: None };
    fold(&e.norm(RTerm::from_term(t), &mut Vec::new())?)
}

/// Replays a trace from the report's input and folds the result.
pub fn replay(report: &RewriteReport, cfg: &SemanticsConfig) -> Result<NormalForm> {
    let mut t = RTerm::from_term(&report.input);
    for (i, entry) in report.rule_trace.iter().enumerate() {
        let bad = |msg: &str| Error::Invalid(format!("trace entry {i} ({} at {}): {msg}", entry.rule, entry.position));
        let sub = t.at_mut(&entry.position.0).ok_or_else(|| bad("no such position"))?;
        match rule_at(sub, report.system, cfg) {
            Some((rule, next)) if rule == entry.rule => *sub = next,
            Some((rule, _)) => return Err(bad(&format!("{rule} applies there instead"))),
            None => return Err(bad("no rule applies there")),
        }
    }
    fold(&t)
}

/// Rewrites by picking a uniformly random redex anywhere in the term at
/// every step, instead of innermost-first.
pub fn normalize_shuffled<R: Rng + ?Sized>(
    t: &Term,
    system: System,
    cfg: &SemanticsConfig,
    rng: &mut R,
) -> Result<NormalForm> {
    fn redexes(t: &RTerm, system: System, cfg: &SemanticsConfig, path: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if let RTerm::Op(_, l, r) = t {
            if rule_at(t, system, cfg).is_some() {
                out.push(path.clone());
            }
            path.push(1);
            redexes(l, system, cfg, path, out);
            path.pop();
            path.push(2);
            redexes(r, system, cfg, path, out);
            path.pop();
        }
    }
    check_input(t, system, cfg)?;
    let mut t = RTerm::from_term(t);
    for _ in 0..DEFAULT_REWRITE_BUDGET {
        let mut found = Vec::new();
        redexes(&t, system, cfg, &mut Vec::new(), &mut found);
        if found.is_empty() {
            return fold(&t);
        }
        let path = &found[rng.gen_range(0..found.len())];
        let sub = t.at_mut(path).expect("redex position");
        let (_, next) = rule_at(sub, system, cfg).expect("redex");
        *sub = next;
    }
    Err(Error::budget("rewrite step", DEFAULT_REWRITE_BUDGET))
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::enumerate::{enum_terms, EnumSpec, Sampler};
    use crate::equiv::step_fingerprint;
    use crate::parse::parse_term_raw;
    use crate::sos::DEFAULT_STATE_BUDGET;

    fn t(s: &str) -> Term {
        parse_term_raw(s, System::Pa2).unwrap()
    }

    fn nf(s: &str, system: System, cfg: &SemanticsConfig) -> String {
        normal_form(&t(s), system, cfg).unwrap().to_string()
    }

    #[test]
    fn examples() {
        let cfg0 = SemanticsConfig::cfg0();
        let empty = SemanticsConfig::cfg_empty();
        assert_eq!(nf("a + a", System::Pa1, &empty), "{a}");
        assert_eq!(nf("(a + b) . d", System::Pa1, &empty), nf("a.d + b.d", System::Pa1, &empty));
        assert_eq!(nf("b |_ a", System::Pa2, &cfg0), "0");
        assert_eq!(nf("a || b", System::Pa2, &cfg0), "{a,b} + {c}");
        assert_eq!(nf("a || b", System::Pa2, &cfg0.clone().with_policy(Policy::Forced)), "{c}");
        assert_eq!(nf("a || b", System::Pa1, &cfg0.clone().with_policy(Policy::Forced)), "{c}");
        assert_eq!(nf("a . (b |_ a)", System::Pa2, &cfg0), "{a} . (0)");
        assert_eq!(nf("(a || b) . d", System::Pa1, &empty), "{a,b} . {d}");
    }

    #[test]
    fn trace_names_the_rules() {
        let cfg0 = SemanticsConfig::cfg0();
        let r = normalize(&t("a || b"), System::Pa2, &cfg0).unwrap();
        let rules: Vec<&str> = r.rule_trace.iter().map(|e| e.rule).collect();
        assert_eq!(rules, ["P1", "step-fold", "L0", "0-sum", "C6"]);
        assert_eq!(r.rule_trace[1].position.to_string(), "1.1");
        assert_eq!(replay(&r, &cfg0).unwrap(), r.nf);
    }

    #[test]
    fn replay_rejects_a_tampered_trace() {
        let cfg0 = SemanticsConfig::cfg0();
        let mut r = normalize(&t("(a + b) . d"), System::Pa1, &cfg0).unwrap();
        r.rule_trace[0].rule = "A5";
        assert!(replay(&r, &cfg0).is_err());
    }

    #[test]
    fn normal_forms_agree_with_the_semantics() {
        let configs = [
            SemanticsConfig::cfg_empty(),
            SemanticsConfig::cfg0(),
            SemanticsConfig::cfg0().with_policy(Policy::Forced),
        ];
        for system in [System::Pa1, System::Pa2] {
            for cfg in &configs {
                for term in enum_terms(&EnumSpec::new(system, &["a", "b"], 5)).unwrap() {
                    let r = normalize(&term, system, cfg).unwrap();
                    let fp = step_fingerprint(&term, system, cfg, DEFAULT_STATE_BUDGET).unwrap();
                    assert_eq!(r.nf.fingerprint(), fp, "{term} under {system} {}", cfg.policy);
                    assert_eq!(replay(&r, cfg).unwrap(), r.nf);
                }
            }
        }
    }

    #[test]
    fn random_orders_reach_the_same_normal_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cfg = SemanticsConfig::cfg0();
        for system in [System::Pa1, System::Pa2] {
            let sampler = Sampler::new(&EnumSpec::new(system, &["a", "b", "c"], 9)).unwrap();
            for i in 0..60 {
                let term = sampler.sample(1 + 2 * (i % 5), &mut rng);
                let expected = normal_form(&term, system, &cfg).unwrap();
                for _ in 0..5 {
                    assert_eq!(normalize_shuffled(&term, system, &cfg, &mut rng).unwrap(), expected, "{term}");
                }
            }
        }
    }
}
