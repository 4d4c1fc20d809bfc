//! Structural operational semantics of PA1 and PA2.
//!
//! Processes are terms whose atoms carry a position, so every event fired in
//! a run can be traced back to the atom occurrences that produced it. Parallel
//! composition is lockstep: while both operands are live, every transition
//! fires a step of each operand, and the two steps are combined according to
//! the communication function and the configured [`Policy`].

mod lts;
mod pomset;
mod program;
mod run;

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::config::{Policy, SemanticsConfig};
use crate::syntax::{EventLabel, Op, Term};

pub use lts::{build_lts, Lts, DEFAULT_STATE_BUDGET};
pub use pomset::{canonical_pomset, pomset_transitions, Pomset, DEFAULT_POMSET_BUDGET};
pub(crate) use program::atoms_mask;
pub use program::{AtomRelation, Program, MAX_TRACKED_ATOMS};
pub use run::{init_state, steps, Occurrence, RunState, Transition};

/// A nonempty multiset of labels fired in one transition, kept sorted.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Step(Vec<EventLabel>);

impl Step {
    pub fn new(mut labels: Vec<EventLabel>) -> Self {
        assert!(!labels.is_empty(), "a step is never empty");
        labels.sort();
        Step(labels)
    }

    pub fn single(l: EventLabel) -> Self {
        Step(vec![l])
    }

    pub fn labels(&self) -> &[EventLabel] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Multiset union.
    pub fn union(&self, other: &Step) -> Step {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        Step::new(v)
    }

    /// Smallest label under the configured event order.
    pub fn min_label<'a>(&'a self, cfg: &SemanticsConfig) -> &'a EventLabel {
        self.0.iter().min_by_key(|l| cfg.rank_of(l)).expect("nonempty")
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.0.iter().map(|l| l.as_str()).collect();
        f.write_str(&names.join("+"))
    }
}

impl fmt::Debug for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.0.iter().map(|l| l.as_str()).collect::<Vec<_>>().join(","))
    }
}

/// How two operand steps are joined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Join {
    /// `x || y`: any admissible matching under the policy.
    Par,
    /// `x |_ y`: no communication, and the left step must start no later
    /// than the right one in the event order.
    LeftMerge,
    /// `x | y`: at least one communicating pair.
    CommMerge,
}

impl Join {
    pub fn of(op: Op) -> Option<Join> {
        match op {
            Op::Par => Some(Join::Par),
            Op::LeftMerge => Some(Join::LeftMerge),
            Op::CommMerge => Some(Join::CommMerge),
            _ => None,
        }
    }
}

/// Sets of disjoint cross pairs `(i, j)` with `gamma(xs[i], ys[j])` defined,
/// restricted to what `join` admits under the config's policy.
pub fn matchings(xs: &[EventLabel], ys: &[EventLabel], join: Join, cfg: &SemanticsConfig) -> Vec<Vec<(usize, usize)>> {
    if join == Join::LeftMerge {
        let min = |v: &[EventLabel]| v.iter().map(|l| cfg.rank_of(l)).min().unwrap_or(usize::MAX);
        if min(xs) > min(ys) {
            return Vec::new();
        }
        if cfg.policy == Policy::Forced && any_communicable(xs, ys, cfg) {
            return Vec::new();
        }
        return vec![Vec::new()];
    }

    let mut all = Vec::new();
    let mut used = vec![false; ys.len()];
    let mut cur = Vec::new();
    enumerate_matchings(xs, ys, cfg, 0, &mut used, &mut cur, &mut all);

    let maximal = |m: &Vec<(usize, usize)>| {
        let xm: Vec<bool> = (0..xs.len()).map(|i| m.iter().any(|p| p.0 == i)).collect();
        let ym: Vec<bool> = (0..ys.len()).map(|j| m.iter().any(|p| p.1 == j)).collect();
        !(0..xs.len()).any(|i| !xm[i] && (0..ys.len()).any(|j| !ym[j] && cfg.gamma(&xs[i], &ys[j]).is_some()))
    };
    all.retain(|m| (join == Join::Par || !m.is_empty()) && (cfg.policy == Policy::Optional || maximal(m)));
    all
}

fn any_communicable(xs: &[EventLabel], ys: &[EventLabel], cfg: &SemanticsConfig) -> bool {
    xs.iter().any(|x| ys.iter().any(|y| cfg.gamma(x, y).is_some()))
}

fn enumerate_matchings(
    xs: &[EventLabel],
    ys: &[EventLabel],
    cfg: &SemanticsConfig,
    i: usize,
    used: &mut [bool],
    cur: &mut Vec<(usize, usize)>,
    out: &mut Vec<Vec<(usize, usize)>>,
) {
    if i == xs.len() {
        out.push(cur.clone());
        return;
    }
    enumerate_matchings(xs, ys, cfg, i + 1, used, cur, out);
    for j in 0..ys.len() {
        if !used[j] && cfg.gamma(&xs[i], &ys[j]).is_some() {
            used[j] = true;
            cur.push((i, j));
            enumerate_matchings(xs, ys, cfg, i + 1, used, cur, out);
            cur.pop();
            used[j] = false;
        }
    }
}

/// Labels obtained by joining `xs` and `ys` along `matching`: each matched
/// pair becomes its communication result, the rest are kept.
fn joined_labels(
    xs: &[EventLabel],
    ys: &[EventLabel],
    matching: &[(usize, usize)],
    cfg: &SemanticsConfig,
) -> Vec<EventLabel> {
    let mut out = Vec::with_capacity(xs.len() + ys.len());
    for (i, x) in xs.iter().enumerate() {
        match matching.iter().find(|p| p.0 == i) {
            Some(&(_, j)) => out.push(cfg.gamma(x, &ys[j]).expect("matched pair communicates").clone()),
            None => out.push(x.clone()),
        }
    }
    for (j, y) in ys.iter().enumerate() {
        if !matching.iter().any(|p| p.1 == j) {
            out.push(y.clone());
        }
    }
    out
}

/// Possible labels of a joint parallel step.
pub fn compose_steps(x: &Step, y: &Step, cfg: &SemanticsConfig) -> BTreeSet<Step> {
    join_steps(x, y, Join::Par, cfg)
}

pub fn join_steps(x: &Step, y: &Step, join: Join, cfg: &SemanticsConfig) -> BTreeSet<Step> {
    matchings(x.labels(), y.labels(), join, cfg)
        .iter()
        .map(|m| Step::new(joined_labels(x.labels(), y.labels(), m, cfg)))
        .collect()
}

/// A term whose atoms carry positions.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Proc {
    Atom(EventLabel, u32),
    Op(Op, Box<Proc>, Box<Proc>),
}

impl Proc {
    /// Numbers atoms left to right from zero.
    pub fn from_term(t: &Term) -> Proc {
        fn go(t: &Term, next: &mut u32) -> Proc {
            match t {
                Term::Atom(l) => {
                    *next += 1;
                    Proc::Atom(l.clone(), *next - 1)
                }
                Term::Op(op, l, r) => {
                    let l = go(l, next);
                    let r = go(r, next);
                    Proc::Op(*op, Box::new(l), Box::new(r))
                }
            }
        }
        go(t, &mut 0)
    }

    pub fn erase(&self) -> Term {
        match self {
            Proc::Atom(l, _) => Term::Atom(l.clone()),
            Proc::Op(op, l, r) => Term::op(*op, l.erase(), r.erase()),
        }
    }

    fn op(op: Op, l: Proc, r: Proc) -> Proc {
        Proc::Op(op, Box::new(l), Box::new(r))
    }
}

/// An event fired by a transition: its label and the atoms that produced it
/// (two or more when it is a communication result).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Event {
    pub label: EventLabel,
    pub atoms: Vec<u32>,
}

/// One derivable transition of a process; `next == None` is termination.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Move {
    pub events: Vec<Event>,
    pub next: Option<Proc>,
}

impl Move {
    pub fn step(&self) -> Step {
        Step::new(self.events.iter().map(|e| e.label.clone()).collect())
    }
}

fn continue_parallel(l: Option<Proc>, r: Option<Proc>) -> Option<Proc> {
    match (l, r) {
        (None, None) => None,
        (Some(p), None) | (None, Some(p)) => Some(p),
        (Some(l), Some(r)) => Some(Proc::op(Op::Par, l, r)),
    }
}

/// All transitions derivable for `p` by the rule tables.
pub fn moves(p: &Proc, cfg: &SemanticsConfig) -> Vec<Move> {
    match p {
        Proc::Atom(l, pos) => vec![Move { events: vec![Event { label: l.clone(), atoms: vec![*pos] }], next: None }],
        Proc::Op(Op::Plus, l, r) => {
            let mut out = moves(l, cfg);
            out.extend(moves(r, cfg));
            out
        }
        Proc::Op(Op::Seq, l, r) => moves(l, cfg)
            .into_iter()
            .map(|m| Move {
                events: m.events,
                next: Some(match m.next {
                    None => (**r).clone(),
                    Some(l2) => Proc::op(Op::Seq, l2, (**r).clone()),
                }),
            })
            .collect(),
        Proc::Op(op, l, r) => {
            let join = Join::of(*op).expect("parallel operator");
            let (ml, mr) = (moves(l, cfg), moves(r, cfg));
            let mut out = Vec::new();
            for a in &ml {
                let xs: Vec<EventLabel> = a.events.iter().map(|e| e.label.clone()).collect();
                for b in &mr {
                    let ys: Vec<EventLabel> = b.events.iter().map(|e| e.label.clone()).collect();
                    for m in matchings(&xs, &ys, join, cfg) {
                        out.push(Move {
                            events: join_events(&a.events, &b.events, &m, cfg),
                            next: continue_parallel(a.next.clone(), b.next.clone()),
                        });
                    }
                }
            }
            out
        }
    }
}

fn join_events(xs: &[Event], ys: &[Event], matching: &[(usize, usize)], cfg: &SemanticsConfig) -> Vec<Event> {
    let mut out = Vec::with_capacity(xs.len() + ys.len());
    for (i, x) in xs.iter().enumerate() {
        match matching.iter().find(|p| p.0 == i) {
            Some(&(_, j)) => {
                let y = &ys[j];
                let mut atoms = x.atoms.clone();
                atoms.extend(&y.atoms);
                atoms.sort_unstable();
                let label = cfg.gamma(&x.label, &y.label).expect("matched pair communicates").clone();
                out.push(Event { label, atoms });
            }
            None => out.push(x.clone()),
        }
    }
    for (j, y) in ys.iter().enumerate() {
        if !matching.iter().any(|p| p.1 == j) {
            out.push(y.clone());
        }
    }
    out
}

/// Step-labelled transitions of a plain term, residuals with positions erased
/// and duplicates removed.
pub fn term_transitions(t: &Term, cfg: &SemanticsConfig) -> Vec<(Step, Option<Term>)> {
    let set: BTreeSet<(Step, Option<Term>)> =
        moves(&Proc::from_term(t), cfg).into_iter().map(|m| (m.step(), m.next.map(|p| p.erase()))).collect();
    set.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_term_raw;
    use crate::syntax::System;

    fn step(names: &[&str]) -> Step {
        Step::new(names.iter().map(|n| EventLabel::new(n)).collect())
    }

    fn steps_of(set: &BTreeSet<Step>) -> Vec<Vec<String>> {
        set.iter().map(|s| s.labels().iter().map(|l| l.to_string()).collect()).collect()
    }

    /// Independent oracle: try every subset of cross pairs, keep the ones that
    /// form a matching of communicating pairs, then filter by policy.
    fn brute_force_compose(x: &Step, y: &Step, cfg: &SemanticsConfig) -> BTreeSet<Step> {
        let pairs: Vec<(usize, usize)> = (0..x.len()).flat_map(|i| (0..y.len()).map(move |j| (i, j))).collect();
        let mut valid: Vec<Vec<(usize, usize)>> = Vec::new();
        for mask in 0u32..(1 << pairs.len()) {
            let chosen: Vec<(usize, usize)> =
                pairs.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, p)| *p).collect();
            let disjoint =
                chosen.iter().enumerate().all(|(a, p)| chosen.iter().skip(a + 1).all(|q| q.0 != p.0 && q.1 != p.1));
            let comm = chosen.iter().all(|&(i, j)| cfg.gamma(&x.labels()[i], &y.labels()[j]).is_some());
            if disjoint && comm {
                valid.push(chosen);
            }
        }
        let extends = |small: &Vec<(usize, usize)>| {
            valid.iter().any(|big| big.len() > small.len() && small.iter().all(|p| big.contains(p)))
        };
        valid
            .iter()
            .filter(|m| cfg.policy == Policy::Optional || !extends(m))
            .map(|m| {
                let mut labels = Vec::new();
                for (i, l) in x.labels().iter().enumerate() {
                    match m.iter().find(|p| p.0 == i) {
                        Some(&(_, j)) => labels.push(cfg.gamma(l, &y.labels()[j]).unwrap().clone()),
                        None => labels.push(l.clone()),
                    }
                }
                for (j, l) in y.labels().iter().enumerate() {
                    if !m.iter().any(|p| p.1 == j) {
                        labels.push(l.clone());
                    }
                }
                Step::new(labels)
            })
            .collect()
    }

    #[test]
    fn compose_examples() {
        let cfg0 = SemanticsConfig::cfg0();
        let forced = SemanticsConfig::cfg0().with_policy(Policy::Forced);
        assert_eq!(steps_of(&compose_steps(&step(&["a"]), &step(&["d"]), &cfg0)), vec![vec!["a", "d"]]);
        assert_eq!(steps_of(&compose_steps(&step(&["a"]), &step(&["b"]), &forced)), vec![vec!["c"]]);
        assert_eq!(steps_of(&compose_steps(&step(&["a"]), &step(&["b"]), &cfg0)), vec![vec!["a", "b"], vec!["c"]]);
        assert_eq!(steps_of(&compose_steps(&step(&["a"]), &step(&["b", "d"]), &forced)), vec![vec!["c", "d"]]);
    }

    #[test]
    fn compose_matches_brute_force() {
        let cfgs = [
            SemanticsConfig::cfg0(),
            SemanticsConfig::cfg0().with_policy(Policy::Forced),
            SemanticsConfig::load("alphabet=a,b,c,d; gamma a b = c; gamma a a = d; gamma c d = a").unwrap(),
            SemanticsConfig::load("alphabet=a,b,c,d; gamma a b = c; gamma a a = d; gamma c d = a; policy=forced")
                .unwrap(),
        ];
        let names = ["a", "b", "c", "d"];
        let mut small: Vec<Step> = Vec::new();
        for i in 0..4 {
            small.push(step(&[names[i]]));
            for j in i..4 {
                small.push(step(&[names[i], names[j]]));
            }
        }
        for cfg in &cfgs {
            for x in &small {
                for y in &small {
                    assert_eq!(compose_steps(x, y, cfg), brute_force_compose(x, y, cfg), "{x:?} {y:?}");
                }
            }
        }
    }

    #[test]
    fn left_merge_and_comm_merge_cover_parallel() {
        // x || y has exactly the steps of x |_ y, y |_ x and x | y.
        let cfgs = [SemanticsConfig::cfg0(), SemanticsConfig::cfg0().with_policy(Policy::Forced)];
        let xs = [step(&["a"]), step(&["b"]), step(&["a", "d"]), step(&["b", "b"]), step(&["c"])];
        for cfg in &cfgs {
            for x in &xs {
                for y in &xs {
                    let mut union = join_steps(x, y, Join::LeftMerge, cfg);
                    union.extend(join_steps(y, x, Join::LeftMerge, cfg));
                    union.extend(join_steps(x, y, Join::CommMerge, cfg));
                    assert_eq!(union, compose_steps(x, y, cfg), "{x:?} {y:?}");
                }
            }
        }
    }

    #[test]
    fn lockstep_has_no_lone_side_step() {
        let cfg = SemanticsConfig::cfg_empty();
        let t = parse_term_raw("(a.b) || d", System::Pa1).unwrap();
        let tr = term_transitions(&t, &cfg);
        assert_eq!(tr, vec![(step(&["a", "d"]), Some(Term::atom("b")))]);
    }

    #[test]
    fn left_merge_side_condition() {
        let cfg = SemanticsConfig::cfg0();
        let ba = parse_term_raw("b |_ a", System::Pa2).unwrap();
        assert!(term_transitions(&ba, &cfg).is_empty());
        let ab = parse_term_raw("a |_ b", System::Pa2).unwrap();
        assert_eq!(term_transitions(&ab, &cfg), vec![(step(&["a", "b"]), None)]);
        let comm = parse_term_raw("a | b", System::Pa2).unwrap();
        assert!(term_transitions(&comm, &SemanticsConfig::cfg_empty()).is_empty());
        assert_eq!(term_transitions(&comm, &cfg), vec![(step(&["c"]), None)]);
    }

    #[test]
    fn residuals_of_merges_are_parallel() {
        let cfg = SemanticsConfig::cfg0();
        let t = parse_term_raw("(a.d) |_ (b.d)", System::Pa2).unwrap();
        let tr = term_transitions(&t, &cfg);
        assert_eq!(tr, vec![(step(&["a", "b"]), Some(Term::par(Term::atom("d"), Term::atom("d"))))]);
        let t = parse_term_raw("(a.d) | (b.d)", System::Pa2).unwrap();
        let tr = term_transitions(&t, &cfg);
        assert_eq!(tr, vec![(step(&["c"]), Some(Term::par(Term::atom("d"), Term::atom("d"))))]);
    }
}
