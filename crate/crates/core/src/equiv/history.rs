//! History-preserving games.
//!
//! A position is a posetal triple: the occurrences executed on each side,
//! paired up, together with the causal order they share. Each side's
//! residual is recomputed from the set of atoms its occurrences used, so a
//! position reached by undoing occurrences needs no stored run. The greatest
//! fixpoint is computed on the finite game graph by propagating losses.
//!
//! Undoing one occurrence of a joint step leaves a configuration no run
//! reaches. Under [`Backtrack::Runs`] such a configuration has no moves;
//! under [`Backtrack::Residual`] it moves like the residual of its atoms.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::sync::Arc;

use crate::config::{Backtrack, SemanticsConfig};
use crate::error::{Error, Result};
use crate::sos::{moves, Pomset, Program, Step};
use crate::syntax::{EventLabel, Term};

use super::Budgets;

/// Executed occurrences on both sides, pair `i` being `(left[i], right[i])`.
/// Occurrences are identified by the atoms that produced them; pairs are
/// sorted by their left atoms so equal configurations compare equal.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct PosetalTriple {
    labels: Vec<EventLabel>,
    left: Vec<u64>,
    right: Vec<u64>,
    /// `causes[i]`: pairs strictly below pair `i`, transitively closed.
    causes: Vec<u64>,
}

impl PosetalTriple {
    fn empty() -> Self {
        PosetalTriple { labels: Vec::new(), left: Vec::new(), right: Vec::new(), causes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// The shared pomset of the two histories.
    pub fn pomset(&self) -> Pomset {
        Pomset::new(self.labels.clone(), self.causes.clone())
    }

    pub fn left_atoms(&self, i: usize) -> Vec<u32> {
        bits(self.left[i]).collect()
    }

    pub fn right_atoms(&self, i: usize) -> Vec<u32> {
        bits(self.right[i]).collect()
    }

    fn fired(masks: &[u64]) -> u64 {
        masks.iter().fold(0, |m, x| m | x)
    }

    fn maximal(&self, i: usize) -> bool {
        self.causes.iter().all(|c| c >> i & 1 == 0)
    }

    /// Rebuilds a triple from unsorted pairs; `causes` index the input order.
    fn canonical(pairs: Vec<(EventLabel, u64, u64, u64)>) -> Self {
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        order.sort_by_key(|&i| pairs[i].1);
        let mut rank = vec![0usize; pairs.len()];
        for (new, &old) in order.iter().enumerate() {
            rank[old] = new;
        }
        let remap = |m: u64| bits(m).fold(0u64, |acc, b| acc | 1u64 << rank[b as usize]);
        let mut t = PosetalTriple::empty();
        for &old in &order {
            let (l, a, b, c) = &pairs[old];
            t.labels.push(l.clone());
            t.left.push(*a);
            t.right.push(*b);
            t.causes.push(remap(*c));
        }
        t
    }

    fn pairs(&self) -> Vec<(EventLabel, u64, u64, u64)> {
        (0..self.len()).map(|i| (self.labels[i].clone(), self.left[i], self.right[i], self.causes[i])).collect()
    }

    fn without(&self, i: usize) -> Self {
        let drop = |m: u64| {
            let low = m & ((1u64 << i) - 1);
            let high = (m >> (i + 1)) << i;
            low | high
        };
        let mut pairs = self.pairs();
        pairs.remove(i);
        for p in &mut pairs {
            p.3 = drop(p.3);
        }
        PosetalTriple::canonical(pairs)
    }
}

fn bits(mut m: u64) -> impl Iterator<Item = u32> {
    std::iter::from_fn(move || {
        if m == 0 {
            return None;
        }
        let b = m.trailing_zeros();
        m &= m - 1;
        Some(b)
    })
}

/// A transition available from a configuration: its events as
/// `(label, atoms)`, sorted.
type Firing = Vec<(EventLabel, u64)>;

struct Side<'a> {
    program: Program,
    cfg: &'a SemanticsConfig,
    cache: HashMap<u64, Arc<(bool, Vec<Firing>)>>,
    /// Fired-atom sets some run reaches; `None` when every set may move.
    reachable: Option<HashSet<u64>>,
}

impl<'a> Side<'a> {
    fn new(t: &Term, cfg: &'a SemanticsConfig, budget: usize) -> Result<Self> {
        let mut side = Side { program: Program::compile(t, cfg)?, cfg, cache: HashMap::new(), reachable: None };
        if cfg.backtrack == Backtrack::Runs {
            let mut seen = HashSet::from([0u64]);
            let mut stack = vec![0u64];
            while let Some(m) = stack.pop() {
                for f in side.options(m).1.iter() {
                    let next = f.iter().fold(m, |acc, e| acc | e.1);
                    if seen.insert(next) {
                        if seen.len() > budget {
                            return Err(Error::budget("reachable configuration", budget));
                        }
                        stack.push(next);
                    }
                }
            }
            side.reachable = Some(seen);
        }
        Ok(side)
    }

    /// Whether the configuration has terminated, and its transitions.
    fn options(&mut self, fired: u64) -> Arc<(bool, Vec<Firing>)> {
        if let Some(v) = self.cache.get(&fired) {
            return v.clone();
        }
        if self.reachable.as_ref().is_some_and(|r| !r.contains(&fired)) {
            return Arc::new((false, Vec::new()));
        }
        let v = Arc::new(match self.program.residual(fired) {
            None => (true, Vec::new()),
            Some(p) => {
                let set: BTreeSet<Firing> = moves(&p, self.cfg)
                    .into_iter()
                    .map(|m| {
                        let mut f: Firing =
                            m.events.iter().map(|e| (e.label.clone(), crate::sos::atoms_mask(&e.atoms))).collect();
                        f.sort();
                        f
                    })
                    .collect();
                (false, set.into_iter().collect())
            }
        });
        self.cache.insert(fired, v.clone());
        v
    }

    fn successors(&self, masks: &[u64]) -> Vec<u64> {
        masks.iter().map(|&m| self.program.successors_of(&bits(m).collect::<Vec<_>>())).collect()
    }
}

fn cause_of(atoms: u64, succ: &[u64], causes: &[u64]) -> u64 {
    let mut mask = 0;
    for (i, s) in succ.iter().enumerate() {
        if s & atoms != 0 {
            mask |= 1u64 << i | causes[i];
        }
    }
    mask
}

#[derive(Clone)]
enum Attack {
    Fire { left: bool, step: Step },
    Undo { label: EventLabel },
}

#[derive(Default)]
struct Node {
    mismatch: bool,
    /// Attacks and the positions answering each; an undo has exactly one.
    attacks: Vec<(Attack, Vec<usize>)>,
}

struct Game<'a> {
    sides: [Side<'a>; 2],
    hereditary: bool,
    budget: usize,
    triples: Vec<PosetalTriple>,
    index: HashMap<PosetalTriple, usize>,
    nodes: Vec<Node>,
}

impl Game<'_> {
    fn intern(&mut self, t: PosetalTriple, queue: &mut VecDeque<usize>) -> Result<usize> {
        if let Some(&i) = self.index.get(&t) {
            return Ok(i);
        }
        if self.triples.len() >= self.budget {
            return Err(Error::budget("history game position", self.budget));
        }
        let i = self.triples.len();
        self.index.insert(t.clone(), i);
        self.triples.push(t);
        self.nodes.push(Node::default());
        queue.push_back(i);
        Ok(i)
    }

    fn explore(&mut self) -> Result<()> {
        let mut queue = VecDeque::new();
        self.intern(PosetalTriple::empty(), &mut queue)?;
        while let Some(n) = queue.pop_front() {
            let t = self.triples[n].clone();
            let (term1, opts1) = {
                let o = self.sides[0].options(PosetalTriple::fired(&t.left));
                (o.0, o.clone())
            };
            let (term2, opts2) = {
                let o = self.sides[1].options(PosetalTriple::fired(&t.right));
                (o.0, o.clone())
            };
            if term1 != term2 {
                self.nodes[n].mismatch = true;
                continue;
            }
            let succ1 = self.sides[0].successors(&t.left);
            let succ2 = self.sides[1].successors(&t.right);
            let sig = |f: &Firing, succ: &[u64]| -> Vec<(EventLabel, u64)> {
                f.iter().map(|(l, a)| (l.clone(), cause_of(*a, succ, &t.causes))).collect()
            };
            let sig1: Vec<_> = opts1.1.iter().map(|f| sig(f, &succ1)).collect();
            let sig2: Vec<_> = opts2.1.iter().map(|f| sig(f, &succ2)).collect();
            let mut answers = vec![vec![Vec::new(); opts2.1.len()]; opts1.1.len()];
            for (i, f1) in opts1.1.iter().enumerate() {
                for (j, f2) in opts2.1.iter().enumerate() {
                    if f1.len() != f2.len() {
                        continue;
                    }
                    for bij in bijections(&sig1[i], &sig2[j]) {
                        let mut pairs = t.pairs();
                        for (e, &k) in bij.iter().enumerate() {
                            pairs.push((f1[e].0.clone(), f1[e].1, f2[k].1, sig1[i][e].1));
                        }
                        let c = self.intern(PosetalTriple::canonical(pairs), &mut queue)?;
                        answers[i][j].push(c);
                    }
                }
            }
            let mut attacks = Vec::new();
            for (i, f1) in opts1.1.iter().enumerate() {
                let step = Step::new(f1.iter().map(|e| e.0.clone()).collect());
                let resp: Vec<usize> = answers[i].iter().flatten().copied().collect();
                attacks.push((Attack::Fire { left: true, step }, resp));
            }
            for (j, f2) in opts2.1.iter().enumerate() {
                let step = Step::new(f2.iter().map(|e| e.0.clone()).collect());
                let resp: Vec<usize> = answers.iter().flat_map(|row| row[j].iter().copied()).collect();
                attacks.push((Attack::Fire { left: false, step }, resp));
            }
            if self.hereditary {
                for i in (0..t.len()).filter(|&i| t.maximal(i)) {
                    let c = self.intern(t.without(i), &mut queue)?;
                    attacks.push((Attack::Undo { label: t.labels[i].clone() }, vec![c]));
                }
            }
            self.nodes[n].attacks = attacks;
        }
        Ok(())
    }

    /// Loss propagation. Returns, per position, the round at which the
    /// defender was found to lose, `None` for positions the defender holds.
    fn solve(&self) -> Vec<Option<usize>> {
        let n = self.nodes.len();
        let mut lost: Vec<Option<usize>> = vec![None; n];
        let mut alive_answers: Vec<Vec<usize>> =
            self.nodes.iter().map(|nd| nd.attacks.iter().map(|(_, r)| r.len()).collect()).collect();
        let mut parents: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (p, nd) in self.nodes.iter().enumerate() {
            for (a, (_, resp)) in nd.attacks.iter().enumerate() {
                for &c in resp {
                    parents[c].push((p, a));
                }
            }
        }
        let mut queue = VecDeque::new();
        let mut clock = 0;
        for (i, nd) in self.nodes.iter().enumerate() {
            if nd.mismatch || alive_answers[i].iter().any(|&k| k == 0) {
                lost[i] = Some(clock);
                queue.push_back(i);
            }
        }
        while let Some(c) = queue.pop_front() {
            for &(p, a) in &parents[c] {
                if lost[p].is_some() {
                    continue;
                }
                alive_answers[p][a] -= 1;
                if alive_answers[p][a] == 0 {
                    clock += 1;
                    lost[p] = Some(clock);
                    queue.push_back(p);
                }
            }
        }
        lost
    }

    fn witness(&self, lost: &[Option<usize>]) -> Vec<String> {
        let mut out = Vec::new();
        let mut cur = 0usize;
        loop {
            let nd = &self.nodes[cur];
            if nd.mismatch {
                let t = &self.triples[cur];
                let term_left = self.sides[0].cache.get(&PosetalTriple::fired(&t.left)).is_some_and(|o| o.0);
                let side = if term_left { "left" } else { "right" };
                out.push(format!("{side} has terminated, the other side has not"));
                return out;
            }
            let at = lost[cur].expect("losing position");
            let (attack, resp) = nd
                .attacks
                .iter()
                .find(|(_, r)| r.iter().all(|&c| lost[c].is_some_and(|k| k < at)))
                .expect("a winning attack");
            match attack {
                Attack::Fire { left, step } => {
                    let side = if *left { "left" } else { "right" };
                    let labels: Vec<&str> = step.labels().iter().map(|l| l.as_str()).collect();
                    out.push(format!("{side} fires {{{}}}", labels.join(",")));
                }
                Attack::Undo { label } => out.push(format!("undo the last matched {label}")),
            }
            match resp.iter().min_by_key(|&&c| lost[c]) {
                None => {
                    out.push("no history-preserving answer".to_string());
                    return out;
                }
                Some(&c) => {
                    if resp.len() > 1 {
                        out.push(format!("{} answer(s), all losing", resp.len()));
                    }
                    if lost[c] >= lost[cur] || out.len() > 64 {
                        return out;
                    }
                    cur = c;
                }
            }
        }
    }
}

/// All bijections `e -> k` with `xs[e] == ys[k]`.
fn bijections<T: PartialEq>(xs: &[T], ys: &[T]) -> Vec<Vec<usize>> {
    fn go<T: PartialEq>(xs: &[T], ys: &[T], used: &mut Vec<bool>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let e = cur.len();
        if e == xs.len() {
            out.push(cur.clone());
            return;
        }
        for k in 0..ys.len() {
            if !used[k] && xs[e] == ys[k] {
                used[k] = true;
                cur.push(k);
                go(xs, ys, used, cur, out);
                cur.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    if xs.len() == ys.len() {
        go(xs, ys, &mut vec![false; ys.len()], &mut Vec::new(), &mut out);
    }
    out
}

/// `None` when the defender wins the (hereditary) history-preserving game
/// from the empty triple, otherwise a distinguishing play.
pub fn history_game(
    t1: &Term,
    t2: &Term,
    cfg: &SemanticsConfig,
    hereditary: bool,
    budgets: Budgets,
) -> Result<Option<Vec<String>>> {
    let mut g = Game {
        sides: [Side::new(t1, cfg, budgets.states)?, Side::new(t2, cfg, budgets.states)?],
        hereditary,
        budget: budgets.states,
        triples: Vec::new(),
        index: HashMap::new(),
        nodes: Vec::new(),
    };
    g.explore()?;
    let lost = g.solve();
    Ok(lost[0].map(|_| g.witness(&lost)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Causality;
    use crate::parse::parse_term_raw;
    use crate::syntax::System;

    fn t(s: &str) -> Term {
        parse_term_raw(s, System::Pa2).unwrap()
    }

    fn game(a: &str, b: &str, cfg: &SemanticsConfig, hereditary: bool) -> Option<Vec<String>> {
        history_game(&t(a), &t(b), cfg, hereditary, Budgets::default()).unwrap()
    }

    #[test]
    fn bijections_respect_labels() {
        assert_eq!(bijections(&[1, 2, 1], &[1, 1, 2]), vec![vec![0, 2, 1], vec![1, 2, 0]]);
        assert!(bijections(&[1], &[2]).is_empty());
    }

    #[test]
    fn canonical_triples_ignore_pair_order() {
        let a = EventLabel::new("a");
        let b = EventLabel::new("b");
        let x = PosetalTriple::canonical(vec![(a.clone(), 1, 4, 0), (b.clone(), 2, 1, 1)]);
        let y = PosetalTriple::canonical(vec![(b, 2, 1, 2), (a, 1, 4, 0)]);
        assert_eq!(x, y);
        assert!(x.maximal(1) && !x.maximal(0));
        assert_eq!(x.without(0).causes, vec![0]);
    }

    #[test]
    fn hp_examples() {
        let cfg = SemanticsConfig::cfg_empty();
        assert!(game("(a + b).d", "a.d + b.d", &cfg, false).is_none());
        assert!(game("a + a", "a", &cfg, false).is_none());
        assert!(game("a || d", "a.d + d.a", &cfg, false).is_some());
        assert!(game("a.(b + d)", "a.b + a.d", &cfg, false).is_some());
    }

    #[test]
    fn hhp_examples() {
        let cfg = SemanticsConfig::cfg_empty();
        assert!(game("a + a", "a", &cfg, true).is_none());
        assert!(game("(a + b).d", "a.d + b.d", &cfg, true).is_none());
    }

    #[test]
    fn unreachable_configurations_under_both_readings() {
        // Undo d, then a: neither side has a run firing b alone. Read as
        // residuals, the left continues as `a || d`, the right as `a.d`.
        let runs = SemanticsConfig::cfg_empty();
        let residual = SemanticsConfig::cfg_empty().with_backtrack(Backtrack::Residual);
        for cfg in [&runs, &residual] {
            assert!(game("a || (b.d)", "(a || b).d", cfg, false).is_none());
        }
        assert!(game("a || (b.d)", "(a || b).d", &runs, true).is_none());
        let w = game("a || (b.d)", "(a || b).d", &residual, true).unwrap();
        assert!(w.iter().any(|m| m.starts_with("undo")), "{w:?}");
    }

    #[test]
    fn termination_is_observed() {
        let cfg = SemanticsConfig::cfg0();
        let w = game("a", "a.(b |_ a)", &cfg, false).unwrap();
        assert_eq!(w.last().unwrap(), "left has terminated, the other side has not");
    }

    #[test]
    fn causality_mode_matters() {
        let structural = SemanticsConfig::cfg_empty().with_causality(Causality::Structural);
        assert!(game("a || (b.d)", "(a || b).d", &structural, false).is_some());
    }

    #[test]
    fn witness_starts_with_an_attack() {
        let cfg = SemanticsConfig::cfg_empty();
        let w = game("a || d", "a.d + d.a", &cfg, false).unwrap();
        assert_eq!(w[0], "left fires {a,d}");
    }
}
