use std::cmp::Ordering;
use std::fmt;

use crate::config::SemanticsConfig;
use crate::error::{Error, Result};
use crate::syntax::EventLabel;

use super::run::{steps, RunState};

pub const DEFAULT_POMSET_BUDGET: usize = 12;

/// Labelled strict partial order over occurrences `0..len`.
#[derive(Clone, PartialEq, Eq)]
pub struct Pomset {
    labels: Vec<EventLabel>,
    /// `below[i]` is the set of `j` with `j < i`.
    below: Vec<u64>,
}

impl Pomset {
    /// Builds a pomset from a cause relation; the relation is closed
    /// transitively. Panics if it is cyclic.
    pub fn new(labels: Vec<EventLabel>, causes: Vec<u64>) -> Pomset {
        assert_eq!(labels.len(), causes.len());
        assert!(labels.len() <= 64);
        let mut below = causes;
        loop {
            let mut changed = false;
            for i in 0..below.len() {
                let mut m = below[i];
                for j in 0..below.len() {
                    if m >> j & 1 == 1 {
                        m |= below[j];
                    }
                }
                if m != below[i] {
                    below[i] = m;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for (i, m) in below.iter().enumerate() {
            assert!(m >> i & 1 == 0, "cyclic cause relation");
        }
        Pomset { labels, below }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> &EventLabel {
        &self.labels[i]
    }

    pub fn precedes(&self, i: usize, j: usize) -> bool {
        self.below[j] >> i & 1 == 1
    }

    /// True when no two occurrences are ordered.
    pub fn is_discrete(&self) -> bool {
        self.below.iter().all(|&m| m == 0)
    }

    /// Multiset of labels, sorted.
    pub fn label_multiset(&self) -> Vec<EventLabel> {
        let mut v = self.labels.clone();
        v.sort();
        v
    }
}

impl fmt::Debug for Pomset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut pairs = Vec::new();
        for j in 0..self.len() {
            for i in 0..self.len() {
                if self.precedes(i, j) {
                    pairs.push(format!("{}{}<{}{}", self.labels[i], i, self.labels[j], j));
                }
            }
        }
        let names: Vec<String> = self.labels.iter().enumerate().map(|(i, l)| format!("{l}{i}")).collect();
        write!(f, "{{{}; {}}}", names.join(","), pairs.join(","))
    }
}

/// Every nonempty run prefix from `s`, as the pomset of the occurrences it
/// fires paired with the state it ends in.
pub fn pomset_transitions(s: &RunState, cfg: &SemanticsConfig, budget: usize) -> Result<Vec<(Pomset, RunState)>> {
    let base = s.history().len();
    let mut out = Vec::new();
    let mut stack = vec![s.clone()];
    while let Some(cur) = stack.pop() {
        for t in steps(&cur, cfg)? {
            let window = &t.next.history()[base..];
            if window.len() > budget {
                return Err(Error::budget("pomset size", budget));
            }
            let labels = window.iter().map(|o| o.label.clone()).collect();
            let causes = window.iter().map(|o| o.cause_mask() >> base).collect();
            out.push((Pomset::new(labels, causes), t.next.clone()));
            stack.push(t.next);
        }
    }
    Ok(out)
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Entry {
    label: EventLabel,
    below: u64,
    above: u64,
}

struct Canon<'a> {
    p: &'a Pomset,
    above: Vec<u64>,
    best: Option<Vec<Entry>>,
    best_order: Vec<usize>,
}

impl Canon<'_> {
    fn entry(&self, v: usize, placed: &[usize]) -> Entry {
        let mut below = 0;
        let mut above = 0;
        for (k, &u) in placed.iter().enumerate() {
            if self.p.below[v] >> u & 1 == 1 {
                below |= 1 << k;
            }
            if self.above[v] >> u & 1 == 1 {
                above |= 1 << k;
            }
        }
        Entry { label: self.p.labels[v].clone(), below, above }
    }

    /// Compares `prefix` (of length k+1) with the best code's prefix.
    fn against_best(&self, prefix: &[Entry]) -> Ordering {
        match &self.best {
            None => Ordering::Less,
            Some(best) => prefix.cmp(&best[..prefix.len()]),
        }
    }

    fn search(&mut self, placed: &mut Vec<usize>, prefix: &mut Vec<Entry>, used: u64) {
        let n = self.p.len();
        if placed.len() == n {
            if self.against_best(prefix) == Ordering::Less {
                self.best = Some(prefix.clone());
                self.best_order = placed.clone();
            }
            return;
        }
        let mut cands: Vec<(Entry, usize)> =
            (0..n).filter(|v| used >> v & 1 == 0).map(|v| (self.entry(v, placed), v)).collect();
        let min = cands.iter().map(|c| c.0.clone()).min().expect("remaining node");
        cands.retain(|c| c.0 == min);
        prefix.push(min);

        // interchangeable candidates: same label and same relation to every other node
        let mut tried: Vec<usize> = Vec::new();
        for (_, v) in cands {
            if self.against_best(prefix) == Ordering::Greater {
                break;
            }
            let twin = tried.iter().any(|&u| {
                let others = !(1u64 << u | 1u64 << v);
                self.p.labels[u] == self.p.labels[v]
                    && !self.p.precedes(u, v)
                    && !self.p.precedes(v, u)
                    && self.p.below[u] & others == self.p.below[v] & others
                    && self.above[u] & others == self.above[v] & others
            });
            if twin {
                continue;
            }
            tried.push(v);
            placed.push(v);
            self.search(placed, prefix, used | 1 << v);
            placed.pop();
        }
        prefix.pop();
    }
}

/// Isomorphism-invariant code: equal codes iff the pomsets are isomorphic.
pub fn canonical_pomset(p: &Pomset, budget: usize) -> Result<String> {
    if p.len() > budget {
        return Err(Error::budget("pomset size", budget));
    }
    let n = p.len();
    let mut above = vec![0u64; n];
    for j in 0..n {
        for i in 0..n {
            if p.precedes(i, j) {
                above[i] |= 1 << j;
            }
        }
    }
    let mut canon = Canon { p, above, best: None, best_order: Vec::new() };
    canon.search(&mut Vec::new(), &mut Vec::new(), 0);
    let order = canon.best_order;
    let labels: Vec<&str> = order.iter().map(|&v| p.labels[v].as_str()).collect();
    let mut rel = Vec::new();
    for (a, &u) in order.iter().enumerate() {
        for (b, &v) in order.iter().enumerate() {
            if p.precedes(u, v) {
                rel.push(format!("{a}<{b}"));
            }
        }
    }
    Ok(format!("{}|{}", labels.join(","), rel.join(",")))
}
