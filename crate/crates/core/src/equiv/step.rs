use std::collections::{BTreeSet, HashMap};

use crate::config::SemanticsConfig;
use crate::error::Result;
use crate::sos::{build_lts, Lts, Step};
use crate::syntax::{System, Term};

use super::Budgets;

pub const TERMINATED_FINGERPRINT: &str = "T";

/// Fingerprint of a live state from its `(step, successor fingerprint)`
/// pairs; duplicates collapse.
pub fn fingerprint_node<I: IntoIterator<Item = (Step, String)>>(children: I) -> String {
    let set: BTreeSet<String> = children.into_iter().map(|(s, fp)| format!("{s}:{fp}")).collect();
    let parts: Vec<String> = set.into_iter().collect();
    format!("({})", parts.join(","))
}

/// Canonical encoding of the bisimulation-collapsed step tree. Equal
/// fingerprints iff step bisimilar, since the LTS is finite and acyclic.
pub fn step_fingerprint(t: &Term, system: System, cfg: &SemanticsConfig, budget: usize) -> Result<String> {
    let lts = build_lts(t, system, cfg, budget)?;
    let mut memo = HashMap::new();
    Ok(fp(&lts, lts.initial(), &mut memo))
}

fn fp(lts: &Lts, s: usize, memo: &mut HashMap<usize, String>) -> String {
    if let Some(f) = memo.get(&s) {
        return f.clone();
    }
    let f = if lts.is_terminal(s) {
        TERMINATED_FINGERPRINT.to_string()
    } else {
        let children: Vec<(Step, String)> = lts.outgoing(s).map(|(st, n)| (st.clone(), fp(lts, n, memo))).collect();
        fingerprint_node(children)
    };
    memo.insert(s, f.clone());
    f
}

struct Game<'a> {
    l1: &'a Lts,
    l2: &'a Lts,
    memo: HashMap<(usize, usize), bool>,
}

impl Game<'_> {
    /// Both LTSs are acyclic, so the greatest bisimulation is computed by
    /// well-founded recursion over state pairs.
    fn bisim(&mut self, s: usize, t: usize) -> bool {
        if let Some(&b) = self.memo.get(&(s, t)) {
            return b;
        }
        let b = self.l1.is_terminal(s) == self.l2.is_terminal(t) && self.forth(s, t) && self.back(s, t);
        self.memo.insert((s, t), b);
        b
    }

    fn forth(&mut self, s: usize, t: usize) -> bool {
        let (l1, l2) = (self.l1, self.l2);
        l1.outgoing(s).all(|(a, s2)| l2.outgoing(t).any(|(b, t2)| a == b && self.bisim(s2, t2)))
    }

    fn back(&mut self, s: usize, t: usize) -> bool {
        let (l1, l2) = (self.l1, self.l2);
        l2.outgoing(t).all(|(b, t2)| l1.outgoing(s).any(|(a, s2)| a == b && self.bisim(s2, t2)))
    }

    fn witness(&mut self, s: usize, t: usize, out: &mut Vec<String>) {
        let (l1, l2) = (self.l1, self.l2);
        if l1.is_terminal(s) != l2.is_terminal(t) {
            let side = if l1.is_terminal(s) { "left" } else { "right" };
            out.push(format!("{side} has terminated, the other side has not"));
            return;
        }
        for (attacker, la, lb, flip) in [("left", l1, l2, false), ("right", l2, l1, true)] {
            let (x, y) = if flip { (t, s) } else { (s, t) };
            for (a, x2) in la.outgoing(x) {
                let answers: Vec<usize> = lb.outgoing(y).filter(|(b, _)| *b == a).map(|(_, y2)| y2).collect();
                let ok = answers.iter().any(|&y2| if flip { self.bisim(y2, x2) } else { self.bisim(x2, y2) });
                if ok {
                    continue;
                }
                out.push(format!(
                    "{attacker} fires {{{}}}",
                    a.labels().iter().map(|l| l.as_str()).collect::<Vec<_>>().join(",")
                ));
                match answers.first() {
                    None => out.push("no matching step".to_string()),
                    Some(&y2) => {
                        out.push(format!("answered by the same step ({} answer(s))", answers.len()));
                        if flip {
                            self.witness(y2, x2, out)
                        } else {
                            self.witness(x2, y2, out)
                        }
                    }
                }
                return;
            }
        }
    }
}

/// `None` when the terms are step bisimilar, otherwise a distinguishing play.
pub fn step_game(
    t1: &Term,
    t2: &Term,
    system: System,
    cfg: &SemanticsConfig,
    budgets: Budgets,
) -> Result<Option<Vec<String>>> {
    let l1 = build_lts(t1, system, cfg, budgets.states)?;
    let l2 = build_lts(t2, system, cfg, budgets.states)?;
    let mut g = Game { l1: &l1, l2: &l2, memo: HashMap::new() };
    if g.bisim(l1.initial(), l2.initial()) {
        return Ok(None);
    }
    let mut w = Vec::new();
    g.witness(l1.initial(), l2.initial(), &mut w);
    Ok(Some(w))
}
