use std::collections::{BTreeSet, HashMap};

use crate::config::SemanticsConfig;
use crate::error::Result;
use crate::sos::{canonical_pomset, init_state, pomset_transitions};
use crate::syntax::Term;

use super::Budgets;

type State = Option<Term>;

struct Game<'a> {
    cfg: &'a SemanticsConfig,
    budgets: Budgets,
    transitions: HashMap<Term, Vec<(String, State)>>,
    memo: HashMap<(State, State), bool>,
}

impl Game<'_> {
    fn transitions(&mut self, s: &State) -> Result<Vec<(String, State)>> {
        let Some(t) = s else { return Ok(Vec::new()) };
        if let Some(v) = self.transitions.get(t) {
            return Ok(v.clone());
        }
        let st = init_state(t, self.cfg)?;
        let mut set = BTreeSet::new();
        for (p, end) in pomset_transitions(&st, self.cfg, self.budgets.pomset)? {
            set.insert((canonical_pomset(&p, self.budgets.pomset)?, end.residual_term()));
        }
        let v: Vec<_> = set.into_iter().collect();
        self.transitions.insert(t.clone(), v.clone());
        Ok(v)
    }

    /// Pomset transitions strictly shrink the residual, so recursion over
    /// state pairs is well founded.
    fn bisim(&mut self, s: &State, t: &State) -> Result<bool> {
        let key = (s.clone(), t.clone());
        if let Some(&b) = self.memo.get(&key) {
            return Ok(b);
        }
        let b = s.is_none() == t.is_none() && self.forth(s, t, false)?.is_none() && self.forth(t, s, true)?.is_none();
        self.memo.insert(key, b);
        Ok(b)
    }

    /// First transition of `s` that `t` cannot match, if any.
    fn forth(&mut self, s: &State, t: &State, flipped: bool) -> Result<Option<(String, Vec<State>)>> {
        let ts = self.transitions(s)?;
        let tt = self.transitions(t)?;
        for (code, s2) in &ts {
            let answers: Vec<State> = tt.iter().filter(|(c, _)| c == code).map(|(_, t2)| t2.clone()).collect();
            let mut ok = false;
            for t2 in &answers {
                let b = if flipped { self.bisim(t2, s2)? } else { self.bisim(s2, t2)? };
                if b {
                    ok = true;
                    break;
                }
            }
            if !ok {
                return Ok(Some((code.clone(), answers)));
            }
        }
        Ok(None)
    }
}

pub fn pomset_game(t1: &Term, t2: &Term, cfg: &SemanticsConfig, budgets: Budgets) -> Result<Option<Vec<String>>> {
    let mut g = Game { cfg, budgets, transitions: HashMap::new(), memo: HashMap::new() };
    let (s, t) = (Some(t1.clone()), Some(t2.clone()));
    if g.bisim(&s, &t)? {
        return Ok(None);
    }
    let mut w = Vec::new();
    for (side, a, b, flipped) in [("left", &s, &t, false), ("right", &t, &s, true)] {
        if let Some((code, answers)) = g.forth(a, b, flipped)? {
            w.push(format!("{side} fires pomset [{code}]"));
            w.push(if answers.is_empty() {
                "no isomorphic pomset transition".to_string()
            } else {
                format!("{} isomorphic answer(s), none leads to a related state", answers.len())
            });
            break;
        }
    }
    Ok(Some(w))
}

#[cfg(test)]
mod tests {
    use crate::config::Causality;
    use crate::equiv::pomset_bisim;
    use crate::parse::parse_term_raw;
    use crate::syntax::{System, Term};
    use crate::SemanticsConfig;

    fn t(s: &str) -> Term {
        parse_term_raw(s, System::Pa1).unwrap()
    }

    #[test]
    fn examples() {
        let cfg = SemanticsConfig::cfg0();
        let empty = SemanticsConfig::cfg_empty();
        assert!(pomset_bisim(&t("a.b"), &t("a.b"), System::Pa1, &cfg).unwrap());
        assert!(!pomset_bisim(&t("a || d"), &t("a.d + d.a"), System::Pa1, &empty).unwrap());
        assert!(pomset_bisim(&t("a + b"), &t("b + a"), System::Pa1, &cfg).unwrap());
    }

    #[test]
    fn structural_causality_separates_synchronised_continuations() {
        let lhs = t("a || (b.d)");
        let rhs = t("(a || b).d");
        let sync = SemanticsConfig::cfg_empty();
        let structural = SemanticsConfig::cfg_empty().with_causality(Causality::Structural);
        assert!(pomset_bisim(&lhs, &rhs, System::Pa1, &sync).unwrap());
        assert!(!pomset_bisim(&lhs, &rhs, System::Pa1, &structural).unwrap());
    }
}
