//! Bounded generators of closed terms.
//!
//! Size is the AST node count, so every term has odd size. Terms come out
//! grouped by size, then by operator, then by the size of the left operand.

use rand::Rng;

use crate::error::{Error, Result};
use crate::syntax::{EventLabel, Op, System, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dedup {
    #[default]
    None,
    /// One representative per class of terms equal up to swapping the
    /// operands of `+` and `||`.
    ModuloAc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumSpec {
    pub system: System,
    pub alphabet: Vec<EventLabel>,
    pub max_size: usize,
    pub dedup: Dedup,
}

impl EnumSpec {
    pub fn new(system: System, alphabet: &[&str], max_size: usize) -> Self {
        EnumSpec {
            system,
            alphabet: alphabet.iter().map(|s| EventLabel::new(s)).collect(),
            max_size,
            dedup: Dedup::None,
        }
    }

    pub fn modulo_ac(mut self) -> Self {
        self.dedup = Dedup::ModuloAc;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.max_size == 0 {
            return Err(Error::Invalid("max_size must be at least 1".into()));
        }
        if self.alphabet.is_empty() {
            return Err(Error::Invalid("alphabet must not be empty".into()));
        }
        Ok(())
    }
}

fn commutes(op: Op) -> bool {
    matches!(op, Op::Plus | Op::Par)
}

/// All terms of `spec`, bucketed by exact size (index = size).
pub fn terms_by_size(spec: &EnumSpec) -> Result<Vec<Vec<Term>>> {
    spec.validate()?;
    let mut by_size: Vec<Vec<Term>> = vec![Vec::new(); spec.max_size + 1];
    let mut alphabet = spec.alphabet.clone();
    alphabet.sort();
    alphabet.dedup();
    by_size[1] = alphabet.into_iter().map(Term::Atom).collect();
    for n in (3..=spec.max_size).step_by(2) {
        let mut out = Vec::new();
        for &op in spec.system.ops() {
            for i in (1..n - 1).step_by(2) {
                let j = n - 1 - i;
                for l in &by_size[i] {
                    for r in &by_size[j] {
                        if spec.dedup == Dedup::ModuloAc && commutes(op) && r < l {
                            continue;
                        }
                        out.push(Term::op(op, l.clone(), r.clone()));
                    }
                }
            }
        }
        by_size[n] = out;
    }
    Ok(by_size)
}

/// Every term with at most `max_size` nodes, each exactly once.
pub fn enum_terms(spec: &EnumSpec) -> Result<impl Iterator<Item = Term>> {
    Ok(terms_by_size(spec)?.into_iter().flatten())
}

fn counts(spec: &EnumSpec) -> Result<Vec<u128>> {
    spec.validate()?;
    let overflow = || Error::budget("term count", u128::MAX as usize);
    let mut labels = spec.alphabet.clone();
    labels.sort();
    labels.dedup();
    let mut c = vec![0u128; spec.max_size + 1];
    c[1] = labels.len() as u128;
    for n in (3..=spec.max_size).step_by(2) {
        let mut total = 0u128;
        for &op in spec.system.ops() {
            for i in (1..n - 1).step_by(2) {
                let j = n - 1 - i;
                let k = if spec.dedup == Dedup::ModuloAc && commutes(op) {
                    match i.cmp(&j) {
                        std::cmp::Ordering::Less => c[i].checked_mul(c[j]).ok_or_else(overflow)?,
                        std::cmp::Ordering::Equal => c[i] * (c[i] + 1) / 2,
                        std::cmp::Ordering::Greater => 0,
                    }
                } else {
                    c[i].checked_mul(c[j]).ok_or_else(overflow)?
                };
                total = total.checked_add(k).ok_or_else(overflow)?;
            }
        }
        c[n] = total;
    }
    Ok(c)
}

/// Number of terms `enum_terms` yields, by dynamic programming over sizes.
pub fn count_terms(spec: &EnumSpec) -> Result<u128> {
    Ok(counts(spec)?.into_iter().sum())
}

/// Uniform sampler over the terms of one exact size (no dedup).
pub struct Sampler {
    system: System,
    labels: Vec<EventLabel>,
    counts: Vec<u128>,
}

impl Sampler {
    pub fn new(spec: &EnumSpec) -> Result<Sampler> {
        let plain = EnumSpec { dedup: Dedup::None, ..spec.clone() };
        let mut labels = spec.alphabet.clone();
        labels.sort();
        labels.dedup();
        Ok(Sampler { system: spec.system, labels, counts: counts(&plain)? })
    }

    /// Largest size with at least one term (sizes are odd).
    pub fn max_size(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn sample<R: Rng + ?Sized>(&self, size: usize, rng: &mut R) -> Term {
        assert!(size % 2 == 1 && size <= self.max_size(), "no term of size {size}");
        if size == 1 {
            return Term::Atom(self.labels[rng.gen_range(0..self.labels.len())].clone());
        }
        let ops = self.system.ops();
        let op = ops[rng.gen_range(0..ops.len())];
        let per_op = self.counts[size] / ops.len() as u128;
        let mut pick = rng.gen_range(0..per_op);
        for i in (1..size - 1).step_by(2) {
            let j = size - 1 - i;
            let k = self.counts[i] * self.counts[j];
            if pick < k {
                return Term::op(op, self.sample(i, rng), self.sample(j, rng));
            }
            pick -= k;
        }
        unreachable!("split weights sum to the size count")
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::parse::{format_term, parse_term_raw};

    fn all(spec: &EnumSpec) -> Vec<Term> {
        enum_terms(spec).unwrap().collect()
    }

    /// Naive oracle: every tree up to the size, generated top-down with no
    /// size bookkeeping, then filtered.
    fn brute(system: System, labels: &[&str], max: usize) -> BTreeSet<Term> {
        fn trees(system: System, labels: &[&str], depth: usize) -> Vec<Term> {
            let mut out: Vec<Term> = labels.iter().map(|l| Term::atom(l)).collect();
            if depth > 0 {
                let sub = trees(system, labels, depth - 1);
                for &op in system.ops() {
                    for l in &sub {
                        for r in &sub {
                            out.push(Term::op(op, l.clone(), r.clone()));
                        }
                    }
                }
            }
            out
        }
        trees(system, labels, max / 2).into_iter().filter(|t| t.size() <= max).collect()
    }

    #[test]
    fn small_examples() {
        let s = EnumSpec::new(System::Pa1, &["a"], 3);
        let names: Vec<String> = all(&s).iter().map(format_term).collect();
        assert_eq!(names, ["a", "a + a", "a . a", "a || a"]);
        assert_eq!(count_terms(&s).unwrap(), 4);
        assert_eq!(count_terms(&EnumSpec::new(System::Pa1, &["a", "b"], 3)).unwrap(), 14);
        assert_eq!(count_terms(&EnumSpec::new(System::Pa2, &["a"], 3)).unwrap(), 6);
        assert_eq!(all(&EnumSpec::new(System::Pa1, &["a", "b"], 1)).len(), 2);
    }

    #[test]
    fn stream_matches_brute_force() {
        for (system, labels) in [(System::Pa1, &["a"][..]), (System::Pa1, &["a", "b"]), (System::Pa2, &["a", "b"])] {
            let spec = EnumSpec::new(system, labels, 5);
            let terms = all(&spec);
            let set: BTreeSet<Term> = terms.iter().cloned().collect();
            assert_eq!(set.len(), terms.len(), "duplicates");
            assert_eq!(set, brute(system, labels, 5));
            assert_eq!(count_terms(&spec).unwrap(), terms.len() as u128);
        }
    }

    #[test]
    fn modulo_ac_keeps_one_per_class() {
        for system in [System::Pa1, System::Pa2] {
            let plain = all(&EnumSpec::new(system, &["a", "b"], 7));
            let spec = EnumSpec::new(system, &["a", "b"], 7).modulo_ac();
            let dedup = all(&spec);
            let classes: BTreeSet<Term> = plain.iter().map(Term::commutative_canonical).collect();
            let got: BTreeSet<Term> = dedup.iter().cloned().collect();
            assert_eq!(got.len(), dedup.len());
            assert_eq!(got, classes);
            assert_eq!(count_terms(&spec).unwrap(), dedup.len() as u128);
        }
    }

    #[test]
    fn terms_round_trip_through_the_parser() {
        for t in all(&EnumSpec::new(System::Pa2, &["a", "b"], 7)) {
            assert_eq!(parse_term_raw(&format_term(&t), System::Pa2).unwrap(), t);
        }
    }

    #[test]
    fn sampler_hits_every_small_term() {
        let spec = EnumSpec::new(System::Pa1, &["a", "b"], 3);
        let sampler = Sampler::new(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let seen: BTreeSet<Term> = (0..2000).map(|_| sampler.sample(3, &mut rng)).collect();
        assert_eq!(seen.len(), 12);
        assert!((0..50).all(|_| sampler.sample(3, &mut rng).size() == 3));
    }

    #[test]
    fn rejects_empty_specs() {
        assert!(count_terms(&EnumSpec::new(System::Pa1, &["a"], 0)).is_err());
        assert!(count_terms(&EnumSpec::new(System::Pa1, &[], 3)).is_err());
    }
}
