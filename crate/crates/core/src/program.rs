//! Ground normal logic programs under the stable model semantics.
//!
//! Programs are generic over the atom type so the same machinery serves the
//! trust-network translation and plain propositional test programs.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// Default ceiling on the atom universe accepted by [`GroundProgram::enumerate_stable_models`].
pub const DEFAULT_ATOM_LIMIT: usize = 24;

pub type Interpretation<A> = BTreeSet<A>;

/// `head :- positive, not negative.`
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundRule<A> {
    pub head: A,
    pub positive: BTreeSet<A>,
    pub negative: BTreeSet<A>,
}

impl<A: Ord> GroundRule<A> {
    pub fn fact(head: A) -> Self {
        GroundRule { head, positive: BTreeSet::new(), negative: BTreeSet::new() }
    }

    pub fn new(head: A, positive: impl IntoIterator<Item = A>, negative: impl IntoIterator<Item = A>) -> Self {
        GroundRule { head, positive: positive.into_iter().collect(), negative: negative.into_iter().collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundProgram<A> {
    rules: Vec<GroundRule<A>>,
    universe: BTreeSet<A>,
}

impl<A: Ord + Clone> GroundProgram<A> {
    /// Builds a program; the atom universe is every atom mentioned by a rule.
    pub fn new(rules: Vec<GroundRule<A>>) -> Self {
        let mut universe = BTreeSet::new();
        for r in &rules {
            universe.insert(r.head.clone());
            universe.extend(r.positive.iter().cloned());
            universe.extend(r.negative.iter().cloned());
        }
        GroundProgram { rules, universe }
    }

    pub fn rules(&self) -> &[GroundRule<A>] {
        &self.rules
    }

    pub fn atom_universe(&self) -> &BTreeSet<A> {
        &self.universe
    }

    /// Concatenates two programs.
    pub fn union(&self, other: &Self) -> Self {
        let mut rules = self.rules.clone();
        rules.extend(other.rules.iter().cloned());
        GroundProgram::new(rules)
    }

    /// Gelfond-Lifschitz reduct: rules whose negative body meets `m` are
    /// dropped, the rest lose their negative bodies.
    pub fn reduct(&self, m: &Interpretation<A>) -> Self {
        let rules = self
            .rules
            .iter()
            .filter(|r| r.negative.is_disjoint(m))
            .map(|r| GroundRule { head: r.head.clone(), positive: r.positive.clone(), negative: BTreeSet::new() })
            .collect();
        GroundProgram { rules, universe: self.universe.clone() }
    }

    /// Least model of a definite program.
    pub fn minimal_model(&self) -> Result<Interpretation<A>> {
        if self.rules.iter().any(|r| !r.negative.is_empty()) {
            return Err(Error::NotDefinite);
        }
        let mut model = BTreeSet::new();
        loop {
            let before = model.len();
            for r in &self.rules {
                if !model.contains(&r.head) && r.positive.is_subset(&model) {
                    model.insert(r.head.clone());
                }
            }
            if model.len() == before {
                return Ok(model);
            }
        }
    }

    pub fn is_stable_model(&self, m: &Interpretation<A>) -> bool {
        if !m.is_subset(&self.universe) {
            return false;
        }
        match self.reduct(m).minimal_model() {
            Ok(lm) => &lm == m,
            Err(_) => false,
        }
    }

    /// All stable models in canonical order (lexicographic over sorted atoms).
    ///
    /// The search guesses only atoms occurring under negation. A partial guess
    /// (in, out, undecided) bounds the least model of every completion's
    /// reduct between the least models obtained with the undecided atoms taken
    /// all-true and all-false, which yields sound forcing and pruning.
    pub fn enumerate_stable_models(&self, atom_limit: usize) -> Result<Vec<Interpretation<A>>> {
        if self.universe.len() > atom_limit {
            return Err(Error::DomainTooLarge { atoms: self.universe.len(), limit: atom_limit });
        }
        let atoms: Vec<&A> = self.universe.iter().collect();
        let compiled = Compiled::new(self, &atoms);
        let mut found = Vec::new();
        compiled.search(vec![Guess::Open; compiled.guessable.len()], &mut found);
        let mut models: Vec<Interpretation<A>> = found
            .into_iter()
            .map(|bits| bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| atoms[i].clone()).collect())
            .collect();
        models.sort();
        models.dedup();
        Ok(models)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Guess {
    In,
    Out,
    Open,
}

struct CompiledRule {
    head: usize,
    positive: Vec<usize>,
    negative: Vec<usize>,
}

struct Compiled {
    n_atoms: usize,
    rules: Vec<CompiledRule>,
    /// rules indexed by the atoms of their positive body
    watchers: Vec<Vec<usize>>,
    /// atoms that occur in some negative body, ascending
    guessable: Vec<usize>,
    /// atom -> position in `guessable`
    slot: Vec<Option<usize>>,
}

impl Compiled {
    fn new<A: Ord>(program: &GroundProgram<A>, atoms: &[&A]) -> Self {
        let index = |a: &A| atoms.binary_search(&a).expect("atom in universe");
        let rules: Vec<CompiledRule> = program
            .rules
            .iter()
            .map(|r| CompiledRule {
                head: index(&r.head),
                positive: r.positive.iter().map(index).collect(),
                negative: r.negative.iter().map(index).collect(),
            })
            .collect();
        let n_atoms = atoms.len();
        let mut watchers = vec![Vec::new(); n_atoms];
        let mut slot = vec![None; n_atoms];
        for (ri, r) in rules.iter().enumerate() {
            for &p in &r.positive {
                watchers[p].push(ri);
            }
            for &n in &r.negative {
                slot[n] = Some(0);
            }
        }
        let guessable: Vec<usize> = (0..n_atoms).filter(|&a| slot[a].is_some()).collect();
        for (i, &a) in guessable.iter().enumerate() {
            slot[a] = Some(i);
        }
        Compiled { n_atoms, rules, watchers, guessable, slot }
    }

    /// Least model of the reduct keeping rules whose negative atoms are all "false"
    /// according to `blocks`.
    fn least_model(&self, blocks: impl Fn(usize) -> bool) -> Vec<bool> {
        let mut model = vec![false; self.n_atoms];
        let mut missing: Vec<usize> = self.rules.iter().map(|r| r.positive.len()).collect();
        let mut active = vec![false; self.rules.len()];
        let mut queue = Vec::new();
        for (ri, r) in self.rules.iter().enumerate() {
            active[ri] = !r.negative.iter().any(|&n| blocks(n));
            if active[ri] && missing[ri] == 0 && !model[r.head] {
                model[r.head] = true;
                queue.push(r.head);
            }
        }
        while let Some(a) = queue.pop() {
            for &ri in &self.watchers[a] {
                missing[ri] -= 1;
                let head = self.rules[ri].head;
                if active[ri] && missing[ri] == 0 && !model[head] {
                    model[head] = true;
                    queue.push(head);
                }
            }
        }
        model
    }

    fn search(&self, mut guess: Vec<Guess>, found: &mut Vec<Vec<bool>>) {
        loop {
            let upper = self.least_model(|a| guess[self.slot[a].unwrap()] == Guess::In);
            let lower = self.least_model(|a| guess[self.slot[a].unwrap()] != Guess::Out);
            let mut changed = false;
            for (i, &a) in self.guessable.iter().enumerate() {
                match guess[i] {
                    Guess::In if !upper[a] => return,
                    Guess::Out if lower[a] => return,
                    Guess::Open if lower[a] => {
                        guess[i] = Guess::In;
                        changed = true;
                    }
                    Guess::Open if !upper[a] => {
                        guess[i] = Guess::Out;
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                match guess.iter().position(|g| *g == Guess::Open) {
                    None => {
                        debug_assert_eq!(upper, lower);
                        found.push(upper);
                    }
                    Some(i) => {
                        let mut with = guess.clone();
                        with[i] = Guess::In;
                        self.search(with, found);
                        guess[i] = Guess::Out;
                        self.search(guess, found);
                    }
                }
                return;
            }
        }
    }
}

impl<A: fmt::Display> fmt::Display for GroundRule<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if self.positive.is_empty() && self.negative.is_empty() {
            return f.write_str(".");
        }
        f.write_str(" :- ")?;
        let body = self
            .positive
            .iter()
            .map(|a| a.to_string())
            .chain(self.negative.iter().map(|a| format!("not {a}")))
            .collect::<Vec<_>>();
        write!(f, "{} .", body.join(", "))
    }
}

/// One rule per line.
impl<A: fmt::Display> fmt::Display for GroundProgram<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type P = GroundProgram<&'static str>;

    fn rule(head: &'static str, pos: &[&'static str], neg: &[&'static str]) -> GroundRule<&'static str> {
        GroundRule::new(head, pos.iter().copied(), neg.iter().copied())
    }

    fn set(atoms: &[&'static str]) -> Interpretation<&'static str> {
        atoms.iter().copied().collect()
    }

    /// Checks every subset of the universe directly against the definition.
    fn brute_force(p: &P) -> Vec<Interpretation<&'static str>> {
        let atoms: Vec<_> = p.atom_universe().iter().copied().collect();
        let mut out: Vec<_> = (0u32..1 << atoms.len())
            .map(|mask| {
                atoms
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, a)| *a)
                    .collect::<Interpretation<_>>()
            })
            .filter(|m| p.is_stable_model(m))
            .collect();
        out.sort();
        out
    }

    #[test]
    fn reduct_cases() {
        let p = P::new(vec![rule("a", &[], &["b"])]);
        assert_eq!(p.reduct(&set(&["a"])).rules(), &[rule("a", &[], &[])]);
        assert!(p.reduct(&set(&["b"])).rules().is_empty());
        let p = P::new(vec![rule("a", &["b"], &["c"])]);
        assert_eq!(p.reduct(&set(&[])).rules(), &[rule("a", &["b"], &[])]);
    }

    #[test]
    fn minimal_model_cases() {
        let p = P::new(vec![rule("a", &[], &[]), rule("b", &["a"], &[])]);
        assert_eq!(p.minimal_model().unwrap(), set(&["a", "b"]));
        assert_eq!(P::new(vec![]).minimal_model().unwrap(), set(&[]));
        assert_eq!(P::new(vec![rule("a", &["b"], &[])]).minimal_model().unwrap(), set(&[]));
        assert!(matches!(P::new(vec![rule("a", &[], &["b"])]).minimal_model(), Err(Error::NotDefinite)));
    }

    #[test]
    fn stability_checks() {
        let p = P::new(vec![rule("a", &[], &["b"]), rule("b", &[], &["a"])]);
        assert!(p.is_stable_model(&set(&["a"])));
        assert!(!p.is_stable_model(&set(&["a", "b"])));
        let p = P::new(vec![rule("a", &[], &["a"])]);
        assert!(!p.is_stable_model(&set(&["a"])));
        assert!(!p.is_stable_model(&set(&[])));
        let p = P::new(vec![rule("a", &[], &[])]);
        assert!(!p.is_stable_model(&set(&[])));
        assert!(!p.is_stable_model(&set(&["zzz"])));
    }

    #[test]
    fn enumeration_cases() {
        let p = P::new(vec![rule("a", &[], &[])]);
        assert_eq!(p.enumerate_stable_models(24).unwrap(), vec![set(&["a"])]);
        let p = P::new(vec![rule("a", &[], &["b"]), rule("b", &[], &["a"])]);
        assert_eq!(p.enumerate_stable_models(24).unwrap(), vec![set(&["a"]), set(&["b"])]);
        let p = P::new(vec![rule("a", &[], &["a"])]);
        assert!(p.enumerate_stable_models(24).unwrap().is_empty());
        // odd loop guarded by an alternative: b is forced false, a must be true
        let p = P::new(vec![rule("a", &[], &["b"]), rule("b", &["a"], &["b"])]);
        assert_eq!(p.enumerate_stable_models(24).unwrap(), brute_force(&p));
    }

    #[test]
    fn limit_is_a_hard_error() {
        let p = P::new(vec![rule("a", &["b", "c"], &["d"])]);
        assert!(matches!(p.enumerate_stable_models(3), Err(Error::DomainTooLarge { atoms: 4, limit: 3 })));
    }

    #[test]
    fn dump_format() {
        let p = P::new(vec![rule("a", &[], &[]), rule("b", &["a"], &["c", "d"])]);
        assert_eq!(p.to_string(), "a.\nb :- a, not c, not d .\n");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        const NAMES: [&str; 6] = ["a", "b", "c", "d", "e", "f"];
        const OTHER: [&str; 6] = ["p", "q", "r", "s", "t", "u"];

        fn program(names: &'static [&'static str]) -> impl Strategy<Value = P> {
            let atom = proptest::sample::select(names);
            let r = (
                atom.clone(),
                proptest::collection::btree_set(atom.clone(), 0..3),
                proptest::collection::btree_set(atom, 0..3),
            )
                .prop_map(|(h, p, n)| GroundRule { head: h, positive: p, negative: n });
            proptest::collection::vec(r, 0..8).prop_map(P::new)
        }

        proptest! {
            #[test]
            fn enumeration_matches_definition(p in program(&NAMES)) {
                prop_assert_eq!(p.enumerate_stable_models(24).unwrap(), brute_force(&p));
            }

            #[test]
            fn models_are_incomparable(p in program(&NAMES)) {
                let models = p.enumerate_stable_models(24).unwrap();
                for (i, x) in models.iter().enumerate() {
                    for y in &models[i + 1..] {
                        prop_assert!(!x.is_subset(y) && !y.is_subset(x));
                    }
                }
            }

            #[test]
            fn least_model_is_least(p in program(&NAMES)) {
                let definite = p.reduct(&BTreeSet::new());
                let lm = definite.minimal_model().unwrap();
                // it is a model
                for r in definite.rules() {
                    prop_assert!(!r.positive.is_subset(&lm) || lm.contains(&r.head));
                }
                // contained in every model of the program
                let atoms: Vec<_> = definite.atom_universe().iter().copied().collect();
                for mask in 0u32..1 << atoms.len() {
                    let m: BTreeSet<_> = atoms.iter().enumerate()
                        .filter(|(i, _)| mask >> i & 1 == 1).map(|(_, a)| *a).collect();
                    let is_model = definite.rules().iter()
                        .all(|r| !r.positive.is_subset(&m) || m.contains(&r.head));
                    if is_model {
                        prop_assert!(lm.is_subset(&m));
                    }
                }
            }

            #[test]
            fn disjoint_programs_multiply(p in program(&NAMES), q in program(&OTHER)) {
                let mp = p.enumerate_stable_models(24).unwrap();
                let mq = q.enumerate_stable_models(24).unwrap();
                let both = p.union(&q).enumerate_stable_models(24).unwrap();
                prop_assert_eq!(both.len(), mp.len() * mq.len());
                let mut expected: Vec<_> = mp.iter()
                    .flat_map(|x| mq.iter().map(move |y| x.union(y).copied().collect::<BTreeSet<_>>()))
                    .collect();
                expected.sort();
                prop_assert_eq!(both, expected);
            }
        }
    }
}
