//! Reference semantics: translate one (network, key) instance into a ground
//! normal logic program and read possible and certain values off its stable
//! models.
//!
//! # Translation
//!
//! Write `val(x,v)` for "user x holds value v". A user with an explicit belief
//! `v` contributes the fact `val(x,v).` and nothing else: explicit beliefs are
//! never overridden. A user without a belief groups its trusted sources by
//! priority into levels `L1 > L2 > ... > Lk` and is wired as a chain:
//!
//! * a level with one source is that source itself; a level with several
//!   equally trusted sources is a *tie node* that holds exactly one of the
//!   values offered by its members,
//! * the user takes the value of its top level whenever that level holds one,
//!   and otherwise falls through to the chain formed by the remaining levels;
//!   a lower value also flows when the top level holds that very value.
//!
//! Intermediate chain links and tie nodes are auxiliary atoms
//! `aux(rest|tie, x, priority, v)`. For node `x` with preferred input `P` and
//! fall-through input `N`:
//!
//! ```text
//! val(x,v) :- val(P,v).
//! val(x,v) :- val(N,v), not val(P,w1), ..., not val(P,wn).   % every w != v
//! ```
//!
//! and a tie node `x` over sources `z1..zm`:
//!
//! ```text
//! val(x,v) :- val(zi,v), not val(x,w1), ..., not val(x,wn).  % every w != v
//! ```
//!
//! A single source of a belief-free user is a plain copy `val(x,v) :- val(z,v).`
//!
//! Grounding keeps only atoms that are derivable through positive
//! dependencies; a negative literal over an underivable atom is always true
//! and is dropped.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::Result;
use crate::network::{Key, TrustNetwork, UserId, Value};
use crate::program::{GroundProgram, GroundRule, Interpretation};
use crate::resolve::ResolutionResult;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AuxTag {
    /// Remaining lower-priority levels of a user's chain.
    Rest,
    /// Choice among equally trusted sources.
    Tie,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Val { user: UserId, value: Value },
    Aux { tag: AuxTag, user: UserId, priority: u32, value: Value },
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Val { user, value } => write!(f, "val({user},{value})"),
            Atom::Aux { tag, user, priority, value } => {
                let tag = match tag {
                    AuxTag::Rest => "rest",
                    AuxTag::Tie => "tie",
                };
                write!(f, "aux({tag},{user},{priority},{value})")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Node {
    User(UserId),
    Aux(AuxTag, UserId, u32),
}

impl Node {
    fn atom(&self, value: &Value) -> Atom {
        match self {
            Node::User(u) => Atom::Val { user: u.clone(), value: value.clone() },
            Node::Aux(tag, u, p) => Atom::Aux { tag: *tag, user: u.clone(), priority: *p, value: value.clone() },
        }
    }
}

enum Def {
    Fact(Value),
    Copy(Node),
    Tie(Vec<Node>),
    Prefer { preferred: Node, fallback: Node },
}

impl Def {
    fn inputs(&self) -> Vec<&Node> {
        match self {
            Def::Fact(_) => vec![],
            Def::Copy(n) => vec![n],
            Def::Tie(ns) => ns.iter().collect(),
            Def::Prefer { preferred, fallback } => vec![preferred, fallback],
        }
    }
}

fn definitions(net: &TrustNetwork, key: &Key) -> BTreeMap<Node, Def> {
    let mut sources: BTreeMap<&UserId, BTreeMap<u32, Vec<&UserId>>> = BTreeMap::new();
    let mappings: Vec<_> = net.mappings().collect();
    for m in &mappings {
        sources.entry(&m.target).or_default().entry(m.priority).or_default().push(&m.source);
    }
    let mut defs = BTreeMap::new();
    for user in net.users() {
        if let Some(v) = net.belief(user, key) {
            defs.insert(Node::User(user.clone()), Def::Fact(v.clone()));
            continue;
        }
        let Some(by_priority) = sources.get(user) else { continue };
        // highest priority first
        let levels: Vec<(u32, &Vec<&UserId>)> = by_priority.iter().rev().map(|(p, s)| (*p, s)).collect();
        let single = levels.len() == 1;
        let level_node = |(p, members): (u32, &Vec<&UserId>), defs: &mut BTreeMap<Node, Def>| -> Node {
            if members.len() == 1 {
                return Node::User(members[0].clone());
            }
            let node = if single { Node::User(user.clone()) } else { Node::Aux(AuxTag::Tie, user.clone(), p) };
            let tie = Def::Tie(members.iter().map(|s| Node::User((*s).clone())).collect());
            defs.insert(node.clone(), tie);
            node
        };
        if single {
            let node = level_node(levels[0], &mut defs);
            if node != Node::User(user.clone()) {
                defs.insert(Node::User(user.clone()), Def::Copy(node));
            }
            continue;
        }
        let groups: Vec<Node> = levels.iter().map(|l| level_node(*l, &mut defs)).collect();
        let link = |i: usize| {
            if i == 0 {
                Node::User(user.clone())
            } else if i == levels.len() - 1 {
                groups[i].clone()
            } else {
                Node::Aux(AuxTag::Rest, user.clone(), levels[i].0)
            }
        };
        for i in 0..levels.len() - 1 {
            defs.insert(link(i), Def::Prefer { preferred: groups[i].clone(), fallback: link(i + 1) });
        }
    }
    defs
}

/// Values each node can hold according to positive dependencies alone.
fn derivable(defs: &BTreeMap<Node, Def>) -> BTreeMap<&Node, BTreeSet<Value>> {
    let mut der: BTreeMap<&Node, BTreeSet<Value>> = BTreeMap::new();
    loop {
        let mut changed = false;
        for (node, def) in defs {
            let mut vals: BTreeSet<Value> = match def {
                Def::Fact(v) => [v.clone()].into(),
                _ => def.inputs().into_iter().filter_map(|n| der.get(n)).flat_map(|s| s.iter().cloned()).collect(),
            };
            let slot = der.entry(node).or_default();
            if vals.len() != slot.len() {
                std::mem::swap(slot, &mut vals);
                changed = true;
            }
        }
        if !changed {
            return der;
        }
    }
}

/// Ground program for one key; see the module docs for the rule schema.
pub fn translate_to_program(net: &TrustNetwork, key: &Key) -> GroundProgram<Atom> {
    let defs = definitions(net, key);
    let der = derivable(&defs);
    let empty = BTreeSet::new();
    let values = |n: &Node| der.get(n).unwrap_or(&empty);
    let mut rules = Vec::new();
    for (node, def) in &defs {
        match def {
            Def::Fact(v) => rules.push(GroundRule::fact(node.atom(v))),
            Def::Copy(src) => {
                for v in values(src) {
                    rules.push(GroundRule::new(node.atom(v), [src.atom(v)], []));
                }
            }
            Def::Tie(members) => {
                let own = values(node);
                for m in members {
                    for v in values(m) {
                        let others = own.iter().filter(|w| *w != v).map(|w| node.atom(w));
                        rules.push(GroundRule::new(node.atom(v), [m.atom(v)], others));
                    }
                }
            }
            Def::Prefer { preferred, fallback } => {
                for v in values(preferred) {
                    rules.push(GroundRule::new(node.atom(v), [preferred.atom(v)], []));
                }
                for v in values(fallback) {
                    let blockers = values(preferred).iter().filter(|w| *w != v).map(|w| preferred.atom(w));
                    rules.push(GroundRule::new(node.atom(v), [fallback.atom(v)], blockers));
                }
            }
        }
    }
    GroundProgram::new(rules)
}

/// Possible values are those held in some stable model, certain values those
/// held in every stable model.
pub fn oracle_resolve(net: &TrustNetwork, key: &Key, atom_limit: usize) -> Result<ResolutionResult> {
    let program = translate_to_program(net, key);
    let models = program.enumerate_stable_models(atom_limit)?;
    Ok(result_from_models(key, &models))
}

/// User assignments of one model; each user holds at most one value.
fn user_values(model: &Interpretation<Atom>) -> BTreeMap<&UserId, &Value> {
    let mut out = BTreeMap::new();
    for atom in model {
        if let Atom::Val { user, value } = atom {
            let prev = out.insert(user, value);
            assert!(prev.is_none(), "stable model assigns two values to user {user}");
        }
    }
    out
}

fn result_from_models(key: &Key, models: &[Interpretation<Atom>]) -> ResolutionResult {
    let mut result = ResolutionResult::empty(key.clone());
    result.no_stable_solution = models.is_empty();
    let assignments: Vec<_> = models.iter().map(user_values).collect();
    for a in &assignments {
        for (u, v) in a {
            result.possible.entry((*u).clone()).or_default().insert((*v).clone());
        }
    }
    for (u, vals) in &result.possible {
        if vals.len() == 1 && assignments.iter().all(|a| a.contains_key(u)) {
            result.certain.insert(u.clone(), vals.iter().next().unwrap().clone());
        }
    }
    result
}

/// Number of stable models of the translated instance.
pub fn count_stable_models(net: &TrustNetwork, key: &Key, atom_limit: usize) -> Result<usize> {
    Ok(translate_to_program(net, key).enumerate_stable_models(atom_limit)?.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{ExplicitBelief, TrustMapping};
    use crate::program::DEFAULT_ATOM_LIMIT;

    fn u(s: &str) -> UserId {
        UserId::new(s).unwrap()
    }
    fn v(s: &str) -> Value {
        Value::new(s).unwrap()
    }
    fn k() -> Key {
        Key::new("k").unwrap()
    }
    fn net(users: &[&str], maps: &[(&str, &str, u32)], beliefs: &[(&str, &str)]) -> TrustNetwork {
        TrustNetwork::build(
            users.iter().map(|s| u(s)),
            maps.iter().map(|(t, s, p)| TrustMapping::new(u(t), u(s), *p)),
            beliefs.iter().map(|(x, val)| ExplicitBelief::new(u(x), k(), v(val))),
        )
        .unwrap()
    }
    fn val(user: &str, value: &str) -> Atom {
        Atom::Val { user: u(user), value: v(value) }
    }
    fn models(n: &TrustNetwork) -> Vec<Interpretation<Atom>> {
        translate_to_program(n, &k()).enumerate_stable_models(DEFAULT_ATOM_LIMIT).unwrap()
    }

    /// All interpretations of the universe, stable ones kept.
    fn brute_force(p: &GroundProgram<Atom>) -> Vec<Interpretation<Atom>> {
        let atoms: Vec<_> = p.atom_universe().iter().cloned().collect();
        assert!(atoms.len() <= 16);
        let mut out: Vec<_> = (0u32..1 << atoms.len())
            .map(|mask| atoms.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, a)| a.clone()).collect())
            .filter(|m| p.is_stable_model(m))
            .collect();
        out.sort();
        out
    }

    #[test]
    fn belief_only_network() {
        let n1 = net(&["u1"], &[], &[("u1", "a")]);
        assert_eq!(models(&n1), vec![[val("u1", "a")].into()]);
        let r = oracle_resolve(&n1, &k(), DEFAULT_ATOM_LIMIT).unwrap();
        assert_eq!(r.possible_values(&u("u1")), [v("a")].into());
        assert_eq!(r.certain_value(&u("u1")), Some(&v("a")));
    }

    #[test]
    fn single_trust_edge() {
        let n2 = net(&["u1", "u2"], &[("u2", "u1", 1)], &[("u1", "a")]);
        let p = translate_to_program(&n2, &k());
        let expected: Vec<Interpretation<Atom>> = vec![[val("u1", "a"), val("u2", "a")].into()];
        assert_eq!(brute_force(&p), expected);
        assert_eq!(models(&n2), expected);
    }

    #[test]
    fn priority_and_tie() {
        // N3: higher priority wins
        let n3 = net(&["u1", "u2", "u3"], &[("u3", "u1", 2), ("u3", "u2", 1)], &[("u1", "a"), ("u2", "b")]);
        let p = translate_to_program(&n3, &k());
        assert_eq!(brute_force(&p), models(&n3));
        let r = oracle_resolve(&n3, &k(), DEFAULT_ATOM_LIMIT).unwrap();
        assert_eq!(r.possible_values(&u("u3")), [v("a")].into());
        assert_eq!(r.certain_value(&u("u3")), Some(&v("a")));

        // N4: equal priorities give one model per value
        let n4 = net(&["u1", "u2", "u3"], &[("u3", "u1", 1), ("u3", "u2", 1)], &[("u1", "a"), ("u2", "b")]);
        let p = translate_to_program(&n4, &k());
        let ms = brute_force(&p);
        assert_eq!(ms, models(&n4));
        assert_eq!(ms.len(), 2);
        assert!(ms.iter().any(|m| m.contains(&val("u3", "a"))));
        assert!(ms.iter().any(|m| m.contains(&val("u3", "b"))));
        let r = oracle_resolve(&n4, &k(), DEFAULT_ATOM_LIMIT).unwrap();
        assert_eq!(r.possible_values(&u("u3")), [v("a"), v("b")].into());
        assert_eq!(r.certain_value(&u("u3")), None);
    }

    #[test]
    fn mutual_trust_cycle_takes_either_entry() {
        // u3 and u4 prefer each other and fall back to one believer each
        let n = net(
            &["u1", "u2", "u3", "u4"],
            &[("u3", "u4", 2), ("u3", "u1", 1), ("u4", "u3", 2), ("u4", "u2", 1)],
            &[("u1", "a"), ("u2", "b")],
        );
        let ms = models(&n);
        assert_eq!(ms, brute_force(&translate_to_program(&n, &k())));
        assert_eq!(ms.len(), 2);
        for m in &ms {
            let a = m.contains(&val("u3", "a")) && m.contains(&val("u4", "a"));
            let b = m.contains(&val("u3", "b")) && m.contains(&val("u4", "b"));
            assert!(a ^ b);
        }
    }

    #[test]
    fn unsupported_cycle_holds_nothing() {
        let n = net(&["u1", "u2", "u3"], &[("u1", "u2", 1), ("u2", "u1", 1)], &[("u3", "a")]);
        let r = oracle_resolve(&n, &k(), DEFAULT_ATOM_LIMIT).unwrap();
        assert!(!r.possible.contains_key(&u("u1")));
        assert!(!r.no_stable_solution);
    }

    #[test]
    fn three_levels_use_rest_links() {
        let n = net(&["a", "b", "c", "x"], &[("x", "a", 3), ("x", "b", 2), ("x", "c", 1)], &[("c", "v1")]);
        let p = translate_to_program(&n, &k());
        assert!(p.atom_universe().iter().any(|a| matches!(a, Atom::Aux { tag: AuxTag::Rest, .. })));
        let r = oracle_resolve(&n, &k(), DEFAULT_ATOM_LIMIT).unwrap();
        assert_eq!(r.certain_value(&u("x")), Some(&v("v1")));
    }

    #[test]
    fn golden_dump() {
        let n4 = net(&["u1", "u2", "u3"], &[("u3", "u1", 1), ("u3", "u2", 1)], &[("u1", "a"), ("u2", "b")]);
        let text = translate_to_program(&n4, &k()).to_string();
        let expected = "\
val(u1,a).
val(u2,b).
val(u3,a) :- val(u1,a), not val(u3,b) .
val(u3,b) :- val(u2,b), not val(u3,a) .
";
        assert_eq!(text, expected);

        let n = net(&["p", "q", "r", "x"], &[("x", "p", 5), ("x", "q", 5), ("x", "r", 1)], &[("p", "a"), ("r", "b")]);
        let text = translate_to_program(&n, &k()).to_string();
        let expected = "\
val(p,a).
val(r,b).
val(x,a) :- aux(tie,x,5,a) .
val(x,b) :- val(r,b), not aux(tie,x,5,a) .
aux(tie,x,5,a) :- val(p,a) .
";
        assert_eq!(text, expected);
    }

    #[test]
    fn limit_is_enforced() {
        let n4 = net(&["u1", "u2", "u3"], &[("u3", "u1", 1), ("u3", "u2", 1)], &[("u1", "a"), ("u2", "b")]);
        assert!(matches!(oracle_resolve(&n4, &k(), 3), Err(crate::Error::DomainTooLarge { atoms: 4, limit: 3 })));
    }
}
