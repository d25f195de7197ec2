//! Trust-network data model.
//!
//! A [`TrustNetwork`] holds users, prioritized trust mappings between them and
//! explicit beliefs about keyed objects. Networks are immutable values: every
//! edit returns a new network, so two edit sequences that arrive at the same
//! sets of users, mappings and beliefs produce equal networks.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

macro_rules! token_type {
    ($(#[$meta:meta])* $name:ident, $check:expr) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "String")]
        pub struct $name(Arc<str>);

        impl $name {
            pub fn new(s: impl Into<String>) -> Result<Self> {
                let s = s.into();
                let check: fn(&str) -> Option<&'static str> = $check;
                match check(&s) {
                    None => Ok(Self(s.into())),
                    Some(why) => Err(Error::InvalidToken(s, why)),
                }
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl TryFrom<String> for $name {
            type Error = Error;
            fn try_from(s: String) -> Result<Self> {
                Self::new(s)
            }
        }

        impl TryFrom<&str> for $name {
            type Error = Error;
            fn try_from(s: &str) -> Result<Self> {
                Self::new(s)
            }
        }

        impl From<$name> for String {
            fn from(t: $name) -> String {
                t.0.to_string()
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                fmt::Debug::fmt(&self.0, f)
            }
        }
    };
}

fn check_user(s: &str) -> Option<&'static str> {
    if s.is_empty() {
        Some("empty")
    } else if s.contains(',') {
        Some("user ids may not contain commas")
    } else if s.chars().any(char::is_whitespace) {
        Some("user ids may not contain whitespace")
    } else {
        None
    }
}

fn check_nonempty(s: &str) -> Option<&'static str> {
    s.is_empty().then_some("empty")
}

token_type!(
    /// Opaque user identifier: non-empty, no commas, no whitespace.
    UserId,
    check_user
);
token_type!(
    /// Identifier of one keyed object.
    Key,
    check_nonempty
);
token_type!(
    /// Opaque value token. Two distinct values for one key are a conflict.
    Value,
    check_nonempty
);

/// `target` trusts `source` with `priority`; a larger number is more trusted.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrustMapping {
    pub target: UserId,
    pub source: UserId,
    pub priority: u32,
}

impl TrustMapping {
    pub fn new(target: UserId, source: UserId, priority: u32) -> Self {
        TrustMapping { target, source, priority }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitBelief {
    pub user: UserId,
    pub key: Key,
    pub value: Value,
}

impl ExplicitBelief {
    pub fn new(user: UserId, key: Key, value: Value) -> Self {
        ExplicitBelief { user, key, value }
    }
}

/// A single insert or revoke operation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Edit {
    InsertBelief(ExplicitBelief),
    RevokeBelief(UserId, Key),
    AddMapping(TrustMapping),
    RevokeMapping(UserId, UserId),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TrustNetwork {
    users: BTreeSet<UserId>,
    /// (target, source) -> priority
    mappings: BTreeMap<(UserId, UserId), u32>,
    /// (user, key) -> value
    beliefs: BTreeMap<(UserId, Key), Value>,
}

/// On-disk JSON layout. Lists are written in canonical (sorted) order.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    users: Vec<UserId>,
    mappings: Vec<TrustMapping>,
    beliefs: Vec<ExplicitBelief>,
}

impl TrustNetwork {
    /// Validates raw lists into a network.
    pub fn build(
        users: impl IntoIterator<Item = UserId>,
        mappings: impl IntoIterator<Item = TrustMapping>,
        beliefs: impl IntoIterator<Item = ExplicitBelief>,
    ) -> Result<Self> {
        let mut net = TrustNetwork::default();
        for u in users {
            if let Some(dup) = net.users.replace(u) {
                return Err(Error::DuplicateUser(dup.to_string()));
            }
        }
        for m in mappings {
            net.check_mapping(&m)?;
            let pair = (m.target, m.source);
            if net.mappings.contains_key(&pair) {
                return Err(Error::DuplicateMapping(pair.0.to_string(), pair.1.to_string()));
            }
            net.mappings.insert(pair, m.priority);
        }
        for b in beliefs {
            net.check_user(&b.user)?;
            let slot = (b.user, b.key);
            if net.beliefs.contains_key(&slot) {
                return Err(Error::DuplicateBelief { user: slot.0.to_string(), key: slot.1.to_string() });
            }
            net.beliefs.insert(slot, b.value);
        }
        Ok(net)
    }

    fn check_user(&self, u: &UserId) -> Result<()> {
        if self.users.contains(u) {
            Ok(())
        } else {
            Err(Error::UnknownUser(u.to_string()))
        }
    }

    fn check_mapping(&self, m: &TrustMapping) -> Result<()> {
        self.check_user(&m.target)?;
        self.check_user(&m.source)?;
        if m.target == m.source {
            return Err(Error::SelfTrust(m.target.to_string()));
        }
        Ok(())
    }

    /// Adds or replaces the belief of `belief.user` on `belief.key`.
    pub fn insert_belief(&self, belief: ExplicitBelief) -> Result<Self> {
        self.check_user(&belief.user)?;
        let mut net = self.clone();
        net.beliefs.insert((belief.user, belief.key), belief.value);
        Ok(net)
    }

    /// Removes the belief for (user, key); absent beliefs are a no-op.
    pub fn revoke_belief(&self, user: &UserId, key: &Key) -> Self {
        let mut net = self.clone();
        net.beliefs.remove(&(user.clone(), key.clone()));
        net
    }

    /// Adds a mapping, replacing the priority of an existing (target, source) pair.
    pub fn add_mapping(&self, mapping: TrustMapping) -> Result<Self> {
        self.check_mapping(&mapping)?;
        let mut net = self.clone();
        net.mappings.insert((mapping.target, mapping.source), mapping.priority);
        Ok(net)
    }

    pub fn revoke_mapping(&self, target: &UserId, source: &UserId) -> Self {
        let mut net = self.clone();
        net.mappings.remove(&(target.clone(), source.clone()));
        net
    }

    pub fn apply(&self, edit: &Edit) -> Result<Self> {
        match edit {
            Edit::InsertBelief(b) => self.insert_belief(b.clone()),
            Edit::RevokeBelief(u, k) => Ok(self.revoke_belief(u, k)),
            Edit::AddMapping(m) => self.add_mapping(m.clone()),
            Edit::RevokeMapping(t, s) => Ok(self.revoke_mapping(t, s)),
        }
    }

    /// Applies edits left to right.
    pub fn apply_all<'a>(&self, edits: impl IntoIterator<Item = &'a Edit>) -> Result<Self> {
        edits.into_iter().try_fold(self.clone(), |net, e| net.apply(e))
    }

    /// Values appearing in beliefs for `key`.
    pub fn active_domain(&self, key: &Key) -> BTreeSet<Value> {
        self.beliefs.iter().filter(|((_, k), _)| k == key).map(|(_, v)| v.clone()).collect()
    }

    pub fn disjoint_union(&self, other: &TrustNetwork) -> Result<Self> {
        if let Some(u) = self.users.intersection(&other.users).next() {
            return Err(Error::UserOverlap(u.to_string()));
        }
        let mut net = self.clone();
        net.users.extend(other.users.iter().cloned());
        net.mappings.extend(other.mappings.iter().map(|(k, v)| (k.clone(), *v)));
        net.beliefs.extend(other.beliefs.iter().map(|(k, v)| (k.clone(), v.clone())));
        Ok(net)
    }

    pub fn users(&self) -> &BTreeSet<UserId> {
        &self.users
    }

    pub fn contains_user(&self, u: &UserId) -> bool {
        self.users.contains(u)
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_mappings(&self) -> usize {
        self.mappings.len()
    }

    pub fn num_beliefs(&self) -> usize {
        self.beliefs.len()
    }

    /// Mappings ordered by (target, source).
    pub fn mappings(&self) -> impl Iterator<Item = TrustMapping> + '_ {
        self.mappings.iter().map(|((t, s), p)| TrustMapping::new(t.clone(), s.clone(), *p))
    }

    pub fn priority(&self, target: &UserId, source: &UserId) -> Option<u32> {
        self.mappings.get(&(target.clone(), source.clone())).copied()
    }

    /// Beliefs ordered by (user, key).
    pub fn beliefs(&self) -> impl Iterator<Item = ExplicitBelief> + '_ {
        self.beliefs.iter().map(|((u, k), v)| ExplicitBelief::new(u.clone(), k.clone(), v.clone()))
    }

    pub fn belief(&self, user: &UserId, key: &Key) -> Option<&Value> {
        self.beliefs.get(&(user.clone(), key.clone()))
    }

    /// Beliefs on one key as (user, value) pairs.
    pub fn beliefs_for<'a>(&'a self, key: &'a Key) -> impl Iterator<Item = (&'a UserId, &'a Value)> + 'a {
        self.beliefs.iter().filter(move |((_, k), _)| k == key).map(|((u, _), v)| (u, v))
    }

    /// Keys mentioned by at least one belief, in sorted order.
    pub fn keys(&self) -> BTreeSet<Key> {
        self.beliefs.keys().map(|(_, k)| k.clone()).collect()
    }

    /// The same users and mappings with no beliefs.
    pub fn topology(&self) -> Self {
        TrustNetwork { users: self.users.clone(), mappings: self.mappings.clone(), beliefs: BTreeMap::new() }
    }

    pub fn to_json(&self) -> String {
        let file = NetworkFile {
            users: self.users.iter().cloned().collect(),
            mappings: self.mappings().collect(),
            beliefs: self.beliefs().collect(),
        };
        serde_json::to_string_pretty(&file).expect("network serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: NetworkFile = serde_json::from_str(text)?;
        TrustNetwork::build(file.users, file.mappings, file.beliefs)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json();
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn u(s: &str) -> UserId {
        UserId::new(s).unwrap()
    }
    fn k(s: &str) -> Key {
        Key::new(s).unwrap()
    }
    fn v(s: &str) -> Value {
        Value::new(s).unwrap()
    }
    fn belief(user: &str, key: &str, value: &str) -> ExplicitBelief {
        ExplicitBelief::new(u(user), k(key), v(value))
    }
    fn two_users() -> TrustNetwork {
        TrustNetwork::build([u("u1"), u("u2")], [], []).unwrap()
    }

    #[test]
    fn minimal_network() {
        let net = TrustNetwork::build([u("u1")], [], [belief("u1", "k", "a")]).unwrap();
        assert_eq!(net.num_users(), 1);
        assert_eq!(net.num_beliefs(), 1);
    }

    #[test]
    fn build_rejects_invalid_inputs() {
        let err = TrustNetwork::build([u("u1")], [TrustMapping::new(u("u2"), u("u1"), 1)], []);
        assert!(matches!(err, Err(Error::UnknownUser(x)) if x == "u2"));

        let err = TrustNetwork::build([u("u1"), u("u2")], [], [belief("u1", "k", "a"), belief("u1", "k", "b")]);
        assert!(matches!(err, Err(Error::DuplicateBelief { .. })));

        let err = TrustNetwork::build([u("u1")], [TrustMapping::new(u("u1"), u("u1"), 1)], []);
        assert!(matches!(err, Err(Error::SelfTrust(_))));

        let m = TrustMapping::new(u("u2"), u("u1"), 1);
        let err = TrustNetwork::build([u("u1"), u("u2")], [m.clone(), TrustMapping { priority: 3, ..m }], []);
        assert!(matches!(err, Err(Error::DuplicateMapping(..))));

        assert!(matches!(TrustNetwork::build([u("u1"), u("u1")], [], []), Err(Error::DuplicateUser(_))));
        let err = TrustNetwork::build([u("u1")], [], [belief("u7", "k", "a")]);
        assert!(matches!(err, Err(Error::UnknownUser(_))));
    }

    #[test]
    fn equal_priorities_are_permitted() {
        let net = TrustNetwork::build(
            [u("u1"), u("u2"), u("u3")],
            [TrustMapping::new(u("u3"), u("u1"), 1), TrustMapping::new(u("u3"), u("u2"), 1)],
            [],
        );
        assert!(net.is_ok());
    }

    #[test]
    fn token_rules() {
        assert!(UserId::new("").is_err());
        assert!(UserId::new("a,b").is_err());
        assert!(UserId::new("a b").is_err());
        assert!(Value::new("a, b").is_ok());
        assert!(Value::new("").is_err());
        assert!(Key::new("").is_err());
    }

    #[test]
    fn insert_and_replace_belief() {
        let net = two_users().insert_belief(belief("u1", "k", "a")).unwrap();
        assert_eq!(net.num_beliefs(), 1);
        let net = net.insert_belief(belief("u1", "k", "b")).unwrap();
        assert_eq!(net.num_beliefs(), 1);
        assert_eq!(net.belief(&u("u1"), &k("k")), Some(&v("b")));
        assert!(matches!(net.insert_belief(belief("u9", "k", "a")), Err(Error::UnknownUser(_))));
    }

    #[test]
    fn revoke_belief() {
        let base = two_users();
        let net = base.insert_belief(belief("u1", "k", "a")).unwrap();
        assert_eq!(net.revoke_belief(&u("u1"), &k("k")).num_beliefs(), 0);
        assert_eq!(net.revoke_belief(&u("u2"), &k("k")), net);
        assert_eq!(net.revoke_belief(&u("u1"), &k("k")), base);
    }

    #[test]
    fn mappings_add_replace_revoke() {
        let net = two_users().add_mapping(TrustMapping::new(u("u2"), u("u1"), 1)).unwrap();
        assert_eq!(net.num_mappings(), 1);
        let net = net.add_mapping(TrustMapping::new(u("u2"), u("u1"), 5)).unwrap();
        assert_eq!(net.num_mappings(), 1);
        assert_eq!(net.priority(&u("u2"), &u("u1")), Some(5));
        assert_eq!(net.revoke_mapping(&u("u1"), &u("u2")), net);
        assert!(matches!(net.add_mapping(TrustMapping::new(u("u1"), u("u1"), 1)), Err(Error::SelfTrust(_))));
        assert!(matches!(net.add_mapping(TrustMapping::new(u("u1"), u("u3"), 1)), Err(Error::UnknownUser(_))));
    }

    #[test]
    fn active_domain_cases() {
        let net =
            TrustNetwork::build([u("u1"), u("u2")], [], [belief("u1", "k", "a"), belief("u2", "k", "b")]).unwrap();
        assert_eq!(net.active_domain(&k("k")), [v("a"), v("b")].into());
        assert!(net.active_domain(&k("other")).is_empty());
        let agree =
            TrustNetwork::build([u("u1"), u("u2")], [], [belief("u1", "k", "a"), belief("u2", "k", "a")]).unwrap();
        assert_eq!(agree.active_domain(&k("k")), [v("a")].into());
    }

    fn cluster(prefix: &str) -> TrustNetwork {
        let id = |i: usize| u(&format!("{prefix}{i}"));
        TrustNetwork::build(
            (1..=4).map(id),
            [
                TrustMapping::new(id(3), id(4), 1),
                TrustMapping::new(id(3), id(1), 1),
                TrustMapping::new(id(4), id(3), 1),
                TrustMapping::new(id(4), id(2), 1),
            ],
            [ExplicitBelief::new(id(1), k("k"), v("a")), ExplicitBelief::new(id(2), k("k"), v("b"))],
        )
        .unwrap()
    }

    #[test]
    fn disjoint_union_cases() {
        let a = cluster("a");
        let b = cluster("b");
        let both = a.disjoint_union(&b).unwrap();
        assert_eq!(both.num_users(), 8);
        assert_eq!(both.num_mappings(), 8);
        assert_eq!(both.num_beliefs(), 4);
        assert_eq!(a.disjoint_union(&TrustNetwork::default()).unwrap(), a);
        assert!(matches!(a.disjoint_union(&a), Err(Error::UserOverlap(_))));
    }

    #[test]
    fn json_round_trip_and_unknown_fields() {
        let net = cluster("c");
        let text = net.to_json();
        let back = TrustNetwork::from_json(&text).unwrap();
        assert_eq!(back, net);
        assert_eq!(back.to_json(), text);

        let bad = r#"{"users":["u1"],"mappings":[],"beliefs":[],"extra":1}"#;
        assert!(matches!(TrustNetwork::from_json(bad), Err(Error::Parse(_))));
        let bad = r#"{"users":["u1"],"mappings":[{"target":"u1","source":"u2","priority":1,"x":0}],"beliefs":[]}"#;
        assert!(matches!(TrustNetwork::from_json(bad), Err(Error::Parse(_))));
        let ok = r#"{"users":["u1","u2"],"mappings":[{"target":"u2","source":"u1","priority":1}],"beliefs":[{"user":"u1","key":"k1","value":"a"}]}"#;
        assert_eq!(TrustNetwork::from_json(ok).unwrap().num_mappings(), 1);
    }

    #[test]
    fn build_is_idempotent() {
        let net = cluster("z");
        let again = TrustNetwork::build(net.users().iter().cloned(), net.mappings(), net.beliefs()).unwrap();
        assert_eq!(again, net);
    }
}
