//! Seed-deterministic workload generators.
//!
//! All randomness comes from a ChaCha8 stream seeded with the 64-bit seed
//! (`ChaCha8Rng::seed_from_u64`), so a generator's output is a pure function
//! of its parameters and seed on every platform. Generated beliefs use the key
//! `k` and values drawn from the ten tokens `v0`..`v9`.

use std::fmt;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bulk::{PossRole, PossRow, PossTable};
use crate::error::{Error, Result};
use crate::network::{Edit, ExplicitBelief, Key, TrustMapping, TrustNetwork, UserId, Value};

pub const VALUE_RANGE: usize = 10;
/// Random priorities are drawn uniformly from `1..=MAX_PRIORITY`.
pub const MAX_PRIORITY: u32 = 10;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn default_key() -> Key {
    Key::new("k").unwrap()
}

fn id(s: String) -> UserId {
    UserId::new(s).expect("generated ids are valid")
}

fn value(i: usize) -> Value {
    Value::new(format!("v{i}")).unwrap()
}

fn two_distinct_values(rng: &mut impl Rng) -> (Value, Value) {
    let a = rng.gen_range(0..VALUE_RANGE);
    let b = (a + rng.gen_range(1..VALUE_RANGE)) % VALUE_RANGE;
    (value(a), value(b))
}

/// `n_clusters` disconnected 4-user clusters. In each, users 1 and 2 believe
/// two distinct values; users 3 and 4 trust each other and also trust user 1
/// (resp. 2), all at the same priority.
pub fn gen_cycle_clusters(n_clusters: usize, seed: u64) -> TrustNetwork {
    assert!(n_clusters >= 1, "need at least one cluster");
    let mut rng = rng(seed);
    let key = default_key();
    let mut users = Vec::with_capacity(4 * n_clusters);
    let mut mappings = Vec::with_capacity(4 * n_clusters);
    let mut beliefs = Vec::with_capacity(2 * n_clusters);
    for c in 0..n_clusters {
        let x: Vec<UserId> = (1..=4).map(|j| id(format!("c{c}x{j}"))).collect();
        let (a, b) = two_distinct_values(&mut rng);
        mappings.push(TrustMapping::new(x[2].clone(), x[3].clone(), 1));
        mappings.push(TrustMapping::new(x[2].clone(), x[0].clone(), 1));
        mappings.push(TrustMapping::new(x[3].clone(), x[2].clone(), 1));
        mappings.push(TrustMapping::new(x[3].clone(), x[1].clone(), 1));
        beliefs.push(ExplicitBelief::new(x[0].clone(), key.clone(), a));
        beliefs.push(ExplicitBelief::new(x[1].clone(), key.clone(), b));
        users.extend(x);
    }
    TrustNetwork::build(users, mappings, beliefs).expect("cluster network is valid")
}

/// Preferential-attachment digraph over users `n0..n{n-1}`.
///
/// Each arriving user links to `edges_per_node` distinct earlier users chosen
/// with probability proportional to (in-degree + 1), where in-degree counts
/// the users trusting a user. Four links in five make the newcomer trust the
/// chosen user; the rest point the other way, which closes cycles. Priorities
/// are uniform in `1..=MAX_PRIORITY`; every user believes a random value with
/// probability 1/2.
pub fn gen_scale_free(n_nodes: usize, edges_per_node: usize, seed: u64) -> TrustNetwork {
    assert!(n_nodes >= 2 && edges_per_node >= 1);
    let mut rng = rng(seed);
    let users: Vec<UserId> = (0..n_nodes).map(|i| id(format!("n{i}"))).collect();
    // each user appears (in-degree + 1) times
    let mut tickets: Vec<usize> = vec![0];
    let mut mappings = Vec::with_capacity(n_nodes * edges_per_node);
    let mut chosen = Vec::with_capacity(edges_per_node);
    for i in 1..n_nodes {
        chosen.clear();
        let want = edges_per_node.min(i);
        while chosen.len() < want {
            let t = tickets[rng.gen_range(0..tickets.len())];
            if !chosen.contains(&t) {
                chosen.push(t);
            }
        }
        for &t in &chosen {
            let priority = rng.gen_range(1..=MAX_PRIORITY);
            if rng.gen_bool(0.8) {
                mappings.push(TrustMapping::new(users[i].clone(), users[t].clone(), priority));
                tickets.push(t);
            } else {
                mappings.push(TrustMapping::new(users[t].clone(), users[i].clone(), priority));
                tickets.push(i);
            }
        }
        tickets.push(i);
    }
    let key = default_key();
    let beliefs: Vec<_> = users
        .iter()
        .filter_map(|u| {
            rng.gen_bool(0.5).then(|| ExplicitBelief::new(u.clone(), key.clone(), value(rng.gen_range(0..VALUE_RANGE))))
        })
        .collect();
    TrustNetwork::build(users, mappings, beliefs).expect("scale-free network is valid")
}

/// Keeps a uniformly random `fraction` of the mappings (rounded to the nearest
/// count) together with both endpoints of every kept mapping and their beliefs.
pub fn sample_edges(net: &TrustNetwork, fraction: f64, seed: u64) -> TrustNetwork {
    assert!(fraction > 0.0 && fraction <= 1.0, "fraction must lie in (0, 1]");
    if fraction >= 1.0 {
        return net.clone();
    }
    let all: Vec<TrustMapping> = net.mappings().collect();
    let keep = (fraction * all.len() as f64).round() as usize;
    let mut picked = sample(&mut rng(seed), all.len(), keep).into_vec();
    picked.sort_unstable();
    let kept: Vec<TrustMapping> = picked.into_iter().map(|i| all[i].clone()).collect();
    let users: std::collections::BTreeSet<UserId> =
        kept.iter().flat_map(|m| [m.target.clone(), m.source.clone()]).collect();
    let beliefs: Vec<_> = net.beliefs().filter(|b| users.contains(&b.user)).collect();
    TrustNetwork::build(users, kept, beliefs).expect("sample of a valid network is valid")
}

/// Worst-case family: a ladder of rings. Two believers `s0`, `s1` hold
/// distinct values; the remaining users form rings of four (the last ring
/// takes the remainder) in which every user trusts its predecessor at
/// priority 2. Ring `j` is linked to ring `j - 1` by two rungs at priority 1
/// (positions 0 and 2), and ring 0 hangs off the two believers the same way.
///
/// Every ring is a strongly connected block that can only be settled after
/// the ring before it, so resolution needs one component round per ring.
pub fn gen_nested_cycles(n_users: usize, seed: u64) -> TrustNetwork {
    assert!(n_users >= 8, "nested family needs at least 8 users");
    let mut rng = rng(seed);
    let (a, b) = two_distinct_values(&mut rng);
    let key = default_key();
    let s0 = id("s0".into());
    let s1 = id("s1".into());
    let ring_users = n_users - 2;
    let rings = ring_users / 4;
    let mut users = vec![s0.clone(), s1.clone()];
    let mut mappings = Vec::new();
    let mut prev: Vec<UserId> = Vec::new();
    for j in 0..rings {
        let size = if j + 1 == rings { ring_users - 4 * j } else { 4 };
        let ring: Vec<UserId> = (0..size).map(|i| id(format!("q{j}_{i}"))).collect();
        for i in 0..size {
            mappings.push(TrustMapping::new(ring[i].clone(), ring[(i + size - 1) % size].clone(), 2));
        }
        let (up0, up2) = if j == 0 { (s0.clone(), s1.clone()) } else { (prev[0].clone(), prev[2].clone()) };
        mappings.push(TrustMapping::new(ring[0].clone(), up0, 1));
        mappings.push(TrustMapping::new(ring[2].clone(), up2, 1));
        users.extend(ring.iter().cloned());
        prev = ring;
    }
    let beliefs = [ExplicitBelief::new(s0, key.clone(), a), ExplicitBelief::new(s1, key, b)];
    TrustNetwork::build(users, mappings, beliefs).expect("nested network is valid")
}

/// Fixed 7-user, 12-mapping topology for bulk experiments; `u1` and `u2`
/// are the designated believers.
pub fn bulk_topology() -> TrustNetwork {
    let u = |i: usize| id(format!("u{i}"));
    let m = |t: usize, s: usize, p: u32| TrustMapping::new(u(t), u(s), p);
    TrustNetwork::build(
        (1..=7).map(u),
        [
            m(3, 1, 2),
            m(3, 2, 1),
            m(4, 2, 2),
            m(4, 1, 1),
            m(5, 3, 1),
            m(5, 4, 1),
            m(6, 7, 2),
            m(6, 3, 1),
            m(7, 6, 2),
            m(7, 3, 1),
            m(1, 3, 1),
            m(2, 4, 1),
        ],
        [],
    )
    .expect("bulk topology is valid")
}

/// Beliefs of `u1` and `u2` on `n_objects` keys; exactly
/// `floor(conflict_fraction * n_objects)` keys get two distinct values, the
/// others one shared value.
pub fn gen_bulk_workload(n_objects: usize, conflict_fraction: f64, seed: u64) -> PossTable {
    assert!((0.0..=1.0).contains(&conflict_fraction));
    let mut rng = rng(seed);
    let conflicting = (conflict_fraction * n_objects as f64).floor() as usize;
    let mut in_conflict = vec![false; n_objects];
    for i in sample(&mut rng, n_objects, conflicting) {
        in_conflict[i] = true;
    }
    let (u1, u2) = (id("u1".into()), id("u2".into()));
    let mut rows = Vec::with_capacity(2 * n_objects);
    for (i, conflict) in in_conflict.into_iter().enumerate() {
        let key = Key::new(format!("o{i:07}")).unwrap();
        let (a, b) = if conflict {
            two_distinct_values(&mut rng)
        } else {
            let v = value(rng.gen_range(0..VALUE_RANGE));
            (v.clone(), v)
        };
        rows.push(PossRow { user: u1.clone(), key: key.clone(), value: a });
        rows.push(PossRow { user: u2.clone(), key, value: b });
    }
    PossTable::new(rows, PossRole::Input).expect("workload is valid")
}

/// `n_ops` edits on distinct belief slots (keys `k` and `k2`) and mapping
/// slots of `net`, plus a few exact duplicates. Edits on distinct slots
/// commute, so every ordering reaches the same network.
pub fn random_edits(net: &TrustNetwork, n_ops: usize, rng: &mut impl Rng) -> Vec<Edit> {
    let users: Vec<&UserId> = net.users().iter().collect();
    let keys = [default_key(), Key::new("k2").unwrap()];
    let mut touched = std::collections::HashSet::new();
    let mut edits = Vec::with_capacity(n_ops);
    let mut attempts = 0;
    while edits.len() < n_ops && attempts < 50 * n_ops + 50 && !users.is_empty() {
        attempts += 1;
        let a = users[rng.gen_range(0..users.len())];
        if rng.gen_bool(0.5) {
            let key = &keys[rng.gen_range(0..keys.len())];
            if !touched.insert((a.clone(), Some(key.clone()), None)) {
                continue;
            }
            edits.push(if rng.gen_bool(0.7) {
                Edit::InsertBelief(ExplicitBelief::new(a.clone(), key.clone(), value(rng.gen_range(0..VALUE_RANGE))))
            } else {
                Edit::RevokeBelief(a.clone(), key.clone())
            });
        } else {
            let b = users[rng.gen_range(0..users.len())];
            if a == b || !touched.insert((a.clone(), None, Some(b.clone()))) {
                continue;
            }
            edits.push(if rng.gen_bool(0.7) {
                Edit::AddMapping(TrustMapping::new(a.clone(), b.clone(), rng.gen_range(1..=MAX_PRIORITY)))
            } else {
                Edit::RevokeMapping(a.clone(), b.clone())
            });
        }
    }
    let dups: Vec<Edit> = edits.iter().filter(|_| rng.gen_bool(0.1)).cloned().collect();
    edits.extend(dups);
    edits
}

/// A generator invocation: family, parameters and seed.
#[derive(Clone, Debug, PartialEq)]
pub enum GenSpec {
    Cycles { clusters: usize, seed: u64 },
    ScaleFree { nodes: usize, edges_per_node: usize, fraction: f64, seed: u64 },
    Nested { users: usize, seed: u64 },
    Bulk { objects: usize, conflict_fraction: f64, seed: u64 },
}

/// What a spec generates.
#[derive(Clone, Debug)]
pub enum Workload {
    Network(TrustNetwork),
    Bulk { topology: TrustNetwork, beliefs: PossTable },
}

impl GenSpec {
    pub fn family(&self) -> &'static str {
        match self {
            GenSpec::Cycles { .. } => "cycles",
            GenSpec::ScaleFree { .. } => "scalefree",
            GenSpec::Nested { .. } => "nested",
            GenSpec::Bulk { .. } => "bulk",
        }
    }

    /// Rejects parameters the generators cannot honour.
    pub fn validate(&self) -> Result<()> {
        let problem = match *self {
            GenSpec::Cycles { clusters: 0, .. } => Some("cycles need at least one cluster".to_string()),
            GenSpec::ScaleFree { nodes, edges_per_node, fraction, .. } => {
                if nodes < 2 || edges_per_node == 0 {
                    Some("scale-free graphs need at least 2 nodes and 1 edge per node".into())
                } else if !(fraction > 0.0 && fraction <= 1.0) {
                    Some(format!("fraction must lie in (0, 1], got {fraction}"))
                } else {
                    None
                }
            }
            GenSpec::Nested { users, .. } if users < 8 => Some("nested family needs at least 8 users".into()),
            GenSpec::Bulk { conflict_fraction, .. } if !(0.0..=1.0).contains(&conflict_fraction) => {
                Some(format!("conflict fraction must lie in [0, 1], got {conflict_fraction}"))
            }
            _ => None,
        };
        problem.map_or(Ok(()), |p| Err(Error::Usage(p)))
    }

    /// Panics on parameters that [`GenSpec::validate`] rejects.
    pub fn generate(&self) -> Workload {
        match *self {
            GenSpec::Cycles { clusters, seed } => Workload::Network(gen_cycle_clusters(clusters, seed)),
            GenSpec::ScaleFree { nodes, edges_per_node, fraction, seed } => {
                let net = gen_scale_free(nodes, edges_per_node, seed);
                Workload::Network(sample_edges(&net, fraction, seed.wrapping_add(1)))
            }
            GenSpec::Nested { users, seed } => Workload::Network(gen_nested_cycles(users, seed)),
            GenSpec::Bulk { objects, conflict_fraction, seed } => Workload::Bulk {
                topology: bulk_topology(),
                beliefs: gen_bulk_workload(objects, conflict_fraction, seed),
            },
        }
    }
}

/// Compact summary used in the `family` column of bench CSV files, e.g.
/// `cycles(clusters=8;seed=1)`.
impl fmt::Display for GenSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenSpec::Cycles { clusters, seed } => write!(f, "cycles(clusters={clusters};seed={seed})"),
            GenSpec::ScaleFree { nodes, edges_per_node, fraction, seed } => {
                write!(f, "scalefree(nodes={nodes};m={edges_per_node};fraction={fraction};seed={seed})")
            }
            GenSpec::Nested { users, seed } => write!(f, "nested(users={users};seed={seed})"),
            GenSpec::Bulk { objects, conflict_fraction, seed } => {
                write!(f, "bulk(objects={objects};conflicts={conflict_fraction};seed={seed})")
            }
        }
    }
}
