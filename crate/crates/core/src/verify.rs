//! Engine-versus-oracle equivalence sweeps over small networks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::network::{ExplicitBelief, Key, TrustMapping, TrustNetwork, UserId, Value};
use crate::oracle::oracle_resolve;
use crate::resolve::{resolve, ResolutionResult};

/// Atom ceiling used by sweeps; small instances stay well below it.
pub const SWEEP_ATOM_LIMIT: usize = 96;

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub systematic: bool,
    pub random_instances: usize,
    pub max_random_users: usize,
    pub max_random_values: usize,
    pub seed: u64,
    pub atom_limit: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            systematic: true,
            random_instances: 1000,
            max_random_users: 6,
            max_random_values: 3,
            seed: 0,
            atom_limit: SWEEP_ATOM_LIMIT,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Mismatch {
    pub network: TrustNetwork,
    pub key: Key,
    pub engine: ResolutionResult,
    pub oracle: ResolutionResult,
}

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    pub systematic_checked: usize,
    pub random_checked: usize,
    pub mismatches: Vec<Mismatch>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

pub fn sweep_key() -> Key {
    Key::new("k").unwrap()
}

fn user(i: usize) -> UserId {
    UserId::new(format!("u{i}")).unwrap()
}

fn value(i: usize) -> Value {
    Value::new(["a", "b", "c", "d"][i]).unwrap()
}

/// Builds a network from user count, (target, source, priority) index triples
/// and per-user belief value indices.
pub fn small_network(n: usize, edges: &[(usize, usize, u32)], beliefs: &[Option<usize>]) -> TrustNetwork {
    TrustNetwork::build(
        (0..n).map(user),
        edges.iter().map(|&(t, s, p)| TrustMapping::new(user(t), user(s), p)),
        beliefs.iter().enumerate().filter_map(|(i, b)| b.map(|v| ExplicitBelief::new(user(i), sweep_key(), value(v)))),
    )
    .expect("generated instance is valid")
}

/// Compares engine and oracle on one instance.
pub fn check_instance(net: &TrustNetwork, key: &Key, atom_limit: usize) -> Result<Option<Mismatch>> {
    let oracle = oracle_resolve(net, key, atom_limit)?;
    let engine = resolve(net, key);
    Ok((engine != oracle).then(|| Mismatch { network: net.clone(), key: key.clone(), engine, oracle }))
}

/// Counts `digits` base-`base` numbers, least significant digit first.
fn odometer(base: usize, digits: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = base.checked_pow(digits as u32).expect("grid size fits");
    (0..total).map(move |mut x| {
        (0..digits)
            .map(|_| {
                let d = x % base;
                x /= base;
                d
            })
            .collect()
    })
}

/// The systematic grid, with at most five users and two values:
///
/// * up to three users: every mapping absent or at priority 1 or 2, every
///   user without a belief or believing `a` or `b`;
/// * four users: every mapping absent or at priority 1, every belief pattern;
/// * four users, two believers (`a`/`b`, `a`/`a`, `a`/none), every priority
///   pattern in {absent, 1, 2} on the six mappings into the other two;
/// * five users, believers `u0`/`u1` in conflict or agreement, three
///   belief-free users each trusting at most two of the other four at
///   priority 1 or 2.
pub fn systematic_instances() -> impl Iterator<Item = TrustNetwork> {
    let pairs = |n: usize| -> Vec<(usize, usize)> {
        (0..n).flat_map(|t| (0..n).filter(move |&s| s != t).map(move |s| (t, s))).collect()
    };
    let full = (1..=3usize).flat_map(move |n| {
        let slots = pairs(n);
        odometer(3, slots.len()).flat_map(move |pri| {
            let edges: Vec<_> =
                slots.iter().zip(&pri).filter(|(_, &p)| p > 0).map(|(&(t, s), &p)| (t, s, p as u32)).collect();
            odometer(3, n).map(move |b| {
                let beliefs: Vec<_> = b.iter().map(|&x| x.checked_sub(1)).collect();
                small_network(n, &edges, &beliefs)
            })
        })
    });
    let four_flat = {
        let slots = pairs(4);
        odometer(2, slots.len()).flat_map(move |pri| {
            let edges: Vec<_> = slots.iter().zip(&pri).filter(|(_, &p)| p > 0).map(|(&(t, s), _)| (t, s, 1)).collect();
            odometer(3, 4).map(move |b| {
                let beliefs: Vec<_> = b.iter().map(|&x| x.checked_sub(1)).collect();
                small_network(4, &edges, &beliefs)
            })
        })
    };
    let four_prio = {
        let slots: Vec<_> = pairs(4).into_iter().filter(|&(t, _)| t >= 2).collect();
        let patterns = [[Some(0), Some(1)], [Some(0), Some(0)], [Some(0), None]];
        odometer(3, slots.len()).flat_map(move |pri| {
            let edges: Vec<_> =
                slots.iter().zip(&pri).filter(|(_, &p)| p > 0).map(|(&(t, s), &p)| (t, s, p as u32)).collect();
            patterns.into_iter().map(move |[b0, b1]| small_network(4, &edges, &[b0, b1, None, None]))
        })
    };
    let five = {
        // per belief-free user: choose up to two sources among the other four,
        // each at priority 1 or 2
        let mut per_user: Vec<Vec<Vec<(usize, u32)>>> = Vec::new();
        for t in 2..5 {
            let others: Vec<usize> = (0..5).filter(|&s| s != t).collect();
            let mut opts = vec![vec![]];
            for (i, &a) in others.iter().enumerate() {
                for pa in 1..=2 {
                    opts.push(vec![(a, pa)]);
                    for &b in &others[i + 1..] {
                        for pb in 1..=2 {
                            opts.push(vec![(a, pa), (b, pb)]);
                        }
                    }
                }
            }
            per_user.push(opts);
        }
        let sizes: Vec<usize> = per_user.iter().map(Vec::len).collect();
        let total: usize = sizes.iter().product();
        (0..total).flat_map(move |mut x| {
            let mut edges = Vec::new();
            for (j, opts) in per_user.iter().enumerate() {
                let pick = &opts[x % sizes[j]];
                x /= sizes[j];
                edges.extend(pick.iter().map(|&(s, p)| (j + 2, s, p)));
            }
            [Some(1), Some(0)].into_iter().map(move |b1| small_network(5, &edges, &[Some(0), b1, None, None, None]))
        })
    };
    full.chain(four_flat).chain(four_prio).chain(five)
}

/// A random network with 1..=max_users users and values drawn from
/// `max_values` tokens; priorities in 1..=3, so ties are frequent.
pub fn random_instance(rng: &mut impl Rng, max_users: usize, max_values: usize) -> TrustNetwork {
    let n = rng.gen_range(1..=max_users);
    let density: f64 = rng.gen_range(0.15..0.7);
    let mut edges = Vec::new();
    for t in 0..n {
        for s in 0..n {
            if s != t && rng.gen_bool(density) {
                edges.push((t, s, rng.gen_range(1..=3)));
            }
        }
    }
    let belief_rate: f64 = rng.gen_range(0.1..0.6);
    let beliefs: Vec<_> = (0..n).map(|_| rng.gen_bool(belief_rate).then(|| rng.gen_range(0..max_values))).collect();
    small_network(n, &edges, &beliefs)
}

pub fn run(config: &VerifyConfig) -> Result<VerifyReport> {
    let key = sweep_key();
    let mut report = VerifyReport::default();
    if config.systematic {
        for net in systematic_instances() {
            report.systematic_checked += 1;
            if let Some(m) = check_instance(&net, &key, config.atom_limit)? {
                report.mismatches.push(m);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for _ in 0..config.random_instances {
        let net = random_instance(&mut rng, config.max_random_users, config.max_random_values);
        report.random_checked += 1;
        if let Some(m) = check_instance(&net, &key, config.atom_limit)? {
            report.mismatches.push(m);
        }
    }
    Ok(report)
}
