//! Polynomial-time conflict resolution.
//!
//! Every belief-free user is expanded into the same preference chain the
//! oracle translation uses (tie nodes for equally trusted sources, fall-through
//! links for lower priority levels), restricted to sources that can reach a
//! belief at all. Nodes are then *closed* one batch at a time:
//!
//! 1. a node whose deciding inputs (its preferred input, or every member of a
//!    tie) are closed takes the union of their possible values;
//! 2. when no node qualifies, the open nodes are split into strongly connected
//!    components; each component without open inputs from outside takes the
//!    union of the possible values of all its closed inputs.
//!
//! Step 2 recomputes components over every open node, so a long chain of
//! cycles that unlock one another one at a time costs quadratic time; on
//! typical networks a handful of rounds suffice.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;
use std::rc::Rc;

use crate::error::Result;
use crate::network::{Key, TrustNetwork, UserId, Value};
use crate::scc::{tarjan, Csr};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolutionResult {
    pub key: Key,
    /// Users with a non-empty set of possible values.
    pub possible: BTreeMap<UserId, BTreeSet<Value>>,
    pub certain: BTreeMap<UserId, Value>,
    pub no_stable_solution: bool,
}

impl ResolutionResult {
    pub fn empty(key: Key) -> Self {
        ResolutionResult { key, possible: BTreeMap::new(), certain: BTreeMap::new(), no_stable_solution: false }
    }

    pub fn possible_values(&self, user: &UserId) -> BTreeSet<Value> {
        self.possible.get(user).cloned().unwrap_or_default()
    }

    pub fn certain_value(&self, user: &UserId) -> Option<&Value> {
        self.certain.get(user)
    }

    /// The same result restricted to `users`.
    pub fn restrict_to(&self, users: &BTreeSet<UserId>) -> Self {
        ResolutionResult {
            key: self.key.clone(),
            possible: self
                .possible
                .iter()
                .filter(|(u, _)| users.contains(*u))
                .map(|(u, s)| (u.clone(), s.clone()))
                .collect(),
            certain: self
                .certain
                .iter()
                .filter(|(u, _)| users.contains(*u))
                .map(|(u, v)| (u.clone(), v.clone()))
                .collect(),
            no_stable_solution: self.no_stable_solution,
        }
    }

    /// `user,key,value,certain`, one row per possible value, sorted by (user, value).
    pub fn to_csv(&self) -> String {
        let mut out = Vec::new();
        if self.no_stable_solution {
            out.extend_from_slice(b"# no_stable_solution\n");
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["user", "key", "value", "certain"]).expect("in-memory write");
        for (user, values) in &self.possible {
            let certain = if self.certain.contains_key(user) { "true" } else { "false" };
            for v in values {
                w.write_record([user.as_str(), self.key.as_str(), v.as_str(), certain]).expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 tokens")
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Several results in one table: a `# no_stable_solution <key>` line for each
/// key without a solution, then one header and the rows of each result in order.
pub fn results_to_csv(results: &[ResolutionResult]) -> String {
    let mut out = String::new();
    for r in results.iter().filter(|r| r.no_stable_solution) {
        out.push_str(&format!("# no_stable_solution {}\n", r.key));
    }
    out.push_str("user,key,value,certain\n");
    for r in results {
        let mut plain = r.clone();
        plain.no_stable_solution = false;
        let csv = plain.to_csv();
        out.push_str(csv.split_once('\n').map_or("", |(_, rows)| rows));
    }
    out
}

pub type ValueSet = Rc<[u32]>;

/// Users and mappings of a network indexed for repeated resolution.
#[derive(Clone, Debug)]
pub struct Topology {
    users: Vec<UserId>,
    index: HashMap<UserId, usize>,
    /// sources of each user as (priority, source), highest priority first
    sources: Vec<Vec<(u32, usize)>>,
    /// users trusting each user
    consumers: Vec<Vec<usize>>,
}

#[derive(Clone, Debug)]
enum Kind {
    Fixed(u32),
    Silent,
    Copy(usize),
    Tie(Vec<usize>),
    Prefer { preferred: usize, fallback: usize },
}

impl Kind {
    fn deciding(&self) -> &[usize] {
        match self {
            Kind::Copy(p) => std::slice::from_ref(p),
            Kind::Tie(ms) => ms,
            Kind::Prefer { preferred, .. } => std::slice::from_ref(preferred),
            Kind::Fixed(_) | Kind::Silent => &[],
        }
    }

    fn inputs(&self) -> impl Iterator<Item = usize> + '_ {
        let fallback = match self {
            Kind::Prefer { fallback, .. } => Some(*fallback),
            _ => None,
        };
        self.deciding().iter().copied().chain(fallback)
    }
}

impl Topology {
    pub fn new(net: &TrustNetwork) -> Self {
        let users: Vec<UserId> = net.users().iter().cloned().collect();
        let index: HashMap<UserId, usize> = users.iter().enumerate().map(|(i, u)| (u.clone(), i)).collect();
        let mut sources = vec![Vec::new(); users.len()];
        let mut consumers = vec![Vec::new(); users.len()];
        for m in net.mappings() {
            let (t, s) = (index[&m.target], index[&m.source]);
            sources[t].push((m.priority, s));
            consumers[s].push(t);
        }
        for s in &mut sources {
            s.sort_unstable_by(|a, b| b.cmp(a));
        }
        Topology { users, index, sources, consumers }
    }

    pub fn users(&self) -> &[UserId] {
        &self.users
    }

    pub fn user_index(&self, user: &UserId) -> Option<usize> {
        self.index.get(user).copied()
    }

    /// Possible value ids of every user given per-user belief ids. Results
    /// are ascending; an empty set means the user can hold no value.
    pub fn resolve_ids(&self, beliefs: &[Option<u32>]) -> Vec<ValueSet> {
        assert_eq!(beliefs.len(), self.users.len());
        let kinds = self.expand(beliefs);
        let mut poss = close_all(&kinds);
        poss.truncate(self.users.len());
        poss
    }

    fn expand(&self, beliefs: &[Option<u32>]) -> Vec<Kind> {
        let n = self.users.len();
        let mut reached: Vec<bool> = beliefs.iter().map(Option::is_some).collect();
        let mut queue: Vec<usize> = (0..n).filter(|&u| reached[u]).collect();
        while let Some(v) = queue.pop() {
            for &c in &self.consumers[v] {
                if !reached[c] {
                    reached[c] = true;
                    queue.push(c);
                }
            }
        }

        let mut kinds: Vec<Kind> = vec![Kind::Silent; n];
        let mut levels: Vec<Vec<usize>> = Vec::new();
        for x in 0..n {
            if let Some(b) = beliefs[x] {
                kinds[x] = Kind::Fixed(b);
                continue;
            }
            if !reached[x] {
                continue;
            }
            levels.clear();
            let mut last = None;
            for &(p, s) in &self.sources[x] {
                if !reached[s] {
                    continue;
                }
                if last != Some(p) {
                    levels.push(Vec::new());
                    last = Some(p);
                }
                levels.last_mut().unwrap().push(s);
            }
            if levels.len() == 1 {
                let members = &levels[0];
                kinds[x] = if members.len() == 1 { Kind::Copy(members[0]) } else { Kind::Tie(members.clone()) };
                continue;
            }
            let groups: Vec<usize> = levels
                .iter()
                .map(|members| {
                    if members.len() == 1 {
                        members[0]
                    } else {
                        kinds.push(Kind::Tie(members.clone()));
                        kinds.len() - 1
                    }
                })
                .collect();
            let k = groups.len();
            let first_rest = kinds.len();
            kinds.extend(std::iter::repeat_n(Kind::Silent, k - 2));
            let link = |i: usize| match i {
                0 => x,
                i if i == k - 1 => groups[k - 1],
                i => first_rest + i - 1,
            };
            for i in 0..k - 1 {
                kinds[link(i)] = Kind::Prefer { preferred: groups[i], fallback: link(i + 1) };
            }
        }
        kinds
    }
}

fn union_of(sets: impl Iterator<Item = ValueSet>) -> ValueSet {
    let mut all: Vec<u32> = Vec::new();
    let mut first: Option<ValueSet> = None;
    let mut count = 0;
    for s in sets {
        count += 1;
        if count == 1 {
            first = Some(s);
            continue;
        }
        if count == 2 {
            all.extend_from_slice(first.as_ref().unwrap());
        }
        all.extend_from_slice(&s);
    }
    if count == 1 {
        return first.unwrap();
    }
    all.sort_unstable();
    all.dedup();
    all.into()
}

fn close_all(kinds: &[Kind]) -> Vec<ValueSet> {
    let m = kinds.len();
    // consumers over every input edge, flagged when the edge is deciding
    let mut out_edges: Vec<Vec<(usize, bool)>> = vec![Vec::new(); m];
    let mut pending = vec![0usize; m];
    for (x, kind) in kinds.iter().enumerate() {
        for &p in kind.deciding() {
            out_edges[p].push((x, true));
        }
        if let Kind::Prefer { fallback, .. } = kind {
            out_edges[*fallback].push((x, false));
        }
        pending[x] = kind.deciding().len();
    }

    let empty: ValueSet = Rc::from([]);
    let mut poss: Vec<Option<ValueSet>> = vec![None; m];
    let mut work = Vec::new();
    let mut open = Vec::new();
    for (x, kind) in kinds.iter().enumerate() {
        match kind {
            Kind::Fixed(v) => {
                poss[x] = Some(Rc::from([*v]));
                work.push(x);
            }
            Kind::Silent => poss[x] = Some(empty.clone()),
            _ => open.push(x),
        }
    }

    let mut local = vec![usize::MAX; m];
    let mut graph = Csr::default();
    loop {
        // step 1: propagate through deciding inputs
        while let Some(x) = work.pop() {
            for &(c, deciding) in &out_edges[x] {
                if !deciding || poss[c].is_some() {
                    continue;
                }
                pending[c] -= 1;
                if pending[c] == 0 {
                    let vals = union_of(kinds[c].deciding().iter().map(|&p| poss[p].clone().unwrap()));
                    poss[c] = Some(vals);
                    work.push(c);
                }
            }
        }
        open.retain(|&x| poss[x].is_none());
        if open.is_empty() {
            break;
        }

        // step 2: components of the open subgraph without open inputs from outside
        for (i, &x) in open.iter().enumerate() {
            local[x] = i;
        }
        graph.offsets.clear();
        graph.targets.clear();
        graph.offsets.push(0);
        for &x in &open {
            for &(c, _) in &out_edges[x] {
                if poss[c].is_none() {
                    graph.targets.push(local[c]);
                }
            }
            graph.offsets.push(graph.targets.len());
        }
        let comps = tarjan(&graph);
        let mut comp_of = vec![0usize; open.len()];
        for (ci, comp) in comps.iter().enumerate() {
            for &v in comp {
                comp_of[v] = ci;
            }
        }
        let mut is_source = vec![true; comps.len()];
        for v in 0..open.len() {
            for &w in graph.successors(v) {
                if comp_of[w] != comp_of[v] {
                    is_source[comp_of[w]] = false;
                }
            }
        }
        for (ci, comp) in comps.iter().enumerate() {
            if !is_source[ci] {
                continue;
            }
            let vals = union_of(comp.iter().flat_map(|&v| kinds[open[v]].inputs()).filter_map(|p| poss[p].clone()));
            debug_assert!(!vals.is_empty(), "source component without closed inputs");
            for &v in comp {
                poss[open[v]] = Some(vals.clone());
                work.push(open[v]);
            }
        }
    }
    poss.into_iter().map(|p| p.expect("all nodes closed")).collect()
}

/// Possible and certain values of every user for `key`.
pub fn resolve(net: &TrustNetwork, key: &Key) -> ResolutionResult {
    resolve_with(&Topology::new(net), net, key)
}

fn resolve_with(topology: &Topology, net: &TrustNetwork, key: &Key) -> ResolutionResult {
    let domain: Vec<Value> = net.active_domain(key).into_iter().collect();
    let mut beliefs = vec![None; topology.users.len()];
    for (u, v) in net.beliefs_for(key) {
        let id = domain.binary_search(v).expect("belief value in active domain");
        beliefs[topology.index[u]] = Some(id as u32);
    }
    let poss = topology.resolve_ids(&beliefs);
    let mut result = ResolutionResult::empty(key.clone());
    for (u, set) in topology.users.iter().zip(&poss) {
        if set.is_empty() {
            continue;
        }
        let values: BTreeSet<Value> = set.iter().map(|&i| domain[i as usize].clone()).collect();
        if set.len() == 1 {
            result.certain.insert(u.clone(), domain[set[0] as usize].clone());
        }
        result.possible.insert(u.clone(), values);
    }
    result
}

/// One result per key mentioned by a belief, ordered by key.
pub fn resolve_all_keys(net: &TrustNetwork) -> Vec<ResolutionResult> {
    let topology = Topology::new(net);
    net.keys().iter().map(|k| resolve_with(&topology, net, k)).collect()
}
