//! Strongly connected components and the condensation of a trust graph.

use std::collections::HashMap;

use crate::network::{TrustNetwork, UserId};

/// Successor lists in compressed form: the successors of `v` are
/// `targets[offsets[v]..offsets[v + 1]]`.
#[derive(Clone, Debug, Default)]
pub struct Csr {
    pub offsets: Vec<usize>,
    pub targets: Vec<usize>,
}

impl Csr {
    pub fn from_lists(adj: &[Vec<usize>]) -> Self {
        let mut csr = Csr { offsets: Vec::with_capacity(adj.len() + 1), targets: Vec::new() };
        csr.offsets.push(0);
        for succ in adj {
            csr.targets.extend_from_slice(succ);
            csr.offsets.push(csr.targets.len());
        }
        csr
    }

    pub fn len(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn successors(&self, v: usize) -> &[usize] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }
}

/// Tarjan's algorithm without recursion. Components come out sinks first
/// (reverse topological order).
pub fn tarjan(graph: &Csr) -> Vec<Vec<usize>> {
    const UNSEEN: usize = usize::MAX;
    let n = graph.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    // (vertex, next successor position)
    let mut calls: Vec<(usize, usize)> = Vec::new();
    let mut counter = 0;
    let mut comps = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        calls.push((root, graph.offsets[root]));
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&(v, pos)) = calls.last() {
            if pos < graph.offsets[v + 1] {
                let w = graph.targets[pos];
                calls.last_mut().unwrap().1 += 1;
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    calls.push((w, graph.offsets[w]));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            calls.pop();
            if let Some(&(parent, _)) = calls.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().unwrap();
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comps.push(comp);
            }
        }
    }
    comps
}

/// SCCs of the trust graph (edge source -> target for every mapping), listed
/// in topological order: every mapping between two different components runs
/// from an earlier component to a later one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Condensation {
    pub components: Vec<Vec<UserId>>,
}

impl Condensation {
    pub fn component_of(&self, user: &UserId) -> Option<usize> {
        self.components.iter().position(|c| c.contains(user))
    }
}

pub fn condense(net: &TrustNetwork) -> Condensation {
    let users: Vec<&UserId> = net.users().iter().collect();
    let idx: HashMap<&UserId, usize> = users.iter().enumerate().map(|(i, u)| (*u, i)).collect();
    let mut adj = vec![Vec::new(); users.len()];
    for m in net.mappings() {
        adj[idx[&m.source]].push(idx[&m.target]);
    }
    let mut comps = tarjan(&Csr::from_lists(&adj));
    comps.reverse();
    let components = comps
        .into_iter()
        .map(|mut c| {
            c.sort_unstable();
            c.into_iter().map(|i| users[i].clone()).collect()
        })
        .collect();
    Condensation { components }
}
