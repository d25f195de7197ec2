//! Shared fixtures for the criterion benchmarks.

use trustmap_core::{GenSpec, PossTable, TrustNetwork, Workload};

pub const SEED: u64 = 42;

/// Cluster counts giving roughly 10^3, 10^4 and 10^5 elements.
pub const CYCLE_SIZES: [usize; 3] = [125, 1250, 12_500];
pub const SCALE_FREE_SIZES: [usize; 3] = [1_000, 10_000, 50_000];
pub const NESTED_SIZES: [usize; 3] = [500, 1_000, 2_000];
pub const BULK_SIZES: [usize; 3] = [1_000, 10_000, 100_000];
/// Oracle runs stay small; the cost doubles with each cluster.
pub const ORACLE_CLUSTERS: [usize; 4] = [1, 2, 4, 6];

pub fn network(spec: &GenSpec) -> TrustNetwork {
    match spec.generate() {
        Workload::Network(net) => net,
        Workload::Bulk { .. } => panic!("{spec} is not a network workload"),
    }
}

pub fn cycles(clusters: usize) -> TrustNetwork {
    network(&GenSpec::Cycles { clusters, seed: SEED })
}

pub fn scale_free(nodes: usize) -> TrustNetwork {
    network(&GenSpec::ScaleFree { nodes, edges_per_node: 2, fraction: 1.0, seed: SEED })
}

pub fn nested(users: usize) -> TrustNetwork {
    network(&GenSpec::Nested { users, seed: SEED })
}

pub fn bulk(objects: usize, conflict_fraction: f64) -> (TrustNetwork, PossTable) {
    match (GenSpec::Bulk { objects, conflict_fraction, seed: SEED }).generate() {
        Workload::Bulk { topology, beliefs } => (topology, beliefs),
        Workload::Network(_) => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_have_expected_sizes() {
        assert_eq!(cycles(CYCLE_SIZES[0]).num_users(), 500);
        assert_eq!(scale_free(1_000).num_users(), 1_000);
        assert!(nested(500).num_users() >= 500);
        let (topology, beliefs) = bulk(100, 0.5);
        assert_eq!(topology.num_mappings(), 12);
        assert_eq!(beliefs.rows.len(), 200);
    }
}
