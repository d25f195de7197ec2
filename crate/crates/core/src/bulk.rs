//! Bulk resolution of many keys over one trust topology.
//!
//! Beliefs and results travel as a flat `POSS(X, K, V)` relation: user,
//! key, value. Keys whose believers and agreement pattern coincide are
//! resolved once, on abstract value classes; every other key with that
//! pattern only substitutes its own values into the cached answer. The cost
//! per key is therefore independent of whether its beliefs conflict.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::network::{Key, TrustNetwork, UserId, Value};
use crate::resolve::{Topology, ValueSet};

const HEADER: [&str; 3] = ["X", "K", "V"];

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PossRow {
    pub user: UserId,
    pub key: Key,
    pub value: Value,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PossRole {
    /// Explicit beliefs: at most one row per (user, key).
    Input,
    /// Possible values: any number of rows per (user, key).
    Output,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PossTable {
    pub rows: Vec<PossRow>,
    pub role: PossRole,
}

impl PossTable {
    pub fn new(rows: Vec<PossRow>, role: PossRole) -> Result<Self> {
        let table = PossTable { rows, role };
        if role == PossRole::Input {
            let mut slots: Vec<(&Key, &UserId)> = table.rows.iter().map(|r| (&r.key, &r.user)).collect();
            slots.sort_unstable();
            if let Some(w) = slots.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::DuplicateBelief { user: w[0].1.to_string(), key: w[0].0.to_string() });
            }
        }
        Ok(table)
    }

    pub fn empty(role: PossRole) -> Self {
        PossTable { rows: Vec::new(), role }
    }

    /// Sorts rows by (key, user, value).
    pub fn canonicalize(&mut self) {
        self.rows.sort_unstable_by(|a, b| (&a.key, &a.user, &a.value).cmp(&(&b.key, &b.user, &b.value)));
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(HEADER).expect("in-memory write");
        for r in &self.rows {
            w.write_record([r.user.as_str(), r.key.as_str(), r.value.as_str()]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 tokens")
    }

    pub fn from_csv_str(text: &str, role: PossRole) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
        let mut records = reader.records();
        match records.next() {
            Some(Ok(h)) if h.iter().eq(HEADER) => {}
            Some(Ok(h)) => {
                return Err(Error::Parse(format!("expected header X,K,V, found {:?}", h.iter().collect::<Vec<_>>())))
            }
            Some(Err(e)) => return Err(e.into()),
            None => return Err(Error::Parse("missing header X,K,V".into())),
        }
        let mut rows = Vec::new();
        for (line, rec) in records.enumerate() {
            let rec = rec?;
            if rec.len() != 3 {
                return Err(Error::Parse(format!("row {}: expected 3 fields, found {}", line + 1, rec.len())));
            }
            let field = |e: Error| Error::Parse(format!("row {}: {e}", line + 1));
            rows.push(PossRow {
                user: UserId::new(&rec[0]).map_err(field)?,
                key: Key::new(&rec[1]).map_err(field)?,
                value: Value::new(&rec[2]).map_err(field)?,
            });
        }
        PossTable::new(rows, role)
    }
}

pub fn load_poss(path: impl AsRef<Path>, role: PossRole) -> Result<PossTable> {
    PossTable::from_csv_str(&fs::read_to_string(path)?, role)
}

pub fn write_poss(table: &PossTable, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, table.to_csv_string())?;
    Ok(())
}

/// (user index, value class) for every believer of a key, by user index.
type Signature = Vec<(usize, u32)>;
/// Users with a non-empty answer and their possible value classes.
type Template = Vec<(usize, ValueSet)>;

/// Resolves input tables against one fixed topology, caching one answer per
/// belief signature.
pub struct BulkResolver {
    topology: Topology,
    templates: HashMap<Signature, Template>,
}

impl BulkResolver {
    pub fn new(topology_net: &TrustNetwork) -> Result<Self> {
        if topology_net.num_beliefs() > 0 {
            return Err(Error::NonEmptyTopologyBeliefs);
        }
        Ok(BulkResolver { topology: Topology::new(topology_net), templates: HashMap::new() })
    }

    fn template<'a>(
        topology: &Topology,
        templates: &'a mut HashMap<Signature, Template>,
        signature: &Signature,
    ) -> &'a Template {
        if !templates.contains_key(signature) {
            let mut beliefs = vec![None; topology.users().len()];
            for &(u, class) in signature {
                beliefs[u] = Some(class);
            }
            let poss = topology.resolve_ids(&beliefs);
            let template = poss.into_iter().enumerate().filter(|(_, s)| !s.is_empty()).collect();
            templates.insert(signature.clone(), template);
        }
        &templates[signature]
    }

    pub fn resolve(&mut self, beliefs: &PossTable) -> Result<PossTable> {
        let mut entries: Vec<(&Key, usize, &Value)> = Vec::with_capacity(beliefs.rows.len());
        for r in &beliefs.rows {
            let u = self.topology.user_index(&r.user).ok_or_else(|| Error::UnknownUser(r.user.to_string()))?;
            entries.push((&r.key, u, &r.value));
        }
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        if let Some(w) = entries.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::DuplicateBelief {
                user: self.topology.users()[w[0].1].to_string(),
                key: w[0].0.to_string(),
            });
        }

        let mut rows = Vec::with_capacity(entries.len() * 4);
        let mut signature: Signature = Vec::new();
        let mut classes: Vec<&Value> = Vec::new();
        let mut scratch: Vec<&Value> = Vec::new();
        for group in entries.chunk_by(|a, b| a.0 == b.0) {
            let key = group[0].0;
            signature.clear();
            classes.clear();
            for &(_, u, v) in group {
                let class = match classes.iter().position(|c| *c == v) {
                    Some(c) => c,
                    None => {
                        classes.push(v);
                        classes.len() - 1
                    }
                };
                signature.push((u, class as u32));
            }
            let users = self.topology.users();
            let template = Self::template(&self.topology, &mut self.templates, &signature);
            for (u, set) in template {
                let user = &users[*u];
                if let [only] = set[..] {
                    rows.push(PossRow { user: user.clone(), key: key.clone(), value: classes[only as usize].clone() });
                    continue;
                }
                scratch.clear();
                scratch.extend(set.iter().map(|&c| classes[c as usize]));
                scratch.sort_unstable();
                for v in &scratch {
                    rows.push(PossRow { user: user.clone(), key: key.clone(), value: (*v).clone() });
                }
            }
        }
        Ok(PossTable { rows, role: PossRole::Output })
    }
}

/// Possible values of every user on every key of `beliefs`, sorted by
/// (key, user, value).
pub fn bulk_resolve(topology_net: &TrustNetwork, beliefs: &PossTable) -> Result<PossTable> {
    BulkResolver::new(topology_net)?.resolve(beliefs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{bulk_topology, gen_bulk_workload};
    use crate::network::ExplicitBelief;
    use crate::resolve::resolve;

    fn row(u: &str, k: &str, v: &str) -> PossRow {
        PossRow { user: UserId::new(u).unwrap(), key: Key::new(k).unwrap(), value: Value::new(v).unwrap() }
    }

    /// Rows of the single-key engine result on topology + beliefs of `key`.
    fn per_key_rows(topology: &TrustNetwork, beliefs: &PossTable, key: &Key) -> Vec<PossRow> {
        let mut net = topology.clone();
        for r in beliefs.rows.iter().filter(|r| &r.key == key) {
            net = net.insert_belief(ExplicitBelief::new(r.user.clone(), r.key.clone(), r.value.clone())).unwrap();
        }
        let res = resolve(&net, key);
        res.possible
            .iter()
            .flat_map(|(u, vs)| vs.iter().map(move |v| PossRow { user: u.clone(), key: key.clone(), value: v.clone() }))
            .collect()
    }

    #[test]
    fn agreement_gives_single_values() {
        let t = PossTable::new(vec![row("u1", "k1", "a"), row("u2", "k1", "a")], PossRole::Input).unwrap();
        let out = bulk_resolve(&bulk_topology(), &t).unwrap();
        assert_eq!(out.rows.len(), 7);
        assert!(out.rows.iter().all(|r| r.value.as_str() == "a"));
    }

    #[test]
    fn conflict_matches_single_key_resolution() {
        let topo = bulk_topology();
        let t = PossTable::new(vec![row("u1", "k2", "a"), row("u2", "k2", "b")], PossRole::Input).unwrap();
        let out = bulk_resolve(&topo, &t).unwrap();
        let expected = per_key_rows(&topo, &t, &Key::new("k2").unwrap());
        assert_eq!(out.rows, expected);
        // u5 ties u3 (a) and u4 (b)
        let u5: Vec<_> = out.rows.iter().filter(|r| r.user.as_str() == "u5").map(|r| r.value.as_str()).collect();
        assert_eq!(u5, ["a", "b"]);
    }

    #[test]
    fn per_key_equivalence_on_generated_workload() {
        let topo = bulk_topology();
        let beliefs = gen_bulk_workload(200, 0.5, 12);
        let out = bulk_resolve(&topo, &beliefs).unwrap();
        let mut sorted = out.clone();
        sorted.canonicalize();
        assert_eq!(sorted, out);
        let mut expected = Vec::new();
        for key in beliefs.rows.iter().map(|r| r.key.clone()).collect::<std::collections::BTreeSet<_>>() {
            expected.extend(per_key_rows(&topo, &beliefs, &key));
        }
        assert_eq!(out.rows, expected);
    }

    #[test]
    fn mixed_believer_sets() {
        let topo = bulk_topology();
        let t = PossTable::new(
            vec![
                row("u1", "a", "x"),
                row("u6", "b", "y"),
                row("u3", "b", "z"),
                row("u2", "c", "y"),
                row("u7", "c", "y"),
            ],
            PossRole::Input,
        )
        .unwrap();
        let out = bulk_resolve(&topo, &t).unwrap();
        let mut expected = Vec::new();
        for k in ["a", "b", "c"] {
            expected.extend(per_key_rows(&topo, &t, &Key::new(k).unwrap()));
        }
        assert_eq!(out.rows, expected);
    }

    #[test]
    fn empty_input() {
        let out = bulk_resolve(&bulk_topology(), &PossTable::empty(PossRole::Input)).unwrap();
        assert!(out.rows.is_empty());
        assert_eq!(out.role, PossRole::Output);
    }

    #[test]
    fn errors() {
        let t = PossTable::new(vec![row("u9", "k", "a")], PossRole::Input).unwrap();
        assert!(matches!(bulk_resolve(&bulk_topology(), &t), Err(Error::UnknownUser(_))));
        let with_beliefs = bulk_topology()
            .insert_belief(ExplicitBelief::new(
                UserId::new("u1").unwrap(),
                Key::new("k").unwrap(),
                Value::new("a").unwrap(),
            ))
            .unwrap();
        assert!(matches!(
            bulk_resolve(&with_beliefs, &PossTable::empty(PossRole::Input)),
            Err(Error::NonEmptyTopologyBeliefs)
        ));
        assert!(matches!(
            PossTable::new(vec![row("u1", "k", "a"), row("u1", "k", "b")], PossRole::Input),
            Err(Error::DuplicateBelief { .. })
        ));
        assert!(PossTable::new(vec![row("u1", "k", "a"), row("u1", "k", "b")], PossRole::Output).is_ok());
    }

    #[test]
    fn parsing() {
        let t = PossTable::from_csv_str("X,K,V\nu1,k,a\nu2,k,\"b,\"\"c\"\"\"\n", PossRole::Input).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[1].value.as_str(), "b,\"c\"");
        assert_eq!(t.to_csv_string(), "X,K,V\nu1,k,a\nu2,k,\"b,\"\"c\"\"\"\n");

        for bad in [
            "",
            "X,K\nu1,k\n",
            "A,B,C\nu1,k,a\n",
            "X,K,V\nu1,k\n",
            "X,K,V\nu1,k,a,b\n",
            "X,K,V\nu1,k,\n",
            "X,K,V\nu 1,k,a\n",
        ] {
            assert!(matches!(PossTable::from_csv_str(bad, PossRole::Input), Err(Error::Parse(_))), "{bad:?}");
        }
        assert!(matches!(
            PossTable::from_csv_str("X,K,V\nu1,k,a\nu1,k,b\n", PossRole::Input),
            Err(Error::DuplicateBelief { .. })
        ));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("poss.csv");
        let mut t = gen_bulk_workload(50, 0.4, 2);
        write_poss(&t, &path).unwrap();
        let mut back = load_poss(&path, PossRole::Input).unwrap();
        assert_eq!(back.rows.len(), 100);
        back.canonicalize();
        t.canonicalize();
        assert_eq!(back, t);
    }
}
