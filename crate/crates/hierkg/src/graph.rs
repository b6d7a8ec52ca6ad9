//! Graph assembly and structural metrics.
//!
//! Triples from all stages fold into one deduplicated graph. Connectivity is
//! measured on the undirected view (edge direction is stored but ignored for
//! metrics): the headline number is the fraction of nodes inside the largest
//! weakly connected component, reported for three cumulative snapshots —
//! initial only, with splitting, and with splitting and abstraction.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{KnowledgeGraph, Stage, Triple};

/// An assembled graph plus the triples that were rejected on the way in.
#[derive(Debug)]
pub struct AssembledGraph {
    pub graph: KnowledgeGraph,
    pub rejected: Vec<String>,
}

/// Fold triples into a deduplicated graph. A triple whose endpoint
/// normalizes to an empty key is rejected with a diagnostic; the rest
/// proceed. Nodes exist only via triples, so the graph has no isolated
/// nodes.
pub fn assemble(triples: &[Triple]) -> AssembledGraph {
    let mut graph = KnowledgeGraph::new();
    let mut rejected = Vec::new();
    for (index, triple) in triples.iter().enumerate() {
        if let Err(e) = graph.insert_triple(triple) {
            rejected.push(format!("triple {index}: {e}"));
        }
    }
    AssembledGraph { graph, rejected }
}

/// Weakly connected components as node-key sets, ordered by descending size
/// and then by lexicographically smallest member. Edge direction is ignored.
pub fn weakly_connected_components(graph: &KnowledgeGraph) -> Vec<BTreeSet<String>> {
    let keys: Vec<&str> = graph.node_keys().collect();
    let index_of: HashMap<&str, usize> = keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    let mut dsu = UnionFind::new(keys.len());
    for edge in graph.edges() {
        dsu.union(index_of[edge.head_key.as_str()], index_of[edge.tail_key.as_str()]);
    }

    let mut groups: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
    for (i, key) in keys.iter().enumerate() {
        groups.entry(dsu.find(i)).or_default().insert(key.to_string());
    }
    let mut components: Vec<BTreeSet<String>> = groups.into_values().collect();
    components.sort_by(|a, b| {
        b.len()
            .cmp(&a.len())
            .then_with(|| a.iter().next().cmp(&b.iter().next()))
    });
    components
}

/// |C_max| / |V|: the fraction of nodes inside the largest weakly connected
/// component. Undefined on an empty graph.
pub fn giant_component_fraction(graph: &KnowledgeGraph) -> Result<f64> {
    if graph.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let components = weakly_connected_components(graph);
    let largest = components.first().map(BTreeSet::len).unwrap_or(0);
    Ok(largest as f64 / graph.node_count() as f64)
}

/// Subgraph with exactly the edges whose provenance stage is in
/// `included_stages` and the nodes incident to them. Since nodes exist only
/// via triples, no isolated node can be left behind.
pub fn stage_snapshot(graph: &KnowledgeGraph, included_stages: &BTreeSet<Stage>) -> KnowledgeGraph {
    assert!(!included_stages.is_empty(), "snapshot needs at least one stage");
    let mut snapshot = KnowledgeGraph::new();
    for edge in graph.edges() {
        for provenance in &edge.provenances {
            if !included_stages.contains(&provenance.stage) {
                continue;
            }
            let head = graph.entity(&edge.head_key).expect("endpoint exists").clone();
            let tail = graph.entity(&edge.tail_key).expect("endpoint exists").clone();
            let triple = Triple {
                head,
                relation: crate::model::Relation {
                    text: edge.relation.clone(),
                },
                tail,
                provenance: provenance.clone(),
                extra: Default::default(),
            };
            snapshot
                .insert_triple(&triple)
                .expect("endpoints were valid in the source graph");
        }
    }
    snapshot
}

/// Counts and connectivity for one snapshot. The fraction is absent when the
/// snapshot has no nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotStats {
    pub node_count: usize,
    pub edge_count: usize,
    pub giant_component_fraction: Option<f64>,
}

/// Structural statistics over the full graph and the three cumulative stage
/// snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralReport {
    pub node_count: usize,
    pub edge_count: usize,
    pub component_count: usize,
    pub giant_component_fraction: f64,
    /// Snapshot name → stats, in cumulative order: `initial`, `with_split`,
    /// `with_split_and_abstraction`.
    pub per_stage: Vec<(String, SnapshotStats)>,
}

/// Snapshot names and the stages each one includes.
pub const SNAPSHOTS: [(&str, &[Stage]); 3] = [
    ("initial", &[Stage::Initial]),
    ("with_split", &[Stage::Initial, Stage::Split]),
    (
        "with_split_and_abstraction",
        &[Stage::Initial, Stage::Split, Stage::Abstract],
    ),
];

/// Compute the full structural report. Errors on an empty graph.
pub fn structural_report(graph: &KnowledgeGraph) -> Result<StructuralReport> {
    if graph.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let components = weakly_connected_components(graph);
    let fraction = giant_component_fraction(graph)?;

    let mut per_stage = Vec::new();
    for (name, stages) in SNAPSHOTS {
        let included: BTreeSet<Stage> = stages.iter().copied().collect();
        let snapshot = stage_snapshot(graph, &included);
        let fraction = if snapshot.is_empty() {
            None
        } else {
            Some(giant_component_fraction(&snapshot)?)
        };
        per_stage.push((
            name.to_string(),
            SnapshotStats {
                node_count: snapshot.node_count(),
                edge_count: snapshot.edge_count(),
                giant_component_fraction: fraction,
            },
        ));
    }

    Ok(StructuralReport {
        node_count: graph.node_count(),
        edge_count: graph.edge_count(),
        component_count: components.len(),
        giant_component_fraction: fraction,
        per_stage,
    })
}

impl StructuralReport {
    /// Plain-text table, fractions at three decimals.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{:<30} {:>6}   {:>7} / {:<7}", "snapshot", "F_GC", "nodes", "edges")
            .expect("string write");
        for (name, stats) in &self.per_stage {
            let fraction = match stats.giant_component_fraction {
                Some(f) => format!("{f:.3}"),
                None => "-".to_string(),
            };
            writeln!(
                out,
                "{:<30} {:>6}   {:>7} / {:<7}",
                name, fraction, stats.node_count, stats.edge_count
            )
            .expect("string write");
        }
        writeln!(
            out,
            "{:<30} {:>6}   {:>7} / {:<7}   ({} components)",
            "full graph",
            format!("{:.3}", self.giant_component_fraction),
            self.node_count,
            self.edge_count,
            self.component_count
        )
        .expect("string write");
        out
    }
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}
