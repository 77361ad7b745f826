//! Dependency graphs and job decomposition.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{JobSpec, ModelError, OpKind, SubJob, SubJobId, WorkloadKind};

/// Directed acyclic graph of sub-jobs, keyed by ID.
///
/// Edges are stored on the nodes themselves (`inputs` / `outputs`);
/// construction validates that the two sides agree and that no cycle exists.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct DependencyGraph {
    nodes: BTreeMap<SubJobId, SubJob>,
}

impl DependencyGraph {
    /// Builds a graph from sub-jobs, validating edge consistency
    /// (`a` lists `b` as output iff `b` lists `a` as input) and acyclicity.
    pub fn new(subjobs: Vec<SubJob>) -> Result<Self, ModelError> {
        let mut nodes = BTreeMap::new();
        for sj in subjobs {
            if nodes.insert(sj.id, sj).is_some() {
                return Err(ModelError::InconsistentGraph(
                    "duplicate sub-job id".into(),
                ));
            }
        }
        let g = Self { nodes };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<(), ModelError> {
        for (id, sj) in &self.nodes {
            if sj.id != *id {
                return Err(ModelError::InconsistentGraph(format!(
                    "node keyed {id} carries id {}",
                    sj.id
                )));
            }
            for dep in sj.inputs.iter().chain(&sj.outputs) {
                if *dep == *id {
                    return Err(ModelError::InconsistentGraph(format!("{id} depends on itself")));
                }
                if !self.nodes.contains_key(dep) {
                    return Err(ModelError::InconsistentGraph(format!(
                        "{id} references unknown sub-job {dep}"
                    )));
                }
            }
            for sup in &sj.inputs {
                if !self.nodes[sup].outputs.contains(id) {
                    return Err(ModelError::InconsistentGraph(format!(
                        "{id} lists input {sup}, but {sup} does not list {id} as output"
                    )));
                }
            }
            for con in &sj.outputs {
                if !self.nodes[con].inputs.contains(id) {
                    return Err(ModelError::InconsistentGraph(format!(
                        "{id} lists output {con}, but {con} does not list {id} as input"
                    )));
                }
            }
        }
        if self.topo_order().is_none() {
            return Err(ModelError::InconsistentGraph("dependency cycle".into()));
        }
        Ok(())
    }

    /// Nodes in ascending ID order.
    pub fn nodes(&self) -> impl Iterator<Item = &SubJob> {
        self.nodes.values()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn get(&self, id: SubJobId) -> Option<&SubJob> {
        self.nodes.get(&id)
    }

    /// Directed edges `(producer, consumer)` in deterministic order.
    pub fn edges(&self) -> Vec<(SubJobId, SubJobId)> {
        let mut edges = Vec::new();
        for sj in self.nodes.values() {
            for out in &sj.outputs {
                edges.push((sj.id, *out));
            }
        }
        edges.sort_unstable();
        edges
    }

    /// Nodes with no inputs, ascending.
    pub fn leaves(&self) -> Vec<SubJobId> {
        self.nodes
            .values()
            .filter(|sj| sj.inputs.is_empty())
            .map(|sj| sj.id)
            .collect()
    }

    /// The unique node with no outputs, if exactly one exists.
    pub fn root(&self) -> Option<SubJobId> {
        let mut sinks = self.nodes.values().filter(|sj| sj.outputs.is_empty());
        match (sinks.next(), sinks.next()) {
            (Some(root), None) => Some(root.id),
            _ => None,
        }
    }

    /// Topological order (Kahn), or `None` if the graph has a cycle.
    /// Ties resolve in ascending ID order, so the result is deterministic.
    pub fn topo_order(&self) -> Option<Vec<SubJobId>> {
        let mut indegree: BTreeMap<SubJobId, usize> = self
            .nodes
            .values()
            .map(|sj| (sj.id, sj.inputs.len()))
            .collect();
        let mut ready: BTreeSet<SubJobId> = indegree
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(id, _)| *id)
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(id) = ready.iter().next().copied() {
            ready.remove(&id);
            order.push(id);
            for out in &self.nodes[&id].outputs {
                let d = indegree.get_mut(out).expect("validated edge");
                *d -= 1;
                if *d == 0 {
                    ready.insert(*out);
                }
            }
        }
        (order.len() == self.nodes.len()).then_some(order)
    }
}

/// Number of dependency relations of one sub-job: suppliers plus consumers
/// (`d_i + d_o`).
pub fn dependency_count(g: &DependencyGraph, id: SubJobId) -> Option<u32> {
    g.get(id).map(|sj| (sj.inputs.len() + sj.outputs.len()) as u32)
}

/// The `Z` value a fault tolerance strategy sees for this job: the worst-case
/// number of links a migrating sub-job must re-establish. Every node keeps
/// its input links and at least one result link (the root still delivers the
/// final result somewhere), so per node this is `d_i + max(d_o, 1)` and the
/// scenario takes the maximum.
pub fn scenario_dependency_count(g: &DependencyGraph) -> u32 {
    g.nodes()
        .map(|sj| sj.inputs.len() as u32 + (sj.outputs.len() as u32).max(1))
        .max()
        .unwrap_or(0)
}

/// Splits `total` into `parts` shares: an even floor share each, with the
/// remainder folded into the last share.
fn split_even(total: u64, parts: usize) -> Vec<u64> {
    assert!(parts > 0);
    let share = total / parts as u64;
    let mut out = vec![share; parts];
    *out.last_mut().unwrap() = total - share * (parts as u64 - 1);
    out
}

/// Expands a [`JobSpec`] into its dependency graph.
///
/// * `reduction-sum` with `fan_widths = [w_1, .., w_k]` yields `Σw_i` leaves,
///   `k` interior nodes (one per group) and one root.
/// * `genome-search` requires exactly one fan width `n` and yields `n`
///   searcher leaves feeding one combining node.
///
/// Data is split evenly across leaves (remainder to the last leaf); interior
/// nodes carry their group's sum and the root/combiner the full volume.
/// Process sizes follow the same split of `process_size_kb`
/// (default: equal to the data sizes).
pub fn decompose_job(spec: &JobSpec) -> Result<DependencyGraph, ModelError> {
    if spec.fan_widths.is_empty() || spec.fan_widths.iter().any(|w| *w == 0) {
        return Err(ModelError::InvalidJobSpec(
            "fan_widths must be non-empty with every width >= 1".into(),
        ));
    }
    let n_leaves: usize = spec.fan_widths.iter().map(|w| *w as usize).sum();
    let data = split_even(spec.total_data_kb, n_leaves);
    let proc = split_even(spec.process_size_kb.unwrap_or(spec.total_data_kb), n_leaves);

    fn push(subjobs: &mut Vec<SubJob>, op: OpKind, data_size_kb: u64, process_size_kb: u64) -> SubJobId {
        let id = SubJobId(subjobs.len() as u32);
        subjobs.push(SubJob {
            id,
            op,
            data_size_kb,
            process_size_kb,
            inputs: Vec::new(),
            outputs: Vec::new(),
        });
        id
    }

    let mut subjobs = Vec::new();
    match spec.kind {
        WorkloadKind::GenomeSearch => {
            if spec.fan_widths.len() != 1 {
                return Err(ModelError::InvalidJobSpec(
                    "genome-search takes exactly one fan width (searcher count)".into(),
                ));
            }
            let searchers: Vec<SubJobId> = (0..n_leaves)
                .map(|i| push(&mut subjobs, OpKind::Search, data[i], proc[i]))
                .collect();
            let combine = push(
                &mut subjobs,
                OpKind::Combine,
                spec.total_data_kb,
                spec.process_size_kb.unwrap_or(spec.total_data_kb),
            );
            for s in searchers {
                subjobs[s.0 as usize].outputs.push(combine);
                subjobs[combine.0 as usize].inputs.push(s);
            }
        }
        WorkloadKind::ReductionSum => {
            let leaves: Vec<SubJobId> = (0..n_leaves)
                .map(|i| push(&mut subjobs, OpKind::LeafReduce, data[i], proc[i]))
                .collect();
            let mut interiors = Vec::new();
            let mut next = 0usize;
            for w in &spec.fan_widths {
                let group = &leaves[next..next + *w as usize];
                next += *w as usize;
                let gd: u64 = group.iter().map(|l| subjobs[l.0 as usize].data_size_kb).sum();
                let gp: u64 = group
                    .iter()
                    .map(|l| subjobs[l.0 as usize].process_size_kb)
                    .sum();
                let interior = push(&mut subjobs, OpKind::InteriorReduce, gd, gp);
                for l in group {
                    subjobs[l.0 as usize].outputs.push(interior);
                    subjobs[interior.0 as usize].inputs.push(*l);
                }
                interiors.push(interior);
            }
            let root = push(
                &mut subjobs,
                OpKind::RootReduce,
                spec.total_data_kb,
                spec.process_size_kb.unwrap_or(spec.total_data_kb),
            );
            for i in interiors {
                subjobs[i.0 as usize].outputs.push(root);
                subjobs[root.0 as usize].inputs.push(i);
            }
        }
    }

    DependencyGraph::new(subjobs)
}
