//! Cluster topology: compute cores and their adjacency.

use serde::{Deserialize, Serialize};

use super::{CoreId, ModelError};

/// Liveness of one compute core during a run.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoreStatus {
    Alive,
    /// A predictor has flagged this core; it still responds to probes but is
    /// no longer an acceptable migration target.
    PredictedFail,
    Failed,
}

/// One physical core with its neighbour list.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct ComputeCore {
    pub id: CoreId,
    /// Adjacent core IDs, ascending. Adjacency is symmetric and loop-free.
    pub neighbors: Vec<CoreId>,
    pub status: CoreStatus,
}

/// Declarative cluster shapes.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TopologySpec {
    /// Cores in a cycle; each core touches its two ring neighbours.
    Ring { cores: u32 },
    /// `rows x cols` mesh with 4-neighbourhood and no wrap-around.
    Grid { rows: u32, cols: u32 },
    /// Every core adjacent to every other.
    Complete { cores: u32 },
}

impl TopologySpec {
    pub fn core_count(&self) -> usize {
        match self {
            TopologySpec::Ring { cores } | TopologySpec::Complete { cores } => *cores as usize,
            TopologySpec::Grid { rows, cols } => (*rows as usize) * (*cols as usize),
        }
    }
}

/// The set of cores built from a [`TopologySpec`]. All cores start alive.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Cluster {
    cores: Vec<ComputeCore>,
}

impl Cluster {
    pub fn build(spec: &TopologySpec) -> Result<Self, ModelError> {
        let n = spec.core_count();
        if n == 0 {
            return Err(ModelError::InvalidTopology("at least one core required".into()));
        }
        let neighbors_of = |i: usize| -> Vec<CoreId> {
            let mut out: Vec<CoreId> = match *spec {
                TopologySpec::Ring { .. } => [(i + n - 1) % n, (i + 1) % n]
                    .into_iter()
                    .filter(|j| *j != i)
                    .map(|j| CoreId(j as u32))
                    .collect(),
                TopologySpec::Complete { .. } => {
                    (0..n).filter(|j| *j != i).map(|j| CoreId(j as u32)).collect()
                }
                TopologySpec::Grid { cols, .. } => {
                    let cols = cols as usize;
                    let (r, c) = (i / cols, i % cols);
                    let mut adj = Vec::new();
                    if r > 0 {
                        adj.push(i - cols);
                    }
                    if c > 0 {
                        adj.push(i - 1);
                    }
                    if c + 1 < cols && i + 1 < n {
                        adj.push(i + 1);
                    }
                    if i + cols < n {
                        adj.push(i + cols);
                    }
                    adj.into_iter().map(|j| CoreId(j as u32)).collect()
                }
            };
            out.sort_unstable();
            out.dedup();
            out
        };
        let cores = (0..n)
            .map(|i| ComputeCore {
                id: CoreId(i as u32),
                neighbors: neighbors_of(i),
                status: CoreStatus::Alive,
            })
            .collect();
        Ok(Self { cores })
    }

    pub fn len(&self) -> usize {
        self.cores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cores.is_empty()
    }

    /// All cores in ID order.
    pub fn cores(&self) -> &[ComputeCore] {
        &self.cores
    }

    pub fn get(&self, id: CoreId) -> Option<&ComputeCore> {
        self.cores.get(id.0 as usize)
    }

    pub fn status(&self, id: CoreId) -> CoreStatus {
        self.cores[id.0 as usize].status
    }

    pub fn set_status(&mut self, id: CoreId, status: CoreStatus) {
        self.cores[id.0 as usize].status = status;
    }

    /// IDs with status alive, ascending.
    pub fn alive(&self) -> Vec<CoreId> {
        self.cores
            .iter()
            .filter(|c| c.status == CoreStatus::Alive)
            .map(|c| c.id)
            .collect()
    }
}

/// Neighbours of `core` whose status is alive (not predicted-fail, not
/// failed), in ascending ID order.
pub fn adjacent_alive(cluster: &Cluster, core: CoreId) -> Vec<CoreId> {
    match cluster.get(core) {
        None => Vec::new(),
        Some(c) => c
            .neighbors
            .iter()
            .copied()
            .filter(|n| cluster.status(*n) == CoreStatus::Alive)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_of_five_wraps() {
        let c = Cluster::build(&TopologySpec::Ring { cores: 5 }).unwrap();
        assert_eq!(c.get(CoreId(0)).unwrap().neighbors, vec![CoreId(1), CoreId(4)]);
        assert_eq!(c.get(CoreId(3)).unwrap().neighbors, vec![CoreId(2), CoreId(4)]);
    }

    #[test]
    fn two_core_ring_deduplicates_neighbours() {
        let c = Cluster::build(&TopologySpec::Ring { cores: 2 }).unwrap();
        assert_eq!(c.get(CoreId(0)).unwrap().neighbors, vec![CoreId(1)]);
        assert_eq!(c.get(CoreId(1)).unwrap().neighbors, vec![CoreId(0)]);
    }

    #[test]
    fn grid_corner_and_centre() {
        let c = Cluster::build(&TopologySpec::Grid { rows: 3, cols: 3 }).unwrap();
        assert_eq!(c.get(CoreId(0)).unwrap().neighbors, vec![CoreId(1), CoreId(3)]);
        assert_eq!(
            c.get(CoreId(4)).unwrap().neighbors,
            vec![CoreId(1), CoreId(3), CoreId(5), CoreId(7)]
        );
    }

    #[test]
    fn complete_connects_all_pairs() {
        let c = Cluster::build(&TopologySpec::Complete { cores: 4 }).unwrap();
        for core in c.cores() {
            assert_eq!(core.neighbors.len(), 3);
            assert!(!core.neighbors.contains(&core.id));
        }
    }

    #[test]
    fn adjacency_is_symmetric() {
        for spec in [
            TopologySpec::Ring { cores: 7 },
            TopologySpec::Grid { rows: 2, cols: 5 },
            TopologySpec::Complete { cores: 6 },
        ] {
            let c = Cluster::build(&spec).unwrap();
            for core in c.cores() {
                for n in &core.neighbors {
                    assert!(
                        c.get(*n).unwrap().neighbors.contains(&core.id),
                        "{:?}: {} -> {n} not symmetric",
                        spec,
                        core.id
                    );
                }
            }
        }
    }

    #[test]
    fn adjacent_alive_filters_predicted_and_failed() {
        let mut c = Cluster::build(&TopologySpec::Complete { cores: 4 }).unwrap();
        c.set_status(CoreId(1), CoreStatus::PredictedFail);
        c.set_status(CoreId(2), CoreStatus::Failed);
        assert_eq!(adjacent_alive(&c, CoreId(0)), vec![CoreId(3)]);
    }

    #[test]
    fn empty_topology_is_rejected() {
        assert!(Cluster::build(&TopologySpec::Ring { cores: 0 }).is_err());
        assert!(Cluster::build(&TopologySpec::Grid { rows: 0, cols: 3 }).is_err());
    }
}
