//! Parallel integer reduction: leaves fold local slices into partial sums,
//! interior nodes and the root add partial sums together.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{WorkloadError, RNG_STREAM_LEAF_VALUES};
use crate::model::{DependencyGraph, OpKind, SubJobId};

/// Largest number of elements materialized per leaf. Slices are sized from
/// the leaf's data volume but capped so huge configured volumes stay cheap to
/// emulate; the reduction semantics don't depend on slice length.
const MAX_ELEMS_PER_LEAF: u64 = 16_384;

/// Deterministically derives each leaf's local input slice from the seed.
/// Slice length follows the leaf's `data_size_kb` (one element per KB,
/// capped); values are small enough that no realistic tree overflows `i64`.
pub fn derive_leaf_slices(g: &DependencyGraph, seed: u64) -> BTreeMap<SubJobId, Vec<i64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(RNG_STREAM_LEAF_VALUES);
    g.nodes()
        .filter(|sj| sj.inputs.is_empty())
        .map(|sj| {
            let len = sj.data_size_kb.clamp(1, MAX_ELEMS_PER_LEAF) as usize;
            let slice = (0..len).map(|_| rng.gen_range(-1_000..=1_000)).collect();
            (sj.id, slice)
        })
        .collect()
}

/// A leaf's local fold: plain sequential integer summation.
pub fn fold_slice(xs: &[i64]) -> i64 {
    xs.iter().sum()
}

/// Evaluates the reduction over the dependency graph: each leaf contributes
/// its given partial value, every other node sums its inputs, and the root's
/// value is the result. This is the direct (non-emulated) route; emulation
/// computes the same value by message flow and the two must agree.
pub fn evaluate_reduction(
    g: &DependencyGraph,
    leaf_values: &BTreeMap<SubJobId, i64>,
) -> Result<i64, WorkloadError> {
    let root = g
        .root()
        .ok_or_else(|| WorkloadError::BadReduction("graph has no unique root".into()))?;
    let order = g
        .topo_order()
        .ok_or_else(|| WorkloadError::BadReduction("graph has a cycle".into()))?;
    let mut values: BTreeMap<SubJobId, i64> = BTreeMap::new();
    for id in order {
        let sj = g.get(id).expect("topo order yields known nodes");
        let value = if sj.inputs.is_empty() {
            if sj.op != OpKind::LeafReduce {
                return Err(WorkloadError::BadReduction(format!(
                    "{id} has no inputs but is not a reduction leaf"
                )));
            }
            *leaf_values.get(&id).ok_or_else(|| {
                WorkloadError::BadReduction(format!("missing leaf value for {id}"))
            })?
        } else {
            sj.inputs.iter().map(|i| values[i]).sum()
        };
        values.insert(id, value);
    }
    Ok(values[&root])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{decompose_job, JobSpec, WorkloadKind};

    fn reduction_graph(total_kb: u64, fan: Vec<u32>) -> DependencyGraph {
        decompose_job(&JobSpec {
            kind: WorkloadKind::ReductionSum,
            total_data_kb: total_kb,
            fan_widths: fan,
            process_size_kb: None,
            patterns: None,
            sequences: None,
        })
        .unwrap()
    }

    #[test]
    fn matches_sequential_fold_over_all_slices() {
        let g = reduction_graph(96, vec![3, 2, 4]);
        let slices = derive_leaf_slices(&g, 42);
        // Oracle: one flat sequential fold over every element in leaf order.
        let expected: i64 = slices.values().flatten().sum();
        let leaf_values: BTreeMap<SubJobId, i64> =
            slices.iter().map(|(id, xs)| (*id, fold_slice(xs))).collect();
        assert_eq!(evaluate_reduction(&g, &leaf_values).unwrap(), expected);
    }

    #[test]
    fn tiny_tree_by_hand() {
        let g = reduction_graph(4, vec![2]);
        let mut leaf_values = BTreeMap::new();
        leaf_values.insert(SubJobId(0), 5);
        leaf_values.insert(SubJobId(1), -2);
        assert_eq!(evaluate_reduction(&g, &leaf_values).unwrap(), 3);
    }

    #[test]
    fn missing_leaf_value_is_an_error() {
        let g = reduction_graph(4, vec![2]);
        let mut leaf_values = BTreeMap::new();
        leaf_values.insert(SubJobId(0), 5);
        assert!(evaluate_reduction(&g, &leaf_values).is_err());
    }

    #[test]
    fn slices_are_seed_stable_and_sized_by_data() {
        let g = reduction_graph(30, vec![3]);
        let a = derive_leaf_slices(&g, 7);
        let b = derive_leaf_slices(&g, 7);
        assert_eq!(a, b);
        assert_ne!(a, derive_leaf_slices(&g, 8));
        assert_eq!(a[&SubJobId(0)].len(), 10);
        assert_eq!(a[&SubJobId(2)].len(), 10);
    }
}
