//! Brute-force ground truth for small instances: exhaustive enumeration of
//! all length-feasible cycles, the exact minimum cycle partition by subset
//! dynamic programming, and exact pricing minima.

use thiserror::Error;

use crate::colgen::{cycle_respects_decisions, EdgeDecision};
use crate::instance::Instance;
use crate::labeling::Cycle;

/// Enumeration cost grows factorially; fail loudly beyond this.
pub const MAX_ORACLE_NODES: usize = 12;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("oracle supports at most {MAX_ORACLE_NODES} nodes, got {0}")]
    TooLarge(usize),
}

/// Every length-feasible cycle of an instance, in canonical form.
#[derive(Debug, Clone)]
pub struct CycleCatalog {
    pub cycles: Vec<Cycle>,
}

impl CycleCatalog {
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }
}

/// Depth-first enumeration over canonical representatives: each cycle is
/// generated once, from its minimum node, with the direction fixed by the
/// second node being smaller than the last.
pub fn enumerate_cycles(
    inst: &Instance,
    decisions: &[EdgeDecision],
) -> Result<CycleCatalog, OracleError> {
    if inst.n > MAX_ORACLE_NODES {
        return Err(OracleError::TooLarge(inst.n));
    }
    let n = inst.n;
    let mut cycles = Vec::new();
    let mut emit = |path: &[usize]| {
        let c = Cycle::from_path(path, inst, 0.0);
        if c.time <= c.min_crit && cycle_respects_decisions(&c, decisions) {
            cycles.push(c);
        }
    };
    for s in 0..n {
        emit(&[s]);
        let mut path = vec![s];
        let mut visited = 1u64 << s;
        dfs(inst, s, &mut path, &mut visited, 0.0, inst.crit[s], &mut emit);
    }
    cycles.sort_by(|a, b| a.nodes.cmp(&b.nodes));
    Ok(CycleCatalog { cycles })
}

fn dfs(
    inst: &Instance,
    s: usize,
    path: &mut Vec<usize>,
    visited: &mut u64,
    time: f64,
    min_crit: f64,
    emit: &mut impl FnMut(&[usize]),
) {
    let end = *path.last().unwrap();
    if path.len() == 2 || (path.len() >= 3 && path[1] < end) {
        emit(path);
    }
    for j in (s + 1)..inst.n {
        if *visited & (1 << j) != 0 {
            continue;
        }
        let t = time + inst.travel[end][j];
        let q = min_crit.min(inst.crit[j]);
        if t > q {
            continue;
        }
        path.push(j);
        *visited |= 1 << j;
        dfs(inst, s, path, visited, t, q, emit);
        *visited &= !(1 << j);
        path.pop();
    }
}

/// Exact optimum by dynamic programming over node subsets, anchored at the
/// minimum element of each subset so every partition is counted once.
pub fn optimal_partition(inst: &Instance) -> Result<usize, OracleError> {
    let catalog = enumerate_cycles(inst, &[])?;
    Ok(optimal_partition_from_catalog(inst.n, &catalog))
}

/// Subset DP over a (possibly decision-filtered) catalog. Returns None when
/// no covering partition exists under the filter.
pub fn partition_from_catalog(n: usize, catalog: &CycleCatalog) -> Option<usize> {
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut by_min: Vec<Vec<u64>> = vec![Vec::new(); n];
    for c in &catalog.cycles {
        by_min[c.nodes[0]].push(c.mask());
    }
    const INF: u32 = u32::MAX;
    let mut f = vec![INF; (full + 1) as usize];
    f[0] = 0;
    for set in 1..=full {
        let anchor = set.trailing_zeros() as usize;
        let mut best = INF;
        for &mask in &by_min[anchor] {
            if mask & !set == 0 {
                let rest = f[(set ^ mask) as usize];
                if rest != INF && rest + 1 < best {
                    best = rest + 1;
                }
            }
        }
        f[set as usize] = best;
    }
    if f[full as usize] == INF {
        None
    } else {
        Some(f[full as usize] as usize)
    }
}

fn optimal_partition_from_catalog(n: usize, catalog: &CycleCatalog) -> usize {
    // singleton cycles are always feasible, so a partition always exists
    partition_from_catalog(n, catalog).expect("unfiltered catalog always covers")
}

/// Minimum reduced cost (1 - sum of duals) over catalog cycles whose lowest
/// node index equals `start`, respecting branching decisions. Infinity when
/// the class is empty.
pub fn min_redcost(
    inst: &Instance,
    duals: &[f64],
    start: usize,
    decisions: &[EdgeDecision],
) -> Result<f64, OracleError> {
    let catalog = enumerate_cycles(inst, decisions)?;
    Ok(catalog
        .cycles
        .iter()
        .filter(|c| c.nodes[0] == start)
        .map(|c| 1.0 - c.nodes.iter().map(|&v| duals[v]).sum::<f64>())
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{cycle_time, generate_euclidean, Instance};
    use crate::labeling::canonicalize;
    use std::collections::HashSet;

    fn two_node(t: f64, q0: f64, q1: f64) -> Instance {
        Instance::new(vec![vec![0.0, t], vec![t, 0.0]], vec![q0, q1], false).unwrap()
    }

    #[test]
    fn two_node_catalogs() {
        let cat = enumerate_cycles(&two_node(3.0, 10.0, 10.0), &[]).unwrap();
        let nodes: Vec<_> = cat.cycles.iter().map(|c| c.nodes.clone()).collect();
        assert_eq!(nodes, vec![vec![0], vec![0, 1], vec![1]]);
        let times: Vec<f64> = cat.cycles.iter().map(|c| c.time).collect();
        assert_eq!(times, vec![0.0, 6.0, 0.0]);

        let cat = enumerate_cycles(&two_node(3.0, 5.0, 10.0), &[]).unwrap();
        let nodes: Vec<_> = cat.cycles.iter().map(|c| c.nodes.clone()).collect();
        assert_eq!(nodes, vec![vec![0], vec![1]]);
    }

    /// Independent counter: enumerate all permutations of all subsets,
    /// canonicalize, deduplicate.
    fn permutation_catalog(inst: &Instance) -> HashSet<Vec<usize>> {
        let n = inst.n;
        let mut out = HashSet::new();
        let full = (1u64 << n) - 1;
        for set in 1..=full {
            let members: Vec<usize> = (0..n).filter(|&v| set & (1 << v) != 0).collect();
            let mut perm = members.clone();
            permute(&mut perm, 0, &mut |p| {
                let canon = canonicalize(p);
                let t = cycle_time(inst, &canon);
                let q = canon.iter().map(|&v| inst.crit[v]).fold(f64::INFINITY, f64::min);
                if t <= q {
                    out.insert(canon);
                }
            });
        }
        out
    }

    fn permute(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k == v.len() {
            f(v);
            return;
        }
        for i in k..v.len() {
            v.swap(k, i);
            permute(v, k + 1, f);
            v.swap(k, i);
        }
    }

    #[test]
    fn catalog_matches_permutation_enumerator() {
        let inst = generate_euclidean(6, 8, 100.0, 150.0, 350.0).unwrap();
        let cat = enumerate_cycles(&inst, &[]).unwrap();
        let perm = permutation_catalog(&inst);
        let ours: HashSet<Vec<usize>> = cat.cycles.iter().map(|c| c.nodes.clone()).collect();
        assert_eq!(ours, perm);
        assert_eq!(cat.len(), ours.len(), "no duplicates");
    }

    #[test]
    fn optimal_partition_trivia() {
        let inst = Instance::new(vec![vec![0.0]], vec![1.0], false).unwrap();
        assert_eq!(optimal_partition(&inst).unwrap(), 1);

        let inst = two_node(100.0, 5.0, 5.0);
        assert_eq!(optimal_partition(&inst).unwrap(), 2);
    }

    /// Exhaustive partition enumeration for cross-validation of the DP.
    fn exhaustive_optimum(n: usize, catalog: &CycleCatalog) -> usize {
        fn rec(remaining: u64, catalog: &[(u64, ())], count: usize, best: &mut usize) {
            if remaining == 0 {
                *best = (*best).min(count);
                return;
            }
            if count + 1 >= *best {
                return;
            }
            let anchor = remaining.trailing_zeros();
            for &(mask, _) in catalog {
                if mask & (1 << anchor) != 0 && mask & !remaining == 0 {
                    rec(remaining ^ mask, catalog, count + 1, best);
                }
            }
        }
        let masks: Vec<(u64, ())> = catalog.cycles.iter().map(|c| (c.mask(), ())).collect();
        let mut best = usize::MAX;
        rec((1u64 << n) - 1, &masks, 0, &mut best);
        best
    }

    #[test]
    fn dp_matches_exhaustive_enumeration() {
        for seed in 0..10 {
            let inst = generate_euclidean(6, seed, 100.0, 120.0, 300.0).unwrap();
            let cat = enumerate_cycles(&inst, &[]).unwrap();
            let dp = optimal_partition(&inst).unwrap();
            let ex = exhaustive_optimum(6, &cat);
            assert_eq!(dp, ex, "seed {seed}");
        }
    }

    #[test]
    fn min_redcost_trivia() {
        let inst = generate_euclidean(5, 3, 100.0, 150.0, 300.0).unwrap();
        // zero duals: every cycle costs exactly 1
        for s in 0..5 {
            let m = min_redcost(&inst, &[0.0; 5], s, &[]).unwrap();
            assert_eq!(m, 1.0);
        }
        // dual 2 at node 4 only: singleton (4) gives -1
        let mut duals = [0.0; 5];
        duals[4] = 2.0;
        let m = min_redcost(&inst, &duals, 4, &[]).unwrap();
        assert!(m <= -1.0 + 1e-12);
    }

    #[test]
    fn size_guard() {
        let inst = generate_euclidean(13, 0, 10.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            enumerate_cycles(&inst, &[]),
            Err(OracleError::TooLarge(13))
        ));
    }
}
