//! Branch-and-bound driver: edge branching on the most used edge, node
//! selection by best estimate with plunging, early branching, incumbent
//! management, and the greedy primal heuristic.

use std::time::Instant;

use thiserror::Error;

use crate::colgen::{
    ceil_tol, generate_columns, initialize_root_pool, CgConfig, CgError, CgStats, CgStatus,
    EdgeDecision, MasterMode, INT_TOL,
};
use crate::instance::{
    cycle_min_crit, cycle_time, relabel_by_critical_time, validate_partition, CyclePartition,
    Instance, NodeRelabeling,
};
use crate::labeling::{Cycle, PricingStats, MAX_PRICING_NODES};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("covering mode requires metric instance")]
    CoverNeedsMetric,
    #[error("solver supports at most {MAX_PRICING_NODES} nodes, got {0}")]
    TooLarge(usize),
    #[error(transparent)]
    Cg(#[from] CgError),
    #[error("internal error: {0}")]
    Internal(String),
}

/// Solver switches, surfaced one-to-one as CLI flags.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub mode: MasterMode,
    pub bidirectional: bool,
    pub symmetry_sort: bool,
    pub early_branching: bool,
    pub heuristic_pricing: bool,
    pub workers: usize,
    pub time_limit_s: f64,
    pub max_columns_per_round: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mode: MasterMode::Partition,
            bidirectional: true,
            symmetry_sort: true,
            early_branching: true,
            heuristic_pricing: true,
            workers: 1,
            time_limit_s: f64::INFINITY,
            max_columns_per_round: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Timeout,
}

/// Aggregate counters of one solve.
#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    pub nodes_processed: u64,
    pub lp_solves: u64,
    pub pricing_rounds: u64,
    pub farkas_rounds: u64,
    pub columns_added: u64,
    pub pricing: PricingStats,
    pub wall_time_s: f64,
    pub root_lp: Option<f64>,
    pub lower_bound: i64,
    pub upper_bound: usize,
}

/// A branch-and-bound node. A child's decisions extend its parent's by
/// exactly one edge decision; bounds never decrease along a path.
#[derive(Debug, Clone)]
pub struct TreeNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub decisions: Vec<EdgeDecision>,
    pub parent_lb: i64,
    pub depth: usize,
    pub estimate: f64,
}

const PLUNGE_DEPTH_CAP: usize = 10;

/// Greedy primal heuristic: seed with the unassigned node of smallest
/// critical time, grow the cycle by cheapest insertion while the length
/// constraint holds, repeat. Always yields a valid partition.
pub fn greedy_primal(inst: &Instance) -> CyclePartition {
    let n = inst.n;
    let mut unassigned: Vec<bool> = vec![true; n];
    let mut remaining = n;
    let mut cycles = Vec::new();
    while remaining > 0 {
        let seed = (0..n)
            .filter(|&v| unassigned[v])
            .min_by(|&a, &b| inst.crit[a].partial_cmp(&inst.crit[b]).unwrap().then(a.cmp(&b)))
            .unwrap();
        unassigned[seed] = false;
        remaining -= 1;
        let mut nodes = vec![seed];
        loop {
            let mut best: Option<(f64, usize, usize)> = None; // (time, node, position)
            for j in 0..n {
                if !unassigned[j] {
                    continue;
                }
                for pos in 0..nodes.len() {
                    let mut cand = nodes.clone();
                    cand.insert(pos + 1, j);
                    let t = cycle_time(inst, &cand);
                    let q = cycle_min_crit(inst, &cand);
                    if t <= q {
                        let better = match best {
                            None => true,
                            Some((bt, bj, bp)) => {
                                t < bt - 1e-12
                                    || ((t - bt).abs() <= 1e-12 && (j, pos) < (bj, bp))
                            }
                        };
                        if better {
                            best = Some((t, j, pos));
                        }
                    }
                }
            }
            match best {
                Some((_, j, pos)) => {
                    nodes.insert(pos + 1, j);
                    unassigned[j] = false;
                    remaining -= 1;
                }
                None => break,
            }
        }
        cycles.push(Cycle::from_path(&nodes, inst, 0.0));
    }
    CyclePartition::new(cycles)
}

/// The most used edge over the fractional part of the LP solution.
/// Singleton columns contribute nothing; a 2-cycle contributes twice its
/// value to its single edge. Ties break to the lexicographically smallest
/// edge. Returns None when no undecided candidate edge exists.
pub fn select_branching_edge(
    primal: &[f64],
    active_cycles: &[&Cycle],
    decisions: &[EdgeDecision],
) -> Option<(usize, usize)> {
    use std::collections::{HashMap, HashSet};
    let decided: HashSet<(usize, usize)> = decisions.iter().map(|d| d.edge()).collect();
    let mut usage: HashMap<(usize, usize), f64> = HashMap::new();
    let mut candidates: HashSet<(usize, usize)> = HashSet::new();
    for (&lambda, cycle) in primal.iter().zip(active_cycles) {
        if lambda <= INT_TOL {
            continue;
        }
        let weight = if cycle.nodes.len() == 2 { 2.0 * lambda } else { lambda };
        let fractional = lambda < 1.0 - INT_TOL;
        for e in cycle.edges() {
            *usage.entry(e).or_insert(0.0) += weight;
            if fractional && !decided.contains(&e) {
                candidates.insert(e);
            }
        }
    }
    candidates
        .into_iter()
        .max_by(|a, b| {
            usage[a]
                .partial_cmp(&usage[b])
                .unwrap()
                .then_with(|| b.cmp(a)) // lexicographically smallest wins ties
        })
}

/// Creates the force/forbid children of a node for the chosen edge.
pub fn branch(node: &TreeNode, edge: (usize, usize), node_lb: i64, frac_count: usize, next_id: usize) -> (TreeNode, TreeNode) {
    let edge = (edge.0.min(edge.1), edge.0.max(edge.1));
    assert!(
        !node.decisions.iter().any(|d| d.edge() == edge),
        "edge {edge:?} already decided on this path"
    );
    let estimate = node_lb as f64 + 0.5 * frac_count as f64;
    let mk = |id: usize, forced: bool| {
        let mut decisions = node.decisions.clone();
        decisions.push(if forced {
            EdgeDecision::force(edge.0, edge.1)
        } else {
            EdgeDecision::forbid(edge.0, edge.1)
        });
        TreeNode {
            id,
            parent: Some(node.id),
            decisions,
            parent_lb: node_lb,
            depth: node.depth + 1,
            estimate,
        }
    };
    (mk(next_id, true), mk(next_id + 1, false))
}

/// Early-branching test: pricing cannot improve on the parent bound when the
/// first RMP ceiling already matches it.
pub fn should_early_branch(parent_lb: i64, z_rmp_first: f64) -> bool {
    ceil_tol(z_rmp_first) == parent_lb
}

/// Extracts an integral solution from the LP primal, if any. In covering
/// mode, nodes covered more than once are stripped from all but the first
/// cycle (feasible under the triangle inequality).
pub fn check_integrality(
    primal: &[f64],
    active_cycles: &[&Cycle],
    mode: MasterMode,
    inst: &Instance,
) -> Option<CyclePartition> {
    let mut chosen: Vec<Vec<usize>> = Vec::new();
    for (&lambda, cycle) in primal.iter().zip(active_cycles) {
        if lambda > 1.0 - INT_TOL && lambda < 1.0 + INT_TOL {
            chosen.push(cycle.nodes.clone());
        } else if lambda > INT_TOL {
            return None; // fractional
        }
    }
    if mode == MasterMode::Cover {
        let mut seen = vec![false; inst.n];
        for nodes in chosen.iter_mut() {
            nodes.retain(|&v| {
                if seen[v] {
                    false
                } else {
                    seen[v] = true;
                    true
                }
            });
        }
        chosen.retain(|nodes| !nodes.is_empty());
    }
    let cycles: Vec<Cycle> = chosen
        .iter()
        .map(|nodes| Cycle::from_path(nodes, inst, 0.0))
        .collect();
    let part = CyclePartition::new(cycles);
    let verdict = validate_partition(inst, &part);
    assert!(
        verdict.is_accept(),
        "extracted integral solution failed validation: {verdict}"
    );
    Some(part)
}

struct Tree {
    nodes: Vec<TreeNode>,
    open: Vec<usize>,
    /// children of the last processed node, force-child first
    plunge_children: Vec<usize>,
    plunge_depth: usize,
}

impl Tree {
    fn select_next(&mut self) -> Option<TreeNode> {
        if self.open.is_empty() {
            return None;
        }
        if self.plunge_depth < PLUNGE_DEPTH_CAP {
            while let Some(&child) = self.plunge_children.first() {
                self.plunge_children.remove(0);
                if let Some(pos) = self.open.iter().position(|&id| id == child) {
                    self.open.remove(pos);
                    self.plunge_depth += 1;
                    return Some(self.nodes[child].clone());
                }
            }
        }
        self.plunge_depth = 0;
        self.plunge_children.clear();
        let best = self
            .open
            .iter()
            .enumerate()
            .min_by(|(_, &a), (_, &b)| {
                self.nodes[a]
                    .estimate
                    .partial_cmp(&self.nodes[b].estimate)
                    .unwrap()
                    .then(a.cmp(&b))
            })
            .map(|(pos, _)| pos)
            .unwrap();
        let id = self.open.remove(best);
        Some(self.nodes[id].clone())
    }

    fn open_lower_bound(&self) -> Option<i64> {
        self.open.iter().map(|&id| self.nodes[id].parent_lb).min()
    }
}

/// Solves an instance to proven optimality (or best incumbent at timeout).
pub fn solve(
    inst: &Instance,
    cfg: &SolverConfig,
) -> Result<(CyclePartition, SolveStats, SolveStatus), SolveError> {
    let t0 = Instant::now();
    if cfg.mode == MasterMode::Cover && !inst.is_metric {
        return Err(SolveError::CoverNeedsMetric);
    }
    if inst.n > MAX_PRICING_NODES {
        return Err(SolveError::TooLarge(inst.n));
    }
    let deadline = if cfg.time_limit_s.is_finite() {
        Some(t0 + std::time::Duration::from_secs_f64(cfg.time_limit_s.max(0.0)))
    } else {
        None
    };
    let pool_threads = if cfg.workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.workers)
                .build()
                .map_err(|e| SolveError::Internal(e.to_string()))?,
        )
    } else {
        None
    };

    let (work, relabeling) = if cfg.symmetry_sort {
        relabel_by_critical_time(inst)
    } else {
        (inst.clone(), NodeRelabeling::identity(inst.n))
    };

    let mut stats = SolveStats::default();
    let mut incumbent = greedy_primal(&work);
    debug_assert!(validate_partition(&work, &incumbent).is_accept());
    let mut pool = initialize_root_pool(&work, &incumbent);

    let cg_cfg = CgConfig {
        mode: cfg.mode,
        bidirectional: cfg.bidirectional,
        heuristic_pricing: cfg.heuristic_pricing,
        max_columns_per_round: cfg.max_columns_per_round,
        redcost_tolerance: 1e-6,
        round_cap: 10_000,
    };

    let root = TreeNode {
        id: 0,
        parent: None,
        decisions: Vec::new(),
        parent_lb: 1,
        depth: 0,
        estimate: 0.0,
    };
    let mut tree = Tree {
        nodes: vec![root],
        open: vec![0],
        plunge_children: Vec::new(),
        plunge_depth: 0,
    };
    let mut status = SolveStatus::Optimal;

    while let Some(node) = tree.select_next() {
        if let Some(dl) = deadline {
            if Instant::now() >= dl {
                status = SolveStatus::Timeout;
                tree.open.push(node.id);
                break;
            }
        }
        // fathom on the inherited bound: an improving solution must be
        // at most incumbent - 1
        if node.parent_lb >= incumbent.objective as i64 {
            continue;
        }
        stats.nodes_processed += 1;
        let mut cg_stats = CgStats::default();
        let early = cfg.early_branching && node.parent.is_some();
        let mut res = generate_columns(
            &work,
            &mut pool,
            &node.decisions,
            &cg_cfg,
            node.parent_lb,
            incumbent.objective,
            early,
            pool_threads.as_ref(),
            deadline,
            &mut cg_stats,
        )?;

        // an early-branched node whose filtered LP is already integral:
        // take the incumbent candidate, then fall back to full pricing
        // unless the node is fathomed by it
        if res.status == CgStatus::EarlyBranch {
            let active_cycles: Vec<&Cycle> =
                res.active.iter().map(|&id| &pool.columns[id]).collect();
            if let Some(part) = check_integrality(&res.primal, &active_cycles, cfg.mode, &work) {
                if part.objective < incumbent.objective {
                    incumbent = part;
                }
                if node.parent_lb >= incumbent.objective as i64 {
                    accumulate(&mut stats, &cg_stats);
                    continue;
                }
                res = generate_columns(
                    &work,
                    &mut pool,
                    &node.decisions,
                    &cg_cfg,
                    node.parent_lb,
                    incumbent.objective,
                    false,
                    pool_threads.as_ref(),
                    deadline,
                    &mut cg_stats,
                )?;
            }
        }
        accumulate(&mut stats, &cg_stats);

        match res.status {
            CgStatus::Infeasible | CgStatus::BoundPruned => continue,
            CgStatus::LimitHit => {
                status = SolveStatus::Timeout;
                tree.open.push(node.id);
                break;
            }
            CgStatus::EarlyBranch => {
                // bound stays at parent_lb; branch on the filtered LP solution
                let active_cycles: Vec<&Cycle> =
                    res.active.iter().map(|&id| &pool.columns[id]).collect();
                process_fractional(
                    &node,
                    node.parent_lb,
                    &res.primal,
                    &active_cycles,
                    &mut tree,
                );
            }
            CgStatus::Converged => {
                if node.parent.is_none() {
                    stats.root_lp = Some(res.lp_objective);
                }
                let node_lb = node
                    .parent_lb
                    .max(res.lagrangian_lb)
                    .max(ceil_tol(res.lp_objective));
                if node_lb >= incumbent.objective as i64 {
                    continue;
                }
                let active_cycles: Vec<&Cycle> =
                    res.active.iter().map(|&id| &pool.columns[id]).collect();
                if let Some(part) =
                    check_integrality(&res.primal, &active_cycles, cfg.mode, &work)
                {
                    // the node's LP optimum is integral: node is solved
                    if part.objective < incumbent.objective {
                        incumbent = part;
                    }
                    continue;
                }
                process_fractional(&node, node_lb, &res.primal, &active_cycles, &mut tree);
            }
        }
    }

    let lower_bound = match status {
        SolveStatus::Optimal => incumbent.objective as i64,
        SolveStatus::Timeout => tree
            .open_lower_bound()
            .unwrap_or(incumbent.objective as i64)
            .min(incumbent.objective as i64),
    };
    let solution = relabeling.partition_to_original(&incumbent);
    debug_assert!(validate_partition(inst, &solution).is_accept());
    stats.wall_time_s = t0.elapsed().as_secs_f64();
    stats.lower_bound = lower_bound;
    stats.upper_bound = solution.objective;
    Ok((solution, stats, status))
}

fn process_fractional(
    node: &TreeNode,
    node_lb: i64,
    primal: &[f64],
    active_cycles: &[&Cycle],
    tree: &mut Tree,
) {
    let frac_count = primal
        .iter()
        .filter(|&&l| l > INT_TOL && l < 1.0 - INT_TOL)
        .count();
    let edge = match select_branching_edge(primal, active_cycles, &node.decisions) {
        Some(e) => e,
        None => {
            // no undecided fractional edge: widen to any edge of a used
            // column not yet decided (rare, deep in the tree)
            let decided: std::collections::HashSet<(usize, usize)> =
                node.decisions.iter().map(|d| d.edge()).collect();
            let mut fallback: Option<(usize, usize)> = None;
            for (&l, c) in primal.iter().zip(active_cycles) {
                if l <= INT_TOL {
                    continue;
                }
                for e in c.edges() {
                    if !decided.contains(&e) && fallback.is_none_or(|f| e < f) {
                        fallback = Some(e);
                    }
                }
            }
            match fallback {
                Some(e) => e,
                None => return, // nothing left to branch on
            }
        }
    };
    let next_id = tree.nodes.len();
    let (force_child, forbid_child) = branch(node, edge, node_lb, frac_count, next_id);
    tree.open.push(force_child.id);
    tree.open.push(forbid_child.id);
    tree.plunge_children = vec![force_child.id, forbid_child.id];
    tree.nodes.push(force_child);
    tree.nodes.push(forbid_child);
}

fn accumulate(stats: &mut SolveStats, cg: &CgStats) {
    stats.lp_solves += cg.lp_solves;
    stats.pricing_rounds += cg.pricing_rounds;
    stats.farkas_rounds += cg.farkas_rounds;
    stats.columns_added += cg.columns_added;
    stats.pricing.add(&cg.pricing);
}
