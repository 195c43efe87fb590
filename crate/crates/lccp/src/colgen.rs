//! Column generation at a branch-and-bound node: restricted master problem
//! management, heuristic-then-exact pricing, the Lagrangian lower bound, and
//! Farkas pricing for infeasible masters.

use std::collections::HashMap;
use std::time::Instant;

use thiserror::Error;

use crate::instance::{CyclePartition, Instance};
use crate::labeling::{
    price_all, Cycle, PricingConfig, PricingConstraints, PricingStats,
};
use crate::lp::{solve_lp, LpError, LpOutcome, LpProblem, RowSense};

/// Integrality tolerance shared by the whole solver.
pub const INT_TOL: f64 = 1e-6;

/// Ceiling with a small integrality tolerance: values within 1e-6 below an
/// integer round to it.
pub fn ceil_tol(x: f64) -> i64 {
    (x - INT_TOL).ceil() as i64
}

#[derive(Debug, Error)]
pub enum CgError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// One edge-branching decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeDecision {
    pub i: usize,
    pub j: usize,
    pub forced: bool,
}

impl EdgeDecision {
    pub fn force(i: usize, j: usize) -> Self {
        EdgeDecision { i, j, forced: true }
    }

    pub fn forbid(i: usize, j: usize) -> Self {
        EdgeDecision { i, j, forced: false }
    }

    pub fn edge(&self) -> (usize, usize) {
        if self.i < self.j {
            (self.i, self.j)
        } else {
            (self.j, self.i)
        }
    }
}

/// Master problem row sense: set partitioning (=) or, under the triangle
/// inequality, set covering (>=).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MasterMode {
    Partition,
    Cover,
}

impl MasterMode {
    fn row_sense(self) -> RowSense {
        match self {
            MasterMode::Partition => RowSense::Equal,
            MasterMode::Cover => RowSense::GreaterEqual,
        }
    }
}

/// Whether a column is compatible with a set of branching decisions:
/// forbidden edges must be absent; a forced edge must be used by every
/// column containing one of its endpoints.
pub fn cycle_respects_decisions(cycle: &Cycle, decisions: &[EdgeDecision]) -> bool {
    for d in decisions {
        let (i, j) = d.edge();
        if d.forced {
            if (cycle.contains(i) || cycle.contains(j)) && !cycle.uses_edge(i, j) {
                return false;
            }
        } else if cycle.uses_edge(i, j) {
            return false;
        }
    }
    true
}

/// All columns ever generated, deduplicated by canonical form. Columns are
/// never deleted, only masked per tree node.
#[derive(Debug, Default)]
pub struct ColumnPool {
    pub columns: Vec<Cycle>,
    index: HashMap<Vec<usize>, usize>,
}

impl ColumnPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Inserts a column unless an identical canonical form is present.
    /// Returns (pool id, was_new).
    pub fn add(&mut self, cycle: Cycle) -> (usize, bool) {
        if let Some(&id) = self.index.get(&cycle.nodes) {
            return (id, false);
        }
        let id = self.columns.len();
        self.index.insert(cycle.nodes.clone(), id);
        self.columns.push(cycle);
        (id, true)
    }
}

/// The root pool: all singletons plus the cycles of the primal heuristic.
pub fn initialize_root_pool(inst: &Instance, heuristic: &CyclePartition) -> ColumnPool {
    let mut pool = ColumnPool::new();
    for s in 0..inst.n {
        pool.add(Cycle::from_raw(vec![s], 0.0, inst.crit[s], 0.0));
    }
    for c in &heuristic.cycles {
        pool.add(c.clone());
    }
    pool
}

/// Active mask of the pool under a node's branching decisions.
pub fn filter_columns(pool: &ColumnPool, decisions: &[EdgeDecision]) -> Vec<bool> {
    pool.columns
        .iter()
        .map(|c| cycle_respects_decisions(c, decisions))
        .collect()
}

/// Lagrangian lower bound: ceil(z_RMP + sum of clamped per-start pricing
/// minima). Minima must come from an exact pricing round.
pub fn lagrangian_bound(z_rmp: f64, per_start_minima: &[f64]) -> i64 {
    let sum: f64 = per_start_minima.iter().map(|&m| m.min(0.0)).sum();
    ceil_tol(z_rmp + sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgStatus {
    Converged,
    Infeasible,
    BoundPruned,
    LimitHit,
    /// Pricing was skipped: the first RMP ceiling already matches the
    /// parent's bound.
    EarlyBranch,
}

#[derive(Debug, Clone)]
pub struct CgResult {
    pub status: CgStatus,
    pub lp_objective: f64,
    pub lagrangian_lb: i64,
    /// Fractional primal values aligned with `active` pool ids.
    pub primal: Vec<f64>,
    pub duals: Vec<f64>,
    pub active: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CgStats {
    pub pricing_rounds: u64,
    pub farkas_rounds: u64,
    pub lp_solves: u64,
    pub columns_added: u64,
    pub pricing: PricingStats,
}

#[derive(Debug, Clone)]
pub struct CgConfig {
    pub mode: MasterMode,
    pub bidirectional: bool,
    pub heuristic_pricing: bool,
    pub max_columns_per_round: usize,
    pub redcost_tolerance: f64,
    /// Hard cap on pricing rounds per node.
    pub round_cap: usize,
}

impl Default for CgConfig {
    fn default() -> Self {
        CgConfig {
            mode: MasterMode::Partition,
            bidirectional: true,
            heuristic_pricing: true,
            max_columns_per_round: 50,
            redcost_tolerance: 1e-6,
            round_cap: 10_000,
        }
    }
}

fn constraints_from_decisions(decisions: &[EdgeDecision]) -> PricingConstraints {
    let mut cons = PricingConstraints::unrestricted();
    for d in decisions {
        let e = d.edge();
        if d.forced {
            cons.forced_edges.insert(e);
        } else {
            cons.forbidden_edges.insert(e);
        }
    }
    cons
}

fn build_lp(inst: &Instance, pool: &ColumnPool, active: &[usize], mode: MasterMode) -> LpProblem {
    LpProblem {
        nrows: inst.n,
        obj: vec![1.0; active.len()],
        cols: active
            .iter()
            .map(|&id| pool.columns[id].nodes.clone())
            .collect(),
        row_sense: vec![mode.row_sense(); inst.n],
        rhs: vec![1.0; inst.n],
    }
}

/// In covering mode with zero-dual node elimination, a per-class minimum may
/// be missed when the optimal class-s cycle contains eliminated nodes;
/// stripping those nodes moves the cycle to a class with a higher start
/// index. Replacing each entry by the minimum over classes >= s restores a
/// valid (weaker) bound.
fn suffix_minima(minima: &[f64]) -> Vec<f64> {
    let mut out = minima.to_vec();
    for s in (0..out.len().saturating_sub(1)).rev() {
        out[s] = out[s].min(out[s + 1]);
    }
    out
}

/// Runs the column-generation loop at one tree node.
///
/// `incumbent` is the best known integer objective (for bound pruning);
/// `parent_lb` the inherited lower bound. With `early_branch` set, the loop
/// stops before any pricing when the first RMP ceiling equals `parent_lb`.
#[allow(clippy::too_many_arguments)]
pub fn generate_columns(
    inst: &Instance,
    pool: &mut ColumnPool,
    decisions: &[EdgeDecision],
    cfg: &CgConfig,
    parent_lb: i64,
    incumbent: usize,
    early_branch: bool,
    workers: Option<&rayon::ThreadPool>,
    deadline: Option<Instant>,
    stats: &mut CgStats,
) -> Result<CgResult, CgError> {
    let mut active: Vec<usize> = filter_columns(pool, decisions)
        .iter()
        .enumerate()
        .filter(|(_, &a)| a)
        .map(|(id, _)| id)
        .collect();
    let cons_base = constraints_from_decisions(decisions);
    let mut warm: Option<Vec<usize>> = None;
    let mut lagrangian_lb = parent_lb;
    let mut first_solve = true;

    for _round in 0..cfg.round_cap {
        if let Some(dl) = deadline {
            if Instant::now() >= dl {
                return Ok(CgResult {
                    status: CgStatus::LimitHit,
                    lp_objective: f64::NAN,
                    lagrangian_lb,
                    primal: Vec::new(),
                    duals: Vec::new(),
                    active,
                });
            }
        }
        let lp = build_lp(inst, pool, &active, cfg.mode);
        stats.lp_solves += 1;
        let outcome = solve_lp(&lp, warm.as_deref())?;
        let (primal, duals, objective, basis) = match outcome {
            LpOutcome::Infeasible { farkas_ray } => {
                stats.farkas_rounds += 1;
                let added = farkas_round(
                    inst, pool, &mut active, decisions, &cons_base, cfg, &farkas_ray, workers,
                    stats,
                )?;
                if !added {
                    return Ok(CgResult {
                        status: CgStatus::Infeasible,
                        lp_objective: f64::INFINITY,
                        lagrangian_lb: i64::MAX,
                        primal: Vec::new(),
                        duals: Vec::new(),
                        active,
                    });
                }
                warm = None;
                continue;
            }
            LpOutcome::Optimal {
                primal,
                duals,
                objective,
                basis,
            } => (primal, duals, objective, basis),
        };
        warm = Some(basis);

        if first_solve {
            first_solve = false;
            if early_branch && ceil_tol(objective) == parent_lb {
                return Ok(CgResult {
                    status: CgStatus::EarlyBranch,
                    lp_objective: objective,
                    lagrangian_lb: parent_lb,
                    primal,
                    duals,
                    active,
                });
            }
        }

        let elimination = cfg.mode == MasterMode::Cover && inst.is_metric;
        let mut cons = cons_base.clone();
        let pricing_cfg = PricingConfig {
            bidirectional: cfg.bidirectional,
            heuristic_dominance: false,
            max_cycles_returned: cfg.max_columns_per_round,
            redcost_tolerance: cfg.redcost_tolerance,
            redcost_cutoff: -cfg.redcost_tolerance,
        };

        // heuristic pricing first: relaxed dominance, no bound update
        if cfg.heuristic_pricing {
            stats.pricing_rounds += 1;
            let mut hcfg = pricing_cfg.clone();
            hcfg.heuristic_dominance = true;
            let mut hcons = cons.clone();
            if elimination {
                hcons.allowed_nodes =
                    Some(duals.iter().map(|&p| p > cfg.redcost_tolerance).collect());
            }
            let (cycles, _, pstats) = price_all(&duals, inst, &hcons, &hcfg, workers);
            stats.pricing.add(&pstats);
            if add_columns(pool, &mut active, decisions, cycles, stats) {
                continue;
            }
        }

        // exact pricing: proves convergence and updates the Lagrangian bound
        stats.pricing_rounds += 1;
        if elimination {
            cons.allowed_nodes = Some(duals.iter().map(|&p| p > cfg.redcost_tolerance).collect());
        }
        let (cycles, minima, pstats) = price_all(&duals, inst, &cons, &pricing_cfg, workers);
        stats.pricing.add(&pstats);
        let minima = if elimination {
            suffix_minima(&minima)
        } else {
            minima
        };
        lagrangian_lb = lagrangian_lb.max(lagrangian_bound(objective, &minima));
        if lagrangian_lb >= 0 && lagrangian_lb as u64 >= incumbent as u64 {
            return Ok(CgResult {
                status: CgStatus::BoundPruned,
                lp_objective: objective,
                lagrangian_lb,
                primal,
                duals,
                active,
            });
        }
        let any = !cycles.is_empty();
        let added = add_columns(pool, &mut active, decisions, cycles, stats);
        if !any || !added {
            return Ok(CgResult {
                status: CgStatus::Converged,
                lp_objective: objective,
                lagrangian_lb: lagrangian_lb.max(ceil_tol(objective)),
                primal,
                duals,
                active,
            });
        }
    }
    Ok(CgResult {
        status: CgStatus::LimitHit,
        lp_objective: f64::NAN,
        lagrangian_lb,
        primal: Vec::new(),
        duals: Vec::new(),
        active,
    })
}

/// Adds priced cycles to the pool and the active set; duplicates are
/// discarded silently. Returns whether any new active column appeared.
fn add_columns(
    pool: &mut ColumnPool,
    active: &mut Vec<usize>,
    decisions: &[EdgeDecision],
    cycles: Vec<Cycle>,
    stats: &mut CgStats,
) -> bool {
    let mut any = false;
    for c in cycles {
        debug_assert!(cycle_respects_decisions(&c, decisions));
        let (id, new) = pool.add(c);
        if new {
            active.push(id);
            stats.columns_added += 1;
            any = true;
        }
    }
    any
}

/// Prices against a Farkas ray: node weights y, column score sum(y_i) over
/// the cycle; columns with score > tolerance cut the ray. Returns false when
/// no such column exists, i.e. the node's master problem is infeasible.
#[allow(clippy::too_many_arguments)]
fn farkas_round(
    inst: &Instance,
    pool: &mut ColumnPool,
    active: &mut Vec<usize>,
    decisions: &[EdgeDecision],
    cons_base: &PricingConstraints,
    cfg: &CgConfig,
    ray: &[f64],
    workers: Option<&rayon::ThreadPool>,
    stats: &mut CgStats,
) -> Result<bool, CgError> {
    let ray_rhs: f64 = ray.iter().sum();
    if ray_rhs <= 1e-9 {
        return Err(CgError::Numerical(
            "Farkas ray does not certify infeasibility".into(),
        ));
    }
    // score(C) = sum y_i > tol  <=>  labeling reduced cost 1 - sum y_i < 1 - tol
    let pricing_cfg = PricingConfig {
        bidirectional: cfg.bidirectional,
        heuristic_dominance: false,
        max_cycles_returned: cfg.max_columns_per_round,
        redcost_tolerance: cfg.redcost_tolerance,
        redcost_cutoff: 1.0 - cfg.redcost_tolerance,
    };
    let (cycles, _, pstats) = price_all(ray, inst, cons_base, &pricing_cfg, workers);
    stats.pricing.add(&pstats);
    Ok(add_columns(pool, active, decisions, cycles, stats))
}
