//! Instance data model: file I/O, random generation, the metric-closure
//! transform, critical-time relabeling and solution validation.

use std::io::Read;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labeling::Cycle;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Input format of an instance stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceFormat {
    Text,
    Json,
}

/// A complete undirected graph with symmetric travel times and per-node
/// critical times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instance {
    pub n: usize,
    pub travel: Vec<Vec<f64>>,
    pub crit: Vec<f64>,
    pub is_metric: bool,
}

#[derive(Deserialize)]
struct JsonInstance {
    n: usize,
    crit: Vec<f64>,
    travel: Vec<Vec<f64>>,
    #[serde(default)]
    metric: bool,
}

impl Instance {
    /// Builds an instance and checks every invariant. Asymmetric matrices
    /// are rejected, not symmetrized.
    pub fn new(
        travel: Vec<Vec<f64>>,
        crit: Vec<f64>,
        is_metric: bool,
    ) -> Result<Self, InstanceError> {
        let n = crit.len();
        if n == 0 {
            return Err(InstanceError::Validation("empty instance (n = 0)".into()));
        }
        if travel.len() != n || travel.iter().any(|row| row.len() != n) {
            return Err(InstanceError::Validation(format!(
                "travel matrix is not {n}x{n}"
            )));
        }
        for (i, &q) in crit.iter().enumerate() {
            if !(q > 0.0) {
                return Err(InstanceError::Validation(format!(
                    "critical time of node {i} must be positive, got {q}"
                )));
            }
        }
        for i in 0..n {
            if travel[i][i] != 0.0 {
                return Err(InstanceError::Validation(format!(
                    "travel[{i}][{i}] must be 0, got {}",
                    travel[i][i]
                )));
            }
            for j in 0..n {
                let t = travel[i][j];
                if !(t >= 0.0) {
                    return Err(InstanceError::Validation(format!(
                        "travel[{i}][{j}] must be nonnegative, got {t}"
                    )));
                }
                if travel[i][j] != travel[j][i] {
                    return Err(InstanceError::Validation(format!(
                        "travel matrix asymmetric at [{i}][{j}]: {} != {}",
                        travel[i][j], travel[j][i]
                    )));
                }
            }
        }
        let inst = Instance {
            n,
            travel,
            crit,
            is_metric,
        };
        if is_metric {
            if let Some((i, j, k)) = inst.triangle_violation() {
                return Err(InstanceError::Validation(format!(
                    "metric flag set but triangle inequality fails for ({i},{j},{k})"
                )));
            }
        }
        Ok(inst)
    }

    /// First triple violating the triangle inequality, if any.
    pub fn triangle_violation(&self) -> Option<(usize, usize, usize)> {
        for i in 0..self.n {
            for j in 0..self.n {
                for k in 0..self.n {
                    if self.travel[i][j] > self.travel[i][k] + self.travel[k][j] {
                        return Some((i, j, k));
                    }
                }
            }
        }
        None
    }
}

/// Parses an instance from a byte stream in the given format.
pub fn load_instance<R: Read>(
    mut source: R,
    format: InstanceFormat,
) -> Result<Instance, InstanceError> {
    let mut buf = String::new();
    source.read_to_string(&mut buf)?;
    match format {
        InstanceFormat::Text => parse_text(&buf),
        InstanceFormat::Json => {
            let j: JsonInstance =
                serde_json::from_str(&buf).map_err(|e| InstanceError::Parse(e.to_string()))?;
            if j.crit.len() != j.n {
                return Err(InstanceError::Parse(format!(
                    "declared n = {} but got {} critical times",
                    j.n,
                    j.crit.len()
                )));
            }
            Instance::new(j.travel, j.crit, j.metric)
        }
    }
}

fn parse_text(buf: &str) -> Result<Instance, InstanceError> {
    let mut tokens = buf.split_whitespace();
    let n: usize = tokens
        .next()
        .ok_or_else(|| InstanceError::Parse("empty stream".into()))?
        .parse()
        .map_err(|e| InstanceError::Parse(format!("node count: {e}")))?;
    let mut next_f64 = |what: &str| -> Result<f64, InstanceError> {
        tokens
            .next()
            .ok_or_else(|| InstanceError::Parse(format!("unexpected end of stream at {what}")))?
            .parse::<f64>()
            .map_err(|e| InstanceError::Parse(format!("{what}: {e}")))
    };
    let mut crit = Vec::with_capacity(n);
    for i in 0..n {
        crit.push(next_f64(&format!("critical time of node {i}"))?);
    }
    let mut travel = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            row.push(next_f64(&format!("travel[{i}][{j}]"))?);
        }
        travel.push(row);
    }
    Instance::new(travel, crit, false)
}

/// Serializes an instance to the JSON interchange format.
pub fn instance_to_json(inst: &Instance) -> String {
    serde_json::json!({
        "n": inst.n,
        "crit": inst.crit,
        "travel": inst.travel,
        "metric": inst.is_metric,
    })
    .to_string()
}

/// Random Euclidean instance: nodes uniform in [0, coord_range]^2, travel
/// times are pairwise distances, critical times uniform in
/// [crit_low, crit_high]. Deterministic in the seed.
pub fn generate_euclidean(
    n: usize,
    seed: u64,
    coord_range: f64,
    crit_low: f64,
    crit_high: f64,
) -> Result<Instance, InstanceError> {
    if n < 1 {
        return Err(InstanceError::Parameter("n must be >= 1".into()));
    }
    if !(crit_low > 0.0) {
        return Err(InstanceError::Parameter("crit_low must be > 0".into()));
    }
    if crit_low > crit_high {
        return Err(InstanceError::Parameter(
            "crit_low must not exceed crit_high".into(),
        ));
    }
    if !(coord_range >= 0.0) {
        return Err(InstanceError::Parameter(
            "coord_range must be nonnegative".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            (
                rng.gen_range(0.0..=coord_range),
                rng.gen_range(0.0..=coord_range),
            )
        })
        .collect();
    let crit: Vec<f64> = (0..n)
        .map(|_| {
            if crit_low == crit_high {
                crit_low
            } else {
                rng.gen_range(crit_low..=crit_high)
            }
        })
        .collect();
    let mut travel = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = coords[i].0 - coords[j].0;
            let dy = coords[i].1 - coords[j].1;
            let d = (dx * dx + dy * dy).sqrt();
            travel[i][j] = d;
            travel[j][i] = d;
        }
    }
    Instance::new(travel, crit, true)
}

/// Replaces every travel time by the shortest-path distance between its
/// endpoints, which enforces the triangle inequality. Idempotent.
pub fn metric_closure(inst: &Instance) -> Instance {
    let n = inst.n;
    let mut d = inst.travel.clone();
    // Floyd-Warshall swept to a fixpoint so that closure(closure(x)) is
    // bit-identical to closure(x) even under floating point.
    loop {
        let mut changed = false;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let relaxed = d[i][k] + d[k][j];
                    if relaxed < d[i][j] {
                        d[i][j] = relaxed;
                        changed = true;
                    }
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let m = d[i][j].min(d[j][i]);
                if d[i][j] != m || d[j][i] != m {
                    d[i][j] = m;
                    d[j][i] = m;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    Instance {
        n,
        travel: d,
        crit: inst.crit.clone(),
        is_metric: true,
    }
}

/// Permutation between original and relabeled node indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeRelabeling {
    /// old index -> new index
    pub forward: Vec<usize>,
    /// new index -> old index
    pub backward: Vec<usize>,
}

impl NodeRelabeling {
    pub fn identity(n: usize) -> Self {
        NodeRelabeling {
            forward: (0..n).collect(),
            backward: (0..n).collect(),
        }
    }

    /// Maps a partition on the relabeled instance back to original indices.
    pub fn partition_to_original(&self, part: &CyclePartition) -> CyclePartition {
        CyclePartition {
            cycles: part
                .cycles
                .iter()
                .map(|c| {
                    let nodes: Vec<usize> = c.nodes.iter().map(|&v| self.backward[v]).collect();
                    Cycle::from_raw(nodes, c.time, c.min_crit, c.redcost_at_generation)
                })
                .collect(),
            objective: part.objective,
        }
    }

    /// Maps a partition given in original indices onto the relabeled instance.
    pub fn partition_to_relabeled(&self, part: &CyclePartition) -> CyclePartition {
        CyclePartition {
            cycles: part
                .cycles
                .iter()
                .map(|c| {
                    let nodes: Vec<usize> = c.nodes.iter().map(|&v| self.forward[v]).collect();
                    Cycle::from_raw(nodes, c.time, c.min_crit, c.redcost_at_generation)
                })
                .collect(),
            objective: part.objective,
        }
    }
}

/// Sorts node indices ascending by critical time (ties by old index), so
/// that pricing from low indices prunes earliest.
pub fn relabel_by_critical_time(inst: &Instance) -> (Instance, NodeRelabeling) {
    let n = inst.n;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| inst.crit[a].partial_cmp(&inst.crit[b]).unwrap().then(a.cmp(&b)));
    let backward = order;
    let mut forward = vec![0; n];
    for (new, &old) in backward.iter().enumerate() {
        forward[old] = new;
    }
    let crit: Vec<f64> = backward.iter().map(|&old| inst.crit[old]).collect();
    let mut travel = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            travel[i][j] = inst.travel[backward[i]][backward[j]];
        }
    }
    (
        Instance {
            n,
            travel,
            crit,
            is_metric: inst.is_metric,
        },
        NodeRelabeling { forward, backward },
    )
}

/// A candidate solution: a set of cycles meant to cover every node once.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclePartition {
    pub cycles: Vec<Cycle>,
    pub objective: usize,
}

impl CyclePartition {
    pub fn new(cycles: Vec<Cycle>) -> Self {
        let objective = cycles.len();
        CyclePartition { cycles, objective }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "objective": self.objective,
            "cycles": self.cycles.iter().map(|c| c.nodes.clone()).collect::<Vec<_>>(),
        })
        .to_string()
    }

    pub fn from_json(s: &str) -> Result<Self, InstanceError> {
        #[derive(Deserialize)]
        struct J {
            objective: usize,
            cycles: Vec<Vec<usize>>,
        }
        let j: J = serde_json::from_str(s).map_err(|e| InstanceError::Parse(e.to_string()))?;
        let part = CyclePartition {
            cycles: j.cycles.iter().map(|c| Cycle::from_raw(c.clone(), 0.0, 0.0, 0.0)).collect(),
            objective: j.objective,
        };
        Ok(part)
    }
}

/// Outcome of validating a partition against an instance.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Accepted,
    NodeMissing(usize),
    NodeDuplicated(usize),
    NodeOutOfRange(usize),
    /// Cycle index, travel time, critical-time bound.
    LengthViolation(usize, f64, f64),
    EmptyCycle(usize),
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accepted)
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Accepted => write!(f, "accepted"),
            Verdict::NodeMissing(v) => write!(f, "node {v} is not covered by any cycle"),
            Verdict::NodeDuplicated(v) => write!(f, "node {v} appears in more than one cycle"),
            Verdict::NodeOutOfRange(v) => write!(f, "node {v} is out of range"),
            Verdict::LengthViolation(c, t, q) => {
                write!(f, "cycle {c} violates the length constraint: t = {t} > q = {q}")
            }
            Verdict::EmptyCycle(c) => write!(f, "cycle {c} is empty"),
        }
    }
}

/// Travel time of a node sequence interpreted as a closed cycle. A singleton
/// has time 0, a 2-node cycle traverses its edge twice.
pub fn cycle_time(inst: &Instance, nodes: &[usize]) -> f64 {
    match nodes.len() {
        0 | 1 => 0.0,
        2 => 2.0 * inst.travel[nodes[0]][nodes[1]],
        k => {
            let mut t = 0.0;
            for w in 0..k {
                t += inst.travel[nodes[w]][nodes[(w + 1) % k]];
            }
            t
        }
    }
}

/// Minimum critical time over a cycle's nodes.
pub fn cycle_min_crit(inst: &Instance, nodes: &[usize]) -> f64 {
    nodes.iter().map(|&v| inst.crit[v]).fold(f64::INFINITY, f64::min)
}

/// Accepts iff every node is covered exactly once and every cycle satisfies
/// the length constraint, with times recomputed from the instance.
pub fn validate_partition(inst: &Instance, part: &CyclePartition) -> Verdict {
    let mut seen = vec![false; inst.n];
    for (ci, cycle) in part.cycles.iter().enumerate() {
        if cycle.nodes.is_empty() {
            return Verdict::EmptyCycle(ci);
        }
        for &v in &cycle.nodes {
            if v >= inst.n {
                return Verdict::NodeOutOfRange(v);
            }
            if seen[v] {
                return Verdict::NodeDuplicated(v);
            }
            seen[v] = true;
        }
        let t = cycle_time(inst, &cycle.nodes);
        let q = cycle_min_crit(inst, &cycle.nodes);
        if t > q {
            return Verdict::LengthViolation(ci, t, q);
        }
    }
    if let Some(v) = seen.iter().position(|&s| !s) {
        return Verdict::NodeMissing(v);
    }
    Verdict::Accepted
}

/// The all-singletons partition; feasible for every instance.
pub fn all_singletons(inst: &Instance) -> CyclePartition {
    CyclePartition::new(
        (0..inst.n)
            .map(|v| Cycle::from_raw(vec![v], 0.0, inst.crit[v], 0.0))
            .collect(),
    )
}
