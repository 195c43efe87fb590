//! Dense LP solver for the restricted master problem.
//!
//! Two-phase primal revised simplex with an explicitly maintained basis
//! inverse. Phase 1 uses one artificial variable per row; a positive phase-1
//! optimum yields a Farkas infeasibility certificate from the phase-1 duals.
//! The master problems here are tiny but extremely degenerate, so the pivot
//! rule falls back to Bland's rule after a stall.

use thiserror::Error;

const FEAS_TOL: f64 = 1e-7;
const PIVOT_TOL: f64 = 1e-10;
const REDCOST_TOL: f64 = 1e-9;
const STALL_LIMIT: usize = 50;
const ITER_LIMIT: usize = 200_000;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Row sense of the master problem: partitioning (=) or covering (>=).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Equal,
    GreaterEqual,
}

/// A set-partitioning/covering style LP. Columns are given as the row
/// indices of their unit coefficients.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub nrows: usize,
    pub obj: Vec<f64>,
    pub cols: Vec<Vec<usize>>,
    pub row_sense: Vec<RowSense>,
    pub rhs: Vec<f64>,
}

impl LpProblem {
    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    fn check(&self) -> Result<(), LpError> {
        if self.obj.len() != self.cols.len() {
            return Err(LpError::Dimension(format!(
                "{} objective entries for {} columns",
                self.obj.len(),
                self.cols.len()
            )));
        }
        if self.row_sense.len() != self.nrows || self.rhs.len() != self.nrows {
            return Err(LpError::Dimension("row_sense/rhs length != nrows".into()));
        }
        for (j, col) in self.cols.iter().enumerate() {
            if col.iter().any(|&r| r >= self.nrows) {
                return Err(LpError::Dimension(format!("column {j} has a row out of range")));
            }
        }
        Ok(())
    }
}

/// Result of an LP solve: a certified optimal primal/dual pair, or a Farkas
/// ray certifying infeasibility.
#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal {
        primal: Vec<f64>,
        duals: Vec<f64>,
        objective: f64,
        /// Basic variable per row, reusable as a warm start.
        basis: Vec<usize>,
    },
    Infeasible {
        farkas_ray: Vec<f64>,
    },
}

/// Variable layout: structural columns, then one surplus per >= row, then
/// one artificial per row (phase 1 only).
struct Layout {
    ncols: usize,
    /// surplus index -> row
    ge_rows: Vec<usize>,
}

impl Layout {
    fn new(p: &LpProblem) -> Self {
        Layout {
            ncols: p.ncols(),
            ge_rows: p
                .row_sense
                .iter()
                .enumerate()
                .filter(|(_, &s)| s == RowSense::GreaterEqual)
                .map(|(r, _)| r)
                .collect(),
        }
    }

    fn n_surplus(&self) -> usize {
        self.ge_rows.len()
    }

    fn first_artificial(&self) -> usize {
        self.ncols + self.n_surplus()
    }

    fn is_artificial(&self, var: usize) -> bool {
        var >= self.first_artificial()
    }

    /// Dense column of a variable.
    fn column(&self, p: &LpProblem, var: usize, out: &mut [f64]) {
        out.fill(0.0);
        if var < self.ncols {
            for &r in &p.cols[var] {
                out[r] = 1.0;
            }
        } else if var < self.first_artificial() {
            out[self.ge_rows[var - self.ncols]] = -1.0;
        } else {
            out[var - self.first_artificial()] = 1.0;
        }
    }
}

struct Simplex<'a> {
    p: &'a LpProblem,
    layout: Layout,
    m: usize,
    basis: Vec<usize>,
    /// row-major m x m basis inverse
    binv: Vec<f64>,
    xb: Vec<f64>,
    in_basis: Vec<bool>,
}

enum Termination {
    Optimal,
    Unbounded,
}

impl<'a> Simplex<'a> {
    fn duals(&self, costs: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for i in 0..m {
            let c = costs[self.basis[i]];
            if c != 0.0 {
                for j in 0..m {
                    y[j] += c * self.binv[i * m + j];
                }
            }
        }
        y
    }

    fn objective(&self, costs: &[f64]) -> f64 {
        self.basis
            .iter()
            .zip(&self.xb)
            .map(|(&v, &x)| costs[v] * x)
            .sum()
    }

    fn pivot(&mut self, row: usize, var: usize, w: &[f64]) {
        let m = self.m;
        let piv = w[row];
        for j in 0..m {
            self.binv[row * m + j] /= piv;
        }
        self.xb[row] /= piv;
        for i in 0..m {
            if i == row || w[i] == 0.0 {
                continue;
            }
            let f = w[i];
            for j in 0..m {
                self.binv[i * m + j] -= f * self.binv[row * m + j];
            }
            self.xb[i] -= f * self.xb[row];
            if self.xb[i] < 0.0 && self.xb[i] > -FEAS_TOL {
                self.xb[i] = 0.0;
            }
        }
        self.in_basis[self.basis[row]] = false;
        self.in_basis[var] = true;
        self.basis[row] = var;
    }

    /// Runs primal simplex iterations for the given cost vector. Variables
    /// at or beyond `enter_limit` may not enter the basis.
    fn iterate(&mut self, costs: &[f64], enter_limit: usize) -> Result<Termination, LpError> {
        let m = self.m;
        let mut col = vec![0.0; m];
        let mut bland = false;
        let mut stall = 0usize;
        let mut last_obj = self.objective(costs);
        for _ in 0..ITER_LIMIT {
            let y = self.duals(costs);
            let mut entering: Option<(usize, f64)> = None;
            for var in 0..enter_limit {
                if self.in_basis[var] {
                    continue;
                }
                self.layout.column(self.p, var, &mut col);
                let mut d = costs[var];
                for r in 0..m {
                    d -= y[r] * col[r];
                }
                if d < -REDCOST_TOL {
                    if bland {
                        entering = Some((var, d));
                        break;
                    }
                    match entering {
                        Some((_, best)) if best <= d => {}
                        _ => entering = Some((var, d)),
                    }
                }
            }
            let (var, _) = match entering {
                Some(e) => e,
                None => return Ok(Termination::Optimal),
            };
            self.layout.column(self.p, var, &mut col);
            let mut w = vec![0.0; m];
            for i in 0..m {
                let mut v = 0.0;
                for j in 0..m {
                    v += self.binv[i * m + j] * col[j];
                }
                w[i] = v;
            }
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                if w[i] > PIVOT_TOL {
                    let ratio = self.xb[i] / w[i];
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - 1e-12
                                || (ratio < lr + 1e-12 && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let (row, _) = match leave {
                Some(l) => l,
                None => return Ok(Termination::Unbounded),
            };
            self.pivot(row, var, &w);
            let obj = self.objective(costs);
            if obj < last_obj - 1e-12 {
                stall = 0;
                last_obj = obj;
            } else {
                stall += 1;
                if stall >= STALL_LIMIT {
                    bland = true;
                }
            }
        }
        Err(LpError::Numerical("simplex iteration limit reached".into()))
    }
}

/// Inverts the basis given by `basis` (one variable per row). Returns None
/// when the matrix is singular.
fn invert_basis(p: &LpProblem, layout: &Layout, basis: &[usize]) -> Option<Vec<f64>> {
    let m = p.nrows;
    // Gauss-Jordan on [B | I]
    let mut a = vec![0.0; m * m];
    let mut col = vec![0.0; m];
    for (k, &var) in basis.iter().enumerate() {
        layout.column(p, var, &mut col);
        for i in 0..m {
            a[i * m + k] = col[i];
        }
    }
    let mut inv = vec![0.0; m * m];
    for i in 0..m {
        inv[i * m + i] = 1.0;
    }
    for k in 0..m {
        let mut piv_row = k;
        let mut piv_val = a[k * m + k].abs();
        for i in (k + 1)..m {
            if a[i * m + k].abs() > piv_val {
                piv_val = a[i * m + k].abs();
                piv_row = i;
            }
        }
        if piv_val < PIVOT_TOL {
            return None;
        }
        if piv_row != k {
            for j in 0..m {
                a.swap(k * m + j, piv_row * m + j);
                inv.swap(k * m + j, piv_row * m + j);
            }
        }
        let piv = a[k * m + k];
        for j in 0..m {
            a[k * m + j] /= piv;
            inv[k * m + j] /= piv;
        }
        for i in 0..m {
            if i == k {
                continue;
            }
            let f = a[i * m + k];
            if f == 0.0 {
                continue;
            }
            for j in 0..m {
                a[i * m + j] -= f * a[k * m + j];
                inv[i * m + j] -= f * inv[k * m + j];
            }
        }
    }
    Some(inv)
}

/// Solves the LP, optionally warm-started from a previous basis (a list of
/// one basic variable per row; invalid or infeasible bases fall back to a
/// cold start).
pub fn solve_lp(p: &LpProblem, warm_start: Option<&[usize]>) -> Result<LpOutcome, LpError> {
    p.check()?;
    let layout = Layout::new(p);
    let m = p.nrows;
    let nvars = layout.first_artificial() + m;
    let n_real = layout.first_artificial();

    let mut phase2_costs = vec![0.0; nvars];
    phase2_costs[..layout.ncols].copy_from_slice(&p.obj);

    // Warm start: phase 2 directly from a valid primal-feasible basis.
    if let Some(basis) = warm_start {
        if basis.len() == m && basis.iter().all(|&v| v < n_real) {
            if let Some(binv) = invert_basis(p, &layout, basis) {
                let xb: Vec<f64> = (0..m)
                    .map(|i| (0..m).map(|j| binv[i * m + j] * p.rhs[j]).sum())
                    .collect();
                if xb.iter().all(|&x| x >= -FEAS_TOL) {
                    let mut in_basis = vec![false; nvars];
                    for &v in basis {
                        in_basis[v] = true;
                    }
                    let mut sx = Simplex {
                        p,
                        layout: Layout::new(p),
                        m,
                        basis: basis.to_vec(),
                        binv,
                        xb: xb.iter().map(|&x| x.max(0.0)).collect(),
                        in_basis,
                    };
                    if let Termination::Optimal = sx.iterate(&phase2_costs, n_real)? {
                        return Ok(extract_optimal(&sx, &phase2_costs));
                    }
                    return Err(LpError::Numerical("unbounded LP".into()));
                }
            }
        }
    }

    // Phase 1: minimize the sum of artificials from the all-artificial basis.
    let mut phase1_costs = vec![0.0; nvars];
    for v in n_real..nvars {
        phase1_costs[v] = 1.0;
    }
    let mut binv = vec![0.0; m * m];
    for i in 0..m {
        binv[i * m + i] = 1.0;
    }
    let mut in_basis = vec![false; nvars];
    let basis: Vec<usize> = (0..m).map(|i| n_real + i).collect();
    for &v in &basis {
        in_basis[v] = true;
    }
    let mut sx = Simplex {
        p,
        layout,
        m,
        basis,
        binv,
        xb: p.rhs.clone(),
        in_basis,
    };
    match sx.iterate(&phase1_costs, nvars)? {
        Termination::Unbounded => {
            return Err(LpError::Numerical("phase 1 unbounded".into()));
        }
        Termination::Optimal => {}
    }
    let phase1_obj = sx.objective(&phase1_costs);
    if phase1_obj > FEAS_TOL {
        let mut ray = sx.duals(&phase1_costs);
        for (i, &sense) in p.row_sense.iter().enumerate() {
            if sense == RowSense::GreaterEqual && ray[i] < 0.0 {
                // within tolerance of 0 at phase-1 optimality
                ray[i] = ray[i].clamp(-REDCOST_TOL, 0.0);
                if ray[i] < 0.0 {
                    ray[i] = 0.0;
                }
            }
        }
        return Ok(LpOutcome::Infeasible { farkas_ray: ray });
    }

    // Pivot zero-valued artificials out of the basis where possible; rows
    // where no real column has a nonzero entry are redundant and inert.
    let mut col = vec![0.0; m];
    for row in 0..m {
        if !sx.layout.is_artificial(sx.basis[row]) {
            continue;
        }
        sx.xb[row] = 0.0;
        'candidates: for var in 0..n_real {
            if sx.in_basis[var] {
                continue;
            }
            sx.layout.column(sx.p, var, &mut col);
            let mut w_r = 0.0;
            for j in 0..m {
                w_r += sx.binv[row * m + j] * col[j];
            }
            if w_r.abs() > 1e-7 {
                let mut w = vec![0.0; m];
                for i in 0..m {
                    let mut v = 0.0;
                    for j in 0..m {
                        v += sx.binv[i * m + j] * col[j];
                    }
                    w[i] = v;
                }
                sx.pivot(row, var, &w);
                break 'candidates;
            }
        }
    }

    match sx.iterate(&phase2_costs, n_real)? {
        Termination::Optimal => Ok(extract_optimal(&sx, &phase2_costs)),
        Termination::Unbounded => Err(LpError::Numerical("unbounded LP".into())),
    }
}

fn extract_optimal(sx: &Simplex, costs: &[f64]) -> LpOutcome {
    let mut primal = vec![0.0; sx.layout.ncols];
    for (i, &v) in sx.basis.iter().enumerate() {
        if v < sx.layout.ncols {
            primal[v] = sx.xb[i].max(0.0);
        }
    }
    let duals = sx.duals(costs);
    let objective = sx.objective(costs);
    LpOutcome::Optimal {
        primal,
        duals,
        objective,
        basis: sx.basis.clone(),
    }
}
