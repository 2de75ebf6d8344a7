//! Dense two-phase primal simplex with Bland's rule.
//!
//! Problems are `min c.z  s.t.  A z <= b,  E z = d,  lo <= z <= hi` with
//! infinite bounds allowed. Internally every variable is shifted or split to
//! be nonnegative, finite upper bounds become rows, and rows are flipped to
//! nonnegative right-hand sides. The initial identity basis (slack or
//! artificial per row) is kept in the tableau so row duals can be read off
//! the final reduced costs.

use super::Status;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LpProblem {
    pub c: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub e: Vec<Vec<f64>>,
    pub d: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl LpProblem {
    /// Variables are nonnegative by default.
    pub fn new(c: Vec<f64>) -> Self {
        let n = c.len();
        LpProblem {
            c,
            lo: vec![0.0; n],
            hi: vec![f64::INFINITY; n],
            ..Default::default()
        }
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn leq(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.a.push(row);
        self.b.push(rhs);
        self
    }

    pub fn eq(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.e.push(row);
        self.d.push(rhs);
        self
    }

    pub fn bounds(mut self, j: usize, lo: f64, hi: f64) -> Self {
        self.lo[j] = lo;
        self.hi[j] = hi;
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lo.len() != n || self.hi.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.lo.len().min(self.hi.len()),
            });
        }
        if self.a.len() != self.b.len() || self.e.len() != self.d.len() {
            return Err(Error::InvalidParameter(
                "row count and rhs length differ".into(),
            ));
        }
        for row in self.a.iter().chain(&self.e) {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        let finite = |v: &f64| v.is_finite();
        if !self.c.iter().all(finite) || !self.b.iter().all(finite) || !self.d.iter().all(finite) {
            return Err(Error::NonFinite);
        }
        if self.lo.iter().chain(&self.hi).any(|v| v.is_nan()) {
            return Err(Error::NonFinite);
        }
        for j in 0..n {
            if self.lo[j] == f64::INFINITY || self.hi[j] == f64::NEG_INFINITY {
                return Err(Error::InvalidParameter(format!(
                    "variable {j} has an empty range"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: Status,
    pub objective: f64,
    pub x: Vec<f64>,
    /// Multipliers `u >= 0` of the rows `A z <= b`.
    pub ineq_duals: Vec<f64>,
    /// Multipliers of the rows `E z = d`.
    pub eq_duals: Vec<f64>,
    /// `c + A^T u + E^T v`; the bound multipliers.
    pub reduced_costs: Vec<f64>,
    pub kkt_residual: f64,
    pub iterations: usize,
}

impl LpSolution {
    fn without_solution(status: Status, n: usize, iterations: usize) -> Self {
        LpSolution {
            status,
            objective: f64::NAN,
            x: vec![f64::NAN; n],
            ineq_duals: Vec::new(),
            eq_duals: Vec::new(),
            reduced_costs: Vec::new(),
            kkt_residual: f64::INFINITY,
            iterations,
        }
    }

    /// Lagrangian dual objective of the returned multipliers.
    pub fn dual_objective(&self, lp: &LpProblem) -> f64 {
        let mut v = -dot(&lp.b, &self.ineq_duals) - dot(&lp.d, &self.eq_duals);
        for (j, &r) in self.reduced_costs.iter().enumerate() {
            if r > 0.0 {
                v += r * lp.lo[j];
            } else if r < 0.0 {
                v += r * lp.hi[j];
            }
        }
        v
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// How an original variable maps onto nonnegative tableau columns.
#[derive(Clone, Copy, Debug)]
enum VarMap {
    /// `z = lo + w`
    Shift { col: usize, lo: f64 },
    /// `z = hi - w`
    Mirror { col: usize, hi: f64 },
    /// `z = w+ - w-`
    Split { pos: usize, neg: usize },
}

impl VarMap {
    fn offset(&self) -> f64 {
        match *self {
            VarMap::Shift { lo, .. } => lo,
            VarMap::Mirror { hi, .. } => hi,
            VarMap::Split { .. } => 0.0,
        }
    }

    fn value(&self, w: &[f64]) -> f64 {
        match *self {
            VarMap::Shift { col, lo } => lo + w[col],
            VarMap::Mirror { col, hi } => hi - w[col],
            VarMap::Split { pos, neg } => w[pos] - w[neg],
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum RowKind {
    Le,
    Eq,
}

struct Tableau {
    /// `rows x (cols + 1)`; last column is the rhs.
    t: Vec<Vec<f64>>,
    cols: usize,
    basis: Vec<usize>,
    /// Column forbidden from entering.
    barred: Vec<bool>,
}

const PIVOT_EPS: f64 = 1e-12;

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Reduced costs `cost - c_B B^-1 A` for every column.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut rc = cost.to_vec();
        for (i, &bv) in self.basis.iter().enumerate() {
            let cb = cost[bv];
            if cb != 0.0 {
                for (j, r) in rc.iter_mut().enumerate() {
                    *r -= cb * self.t[i][j];
                }
            }
        }
        rc
    }

    /// Runs Bland's rule on `cost`. Returns `Ok(true)` at optimality,
    /// `Ok(false)` on unboundedness.
    fn optimize(
        &mut self,
        cost: &[f64],
        opt_eps: f64,
        iters: &mut usize,
        max_iter: usize,
    ) -> Option<bool> {
        loop {
            if *iters >= max_iter {
                return None;
            }
            let rc = self.reduced_costs(cost);
            let entering = (0..self.cols).find(|&j| !self.barred[j] && rc[j] < -opt_eps);
            let Some(c) = entering else {
                return Some(true);
            };
            let mut best: Option<(f64, usize)> = None;
            for (i, row) in self.t.iter().enumerate() {
                let a = row[c];
                if a > PIVOT_EPS {
                    let ratio = row[self.cols] / a;
                    best = match best {
                        None => Some((ratio, i)),
                        Some((br, bi)) => {
                            if ratio < br - 1e-14 * br.abs().max(1.0)
                                || (ratio <= br + 1e-14 * br.abs().max(1.0)
                                    && self.basis[i] < self.basis[bi])
                            {
                                Some((ratio, i))
                            } else {
                                Some((br, bi))
                            }
                        }
                    };
                }
            }
            let Some((_, r)) = best else {
                return Some(false);
            };
            self.pivot(r, c);
            *iters += 1;
        }
    }
}

pub fn solve_lp(lp: &LpProblem, tol: f64) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.num_vars();

    // variable maps and nonnegative columns
    let mut maps = Vec::with_capacity(n);
    let mut wcols = 0usize;
    let mut ub_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (lo, hi) = (lp.lo[j], lp.hi[j]);
        if lo.is_finite() {
            maps.push(VarMap::Shift { col: wcols, lo });
            if hi.is_finite() {
                ub_rows.push((wcols, hi - lo));
            }
            wcols += 1;
        } else if hi.is_finite() {
            maps.push(VarMap::Mirror { col: wcols, hi });
            wcols += 1;
        } else {
            maps.push(VarMap::Split {
                pos: wcols,
                neg: wcols + 1,
            });
            wcols += 2;
        }
    }

    let to_w = |row: &[f64]| -> (Vec<f64>, f64) {
        let mut w = vec![0.0; wcols];
        let mut off = 0.0;
        for (j, m) in maps.iter().enumerate() {
            let a = row[j];
            off += a * m.offset();
            match *m {
                VarMap::Shift { col, .. } => w[col] += a,
                VarMap::Mirror { col, .. } => w[col] -= a,
                VarMap::Split { pos, neg } => {
                    w[pos] += a;
                    w[neg] -= a;
                }
            }
        }
        (w, off)
    };

    // standard rows: (coefficients, rhs, kind, sign flip)
    let mut rows: Vec<(Vec<f64>, f64, RowKind)> = Vec::new();
    for (row, &rhs) in lp.a.iter().zip(&lp.b) {
        let (w, off) = to_w(row);
        rows.push((w, rhs - off, RowKind::Le));
    }
    for (row, &rhs) in lp.e.iter().zip(&lp.d) {
        let (w, off) = to_w(row);
        rows.push((w, rhs - off, RowKind::Eq));
    }
    for &(col, ub) in &ub_rows {
        let mut w = vec![0.0; wcols];
        w[col] = 1.0;
        rows.push((w, ub, RowKind::Le));
    }
    let (cost_w, _) = to_w(&lp.c);

    let nrows = rows.len();
    let signs: Vec<f64> = rows
        .iter()
        .map(|r| if r.1 < 0.0 { -1.0 } else { 1.0 })
        .collect();

    // columns: w | slacks (one per Le row) | artificials (one per row needing it)
    let n_slack = rows.iter().filter(|r| r.2 == RowKind::Le).count();
    let mut slack_col = vec![usize::MAX; nrows];
    let mut art_col = vec![usize::MAX; nrows];
    let mut next = wcols;
    for (i, r) in rows.iter().enumerate() {
        if r.2 == RowKind::Le {
            slack_col[i] = next;
            next += 1;
        }
    }
    debug_assert_eq!(next, wcols + n_slack);
    for i in 0..nrows {
        let needs_art = rows[i].2 == RowKind::Eq || signs[i] < 0.0;
        if needs_art {
            art_col[i] = next;
            next += 1;
        }
    }
    let cols = next;

    let mut t = vec![vec![0.0; cols + 1]; nrows];
    let mut basis = vec![0; nrows];
    let mut identity_col = vec![0; nrows];
    for (i, (w, rhs, _)) in rows.iter().enumerate() {
        let s = signs[i];
        for (k, &v) in w.iter().enumerate() {
            t[i][k] = s * v;
        }
        if slack_col[i] != usize::MAX {
            t[i][slack_col[i]] = s;
        }
        if art_col[i] != usize::MAX {
            t[i][art_col[i]] = 1.0;
            basis[i] = art_col[i];
        } else {
            basis[i] = slack_col[i];
        }
        identity_col[i] = basis[i];
        t[i][cols] = s * rhs;
    }
    let is_art: Vec<bool> = (0..cols).map(|c| art_col.contains(&c)).collect();

    let mut tab = Tableau {
        t,
        cols,
        basis,
        barred: vec![false; cols],
    };
    let max_iter = 50 * (cols + nrows) + 1000;
    let mut iters = 0usize;
    let opt_eps = 1e-11;

    // phase 1
    if is_art.iter().any(|&a| a) {
        let cost1: Vec<f64> = is_art.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect();
        match tab.optimize(&cost1, opt_eps, &mut iters, max_iter) {
            None => return Ok(LpSolution::without_solution(Status::IterLimit, n, iters)),
            Some(_) => {}
        }
        let infeas: f64 = tab
            .basis
            .iter()
            .enumerate()
            .filter(|(_, &bv)| is_art[bv])
            .map(|(i, _)| tab.t[i][cols])
            .sum();
        let scale = 1.0 + lp.b.iter().chain(&lp.d).fold(0.0f64, |m, v| m.max(v.abs()));
        if infeas > tol * scale {
            return Ok(LpSolution::without_solution(Status::Infeasible, n, iters));
        }
        // drive zero-level artificials out of the basis where possible
        for i in 0..nrows {
            if is_art[tab.basis[i]] {
                if let Some(c) = (0..cols).find(|&c| !is_art[c] && tab.t[i][c].abs() > 1e-9) {
                    tab.pivot(i, c);
                }
            }
        }
        for c in 0..cols {
            tab.barred[c] = is_art[c];
        }
    }

    // phase 2
    let mut cost2 = vec![0.0; cols];
    cost2[..wcols].copy_from_slice(&cost_w);
    match tab.optimize(&cost2, opt_eps, &mut iters, max_iter) {
        None => return Ok(LpSolution::without_solution(Status::IterLimit, n, iters)),
        Some(false) => return Ok(LpSolution::without_solution(Status::Unbounded, n, iters)),
        Some(true) => {}
    }

    let mut w = vec![0.0; cols];
    for (i, &bv) in tab.basis.iter().enumerate() {
        w[bv] = tab.t[i][cols];
    }
    let x: Vec<f64> = maps.iter().map(|m| m.value(&w)).collect();

    let rc = tab.reduced_costs(&cost2);
    // y_i = -rc of the row's identity column; original multiplier = -y_i * sign
    let row_dual = |i: usize| rc[identity_col[i]] * signs[i];
    let m_a = lp.a.len();
    let m_e = lp.e.len();
    let ineq_duals: Vec<f64> = (0..m_a).map(|i| row_dual(i).max(0.0)).collect();
    let eq_duals: Vec<f64> = (0..m_e).map(|i| row_dual(m_a + i)).collect();

    let mut reduced_costs = lp.c.clone();
    for (row, &u) in lp.a.iter().zip(&ineq_duals) {
        for (r, &a) in reduced_costs.iter_mut().zip(row) {
            *r += u * a;
        }
    }
    for (row, &v) in lp.e.iter().zip(&eq_duals) {
        for (r, &a) in reduced_costs.iter_mut().zip(row) {
            *r += v * a;
        }
    }

    let objective = dot(&lp.c, &x);
    let mut sol = LpSolution {
        status: Status::Optimal,
        objective,
        x,
        ineq_duals,
        eq_duals,
        reduced_costs,
        kkt_residual: 0.0,
        iterations: iters,
    };
    sol.kkt_residual = kkt_residual(lp, &sol);
    Ok(sol)
}

/// Primal feasibility, dual sign conditions and complementarity, in the
/// infinity norm.
pub fn kkt_residual(lp: &LpProblem, sol: &LpSolution) -> f64 {
    let x = &sol.x;
    let mut res = 0.0f64;
    for (i, (row, &b)) in lp.a.iter().zip(&lp.b).enumerate() {
        let s = dot(row, x) - b;
        res = res.max(s.max(0.0));
        res = res.max((sol.ineq_duals[i] * s).abs());
        res = res.max((-sol.ineq_duals[i]).max(0.0));
    }
    for (row, &d) in lp.e.iter().zip(&lp.d) {
        res = res.max((dot(row, x) - d).abs());
    }
    for j in 0..x.len() {
        let (lo, hi, r) = (lp.lo[j], lp.hi[j], sol.reduced_costs[j]);
        res = res.max((lo - x[j]).max(0.0)).max((x[j] - hi).max(0.0));
        if r > 0.0 {
            let gap = if lo.is_finite() {
                x[j] - lo
            } else {
                f64::INFINITY
            };
            res = res.max(if gap.is_finite() { r * gap } else { r });
        } else if r < 0.0 {
            let gap = if hi.is_finite() {
                hi - x[j]
            } else {
                f64::INFINITY
            };
            res = res.max(if gap.is_finite() { -r * gap } else { -r });
        }
    }
    res
}
