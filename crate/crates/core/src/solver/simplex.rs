//! Bounded-variable dual simplex.
//!
//! The LP is kept in computational form `[A | -I] (x, r) = 0` where `r` are the
//! row activities ("logicals") bounded by the row limits. Every variable is
//! boxed: missing structural bounds are replaced by a large artificial box and
//! missing row limits by the activity range implied by the column bounds. A
//! boxed problem is dual feasible for any basis once each nonbasic variable sits
//! at the bound matching the sign of its reduced cost, so the dual simplex can
//! start from the slack basis and from any warm-start basis.

use std::time::Instant;

use super::lu::{BasisFactor, LuFactors};
use super::sparse::CscMatrix;
use crate::milp::{MilpModel, VarKind};

/// Magnitude of artificial bounds that replace infinite ones.
pub const ARTIFICIAL_BOUND: f64 = 1e7;

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_INTERVAL: usize = 100;
const PERTURB_AFTER: usize = 30;
const BLAND_AFTER: usize = 100_000;
const MAX_REPAIRS: usize = 20;

/// `min c^T x` subject to `row_lo <= A x <= row_hi`, `col_lo <= x <= col_hi`.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub a: CscMatrix,
    pub at: CscMatrix,
    pub cost: Vec<f64>,
    pub col_lo: Vec<f64>,
    pub col_hi: Vec<f64>,
    pub row_lo: Vec<f64>,
    pub row_hi: Vec<f64>,
}

impl LpProblem {
    pub fn new(
        a: CscMatrix,
        cost: Vec<f64>,
        col_lo: Vec<f64>,
        col_hi: Vec<f64>,
        row_lo: Vec<f64>,
        row_hi: Vec<f64>,
    ) -> Self {
        assert_eq!(cost.len(), a.ncols);
        assert_eq!(col_lo.len(), a.ncols);
        assert_eq!(col_hi.len(), a.ncols);
        assert_eq!(row_lo.len(), a.nrows);
        assert_eq!(row_hi.len(), a.nrows);
        let at = a.transpose();
        Self {
            a,
            at,
            cost,
            col_lo,
            col_hi,
            row_lo,
            row_hi,
        }
    }

    /// Continuous relaxation of a model (binaries become `[0,1]` columns).
    pub fn from_model(m: &MilpModel) -> Self {
        let mut trips = Vec::new();
        let mut row_lo = Vec::with_capacity(m.num_constraints());
        let mut row_hi = Vec::with_capacity(m.num_constraints());
        for (i, c) in m.constraints().iter().enumerate() {
            for &(v, a) in &c.terms {
                trips.push((i, v.index(), a));
            }
            let (lo, hi) = c.row_bounds();
            row_lo.push(lo);
            row_hi.push(hi);
        }
        let n = m.num_vars();
        let a = CscMatrix::from_triplets(m.num_constraints(), n, &trips);
        let mut cost = vec![0.0; n];
        for &(v, c) in m.objective() {
            cost[v.index()] += c;
        }
        let (col_lo, col_hi) = m
            .variables()
            .iter()
            .map(|v| match v.kind {
                VarKind::Binary => (v.lower.max(0.0), v.upper.min(1.0)),
                VarKind::Continuous => (v.lower, v.upper),
            })
            .unzip();
        Self::new(a, cost, col_lo, col_hi, row_lo, row_hi)
    }

    pub fn nrows(&self) -> usize {
        self.a.nrows
    }

    pub fn ncols(&self) -> usize {
        self.a.ncols
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
}

/// Basis snapshot usable for warm starts.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    basic: Vec<usize>,
    at_upper: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimplexStatus {
    Optimal,
    Infeasible,
    IterationLimit,
    TimeLimit,
    Numerical(String),
}

#[derive(Debug, Clone, Default)]
pub struct SimplexOptions {
    pub max_iterations: Option<usize>,
    pub deadline: Option<Instant>,
}

enum Step {
    Done { degenerate: bool },
    Infeasible,
    Retry,
}

#[derive(Clone)]
pub struct DualSimplex<'a> {
    p: &'a LpProblem,
    n: usize,
    m: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    art_lo: Vec<bool>,
    art_hi: Vec<bool>,
    cost: Vec<f64>,
    state: Vec<State>,
    basic: Vec<usize>,
    x: Vec<f64>,
    d: Vec<f64>,
    dse: Vec<f64>,
    factor: Option<BasisFactor>,
    x_dirty: bool,
    d_dirty: bool,
    perturbed: bool,
    iterations: usize,
    repairs: usize,
    // scratch
    rho: Vec<f64>,
    pos_buf: Vec<f64>,
    alpha_r: Vec<f64>,
    touched: Vec<usize>,
    alpha_q: Vec<f64>,
    row_buf: Vec<f64>,
    tau: Vec<f64>,
}

fn boxed(lo: f64, hi: f64) -> (f64, f64, bool, bool) {
    let (mut l, mut h, mut al, mut ah) = (lo, hi, false, false);
    if lo == f64::NEG_INFINITY {
        l = if hi.is_finite() { hi.min(0.0) - ARTIFICIAL_BOUND } else { -ARTIFICIAL_BOUND };
        al = true;
    }
    if hi == f64::INFINITY {
        h = if lo.is_finite() { lo.max(0.0) + ARTIFICIAL_BOUND } else { ARTIFICIAL_BOUND };
        ah = true;
    }
    (l, h, al, ah)
}

impl<'a> DualSimplex<'a> {
    /// Starts from the slack basis.
    pub fn new(p: &'a LpProblem) -> Self {
        let n = p.ncols();
        let m = p.nrows();
        let t = n + m;
        let mut s = Self {
            p,
            n,
            m,
            lo: vec![0.0; t],
            hi: vec![0.0; t],
            art_lo: vec![false; t],
            art_hi: vec![false; t],
            cost: vec![0.0; t],
            state: vec![State::Lower; t],
            basic: (n..t).collect(),
            x: vec![0.0; t],
            d: vec![0.0; t],
            dse: vec![1.0; m],
            factor: None,
            x_dirty: true,
            d_dirty: true,
            perturbed: false,
            iterations: 0,
            repairs: 0,
            rho: vec![0.0; m],
            pos_buf: vec![0.0; m],
            alpha_r: vec![0.0; t],
            touched: Vec::new(),
            alpha_q: vec![0.0; m],
            row_buf: vec![0.0; m],
            tau: vec![0.0; m],
        };
        for j in 0..n {
            s.set_box(j, p.col_lo[j], p.col_hi[j]);
            s.cost[j] = p.cost[j];
        }
        for i in 0..m {
            // activity range implied by the column bounds
            let (mut amin, mut amax) = (0.0_f64, 0.0_f64);
            let (cols, vals) = p.at.col(i);
            for (&j, &a) in cols.iter().zip(vals) {
                let (l, h) = (p.col_lo[j], p.col_hi[j]);
                if a > 0.0 {
                    amin += a * l;
                    amax += a * h;
                } else {
                    amin += a * h;
                    amax += a * l;
                }
            }
            let mut lo = p.row_lo[i];
            let mut hi = p.row_hi[i];
            if lo == f64::NEG_INFINITY && amin.is_finite() {
                lo = amin - 1.0;
            }
            if hi == f64::INFINITY && amax.is_finite() {
                hi = amax + 1.0;
            }
            s.set_box(n + i, lo, hi);
        }
        for j in 0..t {
            if s.state[j] != State::Basic {
                s.state[j] = s.natural_state(j, s.cost[j]);
                s.x[j] = s.bound_value(j);
            }
        }
        for &j in &s.basic {
            s.state[j] = State::Basic;
        }
        s
    }

    fn set_box(&mut self, j: usize, lo: f64, hi: f64) {
        let (l, h, al, ah) = boxed(lo, hi);
        self.lo[j] = l;
        self.hi[j] = h;
        self.art_lo[j] = al;
        self.art_hi[j] = ah;
    }

    /// Nonbasic position that keeps a reduced cost `dj` dual feasible.
    fn natural_state(&self, j: usize, dj: f64) -> State {
        if dj > DUAL_TOL {
            State::Lower
        } else if dj < -DUAL_TOL {
            State::Upper
        } else if self.art_lo[j] && !self.art_hi[j] {
            State::Upper
        } else if self.art_lo[j] && self.art_hi[j] && self.lo[j] + self.hi[j] > 0.0 {
            State::Upper
        } else {
            State::Lower
        }
    }

    fn bound_value(&self, j: usize) -> f64 {
        match self.state[j] {
            State::Upper => self.hi[j],
            _ => self.lo[j],
        }
    }

    pub fn num_rows(&self) -> usize {
        self.m
    }

    pub fn num_cols(&self) -> usize {
        self.n
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Current (boxed) bounds of structural `j`.
    pub fn col_bounds(&self, j: usize) -> (f64, f64) {
        (self.lo[j], self.hi[j])
    }

    /// Changes the bounds of structural `j`; infinite values are boxed.
    pub fn set_col_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.set_box(j, lo, hi);
        if self.state[j] != State::Basic {
            let v = self.bound_value(j);
            if v != self.x[j] {
                self.x[j] = v;
                self.x_dirty = true;
            }
        }
    }

    pub fn basis(&self) -> Basis {
        Basis {
            basic: self.basic.clone(),
            at_upper: self.state.iter().map(|&s| s == State::Upper).collect(),
        }
    }

    pub fn set_basis(&mut self, b: &Basis) {
        assert_eq!(b.basic.len(), self.m);
        for j in 0..self.n + self.m {
            self.state[j] = if b.at_upper[j] { State::Upper } else { State::Lower };
        }
        for &j in &b.basic {
            self.state[j] = State::Basic;
        }
        self.basic.clone_from(&b.basic);
        for j in 0..self.n + self.m {
            if self.state[j] != State::Basic {
                self.x[j] = self.bound_value(j);
            }
        }
        self.dse.iter_mut().for_each(|w| *w = 1.0);
        self.factor = None;
        self.x_dirty = true;
        self.d_dirty = true;
    }

    /// Structural values.
    pub fn primal(&self) -> &[f64] {
        &self.x[..self.n]
    }

    /// Row activities.
    pub fn activities(&self) -> &[f64] {
        &self.x[self.n..]
    }

    /// Reduced costs of the structural columns.
    pub fn reduced_costs(&self) -> &[f64] {
        &self.d[..self.n]
    }

    /// Row duals `y` with `c - A^T y` equal to the reduced costs.
    pub fn row_duals(&self) -> &[f64] {
        &self.d[self.n..]
    }

    pub fn objective(&self) -> f64 {
        (0..self.n).map(|j| self.p.cost[j] * self.x[j]).sum()
    }

    /// True if some variable rests on an artificial bound with a nonzero
    /// reduced cost, i.e. the optimum of the boxed problem may be an artifact.
    pub fn rests_on_artificial_bound(&self) -> bool {
        (0..self.n + self.m).any(|j| match self.state[j] {
            State::Lower => self.art_lo[j] && self.d[j].abs() > DUAL_TOL,
            State::Upper => self.art_hi[j] && self.d[j].abs() > DUAL_TOL,
            State::Basic => {
                (self.art_lo[j] && self.x[j] <= self.lo[j] + PRIMAL_TOL)
                    || (self.art_hi[j] && self.x[j] >= self.hi[j] - PRIMAL_TOL)
            }
        })
    }

    fn column_into(&self, j: usize, out: &mut Vec<(usize, f64)>) {
        out.clear();
        if j < self.n {
            let (rows, vals) = self.p.a.col(j);
            out.extend(rows.iter().copied().zip(vals.iter().copied()));
        } else {
            out.push((j - self.n, -1.0));
        }
    }

    fn scatter_column(&self, j: usize, dense: &mut [f64]) {
        dense.iter_mut().for_each(|v| *v = 0.0);
        if j < self.n {
            let (rows, vals) = self.p.a.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                dense[i] = v;
            }
        } else {
            dense[j - self.n] = -1.0;
        }
    }

    fn refactor(&mut self) -> Result<(), String> {
        loop {
            let cols: Vec<Vec<(usize, f64)>> = self
                .basic
                .iter()
                .map(|&j| {
                    let mut c = Vec::new();
                    self.column_into(j, &mut c);
                    c
                })
                .collect();
            match LuFactors::factorize(self.m, &cols) {
                Ok(lu) => {
                    self.factor = Some(BasisFactor::new(lu));
                    self.x_dirty = true;
                    self.d_dirty = true;
                    return Ok(());
                }
                Err(sing) => {
                    self.repairs += 1;
                    if self.repairs > MAX_REPAIRS {
                        return Err(format!(
                            "basis repeatedly singular ({} dependent columns after {} repairs)",
                            sing.positions.len(),
                            self.repairs
                        ));
                    }
                    log::debug!("replacing {} dependent basis columns", sing.positions.len());
                    for (&pos, &row) in sing.positions.iter().zip(&sing.rows) {
                        let j = self.basic[pos];
                        let near_hi = (self.x[j] - self.hi[j]).abs() < (self.x[j] - self.lo[j]).abs();
                        self.state[j] = if near_hi { State::Upper } else { State::Lower };
                        self.x[j] = self.bound_value(j);
                        let l = self.n + row;
                        self.state[l] = State::Basic;
                        self.basic[pos] = l;
                        self.dse[pos] = 1.0;
                    }
                }
            }
        }
    }

    fn compute_primals(&mut self) {
        let mut rhs = vec![0.0; self.m];
        for j in 0..self.n {
            if self.state[j] != State::Basic && self.x[j] != 0.0 {
                let (rows, vals) = self.p.a.col(j);
                for (&i, &v) in rows.iter().zip(vals) {
                    rhs[i] -= v * self.x[j];
                }
            }
        }
        for i in 0..self.m {
            let l = self.n + i;
            if self.state[l] != State::Basic {
                rhs[i] += self.x[l];
            }
        }
        let mut xb = vec![0.0; self.m];
        self.factor.as_mut().unwrap().ftran(&rhs, &mut xb);
        for (pos, &j) in self.basic.iter().enumerate() {
            self.x[j] = xb[pos];
        }
    }

    fn compute_duals(&mut self) {
        for (pos, &j) in self.basic.iter().enumerate() {
            self.pos_buf[pos] = self.cost[j];
        }
        let mut y = vec![0.0; self.m];
        self.factor.as_mut().unwrap().btran(&mut self.pos_buf, &mut y);
        for j in 0..self.n {
            if self.state[j] == State::Basic {
                self.d[j] = 0.0;
            } else {
                let (rows, vals) = self.p.a.col(j);
                let s: f64 = rows.iter().zip(vals).map(|(&i, &v)| v * y[i]).sum();
                self.d[j] = self.cost[j] - s;
            }
        }
        for i in 0..self.m {
            let l = self.n + i;
            self.d[l] = if self.state[l] == State::Basic { 0.0 } else { self.cost[l] + y[i] };
        }
    }

    /// Moves nonbasic variables with wrong-signed reduced costs to the other bound.
    fn correct_dual_infeasibilities(&mut self) -> bool {
        let mut flipped = false;
        for j in 0..self.n + self.m {
            let want = match self.state[j] {
                State::Lower if self.d[j] < -DUAL_TOL => State::Upper,
                State::Upper if self.d[j] > DUAL_TOL => State::Lower,
                _ => continue,
            };
            self.state[j] = want;
            let v = self.bound_value(j);
            if v != self.x[j] {
                self.x[j] = v;
                flipped = true;
            }
        }
        flipped
    }

    fn perturb_costs(&mut self) {
        for j in 0..self.n {
            let s = self.state[j];
            if s == State::Basic || self.lo[j] == self.hi[j] {
                continue;
            }
            // deterministic pseudo-random magnitude in [1e-7, 2e-7] scaled by |c|
            let h = (j as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 11;
            let u = (h as f64) / ((1u64 << 53) as f64);
            let xi = (1e-6 + 1e-6 * u) * (1.0 + self.cost[j].abs());
            let delta = if s == State::Lower { xi } else { -xi };
            self.cost[j] += delta;
            self.d[j] += delta;
        }
        self.perturbed = true;
    }

    fn restore_costs(&mut self) {
        for j in 0..self.n {
            self.cost[j] = self.p.cost[j];
        }
        self.perturbed = false;
        self.d_dirty = true;
    }

    fn price(&self, bland: bool) -> Option<usize> {
        let mut best = None;
        let mut best_score = 0.0;
        for (pos, &j) in self.basic.iter().enumerate() {
            let v = self.x[j];
            let infeas = if v < self.lo[j] - PRIMAL_TOL {
                self.lo[j] - v
            } else if v > self.hi[j] + PRIMAL_TOL {
                v - self.hi[j]
            } else {
                continue;
            };
            if bland {
                if best.is_none_or(|b: usize| j < self.basic[b]) {
                    best = Some(pos);
                }
            } else {
                let score = infeas * infeas / self.dse[pos];
                if score > best_score {
                    best_score = score;
                    best = Some(pos);
                }
            }
        }
        best
    }

    /// Row `r` of `B^{-1} [A | -I]` over the nonbasic columns.
    fn compute_row(&mut self, r: usize) {
        for &j in &self.touched {
            self.alpha_r[j] = 0.0;
        }
        self.touched.clear();
        self.pos_buf.iter_mut().for_each(|v| *v = 0.0);
        self.pos_buf[r] = 1.0;
        let factor = self.factor.as_mut().unwrap();
        factor.btran(&mut self.pos_buf, &mut self.rho);
        for i in 0..self.m {
            let ri = self.rho[i];
            if ri == 0.0 {
                continue;
            }
            let (cols, vals) = self.p.at.col(i);
            for (&j, &a) in cols.iter().zip(vals) {
                if self.state[j] == State::Basic {
                    continue;
                }
                if self.alpha_r[j] == 0.0 {
                    self.touched.push(j);
                }
                self.alpha_r[j] += ri * a;
                if self.alpha_r[j] == 0.0 {
                    // keep the entry marked as touched
                    self.alpha_r[j] = f64::MIN_POSITIVE;
                }
            }
            let l = self.n + i;
            if self.state[l] != State::Basic {
                self.alpha_r[l] = -ri;
                self.touched.push(l);
            }
        }
    }

    fn iterate(&mut self, r: usize, bland: bool) -> Step {
        let p = self.basic[r];
        let xp = self.x[p];
        let (sigma, target) = if xp < self.lo[p] {
            (1.0, self.lo[p])
        } else {
            (-1.0, self.hi[p])
        };
        self.compute_row(r);

        // candidates: (var, ratio, |alpha|)
        let mut cands: Vec<(usize, f64, f64)> = Vec::new();
        for &j in &self.touched {
            if self.lo[j] == self.hi[j] {
                continue;
            }
            let a = sigma * self.alpha_r[j];
            let (ok, dj) = match self.state[j] {
                State::Lower => (a < -PIVOT_TOL, self.d[j]),
                State::Upper => (a > PIVOT_TOL, -self.d[j]),
                State::Basic => (false, 0.0),
            };
            if ok {
                cands.push((j, dj / a.abs(), a.abs()));
            }
        }

        // bound-flipping ratio test with Harris tolerance batches
        let mut slope = (xp - target).abs();
        let mut flips: Vec<usize> = Vec::new();
        let q;
        let ratio_q;
        loop {
            if cands.is_empty() {
                return Step::Infeasible;
            }
            let tmax = cands
                .iter()
                .map(|c| c.1 + DUAL_TOL / c.2)
                .fold(f64::INFINITY, f64::min);
            let mut range = 0.0;
            let mut finite = true;
            for c in cands.iter().filter(|c| c.1 <= tmax) {
                if self.art_lo[c.0] || self.art_hi[c.0] {
                    finite = false;
                    break;
                }
                range += c.2 * (self.hi[c.0] - self.lo[c.0]);
            }
            if finite && slope - range > PRIMAL_TOL {
                slope -= range;
                let mut k = 0;
                while k < cands.len() {
                    if cands[k].1 <= tmax {
                        flips.push(cands[k].0);
                        cands.swap_remove(k);
                    } else {
                        k += 1;
                    }
                }
                continue;
            }
            let mut best: Option<(usize, f64, f64)> = None;
            for &c in cands.iter().filter(|c| c.1 <= tmax) {
                let better = match best {
                    None => true,
                    Some(b) if bland => c.0 < b.0,
                    Some(b) => c.2 > b.2 || (c.2 == b.2 && c.0 < b.0),
                };
                if better {
                    best = Some(c);
                }
            }
            let b = best.unwrap();
            q = b.0;
            ratio_q = b.1.max(0.0);
            break;
        }
        let alpha_rq = self.alpha_r[q];

        let mut buf = std::mem::take(&mut self.row_buf);
        self.scatter_column(q, &mut buf);
        self.row_buf = buf;
        let factor = self.factor.as_mut().unwrap();
        factor.ftran(&self.row_buf, &mut self.alpha_q);
        let err = (self.alpha_q[r] - alpha_rq).abs();
        if err > 1e-9 * (1.0 + alpha_rq.abs()) {
            if factor.updates() > 0 {
                log::debug!("pivot mismatch {err:e}; refactoring");
                self.factor = None;
                return Step::Retry;
            }
            if err > 1e-6 * (1.0 + alpha_rq.abs()) {
                log::debug!("pivot mismatch {err:e} on a fresh factorization");
            }
        }

        // bound flips
        if !flips.is_empty() {
            self.row_buf.iter_mut().for_each(|v| *v = 0.0);
            for &j in &flips {
                let (from, to, st) = match self.state[j] {
                    State::Lower => (self.lo[j], self.hi[j], State::Upper),
                    _ => (self.hi[j], self.lo[j], State::Lower),
                };
                let dx = to - from;
                self.state[j] = st;
                self.x[j] = to;
                if j < self.n {
                    let (rows, vals) = self.p.a.col(j);
                    for (&i, &v) in rows.iter().zip(vals) {
                        self.row_buf[i] += v * dx;
                    }
                } else {
                    self.row_buf[j - self.n] -= dx;
                }
            }
            let mut dxb = std::mem::take(&mut self.tau);
            self.factor.as_mut().unwrap().ftran(&self.row_buf, &mut dxb);
            for (pos, &j) in self.basic.iter().enumerate() {
                self.x[j] -= dxb[pos];
            }
            self.tau = dxb;
        }

        // duals
        let t = ratio_q;
        if t != 0.0 {
            for &j in &self.touched {
                self.d[j] += sigma * t * self.alpha_r[j];
            }
        }
        self.d[p] = sigma * t;
        self.d[q] = 0.0;

        // primal step
        let alpha = self.alpha_q[r];
        let theta = (self.x[p] - target) / alpha;
        for (pos, &j) in self.basic.iter().enumerate() {
            self.x[j] -= theta * self.alpha_q[pos];
        }
        self.x[q] += theta;
        self.x[p] = target;

        // dual steepest-edge weights
        let wr: f64 = self.rho.iter().map(|v| v * v).sum();
        let factor = self.factor.as_mut().unwrap();
        factor.ftran(&self.rho, &mut self.tau);
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let k = self.alpha_q[i] / alpha;
            if k != 0.0 {
                let w = self.dse[i] - 2.0 * k * self.tau[i] + k * k * wr;
                self.dse[i] = w.max(k * k).max(1e-8);
            }
        }
        self.dse[r] = (wr / (alpha * alpha)).max(1e-8);

        factor.update(r, &self.alpha_q);
        self.state[p] = if sigma > 0.0 { State::Lower } else { State::Upper };
        self.state[q] = State::Basic;
        self.basic[r] = q;
        self.iterations += 1;

        let f = self.factor.as_ref().unwrap();
        if f.updates() >= REFACTOR_INTERVAL || f.eta_nnz() > 3 * f.lu_nnz() + 10 * self.m {
            self.factor = None;
        }
        Step::Done {
            degenerate: t <= 1e-12,
        }
    }

    pub fn solve(&mut self, opts: &SimplexOptions) -> SimplexStatus {
        for j in 0..self.n + self.m {
            if self.lo[j] > self.hi[j] + PRIMAL_TOL {
                return SimplexStatus::Infeasible;
            }
        }
        let limit = opts
            .max_iterations
            .unwrap_or(10_000 + 50 * (self.n + self.m));
        let start = self.iterations;
        let mut degenerate_run = 0usize;
        let mut perturb_used = false;
        let mut retries = 0usize;
        loop {
            if self.factor.is_none() {
                if let Err(msg) = self.refactor() {
                    return SimplexStatus::Numerical(msg);
                }
            }
            if self.d_dirty {
                self.compute_duals();
                self.d_dirty = false;
                if self.correct_dual_infeasibilities() {
                    self.x_dirty = true;
                }
            }
            if self.x_dirty {
                self.compute_primals();
                self.x_dirty = false;
            }
            if self.iterations - start >= limit {
                return SimplexStatus::IterationLimit;
            }
            if (self.iterations - start) % 64 == 0 {
                if let Some(dl) = opts.deadline {
                    if Instant::now() >= dl {
                        return SimplexStatus::TimeLimit;
                    }
                }
            }
            let bland = degenerate_run > BLAND_AFTER;
            let Some(r) = self.price(bland) else {
                if self.perturbed {
                    self.restore_costs();
                    continue;
                }
                return SimplexStatus::Optimal;
            };
            match self.iterate(r, bland) {
                Step::Done { degenerate } => {
                    retries = 0;
                    if degenerate {
                        degenerate_run += 1;
                        if degenerate_run > PERTURB_AFTER && !perturb_used {
                            perturb_used = true;
                            self.perturb_costs();
                        }
                    } else {
                        degenerate_run = 0;
                    }
                }
                Step::Retry => {
                    retries += 1;
                    if retries > 3 {
                        return SimplexStatus::Numerical(format!(
                            "unstable pivots at iteration {}",
                            self.iterations
                        ));
                    }
                }
                Step::Infeasible => {
                    if self.perturbed {
                        self.restore_costs();
                    }
                    return SimplexStatus::Infeasible;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(
        rows: &[&[f64]],
        cost: &[f64],
        col: &[(f64, f64)],
        row: &[(f64, f64)],
    ) -> LpProblem {
        let mut trips = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                if v != 0.0 {
                    trips.push((i, j, v));
                }
            }
        }
        let a = CscMatrix::from_triplets(rows.len(), cost.len(), &trips);
        LpProblem::new(
            a,
            cost.to_vec(),
            col.iter().map(|c| c.0).collect(),
            col.iter().map(|c| c.1).collect(),
            row.iter().map(|c| c.0).collect(),
            row.iter().map(|c| c.1).collect(),
        )
    }

    const INF: f64 = f64::INFINITY;

    #[test]
    fn bounded_single_variable() {
        let p = lp(&[], &[-1.0], &[(0.0, 1.0)], &[]);
        let mut s = DualSimplex::new(&p);
        assert_eq!(s.solve(&SimplexOptions::default()), SimplexStatus::Optimal);
        assert_eq!(s.objective(), -1.0);
    }

    #[test]
    fn small_production_lp() {
        // max 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let p = lp(
            &[&[1.0, 0.0], &[0.0, 2.0], &[3.0, 2.0]],
            &[-3.0, -5.0],
            &[(0.0, INF), (0.0, INF)],
            &[(-INF, 4.0), (-INF, 12.0), (-INF, 18.0)],
        );
        let mut s = DualSimplex::new(&p);
        assert_eq!(s.solve(&SimplexOptions::default()), SimplexStatus::Optimal);
        assert!((s.objective() + 36.0).abs() < 1e-9);
        assert!((s.primal()[0] - 2.0).abs() < 1e-9 && (s.primal()[1] - 6.0).abs() < 1e-9);
        let y = s.row_duals();
        assert!((y[0]).abs() < 1e-9 && (y[1] + 1.5).abs() < 1e-9 && (y[2] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let p = lp(&[&[1.0], &[1.0]], &[0.0], &[(-INF, INF)], &[(2.0, INF), (-INF, 1.0)]);
        let mut s = DualSimplex::new(&p);
        assert_eq!(s.solve(&SimplexOptions::default()), SimplexStatus::Infeasible);
    }

    #[test]
    fn warm_start_after_bound_change() {
        let p = lp(
            &[&[1.0, 1.0, 1.0]],
            &[-1.0, -2.0, -3.0],
            &[(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)],
            &[(-INF, 1.5)],
        );
        let mut s = DualSimplex::new(&p);
        assert_eq!(s.solve(&SimplexOptions::default()), SimplexStatus::Optimal);
        assert!((s.objective() + 4.0).abs() < 1e-9);
        let b = s.basis();
        s.set_col_bounds(2, 0.0, 0.0);
        assert_eq!(s.solve(&SimplexOptions::default()), SimplexStatus::Optimal);
        assert!((s.objective() + 2.5).abs() < 1e-9);
        s.set_col_bounds(2, 0.0, 1.0);
        s.set_basis(&b);
        assert_eq!(s.solve(&SimplexOptions::default()), SimplexStatus::Optimal);
        assert!((s.objective() + 4.0).abs() < 1e-9);
    }
}
