//! Sparse LU factorization of simplex bases plus a product-form update file.
//!
//! Factorization is left-looking (Gilbert-Peierls): columns are processed
//! sparsest first, each one is solved against the partial `L` using a
//! depth-first reach, and the pivot row is chosen by threshold partial pivoting
//! with a row-count tie-break. `P B Q = L U`, where `L` is stored by step with
//! original row indices and `U` is stored by column with step indices.

const NONE: usize = usize::MAX;
const PIVOT_THRESHOLD: f64 = 0.1;
const SINGULAR_TOL: f64 = 1e-11;
const DROP_TOL: f64 = 1e-14;

/// Basis positions that could not be pivoted and the rows left without a pivot.
#[derive(Debug, Clone, PartialEq)]
pub struct Singular {
    pub positions: Vec<usize>,
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct LuFactors {
    m: usize,
    row_of_step: Vec<usize>,
    col_of_step: Vec<usize>,
    l_start: Vec<usize>,
    l_rows: Vec<usize>,
    l_vals: Vec<f64>,
    u_start: Vec<usize>,
    u_steps: Vec<usize>,
    u_vals: Vec<f64>,
    u_diag: Vec<f64>,
}

impl LuFactors {
    /// Factorizes the square matrix whose column `p` is `cols[p]` (row, value pairs).
    pub fn factorize(m: usize, cols: &[Vec<(usize, f64)>]) -> Result<Self, Singular> {
        debug_assert_eq!(cols.len(), m);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&p| cols[p].len());

        let mut row_count = vec![0usize; m];
        for c in cols {
            for &(i, _) in c {
                row_count[i] += 1;
            }
        }

        let mut lu = LuFactors {
            m,
            row_of_step: Vec::with_capacity(m),
            col_of_step: Vec::with_capacity(m),
            l_start: vec![0],
            l_rows: Vec::new(),
            l_vals: Vec::new(),
            u_start: vec![0],
            u_steps: Vec::new(),
            u_vals: Vec::new(),
            u_diag: Vec::with_capacity(m),
        };
        let mut step_of_row = vec![NONE; m];
        let mut x = vec![0.0; m];
        let mut row_mark = vec![NONE; m];
        let mut step_mark = vec![NONE; m];
        let mut pattern: Vec<usize> = Vec::new();
        let mut post: Vec<usize> = Vec::new();
        let mut stack: Vec<(usize, usize)> = Vec::new();
        let mut singular = Vec::new();

        for (stamp, &p) in order.iter().enumerate() {
            pattern.clear();
            post.clear();
            for &(i, v) in &cols[p] {
                x[i] += v;
                if row_mark[i] != stamp {
                    row_mark[i] = stamp;
                    pattern.push(i);
                }
            }

            // steps reachable through L from the pivoted rows of this column
            for idx in 0..pattern.len() {
                let t0 = step_of_row[pattern[idx]];
                if t0 == NONE || step_mark[t0] == stamp {
                    continue;
                }
                step_mark[t0] = stamp;
                stack.push((t0, lu.l_start[t0]));
                while let Some(top) = stack.last_mut() {
                    let (s, ptr) = *top;
                    let end = lu.l_start[s + 1];
                    let mut q = ptr;
                    let mut next = NONE;
                    while q < end {
                        let sj = step_of_row[lu.l_rows[q]];
                        q += 1;
                        if sj != NONE && step_mark[sj] != stamp {
                            next = sj;
                            break;
                        }
                    }
                    top.1 = q;
                    if next == NONE {
                        post.push(s);
                        stack.pop();
                    } else {
                        step_mark[next] = stamp;
                        stack.push((next, lu.l_start[next]));
                    }
                }
            }

            for &t in post.iter().rev() {
                let xr = x[lu.row_of_step[t]];
                if xr == 0.0 {
                    continue;
                }
                for q in lu.l_start[t]..lu.l_start[t + 1] {
                    let i = lu.l_rows[q];
                    x[i] -= lu.l_vals[q] * xr;
                    if row_mark[i] != stamp {
                        row_mark[i] = stamp;
                        pattern.push(i);
                    }
                }
            }

            let mut amax = 0.0_f64;
            for &i in &pattern {
                if step_of_row[i] == NONE {
                    amax = amax.max(x[i].abs());
                }
            }
            if amax < SINGULAR_TOL {
                singular.push(p);
                for &i in &pattern {
                    x[i] = 0.0;
                }
                continue;
            }
            let mut piv = NONE;
            for &i in &pattern {
                if step_of_row[i] != NONE || x[i].abs() < PIVOT_THRESHOLD * amax {
                    continue;
                }
                let better = piv == NONE
                    || row_count[i] < row_count[piv]
                    || (row_count[i] == row_count[piv]
                        && (x[i].abs() > x[piv].abs()
                            || (x[i].abs() == x[piv].abs() && i < piv)));
                if better {
                    piv = i;
                }
            }

            let k = lu.row_of_step.len();
            for &t in &post {
                let v = x[lu.row_of_step[t]];
                if v.abs() > DROP_TOL {
                    lu.u_steps.push(t);
                    lu.u_vals.push(v);
                }
            }
            lu.u_start.push(lu.u_steps.len());
            let pv = x[piv];
            lu.u_diag.push(pv);
            for &i in &pattern {
                if step_of_row[i] == NONE && i != piv {
                    let l = x[i] / pv;
                    if l.abs() > DROP_TOL {
                        lu.l_rows.push(i);
                        lu.l_vals.push(l);
                    }
                }
                if row_count[i] > 0 {
                    row_count[i] -= 1;
                }
            }
            lu.l_start.push(lu.l_rows.len());
            lu.row_of_step.push(piv);
            lu.col_of_step.push(p);
            step_of_row[piv] = k;
            for &i in &pattern {
                x[i] = 0.0;
            }
        }

        if singular.is_empty() {
            Ok(lu)
        } else {
            singular.sort_unstable();
            let rows = (0..m).filter(|&i| step_of_row[i] == NONE).collect();
            Err(Singular {
                positions: singular,
                rows,
            })
        }
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn nnz(&self) -> usize {
        self.l_rows.len() + self.u_steps.len() + self.m
    }

    /// Solves `B w = rhs`. `rhs` is row-indexed and is clobbered; `out` is
    /// indexed by basis position.
    pub fn ftran(&self, rhs: &mut [f64], out: &mut [f64]) {
        for t in 0..self.m {
            let y = rhs[self.row_of_step[t]];
            if y != 0.0 {
                for q in self.l_start[t]..self.l_start[t + 1] {
                    rhs[self.l_rows[q]] -= self.l_vals[q] * y;
                }
            }
        }
        for k in (0..self.m).rev() {
            let r = self.row_of_step[k];
            let w = rhs[r] / self.u_diag[k];
            rhs[r] = 0.0;
            out[self.col_of_step[k]] = w;
            if w != 0.0 {
                for q in self.u_start[k]..self.u_start[k + 1] {
                    rhs[self.row_of_step[self.u_steps[q]]] -= self.u_vals[q] * w;
                }
            }
        }
    }

    /// Solves `B^T y = c`. `c` is indexed by basis position, `out` by row;
    /// `work` is scratch of length `m`.
    pub fn btran(&self, c: &[f64], out: &mut [f64], work: &mut [f64]) {
        for k in 0..self.m {
            let mut s = c[self.col_of_step[k]];
            for q in self.u_start[k]..self.u_start[k + 1] {
                s -= self.u_vals[q] * work[self.u_steps[q]];
            }
            work[k] = s / self.u_diag[k];
        }
        for t in (0..self.m).rev() {
            let mut v = work[t];
            for q in self.l_start[t]..self.l_start[t + 1] {
                v -= self.l_vals[q] * out[self.l_rows[q]];
            }
            out[self.row_of_step[t]] = v;
        }
    }
}

#[derive(Debug, Clone)]
struct Eta {
    pos: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

/// LU factors of the last refactorized basis followed by product-form etas.
#[derive(Debug, Clone)]
pub struct BasisFactor {
    lu: LuFactors,
    etas: Vec<Eta>,
    eta_nnz: usize,
    rhs_buf: Vec<f64>,
    work: Vec<f64>,
}

impl BasisFactor {
    pub fn new(lu: LuFactors) -> Self {
        let m = lu.dim();
        Self {
            lu,
            etas: Vec::new(),
            eta_nnz: 0,
            rhs_buf: vec![0.0; m],
            work: vec![0.0; m],
        }
    }

    pub fn updates(&self) -> usize {
        self.etas.len()
    }

    pub fn eta_nnz(&self) -> usize {
        self.eta_nnz
    }

    pub fn lu_nnz(&self) -> usize {
        self.lu.nnz()
    }

    /// `out = B^{-1} rhs`; `rhs` is row-indexed and left untouched.
    pub fn ftran(&mut self, rhs: &[f64], out: &mut [f64]) {
        self.rhs_buf.copy_from_slice(rhs);
        self.lu.ftran(&mut self.rhs_buf, out);
        for e in &self.etas {
            let zr = out[e.pos];
            if zr == 0.0 {
                continue;
            }
            let zr = zr / e.pivot;
            out[e.pos] = zr;
            for &(i, a) in &e.entries {
                out[i] -= a * zr;
            }
        }
    }

    /// `out = B^{-T} c`; `c` is indexed by basis position and is clobbered.
    pub fn btran(&mut self, c: &mut [f64], out: &mut [f64]) {
        for e in self.etas.iter().rev() {
            let mut s = c[e.pos];
            for &(i, a) in &e.entries {
                s -= a * c[i];
            }
            c[e.pos] = s / e.pivot;
        }
        self.lu.btran(c, out, &mut self.work);
    }

    /// Records the replacement of the column at `pos` by a column whose
    /// transformed form (`B^{-1} a`) is `alpha`.
    pub fn update(&mut self, pos: usize, alpha: &[f64]) {
        let pivot = alpha[pos];
        let entries: Vec<(usize, f64)> = alpha
            .iter()
            .enumerate()
            .filter(|&(i, a)| i != pos && a.abs() > DROP_TOL)
            .map(|(i, &a)| (i, a))
            .collect();
        self.eta_nnz += entries.len() + 1;
        self.etas.push(Eta {
            pos,
            pivot,
            entries,
        });
    }
}
