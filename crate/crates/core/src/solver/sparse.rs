/// Compressed sparse column matrix.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CscMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub start: Vec<usize>,
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
}

impl CscMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, trips: &[(usize, usize, f64)]) -> Self {
        let mut count = vec![0usize; ncols + 1];
        for &(_, j, _) in trips {
            count[j + 1] += 1;
        }
        for j in 0..ncols {
            count[j + 1] += count[j];
        }
        let start = count.clone();
        let mut next = count;
        let mut idx = vec![0; trips.len()];
        let mut val = vec![0.0; trips.len()];
        for &(i, j, v) in trips {
            let q = next[j];
            idx[q] = i;
            val[q] = v;
            next[j] += 1;
        }
        let mut m = CscMatrix {
            nrows,
            ncols,
            start,
            idx,
            val,
        };
        m.canonicalize();
        m
    }

    /// Sorts each column by row and merges duplicate entries.
    fn canonicalize(&mut self) {
        let mut new_start = vec![0usize; self.ncols + 1];
        let mut idx = Vec::with_capacity(self.idx.len());
        let mut val = Vec::with_capacity(self.val.len());
        let mut buf: Vec<(usize, f64)> = Vec::new();
        for j in 0..self.ncols {
            buf.clear();
            for q in self.start[j]..self.start[j + 1] {
                buf.push((self.idx[q], self.val[q]));
            }
            buf.sort_by_key(|e| e.0);
            for &(i, v) in &buf {
                if idx.len() > new_start[j] && *idx.last().unwrap() == i {
                    *val.last_mut().unwrap() += v;
                } else {
                    idx.push(i);
                    val.push(v);
                }
            }
            new_start[j + 1] = idx.len();
        }
        self.start = new_start;
        self.idx = idx;
        self.val = val;
    }

    pub fn nnz(&self) -> usize {
        self.idx.len()
    }

    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let r = self.start[j]..self.start[j + 1];
        (&self.idx[r.clone()], &self.val[r])
    }

    /// Row-major dense copy, for tests and small diagnostics.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for j in 0..self.ncols {
            let (rows, vals) = self.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                d[i][j] = v;
            }
        }
        d
    }

    pub fn transpose(&self) -> CscMatrix {
        let mut trips = Vec::with_capacity(self.nnz());
        for j in 0..self.ncols {
            let (rows, vals) = self.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                trips.push((j, i, v));
            }
        }
        CscMatrix::from_triplets(self.ncols, self.nrows, &trips)
    }
}
