//! Cost fusion, gating and optimal bipartite assignment.
//!
//! Rows are tracks and columns are detections throughout the tracker, but
//! nothing here depends on that.

use crate::error::{Error, Result};

/// Dense `rows x cols` cost matrix with a per-entry gate.
///
/// Gated entries are forbidden pairings; their stored cost is ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    costs: Vec<f64>,
    gated: Vec<bool>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        CostMatrix {
            rows,
            cols,
            costs: vec![0.0; rows * cols],
            gated: vec![false; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut costs = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                costs.push(f(r, c));
            }
        }
        CostMatrix {
            rows,
            cols,
            costs,
            gated: vec![false; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidMatrix("ragged rows".into()));
        }
        let m = CostMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]);
        m.validate()?;
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    fn idx(&self, r: usize, c: usize) -> usize {
        debug_assert!(r < self.rows && c < self.cols);
        r * self.cols + c
    }

    pub fn cost(&self, r: usize, c: usize) -> f64 {
        self.costs[self.idx(r, c)]
    }

    pub fn set(&mut self, r: usize, c: usize, cost: f64) {
        let i = self.idx(r, c);
        self.costs[i] = cost;
    }

    pub fn is_gated(&self, r: usize, c: usize) -> bool {
        self.gated[self.idx(r, c)]
    }

    pub fn gate(&mut self, r: usize, c: usize) {
        let i = self.idx(r, c);
        self.gated[i] = true;
    }

    /// Gates every entry for which `pred(row, col, cost)` holds.
    pub fn gate_where(&mut self, mut pred: impl FnMut(usize, usize, f64) -> bool) {
        for r in 0..self.rows {
            for c in 0..self.cols {
                let i = r * self.cols + c;
                if pred(r, c, self.costs[i]) {
                    self.gated[i] = true;
                }
            }
        }
    }

    pub fn gated_count(&self) -> usize {
        self.gated.iter().filter(|g| **g).count()
    }

    /// Non-gated costs must be finite and non-negative.
    pub fn validate(&self) -> Result<()> {
        for (i, (&cost, &gated)) in self.costs.iter().zip(&self.gated).enumerate() {
            if !gated && !(cost.is_finite() && cost >= 0.0) {
                return Err(Error::InvalidMatrix(format!(
                    "entry ({}, {}) has cost {cost}",
                    i / self.cols.max(1),
                    i % self.cols.max(1)
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    /// Matched `(row, col)` pairs in ascending row order.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
}

impl Assignment {
    pub fn total_cost(&self, m: &CostMatrix) -> f64 {
        self.pairs.iter().map(|&(r, c)| m.cost(r, c)).sum()
    }
}

/// `lambda * spatial + (1 - lambda) * appearance / 2`.
///
/// Appearance costs are cosine distances on `[0, 2]` and are halved onto
/// the spatial cost's `[0, 1]` range first. An entry gated in either
/// input stays gated.
pub fn fuse(spatial: &CostMatrix, appearance: &CostMatrix, lambda: f64) -> Result<CostMatrix> {
    if spatial.shape() != appearance.shape() {
        return Err(Error::InvalidMatrix(format!(
            "cannot fuse {:?} with {:?}",
            spatial.shape(),
            appearance.shape()
        )));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "fusion weight must lie in [0, 1], got {lambda}"
        )));
    }
    let costs = spatial
        .costs
        .iter()
        .zip(&appearance.costs)
        .map(|(s, a)| lambda * s + (1.0 - lambda) * (a * 0.5))
        .collect();
    let gated = spatial
        .gated
        .iter()
        .zip(&appearance.gated)
        .map(|(a, b)| *a || *b)
        .collect();
    Ok(CostMatrix {
        rows: spatial.rows,
        cols: spatial.cols,
        costs,
        gated,
    })
}

/// Gates entries whose spatial cost (`1 - EIoU`) exceeds the proximity
/// threshold. A threshold of 1.0 gates nothing.
pub fn gate_spatial(m: &CostMatrix, proximity_threshold: f64) -> Result<CostMatrix> {
    if !(proximity_threshold > 0.0 && proximity_threshold <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "proximity threshold must lie in (0, 1], got {proximity_threshold}"
        )));
    }
    let mut out = m.clone();
    out.gate_where(|_, _, cost| cost > proximity_threshold);
    Ok(out)
}

/// Minimum-cost assignment over the non-gated entries.
///
/// Among all matchings with the largest possible number of non-gated
/// pairs, returns one of minimum total cost. Ties are broken by the
/// solver's fixed scan order, so equal inputs always give equal outputs.
pub fn solve(m: &CostMatrix) -> Result<Assignment> {
    m.validate()?;
    let (rows, cols) = m.shape();
    let mut out = Assignment::default();
    if rows == 0 || cols == 0 || m.gated_count() == rows * cols {
        out.unmatched_rows = (0..rows).collect();
        out.unmatched_cols = (0..cols).collect();
        return Ok(out);
    }

    // Rows and columns without a single feasible entry stay unmatched in
    // every optimum; leaving them out keeps the square problem small.
    let live_rows: Vec<usize> = (0..rows)
        .filter(|&r| (0..cols).any(|c| !m.is_gated(r, c)))
        .collect();
    let live_cols: Vec<usize> = (0..cols)
        .filter(|&c| (0..rows).any(|r| !m.is_gated(r, c)))
        .collect();
    let (nr, nc) = (live_rows.len(), live_cols.len());

    let max_real = (0..rows * cols)
        .filter(|&i| !m.gated[i])
        .map(|i| m.costs[i])
        .fold(0.0, f64::max);
    // Gated entries get a sentinel above any sum of real costs over a full
    // matching, so more real pairs always win.
    let sentinel = nr.min(nc) as f64 * max_real + 1.0;
    let entry = |i: usize, j: usize| {
        let (r, c) = (live_rows[i], live_cols[j]);
        if m.is_gated(r, c) {
            sentinel
        } else {
            m.cost(r, c)
        }
    };
    let pairs = hungarian_rect(nr, nc, entry);

    let mut row_col = vec![None; rows];
    for (i, j) in pairs {
        let (r, c) = (live_rows[i], live_cols[j]);
        if !m.is_gated(r, c) {
            row_col[r] = Some(c);
        }
    }
    let mut col_used = vec![false; cols];
    for (r, c) in row_col.into_iter().enumerate() {
        match c {
            Some(c) => {
                out.pairs.push((r, c));
                col_used[c] = true;
            }
            None => out.unmatched_rows.push(r),
        }
    }
    out.unmatched_cols = (0..cols).filter(|&c| !col_used[c]).collect();
    Ok(out)
}

/// Maximum-total-score matching where `score(r, c)` of `None` marks an
/// infeasible pair. Scores must be positive; the number of pairs is not
/// maximized, only their summed score.
pub fn max_weight_matching(
    rows: usize,
    cols: usize,
    mut score: impl FnMut(usize, usize) -> Option<f64>,
) -> Vec<(usize, usize)> {
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let mut costs = vec![0.0; rows * cols];
    let mut feasible = vec![false; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            if let Some(s) = score(r, c) {
                costs[r * cols + c] = -s;
                feasible[r * cols + c] = true;
            }
        }
    }
    if !feasible.contains(&true) {
        return Vec::new();
    }
    let mut pairs: Vec<(usize, usize)> = hungarian_rect(rows, cols, |r, c| costs[r * cols + c])
        .into_iter()
        .filter(|&(r, c)| feasible[r * cols + c])
        .collect();
    pairs.sort_unstable();
    pairs
}

/// Assignment covering the smaller side of a `rows x cols` matrix,
/// returned as `(row, col)` pairs in row order.
fn hungarian_rect(
    rows: usize,
    cols: usize,
    cost: impl Fn(usize, usize) -> f64,
) -> Vec<(usize, usize)> {
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    if rows <= cols {
        let dense: Vec<f64> = (0..rows * cols).map(|i| cost(i / cols, i % cols)).collect();
        hungarian(&dense, rows, cols)
            .into_iter()
            .enumerate()
            .collect()
    } else {
        let dense: Vec<f64> = (0..rows * cols).map(|i| cost(i % rows, i / rows)).collect();
        let mut pairs: Vec<(usize, usize)> = hungarian(&dense, cols, rows)
            .into_iter()
            .enumerate()
            .map(|(c, r)| (r, c))
            .collect();
        pairs.sort_unstable();
        pairs
    }
}

/// Kuhn-Munkres with row/column potentials on a dense row-major `n x m`
/// matrix of finite costs, `n <= m`; returns the column of each row.
fn hungarian(costs: &[f64], n: usize, m: usize) -> Vec<usize> {
    debug_assert!(n <= m && costs.len() == n * m);
    // 1-based potentials; index 0 is the virtual source column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut minv = vec![f64::INFINITY; m + 1];
    let mut used = vec![false; m + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = costs[(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0usize; n];
    for j in 1..=m {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}
