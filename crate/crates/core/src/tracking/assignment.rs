//! Minimum-cost bipartite matching with a gating threshold.

/// Cost used for pairs that may never be matched.
pub const FORBIDDEN: f64 = f64::INFINITY;

const BIG: f64 = 1.0e9;

/// Solves the rectangular assignment problem (`rows <= cols`) with the
/// shortest augmenting path form of the Hungarian method. Returns the column
/// assigned to each row. Non-finite costs must be replaced by the caller.
fn hungarian(cost: &[Vec<f64>], cols: usize) -> Vec<usize> {
    let n = cost.len();
    debug_assert!(n <= cols);
    // 1-based potentials as in the classic formulation; index 0 is a sentinel.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; cols + 1];
    let mut way = vec![0usize; cols + 1];
    let mut row_of = vec![0usize; cols + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![usize::MAX; n];
    for j in 1..=cols {
        if row_of[j] != 0 {
            assignment[row_of[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Optimal partial matching of rows to columns.
///
/// A pair may be matched only when its cost is at most `max_cost`; every
/// unmatched row or column is charged `max_cost / 2`, so the solver
/// minimises `sum(cost - max_cost)` over matched pairs. Entries equal to
/// [`FORBIDDEN`] (or any cost above `max_cost`) are never matched.
pub fn gated_assignment(costs: &[Vec<f64>], max_cost: f64) -> Vec<Option<usize>> {
    let n = costs.len();
    let m = costs.first().map_or(0, Vec::len);
    if n == 0 {
        return Vec::new();
    }
    if m == 0 {
        return vec![None; n];
    }
    let size = n + m;
    // Ties at exactly `max_cost` resolve in favour of matching.
    let half = 0.5 * max_cost + 1e-9;
    let mut padded = vec![vec![BIG; size]; size];
    for i in 0..n {
        debug_assert_eq!(costs[i].len(), m);
        for j in 0..m {
            let c = costs[i][j];
            if c.is_finite() && c <= max_cost {
                padded[i][j] = c;
            }
        }
        padded[i][m + i] = half;
    }
    for j in 0..m {
        padded[n + j][j] = half;
        padded[n + j][m..].fill(0.0);
    }
    hungarian(&padded, size)
        .into_iter()
        .take(n)
        .enumerate()
        .map(|(i, j)| (j < m && costs[i][j].is_finite() && costs[i][j] <= max_cost).then_some(j))
        .collect()
}

/// Objective value of a partial matching: `sum(cost - max_cost)` over matched pairs.
pub fn matching_objective(costs: &[Vec<f64>], max_cost: f64, assignment: &[Option<usize>]) -> f64 {
    assignment
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| costs[i][j] - max_cost))
        .sum()
}
