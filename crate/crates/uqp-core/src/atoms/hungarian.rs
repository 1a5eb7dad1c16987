//! Dense minimum-cost assignment (Hungarian method, potentials form).
//!
//! Solves rectangular instances with `rows <= cols` in O(rows² · cols):
//! every row receives a distinct column, surplus columns stay unassigned,
//! and the assignment minimizes the total cost.

const INF: i64 = i64::MAX / 4;

/// Returns the assigned column per row and the total cost.
///
/// `cost` must be rectangular with `cost.len() <= cost[0].len()`.
pub fn min_cost_assignment(cost: &[Vec<i64>]) -> (Vec<usize>, i64) {
    let rows = cost.len();
    if rows == 0 {
        return (Vec::new(), 0);
    }
    let cols = cost[0].len();
    debug_assert!(cost.iter().all(|row| row.len() == cols));
    assert!(rows <= cols, "assignment needs at least as many columns as rows");

    // 1-based potentials over rows (u) and columns (v); p[j] is the row
    // currently matched to column j, with column 0 as the virtual source.
    let mut u = vec![0i64; rows + 1];
    let mut v = vec![0i64; cols + 1];
    let mut p = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];

    for i in 1..=rows {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
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

    let mut assignment = vec![usize::MAX; rows];
    let mut total = 0i64;
    for j in 1..=cols {
        if p[j] != 0 {
            assignment[p[j] - 1] = j - 1;
            total += cost[p[j] - 1][j - 1];
        }
    }
    debug_assert!(assignment.iter().all(|&j| j != usize::MAX));
    (assignment, total)
}
