//! Minimum-cost rectangular assignment (Kuhn-Munkres with potentials).
//!
//! Among all optimal maximal matchings the lexicographically smallest
//! sorted pair list is returned, so equal-cost alternatives never depend on
//! floating-point accidents inside the solver.

/// Solve on the sub-matrix selected by `rows` x `cols`, `rows.len() <= cols.len()`.
/// Returns the optimal total and, for each entry of `rows`, the index into
/// `cols` it was assigned to.
fn solve_wide(cost: &[Vec<f64>], rows: &[usize], cols: &[usize]) -> (f64, Vec<usize>) {
    let n = rows.len();
    let m = cols.len();
    debug_assert!(n <= m);
    if n == 0 {
        return (0.0, Vec::new());
    }
    let a = |i: usize, j: usize| cost[rows[i - 1]][cols[j - 1]];
    // 1-based potentials; p[j] = row matched to column j
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if !used[j] {
                    let cur = a(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
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
    let mut assign = vec![usize::MAX; n];
    for j in 1..=m {
        if p[j] != 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    let total = assign.iter().enumerate().map(|(i, &j)| cost[rows[i]][cols[j]]).sum();
    (total, assign)
}

/// Optimal matching on an arbitrary sub-matrix, as `(row, col)` pairs of
/// original indices.
fn solve(cost: &[Vec<f64>], rows: &[usize], cols: &[usize]) -> (f64, Vec<(usize, usize)>) {
    if rows.len() <= cols.len() {
        let (t, a) = solve_wide(cost, rows, cols);
        (t, a.iter().enumerate().map(|(i, &j)| (rows[i], cols[j])).collect())
    } else {
        let tr: Vec<Vec<f64>> = (0..cost.first().map_or(0, Vec::len))
            .map(|j| cost.iter().map(|row| row[j]).collect())
            .collect();
        let (t, a) = solve_wide(&tr, cols, rows);
        (t, a.iter().enumerate().map(|(j, &i)| (rows[i], cols[j])).collect())
    }
}

/// Minimum-cost assignment of rows to columns. Pairs are sorted by row.
///
/// Panics if the rows have different lengths or a cost is not finite.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let n = cost.len();
    let m = cost.first().map_or(0, Vec::len);
    assert!(cost.iter().all(|r| r.len() == m), "cost matrix is not rectangular");
    assert!(cost.iter().flatten().all(|c| c.is_finite()), "cost matrix has non-finite entries");
    if n == 0 || m == 0 {
        return Vec::new();
    }
    let all_rows: Vec<usize> = (0..n).collect();
    let all_cols: Vec<usize> = (0..m).collect();
    let (best, first) = solve(cost, &all_rows, &all_cols);
    let scale: f64 = cost.iter().flatten().map(|c| c.abs()).fold(1.0, f64::max);
    let tol = 1e-9 * scale * (n.min(m) as f64);
    let size = n.min(m);

    // current optimal solution consistent with the pairs fixed so far
    let mut reference: Vec<Option<usize>> = vec![None; n];
    for &(r, c) in &first {
        reference[r] = Some(c);
    }
    let mut fixed: Vec<(usize, usize)> = Vec::with_capacity(size);
    let mut fixed_cost = 0.0;
    let mut col_used = vec![false; m];

    for r in 0..n {
        if fixed.len() == size {
            break;
        }
        let limit = reference[r].unwrap_or(m);
        let mut chosen = None;
        for c in (0..limit).filter(|&c| !col_used[c]) {
            let rest_rows: Vec<usize> = (r + 1..n).collect();
            let rest_cols: Vec<usize> = (0..m).filter(|&j| j != c && !col_used[j]).collect();
            let need = size - fixed.len() - 1;
            if rest_rows.len().min(rest_cols.len()) < need {
                continue;
            }
            let (t, pairs) = solve(cost, &rest_rows, &rest_cols);
            if (fixed_cost + cost[r][c] + t - best).abs() <= tol {
                for x in reference.iter_mut().skip(r) {
                    *x = None;
                }
                reference[r] = Some(c);
                for (pr, pc) in pairs {
                    reference[pr] = Some(pc);
                }
                chosen = Some(c);
                break;
            }
        }
        if chosen.is_none() {
            chosen = reference[r];
        }
        if let Some(c) = chosen {
            fixed.push((r, c));
            fixed_cost += cost[r][c];
            col_used[c] = true;
        }
    }
    fixed
}

/// Sum of the costs of an assignment.
pub fn assignment_cost(cost: &[Vec<f64>], pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().map(|&(r, c)| cost[r][c]).sum()
}
