//! Exact solver for the K x K linear assignment problem, the shared
//! optimization kernel of most relabelling methods.
//!
//! `solve_min_assignment` runs an O(K^3) augmenting-path (Hungarian)
//! algorithm with dual potentials. Ties are resolved deterministically:
//! among all optimal permutations the lexicographically smallest one is
//! returned, found by a greedy walk over the tight-edge subgraph that the
//! duals certify. `brute_force_assignment` is the K! enumeration kept as
//! an independent oracle.

use crate::error::{Error, Result};
use crate::perm::Permutation;
use ndarray::ArrayView2;
#[cfg(test)]
use ndarray::Array2;

/// Optimal permutation and its attained objective.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentResult {
    pub perm: Permutation,
    /// `sum_k cost[k][perm[k]]`, accumulated in index order.
    pub objective: f64,
}

fn validate(cost: ArrayView2<'_, f64>) -> Result<usize> {
    let k = cost.nrows();
    if k == 0 || cost.ncols() != k {
        return Err(Error::DimensionMismatch(format!(
            "cost matrix must be square K x K with K >= 1, got {} x {}",
            cost.nrows(),
            cost.ncols()
        )));
    }
    if let Some((idx, v)) = cost.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite(format!(
            "cost[{}][{}] = {v}",
            idx.0 + 1,
            idx.1 + 1
        )));
    }
    Ok(k)
}

fn objective_of(cost: ArrayView2<'_, f64>, perm: &[usize]) -> f64 {
    perm.iter()
        .enumerate()
        .map(|(k, &l)| cost[[k, l]])
        .sum()
}

/// Returns a permutation minimizing `sum_k cost[k][perm[k]]`; among optima
/// the lexicographically smallest permutation is returned.
pub fn solve_min_assignment(cost: ArrayView2<'_, f64>) -> Result<AssignmentResult> {
    let k = validate(cost)?;
    let (perm, u, v) = hungarian(cost);

    // Complementary slackness: the optimal permutations are exactly the
    // perfect matchings on edges with zero reduced cost. Collect them with
    // a tolerance that keeps integer-valued costs exact.
    let scale = cost.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let tol = 1e-9 * (1.0 + scale);
    let mut tight = vec![vec![false; k]; k];
    let mut n_tight = 0usize;
    for r in 0..k {
        for c in 0..k {
            if cost[[r, c]] - u[r] - v[c] <= tol {
                tight[r][c] = true;
                n_tight += 1;
            }
        }
    }

    let chosen = if n_tight == k {
        // unique optimum: the matching itself
        perm
    } else {
        lex_smallest_matching(&tight).unwrap_or(perm)
    };
    let objective = objective_of(cost, &chosen);
    Ok(AssignmentResult {
        perm: Permutation::new(chosen)?,
        objective,
    })
}

/// Maximization counterpart: negates the scores and delegates, keeping the
/// same lexicographic tie-break.
pub fn solve_max_assignment(score: ArrayView2<'_, f64>) -> Result<AssignmentResult> {
    validate(score)?;
    let negated = score.mapv(|v| -v);
    let res = solve_min_assignment(negated.view())?;
    let objective = objective_of(score, res.perm.as_slice());
    Ok(AssignmentResult {
        perm: res.perm,
        objective,
    })
}

/// Exhaustive K! search with the same lexicographic tie-break. Guarded to
/// K <= 8; intended as a test oracle and for documentation of the cost the
/// polynomial solver avoids.
pub fn brute_force_assignment(
    cost: ArrayView2<'_, f64>,
    maximize: bool,
) -> Result<AssignmentResult> {
    let k = validate(cost)?;
    if k > 8 {
        return Err(Error::InvalidInput(format!(
            "brute force assignment is limited to K <= 8, got K = {k}"
        )));
    }
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = perm.clone();
    let mut best_obj = objective_of(cost, &perm);
    while next_permutation(&mut perm) {
        let obj = objective_of(cost, &perm);
        let better = if maximize {
            obj > best_obj
        } else {
            obj < best_obj
        };
        if better {
            best_obj = obj;
            best.copy_from_slice(&perm);
        }
    }
    Ok(AssignmentResult {
        perm: Permutation::new(best)?,
        objective: best_obj,
    })
}

/// Classic augmenting-path Hungarian algorithm (square, minimizing).
/// Returns the optimal column per row plus the dual potentials.
fn hungarian(cost: ArrayView2<'_, f64>) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let n = cost.nrows();
    // 1-based with column 0 as sentinel
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1]; // p[j] = row matched to column j, 0 = free
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
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
            for j in 0..=n {
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
    let mut perm = vec![0usize; n];
    for j in 1..=n {
        if p[j] != 0 {
            perm[p[j] - 1] = j - 1;
        }
    }
    (perm, u[1..].to_vec(), v[1..].to_vec())
}

/// Lexicographically smallest perfect matching on a bipartite adjacency
/// matrix, by fixing rows in order and checking that the remainder stays
/// matchable.
fn lex_smallest_matching(adj: &[Vec<bool>]) -> Option<Vec<usize>> {
    let n = adj.len();
    let mut chosen = vec![0usize; n];
    let mut col_used = vec![false; n];
    for row in 0..n {
        let mut found = false;
        for col in 0..n {
            if col_used[col] || !adj[row][col] {
                continue;
            }
            col_used[col] = true;
            if rows_matchable(adj, row + 1, &col_used) {
                chosen[row] = col;
                found = true;
                break;
            }
            col_used[col] = false;
        }
        if !found {
            return None;
        }
    }
    Some(chosen)
}

/// Kuhn's algorithm: can rows `first..n` all be matched into the columns
/// not yet taken?
fn rows_matchable(adj: &[Vec<bool>], first: usize, col_used: &[bool]) -> bool {
    let n = adj.len();
    let mut match_col = vec![usize::MAX; n];

    fn augment(
        row: usize,
        adj: &[Vec<bool>],
        col_used: &[bool],
        visited: &mut [bool],
        match_col: &mut [usize],
    ) -> bool {
        let n = adj.len();
        for col in 0..n {
            if col_used[col] || !adj[row][col] || visited[col] {
                continue;
            }
            visited[col] = true;
            if match_col[col] == usize::MAX
                || augment(match_col[col], adj, col_used, visited, match_col)
            {
                match_col[col] = row;
                return true;
            }
        }
        false
    }

    let mut visited = vec![false; n];
    for row in first..n {
        visited.iter_mut().for_each(|v| *v = false);
        if !augment(row, adj, col_used, &mut visited, &mut match_col) {
            return false;
        }
    }
    true
}

/// In-place lexicographic successor; returns false once the last
/// permutation has been visited.
fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::time::Instant;

    #[test]
    fn diagonal_and_anti_diagonal() {
        let res = solve_min_assignment(array![[1.0, 2.0], [2.0, 1.0]].view()).unwrap();
        assert_eq!(res.perm.as_slice(), &[0, 1]);
        assert_eq!(res.objective, 2.0);

        let res = solve_min_assignment(array![[2.0, 1.0], [1.0, 2.0]].view()).unwrap();
        assert_eq!(res.perm.as_slice(), &[1, 0]);
        assert_eq!(res.objective, 2.0);
    }

    #[test]
    fn max_examples() {
        let eye = array![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let res = solve_max_assignment(eye.view()).unwrap();
        assert_eq!(res.perm.as_slice(), &[0, 1, 2]);
        assert_eq!(res.objective, 3.0);

        let res = solve_max_assignment(array![[0.0, 1.0], [1.0, 0.0]].view()).unwrap();
        assert_eq!(res.perm.as_slice(), &[1, 0]);
        assert_eq!(res.objective, 2.0);
    }

    #[test]
    fn brute_force_trivia() {
        let res = brute_force_assignment(array![[3.5]].view(), false).unwrap();
        assert_eq!(res.perm.as_slice(), &[0]);
        let res = brute_force_assignment(array![[1.0, 2.0], [2.0, 1.0]].view(), false).unwrap();
        assert_eq!(res.perm.as_slice(), &[0, 1]);
        assert_eq!(res.objective, 2.0);
        assert!(brute_force_assignment(Array2::zeros((9, 9)).view(), false).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        let err = solve_min_assignment(array![[1.0, f64::NAN], [0.0, 1.0]].view()).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..1000 {
            let cost = Array2::from_shape_fn((5, 5), |_| rng.random::<f64>() * 10.0 - 5.0);
            let fast = solve_min_assignment(cost.view()).unwrap();
            let slow = brute_force_assignment(cost.view(), false).unwrap();
            assert_eq!(fast.objective, slow.objective);
            assert_eq!(fast.perm, slow.perm);
        }
        for _ in 0..200 {
            let score = Array2::from_shape_fn((6, 6), |_| rng.random::<f64>());
            let fast = solve_max_assignment(score.view()).unwrap();
            let slow = brute_force_assignment(score.view(), true).unwrap();
            assert_eq!(fast.objective, slow.objective);
            assert_eq!(fast.perm, slow.perm);
        }
        for _ in 0..200 {
            let cost = Array2::from_shape_fn((7, 7), |_| rng.random::<f64>());
            let fast = solve_min_assignment(cost.view()).unwrap();
            let slow = brute_force_assignment(cost.view(), false).unwrap();
            assert_eq!(fast.objective, slow.objective);
            assert_eq!(fast.perm, slow.perm);
        }
    }

    #[test]
    fn integer_ties_break_lexicographically() {
        // every permutation is optimal: identity must be returned
        let flat = Array2::from_elem((4, 4), 1.0);
        let res = solve_min_assignment(flat.view()).unwrap();
        assert_eq!(res.perm.as_slice(), &[0, 1, 2, 3]);

        // contingency-style ties
        let cost = array![[0.0, 1.0, 1.0], [0.0, 1.0, 1.0], [1.0, 0.0, 0.0]];
        let fast = solve_min_assignment(cost.view()).unwrap();
        let slow = brute_force_assignment(cost.view(), false).unwrap();
        assert_eq!(fast.perm, slow.perm);

        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..500 {
            let cost = Array2::from_shape_fn((5, 5), |_| rng.random_range(0..3) as f64);
            let fast = solve_min_assignment(cost.view()).unwrap();
            let slow = brute_force_assignment(cost.view(), false).unwrap();
            assert_eq!(fast.objective, slow.objective);
            assert_eq!(fast.perm, slow.perm, "cost = {cost:?}");
        }
    }

    #[test]
    fn row_and_column_shifts_keep_the_argmin() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..200 {
            let cost = Array2::from_shape_fn((6, 6), |_| rng.random::<f64>());
            let base = solve_min_assignment(cost.view()).unwrap();
            let mut shifted = cost.clone();
            let row = rng.random_range(0..6);
            let col = rng.random_range(0..6);
            let a = rng.random::<f64>() * 4.0 - 2.0;
            let b = rng.random::<f64>() * 4.0 - 2.0;
            shifted.row_mut(row).mapv_inplace(|v| v + a);
            shifted.column_mut(col).mapv_inplace(|v| v + b);
            let moved = solve_min_assignment(shifted.view()).unwrap();
            assert_eq!(base.perm, moved.perm);
        }
    }

    #[test]
    fn large_instances_run_in_polynomial_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let instances: Vec<Array2<f64>> = (0..100)
            .map(|_| Array2::from_shape_fn((100, 100), |_| rng.random::<f64>()))
            .collect();
        let start = Instant::now();
        for cost in &instances {
            solve_min_assignment(cost.view()).unwrap();
        }
        let elapsed = start.elapsed();
        assert!(
            elapsed.as_secs_f64() < 1.0,
            "100 instances of K=100 took {elapsed:?}"
        );
    }
}
