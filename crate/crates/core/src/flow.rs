//! Maximum flow / minimum s-t cut on small dense directed graphs (Dinic).

use std::collections::VecDeque;

/// Computes a minimum `s → t` cut of the dense capacity matrix `cap`
/// (row-major `n × n`, non-negative, finite). Returns the cut value and the
/// source side (nodes reachable from `s` in the final residual graph).
pub fn min_st_cut(n: usize, cap: &[f64], s: usize, t: usize) -> (f64, Vec<bool>) {
    assert_eq!(cap.len(), n * n);
    assert!(s != t && s < n && t < n);
    let scale: f64 = cap.iter().sum::<f64>().max(1.0);
    let eps = scale * 1e-13;
    let mut residual = cap.to_vec();
    let mut flow = 0.0;
    let mut level = vec![usize::MAX; n];
    let mut next = vec![0usize; n];

    loop {
        bfs_levels(n, &residual, s, eps, &mut level);
        if level[t] == usize::MAX {
            break;
        }
        next.fill(0);
        loop {
            let pushed = augment(n, &mut residual, &level, &mut next, s, t, f64::INFINITY, eps);
            if pushed <= eps {
                break;
            }
            flow += pushed;
        }
    }

    bfs_levels(n, &residual, s, eps, &mut level);
    let side = level.iter().map(|&l| l != usize::MAX).collect();
    (flow, side)
}

fn bfs_levels(n: usize, residual: &[f64], s: usize, eps: f64, level: &mut [usize]) {
    level.fill(usize::MAX);
    level[s] = 0;
    let mut queue = VecDeque::from([s]);
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if level[v] == usize::MAX && residual[u * n + v] > eps {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn augment(
    n: usize,
    residual: &mut [f64],
    level: &[usize],
    next: &mut [usize],
    u: usize,
    t: usize,
    limit: f64,
    eps: f64,
) -> f64 {
    if u == t {
        return limit;
    }
    while next[u] < n {
        let v = next[u];
        let c = residual[u * n + v];
        if c > eps && level[v] == level[u] + 1 {
            let pushed = augment(n, residual, level, next, v, t, limit.min(c), eps);
            if pushed > eps {
                residual[u * n + v] -= pushed;
                residual[v * n + u] += pushed;
                return pushed;
            }
        }
        next[u] += 1;
    }
    0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cut_value(n: usize, cap: &[f64], side: &[bool]) -> f64 {
        let mut total = 0.0;
        for u in 0..n {
            for v in 0..n {
                if side[u] && !side[v] {
                    total += cap[u * n + v];
                }
            }
        }
        total
    }

    #[test]
    fn classic_example() {
        // s=0, t=3; two routes of capacity 2 and 3 with a cross edge
        let n = 4;
        let mut cap = vec![0.0; 16];
        cap[1] = 3.0; // 0->1
        cap[2] = 2.0; // 0->2
        cap[4 + 3] = 2.0; // 1->3
        cap[4 + 2] = 5.0; // 1->2
        cap[8 + 3] = 3.0; // 2->3
        let (f, side) = min_st_cut(n, &cap, 0, 3);
        assert!((f - 5.0).abs() < 1e-12);
        assert!((cut_value(n, &cap, &side) - 5.0).abs() < 1e-12);
        assert!(side[0] && !side[3]);
    }

    #[test]
    fn brute_force_on_random_dense_graphs() {
        let mut state = 99u64;
        for _ in 0..100 {
            let n = 5;
            let cap: Vec<f64> = (0..n * n)
                .map(|i| {
                    state = crate::rng::splitmix64(state);
                    if i / n == i % n {
                        0.0
                    } else {
                        (crate::rng::unit(state) * 4.0).floor()
                    }
                })
                .collect();
            let (f, side) = min_st_cut(n, &cap, 0, n - 1);
            let mut best = f64::INFINITY;
            for mask in 0u32..(1 << n) {
                let side: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
                if side[0] && !side[n - 1] {
                    best = best.min(cut_value(n, &cap, &side));
                }
            }
            assert!((f - best).abs() < 1e-9);
            assert!((cut_value(n, &cap, &side) - best).abs() < 1e-9);
        }
    }
}
