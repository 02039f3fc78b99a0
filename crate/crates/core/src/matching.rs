//! Minimum-weight perfect matching on complete bipartite graphs.
//!
//! Entries equal to `+inf` are forbidden assignments. Internally costs are
//! carried as `(number of infinite entries, finite sum)` pairs compared
//! lexicographically, which keeps the Hungarian potentials exact in the
//! presence of infinities instead of relying on a big-M constant.

use std::cmp::Ordering;
use std::ops::{Add, Sub};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct LexCost {
    pub inf: i64,
    pub fin: f64,
}

impl LexCost {
    pub const ZERO: LexCost = LexCost { inf: 0, fin: 0.0 };
    const TOP: LexCost = LexCost {
        inf: i64::MAX / 4,
        fin: 0.0,
    };

    pub fn from_f64(x: f64) -> Self {
        if x == f64::INFINITY {
            LexCost { inf: 1, fin: 0.0 }
        } else {
            LexCost { inf: 0, fin: x }
        }
    }

    pub fn to_f64(self) -> f64 {
        match self.inf.cmp(&0) {
            Ordering::Greater => f64::INFINITY,
            Ordering::Less => f64::NEG_INFINITY,
            Ordering::Equal => self.fin,
        }
    }

    pub fn is_finite(self) -> bool {
        self.inf == 0
    }
}

impl Add for LexCost {
    type Output = LexCost;
    fn add(self, o: LexCost) -> LexCost {
        LexCost {
            inf: self.inf + o.inf,
            fin: self.fin + o.fin,
        }
    }
}

impl Sub for LexCost {
    type Output = LexCost;
    fn sub(self, o: LexCost) -> LexCost {
        LexCost {
            inf: self.inf - o.inf,
            fin: self.fin - o.fin,
        }
    }
}

impl PartialOrd for LexCost {
    fn partial_cmp(&self, o: &LexCost) -> Option<Ordering> {
        Some(self.inf.cmp(&o.inf).then(self.fin.total_cmp(&o.fin)))
    }
}

impl std::iter::Sum for LexCost {
    fn sum<I: Iterator<Item = LexCost>>(iter: I) -> LexCost {
        iter.fold(LexCost::ZERO, Add::add)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    /// `row_to_col[r]` is the column matched to row `r`.
    pub row_to_col: Vec<usize>,
    pub weight: f64,
}

fn validate(costs: &[f64]) -> Result<()> {
    if costs.iter().any(|c| c.is_nan() || *c == f64::NEG_INFINITY) {
        return Err(Error::invalid("matching costs must be finite or +inf"));
    }
    Ok(())
}

/// Hungarian algorithm (shortest augmenting paths with potentials), O(n³).
/// `costs` is row-major `n × n`.
pub fn min_cost_assignment(n: usize, costs: &[f64]) -> Result<Assignment> {
    if costs.len() != n * n {
        return Err(Error::invalid(format!(
            "expected {} costs for a {n}x{n} matrix, got {}",
            n * n,
            costs.len()
        )));
    }
    validate(costs)?;
    if n == 0 {
        return Ok(Assignment {
            row_to_col: Vec::new(),
            weight: 0.0,
        });
    }
    let cost = |r: usize, c: usize| LexCost::from_f64(costs[r * n + c]);

    // 1-based arrays; index 0 is the virtual root
    let mut u = vec![LexCost::ZERO; n + 1];
    let mut v = vec![LexCost::ZERO; n + 1];
    let mut col_owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![LexCost::TOP; n + 1];
    let mut used = vec![false; n + 1];

    for row in 1..=n {
        col_owner[0] = row;
        let mut j0 = 0;
        minv.fill(LexCost::TOP);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = LexCost::TOP;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_owner[j]] = u[col_owner[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        row_to_col[col_owner[j] - 1] = j - 1;
    }
    let total: LexCost = row_to_col.iter().enumerate().map(|(r, &c)| cost(r, c)).sum();
    if !total.is_finite() {
        return Err(Error::Infeasible(
            "every perfect matching uses a forbidden entry".into(),
        ));
    }
    let weight = row_to_col.iter().enumerate().map(|(r, &c)| costs[r * n + c]).sum();
    Ok(Assignment { row_to_col, weight })
}

/// Exact minimum perfect matching for a matrix with only two distinct
/// column types: the first `left` columns cost `a[r]` for row `r`, the rest
/// cost `b[r]`. Any matching pays `Σ b + Σ_{r → left} (a[r] - b[r])`, so the
/// optimum sends the `left` rows with smallest `a - b` to the left block
/// (ties by row index). Returns the left rows in increasing order.
pub fn two_block_assignment(a: &[f64], b: &[f64], left: usize) -> Result<(Vec<usize>, f64)> {
    if a.len() != b.len() || left > a.len() {
        return Err(Error::invalid("two-block matching dimensions do not agree"));
    }
    validate(a)?;
    validate(b)?;
    let mut order: Vec<(LexCost, usize)> = a
        .iter()
        .zip(b)
        .enumerate()
        .map(|(r, (&x, &y))| (LexCost::from_f64(x) - LexCost::from_f64(y), r))
        .collect();
    order.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("total order").then(x.1.cmp(&y.1)));
    let mut rows: Vec<usize> = order[..left].iter().map(|&(_, r)| r).collect();
    rows.sort_unstable();
    let mut in_left = vec![false; a.len()];
    for &r in &rows {
        in_left[r] = true;
    }
    let total: LexCost = (0..a.len())
        .map(|r| LexCost::from_f64(if in_left[r] { a[r] } else { b[r] }))
        .sum();
    if !total.is_finite() {
        return Err(Error::Infeasible(
            "every perfect matching uses a forbidden entry".into(),
        ));
    }
    let weight = (0..a.len()).map(|r| if in_left[r] { a[r] } else { b[r] }).sum();
    Ok((rows, weight))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for i in 0..=p.len() {
                let mut q = p.clone();
                q.insert(i, n - 1);
                out.push(q);
            }
        }
        out
    }

    fn brute_force(n: usize, costs: &[f64]) -> f64 {
        permutations(n)
            .iter()
            .map(|p| p.iter().enumerate().map(|(r, &c)| costs[r * n + c]).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn two_by_two() {
        let a = min_cost_assignment(2, &[1.0, 2.0, 3.0, 1.0]).unwrap();
        assert_eq!(a.weight, 2.0);
        assert_eq!(a.row_to_col, vec![0, 1]);
    }

    #[test]
    fn zero_diagonal() {
        let n = 5;
        let costs: Vec<f64> = (0..n * n).map(|i| if i / n == i % n { 0.0 } else { 1e6 }).collect();
        let a = min_cost_assignment(n, &costs).unwrap();
        assert_eq!(a.weight, 0.0);
        assert_eq!(a.row_to_col, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn infinities_are_avoided_when_possible() {
        let inf = f64::INFINITY;
        let a = min_cost_assignment(3, &[inf, 1.0, inf, 2.0, inf, inf, inf, inf, 3.0]).unwrap();
        assert_eq!(a.row_to_col, vec![1, 0, 2]);
        assert_eq!(a.weight, 6.0);
        let all_bad = [inf, inf, 1.0, inf];
        assert!(matches!(min_cost_assignment(2, &all_bad), Err(Error::Infeasible(_))));
    }

    #[test]
    fn six_by_six_against_permutations() {
        let mut state = 12345u64;
        for _ in 0..50 {
            let costs: Vec<f64> = (0..36)
                .map(|_| {
                    state = crate::rng::splitmix64(state);
                    crate::rng::unit(state) * 10.0
                })
                .collect();
            let a = min_cost_assignment(6, &costs).unwrap();
            assert!((a.weight - brute_force(6, &costs)).abs() <= 1e-12);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(min_cost_assignment(2, &[1.0]).is_err());
        assert!(min_cost_assignment(1, &[f64::NAN]).is_err());
    }

    proptest! {
        #[test]
        fn two_block_matches_hungarian(
            rows in proptest::collection::vec((0.0f64..5.0, 0.0f64..5.0, any::<bool>()), 1..8),
            left_frac in 0.0f64..=1.0,
        ) {
            let n = rows.len();
            let left = ((n as f64) * left_frac).floor() as usize;
            let a: Vec<f64> = rows.iter().map(|r| if r.2 && r.0 < 1.0 { f64::INFINITY } else { r.0 }).collect();
            let b: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let mut costs = vec![0.0; n * n];
            for r in 0..n {
                for c in 0..n {
                    costs[r * n + c] = if c < left { a[r] } else { b[r] };
                }
            }
            match (two_block_assignment(&a, &b, left), min_cost_assignment(n, &costs)) {
                (Ok((rows, w)), Ok(h)) => {
                    prop_assert_eq!(rows.len(), left);
                    prop_assert!((w - h.weight).abs() < 1e-9);
                }
                (Err(_), Err(_)) => {}
                (x, y) => prop_assert!(false, "solvers disagree: {:?} vs {:?}", x, y),
            }
        }
    }
}
