//! Matching-based effector detection on first influence distances.
//!
//! For every ordered anchor pair `(u, v)` of active nodes, a complete
//! bipartite graph between `X1` and `N1` slots is built: the first `B` slots
//! charge `λ(N1-B)·d(w, u)`, the remaining slots charge
//! `λB·d(v, w) + (1-λ)·d(w, X0)`. The `B` rows matched into the first block
//! of the minimum perfect matching form the candidate set, and the candidate
//! with the smallest `W(matching) + λB(N1-B)·d(u, v)` wins. The winner's
//! `g_1` is at most that selection score.

use rayon::prelude::*;

use crate::distance::DistanceTable;
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::matching::{min_cost_assignment, two_block_assignment};
use crate::result::{check_budget, Algorithm, EffectorResult};
use crate::state::ActivationState;

/// Default trade-off between reaching active nodes and avoiding inactive ones.
pub const DEFAULT_LAMBDA: f64 = 0.5;

/// `c · x` with `0 · ∞ = 0`, so a zero weight switches a term off entirely.
#[inline]
pub(crate) fn scaled(c: f64, x: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c * x
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid(format!("lambda {lambda} outside [0, 1]")));
    }
    Ok(())
}

/// Checks that `table` holds every pair the objective can touch.
pub(crate) fn check_table(state: &ActivationState, table: &DistanceTable) -> Result<()> {
    let x1 = state.active().members();
    let probe = x1
        .iter()
        .flat_map(|&u| x1.iter().chain(state.inactive().members()).map(move |&v| (u, v)));
    for (u, v) in probe {
        if !table.covers(u, v) {
            return Err(Error::invalid(format!(
                "distance table is missing the pair ({u}, {v}); build it from X1 to all nodes"
            )));
        }
    }
    Ok(())
}

fn check_members(state: &ActivationState, set: &[NodeId]) -> Result<Vec<bool>> {
    let mut mask = vec![false; state.len()];
    for &u in set {
        if u >= state.len() || !state.is_active(u) {
            return Err(Error::invalid(format!("node {u} is not active")));
        }
        if std::mem::replace(&mut mask[u], true) {
            return Err(Error::invalid(format!("node {u} listed twice")));
        }
    }
    Ok(mask)
}

/// `g_k(S) = λ·d(S, X1∖S) + (1-λ)·d(X1∖S, X0)`, with `k` taken from the table.
pub fn objective(state: &ActivationState, set: &[NodeId], lambda: f64, table: &DistanceTable) -> Result<f64> {
    check_lambda(lambda)?;
    let in_set = check_members(state, set)?;
    let rest: Vec<NodeId> = state.active().iter().filter(|&u| !in_set[u]).collect();
    let spread = table.set_to_set(set, &rest);
    let leak = table.set_to_set(&rest, state.inactive().members());
    Ok(scaled(lambda, spread) + scaled(1.0 - lambda, leak))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MatchingSolver {
    /// General Hungarian algorithm on the materialised `N1 × N1` matrix.
    Hungarian,
    /// Exact solver exploiting that the matrix has two column types.
    #[default]
    TwoBlock,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteInstance {
    pub anchor_u: NodeId,
    pub anchor_v: NodeId,
    pub budget: usize,
    pub lambda: f64,
    /// Row order: the active nodes, ascending.
    pub rows: Vec<NodeId>,
    /// Cost of each row in any of the first `budget` columns.
    pub left_cost: Vec<f64>,
    /// Cost of each row in any of the remaining columns.
    pub right_cost: Vec<f64>,
    /// `d^1(anchor_u, anchor_v)`.
    pub anchor_distance: f64,
}

impl BipartiteInstance {
    pub fn size(&self) -> usize {
        self.rows.len()
    }

    /// Weight between row `r` and column `c` (0-based).
    pub fn weight(&self, r: usize, c: usize) -> f64 {
        if c < self.budget {
            self.left_cost[r]
        } else {
            self.right_cost[r]
        }
    }

    /// Row-major `N1 × N1` weight matrix.
    pub fn matrix(&self) -> Vec<f64> {
        let n = self.size();
        (0..n * n).map(|i| self.weight(i / n, i % n)).collect()
    }

    fn anchor_term(&self) -> f64 {
        let n1 = self.size() as f64;
        let b = self.budget as f64;
        scaled(self.lambda * b * (n1 - b), self.anchor_distance)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchingResult {
    /// Column assigned to each row.
    pub assignment: Vec<usize>,
    /// Rows (as nodes) assigned to the first `budget` columns.
    pub matched_set: Vec<NodeId>,
    pub weight: f64,
    /// `weight + λB(N1-B)·d(u, v)`.
    pub selection_score: f64,
}

/// Per-state quantities shared by all anchor pairs.
struct Context<'a> {
    rows: &'a [NodeId],
    to_inactive: Vec<f64>,
    table: &'a DistanceTable,
    budget: usize,
    lambda: f64,
}

impl<'a> Context<'a> {
    fn new(state: &'a ActivationState, budget: usize, lambda: f64, table: &'a DistanceTable) -> Self {
        let inactive = state.inactive().members();
        let rows = state.active().members();
        let to_inactive = rows.iter().map(|&w| table.node_to_set(w, inactive)).collect();
        Context {
            rows,
            to_inactive,
            table,
            budget,
            lambda,
        }
    }

    fn instance(&self, u: NodeId, v: NodeId) -> BipartiteInstance {
        let n1 = self.rows.len() as f64;
        let b = self.budget as f64;
        let lambda = self.lambda;
        let left_cost = self
            .rows
            .iter()
            .map(|&w| scaled(lambda * (n1 - b), self.table.d(w, u)))
            .collect();
        let right_cost = self
            .rows
            .iter()
            .zip(&self.to_inactive)
            .map(|(&w, &out)| scaled(lambda * b, self.table.d(v, w)) + scaled(1.0 - lambda, out))
            .collect();
        BipartiteInstance {
            anchor_u: u,
            anchor_v: v,
            budget: self.budget,
            lambda,
            rows: self.rows.to_vec(),
            left_cost,
            right_cost,
            anchor_distance: self.table.d(u, v),
        }
    }
}

fn check_instance_args(state: &ActivationState, budget: usize, lambda: f64) -> Result<()> {
    check_lambda(lambda)?;
    let n1 = state.active_count();
    if budget == 0 || budget >= n1 {
        return Err(Error::invalid(format!(
            "bipartite construction needs 1 <= B < N1, got B = {budget}, N1 = {n1}"
        )));
    }
    Ok(())
}

pub fn build_bipartite(
    state: &ActivationState,
    u: NodeId,
    v: NodeId,
    budget: usize,
    lambda: f64,
    table: &DistanceTable,
) -> Result<BipartiteInstance> {
    check_instance_args(state, budget, lambda)?;
    for a in [u, v] {
        if a >= state.len() || !state.is_active(a) {
            return Err(Error::invalid(format!("anchor {a} is not active")));
        }
    }
    check_table(state, table)?;
    Ok(Context::new(state, budget, lambda, table).instance(u, v))
}

fn finish(inst: &BipartiteInstance, assignment: Vec<usize>, weight: f64) -> MatchingResult {
    let matched_set = assignment
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c < inst.budget)
        .map(|(r, _)| inst.rows[r])
        .collect();
    MatchingResult {
        assignment,
        matched_set,
        weight,
        selection_score: weight + inst.anchor_term(),
    }
}

/// Minimum perfect matching of the instance with the Hungarian algorithm.
pub fn min_perfect_matching(inst: &BipartiteInstance) -> Result<MatchingResult> {
    let a = min_cost_assignment(inst.size(), &inst.matrix())?;
    Ok(finish(inst, a.row_to_col, a.weight))
}

/// Same optimum as [`min_perfect_matching`] in `O(N1 log N1)`.
pub fn min_perfect_matching_two_block(inst: &BipartiteInstance) -> Result<MatchingResult> {
    let (left_rows, weight) = two_block_assignment(&inst.left_cost, &inst.right_cost, inst.budget)?;
    let mut assignment = vec![usize::MAX; inst.size()];
    let mut next_left = 0;
    let mut next_right = inst.budget;
    let mut is_left = vec![false; inst.size()];
    for &r in &left_rows {
        is_left[r] = true;
    }
    for (r, slot) in assignment.iter_mut().enumerate() {
        if is_left[r] {
            *slot = next_left;
            next_left += 1;
        } else {
            *slot = next_right;
            next_right += 1;
        }
    }
    Ok(finish(inst, assignment, weight))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MbedOptions {
    pub lambda: f64,
    pub solver: MatchingSolver,
}

impl Default for MbedOptions {
    fn default() -> Self {
        MbedOptions {
            lambda: DEFAULT_LAMBDA,
            solver: MatchingSolver::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MbedOutcome {
    pub result: EffectorResult,
    /// Winning anchor pair, absent for `B = N1` and for the fallback.
    pub anchors: Option<(NodeId, NodeId)>,
    pub matching: Option<MatchingResult>,
}

/// MBED with default options. The score of the result is `g_1(S)`.
pub fn mbed(state: &ActivationState, budget: usize, lambda: f64, table: &DistanceTable) -> Result<EffectorResult> {
    let opts = MbedOptions {
        lambda,
        ..MbedOptions::default()
    };
    mbed_with(state, budget, opts, table).map(|o| o.result)
}

pub fn mbed_with(
    state: &ActivationState,
    budget: usize,
    opts: MbedOptions,
    table: &DistanceTable,
) -> Result<MbedOutcome> {
    check_budget(state, budget)?;
    check_lambda(opts.lambda)?;
    if table.k() != 1 {
        return Err(Error::invalid("MBED works on first influence distances (k = 1)"));
    }
    check_table(state, table)?;
    let x1 = state.active().members();
    if budget == x1.len() {
        return Ok(MbedOutcome {
            result: EffectorResult::new(x1.to_vec(), Algorithm::Mbed, 0.0),
            anchors: None,
            matching: None,
        });
    }

    let ctx = Context::new(state, budget, opts.lambda, table);
    let solve = |inst: &BipartiteInstance| match opts.solver {
        MatchingSolver::Hungarian => min_perfect_matching(inst),
        MatchingSolver::TwoBlock => min_perfect_matching_two_block(inst),
    };

    // best candidate per first anchor, then a sequential reduction so the
    // (u, v) tie-break does not depend on scheduling
    let per_anchor: Vec<Option<(NodeId, NodeId, MatchingResult)>> = x1
        .par_iter()
        .map(|&u| {
            let mut best: Option<(NodeId, NodeId, MatchingResult)> = None;
            for &v in x1.iter().filter(|&&v| v != u) {
                let inst = ctx.instance(u, v);
                if inst.anchor_term() == f64::INFINITY {
                    continue;
                }
                let Ok(m) = solve(&inst) else { continue };
                if best
                    .as_ref()
                    .is_none_or(|(_, _, b)| m.selection_score < b.selection_score)
                {
                    best = Some((u, v, m));
                }
            }
            best
        })
        .collect();
    let best = per_anchor.into_iter().flatten().reduce(|a, b| {
        if b.2.selection_score < a.2.selection_score {
            b
        } else {
            a
        }
    });

    match best {
        Some((u, v, m)) => {
            let score = objective(state, &m.matched_set, opts.lambda, table)?;
            Ok(MbedOutcome {
                result: EffectorResult::new(m.matched_set.clone(), Algorithm::Mbed, score),
                anchors: Some((u, v)),
                matching: Some(m),
            })
        }
        None => {
            log::warn!("no anchor pair admits a finite matching; falling back to row sums");
            let mut ranked: Vec<(f64, NodeId)> = x1.iter().map(|&w| (table.node_to_set(w, x1), w)).collect();
            ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let members: Vec<NodeId> = ranked[..budget].iter().map(|&(_, w)| w).collect();
            let score = objective(state, &members, opts.lambda, table)?;
            Ok(MbedOutcome {
                result: EffectorResult::new(members, Algorithm::Mbed, score)
                    .with_note("fallback: no finite anchor pair"),
                anchors: None,
                matching: None,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::distance_table;
    use crate::graph::IcNetwork;

    fn table_for(net: &IcNetwork, state: &ActivationState, k: usize) -> DistanceTable {
        let all: Vec<NodeId> = (0..net.node_count()).collect();
        distance_table(net, state.active().members(), &all, k).unwrap()
    }

    /// d(0,1) = 1, d(1,2) = 2, 0 -> 2 via 1 = 3; 2 -> 3 inactive at 0.5
    fn chain() -> (IcNetwork, ActivationState) {
        let p = |d: f64| (-d).exp();
        let net = IcNetwork::new(4, [(0, 1, p(1.0)), (1, 2, p(2.0)), (2, 3, p(0.5))]).unwrap();
        let state = ActivationState::from_active(4, [0, 1, 2]).unwrap();
        (net, state)
    }

    #[test]
    fn objective_by_hand() {
        let (net, state) = chain();
        let t = table_for(&net, &state, 1);
        // S = {0}: spread = d(0,1) + d(0,2) = 1 + 3; leak = d(1,3) + d(2,3) = 2.5 + 0.5
        let g = objective(&state, &[0], 0.5, &t).unwrap();
        assert!((g - (0.5 * 4.0 + 0.5 * 3.0)).abs() < 1e-9);
        assert!((objective(&state, &[0], 1.0, &t).unwrap() - 4.0).abs() < 1e-9);
        assert_eq!(objective(&state, &[0, 1, 2], 0.5, &t).unwrap(), 0.0);
        assert!(objective(&state, &[3], 0.5, &t).is_err());
    }

    #[test]
    fn bipartite_entries_by_hand() {
        let (net, state) = chain();
        let t = table_for(&net, &state, 1);
        let inst = build_bipartite(&state, 1, 0, 1, 0.5, &t).unwrap();
        // rows 0, 1, 2; left = λ(N1-B) d(w, u=1) = 1.0 * d(w, 1)
        assert!((inst.left_cost[0] - 1.0).abs() < 1e-9);
        assert_eq!(inst.left_cost[1], 0.0);
        assert_eq!(inst.left_cost[2], f64::INFINITY);
        // right = λB d(v=0, w) + (1-λ) d(w, X0)
        assert!((inst.right_cost[0] - (0.0 + 0.5 * 3.5)).abs() < 1e-9);
        assert!((inst.right_cost[1] - (0.5 * 1.0 + 0.5 * 2.5)).abs() < 1e-9);
        assert!((inst.right_cost[2] - (0.5 * 3.0 + 0.5 * 0.5)).abs() < 1e-9);
        assert!(build_bipartite(&state, 1, 0, 3, 0.5, &t).is_err());
        assert!(build_bipartite(&state, 3, 0, 1, 0.5, &t).is_err());
    }

    #[test]
    fn lambda_zero_left_block_vanishes() {
        let (net, state) = chain();
        let t = table_for(&net, &state, 1);
        let inst = build_bipartite(&state, 2, 0, 1, 0.0, &t).unwrap();
        assert!(inst.left_cost.iter().all(|&c| c == 0.0));
        assert!((inst.right_cost[2] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn solvers_agree_and_score_identity_holds() {
        let (net, state) = chain();
        let t = table_for(&net, &state, 1);
        for (u, v) in [(0, 1), (1, 0), (0, 2), (2, 1)] {
            let inst = build_bipartite(&state, u, v, 1, 0.5, &t).unwrap();
            let h = min_perfect_matching(&inst);
            let b = min_perfect_matching_two_block(&inst);
            match (h, b) {
                (Ok(h), Ok(b)) => {
                    assert!((h.weight - b.weight).abs() < 1e-12);
                    assert!(
                        h.selection_score == b.selection_score || (h.selection_score - b.selection_score).abs() < 1e-12
                    );
                    assert!(b.selection_score >= b.weight);
                }
                (Err(_), Err(_)) => {}
                other => panic!("solvers disagree: {other:?}"),
            }
        }
    }

    #[test]
    fn full_budget_returns_all_active() {
        let (net, state) = chain();
        let t = table_for(&net, &state, 1);
        let r = mbed(&state, 3, 0.5, &t).unwrap();
        assert_eq!(r.members, vec![0, 1, 2]);
        assert_eq!(r.score, 0.0);
        assert!(mbed(&state, 4, 0.5, &t).is_err());
        assert!(mbed(&state, 0, 0.5, &t).is_err());
    }

    #[test]
    fn certain_hub_is_chosen_when_lambda_is_one() {
        // hub 0 reaches 1..4 with probability 1; 1..4 reach each other weakly
        let mut edges = vec![(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0), (0, 4, 1.0)];
        for u in 1..5 {
            for v in 1..5 {
                if u != v {
                    edges.push((u, v, 0.3));
                }
            }
            edges.push((u, 0, 0.3));
        }
        let net = IcNetwork::new(5, edges).unwrap();
        let state = ActivationState::from_active(5, 0..5).unwrap();
        let t = table_for(&net, &state, 1);
        let r = mbed(&state, 1, 1.0, &t).unwrap();
        assert_eq!(r.members, vec![0]);
        assert_eq!(r.score, 0.0);
    }

    #[test]
    fn rejects_higher_order_table() {
        let (net, state) = chain();
        let t = table_for(&net, &state, 2);
        assert!(mbed(&state, 1, 0.5, &t).is_err());
    }

    #[test]
    fn fallback_when_no_pair_is_finite() {
        // two active nodes with no path between them in either direction
        let net = IcNetwork::new(3, [(0, 2, 0.5)]).unwrap();
        let state = ActivationState::from_active(3, [0, 1]).unwrap();
        let t = table_for(&net, &state, 1);
        let out = mbed_with(&state, 1, MbedOptions::default(), &t).unwrap();
        assert!(out.anchors.is_none());
        assert!(out.result.note.is_some());
        assert_eq!(out.result.members.len(), 1);
    }
}
