//! Clustering games: documents are players choosing among `k` cluster
//! strategies, payoffs reward agreeing with similar neighbors, and discrete
//! replicator dynamics drives the population to a Nash equilibrium.
//!
//! Labeled players are immutable one-hot anchors; unlabeled players start at
//! the uniform mixed strategy. With the identity payoff between strategies,
//! player `i`'s payoff for pure strategy `h` is the weighted mass its
//! neighbors put on `h`: `u_i(e_h) = sum_j g_ij x_j[h]`, where labeled
//! neighbors of class `h` contribute their full edge weight.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dominant::{cluster_similarity, SeedClustering};
use crate::error::{Error, Result};
use crate::graph::{GraphKind, SimilarityGraph};

/// Strategy-mass cutoff that counts as "in the support" for equilibrium
/// residual checks.
pub const SUPPORT_CUTOFF: f64 = 1e-6;

/// Lower bound kept under every updated strategy mass. Exact zero is
/// absorbing for the multiplicative update, so f64 underflow could
/// extinguish a strategy that the exact dynamics would later revive once
/// co-players make it profitable again. The floor is 24 orders below
/// [`SUPPORT_CUTOFF`] and contributes nothing to payoffs or argmax, but a
/// profitable strategy can climb back from it.
pub const STRATEGY_MASS_FLOOR: f64 = 1e-30;

/// Equilibrium residual tolerance is this factor times the step tolerance.
pub const NASH_TOL_FACTOR: f64 = 10.0;

/// Self-preference mass used to initialize merge games where every seed
/// starts as its own class; the remainder spreads uniformly so strategies
/// can still migrate.
pub const MERGE_SELF_BIAS: f64 = 0.9;

/// Which player holds which fixed class, if any.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerPartition {
    k: usize,
    labels: Vec<Option<usize>>,
}

impl PlayerPartition {
    /// Builds a partition over `labels.len()` players with `k` strategies.
    /// Every labeled class must be below `k`.
    pub fn new(labels: Vec<Option<usize>>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::NoStrategies);
        }
        for l in labels.iter().flatten() {
            if *l >= k {
                return Err(Error::ClassOutOfRange { class: *l, k });
            }
        }
        Ok(Self { k, labels })
    }

    pub fn all_unlabeled(n: usize, k: usize) -> Result<Self> {
        Self::new(vec![None; n], k)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn label(&self, player: usize) -> Option<usize> {
        self.labels[player]
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn unlabeled_indices(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.labels[i].is_none()).collect()
    }

    pub fn labeled_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }
}

/// Row-stochastic matrix of mixed strategies, one row per player.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategySpace {
    x: DMatrix<f64>,
}

impl StrategySpace {
    /// Standard initialization: labeled players sit on their class vertex,
    /// unlabeled players at the barycenter `1/k`.
    pub fn init(p: &PlayerPartition) -> Self {
        let n = p.n();
        let k = p.k();
        let mut x = DMatrix::from_element(n, k, 0.0);
        for i in 0..n {
            match p.label(i) {
                Some(h) => x[(i, h)] = 1.0,
                None => {
                    for h in 0..k {
                        x[(i, h)] = 1.0 / k as f64;
                    }
                }
            }
        }
        Self { x }
    }

    /// Wraps an explicit strategy matrix, validating shape, nonnegativity,
    /// row sums within `1e-9` of one, and one-hot rows for labeled players.
    pub fn from_matrix(x: DMatrix<f64>, p: &PlayerPartition) -> Result<Self> {
        if x.nrows() != p.n() || x.ncols() != p.k() {
            return Err(Error::StrategyShapeMismatch {
                rows: x.nrows(),
                cols: x.ncols(),
                expected_rows: p.n(),
                expected_cols: p.k(),
            });
        }
        for i in 0..x.nrows() {
            let mut sum = 0.0;
            for h in 0..x.ncols() {
                assert!(x[(i, h)] >= 0.0, "strategy mass must be nonnegative");
                sum += x[(i, h)];
            }
            assert!((sum - 1.0).abs() <= 1e-9, "row {i} must sum to 1, got {sum}");
            if let Some(h) = p.label(i) {
                assert!(x[(i, h)] == 1.0, "labeled row {i} must be one-hot on class {h}");
            }
        }
        Ok(Self { x })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    /// Hard assignment by row argmax; ties go to the lowest class index.
    /// Also reports how many rows had an exact tie at the max.
    pub fn assignment(&self) -> (Vec<usize>, usize) {
        let mut out = Vec::with_capacity(self.n());
        let mut ties = 0;
        for i in 0..self.n() {
            let mut best = 0usize;
            let mut tied = false;
            for h in 1..self.k() {
                if self.x[(i, h)] > self.x[(i, best)] {
                    best = h;
                    tied = false;
                } else if self.x[(i, h)] == self.x[(i, best)] {
                    tied = true;
                }
            }
            if tied {
                ties += 1;
            }
            out.push(best);
        }
        (out, ties)
    }
}

/// Extension points are spelled out as single-variant enums so configs and
/// reports name the conventions in force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum TieBreak {
    #[default]
    LowestIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum PayoffKind {
    /// Players only profit from neighbors choosing the same strategy.
    #[default]
    Identity,
}

/// Replicator loop parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    /// Convergence threshold on the max per-row L1 strategy change.
    pub tol: f64,
    pub max_iters: usize,
    pub tie_break: TieBreak,
    pub payoff_kind: PayoffKind,
    /// Record the mean unlabeled payoff at every iteration.
    pub record_payoff_trace: bool,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iters: 5000,
            tie_break: TieBreak::default(),
            payoff_kind: PayoffKind::default(),
            record_payoff_trace: false,
        }
    }
}

/// Outcome of a clustering game.
#[derive(Debug, Clone)]
pub struct GameResult {
    /// Final class per player; labeled players echo their class.
    pub assignment: Vec<usize>,
    pub strategies: StrategySpace,
    pub iterations: usize,
    pub converged: bool,
    /// Rows whose argmax was tied (broken toward the lowest index).
    pub tie_count: usize,
    /// Unlabeled players with zero incident weight; their rows never move.
    pub isolated_players: Vec<usize>,
    /// Mean unlabeled payoff per iteration, when recording was requested.
    pub payoff_trace: Option<Vec<f64>>,
}

/// Payoff of pure strategy `h` for player `i` at state `x`.
///
/// With identity payoffs and a one-hot labeled row for each anchor, the
/// matrix product `G * X` yields every pure-strategy payoff at once; this
/// scalar version exists for checks and diagnostics.
pub fn payoff_pure(g: &SimilarityGraph, x: &StrategySpace, i: usize, h: usize) -> f64 {
    let w = g.weights();
    (0..x.n()).map(|j| w[(i, j)] * x.matrix()[(j, h)]).sum()
}

/// Expected payoff of player `i`'s own mixed strategy at state `x`.
pub fn payoff_mixed(g: &SimilarityGraph, x: &StrategySpace, i: usize) -> f64 {
    (0..x.k()).map(|h| x.matrix()[(i, h)] * payoff_pure(g, x, i, h)).sum()
}

/// One synchronous replicator step. Labeled rows are copied unchanged;
/// unlabeled rows scale each strategy by its payoff over the row average,
/// clamped below by [`STRATEGY_MASS_FLOOR`] so underflow never makes a
/// strategy permanently extinct. Rows with zero average payoff freeze.
/// Returns the new state and the maximum per-row L1 change.
pub fn replicator_step(
    g: &SimilarityGraph,
    p: &PlayerPartition,
    x: &StrategySpace,
) -> (StrategySpace, f64) {
    let (next, max_l1, _) = step_inner(g, p, x);
    (next, max_l1)
}

/// Step plus the mean unlabeled payoff at the pre-step state.
fn step_inner(
    g: &SimilarityGraph,
    p: &PlayerPartition,
    x: &StrategySpace,
) -> (StrategySpace, f64, f64) {
    let n = x.n();
    let k = x.k();
    let payoffs = g.weights() * x.matrix();
    let mut next = x.matrix().clone();
    let mut max_l1 = 0.0f64;
    let mut payoff_sum = 0.0;
    let mut unlabeled = 0usize;
    for i in 0..n {
        if p.label(i).is_some() {
            continue;
        }
        unlabeled += 1;
        let mut avg = 0.0;
        for h in 0..k {
            avg += x.matrix()[(i, h)] * payoffs[(i, h)];
        }
        payoff_sum += avg;
        if avg == 0.0 {
            continue;
        }
        let mut l1 = 0.0;
        for h in 0..k {
            let v = (x.matrix()[(i, h)] * payoffs[(i, h)] / avg).max(STRATEGY_MASS_FLOOR);
            l1 += (v - x.matrix()[(i, h)]).abs();
            next[(i, h)] = v;
        }
        max_l1 = max_l1.max(l1);
    }
    let mean = if unlabeled == 0 { 0.0 } else { payoff_sum / unlabeled as f64 };
    (StrategySpace { x: next }, max_l1, mean)
}

/// True when every unlabeled row satisfies the equilibrium conditions within
/// tolerance: supported strategies pay within `nash_tol` of the row average,
/// unsupported ones pay at most the average plus `nash_tol`.
fn equilibrium_residual_ok(
    g: &SimilarityGraph,
    p: &PlayerPartition,
    x: &StrategySpace,
    nash_tol: f64,
) -> bool {
    let payoffs = g.weights() * x.matrix();
    for i in 0..x.n() {
        if p.label(i).is_some() {
            continue;
        }
        let mut avg = 0.0;
        for h in 0..x.k() {
            avg += x.matrix()[(i, h)] * payoffs[(i, h)];
        }
        for h in 0..x.k() {
            let u = payoffs[(i, h)];
            if x.matrix()[(i, h)] > SUPPORT_CUTOFF {
                if (u - avg).abs() > nash_tol {
                    return false;
                }
            } else if u > avg + nash_tol {
                return false;
            }
        }
    }
    true
}

/// Runs the game from the standard initialization.
pub fn run_games(
    g: &SimilarityGraph,
    p: &PlayerPartition,
    cfg: &GameConfig,
) -> Result<GameResult> {
    run_games_from(g, p, StrategySpace::init(p), cfg)
}

/// Runs the game from an explicit starting state.
///
/// Iteration stops when a step moves no row by more than `tol` in L1 norm
/// *and* the equilibrium residual holds at the new state; requiring the
/// residual stops a slowly dying strategy from being mistaken for converged
/// while it still carries visible mass.
pub fn run_games_from(
    g: &SimilarityGraph,
    p: &PlayerPartition,
    x0: StrategySpace,
    cfg: &GameConfig,
) -> Result<GameResult> {
    if g.n() != p.n() {
        return Err(Error::PlayerCountMismatch { graph_n: g.n(), partition_n: p.n() });
    }
    if x0.n() != p.n() || x0.k() != p.k() {
        return Err(Error::StrategyShapeMismatch {
            rows: x0.n(),
            cols: x0.k(),
            expected_rows: p.n(),
            expected_cols: p.k(),
        });
    }
    let isolated: Vec<usize> = g
        .isolated_nodes()
        .into_iter()
        .filter(|&i| p.label(i).is_none())
        .collect();
    let mut trace = cfg.record_payoff_trace.then(Vec::new);

    let mut x = x0;
    let mut iterations = 0;
    let mut converged = p.unlabeled_indices().is_empty();
    let nash_tol = NASH_TOL_FACTOR * cfg.tol;
    if !converged {
        for it in 0..cfg.max_iters {
            let (next, max_l1, mean_payoff) = step_inner(g, p, &x);
            if let Some(t) = trace.as_mut() {
                t.push(mean_payoff);
            }
            x = next;
            iterations = it + 1;
            if max_l1 < cfg.tol && equilibrium_residual_ok(g, p, &x, nash_tol) {
                converged = true;
                break;
            }
        }
    }
    let (mut assignment, tie_count) = x.assignment();
    for (slot, lab) in assignment.iter_mut().zip(p.labels()) {
        if let Some(h) = lab {
            *slot = *h;
        }
    }
    Ok(GameResult {
        assignment,
        strategies: x,
        iterations,
        converged,
        tie_count,
        isolated_players: isolated,
        payoff_trace: trace,
    })
}

/// Result of merging seed clusters through a meta-game.
#[derive(Debug, Clone)]
pub struct ClusterMergeResult {
    pub meta: GameResult,
    /// Final class of every document, contiguous in `0..k`.
    pub doc_assignment: Vec<usize>,
    /// Number of classes after merging.
    pub k: usize,
}

/// Plays a clustering game between whole seed clusters to merge an
/// over-segmented clustering.
///
/// Meta-edge weights are the size-scaled cross-cluster similarity sums taken
/// from `s`. With `k_target` given, the `k_target` largest seeds become
/// labeled anchors of their own class and the rest join them. With no
/// target, every seed starts self-preferring but movable, and the surviving
/// distinct strategies define the discovered classes: a strict one-hot start
/// would be a replicator fixed point (and an immutable anchor could never
/// move), so self-preference is softened to [`MERGE_SELF_BIAS`].
pub fn cluster_the_clusters(
    seeds: &SeedClustering,
    s: &SimilarityGraph,
    k_target: Option<usize>,
    cfg: &GameConfig,
    n_docs: usize,
) -> Result<ClusterMergeResult> {
    let m = seeds.clusters.len();
    if m == 0 {
        return Err(Error::NoSeeds);
    }
    if !seeds.residual.is_empty() {
        return Err(Error::ResidualDocuments { count: seeds.residual.len() });
    }
    let covered = seeds.covered();
    if covered != n_docs {
        return Err(Error::ResidualDocuments { count: n_docs.abs_diff(covered) });
    }

    let mut meta_w = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in (a + 1)..m {
            let v = cluster_similarity(&seeds.clusters[a].members, &seeds.clusters[b].members, s);
            meta_w[(a, b)] = v;
            meta_w[(b, a)] = v;
        }
    }
    let meta_graph = SimilarityGraph::from_weights(meta_w, GraphKind::Kernel)?;

    let (meta, k) = match k_target {
        Some(k) => {
            if k == 0 {
                return Err(Error::NoStrategies);
            }
            if k > m {
                return Err(Error::TooFewSeeds { requested: k, found: m });
            }
            // rank seeds by size, largest first, ties to the lower index
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| {
                seeds.clusters[b]
                    .members
                    .len()
                    .cmp(&seeds.clusters[a].members.len())
                    .then(a.cmp(&b))
            });
            let mut labels = vec![None; m];
            for (class, &seed) in order.iter().take(k).enumerate() {
                labels[seed] = Some(class);
            }
            let p = PlayerPartition::new(labels, k)?;
            (run_games(&meta_graph, &p, cfg)?, k)
        }
        None => {
            let p = PlayerPartition::all_unlabeled(m, m)?;
            let mut x = DMatrix::from_element(m, m, (1.0 - MERGE_SELF_BIAS) / m as f64);
            for i in 0..m {
                x[(i, i)] += MERGE_SELF_BIAS;
            }
            let x0 = StrategySpace::from_matrix(x, &p)?;
            let result = run_games_from(&meta_graph, &p, x0, cfg)?;
            (result, m)
        }
    };

    // renumber surviving strategies contiguously by first appearance
    let mut class_map = vec![usize::MAX; k.max(m)];
    let mut next_class = 0usize;
    let mut seed_class = Vec::with_capacity(m);
    for &a in &meta.assignment {
        if class_map[a] == usize::MAX {
            class_map[a] = next_class;
            next_class += 1;
        }
        seed_class.push(class_map[a]);
    }

    let mut doc_assignment = vec![usize::MAX; n_docs];
    for (seed, cluster) in seeds.clusters.iter().enumerate() {
        for &d in &cluster.members {
            doc_assignment[d] = seed_class[seed];
        }
    }
    debug_assert!(doc_assignment.iter().all(|&c| c != usize::MAX));
    Ok(ClusterMergeResult { meta, doc_assignment, k: next_class })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dominant::{peel_off, DominantSetConfig, StopRule};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn graph_from(n: usize, edges: &[(usize, usize, f64)]) -> SimilarityGraph {
        let mut m = DMatrix::zeros(n, n);
        for &(i, j, w) in edges {
            m[(i, j)] = w;
            m[(j, i)] = w;
        }
        SimilarityGraph::from_weights(m, GraphKind::Kernel).unwrap()
    }

    #[test]
    fn init_puts_labeled_on_vertices_and_rest_at_barycenter() {
        let p = PlayerPartition::new(vec![Some(1), None, Some(0)], 3).unwrap();
        let x = StrategySpace::init(&p);
        assert_eq!(x.matrix()[(0, 1)], 1.0);
        assert_eq!(x.matrix()[(0, 0)], 0.0);
        for h in 0..3 {
            assert_abs_diff_eq!(x.matrix()[(1, h)], 1.0 / 3.0, epsilon = 1e-15);
        }
        assert_eq!(x.matrix()[(2, 0)], 1.0);
    }

    #[test]
    fn partition_rejects_bad_classes() {
        assert!(matches!(
            PlayerPartition::new(vec![Some(2)], 2),
            Err(Error::ClassOutOfRange { class: 2, k: 2 })
        ));
        assert!(matches!(PlayerPartition::new(vec![None], 0), Err(Error::NoStrategies)));
    }

    #[test]
    fn replicator_step_matches_hand_computation() {
        // single unlabeled player between two labeled anchors:
        // u(e_0) = 2, u(e_1) = 1, mixed payoff at (1/2, 1/2) is 3/2,
        // so one step moves the row to (2/3, 1/3).
        let g = graph_from(3, &[(0, 1, 2.0), (0, 2, 1.0)]);
        let p = PlayerPartition::new(vec![None, Some(0), Some(1)], 2).unwrap();
        let x = StrategySpace::init(&p);
        assert_abs_diff_eq!(payoff_pure(&g, &x, 0, 0), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(payoff_pure(&g, &x, 0, 1), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(payoff_mixed(&g, &x, 0), 1.5, epsilon = 1e-15);
        let (next, l1) = replicator_step(&g, &p, &x);
        assert_abs_diff_eq!(next.matrix()[(0, 0)], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(next.matrix()[(0, 1)], 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l1, 2.0 / 6.0, epsilon = 1e-12);
        // labeled rows do not move
        assert_eq!(next.matrix()[(1, 0)], 1.0);
        assert_eq!(next.matrix()[(2, 1)], 1.0);
    }

    #[test]
    fn single_anchor_pulls_neighbor_to_its_class() {
        let g = graph_from(2, &[(0, 1, 1.0)]);
        let p = PlayerPartition::new(vec![Some(0), None], 2).unwrap();
        let r = run_games(&g, &p, &GameConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.assignment, vec![0, 0]);
        assert_abs_diff_eq!(r.strategies.matrix()[(1, 0)], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn all_labeled_game_echoes_labels_in_zero_iterations() {
        let g = graph_from(2, &[(0, 1, 1.0)]);
        let p = PlayerPartition::new(vec![Some(1), Some(0)], 2).unwrap();
        let r = run_games(&g, &p, &GameConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.assignment, vec![1, 0]);
    }

    #[test]
    fn zero_payoff_rows_freeze_and_are_flagged() {
        // player 2 has no edges at all
        let g = graph_from(3, &[(0, 1, 1.0)]);
        let p = PlayerPartition::new(vec![Some(0), None, None], 2).unwrap();
        let r = run_games(&g, &p, &GameConfig::default()).unwrap();
        assert_eq!(r.isolated_players, vec![2]);
        for h in 0..2 {
            assert_abs_diff_eq!(r.strategies.matrix()[(2, h)], 0.5, epsilon = 1e-15);
        }
        // frozen uniform row ties at the argmax and breaks to class 0
        assert_eq!(r.assignment[2], 0);
        assert!(r.tie_count >= 1);
    }

    #[test]
    fn competing_anchors_split_a_path() {
        // 0 and 3 anchor opposite classes; 1 leans to 0, 2 leans to 3
        let g = graph_from(
            4,
            &[(0, 1, 1.0), (1, 2, 0.2), (2, 3, 1.0)],
        );
        let p = PlayerPartition::new(vec![Some(0), None, None, Some(1)], 2).unwrap();
        let r = run_games(&g, &p, &GameConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.assignment, vec![0, 0, 1, 1]);
    }

    #[test]
    fn equilibrium_satisfies_nash_conditions() {
        let g = graph_from(
            5,
            &[(0, 1, 0.9), (1, 2, 0.4), (2, 3, 0.7), (3, 4, 0.8), (0, 2, 0.3)],
        );
        let p = PlayerPartition::new(vec![Some(0), None, None, None, Some(1)], 2).unwrap();
        let cfg = GameConfig::default();
        let r = run_games(&g, &p, &cfg).unwrap();
        assert!(r.converged);
        assert!(equilibrium_residual_ok(&g, &p, &r.strategies, NASH_TOL_FACTOR * cfg.tol));
    }

    #[test]
    fn partnership_potential_is_monotone_under_steps() {
        // with symmetric weights the quadratic form over all players differs
        // from the game potential only by the constant labeled-labeled part,
        // so it must climb along the dynamics
        let g = graph_from(
            6,
            &[
                (0, 1, 0.9),
                (1, 2, 0.8),
                (3, 4, 0.7),
                (4, 5, 0.9),
                (2, 3, 0.1),
                (0, 2, 0.5),
                (3, 5, 0.6),
            ],
        );
        let p = PlayerPartition::new(vec![Some(0), None, None, None, None, Some(1)], 2).unwrap();
        let potential = |x: &StrategySpace| -> f64 {
            let gx = g.weights() * x.matrix();
            0.5 * gx.component_mul(x.matrix()).sum()
        };
        let mut x = StrategySpace::init(&p);
        let mut last = potential(&x);
        for _ in 0..200 {
            let (next, l1) = replicator_step(&g, &p, &x);
            let now = potential(&next);
            assert!(now >= last - 1e-10, "potential dropped: {last} -> {now}");
            last = now;
            x = next;
            if l1 < 1e-12 {
                break;
            }
        }
    }

    #[test]
    fn payoff_trace_has_one_entry_per_iteration() {
        let g = graph_from(3, &[(0, 1, 0.9), (1, 2, 0.4)]);
        let p = PlayerPartition::new(vec![Some(0), None, Some(1)], 2).unwrap();
        let cfg = GameConfig { record_payoff_trace: true, ..GameConfig::default() };
        let r = run_games(&g, &p, &cfg).unwrap();
        let trace = r.payoff_trace.unwrap();
        assert_eq!(trace.len(), r.iterations);
        assert!(trace.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn merge_with_target_k_anchors_largest_seeds() {
        // seeds: two big similar clusters and one small one close to the first
        let s = graph_from(
            6,
            &[
                (0, 1, 0.9),
                (2, 3, 0.9),
                (4, 5, 0.9),
                (0, 4, 0.8),
                (1, 5, 0.8),
                (2, 4, 0.05),
            ],
        );
        let seeds = SeedClustering {
            clusters: vec![
                crate::dominant::DominantSet {
                    members: vec![0, 1],
                    weights: vec![0.5, 0.5],
                    cohesiveness: 0.45,
                    iterations: 1,
                    converged: true,
                },
                crate::dominant::DominantSet {
                    members: vec![2, 3],
                    weights: vec![0.5, 0.5],
                    cohesiveness: 0.45,
                    iterations: 1,
                    converged: true,
                },
                crate::dominant::DominantSet {
                    members: vec![4, 5],
                    weights: vec![0.5, 0.5],
                    cohesiveness: 0.45,
                    iterations: 1,
                    converged: true,
                },
            ],
            residual: vec![],
        };
        let r = cluster_the_clusters(&seeds, &s, Some(2), &GameConfig::default(), 6).unwrap();
        assert_eq!(r.k, 2);
        // seed {4,5} is tied to seed {0,1} by strong cross edges
        assert_eq!(r.doc_assignment[4], r.doc_assignment[0]);
        assert_eq!(r.doc_assignment[5], r.doc_assignment[1]);
        assert_ne!(r.doc_assignment[2], r.doc_assignment[0]);
        // classes are contiguous from zero
        let mut classes: Vec<usize> = r.doc_assignment.clone();
        classes.sort_unstable();
        classes.dedup();
        assert_eq!(classes, vec![0, 1]);
    }

    #[test]
    fn merge_discovers_class_count_without_target() {
        // two pairs of mutually similar seeds, nothing across the pairs:
        // the discovered class count must be 2
        let s = graph_from(
            8,
            &[
                (0, 1, 0.9),
                (2, 3, 0.9),
                (4, 5, 0.9),
                (6, 7, 0.9),
                (0, 2, 0.7),
                (1, 3, 0.7),
                (4, 6, 0.7),
                (5, 7, 0.7),
            ],
        );
        let mk = |members: Vec<usize>| crate::dominant::DominantSet {
            members,
            weights: vec![0.5, 0.5],
            cohesiveness: 0.45,
            iterations: 1,
            converged: true,
        };
        let seeds = SeedClustering {
            clusters: vec![mk(vec![0, 1]), mk(vec![2, 3]), mk(vec![4, 5]), mk(vec![6, 7])],
            residual: vec![],
        };
        let r = cluster_the_clusters(&seeds, &s, None, &GameConfig::default(), 8).unwrap();
        assert_eq!(r.k, 2);
        assert_eq!(r.doc_assignment[0], r.doc_assignment[2]);
        assert_eq!(r.doc_assignment[4], r.doc_assignment[6]);
        assert_ne!(r.doc_assignment[0], r.doc_assignment[4]);
    }

    #[test]
    fn merge_keeps_isolated_seed_separate() {
        let s = graph_from(6, &[(0, 1, 0.9), (2, 3, 0.9), (0, 2, 0.8), (1, 3, 0.8)]);
        let mk = |members: Vec<usize>| crate::dominant::DominantSet {
            members,
            weights: vec![0.5, 0.5],
            cohesiveness: 0.45,
            iterations: 1,
            converged: true,
        };
        let seeds = SeedClustering {
            clusters: vec![mk(vec![0, 1]), mk(vec![2, 3]), mk(vec![4, 5])],
            residual: vec![],
        };
        let r = cluster_the_clusters(&seeds, &s, None, &GameConfig::default(), 6).unwrap();
        assert_eq!(r.k, 2);
        assert_eq!(r.doc_assignment[0], r.doc_assignment[2]);
        assert_ne!(r.doc_assignment[4], r.doc_assignment[0]);
    }

    #[test]
    fn merge_rejects_residual_and_bad_targets() {
        let s = graph_from(3, &[(0, 1, 0.5)]);
        let mk = |members: Vec<usize>| crate::dominant::DominantSet {
            members,
            weights: vec![1.0],
            cohesiveness: 0.0,
            iterations: 0,
            converged: true,
        };
        let with_residual = SeedClustering {
            clusters: vec![mk(vec![0]), mk(vec![1])],
            residual: vec![2],
        };
        assert!(matches!(
            cluster_the_clusters(&with_residual, &s, None, &GameConfig::default(), 3),
            Err(Error::ResidualDocuments { count: 1 })
        ));
        let seeds = SeedClustering {
            clusters: vec![mk(vec![0]), mk(vec![1]), mk(vec![2])],
            residual: vec![],
        };
        assert!(matches!(
            cluster_the_clusters(&seeds, &s, Some(4), &GameConfig::default(), 3),
            Err(Error::TooFewSeeds { requested: 4, found: 3 })
        ));
        let none = SeedClustering { clusters: vec![], residual: vec![] };
        assert!(matches!(
            cluster_the_clusters(&none, &s, None, &GameConfig::default(), 3),
            Err(Error::NoSeeds)
        ));
    }

    #[test]
    fn merge_composes_with_exhaustive_peeling() {
        // over-segmented line of two blocks; exhaustive peel then merge
        let g = graph_from(
            6,
            &[
                (0, 1, 0.95),
                (2, 3, 0.95),
                (4, 5, 0.95),
                (1, 2, 0.9),
                (0, 3, 0.85),
                (0, 2, 0.85),
                (1, 3, 0.85),
            ],
        );
        let seeds = peel_off(&g, StopRule::Exhaustive, &DominantSetConfig::default()).unwrap();
        assert!(seeds.residual.is_empty());
        let r = cluster_the_clusters(&seeds, &g, None, &GameConfig::default(), 6).unwrap();
        // block {0,1,2,3} hangs together; {4,5} stays apart
        assert_eq!(r.doc_assignment[0], r.doc_assignment[1]);
        assert_eq!(r.doc_assignment[2], r.doc_assignment[3]);
        assert_eq!(r.doc_assignment[0], r.doc_assignment[2]);
        assert_ne!(r.doc_assignment[4], r.doc_assignment[0]);
        assert_eq!(r.doc_assignment[4], r.doc_assignment[5]);
    }

    fn arb_game() -> impl Strategy<Value = (SimilarityGraph, PlayerPartition)> {
        (2usize..8, 1usize..4).prop_flat_map(|(n, k)| {
            let graph = proptest::collection::vec(0.0f64..1.0, n * n).prop_map(move |vals| {
                let mut m = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in (i + 1)..n {
                        m[(i, j)] = vals[i * n + j];
                        m[(j, i)] = vals[i * n + j];
                    }
                }
                SimilarityGraph::from_weights(m, GraphKind::Kernel).unwrap()
            });
            let labels = proptest::collection::vec(
                proptest::option::weighted(0.4, 0usize..k),
                n,
            )
            .prop_map(move |l| PlayerPartition::new(l, k).unwrap());
            (graph, labels)
        })
    }

    proptest! {
        #[test]
        fn steps_preserve_row_simplexes((g, p) in arb_game()) {
            let mut x = StrategySpace::init(&p);
            for _ in 0..25 {
                let (next, _) = replicator_step(&g, &p, &x);
                for i in 0..next.n() {
                    let mut sum = 0.0;
                    for h in 0..next.k() {
                        let v = next.matrix()[(i, h)];
                        prop_assert!(v >= -1e-15);
                        sum += v;
                    }
                    prop_assert!((sum - 1.0).abs() < 1e-9, "row {} sums to {}", i, sum);
                }
                x = next;
            }
        }

        #[test]
        fn labeled_rows_never_move((g, p) in arb_game()) {
            let r = run_games(&g, &p, &GameConfig::default()).unwrap();
            for i in 0..p.n() {
                if let Some(h) = p.label(i) {
                    prop_assert_eq!(r.strategies.matrix()[(i, h)], 1.0);
                    prop_assert_eq!(r.assignment[i], h);
                }
            }
        }

        #[test]
        fn assignment_is_argmax_with_lowest_index_ties((g, p) in arb_game()) {
            let r = run_games(&g, &p, &GameConfig::default()).unwrap();
            for i in 0..p.n() {
                if p.label(i).is_none() {
                    let row = r.strategies.matrix().row(i);
                    let best = r.assignment[i];
                    for h in 0..p.k() {
                        prop_assert!(row[best] >= row[h]);
                        if row[h] == row[best] {
                            prop_assert!(best <= h);
                        }
                    }
                }
            }
        }
    }
}
