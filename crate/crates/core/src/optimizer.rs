//! On-line Hartigan optimization of the constrained clustering cost:
//! seeded random initialization, per-row best-gain reassignment with
//! immediate model refits, between-sweep dissolution of undersized clusters,
//! and deterministic multi-restart. Also hosts the unconstrained baseline
//! (the same loop with the constraint vacuous) and the side-by-side baseline
//! that clusters each half-space independently and merges.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::geometry::Hyperplane;
use crate::model::{self, fit_cluster, min_fit_count, ClusterModel, ClusterStats, Partition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    C3l,
    Cec,
    CecH,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Method::C3l => "c3l",
            Method::Cec => "cec",
            Method::CecH => "cec_h",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    pub k_init: usize,
    pub alpha: f64,
    pub restarts: usize,
    pub seed: u64,
    pub max_sweeps: usize,
    /// Floor below which a cluster may not shrink through moves; `None`
    /// resolves to dim + 2 (the fitting minimum).
    pub min_cluster_size: Option<usize>,
    /// Clusters smaller than `removal_fraction * n` (but never below the
    /// move floor) are dissolved between sweeps and their rows reabsorbed.
    pub removal_fraction: f64,
}

impl OptimizerConfig {
    pub fn new(k_init: usize, alpha: f64, seed: u64) -> Self {
        OptimizerConfig {
            k_init,
            alpha,
            restarts: 10,
            seed,
            max_sweeps: 200,
            min_cluster_size: None,
            removal_fraction: 0.05,
        }
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_max_sweeps(mut self, max_sweeps: usize) -> Self {
        self.max_sweeps = max_sweeps;
        self
    }

    pub fn with_removal_fraction(mut self, fraction: f64) -> Self {
        self.removal_fraction = fraction;
        self
    }

    fn min_size(&self, dim: usize) -> usize {
        self.min_cluster_size.unwrap_or(0).max(min_fit_count(dim))
    }

    fn removal_size(&self, dim: usize, n: usize) -> usize {
        let frac = (self.removal_fraction * n as f64).ceil() as usize;
        frac.max(self.min_size(dim))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub sweep: usize,
    pub moves: usize,
    pub removed: usize,
    /// Cost after the sweep's accepted moves, before any dissolution.
    pub cost_after_moves: f64,
    /// Cost at the end of the sweep (after dissolution reabsorption).
    pub cost: f64,
    pub k: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RemovalEvent {
    pub sweep: usize,
    pub cluster: usize,
    pub size: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunTrace {
    pub initial_cost: f64,
    pub sweeps: Vec<SweepRecord>,
    pub removals: Vec<RemovalEvent>,
    pub final_k: usize,
    /// Smallest gain among accepted moves; `None` when nothing moved.
    pub min_accepted_gain: Option<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusteringResult {
    pub method: Method,
    pub alpha: f64,
    pub seed: u64,
    pub k_init: usize,
    pub restarts: usize,
    pub hyperplane: Hyperplane,
    pub assignment: Vec<usize>,
    pub models: Vec<ClusterModel>,
    pub cost: f64,
    pub best_restart: usize,
    /// Final cost per restart; `None` marks a failed restart.
    pub restart_costs: Vec<Option<f64>>,
    pub trace: RunTrace,
    pub warnings: Vec<String>,
}

impl ClusteringResult {
    pub fn final_k(&self) -> usize {
        self.models.len()
    }
}

/// Seeded random partition into `cfg.k_init` groups, each at least the move
/// floor in size: rejection-resampled up to 100 draws, then a round-robin
/// fill that satisfies the floor by construction. Deterministic in the seed
/// (restart stream 0).
pub fn initialize(data: &DataMatrix, cfg: &OptimizerConfig) -> Result<Partition> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(0);
    initialize_with_rng(data, cfg.k_init, cfg.min_size(data.cols()), &mut rng)
}

fn initialize_with_rng(
    data: &DataMatrix,
    k: usize,
    min_size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Partition> {
    let n = data.rows();
    if k == 0 {
        return Err(Error::input("k_init must be at least 1"));
    }
    if n < k * min_size {
        return Err(Error::input(format!(
            "{n} rows cannot seed {k} clusters of at least {min_size} rows each"
        )));
    }
    for _ in 0..100 {
        let assignment: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let mut counts = vec![0usize; k];
        for &c in &assignment {
            counts[c] += 1;
        }
        if counts.iter().all(|&c| c >= min_size) {
            return Partition::from_assignment(data, assignment, k);
        }
    }
    let assignment: Vec<usize> = (0..n).map(|i| i % k).collect();
    Partition::from_assignment(data, assignment, k)
}

/// Cost gain of hypothetically moving `row` from cluster `from` to `to`:
/// positive when the move lowers the total cost. Only the two affected
/// clusters' terms are recomputed. Disallowed moves (source at or below the
/// fitting floor, degenerate hypothetical fits, stale `from`) report
/// negative infinity; `from == to` reports zero.
pub fn reassign_gain(
    data: &DataMatrix,
    row: usize,
    from: usize,
    to: usize,
    partition: &Partition,
    alpha: f64,
) -> f64 {
    if from == to {
        return 0.0;
    }
    if partition.cluster_of(row) != from {
        return f64::NEG_INFINITY;
    }
    let min_size = min_fit_count(data.cols());
    if partition.stats(from).count() <= min_size {
        return f64::NEG_INFINITY;
    }
    let n = partition.n();
    let x = data.row(row);
    let term = |stats: &ClusterStats| cluster_term(stats, alpha, n);
    let (Ok(term_from), Ok(term_to)) = (term(partition.stats(from)), term(partition.stats(to)))
    else {
        return f64::NEG_INFINITY;
    };
    let mut without = partition.stats(from).clone();
    without.remove(x);
    let mut with = partition.stats(to).clone();
    with.add(x);
    let (Ok(term_from_new), Ok(term_to_new)) = (term(&without), term(&with)) else {
        return f64::NEG_INFINITY;
    };
    (term_from.0 + term_to.0) - (term_from_new.0 + term_to_new.0)
}

/// One cluster's contribution to the total cost, `p (-ln p + E)`, together
/// with the model realizing `E`.
fn cluster_term(stats: &ClusterStats, alpha: f64, n: usize) -> Result<(f64, ClusterModel)> {
    let p = stats.count() as f64 / n as f64;
    let fitted = fit_cluster(stats, alpha, p)?;
    let cost = model::cluster_cost(stats, &fitted)?;
    Ok((p * (-p.ln() + cost), fitted))
}

/// Refits models for a fixed assignment and reports the total cost; the
/// assignment must form clusters large enough to fit. Indices must be dense
/// in `0..k`.
pub fn evaluate_assignment(
    data: &DataMatrix,
    hp: &Hyperplane,
    assignment: &[usize],
    alpha: f64,
) -> Result<(f64, Vec<ClusterModel>)> {
    let canonical = hp.canonicalize().apply_matrix(data)?;
    let k = assignment
        .iter()
        .max()
        .map(|m| m + 1)
        .ok_or_else(|| Error::input("empty assignment"))?;
    let partition = Partition::from_assignment(&canonical, assignment.to_vec(), k)?;
    let alpha = alpha.min(0.5);
    let n = partition.n();
    let mut models = Vec::with_capacity(k);
    let mut total = 0.0;
    for c in 0..k {
        let (term, fitted) = cluster_term(partition.stats(c), alpha, n)?;
        total += term;
        models.push(fitted);
    }
    Ok((total, models))
}

/// Runs the constrained optimizer: canonicalizes the frame, performs
/// `cfg.restarts` independent seeded Hartigan descents concurrently, and
/// returns the lowest-cost outcome (ties go to the lower restart index).
pub fn run(data: &DataMatrix, hp: &Hyperplane, cfg: &OptimizerConfig) -> Result<ClusteringResult> {
    run_as(data, hp, cfg, Method::C3l)
}

/// The unconstrained baseline: the identical loop with the constraint
/// vacuous at alpha = 0.5.
pub fn run_cec(
    data: &DataMatrix,
    hp: &Hyperplane,
    cfg: &OptimizerConfig,
) -> Result<ClusteringResult> {
    let mut cfg = cfg.clone();
    cfg.alpha = 0.5;
    run_as(data, &hp.clone(), &cfg, Method::Cec)
}

fn run_as(
    data: &DataMatrix,
    hp: &Hyperplane,
    cfg: &OptimizerConfig,
    method: Method,
) -> Result<ClusteringResult> {
    if hp.dim() != data.cols() {
        return Err(Error::input(format!(
            "hyperplane dimension {} does not match data dimension {}",
            hp.dim(),
            data.cols()
        )));
    }
    if let Some(row) = data.first_non_finite_row() {
        return Err(Error::input(format!(
            "row {row} contains a non-finite value"
        )));
    }
    let canonical = hp.canonicalize().apply_matrix(data)?;
    let mut warnings = Vec::new();
    let mut cfg = cfg.clone();
    if cfg.alpha > 0.5 {
        warnings.push(format!(
            "alpha {} exceeds 0.5; clamped to 0.5 (constraint is vacuous)",
            cfg.alpha
        ));
        cfg.alpha = 0.5;
    }
    if cfg.alpha.is_nan() || cfg.alpha <= 0.0 {
        return Err(Error::input(format!(
            "alpha must be positive, got {}",
            cfg.alpha
        )));
    }
    if cfg.restarts == 0 {
        return Err(Error::input("restarts must be at least 1"));
    }
    // Dry-run the initialization guard so size problems surface as input
    // errors before any thread is spawned.
    let min_size = cfg.min_size(canonical.cols());
    if canonical.rows() < cfg.k_init * min_size || cfg.k_init == 0 {
        return Err(Error::input(format!(
            "{} rows cannot seed {} clusters of at least {min_size} rows each",
            canonical.rows(),
            cfg.k_init
        )));
    }

    let outcomes = run_restarts(&canonical, &cfg);
    let mut restart_costs = Vec::with_capacity(cfg.restarts);
    let mut best: Option<(usize, RestartOutcome)> = None;
    let mut first_err: Option<Error> = None;
    for (r, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(o) => {
                restart_costs.push(Some(o.cost));
                let better = match &best {
                    None => true,
                    Some((_, b)) => o.cost < b.cost,
                };
                if better {
                    best = Some((r, o));
                }
            }
            Err(e) => {
                restart_costs.push(None);
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    let (best_restart, outcome) = best.ok_or_else(|| {
        Error::Optimization(format!(
            "all {} restarts failed; first failure: {}",
            cfg.restarts,
            first_err.map(|e| e.to_string()).unwrap_or_default()
        ))
    })?;

    Ok(ClusteringResult {
        method,
        alpha: cfg.alpha,
        seed: cfg.seed,
        k_init: cfg.k_init,
        restarts: cfg.restarts,
        hyperplane: hp.clone(),
        assignment: outcome.partition.assignment().to_vec(),
        models: outcome.models,
        cost: outcome.cost,
        best_restart,
        restart_costs,
        trace: outcome.trace,
        warnings,
    })
}

struct RestartOutcome {
    partition: Partition,
    models: Vec<ClusterModel>,
    cost: f64,
    trace: RunTrace,
}

fn run_restarts(canonical: &DataMatrix, cfg: &OptimizerConfig) -> Vec<Result<RestartOutcome>> {
    let restarts = cfg.restarts;
    let workers = std::thread::available_parallelism()
        .map(|v| v.get())
        .unwrap_or(1)
        .min(restarts);
    let mut outcomes: Vec<Option<Result<RestartOutcome>>> = Vec::new();
    outcomes.resize_with(restarts, || None);
    if workers <= 1 {
        for (r, slot) in outcomes.iter_mut().enumerate() {
            *slot = Some(hartigan_restart(canonical, cfg, r as u64));
        }
    } else {
        let slots: Vec<_> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    scope.spawn(move || {
                        let mut local = Vec::new();
                        let mut r = w;
                        while r < restarts {
                            local.push((r, hartigan_restart(canonical, cfg, r as u64)));
                            r += workers;
                        }
                        local
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("restart worker panicked"))
                .collect()
        });
        for (r, outcome) in slots {
            outcomes[r] = Some(outcome);
        }
    }
    outcomes
        .into_iter()
        .map(|o| o.expect("restart slot filled"))
        .collect()
}

/// One full Hartigan descent from a seeded random partition. Restart `r`
/// draws from stream `r` of the seed, so adding restarts never perturbs the
/// streams of earlier ones.
fn hartigan_restart(
    data: &DataMatrix,
    cfg: &OptimizerConfig,
    stream: u64,
) -> Result<RestartOutcome> {
    let n = data.rows();
    let dim = data.cols();
    let min_size = cfg.min_size(dim);
    let removal_size = cfg.removal_size(dim, n);
    let alpha = cfg.alpha;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let mut partition = initialize_with_rng(data, cfg.k_init, min_size, &mut rng)?;

    let mut models = Vec::with_capacity(cfg.k_init);
    let mut terms = Vec::with_capacity(cfg.k_init);
    for c in 0..partition.k_active() {
        let (term, fitted) = cluster_term(partition.stats(c), alpha, n)?;
        terms.push(term);
        models.push(fitted);
    }

    let initial_cost: f64 = terms.iter().sum();
    let mut trace = RunTrace {
        initial_cost,
        sweeps: Vec::new(),
        removals: Vec::new(),
        final_k: partition.k_active(),
        min_accepted_gain: None,
        converged: false,
    };
    let mut moves_since_rebuild = 0usize;

    for sweep in 0..cfg.max_sweeps {
        let mut moves = 0usize;
        for row in 0..n {
            let a = partition.cluster_of(row);
            if partition.stats(a).count() <= min_size {
                continue;
            }
            let x = data.row(row);
            let mut without = partition.stats(a).clone();
            without.remove(x);
            let Ok((term_a_new, model_a_new)) = cluster_term(&without, alpha, n) else {
                continue;
            };

            // argmax of gain over every cluster (staying put gains zero);
            // strict comparison over ascending indices breaks ties low.
            let mut best_gain = f64::NEG_INFINITY;
            let mut winner = a;
            let mut winner_fit: Option<(f64, ClusterModel)> = None;
            for b in 0..partition.k_active() {
                if b == a {
                    if best_gain < 0.0 {
                        best_gain = 0.0;
                        winner = a;
                        winner_fit = None;
                    }
                    continue;
                }
                let mut with = partition.stats(b).clone();
                with.add(x);
                let Ok((term_b_new, model_b_new)) = cluster_term(&with, alpha, n) else {
                    continue;
                };
                let gain = (terms[a] + terms[b]) - (term_a_new + term_b_new);
                if gain > best_gain {
                    best_gain = gain;
                    winner = b;
                    winner_fit = Some((term_b_new, model_b_new));
                }
            }

            if winner != a {
                let (term_b_new, model_b_new) = winner_fit.expect("winner carries its fit");
                partition.move_row(data, row, winner);
                terms[a] = term_a_new;
                models[a] = model_a_new;
                terms[winner] = term_b_new;
                models[winner] = model_b_new;
                moves += 1;
                moves_since_rebuild += 1;
                trace.min_accepted_gain = Some(
                    trace
                        .min_accepted_gain
                        .map_or(best_gain, |g| g.min(best_gain)),
                );
                if moves_since_rebuild > 10 * n {
                    partition.rebuild_stats(data);
                    for c in 0..partition.k_active() {
                        let (term, fitted) = cluster_term(partition.stats(c), alpha, n)?;
                        terms[c] = term;
                        models[c] = fitted;
                    }
                    moves_since_rebuild = 0;
                }
            }
        }
        let cost_after_moves: f64 = terms.iter().sum();

        // dissolve undersized clusters, smallest first, keeping at least one
        let mut removed = 0usize;
        loop {
            let candidate = (0..partition.k_active())
                .filter(|&c| partition.stats(c).count() < removal_size)
                .min_by_key(|&c| (partition.stats(c).count(), c));
            let Some(c) = candidate else { break };
            if partition.k_active() <= 1 {
                break;
            }
            let size = partition.stats(c).count();
            let orphans = partition.dissolve_cluster(c);
            models.remove(c);
            terms.remove(c);
            trace.removals.push(RemovalEvent {
                sweep,
                cluster: c,
                size,
            });
            removed += 1;
            for row in orphans {
                let x = data.row(row);
                let mut best: Option<(f64, usize, f64, ClusterModel)> = None;
                for (b, term_b) in terms.iter().enumerate() {
                    let mut with = partition.stats(b).clone();
                    with.add(x);
                    let Ok((term_b_new, model_b_new)) = cluster_term(&with, alpha, n) else {
                        continue;
                    };
                    let delta = term_b_new - term_b;
                    if best.as_ref().is_none_or(|(d, ..)| delta < *d) {
                        best = Some((delta, b, term_b_new, model_b_new));
                    }
                }
                let Some((_, b, term_b_new, model_b_new)) = best else {
                    return Err(Error::Optimization(format!(
                        "row {row} could not be reabsorbed after dissolving a cluster"
                    )));
                };
                partition.move_row(data, row, b);
                terms[b] = term_b_new;
                models[b] = model_b_new;
            }
        }

        let cost: f64 = terms.iter().sum();
        trace.sweeps.push(SweepRecord {
            sweep,
            moves,
            removed,
            cost_after_moves,
            cost,
            k: partition.k_active(),
        });
        if moves == 0 && removed == 0 {
            trace.converged = true;
            break;
        }
    }

    trace.final_k = partition.k_active();
    let cost: f64 = terms.iter().sum();
    Ok(RestartOutcome {
        partition,
        models,
        cost,
        trace,
    })
}

/// Side-by-side baseline: unconstrained clustering of each half-space
/// independently, priors rescaled by the side shares, then every row
/// reassigned to the highest-posterior merged model. Models are not refitted
/// after the reassignment; reported priors follow the final assignment.
pub fn run_cec_h(
    data: &DataMatrix,
    hp: &Hyperplane,
    cfg: &OptimizerConfig,
) -> Result<ClusteringResult> {
    if hp.dim() != data.cols() {
        return Err(Error::input(format!(
            "hyperplane dimension {} does not match data dimension {}",
            hp.dim(),
            data.cols()
        )));
    }
    if let Some(row) = data.first_non_finite_row() {
        return Err(Error::input(format!(
            "row {row} contains a non-finite value"
        )));
    }
    let canonical = hp.canonicalize().apply_matrix(data)?;
    let n = canonical.rows();

    let mut minus_rows = Vec::new();
    let mut plus_rows = Vec::new();
    for (i, row) in canonical.iter_rows().enumerate() {
        if row[0] >= 0.0 {
            plus_rows.push(i);
        } else {
            minus_rows.push(i);
        }
    }
    if minus_rows.is_empty() || plus_rows.is_empty() {
        return Err(Error::input(
            "both sides of the boundary must be nonempty for the side-by-side baseline",
        ));
    }
    let min_size = cfg.min_size(canonical.cols());
    for (rows, side) in [(&minus_rows, "negative"), (&plus_rows, "positive")] {
        if rows.len() < cfg.k_init * min_size {
            return Err(Error::input(format!(
                "{side} side has {} rows, not enough to seed {} clusters of at least {min_size}",
                rows.len(),
                cfg.k_init
            )));
        }
    }

    let mut side_cfg = cfg.clone();
    side_cfg.alpha = 0.5;
    let mut models: Vec<ClusterModel> = Vec::new();
    let mut side_costs = Vec::new();
    for rows in [&minus_rows, &plus_rows] {
        let side = gather_rows(&canonical, rows)?;
        let outcomes = run_restarts(&side, &side_cfg);
        let mut best: Option<RestartOutcome> = None;
        let mut first_err = None;
        for outcome in outcomes {
            match outcome {
                Ok(o) => {
                    if best.as_ref().is_none_or(|b| o.cost < b.cost) {
                        best = Some(o);
                    }
                }
                Err(e) => {
                    if first_err.is_none() {
                        first_err = Some(e);
                    }
                }
            }
        }
        let best = best.ok_or_else(|| {
            Error::Optimization(format!(
                "half-space clustering failed: {}",
                first_err.map(|e| e.to_string()).unwrap_or_default()
            ))
        })?;
        let share = rows.len() as f64 / n as f64;
        side_costs.push(Some(best.cost));
        for mut m in best.models {
            m.prior *= share;
            models.push(m);
        }
    }

    // highest-posterior reassignment over the merged models
    let mut assignment = vec![0usize; n];
    for (i, row) in canonical.iter_rows().enumerate() {
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0usize;
        for (c, m) in models.iter().enumerate() {
            let d = m.log_density(row);
            if d > best {
                best = d;
                arg = c;
            }
        }
        assignment[i] = arg;
    }

    // drop clusters the reassignment emptied, refresh priors to the final
    // shares, and compute the cost of the merged configuration
    let mut counts = vec![0usize; models.len()];
    for &c in &assignment {
        counts[c] += 1;
    }
    let mut remap = vec![usize::MAX; models.len()];
    let mut kept = Vec::new();
    for (c, m) in models.into_iter().enumerate() {
        if counts[c] > 0 {
            remap[c] = kept.len();
            kept.push(m);
        }
    }
    for a in assignment.iter_mut() {
        *a = remap[*a];
    }
    let partition = Partition::from_assignment(&canonical, assignment.clone(), kept.len())?;
    let mut cost = 0.0;
    for (c, m) in kept.iter_mut().enumerate() {
        let share = partition.stats(c).count() as f64 / n as f64;
        m.prior = share;
        cost += share * (-share.ln() + model::cluster_cost(partition.stats(c), m)?);
    }

    let trace = RunTrace {
        initial_cost: cost,
        sweeps: Vec::new(),
        removals: Vec::new(),
        final_k: kept.len(),
        min_accepted_gain: None,
        converged: true,
    };
    Ok(ClusteringResult {
        method: Method::CecH,
        alpha: 0.5,
        seed: cfg.seed,
        k_init: cfg.k_init,
        restarts: cfg.restarts,
        hyperplane: hp.clone(),
        assignment,
        models: kept,
        cost,
        best_restart: 0,
        restart_costs: side_costs,
        trace,
        warnings: Vec::new(),
    })
}

fn gather_rows(data: &DataMatrix, rows: &[usize]) -> Result<DataMatrix> {
    let mut values = Vec::with_capacity(rows.len() * data.cols());
    for &r in rows {
        values.extend_from_slice(data.row(r));
    }
    DataMatrix::from_flat(values, rows.len(), data.cols())
}
