//! Reversible-jump Metropolis–Hastings over `(j, knots, θ)`.
//!
//! Four moves are mixed with probabilities `p_a`, `p_b`, `p_c(j)`, `p_d(j)`:
//!
//! * perturb: Gaussian random walk `θ' = θ + σu` on all coefficients;
//! * knot move: one knot steps to a free neighbouring grid position;
//! * birth: add a knot and a coefficient, `j → j + 1`;
//! * death: the exact reverse of birth.
//!
//! Birth re-expresses the current knots on the finer grid of dimension
//! `j + 1` by rounding to the nearest position. Going from a coarse grid to
//! a finer one never merges knots and rounding back always recovers the
//! original indices, so a death is only proposable from states whose
//! remaining knots are exactly the image of some coarse configuration; any
//! other death is rejected. This keeps every birth/death pair mutually
//! reachable, so the acceptance ratio below gives detailed balance:
//!
//! ```text
//! R = π(y) p_d(j+1) / (j - q + 1)
//!     ---------------------------------
//!     π(x) p_c(j) / F · φ(u; η(θ), 1)
//! ```
//!
//! with `F` the number of free positions on the finer grid and `η(θ)` the
//! overlap-weighted mean of the coefficients whose basis functions meet the
//! inserted one. The insertion map is a coordinate insertion, `|J| = 1`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bspline::{basis_inner_products, KnotSet};
use crate::error::{validation, Error, Result};
use crate::math::ln_normal_pdf;
use crate::model::Likelihood;
use crate::prior::{grid_size, log_prior, PriorConfig, SplineState};

/// Target acceptance rate of the coefficient random walk.
pub const TARGET_ACCEPT: f64 = 0.23;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveKind {
    Perturb,
    KnotMove,
    Birth,
    Death,
}

impl MoveKind {
    pub const ALL: [MoveKind; 4] = [
        MoveKind::Perturb,
        MoveKind::KnotMove,
        MoveKind::Birth,
        MoveKind::Death,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MoveKind::Perturb => "perturb",
            MoveKind::KnotMove => "knot_move",
            MoveKind::Birth => "birth",
            MoveKind::Death => "death",
        }
    }
}

impl fmt::Display for MoveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MoveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MoveKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| validation(format!("unknown move kind {s:?}")))
    }
}

/// Move-type probabilities as a function of the dimension `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveSchedule {
    p_perturb: f64,
    p_knot: f64,
    order: usize,
    mean_dim: f64,
}

impl MoveSchedule {
    pub fn new(p_perturb: f64, p_knot: f64, order: usize, mean_dim: f64) -> Result<Self> {
        if !(p_perturb > 0.0 && p_perturb < 1.0) || !(p_knot > 0.0 && p_knot < 1.0) {
            return Err(validation(format!(
                "move probabilities must lie in (0, 1), got p_a={p_perturb} p_b={p_knot}"
            )));
        }
        if !(p_perturb + p_knot < 1.0) {
            return Err(validation(format!(
                "need p_a + p_b < 1, got {}",
                p_perturb + p_knot
            )));
        }
        if !(mean_dim > order as f64) {
            return Err(validation(format!(
                "mean dimension {mean_dim} must exceed the order {order}"
            )));
        }
        Ok(Self {
            p_perturb,
            p_knot,
            order,
            mean_dim,
        })
    }

    pub fn p_perturb(&self) -> f64 {
        self.p_perturb
    }

    pub fn p_knot(&self) -> f64 {
        self.p_knot
    }

    fn jump_mass(&self) -> f64 {
        1.0 - self.p_perturb - self.p_knot
    }

    /// `(1 - p_a - p_b) 2^{-(j-q)/(μ-q)}`.
    pub fn p_birth(&self, j: usize) -> f64 {
        let excess = j.saturating_sub(self.order) as f64;
        self.jump_mass()
            * (-(excess / (self.mean_dim - self.order as f64)) * std::f64::consts::LN_2).exp()
    }

    pub fn p_death(&self, j: usize) -> f64 {
        if j <= self.order {
            return 0.0;
        }
        self.jump_mass() - self.p_birth(j)
    }

    pub fn probs(&self, j: usize) -> [f64; 4] {
        [
            self.p_perturb,
            self.p_knot,
            self.p_birth(j),
            self.p_death(j),
        ]
    }

    pub fn prob(&self, kind: MoveKind, j: usize) -> f64 {
        self.probs(j)[kind.index()]
    }
}

pub fn select_move<R: Rng + ?Sized>(j: usize, ms: &MoveSchedule, rng: &mut R) -> MoveKind {
    let p = ms.probs(j);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for kind in MoveKind::ALL {
        acc += p[kind.index()];
        if u < acc {
            return kind;
        }
    }
    // Rounding leftovers; never death at j = q.
    if p[3] > 0.0 {
        MoveKind::Death
    } else {
        MoveKind::Birth
    }
}

/// Random-walk scale adaptation state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptState {
    pub sigma: f64,
    pub window_accepts: u64,
    pub window_total: u64,
    pub frozen: bool,
}

impl AdaptState {
    pub fn new(sigma: f64) -> Self {
        Self {
            sigma,
            window_accepts: 0,
            window_total: 0,
            frozen: false,
        }
    }

    pub fn record(&mut self, accepted: bool) {
        if self.frozen {
            return;
        }
        self.window_total += 1;
        if accepted {
            self.window_accepts += 1;
        }
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }
}

/// Multiplier applied to `σ` for an observed window acceptance rate.
pub fn sigma_factor(rate: f64) -> f64 {
    (rate - TARGET_ACCEPT).exp().clamp(0.5, 2.0)
}

/// Once `window` perturb proposals have been recorded, rescales `σ` by
/// `exp(rate - 0.23)` clipped to `[0.5, 2]` and starts a new window.
pub fn adapt_sigma(adapt: AdaptState, window: u64) -> AdaptState {
    if adapt.frozen || adapt.window_total < window.max(1) {
        return adapt;
    }
    let rate = adapt.window_accepts as f64 / adapt.window_total as f64;
    AdaptState {
        sigma: adapt.sigma * sigma_factor(rate),
        window_accepts: 0,
        window_total: 0,
        frozen: false,
    }
}

/// Unnormalized log posterior: prior times likelihood.
#[derive(Debug, Clone)]
pub struct Posterior {
    pub prior: PriorConfig,
    pub likelihood: Likelihood,
}

impl Posterior {
    pub fn new(prior: PriorConfig, likelihood: Likelihood) -> Result<Self> {
        if let Some(p) = likelihood.period() {
            if p != prior.period {
                return Err(validation(format!(
                    "data period {p} differs from prior period {}",
                    prior.period
                )));
            }
        }
        Ok(Self { prior, likelihood })
    }

    pub fn log_post(&self, state: &SplineState) -> f64 {
        let lp = log_prior(state, &self.prior);
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        lp + self.likelihood.log_lik(state)
    }
}

/// A concrete proposal together with its log acceptance ratio.
#[derive(Debug, Clone)]
pub struct Proposal {
    pub kind: MoveKind,
    pub state: SplineState,
    pub log_post: f64,
    /// `ln R`; the move is accepted with probability `min(1, R)`.
    pub log_ratio: f64,
}

impl Proposal {
    pub fn accept_prob(&self) -> f64 {
        if self.log_ratio >= 0.0 {
            1.0
        } else {
            self.log_ratio.exp()
        }
    }
}

/// Outcome of one kernel application.
#[derive(Debug, Clone)]
pub struct Step {
    pub state: SplineState,
    pub log_post: f64,
    pub accepted: bool,
}

fn metropolis<R: Rng + ?Sized>(
    current: &SplineState,
    current_lp: f64,
    proposal: Option<Proposal>,
    rng: &mut R,
) -> Step {
    if let Some(p) = proposal {
        let u: f64 = rng.random();
        if p.log_ratio >= 0.0 || u.ln() < p.log_ratio {
            return Step {
                state: p.state,
                log_post: p.log_post,
                accepted: true,
            };
        }
    }
    Step {
        state: current.clone(),
        log_post: current_lp,
        accepted: false,
    }
}

// ---------------------------------------------------------------------------
// perturb

/// Proposal to the coefficient vector `theta` with knots unchanged.
pub fn perturb_to(post: &Posterior, x: &SplineState, lp_x: f64, theta: Vec<f64>) -> Proposal {
    let y = x.with_theta(theta);
    let lp_y = if post.prior.in_bounds(y.theta()) {
        post.log_post(&y)
    } else {
        f64::NEG_INFINITY
    };
    Proposal {
        kind: MoveKind::Perturb,
        state: y,
        log_post: lp_y,
        log_ratio: lp_y - lp_x,
    }
}

pub fn perturb_move<R: Rng + ?Sized>(
    post: &Posterior,
    x: &SplineState,
    lp_x: f64,
    sigma: f64,
    rng: &mut R,
) -> Step {
    let theta: Vec<f64> = x
        .theta()
        .iter()
        .map(|&c| {
            let z: f64 = rng.sample(StandardNormal);
            c + sigma * z
        })
        .collect();
    let p = perturb_to(post, x, lp_x, theta);
    metropolis(x, lp_x, Some(p), rng)
}

// ---------------------------------------------------------------------------
// knot move

/// Free grid neighbours (`idx - 1`, `idx + 1`) of inner knot `knot`.
pub fn free_neighbours(x: &SplineState, knot: usize) -> Vec<usize> {
    let idx = x.grid_idx();
    let g = grid_size(x.dim());
    let k = idx[knot];
    let mut out = Vec::with_capacity(2);
    if k > 1 && (knot == 0 || idx[knot - 1] != k - 1) {
        out.push(k - 1);
    }
    if k < g && (knot + 1 == idx.len() || idx[knot + 1] != k + 1) {
        out.push(k + 1);
    }
    out
}

/// Moves inner knot `knot` to grid index `to`, which must be a free neighbour.
pub fn knot_move_to(
    post: &Posterior,
    x: &SplineState,
    lp_x: f64,
    knot: usize,
    to: usize,
) -> Option<Proposal> {
    if knot >= x.grid_idx().len() || !free_neighbours(x, knot).contains(&to) {
        return None;
    }
    let mut idx = x.grid_idx().to_vec();
    idx[knot] = to;
    let y = SplineState::new(x.order(), x.period(), idx, x.theta().to_vec()).ok()?;
    let lp_y = post.log_post(&y);
    Some(Proposal {
        kind: MoveKind::KnotMove,
        state: y,
        log_post: lp_y,
        log_ratio: lp_y - lp_x,
    })
}

pub fn knot_move<R: Rng + ?Sized>(
    post: &Posterior,
    x: &SplineState,
    lp_x: f64,
    rng: &mut R,
) -> Step {
    let n_inner = x.grid_idx().len();
    if n_inner == 0 {
        return metropolis(x, lp_x, None, rng);
    }
    let knot = rng.random_range(0..n_inner);
    let free = free_neighbours(x, knot);
    let target = match free.len() {
        2 => Some(free[rng.random_range(0..2)]),
        1 => rng.random_bool(0.5).then_some(free[0]),
        _ => None,
    };
    let proposal = target.and_then(|to| knot_move_to(post, x, lp_x, knot, to));
    metropolis(x, lp_x, proposal, rng)
}

// ---------------------------------------------------------------------------
// birth / death

/// Nearest index on grid `to_g` to index `idx` on grid `from_g` (ties go
/// to the lower index), clamped to `[1, to_g]`.
pub fn regrid_index(idx: usize, from_g: usize, to_g: usize) -> usize {
    // ceil((2·idx·(to_g+1) - (from_g+1)) / (2·(from_g+1)))
    let num = 2 * idx as i64 * (to_g as i64 + 1) - (from_g as i64 + 1);
    let den = 2 * (from_g as i64 + 1);
    let r = -((-num).div_euclid(den));
    r.clamp(1, to_g as i64) as usize
}

/// Insertion index (0-based) of the coefficient that accompanies a knot at
/// grid index `new` strictly between `prev` and `next` (0 and `G+1` stand
/// for the interval ends). `inner_pos` is the knot's 0-based inner position.
pub fn insertion_index(
    inner_pos: usize,
    order: usize,
    prev: usize,
    new: usize,
    next: usize,
) -> usize {
    let offset = (order + 1) * (new - prev) / (next - prev);
    inner_pos + offset.min(order)
}

/// Weighted mean `η(θ)` over the coefficients neighbouring slot `m` of the
/// destination basis. `theta` has one entry fewer than `dest`.
pub fn seed_mean(dest: &KnotSet, m: usize, theta: &[f64]) -> f64 {
    let w = basis_inner_products(dest, m).expect("insertion index within basis");
    let mut num = 0.0;
    let mut den = 0.0;
    for (l, &wl) in w.iter().enumerate() {
        if l == m || wl == 0.0 {
            continue;
        }
        let c = if l < m { theta[l] } else { theta[l - 1] };
        num += wl * c;
        den += wl;
    }
    num / den
}

/// The parts of a birth `x → y` that depend only on the knot configuration.
#[derive(Debug, Clone)]
pub struct BirthGeometry {
    /// Existing knots re-expressed on the grid of dimension `j + 1`.
    pub rounded: Vec<usize>,
    /// Number of free positions on that grid.
    pub free: usize,
}

impl BirthGeometry {
    pub fn of(x: &SplineState) -> Self {
        let j = x.dim();
        let (g, g_next) = (grid_size(j), grid_size(j + 1));
        let rounded: Vec<usize> = x
            .grid_idx()
            .iter()
            .map(|&k| regrid_index(k, g, g_next))
            .collect();
        let free = g_next - rounded.len();
        Self { rounded, free }
    }

    /// The `k`-th free position (0-based) on the finer grid.
    pub fn nth_free(&self, mut k: usize) -> usize {
        let mut candidate = 1;
        for &occ in &self.rounded {
            let gap = occ - candidate;
            if k < gap {
                return candidate + k;
            }
            k -= gap;
            candidate = occ + 1;
        }
        candidate + k
    }
}

/// `ln R` for a birth from dimension `j` (the death ratio is its negative).
#[allow(clippy::too_many_arguments)]
fn birth_log_ratio(
    sched: &MoveSchedule,
    order: usize,
    j: usize,
    free: usize,
    lp_small: f64,
    lp_big: f64,
    u: f64,
    eta: f64,
) -> f64 {
    lp_big - lp_small + sched.p_death(j + 1).ln()
        - ((j - order + 1) as f64).ln()
        - sched.p_birth(j).ln()
        + (free as f64).ln()
        - ln_normal_pdf(u, eta, 1.0)
}

/// Births the knot at fine-grid index `new_pos` with seed coefficient `u`.
/// Returns `None` if `new_pos` is not a free position.
pub fn birth_to(
    post: &Posterior,
    sched: &MoveSchedule,
    x: &SplineState,
    lp_x: f64,
    new_pos: usize,
    u: f64,
) -> Option<Proposal> {
    let j = x.dim();
    let q = x.order();
    let geo = BirthGeometry::of(x);
    let g_next = grid_size(j + 1);
    if new_pos == 0 || new_pos > g_next || geo.rounded.contains(&new_pos) {
        return None;
    }
    let (y, m) = insert_knot(x, &geo.rounded, new_pos, u)?;
    let eta = seed_mean(y.knots(), m, x.theta());
    let lp_y = post.log_post(&y);
    let log_ratio = birth_log_ratio(sched, q, j, geo.free, lp_x, lp_y, u, eta);
    Some(Proposal {
        kind: MoveKind::Birth,
        state: y,
        log_post: lp_y,
        log_ratio,
    })
}

/// Builds the dimension `j + 1` state and returns it with the insertion index.
fn insert_knot(
    x: &SplineState,
    rounded: &[usize],
    new_pos: usize,
    u: f64,
) -> Option<(SplineState, usize)> {
    let q = x.order();
    let g_next = grid_size(x.dim() + 1);
    let pos = rounded.partition_point(|&r| r < new_pos);
    let prev = if pos == 0 { 0 } else { rounded[pos - 1] };
    let next = rounded.get(pos).copied().unwrap_or(g_next + 1);
    let m = insertion_index(pos, q, prev, new_pos, next);
    let mut idx = rounded.to_vec();
    idx.insert(pos, new_pos);
    let mut theta = x.theta().to_vec();
    theta.insert(m, u);
    let y = SplineState::new(q, x.period(), idx, theta).ok()?;
    Some((y, m))
}

/// What a death from `y` removing inner knot `knot` maps back to, if the
/// pair is reachable by a birth.
#[derive(Debug, Clone)]
pub struct DeathPlan {
    pub state: SplineState,
    pub seed: f64,
    pub seed_mean: f64,
    pub free: usize,
}

pub fn plan_death(y: &SplineState, knot: usize) -> Option<DeathPlan> {
    let big = y.dim();
    let q = y.order();
    if big <= q || knot >= y.grid_idx().len() {
        return None;
    }
    let j = big - 1;
    let (g, g_big) = (grid_size(j), grid_size(big));
    let idx = y.grid_idx();
    let removed = idx[knot];
    let rest: Vec<usize> = idx
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != knot)
        .map(|(_, &k)| k)
        .collect();
    let prev = if knot == 0 { 0 } else { rest[knot - 1] };
    let next = rest.get(knot).copied().unwrap_or(g_big + 1);
    let m = insertion_index(knot, q, prev, removed, next);

    let coarse: Vec<usize> = rest.iter().map(|&k| regrid_index(k, g_big, g)).collect();
    if coarse.windows(2).any(|w| w[0] >= w[1]) {
        return None;
    }
    if coarse
        .iter()
        .zip(&rest)
        .any(|(&c, &r)| regrid_index(c, g, g_big) != r)
    {
        return None;
    }
    let mut theta = y.theta().to_vec();
    let seed = theta.remove(m);
    let seed_mean = seed_mean(y.knots(), m, &theta);
    let state = SplineState::new(q, y.period(), coarse, theta).ok()?;
    Some(DeathPlan {
        state,
        seed,
        seed_mean,
        free: g_big - rest.len(),
    })
}

/// Removes inner knot `knot` of `y`. `None` when the reverse birth could
/// not have produced `y`.
pub fn death_to(
    post: &Posterior,
    sched: &MoveSchedule,
    y: &SplineState,
    lp_y: f64,
    knot: usize,
) -> Option<Proposal> {
    let plan = plan_death(y, knot)?;
    let j = plan.state.dim();
    let lp_x = post.log_post(&plan.state);
    let log_ratio = -birth_log_ratio(
        sched,
        y.order(),
        j,
        plan.free,
        lp_x,
        lp_y,
        plan.seed,
        plan.seed_mean,
    );
    Some(Proposal {
        kind: MoveKind::Death,
        state: plan.state,
        log_post: lp_x,
        log_ratio,
    })
}

pub fn birth_move<R: Rng + ?Sized>(
    post: &Posterior,
    sched: &MoveSchedule,
    x: &SplineState,
    lp_x: f64,
    rng: &mut R,
) -> Step {
    let geo = BirthGeometry::of(x);
    if geo.free == 0 {
        return metropolis(x, lp_x, None, rng);
    }
    let new_pos = geo.nth_free(rng.random_range(0..geo.free));
    let (y, m) = match insert_knot(x, &geo.rounded, new_pos, 0.0) {
        Some(v) => v,
        None => return metropolis(x, lp_x, None, rng),
    };
    let eta = seed_mean(y.knots(), m, x.theta());
    let z: f64 = rng.sample(StandardNormal);
    let proposal = birth_to(post, sched, x, lp_x, new_pos, eta + z);
    metropolis(x, lp_x, proposal, rng)
}

pub fn death_move<R: Rng + ?Sized>(
    post: &Posterior,
    sched: &MoveSchedule,
    y: &SplineState,
    lp_y: f64,
    rng: &mut R,
) -> Step {
    let n_inner = y.grid_idx().len();
    if n_inner == 0 {
        return metropolis(y, lp_y, None, rng);
    }
    let knot = rng.random_range(0..n_inner);
    let proposal = death_to(post, sched, y, lp_y, knot);
    metropolis(y, lp_y, proposal, rng)
}

// ---------------------------------------------------------------------------
// chain driver

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainConfig {
    pub schedule: MoveSchedule,
    /// Initial random-walk scale.
    pub sigma: f64,
    /// Perturb proposals per adaptation window.
    pub adapt_window: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainDraw {
    pub iteration: usize,
    pub state: SplineState,
    pub kind: MoveKind,
    pub accepted: bool,
    pub log_post: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MoveStats {
    pub proposed: [u64; 4],
    pub accepted: [u64; 4],
}

impl MoveStats {
    pub fn record(&mut self, kind: MoveKind, accepted: bool) {
        self.proposed[kind.index()] += 1;
        if accepted {
            self.accepted[kind.index()] += 1;
        }
    }

    pub fn rate(&self, kind: MoveKind) -> f64 {
        let p = self.proposed[kind.index()];
        if p == 0 {
            0.0
        } else {
            self.accepted[kind.index()] as f64 / p as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChainRun {
    pub draws: Vec<ChainDraw>,
    /// Counts over every iteration.
    pub stats: MoveStats,
    /// Counts over post-burn-in iterations only.
    pub sampling_stats: MoveStats,
    pub final_sigma: f64,
}

/// Applies one randomly selected move.
pub fn step<R: Rng + ?Sized>(
    post: &Posterior,
    sched: &MoveSchedule,
    x: &SplineState,
    lp_x: f64,
    sigma: f64,
    rng: &mut R,
) -> (MoveKind, Step) {
    let kind = select_move(x.dim(), sched, rng);
    let s = match kind {
        MoveKind::Perturb => perturb_move(post, x, lp_x, sigma, rng),
        MoveKind::KnotMove => knot_move(post, x, lp_x, rng),
        MoveKind::Birth => birth_move(post, sched, x, lp_x, rng),
        MoveKind::Death => death_move(post, sched, x, lp_x, rng),
    };
    (kind, s)
}

/// Runs one chain of `iterations` steps. Draws after `burn_in` are kept
/// every `thin` steps; `σ` adapts during burn-in and is frozen afterwards.
pub fn run_chain(
    cfg: &ChainConfig,
    post: &Posterior,
    init: SplineState,
    iterations: usize,
    burn_in: usize,
    thin: usize,
    seed: u64,
) -> Result<ChainRun> {
    if iterations <= burn_in {
        return Err(validation(format!(
            "iterations ({iterations}) must exceed burn-in ({burn_in})"
        )));
    }
    if thin == 0 {
        return Err(validation("thin must be at least 1"));
    }
    if !(cfg.sigma > 0.0) {
        return Err(validation(format!(
            "sigma must be positive, got {}",
            cfg.sigma
        )));
    }
    init.validate_for(&post.prior)?;
    let mut lp = post.log_post(&init);
    if !lp.is_finite() {
        return Err(validation(
            "initial state has zero posterior density under the data",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adapt = AdaptState::new(cfg.sigma);
    if burn_in == 0 {
        adapt.freeze();
    }
    let mut state = init;
    let mut stats = MoveStats::default();
    let mut sampling_stats = MoveStats::default();
    let mut draws = Vec::with_capacity((iterations - burn_in) / thin + 1);

    for it in 1..=iterations {
        let (kind, s) = step(post, &cfg.schedule, &state, lp, adapt.sigma, &mut rng);
        state = s.state;
        lp = s.log_post;
        stats.record(kind, s.accepted);
        if it > burn_in {
            sampling_stats.record(kind, s.accepted);
        }
        if kind == MoveKind::Perturb && !adapt.frozen {
            adapt.record(s.accepted);
            adapt = adapt_sigma(adapt, cfg.adapt_window);
        }
        if it == burn_in {
            adapt.freeze();
        }
        if it > burn_in && (it - burn_in).is_multiple_of(thin) {
            debug_assert!(state.validate_for(&post.prior).is_ok());
            debug_assert!(lp.is_finite());
            draws.push(ChainDraw {
                iteration: it,
                state: state.clone(),
                kind,
                accepted: s.accepted,
                log_post: lp,
            });
        }
    }
    Ok(ChainRun {
        draws,
        stats,
        sampling_stats,
        final_sigma: adapt.sigma,
    })
}

/// Flat start at `j = q` with every coefficient at the clamped mean rate.
pub fn flat_init(prior: &PriorConfig, likelihood: &Likelihood) -> Result<SplineState> {
    let level = likelihood
        .mean_rate()
        .unwrap_or(0.5 * (prior.lower + prior.upper))
        .clamp(prior.lower, prior.upper);
    SplineState::constant(prior.order, prior.period, level)
}

/// Starting random-walk scale.
///
/// With data this is `√(r̄ q / (nT))`, roughly the posterior spread of one
/// coefficient of a flat spline with `q` basis functions, given the mean
/// rate `r̄` over the exposure `nT`. Without data it is a tenth of the
/// coefficient range.
pub fn initial_sigma(prior: &PriorConfig, likelihood: &Likelihood) -> f64 {
    let fallback = 0.1 * (prior.upper - prior.lower);
    match (likelihood.mean_rate(), likelihood.exposure()) {
        (Some(rate), Some(exposure)) if rate > 0.0 => {
            let level = rate.clamp(prior.lower, prior.upper);
            (level * prior.order as f64 / exposure).sqrt()
        }
        _ => fallback,
    }
}
