//! Free-knot spline prior.
//!
//! A draw picks the dimension `J = q + Poisson(μ - q)`, then `J - q` distinct
//! positions from a regular grid of `G(J) = J²` interior points
//! `i·T/(J² + 1)`, then `J` coefficients i.i.d. uniform on `[M₁, M₂]`.
//!
//! Knots are stored as grid indices so equality between knots is exact.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::bspline::{KnotSet, MAX_ORDER};
use crate::error::{validation, Result};
use crate::math::{ln_choose, ln_poisson_pmf};

/// Number of candidate interior knot positions at dimension `j`.
pub fn grid_size(j: usize) -> usize {
    j * j
}

/// Position in `(0, T)` of grid index `idx` (1-based) on the grid for dimension `j`.
pub fn grid_position(idx: usize, j: usize, period: f64) -> f64 {
    idx as f64 * period / (grid_size(j) + 1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorConfig {
    pub order: usize,
    pub mean_dim: f64,
    pub lower: f64,
    pub upper: f64,
    pub period: f64,
}

impl PriorConfig {
    pub fn new(order: usize, mean_dim: f64, lower: f64, upper: f64, period: f64) -> Result<Self> {
        if !(2..=MAX_ORDER).contains(&order) {
            return Err(validation(format!(
                "order {order} outside [2, {MAX_ORDER}]"
            )));
        }
        if !(mean_dim > order as f64) {
            return Err(validation(format!(
                "mean dimension {mean_dim} must exceed the order {order}"
            )));
        }
        if !(lower >= 0.0 && upper > lower && upper.is_finite()) {
            return Err(validation(format!(
                "need 0 <= M1 < M2 < inf, got M1={lower} M2={upper}"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(validation(format!("period must be positive, got {period}")));
        }
        Ok(Self {
            order,
            mean_dim,
            lower,
            upper,
            period,
        })
    }

    /// Rate of the Poisson part of the dimension law.
    pub fn excess_mean(&self) -> f64 {
        self.mean_dim - self.order as f64
    }

    /// `ln P(J = j)`.
    pub fn log_dim_prior(&self, j: usize) -> f64 {
        if j < self.order {
            return f64::NEG_INFINITY;
        }
        ln_poisson_pmf((j - self.order) as u64, self.excess_mean())
    }

    pub fn in_bounds(&self, theta: &[f64]) -> bool {
        theta.iter().all(|&c| c >= self.lower && c <= self.upper)
    }
}

/// A point of the sampler: dimension, knot grid indices and coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineState {
    grid_idx: Vec<usize>,
    theta: Vec<f64>,
    knots: KnotSet,
}

impl SplineState {
    /// `grid_idx` holds 1-based indices on the grid for `j = theta.len()`.
    pub fn new(order: usize, period: f64, grid_idx: Vec<usize>, theta: Vec<f64>) -> Result<Self> {
        let j = theta.len();
        if j < order {
            return Err(validation(format!(
                "dimension {j} is below the spline order {order}"
            )));
        }
        if grid_idx.len() != j - order {
            return Err(validation(format!(
                "dimension {j} needs {} inner knots, got {}",
                j - order,
                grid_idx.len()
            )));
        }
        let g = grid_size(j);
        for (i, &k) in grid_idx.iter().enumerate() {
            if k == 0 || k > g {
                return Err(validation(format!(
                    "grid index {k} (knot {i}) outside [1, {g}]"
                )));
            }
            if i > 0 && k <= grid_idx[i - 1] {
                return Err(validation(format!(
                    "grid indices not strictly increasing at knot {i}"
                )));
            }
        }
        if let Some(i) = theta.iter().position(|c| !c.is_finite()) {
            return Err(validation(format!("coefficient {i} is not finite")));
        }
        let inner = grid_idx
            .iter()
            .map(|&k| grid_position(k, j, period))
            .collect();
        let knots = KnotSet::new(order, period, inner)?;
        Ok(Self {
            grid_idx,
            theta,
            knots,
        })
    }

    /// Flat spline at dimension `q` with every coefficient equal to `level`.
    pub fn constant(order: usize, period: f64, level: f64) -> Result<Self> {
        Self::new(order, period, Vec::new(), vec![level; order])
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn order(&self) -> usize {
        self.knots.order()
    }

    pub fn period(&self) -> f64 {
        self.knots.period()
    }

    pub fn grid_idx(&self) -> &[usize] {
        &self.grid_idx
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn knots(&self) -> &KnotSet {
        &self.knots
    }

    /// Same knots, new coefficients.
    pub fn with_theta(&self, theta: Vec<f64>) -> Self {
        assert_eq!(theta.len(), self.theta.len());
        Self {
            grid_idx: self.grid_idx.clone(),
            theta,
            knots: self.knots.clone(),
        }
    }

    /// Intensity at `t`, clamped into `[0, T]`.
    pub fn eval(&self, t: f64) -> f64 {
        self.knots
            .eval_unchecked(&self.theta, t.clamp(0.0, self.period()))
    }

    /// Checks the coefficient bounds of `cfg` and that the layout matches it.
    pub fn validate_for(&self, cfg: &PriorConfig) -> Result<()> {
        if self.order() != cfg.order {
            return Err(validation(format!(
                "state order {} differs from prior order {}",
                self.order(),
                cfg.order
            )));
        }
        if self.period() != cfg.period {
            return Err(validation(format!(
                "state period {} differs from prior period {}",
                self.period(),
                cfg.period
            )));
        }
        if let Some(i) = self
            .theta
            .iter()
            .position(|&c| c < cfg.lower || c > cfg.upper)
        {
            return Err(validation(format!(
                "coefficient {i} = {} outside [{}, {}]",
                self.theta[i], cfg.lower, cfg.upper
            )));
        }
        Ok(())
    }
}

pub fn sample_prior<R: Rng + ?Sized>(cfg: &PriorConfig, rng: &mut R) -> SplineState {
    let q = cfg.order;
    let extra = Poisson::new(cfg.excess_mean())
        .expect("positive Poisson rate")
        .sample(rng) as usize;
    let j = q + extra;
    let mut idx: Vec<usize> = rand::seq::index::sample(rng, grid_size(j), j - q)
        .into_iter()
        .map(|k| k + 1)
        .collect();
    idx.sort_unstable();
    let theta = (0..j)
        .map(|_| rng.random_range(cfg.lower..=cfg.upper))
        .collect();
    SplineState::new(q, cfg.period, idx, theta).expect("prior draws satisfy state invariants")
}

/// Log prior density with respect to counting measure on `(j, knots)` and
/// Lebesgue measure on the coefficients; `-inf` outside the support.
pub fn log_prior(state: &SplineState, cfg: &PriorConfig) -> f64 {
    if !cfg.in_bounds(state.theta()) {
        return f64::NEG_INFINITY;
    }
    let j = state.dim();
    let q = cfg.order;
    cfg.log_dim_prior(j)
        - ln_choose(grid_size(j) as u64, (j - q) as u64)
        - j as f64 * (cfg.upper - cfg.lower).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> PriorConfig {
        PriorConfig::new(4, 10.0, 1.0, 5.0, 24.0).unwrap()
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(grid_size(4), 16);
        for j in 4..30 {
            assert_eq!(grid_size(j) - (j - 4), j * j - j + 4);
        }
    }

    #[test]
    fn config_validation() {
        assert!(PriorConfig::new(4, 4.0, 1.0, 5.0, 24.0).is_err());
        assert!(PriorConfig::new(4, 10.0, 5.0, 5.0, 24.0).is_err());
        assert!(PriorConfig::new(4, 10.0, -1.0, 5.0, 24.0).is_err());
        assert!(PriorConfig::new(1, 10.0, 1.0, 5.0, 24.0).is_err());
    }

    #[test]
    fn state_validation() {
        assert!(SplineState::new(4, 24.0, vec![3, 3], vec![1.0; 6]).is_err());
        assert!(SplineState::new(4, 24.0, vec![3], vec![1.0; 6]).is_err());
        assert!(SplineState::new(4, 24.0, vec![0, 3], vec![1.0; 6]).is_err());
        assert!(SplineState::new(4, 24.0, vec![3, 37], vec![1.0; 6]).is_err());
        let s = SplineState::new(4, 24.0, vec![3, 36], vec![1.0; 6]).unwrap();
        assert_eq!(s.knots().inner(), &[3.0 * 24.0 / 37.0, 36.0 * 24.0 / 37.0]);
    }

    #[test]
    fn log_prior_at_minimal_dimension() {
        // mu - q = 1: ln P(J=q) = -1, C(q^2, 0) = 1.
        let c = PriorConfig::new(4, 5.0, 1.0, 5.0, 24.0).unwrap();
        let s = SplineState::constant(4, 24.0, 2.0).unwrap();
        let want = -1.0 - 4.0 * 4f64.ln();
        assert!((log_prior(&s, &c) - want).abs() < 1e-14);
    }

    #[test]
    fn log_prior_support_and_exchangeability() {
        let c = cfg();
        let a = SplineState::new(4, 24.0, vec![2, 9], vec![2.0; 6]).unwrap();
        let b = SplineState::new(4, 24.0, vec![17, 30], vec![2.0; 6]).unwrap();
        assert_eq!(log_prior(&a, &c), log_prior(&b, &c));
        let mut theta = vec![2.0; 6];
        theta[3] = 5.5;
        let out = a.with_theta(theta);
        assert_eq!(log_prior(&out, &c), f64::NEG_INFINITY);
    }

    #[test]
    fn prior_draws_satisfy_invariants() {
        let c = cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut total_dim = 0usize;
        let draws = 100_000;
        for _ in 0..draws {
            let s = sample_prior(&c, &mut rng);
            s.validate_for(&c).unwrap();
            assert!(s.grid_idx().windows(2).all(|w| w[0] < w[1]));
            assert!(s
                .grid_idx()
                .iter()
                .all(|&k| k >= 1 && k <= grid_size(s.dim())));
            assert!(s.knots().inner().iter().all(|&k| k > 0.0 && k < 24.0));
            total_dim += s.dim();
        }
        let mean = total_dim as f64 / draws as f64;
        // sd of the mean is sqrt(6 / 1e5) ~ 0.008
        assert!((mean - 10.0).abs() < 0.04, "mean dim {mean}");
    }

    #[test]
    fn minimal_dimension_frequency() {
        let c = cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200_000;
        let hits = (0..n)
            .filter(|_| sample_prior(&c, &mut rng).dim() == 4)
            .count();
        let p = (-6f64).exp();
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits as f64 / n as f64 - p).abs() < 4.0 * se);
    }

    #[test]
    fn knot_subsets_are_uniform_at_fixed_dimension() {
        // mu close to q makes j = q+1 common: G(5) = 25 single-knot subsets.
        let c = PriorConfig::new(4, 5.0, 1.0, 5.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut hist = [0usize; 26];
        let mut total = 0usize;
        for _ in 0..200_000 {
            let s = sample_prior(&c, &mut rng);
            if s.dim() == 5 {
                hist[s.grid_idx()[0]] += 1;
                total += 1;
            }
        }
        assert_eq!(hist[0], 0);
        let expected = total as f64 / 25.0;
        let chi2: f64 = hist[1..]
            .iter()
            .map(|&h| (h as f64 - expected).powi(2) / expected)
            .sum();
        // 24 degrees of freedom; 99.9% quantile is about 51.2
        assert!(chi2 < 51.2, "chi2 = {chi2}");
    }
}
