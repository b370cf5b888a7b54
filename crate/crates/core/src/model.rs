//! Poisson log-likelihoods for a spline intensity.
//!
//! Both likelihoods are returned on the log scale; `-inf` stands for zero
//! likelihood (a non-positive bin mean or intensity at an event).

use crate::bspline::Antiderivative;
use crate::data::{BinnedCounts, DataLayout, EventPath};
use crate::error::{validation, Result};
use crate::prior::SplineState;

/// Expected count per bin and period, `λ_j = ∫_{(j-1)Δ}^{jΔ} λ(t) dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinIntensities {
    pub values: Vec<f64>,
    pub layout: DataLayout,
}

fn check_period(state: &SplineState, layout: &DataLayout) -> Result<()> {
    if state.period() != layout.period() {
        return Err(validation(format!(
            "spline period {} differs from data period {}",
            state.period(),
            layout.period()
        )));
    }
    Ok(())
}

pub fn bin_intensities(state: &SplineState, layout: &DataLayout) -> Result<BinIntensities> {
    check_period(state, layout)?;
    Ok(BinIntensities {
        values: bin_values(state, layout),
        layout: *layout,
    })
}

fn bin_values(state: &SplineState, layout: &DataLayout) -> Vec<f64> {
    let anti = Antiderivative::new(state.knots(), state.theta());
    let m = layout.bins();
    let mut prev = 0.0;
    (1..=m)
        .map(|j| {
            let next = anti.value(layout.bin_edge(j));
            let v = next - prev;
            prev = next;
            v
        })
        .collect()
}

/// `Σ_j [S_j ln λ_j - n λ_j] - Σ_ij ln C_ij!` given the bin means.
pub fn loglik_from_bins(bins: &[f64], bc: &BinnedCounts) -> f64 {
    let n = bc.layout().periods() as f64;
    let mut acc = -bc.log_factorial_sum();
    for (&lam, &s) in bins.iter().zip(bc.col_sums()) {
        if !(lam > 0.0) {
            return f64::NEG_INFINITY;
        }
        acc += s as f64 * lam.ln() - n * lam;
    }
    acc
}

pub fn loglik_binned(state: &SplineState, bc: &BinnedCounts) -> Result<f64> {
    check_period(state, bc.layout())?;
    Ok(loglik_from_bins(&bin_values(state, bc.layout()), bc))
}

/// Full-path log-likelihood relative to a unit-rate Poisson process.
pub fn loglik_full(state: &SplineState, ep: &EventPath) -> Result<f64> {
    check_period(state, ep.layout())?;
    Ok(loglik_folded(state, &ep.folded(), ep.layout().periods()))
}

fn loglik_folded(state: &SplineState, folded: &[f64], periods: usize) -> f64 {
    let anti = Antiderivative::new(state.knots(), state.theta());
    let mut acc = -(periods as f64) * (anti.total() - state.period());
    for &t in folded {
        let lam = state.eval(t);
        if !(lam > 0.0) {
            return f64::NEG_INFINITY;
        }
        acc += lam.ln();
    }
    acc
}

/// The data term of a posterior.
#[derive(Debug, Clone)]
pub enum Likelihood {
    Binned(BinnedCounts),
    Full {
        periods: usize,
        period: f64,
        folded: Vec<f64>,
    },
    /// Constant likelihood; the posterior is the prior.
    Flat,
}

impl Likelihood {
    pub fn binned(bc: BinnedCounts) -> Self {
        Self::Binned(bc)
    }

    pub fn full(ep: &EventPath) -> Self {
        Self::Full {
            periods: ep.layout().periods(),
            period: ep.layout().period(),
            folded: ep.folded(),
        }
    }

    pub fn period(&self) -> Option<f64> {
        match self {
            Self::Binned(bc) => Some(bc.layout().period()),
            Self::Full { period, .. } => Some(*period),
            Self::Flat => None,
        }
    }

    pub fn log_lik(&self, state: &SplineState) -> f64 {
        match self {
            Self::Binned(bc) => loglik_from_bins(&bin_values(state, bc.layout()), bc),
            Self::Full {
                periods, folded, ..
            } => loglik_folded(state, folded, *periods),
            Self::Flat => 0.0,
        }
    }

    /// Total observed time `nT`.
    pub fn exposure(&self) -> Option<f64> {
        match self {
            Self::Binned(bc) => {
                let l = bc.layout();
                Some(l.period() * l.periods() as f64)
            }
            Self::Full {
                periods, period, ..
            } => Some(period * *periods as f64),
            Self::Flat => None,
        }
    }

    /// Events per unit time, used for flat initialization.
    pub fn mean_rate(&self) -> Option<f64> {
        let events = match self {
            Self::Binned(bc) => bc.total() as f64,
            Self::Full { folded, .. } => folded.len() as f64,
            Self::Flat => return None,
        };
        Some(events / self.exposure()?)
    }
}
