//! Exact simulation of periodic inhomogeneous Poisson processes by thinning.

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::data::{DataLayout, EventPath};
use crate::error::{domain, validation, Result};
use crate::metrics::{Intensity, Quadrature};

/// Calls `keep` for every accepted event time in `[0, horizon]`, in order.
fn thin<I, R, F>(intensity: &I, bound: f64, horizon: f64, rng: &mut R, mut keep: F) -> Result<()>
where
    I: Intensity + ?Sized,
    R: Rng + ?Sized,
    F: FnMut(f64),
{
    let period = intensity.period();
    let gaps = Exp::new(bound).map_err(|e| validation(format!("bad bound {bound}: {e}")))?;
    let mut t = 0.0;
    loop {
        t += gaps.sample(rng);
        if t > horizon {
            return Ok(());
        }
        let v = intensity.eval(t % period);
        if v > bound {
            return Err(domain(format!(
                "intensity {v} exceeds bound {bound} at t = {t}"
            )));
        }
        if v < 0.0 {
            return Err(domain(format!("negative intensity {v} at t = {t}")));
        }
        if rng.random::<f64>() * bound < v {
            keep(t);
        }
    }
}

/// Simulates `layout.periods()` periods of the process with intensity
/// `intensity` (extended periodically), given `bound ≥ sup λ`.
pub fn simulate_path<I, R>(
    intensity: &I,
    bound: f64,
    layout: &DataLayout,
    rng: &mut R,
) -> Result<EventPath>
where
    I: Intensity + ?Sized,
    R: Rng + ?Sized,
{
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(validation(format!("bound must be positive, got {bound}")));
    }
    if intensity.period() != layout.period() {
        return Err(validation(format!(
            "intensity period {} differs from layout period {}",
            intensity.period(),
            layout.period()
        )));
    }
    let horizon = layout.period() * layout.periods() as f64;
    let mut times = Vec::new();
    thin(intensity, bound, horizon, rng, |t| times.push(t))?;
    EventPath::new(*layout, times)
}

/// Monte Carlo check of `E ∫f dN = n∫fλ` and `Var ∫f dN = n∫f²λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentReport {
    pub replications: usize,
    pub mean: f64,
    pub mean_expected: f64,
    pub mean_z: f64,
    pub variance: f64,
    pub variance_expected: f64,
    pub variance_z: f64,
}

pub fn moment_check<I, F, R>(
    intensity: &I,
    f: F,
    bound: f64,
    periods: usize,
    replications: usize,
    rng: &mut R,
) -> Result<MomentReport>
where
    I: Intensity + ?Sized,
    F: Fn(f64) -> f64,
    R: Rng + ?Sized,
{
    if replications < 2 {
        return Err(validation("need at least two replications"));
    }
    if periods == 0 {
        return Err(validation("need at least one period"));
    }
    let period = intensity.period();
    let horizon = period * periods as f64;
    let mut sums = Vec::with_capacity(replications);
    for _ in 0..replications {
        let mut s = 0.0;
        thin(intensity, bound, horizon, rng, |t| s += f(t % period))?;
        sums.push(s);
    }
    let r = replications as f64;
    let mean = sums.iter().sum::<f64>() / r;
    let m2 = sums.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / r;
    let m4 = sums.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / r;
    let variance = m2 * r / (r - 1.0);

    let quad = Quadrature::default();
    let n = periods as f64;
    let mean_expected = n * quad.integrate_along(intensity, |t, l| f(t) * l);
    let variance_expected = n * quad.integrate_along(intensity, |t, l| f(t) * f(t) * l);

    let mean_z = (mean - mean_expected) / (variance_expected / r).sqrt();
    // Standard error of the sample variance from the fourth central moment.
    let var_se = ((m4 - m2 * m2 * (r - 3.0) / (r - 1.0)) / r).max(0.0).sqrt();
    let variance_z = (variance - variance_expected) / var_se;
    Ok(MomentReport {
        replications,
        mean,
        mean_expected,
        mean_z,
        variance,
        variance_expected,
        variance_z,
    })
}
