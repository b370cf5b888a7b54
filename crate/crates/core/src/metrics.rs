//! Distances between intensities on `[0, T]` and the laws they induce.
//!
//! Integrands with `√λ` or `log λ` are not polynomial, so they are
//! integrated by Gauss–Legendre quadrature on the union of both functions'
//! breakpoints, each piece further split into equal panels.

use crate::bspline::integrate_spline;
use crate::data::DataLayout;
use crate::error::{domain, Result};
use crate::prior::SplineState;
use crate::quadrature::GaussLegendre;

/// An intensity function on one period `[0, T]`.
pub trait Intensity: Sync {
    fn eval(&self, t: f64) -> f64;

    fn period(&self) -> f64;

    /// Points in `[0, T]`, including both ends, where the function may be non-smooth.
    fn breakpoints(&self) -> Vec<f64> {
        vec![0.0, self.period()]
    }

    fn integrate(&self, a: f64, b: f64) -> f64 {
        Quadrature::default().integrate_one(self, a, b)
    }
}

impl Intensity for SplineState {
    fn eval(&self, t: f64) -> f64 {
        SplineState::eval(self, t)
    }

    fn period(&self) -> f64 {
        SplineState::period(self)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.knots().breakpoints()
    }

    fn integrate(&self, a: f64, b: f64) -> f64 {
        integrate_spline(self.knots(), self.theta(), a, b).expect("valid state and interval")
    }
}

/// `λ(t) = level`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant {
    pub level: f64,
    pub period: f64,
}

impl Intensity for Constant {
    fn eval(&self, _t: f64) -> f64 {
        self.level
    }

    fn period(&self) -> f64 {
        self.period
    }

    fn integrate(&self, a: f64, b: f64) -> f64 {
        self.level * (b - a)
    }
}

/// `λ(t) = a + b·sin(2πt/T)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sine {
    pub base: f64,
    pub amplitude: f64,
    pub period: f64,
}

impl Sine {
    fn omega(&self) -> f64 {
        std::f64::consts::TAU / self.period
    }
}

impl Intensity for Sine {
    fn eval(&self, t: f64) -> f64 {
        self.base + self.amplitude * (self.omega() * t).sin()
    }

    fn period(&self) -> f64 {
        self.period
    }

    fn integrate(&self, a: f64, b: f64) -> f64 {
        let w = self.omega();
        self.base * (b - a) + self.amplitude * ((w * a).cos() - (w * b).cos()) / w
    }
}

/// Wraps a closure as an intensity.
pub struct FnIntensity<F> {
    pub f: F,
    pub period: f64,
}

impl<F: Fn(f64) -> f64 + Sync> Intensity for FnIntensity<F> {
    fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    fn period(&self) -> f64 {
        self.period
    }
}

/// Composite Gauss–Legendre rule.
#[derive(Debug, Clone)]
pub struct Quadrature {
    rule: GaussLegendre,
    panels: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self::new(16, 64)
    }
}

impl Quadrature {
    /// `order` nodes per panel and at least `panels` panels over a period.
    pub fn new(order: usize, panels: usize) -> Self {
        Self {
            rule: GaussLegendre::new(order),
            panels: panels.max(1),
        }
    }

    fn pieces(&self, breaks: &[f64], period: f64) -> Vec<(f64, f64)> {
        let h = period / self.panels as f64;
        let mut out = Vec::new();
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let k = ((b - a) / h).ceil().max(1.0) as usize;
            let step = (b - a) / k as f64;
            for i in 0..k {
                let lo = a + i as f64 * step;
                let hi = if i + 1 == k { b } else { lo + step };
                out.push((lo, hi));
            }
        }
        out
    }

    fn integrate_one<I: Intensity + ?Sized>(&self, l: &I, a: f64, b: f64) -> f64 {
        let mut breaks: Vec<f64> = l
            .breakpoints()
            .into_iter()
            .filter(|&x| x > a && x < b)
            .collect();
        breaks.insert(0, a);
        breaks.push(b);
        self.pieces(&breaks, l.period())
            .into_iter()
            .map(|(lo, hi)| self.rule.integrate(lo, hi, |t| l.eval(t)))
            .sum()
    }

    /// `∫_0^T g(t, λ(t)) dt`.
    pub fn integrate_along<I, G>(&self, l: &I, mut g: G) -> f64
    where
        I: Intensity + ?Sized,
        G: FnMut(f64, f64) -> f64,
    {
        let mut total = 0.0;
        for (lo, hi) in self.pieces(&l.breakpoints(), l.period()) {
            for (t, w) in self.rule.mapped(lo, hi) {
                total += w * g(t, l.eval(t));
            }
        }
        total
    }

    /// `∫_0^T g(λ(t), λ'(t)) dt`.
    pub fn integrate_pair<A, B, G>(&self, l: &A, lp: &B, mut g: G) -> f64
    where
        A: Intensity + ?Sized,
        B: Intensity + ?Sized,
        G: FnMut(f64, f64) -> f64,
    {
        let breaks = merged_breakpoints(l, lp);
        let mut total = 0.0;
        for (lo, hi) in self.pieces(&breaks, l.period()) {
            for (t, w) in self.rule.mapped(lo, hi) {
                total += w * g(l.eval(t), lp.eval(t));
            }
        }
        total
    }
}

fn merged_breakpoints<A, B>(l: &A, lp: &B) -> Vec<f64>
where
    A: Intensity + ?Sized,
    B: Intensity + ?Sized,
{
    let mut b = l.breakpoints();
    b.extend(lp.breakpoints());
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// `∫ (√λ - √λ')²`, with `√` of negative values treated as 0.
fn sq_root_gap<A, B>(l: &A, lp: &B, quad: &Quadrature) -> f64
where
    A: Intensity + ?Sized,
    B: Intensity + ?Sized,
{
    quad.integrate_pair(l, lp, |a, b| {
        let d = a.max(0.0).sqrt() - b.max(0.0).sqrt();
        d * d
    })
}

/// Squared Hellinger distance between the Poisson process laws,
/// `2(1 - exp(-½ ∫(√λ - √λ')²))`.
pub fn hellinger_sq<A, B>(l: &A, lp: &B) -> Result<f64>
where
    A: Intensity + ?Sized,
    B: Intensity + ?Sized,
{
    hellinger_sq_with(l, lp, &Quadrature::default())
}

pub fn hellinger_sq_with<A, B>(l: &A, lp: &B, quad: &Quadrature) -> Result<f64>
where
    A: Intensity + ?Sized,
    B: Intensity + ?Sized,
{
    let mut negative = None;
    let gap = quad.integrate_pair(l, lp, |a, b| {
        if (a < 0.0 || b < 0.0) && negative.is_none() {
            negative = Some(a.min(b));
        }
        let d = a.max(0.0).sqrt() - b.max(0.0).sqrt();
        d * d
    });
    if let Some(v) = negative {
        return Err(domain(format!("negative intensity value {v}")));
    }
    Ok(2.0 * (1.0 - (-0.5 * gap).exp()))
}

/// `K(p_λ, p_λ') = ∫(λ - λ') + ∫ λ' log(λ'/λ)`; `+∞` if `λ` vanishes where `λ' > 0`.
pub fn kl<A, B>(l: &A, lp: &B) -> f64
where
    A: Intensity + ?Sized,
    B: Intensity + ?Sized,
{
    kl_with(l, lp, &Quadrature::default())
}

pub fn kl_with<A, B>(l: &A, lp: &B, quad: &Quadrature) -> f64
where
    A: Intensity + ?Sized,
    B: Intensity + ?Sized,
{
    quad.integrate_pair(l, lp, |a, b| {
        if b <= 0.0 {
            a - b
        } else if a <= 0.0 {
            f64::INFINITY
        } else {
            a - b + b * (b / a).ln()
        }
    })
}

/// `V(p_λ, p_λ') = ∫ λ' log²(λ'/λ)`.
pub fn variance_v<A, B>(l: &A, lp: &B) -> f64
where
    A: Intensity + ?Sized,
    B: Intensity + ?Sized,
{
    variance_v_with(l, lp, &Quadrature::default())
}

pub fn variance_v_with<A, B>(l: &A, lp: &B, quad: &Quadrature) -> f64
where
    A: Intensity + ?Sized,
    B: Intensity + ?Sized,
{
    quad.integrate_pair(l, lp, |a, b| {
        if b <= 0.0 {
            0.0
        } else if a <= 0.0 {
            f64::INFINITY
        } else {
            let r = (b / a).ln();
            b * r * r
        }
    })
}

/// `ρ = (Σ_j (√λ_j - √λ'_j)²)^{1/2}` over the bins of `layout`.
pub fn rho<A, B>(l: &A, lp: &B, layout: &DataLayout) -> f64
where
    A: Intensity + ?Sized,
    B: Intensity + ?Sized,
{
    (0..layout.bins())
        .map(|j| {
            let (a, b) = (layout.bin_edge(j), layout.bin_edge(j + 1));
            let d = l.integrate(a, b).max(0.0).sqrt() - lp.integrate(a, b).max(0.0).sqrt();
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// `‖√λ - √λ'‖₂`.
pub fn sqrt_l2<A, B>(l: &A, lp: &B) -> f64
where
    A: Intensity + ?Sized,
    B: Intensity + ?Sized,
{
    sq_root_gap(l, lp, &Quadrature::default()).sqrt()
}

/// Number of uniform points used by [`sup_dist`], besides breakpoints.
pub const SUP_GRID: usize = 4096;

/// `sup |λ - λ'|` over a uniform grid plus both breakpoint sets.
pub fn sup_dist<A, B>(l: &A, lp: &B) -> f64
where
    A: Intensity + ?Sized,
    B: Intensity + ?Sized,
{
    let period = l.period();
    let grid = (0..SUP_GRID).map(|i| period * i as f64 / (SUP_GRID - 1) as f64);
    grid.chain(merged_breakpoints(l, lp))
        .map(|t| (l.eval(t) - lp.eval(t)).abs())
        .fold(0.0, f64::max)
}

/// Slack allowed for quadrature error in [`check_lemma1`].
pub const INEQUALITY_SLACK: f64 = 1e-8;

/// Outcome of the three inequalities relating law distances to intensity distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityReport {
    /// `(‖√λ-√λ'‖₂ ∧ 1)/√2 ≤ h ≤ √2 (‖√λ-√λ'‖₂ ∧ 1)`.
    pub hellinger: bool,
    /// `K ≤ 3‖√λ-√λ'‖₂² + V`.
    pub kullback: bool,
    /// `‖√λ-√λ'‖₂² ≤ ¼ ∫ (λ ∨ λ') log²(λ/λ')`.
    pub l2: bool,
}

impl InequalityReport {
    pub fn all(&self) -> bool {
        self.hellinger && self.kullback && self.l2
    }
}

pub fn check_lemma1<A, B>(l: &A, lp: &B) -> Result<InequalityReport>
where
    A: Intensity + ?Sized,
    B: Intensity + ?Sized,
{
    let quad = Quadrature::default();
    let gap = sq_root_gap(l, lp, &quad);
    let norm = gap.sqrt();
    let h = hellinger_sq_with(l, lp, &quad)?.sqrt();
    let capped = norm.min(1.0);
    let hellinger = capped / std::f64::consts::SQRT_2 <= h + INEQUALITY_SLACK
        && h <= std::f64::consts::SQRT_2 * capped + INEQUALITY_SLACK;
    let k = kl_with(l, lp, &quad);
    let v = variance_v_with(l, lp, &quad);
    let kullback = k <= 3.0 * gap + v + INEQUALITY_SLACK;
    let log_sq = quad.integrate_pair(l, lp, |a, b| {
        let r = (a / b).ln();
        a.max(b) * r * r
    });
    let l2 = gap <= 0.25 * log_sq + INEQUALITY_SLACK;
    Ok(InequalityReport {
        hellinger,
        kullback,
        l2,
    })
}

/// All distances at once, as reported by the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distances {
    pub hellinger_sq: f64,
    pub kl: f64,
    pub variance_v: f64,
    pub rho: Option<f64>,
    pub sqrt_l2: f64,
    pub sup: f64,
}

pub fn distances<A, B>(l: &A, lp: &B, layout: Option<&DataLayout>) -> Result<Distances>
where
    A: Intensity + ?Sized,
    B: Intensity + ?Sized,
{
    Ok(Distances {
        hellinger_sq: hellinger_sq(l, lp)?,
        kl: kl(l, lp),
        variance_v: variance_v(l, lp),
        rho: layout.map(|lay| rho(l, lp, lay)),
        sqrt_l2: sqrt_l2(l, lp),
        sup: sup_dist(l, lp),
    })
}
