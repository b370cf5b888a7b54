//! Clamped B-spline bases on `[0, T]`.
//!
//! A [`KnotSet`] of order `q` holds the inner knots and the full knot vector
//! with `q`-fold boundary knots at `0` and `T`. Basis values come from the
//! Cox–de Boor recursion in its triangular form; integrals use the
//! antiderivative identity
//!
//! ```text
//! ∫_0^x B_{i,q}(s) ds = (t_{i+q} - t_i) / q · Σ_{l > i} B_{l,q+1}(x)
//! ```
//!
//! on the knot vector extended by one extra boundary knot at each end, so
//! integration is exact up to floating point.
//!
//! Evaluation is closed on the right: at `t = T` the last basis function is 1.

use crate::error::{domain, validation, Result};
use crate::quadrature::GaussLegendre;

/// Largest supported spline order. Fixed-size scratch buffers are sized from it.
pub const MAX_ORDER: usize = 10;

const SCRATCH: usize = MAX_ORDER + 2;

#[derive(Debug, Clone, PartialEq)]
pub struct KnotSet {
    order: usize,
    period: f64,
    inner: Vec<f64>,
    full: Vec<f64>,
}

impl KnotSet {
    pub fn new(order: usize, period: f64, inner: Vec<f64>) -> Result<Self> {
        if !(2..=MAX_ORDER).contains(&order) {
            return Err(validation(format!(
                "spline order must be in [2, {MAX_ORDER}], got {order}"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(validation(format!("period must be positive, got {period}")));
        }
        for (i, &k) in inner.iter().enumerate() {
            if !(k > 0.0 && k < period) {
                return Err(validation(format!(
                    "inner knot {i} = {k} is outside (0, {period})"
                )));
            }
            if i > 0 && k <= inner[i - 1] {
                return Err(validation(format!(
                    "inner knot {i} = {k} does not exceed knot {} = {}",
                    i - 1,
                    inner[i - 1]
                )));
            }
        }
        let mut full = Vec::with_capacity(inner.len() + 2 * order);
        full.extend(std::iter::repeat_n(0.0, order));
        full.extend_from_slice(&inner);
        full.extend(std::iter::repeat_n(period, order));
        Ok(Self {
            order,
            period,
            inner,
            full,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn inner(&self) -> &[f64] {
        &self.inner
    }

    pub fn full(&self) -> &[f64] {
        &self.full
    }

    /// Number of basis functions `j = #inner + q`.
    pub fn dim(&self) -> usize {
        self.inner.len() + self.order
    }

    /// Distinct breakpoints `0, inner..., T`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.inner.len() + 2);
        v.push(0.0);
        v.extend_from_slice(&self.inner);
        v.push(self.period);
        v
    }

    /// Writes the `q` possibly-nonzero basis values at `t` into `out[..q]`
    /// and returns the index of the first one. `t` must lie in `[0, T]`.
    pub fn nonzero_basis(&self, t: f64, out: &mut [f64]) -> usize {
        let n = self.dim();
        let span = find_span(&self.full, self.order, n, t);
        basis_funs(&self.full, self.order, span, t, out);
        span + 1 - self.order
    }

    /// Evaluates `Σ θ_i B_i(t)` without bounds checks on `t`.
    pub(crate) fn eval_unchecked(&self, theta: &[f64], t: f64) -> f64 {
        let mut buf = [0.0; SCRATCH];
        let first = self.nonzero_basis(t, &mut buf);
        buf[..self.order]
            .iter()
            .zip(&theta[first..first + self.order])
            .map(|(b, c)| b * c)
            .sum()
    }
}

/// Basis values at a point; `values[i]` is `B_i(at)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisValues {
    pub values: Vec<f64>,
    pub at: f64,
}

pub fn make_knot_set(order: usize, period: f64, inner: Vec<f64>) -> Result<KnotSet> {
    KnotSet::new(order, period, inner)
}

fn check_time(ks: &KnotSet, t: f64) -> Result<()> {
    if !(t >= 0.0 && t <= ks.period) {
        return Err(domain(format!("t = {t} outside [0, {}]", ks.period)));
    }
    Ok(())
}

fn check_theta(ks: &KnotSet, theta: &[f64]) -> Result<()> {
    if theta.len() != ks.dim() {
        return Err(validation(format!(
            "coefficient vector has length {}, basis has dimension {}",
            theta.len(),
            ks.dim()
        )));
    }
    Ok(())
}

pub fn eval_basis(ks: &KnotSet, t: f64) -> Result<BasisValues> {
    check_time(ks, t)?;
    let mut buf = [0.0; SCRATCH];
    let first = ks.nonzero_basis(t, &mut buf);
    let mut values = vec![0.0; ks.dim()];
    values[first..first + ks.order].copy_from_slice(&buf[..ks.order]);
    Ok(BasisValues { values, at: t })
}

pub fn eval_spline(ks: &KnotSet, theta: &[f64], t: f64) -> Result<f64> {
    check_theta(ks, theta)?;
    check_time(ks, t)?;
    Ok(ks.eval_unchecked(theta, t))
}

pub fn integrate_spline(ks: &KnotSet, theta: &[f64], a: f64, b: f64) -> Result<f64> {
    check_theta(ks, theta)?;
    if a > b {
        return Err(domain(format!("integration bounds reversed: {a} > {b}")));
    }
    check_time(ks, a)?;
    check_time(ks, b)?;
    let anti = Antiderivative::new(ks, theta);
    Ok(anti.value(b) - anti.value(a))
}

/// Normalized overlaps `w_i ∝ ∫ B_index B_i` over `[0, T]` (`index` is 0-based).
///
/// Each knot interval is integrated with a `q`-point Gauss–Legendre rule,
/// which is exact for the degree `2(q-1)` products.
pub fn basis_inner_products(ks: &KnotSet, index: usize) -> Result<Vec<f64>> {
    let n = ks.dim();
    if index >= n {
        return Err(validation(format!(
            "basis index {index} out of range for dimension {n}"
        )));
    }
    let q = ks.order;
    let rule = GaussLegendre::new(q);
    let mut w = vec![0.0; n];
    // B_index is supported on [full[index], full[index + q]].
    let lo = ks.full[index];
    let hi = ks.full[index + q];
    let bps = ks.breakpoints();
    let mut buf = [0.0; SCRATCH];
    for pair in bps.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b <= lo || a >= hi {
            continue;
        }
        for (x, wt) in rule.mapped(a, b) {
            let first = ks.nonzero_basis(x, &mut buf);
            if index < first || index >= first + q {
                continue;
            }
            let bm = buf[index - first];
            for r in 0..q {
                w[first + r] += wt * bm * buf[r];
            }
        }
    }
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    Ok(w)
}

/// Antiderivative `x ↦ ∫_0^x s(t) dt` of a spline, as an order `q+1` spline.
#[derive(Debug, Clone)]
pub struct Antiderivative {
    order: usize,
    knots: Vec<f64>,
    coef: Vec<f64>,
}

impl Antiderivative {
    pub fn new(ks: &KnotSet, theta: &[f64]) -> Self {
        let q = ks.order;
        let n = ks.dim();
        let t = &ks.full;
        let mut knots = Vec::with_capacity(t.len() + 2);
        knots.push(0.0);
        knots.extend_from_slice(t);
        knots.push(ks.period);
        let mut coef = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        coef.push(0.0);
        for i in 0..n {
            acc += theta[i] * (t[i + q] - t[i]) / q as f64;
            coef.push(acc);
        }
        Self {
            order: q + 1,
            knots,
            coef,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        let n = self.coef.len();
        let span = find_span(&self.knots, self.order, n, x);
        let mut buf = [0.0; SCRATCH];
        basis_funs(&self.knots, self.order, span, x, &mut buf);
        let first = span + 1 - self.order;
        buf[..self.order]
            .iter()
            .zip(&self.coef[first..first + self.order])
            .map(|(b, c)| b * c)
            .sum()
    }

    /// Integral over the whole domain.
    pub fn total(&self) -> f64 {
        *self.coef.last().unwrap()
    }
}

/// Span index `s` with `knots[s] <= x < knots[s+1]`, restricted to `[k-1, n-1]`.
fn find_span(knots: &[f64], order: usize, n: usize, x: f64) -> usize {
    if x >= knots[n] {
        return n - 1;
    }
    let s = knots.partition_point(|&u| u <= x);
    s.saturating_sub(1).clamp(order - 1, n - 1)
}

/// Triangular Cox–de Boor: the `order` nonzero basis values on span `span`.
fn basis_funs(knots: &[f64], order: usize, span: usize, x: f64, out: &mut [f64]) {
    let mut left = [0.0; SCRATCH];
    let mut right = [0.0; SCRATCH];
    out[0] = 1.0;
    for j in 1..order {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            let denom = right[r + 1] + left[j - r];
            let temp = if denom == 0.0 { 0.0 } else { out[r] / denom };
            out[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        out[j] = saved;
    }
}
