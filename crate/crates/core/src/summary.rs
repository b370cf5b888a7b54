//! Posterior summaries: pointwise credible bands, knot histograms, dimension
//! traces and per-move acceptance tables.

use std::io::Write;

use crate::error::{validation, Result};
use crate::prior::grid_position;
use crate::sampler::{ChainDraw, MoveKind, MoveStats};

/// Default number of evaluation points for a band.
pub const BAND_GRID: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct CredibleBand {
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub level: f64,
}

/// Quantile `p` of sorted data by linear interpolation between order
/// statistics at position `(n - 1)p`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Pointwise mean and central `level` interval over a uniform grid on `[0, T]`.
pub fn band(draws: &[ChainDraw], grid_points: usize, level: f64) -> Result<CredibleBand> {
    if draws.is_empty() {
        return Err(validation("no draws to summarize"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(validation(format!("level must lie in (0, 1), got {level}")));
    }
    if grid_points < 2 {
        return Err(validation("band grid needs at least two points"));
    }
    let period = draws[0].state.period();
    let grid: Vec<f64> = (0..grid_points)
        .map(|i| period * i as f64 / (grid_points - 1) as f64)
        .collect();
    let (pl, pu) = ((1.0 - level) / 2.0, (1.0 + level) / 2.0);
    let mut values = vec![0.0; draws.len()];
    let mut mean = Vec::with_capacity(grid_points);
    let mut lower = Vec::with_capacity(grid_points);
    let mut upper = Vec::with_capacity(grid_points);
    for &t in &grid {
        for (v, d) in values.iter_mut().zip(draws) {
            *v = d.state.eval(t);
        }
        mean.push(values.iter().sum::<f64>() / values.len() as f64);
        values.sort_by(f64::total_cmp);
        lower.push(quantile_sorted(&values, pl));
        upper.push(quantile_sorted(&values, pu));
    }
    Ok(CredibleBand {
        grid,
        mean,
        lower,
        upper,
        level,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnotHistogram {
    /// `bins + 1` edges from 0 to `T`.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

/// Pooled inner-knot positions of all draws, binned uniformly on `(0, T)`.
pub fn knot_histogram(draws: &[ChainDraw], bins: usize, period: f64) -> Result<KnotHistogram> {
    if bins == 0 {
        return Err(validation("histogram needs at least one bin"));
    }
    let edges = (0..=bins)
        .map(|i| period * i as f64 / bins as f64)
        .collect();
    let mut counts = vec![0u64; bins];
    for d in draws {
        let j = d.state.dim();
        for &k in d.state.grid_idx() {
            let x = grid_position(k, j, period);
            let b = ((x / period * bins as f64) as usize).min(bins - 1);
            counts[b] += 1;
        }
    }
    Ok(KnotHistogram { edges, counts })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimTrace {
    pub trace: Vec<(usize, usize)>,
    pub stats: MoveStats,
}

/// `(iteration, j)` pairs and move acceptance counts recounted from the draws.
pub fn dim_trace(draws: &[ChainDraw]) -> DimTrace {
    let mut stats = MoveStats::default();
    let trace = draws
        .iter()
        .map(|d| {
            stats.record(d.kind, d.accepted);
            (d.iteration, d.state.dim())
        })
        .collect();
    DimTrace { trace, stats }
}

fn write_header<W: Write>(out: &mut W, header: &[String]) -> Result<()> {
    for line in header {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}

pub fn write_band<W: Write>(mut out: W, header: &[String], b: &CredibleBand) -> Result<()> {
    write_header(&mut out, header)?;
    writeln!(out, "t,mean,lower,upper")?;
    for i in 0..b.grid.len() {
        writeln!(
            out,
            "{},{},{},{}",
            b.grid[i], b.mean[i], b.lower[i], b.upper[i]
        )?;
    }
    Ok(())
}

pub fn write_histogram<W: Write>(mut out: W, header: &[String], h: &KnotHistogram) -> Result<()> {
    write_header(&mut out, header)?;
    writeln!(out, "bin_left,bin_right,count")?;
    for (i, c) in h.counts.iter().enumerate() {
        writeln!(out, "{},{},{}", h.edges[i], h.edges[i + 1], c)?;
    }
    Ok(())
}

pub fn write_trace<W: Write>(mut out: W, header: &[String], d: &DimTrace) -> Result<()> {
    write_header(&mut out, header)?;
    writeln!(out, "iter,j")?;
    for (it, j) in &d.trace {
        writeln!(out, "{it},{j}")?;
    }
    Ok(())
}

/// Human-readable acceptance table.
pub fn acceptance_table(stats: &MoveStats) -> String {
    let mut s = String::from("move,proposed,accepted,rate\n");
    for k in MoveKind::ALL {
        let i = k.index();
        s.push_str(&format!(
            "{},{},{},{:.4}\n",
            k,
            stats.proposed[i],
            stats.accepted[i],
            stats.rate(k)
        ));
    }
    s
}
