//! Binned count data and raw event paths.
//!
//! Counts are stored day-major: `counts[i * m + j]` is the number of events
//! on day `i` in bin `j` (both 0-based here, 1-based in files).

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{validation, Error, Result};
use crate::math::ln_factorial;

/// Observation layout: `m` bins of width `Δ = T/m` over `n` periods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataLayout {
    period: f64,
    bins_per_period: usize,
    periods: usize,
}

impl DataLayout {
    pub fn new(period: f64, bins_per_period: usize, periods: usize) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(validation(format!("period must be positive, got {period}")));
        }
        if bins_per_period == 0 {
            return Err(validation("need at least one bin per period"));
        }
        if periods == 0 {
            return Err(validation("need at least one observed period"));
        }
        Ok(Self {
            period,
            bins_per_period,
            periods,
        })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn bins(&self) -> usize {
        self.bins_per_period
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn bin_width(&self) -> f64 {
        self.period / self.bins_per_period as f64
    }

    /// Left edge of bin `j`; `bin_edge(m) == T` exactly.
    pub fn bin_edge(&self, j: usize) -> f64 {
        if j == self.bins_per_period {
            self.period
        } else {
            self.period * j as f64 / self.bins_per_period as f64
        }
    }

    /// Day and bin (0-based) of an event time in `[0, nT]`.
    ///
    /// Bins are closed on the left and open on the right, except the last
    /// bin of every period, which also takes the period's right endpoint.
    pub fn locate(&self, t: f64) -> (usize, usize) {
        let m = self.bins_per_period;
        let mut offset = t % self.period;
        let mut day = ((t - offset) / self.period).round() as usize;
        if day >= 1 && (offset <= 0.0 || day >= self.periods) {
            day -= 1;
            offset = self.period;
        }
        let day = day.min(self.periods - 1);
        let bin = ((offset * m as f64 / self.period).floor() as usize).min(m - 1);
        (day, bin)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinnedCounts {
    layout: DataLayout,
    counts: Vec<u64>,
    col_sums: Vec<u64>,
    log_factorial_sum: f64,
}

impl BinnedCounts {
    /// `counts` is day-major with `n * m` entries.
    pub fn new(layout: DataLayout, counts: Vec<u64>) -> Result<Self> {
        let (n, m) = (layout.periods(), layout.bins());
        if counts.len() != n * m {
            return Err(validation(format!(
                "expected {} counts for {n} days x {m} bins, got {}",
                n * m,
                counts.len()
            )));
        }
        let mut col_sums = vec![0u64; m];
        let mut log_factorial_sum = 0.0;
        for row in counts.chunks(m) {
            for (s, &c) in col_sums.iter_mut().zip(row) {
                *s += c;
                log_factorial_sum += ln_factorial(c);
            }
        }
        Ok(Self {
            layout,
            counts,
            col_sums,
            log_factorial_sum,
        })
    }

    pub fn layout(&self) -> &DataLayout {
        &self.layout
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, day: usize, bin: usize) -> u64 {
        self.counts[day * self.layout.bins() + bin]
    }

    /// Per-bin totals over days.
    pub fn col_sums(&self) -> &[u64] {
        &self.col_sums
    }

    /// `Σ_ij ln(C_ij!)`.
    pub fn log_factorial_sum(&self) -> f64 {
        self.log_factorial_sum
    }

    pub fn total(&self) -> u64 {
        self.col_sums.iter().sum()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u64]> {
        self.counts.chunks(self.layout.bins())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventPath {
    layout: DataLayout,
    times: Vec<f64>,
}

impl EventPath {
    pub fn new(layout: DataLayout, times: Vec<f64>) -> Result<Self> {
        let end = layout.period() * layout.periods() as f64;
        for (i, &t) in times.iter().enumerate() {
            if !(t >= 0.0 && t <= end) {
                return Err(validation(format!("event {i} at {t} outside [0, {end}]")));
            }
            if i > 0 && t < times[i - 1] {
                return Err(validation(format!("event times not sorted at index {i}")));
            }
        }
        Ok(Self { layout, times })
    }

    /// Sorts `times` before validating.
    pub fn from_unsorted(layout: DataLayout, mut times: Vec<f64>) -> Result<Self> {
        times.sort_by(f64::total_cmp);
        Self::new(layout, times)
    }

    pub fn layout(&self) -> &DataLayout {
        &self.layout
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Event times folded into one period, sorted.
    pub fn folded(&self) -> Vec<f64> {
        let period = self.layout.period();
        let mut v: Vec<f64> = self
            .times
            .iter()
            .map(|&t| {
                let r = t - (t / period).floor() * period;
                if r == 0.0 && t > 0.0 {
                    period
                } else {
                    r.clamp(0.0, period)
                }
            })
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

pub fn bin_events(ep: &EventPath) -> BinnedCounts {
    let layout = *ep.layout();
    let m = layout.bins();
    let mut counts = vec![0u64; layout.periods() * m];
    for &t in ep.times() {
        let (day, bin) = layout.locate(t);
        counts[day * m + bin] += 1;
    }
    BinnedCounts::new(layout, counts).expect("layout-consistent counts")
}

/// Keeps each event independently with probability `retain_target / total`.
pub fn thin_counts<R: Rng + ?Sized>(
    bc: &BinnedCounts,
    retain_target: u64,
    rng: &mut R,
) -> Result<BinnedCounts> {
    let total = bc.total();
    if retain_target > total {
        return Err(validation(format!(
            "cannot retain {retain_target} of {total} events"
        )));
    }
    if retain_target == total {
        return Ok(bc.clone());
    }
    let p = retain_target as f64 / total as f64;
    let counts = bc
        .counts()
        .iter()
        .map(|&c| {
            if c == 0 || p == 0.0 {
                0
            } else {
                Binomial::new(c, p).expect("valid binomial").sample(rng)
            }
        })
        .collect();
    BinnedCounts::new(*bc.layout(), counts)
}

/// Reads a `day,bin,count` CSV with 1-based indices. Missing cells are zero,
/// duplicate cells are summed.
pub fn load_counts(path: impl AsRef<Path>, layout: DataLayout) -> Result<BinnedCounts> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    check_header(rdr.headers()?, &["day", "bin", "count"])?;
    let (n, m) = (layout.periods(), layout.bins());
    let mut counts = vec![0u64; n * m];
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() != 3 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 3 fields, got {}", rec.len()),
            });
        }
        let parse = |k: usize, name: &str| -> Result<u64> {
            rec[k].parse::<u64>().map_err(|e| Error::Parse {
                line,
                msg: format!("bad {name} {:?}: {e}", &rec[k]),
            })
        };
        let day = parse(0, "day")? as usize;
        let bin = parse(1, "bin")? as usize;
        let count = parse(2, "count")?;
        if day == 0 || day > n {
            return Err(validation(format!(
                "line {line}: day {day} outside [1, {n}]"
            )));
        }
        if bin == 0 || bin > m {
            return Err(validation(format!(
                "line {line}: bin {bin} outside [1, {m}]"
            )));
        }
        counts[(day - 1) * m + (bin - 1)] += count;
    }
    BinnedCounts::new(layout, counts)
}

/// Reads a `time` CSV of event times. When `periods` is `None` the number of
/// periods is `ceil(max time / T)` (at least one).
pub fn load_events(
    path: impl AsRef<Path>,
    period: f64,
    bins: usize,
    periods: Option<usize>,
) -> Result<EventPath> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    check_header(rdr.headers()?, &["time"])?;
    let mut times = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let t: f64 = rec
            .get(0)
            .ok_or_else(|| Error::Parse {
                line,
                msg: "empty row".into(),
            })?
            .parse()
            .map_err(|e| Error::Parse {
                line,
                msg: format!("bad time: {e}"),
            })?;
        if !t.is_finite() {
            return Err(Error::Parse {
                line,
                msg: format!("non-finite time {t}"),
            });
        }
        times.push(t);
    }
    let periods = match periods {
        Some(n) => n,
        None => {
            let max = times.iter().cloned().fold(0.0, f64::max);
            ((max / period).ceil() as usize).max(1)
        }
    };
    EventPath::from_unsorted(DataLayout::new(period, bins, periods)?, times)
}

/// Writes event times as a `time` CSV, preceded by `#` header lines.
pub fn write_events<W: Write>(mut out: W, header: &[String], ep: &EventPath) -> Result<()> {
    for line in header {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "time")?;
    for t in ep.times() {
        writeln!(out, "{t}")?;
    }
    Ok(())
}

fn check_header(found: &csv::StringRecord, want: &[&str]) -> Result<()> {
    let got: Vec<&str> = found.iter().collect();
    if got != want {
        return Err(Error::Parse {
            line: 1,
            msg: format!(
                "expected header {:?}, found {:?}",
                want.join(","),
                got.join(",")
            ),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn layout_rejects_degenerate_values() {
        assert!(DataLayout::new(24.0, 0, 1).is_err());
        assert!(DataLayout::new(24.0, 2, 0).is_err());
        assert!(DataLayout::new(-1.0, 2, 1).is_err());
        let l = DataLayout::new(24.0, 2880, 61).unwrap();
        assert_eq!(l.bin_width() * 2880.0, 24.0);
    }

    #[test]
    fn empty_counts_file_is_all_zero() {
        let f = write_tmp("day,bin,count\n");
        let bc = load_counts(f.path(), DataLayout::new(1.0, 2, 1).unwrap()).unwrap();
        assert_eq!(bc.counts(), &[0, 0]);
        assert_eq!(bc.log_factorial_sum(), 0.0);
    }

    #[test]
    fn duplicate_rows_are_summed() {
        let f = write_tmp("day,bin,count\n1,1,3\n1,1,2\n");
        let bc = load_counts(f.path(), DataLayout::new(1.0, 2, 1).unwrap()).unwrap();
        assert_eq!(bc.get(0, 0), 5);
        assert_eq!(bc.col_sums(), &[5, 0]);
        assert!((bc.log_factorial_sum() - 120f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn out_of_range_day_is_rejected() {
        let f = write_tmp("day,bin,count\n2,1,1\n");
        let err = load_counts(f.path(), DataLayout::new(1.0, 2, 1).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn malformed_row_reports_line() {
        let f = write_tmp("day,bin,count\n1,1,3\n1,x,2\n");
        let err = load_counts(f.path(), DataLayout::new(1.0, 2, 1).unwrap()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn binning_examples() {
        let layout = DataLayout::new(1.0, 2, 1).unwrap();
        let bc = bin_events(&EventPath::new(layout, vec![]).unwrap());
        assert_eq!(bc.counts(), &[0, 0]);
        let bc = bin_events(&EventPath::new(layout, vec![0.25, 0.75, 0.8]).unwrap());
        assert_eq!(bc.counts(), &[1, 2]);
    }

    #[test]
    fn boundary_events_follow_bin_convention() {
        let layout = DataLayout::new(1.0, 2, 2).unwrap();
        let ep = EventPath::new(layout, vec![0.0, 0.5, 1.0, 1.5, 2.0]).unwrap();
        let bc = bin_events(&ep);
        // 0 -> day0 bin0, 0.5 -> day0 bin1, 1.0 -> day0 bin1 (closed end),
        // 1.5 -> day1 bin1, 2.0 -> day1 bin1.
        assert_eq!(bc.counts(), &[1, 2, 0, 2]);
        assert_eq!(bc.total(), 5);
    }

    #[test]
    fn event_path_validation() {
        let layout = DataLayout::new(1.0, 2, 1).unwrap();
        assert!(EventPath::new(layout, vec![0.5, 0.2]).is_err());
        assert!(EventPath::new(layout, vec![1.5]).is_err());
        let ep = EventPath::from_unsorted(layout, vec![0.5, 0.2]).unwrap();
        assert_eq!(ep.times(), &[0.2, 0.5]);
    }

    #[test]
    fn events_file_infers_days() {
        let f = write_tmp("time\n0.5\n30.25\n");
        let ep = load_events(f.path(), 24.0, 4, None).unwrap();
        assert_eq!(ep.layout().periods(), 2);
        assert_eq!(ep.len(), 2);
        let f = write_tmp("times\n0.5\n");
        assert!(load_events(f.path(), 24.0, 4, None).is_err());
    }

    #[test]
    fn thinning_edge_cases() {
        let layout = DataLayout::new(1.0, 3, 2).unwrap();
        let bc = BinnedCounts::new(layout, vec![4, 0, 7, 1, 9, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(thin_counts(&bc, bc.total(), &mut rng).unwrap(), bc);
        assert_eq!(thin_counts(&bc, 0, &mut rng).unwrap().total(), 0);
        assert!(thin_counts(&bc, bc.total() + 1, &mut rng).is_err());
    }

    #[test]
    fn thinning_concentrates_near_target() {
        // 2.8e6 events retained at 1000: binomial sd is about sqrt(1000).
        let layout = DataLayout::new(24.0, 2880, 1).unwrap();
        let counts = vec![2_800_000 / 2880 + 1; 2880];
        let bc = BinnedCounts::new(layout, counts).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let thinned = thin_counts(&bc, 1000, &mut rng).unwrap();
            let dev = (thinned.total() as f64 - 1000.0).abs();
            assert!(dev <= 4.0 * 1000f64.sqrt(), "retained {}", thinned.total());
            assert_eq!(thinned.layout(), bc.layout());
        }
    }

    #[test]
    fn binning_matches_brute_force_counting() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.random_range(1..4);
            let m = rng.random_range(1..7);
            let period = rng.random_range(0.5..30.0);
            let layout = DataLayout::new(period, m, n).unwrap();
            let k = rng.random_range(0..40);
            let times: Vec<f64> = (0..k)
                .map(|_| rng.random_range(0.0..period * n as f64))
                .collect();
            let ep = EventPath::from_unsorted(layout, times.clone()).unwrap();
            let bc = bin_events(&ep);
            let delta = period / m as f64;
            for j in 0..m {
                let brute = times
                    .iter()
                    .filter(|&&t| {
                        let r = t % period;
                        r >= j as f64 * delta && r < (j + 1) as f64 * delta
                    })
                    .count() as u64;
                assert_eq!(bc.col_sums()[j], brute);
            }
            assert_eq!(bc.total(), k as u64);
        }
    }

    #[test]
    fn events_round_trip_through_csv() {
        let lay = DataLayout::new(24.0, 4, 2).unwrap();
        let ep = EventPath::new(lay, vec![0.1, 1.0 / 3.0, 23.999, 47.5]).unwrap();
        let mut buf = Vec::new();
        write_events(&mut buf, &["seed=3".into()], &ep).unwrap();
        let f = write_tmp(std::str::from_utf8(&buf).unwrap());
        let back = load_events(f.path(), 24.0, 4, None).unwrap();
        assert_eq!(back.times(), ep.times());
        assert_eq!(back.layout().periods(), 2);
    }
}
