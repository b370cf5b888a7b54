//! Chain dump CSV: one row per retained draw.
//!
//! ```text
//! # free-form header lines
//! # layout order=4 period=24
//! iter,j,grid_indices,theta,log_post,move,accepted
//! 1001,6,9;28,512.5;...,-1234.5,perturb,1
//! ```
//!
//! Grid indices and coefficients are `;`-joined. Numbers are printed in
//! shortest round-trip form so a dump reads back bit-exactly.

use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};
use crate::prior::SplineState;
use crate::sampler::ChainDraw;

pub const DUMP_COLUMNS: &str = "iter,j,grid_indices,theta,log_post,move,accepted";

const LAYOUT_TAG: &str = "layout";

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(";")
}

/// Writes `draws` of splines of order `order` on `[0, period]`.
pub fn write_dump<W: Write>(
    mut out: W,
    header: &[String],
    order: usize,
    period: f64,
    draws: &[ChainDraw],
) -> Result<()> {
    for line in header {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "# {LAYOUT_TAG} order={order} period={period}")?;
    writeln!(out, "{DUMP_COLUMNS}")?;
    for d in draws {
        let s = &d.state;
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            d.iteration,
            s.dim(),
            join(s.grid_idx()),
            join(s.theta()),
            d.log_post,
            d.kind,
            u8::from(d.accepted)
        )?;
    }
    Ok(())
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_field<T: std::str::FromStr>(field: &str, line: usize, what: &str) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("bad {what} {field:?}")))
}

fn parse_list<T: std::str::FromStr>(field: &str, line: usize, what: &str) -> Result<Vec<T>> {
    let field = field.trim();
    if field.is_empty() {
        return Ok(Vec::new());
    }
    field
        .split(';')
        .map(|x| parse_field(x, line, what))
        .collect()
}

/// A parsed dump: the spline layout and the draws.
#[derive(Debug, Clone, PartialEq)]
pub struct Dump {
    pub order: usize,
    pub period: f64,
    pub draws: Vec<ChainDraw>,
}

pub fn read_dump<R: Read>(input: R) -> Result<Dump> {
    let mut layout = None;
    let mut columns_seen = false;
    let mut draws = Vec::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(comment) = text.strip_prefix('#') {
            if let Some(rest) = comment.trim().strip_prefix(LAYOUT_TAG) {
                layout = Some(parse_layout(rest, lineno)?);
            }
            continue;
        }
        if !columns_seen {
            let cols: Vec<&str> = text.split(',').map(str::trim).collect();
            if cols.join(",") != DUMP_COLUMNS {
                return Err(parse_err(
                    lineno,
                    format!("expected columns {DUMP_COLUMNS}"),
                ));
            }
            columns_seen = true;
            continue;
        }
        let (order, period) =
            layout.ok_or_else(|| parse_err(lineno, "missing `# layout` line before data"))?;
        draws.push(parse_row(text, lineno, order, period)?);
    }
    if !columns_seen {
        return Err(parse_err(0, "empty dump"));
    }
    let (order, period) = layout.ok_or_else(|| parse_err(0, "missing `# layout` line"))?;
    Ok(Dump {
        order,
        period,
        draws,
    })
}

fn parse_layout(rest: &str, line: usize) -> Result<(usize, f64)> {
    let mut order = None;
    let mut period = None;
    for tok in rest.split_whitespace() {
        match tok.split_once('=') {
            Some(("order", v)) => order = Some(parse_field(v, line, "order")?),
            Some(("period", v)) => period = Some(parse_field(v, line, "period")?),
            _ => return Err(parse_err(line, format!("bad layout token {tok:?}"))),
        }
    }
    match (order, period) {
        (Some(o), Some(p)) => Ok((o, p)),
        _ => Err(parse_err(line, "layout needs order= and period=")),
    }
}

fn parse_row(text: &str, line: usize, order: usize, period: f64) -> Result<ChainDraw> {
    let f: Vec<&str> = text.split(',').collect();
    if f.len() != 7 {
        return Err(parse_err(
            line,
            format!("expected 7 fields, found {}", f.len()),
        ));
    }
    let iteration = parse_field(f[0], line, "iter")?;
    let dim: usize = parse_field(f[1], line, "j")?;
    let knots = parse_list(f[2], line, "grid index")?;
    let theta = parse_list(f[3], line, "theta")?;
    let log_post = parse_field(f[4], line, "log_post")?;
    let kind = parse_field(f[5], line, "move")?;
    let accepted = match f[6].trim() {
        "1" => true,
        "0" => false,
        other => return Err(parse_err(line, format!("bad accepted flag {other:?}"))),
    };
    let state = SplineState::new(order, period, knots, theta)
        .map_err(|e| parse_err(line, e.to_string()))?;
    if state.dim() != dim {
        return Err(parse_err(
            line,
            format!("j = {dim} disagrees with {} coefficients", state.dim()),
        ));
    }
    Ok(ChainDraw {
        iteration,
        state,
        kind,
        accepted,
        log_post,
    })
}
