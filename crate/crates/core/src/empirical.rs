//! Asset-return panels, random portfolio draws and the per-draw comparison
//! of the shrinkage estimator against the sample covariance.

use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::seq::index;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{olse, sample_covariance};
use crate::matrix::{frobenius_norm_sq, sym_eigenvalues, DataMatrix};
use crate::simulation::TargetSpec;

const DATE_FORMAT: &str = "%Y-%m-%d";

/// Daily returns, one row per asset and one column per date.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsPanel {
    asset_names: Vec<String>,
    dates: Vec<String>,
    returns: Vec<f64>,
}

impl ReturnsPanel {
    /// `returns` is row-major `assets × dates`.
    pub fn new(asset_names: Vec<String>, dates: Vec<String>, returns: Vec<f64>) -> Result<Self> {
        let parse_err = |msg: String| Error::ParseError { row: 0, col: 0, msg };
        if asset_names.is_empty() || dates.is_empty() {
            return Err(parse_err("returns panel is empty".into()));
        }
        if returns.len() != asset_names.len() * dates.len() {
            return Err(Error::DimError {
                expected: asset_names.len() * dates.len(),
                actual: returns.len(),
            });
        }
        if returns.iter().any(|v| !v.is_finite()) {
            return Err(parse_err("returns panel contains non-finite values".into()));
        }
        let mut prev: Option<NaiveDate> = None;
        for d in &dates {
            let parsed =
                NaiveDate::parse_from_str(d, DATE_FORMAT).map_err(|_| parse_err(format!("invalid date '{d}'")))?;
            if prev.is_some_and(|p| parsed <= p) {
                return Err(parse_err(format!("dates are not strictly increasing at '{d}'")));
            }
            prev = Some(parsed);
        }
        Ok(Self {
            asset_names,
            dates,
            returns,
        })
    }

    pub fn asset_names(&self) -> &[String] {
        &self.asset_names
    }

    pub fn dates(&self) -> &[String] {
        &self.dates
    }

    pub fn num_assets(&self) -> usize {
        self.asset_names.len()
    }

    pub fn num_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn asset_returns(&self, asset: usize) -> &[f64] {
        let n = self.dates.len();
        &self.returns[asset * n..(asset + 1) * n]
    }

    /// Observation matrix for the given assets over dates `start..end`.
    pub fn data_matrix(&self, assets: &[usize], start: usize, end: usize) -> Result<DataMatrix> {
        let values: Vec<f64> = assets
            .iter()
            .flat_map(|&a| self.asset_returns(a)[start..end].iter().copied())
            .collect();
        DataMatrix::new(assets.len(), end - start, values)
    }
}

/// What to do with a row that has an empty or `NA` cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    Reject,
    DropIncompleteRows,
}

/// Rows removed under [`MissingPolicy::DropIncompleteRows`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoadReport {
    /// `(line number, date)` of each dropped row.
    pub dropped: Vec<(usize, String)>,
}

pub fn load_returns_csv(path: &Path, policy: MissingPolicy) -> Result<(ReturnsPanel, LoadReport)> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_returns_csv(file, policy)
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NA" | "NaN" | "nan" | "null")
}

/// Reads `date,<ticker>,...` rows. Line numbers in errors are 1-based with
/// the header on line 1; columns are 1-based with the date in column 1.
pub fn read_returns_csv<R: Read>(reader: R, policy: MissingPolicy) -> Result<(ReturnsPanel, LoadReport)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let csv_err = |e: csv::Error| {
        let row = e.position().map_or(0, |p| p.line() as usize);
        Error::ParseError {
            row,
            col: 0,
            msg: e.to_string(),
        }
    };
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.get(0).map(str::trim) != Some("date") {
        return Err(Error::ParseError {
            row: 1,
            col: 1,
            msg: "first header cell must be 'date'".into(),
        });
    }
    let asset_names: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
    if asset_names.is_empty() {
        return Err(Error::ParseError {
            row: 1,
            col: 2,
            msg: "no asset columns".into(),
        });
    }
    let p = asset_names.len();

    let mut dates: Vec<String> = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut report = LoadReport::default();
    let mut last: Option<NaiveDate> = None;
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let date_cell = record.get(0).unwrap_or("").trim();
        let date = NaiveDate::parse_from_str(date_cell, DATE_FORMAT).map_err(|_| Error::ParseError {
            row: line,
            col: 1,
            msg: format!("invalid date '{date_cell}', expected YYYY-MM-DD"),
        })?;
        if let Some(prev) = last {
            if date == prev {
                return Err(Error::ParseError {
                    row: line,
                    col: 1,
                    msg: format!("duplicate date {date_cell}"),
                });
            }
            if date < prev {
                return Err(Error::ParseError {
                    row: line,
                    col: 1,
                    msg: format!("date {date_cell} is out of order"),
                });
            }
        }
        last = Some(date);

        let mut values = Vec::with_capacity(p);
        let mut missing = None;
        for (j, cell) in record.iter().skip(1).enumerate() {
            let cell = cell.trim();
            if is_missing(cell) {
                missing.get_or_insert(j + 2);
                values.push(f64::NAN);
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::ParseError {
                row: line,
                col: j + 2,
                msg: format!("malformed numeric cell '{cell}' for asset {}", asset_names[j]),
            })?;
            if !v.is_finite() {
                return Err(Error::ParseError {
                    row: line,
                    col: j + 2,
                    msg: format!("non-finite value '{cell}'"),
                });
            }
            values.push(v);
        }
        if let Some(col) = missing {
            match policy {
                MissingPolicy::Reject => {
                    return Err(Error::ParseError {
                        row: line,
                        col,
                        msg: "missing value".into(),
                    });
                }
                MissingPolicy::DropIncompleteRows => {
                    report.dropped.push((line, date_cell.to_string()));
                    continue;
                }
            }
        }
        dates.push(date_cell.to_string());
        columns.push(values);
    }
    if dates.is_empty() {
        return Err(Error::ParseError {
            row: 0,
            col: 0,
            msg: "returns panel has no complete rows".into(),
        });
    }
    let n = dates.len();
    let mut returns = vec![0.0; p * n];
    for (t, col) in columns.iter().enumerate() {
        for (a, v) in col.iter().enumerate() {
            returns[a * n + t] = *v;
        }
    }
    Ok((ReturnsPanel::new(asset_names, dates, returns)?, report))
}

/// Writes the panel in the same layout [`read_returns_csv`] accepts, using
/// shortest round-trip formatting.
pub fn write_returns_csv<W: Write>(panel: &ReturnsPanel, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut header = vec!["date".to_string()];
    header.extend(panel.asset_names.iter().cloned());
    w.write_record(&header).map_err(io)?;
    for (t, date) in panel.dates.iter().enumerate() {
        let mut rec = vec![date.clone()];
        rec.extend((0..panel.num_assets()).map(|a| format!("{}", panel.asset_returns(a)[t])));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Synthetic factor-model returns for tests and demos.
///
/// Three factors (a market factor plus two sector-like factors), asset
/// loadings drawn once, Gaussian idiosyncratic noise with per-asset
/// volatility between 1% and 3%, and a small positive drift. Dates are
/// consecutive weekdays starting 2004-01-13.
pub fn synthetic_panel(assets: usize, dates: usize, seed: u64) -> Result<ReturnsPanel> {
    if assets == 0 || dates == 0 {
        return Err(Error::ConfigError(
            "synthetic panel needs at least one asset and one date".into(),
        ));
    }
    const FACTORS: usize = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fn normal(rng: &mut ChaCha8Rng) -> f64 {
        rng.sample(StandardNormal)
    }

    let loadings: Vec<[f64; FACTORS]> = (0..assets)
        .map(|_| {
            [
                1.0 + 0.3 * normal(&mut rng),
                0.6 * normal(&mut rng),
                0.4 * normal(&mut rng),
            ]
        })
        .collect();
    let idio: Vec<f64> = (0..assets).map(|_| rng.random_range(0.01..0.03)).collect();
    let factor_vol = [0.010, 0.006, 0.004];

    let mut returns = vec![0.0; assets * dates];
    for t in 0..dates {
        let f: Vec<f64> = factor_vol.iter().map(|v| v * normal(&mut rng)).collect();
        for a in 0..assets {
            let common: f64 = loadings[a].iter().zip(&f).map(|(b, x)| b * x).sum();
            returns[a * dates + t] = 0.0003 + common + idio[a] * normal(&mut rng);
        }
    }

    let names = (0..assets).map(|a| format!("A{a:04}")).collect();
    let mut day = NaiveDate::from_ymd_opt(2004, 1, 13).expect("valid start date");
    let mut date_strings = Vec::with_capacity(dates);
    while date_strings.len() < dates {
        if !matches!(day.weekday(), Weekday::Sat | Weekday::Sun) {
            date_strings.push(day.format(DATE_FORMAT).to_string());
        }
        day = day
            .checked_add_days(Days::new(1))
            .ok_or_else(|| Error::ConfigError("date range overflow".into()))?;
    }
    ReturnsPanel::new(names, date_strings, returns)
}

/// A random portfolio: a subset of assets over a window of dates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortfolioDraw {
    pub id: usize,
    /// Distinct asset indices, ascending.
    pub asset_indices: Vec<usize>,
    /// Date index range `start..end`.
    pub window: (usize, usize),
}

/// `count` portfolios of `p` assets sampled uniformly without replacement,
/// all observed over the most recent `n` dates. Draw `k` uses stream `k` of
/// a generator keyed by `seed`.
pub fn sample_portfolios(
    panel: &ReturnsPanel,
    p: usize,
    n: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<PortfolioDraw>> {
    if count == 0 {
        return Err(Error::ConfigError("portfolio count must be at least 1".into()));
    }
    if p == 0 || p > panel.num_assets() {
        return Err(Error::ConfigError(format!(
            "cannot draw {p} assets from a panel of {}",
            panel.num_assets()
        )));
    }
    if n == 0 || n > panel.num_dates() {
        return Err(Error::ConfigError(format!(
            "cannot take {n} observations from a panel of {} dates",
            panel.num_dates()
        )));
    }
    let end = panel.num_dates();
    Ok((0..count)
        .map(|id| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(id as u64);
            let mut asset_indices = index::sample(&mut rng, panel.num_assets(), p).into_vec();
            asset_indices.sort_unstable();
            PortfolioDraw {
                id,
                asset_indices,
                window: (end - n, end),
            }
        })
        .collect())
}

/// Estimator-versus-sample comparison for one portfolio.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRow {
    pub draw: usize,
    /// Squared Frobenius norms.
    pub frob_olse: f64,
    pub frob_sample: f64,
    pub lmax_olse: f64,
    pub lmax_sample: f64,
    pub lmin_olse: f64,
    pub lmin_sample: f64,
    pub alpha: f64,
    pub beta: f64,
}

pub const DIAGNOSTICS_HEADER: [&str; 9] = [
    "draw",
    "frob_olse",
    "frob_sample",
    "lmax_olse",
    "lmax_sample",
    "lmin_olse",
    "lmin_sample",
    "alpha",
    "beta",
];

pub fn portfolio_diagnostics(
    panel: &ReturnsPanel,
    draw: &PortfolioDraw,
    target: &TargetSpec,
    center: bool,
) -> Result<DiagnosticsRow> {
    let (start, end) = draw.window;
    if end > panel.num_dates() || start >= end {
        return Err(Error::ArgError(format!("window {start}..{end} is outside the panel")));
    }
    if draw.asset_indices.iter().any(|&a| a >= panel.num_assets()) {
        return Err(Error::ArgError("asset index out of range".into()));
    }
    let y = panel.data_matrix(&draw.asset_indices, start, end)?;
    let s = sample_covariance(&y, center)?;
    let t = target.build(s.dim())?;
    let est = olse(&s, &t, y.n())?;
    let ev_s = sym_eigenvalues(&s)?;
    let ev_o = sym_eigenvalues(&est.matrix)?;
    Ok(DiagnosticsRow {
        draw: draw.id,
        frob_olse: frobenius_norm_sq(&est.matrix),
        frob_sample: frobenius_norm_sq(&s),
        lmax_olse: ev_o.max(),
        lmax_sample: ev_s.max(),
        lmin_olse: ev_o.min(),
        lmin_sample: ev_s.min(),
        alpha: est.weights.alpha,
        beta: est.weights.beta,
    })
}

/// Diagnostics for every draw, evaluated in parallel and returned in draw
/// order.
pub fn diagnostics_for_draws(
    panel: &ReturnsPanel,
    draws: &[PortfolioDraw],
    target: &TargetSpec,
    center: bool,
) -> Result<Vec<DiagnosticsRow>> {
    draws
        .par_iter()
        .map(|d| portfolio_diagnostics(panel, d, target, center))
        .collect()
}

/// Formats a value with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_diagnostics_csv<W: Write>(rows: &[DiagnosticsRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(DIAGNOSTICS_HEADER).map_err(io)?;
    for r in rows {
        let mut rec = vec![r.draw.to_string()];
        rec.extend(
            [
                r.frob_olse,
                r.frob_sample,
                r.lmax_olse,
                r.lmax_sample,
                r.lmin_olse,
                r.lmin_sample,
                r.alpha,
                r.beta,
            ]
            .into_iter()
            .map(fmt_f64),
        );
        w.write_record(&rec).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Right-continuous empirical distribution function as `(value, F(value))`
/// steps, one per distinct value.
pub fn empirical_edf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::ArgError("empirical distribution of an empty list".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::ArgError("empirical distribution of NaN".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let total = sorted.len() as f64;
    let mut steps: Vec<(f64, f64)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / total;
        match steps.last_mut() {
            Some(last) if last.0 == *v => last.1 = frac,
            _ => steps.push((*v, frac)),
        }
    }
    Ok(steps)
}

/// Evaluates a step function from [`empirical_edf`] at `x`.
pub fn edf_at(steps: &[(f64, f64)], x: f64) -> f64 {
    steps.iter().take_while(|(v, _)| *v <= x).last().map_or(0.0, |s| s.1)
}
