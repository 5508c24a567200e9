//! CSV export of panels, matrices, factorizations and analysis tables.
//!
//! Every writer emits UTF-8 CSV with a fixed header and column order, and
//! formats floats with [`fmt_f64`] so that outputs are byte-stable and
//! round-trip exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::association::{SbSlice, WeightMatrix};
use crate::detrend::TrimReport;
use crate::error::{Error, Result};
use crate::gridorder::Ordering;
use crate::ingest::{check_header, CalendarIndex, EnsoTable, GridSet, Panel, RawPanel};
use crate::linalg::{GsvdFactorization, SvdFactorization};
use crate::rmt::{CriticalBand, EmpiricalNull};

/// `%.17g`: 17 significant digits, trailing zeros trimmed, exponent form
/// outside `1e-5 <= |x| < 1e17`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..17).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (16 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn create(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let file = BufWriter::new(File::create(path)?);
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

/// Write `header` followed by `rows`.
pub fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = create(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(text.as_bytes())?;
    f.flush()?;
    Ok(())
}

pub fn write_grid_metadata(path: &Path, grids: &GridSet) -> Result<()> {
    write_rows(
        path,
        &["grid_id", "lat", "lon", "zone"],
        grids
            .cells()
            .iter()
            .map(|c| vec![c.grid_id.clone(), fmt_f64(c.lat), fmt_f64(c.lon), c.zone.to_string()]),
    )
}

/// Long daily-values format, day-major then column order.
pub fn write_daily_values(path: &Path, panel: &Panel) -> Result<()> {
    write_long(path, panel.values(), panel.calendar(), panel.grids())
}

/// Long daily-values format of a raw panel; missing cells are omitted.
pub fn write_raw_daily_values(path: &Path, raw: &RawPanel) -> Result<()> {
    write_long(path, &raw.values, &raw.calendar, &raw.grids)
}

fn write_long(path: &Path, v: &DMatrix<f64>, calendar: &CalendarIndex, grids: &GridSet) -> Result<()> {
    let ids = grids.ids();
    let days = calendar.days();
    write_rows(
        path,
        &["date", "grid_id", "value"],
        (0..v.nrows()).flat_map(|i| {
            let date = days[i].date.format("%Y-%m-%d").to_string();
            ids.iter()
                .enumerate()
                .filter(|(j, _)| !v[(i, *j)].is_nan())
                .map(|(j, id)| vec![date.clone(), id.clone(), fmt_f64(v[(i, j)])])
                .collect::<Vec<_>>()
        }),
    )
}

pub fn write_enso(path: &Path, table: &EnsoTable) -> Result<()> {
    write_rows(
        path,
        &["year", "phase"],
        table.iter().map(|(y, p)| vec![y.to_string(), p.as_str().to_string()]),
    )
}

/// Square matrix with a `grid_id` header row and first column.
pub fn write_square(path: &Path, m: &DMatrix<f64>, ids: &[String]) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() != ids.len() {
        return Err(Error::Shape(format!(
            "{}x{} matrix with {} labels",
            m.nrows(),
            m.ncols(),
            ids.len()
        )));
    }
    let mut header = vec!["grid_id"];
    header.extend(ids.iter().map(String::as_str));
    write_rows(
        path,
        &header,
        ids.iter().enumerate().map(|(i, id)| {
            std::iter::once(id.clone()).chain((0..m.ncols()).map(move |j| fmt_f64(m[(i, j)])))
        }),
    )
}

/// Read a matrix written by [`write_square`].
pub fn read_square(path: &Path) -> Result<(DMatrix<f64>, Vec<String>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut records = rdr.records();
    let header = records
        .next()
        .ok_or_else(|| Error::parse(path, 1, "empty file"))??;
    if header.get(0) != Some("grid_id") {
        return Err(Error::parse(path, 1, "first header field must be 'grid_id'"));
    }
    let ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let p = ids.len();
    let mut values = Vec::with_capacity(p * p);
    for (k, rec) in records.enumerate() {
        let rec = rec?;
        let line = k as u64 + 2;
        if rec.len() != p + 1 || rec.get(0) != Some(ids.get(k).map_or("", String::as_str)) {
            return Err(Error::parse(path, line, "row label or width does not match the header"));
        }
        for f in rec.iter().skip(1) {
            values.push(
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::parse(path, line, format!("bad number '{f}': {e}")))?,
            );
        }
    }
    if values.len() != p * p {
        return Err(Error::parse(path, 0, format!("expected {p} rows")));
    }
    Ok((DMatrix::from_row_slice(p, p, &values), ids))
}

pub fn write_weights(path: &Path, w: &WeightMatrix, ids: &[String]) -> Result<()> {
    write_square(path, &w.values, ids)
}

pub fn write_ordering(path: &Path, ordering: &Ordering, grids: &GridSet) -> Result<()> {
    write_rows(
        path,
        &["position", "grid_id"],
        ordering.positions(grids).map(|(k, id)| vec![k.to_string(), id.to_string()]),
    )
}

/// Dense matrix with a `row` index column and `{prefix}{j}` column headers
/// (1-based).
pub fn write_matrix(path: &Path, m: &DMatrix<f64>, prefix: &str) -> Result<()> {
    let names: Vec<String> = (1..=m.ncols()).map(|j| format!("{prefix}{j}")).collect();
    let mut header = vec!["row"];
    header.extend(names.iter().map(String::as_str));
    write_rows(
        path,
        &header,
        (0..m.nrows()).map(|i| std::iter::once((i + 1).to_string()).chain((0..m.ncols()).map(move |j| fmt_f64(m[(i, j)])))),
    )
}

/// `index,<name>` with 1-based indices.
pub fn write_vector(path: &Path, name: &str, values: &[f64]) -> Result<()> {
    write_rows(
        path,
        &["index", name],
        values.iter().enumerate().map(|(i, v)| vec![(i + 1).to_string(), fmt_f64(*v)]),
    )
}

/// `u.csv`, `sigma.csv`, `v.csv` in `dir`.
pub fn write_svd_bundle(dir: &Path, f: &SvdFactorization) -> Result<()> {
    write_matrix(&dir.join("u.csv"), &f.u, "u")?;
    write_vector(&dir.join("sigma.csv"), "sigma", &f.sigma)?;
    write_matrix(&dir.join("v.csv"), &f.v, "v")
}

/// One file per factor plus `gsv.csv` (`index,alpha,beta,gsv,log_gsv,theta`).
pub fn write_gsvd_bundle(dir: &Path, g: &GsvdFactorization) -> Result<()> {
    write_matrix(&dir.join("u1.csv"), &g.u1, "u")?;
    write_matrix(&dir.join("u2.csv"), &g.u2, "u")?;
    write_matrix(&dir.join("p.csv"), &g.p, "p")?;
    write_matrix(&dir.join("v.csv"), &g.v, "v")?;
    write_gsv_table(&dir.join("gsv.csv"), g)
}

pub fn write_gsv_table(path: &Path, g: &GsvdFactorization) -> Result<()> {
    let gsv = g.gsv();
    let theta = g.angular_distances();
    write_rows(
        path,
        &["index", "alpha", "beta", "gsv", "log_gsv", "theta"],
        (0..g.rank()).map(|i| {
            vec![
                (i + 1).to_string(),
                fmt_f64(g.alpha[i]),
                fmt_f64(g.beta[i]),
                fmt_f64(gsv[i]),
                fmt_f64(gsv[i].ln()),
                fmt_f64(theta[i]),
            ]
        }),
    )
}

/// `replicate,index,value` with 1-based replicate and index.
pub fn write_null_table(path: &Path, null: &EmpiricalNull) -> Result<()> {
    write_rows(
        path,
        &["replicate", "index", "value"],
        null.table()
            .map(|(r, i, v)| vec![(r + 1).to_string(), (i + 1).to_string(), fmt_f64(v)]),
    )
}

pub fn write_critical(path: &Path, bands: &[CriticalBand]) -> Result<()> {
    write_rows(
        path,
        &["level", "lower", "upper"],
        bands
            .iter()
            .map(|b| vec![fmt_f64(b.level), fmt_f64(b.lower), fmt_f64(b.upper)]),
    )
}

/// `shares.csv` (`k,cumulative_share`) and `acf.csv` (`grid_id,lag,acf`).
/// Constant columns are written with an empty `acf` field.
pub fn write_trim_report(dir: &Path, report: &TrimReport) -> Result<()> {
    write_rows(
        &dir.join("shares.csv"),
        &["k", "cumulative_share"],
        report
            .shares
            .iter()
            .enumerate()
            .map(|(i, s)| vec![(i + 1).to_string(), fmt_f64(*s)]),
    )?;
    let lags = report.max_lag;
    write_rows(
        &dir.join("acf.csv"),
        &["grid_id", "lag", "acf"],
        report.acf.iter().flat_map(|c| {
            (0..=lags).map(move |l| {
                let v = c.values.as_ref().map_or(String::new(), |v| fmt_f64(v[l]));
                vec![c.grid_id.clone(), l.to_string(), v]
            })
        }),
    )
}

/// `slice,weight_kind,value,p,dropped_pairs`; failed slices keep their label
/// with empty numeric fields.
pub fn write_sb_series(path: &Path, series: &[SbSlice], weight_kind: &str) -> Result<()> {
    write_rows(
        path,
        &["slice", "weight_kind", "value", "p", "dropped_pairs"],
        series.iter().map(|s| match &s.outcome {
            Ok(r) => vec![
                r.slice.clone(),
                r.weight_kind.clone(),
                fmt_f64(r.value),
                r.p.to_string(),
                r.dropped_pairs.to_string(),
            ],
            Err(_) => vec![s.label(), weight_kind.to_string(), String::new(), String::new(), String::new()],
        }),
    )
}

/// `(label, value)` pairs of a CSV column. The label column defaults to the
/// first column; rows with an empty value are skipped.
pub fn read_column(path: &Path, label: Option<&str>, column: &str) -> Result<Vec<(String, f64)>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::parse(path, 1, format!("no column '{name}'")))
    };
    let vi = find(column)?;
    let li = match label {
        Some(l) => find(l)?,
        None => 0,
    };
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k as u64 + 2;
        let raw = rec.get(vi).unwrap_or("").trim();
        if raw.is_empty() {
            continue;
        }
        let v: f64 = raw
            .parse()
            .map_err(|e| Error::parse(path, line, format!("bad number '{raw}': {e}")))?;
        out.push((rec.get(li).unwrap_or("").to_string(), v));
    }
    Ok(out)
}

/// Check that `path` is a CSV whose header equals `expected`.
pub fn expect_header(path: &Path, expected: &[&str]) -> Result<()> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    match rdr.records().next() {
        Some(rec) => check_header(path, &rec?, expected),
        None => Err(Error::parse(path, 1, "empty file")),
    }
}
