//! CSV and JSON emission and parsing. Numbers are written with 17
//! significant digits so that parsing recovers them exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::report::{MultiplierRow, Report, SweepRow};
use crate::decay::{DecaySeries, NormKind, NormSample};
use crate::error::{Error, Result};
use crate::multipliers::Zone;

pub const MULTIPLIER_HEADER: [&str; 9] =
    ["t", "s", "xi", "ell", "beta", "zone", "rel_err_m1", "rel_err_dtm1", "lemma1_ratio"];

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.into(), source }
}

fn parse_err(path: &Path, reason: impl ToString) -> Error {
    Error::Parse { path: path.into(), reason: reason.to_string() }
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(io_err(path))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| parse_err(path, e)
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    Ok(csv::ReaderBuilder::new().from_reader(file))
}

fn field<'a>(rec: &'a csv::StringRecord, i: usize, path: &Path) -> Result<&'a str> {
    rec.get(i).ok_or_else(|| parse_err(path, format!("row has no column {i}")))
}

fn float(rec: &csv::StringRecord, i: usize, path: &Path) -> Result<f64> {
    let s = field(rec, i, path)?;
    s.parse().map_err(|_| parse_err(path, format!("`{s}` is not a number")))
}

pub fn decay_header(qs: &[f64]) -> Vec<String> {
    let mut h = vec!["t".to_string(), "l2".into(), "linf".into()];
    h.extend(qs.iter().map(|&q| NormKind::Lq(q).label()));
    h
}

/// `t,l2,linf,lq_<q>...`, one row per sample.
pub fn write_decay_csv(series: &DecaySeries, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(decay_header(&series.qs)).map_err(csv_err(path))?;
    for row in &series.rows {
        let mut rec = vec![num(row.t), num(row.l2), num(row.linf)];
        rec.extend(row.lq.iter().map(|&v| num(v)));
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    finish(w, path)
}

pub fn read_decay_csv(path: &Path) -> Result<DecaySeries> {
    let mut r = reader(path)?;
    let header = r.headers().map_err(csv_err(path))?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names.len() < 3 || names[..3] != ["t", "l2", "linf"] {
        return Err(parse_err(path, "decay CSV must start with t,l2,linf"));
    }
    let qs = names[3..]
        .iter()
        .map(|h| {
            h.strip_prefix("lq_")
                .and_then(|q| q.parse::<f64>().ok())
                .ok_or_else(|| parse_err(path, format!("unexpected column `{h}`")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut series = DecaySeries::new(qs);
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let lq = (3..names.len()).map(|i| float(&rec, i, path)).collect::<Result<_>>()?;
        let row = NormSample { t: float(&rec, 0, path)?, l2: float(&rec, 1, path)?, linf: float(&rec, 2, path)?, lq };
        series.push(row).map_err(|e| parse_err(path, e))?;
    }
    Ok(series)
}

pub fn write_multiplier_csv(rows: &[MultiplierRow], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(MULTIPLIER_HEADER).map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            num(r.t),
            num(r.s),
            num(r.xi),
            num(r.ell),
            num(r.beta),
            r.zone.as_str().to_string(),
            num(r.rel_err_m1),
            num(r.rel_err_dtm1),
            num(r.lemma1_ratio),
        ])
        .map_err(csv_err(path))?;
    }
    finish(w, path)
}

pub fn read_multiplier_csv(path: &Path) -> Result<Vec<MultiplierRow>> {
    let mut r = reader(path)?;
    let header = r.headers().map_err(csv_err(path))?.clone();
    if header.iter().ne(MULTIPLIER_HEADER) {
        return Err(parse_err(path, "unexpected multiplier CSV header"));
    }
    r.records()
        .map(|rec| {
            let rec = rec.map_err(csv_err(path))?;
            let zone = match field(&rec, 5, path)? {
                "Z1" => Zone::Z1,
                "Z2" => Zone::Z2,
                "Z3" => Zone::Z3,
                other => return Err(parse_err(path, format!("unknown zone `{other}`"))),
            };
            Ok(MultiplierRow {
                t: float(&rec, 0, path)?,
                s: float(&rec, 1, path)?,
                xi: float(&rec, 2, path)?,
                ell: float(&rec, 3, path)?,
                beta: float(&rec, 4, path)?,
                zone,
                rel_err_m1: float(&rec, 6, path)?,
                rel_err_dtm1: float(&rec, 7, path)?,
                lemma1_ratio: float(&rec, 8, path)?,
            })
        })
        .collect()
}

/// `p,status,blowup_time,l2_exponent,linf_ratio,class`; absent values are
/// empty cells.
pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["p", "status", "blowup_time", "l2_exponent", "linf_ratio", "class"]).map_err(csv_err(path))?;
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    for r in rows {
        w.write_record([
            num(r.p),
            r.status.as_str().to_string(),
            opt(r.blowup_time),
            opt(r.l2_exponent),
            num(r.linf_ratio),
            r.class.as_str().to_string(),
        ])
            .map_err(csv_err(path))?;
    }
    finish(w, path)
}

pub fn write_report_json(report: &Report, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| parse_err(path, e))?;
    text.push('\n');
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))
}

pub fn read_report_json(path: &Path) -> Result<Report> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e))
}

/// Writes the CSV that matches the report kind.
pub fn export_csv(report: &Report, path: &Path) -> Result<()> {
    use super::report::ReportKind;
    match report.kind {
        ReportKind::VerifyMultipliers => write_multiplier_csv(&report.multipliers, path),
        ReportKind::DichotomySweep => write_sweep_csv(&report.sweep, path),
        ReportKind::LinearDecay | ReportKind::SemilinearDecay => match &report.series {
            Some(series) => write_decay_csv(series, path),
            None => Err(Error::config("report carries no norm series")),
        },
    }
}
