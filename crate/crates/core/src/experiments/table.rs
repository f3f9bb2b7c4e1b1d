use std::io::{Read, Write};
use std::path::Path;

use crate::beamforming::csv_err;
use crate::error::{Error, Result};

pub const RESULTS_HEADER: [&str; 8] = ["experiment", "method", "snr_db", "metric", "value", "trials", "stderr", "failures"];

/// One aggregated cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    /// Estimator, beamformer or combination, e.g. `ttd+hbg_sr`.
    pub method: String,
    pub snr_db: f64,
    pub metric: String,
    /// Mean over the successful trials (NaN when none succeeded).
    pub value: f64,
    /// Successful trials behind `value`.
    pub trials: usize,
    /// Standard error of the mean, 0 for a single trial.
    pub stderr: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn find(&self, method: &str, snr_db: f64, metric: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.method == method && r.metric == metric && r.snr_db == snr_db)
    }

    /// Rows of one method and metric in SNR order.
    pub fn series(&self, method: &str, metric: &str) -> Vec<&ResultRow> {
        let mut v: Vec<&ResultRow> = self.rows.iter().filter(|r| r.method == method && r.metric == metric).collect();
        v.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
        v
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        write_results(self, &mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn sci(x: f64) -> String {
    format!("{x:.8e}")
}

/// Write the table as CSV to any sink.
pub fn write_results<W: Write>(table: &ResultTable, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(RESULTS_HEADER).map_err(csv_err)?;
    for r in &table.rows {
        w.write_record([
            r.experiment.clone(),
            r.method.clone(),
            sci(r.snr_db),
            r.metric.clone(),
            sci(r.value),
            r.trials.to_string(),
            sci(r.stderr),
            r.failures.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_results_csv(table: &ResultTable, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_results(table, std::io::BufWriter::new(f))
}

/// Parse a results file written by [`write_results`].
pub fn read_results<R: Read>(source: R) -> Result<ResultTable> {
    let mut rd = csv::Reader::from_reader(source);
    let header = rd.headers().map_err(csv_err)?.clone();
    if header.iter().ne(RESULTS_HEADER) {
        return Err(Error::Parse(format!("unexpected results header `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        let num = |i: usize| -> Result<f64> {
            rec[i].parse().map_err(|_| Error::Parse(format!("bad number `{}` in column {}", &rec[i], RESULTS_HEADER[i])))
        };
        let count = |i: usize| -> Result<usize> {
            rec[i].parse().map_err(|_| Error::Parse(format!("bad count `{}` in column {}", &rec[i], RESULTS_HEADER[i])))
        };
        rows.push(ResultRow {
            experiment: rec[0].to_string(),
            method: rec[1].to_string(),
            snr_db: num(2)?,
            metric: rec[3].to_string(),
            value: num(4)?,
            trials: count(5)?,
            stderr: num(6)?,
            failures: count(7)?,
        });
    }
    Ok(ResultTable { rows })
}

pub fn read_results_csv(path: impl AsRef<Path>) -> Result<ResultTable> {
    read_results(std::fs::File::open(path)?)
}

/// Mean and standard error of `values`, summed in sorted order so the
/// result does not depend on the order trials finished in.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, 0.0);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mean = v.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let mut dev: Vec<f64> = v.iter().map(|x| (x - mean).powi(2)).collect();
    dev.sort_by(f64::total_cmp);
    let var = dev.iter().sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
