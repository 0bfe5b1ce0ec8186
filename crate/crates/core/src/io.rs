//! CSV readers and writers. Numbers are written with 17 significant digits
//! so that every double reads back exactly.

use crate::inference::{InferenceError, ObservationSeries};
use crate::lna::GaussianDist;
use crate::mcmc::{ChainSummary, SampleChain};
use crate::sim::Trajectory;
use nalgebra::{DMatrix, DVector};
use std::io::{Read, Write};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row}, column `{column}`: `{value}` is not a number")]
    NotANumber { row: usize, column: String, value: String },
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Series(#[from] InferenceError),
}

/// `v` in scientific notation with 17 significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Header and numeric rows of a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl NumericTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

pub fn read_numeric_csv<R: Read>(reader: R) -> Result<NumericTable, IoError> {
    let t = read_labeled_csv(reader, 0)?;
    Ok(NumericTable { header: t.header, rows: t.values })
}

/// A CSV whose leading columns are text labels and the rest numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTable {
    pub header: Vec<String>,
    pub n_labels: usize,
    pub labels: Vec<Vec<String>>,
    pub values: Vec<Vec<f64>>,
}

impl LabeledTable {
    /// A numeric column by name.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?.checked_sub(self.n_labels)?;
        Some(self.values.iter().map(|r| r[j]).collect())
    }
}

/// Reads a CSV whose first `n_labels` columns are kept as text.
pub fn read_labeled_csv<R: Read>(reader: R, n_labels: usize) -> Result<LabeledTable, IoError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.len() < n_labels {
        return Err(IoError::Format(format!("expected at least {n_labels} columns, got {}", header.len())));
    }
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        labels.push(rec.iter().take(n_labels).map(str::to_string).collect());
        let row = rec
            .iter()
            .zip(&header)
            .skip(n_labels)
            .map(|(v, col)| {
                v.parse::<f64>().map_err(|_| IoError::NotANumber { row: i + 1, column: col.clone(), value: v.into() })
            })
            .collect::<Result<Vec<_>, _>>()?;
        values.push(row);
    }
    Ok(LabeledTable { header, n_labels, labels, values })
}

/// Writes a header and pre-formatted rows.
pub fn write_table_csv<W: Write>(
    w: W,
    header: &[String],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<(), IoError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(header)?;
    for r in rows {
        wtr.write_record(&r)?;
    }
    wtr.flush()?;
    Ok(())
}

fn with_time(names: &[String]) -> Vec<String> {
    std::iter::once("time".to_string()).chain(names.iter().cloned()).collect()
}

/// `time,<species...>`, one row per stored point.
pub fn write_trajectory_csv<W: Write>(w: W, species: &[String], traj: &Trajectory) -> Result<(), IoError> {
    let rows = traj
        .times()
        .iter()
        .zip(traj.states())
        .map(|(&t, x)| std::iter::once(t).chain(x.iter().copied()).map(fmt_num).collect());
    write_table_csv(w, &with_time(species), rows)
}

/// `time,<names...>` from parallel time and value lists.
pub fn write_time_series_csv<W: Write>(
    w: W,
    names: &[String],
    times: &[f64],
    values: &[DVector<f64>],
) -> Result<(), IoError> {
    let rows = times
        .iter()
        .zip(values)
        .map(|(&t, x)| std::iter::once(t).chain(x.iter().copied()).map(fmt_num).collect());
    write_table_csv(w, &with_time(names), rows)
}

/// One row per sample, one column per species.
pub fn write_samples_csv<W: Write>(w: W, species: &[String], samples: &DMatrix<f64>) -> Result<(), IoError> {
    let rows = samples.row_iter().map(|r| r.iter().copied().map(fmt_num).collect());
    write_table_csv(w, species, rows)
}

/// Reads `time,<y1..yd>` into a series plus the observation column names.
pub fn read_observation_csv<R: Read>(reader: R) -> Result<(Vec<String>, ObservationSeries), IoError> {
    let table = read_numeric_csv(reader)?;
    if table.header.first().map(String::as_str) != Some("time") || table.header.len() < 2 {
        return Err(IoError::Format("observation CSV needs a `time` column followed by observations".into()));
    }
    let times = table.rows.iter().map(|r| r[0]).collect();
    let values = table.rows.iter().map(|r| DVector::from_column_slice(&r[1..])).collect();
    Ok((table.header[1..].to_vec(), ObservationSeries::new(times, values)?))
}

pub fn write_observation_csv<W: Write>(w: W, names: &[String], series: &ObservationSeries) -> Result<(), IoError> {
    write_time_series_csv(w, names, series.times(), series.values())
}

/// `iter,logpost,log10_<name>...`, iterations numbered from 1.
pub fn write_chain_csv<W: Write>(w: W, names: &[String], chain: &SampleChain) -> Result<(), IoError> {
    let header: Vec<String> = ["iter".to_string(), "logpost".to_string()]
        .into_iter()
        .chain(names.iter().map(|n| format!("log10_{n}")))
        .collect();
    let rows = (0..chain.iters()).map(|k| {
        let mut r = vec![(k + 1).to_string(), fmt_num(chain.logpost[k])];
        r.extend(chain.draws.row(k).iter().map(|&v| fmt_num(v)));
        r
    });
    write_table_csv(w, &header, rows)
}

/// Mean and covariance rows: `species,mean,cov_<species...>`.
pub fn write_gaussian_csv<W: Write>(w: W, species: &[String], g: &GaussianDist) -> Result<(), IoError> {
    let header: Vec<String> = ["species".to_string(), "mean".to_string()]
        .into_iter()
        .chain(species.iter().map(|s| format!("cov_{s}")))
        .collect();
    let rows = species.iter().enumerate().map(|(i, s)| {
        let mut r = vec![s.clone(), fmt_num(g.mean[i])];
        r.extend(g.cov.row(i).iter().map(|&v| fmt_num(v)));
        r
    });
    write_table_csv(w, &header, rows)
}

/// `parameter,median,q2.5,q97.5,ess,acceptance` on the `log10` scale.
pub fn write_summary_csv<W: Write>(w: W, s: &ChainSummary) -> Result<(), IoError> {
    let header: Vec<String> =
        ["parameter", "median", "q2.5", "q97.5", "ess", "acceptance"].iter().map(|h| h.to_string()).collect();
    let rows = s.params.iter().map(|p| {
        vec![
            format!("log10_{}", p.name),
            fmt_num(p.median),
            fmt_num(p.lower),
            fmt_num(p.upper),
            fmt_num(p.ess),
            fmt_num(s.acceptance),
        ]
    });
    write_table_csv(w, &header, rows)
}

/// Aligned plain-text rendering of a chain summary.
pub fn format_summary(s: &ChainSummary) -> String {
    let width = s.params.iter().map(|p| p.name.len() + 6).max().unwrap_or(9).max(9);
    let mut out = format!(
        "{:<width$}  {:>9}  {:>9}  {:>9}  {:>9}\n",
        "parameter", "median", "2.5%", "97.5%", "ESS"
    );
    for p in &s.params {
        out += &format!(
            "{:<width$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>9.1}\n",
            format!("log10_{}", p.name),
            p.median,
            p.lower,
            p.upper,
            p.ess
        );
    }
    out += &format!("acceptance rate {:.3} over {} kept iterations\n", s.acceptance, s.kept);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::builtin;
    use crate::sim::{rng_for, ssa_trajectory};

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 40.0] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn trajectory_round_trip() {
        let lv = builtin("lv", 1.0).unwrap();
        let tr = ssa_trajectory(&lv.network, &lv.theta, &lv.x0, 1.0, &mut rng_for(1)).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, lv.network.species(), &tr).unwrap();
        let t = read_numeric_csv(&buf[..]).unwrap();
        assert_eq!(t.header, vec!["time", "Pred", "Prey"]);
        assert_eq!(t.rows.len(), tr.len());
        assert_eq!(t.column("time").unwrap(), tr.times());
        assert_eq!(&t.rows[0][1..], tr.state(0));
    }

    #[test]
    fn observation_round_trip_and_errors() {
        let s = ObservationSeries::new(
            vec![0.0, 1.5, 2.0],
            vec![DVector::from_element(1, 3.0), DVector::from_element(1, 0.1), DVector::from_element(1, 7.0)],
        )
        .unwrap();
        let names = vec!["y1".to_string()];
        let mut buf = Vec::new();
        write_observation_csv(&mut buf, &names, &s).unwrap();
        let (n2, s2) = read_observation_csv(&buf[..]).unwrap();
        assert_eq!((n2, s2), (names, s));
        assert!(matches!(read_observation_csv("t,y\n0,1\n1,2\n".as_bytes()), Err(IoError::Format(_))));
        assert!(matches!(read_observation_csv("time,y\n0,1\n1,x\n".as_bytes()), Err(IoError::NotANumber { row: 2, .. })));
        assert!(matches!(read_observation_csv("time,y\n1,1\n0,2\n".as_bytes()), Err(IoError::Series(_))));
    }

    #[test]
    fn labeled_tables_round_trip() {
        let g = GaussianDist::new(
            DVector::from_vec(vec![1.5, -2.0]),
            DMatrix::from_row_slice(2, 2, &[2.0, 0.1, 0.1, 1.0 / 3.0]),
        );
        let species = vec!["A".to_string(), "B".to_string()];
        let mut buf = Vec::new();
        write_gaussian_csv(&mut buf, &species, &g).unwrap();
        let t = read_labeled_csv(&buf[..], 1).unwrap();
        assert_eq!(t.labels, vec![vec!["A".to_string()], vec!["B".to_string()]]);
        assert_eq!(t.column("mean").unwrap(), g.mean.as_slice());
        assert_eq!(t.column("cov_B").unwrap(), g.cov.column(1).as_slice());
        assert_eq!(t.column("species"), None);
        assert!(matches!(read_labeled_csv("a,b\nx,y\n".as_bytes(), 1), Err(IoError::NotANumber { .. })));
    }
}
