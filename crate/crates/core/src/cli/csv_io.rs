//! Trajectory tables: header row `theta,q0,…,q0d1,…`, one row per θ.

use crate::error::{Error, Result};
use crate::symexpr::Jet;
use crate::trajectory::Trajectory;

/// Parsed numeric table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::InvalidProblem(format!("csv: {e}"));
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v:.17e}"))).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidProblem(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidProblem(format!("csv: {e}")))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let bad = |msg: String| Error::InvalidProblem(format!("trajectory csv: {msg}"));
        let header: Vec<String> = r.headers().map_err(|e| bad(e.to_string()))?.iter().map(str::to_string).collect();
        if header.first().map(String::as_str) != Some("theta") {
            return Err(bad("first column must be `theta`".into()));
        }
        let mut rows = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let row = rec
                .iter()
                .map(|f| f.parse::<f64>().map_err(|_| bad(format!("row {}: `{f}` is not a number", line + 1))))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != header.len() {
                return Err(bad(format!("row {} has {} fields, header has {}", line + 1, row.len(), header.len())));
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(bad("no data rows".into()));
        }
        Ok(Table { header, rows })
    }
}

/// Column name of `q_c^(d)`.
pub fn state_column(c: usize, d: usize) -> String {
    if d == 0 { format!("q{c}") } else { format!("q{c}d{d}") }
}

/// Header for jets up to `order`: `theta`, then all components per order.
pub fn jet_header(state_dim: usize, order: usize) -> Vec<String> {
    let mut h = vec!["theta".to_string()];
    for d in 0..=order {
        h.extend((0..state_dim).map(|c| state_column(c, d)));
    }
    h
}

pub fn trajectory_table(tr: &Trajectory, order: usize, grid: &[f64]) -> Result<Table> {
    let rows = grid
        .iter()
        .map(|&theta| {
            let jet = tr.jet_at(theta, order)?;
            let mut row = vec![theta];
            for d in 0..=order {
                row.extend(jet.q.iter().map(|col| col[d]));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table { header: jet_header(tr.state_dim(), order), rows })
}

/// Jets read straight from the table when every column up to `order` is
/// present; `None` otherwise.
pub fn table_jets(table: &Table, state_dim: usize, order: usize) -> Option<Vec<Jet>> {
    let idx: Vec<Vec<usize>> = (0..state_dim)
        .map(|c| (0..=order).map(|d| table.column(&state_column(c, d))).collect::<Option<Vec<_>>>())
        .collect::<Option<Vec<_>>>()?;
    Some(
        table
            .rows
            .iter()
            .map(|row| Jet::new(row[0], idx.iter().map(|cols| cols.iter().map(|&i| row[i]).collect()).collect()))
            .collect(),
    )
}

/// Samples `(θ, [values of the named columns])`.
pub fn samples(table: &Table, names: &[String]) -> Result<Vec<(f64, Vec<f64>)>> {
    let idx = names
        .iter()
        .map(|n| table.column(n).ok_or_else(|| Error::InvalidProblem(format!("trajectory csv: missing column `{n}`"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(table.rows.iter().map(|row| (row[0], idx.iter().map(|&i| row[i]).collect())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_jets() {
        let tr = Trajectory::interpolate((0.0, 1.0), 6, 2, |th| vec![th * th, th.sin()]).unwrap();
        let table = trajectory_table(&tr, 2, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(table.header, ["theta", "q0", "q1", "q0d1", "q1d1", "q0d2", "q1d2"]);
        let back = Table::from_csv(&table.to_csv().unwrap()).unwrap();
        assert_eq!(back, table);
        let jets = table_jets(&back, 2, 2).unwrap();
        assert!((jets[1].q[0][1] - 1.0).abs() < 1e-12);
        assert!(table_jets(&back, 2, 3).is_none());
    }

    #[test]
    fn malformed_input() {
        assert!(Table::from_csv("x,q0\n1,2\n").is_err());
        assert!(Table::from_csv("theta,q0\n1,abc\n").is_err());
        assert!(Table::from_csv("theta,q0\n").is_err());
    }
}
