//! Plot-ready CSV tables: `.` decimals, `\n` line ends, header row first.

use crate::error::{Error, Result};
use crate::sim::TrajectorySamples;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl Cell {
    fn render(&self) -> String {
        match *self {
            Cell::Int(v) => v.to_string(),
            // shortest text that round-trips; never locale dependent
            Cell::Float(v) => format!("{v:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::Argument(format!("row has {} cells, header has {}", row.len(), self.header.len())));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("writing to memory");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("writing to memory")).expect("CSV output is UTF-8")
    }
}

/// `(n, p_n)`.
pub fn distribution_table(p: &[f64]) -> CsvTable {
    let mut t = CsvTable::new(&["n", "p_n"]);
    t.rows = p.iter().enumerate().map(|(n, &x)| vec![n.into(), x.into()]).collect();
    t
}

/// `(n, p_exact)` for a tail curve.
pub fn tail_table(tail: &[f64]) -> CsvTable {
    let mut t = CsvTable::new(&["n", "p_exact"]);
    t.rows = tail.iter().enumerate().map(|(n, &x)| vec![n.into(), x.into()]).collect();
    t
}

/// `(n, p_approx)` aligned with [`tail_table`].
pub fn approx_table(approx: &[f64]) -> CsvTable {
    let mut t = CsvTable::new(&["n", "p_approx"]);
    t.rows = approx.iter().enumerate().map(|(n, &x)| vec![n.into(), x.into()]).collect();
    t
}

/// `(rho, n, p_exact, p_ht)`, one block per load.
pub fn compare_table(curves: &[(f64, Vec<f64>, Vec<f64>)]) -> CsvTable {
    let mut t = CsvTable::new(&["rho", "n", "p_exact", "p_ht"]);
    for (rho, exact, ht) in curves {
        for (n, (e, h)) in exact.iter().zip(ht).enumerate() {
            t.rows.push(vec![(*rho).into(), n.into(), (*e).into(), (*h).into()]);
        }
    }
    t
}

/// `(t, vA, vS, cAS)`.
pub fn flow_table(rows: &[[f64; 4]]) -> CsvTable {
    let mut t = CsvTable::new(&["t", "vA", "vS", "cAS"]);
    t.rows = rows.iter().map(|r| r.iter().map(|&x| x.into()).collect()).collect();
    t
}

/// `(r, z, K)`.
pub fn kernel_table(rows: &[(f64, f64, f64)]) -> CsvTable {
    let mut t = CsvTable::new(&["r", "z", "K"]);
    t.rows = rows.iter().map(|&(r, z, k)| vec![r.into(), z.into(), k.into()]).collect();
    t
}

/// `(t, scaled_q, replication_id)`.
pub fn trajectory_table(s: &TrajectorySamples) -> CsvTable {
    let mut t = CsvTable::new(&["t", "scaled_q", "replication_id"]);
    for (rep, row) in s.values.iter().enumerate() {
        for (&time, &q) in s.t_grid.iter().zip(row) {
            t.rows.push(vec![time.into(), q.into(), rep.into()]);
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout() {
        let t = distribution_table(&[0.5, 0.25, 0.125]);
        assert_eq!(t.to_csv(), "n,p_n\n0,0.5\n1,0.25\n2,0.125\n");
    }

    #[test]
    fn floats_round_trip() {
        let x = 0.1 + 0.2;
        let text = flow_table(&[[1.0, x, 1e-300, -2.5]]).to_csv();
        let line = text.lines().nth(1).unwrap();
        let back: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(back, vec![1.0, x, 1e-300, -2.5]);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn row_width_checked() {
        let mut t = CsvTable::new(&["a", "b"]);
        assert!(t.push(vec![1usize.into()]).is_err());
        t.push(vec![1usize.into(), 2.0.into()]).unwrap();
        assert_eq!(t.to_csv(), "a,b\n1,2.0\n");
    }
}
