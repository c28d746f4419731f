//! Compressed sparse row storage and the `i j value` triplet text format.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Square `n × n` matrix from triplets; duplicates are summed in input order.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: i.max(j) + 1,
                });
            }
            per_row[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in per_row {
            // Stable sort keeps the summation order of duplicates deterministic.
            row.sort_by_key(|&(j, _)| j);
            for (j, v) in row {
                if cols.len() > *row_ptr.last().unwrap() && *cols.last().unwrap() == j {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(CsrMatrix { n, row_ptr, cols, vals })
    }

    pub fn zeros(n: usize) -> Self {
        CsrMatrix {
            n,
            row_ptr: vec![0; n + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "dimension mismatch in sparse product");
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// `xᵀ A y`.
    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(self.apply(y)).map(|(a, b)| a * b).sum()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn add_to_dense(&self, m: &mut DMatrix<f64>, scale: f64) {
        for (i, j, v) in self.triplets() {
            m[(i, j)] += scale * v;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        self.add_to_dense(&mut m, 1.0);
        m
    }

    pub fn is_symmetric(&self) -> bool {
        self.triplets().all(|(i, j, v)| self.get(j, i) == v)
    }
}

pub fn write_triplets(entries: impl IntoIterator<Item = (usize, usize, f64)>) -> String {
    let mut out = String::new();
    for (i, j, v) in entries {
        let _ = writeln!(out, "{i} {j} {v:.16e}");
    }
    out
}

/// Parses `i j value` lines. Blank lines are skipped; anything else that is
/// not exactly two indices and a finite number is an error.
pub fn read_triplets(text: &str) -> Result<Vec<(usize, usize, f64)>> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: &str| Error::Parse {
            line: ln + 1,
            msg: msg.into(),
        };
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.len() != 3 {
            return Err(err("expected `i j value`"));
        }
        let i = tok[0].parse().map_err(|_| err("bad row index"))?;
        let j = tok[1].parse().map_err(|_| err("bad column index"))?;
        let v: f64 = tok[2].parse().map_err(|_| err("bad value"))?;
        if !v.is_finite() {
            return Err(err("non-finite value"));
        }
        out.push((i, j, v));
    }
    Ok(out)
}
