//! Compressed sparse row feature matrices.
//!
//! [`Dataset`] is the single storage layout for training and test examples.
//! Dense input is converted at ingestion with exact zeros dropped.

use crate::error::{Result, SvmError};

/// A row-major sparse matrix in CSR layout.
///
/// Construct through [`Dataset::from_csr`] (validated) or one of the
/// builders; the fields are read-only after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<u32>,
    values: Vec<f64>,
}

/// Borrowed view of one sparse row. Indices are 0-based and strictly increasing.
#[derive(Debug, Clone, Copy)]
pub struct SparseRow<'a> {
    pub indices: &'a [u32],
    pub values: &'a [f64],
}

impl<'a> SparseRow<'a> {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Sparse dot product by two-finger merge over the sorted indices.
    pub fn dot(&self, other: &SparseRow<'_>) -> f64 {
        let (ai, av) = (self.indices, self.values);
        let (bi, bv) = (other.indices, other.values);
        let (mut p, mut q) = (0, 0);
        let mut sum = 0.0;
        while p < ai.len() && q < bi.len() {
            match ai[p].cmp(&bi[q]) {
                std::cmp::Ordering::Less => p += 1,
                std::cmp::Ordering::Greater => q += 1,
                std::cmp::Ordering::Equal => {
                    sum += av[p] * bv[q];
                    p += 1;
                    q += 1;
                }
            }
        }
        sum
    }

    pub fn squared_norm(&self) -> f64 {
        self.dot(self)
    }
}

impl Dataset {
    /// An empty dataset with `n_cols` columns.
    pub fn empty(n_cols: usize) -> Self {
        Dataset {
            n_rows: 0,
            n_cols,
            row_offsets: vec![0],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a dataset from raw CSR arrays, checking every invariant.
    pub fn from_csr(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<u32>,
        values: Vec<f64>,
    ) -> Result<Self> {
        validate_dataset(Dataset {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Builds a dataset from dense rows, dropping exact zeros.
    pub fn from_dense<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut builder = DatasetBuilder::new();
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n_cols {
                return Err(SvmError::InvalidDataset(format!(
                    "row {i} has {} columns, expected {n_cols}",
                    row.len()
                )));
            }
            builder.push_dense_row(row);
        }
        builder.finish(Some(n_cols))
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[u32] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> SparseRow<'_> {
        let (start, end) = (self.row_offsets[i], self.row_offsets[i + 1]);
        SparseRow {
            indices: &self.col_indices[start..end],
            values: &self.values[start..end],
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = SparseRow<'_>> + '_ {
        (0..self.n_rows).map(move |i| self.row(i))
    }

    /// Copies the listed rows, in the given order, into a new dataset.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let mut out = DatasetBuilder::new();
        for &r in rows {
            let row = self.row(r);
            out.push_sparse_row(row.indices, row.values);
        }
        out.finish_unchecked(self.n_cols)
    }

    /// Dense copy of row `i` (length `n_cols`).
    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cols];
        let row = self.row(i);
        for (&c, &v) in row.indices.iter().zip(row.values) {
            out[c as usize] = v;
        }
        out
    }

    /// Returns the same data with a wider column space.
    pub fn with_n_cols(mut self, n_cols: usize) -> Result<Dataset> {
        if let Some(&max) = self.col_indices.iter().max() {
            if max as usize >= n_cols {
                return Err(SvmError::ShapeMismatch(format!(
                    "column index {} does not fit in {n_cols} columns",
                    max + 1
                )));
            }
        }
        self.n_cols = n_cols;
        Ok(self)
    }
}

/// Checks every [`Dataset`] invariant in a single O(nnz) scan.
pub fn validate_dataset(raw: Dataset) -> Result<Dataset> {
    let bad = |msg: String| Err(SvmError::InvalidDataset(msg));
    if raw.row_offsets.len() != raw.n_rows + 1 {
        return bad(format!(
            "row_offsets has length {}, expected {}",
            raw.row_offsets.len(),
            raw.n_rows + 1
        ));
    }
    if raw.row_offsets[0] != 0 {
        return bad("row_offsets[0] must be 0".into());
    }
    for i in 0..raw.n_rows {
        if raw.row_offsets[i + 1] < raw.row_offsets[i] {
            return bad(format!("non-decreasing offsets violated at row {i}"));
        }
    }
    let nnz = raw.row_offsets[raw.n_rows];
    if nnz != raw.values.len() || nnz != raw.col_indices.len() {
        return bad(format!(
            "row_offsets end at {nnz} but there are {} values and {} column indices",
            raw.values.len(),
            raw.col_indices.len()
        ));
    }
    for i in 0..raw.n_rows {
        let (start, end) = (raw.row_offsets[i], raw.row_offsets[i + 1]);
        let cols = &raw.col_indices[start..end];
        for (k, &c) in cols.iter().enumerate() {
            if c as usize >= raw.n_cols {
                return bad(format!(
                    "row {i}: column index {c} out of range for {} columns",
                    raw.n_cols
                ));
            }
            if k > 0 && cols[k - 1] >= c {
                return bad(format!(
                    "row {i}: column indices not strictly increasing ({} then {c})",
                    cols[k - 1]
                ));
            }
        }
        if let Some(k) = raw.values[start..end].iter().position(|v| !v.is_finite()) {
            return bad(format!(
                "row {i}: non-finite value at column {}",
                cols[k]
            ));
        }
    }
    Ok(raw)
}

/// Incremental row-by-row construction of a [`Dataset`].
#[derive(Debug, Default)]
pub struct DatasetBuilder {
    row_offsets: Vec<usize>,
    col_indices: Vec<u32>,
    values: Vec<f64>,
}

impl DatasetBuilder {
    pub fn new() -> Self {
        DatasetBuilder {
            row_offsets: vec![0],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.row_offsets.len() - 1
    }

    pub fn push_dense_row(&mut self, row: &[f64]) {
        for (c, &v) in row.iter().enumerate() {
            if v != 0.0 {
                self.col_indices.push(c as u32);
                self.values.push(v);
            }
        }
        self.row_offsets.push(self.values.len());
    }

    /// Appends a sparse row as given; ordering is checked in [`finish`](Self::finish).
    pub fn push_sparse_row(&mut self, indices: &[u32], values: &[f64]) {
        self.col_indices.extend_from_slice(indices);
        self.values.extend_from_slice(values);
        self.row_offsets.push(self.values.len());
    }

    /// Finishes the dataset. `n_cols` defaults to one past the largest index.
    pub fn finish(self, n_cols: Option<usize>) -> Result<Dataset> {
        let seen = self.col_indices.iter().max().map_or(0, |&c| c as usize + 1);
        let n_cols = n_cols.unwrap_or(seen);
        Dataset::from_csr(
            self.row_offsets.len() - 1,
            n_cols,
            self.row_offsets,
            self.col_indices,
            self.values,
        )
    }

    pub(crate) fn finish_unchecked(self, n_cols: usize) -> Dataset {
        Dataset {
            n_rows: self.row_offsets.len() - 1,
            n_cols,
            row_offsets: self.row_offsets,
            col_indices: self.col_indices,
            values: self.values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(n_rows: usize, n_cols: usize, off: Vec<usize>, cols: Vec<u32>, vals: Vec<f64>) -> Dataset {
        Dataset {
            n_rows,
            n_cols,
            row_offsets: off,
            col_indices: cols,
            values: vals,
        }
    }

    #[test]
    fn empty_dataset_is_valid() {
        let d = validate_dataset(raw(0, 3, vec![0], vec![], vec![])).unwrap();
        assert_eq!(d.n_rows(), 0);
    }

    #[test]
    fn decreasing_offsets_name_the_row() {
        let err = validate_dataset(raw(2, 3, vec![0, 2, 1], vec![0, 1], vec![1.0, 2.0])).unwrap_err();
        assert!(
            err.to_string().contains("non-decreasing offsets violated at row 1"),
            "{err}"
        );
    }

    #[test]
    fn duplicate_column_names_the_row() {
        let err = validate_dataset(raw(
            2,
            3,
            vec![0, 1, 3],
            vec![0, 2, 2],
            vec![1.0, 2.0, 3.0],
        ))
        .unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");
    }

    #[test]
    fn rejects_out_of_range_and_non_finite() {
        assert!(validate_dataset(raw(1, 2, vec![0, 1], vec![2], vec![1.0])).is_err());
        assert!(validate_dataset(raw(1, 2, vec![0, 1], vec![0], vec![f64::NAN])).is_err());
        assert!(validate_dataset(raw(1, 2, vec![0, 2], vec![0], vec![1.0])).is_err());
    }

    #[test]
    fn dense_conversion_drops_zeros() {
        let d = Dataset::from_dense(&[vec![1.0, 0.0, 2.0], vec![0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(d.n_rows(), 2);
        assert_eq!(d.n_cols(), 3);
        assert_eq!(d.nnz(), 2);
        assert_eq!(d.row(0).indices, &[0, 2]);
        assert_eq!(d.row(1).nnz(), 0);
        assert_eq!(d.dense_row(0), vec![1.0, 0.0, 2.0]);
    }

    #[test]
    fn merge_dot() {
        let d = Dataset::from_dense(&[vec![1.0, 0.0, 2.0, 3.0], vec![4.0, 5.0, 0.0, 6.0]]).unwrap();
        assert_eq!(d.row(0).dot(&d.row(1)), 22.0);
        assert_eq!(d.row(0).squared_norm(), 14.0);
    }

    #[test]
    fn select_rows_copies_in_order() {
        let d = Dataset::from_dense(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let s = d.select_rows(&[2, 0]);
        assert_eq!(s.dense_row(0), vec![3.0]);
        assert_eq!(s.dense_row(1), vec![1.0]);
    }
}
