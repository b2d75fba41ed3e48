//! Dense matrices over `F_q` and reduced row echelon form.
//!
//! `e_i` lies in the row space of `M` iff some row of `rref(M)` equals `e_i`:
//! writing `e_i` in the RREF basis, the coefficient of each basis row is the
//! entry of `e_i` at that row's pivot column, so only the row pivoting at `i`
//! can appear, with coefficient 1. Counting recoverable packets is therefore
//! counting RREF rows with a single nonzero entry.

use std::fmt;

use crate::gf::{FieldElement, FieldSpec, GfError};

/// Row-major `rows x cols` matrix over a borrowed field.
#[derive(Clone, PartialEq, Eq)]
pub struct GfMatrix<'f> {
    field: &'f FieldSpec,
    rows: usize,
    cols: usize,
    data: Vec<FieldElement>,
}

impl fmt::Debug for GfMatrix<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "GfMatrix over F_{} ({}x{})", self.field.order(), self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<u32> = self.row(r).iter().map(|e| e.value()).collect();
            writeln!(f, "  {row:?}")?;
        }
        Ok(())
    }
}

impl<'f> GfMatrix<'f> {
    pub fn zeros(field: &'f FieldSpec, rows: usize, cols: usize) -> Self {
        GfMatrix { field, rows, cols, data: vec![FieldElement::ZERO; rows * cols] }
    }

    pub fn identity(field: &'f FieldSpec, k: usize) -> Self {
        let mut m = Self::zeros(field, k, k);
        for i in 0..k {
            m.data[i * k + i] = FieldElement::ONE;
        }
        m
    }

    /// Builds a matrix from integer encodings; every row must have `cols` entries.
    pub fn from_rows(field: &'f FieldSpec, cols: usize, rows: &[Vec<u32>]) -> Result<Self, GfError> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "ragged matrix");
            for &v in row {
                data.push(field.element(v)?);
            }
        }
        Ok(GfMatrix { field, rows: rows.len(), cols, data })
    }

    pub fn from_elements(field: &'f FieldSpec, rows: usize, cols: usize, data: Vec<FieldElement>) -> Self {
        assert_eq!(data.len(), rows * cols);
        GfMatrix { field, rows, cols, data }
    }

    pub fn field(&self) -> &'f FieldSpec {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: FieldElement) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[FieldElement] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<u32>> {
        (0..self.rows)
            .map(|r| self.row(r).iter().map(|e| e.value()).collect())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    /// Canonical reduced row echelon form.
    pub fn rref(&self) -> Self {
        let mut m = self.clone();
        rref_in_place(self.field, &mut m.data, m.rows, m.cols);
        m
    }

    pub fn rank(&self) -> usize {
        let mut data = self.data.clone();
        rref_in_place(self.field, &mut data, self.rows, self.cols)
    }

    /// Number of unit vectors `e_i` in the row space.
    pub fn count_recoverable(&self) -> usize {
        let mut data = self.data.clone();
        rref_in_place(self.field, &mut data, self.rows, self.cols);
        count_unit_rows(&data, self.cols)
    }
}

pub fn rref<'f>(m: &GfMatrix<'f>) -> GfMatrix<'f> {
    m.rref()
}

pub fn count_recoverable(m: &GfMatrix<'_>) -> usize {
    m.count_recoverable()
}

/// Row-reduces `data` (row-major, `rows x cols`) in place and returns the rank.
///
/// Pivots are 1, move strictly right, and are the only nonzero entries in
/// their columns; zero rows end up at the bottom.
pub fn rref_in_place(field: &FieldSpec, data: &mut [FieldElement], rows: usize, cols: usize) -> usize {
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(pivot) = (rank..rows).find(|&r| !data[r * cols + c].is_zero()) else {
            continue;
        };
        if pivot != rank {
            for j in c..cols {
                data.swap(pivot * cols + j, rank * cols + j);
            }
        }
        let inv = field
            .inv(data[rank * cols + c])
            .expect("pivot is nonzero");
        if inv != FieldElement::ONE {
            for j in c..cols {
                data[rank * cols + j] = field.mul(data[rank * cols + j], inv);
            }
        }
        for r in 0..rows {
            if r == rank {
                continue;
            }
            let factor = data[r * cols + c];
            if factor.is_zero() {
                continue;
            }
            for j in c..cols {
                let sub = field.mul(factor, data[rank * cols + j]);
                data[r * cols + j] = field.sub(data[r * cols + j], sub);
            }
        }
        rank += 1;
    }
    rank
}

/// Rows with exactly one nonzero entry.
pub fn count_unit_rows(data: &[FieldElement], cols: usize) -> usize {
    if cols == 0 {
        return 0;
    }
    data.chunks(cols)
        .filter(|row| row.iter().filter(|e| !e.is_zero()).count() == 1)
        .count()
}

/// RREF over `F_2` with each row packed into a `u64` (bit `j` = column `j`, `cols <= 64`).
pub fn rref_bits(rows: &mut [u64], cols: usize) -> usize {
    debug_assert!(cols <= 64);
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows.len() {
            break;
        }
        let bit = 1u64 << c;
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r] & bit != 0) else {
            continue;
        };
        rows.swap(pivot, rank);
        let pivot_row = rows[rank];
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && *row & bit != 0 {
                *row ^= pivot_row;
            }
        }
        rank += 1;
    }
    rank
}

pub fn count_unit_bit_rows(rows: &[u64]) -> usize {
    rows.iter().filter(|r| r.count_ones() == 1).count()
}
