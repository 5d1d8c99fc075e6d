use std::fmt;

use num_traits::{One, Zero};

use super::rational::{dot, format_rational, int, Rational, RationalVector};
use crate::error::{Error, Result};

/// Dense row-major matrix of rationals with fixed dimensions.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Rational>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "matrix entries",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from rows. The column count must be given explicitly
    /// so that matrices with zero rows still know their width.
    pub fn from_rows(cols: usize, rows: Vec<RationalVector>) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        let count = rows.len();
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    context: "matrix row length",
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Self {
            rows: count,
            cols,
            data,
        })
    }

    /// Integer matrix literal, mostly for tests and examples.
    pub fn from_integers<const N: usize>(rows: &[[i64; N]]) -> Self {
        let data = rows
            .iter()
            .flat_map(|r| r.iter().map(|&v| int(v)))
            .collect();
        Self {
            rows: rows.len(),
            cols: N,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> &Rational {
        &self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[Rational] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[Rational]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn column(&self, col: usize) -> RationalVector {
        (0..self.rows).map(|i| self.get(i, col).clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<RationalVector> {
        self.row_iter().map(<[Rational]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j).clone());
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn mul_vector(&self, v: &[Rational]) -> Result<RationalVector> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "matrix-vector product",
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok(self.row_iter().map(|row| dot(row, v)).collect())
    }

    /// Sub-matrix keeping the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for i in 0..self.rows {
            data.extend(cols.iter().map(|&j| self.get(i, j).clone()));
        }
        Self {
            rows: self.rows,
            cols: cols.len(),
            data,
        }
    }

    /// Returns a copy with `row` appended at the bottom.
    pub fn with_row(&self, row: &[Rational]) -> Result<Self> {
        if row.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "appended row length",
                expected: self.cols,
                found: row.len(),
            });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(row);
        Ok(Self {
            rows: self.rows + 1,
            cols: self.cols,
            data,
        })
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        if other.cols != self.cols {
            return Err(Error::DimensionMismatch {
                context: "stacked matrix width",
                expected: self.cols,
                found: other.cols,
            });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn rank(&self) -> usize {
        rref(self).rank
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RationalMatrix {}x{} [", self.rows, self.cols)?;
        for (i, row) in self.row_iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            let cells: Vec<String> = row.iter().map(format_rational).collect();
            write!(f, "{}", cells.join(" "))?;
        }
        write!(f, "]")
    }
}

/// Reduced row echelon form together with its pivot columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rref {
    pub matrix: RationalMatrix,
    pub pivots: Vec<usize>,
    pub rank: usize,
}

/// Gauss-Jordan elimination over the rationals.
pub fn rref(m: &RationalMatrix) -> Rref {
    let mut a = m.clone();
    let mut pivots = Vec::new();
    let mut lead = 0;

    for col in 0..a.cols {
        if lead == a.rows {
            break;
        }
        let Some(pivot_row) = (lead..a.rows).find(|&i| !a.get(i, col).is_zero()) else {
            continue;
        };
        a.swap_rows(lead, pivot_row);

        let inv = a.get(lead, col).recip();
        for j in col..a.cols {
            let idx = lead * a.cols + j;
            a.data[idx] = &a.data[idx] * &inv;
        }

        for i in 0..a.rows {
            if i == lead {
                continue;
            }
            let factor = a.get(i, col).clone();
            if factor.is_zero() {
                continue;
            }
            for j in col..a.cols {
                let delta = &factor * a.get(lead, j);
                let idx = i * a.cols + j;
                a.data[idx] -= delta;
            }
        }

        pivots.push(col);
        lead += 1;
    }

    let rank = pivots.len();
    Rref {
        matrix: a,
        pivots,
        rank,
    }
}

/// Exact classification of the solution set of a linear system `M x = c`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolutionSpace {
    Inconsistent,
    Unique(RationalVector),
    /// `particular + span(basis)`, with `basis` nonempty and linearly independent.
    Affine {
        particular: RationalVector,
        basis: Vec<RationalVector>,
    },
}

impl SolutionSpace {
    pub fn is_consistent(&self) -> bool {
        !matches!(self, SolutionSpace::Inconsistent)
    }

    /// Dimension of the solution set; `None` when it is empty.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            SolutionSpace::Inconsistent => None,
            SolutionSpace::Unique(_) => Some(0),
            SolutionSpace::Affine { basis, .. } => Some(basis.len()),
        }
    }

    pub fn particular(&self) -> Option<&RationalVector> {
        match self {
            SolutionSpace::Inconsistent => None,
            SolutionSpace::Unique(p) | SolutionSpace::Affine { particular: p, .. } => Some(p),
        }
    }

    pub fn basis(&self) -> &[RationalVector] {
        match self {
            SolutionSpace::Affine { basis, .. } => basis,
            _ => &[],
        }
    }
}

/// Solves `m x = c` exactly.
pub fn solve(m: &RationalMatrix, c: &[Rational]) -> Result<SolutionSpace> {
    if c.len() != m.rows() {
        return Err(Error::DimensionMismatch {
            context: "right-hand side length",
            expected: m.rows(),
            found: c.len(),
        });
    }

    let n = m.cols();
    let mut data = Vec::with_capacity(m.rows() * (n + 1));
    for (row, rhs) in m.row_iter().zip(c) {
        data.extend_from_slice(row);
        data.push(rhs.clone());
    }
    let augmented = RationalMatrix::from_vec(m.rows(), n + 1, data)?;
    let reduced = rref(&augmented);

    if reduced.pivots.last() == Some(&n) {
        return Ok(SolutionSpace::Inconsistent);
    }

    let r = &reduced.matrix;
    let mut particular = vec![Rational::zero(); n];
    for (i, &p) in reduced.pivots.iter().enumerate() {
        particular[p] = r.get(i, n).clone();
    }

    let mut is_pivot = vec![false; n];
    for &p in &reduced.pivots {
        is_pivot[p] = true;
    }
    let basis: Vec<RationalVector> = (0..n)
        .filter(|&j| !is_pivot[j])
        .map(|free| {
            let mut v = vec![Rational::zero(); n];
            v[free] = Rational::one();
            for (i, &p) in reduced.pivots.iter().enumerate() {
                v[p] = -r.get(i, free).clone();
            }
            v
        })
        .collect();

    if basis.is_empty() {
        Ok(SolutionSpace::Unique(particular))
    } else {
        Ok(SolutionSpace::Affine { particular, basis })
    }
}
