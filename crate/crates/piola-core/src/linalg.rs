//! Small dense matrices, generic over the scalar type.
//!
//! Dimensions here never exceed C(8,4) = 70, and everything must run on
//! dual numbers as well as on `f64`, so hand-rolled routines are simpler
//! than adapting a linear-algebra crate's scalar traits. Pivot selection
//! always compares value parts only.

use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Mat<S> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c));
        Mat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        Mat::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = S::zero();
            for k in 0..self.cols {
                acc = acc + self[(i, k)] * other[(k, j)];
            }
            acc
        })
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = S::zero();
                for k in 0..self.cols {
                    acc = acc + self[(i, k)] * v[k];
                }
                acc
            })
            .collect()
    }

    pub fn scale(&self, s: S) -> Self {
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)] * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)] + other[(i, j)])
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)] - other[(i, j)])
    }

    /// Determinant by LU with partial pivoting on value parts.
    pub fn det(&self) -> S {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut det = S::one();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| {
                    a[(i, col)]
                        .value()
                        .abs()
                        .total_cmp(&a[(j, col)].value().abs())
                })
                .unwrap();
            if a[(pivot, col)].value() == 0.0 {
                return S::zero();
            }
            if pivot != col {
                for j in 0..n {
                    let tmp = a[(col, j)];
                    a[(col, j)] = a[(pivot, j)];
                    a[(pivot, j)] = tmp;
                }
                det = -det;
            }
            det = det * a[(col, col)];
            for i in col + 1..n {
                let factor = a[(i, col)] / a[(col, col)];
                for j in col..n {
                    a[(i, j)] = a[(i, j)] - factor * a[(col, j)];
                }
            }
        }
        det
    }

    /// Inverse by Gauss-Jordan with partial pivoting. Panics on exactly
    /// singular input; near-singular inputs are the caller's concern.
    pub fn inverse(&self) -> Self {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Mat::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| {
                    a[(i, col)]
                        .value()
                        .abs()
                        .total_cmp(&a[(j, col)].value().abs())
                })
                .unwrap();
            assert!(a[(pivot, col)].value() != 0.0, "singular matrix");
            if pivot != col {
                for j in 0..n {
                    a.data.swap(col * n + j, pivot * n + j);
                    inv.data.swap(col * n + j, pivot * n + j);
                }
            }
            let d = a[(col, col)];
            for j in 0..n {
                a[(col, j)] = a[(col, j)] / d;
                inv[(col, j)] = inv[(col, j)] / d;
            }
            for i in 0..n {
                if i != col {
                    let factor = a[(i, col)];
                    for j in 0..n {
                        a[(i, j)] = a[(i, j)] - factor * a[(col, j)];
                        inv[(i, j)] = inv[(i, j)] - factor * inv[(col, j)];
                    }
                }
            }
        }
        inv
    }

    /// Cholesky factor L with G = L Lᵀ. Returns None if a pivot's value
    /// part is not strictly positive.
    pub fn cholesky(&self) -> Option<Self> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut l = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self[(i, j)];
                for k in 0..j {
                    sum = sum - l[(i, k)] * l[(j, k)];
                }
                if i == j {
                    if sum.value() <= 0.0 {
                        return None;
                    }
                    l[(i, j)] = sum.sqrt();
                } else {
                    l[(i, j)] = sum / l[(j, j)];
                }
            }
        }
        Some(l)
    }

    /// Minor determinant: rows `ri`, columns `ci`.
    pub fn minor_det(&self, ri: &[usize], ci: &[usize]) -> S {
        assert_eq!(ri.len(), ci.len());
        Mat::from_fn(ri.len(), ci.len(), |i, j| self[(ri[i], ci[j])]).det()
    }

    pub fn map_values(&self) -> Mat<f64> {
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)].value())
    }
}

impl Mat<f64> {
    /// Max-abs entry norm.
    pub fn norm_inf(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }

    pub fn sym_defect(&self) -> f64 {
        self.sub(&self.transpose()).norm_inf()
    }
}

impl<S> std::ops::Index<(usize, usize)> for Mat<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for Mat<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    assert_eq!(a.len(), b.len());
    let mut acc = S::zero();
    for i in 0..a.len() {
        acc = acc + a[i] * b[i];
    }
    acc
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn norm_inf_vec(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}
