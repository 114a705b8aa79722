//! Dense LU factorization with partial pivoting.

use super::EngineError;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n + c]
    }

    #[inline]
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.n + c] += v;
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.n + c] = v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|r| self.data[r * self.n..(r + 1) * self.n].iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Solve `a * x = b` by Gaussian elimination with partial pivoting.
///
/// Fails with [`EngineError::Singular`] carrying the elimination column where
/// no usable pivot was found.
pub fn linear_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, EngineError> {
    let n = a.dim();
    if b.len() != n {
        return Err(EngineError::Dimension { rows: n, rhs: b.len() });
    }
    let mut m = a.data.clone();
    let mut x = b.to_vec();
    let tiny = f64::EPSILON * a.max_abs() * n as f64;
    for k in 0..n {
        let (p, pmax) =
            (k..n)
                .map(|r| (r, m[r * n + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(pmax > tiny) || !pmax.is_finite() {
            return Err(EngineError::Singular { pivot: k });
        }
        if p != k {
            for c in 0..n {
                m.swap(k * n + c, p * n + c);
            }
            x.swap(k, p);
        }
        let pivot = m[k * n + k];
        for r in k + 1..n {
            let f = m[r * n + k] / pivot;
            if f == 0.0 {
                continue;
            }
            m[r * n + k] = 0.0;
            for c in k + 1..n {
                m[r * n + c] -= f * m[k * n + c];
            }
            x[r] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for c in k + 1..n {
            s -= m[k * n + c] * x[c];
        }
        x[k] = s / m[k * n + k];
    }
    Ok(x)
}
