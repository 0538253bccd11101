//! Dense linear-algebra oracles for the integration tests.
//!
//! Everything here is an independent route: dense row-major matrices,
//! Gaussian elimination with partial pivoting, a certified Collatz-Wielandt
//! enclosure of the Perron value of a nonnegative irreducible matrix, and a
//! scaling-and-squaring matrix exponential. None of it touches the
//! production tridiagonal or iteration code paths.
//!
//! Each integration-test binary compiles this module separately and uses
//! only a slice of it.
#![allow(dead_code)]

use sirsb_core::TridiagonalOperator;

#[derive(Debug, Clone)]
pub struct Dense {
    pub n: usize,
    a: Vec<f64>,
}

impl Dense {
    pub fn zeros(n: usize) -> Self {
        Dense { n, a: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Dense::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_tridiagonal(op: &TridiagonalOperator) -> Self {
        let n = op.n();
        let mut m = Dense::zeros(n);
        for i in 0..n {
            m.set(i, i, op.diag()[i]);
            if i > 0 {
                m.set(i, i - 1, op.lower()[i - 1]);
            }
            if i + 1 < n {
                m.set(i, i + 1, op.upper()[i]);
            }
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn matmul(&self, other: &Dense) -> Dense {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Dense::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.a[i * n + j] += aik * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn add_scaled_identity(&mut self, s: f64) {
        for i in 0..self.n {
            let v = self.get(i, i) + s;
            self.set(i, i, v);
        }
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.a {
            *v *= c;
        }
    }

    pub fn max_abs_row_sum(&self) -> f64 {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0f64, f64::max)
    }

    /// Solve `self x = b` by Gaussian elimination with partial pivoting.
    pub fn lu_solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut m = self.a.clone();
        let mut x = b.to_vec();
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&p, &q| {
                    m[p * n + col]
                        .abs()
                        .partial_cmp(&m[q * n + col].abs())
                        .unwrap()
                })
                .unwrap();
            assert!(m[pivot_row * n + col].abs() > 0.0, "singular oracle matrix");
            if pivot_row != col {
                for j in 0..n {
                    m.swap(col * n + j, pivot_row * n + j);
                }
                x.swap(col, pivot_row);
            }
            let pivot = m[col * n + col];
            for row in col + 1..n {
                let factor = m[row * n + col] / pivot;
                if factor == 0.0 {
                    continue;
                }
                for j in col..n {
                    m[row * n + j] -= factor * m[col * n + j];
                }
                x[row] -= factor * x[col];
            }
        }
        for row in (0..n).rev() {
            let mut acc = x[row];
            for j in row + 1..n {
                acc -= m[row * n + j] * x[j];
            }
            x[row] = acc / m[row * n + row];
        }
        x
    }

    /// Dense inverse, column by column.
    pub fn inverse(&self) -> Dense {
        let n = self.n;
        let mut inv = Dense::zeros(n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = self.lu_solve(&e);
            for (i, &v) in col.iter().enumerate() {
                inv.set(i, j, v);
            }
        }
        inv
    }
}

/// Certified two-sided Collatz-Wielandt enclosure of the Perron value of a
/// nonnegative irreducible matrix: for any positive `x`,
/// `min_i (Ax)_i / x_i ≤ r(A) ≤ max_i (Ax)_i / x_i`. Iterates until the
/// enclosure width drops below `tol` (absolute). Returns `(lo, hi, x)`.
pub fn perron_enclosure(a: &Dense, tol: f64, max_iter: usize) -> (f64, f64, Vec<f64>) {
    let n = a.n;
    let mut x = vec![1.0; n];
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for _ in 0..max_iter {
        let ax = a.matvec(&x);
        let mut new_lo = f64::INFINITY;
        let mut new_hi = f64::NEG_INFINITY;
        for i in 0..n {
            assert!(x[i] > 0.0, "Collatz-Wielandt needs a positive iterate");
            let q = ax[i] / x[i];
            new_lo = new_lo.min(q);
            new_hi = new_hi.max(q);
        }
        lo = lo.max(new_lo);
        hi = hi.min(new_hi);
        if hi - lo <= tol {
            return (lo, hi, x);
        }
        let norm = ax.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        x = ax.into_iter().map(|v| v / norm).collect();
    }
    (lo, hi, x)
}

/// `exp(t A)` by scaling and squaring with a Taylor series.
pub fn expm(a: &Dense, t: f64) -> Dense {
    let n = a.n;
    let mut b = a.clone();
    b.scale(t);
    let norm = b.max_abs_row_sum();
    let mut squarings = 0u32;
    let mut scaled = norm;
    while scaled > 0.5 {
        scaled /= 2.0;
        squarings += 1;
    }
    b.scale(1.0 / f64::powi(2.0, squarings as i32));

    let mut result = Dense::identity(n);
    let mut term = Dense::identity(n);
    for k in 1..=30 {
        term = term.matmul(&b);
        term.scale(1.0 / k as f64);
        for i in 0..n * n {
            result.a[i] += term.a[i];
        }
        if term.max_abs_row_sum() < 1e-20 {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    result
}

/// Deterministic pseudo-random values in [lo, hi) without pulling an RNG
/// into the oracle path.
pub fn lcg_values(seed: u64, count: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (0..count)
        .map(|_| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let u = (state >> 11) as f64 / (1u64 << 53) as f64;
            lo + (hi - lo) * u
        })
        .collect()
}
