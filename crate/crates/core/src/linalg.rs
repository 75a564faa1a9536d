//! Dense symmetric positive-definite solves for the Newton iteration.

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn max_abs_diag(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i).abs()).fold(0.0, f64::max)
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// Solve `(A + shift I) x = b` for symmetric `A` by Cholesky.
///
/// Returns `None` when the shifted matrix is not positive definite or when a
/// pivot falls below `rel_pivot * max|diag|`.
pub fn cholesky_solve(a: &SquareMatrix, shift: f64, b: &[f64], rel_pivot: f64) -> Option<Vec<f64>> {
    let n = a.n;
    let floor = rel_pivot * (a.max_abs_diag() + shift.abs()).max(f64::MIN_POSITIVE);
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a.get(j, j) + shift;
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if d.is_nan() || d <= floor || !d.is_finite() {
            return None;
        }
        let ljj = d.sqrt();
        l[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / ljj;
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system() {
        let a = SquareMatrix { n: 3, data: vec![4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0] };
        let b = [1.0, 2.0, 3.0];
        let x = cholesky_solve(&a, 0.0, &b, 1e-14).unwrap();
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a.get(i, j) * x[j]).sum();
            assert!((r - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_singular_and_indefinite() {
        let singular = SquareMatrix { n: 2, data: vec![1.0, 1.0, 1.0, 1.0] };
        assert!(cholesky_solve(&singular, 0.0, &[1.0, 1.0], 1e-12).is_none());
        assert!(cholesky_solve(&singular, 1e-3, &[1.0, 1.0], 1e-12).is_some());
        let indefinite = SquareMatrix { n: 2, data: vec![1.0, 0.0, 0.0, -1.0] };
        assert!(cholesky_solve(&indefinite, 0.0, &[1.0, 1.0], 1e-12).is_none());
    }
}
