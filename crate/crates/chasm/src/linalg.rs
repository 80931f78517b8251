//! Small dense real matrices: just enough linear algebra for C x C channel
//! operators and the verification instruments. Row-major storage.

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub data: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { data: vec![0.0; rows * cols], rows, cols }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            data.extend_from_slice(row);
        }
        Mat { data, rows: r, cols: c }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.at(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * out.cols + j] += a * other.at(k, j);
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Mat { data, rows: self.rows, cols: self.cols }
    }

    pub fn scale(&self, s: f64) -> Mat {
        let data = self.data.iter().map(|a| a * s).collect();
        Mat { data, rows: self.rows, cols: self.cols }
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> f64 {
        let mut best = 0.0f64;
        for j in 0..self.cols {
            let s: f64 = (0..self.rows).map(|i| self.at(i, j).abs()).sum();
            best = best.max(s);
        }
        best
    }

    pub fn norm_inf_entry(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Determinant via LU with partial pivoting. Square matrices only.
    pub fn det(&self) -> f64 {
        assert_eq!(self.rows, self.cols, "det needs a square matrix");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut sign = 1.0f64;
        let mut det = 1.0f64;
        for col in 0..n {
            let mut piv = col;
            let mut best = a[col * n + col].abs();
            for r in col + 1..n {
                let v = a[r * n + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best == 0.0 {
                return 0.0;
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                }
                sign = -sign;
            }
            let d = a[col * n + col];
            det *= d;
            for r in col + 1..n {
                let f = a[r * n + col] / d;
                if f == 0.0 {
                    continue;
                }
                for j in col..n {
                    a[r * n + j] -= f * a[col * n + j];
                }
            }
        }
        sign * det
    }
}

/// Matrix exponential by scaling-and-squaring around a high-order Taylor
/// core. Correct for any square matrix (the Frechet trick below feeds it
/// non-skew blocks); accuracy is far below 1e-12 relative at the norms that
/// arise here.
pub fn matrix_exp(a: &Mat) -> Mat {
    assert_eq!(a.rows, a.cols, "matrix_exp needs a square matrix");
    let n = a.rows;
    let norm = a.norm_1();
    if norm == 0.0 {
        return Mat::identity(n);
    }
    let mut squarings = 0u32;
    let mut scaled = a.clone();
    if norm > 0.25 {
        squarings = (norm / 0.25).log2().ceil() as u32;
        scaled = a.scale(0.5f64.powi(squarings as i32));
    }
    // Taylor core: with the scaled norm <= 0.25, 18 terms leave a remainder
    // below 1e-25.
    let mut result = Mat::identity(n);
    let mut term = Mat::identity(n);
    for k in 1..=18u32 {
        term = term.matmul(&scaled).scale(1.0 / k as f64);
        result = result.add(&term);
    }
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    result
}

/// Frechet derivative of the matrix exponential in direction `e`, via the
/// augmented block exponential
/// `exp([[A, E], [0, A]]) = [[exp A, L(A,E)], [0, exp A]]`.
/// Returns `(exp(a), L(a, e))`.
pub fn expm_frechet(a: &Mat, e: &Mat) -> (Mat, Mat) {
    assert_eq!(a.rows, a.cols);
    assert_eq!((a.rows, a.cols), (e.rows, e.cols));
    let n = a.rows;
    let mut blk = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            blk.set(i, j, a.at(i, j));
            blk.set(i, n + j, e.at(i, j));
            blk.set(n + i, n + j, a.at(i, j));
        }
    }
    let big = matrix_exp(&blk);
    let mut expa = Mat::zeros(n, n);
    let mut frechet = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            expa.set(i, j, big.at(i, j));
            frechet.set(i, j, big.at(i, n + j));
        }
    }
    (expa, frechet)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn random_skew(c: usize, seed: u64, scale: f64) -> Mat {
        let mut rng = SeededRng::new(seed);
        let mut a = Mat::zeros(c, c);
        for i in 1..c {
            for j in 0..i {
                let t = rng.uniform(-scale, scale);
                a.set(i, j, t);
                a.set(j, i, -t);
            }
        }
        a
    }

    /// Independent slow oracle: pre-scale by a power of two until the norm
    /// is below one, run 128 Taylor terms, square back.
    fn taylor_oracle(a: &Mat) -> Mat {
        let n = a.rows;
        let mut squarings = 0u32;
        let mut scaled = a.clone();
        while scaled.norm_1() > 1.0 {
            scaled = scaled.scale(0.5);
            squarings += 1;
        }
        let mut result = Mat::identity(n);
        let mut term = Mat::identity(n);
        for k in 1..=128u32 {
            term = term.matmul(&scaled).scale(1.0 / k as f64);
            result = result.add(&term);
        }
        for _ in 0..squarings {
            result = result.matmul(&result);
        }
        result
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let z = Mat::zeros(4, 4);
        assert_eq!(matrix_exp(&z), Mat::identity(4));
    }

    #[test]
    fn exp_of_2x2_skew_is_rotation() {
        let t: f64 = 0.83;
        let mut a = Mat::zeros(2, 2);
        a.set(0, 1, -t);
        a.set(1, 0, t);
        let u = matrix_exp(&a);
        let expect = Mat::from_rows(&[vec![t.cos(), -t.sin()], vec![t.sin(), t.cos()]]);
        assert!(u.max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn exp_of_random_skew_is_special_orthogonal_and_matches_oracle() {
        for seed in 0..5 {
            let a = random_skew(6, seed, 1.5);
            let u = matrix_exp(&a);
            let gram = u.transpose().matmul(&u);
            assert!(gram.max_abs_diff(&Mat::identity(6)) < 1e-10);
            assert!((u.det() - 1.0).abs() < 1e-10);
            let oracle = taylor_oracle(&a);
            assert!(u.max_abs_diff(&oracle) < 1e-11, "seed {seed}");
        }
    }

    #[test]
    fn exp_handles_moderately_large_norms() {
        let a = random_skew(5, 9, 4.0); // 1-norm around 10
        assert!(a.norm_1() > 5.0);
        let u = matrix_exp(&a);
        let oracle = taylor_oracle(&a);
        assert!(u.max_abs_diff(&oracle) < 1e-11);
        assert!(u.transpose().matmul(&u).max_abs_diff(&Mat::identity(5)) < 1e-10);
    }

    #[test]
    fn frechet_matches_central_differences() {
        let a = random_skew(4, 2, 0.8);
        let mut rng = SeededRng::new(33);
        let mut e = Mat::zeros(4, 4);
        for v in e.data.iter_mut() {
            *v = rng.uniform(-1.0, 1.0);
        }
        let (expa, lad) = expm_frechet(&a, &e);
        assert!(expa.max_abs_diff(&matrix_exp(&a)) < 1e-13);
        let h = 1e-6;
        let plus = matrix_exp(&a.add(&e.scale(h)));
        let minus = matrix_exp(&a.add(&e.scale(-h)));
        let fd = plus.add(&minus.scale(-1.0)).scale(1.0 / (2.0 * h));
        assert!(lad.max_abs_diff(&fd) < 1e-8);
    }

    #[test]
    fn det_via_lu() {
        let m = Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        assert!((m.det() - 5.0).abs() < 1e-14);
        let r = Mat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!((r.det() + 1.0).abs() < 1e-14);
    }
}
