//! Small dense complex matrices stored row-major.

use num_complex::Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Panics if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols, "CMatrix::from_vec size");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// `a^H b`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Dominant left singular vector of the `m × n` matrix whose columns are
/// `columns`, via power iteration on `A A^H`. Returns `None` for a zero
/// matrix. The phase is fixed so the largest-magnitude entry is real and
/// positive.
pub fn dominant_left_singular(columns: &[&[Complex64]], m: usize) -> Option<Vec<Complex64>> {
    if columns.is_empty() || m == 0 {
        return None;
    }
    // Gram matrix A A^H (m × m, Hermitian).
    let mut gram = vec![Complex64::new(0.0, 0.0); m * m];
    for col in columns {
        for i in 0..m {
            for j in 0..m {
                gram[i * m + j] += col[i] * col[j].conj();
            }
        }
    }
    let trace: f64 = (0..m).map(|i| gram[i * m + i].re).sum();
    if trace <= 0.0 || !trace.is_finite() {
        return None;
    }
    // Start from the column with the largest energy; it cannot be orthogonal
    // to the dominant subspace unless the matrix is rank-deficient in a way
    // that power iteration resolves anyway through rounding.
    let start = columns
        .iter()
        .max_by(|a, b| norm_sqr(a).total_cmp(&norm_sqr(b)))
        .expect("nonempty");
    let mut v: Vec<Complex64> = start.to_vec();
    let mut prev = 0.0;
    for _ in 0..500 {
        let mut w = vec![Complex64::new(0.0, 0.0); m];
        for i in 0..m {
            for j in 0..m {
                w[i] += gram[i * m + j] * v[j];
            }
        }
        let n = norm_sqr(&w).sqrt();
        if n == 0.0 {
            return None;
        }
        for z in w.iter_mut() {
            *z /= n;
        }
        v = w;
        if (n - prev).abs() <= 1e-14 * n {
            break;
        }
        prev = n;
    }
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
        .expect("nonempty");
    let rot = pivot.conj() / pivot.norm();
    Some(v.into_iter().map(|z| z * rot).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn inner_conjugates_left() {
        let a = [c(0.0, 1.0)];
        let b = [c(0.0, 1.0)];
        assert_eq!(inner(&a, &b), c(1.0, 0.0));
    }

    #[test]
    fn dominant_direction_of_rank_one() {
        let u = [c(0.6, 0.0), c(0.0, 0.8)];
        let col1: Vec<_> = u.iter().map(|z| z * c(2.0, 1.0)).collect();
        let col2: Vec<_> = u.iter().map(|z| z * c(-1.0, 0.5)).collect();
        let v = dominant_left_singular(&[&col1, &col2], 2).unwrap();
        let overlap = inner(&u, &v).norm();
        assert!((overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_has_no_direction() {
        let z = [c(0.0, 0.0); 3];
        assert!(dominant_left_singular(&[&z], 3).is_none());
    }
}
