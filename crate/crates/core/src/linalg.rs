//! Small dense complex linear algebra: vectors, row-major matrices and a
//! Jacobi eigensolver for the tiny Hermitian matrices living in path space.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type CVec<T> = Vec<Complex<T>>;

/// `aᴴ b`.
pub fn inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y)
}

pub fn norm_sqr<T: Real>(a: &[Complex<T>]) -> T {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// Dense complex matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex::new(T::zero(), T::zero()); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex::new(T::one(), T::zero()));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, actual: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex<T>) {
        self.data[i * self.cols + j] = v;
    }

    /// Adds `scale · u vᴴ` in place.
    pub fn add_outer(&mut self, scale: Complex<T>, u: &[Complex<T>], v: &[Complex<T>]) {
        debug_assert_eq!(u.len(), self.rows);
        debug_assert_eq!(v.len(), self.cols);
        for (i, ui) in u.iter().enumerate() {
            let s = scale * ui;
            let row = &mut self.data[i * self.cols..(i + 1) * self.cols];
            for (x, vj) in row.iter_mut().zip(v) {
                *x += s * vj.conj();
            }
        }
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[Complex<T>]) -> CVec<T> {
        debug_assert_eq!(x.len(), self.cols);
        self.data
            .chunks(self.cols)
            .map(|row| row.iter().zip(x).fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a * b))
            .collect()
    }

    /// Row vector `wᴴ A`, returned unconjugated so that `wᴴ A f = Σ_j r_j f_j`.
    pub fn left_project(&self, w: &[Complex<T>]) -> CVec<T> {
        debug_assert_eq!(w.len(), self.rows);
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.cols];
        for (i, wi) in w.iter().enumerate() {
            let c = wi.conj();
            for (o, a) in out.iter_mut().zip(&self.data[i * self.cols..(i + 1) * self.cols]) {
                *o += c * a;
            }
        }
        out
    }

    /// `wᴴ A f`.
    pub fn bilinear(&self, w: &[Complex<T>], f: &[Complex<T>]) -> Complex<T> {
        self.left_project(w).iter().zip(f).fold(Complex::new(T::zero(), T::zero()), |acc, (r, x)| acc + r * x)
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.rows == self.cols && (0..self.rows).all(|i| (0..self.cols).all(|j| (self.get(i, j) - self.get(j, i).conj()).norm() <= tol))
    }

    /// Hermitian form `xᴴ A x`.
    pub fn quadratic_form(&self, x: &[Complex<T>]) -> Complex<T> {
        inner(x, &self.mul_vec(x))
    }
}

/// Eigenvalues of a Hermitian matrix in decreasing order.
///
/// The `n×n` complex problem is embedded in the real symmetric `2n×2n`
/// matrix `[[Re, -Im], [Im, Re]]`, whose spectrum is that of `A` with every
/// eigenvalue doubled, and solved with cyclic Jacobi rotations.
pub fn hermitian_eigenvalues<T: Real>(a: &CMatrix<T>) -> Vec<T> {
    assert_eq!(a.rows(), a.cols(), "eigenvalues need a square matrix");
    let n = a.rows();
    let dim = 2 * n;
    let mut s = vec![T::zero(); dim * dim];
    for i in 0..n {
        for j in 0..n {
            let z = a.get(i, j);
            // symmetrize against round-off in the input
            let zt = a.get(j, i).conj();
            let re = (z.re + zt.re) / T::lit(2.0);
            let im = (z.im + zt.im) / T::lit(2.0);
            s[i * dim + j] = re;
            s[(i + n) * dim + (j + n)] = re;
            s[i * dim + (j + n)] = -im;
            s[(i + n) * dim + j] = im;
        }
    }
    let mut eig = symmetric_jacobi(&mut s, dim);
    eig.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    eig.into_iter().step_by(2).collect()
}

/// Spectral norm of a Hermitian matrix, `max_k |λ_k|`.
pub fn hermitian_spectral_norm<T: Real>(a: &CMatrix<T>) -> T {
    hermitian_eigenvalues(a).into_iter().fold(T::zero(), |m, l| m.max(l.abs()))
}

fn symmetric_jacobi<T: Real>(s: &mut [T], n: usize) -> Vec<T> {
    let idx = |i: usize, j: usize| i * n + j;
    for _sweep in 0..100 {
        let off: T =
            (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| s[idx(i, j)] * s[idx(i, j)]).sum();
        let scale: T = (0..n).map(|i| s[idx(i, i)] * s[idx(i, i)]).sum::<T>() + off;
        if off <= T::epsilon() * T::epsilon() * scale || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = s[idx(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = s[idx(p, p)];
                let aqq = s[idx(q, q)];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = s[idx(k, p)];
                    let akq = s[idx(k, q)];
                    s[idx(k, p)] = c * akp - sn * akq;
                    s[idx(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = s[idx(p, k)];
                    let aqk = s[idx(q, k)];
                    s[idx(p, k)] = c * apk - sn * aqk;
                    s[idx(q, k)] = sn * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| s[idx(i, i)]).collect()
}
