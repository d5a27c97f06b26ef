//! Dense complex linear algebra for the small Hilbert spaces used here
//! (single-atom dimension 3-5, two-atom dimension up to 36).
//!
//! Storage is row-major. All operations are pure; nothing here allocates
//! behind a shared handle, so matrices are `Send + Sync`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Relative tolerance used by [`ComplexMatrix::is_hermitian`] when callers
/// do not supply their own.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Eigenvalues below this magnitude are treated as round-off when taking
/// matrix square roots.
pub const NEGATIVE_EIG_TOL: f64 = 1e-8;

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.4e}{:+.4e}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for k in 0..n {
            m[(k, k)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (k, &v) in values.iter().enumerate() {
            m[(k, k)] = C64::new(v, 0.0);
        }
        m
    }

    /// `|ket⟩⟨bra|`
    pub fn outer(ket: &[C64], bra: &[C64]) -> Self {
        let mut m = Self::zeros(ket.len(), bra.len());
        for (r, a) in ket.iter().enumerate() {
            for (c, b) in bra.iter().enumerate() {
                m[(r, c)] = a * b.conj();
            }
        }
        m
    }

    /// Single-entry matrix `|row⟩⟨col|` of dimension `n`.
    pub fn unit(n: usize, row: usize, col: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m[(row, col)] = ONE;
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn dagger(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m[(c, r)] = self[(r, c)].conj();
            }
        }
        m
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == ZERO {
                    continue;
                }
                let row_b = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let row_o = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
                for (o, b) in row_o.iter_mut().zip(row_b) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|r| self.data[r * self.cols..(r + 1) * self.cols].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|k| self[(k, k)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Largest entrywise deviation `max|a_ij - b_ij|`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// `max|A - A†| <= tol * max|A|` (an all-zero matrix is Hermitian).
    pub fn is_hermitian(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self.max_abs();
        let mut worst = 0.0f64;
        for r in 0..self.rows {
            for c in r..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst <= tol * scale
    }

    /// Standard Kronecker product `a ⊗ b`.
    pub fn kron(&self, b: &Self) -> Self {
        kron(self, b)
    }

    pub fn herm_eig(&self) -> Result<HermitianEigen> {
        herm_eig(self)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in add");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in sub");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("shape mismatch in mul")
    }
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ar in 0..a.rows {
        for ac in 0..a.cols {
            let x = a[(ar, ac)];
            if x == ZERO {
                continue;
            }
            for br in 0..b.rows {
                for bc in 0..b.cols {
                    out[(ar * b.rows + br, ac * b.cols + bc)] = x * b[(br, bc)];
                }
            }
        }
    }
    out
}

/// Eigendecomposition `A = V diag(λ) V†` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// Rebuild `V f(Λ) V†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            for r in 0..n {
                let vr = self.vectors[(r, k)] * w;
                for c in 0..n {
                    out[(r, c)] += vr * self.vectors[(c, k)].conj();
                }
            }
        }
        out
    }
}

/// Hermitian eigensolver by cyclic Jacobi rotations.
pub fn herm_eig(a: &ComplexMatrix) -> Result<HermitianEigen> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!("eigendecomposition of {}x{}", a.rows, a.cols)));
    }
    if !a.is_hermitian(1e-10) {
        return Err(Error::NotHermitian);
    }
    let n = a.rows;
    let mut m = a.clone();
    // Enforce exact symmetry so round-off in the input cannot stall the sweeps.
    for r in 0..n {
        m[(r, r)] = C64::new(m[(r, r)].re, 0.0);
        for c in r + 1..n {
            let avg = (m[(r, c)] + m[(c, r)].conj()) * 0.5;
            m[(r, c)] = avg;
            m[(c, r)] = avg.conj();
        }
    }
    let mut v = ComplexMatrix::identity(n);
    let total: f64 = m.data.iter().map(|z| z.norm_sqr()).sum();

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|r| (0..n).filter(move |&c| c != r).map(move |c| (r, c)))
            .map(|(r, c)| m[(r, c)].norm_sqr())
            .sum();
        if off <= 1e-30 * total.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let phase = apq / mag; // e^{iφ}
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // J = D R with D = diag(.., e^{-iφ} at q, ..):
                // J_pp = c, J_pq = s, J_qp = -s e^{-iφ}, J_qq = c e^{-iφ}.
                let ph_conj = phase.conj();
                for r in 0..n {
                    let xp = m[(r, p)];
                    let xq = m[(r, q)];
                    m[(r, p)] = xp * c - xq * ph_conj * s;
                    m[(r, q)] = xp * s + xq * ph_conj * c;
                }
                for col in 0..n {
                    let xp = m[(p, col)];
                    let xq = m[(q, col)];
                    m[(p, col)] = xp * c - xq * phase * s;
                    m[(q, col)] = xp * s + xq * phase * c;
                }
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
                for r in 0..n {
                    let xp = v[(r, p)];
                    let xq = v[(r, q)];
                    v[(r, p)] = xp * c - xq * ph_conj * s;
                    v[(r, q)] = xp * s + xq * ph_conj * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[(x, x)].re.total_cmp(&m[(y, y)].re));
    let values = order.iter().map(|&k| m[(k, k)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, dst)] = v[(r, src)];
        }
    }
    Ok(HermitianEigen { values, vectors })
}

/// Principal square root of a positive semidefinite Hermitian matrix.
///
/// Eigenvalues in `[-1e-8, 0)` are clamped to zero; anything more negative is
/// reported as [`Error::NegativeEigenvalue`].
pub fn psd_sqrt(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = herm_eig(a)?;
    if let Some(&worst) = eig.values.iter().find(|&&l| l < -NEGATIVE_EIG_TOL) {
        return Err(Error::NegativeEigenvalue(worst));
    }
    Ok(eig.map(|l| l.max(0.0).sqrt()))
}

/// Which subsystem of a bipartite space to keep in [`partial_trace`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Atom {
    Control,
    Target,
}

/// Hermitian, unit-trace state matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates hermiticity (1e-10), unit trace (1e-8) and spectrum (>= -1e-8).
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch("density matrix must be square".into()));
        }
        if !matrix.is_hermitian(1e-10) {
            return Err(Error::NotHermitian);
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > 1e-8 {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let eig = herm_eig(&matrix)?;
        if eig.values[0] < -NEGATIVE_EIG_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {}", eig.values[0])));
        }
        Ok(Self { matrix })
    }

    /// Wraps without the spectral check; hermiticity and trace are still
    /// asserted to the same tolerances. Used on integrator output where the
    /// eigendecomposition would dominate the cost.
    pub fn from_evolved(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_hermitian(1e-9) {
            return Err(Error::NotHermitian);
        }
        Ok(Self { matrix })
    }

    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let psi: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        Ok(Self { matrix: ComplexMatrix::outer(&psi, &psi) })
    }

    /// `|k⟩⟨k|` in dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Self {
        Self { matrix: ComplexMatrix::unit(dim, k, k) }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { matrix: ComplexMatrix::identity(dim).scale(C64::new(1.0 / dim as f64, 0.0)) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        // Tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ.
        self.matrix.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn population(&self, k: usize) -> f64 {
        self.matrix[(k, k)].re
    }

    /// `⟨ψ|ρ|ψ⟩`
    pub fn expectation_pure(&self, psi: &[C64]) -> f64 {
        let n = self.dim();
        let mut acc = ZERO;
        for r in 0..n {
            if psi[r] == ZERO {
                continue;
            }
            for c in 0..n {
                acc += psi[r].conj() * self.matrix[(r, c)] * psi[c];
            }
        }
        acc.re
    }
}

/// Reduced state of one atom of a bipartite `d1 ⊗ d2` state.
pub fn partial_trace(rho: &DensityMatrix, keep: Atom, dims: (usize, usize)) -> Result<DensityMatrix> {
    let (d1, d2) = dims;
    if rho.dim() != d1 * d2 {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} is not {d1}x{d2}",
            rho.dim()
        )));
    }
    let m = rho.matrix();
    let out = match keep {
        Atom::Control => {
            let mut out = ComplexMatrix::zeros(d1, d1);
            for a in 0..d1 {
                for b in 0..d1 {
                    out[(a, b)] = (0..d2).map(|k| m[(a * d2 + k, b * d2 + k)]).sum();
                }
            }
            out
        }
        Atom::Target => {
            let mut out = ComplexMatrix::zeros(d2, d2);
            for a in 0..d2 {
                for b in 0..d2 {
                    out[(a, b)] = (0..d1).map(|k| m[(k * d2 + a, k * d2 + b)]).sum();
                }
            }
            out
        }
    };
    Ok(DensityMatrix { matrix: out })
}
