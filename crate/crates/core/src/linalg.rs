//! Dense complex matrix kernel.
//!
//! Sized for the few-qubit operators of the collisional model (at most 16×16
//! superoperators), so everything is straightforward row-major storage with
//! O(n³) algorithms and no blocking.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex;

use crate::dd::Cdd;
use crate::error::{Error, Result};
use crate::fmath;

pub type C64 = Complex<f64>;

/// Relative singular-value threshold below which a direction counts as kernel.
pub const KERNEL_RTOL: f64 = 1e-9;

#[inline]
pub const fn c64(re: f64, im: f64) -> C64 {
    C64 { re, im }
}

pub const ZERO: C64 = c64(0.0, 0.0);
pub const ONE: C64 = c64(1.0, 0.0);
pub const I: C64 = c64(0.0, 1.0);

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a square matrix from real row-major entries.
    ///
    /// Panics if `entries.len()` is not a perfect square.
    pub fn from_real(entries: &[f64]) -> Self {
        let n = fmath::round(fmath::sqrt(entries.len() as f64)) as usize;
        assert_eq!(n * n, entries.len(), "from_real needs n*n entries");
        Self {
            rows: n,
            cols: n,
            data: entries.iter().map(|&x| c64(x, 0.0)).collect(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    pub fn real_diag(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &x) in entries.iter().enumerate() {
            m[(i, i)] = c64(x, 0.0);
        }
        m
    }

    /// Column vector from entries.
    pub fn column_vector(entries: &[C64]) -> Self {
        Self {
            rows: entries.len(),
            cols: 1,
            data: entries.to_vec(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn ensure_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NonSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(c64(s, 0.0))
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn norm_fro(&self) -> f64 {
        fmath::sqrt(self.data.iter().map(|z| z.norm_sqr()).sum())
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> f64 {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self[(r, c)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.max_abs_diff(&self.adjoint()) < tol
    }

    /// `self · v` for a plain vector.
    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|r| {
                let row = &self.data[r * self.cols..(r + 1) * self.cols];
                row.iter().zip(v).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// `vᵀ · self` (no conjugation of `v`).
    pub fn left_mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.rows, v.len());
        let mut out = vec![ZERO; self.cols];
        for (r, &vr) in v.iter().enumerate() {
            if vr == ZERO {
                continue;
            }
            for (c, o) in out.iter_mut().enumerate() {
                *o += vr * self[(r, c)];
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul: {}x{} times {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// Hermitian part `(M + M†)/2`.
    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale_re(0.5)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

impl Mul for CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: CMatrix) -> CMatrix {
        self.matmul(&rhs)
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Add for CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: CMatrix) -> CMatrix {
        &self + &rhs
    }
}

impl AddAssign<&CMatrix> for CMatrix {
    fn add_assign(&mut self, rhs: &CMatrix) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Sub for CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: CMatrix) -> CMatrix {
        &self - &rhs
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale_re(-1.0)
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca, rb, cb) = (a.rows, a.cols, b.rows, b.cols);
    CMatrix::from_fn(ra * rb, ca * cb, |r, c| {
        a[(r / rb, c / cb)] * b[(r % rb, c % cb)]
    })
}

/// Commutator `[a, b]`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    &(a * b) - &(b * a)
}

/// LU factorization with partial pivoting, stored compactly.
struct Lu {
    lu: CMatrix,
    perm: Vec<usize>,
}

impl Lu {
    fn new(a: &CMatrix) -> Result<Self> {
        let n = a.ensure_square()?;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|r| (r, lu[(r, k)].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax <= 1e-14 * scale {
                return Err(Error::Singular);
            }
            if p != k {
                for c in 0..n {
                    let tmp = lu[(k, c)];
                    lu[(k, c)] = lu[(p, c)];
                    lu[(p, c)] = tmp;
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for r in (k + 1)..n {
                let f = lu[(r, k)] / pivot;
                lu[(r, k)] = f;
                if f == ZERO {
                    continue;
                }
                for c in (k + 1)..n {
                    let v = lu[(k, c)];
                    lu[(r, c)] -= f * v;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    fn solve_vec(&self, b: &[C64]) -> Vec<C64> {
        let n = self.lu.rows;
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            for k in 0..r {
                let l = self.lu[(r, k)] * x[k];
                x[r] -= l;
            }
        }
        for r in (0..n).rev() {
            for k in (r + 1)..n {
                let u = self.lu[(r, k)] * x[k];
                x[r] -= u;
            }
            x[r] /= self.lu[(r, r)];
        }
        x
    }
}

/// Solves `a · x = b` for a matrix right-hand side.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let lu = Lu::new(a)?;
    if b.rows != a.rows {
        return Err(Error::DimensionMismatch {
            expected: a.rows,
            got: b.rows,
        });
    }
    let mut out = CMatrix::zeros(b.rows, b.cols);
    for c in 0..b.cols {
        let x = lu.solve_vec(&b.column(c));
        for (r, v) in x.into_iter().enumerate() {
            out[(r, c)] = v;
        }
    }
    Ok(out)
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    let n = a.ensure_square()?;
    solve(a, &CMatrix::identity(n))
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// `exp(scale · a)` by scaling and squaring with a degree-13 Padé approximant.
pub fn expm(a: &CMatrix, scale: f64) -> Result<CMatrix> {
    let n = a.ensure_square()?;
    if !scale.is_finite() {
        return Err(Error::InvalidParams {
            field: "scale",
            reason: alloc::format!("{scale} is not finite"),
        });
    }
    let m = a.scale_re(scale);
    let norm = m.norm_1();
    if norm == 0.0 {
        return Ok(CMatrix::identity(n));
    }
    let squarings = if norm > THETA13 {
        fmath::ceil(fmath::log2(norm / THETA13)) as u32
    } else {
        0
    };
    let m = m.scale_re(fmath::exp(-(squarings as f64) * core::f64::consts::LN_2));

    let id = CMatrix::identity(n);
    let a2 = &m * &m;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;
    let lin = |x6: f64, x4: f64, x2: f64, x0: f64| {
        let mut acc = a6.scale_re(x6);
        acc += &a4.scale_re(x4);
        acc += &a2.scale_re(x2);
        acc += &id.scale_re(x0);
        acc
    };
    let u_inner = &a6 * &lin(b[13], b[11], b[9], 0.0);
    let u = &m * &(&u_inner + &lin(b[7], b[5], b[3], b[1]));
    let v_inner = &a6 * &lin(b[12], b[10], b[8], 0.0);
    let v = &v_inner + &lin(b[6], b[4], b[2], b[0]);

    let mut r = solve(&(&v - &u), &(&v + &u))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

/// Thin singular value decomposition data: `a · V = U · diag(σ)`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub singular_values: Vec<f64>,
    /// Right singular vectors as columns.
    pub v: CMatrix,
}

/// One-sided (Hestenes) Jacobi SVD of a square complex matrix.
///
/// High relative accuracy for small singular values, which is what the
/// kernel detection needs.
pub fn svd(a: &CMatrix) -> Result<Svd> {
    let n = a.ensure_square()?;
    let mut u = a.clone();
    let mut v = CMatrix::identity(n);
    // Columns below this squared norm are numerically zero; rotating them
    // against others only shuffles rounding noise.
    let floor = {
        let f = f64::EPSILON * a.norm_fro();
        f * f
    };
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = ZERO;
                for k in 0..n {
                    let up = u[(k, p)];
                    let uq = u[(k, q)];
                    alpha += up.norm_sqr();
                    beta += uq.norm_sqr();
                    gamma += up.conj() * uq;
                }
                let g = gamma.norm();
                if g == 0.0
                    || alpha <= floor
                    || beta <= floor
                    || g <= 4.0 * f64::EPSILON * fmath::sqrt(alpha * beta)
                {
                    continue;
                }
                rotated = true;
                // Rephase column q so that the overlap becomes real positive.
                let phase = gamma.conj() / g;
                for k in 0..n {
                    u[(k, q)] *= phase;
                    v[(k, q)] *= phase;
                }
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + fmath::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / fmath::sqrt(1.0 + t * t);
                let s = c * t;
                for mat in [&mut u, &mut v] {
                    for k in 0..n {
                        let xp = mat[(k, p)];
                        let xq = mat[(k, q)];
                        mat[(k, p)] = xp.scale(c) - xq.scale(s);
                        mat[(k, q)] = xp.scale(s) + xq.scale(c);
                    }
                }
            }
        }
        if !rotated {
            let singular_values = (0..n)
                .map(|c| fmath::sqrt((0..n).map(|r| u[(r, c)].norm_sqr()).sum()))
                .collect();
            return Ok(Svd { singular_values, v });
        }
    }
    Err(Error::NumericalBreakdown("Jacobi SVD did not converge".into()))
}

/// Unit-norm vector spanning the one-dimensional kernel of `a`.
///
/// Fails with [`Error::DegenerateKernel`] unless exactly one singular value is
/// below `KERNEL_RTOL · σ_max`.
pub fn null_vector(a: &CMatrix) -> Result<Vec<C64>> {
    let svd = svd(a)?;
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let small: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= KERNEL_RTOL * smax)
        .map(|(i, _)| i)
        .collect();
    if small.len() != 1 || smax == 0.0 {
        return Err(Error::DegenerateKernel {
            dim: if smax == 0.0 { a.rows } else { small.len() },
        });
    }
    let mut v = svd.v.column(small[0]);
    let norm = fmath::sqrt(v.iter().map(|z| z.norm_sqr()).sum());
    for z in &mut v {
        *z /= norm;
    }
    Ok(v)
}

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Eigenvalues ascend; eigenvectors are the matching columns.
pub fn eigh(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = a.ensure_square()?;
    let mut m = a.hermitian_part();
    let mut vecs = CMatrix::identity(n);
    let scale = m.norm_fro().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|r| (0..n).filter(move |&c| c != r).map(move |c| (r, c)))
            .map(|(r, c)| m[(r, c)].norm_sqr())
            .sum();
        if fmath::sqrt(off) <= n as f64 * f64::EPSILON * scale {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
            let vals = order.iter().map(|&i| m[(i, i)].re).collect();
            let sorted = CMatrix::from_fn(n, n, |r, c| vecs[(r, order[c])]);
            return Ok((vals, sorted));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let b = apq.norm();
                if b <= 1e-3 * f64::EPSILON * scale {
                    continue;
                }
                let ph = apq / b; // e^{iφ}
                let theta = 0.5 * fmath::atan2(2.0 * b, m[(q, q)].re - m[(p, p)].re);
                let (c, s) = (fmath::cos(theta), fmath::sin(theta));
                // G = diag(1, e^{-iφ}) · [[c, s], [-s, c]]
                let g00 = c64(c, 0.0);
                let g01 = c64(s, 0.0);
                let g10 = ph.conj().scale(-s);
                let g11 = ph.conj().scale(c);
                for k in 0..n {
                    let xp = m[(k, p)];
                    let xq = m[(k, q)];
                    m[(k, p)] = xp * g00 + xq * g10;
                    m[(k, q)] = xp * g01 + xq * g11;
                    let vp = vecs[(k, p)];
                    let vq = vecs[(k, q)];
                    vecs[(k, p)] = vp * g00 + vq * g10;
                    vecs[(k, q)] = vp * g01 + vq * g11;
                }
                for k in 0..n {
                    let xp = m[(p, k)];
                    let xq = m[(q, k)];
                    m[(p, k)] = g00.conj() * xp + g10.conj() * xq;
                    m[(q, k)] = g01.conj() * xp + g11.conj() * xq;
                }
            }
        }
    }
    Err(Error::NumericalBreakdown("Jacobi eigensolver did not converge".into()))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(a: &CMatrix) -> Result<Vec<f64>> {
    if a.rows == 2 && a.cols == 2 {
        // Closed form for the common qubit case.
        let h = a.hermitian_part();
        let mean = 0.5 * (h[(0, 0)].re + h[(1, 1)].re);
        let half = 0.5 * (h[(0, 0)].re - h[(1, 1)].re);
        let r = fmath::hypot(half, h[(0, 1)].norm());
        return Ok(vec![mean - r, mean + r]);
    }
    eigh(a).map(|(v, _)| v)
}

fn hessenberg(a: &CMatrix) -> CMatrix {
    let n = a.rows;
    let mut h = a.clone();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = ((k + 1)..n).map(|r| h[(r, k)]).collect();
        let xnorm = fmath::sqrt(x.iter().map(|z| z.norm_sqr()).sum());
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { ONE };
        let alpha = -phase.scale(xnorm);
        let mut v = x.clone();
        v[0] -= alpha;
        let vnorm = fmath::sqrt(v.iter().map(|z| z.norm_sqr()).sum());
        if vnorm == 0.0 {
            continue;
        }
        for z in &mut v {
            *z /= vnorm;
        }
        // H ← (I − 2vv†) H
        for c in 0..n {
            let dot: C64 = v
                .iter()
                .enumerate()
                .map(|(i, vi)| vi.conj() * h[(k + 1 + i, c)])
                .sum();
            for (i, vi) in v.iter().enumerate() {
                h[(k + 1 + i, c)] -= vi * dot * 2.0;
            }
        }
        // H ← H (I − 2vv†)
        for r in 0..n {
            let dot: C64 = v
                .iter()
                .enumerate()
                .map(|(i, vi)| h[(r, k + 1 + i)] * vi)
                .sum();
            for (i, vi) in v.iter().enumerate() {
                h[(r, k + 1 + i)] -= dot * vi.conj() * 2.0;
            }
        }
    }
    h
}

/// Eigenvalues of a general complex matrix (Hessenberg reduction followed by
/// single-shift QR with Wilkinson shifts).
pub fn eigvals(a: &CMatrix) -> Result<Vec<C64>> {
    let n = a.ensure_square()?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = hessenberg(a);
    let mut out = vec![ZERO; n];
    let mut hi = n - 1;
    let mut iter = 0usize;
    let eps = f64::EPSILON;
    loop {
        if hi == 0 {
            out[0] = h[(0, 0)];
            break;
        }
        // Locate the start of the active unreduced block.
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let diag = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if sub <= eps * diag.max(f64::MIN_POSITIVE) {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            out[hi] = h[(hi, hi)];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > 200 {
            return Err(Error::NumericalBreakdown("QR eigenvalue iteration stalled".into()));
        }
        // Wilkinson shift from the trailing 2x2 block.
        let (a11, a12, a21, a22) = (
            h[(hi - 1, hi - 1)],
            h[(hi - 1, hi)],
            h[(hi, hi - 1)],
            h[(hi, hi)],
        );
        let tr = a11 + a22;
        let det = a11 * a22 - a12 * a21;
        let disc = (tr * tr * 0.25 - det).sqrt();
        let l1 = tr * 0.5 + disc;
        let l2 = tr * 0.5 - disc;
        let mut mu = if (l1 - a22).norm() < (l2 - a22).norm() { l1 } else { l2 };
        if iter % 11 == 10 {
            // Exceptional shift to break cycles.
            mu = a22 + c64(h[(hi, hi - 1)].norm(), 0.0);
        }
        for k in lo..=hi {
            h[(k, k)] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let x = h[(k, k)];
            let y = h[(k + 1, k)];
            let r = fmath::hypot(x.norm(), y.norm());
            let (c, s) = if r == 0.0 { (ONE, ZERO) } else { (x / r, y / r) };
            for col in k..=hi {
                let hk = h[(k, col)];
                let hk1 = h[(k + 1, col)];
                h[(k, col)] = c.conj() * hk + s.conj() * hk1;
                h[(k + 1, col)] = -s * hk + c * hk1;
            }
            rots.push((c, s));
        }
        for (i, (c, s)) in rots.into_iter().enumerate() {
            let k = lo + i;
            for row in lo..=(k + 1).min(hi) {
                let hk = h[(row, k)];
                let hk1 = h[(row, k + 1)];
                h[(row, k)] = hk * c + hk1 * s;
                h[(row, k + 1)] = -(hk * s.conj()) + hk1 * c.conj();
            }
        }
        for k in lo..=hi {
            h[(k, k)] += mu;
        }
    }
    Ok(out)
}

/// Coefficients `[a₀, a₁, …, a_n]` (with `a_n = 1`) of the monic
/// characteristic polynomial `det(λI − a) = Σ a_k λ^k`, by Faddeev–LeVerrier.
///
/// The recursion runs in double-double arithmetic: near a simple zero
/// eigenvalue `a₀` is a tiny difference of `O(‖a‖ⁿ)` products, and its
/// counting-field derivatives would otherwise drown in rounding noise.
pub fn char_poly_coeffs(a: &CMatrix) -> Result<Vec<C64>> {
    let n = a.ensure_square()?;
    let ad: Vec<Cdd> = a.data.iter().map(|&z| Cdd::from_c64(z)).collect();
    Ok(char_poly_dd(n, &ad))
}

/// Faddeev–LeVerrier on a row-major double-double matrix.
pub(crate) fn char_poly_dd(n: usize, ad: &[Cdd]) -> Vec<C64> {
    let matmul = |m: &[Cdd]| -> Vec<Cdd> {
        let mut out = vec![Cdd::ZERO; n * n];
        for r in 0..n {
            for k in 0..n {
                let x = ad[r * n + k];
                for c in 0..n {
                    out[r * n + c] = out[r * n + c] + x * m[k * n + c];
                }
            }
        }
        out
    };
    let mut coeffs = vec![Cdd::ZERO; n + 1];
    coeffs[n] = Cdd::from_c64(ONE);
    let mut m = vec![Cdd::ZERO; n * n];
    for k in 1..=n {
        m = matmul(&m);
        for i in 0..n {
            m[i * n + i] = m[i * n + i] + coeffs[n - k + 1];
        }
        let am = matmul(&m);
        let tr = (0..n).fold(Cdd::ZERO, |acc, i| acc + am[i * n + i]);
        coeffs[n - k] = (-tr).div_f64(k as f64);
    }
    coeffs.into_iter().map(Cdd::to_c64).collect()
}

/// Evaluates `Σ coeffs[k] z^k` by Horner's rule.
pub fn poly_eval(coeffs: &[C64], z: C64) -> C64 {
    coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
}

/// Drazin (group) inverse of a generator with a simple zero eigenvalue.
///
/// `steady` is the right null vector and `identity_dual` the left null
/// covector, normalized so that `identity_dual · steady = 1`. Returns
/// `Q (QLQ + P)⁻¹ Q` with `P = |steady⟩⟨identity_dual|`, `Q = 1 − P`.
pub fn drazin_inverse(l: &CMatrix, steady: &[C64], identity_dual: &[C64]) -> Result<CMatrix> {
    let n = l.ensure_square()?;
    if steady.len() != n || identity_dual.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: steady.len().min(identity_dual.len()),
        });
    }
    let scale = l.max_abs().max(1.0);
    let overlap: C64 = identity_dual.iter().zip(steady).map(|(a, b)| a * b).sum();
    if (overlap - ONE).norm() > 1e-9 {
        return Err(Error::InvalidState(alloc::format!(
            "dual · steady = {overlap}, expected 1"
        )));
    }
    let right = l.mul_vec(steady);
    let left = l.left_mul_vec(identity_dual);
    let resid = right
        .iter()
        .chain(left.iter())
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if resid > 1e-8 * scale {
        return Err(Error::InvalidState(alloc::format!(
            "supplied vectors are not null vectors (residual {resid:e})"
        )));
    }
    let p = CMatrix::from_fn(n, n, |r, c| steady[r] * identity_dual[c]);
    let q = &CMatrix::identity(n) - &p;
    let inner = &(&(&q * l) * &q) + &p;
    let inv = inverse(&inner).map_err(|_| Error::DegenerateKernel { dim: 2 })?;
    Ok(&(&q * &inv) * &q)
}

/// Trace out the second factor of a bipartite operator on `C^{d1} ⊗ C^{d2}`.
pub fn partial_trace_second(x: &CMatrix, d1: usize, d2: usize) -> CMatrix {
    assert_eq!(x.rows(), d1 * d2);
    CMatrix::from_fn(d1, d1, |i, j| {
        (0..d2).map(|a| x[(i * d2 + a, j * d2 + a)]).sum()
    })
}

/// Trace out the first factor of a bipartite operator on `C^{d1} ⊗ C^{d2}`.
pub fn partial_trace_first(x: &CMatrix, d1: usize, d2: usize) -> CMatrix {
    assert_eq!(x.rows(), d1 * d2);
    CMatrix::from_fn(d2, d2, |i, j| {
        (0..d1).map(|a| x[(a * d2 + i, a * d2 + j)]).sum()
    })
}

/// Trace out the middle factor of a tripartite operator on
/// `C^{d1} ⊗ C^{d2} ⊗ C^{d3}`, leaving an operator on `C^{d1} ⊗ C^{d3}`.
pub fn partial_trace_middle(x: &CMatrix, d1: usize, d2: usize, d3: usize) -> CMatrix {
    assert_eq!(x.rows(), d1 * d2 * d3);
    let idx = |a: usize, b: usize, c: usize| (a * d2 + b) * d3 + c;
    CMatrix::from_fn(d1 * d3, d1 * d3, |r, c| {
        let (i, k) = (r / d3, r % d3);
        let (j, l) = (c / d3, c % d3);
        (0..d2).map(|m| x[(idx(i, m, k), idx(j, m, l))]).sum()
    })
}
