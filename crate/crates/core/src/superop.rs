//! Column-stacking vectorization and superoperator builders.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{kron, CMatrix, C64, ONE, ZERO};

/// Column-stacks a square matrix: `|i⟩⟨j| ↦ e_j ⊗ e_i`.
pub fn vectorize(m: &CMatrix) -> Vec<C64> {
    let (r, c) = (m.rows(), m.cols());
    let mut out = Vec::with_capacity(r * c);
    for col in 0..c {
        for row in 0..r {
            out.push(m[(row, col)]);
        }
    }
    out
}

/// Inverse of [`vectorize`] for a `d × d` matrix.
pub fn unvectorize(v: &[C64], d: usize) -> Result<CMatrix> {
    if v.len() != d * d {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            got: v.len(),
        });
    }
    Ok(CMatrix::from_fn(d, d, |r, c| v[c * d + r]))
}

/// `⟨⟨I|` for dimension `d`; `⟨⟨I|x⟩⟩ = tr(unvec x)`.
pub fn identity_dual(d: usize) -> Vec<C64> {
    let mut out = alloc::vec![ZERO; d * d];
    for i in 0..d {
        out[i * d + i] = ONE;
    }
    out
}

/// Trace of a vectorized matrix.
pub fn vec_trace(v: &[C64], d: usize) -> C64 {
    (0..d).map(|i| v[i * d + i]).sum()
}

/// `ρ ↦ Aρ`.
pub fn spre(a: &CMatrix) -> CMatrix {
    kron(&CMatrix::identity(a.rows()), a)
}

/// `ρ ↦ ρB`.
pub fn spost(b: &CMatrix) -> CMatrix {
    kron(&b.transpose(), &CMatrix::identity(b.rows()))
}

/// `ρ ↦ AρB`.
pub fn sandwich(a: &CMatrix, b: &CMatrix) -> CMatrix {
    kron(&b.transpose(), a)
}

/// `ρ ↦ −i[H, ρ]`.
pub fn commutator_generator(h: &CMatrix) -> CMatrix {
    (&spre(h) - &spost(h)).scale(C64::new(0.0, -1.0))
}

/// Lindblad dissipator `ρ ↦ γ(AρA† − ½{A†A, ρ})`, with the jump term
/// multiplied by `phase` (counting-field dressing).
pub fn lindblad(a: &CMatrix, rate: f64, phase: C64) -> CMatrix {
    let ad = a.adjoint();
    let ada = &ad * a;
    let jump = sandwich(a, &ad).scale(phase);
    let anti = (&spre(&ada) + &spost(&ada)).scale_re(0.5);
    (&jump - &anti).scale_re(rate)
}

/// The linear map `X ↦ f(X)` on `d × d` matrices as a `d² × d²` matrix.
pub fn from_map(d: usize, mut f: impl FnMut(&CMatrix) -> CMatrix) -> CMatrix {
    let n = d * d;
    let mut out = CMatrix::zeros(n, n);
    for k in 0..n {
        let mut basis = CMatrix::zeros(d, d);
        basis[(k % d, k / d)] = ONE;
        let image = vectorize(&f(&basis));
        for (r, z) in image.into_iter().enumerate() {
            out[(r, k)] = z;
        }
    }
    out
}

/// A superoperator tagged with the counting field it was built at.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    pub chi: f64,
    pub matrix: CMatrix,
}

impl Superoperator {
    /// Hilbert-space dimension the superoperator acts on.
    pub fn dim(&self) -> usize {
        let n = self.matrix.rows();
        let d = crate::fmath::round(crate::fmath::sqrt(n as f64)) as usize;
        debug_assert_eq!(d * d, n);
        d
    }

    /// Applies the map to a matrix.
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        let d = self.dim();
        if rho.rows() != d || rho.cols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: rho.rows(),
            });
        }
        unvectorize(&self.matrix.mul_vec(&vectorize(rho)), d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;

    fn sample(seed: f64) -> CMatrix {
        CMatrix::from_fn(2, 2, |r, c| c64(seed + r as f64, (c as f64) - seed * 0.5))
    }

    #[test]
    fn vec_roundtrip_and_layout() {
        let m = sample(0.3);
        let v = vectorize(&m);
        assert_eq!(v[1], m[(1, 0)]);
        assert_eq!(v[2], m[(0, 1)]);
        assert_eq!(unvectorize(&v, 2).unwrap(), m);
    }

    #[test]
    fn sandwich_matches_products() {
        let (a, x, b) = (sample(0.1), sample(-0.7), sample(1.3));
        let direct = &(&a * &x) * &b;
        let via = unvectorize(&sandwich(&a, &b).mul_vec(&vectorize(&x)), 2).unwrap();
        assert!(direct.max_abs_diff(&via) < 1e-13);
        let pre = unvectorize(&spre(&a).mul_vec(&vectorize(&x)), 2).unwrap();
        assert!(pre.max_abs_diff(&(&a * &x)) < 1e-13);
        let post = unvectorize(&spost(&b).mul_vec(&vectorize(&x)), 2).unwrap();
        assert!(post.max_abs_diff(&(&x * &b)) < 1e-13);
    }

    #[test]
    fn from_map_reproduces_sandwich() {
        let (a, b) = (sample(0.2), sample(0.9));
        let m = from_map(2, |x| &(&a * x) * &b);
        assert!(m.max_abs_diff(&sandwich(&a, &b)) < 1e-14);
    }

    #[test]
    fn lindblad_is_trace_preserving() {
        let a = sample(0.4);
        let l = lindblad(&a, 0.8, ONE);
        let left = l.left_mul_vec(&identity_dual(2));
        assert!(left.iter().all(|z| z.norm() < 1e-13));
    }
}
