//! Double-double arithmetic for the few places where a result is a small
//! difference of large products (characteristic-polynomial constants of
//! nearly singular generators).

use core::ops::{Add, Mul, Neg, Sub};

use alloc::vec::Vec;

use crate::fmath;
use crate::linalg::{c64, C64};

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl Dd {
    pub(crate) const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    #[inline]
    pub(crate) fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub(crate) fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    /// Division by a small exact integer.
    pub(crate) fn div_f64(self, k: f64) -> Self {
        let q1 = self.hi / k;
        let p = two_prod(q1, k);
        let r = self - p;
        let q2 = r.hi / k;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }
    }
}

/// Exact product `a·b` as a double-double.
#[inline]
pub(crate) fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    Dd { hi: p, lo: fmath::mul_add(a, b, -p) }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, o.hi);
        let (t1, t2) = two_sum(self.lo, o.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let p = two_prod(self.hi, o.hi);
        let lo = p.lo + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p.hi, lo);
        Dd { hi, lo }
    }
}

/// Complex number with double-double parts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct Cdd {
    pub re: Dd,
    pub im: Dd,
}

impl Cdd {
    pub(crate) const ZERO: Cdd = Cdd { re: Dd::ZERO, im: Dd::ZERO };
    pub(crate) const ONE: Cdd = Cdd { re: Dd { hi: 1.0, lo: 0.0 }, im: Dd::ZERO };

    pub(crate) fn from_c64(z: C64) -> Self {
        Cdd { re: Dd::from_f64(z.re), im: Dd::from_f64(z.im) }
    }

    pub(crate) fn to_c64(self) -> C64 {
        c64(self.re.to_f64(), self.im.to_f64())
    }

    pub(crate) fn div_f64(self, k: f64) -> Self {
        Cdd { re: self.re.div_f64(k), im: self.im.div_f64(k) }
    }

    /// `e^{iθ}` by its Taylor series; meant for `|θ| ≲ 1`.
    pub(crate) fn expi(theta: Dd) -> Self {
        let mut re = Dd::from_f64(1.0);
        let mut im = Dd::ZERO;
        let mut term = Dd::from_f64(1.0);
        for k in 1..40 {
            term = (term * theta).div_f64(k as f64);
            if term.hi == 0.0 || term.hi.abs() < 1e-36 {
                break;
            }
            match k % 4 {
                0 => re = re + term,
                1 => im = im + term,
                2 => re = re - term,
                _ => im = im - term,
            }
        }
        Cdd { re, im }
    }
}

impl Add for Cdd {
    type Output = Cdd;
    fn add(self, o: Cdd) -> Cdd {
        Cdd { re: self.re + o.re, im: self.im + o.im }
    }
}

impl Neg for Cdd {
    type Output = Cdd;
    fn neg(self) -> Cdd {
        Cdd { re: -self.re, im: -self.im }
    }
}

impl Mul for Cdd {
    type Output = Cdd;
    fn mul(self, o: Cdd) -> Cdd {
        Cdd {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }
}

/// `m · v` for a row-major `n × n` matrix.
pub(crate) fn matvec(n: usize, m: &[Cdd], v: &[Cdd]) -> alloc::vec::Vec<Cdd> {
    (0..n)
        .map(|r| {
            m[r * n..(r + 1) * n]
                .iter()
                .zip(v)
                .fold(Cdd::ZERO, |acc, (&a, &b)| acc + a * b)
        })
        .collect()
}

/// `a · b` for row-major `n × n` matrices.
pub(crate) fn matmul(n: usize, a: &[Cdd], b: &[Cdd]) -> Vec<Cdd> {
    let mut out = alloc::vec![Cdd::ZERO; n * n];
    for r in 0..n {
        for k in 0..n {
            let x = a[r * n + k];
            if x == Cdd::ZERO {
                continue;
            }
            for c in 0..n {
                out[r * n + c] = out[r * n + c] + x * b[k * n + c];
            }
        }
    }
    out
}

/// `e^{t·m}` for a row-major `n × n` matrix: Taylor series after scaling
/// the norm below ½, then repeated squaring.
pub(crate) fn expm(n: usize, m: &[Cdd], t: f64) -> Vec<Cdd> {
    let norm = (0..n)
        .map(|r| m[r * n..(r + 1) * n].iter().map(|z| z.to_c64().norm()).sum::<f64>())
        .fold(0.0, f64::max)
        * t.abs();
    let squarings = if norm > 0.5 { fmath::ceil(fmath::log2(norm / 0.5)) as i32 } else { 0 };
    // Halving is exact.
    let factor = Dd::from_f64((0..squarings).fold(t, |x, _| 0.5 * x));
    let a: Vec<Cdd> = m.iter().map(|z| Cdd { re: z.re * factor, im: z.im * factor }).collect();
    let mut id = alloc::vec![Cdd::ZERO; n * n];
    for i in 0..n {
        id[i * n + i] = Cdd::ONE;
    }
    let mut sum = id.clone();
    let mut term = id;
    for k in 1..80 {
        term = matmul(n, &term, &a).into_iter().map(|z| z.div_f64(k as f64)).collect();
        let size = term.iter().map(|z| z.to_c64().norm()).fold(0.0, f64::max);
        for (s, x) in sum.iter_mut().zip(&term) {
            *s = *s + *x;
        }
        if size < 1e-34 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = matmul(n, &sum, &sum);
    }
    sum
}
