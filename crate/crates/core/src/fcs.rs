//! Counting-field differentiation.
//!
//! Cumulants are derivatives at `χ = 0`, taken with 5-point central
//! differences at step `h` and cross-checked against the same stencil at
//! `h/2`. Both stencils share the centre and `±h`, so seven evaluations
//! suffice.

use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{c64, C64};

/// Relative agreement required between the `h` and `h/2` stencils.
pub const RICHARDSON_RTOL: f64 = 1e-6;
/// Absolute floor of the stencil check, in units of the natural scale of
/// each cumulant (see [`richardson_checked`]).
pub const RICHARDSON_FLOOR: f64 = 1e-9;
/// Largest tolerated imaginary part, relative to `max(1, natural, |value|)`.
pub const IMAG_TOL: f64 = 1e-8;

/// Default counting-field step for ancilla frequency `omega_a`.
pub fn default_step(omega_a: f64) -> f64 {
    1e-3 / omega_a.abs().max(f64::MIN_POSITIVE)
}

/// Offsets of the seven sample points, in units of `h`.
pub const OFFSETS: [f64; 7] = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];
const COARSE: [usize; 5] = [0, 1, 3, 5, 6];
const FINE: [usize; 5] = [1, 2, 3, 4, 5];

/// First and second derivatives at the centre of five equally spaced samples.
pub fn derivatives(f: &[C64; 5], h: f64) -> (C64, C64) {
    let d1 = (-f[4] + f[3] * 8.0 - f[1] * 8.0 + f[0]) / (12.0 * h);
    let d2 = (-f[4] + f[3] * 16.0 - f[2] * 30.0 + f[1] * 16.0 - f[0]) / (12.0 * h * h);
    (d1, d2)
}

/// First two cumulants `(−i∂χ, (−i∂χ)²)` of a log-generating function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cumulants {
    pub first: f64,
    pub second: f64,
}

/// Complex cumulants from five samples of `ln M`.
pub fn log_cumulants(lnm: &[C64; 5], h: f64) -> (C64, C64) {
    let (d1, d2) = derivatives(lnm, h);
    (d1 * c64(0.0, -1.0), -d2)
}

/// Requires `|Im z| < IMAG_TOL · max(1, natural, |Re z|)` and returns the
/// real part. `natural` is the cumulant's own scale, so that rounding noise
/// in units of a large counted quantum is not mistaken for a complex value.
pub fn real_part(z: C64, natural: f64) -> Result<f64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::NumericalBreakdown("non-finite cumulant".into()));
    }
    if z.im.abs() >= IMAG_TOL * z.re.abs().max(natural.abs()).max(1.0) {
        return Err(Error::ComplexCumulant { imag: z.im });
    }
    Ok(z.re)
}

/// Evaluates `f` on the seven stencil points.
pub fn sample<T>(h: f64, mut f: impl FnMut(f64) -> Result<T>) -> Result<[T; 7]> {
    let mut out: [Option<T>; 7] = Default::default();
    // Centre first: it is the cheapest place for a bad state to surface.
    for &i in &[3usize, 1, 5, 2, 4, 0, 6] {
        out[i] = Some(f(OFFSETS[i] * h)?);
    }
    Ok(out.map(|x| x.expect("all stencil points evaluated")))
}

/// Runs `reduce` on the `h` and `h/2` sub-stencils and requires agreement.
/// Returns the `h` result.
///
/// `natural` holds the scales of the first and second cumulant (one counted
/// quantum, or one quantum times a rate) against which vanishing cumulants
/// are judged.
pub fn richardson_checked<T>(
    samples: &[T; 7],
    h: f64,
    natural: [f64; 2],
    reduce: impl Fn([&T; 5], f64) -> Result<Cumulants>,
) -> Result<Cumulants> {
    let coarse = reduce(COARSE.map(|i| &samples[i]), h)?;
    let fine = reduce(FINE.map(|i| &samples[i]), 0.5 * h)?;
    let checks = [
        ("first cumulant", coarse.first, fine.first, natural[0]),
        ("second cumulant", coarse.second, fine.second, natural[1]),
    ];
    for (quantity, a, b, scale) in checks {
        let tol = RICHARDSON_RTOL * a.abs().max(b.abs()) + RICHARDSON_FLOOR * scale.abs();
        if (a - b).abs() > tol {
            return Err(Error::StencilMismatch {
                quantity,
                coarse: a,
                fine: b,
            });
        }
    }
    Ok(coarse)
}

/// Principal logarithms of generating-function samples, with the phase
/// unwrapped outward from the centre so that `ln M` stays continuous in χ.
pub fn unwrapped_logs(m: &[C64; 7]) -> Result<[C64; 7]> {
    let mut out = [c64(0.0, 0.0); 7];
    for (o, z) in out.iter_mut().zip(m) {
        if z.norm() == 0.0 || !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::NumericalBreakdown(alloc::format!(
                "generating function sample {z} has no logarithm"
            )));
        }
        *o = z.ln();
    }
    for i in (0..3).rev() {
        out[i].im = unwrap_to(out[i].im, out[i + 1].im);
    }
    for i in 4..7 {
        out[i].im = unwrap_to(out[i].im, out[i - 1].im);
    }
    Ok(out)
}

fn unwrap_to(phase: f64, reference: f64) -> f64 {
    let mut p = phase;
    while p - reference > PI {
        p -= 2.0 * PI;
    }
    while p - reference < -PI {
        p += 2.0 * PI;
    }
    p
}

/// Cumulants of a moment generating function `M(χ)` sampled by `m`, for a
/// counted quantity that comes in units of `quantum`.
pub fn mgf_cumulants(
    h: f64,
    quantum: f64,
    m: impl FnMut(f64) -> Result<C64>,
) -> Result<Cumulants> {
    let values = sample(h, m)?;
    cumulants_from_mgf_samples(&values, h, quantum)
}

/// Same as [`mgf_cumulants`] for precomputed samples on [`OFFSETS`]`·h`.
pub fn cumulants_from_mgf_samples(values: &[C64; 7], h: f64, quantum: f64) -> Result<Cumulants> {
    let logs = unwrapped_logs(values)?;
    richardson_checked(&logs, h, [quantum, quantum * quantum], |f, step| {
        let (c1, c2) = log_cumulants(&f.map(|z| *z), step);
        Ok(Cumulants {
            first: real_part(c1, quantum)?,
            second: real_part(c2, quantum * quantum)?,
        })
    })
}
