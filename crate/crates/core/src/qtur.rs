//! Quantum uncertainty bound: dynamical activity, coherent correction and
//! the resulting ratio.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmath;
use crate::linalg::{drazin_inverse, kron, CMatrix, C64};
use crate::markov::{build_liouvillian, shifted_hamiltonian, steady_entropy_production};
use crate::model::{pauli_z, sigma_minus, sigma_plus, DensityMatrix, ModelParams};
use crate::superop::{identity_dual, vectorize};

/// Ingredients of the quantum bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QTURComponents {
    pub upsilon: f64,
    pub psi: f64,
    /// Imaginary part discarded from `psi`.
    pub psi_imag: f64,
    pub sigma: f64,
    pub q_q: f64,
}

/// `{g₁√γ₁ σ⁻, g₁√γ₂ σ⁺, g₂ σz}`.
pub fn jump_operators(p: &ModelParams) -> Vec<CMatrix> {
    let (gamma1, gamma2) = p.rates();
    alloc::vec![
        sigma_minus().scale_re(p.g1 * fmath::sqrt(gamma1)),
        sigma_plus().scale_re(p.g1 * fmath::sqrt(gamma2)),
        pauli_z().scale_re(p.g2),
    ]
}

/// `Υ = Σ tr(A†A ρ)`.
pub fn dynamical_activity(jumps: &[CMatrix], rho_ss: &DensityMatrix) -> f64 {
    jumps
        .iter()
        .map(|a| (&(&a.adjoint() * a) * rho_ss.matrix()).trace().re)
        .sum()
}

/// Splits the generator into the parts acting from the left and the right,
/// `(L_L, L_R)`, with `L_L + L_R = L(0)`.
pub fn left_right_liouvillians(p: &ModelParams) -> (CMatrix, CMatrix) {
    let h = shifted_hamiltonian(p);
    let d = h.rows();
    let id = CMatrix::identity(d);
    let mut right = kron(&id, &h).scale(C64::new(0.0, -1.0));
    let mut left = kron(&h.transpose(), &id).scale(C64::new(0.0, 1.0));
    for a in jump_operators(p) {
        let jump = kron(&a.conj(), &a).scale_re(0.5);
        let ada = &a.adjoint() * &a;
        right += &(&jump - &kron(&id, &ada).scale_re(0.5));
        left += &(&jump - &kron(&ada.transpose(), &id).scale_re(0.5));
    }
    (left, right)
}

/// Quantum bound components at the steady state.
pub fn q_quantum(p: &ModelParams) -> Result<QTURComponents> {
    let l = build_liouvillian(p, 0.0).matrix;
    let rho = crate::markov::steady_state_numeric(p)?;
    let rv = vectorize(rho.matrix());
    let iv = identity_dual(2);
    let ld = drazin_inverse(&l, &rv, &iv)?;
    let (left, right) = left_right_liouvillians(p);
    let term = |a: &CMatrix, b: &CMatrix| -> C64 {
        let x = b.mul_vec(&rv);
        let x = ld.mul_vec(&x);
        let x = a.mul_vec(&x);
        iv.iter().zip(&x).map(|(u, v)| u * v).sum()
    };
    let psi = (term(&left, &right) + term(&right, &left)) * -4.0;
    let scale = psi.re.abs().max(1.0);
    if psi.im.abs() >= 1e-8 * scale {
        return Err(Error::ComplexCumulant { imag: psi.im });
    }
    let upsilon = dynamical_activity(&jump_operators(p), &rho);
    let sigma = steady_entropy_production(p)?;
    let denom = upsilon + psi.re;
    if !(denom > 0.0) {
        return Err(Error::NumericalBreakdown(alloc::format!(
            "activity plus coherent term is {denom:e}"
        )));
    }
    Ok(QTURComponents {
        upsilon,
        psi: psi.re,
        psi_imag: psi.im,
        sigma,
        q_q: sigma / denom,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::{q_cl, steady_state_analytic};
    use proptest::prelude::*;

    fn fig1(g1: f64) -> ModelParams {
        ModelParams { g1, ..ModelParams::fig1() }
    }

    #[test]
    fn activity_examples() {
        let p = ModelParams { g1: 0.0, g2: 0.0, ..fig1(0.0) };
        let rho = DensityMatrix::maximally_mixed(2);
        assert_eq!(dynamical_activity(&jump_operators(&p), &rho), 0.0);
        let p = ModelParams { g1: 0.0, g2: 0.3, ..fig1(0.0) };
        let rho = DensityMatrix::pure_qubit(0.4, 1.0);
        assert!((dynamical_activity(&jump_operators(&p), &rho) - 0.09).abs() < 1e-15);
        let p = fig1(0.45);
        let rho = steady_state_analytic(&p).unwrap();
        assert!(dynamical_activity(&jump_operators(&p), &rho) > 0.0);
    }

    #[test]
    fn split_sums_to_generator() {
        let p = fig1(0.45);
        let (l, r) = left_right_liouvillians(&p);
        assert!((&l + &r).max_abs_diff(&build_liouvillian(&p, 0.0).matrix) < 1e-10);
        let q = ModelParams { g1: 0.0, g2: 0.0, nu: 0.0, ..p };
        let (l, r) = left_right_liouvillians(&q);
        assert_eq!(l.max_abs(), 0.0);
        assert_eq!(r.max_abs(), 0.0);
    }

    #[test]
    fn drazin_axioms_on_generator() {
        let p = fig1(0.45);
        let l = build_liouvillian(&p, 0.0).matrix;
        let rv = vectorize(steady_state_analytic(&p).unwrap().matrix());
        let ld = drazin_inverse(&l, &rv, &identity_dual(2)).unwrap();
        assert!((&(&l * &ld) * &l).max_abs_diff(&l) < 1e-9);
        assert!((&(&ld * &l) * &ld).max_abs_diff(&ld) < 1e-9 * ld.max_abs());
        assert!((&l * &ld).max_abs_diff(&(&ld * &l)) < 1e-9);
        assert!(ld.mul_vec(&rv).iter().all(|z| z.norm() < 1e-9));
    }

    #[test]
    fn quantum_bound_below_classical() {
        for g1 in [0.05, 0.2, 0.45, 0.8] {
            let p = fig1(g1);
            let qq = q_quantum(&p).unwrap();
            let qc = q_cl(&p).unwrap().q;
            assert!(qq.q_q < qc, "g1 = {g1}: {} vs {qc}", qq.q_q);
            assert!(qq.psi_imag.abs() < 1e-8);
        }
    }

    #[test]
    fn vanishing_drive_vanishing_ratio() {
        let a = q_quantum(&ModelParams { nu: 1e-4, ..fig1(0.45) }).unwrap();
        let b = q_quantum(&ModelParams { nu: 1e-6, ..fig1(0.45) }).unwrap();
        assert!(b.q_q < a.q_q && b.q_q < 1e-8);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn split_is_trace_preserving(g1 in 0.0f64..1.0, g2 in 0.0f64..0.1, nu in 0.0f64..1.0) {
            let p = ModelParams { g1, g2, nu, ..ModelParams::fig1() };
            let (l, r) = left_right_liouvillians(&p);
            let left = (&l + &r).left_mul_vec(&identity_dual(2));
            prop_assert!(left.iter().all(|z| z.norm() < 1e-10));
        }

        #[test]
        fn drazin_axioms_random(g1 in 0.05f64..1.0, nu in 0.001f64..1.0) {
            let p = ModelParams { g1, nu, ..ModelParams::fig1() };
            let l = build_liouvillian(&p, 0.0).matrix;
            let rv = vectorize(steady_state_analytic(&p).unwrap().matrix());
            let ld = drazin_inverse(&l, &rv, &identity_dual(2)).unwrap();
            let s = ld.max_abs().max(1.0);
            prop_assert!((&(&l * &ld) * &l).max_abs_diff(&l) < 1e-9 * s);
            prop_assert!((&(&ld * &l) * &ld).max_abs_diff(&ld) < 1e-9 * s * s);
            prop_assert!((&l * &ld).max_abs_diff(&(&ld * &l)) < 1e-9 * s);
        }
    }
}
