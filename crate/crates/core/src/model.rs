//! Physical constants, states and operators of the driven-qubit collision model.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmath;
use crate::linalg::{c64, eigvalsh, expm, kron, CMatrix, C64, ONE, ZERO};

/// Hermiticity tolerance for density matrices.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Unit-trace tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted as numerically non-negative.
pub const PSD_FLOOR: f64 = -1e-10;

/// All constants of one experiment, in natural units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// System frequency ω_S.
    pub omega_s: f64,
    /// Ancilla frequency ω_A.
    pub omega_a: f64,
    /// Drive (rotating-frame) frequency ω.
    pub omega: f64,
    /// Drive strength ν.
    pub nu: f64,
    /// Exchange coupling.
    pub g1: f64,
    /// Dephasing (σz σz) coupling.
    pub g2: f64,
    pub temp_s: f64,
    pub temp_a: f64,
    /// Collision duration τ.
    pub tau: f64,
    /// Ancilla-ancilla partial-swap angle ε.
    pub epsilon: f64,
}

impl ModelParams {
    /// Weak-coupling Markovian parameters (the g₁-scan baseline).
    pub fn fig1() -> Self {
        Self {
            omega_s: 1.0,
            omega_a: 1.25,
            omega: 1.0,
            nu: 0.05,
            g1: 0.45,
            g2: 1e-4,
            temp_s: 0.1,
            temp_a: 0.5,
            tau: 1e-5,
            epsilon: 0.0,
        }
    }

    /// Strong-drive parameters used for the finite-τ and swap-chain studies.
    pub fn fig2() -> Self {
        Self {
            omega_s: 4.0,
            omega_a: 4.0,
            omega: 4.0,
            nu: 0.7,
            g1: 1.5,
            g2: 0.01,
            temp_s: 1.5,
            temp_a: 2.5,
            tau: 0.9,
            epsilon: 0.0,
        }
    }

    /// Same as [`fig2`](Self::fig2) with the interacting ancilla chain switched on.
    pub fn fig3() -> Self {
        Self {
            tau: 1e-3,
            epsilon: 0.95 * core::f64::consts::FRAC_PI_2,
            ..Self::fig2()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields: [(&'static str, f64); 10] = [
            ("omega_s", self.omega_s),
            ("omega_a", self.omega_a),
            ("omega", self.omega),
            ("nu", self.nu),
            ("g1", self.g1),
            ("g2", self.g2),
            ("temp_s", self.temp_s),
            ("temp_a", self.temp_a),
            ("tau", self.tau),
            ("epsilon", self.epsilon),
        ];
        for (field, v) in fields {
            if !v.is_finite() {
                return Err(invalid(field, format!("{v} is not finite")));
            }
        }
        for (field, v) in [("temp_s", self.temp_s), ("temp_a", self.temp_a), ("tau", self.tau)] {
            if v <= 0.0 {
                return Err(invalid(field, format!("must be > 0, got {v}")));
            }
        }
        for (field, v) in [("g1", self.g1), ("g2", self.g2), ("nu", self.nu)] {
            if v < 0.0 {
                return Err(invalid(field, format!("must be >= 0, got {v}")));
            }
        }
        if !(0.0..=core::f64::consts::FRAC_PI_2).contains(&self.epsilon) {
            return Err(invalid(
                "epsilon",
                format!("must lie in [0, pi/2], got {}", self.epsilon),
            ));
        }
        Ok(())
    }

    /// `e^{ω_A/T_A}`.
    pub fn boltzmann_a(&self) -> f64 {
        fmath::exp(self.omega_a / self.temp_a)
    }

    /// Excited-state population of a fresh ancilla.
    pub fn ancilla_excited(&self) -> f64 {
        excited_population(self.omega_a, self.temp_a)
    }

    /// Ancilla ⟨σz⟩ = p_e − p_g.
    pub fn ancilla_sz(&self) -> f64 {
        2.0 * self.ancilla_excited() - 1.0
    }

    /// Emission and absorption rate factors `(γ₁, γ₂) = (tr[σ⁻σ⁺ρ_A], tr[σ⁺σ⁻ρ_A])`.
    pub fn rates(&self) -> (f64, f64) {
        let pe = self.ancilla_excited();
        (1.0 - pe, pe)
    }

    pub fn ancilla_state(&self) -> DensityMatrix {
        thermal_unchecked(self.omega_a, self.temp_a)
    }

    pub fn system_thermal_state(&self) -> DensityMatrix {
        thermal_unchecked(self.omega_s, self.temp_s)
    }
}

fn invalid(field: &'static str, reason: alloc::string::String) -> Error {
    Error::InvalidParams { field, reason }
}

fn excited_population(omega: f64, temp: f64) -> f64 {
    // 1/(1+e^{x}) without overflow for large x
    let x = omega / temp;
    if x > 0.0 {
        let e = fmath::exp(-x);
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + fmath::exp(x))
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix on 1 to 3 qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates and wraps `matrix`.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let d = matrix.rows();
        if !matrix.is_square() {
            return Err(Error::NonSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        if !matches!(d, 2 | 4 | 8) {
            return Err(Error::InvalidState(format!("dimension {d} is not 2, 4 or 8")));
        }
        let herm = matrix.max_abs_diff(&matrix.adjoint());
        if herm >= HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() >= TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}")));
        }
        let min = eigvalsh(&matrix)?[0];
        if min <= PSD_FLOOR {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { matrix })
    }

    pub(crate) fn new_unchecked(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            matrix: CMatrix::identity(d).scale_re(1.0 / d as f64),
        }
    }

    /// Pure qubit state `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
    pub fn pure_qubit(theta: f64, phi: f64) -> Self {
        let a = c64(fmath::cos(theta / 2.0), 0.0);
        let b = c64(fmath::cos(phi), fmath::sin(phi)).scale(fmath::sin(theta / 2.0));
        let v = [a, b];
        Self {
            matrix: CMatrix::from_fn(2, 2, |r, c| v[r] * v[c].conj()),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    #[inline]
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        eigvalsh(&self.matrix)
    }

    /// Von Neumann entropy `−tr ρ ln ρ`.
    pub fn entropy(&self) -> Result<f64> {
        von_neumann_entropy(&self.matrix)
    }
}

/// Von Neumann entropy of a Hermitian matrix; eigenvalues within the PSD
/// floor are treated as zero.
pub fn von_neumann_entropy(m: &CMatrix) -> Result<f64> {
    let mut s = 0.0;
    for l in eigvalsh(m)? {
        if l <= PSD_FLOOR {
            return Err(Error::InvalidState(format!("negative eigenvalue {l:e}")));
        }
        if l > 0.0 {
            s -= l * fmath::ln(l);
        }
    }
    Ok(s)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_real(&[0.0, 1.0, 1.0, 0.0])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_vec(2, 2, alloc::vec![ZERO, c64(0.0, -1.0), c64(0.0, 1.0), ZERO]).unwrap()
}

pub fn pauli_z() -> CMatrix {
    CMatrix::real_diag(&[1.0, -1.0])
}

/// Raising operator `|0⟩⟨1|` (ground → excited).
pub fn sigma_plus() -> CMatrix {
    CMatrix::from_real(&[0.0, 1.0, 0.0, 0.0])
}

/// Lowering operator `|1⟩⟨0|`.
pub fn sigma_minus() -> CMatrix {
    CMatrix::from_real(&[0.0, 0.0, 1.0, 0.0])
}

/// SWAP on two qubits.
pub fn swap() -> CMatrix {
    CMatrix::from_real(&[
        1.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 1.0, 0.0, //
        0.0, 1.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, 1.0,
    ])
}

fn thermal_unchecked(omega: f64, temp: f64) -> DensityMatrix {
    let pe = excited_population(omega, temp);
    DensityMatrix::new_unchecked(CMatrix::real_diag(&[pe, 1.0 - pe]))
}

/// Gibbs state of `½ω σz` at temperature `temp`.
pub fn thermal_state(omega: f64, temp: f64) -> Result<DensityMatrix> {
    if !(temp > 0.0) || !temp.is_finite() {
        return Err(invalid("temp", format!("must be finite and > 0, got {temp}")));
    }
    if !omega.is_finite() {
        return Err(invalid("omega", format!("{omega} is not finite")));
    }
    Ok(thermal_unchecked(omega, temp))
}

/// Free system Hamiltonian `½ω_S σz`.
pub fn system_hamiltonian(p: &ModelParams) -> CMatrix {
    pauli_z().scale_re(0.5 * p.omega_s)
}

/// Free ancilla Hamiltonian `½ω_A σz`.
pub fn ancilla_hamiltonian(p: &ModelParams) -> CMatrix {
    pauli_z().scale_re(0.5 * p.omega_a)
}

/// Lab-frame Hamiltonian `½ω_S σz + ν(σx cos ωt + σy sin ωt)`.
pub fn lab_hamiltonian(p: &ModelParams, t: f64) -> CMatrix {
    let wt = p.omega * t;
    let drive = &pauli_x().scale_re(p.nu * fmath::cos(wt)) + &pauli_y().scale_re(p.nu * fmath::sin(wt));
    &system_hamiltonian(p) + &drive
}

/// Rotating-frame Hamiltonian `½(ω_S − ω)σz + νσx`.
pub fn rotating_hamiltonian(p: &ModelParams) -> CMatrix {
    &pauli_z().scale_re(0.5 * (p.omega_s - p.omega)) + &pauli_x().scale_re(p.nu)
}

/// `g₁(σ⁺⊗σ⁻ + σ⁻⊗σ⁺) + g₂ σz⊗σz` on S⊗A.
pub fn interaction_hamiltonian(g1: f64, g2: f64) -> CMatrix {
    let (sp, sm, sz) = (sigma_plus(), sigma_minus(), pauli_z());
    let exchange = &kron(&sp, &sm) + &kron(&sm, &sp);
    &exchange.scale_re(g1) + &kron(&sz, &sz).scale_re(g2)
}

/// `(1/√τ) tr_A[V (I ⊗ ρ_A)]`, the first-moment correction that enforces the
/// stability condition.
pub fn shift_hamiltonian(p: &ModelParams, ancilla: &DensityMatrix) -> Result<CMatrix> {
    if ancilla.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: ancilla.dim(),
        });
    }
    let ra = ancilla.matrix();
    let expect = |op: &CMatrix| (op * ra).trace();
    let (sp, sm, sz) = (sigma_plus(), sigma_minus(), pauli_z());
    let s = 1.0 / fmath::sqrt(p.tau);
    let mut h = sp.scale(expect(&sm) * (p.g1 * s));
    h += &sm.scale(expect(&sp) * (p.g1 * s));
    h += &sz.scale(expect(&sz) * (p.g2 * s));
    Ok(h)
}

/// Partial SWAP `cos ε I₄ + i sin ε SWAP`.
pub fn partial_swap(epsilon: f64) -> CMatrix {
    &CMatrix::identity(4).scale_re(fmath::cos(epsilon)) + &swap().scale(c64(0.0, fmath::sin(epsilon)))
}

/// Collision generator `H̃⊗I + I⊗½ω_Aσz + V/√τ`.
pub fn collision_hamiltonian(p: &ModelParams) -> CMatrix {
    let i2 = CMatrix::identity(2);
    let mut h = kron(&rotating_hamiltonian(p), &i2);
    h += &kron(&i2, &ancilla_hamiltonian(p));
    h += &interaction_hamiltonian(p.g1, p.g2).scale_re(1.0 / fmath::sqrt(p.tau));
    h
}

/// Forward and backward collision propagators for duration `dt`, dressed
/// by the counting field: `U(χ) = e^{−iχH_A/2} U e^{iχH_A/2}` and
/// `Ū(−χ) = e^{iχH_A/2} U† e^{−iχH_A/2}`.
///
/// `ρ ↦ U(χ) ρ Ū(−χ)` has trace equal to the moment generating factor of the
/// energy released by the ancilla.
#[derive(Debug, Clone)]
pub struct CollisionPropagator {
    pub forward: CMatrix,
    pub backward: CMatrix,
}

pub fn collision_propagator(p: &ModelParams, chi: f64, dt: f64) -> Result<CollisionPropagator> {
    let u = expm(&collision_hamiltonian(p).scale(c64(0.0, -dt)), 1.0)?;
    let ud = u.adjoint();
    if chi == 0.0 {
        return Ok(CollisionPropagator {
            forward: u,
            backward: ud,
        });
    }
    // e^{∓iχH_A/2} on S⊗A is diagonal.
    let q = 0.25 * chi * p.omega_a;
    let phase = |sign: f64| {
        let d: Vec<C64> = (0..4)
            .map(|k| {
                let s = if k % 2 == 0 { 1.0 } else { -1.0 };
                let a = sign * s * q;
                c64(fmath::cos(a), fmath::sin(a))
            })
            .collect();
        CMatrix::diag(&d)
    };
    let minus = phase(-1.0);
    let plus = phase(1.0);
    Ok(CollisionPropagator {
        forward: &(&minus * &u) * &plus,
        backward: &(&plus * &ud) * &minus,
    })
}

/// Full-collision unitary `exp(−iτ[H̃⊗I + I⊗H_A + V/√τ])`, counting-field dressed.
pub fn collision_unitary(p: &ModelParams, chi: f64) -> Result<CMatrix> {
    Ok(collision_propagator(p, chi, p.tau)?.forward)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::partial_trace_second;
    use proptest::prelude::*;

    #[test]
    fn thermal_examples() {
        let r = thermal_state(1.0, 1e6).unwrap();
        assert!(r.matrix().max_abs_diff(&CMatrix::real_diag(&[0.5, 0.5])) < 1e-6);
        let r = thermal_state(0.0, 0.3).unwrap();
        assert_eq!(r.matrix(), &CMatrix::real_diag(&[0.5, 0.5]));
        let r = thermal_state(1.25, 0.5).unwrap();
        let e = (-2.5f64).exp();
        let (pg, pe) = (1.0 / (1.0 + e), e / (1.0 + e));
        assert!((r.matrix()[(1, 1)].re - pg).abs() < 1e-15);
        assert!((r.matrix()[(0, 0)].re - pe).abs() < 1e-15);
        assert!((pg - 0.9241).abs() < 1e-4 && (pe - 0.0759).abs() < 1e-4);
        assert!(thermal_state(1.0, 0.0).is_err());
        assert!(thermal_state(1.0, -1.0).is_err());
    }

    #[test]
    fn rotating_hamiltonian_examples() {
        let p = ModelParams::fig1();
        assert!(rotating_hamiltonian(&p).max_abs_diff(&pauli_x().scale_re(p.nu)) < 1e-15);
        let q = ModelParams {
            nu: 0.0,
            omega: 0.0,
            ..p
        };
        assert!(rotating_hamiltonian(&q).max_abs_diff(&pauli_z().scale_re(0.5)) < 1e-15);
    }

    #[test]
    fn rotating_hamiltonian_matches_frame_change() {
        let p = ModelParams {
            omega_s: 1.7,
            omega: 1.1,
            nu: 0.37,
            ..ModelParams::fig1()
        };
        let theta = pauli_z().scale_re(0.5 * p.omega);
        let want = rotating_hamiltonian(&p);
        for k in 0..20 {
            let t = 0.173 * k as f64 + 0.05 * (k * k) as f64;
            let r = expm(&theta.scale(c64(0.0, t)), 1.0).unwrap();
            let rinv = r.adjoint();
            let got = &(&(&r * &lab_hamiltonian(&p, t)) * &rinv) - &theta;
            assert!(got.max_abs_diff(&want) < 1e-10);
        }
    }

    #[test]
    fn interaction_examples() {
        assert_eq!(interaction_hamiltonian(0.0, 0.0), CMatrix::zeros(4, 4));
        let v = interaction_hamiltonian(1.0, 0.0);
        // |01⟩ = excited⊗ground (index 1), |10⟩ = ground⊗excited (index 2)
        for r in 0..4 {
            for c in 0..4 {
                let want = if (r, c) == (1, 2) || (r, c) == (2, 1) { 1.0 } else { 0.0 };
                assert_eq!(v[(r, c)], c64(want, 0.0));
            }
        }
        assert_eq!(
            interaction_hamiltonian(0.0, 1.0),
            CMatrix::real_diag(&[1.0, -1.0, -1.0, 1.0])
        );
    }

    fn shift_by_partial_trace(p: &ModelParams, ra: &CMatrix) -> CMatrix {
        let v = interaction_hamiltonian(p.g1, p.g2);
        let full = &v * &kron(&CMatrix::identity(2), ra);
        partial_trace_second(&full, 2, 2).scale_re(1.0 / p.tau.sqrt())
    }

    #[test]
    fn shift_examples() {
        let p = ModelParams::fig1();
        let hot = thermal_state(1.0, 1e300).unwrap();
        assert!(shift_hamiltonian(&p, &hot).unwrap().max_abs() < 1e-12);
        let q = ModelParams { g2: 0.0, ..p };
        assert_eq!(shift_hamiltonian(&q, &q.ancilla_state()).unwrap().max_abs(), 0.0);

        let ra = p.ancilla_state();
        let got = shift_hamiltonian(&p, &ra).unwrap();
        assert!(got.max_abs_diff(&shift_by_partial_trace(&p, ra.matrix())) < 1e-12);
        let want = pauli_z().scale_re(1e-4 / 1e-5f64.sqrt() * p.ancilla_sz());
        assert!(got.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn partial_swap_examples() {
        assert_eq!(partial_swap(0.0), CMatrix::identity(4));
        let w = partial_swap(core::f64::consts::FRAC_PI_2);
        assert!(w.max_abs_diff(&swap().scale(c64(0.0, 1.0))) < 1e-15);
        let e = 0.95 * core::f64::consts::FRAC_PI_2;
        let w = partial_swap(e);
        assert!((&w * &partial_swap(-e)).max_abs_diff(&CMatrix::identity(4)) < 1e-12);
        assert!((&w * &w.adjoint()).max_abs_diff(&CMatrix::identity(4)) < 1e-12);
    }

    #[test]
    fn free_collision_is_diagonal_phase() {
        let p = ModelParams {
            g1: 0.0,
            g2: 0.0,
            nu: 0.0,
            ..ModelParams::fig2()
        };
        let u = collision_unitary(&p, 0.0).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                if r != c {
                    assert!(u[(r, c)].norm() < 1e-14);
                } else {
                    assert!((u[(r, r)].norm() - 1.0).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn collision_unitary_counting_field() {
        let p = ModelParams::fig2();
        let plain = expm(&collision_hamiltonian(&p).scale(c64(0.0, -p.tau)), 1.0).unwrap();
        assert_eq!(collision_unitary(&p, 0.0).unwrap(), plain);

        let prop = collision_propagator(&p, 0.1, p.tau).unwrap();
        let u = &prop.forward;
        assert!((u * &u.adjoint()).max_abs_diff(&CMatrix::identity(4)) < 1e-10);
        let ra = p.ancilla_state();
        let rs = p.system_thermal_state();
        let joint = kron(rs.matrix(), ra.matrix());
        let out0 = &(&plain * &joint) * &plain.adjoint();
        assert!((out0.trace() - ONE).norm() < 1e-10);
        let outc = &(&prop.forward * &joint) * &prop.backward;
        assert!(outc.trace().norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn stability_condition_vanishes() {
        let p = ModelParams { g1: 0.8, g2: 0.3, ..ModelParams::fig2() };
        let ra = p.ancilla_state();
        let h = shift_hamiltonian(&p, &ra).unwrap().scale_re(p.tau.sqrt());
        let v = interaction_hamiltonian(p.g1, p.g2);
        let shifted = &v - &kron(&h, &CMatrix::identity(2));
        for k in 0..10 {
            let th = 0.3 * k as f64;
            let rs = DensityMatrix::pure_qubit(th, 1.7 * th);
            let mixed = &rs.matrix().scale_re(0.8) + &CMatrix::identity(2).scale_re(0.1);
            let x = &shifted * &kron(&mixed, ra.matrix());
            assert!(partial_trace_second(&x, 2, 2).max_abs() < 1e-12);
        }
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(CMatrix::real_diag(&[0.7, 0.3])).is_ok());
        assert!(DensityMatrix::new(CMatrix::real_diag(&[0.7, 0.4])).is_err());
        assert!(DensityMatrix::new(CMatrix::real_diag(&[1.2, -0.2])).is_err());
        assert!(DensityMatrix::new(CMatrix::real_diag(&[1.0 / 3.0; 3])).is_err());
        let mut m = CMatrix::real_diag(&[0.5, 0.5]);
        m[(0, 1)] = c64(0.0, 0.1);
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::fig1().validate().is_ok());
        assert!(ModelParams::fig3().validate().is_ok());
        for bad in [
            ModelParams { tau: 0.0, ..ModelParams::fig1() },
            ModelParams { temp_a: -1.0, ..ModelParams::fig1() },
            ModelParams { g1: -0.1, ..ModelParams::fig1() },
            ModelParams { epsilon: 2.0, ..ModelParams::fig1() },
            ModelParams { nu: f64::NAN, ..ModelParams::fig1() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::InvalidParams { .. })));
        }
    }

    proptest! {
        #[test]
        fn rates_sum_to_one(wa in -20.0f64..20.0, ta in 1e-3f64..1e3) {
            let p = ModelParams { omega_a: wa, temp_a: ta, ..ModelParams::fig1() };
            let (g1, g2) = p.rates();
            prop_assert!((g1 + g2 - 1.0).abs() < 1e-15);
            let ra = p.ancilla_state();
            let e1 = (&(&sigma_minus() * &sigma_plus()) * ra.matrix()).trace().re;
            let e2 = (&(&sigma_plus() * &sigma_minus()) * ra.matrix()).trace().re;
            prop_assert!((e1 - g1).abs() < 1e-15 && (e2 - g2).abs() < 1e-15);
        }

        #[test]
        fn partial_swap_unitary(eps in 0.0f64..core::f64::consts::FRAC_PI_2) {
            let w = partial_swap(eps);
            prop_assert!((&w * &w.adjoint()).max_abs_diff(&CMatrix::identity(4)) < 1e-12);
        }

        #[test]
        fn thermal_commutes_with_hamiltonian(w in -5.0f64..5.0, t in 0.01f64..10.0) {
            let r = thermal_state(w, t).unwrap();
            let h = pauli_z().scale_re(0.5 * w);
            prop_assert_eq!(crate::linalg::commutator(r.matrix(), &h).max_abs(), 0.0);
        }

        #[test]
        fn stability_condition_random_states(
            g1 in 0.0f64..2.0, g2 in 0.0f64..1.0,
            th in 0.0..std::f64::consts::PI, ph in 0.0..std::f64::consts::TAU, mix in 0.0f64..1.0,
        ) {
            let p = ModelParams { g1, g2, ..ModelParams::fig2() };
            let ra = p.ancilla_state();
            let h = shift_hamiltonian(&p, &ra).unwrap().scale_re(p.tau.sqrt());
            let shifted = &interaction_hamiltonian(g1, g2) - &kron(&h, &CMatrix::identity(2));
            let rs = &DensityMatrix::pure_qubit(th, ph).matrix().scale_re(mix)
                + &CMatrix::identity(2).scale_re(0.5 * (1.0 - mix));
            let x = &shifted * &kron(&rs, ra.matrix());
            prop_assert!(partial_trace_second(&x, 2, 2).max_abs() < 1e-12);
        }
    }
}
