//! Finite-τ collisions (approach I) and the partial-SWAP ancilla chain
//! (approach II), with counting-field trajectories.
//!
//! Each collision is a fixed linear map on the (column-stacked) state that is
//! carried between collisions: the 2×2 system state for approach I, the 4×4
//! joint state `S ⊗ A_current` for approach II. The maps are built once per χ
//! and then applied repeatedly.

use alloc::vec;
use alloc::vec::Vec;

use crate::dd::{self, two_prod, Cdd};
use crate::error::{Error, Result};
use crate::fcs::{self, Cumulants};
use crate::fmath;
use crate::linalg::{self, commutator, kron, partial_trace_middle, partial_trace_second, CMatrix, C64, ONE, ZERO};
use crate::markov::{self, CurrentStats, Regime, SigmaMode, TURReport};
use crate::model::{collision_propagator, partial_swap, rotating_hamiltonian, DensityMatrix, ModelParams};
use crate::superop::{from_map, unvectorize, vec_trace, vectorize};

/// Per-collision change (trace distance) below which the dynamics counts as stationary.
pub const SATURATION_TOL: f64 = 1e-8;
/// Change below which the repeated-squaring refinement stops.
pub const REFINE_TOL: f64 = 1e-13;
/// Default number of intra-collision samples for approach I.
pub const DEFAULT_SUBSTEPS: usize = 20;

/// Which collisional dynamics a trajectory follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dynamics {
    /// Independent fresh ancillas.
    Nm1,
    /// Consecutive ancillas coupled by a partial SWAP.
    Nm2,
}

/// System state after one collision together with its diagnostics.
#[derive(Debug, Clone)]
pub struct TrajectoryPoint {
    pub collision_index: usize,
    pub time: f64,
    pub rho_s: DensityMatrix,
    /// States at `kτ/K`, `k = 1..=K`, inside this collision (approach I only).
    pub substep_states: Option<Vec<DensityMatrix>>,
    /// `M(χ, t)` for each entry of the trajectory's counting-field stencil.
    pub mgf_values: Vec<C64>,
    pub dissipator_action: CMatrix,
    /// Rate `σ_j` over the interval ending at this collision.
    pub entropy_production: f64,
}

/// A counting-field trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dynamics: Dynamics,
    pub params: ModelParams,
    pub chi_stencil: Vec<f64>,
    pub rho0: DensityMatrix,
    pub points: Vec<TrajectoryPoint>,
    /// Carried state after the last collision at χ = 0 (2×2 or 4×4).
    pub final_state: CMatrix,
}

impl Trajectory {
    pub fn final_time(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.time)
    }

    /// Series `σ_j`.
    pub fn sigma_series(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.entropy_production).collect()
    }
}

/// Joint state of the system and the ancilla it will collide with next.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub matrix: DensityMatrix,
}

impl JointState {
    pub fn product(rho_s: &DensityMatrix, p: &ModelParams) -> Self {
        let m = kron(rho_s.matrix(), p.ancilla_state().matrix());
        Self {
            matrix: DensityMatrix::new_unchecked(m),
        }
    }

    pub fn reduced_system(&self) -> DensityMatrix {
        DensityMatrix::new_unchecked(partial_trace_second(self.matrix.matrix(), 2, 2))
    }
}

/// Counting-field stencil `OFFSETS · h` with the default step.
pub fn default_stencil(p: &ModelParams) -> Vec<f64> {
    stencil(fcs::default_step(p.omega_a))
}

/// Counting-field stencil `OFFSETS · h`.
pub fn stencil(h: f64) -> Vec<f64> {
    fcs::OFFSETS.iter().map(|k| k * h).collect()
}

/// Approach I collision map on the 2×2 system state.
pub fn nm1_transfer(p: &ModelParams, chi: f64) -> Result<CMatrix> {
    nm1_transfer_dt(p, chi, p.tau)
}

/// Approach I map for a partial collision of duration `dt`.
pub fn nm1_transfer_dt(p: &ModelParams, chi: f64, dt: f64) -> Result<CMatrix> {
    let prop = collision_propagator(p, chi, dt)?;
    let ra = p.ancilla_state();
    Ok(from_map(2, |x| {
        let y = &(&prop.forward * &kron(x, ra.matrix())) * &prop.backward;
        partial_trace_second(&y, 2, 2)
    }))
}

/// Approach II collision map on the 4×4 joint state `S ⊗ A_j`.
pub fn nm2_transfer(p: &ModelParams, chi: f64) -> Result<CMatrix> {
    let prop = collision_propagator(p, chi, p.tau)?;
    let i2 = CMatrix::identity(2);
    let w = kron(&i2, &partial_swap(p.epsilon));
    let left = &w * &kron(&prop.forward, &i2);
    let right = &kron(&prop.backward, &i2) * &w.adjoint();
    let ra = p.ancilla_state();
    Ok(from_map(4, |x| {
        let y = &(&left * &kron(x, ra.matrix())) * &right;
        partial_trace_middle(&y, 2, 2, 2)
    }))
}

/// Highest counting-field harmonic resolved by [`HarmonicMap`], in units of
/// `χω_A/4` (the phase unit of the dressed collision propagator).
pub const HARMONIC_DEGREE: i32 = 8;

/// A collision map split into counting-field harmonics,
/// `T(χ) = Σ_s e^{i s χ ω_A/4} T_s`.
///
/// The dressing only ever multiplies matrix elements by such phases, so the
/// split is exact. Propagating with the harmonics fixed and the phases
/// evaluated in double-double precision keeps rounding noise out of the
/// χ-derivatives of long trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicMap {
    pub harmonics: Vec<(i32, CMatrix)>,
    pub omega_a: f64,
}

impl HarmonicMap {
    /// Recovers the harmonics of `map(χ)` from `2K+1` samples over one period.
    pub fn build(omega_a: f64, map: impl Fn(f64) -> Result<CMatrix>) -> Result<Self> {
        let k = HARMONIC_DEGREE;
        let n = 2 * k + 1;
        let unit = 0.25 * omega_a;
        let thetas: Vec<f64> = (0..n).map(|j| 2.0 * core::f64::consts::PI * j as f64 / n as f64).collect();
        let samples: Vec<CMatrix> = thetas.iter().map(|th| map(th / unit)).collect::<Result<_>>()?;
        let dim = samples[0].rows();
        let scale = samples.iter().map(CMatrix::max_abs).fold(0.0, f64::max);
        let mut harmonics = Vec::new();
        for s in -k..=k {
            let mut acc = CMatrix::zeros(dim, dim);
            for (th, m) in thetas.iter().zip(&samples) {
                let ph = -(s as f64) * th;
                acc += &m.scale(C64::new(fmath::cos(ph), fmath::sin(ph)));
            }
            let acc = acc.scale_re(1.0 / n as f64);
            if acc.max_abs() > 1e-14 * scale {
                harmonics.push((s, acc));
            }
        }
        let out = Self { harmonics, omega_a };
        for chi in [0.0, 0.37 / omega_a] {
            if out.at(chi).max_abs_diff(&map(chi)?) > 1e-12 * scale.max(1.0) {
                return Err(Error::NumericalBreakdown(
                    "collision map has counting-field harmonics beyond the resolved degree".into(),
                ));
            }
        }
        Ok(out)
    }

    pub fn at(&self, chi: f64) -> CMatrix {
        let (_, first) = &self.harmonics[0];
        let mut m = CMatrix::zeros(first.rows(), first.cols());
        for (s, t) in &self.harmonics {
            let th = *s as f64 * 0.25 * chi * self.omega_a;
            m += &t.scale(C64::new(fmath::cos(th), fmath::sin(th)));
        }
        m
    }

    fn at_dd(&self, chi: f64) -> Vec<Cdd> {
        let len = self.harmonics[0].1.as_slice().len();
        let mut m = vec![Cdd::ZERO; len];
        for (s, t) in &self.harmonics {
            let phase = Cdd::expi(two_prod(*s as f64 * chi, 0.25 * self.omega_a));
            for (e, &z) in m.iter_mut().zip(t.as_slice()) {
                if z != ZERO {
                    *e = *e + phase * Cdd::from_c64(z);
                }
            }
        }
        m
    }
}

/// Counting-field copies of the carried state, one per stencil point,
/// propagated in double-double precision.
struct CountedStates {
    dim: usize,
    maps: Vec<Vec<Cdd>>,
    states: Vec<Vec<Cdd>>,
}

impl CountedStates {
    fn new(map: &HarmonicMap, chi_stencil: &[f64], start: &CMatrix) -> Self {
        let v0: Vec<Cdd> = vectorize(start).into_iter().map(Cdd::from_c64).collect();
        Self {
            dim: start.rows(),
            maps: chi_stencil.iter().map(|&chi| map.at_dd(chi)).collect(),
            states: vec![v0; chi_stencil.len()],
        }
    }

    fn step(&mut self) -> Vec<C64> {
        let n = self.dim * self.dim;
        let d = self.dim;
        self.maps
            .iter()
            .zip(self.states.iter_mut())
            .map(|(m, v)| {
                *v = dd::matvec(n, m, v);
                (0..d).fold(Cdd::ZERO, |acc, i| acc + v[i * (d + 1)]).to_c64()
            })
            .collect()
    }
}

/// Total dissipator of approach I, `(ρ_j − ρ_{j−1})/τ + i[H̃, ρ_{j−1}]`.
pub fn dissipator_nm1(rho_prev: &CMatrix, rho_next: &CMatrix, p: &ModelParams) -> CMatrix {
    let h = rotating_hamiltonian(p);
    let diff = (rho_next - rho_prev).scale_re(1.0 / p.tau);
    &diff + &commutator(&h, rho_prev).scale(C64::new(0.0, 1.0))
}

/// Total dissipator of approach II:
/// `(ρ_j − ρ_{j−1})/τ + i tr_{A_j A_{j+1}}(W[H̃ + H_{A_j}, X ⊗ ρ_A]W†)`,
/// with `X` the joint state before the collision.
pub fn dissipator_nm2(joint_prev: &CMatrix, rho_next: &CMatrix, p: &ModelParams) -> CMatrix {
    let i2 = CMatrix::identity(2);
    let ra = p.ancilla_state();
    let h = kron(
        &(&kron(&rotating_hamiltonian(p), &i2) + &kron(&i2, &crate::model::ancilla_hamiltonian(p))),
        &i2,
    );
    let w = kron(&i2, &partial_swap(p.epsilon));
    let x = kron(joint_prev, ra.matrix());
    let inner = &(&w * &commutator(&h, &x)) * &w.adjoint();
    // Trace both ancillas: middle first, then the remaining one.
    let reduced = partial_trace_second(&partial_trace_middle(&inner, 2, 2, 2), 2, 2);
    let rho_prev = partial_trace_second(joint_prev, 2, 2);
    let diff = (rho_next - &rho_prev).scale_re(1.0 / p.tau);
    &diff + &reduced.scale(C64::new(0.0, 1.0))
}

fn sigma_j(p: &ModelParams, prev: &CMatrix, next: &CMatrix, dissipator: &CMatrix) -> Result<f64> {
    let ds = crate::model::von_neumann_entropy(next)? - crate::model::von_neumann_entropy(prev)?;
    Ok(ds / p.tau + markov::entropy_flux(p, dissipator))
}

fn check_start(p: &ModelParams, rho0: &DensityMatrix, n: usize) -> Result<()> {
    p.validate()?;
    if n == 0 {
        return Err(Error::InvalidParams {
            field: "n",
            reason: "at least one collision is required".into(),
        });
    }
    if rho0.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: rho0.dim(),
        });
    }
    Ok(())
}

fn state(m: CMatrix) -> Result<DensityMatrix> {
    DensityMatrix::new(m.hermitian_part()).or_else(|e| match e {
        // Roundoff accumulated over very long runs; renormalization keeps it a state.
        Error::InvalidState(_) => {
            let tr = m.trace();
            DensityMatrix::new(m.scale(ONE / tr).hermitian_part())
        }
        other => Err(other),
    })
}

/// Approach I trajectory over `n` collisions.
pub fn evolve_nm1(p: &ModelParams, rho0: &DensityMatrix, n: usize, chi_stencil: &[f64]) -> Result<Trajectory> {
    evolve_nm1_impl(p, rho0, n, chi_stencil, None)
}

/// Approach I trajectory that also records `substeps` intra-collision states.
pub fn evolve_nm1_substeps(
    p: &ModelParams,
    rho0: &DensityMatrix,
    n: usize,
    chi_stencil: &[f64],
    substeps: usize,
) -> Result<Trajectory> {
    if substeps == 0 {
        return Err(Error::InvalidParams {
            field: "substeps",
            reason: "must be >= 1".into(),
        });
    }
    evolve_nm1_impl(p, rho0, n, chi_stencil, Some(substeps))
}

fn evolve_nm1_impl(
    p: &ModelParams,
    rho0: &DensityMatrix,
    n: usize,
    chi_stencil: &[f64],
    substeps: Option<usize>,
) -> Result<Trajectory> {
    check_start(p, rho0, n)?;
    let t0 = nm1_transfer(p, 0.0)?;
    let harmonic = HarmonicMap::build(p.omega_a, |chi| nm1_transfer(p, chi))?;
    let sub_maps: Option<Vec<CMatrix>> = match substeps {
        Some(k) => Some(
            (1..=k)
                .map(|i| nm1_transfer_dt(p, 0.0, p.tau * i as f64 / k as f64))
                .collect::<Result<_>>()?,
        ),
        None => None,
    };
    let mut counted = CountedStates::new(&harmonic, chi_stencil, rho0.matrix());
    let mut current = rho0.matrix().clone();
    let mut points = Vec::with_capacity(n);
    for j in 1..=n {
        let vprev = vectorize(&current);
        let next = unvectorize(&t0.mul_vec(&vprev), 2)?;
        let substep_states = match &sub_maps {
            Some(ms) => Some(
                ms.iter()
                    .map(|m| state(unvectorize(&m.mul_vec(&vprev), 2)?))
                    .collect::<Result<Vec<_>>>()?,
            ),
            None => None,
        };
        let mgf_values = counted.step();
        let d = dissipator_nm1(&current, &next, p);
        let sigma = sigma_j(p, &current, &next, &d)?;
        points.push(TrajectoryPoint {
            collision_index: j,
            time: j as f64 * p.tau,
            rho_s: state(next.clone())?,
            substep_states,
            mgf_values,
            dissipator_action: d,
            entropy_production: sigma,
        });
        current = next;
    }
    Ok(Trajectory {
        dynamics: Dynamics::Nm1,
        params: *p,
        chi_stencil: chi_stencil.to_vec(),
        rho0: rho0.clone(),
        points,
        final_state: current,
    })
}

/// Approach II trajectory over `n` collisions, starting from `rho0 ⊗ ρ_A`.
pub fn evolve_nm2(p: &ModelParams, rho0: &DensityMatrix, n: usize, chi_stencil: &[f64]) -> Result<Trajectory> {
    check_start(p, rho0, n)?;
    let t0 = nm2_transfer(p, 0.0)?;
    let harmonic = HarmonicMap::build(p.omega_a, |chi| nm2_transfer(p, chi))?;
    let joint0 = JointState::product(rho0, p);
    let mut counted = CountedStates::new(&harmonic, chi_stencil, joint0.matrix.matrix());
    let mut joint = joint0.matrix.into_matrix();
    let mut points = Vec::with_capacity(n);
    for j in 1..=n {
        let next_joint = unvectorize(&t0.mul_vec(&vectorize(&joint)), 4)?;
        let prev = partial_trace_second(&joint, 2, 2);
        let next = partial_trace_second(&next_joint, 2, 2);
        let mgf_values = counted.step();
        let d = dissipator_nm2(&joint, &next, p);
        let sigma = sigma_j(p, &prev, &next, &d)?;
        points.push(TrajectoryPoint {
            collision_index: j,
            time: j as f64 * p.tau,
            rho_s: state(next)?,
            substep_states: None,
            mgf_values,
            dissipator_action: d,
            entropy_production: sigma,
        });
        joint = next_joint;
    }
    Ok(Trajectory {
        dynamics: Dynamics::Nm2,
        params: *p,
        chi_stencil: chi_stencil.to_vec(),
        rho0: rho0.clone(),
        points,
        final_state: joint,
    })
}

/// Fixed point of the χ = 0 collision map, found by iterating until the
/// per-collision change of the system state drops below [`SATURATION_TOL`]
/// and then refined by repeated squaring.
#[derive(Debug, Clone)]
pub struct SteadyState {
    /// Carried state (2×2 or 4×4) at the fixed point.
    pub carried: CMatrix,
    pub rho_s: DensityMatrix,
    /// Collisions iterated before the detector fired.
    pub collisions: u64,
    /// Steady entropy production rate.
    pub sigma: f64,
}

fn system_of(dynamics: Dynamics, carried: &CMatrix) -> CMatrix {
    match dynamics {
        Dynamics::Nm1 => carried.clone(),
        Dynamics::Nm2 => partial_trace_second(carried, 2, 2),
    }
}

fn transfer(dynamics: Dynamics, p: &ModelParams) -> Result<CMatrix> {
    match dynamics {
        Dynamics::Nm1 => nm1_transfer(p, 0.0),
        Dynamics::Nm2 => nm2_transfer(p, 0.0),
    }
}

/// Collisions iterated one by one before the detector switches to leaps.
const SEQUENTIAL_PROBE: u64 = 4096;

fn system_change(dynamics: Dynamics, map: &CMatrix, v: &[C64], d: usize) -> Result<(f64, Vec<C64>)> {
    let nv = map.mul_vec(v);
    let before = system_of(dynamics, &unvectorize(v, d)?);
    let after = system_of(dynamics, &unvectorize(&nv, d)?);
    Ok((crate::nmq::trace_distance_matrices(&before, &after)?, nv))
}

/// Iterates the collision map from `start` until the per-collision change
/// of the system state drops below [`SATURATION_TOL`], spending at most
/// `max_collisions` collisions.
///
/// The first [`SEQUENTIAL_PROBE`] collisions are applied one at a time;
/// beyond that the state leaps ahead by `T^{2^k}` and the same
/// per-collision test is applied after every leap.
pub fn saturate(dynamics: Dynamics, p: &ModelParams, start: &CMatrix, max_collisions: u64) -> Result<SteadyState> {
    let map = transfer(dynamics, p)?;
    let d = start.rows();
    let mut v = vectorize(start);
    let mut collisions = 0u64;
    let mut fired = false;
    while collisions < max_collisions.min(SEQUENTIAL_PROBE) {
        let (change, nv) = system_change(dynamics, &map, &v, d)?;
        v = nv;
        collisions += 1;
        if change < SATURATION_TOL {
            fired = true;
            break;
        }
    }
    if !fired {
        let mut leap = map.clone();
        let mut length = 1u64;
        loop {
            if collisions >= max_collisions {
                return Err(Error::NotSaturated { collisions });
            }
            leap = &leap * &leap;
            length *= 2;
            v = leap.mul_vec(&v);
            let tr = vec_trace(&v, d);
            for z in &mut v {
                *z /= tr;
            }
            collisions += length;
            let (change, _) = system_change(dynamics, &map, &v, d)?;
            if change < SATURATION_TOL {
                break;
            }
        }
    }
    // Refine: v ← T^{2^k} v until the state stops moving. Renormalizing
    // keeps roundoff in the trace from compounding through the powers.
    // 2⁴⁰ collisions is far past any physical relaxation time while keeping
    // rounding of the unit eigenvalue harmless.
    let mut power = map.clone();
    for _ in 0..40 {
        power = &power * &power;
        let mut nv = power.mul_vec(&v);
        let tr = vec_trace(&nv, d);
        for z in &mut nv {
            *z /= tr;
        }
        let change = nv.iter().zip(&v).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if !change.is_finite() {
            return Err(Error::NumericalBreakdown("saturation refinement diverged".into()));
        }
        v = nv;
        if change < REFINE_TOL {
            break;
        }
    }
    let carried = unvectorize(&v, d)?;
    let tr = vec_trace(&v, d);
    let carried = carried.scale(ONE / tr).hermitian_part();
    let rho_s = state(system_of(dynamics, &carried))?;
    let next = unvectorize(&map.mul_vec(&vectorize(&carried)), d)?;
    let next_s = system_of(dynamics, &next);
    let diss = match dynamics {
        Dynamics::Nm1 => dissipator_nm1(&carried, &next_s, p),
        Dynamics::Nm2 => dissipator_nm2(&carried, &next_s, p),
    };
    let sigma = sigma_j(p, rho_s.matrix(), &next_s, &diss)?;
    Ok(SteadyState {
        carried,
        rho_s,
        collisions,
        sigma,
    })
}

/// Collision budget used when saturating from the end of a trajectory.
/// Leaps make it cheap, and slow modes at weak coupling need ~10⁶ collisions.
pub const DEFAULT_SATURATION_BUDGET: u64 = 1 << 30;

/// First two cumulants of the counted heat at the end of a trajectory.
pub fn trajectory_cumulants(traj: &Trajectory) -> Result<CurrentStats> {
    cumulants_at(traj, traj.points.len().wrapping_sub(1))
}

/// Cumulants of the heat counted up to trajectory point `index`.
pub fn cumulants_at(traj: &Trajectory, index: usize) -> Result<CurrentStats> {
    let last = traj.points.get(index).ok_or(Error::InvalidParams {
        field: "trajectory",
        reason: alloc::format!("no point {index} in a trajectory of {}", traj.points.len()),
    })?;
    let h = stencil_step(&traj.chi_stencil)?;
    let mut values = [ONE; 7];
    values.copy_from_slice(&last.mgf_values);
    let c: Cumulants = fcs::cumulants_from_mgf_samples(&values, h, traj.params.omega_a)?;
    CurrentStats::from_cumulants(c, Some(last.time), Regime::FiniteTime)
}

fn stencil_step(stencil: &[f64]) -> Result<f64> {
    let bad = || Error::InvalidParams {
        field: "chi_stencil",
        reason: "expected the seven-point stencil OFFSETS * h".into(),
    };
    if stencil.len() != 7 {
        return Err(bad());
    }
    let h = stencil[5];
    if !(h > 0.0) {
        return Err(bad());
    }
    for (x, k) in stencil.iter().zip(fcs::OFFSETS) {
        if (x - k * h).abs() > 1e-12 * h {
            return Err(bad());
        }
    }
    Ok(h)
}

/// Trapezoidal `Σ_t` over the per-collision series, the first interval
/// `[0, τ]` taken at `σ_1`.
pub fn integrated_sigma(sigma: &[f64], tau: f64) -> f64 {
    match sigma.first() {
        None => 0.0,
        Some(&s1) => {
            s1 * tau
                + sigma
                    .windows(2)
                    .map(|w| 0.5 * (w[0] + w[1]) * tau)
                    .sum::<f64>()
        }
    }
}

/// Finite-time ratio at the end of `traj`.
pub fn finite_time_tur_nm(traj: &Trajectory, p: &ModelParams, variant: SigmaMode) -> Result<TURReport> {
    let stats = trajectory_cumulants(traj)?;
    if !(stats.mean.abs() > markov::MIN_MEAN) {
        return Err(Error::ZeroMeanCurrent { mean: stats.mean });
    }
    let t = traj.final_time();
    let sigma = match variant {
        SigmaMode::RateTimesT => {
            let ss = saturate(traj.dynamics, p, &traj.final_state, DEFAULT_SATURATION_BUDGET)?;
            ss.sigma * t
        }
        SigmaMode::Integrated => integrated_sigma(&traj.sigma_series(), p.tau),
    };
    markov::tur_ratio(stats, sigma)
}

/// Convenience: full trajectory from the thermal system state and its ratio.
pub fn q_ft(dynamics: Dynamics, p: &ModelParams, t: f64, variant: SigmaMode) -> Result<TURReport> {
    let n = collisions_for(t, p.tau);
    let rho0 = p.system_thermal_state();
    let stencil = default_stencil(p);
    let traj = match dynamics {
        Dynamics::Nm1 => evolve_nm1(p, &rho0, n, &stencil)?,
        Dynamics::Nm2 => evolve_nm2(p, &rho0, n, &stencil)?,
    };
    finite_time_tur_nm(&traj, p, variant)
}

/// Number of whole collisions closest to time `t` (at least one).
pub fn collisions_for(t: f64, tau: f64) -> usize {
    crate::fmath::round(t / tau).max(1.0) as usize
}

/// Trace distance between the approach I trajectory and the Markovian
/// evolution, maximized over `samples` equally spaced times up to `t`.
pub fn markov_limit_distance(p: &ModelParams, rho0: &DensityMatrix, t: f64, samples: usize) -> Result<f64> {
    let n = collisions_for(t, p.tau);
    let per = (n / samples).max(1);
    let t_nm = nm1_transfer(p, 0.0)?;
    let stride = linalg_power(&t_nm, per);
    let l = markov::build_liouvillian(p, 0.0).matrix;
    let exact = linalg::expm(&l, per as f64 * p.tau)?;
    let mut x = vectorize(rho0.matrix());
    let mut y = x.clone();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        x = stride.mul_vec(&x);
        y = exact.mul_vec(&y);
        let d = crate::nmq::trace_distance_matrices(&unvectorize(&x, 2)?, &unvectorize(&y, 2)?)?;
        worst = worst.max(d);
    }
    Ok(worst)
}

fn linalg_power(m: &CMatrix, mut k: usize) -> CMatrix {
    let mut out = CMatrix::identity(m.rows());
    let mut base = m.clone();
    while k > 0 {
        if k & 1 == 1 {
            out = &out * &base;
        }
        base = &base * &base;
        k >>= 1;
    }
    out
}
