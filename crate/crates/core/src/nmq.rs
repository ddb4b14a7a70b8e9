//! BLP measure of information backflow for the collisional dynamics.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fmath;
use crate::linalg::{eigvalsh, expm, partial_trace_second, CMatrix};
use crate::markov::build_liouvillian;
use crate::model::{DensityMatrix, ModelParams};
use crate::nonmarkov::{nm1_transfer, nm1_transfer_dt, nm2_transfer, JointState};
use crate::superop::{unvectorize, vectorize};

/// Increments of the trace distance below this are treated as noise.
pub const INCREMENT_FLOOR: f64 = 1e-12;
/// Default number of Bloch directions in the pair grid.
pub const DEFAULT_GRID: usize = 64;

/// `½ tr|ρ₁ − ρ₂|` for density matrices.
pub fn trace_distance(r1: &DensityMatrix, r2: &DensityMatrix) -> Result<f64> {
    trace_distance_matrices(r1.matrix(), r2.matrix())
}

/// `½ tr|a − b|` for Hermitian matrices.
pub fn trace_distance_matrices(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            got: b.rows(),
        });
    }
    let diff = a - b;
    Ok(0.5 * eigvalsh(&diff)?.iter().map(|l| l.abs()).sum::<f64>())
}

/// Bloch angles `(θ, φ)` of `n` near-uniform points on the sphere.
pub fn fibonacci_sphere(n: usize) -> Vec<(f64, f64)> {
    let golden = PI * (3.0 - fmath::sqrt(5.0));
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let theta = fmath::atan2(fmath::sqrt((1.0 - z * z).max(0.0)), z);
            let phi = (golden * i as f64) % (2.0 * PI);
            (theta, phi)
        })
        .collect()
}

/// The orthogonal partner of the pure state at `(θ, φ)`.
pub fn antipode((theta, phi): (f64, f64)) -> (f64, f64) {
    (PI - theta, (phi + PI) % (2.0 * PI))
}

/// Sampling of the dynamics used to track the trace distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlpDynamics {
    /// GKSL evolution sampled every `dt` for `samples` steps.
    Markov { dt: f64, samples: usize },
    /// Approach I sampled at `substeps` points inside each collision.
    Nm1Substeps { collisions: usize, substeps: usize },
    /// Approach I sampled at collision boundaries only.
    Nm1Boundary { collisions: usize },
    /// Approach II sampled after every collision.
    Nm2 { collisions: usize },
}

impl BlpDynamics {
    /// Time between consecutive samples.
    pub fn sample_dt(&self, p: &ModelParams) -> f64 {
        match *self {
            BlpDynamics::Markov { dt, .. } => dt,
            BlpDynamics::Nm1Substeps { substeps, .. } => p.tau / substeps as f64,
            BlpDynamics::Nm1Boundary { .. } | BlpDynamics::Nm2 { .. } => p.tau,
        }
    }
}

/// Result of the maximization over initial pairs.
#[derive(Debug, Clone)]
pub struct BLPResult {
    pub n_value: f64,
    pub best_pair: (DensityMatrix, DensityMatrix),
    /// Positive increments `(sample index, D_{k+1} − D_k)` of the best pair.
    pub increments: Vec<(usize, f64)>,
    /// Running measure `(t, max over pairs of the partial sum up to t)`.
    pub running: Vec<(f64, f64)>,
}

/// Linear sampler over vectorized carried states.
struct Sampler {
    /// Maps applied in turn; each output is one sample.
    cycle: Vec<CMatrix>,
    /// Whether samples restart from the state at the start of the cycle
    /// (intra-collision sampling) or chain (ordinary stepping).
    from_cycle_start: bool,
    cycles: usize,
    carried_dim: usize,
}

fn sampler(dynamics: BlpDynamics, p: &ModelParams) -> Result<Sampler> {
    Ok(match dynamics {
        BlpDynamics::Markov { dt, samples } => Sampler {
            cycle: vec![expm(&build_liouvillian(p, 0.0).matrix, dt)?],
            from_cycle_start: false,
            cycles: samples,
            carried_dim: 2,
        },
        BlpDynamics::Nm1Substeps { collisions, substeps } => {
            if substeps == 0 {
                return Err(Error::InvalidParams {
                    field: "substeps",
                    reason: "must be >= 1".into(),
                });
            }
            Sampler {
                cycle: (1..=substeps)
                    .map(|k| nm1_transfer_dt(p, 0.0, p.tau * k as f64 / substeps as f64))
                    .collect::<Result<_>>()?,
                from_cycle_start: true,
                cycles: collisions,
                carried_dim: 2,
            }
        }
        BlpDynamics::Nm1Boundary { collisions } => Sampler {
            cycle: vec![nm1_transfer(p, 0.0)?],
            from_cycle_start: false,
            cycles: collisions,
            carried_dim: 2,
        },
        BlpDynamics::Nm2 { collisions } => Sampler {
            cycle: vec![nm2_transfer(p, 0.0)?],
            from_cycle_start: false,
            cycles: collisions,
            carried_dim: 4,
        },
    })
}

fn carried(state: &DensityMatrix, p: &ModelParams, dim: usize) -> CMatrix {
    if dim == 4 {
        JointState::product(state, p).matrix.into_matrix()
    } else {
        state.matrix().clone()
    }
}

fn system(v: &[crate::linalg::C64], dim: usize) -> Result<CMatrix> {
    let m = unvectorize(v, dim)?;
    Ok(if dim == 4 { partial_trace_second(&m, 2, 2) } else { m })
}

/// Trace-distance series `D_0, D_1, …` for one pair of initial states.
pub fn distance_series(
    dynamics: BlpDynamics,
    p: &ModelParams,
    a: &DensityMatrix,
    b: &DensityMatrix,
) -> Result<Vec<f64>> {
    let s = sampler(dynamics, p)?;
    distance_series_with(&s, p, a, b)
}

fn distance_series_with(s: &Sampler, p: &ModelParams, a: &DensityMatrix, b: &DensityMatrix) -> Result<Vec<f64>> {
    let d = s.carried_dim;
    let mut va = vectorize(&carried(a, p, d));
    let mut vb = vectorize(&carried(b, p, d));
    let mut out = Vec::with_capacity(1 + s.cycles * s.cycle.len());
    out.push(trace_distance(a, b)?);
    for _ in 0..s.cycles {
        let mut last = (va.clone(), vb.clone());
        for m in &s.cycle {
            let (xa, xb) = if s.from_cycle_start {
                (m.mul_vec(&va), m.mul_vec(&vb))
            } else {
                (m.mul_vec(&last.0), m.mul_vec(&last.1))
            };
            out.push(trace_distance_matrices(&system(&xa, d)?, &system(&xb, d)?)?);
            last = (xa, xb);
        }
        va = last.0;
        vb = last.1;
    }
    Ok(out)
}

/// Sum of positive increments above [`INCREMENT_FLOOR`].
pub fn backflow(series: &[f64]) -> (f64, Vec<(usize, f64)>) {
    let mut total = 0.0;
    let mut incs = Vec::new();
    for (k, w) in series.windows(2).enumerate() {
        let inc = w[1] - w[0];
        if inc > INCREMENT_FLOOR {
            total += inc;
            incs.push((k, inc));
        }
    }
    (total, incs)
}

/// BLP measure maximized over antipodal pure pairs with first members at `grid`.
pub fn blp_measure(dynamics: BlpDynamics, p: &ModelParams, grid: &[(f64, f64)]) -> Result<BLPResult> {
    if grid.is_empty() {
        return Err(Error::InvalidParams {
            field: "grid",
            reason: "at least one Bloch direction is required".into(),
        });
    }
    let s = sampler(dynamics, p)?;
    let dt = dynamics.sample_dt(p);
    let mut best: Option<(f64, usize, Vec<(usize, f64)>)> = None;
    let mut running: Vec<f64> = Vec::new();
    for (i, &angles) in grid.iter().enumerate() {
        let a = DensityMatrix::pure_qubit(angles.0, angles.1);
        let (t2, p2) = antipode(angles);
        let b = DensityMatrix::pure_qubit(t2, p2);
        let series = distance_series_with(&s, p, &a, &b)?;
        let (n, incs) = backflow(&series);
        if running.is_empty() {
            running = vec![0.0; series.len()];
        }
        let mut acc = 0.0;
        for (k, w) in series.windows(2).enumerate() {
            let inc = w[1] - w[0];
            if inc > INCREMENT_FLOOR {
                acc += inc;
            }
            running[k + 1] = running[k + 1].max(acc);
        }
        if best.as_ref().map_or(true, |b| n > b.0) {
            best = Some((n, i, incs));
        }
    }
    let (n_value, idx, increments) = best.expect("grid is nonempty");
    let angles = grid[idx];
    let (t2, p2) = antipode(angles);
    Ok(BLPResult {
        n_value,
        best_pair: (
            DensityMatrix::pure_qubit(angles.0, angles.1),
            DensityMatrix::pure_qubit(t2, p2),
        ),
        increments,
        running: running
            .iter()
            .enumerate()
            .map(|(k, &n)| (k as f64 * dt, n))
            .collect(),
    })
}
