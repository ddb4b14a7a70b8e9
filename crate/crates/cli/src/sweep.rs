//! Evaluation of a config over its parameter grid.

use colltur_core::error::Error;
use colltur_core::fcs;
use colltur_core::markov;
use colltur_core::model::ModelParams;
use colltur_core::nmq::{self, BlpDynamics};
use colltur_core::nonmarkov::{self, Dynamics, DEFAULT_SATURATION_BUDGET, DEFAULT_SUBSTEPS};
use colltur_core::qtur;
use rayon::prelude::*;

use crate::config::{BlpKind, ExperimentConfig, Mode, SigmaVariant};

/// Outcome of one row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    ZeroMeanCurrent,
    NotSaturated,
    DegenerateKernel,
    StencilMismatch,
    NumericalError,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::ZeroMeanCurrent => "zero_mean_current",
            Status::NotSaturated => "not_saturated",
            Status::DegenerateKernel => "degenerate_kernel",
            Status::StencilMismatch => "stencil_mismatch",
            Status::NumericalError => "numerical_error",
        }
    }

    fn of(e: &Error) -> Self {
        match e {
            Error::ZeroMeanCurrent { .. } => Status::ZeroMeanCurrent,
            Error::NotSaturated { .. } => Status::NotSaturated,
            Error::DegenerateKernel { .. } | Error::NoUniqueSteadyState | Error::DegenerateSpectrum => {
                Status::DegenerateKernel
            }
            Error::StencilMismatch { .. } => Status::StencilMismatch,
            _ => Status::NumericalError,
        }
    }
}

/// One output row. Numeric fields are `None` when they do not apply to
/// the mode or when the row failed.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    /// Values of the swept parameters, in axis order.
    pub point: Vec<f64>,
    /// Evolution time actually reached; `None` for asymptotic modes.
    pub t: Option<f64>,
    pub mean: Option<f64>,
    pub variance: Option<f64>,
    pub sigma: Option<f64>,
    pub q: Option<f64>,
    pub q_q: Option<f64>,
    pub n: Option<f64>,
    pub status: Status,
    pub message: Option<String>,
}

impl Row {
    fn empty(point: &[f64], t: Option<f64>) -> Self {
        Row {
            point: point.to_vec(),
            t,
            mean: None,
            variance: None,
            sigma: None,
            q: None,
            q_q: None,
            n: None,
            status: Status::Ok,
            message: None,
        }
    }

    fn failed(point: &[f64], t: Option<f64>, e: &Error) -> Self {
        Row {
            status: Status::of(e),
            message: Some(e.to_string()),
            ..Row::empty(point, t)
        }
    }
}

type Res<T> = Result<T, Error>;

/// All rows of `cfg`, in grid order then time order, computed on `threads`
/// workers (0 = all cores). The result does not depend on `threads`.
pub fn run(cfg: &ExperimentConfig, threads: usize) -> Vec<Row> {
    let grid = cfg.grid();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool");
    pool.install(|| {
        grid.par_iter()
            .map(|point| evaluate(cfg, point))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    })
}

/// Rows of one grid point.
pub fn evaluate(cfg: &ExperimentConfig, point: &[f64]) -> Vec<Row> {
    let p = cfg.params_at(point);
    let h = cfg.chi_step.unwrap_or_else(|| fcs::default_step(p.omega_a));
    let times = cfg.times.values();
    match cfg.mode {
        Mode::MarkovNess => vec![asymptotic(point, &p, h, false)],
        Mode::Qtur => vec![asymptotic(point, &p, h, true)],
        Mode::MarkovFt => times
            .iter()
            .map(|&t| markov_ft(point, &p, h, t, cfg.sigma).unwrap_or_else(|e| Row::failed(point, Some(t), &e)))
            .collect(),
        Mode::Nm1 => collisional(point, &p, h, &times, cfg.sigma, Dynamics::Nm1),
        Mode::Nm2 => collisional(point, &p, h, &times, cfg.sigma, Dynamics::Nm2),
        Mode::Blp => blp(cfg, point, &p, &times),
    }
}

fn asymptotic(point: &[f64], p: &ModelParams, h: f64, quantum: bool) -> Row {
    let go = || -> Res<Row> {
        let stats = markov::ness_cumulants_with_step(p, h)?;
        let sigma = markov::steady_entropy_production(p)?;
        let r = markov::tur_ratio(stats, sigma)?;
        let q_q = if quantum { Some(qtur::q_quantum(p)?.q_q) } else { None };
        Ok(Row {
            mean: Some(stats.mean),
            variance: Some(stats.variance),
            sigma: Some(sigma),
            q: Some(r.q),
            q_q,
            ..Row::empty(point, None)
        })
    };
    go().unwrap_or_else(|e| Row::failed(point, None, &e))
}

fn markov_ft(point: &[f64], p: &ModelParams, h: f64, t: f64, variant: SigmaVariant) -> Res<Row> {
    let rho0 = p.system_thermal_state();
    let stats = markov::finite_time_cumulants_with_step(p, &rho0, t, h)?;
    let sigma = match variant {
        SigmaVariant::RateTimesT => markov::steady_entropy_production(p)? * t,
        SigmaVariant::Integrated => markov::integrated_entropy_production(p, &rho0, t)?,
        SigmaVariant::Instantaneous => unreachable!("rejected by validation"),
    };
    let r = markov::tur_ratio(stats, sigma)?;
    Ok(Row {
        mean: Some(stats.mean),
        variance: Some(stats.variance),
        sigma: Some(sigma),
        q: Some(r.q),
        ..Row::empty(point, Some(t))
    })
}

/// One trajectory to the latest time, read off at every requested time.
fn collisional(
    point: &[f64],
    p: &ModelParams,
    h: f64,
    times: &[f64],
    variant: SigmaVariant,
    dynamics: Dynamics,
) -> Vec<Row> {
    let counts: Vec<usize> = times.iter().map(|&t| nonmarkov::collisions_for(t, p.tau)).collect();
    let n_max = counts.iter().copied().max().unwrap_or(1);
    let rho0 = p.system_thermal_state();
    let stencil = nonmarkov::stencil(h);
    let traj = match dynamics {
        Dynamics::Nm1 => nonmarkov::evolve_nm1(p, &rho0, n_max, &stencil),
        Dynamics::Nm2 => nonmarkov::evolve_nm2(p, &rho0, n_max, &stencil),
    };
    let traj = match traj {
        Ok(t) => t,
        Err(e) => return times.iter().map(|&t| Row::failed(point, Some(t), &e)).collect(),
    };
    let series = traj.sigma_series();
    // The fixed point does not depend on where the trajectory stopped.
    let mut rate: Option<Res<f64>> = None;
    let mut steady_rate = || {
        rate.get_or_insert_with(|| {
            nonmarkov::saturate(dynamics, p, &traj.final_state, DEFAULT_SATURATION_BUDGET).map(|s| s.sigma)
        })
        .clone()
    };
    let mut rows = Vec::with_capacity(times.len());
    for &n in &counts {
        let idx = n - 1;
        let time = traj.points[idx].time;
        let mut go = || -> Res<Row> {
            let stats = nonmarkov::cumulants_at(&traj, idx)?;
            let (sigma, q) = match variant {
                SigmaVariant::Instantaneous => (series[idx], None),
                SigmaVariant::RateTimesT | SigmaVariant::Integrated => {
                    let sigma = if variant == SigmaVariant::RateTimesT {
                        steady_rate()? * time
                    } else {
                        nonmarkov::integrated_sigma(&series[..=idx], p.tau)
                    };
                    (sigma, Some(markov::tur_ratio(stats, sigma)?.q))
                }
            };
            Ok(Row {
                mean: Some(stats.mean),
                variance: Some(stats.variance),
                sigma: Some(sigma),
                q,
                ..Row::empty(point, Some(time))
            })
        };
        rows.push(go().unwrap_or_else(|e| Row::failed(point, Some(time), &e)));
    }
    rows
}

fn blp(cfg: &ExperimentConfig, point: &[f64], p: &ModelParams, times: &[f64]) -> Vec<Row> {
    let opts = cfg.blp.as_ref().expect("validated blp table");
    let t_max = times.iter().copied().fold(0.0, f64::max);
    let collisions = nonmarkov::collisions_for(t_max, p.tau);
    let dynamics = match opts.dynamics {
        BlpKind::Markov => {
            let dt = opts.dt.expect("validated dt");
            BlpDynamics::Markov { dt, samples: (t_max / dt).round().max(1.0) as usize }
        }
        BlpKind::Nm1 => BlpDynamics::Nm1Substeps {
            collisions,
            substeps: cfg.substeps.unwrap_or(DEFAULT_SUBSTEPS),
        },
        BlpKind::Nm1Boundary => BlpDynamics::Nm1Boundary { collisions },
        BlpKind::Nm2 => BlpDynamics::Nm2 { collisions },
    };
    let grid = nmq::fibonacci_sphere(opts.grid);
    match nmq::blp_measure(dynamics, p, &grid) {
        Ok(res) => {
            let dt = dynamics.sample_dt(p);
            times
                .iter()
                .map(|&t| {
                    let k = ((t / dt).round() as usize).min(res.running.len() - 1);
                    let (time, n) = res.running[k];
                    Row { n: Some(n), ..Row::empty(point, Some(time)) }
                })
                .collect()
        }
        Err(e) => times.iter().map(|&t| Row::failed(point, Some(t), &e)).collect(),
    }
}
