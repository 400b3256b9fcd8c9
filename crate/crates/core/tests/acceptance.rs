//! Acceptance suite: one PASS/FAIL line per criterion and a summary line.
//! `ACCEPTANCE_ONLY=4,9` runs a subset (criteria that depend on another
//! one's results run their prerequisite silently). `ACCEPTANCE_STRICT=1`
//! turns any failure into a nonzero exit.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, PI};
use std::process::ExitCode;
use std::time::Instant;

use rqoc::baselines::{
    amplitude_expansion, analytic_qubit_fidelity, bb1_min_duration, detuning_expansion, make_bb1, model_shift_for,
    polish_nonrobust, DragSpec,
};
use rqoc::experiments::{
    best_pulse, compare_objectives, competing_loss_map, difficulty_campaign, perturb_reoptimize, robust_score,
    simulate_rb, CampaignSettings, CliffordDecomposition, ErrorInjection, GateSet, LibraryPulse, ObjectiveComparison,
    OptimizedPulse, PerturbationConfig, RbConfig,
};
use rqoc::qmodel::{
    fidelity_f2, propagate_unitary, x_half_pi_target, ErrorEnsemble, ErrorSample, LindbladConfig, TransmonModel,
};
use rqoc::scp::{evaluate_signal_worst_case, gradient, sample_start, ControlProblem, ScpConfig};
use rqoc::signal::{build_transfer_matrix, DurationConvention, PaddingRule, Signal};
use rqoc::units::{khz_to_rad, mhz_to_rad, ns, us};

const GRID: usize = 41;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn settings(starts: usize, max_iterations: usize) -> CampaignSettings {
    CampaignSettings {
        model: TransmonModel::reference(),
        bandwidth: mhz_to_rad(24.0),
        upsample: 4,
        padding: PaddingRule::default(),
        duration: DurationConvention::default(),
        slew_limit: 1.0,
        scp: ScpConfig { max_iterations, ..ScpConfig::default() },
        starts,
        eval_grid: GRID,
    }
}

fn worst_infidelity(model: &TransmonModel, signal: &Signal, eta: f64) -> f64 {
    let g = evaluate_signal_worst_case(model, signal, eta, GRID, &x_half_pi_target(model.num_levels())).unwrap();
    1.0 - g.worst
}

/// Slope of `log y` against `log x`.
fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Least-squares `y = a·x` through the origin; returns `(a, R²)`.
fn fit_through_origin(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let a = xs.iter().zip(ys).map(|(x, y)| x * y).sum::<f64>() / xs.iter().map(|x| x * x).sum::<f64>();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - a * x).powi(2)).sum();
    let tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    (a, 1.0 - res / tot)
}

/// Ordinary least squares `y = c₀ + c₁·x`; returns `(c₀, c₁, R²)`.
fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let c1 = sxy / sxx;
    let c0 = my - c1 * mx;
    let res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - c0 - c1 * x).powi(2)).sum();
    let tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    (c0, c1, 1.0 - res / tot)
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)).collect()
}

/// Results shared between criteria.
#[derive(Default)]
struct Shared {
    drag: Option<(Signal, f64)>,
    difficulty: Option<Vec<OptimizedPulse>>,
    objectives: Option<Vec<ObjectiveComparison>>,
}

const DRAG_TIME_NS: f64 = 72.0;
const DRAG_CONTROLS: usize = 25;

impl Shared {
    /// Polished DRAG pulse and its polishing infidelity.
    fn drag(&mut self) -> &(Signal, f64) {
        self.drag.get_or_insert_with(|| {
            let model = TransmonModel::reference();
            let t = ns(DRAG_TIME_NS);
            let tm = build_transfer_matrix(DRAG_CONTROLS, t, mhz_to_rad(24.0), 4).unwrap();
            let rec = polish_nonrobust(&model, &tm, &DragSpec::new(t, FRAC_PI_2), &ScpConfig::default()).unwrap();
            (tm.apply(&rec.final_controls).unwrap(), 1.0 - rec.worst_case_fidelity)
        })
    }

    /// 30 starts each at η ∈ {0.025, 0.05, 0.1}, T = 130 ns, 25 controls.
    fn difficulty(&mut self) -> &Vec<OptimizedPulse> {
        self.difficulty.get_or_insert_with(|| {
            let s = settings(DIFFICULTY_STARTS, 10_000);
            difficulty_campaign(&s, ns(130.0), 25, &DIFFICULTY_ETAS, &[0.5, 1.0, 2.0]).unwrap().1
        })
    }

    fn objectives(&mut self) -> &Vec<ObjectiveComparison> {
        self.objectives.get_or_insert_with(|| {
            let s = settings(OBJECTIVE_STARTS, 10_000);
            let times: Vec<f64> = OBJECTIVE_TIMES_NS.iter().map(|&t| ns(t)).collect();
            compare_objectives(&s, &times, OBJECTIVE_CONTROLS, 0.1).unwrap()
        })
    }
}

const DIFFICULTY_STARTS: usize = 30;
const DIFFICULTY_ETAS: [f64; 3] = [0.025, 0.05, 0.1];
const OBJECTIVE_STARTS: usize = 10;
const OBJECTIVE_TIMES_NS: [f64; 3] = [130.0, 150.0, 200.0];
const OBJECTIVE_CONTROLS: usize = 20;

// 1 ----------------------------------------------------------------------

fn c1_analytic(_: &mut Shared) -> Outcome {
    let model = TransmonModel::reference().qubit_only();
    let t = 130e-9;
    let n = 100;
    let ex = PI / (2.0 * t * model.rabi_rates()[0]);
    let signal = Signal::new(t / n as f64, vec![ex; n], vec![0.0; n]).unwrap();
    let target = x_half_pi_target(2);
    let sim = |eps: f64, delta: f64| {
        let e = ErrorSample { amplitude: eps, detuning: model_shift_for(delta) };
        fidelity_f2(&propagate_unitary(&model, &signal, e).unwrap().final_unitary, &target).unwrap()
    };
    let mut worst_diff: f64 = 0.0;
    for &eps in &[-0.1, -0.05, -0.01, 0.0, 0.02, 0.07, 0.1] {
        for &dt in &[-0.1, -0.03, 0.0, 0.01, 0.05, 0.1] {
            let delta = dt / t;
            worst_diff = worst_diff.max((sim(eps, delta) - analytic_qubit_fidelity(t, eps, delta)).abs());
        }
    }
    let xs = logspace(0.01, 0.1, 9);
    let amp_res: Vec<f64> = xs.iter().map(|&e| (analytic_qubit_fidelity(t, e, 0.0) - amplitude_expansion(e)).abs()).collect();
    let det_res: Vec<f64> = xs
        .iter()
        .map(|&x| (analytic_qubit_fidelity(t, 0.0, x / t) - detuning_expansion(t, x / t)).abs())
        .collect();
    let (sa, sd) = (loglog_slope(&xs, &amp_res), loglog_slope(&xs, &det_res));
    let pass = worst_diff <= 1e-12 && (sa - 4.0).abs() <= 0.2 && (sd - 4.0).abs() <= 0.2;
    outcome(
        pass,
        format!("max |simulated − closed form| = {worst_diff:.2e}; residual slopes {sa:.3} (amplitude), {sd:.3} (detuning)"),
    )
}

// 2 ----------------------------------------------------------------------

fn c2_gradient(_: &mut Shared) -> Outcome {
    let model = TransmonModel::reference();
    let nc = 25;
    let tm = build_transfer_matrix(nc, ns(130.0), mhz_to_rad(24.0), 4).unwrap();
    let target = x_half_pi_target(3);
    // Fourth-order central stencil at h = 1e-4: truncation ~h⁴ and rounding
    // ~1e-16/h both stay near 1e-12. A plain h = 1e-6 difference is also
    // reported; its rounding floor (~1e-9 absolute) exceeds the tolerance
    // on components of order 1e-4.
    let mut worst: f64 = 0.0;
    let mut worst_plain: f64 = 0.0;
    let mut compared = 0usize;
    for p in 0..100u64 {
        let c = sample_start(nc, 1.0, 1000 + p).unwrap();
        let e = ErrorSample::amplitude([-0.05, 0.0, 0.05][(p % 3) as usize]);
        let (_, g) = gradient(&model, &tm, &c, e, &target).unwrap();
        let v = c.to_vector();
        let f_at = |k: usize, d: f64| {
            let mut w = v.clone();
            w[k] += d;
            let cs = c.from_vector(&w).unwrap();
            let u = propagate_unitary(&model, &tm.apply(&cs).unwrap(), e).unwrap().final_unitary;
            fidelity_f2(&u, &target).unwrap()
        };
        let h = 1e-4;
        let fd: Vec<f64> = (0..v.len())
            .map(|k| {
                (8.0 * (f_at(k, h) - f_at(k, -h)) - (f_at(k, 2.0 * h) - f_at(k, -2.0 * h)))
                    / (12.0 * h)
            })
            .collect();
        let plain: Vec<f64> =
            (0..v.len()).map(|k| (f_at(k, 1e-6) - f_at(k, -1e-6)) / 2e-6).collect();
        let scale = fd.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for ((gk, fk), pk) in g.iter().zip(&fd).zip(&plain) {
            // Relative to the component, floored at 1e-3 of the largest one
            // so components that vanish do not divide finite-difference noise.
            let floor = fk.abs().max(1e-3 * scale);
            worst = worst.max((gk - fk).abs() / floor);
            worst_plain = worst_plain.max((gk - pk).abs() / floor);
            compared += 1;
        }
    }
    outcome(
        worst <= 1e-6,
        format!(
            "{compared} components, largest relative error {worst:.2e} (4th-order, h=1e-4); {worst_plain:.2e} with a plain h=1e-6 difference"
        ),
    )
}

// 3 ----------------------------------------------------------------------

fn c3_nonrobust(_: &mut Shared) -> Outcome {
    let model = TransmonModel::reference();
    let tm = build_transfer_matrix(25, ns(60.0), mhz_to_rad(24.0), 4).unwrap();
    let problem = ControlProblem::new(model, tm, ErrorEnsemble::nominal());
    let res = rqoc::scp::multistart(&problem, &ScpConfig::default(), 50).unwrap();
    let best = 1.0 - res.best().worst_case_fidelity;
    let hits = res.records.iter().filter(|r| 1.0 - r.worst_case_fidelity <= 1e-8).count();
    outcome(best <= 1e-8, format!("best 1 − F_A = {best:.2e}; {hits}/50 starts reach 1e-8"))
}

// 4 ----------------------------------------------------------------------

fn c4_robustness_gain(sh: &mut Shared) -> Outcome {
    let s = settings(100, 2000);
    let pulse = best_pulse(&s, ns(150.0), 50, 0.05).unwrap();
    let robust = pulse.grid_infidelity;
    let (drag, _) = sh.drag().clone();
    let model = TransmonModel::reference();
    let target = x_half_pi_target(3);
    let f = rqoc::scp::evaluate_samples(
        &model,
        &drag,
        &[ErrorSample::amplitude(-0.05), ErrorSample::amplitude(0.05)],
        &target,
    )
    .unwrap();
    let drag_inf = 1.0 - f[0].min(f[1]);
    outcome(
        robust <= 1e-4 && drag_inf >= 10.0 * robust,
        format!(
            "best of 100 starts: 41-point worst-case infidelity {robust:.2e}; polished DRAG at ±0.05: {drag_inf:.2e} (ratio {:.0})",
            drag_inf / robust
        ),
    )
}

// 5 ----------------------------------------------------------------------

fn c5_drag_quadratic(sh: &mut Shared) -> Outcome {
    let (drag, polish) = sh.drag().clone();
    let model = TransmonModel::reference();
    let g = evaluate_signal_worst_case(&model, &drag, 0.1, GRID, &x_half_pi_target(3)).unwrap();
    let i0 = 1.0 - g.fidelities[GRID / 2];
    let x: Vec<f64> = g.etas.iter().map(|e| e * e).collect();
    let y: Vec<f64> = g.fidelities.iter().map(|f| 1.0 - f - i0).collect();
    let (a, r2) = fit_through_origin(&x, &y);
    outcome(
        r2 >= 0.999,
        format!("polished {DRAG_TIME_NS} ns DRAG (1 − F_A = {polish:.1e}): I(η) − I(0) = {a:.4}·η², R² = {r2:.6}"),
    )
}

// 6 ----------------------------------------------------------------------

fn q_of(pulse: &OptimizedPulse, d: f64) -> (f64, Vec<f64>) {
    let model = TransmonModel::reference();
    let tm = build_transfer_matrix(25, ns(130.0), mhz_to_rad(24.0), 4).unwrap();
    let fids: Vec<f64> = pulse
        .records
        .iter()
        .map(|r| 1.0 - worst_infidelity(&model, &tm.apply(&r.final_controls).unwrap(), pulse.eta))
        .collect();
    (rqoc::experiments::difficulty_q(&fids, d), fids)
}

fn c6_trapping(sh: &mut Shared) -> Outcome {
    let pulses = sh.difficulty().clone();
    let mut detail = Vec::new();
    let mut q = Vec::new();
    for p in &pulses {
        let (qv, fids) = q_of(p, 0.5);
        let best = fids.iter().fold(0.0f64, |m, f| m.max(*f));
        detail.push(format!("η={}: Q(0.5)={qv:.2} (best {:.1e}, n={})", p.eta, 1.0 - best, fids.len()));
        q.push((p.eta, qv));
    }
    let low_ok = q.iter().filter(|(e, _)| *e <= 0.05).all(|(_, v)| *v >= 0.9);
    let at = |eta: f64| q.iter().find(|(e, _)| *e == eta).map(|x| x.1).unwrap();
    let drop = at(0.05) - at(0.1);
    detail.push(format!("drop 0.05→0.1 = {drop:.2}"));
    outcome(low_ok && drop >= 0.5, detail.join("; "))
}

// 7 ----------------------------------------------------------------------

fn c7_perturbation(sh: &mut Shared) -> Outcome {
    let pulses = sh.difficulty().clone();
    let p05 = pulses.iter().find(|p| p.eta == 0.05).unwrap();
    let s = settings(1, 10_000);
    let problem = s.problem(ns(130.0), 25, ErrorEnsemble::amplitude_triple(0.05).unwrap()).unwrap();
    // The 20 most trapped starts.
    let mut recs = p05.records.clone();
    recs.sort_by(|a, b| a.worst_case_fidelity.total_cmp(&b.worst_case_fidelity));
    recs.truncate(20);
    let mut best_gain: f64 = 0.0;
    let mut wins = 0;
    for (i, r) in recs.iter().enumerate() {
        let out = perturb_reoptimize(&problem, &s.scp, r, &PerturbationConfig::default(), 7_000 + i as u64).unwrap();
        best_gain = best_gain.max(out.improvement());
        if out.improvement() >= 10.0 {
            wins += 1;
        }
    }
    outcome(
        wins >= 1,
        format!("{wins}/20 trapped starts improved ≥10× after 3 cycles; largest gain {best_gain:.1}×"),
    )
}

// 8 ----------------------------------------------------------------------

fn c8_competing_loss(_: &mut Shared) -> Outcome {
    let s = settings(4, 3000);
    let model = s.model.clone();
    let nc = 25;
    let mut library = Vec::new();
    let t0 = ns(60.0);
    let p0 = best_pulse(&settings(8, 3000), t0, nc, 0.0).unwrap();
    library.push(LibraryPulse {
        label: "nonrobust 60 ns".into(),
        gate_time: t0,
        robust: false,
        signal: s.transfer_matrix(t0, nc).unwrap().apply(&p0.controls).unwrap(),
    });
    for &tn in &[120.0, 130.0, 150.0, 200.0, 250.0, 300.0] {
        for &eta in &[0.02, 0.05, 0.1] {
            let t = ns(tn);
            let p = best_pulse(&s, t, nc, eta).unwrap();
            library.push(LibraryPulse {
                label: format!("{tn} ns / η={eta}"),
                gate_time: t,
                robust: true,
                signal: s.transfer_matrix(t, nc).unwrap().apply(&p.controls).unwrap(),
            });
        }
    }
    let t1s: Vec<f64> = [20.0, 50.0, 100.0, 182.0, 300.0, 500.0].iter().map(|&t| us(t)).collect();
    let etas: Vec<f64> = (0..=40).map(|k| k as f64 * 0.0025).collect();
    let r = competing_loss_map(&model, &library, &t1s, &etas, 2).unwrap();
    let zero_col_nonrobust = r.cells.iter().filter(|c| c.eta == 0.0).all(|c| !c.robust_wins);
    let cross = r.crossover_at(us(182.0));
    let bounds: Vec<String> = r
        .boundary
        .iter()
        .map(|b| format!("{:.0}µs→{:.4}@{:.0}ns", b.t1 * 1e6, b.eta, b.gate_time * 1e9))
        .collect();
    let pass = zero_col_nonrobust
        && cross.is_some_and(|c| (c - 0.03).abs() <= 0.015)
        && r.boundary.len() == t1s.len()
        && r.r_squared >= 0.95;
    outcome(
        pass,
        format!(
            "crossover at 182 µs: {}; η=0 won by non-robust: {zero_col_nonrobust}; fit k = {:.3}, R² = {:.3}; boundary [{}]",
            cross.map_or("none".into(), |c| format!("{c:.4}")),
            r.k,
            r.r_squared,
            bounds.join(", ")
        ),
    )
}

// 9 ----------------------------------------------------------------------

fn c9_bb1(_: &mut Shared) -> Outcome {
    let model = TransmonModel::reference();
    let tmin = bb1_min_duration(&model, 90.0);
    let qubit = model.qubit_only();
    let eta = 0.05;
    let two = make_bb1(&qubit, 90.0, tmin, ns(0.25)).unwrap();
    let target2 = x_half_pi_target(2);
    let f2 = |e: f64| fidelity_f2(&propagate_unitary(&qubit, &two, ErrorSample::amplitude(e)).unwrap().final_unitary, &target2).unwrap();
    let bb1_two = 1.0 - f2(eta).min(f2(-eta));
    let quad = 1.0 - amplitude_expansion(eta);
    let three = make_bb1(&model, 90.0, tmin, ns(0.25)).unwrap();
    let w3 = worst_infidelity(&model, &three, eta);
    let pass = (tmin - 150e-9).abs() < 1e-12 && bb1_two * 100.0 <= quad && w3 >= 1e-3 / 3.0 && w3 <= 3e-3;
    outcome(
        pass,
        format!(
            "T_min = {:.6} ns; two-level BB1 at η=0.05: {bb1_two:.2e} vs quadratic {quad:.2e} ({:.0}×); three-level square BB1 worst case {w3:.2e} (target 1e-3 within 3×)",
            tmin * 1e9,
            quad / bb1_two
        ),
    )
}

// 10 ---------------------------------------------------------------------

fn c10_frequency(_: &mut Shared) -> Outcome {
    let (eta, shift) = (0.075, khz_to_rad(500.0));
    let score = |starts: usize, t: f64, ens: ErrorEnsemble, a: f64| {
        robust_score(&settings(starts, 10_000), ns(t), 25, ens, a, shift, 5).unwrap()
    };
    let freq150 = score(10, 150.0, ErrorEnsemble::detuning_triple(shift).unwrap(), 0.0);
    let doubly = |t: f64| score(40, t, ErrorEnsemble::doubly_robust(eta, shift).unwrap(), eta);
    let (d150, d175) = (doubly(150.0), doubly(175.0));
    let pass = freq150.ensemble < 1e-5 && d175.ensemble <= 10.0 * freq150.ensemble;
    outcome(
        pass,
        format!(
            "worst case over the optimized samples (5×5 box in brackets): frequency-robust at 150 ns {:.2e} [{:.2e}] (10 starts); \
             doubly robust {:.2e} [{:.2e}] at 150 ns, {:.2e} [{:.2e}] at 175 ns (40 starts)",
            freq150.ensemble, freq150.grid, d150.ensemble, d150.grid, d175.ensemble, d175.grid
        ),
    )
}

// 11 ---------------------------------------------------------------------

fn c11_rb(sh: &mut Shared) -> Outcome {
    let table = CliffordDecomposition::build();
    let model = TransmonModel::reference();
    // Six sequences per length scatter the EPG of a coherent over-rotation by
    // up to 2x between seeds, which hides the quadratic shape; 50 resolve it.
    let cfg = RbConfig { seed: 11, sequences_per_length: 50, ..RbConfig::default() };
    let floor = 1.0 / (cfg.shots as f64 * cfg.sequences_per_length as f64);
    let ideal = simulate_rb(&GateSet::ideal(3), &table, &cfg).unwrap().epg;
    let (phys, total) = (table.average_physical_gates(), table.average_total_gates());

    let comps = sh.objectives().clone();
    let c130 = comps.iter().find(|c| (c.gate_time - ns(130.0)).abs() < 1e-15).unwrap();
    let best = c130
        .worst_case
        .iter()
        .max_by(|a, b| a.worst_case_fidelity.total_cmp(&b.worst_case_fidelity))
        .unwrap();
    let s = settings(1, 10_000);
    let problem = s.problem(ns(130.0), OBJECTIVE_CONTROLS, ErrorEnsemble::amplitude_triple(0.1).unwrap()).unwrap();
    let start = sample_start(OBJECTIVE_CONTROLS, 1.0, best.seed).unwrap();
    let rec = rqoc::scp::run_scp(&problem, &ScpConfig { rng_seed: best.seed, ..s.scp.clone() }, &start).unwrap();
    let robust = problem.signal(&rec.final_controls).unwrap();
    let half_t = ns(60.0);
    let half = rqoc::baselines::make_drag_with(&model, &DragSpec::half(half_t, FRAC_PI_2), 240).unwrap();

    let lind = LindbladConfig::relaxation(us(182.0)).unwrap();
    let scales = [0.9, 0.95, 1.0, 1.05, 1.1];
    let epg = |pulse: &Signal| -> Vec<f64> {
        scales
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                let g = GateSet::from_pulse(&model, pulse, &ErrorInjection::scale(d), Some(&lind)).unwrap();
                simulate_rb(&g, &table, &RbConfig { seed: 100 + i as u64, ..cfg.clone() }).unwrap().epg
            })
            .collect()
    };
    let er = epg(&robust);
    let eh = epg(&half);
    let band = er.iter().cloned().fold(0.0, f64::max) / er.iter().cloned().fold(f64::INFINITY, f64::min);
    let x: Vec<f64> = scales.iter().map(|d| (d - 1.0) * (d - 1.0)).collect();
    let (_, c2, r2) = fit_line(&x, &eh);
    let growth = eh[0].min(eh[4]) / eh[2];
    let pass = ideal <= floor
        && phys == 1.0
        && (total - 2.29).abs() <= 0.01
        && band <= 2.0
        && c2 > 0.0
        && r2 >= 0.95
        && growth >= 2.0;
    let f = |v: &[f64]| v.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(" ");
    outcome(
        pass,
        format!(
            "noiseless EPG {ideal:.1e} (floor {floor:.1e}); gates/Clifford {phys:.3} physical, {total:.4} total; \
             T1 = 182 µs, d = 0.9..1.1: robust EPG [{}] (max/min {band:.2}), half-DRAG EPG [{}] (quadratic R² {r2:.3}, edge/center {growth:.1})",
            f(&er),
            f(&eh)
        ),
    )
}

// 12 ---------------------------------------------------------------------

fn c12_objectives(sh: &mut Shared) -> Outcome {
    let comps = sh.objectives().clone();
    let mut ok = true;
    let mut detail = Vec::new();
    for c in &comps {
        let t = c.gate_time * 1e9;
        let (w, a) = (c.best_worst_case_mode(), c.best_average_mode());
        if t >= 150.0 - 1e-9 {
            ok &= w >= a - 1e-6;
        }
        let trapped = c
            .average_case
            .iter()
            .filter(|r| ((1.0 - r.worst_case_fidelity).log10() - 0.005f64.log10()).abs() <= 0.25)
            .count();
        if (t - 130.0).abs() < 1e-9 {
            // A visible mass: at least a fifth of the average-mode starts.
            ok &= trapped * 5 >= c.average_case.len();
        }
        detail.push(format!(
            "T={t:.0} ns: best worst-case {:.2e} (worst-case mode) vs {:.2e} (average mode), {trapped}/{} average-mode runs near F=99.5%, median time ratio {:.2}",
            1.0 - w,
            1.0 - a,
            c.average_case.len(),
            c.median_runtime_ratio()
        ));
    }
    outcome(ok, detail.join("; "))
}

type Criterion = fn(&mut Shared) -> Outcome;

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 12] = [
        ("analytic oracle", c1_analytic),
        ("gradient correctness", c2_gradient),
        ("non-robust convergence", c3_nonrobust),
        ("robustness gain", c4_robustness_gain),
        ("DRAG quadratic decay", c5_drag_quadratic),
        ("trapping transition", c6_trapping),
        ("perturbation escape", c7_perturbation),
        ("competing-loss boundary", c8_competing_loss),
        ("BB1", c9_bb1),
        ("frequency / doubly robust", c10_frequency),
        ("RB simulation", c11_rb),
        ("worst vs average objective", c12_objectives),
    ];
    let only: Option<BTreeSet<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let mut shared = Shared::default();
    let mut failed = Vec::new();
    let mut ran = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let clock = Instant::now();
        let o = run(&mut shared);
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        ran += 1;
        if !o.pass {
            failed.push(id.to_string());
        }
        println!("{verdict} {id:>2} {name} [{:.0} s]: {}", clock.elapsed().as_secs_f64(), o.detail);
    }
    if failed.is_empty() {
        println!("{ran}/{ran} criteria passed");
        return ExitCode::SUCCESS;
    }
    println!("{}/{ran} criteria passed; failed: {}", ran - failed.len(), failed.join(", "));
    if std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
