//! Subcommand bodies: build the inputs, call the library, write artifacts.

use std::path::Path;

use rqoc::baselines::{bb1_min_duration, make_bb1, make_drag, polish_nonrobust, DragSpec};
use rqoc::experiments::{
    compare_objectives, competing_loss_map, difficulty_campaign, drive_angle, heatmap_time_controls, perturb_reoptimize,
    robust_freq_campaign, simulate_ape, simulate_rb, sweep_error, best_pulse, CliffordDecomposition, ErrorInjection,
    GateSet, LibraryPulse, RbConfig,
};
use rqoc::qmodel::{average_fidelity_open, x_half_pi_target, ErrorEnsemble, ErrorSample, LindbladConfig, TransmonModel};
use rqoc::scp::{
    evaluate_samples, evaluate_signal_worst_case, multistart_with, run_scp, sample_start, ControlProblem,
    OptimizationRecord,
};
use rqoc::signal::{read_pulse_csv, Signal};
use rqoc::units::{khz_to_rad, ns, to_ns, us};
use rqoc::{Error, Result};

use crate::config::CampaignConfig;
use crate::output::{fmt, heatmap, line_chart, Artifacts, Series};
use crate::{Baseline, Experiment};

fn artifacts(cfg: &CampaignConfig, name: &str) -> Result<Artifacts> {
    Artifacts::new(&cfg.run.out, name, cfg.run.seed, cfg.run.format)
}

fn finish(a: &Artifacts) {
    for p in a.written() {
        println!("wrote {}", p.display());
    }
}

fn record_rows(records: &[OptimizationRecord]) -> (Vec<String>, Vec<Vec<String>>) {
    let samples = records.first().map_or(0, |r| r.per_sample_fidelities.len());
    let mut header: Vec<String> = ["seed", "termination", "iterations", "accepted", "worst_case_fidelity"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..samples).map(|k| format!("fidelity_{k}")));
    let rows = records
        .iter()
        .map(|r| {
            let mut row = vec![
                r.seed.to_string(),
                r.termination.as_str().to_string(),
                r.iterations_used.to_string(),
                r.accepted_steps.to_string(),
                fmt(r.worst_case_fidelity),
            ];
            row.extend(r.per_sample_fidelities.iter().map(|&f| fmt(f)));
            row
        })
        .collect();
    (header, rows)
}

fn write_angle(a: &mut Artifacts, suffix: &str, signal: &Signal) -> Result<()> {
    let rows: Vec<Vec<String>> = drive_angle(signal)
        .into_iter()
        .enumerate()
        .map(|(k, th)| vec![fmt(to_ns((k as f64 + 0.5) * signal.dt())), fmt(th)])
        .collect();
    a.table(suffix, &["t_ns", "angle_rad"], &rows)?;
    Ok(())
}

fn sweep_rows(model: &TransmonModel, signal: &Signal, eta_max: f64, grid: usize, t1: Option<f64>) -> Result<Vec<(f64, f64, Option<f64>)>> {
    let target = x_half_pi_target(model.num_levels());
    let etas: Vec<f64> = if eta_max == 0.0 || grid < 3 {
        vec![0.0]
    } else {
        evaluate_signal_worst_case(model, signal, eta_max, grid, &target)?.etas
    };
    let samples: Vec<ErrorSample> = etas.iter().map(|&e| ErrorSample::amplitude(e)).collect();
    let closed = evaluate_samples(model, signal, &samples, &target)?;
    let lind = t1.map(LindbladConfig::relaxation).transpose()?;
    etas.iter()
        .zip(closed)
        .map(|(&e, f)| {
            let open = match &lind {
                Some(l) => Some(average_fidelity_open(model, signal, ErrorSample::amplitude(e), l, &target)?),
                None => None,
            };
            Ok((e, f, open))
        })
        .collect()
}

fn write_sweep(a: &mut Artifacts, suffix: &str, title: &str, rows: &[(f64, f64, Option<f64>)]) -> Result<()> {
    let open = rows.iter().any(|r| r.2.is_some());
    let mut header = vec!["eta", "fidelity", "infidelity"];
    if open {
        header.push("fidelity_open");
    }
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|(e, f, o)| {
            let mut r = vec![fmt(*e), fmt(*f), fmt(1.0 - f)];
            if let Some(o) = o {
                r.push(fmt(*o));
            }
            r
        })
        .collect();
    a.table(suffix, &header, &table)?;
    let mut series = vec![Series {
        label: "unitary".into(),
        points: rows.iter().map(|r| (r.0, 1.0 - r.1)).collect(),
        dashed: false,
    }];
    if open {
        series.push(Series {
            label: "open".into(),
            points: rows.iter().filter_map(|r| r.2.map(|o| (r.0, 1.0 - o))).collect(),
            dashed: true,
        });
    }
    a.svg(suffix, || line_chart(title, "eta", "infidelity", &series, true))?;
    Ok(())
}

pub fn optimize(cfg: &CampaignConfig) -> Result<()> {
    let t = cfg.gate_time()?;
    let n = cfg.signal.n_controls;
    let problem = ControlProblem::new(cfg.model()?, cfg.transfer_matrix(t, n)?, cfg.ensemble()?);
    let slew = cfg.signal.slew;
    let res = multistart_with(&problem, &cfg.scp(), cfg.run.starts, |seed| sample_start(n, slew, seed))?;
    let best = res.best();
    let signal = problem.signal(&best.final_controls)?;
    let mut a = artifacts(cfg, "optimize")?;
    let (header, rows) = record_rows(&res.records);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    a.table("records", &header, &rows)?;
    a.pulse("pulse", &signal)?;
    let ctrl: Vec<Vec<String>> = best
        .final_controls
        .cx
        .iter()
        .zip(&best.final_controls.cy)
        .map(|(x, y)| vec![fmt(*x), fmt(*y)])
        .collect();
    a.table("controls", &["cx", "cy"], &ctrl)?;
    write_angle(&mut a, "angle", &signal)?;
    let eta = cfg.eta_max();
    let rows = sweep_rows(&problem.model, &signal, eta, cfg.evaluate.grid, None)?;
    write_sweep(&mut a, "sweep", "best pulse", &rows)?;
    let summary = serde_json::json!({
        "best_seed": best.seed,
        "best_worst_case_infidelity": 1.0 - best.worst_case_fidelity,
        "termination": best.termination.as_str(),
    });
    a.metadata("optimize", cfg, &summary)?;
    finish(&a);
    println!("best worst-case infidelity: {:.6e}", 1.0 - best.worst_case_fidelity);
    Ok(())
}

pub fn evaluate(cfg: &CampaignConfig, pulse: &Path) -> Result<()> {
    let file = std::fs::File::open(pulse).map_err(|e| Error::Input(format!("{}: {e}", pulse.display())))?;
    let signal = read_pulse_csv(file)?;
    let model = cfg.model()?;
    let rows = sweep_rows(&model, &signal, cfg.evaluate.eta_max, cfg.evaluate.grid, cfg.evaluate.t1_us.map(us))?;
    let mut a = artifacts(cfg, "evaluate")?;
    write_sweep(&mut a, "", "evaluation", &rows)?;
    let worst = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    a.metadata("evaluate", cfg, &serde_json::json!({ "pulse": pulse, "worst_case_infidelity": 1.0 - worst }))?;
    finish(&a);
    println!("worst-case infidelity: {:.6e}", 1.0 - worst);
    Ok(())
}

pub fn baseline(cfg: &CampaignConfig, kind: Baseline) -> Result<()> {
    let model = cfg.model()?;
    let angle = std::f64::consts::FRAC_PI_2;
    let (name, signal, extra) = match kind {
        Baseline::Drag => {
            let t = cfg.gate_time()?;
            let n = cfg.signal.n_controls;
            let tm = cfg.transfer_matrix(t, n)?;
            let rec = polish_nonrobust(&model, &tm, &DragSpec::new(t, angle), &cfg.scp())?;
            let raw = make_drag(&model, t, angle, tm.dt_signal)?;
            let polished = tm.apply(&rec.final_controls)?;
            let raw_f = evaluate_samples(&model, &raw, &[ErrorSample::ZERO], &x_half_pi_target(model.num_levels()))?[0];
            ("drag", polished, serde_json::json!({
                "raw_infidelity": 1.0 - raw_f,
                "polished_infidelity": 1.0 - rec.worst_case_fidelity,
                "iterations": rec.iterations_used,
            }))
        }
        Baseline::Bb1 => {
            let t = match cfg.signal.gate_time_ns {
                Some(t) => ns(t),
                None => bb1_min_duration(&model, 90.0),
            };
            let sig = make_bb1(&model, 90.0, t, ns(0.25))?;
            ("bb1", sig, serde_json::json!({ "duration_ns": to_ns(t) }))
        }
    };
    let rows = sweep_rows(&model, &signal, cfg.evaluate.eta_max, cfg.evaluate.grid, cfg.evaluate.t1_us.map(us))?;
    let mut a = artifacts(cfg, name)?;
    a.pulse("pulse", &signal)?;
    write_sweep(&mut a, "sweep", name, &rows)?;
    a.metadata(name, cfg, &extra)?;
    finish(&a);
    let worst = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    println!("worst-case infidelity: {:.6e}", 1.0 - worst);
    Ok(())
}

/// The pulse file if given, else the best robust pulse for the config.
fn pulse_or_optimize(cfg: &CampaignConfig, path: Option<&Path>) -> Result<Signal> {
    if let Some(p) = path {
        let file = std::fs::File::open(p).map_err(|e| Error::Input(format!("{}: {e}", p.display())))?;
        return read_pulse_csv(file);
    }
    let t = cfg.gate_time()?;
    let n = cfg.signal.n_controls;
    let settings = cfg.settings()?;
    let pulse = settings.optimize(t, n, cfg.ensemble()?, cfg.eta_max())?;
    cfg.transfer_matrix(t, n)?.apply(&pulse.controls)
}

pub fn experiment(cfg: &CampaignConfig, name: Experiment) -> Result<()> {
    let x = &cfg.experiment;
    let settings = cfg.settings()?;
    let model = settings.model.clone();
    let n = cfg.signal.n_controls;
    match name {
        Experiment::SweepError => {
            let t = cfg.gate_time()?;
            let etas = &x.sweep_error.etas;
            let tm = cfg.transfer_matrix(t, n)?;
            let pulses: Vec<Signal> = etas
                .iter()
                .map(|&e| tm.apply(&best_pulse(&settings, t, n, e)?.controls))
                .collect::<Result<_>>()?;
            let r = sweep_error(&model, &pulses, etas, cfg.run.eval_grid)?;
            let mut a = artifacts(cfg, "sweep-error")?;
            a.records("", &r.rows)?;
            let cross: Vec<Vec<String>> = r
                .cross
                .iter()
                .zip(etas)
                .map(|(row, e)| std::iter::once(fmt(*e)).chain(row.iter().map(|v| fmt(*v))).collect())
                .collect();
            let mut header = vec!["optimized_eta".to_string()];
            header.extend(etas.iter().map(|e| format!("range_{e}")));
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            a.table("cross", &header, &cross)?;
            for (p, e) in pulses.iter().zip(etas) {
                write_angle(&mut a, &format!("angle_eta{e}"), p)?;
            }
            a.svg("", || {
                line_chart(
                    "worst-case infidelity in [-eta, eta]",
                    "eta",
                    "infidelity",
                    &[
                        Series { label: "optimized for eta".into(), points: r.rows.iter().map(|w| (w.eta, w.own)).collect(), dashed: false },
                        Series { label: "best of all".into(), points: r.rows.iter().map(|w| (w.eta, w.best_any)).collect(), dashed: true },
                    ],
                    true,
                )
            })?;
            a.metadata("sweep-error", cfg, &serde_json::json!({ "max_gap": r.max_gap() }))?;
            finish(&a);
        }
        Experiment::Heatmap => {
            let h = &x.heatmap;
            let times: Vec<f64> = h.gate_times_ns.iter().map(|&t| ns(t)).collect();
            let cells = heatmap_time_controls(&settings, &times, &h.controls, h.eta)?;
            let mut a = artifacts(cfg, "heatmap")?;
            let rows: Vec<Vec<String>> = cells
                .iter()
                .map(|c| {
                    vec![
                        fmt(to_ns(c.gate_time)),
                        c.n_controls.to_string(),
                        fmt(c.best_infidelity),
                        fmt(c.median_infidelity),
                        fmt(c.max_leakage),
                    ]
                })
                .collect();
            a.table("", &["gate_time_ns", "n_controls", "best_infidelity", "median_infidelity", "max_leakage"], &rows)?;
            let grid: Vec<Vec<f64>> = h
                .controls
                .iter()
                .map(|&nc| {
                    times
                        .iter()
                        .map(|&t| {
                            cells
                                .iter()
                                .find(|c| c.n_controls == nc && c.gate_time == t)
                                .map_or(f64::NAN, |c| c.best_infidelity)
                        })
                        .collect()
                })
                .collect();
            let xs: Vec<String> = h.gate_times_ns.iter().map(|t| format!("{t}")).collect();
            let ys: Vec<String> = h.controls.iter().map(|c| c.to_string()).collect();
            a.svg("", || heatmap("worst-case infidelity", "gate time (ns)", "controls per channel", &xs, &ys, &grid))?;
            a.metadata("heatmap", cfg, &serde_json::json!({ "cells": cells.len() }))?;
            finish(&a);
        }
        Experiment::CompetingLoss => {
            let c = &x.competing_loss;
            let mut library = Vec::new();
            let t0 = ns(c.nonrobust_time_ns);
            let p = best_pulse(&settings, t0, n, 0.0)?;
            library.push(LibraryPulse {
                label: format!("nonrobust_{}ns", c.nonrobust_time_ns),
                gate_time: t0,
                robust: false,
                signal: cfg.transfer_matrix(t0, n)?.apply(&p.controls)?,
            });
            for &tn in &c.robust_times_ns {
                for &e in &c.robust_etas {
                    let t = ns(tn);
                    let p = best_pulse(&settings, t, n, e)?;
                    library.push(LibraryPulse {
                        label: format!("robust_{tn}ns_eta{e}"),
                        gate_time: t,
                        robust: true,
                        signal: cfg.transfer_matrix(t, n)?.apply(&p.controls)?,
                    });
                }
            }
            let t1s: Vec<f64> = c.t1_us.iter().map(|&t| us(t)).collect();
            let r = competing_loss_map(&model, &library, &t1s, &c.etas, c.points_per_range)?;
            let mut a = artifacts(cfg, "competing-loss")?;
            let rows: Vec<Vec<String>> = r
                .cells
                .iter()
                .map(|w| {
                    vec![
                        fmt(w.t1 * 1e6),
                        fmt(w.eta),
                        fmt(w.best_fidelity),
                        w.best_label.clone(),
                        fmt(to_ns(w.best_gate_time)),
                        fmt(w.best_nonrobust_fidelity),
                        w.robust_wins.to_string(),
                    ]
                })
                .collect();
            a.table(
                "",
                &["t1_us", "eta", "best_fidelity", "best_pulse", "best_gate_time_ns", "best_nonrobust_fidelity", "robust_wins"],
                &rows,
            )?;
            let b: Vec<Vec<String>> = r
                .boundary
                .iter()
                .map(|b| vec![fmt(b.t1 * 1e6), fmt(b.eta), fmt(to_ns(b.gate_time))])
                .collect();
            a.table("boundary", &["t1_us", "eta", "gate_time_ns"], &b)?;
            let grid: Vec<Vec<f64>> = t1s
                .iter()
                .map(|&t1| r.cells.iter().filter(|w| w.t1 == t1).map(|w| 1.0 - w.best_fidelity).collect())
                .collect();
            let xs: Vec<String> = c.etas.iter().map(|e| format!("{e}")).collect();
            let ys: Vec<String> = c.t1_us.iter().map(|t| format!("{t}")).collect();
            a.svg("", || heatmap("best infidelity", "eta", "T1 (us)", &xs, &ys, &grid))?;
            a.metadata("competing-loss", cfg, &serde_json::json!({ "k": r.k, "r_squared": r.r_squared }))?;
            finish(&a);
            println!("boundary fit k = {:.4}, R^2 = {:.4}", r.k, r.r_squared);
        }
        Experiment::Perturb => {
            let t = cfg.gate_time()?;
            let pc = &x.perturb;
            let problem = settings.problem(t, n, ErrorEnsemble::amplitude_triple(pc.eta)?)?;
            let scp = cfg.scp();
            let mut rows = Vec::new();
            for i in 0..pc.seeds as u64 {
                let seed = cfg.run.seed.wrapping_add(i);
                let start = sample_start(n, cfg.signal.slew, seed)?;
                let rec = run_scp(&problem, &rqoc::scp::ScpConfig { rng_seed: seed, ..scp.clone() }, &start)?;
                let out = perturb_reoptimize(&problem, &scp, &rec, &pc.settings, seed)?;
                for (k, c) in out.cycles.iter().enumerate() {
                    rows.push(vec![
                        seed.to_string(),
                        k.to_string(),
                        fmt(out.initial_infidelity),
                        c.rounds.to_string(),
                        fmt(c.perturbed_infidelity),
                        fmt(c.reoptimized_infidelity),
                        fmt(c.distance),
                        fmt(out.best_infidelity()),
                    ]);
                }
            }
            let mut a = artifacts(cfg, "perturb")?;
            a.table(
                "",
                &["seed", "cycle", "initial_infidelity", "rounds", "perturbed_infidelity", "reoptimized_infidelity", "distance", "best_infidelity"],
                &rows,
            )?;
            a.metadata("perturb", cfg, &serde_json::json!({}))?;
            finish(&a);
        }
        Experiment::Difficulty => {
            let t = cfg.gate_time()?;
            let d = &x.difficulty;
            let (rows, _) = difficulty_campaign(&settings, t, n, &d.etas, &d.d_levels)?;
            let mut a = artifacts(cfg, "difficulty")?;
            let mut header = vec!["eta".to_string(), "records".into(), "best_infidelity".into()];
            header.extend(d.d_levels.iter().map(|l| format!("q_d{l}")));
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let mut v = vec![fmt(r.condition), r.n_records.to_string(), fmt(r.best_infidelity)];
                    v.extend(r.q.iter().map(|q| fmt(q.1)));
                    v
                })
                .collect();
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            a.table("", &header, &table)?;
            a.metadata("difficulty", cfg, &rows)?;
            finish(&a);
            for r in &rows {
                println!("eta = {}: Q = {:?}", r.condition, r.q);
            }
        }
        Experiment::Objectives => {
            let o = &x.objectives;
            let times: Vec<f64> = o.gate_times_ns.iter().map(|&t| ns(t)).collect();
            let comps = compare_objectives(&settings, &times, n, o.eta)?;
            let mut rows = Vec::new();
            for c in &comps {
                for r in c.worst_case.iter().chain(&c.average_case) {
                    rows.push(vec![
                        fmt(to_ns(c.gate_time)),
                        format!("{:?}", r.mode),
                        r.seed.to_string(),
                        fmt(r.worst_case_fidelity),
                        fmt(r.average_fidelity),
                        r.iterations.to_string(),
                        fmt(r.seconds),
                    ]);
                }
            }
            let mut a = artifacts(cfg, "objectives")?;
            a.table("", &["gate_time_ns", "mode", "seed", "worst_case_fidelity", "average_fidelity", "iterations", "seconds"], &rows)?;
            let ratios: Vec<f64> = comps.iter().map(|c| c.median_runtime_ratio()).collect();
            a.metadata("objectives", cfg, &serde_json::json!({ "median_runtime_ratio": ratios }))?;
            finish(&a);
        }
        Experiment::FreqRobust => {
            let f = &x.freq_robust;
            let times: Vec<f64> = f.gate_times_ns.iter().map(|&t| ns(t)).collect();
            let rows = robust_freq_campaign(&settings, &times, n, khz_to_rad(f.freq_error_khz), f.amp_error, f.box_points)?;
            let mut a = artifacts(cfg, "freq-robust")?;
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let (fr, dr) = (r.frequency_robust, r.doubly_robust);
                    vec![fmt(to_ns(r.gate_time)), fmt(fr.ensemble), fmt(fr.grid), fmt(dr.ensemble), fmt(dr.grid)]
                })
                .collect();
            a.table(
                "",
                &["gate_time_ns", "frequency_robust_ensemble", "frequency_robust_box", "doubly_robust_ensemble", "doubly_robust_box"],
                &table,
            )?;
            a.svg("", || {
                line_chart(
                    "worst-case infidelity",
                    "gate time (ns)",
                    "infidelity",
                    &[
                        Series { label: "frequency".into(), points: rows.iter().map(|r| (to_ns(r.gate_time), r.frequency_robust.ensemble)).collect(), dashed: false },
                        Series { label: "doubly".into(), points: rows.iter().map(|r| (to_ns(r.gate_time), r.doubly_robust.ensemble)).collect(), dashed: false },
                        Series { label: "frequency (box)".into(), points: rows.iter().map(|r| (to_ns(r.gate_time), r.frequency_robust.grid)).collect(), dashed: true },
                        Series { label: "doubly (box)".into(), points: rows.iter().map(|r| (to_ns(r.gate_time), r.doubly_robust.grid)).collect(), dashed: true },
                    ],
                    true,
                )
            })?;
            a.metadata("freq-robust", cfg, &serde_json::json!({}))?;
            finish(&a);
        }
        Experiment::RbSim => {
            let rb = &x.rb;
            let pulse = pulse_or_optimize(cfg, rb.pulse.as_deref())?;
            let lind = rb.t1_us.map(|t| LindbladConfig::relaxation(us(t))).transpose()?;
            let table = CliffordDecomposition::build();
            let target = x_half_pi_target(model.num_levels());
            let mut rows = Vec::new();
            for (i, &d) in rb.scales.iter().enumerate() {
                let inj = ErrorInjection { global_scale: d, channel_imbalance: rb.channel_imbalance, phase_error: rb.phase_error };
                let gates = GateSet::from_pulse(&model, &pulse, &inj, lind.as_ref())?;
                let conf = RbConfig {
                    lengths: rb.lengths.clone(),
                    sequences_per_length: rb.sequences_per_length,
                    shots: rb.shots,
                    seed: cfg.run.seed.wrapping_add(i as u64),
                };
                let res = simulate_rb(&gates, &table, &conf)?;
                let coherent = 1.0 - evaluate_samples(&model, &inj.distort(&pulse), &[ErrorSample::ZERO], &target)?[0];
                rows.push(vec![fmt(d), fmt(res.epg), fmt(coherent), fmt(res.fit.a), fmt(res.fit.p), fmt(res.fit.b)]);
                println!("d = {d}: EPG = {:.4e} (gate infidelity {:.4e})", res.epg, coherent);
            }
            let mut a = artifacts(cfg, "rb-sim")?;
            a.table("", &["scale", "epg", "gate_infidelity", "fit_a", "fit_p", "fit_b"], &rows)?;
            a.metadata("rb-sim", cfg, &serde_json::json!({}))?;
            finish(&a);
        }
        Experiment::ApeSim => {
            let ape = &x.ape;
            let pulse = pulse_or_optimize(cfg, ape.pulse.as_deref())?;
            let gates = GateSet::from_pulse(&model, &pulse, &ape.injection(), None)?;
            let corr = ape.corrections();
            let res = simulate_ape(&gates, &ape.repetitions, &corr)?;
            let mut header = vec!["correction".to_string()];
            header.extend(ape.repetitions.iter().map(|r| format!("n{r}")));
            let rows: Vec<Vec<String>> = corr
                .iter()
                .enumerate()
                .map(|(j, c)| std::iter::once(fmt(*c)).chain(res.populations.iter().map(|p| fmt(p[j]))).collect())
                .collect();
            let mut a = artifacts(cfg, "ape-sim")?;
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            a.table("", &header, &rows)?;
            a.metadata("ape-sim", cfg, &serde_json::json!({ "best_correction": res.best_correction }))?;
            finish(&a);
            println!("best correction: {:.6} rad", res.best_correction);
        }
    }
    Ok(())
}
