//! The five commands.

use crate::config::{Command, ProfileSpec, RunConfig};
use crate::output::{num, out_path, write_atomic, Csv};
use crate::plot::{ticks, Plot, Series};
use crate::CliError;
use num_complex::Complex64 as C64;
use serde_json::json;
use stabfem::assembly::{closure_by_name, StabilityParams};
use stabfem::mesh::build_mesh;
use stabfem::oracle::{os_spectrum_collocation, CollocationConfig};
use stabfem::profiles::{profile_by_name, FlowProfile, Shifted, Tabulated};
use stabfem::solver::{evaluate_mode, filter_modes, leading_mode, path_by_name, Discretization, ModeSet, Resolve, SolveOptions};
use stabfem::sweep::{amplification_contours, grid_sweep, neutral_curve, refine_critical, CriticalOutcome, NeutralConfig};
use std::sync::Arc;

/// Sample points of the mode files.
pub const MODE_SAMPLES: usize = 401;

pub fn build_profile(cfg: &RunConfig) -> Result<Arc<dyn FlowProfile>, CliError> {
    let base = match &cfg.profile {
        ProfileSpec::Named(name) => profile_by_name(name, cfg.a),
        ProfileSpec::File(path) => Tabulated::from_csv_file(path, cfg.a).map(|p| Arc::new(p) as Arc<dyn FlowProfile>),
    }
    .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(if cfg.shift != 0.0 { Arc::new(Shifted::new(base, cfg.shift)) } else { base })
}

pub fn build_discretization(cfg: &RunConfig) -> Result<Discretization, CliError> {
    let mesh = build_mesh(cfg.a, cfg.elements, cfg.grading).map_err(|e| CliError::Usage(e.to_string()))?;
    Discretization::new(mesh, build_profile(cfg)?, cfg.quad_points).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn solve_options(cfg: &RunConfig) -> Result<SolveOptions, CliError> {
    Ok(SolveOptions {
        path: path_by_name(&cfg.path).map_err(|e| CliError::Usage(e.to_string()))?,
        closure: closure_by_name(&cfg.closure).map_err(|e| CliError::Usage(e.to_string()))?,
        quad_points: cfg.quad_points,
        ..Default::default()
    })
}

fn at(re: f64, alpha: f64, e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(format!("solve failed at Re = {re}, alpha = {alpha}: {e}"))
}

fn solve_at(disc: &Discretization, re: f64, alpha: f64, opts: &SolveOptions) -> Result<ModeSet, CliError> {
    let params = StabilityParams::new(re, alpha).map_err(|e| CliError::Usage(e.to_string()))?;
    let set = disc.solve(params, opts).map_err(|e| at(re, alpha, e))?;
    Ok(filter_modes(set, &opts.filter))
}

fn c_json(c: C64) -> serde_json::Value {
    json!([c.re, c.im])
}

fn write_svg(cfg: &RunConfig, name: &str, plot: Plot) -> Result<(), CliError> {
    write_atomic(&out_path(&cfg.out_dir, name), plot.render().as_bytes())
}

fn write_run_json(cfg: &RunConfig, results: serde_json::Value) -> Result<(), CliError> {
    let doc = json!({ "config": cfg, "results": results });
    let text = serde_json::to_string_pretty(&doc).expect("config serializes") + "\n";
    write_atomic(&out_path(&cfg.out_dir, "run.json"), text.as_bytes())
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let disc = build_discretization(cfg)?;
    let opts = solve_options(cfg)?;
    match cfg.command {
        Command::Solve => solve(cfg, &disc, &opts),
        Command::Modes => modes(cfg, &disc, &opts),
        Command::Sweep => sweep(cfg, &disc, &opts),
        Command::Neutral => neutral(cfg, &disc, &opts),
        Command::Validate => validate(cfg, &disc, &opts),
    }
}

fn solve(cfg: &RunConfig, disc: &Discretization, opts: &SolveOptions) -> Result<(), CliError> {
    let (re, alpha) = (cfg.re[0], cfg.alpha[0]);
    let set = solve_at(disc, re, alpha, opts)?;
    let mut csv = Csv::new(&["rank", "c_re", "c_im", "residual"]);
    for (k, m) in set.modes.iter().enumerate() {
        csv.row(&[k.to_string(), num(m.c.re), num(m.c.im), num(m.residual())]);
    }
    csv.write(&out_path(&cfg.out_dir, "spectrum.csv"))?;
    if cfg.plots {
        let pts = |it: &mut dyn Iterator<Item = C64>| it.map(|c| (c.re, c.im)).collect::<Vec<_>>();
        let plot = Plot::new(format!("Spectrum, Re = {re}, alpha = {alpha}"), "c_r", "c_i")
            .with(Series::markers("physical", pts(&mut set.modes.iter().map(|m| m.c))))
            .with(Series::markers("rejected", pts(&mut set.rejected.iter().map(|r| r.mode.c))));
        write_svg(cfg, "spectrum.svg", plot)?;
    }
    match set.leading() {
        Some(m) => println!("leading c = {} {:+}i (residual {:.2e})", m.c.re, m.c.im, m.residual()),
        None => println!("no mode passed the filter"),
    }
    write_run_json(
        cfg,
        json!({
            "leading": set.leading().map(|m| c_json(m.c)),
            "physical": set.modes.len(),
            "rejected": set.rejected.len(),
            "infinite": set.infinite,
        }),
    )
}

fn modes(cfg: &RunConfig, disc: &Discretization, opts: &SolveOptions) -> Result<(), CliError> {
    let (re, alpha) = (cfg.re[0], cfg.alpha[0]);
    let opts = SolveOptions { resolve: Resolve::UntilAccepted(cfg.modes), ..opts.clone() };
    let set = solve_at(disc, re, alpha, &opts)?;
    let a = disc.mesh.a();
    let mut written = Vec::new();
    for (k, m) in set.modes.iter().take(cfg.modes).enumerate() {
        let mut csv = Csv::new(&["y", "u_re", "u_im", "v_re", "v_im", "p_re", "p_im"]);
        let mut curves = vec![Vec::new(); 4];
        for i in 0..MODE_SAMPLES {
            let y = if i + 1 == MODE_SAMPLES { a } else { a * i as f64 / (MODE_SAMPLES - 1) as f64 };
            let (u, v, p) = evaluate_mode(m, &disc.mesh, y).map_err(|e| at(re, alpha, e))?;
            csv.row(&[num(y), num(u.re), num(u.im), num(v.re), num(v.im), num(p.re), num(p.im)]);
            for (c, val) in curves.iter_mut().zip([u.re, u.im, v.re, v.im]) {
                c.push((y, val));
            }
        }
        csv.write(&out_path(&cfg.out_dir, &format!("mode{k}.csv")))?;
        if cfg.plots {
            let mut plot = Plot::new(format!("Mode {k}, c = {:.6} {:+.6}i", m.c.re, m.c.im), "y", "amplitude");
            for (label, pts) in ["u_r", "u_i", "v_r", "v_i"].into_iter().zip(curves) {
                plot = plot.with(Series::line(label, pts));
            }
            write_svg(cfg, &format!("mode{k}.svg"), plot)?;
        }
        println!("mode{k}: c = {} {:+}i", m.c.re, m.c.im);
        written.push(json!({ "c": c_json(m.c), "residual": m.residual(), "divergence": m.divergence }));
    }
    if written.len() < cfg.modes {
        eprintln!("note: only {} of {} requested modes passed the filter", written.len(), cfg.modes);
    }
    write_run_json(cfg, json!({ "modes": written }))
}

fn sweep(cfg: &RunConfig, disc: &Discretization, opts: &SolveOptions) -> Result<(), CliError> {
    let opts = SolveOptions { resolve: Resolve::UntilAccepted(1), ..opts.clone() };
    let grid = grid_sweep(disc, &cfg.re, &cfg.alpha, &opts).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut csv = Csv::new(&["re", "alpha", "c_re", "c_im", "converged"]);
    for cell in &grid.cells {
        let c = cell.c.unwrap_or(C64::new(f64::NAN, f64::NAN));
        csv.row(&[num(cell.re), num(cell.alpha), num(c.re), num(c.im), cell.converged.to_string()]);
    }
    csv.write(&out_path(&cfg.out_dir, "grid.csv"))?;
    if cfg.plots {
        let ci: Vec<f64> = grid.cells.iter().filter_map(|c| c.c.map(|c| c.im)).collect();
        let (lo, hi) = ci.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let levels = if lo < hi { ticks(lo, hi) } else { Vec::new() };
        let mut plot = Plot::new("Contours of c_i", "Re", "alpha");
        for contour in amplification_contours(&grid, &levels) {
            if !contour.polylines.is_empty() {
                plot = plot.with(Series {
                    label: format!("c_i = {:.3e}", contour.level),
                    parts: contour.polylines,
                    style: crate::plot::Style::Line,
                });
            }
        }
        let pts = grid.cells.iter().map(|c| (c.re, c.alpha)).collect();
        write_svg(cfg, "grid.svg", plot.with(Series::markers("grid", pts)))?;
    }
    let failed: Vec<String> = grid
        .cells
        .iter()
        .filter(|c| c.failed)
        .map(|c| format!("(Re = {}, alpha = {}): {}", c.re, c.alpha, c.note.as_deref().unwrap_or("")))
        .collect();
    let unconverged = grid.cells.iter().filter(|c| !c.converged).count();
    write_run_json(cfg, json!({ "cells": grid.cells.len(), "unconverged": unconverged, "failed": failed }))?;
    println!("{} cells, {} without a physical mode", grid.cells.len(), unconverged);
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("{} cells failed: {}", failed.len(), failed.join("; "))))
    }
}

fn neutral(cfg: &RunConfig, disc: &Discretization, opts: &SolveOptions) -> Result<(), CliError> {
    let ncfg = NeutralConfig {
        alpha_lo: cfg.alpha_lo.expect("validated"),
        alpha_hi: cfg.alpha_hi.expect("validated"),
        tol_neutral: cfg.tol_neutral,
        ..Default::default()
    };
    let usage = |e: stabfem::Error| CliError::Usage(e.to_string());
    let mut curve = neutral_curve(disc, &cfg.re, &ncfg, opts).map_err(usage)?;
    let critical = if cfg.refine_critical {
        Some(refine_critical(disc, &mut curve, &cfg.re, &ncfg, opts).map_err(|e| CliError::Numerical(format!("critical point search failed: {e}")))?)
    } else {
        None
    };
    let mut csv = Csv::new(&["re", "alpha", "c_r"]);
    for p in &curve.points {
        csv.row(&[num(p.re), num(p.alpha), num(p.c.re)]);
    }
    csv.write(&out_path(&cfg.out_dir, "neutral.csv"))?;
    if cfg.plots {
        let mut plot = Plot::new("Neutral curve", "Re", "alpha")
            .with(Series::markers("c_i = 0", curve.points.iter().map(|p| (p.re, p.alpha)).collect()));
        if let Some(CriticalOutcome::Found(p)) = &critical {
            plot = plot.with(Series::markers("critical", vec![(p.re, p.alpha)]));
        }
        write_svg(cfg, "neutral.svg", plot)?;
    }
    for d in &curve.diagnostics {
        eprintln!("note: Re = {}: {}", d.re, d.message);
    }
    match curve.min_re_point() {
        Some(p) => println!("minimum Re = {}, alpha = {}, c_r = {}", p.re, p.alpha, p.c.re),
        None => println!("no neutral points found"),
    }
    let critical_json = match &critical {
        Some(CriticalOutcome::Found(p)) => json!({ "re": p.re, "alpha": p.alpha, "c": c_json(p.c) }),
        Some(CriticalOutcome::NotFound { reason }) => json!({ "not_found": reason }),
        None => serde_json::Value::Null,
    };
    write_run_json(
        cfg,
        json!({
            "points": curve.points.len(),
            "critical": critical_json,
            "diagnostics": curve.diagnostics.iter().map(|d| json!({ "re": d.re, "message": d.message })).collect::<Vec<_>>(),
        }),
    )
}

fn validate(cfg: &RunConfig, disc: &Discretization, opts: &SolveOptions) -> Result<(), CliError> {
    let mut csv = Csv::new(&["re", "alpha", "fem_re", "fem_im", "oracle_re", "oracle_im", "difference", "oracle_converged", "pass"]);
    println!("{:>10} {:>6} {:>26} {:>26} {:>10} result", "Re", "alpha", "FEM c", "oracle c", "diff");
    let mut failures = Vec::new();
    for &re in &cfg.re {
        for &alpha in &cfg.alpha {
            let params = StabilityParams::new(re, alpha).map_err(|e| CliError::Usage(e.to_string()))?;
            let fem = leading_mode(disc, params, opts).map_err(|e| at(re, alpha, e))?.leading().map(|m| m.c);
            let oracle = os_spectrum_collocation(&CollocationConfig {
                m: cfg.oracle_modes,
                re,
                alpha,
                profile: disc.profile.as_ref(),
            })
            .map_err(|e| CliError::Numerical(format!("oracle failed at Re = {re}, alpha = {alpha}: {e}")))?;
            let (diff, pass) = match (fem, oracle.leading()) {
                (Some(f), Some(o)) => {
                    let d = (f.re - o.re).abs().max((f.im - o.im).abs());
                    (d, d <= cfg.tol_validate && oracle.converged)
                }
                _ => (f64::NAN, false),
            };
            let nan = C64::new(f64::NAN, f64::NAN);
            let (f, o) = (fem.unwrap_or(nan), oracle.leading().unwrap_or(nan));
            println!(
                "{:>10} {:>6} {:>12.8} {:+.8}i {:>12.8} {:+.8}i {:>10.2e} {}",
                re,
                alpha,
                f.re,
                f.im,
                o.re,
                o.im,
                diff,
                if pass { "PASS" } else { "FAIL" }
            );
            csv.row(&[
                num(re),
                num(alpha),
                num(f.re),
                num(f.im),
                num(o.re),
                num(o.im),
                num(diff),
                oracle.converged.to_string(),
                pass.to_string(),
            ]);
            if !pass {
                failures.push(format!("(Re = {re}, alpha = {alpha})"));
            }
        }
    }
    csv.write(&out_path(&cfg.out_dir, "validate.csv"))?;
    write_run_json(cfg, json!({ "cases": cfg.re.len() * cfg.alpha.len(), "failures": failures }))?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("validation failed at {}", failures.join(", "))))
    }
}
