use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;
use strip_dirac::conformal::{self, Biholomorphism};
use strip_dirac::curve::{BaseCurve, TubularMap};
use strip_dirac::effective::{self, EffectiveOptions, EffectiveSpectrumReport, GapEntry};
use strip_dirac::fiber::{self, A0Report, DispersionCurve, ThresholdReport};
use strip_dirac::potential::{self, MinimumReport, PotentialField};

use crate::config::{ExperimentConfig, HALFLINE_BASIS};
use crate::svg::{Band, Plot, Series};
use crate::CliError;

/// Grid spacing used when `n_s`/`n_t` are absent, relative to `δ`.
const DEFAULT_SPACING: f64 = 0.05;

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub step: String,
    pub seconds: f64,
}

/// Shared state for one invocation.
pub struct Run {
    pub cfg: ExperimentConfig,
    pub out: PathBuf,
    pub warnings: Vec<String>,
    pub outputs: Vec<String>,
    pub timings: Vec<Timing>,
}

impl Run {
    pub fn new(cfg: ExperimentConfig, out: PathBuf) -> Result<Run, CliError> {
        std::fs::create_dir_all(&out)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out.display())))?;
        Ok(Run {
            cfg,
            out,
            warnings: Vec::new(),
            outputs: Vec::new(),
            timings: Vec::new(),
        })
    }

    fn timed<T>(
        &mut self,
        step: &str,
        f: impl FnOnce(&mut Run) -> Result<T, CliError>,
    ) -> Result<T, CliError> {
        let start = Instant::now();
        let r = f(self);
        self.timings.push(Timing {
            step: step.into(),
            seconds: start.elapsed().as_secs_f64(),
        });
        r
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let p = self.path(name);
        std::fs::write(&p, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display())))?;
        self.outputs.push(name.into());
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, v: &Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(v).expect("json");
        text.push('\n');
        self.write_text(name, &text)
    }

    fn write_csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: Vec<Vec<String>>,
    ) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(header).map_err(io)?;
        for r in rows {
            w.write_record(&r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        self.write_text(name, &String::from_utf8(bytes).expect("utf8"))
    }

    fn tubular_map(&self) -> Result<TubularMap, CliError> {
        let curve = BaseCurve::build(self.cfg.curvature, self.cfg.tolerances.curve)?;
        Ok(TubularMap::new(curve, self.cfg.delta)?)
    }

    fn grid_sizes(&self, l: f64) -> (usize, usize) {
        let h = DEFAULT_SPACING * self.cfg.delta;
        let ns = self
            .cfg
            .grid
            .n_s
            .unwrap_or(((2.0 * l / h).round() as usize) + 1);
        let nt = self
            .cfg
            .grid
            .n_t
            .unwrap_or(((2.0 * self.cfg.delta / h).round() as usize) + 1);
        (ns, nt)
    }

    fn potential_field(&mut self, map: &TubularMap) -> Result<PotentialField, CliError> {
        let l = self
            .cfg
            .truncation
            .l
            .unwrap_or_else(|| potential::default_truncation(map));
        let (ns, nt) = self.grid_sizes(l);
        Ok(PotentialField::solve(
            map,
            l,
            ns,
            nt,
            self.cfg.tolerances.poisson_residual,
        )?)
    }

    fn biholomorphism(&mut self, map: &TubularMap) -> Result<Biholomorphism, CliError> {
        let l = self
            .cfg
            .truncation
            .l
            .unwrap_or_else(|| conformal::default_truncation(map));
        let (ns, nt) = self.grid_sizes(l);
        Ok(Biholomorphism::solve(map, l, ns, nt)?)
    }

    fn a0(&mut self) -> Result<A0Report, CliError> {
        let t = self.cfg.t_halfline();
        self.timed("a0", |_| Ok(fiber::halfline_a0(t, HALFLINE_BASIS)?))
    }

    fn thresholds_for(&mut self, a0: f64) -> Result<Vec<ThresholdReport>, CliError> {
        let delta = self.cfg.delta;
        let hs = self.cfg.h.clone();
        self.timed("thresholds", |_| {
            Ok(hs
                .par_iter()
                .map(|&h| ThresholdReport::compute(h, delta, a0))
                .collect::<Result<Vec<_>, _>>()?)
        })
    }
}

fn thresholds_json(a0: &A0Report, reports: &[ThresholdReport]) -> Value {
    let entries: Vec<Value> = reports
        .iter()
        .map(|r| {
            json!({
                "h": r.h,
                "lambda_ess_pos": r.lambda_plus,
                "ln_lambda_ess_pos": r.lambda_plus.ln(),
                "xi_pos": r.xi_plus,
                "lambda_ess_neg": r.lambda_minus,
                "xi_neg": r.xi_minus,
                "xi_neg_predicted": r.xi_minus_predicted,
                "nu1_at_zero": r.nu1_at_zero,
                "ratios": {
                    "pos": r.ratio_plus,
                    "neg_over_sqrt_h": r.ratio_minus,
                    "neg_over_sqrt_h_minus_a0": r.ratio_minus - r.a0,
                },
            })
        })
        .collect();
    json!({
        "delta": reports.first().map(|r| r.delta),
        "a0": a0.a0,
        "a0_report": a0,
        "entries": entries,
        "scale": {
            "lambda_ess_pos": "linear",
            "ln_lambda_ess_pos": "natural log",
            "lambda_ess_neg": "linear, magnitude of the negative threshold",
            "ratios.pos": "lambda_ess_pos / nu1_at_zero",
            "ratios.neg_over_sqrt_h": "lambda_ess_neg / sqrt(h)",
        },
    })
}

pub fn cmd_a0(run: &mut Run) -> Result<Value, CliError> {
    let r = run.a0()?;
    let v = json!({ "a0": r.a0, "report": r, "scale": { "a0": "linear" } });
    run.write_json("a0.json", &v)?;
    Ok(v)
}

pub fn cmd_thresholds(run: &mut Run) -> Result<Value, CliError> {
    let a0 = run.a0()?;
    let reps = run.thresholds_for(a0.a0)?;
    for r in &reps {
        if !(r.ratio_plus > 0.0 && r.ratio_plus <= 1.05) {
            run.warnings.push(format!(
                "h = {}: positive threshold ratio {} outside (0, 1.05]",
                r.h, r.ratio_plus
            ));
        }
    }
    let v = thresholds_json(&a0, &reps);
    run.write_json("thresholds.json", &v)?;
    Ok(v)
}

fn dispersion_plot(curve: &DispersionCurve, th: &ThresholdReport) -> Plot {
    let palette = [
        "#1f4e99", "#2f8f4e", "#8a3fb0", "#c06010", "#4a4a4a", "#0a8a8a",
    ];
    let mut series = Vec::new();
    let mut top: f64 = 0.0;
    for k in 0..curve.branches() {
        let color = palette[k % palette.len()];
        let pos: Vec<(f64, f64)> = curve
            .xi
            .iter()
            .zip(&curve.positive)
            .map(|(x, v)| (*x, v[k]))
            .collect();
        let neg: Vec<(f64, f64)> = curve
            .xi
            .iter()
            .zip(&curve.negative)
            .map(|(x, v)| (*x, -v[k]))
            .collect();
        top = pos.iter().chain(&neg).fold(top, |a, (_, y)| a.max(y.abs()));
        series.push(Series {
            label: format!("mu_{}^+", k + 1),
            color,
            points: pos,
        });
        series.push(Series {
            label: format!("mu_{}^-", k + 1),
            color,
            points: neg,
        });
    }
    let w = curve.xi.last().copied().unwrap_or(1.0);
    let ymax = (1.05 * top).min(8.0).max(2.0 * th.lambda_minus);
    Plot {
        title: format!(
            "Dispersion curves, delta = {}, h = {}",
            curve.delta, curve.h
        ),
        x_label: "xi".into(),
        y_label: "eigenvalue".into(),
        x_range: (-w, w),
        y_range: (-ymax, ymax),
        series,
        bands: vec![Band {
            label: "spectral gap".into(),
            lo: -th.lambda_minus,
            hi: th.lambda_plus,
        }],
        hlines: vec![
            (
                th.lambda_plus,
                format!("lambda_ess^+ = {:e}", th.lambda_plus),
            ),
            (
                -th.lambda_minus,
                format!("-lambda_ess^- = {:e}", -th.lambda_minus),
            ),
        ],
    }
}

fn h_tag(h: f64) -> String {
    format!("{h}")
}

pub fn cmd_dispersion(run: &mut Run) -> Result<Value, CliError> {
    let a0 = run.a0()?;
    let reps = run.thresholds_for(a0.a0)?;
    let mut summary = Vec::new();
    for (h, th) in run.cfg.h.clone().into_iter().zip(&reps) {
        let (delta, d) = (run.cfg.delta, run.cfg.dispersion.clone());
        let grid = run.cfg.grid.n_fiber;
        let curve = run.timed(&format!("dispersion h={h}"), |_| {
            Ok(fiber::dispersion_sweep_with_grid(
                h, delta, d.window, d.branches, d.points, grid,
            )?)
        })?;
        let even = curve.evenness_defect();
        if even > 1e-8 {
            run.warnings
                .push(format!("h = {h}: evenness defect {even:e}"));
        }
        let kb = curve.branches();
        let header: Vec<String> = std::iter::once("xi".to_string())
            .chain((1..=kb).map(|k| format!("neg_{k}")))
            .chain((1..=kb).map(|k| format!("pos_{k}")))
            .collect();
        let rows: Vec<Vec<String>> = curve
            .xi
            .iter()
            .enumerate()
            .map(|(i, x)| {
                std::iter::once(x.to_string())
                    .chain(curve.negative[i].iter().map(|v| (-v).to_string()))
                    .chain(curve.positive[i].iter().map(|v| v.to_string()))
                    .collect()
            })
            .collect();
        let tag = h_tag(h);
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        run.write_csv(&format!("dispersion_h{tag}.csv"), &header, rows)?;
        run.write_text(
            &format!("dispersion_h{tag}.svg"),
            &dispersion_plot(&curve, th).render(),
        )?;
        let (ip, mp) = curve.branch_min(fiber::Sign::Plus);
        let (im, mm) = curve.branch_min(fiber::Sign::Minus);
        summary.push(json!({
            "h": h,
            "branches_per_sign": curve.branches(),
            "points": curve.xi.len(),
            "evenness_defect": even,
            "sampled_min_pos": { "xi": curve.xi[ip], "value": mp },
            "sampled_min_neg": { "xi": curve.xi[im], "value": -mm },
            "lambda_ess_pos": th.lambda_plus,
            "lambda_ess_neg": th.lambda_minus,
            "gap": [-th.lambda_minus, th.lambda_plus],
        }));
    }
    let v = json!({
        "delta": run.cfg.delta,
        "a0": a0.a0,
        "curves": summary,
        "scale": { "eigenvalue": "linear, signed", "lambda_ess_neg": "linear, magnitude" },
    });
    run.write_json("dispersion.json", &v)?;
    Ok(v)
}

fn minimum_json(m: &MinimumReport, delta: f64) -> Value {
    json!({
        "s_min": m.s_min,
        "t_min": m.t_min,
        "x_min": m.x_min,
        "phi_min": m.phi_min,
        "straight_min": -0.5 * delta * delta,
        "hessian": m.hessian,
        "a": m.a,
        "b": m.b,
        "flags": m.flags,
        "assumptions_hold": m.flags.all(),
    })
}

pub fn cmd_potential(run: &mut Run) -> Result<Value, CliError> {
    let map = run.tubular_map()?;
    let field = run.timed("potential", |r| r.potential_field(&map))?;
    let min = field.locate_minimum()?;
    let sens = run.timed("truncation sensitivity", |_| {
        Ok(field.truncation_sensitivity()?)
    })?;
    if sens > run.cfg.tolerances.truncation_sensitivity {
        run.warnings
            .push(format!("phi_min moves by {sens:e} when L is doubled"));
    }
    if !min.flags.all() {
        run.warnings.push(format!("minimum flags: {:?}", min.flags));
    }
    let bnd = field.boundary_normal_derivative();
    let delta = run.cfg.delta;
    let m = minimum_json(&min, delta);
    let v = json!({
        "delta": delta,
        "l": field.l,
        "n_s": field.grid.ns,
        "n_t": field.grid.nt,
        "residual": field.residual,
        "minimum": m,
        "boundary_normal_derivative": bnd,
        "truncation_sensitivity": sens,
        "scale": { "phi": "linear", "straight_min": "-delta^2/2" },
    });
    let n = 401;
    let rows: Vec<Vec<String>> = (0..n)
        .map(|i| {
            let s = -field.l + 2.0 * field.l * i as f64 / (n - 1) as f64;
            vec![
                s.to_string(),
                field.value(s, min.t_min).to_string(),
                potential::phi0(min.t_min, delta).to_string(),
            ]
        })
        .collect();
    run.write_csv(
        "potential_slice.csv",
        &["s", "phi_at_t_min", "phi0_at_t_min"],
        rows,
    )?;
    let g = &field.grid;
    let rows: Vec<Vec<String>> = (0..g.ns)
        .flat_map(|i| {
            (0..g.nt).map(move |j| {
                vec![
                    g.s(i).to_string(),
                    g.t(j).to_string(),
                    g.at(i, j).to_string(),
                ]
            })
        })
        .collect();
    run.write_csv("potential_grid.csv", &["s", "t", "phi"], rows)?;
    run.write_json("potential.json", &v)?;
    Ok(v)
}

fn conformal_json(bih: &Biholomorphism, base: (f64, f64)) -> Result<Value, CliError> {
    let disk = bih.disk_map(base.0, base.1)?;
    let (dmax, dinv) = bih.derivative_bounds();
    Ok(json!({
        "l": bih.l,
        "n_s": bih.beta.ns,
        "n_t": bih.beta.nt,
        "cr_residual": bih.cr_residual(),
        "loop_residual": bih.loop_residual,
        "solve_residual": bih.solve_residual,
        "identity_deviation": bih.identity_deviation(),
        "identity_deviation_c1_over_delta": bih.identity_deviation().c1() / bih.delta(),
        "derivative_sup": dmax,
        "inverse_derivative_sup": dinv,
        "disk_map": {
            "s": disk.s,
            "t": disk.t,
            "w0": [disk.w0.re, disk.w0.im],
            "g_prime_abs": disk.g_prime_abs,
            "chain": disk.chain,
        },
        "scale": { "all": "linear" },
    }))
}

pub fn cmd_conformal(run: &mut Run) -> Result<Value, CliError> {
    let map = run.tubular_map()?;
    let bih = run.timed("conformal", |r| r.biholomorphism(&map))?;
    let base = if run.cfg.curvature.is_zero() {
        (0.0, 0.0)
    } else {
        let field = run.timed("potential", |r| r.potential_field(&map))?;
        let m = field.locate_minimum()?;
        (m.s_min, m.t_min)
    };
    let v = conformal_json(&bih, base)?;
    run.write_json("conformal.json", &v)?;
    Ok(v)
}

fn ratio_plot(rep: &EffectiveSpectrumReport) -> Plot {
    let palette = ["#1f4e99", "#c06010", "#2f8f4e", "#8a3fb0"];
    let hs: Vec<f64> = rep.entries.iter().map(|e| e.h).collect();
    let k_max = rep.d_b.len();
    let mut lo: f64 = 1.0;
    let mut hi: f64 = 1.0;
    let series = (0..k_max)
        .map(|k| {
            let pts: Vec<(f64, f64)> = rep.entries.iter().map(|e| (e.h, e.ratio[k])).collect();
            for (_, r) in &pts {
                lo = lo.min(*r);
                hi = hi.max(*r);
            }
            Series {
                label: format!("r_{}(h)", k + 1),
                color: palette[k % palette.len()],
                points: pts,
            }
        })
        .collect();
    let pad = 0.1 * (hi - lo).max(0.05);
    let (x0, x1) = (0.0, hs.iter().copied().fold(0.0, f64::max) * 1.1);
    Plot {
        title: "Effective eigenvalue ratios".into(),
        x_label: "h".into(),
        y_label: "lambda_k^eff / asymptote".into(),
        x_range: (x0, x1),
        y_range: (lo - pad, hi + pad),
        series,
        bands: vec![],
        hlines: vec![(1.0, "1".into())],
    }
}

pub struct EffectiveOutcome {
    pub report: EffectiveSpectrumReport,
    pub gap: Option<Vec<GapEntry>>,
}

fn effective_inner(
    run: &mut Run,
    field: &PotentialField,
    bih: Arc<Biholomorphism>,
) -> Result<EffectiveOutcome, CliError> {
    let opts = EffectiveOptions {
        k_max: run.cfg.effective.k_max,
        order: run.cfg.m_hardy(),
    };
    let hs = run.cfg.h.clone();
    let report = run.timed("effective", |_| {
        Ok(effective::lambda_eff(field, bih, &hs, opts)?)
    })?;
    for e in &report.entries {
        if e.truncation_change > run.cfg.tolerances.basis_truncation {
            run.warnings.push(format!(
                "h = {}: ln lambda moves by {:e} between M and M + 4",
                e.h, e.truncation_change
            ));
        }
    }
    let gap = if run.cfg.effective.gap {
        let delta = run.cfg.delta;
        let th = run.timed("positive thresholds", |_| {
            Ok(hs
                .par_iter()
                .map(|&h| fiber::threshold_pos(h, delta).map(|(l, _)| (h, l.ln())))
                .collect::<Result<Vec<_>, _>>()?)
        })?;
        Some(effective::gap_report(&report, &th)?)
    } else {
        None
    };
    Ok(EffectiveOutcome { report, gap })
}

fn effective_json(o: &EffectiveOutcome) -> Value {
    json!({
        "report": o.report,
        "gap": o.gap,
        "in_gap_count_at_smallest_h": o.gap.as_ref().and_then(|g| g.last().map(|e| e.count)),
        "scale": {
            "log_lambda": "natural log of lambda_k^eff",
            "log_asymptote": "natural log of h^(1-k) e^(2 phi_min/h) (d_H^k/d_B^k)^2",
            "ratio": "linear, lambda_k^eff / asymptote",
            "log_lambda_ess_plus": "natural log",
            "log_margins": "ln lambda_ess^+ - ln lambda_k^eff",
        },
    })
}

pub fn cmd_effective(run: &mut Run) -> Result<Value, CliError> {
    let map = run.tubular_map()?;
    let field = run.timed("potential", |r| r.potential_field(&map))?;
    field.locate_minimum()?.require()?;
    let bih = Arc::new(run.timed("conformal", |r| r.biholomorphism(&map))?);
    let o = effective_inner(run, &field, bih)?;
    let mut rows = Vec::new();
    for e in &o.report.entries {
        for k in 0..e.log_lambda.len() {
            rows.push(vec![
                e.h.to_string(),
                (k + 1).to_string(),
                e.log_lambda[k].to_string(),
                e.log_asymptote[k].to_string(),
                e.ratio[k].to_string(),
                e.log_lambda_refined[k].to_string(),
            ]);
        }
    }
    run.write_csv(
        "effective.csv",
        &[
            "h",
            "k",
            "ln_lambda_eff",
            "ln_asymptote",
            "ratio",
            "ln_lambda_eff_refined",
        ],
        rows,
    )?;
    run.write_text("effective_ratios.svg", &ratio_plot(&o.report).render())?;
    let v = effective_json(&o);
    run.write_json("effective.json", &v)?;
    Ok(v)
}

pub fn cmd_report(run: &mut Run) -> Result<Value, CliError> {
    let map = run.tubular_map()?;
    let field = run.timed("potential", |r| r.potential_field(&map))?;
    let min = field.locate_minimum()?;
    let sens = run.timed("truncation sensitivity", |_| {
        Ok(field.truncation_sensitivity()?)
    })?;
    if sens > run.cfg.tolerances.truncation_sensitivity {
        run.warnings
            .push(format!("phi_min moves by {sens:e} when L is doubled"));
    }
    let pot = minimum_json(&min, run.cfg.delta);
    let potential =
        json!({ "residual": field.residual, "truncation_sensitivity": sens, "minimum": pot });
    let bih = Arc::new(run.timed("conformal", |r| r.biholomorphism(&map))?);
    let base = if min.flags.all() {
        (min.s_min, min.t_min)
    } else {
        (0.0, 0.0)
    };
    let conformal = conformal_json(&bih, base)?;
    let a0 = run.a0()?;
    let thresholds = thresholds_json(&a0, &run.thresholds_for(a0.a0)?);
    min.require()?;
    let effective = effective_json(&effective_inner(run, &field, bih)?);
    let v = json!({
        "delta": run.cfg.delta,
        "potential": potential,
        "conformal": conformal,
        "thresholds": thresholds,
        "effective": effective,
        "warnings": run.warnings,
    });
    run.write_json("report.json", &v)?;
    Ok(v)
}

pub fn write_manifest(
    run: &mut Run,
    command: &str,
    workers: usize,
    status: &str,
) -> Result<(), CliError> {
    let v = json!({
        "command": command,
        "status": status,
        "config_hash": run.cfg.hash(),
        "versions": {
            "strip-dirac": strip_dirac::VERSION,
            "strip-dirac-cli": env!("CARGO_PKG_VERSION"),
        },
        "workers": workers,
        "timings": run.timings,
        "warnings": run.warnings,
        "outputs": run.outputs,
    });
    let mut text = serde_json::to_string_pretty(&v).expect("json");
    text.push('\n');
    let p = run.out.join("manifest.json");
    std::fs::write(&p, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display())))
}

pub fn output_dir(cfg: &ExperimentConfig, flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}
