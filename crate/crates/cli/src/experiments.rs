//! The experiments of a run.

use std::path::Path;

use anyhow::Result;
use bscatter_core::bound_lab::hilbert::{i_s_geometry_holds, K_PIECE_BOUND, K_PIECE_START};
use bscatter_core::bound_lab::schur::SATURATION_RATIO;
use bscatter_core::bound_lab::{
    envelope_fit, free_dispersive_decay, free_evolution_kernel, free_unitarity_check, o2_certificate, oscillatory_decay_probe, schur_test,
    truncated_hilbert_suite, weighted_l2_sweep, BoundEnvelope, BracketSign, DecayFit, GaussianSum, KernelSamples, LineGrid,
};
use bscatter_core::fit::loglog_fit;
use bscatter_core::geometry::logspace;
use bscatter_core::m_matrix::{
    detect_regularity, expand_m_inverse, hs_relative_difference, perturbed_resolvent, ExpansionOptions, Lambda0Policy, MExpansion, Route,
};
use bscatter_core::radial::{lap_decay, RadialChannel};
use bscatter_core::wave_operator::{
    a00_decomposed, a00_direct, intertwining_check, tilde_a_apply, HighEnergyKernels, LowEnergyKernels, LowTerm, RadialFunction,
    SpectralCutoff, WaveOperator, WavePart,
};
use bscatter_core::{bracket, split_potential, BallGrid, Error as CoreError, Point3, Potential, PotentialSplit, RadialGrid, Sign, C64};
use serde_json::{json, Value};

use crate::config::{Experiment, RunConfig};
use crate::manifest::{ConditionEntry, ConditionLog, Expect, Plot, Probe, Series};
use crate::output::{fmt_f64, write_kernel_table, write_table, KernelRow};

/// What one experiment produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub probes: Vec<Probe>,
    pub data: Value,
    pub plots: Vec<Plot>,
    pub files: Vec<String>,
}

/// Shared state of a run; the ball grid and its expansion are built once.
pub struct Context<'a> {
    pub cfg: &'a RunConfig,
    pub out: &'a Path,
    ball: Option<(BallGrid, PotentialSplit)>,
    expansion: Option<MExpansion>,
    pub conditions: Vec<ConditionLog>,
}

fn ladder() -> Vec<f64> {
    logspace(1e-3, 1e-1, 8)
}

fn options(policy: Lambda0Policy) -> ExpansionOptions {
    ExpansionOptions { lambda0: policy, ..ExpansionOptions::default() }
}

impl<'a> Context<'a> {
    pub fn new(cfg: &'a RunConfig, out: &'a Path) -> Self {
        Self { cfg, out, ball: None, expansion: None, conditions: Vec::new() }
    }

    fn ball(&mut self) -> Result<&(BallGrid, PotentialSplit)> {
        if self.ball.is_none() {
            let g = BallGrid::new(self.cfg.grid.radius, self.cfg.grid.resolution)?;
            let s = split_potential(&self.cfg.potential, &g)?;
            self.ball = Some((g, s));
        }
        Ok(self.ball.as_ref().unwrap())
    }

    fn expansion(&mut self) -> Result<&MExpansion> {
        if self.expansion.is_none() {
            let policy = self.cfg.cutoff.lambda0;
            let (g, s) = self.ball()?;
            let e = expand_m_inverse(s, g, &ladder(), options(policy))?;
            self.expansion = Some(e);
        }
        Ok(self.expansion.as_ref().unwrap())
    }

    /// The configured λ₀, or the one chosen for the ball-grid expansion.
    fn lambda0(&mut self) -> Result<f64> {
        match self.cfg.cutoff.lambda0 {
            Lambda0Policy::Fixed(l) => Ok(l),
            Lambda0Policy::Auto(_) => Ok(self.expansion()?.lambda0),
        }
    }

    fn csv(&self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
        write_table(&self.out.join(name), header, rows)?;
        Ok(name.to_string())
    }

    fn kernel_csv(&self, name: &str, rows: &[KernelRow]) -> Result<String> {
        write_kernel_table(&self.out.join(name), rows)?;
        Ok(name.to_string())
    }
}

pub fn run_experiment(ctx: &mut Context, e: Experiment) -> Result<Outcome> {
    match e {
        Experiment::Mexpand => mexpand(ctx),
        Experiment::Regularity => regularity(ctx),
        Experiment::ResolventXcheck => resolvent_xcheck(ctx),
        Experiment::Lowkernels => lowkernels(ctx),
        Experiment::Highkernels => highkernels(ctx),
        Experiment::A00 => a00(ctx),
        Experiment::Hilbert => hilbert(ctx),
        Experiment::Bounds => bounds(ctx),
        Experiment::Dispersive => dispersive(ctx),
        Experiment::Waveapply => waveapply(ctx),
    }
}

fn fitted_line(label: &str, x: &[f64], y: &[f64]) -> Series {
    let f = loglog_fit(x, y);
    Series::power_law(label, x, f.slope, f.intercept)
}

fn mexpand(ctx: &mut Context) -> Result<Outcome> {
    let tol = ctx.cfg.tolerances;
    let nodes = ctx.ball()?.0.len();
    let exp = ctx.expansion()?.clone();
    let (r, d) = (&exp.report, &exp.diagnostics);
    let probes = vec![
        Probe::new("m2_slope", "‖M₂(λ)‖ = O(λ²) near zero energy", r.m2_slope, Expect::within(tol.mexpand_slope))
            .slope(r.m2_slope)
            .params(json!({"nodes": nodes, "ladder": [d.ladder[0], d.ladder[d.ladder.len() - 1]]})),
        Probe::new("dm2_slope", "‖∂λM₂(λ)‖ = O(λ) near zero energy", d.dm2_slope, Expect::Within { lo: 0.8, hi: 1.2 }).slope(d.dm2_slope),
        Probe::new("s_lambda_independence", "the Feshbach remainder S does not depend on λ", d.s_variation, Expect::Below { bound: 1e-8 }),
        Probe::new("qd0q_limit", "M⁻¹(λ) tends to QD₀Q at zero", d.qd0q_gap, Expect::Below { bound: 1e-6 }),
    ];
    let entries: Vec<ConditionEntry> =
        d.ladder.iter().zip(&r.condition_numbers).map(|(&lambda, &condition)| ConditionEntry { lambda, condition }).collect();
    ctx.conditions.push(ConditionLog { experiment: Experiment::Mexpand, matrix: "M(λ)".into(), entries });
    let file = ctx.csv(
        "mexpand.csv",
        &["lambda", "m2_norm", "dm2_norm", "condition"],
        d.ladder.iter().enumerate().map(|(i, l)| {
            vec![
                fmt_f64(*l),
                fmt_f64(d.m2_norms[i]),
                fmt_f64(d.dm2_norms[i]),
                r.condition_numbers.get(i).map(|c| fmt_f64(*c)).unwrap_or_default(),
            ]
        }),
    )?;
    let plot = Plot::loglog("mexpand_m2.svg", "Remainder of the threshold expansion", "λ", "‖M₂(λ)‖")
        .with(Series::points("‖M₂(λ)‖", &d.ladder, &d.m2_norms))
        .with_fit(fitted_line("fit", &d.ladder, &d.m2_norms))
        .with(Series::points("‖∂λM₂(λ)‖", &d.ladder, &d.dm2_norms))
        .note(format!("fitted slope {:.4} (derivative {:.4}), λ₀ = {}", r.m2_slope, d.dm2_slope, r.lambda0));
    Ok(Outcome { probes, data: json!({"report": r, "diagnostics": d, "nodes": nodes}), plots: vec![plot], files: vec![file] })
}

fn regularity(ctx: &mut Context) -> Result<Outcome> {
    let (g, s) = ctx.ball()?;
    let reg = detect_regularity(s, g)?;
    let tol = match reg {
        bscatter_core::m_matrix::Regularity::Regular { tolerance, .. }
        | bscatter_core::m_matrix::Regularity::NotRegular { tolerance, .. } => tolerance,
    };
    let probes =
        vec![Probe::new("sigma_min", "zero energy is regular (QTQ invertible on ran Q)", reg.sigma_min(), Expect::Above { bound: tol })];
    Ok(Outcome { probes, data: json!({"regularity": reg, "nodes": g.len()}), ..Outcome::default() })
}

fn resolvent_xcheck(ctx: &mut Context) -> Result<Outcome> {
    let tol = ctx.cfg.tolerances.resolvent_xcheck;
    let (g, s) = ctx.ball()?;
    let mut probes = Vec::new();
    let mut rows = Vec::new();
    for l in [0.05, 0.7, 2.0] {
        let a = perturbed_resolvent(l, Sign::Plus, s, g, Route::Symmetric)?;
        let b = perturbed_resolvent(l, Sign::Plus, s, g, Route::Direct)?;
        let d = hs_relative_difference(&a, &b);
        probes.push(
            Probe::new(
                format!("route_difference_{l}"),
                "symmetric resolvent identity equals the Lippmann–Schwinger solve",
                d,
                Expect::Below { bound: tol },
            )
            .params(json!({"lambda": l})),
        );
        rows.push(json!({"lambda": l, "relative_frobenius": d}));
    }
    Ok(Outcome { probes, data: json!({"nodes": g.len(), "differences": rows}), ..Outcome::default() })
}

/// n points of a Fibonacci lattice on the unit sphere.
fn directions(n: usize) -> Vec<Point3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n).map(|k| Point3::spherical(1.0, 1.0 - (2 * k + 1) as f64 / n as f64, golden * k as f64)).collect()
}

/// Growth of the fitted constant over nested reaches, or the violating growth.
fn constant_growth(levels: &[Vec<(f64, f64, f64)>], family: BoundEnvelope) -> (f64, Option<f64>, bool) {
    match envelope_fit(levels, family) {
        Ok(f) => (f.growth.iter().cloned().fold(0.0, f64::max), Some(f.envelope.constant), false),
        Err(CoreError::EnvelopeViolated { growth }) => (growth, None, true),
        Err(_) => (f64::NAN, None, false),
    }
}

fn lowkernels(ctx: &mut Context) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let tol = cfg.tolerances;
    let grid = BallGrid::new(cfg.grid.radius, cfg.sweeps.low_resolution)?;
    let split = split_potential(&cfg.potential, &grid)?;
    let exp = expand_m_inverse(&split, &grid, &ladder(), options(cfg.cutoff.lambda0))?;
    let l0 = exp.lambda0;
    let k = LowEnergyKernels::new(&split, &grid, &exp, SpectralCutoff::new(l0)?)?;
    let y = Point3::new(0.3, -0.5, 0.8);
    let ry = y.norm();
    let radii = logspace(5.0 / l0, 80.0 / l0, cfg.sweeps.low_points);
    let dirs = directions(cfg.sweeps.low_directions);
    let pairs: Vec<(Point3, Point3)> = radii.iter().flat_map(|&r| dirs.iter().map(move |d| (d.scale(r), y))).collect();
    let terms = [LowTerm::Q, LowTerm::M1, LowTerm::Err, LowTerm::NegativeControl];
    let values = k.evaluate(&pairs, &terms)?;

    let mut rows = Vec::new();
    for ((x, yy), v) in pairs.iter().zip(&values) {
        for (t, kv) in terms.iter().zip(v) {
            rows.push(KernelRow::new(x.norm(), yy.norm(), t.label(), kv.value, kv.quad_err));
        }
    }
    let file = ctx.kernel_csv("lowkernels.csv", &rows)?;

    let gap: Vec<f64> = radii.iter().map(|r| bracket(r - ry)).collect();
    let reach = *radii.last().unwrap();
    let reaches = [reach / 4.0, reach / 2.0, reach];
    let regular = BoundEnvelope::family(1.0, 1.0, 2.0, BracketSign::Minus, true);
    let strong = BoundEnvelope::family(1.0, 1.0, 3.0, BracketSign::Minus, false);
    let nd = dirs.len();
    let mut probes = Vec::new();
    let mut plot = Plot::loglog("lowkernels.svg", "Low-energy kernels, normalised", "⟨|x| − |y|⟩", "max |K|⟨x⟩⟨y⟩ / (1 + log⟨|x| − |y|⟩)");
    let mut summary = Vec::new();
    let mut notes = Vec::new();
    for (t, term) in terms.iter().enumerate() {
        let normalized: Vec<f64> = (0..radii.len())
            .map(|i| {
                (0..nd)
                    .map(|j| {
                        let kv = values[i * nd + j][t].value.norm();
                        kv * bracket(radii[i]) * bracket(ry) / (1.0 + bracket(radii[i] - ry).ln())
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        let fit = DecayFit::fit(&gap, &normalized)?;
        let exponent = -fit.slope;
        let levels: Vec<Vec<(f64, f64, f64)>> = reaches
            .iter()
            .map(|&reach| {
                pairs
                    .iter()
                    .zip(&values)
                    .filter(|((x, _), _)| x.norm() <= reach * (1.0 + 1e-12))
                    .map(|((x, yy), v)| (x.norm(), yy.norm(), v[t].value.norm()))
                    .collect()
            })
            .collect();
        let (growth, constant, _) = constant_growth(&levels, regular);
        let (strong_growth, _, strong_violated) = constant_growth(&levels, strong);
        let label = term.label();
        let params = json!({"window": [gap[0], gap[gap.len() - 1]], "directions": nd, "y": ry});
        if *term == LowTerm::NegativeControl {
            probes.push(
                Probe::new(
                    "low_negctl_exponent",
                    "without the orthogonality Qv = 0 the decay degrades",
                    exponent,
                    Expect::Below { bound: tol.low_negative_control },
                )
                .slope(fit.slope)
                .params(params),
            );
            probes.push(Probe::holds(
                "low_negctl_strong_envelope",
                "the exponent-3 envelope is violated by the control kernel",
                strong_violated,
            ));
        } else {
            probes.push(
                Probe::new(
                    format!("low_{label}_exponent"),
                    "decay exponent in ⟨|x| − |y|⟩ with one log allowance",
                    exponent,
                    Expect::AtLeast { bound: tol.low_exponent },
                )
                .slope(fit.slope)
                .params(params),
            );
            let mut p = Probe::new(
                format!("low_{label}_constant_growth"),
                "envelope constant is stable when the sampled domain doubles",
                growth,
                Expect::AtMost { bound: tol.constant_growth },
            );
            if let Some(c) = constant {
                p = p.constant(c);
            }
            probes.push(p);
        }
        summary.push(json!({
            "term": label, "exponent": exponent, "r_squared": fit.r_squared, "normalized": normalized,
            "constant_growth": growth, "strong_envelope_growth": strong_growth, "strong_envelope_violated": strong_violated,
        }));
        notes.push(format!("{label} {exponent:.2}"));
        plot = plot.with(Series::points(label, &gap, &normalized)).with_fit(Series::power_law(
            format!("{label} fit"),
            &gap,
            fit.slope,
            fit.intercept,
        ));
    }

    // λ-integrand of the error term near zero
    let (px, py) = (Point3::new(1.0, 0.5, -0.3), Point3::new(-0.2, 0.7, 0.4));
    let ls = [1e-3, 2e-3, 4e-3];
    let small: Vec<f64> = ls.iter().map(|&l| k.integrand(l, px, py, &[LowTerm::Err]).map(|v| v[0].norm())).collect::<Result<_, _>>()?;
    let small_slope = loglog_fit(&ls, &small).slope;
    probes.push(
        Probe::new(
            "low_err_integrand_slope",
            "the error-term integrand vanishes at least linearly at zero",
            small_slope,
            Expect::AtLeast { bound: 1.0 },
        )
        .slope(small_slope),
    );

    plot = plot.note(format!("exponents: {}; λ₀ = {l0}", notes.join(", ")));
    Ok(Outcome {
        probes,
        data: json!({"lambda0": l0, "nodes": grid.len(), "radii": radii, "terms": summary, "err_integrand": {"lambda": ls, "abs": small}}),
        plots: vec![plot],
        files: vec![file],
    })
}

fn highkernels(ctx: &mut Context) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let tol = cfg.tolerances;
    let l0 = ctx.lambda0()?;
    let pot = cfg.potential;
    let lmax = cfg.sweeps.lambda_max;
    let mut probes = Vec::new();
    let mut plots = Vec::new();

    // weighted resolvent decay
    let lap_channel = RadialChannel::new(&pot, RadialGrid::new(20.0, 0.5, 12)?)?;
    let lap = lap_decay(&lap_channel, &logspace(2.0, 8.0, 7), 0.51)?;
    probes.push(
        Probe::new("lap_slope", "‖⟨x⟩^{-σ} R_V(λ⁴) ⟨y⟩^{-σ}‖ decays like λ⁻³", lap.slope, Expect::AtMost { bound: tol.lap_slope })
            .slope(lap.slope)
            .params(json!({"sigma": lap.sigma, "window": [2.0, 8.0], "free_slope": lap.free_slope})),
    );
    plots.push(
        Plot::loglog("highkernels_lap.svg", "Weighted resolvent norms", "λ", "norm")
            .with(Series::points("perturbed", &lap.lambdas, &lap.norms))
            .with_fit(fitted_line("perturbed fit", &lap.lambdas, &lap.norms))
            .with(Series::points("free", &lap.lambdas, &lap.free_norms))
            .note(format!("slopes: perturbed {:.3}, free {:.3}", lap.slope, lap.free_slope)),
    );

    let channel = RadialChannel::resolving(&pot, lmax)?;
    let cut = SpectralCutoff::new(l0)?;
    let k = HighEnergyKernels::new(&channel, cut, lmax)?;

    // remainder sweep and the crude bound near the origin
    let ry = [0.1, 0.5, 1.0, 2.0];
    let near = logspace(0.1, 2.0, 5);
    let far = logspace(2.0 / l0 + 1.0, 40.0 / l0 + 1.0, 12);
    let rx: Vec<f64> = near.iter().chain(&far).copied().collect();
    let kr = k.remainder_kernel(&rx, &ry, true)?;
    let qe = kr.quad_err.clone().unwrap_or_default();
    let mut rows = Vec::new();
    for (i, x) in rx.iter().enumerate() {
        for (j, y) in ry.iter().enumerate() {
            rows.push(KernelRow::new(*x, *y, "remainder", kr.at(i, j), qe.get(i * ry.len() + j).copied().unwrap_or(0.0)));
        }
    }
    let crude = (0..near.len())
        .flat_map(|i| (0..ry.len()).map(move |j| (i, j)))
        .filter(|&(_, j)| ry[j] <= 2.0)
        .map(|(i, j)| kr.at(i, j).norm() * bracket(rx[i]) * bracket(ry[j]))
        .fold(0.0, f64::max);
    let mut exponents = Vec::new();
    let mut rel_err: f64 = 0.0;
    let mut plot = Plot::loglog("highkernels_remainder.svg", "High-energy remainder, normalised", "⟨|x| − |y|⟩", "|K|⟨x⟩⟨y⟩");
    for (j, y) in ry.iter().enumerate().skip(1) {
        let idx: Vec<usize> = (near.len()..rx.len()).collect();
        let gap: Vec<f64> = idx.iter().map(|&i| bracket(rx[i] - y)).collect();
        let nrm: Vec<f64> = idx.iter().map(|&i| kr.at(i, j).norm() * bracket(rx[i]) * bracket(*y)).collect();
        for &i in &idx {
            rel_err = rel_err.max(qe.get(i * ry.len() + j).copied().unwrap_or(0.0) / kr.at(i, j).norm());
        }
        let fit = DecayFit::fit_envelope(&gap, &nrm)?;
        exponents.push(json!({"y": y, "exponent": -fit.slope, "r_squared": fit.r_squared, "window": fit.window}));
        plot = plot.with(Series::points(format!("|y| = {y}"), &gap, &nrm));
        if j == 2 {
            plot = plot.with_fit(Series::power_law("fit, |y| = 1", &gap, fit.slope, fit.intercept));
        }
    }
    let worst = exponents.iter().map(|e| e["exponent"].as_f64().unwrap_or(f64::NAN)).fold(f64::INFINITY, f64::min);
    probes.push(
        Probe::new(
            "high_remainder_exponent",
            "remainder kernel decays like ⟨|x| − |y|⟩⁻³",
            worst,
            Expect::AtLeast { bound: tol.high_exponent },
        )
        .slope(-worst)
        .params(json!({"window": [far[0], far[far.len() - 1]], "y": &ry[1..], "lambda_max": lmax})),
    );
    plots.push(plot.note(format!("smallest exponent {worst:.3}; tail bound {:.2e}", kr.tail_bound)));

    // integrand decay in λ
    let lam = logspace(2.0, 10.0, 8);
    let integrand: Vec<f64> = lam.iter().map(|&l| k.remainder_integrand(l, 1.0, 0.5).map(|v| v.norm())).collect::<Result<_, _>>()?;
    let ifit = DecayFit::fit_envelope(&lam, &integrand)?;
    probes.push(
        Probe::new(
            "high_integrand_slope",
            "remainder λ-integrand is O(λ⁻⁴)",
            ifit.slope,
            Expect::AtMost { bound: tol.high_integrand_slope },
        )
        .slope(ifit.slope),
    );

    // Schur sums on nested domains
    let uniform = k.remainder_kernel_uniform(0.5, 800)?;
    let schur = schur_test(&KernelSamples::from_uniform(&uniform), &[100.0, 200.0, 400.0])?;
    let last = schur.row_ratios.last().copied().unwrap_or(f64::NAN).abs().max(schur.col_ratios.last().copied().unwrap_or(f64::NAN).abs());
    probes.push(
        Probe::new(
            "high_schur_saturation",
            "Schur row and column sups saturate as the domain grows",
            last,
            Expect::Below { bound: SATURATION_RATIO },
        )
        .constant(schur.row_sups.last().copied().unwrap_or(f64::NAN).max(schur.col_sups.last().copied().unwrap_or(f64::NAN))),
    );
    plots.push(
        Plot::linear("highkernels_schur.svg", "Schur sums of the remainder kernel (radial channel)", "domain radius", "sup")
            .with(Series::line("row sup", &schur.radii, &schur.row_sups))
            .with(Series::line("column sup", &schur.radii, &schur.col_sups)),
    );

    // Born term along the truncation ladder
    let ladder_l = [8.0, 16.0, 32.0, 64.0];
    let mut born = Vec::new();
    let mut worst_born: f64 = f64::NEG_INFINITY;
    for &(x, y) in &[(0.5, 1.0), (3.0, 0.2), (10.0, 2.0)] {
        let c = k.born_kernel(x, y, &ladder_l)?;
        worst_born = worst_born.max(c.slope);
        rows.push(KernelRow::new(x, y, "born", c.value(), c.differences.last().copied().unwrap_or(0.0)));
        born.push(json!({"x": x, "y": y, "differences": c.differences, "slope": c.slope}));
    }
    probes.push(
        Probe::new(
            "high_born_cauchy",
            "Born truncations converge at rate L⁻¹ or faster",
            worst_born,
            Expect::AtMost { bound: tol.born_cauchy_slope },
        )
        .slope(worst_born)
        .params(json!({"ladder": ladder_l})),
    );
    let file = ctx.kernel_csv("highkernels.csv", &rows)?;
    Ok(Outcome {
        probes,
        data: json!({
            "lambda0": l0,
            "lambda_max": lmax,
            "lap": lap,
            "remainder": {"exponents": exponents, "tail_bound": kr.tail_bound, "max_relative_quad_err": rel_err, "crude_constant": crude},
            "integrand": {"lambda": lam, "abs": integrand, "slope": ifit.slope},
            "schur": schur,
            "born": born,
        }),
        plots,
        files: vec![file],
    })
}

fn a00(ctx: &mut Context) -> Result<Outcome> {
    let tol = ctx.cfg.tolerances;
    let cut = SpectralCutoff::new(ctx.lambda0()?)?;
    let radii = logspace(0.1, 50.0, 10);
    let mut rows = Vec::new();
    let mut gap: f64 = 0.0;
    let mut crude: f64 = 0.0;
    let mut lines: Vec<Vec<f64>> = Vec::new();
    for &a in &radii {
        let mut line = Vec::new();
        for &b in &radii {
            let (d, err) = a00_direct(a, b, &cut)?;
            let dec = a00_decomposed(a, b, &cut)?.total();
            let g = (d - dec).norm() / d.norm();
            gap = gap.max(g);
            crude = crude.max(d.norm() * bracket(a) * bracket(b));
            line.push(d.norm());
            rows.push(KernelRow::new(a, b, "direct", d, err));
            rows.push(KernelRow::new(a, b, "decomposed", dec, (d - dec).norm()));
        }
        lines.push(line);
    }
    let probes = vec![Probe::new(
        "a00_route_agreement",
        "direct quadrature equals the integrated-by-parts form",
        gap,
        Expect::Below { bound: tol.a00_agreement },
    )
    .params(json!({"lattice": [0.1, 50.0], "points": 10, "lambda0": cut.lambda0}))];
    let file = ctx.kernel_csv("a00.csv", &rows)?;
    let mut plot = Plot::loglog("a00.svg", "A₀,₀ slices", "|y|", "|A₀,₀|");
    for &i in &[0usize, 5, 9] {
        plot = plot.with(Series::line(format!("|x| = {:.3}", radii[i]), &radii, &lines[i]));
    }
    Ok(Outcome {
        probes,
        data: json!({"max_relative_gap": gap, "crude_constant": crude, "lambda0": cut.lambda0}),
        plots: vec![plot.note(format!("max relative gap {gap:.2e}; sup |A₀,₀|⟨x⟩⟨y⟩ = {crude:.3}"))],
        files: vec![file],
    })
}

fn hilbert(ctx: &mut Context) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let tol = cfg.tolerances;
    let n_inputs = cfg.sweeps.hilbert_inputs;
    let ps = [4.0 / 3.0, 2.0, 4.0];
    let s_values = logspace(K_PIECE_START, 1e8, 200);
    let geometry = s_values.iter().all(|&s| i_s_geometry_holds(s));
    let grids = [LineGrid::quartic(14.0, 600), LineGrid::quartic(14.0, 1200)];
    let inputs: Vec<GaussianSum> = (0..n_inputs as u64).map(|k| GaussianSum::random(cfg.seed.wrapping_add(k))).collect();
    // [grid][p] -> (max H ratio, max M ratio)
    let mut maxima = [[(0.0f64, 0.0f64); 3]; 2];
    let mut k_dom: f64 = 0.0;
    let mut rows = Vec::new();
    let mut per_seed: Vec<Vec<f64>> = vec![Vec::new(); 3];
    for (gi, g) in grids.iter().enumerate() {
        for (k, u) in inputs.iter().enumerate() {
            let prof = u.profile(g);
            for (pi, &p) in ps.iter().enumerate() {
                let r = truncated_hilbert_suite(g, &prof, p);
                let m = &mut maxima[gi][pi];
                m.0 = m.0.max(r.hilbert_ratio);
                m.1 = m.1.max(r.maximal_ratio);
                k_dom = k_dom.max(r.k_domination);
                if gi == 0 {
                    per_seed[pi].push(r.hilbert_ratio);
                }
                rows.push(vec![
                    (cfg.seed.wrapping_add(k as u64)).to_string(),
                    fmt_f64(p),
                    g.len().to_string(),
                    fmt_f64(r.hilbert_ratio),
                    fmt_f64(r.maximal_ratio),
                    fmt_f64(r.k_domination),
                ]);
            }
        }
    }
    let mut probes = vec![
        Probe::holds("hilbert_is_geometry", "I_s ⊂ [s, 16s] with r − s comparable to s^{3/4}", geometry)
            .params(json!({"s": [K_PIECE_START, 1e8]})),
        Probe::new(
            "hilbert_k_domination",
            "K-piece is dominated pointwise by the maximal function",
            k_dom,
            Expect::AtMost { bound: K_PIECE_BOUND },
        )
        .constant(k_dom)
        .params(json!({"inputs": n_inputs})),
    ];
    let mut stability = Vec::new();
    for (pi, &p) in ps.iter().enumerate() {
        let (c, f) = (maxima[0][pi], maxima[1][pi]);
        let change = ((f.0 - c.0) / c.0).abs().max(((f.1 - c.1) / c.1).abs());
        let name = format!("hilbert_refinement_p{}", if pi == 0 { "4_3".to_string() } else { format!("{p}") });
        probes.push(
            Probe::new(
                name,
                "weighted-norm ratios of H* and 𝓜 are bounded and refinement-stable",
                change,
                Expect::AtMost { bound: tol.hilbert_refinement },
            )
            .constant(f.0)
            .params(json!({"p": p, "hilbert_ratio": [c.0, f.0], "maximal_ratio": [c.1, f.1]})),
        );
        stability.push(json!({"p": p, "hilbert_ratio": [c.0, f.0], "maximal_ratio": [c.1, f.1], "change": change}));
    }

    // Ã restricted to ||x| − |y|| > 1 at p = 2
    let levels = [(RadialGrid::new(24.0, 0.5, 4)?, 4), (RadialGrid::new(24.0, 0.25, 8)?, 8)];
    let mut ta = [0.0f64; 2];
    let mut muck = true;
    for u in &inputs {
        let f = |r: f64| u.spherical_average(r);
        for (i, (g, order)) in levels.iter().enumerate() {
            let rep = tilde_a_apply(&f, 12.0, 2.0, g, *order)?;
            ta[i] = ta[i].max(rep.ratio);
            muck &= rep.in_muckenhoupt_range;
        }
    }
    let ta_change = ((ta[1] - ta[0]) / ta[0]).abs();
    probes.push(
        Probe::new(
            "tilde_a_refinement",
            "‖Ãu‖₂/‖u‖₂ is bounded and refinement-stable",
            ta_change,
            Expect::AtMost { bound: tol.hilbert_refinement },
        )
        .constant(ta[1])
        .params(json!({"p": 2.0, "ratio": ta, "weight_in_a_p": muck})),
    );

    let file = ctx.csv("hilbert.csv", &["seed", "p", "cells", "hilbert_ratio", "maximal_ratio", "k_domination"], rows)?;
    let idx: Vec<f64> = (0..n_inputs).map(|k| k as f64).collect();
    let mut plot = Plot::linear("hilbert.svg", "Weighted-norm ratio of the maximal truncated Hilbert transform", "input", "ratio");
    for (pi, &p) in ps.iter().enumerate() {
        plot = plot.with(Series::points(format!("p = {p:.3}"), &idx, &per_seed[pi]));
    }
    Ok(Outcome {
        probes,
        data: json!({"k_domination": k_dom, "stability": stability, "tilde_a": {"ratio": ta, "weight_in_a_p": muck}, "inputs": n_inputs}),
        plots: vec![plot],
        files: vec![file],
    })
}

fn bounds(ctx: &mut Context) -> Result<Outcome> {
    let tol = ctx.cfg.tolerances;
    let cut = SpectralCutoff::new(1.0)?;
    let r = logspace(10.0, 1000.0, 16);
    type Symbol = Box<dyn Fn(f64) -> C64>;
    let symbols: [(&str, Symbol); 4] = [
        ("lambda", Box::new(|l| C64::new(l, 0.0))),
        ("lambda_squared", Box::new(|l| C64::new(l * l, 0.0))),
        ("lambda_exp", Box::new(|l| C64::from_polar(l, l))),
        ("lambda_over", Box::new(|l| C64::new(l / (1.0 + l), 0.0))),
    ];
    let mut probes = Vec::new();
    let mut osc = Plot::loglog("bounds_oscillatory.svg", "Oscillatory integrals near zero energy", "r", "|I(r)| / (1 + log⟨r⟩)");
    let mut records = Vec::new();
    for (name, f) in &symbols {
        let p = oscillatory_decay_probe(f.as_ref(), &cut, &r)?;
        let norm: Vec<f64> = r.iter().zip(&p.magnitudes).map(|(r, m)| m / (1.0 + bracket(*r).ln())).collect();
        osc = osc.with(Series::line(*name, &r, &norm));
        probes.push(
            Probe::new(
                format!("oscillatory_{name}"),
                "∫e^{iλr}χ(λ)E(λ)dλ decays like log⟨r⟩/r² for E in O₂(λ)",
                p.fit.slope,
                Expect::AtMost { bound: tol.oscillatory_slope },
            )
            .slope(p.fit.slope)
            .params(json!({"window": [10.0, 1000.0], "lambda0": 1.0})),
        );
        records.push(json!({"symbol": name, "fit": p.fit, "certificate": p.certificate}));
    }
    let rejected = matches!(o2_certificate(&|_| C64::new(1.0, 0.0), &cut), Err(CoreError::SymbolClassViolated(_)));
    probes.push(Probe::holds("oscillatory_constant_rejected", "a constant symbol fails the O₂(λ) certificate", rejected));

    let radii = logspace(10.0, 1e4, 12);
    let mut l2 = Plot::loglog("bounds_l2_rows.svg", "Weighted L² rows", "⟨x⟩", "‖⟨z⟩^{-β}/|x − z|‖");
    let mut sweeps = Vec::new();
    for (beta, range, name) in [(2.0, tol.l2_slope_beta2, "l2_row_beta2"), (1.0, tol.l2_slope_beta1, "l2_row_beta1")] {
        let s = weighted_l2_sweep(beta, &radii)?;
        let br: Vec<f64> = radii.iter().map(|r| bracket(*r)).collect();
        l2 = l2.with(Series::points(format!("β = {beta}"), &br, &s.norms)).with_fit(Series::power_law(
            format!("fit β = {beta}"),
            &br,
            s.fit.slope,
            s.fit.intercept,
        ));
        probes.push(
            Probe::new(name, "row norms decay like ⟨x⟩⁻¹ (β = 2) and ⟨x⟩^{-1/2} (β = 1)", s.fit.slope, Expect::within(range))
                .slope(s.fit.slope)
                .params(json!({"beta": beta, "window": [radii[0], radii[radii.len() - 1]]})),
        );
        sweeps.push(s);
    }

    // envelope self-test
    let family = BoundEnvelope::family(1.0, 1.0, 2.0, BracketSign::Minus, true);
    let levels: Vec<Vec<(f64, f64, f64)>> = [10.0, 20.0, 40.0]
        .iter()
        .map(|&reach| {
            let g = logspace(0.1, reach, 15);
            g.iter().flat_map(|&x| g.iter().map(move |&y| (x, y, 3.0 * family.shape(x, y)))).collect()
        })
        .collect();
    let fitted = envelope_fit(&levels, family)?.envelope.constant;
    probes.push(
        Probe::new(
            "envelope_self_test",
            "the envelope fit recovers a planted constant",
            (fitted - 3.0).abs(),
            Expect::Below { bound: 1e-12 },
        )
        .constant(fitted),
    );

    Ok(Outcome { probes, data: json!({"oscillatory": records, "l2_rows": sweeps}), plots: vec![osc, l2], files: Vec::new() })
}

fn dispersive(ctx: &mut Context) -> Result<Outcome> {
    let tol = ctx.cfg.tolerances;
    let t = logspace(1.0, 100.0, 8);
    let rep = free_dispersive_decay(&t, 8.0, 41)?;
    let unit = free_unitarity_check(0.05, 40.0)?;
    let probes = vec![
        Probe::new("dispersive_slope", "sup|e^{-itΔ²}(x, y)| decays like t^{-3/4}", rep.fit.slope, Expect::within(tol.dispersive_slope))
            .slope(rep.fit.slope)
            .params(json!({"window": [1.0, 100.0]})),
        Probe::new(
            "dispersive_collapse",
            "rescaled kernels t^{3/4}K_t(ξt^{1/4}) coincide",
            rep.collapse,
            Expect::AtMost { bound: tol.dispersive_collapse },
        ),
        Probe::new("free_unitarity", "free evolution preserves the L² norm", unit.relative_error, Expect::Below { bound: tol.unitarity })
            .params(json!({"t": unit.t})),
    ];
    let xi: Vec<f64> = (0..41).map(|k| 8.0 * k as f64 / 40.0).collect();
    let mut profile = Plot::linear("dispersive_profiles.svg", "Rescaled free kernels", "ξ = r t^{-1/4}", "t^{3/4}|K_t|");
    for &tt in &[1.0, 10.0, 100.0] {
        let v: Vec<f64> =
            xi.iter().map(|&x| free_evolution_kernel(tt, x * tt.powf(0.25)).map(|k| k.norm() * tt.powf(0.75))).collect::<Result<_, _>>()?;
        profile = profile.with(Series::line(format!("t = {tt}"), &xi, &v));
    }
    let decay = Plot::loglog("dispersive_decay.svg", "Free dispersive decay", "t", "sup |K_t|")
        .with(Series::points("sup", &t, &rep.sups))
        .with_fit(Series::power_law("fit", &t, rep.fit.slope, rep.fit.intercept))
        .note(format!("slope {:.4}, collapse {:.1e}", rep.fit.slope, rep.collapse));
    Ok(Outcome { probes, data: json!({"decay": rep, "unitarity": unit}), plots: vec![decay, profile], files: Vec::new() })
}

fn waveapply(ctx: &mut Context) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let tol = cfg.tolerances;
    let lmax = 12.0;
    let grid = RadialGrid::new(100.0, 1.0, 16)?;
    let gaussian = RadialFunction::from_fn(grid.clone(), |r| C64::new((-0.5 * r * r).exp(), 0.0));
    let packet = RadialFunction::from_fn(grid.clone(), |r| C64::new((-0.5 * r * r).exp() * (2.0 * r).cos(), 0.0));

    let free_channel = RadialChannel::resolving(&Potential::gaussian_well(1e-8), lmax)?;
    let free_op = WaveOperator::new(&free_channel, cfg.cutoff.lambda0, lmax)?;
    let wf = free_op.apply(&gaussian, &WavePart::ALL)?;
    let deviation = wf.sub(&gaussian).norm() / gaussian.norm();

    let channel = RadialChannel::resolving(&cfg.potential, lmax)?;
    let op = WaveOperator::new(&channel, cfg.cutoff.lambda0, lmax)?;
    let wp = op.apply(&packet, &WavePart::ALL)?;
    let ratio = wp.norm() / packet.norm();
    let z = C64::new(1.0, 0.5);
    let inter = intertwining_check(&op, &gaussian, z, 50.0)?;

    let probes = vec![
        Probe::new("wave_free_limit", "W₊ is the identity when V is negligible", deviation, Expect::Below { bound: tol.free_limit })
            .params(json!({"c": 1e-8})),
        Probe::new("wave_isometry", "W₊ is an isometry on a wave packet", (ratio - 1.0).abs(), Expect::AtMost { bound: tol.isometry })
            .constant(ratio),
        Probe::new(
            "wave_intertwining",
            "R_V(z)W₊ = W₊R₀(z) at z = 1 + 0.5i",
            inter.relative_error,
            Expect::Below { bound: tol.intertwining },
        )
        .params(json!({"z": [z.re, z.im], "compare_radius": inter.compare_radius})),
    ];
    let file = ctx.csv(
        "waveapply.csv",
        &["r", "u", "re_w_plus_u", "im_w_plus_u"],
        grid.nodes
            .iter()
            .zip(packet.values.iter().zip(&wp.values))
            .map(|(r, (u, w))| vec![fmt_f64(*r), fmt_f64(u.re), fmt_f64(w.re), fmt_f64(w.im)]),
    )?;
    let keep: Vec<usize> = (0..grid.len()).filter(|&i| grid.nodes[i] <= 10.0).collect();
    let rr: Vec<f64> = keep.iter().map(|&i| grid.nodes[i]).collect();
    let plot = Plot::linear("waveapply.svg", "Wave operator on a packet", "r", "value")
        .with(Series::line("u", &rr, &keep.iter().map(|&i| packet.values[i].re).collect::<Vec<_>>()))
        .with(Series::line("Re W₊u", &rr, &keep.iter().map(|&i| wp.values[i].re).collect::<Vec<_>>()))
        .with(Series::line("Im W₊u", &rr, &keep.iter().map(|&i| wp.values[i].im).collect::<Vec<_>>()))
        .note(format!("‖W₊u‖/‖u‖ = {ratio:.7}; intertwining error {:.2e}", inter.relative_error));
    Ok(Outcome {
        probes,
        data: json!({
            "lambda0": op.cutoff().lambda0,
            "lambda_max": lmax,
            "free_limit_deviation": deviation,
            "isometry_ratio": ratio,
            "intertwining": inter,
        }),
        plots: vec![plot],
        files: vec![file],
    })
}
