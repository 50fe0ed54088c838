//! One suite per subcommand: resolve and validate parameters, then compute a [`Report`].

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use ehglue::curvature::{curvature_at, div_trace, lichnerowicz, rm_extrapolate};
use ehglue::eh::{o_norm_integral, symmetry_check, EhMetric, EhParams, OTensor, SymmetryMap, TensorT};
use ehglue::flow::{blowup_prediction, delta_of_t, ode_integrate, ricci_decay_proxy, FlowModel};
use ehglue::glue::{decay_scan, loglog_fit, GlueParams, GluedMetric, RegionTag, ScanField};
use ehglue::heat::{decay_rate_scan, gamma_minus, gamma_plus, DecayKernel, KernelQuery, Method, T_STAR};
use ehglue::lattice::{grid_hash, omega_partial, Background, BackgroundCache, Which};
use ehglue::obstruction::{
    distributional_check, flux_integral, omega_reference, ric_projections, z_flux, FluxMode, KernelForm,
    ProjectionConfig, ProjectionGrid,
};
use ehglue::{inner_product, s3_quadrature, Jet2, Point4, Sym2, Sym2Field};

use crate::config::{require, Resolver};
use crate::report::{write_atomic, Budget, Check, Criterion, Report, Table};
use crate::RunError;

/// Side-effect settings shared by all suites.
#[derive(Debug, Clone, Default)]
pub struct Context {
    pub cache_dir: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

/// Maps a validation failure inside the core library to a config error on `key`.
fn plan<T>(key: &str, r: ehglue::Result<T>) -> Result<T, RunError> {
    r.map_err(|e| RunError::config(key, e.to_string()))
}

fn compute(suite: &str) -> impl Fn(ehglue::Error) -> RunError + '_ {
    move |e| RunError::Compute {
        suite: suite.to_string(),
        message: e.to_string(),
    }
}

fn sample_points(seed: u64, n: usize, r0: f64, r1: f64) -> Vec<Point4> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let v: Point4 = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 0.1 && norm <= 1.0 {
            let r = rng.gen_range(r0..r1);
            out.push(v.map(|a| a * r / norm));
        }
    }
    out
}

fn unit(v: Point4) -> Point4 {
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.map(|a| a / n)
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / (n - 1).max(1) as f64).exp().clamp(lo, hi))
        .collect()
}

// ---------------------------------------------------------------- omega

#[derive(Debug, Clone, Default, Args)]
pub struct OmegaArgs {
    /// Largest cube half-width N of the partial sums.
    #[arg(long)]
    pub cutoff: Option<usize>,
}

pub fn omega(r: &mut Resolver, a: &OmegaArgs) -> Result<Report, RunError> {
    let n = r.get("cutoff", a.cutoff, 40)?;
    require("cutoff", n >= 8, format!("need at least 8 shells for the extrapolation, got {n}"))?;
    let mut rep = Report::new("omega", r.finish()?);
    let o = omega_partial(n).map_err(compute("omega"))?;
    let mut t = Table::new(&["n", "shell", "partial"], Budget::Exact);
    for s in &o.shells {
        t.push(vec![s.n as f64, s.shell, s.partial]);
    }
    rep.table("partial_sums", t);
    rep.result("partial", o.partial, Budget::Exact);
    rep.result("extrapolated", o.extrapolated, Budget::Abs(o.uncertainty));
    rep.result("tail_exponent", o.exponent, Budget::Abs(o.uncertainty / o.extrapolated.abs().max(1.0)));
    rep.check(Check::new("omega_extrapolated", o.extrapolated, Criterion::Abs { reference: 7.70, tol: 0.05 }));
    Ok(rep)
}

// ---------------------------------------------------------------- background cache

#[derive(Debug, Clone, Default, Args)]
pub struct BackgroundArgs {
    #[arg(long)]
    pub cutoff: Option<usize>,
    /// Cutoff radius of the projection grid the cache is built for.
    #[arg(long)]
    pub delta: Option<f64>,
}

/// Loads the cached background on `grid`, or builds and stores it. Corrupt or mismatched files are rebuilt.
pub fn cached_background(ctx: &Context, bg: &Background, nodes: &[Point4]) -> Result<BackgroundCache, RunError> {
    let err = compute("background");
    let name = BackgroundCache::file_name_for(&grid_hash(nodes), bg.cutoff(), Which::Combined);
    if let Some(dir) = &ctx.cache_dir {
        let path = dir.join(&name);
        if let Ok(bytes) = std::fs::read(&path) {
            match BackgroundCache::from_bytes(&bytes, nodes) {
                Ok(c) if c.n == bg.cutoff() && c.which == Which::Combined => {
                    eprintln!("cache hit: {}", path.display());
                    return Ok(c);
                }
                Ok(_) => eprintln!("cache {} does not match; rebuilding", path.display()),
                Err(e) => eprintln!("cache {} unusable ({e}); rebuilding", path.display()),
            }
        }
        let c = BackgroundCache::build(bg, Which::Combined, nodes).map_err(err)?;
        std::fs::create_dir_all(dir).map_err(|e| RunError::Io(format!("{}: {e}", dir.display())))?;
        write_atomic(&path, &c.to_bytes())?;
        eprintln!("cache written: {}", path.display());
        return Ok(c);
    }
    BackgroundCache::build(bg, Which::Combined, nodes).map_err(err)
}

pub fn background(ctx: &Context, r: &mut Resolver, a: &BackgroundArgs) -> Result<Report, RunError> {
    let n = r.get("cutoff", a.cutoff, 32)?;
    let delta = r.get("delta", a.delta, 0.3)?;
    require("cutoff", n >= 2, "must be at least 2")?;
    let grid = plan("delta", ProjectionGrid::layout(delta, ProjectionConfig::default()))?;
    let mut rep = Report::new("background", r.finish()?);
    let err = compute("background");
    let bg = Background::new(n).map_err(&err)?;
    let cache = cached_background(ctx, &bg, &grid.nodes)?;
    let reread = BackgroundCache::from_bytes(&cache.to_bytes(), &grid.nodes).map_err(&err)?;
    rep.check(Check::flag("roundtrip_identical", reread == cache));
    let stride = (grid.nodes.len() / 16).max(1);
    let mut spot_ok = true;
    for k in (0..grid.nodes.len()).step_by(stride) {
        spot_ok &= bg.eval(&grid.nodes[k], Which::Combined).map_err(&err)? == cache.values[k];
    }
    rep.check(Check::flag("spot_values_match_direct_evaluation", spot_ok));
    let max = cache.values.iter().map(|s| s.max_abs()).fold(0.0, f64::max);
    rep.result("points", grid.nodes.len(), Budget::Exact);
    rep.result("grid_sha256", cache.grid_hash.clone(), Budget::Exact);
    rep.result("file_name", cache.file_name(), Budget::Exact);
    rep.result("max_abs_component", max, Budget::Exact);
    Ok(rep)
}

// ---------------------------------------------------------------- glue parameters

#[derive(Debug, Clone, Default, Args)]
pub struct GlueArgs {
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub cutoff: Option<usize>,
    /// S³ Gauss order for the sphere integrals.
    #[arg(long)]
    pub order: Option<usize>,
}

fn glue_params(r: &mut Resolver, a: &GlueArgs, eps: f64, delta: f64, n: usize) -> Result<(GlueParams, usize), RunError> {
    let eps = r.get("epsilon", a.epsilon, eps)?;
    let delta = r.get("delta", a.delta, delta)?;
    let n = r.get("cutoff", a.cutoff, n)?;
    let order = r.get("order", a.order, 24)?;
    require("order", order >= 16, format!("need at least 16, got {order}"))?;
    let p = plan("epsilon", GlueParams::desk_scale(eps, delta, n))?;
    Ok((p, order))
}

fn make_background(suite: &str, n: usize) -> Result<Background, RunError> {
    Background::new(n).map_err(compute(suite))
}

// ---------------------------------------------------------------- flux

pub fn flux(r: &mut Resolver, a: &GlueArgs) -> Result<Report, RunError> {
    let (p, order) = glue_params(r, a, 0.1, 0.3, 32)?;
    let mut rep = Report::new("flux", r.finish()?);
    let err = compute("flux");
    let bg = make_background("flux", p.cutoff)?;
    let g = GluedMetric::new(p, &bg).map_err(&err)?;
    let full = flux_integral(&g, FluxMode::Full, order).map_err(&err)?;
    let lin = flux_integral(&g, FluxMode::Linearized, order).map_err(&err)?;
    let odd = flux_integral(&g, FluxMode::SingleSite([1, 0, 0, 0]), order).map_err(&err)?;
    let even = flux_integral(&g, FluxMode::SingleSite([1, 1, 0, 0]), order).map_err(&err)?;
    rep.result("flux_full", full.value, Budget::Abs(full.quadrature_estimate));
    rep.result("flux_linearized", lin.value, Budget::Abs(lin.quadrature_estimate));
    rep.result("predicted", full.predicted, Budget::Abs(full.lattice_tail));
    rep.result("correction_bound", full.correction_bound, Budget::Exact);
    rep.result("error_budget", full.budget(), Budget::Exact);
    rep.result("relative_deviation", full.relative_deviation(), Budget::Abs(full.budget() / full.predicted));
    rep.result("single_site_odd", odd.value, Budget::Abs(odd.quadrature_estimate));
    rep.result("single_site_even", even.value, Budget::Abs(even.quadrature_estimate));
    rep.check(Check::new(
        "flux_within_2pct_of_leading_term",
        full.value,
        Criterion::Rel {
            reference: full.predicted,
            tol: 0.02,
        },
    ));
    rep.check(Check::new("flux_deviation_within_error_budget", full.deviation(), Criterion::AtMost(full.budget())));
    rep.check(Check::new("linearized_flux_deviation_within_budget", lin.deviation(), Criterion::AtMost(lin.budget())));
    rep.check(Check::new(
        "single_site_odd",
        odd.value,
        Criterion::Rel {
            reference: 64.0 * PI * PI,
            tol: 1e-3,
        },
    ));
    rep.check(Check::new("single_site_even_below_quadrature_estimate", even.value.abs(), Criterion::AtMost(even.quadrature_estimate)));
    Ok(rep)
}

// ---------------------------------------------------------------- zterm

pub fn zterm(r: &mut Resolver, a: &GlueArgs) -> Result<Report, RunError> {
    let (p, order) = glue_params(r, a, 0.1, 0.3, 32)?;
    let mut rep = Report::new("zterm", r.finish()?);
    let err = compute("zterm");
    let bg = make_background("zterm", p.cutoff)?;
    let g = GluedMetric::new(p, &bg).map_err(&err)?;
    let z = z_flux(&g, order).map_err(&err)?;
    rep.result("z_flux", z.value, Budget::Abs(z.quadrature_estimate));
    rep.result("fitted_constant", z.fitted_constant, Budget::Abs(z.quadrature_estimate / (z.value.abs().max(f64::MIN_POSITIVE)) * z.fitted_constant.abs()));
    rep.result("z_sup", z.z_sup, Budget::Exact);
    rep.check(Check::new("z_flux_within_bound", z.value.abs(), Criterion::AtMost(z.bound)));
    Ok(rep)
}

// ---------------------------------------------------------------- projections

#[derive(Debug, Clone, Default, Args)]
pub struct ProjectArgs {
    #[command(flatten)]
    pub glue: GlueArgs,
    /// Comma-separated ε values for the exponent fit.
    #[arg(long)]
    pub fit_epsilons: Option<String>,
}

pub fn project(ctx: &Context, r: &mut Resolver, a: &ProjectArgs) -> Result<Report, RunError> {
    let (p, order) = glue_params(r, &a.glue, 0.1, 0.3, 32)?;
    let fit = r.list("fit-epsilons", a.fit_epsilons.clone(), &[0.05, 0.07, 0.1])?;
    require("fit-epsilons", fit.len() >= 2, "need at least two values")?;
    for &e in &fit {
        plan("fit-epsilons", GlueParams::desk_scale(e, p.delta, p.cutoff))?;
    }
    let grid = plan("delta", ProjectionGrid::layout(p.delta, ProjectionConfig::default()))?;
    let mut rep = Report::new("project", r.finish()?);
    let err = compute("project");
    let bg = make_background("project", p.cutoff)?;
    let cache = cached_background(ctx, &bg, &grid.nodes)?;
    let grid = grid.with_background(cache).map_err(&err)?;
    let g = GluedMetric::new(p, &bg).map_err(&err)?;
    let main = ric_projections(&g, &grid).map_err(&err)?;
    let fl = flux_integral(&g, FluxMode::Full, order).map_err(&err)?;
    let mut t = Table::new(&["epsilon", "projection_o1", "predicted", "ratio", "projection_g"], Budget::Abs(f64::NAN));
    let mut vals = Vec::with_capacity(fit.len());
    for &e in &fit {
        let ge = GluedMetric::new(GlueParams::desk_scale(e, p.delta, p.cutoff).map_err(&err)?, &bg).map_err(&err)?;
        let pr = if e == p.epsilon { main } else { ric_projections(&ge, &grid).map_err(&err)? };
        t.push(vec![e, pr.o1, pr.predicted_o1, pr.o1 / pr.predicted_o1, pr.g]);
        vals.push(pr.o1);
    }
    t.budget = Budget::Abs(fl.quadrature_estimate.max(1e-3 * main.o1.abs()));
    let (exponent, _) = loglog_fit(&fit, &vals).map_err(&err)?;
    rep.table("epsilon_scan", t);
    rep.result("projection_o1", main.o1, Budget::Abs(1e-3 * main.o1.abs()));
    rep.result("projection_o1_annulus", main.o1_parts[0], Budget::Abs(1e-3 * main.o1.abs()));
    rep.result("projection_o1_outer", main.o1_parts[1], Budget::Abs(1e-3 * main.o1.abs()));
    rep.result("projection_o1_corners", main.o1_parts[2], Budget::Abs(1e-3 * main.o1.abs()));
    rep.result("projection_g", main.g, Budget::Abs(main.g_scale));
    rep.result("flux", fl.value, Budget::Abs(fl.quadrature_estimate));
    rep.result("predicted", main.predicted_o1, Budget::Abs(fl.lattice_tail));
    rep.result("epsilon_exponent", exponent, Budget::Abs(0.3));
    rep.check(Check::new("projection_vs_flux_within_3pct", main.o1, Criterion::Rel { reference: fl.value, tol: 0.03 }));
    rep.check(Check::new("epsilon_exponent", exponent, Criterion::Abs { reference: 8.0, tol: 0.3 }));
    Ok(rep)
}

// ---------------------------------------------------------------- distributional Laplacian

#[derive(Debug, Clone, Default, Args)]
pub struct DistArgs {
    /// Comma-separated ball radii.
    #[arg(long)]
    pub radii: Option<String>,
    #[arg(long)]
    pub order: Option<usize>,
}

pub fn dist_laplace(r: &mut Resolver, a: &DistArgs) -> Result<Report, RunError> {
    let radii = r.list("radii", a.radii.clone(), &[0.25, 0.5])?;
    let order = r.get("order", a.order, 16)?;
    require("radii", radii.iter().all(|d| *d > 0.0 && d.is_finite()), "radii must be positive")?;
    require("order", order >= 4, "must be at least 4")?;
    let mut rep = Report::new("dist-laplace", r.finish()?);
    let err = compute("dist-laplace");
    let x1x2 = |x: &Point4| {
        let c = Jet2::coords(x);
        c[0] * c[1]
    };
    let diff = |x: &Point4| {
        let c = Jet2::coords(x);
        c[0] * c[0] - c[1] * c[1]
    };
    let mut t = Table::new(&["delta", "offdiag", "diagdiff"], Budget::Abs(1e-6));
    let (mut off, mut dd) = (Vec::new(), Vec::new());
    for &d in &radii {
        let o = distributional_check(x1x2, 0, 1, KernelForm::OffDiag, d, order).map_err(&err)?;
        let q = distributional_check(diff, 0, 1, KernelForm::DiagDiff, d, order).map_err(&err)?;
        t.push(vec![d, o.reconstructed, q.reconstructed]);
        off.push(o.reconstructed);
        dd.push(q.reconstructed);
    }
    rep.table("reconstructions", t);
    let worst = |v: &[f64], want: f64| v.iter().map(|x| (x - want).abs()).fold(0.0, f64::max);
    let spread = |v: &[f64]| v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
    rep.check(Check::new("offdiag_reconstructs_1", worst(&off, 1.0), Criterion::AtMost(1e-6)));
    rep.check(Check::new("diagdiff_reconstructs_4", worst(&dd, 4.0), Criterion::AtMost(1e-6)));
    rep.check(Check::new("radius_independence", spread(&off).max(spread(&dd)), Criterion::AtMost(1e-6)));
    Ok(rep)
}

// ---------------------------------------------------------------- decay scan

#[derive(Debug, Clone, Default, Args)]
pub struct GlueScanArgs {
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub cutoff: Option<usize>,
    /// Comma-separated outer radii.
    #[arg(long)]
    pub radii: Option<String>,
    #[arg(long)]
    pub s3_order: Option<usize>,
    /// Scale of the Eguchi-Hanson metric used for the expansion remainder.
    #[arg(long)]
    pub remainder_epsilon: Option<f64>,
}

pub fn glue_scan(r: &mut Resolver, a: &GlueScanArgs) -> Result<Report, RunError> {
    let eps = r.get("epsilon", a.epsilon, 0.05)?;
    let delta = r.get("delta", a.delta, 0.25)?;
    let n = r.get("cutoff", a.cutoff, 32)?;
    let radii = r.list("radii", a.radii.clone(), &[0.3, 0.35, 0.4, 0.45])?;
    let s3 = r.get("s3-order", a.s3_order, 6)?;
    let reps = r.get("remainder-epsilon", a.remainder_epsilon, 0.1)?;
    let p = plan("epsilon", GlueParams::desk_scale(eps, delta, n))?;
    for &x in &radii {
        require("radii", x > delta && x <= 0.5, format!("radius {x} is not in the outer region ({delta}, 0.5]"))?;
    }
    require("radii", radii.len() >= 2, "need at least two radii")?;
    require("s3-order", s3 >= 2, "must be at least 2")?;
    let eh = EhMetric::new(plan("remainder-epsilon", EhParams::new(reps))?);
    let mut rep = Report::new("glue-scan", r.finish()?);
    let err = compute("glue-scan");
    let bg = make_background("glue-scan", n)?;
    let g = GluedMetric::new(p, &bg).map_err(&err)?;
    let fit = decay_scan(&g, ScanField::Ricci, RegionTag::Outer, &radii, s3).map_err(&err)?;
    let ric_slope = fit.exponent.unwrap_or(f64::NAN);
    let t = TensorT::plain();
    let mut rem = Vec::with_capacity(radii.len());
    for &x in &radii {
        let rule = s3_quadrature(s3, x).map_err(&err)?;
        let vals: Vec<f64> = rule
            .nodes
            .par_iter()
            .map(|y| -> ehglue::Result<f64> {
                let d = eh.value_at(y)? - Sym2::identity() - t.value_at(y)?.scale(0.5 * reps.powi(4));
                Ok(d.norm())
            })
            .collect::<ehglue::Result<Vec<f64>>>()
            .map_err(&err)?;
        rem.push(vals.into_iter().fold(0.0, f64::max));
    }
    let (rem_slope, _) = loglog_fit(&radii, &rem).map_err(&err)?;
    let mut tab = Table::new(&["r", "sup_ricci", "sup_remainder"], Budget::Exact);
    for (k, &x) in radii.iter().enumerate() {
        tab.push(vec![x, fit.samples[k].1, rem[k]]);
    }
    rep.table("samples", tab);
    rep.result("ricci_slope", ric_slope, Budget::Abs(0.5));
    rep.result("remainder_slope", rem_slope, Budget::Abs(0.3));
    rep.check(Check::new("outer_ricci_slope", ric_slope, Criterion::Abs { reference: -10.0, tol: 0.5 }));
    rep.check(Check::new("expansion_remainder_slope", rem_slope, Criterion::Abs { reference: -8.0, tol: 0.3 }));
    Ok(rep)
}

// ---------------------------------------------------------------- heat kernels

#[derive(Debug, Clone, Default, Args)]
pub struct HeatArgs {
    /// Comma-separated times for the decay fits.
    #[arg(long)]
    pub times: Option<String>,
    #[arg(long)]
    pub points_per_axis: Option<usize>,
    /// Number of (x, x₀) pairs for the direct/dual comparison.
    #[arg(long)]
    pub pairs: Option<usize>,
}

pub fn heat(r: &mut Resolver, a: &HeatArgs) -> Result<Report, RunError> {
    let times = r.list("times", a.times.clone(), &[0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5])?;
    let ppa = r.get("points-per-axis", a.points_per_axis, 17)?;
    let pairs = r.get("pairs", a.pairs, 64)?;
    require("times", times.iter().all(|t| (0.2..=2.0).contains(t)), "times must lie in [0.2, 2]")?;
    require("times", times.len() >= 2, "need at least two times")?;
    require("points-per-axis", ppa >= 3, "must be at least 3")?;
    require("pairs", pairs >= 1, "must be positive")?;
    let mut rep = Report::new("heat", r.finish()?);
    let err = compute("heat");
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pts: Vec<(Point4, Point4)> = (0..pairs)
        .map(|_| (std::array::from_fn(|_| rng.gen_range(-0.5..0.5)), std::array::from_fn(|_| rng.gen_range(-0.5..0.5))))
        .collect();
    let diffs = pts
        .par_iter()
        .map(|(x, x0)| -> ehglue::Result<f64> {
            let q = |m| KernelQuery::new(*x, *x0, T_STAR).with_method(m);
            let dp = (gamma_plus(&q(Method::Direct))? - gamma_plus(&q(Method::Dual))?).abs();
            let dm = (gamma_minus(&q(Method::Direct))? - gamma_minus(&q(Method::Dual))?).abs();
            Ok(dp.max(dm))
        })
        .collect::<ehglue::Result<Vec<f64>>>()
        .map_err(&err)?;
    let agree = diffs.into_iter().fold(0.0, f64::max);
    rep.result("direct_dual_max_difference", agree, Budget::Exact);
    rep.check(Check::new("direct_dual_agreement", agree, Criterion::AtMost(1e-12)));
    let target = -4.0 * PI * PI;
    for k in [DecayKernel::PlusMinusOne, DecayKernel::Minus] {
        let s = decay_rate_scan(k, &times, ppa).map_err(&err)?;
        let mut t = Table::new(&["t", "sup"], Budget::Abs(ehglue::heat::TAIL_TOL));
        for (tt, v) in s.times.iter().zip(&s.sups) {
            t.push(vec![*tt, *v]);
        }
        rep.table(&format!("sup_{}", k.name()), t);
        rep.result(&format!("rate_{}", k.name()), s.rate, Budget::Abs(0.05 * target.abs()));
        rep.check(Check::new(format!("decay_rate_{}", k.name()), s.rate, Criterion::Rel { reference: target, tol: 0.05 }));
    }
    Ok(rep)
}

// ---------------------------------------------------------------- flow

#[derive(Debug, Clone, Default, Args)]
pub struct FlowArgs {
    /// Λ, the flow lives on t ≤ −Λ.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub cutoff: Option<usize>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub rk4_steps: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub rk4_start: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub rk4_end: Option<f64>,
    /// Number of log-spaced times on [−10¹², −Λ] for the scale-hypothesis check.
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Comma-separated times for the Ricci proxy and the CSV rows.
    #[arg(long, allow_hyphen_values = true)]
    pub proxy_times: Option<String>,
}

pub fn flow(ctx: &Context, r: &mut Resolver, a: &FlowArgs) -> Result<Report, RunError> {
    let lambda = r.get("lambda", a.lambda, 1e3)?;
    let n = r.get("cutoff", a.cutoff, 8)?;
    let kappa = r.get("kappa", a.kappa, 0.01)?;
    let steps = r.get("rk4-steps", a.rk4_steps, 100_000)?;
    let t0 = r.get("rk4-start", a.rk4_start, -1e6)?;
    let t1 = r.get("rk4-end", a.rk4_end, -1e3)?;
    let grid_n = r.get("grid-points", a.grid_points, 200)?;
    let proxy_t = r.list("proxy-times", a.proxy_times.clone(), &[-1e4, -1e5, -1e6])?;
    let model = plan("lambda", FlowModel::new(omega_reference(), lambda))?;
    require("kappa", kappa > 0.0 && kappa < 0.5, "must lie in (0, 1/2)")?;
    require("rk4-steps", steps > 0, "must be positive")?;
    require("rk4-start", t0 < t1 && t1 <= -lambda, "need rk4-start < rk4-end <= -lambda")?;
    require("grid-points", grid_n >= 2, "must be at least 2")?;
    require("cutoff", n >= 2, "must be at least 2")?;
    require("proxy-times", proxy_t.len() >= 2 && proxy_t.iter().all(|t| *t <= -lambda), "need two or more times <= -lambda")?;
    let mut rep = Report::new("flow", r.finish()?);
    let err = compute("flow");

    let eps0 = model.epsilon(t0).map_err(&err)?;
    let tr = ode_integrate(&model, eps0, t0, t1, steps).map_err(&err)?;
    let rk = tr.max_relative_deviation.unwrap_or(f64::NAN);
    rep.result("rk4_max_relative_deviation", rk, Budget::Exact);
    rep.check(Check::new("rk4_matches_closed_form", rk, Criterion::AtMost(1e-9)));

    let grid: Vec<f64> = log_grid(lambda, 1e12, grid_n).into_iter().map(|m| -m).collect();
    let asum = model.check_assumption(&grid).map_err(&err)?;
    let worst = |f: fn(&ehglue::flow::AssumptionRow) -> f64| asum.rows.iter().map(f).fold(f64::MIN, f64::max);
    rep.result("assumption_min_lower_margin", -worst(|r| -r.lower_margin), Budget::Exact);
    rep.result("assumption_max_upper_margin", worst(|r| r.upper_margin), Budget::Exact);
    rep.result("assumption_max_derivative_ratio", worst(|r| r.derivative_ratio), Budget::Exact);
    rep.result("assumption_max_holder_ratio", worst(|r| r.holder_ratio), Budget::Exact);
    rep.check(Check::new("assumption_violations", asum.failures() as f64, Criterion::AtMost(0.0)));

    let mut resid: f64 = 0.0;
    for &t in &grid {
        let (e, ep) = (model.epsilon(t).map_err(&err)?, model.epsilon_prime(t).map_err(&err)?);
        let scale = 32.0 * PI * PI * model.omega * e.powi(8);
        resid = resid.max(ehglue::flow::modulation_residual(model.omega, e, ep).abs() / scale);
    }
    rep.result("modulation_residual_relative", resid, Budget::Exact);
    rep.check(Check::new("modulation_residual_vanishes", resid, Criterion::AtMost(1e-12)));

    let eh1 = EhMetric::new(EhParams::new(1.0).map_err(&err)?);
    let m = rm_extrapolate(&eh1, &[1.0, 0.0, 0.0, 0.0], [0.2, 0.1, 0.05], 4).map_err(&err)?.m();
    let ratios: Vec<f64> = log_grid(1e4, 1e8, 9)
        .into_iter()
        .map(|mt| blowup_prediction(&model, -mt, m).map(|p| p.ratio))
        .collect::<ehglue::Result<Vec<f64>>>()
        .map_err(&err)?;
    let (lo, hi) = ratios.iter().fold((f64::MAX, f64::MIN), |(l, h), v| (l.min(*v), h.max(*v)));
    let c = m * (32.0 * model.omega).sqrt();
    rep.result("M", m, Budget::Abs((m - 384f64.sqrt()).abs().max(1e-9)));
    rep.result("omega", model.omega, Budget::Abs(1e-6));
    rep.result("rate_constant_c", c, Budget::Abs(1e-6 * c));
    rep.check(Check::new("blowup_ratio_spread", hi / lo - 1.0, Criterion::AtMost(1e-2)));

    let bg = make_background("flow", n)?;
    let proxy = ricci_decay_proxy(&model, &proxy_t, &bg, kappa).map_err(&err)?;
    let mut csv = Table::new(&["t", "epsilon", "pred_sup_rm", "ric_proxy"], Budget::Exact);
    for row in &proxy.rows {
        let p = blowup_prediction(&model, row.t, m).map_err(&err)?;
        csv.push(vec![row.t, row.epsilon, p.sup_rm, row.sup_ric]);
    }
    let decreasing = proxy.weighted.windows(2).all(|w| w[1] < w[0]);
    rep.result("ricci_proxy_exponent", proxy.exponent, Budget::Abs(0.1));
    rep.result("delta_at_first_proxy_time", delta_of_t(proxy_t[0]), Budget::Exact);
    rep.check(Check::new("ricci_proxy_exponent", proxy.exponent, Criterion::AtMost(-0.9)));
    rep.check(Check::flag("ricci_proxy_beats_sqrt_rate", decreasing));
    if let Some(path) = &ctx.csv {
        write_atomic(path, csv.to_csv().as_bytes())?;
    }
    rep.table("trajectory", csv);
    Ok(rep)
}

// ---------------------------------------------------------------- verify

#[derive(Debug, Clone, Default, Args)]
pub struct VerifyArgs {
    /// Fewer sample points.
    #[arg(long)]
    pub fast: bool,
    #[arg(long)]
    pub points: Option<usize>,
}

/// Roundoff floor for g^{ij}h_{ij}: a few ulps times cond(g)·|h|_g.
fn trace_floor(g: &Sym2, h: &Sym2) -> ehglue::Result<f64> {
    let e = g.eigenvalues();
    let hn = inner_product(g, h, h)?.max(0.0).sqrt();
    Ok(64.0 * f64::EPSILON * (e[3] / e[0]) * hn.max(f64::MIN_POSITIVE))
}

pub fn verify_eh(r: &mut Resolver, a: &VerifyArgs) -> Result<Report, RunError> {
    let fast = r.get("fast", if a.fast { Some(true) } else { None }, false)?;
    let npts = r.get("points", a.points, if fast { 50 } else { 200 })?;
    require("points", npts >= 1, "must be positive")?;
    let mut rep = Report::new("verify-eh", r.finish()?);
    let err = compute("verify-eh");
    let params = EhParams::new(1.0).map_err(&err)?;
    let g = EhMetric::new(params);
    let os: Vec<OTensor> = (1..=3).map(|i| OTensor::new(i, params)).collect::<ehglue::Result<_>>().map_err(&err)?;
    let pts = sample_points(21, npts, 0.3, 5.0);
    // per point: trace ratio, |div|, |Δ_L|, |Ric|, |det − 1|
    let rows = pts
        .par_iter()
        .map(|x| -> ehglue::Result<[f64; 5]> {
            let gv = g.value_at(x)?;
            let mut out = [0.0_f64; 5];
            for o in &os {
                let ov = o.value_at(x)?;
                out[0] = out[0].max(inner_product(&gv, &gv, &ov)?.abs() / trace_floor(&gv, &ov)?);
                let dt = div_trace(&g, o, x)?;
                out[1] = out[1].max(dt.divergence_values().iter().fold(0.0, |m, v| m.max(v.abs())));
                out[2] = out[2].max(lichnerowicz(&g, o, x)?.max_abs());
            }
            out[3] = curvature_at(&g, x)?.ricci_norm();
            out[4] = (gv.determinant() - 1.0).abs();
            Ok(out)
        })
        .collect::<ehglue::Result<Vec<[f64; 5]>>>()
        .map_err(&err)?;
    let col = |k: usize| rows.iter().map(|r| r[k]).fold(0.0, f64::max);
    rep.result("points", npts, Budget::Exact);
    rep.check(Check::new("trace_over_roundoff_floor", col(0), Criterion::AtMost(1.0)));
    rep.check(Check::new("divergence", col(1), Criterion::AtMost(1e-8)));
    rep.check(Check::new("lichnerowicz", col(2), Criterion::AtMost(1e-7)));
    rep.check(Check::new("ricci", col(3), Criterion::AtMost(1e-9)));
    rep.check(Check::new("determinant_minus_one", col(4), Criterion::AtMost(1e-12)));
    for eps in [0.5_f64, 1.0, 2.0] {
        let want = 2.0 * PI * PI * eps.powi(4);
        for i in 1..=3 {
            let o = OTensor::new(i, EhParams::new(eps).map_err(&err)?).map_err(&err)?;
            let est = o_norm_integral(&o, &unit([0.3, -0.2, 0.5, 0.1]), 1e-12).map_err(&err)?;
            let name = format!("o{i}_l2_norm_eps_{eps}");
            rep.result(&name, est.value, Budget::Abs(est.error));
            rep.check(Check::new(name, est.value, Criterion::Rel { reference: want, tol: 1e-6 }));
        }
    }
    Ok(rep)
}

pub fn verify_glue(r: &mut Resolver, a: &VerifyArgs) -> Result<Report, RunError> {
    let fast = r.get("fast", if a.fast { Some(true) } else { None }, false)?;
    let npts = r.get("points", a.points, if fast { 20 } else { 60 })?;
    require("points", npts >= 1, "must be positive")?;
    let mut rep = Report::new("verify-glue", r.finish()?);
    let err = compute("verify-glue");
    let (eps, delta) = (0.05, 0.3);
    let bg = make_background("verify-glue", 8)?;
    let g = GluedMetric::new(GlueParams::desk_scale(eps, delta, 8).map_err(&err)?, &bg).map_err(&err)?;
    let eh = EhMetric::new(EhParams::new(eps).map_err(&err)?);
    let pts = sample_points(3, npts, 0.02, 0.5);
    let min_eig = pts
        .iter()
        .map(|x| g.value_at(x).map(|m| m.eigenvalues()[0]))
        .collect::<ehglue::Result<Vec<f64>>>()
        .map_err(&err)?
        .into_iter()
        .fold(f64::MAX, f64::min);
    rep.result("min_eigenvalue", min_eig, Budget::Exact);
    rep.check(Check::new("positive_definite", min_eig, Criterion::AtLeast(f64::MIN_POSITIVE)));
    let inner: Vec<Point4> = sample_points(4, npts, 0.2 * delta, 0.5 * delta);
    let mut same = true;
    for x in &inner {
        same &= g.eval(x).map_err(&err)? == eh.eval(x).map_err(&err)?;
    }
    rep.check(Check::flag("inner_region_is_eguchi_hanson", same));
    let sym_pts = sample_points(5, npts.min(20), 0.05, 0.45);
    let mut sym: f64 = 0.0;
    for map in SymmetryMap::linear_generators() {
        sym = sym.max(symmetry_check(&g, &map, &sym_pts).map_err(&err)?);
    }
    rep.check(Check::new("linear_generator_invariance", sym, Criterion::AtMost(1e-12)));
    let fit = decay_scan(&g, ScanField::Ricci, RegionTag::Inner, &[0.06, 0.1, 0.14], 6).map_err(&err)?;
    rep.check(Check::new("inner_ricci", fit.max, Criterion::AtMost(1e-8)));
    let fit = decay_scan(&g, ScanField::LichnerowiczObstruction, RegionTag::Inner, &[0.06, 0.1, 0.14], 6).map_err(&err)?;
    rep.check(Check::new("inner_lichnerowicz_obstruction", fit.max, Criterion::AtMost(1e-6)));
    Ok(rep)
}

pub fn verify_all(r: &mut Resolver, a: &VerifyArgs) -> Result<Report, RunError> {
    let fast = r.get("fast", if a.fast { Some(true) } else { None }, false)?;
    require("points", a.points.is_none(), "not accepted by `verify all`")?;
    let config = r.finish()?;
    let args = VerifyArgs { fast, points: None };
    let mut rep = Report::new("verify-all", config);
    rep.absorb("eh", verify_eh(&mut Resolver::default(), &args)?);
    rep.absorb("glue", verify_glue(&mut Resolver::default(), &args)?);
    Ok(rep)
}

// ---------------------------------------------------------------- report aggregation

/// Summarizes previously written reports: one pass flag per file.
pub fn summarize(inputs: &[PathBuf]) -> Result<Report, RunError> {
    if inputs.is_empty() {
        return Err(RunError::config("inputs", "no report files given"));
    }
    let mut parsed = Vec::with_capacity(inputs.len());
    for p in inputs {
        let text = std::fs::read_to_string(p).map_err(|e| RunError::config("inputs", format!("{}: {e}", p.display())))?;
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| RunError::config("inputs", format!("{}: {e}", p.display())))?;
        parsed.push((p.clone(), v));
    }
    let mut rep = Report::new("report", Default::default());
    for (p, v) in parsed {
        let task = v.get("task").and_then(|t| t.as_str()).unwrap_or("unknown").to_string();
        let pass = v.get("pass").and_then(|t| t.as_bool()).unwrap_or(false);
        let label = file_label(&p, &task);
        rep.check(Check::flag(label, pass));
    }
    Ok(rep)
}

fn file_label(p: &Path, task: &str) -> String {
    let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    format!("{task}:{stem}")
}
