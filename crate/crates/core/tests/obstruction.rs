mod common;

use std::f64::consts::PI;
use std::sync::OnceLock;

use ehglue::curvature::div_trace_jet;
use ehglue::eh::{EhMetric, EhParams, TensorT};
use ehglue::glue::{GlueParams, GluedMetric};
use ehglue::jet::Jet2;
use ehglue::lattice::{omega_partial, Background, BackgroundCache, Which};
use ehglue::obstruction::*;
use ehglue::{Point4, Sym2Field, Sym2Jet};

fn background(n: usize) -> &'static Background {
    static B8: OnceLock<Background> = OnceLock::new();
    static B32: OnceLock<Background> = OnceLock::new();
    match n {
        8 => B8.get_or_init(|| Background::new(8).unwrap()),
        32 => B32.get_or_init(|| Background::new(32).unwrap()),
        _ => unreachable!(),
    }
}

fn glued(eps: f64, delta: f64, n: usize) -> GluedMetric<'static> {
    GluedMetric::new(GlueParams::desk_scale(eps, delta, n).unwrap(), background(n)).unwrap()
}

fn x1x2(x: &Point4) -> Jet2 {
    let c = Jet2::coords(x);
    c[0] * c[1]
}

#[test]
fn offdiag_kernel_recovers_mixed_derivative() {
    let r = distributional_check(x1x2, 0, 1, KernelForm::OffDiag, 0.5, 16).unwrap();
    assert!((r.surface.value - PI * PI / 2.0).abs() < 1e-10, "{r:?}");
    assert!(r.volume.value.abs() < 1e-12);
    assert!((r.reconstructed - 1.0).abs() < 1e-10);
}

#[test]
fn constant_gives_zero_on_both_sides() {
    let r = distributional_check(|_: &Point4| Jet2::constant(1.0), 0, 1, KernelForm::OffDiag, 0.5, 16).unwrap();
    assert!(r.surface.value.abs() < 1e-12 && r.volume.value.abs() < 1e-12, "{r:?}");
}

#[test]
fn diagdiff_kernel_recovers_difference() {
    let u = |x: &Point4| {
        let c = Jet2::coords(x);
        c[0] * c[0] - c[1] * c[1]
    };
    let r = distributional_check(u, 0, 1, KernelForm::DiagDiff, 0.5, 16).unwrap();
    assert!((r.surface.value - 2.0 * PI * PI).abs() < 1e-10, "{r:?}");
    assert!((r.reconstructed - 4.0).abs() < 1e-10);
}

#[test]
fn non_harmonic_function_uses_the_volume_term() {
    // D2D4 u(0) = 3; Δu ≠ 0 away from the origin
    let u = |x: &Point4| {
        let c = Jet2::coords(x);
        let r2 = c[0] * c[0] + c[1] * c[1] + c[2] * c[2] + c[3] * c[3];
        c[1] * c[3] * (r2 + 3.0) + c[0] * c[0] * c[2] * c[2] + (c[0] * 2.0).exp()
    };
    for delta in [0.2, 0.4] {
        let r = distributional_check(u, 1, 3, KernelForm::OffDiag, delta, 20).unwrap();
        assert!(r.volume.value.abs() > 1e-3, "{r:?}");
        assert!((r.reconstructed - 3.0).abs() < 1e-8, "{r:?}");
    }
}

#[test]
fn distributional_check_rejects_bad_indices() {
    assert!(distributional_check(x1x2, 1, 1, KernelForm::OffDiag, 0.5, 16).is_err());
    assert!(distributional_check(x1x2, 0, 4, KernelForm::OffDiag, 0.5, 16).is_err());
    assert!(distributional_check(x1x2, 0, 1, KernelForm::OffDiag, -0.5, 16).is_err());
}

#[test]
fn single_site_fluxes_match_closed_forms() {
    let g = glued(0.1, 0.3, 8);
    let f = flux_integral(&g, FluxMode::SingleSite([1, 0, 0, 0]), 24).unwrap();
    assert!((f.value - 64.0 * PI * PI).abs() < 1e-3 * 64.0 * PI * PI, "{f:?}");
    let f = flux_integral(&g, FluxMode::SingleSite([1, 1, 0, 0]), 24).unwrap();
    assert!(f.value.abs() <= f.quadrature_estimate, "{f:?}");
    for a in [[1, 0, 0, 0], [1, 1, 1, 0], [2, 1, 0, 0], [0, -1, 2, 2]] {
        let f = flux_integral(&g, FluxMode::SingleSite(a), 24).unwrap();
        assert!(f.relative_deviation() < 1e-10, "{a:?}: {f:?}");
    }
}

#[test]
fn single_site_flux_is_radius_independent() {
    for a in [[1, 0, 0, 0], [1, 1, 1, 0], [0, 2, 1, 0]] {
        let f1 = flux_integral(&glued(0.01, 0.3, 8), FluxMode::SingleSite(a), 20).unwrap();
        let f2 = flux_integral(&glued(0.01, 0.15, 8), FluxMode::SingleSite(a), 20).unwrap();
        let tol = f1.quadrature_estimate + f2.quadrature_estimate + 1e-12 * f1.value.abs();
        assert!((f1.value - f2.value).abs() <= tol, "{a:?}: {} vs {}", f1.value, f2.value);
    }
}

#[test]
fn linearized_flux_is_the_sum_of_site_fluxes() {
    let eps = 0.05;
    let g = glued(eps, 0.3, 8);
    let f = flux_integral(&g, FluxMode::Linearized, 16).unwrap();
    let expected = 32.0 * PI * PI * eps.powi(8) * omega_partial(8).unwrap().partial;
    assert!(((f.value - expected) / expected).abs() < 1e-10, "{} vs {expected}", f.value);
    assert!(f.within_budget(), "{f:?}");
}

#[test]
fn full_flux_deviation_scales_like_eps12_delta_minus10() {
    let mut ratios = Vec::new();
    for (eps, delta) in [(0.05, 0.3), (0.03, 0.3), (0.05, 0.25)] {
        let f = flux_integral(&glued(eps, delta, 32), FluxMode::Full, 16).unwrap();
        assert!(f.within_budget(), "{f:?}");
        ratios.push((f.value - f.predicted) / (eps.powi(12) * delta.powi(-10)));
    }
    for r in &ratios {
        assert!(*r < -60.0 && *r > -100.0, "{ratios:?}");
    }
}

#[test]
fn flux_rejects_low_order() {
    assert!(flux_integral(&glued(0.05, 0.3, 8), FluxMode::Linearized, 12).is_err());
    assert!(z_flux(&glued(0.05, 0.3, 8), 8).is_err());
}

#[test]
fn z_term_is_within_its_bound() {
    let z = z_flux(&glued(0.1, 0.3, 32), 16).unwrap();
    assert!(z.value.abs() <= z.bound, "{z:?}");
    assert!(z.fitted_constant.abs() < 10.0);
}

#[test]
fn z_term_vanishes_for_zero_perturbation() {
    let z = z_flux_zero(&glued(0.1, 0.3, 8), 16).unwrap();
    assert_eq!(z.value, 0.0);
    assert_eq!(z.z_sup, 0.0);
}

#[test]
fn z_pointwise_within_eps8_delta_minus9() {
    let eps: f64 = 0.05;
    for d in [0.25, 0.3, 0.35] {
        let z = z_flux(&glued(eps, d, 32), 16).unwrap();
        assert!(z.z_sup > 0.0 && z.z_sup <= eps.powi(8) * d.powi(-9), "delta {d}: {z:?}");
    }
}

#[test]
fn eh_part_of_z_vanishes() {
    // h̄ without the lattice background: (eucl + ½ε⁴T) − g_eh is in divergence gauge
    let eps: f64 = 0.05;
    let eh = EhMetric::new(EhParams::new(eps).unwrap());
    let t = TensorT::plain();
    for x in common::shell_points(11, 50, 0.1, 0.4) {
        let g = eh.eval(&x).unwrap();
        let h = Sym2Jet::identity() + t.eval(&x).unwrap().scale(0.5 * eps.powi(4)) - g.clone();
        let dt = div_trace_jet(&g, &h).unwrap();
        let r = common::norm(&x);
        for c in dt.y {
            // roundoff sits near 1e-14, the bound's scale at least 1e-7
            assert!(c.value.abs() < 1e-6 * eps.powi(8) * r.powi(-9), "{x:?}");
        }
    }
}

fn projection_grid() -> &'static ProjectionGrid {
    static GRID: OnceLock<ProjectionGrid> = OnceLock::new();
    GRID.get_or_init(|| {
        let grid = ProjectionGrid::layout(0.3, ProjectionConfig::default()).unwrap();
        let cache = BackgroundCache::build(background(32), Which::Combined, &grid.nodes).unwrap();
        grid.with_background(cache).unwrap()
    })
}

#[test]
fn projection_grid_covers_the_cube_minus_a_ball() {
    let grid = projection_grid();
    let expected = 1.0 - 0.5 * PI * PI * (0.2f64).powi(4);
    assert!((grid.total_volume() - expected).abs() < 2e-4, "{}", grid.total_volume());
    assert!(grid.nodes.iter().all(|x| x.iter().all(|v| v.abs() <= 0.5 + 1e-12)));
}

#[test]
fn projections_approach_the_leading_term() {
    let grid = projection_grid();
    let eps = [0.02, 0.03, 0.05];
    let reports: Vec<ProjectionReport> = eps.iter().map(|&e| ric_projections(&glued(e, 0.3, 32), grid).unwrap()).collect();
    let vals: Vec<f64> = reports.iter().map(|r| r.o1).collect();
    let (slope, _) = ehglue::glue::loglog_fit(&eps, &vals).unwrap();
    assert!((slope - 8.0).abs() <= 0.3, "slope {slope}");
    let r = &reports[0];
    assert!((r.o1 / r.predicted_o1 - 1.0).abs() < 0.01, "{r:?}");
    for r in &reports {
        assert!(r.g.abs() <= r.g_scale, "{r:?}");
    }
    let gs: Vec<f64> = reports.iter().map(|r| r.g.abs()).collect();
    assert!(gs[0] < gs[1] && gs[1] < gs[2], "{gs:?}");
}

#[test]
fn projection_agrees_with_flux_in_the_asymptotic_regime() {
    let g = glued(0.02, 0.3, 32);
    let p = ric_projection_o1(&g, projection_grid()).unwrap();
    let f = flux_integral(&g, FluxMode::Full, 16).unwrap();
    assert!((p / f.value - 1.0).abs() < 0.01, "{p} vs {}", f.value);
}

#[test]
fn projection_rejects_mismatched_inputs() {
    let grid = projection_grid();
    assert!(ric_projections(&glued(0.02, 0.25, 32), grid).is_err());
    assert!(ric_projections(&glued(0.02, 0.3, 8), grid).is_err());
    let bare = ProjectionGrid::layout(0.3, ProjectionConfig::default()).unwrap();
    assert!(ric_projections(&glued(0.02, 0.3, 32), &bare).is_err());
    let other = ProjectionGrid::layout(0.25, ProjectionConfig::default()).unwrap();
    let cache = BackgroundCache::build(background(8), Which::Combined, &other.nodes[..10]).unwrap();
    assert!(bare.with_background(cache).is_err());
}
