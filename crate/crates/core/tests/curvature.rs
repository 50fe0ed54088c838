mod common;

use ehglue::curvature::{
    curvature_at, curvature_from_jet, div_trace, lichnerowicz, lie_derivative_sym2, q_remainder,
    rm_extrapolate, vector_jet1, CurvatureAt,
};
use ehglue::eh::{euler_field, EhMetric, EhParams, OTensor, TensorT};
use ehglue::field::{FnField, ScaledField, SumField};
use ehglue::{Euclidean, Jet2, Point4, Sym2, Sym2Field, Sym2Jet};
use proptest::prelude::*;

fn eh(eps: f64) -> EhMetric {
    EhMetric::new(EhParams::new(eps).unwrap())
}

fn o(i: usize, eps: f64) -> OTensor {
    OTensor::new(i, EhParams::new(eps).unwrap()).unwrap()
}

/// A non-Einstein test metric: g = e^{2f}δ + x₁x₂·(dx₃⊗dx₄ + dx₄⊗dx₃)/5 with f = 0.1(x₁² − x₂x₃).
fn bumpy() -> impl Sym2Field {
    FnField(|x: &Point4| {
        let c = Jet2::coords(x);
        let f = ((c[0] * c[0] - c[1] * c[2]).scale(0.2)).exp();
        let mut g = Sym2Jet::ZERO;
        for i in 0..4 {
            *g.get_mut(i, i) = f;
        }
        *g.get_mut(2, 3) = (c[0] * c[1]).scale(0.2);
        Ok(g)
    })
}

fn max_bianchi_and_symmetry_defect(c: &CurvatureAt) -> f64 {
    let r = &c.riemann;
    let mut d = 0.0_f64;
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    d = d.max((r[i][j][k][l] + r[j][i][k][l]).abs());
                    d = d.max((r[i][j][k][l] + r[i][j][l][k]).abs());
                    d = d.max((r[i][j][k][l] - r[k][l][i][j]).abs());
                    d = d.max((r[i][j][k][l] + r[j][k][i][l] + r[k][i][j][l]).abs());
                }
            }
        }
    }
    d
}

#[test]
fn flat_metric_has_no_curvature() {
    let c = curvature_at(&Euclidean, &[0.3, 0.2, 0.1, 0.0]).unwrap();
    assert_eq!(c.ricci, Sym2::ZERO);
    assert_eq!(c.scalar, 0.0);
    assert_eq!(c.rm_norm_sq(), 0.0);
}

#[test]
fn eh_is_ricci_flat() {
    for x in common::shell_points(21, 200, 0.3, 5.0) {
        let c = curvature_at(&eh(1.0), &x).unwrap();
        assert!(c.ricci_norm() <= 1e-9, "|Ric| = {}", c.ricci_norm());
        assert!(c.ricci.max_abs() <= 1e-9);
    }
}

#[test]
fn ricci_flat_by_finite_differences() {
    // second derivatives of g by central differences of the jet gradients
    let g = eh(1.0);
    let h = 1e-3;
    for x in common::shell_points(22, 20, 0.3, 3.0) {
        let mut jet = g.eval(&x).unwrap();
        for c in 0..10 {
            for (s, &(k, l)) in ehglue::jet::SYM_PAIRS.iter().enumerate() {
                let mut xp = x;
                let mut xm = x;
                xp[l] += h;
                xm[l] -= h;
                let gp = g.eval(&xp).unwrap().comps[c].grad[k];
                let gm = g.eval(&xm).unwrap().comps[c].grad[k];
                let mut xp2 = x;
                let mut xm2 = x;
                xp2[l] += 2.0 * h;
                xm2[l] -= 2.0 * h;
                let gp2 = g.eval(&xp2).unwrap().comps[c].grad[k];
                let gm2 = g.eval(&xm2).unwrap().comps[c].grad[k];
                jet.comps[c].hess[s] = (8.0 * (gp - gm) - (gp2 - gm2)) / (12.0 * h);
            }
        }
        let (_, curv) = curvature_from_jet(&jet).unwrap();
        assert!(curv.ricci.max_abs() <= 1e-5, "{}", curv.ricci.max_abs());
    }
}

#[test]
fn riemann_symmetries() {
    for x in common::shell_points(23, 30, 0.3, 3.0) {
        let c = curvature_at(&eh(1.0), &x).unwrap();
        let scale = c.rm_norm_sq().sqrt().max(1.0);
        assert!(max_bianchi_and_symmetry_defect(&c) <= 1e-10 * scale);
        let c = curvature_at(&bumpy(), &x.map(|v| v * 0.3)).unwrap();
        assert!(max_bianchi_and_symmetry_defect(&c) <= 1e-12);
    }
}

#[test]
fn eh_curvature_norm_closed_form() {
    // |Rm|² = 384 ε⁸/ρ¹² with ρ⁴ = ε⁴ + r⁴ (the usual Eguchi-Hanson radius)
    for eps in [0.5, 1.0, 2.0] {
        for x in common::shell_points(24, 20, 0.3 * eps, 4.0 * eps) {
            let r = common::norm(&x);
            let c = curvature_at(&eh(eps), &x).unwrap();
            let expect = 384.0 * eps.powi(8) / (eps.powi(4) + r.powi(4)).powi(3);
            assert!((c.rm_norm_sq() - expect).abs() <= 1e-10 * expect, "{} vs {expect}", c.rm_norm_sq());
        }
    }
}

#[test]
fn curvature_scaling() {
    for x in common::shell_points(25, 20, 0.3, 3.0) {
        let eps: f64 = 0.37;
        let a = curvature_at(&eh(eps), &x).unwrap().rm_norm_sq();
        let b = curvature_at(&eh(1.0), &x.map(|v| v / eps)).unwrap().rm_norm_sq();
        assert!((a - b / eps.powi(4)).abs() <= 1e-11 * a);
    }
}

#[test]
fn lichnerowicz_annihilates_kernel_tensors() {
    for x in common::shell_points(26, 100, 0.3, 5.0) {
        for i in 1..=3 {
            let d = lichnerowicz(&eh(1.0), &o(i, 1.0), &x).unwrap();
            assert!(d.max_abs() <= 1e-8, "Δ_L o{i} = {}", d.max_abs());
        }
        let d = lichnerowicz(&eh(1.0), &eh(1.0), &x).unwrap();
        assert!(d.max_abs() <= 1e-9);
    }
}

#[test]
fn lichnerowicz_flat_coordinate_laplacian() {
    let h = FnField(|x: &Point4| {
        let c = Jet2::coords(x);
        let mut s = Sym2Jet::ZERO;
        *s.get_mut(1, 1) = c[0] * c[0];
        Ok(s)
    });
    let d = lichnerowicz(&Euclidean, &h, &[0.4, -0.1, 0.2, 0.3]).unwrap();
    let mut e = Sym2::ZERO;
    e.set(1, 1, 2.0);
    assert_eq!(d, e);
}

#[test]
fn lichnerowicz_of_metric_vanishes_generally() {
    for x in common::shell_points(27, 20, 0.1, 1.0) {
        let d = lichnerowicz(&bumpy(), &bumpy(), &x).unwrap();
        assert!(d.max_abs() <= 1e-12);
    }
}

#[test]
fn divergence_and_trace() {
    for x in common::shell_points(28, 100, 0.3, 5.0) {
        for i in 1..=3 {
            let dt = div_trace(&eh(1.0), &o(i, 1.0), &x).unwrap();
            let m = dt.divergence_values().iter().fold(0.0_f64, |a, b| a.max(b.abs()));
            assert!(m <= 1e-9, "div o{i} = {m}");
        }
        let dt = div_trace(&eh(1.0), &eh(1.0), &x).unwrap();
        assert!(dt.divergence_values().iter().all(|v| v.abs() < 1e-12));
        assert!((dt.trace.value - 4.0).abs() < 1e-13);
        let dt = div_trace(&Euclidean, &TensorT::plain(), &x).unwrap();
        assert!(dt.divergence_values().iter().all(|v| v.abs() < 1e-12));
        assert!(dt.trace.value.abs() < 1e-13);
        let dt = div_trace(&Euclidean, &TensorT::hat(), &x).unwrap();
        assert!(dt.divergence_values().iter().all(|v| v.abs() < 1e-12));
    }
}

#[test]
fn euler_field_doubles_flat_metric() {
    let x = [0.2, -0.4, 1.0, 0.3];
    let l = lie_derivative_sym2(&Sym2Jet::identity(), &vector_jet1(&euler_field(&x)));
    assert_eq!(l, Sym2::identity().scale(2.0));
}

#[test]
fn contracted_bianchi_identity() {
    // div Ric − ½∇R = 0, derivatives of Ric by fourth-order central differences
    let g = bumpy();
    let h = 1e-3;
    for x in common::shell_points(29, 10, 0.1, 0.8) {
        let ric = |y: &Point4| curvature_at(&g, y).unwrap();
        let c0 = ric(&x);
        let mut d_ric = [Sym2::ZERO; 4];
        let mut d_s = [0.0; 4];
        for k in 0..4 {
            let at = |t: f64| {
                let mut y = x;
                y[k] += t;
                ric(&y)
            };
            let (p1, m1, p2, m2) = (at(h), at(-h), at(2.0 * h), at(-2.0 * h));
            d_ric[k] = ((p1.ricci - m1.ricci).scale(8.0) - (p2.ricci - m2.ricci)).scale(1.0 / (12.0 * h));
            d_s[k] = (8.0 * (p1.scalar - m1.scalar) - (p2.scalar - m2.scalar)) / (12.0 * h);
        }
        for j in 0..4 {
            // g^{ik}(∂_i Ric_kj − Γ^p_ik Ric_pj − Γ^p_ij Ric_kp) − ½∂_j R
            let mut acc = 0.0;
            for i in 0..4 {
                for k in 0..4 {
                    let mut v = d_ric[i].get(k, j);
                    for p in 0..4 {
                        v -= c0.christoffel[p][i][k] * c0.ricci.get(p, j);
                        v -= c0.christoffel[p][i][j] * c0.ricci.get(k, p);
                    }
                    acc += c0.ginv.get(i, k) * v;
                }
            }
            acc -= 0.5 * d_s[j];
            assert!(acc.abs() <= 1e-9, "bianchi defect {acc}");
        }
    }
}

#[test]
fn q_remainder_vanishes_at_zero() {
    let z = ehglue::field::ZeroField;
    let q = q_remainder(&eh(1.0), &z, &[0.5, 0.3, -0.2, 0.6]).unwrap();
    assert_eq!(q, Sym2::ZERO);
}

#[test]
fn q_remainder_is_quadratic() {
    let x = [0.5, 0.3, -0.2, 0.6];
    let ratios: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&s| q_remainder(&eh(1.0), &ScaledField(o(1, 1.0), s), &x).unwrap().norm() / (s * s))
        .collect();
    for r in &ratios[1..] {
        assert!((r / ratios[0] - 1.0).abs() < 0.05, "{ratios:?}");
    }
    // a generic perturbation on a generic background
    let k = ScaledField(SumField(TensorT::plain(), o(2, 1.0)), 1.0);
    let ratios: Vec<f64> = [1e-2, 1e-3]
        .iter()
        .map(|&s| q_remainder(&bumpy(), &ScaledField(&k, s), &x).unwrap().norm() / (s * s))
        .collect();
    assert!((ratios[1] / ratios[0] - 1.0).abs() < 0.05, "{ratios:?}");
}

#[test]
fn linearised_ricci_matches_finite_difference() {
    // ‖2Ric_{g+sk} − 2Ric_g + s(Δ_L k − 𝓛_Y g)‖ = O(s²), the linear part of Q_g
    let x = [0.3, -0.2, 0.25, 0.1];
    let g = bumpy();
    let k = SumField(TensorT::plain(), o(2, 1.0));
    let defect = |s: f64| {
        let gj = g.eval(&x).unwrap();
        let kj = k.eval(&x).unwrap().scale(s);
        let (_, c1) = curvature_from_jet(&(gj + kj)).unwrap();
        let (_, c0) = curvature_from_jet(&gj).unwrap();
        let dl = ehglue::curvature::lichnerowicz_jet(&gj, &kj).unwrap();
        let dt = ehglue::curvature::div_trace_jet(&gj, &kj).unwrap();
        let lie = lie_derivative_sym2(&gj, &dt.y);
        (c1.ricci.scale(2.0) - c0.ricci.scale(2.0) + dl - lie).norm()
    };
    let (a, b) = (defect(1e-3), defect(5e-4));
    assert!((a / b - 4.0).abs() < 0.4, "ratio {}", a / b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eh_ricci_flat_everywhere(eps in 0.3f64..3.0, x in prop::array::uniform4(-2.0f64..2.0)) {
        let r = common::norm(&x);
        prop_assume!(r > 0.3 * eps);
        let c = curvature_at(&eh(eps), &x).unwrap();
        let scale = c.rm_norm_sq().sqrt().max(1.0);
        prop_assert!(c.ricci.max_abs() <= 1e-9 * scale);
    }
}

#[test]
fn rm_extrapolation_recovers_the_origin_value() {
    let e = rm_extrapolate(&eh(1.0), &[1.0, 0.0, 0.0, 0.0], [0.2, 0.1, 0.05], 4).unwrap();
    assert!((e.limit_sq - 384.0).abs() < 1e-9 * 384.0, "{e:?}");
    assert!((e.m() - 384f64.sqrt()).abs() < 1e-9);
    // off-axis the Cartesian components mix eigenvalues ~r^-2 and ~r^2, costing digits near the bolt
    let e = rm_extrapolate(&eh(1.0), &[1.0, 0.5, -0.3, 0.2], [0.2, 0.1, 0.05], 4).unwrap();
    assert!((e.limit_sq - 384.0).abs() < 1e-2 * 384.0, "{e:?}");
    assert!(rm_extrapolate(&eh(1.0), &[1.0, 0.0, 0.0, 0.0], [0.2, 0.1, 0.04], 4).is_err());
}
